//! Exact QAOA state-preparation overlaps at any qubit count.
//!
//! The overlap of a depth-`p` QAOA state with a computational-basis target
//! has a closed form whose cost is independent of the number of qubits
//! (see [`amplitude`]). On top of that this crate provides
//!
//! - a brute-force statevector simulator used as an oracle ([`statevector`]),
//! - multistart maximization of the overlap ([`optimizer`]),
//! - the exact and asymptotic depth-one and depth-two optima
//!   ([`analytic`]),
//! - sweeps over `n`, concentration distances and scaling fits
//!   ([`concentration`]).
//!
//! ```
//! use qaoa_lab::{analytic::p1_root, amplitude::overlap, params::ProblemSize};
//!
//! let sol = p1_root(10).unwrap();
//! let value = overlap(ProblemSize::new(10, 1).unwrap(), &sol.params()).unwrap();
//! assert!(value.scaled > 5.6);
//! ```

pub mod amplitude;
pub mod analytic;
pub mod concentration;
pub mod error;
pub mod optimizer;
pub mod params;
pub mod statevector;

pub use amplitude::{overlap, overlap_gradient, scaled_amplitude, OverlapValue, ScaledAmplitude};
pub use error::{Error, Result};
pub use optimizer::{OptimizationResult, OptimizerConfig, Seeding};
pub use params::{canonicalize, symmetry_image, Branch, LayerParameters, ProblemSize};
