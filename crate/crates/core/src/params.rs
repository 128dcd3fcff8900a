//! Problem dimensions and ansatz angles.
//!
//! Angles live in unconstrained space while optimizing. The canonical
//! representative of a parameter set has every `gamma` in `[0, 2pi)`, every
//! `beta` in `[0, pi)` and the first mixer angle in `[0, pi/2]`; the other
//! half of the domain is reached through [`symmetry_image`].

use std::f64::consts::{PI, TAU};
use std::fmt;

use crate::error::{Error, Result};

/// Qubit count `n` and circuit depth `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ProblemSize {
    n: u64,
    p: usize,
}

impl ProblemSize {
    pub fn new(n: u64, p: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSize("qubit count must be at least 1".into()));
        }
        if p == 0 {
            return Err(Error::InvalidSize("depth must be at least 1".into()));
        }
        Ok(Self { n, p })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Number of tunable angles, `2p`.
    pub fn dim(&self) -> usize {
        2 * self.p
    }
}

/// Which of the two symmetric optimum branches a point was found on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Canonical,
    Mirrored,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::Canonical => "canonical",
            Branch::Mirrored => "mirrored",
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Branch {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "canonical" => Ok(Branch::Canonical),
            "mirrored" => Ok(Branch::Mirrored),
            other => Err(format!("unknown branch label `{other}`")),
        }
    }
}

/// The `2p` angles of a depth-`p` ansatz: phase angles `gammas` and mixer
/// angles `betas`, both ordered from the first applied layer to the last.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParameters {
    gammas: Vec<f64>,
    betas: Vec<f64>,
}

impl LayerParameters {
    pub fn new(gammas: Vec<f64>, betas: Vec<f64>) -> Result<Self> {
        if gammas.len() != betas.len() {
            return Err(Error::ParameterMismatch {
                expected: gammas.len(),
                got: betas.len(),
            });
        }
        if gammas.is_empty() {
            return Err(Error::InvalidSize(
                "parameter set must have depth >= 1".into(),
            ));
        }
        Ok(Self { gammas, betas })
    }

    /// Builds from the flat layout `[gamma_1..gamma_p, beta_1..beta_p]`.
    pub fn from_flat(flat: &[f64]) -> Result<Self> {
        if flat.is_empty() || !flat.len().is_multiple_of(2) {
            return Err(Error::InvalidSize(format!(
                "flat parameter vector must have even, nonzero length (got {})",
                flat.len()
            )));
        }
        let p = flat.len() / 2;
        Self::new(flat[..p].to_vec(), flat[p..].to_vec())
    }

    /// Same angle `gamma` and `beta` in every layer.
    pub fn uniform(p: usize, gamma: f64, beta: f64) -> Result<Self> {
        Self::new(vec![gamma; p], vec![beta; p])
    }

    pub fn depth(&self) -> usize {
        self.gammas.len()
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(2 * self.depth());
        v.extend_from_slice(&self.gammas);
        v.extend_from_slice(&self.betas);
        v
    }

    pub fn is_finite(&self) -> bool {
        self.gammas.iter().chain(&self.betas).all(|x| x.is_finite())
    }

    /// Appends identity layers (`gamma = beta = 0`) up to depth `p`.
    pub fn padded(&self, p: usize) -> Result<Self> {
        if p < self.depth() {
            return Err(Error::ParameterMismatch {
                expected: p,
                got: self.depth(),
            });
        }
        let mut gammas = self.gammas.clone();
        let mut betas = self.betas.clone();
        gammas.resize(p, 0.0);
        betas.resize(p, 0.0);
        Ok(Self { gammas, betas })
    }

    /// Plain squared Euclidean distance, no wrapping.
    pub fn distance_sq(&self, other: &Self) -> f64 {
        self.gammas
            .iter()
            .zip(&other.gammas)
            .chain(self.betas.iter().zip(&other.betas))
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    pub(crate) fn check_depth(&self, p: usize) -> Result<()> {
        if self.depth() != p {
            return Err(Error::ParameterMismatch {
                expected: p,
                got: self.depth(),
            });
        }
        Ok(())
    }
}

/// Reduces `x` into `[0, period)`.
fn wrap(x: f64, period: f64) -> f64 {
    let r = x.rem_euclid(period);
    // rem_euclid can round up to `period` for tiny negative inputs.
    if r >= period {
        0.0
    } else {
        r
    }
}

fn wrapped(params: &LayerParameters) -> LayerParameters {
    LayerParameters {
        gammas: params.gammas.iter().map(|&g| wrap(g, TAU)).collect(),
        betas: params.betas.iter().map(|&b| wrap(b, PI)).collect(),
    }
}

/// Elementwise `beta -> pi - beta`, `gamma -> 2pi - gamma`, wrapped back into
/// the angle domains. The overlap is invariant under this map at every depth:
/// it conjugates the circuit up to a global sign.
pub fn symmetry_image(params: &LayerParameters) -> LayerParameters {
    LayerParameters {
        gammas: params.gammas.iter().map(|&g| wrap(TAU - g, TAU)).collect(),
        betas: params.betas.iter().map(|&b| wrap(PI - b, PI)).collect(),
    }
}

/// Wraps into the angle domains and reports the branch of the wrapped point.
pub fn canonicalize_with_branch(params: &LayerParameters) -> Result<(LayerParameters, Branch)> {
    if !params.is_finite() {
        return Err(Error::NonFinite("layer parameters"));
    }
    let w = wrapped(params);
    if w.betas[0] > PI / 2.0 {
        Ok((symmetry_image(&w), Branch::Mirrored))
    } else {
        Ok((w, Branch::Canonical))
    }
}

pub fn canonicalize(params: &LayerParameters) -> Result<LayerParameters> {
    canonicalize_with_branch(params).map(|(c, _)| c)
}
