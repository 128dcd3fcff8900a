//! Exact and asymptotic optimal parameters.
//!
//! At depth one the two stationarity conditions merge into the single root
//! equation `cos^n(b) sin(2b) - sin((n+2) b) = 0` with `gamma = pi - 2 beta`.
//! For larger `n` the optimum approaches `beta = pi/n - 4 pi/n^2`, and
//! `beta = pi/(n+4)` is a good approximation already at small `n`. Deeper
//! circuits are handled by one Newton correction of the overlap's quadratic
//! model around the large-`n` pattern.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::amplitude::{hessian_flat, overlap_grad_flat, pow_u64, scaled_overlap_flat};
use crate::error::{Error, Result};
use crate::params::{LayerParameters, ProblemSize};

/// Depth-one optimum from the root equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct P1Solution {
    pub beta: f64,
    /// Always `pi - 2 beta`.
    pub gamma: f64,
    /// Root-equation value at `beta`.
    pub residual: f64,
}

impl P1Solution {
    pub fn params(&self) -> LayerParameters {
        LayerParameters::new(vec![self.gamma], vec![self.beta]).expect("depth one")
    }
}

/// `constant + leading / n + correction / n^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticSeries {
    pub constant: f64,
    pub leading: f64,
    pub correction: f64,
}

impl AsymptoticSeries {
    pub fn eval(&self, n: u64) -> f64 {
        let nf = n as f64;
        self.constant + self.leading / nf + self.correction / (nf * nf)
    }
}

pub const P1_BETA_SERIES: AsymptoticSeries = AsymptoticSeries {
    constant: 0.0,
    leading: PI,
    correction: -4.0 * PI,
};

pub const P1_GAMMA_SERIES: AsymptoticSeries = AsymptoticSeries {
    constant: PI,
    leading: -2.0 * PI,
    correction: 8.0 * PI,
};

/// Pole-free forms of the two depth-one stationarity conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationarityResiduals {
    pub r_gamma: f64,
    pub r_beta: f64,
}

impl StationarityResiduals {
    pub fn max_abs(&self) -> f64 {
        self.r_gamma.abs().max(self.r_beta.abs())
    }
}

/// `cos^n(b) sin(2b) - sin((n+2) b)`.
pub fn p1_root_function(n: u64, beta: f64) -> f64 {
    pow_u64(beta.cos(), n) * (2.0 * beta).sin() - ((n as f64 + 2.0) * beta).sin()
}

fn p1_root_derivative(n: u64, beta: f64) -> f64 {
    let nf = n as f64;
    let (s, c) = beta.sin_cos();
    let cn = pow_u64(c, n);
    let cn1 = pow_u64(c, n - 1);
    -nf * cn1 * s * (2.0 * beta).sin() + 2.0 * cn * (2.0 * beta).cos()
        - (nf + 2.0) * ((nf + 2.0) * beta).cos()
}

const ROOT_TOL: f64 = 1e-12;
const BISECT_REL_WIDTH: f64 = 1e-6;

/// Depth-one optimal `beta`: the smallest positive root of the root
/// equation, which is the one nearest `pi/n` once `n >= 5`, and the global
/// maximizer of the overlap for every `n >= 2`.
///
/// The scan walks up from `pi/(50n)` in steps of `pi/(50n)`. The bracket
/// is then narrowed by bisection and polished by safeguarded Newton steps.
pub fn p1_root(n: u64) -> Result<P1Solution> {
    if n < 2 {
        return Err(Error::InvalidSize("p1_root needs n >= 2".into()));
    }
    let f = |b: f64| p1_root_function(n, b);
    let step = PI / (50.0 * n as f64);
    let upper = PI / 2.0;

    let mut lo = step;
    let mut f_lo = f(lo);
    let mut scanned = 1usize;
    let (mut a, mut b) = loop {
        let hi = (lo + step).min(upper);
        let f_hi = f(hi);
        scanned += 1;
        if f_hi == 0.0 {
            break (hi, hi);
        }
        if f_lo.signum() != f_hi.signum() {
            break (lo, hi);
        }
        if hi >= upper {
            return Err(Error::RootNotFound { n, scanned, upper });
        }
        lo = hi;
        f_lo = f_hi;
    };

    let mut fa = f(a);
    while b - a > BISECT_REL_WIDTH * b {
        let mid = 0.5 * (a + b);
        let fm = f(mid);
        if fm == 0.0 {
            a = mid;
            b = mid;
            break;
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }

    let mut beta = 0.5 * (a + b);
    for _ in 0..100 {
        let fb = f(beta);
        if fb.abs() < ROOT_TOL * 1e-2 {
            break;
        }
        let next = beta - fb / p1_root_derivative(n, beta);
        let next = if next > a && next < b {
            next
        } else {
            0.5 * (a + b)
        };
        if fb.signum() == fa.signum() {
            a = beta;
        } else {
            b = beta;
        }
        if (next - beta).abs() <= 2.0 * f64::EPSILON * beta {
            beta = next;
            break;
        }
        beta = next;
    }
    // settle on the best-residual neighbour among the last few floats
    let mut best = beta;
    let mut best_res = f(beta).abs();
    let mut probe = beta;
    for _ in 0..4 {
        probe = probe.next_up();
        let r = f(probe).abs();
        if r < best_res {
            best = probe;
            best_res = r;
        }
    }
    probe = beta;
    for _ in 0..4 {
        probe = probe.next_down();
        let r = f(probe).abs();
        if r < best_res {
            best = probe;
            best_res = r;
        }
    }
    if best_res >= 1e-10 {
        return Err(Error::RootNotFound {
            n,
            scanned,
            upper: b,
        });
    }
    Ok(P1Solution {
        beta: best,
        gamma: PI - 2.0 * best,
        residual: f(best),
    })
}

/// `beta = pi/n - 4 pi/n^2`, `gamma = pi - 2 pi/n + 8 pi/n^2`.
pub fn p1_asymptotic(n: u64) -> Result<LayerParameters> {
    if n < 2 {
        return Err(Error::InvalidSize("p1_asymptotic needs n >= 2".into()));
    }
    LayerParameters::new(vec![P1_GAMMA_SERIES.eval(n)], vec![P1_BETA_SERIES.eval(n)])
}

/// `beta = pi/(n+4)`, `gamma = pi (n+2)/(n+4)`.
pub fn p1_closed_approx(n: u64) -> Result<LayerParameters> {
    if n < 1 {
        return Err(Error::InvalidSize("p1_closed_approx needs n >= 1".into()));
    }
    let nf = n as f64;
    LayerParameters::new(vec![PI * (nf + 2.0) / (nf + 4.0)], vec![PI / (nf + 4.0)])
}

/// Large-`n` depth-two optimum: the last layer follows the depth-one closed
/// form and the first layer sits at `beta_1 = pi/n`, `gamma_1 = pi`.
pub fn p2_asymptotic(n: u64) -> Result<LayerParameters> {
    if n < 2 {
        return Err(Error::InvalidSize("p2_asymptotic needs n >= 2".into()));
    }
    let nf = n as f64;
    LayerParameters::new(
        vec![PI, PI * (nf + 2.0) / (nf + 4.0)],
        vec![PI / nf, PI / (nf + 4.0)],
    )
}

const CORRECTION_HESSIAN_STEP: f64 = 1e-5;

/// One Newton step on the quadratic model of the scaled overlap at `seed`:
/// `seed - H^{-1} g`. Refuses when `H` is not negative definite.
pub fn quadratic_correction(size: ProblemSize, seed: &LayerParameters) -> Result<LayerParameters> {
    seed.check_depth(size.p())?;
    if !seed.is_finite() {
        return Err(Error::NonFinite("seed parameters"));
    }
    let n = size.n();
    let x = seed.to_flat();
    let dim = x.len();
    let mut g = vec![0.0; dim];
    overlap_grad_flat(n, &x, &mut g);
    let h = hessian_flat(n, &x, CORRECTION_HESSIAN_STEP);
    let neg_h = DMatrix::from_fn(dim, dim, |r, c| -h[r][c]);
    let chol = neg_h.cholesky().ok_or(Error::SaddleRejected)?;
    let step = chol.solve(&DVector::from_vec(g));
    let corrected: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
    LayerParameters::from_flat(&corrected)
}

/// Cross-multiplied stationarity conditions at depth one:
///
/// ```text
/// r_gamma = sin(g) (cos(n b) - cos^n b) - cos(g) sin(n b)
/// r_beta  = sin(g/2) (2 cos^n b sin b - sin((n+1) b)) - cos(g/2) cos((n+1) b)
/// ```
pub fn stationarity_residuals(n: u64, params: &LayerParameters) -> Result<StationarityResiduals> {
    params.check_depth(1)?;
    if n == 0 {
        return Err(Error::InvalidSize("qubit count must be at least 1".into()));
    }
    let gamma = params.gammas()[0];
    let beta = params.betas()[0];
    let nf = n as f64;
    let cn = pow_u64(beta.cos(), n);
    let r_gamma = gamma.sin() * ((nf * beta).cos() - cn) - gamma.cos() * (nf * beta).sin();
    let half = 0.5 * gamma;
    let r_beta = half.sin() * (2.0 * cn * beta.sin() - ((nf + 1.0) * beta).sin())
        - half.cos() * ((nf + 1.0) * beta).cos();
    Ok(StationarityResiduals { r_gamma, r_beta })
}

/// Scaled overlap at the depth-one root solution.
pub fn p1_optimal_scaled_overlap(n: u64) -> Result<f64> {
    let sol = p1_root(n)?;
    Ok(scaled_overlap_flat(n, &[sol.gamma, sol.beta]))
}
