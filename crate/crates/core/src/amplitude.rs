//! Closed-form overlap of the ansatz with the target basis state.
//!
//! The amplitude is evaluated in scaled units `a = 2^(n/2) <t|psi>` so that it
//! stays O(1) for any qubit count. Mixer layers commute with each other, so a
//! phase layer splits the amplitude into a "pass-through" part, where two
//! adjacent mixer angles merge, and a "kicked" part proportional to
//! `cos^n(beta) (e^{-i gamma} - 1)`. Writing `s(j, m) = beta_j + .. + beta_m`
//! and
//!
//! ```text
//! T[0][m] = exp(-i n s(1, m))
//! T[j][m] = T[j-1][m] + (e^{-i gamma_j} - 1) cos^n(s(j, m)) T[j-1][j-1]
//! ```
//!
//! the scaled amplitude is `T[p][p]`. Only `O(p^2)` entries are distinct, and
//! the cost does not depend on `n`. For `p = 1` this is
//! `e^{-i beta n} + cos^n(beta) (e^{-i gamma} - 1)`.

use num_complex::Complex64;

use crate::error::Result;
use crate::params::{LayerParameters, ProblemSize};

/// `2^(n/2) <t|psi(gamma, beta)>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledAmplitude {
    pub re: f64,
    pub im: f64,
}

impl ScaledAmplitude {
    pub fn norm_sqr(&self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

impl From<Complex64> for ScaledAmplitude {
    fn from(c: Complex64) -> Self {
        Self { re: c.re, im: c.im }
    }
}

/// Overlap `F = |<t|psi>|^2` together with its scaled form `2^n F`.
///
/// `f` underflows to zero around `n ~ 1000`; `scaled` is authoritative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapValue {
    pub scaled: f64,
    pub f: f64,
}

impl OverlapValue {
    pub fn from_scaled(n: u64, scaled: f64) -> Self {
        Self {
            scaled,
            f: scaled * (-(n as f64)).exp2(),
        }
    }

    /// Expectation of the problem Hamiltonian `1 - |t><t|`.
    pub fn objective(&self) -> f64 {
        1.0 - self.f
    }
}

/// `base^n` by repeated squaring; keeps the sign of a negative base.
pub fn pow_u64(base: f64, mut n: u64) -> f64 {
    let mut acc = 1.0;
    let mut b = base;
    while n > 0 {
        if n & 1 == 1 {
            acc *= b;
        }
        b *= b;
        n >>= 1;
    }
    acc
}

fn neg_i_phase(theta: f64) -> Complex64 {
    let (s, c) = theta.sin_cos();
    Complex64::new(c, -s)
}

/// Prefix sums `prefix[k] = beta_1 + .. + beta_k`, `prefix[0] = 0`.
fn prefix_sums(betas: &[f64]) -> Vec<f64> {
    let mut prefix = Vec::with_capacity(betas.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for &b in betas {
        acc += b;
        prefix.push(acc);
    }
    prefix
}

/// `s(j, m)` for `1 <= j <= m`, summed directly so that padding with zero
/// angles leaves every term bit-identical.
fn suffix_sum(betas: &[f64], j: usize, m: usize) -> f64 {
    betas[j - 1..m].iter().sum()
}

/// Scaled amplitude on the flat layout `[gammas.., betas..]`.
pub(crate) fn amplitude_flat(n: u64, flat: &[f64]) -> Complex64 {
    let p = flat.len() / 2;
    let (gammas, betas) = flat.split_at(p);
    let nf = n as f64;
    let prefix = prefix_sums(betas);

    let mut row: Vec<Complex64> = (0..=p).map(|m| neg_i_phase(nf * prefix[m])).collect();
    row[0] = Complex64::new(1.0, 0.0);
    for j in 1..=p {
        let kick = neg_i_phase(gammas[j - 1]) - 1.0;
        let diag = row[j - 1];
        for (m, entry) in row.iter_mut().enumerate().skip(j) {
            let c = pow_u64(suffix_sum(betas, j, m).cos(), n);
            *entry += kick * c * diag;
        }
    }
    row[p]
}

/// Scaled overlap and its gradient on the flat layout. The gradient is
/// written into `grad` in the same `[d/dgamma.., d/dbeta..]` order.
///
/// Forward mode over the `T` table: every entry carries its `2p` partials.
#[allow(clippy::needless_range_loop)]
pub(crate) fn overlap_grad_flat(n: u64, flat: &[f64], grad: &mut [f64]) -> f64 {
    let p = flat.len() / 2;
    let dim = 2 * p;
    let (gammas, betas) = flat.split_at(p);
    let nf = n as f64;
    let prefix = prefix_sums(betas);
    let zero = Complex64::new(0.0, 0.0);
    let i_unit = Complex64::new(0.0, 1.0);

    let mut row: Vec<Complex64> = (0..=p).map(|m| neg_i_phase(nf * prefix[m])).collect();
    row[0] = Complex64::new(1.0, 0.0);
    // d_row[m * dim + k] = d T[j][m] / d theta_k
    let mut d_row = vec![zero; (p + 1) * dim];
    for m in 1..=p {
        let dphase = -i_unit * nf * row[m];
        for i in 1..=m {
            d_row[m * dim + p + i - 1] = dphase;
        }
    }

    for j in 1..=p {
        let e = neg_i_phase(gammas[j - 1]);
        let kick = e - 1.0;
        let dkick = -i_unit * e;
        let diag = row[j - 1];
        let d_diag: Vec<Complex64> = d_row[(j - 1) * dim..j * dim].to_vec();
        for m in j..=p {
            let s = suffix_sum(betas, j, m);
            let (sin_s, cos_s) = s.sin_cos();
            let c = pow_u64(cos_s, n);
            let dc = -nf * pow_u64(cos_s, n - 1) * sin_s;

            let base = m * dim;
            let kc = kick * c;
            for (d, dd) in d_row[base..base + dim].iter_mut().zip(&d_diag) {
                *d += kc * dd;
            }
            d_row[base + j - 1] += dkick * c * diag;
            let kdc = kick * dc * diag;
            for i in j..=m {
                d_row[base + p + i - 1] += kdc;
            }
            row[m] += kc * diag;
        }
    }

    let a = row[p];
    for (k, g) in grad.iter_mut().enumerate().take(dim) {
        *g = 2.0 * (a.conj() * d_row[p * dim + k]).re;
    }
    a.norm_sqr()
}

pub(crate) fn scaled_overlap_flat(n: u64, flat: &[f64]) -> f64 {
    amplitude_flat(n, flat).norm_sqr()
}

pub fn scaled_amplitude(size: ProblemSize, params: &LayerParameters) -> Result<ScaledAmplitude> {
    params.check_depth(size.p())?;
    Ok(amplitude_flat(size.n(), &params.to_flat()).into())
}

pub fn overlap(size: ProblemSize, params: &LayerParameters) -> Result<OverlapValue> {
    let a = scaled_amplitude(size, params)?;
    Ok(OverlapValue::from_scaled(size.n(), a.norm_sqr()))
}

/// Gradient of the scaled overlap `2^n F` with respect to
/// `[gamma_1..gamma_p, beta_1..beta_p]`.
pub fn overlap_gradient(size: ProblemSize, params: &LayerParameters) -> Result<Vec<f64>> {
    params.check_depth(size.p())?;
    let mut grad = vec![0.0; size.dim()];
    overlap_grad_flat(size.n(), &params.to_flat(), &mut grad);
    Ok(grad)
}

#[allow(clippy::needless_range_loop)]
pub(crate) fn hessian_flat(n: u64, flat: &[f64], step: f64) -> Vec<Vec<f64>> {
    let dim = flat.len();
    let mut h = vec![vec![0.0; dim]; dim];
    let mut x = flat.to_vec();
    let mut gp = vec![0.0; dim];
    let mut gm = vec![0.0; dim];
    for k in 0..dim {
        let x0 = x[k];
        x[k] = x0 + step;
        overlap_grad_flat(n, &x, &mut gp);
        x[k] = x0 - step;
        overlap_grad_flat(n, &x, &mut gm);
        x[k] = x0;
        for r in 0..dim {
            h[r][k] = (gp[r] - gm[r]) / (2.0 * step);
        }
    }
    for r in 0..dim {
        for c in r + 1..dim {
            let avg = 0.5 * (h[r][c] + h[c][r]);
            (h[r][c], h[c][r]) = (avg, avg);
        }
    }
    h
}

/// Hessian of the scaled overlap by central differences of the analytic
/// gradient, symmetrized.
pub fn overlap_hessian(
    size: ProblemSize,
    params: &LayerParameters,
    step: f64,
) -> Result<Vec<Vec<f64>>> {
    params.check_depth(size.p())?;
    Ok(hessian_flat(size.n(), &params.to_flat(), step))
}
