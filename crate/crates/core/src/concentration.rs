//! Parameter concentration across qubit counts.
//!
//! Optimal parameters concentrate when the squared distance between optima
//! at `n` and `n + 1` decays like `n^-l` for some `l > 0`. This module runs
//! the warm-started sweeps that produce per-`n` optima, measures consecutive
//! distances, fits the decay exponent on a log-log scale and fits the
//! per-layer curves `beta = pi/(a1 n + a2)`, `gamma = b1 pi - b2 beta`.

use std::f64::consts::PI;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::optimizer::{
    multistart_maximize, warm_start_maximize, OptimizationResult, OptimizerConfig,
};
use crate::params::{symmetry_image, LayerParameters, ProblemSize};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub n: u64,
    pub p: usize,
    pub result: OptimizationResult,
    /// Seconds spent on this `n`.
    pub wall_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcentrationPoint {
    pub n: u64,
    pub delta_sq: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFit {
    /// Slope of `log delta_sq` against `log n`, i.e. `-l`.
    pub exponent: f64,
    /// `delta_sq ~ prefactor * n^exponent`.
    pub prefactor: f64,
    pub r_squared: f64,
    pub n_range: (u64, u64),
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConstants {
    /// 1-based layer index.
    pub layer: usize,
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
    pub beta_residual_norm: f64,
    pub gamma_residual_norm: f64,
    pub n_range: (u64, u64),
    pub points: usize,
}

impl FitConstants {
    pub fn beta_at(&self, n: f64) -> f64 {
        PI / (self.a1 * n + self.a2)
    }

    pub fn gamma_at(&self, n: f64) -> f64 {
        self.b1 * PI - self.b2 * self.beta_at(n)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferReport {
    pub w: u64,
    pub n: u64,
    pub p: usize,
    /// Iterations summed over all restarts of a cold multistart at `n`.
    pub cold_iters: usize,
    /// Iterations of the single local search started from the `w` optimum.
    pub warm_iters: usize,
    pub overlap_gap: f64,
    pub source: OptimizationResult,
    pub cold: OptimizationResult,
    pub warm: OptimizationResult,
}

/// Overlap slack within which a warm-chained optimum is kept over a fresh
/// multistart result.
const KEEP_WARM_TOL: f64 = 1e-12;

/// One optimum per `n` in `n_min..=n_max`. Each `n` is warm-started from the
/// previous optimum and also solved by a fresh multistart; the better of the
/// two is kept, preferring the warm chain on ties.
pub fn sweep(
    n_min: u64,
    n_max: u64,
    p: usize,
    config: &OptimizerConfig,
) -> Result<Vec<SweepRecord>> {
    if n_min < 2 {
        return Err(Error::InvalidSize("sweep needs n_min >= 2".into()));
    }
    if n_max < n_min {
        return Err(Error::InvalidSize(format!(
            "empty sweep range {n_min}..={n_max}"
        )));
    }
    config.validate()?;
    let mut records: Vec<SweepRecord> = Vec::with_capacity((n_max - n_min + 1) as usize);
    for n in n_min..=n_max {
        let start = Instant::now();
        let size = ProblemSize::new(n, p)?;
        let cold = multistart_maximize(size, config);
        let warm = records
            .last()
            .map(|prev| warm_start_maximize(size, &prev.result.params, config));

        let result = match (warm, cold) {
            (Some(Ok(w)), Ok(c)) => {
                let total = w.iterations + c.total_iterations;
                let mut chosen = if w.overlap.scaled >= c.overlap.scaled - KEEP_WARM_TOL {
                    w
                } else {
                    c
                };
                chosen.total_iterations = total;
                chosen.restarts_used = config.restarts + 1;
                chosen
            }
            (Some(Ok(w)), Err(_)) => w,
            (_, Ok(c)) => c,
            (_, Err(e)) => {
                return Err(Error::Sweep {
                    n,
                    source: Box::new(e),
                })
            }
        };
        records.push(SweepRecord {
            n,
            p,
            result,
            wall_time: start.elapsed().as_secs_f64(),
        });
    }
    Ok(records)
}

/// Squared distance between the optima at `n` and `n + 1`, minimized over
/// the identity and the symmetry image of the second.
pub fn concentration_distance(
    rec_a: &SweepRecord,
    rec_b: &SweepRecord,
) -> Result<ConcentrationPoint> {
    if rec_a.p != rec_b.p {
        return Err(Error::ParameterMismatch {
            expected: rec_a.p,
            got: rec_b.p,
        });
    }
    if rec_b.n != rec_a.n + 1 {
        return Err(Error::InvalidSize(format!(
            "distance needs consecutive qubit counts, got {} and {}",
            rec_a.n, rec_b.n
        )));
    }
    Ok(ConcentrationPoint {
        n: rec_a.n,
        delta_sq: min_branch_distance(&rec_a.result.params, &rec_b.result.params),
    })
}

pub fn min_branch_distance(a: &LayerParameters, b: &LayerParameters) -> f64 {
    a.distance_sq(b).min(a.distance_sq(&symmetry_image(b)))
}

/// Distances between every consecutive pair of records.
pub fn concentration_series(records: &[SweepRecord]) -> Result<Vec<ConcentrationPoint>> {
    records
        .windows(2)
        .map(|w| concentration_distance(&w[0], &w[1]))
        .collect()
}

/// Least-squares line `log delta_sq = exponent * log n + log prefactor`.
pub fn fit_scaling(points: &[ConcentrationPoint]) -> Result<ScalingFit> {
    if points.len() < 5 {
        return Err(Error::Degenerate(format!(
            "scaling fit needs at least 5 points, got {}",
            points.len()
        )));
    }
    if let Some(bad) = points
        .iter()
        .find(|pt| !(pt.delta_sq.is_finite() && pt.delta_sq > 0.0))
    {
        return Err(Error::Degenerate(format!(
            "non-positive or non-finite distance {} at n = {}",
            bad.delta_sq, bad.n
        )));
    }
    let xs: Vec<f64> = points.iter().map(|pt| (pt.n as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|pt| pt.delta_sq.ln()).collect();
    let (slope, intercept, r_squared) = linear_regression(&xs, &ys)?;
    let n_min = points.iter().map(|pt| pt.n).min().unwrap_or(0);
    let n_max = points.iter().map(|pt| pt.n).max().unwrap_or(0);
    Ok(ScalingFit {
        exponent: slope,
        prefactor: intercept.exp(),
        r_squared,
        n_range: (n_min, n_max),
        points: points.len(),
    })
}

/// Ordinary least squares `y = slope x + intercept`; returns `r^2` clamped
/// into `[0, 1]`.
fn linear_regression(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::Degenerate("all abscissae are equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum();
    let r_squared = if syy > 0.0 {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok((slope, intercept, r_squared))
}

/// Nonlinear least squares of `beta = pi/(a1 n + a2)` by Levenberg-Marquardt,
/// started from the linear fit of `pi/beta` against `n`.
fn fit_reciprocal(ns: &[f64], betas: &[f64]) -> Result<(f64, f64, f64)> {
    let inv: Vec<f64> = betas.iter().map(|b| PI / b).collect();
    let (mut a1, mut a2, _) = linear_regression(ns, &inv)?;

    let residuals = |a1: f64, a2: f64| -> Vec<f64> {
        ns.iter()
            .zip(betas)
            .map(|(n, b)| PI / (a1 * n + a2) - b)
            .collect()
    };
    let cost = |r: &[f64]| r.iter().map(|x| x * x).sum::<f64>();

    let mut r = residuals(a1, a2);
    let mut c = cost(&r);
    let mut lambda = 1e-3;
    let mut converged = false;
    for _ in 0..500 {
        // J^T J and J^T r for the two parameters
        let (mut j11, mut j12, mut j22, mut g1, mut g2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for ((n, _), ri) in ns.iter().zip(betas).zip(&r) {
            let den = a1 * n + a2;
            let d2 = -PI / (den * den);
            let d1 = d2 * n;
            j11 += d1 * d1;
            j12 += d1 * d2;
            j22 += d2 * d2;
            g1 += d1 * ri;
            g2 += d2 * ri;
        }
        if (g1.abs() + g2.abs()) < 1e-300 {
            converged = true;
            break;
        }
        let mut improved = false;
        for _ in 0..60 {
            let m11 = j11 * (1.0 + lambda);
            let m22 = j22 * (1.0 + lambda);
            let det = m11 * m22 - j12 * j12;
            if det == 0.0 || !det.is_finite() {
                lambda *= 10.0;
                continue;
            }
            let da1 = -(m22 * g1 - j12 * g2) / det;
            let da2 = -(m11 * g2 - j12 * g1) / det;
            let (t1, t2) = (a1 + da1, a2 + da2);
            let rt = residuals(t1, t2);
            let ct = cost(&rt);
            if ct.is_finite() && ct <= c {
                let small = da1.abs() <= 1e-15 * a1.abs().max(1.0)
                    && da2.abs() <= 1e-15 * a2.abs().max(1.0);
                a1 = t1;
                a2 = t2;
                r = rt;
                let rel_drop = (c - ct) / c.max(f64::MIN_POSITIVE);
                c = ct;
                lambda = (lambda * 0.1).max(1e-12);
                improved = true;
                if small || rel_drop < 1e-15 {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            // no downhill step at any damping: already at the minimum
            converged = true;
        }
        if converged {
            break;
        }
    }
    if !converged || !(a1.is_finite() && a2.is_finite()) {
        return Err(Error::FitNonConvergence(format!(
            "reciprocal fit stopped at a1 = {a1}, a2 = {a2}"
        )));
    }
    Ok((a1, a2, c.sqrt()))
}

/// Fits layer `layer` (1-based) of the records with `n` in `n_range`.
pub fn fit_layer_curves(
    records: &[SweepRecord],
    layer: usize,
    n_range: (u64, u64),
) -> Result<FitConstants> {
    let selected: Vec<&SweepRecord> = records
        .iter()
        .filter(|r| r.n >= n_range.0 && r.n <= n_range.1)
        .collect();
    if selected.len() < 6 {
        return Err(Error::Degenerate(format!(
            "layer fit needs at least 6 records in {}..={}, got {}",
            n_range.0,
            n_range.1,
            selected.len()
        )));
    }
    let p = selected[0].p;
    if layer == 0 || layer > p || selected.iter().any(|r| r.p != p) {
        return Err(Error::Degenerate(format!(
            "layer {layer} is not available in depth-{p} records"
        )));
    }
    let ns: Vec<f64> = selected.iter().map(|r| r.n as f64).collect();
    let betas: Vec<f64> = selected
        .iter()
        .map(|r| r.result.params.betas()[layer - 1])
        .collect();
    let gammas: Vec<f64> = selected
        .iter()
        .map(|r| r.result.params.gammas()[layer - 1])
        .collect();
    if betas.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
        return Err(Error::Degenerate(
            "layer fit needs positive mixer angles".into(),
        ));
    }

    let (a1, a2, beta_residual_norm) = fit_reciprocal(&ns, &betas)?;

    // gamma = b1 pi - b2 beta, i.e. a line in beta with slope -b2
    let (slope, intercept, _) = linear_regression(&betas, &gammas)?;
    let b1 = intercept / PI;
    let b2 = -slope;
    let gamma_residual_norm = betas
        .iter()
        .zip(&gammas)
        .map(|(b, g)| {
            let r = g - (b1 * PI - b2 * b);
            r * r
        })
        .sum::<f64>()
        .sqrt();

    Ok(FitConstants {
        layer,
        a1,
        a2,
        b1,
        b2,
        beta_residual_norm,
        gamma_residual_norm,
        n_range: (
            selected.iter().map(|r| r.n).min().unwrap_or(0),
            selected.iter().map(|r| r.n).max().unwrap_or(0),
        ),
        points: selected.len(),
    })
}

/// Trains at `w` qubits, then compares a warm start at `n` from that optimum
/// with a cold multistart at `n`.
pub fn transfer_experiment(
    w: u64,
    n: u64,
    p: usize,
    config: &OptimizerConfig,
) -> Result<TransferReport> {
    if w < 2 || w >= n {
        return Err(Error::InvalidSize(format!(
            "transfer needs 2 <= w < n, got w = {w}, n = {n}"
        )));
    }
    let source = multistart_maximize(ProblemSize::new(w, p)?, config)?;
    let target = ProblemSize::new(n, p)?;
    let cold = multistart_maximize(target, config)?;
    let warm = warm_start_maximize(target, &source.params, config)?;
    Ok(TransferReport {
        w,
        n,
        p,
        cold_iters: cold.total_iterations,
        warm_iters: warm.iterations,
        overlap_gap: (warm.overlap.scaled - cold.overlap.scaled).abs(),
        source,
        cold,
        warm,
    })
}
