//! Self-checks: closed form against the statevector simulator, analytic
//! gradient against central differences.

use std::f64::consts::PI;

use qaoa_lab::amplitude::{overlap, overlap_gradient};
use qaoa_lab::statevector::{oracle_overlap, TargetBitstring};
use qaoa_lab::{LayerParameters, ProblemSize};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::CliError;
use crate::records::Real;

pub const MAX_VERIFY_QUBITS: u32 = 16;
pub const ORACLE_TOL: f64 = 1e-10;
pub const GRADIENT_TOL: f64 = 1e-6;
pub const GRADIENT_STEP: f64 = 1e-6;
pub const GRADIENT_CASES: usize = 100;
pub const GRADIENT_MAX_DEPTH: usize = 5;

#[derive(Debug, Clone, Serialize)]
pub struct OracleSummary {
    pub cases: usize,
    pub max_abs_deviation: Real,
    pub worst_n: u32,
    pub worst_p: usize,
    pub tolerance: Real,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradientSummary {
    pub cases: usize,
    pub step: Real,
    pub max_relative_error: Real,
    pub tolerance: Real,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub oracle: OracleSummary,
    pub gradient: GradientSummary,
    pub passed: bool,
}

fn cell_seed(seed: u64, n: u32, p: usize) -> u64 {
    seed ^ ((n as u64) << 32) ^ ((p as u64) << 48)
}

/// Worst deviation over `samples` random parameter sets and random targets
/// at one `(n, p)`.
fn oracle_cell(n: u32, p: usize, samples: usize, seed: u64) -> Result<f64, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cell_seed(seed, n, p));
    let size = ProblemSize::new(n as u64, p)?;
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let gammas = (0..p).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
        let betas = (0..p).map(|_| rng.gen_range(0.0..PI)).collect();
        let params = LayerParameters::new(gammas, betas)?;
        let t = TargetBitstring::from_index(n, rng.gen_range(0..1u64 << n));
        let closed = overlap(size, &params)?.scaled;
        let sim = oracle_overlap(n, p, &t, &params)?.scaled;
        worst = worst.max((closed - sim).abs());
    }
    Ok(worst)
}

/// Relative error `|g - g_fd| / max(|g|, 1)` at an interior point near the
/// optimum region, where `beta ~ 1/n`.
fn gradient_case(rng: &mut ChaCha8Rng, case: usize) -> Result<f64, CliError> {
    let p = 1 + case % GRADIENT_MAX_DEPTH;
    let n = rng.gen_range(4..64u64);
    let size = ProblemSize::new(n, p)?;
    let gammas: Vec<f64> = (0..p).map(|_| rng.gen_range(0.5..2.0 * PI - 0.5)).collect();
    let betas: Vec<f64> = (0..p)
        .map(|_| rng.gen_range(0.1..2.0) * PI / n as f64)
        .collect();
    let params = LayerParameters::new(gammas, betas)?;
    let grad = overlap_gradient(size, &params)?;
    let flat = params.to_flat();
    let mut err2 = 0.0;
    for (k, g) in grad.iter().enumerate() {
        let mut plus = flat.clone();
        let mut minus = flat.clone();
        plus[k] += GRADIENT_STEP;
        minus[k] -= GRADIENT_STEP;
        let fp = overlap(size, &LayerParameters::from_flat(&plus)?)?.scaled;
        let fm = overlap(size, &LayerParameters::from_flat(&minus)?)?.scaled;
        let fd = (fp - fm) / (2.0 * GRADIENT_STEP);
        err2 += (g - fd) * (g - fd);
    }
    let scale = grad.iter().map(|g| g * g).sum::<f64>().sqrt().max(1.0);
    Ok(err2.sqrt() / scale)
}

pub fn run(n_max: u32, p_max: usize, samples: usize, seed: u64) -> Result<VerifyReport, CliError> {
    if n_max == 0 || n_max > MAX_VERIFY_QUBITS {
        return Err(CliError::Usage(format!(
            "--n-max must lie in 1..={MAX_VERIFY_QUBITS}"
        )));
    }
    let cells: Vec<(u32, usize)> = (1..=n_max)
        .flat_map(|n| (1..=p_max).map(move |p| (n, p)))
        .collect();
    let deviations = cells
        .par_iter()
        .map(|&(n, p)| oracle_cell(n, p, samples, seed))
        .collect::<Result<Vec<f64>, CliError>>()?;
    let (worst_idx, worst) =
        deviations
            .iter()
            .copied()
            .enumerate()
            .fold(
                (0, 0.0f64),
                |best, (i, d)| if d > best.1 { (i, d) } else { best },
            );

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut grad_worst: f64 = 0.0;
    for case in 0..GRADIENT_CASES {
        grad_worst = grad_worst.max(gradient_case(&mut rng, case)?);
    }

    Ok(VerifyReport {
        oracle: OracleSummary {
            cases: cells.len() * samples,
            max_abs_deviation: Real(worst),
            worst_n: cells[worst_idx].0,
            worst_p: cells[worst_idx].1,
            tolerance: Real(ORACLE_TOL),
        },
        gradient: GradientSummary {
            cases: GRADIENT_CASES,
            step: Real(GRADIENT_STEP),
            max_relative_error: Real(grad_worst),
            tolerance: Real(GRADIENT_TOL),
        },
        passed: worst < ORACLE_TOL && grad_worst < GRADIENT_TOL,
    })
}
