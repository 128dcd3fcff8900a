//! Maximization of the scaled overlap.
//!
//! Local searches run BFGS ascent in unconstrained angle space with a
//! backtracking line search. When the line search cannot make progress the
//! search tries one Newton step on a finite-difference Hessian, and if the
//! curvature there is not usable it hands over to a short Nelder-Mead run
//! before resuming. Results are canonicalized on the way out.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::amplitude::{hessian_flat, overlap_grad_flat, scaled_overlap_flat, OverlapValue};
use crate::error::{Error, Result};
use crate::params::{canonicalize_with_branch, Branch, LayerParameters, ProblemSize};

/// How restart points are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Seeding {
    /// All restarts near the large-`n` pattern `beta_k = pi/n`, `gamma_k = pi`.
    AsymptoticSeeded,
    UniformRandom,
    /// First restart at the asymptotic pattern, the rest uniform.
    Hybrid,
}

impl Seeding {
    pub fn as_str(&self) -> &'static str {
        match self {
            Seeding::AsymptoticSeeded => "asymptotic-seeded",
            Seeding::UniformRandom => "uniform-random",
            Seeding::Hybrid => "hybrid",
        }
    }
}

impl std::str::FromStr for Seeding {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "asymptotic-seeded" => Ok(Seeding::AsymptoticSeeded),
            "uniform-random" => Ok(Seeding::UniformRandom),
            "hybrid" => Ok(Seeding::Hybrid),
            other => Err(format!("unknown seeding `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub max_iter: usize,
    /// Tolerance on the Euclidean norm of the scaled-overlap gradient.
    pub grad_tol: f64,
    pub rng_seed: u64,
    pub seeding: Seeding,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 32,
            max_iter: 10_000,
            grad_tol: 1e-10,
            rng_seed: 0,
            seeding: Seeding::Hybrid,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::InvalidSize("restarts must be at least 1".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidSize("max_iter must be at least 1".into()));
        }
        if !(self.grad_tol.is_finite() && self.grad_tol > 0.0) {
            return Err(Error::InvalidSize(
                "grad_tol must be positive and finite".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    /// Canonicalized optimum.
    pub params: LayerParameters,
    pub overlap: OverlapValue,
    pub grad_norm: f64,
    /// Iterations spent by the local search that produced `params`.
    pub iterations: usize,
    pub restarts_used: usize,
    /// Iterations summed over every restart, including failed ones.
    pub total_iterations: usize,
    /// Branch the search actually converged on before canonicalization.
    pub branch: Branch,
}

/// `beta_k = pi/n`, `gamma_k = pi` in every layer.
pub fn asymptotic_seed(size: ProblemSize) -> LayerParameters {
    LayerParameters::uniform(size.p(), PI, PI / size.n() as f64)
        .expect("problem size has depth >= 1")
}

const ARMIJO_C1: f64 = 1e-4;
const EXPAND_RATIO: f64 = 0.9;
const MAX_BACKTRACKS: usize = 60;
/// Largest trial step per coordinate, radians.
const MAX_STEP: f64 = 1.0;
const HESSIAN_STEP: f64 = 1e-5;
/// A search that gains less than `STALL_GAIN` (relative) over
/// `STALL_WINDOW` iterations is on a plateau and gives up.
const STALL_WINDOW: usize = 200;
const STALL_GAIN: f64 = 1e-12;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Point {
    x: Vec<f64>,
    f: f64,
    g: Vec<f64>,
}

impl Point {
    fn eval(n: u64, x: Vec<f64>) -> Self {
        let mut g = vec![0.0; x.len()];
        let f = overlap_grad_flat(n, &x, &mut g);
        Self { x, f, g }
    }
}

enum Stall {
    Continue(Point),
    Stuck,
}

/// Newton step on the finite-difference Hessian, taken only when the
/// Hessian is negative definite, the gradient shrinks and the overlap does
/// not drop beyond rounding.
fn newton_polish(n: u64, cur: &Point, floor: f64) -> Option<Point> {
    let dim = cur.x.len();
    let h = hessian_flat(n, &cur.x, HESSIAN_STEP);
    let neg_h = DMatrix::from_fn(dim, dim, |r, c| -h[r][c]);
    let chol = neg_h.cholesky()?;
    let step = chol.solve(&DVector::from_column_slice(&cur.g));
    let x: Vec<f64> = cur.x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
    let next = Point::eval(n, x);
    // the overlap itself carries a few dozen ulps of rounding error
    let slack = 256.0 * f64::EPSILON * cur.f.abs().max(1.0);
    if next.f >= (cur.f - slack).max(floor) && norm(&next.g) < 0.9 * norm(&cur.g) {
        Some(next)
    } else {
        None
    }
}

/// Minimal Nelder-Mead on `-f` around `x0`. Returns the best vertex and the
/// number of iterations used.
fn nelder_mead_maximize(n: u64, x0: &[f64], scale: f64, max_iter: usize) -> (Vec<f64>, f64, usize) {
    let dim = x0.len();
    let obj = |x: &[f64]| -scaled_overlap_flat(n, x);
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    simplex.push((x0.to_vec(), obj(x0)));
    for k in 0..dim {
        let mut v = x0.to_vec();
        v[k] += scale;
        let fv = obj(&v);
        simplex.push((v, fv));
    }
    let mut iters = 0;
    while iters < max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[dim].1 - simplex[0].1;
        if spread.abs() <= 1e-15 * simplex[0].1.abs().max(1.0) {
            break;
        }
        iters += 1;
        let centroid: Vec<f64> = (0..dim)
            .map(|k| simplex[..dim].iter().map(|v| v.0[k]).sum::<f64>() / dim as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[dim].0)
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };
        let xr = along(-1.0);
        let fr = obj(&xr);
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = obj(&xe);
            simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[dim - 1].1 {
            simplex[dim] = (xr, fr);
        } else {
            let xc = if fr < simplex[dim].1 {
                along(-0.5)
            } else {
                along(0.5)
            };
            let fc = obj(&xc);
            if fc < simplex[dim].1.min(fr) {
                simplex[dim] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for v in simplex.iter_mut().skip(1) {
                    for (x, b) in v.0.iter_mut().zip(&best) {
                        *x = b + 0.5 * (*x - b);
                    }
                    v.1 = obj(&v.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, fx) = simplex.swap_remove(0);
    (x, -fx, iters)
}

fn recover(n: u64, cur: &Point, floor: f64, iterations: &mut usize, max_iter: usize) -> Stall {
    if let Some(next) = newton_polish(n, cur, floor) {
        *iterations += 1;
        return Stall::Continue(next);
    }
    let budget = (max_iter.saturating_sub(*iterations)).min(200 * cur.x.len());
    if budget == 0 {
        return Stall::Stuck;
    }
    let scale = 0.05 * norm(&cur.g).recip().clamp(1e-4, 1.0);
    let (x, f, used) = nelder_mead_maximize(n, &cur.x, scale, budget);
    *iterations += used.max(1);
    if f > cur.f {
        Stall::Continue(Point::eval(n, x))
    } else {
        Stall::Stuck
    }
}

/// Doubles an accepted unit step while the gain stays nearly linear, so a
/// badly scaled inverse Hessian cannot pin the search to tiny steps.
fn expand(n: u64, cur: &Point, d: &[f64], slope: f64, accepted: Point) -> Point {
    let dmax = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut best = accepted;
    let mut alpha = 1.0;
    while best.f - cur.f >= EXPAND_RATIO * alpha * slope && 2.0 * alpha * dmax <= MAX_STEP {
        alpha *= 2.0;
        let x: Vec<f64> = cur.x.iter().zip(d).map(|(a, b)| a + alpha * b).collect();
        let trial = Point::eval(n, x);
        if !(trial.f.is_finite() && trial.f > best.f) {
            break;
        }
        best = trial;
    }
    best
}

fn result_from(size: ProblemSize, x: &[f64], iterations: usize) -> Result<OptimizationResult> {
    let raw = LayerParameters::from_flat(x)?;
    let (params, branch) = canonicalize_with_branch(&raw)?;
    let flat = params.to_flat();
    let mut g = vec![0.0; flat.len()];
    let f = overlap_grad_flat(size.n(), &flat, &mut g);
    Ok(OptimizationResult {
        params,
        overlap: OverlapValue::from_scaled(size.n(), f),
        grad_norm: norm(&g),
        iterations,
        restarts_used: 1,
        total_iterations: iterations,
        branch,
    })
}

/// BFGS ascent from `start` until the gradient norm drops to `grad_tol`.
pub fn local_maximize(
    size: ProblemSize,
    start: &LayerParameters,
    config: &OptimizerConfig,
) -> Result<OptimizationResult> {
    config.validate()?;
    start.check_depth(size.p())?;
    if !start.is_finite() {
        return Err(Error::NonFinite("start parameters"));
    }
    let n = size.n();
    let dim = size.dim();
    let mut cur = Point::eval(n, start.to_flat());
    // polish steps may trade rounding-level loss for a smaller gradient, but
    // never below the starting overlap
    let floor = cur.f - 1e-14;
    let mut iterations = 0usize;
    let mut checkpoint = (0usize, cur.f);

    'outer: loop {
        // inverse Hessian approximation of -f
        let mut h_inv = DMatrix::<f64>::identity(dim, dim);
        let mut fresh = true;
        loop {
            let gnorm = norm(&cur.g);
            if gnorm <= config.grad_tol {
                break;
            }
            if iterations >= checkpoint.0 + STALL_WINDOW {
                if cur.f - checkpoint.1 <= STALL_GAIN * cur.f.abs().max(1.0) {
                    let best = result_from(size, &cur.x, iterations)?;
                    return Err(Error::NonConvergence {
                        iterations,
                        best: Box::new(best),
                    });
                }
                checkpoint = (iterations, cur.f);
            }
            if iterations >= config.max_iter {
                let best = result_from(size, &cur.x, iterations)?;
                return Err(Error::NonConvergence {
                    iterations,
                    best: Box::new(best),
                });
            }

            let g = DVector::from_column_slice(&cur.g);
            let mut d: Vec<f64> = (&h_inv * &g).iter().copied().collect();
            if dot(&d, &cur.g) <= 0.0 {
                h_inv.fill_with_identity();
                fresh = true;
                d = cur.g.clone();
            }
            let dmax = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if dmax > MAX_STEP {
                d.iter_mut().for_each(|v| *v *= MAX_STEP / dmax);
            }
            let slope = dot(&d, &cur.g);

            // below this predicted gain the change in f is lost to rounding
            let noise_floor = 16.0 * f64::EPSILON * cur.f.abs().max(1.0);
            let mut accepted = None;
            if slope > noise_floor {
                let mut alpha = 1.0;
                for _ in 0..MAX_BACKTRACKS {
                    if alpha * slope <= noise_floor {
                        break;
                    }
                    let x: Vec<f64> = cur.x.iter().zip(&d).map(|(a, b)| a + alpha * b).collect();
                    let trial = Point::eval(n, x);
                    if trial.f.is_finite() && trial.f >= cur.f + ARMIJO_C1 * alpha * slope {
                        accepted = Some(if alpha == 1.0 {
                            expand(n, &cur, &d, slope, trial)
                        } else {
                            trial
                        });
                        break;
                    }
                    alpha *= 0.5;
                }
            }

            let next = match accepted {
                Some(p) => p,
                None if !fresh && slope > noise_floor => {
                    h_inv.fill_with_identity();
                    fresh = true;
                    continue;
                }
                None => match recover(n, &cur, floor, &mut iterations, config.max_iter) {
                    Stall::Continue(p) => {
                        cur = p;
                        continue 'outer;
                    }
                    Stall::Stuck => {
                        let best = result_from(size, &cur.x, iterations)?;
                        return Err(Error::NonConvergence {
                            iterations,
                            best: Box::new(best),
                        });
                    }
                },
            };
            iterations += 1;

            let s: Vec<f64> = next.x.iter().zip(&cur.x).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = cur.g.iter().zip(&next.g).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            if sy > 1e-300 {
                if fresh {
                    let scale = sy / dot(&y, &y);
                    h_inv.fill_with_identity();
                    h_inv *= scale;
                    fresh = false;
                }
                let s = DVector::from_vec(s);
                let y = DVector::from_vec(y);
                let rho = 1.0 / sy;
                let hy = &h_inv * &y;
                let yhy = y.dot(&hy);
                // H+ = H - rho (s hy' + hy s') + (rho^2 y'Hy + rho) s s'
                h_inv -= (&s * hy.transpose() + &hy * s.transpose()) * rho;
                h_inv += (&s * s.transpose()) * (rho * rho * yhy + rho);
            }
            cur = next;
        }

        let result = result_from(size, &cur.x, iterations)?;
        if result.grad_norm <= config.grad_tol || iterations >= config.max_iter {
            if result.grad_norm > config.grad_tol {
                return Err(Error::NonConvergence {
                    iterations,
                    best: Box::new(result),
                });
            }
            return Ok(result);
        }
        // canonicalization nudged the gradient over tolerance; polish there
        cur = Point::eval(n, result.params.to_flat());
    }
}

fn uniform_start(rng: &mut ChaCha8Rng, p: usize) -> LayerParameters {
    let gammas = (0..p).map(|_| rng.gen_range(0.0..TAU)).collect();
    let betas = (0..p)
        .map(|k| {
            if k == 0 {
                rng.gen_range(0.0..=PI / 2.0)
            } else {
                rng.gen_range(0.0..PI)
            }
        })
        .collect();
    LayerParameters::new(gammas, betas).expect("equal lengths")
}

fn perturbed_seed(rng: &mut ChaCha8Rng, size: ProblemSize) -> LayerParameters {
    let seed = asymptotic_seed(size);
    let width = 0.5 / size.n() as f64;
    let gammas = seed
        .gammas()
        .iter()
        .map(|g| g + rng.gen_range(-0.5..0.5))
        .collect();
    let betas = seed
        .betas()
        .iter()
        .map(|b| b + rng.gen_range(-width..width))
        .collect();
    LayerParameters::new(gammas, betas).expect("equal lengths")
}

/// Restart points for `multistart_maximize`, a pure function of the config.
pub fn restart_points(size: ProblemSize, config: &OptimizerConfig) -> Vec<LayerParameters> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    (0..config.restarts)
        .map(|i| match (config.seeding, i) {
            (Seeding::UniformRandom, _) => uniform_start(&mut rng, size.p()),
            (_, 0) => asymptotic_seed(size),
            (Seeding::Hybrid, _) => uniform_start(&mut rng, size.p()),
            (Seeding::AsymptoticSeeded, _) => perturbed_seed(&mut rng, size),
        })
        .collect()
}

/// Overlap differences below this are treated as ties.
const TIE_TOL: f64 = 1e-12;

/// Picks the better of two results: higher overlap, ties broken by distance
/// to the asymptotic seed, then by order.
fn prefer(
    current: OptimizationResult,
    candidate: OptimizationResult,
    seed: &LayerParameters,
) -> OptimizationResult {
    let diff = candidate.overlap.scaled - current.overlap.scaled;
    if diff > TIE_TOL {
        return candidate;
    }
    if diff < -TIE_TOL {
        return current;
    }
    if candidate.params.distance_sq(seed) < current.params.distance_sq(seed) {
        candidate
    } else {
        current
    }
}

/// Best canonicalized local maximum over `config.restarts` starting points.
/// Restarts run in parallel; the reduction is ordered by restart index.
pub fn multistart_maximize(
    size: ProblemSize,
    config: &OptimizerConfig,
) -> Result<OptimizationResult> {
    config.validate()?;
    let starts = restart_points(size, config);
    let outcomes: Vec<Result<OptimizationResult>> = starts
        .par_iter()
        .map(|start| local_maximize(size, start, config))
        .collect();

    let seed = asymptotic_seed(size);
    let mut total_iterations = 0;
    let mut best: Option<OptimizationResult> = None;
    let mut failures = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(res) => {
                total_iterations += res.iterations;
                best = Some(match best {
                    None => res,
                    Some(cur) => prefer(cur, res, &seed),
                });
            }
            Err(err) => {
                if let Error::NonConvergence { iterations, .. } = &err {
                    total_iterations += iterations;
                }
                failures.push(err);
            }
        }
    }
    match best {
        Some(mut res) => {
            res.restarts_used = config.restarts;
            res.total_iterations = total_iterations;
            Ok(res)
        }
        None => Err(Error::AllRestartsFailed {
            restarts: config.restarts,
            failures,
        }),
    }
}

/// Local search from `init`, zero-padded to the target depth.
pub fn warm_start_maximize(
    size: ProblemSize,
    init: &LayerParameters,
    config: &OptimizerConfig,
) -> Result<OptimizationResult> {
    let start = init.padded(size.p())?;
    local_maximize(size, &start, config)
}
