use std::f64::consts::PI;

use qaoa_lab::amplitude::{overlap, overlap_gradient, scaled_amplitude};
use qaoa_lab::params::{LayerParameters, ProblemSize};
use qaoa_lab::statevector::{oracle_overlap, oracle_scaled_amplitude, TargetBitstring};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_params(rng: &mut ChaCha8Rng, p: usize) -> LayerParameters {
    let gammas = (0..p).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
    let betas = (0..p).map(|_| rng.gen_range(0.0..PI)).collect();
    LayerParameters::new(gammas, betas).unwrap()
}

#[test]
fn closed_form_matches_statevector_for_small_sizes() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for n in 1..=8u32 {
        for p in 1..=4 {
            let size = ProblemSize::new(n as u64, p).unwrap();
            let t = TargetBitstring::zeros(n);
            for _ in 0..20 {
                let params = random_params(&mut rng, p);
                let closed = overlap(size, &params).unwrap().scaled;
                let sim = oracle_overlap(n, p, &t, &params).unwrap().scaled;
                worst = worst.max((closed - sim).abs());
            }
        }
    }
    assert!(worst < 1e-10, "max deviation {worst:e}");
}

#[test]
fn amplitude_phase_matches_statevector() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..30 {
        let params = random_params(&mut rng, 3);
        let n = 7;
        let a = scaled_amplitude(ProblemSize::new(n as u64, 3).unwrap(), &params)
            .unwrap()
            .to_complex();
        let b = oracle_scaled_amplitude(n, &TargetBitstring::zeros(n), &params).unwrap();
        assert!((a - b).norm() < 1e-10, "{a} vs {b}");
    }
}

#[test]
fn overlap_does_not_depend_on_the_target() {
    let n = 6u32;
    let size = ProblemSize::new(n as u64, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..5 {
        let params = random_params(&mut rng, 2);
        let closed = overlap(size, &params).unwrap().scaled;
        for index in 0..64 {
            let t = TargetBitstring::from_index(n, index);
            let sim = oracle_overlap(n, 2, &t, &params).unwrap().scaled;
            assert!(
                (sim - closed).abs() < 1e-10,
                "target {index}: {sim} vs {closed}"
            );
        }
    }
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let h = 1e-6;
    for case in 0..100 {
        let p = 1 + case % 5;
        let n = rng.gen_range(4..40u64);
        let size = ProblemSize::new(n, p).unwrap();
        let gammas: Vec<f64> = (0..p).map(|_| rng.gen_range(0.5..2.0 * PI - 0.5)).collect();
        let betas: Vec<f64> = (0..p)
            .map(|_| rng.gen_range(0.05..PI / n as f64 * 2.0))
            .collect();
        let params = LayerParameters::new(gammas, betas).unwrap();
        let grad = overlap_gradient(size, &params).unwrap();
        let flat = params.to_flat();
        let mut fd = vec![0.0; flat.len()];
        for k in 0..flat.len() {
            let mut plus = flat.clone();
            let mut minus = flat.clone();
            plus[k] += h;
            minus[k] -= h;
            let fp = overlap(size, &LayerParameters::from_flat(&plus).unwrap())
                .unwrap()
                .scaled;
            let fm = overlap(size, &LayerParameters::from_flat(&minus).unwrap())
                .unwrap()
                .scaled;
            fd[k] = (fp - fm) / (2.0 * h);
        }
        let diff: f64 = grad
            .iter()
            .zip(&fd)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let scale: f64 = grad.iter().map(|g| g * g).sum::<f64>().sqrt().max(1.0);
        assert!(
            diff / scale < 1e-6,
            "case {case}: n = {n}, p = {p}, rel {:e}",
            diff / scale
        );
    }
}
