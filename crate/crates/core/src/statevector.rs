//! Brute-force statevector simulation of the ansatz for small `n`.
//!
//! This is the ground truth the closed-form amplitude is checked against.
//! Basis index bit `q` holds qubit `q`. Mixer layers are applied as `n`
//! butterfly passes over index pairs differing in one bit.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::amplitude::OverlapValue;
use crate::error::{Error, Result};
use crate::params::LayerParameters;

pub const DEFAULT_QUBIT_LIMIT: u32 = 22;
pub const MAX_QUBIT_LIMIT: u32 = 24;

/// Passes smaller than this run sequentially.
const PARALLEL_MIN_LEN: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetBitstring {
    bits: Vec<bool>,
}

impl TargetBitstring {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// Lowest `n` bits of `index`, qubit 0 first.
    pub fn from_index(n: u32, index: u64) -> Self {
        Self {
            bits: (0..n).map(|q| (index >> q) & 1 == 1).collect(),
        }
    }

    pub fn zeros(n: u32) -> Self {
        Self::from_index(n, 0)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn index(&self) -> usize {
        self.bits
            .iter()
            .enumerate()
            .fold(0usize, |acc, (q, &b)| acc | ((b as usize) << q))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: u32,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn num_qubits(&self) -> u32 {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    fn check_target(&self, t: &TargetBitstring) -> Result<usize> {
        if t.len() != self.n as usize {
            return Err(Error::TargetMismatch {
                expected: self.n as usize,
                got: t.len(),
            });
        }
        Ok(t.index())
    }

    pub fn amplitude_at(&self, t: &TargetBitstring) -> Result<Complex64> {
        let idx = self.check_target(t)?;
        Ok(self.amplitudes[idx])
    }
}

/// `|+>^n` with the default qubit limit.
pub fn prepare_plus(n: u32) -> Result<StateVector> {
    prepare_plus_with_limit(n, DEFAULT_QUBIT_LIMIT)
}

/// `|+>^n`, refusing `n` above `limit` (which itself may not exceed 24).
pub fn prepare_plus_with_limit(n: u32, limit: u32) -> Result<StateVector> {
    let limit = limit.min(MAX_QUBIT_LIMIT);
    if n == 0 || n > limit {
        return Err(Error::Capacity { n, limit });
    }
    let len = 1usize << n;
    let amp = Complex64::new((-(n as f64) / 2.0).exp2(), 0.0);
    Ok(StateVector {
        n,
        amplitudes: vec![amp; len],
    })
}

/// Multiplies the amplitude at `t` by `e^{-i gamma}`.
pub fn apply_phase_layer(
    mut state: StateVector,
    t: &TargetBitstring,
    gamma: f64,
) -> Result<StateVector> {
    let idx = state.check_target(t)?;
    let (s, c) = gamma.sin_cos();
    state.amplitudes[idx] *= Complex64::new(c, -s);
    Ok(state)
}

fn mix_pair(a: &mut Complex64, b: &mut Complex64, c: f64, s: f64) {
    // [[cos, -i sin], [-i sin, cos]]
    let (x, y) = (*a, *b);
    *a = Complex64::new(c * x.re + s * y.im, c * x.im - s * y.re);
    *b = Complex64::new(s * x.im + c * y.re, -s * x.re + c * y.im);
}

fn butterfly(chunk: &mut [Complex64], half: usize, c: f64, s: f64) {
    let (lo, hi) = chunk.split_at_mut(half);
    for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
        mix_pair(a, b, c, s);
    }
}

/// Applies `exp(-i beta X)` to every qubit.
pub fn apply_mixer_layer(mut state: StateVector, beta: f64) -> StateVector {
    let (s, c) = beta.sin_cos();
    let len = state.amplitudes.len();
    for q in 0..state.n {
        let half = 1usize << q;
        if len >= PARALLEL_MIN_LEN {
            state
                .amplitudes
                .par_chunks_mut(2 * half)
                .for_each(|chunk| butterfly(chunk, half, c, s));
        } else {
            state
                .amplitudes
                .chunks_mut(2 * half)
                .for_each(|chunk| butterfly(chunk, half, c, s));
        }
    }
    state
}

/// Runs the full depth-`p` circuit and returns the final state.
pub fn simulate(n: u32, t: &TargetBitstring, params: &LayerParameters) -> Result<StateVector> {
    simulate_with_limit(n, t, params, DEFAULT_QUBIT_LIMIT)
}

pub fn simulate_with_limit(
    n: u32,
    t: &TargetBitstring,
    params: &LayerParameters,
    limit: u32,
) -> Result<StateVector> {
    let mut state = prepare_plus_with_limit(n, limit)?;
    state.check_target(t)?;
    for (&gamma, &beta) in params.gammas().iter().zip(params.betas()) {
        state = apply_phase_layer(state, t, gamma)?;
        state = apply_mixer_layer(state, beta);
    }
    Ok(state)
}

/// Overlap with `|t>` after `p` alternating phase and mixer layers.
pub fn oracle_overlap(
    n: u32,
    p: usize,
    t: &TargetBitstring,
    params: &LayerParameters,
) -> Result<OverlapValue> {
    params.check_depth(p)?;
    let state = simulate(n, t, params)?;
    let amp = state.amplitude_at(t)?;
    let scaled = amp.norm_sqr() * (n as f64).exp2();
    Ok(OverlapValue {
        scaled,
        f: amp.norm_sqr(),
    })
}

/// Scaled amplitude `2^(n/2) <t|psi>` from the simulator.
pub fn oracle_scaled_amplitude(
    n: u32,
    t: &TargetBitstring,
    params: &LayerParameters,
) -> Result<Complex64> {
    let state = simulate(n, t, params)?;
    Ok(state.amplitude_at(t)? * (n as f64 / 2.0).exp2())
}
