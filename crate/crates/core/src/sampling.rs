//! Uniform samplers on time simplices and shells, sample-count rules and
//! counter-based random streams.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Number of samples evaluated per random stream. Streams are keyed by chunk
/// index, so results do not depend on how chunks are scheduled.
pub const CHUNK: usize = 256;

/// Sampling phase, part of every stream key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Phase {
    DysonShell = 1,
    DysonFull = 2,
    BoldPredictor = 3,
    BoldCorrector = 4,
    BtbShell = 5,
    Bare = 6,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent random stream for chunk `chunk` of order `m` at step `step`.
#[derive(Debug, Clone)]
pub struct RngStream(ChaCha8Rng);

impl RngStream {
    pub fn new(seed: u64, phase: Phase, step: u64, m: u64, chunk: u64) -> Self {
        let mut key = [0u8; 32];
        let mut h = splitmix(seed);
        for (i, word) in [phase as u64, step, m, chunk].into_iter().enumerate() {
            h = splitmix(h ^ word);
            key[8 * i..8 * i + 8].copy_from_slice(&h.to_le_bytes());
        }
        RngStream(ChaCha8Rng::from_seed(key))
    }

    /// Uniform draw in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    #[inline]
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }
}

/// `s_k ↦ s_k + dt` for `s_k ≥ 0`, `s_k − dt` otherwise.
pub fn shift_map(points: &[f64], dt: f64) -> alloc::vec::Vec<f64> {
    points.iter().map(|&s| if s >= 0.0 { s + dt } else { s - dt }).collect()
}

fn sort(points: &mut [f64]) {
    // insertion sort: m is small
    for i in 1..points.len() {
        let x = points[i];
        let mut j = i;
        while j > 0 && points[j - 1] > x {
            points[j] = points[j - 1];
            j -= 1;
        }
        points[j] = x;
    }
}

/// Fills `out` with a uniform sample of `{lo ≤ s₁ ≤ … ≤ s_m ≤ hi}`.
pub fn sample_simplex(out: &mut [f64], lo: f64, hi: f64, rng: &mut RngStream) {
    for s in out.iter_mut() {
        *s = rng.uniform_in(lo, hi);
    }
    sort(out);
}

/// Fills `out` with a uniform sample of the shell
/// `{−t−dt ≤ s₁ ≤ … ≤ s_m ≤ t+dt : some |s_j| ≤ dt}`, by rejection from the
/// enclosing simplex. Returns the number of draws used.
pub fn sample_shell(out: &mut [f64], t_prev: f64, dt: f64, rng: &mut RngStream) -> usize {
    let hi = t_prev + dt;
    let mut tries = 0;
    loop {
        tries += 1;
        let mut hit = false;
        for s in out.iter_mut() {
            *s = rng.uniform_in(-hi, hi);
            hit |= s.abs() <= dt;
        }
        if hit || out.is_empty() {
            sort(out);
            return tries;
        }
    }
}

/// Integration domain whose volume sets a sample count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountKind {
    /// Full simplex `{−t_n ≤ s ≤ t_n}`.
    DysonFull,
    /// Shell gained when advancing from `t_n` to `t_{n+1}`.
    Shell,
    /// One-sided simplex `{0 ≤ s ≤ t_n}`.
    Inchworm,
}

/// Per-order sample budget: `𝓜₀`, the bound `𝓑` and the truncation `M̄`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleBudget {
    pub m0: f64,
    pub b_bound: f64,
    pub mbar: usize,
}

impl SampleBudget {
    pub fn validate(&self) -> Result<()> {
        if !(self.m0.is_finite() && self.m0 > 0.0) {
            return Err(Error::invalid("m0", "must be positive"));
        }
        if !(self.b_bound.is_finite() && self.b_bound >= 0.0) {
            return Err(Error::invalid("b_bound", "must be nonnegative"));
        }
        if self.mbar % 2 == 0 || self.mbar > 11 {
            return Err(Error::invalid("mbar", "must be odd and at most 11"));
        }
        Ok(())
    }

    /// Odd orders `1, 3, …, M̄`.
    pub fn orders(&self) -> impl Iterator<Item = usize> {
        (1..=self.mbar).step_by(2)
    }
}

pub fn double_factorial(n: usize) -> f64 {
    let mut acc = 1.0;
    let mut k = n;
    while k > 1 {
        acc *= k as f64;
        k -= 2;
    }
    acc
}

pub fn factorial(n: usize) -> f64 {
    (2..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Nearest-integer sample count for odd order `m` at step `step`:
///
/// ```text
/// DysonFull  𝓜₀ (2t_n)^m / (m−1)!! · 𝓑^{(m+1)/2}
/// Shell      𝓜₀ ((2t_{n+1})^m − (2t_n)^m) / (m−1)!! · 𝓑^{(m+1)/2}
/// Inchworm   𝓜₀ t_n^m / (m−1)!! · 𝓑^{(m+1)/2}
/// ```
pub fn sample_count(kind: CountKind, step: usize, m: usize, dt: f64, budget: &SampleBudget) -> Result<u64> {
    if m % 2 == 0 {
        return Err(Error::EvenOrder(m));
    }
    let t = step as f64 * dt;
    let volume = match kind {
        CountKind::DysonFull => (2.0 * t).powi(m as i32),
        CountKind::Shell => (2.0 * (t + dt)).powi(m as i32) - (2.0 * t).powi(m as i32),
        CountKind::Inchworm => t.powi(m as i32),
    };
    let raw = budget.m0 * volume / double_factorial(m - 1) * budget.b_bound.powi((m as i32 + 1) / 2);
    Ok(raw.round() as u64)
}

/// Sample count for the even-order bare series at time `t`:
/// `𝓜₀ (2t)^m / m!! · 𝓑^{m/2}`.
pub fn bare_sample_count(t: f64, m: usize, budget: &SampleBudget) -> u64 {
    let raw = budget.m0 * (2.0 * t).powi(m as i32) / double_factorial(m) * budget.b_bound.powi(m as i32 / 2);
    raw.round() as u64
}
