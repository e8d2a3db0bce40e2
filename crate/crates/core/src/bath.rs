//! Ohmic bath discretization and the two-point correlation `B(τ₁, τ₂)`.

use alloc::vec::Vec;

use num_complex::Complex64 as C64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Number of grid points used to locate `max |B|` for the automatic bound.
pub const BOUND_GRID_POINTS: usize = 4096;

/// Parameters of the discretized Ohmic bath.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathSpec {
    /// Number of harmonic modes `L`.
    pub modes: usize,
    pub omega_c: f64,
    pub omega_max: f64,
    /// Kondo parameter ξ.
    pub xi: f64,
    /// Inverse temperature β.
    pub beta: f64,
}

impl BathSpec {
    /// 400 modes with `ω_max = 4 ω_c`.
    pub fn ohmic(omega_c: f64, xi: f64, beta: f64) -> Self {
        Self { modes: 400, omega_c, omega_max: 4.0 * omega_c, xi, beta }
    }

    pub fn validate(&self) -> Result<()> {
        if self.modes == 0 {
            return Err(Error::invalid("L", "at least one mode is required"));
        }
        let positive = |field, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(field, alloc::format!("must be positive, got {v}")))
            }
        };
        positive("omega_c", self.omega_c)?;
        positive("omega_max", self.omega_max)?;
        positive("beta", self.beta)?;
        if !(self.xi.is_finite() && self.xi >= 0.0) {
            return Err(Error::invalid("xi", alloc::format!("must be nonnegative, got {}", self.xi)));
        }
        Ok(())
    }
}

/// Mode table `{ω_j, c_j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BathModes {
    pub omega: Vec<f64>,
    pub coupling: Vec<f64>,
}

impl BathModes {
    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }
}

/// Discretizes the Ohmic spectral density into `L` modes:
///
/// ```text
/// ω_j = −ω_c ln(1 − (j/L)(1 − e^{−ω_max/ω_c}))
/// c_j = ω_j √(ξ ω_c (1 − e^{−ω_max/ω_c}) / L),   j = 1..L
/// ```
pub fn discretize_bath(spec: &BathSpec) -> Result<BathModes> {
    spec.validate()?;
    let l = spec.modes as f64;
    let tail = 1.0 - (-spec.omega_max / spec.omega_c).exp();
    let scale = (spec.xi * spec.omega_c * tail / l).sqrt();
    let mut omega = Vec::with_capacity(spec.modes);
    let mut coupling = Vec::with_capacity(spec.modes);
    for j in 1..=spec.modes {
        let w = if j == spec.modes {
            // the log collapses to ω_max exactly
            spec.omega_max
        } else {
            -spec.omega_c * (1.0 - (j as f64 / l) * tail).ln()
        };
        omega.push(w);
        coupling.push(w * scale);
    }
    Ok(BathModes { omega, coupling })
}

/// `B(τ₁, τ₂) = ½ Σ_j (c_j²/ω_j)[coth(βω_j/2) cos(ω_j Δτ) − i sin(ω_j Δτ)]`,
/// `Δτ = |τ₁| − |τ₂|`.
pub fn correlation_b(modes: &BathModes, beta: f64, tau1: f64, tau2: f64) -> C64 {
    let dtau = tau1.abs() - tau2.abs();
    let (mut re, mut im) = (0.0, 0.0);
    for (&w, &cj) in modes.omega.iter().zip(&modes.coupling) {
        let weight = 0.5 * cj * cj / w;
        let (s, co) = (w * dtau).sin_cos();
        re += weight * coth(0.5 * beta * w) * co;
        im -= weight * s;
    }
    C64::new(re, im)
}

/// `𝓑 = max |B| / 6` over `Δτ ∈ [−horizon, horizon]` on a uniform grid.
pub fn estimate_b_bound(modes: &BathModes, beta: f64, horizon: f64, grid_points: usize) -> Result<f64> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::invalid("horizon", "must be positive"));
    }
    if grid_points < 2 {
        return Err(Error::invalid("grid_points", "need at least two grid points"));
    }
    let corr = BathCorrelation::new(modes, beta)?;
    let step = 2.0 * horizon / (grid_points - 1) as f64;
    let max = (0..grid_points)
        .map(|k| corr.at_delta(-horizon + k as f64 * step).norm())
        .fold(0.0, f64::max);
    Ok(max / 6.0)
}

fn coth(x: f64) -> f64 {
    1.0 / x.tanh()
}

/// `B` with the per-mode factors precomputed for a fixed β.
#[derive(Debug, Clone, PartialEq)]
pub struct BathCorrelation {
    omega: Vec<f64>,
    /// `c_j² / (2ω_j)`
    weight: Vec<f64>,
    /// `weight_j · coth(βω_j/2)`
    weight_coth: Vec<f64>,
}

impl BathCorrelation {
    pub fn new(modes: &BathModes, beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::invalid("beta", "must be positive"));
        }
        if modes.omega.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::invalid("omega", "mode frequencies must be positive"));
        }
        let weight: Vec<f64> = modes
            .omega
            .iter()
            .zip(&modes.coupling)
            .map(|(&w, &cj)| 0.5 * cj * cj / w)
            .collect();
        let weight_coth = weight
            .iter()
            .zip(&modes.omega)
            .map(|(&g, &w)| g * coth(0.5 * beta * w))
            .collect();
        Ok(Self { omega: modes.omega.clone(), weight, weight_coth })
    }

    /// True when every coupling vanishes, i.e. `B ≡ 0`.
    pub fn is_trivial(&self) -> bool {
        self.weight.iter().all(|&g| g == 0.0)
    }

    pub fn at(&self, tau1: f64, tau2: f64) -> C64 {
        self.at_delta(tau1.abs() - tau2.abs())
    }

    pub fn at_delta(&self, dtau: f64) -> C64 {
        let (mut re, mut im) = (0.0, 0.0);
        for j in 0..self.omega.len() {
            let (s, co) = (self.omega[j] * dtau).sin_cos();
            re += self.weight_coth[j] * co;
            im -= self.weight[j] * s;
        }
        C64::new(re, im)
    }

    /// `max |B|/6` over `[−horizon, horizon]` with the default grid.
    pub fn default_bound(&self, horizon: f64) -> f64 {
        let n = BOUND_GRID_POINTS;
        let step = 2.0 * horizon / (n - 1) as f64;
        (0..n)
            .map(|k| self.at_delta(-horizon + k as f64 * step).norm())
            .fold(0.0, f64::max)
            / 6.0
    }
}

/// Linear-interpolation table of `B(Δτ)` over `[−horizon, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationTable {
    lo: f64,
    inv_step: f64,
    values: Vec<C64>,
}

impl CorrelationTable {
    pub fn new(corr: &BathCorrelation, horizon: f64, points: usize) -> Result<Self> {
        if points < 2 || !(horizon > 0.0) {
            return Err(Error::invalid("b_table_points", "need ≥ 2 points over a positive horizon"));
        }
        let step = 2.0 * horizon / (points - 1) as f64;
        let values = (0..points).map(|k| corr.at_delta(-horizon + k as f64 * step)).collect();
        Ok(Self { lo: -horizon, inv_step: 1.0 / step, values })
    }

    #[inline]
    pub fn at_delta(&self, dtau: f64) -> C64 {
        let x = (dtau - self.lo) * self.inv_step;
        let last = self.values.len() - 1;
        let k = (x.floor().max(0.0) as usize).min(last - 1);
        let f = (x - k as f64).clamp(0.0, 1.0);
        self.values[k] * (1.0 - f) + self.values[k + 1] * f
    }
}

/// Evaluation strategy for `B` inside the samplers.
#[derive(Debug, Clone, PartialEq)]
pub enum Correlation {
    Direct(BathCorrelation),
    Tabulated(CorrelationTable),
}

impl Correlation {
    /// Fills `out[slot(a, b)]` with `B(s_a, s_b)` for every pair `a < b` of
    /// `points`, in row-major upper-triangular order (see [`pair_slot`]).
    pub(crate) fn fill_pairs(&self, points: &[f64], scratch: &mut PhasorScratch, out: &mut Vec<C64>) {
        let p = points.len();
        out.clear();
        match self {
            Correlation::Tabulated(table) => {
                for a in 0..p {
                    for b in a + 1..p {
                        out.push(table.at_delta(points[a].abs() - points[b].abs()));
                    }
                }
            }
            Correlation::Direct(corr) => {
                // e^{iω(|s_a|−|s_b|)} from per-point phasors: one sin_cos per
                // (point, mode) instead of per (pair, mode).
                let l = corr.omega.len();
                scratch.cos.clear();
                scratch.sin.clear();
                for &s in points {
                    let x = s.abs();
                    for &w in &corr.omega {
                        let (sn, cs) = (w * x).sin_cos();
                        scratch.cos.push(cs);
                        scratch.sin.push(sn);
                    }
                }
                for a in 0..p {
                    let (ca, sa) = (&scratch.cos[a * l..(a + 1) * l], &scratch.sin[a * l..(a + 1) * l]);
                    for b in a + 1..p {
                        let (cb, sb) = (&scratch.cos[b * l..(b + 1) * l], &scratch.sin[b * l..(b + 1) * l]);
                        let (mut re, mut im) = (0.0, 0.0);
                        for j in 0..l {
                            let cos_d = ca[j] * cb[j] + sa[j] * sb[j];
                            let sin_d = sa[j] * cb[j] - ca[j] * sb[j];
                            re += corr.weight_coth[j] * cos_d;
                            im -= corr.weight[j] * sin_d;
                        }
                        out.push(C64::new(re, im));
                    }
                }
            }
        }
    }

    pub fn at(&self, tau1: f64, tau2: f64) -> C64 {
        match self {
            Correlation::Direct(c) => c.at(tau1, tau2),
            Correlation::Tabulated(t) => t.at_delta(tau1.abs() - tau2.abs()),
        }
    }
}

/// Index of pair `(a, b)`, `a < b < p`, in the triangular layout of
/// [`Correlation::fill_pairs`].
#[inline]
pub(crate) fn pair_slot(a: usize, b: usize, p: usize) -> usize {
    debug_assert!(a < b && b < p);
    a * (2 * p - a - 1) / 2 + (b - a - 1)
}

#[derive(Debug, Default, Clone)]
pub(crate) struct PhasorScratch {
    cos: Vec<f64>,
    sin: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper_bath(xi: f64) -> BathModes {
        discretize_bath(&BathSpec::ohmic(2.5, xi, 5.0)).unwrap()
    }

    #[test]
    fn last_frequency_is_omega_max() {
        let modes = paper_bath(0.2);
        assert_eq!(*modes.omega.last().unwrap(), 10.0);
        assert!(modes.omega.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn first_mode_matches_scalar_formula() {
        // oracle values evaluated with 50-digit arithmetic (mpmath)
        let modes = paper_bath(0.2);
        let w1 = 0.006143068537010828018;
        let c1 = 0.00021519208993040944839;
        assert!((modes.omega[0] - w1).abs() < 1e-17 * 10.0);
        assert!((modes.coupling[0] - c1).abs() < 1e-18 * 10.0);
    }

    #[test]
    fn zero_coupling_gives_zero_modes_and_bound() {
        let modes = paper_bath(0.0);
        assert!(modes.coupling.iter().all(|&c| c == 0.0));
        assert_eq!(correlation_b(&modes, 5.0, 0.3, -1.2), C64::new(0.0, 0.0));
        assert_eq!(estimate_b_bound(&modes, 5.0, 6.0, 4096).unwrap(), 0.0);
    }

    #[test]
    fn equal_magnitudes_give_real_b() {
        let modes = paper_bath(0.2);
        assert_eq!(correlation_b(&modes, 5.0, -0.7, 0.7).im, 0.0);
    }

    #[test]
    fn paper_bound_constants() {
        let b = estimate_b_bound(&paper_bath(0.2), 5.0, 6.0, 4096).unwrap();
        assert!((0.0966..=0.0976).contains(&b), "{b}");
        let b = estimate_b_bound(&paper_bath(0.4), 5.0, 6.0, 4096).unwrap();
        assert!((0.1932..=0.1952).contains(&b), "{b}");
        let modes = discretize_bath(&BathSpec::ohmic(5.0, 0.4, 5.0)).unwrap();
        let b = estimate_b_bound(&modes, 5.0, 6.0, 4096).unwrap();
        assert!((0.760..=0.771).contains(&b), "{b}");
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut spec = BathSpec::ohmic(2.5, 0.2, 5.0);
        spec.modes = 0;
        assert!(discretize_bath(&spec).is_err());
        for f in [
            |s: &mut BathSpec| s.omega_c = 0.0,
            |s: &mut BathSpec| s.omega_max = -1.0,
            |s: &mut BathSpec| s.beta = 0.0,
            |s: &mut BathSpec| s.xi = -0.1,
        ] {
            let mut spec = BathSpec::ohmic(2.5, 0.2, 5.0);
            f(&mut spec);
            assert!(discretize_bath(&spec).is_err());
        }
    }

    #[test]
    fn pair_table_matches_direct_evaluation() {
        let modes = paper_bath(0.4);
        let corr = BathCorrelation::new(&modes, 5.0).unwrap();
        let points = [-1.3, -0.2, 0.0, 0.4, 2.9];
        let mut out = Vec::new();
        let mut scratch = PhasorScratch::default();
        Correlation::Direct(corr.clone()).fill_pairs(&points, &mut scratch, &mut out);
        assert_eq!(out.len(), 10);
        for a in 0..5 {
            for b in a + 1..5 {
                let direct = correlation_b(&modes, 5.0, points[a], points[b]);
                assert!((out[pair_slot(a, b, 5)] - direct).norm() < 1e-13);
            }
        }
        let table = CorrelationTable::new(&corr, 3.0, 1 << 16).unwrap();
        Correlation::Tabulated(table).fill_pairs(&points, &mut scratch, &mut out);
        for a in 0..5 {
            for b in a + 1..5 {
                let direct = correlation_b(&modes, 5.0, points[a], points[b]);
                assert!((out[pair_slot(a, b, 5)] - direct).norm() < 1e-6);
            }
        }
    }
}
