//! Bold-thin-bold solver.
//!
//! Phase 1 tabulates the one-sided bold propagator `G°(t)`, `G°(0) = I`, from
//!
//! ```text
//! dG°/dt = i H_s G° + Σ_{m odd} i^{m+1} ∫_{0 ≤ s ≤ t} U(0, s, t) L_c(s, t) ds
//! U(0, s, t) = W G°(t − s_m) W G°(s_m − s_{m−1}) ⋯ W G°(s_1)
//! ```
//!
//! with connected pairings `L_c`, using Heun steps whose second stage
//! replaces the last interpolation panel by the predictor. Phase 2 runs the
//! basis recurrence of the Dyson reuse solver with every same-sign segment
//! replaced by the interpolated table (adjoint left of zero), the crossing
//! segment kept thin, and the pairing family restricted accordingly.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::config::Setup;
use crate::dyson::{march, shell_increment};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::kernel::{i_pow, mc_sum, negatives, split_functional, Basis, Segments, StreamKey};
use crate::mat2::{c, HermitianExp, Mat2, Spin};
use crate::pairings::FamilyKind;
use crate::sampling::{factorial, sample_count, sample_simplex, CountKind, Phase};
use crate::system::SystemSpec;
use crate::trajectory::Trajectory;

/// `G°_k ≈ G°(k·dt)` for `k = 0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoldTable {
    pub entries: Vec<Mat2>,
    pub dt: f64,
    /// Samples drawn per odd order over both Heun stages of all steps.
    pub samples: Vec<u64>,
}

impl BoldTable {
    /// Table of `e^{i k dt H}` without any bath correction.
    pub fn bare(h: &HermitianExp, dt: f64, steps: usize) -> Self {
        Self { entries: (0..=steps).map(|k| h.exp_i(k as f64 * dt)).collect(), dt, samples: Vec::new() }
    }

    pub fn horizon(&self) -> f64 {
        (self.entries.len() - 1) as f64 * self.dt
    }

    /// Piecewise linear interpolant `G°_I(s)`.
    pub fn interpolate(&self, s: f64) -> Result<Mat2> {
        interpolate(&self.entries, self.dt, s)
    }
}

fn interpolate(entries: &[Mat2], dt: f64, s: f64) -> Result<Mat2> {
    let last = entries.len() - 1;
    let horizon = last as f64 * dt;
    if !(s >= 0.0 && s <= horizon * (1.0 + 1e-12) + 1e-12) {
        return Err(Error::OutsideHorizon { time: s, horizon });
    }
    if last == 0 {
        return Ok(entries[0]);
    }
    let x = s / dt;
    let k = (x.floor() as usize).min(last - 1);
    let f = x - k as f64;
    if f == 0.0 {
        return Ok(entries[k]);
    }
    Ok(entries[k] * (1.0 - f) + entries[k + 1] * f)
}

struct Bold<'a> {
    entries: &'a [Mat2],
    dt: f64,
}

impl Segments for Bold<'_> {
    #[inline]
    fn forward(&self, len: f64) -> Result<Mat2> {
        interpolate(self.entries, self.dt, len)
    }

    #[inline]
    fn backward(&self, len: f64) -> Result<Mat2> {
        Ok(interpolate(self.entries, self.dt, len)?.adjoint())
    }
}

/// `Σ_m (t^m/m!) · mean_i [i^{m+1} U(0, s_i, t) L_c(s_i, t)]` over simplex
/// samples on `[0, t]`, with `G°` interpolated from `entries`.
fn bold_memory<E: Executor + ?Sized>(
    setup: &Setup,
    exec: &E,
    entries: &[Mat2],
    step: usize,
    phase: Phase,
    counts: &mut [u64],
) -> Result<Mat2> {
    let t = setup.time(step);
    let mut total = Mat2::zero();
    if setup.uncoupled() || step == 0 {
        return Ok(total);
    }
    let w = setup.coupling();
    let bold = Bold { entries, dt: setup.dt() };
    for m in setup.budget.orders() {
        let count = sample_count(CountKind::Inchworm, step, m, setup.dt(), &setup.budget)?;
        counts[(m - 1) / 2] += count;
        if count == 0 {
            continue;
        }
        let key = StreamKey { seed: setup.config.seed, phase, step, m };
        let table = setup.cache.table(FamilyKind::Connected, m + 1, 1);
        let sum: Mat2 = mc_sum(
            exec,
            key,
            count,
            |pts, rng| sample_simplex(pts, 0.0, t, rng),
            |ws, acc: &mut Mat2| {
                let lc = ws.influence(&setup.correlation, table, Some(t));
                let mut u = Mat2::identity();
                let mut prev = 0.0;
                for &s in &ws.points {
                    u = w * bold.forward(s - prev)? * u;
                    prev = s;
                }
                u = w * bold.forward(t - prev)? * u;
                *acc += u.scale(i_pow(m + 1) * lc);
                Ok(())
            },
        )?;
        total += sum.scale_re(t.powi(m as i32) / factorial(m) / count as f64);
    }
    Ok(total)
}

/// Phase 1: Heun march of the bold propagator up to `N·dt`.
pub fn solve_bold_propagator<E: Executor + ?Sized>(setup: &Setup, exec: &E) -> Result<BoldTable> {
    let dt = setup.dt();
    let h = setup.system().hamiltonian();
    let ih = |g: &Mat2| (h * *g).scale(c(0.0, 1.0));
    let mut counts = alloc::vec![0; (setup.budget.mbar - 1) / 2 + 1];
    let mut entries = alloc::vec![Mat2::identity()];
    for k in 0..setup.config.steps {
        let gk = entries[k];
        let f = bold_memory(setup, exec, &entries, k, Phase::BoldPredictor, &mut counts)?;
        let star = gk + (ih(&gk) + f) * dt;
        entries.push(star);
        let f_star = bold_memory(setup, exec, &entries, k + 1, Phase::BoldCorrector, &mut counts)?;
        let star2 = star + (ih(&star) + f_star) * dt;
        let next = (gk + star2) * 0.5;
        if !next.is_finite() {
            return Err(Error::NonFinite("bold propagator"));
        }
        entries[k + 1] = next;
    }
    Ok(BoldTable { entries, dt, samples: counts })
}

/// `Ĝ_ij(s_i, s_f)`: interpolated `G°(s_f − s_i)†` left of zero, `G°(s_f − s_i)`
/// right of zero, and the thin `e^{i s_f H}|i⟩⟨j|e^{i s_i H}` across zero.
pub fn btb_basis_propagator(table: &BoldTable, spec: &SystemSpec, i: Spin, j: Spin, s_i: f64, s_f: f64) -> Result<Mat2> {
    if s_i > s_f {
        return Err(Error::ReversedInterval { start: s_i, end: s_f });
    }
    if s_f < 0.0 {
        Ok(table.interpolate(s_f - s_i)?.adjoint())
    } else if s_i >= 0.0 {
        table.interpolate(s_f - s_i)
    } else {
        let h = HermitianExp::new(&spec.hamiltonian())?;
        Ok(h.exp_i(s_f) * Mat2::dyad(i, j) * h.exp_i(s_i))
    }
}

/// `Û_ij(−t, s, t)` as a plain product of [`btb_basis_propagator`] segments.
pub fn btb_system_functional(
    table: &BoldTable,
    spec: &SystemSpec,
    t: f64,
    points: &[f64],
    basis: (Spin, Spin),
) -> Result<Mat2> {
    let first = points.first().copied().unwrap_or(t);
    let last = points.last().copied().unwrap_or(-t);
    if points.windows(2).any(|w| !(w[0] <= w[1])) || first < -t || last > t {
        return Err(Error::Unsorted);
    }
    let (i, j) = basis;
    let mut prev = -t;
    let mut acc = Mat2::identity();
    for &s in points {
        acc = spec.coupling * btb_basis_propagator(table, spec, i, j, prev, s)? * acc;
        prev = s;
    }
    Ok(btb_basis_propagator(table, spec, i, j, prev, t)? * acc)
}

/// Shell increment `D̂_ij` for the step from `t_n` to `t_{n+1}`.
pub fn estimate_d_shell_btb<E: Executor + ?Sized>(
    setup: &Setup,
    exec: &E,
    table: &BoldTable,
    n: usize,
) -> Result<(Basis, Vec<u64>)> {
    let w = setup.coupling();
    let bold = Bold { entries: &table.entries, dt: table.dt };
    shell_increment(setup, exec, n, Phase::BtbShell, &|ws, acc, t| {
        let m = ws.points.len();
        let neg = negatives(&ws.points);
        let lb = ws.influence(&setup.correlation, setup.cache.table(FamilyKind::Btb, m + 1, neg + 1), Some(t));
        let sign = if neg % 2 == 0 { 1.0 } else { -1.0 };
        let (x, y) = split_functional(&bold, &setup.hamiltonian, &w, &ws.points, neg, t)?;
        acc.add_split(&x, &y, i_pow(m + 1) * lb * sign);
        Ok(())
    })
}

/// Phase 2: Heun march with the BTB basis recurrence on a frozen table.
pub fn march_btb<E: Executor + ?Sized>(setup: &Setup, exec: &E, table: &BoldTable) -> Result<Trajectory> {
    if table.horizon() + 1e-9 < setup.config.horizon() {
        return Err(Error::OutsideHorizon { time: setup.config.horizon(), horizon: table.horizon() });
    }
    let mut acc = Basis::zero();
    march(setup, |n| {
        let (d, counts) = estimate_d_shell_btb(setup, exec, table, n)?;
        acc = Basis(setup.shift.apply(&acc.0));
        acc += d;
        Ok((setup.contract(&acc.0), counts))
    })
}

/// Both phases.
pub fn run_btb<E: Executor + ?Sized>(setup: &Setup, exec: &E) -> Result<(BoldTable, Trajectory)> {
    let table = solve_bold_propagator(setup, exec)?;
    let traj = march_btb(setup, exec, &table)?;
    Ok((table, traj))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::BathSpec;
    use crate::config::SolverConfig;
    use crate::exec::Serial;
    use crate::sampling::shift_map;
    use crate::system::coefficients_b;

    fn spec() -> SystemSpec {
        SystemSpec::spin_boson(0.6, 1.0)
    }

    /// A table with unrelated, non-unitary entries.
    fn scrambled(steps: usize, dt: f64) -> BoldTable {
        let entries = (0..=steps)
            .map(|k| {
                let x = k as f64;
                Mat2::new(c(1.0 - 0.1 * x, 0.3 * x.sin()), c(0.2 * x.cos(), -0.1), c(0.05 * x, 0.4), c(0.7, 0.02 * x * x))
            })
            .collect();
        BoldTable { entries, dt, samples: Vec::new() }
    }

    #[test]
    fn interpolation() {
        let t = scrambled(8, 0.25);
        for (k, e) in t.entries.iter().enumerate() {
            assert_eq!(t.interpolate(k as f64 * 0.25).unwrap().dist(e), 0.0);
        }
        let mid = (t.entries[3] + t.entries[4]) * 0.5;
        assert!(t.interpolate(0.875).unwrap().dist(&mid) < 1e-15);
        assert!(matches!(t.interpolate(2.1), Err(Error::OutsideHorizon { .. })));
        assert!(matches!(t.interpolate(-0.1), Err(Error::OutsideHorizon { .. })));
    }

    #[test]
    fn negative_segments_are_adjoints() {
        let t = scrambled(10, 0.2);
        let s = spec();
        for (a, b) in [(0.1, 0.7), (0.05, 1.9), (0.45, 0.45)] {
            let pos = btb_basis_propagator(&t, &s, Spin::Up, Spin::Down, a, b).unwrap();
            let neg = btb_basis_propagator(&t, &s, Spin::Up, Spin::Down, -b, -a).unwrap();
            assert!(neg.dist(&pos.adjoint()) < 1e-15);
        }
        let h = HermitianExp::new(&s.hamiltonian()).unwrap();
        let cross = btb_basis_propagator(&t, &s, Spin::Down, Spin::Up, -0.3, 0.5).unwrap();
        assert!(cross.dist(&(h.exp_i(0.5) * Mat2::dyad(Spin::Down, Spin::Up) * h.exp_i(-0.3))) < 1e-15);
    }

    #[test]
    fn split_matches_segment_product() {
        let t = scrambled(12, 0.2);
        let s = spec();
        let h = HermitianExp::new(&s.hamiltonian()).unwrap();
        let bold = Bold { entries: &t.entries, dt: t.dt };
        let horizon = 1.1;
        for pts in [&[][..], &[-0.2][..], &[-1.0, -0.4, 0.3][..], &[0.1, 0.5, 1.05][..], &[-1.1, -0.6, -0.05, 0.0, 0.9][..]] {
            let (x, y) = split_functional(&bold, &h, &s.coupling, pts, negatives(pts), horizon).unwrap();
            for i in Spin::ALL {
                for j in Spin::ALL {
                    let slow = btb_system_functional(&t, &s, horizon, pts, (i, j)).unwrap();
                    assert!(slow.dist(&(x * Mat2::dyad(i, j) * y)) < 1e-13, "{pts:?}");
                }
            }
        }
    }

    #[test]
    fn functional_basis_shift() {
        let s = spec();
        let dt = 0.2;
        let table = scrambled(12, dt);
        let b = coefficients_b(&s, dt).unwrap();
        let t = 1.4;
        let pts = [-1.2, -0.3, 0.0, 0.8, 1.1];
        let shifted = shift_map(&pts, dt);
        for i in Spin::ALL {
            for j in Spin::ALL {
                let lhs = btb_system_functional(&table, &s, t + dt, &shifted, (i, j)).unwrap();
                let mut rhs = Mat2::zero();
                for k in Spin::ALL {
                    for l in Spin::ALL {
                        rhs += btb_system_functional(&table, &s, t, &pts, (k, l))
                            .unwrap()
                            .scale(b.0[i.index()][j.index()][k.index()][l.index()]);
                    }
                }
                assert!(lhs.dist(&rhs) < 1e-12);
            }
        }
    }

    fn config(xi: f64, steps: usize) -> SolverConfig {
        SolverConfig::new(SystemSpec::spin_boson(1.0, 1.0), BathSpec::ohmic(2.5, xi, 5.0), steps)
    }

    #[test]
    fn uncoupled_bold_propagator_is_bare() {
        let setup = config(0.0, 60).prepare(&[FamilyKind::Connected, FamilyKind::Btb]).unwrap();
        let table = solve_bold_propagator(&setup, &Serial).unwrap();
        for (k, g) in table.entries.iter().enumerate() {
            assert!(g.dist(&setup.hamiltonian.exp_i(k as f64 * 0.05)) < 5e-3);
        }
        assert!(table.samples.iter().all(|&n| n == 0));
    }

    #[test]
    fn bare_table_march_stays_hermitian() {
        let mut cfg = config(0.2, 8);
        cfg.m0 = 2e3;
        let setup = cfg.prepare(&[FamilyKind::All, FamilyKind::Btb]).unwrap();
        let table = BoldTable::bare(&setup.hamiltonian, setup.dt(), 8);
        let traj = march_btb(&setup, &Serial, &table).unwrap();
        assert_eq!(traj.points.len(), 9);
        assert!(traj.max_hermitian_deviation < 1e-10);
    }

    #[test]
    fn horizon_is_enforced() {
        let setup = config(0.2, 8).prepare(&[FamilyKind::Btb]).unwrap();
        let short = BoldTable::bare(&setup.hamiltonian, setup.dt(), 4);
        assert!(matches!(march_btb(&setup, &Serial, &short), Err(Error::OutsideHorizon { .. })));
    }

    #[test]
    fn runs_are_deterministic() {
        let mut cfg = config(0.2, 6);
        cfg.m0 = 5e3;
        let setup = cfg.prepare(&[FamilyKind::Connected, FamilyKind::Btb]).unwrap();
        let a = run_btb(&setup, &Serial).unwrap();
        let b = run_btb(&setup, &Serial).unwrap();
        assert_eq!(a, b);
        assert!(a.0.samples.iter().sum::<u64>() > 0);
    }
}
