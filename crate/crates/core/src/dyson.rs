//! Dyson-series solvers for `G(−t, t)`.
//!
//! The integro-differential form
//!
//! ```text
//! dG/dt = i[H_s, G] + W_s K + (W_s K)†
//! K(t)  = Σ_{m odd} i^{m+1} ∫_{−t ≤ s ≤ t} (−1)^{#s<0} U(−t, s, t) L_b(s, t) ds
//! ```
//!
//! is marched with Heun's method. [`run_dyson_direct`] samples the whole
//! simplex for every `K_n`. [`run_dyson_reuse`] keeps the four basis
//! accumulators `K_ij` with `K = Σ a_ij K_ij` and advances them by
//!
//! ```text
//! K_ij(t + Δt) = Σ_kl b^{ij}_kl K_kl(t) + D_ij(t + Δt)
//! ```
//!
//! where `D_ij` only integrates over the shell of configurations with some
//! `|s_j| ≤ Δt`. [`bare_dqmc_at`] evaluates the truncated series directly.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::config::Setup;
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::kernel::{i_pow, mc_sum, negatives, split_functional, Bare, Basis, StreamKey, Workspace};
use crate::mat2::{c, Mat2};
use crate::pairings::FamilyKind;
use crate::sampling::{
    bare_sample_count, factorial, sample_count, sample_shell, sample_simplex, CountKind, Phase,
};
use crate::system::{BasisShift, SystemSpec};
use crate::trajectory::{expected_observable, Trajectory, TrajectoryPoint};

/// Deviation from Hermiticity that aborts a march.
pub const HERMITICITY_ABORT: f64 = 1e-10;

/// The four basis accumulators at step `step`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KAccumulator {
    pub step: usize,
    pub k: Basis,
}

/// `K′_ij = Σ_kl b^{ij}_kl K_kl + D_ij`.
pub fn recurrence_update(k: &KAccumulator, b: &BasisShift, d: &Basis) -> KAccumulator {
    let mut next = Basis(b.apply(&k.k.0));
    next += *d;
    KAccumulator { step: k.step + 1, k: next }
}

/// `i[H, G] + W K + (W K)†`.
pub fn drift(h: &Mat2, w: &Mat2, g: &Mat2, k: &Mat2) -> Mat2 {
    let wk = *w * *k;
    h.commutator(g).scale(c(0.0, 1.0)) + wk + wk.adjoint()
}

/// One Heun step from `G_n` given `K_n` and `K_{n+1}`.
pub fn heun_step(gn: &Mat2, kn: &Mat2, kn1: &Mat2, dt: f64, spec: &SystemSpec) -> Mat2 {
    let h = spec.hamiltonian();
    let w = spec.coupling;
    let star = *gn + drift(&h, &w, gn, kn) * dt;
    let star2 = star + drift(&h, &w, &star, kn1) * dt;
    (*gn + star2) * 0.5
}

pub(crate) fn order_slot(m: usize) -> usize {
    (m - 1) / 2
}

/// Adds `i^{m+1} (−1)^{#neg} L(s, t) · X|i⟩⟨j|Y` for the sample in
/// `ws.points` to `acc`; `family` selects the pairing family and the system
/// functional uses bare segments.
fn dyson_sample(
    setup: &Setup,
    t: f64,
    family: FamilyKind,
) -> impl Fn(&mut Workspace, &mut Basis) -> Result<()> + Sync + Send + '_ {
    let w = setup.coupling();
    move |ws, acc| {
        let m = ws.points.len();
        let neg = negatives(&ws.points);
        let table = setup.cache.table(family, m + 1, neg + 1);
        let lb = ws.influence(&setup.correlation, table, Some(t));
        let sign = if neg % 2 == 0 { 1.0 } else { -1.0 };
        let weight = i_pow(m + 1) * lb * sign;
        let (x, y) = split_functional(&Bare(&setup.hamiltonian), &setup.hamiltonian, &w, &ws.points, neg, t)?;
        acc.add_split(&x, &y, weight);
        Ok(())
    }
}

/// Monte Carlo estimate of the shell increment `D_ij` for the step from
/// `t_n` to `t_{n+1}`, with the samples drawn per order.
pub fn estimate_d_shell<E: Executor + ?Sized>(setup: &Setup, exec: &E, n: usize) -> Result<(Basis, Vec<u64>)> {
    shell_increment(setup, exec, n, Phase::DysonShell, &|ws, acc, t| {
        dyson_sample(setup, t, FamilyKind::All)(ws, acc)
    })
}

type SampleEval<'a> = dyn Fn(&mut Workspace, &mut Basis, f64) -> Result<()> + Sync + Send + 'a;

pub(crate) fn shell_increment<E: Executor + ?Sized>(
    setup: &Setup,
    exec: &E,
    n: usize,
    phase: Phase,
    eval: &SampleEval<'_>,
) -> Result<(Basis, Vec<u64>)> {
    let dt = setup.dt();
    let (t_prev, t) = (setup.time(n), setup.time(n + 1));
    let mut d = Basis::zero();
    let mut counts = alloc::vec![0; order_slot(setup.budget.mbar) + 1];
    if setup.uncoupled() {
        return Ok((d, counts));
    }
    for m in setup.budget.orders() {
        let count = sample_count(CountKind::Shell, n, m, dt, &setup.budget)?;
        counts[order_slot(m)] = count;
        if count == 0 {
            continue;
        }
        let key = StreamKey { seed: setup.config.seed, phase, step: n, m };
        let sum: Basis = mc_sum(
            exec,
            key,
            count,
            |pts, rng| {
                sample_shell(pts, t_prev, dt, rng);
            },
            |ws, acc| eval(ws, acc, t),
        )?;
        let volume = ((2.0 * t).powi(m as i32) - (2.0 * t_prev).powi(m as i32)) / factorial(m);
        d += sum.scale_re(volume / count as f64);
    }
    Ok((d, counts))
}

/// Monte Carlo estimate of all `K_ij(t_n)` from samples of the full simplex.
pub fn estimate_k_full<E: Executor + ?Sized>(setup: &Setup, exec: &E, n: usize) -> Result<(Basis, Vec<u64>)> {
    let t = setup.time(n);
    let mut k = Basis::zero();
    let mut counts = alloc::vec![0; order_slot(setup.budget.mbar) + 1];
    if setup.uncoupled() || n == 0 {
        return Ok((k, counts));
    }
    for m in setup.budget.orders() {
        let count = sample_count(CountKind::DysonFull, n, m, setup.dt(), &setup.budget)?;
        counts[order_slot(m)] = count;
        if count == 0 {
            continue;
        }
        let key = StreamKey { seed: setup.config.seed, phase: Phase::DysonFull, step: n, m };
        let sum: Basis = mc_sum(
            exec,
            key,
            count,
            |pts, rng| sample_simplex(pts, -t, t, rng),
            dyson_sample(setup, t, FamilyKind::All),
        )?;
        let volume = (2.0 * t).powi(m as i32) / factorial(m);
        k += sum.scale_re(volume / count as f64);
    }
    Ok((k, counts))
}

/// Trapezoid panels per time step for a quadrature run with `quad_points`
/// nodes over `[−T, T]`.
pub fn panels_per_step(quad_points: usize, steps: usize) -> usize {
    ((quad_points as f64 / (2 * steps) as f64).round() as usize).max(1)
}

/// Composite trapezoid rule for the first-order term of `K_ij(t)` over
/// `s ∈ [lo, hi]` on one side of zero (`left` selects the side, so that a
/// node at 0 takes the corresponding one-sided limit).
fn trapezoid_first_order(setup: &Setup, t: f64, lo: f64, hi: f64, panels: usize, left: bool) -> Result<Basis> {
    let mut acc = Basis::zero();
    if panels == 0 || hi <= lo {
        return Ok(acc);
    }
    let h = (hi - lo) / panels as f64;
    let w = setup.coupling();
    let neg = usize::from(left);
    for k in 0..=panels {
        let s = if k == panels { hi } else { lo + k as f64 * h };
        let weight = if k == 0 || k == panels { 0.5 * h } else { h };
        let b = setup.correlation.at(s, t);
        let sign = if left { 1.0 } else { -1.0 };
        // i² (−1)^{neg} = −1 on the right, +1 on the left
        let (x, y) = split_functional(&Bare(&setup.hamiltonian), &setup.hamiltonian, &w, &[s], neg, t)?;
        acc.add_split(&x, &y, b * (sign * weight));
    }
    Ok(acc)
}

/// First-order `K_ij(t_n)` by the trapezoid rule with `panels` panels per
/// time step on each side of zero.
pub fn k1_quadrature(setup: &Setup, n: usize, panels: usize) -> Result<Basis> {
    let t = setup.time(n);
    let mut k = trapezoid_first_order(setup, t, -t, 0.0, n * panels, true)?;
    k += trapezoid_first_order(setup, t, 0.0, t, n * panels, false)?;
    Ok(k)
}

/// First-order shell increment `D_ij` for the step into `t_{n+1}`, on the
/// grid matching [`k1_quadrature`].
pub fn k1_quadrature_shell(setup: &Setup, n: usize, panels: usize) -> Result<Basis> {
    let (dt, t) = (setup.dt(), setup.time(n + 1));
    let mut d = trapezoid_first_order(setup, t, -dt, 0.0, panels, true)?;
    d += trapezoid_first_order(setup, t, 0.0, dt, panels, false)?;
    Ok(d)
}

fn check_hermitian(g: &Mat2, step: usize) -> Result<()> {
    let deviation = g.hermitian_deviation();
    if !g.is_finite() {
        return Err(Error::NonFinite("propagator"));
    }
    if deviation > HERMITICITY_ABORT {
        return Err(Error::HermiticityLost { step, deviation });
    }
    Ok(())
}

pub(crate) fn record(setup: &Setup, traj: &mut Trajectory, step: usize, g: Mat2, samples: Vec<u64>) -> Result<()> {
    check_hermitian(&g, step)?;
    let observable = expected_observable(&g, &setup.system().rho)?;
    traj.push(TrajectoryPoint { step, time: setup.time(step), g, observable, samples });
    Ok(())
}

/// Heun march driven by a per-step `K_{n+1}` provider.
pub(crate) fn march(
    setup: &Setup,
    mut next_k: impl FnMut(usize) -> Result<(Mat2, Vec<u64>)>,
) -> Result<Trajectory> {
    let spec = setup.system();
    let mut traj = Trajectory::default();
    let mut g = spec.observable;
    let mut k = Mat2::zero();
    record(setup, &mut traj, 0, g, alloc::vec![0; order_slot(setup.budget.mbar) + 1])?;
    for n in 0..setup.config.steps {
        let (k1, samples) = next_k(n)?;
        g = heun_step(&g, &k, &k1, setup.dt(), spec);
        record(setup, &mut traj, n + 1, g, samples)?;
        k = k1;
    }
    Ok(traj)
}

/// Heun march with every `K_n` sampled afresh from the full simplex.
pub fn run_dyson_direct<E: Executor + ?Sized>(setup: &Setup, exec: &E) -> Result<Trajectory> {
    let quad = setup.config.quadrature.map(|q| panels_per_step(q, setup.config.steps));
    march(setup, |n| match quad {
        Some(p) => Ok((setup.contract(&k1_quadrature(setup, n + 1, p)?.0), alloc::vec![0])),
        None => {
            let (k, counts) = estimate_k_full(setup, exec, n + 1)?;
            Ok((setup.contract(&k.0), counts))
        }
    })
}

/// Heun march with the basis recurrence; only shell samples are drawn.
pub fn run_dyson_reuse<E: Executor + ?Sized>(setup: &Setup, exec: &E) -> Result<Trajectory> {
    let quad = setup.config.quadrature.map(|q| panels_per_step(q, setup.config.steps));
    let mut acc = KAccumulator::default();
    march(setup, |n| {
        let (d, counts) = match quad {
            Some(p) => (k1_quadrature_shell(setup, n, p)?, alloc::vec![0]),
            None => estimate_d_shell(setup, exec, n)?,
        };
        acc = recurrence_update(&acc, &setup.shift, &d);
        Ok((setup.contract(&acc.k.0), counts))
    })
}

/// Bare-series estimate at `t_step`, truncated at the even order `M̄ + 1`.
///
/// Returns the raw (not necessarily Hermitian) estimate and the samples
/// drawn per even order.
pub fn bare_dqmc_at<E: Executor + ?Sized>(setup: &Setup, exec: &E, step: usize) -> Result<(Mat2, Vec<u64>)> {
    let t = setup.time(step);
    let spec = setup.system();
    let h = &setup.hamiltonian;
    let mut g = h.exp_i(t) * spec.observable * h.exp_i(-t);
    let top = setup.budget.mbar + 1;
    let mut counts = alloc::vec![0; top / 2];
    if setup.uncoupled() || step == 0 {
        return Ok((g, counts));
    }
    let w = setup.coupling();
    for m in (2..=top).step_by(2) {
        let count = bare_sample_count(t, m, &setup.budget);
        counts[m / 2 - 1] = count;
        if count == 0 {
            continue;
        }
        let key = StreamKey { seed: setup.config.seed, phase: Phase::Bare, step, m };
        let sum: Mat2 = mc_sum(
            exec,
            key,
            count,
            |pts, rng| sample_simplex(pts, -t, t, rng),
            |ws, acc: &mut Mat2| {
                let neg = negatives(&ws.points);
                let lb = ws.influence(&setup.correlation, setup.cache.table(FamilyKind::All, m, 1), None);
                let sign = if neg % 2 == 0 { 1.0 } else { -1.0 };
                let (x, y) = split_functional(&Bare(h), h, &w, &ws.points, neg, t)?;
                *acc += (x * spec.observable * y).scale(i_pow(m) * lb * sign);
                Ok(())
            },
        )?;
        let volume = (2.0 * t).powi(m as i32) / factorial(m);
        g += sum.scale_re(volume / count as f64);
    }
    Ok((g, counts))
}

/// Bare-series trajectory. Each stored `G_n` is the Hermitian part of the
/// estimate; the largest removed anti-Hermitian part is reported in
/// [`Trajectory::projection_residual`].
pub fn run_bare_dqmc<E: Executor + ?Sized>(setup: &Setup, exec: &E) -> Result<Trajectory> {
    let mut traj = Trajectory::default();
    for n in 0..=setup.config.steps {
        let (raw, counts) = bare_dqmc_at(setup, exec, n)?;
        let g = (raw + raw.adjoint()) * 0.5;
        traj.projection_residual = traj.projection_residual.max(raw.dist(&g));
        record(setup, &mut traj, n, g, counts)?;
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::BathSpec;
    use crate::config::SolverConfig;
    use crate::exec::Serial;
    use crate::mat2::HermitianExp;
    use num_complex::Complex64 as C64;

    fn config(eps: f64, delta: f64, xi: f64, steps: usize) -> SolverConfig {
        SolverConfig::new(SystemSpec::spin_boson(eps, delta), BathSpec::ohmic(2.5, xi, 5.0), steps)
    }

    fn closed_form(eps: f64, delta: f64, t: f64) -> f64 {
        let w2 = eps * eps + delta * delta;
        (eps * eps + delta * delta * (2.0 * w2.sqrt() * t).cos()) / w2
    }

    #[test]
    fn heun_without_memory() {
        let spec = SystemSpec::spin_boson(0.3, 0.0);
        let g = Mat2::sigma_z() * 0.7 + Mat2::identity();
        let z = Mat2::zero();
        assert!(heun_step(&g, &z, &z, 0.05, &spec).dist(&g) < 1e-16);

        let spec = SystemSpec::spin_boson(0.8, 1.0);
        let g = Mat2::new(c(0.2, 0.0), c(0.5, -0.3), c(0.5, 0.3), c(-0.9, 0.0));
        let u = HermitianExp::new(&spec.hamiltonian()).unwrap();
        let local = |dt: f64| {
            let step = heun_step(&g, &z, &z, dt, &spec);
            assert!(step.hermitian_deviation() < 1e-14);
            step.dist(&(u.exp_i(dt) * g * u.exp_i(-dt)))
        };
        let dt = 0.05;
        assert!(local(dt) < 1e-3);
        let rate = (local(dt) / local(dt / 2.0)).log2();
        assert!((2.8..3.2).contains(&rate), "rate {rate}");
        let k = Mat2::new(c(0.1, 0.2), c(-0.4, 0.1), c(0.3, 0.0), c(0.05, -0.6));
        assert!(heun_step(&g, &k, &(k * 2.0), dt, &spec).hermitian_deviation() < 1e-14);
    }

    #[test]
    fn recurrence_trivial_cases() {
        let spec = SystemSpec::spin_boson(0.5, 0.9);
        let mut k = KAccumulator::default();
        k.k.0[0][1] = Mat2::sigma_x();
        k.k.0[1][1] = Mat2::sigma_z() * 0.3;
        let id = crate::system::coefficients_b(&spec, 0.0).unwrap();
        let same = recurrence_update(&k, &id, &Basis::zero());
        assert_eq!(same.k, k.k);
        assert_eq!(same.step, 1);
        let b = crate::system::coefficients_b(&spec, 0.1).unwrap();
        let d = Basis([[Mat2::sigma_x(), Mat2::identity()], [Mat2::zero(), Mat2::sigma_z()]]);
        assert_eq!(recurrence_update(&KAccumulator::default(), &b, &d).k, d);
    }

    #[test]
    fn zero_coupling_follows_two_level_formula() {
        for (eps, delta) in [(0.0, 1.0), (1.0, 1.0), (0.5, 0.2)] {
            let setup = config(eps, delta, 0.0, 60).prepare(&[FamilyKind::All]).unwrap();
            for traj in [run_dyson_reuse(&setup, &Serial).unwrap(), run_dyson_direct(&setup, &Serial).unwrap()] {
                for p in &traj.points {
                    // global Heun error at dt = 0.05 is O(dt²) with a constant ~Ω³ t
                    assert!((p.observable - closed_form(eps, delta, p.time)).abs() < 0.02);
                }
                assert!(traj.max_hermitian_deviation < 1e-12);
            }
        }
    }

    #[test]
    fn bare_dqmc_limits() {
        let setup = config(1.0, 1.0, 0.2, 10).prepare(&[FamilyKind::All]).unwrap();
        let (g0, _) = bare_dqmc_at(&setup, &Serial, 0).unwrap();
        assert_eq!(g0, setup.system().observable);
        let free = config(1.0, 1.0, 0.0, 10).prepare(&[FamilyKind::All]).unwrap();
        let (g, counts) = bare_dqmc_at(&free, &Serial, 10).unwrap();
        let h = &free.hamiltonian;
        assert!(g.dist(&(h.exp_i(0.5) * Mat2::sigma_z() * h.exp_i(-0.5))) < 1e-15);
        assert!(counts.iter().all(|&c| c == 0));
    }

    #[test]
    fn quadrature_recurrence_is_exact() {
        let mut cfg = config(1.0, 1.0, 0.2, 12);
        cfg.mbar = 1;
        cfg.quadrature = Some(1200);
        let setup = cfg.prepare(&[FamilyKind::All]).unwrap();
        let p = panels_per_step(1200, 12);
        assert_eq!(p, 50);
        let mut k = KAccumulator { step: 0, k: k1_quadrature(&setup, 0, p).unwrap() };
        assert_eq!(k.k.max_abs(), 0.0);
        for n in 0..12 {
            let d = k1_quadrature_shell(&setup, n, p).unwrap();
            k = recurrence_update(&k, &setup.shift, &d);
            let direct = k1_quadrature(&setup, n + 1, p).unwrap();
            let mut diff = direct;
            diff += k.k.scale_re(-1.0);
            assert!(diff.max_abs() < 1e-13, "step {n}: {}", diff.max_abs());
        }
        let reuse = run_dyson_reuse(&setup, &Serial).unwrap();
        let direct = run_dyson_direct(&setup, &Serial).unwrap();
        assert!(reuse.sup_distance(&direct) < 1e-12);
    }

    #[test]
    fn quadrature_converges_at_second_order() {
        let mut cfg = config(1.0, 1.0, 0.2, 10);
        cfg.mbar = 1;
        let setup = cfg.prepare(&[FamilyKind::All]).unwrap();
        let reference = k1_quadrature(&setup, 10, 512).unwrap();
        let err = |p| {
            let mut d = k1_quadrature(&setup, 10, p).unwrap();
            d += reference.scale_re(-1.0);
            d.max_abs()
        };
        let (coarse, fine) = (err(4), err(8));
        let rate = (coarse / fine).log2();
        assert!((1.8..2.2).contains(&rate), "rate {rate}");
    }

    #[test]
    fn shell_monte_carlo_matches_quadrature() {
        let mut cfg = config(1.0, 1.0, 0.2, 20);
        cfg.mbar = 1;
        cfg.m0 = 2e7;
        let setup = cfg.prepare(&[FamilyKind::All]).unwrap();
        let n = 9;
        let exact = k1_quadrature_shell(&setup, n, 400).unwrap();
        // independent repeats estimate the standard error
        let reps: Vec<Basis> = (0..8)
            .map(|seed| {
                let mut c = cfg;
                c.seed = seed;
                let s = c.prepare(&[FamilyKind::All]).unwrap();
                estimate_d_shell(&s, &Serial, n).unwrap().0
            })
            .collect();
        for i in 0..2 {
            for j in 0..2 {
                for p in 0..2 {
                    for q in 0..2 {
                        let xs: Vec<C64> = reps.iter().map(|b| b.0[i][j].0[p][q]).collect();
                        let mean = xs.iter().sum::<C64>() / xs.len() as f64;
                        let var = xs.iter().map(|x| (x - mean).norm_sqr()).sum::<f64>() / (xs.len() - 1) as f64;
                        let se = (var / xs.len() as f64).sqrt();
                        let target = exact.0[i][j].0[p][q];
                        assert!((mean - target).norm() < 3.0 * se + 1e-9, "{mean} vs {target} ± {se}");
                    }
                }
            }
        }
    }

    #[test]
    fn pure_dephasing_keeps_population() {
        let mut cfg = config(0.7, 0.0, 0.2, 40);
        cfg.mbar = 1;
        cfg.quadrature = Some(4000);
        let setup = cfg.prepare(&[FamilyKind::All]).unwrap();
        let traj = run_dyson_reuse(&setup, &Serial).unwrap();
        for p in &traj.points {
            assert!((p.observable - 1.0).abs() < 1e-12, "{} {}", p.time, p.observable);
        }
    }
}
