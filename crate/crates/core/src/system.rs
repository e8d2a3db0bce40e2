//! System-side algebra: bare propagators, their observable-free basis, the
//! system associated functionals and the coefficient tensors `a`, `b`.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::mat2::{c, HermitianExp, Mat2, Spin, HERMITIAN_TOL};

/// Spin Hamiltonian `H_s = ε σ_z + Δ σ_x` with observable, coupling operator
/// and initial state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemSpec {
    pub epsilon: f64,
    pub delta: f64,
    /// Observable `Ô_s`.
    pub observable: Mat2,
    /// System part `W_s` of the coupling.
    pub coupling: Mat2,
    /// Initial density matrix `ρ_s`.
    pub rho: Mat2,
}

impl SystemSpec {
    /// σ_z observable and coupling, initial state `|1⟩⟨1|`.
    pub fn spin_boson(epsilon: f64, delta: f64) -> Self {
        Self {
            epsilon,
            delta,
            observable: Mat2::sigma_z(),
            coupling: Mat2::sigma_z(),
            rho: Mat2::dyad(Spin::Up, Spin::Up),
        }
    }

    pub fn hamiltonian(&self) -> Mat2 {
        Mat2::sigma_z() * self.epsilon + Mat2::sigma_x() * self.delta
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.delta.is_finite()) {
            return Err(Error::NonFinite("system hamiltonian"));
        }
        for (field, m) in [("observable", &self.observable), ("ws", &self.coupling), ("rho_s", &self.rho)] {
            if !m.is_finite() {
                return Err(Error::invalid(field, "non-finite entry"));
            }
            if !m.is_hermitian(HERMITIAN_TOL) {
                return Err(Error::invalid(field, "must be Hermitian"));
            }
        }
        if (self.rho.trace() - c(1.0, 0.0)).norm() > 1e-10 {
            return Err(Error::invalid("rho_s", "must have unit trace"));
        }
        // a Hermitian 2×2 matrix with unit trace is PSD iff det ≥ 0
        if self.rho.det().re < -1e-12 {
            return Err(Error::invalid("rho_s", "must be positive semidefinite"));
        }
        Ok(())
    }
}

/// `a[i][j] = ⟨i|Ô_s|j⟩`.
pub fn coefficients_a(spec: &SystemSpec) -> [[C64; 2]; 2] {
    spec.observable.0
}

/// `b[i][j][k][l] = ⟨k| e^{iΔt H_s} |i⟩⟨j| e^{−iΔt H_s} |l⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisShift(pub [[[[C64; 2]; 2]; 2]; 2]);

impl BasisShift {
    /// Applies `K′_{ij} = Σ_{kl} b^{ij}_{kl} K_{kl}` to four accumulators.
    pub fn apply(&self, k: &[[Mat2; 2]; 2]) -> [[Mat2; 2]; 2] {
        let mut out = [[Mat2::zero(); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = Mat2::zero();
                for kk in 0..2 {
                    for l in 0..2 {
                        acc += k[kk][l].scale(self.0[i][j][kk][l]);
                    }
                }
                out[i][j] = acc;
            }
        }
        out
    }
}

pub fn coefficients_b(spec: &SystemSpec, dt: f64) -> Result<BasisShift> {
    if !(dt >= 0.0) {
        return Err(Error::invalid("dt", "must be nonnegative"));
    }
    let u = HermitianExp::new(&spec.hamiltonian())?.exp_i(dt);
    let mut b = [[[[C64::new(0.0, 0.0); 2]; 2]; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    // ⟨j|e^{−iΔtH}|l⟩ = conj(⟨l|e^{iΔtH}|j⟩)
                    b[i][j][k][l] = u.0[k][i] * u.0[l][j].conj();
                }
            }
        }
    }
    Ok(BasisShift(b))
}

fn check_interval(s_i: f64, s_f: f64) -> Result<()> {
    if s_i <= s_f {
        Ok(())
    } else {
        Err(Error::ReversedInterval { start: s_i, end: s_f })
    }
}

/// Bare propagator `G_s^{(0)}(s_i, s_f)`:
///
/// ```text
/// e^{−i(s_f−s_i)H_s}               s_i ≤ s_f < 0
/// e^{−i(s_i−s_f)H_s}               0 ≤ s_i ≤ s_f
/// e^{i s_f H_s} Ô_s e^{i s_i H_s}   s_i < 0 ≤ s_f
/// ```
pub fn bare_propagator(spec: &SystemSpec, s_i: f64, s_f: f64) -> Result<Mat2> {
    check_interval(s_i, s_f)?;
    let h = HermitianExp::new(&spec.hamiltonian())?;
    Ok(if s_f < 0.0 || s_i >= 0.0 {
        h.exp_i(if s_f < 0.0 { s_i - s_f } else { s_f - s_i })
    } else {
        h.exp_i(s_f) * spec.observable * h.exp_i(s_i)
    })
}

/// Basis propagator `𝒢_{ij}^{(0)}`: the bare propagator with `Ô_s` replaced
/// by `|i⟩⟨j|` on the interval crossing zero.
pub fn basis_propagator(spec: &SystemSpec, i: Spin, j: Spin, s_i: f64, s_f: f64) -> Result<Mat2> {
    check_interval(s_i, s_f)?;
    let h = HermitianExp::new(&spec.hamiltonian())?;
    Ok(if s_f < 0.0 || s_i >= 0.0 {
        h.exp_i(if s_f < 0.0 { s_i - s_f } else { s_f - s_i })
    } else {
        h.exp_i(s_f) * Mat2::dyad(i, j) * h.exp_i(s_i)
    })
}

/// System associated functional
/// `G(s_m,t) W G(s_{m−1},s_m) ⋯ W G(−t,s_1)` built from bare propagators, or
/// from basis propagators when `basis` is given.
///
/// This is the straightforward segment-by-segment product; the solvers use a
/// faster factorized form that is tested against it.
pub fn system_functional(spec: &SystemSpec, t: f64, points: &[f64], basis: Option<(Spin, Spin)>) -> Result<Mat2> {
    let first = points.first().copied().unwrap_or(t);
    let last = points.last().copied().unwrap_or(-t);
    if points.windows(2).any(|w| !(w[0] <= w[1])) || first < -t || last > t {
        return Err(Error::Unsorted);
    }
    let seg = |a: f64, b: f64| match basis {
        Some((i, j)) => basis_propagator(spec, i, j, a, b),
        None => bare_propagator(spec, a, b),
    };
    let mut prev = -t;
    let mut acc = Mat2::identity();
    for &s in points {
        acc = spec.coupling * seg(prev, s)? * acc;
        prev = s;
    }
    Ok(seg(prev, t)? * acc)
}
