//! Solver configuration and the derived, read-only run context.

use crate::bath::{discretize_bath, BathCorrelation, BathModes, BathSpec, Correlation, CorrelationTable};
use crate::error::{Error, Result};
use crate::mat2::{HermitianExp, Mat2};
use crate::pairings::{FamilyKind, PairingCache};
use crate::sampling::SampleBudget;
use crate::system::{coefficients_a, coefficients_b, BasisShift, SystemSpec};

/// How `B(Δτ)` is evaluated inside the samplers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CorrelationMode {
    /// Sum over all bath modes for every pair.
    #[default]
    Direct,
    /// Linear interpolation on a uniform grid over `[−T, T]`.
    Tabulated { points: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub system: SystemSpec,
    pub bath: BathSpec,
    pub dt: f64,
    /// Number of time steps `N`; the horizon is `T = N·dt`.
    pub steps: usize,
    /// Odd truncation order `M̄`.
    pub mbar: usize,
    pub m0: f64,
    /// `𝓑`; `None` selects `max |B| / 6` over `Δτ ∈ [−2T, 2T]`.
    pub b_bound: Option<f64>,
    pub seed: u64,
    pub correlation: CorrelationMode,
    /// Replaces Monte Carlo by a composite trapezoid rule with this many
    /// nodes over `[−T, T]`. Requires `M̄ = 1`.
    pub quadrature: Option<usize>,
}

impl SolverConfig {
    /// Spin-boson defaults: σ_z observable and coupling, `dt = 0.05`, `M̄ = 5`.
    pub fn new(system: SystemSpec, bath: BathSpec, steps: usize) -> Self {
        Self {
            system,
            bath,
            dt: 0.05,
            steps,
            mbar: 5,
            m0: 1e5,
            b_bound: None,
            seed: 0,
            correlation: CorrelationMode::Direct,
            quadrature: None,
        }
    }

    pub fn horizon(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        self.bath.validate()?;
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::invalid("dt", "must be positive"));
        }
        if self.steps == 0 {
            return Err(Error::invalid("steps", "must be positive"));
        }
        if let Some(b) = self.b_bound {
            if !(b.is_finite() && b >= 0.0) {
                return Err(Error::invalid("b_bound", "must be nonnegative"));
            }
        }
        SampleBudget { m0: self.m0, b_bound: 0.0, mbar: self.mbar }.validate()?;
        if let CorrelationMode::Tabulated { points } = self.correlation {
            if points < 2 {
                return Err(Error::invalid("b_table_points", "need at least two points"));
            }
        }
        if let Some(q) = self.quadrature {
            if self.mbar != 1 {
                return Err(Error::invalid("quad_points", "quadrature mode requires mbar = 1"));
            }
            if q < 2 {
                return Err(Error::invalid("quad_points", "need at least two nodes"));
            }
        }
        Ok(())
    }

    /// Validates the configuration and precomputes everything the solvers
    /// share: modes, correlation, `𝓑`, the `a`/`b` tensors and the pairing
    /// tables of the requested families.
    pub fn prepare(&self, families: &[FamilyKind]) -> Result<Setup> {
        self.validate()?;
        let modes = discretize_bath(&self.bath)?;
        let direct = BathCorrelation::new(&modes, self.bath.beta)?;
        let horizon = self.horizon();
        let b_bound = match self.b_bound {
            Some(b) => b,
            None => direct.default_bound(2.0 * horizon),
        };
        let correlation = match self.correlation {
            CorrelationMode::Direct => Correlation::Direct(direct),
            CorrelationMode::Tabulated { points } => {
                Correlation::Tabulated(CorrelationTable::new(&direct, horizon, points)?)
            }
        };
        let budget = SampleBudget { m0: self.m0, b_bound, mbar: self.mbar };
        budget.validate()?;
        let cache = PairingCache::new(self.mbar + 1, families)?;
        Ok(Setup {
            config: *self,
            hamiltonian: HermitianExp::new(&self.system.hamiltonian())?,
            a: coefficients_a(&self.system),
            shift: coefficients_b(&self.system, self.dt)?,
            modes,
            correlation,
            budget,
            cache,
        })
    }
}

/// Immutable context shared by all samples of a run.
#[derive(Debug, Clone)]
pub struct Setup {
    pub config: SolverConfig,
    pub hamiltonian: HermitianExp,
    pub a: [[num_complex::Complex64; 2]; 2],
    pub shift: BasisShift,
    pub modes: BathModes,
    pub correlation: Correlation,
    /// Budget with `𝓑` resolved.
    pub budget: SampleBudget,
    pub cache: PairingCache,
}

impl Setup {
    pub fn system(&self) -> &SystemSpec {
        &self.config.system
    }

    pub fn dt(&self) -> f64 {
        self.config.dt
    }

    pub fn time(&self, step: usize) -> f64 {
        step as f64 * self.config.dt
    }

    pub fn coupling(&self) -> Mat2 {
        self.config.system.coupling
    }

    /// True when the bath does not couple to the system.
    pub fn uncoupled(&self) -> bool {
        self.modes.coupling.iter().all(|&c| c == 0.0)
    }

    /// `Σ a_ij K_ij`.
    pub fn contract(&self, k: &[[Mat2; 2]; 2]) -> Mat2 {
        let mut out = Mat2::zero();
        for i in 0..2 {
            for j in 0..2 {
                out += k[i][j].scale(self.a[i][j]);
            }
        }
        out
    }
}
