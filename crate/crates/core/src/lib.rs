//! Real-time diagrammatic Monte Carlo for the spin-boson model.
//!
//! The crate evolves the Heisenberg-picture propagator `G(−t, t)` of a
//! two-level system coupled to a discretized harmonic bath. Three solvers are
//! provided:
//!
//! * [`dyson`]: the Dyson-series integro-differential equation, either
//!   re-sampling the whole memory kernel every step or updating four basis
//!   accumulators through a linear recurrence so only a thin shell of new
//!   time configurations is sampled per step;
//! * [`btb`]: the bold-thin-bold resummation, which first tabulates a
//!   one-sided bold propagator and then runs the same recurrence over a
//!   reduced diagram family;
//! * [`dyson::bare_dqmc_at`]: the plain truncated series, for reference.
//!
//! The crate is `no_std` (with `alloc`). Parallel sample evaluation is
//! delegated to an [`exec::Executor`] supplied by the caller; the serial
//! executor bundled here yields bitwise-identical results.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod bath;
pub mod btb;
pub mod config;
pub mod dyson;
pub mod error;
pub mod exec;
mod kernel;
pub mod mat2;
pub mod pairings;
pub mod sampling;
pub mod system;
pub mod trajectory;

pub use bath::{BathCorrelation, BathModes, BathSpec};
pub use config::{CorrelationMode, Setup, SolverConfig};
pub use error::{Error, Result};
pub use exec::{Executor, Serial};
pub use kernel::Basis;
pub use mat2::{matexp_herm, Mat2, Spin};
pub use num_complex::Complex64;
pub use pairings::{FamilyKind, Pairing, PairingFamily};
pub use system::SystemSpec;
pub use trajectory::{expected_observable, Trajectory, TrajectoryPoint};
