use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::mat2::Mat2;

/// Largest imaginary residue tolerated in `tr(ρ_s G)`.
pub const IMAG_TOL: f64 = 1e-10;

/// `Re tr(ρ_s G)`; fails if either input is not Hermitian or the trace has an
/// imaginary part above [`IMAG_TOL`].
pub fn expected_observable(g: &Mat2, rho: &Mat2) -> Result<f64> {
    for m in [g, rho] {
        if !m.is_hermitian(1e-10) {
            return Err(Error::NotHermitian(m.hermitian_deviation()));
        }
    }
    let tr = (*rho * *g).trace();
    if tr.im.abs() > IMAG_TOL {
        return Err(Error::invalid("observable", alloc::format!("imaginary residue {:e}", tr.im)));
    }
    Ok(tr.re)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub step: usize,
    pub time: f64,
    pub g: Mat2,
    pub observable: f64,
    /// Samples drawn at this step, indexed by `(m − 1) / 2` for odd orders
    /// or `m / 2 − 1` for the even-order bare series.
    pub samples: Vec<u64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
    /// Largest `‖G_n − G_n†‖` over the stored points.
    pub max_hermitian_deviation: f64,
    /// Largest anti-Hermitian part removed before storing a point; zero
    /// unless the solver projects its estimates.
    pub projection_residual: f64,
}

impl Trajectory {
    pub fn push(&mut self, point: TrajectoryPoint) {
        self.max_hermitian_deviation = self.max_hermitian_deviation.max(point.g.hermitian_deviation());
        self.points.push(point);
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.time)
    }

    pub fn observables(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.observable)
    }

    /// Total samples drawn per order over the whole run.
    pub fn total_samples(&self) -> Vec<u64> {
        let len = self.points.iter().map(|p| p.samples.len()).max().unwrap_or(0);
        let mut out = alloc::vec![0; len];
        for p in &self.points {
            for (o, s) in out.iter_mut().zip(&p.samples) {
                *o += s;
            }
        }
        out
    }

    /// `max_n |obs_n − other.obs_n|` over common steps.
    pub fn sup_distance(&self, other: &Trajectory) -> f64 {
        self.observables()
            .zip(other.observables())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}
