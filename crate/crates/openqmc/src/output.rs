//! CSV and metadata formats.
//!
//! Trajectory CSV columns: `n,t,re_g11,im_g11,re_g12,im_g12,re_g21,im_g21,re_g22,im_g22,obs`,
//! where `g11` is the `⟨−1|G|−1⟩` entry. Floats use the shortest
//! representation that round-trips, so equal values give equal bytes.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use openqmc_core::btb::BoldTable;
use openqmc_core::{Complex64, Mat2, Trajectory};
use serde::{Deserialize, Serialize};

use crate::config::{Entry, MatrixSpec, Method, RunConfig, RunFile};
use crate::error::{CliError, CliResult};

pub const TRAJECTORY_HEADER: &str = "n,t,re_g11,im_g11,re_g12,im_g12,re_g21,im_g21,re_g22,im_g22,obs";
pub const BOLD_HEADER: &str = "k,t,re_g11,im_g11,re_g12,im_g12,re_g21,im_g21,re_g22,im_g22";
pub const VARIANCE_HEADER: &str = "n,t,var_dyson,var_btb,ratio";
pub const BATH_HEADER: &str = "tau,re_b,im_b,abs_b";

/// One row of a trajectory CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub n: usize,
    pub t: f64,
    pub re_g11: f64,
    pub im_g11: f64,
    pub re_g12: f64,
    pub im_g12: f64,
    pub re_g21: f64,
    pub im_g21: f64,
    pub re_g22: f64,
    pub im_g22: f64,
    pub obs: f64,
}

impl TrajectoryRow {
    pub fn g(&self) -> Mat2 {
        let z = Complex64::new;
        Mat2::new(z(self.re_g11, self.im_g11), z(self.re_g12, self.im_g12), z(self.re_g21, self.im_g21), z(self.re_g22, self.im_g22))
    }
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display().to_string(), e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path.display().to_string(), e))
}

fn write_rows(path: &Path, header: &str, rows: impl Iterator<Item = String>) -> CliResult<()> {
    let mut w = create(path)?;
    let io = |e| CliError::io(path.display().to_string(), e);
    writeln!(w, "{header}").map_err(io)?;
    for row in rows {
        writeln!(w, "{row}").map_err(io)?;
    }
    w.flush().map_err(io)
}

fn entries(g: &Mat2) -> String {
    g.entries().iter().map(|z| format!("{},{}", z.re, z.im)).collect::<Vec<_>>().join(",")
}

pub fn write_trajectory(path: &Path, traj: &Trajectory) -> CliResult<()> {
    let rows = traj.points.iter().map(|p| format!("{},{},{},{}", p.step, p.time, entries(&p.g), p.observable));
    write_rows(path, TRAJECTORY_HEADER, rows)
}

pub fn read_trajectory(path: &Path) -> CliResult<Vec<TrajectoryRow>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::Format(format!("{}: {e}", path.display())))?;
    reader
        .deserialize()
        .collect::<Result<Vec<TrajectoryRow>, _>>()
        .map_err(|e| CliError::Format(format!("{}: {e}", path.display())))
}

pub fn write_bold_table(path: &Path, table: &BoldTable) -> CliResult<()> {
    let rows = table.entries.iter().enumerate().map(|(k, g)| format!("{k},{},{}", k as f64 * table.dt, entries(g)));
    write_rows(path, BOLD_HEADER, rows)
}

/// Per-step variances of two estimators and their ratio.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VarianceTable {
    pub times: Vec<f64>,
    pub dyson: Vec<f64>,
    pub btb: Vec<f64>,
}

impl VarianceTable {
    /// `Var^D / Var^BTB`; NaN where both vanish.
    pub fn ratio(&self, n: usize) -> f64 {
        self.dyson[n] / self.btb[n]
    }
}

pub fn write_variance(path: &Path, v: &VarianceTable) -> CliResult<()> {
    let rows = (0..v.times.len()).map(|n| format!("{n},{},{},{},{}", v.times[n], v.dyson[n], v.btb[n], v.ratio(n)));
    write_rows(path, VARIANCE_HEADER, rows)
}

pub fn write_bath(path: &Path, samples: &[(f64, Complex64)]) -> CliResult<()> {
    let rows = samples.iter().map(|(tau, b)| format!("{tau},{},{},{}", b.re, b.im, b.norm()));
    write_rows(path, BATH_HEADER, rows)
}

/// Monotonic wall-clock seconds per phase.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WallTimes {
    /// Bold propagator pre-solve (BTB only).
    pub bold_s: f64,
    pub march_s: f64,
    pub total_s: f64,
}

/// Sidecar document written next to every trajectory CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub method: Method,
    /// Complete run file; loading it back reproduces the run.
    pub config: RunFile,
    pub b_bound_auto: bool,
    pub rho_s_default: bool,
    /// Total samples per diagram order over the march.
    pub samples_per_order: BTreeMap<usize, u64>,
    /// Total samples per odd order spent on the bold propagator.
    pub bold_samples_per_order: BTreeMap<usize, u64>,
    pub wall_times: WallTimes,
    pub max_hermitian_deviation: f64,
    pub projection_residual: f64,
    pub bold_table: Option<PathBuf>,
}

/// `out.csv` → `out.meta.json`.
pub fn metadata_path(csv: &Path) -> PathBuf {
    csv.with_extension("meta.json")
}

/// `out.csv` → `out.bold.csv`.
pub fn bold_table_path(csv: &Path) -> PathBuf {
    csv.with_extension("bold.csv")
}

pub fn write_metadata(path: &Path, meta: &Metadata) -> CliResult<()> {
    let mut w = create(path)?;
    let io = |e| CliError::io(path.display().to_string(), e);
    serde_json::to_writer_pretty(&mut w, meta).map_err(|e| CliError::Format(e.to_string()))?;
    writeln!(w).map_err(io)?;
    w.flush().map_err(io)
}

pub fn read_metadata(path: &Path) -> CliResult<Metadata> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Format(format!("{}: {e}", path.display())))
}

fn explicit(m: &Mat2) -> MatrixSpec {
    let e = |z: Complex64| Entry::Complex([z.re, z.im]);
    MatrixSpec::Explicit([[e(m.0[0][0]), e(m.0[0][1])], [e(m.0[1][0]), e(m.0[1][1])]])
}

/// Run file with every value spelled out, including the resolved `𝓑`.
pub fn resolved_run_file(config: &RunConfig, b_bound: f64) -> RunFile {
    let s = &config.solver;
    RunFile {
        method: config.method,
        epsilon: s.system.epsilon,
        delta: s.system.delta,
        observable: explicit(&s.system.observable),
        ws: explicit(&s.system.coupling),
        rho_s: explicit(&s.system.rho),
        l: s.bath.modes,
        omega_c: s.bath.omega_c,
        omega_max: Some(s.bath.omega_max),
        xi: s.bath.xi,
        beta: s.bath.beta,
        dt: s.dt,
        steps: s.steps,
        mbar: s.mbar,
        m0: s.m0,
        b_bound: Some(b_bound),
        seed: s.seed,
        threads: config.threads,
        output: config.output.clone(),
    }
}
