//! Method dispatch and timing.

use std::collections::BTreeMap;
use std::time::Instant;

use openqmc_core::btb::{march_btb, solve_bold_propagator, BoldTable};
use openqmc_core::dyson::{run_bare_dqmc, run_dyson_direct, run_dyson_reuse};
use openqmc_core::{Executor, FamilyKind, Setup, Trajectory};

use crate::config::{Method, RunConfig};
use crate::error::CliResult;
use crate::exec::Parallel;
use crate::output::{
    bold_table_path, metadata_path, resolved_run_file, write_bold_table, write_metadata, write_trajectory, Metadata,
    WallTimes,
};

/// Pairing families each method samples.
pub fn families(method: Method) -> &'static [FamilyKind] {
    match method {
        Method::BareDqmc | Method::DysonDirect | Method::DysonReuse => &[FamilyKind::All],
        Method::Btb => &[FamilyKind::Connected, FamilyKind::Btb],
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trajectory: Trajectory,
    pub bold: Option<BoldTable>,
    pub wall_times: WallTimes,
    /// `𝓑` actually used.
    pub b_bound: f64,
}

/// Runs `method` on a prepared setup.
pub fn run_prepared<E: Executor>(method: Method, setup: &Setup, exec: &E) -> CliResult<RunOutput> {
    let start = Instant::now();
    let mut bold = None;
    let mut bold_s = 0.0;
    let trajectory = match method {
        Method::BareDqmc => run_bare_dqmc(setup, exec)?,
        Method::DysonDirect => run_dyson_direct(setup, exec)?,
        Method::DysonReuse => run_dyson_reuse(setup, exec)?,
        Method::Btb => {
            let table = solve_bold_propagator(setup, exec)?;
            bold_s = start.elapsed().as_secs_f64();
            let traj = march_btb(setup, exec, &table)?;
            bold = Some(table);
            traj
        }
    };
    let total_s = start.elapsed().as_secs_f64();
    let wall_times = WallTimes { bold_s, march_s: total_s - bold_s, total_s };
    Ok(RunOutput { trajectory, bold, wall_times, b_bound: setup.budget.b_bound })
}

/// Validates, prepares and runs `config` on `config.threads` threads.
pub fn run_experiment(config: &RunConfig) -> CliResult<RunOutput> {
    let setup = config.solver.prepare(families(config.method))?;
    let exec = Parallel::new(config.threads)?;
    run_prepared(config.method, &setup, &exec)
}

fn order_map(method: Method, totals: &[u64]) -> BTreeMap<usize, u64> {
    let order = |k: usize| if method == Method::BareDqmc { 2 * k + 2 } else { 2 * k + 1 };
    totals.iter().enumerate().map(|(k, &n)| (order(k), n)).collect()
}

/// Metadata document for a finished run.
pub fn metadata(config: &RunConfig, out: &RunOutput, bold_table: bool) -> Metadata {
    let bold_samples = out.bold.as_ref().map(|b| order_map(Method::Btb, &b.samples)).unwrap_or_default();
    Metadata {
        method: config.method,
        config: resolved_run_file(config, out.b_bound),
        b_bound_auto: config.solver.b_bound.is_none(),
        rho_s_default: config.solver.system.rho == openqmc_core::SystemSpec::spin_boson(0.0, 0.0).rho,
        samples_per_order: order_map(config.method, &out.trajectory.total_samples()),
        bold_samples_per_order: bold_samples,
        wall_times: out.wall_times,
        max_hermitian_deviation: out.trajectory.max_hermitian_deviation,
        projection_residual: out.trajectory.projection_residual,
        bold_table: if bold_table && out.bold.is_some() { Some(bold_table_path(&config.output)) } else { None },
    }
}

/// Writes the trajectory CSV, its metadata sidecar and, if asked and
/// available, the bold table.
pub fn write_outputs(config: &RunConfig, out: &RunOutput, bold_table: bool) -> CliResult<()> {
    write_trajectory(&config.output, &out.trajectory)?;
    let meta = metadata(config, out, bold_table);
    if let (Some(path), Some(table)) = (&meta.bold_table, &out.bold) {
        write_bold_table(path, table)?;
    }
    write_metadata(&metadata_path(&config.output), &meta)
}
