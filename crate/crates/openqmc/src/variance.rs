//! Repeated low-budget runs against high-budget references.

use openqmc_core::{Serial, Trajectory};
use rayon::prelude::*;

use crate::config::{Method, RunConfig};
use crate::error::{CliError, CliResult};
use crate::experiment::{families, run_prepared};
use crate::output::{TrajectoryRow, VarianceTable};

/// Mean squared deviation of `repeats` runs of `method` from `reference`,
/// per time step. Repeat `r` uses seed `config.solver.seed + r` unless
/// `same_seed` is set; repeats run concurrently, each on one thread.
pub fn mean_squared_deviation(
    config: &RunConfig,
    method: Method,
    repeats: usize,
    reference: &[f64],
    same_seed: bool,
) -> CliResult<Vec<f64>> {
    if repeats < 2 {
        return Err(CliError::config("repeats", "need at least two repeats"));
    }
    let steps = config.solver.steps + 1;
    if reference.len() < steps {
        return Err(CliError::config("reference", format!("has {} rows, need {steps}", reference.len())));
    }
    let base = config.solver.prepare(families(method))?;
    let pool = crate::exec::Parallel::new(config.threads)?;
    let runs: Vec<CliResult<Trajectory>> = pool.install(|| {
        (0..repeats)
            .into_par_iter()
            .map(|r| {
                let mut setup = base.clone();
                if !same_seed {
                    setup.config.seed = setup.config.seed.wrapping_add(r as u64);
                }
                Ok(run_prepared(method, &setup, &Serial)?.trajectory)
            })
            .collect()
    });
    let mut acc = vec![0.0; steps];
    for run in runs {
        for (a, (obs, r)) in acc.iter_mut().zip(run?.observables().zip(reference)) {
            *a += (obs - r) * (obs - r);
        }
    }
    Ok(acc.into_iter().map(|s| s / repeats as f64).collect())
}

/// Dyson-reuse and BTB variances; each method is compared with its own
/// reference.
pub fn variance_harness(
    config: &RunConfig,
    repeats: usize,
    reference_dyson: &[TrajectoryRow],
    reference_btb: &[TrajectoryRow],
) -> CliResult<VarianceTable> {
    let obs = |rows: &[TrajectoryRow]| rows.iter().map(|r| r.obs).collect::<Vec<_>>();
    let dyson = mean_squared_deviation(config, Method::DysonReuse, repeats, &obs(reference_dyson), false)?;
    let btb = mean_squared_deviation(config, Method::Btb, repeats, &obs(reference_btb), false)?;
    let times = (0..=config.solver.steps).map(|n| n as f64 * config.solver.dt).collect();
    Ok(VarianceTable { times, dyson, btb })
}
