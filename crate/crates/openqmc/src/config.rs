//! Run configuration files.
//!
//! A run file is a flat JSON or TOML document. Every key is optional except
//! `steps`; matrices are either a name (`sigma_z`, `sigma_x`, `sigma_y`,
//! `identity`, `up`, `down`) or a 2×2 array whose entries are reals or
//! `[re, im]` pairs, in the basis `(|−1⟩, |1⟩)`.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use openqmc_core::{BathSpec, Complex64, CorrelationMode, Mat2, SolverConfig, Spin, SystemSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    BareDqmc,
    DysonDirect,
    DysonReuse,
    Btb,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::BareDqmc, Method::DysonDirect, Method::DysonReuse, Method::Btb];

    pub fn name(self) -> &'static str {
        match self {
            Method::BareDqmc => "bare-dqmc",
            Method::DysonDirect => "dyson-direct",
            Method::DysonReuse => "dyson-reuse",
            Method::Btb => "btb",
        }
    }
}

impl FromStr for Method {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| CliError::config("method", format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

/// A matrix given by name or by its entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Named(String),
    Explicit([[Entry; 2]; 2]),
}

impl MatrixSpec {
    pub fn named(name: &str) -> Self {
        MatrixSpec::Named(name.to_string())
    }

    pub fn resolve(&self, field: &'static str) -> CliResult<Mat2> {
        match self {
            MatrixSpec::Named(name) => match name.as_str() {
                "sigma_z" => Ok(Mat2::sigma_z()),
                "sigma_x" => Ok(Mat2::sigma_x()),
                "sigma_y" => Ok(Mat2::new(
                    Complex64::new(0.0, 0.0),
                    Complex64::new(0.0, -1.0),
                    Complex64::new(0.0, 1.0),
                    Complex64::new(0.0, 0.0),
                )),
                "identity" => Ok(Mat2::identity()),
                "up" => Ok(Mat2::dyad(Spin::Up, Spin::Up)),
                "down" => Ok(Mat2::dyad(Spin::Down, Spin::Down)),
                other => Err(CliError::config(field, format!("unknown matrix name `{other}`"))),
            },
            MatrixSpec::Explicit(rows) => {
                let z = |e: &Entry| match *e {
                    Entry::Real(re) => Complex64::new(re, 0.0),
                    Entry::Complex([re, im]) => Complex64::new(re, im),
                };
                Ok(Mat2([[z(&rows[0][0]), z(&rows[0][1])], [z(&rows[1][0]), z(&rows[1][1])]]))
            }
        }
    }
}

/// The run file as written, with defaults filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunFile {
    pub method: Method,
    pub epsilon: f64,
    pub delta: f64,
    pub observable: MatrixSpec,
    pub ws: MatrixSpec,
    pub rho_s: MatrixSpec,
    #[serde(rename = "L")]
    pub l: usize,
    pub omega_c: f64,
    /// Defaults to `4 ω_c`.
    pub omega_max: Option<f64>,
    pub xi: f64,
    pub beta: f64,
    pub dt: f64,
    pub steps: usize,
    pub mbar: usize,
    pub m0: f64,
    pub b_bound: Option<f64>,
    pub seed: u64,
    pub threads: usize,
    pub output: PathBuf,
}

impl Default for RunFile {
    fn default() -> Self {
        Self {
            method: Method::DysonReuse,
            epsilon: 0.0,
            delta: 1.0,
            observable: MatrixSpec::named("sigma_z"),
            ws: MatrixSpec::named("sigma_z"),
            rho_s: MatrixSpec::named("up"),
            l: 400,
            omega_c: 2.5,
            omega_max: None,
            xi: 0.2,
            beta: 5.0,
            dt: 0.05,
            steps: 0,
            mbar: 5,
            m0: 1e5,
            b_bound: None,
            seed: 0,
            threads: 1,
            output: PathBuf::from("openqmc.csv"),
        }
    }
}

impl RunFile {
    /// Parses TOML, or JSON when the text starts with `{`.
    pub fn parse(text: &str) -> CliResult<Self> {
        if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| CliError::config("config", e.to_string()))
        } else {
            toml::from_str(text).map_err(|e| CliError::config("config", e.to_string()))
        }
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::config("config", format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn resolve(&self) -> CliResult<RunConfig> {
        if self.threads == 0 {
            return Err(CliError::config("threads", "must be positive"));
        }
        let system = SystemSpec {
            epsilon: self.epsilon,
            delta: self.delta,
            observable: self.observable.resolve("observable")?,
            coupling: self.ws.resolve("ws")?,
            rho: self.rho_s.resolve("rho_s")?,
        };
        let bath = BathSpec {
            modes: self.l,
            omega_c: self.omega_c,
            omega_max: self.omega_max.unwrap_or(4.0 * self.omega_c),
            xi: self.xi,
            beta: self.beta,
        };
        let solver = SolverConfig {
            system,
            bath,
            dt: self.dt,
            steps: self.steps,
            mbar: self.mbar,
            m0: self.m0,
            b_bound: self.b_bound,
            seed: self.seed,
            correlation: CorrelationMode::Direct,
            quadrature: None,
        };
        solver.validate()?;
        Ok(RunConfig { method: self.method, solver, threads: self.threads, output: self.output.clone() })
    }
}

/// A validated run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub method: Method,
    pub solver: SolverConfig,
    pub threads: usize,
    pub output: PathBuf,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        RunFile::load(path)?.resolve()
    }
}
