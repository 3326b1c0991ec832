//! Sweep configuration: TOML files with one section per concern, overridden by command-line flags.
//!
//! ```toml
//! [sweep]
//! backend = "large-k"
//! t_min = 0.05
//! t_max = 5.0
//! t_count = 40
//! k_min = 0.1
//! k_max = 4.0
//! k_count = 40
//! unknowns = ["T", "K"]
//!
//! [critical]
//! k_c = 0.618
//! t_k = 0.362
//!
//! [nrg]
//! lambda = 3.0
//! chain_length = 40
//! ```
//!
//! Every key is optional. The same section types double as the `clap` argument groups, so a flag
//! such as `--t-max` overrides `t_max` from the file.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use kondo_metrology::CriticalConstants64;
use kondo_nrg::NrgConfig;
use serde::{Deserialize, Serialize};

use crate::error::{validation, CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    /// Closed-form decoupled probe (`K ≫ T_K`).
    LargeK,
    /// Exact diagonalization with one bath orbital per channel.
    Nbl,
    /// Universal solution around the critical point (`B = 0`).
    Critical,
    /// One NRG run per coupling; temperatures are the shell temperatures.
    Nrg,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::LargeK => "large-k",
            Backend::Nbl => "nbl",
            Backend::Critical => "critical",
            Backend::Nrg => "nrg",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    Linear,
    Log,
}

/// `count` points from `min` to `max`, both included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl Range {
    pub fn validate(&self, name: &str) -> Result<()> {
        if self.count < 2 {
            return Err(validation(format!(
                "{name} range needs at least 2 points, got {}",
                self.count
            )));
        }
        if !(self.min.is_finite() && self.max.is_finite() && self.min < self.max) {
            return Err(validation(format!(
                "{name} range needs finite min < max, got [{}, {}]",
                self.min, self.max
            )));
        }
        if self.spacing == Spacing::Log && self.min <= 0.0 {
            return Err(validation(format!(
                "log-spaced {name} range must be positive, got min = {}",
                self.min
            )));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        let last = (self.count - 1) as f64;
        let mut pts: Vec<f64> = (0..self.count)
            .map(|i| {
                let f = i as f64 / last;
                match self.spacing {
                    Spacing::Linear => self.min + (self.max - self.min) * f,
                    Spacing::Log => self.min * (self.max / self.min).powf(f),
                }
            })
            .collect();
        pts[self.count - 1] = self.max;
        pts
    }
}

/// Grid, model and output settings.
#[derive(Debug, Clone, Default, PartialEq, Args, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    /// Model that evaluates each grid point (required here or in the file).
    #[arg(long, value_enum)]
    pub backend: Option<Backend>,
    /// Lowest temperature (default 0.1).
    #[arg(long)]
    pub t_min: Option<f64>,
    /// Highest temperature (default 10).
    #[arg(long)]
    pub t_max: Option<f64>,
    /// Number of temperatures, at least 2 (default 50).
    #[arg(long)]
    pub t_count: Option<usize>,
    /// Temperature spacing (default log).
    #[arg(long, value_enum)]
    pub t_spacing: Option<Spacing>,
    /// Lowest inter-impurity coupling (default 0.1).
    #[arg(long, allow_negative_numbers = true)]
    pub k_min: Option<f64>,
    /// Highest inter-impurity coupling (default 10).
    #[arg(long, allow_negative_numbers = true)]
    pub k_max: Option<f64>,
    /// Number of couplings, at least 2 (default 50).
    #[arg(long)]
    pub k_count: Option<usize>,
    /// Coupling spacing; log needs a positive range (default log).
    #[arg(long, value_enum)]
    pub k_spacing: Option<Spacing>,
    /// Kondo coupling `J`.
    #[arg(long)]
    pub exchange: Option<f64>,
    /// Magnetic field `B`.
    #[arg(long, allow_negative_numbers = true)]
    pub field: Option<f64>,
    /// Conduction half-bandwidth `D`.
    #[arg(long)]
    pub halfwidth: Option<f64>,
    /// Parameters treated as unknown, a non-empty subset of `T,K`.
    #[arg(long, value_delimiter = ',')]
    pub unknowns: Option<Vec<String>>,
    /// CSV destination; standard output when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

/// Critical-point constants; unset keys keep their `J = 1` defaults.
#[derive(Debug, Clone, Default, PartialEq, Args, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct CriticalSection {
    /// Critical inter-impurity coupling.
    #[arg(long)]
    pub k_c: Option<f64>,
    /// Kondo temperature of the critical point.
    #[arg(long)]
    pub t_k: Option<f64>,
    /// Crossover constant in `T* = c δK² / T_K`.
    #[arg(long = "crossover-c")]
    pub c: Option<f64>,
    /// Correlator at the critical fixed point.
    #[arg(long, allow_negative_numbers = true)]
    pub c_star: Option<f64>,
}

/// NRG discretization and truncation; unset keys keep the library defaults.
#[derive(Debug, Clone, Default, PartialEq, Args, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct NrgSection {
    /// Discretization parameter Λ.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Upper bound on the states kept per shell.
    #[arg(long)]
    pub kept_states: Option<usize>,
    /// Number of Wilson shells.
    #[arg(long)]
    pub chain_length: Option<usize>,
    /// Prefactor w in the shell temperature `T_n = w D Λ^(-(n-1)/2)`.
    #[arg(long)]
    pub temperature_prefactor: Option<f64>,
    /// Truncation energy in units of the shell scale.
    #[arg(long)]
    pub energy_cutoff: Option<f64>,
    /// Memory limit for one shell's diagonalization.
    #[arg(long)]
    pub memory_budget_bytes: Option<usize>,
}

/// Contents of a configuration file.
#[derive(Debug, Clone, Default, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub sweep: SweepSection,
    pub critical: CriticalSection,
    pub nrg: NrgSection,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        toml::from_str(&text).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn load_optional(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }
}

macro_rules! overlay {
    ($base:expr, $over:expr, $($field:ident),+) => {
        Self { $($field: $over.$field.or($base.$field)),+ }
    };
}

impl SweepSection {
    /// Fields set in `over` win.
    pub fn overlay(self, over: Self) -> Self {
        overlay!(
            self, over, backend, t_min, t_max, t_count, t_spacing, k_min, k_max, k_count,
            k_spacing, exchange, field, halfwidth, unknowns, output
        )
    }
}

impl CriticalSection {
    pub fn overlay(self, over: Self) -> Self {
        overlay!(self, over, k_c, t_k, c, c_star)
    }

    pub fn resolve(&self) -> Result<CriticalConstants64> {
        let d = CriticalConstants64::default();
        let consts = CriticalConstants64 {
            k_c: self.k_c.unwrap_or(d.k_c),
            t_k: self.t_k.unwrap_or(d.t_k),
            c: self.c.unwrap_or(d.c),
            c_star: self.c_star.unwrap_or(d.c_star),
        };
        consts.validate().map_err(|e| validation(e.to_string()))?;
        Ok(consts)
    }
}

impl NrgSection {
    pub fn overlay(self, over: Self) -> Self {
        overlay!(
            self,
            over,
            lambda,
            kept_states,
            chain_length,
            temperature_prefactor,
            energy_cutoff,
            memory_budget_bytes
        )
    }

    pub fn resolve(&self, halfwidth: f64) -> Result<NrgConfig> {
        let d = NrgConfig::default();
        let cfg = NrgConfig {
            lambda: self.lambda.unwrap_or(d.lambda),
            kept_states: self.kept_states.unwrap_or(d.kept_states),
            chain_length: self.chain_length.unwrap_or(d.chain_length),
            band_halfwidth: halfwidth,
            temperature_prefactor: self
                .temperature_prefactor
                .unwrap_or(d.temperature_prefactor),
            energy_cutoff: self.energy_cutoff.or(d.energy_cutoff),
            memory_budget_bytes: self.memory_budget_bytes.unwrap_or(d.memory_budget_bytes),
        };
        cfg.validate().map_err(|e| validation(e.to_string()))?;
        Ok(cfg)
    }
}

impl From<&NrgConfig> for NrgSection {
    fn from(c: &NrgConfig) -> Self {
        Self {
            lambda: Some(c.lambda),
            kept_states: Some(c.kept_states),
            chain_length: Some(c.chain_length),
            temperature_prefactor: Some(c.temperature_prefactor),
            energy_cutoff: c.energy_cutoff,
            memory_budget_bytes: Some(c.memory_budget_bytes),
        }
    }
}

impl From<&CriticalConstants64> for CriticalSection {
    fn from(c: &CriticalConstants64) -> Self {
        Self {
            k_c: Some(c.k_c),
            t_k: Some(c.t_k),
            c: Some(c.c),
            c_star: Some(c.c_star),
        }
    }
}

/// A fully resolved sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub backend: Backend,
    pub t: Range,
    pub k: Range,
    pub exchange: f64,
    pub field: f64,
    pub halfwidth: f64,
    /// Canonically ordered subset of `["T", "K"]`.
    pub unknowns: Vec<&'static str>,
    pub constants: CriticalConstants64,
    pub nrg: NrgConfig,
    pub output: Option<PathBuf>,
}

impl SweepConfig {
    /// Applies defaults to a merged file-plus-flags configuration and checks the grid invariants.
    pub fn resolve(file: FileConfig) -> Result<Self> {
        let s = file.sweep;
        let backend = s
            .backend
            .ok_or_else(|| validation("no backend given (large-k, nbl, critical or nrg)"))?;
        let range = |min: Option<f64>,
                     max: Option<f64>,
                     count: Option<usize>,
                     spacing: Option<Spacing>| Range {
            min: min.unwrap_or(0.1),
            max: max.unwrap_or(10.0),
            count: count.unwrap_or(50),
            spacing: spacing.unwrap_or(Spacing::Log),
        };
        let t = range(s.t_min, s.t_max, s.t_count, s.t_spacing);
        let k = range(s.k_min, s.k_max, s.k_count, s.k_spacing);
        t.validate("T")?;
        k.validate("K")?;
        let halfwidth = s.halfwidth.unwrap_or(1.0);
        if !(halfwidth > 0.0 && halfwidth.is_finite()) {
            return Err(validation(format!(
                "half-bandwidth must be positive, got {halfwidth}"
            )));
        }
        let exchange = s.exchange.unwrap_or(1.0);
        let field = s.field.unwrap_or(0.0);
        if !(exchange.is_finite() && field.is_finite()) {
            return Err(validation("J and B must be finite"));
        }
        Ok(Self {
            backend,
            t,
            k,
            exchange,
            field,
            halfwidth,
            unknowns: parse_unknowns(s.unknowns.as_deref())?,
            constants: file.critical.resolve()?,
            nrg: file.nrg.resolve(halfwidth)?,
            output: s.output,
        })
    }
}

fn parse_unknowns(names: Option<&[String]>) -> Result<Vec<&'static str>> {
    let Some(names) = names else {
        return Ok(vec!["T", "K"]);
    };
    if names.is_empty() {
        return Err(validation("unknown-parameter set is empty"));
    }
    let mut has = [false; 2];
    for n in names {
        match n.trim() {
            "T" => has[0] = true,
            "K" => has[1] = true,
            other => {
                return Err(validation(format!(
                    "unknown parameter {other:?}; only T and K can be estimated"
                )))
            }
        }
    }
    Ok(["T", "K"]
        .into_iter()
        .zip(has)
        .filter_map(|(n, h)| h.then_some(n))
        .collect())
}
