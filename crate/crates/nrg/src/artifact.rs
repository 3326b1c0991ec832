//! On-disk run artifacts.
//!
//! An artifact is a directory holding `manifest.toml` and one text table per shell for the
//! impurity run (`shells/`) and its free-chain reference (`reference/`). Tables are
//! tab-separated with one row per eigenstate (tabs shown as spaces):
//!
//! ```text
//! # kondo-nrg shell table v1
//! # shell=12 scale=1.2e-6 temperature=4.1e-7
//! q_l  q_r  sz2  kept  energy  SpinCorrelation
//! 0  0  0  1  0  -0.61
//! 0  0  0  0  7.3  -
//! ```
//!
//! Observable columns hold the kept-basis diagonal and `-` for discarded states. Numbers use
//! Rust's shortest round-trip formatting, so a saved run reloads bit-identically.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::chain::NrgConfig;
use crate::engine::{ModelParams, Observable, SectorRecord, ShellRecord};
use crate::error::{NrgError, Result};
use crate::thermo::{thermodynamics, FlowTables};

/// Layout version written to every manifest and table header.
pub const FORMAT_VERSION: u32 = 1;
const FORMAT_NAME: &str = "kondo-nrg-run";
const TABLE_HEADER: &str = "# kondo-nrg shell table v1";

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format: String,
    version: u32,
    config: ConfigEntry,
    model: ModelEntry,
    shells: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct ConfigEntry {
    lambda: f64,
    kept_states: usize,
    chain_length: usize,
    band_halfwidth: f64,
    temperature_prefactor: f64,
    energy_cutoff: Option<f64>,
    memory_budget_bytes: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelEntry {
    coupling: f64,
    exchange: f64,
    field: f64,
}

/// A run reloaded from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifact {
    pub config: NrgConfig,
    pub params: ModelParams,
    pub shells: Vec<ShellRecord>,
    pub reference: Vec<ShellRecord>,
}

impl RunArtifact {
    pub fn flow(&self) -> Result<FlowTables> {
        thermodynamics(&self.shells, &self.reference)
    }
}

fn artifact_error(path: &Path, msg: impl std::fmt::Display) -> NrgError {
    NrgError::Artifact(format!("{}: {msg}", path.display()))
}

fn observable_name(o: Observable) -> &'static str {
    match o {
        Observable::SpinCorrelation => "SpinCorrelation",
        Observable::Magnetization => "Magnetization",
        Observable::MagnetizationSquared => "MagnetizationSquared",
    }
}

fn parse_observable(name: &str) -> Option<Observable> {
    [
        Observable::SpinCorrelation,
        Observable::Magnetization,
        Observable::MagnetizationSquared,
    ]
    .into_iter()
    .find(|&o| observable_name(o) == name)
}

fn shell_file(dir: &Path, n: usize) -> PathBuf {
    dir.join(format!("shell_{n:03}.tsv"))
}

fn write_table(shell: &ShellRecord) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{TABLE_HEADER}");
    let _ = writeln!(
        out,
        "# shell={} scale={} temperature={}",
        shell.shell, shell.scale, shell.temperature
    );
    out.push_str("q_l\tq_r\tsz2\tkept\tenergy");
    for &o in &shell.observables {
        let _ = write!(out, "\t{}", observable_name(o));
    }
    out.push('\n');
    for s in &shell.sectors {
        for (i, e) in s.energies.iter().enumerate() {
            let kept = i < s.kept;
            let _ = write!(
                out,
                "{}\t{}\t{}\t{}\t{e}",
                s.channel_charge[0], s.channel_charge[1], s.sz2, kept as u8
            );
            for diag in &s.observables {
                match kept {
                    true => _ = write!(out, "\t{}", diag[i]),
                    false => out.push_str("\t-"),
                }
            }
            out.push('\n');
        }
    }
    out
}

fn parse_table(path: &Path, text: &str) -> Result<ShellRecord> {
    let bad = |msg: &str| artifact_error(path, msg);
    let mut lines = text.lines();
    if lines.next() != Some(TABLE_HEADER) {
        return Err(bad("unsupported table header"));
    }
    let meta = lines
        .next()
        .and_then(|l| l.strip_prefix("# "))
        .ok_or_else(|| bad("missing metadata line"))?;
    let mut fields = meta.split(' ').filter_map(|kv| kv.split_once('='));
    let mut meta_value = |key: &str| -> Result<&str> {
        match fields.next() {
            Some((k, v)) if k == key => Ok(v),
            _ => Err(bad(&format!("expected `{key}` in metadata"))),
        }
    };
    let number = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| bad(&format!("bad number `{s}`")))
    };
    let shell_index: usize = meta_value("shell")?
        .parse()
        .map_err(|_| bad("bad shell index"))?;
    let scale = number(meta_value("scale")?)?;
    let temperature = number(meta_value("temperature")?)?;

    let columns: Vec<&str> = lines
        .next()
        .ok_or_else(|| bad("missing column header"))?
        .split('\t')
        .collect();
    if columns.len() < 5 || columns[..5] != ["q_l", "q_r", "sz2", "kept", "energy"] {
        return Err(bad("unexpected columns"));
    }
    let observables = columns[5..]
        .iter()
        .map(|c| parse_observable(c).ok_or_else(|| bad(&format!("unknown observable `{c}`"))))
        .collect::<Result<Vec<_>>>()?;

    let mut sectors: Vec<SectorRecord> = Vec::new();
    for line in lines.filter(|l| !l.is_empty()) {
        let cells: Vec<&str> = line.split('\t').collect();
        if cells.len() != columns.len() {
            return Err(bad("row width does not match header"));
        }
        let int = |s: &str| {
            s.parse::<i32>()
                .map_err(|_| bad(&format!("bad integer `{s}`")))
        };
        let (charge, sz2) = ([int(cells[0])?, int(cells[1])?], int(cells[2])?);
        let kept = match cells[3] {
            "1" => true,
            "0" => false,
            other => return Err(bad(&format!("bad kept flag `{other}`"))),
        };
        let fresh = sectors
            .last()
            .is_none_or(|s| s.channel_charge != charge || s.sz2 != sz2);
        if fresh {
            sectors.push(SectorRecord {
                channel_charge: charge,
                sz2,
                energies: Vec::new(),
                kept: 0,
                observables: vec![Vec::new(); observables.len()],
            });
        }
        let sector = sectors.last_mut().expect("sector pushed above");
        if kept && sector.kept != sector.energies.len() {
            return Err(bad("kept states must precede discarded ones"));
        }
        sector.energies.push(number(cells[4])?);
        if kept {
            sector.kept += 1;
            for (diag, cell) in sector.observables.iter_mut().zip(&cells[5..]) {
                diag.push(number(cell)?);
            }
        }
    }
    Ok(ShellRecord {
        shell: shell_index,
        scale,
        temperature,
        observables,
        sectors,
    })
}

fn write_shells(dir: &Path, shells: &[ShellRecord]) -> Result<()> {
    fs::create_dir_all(dir)?;
    for s in shells {
        fs::write(shell_file(dir, s.shell), write_table(s))?;
    }
    Ok(())
}

fn read_shells(dir: &Path, count: usize) -> Result<Vec<ShellRecord>> {
    (0..count)
        .map(|n| {
            let path = shell_file(dir, n);
            let text = fs::read_to_string(&path).map_err(|e| match e.kind() {
                std::io::ErrorKind::NotFound => NrgError::NotFound(path.clone()),
                _ => e.into(),
            })?;
            parse_table(&path, &text)
        })
        .collect()
}

/// Writes an impurity run and its reference to `dir`, creating it if needed.
pub fn save_run(
    dir: &Path,
    config: &NrgConfig,
    params: &ModelParams,
    shells: &[ShellRecord],
    reference: &[ShellRecord],
) -> Result<()> {
    if reference.len() < shells.len() {
        return Err(NrgError::InvalidInput(
            "reference run is shorter than the impurity run".into(),
        ));
    }
    let manifest = Manifest {
        format: FORMAT_NAME.into(),
        version: FORMAT_VERSION,
        config: ConfigEntry {
            lambda: config.lambda,
            kept_states: config.kept_states,
            chain_length: config.chain_length,
            band_halfwidth: config.band_halfwidth,
            temperature_prefactor: config.temperature_prefactor,
            energy_cutoff: config.energy_cutoff,
            memory_budget_bytes: config.memory_budget_bytes,
        },
        model: ModelEntry {
            coupling: params.coupling,
            exchange: params.exchange,
            field: params.field,
        },
        shells: shells.len(),
    };
    fs::create_dir_all(dir)?;
    let text = toml::to_string(&manifest).map_err(|e| artifact_error(dir, e))?;
    fs::write(dir.join("manifest.toml"), text)?;
    write_shells(&dir.join("shells"), shells)?;
    write_shells(&dir.join("reference"), &reference[..shells.len()])
}

/// Loads a run written by [`save_run`]. A missing directory or table gives
/// [`NrgError::NotFound`].
pub fn load_run(dir: &Path) -> Result<RunArtifact> {
    let manifest_path = dir.join("manifest.toml");
    if !manifest_path.is_file() {
        return Err(NrgError::NotFound(manifest_path));
    }
    let manifest: Manifest = toml::from_str(&fs::read_to_string(&manifest_path)?)
        .map_err(|e| artifact_error(&manifest_path, e))?;
    if manifest.format != FORMAT_NAME || manifest.version != FORMAT_VERSION {
        return Err(artifact_error(
            &manifest_path,
            format!(
                "unsupported layout {} v{}",
                manifest.format, manifest.version
            ),
        ));
    }
    let c = manifest.config;
    let config = NrgConfig {
        lambda: c.lambda,
        kept_states: c.kept_states,
        chain_length: c.chain_length,
        band_halfwidth: c.band_halfwidth,
        temperature_prefactor: c.temperature_prefactor,
        energy_cutoff: c.energy_cutoff,
        memory_budget_bytes: c.memory_budget_bytes,
    };
    config.validate()?;
    let params = ModelParams::new(
        manifest.model.coupling,
        manifest.model.exchange,
        manifest.model.field,
    )?;
    Ok(RunArtifact {
        config,
        params,
        shells: read_shells(&dir.join("shells"), manifest.shells)?,
        reference: read_shells(&dir.join("reference"), manifest.shells)?,
    })
}
