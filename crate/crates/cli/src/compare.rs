//! NRG correlators and derivatives against the universal critical-point solution.

use std::path::PathBuf;

use kondo_metrology::critical;
use kondo_metrology::CriticalConstants64;
use kondo_nrg::{load_run, metrology_from_flows, MetrologyGrid};

use crate::error::{validation, Result};
use crate::fmt_num;

pub const COMPARE_VERSION: &str = "# kondo-metro compare v1";

pub const COMPARE_HEADER: [&str; 14] = [
    "T_over_TK",
    "dK_over_TK",
    "C_nrg",
    "C_exact",
    "dC_dT_nrg",
    "dC_dT_exact",
    "dC_dK_nrg",
    "dC_dK_exact",
    "dev_C",
    "dev_dC_dT",
    "dev_dC_dK",
    "in_window",
    "exceeds_tolerance",
    "coarse",
];

/// Relative deviation above which a row is flagged.
pub const DEVIATION_TOLERANCE: f64 = 0.1;
/// `|δK|/T_K` range of the comparison window.
pub const WINDOW_DETUNING: (f64, f64) = (1e-3, 1e-2);
/// `T/T_K` range of the comparison window.
pub const WINDOW_TEMPERATURE: (f64, f64) = (1e-4, 1e-2);

/// Correlator and derivatives at one `(T, K)`, from any source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub k: f64,
    pub c: f64,
    pub dc_dt: f64,
    pub dc_dk: f64,
    /// Finite differences were flagged as under-resolved.
    pub coarse: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareRow {
    pub t_over_tk: f64,
    pub dk_over_tk: f64,
    pub c: (f64, f64),
    pub dc_dt: (f64, f64),
    pub dc_dk: (f64, f64),
    pub dev_c: f64,
    pub dev_dc_dt: f64,
    pub dev_dc_dk: f64,
    pub in_window: bool,
    pub exceeds_tolerance: bool,
    pub coarse: bool,
}

impl CompareRow {
    pub fn record(&self) -> Vec<String> {
        let mut rec: Vec<String> = [
            self.t_over_tk,
            self.dk_over_tk,
            self.c.0,
            self.c.1,
            self.dc_dt.0,
            self.dc_dt.1,
            self.dc_dk.0,
            self.dc_dk.1,
            self.dev_c,
            self.dev_dc_dt,
            self.dev_dc_dk,
        ]
        .into_iter()
        .map(fmt_num)
        .collect();
        rec.extend([self.in_window, self.exceeds_tolerance, self.coarse].map(|b| b.to_string()));
        rec
    }
}

/// `(a - b)/|b|`, zero when both vanish.
pub fn relative_deviation(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b) / b.abs()
    }
}

pub fn in_window(t_over_tk: f64, dk_over_tk: f64) -> bool {
    let (d0, d1) = WINDOW_DETUNING;
    let (t0, t1) = WINDOW_TEMPERATURE;
    (d0..=d1).contains(&dk_over_tk.abs()) && (t0..=t1).contains(&t_over_tk)
}

/// Every cell of an NRG metrology grid, coupling-major.
pub fn samples_from_grid(grid: &MetrologyGrid) -> Vec<Sample> {
    grid.cells
        .iter()
        .flatten()
        .map(|c| Sample {
            t: c.temperature,
            k: c.coupling,
            c: c.correlator,
            dc_dt: c.dc_dt,
            dc_dk: c.dc_dk,
            coarse: c.coarse_t || c.coarse_k,
        })
        .collect()
}

/// The universal solution sampled on a `(T, K)` grid, coupling-major.
pub fn exact_samples(
    consts: &CriticalConstants64,
    temperatures: &[f64],
    couplings: &[f64],
) -> Result<Vec<Sample>> {
    let mut out = vec![];
    for &k in couplings {
        for &t in temperatures {
            out.push(Sample {
                t,
                k,
                c: critical::correlator(t, k, consts)?,
                dc_dt: critical::dc_dt(t, k, consts)?,
                dc_dk: critical::dc_dk(t, k, consts)?,
                coarse: false,
            });
        }
    }
    Ok(out)
}

/// Compares each sample with the universal solution. Points where the closed forms fail to
/// evaluate get `NaN` exact values and deviations.
pub fn compare(samples: &[Sample], consts: &CriticalConstants64) -> Vec<CompareRow> {
    samples
        .iter()
        .map(|s| {
            let exact = |f: fn(f64, f64, &CriticalConstants64) -> kondo_metrology::Result<f64>| {
                f(s.t, s.k, consts).unwrap_or(f64::NAN)
            };
            let (c, dt, dk) = (
                exact(critical::correlator),
                exact(critical::dc_dt),
                exact(critical::dc_dk),
            );
            let (t_over_tk, dk_over_tk) = (s.t / consts.t_k, consts.detuning(s.k) / consts.t_k);
            let dev = [
                relative_deviation(s.c, c),
                relative_deviation(s.dc_dt, dt),
                relative_deviation(s.dc_dk, dk),
            ];
            CompareRow {
                t_over_tk,
                dk_over_tk,
                c: (s.c, c),
                dc_dt: (s.dc_dt, dt),
                dc_dk: (s.dc_dk, dk),
                dev_c: dev[0],
                dev_dc_dt: dev[1],
                dev_dc_dk: dev[2],
                in_window: in_window(t_over_tk, dk_over_tk),
                exceeds_tolerance: dev.iter().any(|d| !(d.abs() <= DEVIATION_TOLERANCE)),
                coarse: s.coarse,
            }
        })
        .collect()
}

/// Rebuilds the metrology grid from saved zero-field runs, which must share `J` and the NRG
/// configuration. Directories may be given in any order.
pub fn grid_from_artifacts(dirs: &[PathBuf]) -> Result<MetrologyGrid> {
    if dirs.len() < 3 {
        return Err(validation(format!(
            "comparison needs at least 3 run directories, got {}",
            dirs.len()
        )));
    }
    let mut runs = dirs
        .iter()
        .map(|d| load_run(d))
        .collect::<kondo_nrg::Result<Vec<_>>>()?;
    let (exchange, config) = (runs[0].params.exchange, runs[0].config);
    for (dir, r) in dirs.iter().zip(&runs) {
        if r.params.field != 0.0 {
            return Err(validation(format!(
                "{}: run has B = {}, comparison is zero-field",
                dir.display(),
                r.params.field
            )));
        }
        if r.params.exchange != exchange || r.config != config {
            return Err(validation(format!(
                "{}: J or NRG configuration differs from {}",
                dir.display(),
                dirs[0].display()
            )));
        }
    }
    runs.sort_by(|a, b| a.params.coupling.total_cmp(&b.params.coupling));
    let couplings: Vec<f64> = runs.iter().map(|r| r.params.coupling).collect();
    let flows = runs
        .iter()
        .map(|r| r.flow())
        .collect::<kondo_nrg::Result<Vec<_>>>()?;
    Ok(metrology_from_flows(&couplings, flows)?)
}

pub fn write_compare<W: std::io::Write>(mut out: W, rows: &[CompareRow]) -> Result<()> {
    writeln!(out, "{COMPARE_VERSION}").map_err(csv::Error::from)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COMPARE_HEADER)?;
    for r in rows {
        w.write_record(r.record())?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
