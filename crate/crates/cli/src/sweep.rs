//! Parameter-grid sweeps over every backend and the versioned CSV they produce.

use std::io::Write;

use kondo_metrology::estimation::{build_qfim, qsnr_report, ParamVector, PopulationJacobian};
use kondo_metrology::large_k::{self, LargeKParams};
use kondo_metrology::narrow_band::{self, NblParams};
use kondo_metrology::probe::{rdm_zero_field, ProbeObservables};
use kondo_metrology::{critical, PopulationJacobian64, ProbeObservables64};
use rayon::prelude::*;

use crate::config::{Backend, SweepConfig};
use crate::error::{validation, Result};
use crate::fmt_num;

/// First line of every sweep CSV; bumped whenever the column set changes.
pub const SWEEP_VERSION: &str = "# kondo-metro sweep v1";

pub const SWEEP_HEADER: [&str; 18] = [
    "T",
    "K",
    "J",
    "B",
    "C",
    "M",
    "chi",
    "H_TT",
    "H_KK",
    "H_TK",
    "det_H",
    "Q_SP_T",
    "Q_SP_K",
    "Q_MP_TT",
    "Q_MP_KK",
    "Q_MP_TK",
    "correlation",
    "singular_flag",
];

/// Most offending grid points quoted in a validation error.
const MAX_LISTED: usize = 20;

/// One grid point. Multiparameter entries are `None` for parameters outside the unknown set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub t: f64,
    pub k: f64,
    pub j: f64,
    pub b: f64,
    pub obs: ProbeObservables64,
    pub h_tt: f64,
    pub h_kk: f64,
    pub h_tk: f64,
    pub det_h: f64,
    pub q_sp_t: f64,
    pub q_sp_k: f64,
    pub q_mp_tt: Option<f64>,
    pub q_mp_kk: Option<f64>,
    pub q_mp_tk: Option<f64>,
    pub correlation: f64,
    pub singular: bool,
}

impl SweepRow {
    pub fn record(&self) -> Vec<String> {
        let opt = |x: Option<f64>| x.map(fmt_num).unwrap_or_default();
        let mut rec: Vec<String> = [
            self.t,
            self.k,
            self.j,
            self.b,
            self.obs.c,
            self.obs.m,
            self.obs.chi,
            self.h_tt,
            self.h_kk,
            self.h_tk,
            self.det_h,
            self.q_sp_t,
            self.q_sp_k,
        ]
        .into_iter()
        .map(fmt_num)
        .collect();
        rec.extend([
            opt(self.q_mp_tt),
            opt(self.q_mp_kk),
            opt(self.q_mp_tk),
            fmt_num(self.correlation),
        ]);
        rec.push(self.singular.to_string());
        rec
    }

    /// `Q_MP` entries that are present.
    pub fn q_mp(&self) -> impl Iterator<Item = f64> {
        [self.q_mp_tt, self.q_mp_kk, self.q_mp_tk]
            .into_iter()
            .flatten()
    }
}

/// QFIM over `(T, K)` and the multiparameter report restricted to `unknowns`.
pub fn assemble_row(
    (t, k, j, b): (f64, f64, f64, f64),
    obs: ProbeObservables64,
    jac: &PopulationJacobian64,
    unknowns: &[&str],
) -> Result<SweepRow> {
    let h = build_qfim(jac)?;
    let full = qsnr_report(&ParamVector::new(["T", "K"], vec![t, k])?, &h)?;
    let sub_jac = jac.restrict(unknowns)?;
    let values = unknowns
        .iter()
        .map(|&n| if n == "T" { t } else { k })
        .collect();
    let sub = qsnr_report(
        &ParamVector::new(unknowns.iter().copied(), values)?,
        &build_qfim(&sub_jac)?,
    )?;
    Ok(SweepRow {
        t,
        k,
        j,
        b,
        obs,
        h_tt: h.get(0, 0),
        h_kk: h.get(1, 1),
        h_tk: h.get(0, 1),
        det_h: h.determinant(),
        q_sp_t: full.sp[0],
        q_sp_k: full.sp[1],
        q_mp_tt: sub.mp_of("T", "T"),
        q_mp_kk: sub.mp_of("K", "K"),
        q_mp_tk: sub.mp_of("T", "K"),
        correlation: full.correlation[1],
        singular: sub.singular,
    })
}

/// Zero-field probe state and `(T, K)` jacobian from the correlator and its two derivatives.
pub fn zero_field_jacobian(
    c: f64,
    dc_dt: f64,
    dc_dk: f64,
) -> Result<(ProbeObservables64, PopulationJacobian64)> {
    let state = rdm_zero_field(c)?;
    let dpop = |d: f64| vec![-d, d / 3.0, d / 3.0, d / 3.0];
    let jac = PopulationJacobian::new(
        ["T", "K"],
        state.populations().to_vec(),
        vec![dpop(dc_dt), dpop(dc_dk)],
    )?;
    Ok((ProbeObservables::new(c, 0.0, 0.5 + 2.0 * c / 3.0), jac))
}

/// Grid points in output order: K-major, then T.
fn grid(cfg: &SweepConfig) -> Vec<(f64, f64)> {
    let ts = cfg.t.points();
    cfg.k
        .points()
        .into_iter()
        .flat_map(|k| ts.iter().map(move |&t| (t, k)))
        .collect()
}

/// Checks backend-specific constraints on the whole grid before anything is computed.
pub fn validate(cfg: &SweepConfig) -> Result<()> {
    if cfg.t.min <= 0.0 {
        return Err(validation(format!(
            "temperatures must be positive, got T_min = {}",
            cfg.t.min
        )));
    }
    let backend = cfg.backend.name();
    match cfg.backend {
        Backend::LargeK if cfg.field < 0.0 => {
            return Err(validation(format!(
                "large-k backend needs B >= 0, got {}",
                cfg.field
            )));
        }
        Backend::Critical | Backend::Nrg if cfg.field != 0.0 => {
            return Err(validation(format!(
                "{backend} backend is zero-field only, got B = {}",
                cfg.field
            )));
        }
        Backend::Nrg if cfg.k.count < 3 => {
            return Err(validation(
                "nrg backend needs at least 3 couplings for K derivatives",
            ));
        }
        Backend::Nrg if cfg.exchange <= 0.0 => {
            return Err(validation(format!(
                "nrg backend needs J > 0, got {}",
                cfg.exchange
            )));
        }
        _ => {}
    }
    if cfg.backend == Backend::Critical {
        let consts = &cfg.constants;
        let offending: Vec<String> = grid(cfg)
            .into_iter()
            .enumerate()
            .filter_map(|(i, (t, k))| {
                let dk = consts.detuning(k);
                let why = match (t > consts.t_k, dk.abs() > consts.t_k) {
                    (false, false) => return None,
                    (true, false) => "T > T_K",
                    (false, true) => "|K - K_c| > T_K",
                    (true, true) => "T > T_K and |K - K_c| > T_K",
                };
                Some(format!(
                    "row {}: T = {}, K = {} ({why})",
                    i + 1,
                    fmt_num(t),
                    fmt_num(k)
                ))
            })
            .collect();
        if !offending.is_empty() {
            let total = offending.len();
            let mut msg = format!(
                "{total} grid point(s) outside the critical backend's domain (T_K = {}, K_c = {}):",
                consts.t_k, consts.k_c
            );
            for line in offending.iter().take(MAX_LISTED) {
                msg.push_str("\n  ");
                msg.push_str(line);
            }
            if total > MAX_LISTED {
                msg.push_str(&format!("\n  ... and {} more", total - MAX_LISTED));
            }
            return Err(validation(msg));
        }
    }
    Ok(())
}

fn analytic_row(cfg: &SweepConfig, t: f64, k: f64) -> Result<SweepRow> {
    let (j, b) = (cfg.exchange, cfg.field);
    let (obs, jac) = match cfg.backend {
        Backend::LargeK => {
            let p = LargeKParams::new(t, k, b)?;
            (
                large_k::observables(&p),
                large_k::population_jacobian(&p, &["T", "K"])?,
            )
        }
        Backend::Nbl => {
            let p = NblParams::new(t, k, j, b)?;
            (
                narrow_band::solve(&p)?.observables(),
                narrow_band::population_jacobian(&p, &["T", "K"])?,
            )
        }
        Backend::Critical => {
            let consts = &cfg.constants;
            let c = critical::correlator(t, k, consts)?;
            zero_field_jacobian(
                c,
                critical::dc_dt(t, k, consts)?,
                critical::dc_dk(t, k, consts)?,
            )?
        }
        Backend::Nrg => unreachable!("nrg rows come from flows"),
    };
    assemble_row((t, k, j, b), obs, &jac, &cfg.unknowns)
}

/// Rows at every shell temperature in `[T_min, T_max]`, one NRG run per coupling.
fn nrg_rows(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    let couplings = cfg.k.points();
    let grid = kondo_nrg::nrg_metrology(cfg.exchange, &cfg.nrg, &couplings)?;
    let mut rows = vec![];
    for cell in grid.cells.iter().flatten() {
        if cell.temperature < cfg.t.min || cell.temperature > cfg.t.max {
            continue;
        }
        let (obs, jac) = zero_field_jacobian(cell.correlator, cell.dc_dt, cell.dc_dk)?;
        rows.push(assemble_row(
            (cell.temperature, cell.coupling, cfg.exchange, 0.0),
            obs,
            &jac,
            &cfg.unknowns,
        )?);
    }
    Ok(rows)
}

/// Validates, then evaluates the grid. Analytic backends run on the current rayon pool; the
/// output order does not depend on scheduling.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    validate(cfg)?;
    if cfg.backend == Backend::Nrg {
        return nrg_rows(cfg);
    }
    grid(cfg)
        .into_par_iter()
        .map(|(t, k)| analytic_row(cfg, t, k))
        .collect()
}

pub fn write_sweep<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    let mut out = out;
    writeln!(out, "{SWEEP_VERSION}").map_err(csv::Error::from)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for r in rows {
        w.write_record(r.record())?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
