//! Scaled `(T/T_K, δK/T_K)` tables of the universal critical-point solution.

use kondo_metrology::critical::{self, fit_asymptotic_qsnr_t, AsymptoticFit};
use kondo_metrology::CriticalConstants64;

use crate::error::{validation, Result};
use crate::fmt_num;

pub const CRITICAL_VERSION: &str = "# kondo-metro critical v1";

pub const CRITICAL_HEADER: [&str; 12] = [
    "T_over_TK",
    "dK_over_TK",
    "T",
    "K",
    "T_star",
    "S_imp",
    "C",
    "dC_dT",
    "dC_dK",
    "Q_SP_T",
    "Q_SP_K",
    "in_window",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalRow {
    pub t_over_tk: f64,
    pub dk_over_tk: f64,
    pub t: f64,
    pub k: f64,
    pub t_star: f64,
    pub entropy: f64,
    pub c: f64,
    pub dc_dt: f64,
    pub dc_dk: f64,
    pub q_sp_t: f64,
    pub q_sp_k: f64,
    pub in_window: bool,
}

impl CriticalRow {
    pub fn record(&self) -> Vec<String> {
        let mut rec: Vec<String> = [
            self.t_over_tk,
            self.dk_over_tk,
            self.t,
            self.k,
            self.t_star,
            self.entropy,
            self.c,
            self.dc_dt,
            self.dc_dk,
            self.q_sp_t,
            self.q_sp_k,
        ]
        .into_iter()
        .map(fmt_num)
        .collect();
        rec.push(self.in_window.to_string());
        rec
    }
}

/// One row per `(δK/T_K, T/T_K)` pair, detuning-major. Points with `T > T_K` or `|δK| > T_K`
/// are rejected up front.
pub fn critical_scan(
    consts: &CriticalConstants64,
    t_over_tk: &[f64],
    dk_over_tk: &[f64],
) -> Result<Vec<CriticalRow>> {
    let bad_t: Vec<String> = t_over_tk
        .iter()
        .filter(|&&x| !(x > 0.0 && x <= 1.0))
        .map(|x| x.to_string())
        .collect();
    let bad_k: Vec<String> = dk_over_tk
        .iter()
        .filter(|&&x| !(x.abs() <= 1.0))
        .map(|x| x.to_string())
        .collect();
    if !bad_t.is_empty() || !bad_k.is_empty() {
        return Err(validation(format!(
            "critical scan needs 0 < T/T_K <= 1 and |dK/T_K| <= 1; offending T/T_K: [{}], dK/T_K: [{}]",
            bad_t.join(", "),
            bad_k.join(", ")
        )));
    }
    let mut rows = Vec::with_capacity(t_over_tk.len() * dk_over_tk.len());
    for &d in dk_over_tk {
        for &x in t_over_tk {
            let (t, dk) = (x * consts.t_k, d * consts.t_k);
            let k = consts.k_c + dk;
            let (q_sp_t, q_sp_k) = critical::qsnr_critical(t, k, consts)?;
            rows.push(CriticalRow {
                t_over_tk: x,
                dk_over_tk: d,
                t,
                k,
                t_star: critical::t_star(dk, consts),
                entropy: critical::entropy_crossover(t, dk, consts)?.value,
                c: critical::correlator(t, k, consts)?,
                dc_dt: critical::dc_dt(t, k, consts)?,
                dc_dk: critical::dc_dk(t, k, consts)?,
                q_sp_t,
                q_sp_k,
                in_window: consts.in_universal_window(t, dk),
            });
        }
    }
    Ok(rows)
}

/// Low-temperature asymptote fit on the same grid.
pub fn asymptote(
    consts: &CriticalConstants64,
    t_over_tk: &[f64],
    dk_over_tk: &[f64],
) -> Result<AsymptoticFit> {
    let ts: Vec<f64> = t_over_tk.iter().map(|x| x * consts.t_k).collect();
    let dks: Vec<f64> = dk_over_tk.iter().map(|x| x * consts.t_k).collect();
    Ok(fit_asymptotic_qsnr_t(&ts, &dks, consts)?)
}
