//! Probe metrology on a `(T_n, K)` grid of NRG flows.
//!
//! Each coupling on the grid is one NRG run, so the temperature axis is the set of shell
//! temperatures. The correlator is smoothed over neighbouring shells before differentiating.

use kondo_metrology::estimation::{build_qfim, qsnr_report, ParamVector, PopulationJacobian};
use kondo_metrology::probe::rdm_zero_field;

use crate::chain::NrgConfig;
use crate::error::{invalid, Result};
use crate::thermo::{run_flow, FlowTables};

/// Relative disagreement of one-sided differences above which a derivative is flagged.
pub const RESOLUTION_WARNING: f64 = 0.1;

/// Metrology of the zero-field probe at one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetrologyCell {
    pub temperature: f64,
    pub coupling: f64,
    /// Smoothed `⟨S_L·S_R⟩`.
    pub correlator: f64,
    pub dc_dt: f64,
    pub dc_dk: f64,
    pub h_tt: f64,
    pub h_kk: f64,
    pub h_tk: f64,
    pub q_sp_t: f64,
    pub q_sp_k: f64,
    /// Forward and backward differences disagree by more than [`RESOLUTION_WARNING`] in `T`.
    pub coarse_t: bool,
    /// Same for the `K` direction, including one-sided differences at the grid edges.
    pub coarse_k: bool,
}

/// Grid of cells indexed `[coupling][shell]`, with the flows they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct MetrologyGrid {
    pub couplings: Vec<f64>,
    pub temperatures: Vec<f64>,
    pub cells: Vec<Vec<MetrologyCell>>,
    pub flows: Vec<FlowTables>,
}

impl MetrologyGrid {
    /// Cells whose derivatives were flagged as under-resolved.
    pub fn warnings(&self) -> impl Iterator<Item = &MetrologyCell> {
        self.cells
            .iter()
            .flatten()
            .filter(|c| c.coarse_t || c.coarse_k)
    }

    /// Coupling index with the largest `𝓠_SP(K)` at shell index `shell`.
    pub fn argmax_q_sp_k(&self, shell: usize) -> Option<usize> {
        (0..self.couplings.len()).max_by(|&a, &b| {
            self.cells[a][shell]
                .q_sp_k
                .total_cmp(&self.cells[b][shell].q_sp_k)
        })
    }
}

/// Three-point derivative on a non-uniform grid, plus a flag for disagreeing one-sided slopes.
fn derivative(x: &[f64], y: &[f64], i: usize) -> (f64, bool) {
    let n = x.len();
    let slope = |a: usize, b: usize| (y[b] - y[a]) / (x[b] - x[a]);
    if i == 0 {
        return (slope(0, 1), true);
    }
    if i + 1 == n {
        return (slope(n - 2, n - 1), true);
    }
    let (hl, hr) = (x[i] - x[i - 1], x[i + 1] - x[i]);
    let (back, fwd) = (slope(i - 1, i), slope(i, i + 1));
    let central = (hr * back + hl * fwd) / (hl + hr);
    let scale = central.abs().max(f64::MIN_POSITIVE);
    (central, (fwd - back).abs() / scale > RESOLUTION_WARNING)
}

/// Zero-field QFIM for `(T, K)` from the correlator and its derivatives.
fn cell(temperature: f64, coupling: f64, c: f64, dc_dt: f64, dc_dk: f64) -> Result<[f64; 5]> {
    let state = rdm_zero_field(c)?;
    let dpop = |d: f64| vec![-d, d / 3.0, d / 3.0, d / 3.0];
    let pj = PopulationJacobian::new(
        ["T", "K"],
        state.populations().to_vec(),
        vec![dpop(dc_dt), dpop(dc_dk)],
    )?;
    let h = build_qfim(&pj)?;
    let params = ParamVector::new(["T", "K"], vec![temperature, coupling])?;
    let report = qsnr_report(&params, &h)?;
    Ok([
        h.get(0, 0),
        h.get(1, 1),
        h.get(0, 1),
        report.sp[0],
        report.sp[1],
    ])
}

/// Runs one flow per coupling and assembles the probe metrology on the shell grid.
///
/// `∂_T C` is the central difference of the smoothed correlator in `ln T` across adjacent shells;
/// `∂_K C` is the non-uniform central difference across neighbouring couplings.
pub fn nrg_metrology(exchange: f64, cfg: &NrgConfig, couplings: &[f64]) -> Result<MetrologyGrid> {
    if couplings.len() < 3 {
        return Err(invalid(
            "at least three couplings are needed for K derivatives",
        ));
    }
    if couplings.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("couplings must be strictly increasing"));
    }
    let flows: Vec<FlowTables> = couplings
        .iter()
        .map(|&k| run_flow(cfg, k, exchange, 0.0))
        .collect::<Result<_>>()?;
    metrology_from_flows(couplings, flows)
}

/// Same as [`nrg_metrology`] for flows that were computed already (for example loaded from an
/// artifact directory).
pub fn metrology_from_flows(couplings: &[f64], flows: Vec<FlowTables>) -> Result<MetrologyGrid> {
    let shells = flows.iter().map(|f| f.rows.len()).min().unwrap_or(0);
    if flows.len() != couplings.len() || shells < 3 {
        return Err(invalid(
            "need one flow of at least three shells per coupling",
        ));
    }
    let temperatures: Vec<f64> = flows[0].rows[..shells]
        .iter()
        .map(|r| r.temperature)
        .collect();
    let ln_t: Vec<f64> = temperatures.iter().map(|t| t.ln()).collect();
    let smoothed: Vec<Vec<f64>> = flows
        .iter()
        .map(|f| f.smoothed_correlators()[..shells].to_vec())
        .collect();

    let mut cells = Vec::with_capacity(couplings.len());
    for (a, &k) in couplings.iter().enumerate() {
        let mut row = Vec::with_capacity(shells);
        for (n, &t) in temperatures.iter().enumerate() {
            let (dc_dlnt, coarse_t) = derivative(&ln_t, &smoothed[a], n);
            let across: Vec<f64> = smoothed.iter().map(|c| c[n]).collect();
            let (dc_dk, coarse_k) = derivative(couplings, &across, a);
            let c = smoothed[a][n];
            let dc_dt = dc_dlnt / t;
            let [h_tt, h_kk, h_tk, q_sp_t, q_sp_k] = cell(t, k, c, dc_dt, dc_dk)?;
            row.push(MetrologyCell {
                temperature: t,
                coupling: k,
                correlator: c,
                dc_dt,
                dc_dk,
                h_tt,
                h_kk,
                h_tk,
                q_sp_t,
                q_sp_k,
                coarse_t,
                coarse_k,
            });
        }
        cells.push(row);
    }
    Ok(MetrologyGrid {
        couplings: couplings.to_vec(),
        temperatures,
        cells,
        flows,
    })
}
