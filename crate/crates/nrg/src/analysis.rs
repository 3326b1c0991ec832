//! Kondo temperature, critical coupling and critical-point constants from entropy flows.
//!
//! All entropy criteria act on the smoothed impurity entropy (see
//! [`smooth_alternation`](crate::thermo::smooth_alternation)). The phase of a flow is read off
//! the even/odd alternation of the raw impurity entropy at low temperature: in the Kondo phase
//! each channel's first site is absorbed into a singlet with its impurity, so the impurity
//! chain has the opposite site parity from the reference chain and the raw entropy alternates
//! with a fixed amplitude; the local-singlet phase has the reference parity and no alternation.

use std::f64::consts::LN_2;

use kondo_metrology::critical::scaled_entropy;
use kondo_metrology::CriticalConstants64;

use crate::chain::NrgConfig;
use crate::engine::{run_with, ModelParams, ShellRecord};
use crate::error::{invalid, NrgError, Result};
use crate::thermo::{
    cached_reference, run_flow, shell_thermo, shell_thermo_at, smooth_alternation, FlowTables,
};

/// Half-width of the `½ ln 2` band used for plateaus and departures.
pub const PLATEAU_BAND: f64 = 0.05;
/// Smoothed entropy below which a flow counts as having reached a zero-entropy fixed point.
const FIXED_POINT_ENTROPY: f64 = 0.1 * LN_2;
/// Bisection stops once the bracket is narrower than this fraction of `T_K`.
pub const KC_RESOLUTION: f64 = 1e-3;

/// Temperature at which `entropy` first falls below `target`, interpolated linearly in `ln T`.
pub fn crossing_temperature(temperatures: &[f64], entropy: &[f64], target: f64) -> Option<f64> {
    (1..entropy.len().min(temperatures.len())).find_map(|i| {
        let (s0, s1) = (entropy[i - 1], entropy[i]);
        if !(s0 >= target && s1 < target) {
            return None;
        }
        let f = (s0 - target) / (s0 - s1);
        let (l0, l1) = (temperatures[i - 1].ln(), temperatures[i].ln());
        Some((l0 + f * (l1 - l0)).exp())
    })
}

/// `T_K` of a flow: the smoothed impurity entropy of both impurities crosses `ln 2`.
///
/// For decoupled impurities this is the single-impurity criterion `S_imp = ½ ln 2` per impurity.
pub fn tk_from_flow(flow: &FlowTables) -> Result<f64> {
    crossing_temperature(&flow.temperatures(), &flow.smoothed_entropies(), LN_2).ok_or(
        NrgError::ChainTooShort {
            target: LN_2,
            chain_length: flow.rows.len().saturating_sub(1),
        },
    )
}

/// Impurity entropy accumulated shell by shell while a run is in progress.
struct EntropyMonitor<'a> {
    reference: &'a [ShellRecord],
    temperatures: Vec<f64>,
    entropy: Vec<f64>,
}

impl<'a> EntropyMonitor<'a> {
    fn new(reference: &'a [ShellRecord]) -> Self {
        Self {
            reference,
            temperatures: vec![],
            entropy: vec![],
        }
    }

    fn push(&mut self, shell: &ShellRecord) {
        let reference = &self.reference[shell.shell];
        let s = shell_thermo(shell).entropy - shell_thermo_at(reference, shell.temperature).entropy;
        self.temperatures.push(shell.temperature);
        self.entropy.push(s);
    }

    /// Smoothed entropy of the shells whose both neighbours are known.
    fn settled(&self) -> Vec<f64> {
        let mut s = smooth_alternation(&self.entropy);
        s.pop();
        s
    }
}

/// `T_K` from the `K = 0` flow. The run stops two shells after the crossing.
pub fn estimate_tk(exchange: f64, cfg: &NrgConfig) -> Result<f64> {
    let params = ModelParams::new(0.0, exchange, 0.0)?;
    let reference = cached_reference(cfg, 0.0)?;
    let mut monitor = EntropyMonitor::new(&reference);
    run_with(cfg, &params, |shell| {
        monitor.push(shell);
        crossing_temperature(&monitor.temperatures, &monitor.settled(), LN_2).is_none()
    })?;
    crossing_temperature(&monitor.temperatures, &monitor.settled(), LN_2).ok_or(
        NrgError::ChainTooShort {
            target: LN_2,
            chain_length: cfg.chain_length,
        },
    )
}

/// Low-temperature fixed point reached by a flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// Each impurity screened by its own channel.
    Kondo,
    /// Impurities locked into a local singlet.
    Singlet,
}

/// Parity-signed alternation `(-1)^n [S_n - (S_{n-1} + S_{n+1})/2]` of shell `n`.
fn alternation(entropy: &[f64], n: usize) -> f64 {
    let a = entropy[n] - 0.5 * (entropy[n - 1] + entropy[n + 1]);
    if n.is_multiple_of(2) {
        a
    } else {
        -a
    }
}

/// Phase of a completed or partial flow, if both of its last two settled shells sit at a
/// zero-entropy fixed point. `kondo_alternation` is the alternation of the screened phase.
fn settled_phase(entropy: &[f64], kondo_alternation: f64) -> Option<Phase> {
    let n = entropy.len();
    if n < 4 {
        return None;
    }
    let smooth = smooth_alternation(entropy);
    let last = [n - 3, n - 2];
    if last.iter().any(|&i| smooth[i].abs() > FIXED_POINT_ENTROPY) {
        return None;
    }
    let x = last.map(|i| alternation(entropy, i) / kondo_alternation);
    if x.iter().all(|&v| v > 0.85) {
        Some(Phase::Kondo)
    } else if x.iter().all(|&v| v.abs() < 0.15) {
        Some(Phase::Singlet)
    } else {
        None
    }
}

/// Phase of a flow that ended near the critical fixed point: the direction in which the
/// alternation drifts over the last shells.
fn drift_phase(entropy: &[f64], kondo_alternation: f64) -> Phase {
    let n = entropy.len();
    let last = n - 2;
    let earlier = last.saturating_sub(4).max(1);
    let drift = (alternation(entropy, last) - alternation(entropy, earlier)) / kondo_alternation;
    if drift > 0.0 {
        Phase::Kondo
    } else {
        Phase::Singlet
    }
}

/// Runs `K` until its phase is settled (or the chain ends) and classifies it.
fn phase_of(
    coupling: f64,
    exchange: f64,
    cfg: &NrgConfig,
    reference: &[ShellRecord],
    kondo_alternation: f64,
) -> Result<Phase> {
    let params = ModelParams::new(coupling, exchange, 0.0)?;
    let mut monitor = EntropyMonitor::new(reference);
    run_with(cfg, &params, |shell| {
        monitor.push(shell);
        settled_phase(&monitor.entropy, kondo_alternation).is_none()
    })?;
    Ok(settled_phase(&monitor.entropy, kondo_alternation)
        .unwrap_or_else(|| drift_phase(&monitor.entropy, kondo_alternation)))
}

/// Outcome of the critical-coupling bisection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KcTuning {
    /// Midpoint of the final bracket.
    pub k_c: f64,
    /// Largest coupling classified as Kondo phase.
    pub lower: f64,
    /// Smallest coupling classified as singlet phase.
    pub upper: f64,
    /// `T_K` of the decoupled (`K = 0`) flow, which sets the bisection resolution.
    pub t_k_decoupled: f64,
    /// Alternation amplitude of the screened phase, measured on the `K = 0` flow.
    pub kondo_alternation: f64,
    /// Number of NRG runs spent, including the `K = 0` run.
    pub runs: usize,
}

impl KcTuning {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// `T_K` and the screened-phase alternation from a full `K = 0` flow.
fn decoupled_reference_flow(exchange: f64, cfg: &NrgConfig) -> Result<(f64, f64)> {
    let flow = run_flow(cfg, 0.0, exchange, 0.0)?;
    let t_k = tk_from_flow(&flow)?;
    let s = flow.entropies();
    let smooth = flow.smoothed_entropies();
    let n = s.len();
    if smooth[n - 2].abs() > FIXED_POINT_ENTROPY {
        return Err(NrgError::ChainTooShort {
            target: FIXED_POINT_ENTROPY,
            chain_length: cfg.chain_length,
        });
    }
    let a = alternation(&s, n - 2);
    if a.abs() < 1e-3 {
        return Err(invalid(
            "screened phase shows no even/odd alternation; phase indicator unusable",
        ));
    }
    Ok((t_k, a))
}

/// Bisection for `K_c` with an automatically grown bracket `[0, K_hi]`, down to a width of
/// `KC_RESOLUTION · T_K`.
pub fn tune_kc(exchange: f64, cfg: &NrgConfig) -> Result<KcTuning> {
    tune_kc_with(exchange, cfg, None, KC_RESOLUTION)
}

/// Bisection for `K_c` inside a caller-supplied bracket, which must straddle the transition.
pub fn tune_kc_in(exchange: f64, cfg: &NrgConfig, bracket: (f64, f64)) -> Result<KcTuning> {
    tune_kc_with(exchange, cfg, Some(bracket), KC_RESOLUTION)
}

/// General form of [`tune_kc`]: optional bracket and a final width of `resolution · T_K`.
pub fn tune_kc_with(
    exchange: f64,
    cfg: &NrgConfig,
    bracket: Option<(f64, f64)>,
    resolution: f64,
) -> Result<KcTuning> {
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(invalid(format!(
            "bisection resolution must be positive, got {resolution}"
        )));
    }
    match bracket {
        Some(b) => tune_in_bracket(exchange, cfg, b, resolution),
        None => tune_auto(exchange, cfg, resolution),
    }
}

fn tune_auto(exchange: f64, cfg: &NrgConfig, resolution: f64) -> Result<KcTuning> {
    let (t_k, a_k) = decoupled_reference_flow(exchange, cfg)?;
    let reference = cached_reference(cfg, 0.0)?;
    let mut runs = 1;
    let mut hi = 4.0 * t_k;
    let mut lo = 0.0;
    loop {
        runs += 1;
        if phase_of(hi, exchange, cfg, &reference, a_k)? == Phase::Singlet {
            break;
        }
        lo = hi;
        hi *= 2.0;
        if hi > 1e3 * t_k.max(cfg.band_halfwidth) {
            return Err(NrgError::InvalidBracket(format!(
                "no singlet phase found up to K = {lo:e}"
            )));
        }
    }
    bisect(
        exchange,
        cfg,
        &reference,
        (lo, hi),
        t_k * resolution,
        (t_k, a_k),
        runs,
    )
}

fn tune_in_bracket(
    exchange: f64,
    cfg: &NrgConfig,
    bracket: (f64, f64),
    resolution: f64,
) -> Result<KcTuning> {
    let (lo, hi) = bracket;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(NrgError::InvalidBracket(format!(
            "[{lo}, {hi}] is not an interval"
        )));
    }
    let (t_k, a_k) = decoupled_reference_flow(exchange, cfg)?;
    let reference = cached_reference(cfg, 0.0)?;
    let p_lo = phase_of(lo, exchange, cfg, &reference, a_k)?;
    let p_hi = phase_of(hi, exchange, cfg, &reference, a_k)?;
    if p_lo != Phase::Kondo || p_hi != Phase::Singlet {
        return Err(NrgError::InvalidBracket(format!(
            "K = {lo:e} flows to {p_lo:?} and K = {hi:e} flows to {p_hi:?}"
        )));
    }
    bisect(
        exchange,
        cfg,
        &reference,
        (lo, hi),
        t_k * resolution,
        (t_k, a_k),
        3,
    )
}

fn bisect(
    exchange: f64,
    cfg: &NrgConfig,
    reference: &[ShellRecord],
    (mut lo, mut hi): (f64, f64),
    width: f64,
    (t_k, a_k): (f64, f64),
    mut runs: usize,
) -> Result<KcTuning> {
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        runs += 1;
        match phase_of(mid, exchange, cfg, reference, a_k)? {
            Phase::Kondo => lo = mid,
            Phase::Singlet => hi = mid,
        }
    }
    Ok(KcTuning {
        k_c: 0.5 * (lo + hi),
        lower: lo,
        upper: hi,
        t_k_decoupled: t_k,
        kondo_alternation: a_k,
        runs,
    })
}

/// Consecutive shells whose smoothed entropy stays within `band` of `½ ln 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plateau {
    pub first_shell: usize,
    pub last_shell: usize,
    pub mean_entropy: f64,
    /// Largest deviation of the smoothed entropy from `½ ln 2` on the plateau.
    pub max_deviation: f64,
}

impl Plateau {
    /// Number of shells on the plateau.
    pub fn shells(&self) -> usize {
        self.last_shell - self.first_shell + 1
    }
}

/// Longest half-`ln 2` plateau of a flow, skipping the first and last shell whose smoothing is
/// one-sided.
pub fn find_plateau(flow: &FlowTables, band: f64) -> Option<Plateau> {
    let s = flow.smoothed_entropies();
    let n = s.len();
    let inside = |i: usize| (s[i] - 0.5 * LN_2).abs() <= band;
    let mut best: Option<(usize, usize)> = None;
    let mut i = 1;
    while i + 1 < n {
        if !inside(i) {
            i += 1;
            continue;
        }
        let start = i;
        while i + 1 < n && inside(i) {
            i += 1;
        }
        let end = i - 1;
        if best.is_none_or(|(a, b)| end - start > b - a) {
            best = Some((start, end));
        }
    }
    best.map(|(a, b)| {
        let vals = &s[a..=b];
        Plateau {
            first_shell: flow.rows[a].shell,
            last_shell: flow.rows[b].shell,
            mean_entropy: vals.iter().sum::<f64>() / vals.len() as f64,
            max_deviation: vals
                .iter()
                .map(|v| (v - 0.5 * LN_2).abs())
                .fold(0.0, f64::max),
        }
    })
}

/// Critical-point constants measured from NRG flows, with the data behind them.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractedConstants {
    pub constants: CriticalConstants64,
    pub plateau: Plateau,
    /// Flow at `K_c`.
    pub critical_flow: FlowTables,
    /// RMS residual of the crossover-entropy fit that determined `c`.
    pub c_fit_rms: f64,
    /// Number of `(T, δK)` points in that fit.
    pub c_fit_points: usize,
}

/// `K_c`, `T_K` (`ln 2` crossing of the `K_c` flow), `𝓒*` (mean correlator on the `½ ln 2`
/// plateau) and `c` (least-squares fit of `½ ln 2 + S̄(T/T*)` to detuned flows).
///
/// `detunings` are `δK/T_K` values, with `T_K` taken from the decoupled flow. Shells with
/// `T > 0.1 T_K` are excluded from the fit.
pub fn extract_constants(
    exchange: f64,
    cfg: &NrgConfig,
    tuning: &KcTuning,
    detunings: &[f64],
) -> Result<ExtractedConstants> {
    if detunings.is_empty() {
        return Err(invalid("at least one detuning is needed to fit c"));
    }
    let critical_flow = run_flow(cfg, tuning.k_c, exchange, 0.0)?;
    let t_k = tk_from_flow(&critical_flow)?;
    let plateau = find_plateau(&critical_flow, PLATEAU_BAND)
        .ok_or_else(|| invalid(format!("no ½ln2 plateau at K = {}", tuning.k_c)))?;
    let c_smooth = critical_flow.smoothed_correlators();
    let on_plateau: Vec<f64> = critical_flow
        .rows
        .iter()
        .zip(&c_smooth)
        .filter(|(r, _)| (plateau.first_shell..=plateau.last_shell).contains(&r.shell))
        .map(|(_, c)| *c)
        .collect();
    let c_star = on_plateau.iter().sum::<f64>() / on_plateau.len() as f64;

    let mut points = vec![];
    for &d in detunings {
        let delta_k = d * tuning.t_k_decoupled;
        let flow = run_flow(cfg, tuning.k_c + delta_k, exchange, 0.0)?;
        let s = flow.smoothed_entropies();
        let n = s.len();
        for (i, row) in flow.rows.iter().enumerate().take(n - 1).skip(1) {
            if row.temperature <= 0.1 * t_k {
                points.push((row.temperature, delta_k, s[i]));
            }
        }
    }
    let (c, rms) = fit_crossover_scale(&points, t_k)?;
    Ok(ExtractedConstants {
        constants: CriticalConstants64::new(tuning.k_c, t_k, c, c_star)?,
        plateau,
        critical_flow,
        c_fit_rms: rms,
        c_fit_points: points.len(),
    })
}

/// Least-squares `c` for `S(T, δK) ≈ ½ ln 2 + S̄(T T_K / (c δK²))`.
fn fit_crossover_scale(points: &[(f64, f64, f64)], t_k: f64) -> Result<(f64, f64)> {
    if points.is_empty() {
        return Err(invalid("no shells below 0.1 T_K for the crossover fit"));
    }
    let cost = |ln_c: f64| -> f64 {
        let c = ln_c.exp();
        points
            .iter()
            .map(|&(t, dk, s)| {
                let model =
                    0.5 * LN_2 + scaled_entropy(t * t_k / (c * dk * dk)).unwrap_or(f64::NAN);
                (s - model).powi(2)
            })
            .sum::<f64>()
    };
    let (lo, hi, steps) = (-14.0f64, 4.0f64, 360);
    let grid: Vec<f64> = (0..=steps)
        .map(|i| lo + (hi - lo) * i as f64 / steps as f64)
        .collect();
    let best = grid
        .iter()
        .copied()
        .min_by(|a, b| cost(*a).total_cmp(&cost(*b)))
        .unwrap_or(0.0);
    let h = (hi - lo) / steps as f64;
    let ln_c = golden_section(&cost, best - h, best + h, 1e-10);
    Ok((ln_c.exp(), (cost(ln_c) / points.len() as f64).sqrt()))
}

fn golden_section(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > tol {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossing_interpolates_in_log_temperature() {
        let t = [1.0, 0.1, 0.01];
        let s = [2.0, 1.5, 0.5];
        let x = crossing_temperature(&t, &s, 1.0).unwrap();
        assert!((x.log10() + 1.5).abs() < 1e-12);
        assert!(crossing_temperature(&t, &s, 0.1).is_none());
    }

    #[test]
    fn alternation_classification() {
        // Screened phase: raw entropy ±0.2 around zero.
        let kondo: Vec<f64> = (0..12)
            .map(|i| if i % 2 == 0 { -0.2 } else { 0.2 })
            .collect();
        let a = alternation(&kondo, 10);
        assert!((a + 0.4).abs() < 1e-12);
        assert_eq!(settled_phase(&kondo, a), Some(Phase::Kondo));
        let singlet = vec![1e-4; 12];
        assert_eq!(settled_phase(&singlet, a), Some(Phase::Singlet));
        let critical: Vec<f64> = (0..12)
            .map(|i| if i % 2 == 0 { 0.25 } else { 0.42 })
            .collect();
        assert_eq!(settled_phase(&critical, a), None);
    }

    #[test]
    fn plateau_detection() {
        let h = 0.5 * LN_2;
        let s = [2.0, 1.0, h + 0.01, h, h - 0.01, h, 0.2, 0.0, 0.0];
        let rows = s
            .iter()
            .enumerate()
            .map(|(i, &e)| crate::FlowRow {
                shell: i,
                temperature: 10f64.powi(-(i as i32)),
                entropy_total: e,
                entropy_reference: 0.0,
                entropy_imp: e,
                correlator: 0.0,
                dc_dt: 0.0,
                magnetization: 0.0,
                chi: 0.5,
            })
            .collect();
        let p = find_plateau(&FlowTables { rows }, 0.05).unwrap();
        assert_eq!((p.first_shell, p.last_shell), (3, 5));
        assert_eq!(p.shells(), 3);
    }

    #[test]
    fn crossover_fit_recovers_scale() {
        let (c, t_k) = (0.035, 1e-7);
        let mut pts = vec![];
        for dk in [2e-8, -3e-8] {
            for k in 0..30 {
                let t = 1e-8 * 3f64.powf(-(k as f64) / 2.0);
                let s = 0.5 * LN_2 + scaled_entropy(t * t_k / (c * dk * dk)).unwrap();
                pts.push((t, dk, s));
            }
        }
        let (fit, rms) = fit_crossover_scale(&pts, t_k).unwrap();
        assert!((fit / c - 1.0).abs() < 1e-6, "{fit}");
        assert!(rms < 1e-8);
    }
}
