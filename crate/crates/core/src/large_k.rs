//! Decoupled-probe backend: the isolated two-spin probe `K S_L·S_R + B (S^z_L + S^z_R)` in
//! equilibrium at temperature `T`.
//!
//! Level energies in basis order `(S, T+1, T0, T-1)` are `(-3K/4, K/4 + B, K/4, K/4 - B)`.

use crate::error::{invalid, Result};
use crate::estimation::{build_qfim, qsnr_report, ParamVector, PopulationJacobian, QsnrReport};
use crate::probe::{observables_of, ProbeObservables, ProbeState};
use crate::Real;

/// Temperature, probe coupling and control field, in shared energy units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LargeKParams<R> {
    pub temperature: R,
    pub coupling: R,
    pub field: R,
}

impl<R: Real> LargeKParams<R> {
    pub fn new(temperature: R, coupling: R, field: R) -> Result<Self> {
        if !(temperature > R::zero()) || !temperature.is_finite() {
            return Err(invalid(format!(
                "temperature must be positive and finite, got {temperature}"
            )));
        }
        if !coupling.is_finite() || !field.is_finite() {
            return Err(invalid("coupling and field must be finite"));
        }
        if field < R::zero() {
            return Err(invalid(format!("field must be non-negative, got {field}")));
        }
        Ok(Self {
            temperature,
            coupling,
            field,
        })
    }

    pub fn zero_field(temperature: R, coupling: R) -> Result<Self> {
        Self::new(temperature, coupling, R::zero())
    }

    pub fn energies(&self) -> [R; 4] {
        let q = R::lit(0.25) * self.coupling;
        [
            -R::lit(0.75) * self.coupling,
            q + self.field,
            q,
            q - self.field,
        ]
    }

    /// Applies a common scale factor to `T`, `K` and `B`.
    pub fn rescaled(&self, factor: R) -> Result<Self> {
        Self::new(
            self.temperature * factor,
            self.coupling * factor,
            self.field * factor,
        )
    }
}

fn boltzmann<R: Real>(p: &LargeKParams<R>) -> [R; 4] {
    let e = p.energies();
    let emin = e.iter().copied().fold(R::infinity(), R::min);
    let w = e.map(|x| (-(x - emin) / p.temperature).exp());
    let z: R = w.iter().copied().sum();
    w.map(|x| x / z)
}

/// Thermal populations, computed with the ground energy shifted to zero.
pub fn populations<R: Real>(p: &LargeKParams<R>) -> ProbeState<R> {
    let [s, tp, t0, tm] = boltzmann(p);
    ProbeState {
        rho_s: s,
        rho_tp: tp,
        rho_t0: t0,
        rho_tm: tm,
    }
}

/// Parameters of the decoupled probe that populations can be differentiated against.
pub const PARAMETERS: [&str; 3] = ["T", "K", "B"];

/// Analytic `∂ρ_i/∂λ` for `λ` in `T`, `K` or `B`.
pub fn population_derivative<R: Real>(p: &LargeKParams<R>, param: &str) -> Result<[R; 4]> {
    let rho = boltzmann(p);
    let e = p.energies();
    let emin = e.iter().copied().fold(R::infinity(), R::min);
    let t = p.temperature;
    // g_i = ∂(E_i / T)/∂λ; shifting E_i by a constant leaves ∂ρ unchanged.
    let g: [R; 4] = match param {
        "T" => e.map(|x| -(x - emin) / (t * t)),
        "K" => [-0.75, 0.25, 0.25, 0.25].map(|x| R::lit(x) / t),
        "B" => [0.0, 1.0, 0.0, -1.0].map(|x| R::lit(x) / t),
        other => return Err(invalid(format!("unknown large-K parameter {other}"))),
    };
    let mean: R = rho.iter().zip(&g).map(|(&r, &gi)| r * gi).sum();
    let mut d = [R::zero(); 4];
    for i in 0..4 {
        d[i] = rho[i] * (mean - g[i]);
    }
    Ok(d)
}

pub fn population_jacobian<R: Real>(
    p: &LargeKParams<R>,
    unknowns: &[&str],
) -> Result<PopulationJacobian<R>> {
    let derivs = unknowns
        .iter()
        .map(|name| population_derivative(p, name).map(|d| d.to_vec()))
        .collect::<Result<Vec<_>>>()?;
    PopulationJacobian::new(
        unknowns.iter().copied(),
        populations(p).populations().to_vec(),
        derivs,
    )
}

pub fn observables<R: Real>(p: &LargeKParams<R>) -> ProbeObservables<R> {
    observables_of(&populations(p))
}

/// `3 e^y / (3 + e^y)²`, evaluated without overflow.
fn singlet_triplet_weight<R: Real>(y: R) -> R {
    let three = R::lit(3.0);
    if y > R::zero() {
        let e = (-y).exp();
        three * e / ((R::one() + three * e) * (R::one() + three * e))
    } else {
        let e = y.exp();
        three * e / ((three + e) * (three + e))
    }
}

/// Zero-field thermometric QFI `3 e^{K/T} K² / ((3 + e^{K/T})² T⁴)`.
pub fn qfi_thermometry<R: Real>(temperature: R, coupling: R) -> R {
    let y = coupling / temperature;
    singlet_triplet_weight(y) * coupling * coupling / temperature.powi(4)
}

/// Zero-field coupling QFI `3 e^{K/T} / ((3 + e^{K/T})² T²)`.
pub fn qfi_coupling<R: Real>(temperature: R, coupling: R) -> R {
    singlet_triplet_weight(coupling / temperature) / (temperature * temperature)
}

/// Zero-field single-parameter QSNR as a function of `y = K/T`; identical for `T` and `K`.
pub fn qsnr_sp_universal<R: Real>(y: R) -> R {
    y * y * singlet_triplet_weight(y)
}

/// Location and height of a maximum of [`qsnr_sp_universal`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniversalMaximum<R> {
    pub y: R,
    pub qsnr: R,
}

/// Maximizes the universal zero-field QSNR over `y > 0` (antiferromagnetic) or `y < 0`.
///
/// Coarse scan with step 0.01 over `|y| ≤ 20`, then golden-section refinement to 1e-8.
pub fn maximize_universal<R: Real>(antiferromagnetic: bool) -> UniversalMaximum<R> {
    let sign = if antiferromagnetic {
        R::one()
    } else {
        -R::one()
    };
    let f = |u: R| qsnr_sp_universal(sign * u);
    let step = R::lit(0.01);
    let n = 2000;
    let mut best = 1;
    let mut best_val = f(step);
    for i in 2..n {
        let v = f(step * R::from_count(i));
        if v > best_val {
            best_val = v;
            best = i;
        }
    }
    let (mut a, mut b) = (
        step * R::from_count(best - 1),
        step * R::from_count(best + 1),
    );
    let inv_phi = R::lit(0.618_033_988_749_894_8);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while (b - a).abs() > R::lit(1e-8) {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        }
    }
    let u = R::lit(0.5) * (a + b);
    UniversalMaximum {
        y: sign * u,
        qsnr: f(u),
    }
}

/// Closed form of the multiparameter thermometric QSNR with field, in `t = T/B`, `k = K/B`:
///
/// `2 e^{2/t} (2 + cosh(1/t)) / ((1 + e^{1/t} + e^{2/t}) (1 + e^{1/t}(1 + e^{1/t} + e^{k/t})) t²)`.
pub fn qsnr_mp_tt_closed_form<R: Real>(t: R, k: R) -> R {
    // Divide numerator and denominator by a⁴ with a = e^{1/t} ≥ 1.
    let ia = (-t.recip()).exp();
    let ia2 = ia * ia;
    let ratio = ((k - R::one()) / t).exp(); // e^{k/t} / a
    let num = R::lit(4.0) * ia2 + ia + ia2 * ia;
    let den = (ia2 + ia + R::one()) * (ia2 + ia + R::one() + ratio) * t * t;
    num / den
}

/// Full two-parameter `(T, K)` pipeline: analytic populations, QFIM, inversion, QSNRs.
pub fn multiparameter_report<R: Real>(p: &LargeKParams<R>) -> Result<QsnrReport<R>> {
    let jac = population_jacobian(p, &["T", "K"])?;
    let h = build_qfim(&jac)?;
    let params = ParamVector::new(["T", "K"], vec![p.temperature, p.coupling])?;
    qsnr_report(&params, &h)
}

/// `(Q_MP(T,T), Q_MP(K,K))` as universal functions of `t = T/B`, `k = K/B`.
///
/// The thermometric entry is the closed form; the coupling entry comes from the generic
/// pipeline evaluated at `B = 1`.
pub fn qsnr_mp_universal<R: Real>(t: R, k: R) -> Result<(R, R)> {
    let p = LargeKParams::new(t, k, R::one())?;
    let report = multiparameter_report(&p)?;
    Ok((
        qsnr_mp_tt_closed_form(t, k),
        report.mp_of("K", "K").expect("K label present"),
    ))
}
