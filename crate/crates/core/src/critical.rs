//! Exact universal solution around the two-impurity Kondo critical point.
//!
//! Everything here is a function of the detuning `δK = K - K_c` and the crossover scale
//! `T* = c δK² / T_K`. The correlator formulas contain a bare `ln T`, so temperatures must be
//! given in the same units the constants were extracted in (half-bandwidth `D = 1`).

use crate::error::{invalid, Error, Result};
use crate::special::{digamma, entropy_deficit, trigamma};
use crate::Real;

/// Fraction of `T_K` above which `T` or `|δK|` leaves the universal window.
pub const VALIDITY_FRACTION: f64 = 0.1;

/// Constants of the critical point at a given Kondo coupling `J`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalConstants<R> {
    pub k_c: R,
    pub t_k: R,
    pub c: R,
    pub c_star: R,
}

impl<R: Real> Default for CriticalConstants<R> {
    /// Values for `J = 1` in `D = 1` units.
    fn default() -> Self {
        Self {
            k_c: R::lit(0.618),
            t_k: R::lit(0.362),
            c: R::lit(0.035),
            c_star: R::lit(-0.385),
        }
    }
}

impl<R: Real> CriticalConstants<R> {
    pub fn new(k_c: R, t_k: R, c: R, c_star: R) -> Result<Self> {
        let consts = Self {
            k_c,
            t_k,
            c,
            c_star,
        };
        consts.validate()?;
        Ok(consts)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.k_c.is_finite() {
            return Err(invalid("K_c must be finite"));
        }
        if !(self.t_k > R::zero() && self.t_k.is_finite()) {
            return Err(invalid(format!("T_K must be positive, got {}", self.t_k)));
        }
        if !(self.c > R::zero() && self.c.is_finite()) {
            return Err(invalid(format!("c must be positive, got {}", self.c)));
        }
        if !(self.c_star > R::lit(-0.75) && self.c_star < R::lit(0.25)) {
            return Err(invalid(format!(
                "C* must lie in (-3/4, 1/4), got {}",
                self.c_star
            )));
        }
        Ok(())
    }

    pub fn detuning(&self, coupling: R) -> R {
        coupling - self.k_c
    }

    /// `Φ = ½ + T*/T`.
    pub fn phi(&self, temperature: R, delta_k: R) -> R {
        R::lit(0.5) + t_star(delta_k, self) / temperature
    }

    /// Whether `(T, δK)` lies inside the universal window `T, |δK| ≤ 0.1 T_K`.
    pub fn in_universal_window(&self, temperature: R, delta_k: R) -> bool {
        let lim = R::lit(VALIDITY_FRACTION) * self.t_k;
        temperature <= lim && delta_k.abs() <= lim
    }
}

/// A value together with a flag raised outside the universal window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Flagged<R> {
    pub value: R,
    pub outside_window: bool,
}

fn check_temperature<R: Real>(temperature: R) -> Result<()> {
    if temperature > R::zero() && temperature.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!(
            "temperature must be positive, got {temperature}"
        )))
    }
}

/// Crossover scale `T* = c δK² / T_K`.
pub fn t_star<R: Real>(delta_k: R, consts: &CriticalConstants<R>) -> R {
    consts.c * delta_k * delta_k / consts.t_k
}

/// Scaled crossover entropy `S̄(t) = (1/t)[ψ(½ + 1/t) - 1] - ln[Γ(½ + 1/t)/√π]`.
///
/// Runs from `-½ ln 2` at `t → 0` to `0` at `t → ∞`; `t = ∞` is accepted.
pub fn scaled_entropy<R: Real>(t: R) -> Result<R> {
    if !(t > R::zero()) {
        return Err(invalid(format!(
            "scaled temperature must be positive, got {t}"
        )));
    }
    if t.is_infinite() {
        return Ok(R::zero());
    }
    let half_ln_2 = R::LN_2() * R::lit(0.5);
    Ok(entropy_deficit(t.recip())? - half_ln_2)
}

/// Impurity entropy `S = ½ ln 2 + S̄(T/T*)` along the crossover.
pub fn entropy_crossover<R: Real>(
    temperature: R,
    delta_k: R,
    consts: &CriticalConstants<R>,
) -> Result<Flagged<R>> {
    check_temperature(temperature)?;
    let ts = t_star(delta_k, consts);
    let t = if ts == R::zero() {
        R::infinity()
    } else {
        temperature / ts
    };
    let value = R::LN_2() * R::lit(0.5) + scaled_entropy(t)?;
    Ok(Flagged {
        value,
        outside_window: !consts.in_universal_window(temperature, delta_k),
    })
}

/// `∂_T 𝓒 = 2cδK [T T_K - cδK² ψ'(Φ)] / (T² T_K²)`.
pub fn dc_dt<R: Real>(temperature: R, coupling: R, consts: &CriticalConstants<R>) -> Result<R> {
    check_temperature(temperature)?;
    let dk = consts.detuning(coupling);
    let (c, tk, t) = (consts.c, consts.t_k, temperature);
    let psi1 = trigamma(consts.phi(t, dk))?;
    let two = R::lit(2.0);
    Ok(two * c * dk * (t * tk - c * dk * dk * psi1) / (t * t * tk * tk))
}

/// `𝓒 = 2cδK [ln T + ψ(Φ)] / T_K + 𝓒*`.
pub fn correlator<R: Real>(
    temperature: R,
    coupling: R,
    consts: &CriticalConstants<R>,
) -> Result<R> {
    check_temperature(temperature)?;
    let dk = consts.detuning(coupling);
    let psi = digamma(consts.phi(temperature, dk))?;
    Ok(R::lit(2.0) * consts.c * dk * (temperature.ln() + psi) / consts.t_k + consts.c_star)
}

/// `∂_K 𝓒 = 2c [T T_K (ln T + ψ(Φ)) + 2cδK² ψ'(Φ)] / (T T_K²)`.
pub fn dc_dk<R: Real>(temperature: R, coupling: R, consts: &CriticalConstants<R>) -> Result<R> {
    check_temperature(temperature)?;
    let dk = consts.detuning(coupling);
    let (c, tk, t) = (consts.c, consts.t_k, temperature);
    let phi = consts.phi(t, dk);
    let (psi, psi1) = (digamma(phi)?, trigamma(phi)?);
    let two = R::lit(2.0);
    Ok(two * c * (t * tk * (t.ln() + psi) + two * c * dk * dk * psi1) / (t * tk * tk))
}

/// Single-parameter QSNRs `(𝓠_SP(T), 𝓠_SP(K))` from the closed forms.
///
/// Fails with [`Error::OutsideCriticalRegime`] when the correlator leaves `(-¾, ¼)`.
pub fn qsnr_critical<R: Real>(
    temperature: R,
    coupling: R,
    consts: &CriticalConstants<R>,
) -> Result<(R, R)> {
    let corr = correlator(temperature, coupling, consts)?;
    qsnr_critical_with_denominator(temperature, coupling, consts, corr)
}

/// Same as [`qsnr_critical`] with the population denominator evaluated at a chosen correlator.
///
/// Passing `consts.c_star` gives the commonly used approximation of the exact result.
pub fn qsnr_critical_with_denominator<R: Real>(
    temperature: R,
    coupling: R,
    consts: &CriticalConstants<R>,
    corr: R,
) -> Result<(R, R)> {
    check_temperature(temperature)?;
    if !(corr > R::lit(-0.75) && corr < R::lit(0.25)) {
        return Err(Error::OutsideCriticalRegime {
            correlator: corr.to_f64().unwrap_or(f64::NAN),
        });
    }
    let dk = consts.detuning(coupling);
    let (c, tk, t) = (consts.c, consts.t_k, temperature);
    let phi = consts.phi(t, dk);
    let (psi, psi1) = (digamma(phi)?, trigamma(phi)?);
    let two = R::lit(2.0);
    let four = R::lit(4.0);
    let den = t * t * tk.powi(4) * (R::lit(0.25) - corr) * (R::lit(0.75) + corr);
    let bracket_t = t * tk - c * dk * dk * psi1;
    let bracket_k = t * tk * (t.ln() + psi) + two * c * dk * dk * psi1;
    let q_t = four * c * c * dk * dk * bracket_t * bracket_t / den;
    let q_k = four * c * c * coupling * coupling * bracket_k * bracket_k / den;
    Ok((q_t, q_k))
}

/// Result of fitting `𝓠_SP(T) ≈ A T⁴ δK² / (a δK⁸ + T⁴)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticFit {
    pub a: f64,
    pub amplitude: f64,
    /// Root-mean-square residual in `ln 𝓠`.
    pub rms_log_residual: f64,
}

/// Least-squares fit of the low-temperature asymptote of `𝓠_SP(T)`.
///
/// Residuals are taken in `ln 𝓠` so that every decade of the grid carries equal weight. For a
/// fixed `a` the best amplitude is closed-form; `ln a` is then found by golden-section search.
/// Grid points with `δK = 0` or a non-physical correlator are skipped.
pub fn fit_asymptotic_qsnr_t(
    temperatures: &[f64],
    detunings: &[f64],
    consts: &CriticalConstants<f64>,
) -> Result<AsymptoticFit> {
    let mut samples = Vec::new();
    for &dk in detunings {
        for &t in temperatures {
            if dk == 0.0 {
                continue;
            }
            if let Ok((q, _)) = qsnr_critical(t, consts.k_c + dk, consts) {
                if q > 0.0 && q.is_finite() {
                    samples.push((t, dk, q.ln()));
                }
            }
        }
    }
    if samples.len() < 3 {
        return Err(invalid(
            "asymptotic fit needs at least three usable grid points",
        ));
    }
    let n = samples.len() as f64;
    let residuals = |ln_a: f64| -> (f64, f64) {
        let a = ln_a.exp();
        let shape: Vec<f64> = samples
            .iter()
            .map(|&(t, dk, lq)| {
                let t4 = t.powi(4);
                lq - (t4 * dk * dk / (a * dk.powi(8) + t4)).ln()
            })
            .collect();
        let ln_amp = shape.iter().sum::<f64>() / n;
        let ss = shape.iter().map(|r| (r - ln_amp).powi(2)).sum::<f64>();
        (ss, ln_amp)
    };

    // Coarse scan over twelve decades, then golden-section refinement around the best point.
    let (lo, hi, steps) = (-20.0_f64, 20.0_f64, 400);
    let h = (hi - lo) / steps as f64;
    let best = (0..=steps)
        .map(|i| lo + h * i as f64)
        .min_by(|x, y| residuals(*x).0.total_cmp(&residuals(*y).0))
        .expect("non-empty scan");
    let (mut x0, mut x1) = (best - h, best + h);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    while x1 - x0 > 1e-10 {
        let (c, d) = (x1 - g * (x1 - x0), x0 + g * (x1 - x0));
        if residuals(c).0 < residuals(d).0 {
            x1 = d;
        } else {
            x0 = c;
        }
    }
    let ln_a = 0.5 * (x0 + x1);
    let (ss, ln_amp) = residuals(ln_a);
    Ok(AsymptoticFit {
        a: ln_a.exp(),
        amplitude: ln_amp.exp(),
        rms_log_residual: (ss / n).sqrt(),
    })
}
