//! Log-gamma, digamma and trigamma for positive real arguments.
//!
//! Digamma and trigamma shift the argument upward with their recurrences until `x ≥ 10` and
//! then sum the Bernoulli asymptotic series. Log-gamma uses the Lanczos approximation
//! (`g = 7`, nine coefficients).

use crate::error::{Error, Result};
use crate::Real;

const ASYMPTOTIC_THRESHOLD: f64 = 10.0;

/// Even Bernoulli numbers `B_2 .. B_14`.
const BERNOULLI: [f64; 7] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
];

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn check<R: Real>(x: R) -> Result<()> {
    if x > R::zero() && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(x.to_f64().unwrap_or(f64::NAN)))
    }
}

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma<R: Real>(x: R) -> Result<R> {
    check(x)?;
    if x < R::lit(0.5) {
        // Γ(x) = Γ(x + 1) / x keeps the Lanczos sum in its accurate range.
        return Ok(ln_gamma(x + R::one())? - x.ln());
    }
    let z = x - R::one();
    let mut acc = R::lit(LANCZOS[0]);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc = acc + R::lit(c) / (z + R::from_count(i));
    }
    let t = z + R::lit(LANCZOS_G) + R::lit(0.5);
    let half_ln_2pi = R::lit(0.918_938_533_204_672_8);
    Ok(half_ln_2pi + (z + R::lit(0.5)) * t.ln() - t + acc.ln())
}

/// Digamma `ψ(x) = d ln Γ(x)/dx` for `x > 0`.
pub fn digamma<R: Real>(x: R) -> Result<R> {
    check(x)?;
    let mut x = x;
    let mut shift = R::zero();
    while x < R::lit(ASYMPTOTIC_THRESHOLD) {
        shift = shift + x.recip();
        x = x + R::one();
    }
    let inv2 = (x * x).recip();
    let mut series = R::zero();
    let mut pow = inv2;
    for (k, &b) in BERNOULLI.iter().enumerate() {
        series = series + R::lit(b / (2.0 * (k as f64 + 1.0))) * pow;
        pow = pow * inv2;
    }
    Ok(x.ln() - R::lit(0.5) / x - series - shift)
}

/// Trigamma `ψ'(x)` for `x > 0`.
pub fn trigamma<R: Real>(x: R) -> Result<R> {
    check(x)?;
    let mut x = x;
    let mut shift = R::zero();
    while x < R::lit(ASYMPTOTIC_THRESHOLD) {
        shift = shift + (x * x).recip();
        x = x + R::one();
    }
    let inv = x.recip();
    let inv2 = inv * inv;
    let mut series = R::zero();
    let mut pow = inv2 * inv;
    for &b in &BERNOULLI {
        series = series + R::lit(b) * pow;
        pow = pow * inv2;
    }
    Ok(inv + R::lit(0.5) * inv2 + series + shift)
}

/// `u (ψ(½ + u) - 1) - ln Γ(½ + u) + ½ ln π + ½ ln 2` for `u ≥ 0`.
///
/// For large `u` the individual terms grow like `u ln u` while the combination tends to zero,
/// so the asymptotic series of the combination is summed directly there.
pub(crate) fn entropy_deficit<R: Real>(u: R) -> Result<R> {
    if !(u >= R::zero()) {
        return Err(Error::Domain(u.to_f64().unwrap_or(f64::NAN)));
    }
    let half = R::lit(0.5);
    let x = u + half;
    if x < R::lit(20.0) {
        let half_ln_pi = R::lit(0.572_364_942_924_700_1);
        let half_ln_2 = R::lit(0.346_573_590_279_972_65);
        return Ok(u * (digamma(x)? - R::one()) - ln_gamma(x)? + half_ln_pi + half_ln_2);
    }
    // 1/(4x) + Σ_k [ -B_2k/(2k-1) x^{1-2k} + B_2k/(4k) x^{-2k} ]
    let inv = x.recip();
    let mut acc = R::lit(0.25) * inv;
    let mut pow = inv;
    for (i, &b) in BERNOULLI.iter().enumerate() {
        let k = i as f64 + 1.0;
        acc = acc - R::lit(b / (2.0 * k - 1.0)) * pow;
        pow = pow * inv;
        acc = acc + R::lit(b / (4.0 * k)) * pow;
        pow = pow * inv;
    }
    Ok(acc)
}
