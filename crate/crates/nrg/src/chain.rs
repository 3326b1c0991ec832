//! Run configuration and the flat-band Wilson chain.

use crate::error::{invalid, Result};

/// Discretization, truncation and temperature-mapping parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NrgConfig {
    /// Logarithmic discretization parameter `Λ`.
    pub lambda: f64,
    /// Number of states kept after each diagonalization (`N_s`).
    pub kept_states: usize,
    /// Number of Wilson shells `N`; shell `n` holds sites `0..=n` of both channels.
    pub chain_length: usize,
    /// Conduction half-bandwidth `D`.
    pub band_halfwidth: f64,
    /// Prefactor `w` in `T_n = w D Λ^{-(n-1)/2}`.
    pub temperature_prefactor: f64,
    /// Kept states are also limited to rescaled energies below this cutoff. Truncating the
    /// impurity and reference runs at the same energy makes their truncation errors cancel in
    /// the impurity entropy; `kept_states` still caps the count.
    pub energy_cutoff: Option<f64>,
    /// Upper bound on the memory held by one iteration's block matrices.
    pub memory_budget_bytes: usize,
}

impl Default for NrgConfig {
    fn default() -> Self {
        Self {
            lambda: 3.0,
            kept_states: 4000,
            chain_length: 50,
            band_halfwidth: 1.0,
            temperature_prefactor: 0.5,
            energy_cutoff: Some(5.0),
            memory_budget_bytes: 2 << 30,
        }
    }
}

impl NrgConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 1.0 && self.lambda <= 10.0) {
            return Err(invalid(format!(
                "lambda must lie in (1, 10], got {}",
                self.lambda
            )));
        }
        if self.kept_states < 100 {
            return Err(invalid(format!(
                "kept_states must be at least 100, got {}",
                self.kept_states
            )));
        }
        if self.chain_length < 10 {
            return Err(invalid(format!(
                "chain_length must be at least 10, got {}",
                self.chain_length
            )));
        }
        if !(self.band_halfwidth > 0.0 && self.band_halfwidth.is_finite()) {
            return Err(invalid("band_halfwidth must be positive"));
        }
        if !(self.temperature_prefactor > 0.0 && self.temperature_prefactor.is_finite()) {
            return Err(invalid("temperature_prefactor must be positive"));
        }
        if let Some(e) = self.energy_cutoff {
            if !(e > 0.0 && e.is_finite()) {
                return Err(invalid(format!("energy_cutoff must be positive, got {e}")));
            }
        }
        Ok(())
    }

    /// `T_n = w D Λ^{-(n-1)/2}`.
    pub fn shell_temperature(&self, n: usize) -> f64 {
        self.temperature_prefactor * self.band_halfwidth * self.lambda.powf(-(n as f64 - 1.0) / 2.0)
    }

    /// Characteristic energy of shell `n`, `(D/2)(1 + Λ⁻¹) Λ^{-(n-1)/2}`; also used for the
    /// half step that adds the left site of shell `n` (offset by `Λ^{1/4}`).
    pub fn shell_scale(&self, n: f64) -> f64 {
        0.5 * self.band_halfwidth * (1.0 + 1.0 / self.lambda) * self.lambda.powf(-(n - 1.0) / 2.0)
    }

    /// Shell index whose temperature is closest to `t` (clamped to the chain).
    pub fn shell_for_temperature(&self, t: f64) -> usize {
        let x = 1.0
            - 2.0 * (t / (self.temperature_prefactor * self.band_halfwidth)).ln()
                / self.lambda.ln();
        (x.round().max(0.0) as usize).min(self.chain_length)
    }
}

/// `ξ_n = (1 - Λ^{-n-1}) / √((1 - Λ^{-2n-1})(1 - Λ^{-2n-3}))`.
pub fn xi(lambda: f64, n: usize) -> f64 {
    let n = n as f64;
    (1.0 - lambda.powf(-n - 1.0))
        / ((1.0 - lambda.powf(-2.0 * n - 1.0)) * (1.0 - lambda.powf(-2.0 * n - 3.0))).sqrt()
}

/// Hoppings `t_0 .. t_{N-1}` of one channel; both channels share them.
pub fn wilson_chain(config: &NrgConfig) -> Result<Vec<f64>> {
    config.validate()?;
    let (l, d) = (config.lambda, config.band_halfwidth);
    Ok((0..config.chain_length)
        .map(|n| 0.5 * d * (1.0 + 1.0 / l) * l.powf(-(n as f64) / 2.0) * xi(l, n))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hoppings() {
        let cfg = NrgConfig {
            lambda: 2.5,
            chain_length: 61,
            ..NrgConfig::default()
        };
        let t = wilson_chain(&cfg).unwrap();
        assert!((xi(2.5, 0) - 0.6 / (0.6f64 * 0.936).sqrt()).abs() < 1e-14);
        assert!((xi(2.5, 0) - 0.80064).abs() < 1e-5);
        let asym = 0.5 * 1.4 * 2.5f64.powf(-30.0);
        assert!((t[60] / asym - 1.0).abs() < 1e-10);
        assert!(t.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn config_validation() {
        assert!(NrgConfig::default().validate().is_ok());
        assert!(NrgConfig {
            lambda: 1.0,
            ..NrgConfig::default()
        }
        .validate()
        .is_err());
        assert!(NrgConfig {
            lambda: 11.0,
            ..NrgConfig::default()
        }
        .validate()
        .is_err());
        assert!(NrgConfig {
            kept_states: 99,
            ..NrgConfig::default()
        }
        .validate()
        .is_err());
        assert!(NrgConfig {
            chain_length: 9,
            ..NrgConfig::default()
        }
        .validate()
        .is_err());
        assert!(NrgConfig {
            energy_cutoff: Some(0.0),
            ..NrgConfig::default()
        }
        .validate()
        .is_err());
        assert!(NrgConfig {
            energy_cutoff: None,
            ..NrgConfig::default()
        }
        .validate()
        .is_ok());
    }

    #[test]
    fn temperature_shell_roundtrip() {
        let cfg = NrgConfig::default();
        for n in 0..=cfg.chain_length {
            assert_eq!(cfg.shell_for_temperature(cfg.shell_temperature(n)), n);
        }
    }
}
