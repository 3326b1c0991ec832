//! The two-impurity probe reduced density matrix.
//!
//! By spin symmetry the probe state is diagonal in the singlet/triplet basis, which this crate
//! always orders as `(S, T+1, T0, T-1)`. The populations are in one-to-one correspondence with
//! the observables `C = ⟨S_L·S_R⟩`, `M = ⟨S^z_L + S^z_R⟩` and `χ = ⟨(S^z_L + S^z_R)²⟩`.

use crate::error::{Error, Result};
use crate::estimation::{PopulationJacobian, QfiMatrix, NEGATIVE_SLACK, POPULATION_FLOOR};
use crate::Real;

/// Basis labels in storage order.
pub const BASIS: [&str; 4] = ["S", "T+1", "T0", "T-1"];

/// Diagonal probe populations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeState<R> {
    pub rho_s: R,
    pub rho_tp: R,
    pub rho_t0: R,
    pub rho_tm: R,
}

impl<R: Real> ProbeState<R> {
    /// Validates `ρ ∈ [0, 1]` and `Σρ = 1` (both within 1e-12); tiny negatives are clamped.
    pub fn new(rho_s: R, rho_tp: R, rho_t0: R, rho_tm: R) -> Result<Self> {
        Self::from_populations([rho_s, rho_tp, rho_t0, rho_tm])
    }

    pub fn from_populations(p: [R; 4]) -> Result<Self> {
        let slack = R::lit(NEGATIVE_SLACK);
        let mut q = p;
        for (v, name) in q.iter_mut().zip(BASIS) {
            if !v.is_finite() || *v < -slack || *v > R::one() + slack {
                return Err(Error::InvalidInput(format!(
                    "population {name} = {v} outside [0, 1]"
                )));
            }
            *v = v.max(R::zero());
        }
        let total: R = q.iter().copied().sum();
        if (total - R::one()).abs() > slack.max(R::epsilon() * R::lit(8.0)) {
            return Err(Error::InvalidInput(format!("populations sum to {total}")));
        }
        Ok(Self {
            rho_s: q[0],
            rho_tp: q[1],
            rho_t0: q[2],
            rho_tm: q[3],
        })
    }

    pub fn populations(&self) -> [R; 4] {
        [self.rho_s, self.rho_tp, self.rho_t0, self.rho_tm]
    }

    /// Total triplet weight.
    pub fn rho_t(&self) -> R {
        self.rho_tp + self.rho_t0 + self.rho_tm
    }
}

/// Probe observables `(C, M, χ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeObservables<R> {
    pub c: R,
    pub m: R,
    pub chi: R,
}

impl<R: Real> ProbeObservables<R> {
    pub fn new(c: R, m: R, chi: R) -> Self {
        Self { c, m, chi }
    }

    /// Checks the physical range implied by non-negative populations (within `tol`).
    pub fn is_physical(&self, tol: R) -> bool {
        let q = R::lit(0.25);
        self.c >= -R::lit(0.75) - tol
            && self.c <= q + tol
            && self.m.abs() <= R::one() + tol
            && self.chi >= -tol
            && self.chi <= R::one() + tol
            && self.chi >= self.m.abs() - tol
            && R::lit(0.75) + self.c - self.chi >= -tol
    }

    /// Population jacobian implied by the chain rule, given rows `[∂C, ∂M, ∂χ]` per parameter.
    pub fn population_jacobian<S: Into<String>>(
        &self,
        names: impl IntoIterator<Item = S>,
        jac: &[[R; 3]],
    ) -> Result<PopulationJacobian<R>> {
        let state = rdm_with_field(*self)?;
        let half = R::lit(0.5);
        let derivs = jac
            .iter()
            .map(|&[dc, dm, dchi]| vec![-dc, half * (dchi + dm), dc - dchi, half * (dchi - dm)])
            .collect();
        PopulationJacobian::new(names, state.populations().to_vec(), derivs)
    }
}

/// Zero-field probe state from the correlator alone: `ρ_S = 1/4 - C`, `ρ_T = 1/4 + C/3`.
pub fn rdm_zero_field<R: Real>(c: R) -> Result<ProbeState<R>> {
    let slack = R::lit(NEGATIVE_SLACK);
    if !c.is_finite() || c < -R::lit(0.75) - slack || c > R::lit(0.25) + slack {
        return Err(Error::InvalidInput(format!(
            "correlator {c} outside [-3/4, 1/4]"
        )));
    }
    let rho_t = (R::lit(0.25) + c / R::lit(3.0)).max(R::zero());
    Ok(ProbeState {
        rho_s: (R::lit(0.25) - c).max(R::zero()),
        rho_tp: rho_t,
        rho_t0: rho_t,
        rho_tm: rho_t,
    })
}

/// Probe state from `(C, M, χ)`:
/// `ρ_S = 1/4 - C`, `ρ_T0 = 3/4 + C - χ`, `ρ_T±1 = (χ ± M)/2`.
pub fn rdm_with_field<R: Real>(obs: ProbeObservables<R>) -> Result<ProbeState<R>> {
    let half = R::lit(0.5);
    let pops = [
        R::lit(0.25) - obs.c,
        half * (obs.chi + obs.m),
        R::lit(0.75) + obs.c - obs.chi,
        half * (obs.chi - obs.m),
    ];
    let slack = R::lit(NEGATIVE_SLACK);
    for (p, name) in pops.iter().zip(BASIS) {
        if !p.is_finite() || *p < -slack {
            return Err(Error::InconsistentObservables {
                name,
                value: p.to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    let [s, tp, t0, tm] = pops.map(|p| p.max(R::zero()));
    Ok(ProbeState {
        rho_s: s,
        rho_tp: tp,
        rho_t0: t0,
        rho_tm: tm,
    })
}

/// Inverse of [`rdm_with_field`].
pub fn observables_of<R: Real>(state: &ProbeState<R>) -> ProbeObservables<R> {
    ProbeObservables {
        c: -R::lit(0.75) * state.rho_s + R::lit(0.25) * state.rho_t(),
        m: state.rho_tp - state.rho_tm,
        chi: state.rho_tp + state.rho_tm,
    }
}

/// `χ ≈ 1 + 4C/3 - sqrt((1/2 + 2C/3)² - M²/3)`.
///
/// Follows from assuming geometric triplet ratios `ρ_T+1/ρ_T0 = ρ_T0/ρ_T-1`, which is exact in
/// the decoupled-probe limit and at small field. Never substituted automatically.
pub fn chi_ansatz<R: Real>(c: R, m: R) -> Result<R> {
    let a = R::lit(0.5) + R::lit(2.0) * c / R::lit(3.0);
    let radicand = a * a - m * m / R::lit(3.0);
    if radicand < R::zero() {
        return Err(Error::AnsatzDomain {
            radicand: radicand.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(R::one() + R::lit(4.0) * c / R::lit(3.0) - radicand.sqrt())
}

/// One term of the observable-form QFIM: `num_i num_j / den`, with the zero-population limits
/// handled like the population form.
fn obs_term<R: Real>(den: R, di: R, dj: R) -> R {
    let floor = R::lit(POPULATION_FLOOR);
    if den < floor {
        if di.abs() < floor || dj.abs() < floor {
            return R::zero();
        }
        return R::infinity();
    }
    di * dj / den
}

/// QFIM written directly in the observables. `jac[i] = [∂_i C, ∂_i M, ∂_i χ]`.
///
/// `H_ij = ∂(χ+M)∂(χ+M)/(2(χ+M)) + ∂(χ-M)∂(χ-M)/(2(χ-M)) + ∂(C-χ)∂(C-χ)/(3/4+C-χ) + ∂C∂C/(1/4-C)`.
pub fn qfim_from_observables<R: Real, S: Into<String>>(
    obs: ProbeObservables<R>,
    names: impl IntoIterator<Item = S>,
    jac: &[[R; 3]],
) -> Result<QfiMatrix<R>> {
    let names: Vec<String> = names.into_iter().map(Into::into).collect();
    if names.len() != jac.len() {
        return Err(Error::InvalidInput(format!(
            "{} labels for {} jacobian rows",
            names.len(),
            jac.len()
        )));
    }
    if !obs.is_physical(R::lit(NEGATIVE_SLACK)) {
        return Err(Error::InvalidInput(format!(
            "unphysical observables {obs:?}"
        )));
    }
    let two = R::lit(2.0);
    let plus = two * (obs.chi + obs.m);
    let minus = two * (obs.chi - obs.m);
    let zero_pol = R::lit(0.75) + obs.c - obs.chi;
    let singlet = R::lit(0.25) - obs.c;
    let n = jac.len();
    let mut elements = vec![R::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let [ci, mi, xi] = jac[i];
            let [cj, mj, xj] = jac[j];
            let terms = [
                obs_term(plus, xi + mi, xj + mj),
                obs_term(minus, xi - mi, xj - mj),
                obs_term(zero_pol, ci - xi, cj - xj),
                obs_term(singlet, ci, cj),
            ];
            let v = if terms.iter().any(|t| t.is_infinite()) {
                R::infinity()
            } else {
                terms.into_iter().sum()
            };
            elements[i * n + j] = v;
            elements[j * n + i] = v;
        }
    }
    QfiMatrix::new(names, elements)
}

/// Probe observables diagonal in the singlet/triplet basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeOperator {
    /// `S_L·S_R`
    Correlator,
    /// `S^z_L + S^z_R`
    Magnetization,
    /// `(S^z_L + S^z_R)²`
    MagnetizationSquared,
}

impl ProbeOperator {
    pub fn eigenvalues<R: Real>(self) -> [R; 4] {
        let v = match self {
            ProbeOperator::Correlator => [-0.75, 0.25, 0.25, 0.25],
            ProbeOperator::Magnetization => [0.0, 1.0, 0.0, -1.0],
            ProbeOperator::MagnetizationSquared => [0.0, 1.0, 0.0, 1.0],
        };
        v.map(R::lit)
    }

    pub fn mean<R: Real>(self, state: &ProbeState<R>) -> R {
        state
            .populations()
            .iter()
            .zip(self.eigenvalues::<R>())
            .map(|(&p, w)| p * w)
            .sum()
    }

    pub fn variance<R: Real>(self, state: &ProbeState<R>) -> R {
        let mean = self.mean(state);
        let second: R = state
            .populations()
            .iter()
            .zip(self.eigenvalues::<R>())
            .map(|(&p, w)| p * w * w)
            .sum();
        (second - mean * mean).max(R::zero())
    }

    /// `∂⟨Ω⟩` from population derivatives in basis order.
    pub fn mean_derivative<R: Real>(self, dpops: &[R]) -> R {
        dpops
            .iter()
            .zip(self.eigenvalues::<R>())
            .map(|(&d, w)| d * w)
            .sum()
    }
}
