//! Parameter-agnostic estimation algebra.
//!
//! A probe whose eigenbasis does not move with the parameters is fully described by its
//! populations `ρ_k(λ)` and their derivatives. From those this module builds the quantum Fisher
//! information matrix `H_ij = Σ_k ∂_i ρ_k ∂_j ρ_k / ρ_k`, inverts it, and reports the
//! single-parameter QSNR `λ_i² H_ii` and the multiparameter QSNR `|λ_i λ_j| / (H⁻¹)_ij`.
//!
//! Sign convention: off-diagonal multiparameter QSNRs are stored signed. For two parameters
//! `(H⁻¹)_AB = -H_AB / det H`, so a positive QFIM cross term yields a negative entry.

use crate::error::{invalid, Error, Result};
use crate::linalg;
use crate::Real;

/// Population below which a probability is treated as exactly zero (`ε_pop`).
pub const POPULATION_FLOOR: f64 = 1e-14;
/// Relative determinant threshold that declares a QFIM singular (`ε_sing`).
pub const SINGULARITY_THRESHOLD: f64 = 1e-12;
/// Negative rounding residue tolerated (and clamped to zero) in populations.
pub const NEGATIVE_SLACK: f64 = 1e-12;
/// Tolerance on `Σ ρ_k = 1`.
pub const NORMALIZATION_TOL: f64 = 1e-12;
/// Tolerance on `Σ_k ∂ρ_k = 0` per parameter.
pub const DERIVATIVE_SUM_TOL: f64 = 1e-10;

/// Label conventionally used for the temperature parameter.
pub const TEMPERATURE: &str = "T";

/// Named parameter values, e.g. `T`, `K`, `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector<R> {
    names: Vec<String>,
    values: Vec<R>,
}

impl<R: Real> ParamVector<R> {
    pub fn new<S: Into<String>>(
        names: impl IntoIterator<Item = S>,
        values: Vec<R>,
    ) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.len() != values.len() {
            return Err(invalid(format!(
                "{} names for {} values",
                names.len(),
                values.len()
            )));
        }
        check_unique(&names)?;
        for (name, v) in names.iter().zip(&values) {
            if !v.is_finite() {
                return Err(invalid(format!("parameter {name} is not finite")));
            }
            if name == TEMPERATURE && *v <= R::zero() {
                return Err(invalid(format!("temperature must be positive, got {v}")));
            }
        }
        Ok(Self { names, values })
    }

    pub fn from_pairs(pairs: &[(&str, R)]) -> Result<Self> {
        Self::new(
            pairs.iter().map(|(n, _)| *n),
            pairs.iter().map(|(_, v)| *v).collect(),
        )
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &[R] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<R> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.values[i])
    }
}

fn check_unique(names: &[String]) -> Result<()> {
    for (i, a) in names.iter().enumerate() {
        if names[..i].contains(a) {
            return Err(invalid(format!("duplicate parameter label {a}")));
        }
    }
    Ok(())
}

/// Probe populations and their derivatives with respect to each named parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationJacobian<R> {
    names: Vec<String>,
    populations: Vec<R>,
    derivs: Vec<Vec<R>>,
}

impl<R: Real> PopulationJacobian<R> {
    /// Validates normalization and derivative sums. Populations in `[-1e-12, 0)` are clamped to 0.
    pub fn new<S: Into<String>>(
        names: impl IntoIterator<Item = S>,
        populations: Vec<R>,
        derivs: Vec<Vec<R>>,
    ) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        check_unique(&names)?;
        if names.is_empty() {
            return Err(invalid("at least one parameter row is required"));
        }
        if names.len() != derivs.len() {
            return Err(invalid(format!(
                "{} labels for {} derivative rows",
                names.len(),
                derivs.len()
            )));
        }
        let slack = R::lit(NEGATIVE_SLACK);
        let mut populations = populations;
        for p in populations.iter_mut() {
            if !p.is_finite() || *p < -slack {
                return Err(invalid(format!("population {p} is negative or not finite")));
            }
            if *p < R::zero() {
                *p = R::zero();
            }
        }
        let total: R = populations.iter().copied().sum();
        if (total - R::one()).abs() > R::lit(NORMALIZATION_TOL).max(R::epsilon() * R::lit(8.0)) {
            return Err(invalid(format!("populations sum to {total}, not 1")));
        }
        for (name, row) in names.iter().zip(&derivs) {
            if row.len() != populations.len() {
                return Err(invalid(format!(
                    "derivative row {name} has {} entries",
                    row.len()
                )));
            }
            if row.iter().any(|d| d.is_nan()) {
                return Err(invalid(format!("derivative row {name} contains NaN")));
            }
            let s: R = row.iter().copied().sum();
            let scale = row.iter().fold(R::zero(), |m, d| m.max(d.abs()));
            let tol = R::lit(DERIVATIVE_SUM_TOL).max(R::epsilon() * R::lit(16.0) * scale);
            if s.abs() > tol {
                return Err(invalid(format!("derivatives of {name} sum to {s}, not 0")));
            }
        }
        Ok(Self {
            names,
            populations,
            derivs,
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn populations(&self) -> &[R] {
        &self.populations
    }

    pub fn derivs(&self) -> &[Vec<R>] {
        &self.derivs
    }

    pub fn row(&self, name: &str) -> Option<&[R]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.derivs[i].as_slice())
    }

    /// Keeps only the named parameter rows, in the given order.
    pub fn restrict(&self, keep: &[&str]) -> Result<Self> {
        let mut derivs = Vec::with_capacity(keep.len());
        for name in keep {
            let row = self
                .row(name)
                .ok_or_else(|| invalid(format!("unknown parameter {name}")))?;
            derivs.push(row.to_vec());
        }
        Ok(Self {
            names: keep.iter().map(|s| s.to_string()).collect(),
            populations: self.populations.clone(),
            derivs,
        })
    }
}

/// One Fisher term `d_i d_j / ρ`, with the `0·0/0` limit dropped and divergences mapped to `+∞`.
fn fisher_term<R: Real>(rho: R, di: R, dj: R) -> R {
    let floor = R::lit(POPULATION_FLOOR);
    if rho < floor {
        if di.abs() < floor || dj.abs() < floor {
            return R::zero();
        }
        return if (di > R::zero()) == (dj > R::zero()) {
            R::infinity()
        } else {
            R::neg_infinity()
        };
    }
    di * dj / rho
}

fn sum_terms<R: Real>(terms: impl Iterator<Item = R>) -> R {
    // +∞ and -∞ together only arise for cross terms of divergent directions; report +∞.
    let mut acc = R::zero();
    for t in terms {
        if t.is_infinite() {
            return R::infinity();
        }
        acc = acc + t;
    }
    acc
}

/// `Σ_k (∂_λ ρ_k)² / ρ_k` for a jacobian with exactly one parameter row.
///
/// Returns `+∞` when a vanishing population carries a non-vanishing derivative.
pub fn single_parameter_qfi<R: Real>(pj: &PopulationJacobian<R>) -> Result<R> {
    if pj.derivs.len() != 1 {
        return Err(invalid(format!(
            "expected one parameter row, got {}",
            pj.derivs.len()
        )));
    }
    let d = &pj.derivs[0];
    Ok(sum_terms(
        pj.populations
            .iter()
            .zip(d)
            .map(|(&rho, &di)| fisher_term(rho, di, di)),
    ))
}

/// Symmetric quantum Fisher information matrix with cached determinant.
#[derive(Debug, Clone, PartialEq)]
pub struct QfiMatrix<R> {
    names: Vec<String>,
    elements: Vec<R>,
    det: R,
}

impl<R: Real> QfiMatrix<R> {
    /// Wraps a row-major `n × n` matrix, checking symmetry, non-negative diagonal and
    /// positive semidefiniteness (finite matrices only).
    pub fn new<S: Into<String>>(
        names: impl IntoIterator<Item = S>,
        elements: Vec<R>,
    ) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        check_unique(&names)?;
        let n = names.len();
        if elements.len() != n * n {
            return Err(invalid(format!(
                "{} elements for a {n}x{n} matrix",
                elements.len()
            )));
        }
        if elements.iter().any(|x| x.is_nan()) {
            return Err(invalid("QFIM contains NaN"));
        }
        let m = Self::unchecked(names, elements);
        let norm = m.norm();
        for i in 0..n {
            if m.get(i, i) < R::zero() {
                return Err(invalid(format!("negative diagonal element H[{i}][{i}]")));
            }
            for j in 0..i {
                let (a, b) = (m.get(i, j), m.get(j, i));
                if a.is_finite() && (a - b).abs() > R::lit(1e-12) * norm.max(R::one()) {
                    return Err(invalid(format!("QFIM not symmetric at ({i},{j})")));
                }
            }
        }
        if m.is_finite() {
            let min = m.min_eigenvalue();
            if min < -R::lit(1e-10) * norm {
                return Err(invalid(format!(
                    "QFIM not positive semidefinite (eigenvalue {min})"
                )));
            }
        }
        Ok(m)
    }

    pub(crate) fn unchecked(names: Vec<String>, elements: Vec<R>) -> Self {
        let n = names.len();
        let det = linalg::determinant(n, &elements);
        Self {
            names,
            elements,
            det,
        }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn get(&self, i: usize, j: usize) -> R {
        self.elements[i * self.dim() + j]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Element by parameter labels.
    pub fn element(&self, a: &str, b: &str) -> Option<R> {
        Some(self.get(self.index_of(a)?, self.index_of(b)?))
    }

    pub fn elements(&self) -> &[R] {
        &self.elements
    }

    pub fn determinant(&self) -> R {
        self.det
    }

    /// Frobenius norm.
    pub fn norm(&self) -> R {
        self.elements.iter().map(|&x| x * x).sum::<R>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.elements.iter().all(|x| x.is_finite())
    }

    pub fn min_eigenvalue(&self) -> R {
        linalg::symmetric_eigenvalues(self.dim(), &self.elements)[0]
    }
}

/// `H_ij = Σ_k ∂_i ρ_k ∂_j ρ_k / ρ_k`.
pub fn build_qfim<R: Real>(pj: &PopulationJacobian<R>) -> Result<QfiMatrix<R>> {
    let n = pj.derivs.len();
    let mut elements = vec![R::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let v = sum_terms(
                pj.populations
                    .iter()
                    .enumerate()
                    .map(|(k, &rho)| fisher_term(rho, pj.derivs[i][k], pj.derivs[j][k])),
            );
            elements[i * n + j] = v;
            elements[j * n + i] = v;
        }
    }
    QfiMatrix::new(pj.names.clone(), elements)
}

/// Outcome of inverting a QFIM.
#[derive(Debug, Clone, PartialEq)]
pub enum Inversion<R> {
    /// Row-major inverse. Rows and columns of parameters with infinite information are zero.
    Inverse(Vec<R>),
    Singular,
}

impl<R> Inversion<R> {
    pub fn is_singular(&self) -> bool {
        matches!(self, Inversion::Singular)
    }
}

/// Inverts `H`, or returns a singular verdict when
/// `|det H| ≤ ε_sing · Π_i max(H_ii, ε_pop)`.
///
/// Parameters with an infinite diagonal element are treated as known: they are removed before
/// inversion and receive zero rows and columns in the returned inverse.
pub fn invert_qfim<R: Real>(h: &QfiMatrix<R>) -> Inversion<R> {
    let n = h.dim();
    let finite: Vec<usize> = (0..n).filter(|&i| h.get(i, i).is_finite()).collect();
    let m = finite.len();
    let mut sub = Vec::with_capacity(m * m);
    for &i in &finite {
        for &j in &finite {
            let v = h.get(i, j);
            sub.push(if v.is_finite() { v } else { R::zero() });
        }
    }
    let floor = R::lit(POPULATION_FLOOR);
    let det = linalg::determinant(m, &sub);
    let scale = finite
        .iter()
        .fold(R::one(), |acc, &i| acc * h.get(i, i).max(floor));
    if m > 0 && det.abs() <= R::lit(SINGULARITY_THRESHOLD) * scale {
        return Inversion::Singular;
    }
    let sub_inv = if m == 2 {
        // Closed-form adjugate for the two-parameter case.
        let (a, b, d) = (sub[0], sub[1], sub[3]);
        vec![d / det, -b / det, -b / det, a / det]
    } else {
        match linalg::inverse(m, &sub) {
            Some(inv) => inv,
            None => return Inversion::Singular,
        }
    };
    let mut inv = vec![R::zero(); n * n];
    for (a, &i) in finite.iter().enumerate() {
        for (b, &j) in finite.iter().enumerate() {
            inv[i * n + j] = sub_inv[a * m + b];
        }
    }
    Inversion::Inverse(inv)
}

/// Single- and multiparameter QSNRs for one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct QsnrReport<R> {
    pub names: Vec<String>,
    /// `λ_i² H_ii` per parameter.
    pub sp: Vec<R>,
    /// Row-major `|λ_i λ_j| / (H⁻¹)_ij`, signed off the diagonal; all zero when singular.
    pub mp: Vec<R>,
    /// Row-major `H_ij / sqrt(H_ii H_jj)`.
    pub correlation: Vec<R>,
    pub determinant: R,
    pub singular: bool,
}

impl<R: Real> QsnrReport<R> {
    fn idx(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn sp_of(&self, name: &str) -> Option<R> {
        self.idx(name).map(|i| self.sp[i])
    }

    pub fn mp_of(&self, a: &str, b: &str) -> Option<R> {
        let n = self.names.len();
        Some(self.mp[self.idx(a)? * n + self.idx(b)?])
    }

    pub fn correlation_of(&self, a: &str, b: &str) -> Option<R> {
        let n = self.names.len();
        Some(self.correlation[self.idx(a)? * n + self.idx(b)?])
    }
}

pub fn qsnr_report<R: Real>(params: &ParamVector<R>, h: &QfiMatrix<R>) -> Result<QsnrReport<R>> {
    if params.names() != h.names() {
        return Err(invalid(format!(
            "parameter labels {:?} do not match QFIM labels {:?}",
            params.names(),
            h.names()
        )));
    }
    let n = h.dim();
    let lam = params.values();
    let sp: Vec<R> = (0..n).map(|i| lam[i] * lam[i] * h.get(i, i)).collect();

    let mut correlation = vec![R::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            correlation[i * n + j] = if i == j {
                R::one()
            } else {
                let (hii, hjj, hij) = (h.get(i, i), h.get(j, j), h.get(i, j));
                if hii == R::zero() || hjj == R::zero() || !hij.is_finite() {
                    R::zero()
                } else {
                    (hij / (hii * hjj).sqrt()).max(-R::one()).min(R::one())
                }
            };
        }
    }

    let (mp, singular) = match invert_qfim(h) {
        Inversion::Singular => (vec![R::zero(); n * n], true),
        Inversion::Inverse(inv) => {
            let mut mp = vec![R::zero(); n * n];
            for i in 0..n {
                for j in 0..n {
                    let num = (lam[i] * lam[j]).abs();
                    let den = inv[i * n + j];
                    mp[i * n + j] = if den != R::zero() {
                        num / den
                    } else if i != j && h.get(i, j) > R::zero() {
                        R::neg_infinity()
                    } else {
                        R::infinity()
                    };
                }
            }
            (mp, false)
        }
    };
    Ok(QsnrReport {
        names: h.names().to_vec(),
        sp,
        mp,
        correlation,
        determinant: h.determinant(),
        singular,
    })
}

/// Error-propagation SNR `λ² |∂_λ⟨Ω⟩|² / Var[Ω]` of a (generally sub-optimal) measurement.
pub fn suboptimal_snr<R: Real>(lambda: R, mean_deriv: R, variance: R) -> Result<R> {
    if !(variance > R::zero()) {
        return Err(Error::InvalidInput(format!(
            "observable variance must be positive, got {variance} (deterministic observable)"
        )));
    }
    Ok(lambda * lambda * mean_deriv * mean_deriv / variance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn jac(pops: &[f64], rows: &[(&str, &[f64])]) -> PopulationJacobian<f64> {
        PopulationJacobian::new(
            rows.iter().map(|(n, _)| *n),
            pops.to_vec(),
            rows.iter().map(|(_, r)| r.to_vec()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn parameter_independent_state_has_zero_qfi() {
        let pj = jac(&[0.25; 4], &[("T", &[0.0; 4])]);
        assert_eq!(single_parameter_qfi(&pj).unwrap(), 0.0);
    }

    #[test]
    fn maximally_mixed_probe_with_unit_correlator_slope() {
        // ρ_S = 1/4 - C, ρ_T = 1/4 + C/3 at C = 0 with dC/dλ = 1.
        let pj = jac(
            &[0.25; 4],
            &[("K", &[-1.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0])],
        );
        assert_relative_eq!(
            single_parameter_qfi(&pj).unwrap(),
            16.0 / 3.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn vanishing_population_with_slope_diverges() {
        let pj = jac(&[1.0, 0.0, 0.0, 0.0], &[("T", &[-1e-3, 1e-3, 0.0, 0.0])]);
        assert!(single_parameter_qfi(&pj).unwrap().is_infinite());
        let quiet = jac(&[1.0, 0.0, 0.0, 0.0], &[("T", &[0.0; 4])]);
        assert_eq!(single_parameter_qfi(&quiet).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_populations() {
        let bad_sum = PopulationJacobian::new(["T"], vec![0.5, 0.4], vec![vec![0.0, 0.0]]);
        assert!(matches!(bad_sum, Err(Error::InvalidInput(_))));
        let negative = PopulationJacobian::new(["T"], vec![1.1, -0.1], vec![vec![0.0, 0.0]]);
        assert!(negative.is_err());
        let drift = PopulationJacobian::new(["T"], vec![0.5, 0.5], vec![vec![1.0, 0.0]]);
        assert!(drift.is_err());
        let dup =
            PopulationJacobian::new(["T", "T"], vec![0.5, 0.5], vec![vec![0.0; 2], vec![0.0; 2]]);
        assert!(dup.is_err());
        // tiny negative rounding residue is clamped
        let clamped =
            PopulationJacobian::new(["T"], vec![1.0, -1e-13], vec![vec![0.0, 0.0]]).unwrap();
        assert_eq!(clamped.populations()[1], 0.0);
    }

    #[test]
    fn proportional_rows_give_singular_qfim() {
        let pops = [0.4, 0.3, 0.2, 0.1];
        let a = [0.1, -0.05, -0.03, -0.02];
        let b: Vec<f64> = a.iter().map(|x| -2.5 * x).collect();
        let h = build_qfim(&jac(&pops, &[("T", &a), ("K", &b)])).unwrap();
        assert!(h.determinant().abs() <= 1e-14 * h.norm().powi(2));
        assert!(invert_qfim(&h).is_singular());
        let params = ParamVector::from_pairs(&[("T", 0.7), ("K", 1.3)]).unwrap();
        let rep = qsnr_report(&params, &h).unwrap();
        assert!(rep.singular);
        assert!(rep.mp.iter().all(|&x| x == 0.0));
        assert!(rep.sp.iter().all(|&x| x.is_finite() && x > 0.0));
    }

    #[test]
    fn disjoint_population_pairs_give_diagonal_qfim() {
        let pops = [0.25; 4];
        let h = build_qfim(&jac(
            &pops,
            &[("T", &[0.1, -0.1, 0.0, 0.0]), ("K", &[0.0, 0.0, 0.2, -0.2])],
        ))
        .unwrap();
        assert_eq!(h.get(0, 1), 0.0);
        assert_relative_eq!(h.get(0, 0), 0.08, max_relative = 1e-14);
        assert_relative_eq!(h.get(1, 1), 0.32, max_relative = 1e-14);
        let params = ParamVector::from_pairs(&[("T", 2.0), ("K", 3.0)]).unwrap();
        let rep = qsnr_report(&params, &h).unwrap();
        assert_relative_eq!(
            rep.mp_of("T", "T").unwrap(),
            rep.sp_of("T").unwrap(),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            rep.mp_of("K", "K").unwrap(),
            rep.sp_of("K").unwrap(),
            max_relative = 1e-14
        );
        assert_eq!(rep.correlation_of("T", "K").unwrap(), 0.0);
    }

    #[test]
    fn inversion_of_simple_matrices() {
        let id = QfiMatrix::new(["a", "b"], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(
            invert_qfim(&id),
            Inversion::Inverse(vec![1.0, 0.0, 0.0, 1.0])
        );
        let d = QfiMatrix::new(["a", "b"], vec![4.0, 0.0, 0.0, 0.5]).unwrap();
        assert_eq!(
            invert_qfim(&d),
            Inversion::Inverse(vec![0.25, 0.0, 0.0, 2.0])
        );
        let r1 = QfiMatrix::new(["a", "b"], vec![1.0, 2.0, 2.0, 4.0]).unwrap();
        assert!(invert_qfim(&r1).is_singular());
        let three = QfiMatrix::new(
            ["a", "b", "c"],
            vec![2.0, 0.5, 0.1, 0.5, 1.0, 0.2, 0.1, 0.2, 3.0],
        )
        .unwrap();
        let Inversion::Inverse(inv) = invert_qfim(&three) else {
            panic!("unexpectedly singular")
        };
        let back = linalg::inverse(3, &inv).unwrap();
        for (x, y) in back.iter().zip(three.elements()) {
            assert_relative_eq!(x, y, max_relative = 1e-12);
        }
    }

    #[test]
    fn off_diagonal_sign_follows_adjugate() {
        let h = QfiMatrix::new(["T", "K"], vec![2.0, 0.5, 0.5, 1.0]).unwrap();
        let params = ParamVector::from_pairs(&[("T", 1.0), ("K", -2.0)]).unwrap();
        let rep = qsnr_report(&params, &h).unwrap();
        let det = 2.0 - 0.25;
        assert_relative_eq!(
            rep.mp_of("T", "K").unwrap(),
            -2.0 * det / 0.5,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            rep.mp_of("T", "T").unwrap(),
            det / 1.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn infinite_information_marks_parameter_known() {
        let h = QfiMatrix::new(["T", "K"], vec![2.0, 0.5, 0.5, f64::INFINITY]).unwrap();
        let params = ParamVector::from_pairs(&[("T", 1.5), ("K", 1.0)]).unwrap();
        let rep = qsnr_report(&params, &h).unwrap();
        assert!(!rep.singular);
        assert_relative_eq!(
            rep.mp_of("T", "T").unwrap(),
            rep.sp_of("T").unwrap(),
            max_relative = 1e-14
        );
        assert!(rep.mp_of("K", "K").unwrap().is_infinite());
    }

    #[test]
    fn label_mismatch_is_rejected() {
        let h = QfiMatrix::new(["T", "K"], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let params = ParamVector::from_pairs(&[("K", 1.0), ("T", 1.0)]).unwrap();
        assert!(qsnr_report(&params, &h).is_err());
    }

    #[test]
    fn param_vector_validation() {
        assert!(ParamVector::from_pairs(&[("T", 0.0)]).is_err());
        assert!(ParamVector::from_pairs(&[("K", f64::NAN)]).is_err());
        assert!(ParamVector::from_pairs(&[("K", -1.0), ("T", 0.1)]).is_ok());
    }

    #[test]
    fn qfim_validation() {
        assert!(QfiMatrix::new(["a", "b"], vec![1.0, 0.0, 0.1, 1.0]).is_err());
        assert!(QfiMatrix::new(["a", "b"], vec![1.0, 2.0, 2.0, 1.0]).is_err());
        assert!(QfiMatrix::new(["a"], vec![-1.0]).is_err());
    }

    #[test]
    fn suboptimal_snr_cases() {
        assert_eq!(suboptimal_snr(3.0, 0.0, 0.2).unwrap(), 0.0);
        assert_eq!(suboptimal_snr(1.0, 1.0, 1.0).unwrap(), 1.0);
        assert!(suboptimal_snr(1.0, 1.0, 0.0).is_err());
    }
}
