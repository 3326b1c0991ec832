//! Narrow band limit: two impurity spins, each exchange-coupled to a single conduction orbital.
//!
//! `H = K S_L·S_R + J (S_L·s_L + S_R·s_R) + B (S^z_L + S^z_R + s^z_L + s^z_R)`
//!
//! The 64-state basis is the product `imp-L ⊗ imp-R ⊗ orb-L ⊗ orb-R`, with the last factor
//! varying fastest. Impurity states are `(↑, ↓)`; orbital states are `(0, ↑, ↓, ↑↓)`. The
//! orbital spin `s = ½ c†σc` conserves occupation on each orbital, so no fermionic signs arise
//! between the two orbitals and the Hamiltonian is real symmetric.
//!
//! This module works in `f64` only.

use faer::{Mat, Side};

use crate::error::{invalid, Error, Result};
use crate::estimation::{
    build_qfim, qsnr_report, ParamVector, PopulationJacobian, QfiMatrix, QsnrReport,
};
use crate::probe::{observables_of, ProbeObservables, ProbeState};

/// Hilbert-space dimension.
pub const DIM: usize = 64;
const FACTORS: [usize; 4] = [2, 2, 4, 4];
/// Largest tolerated off-diagonal element of the probe density matrix in the singlet/triplet basis.
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Parameters the finite-difference metrology can differentiate against.
pub const PARAMETERS: [&str; 4] = ["T", "K", "J", "B"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NblParams {
    pub temperature: f64,
    pub coupling: f64,
    pub exchange: f64,
    pub field: f64,
}

impl NblParams {
    pub fn new(temperature: f64, coupling: f64, exchange: f64, field: f64) -> Result<Self> {
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(invalid(format!(
                "temperature must be positive and finite, got {temperature}"
            )));
        }
        if ![coupling, exchange, field].iter().all(|x| x.is_finite()) {
            return Err(invalid("K, J and B must be finite"));
        }
        Ok(Self {
            temperature,
            coupling,
            exchange,
            field,
        })
    }

    fn get(&self, name: &str) -> Result<f64> {
        match name {
            "T" => Ok(self.temperature),
            "K" => Ok(self.coupling),
            "J" => Ok(self.exchange),
            "B" => Ok(self.field),
            other => Err(invalid(format!("unknown narrow-band parameter {other}"))),
        }
    }

    fn with(&self, name: &str, value: f64) -> Self {
        let mut p = *self;
        match name {
            "T" => p.temperature = value,
            "K" => p.coupling = value,
            "J" => p.exchange = value,
            _ => p.field = value,
        }
        p
    }
}

/// Dense real symmetric matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseHermitian {
    dim: usize,
    data: Vec<f64>,
}

impl DenseHermitian {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Largest `|H_ij - H_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let n = self.dim;
        (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| (self.get(i, j) - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    /// `self · other - other · self`, row-major.
    pub fn commutator(&self, other: &DenseHermitian) -> Vec<f64> {
        let n = self.dim;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = (0..n)
                    .map(|k| self.get(i, k) * other.get(k, j) - other.get(i, k) * self.get(k, j))
                    .sum();
            }
        }
        out
    }

    /// Labels `(imp-L, imp-R, orb-L, orb-R)` of basis state `index`.
    pub fn basis_label(index: usize) -> (&'static str, &'static str, &'static str, &'static str) {
        const IMP: [&str; 2] = ["up", "dn"];
        const ORB: [&str; 4] = ["0", "up", "dn", "updn"];
        let [a, b, c, d] = split(index);
        (IMP[a], IMP[b], ORB[c], ORB[d])
    }
}

fn split(index: usize) -> [usize; 4] {
    [index / 32, (index / 16) % 2, (index / 4) % 4, index % 4]
}

/// Local operator on one tensor factor, as a small dense matrix.
struct Local {
    dim: usize,
    m: Vec<f64>,
}

fn impurity_ops() -> [Local; 3] {
    // S^z, S^+, S^- on (↑, ↓).
    [
        Local {
            dim: 2,
            m: vec![0.5, 0.0, 0.0, -0.5],
        },
        Local {
            dim: 2,
            m: vec![0.0, 1.0, 0.0, 0.0],
        },
        Local {
            dim: 2,
            m: vec![0.0, 0.0, 1.0, 0.0],
        },
    ]
}

fn orbital_ops() -> [Local; 3] {
    // s^z, s^+ = c†_↑ c_↓, s^- on (0, ↑, ↓, ↑↓); only the singly occupied states carry spin.
    let mut sz = vec![0.0; 16];
    sz[4 + 1] = 0.5;
    sz[2 * 4 + 2] = -0.5;
    let mut sp = vec![0.0; 16];
    sp[4 + 2] = 1.0;
    let mut sm = vec![0.0; 16];
    sm[2 * 4 + 1] = 1.0;
    [
        Local { dim: 4, m: sz },
        Local { dim: 4, m: sp },
        Local { dim: 4, m: sm },
    ]
}

/// Adds `coef · O_a ⊗ O_b` (acting on factors `fa < fb`, identity elsewhere) into `h`.
fn add_two_site(h: &mut [f64], coef: f64, fa: usize, a: &Local, fb: usize, b: &Local) {
    for row in 0..DIM {
        let r = split(row);
        for col in 0..DIM {
            let c = split(col);
            if (0..4).any(|f| f != fa && f != fb && r[f] != c[f]) {
                continue;
            }
            let va = a.m[r[fa] * a.dim + c[fa]];
            let vb = b.m[r[fb] * b.dim + c[fb]];
            h[row * DIM + col] += coef * va * vb;
        }
    }
}

fn add_one_site(h: &mut [f64], coef: f64, f: usize, a: &Local) {
    for row in 0..DIM {
        let r = split(row);
        let base = row - r[f] * stride(f);
        for k in 0..FACTORS[f] {
            let v = a.m[r[f] * a.dim + k];
            if v != 0.0 {
                h[row * DIM + base + k * stride(f)] += coef * v;
            }
        }
    }
}

fn stride(f: usize) -> usize {
    FACTORS[f + 1..].iter().product()
}

/// `coef · A·B` for two spin-½ vector operators on factors `fa`, `fb`.
fn add_heisenberg(h: &mut [f64], coef: f64, fa: usize, a: &[Local; 3], fb: usize, b: &[Local; 3]) {
    add_two_site(h, coef, fa, &a[0], fb, &b[0]);
    add_two_site(h, 0.5 * coef, fa, &a[1], fb, &b[2]);
    add_two_site(h, 0.5 * coef, fa, &a[2], fb, &b[1]);
}

/// Builds the 64×64 Hamiltonian.
pub fn build_hamiltonian(coupling: f64, exchange: f64, field: f64) -> DenseHermitian {
    let imp = impurity_ops();
    let orb = orbital_ops();
    let mut h = vec![0.0; DIM * DIM];
    add_heisenberg(&mut h, coupling, 0, &imp, 1, &imp);
    add_heisenberg(&mut h, exchange, 0, &imp, 2, &orb);
    add_heisenberg(&mut h, exchange, 1, &imp, 3, &orb);
    for f in 0..2 {
        add_one_site(&mut h, field, f, &imp[0]);
    }
    for f in 2..4 {
        add_one_site(&mut h, field, f, &orb[0]);
    }
    DenseHermitian { dim: DIM, data: h }
}

/// `S^z_tot` in the same basis, for symmetry checks.
pub fn total_sz() -> DenseHermitian {
    build_hamiltonian(0.0, 0.0, 1.0)
}

/// Gibbs state of a [`DenseHermitian`] and the derived thermodynamics.
#[derive(Debug, Clone)]
pub struct ThermalSolution {
    pub temperature: f64,
    pub eigenvalues: Vec<f64>,
    /// Eigenvectors as columns.
    pub eigenvectors: Mat<f64>,
    /// `ln Z`.
    pub ln_partition: f64,
    pub free_energy: f64,
    pub energy: f64,
    pub entropy: f64,
    /// Impurity density matrix in the product basis `(↑↑, ↑↓, ↓↑, ↓↓)`, row-major.
    pub impurity_rdm: [f64; 16],
    pub probe: ProbeState<f64>,
}

impl ThermalSolution {
    pub fn partition_function(&self) -> f64 {
        self.ln_partition.exp()
    }

    pub fn observables(&self) -> ProbeObservables<f64> {
        observables_of(&self.probe)
    }
}

/// Diagonalizes `h` and builds the Gibbs state at temperature `T`.
///
/// The probe state is the partial trace over both orbitals, rotated to `(S, T+1, T0, T-1)`.
/// Any off-diagonal element above [`SYMMETRY_TOL`] in that basis is an error.
pub fn thermal_solution(h: &DenseHermitian, temperature: f64) -> Result<ThermalSolution> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(invalid(format!(
            "temperature must be positive and finite, got {temperature}"
        )));
    }
    let n = h.dim;
    let m = Mat::from_fn(n, n, |i, j| h.get(i, j));
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| invalid(format!("eigensolver failed: {e:?}")))?;
    let s = evd.S().column_vector();
    let eigenvalues: Vec<f64> = (0..n).map(|i| s[i]).collect();
    let u = evd.U().to_owned();

    let e0 = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = eigenvalues
        .iter()
        .map(|e| (-(e - e0) / temperature).exp())
        .collect();
    let z_shifted: f64 = weights.iter().sum();
    let ln_partition = z_shifted.ln() - e0 / temperature;
    let free_energy = e0 - temperature * z_shifted.ln();
    let energy = weights
        .iter()
        .zip(&eigenvalues)
        .map(|(w, e)| w * e)
        .sum::<f64>()
        / z_shifted;
    let entropy = (energy - free_energy) / temperature;

    let bath = n / 4;
    let mut rdm = [0.0; 16];
    for (k, w) in weights.iter().enumerate() {
        let p = w / z_shifted;
        if p == 0.0 {
            continue;
        }
        for a in 0..4 {
            for b in a..4 {
                let v: f64 = (0..bath)
                    .map(|x| u[(a * bath + x, k)] * u[(b * bath + x, k)])
                    .sum();
                rdm[a * 4 + b] += p * v;
            }
        }
    }
    for a in 0..4 {
        for b in 0..a {
            rdm[a * 4 + b] = rdm[b * 4 + a];
        }
    }
    let probe = to_singlet_triplet(&rdm)?;
    Ok(ThermalSolution {
        temperature,
        eigenvalues,
        eigenvectors: u,
        ln_partition,
        free_energy,
        energy,
        entropy,
        impurity_rdm: rdm,
        probe,
    })
}

fn to_singlet_triplet(rdm: &[f64; 16]) -> Result<ProbeState<f64>> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    // Rows: S, T+1, T0, T-1 in the product basis (↑↑, ↑↓, ↓↑, ↓↓).
    let basis = [
        [0.0, r, -r, 0.0],
        [1.0, 0.0, 0.0, 0.0],
        [0.0, r, r, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ];
    let mut rot = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            rot[i][j] = (0..4)
                .flat_map(|a| (0..4).map(move |b| (a, b)))
                .map(|(a, b)| basis[i][a] * rdm[a * 4 + b] * basis[j][b])
                .sum();
        }
    }
    let off = (0..4)
        .flat_map(|i| (0..4).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| rot[i][j].abs())
        .fold(0.0, f64::max);
    if off >= SYMMETRY_TOL {
        return Err(Error::SymmetryViolation { magnitude: off });
    }
    ProbeState::from_populations([rot[0][0], rot[1][1], rot[2][2], rot[3][3]])
}

/// Thermal solution at the given parameters.
pub fn solve(p: &NblParams) -> Result<ThermalSolution> {
    thermal_solution(
        &build_hamiltonian(p.coupling, p.exchange, p.field),
        p.temperature,
    )
}

/// Central-difference step `max(1e-5 |λ|, 1e-7)`.
pub fn fd_step(value: f64) -> f64 {
    (1e-5 * value.abs()).max(1e-7)
}

/// Central difference of `f` in parameter `name` around `p`.
fn central_difference<const N: usize>(
    p: &NblParams,
    name: &str,
    f: impl Fn(&NblParams) -> Result<[f64; N]>,
) -> Result<[f64; N]> {
    let x = p.get(name)?;
    let h = fd_step(x);
    let (lo, hi) = (x - h, x + h);
    let fail = || Error::DerivativeFailure {
        param: name.to_string(),
        value: x,
    };
    if hi - lo <= 0.0 || (name == "T" && lo <= 0.0) {
        return Err(fail());
    }
    let (fp, fm) = (f(&p.with(name, hi))?, f(&p.with(name, lo))?);
    let mut d = [0.0; N];
    for i in 0..N {
        d[i] = (fp[i] - fm[i]) / (hi - lo);
    }
    Ok(d)
}

fn populations_of(p: &NblParams) -> Result<[f64; 4]> {
    let s = solve(p)?;
    Ok(s.probe.populations())
}

/// Populations and their finite-difference derivatives for the named parameters.
///
/// Each derivative row is shifted by its mean so that it sums to zero exactly; the shift is of
/// the order of the rounding error of the difference quotient.
pub fn population_jacobian(p: &NblParams, unknowns: &[&str]) -> Result<PopulationJacobian<f64>> {
    let pops = populations_of(p)?;
    let mut rows = Vec::with_capacity(unknowns.len());
    for name in unknowns {
        let d = central_difference(p, name, populations_of)?;
        let mean = d.iter().sum::<f64>() / 4.0;
        rows.push(d.iter().map(|x| x - mean).collect());
    }
    PopulationJacobian::new(unknowns.iter().copied(), pops.to_vec(), rows)
}

/// QFIM and QSNR report for the chosen unknowns.
pub fn nbl_metrology(
    p: &NblParams,
    unknowns: &[&str],
) -> Result<(QfiMatrix<f64>, QsnrReport<f64>)> {
    let jac = population_jacobian(p, unknowns)?;
    let h = build_qfim(&jac)?;
    let values = unknowns
        .iter()
        .map(|n| p.get(n))
        .collect::<Result<Vec<_>>>()?;
    let params = ParamVector::new(unknowns.iter().copied(), values)?;
    let report = qsnr_report(&params, &h)?;
    Ok((h, report))
}

/// `∂C/∂λ` by central differences.
pub fn correlator_derivative(p: &NblParams, name: &str) -> Result<f64> {
    Ok(central_difference(p, name, |q| Ok([solve(q)?.observables().c]))?[0])
}

/// `∂S/∂λ` (thermodynamic entropy) by central differences.
pub fn entropy_derivative(p: &NblParams, name: &str) -> Result<f64> {
    Ok(central_difference(p, name, |q| Ok([solve(q)?.entropy]))?[0])
}

/// `∂𝓕/∂λ` by central differences.
pub fn free_energy_derivative(p: &NblParams, name: &str) -> Result<f64> {
    Ok(central_difference(p, name, |q| Ok([solve(q)?.free_energy]))?[0])
}
