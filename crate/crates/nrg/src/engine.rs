//! Iterative diagonalization of the two-channel Wilson chain.
//!
//! Shell 0 holds both impurity spins and site 0 of each channel. Every later shell `n` adds
//! site `L_n` and then site `R_n`, each followed by a diagonalization and a truncation, so the
//! matrix dimension before truncation stays below `4 N_s`.
//!
//! Both channel charges are conserved separately, so states are organized in sectors labeled by
//! `(Q_L, Q_R, 2 S_z)`, charges counted from half filling.
//! A new site in local state `s ∈ {0, ↑, ↓, ↑↓}` is attached as `|r, s⟩ = (c†_new)^s |r⟩`
//! with `|↑↓⟩ = c†_↑ c†_↓ |0⟩`. With that ordering an annihilator of an earlier site picks up
//! `(-1)^{n_s}` when moved past the new site, while new-site operators carry no sign.

use std::collections::BTreeMap;

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, MatRef, Par, Side};

use crate::chain::{wilson_chain, NrgConfig};
use crate::error::{invalid, NrgError, Result};

/// Relative energy window inside which states count as degenerate during truncation.
pub const DEGENERACY_TOL: f64 = 1e-10;

const SITE_Q: [i32; 4] = [-1, 0, 0, 1];
const SITE_SZ2: [i32; 4] = [0, 1, -1, 0];
const SITE_PARITY: [f64; 4] = [1.0, -1.0, -1.0, 1.0];
/// `2 S_z` carried by spin index 0 (↑) and 1 (↓).
const SPIN_SZ2: [i32; 2] = [1, -1];

/// Sector label `[Q_L, Q_R, 2 S_z]`.
type Label = [i32; 3];

fn shifted(label: Label, channel: usize, dq: i32, dsz2: i32) -> Label {
    let mut out = label;
    out[channel] += dq;
    out[2] += dsz2;
    out
}

/// `c†_σ |s⟩ = sign |s'⟩` on a single site.
fn cdag(spin: usize, s: usize) -> Option<(usize, f64)> {
    match (spin, s) {
        (0, 0) => Some((1, 1.0)),
        (0, 2) => Some((3, 1.0)),
        (1, 0) => Some((2, 1.0)),
        (1, 1) => Some((3, -1.0)),
        _ => None,
    }
}

/// `c_σ |s⟩ = sign |s'⟩` on a single site.
fn c_ann(spin: usize, s: usize) -> Option<(usize, f64)> {
    (0..4).find_map(|sp| match cdag(spin, sp) {
        Some((t, sign)) if t == s => Some((sp, sign)),
        _ => None,
    })
}

/// Impurity observables carried through the iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    /// `S_L·S_R`.
    SpinCorrelation,
    /// `S^z_L + S^z_R`.
    Magnetization,
    /// `(S^z_L + S^z_R)²`.
    MagnetizationSquared,
}

/// Model couplings; `B` acts on the total spin of impurities and conduction electrons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub coupling: f64,
    pub exchange: f64,
    pub field: f64,
    /// Whether the impurity spins are present; `false` gives the free-chain reference.
    pub impurities: bool,
}

impl ModelParams {
    pub fn new(coupling: f64, exchange: f64, field: f64) -> Result<Self> {
        if !(exchange > 0.0 && exchange.is_finite()) {
            return Err(invalid(format!(
                "Kondo exchange J must be positive, got {exchange}"
            )));
        }
        if !coupling.is_finite() || !field.is_finite() {
            return Err(invalid("K and B must be finite"));
        }
        Ok(Self {
            coupling,
            exchange,
            field,
            impurities: true,
        })
    }

    /// Conduction chain without impurities, same field.
    pub fn reference(field: f64) -> Self {
        Self {
            coupling: 0.0,
            exchange: 0.0,
            field,
            impurities: false,
        }
    }

    pub fn observables(&self) -> Vec<Observable> {
        match (self.impurities, self.field == 0.0) {
            (false, _) => vec![],
            (true, true) => vec![Observable::SpinCorrelation],
            (true, false) => vec![
                Observable::SpinCorrelation,
                Observable::Magnetization,
                Observable::MagnetizationSquared,
            ],
        }
    }
}

/// One `(Q_L, Q_R, 2S_z)` sector of a shell.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorRecord {
    /// Charges of the left and right channel relative to half filling.
    pub channel_charge: [i32; 2],
    pub sz2: i32,
    /// All eigenvalues of the sector in units of the shell scale, ground state of the shell at 0.
    pub energies: Vec<f64>,
    /// The lowest `kept` energies survive truncation.
    pub kept: usize,
    /// Diagonal matrix elements of each carried observable in the kept eigenbasis.
    pub observables: Vec<Vec<f64>>,
}

/// Spectrum and observable data of one complete shell.
#[derive(Debug, Clone, PartialEq)]
pub struct ShellRecord {
    pub shell: usize,
    /// Energy unit of `energies`, `(D/2)(1 + Λ⁻¹) Λ^{-(n-1)/2}`.
    pub scale: f64,
    pub temperature: f64,
    pub observables: Vec<Observable>,
    pub sectors: Vec<SectorRecord>,
}

impl ShellRecord {
    pub fn kept_count(&self) -> usize {
        self.sectors.iter().map(|s| s.kept).sum()
    }

    pub fn total_count(&self) -> usize {
        self.sectors.iter().map(|s| s.energies.len()).sum()
    }

    pub fn sector(&self, channel_charge: [i32; 2], sz2: i32) -> Option<&SectorRecord> {
        self.sectors
            .iter()
            .find(|s| s.channel_charge == channel_charge && s.sz2 == sz2)
    }

    pub fn observable_index(&self, o: Observable) -> Option<usize> {
        self.observables.iter().position(|x| *x == o)
    }

    /// Lowest energy with total charge `Q_L + Q_R` and `2 S_z`, in shell units.
    pub fn sector_ground(&self, charge: i32, sz2: i32) -> Option<f64> {
        self.sectors
            .iter()
            .filter(|s| s.channel_charge[0] + s.channel_charge[1] == charge && s.sz2 == sz2)
            .filter_map(|s| s.energies.first().copied())
            .min_by(f64::total_cmp)
    }
}

/// Kept states of one sector together with the current-site bookkeeping.
struct Sector {
    label: Label,
    energies: Vec<f64>,
}

/// Matrix of an annihilator: from sector `src` to `dst`, rows `dst` kept, columns `src` kept.
type OpBlock = Option<(usize, Mat<f64>)>;

struct IterState {
    sectors: Vec<Sector>,
    lookup: BTreeMap<Label, usize>,
    /// `ops[channel][spin][src]`: last-site annihilator of each channel.
    ops: [[Vec<OpBlock>; 2]; 2],
    /// `obs[k][sector]`: square observable blocks.
    obs: Vec<Vec<Mat<f64>>>,
}

struct Piece {
    site: usize,
    old: usize,
    offset: usize,
    dim: usize,
}

struct NewSector {
    label: Label,
    pieces: Vec<Piece>,
    dim: usize,
}

fn piece_of(sec: &NewSector, site: usize, old: usize) -> Option<&Piece> {
    sec.pieces.iter().find(|p| p.site == site && p.old == old)
}

fn new_sectors(state: &IterState, channel: usize) -> (Vec<NewSector>, BTreeMap<Label, usize>) {
    let mut by_label: BTreeMap<Label, Vec<(usize, usize)>> = BTreeMap::new();
    for (b, sec) in state.sectors.iter().enumerate() {
        if sec.energies.is_empty() {
            continue;
        }
        for s in 0..4 {
            let label = shifted(sec.label, channel, SITE_Q[s], SITE_SZ2[s]);
            by_label.entry(label).or_default().push((s, b));
        }
    }
    let mut out = Vec::with_capacity(by_label.len());
    let mut lookup = BTreeMap::new();
    for (label, mut list) in by_label {
        list.sort();
        let mut offset = 0;
        let pieces = list
            .into_iter()
            .map(|(site, old)| {
                let dim = state.sectors[old].energies.len();
                let p = Piece {
                    site,
                    old,
                    offset,
                    dim,
                };
                offset += dim;
                p
            })
            .collect();
        lookup.insert(label, out.len());
        out.push(NewSector {
            label,
            pieces,
            dim: offset,
        });
    }
    (out, lookup)
}

/// `dst += alpha · Aᵀ · B · C`.
fn add_sandwich(
    dst: &mut Mat<f64>,
    a: MatRef<'_, f64>,
    b: MatRef<'_, f64>,
    c: MatRef<'_, f64>,
    alpha: f64,
) {
    let mut tmp = Mat::<f64>::zeros(b.nrows(), c.ncols());
    matmul(&mut tmp, Accum::Replace, b, c, 1.0, Par::Seq);
    matmul(dst, Accum::Add, a.transpose(), &tmp, alpha, Par::Seq);
}

/// `dst += alpha · Aᵀ · C`.
fn add_product(dst: &mut Mat<f64>, a: MatRef<'_, f64>, c: MatRef<'_, f64>, alpha: f64) {
    matmul(dst, Accum::Add, a.transpose(), c, alpha, Par::Seq);
}

struct Diagonalized {
    values: Vec<f64>,
    vectors: Mat<f64>,
}

fn diagonalize(h: &Mat<f64>) -> Result<Diagonalized> {
    if h.nrows() == 0 {
        return Ok(Diagonalized {
            values: vec![],
            vectors: Mat::zeros(0, 0),
        });
    }
    let evd = h
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| invalid(format!("eigensolver failed: {e:?}")))?;
    let s = evd.S().column_vector();
    Ok(Diagonalized {
        values: (0..h.nrows()).map(|i| s[i]).collect(),
        vectors: evd.U().to_owned(),
    })
}

/// Truncation rule for one diagonalization, in absolute energy units above the ground state.
#[derive(Debug, Clone, Copy)]
struct Truncation {
    keep: usize,
    cutoff: f64,
    tol: f64,
}

impl Truncation {
    fn at(cfg: &NrgConfig, n: f64) -> Self {
        let scale = cfg.shell_scale(n);
        Truncation {
            keep: cfg.kept_states,
            cutoff: cfg.energy_cutoff.map_or(f64::INFINITY, |e| e * scale),
            tol: DEGENERACY_TOL * scale,
        }
    }
}

/// Number of states kept per sector: at most the lowest `keep` overall, reduced so that no
/// kept and discarded state are closer than `tol`. Only when the lowest multiplet alone is
/// larger than `keep` is the count extended instead.
fn truncation(spectra: &[Vec<f64>], rule: Truncation) -> Vec<usize> {
    let mut all: Vec<f64> = spectra.iter().flatten().copied().collect();
    all.sort_by(f64::total_cmp);
    let below = all.iter().take_while(|&&x| x <= rule.cutoff).count();
    let keep = rule.keep.min(below).max(1);
    if all.len() <= keep {
        return spectra.iter().map(Vec::len).collect();
    }
    let split = |n: usize| all[n] - all[n - 1] < rule.tol;
    let mut count = keep;
    while count > 0 && split(count) {
        count -= 1;
    }
    if count == 0 {
        count = keep;
        while count < all.len() && split(count) {
            count += 1;
        }
    }
    let cut = all[count - 1];
    spectra
        .iter()
        .map(|e| e.iter().take_while(|&&x| x <= cut).count())
        .collect()
}

fn shift_to_ground(spectra: &mut [Vec<f64>]) {
    let e0 = spectra
        .iter()
        .flatten()
        .copied()
        .fold(f64::INFINITY, f64::min);
    for e in spectra.iter_mut().flatten() {
        *e -= e0;
    }
}

fn check_budget(cfg: &NrgConfig, shell: usize, dims: impl Iterator<Item = usize>) -> Result<()> {
    // Hamiltonian, eigenvectors and workspace of each block are alive at the same time.
    let required: usize = dims.map(|d| 3 * d * d * std::mem::size_of::<f64>()).sum();
    if required > cfg.memory_budget_bytes {
        return Err(NrgError::Resource {
            shell,
            required_bytes: required,
            budget_bytes: cfg.memory_budget_bytes,
        });
    }
    Ok(())
}

/// Adds one site of `channel` coupled by `hop` to the previous site of the same channel.
fn add_site(
    state: &IterState,
    channel: usize,
    hop: f64,
    field: f64,
    rule: Truncation,
    cfg: &NrgConfig,
    shell: usize,
) -> Result<(IterState, Vec<Vec<f64>>, Vec<usize>)> {
    let (secs, lookup) = new_sectors(state, channel);
    check_budget(cfg, shell, secs.iter().map(|s| s.dim))?;
    let other = 1 - channel;

    let mut diag = Vec::with_capacity(secs.len());
    for sec in &secs {
        let mut h = Mat::<f64>::zeros(sec.dim, sec.dim);
        for p in &sec.pieces {
            let onsite = 0.5 * field * SITE_SZ2[p.site] as f64;
            for (i, e) in state.sectors[p.old].energies.iter().enumerate() {
                h[(p.offset + i, p.offset + i)] = e + onsite;
            }
        }
        // t Σ_σ (c†_σ f_σ + h.c.) with f_σ the previous site of this channel.
        for p in &sec.pieces {
            for spin in 0..2 {
                let Some((sp, sign)) = cdag(spin, p.site) else {
                    continue;
                };
                let Some((dst_old, f)) = &state.ops[channel][spin][p.old] else {
                    continue;
                };
                let Some(q) = piece_of(sec, sp, *dst_old) else {
                    continue;
                };
                let amp = hop * SITE_PARITY[p.site] * sign;
                for c in 0..p.dim {
                    for r in 0..q.dim {
                        let v = amp * f[(r, c)];
                        h[(q.offset + r, p.offset + c)] += v;
                        h[(p.offset + c, q.offset + r)] += v;
                    }
                }
            }
        }
        diag.push(diagonalize(&h)?);
    }

    let mut spectra: Vec<Vec<f64>> = diag.iter().map(|d| d.values.clone()).collect();
    shift_to_ground(&mut spectra);
    let kept = truncation(&spectra, rule);

    let sectors: Vec<Sector> = secs
        .iter()
        .zip(&spectra)
        .zip(&kept)
        .map(|((s, e), &k)| Sector {
            label: s.label,
            energies: e[..k].to_vec(),
        })
        .collect();
    let u = |a: usize, p: &Piece| -> MatRef<'_, f64> {
        diag[a]
            .vectors
            .as_ref()
            .subrows(p.offset, p.dim)
            .subcols(0, kept[a])
    };

    let mut ops: [[Vec<OpBlock>; 2]; 2] = Default::default();
    for spin in 0..2 {
        let mut new_site = Vec::with_capacity(secs.len());
        let mut carried = Vec::with_capacity(secs.len());
        let target = |a: usize, ch: usize| {
            let b = *lookup.get(&shifted(secs[a].label, ch, -1, -SPIN_SZ2[spin]))?;
            (kept[a] > 0 && kept[b] > 0).then_some(b)
        };
        for (a, sec) in secs.iter().enumerate() {
            new_site.push(target(a, channel).map(|b| {
                let mut m = Mat::<f64>::zeros(kept[b], kept[a]);
                for p in &sec.pieces {
                    let Some((sp, sign)) = c_ann(spin, p.site) else {
                        continue;
                    };
                    if let Some(q) = piece_of(&secs[b], sp, p.old) {
                        add_product(&mut m, u(b, q), u(a, p), sign);
                    }
                }
                (b, m)
            }));
            carried.push(target(a, other).map(|b| {
                let mut m = Mat::<f64>::zeros(kept[b], kept[a]);
                for p in &sec.pieces {
                    let Some((dst_old, g)) = &state.ops[other][spin][p.old] else {
                        continue;
                    };
                    if let Some(q) = piece_of(&secs[b], p.site, *dst_old) {
                        add_sandwich(&mut m, u(b, q), g.as_ref(), u(a, p), SITE_PARITY[p.site]);
                    }
                }
                (b, m)
            }));
        }
        ops[channel][spin] = new_site;
        ops[other][spin] = carried;
    }

    let obs = state
        .obs
        .iter()
        .map(|blocks| {
            secs.iter()
                .enumerate()
                .map(|(a, sec)| {
                    let mut m = Mat::<f64>::zeros(kept[a], kept[a]);
                    for p in &sec.pieces {
                        add_sandwich(&mut m, u(a, p), blocks[p.old].as_ref(), u(a, p), 1.0);
                    }
                    m
                })
                .collect()
        })
        .collect();

    Ok((
        IterState {
            sectors,
            lookup,
            ops,
            obs,
        },
        spectra,
        kept,
    ))
}

/// Dense operators on the shell-0 product space `imp-L ⊗ imp-R ⊗ (L0↑, L0↓, R0↑, R0↓)`.
struct ShellZero {
    dim: usize,
    imp: usize,
    labels: Vec<Label>,
    h: Mat<f64>,
    /// `ann[channel][spin]`.
    ann: [[Mat<f64>; 2]; 2],
    obs: Vec<Mat<f64>>,
}

fn mode_annihilator(imp: usize, mode: usize) -> Mat<f64> {
    let dim = imp * 16;
    let mut m = Mat::<f64>::zeros(dim, dim);
    for i in 0..imp {
        for bits in 0..16usize {
            if bits >> mode & 1 == 0 {
                continue;
            }
            let before = (bits & ((1 << mode) - 1)).count_ones();
            let sign = if before.is_multiple_of(2) { 1.0 } else { -1.0 };
            m[(i * 16 + (bits ^ (1 << mode)), i * 16 + bits)] = sign;
        }
    }
    m
}

fn impurity_operator(imp_op: [[f64; 2]; 2], which: usize) -> Mat<f64> {
    // Two impurity factors of dimension 2 each, left-major, times the 16 fermion states.
    let dim = 64;
    let mut m = Mat::<f64>::zeros(dim, dim);
    for row in 0..dim {
        for col in 0..dim {
            if row % 16 != col % 16 {
                continue;
            }
            let (ri, ci) = (row / 16, col / 16);
            let (rl, rr, cl, cr) = (ri / 2, ri % 2, ci / 2, ci % 2);
            m[(row, col)] = match which {
                0 if rr == cr => imp_op[rl][cl],
                1 if rl == cl => imp_op[rr][cr],
                _ => 0.0,
            };
        }
    }
    m
}

fn mul(a: &Mat<f64>, b: &Mat<f64>) -> Mat<f64> {
    a * b
}

fn shell_zero(params: &ModelParams) -> ShellZero {
    let imp = if params.impurities { 4 } else { 1 };
    let dim = imp * 16;
    let ann: [[Mat<f64>; 2]; 2] =
        [0, 1].map(|ch| [0, 1].map(|spin| mode_annihilator(imp, 2 * ch + spin)));
    let number =
        |ch: usize, spin: usize| mul(&ann[ch][spin].transpose().to_owned(), &ann[ch][spin]);
    let sz = |ch: usize| (number(ch, 0) - number(ch, 1)) * faer::Scale(0.5);
    let splus = |ch: usize| mul(&ann[ch][0].transpose().to_owned(), &ann[ch][1]);

    let mut h = Mat::<f64>::zeros(dim, dim);
    for ch in 0..2 {
        h += sz(ch) * faer::Scale(params.field);
    }
    let mut obs = vec![];
    if params.impurities {
        let szi = [[0.5, 0.0], [0.0, -0.5]];
        let spi = [[0.0, 1.0], [0.0, 0.0]];
        let smi = [[0.0, 0.0], [1.0, 0.0]];
        let s = |which: usize| {
            [
                impurity_operator(szi, which),
                impurity_operator(spi, which),
                impurity_operator(smi, which),
            ]
        };
        let (sl, sr) = (s(0), s(1));
        let dot = |a: &[Mat<f64>; 3], bz: &Mat<f64>, bp: &Mat<f64>, bm: &Mat<f64>| {
            mul(&a[0], bz) + (mul(&a[1], bm) + mul(&a[2], bp)) * faer::Scale(0.5)
        };
        let ss = dot(&sl, &sr[0], &sr[1], &sr[2]);
        h += &ss * faer::Scale(params.coupling);
        for (ch, si) in [&sl, &sr].into_iter().enumerate() {
            let sp = splus(ch);
            let sm = sp.transpose().to_owned();
            h += dot(si, &sz(ch), &sp, &sm) * faer::Scale(params.exchange);
        }
        let m = &sl[0] + &sr[0];
        h += &m * faer::Scale(params.field);
        let m2 = mul(&m, &m);
        for o in params.observables() {
            obs.push(match o {
                Observable::SpinCorrelation => ss.clone(),
                Observable::Magnetization => m.clone(),
                Observable::MagnetizationSquared => m2.clone(),
            });
        }
    }
    let labels = (0..dim)
        .map(|idx| {
            let bits = idx % 16;
            let n = |mode: usize| (bits >> mode & 1) as i32;
            let q = [n(0) + n(1) - 1, n(2) + n(3) - 1];
            let mut sz2 = n(0) - n(1) + n(2) - n(3);
            if imp == 4 {
                let i = idx / 16;
                sz2 += if i / 2 == 0 { 1 } else { -1 };
                sz2 += if i % 2 == 0 { 1 } else { -1 };
            }
            [q[0], q[1], sz2]
        })
        .collect();
    ShellZero {
        dim,
        imp,
        labels,
        h,
        ann,
        obs,
    }
}

fn initial_state(
    params: &ModelParams,
    rule: Truncation,
) -> Result<(IterState, Vec<Label>, Vec<Vec<f64>>, Vec<usize>)> {
    let z = shell_zero(params);
    debug_assert_eq!(z.dim, z.imp * 16);
    let mut groups: BTreeMap<Label, Vec<usize>> = BTreeMap::new();
    for (i, l) in z.labels.iter().enumerate() {
        groups.entry(*l).or_default().push(i);
    }
    let labels: Vec<Label> = groups.keys().copied().collect();
    let idx: Vec<&Vec<usize>> = groups.values().collect();
    let sub = |m: &Mat<f64>, rows: &[usize], cols: &[usize]| {
        Mat::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
    };
    let diag: Vec<Diagonalized> = idx
        .iter()
        .map(|ix| diagonalize(&sub(&z.h, ix, ix)))
        .collect::<Result<_>>()?;
    let mut spectra: Vec<Vec<f64>> = diag.iter().map(|d| d.values.clone()).collect();
    shift_to_ground(&mut spectra);
    let kept = truncation(&spectra, rule);
    let lookup: BTreeMap<Label, usize> = labels.iter().enumerate().map(|(i, l)| (*l, i)).collect();
    let u = |a: usize| diag[a].vectors.as_ref().subcols(0, kept[a]);
    let transform = |m: &Mat<f64>, a: usize, b: usize| -> Mat<f64> {
        let mut out = Mat::<f64>::zeros(kept[b], kept[a]);
        add_sandwich(&mut out, u(b), sub(m, idx[b], idx[a]).as_ref(), u(a), 1.0);
        out
    };
    let mut ops: [[Vec<OpBlock>; 2]; 2] = Default::default();
    for ch in 0..2 {
        for spin in 0..2 {
            ops[ch][spin] = labels
                .iter()
                .enumerate()
                .map(|(a, l)| {
                    let b = *lookup.get(&shifted(*l, ch, -1, -SPIN_SZ2[spin]))?;
                    (kept[a] > 0 && kept[b] > 0).then(|| (b, transform(&z.ann[ch][spin], a, b)))
                })
                .collect();
        }
    }
    let obs = z
        .obs
        .iter()
        .map(|m| (0..labels.len()).map(|a| transform(m, a, a)).collect())
        .collect();
    let sectors = labels
        .iter()
        .zip(&spectra)
        .zip(&kept)
        .map(|((l, e), &k)| Sector {
            label: *l,
            energies: e[..k].to_vec(),
        })
        .collect();
    Ok((
        IterState {
            sectors,
            lookup,
            ops,
            obs,
        },
        labels,
        spectra,
        kept,
    ))
}

fn record(
    shell: usize,
    cfg: &NrgConfig,
    observables: &[Observable],
    state: &IterState,
    labels: &[Label],
    spectra: &[Vec<f64>],
    kept: &[usize],
) -> ShellRecord {
    let scale = cfg.shell_scale(shell as f64);
    let sectors = labels
        .iter()
        .enumerate()
        .map(|(a, l)| SectorRecord {
            channel_charge: [l[0], l[1]],
            sz2: l[2],
            energies: spectra[a].iter().map(|e| e / scale).collect(),
            kept: kept[a],
            observables: state
                .obs
                .iter()
                .map(|o| (0..kept[a]).map(|i| o[a][(i, i)]).collect())
                .collect(),
        })
        .collect();
    ShellRecord {
        shell,
        scale,
        temperature: cfg.shell_temperature(shell),
        observables: observables.to_vec(),
        sectors,
    }
}

/// Runs the iteration shell by shell, handing each completed shell to `visit`.
///
/// `visit` returns `false` to stop early. The records passed on are also collected and returned.
pub fn run_with(
    cfg: &NrgConfig,
    params: &ModelParams,
    mut visit: impl FnMut(&ShellRecord) -> bool,
) -> Result<Vec<ShellRecord>> {
    cfg.validate()?;
    let hops = wilson_chain(cfg)?;
    let observables = params.observables();
    let rule = |n: f64| Truncation::at(cfg, n);

    let (mut state, labels, spectra, kept) = initial_state(params, rule(0.0))?;
    let mut out = Vec::with_capacity(cfg.chain_length + 1);
    let rec = record(0, cfg, &observables, &state, &labels, &spectra, &kept);
    let go_on = visit(&rec);
    out.push(rec);
    if !go_on {
        return Ok(out);
    }
    for n in 1..=cfg.chain_length {
        let hop = hops[n - 1];
        let (half, _, _) = add_site(&state, 0, hop, params.field, rule(n as f64 - 0.5), cfg, n)?;
        let (full, spectra, kept) = add_site(&half, 1, hop, params.field, rule(n as f64), cfg, n)?;
        let labels: Vec<Label> = full.sectors.iter().map(|s| s.label).collect();
        debug_assert!(labels.iter().enumerate().all(|(i, l)| full.lookup[l] == i));
        let rec = record(n, cfg, &observables, &full, &labels, &spectra, &kept);
        state = full;
        let go_on = visit(&rec);
        out.push(rec);
        if !go_on {
            break;
        }
    }
    Ok(out)
}

/// Runs the full chain of `cfg.chain_length` shells.
pub fn run(cfg: &NrgConfig, coupling: f64, exchange: f64, field: f64) -> Result<Vec<ShellRecord>> {
    run_with(cfg, &ModelParams::new(coupling, exchange, field)?, |_| true)
}

/// Runs the impurity-free chain used as thermodynamic reference.
pub fn run_reference(cfg: &NrgConfig, field: f64) -> Result<Vec<ShellRecord>> {
    if !field.is_finite() {
        return Err(invalid("field must be finite"));
    }
    run_with(cfg, &ModelParams::reference(field), |_| true)
}
