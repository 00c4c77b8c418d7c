//! Diagonal one-parameter automorphism groups: eigenvalue-block fixed-point
//! decompositions, the lattice character χ_d(ε_j − ε_k) = d_j − d_k, energy
//! spectra {χ_d(ν − ν₀)} of covariant extensions, the semiboundedness test
//! inf⟨Wλ − λ, d⟩ > −∞, ground-state admissibility, and the spectral
//! ordering necessity check.

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};
use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cocycles::BlockDim;
use crate::linalg::{self, CMat};
use crate::ops::TruncOp;
use crate::rootdata::RootSystemKind;
use crate::seq::{rat_to_f64, DiagonalSequence, Rat, TailProfile};
use crate::weights::{permutations, Weight};

#[derive(Debug, Error, PartialEq)]
pub enum CovarianceError {
    #[error("window is not hermitian")]
    NotHermitian,
    #[error("element is not in the root lattice")]
    NotInRootLattice,
    #[error("weight set leaves the base point's root-lattice coset")]
    LatticeMismatch,
    #[error("tail law is outside the decidable family for this operation")]
    UndecidableTail,
    #[error("window of size {0} is too large for exhaustive search")]
    WindowTooLarge(usize),
    #[error("malformed input: {0}")]
    Malformed(String),
}

fn rat(n: i64) -> Rat {
    Rat::from_integer(n)
}

// ---------------------------------------------------------------------------
// fixed-point decomposition
// ---------------------------------------------------------------------------

/// One eigenvalue block of a diagonal generator: the value, the full block
/// dimension, and how many window indices land in it.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBlock {
    pub value: Rat,
    pub dim: BlockDim,
    pub window_count: u64,
}

/// Central generator attached to a finite block: ‖z_λ‖₂ = 2π√dim.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterGenerator {
    pub value: Rat,
    pub norm: f64,
}

/// How the law positions beyond the window contribute to the spectrum.
#[derive(Debug, Clone, PartialEq)]
pub enum TailBlockReport {
    /// The law is constantly `value`; that block is infinite-dimensional.
    Constant { value: Rat },
    /// The law alternates between two constants; both blocks are
    /// infinite-dimensional.
    TwoValued { even: Rat, odd: Rat },
    /// Eventually strictly monotone law: a parametrized family of further
    /// blocks continues beyond the window, one per law position.
    Family,
}

/// Block decomposition of the fixed-point subalgebra of a diagonal
/// one-parameter group, with the central generators of the finite blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPartition {
    pub blocks: Vec<SpectralBlock>,
    pub center_generators: Vec<CenterGenerator>,
    pub tail: TailBlockReport,
}

/// Group window indices of d by value and classify the tail law.  The finite
/// part covers indices 1..=max(window, last table index); a constant or
/// two-valued law marks the matching blocks infinite, a monotone law is
/// reported as a continuing family, and anything mixed is undecidable.
pub fn fixed_point_decomposition(
    d: &DiagonalSequence,
    window: u64,
) -> Result<EigenPartition, CovarianceError> {
    let m = d.table().keys().next_back().copied().unwrap_or(0).max(window);
    let mut counts: BTreeMap<Rat, u64> = BTreeMap::new();
    for j in 1..=m {
        let v = d.value_exact(j).ok_or(CovarianceError::UndecidableTail)?;
        *counts.entry(v).or_insert(0) += 1;
    }
    let (report, infinite_values) = match d.tail().profile() {
        TailProfile::Constant(c) => (TailBlockReport::Constant { value: c }, vec![c]),
        TailProfile::TwoValued { even, odd } => {
            (TailBlockReport::TwoValued { even, odd }, vec![even, odd])
        }
        TailProfile::EventuallyInjective => (TailBlockReport::Family, vec![]),
        TailProfile::Mixed => return Err(CovarianceError::UndecidableTail),
    };
    for v in &infinite_values {
        counts.entry(*v).or_insert(0);
    }
    let blocks: Vec<SpectralBlock> = counts
        .into_iter()
        .map(|(value, window_count)| SpectralBlock {
            value,
            dim: if infinite_values.contains(&value) {
                BlockDim::Infinite
            } else {
                BlockDim::Finite(window_count)
            },
            window_count,
        })
        .collect();
    let center_generators = blocks
        .iter()
        .filter_map(|b| match b.dim {
            BlockDim::Finite(k) => Some(CenterGenerator {
                value: b.value,
                norm: 2.0 * std::f64::consts::PI * (k as f64).sqrt(),
            }),
            BlockDim::Infinite => None,
        })
        .collect();
    Ok(EigenPartition {
        blocks,
        center_generators,
        tail: report,
    })
}

// ---------------------------------------------------------------------------
// diagonalizability and the diagonal masa
// ---------------------------------------------------------------------------

/// Window eigendata of a hermitian generator: always diagonalizable at this
/// scale; it fixes the diagonal masa exactly when it is already diagonal.
#[derive(Debug, Clone)]
pub struct TorusFixReport {
    pub diagonalizable: bool,
    pub fixes_diagonal_masa: bool,
    pub eigenvalues: Vec<f64>,
    /// Columns are the orthonormal eigenbasis conjugating into diagonal form.
    pub eigenbasis: CMat,
}

pub fn diagonal_fixes_torus(h: &TruncOp, window: u64) -> Result<TorusFixReport, CovarianceError> {
    let n = (window as usize).max(h.window_size());
    let padded = h.pad_to(n);
    let tol = 1e-10 * (1.0 + linalg::hs_norm(&padded.window));
    if !linalg::is_hermitian(&padded.window, tol) {
        return Err(CovarianceError::NotHermitian);
    }
    let (eigenvalues, eigenbasis) = linalg::hermitian_eigen(&padded.window);
    Ok(TorusFixReport {
        diagonalizable: true,
        fixes_diagonal_masa: linalg::is_diagonal(&padded.window, tol),
        eigenvalues,
        eigenbasis,
    })
}

// ---------------------------------------------------------------------------
// the character χ_d and energy spectra
// ---------------------------------------------------------------------------

fn integer_coords(elt: &Weight) -> Result<&BTreeMap<u64, Rat>, CovarianceError> {
    if !elt.finite_support() {
        return Err(CovarianceError::NotInRootLattice);
    }
    if !elt.except().values().all(|v| v.is_integer()) {
        return Err(CovarianceError::NotInRootLattice);
    }
    Ok(elt.except())
}

/// Pair finite coordinates against d, exactly when d is exact on the support.
fn pair_with_d(coords: &BTreeMap<u64, Rat>, d: &DiagonalSequence) -> f64 {
    let exact: Option<Rat> = coords
        .iter()
        .try_fold(rat(0), |acc, (&j, &a)| Some(acc + a * d.value_exact(j)?));
    match exact {
        Some(s) => rat_to_f64(s),
        None => coords
            .iter()
            .map(|(&j, &a)| rat_to_f64(a) * d.value(j))
            .sum(),
    }
}

/// χ_d on the root lattice of the simple-difference system: finite integer
/// coordinates with sum zero, evaluated as Σ_j (elt)_j d_j.
pub fn chi_d(d: &DiagonalSequence, elt: &Weight) -> Result<f64, CovarianceError> {
    let coords = integer_coords(elt)?;
    let total: Rat = coords.values().sum();
    if !total.is_zero() {
        return Err(CovarianceError::NotInRootLattice);
    }
    Ok(pair_with_d(coords, d))
}

/// A finite family of finite-support weights confined to a window.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSet {
    pub window: u64,
    pub weights: Vec<Weight>,
}

impl WeightSet {
    pub fn new(window: u64, weights: Vec<Weight>) -> Result<WeightSet, CovarianceError> {
        if weights.is_empty() {
            return Err(CovarianceError::Malformed("empty weight set".into()));
        }
        for w in &weights {
            if !w.finite_support() {
                return Err(CovarianceError::Malformed(
                    "weight set entries need finite support".into(),
                ));
            }
            if let Some(&j) = w.except().keys().next_back() {
                if j > window {
                    return Err(CovarianceError::Malformed(format!(
                        "support index {j} exceeds the window {window}"
                    )));
                }
            }
        }
        Ok(WeightSet { window, weights })
    }
}

fn in_root_lattice(kind: RootSystemKind, coords: &BTreeMap<u64, Rat>) -> bool {
    if !coords.values().all(|v| v.is_integer()) {
        return false;
    }
    let total: Rat = coords.values().sum();
    match kind {
        RootSystemKind::A => total.is_zero(),
        RootSystemKind::B => true,
        RootSystemKind::C | RootSystemKind::D => (total.to_integer() % 2) == 0,
    }
}

/// The energies {χ_d(ν − ν₀) : ν ∈ P} of the covariant extension picked by
/// the base weight ν₀, sorted ascending with multiplicity.
pub fn energy_spectrum(
    kind: RootSystemKind,
    p: &WeightSet,
    nu0: &Weight,
    d: &DiagonalSequence,
) -> Result<Vec<f64>, CovarianceError> {
    if !nu0.finite_support() {
        return Err(CovarianceError::Malformed(
            "base weight needs finite support".into(),
        ));
    }
    let mut out = Vec::with_capacity(p.weights.len());
    for nu in &p.weights {
        let mut diff: BTreeMap<u64, Rat> = BTreeMap::new();
        for &j in nu.except().keys().chain(nu0.except().keys()) {
            let delta = nu.value(j) - nu0.value(j);
            if !delta.is_zero() {
                diff.insert(j, delta);
            }
        }
        if !in_root_lattice(kind, &diff) {
            return Err(CovarianceError::LatticeMismatch);
        }
        out.push(pair_with_d(&diff, d));
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(out)
}

// ---------------------------------------------------------------------------
// semiboundedness of the pairing over the Weyl orbit
// ---------------------------------------------------------------------------

/// Window minimum of ⟨wλ − λ, d⟩ together with the symbolic verdict on
/// whether the infimum over the full group stays finite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemiboundReport {
    pub value: f64,
    pub finite: bool,
}

fn window_min_exact(
    kind: RootSystemKind,
    lam: &[Rat],
    dw: &[Rat],
) -> Result<Rat, CovarianceError> {
    match kind {
        RootSystemKind::A => {
            let mut a = lam.to_vec();
            let mut b = dw.to_vec();
            a.sort();
            b.sort();
            b.reverse();
            Ok(a.iter().zip(&b).map(|(x, y)| x * y).sum())
        }
        RootSystemKind::B | RootSystemKind::C => {
            let mut a: Vec<Rat> = lam.iter().map(|v| v.abs()).collect();
            let mut b: Vec<Rat> = dw.iter().map(|v| v.abs()).collect();
            a.sort();
            a.reverse();
            b.sort();
            b.reverse();
            Ok(-a.iter().zip(&b).map(|(x, y)| x * y).sum::<Rat>())
        }
        RootSystemKind::D => {
            if lam.len() > 8 {
                return Err(CovarianceError::WindowTooLarge(lam.len()));
            }
            let mut best: Option<Rat> = None;
            for p in permutations(lam) {
                let terms: Vec<Rat> = p.iter().zip(dw).map(|(x, y)| x * y).collect();
                let abs_sum: Rat = terms.iter().map(|t| t.abs()).sum();
                let mut value = -abs_sum;
                let has_zero = terms.iter().any(|t| t.is_zero());
                if !has_zero {
                    let flips = terms.iter().filter(|t| t.is_positive()).count();
                    if flips % 2 == 1 {
                        let cheapest = terms.iter().map(|t| t.abs()).min().unwrap();
                        value += rat(2) * cheapest;
                    }
                }
                if best.as_ref().is_none_or(|b| value < *b) {
                    best = Some(value);
                }
            }
            Ok(best.unwrap_or_else(|| rat(0)))
        }
    }
}

fn window_min_f64(kind: RootSystemKind, lam: &[f64], dw: &[f64]) -> Result<f64, CovarianceError> {
    match kind {
        RootSystemKind::A => {
            let mut a = lam.to_vec();
            let mut b = dw.to_vec();
            a.sort_by(|x, y| x.partial_cmp(y).unwrap());
            b.sort_by(|x, y| y.partial_cmp(x).unwrap());
            Ok(a.iter().zip(&b).map(|(x, y)| x * y).sum())
        }
        RootSystemKind::B | RootSystemKind::C => {
            let mut a: Vec<f64> = lam.iter().map(|v| v.abs()).collect();
            let mut b: Vec<f64> = dw.iter().map(|v| v.abs()).collect();
            a.sort_by(|x, y| y.partial_cmp(x).unwrap());
            b.sort_by(|x, y| y.partial_cmp(x).unwrap());
            Ok(-a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>())
        }
        RootSystemKind::D => {
            if lam.len() > 8 {
                return Err(CovarianceError::WindowTooLarge(lam.len()));
            }
            let rats: Vec<Rat> = (0..lam.len() as i64).map(rat).collect();
            let mut best = f64::INFINITY;
            for p in permutations(&rats) {
                let order: Vec<usize> = p.iter().map(|r| r.to_integer() as usize).collect();
                let terms: Vec<f64> = order.iter().zip(dw).map(|(&i, y)| lam[i] * y).collect();
                let abs_sum: f64 = terms.iter().map(|t| t.abs()).sum();
                let mut value = -abs_sum;
                let has_zero = terms.iter().any(|t| *t == 0.0);
                if !has_zero {
                    let flips = terms.iter().filter(|t| **t > 0.0).count();
                    if flips % 2 == 1 {
                        let cheapest = terms.iter().map(|t| t.abs()).fold(f64::INFINITY, f64::min);
                        value += 2.0 * cheapest;
                    }
                }
                best = best.min(value);
            }
            Ok(if best.is_finite() { best } else { 0.0 })
        }
    }
}

fn tail_escape_finite(
    kind: RootSystemKind,
    lam: &Weight,
    d: &DiagonalSequence,
) -> Result<bool, CovarianceError> {
    if lam.except().is_empty() {
        return Ok(true);
    }
    let above = d.bounded_above();
    let below = d.bounded_below();
    if above && below {
        return Ok(true);
    }
    if !d.tail().alt_terms().is_empty() {
        // unbounded and not eventually monotone: outside the decidable family
        return Err(CovarianceError::UndecidableTail);
    }
    let has_pos = lam.except().values().any(|v| v.is_positive());
    let has_neg = lam.except().values().any(|v| v.is_negative());
    let descent = match kind {
        RootSystemKind::A => (has_pos && !below) || (has_neg && !above),
        RootSystemKind::B | RootSystemKind::C | RootSystemKind::D => !above || !below,
    };
    Ok(!descent)
}

/// Minimize ⟨wλ − λ, d⟩ over signed permutations supported in the window,
/// and decide symbolically whether support escaping into the tail can drive
/// the pairing to −∞.
pub fn wsembo_infimum(
    kind: RootSystemKind,
    lam: &Weight,
    d: &DiagonalSequence,
    window: u64,
) -> Result<SemiboundReport, CovarianceError> {
    if !lam.finite_support() {
        return Err(CovarianceError::Malformed(
            "weight needs finite support".into(),
        ));
    }
    if let Some(&j) = lam.except().keys().next_back() {
        if j > window {
            return Err(CovarianceError::Malformed(format!(
                "support index {j} exceeds the window {window}"
            )));
        }
    }
    let vl: Vec<Rat> = (1..=window).map(|j| lam.value(j)).collect();
    let dw_exact: Option<Vec<Rat>> = (1..=window).map(|j| d.value_exact(j)).collect();
    let value = match dw_exact {
        Some(dw) => {
            let base: Rat = vl.iter().zip(&dw).map(|(x, y)| x * y).sum();
            rat_to_f64(window_min_exact(kind, &vl, &dw)? - base)
        }
        None => {
            let vf: Vec<f64> = vl.iter().map(|v| rat_to_f64(*v)).collect();
            let df: Vec<f64> = (1..=window).map(|j| d.value(j)).collect();
            let base: f64 = vf.iter().zip(&df).map(|(x, y)| x * y).sum();
            window_min_f64(kind, &vf, &df)? - base
        }
    };
    let finite = tail_escape_finite(kind, lam, d)?;
    Ok(SemiboundReport { value, finite })
}

// ---------------------------------------------------------------------------
// ground states and spectral ordering
// ---------------------------------------------------------------------------

/// Ground-state admissibility of the fixed-point weight set: every weight
/// must pair minimally with d, i.e. d_n > d_m forces ν_n ≤ ν_m on the
/// window (occupation concentrates where the energy sequence is smallest).
pub fn ground_state_admissible(p0: &WeightSet, d: &DiagonalSequence, window: u64) -> bool {
    let dv: Vec<f64> = (1..=window).map(|j| d.value(j)).collect();
    for n in 0..dv.len() {
        for m in 0..dv.len() {
            if dv[n] > dv[m] {
                for nu in &p0.weights {
                    if nu.value(n as u64 + 1) > nu.value(m as u64 + 1) {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Necessity check for discrete decomposition: blocks sorted by their
/// b-eigenvalue must have non-overlapping generator spectra,
/// sup Spec(d_μ) ≤ inf Spec(d_ν) whenever μ < ν.
pub fn spectral_ordering_check(blocks: &[(f64, Vec<f64>)]) -> bool {
    for (i, (mu, spec_mu)) in blocks.iter().enumerate() {
        for (nu, spec_nu) in blocks.iter().skip(i + 1) {
            let (lo, hi) = if mu < nu {
                (spec_mu, spec_nu)
            } else {
                (spec_nu, spec_mu)
            };
            if lo.is_empty() || hi.is_empty() {
                continue;
            }
            let sup_lo = lo.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let inf_hi = hi.iter().cloned().fold(f64::INFINITY, f64::min);
            if sup_lo > inf_hi {
                return false;
            }
        }
    }
    true
}

/// Boundedness flags of the hermitian generator's value sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Semibounds {
    pub below: bool,
    pub above: bool,
}

/// The generator is semibounded below/above exactly when its sequence is;
/// decidable for every law in the closed tail family.
pub fn id_semibounded(d: &DiagonalSequence) -> Semibounds {
    Semibounds {
        below: d.bounded_below(),
        above: d.bounded_above(),
    }
}

// ---------------------------------------------------------------------------
// wire formats
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct WeightSetJson {
    window: u64,
    weights: Vec<Weight>,
}

impl Serialize for WeightSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        WeightSetJson {
            window: self.window,
            weights: self.weights.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for WeightSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let raw = WeightSetJson::deserialize(d)?;
        WeightSet::new(raw.window, raw.weights).map_err(|e| D::Error::custom(e.to_string()))
    }
}

#[derive(Serialize)]
#[serde(untagged)]
enum DimJson {
    Count(u64),
    Word(&'static str),
}

#[derive(Serialize)]
struct BlockJson {
    value: f64,
    dim: DimJson,
    window_count: u64,
}

impl Serialize for EigenPartition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct CenterJson {
            value: f64,
            norm: f64,
        }
        #[derive(Serialize)]
        #[serde(tag = "kind", rename_all = "kebab-case")]
        enum TailJson {
            Constant { value: f64 },
            TwoValued { even: f64, odd: f64 },
            Family,
        }
        let mut st = s.serialize_struct("EigenPartition", 3)?;
        let blocks: Vec<BlockJson> = self
            .blocks
            .iter()
            .map(|b| BlockJson {
                value: rat_to_f64(b.value),
                dim: match b.dim {
                    BlockDim::Finite(k) => DimJson::Count(k),
                    BlockDim::Infinite => DimJson::Word("inf"),
                },
                window_count: b.window_count,
            })
            .collect();
        st.serialize_field("blocks", &blocks)?;
        let center: Vec<CenterJson> = self
            .center_generators
            .iter()
            .map(|c| CenterJson {
                value: rat_to_f64(c.value),
                norm: c.norm,
            })
            .collect();
        st.serialize_field("center", &center)?;
        let tail = match &self.tail {
            TailBlockReport::Constant { value } => TailJson::Constant {
                value: rat_to_f64(*value),
            },
            TailBlockReport::TwoValued { even, odd } => TailJson::TwoValued {
                even: rat_to_f64(*even),
                odd: rat_to_f64(*odd),
            },
            TailBlockReport::Family => TailJson::Family,
        };
        st.serialize_field("tail", &tail)?;
        st.end()
    }
}
