//! Diagonal 2-cocycles ω_d(x,y) = Im tr(d·[x,y]), their coboundary
//! classification by ℓ²-shift, the conjugation 1-cocycle Θ(g) = gdg⁻¹ − d,
//! the affine coadjoint action, and restricted-group membership by
//! Hilbert–Schmidt off-diagonal blocks.
//!
//! Convention: a `DiagonalSequence` stores the real sequence d_j; the
//! skew-hermitian operator it generates is diag(i·d_j).

use std::collections::BTreeSet;

use nalgebra::Complex;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, CMat};
use crate::ops::{commutator, OpTail, TruncOp};
use crate::seq::{rat_to_f64, DiagonalSequence, Rat, SumValue};

#[derive(Debug, Error, PartialEq)]
pub enum CocycleError {
    #[error("operator is not skew-hermitian")]
    NotSkew,
    #[error("operator is not unitary with identity tail")]
    NotUnitary,
    #[error("operator is not diagonal")]
    NotDiagonal,
    #[error("sequence values are not exactly representable")]
    UndecidableTail,
    #[error("malformed block partition: {0}")]
    MalformedPartition(String),
}

/// Cohomology class of ω_d: zero (d constant), a coboundary (d − c square
/// summable for the shift c, with the exact tail sum Σ(d_j − c)² as
/// evidence), or nontrivial.
#[derive(Debug, Clone, PartialEq)]
pub enum CocycleClass {
    Zero,
    Coboundary { shift: Rat, tail_sum: f64 },
    Nontrivial,
}

impl CocycleClass {
    pub fn is_trivial(&self) -> bool {
        !matches!(self, CocycleClass::Nontrivial)
    }
}

impl Serialize for CocycleClass {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            CocycleClass::Zero => {
                let mut st = s.serialize_struct("CocycleClass", 1)?;
                st.serialize_field("verdict", "zero")?;
                st.end()
            }
            CocycleClass::Coboundary { shift, tail_sum } => {
                let mut st = s.serialize_struct("CocycleClass", 3)?;
                st.serialize_field("verdict", "coboundary")?;
                st.serialize_field("shift", &rat_to_f64(*shift))?;
                st.serialize_field("tail_sum", tail_sum)?;
                st.end()
            }
            CocycleClass::Nontrivial => {
                let mut st = s.serialize_struct("CocycleClass", 1)?;
                st.serialize_field("verdict", "nontrivial")?;
                st.end()
            }
        }
    }
}

fn skew_tol(x: &TruncOp) -> f64 {
    1e-8 * (1.0 + linalg::hs_norm(&x.window))
}

/// ω_d(x, y) = Im Σ_j d_j [x, y]_{jj} for skew-hermitian windowed operators.
/// Beyond the common window both operators are diagonal, so the commutator
/// vanishes there and the sum is finite.
pub fn omega_d(d: &DiagonalSequence, x: &TruncOp, y: &TruncOp) -> Result<f64, CocycleError> {
    if !x.is_skew_hermitian(skew_tol(x)) || !y.is_skew_hermitian(skew_tol(y)) {
        return Err(CocycleError::NotSkew);
    }
    let comm = commutator(x, y).expect("windowed commutator");
    let n = comm.window_size();
    let mut total = 0.0;
    for j in 1..=n {
        total += d.value(j as u64) * comm.window[(j - 1, j - 1)].im;
    }
    Ok(total)
}

/// Exact classification of ω_d.  The only possible ℓ²-shift is the limit of
/// the tail law; a constant sequence is the zero class.
pub fn cocycle_class(d: &DiagonalSequence) -> CocycleClass {
    if d.as_constant().is_some() {
        return CocycleClass::Zero;
    }
    if let Some(c) = d.tail().square_shift_candidate() {
        if d.square_summable_after_shift(c) {
            if let SumValue::Finite(tail_sum) = d.sum_sq_from(1, c) {
                return CocycleClass::Coboundary {
                    shift: c,
                    tail_sum,
                };
            }
        }
    }
    CocycleClass::Nontrivial
}

fn check_window_unitary(g: &TruncOp) -> Result<(), CocycleError> {
    let identity_tail = match g.tail {
        OpTail::Scalar(s) => (s - Complex64::new(1.0, 0.0)).norm() <= 1e-10,
        _ => false,
    };
    if !identity_tail || !linalg::is_unitary(&g.window, 1e-10) {
        return Err(CocycleError::NotUnitary);
    }
    Ok(())
}

/// Θ(g) = g d g⁻¹ − d for a window unitary with identity tail and a diagonal
/// d.  Beyond the window the conjugation is trivial, so the result has an
/// exact zero tail and is skew-hermitian whenever d is.
pub fn theta(d_window: &TruncOp, g: &TruncOp) -> Result<TruncOp, CocycleError> {
    check_window_unitary(g)?;
    if !linalg::is_diagonal(&d_window.window, 1e-10) {
        return Err(CocycleError::NotDiagonal);
    }
    let n = d_window.window_size().max(g.window_size());
    let dp = d_window.pad_to(n);
    let gp = g.pad_to(n);
    let conj = &gp.window * &dp.window * gp.window.adjoint();
    let w = conj - &dp.window;
    Ok(TruncOp::new(w, OpTail::Zero, format!("theta({})", g.basis_label)).expect("square"))
}

/// Affine coadjoint action gαg⁻¹ + Θ(g) on skew-hermitian functionals
/// identified with operators through the trace pairing.
pub fn affine_coadjoint(
    d_window: &TruncOp,
    g: &TruncOp,
    alpha: &TruncOp,
) -> Result<TruncOp, CocycleError> {
    if !alpha.is_skew_hermitian(skew_tol(alpha)) {
        return Err(CocycleError::NotSkew);
    }
    let n = d_window
        .window_size()
        .max(g.window_size())
        .max(alpha.window_size());
    let th = theta(&d_window.pad_to(n), &g.pad_to(n))?;
    let gp = g.pad_to(n);
    let ap = alpha.pad_to(n);
    let w = &gp.window * &ap.window * gp.window.adjoint() + &th.window;
    Ok(TruncOp::new(w, ap.tail.clone(), format!("coad({})", alpha.basis_label)).expect("square"))
}

/// Sampled Θ-orbit statistics together with the exact class of ω_d and, for
/// trivial classes, the a-priori bound 2‖d − c‖₂ from the triangle
/// inequality.
#[derive(Debug, Clone, Serialize)]
pub struct ThetaOrbitStats {
    pub max_norm: f64,
    pub class: CocycleClass,
    pub apriori_bound: Option<f64>,
}

/// Sample ‖Θ(g)‖₂ over Haar window unitaries of size `n`.
pub fn theta_orbit_stats(
    d: &DiagonalSequence,
    n: usize,
    samples: usize,
    seed: u64,
) -> ThetaOrbitStats {
    let mut dm = CMat::zeros(n, n);
    for j in 0..n {
        dm[(j, j)] = Complex::new(0.0, d.value(j as u64 + 1));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_norm: f64 = 0.0;
    for _ in 0..samples {
        let g = linalg::haar_unitary(n, &mut rng);
        let t = &g * &dm * g.adjoint() - &dm;
        max_norm = max_norm.max(linalg::hs_norm(&t));
    }
    let class = cocycle_class(d);
    let apriori_bound = match &class {
        CocycleClass::Zero => Some(0.0),
        CocycleClass::Coboundary { tail_sum, .. } => Some(2.0 * tail_sum.sqrt()),
        CocycleClass::Nontrivial => None,
    };
    ThetaOrbitStats {
        max_norm,
        class,
        apriori_bound,
    }
}

// ---------------------------------------------------------------------------
// restricted-group membership
// ---------------------------------------------------------------------------

/// Dimension of an eigen-block of d: a finite count or a genuinely infinite
/// summand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockDim {
    Finite(u64),
    Infinite,
}

/// One eigen-block of the diagonal: the eigenvalue label and its
/// multiplicity.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenBlock {
    pub value: f64,
    pub dim: BlockDim,
}

/// A block of g in the eigen-block picture: an explicit finite window, or a
/// symbolic tag for the genuinely infinite case.
#[derive(Debug, Clone, PartialEq)]
pub enum BlockTag {
    Identity,
    Zero,
    Hs,
    NonHs,
    Window(CMat),
}

/// Membership in the restricted unitary group: every off-diagonal block in
/// the eigen-block decomposition of d must be Hilbert–Schmidt.  Finite
/// windows always are; symbolic tags decide the infinite blocks.  `NonHs`
/// between blocks that are not both infinite, an off-diagonal `Identity`
/// between blocks of unequal dimension, repeated eigenvalues, or a ragged
/// tag grid are malformed.
pub fn u_res_contains(
    tags: &[Vec<BlockTag>],
    partition: &[EigenBlock],
) -> Result<bool, CocycleError> {
    let r = partition.len();
    if r == 0 {
        return Err(CocycleError::MalformedPartition("empty partition".into()));
    }
    let mut values = BTreeSet::new();
    for b in partition {
        if !values.insert(b.value.to_bits()) {
            return Err(CocycleError::MalformedPartition(format!(
                "repeated eigenvalue {}",
                b.value
            )));
        }
        if b.dim == BlockDim::Finite(0) {
            return Err(CocycleError::MalformedPartition("empty block".into()));
        }
    }
    if tags.len() != r || tags.iter().any(|row| row.len() != r) {
        return Err(CocycleError::MalformedPartition(format!(
            "tag grid is not {r}×{r}"
        )));
    }
    let mut all_hs = true;
    for (i, row) in tags.iter().enumerate() {
        for (j, tag) in row.iter().enumerate() {
            if i == j {
                continue;
            }
            let di = partition[i].dim;
            let dj = partition[j].dim;
            let hs = match tag {
                BlockTag::Zero | BlockTag::Hs => true,
                BlockTag::Window(m) => {
                    if let (BlockDim::Finite(a), BlockDim::Finite(b)) = (di, dj) {
                        if m.nrows() as u64 != a || m.ncols() as u64 != b {
                            return Err(CocycleError::MalformedPartition(format!(
                                "window block ({i},{j}) has the wrong shape"
                            )));
                        }
                    }
                    true
                }
                BlockTag::NonHs => {
                    if di != BlockDim::Infinite || dj != BlockDim::Infinite {
                        return Err(CocycleError::MalformedPartition(format!(
                            "non-HS tag between finite blocks ({i},{j})"
                        )));
                    }
                    false
                }
                BlockTag::Identity => {
                    if di != dj {
                        return Err(CocycleError::MalformedPartition(format!(
                            "identity block ({i},{j}) between unequal dimensions"
                        )));
                    }
                    matches!(di, BlockDim::Finite(_))
                }
            };
            all_hs &= hs;
        }
    }
    Ok(all_hs)
}

/// Pointwise difference of two diagonal sequences; fails when a table index
/// of one lands on a law position of the other whose exact value is not
/// rational.
fn seq_sub(a: &DiagonalSequence, b: &DiagonalSequence) -> Result<DiagonalSequence, CocycleError> {
    let tail = a.tail().sub(b.tail());
    let mut table = std::collections::BTreeMap::new();
    for &j in a.table().keys().chain(b.table().keys()) {
        let va = a.value_exact(j).ok_or(CocycleError::UndecidableTail)?;
        let vb = b.value_exact(j).ok_or(CocycleError::UndecidableTail)?;
        table.insert(j, va - vb);
    }
    DiagonalSequence::new(table, tail).map_err(|_| CocycleError::UndecidableTail)
}

/// Do d₁ and d₂ generate equivalent one-parameter central extensions, i.e.
/// is d₁ − d₂ a constant plus an ℓ² sequence?
pub fn one_param_equivalent(
    d1: &DiagonalSequence,
    d2: &DiagonalSequence,
) -> Result<bool, CocycleError> {
    let diff = seq_sub(d1, d2)?;
    Ok(cocycle_class(&diff).is_trivial())
}

// ---------------------------------------------------------------------------
// wire format for block descriptors
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum DimJson {
    Count(u64),
    Word(String),
}

#[derive(Serialize, Deserialize)]
struct EigenBlockJson {
    value: f64,
    dim: DimJson,
}

impl Serialize for EigenBlock {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        EigenBlockJson {
            value: self.value,
            dim: match self.dim {
                BlockDim::Finite(n) => DimJson::Count(n),
                BlockDim::Infinite => DimJson::Word("inf".into()),
            },
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for EigenBlock {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let raw = EigenBlockJson::deserialize(d)?;
        let dim = match raw.dim {
            DimJson::Count(n) => BlockDim::Finite(n),
            DimJson::Word(w) if w == "inf" => BlockDim::Infinite,
            DimJson::Word(w) => return Err(D::Error::custom(format!("unknown dimension {w:?}"))),
        };
        Ok(EigenBlock {
            value: raw.value,
            dim,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct BlockTagJson {
    tag: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    im: Vec<Vec<f64>>,
}

impl Serialize for BlockTag {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let raw = match self {
            BlockTag::Identity => BlockTagJson {
                tag: "identity".into(),
                re: vec![],
                im: vec![],
            },
            BlockTag::Zero => BlockTagJson {
                tag: "zero".into(),
                re: vec![],
                im: vec![],
            },
            BlockTag::Hs => BlockTagJson {
                tag: "hs".into(),
                re: vec![],
                im: vec![],
            },
            BlockTag::NonHs => BlockTagJson {
                tag: "nonhs".into(),
                re: vec![],
                im: vec![],
            },
            BlockTag::Window(m) => BlockTagJson {
                tag: "window".into(),
                re: (0..m.nrows())
                    .map(|i| (0..m.ncols()).map(|j| m[(i, j)].re).collect())
                    .collect(),
                im: (0..m.nrows())
                    .map(|i| (0..m.ncols()).map(|j| m[(i, j)].im).collect())
                    .collect(),
            },
        };
        raw.serialize(s)
    }
}

impl<'de> Deserialize<'de> for BlockTag {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let raw = BlockTagJson::deserialize(d)?;
        match raw.tag.as_str() {
            "identity" => Ok(BlockTag::Identity),
            "zero" => Ok(BlockTag::Zero),
            "hs" => Ok(BlockTag::Hs),
            "nonhs" => Ok(BlockTag::NonHs),
            "window" => {
                let rows = raw.re.len();
                let cols = raw.re.first().map_or(0, |r| r.len());
                if rows == 0 || raw.re.iter().any(|r| r.len() != cols) {
                    return Err(D::Error::custom("window block needs a rectangular matrix"));
                }
                if !raw.im.is_empty()
                    && (raw.im.len() != rows || raw.im.iter().any(|r| r.len() != cols))
                {
                    return Err(D::Error::custom("imaginary part has the wrong shape"));
                }
                let mut m = CMat::zeros(rows, cols);
                for i in 0..rows {
                    for j in 0..cols {
                        let im = raw.im.get(i).map_or(0.0, |r| r[j]);
                        m[(i, j)] = Complex64::new(raw.re[i][j], im);
                    }
                }
                Ok(BlockTag::Window(m))
            }
            other => Err(D::Error::custom(format!("unknown tag {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, cr, id};
    use crate::seq::Tail;
    use rand::Rng;
    use std::collections::BTreeMap;

    fn rat(n: i64) -> Rat {
        Rat::from_integer(n)
    }

    fn window_op(entries: &[&[Complex64]]) -> TruncOp {
        let n = entries.len();
        let mut m = CMat::zeros(n, n);
        for (i, row) in entries.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        TruncOp::new(m, OpTail::Zero, "w").unwrap()
    }

    fn unitary_op(m: CMat) -> TruncOp {
        TruncOp::new(m, OpTail::Scalar(cr(1.0)), "g").unwrap()
    }

    fn random_skew<R: Rng>(n: usize, rng: &mut R) -> TruncOp {
        let g = linalg::ginibre(n, rng);
        let w = (&g - g.adjoint()) * cr(0.5);
        TruncOp::new(w, OpTail::Zero, "x").unwrap()
    }

    fn harmonic() -> DiagonalSequence {
        DiagonalSequence::from_tail(Tail::power(rat(1), rat(-1)))
    }

    #[test]
    fn diagonal_arguments_give_zero_pairing() {
        let d = harmonic();
        let x = window_op(&[&[c(0.0, 1.0), cr(0.0)], &[cr(0.0), c(0.0, 2.0)]]);
        let y = window_op(&[&[c(0.0, 3.0), cr(0.0)], &[cr(0.0), c(0.0, 1.0)]]);
        assert_eq!(omega_d(&d, &x, &y).unwrap(), 0.0);
    }

    #[test]
    fn rotation_pair_fixture_pairs_to_two() {
        let d = DiagonalSequence::new(BTreeMap::from([(1, rat(1))]), Tail::zero()).unwrap();
        let x = window_op(&[&[cr(0.0), cr(1.0)], &[cr(-1.0), cr(0.0)]]);
        let y = window_op(&[&[cr(0.0), c(0.0, 1.0)], &[c(0.0, 1.0), cr(0.0)]]);
        let v = omega_d(&d, &x, &y).unwrap();
        assert!((v - 2.0).abs() < 1e-12, "got {v}");
        let anti = omega_d(&d, &y, &x).unwrap();
        assert!((anti + 2.0).abs() < 1e-12);
        assert_eq!(omega_d(&d, &x, &x).unwrap(), 0.0);
        let herm = window_op(&[&[cr(1.0)]]);
        assert_eq!(omega_d(&d, &herm, &x), Err(CocycleError::NotSkew));
    }

    #[test]
    fn pairing_satisfies_the_two_cocycle_identity() {
        let d = harmonic();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let x = random_skew(4, &mut rng);
            let y = random_skew(4, &mut rng);
            let z = random_skew(4, &mut rng);
            let xy = commutator(&x, &y).unwrap();
            let yz = commutator(&y, &z).unwrap();
            let zx = commutator(&z, &x).unwrap();
            let total = omega_d(&d, &xy, &z).unwrap()
                + omega_d(&d, &yz, &x).unwrap()
                + omega_d(&d, &zx, &y).unwrap();
            assert!(total.abs() < 1e-9, "cocycle identity residual {total}");
        }
    }

    #[test]
    fn pairing_is_invariant_under_constant_shifts_of_d() {
        // tr of a commutator vanishes on the window, so d and d − c pair alike
        let d = harmonic();
        let shifted = DiagonalSequence::from_tail(
            Tail::power(rat(1), rat(-1)).add(&Tail::constant(rat(5))),
        );
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..10 {
            let x = random_skew(3, &mut rng);
            let y = random_skew(3, &mut rng);
            let a = omega_d(&d, &x, &y).unwrap();
            let b = omega_d(&shifted, &x, &y).unwrap();
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn classification_fixtures() {
        assert_eq!(cocycle_class(&DiagonalSequence::constant(rat(5))), CocycleClass::Zero);
        match cocycle_class(&harmonic()) {
            CocycleClass::Coboundary { shift, tail_sum } => {
                assert_eq!(shift, rat(0));
                let zeta2 = std::f64::consts::PI.powi(2) / 6.0;
                assert!((tail_sum - zeta2).abs() < 1e-9, "got {tail_sum}");
            }
            other => panic!("expected coboundary, got {other:?}"),
        }
        let alt = DiagonalSequence::from_tail(Tail::alternating(rat(1)));
        assert_eq!(cocycle_class(&alt), CocycleClass::Nontrivial);
        let linear = DiagonalSequence::from_tail(Tail::power(rat(1), rat(1)));
        assert_eq!(cocycle_class(&linear), CocycleClass::Nontrivial);
        // finite deviations over a constant tail: coboundary with exact sum
        let dev = DiagonalSequence::new(BTreeMap::from([(1, rat(7))]), Tail::constant(rat(5)))
            .unwrap();
        match cocycle_class(&dev) {
            CocycleClass::Coboundary { shift, tail_sum } => {
                assert_eq!(shift, rat(5));
                assert!((tail_sum - 4.0).abs() < 1e-12);
            }
            other => panic!("expected coboundary, got {other:?}"),
        }
    }

    #[test]
    fn classification_is_shift_and_ell2_invariant() {
        let base = cocycle_class(&harmonic());
        let shifted = cocycle_class(&DiagonalSequence::from_tail(
            Tail::power(rat(1), rat(-1)).add(&Tail::constant(rat(3))),
        ));
        match (base, shifted) {
            (CocycleClass::Coboundary { .. }, CocycleClass::Coboundary { shift, .. }) => {
                assert_eq!(shift, rat(3));
            }
            other => panic!("expected two coboundaries, got {other:?}"),
        }
        let perturbed_alt = DiagonalSequence::from_tail(
            Tail::alternating(rat(1)).add(&Tail::power(rat(1), rat(-1))),
        );
        assert_eq!(cocycle_class(&perturbed_alt), CocycleClass::Nontrivial);
    }

    #[test]
    fn conjugation_cocycle_vanishes_on_commuting_unitaries() {
        let d = window_op(&[&[c(0.0, 1.0), cr(0.0)], &[cr(0.0), c(0.0, 2.0)]]);
        let phases = unitary_op(CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::from_polar(1.0, 0.4),
            Complex64::from_polar(1.0, -1.1),
        ])));
        let t = theta(&d, &phases).unwrap();
        assert!(linalg::hs_norm(&t.window) < 1e-12);
        assert!(matches!(t.tail, OpTail::Zero));
    }

    #[test]
    fn quarter_turn_swaps_diagonal_entries() {
        let d = window_op(&[&[c(0.0, 1.0), cr(0.0)], &[cr(0.0), c(0.0, 2.0)]]);
        let rot = unitary_op(CMat::from_row_slice(
            2,
            2,
            &[cr(0.0), cr(-1.0), cr(1.0), cr(0.0)],
        ));
        let t = theta(&d, &rot).unwrap();
        let expect = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(0.0, 1.0),
            c(0.0, -1.0),
        ]));
        assert!(linalg::hs_norm(&(&t.window - expect)) < 1e-12);
        assert!(t.is_skew_hermitian(1e-10));
    }

    #[test]
    fn conjugation_cocycle_rejects_bad_inputs() {
        let d = window_op(&[&[c(0.0, 1.0)]]);
        let not_unitary = unitary_op(CMat::from_row_slice(1, 1, &[cr(2.0)]));
        assert_eq!(theta(&d, &not_unitary).unwrap_err(), CocycleError::NotUnitary);
        let zero_tail = TruncOp::new(id(1), OpTail::Zero, "g").unwrap();
        assert_eq!(theta(&d, &zero_tail).unwrap_err(), CocycleError::NotUnitary);
        let off_diag = window_op(&[&[cr(0.0), cr(1.0)], &[cr(-1.0), cr(0.0)]]);
        let g = unitary_op(id(2));
        assert_eq!(theta(&off_diag, &g).unwrap_err(), CocycleError::NotDiagonal);
    }

    #[test]
    fn conjugation_satisfies_the_one_cocycle_identity() {
        let mut dm = CMat::zeros(4, 4);
        for j in 0..4 {
            dm[(j, j)] = c(0.0, 1.0 / (j as f64 + 1.0));
        }
        let d = TruncOp::new(dm, OpTail::Zero, "d").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let g1 = linalg::haar_unitary(4, &mut rng);
            let g2 = linalg::haar_unitary(4, &mut rng);
            let t12 = theta(&d, &unitary_op(&g1 * &g2)).unwrap();
            let t1 = theta(&d, &unitary_op(g1.clone())).unwrap();
            let t2 = theta(&d, &unitary_op(g2)).unwrap();
            let law = &t1.window + &g1 * &t2.window * g1.adjoint();
            assert!(linalg::hs_norm(&(&t12.window - law)) < 1e-10);
        }
    }

    #[test]
    fn affine_action_fixtures_and_action_law() {
        let d = window_op(&[&[c(0.0, 1.0), cr(0.0)], &[cr(0.0), c(0.0, 2.0)]]);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let alpha = random_skew(2, &mut rng);
        let idg = unitary_op(id(2));
        let back = affine_coadjoint(&d, &idg, &alpha).unwrap();
        assert!(linalg::hs_norm(&(&back.window - &alpha.window)) < 1e-12);
        let g = unitary_op(linalg::haar_unitary(2, &mut rng));
        let zero = TruncOp::new(CMat::zeros(2, 2), OpTail::Zero, "0").unwrap();
        let just_theta = affine_coadjoint(&d, &g, &zero).unwrap();
        let t = theta(&d, &g).unwrap();
        assert!(linalg::hs_norm(&(&just_theta.window - &t.window)) < 1e-12);
        for _ in 0..20 {
            let g1 = unitary_op(linalg::haar_unitary(3, &mut rng));
            let g2 = unitary_op(linalg::haar_unitary(3, &mut rng));
            let a = random_skew(3, &mut rng);
            let mut dm = CMat::zeros(3, 3);
            for j in 0..3 {
                dm[(j, j)] = c(0.0, (j + 1) as f64);
            }
            let d3 = TruncOp::new(dm, OpTail::Zero, "d").unwrap();
            let product = unitary_op(&g1.window * &g2.window);
            let lhs = affine_coadjoint(&d3, &product, &a).unwrap();
            let inner = affine_coadjoint(&d3, &g2, &a).unwrap();
            let rhs = affine_coadjoint(&d3, &g1, &inner).unwrap();
            assert!(linalg::hs_norm(&(&lhs.window - &rhs.window)) < 1e-10);
        }
    }

    #[test]
    fn orbit_stats_constant_diagonal_is_flat() {
        let stats = theta_orbit_stats(&DiagonalSequence::constant(rat(2)), 6, 10, 77);
        assert!(stats.max_norm < 1e-12);
        assert_eq!(stats.class, CocycleClass::Zero);
        assert_eq!(stats.apriori_bound, Some(0.0));
    }

    #[test]
    fn orbit_stats_harmonic_diagonal_respects_the_bound() {
        let stats = theta_orbit_stats(&harmonic(), 16, 40, 101);
        let bound = 2.0 * std::f64::consts::PI / 6f64.sqrt();
        assert!(stats.max_norm > 0.1, "sampling should move the diagonal");
        assert!(stats.max_norm <= bound + 1e-6, "{} > {}", stats.max_norm, bound);
        match stats.class {
            CocycleClass::Coboundary { .. } => {}
            other => panic!("expected coboundary, got {other:?}"),
        }
        let apriori = stats.apriori_bound.unwrap();
        assert!((apriori - bound).abs() < 1e-9);
        // determinism
        let again = theta_orbit_stats(&harmonic(), 16, 40, 101);
        assert_eq!(again.max_norm, stats.max_norm);
    }

    #[test]
    fn orbit_stats_alternating_diagonal_grows_with_the_window() {
        let alt = DiagonalSequence::from_tail(Tail::alternating(rat(1)));
        let m8 = theta_orbit_stats(&alt, 8, 25, 9).max_norm;
        let m32 = theta_orbit_stats(&alt, 32, 25, 9).max_norm;
        let m128 = theta_orbit_stats(&alt, 128, 25, 9).max_norm;
        assert!(m8 < m32 && m32 < m128, "{m8} {m32} {m128}");
        assert_eq!(theta_orbit_stats(&alt, 8, 25, 9).class, CocycleClass::Nontrivial);
        assert_eq!(theta_orbit_stats(&alt, 8, 25, 9).apriori_bound, None);
    }

    #[test]
    fn restricted_group_membership_by_block_tags() {
        let two_inf = [
            EigenBlock {
                value: 1.0,
                dim: BlockDim::Infinite,
            },
            EigenBlock {
                value: -1.0,
                dim: BlockDim::Infinite,
            },
        ];
        let diag_only = vec![
            vec![BlockTag::Identity, BlockTag::Zero],
            vec![BlockTag::Zero, BlockTag::Identity],
        ];
        assert!(u_res_contains(&diag_only, &two_inf).unwrap());
        let hs_off = vec![
            vec![BlockTag::Identity, BlockTag::Hs],
            vec![BlockTag::Hs, BlockTag::Identity],
        ];
        assert!(u_res_contains(&hs_off, &two_inf).unwrap());
        let non_hs = vec![
            vec![BlockTag::Identity, BlockTag::NonHs],
            vec![BlockTag::NonHs, BlockTag::Identity],
        ];
        assert!(!u_res_contains(&non_hs, &two_inf).unwrap());
        // identity between two infinite blocks is not Hilbert–Schmidt
        let id_off = vec![
            vec![BlockTag::Zero, BlockTag::Identity],
            vec![BlockTag::Identity, BlockTag::Zero],
        ];
        assert!(!u_res_contains(&id_off, &two_inf).unwrap());
        let single = [EigenBlock {
            value: 0.0,
            dim: BlockDim::Infinite,
        }];
        assert!(u_res_contains(&[vec![BlockTag::NonHs]], &single).unwrap());
        // finite blocks are always Hilbert–Schmidt
        let mixed = [
            EigenBlock {
                value: 1.0,
                dim: BlockDim::Finite(2),
            },
            EigenBlock {
                value: 2.0,
                dim: BlockDim::Infinite,
            },
        ];
        let window_off = vec![
            vec![BlockTag::Identity, BlockTag::Hs],
            vec![BlockTag::Window(id(2)), BlockTag::Identity],
        ];
        assert!(u_res_contains(&window_off, &mixed).unwrap());
    }

    #[test]
    fn malformed_partitions_are_rejected() {
        let two_fin = [
            EigenBlock {
                value: 1.0,
                dim: BlockDim::Finite(2),
            },
            EigenBlock {
                value: 2.0,
                dim: BlockDim::Finite(3),
            },
        ];
        let non_hs = vec![
            vec![BlockTag::Identity, BlockTag::NonHs],
            vec![BlockTag::Zero, BlockTag::Identity],
        ];
        assert!(matches!(
            u_res_contains(&non_hs, &two_fin),
            Err(CocycleError::MalformedPartition(_))
        ));
        let id_off = vec![
            vec![BlockTag::Zero, BlockTag::Identity],
            vec![BlockTag::Zero, BlockTag::Zero],
        ];
        assert!(matches!(
            u_res_contains(&id_off, &two_fin),
            Err(CocycleError::MalformedPartition(_))
        ));
        let dup = [
            EigenBlock {
                value: 1.0,
                dim: BlockDim::Infinite,
            },
            EigenBlock {
                value: 1.0,
                dim: BlockDim::Infinite,
            },
        ];
        let ok_tags = vec![
            vec![BlockTag::Identity, BlockTag::Zero],
            vec![BlockTag::Zero, BlockTag::Identity],
        ];
        assert!(matches!(
            u_res_contains(&ok_tags, &dup),
            Err(CocycleError::MalformedPartition(_))
        ));
        assert!(matches!(
            u_res_contains(&[vec![BlockTag::Identity]], &[]),
            Err(CocycleError::MalformedPartition(_))
        ));
        let ragged = vec![vec![BlockTag::Identity], vec![BlockTag::Zero, BlockTag::Identity]];
        let two_inf = [
            EigenBlock {
                value: 1.0,
                dim: BlockDim::Infinite,
            },
            EigenBlock {
                value: 2.0,
                dim: BlockDim::Infinite,
            },
        ];
        assert!(matches!(
            u_res_contains(&ragged, &two_inf),
            Err(CocycleError::MalformedPartition(_))
        ));
    }

    #[test]
    fn one_parameter_equivalence_fixtures() {
        let lin = DiagonalSequence::from_tail(Tail::power(rat(1), rat(1)));
        let shifted = DiagonalSequence::from_tail(
            Tail::power(rat(1), rat(1)).add(&Tail::constant(rat(7))),
        );
        assert!(one_param_equivalent(&lin, &shifted).unwrap());
        let perturbed = DiagonalSequence::from_tail(
            Tail::power(rat(1), rat(1)).add(&Tail::power(rat(1), rat(-1))),
        );
        assert!(one_param_equivalent(&lin, &perturbed).unwrap());
        let doubled = DiagonalSequence::from_tail(Tail::power(rat(2), rat(1)));
        assert!(!one_param_equivalent(&lin, &doubled).unwrap());
        // sequences with irrational law values at probed points stay undecided
        let sqrt = DiagonalSequence::from_tail(Tail::power(rat(1), Rat::new(1, 2)));
        let with_table =
            DiagonalSequence::new(BTreeMap::from([(2, rat(1))]), Tail::zero()).unwrap();
        assert_eq!(
            one_param_equivalent(&sqrt, &with_table),
            Err(CocycleError::UndecidableTail)
        );
    }

    #[test]
    fn wire_formats_round_trip() {
        let class = cocycle_class(&harmonic());
        let s = serde_json::to_string(&class).unwrap();
        assert!(s.starts_with(r#"{"verdict":"coboundary","shift":0.0,"tail_sum":"#), "{s}");
        assert_eq!(
            serde_json::to_string(&CocycleClass::Zero).unwrap(),
            r#"{"verdict":"zero"}"#
        );
        let tag: BlockTag = serde_json::from_str(r#"{"tag":"nonhs"}"#).unwrap();
        assert_eq!(tag, BlockTag::NonHs);
        let win: BlockTag =
            serde_json::from_str(r#"{"tag":"window","re":[[1,0],[0,1]]}"#).unwrap();
        match &win {
            BlockTag::Window(m) => assert!(linalg::hs_norm(&(m - id(2))) < 1e-14),
            other => panic!("expected window, got {other:?}"),
        }
        let back = serde_json::to_string(&win).unwrap();
        let again: BlockTag = serde_json::from_str(&back).unwrap();
        assert_eq!(again, win);
        let blk: EigenBlock = serde_json::from_str(r#"{"value":2.5,"dim":"inf"}"#).unwrap();
        assert_eq!(blk.dim, BlockDim::Infinite);
        let fin: EigenBlock = serde_json::from_str(r#"{"value":1.0,"dim":4}"#).unwrap();
        assert_eq!(fin.dim, BlockDim::Finite(4));
    }
}
