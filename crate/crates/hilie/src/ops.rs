//! Truncated operators with symbolic diagonal tails.
//!
//! A [`TruncOp`] is a dense complex window on the first N basis vectors plus
//! a closed-form continuation: zero, a scalar c·1, or i·(d_j) for a
//! [`DiagonalSequence`] d.  Schatten norms split into an exact window part
//! and a symbolic tail sum, so finiteness of ‖·‖₂ and ‖·‖₁ is decided, not
//! estimated.  The module also carries the Monte-Carlo estimator for the
//! best constant in ‖[x,y]‖₂ ≤ c·‖x‖₂‖y‖₂ over each compact real form,
//! together with the exact extremal pair that attains it.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::linalg::{self, c, cr, CMat};
use crate::rootdata::RootSystemKind;
use crate::seq::{DiagonalSequence, SumValue};

/// Continuation of an operator beyond its explicit window.
#[derive(Clone, Debug, PartialEq)]
pub enum OpTail {
    Zero,
    /// c·identity on every index beyond the window.
    Scalar(Complex64),
    /// diag(i·d_j) beyond the window — the skew-hermitian diagonal model.
    Diag(DiagonalSequence),
}

/// Dense window plus symbolic tail.
#[derive(Clone, Debug)]
pub struct TruncOp {
    pub window: CMat,
    pub tail: OpTail,
    pub basis_label: String,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum OpsError {
    #[error("window must be square, got {0}×{1}")]
    NotSquare(usize, usize),
    #[error("tail product undefined for this tail combination")]
    IncompatibleTail,
    #[error("a required norm is infinite")]
    NormUndefined,
    #[error("input list is empty")]
    EmptyInput,
    #[error("coefficients and weights must be strictly positive")]
    NonPositiveInput,
}

/// A norm that may be symbolically infinite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NormValue {
    Finite(f64),
    Infinite,
}

impl NormValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            NormValue::Finite(v) => Some(v),
            NormValue::Infinite => None,
        }
    }
}

impl std::fmt::Display for NormValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NormValue::Finite(v) => write!(f, "{v:.17e}"),
            NormValue::Infinite => f.write_str("infinite"),
        }
    }
}

impl Serialize for NormValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            NormValue::Finite(v) => s.serialize_f64(*v),
            NormValue::Infinite => s.serialize_str("infinite"),
        }
    }
}

/// A trace that may fail to converge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TraceValue {
    Finite(Complex64),
    Divergent,
}

impl TruncOp {
    pub fn new(window: CMat, tail: OpTail, basis_label: impl Into<String>) -> Result<Self, OpsError> {
        if !window.is_square() {
            return Err(OpsError::NotSquare(window.nrows(), window.ncols()));
        }
        Ok(TruncOp {
            window,
            tail,
            basis_label: basis_label.into(),
        })
    }

    pub fn window_size(&self) -> usize {
        self.window.nrows()
    }

    /// Value of the diagonal continuation at index j (1-based, j > window).
    fn tail_value(&self, j: u64) -> Complex64 {
        match &self.tail {
            OpTail::Zero => Complex64::ZERO,
            OpTail::Scalar(cv) => *cv,
            OpTail::Diag(d) => Complex64::new(0.0, d.value(j)),
        }
    }

    /// Re-expresses the same operator on a larger window; tail values move
    /// into the dense block.
    pub fn pad_to(&self, n: usize) -> TruncOp {
        let old = self.window_size();
        assert!(n >= old, "pad_to cannot shrink the window");
        if n == old {
            return self.clone();
        }
        let mut w = CMat::zeros(n, n);
        w.view_mut((0, 0), (old, old)).copy_from(&self.window);
        for i in old..n {
            w[(i, i)] = self.tail_value((i + 1) as u64);
        }
        TruncOp {
            window: w,
            tail: self.tail.clone(),
            basis_label: self.basis_label.clone(),
        }
    }

    /// Whether x* = −x holds on the window and the tail is compatible with
    /// skew-hermitian continuation.
    pub fn is_skew_hermitian(&self, tol: f64) -> bool {
        let window_ok = linalg::hs_norm(&(&self.window + self.window.adjoint())) <= tol;
        let tail_ok = match &self.tail {
            OpTail::Zero | OpTail::Diag(_) => true,
            OpTail::Scalar(cv) => cv.re.abs() <= tol,
        };
        window_ok && tail_ok
    }
}

/// ‖x‖₂ over window and tail; infinite ⟺ the tail is not square-summable.
pub fn hs_norm(x: &TruncOp) -> NormValue {
    let m = x.window_size() as u64 + 1;
    let win: f64 = x.window.iter().map(|z| z.norm_sqr()).sum();
    let tail = match &x.tail {
        OpTail::Zero => 0.0,
        OpTail::Scalar(cv) => {
            if cv.norm() == 0.0 {
                0.0
            } else {
                return NormValue::Infinite;
            }
        }
        OpTail::Diag(d) => match d.sum_sq_from(m, num_rational::Ratio::new(0, 1)) {
            SumValue::Finite(s) => s,
            SumValue::Divergent => return NormValue::Infinite,
        },
    };
    NormValue::Finite((win + tail).sqrt())
}

/// Operator norm: max of the window's largest singular value and the tail
/// supremum; infinite ⟺ the tail diagonal is unbounded.
pub fn op_norm(x: &TruncOp) -> NormValue {
    let m = x.window_size() as u64 + 1;
    let win = linalg::op_norm(&x.window);
    let tail = match &x.tail {
        OpTail::Zero => 0.0,
        OpTail::Scalar(cv) => cv.norm(),
        OpTail::Diag(d) => match d.sup_abs_from(m) {
            Some(s) => s,
            None => return NormValue::Infinite,
        },
    };
    NormValue::Finite(win.max(tail))
}

/// Trace norm ‖x‖₁; infinite ⟺ the tail is not absolutely summable.
pub fn trace_norm(x: &TruncOp) -> NormValue {
    let m = x.window_size() as u64 + 1;
    let win = linalg::trace_norm(&x.window);
    let tail = match &x.tail {
        OpTail::Zero => 0.0,
        OpTail::Scalar(cv) => {
            if cv.norm() == 0.0 {
                0.0
            } else {
                return NormValue::Infinite;
            }
        }
        OpTail::Diag(d) => match d.abs_sum_from(m) {
            SumValue::Finite(s) => s,
            SumValue::Divergent => return NormValue::Infinite,
        },
    };
    NormValue::Finite(win + tail)
}

/// tr(x) over window and tail when the tail sum converges absolutely.
pub fn trace(x: &TruncOp) -> TraceValue {
    let m = x.window_size() as u64 + 1;
    let win = linalg::trace(&x.window);
    match &x.tail {
        OpTail::Zero => TraceValue::Finite(win),
        OpTail::Scalar(cv) => {
            if cv.norm() == 0.0 {
                TraceValue::Finite(win)
            } else {
                TraceValue::Divergent
            }
        }
        OpTail::Diag(d) => match (d.abs_sum_from(m), d.sum_from(m)) {
            (SumValue::Finite(_), SumValue::Finite(s)) => {
                TraceValue::Finite(win + Complex64::new(0.0, s))
            }
            _ => TraceValue::Divergent,
        },
    }
}

/// [x, y] = xy − yx.  Windows are padded to a common size; beyond it both
/// operators are diagonal, so the commutator tail is exactly zero.
pub fn commutator(x: &TruncOp, y: &TruncOp) -> Result<TruncOp, OpsError> {
    let n = x.window_size().max(y.window_size());
    let xp = x.pad_to(n);
    let yp = y.pad_to(n);
    let w = &xp.window * &yp.window - &yp.window * &xp.window;
    TruncOp::new(w, OpTail::Zero, format!("[{},{}]", x.basis_label, y.basis_label))
}

/// Tail product magnitudes: Σ|xⱼyⱼ|², Σ|xⱼyⱼ|, sup|xⱼyⱼ| from index m.
fn tail_product_sums(
    x: &TruncOp,
    y: &TruncOp,
    m: u64,
) -> Result<(SumValue, SumValue, Option<f64>), OpsError> {
    let zero = num_rational::Ratio::new(0, 1);
    match (&x.tail, &y.tail) {
        (OpTail::Zero, _) | (_, OpTail::Zero) => {
            Ok((SumValue::Finite(0.0), SumValue::Finite(0.0), Some(0.0)))
        }
        (OpTail::Scalar(a), OpTail::Scalar(b)) => {
            let mag = (a * b).norm();
            if mag == 0.0 {
                Ok((SumValue::Finite(0.0), SumValue::Finite(0.0), Some(0.0)))
            } else {
                Ok((SumValue::Divergent, SumValue::Divergent, Some(mag)))
            }
        }
        (OpTail::Scalar(a), OpTail::Diag(d)) | (OpTail::Diag(d), OpTail::Scalar(a)) => {
            let s = a.norm();
            let sq = match d.sum_sq_from(m, zero) {
                SumValue::Finite(v) => SumValue::Finite(s * s * v),
                SumValue::Divergent if s == 0.0 => SumValue::Finite(0.0),
                SumValue::Divergent => SumValue::Divergent,
            };
            let ab = match d.abs_sum_from(m) {
                SumValue::Finite(v) => SumValue::Finite(s * v),
                SumValue::Divergent if s == 0.0 => SumValue::Finite(0.0),
                SumValue::Divergent => SumValue::Divergent,
            };
            let sup = d.sup_abs_from(m).map(|v| s * v);
            Ok((sq, ab, sup))
        }
        (OpTail::Diag(d), OpTail::Diag(e)) => {
            let t = d.tail().mul(e.tail());
            let mut sq = t.mul(&t).sum_from(m);
            let mut ab = t.abs_sum_from(m);
            let mut sup = t.sup_abs_from(m);
            // correct law values to table values at exceptional positions
            let positions: Vec<u64> = d
                .table()
                .keys()
                .chain(e.table().keys())
                .copied()
                .filter(|&j| j >= m)
                .collect();
            for j in positions {
                let actual = d.value(j) * e.value(j);
                let law = t.value(j);
                if let SumValue::Finite(v) = sq {
                    sq = SumValue::Finite(v + actual * actual - law * law);
                }
                if let SumValue::Finite(v) = ab {
                    ab = SumValue::Finite(v + actual.abs() - law.abs());
                }
                if let Some(v) = sup {
                    sup = Some(v.max(actual.abs()));
                }
            }
            Ok((sq, ab, sup))
        }
    }
}

/// One inequality lhs ≤ rhs with its slack.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct IneqSlack {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

impl IneqSlack {
    fn new(lhs: f64, rhs: f64) -> IneqSlack {
        IneqSlack {
            lhs,
            rhs,
            slack: rhs - lhs,
        }
    }
}

/// Slack report for the three Schatten-class inequalities.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SchattenReport {
    /// ‖xy‖₂ ≤ ‖x‖·‖y‖₂
    pub hs_submult: IneqSlack,
    /// ‖x‖₂ ≤ ‖x‖₁
    pub hs_le_trace: IneqSlack,
    /// ‖xy‖₁ ≤ ‖x‖·‖y‖₁
    pub trace_submult: IneqSlack,
}

/// Evaluates the three inequalities; errors if any required norm is
/// infinite.
pub fn check_schatten(x: &TruncOp, y: &TruncOp) -> Result<SchattenReport, OpsError> {
    let n = x.window_size().max(y.window_size());
    let xp = x.pad_to(n);
    let yp = y.pad_to(n);
    let need = |v: NormValue| v.finite().ok_or(OpsError::NormUndefined);
    let x_op = need(op_norm(&xp))?;
    let x_hs = need(hs_norm(&xp))?;
    let x_tr = need(trace_norm(&xp))?;
    let y_hs = need(hs_norm(&yp))?;
    let y_tr = need(trace_norm(&yp))?;

    let prod_window = &xp.window * &yp.window;
    let (tail_sq, tail_abs, _) = tail_product_sums(&xp, &yp, n as u64 + 1)?;
    let tail_sq = tail_sq.value().ok_or(OpsError::NormUndefined)?;
    let tail_abs = tail_abs.value().ok_or(OpsError::NormUndefined)?;
    let prod_hs = (linalg::hs_norm(&prod_window).powi(2) + tail_sq).sqrt();
    let prod_tr = linalg::trace_norm(&prod_window) + tail_abs;

    Ok(SchattenReport {
        hs_submult: IneqSlack::new(prod_hs, x_op * y_hs),
        hs_le_trace: IneqSlack::new(x_hs, x_tr),
        trace_submult: IneqSlack::new(prod_tr, x_op * y_tr),
    })
}

/// Monte-Carlo report for the bracket-norm constant of one real form.
#[derive(Clone, Debug, Serialize)]
pub struct BracketNormReport {
    pub kind: RootSystemKind,
    pub window: u64,
    pub trials: u64,
    pub sampled_max: f64,
    pub exact_bound: f64,
    pub witness_ratio: f64,
}

/// Norm on the kind's real form (quaternionic matrices carry half the
/// squared complex Frobenius norm).
fn form_norm(kind: RootSystemKind, m: &CMat) -> f64 {
    match kind {
        RootSystemKind::C => linalg::hs_norm(m) / 2.0f64.sqrt(),
        _ => linalg::hs_norm(m),
    }
}

fn bracket_ratio(kind: RootSystemKind, x: &CMat, y: &CMat) -> f64 {
    let num = form_norm(kind, &linalg::commutator(x, y));
    let den = form_norm(kind, x) * form_norm(kind, y);
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

fn sample_real_form<R: Rng>(kind: RootSystemKind, n: usize, rng: &mut R) -> CMat {
    match kind {
        RootSystemKind::A => {
            let z = linalg::ginibre(n, rng);
            (&z - z.adjoint()).map(|w| w * 0.5)
        }
        RootSystemKind::B | RootSystemKind::D => {
            let g = DMatrix::<f64>::from_fn(n, n, |_, _| StandardNormal.sample(rng));
            let skew = (&g - g.transpose()).map(|v| v * 0.5);
            skew.map(cr)
        }
        RootSystemKind::C => {
            let z1 = linalg::ginibre(n, rng);
            let a = (&z1 - z1.adjoint()).map(|w| w * 0.5);
            let z2 = linalg::ginibre(n, rng);
            let b = (&z2 + z2.transpose()).map(|w| w * 0.5);
            assemble_quaternionic(&a, &b)
        }
    }
}

/// [[A, B], [−B̄, Ā]] — the complex 2n×2n picture of a quaternionic matrix.
fn assemble_quaternionic(a: &CMat, b: &CMat) -> CMat {
    let n = a.nrows();
    let mut m = CMat::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(a);
    m.view_mut((0, n), (n, n)).copy_from(b);
    m.view_mut((n, 0), (n, n)).copy_from(&b.map(|z| -z.conj()));
    m.view_mut((n, n), (n, n)).copy_from(&a.map(|z| z.conj()));
    m
}

/// The extremal pair x = i·α∨, y = x_α − x_α* for a long root α, embedded
/// in the window.
fn witness_pair(kind: RootSystemKind, n: usize) -> (CMat, CMat) {
    match kind {
        RootSystemKind::A => {
            // α = ε₁−ε₂: x = i(E₁₁−E₂₂), y = E₁₂−E₂₁
            let mut x = CMat::zeros(n, n);
            x[(0, 0)] = c(0.0, 1.0);
            x[(1, 1)] = c(0.0, -1.0);
            let mut y = CMat::zeros(n, n);
            y[(0, 1)] = cr(1.0);
            y[(1, 0)] = cr(-1.0);
            (x, y)
        }
        RootSystemKind::B | RootSystemKind::D => {
            // α = ε₁−ε₂ in the rotation-block picture on span{e₁..e₄}
            let mut x = CMat::zeros(n, n);
            x[(0, 1)] = cr(-1.0);
            x[(1, 0)] = cr(1.0);
            x[(2, 3)] = cr(1.0);
            x[(3, 2)] = cr(-1.0);
            let mut y = CMat::zeros(n, n);
            y[(0, 2)] = cr(-1.0);
            y[(1, 3)] = cr(-1.0);
            y[(2, 0)] = cr(1.0);
            y[(3, 1)] = cr(1.0);
            (x, y)
        }
        RootSystemKind::C => {
            // α = 2ε₁: x = diag(i, 0…; −i, 0…), y = off-diagonal E₁₁ blocks
            let half = n;
            let mut a = CMat::zeros(half, half);
            a[(0, 0)] = c(0.0, 1.0);
            let x = assemble_quaternionic(&a, &CMat::zeros(half, half));
            let mut b = CMat::zeros(half, half);
            b[(0, 0)] = cr(1.0);
            let y = assemble_quaternionic(&CMat::zeros(half, half), &b);
            (x, y)
        }
    }
}

fn env_threads() -> usize {
    std::env::var("HILIE_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&t| t >= 1)
        .unwrap_or(1)
        .min(16)
}

/// Monte-Carlo estimate of sup ‖[x,y]‖/(‖x‖‖y‖) over the real form of the
/// given kind, on an N-dimensional window, seeded for reproducibility.
///
/// The sampled maximum never exceeds the exact constant; the witness pair is
/// evaluated separately and attains it.  Trials are partitioned into
/// fixed-size chunks with per-chunk derived seeds and merged by max, so the
/// result does not depend on the worker count.
pub fn estimate_bracket_norm(
    kind: RootSystemKind,
    n: usize,
    trials: u64,
    seed: u64,
) -> BracketNormReport {
    assert!(n >= 4, "bracket-norm window must be at least 4");
    const CHUNK: u64 = 64;
    let n_chunks = trials.div_ceil(CHUNK);
    let chunk_max = |chunk: u64| -> f64 {
        let mut rng =
            ChaCha8Rng::seed_from_u64(seed ^ chunk.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let in_chunk = CHUNK.min(trials - chunk * CHUNK);
        let mut best = 0.0f64;
        for _ in 0..in_chunk {
            let x = sample_real_form(kind, n, &mut rng);
            let y = sample_real_form(kind, n, &mut rng);
            best = best.max(bracket_ratio(kind, &x, &y));
        }
        best
    };
    let workers = env_threads().min(n_chunks.max(1) as usize);
    let sampled_max = if workers <= 1 {
        (0..n_chunks).map(chunk_max).fold(0.0f64, f64::max)
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    let chunk_max = &chunk_max;
                    scope.spawn(move || {
                        let mut best = 0.0f64;
                        let mut chunk = w as u64;
                        while chunk < n_chunks {
                            best = best.max(chunk_max(chunk));
                            chunk += workers as u64;
                        }
                        best
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("worker panicked"))
                .fold(0.0f64, f64::max)
        })
    };
    let (wx, wy) = witness_pair(kind, n);
    BracketNormReport {
        kind,
        window: n as u64,
        trials,
        sampled_max,
        exact_bound: crate::rootdata::cg_exact(kind),
        witness_ratio: bracket_ratio(kind, &wx, &wy),
    }
}

/// Bound report for weighted families: finite ⟺ inf wⱼ > 0, and then the
/// derived constant is sup cⱼ/√(inf wⱼ).
#[derive(Clone, Debug, Serialize)]
pub struct InfSumBound {
    pub finite: bool,
    pub sup_c: NormValue,
    pub inf_w: f64,
    pub derived_bound: NormValue,
}

/// Evaluates the boundedness criterion for a weighted family given finitely
/// many explicit pairs (cⱼ, wⱼ) and optional tail laws for both sequences.
pub fn weighted_sum_bracket_bound(
    pairs: &[(f64, f64)],
    tails: Option<(&DiagonalSequence, &DiagonalSequence)>,
) -> Result<InfSumBound, OpsError> {
    if pairs.is_empty() && tails.is_none() {
        return Err(OpsError::EmptyInput);
    }
    if pairs.iter().any(|&(cj, wj)| cj <= 0.0 || wj <= 0.0) {
        return Err(OpsError::NonPositiveInput);
    }

    let mut sup_c = NormValue::Finite(pairs.iter().map(|p| p.0).fold(0.0f64, f64::max));
    let mut inf_w = pairs.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let mut inf_w_positive = true;

    if let Some((c_tail, w_tail)) = tails {
        match (sup_c, c_tail.supremum()) {
            (NormValue::Finite(s), Some(t)) => sup_c = NormValue::Finite(s.max(t)),
            _ => sup_c = NormValue::Infinite,
        }
        match w_tail.infimum() {
            Some(t) => inf_w = inf_w.min(t),
            None => inf_w = f64::NEG_INFINITY,
        }
        inf_w_positive = w_tail.infimum_positive();
    }
    let finite = inf_w_positive && inf_w > 0.0;
    let derived_bound = match (finite, sup_c) {
        (true, NormValue::Finite(s)) => NormValue::Finite(s / inf_w.sqrt()),
        _ => NormValue::Infinite,
    };
    Ok(InfSumBound {
        finite,
        sup_c,
        inf_w,
        derived_bound,
    })
}

/// Wire format: complex entries split into real and imaginary parts.
#[derive(Serialize, Deserialize)]
struct TruncOpJson {
    n: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
    tail: TailJson,
    #[serde(default)]
    basis_label: String,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum TailJson {
    Zero,
    Scalar { value: ComplexJson },
    Diag { value: DiagonalSequence },
}

#[derive(Serialize, Deserialize)]
struct ComplexJson {
    re: f64,
    im: f64,
}

impl Serialize for TruncOp {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let n = self.window_size();
        let mut re = vec![vec![0.0; n]; n];
        let mut im = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                re[i][j] = self.window[(i, j)].re;
                im[i][j] = self.window[(i, j)].im;
            }
        }
        let tail = match &self.tail {
            OpTail::Zero => TailJson::Zero,
            OpTail::Scalar(cv) => TailJson::Scalar {
                value: ComplexJson {
                    re: cv.re,
                    im: cv.im,
                },
            },
            OpTail::Diag(d) => TailJson::Diag { value: d.clone() },
        };
        TruncOpJson {
            n,
            re,
            im,
            tail,
            basis_label: self.basis_label.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TruncOp {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let raw = TruncOpJson::deserialize(d)?;
        let n = raw.n;
        if raw.re.len() != n || raw.im.len() != n {
            return Err(D::Error::custom("row count must equal n"));
        }
        let mut window = CMat::zeros(n, n);
        for i in 0..n {
            if raw.re[i].len() != n || raw.im[i].len() != n {
                return Err(D::Error::custom("column count must equal n"));
            }
            for j in 0..n {
                window[(i, j)] = Complex64::new(raw.re[i][j], raw.im[i][j]);
            }
        }
        let tail = match raw.tail {
            TailJson::Zero => OpTail::Zero,
            TailJson::Scalar { value } => OpTail::Scalar(Complex64::new(value.re, value.im)),
            TailJson::Diag { value } => OpTail::Diag(value),
        };
        TruncOp::new(window, tail, raw.basis_label).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rootdata::cg_exact;
    use crate::seq::{Rat, Tail};

    fn zero_tail_op(w: CMat) -> TruncOp {
        TruncOp::new(w, OpTail::Zero, "test").unwrap()
    }

    fn harmonic_tail_op(n: usize) -> TruncOp {
        let d = DiagonalSequence::from_tail(Tail::power(Rat::new(1, 1), Rat::new(-1, 1)));
        TruncOp::new(CMat::zeros(n, n), OpTail::Diag(d), "harmonic").unwrap()
    }

    #[test]
    fn hs_norm_examples() {
        let eye = zero_tail_op(linalg::id(4));
        assert_eq!(hs_norm(&eye), NormValue::Finite(2.0));

        let d = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.0, 1.0), c(0.0, 2.0)]));
        let x = zero_tail_op(d);
        match hs_norm(&x) {
            NormValue::Finite(v) => assert!((v - 5.0f64.sqrt()).abs() < 1e-14),
            _ => panic!("expected finite"),
        }

        let scalar = TruncOp::new(linalg::id(2), OpTail::Scalar(c(0.0, 1.0)), "s").unwrap();
        assert_eq!(hs_norm(&scalar), NormValue::Infinite);
    }

    #[test]
    fn hs_norm_with_harmonic_tail_matches_series() {
        // window 3 of zeros + tail i/j from j=4: ‖·‖₂² = ζ(2) − 1 − 1/4 − 1/9
        let x = harmonic_tail_op(3);
        let expect = (std::f64::consts::PI.powi(2) / 6.0 - 1.0 - 0.25 - 1.0 / 9.0).sqrt();
        match hs_norm(&x) {
            NormValue::Finite(v) => assert!((v - expect).abs() < 1e-12),
            _ => panic!("expected finite"),
        }
    }

    #[test]
    fn trace_norm_infinite_for_harmonic_tail() {
        let x = harmonic_tail_op(3);
        assert_eq!(trace_norm(&x), NormValue::Infinite);
        // but a 1/j² tail is trace class
        let d = DiagonalSequence::from_tail(Tail::power(Rat::new(1, 1), Rat::new(-2, 1)));
        let y = TruncOp::new(CMat::zeros(2, 2), OpTail::Diag(d), "sq").unwrap();
        match trace_norm(&y) {
            NormValue::Finite(v) => {
                let expect = std::f64::consts::PI.powi(2) / 6.0 - 1.0 - 0.25;
                assert!((v - expect).abs() < 1e-12);
            }
            _ => panic!("expected finite"),
        }
    }

    #[test]
    fn commutator_of_rotation_pair() {
        // x=E₁₂−E₂₁, y=i(E₁₂+E₂₁) → [x,y]=2i(E₁₁−E₂₂)
        let x = zero_tail_op(CMat::from_row_slice(
            2,
            2,
            &[cr(0.0), cr(1.0), cr(-1.0), cr(0.0)],
        ));
        let y = zero_tail_op(CMat::from_row_slice(
            2,
            2,
            &[cr(0.0), c(0.0, 1.0), c(0.0, 1.0), cr(0.0)],
        ));
        let z = commutator(&x, &y).unwrap();
        let expect = CMat::from_row_slice(2, 2, &[c(0.0, 2.0), cr(0.0), cr(0.0), c(0.0, -2.0)]);
        assert!(linalg::hs_norm(&(&z.window - expect)) < 1e-14);
        assert_eq!(z.tail, OpTail::Zero);
    }

    #[test]
    fn commutator_with_itself_vanishes() {
        let x = harmonic_tail_op(4);
        let z = commutator(&x, &x).unwrap();
        assert!(linalg::hs_norm(&z.window) < 1e-14);
    }

    #[test]
    fn commutator_of_diag_tails_uses_padded_window() {
        let d1 = DiagonalSequence::from_tail(Tail::power(Rat::new(1, 1), Rat::new(-1, 1)));
        let d2 = DiagonalSequence::from_tail(Tail::constant(Rat::new(1, 1)));
        let mut w = CMat::zeros(2, 2);
        w[(0, 1)] = cr(1.0);
        let x = TruncOp::new(w, OpTail::Diag(d1), "x").unwrap();
        let y = TruncOp::new(CMat::zeros(4, 4), OpTail::Diag(d2), "y").unwrap();
        let z = commutator(&x, &y).unwrap();
        assert_eq!(z.window_size(), 4);
        assert_eq!(z.tail, OpTail::Zero);
        // x padded to 4 has i/3, i/4 on the diagonal; a diagonal y = i·1
        // commutes with everything diagonal, and with the E₁₂ entry gives
        // i·(1−1) = 0 there as well.
        assert!(linalg::hs_norm(&z.window) < 1e-14);
    }

    #[test]
    fn schatten_slacks_nonnegative_on_rank_one() {
        let e11 = {
            let mut w = CMat::zeros(2, 2);
            w[(0, 0)] = cr(1.0);
            zero_tail_op(w)
        };
        let report = check_schatten(&e11, &e11).unwrap();
        assert!(report.hs_submult.slack.abs() < 1e-12);
        assert!(report.hs_le_trace.slack.abs() < 1e-12);
        assert!(report.trace_submult.slack.abs() < 1e-12);
    }

    #[test]
    fn schatten_with_diag_tails() {
        let d1 = DiagonalSequence::from_tail(Tail::power(Rat::new(1, 1), Rat::new(-2, 1)));
        let d2 = DiagonalSequence::from_tail(Tail::power(Rat::new(1, 1), Rat::new(-3, 1)));
        let x = TruncOp::new(linalg::id(3), OpTail::Diag(d1), "x").unwrap();
        let y = TruncOp::new(CMat::zeros(3, 3), OpTail::Diag(d2), "y").unwrap();
        let report = check_schatten(&x, &y).unwrap();
        assert!(report.hs_submult.slack >= -1e-10, "{report:?}");
        assert!(report.hs_le_trace.slack >= -1e-10);
        assert!(report.trace_submult.slack >= -1e-10);
    }

    #[test]
    fn schatten_rejects_infinite_norms() {
        let x = harmonic_tail_op(2); // trace norm infinite
        let y = zero_tail_op(linalg::id(2));
        assert!(matches!(
            check_schatten(&x, &y),
            Err(OpsError::NormUndefined)
        ));
    }

    #[test]
    fn witness_ratios_attain_cg() {
        for kind in RootSystemKind::ALL {
            let report = estimate_bracket_norm(kind, 4, 8, 1);
            assert!(
                (report.witness_ratio - report.exact_bound).abs() < 1e-12,
                "kind {kind}: witness {} vs exact {}",
                report.witness_ratio,
                report.exact_bound
            );
        }
    }

    #[test]
    fn sampled_max_bounded_by_cg() {
        for kind in RootSystemKind::ALL {
            let report = estimate_bracket_norm(kind, 5, 200, 42);
            assert!(
                report.sampled_max <= cg_exact(kind) + 1e-9,
                "kind {kind}: sampled {} exceeds {}",
                report.sampled_max,
                cg_exact(kind)
            );
            assert!(report.sampled_max > 0.0);
        }
    }

    #[test]
    fn sampling_is_seed_deterministic_and_thread_independent() {
        let a = estimate_bracket_norm(RootSystemKind::A, 4, 130, 7);
        let b = estimate_bracket_norm(RootSystemKind::A, 4, 130, 7);
        assert_eq!(a.sampled_max, b.sampled_max);
        std::env::set_var("HILIE_THREADS", "4");
        let c = estimate_bracket_norm(RootSystemKind::A, 4, 130, 7);
        std::env::remove_var("HILIE_THREADS");
        assert_eq!(a.sampled_max, c.sampled_max);
    }

    #[test]
    fn infsum_bound_examples() {
        // constant coefficients √2 over unit weights
        let pairs: Vec<(f64, f64)> = (0..5).map(|_| (2.0f64.sqrt(), 1.0)).collect();
        let b = weighted_sum_bracket_bound(&pairs, None).unwrap();
        assert!(b.finite);
        match b.derived_bound {
            NormValue::Finite(v) => assert!((v - 2.0f64.sqrt()).abs() < 1e-14),
            _ => panic!(),
        }

        // c ≡ 2, w ≡ 4 → bound 1
        let pairs2 = vec![(2.0, 4.0); 3];
        let b2 = weighted_sum_bracket_bound(&pairs2, None).unwrap();
        match b2.derived_bound {
            NormValue::Finite(v) => assert!((v - 1.0).abs() < 1e-14),
            _ => panic!(),
        }

        // w_j = 1/j tail → infimum 0 → not finite
        let w = DiagonalSequence::from_tail(Tail::power(Rat::new(1, 1), Rat::new(-1, 1)));
        let cseq = DiagonalSequence::constant(Rat::new(1, 1));
        let b3 = weighted_sum_bracket_bound(&[], Some((&cseq, &w))).unwrap();
        assert!(!b3.finite);
        assert_eq!(b3.derived_bound, NormValue::Infinite);

        assert!(matches!(
            weighted_sum_bracket_bound(&[], None),
            Err(OpsError::EmptyInput)
        ));
        assert!(matches!(
            weighted_sum_bracket_bound(&[(1.0, 0.0)], None),
            Err(OpsError::NonPositiveInput)
        ));
    }

    #[test]
    fn hs_norm_stable_under_padding() {
        let x = harmonic_tail_op(3);
        let v1 = hs_norm(&x).finite().unwrap();
        let v2 = hs_norm(&x.pad_to(10)).finite().unwrap();
        assert!((v1 - v2).abs() < 1e-10);
        assert!(v2 >= v1 - 1e-10);
    }

    #[test]
    fn trunc_op_json_round_trip() {
        let d = DiagonalSequence::from_tail(Tail::power(Rat::new(1, 1), Rat::new(-1, 1)));
        let mut w = CMat::zeros(2, 2);
        w[(0, 1)] = c(1.5, -0.5);
        let x = TruncOp::new(w, OpTail::Diag(d), "demo").unwrap();
        let s = serde_json::to_string(&x).unwrap();
        let back: TruncOp = serde_json::from_str(&s).unwrap();
        assert_eq!(back.window, x.window);
        assert_eq!(back.tail, x.tail);
        assert_eq!(back.basis_label, "demo");

        let zero_json = r#"{"n":1,"re":[[0.0]],"im":[[1.0]],"tail":{"kind":"zero"}}"#;
        let z: TruncOp = serde_json::from_str(zero_json).unwrap();
        assert_eq!(z.window[(0, 0)], c(0.0, 1.0));
    }

    #[test]
    fn skew_hermitian_detection() {
        let mut w = CMat::zeros(2, 2);
        w[(0, 1)] = c(1.0, 2.0);
        w[(1, 0)] = c(-1.0, 2.0);
        let d = DiagonalSequence::from_tail(Tail::power(Rat::new(1, 1), Rat::new(-1, 1)));
        let x = TruncOp::new(w.clone(), OpTail::Diag(d), "x").unwrap();
        assert!(x.is_skew_hermitian(1e-12));
        let bad = TruncOp::new(w, OpTail::Scalar(cr(1.0)), "bad").unwrap();
        assert!(!bad.is_skew_hermitian(1e-12));
    }
}
