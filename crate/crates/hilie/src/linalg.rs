//! Dense complex linear algebra: norms, exponentials and eigendata.
//!
//! Conventions: matrices act on column vectors, inner products are conjugate
//! linear in the first slot, ‖·‖₂ is Hilbert–Schmidt (Frobenius), ‖·‖ the
//! operator norm and ‖·‖₁ the trace norm.  Eigenvalues of unitaries are
//! recovered without a nonsymmetric eigensolver by diagonalising a generic
//! real combination of the commuting hermitian parts.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn cr(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn id(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Hilbert–Schmidt norm ‖a‖₂ = (Σ|aᵢⱼ|²)^{1/2}.
pub fn hs_norm(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Operator norm: the largest singular value.
pub fn op_norm(a: &CMat) -> f64 {
    a.clone()
        .singular_values()
        .iter()
        .fold(0.0f64, |m, s| m.max(*s))
}

/// Trace norm ‖a‖₁ = Σ singular values.
pub fn trace_norm(a: &CMat) -> f64 {
    a.clone().singular_values().iter().sum()
}

pub fn trace(a: &CMat) -> Complex64 {
    a.diagonal().iter().sum()
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn is_hermitian(a: &CMat, tol: f64) -> bool {
    a.is_square() && hs_norm(&(a - a.adjoint())) <= tol
}

pub fn is_unitary(a: &CMat, tol: f64) -> bool {
    a.is_square() && hs_norm(&(a * a.adjoint() - id(a.nrows()))) <= tol
}

pub fn is_diagonal(a: &CMat, tol: f64) -> bool {
    let mut off = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            if i != j {
                off += a[(i, j)].norm_sqr();
            }
        }
    }
    off.sqrt() <= tol
}

/// Matrix exponential (scaling and squaring with Padé approximation).
pub fn expm(a: &CMat) -> CMat {
    a.exp()
}

/// Eigendata of a hermitian matrix, ascending by eigenvalue.
///
/// Returns the eigenvalues and the matching orthonormal eigenvectors as
/// matrix columns.
pub fn hermitian_eigen(a: &CMat) -> (Vec<f64>, CMat) {
    let se = a.clone().symmetric_eigen();
    let n = a.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].partial_cmp(&se.eigenvalues[j]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &se.eigenvectors.column(i));
    }
    (values, vectors)
}

/// Eigendata of a unitary matrix, sorted by argument in (−π, π].
///
/// Writes g = C + iS with commuting hermitian C, S and diagonalises a
/// generic combination C + γS; each eigenvector's value is its Rayleigh
/// quotient.  Retries with perturbed γ if a residual check fails (which can
/// happen when two distinct eigenvalues collide under the combination) and
/// returns `None` only if every attempt fails, e.g. for non-normal input.
pub fn unitary_eigen(g: &CMat) -> Option<Vec<(Complex64, CVec)>> {
    let n = g.nrows();
    let scale = op_norm(g).max(1.0);
    let ga = g.adjoint();
    let c_part = (g + &ga).map(|z| z * 0.5);
    let s_part = (g - &ga).map(|z| z * Complex64::new(0.0, -0.5));
    let gammas = [
        0.739_085_133_215_160_7,
        0.414_213_562_373_095_1,
        1.324_717_957_244_746,
        0.567_143_290_409_783_8,
        2.502_907_875_095_892_8,
    ];
    'attempt: for gamma in gammas {
        let mixed = &c_part + s_part.map(|z| z * gamma);
        let se = mixed.symmetric_eigen();
        let mut out: Vec<(Complex64, CVec)> = Vec::with_capacity(n);
        for i in 0..n {
            let v: CVec = se.eigenvectors.column(i).into_owned();
            let lambda = (v.adjoint() * g * &v)[(0, 0)];
            let residual = (g * &v - v.map(|z| z * lambda)).norm();
            if residual > 1e-8 * scale {
                continue 'attempt;
            }
            out.push((lambda, v));
        }
        out.sort_by(|a, b| a.0.arg().partial_cmp(&b.0.arg()).unwrap());
        return Some(out);
    }
    None
}

/// Matrix with independent standard complex gaussian entries.
pub fn ginibre<R: Rng>(n: usize, rng: &mut R) -> CMat {
    CMat::from_fn(n, n, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im) / 2.0f64.sqrt()
    })
}

/// Haar-distributed unitary: QR of a Ginibre matrix with the phase of the
/// R diagonal absorbed into Q.
pub fn haar_unitary<R: Rng>(n: usize, rng: &mut R) -> CMat {
    let z = ginibre(n, rng);
    let qr = z.qr();
    let q = qr.q();
    let r = qr.r();
    let mut u = q;
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..n {
            u[(i, j)] *= phase;
        }
    }
    u
}
