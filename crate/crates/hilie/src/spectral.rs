//! Constructive spectral approximation: Weyl–von Neumann decomposition of
//! banded self-adjoint operators into diag + small Hilbert–Schmidt residual,
//! Trotter product convergence (e^{tA/n}e^{tB/n})ⁿ → e^{t(A+B)}, and the
//! perturbed one-parameter group δ(t) = lim (exp(tx/n)·α_{t/n})ⁿ with its
//! semidirect-product defect.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::linalg::{self, CMat};
use crate::seq::DiagonalSequence;

pub type RMat = DMatrix<f64>;

#[derive(Debug, Error, PartialEq)]
pub enum SpectralError {
    #[error("operator is not hermitian")]
    NotHermitian,
    #[error("slicing too coarse: achieved residual {achieved}")]
    SliceTooCoarse { achieved: f64 },
    #[error("map is not a derivation of the matrix algebra")]
    NotDerivation,
    #[error("bad parameter: {0}")]
    BadParameter(String),
}

/// Banded self-adjoint operator: closed-form band sequences b₀ (diagonal),
/// b₁, …, b_k, with entry (i, i+m) = (i+m, i) = b_m(i) for 1-based i.
#[derive(Debug, Clone)]
pub struct BandedOp {
    bands: Vec<DiagonalSequence>,
    hermitian: bool,
}

impl BandedOp {
    pub fn new(bands: Vec<DiagonalSequence>, hermitian: bool) -> Result<BandedOp, SpectralError> {
        if bands.is_empty() {
            return Err(SpectralError::BadParameter(
                "need at least the diagonal band".into(),
            ));
        }
        Ok(BandedOp { bands, hermitian })
    }

    pub fn bandwidth(&self) -> usize {
        self.bands.len() - 1
    }

    /// Real symmetric window compression to n×n.
    pub fn materialize(&self, n: usize) -> RMat {
        let mut a = RMat::zeros(n, n);
        for (m, band) in self.bands.iter().enumerate() {
            for i in 0..n.saturating_sub(m) {
                let v = band.value(i as u64 + 1);
                a[(i, i + m)] = v;
                a[(i + m, i)] = v;
            }
        }
        a
    }
}

/// Diagonalization data from the slicing construction: Rayleigh quotients,
/// the achieved inner-window residual, the orthonormal basis (columns), and
/// the slice width the a-priori rule would have demanded for the target.
#[derive(Debug, Clone)]
pub struct WvnReport {
    pub diag: Vec<f64>,
    pub residual_hs: f64,
    pub basis: RMat,
    pub apriori_delta: f64,
}

/// Slice the window spectrum into width-δ intervals, pick in-slice
/// representatives by maximal overlap with the earliest unclaimed standard
/// basis vectors, and diagonalize in that basis.  The residual ‖A − BDBᵀ‖₂
/// is measured on the inner half-window [N/4, 3N/4) to avoid boundary
/// artifacts; exceeding the target is a contract violation.
pub fn wvn_decompose(
    a: &BandedOp,
    window: usize,
    delta: f64,
    eps: f64,
) -> Result<WvnReport, SpectralError> {
    if !a.hermitian {
        return Err(SpectralError::NotHermitian);
    }
    if window < 16 {
        return Err(SpectralError::BadParameter("window must be ≥ 16".into()));
    }
    if delta <= 0.0 || eps <= 0.0 {
        return Err(SpectralError::BadParameter(
            "slice width and target must be positive".into(),
        ));
    }
    let n = window;
    let mat = a.materialize(n);
    let se = mat.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].partial_cmp(&se.eigenvalues[j]).unwrap());
    let lambda_min = se.eigenvalues[order[0]];

    // group eigenpairs into width-δ slices, ascending
    let mut slices: Vec<Vec<usize>> = Vec::new();
    let mut current_slice = usize::MAX;
    for &i in &order {
        let s = ((se.eigenvalues[i] - lambda_min) / delta).floor() as usize;
        if s != current_slice {
            slices.push(Vec::new());
            current_slice = s;
        }
        slices.last_mut().unwrap().push(i);
    }

    let mut basis = RMat::zeros(n, n);
    let mut claimed = vec![false; n];
    let mut col = 0usize;
    for slice in &slices {
        let dim = slice.len();
        let mut selected: Vec<DVector<f64>> = Vec::with_capacity(dim);
        for _ in 0..dim {
            // Gram–Schmidt candidate P_s e_j for each unclaimed j, keeping
            // the one with the largest remainder; ties go to the smallest j.
            let mut best: Option<(usize, DVector<f64>, f64)> = None;
            for j in 0..n {
                if claimed[j] {
                    continue;
                }
                let mut cand = DVector::<f64>::zeros(n);
                for &i in slice {
                    let v = se.eigenvectors.column(i);
                    cand += v * v[j];
                }
                for u in &selected {
                    let overlap = u.dot(&cand);
                    cand -= u * overlap;
                }
                let norm = cand.norm();
                if best.as_ref().is_none_or(|(_, _, bn)| norm > *bn) {
                    best = Some((j, cand, norm));
                }
            }
            match best {
                Some((j, cand, norm)) if norm > 1e-10 => {
                    claimed[j] = true;
                    selected.push(cand / norm);
                }
                _ => {
                    // every unclaimed projection is numerically gone; fall
                    // back to the slice's own eigenvectors
                    let mut cand: DVector<f64> =
                        se.eigenvectors.column(slice[selected.len()]).into_owned();
                    for u in &selected {
                        let overlap = u.dot(&cand);
                        cand -= u * overlap;
                    }
                    let norm = cand.norm();
                    selected.push(cand / norm);
                }
            }
        }
        for v in selected {
            basis.set_column(col, &v);
            col += 1;
        }
    }

    let diag: Vec<f64> = (0..n)
        .map(|i| {
            let b = basis.column(i);
            (b.transpose() * &mat * b)[(0, 0)]
        })
        .collect();
    let approx = &basis * RMat::from_diagonal(&DVector::from_vec(diag.clone())) * basis.transpose();
    let resid = &mat - approx;
    let lo = n / 4;
    let hi = 3 * n / 4;
    let inner = resid.view((lo, lo), (hi - lo, hi - lo));
    let residual_hs = inner.norm();
    let apriori_delta = eps / (4.0 * ((hi - lo) as f64).sqrt());
    if residual_hs > eps {
        return Err(SpectralError::SliceTooCoarse {
            achieved: residual_hs,
        });
    }
    Ok(WvnReport {
        diag,
        residual_hs,
        basis,
        apriori_delta,
    })
}

/// Trotter approximant and its distance to the scaling-and-squaring oracle.
#[derive(Debug, Clone)]
pub struct TrotterReport {
    pub approx: CMat,
    pub error: f64,
}

/// (e^{tA/n} e^{tB/n})ⁿ against e^{t(A+B)} in Hilbert–Schmidt norm.
pub fn trotter_limit(a: &CMat, b: &CMat, t: f64, n: u32) -> Result<TrotterReport, SpectralError> {
    if a.nrows() != a.ncols() || a.shape() != b.shape() {
        return Err(SpectralError::BadParameter(
            "need square matrices of equal size".into(),
        ));
    }
    if n == 0 {
        return Err(SpectralError::BadParameter("need n ≥ 1".into()));
    }
    let step = linalg::expm(&a.map(|z| z * (t / n as f64)))
        * linalg::expm(&b.map(|z| z * (t / n as f64)));
    let mut approx = linalg::id(a.nrows());
    for _ in 0..n {
        approx = &approx * &step;
    }
    let oracle = linalg::expm(&(a + b).map(|z| z * t));
    let error = linalg::hs_norm(&(&approx - oracle));
    Ok(TrotterReport { approx, error })
}

/// Column-major vectorization.
fn vec_of(m: &CMat) -> DVector<Complex64> {
    DVector::from_column_slice(m.as_slice())
}

fn mat_of(v: &DVector<Complex64>, m: usize) -> CMat {
    CMat::from_column_slice(m, m, v.as_slice())
}

/// The inner derivation ad y as an operator on vectorized matrices:
/// vec([y, X]) = (1 ⊗ y − yᵀ ⊗ 1)·vec(X).
pub fn ad_operator(y: &CMat) -> CMat {
    let m = y.nrows();
    let eye = linalg::id(m);
    eye.kronecker(y) - y.transpose().kronecker(&eye)
}

fn adjoint_action(p: &CMat) -> CMat {
    let p_inv = p.clone().try_inverse().expect("group element invertible");
    p_inv.transpose().kronecker(p)
}

/// δ(t) approximant and the defect of Ad(δ(t))∘α_t against e^{t(ad x + D)}
/// as operators on the algebra.
#[derive(Debug, Clone)]
pub struct PerturbedFlow {
    pub delta_g: CMat,
    pub defect: f64,
}

/// Perturb the flow α_t = e^{tD} by the algebra element x through the
/// Trotter-type product δ_n(t) = Π_{k<n} α_{kt/n}(exp(tx/n)).  D enters as
/// an m²×m² operator on vectorized matrices and must be an inner derivation:
/// Leibniz is probed on sampled pairs, then y is reconstructed from the
/// matrix units and ad y compared against D.
pub fn perturbed_flow(
    d_alpha: &CMat,
    x: &CMat,
    t: f64,
    n: u32,
) -> Result<PerturbedFlow, SpectralError> {
    let m = x.nrows();
    if x.ncols() != m || d_alpha.nrows() != m * m || d_alpha.ncols() != m * m {
        return Err(SpectralError::BadParameter(
            "derivation must act on vectorized m×m matrices".into(),
        ));
    }
    if n == 0 {
        return Err(SpectralError::BadParameter("need n ≥ 1".into()));
    }
    let scale = 1.0 + linalg::hs_norm(d_alpha);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
    for _ in 0..8 {
        let p = linalg::ginibre(m, &mut rng);
        let q = linalg::ginibre(m, &mut rng);
        let bracket = &p * &q - &q * &p;
        let dp = mat_of(&(d_alpha * vec_of(&p)), m);
        let dq = mat_of(&(d_alpha * vec_of(&q)), m);
        let lhs = mat_of(&(d_alpha * vec_of(&bracket)), m);
        let rhs = &dp * &q - &q * &dp + &p * &dq - &dq * &p;
        if linalg::hs_norm(&(lhs - rhs)) > 1e-8 * scale {
            return Err(SpectralError::NotDerivation);
        }
    }
    // reconstruct y with D = ad y from the matrix units E_{i1}
    let mut y = CMat::zeros(m, m);
    for i in 0..m {
        let mut e_i1 = CMat::zeros(m, m);
        e_i1[(i, 0)] = Complex64::new(1.0, 0.0);
        let d_ei1 = mat_of(&(d_alpha * vec_of(&e_i1)), m);
        let mut e_1i = CMat::zeros(m, m);
        e_1i[(0, i)] = Complex64::new(1.0, 0.0);
        y += d_ei1 * e_1i;
    }
    if linalg::hs_norm(&(ad_operator(&y) - d_alpha)) > 1e-8 * scale {
        return Err(SpectralError::NotDerivation);
    }

    let tau = t / n as f64;
    let flow_step = linalg::expm(&d_alpha.map(|z| z * tau));
    let x_step = linalg::expm(&x.map(|z| z * tau));
    let mut delta = x_step.clone();
    let mut moved = vec_of(&x_step);
    for _ in 1..n {
        moved = &flow_step * moved;
        delta = &delta * mat_of(&moved, m);
    }

    let beta = linalg::expm(&((ad_operator(x) + d_alpha).map(|z| z * t)));
    let alpha_t = linalg::expm(&d_alpha.map(|z| z * t));
    let defect = linalg::hs_norm(&(adjoint_action(&delta) * alpha_t - beta));
    Ok(PerturbedFlow {
        delta_g: delta,
        defect,
    })
}
