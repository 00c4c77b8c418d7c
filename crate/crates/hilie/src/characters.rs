//! The three-point factor measure ν = ((1+b²)δ₀ + bδ₁ + bδ₋₁)/(1+b)², its
//! circle density p_b(z) = (1+bz)(1+bz⁻¹)/(1+b)², Voiculescu-type characters
//! χ(g) = det(p_b(g)) on window unitaries, exact product-atom decay, and
//! positive-definiteness evidence via sampled Gram matrices.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::ser::SerializeStruct;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{self, CMat};
use crate::ops::{OpTail, TruncOp};
use crate::seq::{rat_to_f64, Rat};

#[derive(Debug, Error, PartialEq)]
pub enum CharacterError {
    #[error("argument is not on the unit circle")]
    NotOnCircle,
    #[error("operator is not unitary with identity tail")]
    NotUnitary,
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("internal cross-check failed: {0}")]
    CrossCheck(String),
}

fn check_b(b: Rat) -> Result<(), CharacterError> {
    if b.is_negative() {
        return Err(CharacterError::BadParameter(
            "measure parameter must be nonnegative".into(),
        ));
    }
    Ok(())
}

fn big(r: Rat) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

/// The measure ((1+b²)δ₀ + bδ₁ + bδ₋₁)/(1+b)² on {−1, 0, 1}, with exact
/// atom masses.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorMeasure {
    pub b: Rat,
    pub minus: Rat,
    pub zero: Rat,
    pub plus: Rat,
}

impl FactorMeasure {
    pub fn new(b: Rat) -> Result<FactorMeasure, CharacterError> {
        check_b(b)?;
        let one = Rat::one();
        let denom = (one + b) * (one + b);
        Ok(FactorMeasure {
            b,
            minus: b / denom,
            zero: (one + b * b) / denom,
            plus: b / denom,
        })
    }

    pub fn total_mass(&self) -> Rat {
        self.minus + self.zero + self.plus
    }
}

impl Serialize for FactorMeasure {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("FactorMeasure", 4)?;
        st.serialize_field("b", &rat_to_f64(self.b))?;
        st.serialize_field("minus", &rat_to_f64(self.minus))?;
        st.serialize_field("zero", &rat_to_f64(self.zero))?;
        st.serialize_field("plus", &rat_to_f64(self.plus))?;
        st.end()
    }
}

/// The density p_b(z) = (1+bz)(1+bz⁻¹)/(1+b)² on the unit circle, evaluated
/// as ((1+b)² + 2b(Re z − 1))/(1+b)² so that p_b(1) = 1 exactly.
pub fn p_b(b: Rat, z: Complex64) -> Result<f64, CharacterError> {
    check_b(b)?;
    if (z.norm() - 1.0).abs() > 1e-12 {
        return Err(CharacterError::NotOnCircle);
    }
    let bf = rat_to_f64(b);
    let denom = (1.0 + bf) * (1.0 + bf);
    Ok((denom + 2.0 * bf * (z.re - 1.0)) / denom)
}

/// Largest atom of the n-fold product measure: ((1+b²)/(1+b)²)ⁿ exactly.
/// Witnesses that the product has no atoms in the limit.
pub fn max_atom_mass(b: Rat, n: u32) -> Result<BigRational, CharacterError> {
    check_b(b)?;
    if n == 0 {
        return Err(CharacterError::BadParameter("need n ≥ 1".into()));
    }
    let one = BigRational::one();
    let bb = big(b);
    let factor = (&one + &bb * &bb) / ((&one + &bb) * (&one + &bb));
    let mut out = BigRational::one();
    for _ in 0..n {
        out *= &factor;
    }
    Ok(out)
}

/// Max over sampled angles of |Σ_k ν({k})·e^{ikθ} − p_b(e^{iθ})|: the
/// measure's Fourier transform must reproduce the density.
pub fn fourier_check(b: Rat, sample_count: u32) -> Result<f64, CharacterError> {
    if sample_count == 0 {
        return Err(CharacterError::BadParameter("need samples ≥ 1".into()));
    }
    let nu = FactorMeasure::new(b)?;
    let (minus, zero, plus) = (
        rat_to_f64(nu.minus),
        rat_to_f64(nu.zero),
        rat_to_f64(nu.plus),
    );
    let mut worst: f64 = 0.0;
    for t in 0..sample_count {
        let theta = 2.0 * std::f64::consts::PI * t as f64 / sample_count as f64;
        let z = Complex64::from_polar(1.0, theta);
        let transform = zero + (plus + minus) * theta.cos();
        let err = (transform - p_b(b, z)?).abs();
        worst = worst.max(err);
    }
    Ok(worst)
}

fn identity_tail_unitary(g: &TruncOp) -> Result<(), CharacterError> {
    let ok_tail = match g.tail {
        OpTail::Scalar(s) => (s - Complex64::new(1.0, 0.0)).norm() <= 1e-10,
        _ => false,
    };
    if !ok_tail || !linalg::is_unitary(&g.window, 1e-10) {
        return Err(CharacterError::NotUnitary);
    }
    Ok(())
}

/// χ(g) = Π p_b(z_i) over the window spectrum of a unitary with identity
/// tail (law positions contribute p_b(1) = 1).  The determinant form
/// det((1+b)⁻²(1+bg)(1+bg⁻¹)) and the trace-class identity
/// (1+b)⁻²(1+bg)(1+bg⁻¹) = 1 + b(1+b)⁻²·g*(g−1)² are verified as
/// cross-checks to 10⁻¹⁰.
pub fn voiculescu_char(b: Rat, g: &TruncOp) -> Result<f64, CharacterError> {
    check_b(b)?;
    identity_tail_unitary(g)?;
    let w = &g.window;
    let n = g.window_size();
    let spectrum = linalg::unitary_eigen(w).ok_or(CharacterError::NotUnitary)?;
    let mut chi = 1.0;
    for (z, _) in &spectrum {
        chi *= p_b(b, z / z.norm())?;
    }
    let bf = rat_to_f64(b);
    let denom = (1.0 + bf) * (1.0 + bf);
    let plus_bg = linalg::id(n) + w.map(|z| z * bf);
    let plus_bg_inv = linalg::id(n) + w.adjoint().map(|z| z * bf);
    let det = (plus_bg.determinant() * plus_bg_inv.determinant() / denom.powi(n as i32)).re;
    if (det - chi).abs() > 1e-10 * (1.0 + chi.abs()) {
        return Err(CharacterError::CrossCheck(format!(
            "spectral product {chi} vs determinant {det}"
        )));
    }
    let x = w - linalg::id(n);
    let correction = (w.adjoint() * &x * &x).map(|z| z * (bf / denom));
    let residual =
        linalg::hs_norm(&((&plus_bg * &plus_bg_inv).map(|z| z / denom) - linalg::id(n) - correction));
    if residual > 1e-10 {
        return Err(CharacterError::CrossCheck(format!(
            "trace-class identity residual {residual}"
        )));
    }
    Ok(chi)
}

/// Minimum eigenvalue of the sampled Gram matrix [χ(g_i⁻¹g_j)] over Haar
/// window unitaries; positive definiteness predicts ≥ −10⁻⁸.
pub fn pd_gram_check(
    b: Rat,
    group_dim: usize,
    sample_count: usize,
    seed: u64,
) -> Result<f64, CharacterError> {
    check_b(b)?;
    if group_dim == 0 || group_dim > 16 {
        return Err(CharacterError::BadParameter(
            "group dimension must be in 1..=16".into(),
        ));
    }
    if sample_count == 0 || sample_count > 64 {
        return Err(CharacterError::BadParameter(
            "sample count must be in 1..=64".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<CMat> = (0..sample_count)
        .map(|_| linalg::haar_unitary(group_dim, &mut rng))
        .collect();
    let mut gram = DMatrix::<f64>::zeros(sample_count, sample_count);
    for i in 0..sample_count {
        for j in i..sample_count {
            let gij = samples[i].adjoint() * &samples[j];
            let op = TruncOp::new(gij, OpTail::Scalar(Complex64::new(1.0, 0.0)), "g")
                .expect("square window");
            let chi = voiculescu_char(b, &op)?;
            gram[(i, j)] = chi;
            gram[(j, i)] = chi;
        }
    }
    let eigen = gram.symmetric_eigen();
    Ok(eigen
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min))
}
