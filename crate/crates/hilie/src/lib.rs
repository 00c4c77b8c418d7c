//! Desk-scale computational toolkit for Hilbert–Lie algebras `u₂(H)` over a
//! countable index set: exact root-system/Weyl-orbit combinatorics on one side,
//! floating-point operator numerics on truncation windows on the other.

pub mod characters;
pub mod cocycles;
pub mod covariance;
pub mod hull;
pub mod linalg;
pub mod ops;
pub mod rootdata;
pub mod seq;
pub mod spectral;
pub mod weights;
