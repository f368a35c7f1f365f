//! Matrix-polynomial and rational-matrix algebra with z-transform expansion.
//!
//! A [`MatrixPoly`] is a polynomial `sum_k z^k A_k` with real matrix
//! coefficients; a [`RationalMatrix`] is a matrix fraction
//! `D1(z)^-1 N(z) D2(z)^-1` with regular square denominators.  These carry the
//! characteristic matrix `[z^2 Ahat - z I + A]`, the transfer matrices `F[z]`
//! and `G[z]`, and the exogenous resolvent `[I - R z^-1]^-1`.
//!
//! Determinants and adjugates of matrix polynomials are computed by evaluation
//! at scaled roots of unity and inverse DFT interpolation; eigenvalues through
//! a first-companion linearization and a shift-invert generalized eigensolver;
//! properness by large-radius sampling with growth-exponent fitting.  All
//! arithmetic is floating-point; complex values appear only internally.

mod eig;
mod poly;
mod rational;

pub use eig::{left_nullvector, polyeig, EigenSet};
pub use poly::MatrixPoly;
pub use rational::{ImpulseSeq, Properness, RationalMatrix};
