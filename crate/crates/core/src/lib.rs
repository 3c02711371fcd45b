//! Low-rank fitting of a complex matrix `A` by a product `B C^H`, where the
//! left factor `B` is parameterized by a small set of real parameters.
//!
//! The linear factor `C` is eliminated in closed form, which reduces the fit
//! to minimizing
//!
//! ```text
//! f(sigma) = sqrt( ||A||_F^2 - ||A^H Q(B(sigma))||_F^2 )
//! ```
//!
//! over the structure parameters `sigma`, where `Q(B)` is an orthonormal basis
//! of the column space of `B` computed by Modified Gram-Schmidt (MGS).
//!
//! The crate provides:
//!
//! * [`matcore`] — complex dense matrices, MGS orthonormalization, the
//!   projected objective, and recovery of the eliminated factor `C`;
//! * [`adjoint`] — the gradient of `f` over all entries of `B` by four routes:
//!   a memory-efficient reverse sweep over the MGS recurrence (AMGS), the
//!   classical Gram-Schmidt variant (AGS), central finite differences, and a
//!   tiny-scale block-triangular system solve — with flop and memory-word
//!   instrumentation;
//! * [`structure`] — structured parameterizations `B(sigma)` (Kronecker
//!   columns, complex exponentials, free entries) with closed-form adjoints;
//! * [`solve`] — a Broyden quasi-Newton driver over `sigma`;
//! * [`rng`] — a fixed xorshift64* generator for reproducible instances.
//!
//! All numerics are generic over the real scalar type (`f32` or `f64`);
//! matrices hold `num_complex::Complex<T>` entries. The [`Matrix64`] and
//! [`Matrix32`] aliases cover the common cases.

pub mod adjoint;
mod error;
pub mod flops;
pub mod matcore;
pub mod rng;
mod scalar;
pub mod solve;
pub mod structure;

pub use error::{Error, Result};
pub use scalar::{real, Real};

/// Dense complex matrix over `f64` components.
pub type Matrix64 = matcore::DenseMatrix<f64>;
/// Dense complex matrix over `f32` components.
pub type Matrix32 = matcore::DenseMatrix<f32>;
