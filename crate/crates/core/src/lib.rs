//! Numerical laboratory for neutral dissipative germs of (C^2, 0) and neutral
//! germs of (C, 0).
//!
//! The crate is `no_std` (with `alloc`). It covers the arithmetic of the
//! rotation angle, fixed-point normalization and classification, cone-field
//! certificates of partial hyperbolicity, polynomial jets of center and strong
//! stable manifolds, semi-parabolic petals, and the approximation of hedgehogs
//! as limits of maximal invariant petals along continued-fraction convergents.
//!
//! IO, configuration and rendering live in the `hedgehog-lab` crate.

#![cfg_attr(not(any(test, feature = "std")), no_std)]
// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod arithmetic;
pub mod conefield;
pub mod dd;
pub mod error;
pub mod geometry;
pub mod germs;
pub mod hedgehog;
pub mod linalg;
pub mod manifolds;
pub mod par;
pub mod petals;
pub mod poly;

pub use error::{Error, ErrorFamily, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

/// A point of C^2. One-dimensional germs use the first coordinate and keep
/// the second at zero.
pub type Point = [C64; 2];

/// Euclidean norm of a point of C^2.
pub fn norm(p: &Point) -> f64 {
    libm::hypot(p[0].norm(), p[1].norm())
}
