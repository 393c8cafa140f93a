//! Multivariate quasi-power theorem and Berry–Esseen machinery.
//!
//! This crate is `no_std` (it needs `alloc`). It contains the numerical and
//! combinatorial core:
//!
//! - [`partition`]: set partitions, Möbius coefficients, Stirling and Fubini
//!   numbers, smoothing constants.
//! - [`lambda`]: the partition-indexed operator Λ on functions of several
//!   complex variables.
//! - [`series`]: truncated multivariate power series over pluggable
//!   coefficient rings, moment polynomials.
//! - [`distribution`]: exact finite lattice distributions and Gaussian
//!   references, CDFs, characteristic functions, Kolmogorov distance.
//! - [`quadrature`]: tensor-product Gauss–Legendre rules on boxes.
//! - [`berry_esseen`]: the right-hand side of the multivariate Berry–Esseen
//!   inequality, itemized.
//! - [`quasi_power`]: quasi-power families, convergence studies, moment checks.
//! - [`grammar`]: exact word counts of context-free languages by tracked
//!   terminal counts.
//! - [`dissection`]: dissections of convex polygons via a functional equation.
//!
//! File formats, IO and the command-line driver live in the `quasipower` crate.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

pub mod berry_esseen;
pub mod dissection;
pub mod distribution;
pub mod error;
pub mod grammar;
pub mod lambda;
pub mod partition;
pub mod quadrature;
pub mod quasi_power;
pub mod series;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type Complex = num_complex::Complex64;
