//! Plane-wave Galerkin discretizations of periodic Schrödinger operators.
//!
//! The crate computes energy bands of `½(−i∇ + k)² + V` acting on
//! lattice-periodic functions, using three discretizations of each Bloch
//! fiber:
//!
//! * a uniform plane-wave basis `{G : ½|G|² < Ec}` shared by every `k`,
//! * a `k`-dependent basis `{G : ½|k + G|² < Ec}`,
//! * the `k`-dependent basis with the kinetic symbol replaced by
//!   `Ec·𝒢(|k + G| / √(2Ec))` for a blow-up function `𝒢`, which yields
//!   bands that are both periodic and `Cᵐ` away from crossings.
//!
//! Everything here is `no_std` + `alloc`. IO, file formats, threading and
//! the command line live in the `bandlab` crate; per-k parallelism is
//! injected through [`exec::Executor`].

#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::too_many_arguments)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod blowup;
pub mod digest;
pub mod error;
pub mod exec;
pub mod fiber;
pub mod lattice;
pub mod linalg;
pub mod observables;
pub mod potential;
pub mod spectra;

mod num;

pub use blowup::{BlowupFunction, BlowupSpec};
pub use error::{Error, Result};
pub use exec::{Executor, Serial};
pub use fiber::{FiberMatrix, Scheme, SchemeTag};
pub use lattice::{BasisMode, GIndex, KPointKind, KPointSet, Lattice, Vector};
pub use num_complex::Complex64;
pub use observables::{FermiLevel, GapInfo, Quadrature};
pub use potential::{FourierPotential, PowerLawSynth, SobolevReport};
pub use spectra::{BandStructure, EigenSolution};
