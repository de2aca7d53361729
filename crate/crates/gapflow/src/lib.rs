// SPDX-License-Identifier: MIT OR Apache-2.0

//! Finite-gap integration and spectral diagnostics for the cubic
//! defocusing nonlinear Schrödinger equation
//!
//! ```text
//! i u_t = -u_xx + 2 |u|² u
//! ```
//!
//! and its Dirac (Zakharov–Shabat) Lax operator.
//!
//! The crate is organised in layers:
//!
//! * [`spectral_domain`]: gap sets, Dirichlet divisors, phase coordinates
//!   and summability/thickness diagnostics of the spectrum.
//! * [`reflectionless`]: resolvent product formula, Schur and m-functions,
//!   trace-formula reconstruction and Riccati residuals.
//! * [`dubrovin`]: rotation, translation and time flows on divisors.
//! * [`abel`]: normalised differentials, the Abel map and its frequencies.
//! * [`direct_spectral`]: transfer matrices, Lyapunov exponent, rotation
//!   number, gap detection and Weyl disks for quasiperiodic potentials.
//! * [`subordinacy`]: partial norms and the two-sided Schur estimate.
//! * [`moser_poschel`]: one averaging step at a gap edge.
//! * [`nls_sim`]: split-step evolution and trajectory comparison.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod quad;
mod ode;

pub mod spectral_domain;
pub mod reflectionless;
pub mod dubrovin;
pub mod abel;
pub mod direct_spectral;
pub mod subordinacy;
pub mod moser_poschel;
pub mod nls_sim;

pub use error::{Error, Result};
pub use num_complex::Complex64;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/gaps.md")]
    mod gaps {}
    #[doc = include_str!("../../../book/src/reconstruction.md")]
    mod reconstruction {}
    #[doc = include_str!("../../../book/src/flows.md")]
    mod flows {}
    #[doc = include_str!("../../../book/src/abel.md")]
    mod abel {}
    #[doc = include_str!("../../../book/src/direct-spectral.md")]
    mod direct_spectral {}
    #[doc = include_str!("../../../book/src/subordinacy.md")]
    mod subordinacy {}
    #[doc = include_str!("../../../book/src/averaging.md")]
    mod averaging {}
    #[doc = include_str!("../../../book/src/nls.md")]
    mod nls {}
    #[doc = include_str!("../../../book/src/craig.md")]
    mod craig {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
