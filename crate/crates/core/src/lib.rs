//! Weighted Doppler transforms of planar covector fields along general
//! ODE-generated curve families.
//!
//! The toolkit operates on a disk `M` embedded in a slightly larger disk `M1`.
//! Curves are traced from the inflow boundary of `M1` by a generator
//! `(G, lambda)`; a weight `w(x, xi)` multiplies the integrand. The forward
//! map sends a covector field `f` (or a pair `[f, phi]`) to its curve
//! integrals over a sampled fan of entry points and directions. On top of the
//! forward map the crate provides the measure-weighted adjoint, the normal
//! operator, the solenoidal (Hodge) decomposition, elliptic-condition
//! diagnostics for the weight, null-space and stability analysis of the
//! discretized operator, and conjugate-gradient reconstruction of the
//! solenoidal part.
//!
//! The crate is `no_std` (with `alloc`); all IO, file formats and the
//! command-line runner live in the companion `vectomo-cli` crate.
//!
//! Modules mirror the pipeline:
//!
//! - [`geometry`]: domains, curve generators, RK4 tracing with boundary exit
//!   detection, inflow fans, simplicity diagnostics.
//! - [`fields`]: grid-sampled scalar/covector fields, divergence/gradient,
//!   the Dirichlet Poisson solve, solenoidal decomposition.
//! - [`weights`]: weight rules (constant, attenuated, constructed from a
//!   covector, tabulated), flow log-derivatives, the elliptic-condition
//!   margin.
//! - [`transform`]: sinograms, the ray operator with exact discrete adjoint,
//!   dense assembly, the principal-symbol ellipticity certificate.
//! - [`reconstruct`]: SVD-based spectral reports, stability constants,
//!   projected CG reconstruction, perturbation studies.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod fields;
pub mod geometry;
pub mod linalg;
pub mod reconstruct;
pub mod transform;
pub mod vec2;
pub mod weights;

pub(crate) mod math;

pub use vec2::Vec2;
