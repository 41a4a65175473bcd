//! Attractor-dimension bounds for Allen-Cahn type equations
//!
//! ```text
//! phi_t - nu Delta phi - V(x) phi + f(phi) = 0   in Omega,   phi = 0 on the boundary
//! ```
//!
//! with the singular potentials `V = delta/|x|^2` and `V = delta/d(x)^2`.
//!
//! * [`geometry`]: discretized domains, volume, moment of inertia, distance field.
//! * [`spectral`]: discrete Schrödinger operators, low spectra, eigenvalue-sum
//!   checks, Hardy quotients and Weyl fits.
//! * [`bounds`]: closed-form constants, thresholds and dimension bounds.
//! * [`dynamics`]: IMEX time stepping, tangent bundles and volume growth.

pub mod bounds;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod spectral;

pub use error::{Error, Result};

/// First line of every CSV file written by this crate.
pub const CSV_SCHEMA: &str = "# schema=1";

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/spectra.md")]
    mod spectra {}
    #[doc = include_str!("../../../book/src/bounds.md")]
    mod bounds {}
    #[doc = include_str!("../../../book/src/dynamics.md")]
    mod dynamics {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/caveats.md")]
    mod caveats {}
}
