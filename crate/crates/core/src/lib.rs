//! Finite-time blow-up solutions of the "bad" Boussinesq equation
//! u_tt = u_xx + (u²)_xx + u_xxxx, constructed from explicit scattering data
//! through the Neumann-series solution of a reduced Riemann–Hilbert problem.
//!
//! Pipeline: a [`scattering::ScatteringProfile`] fixes the reflection data;
//! [`contour`] discretizes the two rays carrying the integral equation;
//! [`kernel`] assembles the Nyström operator at fixed (x, t); [`series`] sums
//! the Neumann series for m⁽¹⁾ and its mixed derivatives through the exact
//! multiplier recursion; [`solution`] turns those into u and its derivatives;
//! [`verify`] checks the PDE residual, blow-up rates and symmetries.

pub mod cache;
pub mod contour;
pub mod error;
pub mod gamma;
pub mod kernel;
pub mod linalg;
pub mod par;
pub mod quad;
pub mod scattering;
pub mod series;
pub mod solution;
pub mod verify;

pub use error::{Error, Result};
pub use par::{parallel_enabled, set_parallel};
pub use scattering::{LogFamily, ProfileKind, ScatteringProfile};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
