//! Error type shared across the library.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Evaluation outside the mathematical domain (iterated logs, phases at k = 0, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A constructor or operation received parameters outside its admissible range.
    #[error("parameter error: {0}")]
    Param(String),

    /// An iterative search (bisection, fixed point) failed to converge.
    #[error("convergence error: {0}")]
    Convergence(String),

    /// Evaluation of r-tilde at one of its poles k = ±ω².
    #[error("pole of r~ near k = {re}{im:+}i")]
    Pole { re: f64, im: f64 },

    /// The truncation ordinate or node count required by the requested tolerance
    /// exceeds the grid policy caps (t too close to T for this tolerance).
    #[error("budget error: {0}")]
    Budget(String),

    /// A kernel denominator came too close to zero (query point near the
    /// singular arcs ω²Γ̃ ∪ (ω²Γ̃)⁻¹).
    #[error("singularity: kernel denominator modulus {0:.3e} below guard")]
    Singularity(f64),

    /// The discrete kernel norm estimate exceeded 1/M + 10·tol, signalling a
    /// profile/grid inconsistency.
    #[error("norm bound violation: norm_est = {norm_est:.6e} > 1/M + 10 tol = {limit:.6e}")]
    NormBoundViolation { norm_est: f64, limit: f64 },

    /// Series requested on an operator with norm_est ≥ 1 (cannot occur for
    /// valid profiles).
    #[error("divergence guard: norm_est = {0} >= 1")]
    DivergenceGuard(f64),

    /// A moment integral required at t = T diverges for this profile.
    #[error("integrability error: {0}")]
    Integrability(String),

    /// Requested x outside the validated |x - x0| window.
    #[error("window error: |x - x0| = {0} outside validated window {1}")]
    Window(f64, f64),

    /// Blow-up fit regression quality below threshold.
    #[error("fit error: {0}")]
    Fit(String),

    /// Profile configuration text did not parse against the schema.
    #[error("config error: {0}")]
    Config(String),

    /// A cache file is missing, truncated or inconsistent with its header.
    #[error("cache error: {0}")]
    Cache(String),

    /// The realness invariant |Im| <= 1e-9 (1 + |Re|) failed for a sample.
    #[error("realness violation: Im = {im:.3e} vs Re = {re:.3e} at (x, t) = ({x}, {t})")]
    Realness { im: f64, re: f64, x: f64, t: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
