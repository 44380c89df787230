//! Approximate discrete transparent boundary conditions (ADTBCs) for the
//! implicit five-point Crank-Nicolson-type scheme of the rod
//! transverse-vibration equation
//!
//!   ρ u_tt − R²ρ u_ttxx + ER² u_xxxx = 0,   x ∈ [−L/2, L/2],
//!
//! plus the machinery to exercise them: time integration under ADTBC or
//! classical homogeneous boundary conditions, an extended-segment reference
//! solution, error/energy diagnostics, and an (h, τ) stability scanner.
//!
//! The derivation pipeline is `params` → `series` → `adtbc`; simulation and
//! measurement live in `stepper`, `diagnostics` and `stability`; `config`
//! and `export` define the file formats the CLI exposes.

pub mod adtbc;
pub mod config;
pub mod diagnostics;
pub mod export;
pub mod linalg;
pub mod mp;
pub mod params;
pub mod series;
pub mod stability;
pub mod stepper;

use thiserror::Error as ThisError;

#[derive(Debug, ThisError)]
pub enum Error {
    /// Invalid physical/grid/degree parameter (config-level mistakes).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Config file could not be parsed.
    #[error("config error: {0}")]
    Config(String),

    /// The (ν, μ) regime does not admit the series derivation (|ε| ≥ 1).
    #[error("derivation regime violated: |epsilon| >= 1 (epsilon = {epsilon})")]
    Regime { epsilon: f64 },

    /// Series-layer precondition failure (degeneracy, conjugacy, ...).
    #[error("series error: {0}")]
    Series(String),

    /// The ADTBC linear system is singular or hopelessly ill-conditioned:
    /// no boundary operator exists for this degree set.
    #[error("singular ADTBC system for degrees {degrees}: {reason}")]
    SingularSystem { degrees: String, reason: String },

    /// The time integration produced non-finite values.
    #[error("solution diverged at step {step}")]
    Divergence { step: usize },

    /// Mismatched grids in a comparison.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// Not enough data for a fit or scan.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
