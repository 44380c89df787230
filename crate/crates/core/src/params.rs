//! Physical rod constants, grid steps, and the derived dimensionless
//! parameters and scheme weights.
//!
//! The five-point implicit scheme for
//! `ρ u_tt − R²ρ u_ttxx + ER² u_xxxx = 0` is written in terms of
//! ν = ER²ρ⁻¹·τ²h⁻⁴ and μ = R²h⁻², with weights
//! α = 1 + 3ν + 2μ, β = −2ν − μ, γ = 2μ, δ = −2 − 4μ, σ = ν/2.
//!
//! Everything here is plain `f64`; extended precision starts in the series
//! layer, which consumes these values exactly as given.

use crate::Error;
use serde::{Deserialize, Serialize};

/// Relative tolerance for the "L/h is an integer" check.
pub const GRID_DIVISIBILITY_TOL: f64 = 1e-9;

/// Physical constants of the rod with a circular cross section.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RodModel {
    /// Density ρ, kg·m⁻³.
    pub rho: f64,
    /// Young's modulus E, Pa.
    pub e_modulus: f64,
    /// Cross-section radius R, m.
    pub radius: f64,
    /// Segment length L, m.
    pub length: f64,
}

impl RodModel {
    pub fn new(rho: f64, e_modulus: f64, radius: f64, length: f64) -> Result<Self, Error> {
        for (name, v) in [("rho", rho), ("E", e_modulus), ("R", radius), ("L", length)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be strictly positive and finite, got {v}"
                )));
            }
        }
        let rod = RodModel { rho, e_modulus, radius, length };
        if !(rod.c_coeff().is_finite() && rod.c_coeff() > 0.0) {
            return Err(Error::InvalidParameter("C = ER²/ρ is not finite".into()));
        }
        Ok(rod)
    }

    /// C = ER²/ρ, m⁴·s⁻².
    pub fn c_coeff(&self) -> f64 {
        self.e_modulus * self.radius * self.radius / self.rho
    }

    /// D = R², m².
    pub fn d_coeff(&self) -> f64 {
        self.radius * self.radius
    }
}

/// Uniform space/time grid for the segment `[−L/2, L/2]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Spatial step h, m.
    pub h: f64,
    /// Time step τ, s.
    pub tau: f64,
    /// Integration horizon T, s.
    pub t_end: f64,
    /// Interior interval count N = L/h (the segment has N+1 grid points).
    pub n: usize,
}

impl GridSpec {
    pub fn new(rod: &RodModel, h: f64, tau: f64, t_end: f64) -> Result<Self, Error> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidParameter(format!("h must be positive, got {h}")));
        }
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
        }
        if !(t_end.is_finite() && t_end >= tau) {
            return Err(Error::InvalidParameter(format!(
                "T must satisfy T >= tau, got T = {t_end}, tau = {tau}"
            )));
        }
        let ratio = rod.length / h;
        let n = ratio.round();
        if (ratio - n).abs() > GRID_DIVISIBILITY_TOL * ratio {
            return Err(Error::InvalidParameter(format!(
                "L/h = {ratio} is not an integer within relative tolerance {GRID_DIVISIBILITY_TOL}"
            )));
        }
        let n = n as usize;
        if n < 8 {
            return Err(Error::InvalidParameter(format!(
                "grid too coarse: need at least 8 intervals on the segment, got {n}"
            )));
        }
        Ok(GridSpec { h, tau, t_end, n })
    }

    /// Number of time steps floor(T/τ), with T/τ snapped to the nearest
    /// integer when within relative 1e-9 (so 0.3/1.6e-4 counts as 1875).
    pub fn steps(&self) -> usize {
        let ratio = self.t_end / self.tau;
        let nearest = ratio.round();
        if (ratio - nearest).abs() <= 1e-9 * ratio.max(1.0) {
            nearest as usize
        } else {
            ratio.floor() as usize
        }
    }
}

/// Dimensionless parameters ν, μ and the five scheme weights.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeCoefficients {
    pub nu: f64,
    pub mu: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub sigma: f64,
}

/// ν = ER²ρ⁻¹·τ²h⁻⁴ and μ = R²h⁻².
pub fn dimensionless_params(rod: &RodModel, grid: &GridSpec) -> (f64, f64) {
    let nu = rod.c_coeff() * grid.tau * grid.tau / grid.h.powi(4);
    let mu = rod.d_coeff() / (grid.h * grid.h);
    (nu, mu)
}

/// The five weights of the implicit five-point scheme.
pub fn scheme_coefficients(nu: f64, mu: f64) -> SchemeCoefficients {
    SchemeCoefficients {
        nu,
        mu,
        alpha: 1.0 + 3.0 * nu + 2.0 * mu,
        beta: -2.0 * nu - mu,
        gamma: 2.0 * mu,
        delta: -2.0 - 4.0 * mu,
        sigma: nu / 2.0,
    }
}

/// Regime flags controlling the validity of the series derivation.
///
/// `legendre_ok` (|ε| < 1, i.e. μ² < ν) is required for the Legendre
/// generating-function expansion to converge; derivations refuse to proceed
/// without it. `theta_real` (μ² > 2ν) marks the regime where the constant
/// terms ϑ₁, ϑ₂ of the characteristic analysis are real. Both use strict
/// inequalities, so equality cases are classified as "not satisfied".
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    /// ε = μ²/(μ² − 2ν), the Legendre argument.
    pub epsilon: f64,
    /// μ² > 2ν, equivalently τ < R·√(ρ/(2E)).
    pub theta_real: bool,
    /// |ε| < 1, equivalently μ² < ν, equivalently τ > R·√(ρ/E).
    pub legendre_ok: bool,
}

pub fn regime_report(nu: f64, mu: f64) -> RegimeReport {
    let m2 = mu * mu;
    RegimeReport {
        epsilon: m2 / (m2 - 2.0 * nu),
        theta_real: m2 > 2.0 * nu,
        legendre_ok: m2 < nu,
    }
}

/// A validated parameter bundle: rod, grid, dimensionless parameters,
/// scheme weights and regime flags, computed once.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ModelParams {
    pub rod: RodModel,
    pub grid: GridSpec,
    pub coeffs: SchemeCoefficients,
    pub regime: RegimeReport,
}

impl ModelParams {
    pub fn new(rod: RodModel, grid: GridSpec) -> Self {
        let (nu, mu) = dimensionless_params(&rod, &grid);
        ModelParams {
            rod,
            grid,
            coeffs: scheme_coefficients(nu, mu),
            regime: regime_report(nu, mu),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn steel_rod() -> RodModel {
        RodModel::new(7860.0, 210e9, 1e-3, 1.0).unwrap()
    }

    fn steel_grid(rod: &RodModel) -> GridSpec {
        GridSpec::new(rod, 0.02, 1.6e-4, 0.3).unwrap()
    }

    #[test]
    fn steel_dimensionless_values() {
        let rod = steel_rod();
        let grid = steel_grid(&rod);
        let (nu, mu) = dimensionless_params(&rod, &grid);
        assert_relative_eq!(nu, 4.274809, max_relative = 1e-6);
        assert_relative_eq!(mu, 0.0025, max_relative = 1e-12);
        assert_eq!(grid.n, 50);
        assert_eq!(grid.steps(), 1875);
    }

    #[test]
    fn unit_values() {
        let rod = RodModel::new(1.0, 1.0, 1.0, 10.0).unwrap();
        let grid = GridSpec::new(&rod, 1.0, 1.0, 2.0).unwrap();
        let (nu, mu) = dimensionless_params(&rod, &grid);
        assert_eq!(nu, 1.0);
        assert_eq!(mu, 1.0);
    }

    #[test]
    fn zero_tau_rejected() {
        let rod = steel_rod();
        assert!(GridSpec::new(&rod, 0.02, 0.0, 0.3).is_err());
    }

    #[test]
    fn non_divisible_h_rejected() {
        let rod = steel_rod();
        assert!(GridSpec::new(&rod, 0.019, 1.6e-4, 0.3).is_err());
    }

    #[test]
    fn steel_scheme_weights() {
        let rod = steel_rod();
        let grid = steel_grid(&rod);
        let (nu, mu) = dimensionless_params(&rod, &grid);
        let c = scheme_coefficients(nu, mu);
        assert_relative_eq!(c.alpha, 13.829427, max_relative = 1e-6);
        assert_relative_eq!(c.beta, -8.552118, max_relative = 1e-6);
        assert_relative_eq!(c.gamma, 0.005, max_relative = 1e-12);
        assert_relative_eq!(c.delta, -2.01, max_relative = 1e-12);
        assert_relative_eq!(c.sigma, 2.137405, max_relative = 1e-6);
    }

    #[test]
    fn degenerate_and_simple_weights() {
        let c = scheme_coefficients(1.0, 0.0);
        assert_eq!((c.alpha, c.beta, c.gamma, c.delta, c.sigma), (4.0, -2.0, 0.0, -2.0, 0.5));
        let c = scheme_coefficients(2.0, 1.0);
        assert_eq!((c.alpha, c.beta, c.gamma, c.delta, c.sigma), (9.0, -5.0, 2.0, -6.0, 1.0));
    }

    #[test]
    fn steel_regime() {
        let rod = steel_rod();
        let grid = steel_grid(&rod);
        let (nu, mu) = dimensionless_params(&rod, &grid);
        let r = regime_report(nu, mu);
        assert_relative_eq!(r.epsilon, -7.31e-7, max_relative = 1e-3);
        assert!(!r.theta_real);
        assert!(r.legendre_ok);
    }

    // For the steel rod, |ε| < 1 iff τ > R√(ρ/E) ≈ 1.9346e-7 s.
    #[test]
    fn legendre_threshold_steel() {
        let rod = steel_rod();
        let t_crit = rod.radius * (rod.rho / rod.e_modulus).sqrt();
        assert_relative_eq!(t_crit, 1.9346e-7, max_relative = 1e-4);
        for (tau, expect) in [(1.9e-7, false), (2.0e-7, true)] {
            let h: f64 = 0.02;
            let nu = rod.c_coeff() * tau * tau / h.powi(4);
            let mu = rod.d_coeff() / (h * h);
            assert_eq!(regime_report(nu, mu).legendre_ok, expect, "tau = {tau}");
        }
    }

    #[test]
    fn boundary_cases_are_strict() {
        // mu^2 = 2 nu exactly: theta_real must be false.
        let r = regime_report(0.5, 1.0);
        assert!(!r.theta_real);
        // mu^2 = nu exactly: legendre_ok must be false.
        let r = regime_report(1.0, 1.0);
        assert!(!r.legendre_ok);
    }

    #[test]
    fn recomputation_is_bit_identical() {
        let rod = steel_rod();
        let grid = steel_grid(&rod);
        let a = ModelParams::new(rod, grid);
        let b = ModelParams::new(rod, grid);
        assert_eq!(a.coeffs, b.coeffs);
        assert_eq!(a.regime, b.regime);
    }

    #[test]
    fn weight_signs_for_positive_inputs() {
        let mut x: u64 = 0x9e3779b97f4a7c15;
        let mut next = || {
            // splitmix64, mapped to (0, 10]
            x = x.wrapping_add(0x9e3779b97f4a7c15);
            let mut z = x;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
            (((z ^ (z >> 31)) as f64 / u64::MAX as f64) * 10.0).max(1e-6)
        };
        for _ in 0..100 {
            let (nu, mu) = (next(), next());
            let c = scheme_coefficients(nu, mu);
            assert!(c.gamma > 0.0 && c.delta < -2.0 && c.sigma > 0.0 && c.beta < 0.0);
        }
    }

    #[test]
    fn legendre_ok_monotone_in_tau() {
        let rod = steel_rod();
        let h = 0.02;
        let mu = rod.d_coeff() / (h * h);
        let mut seen_true = false;
        for i in 1..200 {
            let tau = 1e-8 * 1.2f64.powi(i);
            let nu = rod.c_coeff() * tau * tau / h.powi(4);
            let ok = regime_report(nu, mu).legendre_ok;
            if seen_true {
                assert!(ok, "legendre_ok regressed as tau grew (tau = {tau})");
            }
            seen_true |= ok;
        }
        assert!(seen_true);
    }
}
