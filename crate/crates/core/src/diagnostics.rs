//! Norms, the half-step energy functional, error series against a reference
//! trajectory, and the decay-law fit.

use crate::params::RodModel;
use crate::stepper::Trajectory;
use crate::{Error, Result};

/// Per-step norm table of a run: one (t, C, L²) row per layer and one
/// half-step energy Ĥ[u^{n+1/2}] per consecutive layer pair, so `h_half`
/// is one entry shorter than the other columns.
#[derive(Clone, Debug, Default)]
pub struct NormSeries {
    pub t: Vec<f64>,
    pub h_half: Vec<f64>,
    pub c: Vec<f64>,
    pub l2: Vec<f64>,
}

impl NormSeries {
    pub fn with_capacity(n: usize) -> Self {
        NormSeries {
            t: Vec::with_capacity(n),
            h_half: Vec::with_capacity(n),
            c: Vec::with_capacity(n),
            l2: Vec::with_capacity(n),
        }
    }

    /// √Ĥ values (the energy norm) aligned with half-step times.
    pub fn energy_norm(&self) -> Vec<f64> {
        self.h_half.iter().map(|v| v.sqrt()).collect()
    }

    /// Half-step times (n+1/2)·τ for the energy column.
    pub fn half_times(&self, tau: f64) -> Vec<f64> {
        (0..self.h_half.len()).map(|n| (n as f64 + 0.5) * tau).collect()
    }
}

/// Chebyshev and trapezoidal L² norms of one grid layer.
pub fn grid_norms(u: &[f64], h: f64) -> (f64, f64) {
    let n = u.len() - 1;
    let c = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut sum = 0.5 * (u[0] * u[0] + u[n] * u[n]);
    for v in &u[1..n] {
        sum += v * v;
    }
    (c, (h * sum).sqrt())
}

/// Discrete Hamiltonian at the half step t = (n+1/2)τ:
///
///   Ĥ = h·[½(ϑ₀+ϑ_N) + Σ_{j=1}^{N−1} ϑ_j],
///   ϑ_j = ρ·(∂_t u)² + ρR²·(∂_t∂_x u)² + ER²·(∂_x² u)²,
///
/// with centered x-stencils inside and one-sided first/second differences
/// at j = 0 and j = N (the time difference is the same everywhere).
pub fn hamiltonian_halfstep(u_n: &[f64], u_np1: &[f64], rod: &RodModel, h: f64, tau: f64) -> f64 {
    let n = u_n.len() - 1;
    assert!(n >= 2 && u_np1.len() == u_n.len());
    let rho = rod.rho;
    let rr = rod.radius * rod.radius;
    let e_rr = rod.e_modulus * rr;
    let rho_rr = rho * rr;

    let theta = |j: usize| -> f64 {
        let dt = (u_np1[j] - u_n[j]) / tau;
        let mixed = if j == 0 {
            ((u_np1[1] - u_n[1]) - (u_np1[0] - u_n[0])) / (h * tau)
        } else if j == n {
            ((u_np1[n] - u_n[n]) - (u_np1[n - 1] - u_n[n - 1])) / (h * tau)
        } else {
            (u_np1[j + 1] - u_n[j + 1] - u_np1[j - 1] + u_n[j - 1]) / (2.0 * h * tau)
        };
        let second = if j == 0 {
            (u_np1[2] - 2.0 * u_np1[1] + u_np1[0] + u_n[2] - 2.0 * u_n[1] + u_n[0])
                / (2.0 * h * h)
        } else if j == n {
            (u_np1[n] - 2.0 * u_np1[n - 1] + u_np1[n - 2] + u_n[n] - 2.0 * u_n[n - 1]
                + u_n[n - 2])
                / (2.0 * h * h)
        } else {
            (u_np1[j + 1] - 2.0 * u_np1[j] + u_np1[j - 1] + u_n[j + 1] - 2.0 * u_n[j]
                + u_n[j - 1])
                / (2.0 * h * h)
        };
        rho * dt * dt + rho_rr * mixed * mixed + e_rr * second * second
    };

    let mut sum = 0.5 * (theta(0) + theta(n));
    for j in 1..n {
        sum += theta(j);
    }
    h * sum
}

/// Per-step norms of u − u*, where both trajectories must carry frames on
/// identical windows and time grids.
pub fn error_series(traj: &Trajectory, reference: &Trajectory, rod: &RodModel) -> Result<NormSeries> {
    let frames = traj
        .frames
        .as_ref()
        .ok_or_else(|| Error::GridMismatch("candidate trajectory has no frames".into()))?;
    let ref_frames = reference
        .frames
        .as_ref()
        .ok_or_else(|| Error::GridMismatch("reference trajectory has no frames".into()))?;
    if traj.tau != reference.tau || traj.h != reference.h {
        return Err(Error::GridMismatch(format!(
            "step mismatch: (h, tau) = ({}, {}) vs ({}, {})",
            traj.h, traj.tau, reference.h, reference.tau
        )));
    }
    if frames.len() != ref_frames.len() {
        return Err(Error::GridMismatch(format!(
            "frame count mismatch: {} vs {}",
            frames.len(),
            ref_frames.len()
        )));
    }
    if (traj.window_x_left - reference.window_x_left).abs() > 1e-12 {
        return Err(Error::GridMismatch("windows are not aligned".into()));
    }
    let mut out = NormSeries::with_capacity(frames.len());
    let mut prev_diff: Option<Vec<f64>> = None;
    for (k, (a, b)) in frames.iter().zip(ref_frames).enumerate() {
        if a.len() != b.len() {
            return Err(Error::GridMismatch(format!("frame {k} length mismatch")));
        }
        let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        let (c, l2) = grid_norms(&diff, traj.h);
        out.t.push(k as f64 * traj.tau);
        out.c.push(c);
        out.l2.push(l2);
        if let Some(p) = prev_diff {
            out.h_half.push(hamiltonian_halfstep(&p, &diff, rod, traj.h, traj.tau));
        }
        prev_diff = Some(diff);
    }
    Ok(out)
}

/// Least-squares fit of log₁₀(v) = log₁₀(c) + e·log₁₀(t) over the samples
/// with t inside `window` (t > 0 and v > 0 required of a sample). Returns
/// (c, e). At least 20 samples must land in the window.
pub fn decay_fit(t: &[f64], values: &[f64], window: (f64, f64)) -> Result<(f64, f64)> {
    assert_eq!(t.len(), values.len());
    let pts: Vec<(f64, f64)> = t
        .iter()
        .zip(values)
        .filter(|&(&ti, &vi)| ti >= window.0 && ti <= window.1 && ti > 0.0 && vi > 0.0)
        .map(|(&ti, &vi)| (ti.log10(), vi.log10()))
        .collect();
    if pts.len() < 20 {
        return Err(Error::InsufficientData(format!(
            "decay fit window [{}, {}] holds {} samples; need at least 20",
            window.0,
            window.1,
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return Err(Error::InsufficientData("degenerate time samples in fit window".into()));
    }
    let exponent = (n * sxy - sx * sy) / denom;
    let intercept = (sy - exponent * sx) / n;
    Ok((10f64.powf(intercept), exponent))
}
