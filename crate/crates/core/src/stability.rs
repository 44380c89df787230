//! Fourier stability of the Cauchy problem and the mixed-problem (h, τ)
//! stability scan with parabola fitting.
//!
//! The Cauchy check evaluates the eigenvalue moduli of the one-step 2×2
//! amplification matrix; the scheme is absolutely stable (max modulus 1 for
//! every wavenumber). The mixed problem with ADTBCs is only conditionally
//! stable: the scanner derives the boundary operators per (h, τ) cell, runs
//! the standard initial data for N_t steps, and records the first step at
//! which each of the three criteria (energy, C, L²) fails. The stable band
//! sits between two parabolas τ = A·h².

use crate::adtbc::{derive_adtbc, mirror_right_edge, DegreeSet};
use crate::diagnostics::{grid_norms, hamiltonian_halfstep};
use crate::params::{GridSpec, ModelParams, RodModel};
use crate::stepper::{
    assemble_step_matrix, build_initial_data, gaussian_derivative_profile, step, BoundaryTreatment,
    Domain, HistoryBuffer,
};
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Relative slack when comparing a norm against its initial value, so step-1
/// roundoff is not misclassified as instability.
pub const CRITERION_SLACK: f64 = 1e-10;

/// Eigenvalue moduli (larger first) of the Cauchy amplification matrix at
/// grid phase ξh. The matrix is [[T, −1], [1, 0]] with
/// T = −(4μ·cos(ξh) − 2 − 4μ)/(2ν·cos²(ξh) − 2(2ν+μ)cos(ξh) + 1 + 2ν + 2μ);
/// its determinant is 1, so the moduli are both 1 exactly when the
/// discriminant T² − 4 is non-positive. With s = 1 − cos(ξh) = 2sin²(ξh/2)
/// the half-trace is (1 + 2μs)/(1 + 2μs + 2νs²), a quotient of positive
/// terms that never exceeds 1, so no spurious positive discriminant can
/// arise from cancellation.
pub fn cauchy_amplification(phase: f64, nu: f64, mu: f64) -> (f64, f64) {
    let half = (phase / 2.0).sin();
    let s = 2.0 * half * half; // 1 − cos(ξh), computed without cancellation
    let a = 1.0 + 2.0 * mu * s;
    let denom = a + 2.0 * nu * s * s;
    debug_assert!(denom > 0.0, "amplification denominator must stay positive");
    let half_trace = a / denom;
    let disc = half_trace * half_trace - 1.0;
    if disc <= 0.0 {
        // complex pair on the unit circle (det = 1)
        (1.0, 1.0)
    } else {
        let root = disc.sqrt();
        let l1 = (half_trace + root).abs();
        let l2 = (half_trace - root).abs();
        if l1 >= l2 { (l1, l2) } else { (l2, l1) }
    }
}

/// Max eigenvalue modulus over `samples` uniform phases in [0, π] (the
/// symbol is even and 2π-periodic in ξh).
pub fn max_cauchy_modulus(nu: f64, mu: f64, samples: usize) -> f64 {
    (0..samples)
        .map(|i| {
            let phase = std::f64::consts::PI * i as f64 / (samples - 1) as f64;
            cauchy_amplification(phase, nu, mu).0
        })
        .fold(0.0, f64::max)
}

/// One scanned (h, τ) cell. `*_fail` hold the first violating step index
/// (energy: the half-step index n of Ĥ[u^{n+1/2}]; C/L²: the layer index);
/// `None` means the criterion held for the whole run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellVerdict {
    pub h: f64,
    pub tau: f64,
    pub bc_exists: bool,
    pub energy_fail: Option<usize>,
    pub c_fail: Option<usize>,
    pub l2_fail: Option<usize>,
}

impl CellVerdict {
    pub fn stable_energy(&self) -> bool {
        self.bc_exists && self.energy_fail.is_none()
    }
    pub fn stable_c(&self) -> bool {
        self.bc_exists && self.c_fail.is_none()
    }
    pub fn stable_l2(&self) -> bool {
        self.bc_exists && self.l2_fail.is_none()
    }
    pub fn stable_all(&self) -> bool {
        self.stable_energy() && self.stable_c() && self.stable_l2()
    }
    /// Earliest violation over the three criteria.
    pub fn first_violation(&self) -> Option<usize> {
        [self.energy_fail, self.c_fail, self.l2_fail].into_iter().flatten().min()
    }
}

/// Scan request: inclusive (h, τ) ranges sampled on a uniform lattice.
/// Each nominal h snaps to the nearest divisor grid h = L/round(L/h).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScanSettings {
    pub h_range: (f64, f64),
    pub tau_range: (f64, f64),
    pub nh: usize,
    pub ntau: usize,
    pub degrees: [DegreeSet; 2],
    pub const_constraint: bool,
    pub n_t: usize,
}

/// Scan result laid out row-major: `cells[ih·ntau + itau]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StabilityMap {
    pub cells: Vec<CellVerdict>,
    pub nh: usize,
    pub ntau: usize,
    pub n_t: usize,
}

impl StabilityMap {
    pub fn cell(&self, ih: usize, itau: usize) -> &CellVerdict {
        &self.cells[ih * self.ntau + itau]
    }

    /// True when every h-column's all-criteria-stable cells form one
    /// contiguous τ run and the stable columns themselves are contiguous.
    pub fn has_single_band(&self) -> bool {
        let mut in_band = false;
        let mut band_ended = false;
        for ih in 0..self.nh {
            let mut runs = 0usize;
            let mut prev = false;
            for itau in 0..self.ntau {
                let s = self.cell(ih, itau).stable_all();
                if s && !prev {
                    runs += 1;
                }
                prev = s;
            }
            if runs > 1 {
                return false;
            }
            let has = runs == 1;
            if has {
                if band_ended {
                    return false;
                }
                in_band = true;
            } else if in_band {
                band_ended = true;
            }
        }
        in_band
    }
}

/// Evaluate a single (h, τ) cell: derive the boundary operators, run the
/// standard initial data for `settings.n_t` steps and record each
/// criterion's first violation. `h` must divide L (it is not snapped here).
pub fn scan_cell(rod: &RodModel, settings: &ScanSettings, h: f64, tau: f64) -> CellVerdict {
    let mut verdict = CellVerdict {
        h,
        tau,
        bc_exists: false,
        energy_fail: None,
        c_fail: None,
        l2_fail: None,
    };
    let n_t = settings.n_t;
    let grid = match GridSpec::new(rod, h, tau, tau * n_t as f64) {
        Ok(g) => g,
        Err(_) => return verdict,
    };
    let params = ModelParams::new(*rod, grid);
    let treatment = match derive_adtbc(&params, settings.degrees, settings.const_constraint) {
        Ok((left, _)) => {
            let right = mirror_right_edge(&left);
            BoundaryTreatment::Adtbc { left, right }
        }
        Err(_) => return verdict,
    };
    verdict.bc_exists = true;

    let domain = Domain::segment(&params);
    let profile = gaussian_derivative_profile(0.0);
    let init = match build_initial_data(&profile, &|_| 0.0, rod, h, tau, &domain) {
        Ok(i) => i,
        Err(_) => {
            verdict.bc_exists = false;
            return verdict;
        }
    };
    let matrix = match assemble_step_matrix(&params.coeffs, &treatment, domain.n) {
        Ok(m) => m,
        Err(_) => {
            verdict.bc_exists = false;
            return verdict;
        }
    };

    let (c0, l20) = grid_norms(&init.u0, h);
    let c_limit = c0 * (1.0 + CRITERION_SLACK);
    let l2_limit = l20 * (1.0 + CRITERION_SLACK);
    let h0 = hamiltonian_halfstep(&init.u0, &init.u1, rod, h, tau);
    let energy_limit = h0.sqrt() * (1.0 + CRITERION_SLACK);

    let mut hist = HistoryBuffer::new(treatment.history_depth());
    hist.push(&init.u0);
    hist.push(&init.u1);
    let mut u_prev = init.u0.clone();
    let mut u_cur = init.u1.clone();
    // layer 1 itself is subject to the C/L² criteria
    check_layer(&u_cur, h, 1, c_limit, l2_limit, &mut verdict);

    for n in 1..n_t {
        let u_next = match step(
            &matrix,
            &params.coeffs,
            &treatment,
            &u_cur,
            &u_prev,
            &hist,
            n + 1,
        ) {
            Ok(u) => u,
            Err(_) => {
                // divergence: every surviving criterion fails here
                verdict.energy_fail.get_or_insert(n);
                verdict.c_fail.get_or_insert(n + 1);
                verdict.l2_fail.get_or_insert(n + 1);
                return verdict;
            }
        };
        let h_n = hamiltonian_halfstep(&u_cur, &u_next, rod, h, tau);
        if verdict.energy_fail.is_none() && !(h_n.sqrt() <= energy_limit) {
            verdict.energy_fail = Some(n);
        }
        check_layer(&u_next, h, n + 1, c_limit, l2_limit, &mut verdict);
        if verdict.energy_fail.is_some()
            && verdict.c_fail.is_some()
            && verdict.l2_fail.is_some()
        {
            return verdict;
        }
        hist.push(&u_next);
        u_prev = u_cur;
        u_cur = u_next;
    }
    verdict
}

fn check_layer(
    u: &[f64],
    h: f64,
    layer_index: usize,
    c_limit: f64,
    l2_limit: f64,
    verdict: &mut CellVerdict,
) {
    if verdict.c_fail.is_some() && verdict.l2_fail.is_some() {
        return;
    }
    let (c, l2) = grid_norms(u, h);
    if verdict.c_fail.is_none() && !(c <= c_limit) {
        verdict.c_fail = Some(layer_index);
    }
    if verdict.l2_fail.is_none() && !(l2 <= l2_limit) {
        verdict.l2_fail = Some(layer_index);
    }
}

/// Run the scan. Cells are independent and evaluated in parallel; the
/// result is identical for any thread count.
pub fn scan_stability(rod: &RodModel, settings: &ScanSettings) -> Result<StabilityMap> {
    if settings.nh < 2 || settings.ntau < 2 {
        return Err(Error::InvalidParameter("scan needs at least a 2x2 lattice".into()));
    }
    if settings.n_t < 1 {
        return Err(Error::InvalidParameter("scan needs N_t >= 1".into()));
    }
    for (name, (lo, hi)) in
        [("h", settings.h_range), ("tau", settings.tau_range)]
    {
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::InvalidParameter(format!("invalid {name} range [{lo}, {hi}]")));
        }
    }
    let lin = |range: (f64, f64), count: usize, i: usize| {
        range.0 + (range.1 - range.0) * i as f64 / (count - 1) as f64
    };
    let mut points = Vec::with_capacity(settings.nh * settings.ntau);
    for ih in 0..settings.nh {
        let nominal = lin(settings.h_range, settings.nh, ih);
        let intervals = (rod.length / nominal).round().max(8.0);
        let h = rod.length / intervals;
        for itau in 0..settings.ntau {
            points.push((h, lin(settings.tau_range, settings.ntau, itau)));
        }
    }
    let cells: Vec<CellVerdict> = points
        .par_iter()
        .map(|&(h, tau)| scan_cell(rod, settings, h, tau))
        .collect();
    Ok(StabilityMap { cells, nh: settings.nh, ntau: settings.ntau, n_t: settings.n_t })
}

/// Least-squares fits τ = A·h² to the lower and upper edges of the stable
/// band, with R² per edge.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ParabolaFit {
    pub a_lower: f64,
    pub a_upper: f64,
    pub r2_lower: f64,
    pub r2_upper: f64,
}

/// Fit both band edges from cells stable under all three criteria.
/// Requires at least 5 columns contributing boundary cells.
pub fn fit_parabolas(map: &StabilityMap) -> Result<ParabolaFit> {
    let mut lower: Vec<(f64, f64)> = Vec::new();
    let mut upper: Vec<(f64, f64)> = Vec::new();
    for ih in 0..map.nh {
        let stable: Vec<&CellVerdict> = (0..map.ntau)
            .map(|itau| map.cell(ih, itau))
            .filter(|cell| cell.stable_all())
            .collect();
        if stable.is_empty() {
            continue;
        }
        let h = stable[0].h;
        let tau_lo = stable.iter().map(|c| c.tau).fold(f64::INFINITY, f64::min);
        let tau_hi = stable.iter().map(|c| c.tau).fold(0.0, f64::max);
        lower.push((h, tau_lo));
        upper.push((h, tau_hi));
    }
    if lower.len() < 5 {
        return Err(Error::InsufficientData(format!(
            "only {} columns carry stable cells; need at least 5 per band edge",
            lower.len()
        )));
    }
    let fit = |pts: &[(f64, f64)]| -> (f64, f64) {
        let num: f64 = pts.iter().map(|&(h, tau)| tau * h * h).sum();
        let den: f64 = pts.iter().map(|&(h, _)| h.powi(4)).sum();
        let a = num / den;
        let mean = pts.iter().map(|&(_, tau)| tau).sum::<f64>() / pts.len() as f64;
        let ss_res: f64 = pts.iter().map(|&(h, tau)| (tau - a * h * h).powi(2)).sum();
        let ss_tot: f64 = pts.iter().map(|&(_, tau)| (tau - mean).powi(2)).sum();
        let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
        (a, r2)
    };
    let (a_lower, r2_lower) = fit(&lower);
    let (a_upper, r2_upper) = fit(&upper);
    Ok(ParabolaFit { a_lower, a_upper, r2_lower, r2_upper })
}
