//! Time integration of the five-point implicit scheme on a segment under a
//! chosen boundary treatment, plus initial-data construction and the
//! extended-segment reference run.
//!
//! The step matrix is constant in time (interior rows carry the new-level
//! weights σ, β, α, β, σ; the four boundary rows carry the j = 0 terms of
//! the boundary conditions), so it is band-factored once and reused. All
//! j ≥ 1 convolution terms go to the right-hand side from a short history
//! ring; layers before t = 0 are taken as zero.

use crate::adtbc::{BoundaryOperator, DegreeSet};
use crate::diagnostics::{grid_norms, hamiltonian_halfstep, NormSeries};
use crate::linalg::{BandedLu, BandedMatrix, solve_tridiagonal};
use crate::params::{ModelParams, RodModel, SchemeCoefficients};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// Boundary-condition selector as it appears in config files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BcKind {
    Adtbc,
    /// u = 0, u_x = 0: u₀ⁿ = u₁ⁿ = 0.
    DirichletNeumann,
    /// u = 0, u_xx = 0: u₀ⁿ = 0, u₁ⁿ = u₂ⁿ/2.
    DirichletMoment,
    /// u_xx = 0, u_xxx = 0: u₀ⁿ = 3u₂ⁿ − 2u₃ⁿ, u₁ⁿ = 2u₂ⁿ − u₃ⁿ.
    FreeFree,
}

impl std::fmt::Display for BcKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let label = match self {
            BcKind::Adtbc => "adtbc",
            BcKind::DirichletNeumann => "dirichlet_neumann",
            BcKind::DirichletMoment => "dirichlet_moment",
            BcKind::FreeFree => "free_free",
        };
        f.write_str(label)
    }
}

/// Fully resolved boundary treatment for a run.
#[derive(Clone, Debug)]
pub enum BoundaryTreatment {
    Adtbc { left: BoundaryOperator, right: BoundaryOperator },
    DirichletNeumann,
    DirichletMoment,
    FreeFree,
}

impl BoundaryTreatment {
    pub fn kind(&self) -> BcKind {
        match self {
            BoundaryTreatment::Adtbc { .. } => BcKind::Adtbc,
            BoundaryTreatment::DirichletNeumann => BcKind::DirichletNeumann,
            BoundaryTreatment::DirichletMoment => BcKind::DirichletMoment,
            BoundaryTreatment::FreeFree => BcKind::FreeFree,
        }
    }

    pub fn degrees(&self) -> Option<[DegreeSet; 2]> {
        match self {
            BoundaryTreatment::Adtbc { left, .. } => Some(left.degrees),
            _ => None,
        }
    }

    /// Convolution memory the treatment needs (1 for local conditions).
    pub fn history_depth(&self) -> usize {
        match self {
            BoundaryTreatment::Adtbc { left, right } => {
                left.history_depth().max(right.history_depth())
            }
            _ => 1,
        }
    }
}

/// Spatial window: `n` intervals starting at `x_left` (n+1 grid points).
#[derive(Clone, Copy, Debug)]
pub struct Domain {
    pub x_left: f64,
    pub n: usize,
}

impl Domain {
    /// The rod segment [−L/2, L/2].
    pub fn segment(params: &ModelParams) -> Domain {
        Domain { x_left: -params.rod.length / 2.0, n: params.grid.n }
    }

    /// The extended reference segment [−w·L, w·L].
    pub fn extended(params: &ModelParams, half_width: f64) -> Domain {
        let per_l = params.grid.n as f64;
        Domain {
            x_left: -half_width * params.rod.length,
            n: (2.0 * half_width * per_l).round() as usize,
        }
    }

    pub fn point(&self, j: usize, h: f64) -> f64 {
        self.x_left + j as f64 * h
    }
}

/// The standard initial displacement profile, optionally shifted:
/// u(0, x) = (x−s)/√(π·0.02)·exp(−(x−s)²/0.02).
pub fn gaussian_derivative_profile(shift: f64) -> impl Fn(f64) -> f64 + Copy {
    move |x: f64| {
        let y = x - shift;
        y / (std::f64::consts::PI * 0.02).sqrt() * (-y * y / 0.02).exp()
    }
}

/// Sampled initial layers: u⁰ = U₀, u¹ = U₀ + τU₁ + (τ²/2)U₂ with the
/// auxiliary function U₂ from the compact-scheme solve.
#[derive(Clone, Debug)]
pub struct InitialData {
    pub u0: Vec<f64>,
    pub u1: Vec<f64>,
    pub u2_aux: Vec<f64>,
}

/// Compact-scheme coefficients for `[D·d²/dx² − 1]U₂ = C·U₀⁗`:
/// a·U₂(x_{j−1}) + U₂(x_j) + a·U₂(x_{j+1})
///   = p·U₀(x_{j−2}) + q·U₀(x_{j−1}) + r·U₀(x_j) + q·U₀(x_{j+1}) + p·U₀(x_{j+2}).
pub fn compact_coefficients(rod: &RodModel, h: f64) -> (f64, f64, f64, f64) {
    let c = rod.c_coeff();
    let d = rod.d_coeff();
    let a = (h * h - 6.0 * d) / (12.0 * d + 4.0 * h * h);
    let p = -3.0 * c / (2.0 * h * h * (3.0 * d + h * h));
    let q = 6.0 * c / (h * h * (3.0 * d + h * h));
    let r = -9.0 * c / (h * h * (3.0 * d + h * h));
    (a, p, q, r)
}

/// Build u⁰, u¹ on `domain` from initial functions U₀, U₁. U₀ is evaluated
/// outside the grid (at x ± 2h) by the right-hand stencil, so it must be a
/// function, not just samples. The tridiagonal system closes with the
/// exponential decay rows U₂(x_end) = e^{−h/√D}·U₂(x_end∓h).
pub fn build_initial_data(
    u0_fn: &dyn Fn(f64) -> f64,
    u1_fn: &dyn Fn(f64) -> f64,
    rod: &RodModel,
    h: f64,
    tau: f64,
    domain: &Domain,
) -> Result<InitialData> {
    let n = domain.n;
    let (a, p, q, r) = compact_coefficients(rod, h);
    let decay = (-h / rod.d_coeff().sqrt()).exp();

    let mut sub = vec![a; n];
    let mut sup = vec![a; n];
    let mut diag = vec![1.0; n + 1];
    let mut rhs = vec![0.0; n + 1];
    for j in 1..n {
        let x = domain.point(j, h);
        rhs[j] = p * u0_fn(x - 2.0 * h)
            + q * u0_fn(x - h)
            + r * u0_fn(x)
            + q * u0_fn(x + h)
            + p * u0_fn(x + 2.0 * h);
    }
    sup[0] = -decay;
    sub[n - 1] = -decay;
    diag[0] = 1.0;
    diag[n] = 1.0;
    solve_tridiagonal(&sub, &diag, &sup, &mut rhs)?;
    let u2_aux = rhs;

    let u0: Vec<f64> = (0..=n).map(|j| u0_fn(domain.point(j, h))).collect();
    let u1: Vec<f64> = (0..=n)
        .map(|j| u0[j] + tau * u1_fn(domain.point(j, h)) + 0.5 * tau * tau * u2_aux[j])
        .collect();
    Ok(InitialData { u0, u1, u2_aux })
}

/// Factored constant-in-time step matrix.
pub struct StepMatrix {
    pub n: usize,
    lu: BandedLu,
}

/// Assemble and factor the (N+1)×(N+1) banded matrix: interior rows carry
/// σ, β, α, β, σ at the new level; rows 0, 1, N−1, N come from the boundary
/// treatment (only its j = 0 terms — history contributes via the RHS).
pub fn assemble_step_matrix(
    coeffs: &SchemeCoefficients,
    bc: &BoundaryTreatment,
    n: usize,
) -> Result<StepMatrix> {
    assert!(n >= 8, "grid too small for the boundary stencils");
    let mut m = BandedMatrix::zeros(n + 1, 3, 3);
    for row in 2..=(n - 2) {
        m.set(row, row - 2, coeffs.sigma);
        m.set(row, row - 1, coeffs.beta);
        m.set(row, row, coeffs.alpha);
        m.set(row, row + 1, coeffs.beta);
        m.set(row, row + 2, coeffs.sigma);
    }
    match bc {
        BoundaryTreatment::Adtbc { left, right } => {
            let (r1, s1) = (left.coeffs[0][2][0], left.coeffs[0][3][0]);
            let (r2, s2) = (left.coeffs[1][2][0], left.coeffs[1][3][0]);
            m.set(0, 0, 1.0);
            m.set(0, 2, r1);
            m.set(0, 3, s1);
            m.set(1, 1, 1.0);
            m.set(1, 2, r2);
            m.set(1, 3, s2);
            let (r1, s1) = (right.coeffs[0][2][0], right.coeffs[0][3][0]);
            let (r2, s2) = (right.coeffs[1][2][0], right.coeffs[1][3][0]);
            m.set(n, n, 1.0);
            m.set(n, n - 2, r1);
            m.set(n, n - 3, s1);
            m.set(n - 1, n - 1, 1.0);
            m.set(n - 1, n - 2, r2);
            m.set(n - 1, n - 3, s2);
        }
        BoundaryTreatment::DirichletNeumann => {
            m.set(0, 0, 1.0);
            m.set(1, 1, 1.0);
            m.set(n, n, 1.0);
            m.set(n - 1, n - 1, 1.0);
        }
        BoundaryTreatment::DirichletMoment => {
            m.set(0, 0, 1.0);
            m.set(1, 1, 1.0);
            m.set(1, 2, -0.5);
            m.set(n, n, 1.0);
            m.set(n - 1, n - 1, 1.0);
            m.set(n - 1, n - 2, -0.5);
        }
        BoundaryTreatment::FreeFree => {
            m.set(0, 0, 1.0);
            m.set(0, 2, -3.0);
            m.set(0, 3, 2.0);
            m.set(1, 1, 1.0);
            m.set(1, 2, -2.0);
            m.set(1, 3, 1.0);
            m.set(n, n, 1.0);
            m.set(n, n - 2, -3.0);
            m.set(n, n - 3, 2.0);
            m.set(n - 1, n - 1, 1.0);
            m.set(n - 1, n - 2, -2.0);
            m.set(n - 1, n - 3, 1.0);
        }
    }
    let lu = m.factor()?;
    Ok(StepMatrix { n, lu })
}

/// Ring of the last n_t boundary-restricted layers: four points at each
/// edge, newest first. Layers older than the ring never influence a step.
#[derive(Clone, Debug)]
pub struct HistoryBuffer {
    depth: usize,
    left: VecDeque<[f64; 4]>,
    right: VecDeque<[f64; 4]>,
}

impl HistoryBuffer {
    /// Zero-initialised ring of depth n_t (layers at negative times are 0).
    pub fn new(depth: usize) -> Self {
        HistoryBuffer {
            depth,
            left: VecDeque::from(vec![[0.0; 4]; depth]),
            right: VecDeque::from(vec![[0.0; 4]; depth]),
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Record a full layer as the newest entry, dropping the oldest.
    pub fn push(&mut self, layer: &[f64]) {
        let n = layer.len() - 1;
        self.left.push_front([layer[0], layer[1], layer[2], layer[3]]);
        self.right.push_front([layer[n], layer[n - 1], layer[n - 2], layer[n - 3]]);
        self.left.truncate(self.depth);
        self.right.truncate(self.depth);
    }

    /// Edge values of the layer `j` steps before the level being solved
    /// (j = 1 is the newest recorded layer). Out-of-ring layers are zero.
    fn edge_values(&self, j: usize) -> ([f64; 4], [f64; 4]) {
        match (self.left.get(j - 1), self.right.get(j - 1)) {
            (Some(l), Some(r)) => (*l, *r),
            _ => ([0.0; 4], [0.0; 4]),
        }
    }

    /// Overwrite the stored edge values of the layer `j` steps back
    /// (testing hook for the locality invariant).
    pub fn perturb(&mut self, j: usize, values: [f64; 4]) {
        if let Some(l) = self.left.get_mut(j - 1) {
            *l = values;
        }
        if let Some(r) = self.right.get_mut(j - 1) {
            *r = values;
        }
    }
}

fn convolution_tail(op: &BoundaryOperator, k: usize, hist: &HistoryBuffer, right: bool) -> f64 {
    let lists = &op.coeffs[k - 1];
    let mut acc = 0.0;
    let depth = op.history_depth();
    for j in 1..depth {
        let (l, r) = hist.edge_values(j);
        let edge = if right { r } else { l };
        for (poly, list) in lists.iter().enumerate() {
            if let Some(&c) = list.get(j) {
                acc += c * edge[poly];
            }
        }
    }
    acc
}

/// Advance one step: solve for u^{n+1} given u^n, u^{n−1} and the history
/// ring (which must hold u^n as its newest layer for an ADTBC run).
pub fn step(
    matrix: &StepMatrix,
    coeffs: &SchemeCoefficients,
    bc: &BoundaryTreatment,
    u_cur: &[f64],
    u_prev: &[f64],
    hist: &HistoryBuffer,
    step_index: usize,
) -> Result<Vec<f64>> {
    let n = matrix.n;
    let mut rhs = vec![0.0; n + 1];
    for m in 2..=(n - 2) {
        rhs[m] = -(coeffs.sigma * (u_prev[m + 2] + u_prev[m - 2])
            + coeffs.beta * (u_prev[m + 1] + u_prev[m - 1])
            + coeffs.alpha * u_prev[m]
            + coeffs.gamma * (u_cur[m - 1] + u_cur[m + 1])
            + coeffs.delta * u_cur[m]);
    }
    if let BoundaryTreatment::Adtbc { left, right } = bc {
        rhs[0] = -convolution_tail(left, 1, hist, false);
        rhs[1] = -convolution_tail(left, 2, hist, false);
        rhs[n] = -convolution_tail(right, 1, hist, true);
        rhs[n - 1] = -convolution_tail(right, 2, hist, true);
    }
    matrix.lu.solve(&mut rhs);
    if rhs.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence { step: step_index });
    }
    Ok(rhs)
}

/// Options for [`run`].
#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    /// Keep per-layer frames (restricted to the window when one is set).
    pub keep_frames: bool,
    /// Inclusive grid-index window for norms and stored frames.
    pub window: Option<(usize, usize)>,
    /// Run this many steps instead of floor(T/τ).
    pub steps_override: Option<usize>,
}

/// A finished run: per-step norms over the (possibly windowed) grid, plus
/// optional frames.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub bc: BcKind,
    pub degrees: Option<[DegreeSet; 2]>,
    pub h: f64,
    pub tau: f64,
    /// x of the first point of the norm/frame window.
    pub window_x_left: f64,
    pub frames: Option<Vec<Vec<f64>>>,
    pub norms: NormSeries,
}

/// Integrate from the sampled initial data. The norm series gets one row
/// per layer (C, L²) and one half-step energy per consecutive pair.
pub fn run(
    params: &ModelParams,
    domain: &Domain,
    bc: &BoundaryTreatment,
    init: &InitialData,
    opts: &RunOptions,
) -> Result<Trajectory> {
    let n = domain.n;
    assert_eq!(init.u0.len(), n + 1, "initial data does not match the domain");
    let steps = opts.steps_override.unwrap_or_else(|| params.grid.steps());
    if steps < 1 {
        return Err(Error::InvalidParameter("need at least one time step".into()));
    }
    let (lo, hi) = opts.window.unwrap_or((0, n));
    assert!(lo < hi && hi <= n, "norm window out of range");

    let matrix = assemble_step_matrix(&params.coeffs, bc, n)?;
    let tau = params.grid.tau;
    let h = params.grid.h;
    let rod = &params.rod;

    let mut norms = NormSeries::with_capacity(steps + 1);
    let mut frames: Option<Vec<Vec<f64>>> = opts.keep_frames.then(Vec::new);
    let record = |layer: &[f64], t: f64, norms: &mut NormSeries| {
        let w = &layer[lo..=hi];
        let (c, l2) = grid_norms(w, h);
        norms.t.push(t);
        norms.c.push(c);
        norms.l2.push(l2);
    };

    let mut hist = HistoryBuffer::new(bc.history_depth());
    hist.push(&init.u0);
    hist.push(&init.u1);

    record(&init.u0, 0.0, &mut norms);
    norms.h_half.push(hamiltonian_halfstep(&init.u0[lo..=hi], &init.u1[lo..=hi], rod, h, tau));
    record(&init.u1, tau, &mut norms);
    if let Some(f) = frames.as_mut() {
        f.push(init.u0[lo..=hi].to_vec());
        f.push(init.u1[lo..=hi].to_vec());
    }

    let mut u_prev = init.u0.clone();
    let mut u_cur = init.u1.clone();
    for k in 2..=steps {
        let u_next = step(&matrix, &params.coeffs, bc, &u_cur, &u_prev, &hist, k)?;
        norms
            .h_half
            .push(hamiltonian_halfstep(&u_cur[lo..=hi], &u_next[lo..=hi], rod, h, tau));
        record(&u_next, k as f64 * tau, &mut norms);
        if let Some(f) = frames.as_mut() {
            f.push(u_next[lo..=hi].to_vec());
        }
        hist.push(&u_next);
        u_prev = u_cur;
        u_cur = u_next;
    }

    Ok(Trajectory {
        bc: bc.kind(),
        degrees: bc.degrees(),
        h,
        tau,
        window_x_left: domain.point(lo, h),
        frames,
        norms,
    })
}

/// Default half-width (in units of L) of the reference segment.
pub const REFERENCE_HALF_WIDTH: f64 = 40.0;

/// Reference Cauchy-like run: same steps on [−w·L, w·L] under homogeneous
/// Dirichlet+Neumann far boundaries, with norms and frames restricted to
/// the rod segment [−L/2, L/2]. Requires an even segment interval count so
/// the restriction window lands on grid points.
pub fn reference_run(
    params: &ModelParams,
    u0_fn: &dyn Fn(f64) -> f64,
    u1_fn: &dyn Fn(f64) -> f64,
    half_width: f64,
    opts: &RunOptions,
) -> Result<Trajectory> {
    let n_seg = params.grid.n;
    if n_seg % 2 != 0 {
        return Err(Error::GridMismatch(format!(
            "reference restriction needs an even segment interval count, got N = {n_seg}"
        )));
    }
    let domain = Domain::extended(params, half_width);
    let offset_real = (half_width * params.rod.length - params.rod.length / 2.0) / params.grid.h;
    let offset = offset_real.round() as usize;
    let init = build_initial_data(u0_fn, u1_fn, &params.rod, params.grid.h, params.grid.tau, &domain)?;
    let run_opts = RunOptions {
        keep_frames: opts.keep_frames,
        window: Some((offset, offset + n_seg)),
        steps_override: opts.steps_override,
    };
    run(params, &domain, &BoundaryTreatment::DirichletNeumann, &init, &run_opts)
}
