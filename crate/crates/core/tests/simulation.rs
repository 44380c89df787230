//! End-to-end simulation properties that need full runs: the far-boundary
//! influence bound for the reference segment, the coefficient-rounding
//! regression, scanner determinism and the energy-criterion index contract.

use rodtbc::adtbc::{derive_adtbc, mirror_right_edge, BoundaryOperator, DegreeSet};
use rodtbc::config::steel_rod_example;
use rodtbc::diagnostics::error_series;
use rodtbc::params::ModelParams;
use rodtbc::stability::{scan_cell, ScanSettings, CRITERION_SLACK};
use rodtbc::stepper::{
    build_initial_data, gaussian_derivative_profile, reference_run, run, BoundaryTreatment,
    Domain, RunOptions,
};

fn steel_model() -> ModelParams {
    steel_rod_example().model().unwrap()
}

fn adtbc_pair(params: &ModelParams) -> (BoundaryOperator, BoundaryOperator) {
    let d = DegreeSet::new(4, 4, 8, 8);
    let (left, _) = derive_adtbc(params, [d, d], false).unwrap();
    let right = mirror_right_edge(&left);
    (left, right)
}

/// Waves cannot traverse the 39.5L gap within T = 0.3 s: widening the
/// reference segment from 40L to 60L changes the restriction by < 1e-12.
#[test]
fn far_boundary_influence_below_1e12() {
    let params = steel_model();
    let profile = gaussian_derivative_profile(0.0);
    let opts = RunOptions { keep_frames: true, ..Default::default() };
    let narrow = reference_run(&params, &profile, &|_| 0.0, 40.0, &opts).unwrap();
    let wide = reference_run(&params, &profile, &|_| 0.0, 60.0, &opts).unwrap();
    let mut worst = 0.0f64;
    for (a, b) in narrow.frames.unwrap().iter().zip(wide.frames.unwrap().iter()) {
        for (x, y) in a.iter().zip(b) {
            worst = worst.max((x - y).abs());
        }
    }
    assert!(worst < 1e-12, "far boundary leaked {worst:.3e} into the restriction");
}

/// Odd initial data keeps the whole extended-segment solution odd: the
/// final frame shows the dispersive wavetrains antisymmetric about x = 0.
#[test]
fn reference_wavetrain_stays_odd() {
    let params = steel_model();
    let profile = gaussian_derivative_profile(0.0);
    let domain = Domain::extended(&params, 40.0);
    let init = build_initial_data(
        &profile,
        &|_| 0.0,
        &params.rod,
        params.grid.h,
        params.grid.tau,
        &domain,
    )
    .unwrap();
    let opts = RunOptions { keep_frames: true, ..Default::default() };
    let traj = run(&params, &domain, &BoundaryTreatment::DirichletNeumann, &init, &opts).unwrap();
    let frames = traj.frames.unwrap();
    let last = frames.last().unwrap();
    let n = last.len() - 1;
    let scale = last.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(scale > 0.0);
    for j in 0..=n {
        assert!(
            (last[j] + last[n - j]).abs() < 1e-9 * scale,
            "wavetrain lost odd symmetry at j = {j}: {:e} vs {:e}",
            last[j],
            last[n - j]
        );
    }
}

/// Note-14 regression: truncating the boundary coefficients to 5 decimal
/// places changes the final C-norm error by less than a factor of 10.
#[test]
fn rounding_to_5_decimals_is_mild() {
    let params = steel_model();
    let profile = gaussian_derivative_profile(0.0);
    let opts = RunOptions { keep_frames: true, ..Default::default() };
    let reference = reference_run(&params, &profile, &|_| 0.0, 40.0, &opts).unwrap();
    let domain = Domain::segment(&params);
    let init = build_initial_data(
        &profile,
        &|_| 0.0,
        &params.rod,
        params.grid.h,
        params.grid.tau,
        &domain,
    )
    .unwrap();

    let (left, right) = adtbc_pair(&params);
    let mut final_c = Vec::new();
    for round in [false, true] {
        let (mut l, mut r) = (left.clone(), right.clone());
        if round {
            for op in [&mut l, &mut r] {
                for lists in &mut op.coeffs {
                    for list in lists {
                        for v in list.iter_mut() {
                            *v = (*v * 1e5).round() / 1e5;
                        }
                    }
                }
            }
        }
        let bc = BoundaryTreatment::Adtbc { left: l, right: r };
        let traj = run(&params, &domain, &bc, &init, &opts).unwrap();
        let errors = error_series(&traj, &reference, &params.rod).unwrap();
        final_c.push(*errors.c.last().unwrap());
    }
    let ratio = final_c[1] / final_c[0];
    assert!(
        ratio < 10.0 && ratio > 0.1,
        "5-decimal rounding changed the final C error {ratio:.2}x ({:.3e} -> {:.3e})",
        final_c[0],
        final_c[1]
    );
}

/// Reflective boundary conditions keep the error at the reflected-wave
/// amplitude: while the reference keeps draining, the Dirichlet+Neumann
/// error plateaus instead of decaying with it.
#[test]
fn reflective_error_plateaus_while_reference_decays() {
    let params = steel_model();
    let profile = gaussian_derivative_profile(0.0);
    let opts = RunOptions { keep_frames: true, ..Default::default() };
    let reference = reference_run(&params, &profile, &|_| 0.0, 40.0, &opts).unwrap();
    let domain = Domain::segment(&params);
    let init = build_initial_data(
        &profile,
        &|_| 0.0,
        &params.rod,
        params.grid.h,
        params.grid.tau,
        &domain,
    )
    .unwrap();
    let traj = run(&params, &domain, &BoundaryTreatment::DirichletNeumann, &init, &opts).unwrap();
    let errors = error_series(&traj, &reference, &params.rod).unwrap();
    let at = |t: f64| {
        let n = (t / params.grid.tau).round() as usize;
        errors.c[n]
    };
    let (early, late) = (at(0.1), at(0.3));
    // plateau: no order-of-magnitude decay over [0.1, 0.3]
    assert!(
        late > 0.1 * early,
        "Dirichlet+Neumann error decayed {early:.3e} -> {late:.3e}; expected a plateau"
    );
    // and it dwarfs the decaying reference restriction norm at final time
    let ref_final = *reference.norms.c.last().unwrap();
    assert!(
        late > 50.0 * ref_final,
        "reflected error {late:.3e} should sit far above the reference norm {ref_final:.3e}"
    );
}

fn short_scan_settings(n_t: usize) -> ScanSettings {
    let d = DegreeSet::new(4, 4, 8, 8);
    ScanSettings {
        h_range: (0.015, 0.03),
        tau_range: (5e-5, 8e-4),
        nh: 2,
        ntau: 2,
        degrees: [d, d],
        const_constraint: false,
        n_t,
    }
}

#[test]
fn scan_cell_is_deterministic() {
    let params = steel_model();
    let settings = short_scan_settings(1500);
    let a = scan_cell(&params.rod, &settings, 0.02, 8.0e-4);
    let b = scan_cell(&params.rod, &settings, 0.02, 8.0e-4);
    assert_eq!(a, b);
    assert!(a.bc_exists);
    assert!(a.first_violation().is_some(), "cell above the band should violate");
}

/// The recorded energy-violation index is exactly the first half step whose
/// energy norm exceeds the initial one (with the scanner's slack).
#[test]
fn energy_violation_index_matches_norm_series() {
    let params = steel_model();
    let settings = short_scan_settings(1500);
    let (h, tau) = (0.02, 8.0e-4);
    let verdict = scan_cell(&params.rod, &settings, h, tau);
    let n_fail = verdict.energy_fail.expect("expected an energy violation above the band");

    let grid = rodtbc::params::GridSpec::new(&params.rod, h, tau, tau * 1500.0).unwrap();
    let cell_params = ModelParams::new(params.rod, grid);
    let (left, right) = adtbc_pair(&cell_params);
    let domain = Domain::segment(&cell_params);
    let init = build_initial_data(
        &gaussian_derivative_profile(0.0),
        &|_| 0.0,
        &cell_params.rod,
        h,
        tau,
        &domain,
    )
    .unwrap();
    let bc = BoundaryTreatment::Adtbc { left, right };
    let opts = RunOptions { steps_override: Some(n_fail + 5), ..Default::default() };
    let traj = run(&cell_params, &domain, &bc, &init, &opts).unwrap();
    let limit = traj.norms.h_half[0].sqrt() * (1.0 + CRITERION_SLACK);
    for m in 1..n_fail {
        assert!(
            traj.norms.h_half[m].sqrt() <= limit,
            "half step {m} already violates, but the scanner said {n_fail}"
        );
    }
    assert!(
        traj.norms.h_half[n_fail].sqrt() > limit,
        "half step {n_fail} does not violate the energy criterion"
    );
}
