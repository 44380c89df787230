//! Command-line driver: derive boundary operators, run simulations and
//! comparisons, scan the (h, τ) stability plane, and check the Cauchy
//! symbol — emitting CSV artifacts plus a JSON manifest per run.
//!
//! Exit codes: 0 success, 2 config error, 3 derivation impossible
//! (singular system or regime violation), 4 divergence.

use clap::{Parser, Subcommand};
use rodtbc::adtbc::{derive_adtbc, mirror_right_edge, DerivationReport};
use rodtbc::config::Config;
use rodtbc::diagnostics::{decay_fit, error_series};
use rodtbc::export;
use rodtbc::params::ModelParams;
use rodtbc::stability::{fit_parabolas, max_cauchy_modulus, scan_stability, ParabolaFit};
use rodtbc::stepper::{
    build_initial_data, gaussian_derivative_profile, reference_run, run, BcKind,
    BoundaryTreatment, Domain, InitialData, RunOptions, Trajectory,
};
use rodtbc::Error;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "rodtbc", version, about = "Transparent boundary conditions for rod transverse vibrations")]
struct Cli {
    /// Path to the TOML run configuration.
    #[arg(long, global = true, default_value = "rodtbc.toml")]
    config: PathBuf,
    /// Override the configured output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Dump per-layer frame CSVs.
    #[arg(long, global = true)]
    frames: bool,
    /// Override the step count (simulate/compare) or scan N_t.
    #[arg(long, global = true)]
    nt: Option<usize>,
    /// Full-fidelity scan mode: N_t = 10^5.
    #[arg(long, global = true)]
    full: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy, Debug)]
enum Command {
    /// Derive the ADTBC coefficient tables for the configured degree sets.
    DeriveBc,
    /// Integrate the mixed problem under the configured boundary condition.
    Simulate,
    /// Compare ADTBC and the usual homogeneous BCs against the reference run.
    Compare,
    /// Scan the (h, tau) plane for the stability band and fit its parabolas.
    Scan,
    /// Verify absolute stability of the Cauchy amplification symbol.
    CheckCauchy,
}

impl Command {
    fn slug(self) -> &'static str {
        match self {
            Command::DeriveBc => "derive-bc",
            Command::Simulate => "simulate",
            Command::Compare => "compare",
            Command::Scan => "scan",
            Command::CheckCauchy => "check-cauchy",
        }
    }
}

#[derive(Serialize)]
struct RunManifest {
    command: String,
    config: Config,
    flags: FlagSummary,
    outputs: Vec<String>,
    versions: BTreeMap<String, String>,
    timings_ms: BTreeMap<String, u128>,
    #[serde(skip_serializing_if = "Option::is_none")]
    derivation_report: Option<DerivationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    parabola_fit: Option<ParabolaFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    notes: Option<Vec<String>>,
    completed_unix: u64,
}

#[derive(Serialize)]
struct FlagSummary {
    frames: bool,
    nt: Option<usize>,
    full: bool,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::InvalidParameter(_) => 2,
        Error::Regime { .. } | Error::SingularSystem { .. } | Error::Series(_) => 3,
        Error::Divergence { .. } => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

struct RunContext {
    dir: PathBuf,
    outputs: Vec<String>,
    timings_ms: BTreeMap<String, u128>,
    notes: Vec<String>,
}

impl RunContext {
    fn file(&mut self, name: &str) -> Result<BufWriter<File>, Error> {
        let path = self.dir.join(name);
        let f = File::create(&path)?;
        self.outputs.push(name.to_string());
        Ok(BufWriter::new(f))
    }

    fn time<T>(
        &mut self,
        label: &str,
        f: impl FnOnce(&mut Self) -> Result<T, Error>,
    ) -> Result<T, Error> {
        let start = Instant::now();
        let out = f(self);
        self.timings_ms.insert(label.to_string(), start.elapsed().as_millis());
        out
    }
}

fn execute(cli: &Cli) -> Result<(), Error> {
    let mut config = Config::from_path(&cli.config)?;
    if let Some(out) = &cli.out {
        config.output_dir = out.clone();
    }

    let hash = {
        let mut hasher = Sha256::new();
        hasher.update(config.canonical().as_bytes());
        hasher.update(cli.command.slug().as_bytes());
        hasher.update(format!("frames={} nt={:?} full={}", cli.frames, cli.nt, cli.full));
        let digest = hasher.finalize();
        digest.iter().take(4).map(|b| format!("{b:02x}")).collect::<String>()
    };
    let dir = config.output_dir.join(format!("{}-{hash}", cli.command.slug()));
    std::fs::create_dir_all(&dir)?;

    let mut ctx = RunContext {
        dir: dir.clone(),
        outputs: Vec::new(),
        timings_ms: BTreeMap::new(),
        notes: Vec::new(),
    };
    let mut derivation_report = None;
    let mut parabola_fit = None;

    match cli.command {
        Command::DeriveBc => cmd_derive_bc(&config, &mut ctx, &mut derivation_report)?,
        Command::Simulate => cmd_simulate(&config, cli, &mut ctx, &mut derivation_report)?,
        Command::Compare => cmd_compare(&config, cli, &mut ctx, &mut derivation_report)?,
        Command::Scan => cmd_scan(&config, cli, &mut ctx, &mut parabola_fit)?,
        Command::CheckCauchy => cmd_check_cauchy(&config, &mut ctx)?,
    }

    let manifest = RunManifest {
        command: cli.command.slug().to_string(),
        config,
        flags: FlagSummary { frames: cli.frames, nt: cli.nt, full: cli.full },
        outputs: ctx.outputs.clone(),
        versions: BTreeMap::from([
            ("rodtbc".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ]),
        timings_ms: ctx.timings_ms.clone(),
        derivation_report,
        parabola_fit,
        notes: (!ctx.notes.is_empty()).then_some(ctx.notes.clone()),
        completed_unix: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    };
    let manifest_file = File::create(dir.join("run_manifest.json"))?;
    serde_json::to_writer_pretty(BufWriter::new(manifest_file), &manifest)
        .map_err(|e| Error::Config(format!("manifest: {e}")))?;
    println!("outputs in {}", dir.display());
    Ok(())
}

fn degrees_label(config: &Config) -> Result<String, Error> {
    let sets = config.degree_sets()?;
    let fmt = |d: &rodtbc::adtbc::DegreeSet| format!("{}-{}-{}-{}", d.dp, d.dq, d.dr, d.ds);
    Ok(if sets[0] == sets[1] {
        fmt(&sets[0])
    } else {
        format!("{}_{}", fmt(&sets[0]), fmt(&sets[1]))
    })
}

fn bc_label(config: &Config, kind: BcKind) -> Result<String, Error> {
    Ok(match kind {
        BcKind::Adtbc => format!("adtbc_{}", degrees_label(config)?),
        other => other.to_string(),
    })
}

fn derive_treatment(
    config: &Config,
    params: &ModelParams,
    report: &mut Option<DerivationReport>,
) -> Result<BoundaryTreatment, Error> {
    let degrees = config.checked_degree_sets()?;
    let (left, rep) = derive_adtbc(params, degrees, config.const_constraint)?;
    *report = Some(rep);
    let right = mirror_right_edge(&left);
    Ok(BoundaryTreatment::Adtbc { left, right })
}

fn treatment_for(
    config: &Config,
    params: &ModelParams,
    kind: BcKind,
    report: &mut Option<DerivationReport>,
) -> Result<BoundaryTreatment, Error> {
    Ok(match kind {
        BcKind::Adtbc => derive_treatment(config, params, report)?,
        BcKind::DirichletNeumann => BoundaryTreatment::DirichletNeumann,
        BcKind::DirichletMoment => BoundaryTreatment::DirichletMoment,
        BcKind::FreeFree => BoundaryTreatment::FreeFree,
    })
}

fn segment_initial_data(config: &Config, params: &ModelParams) -> Result<InitialData, Error> {
    let domain = Domain::segment(params);
    build_initial_data(
        &gaussian_derivative_profile(config.u0_shift),
        &|_| 0.0,
        &params.rod,
        params.grid.h,
        params.grid.tau,
        &domain,
    )
}

/// Warn when the constant-solution constraint is active but the sampled
/// initial profile has a non-vanishing trapezoidal integral.
fn zeroth_integral_note(config: &Config, params: &ModelParams, init: &InitialData, ctx: &mut RunContext) {
    if !config.const_constraint {
        return;
    }
    let h = params.grid.h;
    let n = init.u0.len() - 1;
    let integral = h * (0.5 * (init.u0[0] + init.u0[n]) + init.u0[1..n].iter().sum::<f64>());
    let scale = init.u0.iter().fold(0.0f64, |m, v| m.max(v.abs())) * params.rod.length;
    if integral.abs() > 1e-8 * scale {
        let note = format!(
            "const_constraint is on but the initial profile's integral is {integral:.3e} \
             (tolerance {:.3e}); the constrained ADTBCs are not expected to be transparent",
            1e-8 * scale
        );
        eprintln!("warning: {note}");
        ctx.notes.push(note);
    }
}

fn cmd_derive_bc(
    config: &Config,
    ctx: &mut RunContext,
    report: &mut Option<DerivationReport>,
) -> Result<(), Error> {
    let params = config.model()?;
    let treatment = ctx.time("derive", |_| derive_treatment(config, &params, report))?;
    let left = match &treatment {
        BoundaryTreatment::Adtbc { left, .. } => left,
        _ => unreachable!(),
    };
    let w = ctx.file("coefficients.csv")?;
    export::write_coefficient_table(w, left, false)?;
    let w = ctx.file("coefficients_human.csv")?;
    export::write_coefficient_table(w, left, true)?;
    let rep = report.as_ref().unwrap();
    println!(
        "derived ADTBCs {}; condition numbers [{:.3e}, {:.3e}], smallness orders {:?}",
        degrees_label(config)?,
        rep.condition_numbers[0],
        rep.condition_numbers[1],
        rep.smallness_orders
    );
    Ok(())
}

fn run_candidate(
    config: &Config,
    params: &ModelParams,
    kind: BcKind,
    keep_frames: bool,
    nt: Option<usize>,
    report: &mut Option<DerivationReport>,
    ctx: &mut RunContext,
) -> Result<Trajectory, Error> {
    let treatment = treatment_for(config, params, kind, report)?;
    let init = segment_initial_data(config, params)?;
    if kind == BcKind::Adtbc {
        zeroth_integral_note(config, params, &init, ctx);
    }
    let domain = Domain::segment(params);
    let opts = RunOptions { keep_frames, window: None, steps_override: nt };
    run(params, &domain, &treatment, &init, &opts)
}

fn cmd_simulate(
    config: &Config,
    cli: &Cli,
    ctx: &mut RunContext,
    report: &mut Option<DerivationReport>,
) -> Result<(), Error> {
    let params = config.model()?;
    let label = bc_label(config, config.bc)?;
    let traj = ctx.time("simulate", |ctx| {
        run_candidate(config, &params, config.bc, cli.frames, cli.nt, report, ctx)
    })?;
    let w = ctx.file(&format!("norms_{label}.csv"))?;
    export::write_norms(w, &traj.norms)?;
    if cli.frames {
        let w = ctx.file(&format!("frames_{label}.csv"))?;
        export::write_frames(w, &traj)?;
    }
    let e0 = traj.norms.h_half.first().copied().unwrap_or(0.0);
    let emax = traj.norms.h_half.iter().cloned().fold(0.0f64, f64::max);
    println!(
        "simulated {} steps under {label}: sqrt(H) start {:.6e}, max {:.6e}",
        traj.norms.t.len() - 1,
        e0.sqrt(),
        emax.sqrt()
    );
    Ok(())
}

fn cmd_compare(
    config: &Config,
    cli: &Cli,
    ctx: &mut RunContext,
    report: &mut Option<DerivationReport>,
) -> Result<(), Error> {
    let params = config.model()?;
    let profile = gaussian_derivative_profile(config.u0_shift);
    let reference = ctx.time("reference", |_| {
        reference_run(
            &params,
            &profile,
            &|_| 0.0,
            config.reference_half_width,
            &RunOptions { keep_frames: true, window: None, steps_override: cli.nt },
        )
    })?;
    let w = ctx.file("reference_norms.csv")?;
    export::write_norms(w, &reference.norms)?;

    // decay fit of the reference-restriction energy norm (reported, not asserted)
    let half_times = reference.norms.half_times(params.grid.tau);
    let energy = reference.norms.energy_norm();
    match decay_fit(&half_times, &energy, (config.fit_t_lo, config.fit_t_hi)) {
        Ok((c, e)) => {
            let note =
                format!("reference energy-norm decay fit on [{}, {}]: {c:.4e} * t^{e:.4}", config.fit_t_lo, config.fit_t_hi);
            println!("{note}");
            ctx.notes.push(note);
        }
        Err(err) => ctx.notes.push(format!("decay fit skipped: {err}")),
    }

    for kind in [
        BcKind::Adtbc,
        BcKind::DirichletNeumann,
        BcKind::DirichletMoment,
        BcKind::FreeFree,
    ] {
        let label = bc_label(config, kind)?;
        let traj = ctx.time(&format!("run_{label}"), |ctx| {
            run_candidate(config, &params, kind, true, cli.nt, report, ctx)
        })?;
        let errors = error_series(&traj, &reference, &params.rod)?;
        let w = ctx.file(&format!("errors_{label}.csv"))?;
        export::write_error_series(w, &errors)?;
        if kind == BcKind::Adtbc {
            let w = ctx.file(&format!("heatmap_{label}.csv"))?;
            export::write_difference_heatmap(w, &traj, &reference)?;
        }
        let final_c = errors.c.last().copied().unwrap_or(f64::NAN);
        println!("{label}: final C-norm error {final_c:.6e}");
    }
    Ok(())
}

fn cmd_scan(
    config: &Config,
    cli: &Cli,
    ctx: &mut RunContext,
    fit_out: &mut Option<ParabolaFit>,
) -> Result<(), Error> {
    let rod = config.rod()?;
    let mut settings = config.scan_settings()?;
    if cli.full {
        settings.n_t = 100_000;
    }
    if let Some(nt) = cli.nt {
        settings.n_t = nt;
    }
    let map = ctx.time("scan", |_| scan_stability(&rod, &settings))?;
    ctx.notes.push(format!(
        "scan N_t = {}; per-cell initial data: standard profile sampled on that cell's grid",
        settings.n_t
    ));
    let w = ctx.file("stability_map.csv")?;
    export::write_stability_map(w, &map)?;
    let stable = map.cells.iter().filter(|c| c.stable_all()).count();
    println!(
        "scanned {} cells (N_t = {}): {} stable under all criteria; single band: {}",
        map.cells.len(),
        settings.n_t,
        stable,
        map.has_single_band()
    );
    match fit_parabolas(&map) {
        Ok(fit) => {
            let w = ctx.file("parabola_fit.csv")?;
            export::write_parabola_fit(w, &fit)?;
            let sqrt_c = rod.c_coeff().sqrt();
            println!(
                "band fit: {:.4}*h^2 < tau < {:.4}*h^2 (R^2 = {:.3}, {:.3}); \
                 dimensionless B = A*sqrt(C): ({:.4}, {:.4})",
                fit.a_lower,
                fit.a_upper,
                fit.r2_lower,
                fit.r2_upper,
                fit.a_lower * sqrt_c,
                fit.a_upper * sqrt_c
            );
            *fit_out = Some(fit);
        }
        Err(err) => {
            let note = format!("parabola fit unavailable: {err}");
            eprintln!("warning: {note}");
            ctx.notes.push(note);
        }
    }
    Ok(())
}

fn cmd_check_cauchy(config: &Config, ctx: &mut RunContext) -> Result<(), Error> {
    let params = config.model()?;
    let (nu, mu) = (params.coeffs.nu, params.coeffs.mu);
    let max_modulus = max_cauchy_modulus(nu, mu, 10_000);
    let at_zero = rodtbc::stability::cauchy_amplification(0.0, nu, mu).0;
    let threshold = 1.0 + 1e-12;
    let w = ctx.file("cauchy_report.csv")?;
    export::write_cauchy_report(w, max_modulus, at_zero, threshold)?;
    let pass = max_modulus <= threshold;
    println!(
        "cauchy symbol: max modulus {max_modulus:.15} over 10000 phases (nu = {nu:.6}, mu = {mu:.6}): {}",
        if pass { "PASS" } else { "FAIL" }
    );
    Ok(())
}
