//! CSV artifact writers. Machine files carry 17-significant-digit doubles;
//! human-readable coefficient tables round to 6 decimals. Fields never need
//! quoting (plain numbers and fixed words), which keeps the output RFC-4180
//! compliant as written.

use crate::adtbc::BoundaryOperator;
use crate::diagnostics::NormSeries;
use crate::stability::{ParabolaFit, StabilityMap};
use crate::stepper::Trajectory;
use crate::Result;
use std::io::Write;

fn machine(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v:.16e}")
    }
}

/// Coefficient table: one row per power of ω, columns
/// P1 Q1 R1 S1 P2 Q2 R2 S2, blank where the degree is exceeded.
pub fn write_coefficient_table<W: Write>(
    mut w: W,
    op: &BoundaryOperator,
    human: bool,
) -> Result<()> {
    writeln!(w, "power,P1,Q1,R1,S1,P2,Q2,R2,S2")?;
    let max_power = op
        .coeffs
        .iter()
        .flat_map(|lists| lists.iter().map(|l| l.len()))
        .max()
        .unwrap_or(1)
        - 1;
    for power in 0..=max_power {
        let mut row = vec![power.to_string()];
        for k in 0..2 {
            for poly in 0..4 {
                row.push(match op.coeffs[k][poly].get(power) {
                    Some(&v) if human => format!("{v:.6}"),
                    Some(&v) => machine(v),
                    None => String::new(),
                });
            }
        }
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Norm history: `t,H_half,C,L2`. `H_half` on row n is Ĥ[u^{n+1/2}] (the
/// energy of the step leaving layer n), so the final row leaves it blank.
pub fn write_norms<W: Write>(mut w: W, norms: &NormSeries) -> Result<()> {
    writeln!(w, "t,H_half,C,L2")?;
    for i in 0..norms.t.len() {
        let h = norms.h_half.get(i).map(|&v| machine(v)).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{}",
            machine(norms.t[i]),
            h,
            machine(norms.c[i]),
            machine(norms.l2[i])
        )?;
    }
    Ok(())
}

/// Frame dump: `t,x,u` for every stored layer.
pub fn write_frames<W: Write>(mut w: W, traj: &Trajectory) -> Result<()> {
    writeln!(w, "t,x,u")?;
    if let Some(frames) = &traj.frames {
        for (n, frame) in frames.iter().enumerate() {
            let t = n as f64 * traj.tau;
            for (j, &u) in frame.iter().enumerate() {
                let x = traj.window_x_left + j as f64 * traj.h;
                writeln!(w, "{},{},{}", machine(t), machine(x), machine(u))?;
            }
        }
    }
    Ok(())
}

/// Error-norm history in decimal-log form:
/// `t,log10_H,log10_C,log10_L2`, where `log10_H` is log₁₀√Ĥ[u−u*] at the
/// half step following row n (blank on the final row).
pub fn write_error_series<W: Write>(mut w: W, errors: &NormSeries) -> Result<()> {
    writeln!(w, "t,log10_H,log10_C,log10_L2")?;
    for i in 0..errors.t.len() {
        let h = errors
            .h_half
            .get(i)
            .map(|&v| machine(v.sqrt().log10()))
            .unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{}",
            machine(errors.t[i]),
            h,
            machine(errors.c[i].log10()),
            machine(errors.l2[i].log10())
        )?;
    }
    Ok(())
}

/// Space-time decimal log of |u − u*|: `t,x,log10_abs_diff`.
pub fn write_difference_heatmap<W: Write>(
    mut w: W,
    traj: &Trajectory,
    reference: &Trajectory,
) -> Result<()> {
    writeln!(w, "t,x,log10_abs_diff")?;
    let (frames, ref_frames) = match (&traj.frames, &reference.frames) {
        (Some(a), Some(b)) => (a, b),
        _ => return Ok(()),
    };
    for (n, (a, b)) in frames.iter().zip(ref_frames).enumerate() {
        let t = n as f64 * traj.tau;
        for (j, (&ua, &ub)) in a.iter().zip(b).enumerate() {
            let x = traj.window_x_left + j as f64 * traj.h;
            writeln!(
                w,
                "{},{},{}",
                machine(t),
                machine(x),
                machine((ua - ub).abs().log10())
            )?;
        }
    }
    Ok(())
}

/// Stability map: `h,tau,bc_exists,stable_energy,stable_C,stable_L2,first_violation_step`.
pub fn write_stability_map<W: Write>(mut w: W, map: &StabilityMap) -> Result<()> {
    writeln!(w, "h,tau,bc_exists,stable_energy,stable_C,stable_L2,first_violation_step")?;
    for cell in &map.cells {
        let verdicts = if cell.bc_exists {
            format!(
                "{},{},{}",
                cell.stable_energy(),
                cell.stable_c(),
                cell.stable_l2()
            )
        } else {
            ",,".to_string()
        };
        let first = cell
            .first_violation()
            .map(|v| v.to_string())
            .unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{}",
            machine(cell.h),
            machine(cell.tau),
            cell.bc_exists,
            verdicts,
            first
        )?;
    }
    Ok(())
}

/// Parabola fit summary: `boundary,A,r_squared`.
pub fn write_parabola_fit<W: Write>(mut w: W, fit: &ParabolaFit) -> Result<()> {
    writeln!(w, "boundary,A,r_squared")?;
    writeln!(w, "lower,{},{}", machine(fit.a_lower), machine(fit.r2_lower))?;
    writeln!(w, "upper,{},{}", machine(fit.a_upper), machine(fit.r2_upper))?;
    Ok(())
}

/// Cauchy symbol report: `max_modulus,modulus_at_zero,threshold,pass`.
pub fn write_cauchy_report<W: Write>(
    mut w: W,
    max_modulus: f64,
    modulus_at_zero: f64,
    threshold: f64,
) -> Result<()> {
    writeln!(w, "max_modulus,modulus_at_zero,threshold,pass")?;
    writeln!(
        w,
        "{},{},{},{}",
        machine(max_modulus),
        machine(modulus_at_zero),
        machine(threshold),
        max_modulus <= threshold
    )?;
    Ok(())
}
