//! The degenerate-elliptic extension in `y`: calibration of `c_s`, the
//! `λ^s` scaling of the Neumann trace and the energy identity.

use crate::error::Result;
use crate::extension::{
    calibrate_cs, closed_form_cs, energy_identity_check, neumann_trace, solve_mode_ode, ModeMesh, YMesh,
    CALIBRATION_CELLS, DEFAULT_SPAN,
};
use crate::spectral_op::NavierOperator;

use super::instances::{random_vector, unit_interval};
use super::{job_rng, run_jobs, CheckConfig, Margin, TheoremReport};

/// Allowed relative gap between the calibrated and the closed-form `c_s`.
pub const CALIBRATION_GAP: f64 = 5e-3;
/// Allowed relative error of the `λ^s` trace scaling.
pub const SCALING_GAP: f64 = 1e-2;
/// Allowed error of the `s = ½` trace against `√λ`.
pub const HALF_TRACE_GAP: f64 = 1e-3;
pub const ENERGY_CELLS: [usize; 3] = [100, 200, 400];

pub fn check_extension(config: &CheckConfig) -> Result<Vec<TheoremReport>> {
    let first = (config.orders[0], config.sizes[0]);
    run_jobs(config, |s, n| {
        let mut out = extension_job(config, s, n)?;
        if (s, n) == first {
            out.push(half_order_trace()?);
        }
        Ok(out)
    })
}

/// At `s = ½` the extension of a mode is `e^{−√λ y}`, whose trace is `√λ`.
fn half_order_trace() -> Result<TheoremReport> {
    let mut report = TheoremReport::new(
        "ext.trace.half",
        Some(0.5),
        CALIBRATION_CELLS,
        "s = 1/2, λ ∈ {1, 4}: Neumann trace against √λ",
    );
    let mesh = YMesh::for_order(0.5, DEFAULT_SPAN, CALIBRATION_CELLS)?;
    for lambda in [1.0f64, 4.0] {
        let trace = neumann_trace(&solve_mode_ode(0.5, lambda, &mesh)?);
        let err = (trace - lambda.sqrt()).abs() / lambda.sqrt();
        report.record(Margin::inequality(format!("λ = {lambda}: 1e-3 − relative error"), HALF_TRACE_GAP - err, 0.0));
        report.instance_done();
    }
    Ok(report)
}

fn extension_job(config: &CheckConfig, s: f64, n: usize) -> Result<Vec<TheoremReport>> {
    let ids = ["ext.calibration", "ext.scaling", "ext.truncation", "ext.energy", "ext.profile"];
    let mut reports: Vec<TheoremReport> = ids
        .iter()
        .map(|id| TheoremReport::new(*id, Some(s), n, "graded y-mesh, span 20"))
        .collect();
    if s >= 1.0 {
        for r in &mut reports {
            r.mark_vacuous("s = 1 needs no extension: the operator is local");
        }
        return Ok(reports);
    }
    let [calibration, scaling, truncation, energy, profile] = &mut reports[..] else {
        unreachable!("one report per id")
    };

    let cal = calibrate_cs(s)?;
    calibration.record(Margin::inequality("0.5% − |c_s − closed form| / closed form", CALIBRATION_GAP - cal.relative_gap, 0.0));
    calibration.record(Margin::info("calibrated c_s", cal.calibrated));
    calibration.instance_done();

    let mesh = YMesh::for_order(s, DEFAULT_SPAN, CALIBRATION_CELLS)?;
    let unit = neumann_trace(&solve_mode_ode(s, 1.0, &mesh)?);
    for lambda in [4.0f64, 16.0, 100.0] {
        let trace = neumann_trace(&solve_mode_ode(s, lambda, &mesh)?);
        let err = (trace / unit / lambda.powf(s) - 1.0).abs();
        scaling.record(Margin::inequality(format!("λ = {lambda}: 1% − relative error"), SCALING_GAP - err, 0.0));
        scaling.instance_done();
    }

    // Doubling the span with the extra cells geometrically spaced must not
    // move the trace: the profile has decayed like e^{−y}.
    let longer = mesh.extended(2.0 * DEFAULT_SPAN, 1.05)?;
    let far = neumann_trace(&solve_mode_ode(s, 1.0, &longer)?);
    truncation.record(Margin::inequality("span 20 vs 40: relative trace change", -(far - unit).abs() / unit, 1e-6));
    truncation.instance_done();

    let mut rng = job_rng(config.seed, "extension.energy", s, n);
    let navier = NavierOperator::new(unit_interval(n)?, s)?;
    let samples = [navier.decomposition().eigenvector(0), random_vector(&mut rng, n)];
    for v in &samples {
        let errors = ENERGY_CELLS
            .iter()
            .map(|&cells| {
                energy_identity_check(&navier, v, &ModeMesh { cells, span: DEFAULT_SPAN }, &config.exec)
                    .map(|e| e.relative_error)
            })
            .collect::<Result<Vec<_>>>()?;
        let last = *errors.last().expect("at least one mesh");
        energy.record(Margin::inequality("finest-mesh relative error below tolerance", config.tol.extension - last, 0.0));
        for pair in errors.windows(2) {
            energy.record(Margin::inequality("error decreases under refinement", pair[0] - pair[1], 0.0));
        }
        energy.record(Margin::info("finest-mesh relative error", last));
        energy.instance_done();
    }

    for lambda in [1.0, 10.0, 1000.0] {
        let p = solve_mode_ode(s, lambda, &mesh.scaled(1.0 / f64::sqrt(lambda)))?;
        let ok = p.satisfies_maximum_principle();
        profile.record(Margin::inequality("0 < θ < 1, θ decreasing", if ok { 0.0 } else { -1.0 }, 0.0));
        profile.instance_done();
    }
    profile.record(Margin::info("closed-form c_s", closed_form_cs(s)));
    Ok(reports)
}
