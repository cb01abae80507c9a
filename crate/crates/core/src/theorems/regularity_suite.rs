//! Two-sided bounds on the multiplier `μ = L u − f` and the penalty route.

use crate::error::Result;
use crate::linalg;
use crate::operator::SpdOperator;
use crate::spectral_op::NavierOperator;
use crate::vi_solver::{solve_penalty, Obstacle, ObstacleProblem, PenaltyConfig};

use super::instances::{random_forcing, random_obstacle, unit_interval};
use super::vi_suite::{psor, scale_of};
use super::{job_rng, run_jobs, CheckConfig, Margin, TheoremReport};

pub const PENALTY_EPS: [f64; 3] = [1e-1, 1e-2, 1e-3];

/// Upper bounds for `μ` at one instance: the stated `(L(ψ−ω_f)⁺ − f)⁺` and
/// the one obtained from the shift `u ↦ u − ω_f`, `(L(ψ−ω_f)⁺)⁺`.
pub struct MultiplierBounds {
    pub stated: Vec<f64>,
    pub shifted: Vec<f64>,
}

pub fn multiplier_bounds(op: &dyn SpdOperator, psi: &[f64], f: &[f64]) -> Result<MultiplierBounds> {
    let omega = op.solve(f)?;
    let lifted = op.apply(&linalg::positive_part(&linalg::sub(psi, &omega)))?;
    Ok(MultiplierBounds {
        stated: linalg::positive_part(&linalg::sub(&lifted, f)),
        shifted: linalg::positive_part(&lifted),
    })
}

fn min_gap(upper: &[f64], value: &[f64]) -> f64 {
    upper.iter().zip(value).map(|(a, b)| a - b).fold(f64::INFINITY, f64::min)
}

pub fn check_regularity_theorems(config: &CheckConfig) -> Result<Vec<TheoremReport>> {
    run_jobs(config, |s, n| regularity_job(config, s, n))
}

fn regularity_job(config: &CheckConfig, s: f64, n: usize) -> Result<Vec<TheoremReport>> {
    let tol = config.tol.absolute;
    let mut rng = job_rng(config.seed, "regularity", s, n);
    let op = NavierOperator::new(unit_interval(n)?, s)?;
    let mask = op.mask();
    let descriptor = "random cap obstacles; f = 0 for every third instance, smooth signed forcing otherwise";

    let mut stated = TheoremReport::new("T:measure", Some(s), n, descriptor);
    let mut shifted = TheoremReport::new("T:measure.shifted-bound", Some(s), n, descriptor);
    let mut localisation = TheoremReport::new("T:regularity.iii", Some(s), n, descriptor);

    let mut instances: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    // First-eigenmode obstacle with f = 0: the upper bound is λ₁^s ψ.
    let phi = linalg::positive_part(&op.decomposition().eigenvector(0));
    let top = linalg::norm_inf(&phi);
    let phi = if top > 0.0 {
        linalg::scale(&phi, 1.0 / top)
    } else {
        linalg::scale(&linalg::negative_part(&op.decomposition().eigenvector(0)), 1.0 / linalg::norm_inf(&op.decomposition().eigenvector(0)))
    };
    instances.push((phi, vec![0.0; n]));
    for k in 0..config.counts.regularity_instances {
        let psi = random_obstacle(&mut rng, mask);
        let f = if k % 3 == 0 { vec![0.0; n] } else { random_forcing(&mut rng, mask, 5.0) };
        instances.push((psi, f));
    }

    for (psi, f) in &instances {
        let scale = scale_of(&op, psi, f)?;
        let sol = psor(&op, psi, f)?;
        let bounds = multiplier_bounds(&op, psi, f)?;
        let lower = sol.mu.iter().cloned().fold(f64::INFINITY, f64::min);
        for report in [&mut stated, &mut shifted] {
            report.record(Margin::inequality("min μ", lower / scale, tol));
        }
        stated.record(Margin::inequality(
            "min((L(ψ−ω_f)⁺ − f)⁺ − μ)",
            min_gap(&bounds.stated, &sol.mu) / scale,
            tol,
        ));
        shifted.record(Margin::inequality(
            "min((L(ψ−ω_f)⁺)⁺ − μ)",
            min_gap(&bounds.shifted, &sol.mu) / scale,
            tol,
        ));

        let delta = 1e-6 * scale;
        let off_contact = (0..n)
            .filter(|&i| sol.u[i] > psi[i] + delta)
            .map(|i| sol.mu[i])
            .fold(f64::NEG_INFINITY, f64::max);
        if off_contact.is_finite() {
            localisation.record(Margin::inequality("−max μ off the contact set", -off_contact / scale, tol));
        }
        let complementarity = (0..n)
            .map(|i| sol.mu[i] * (sol.u[i] - psi[i]))
            .fold(f64::NEG_INFINITY, f64::max);
        localisation.record(Margin::inequality("−max μ(u − ψ)", -complementarity / scale, tol));
        for r in [&mut stated, &mut shifted, &mut localisation] {
            r.instance_done();
        }
    }

    let mut sandwich = TheoremReport::new(
        "T:measure.penalty",
        Some(s),
        n,
        "penalty solutions for ε ∈ {1e-1, 1e-2, 1e-3} against PSOR",
    );
    for (k, (psi, f)) in instances.iter().skip(1).take(config.counts.penalty_instances).enumerate() {
        let obstacle = Obstacle::Lower(psi.clone());
        let problem = ObstacleProblem::new(&op, &obstacle, f)?;
        let scale = problem.scale()?;
        let reference = psor(&op, psi, f)?;
        let bounds = multiplier_bounds(&op, psi, f)?;
        let mut gaps = Vec::new();
        for eps in PENALTY_EPS {
            let pen = solve_penalty(&problem, &PenaltyConfig { certify: false, ..PenaltyConfig::new(eps) })?;
            let u_eps = &pen.solution.u;
            sandwich.record(Margin::inequality(
                format!("ε = {eps}: min(u_ε − u)"),
                min_gap(u_eps, &reference.u),
                tol,
            ));
            sandwich.record(Margin::inequality(
                format!("ε = {eps}: min(u + ε − u_ε)"),
                (0..n).map(|i| reference.u[i] + eps - u_eps[i]).fold(f64::INFINITY, f64::min),
                tol,
            ));
            let mu = &pen.solution.mu;
            sandwich.record(Margin::inequality(
                "min μ_ε",
                mu.iter().cloned().fold(f64::INFINITY, f64::min) / scale,
                tol,
            ));
            sandwich.record(Margin::inequality(
                "min((L(ψ−ω_f)⁺)⁺ − μ_ε)",
                min_gap(&bounds.shifted, mu) / scale,
                tol + eps,
            ));
            gaps.push(linalg::max_abs_diff(u_eps, &reference.u));
        }
        for pair in gaps.windows(2) {
            sandwich.record(Margin::inequality("‖u_ε − u‖∞ decreases with ε", pair[0] - pair[1], tol));
        }
        if k == 0 {
            sandwich.record(Margin::info("‖u_ε − u‖∞ at ε = 1e-3, first instance", gaps[2]));
        }
        sandwich.instance_done();
    }
    Ok(vec![stated, shifted, localisation, sandwich])
}
