//! Obstacle-problem properties: the supersolution characterisation,
//! comparison in the data, L∞ stability, bounds and continuous dependence.

use std::sync::Arc;

use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::{BoxGrid, DomainMask};
use crate::linalg;
use crate::operator::SpdOperator;
use crate::spectral_op::NavierOperator;
use crate::vi_solver::{
    solve_active_set_enum, solve_penalty, solve_psor, Obstacle, ObstacleProblem, PenaltyConfig, PsorConfig, Solution,
};

use super::instances::{random_forcing, random_obstacle, random_vector, sparse_nonnegative, unit_interval};
use super::{job_rng, run_jobs, CheckConfig, Margin, TheoremReport};

pub(crate) fn psor(op: &dyn SpdOperator, psi: &[f64], f: &[f64]) -> Result<Solution> {
    let obstacle = Obstacle::Lower(psi.to_vec());
    solve_psor(&ObstacleProblem::new(op, &obstacle, f)?, &PsorConfig::default())
}

pub(crate) fn scale_of(op: &dyn SpdOperator, psi: &[f64], f: &[f64]) -> Result<f64> {
    let obstacle = Obstacle::Lower(psi.to_vec());
    ObstacleProblem::new(op, &obstacle, f)?.scale()
}

fn min_of(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(f64::INFINITY, f64::min)
}

pub fn check_vi_theorems(config: &CheckConfig) -> Result<Vec<TheoremReport>> {
    run_jobs(config, |s, n| {
        let mut out = characterisation(config, s, n)?;
        out.extend(dependence(config, s, n)?);
        out.push(uniqueness(config, s, n)?);
        Ok(out)
    })
}

/// Random `v ∈ K`: either `u + |noise|` or `ψ ∨ (u + noise)`.
fn k_member<R: Rng>(rng: &mut R, u: &[f64], psi: &[f64], k: usize) -> Vec<f64> {
    let amp = 0.1 * (1.0 + linalg::norm_inf(u));
    let noise = linalg::scale(&random_vector(rng, u.len()), amp);
    if k.is_multiple_of(2) {
        u.iter().zip(&noise).map(|(a, b)| a + b.abs()).collect()
    } else {
        (0..u.len()).map(|i| psi[i].max(u[i] + noise[i])).collect()
    }
}

fn characterisation(config: &CheckConfig, s: f64, n: usize) -> Result<Vec<TheoremReport>> {
    let tol = config.tol.absolute;
    let mut rng = job_rng(config.seed, "vi.characterisation", s, n);
    let op = NavierOperator::new(unit_interval(n)?, s)?;
    let psi = random_obstacle(&mut rng, op.mask());
    let f = random_forcing(&mut rng, op.mask(), 5.0);
    let scale = scale_of(&op, &psi, &f)?;
    let sol = psor(&op, &psi, &f)?;
    let u = &sol.u;
    let w = op.weight();
    let descriptor = "random cap obstacle and smooth forcing on the interval";

    let mut smallest = TheoremReport::new("T:sup.b", Some(s), n, descriptor);
    let torsion = op.solve(&vec![1.0; n])?;
    for _ in 0..config.counts.supersolutions {
        let g = sparse_nonnegative(&mut rng, n);
        let omega = op.solve(&linalg::add(&f, &g))?;
        // Lift into K with the smallest multiple of L⁻¹1 that clears ψ.
        let t = (0..n).map(|i| (psi[i] - omega[i]) / torsion[i]).fold(0.0, f64::max);
        let big_u: Vec<f64> = (0..n).map(|i| omega[i] + t * torsion[i]).collect();
        let residual = linalg::sub(&op.apply(&big_u)?, &f);
        smallest.record(Margin::inequality("supersolution: min(L U − f)", min_of(residual) / scale, tol));
        smallest.record(Margin::inequality("U ∈ K: min(U − ψ)", min_of((0..n).map(|i| big_u[i] - psi[i])), tol));
        smallest.record(Margin::inequality("min(U − u)", min_of((0..n).map(|i| big_u[i] - u[i])), tol));
        smallest.instance_done();
    }

    let mut identity = TheoremReport::new("T:sup.c", Some(s), n, descriptor);
    let mut variational = TheoremReport::new("T:sup.d", Some(s), n, descriptor);
    identity.record(Margin::inequality("supersolution: min μ", min_of(sol.mu.iter().copied()) / scale, tol));
    variational.record(Margin::inequality("v = u", -linalg::wdot(w, &sol.mu, &linalg::sub(u, u)).abs(), 0.0));
    for k in 0..config.counts.k_members {
        let v = k_member(&mut rng, u, &psi, k);
        let diff = linalg::sub(&v, u);
        let size = 1.0 + linalg::norm_inf(&diff);
        let pairing = linalg::wdot(w, &sol.mu, &linalg::negative_part(&diff));
        identity.record(Margin::inequality("−|⟨μ, (v − u)⁻⟩|", -pairing.abs() / (scale * size), tol));
        let lv = linalg::sub(&op.apply(&v)?, &f);
        let value = linalg::wdot(w, &lv, &diff);
        variational.record(Margin::inequality("⟨L v − f, v − u⟩", value / (scale * size * size), tol));
        identity.instance_done();
        variational.instance_done();
    }
    Ok(vec![smallest, identity, variational])
}

fn dependence(config: &CheckConfig, s: f64, n: usize) -> Result<Vec<TheoremReport>> {
    let tol = config.tol.absolute;
    let mut rng = job_rng(config.seed, "vi.dependence", s, n);
    let op = NavierOperator::new(unit_interval(n)?, s)?;
    let mask = op.mask();
    let descriptor = "random obstacle/forcing pairs on the interval";

    let mut stability = TheoremReport::new("T:bounded1", Some(s), n, descriptor);
    let mut forcing = TheoremReport::new("compare_f", Some(s), n, descriptor);
    let mut obstacle_order = TheoremReport::new("T:sup.b.obstacle-order", Some(s), n, descriptor);
    let mut bounds = TheoremReport::new("C:infty", Some(s), n, descriptor);
    for k in 0..config.counts.obstacle_pairs {
        let psi1 = random_obstacle(&mut rng, mask);
        let f = if k % 3 == 0 { vec![0.0; n] } else { random_forcing(&mut rng, mask, 5.0) };
        let psi2 = match k % 5 {
            0 => {
                let c = rng.random_range(0.0..0.5);
                psi1.iter().map(|p| p + c).collect()
            }
            1 | 2 => random_obstacle(&mut rng, mask),
            _ => {
                let amp = rng.random_range(0.0..0.5);
                linalg::add(&psi1, &linalg::scale(&random_vector(&mut rng, n), amp))
            }
        };
        let u1 = psor(&op, &psi1, &f)?.u;
        let u2 = psor(&op, &psi2, &f)?.u;
        let dpsi = linalg::sub(&psi1, &psi2);
        let du = linalg::sub(&u1, &u2);
        let norm = |v: Vec<f64>| linalg::norm_inf(&v);
        stability.record(Margin::inequality(
            "i) ‖(ψ1−ψ2)⁺‖ − ‖(u1−u2)⁺‖",
            norm(linalg::positive_part(&dpsi)) - norm(linalg::positive_part(&du)),
            tol,
        ));
        stability.record(Margin::inequality(
            "ii) ‖(ψ1−ψ2)⁻‖ − ‖(u1−u2)⁻‖",
            norm(linalg::negative_part(&dpsi)) - norm(linalg::negative_part(&du)),
            tol,
        ));
        stability.record(Margin::inequality("‖ψ1−ψ2‖ − ‖u1−u2‖", norm(dpsi.clone()) - norm(du.clone()), tol));
        if k % 5 == 0 {
            let c = psi2[0] - psi1[0];
            stability.record(Margin::inequality("constant shift: min(u2 − u1)", min_of(du.iter().map(|d| -d)), tol));
            stability.record(Margin::inequality("constant shift: c − max(u2 − u1)", c + min_of(du.iter().copied()), tol));
        }
        stability.instance_done();

        let g = sparse_nonnegative(&mut rng, n);
        let f_low = linalg::sub(&f, &g);
        let u_low = psor(&op, &psi1, &f_low)?.u;
        forcing.record(Margin::inequality("f1 ≥ f2 ⇒ min(u1 − u2)", min_of(linalg::sub(&u1, &u_low)), tol));
        forcing.instance_done();

        let lowered: Vec<f64> = psi1
            .iter()
            .map(|p| p - rng.random_range(0.0..0.3))
            .collect();
        let u_lowered = psor(&op, &lowered, &f)?.u;
        obstacle_order.record(Margin::inequality(
            "ψ1 ≥ ψ2 ⇒ min(u1 − u2)",
            min_of(linalg::sub(&u1, &u_lowered)),
            tol,
        ));
        obstacle_order.instance_done();

        let omega = op.solve(&f)?;
        let floor: Vec<f64> = (0..n).map(|i| psi1[i].max(omega[i])).collect();
        bounds.record(Margin::inequality("min(u − ψ ∨ ω_f)", min_of(linalg::sub(&u1, &floor)), tol));
        if f.iter().all(|&x| x == 0.0) {
            let top = linalg::norm_inf(&linalg::positive_part(&psi1));
            bounds.record(Margin::inequality(
                "f = 0: min(u − ψ⁺)",
                min_of(linalg::sub(&u1, &linalg::positive_part(&psi1))),
                tol,
            ));
            bounds.record(Margin::inequality(
                "f = 0: ‖ψ⁺‖∞ − max u",
                top - u1.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                tol,
            ));
        }
        bounds.instance_done();
    }
    // Nonpositive obstacle without forcing: everything collapses to zero.
    let negative: Vec<f64> = random_obstacle(&mut rng, mask).iter().map(|p| -p.abs() - 0.01).collect();
    let u0 = psor(&op, &negative, &vec![0.0; n])?.u;
    bounds.record(Margin::inequality("ψ ≤ 0, f = 0: −‖u‖∞", -linalg::norm_inf(&u0), tol));

    let mut linfty = TheoremReport::new("T:Linfty", Some(s), n, "ψ_h = ψ + δ r, δ ∈ {1e-1,…,1e-4}; energy-norm gaps");
    let mut hs = TheoremReport::new("T:Hs2", Some(s), n, "(ψ_h, f_h) = (ψ, f) + δ (r, q), δ ∈ {1e-1,…,1e-4}");
    for (report, perturb_f) in [(&mut linfty, false), (&mut hs, true)] {
        for _ in 0..3 {
            let psi = random_obstacle(&mut rng, mask);
            let f = random_forcing(&mut rng, mask, 5.0);
            let r = random_vector(&mut rng, n);
            let q = random_forcing(&mut rng, mask, 1.0);
            let u = psor(&op, &psi, &f)?.u;
            let energy = op.quadratic_form(&u)?.sqrt();
            let mut gaps = Vec::new();
            for delta in [1e-1, 1e-2, 1e-3, 1e-4] {
                let psi_h = linalg::add(&psi, &linalg::scale(&r, delta));
                let f_h = if perturb_f { linalg::add(&f, &linalg::scale(&q, delta)) } else { f.clone() };
                let u_h = psor(&op, &psi_h, &f_h)?.u;
                gaps.push(op.quadratic_form(&linalg::sub(&u_h, &u))?.sqrt() / (1.0 + energy));
            }
            for pair in gaps.windows(2) {
                report.record(Margin::inequality("energy gap decrease", pair[0] - pair[1], tol));
            }
            report.record(Margin::info("final relative energy gap", gaps[3]));
            report.instance_done();
        }
    }
    Ok(vec![stability, forcing, obstacle_order, bounds, linfty, hs])
}

/// PSOR, the enumeration oracle and a fine penalty solve must agree.
fn uniqueness(config: &CheckConfig, s: f64, n: usize) -> Result<TheoremReport> {
    let tol = config.tol.absolute;
    let mut rng = job_rng(config.seed, "vi.uniqueness", s, n);
    let grid = Arc::new(BoxGrid::unit_interval(12)?);
    let mut report = TheoremReport::new(
        "T:sup.unique",
        Some(s),
        n,
        "random submasks with 3–10 nodes of a 12-node interval",
    );
    let mut penalty_failures = 0;
    for _ in 0..config.counts.uniqueness_instances {
        let m = rng.random_range(3..=10);
        let mut idx = sample(&mut rng, 12, m).into_vec();
        idx.sort_unstable();
        let mask = Arc::new(DomainMask::from_indices(grid.clone(), idx)?);
        let op = NavierOperator::new(mask.clone(), s)?;
        let psi = random_obstacle(&mut rng, &mask);
        let f = random_forcing(&mut rng, &mask, 5.0);
        let obstacle = Obstacle::Lower(psi);
        let problem = ObstacleProblem::new(&op, &obstacle, &f)?;
        let a = solve_psor(&problem, &PsorConfig::default())?;
        let b = solve_active_set_enum(&problem)?;
        report.record(Margin::inequality("−‖u_psor − u_enum‖∞", -linalg::max_abs_diff(&a.u, &b.u), tol));
        let eps = 1e-7;
        match solve_penalty(&problem, &PenaltyConfig { certify: false, ..PenaltyConfig::new(eps) }) {
            Ok(p) => report.record(Margin::inequality(
                "−‖u_penalty − u_enum‖∞ (ε = 1e-7)",
                -linalg::max_abs_diff(&p.solution.u, &b.u),
                1e-6,
            )),
            Err(Error::IterationCap { .. }) => penalty_failures += 1,
            Err(e) => return Err(e),
        }
        report.instance_done();
    }
    if penalty_failures > 0 {
        report.note(format!("penalty iteration did not converge on {penalty_failures} instances"));
    }
    Ok(report)
}
