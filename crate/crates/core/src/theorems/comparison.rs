//! Obstacle problems for the spectral (Navier) and the restricted
//! (Dirichlet) fractional Laplacian with the same obstacle and `f = 0`.

use std::sync::Arc;

use crate::error::Result;
use crate::grid::{BoxGrid, DomainMask};
use crate::linalg;
use crate::operator::SpdOperator;
use crate::restricted_op::RestrictedOperator;
use crate::spectral_op::NavierOperator;
use crate::vi_solver::{solve_psor, Obstacle, ObstacleProblem, PsorConfig, Solution};

use super::instances::{middle_third_bump, plateau, twin_bumps, unit_interval};
use super::{run_jobs, CheckConfig, Margin, PositivitySet, TheoremReport, MAX_2D_SIDE};

/// Padding factor of the big box standing in for `R^n` on 2D masks.
pub const BIG_BOX_FACTOR: f64 = 3.0;

/// Navier and restricted solutions of one obstacle problem.
#[derive(Debug, Clone)]
pub struct ComparisonPair {
    pub name: String,
    pub psi: Vec<f64>,
    pub navier: Solution,
    pub restricted: Solution,
}

/// PSOR with a tolerance two orders below the default, so that solution
/// differences are meaningful at the `1e-8` level.
fn accurate_solve(op: &dyn SpdOperator, psi: &[f64]) -> Result<Solution> {
    let obstacle = Obstacle::Lower(psi.to_vec());
    let f = vec![0.0; psi.len()];
    let problem = ObstacleProblem::new(op, &obstacle, &f)?;
    let tol = 1e-2 * problem.default_tolerance()?;
    solve_psor(&problem, &PsorConfig { tol: Some(tol), ..PsorConfig::default() })
}

pub fn solve_pair(
    name: impl Into<String>,
    navier: &NavierOperator,
    restricted: &RestrictedOperator,
    psi: Vec<f64>,
) -> Result<ComparisonPair> {
    let navier_sol = accurate_solve(navier, &psi)?;
    let restricted_sol = accurate_solve(restricted, &psi)?;
    Ok(ComparisonPair { name: name.into(), psi, navier: navier_sol, restricted: restricted_sol })
}

/// The 1D interval with the kernel backend and the 2D disc with the big-box
/// backend.
fn setups(s: f64, n: usize) -> Result<Vec<(&'static str, NavierOperator, RestrictedOperator)>> {
    let interval = unit_interval(n)?;
    let side = n.min(MAX_2D_SIDE);
    let disc = Arc::new(DomainMask::build(Arc::new(BoxGrid::unit_square(side)?), |x| {
        (x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2) < 0.2
    })?);
    Ok(vec![
        ("interval", NavierOperator::new(interval.clone(), s)?, RestrictedOperator::kernel_sum(interval, s)?),
        (
            "disc",
            NavierOperator::new(disc.clone(), s)?,
            RestrictedOperator::big_box_scaled(disc, s, BIG_BOX_FACTOR)?,
        ),
    ])
}

fn obstacles(mask: &DomainMask) -> [(&'static str, Vec<f64>); 4] {
    [
        ("middle-third bump", middle_third_bump(mask)),
        ("twin bumps", twin_bumps(mask)),
        ("plateau", plateau(mask)),
        ("zero", vec![0.0; mask.len()]),
    ]
}

/// Every comparison instance of one `(s, n)` job, solved.
pub fn comparison_instances(s: f64, n: usize) -> Result<Vec<ComparisonPair>> {
    let mut out = Vec::new();
    for (domain, navier, restricted) in setups(s, n)? {
        for (label, psi) in obstacles(navier.mask()) {
            out.push(solve_pair(format!("{domain}: {label}"), &navier, &restricted, psi)?);
        }
    }
    Ok(out)
}

pub fn check_navier_dirichlet(config: &CheckConfig) -> Result<Vec<TheoremReport>> {
    run_jobs(config, |s, n| comparison_job(config, s, n))
}

const IDS: [&str; 8] = [
    "T:comparing1.i",
    "T:comparing1.ii",
    "T:comparing1.iii",
    "T:comparing1.iv",
    "T:comparing1.v",
    "T:comparing1.vi",
    "R:true",
    "L:meas1",
];

fn comparison_job(config: &CheckConfig, s: f64, n: usize) -> Result<Vec<TheoremReport>> {
    let descriptor = "f = 0; interval (kernel backend) and disc (big-box backend) × {middle-third bump, twin bumps, plateau, 0}";
    let mut reports: Vec<TheoremReport> =
        IDS.iter().map(|id| TheoremReport::new(*id, Some(s), n, descriptor)).collect();
    if s >= 1.0 {
        for r in &mut reports {
            r.mark_vacuous("at s = 1 both operators are the local Laplacian; the comparison is an identity");
        }
        return Ok(reports);
    }
    for (domain, navier, restricted) in setups(s, n)? {
        for (label, psi) in obstacles(navier.mask()) {
            let pair = solve_pair(format!("{domain}: {label}"), &navier, &restricted, psi)?;
            record_instance(config, &mut reports, &navier, &restricted, &pair)?;
        }
    }
    for r in &mut reports {
        if r.instances > 0 && r.margins.is_empty() {
            r.mark_vacuous("every positivity set was empty");
        }
    }
    Ok(reports)
}

fn record_instance(
    config: &CheckConfig,
    reports: &mut [TheoremReport],
    navier: &NavierOperator,
    restricted: &RestrictedOperator,
    pair: &ComparisonPair,
) -> Result<()> {
    let tol = &config.tol;
    let (psi, u_n, u_d) = (&pair.psi, &pair.navier.u, &pair.restricted.u);
    let m = psi.len();
    let mask = navier.mask();
    let scale = {
        let obstacle = Obstacle::Lower(psi.clone());
        let f = vec![0.0; m];
        ObstacleProblem::new(navier, &obstacle, &f)?.scale()?
    };
    let degenerate = psi.iter().all(|&p| p <= 0.0);
    let tag = |label: &str| format!("{}: {label}", pair.name);
    let [r_i, r_ii, r_iii, r_iv, r_v, r_vi, r_true, r_meas] = reports else {
        unreachable!("one report per id")
    };

    // iii) u_N ≤ u_D.
    r_iii.record(Margin::inequality("min(u_D − u_N)", min_gap(u_d, u_n) / scale, tol.absolute));

    let gap_n = linalg::sub(u_n, psi);
    let set_n = PositivitySet::with_relative_threshold(mask, &gap_n, tol.positivity)?;
    let gap_d = linalg::sub(u_d, psi);
    let set_d = PositivitySet::with_relative_threshold(mask, &gap_d, tol.positivity)?;

    if set_n.is_empty() {
        r_i.note(format!("{}: P[u_N − ψ] is empty", pair.name));
        r_iv.note(format!("{}: P[u_N − ψ] is empty", pair.name));
    } else {
        // i) the Navier multiplier vanishes on P[u_N − ψ], the restricted one on P[u_D − ψ].
        let mu_n = set_n.members.iter().map(|&p| pair.navier.mu[p].abs()).fold(0.0, f64::max);
        r_i.record(Margin::inequality("−max_P |L_N u_N|", -mu_n / scale, tol.absolute));
        // iv) strict separation on P[u_N − ψ].
        let sep = set_n.members.iter().map(|&p| u_d[p] - u_n[p]).fold(f64::INFINITY, f64::min);
        r_iv.record(Margin::strict("min_P (u_D − u_N)", sep / scale, tol.absolute, tol.strict_floor));
        r_meas.record(Margin::inequality(
            "min_P (u_N − ψ) − ε",
            set_n.floor_margin(&gap_n).unwrap_or(0.0) / scale,
            0.0,
        ));
    }
    if !set_d.is_empty() {
        let mu_d = set_d.members.iter().map(|&p| pair.restricted.mu[p].abs()).fold(0.0, f64::max);
        r_i.record(Margin::inequality("−max_P |L_D u_D|", -mu_d / scale, tol.absolute));
        r_meas.record(Margin::inequality(
            "min_P (u_D − ψ) − ε",
            set_d.floor_margin(&gap_d).unwrap_or(0.0) / scale,
            0.0,
        ));
    }

    // ii) L_N u_D > L_D u_D ≥ 0.
    r_ii.record(Margin::inequality(
        "min L_D u_D",
        pair.restricted.mu.iter().cloned().fold(f64::INFINITY, f64::min) / scale,
        tol.absolute,
    ));
    if !degenerate {
        let dominance = min_gap(&navier.apply(u_d)?, &restricted.apply(u_d)?);
        r_ii.record(Margin::strict("min(L_N u_D − L_D u_D)", dominance / scale, tol.absolute, tol.strict_floor));
    }

    // v) u_D also solves the restricted problem with obstacle u_N.
    let resolved = accurate_solve(restricted, u_n)?;
    r_v.record(Margin::inequality(
        "−‖u_D(u_N) − u_D‖∞",
        -linalg::max_abs_diff(&resolved.u, u_d),
        tol.absolute,
    ));

    // vi) D(u_D) ≤ D(u_N) < N(u_N) ≤ N(u_D).
    let d_ud = restricted.quadratic_form(u_d)?;
    let d_un = restricted.quadratic_form(u_n)?;
    let n_un = navier.quadratic_form(u_n)?;
    let n_ud = navier.quadratic_form(u_d)?;
    if degenerate {
        let spread = [d_ud, d_un, n_un, n_ud].iter().map(|e| e.abs()).fold(0.0, f64::max);
        r_vi.record(Margin::inequality("ψ ≤ 0: all energies vanish", -spread, tol.absolute));
    } else {
        let energy = n_ud.max(f64::MIN_POSITIVE);
        let identical = linalg::max_abs_diff(u_n, u_d) <= tol.absolute * scale;
        let outer = |label: &str, value: f64| {
            if identical {
                Margin::inequality(label, value / energy, tol.absolute)
            } else {
                Margin::strict(label, value / energy, tol.absolute, tol.strict_floor)
            }
        };
        r_vi.record(outer("D(u_N) − D(u_D)", d_un - d_ud));
        r_vi.record(Margin::strict("N(u_N) − D(u_N)", (n_un - d_un) / energy, tol.absolute, tol.strict_floor));
        r_vi.record(outer("N(u_D) − N(u_N)", n_ud - n_un));
    }

    // Nodes where ψ vanishes together with all their neighbours lie in P[u_N − ψ].
    let flat: Vec<usize> = (0..m)
        .filter(|&p| psi[p] == 0.0 && mask.neighbors(p).all(|(_, q)| psi[q] == 0.0))
        .collect();
    if !flat.is_empty() && !degenerate {
        let missing = flat.iter().filter(|&&p| !set_n.contains(p)).count();
        r_true.record(Margin::inequality(tag("flat nodes outside P[u_N − ψ]"), -(missing as f64), 0.0));
        r_true.instance_done();
    }
    for r in [r_i, r_ii, r_iii, r_iv, r_v, r_vi, r_meas] {
        r.instance_done();
    }
    Ok(())
}

fn min_gap(upper: &[f64], lower: &[f64]) -> f64 {
    upper.iter().zip(lower).map(|(a, b)| a - b).fold(f64::INFINITY, f64::min)
}
