//! Discrete obstacle problem
//!
//! ```text
//!     minimize ½⟨L u, u⟩ − ⟨f, u⟩   over   { u ≥ ψ }
//! ```
//!
//! for an SPD M-matrix `L`, i.e. the linear complementarity problem
//! `u ≥ ψ, μ = L u − f ≥ 0, μ·(u − ψ) = 0`.
//!
//! Three independent routes: projected SOR, a penalty iteration, and an
//! exhaustive active-set enumeration usable as an oracle for small masks.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::check_len;
use crate::linalg;
use crate::operator::SpdOperator;
use crate::par::Executor;

pub const ENUMERATION_LIMIT: usize = 15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Obstacle {
    /// No constraint at all; the problem is the linear solve `L u = f`.
    Unconstrained,
    Lower(Vec<f64>),
}

impl Obstacle {
    pub fn values(&self) -> Option<&[f64]> {
        match self {
            Obstacle::Unconstrained => None,
            Obstacle::Lower(psi) => Some(psi),
        }
    }
}

#[derive(Clone, Copy)]
pub struct ObstacleProblem<'a> {
    op: &'a dyn SpdOperator,
    obstacle: &'a Obstacle,
    f: &'a [f64],
}

impl std::fmt::Debug for ObstacleProblem<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ObstacleProblem")
            .field("op", &self.op.label())
            .field("obstacle", self.obstacle)
            .field("f", &self.f)
            .finish()
    }
}

impl<'a> ObstacleProblem<'a> {
    pub fn new(op: &'a dyn SpdOperator, obstacle: &'a Obstacle, f: &'a [f64]) -> Result<Self> {
        check_len(f, op.len())?;
        if let Obstacle::Lower(psi) = obstacle {
            check_len(psi, op.len())?;
            if psi.iter().any(|x| !x.is_finite()) {
                return Err(Error::Config("obstacle values must be finite".into()));
            }
        }
        Ok(Self { op, obstacle, f })
    }

    pub fn op(&self) -> &'a dyn SpdOperator {
        self.op
    }

    pub fn obstacle(&self) -> &'a Obstacle {
        self.obstacle
    }

    pub fn f(&self) -> &'a [f64] {
        self.f
    }

    pub fn len(&self) -> usize {
        self.f.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f.is_empty()
    }

    /// `1 + ‖f‖∞ + ‖L ψ⁺‖∞`, the scale that tolerances are measured against.
    pub fn scale(&self) -> Result<f64> {
        let obstacle_part = match self.obstacle {
            Obstacle::Unconstrained => 0.0,
            Obstacle::Lower(psi) => linalg::norm_inf(&self.op.apply(&linalg::positive_part(psi))?),
        };
        Ok(1.0 + linalg::norm_inf(self.f) + obstacle_part)
    }

    pub fn default_tolerance(&self) -> Result<f64> {
        Ok(1e-9 * self.scale()?)
    }
}

/// KKT residual triple. For an unconstrained problem there is no gap to
/// report, so `primal` is 0 and `dual`/`complementarity` measure `±‖μ‖∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// `min_i (u − ψ)_i`
    pub primal: f64,
    /// `min_i μ_i`
    pub dual: f64,
    /// `max_i μ_i (u − ψ)_i`
    pub complementarity: f64,
}

impl Residuals {
    pub fn within(&self, tol: f64) -> bool {
        self.primal >= -tol && self.dual >= -tol && self.complementarity <= tol
    }
}

pub fn kkt_residuals(problem: &ObstacleProblem<'_>, u: &[f64]) -> Result<Residuals> {
    check_len(u, problem.len())?;
    let mu = linalg::sub(&problem.op.apply(u)?, problem.f);
    Ok(residuals_from(problem.obstacle, u, &mu))
}

fn residuals_from(obstacle: &Obstacle, u: &[f64], mu: &[f64]) -> Residuals {
    match obstacle {
        Obstacle::Unconstrained => {
            let m = linalg::norm_inf(mu);
            Residuals { primal: 0.0, dual: -m, complementarity: m }
        }
        Obstacle::Lower(psi) => {
            let mut r = Residuals {
                primal: f64::INFINITY,
                dual: f64::INFINITY,
                complementarity: f64::NEG_INFINITY,
            };
            for i in 0..u.len() {
                let gap = u[i] - psi[i];
                r.primal = r.primal.min(gap);
                r.dual = r.dual.min(mu[i]);
                r.complementarity = r.complementarity.max(mu[i] * gap);
            }
            if u.is_empty() {
                r = Residuals { primal: 0.0, dual: 0.0, complementarity: 0.0 };
            }
            r
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Direct,
    Psor,
    Penalty,
    ActiveSet,
}

impl Method {
    pub fn tag(&self) -> &'static str {
        match self {
            Method::Direct => "direct",
            Method::Psor => "psor",
            Method::Penalty => "penalty",
            Method::ActiveSet => "active-set",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub u: Vec<f64>,
    /// `μ = L u − f`
    pub mu: Vec<f64>,
    pub residuals: Residuals,
    pub iterations: usize,
    pub method: Method,
}

impl Solution {
    fn assemble(problem: &ObstacleProblem<'_>, u: Vec<f64>, iterations: usize, method: Method) -> Result<Self> {
        let mu = linalg::sub(&problem.op.apply(&u)?, problem.f);
        let residuals = residuals_from(problem.obstacle, &u, &mu);
        Ok(Self { u, mu, residuals, iterations, method })
    }
}

fn unconstrained(problem: &ObstacleProblem<'_>) -> Result<Solution> {
    let u = problem.op.solve(problem.f)?;
    Solution::assemble(problem, u, 0, Method::Direct)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsorConfig {
    /// KKT tolerance; `None` means [`ObstacleProblem::default_tolerance`].
    pub tol: Option<f64>,
    pub relax: f64,
    pub max_sweeps: usize,
}

impl Default for PsorConfig {
    fn default() -> Self {
        Self { tol: None, relax: 1.5, max_sweeps: 200_000 }
    }
}

/// Projected SOR. Stops once the KKT triple is within `tol` *and* the
/// projected-gradient residual `‖min(u − ψ, μ/L_ii)‖∞` has stagnated at
/// round-off level, so that the iterate is accurate, not merely feasible.
pub fn solve_psor(problem: &ObstacleProblem<'_>, config: &PsorConfig) -> Result<Solution> {
    if !(config.relax > 0.0 && config.relax < 2.0) {
        return Err(Error::Config(format!("relaxation {} outside (0, 2)", config.relax)));
    }
    let psi = match problem.obstacle {
        Obstacle::Unconstrained => return unconstrained(problem),
        Obstacle::Lower(psi) => psi,
    };
    let tol = match config.tol {
        Some(t) => t,
        None => problem.default_tolerance()?,
    };
    let a = problem.op.matrix();
    let n = problem.len();
    let f = problem.f;
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    if diag.iter().any(|&d| d <= 0.0) {
        return Err(Error::NotPositiveDefinite);
    }
    let mut u: Vec<f64> = psi.iter().map(|&p| p.max(0.0)).collect();
    let scale_u = |u: &[f64]| 1.0 + linalg::norm_inf(u);
    let mut last = Residuals { primal: 0.0, dual: f64::NEG_INFINITY, complementarity: f64::INFINITY };
    for sweep in 1..=config.max_sweeps {
        let mut change: f64 = 0.0;
        for i in 0..n {
            // The matrix is symmetric, so column i doubles as row i and is contiguous.
            let r = f[i] - linalg::dot(a.column(i).as_slice(), &u);
            let new = psi[i].max(u[i] + config.relax * r / diag[i]);
            change = change.max((new - u[i]).abs());
            u[i] = new;
        }
        if change <= 1e-13 * scale_u(&u) || sweep % 16 == 0 {
            let mu = linalg::sub(&linalg::matvec(a, &u), f);
            last = residuals_from(problem.obstacle, &u, &mu);
            let natural = (0..n)
                .map(|i| (u[i] - psi[i]).min(mu[i] / diag[i]).abs())
                .fold(0.0, f64::max);
            if last.within(tol) && natural <= 1e-12 * scale_u(&u) {
                return Solution::assemble(problem, u, sweep, Method::Psor);
            }
        }
    }
    Err(Error::IterationCap { method: "psor", iterations: config.max_sweeps, residuals: last })
}

/// `θ_ε`: 1 for `t ≤ 0`, 0 for `t ≥ ε`, a C¹ cubic smoothstep in between.
pub fn smoothstep(t: f64, eps: f64) -> f64 {
    if t <= 0.0 {
        1.0
    } else if t >= eps {
        0.0
    } else {
        let x = t / eps;
        1.0 - x * x * (3.0 - 2.0 * x)
    }
}

pub fn smoothstep_derivative(t: f64, eps: f64) -> f64 {
    if t <= 0.0 || t >= eps {
        0.0
    } else {
        let x = t / eps;
        -6.0 * x * (1.0 - x) / eps
    }
}

/// `∫₀ᵗ θ_ε`.
fn smoothstep_integral(t: f64, eps: f64) -> f64 {
    if t <= 0.0 {
        t
    } else if t >= eps {
        0.5 * eps
    } else {
        let x = t / eps;
        eps * (x - x * x * x + 0.5 * x * x * x * x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PenaltyIteration {
    /// `u ← (1−α) u + α L⁻¹[θ_ε(u − ψ) g]`.
    Picard { damping: f64 },
    /// Newton on `L u − θ_ε(u − ψ) g = 0` with an energy line search.
    Newton,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyConfig {
    pub eps: f64,
    pub iteration: PenaltyIteration,
    pub max_iterations: usize,
    /// Compare against a PSOR solve and fail on a sandwich violation.
    pub certify: bool,
    pub tol: Option<f64>,
}

impl PenaltyConfig {
    pub fn new(eps: f64) -> Self {
        Self { eps, ..Self::default() }
    }
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        Self {
            eps: 1e-2,
            iteration: PenaltyIteration::Newton,
            max_iterations: 10_000,
            certify: true,
            tol: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltySolution {
    pub solution: Solution,
    /// Reference obstacle-problem solution when the run was certified.
    pub reference: Option<Solution>,
    /// `max(max(u − u_ε), max(u_ε − u − ε))`, positive on violation.
    pub sandwich_violation: Option<f64>,
}

/// Penalty route: with `ω_f = L⁻¹ f` and `ψ̃ = (ψ − ω_f)⁺`, solve
/// `L v = θ_ε(v − ψ̃) (L ψ̃)⁺` and return `u_ε = v + ω_f`.
pub fn solve_penalty(problem: &ObstacleProblem<'_>, config: &PenaltyConfig) -> Result<PenaltySolution> {
    if !(config.eps > 0.0) {
        return Err(Error::Config("penalty ε must be positive".into()));
    }
    let psi = match problem.obstacle {
        Obstacle::Unconstrained => {
            return Ok(PenaltySolution { solution: unconstrained(problem)?, reference: None, sandwich_violation: None })
        }
        Obstacle::Lower(psi) => psi,
    };
    let op = problem.op;
    let tol = match config.tol {
        Some(t) => t,
        None => problem.default_tolerance()?,
    };
    let omega_f = op.solve(problem.f)?;
    let shifted = linalg::positive_part(&linalg::sub(psi, &omega_f));
    let g = linalg::positive_part(&op.apply(&shifted)?);
    let eps = config.eps;

    let rhs = |v: &[f64]| -> Vec<f64> {
        (0..v.len()).map(|i| smoothstep(v[i] - shifted[i], eps) * g[i]).collect()
    };
    let residual_norm = |v: &[f64]| -> Result<f64> { Ok(linalg::max_abs_diff(&op.apply(v)?, &rhs(v))) };
    // Round-off floor of evaluating `L v − θ g`.
    let row_norm = (0..op.len())
        .map(|i| op.matrix().row(i).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let floor = |v: &[f64]| 1e-12 * (1.0 + linalg::norm_inf(&g) + row_norm * linalg::norm_inf(v));

    let mut v = vec![0.0; problem.len()];
    let mut iterations = 0;
    let mut converged = g.iter().all(|&x| x == 0.0);
    let mut last_res = 0.0;
    match config.iteration {
        PenaltyIteration::Picard { damping } => {
            if !(damping > 0.0 && damping <= 1.0) {
                return Err(Error::Config("Picard damping must lie in (0, 1]".into()));
            }
            while !converged && iterations < config.max_iterations {
                iterations += 1;
                let next = op.solve(&rhs(&v))?;
                for (vi, ni) in v.iter_mut().zip(&next) {
                    *vi += damping * (ni - *vi);
                }
                last_res = residual_norm(&v)?;
                converged = last_res <= floor(&v);
            }
        }
        PenaltyIteration::Newton => {
            let a = op.matrix();
            let w = op.weight();
            // Convex energy whose gradient is the penalty residual.
            let energy = |v: &[f64]| -> f64 {
                let quad = 0.5 * linalg::dot(&linalg::matvec(a, v), v);
                let pen: f64 = (0..v.len())
                    .map(|i| g[i] * smoothstep_integral(v[i] - shifted[i], eps))
                    .sum();
                w * (quad - pen)
            };
            while !converged && iterations < config.max_iterations {
                iterations += 1;
                let r = linalg::sub(&linalg::matvec(a, &v), &rhs(&v));
                let mut jac = a.clone();
                for i in 0..v.len() {
                    jac[(i, i)] -= smoothstep_derivative(v[i] - shifted[i], eps) * g[i];
                }
                let step = jac
                    .cholesky()
                    .ok_or(Error::NotPositiveDefinite)?
                    .solve(&DVector::from_column_slice(&r));
                let e0 = energy(&v);
                let r0 = linalg::norm_inf(&r);
                let slope = -linalg::dot(&r, step.as_slice()) * w;
                let mut t = 1.0;
                let mut trial;
                let mut trial_res;
                loop {
                    trial = (0..v.len()).map(|i| v[i] - t * step[i]).collect::<Vec<_>>();
                    trial_res = residual_norm(&trial)?;
                    // Close to the root the energy decrease drops below its
                    // round-off, so a step that shrinks the residual is also
                    // accepted.
                    let armijo = energy(&trial) <= e0 + 1e-4 * t * slope;
                    let unresolved = (t * slope).abs() <= 1e-12 * (1.0 + e0.abs());
                    if armijo || (unresolved && trial_res < r0) || t < 1e-12 {
                        break;
                    }
                    t *= 0.5;
                }
                v = trial;
                last_res = trial_res;
                converged = last_res <= floor(&v);
            }
        }
    }
    if !converged {
        let u = linalg::add(&v, &omega_f);
        let residuals = kkt_residuals(problem, &u)?;
        log_penalty_stall(last_res);
        return Err(Error::IterationCap { method: "penalty", iterations, residuals });
    }
    let u = linalg::add(&v, &omega_f);
    let solution = Solution::assemble(problem, u, iterations, Method::Penalty)?;
    if !config.certify {
        return Ok(PenaltySolution { solution, reference: None, sandwich_violation: None });
    }
    let reference = solve_psor(problem, &PsorConfig { tol: Some(tol), ..PsorConfig::default() })?;
    let violation = (0..problem.len())
        .map(|i| {
            let below = reference.u[i] - solution.u[i];
            let above = solution.u[i] - reference.u[i] - eps;
            below.max(above)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    if violation > tol {
        return Err(Error::SandwichViolation { violation });
    }
    Ok(PenaltySolution { solution, reference: Some(reference), sandwich_violation: Some(violation) })
}

fn log_penalty_stall(residual: f64) {
    if std::env::var_os("SPECTRAL_VI_DEBUG").is_some() {
        eprintln!("penalty iteration stalled at residual {residual:e}");
    }
}

/// Brute-force oracle: try every active set and keep the candidate with the
/// smallest KKT violation.
pub fn solve_active_set_enum(problem: &ObstacleProblem<'_>) -> Result<Solution> {
    solve_active_set_enum_with(problem, &Executor::default())
}

pub fn solve_active_set_enum_with(problem: &ObstacleProblem<'_>, exec: &Executor) -> Result<Solution> {
    let psi = match problem.obstacle {
        Obstacle::Unconstrained => return unconstrained(problem),
        Obstacle::Lower(psi) => psi,
    };
    let n = problem.len();
    if n > ENUMERATION_LIMIT {
        return Err(Error::TooLarge { size: n, limit: ENUMERATION_LIMIT });
    }
    let a = problem.op.matrix();
    let f = problem.f;
    let sets: Vec<u32> = (0..(1u32 << n)).collect();
    let candidates = exec.map(&sets, |&set| candidate(a, f, psi, set));
    let mut best: Option<(f64, Vec<f64>)> = None;
    for (violation, u) in candidates.into_iter().flatten() {
        if best.as_ref().is_none_or(|(b, _)| violation < *b) {
            best = Some((violation, u));
        }
    }
    let (violation, u) = best.ok_or(Error::NoKktPoint { best_violation: f64::INFINITY })?;
    let tol = problem.default_tolerance()?;
    if violation > tol {
        return Err(Error::NoKktPoint { best_violation: violation });
    }
    Solution::assemble(problem, u, 1 << n, Method::ActiveSet)
}

/// Solve with `u = ψ` on the active set and `μ = 0` elsewhere; returns the
/// KKT violation of the candidate.
fn candidate(a: &DMatrix<f64>, f: &[f64], psi: &[f64], set: u32) -> Option<(f64, Vec<f64>)> {
    let n = f.len();
    let active = |i: usize| set & (1 << i) != 0;
    let free: Vec<usize> = (0..n).filter(|&i| !active(i)).collect();
    let mut u: Vec<f64> = (0..n).map(|i| if active(i) { psi[i] } else { 0.0 }).collect();
    if !free.is_empty() {
        let k = free.len();
        let sub = DMatrix::from_fn(k, k, |p, q| a[(free[p], free[q])]);
        let rhs = DVector::from_fn(k, |p, _| {
            let i = free[p];
            f[i] - (0..n).filter(|&j| active(j)).map(|j| a[(i, j)] * psi[j]).sum::<f64>()
        });
        let x = sub.cholesky()?.solve(&rhs);
        for (p, &i) in free.iter().enumerate() {
            u[i] = x[p];
        }
    }
    let mu = linalg::sub(&linalg::matvec(a, &u), f);
    let violation = (0..n)
        .map(|i| if active(i) { -mu[i] } else { psi[i] - u[i] })
        .fold(0.0, f64::max);
    Some((violation, u))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    pub mask_ref: String,
    pub s: f64,
    /// `None` encodes the unconstrained problem.
    pub psi: Option<Vec<f64>>,
    pub f: Vec<f64>,
    pub method: Method,
    #[serde(default)]
    pub params: serde_json::Value,
}

impl ProblemFile {
    pub fn from_problem(problem: &ObstacleProblem<'_>, method: Method, params: serde_json::Value) -> Self {
        Self {
            mask_ref: problem.op.mask().fingerprint(),
            s: problem.op.order(),
            psi: problem.obstacle.values().map(<[f64]>::to_vec),
            f: problem.f.to_vec(),
            method,
            params,
        }
    }

    pub fn obstacle(&self) -> Obstacle {
        match &self.psi {
            Some(p) => Obstacle::Lower(p.clone()),
            None => Obstacle::Unconstrained,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub u: Vec<f64>,
    pub mu: Vec<f64>,
    pub residuals: Residuals,
    pub iterations: usize,
}

impl From<&Solution> for SolutionFile {
    fn from(s: &Solution) -> Self {
        Self { u: s.u.clone(), mu: s.mu.clone(), residuals: s.residuals, iterations: s.iterations }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{BoxGrid, DomainMask};
    use crate::spectral_op::NavierOperator;
    use std::sync::Arc;

    fn navier(n: usize, s: f64) -> NavierOperator {
        let mask = Arc::new(DomainMask::full(Arc::new(BoxGrid::unit_interval(n).unwrap())));
        NavierOperator::new(mask, s).unwrap()
    }

    #[test]
    fn smoothstep_shape() {
        let eps = 0.1;
        assert_eq!(smoothstep(-1.0, eps), 1.0);
        assert_eq!(smoothstep(0.0, eps), 1.0);
        assert_eq!(smoothstep(eps, eps), 0.0);
        assert!((smoothstep(0.05, eps) - 0.5).abs() < 1e-15);
        let mut prev = 1.0;
        for k in 0..=100 {
            let t = k as f64 * 1e-3;
            let v = smoothstep(t, eps);
            assert!(v <= prev);
            prev = v;
        }
        // The integral is an antiderivative.
        for t in [0.01, 0.03, 0.07] {
            let d = (smoothstep_integral(t + 1e-7, eps) - smoothstep_integral(t - 1e-7, eps)) / 2e-7;
            assert!((d - smoothstep(t, eps)).abs() < 1e-6);
        }
    }

    #[test]
    fn inactive_obstacle_gives_zero() {
        let op = navier(9, 0.5);
        let psi = Obstacle::Lower(vec![-1.0; 9]);
        let f = vec![0.0; 9];
        let p = ObstacleProblem::new(&op, &psi, &f).unwrap();
        for sol in [
            solve_psor(&p, &PsorConfig::default()).unwrap(),
            solve_penalty(&p, &PenaltyConfig::new(1e-2)).unwrap().solution,
            solve_active_set_enum(&p).unwrap(),
        ] {
            assert!(linalg::norm_inf(&sol.u) <= 1e-12, "{:?}", sol.method);
        }
    }

    #[test]
    fn scalar_case() {
        let op = navier(1, 0.5);
        let a = op.matrix()[(0, 0)];
        for (psi, f) in [(0.3, 1.0), (2.0, 1.0), (-1.0, -1.0)] {
            let obstacle = Obstacle::Lower(vec![psi]);
            let fv = [f];
            let p = ObstacleProblem::new(&op, &obstacle, &fv).unwrap();
            let u = solve_active_set_enum(&p).unwrap().u[0];
            assert!((u - psi.max(f / a)).abs() < 1e-14);
        }
    }

    #[test]
    fn hat_obstacle_matches_oracle() {
        let op = navier(5, 0.5);
        let psi = Obstacle::Lower(vec![0.0, 0.5, 1.0, 0.5, 0.0]);
        let f = vec![0.0; 5];
        let p = ObstacleProblem::new(&op, &psi, &f).unwrap();
        let a = solve_psor(&p, &PsorConfig::default()).unwrap();
        let b = solve_active_set_enum(&p).unwrap();
        assert!(linalg::max_abs_diff(&a.u, &b.u) <= 1e-8);
        assert!(a.residuals.primal >= 0.0);
    }

    #[test]
    fn kkt_on_eigenmode_obstacle() {
        let op = navier(15, 0.5);
        let phi: Vec<f64> = op.decomposition().eigenvector(0).iter().map(|x| x.abs()).collect();
        let lam = op.decomposition().eigenvalues()[0].sqrt();
        let psi = Obstacle::Lower(phi.clone());
        let f = vec![0.0; 15];
        let p = ObstacleProblem::new(&op, &psi, &f).unwrap();
        let r = kkt_residuals(&p, &phi).unwrap();
        assert_eq!(r.primal, 0.0);
        let dual = phi.iter().cloned().fold(f64::INFINITY, f64::min) * lam;
        assert!((r.dual - dual).abs() < 1e-9 * lam);
        // The gap u − ψ vanishes identically, so the product does too even
        // though μ = λ₁^s ψ is strictly positive.
        assert_eq!(r.complementarity, 0.0);
    }

    #[test]
    fn inactive_forcing_returns_unconstrained_solution() {
        let op = navier(8, 0.75);
        let f: Vec<f64> = (0..8).map(|i| 1.0 + i as f64).collect();
        let omega = op.solve(&f).unwrap();
        let psi = Obstacle::Lower(omega.iter().map(|x| x - 0.5).collect());
        let p = ObstacleProblem::new(&op, &psi, &f).unwrap();
        let a = solve_active_set_enum(&p).unwrap();
        let b = solve_psor(&p, &PsorConfig::default()).unwrap();
        assert!(linalg::max_abs_diff(&a.u, &omega) <= 1e-12 * linalg::norm_inf(&omega));
        assert!(linalg::max_abs_diff(&b.u, &omega) <= 1e-9);
        assert!(b.residuals.primal > 0.0);
    }

    #[test]
    fn penalty_rhs_vanishes_for_negative_potential_obstacle() {
        let op = navier(21, 0.5);
        let g: Vec<f64> = (0..21).map(|i| ((i * 7) % 5) as f64).collect();
        let psi = Obstacle::Lower(linalg::scale(&op.solve(&g).unwrap(), -1.0));
        let f = vec![0.0; 21];
        let p = ObstacleProblem::new(&op, &psi, &f).unwrap();
        let sol = solve_penalty(&p, &PenaltyConfig::new(1e-3)).unwrap();
        assert_eq!(sol.solution.u, vec![0.0; 21]);
    }

    #[test]
    fn penalty_sandwich_and_picard_agree_for_coarse_eps() {
        let op = navier(31, 0.5);
        let psi: Vec<f64> = (0..31)
            .map(|i| {
                let x = (i as f64 + 1.0) / 32.0;
                1.0 - 16.0 * (x - 0.5) * (x - 0.5)
            })
            .collect();
        let psi = Obstacle::Lower(psi);
        let f = vec![0.0; 31];
        let p = ObstacleProblem::new(&op, &psi, &f).unwrap();
        let mut gaps = Vec::new();
        for eps in [1e-1, 1e-2, 1e-3] {
            let sol = solve_penalty(&p, &PenaltyConfig::new(eps)).unwrap();
            let reference = sol.reference.as_ref().unwrap();
            gaps.push(linalg::max_abs_diff(&sol.solution.u, &reference.u));
            assert!(gaps.last().unwrap() <= &(eps + 1e-8));
        }
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
        let newton = solve_penalty(&p, &PenaltyConfig::new(1e-1)).unwrap().solution.u;
        let picard = solve_penalty(
            &p,
            &PenaltyConfig { iteration: PenaltyIteration::Picard { damping: 0.05 }, ..PenaltyConfig::new(1e-1) },
        )
        .unwrap();
        assert!(linalg::max_abs_diff(&newton, &picard.solution.u) < 1e-9);
    }

    #[test]
    fn enumeration_refuses_large_masks() {
        let op = navier(16, 0.5);
        let psi = Obstacle::Lower(vec![0.0; 16]);
        let f = vec![0.0; 16];
        let p = ObstacleProblem::new(&op, &psi, &f).unwrap();
        assert!(matches!(solve_active_set_enum(&p), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn problem_file_round_trip() {
        let op = navier(3, 0.5);
        let psi = Obstacle::Lower(vec![0.1, 0.2, 0.1]);
        let f = vec![0.0; 3];
        let p = ObstacleProblem::new(&op, &psi, &f).unwrap();
        let file = ProblemFile::from_problem(&p, Method::Psor, serde_json::json!({"relax": 1.5}));
        let text = serde_json::to_string(&file).unwrap();
        let back: ProblemFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.obstacle(), psi);
    }
}
