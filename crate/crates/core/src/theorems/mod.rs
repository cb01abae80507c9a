//! Numerical checks of the discrete comparison, maximum-principle,
//! variational-inequality and regularity properties.
//!
//! Every check returns [`TheoremReport`]s whose margins are signed slacks
//! (nonnegative ⇔ the inequality holds). Work is split into independent jobs,
//! one per `(check family, s, size)`; each job draws from its own ChaCha
//! stream derived from the seed and the job key, so results do not depend on
//! scheduling or on which other jobs run.

mod comparison;
mod extension_suite;
pub mod instances;
mod operator_suite;
mod positivity;
mod regularity_suite;
mod report;
mod vi_suite;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::Executor;

pub use positivity::PositivitySet;
pub use report::{summary_csv, Margin, MarginKind, Status, TheoremReport};

pub use comparison::{check_navier_dirichlet, comparison_instances, solve_pair, ComparisonPair};
pub use extension_suite::check_extension;
pub use operator_suite::check_operator_theorems;
pub use regularity_suite::{check_regularity_theorems, multiplier_bounds, MultiplierBounds};
pub use vi_suite::check_vi_theorems;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Absolute slack for solution-level inequalities (scale-normalised).
    pub absolute: f64,
    /// Strict inequalities must exceed this (scale-normalised) to count as
    /// strict passes.
    pub strict_floor: f64,
    /// Slack for the truncation and form-monotonicity identities.
    pub form: f64,
    /// Required ratio of the final to the first gap along the shrinking family.
    pub gamma_ratio: f64,
    /// Threshold factor for the discrete positivity set.
    pub positivity: f64,
    /// Relative error allowed in the extension energy identity.
    pub extension: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            absolute: 1e-8,
            strict_floor: 1e-12,
            form: 1e-10,
            gamma_ratio: 0.05,
            positivity: 1e-3,
            extension: 2e-2,
        }
    }
}

/// How many random draws each job makes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Counts {
    pub random_vectors: usize,
    pub truncation_draws: usize,
    pub supersolutions: usize,
    pub k_members: usize,
    pub obstacle_pairs: usize,
    pub regularity_instances: usize,
    pub penalty_instances: usize,
    pub uniqueness_instances: usize,
}

impl Default for Counts {
    fn default() -> Self {
        Self {
            random_vectors: 3,
            truncation_draws: 100,
            supersolutions: 20,
            k_members: 20,
            obstacle_pairs: 30,
            regularity_instances: 30,
            penalty_instances: 10,
            uniqueness_instances: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckConfig {
    pub seed: u64,
    /// Node counts per axis of the 1D base grids; 2D instances cap this.
    pub sizes: Vec<usize>,
    pub orders: Vec<f64>,
    pub tol: Tolerances,
    pub counts: Counts,
    pub exec: Executor,
}

impl CheckConfig {
    pub fn new(seed: u64, sizes: Vec<usize>, orders: Vec<f64>) -> Self {
        Self {
            seed,
            sizes,
            orders,
            tol: Tolerances::default(),
            counts: Counts::default(),
            exec: Executor::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() || self.orders.is_empty() {
            return Err(Error::Config("at least one size and one order are required".into()));
        }
        if let Some(&n) = self.sizes.iter().find(|&&n| n < 3) {
            return Err(Error::Config(format!("grid size {n} is below 3 nodes")));
        }
        if let Some(&s) = self.orders.iter().find(|&&s| !(s > 0.0 && s <= 1.0)) {
            return Err(Error::InvalidOrder(s));
        }
        Ok(())
    }

    fn jobs(&self) -> Vec<(f64, usize)> {
        let mut out = Vec::new();
        for &s in &self.orders {
            for &n in &self.sizes {
                out.push((s, n));
            }
        }
        out
    }
}

/// Largest 2D grid side used by checks that also run on 2D masks.
pub const MAX_2D_SIDE: usize = 15;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Deterministic generator for one job.
pub fn job_rng(seed: u64, key: &str, s: f64, size: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bytes = key.as_bytes().to_vec();
    bytes.extend_from_slice(&s.to_bits().to_le_bytes());
    bytes.extend_from_slice(&(size as u64).to_le_bytes());
    rng.set_stream(fnv1a(&bytes));
    rng
}

/// Run one job per `(s, size)` and concatenate the reports in job order.
fn run_jobs<F>(config: &CheckConfig, job: F) -> Result<Vec<TheoremReport>>
where
    F: Fn(f64, usize) -> Result<Vec<TheoremReport>> + Sync + Send,
{
    config.validate()?;
    let jobs = config.jobs();
    let per_job = config.exec.try_map(&jobs, |&(s, n)| job(s, n))?;
    Ok(per_job.into_iter().flatten().collect())
}

/// Every suite, in a fixed order.
pub fn check_all(config: &CheckConfig) -> Result<Vec<TheoremReport>> {
    let mut out = check_operator_theorems(config)?;
    out.extend(check_vi_theorems(config)?);
    out.extend(check_regularity_theorems(config)?);
    out.extend(check_navier_dirichlet(config)?);
    out.extend(check_extension(config)?);
    Ok(out)
}
