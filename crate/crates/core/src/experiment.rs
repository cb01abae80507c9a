//! Config-driven runs: pick suites, execute them, and write the report
//! bundle, summary CSV, solution dumps and extension profiles.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extension::{profile_csv, solve_mode_ode, YMesh, CALIBRATION_CELLS, DEFAULT_SPAN};
use crate::operator::SpdOperator;
use crate::par::Executor;
use crate::spectral_op::NavierOperator;
use crate::theorems::instances::{random_forcing, random_obstacle, unit_interval};
use crate::theorems::{
    check_extension, check_navier_dirichlet, check_operator_theorems, check_regularity_theorems, check_vi_theorems,
    comparison_instances, job_rng, summary_csv, CheckConfig, Counts, Status, TheoremReport, Tolerances,
};
use crate::vi_solver::{solve_psor, Method, Obstacle, ObstacleProblem, ProblemFile, PsorConfig, SolutionFile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Operators,
    Vi,
    Regularity,
    Comparison,
    Extension,
    All,
}

impl Suite {
    pub const EACH: [Suite; 5] = [Suite::Operators, Suite::Vi, Suite::Regularity, Suite::Comparison, Suite::Extension];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Operators => "operators",
            Suite::Vi => "vi",
            Suite::Regularity => "regularity",
            Suite::Comparison => "comparison",
            Suite::Extension => "extension",
            Suite::All => "all",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Suite::EACH
            .into_iter()
            .chain([Suite::All])
            .find(|s| s.name() == name)
            .ok_or_else(|| Error::Config(format!("unknown suite '{name}'")))
    }

    pub fn expand(self) -> Vec<Suite> {
        match self {
            Suite::All => Suite::EACH.to_vec(),
            one => vec![one],
        }
    }

    /// Report ids produced by one `(s, size)` job of this suite.
    pub fn theorem_ids(self) -> &'static [&'static str] {
        match self {
            Suite::Operators => &[
                "L:lemma2.form",
                "L:lemma2.pointwise",
                "L:eige_ueps.eigen",
                "L:eige_ueps2.gamma",
                "L:m_new.i",
                "L:m_new.ii",
                "L:m_new.iii",
                "R:MP",
            ],
            Suite::Vi => &[
                "T:sup.b",
                "T:sup.c",
                "T:sup.d",
                "T:bounded1",
                "compare_f",
                "T:sup.b.obstacle-order",
                "C:infty",
                "T:Linfty",
                "T:Hs2",
                "T:sup.unique",
            ],
            Suite::Regularity => &["T:measure", "T:measure.shifted-bound", "T:regularity.iii", "T:measure.penalty"],
            Suite::Comparison => &[
                "T:comparing1.i",
                "T:comparing1.ii",
                "T:comparing1.iii",
                "T:comparing1.iv",
                "T:comparing1.v",
                "T:comparing1.vi",
                "R:true",
                "L:meas1",
            ],
            Suite::Extension => &[
                "ext.calibration",
                "ext.scaling",
                "ext.truncation",
                "ext.energy",
                "ext.profile",
                "ext.trace.half (first job only)",
            ],
            Suite::All => &[],
        }
    }

    pub fn run(self, config: &CheckConfig) -> Result<Vec<TheoremReport>> {
        let mut out = Vec::new();
        for suite in self.expand() {
            out.extend(match suite {
                Suite::Operators => check_operator_theorems(config)?,
                Suite::Vi => check_vi_theorems(config)?,
                Suite::Regularity => check_regularity_theorems(config)?,
                Suite::Comparison => check_navier_dirichlet(config)?,
                Suite::Extension => check_extension(config)?,
                Suite::All => unreachable!("expanded"),
            });
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub suite: Suite,
    pub sizes: Vec<usize>,
    pub s: Vec<f64>,
    pub seed: u64,
    pub tol: Tolerances,
    pub counts: Counts,
    pub out: PathBuf,
    /// Worker threads; `None` uses every core, `Some(1)` runs sequentially.
    pub jobs: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            suite: Suite::All,
            sizes: vec![31],
            s: vec![0.25, 0.5, 0.75],
            seed: 1,
            tol: Tolerances::default(),
            counts: Counts::default(),
            out: PathBuf::from("results"),
            jobs: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("config {}: {e}", path.display())))
    }

    pub fn check_config(&self) -> CheckConfig {
        let mut c = CheckConfig::new(self.seed, self.sizes.clone(), self.s.clone());
        c.tol = self.tol;
        c.counts = self.counts;
        c.exec = match self.jobs {
            Some(n) => Executor::with_jobs(n),
            None => Executor::default(),
        };
        c
    }

    pub fn validate(&self) -> Result<()> {
        self.check_config().validate()?;
        if self.jobs == Some(0) {
            return Err(Error::Config("--jobs must be at least 1".into()));
        }
        Ok(())
    }
}

/// The parts of the configuration that determine the report contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub suites: Vec<Suite>,
    pub sizes: Vec<usize>,
    pub s: Vec<f64>,
    pub seed: u64,
    pub tol: Tolerances,
    pub counts: Counts,
}

impl From<&ExperimentConfig> for Plan {
    fn from(c: &ExperimentConfig) -> Self {
        Self {
            suites: c.suite.expand(),
            sizes: c.sizes.clone(),
            s: c.s.clone(),
            seed: c.seed,
            tol: c.tol,
            counts: c.counts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub tool: String,
    pub version: String,
    /// Seconds since the Unix epoch; the only field that differs between
    /// repeated runs.
    pub generated_unix: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBody {
    pub plan: Plan,
    pub reports: Vec<TheoremReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub header: Header,
    pub body: ReportBody,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub body: ReportBody,
    pub files: Vec<PathBuf>,
}

impl RunOutcome {
    pub fn count(&self, status: Status) -> usize {
        self.body.reports.iter().filter(|r| r.status == status).count()
    }

    /// 0 when every check passes (weak and vacuous passes included), 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.count(Status::Fail) == 0 {
            0
        } else {
            2
        }
    }

    pub fn summary_line(&self) -> String {
        format!(
            "{} reports: {} pass, {} weak-pass, {} vacuous-pass, {} fail",
            self.body.reports.len(),
            self.count(Status::Pass),
            self.count(Status::WeakPass),
            self.count(Status::VacuousPass),
            self.count(Status::Fail),
        )
    }
}

/// Run the checks only, without touching the file system.
pub fn evaluate(config: &ExperimentConfig) -> Result<ReportBody> {
    config.validate()?;
    let reports = config.suite.run(&config.check_config())?;
    Ok(ReportBody { plan: Plan::from(config), reports })
}

pub fn run(config: &ExperimentConfig) -> Result<RunOutcome> {
    config.validate()?;
    let out = &config.out;
    fs::create_dir_all(out.join("solutions"))?;
    fs::create_dir_all(out.join("profiles"))?;
    let body = evaluate(config)?;
    let mut files = Vec::new();

    let bundle = ReportBundle {
        header: Header {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            generated_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        },
        body,
    };
    files.push(write(out.join("report.json"), &serde_json::to_string_pretty(&bundle)?)?);
    files.push(write(out.join("summary.csv"), &summary_csv(&bundle.body.reports))?);

    let suites = config.suite.expand();
    for &s in &config.s {
        for &n in &config.sizes {
            if suites.contains(&Suite::Vi) {
                files.push(dump_vi_solution(config, s, n)?);
            }
            if suites.contains(&Suite::Comparison) && s < 1.0 {
                files.extend(dump_comparison(out, s, n)?);
            }
        }
        if suites.contains(&Suite::Extension) && s < 1.0 {
            files.extend(dump_profiles(out, s)?);
        }
    }
    Ok(RunOutcome { body: bundle.body, files })
}

fn write(path: PathBuf, contents: &str) -> Result<PathBuf> {
    fs::write(&path, contents)?;
    Ok(path)
}

fn slug(text: &str) -> String {
    let mut out = String::new();
    for c in text.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('-') {
            out.push('-');
        }
    }
    out.trim_matches('-').to_string()
}

#[derive(Serialize)]
struct ViDump {
    problem: ProblemFile,
    solution: SolutionFile,
}

/// One random obstacle problem per `(s, size)`, solved by PSOR.
fn dump_vi_solution(config: &ExperimentConfig, s: f64, n: usize) -> Result<PathBuf> {
    let mut rng = job_rng(config.seed, "experiment.vi", s, n);
    let op = NavierOperator::new(unit_interval(n)?, s)?;
    let obstacle = Obstacle::Lower(random_obstacle(&mut rng, op.mask()));
    let f = random_forcing(&mut rng, op.mask(), 5.0);
    let problem = ObstacleProblem::new(&op, &obstacle, &f)?;
    let psor = PsorConfig::default();
    let solution = solve_psor(&problem, &psor)?;
    let dump = ViDump {
        problem: ProblemFile::from_problem(&problem, Method::Psor, serde_json::to_value(psor)?),
        solution: SolutionFile::from(&solution),
    };
    write(
        config.out.join("solutions").join(format!("vi_s{s}_n{n}.json")),
        &serde_json::to_string_pretty(&dump)?,
    )
}

#[derive(Serialize)]
struct ComparisonDump<'a> {
    name: &'a str,
    s: f64,
    coords: Vec<Vec<f64>>,
    psi: &'a [f64],
    u_navier: &'a [f64],
    u_restricted: &'a [f64],
    mu_navier: &'a [f64],
    mu_restricted: &'a [f64],
}

fn dump_comparison(out: &Path, s: f64, n: usize) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    let interval = unit_interval(n)?;
    for pair in comparison_instances(s, n)? {
        // Coordinates are attached for the 1D instances, where the mask is the full interval.
        let coords = if pair.name.starts_with("interval") {
            (0..interval.len()).map(|p| interval.coords(p)).collect()
        } else {
            Vec::new()
        };
        let dump = ComparisonDump {
            name: &pair.name,
            s,
            coords,
            psi: &pair.psi,
            u_navier: &pair.navier.u,
            u_restricted: &pair.restricted.u,
            mu_navier: &pair.navier.mu,
            mu_restricted: &pair.restricted.mu,
        };
        let file = out.join("solutions").join(format!("comparison_s{s}_n{n}_{}.json", slug(&pair.name)));
        files.push(write(file, &serde_json::to_string_pretty(&dump)?)?);
    }
    Ok(files)
}

fn dump_profiles(out: &Path, s: f64) -> Result<Vec<PathBuf>> {
    let mesh = YMesh::for_order(s, DEFAULT_SPAN, CALIBRATION_CELLS)?;
    [1.0, 10.0, 100.0]
        .iter()
        .map(|&lambda| {
            let profile = solve_mode_ode(s, lambda, &mesh)?;
            write(out.join("profiles").join(format!("extension_s{s}_lambda{lambda}.csv")), &profile_csv(&profile))
        })
        .collect()
}

/// The resolved plan as text, without running anything.
pub fn describe(config: &ExperimentConfig) -> String {
    let mut out = String::new();
    let list = |v: &[String]| v.join(", ");
    let _ = writeln!(out, "plan");
    let _ = writeln!(out, "  seed: {}", config.seed);
    let _ = writeln!(out, "  sizes: {}", list(&config.sizes.iter().map(|n| n.to_string()).collect::<Vec<_>>()));
    let _ = writeln!(out, "  s: {}", list(&config.s.iter().map(|s| s.to_string()).collect::<Vec<_>>()));
    let _ = writeln!(out, "  output: {}", config.out.display());
    let _ = writeln!(
        out,
        "  jobs: {}",
        config.jobs.map(|j| j.to_string()).unwrap_or_else(|| "all cores".into())
    );
    let t = &config.tol;
    let _ = writeln!(out, "tolerances");
    for (name, value) in [
        ("absolute", t.absolute),
        ("strict_floor", t.strict_floor),
        ("form", t.form),
        ("gamma_ratio", t.gamma_ratio),
        ("positivity", t.positivity),
        ("extension", t.extension),
    ] {
        let _ = writeln!(out, "  {name}: {value:e}");
    }
    let c = &config.counts;
    let _ = writeln!(out, "instances per job");
    for (name, value) in [
        ("random_vectors", c.random_vectors),
        ("truncation_draws", c.truncation_draws),
        ("supersolutions", c.supersolutions),
        ("k_members", c.k_members),
        ("obstacle_pairs", c.obstacle_pairs),
        ("regularity_instances", c.regularity_instances),
        ("penalty_instances", c.penalty_instances),
        ("uniqueness_instances", c.uniqueness_instances),
    ] {
        let _ = writeln!(out, "  {name}: {value}");
    }
    let suites = config.suite.expand();
    let jobs = config.sizes.len() * config.s.len();
    let _ = writeln!(out, "suites ({})", suites.len());
    for suite in suites {
        let _ = writeln!(out, "  {} — {} job(s)", suite.name(), jobs);
        for id in suite.theorem_ids() {
            let _ = writeln!(out, "    {id}");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_json_config_keeps_defaults() {
        let c: ExperimentConfig = serde_json::from_str(r#"{"suite": "vi", "tol": {"absolute": 1e-6}}"#).unwrap();
        assert_eq!(c.suite, Suite::Vi);
        assert_eq!(c.tol.absolute, 1e-6);
        assert_eq!(c.tol.form, Tolerances::default().form);
        assert_eq!(c.sizes, vec![31]);
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"sizez": [3]}"#).is_err());
    }

    #[test]
    fn describe_lists_five_suites() {
        let text = describe(&ExperimentConfig::default());
        assert!(text.contains("suites (5)"));
        let other = describe(&ExperimentConfig { seed: 99, ..ExperimentConfig::default() });
        let differing: Vec<_> = text.lines().zip(other.lines()).filter(|(a, b)| a != b).collect();
        assert_eq!(differing, vec![("  seed: 1", "  seed: 99")]);
    }

    #[test]
    fn slugs() {
        assert_eq!(slug("interval: middle-third bump"), "interval-middle-third-bump");
    }
}
