use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spectral_vi::experiment::{self, ExperimentConfig, Suite};

/// Run the discrete theorem checks for the spectral fractional Laplacian
/// obstacle problem and write plot-ready results.
#[derive(Debug, Parser)]
#[command(name = "spectral-vi", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Execute the selected suites and write report.json, summary.csv,
    /// solutions/ and profiles/ under the output directory.
    Run(Options),
    /// Print the resolved plan without running anything.
    Describe(Options),
}

#[derive(Debug, Args)]
struct Options {
    /// JSON config file; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// operators | vi | regularity | comparison | extension | all
    #[arg(long)]
    suite: Option<String>,
    /// Grid sizes (nodes per axis), comma separated.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    /// Fractional orders in (0, 1], comma separated.
    #[arg(long = "s", value_delimiter = ',', allow_negative_numbers = true)]
    orders: Option<Vec<f64>>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (1 = sequential). Defaults to all cores.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    tol_absolute: Option<f64>,
    #[arg(long)]
    tol_strict_floor: Option<f64>,
    #[arg(long)]
    tol_form: Option<f64>,
    #[arg(long)]
    tol_gamma_ratio: Option<f64>,
    #[arg(long)]
    tol_positivity: Option<f64>,
    #[arg(long)]
    tol_extension: Option<f64>,
}

impl Options {
    fn resolve(self) -> spectral_vi::Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::from_json_file(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(name) = &self.suite {
            c.suite = Suite::parse(name)?;
        }
        if let Some(v) = self.sizes {
            c.sizes = v;
        }
        if let Some(v) = self.orders {
            c.s = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.jobs {
            c.jobs = Some(v);
        }
        if let Some(v) = self.out {
            c.out = v;
        }
        let t = &mut c.tol;
        for (slot, value) in [
            (&mut t.absolute, self.tol_absolute),
            (&mut t.strict_floor, self.tol_strict_floor),
            (&mut t.form, self.tol_form),
            (&mut t.gamma_ratio, self.tol_gamma_ratio),
            (&mut t.positivity, self.tol_positivity),
            (&mut t.extension, self.tol_extension),
        ] {
            if let Some(v) = value {
                *slot = v;
            }
        }
        Ok(c)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage errors share exit code 1 with configuration errors;
            // 2 is reserved for failed checks.
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let (run, options) = match cli.command {
        Command::Run(o) => (true, o),
        Command::Describe(o) => (false, o),
    };
    let config = match options.resolve() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if !run {
        print!("{}", experiment::describe(&config));
        return ExitCode::SUCCESS;
    }
    match experiment::run(&config) {
        Ok(outcome) => {
            for r in outcome.body.reports.iter().filter(|r| !r.passed()) {
                let s = r.s.map_or_else(|| "-".to_string(), |s| s.to_string());
                let worst = r.worst_margin().map_or_else(|| "-".to_string(), |m| format!("{m:.3e}"));
                eprintln!("FAIL {} (s = {s}, size {}): worst margin {worst}", r.id, r.size);
            }
            println!("{}", outcome.summary_line());
            println!("wrote {} files under {}", outcome.files.len(), config.out.display());
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
