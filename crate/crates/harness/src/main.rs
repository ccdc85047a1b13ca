use clap::{Args, Parser, Subcommand};
use spb_harness::config::RunConfig;
use spb_harness::run::{run, Command};
use spb_harness::HarnessError;
use std::path::PathBuf;
use std::process::ExitCode;

/// Stokes-Poisson-Boltzmann finite element solver with Nitsche slip
/// conditions and residual-based mesh adaptivity.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Uniform refinement series against the exact solution.
    Converge(Flags),
    /// Solve, estimate, mark and refine until the budget is spent.
    Adapt(Flags),
    /// One solve on the initial mesh refined `levels - 1` times.
    SolveOnce(Flags),
}

/// Every flag may also be given in the config file under the same name.
#[derive(Args)]
struct Flags {
    /// Settings file with one `key=value` per line.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    case: Option<String>,
    /// Viscosity; `converge` accepts a comma-separated list.
    #[arg(long)]
    mu: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    k0: Option<String>,
    #[arg(long)]
    k1: Option<String>,
    /// Pressure degree; velocity and potential use one more.
    #[arg(long)]
    degree: Option<String>,
    /// Refinement levels (converge, solve-once) or maximum rounds (adapt).
    #[arg(long)]
    levels: Option<String>,
    /// Marking fraction of the maximum strategy.
    #[arg(long)]
    theta: Option<String>,
    #[arg(long)]
    max_dofs: Option<String>,
    #[arg(long)]
    out_dir: Option<String>,
    #[arg(long, value_parser = ["newton", "picard"])]
    solver: Option<String>,
    #[arg(long, value_parser = ["mean-zero", "none"])]
    gauge: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    threads: Option<String>,
}

impl Flags {
    fn resolve(&self) -> Result<RunConfig, HarnessError> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| HarnessError::Usage(format!("cannot read config {}: {e}", path.display())))?;
            cfg.apply_text(&text)?;
        }
        let flags = [
            ("case", &self.case),
            ("mu", &self.mu),
            ("gamma", &self.gamma),
            ("beta", &self.beta),
            ("eps", &self.eps),
            ("k0", &self.k0),
            ("k1", &self.k1),
            ("degree", &self.degree),
            ("levels", &self.levels),
            ("theta", &self.theta),
            ("max-dofs", &self.max_dofs),
            ("out-dir", &self.out_dir),
            ("solver", &self.solver),
            ("gauge", &self.gauge),
            ("seed", &self.seed),
            ("threads", &self.threads),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, flags) = match &cli.command {
        Sub::Converge(f) => (Command::Converge, f),
        Sub::Adapt(f) => (Command::Adapt, f),
        Sub::SolveOnce(f) => (Command::SolveOnce, f),
    };
    let cfg = match flags.resolve() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(n) = cfg.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} worker threads: {e}");
            return ExitCode::from(2);
        }
    }
    match run(command, &cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if matches!(e, HarnessError::Usage(_)) { 2 } else { 1 })
        }
    }
}
