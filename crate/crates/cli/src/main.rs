use clap::{Parser, Subcommand};
use relspec_cli::{run_scenario, Report, ScenarioConfig, ScenarioKind};
use std::path::PathBuf;
use std::process::ExitCode;

const OUTPUTS: &str = "\
Outputs (one directory per run; floats in shortest round-trip form):
  summary.json         status PASS | FAIL | FAILED, checks, wall clock, failed stage, the full config
  flat_cylinder.csv    index,exact,computed,relative_error
  oracle.csv           index,mode_sum,coarse,fine,extrapolated,angular_mode
  sweep.csv            epsilon,gap_a,gap_b,volume_ratio_a,volume_ratio_b,a0..aK,fit_residual,relative_area,log_det,error_budget
  traces.csv           epsilon,t,relative_trace,tail_bound
  isospectral.csv      t,relative_trace
  decay.csv            epsilon,t,relative_trace,bound
  continuity.csv       epsilon,dsup,t_at_sup
  funnel.csv           constant,inner,outer,log_det,error_budget,a0,a1
  offdiag.csv          cells,t,integral,normalized

Exit codes: 0 all checks passed, 1 a check failed or a stage errored, 2 bad config or I/O.
RELSPEC_THREADS sets the worker thread count.";

#[derive(Parser)]
#[command(name = "relspec", version, about = "Relative spectral invariants of surfaces of revolution", after_long_help = OUTPUTS)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a TOML config.
    Run {
        config: PathBuf,
        /// Output directory (default: the config's output_dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in validation scenario (flat cylinder and 2D oracle).
    Validate {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the summary of a finished run.
    Report { dir: PathBuf },
    /// Print the default config of a scenario kind.
    Template {
        #[arg(value_enum)]
        kind: ScenarioKind,
    },
}

fn execute(cfg: ScenarioConfig, out: Option<PathBuf>) -> ExitCode {
    let dir = out.unwrap_or_else(|| cfg.output_dir.clone());
    let report = run_scenario(&cfg);
    print!("{}", report.render());
    if let Err(e) = report.write_to(&dir) {
        eprintln!("error: writing {}: {e}", dir.display());
        return ExitCode::from(2);
    }
    println!("outputs in {}", dir.display());
    exit_for(&report)
}

fn exit_for(report: &Report) -> ExitCode {
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("RELSPEC_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // only fails if a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match cli.command {
        Command::Run { config, out } => match ScenarioConfig::from_path(&config) {
            Ok(cfg) => execute(cfg, out),
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
        Command::Validate { out } => execute(ScenarioConfig::template(ScenarioKind::Validate), out),
        Command::Report { dir } => match Report::read_summary(&dir) {
            Ok(r) => {
                print!("{}", r.render());
                exit_for(&r)
            }
            Err(e) => {
                eprintln!("error: reading {}: {e}", dir.join("summary.json").display());
                ExitCode::from(2)
            }
        },
        Command::Template { kind } => {
            print!("{}", ScenarioConfig::template(kind).to_toml_string());
            ExitCode::SUCCESS
        }
    }
}
