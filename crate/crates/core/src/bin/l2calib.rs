use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use l2calib::cli::{
    check_discrepancy, check_report, cmd_calibrate, cmd_discrepancy, cmd_simulate, ExampleKind,
    RunConfig,
};
use l2calib::Error;

#[derive(Parser)]
#[command(name = "l2calib", version, about = "L2 calibration of imperfect computer models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the configured run seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; all cores when absent.
    #[arg(long)]
    workers: Option<usize>,
    /// Exit with status 3 when results fall outside the acceptance envelopes.
    #[arg(long)]
    check: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Calibrate against one dataset (CSV columns x1..xd, y).
    Calibrate {
        #[command(flatten)]
        common: Common,
        /// Physical observations.
        #[arg(long)]
        data: PathBuf,
    },
    /// Monte-Carlo study over replications and noise levels.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Squared L2 discrepancy curve in closed form and by quadrature.
    Discrepancy {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "example2")]
        example: CurveExample,
        #[arg(long, default_value_t = -2.0, allow_negative_numbers = true)]
        theta_min: f64,
        #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
        theta_max: f64,
        #[arg(long, default_value_t = 401)]
        steps: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CurveExample {
    Example1,
    Example2,
}

fn load(common: &Common) -> Result<RunConfig, Error> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::from_path(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if common.workers.is_some() {
        cfg.workers = common.workers;
    }
    if common.out.is_some() {
        cfg.output = common.out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<Vec<String>, Error> {
    match cli.command {
        Command::Calibrate { common, data } => {
            let cfg = load(&common)?;
            let rows = cmd_calibrate(&cfg, &data)?;
            Ok(rows
                .iter()
                .filter(|r| common.check && !r.is_ok())
                .map(|r| format!("{} failed: {}", r.method, r.status))
                .collect())
        }
        Command::Simulate { common } => {
            let cfg = load(&common)?;
            let report = cmd_simulate(&cfg)?;
            Ok(if common.check {
                check_report(cfg.example, &report)
            } else {
                Vec::new()
            })
        }
        Command::Discrepancy {
            common,
            example,
            theta_min,
            theta_max,
            steps,
        } => {
            let example = match example {
                CurveExample::Example1 => ExampleKind::Example1,
                CurveExample::Example2 => ExampleKind::Example2,
            };
            let rows = cmd_discrepancy(example, theta_min, theta_max, steps, common.out.as_deref())?;
            Ok(if common.check {
                check_discrepancy(&rows)
            } else {
                Vec::new()
            })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(violations) if violations.is_empty() => ExitCode::SUCCESS,
        Ok(violations) => {
            for v in violations {
                eprintln!("check failed: {v}");
            }
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
