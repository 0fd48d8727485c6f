use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use thermal_epidemic::scenario::{self, CalibrationTarget, CommandOptions};
use thermal_epidemic::Result;

#[derive(Parser)]
#[command(name = "thermal-epidemic", version, about = "Epidemic spreading simulated with a system/bath spin model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write per-site survival curves.
    Simulate(Common),
    /// Calibrate lambda from the secondary attack rate or sigma from R0.
    Calibrate {
        #[arg(value_enum)]
        target: Target,
        #[command(flatten)]
        common: Common,
    },
    /// Sweep the household coupling and fit the sinc law.
    GammaScan(Common),
    /// Compare the Trotter, Markov and RK4 engines.
    OracleCompare(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Lambda,
    Sigma,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Write an SVG heatmap, e.g. `--heatmap day=4`.
    #[arg(long, value_parser = parse_heatmap)]
    heatmap: Option<f64>,
}

fn parse_heatmap(s: &str) -> std::result::Result<f64, String> {
    let day = s
        .strip_prefix("day=")
        .ok_or_else(|| format!("expected day=D, got `{s}`"))?;
    day.parse::<f64>()
        .ok()
        .filter(|d| d.is_finite() && *d >= 0.0)
        .ok_or_else(|| format!("`{day}` is not a day"))
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate(c) => with_config(c, |cfg, o| scenario::cmd_simulate(cfg, &c.out, o).map(|_| ())),
        Command::Calibrate { target, common: c } => {
            let t = match target {
                Target::Lambda => CalibrationTarget::Lambda,
                Target::Sigma => CalibrationTarget::Sigma,
            };
            with_config(c, |cfg, o| {
                let m = scenario::cmd_calibrate(cfg, t, &c.out, o)?;
                println!("{}", serde_json::to_string_pretty(&m.results)?);
                Ok(())
            })
        }
        Command::GammaScan(c) => with_config(c, |cfg, o| {
            let m = scenario::cmd_gamma_scan(cfg, &c.out, o)?;
            println!("{}", serde_json::to_string_pretty(&m.results)?);
            Ok(())
        }),
        Command::OracleCompare(c) => with_config(c, |cfg, o| {
            let (_, report) = scenario::cmd_oracle_compare(cfg, &c.out, o)?;
            for v in &report.verdicts {
                match v.max_abs_diff {
                    Some(d) => println!("{:<7} max |diff| = {d:.3e} (threshold {}) {}", v.engine, v.threshold, v.status),
                    None => println!("{:<7} {}: {}", v.engine, v.status, v.note.as_deref().unwrap_or("")),
                }
            }
            Ok(())
        }),
    }
}

fn with_config(common: &Common, f: impl FnOnce(&scenario::ScenarioConfig, &CommandOptions) -> Result<()>) -> Result<()> {
    let cfg = scenario::load_scenario(&common.config)?;
    let opts = CommandOptions {
        seed: common.seed,
        heatmap_day: common.heatmap,
    };
    f(&cfg, &opts)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
