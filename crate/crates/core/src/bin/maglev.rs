use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use maglev_core::harness::{epsilon_sweep, run_metrics, simulate, ControllerKind, ScenarioConfig, SweepReport};
use maglev_core::observer::MomentaVariant;

#[derive(Parser)]
#[command(
    name = "maglev",
    about = "Sensorless levitated-ball simulations with signal injection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one closed-loop scenario and write its trajectory as CSV.
    Sim {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
    /// Repeat a scenario over several probe periods and fit error scalings.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated probe periods; fractions such as `1/300` are accepted.
        #[arg(long, value_delimiter = ',', value_parser = parse_period)]
        epsilon: Vec<f64>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Print the built-in scenario as TOML.
    Config {
        /// Print the sensorless variant.
        #[arg(long)]
        sensorless: bool,
    },
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML); the built-in simulation scenario when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_variant)]
    observer: Option<MomentaVariant>,
    #[arg(long, value_parser = parse_controller)]
    controller: Option<ControllerKind>,
}

fn parse_period(s: &str) -> Result<f64, String> {
    let value = match s.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.trim().parse().map_err(|e| format!("{s}: {e}"))?;
            let den: f64 = den.trim().parse().map_err(|e| format!("{s}: {e}"))?;
            num / den
        }
        None => s.trim().parse().map_err(|e| format!("{s}: {e}"))?,
    };
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(format!("{s}: probe period must be positive"))
    }
}

fn parse_variant(s: &str) -> Result<MomentaVariant, String> {
    s.parse().map_err(|e: maglev_core::ConfigError| e.to_string())
}

fn parse_controller(s: &str) -> Result<ControllerKind, String> {
    s.parse().map_err(|e: maglev_core::ConfigError| e.to_string())
}

impl Common {
    fn scenario(&self) -> Result<ScenarioConfig, String> {
        let mut cfg = match &self.config {
            Some(path) => ScenarioConfig::from_file(path).map_err(|e| e.to_string())?,
            None => ScenarioConfig::simulation(),
        };
        if let Some(seed) = self.seed {
            cfg.noise.seed = seed;
        }
        if let Some(variant) = self.observer {
            cfg.observer.momenta = variant;
        }
        if let Some(kind) = self.controller {
            cfg.controller.kind = kind;
        }
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }
}

fn run_sim(common: &Common, out: &Path) -> Result<(), String> {
    let cfg = common.scenario()?;
    match simulate(&cfg) {
        Ok(log) => {
            log.export_csv(out).map_err(|e| e.to_string())?;
            let metrics = run_metrics(&log, &cfg);
            for w in &metrics.warnings {
                eprintln!("warning: {w}");
            }
            println!("wrote {} records to {}", log.len(), out.display());
            println!(
                "{:>3} {:>9} {:>12} {:>12} {:>12} {:>12} {:>12}",
                "#", "q*", "|q^-q|", "|x1^-x1|", "|p^-p|", "|R^-R|", "|q-q*|"
            );
            for p in &metrics.plateaus {
                println!(
                    "{:>3} {:>9.5} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e}",
                    p.index,
                    p.q_star,
                    p.position_estimate_error,
                    p.flux_error,
                    p.momentum_error,
                    p.resistance_error,
                    p.tracking_error
                );
            }
            Ok(())
        }
        Err(err) => {
            if let Some(partial) = err.partial_log() {
                if partial.export_csv(out).is_ok() {
                    eprintln!("partial log ({} records) written to {}", partial.len(), out.display());
                }
            }
            Err(err.to_string())
        }
    }
}

fn write_sweep(report: &SweepReport, dir: &Path) -> Result<(), String> {
    std::fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    let path = dir.join("summary.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    let header = [
        "epsilon",
        "status",
        "position_estimate_error",
        "position_estimate_bias",
        "flux_error",
        "momentum_error",
        "momentum_error_luenberger",
        "resistance_error",
        "tracking_error",
        "lemma_residual",
    ];
    w.write_record(header).map_err(|e| e.to_string())?;
    for run in &report.runs {
        let mut row = vec![run.epsilon.to_string()];
        match &run.metrics {
            Ok(m) => {
                let s = m.steady();
                row.push("ok".into());
                for v in [
                    s.position_estimate_error,
                    s.position_estimate_bias,
                    s.flux_error,
                    s.momentum_error,
                    s.momentum_error_luenberger,
                    s.resistance_error,
                    s.tracking_error,
                ] {
                    row.push(v.to_string());
                }
            }
            Err(e) => {
                row.push(e.replace(',', ";"));
                row.extend(std::iter::repeat_n(String::new(), 7));
            }
        }
        row.push(run.lemma_residual.to_string());
        w.write_record(&row).map_err(|e| e.to_string())?;
    }
    w.flush().map_err(|e| e.to_string())?;

    let path = dir.join("slopes.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    w.write_record(["quantity", "slope", "points"])
        .map_err(|e| e.to_string())?;
    for (name, fit) in [
        ("position_estimate", report.position_estimate),
        ("flux", report.flux),
        ("momentum", report.momentum),
        ("resistance", report.resistance),
        ("tracking", report.tracking),
        ("lemma_residual", report.lemma),
    ] {
        let slope = fit.slope.map_or_else(|| "degenerate".to_string(), |s| s.to_string());
        println!("{name:>18}: slope {slope} ({} points)", fit.points);
        w.write_record([name, &slope, &fit.points.to_string()])
            .map_err(|e| e.to_string())?;
    }
    w.flush().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Sim { common, out } => run_sim(common, out),
        Command::Sweep {
            common,
            epsilon,
            out_dir,
        } => common.scenario().and_then(|cfg| {
            if epsilon.is_empty() {
                return Err("--epsilon needs at least one value".into());
            }
            let report = epsilon_sweep(&cfg, epsilon);
            let failed: Vec<_> = report.runs.iter().filter(|r| r.metrics.is_err()).collect();
            for r in &failed {
                eprintln!("epsilon {}: {}", r.epsilon, r.metrics.as_ref().unwrap_err());
            }
            if report.is_degenerate() {
                eprintln!("warning: fewer than two usable runs; slopes are degenerate");
            }
            write_sweep(&report, out_dir)?;
            if failed.is_empty() {
                Ok(())
            } else {
                Err(format!("{} of {} runs failed", failed.len(), report.runs.len()))
            }
        }),
        Command::Config { sensorless } => {
            let cfg = if *sensorless {
                ScenarioConfig::sensorless()
            } else {
                ScenarioConfig::simulation()
            };
            print!("{}", cfg.to_toml_string());
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
