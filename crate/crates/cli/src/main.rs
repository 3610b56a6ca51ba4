use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};
use leakage_core::bounds::BoundReport;
use leakage_core::dynamics::{init_thread_pool_from_env, TimeScaling};
use leakage_core::experiment::{self, ExperimentConfig, Status, SweepKind};
use leakage_core::operator::matrix_to_json_value;
use leakage_core::Error;

#[derive(Parser)]
#[command(name = "leakage", version, about = "Block diagonalization and eternal leakage bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured analyses and write summary.json plus outputs.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the configuration.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Invariant suite on the seeded batch and the configured instance.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Also write the full report as JSON here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Evaluate the bound formulas.
    #[command(group(ArgGroup::new("input").required(true).args(["x", "v_norm"])))]
    Bounds {
        /// Dimensionless strength `|V| / (gamma eta)`.
        #[arg(long)]
        x: Option<f64>,
        #[arg(long, requires_all = ["gamma", "eta"])]
        v_norm: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        eta: Option<f64>,
    },
    /// Emit model matrices and the partition as JSON.
    Model {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "h0,v")]
        emit: Vec<Emit>,
        /// Directory for `<name>.json`; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Maximum leakage over a parameter sweep with a log-log fit.
    #[command(group(ArgGroup::new("values").required(true).args(["gamma_list", "scale_list"])))]
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',')]
        gamma_list: Option<Vec<f64>>,
        /// Factors applied to `V` at the configured gamma.
        #[arg(long, value_delimiter = ',')]
        scale_list: Option<Vec<f64>>,
        #[arg(long, value_enum, default_value_t = Scaling::PerGamma)]
        time_scaling: Scaling,
        /// Writes `parameter,max_leakage` rows.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Emit {
    H0,
    V,
    Partition,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scaling {
    Fixed,
    PerGamma,
}

impl From<Scaling> for TimeScaling {
    fn from(s: Scaling) -> Self {
        match s {
            Scaling::Fixed => TimeScaling::Fixed,
            Scaling::PerGamma => TimeScaling::PerGamma,
        }
    }
}

fn report_error(e: &Error) -> ExitCode {
    eprintln!("error [{}]: {e}", e.origin());
    ExitCode::from(Status::of_error(e).exit_code() as u8)
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<(), Error> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn load(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig, Error> {
    let mut config = ExperimentConfig::load(path)?;
    if seed.is_some() {
        config.seed = seed;
        config.validate()?;
    }
    Ok(config)
}

fn main() -> ExitCode {
    init_thread_pool_from_env();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(status) => ExitCode::from(status.exit_code() as u8),
        Err(e) => report_error(&e),
    }
}

fn dispatch(command: Command) -> Result<Status, Error> {
    match command {
        Command::Run { config, seed, out } => {
            let config = load(&config, seed)?;
            let summary = experiment::run(&config, &out)?;
            let path = out.join(experiment::SUMMARY_FILE);
            match &summary.error {
                Some(err) => eprintln!("error [{}]: {}", err.origin, err.message),
                None => println!(
                    "{:?}: max leakage {}, violations {}, summary at {}",
                    summary.status,
                    summary
                        .max_leakage
                        .map_or("n/a".to_string(), |l| format!("{l:.6e}")),
                    summary.violations,
                    path.display()
                ),
            }
            Ok(summary.status)
        }
        Command::Verify {
            config,
            seed,
            report,
        } => {
            let config = load(&config, seed)?;
            let result = experiment::verify(&config);
            for inv in &result.suite.invariants {
                println!(
                    "{:<4} {:<40} evaluated {:>4}  failures {:>3}  min slack {:.3e}",
                    if inv.failures == 0 { "ok" } else { "FAIL" },
                    inv.name,
                    inv.evaluated,
                    inv.failures,
                    inv.min_slack
                );
            }
            if let Some(c) = &result.configured {
                println!(
                    "configured instance: {}",
                    if c.passed() { "ok" } else { "FAIL" }
                );
            }
            if let Some(err) = &result.error {
                eprintln!("error [{}]: {}", err.origin, err.message);
            }
            if let Some(path) = report {
                fs::write(&path, serde_json::to_string_pretty(&result)? + "\n")?;
            }
            Ok(result.status())
        }
        Command::Bounds {
            x,
            v_norm,
            gamma,
            eta,
        } => {
            let report = match (x, v_norm, gamma, eta) {
                (Some(x), ..) => BoundReport::for_x(x),
                (None, Some(v), Some(g), Some(e)) => BoundReport::evaluate(v, g, e),
                _ => unreachable!("clap enforces the argument groups"),
            };
            print_json(&report)?;
            Ok(Status::Ok)
        }
        Command::Model { config, emit, out } => {
            let config = load(&config, None)?;
            let inst = experiment::build_instance(&config)?;
            for item in emit {
                let (name, value) = match item {
                    Emit::H0 => ("h0", matrix_to_json_value(inst.h0.matrix())),
                    Emit::V => ("v", matrix_to_json_value(inst.v.matrix())),
                    Emit::Partition => ("partition", serde_json::to_value(inst.partition.record())?),
                };
                match &out {
                    Some(dir) => {
                        fs::create_dir_all(dir)?;
                        let text = serde_json::to_string_pretty(&value)? + "\n";
                        fs::write(dir.join(format!("{name}.json")), text)?;
                    }
                    None => println!("{}", serde_json::to_string(&serde_json::json!({ name: value }))?),
                }
            }
            Ok(Status::Ok)
        }
        Command::Sweep {
            config,
            gamma_list,
            scale_list,
            time_scaling,
            csv,
        } => {
            let config = load(&config, None)?;
            let (kind, values) = match (gamma_list, scale_list) {
                (Some(g), _) => (SweepKind::Gamma, g),
                (None, Some(s)) => (SweepKind::Perturbation, s),
                _ => unreachable!("clap enforces the argument groups"),
            };
            let report = experiment::sweep(&config, kind, &values, time_scaling.into())?;
            if let Some(path) = csv {
                report.write_csv(fs::File::create(path)?)?;
            }
            print_json(&report)?;
            Ok(Status::Ok)
        }
    }
}
