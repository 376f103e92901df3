use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use bubblelab::experiments::report::{EXIT_ABORT, EXIT_ASSERTION, EXIT_PASS, EXIT_USAGE};
use bubblelab::experiments::suite::{all_checks, KNOWN_DEVIATIONS};
use bubblelab::experiments::{exit_code_for, preset, run_experiment, EpsilonList, ExperimentConfig, ExperimentKind};
use bubblelab::{Error, Result};

#[derive(Parser)]
#[command(name = "bubblelab", version, about = "Loss-of-regularity experiments for defocusing NLS")]
struct Cli {
    /// Worker threads for parameter sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment; the built-in preset is used without --config.
    Run {
        experiment: ExperimentKind,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the points per axis of the main grid.
        #[arg(long)]
        resolution: Option<usize>,
    },
    /// Run the property suite and print one line per criterion.
    Check {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run a configured experiment with one parameter list replaced.
    Sweep {
        #[arg(long)]
        param: SweepParam,
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        values: Vec<f64>,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        resolution: Option<usize>,
    },
    /// Print the preset configuration of an experiment as TOML.
    Preset { experiment: ExperimentKind },
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepParam {
    Eps,
    Sigma,
}

fn execute(mut cfg: ExperimentConfig, out: Option<PathBuf>, resolution: Option<usize>) -> Result<i32> {
    if let Some(n) = resolution {
        cfg.grid.n = Some(n);
    }
    cfg.validate()?;
    let output = run_experiment(&cfg)?;
    for c in &output.summary.criteria {
        println!("{}", c.line());
    }
    let dir = out.unwrap_or_else(|| cfg.output_dir.clone());
    let (csv, json) = output.write(&dir)?;
    println!("wrote {} and {}", csv.display(), json.display());
    Ok(output.exit_code())
}

fn check(out: Option<PathBuf>) -> Result<i32> {
    let mut code = EXIT_PASS;
    let mut all = Vec::new();
    for (name, f) in all_checks() {
        match f() {
            Ok(criteria) => {
                for c in criteria {
                    let known = if KNOWN_DEVIATIONS.contains(&c.name.as_str()) { " [known deviation]" } else { "" };
                    println!("{name}: {}{known}", c.line());
                    if c.asserted && !c.pass {
                        code = code.max(EXIT_ASSERTION);
                    }
                    all.push(c);
                }
            }
            Err(e) => {
                println!("ABORT {name}: {e}");
                code = code.max(exit_code_for(&e));
            }
        }
    }
    if let Some(dir) = out {
        std::fs::create_dir_all(&dir)?;
        std::fs::write(dir.join("check.json"), serde_json::to_string_pretty(&all)?)?;
    }
    Ok(code)
}

fn dispatch(cli: Cli) -> Result<i32> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Error::Config(e.to_string()))?;
    }
    match cli.command {
        Command::Run { experiment, config, out, resolution } => {
            let cfg = match config {
                Some(p) => ExperimentConfig::load(&p)?,
                None => preset(experiment),
            };
            if cfg.experiment != experiment {
                return Err(Error::Config(format!(
                    "config describes {} but {} was requested",
                    cfg.experiment.name(),
                    experiment.name()
                )));
            }
            execute(cfg, out, resolution)
        }
        Command::Check { out } => check(out),
        Command::Sweep { param, values, config, out, resolution } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            match param {
                SweepParam::Eps => cfg.epsilon_list = EpsilonList::Explicit(values),
                SweepParam::Sigma => cfg.sigma_list = values,
            }
            execute(cfg, out, resolution)
        }
        Command::Preset { experiment } => {
            print!("{}", preset(experiment).to_toml()?);
            Ok(EXIT_PASS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { EXIT_PASS as u8 });
        }
    };
    let code = match dispatch(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    };
    debug_assert!([EXIT_PASS, EXIT_USAGE, EXIT_ASSERTION, EXIT_ABORT].contains(&code));
    ExitCode::from(code as u8)
}
