use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use scalinv_core::analysis::{
    fit_fractal_dimension, fit_heisenberg_exponent, fit_power_law_xy, minimize_collapse, propose_power_law_window,
    CollapsePoint, CollapseSearch, PinfMode,
};
use scalinv_harness::output::{read_table, MANIFEST_FILE};
use scalinv_harness::presets::{preset, PRESET_IDS};
use scalinv_harness::{emit_outputs, resume_sweep, run_sweep_with, HarnessError, HarnessResult, RunOptions};
use scalinv_harness::{OutputFormat, SweepConfig, Task};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "scalinv", version, about = "Survival probability and spectral form factor at eigenstate transitions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Tsv,
    Json,
}

#[derive(Args, Clone)]
struct RunFlags {
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (realizations in flight).
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Continue from the checkpoint in the output directory.
    #[arg(long)]
    resume: bool,
    /// Replace existing output files.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct ConfigRun {
    /// Sweep configuration (TOML or JSON).
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    flags: RunFlags,
}

#[derive(Subcommand)]
enum Command {
    /// Run every task listed in the config.
    Sweep(ConfigRun),
    /// Survival probability and P_bar only.
    Survival(ConfigRun),
    /// Raw spectral form factor only.
    Sff(ConfigRun),
    /// Mean gap ratio only.
    Rstat(ConfigRun),
    /// Fit p = a tau^-beta to a curve table (columns tau, mean).
    FitPower {
        #[arg(long)]
        input: PathBuf,
        /// Fit window; proposed from the data when omitted.
        #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
        window: Option<Vec<f64>>,
    },
    /// Fit P_bar = P_inf + c D^-gamma to a scaling table.
    FitFractal {
        #[arg(long)]
        input: PathBuf,
        /// `free`, or a fixed asymptote value. Both fixed(0) and free are
        /// reported when omitted.
        #[arg(long)]
        pinf: Option<String>,
    },
    /// Fit t_H_typ = b D^n to a scaling table.
    FitHeisenberg {
        #[arg(long)]
        input: PathBuf,
    },
    /// Gap-ratio scaling collapse of an rstat table (first column alpha).
    Collapse {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], default_values_t = [0.55, 0.95])]
        alpha_range: Vec<f64>,
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], default_values_t = [0.2, 2.0])]
        mu_range: Vec<f64>,
    },
    /// Canned desk-scale sweep for one figure.
    Reproduce {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(PRESET_IDS))]
        figure: String,
        #[command(flatten)]
        flags: RunFlags,
    },
}

fn apply_flags(config: &mut SweepConfig, flags: &RunFlags) {
    if let Some(seed) = flags.seed {
        config.master_seed = seed;
    }
    if let Some(w) = flags.workers {
        config.workers = w;
    }
    if let Some(out) = &flags.out {
        config.output.dir = out.clone();
    }
    if let Some(f) = flags.format {
        config.output.format = match f {
            Format::Tsv => OutputFormat::Tsv,
            Format::Json => OutputFormat::Json,
        };
    }
}

fn execute(config: &SweepConfig, flags: &RunFlags) -> HarnessResult<()> {
    config.validate()?;
    let dir = config.output.dir.clone();
    if !flags.force && dir.join(MANIFEST_FILE).exists() {
        return Err(HarnessError::Io(format!(
            "{} already holds results; pass --force to overwrite",
            dir.display()
        )));
    }
    let opts = RunOptions {
        checkpoint_dir: Some(dir.join("checkpoint")),
        stop_after: None,
    };
    let results = if flags.resume {
        resume_sweep(config, &opts)?
    } else {
        run_sweep_with(config, &opts)?
    };
    let written = emit_outputs(&results, config, &dir, config.output.format, flags.force)?;
    log::info!("wrote {} files to {}", written.len(), dir.display());
    for p in results.points.iter().filter(|p| !p.valid) {
        log::warn!("point L = {} value {:?} is invalid: {:?}", p.size, p.value, p.warnings);
    }
    Ok(())
}

fn config_run(run: &ConfigRun, tasks: Option<&[Task]>) -> HarnessResult<()> {
    let mut config = SweepConfig::from_path(&run.config)?;
    if let Some(t) = tasks {
        config.tasks = t.to_vec();
    }
    apply_flags(&mut config, &run.flags);
    execute(&config, &run.flags)
}

fn print_json<T: Serialize>(value: &T) -> HarnessResult<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn column(table: &scalinv_harness::output::Table, name: &str, path: &Path) -> HarnessResult<Vec<f64>> {
    table
        .column(name)
        .ok_or_else(|| HarnessError::Config(format!("{} has no column `{name}`", path.display())))
}

fn run(cli: Cli) -> HarnessResult<()> {
    match cli.command {
        Command::Sweep(r) => config_run(&r, None),
        Command::Survival(r) => config_run(&r, Some(&[Task::Survival, Task::Ipr])),
        Command::Sff(r) => config_run(&r, Some(&[Task::Sff])),
        Command::Rstat(r) => config_run(&r, Some(&[Task::Rstat])),
        Command::FitPower { input, window } => {
            let t = read_table(&input)?;
            let (x, p) = (column(&t, "tau", &input)?, column(&t, "mean", &input)?);
            let window = match window {
                Some(w) => (w[0], w[1]),
                None => {
                    let below = x.iter().take_while(|&&t| t < 1.0).count();
                    propose_power_law_window(&x[..below], &p[..below], 0.02, 5)
                }
                .ok_or_else(|| HarnessError::Config("no power-law window found; pass --window".into()))?,
            };
            print_json(&fit_power_law_xy(&x, &p, window)?)
        }
        Command::FitFractal { input, pinf } => {
            let t = read_table(&input)?;
            let (d, p) = (column(&t, "D", &input)?, column(&t, "P_bar", &input)?);
            match pinf.as_deref() {
                None => {
                    let fixed = fit_fractal_dimension(&d, &p, PinfMode::Fixed(0.0))?;
                    let free = fit_fractal_dimension(&d, &p, PinfMode::Free)?;
                    print_json(&serde_json::json!({ "fixed": fixed, "free": free }))
                }
                Some("free") => print_json(&fit_fractal_dimension(&d, &p, PinfMode::Free)?),
                Some(v) => {
                    let v: f64 = v
                        .parse()
                        .map_err(|_| HarnessError::Config(format!("--pinf expects `free` or a number, got `{v}`")))?;
                    print_json(&fit_fractal_dimension(&d, &p, PinfMode::Fixed(v))?)
                }
            }
        }
        Command::FitHeisenberg { input } => {
            let t = read_table(&input)?;
            print_json(&fit_heisenberg_exponent(
                &column(&t, "D", &input)?,
                &column(&t, "t_H_typ", &input)?,
            )?)
        }
        Command::Collapse {
            input,
            alpha_range,
            mu_range,
        } => {
            let t = read_table(&input)?;
            let (l, r) = (column(&t, "L", &input)?, column(&t, "r_bar", &input)?);
            let alpha = t.nth(0);
            let points: Vec<CollapsePoint> = (0..l.len())
                .map(|i| CollapsePoint {
                    size: l[i],
                    alpha: alpha[i],
                    r: r[i],
                })
                .collect();
            let search = CollapseSearch::new((alpha_range[0], alpha_range[1]), (mu_range[0], mu_range[1]));
            print_json(&minimize_collapse(&points, &search)?)
        }
        Command::Reproduce { figure, flags } => {
            let base = flags.out.clone().unwrap_or_else(|| PathBuf::from("out").join(&figure));
            let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
            for (name, mut config) in preset(&figure).expect("figure id validated by clap") {
                config.workers = workers;
                apply_flags(&mut config, &flags);
                config.output.dir = base.join(&name);
                log::info!("{figure}/{name}: {} sizes, hash {}", config.sizes.len(), config.hash());
                execute(&config, &flags)?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
