use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use aosnet::experiment::{run_experiment, write_outputs};
use aosnet::milp::{audit, count_model, export_lp, Dimensions};
use aosnet::simulator::{run_episode, write_slot_csv, write_summary_csv};
use aosnet::{build_model, Environment, ExperimentConfig, InstanceSnapshot, Result};

#[derive(Parser)]
#[command(name = "aosnet", version, about = "Age-of-service scheduling experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML configuration; defaults apply to everything it leaves out.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// External LP solver command with {input} and {output} placeholders.
    #[arg(long)]
    solver: Option<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(cmd) = &self.solver {
            config.scheduling.external_solver = Some(cmd.clone());
        }
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a sweep and write raw.csv, summary.csv, slots.csv, episodes.csv.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory.
        #[arg(short, long, default_value = "results")]
        out: PathBuf,
        /// Comma-separated scheduler names.
        #[arg(long, value_delimiter = ',')]
        schedulers: Option<Vec<String>>,
        /// Sweep axis name.
        #[arg(long)]
        axis: Option<String>,
        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        runs: Option<usize>,
        /// Worker threads; 0 uses every core.
        #[arg(long)]
        workers: Option<usize>,
        /// Fill the runtime_ms column.
        #[arg(long)]
        record_runtime: bool,
    },
    /// Play one episode and print its objective.
    Episode {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(short, long, default_value = "greedy")]
        scheduler: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Write the per-slot CSV here.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Write the full-horizon model of one episode as an LP file.
    ExportLp {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Destination; standard output when absent.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Compare a built model against the closed-form size counts.
    Audit {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Print the default configuration as TOML.
    DefaultConfig,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| aosnet::Error::Config(format!("cannot write {}: {e}", path.display())))
}

fn full_snapshot(env: &Environment) -> InstanceSnapshot<'_> {
    InstanceSnapshot::new(
        &env.network,
        &env.requests,
        env.arrivals.clone(),
        env.gains.clone(),
        env.initial_levels.clone(),
        env.config.energy.sense_energy_per_bit,
        env.config.energy.slot_duration,
    )
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            out,
            schedulers,
            axis,
            values,
            seed,
            runs,
            workers,
            record_runtime,
        } => {
            let mut cfg = config.load()?;
            let sweep = &mut cfg.experiment;
            if let Some(s) = schedulers {
                sweep.schedulers = s;
            }
            if let Some(a) = axis {
                sweep.axis = Some(a);
            }
            if let Some(v) = values {
                sweep.values = v;
            }
            if let Some(s) = seed {
                sweep.seed = s;
            }
            if let Some(r) = runs {
                sweep.runs = r;
            }
            if let Some(w) = workers {
                sweep.workers = w;
            }
            sweep.record_runtime |= record_runtime;
            let output = run_experiment(&cfg)?;
            write_outputs(&output, &out)?;
            for s in &output.skipped {
                eprintln!("skipped {} seed {}: {}", s.scheduler, s.seed, s.reason);
            }
            let mut stdout = io::stdout().lock();
            aosnet::experiment::write_summary_csv(&output.summary, &mut stdout)?;
            info!("wrote {}", out.display());
        }
        Command::Episode {
            config,
            scheduler,
            seed,
            out,
        } => {
            let cfg = config.load()?;
            let result = run_episode(&cfg, &scheduler, seed)?;
            if let Some(path) = out {
                write_slot_csv(std::slice::from_ref(&result), create(&path)?)?;
            }
            write_summary_csv(std::slice::from_ref(&result), io::stdout().lock())?;
            for v in &result.invariant_violations {
                eprintln!("invariant: {v}");
            }
        }
        Command::ExportLp { config, seed, out } => {
            let cfg = config.load()?;
            let env = Environment::generate(&cfg, seed)?;
            let model = build_model(&full_snapshot(&env))?;
            let text = export_lp(&model)?;
            match out {
                Some(path) => {
                    let mut w = create(&path)?;
                    w.write_all(text.as_bytes())
                        .and_then(|_| w.flush())
                        .map_err(|e| aosnet::Error::Config(format!("cannot write {}: {e}", path.display())))?;
                }
                None => print!("{text}"),
            }
        }
        Command::Audit { config, seed } => {
            let cfg = config.load()?;
            let env = Environment::generate(&cfg, seed)?;
            let snap = full_snapshot(&env);
            let model = build_model(&snap)?;
            let expected = count_model(&Dimensions::of(&snap));
            let found = audit(&model);
            print!("{}", found.report());
            println!("closed_form_variables {}", expected.variables);
            println!("closed_form_constraints {}", expected.constraints);
            let ok = found.binaries == expected.variables
                && found.accounted_rows == expected.constraints
                && found.missing_equations.is_empty();
            println!("match {ok}");
        }
        Command::DefaultConfig => print!("{}", ExperimentConfig::default().to_toml_string()),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
