//! `ancs`: Monte Carlo driver for adaptive non-uniform compressive sampling.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use ancs_core::harness::{self, emit, preset, run_scenario, run_sweep, run_trial_traced, Format, ScenarioConfig, SweepSpec};
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

#[derive(Parser, Debug)]
#[command(name = "ancs", version, about = "Adaptive non-uniform compressive sampling experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one scenario and print its summary.
    Run(Common),
    /// Sweep one parameter over a preset or custom grid.
    Sweep(SweepArgs),
    /// Dump the posterior after every step of a single trial as JSON.
    Inspect(InspectArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// TOML or JSON scenario file; unspecified fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a numeric parameter, e.g. `--set m=80` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    trials: Option<usize>,
    /// Base seed; falls back to ANCS_SEED, then to the config file.
    #[arg(long, env = "ANCS_SEED")]
    seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: Format,
    /// Worker threads; all cores when absent.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Methods {
    /// Uniform and ANCS sampling with both estimators.
    All,
    /// Uniform and ANCS sampling with the ℓ1 estimator only.
    L1,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Built-in sweep: fig3, fig4, fig5, fig6 or fig7.
    #[arg(long, conflicts_with_all = ["param", "values"])]
    preset: Option<String>,
    /// Parameter to sweep in a custom grid.
    #[arg(long, requires = "values")]
    param: Option<String>,
    /// Comma-separated values for `--param`.
    #[arg(long, value_delimiter = ',', requires = "param")]
    values: Vec<f64>,
    #[arg(long, value_enum, default_value = "all")]
    methods: Methods,
}

#[derive(Args, Debug)]
struct InspectArgs {
    #[command(flatten)]
    common: Common,
    /// Index of the trial to trace (its seed is base seed + index).
    #[arg(long, default_value_t = 0)]
    trial: usize,
}

impl Common {
    fn scenario(&self) -> Result<ScenarioConfig> {
        let mut cfg = match &self.config {
            Some(path) => ScenarioConfig::load(path)?,
            None => ScenarioConfig::default(),
        };
        for item in &self.overrides {
            let (key, value) = item
                .split_once('=')
                .with_context(|| format!("override `{item}` is not KEY=VALUE"))?;
            let value: f64 = value
                .trim()
                .parse()
                .with_context(|| format!("override `{item}` has a non-numeric value"))?;
            cfg.set_param(key.trim(), value)?;
        }
        if let Some(trials) = self.trials {
            cfg.trials = trials;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn init_threads(&self) -> Result<()> {
        if let Some(n) = self.threads {
            if n == 0 {
                bail!("--threads must be at least 1");
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .context("configuring worker threads")?;
        }
        Ok(())
    }
}

fn write_text(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_table(table: &harness::SweepTable, common: &Common) -> Result<()> {
    match &common.out {
        Some(path) => Ok(emit(table, path, common.format)?),
        None => {
            let text = match common.format {
                Format::Csv => table.to_csv_string(),
                Format::Json => table.to_json_string() + "\n",
            };
            write_text(None, &text)
        }
    }
}

fn run(args: &Common) -> Result<()> {
    args.init_threads()?;
    let cfg = args.scenario()?;
    let summary = run_scenario(&cfg)?;
    let table = harness::SweepTable {
        rows: vec![harness::SweepRow::from_summary("run".into(), "none", 0.0, &summary)],
    };
    write_table(&table, args)
}

fn sweep(args: &SweepArgs) -> Result<()> {
    args.common.init_threads()?;
    let base = args.common.scenario()?;
    let spec = match (&args.preset, &args.param) {
        (Some(name), _) => preset(name, &base)?,
        (None, Some(param)) => SweepSpec {
            name: "custom".into(),
            base,
            param: param.clone(),
            values: args.values.clone(),
            methods: match args.methods {
                Methods::All => harness::sweep::ALL_METHODS.to_vec(),
                Methods::L1 => harness::sweep::L1_METHODS.to_vec(),
            },
        },
        (None, None) => bail!("sweep needs --preset or --param with --values"),
    };
    let table = run_sweep(&spec)?;
    write_table(&table, &args.common)
}

fn inspect(args: &InspectArgs) -> Result<()> {
    args.common.init_threads()?;
    let cfg = args.common.scenario()?;
    let seed = harness::sweep::trial_seed(cfg.seed, args.trial);
    let (record, posteriors) = run_trial_traced(&cfg, seed, true)?;
    let doc = json!({
        "config": cfg,
        "trial_seed": seed,
        "steps": record.steps,
        "posteriors": posteriors,
    });
    let text = serde_json::to_string_pretty(&doc)? + "\n";
    write_text(args.common.out.as_deref(), &text)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(args) => run(args),
        Command::Sweep(args) => sweep(args),
        Command::Inspect(args) => inspect(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
