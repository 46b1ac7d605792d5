use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tfmd_core::experiment::{
    analysis_text, cmd_ablate, cmd_analyze, cmd_compare_losses, cmd_gen, cmd_sweep, cmd_train, comparison_table,
    metrics_text, sweep_table, RunConfig, SweepConfig, SweepParam,
};
use tfmd_core::losses::{LossKind, DEFAULT_BETA, DEFAULT_GAMMA};
use tfmd_core::{Error, ModalitySet, Result};

#[derive(Parser)]
#[command(name = "tfmd", version, about = "Long-tailed drug-pair classification experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset file.
    Gen(GenArgs),
    /// Train one model and report held-out metrics.
    Train(RunArgs),
    /// Train one model per loss on shared data and initialization.
    CompareLosses {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated loss kinds.
        #[arg(long, value_delimiter = ',', default_value = "ce,wce,fl,cb,bs,ldam,tfl", value_parser = parse_loss)]
        losses: Vec<LossKind>,
    },
    /// Train one model per modality subset.
    Ablate {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated variants such as G,GS,TFL-GSTE.
        #[arg(long, value_delimiter = ',', default_value = "G,S,T,E,GS,TE,GSTE", value_parser = parse_variant)]
        variants: Vec<ModalitySet>,
    },
    /// Sweep one loss hyperparameter over a grid.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// beta, ts or gamma.
        #[arg(long)]
        param: String,
        /// Comma-separated grid values.
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        repeats: usize,
    },
    /// Gradient-vanishing threshold and loss/gradient curves.
    Analyze {
        /// fl or tfl.
        #[arg(long, default_value = "tfl", value_parser = parse_loss)]
        loss: LossKind,
        #[arg(long, default_value_t = DEFAULT_GAMMA)]
        gamma: f64,
        #[arg(long, default_value_t = DEFAULT_BETA)]
        beta: f64,
        /// Directory for curve tables.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    cir: Option<f64>,
    #[arg(long)]
    drugs: Option<usize>,
    /// Block widths as g,s,t,e.
    #[arg(long)]
    dims: Option<String>,
    #[arg(long)]
    noise: Option<f64>,
    /// Output dataset file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// Run configuration file of key=value lines.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for reports and checkpoints.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    /// Read the dataset from a file instead of generating it.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, value_parser = parse_loss)]
    loss: Option<LossKind>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    ts: Option<f64>,
    /// Modality subset, e.g. GS or TFL-GSTE.
    #[arg(long, value_parser = parse_variant)]
    variant: Option<ModalitySet>,
    /// Extra configuration overrides as key=value.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        let mut set = |key: &str, value: String| cfg.set(key, &value);
        if let Some(v) = self.seed {
            set("seed", v.to_string())?;
        }
        if let Some(v) = &self.preset {
            set("dataset.preset", v.clone())?;
        }
        if let Some(v) = &self.data {
            set("dataset.file", v.display().to_string())?;
        }
        if let Some(v) = self.loss {
            set("loss.kind", v.to_string())?;
        }
        if let Some(v) = self.beta {
            set("loss.beta", v.to_string())?;
        }
        if let Some(v) = self.gamma {
            set("loss.gamma", v.to_string())?;
        }
        if let Some(v) = self.ts {
            set("loss.ts", v.to_string())?;
        }
        if let Some(v) = self.variant {
            set("model.modalities", v.to_string())?;
        }
        for kv in &self.overrides {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects key=value, got `{kv}`")))?;
            set(k.trim(), v.to_string())?;
        }
        Ok(cfg)
    }
}

impl GenArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        let pairs = [
            ("seed", self.seed.map(|v| v.to_string())),
            ("dataset.preset", self.preset.clone()),
            ("dataset.n_classes", self.classes.map(|v| v.to_string())),
            ("dataset.n_samples", self.samples.map(|v| v.to_string())),
            ("dataset.cir", self.cir.map(|v| v.to_string())),
            ("dataset.n_drugs", self.drugs.map(|v| v.to_string())),
            ("dataset.embed_dims", self.dims.clone()),
            ("dataset.noise_std", self.noise.map(|v| v.to_string())),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                cfg.set(k, &v)?;
            }
        }
        Ok(cfg)
    }
}

fn parse_loss(s: &str) -> std::result::Result<LossKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_variant(s: &str) -> std::result::Result<ModalitySet, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Process exit status for each error class; 2 is left to usage errors.
fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) => 3,
        Error::Parameter { .. } | Error::Spec(_) | Error::Construction(_) => 4,
        Error::Io { .. } => 5,
        Error::Parse { .. } | Error::Schema { .. } => 6,
        Error::Divergence { .. } | Error::Numeric(_) => 7,
        _ => 8,
    }
}

fn without_timestamp(text: &str) -> &str {
    text.split_once('\n').map_or(text, |(_, rest)| rest)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen(args) => {
            let cfg = args.resolve()?;
            let (data, stats) = cmd_gen(&cfg.dataset_spec()?, &args.out)?;
            println!(
                "records={}\nclasses={}\nrealized_cir={}\nmin_count={}\nmax_count={}",
                data.len(),
                stats.n_classes(),
                stats.cir(),
                stats.counts().iter().min().unwrap(),
                stats.counts().iter().max().unwrap(),
            );
        }
        Command::Train(args) => {
            let cfg = args.resolve()?;
            let outcome = cmd_train(&cfg, args.out.as_deref())?;
            print!("{}", without_timestamp(&metrics_text(&cfg, &outcome)));
        }
        Command::CompareLosses { run, losses } => {
            let cfg = run.resolve()?;
            let rows = cmd_compare_losses(&cfg, &losses, run.out.as_deref())?;
            print!("{}", comparison_table("loss", &rows));
        }
        Command::Ablate { run, variants } => {
            let cfg = run.resolve()?;
            let rows = cmd_ablate(&cfg, &variants, run.out.as_deref())?;
            print!("{}", comparison_table("variant", &rows));
        }
        Command::Sweep { run, param, grid, repeats } => {
            let cfg = run.resolve()?;
            let sweep = SweepConfig {
                param: param.parse::<SweepParam>()?,
                grid,
                repeats,
            };
            let points = cmd_sweep(&cfg, &sweep, run.out.as_deref())?;
            print!("{}", sweep_table(sweep.param, &points));
        }
        Command::Analyze { loss, gamma, beta, out } => {
            let report = cmd_analyze(loss, gamma, beta, out.as_deref())?;
            print!("{}", analysis_text(&report));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
