use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use semcom::config::RunConfig;
use semcom::data::{convert_csv, synth_generate, SynthSpec};
use semcom::{checkpoint, harness, AppError};
use semcom_core::model::{ModelSpec, Variant};

#[derive(Parser)]
#[command(name = "semcom", about = "Multitask multimodal semantic communication lab", version)]
struct Cli {
    /// JSON run configuration; omitted fields take defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed (flag > SEMCOM_SEED env > config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Suppresses per-epoch progress logging.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and write checkpoint + metrics.
    Train,
    /// Evaluate a checkpoint on a dataset at one SNR.
    Eval(EvalArgs),
    /// Evaluate a checkpoint across an SNR list.
    SweepSnr(SweepSnrArgs),
    /// Train one model per K value and evaluate across SNRs.
    SweepK(SweepKArgs),
    /// Train several variants on identical data and compare across SNRs.
    Compare(CompareArgs),
    /// Print the per-variant FLOPs table.
    Flops(FlopsArgs),
    /// Generate a synthetic dataset file.
    Synth(SynthArgs),
    /// Convert CSV feature/label files into the binary dataset format.
    Convert(ConvertArgs),
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Binary dataset; defaults to the config's dataset/synthetic setup.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value_t = 10.0)]
    snr: f64,
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Args)]
struct SweepSnrArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "0,3,6,9,12,15,18")]
    snrs: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepKArgs {
    #[arg(long, value_delimiter = ',', default_value = "16,32,64")]
    k_list: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0,9,18")]
    snrs: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long, value_delimiter = ',', default_value = "pe-mmsc,endnet")]
    variants: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "0,3,6,9,12,15,18")]
    snrs: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FlopsArgs {
    #[arg(long, value_delimiter = ',')]
    variants: Option<Vec<String>>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 15)]
    classes: usize,
    #[arg(long, default_value_t = 200)]
    per_class: usize,
    #[arg(long, default_value_t = 144)]
    d_hsi: usize,
    #[arg(long, default_value_t = 21)]
    d_lidar: usize,
    #[arg(long, default_value_t = 3.0)]
    separation: f64,
    #[arg(long, default_value_t = 0.5)]
    correlation: f64,
    #[arg(long, default_value_t = 4)]
    latent: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ConvertArgs {
    #[arg(long)]
    hsi: PathBuf,
    #[arg(long)]
    lidar: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn effective_config(cli: &Cli) -> semcom::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Ok(env_seed) = std::env::var("SEMCOM_SEED") {
        cfg.seed = env_seed
            .parse()
            .map_err(|_| AppError::Usage(format!("SEMCOM_SEED is not an integer: {env_seed}")))?;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = &cli.output_dir {
        cfg.output_dir = dir.clone();
    }
    if cli.quiet {
        cfg.quiet = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_variants(names: &[String]) -> semcom::Result<Vec<Variant>> {
    names
        .iter()
        .map(|n| {
            Variant::parse(n).ok_or_else(|| AppError::Usage(format!("unknown variant: {n}")))
        })
        .collect()
}

fn load_eval_inputs(
    cfg: &RunConfig,
    checkpoint_path: &PathBuf,
    data: &Option<PathBuf>,
) -> semcom::Result<(ModelSpec, semcom_core::model::ModelParams, semcom::data::Dataset)> {
    let (spec, params) = checkpoint::load(checkpoint_path)?;
    let mut eval_cfg = cfg.clone();
    eval_cfg.variant = spec.variant;
    eval_cfg.d_hsi = spec.d_hsi;
    eval_cfg.d_lidar = spec.d_lidar;
    eval_cfg.classes = spec.m;
    eval_cfg.k = spec.k;
    eval_cfg.encoder_widths = spec.encoder_widths.clone();
    eval_cfg.fusion_widths = spec.fusion_widths.clone();
    eval_cfg.decoder_widths = spec.decoder_widths.clone();
    if let Some(path) = data {
        eval_cfg.dataset = Some(path.clone());
    }
    let (_, test) = harness::prepare_data(&eval_cfg)?;
    Ok((spec, params, test))
}

fn emit_records(
    out: &Option<PathBuf>,
    records: &[semcom_core::objectives::MetricsRecord],
) -> semcom::Result<()> {
    match out {
        Some(path) => harness::write_metrics(path, records),
        None => {
            println!("{}", semcom_core::objectives::MetricsRecord::CSV_HEADER);
            for r in records {
                println!("{}", r.to_csv_row());
            }
            Ok(())
        }
    }
}

fn run(cli: Cli) -> semcom::Result<()> {
    match &cli.command {
        Command::Train => {
            let cfg = effective_config(&cli)?;
            let artifacts = harness::train(&cfg)?;
            if !cfg.quiet {
                eprintln!("checkpoint: {}", artifacts.checkpoint.display());
                eprintln!("metrics: {}", artifacts.metrics_csv.display());
            }
            Ok(())
        }
        Command::Eval(args) => {
            let cfg = effective_config(&cli)?;
            let (spec, mut params, test) = load_eval_inputs(&cfg, &args.checkpoint, &args.data)?;
            let trials = args.trials.unwrap_or(cfg.trials);
            let rec = harness::evaluate_at(
                &cfg, &spec, &mut params, &test, args.snr, trials, cfg.seed, 0,
            )?;
            emit_records(&None, std::slice::from_ref(&rec))
        }
        Command::SweepSnr(args) => {
            let cfg = effective_config(&cli)?;
            let (spec, mut params, test) = load_eval_inputs(&cfg, &args.checkpoint, &args.data)?;
            let records = harness::sweep_snr(&cfg, &spec, &mut params, &test, &args.snrs, 0)?;
            emit_records(&args.out, &records)
        }
        Command::SweepK(args) => {
            let cfg = effective_config(&cli)?;
            let records = harness::sweep_k(&cfg, &args.k_list, &args.snrs)?;
            emit_records(&args.out, &records)
        }
        Command::Compare(args) => {
            let cfg = effective_config(&cli)?;
            let variants = parse_variants(&args.variants)?;
            let records = harness::compare_variants(&cfg, &variants, &args.snrs)?;
            emit_records(&args.out, &records)
        }
        Command::Flops(args) => {
            let cfg = effective_config(&cli)?;
            let variants = match &args.variants {
                Some(names) => parse_variants(names)?,
                None => Variant::ALL.to_vec(),
            };
            let base = cfg.model_spec()?;
            print!("{}", harness::flops_table(&base, &variants));
            Ok(())
        }
        Command::Synth(args) => {
            let cfg = effective_config(&cli)?;
            let ds = synth_generate(&SynthSpec {
                m: args.classes,
                n_per_class: args.per_class,
                d_hsi: args.d_hsi,
                d_lidar: args.d_lidar,
                class_separation: args.separation,
                correlation: args.correlation,
                latent_dim: args.latent,
                seed: cfg.seed,
            });
            ds.save(&args.out)?;
            if !cfg.quiet {
                eprintln!("wrote {} samples to {}", ds.n(), args.out.display());
            }
            Ok(())
        }
        Command::Convert(args) => {
            convert_csv(&args.hsi, &args.lidar, &args.labels, args.classes, &args.out)
        }
    }
}
