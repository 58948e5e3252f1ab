//! Training loop, evaluation passes and the sweep/compare experiment
//! drivers.

use std::fs;
use std::path::{Path, PathBuf};

use semcom_core::adam::AdamState;
use semcom_core::channel::transmit;
use semcom_core::flops::report_variants;
use semcom_core::model::{BnMode, ModelGraph, ModelParams, ModelSpec, Variant};
use semcom_core::objectives::{accuracy, cross_entropy_value, joint_loss, mse_value, nmse, MetricsRecord};
use semcom_core::rng::SplitMix64;
use semcom_core::Tensor;

use crate::config::{RunConfig, SnrPolicy};
use crate::data::{batch_iter, split, synth_generate, Dataset, NormStats, SplitSpec, SynthSpec};
use crate::{checkpoint, AppError, Result};

const CHANNEL_SALT: u64 = 0x9E37_79B9_7F4A_7C15;
const SNR_SALT: u64 = 0xBF58_476D_1CE4_E5B9;
const EVAL_SALT: u64 = 0x94D0_49BB_1331_11EB;

/// Writes a file via a temp sibling + rename so readers never observe a
/// partial file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Loads the configured dataset or generates the synthetic one.
pub fn load_or_synth(cfg: &RunConfig) -> Result<Dataset> {
    match &cfg.dataset {
        Some(path) => {
            let ds = Dataset::load(path)?;
            if ds.m() != cfg.classes
                || ds.hsi.cols != cfg.d_hsi
                || ds.lidar.cols != cfg.d_lidar
            {
                return Err(AppError::Data(format!(
                    "{}: dataset dims ({} x {} / {} classes) do not match config ({} x {} / {})",
                    path.display(),
                    ds.hsi.cols,
                    ds.lidar.cols,
                    ds.m(),
                    cfg.d_hsi,
                    cfg.d_lidar,
                    cfg.classes
                )));
            }
            Ok(ds)
        }
        None => Ok(synth_generate(&SynthSpec {
            m: cfg.classes,
            n_per_class: cfg.synth_per_class,
            d_hsi: cfg.d_hsi,
            d_lidar: cfg.d_lidar,
            class_separation: cfg.synth_separation,
            correlation: cfg.synth_correlation,
            latent_dim: cfg.synth_latent,
            seed: cfg.seed,
        })),
    }
}

/// Splits and min-max normalizes with statistics fitted on the training
/// partition only.
pub fn prepare_data(cfg: &RunConfig) -> Result<(Dataset, Dataset)> {
    let ds = load_or_synth(cfg)?;
    ds.validate()?;
    let (mut train, mut test) = split(
        &ds,
        &SplitSpec {
            train_fraction: cfg.train_fraction,
            seed: cfg.seed,
            stratified: cfg.stratified,
        },
    )?;
    let hsi_stats = NormStats::fit(&train.hsi);
    let lidar_stats = NormStats::fit(&train.lidar);
    train.hsi = hsi_stats.apply(&train.hsi);
    train.lidar = lidar_stats.apply(&train.lidar);
    test.hsi = hsi_stats.apply(&test.hsi);
    test.lidar = lidar_stats.apply(&test.lidar);
    Ok((train, test))
}

/// A trained model plus its held-out data and per-epoch history.
pub struct TrainedModel {
    pub spec: ModelSpec,
    pub params: ModelParams,
    pub test: Dataset,
    pub history: Vec<MetricsRecord>,
}

fn modal_inputs(variant: Variant, ds: &Dataset) -> (Option<&Tensor>, Option<&Tensor>) {
    (
        variant.has_hsi().then_some(&ds.hsi),
        variant.has_lidar().then_some(&ds.lidar),
    )
}

/// Trains per the config; `on_epoch` runs after each epoch's evaluation
/// (checkpointing, logging).
pub fn train_with<F>(cfg: &RunConfig, mut on_epoch: F) -> Result<TrainedModel>
where
    F: FnMut(u64, &ModelSpec, &ModelParams, &[MetricsRecord]) -> Result<()>,
{
    cfg.validate()?;
    let (train, test) = prepare_data(cfg)?;
    let spec = cfg.model_spec()?;
    let mut params = ModelParams::init(&spec, cfg.seed)?;
    let mut adam = AdamState::new(cfg.learning_rate);
    let mut chan_rng = SplitMix64::new(cfg.seed ^ CHANNEL_SALT);
    let mut snr_rng = SplitMix64::new(cfg.seed ^ SNR_SALT);
    let weights = cfg.loss_weights();
    let mut history = Vec::new();

    for epoch in 0..cfg.epochs {
        for (bi, batch) in batch_iter(train.n(), cfg.batch_size, cfg.seed, epoch)
            .into_iter()
            .enumerate()
        {
            let b = train.select(&batch);
            let snr_db = match cfg.train_snr {
                SnrPolicy::Fixed { snr_db } => snr_db,
                SnrPolicy::Uniform { lo_db, hi_db } => snr_rng.uniform(lo_db, hi_db),
            };
            let ccfg = cfg.channel_config(snr_db)?;
            let step = (|| -> Result<()> {
                let mut mg = ModelGraph::new(&mut params, BnMode::Train);
                let (hsi_in, lidar_in) = modal_inputs(cfg.variant, &b);
                let out = mg.forward_full(&spec, hsi_in, lidar_in, |g, s| {
                    transmit(g, s, &ccfg, &mut chan_rng)
                })?;
                let (loss, _) = joint_loss(
                    &mut mg.graph,
                    out.c_pre,
                    out.c_fin,
                    &b.labels,
                    out.d_hat_hsi.map(|n| (n, &b.hsi)),
                    out.d_hat_lidar.map(|n| (n, &b.lidar)),
                    &weights,
                    cfg.variant,
                )?;
                mg.backward_and_collect(loss)?;
                Ok(())
            })();
            step.map_err(|e| match e {
                AppError::Numeric(msg) => {
                    AppError::Numeric(format!("epoch {epoch} batch {bi}: {msg}"))
                }
                other => other,
            })?;
            adam.step(params.trainable_mut())?;
        }
        let rec = evaluate_at(
            cfg,
            &spec,
            &mut params,
            &test,
            cfg.eval_snr_db,
            1,
            cfg.seed ^ EVAL_SALT ^ epoch,
            epoch,
        )?;
        history.push(rec);
        on_epoch(epoch, &spec, &params, &history)?;
    }
    Ok(TrainedModel {
        spec,
        params,
        test,
        history,
    })
}

pub fn train_in_memory(cfg: &RunConfig) -> Result<TrainedModel> {
    train_with(cfg, |_, _, _, _| Ok(()))
}

/// Output files of one training run.
pub struct RunArtifacts {
    pub checkpoint: PathBuf,
    pub metrics_csv: PathBuf,
    pub config_json: PathBuf,
}

/// Trains and writes checkpoint, per-epoch metrics CSV and the resolved
/// config into `cfg.output_dir`.
pub fn train(cfg: &RunConfig) -> Result<RunArtifacts> {
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir)?;
    let ckpt_path = dir.join("checkpoint.pmsc");
    let metrics_path = dir.join("metrics.csv");
    let config_path = dir.join("config.json");
    atomic_write(&config_path, cfg.to_json_pretty().as_bytes())?;

    let interval = cfg.checkpoint_interval;
    let quiet = cfg.quiet;
    let epochs = cfg.epochs;
    let model = train_with(cfg, |epoch, spec, params, history| {
        write_metrics(&metrics_path, history)?;
        if interval > 0 && (epoch + 1) % interval == 0 {
            checkpoint::save(&ckpt_path, spec, params)?;
        }
        if !quiet {
            let rec = history.last().expect("epoch record");
            eprintln!(
                "epoch {}/{}: accuracy {:.4} loss_fin {:.4}",
                epoch + 1,
                epochs,
                rec.accuracy,
                rec.loss_fin.unwrap_or(f64::NAN)
            );
        }
        Ok(())
    })?;
    checkpoint::save(&ckpt_path, &model.spec, &model.params)?;
    write_metrics(&metrics_path, &model.history)?;
    Ok(RunArtifacts {
        checkpoint: ckpt_path,
        metrics_csv: metrics_path,
        config_json: config_path,
    })
}

pub fn write_metrics(path: &Path, records: &[MetricsRecord]) -> Result<()> {
    let mut text = String::from(MetricsRecord::CSV_HEADER);
    text.push('\n');
    for r in records {
        text.push_str(&r.to_csv_row());
        text.push('\n');
    }
    atomic_write(path, text.as_bytes())
}

/// Trial-averaged evaluation of a model at one SNR. Infinite `snr_db`
/// selects the identity channel.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_at(
    cfg: &RunConfig,
    spec: &ModelSpec,
    params: &mut ModelParams,
    test: &Dataset,
    snr_db: f64,
    trials: usize,
    seed: u64,
    epoch: u64,
) -> Result<MetricsRecord> {
    let variant = spec.variant;
    let ccfg = {
        let mut c = cfg.channel_config(snr_db)?;
        c.seed = seed;
        c
    };
    let mut rng = SplitMix64::new(seed);
    let mut acc_sum = 0.0;
    let mut sums = [0.0f64; 6]; // nmse_hsi, nmse_lidar, pre, fin, hsi, lidar
    for _ in 0..trials.max(1) {
        let mut mg = ModelGraph::new(params, BnMode::Eval);
        let (hsi_in, lidar_in) = modal_inputs(variant, test);
        let out = mg.forward_full(spec, hsi_in, lidar_in, |g, s| {
            transmit(g, s, &ccfg, &mut rng)
        })?;
        let c_fin = mg.graph.value(out.c_fin);
        acc_sum += accuracy(c_fin, &test.labels)?;
        sums[3] += cross_entropy_value(c_fin, &test.labels)?;
        if let Some(pre) = out.c_pre {
            sums[2] += cross_entropy_value(mg.graph.value(pre), &test.labels)?;
        }
        if let Some(d) = out.d_hat_hsi {
            let d = mg.graph.value(d);
            sums[0] += nmse(&test.hsi, d)?;
            sums[4] += mse_value(d, &test.hsi)?;
        }
        if let Some(d) = out.d_hat_lidar {
            let d = mg.graph.value(d);
            sums[1] += nmse(&test.lidar, d)?;
            sums[5] += mse_value(d, &test.lidar)?;
        }
    }
    let t = trials.max(1) as f64;
    let avg = |i: usize, present: bool| present.then(|| sums[i] / t);
    Ok(MetricsRecord {
        variant,
        snr_db,
        k: spec.k,
        epoch,
        accuracy: acc_sum / t,
        nmse_hsi: avg(0, variant.has_hsi()),
        nmse_lidar: avg(1, variant.has_lidar()),
        loss_pre: avg(2, variant.has_pe()),
        loss_fin: Some(sums[3] / t),
        loss_hsi: avg(4, variant.has_hsi()),
        loss_lidar: avg(5, variant.has_lidar()),
    })
}

/// Evaluates a trained model across an SNR list (sorted ascending).
pub fn sweep_snr(
    cfg: &RunConfig,
    spec: &ModelSpec,
    params: &mut ModelParams,
    test: &Dataset,
    snrs: &[f64],
    epoch: u64,
) -> Result<Vec<MetricsRecord>> {
    let mut snrs = snrs.to_vec();
    snrs.sort_by(|a, b| a.partial_cmp(b).expect("finite SNR ordering"));
    let mut out = Vec::with_capacity(snrs.len());
    for &snr in &snrs {
        out.push(evaluate_at(
            cfg,
            spec,
            params,
            test,
            snr,
            cfg.trials,
            cfg.seed ^ EVAL_SALT,
            epoch,
        )?);
    }
    Ok(out)
}

/// Trains one model per K value and evaluates each across the SNR list.
pub fn sweep_k(cfg: &RunConfig, ks: &[usize], snrs: &[f64]) -> Result<Vec<MetricsRecord>> {
    let mut out = Vec::new();
    for &k in ks {
        if k < cfg.classes {
            return Err(AppError::Usage(format!(
                "K = {k} is below the class count {}",
                cfg.classes
            )));
        }
        let mut kcfg = cfg.clone();
        kcfg.k = k;
        let mut model = train_in_memory(&kcfg)?;
        out.extend(sweep_snr(
            &kcfg,
            &model.spec.clone(),
            &mut model.params,
            &model.test,
            snrs,
            kcfg.epochs,
        )?);
    }
    Ok(out)
}

/// Trains each variant on identical data/seed and evaluates all across
/// the SNR list.
pub fn compare_variants(
    cfg: &RunConfig,
    variants: &[Variant],
    snrs: &[f64],
) -> Result<Vec<MetricsRecord>> {
    let mut out = Vec::new();
    for &v in variants {
        let vcfg = cfg.with_variant(v);
        let mut model = train_in_memory(&vcfg)?;
        out.extend(sweep_snr(
            &vcfg,
            &model.spec.clone(),
            &mut model.params,
            &model.test,
            snrs,
            vcfg.epochs,
        )?);
    }
    Ok(out)
}

/// Per-variant FLOPs table in the comparison layout.
pub fn flops_table(base: &ModelSpec, variants: &[Variant]) -> String {
    let reports = report_variants(base, variants);
    let mut text = String::from("variant,hsi,lidar,pe,fusion,total\n");
    for r in &reports {
        text.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.variant,
            r.hsi,
            r.lidar,
            r.pe,
            r.fusion,
            r.total()
        ));
    }
    text
}
