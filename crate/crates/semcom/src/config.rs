//! Flat JSON run configuration shared by the CLI subcommands.

use std::path::{Path, PathBuf};

use semcom_core::channel::{ChannelConfig, ChannelKind, FadingGranularity};
use semcom_core::model::{ModelSpec, Variant};
use semcom_core::objectives::LossWeights;
use serde::{Deserialize, Serialize};

use crate::{AppError, Result};

/// Per-batch training SNR policy: a fixed value or a uniform draw.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum SnrPolicy {
    Fixed { snr_db: f64 },
    Uniform { lo_db: f64, hi_db: f64 },
}

impl Default for SnrPolicy {
    fn default() -> Self {
        SnrPolicy::Uniform {
            lo_db: 0.0,
            hi_db: 15.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub variant: Variant,
    pub d_hsi: usize,
    pub d_lidar: usize,
    pub classes: usize,
    pub k: usize,
    pub encoder_widths: Vec<usize>,
    /// Defaults per variant when empty (deeper chain for deep-endnet).
    pub fusion_widths: Vec<usize>,
    pub decoder_widths: Vec<usize>,

    /// "identity" | "awgn" | "rayleigh-awgn".
    pub channel: String,
    /// "per-symbol" | "per-sample".
    pub fading: String,
    pub train_snr: SnrPolicy,
    pub eval_snr_db: f64,

    pub alpha: [f64; 4],
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: u64,
    pub beta: f64,
    pub trials: usize,
    pub checkpoint_interval: u64,

    /// Binary dataset path; when absent a synthetic set is generated.
    pub dataset: Option<PathBuf>,
    pub synth_per_class: usize,
    pub synth_separation: f64,
    pub synth_correlation: f64,
    pub synth_latent: usize,
    pub train_fraction: f64,
    pub stratified: bool,

    pub seed: u64,
    pub output_dir: PathBuf,
    pub quiet: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            variant: Variant::PeMmsc,
            d_hsi: 144,
            d_lidar: 21,
            classes: 15,
            k: 64,
            encoder_widths: Vec::new(),
            fusion_widths: Vec::new(),
            decoder_widths: Vec::new(),
            channel: "rayleigh-awgn".into(),
            fading: "per-sample".into(),
            train_snr: SnrPolicy::default(),
            eval_snr_db: 10.0,
            alpha: LossWeights::default().alpha,
            learning_rate: 0.001,
            batch_size: 64,
            epochs: 60,
            beta: 0.5,
            trials: 20,
            checkpoint_interval: 0,
            dataset: None,
            synth_per_class: 200,
            synth_separation: 0.7,
            synth_correlation: 0.5,
            synth_latent: 4,
            train_fraction: 0.8,
            stratified: true,
            seed: 0,
            output_dir: PathBuf::from("runs/out"),
            quiet: false,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AppError::Data(format!("cannot read {}: {e}", path.display())))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| AppError::Usage(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(AppError::Usage("epochs must be >= 1".into()));
        }
        if self.batch_size < 2 {
            return Err(AppError::Usage("batch_size must be >= 2".into()));
        }
        if self.k < 1 || self.classes < 1 {
            return Err(AppError::Usage("k and classes must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(AppError::Usage("learning_rate must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.train_fraction) {
            return Err(AppError::Usage("train_fraction must lie in (0, 1)".into()));
        }
        if self.trials == 0 {
            return Err(AppError::Usage("trials must be >= 1".into()));
        }
        self.channel_kind()?;
        self.fading_granularity()?;
        if let SnrPolicy::Uniform { lo_db, hi_db } = self.train_snr {
            if lo_db > hi_db {
                return Err(AppError::Usage("train_snr: lo_db > hi_db".into()));
            }
        }
        self.loss_weights().validate()?;
        self.model_spec()?.validate()?;
        Ok(())
    }

    pub fn channel_kind(&self) -> Result<ChannelKind> {
        match self.channel.as_str() {
            "identity" => Ok(ChannelKind::Identity),
            "awgn" => Ok(ChannelKind::Awgn),
            "rayleigh-awgn" => Ok(ChannelKind::RayleighAwgn),
            other => Err(AppError::Usage(format!("unknown channel kind: {other}"))),
        }
    }

    pub fn fading_granularity(&self) -> Result<FadingGranularity> {
        match self.fading.as_str() {
            "per-symbol" => Ok(FadingGranularity::PerSymbol),
            "per-sample" => Ok(FadingGranularity::PerSample),
            other => Err(AppError::Usage(format!("unknown fading granularity: {other}"))),
        }
    }

    pub fn channel_config(&self, snr_db: f64) -> Result<ChannelConfig> {
        Ok(ChannelConfig {
            kind: if snr_db.is_infinite() {
                ChannelKind::Identity
            } else {
                self.channel_kind()?
            },
            snr_db,
            seed: self.seed,
            granularity: self.fading_granularity()?,
        })
    }

    pub fn loss_weights(&self) -> LossWeights {
        LossWeights { alpha: self.alpha }
    }

    /// Architecture from the config, filling defaulted width lists.
    pub fn model_spec(&self) -> Result<ModelSpec> {
        let mut spec = ModelSpec::new(self.variant).with_k(self.k);
        spec.d_hsi = self.d_hsi;
        spec.d_lidar = self.d_lidar;
        spec.m = self.classes;
        if !self.encoder_widths.is_empty() {
            spec.encoder_widths = self.encoder_widths.clone();
        }
        if !self.fusion_widths.is_empty() {
            spec.fusion_widths = self.fusion_widths.clone();
        }
        if !self.decoder_widths.is_empty() {
            spec.decoder_widths = self.decoder_widths.clone();
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_variant(&self, variant: Variant) -> RunConfig {
        let mut cfg = self.clone();
        cfg.variant = variant;
        if self.fusion_widths.is_empty() {
            cfg.fusion_widths = Vec::new();
        }
        cfg
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
