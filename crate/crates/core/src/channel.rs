//! Wireless segment of the pipeline: power normalization, Rayleigh
//! fading and AWGN at a configured SNR, recorded inside the training
//! graph so gradients pass through the realized draws.
//!
//! SNR convention: unit average per-symbol signal power and `E[h^2] = 1`,
//! so the noise variance is `sigma^2 = 10^(-snr_db / 10)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::graph::{Graph, NodeId};
use crate::rng::SplitMix64;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelKind {
    Identity,
    Awgn,
    RayleighAwgn,
}

/// Whether one fading coefficient covers a whole sample row or each
/// symbol fades independently.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FadingGranularity {
    PerSample,
    PerSymbol,
}

#[derive(Debug, Clone)]
pub struct ChannelConfig {
    pub kind: ChannelKind,
    pub snr_db: f64,
    pub seed: u64,
    pub granularity: FadingGranularity,
}

impl ChannelConfig {
    pub fn identity() -> Self {
        ChannelConfig {
            kind: ChannelKind::Identity,
            snr_db: f64::INFINITY,
            seed: 0,
            granularity: FadingGranularity::PerSymbol,
        }
    }
}

/// Noise standard deviation for the given SNR in dB.
pub fn noise_sigma(snr_db: f64) -> f64 {
    libm::sqrt(libm::pow(10.0, -snr_db / 10.0))
}

/// Rayleigh fading coefficients with scale `1/sqrt(2)`, so `E[h^2] = 1`.
pub fn rayleigh_draw(rng: &mut SplitMix64, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let g1 = rng.next_normal();
        let g2 = rng.next_normal();
        out.push(libm::sqrt((g1 * g1 + g2 * g2) / 2.0));
    }
    out
}

/// One channel use over an already power-normalized `N x K` node.
/// Draws fading and noise from `rng` and records them on the graph;
/// backward treats the realized draws as constants.
pub fn transmit(
    g: &mut Graph,
    s: NodeId,
    cfg: &ChannelConfig,
    rng: &mut SplitMix64,
) -> Result<NodeId> {
    let (n, k) = g.value(s).shape();
    let len = n * k;
    match cfg.kind {
        ChannelKind::Identity => {
            let gains = vec![1.0; len];
            let offsets = vec![0.0; len];
            g.channel_affine(s, gains, &offsets)
        }
        ChannelKind::Awgn => {
            let sigma = noise_sigma(cfg.snr_db);
            let gains = vec![1.0; len];
            let mut offsets = vec![0.0; len];
            for o in offsets.iter_mut() {
                *o = sigma * rng.next_normal();
            }
            g.channel_affine(s, gains, &offsets)
        }
        ChannelKind::RayleighAwgn => {
            let sigma = noise_sigma(cfg.snr_db);
            let gains = match cfg.granularity {
                FadingGranularity::PerSymbol => rayleigh_draw(rng, len),
                FadingGranularity::PerSample => {
                    let per_row = rayleigh_draw(rng, n);
                    let mut gains = Vec::with_capacity(len);
                    for h in per_row {
                        gains.extend(core::iter::repeat(h).take(k));
                    }
                    gains
                }
            };
            let mut offsets = vec![0.0; len];
            for o in offsets.iter_mut() {
                *o = sigma * rng.next_normal();
            }
            g.channel_affine(s, gains, &offsets)
        }
    }
}
