//! Monte-Carlo statistics of the fading and noise draws.

use semcom_core::channel::{noise_sigma, rayleigh_draw, transmit, ChannelConfig, ChannelKind, FadingGranularity};
use semcom_core::rng::SplitMix64;
use semcom_core::{Graph, Tensor};

#[test]
fn rayleigh_moments() {
    let mut rng = SplitMix64::new(11);
    let n = 1_000_000;
    let draws = rayleigh_draw(&mut rng, n);
    let mean: f64 = draws.iter().sum::<f64>() / n as f64;
    let second: f64 = draws.iter().map(|h| h * h).sum::<f64>() / n as f64;
    // E[h] = sqrt(pi/2) * scale with scale 1/sqrt(2) -> sqrt(pi)/2.
    assert!((mean - (core::f64::consts::PI / 4.0).sqrt()).abs() < 0.005);
    assert!((second - 1.0).abs() < 0.01);
}

#[test]
fn noise_variance_at_zero_db() {
    let mut rng = SplitMix64::new(12);
    let sigma = noise_sigma(0.0);
    let n = 1_000_000;
    let mut sum2 = 0.0;
    for _ in 0..n {
        let x = sigma * rng.next_normal();
        sum2 += x * x;
    }
    assert!((sum2 / n as f64 - 1.0).abs() < 0.01);
}

/// Empirical output SNR of the fading channel matches the configured
/// value within 2% on unit-power input.
#[test]
fn empirical_snr_tracks_configuration() {
    for snr_db in [0.0, 10.0, 20.0] {
        let cfg = ChannelConfig {
            kind: ChannelKind::RayleighAwgn,
            snr_db,
            seed: 13,
            granularity: FadingGranularity::PerSymbol,
        };
        let rows = 500;
        let cols = 64; // 32k symbols per transmit call
        let mut rng = SplitMix64::new(cfg.seed);
        let mut signal_energy = 0.0;
        let mut noise_energy = 0.0;
        for _ in 0..32 {
            let mut g = Graph::new();
            let s = g.leaf(Tensor::filled(rows, cols, 1.0), false).unwrap();
            // Measure signal and noise separately with the same draws.
            let mut rng_noise = rng.clone();
            let y = transmit(&mut g, s, &cfg, &mut rng).unwrap();
            let quiet_cfg = ChannelConfig { snr_db: f64::INFINITY, ..cfg.clone() };
            let s2 = g.leaf(Tensor::filled(rows, cols, 1.0), false).unwrap();
            let faded = transmit(&mut g, s2, &quiet_cfg, &mut rng_noise).unwrap();
            let y = g.value(y).data.clone();
            let faded = g.value(faded).data.clone();
            for (yv, fv) in y.iter().zip(&faded) {
                signal_energy += fv * fv;
                noise_energy += (yv - fv) * (yv - fv);
            }
        }
        let measured = signal_energy / noise_energy;
        let expected = 10f64.powf(snr_db / 10.0);
        assert!(
            (measured / expected - 1.0).abs() < 0.02,
            "snr {snr_db} dB: measured ratio {measured}, expected {expected}"
        );
    }
}
