//! FLOPs accounting for the model variants.
//!
//! An FC layer mapping `in` to `out` features costs `2 * in * out`
//! floating-point operations per sample; BatchNorm and activations are
//! counted as zero. The report columns follow the comparison table
//! layout: per-modality encoders, the coarse-classification (PE) head,
//! and the receiver-side chain (fusion encoder + decoders + final
//! classifier) under "fusion".

use alloc::vec::Vec;

use crate::model::{Modality, ModelSpec, Variant};

pub fn fc_flops(fan_in: usize, fan_out: usize) -> u64 {
    2 * fan_in as u64 * fan_out as u64
}

fn chain_flops(layers: &[(usize, usize)]) -> u64 {
    layers.iter().map(|&(i, o)| fc_flops(i, o)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlopsReport {
    pub variant: Variant,
    pub hsi: u64,
    pub lidar: u64,
    pub pe: u64,
    pub fusion: u64,
}

impl FlopsReport {
    pub fn total(&self) -> u64 {
        self.hsi + self.lidar + self.pe + self.fusion
    }
}

/// Per-submodule FLOPs for one sample, a pure function of the spec.
pub fn count_flops(spec: &ModelSpec) -> FlopsReport {
    let v = spec.variant;
    let hsi = if v.has_hsi() {
        chain_flops(&spec.encoder_layers(Modality::Hsi))
    } else {
        0
    };
    let lidar = if v.has_lidar() {
        chain_flops(&spec.encoder_layers(Modality::Lidar))
    } else {
        0
    };
    let pe = if v.has_pe() {
        fc_flops(spec.k, spec.m)
    } else {
        0
    };
    let mut fusion = chain_flops(&spec.fusion_layers());
    if v.has_hsi() {
        fusion += chain_flops(&spec.decoder_layers(Modality::Hsi));
    }
    if v.has_lidar() {
        fusion += chain_flops(&spec.decoder_layers(Modality::Lidar));
    }
    fusion += fc_flops(spec.k, spec.m); // final classifier
    FlopsReport {
        variant: v,
        hsi,
        lidar,
        pe,
        fusion,
    }
}

/// Reports for a list of variants sharing the same base dims/widths.
pub fn report_variants(base: &ModelSpec, variants: &[Variant]) -> Vec<FlopsReport> {
    variants
        .iter()
        .map(|&v| {
            let mut spec = base.clone();
            spec.variant = v;
            if v == Variant::DeepEndNet && spec.fusion_widths.len() == 2 {
                let k = spec.k;
                let w = spec.fusion_widths[0];
                spec.fusion_widths = alloc::vec![w, w, w, k];
            }
            count_flops(&spec)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fc_rule() {
        assert_eq!(fc_flops(2, 3), 12);
    }

    #[test]
    fn pe_head_cost() {
        let spec = ModelSpec::new(Variant::PeMmsc);
        assert_eq!(count_flops(&spec).pe, 1920); // 2 * 64 * 15
    }

    #[test]
    fn pe_fusion_delta_is_pe_input_columns() {
        // With matched widths the only difference between the fused
        // variants is the m extra input columns of the first fusion FC.
        for first_width in [64usize, 96, 128] {
            let mut a = ModelSpec::new(Variant::PeMmsc);
            a.fusion_widths = alloc::vec![first_width, a.k];
            let mut b = ModelSpec::new(Variant::EndNet);
            b.fusion_widths = alloc::vec![first_width, b.k];
            let delta = count_flops(&a).fusion - count_flops(&b).fusion;
            assert_eq!(delta, 2 * a.m as u64 * first_width as u64);
        }
    }

    #[test]
    fn default_total_ordering() {
        let reports = report_variants(
            &ModelSpec::new(Variant::PeMmsc),
            &[Variant::DeepEndNet, Variant::PeMmsc, Variant::EndNet],
        );
        assert!(reports[0].total() > reports[1].total());
        assert!(reports[1].total() > reports[2].total());
    }

    #[test]
    fn report_is_pure_function_of_spec() {
        let spec = ModelSpec::new(Variant::HsiPe);
        assert_eq!(count_flops(&spec), count_flops(&spec.clone()));
    }
}
