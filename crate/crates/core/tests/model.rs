//! Model assembly: shapes, variant wiring, determinism and gradient flow.

use semcom_core::channel::{transmit, ChannelConfig};
use semcom_core::model::{BnMode, Modality, ModelGraph, ModelParams, ModelSpec, Variant};
use semcom_core::objectives::{joint_loss, LossWeights};
use semcom_core::rng::SplitMix64;
use semcom_core::Tensor;

fn random_batch(rng: &mut SplitMix64, rows: usize, cols: usize) -> Tensor {
    let mut t = Tensor::zeros(rows, cols);
    for v in t.data.iter_mut() {
        *v = rng.next_f64();
    }
    t
}

fn one_hot_labels(rng: &mut SplitMix64, rows: usize, m: usize) -> Tensor {
    let mut t = Tensor::zeros(rows, m);
    for i in 0..rows {
        let c = rng.below(m);
        t.set(i, c, 1.0);
    }
    t
}

fn identity_channel(
    g: &mut semcom_core::Graph,
    s: semcom_core::NodeId,
) -> semcom_core::Result<semcom_core::NodeId> {
    let mut rng = SplitMix64::new(0);
    transmit(g, s, &ChannelConfig::identity(), &mut rng)
}

#[test]
fn encode_output_shape() {
    let spec = ModelSpec::new(Variant::PeMmsc);
    let mut params = ModelParams::init(&spec, 1).unwrap();
    let mut rng = SplitMix64::new(2);
    let batch = random_batch(&mut rng, 2, spec.d_hsi);
    let mut mg = ModelGraph::new(&mut params, BnMode::Train);
    let x = mg.graph.constant(batch).unwrap();
    let s = mg.encode(&spec, x, Modality::Hsi).unwrap();
    assert_eq!(mg.graph.value(s).shape(), (2, 64));
}

#[test]
fn encode_rejects_wrong_width() {
    let spec = ModelSpec::new(Variant::PeMmsc);
    let mut params = ModelParams::init(&spec, 1).unwrap();
    let mut mg = ModelGraph::new(&mut params, BnMode::Train);
    let x = mg.graph.constant(Tensor::zeros(2, 10)).unwrap();
    assert!(mg.encode(&spec, x, Modality::Hsi).is_err());
}

#[test]
fn zero_weight_classifier_is_uniform() {
    let spec = ModelSpec::new(Variant::PeMmsc);
    let mut params = ModelParams::init(&spec, 1).unwrap();
    for name in ["pe.0.w", "pe.0.b"] {
        let t = params.get_mut(name).unwrap();
        t.data.iter_mut().for_each(|v| *v = 0.0);
    }
    let mut rng = SplitMix64::new(3);
    let s = random_batch(&mut rng, 2, spec.k);
    let mut mg = ModelGraph::new(&mut params, BnMode::Train);
    let sid = mg.graph.constant(s).unwrap();
    let c = mg.pe_classify(&spec, sid).unwrap();
    let v = mg.graph.value(c);
    assert_eq!(v.shape(), (2, 15));
    for row in v.data.chunks(15) {
        for &p in row {
            assert!((p - 1.0 / 15.0).abs() < 1e-12);
        }
        let sum: f64 = row.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }
}

#[test]
fn fusion_input_widths_per_variant() {
    assert_eq!(ModelSpec::new(Variant::PeMmsc).fusion_input_width(), 143);
    assert_eq!(ModelSpec::new(Variant::EndNet).fusion_input_width(), 128);
    assert_eq!(ModelSpec::new(Variant::HsiPe).fusion_input_width(), 79);
    assert_eq!(ModelSpec::new(Variant::Hsi).fusion_input_width(), 64);
}

#[test]
fn fuse_presence_must_match_variant() {
    let spec = ModelSpec::new(Variant::EndNet);
    let mut params = ModelParams::init(&spec, 1).unwrap();
    let mut rng = SplitMix64::new(4);
    let s_hsi;
    let c_pre;
    let mut mg = ModelGraph::new(&mut params, BnMode::Train);
    {
        s_hsi = mg.graph.constant(random_batch(&mut rng, 2, 64)).unwrap();
        c_pre = mg.graph.constant(random_batch(&mut rng, 2, 15)).unwrap();
    }
    // EndNet has no PE input.
    assert!(mg.fuse(&spec, Some(s_hsi), None, Some(c_pre)).is_err());
}

#[test]
fn decoder_outputs_live_in_unit_interval() {
    let spec = ModelSpec::new(Variant::PeMmsc);
    let mut params = ModelParams::init(&spec, 5).unwrap();
    let mut rng = SplitMix64::new(6);
    let s_hat = random_batch(&mut rng, 3, spec.k);
    let mut mg = ModelGraph::new(&mut params, BnMode::Train);
    let sid = mg.graph.constant(s_hat).unwrap();
    let d = mg.decode(&spec, sid, Modality::Hsi).unwrap();
    let v = mg.graph.value(d);
    assert_eq!(v.shape(), (3, 144));
    assert!(v.data.iter().all(|&x| x > 0.0 && x < 1.0));
}

#[test]
fn zero_final_fc_decodes_to_half() {
    let spec = ModelSpec::new(Variant::PeMmsc);
    let mut params = ModelParams::init(&spec, 5).unwrap();
    let last = spec.decoder_widths.len();
    for suffix in ["w", "b"] {
        let t = params.get_mut(&format!("dec_hsi.{last}.{suffix}")).unwrap();
        t.data.iter_mut().for_each(|v| *v = 0.0);
    }
    let mut rng = SplitMix64::new(7);
    let s_hat = random_batch(&mut rng, 2, spec.k);
    let mut mg = ModelGraph::new(&mut params, BnMode::Train);
    let sid = mg.graph.constant(s_hat).unwrap();
    let d = mg.decode(&spec, sid, Modality::Hsi).unwrap();
    assert!(mg.graph.value(d).data.iter().all(|&x| x == 0.5));
}

#[test]
fn identity_channel_receives_transmitted_symbols_exactly() {
    let spec = ModelSpec::new(Variant::PeMmsc);
    let mut params = ModelParams::init(&spec, 8).unwrap();
    let mut rng = SplitMix64::new(9);
    let hsi = random_batch(&mut rng, 4, spec.d_hsi);
    let lidar = random_batch(&mut rng, 4, spec.d_lidar);
    let mut mg = ModelGraph::new(&mut params, BnMode::Train);
    let out = mg
        .forward_full(&spec, Some(&hsi), Some(&lidar), identity_channel)
        .unwrap();
    assert_eq!(mg.graph.value(out.s_hat).data, mg.graph.value(out.s).data);
    assert!(out.c_pre.is_some());
}

#[test]
fn variant_output_presence() {
    let mut rng = SplitMix64::new(10);

    let spec = ModelSpec::new(Variant::EndNet);
    let mut params = ModelParams::init(&spec, 11).unwrap();
    let hsi = random_batch(&mut rng, 3, spec.d_hsi);
    let lidar = random_batch(&mut rng, 3, spec.d_lidar);
    let mut mg = ModelGraph::new(&mut params, BnMode::Train);
    let out = mg
        .forward_full(&spec, Some(&hsi), Some(&lidar), identity_channel)
        .unwrap();
    assert!(out.c_pre.is_none());
    assert!(out.d_hat_hsi.is_some() && out.d_hat_lidar.is_some());

    let spec = ModelSpec::new(Variant::Lidar);
    let mut params = ModelParams::init(&spec, 12).unwrap();
    let lidar = random_batch(&mut rng, 3, spec.d_lidar);
    let mut mg = ModelGraph::new(&mut params, BnMode::Train);
    let out = mg
        .forward_full(&spec, None, Some(&lidar), identity_channel)
        .unwrap();
    assert!(out.c_pre.is_none() && out.d_hat_hsi.is_none());
    assert!(out.d_hat_lidar.is_some());
}

#[test]
fn forward_full_composes_submodules_bit_for_bit() {
    let spec = ModelSpec::new(Variant::PeMmsc);
    let mut rng = SplitMix64::new(13);
    let hsi = random_batch(&mut rng, 3, spec.d_hsi);
    let lidar = random_batch(&mut rng, 3, spec.d_lidar);

    let mut params_a = ModelParams::init(&spec, 14).unwrap();
    let mut mg = ModelGraph::new(&mut params_a, BnMode::Eval);
    let out = mg
        .forward_full(&spec, Some(&hsi), Some(&lidar), identity_channel)
        .unwrap();
    let full_cfin = mg.graph.value(out.c_fin).data.clone();
    let full_dhsi = mg.graph.value(out.d_hat_hsi.unwrap()).data.clone();

    // Manual composition of the submodule calls.
    let mut params_b = ModelParams::init(&spec, 14).unwrap();
    let mut mg = ModelGraph::new(&mut params_b, BnMode::Eval);
    let x_h = mg.graph.constant(hsi.clone()).unwrap();
    let x_l = mg.graph.constant(lidar.clone()).unwrap();
    let s_h = mg.encode(&spec, x_h, Modality::Hsi).unwrap();
    let s_l = mg.encode(&spec, x_l, Modality::Lidar).unwrap();
    let c_pre = mg.pe_classify(&spec, s_h).unwrap();
    let fused = mg.fuse(&spec, Some(s_h), Some(s_l), Some(c_pre)).unwrap();
    let s = mg.graph.power_normalize(fused).unwrap();
    let s_hat = identity_channel(&mut mg.graph, s).unwrap();
    let c_fin = mg.final_classify(&spec, s_hat).unwrap();
    let d_hsi = mg.decode(&spec, s_hat, Modality::Hsi).unwrap();

    assert_eq!(mg.graph.value(c_fin).data, full_cfin);
    assert_eq!(mg.graph.value(d_hsi).data, full_dhsi);
}

#[test]
fn forward_is_deterministic() {
    let spec = ModelSpec::new(Variant::PeMmsc);
    let mut rng = SplitMix64::new(15);
    let hsi = random_batch(&mut rng, 2, spec.d_hsi);
    let lidar = random_batch(&mut rng, 2, spec.d_lidar);
    let run = || {
        let mut params = ModelParams::init(&spec, 16).unwrap();
        let mut mg = ModelGraph::new(&mut params, BnMode::Train);
        let out = mg
            .forward_full(&spec, Some(&hsi), Some(&lidar), identity_channel)
            .unwrap();
        mg.graph.value(out.c_fin).data.clone()
    };
    assert_eq!(run(), run());
}

#[test]
fn pe_pathway_is_strict_superset_of_endnet() {
    // With the C_pre columns of the first fusion layer zeroed and the
    // shared coordinates copied over, both variants fuse identically.
    let pe_spec = ModelSpec::new(Variant::PeMmsc);
    let en_spec = ModelSpec::new(Variant::EndNet);
    let mut pe_params = ModelParams::init(&pe_spec, 17).unwrap();
    let en_params_src = ModelParams::init(&en_spec, 18).unwrap();

    // Copy every EndNet fusion parameter into the PE model; the PE
    // model's first fusion weight keeps EndNet rows on the shared 128
    // coordinates and zeros on the 15 C_pre rows.
    for li in 0..en_spec.fusion_widths.len() {
        for suffix in ["w", "b", "gamma", "beta", "rmean", "rvar"] {
            let name = format!("fusion.{li}.{suffix}");
            let src = en_params_src.get(&name).unwrap().clone();
            let dst = pe_params.get_mut(&name).unwrap();
            if suffix == "w" && li == 0 {
                for r in 0..dst.rows {
                    for c in 0..dst.cols {
                        let v = if r < src.rows { src.at(r, c) } else { 0.0 };
                        dst.set(r, c, v);
                    }
                }
            } else {
                *dst = src;
            }
        }
    }

    let mut rng = SplitMix64::new(19);
    let s_hsi = random_batch(&mut rng, 3, 64);
    let s_lidar = random_batch(&mut rng, 3, 64);
    let c_pre = random_batch(&mut rng, 3, 15);

    let mut en_params = en_params_src.clone();
    let mut mg = ModelGraph::new(&mut en_params, BnMode::Eval);
    let a = mg.graph.constant(s_hsi.clone()).unwrap();
    let b = mg.graph.constant(s_lidar.clone()).unwrap();
    let fused_en = mg.fuse(&en_spec, Some(a), Some(b), None).unwrap();
    let en_out = mg.graph.value(fused_en).data.clone();

    let mut mg = ModelGraph::new(&mut pe_params, BnMode::Eval);
    let a = mg.graph.constant(s_hsi).unwrap();
    let b = mg.graph.constant(s_lidar).unwrap();
    let c = mg.graph.constant(c_pre).unwrap();
    let fused_pe = mg.fuse(&pe_spec, Some(a), Some(b), Some(c)).unwrap();
    let pe_out = mg.graph.value(fused_pe).data.clone();

    assert_eq!(en_out, pe_out);
}

#[test]
fn gradients_reach_every_trainable_parameter() {
    // Statistically over 10 seeds: no trainable parameter keeps an
    // all-zero gradient in every seed.
    let spec = ModelSpec::new(Variant::PeMmsc);
    let template = ModelParams::init(&spec, 0).unwrap();
    let names: Vec<String> = template
        .entries
        .iter()
        .filter(|e| e.trainable)
        .map(|e| e.name.clone())
        .collect();
    let mut ever_nonzero = vec![false; names.len()];

    for seed in 0..10u64 {
        let mut params = ModelParams::init(&spec, seed).unwrap();
        let mut rng = SplitMix64::new(100 + seed);
        let hsi = random_batch(&mut rng, 6, spec.d_hsi);
        let lidar = random_batch(&mut rng, 6, spec.d_lidar);
        let labels = one_hot_labels(&mut rng, 6, spec.m);

        let mut mg = ModelGraph::new(&mut params, BnMode::Train);
        let out = mg
            .forward_full(&spec, Some(&hsi), Some(&lidar), identity_channel)
            .unwrap();
        let (loss, _) = joint_loss(
            &mut mg.graph,
            out.c_pre,
            out.c_fin,
            &labels,
            Some((out.d_hat_hsi.unwrap(), &hsi)),
            Some((out.d_hat_lidar.unwrap(), &lidar)),
            &LossWeights::default(),
            spec.variant,
        )
        .unwrap();
        mg.backward_and_collect(loss).unwrap();

        for (i, name) in names.iter().enumerate() {
            let g = params.get(name).unwrap().grad.as_ref().unwrap();
            if g.iter().any(|&v| v != 0.0) {
                ever_nonzero[i] = true;
            }
        }
    }
    for (i, name) in names.iter().enumerate() {
        assert!(ever_nonzero[i], "no gradient ever reached {name}");
    }
}

#[test]
fn full_graph_gradient_check_with_frozen_channel() {
    // Tiny spec so finite differences stay cheap; channel frozen at
    // h = 1, n = 0. Perturbs the first-layer HSI encoder weight.
    let mut spec = ModelSpec::new(Variant::PeMmsc);
    spec.d_hsi = 5;
    spec.d_lidar = 3;
    spec.m = 3;
    spec = spec.with_k(4);
    spec.encoder_widths = vec![4, 4, 4, 4];
    spec.fusion_widths = vec![4, 4];
    spec.decoder_widths = vec![4, 4];

    let mut rng = SplitMix64::new(21);
    let hsi = random_batch(&mut rng, 4, spec.d_hsi);
    let lidar = random_batch(&mut rng, 4, spec.d_lidar);
    let labels = one_hot_labels(&mut rng, 4, spec.m);
    let params = ModelParams::init(&spec, 22).unwrap();

    let max_err = model_grad_check(&spec, &params, &hsi, &lidar, &labels);
    assert!(max_err < 1e-3, "full-graph max rel err {max_err}");
}

/// Finite differences on a handful of parameters of the full model,
/// against the gradients collected by backward_and_collect.
fn model_grad_check(
    spec: &ModelSpec,
    params: &ModelParams,
    hsi: &Tensor,
    lidar: &Tensor,
    labels: &Tensor,
) -> f64 {
    let loss_of = |p: &ModelParams| -> f64 {
        let mut p = p.clone();
        let mut mg = ModelGraph::new(&mut p, BnMode::Train);
        let out = mg
            .forward_full(spec, Some(hsi), Some(lidar), identity_channel)
            .unwrap();
        let (loss, _) = joint_loss(
            &mut mg.graph,
            out.c_pre,
            out.c_fin,
            labels,
            Some((out.d_hat_hsi.unwrap(), hsi)),
            Some((out.d_hat_lidar.unwrap(), lidar)),
            &LossWeights::default(),
            spec.variant,
        )
        .unwrap();
        mg.graph.value(loss).data[0]
    };

    let mut p = params.clone();
    {
        let mut mg = ModelGraph::new(&mut p, BnMode::Train);
        let out = mg
            .forward_full(spec, Some(hsi), Some(lidar), identity_channel)
            .unwrap();
        let (loss, _) = joint_loss(
            &mut mg.graph,
            out.c_pre,
            out.c_fin,
            labels,
            Some((out.d_hat_hsi.unwrap(), hsi)),
            Some((out.d_hat_lidar.unwrap(), lidar)),
            &LossWeights::default(),
            spec.variant,
        )
        .unwrap();
        mg.backward_and_collect(loss).unwrap();
    }

    let h = 1e-5;
    let mut max_err: f64 = 0.0;
    for name in ["enc_hsi.0.w", "pe.0.w", "fusion.0.w", "dec_lidar.0.w", "fin.0.w"] {
        let analytic = p.get(name).unwrap().grad.clone().unwrap();
        let len = analytic.len();
        // Sample a few entries per tensor.
        for ei in (0..len).step_by((len / 7).max(1)) {
            let mut probe = params.clone();
            let orig = probe.get(name).unwrap().data[ei];
            probe.get_mut(name).unwrap().data[ei] = orig + h;
            let plus = loss_of(&probe);
            probe.get_mut(name).unwrap().data[ei] = orig - h;
            let minus = loss_of(&probe);
            let numeric = (plus - minus) / (2.0 * h);
            let a = analytic[ei];
            let denom = a.abs().max(numeric.abs()).max(1.0);
            max_err = max_err.max((a - numeric).abs() / denom);
        }
    }
    max_err
}

#[test]
fn param_key_set_is_pure_function_of_spec() {
    let spec = ModelSpec::new(Variant::DeepEndNet);
    let a = ModelParams::init(&spec, 1).unwrap();
    let b = ModelParams::init(&spec, 2).unwrap();
    let names_a: Vec<_> = a.entries.iter().map(|e| (&e.name, e.tensor.shape())).collect();
    let names_b: Vec<_> = b.entries.iter().map(|e| (&e.name, e.tensor.shape())).collect();
    assert_eq!(names_a, names_b);
}
