//! Model zoo: per-modality encoders, coarse-classification (PE) head,
//! fusion encoder, per-modality decoders and the final classifier,
//! assembled per variant.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::Error;
use crate::graph::{Graph, NodeId};
use crate::rng::SplitMix64;
use crate::tensor::Tensor;
use crate::Result;

const BN_MOMENTUM: f64 = 0.1;

/// System variant under evaluation. `PeMmsc` is the full pipeline;
/// the rest are the comparison baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Variant {
    PeMmsc,
    EndNet,
    DeepEndNet,
    HsiPe,
    LidarPe,
    Hsi,
    Lidar,
}

impl Variant {
    pub const ALL: [Variant; 7] = [
        Variant::PeMmsc,
        Variant::EndNet,
        Variant::DeepEndNet,
        Variant::HsiPe,
        Variant::LidarPe,
        Variant::Hsi,
        Variant::Lidar,
    ];

    pub fn has_hsi(self) -> bool {
        !matches!(self, Variant::Lidar | Variant::LidarPe)
    }

    pub fn has_lidar(self) -> bool {
        matches!(
            self,
            Variant::PeMmsc | Variant::EndNet | Variant::DeepEndNet | Variant::Lidar | Variant::LidarPe
        )
    }

    pub fn has_pe(self) -> bool {
        matches!(self, Variant::PeMmsc | Variant::HsiPe | Variant::LidarPe)
    }

    /// Modality whose semantics feed the coarse classifier.
    pub fn pe_source(self) -> Modality {
        match self {
            Variant::LidarPe => Modality::Lidar,
            _ => Modality::Hsi,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::PeMmsc => "pe-mmsc",
            Variant::EndNet => "endnet",
            Variant::DeepEndNet => "deep-endnet",
            Variant::HsiPe => "hsi-pe",
            Variant::LidarPe => "lidar-pe",
            Variant::Hsi => "hsi",
            Variant::Lidar => "lidar",
        }
    }

    pub fn parse(s: &str) -> Option<Variant> {
        Variant::ALL.into_iter().find(|v| v.name() == s)
    }
}

impl core::fmt::Display for Variant {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modality {
    Hsi,
    Lidar,
}

impl Modality {
    pub fn name(self) -> &'static str {
        match self {
            Modality::Hsi => "hsi",
            Modality::Lidar => "lidar",
        }
    }
}

/// Architecture description: input dims, class count, symbol count K and
/// the hidden widths of every chain. Width lists include the final
/// output width of the chain (K for encoders/fusion).
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModelSpec {
    pub variant: Variant,
    pub d_hsi: usize,
    pub d_lidar: usize,
    pub m: usize,
    pub k: usize,
    /// Per-modality encoder chain; 4 RB blocks, last width = K.
    pub encoder_widths: Vec<usize>,
    /// Fusion chain; 2 RB blocks (4 for DeepEndNet), last width = K.
    pub fusion_widths: Vec<usize>,
    /// Decoder hidden widths; 2 SB blocks, then a final FC to d_mod.
    pub decoder_widths: Vec<usize>,
}

impl ModelSpec {
    pub fn new(variant: Variant) -> Self {
        let k = 64;
        let fusion_widths = if variant == Variant::DeepEndNet {
            vec![96, 96, 96, k]
        } else {
            vec![96, k]
        };
        ModelSpec {
            variant,
            d_hsi: 144,
            d_lidar: 21,
            m: 15,
            k,
            encoder_widths: vec![64, 48, 48, k],
            fusion_widths,
            decoder_widths: vec![48, 96],
        }
    }

    /// Rebuilds derived widths after K or variant edits.
    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        if let Some(last) = self.encoder_widths.last_mut() {
            *last = k;
        }
        if let Some(last) = self.fusion_widths.last_mut() {
            *last = k;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_hsi == 0 || self.d_lidar == 0 || self.m == 0 || self.k == 0 {
            return Err(Error::Config("model dims must all be >= 1".to_string()));
        }
        if self.encoder_widths.last() != Some(&self.k) {
            return Err(Error::Config(
                "encoder chain must end at the semantic dim K".to_string(),
            ));
        }
        if self.fusion_widths.last() != Some(&self.k) {
            return Err(Error::Config(
                "fusion chain must end at the symbol count K".to_string(),
            ));
        }
        if self.encoder_widths.iter().any(|&w| w == 0)
            || self.fusion_widths.iter().any(|&w| w == 0)
            || self.decoder_widths.iter().any(|&w| w == 0)
        {
            return Err(Error::Config("layer widths must be >= 1".to_string()));
        }
        Ok(())
    }

    pub fn modality_dim(&self, modality: Modality) -> usize {
        match modality {
            Modality::Hsi => self.d_hsi,
            Modality::Lidar => self.d_lidar,
        }
    }

    /// Width of the concatenated fusion input for this variant.
    pub fn fusion_input_width(&self) -> usize {
        let v = self.variant;
        (if v.has_hsi() { self.k } else { 0 })
            + (if v.has_lidar() { self.k } else { 0 })
            + (if v.has_pe() { self.m } else { 0 })
    }

    /// (in, out) pairs of the FC layers in an encoder chain.
    pub fn encoder_layers(&self, modality: Modality) -> Vec<(usize, usize)> {
        chain_layers(self.modality_dim(modality), &self.encoder_widths)
    }

    pub fn fusion_layers(&self) -> Vec<(usize, usize)> {
        chain_layers(self.fusion_input_width(), &self.fusion_widths)
    }

    /// Decoder chain: SB blocks over the hidden widths, then the output FC.
    pub fn decoder_layers(&self, modality: Modality) -> Vec<(usize, usize)> {
        let mut widths = self.decoder_widths.clone();
        widths.push(self.modality_dim(modality));
        chain_layers(self.k, &widths)
    }
}

fn chain_layers(input: usize, widths: &[usize]) -> Vec<(usize, usize)> {
    let mut layers = Vec::with_capacity(widths.len());
    let mut prev = input;
    for &w in widths {
        layers.push((prev, w));
        prev = w;
    }
    layers
}

#[derive(Debug, Clone)]
pub struct ParamEntry {
    pub name: String,
    pub tensor: Tensor,
    pub trainable: bool,
}

/// Named parameter set of one model: FC weights/biases, BN gamma/beta
/// and (non-trainable) BN running statistics. The key set is a pure
/// function of the [`ModelSpec`].
#[derive(Debug, Clone)]
pub struct ModelParams {
    pub entries: Vec<ParamEntry>,
}

/// Submodules in canonical parameter order.
fn submodules(spec: &ModelSpec) -> Vec<(String, Vec<(usize, usize)>, BlockKind)> {
    let v = spec.variant;
    let mut subs = Vec::new();
    if v.has_hsi() {
        subs.push((
            "enc_hsi".to_string(),
            spec.encoder_layers(Modality::Hsi),
            BlockKind::Rb,
        ));
    }
    if v.has_lidar() {
        subs.push((
            "enc_lidar".to_string(),
            spec.encoder_layers(Modality::Lidar),
            BlockKind::Rb,
        ));
    }
    if v.has_pe() {
        subs.push(("pe".to_string(), vec![(spec.k, spec.m)], BlockKind::Fc));
    }
    subs.push(("fusion".to_string(), spec.fusion_layers(), BlockKind::Rb));
    if v.has_hsi() {
        subs.push((
            "dec_hsi".to_string(),
            spec.decoder_layers(Modality::Hsi),
            BlockKind::SbThenFc,
        ));
    }
    if v.has_lidar() {
        subs.push((
            "dec_lidar".to_string(),
            spec.decoder_layers(Modality::Lidar),
            BlockKind::SbThenFc,
        ));
    }
    subs.push(("fin".to_string(), vec![(spec.k, spec.m)], BlockKind::Fc));
    subs
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BlockKind {
    /// FC + BatchNorm + ReLU for every layer.
    Rb,
    /// FC + BatchNorm + Sigmoid for all but the last layer, which is a
    /// plain FC with sigmoid output activation.
    SbThenFc,
    /// Single plain FC (classifier heads; softmax applied by the caller).
    Fc,
}

impl BlockKind {
    fn layer_has_bn(self, layer: usize, total: usize) -> bool {
        match self {
            BlockKind::Rb => true,
            BlockKind::SbThenFc => layer + 1 < total,
            BlockKind::Fc => false,
        }
    }
}

impl ModelParams {
    /// Glorot-uniform FC weights, zero biases, unit-gamma BN.
    pub fn init(spec: &ModelSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut rng = SplitMix64::new(seed);
        let mut entries = Vec::new();
        for (sub, layers, kind) in submodules(spec) {
            let total = layers.len();
            for (li, &(fan_in, fan_out)) in layers.iter().enumerate() {
                let bound = libm::sqrt(6.0 / (fan_in + fan_out) as f64);
                let mut w = Tensor::zeros(fan_in, fan_out);
                for v in w.data.iter_mut() {
                    *v = rng.uniform(-bound, bound);
                }
                entries.push(ParamEntry {
                    name: format!("{sub}.{li}.w"),
                    tensor: w.with_grad(),
                    trainable: true,
                });
                entries.push(ParamEntry {
                    name: format!("{sub}.{li}.b"),
                    tensor: Tensor::zeros(1, fan_out).with_grad(),
                    trainable: true,
                });
                if kind.layer_has_bn(li, total) {
                    entries.push(ParamEntry {
                        name: format!("{sub}.{li}.gamma"),
                        tensor: Tensor::filled(1, fan_out, 1.0).with_grad(),
                        trainable: true,
                    });
                    entries.push(ParamEntry {
                        name: format!("{sub}.{li}.beta"),
                        tensor: Tensor::zeros(1, fan_out).with_grad(),
                        trainable: true,
                    });
                    entries.push(ParamEntry {
                        name: format!("{sub}.{li}.rmean"),
                        tensor: Tensor::zeros(1, fan_out),
                        trainable: false,
                    });
                    entries.push(ParamEntry {
                        name: format!("{sub}.{li}.rvar"),
                        tensor: Tensor::filled(1, fan_out, 1.0),
                        trainable: false,
                    });
                }
            }
        }
        Ok(ModelParams { entries })
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.name == name)
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.entries.iter().find(|e| e.name == name).map(|e| &e.tensor)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.entries
            .iter_mut()
            .find(|e| e.name == name)
            .map(|e| &mut e.tensor)
    }

    pub fn trainable_mut(&mut self) -> impl Iterator<Item = &mut Tensor> {
        self.entries
            .iter_mut()
            .filter(|e| e.trainable)
            .map(|e| &mut e.tensor)
    }

    pub fn clear_grads(&mut self) {
        for e in self.entries.iter_mut() {
            e.tensor.clear_grad();
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BnMode {
    Train,
    Eval,
}

/// Node handles of everything a forward pass produces.
#[derive(Debug, Clone)]
pub struct ForwardOutput {
    pub c_pre: Option<NodeId>,
    /// Power-normalized transmitted symbols S.
    pub s: NodeId,
    /// Received symbols after the channel.
    pub s_hat: NodeId,
    pub c_fin: NodeId,
    pub d_hat_hsi: Option<NodeId>,
    pub d_hat_lidar: Option<NodeId>,
}

/// One forward pass: owns the tape, binds parameter tensors as trainable
/// leaves and routes gradients back into the parameter set.
pub struct ModelGraph<'p> {
    pub graph: Graph,
    params: &'p mut ModelParams,
    mode: BnMode,
    bound: Vec<(usize, NodeId)>,
}

impl<'p> ModelGraph<'p> {
    pub fn new(params: &'p mut ModelParams, mode: BnMode) -> Self {
        ModelGraph {
            graph: Graph::new(),
            params,
            mode,
            bound: Vec::new(),
        }
    }

    fn param_node(&mut self, name: &str) -> Result<NodeId> {
        let idx = self
            .params
            .index_of(name)
            .ok_or_else(|| Error::Config(format!("unknown parameter: {name}")))?;
        if let Some(&(_, id)) = self.bound.iter().find(|(i, _)| *i == idx) {
            return Ok(id);
        }
        let entry = &self.params.entries[idx];
        let id = self.graph.leaf(entry.tensor.clone(), entry.trainable)?;
        self.bound.push((idx, id));
        Ok(id)
    }

    /// FC + optional BN + activation, as one named layer of a submodule.
    fn layer(
        &mut self,
        x: NodeId,
        sub: &str,
        li: usize,
        bn: bool,
        activation: Activation,
    ) -> Result<NodeId> {
        let w = self.param_node(&format!("{sub}.{li}.w"))?;
        let b = self.param_node(&format!("{sub}.{li}.b"))?;
        let mut h = self.graph.matmul(x, w)?;
        h = self.graph.add_bias(h, b)?;
        if bn {
            let gamma = self.param_node(&format!("{sub}.{li}.gamma"))?;
            let beta = self.param_node(&format!("{sub}.{li}.beta"))?;
            h = match self.mode {
                BnMode::Train => {
                    let (out, mean, var) = self.graph.batchnorm_train(h, gamma, beta)?;
                    self.update_running_stats(sub, li, &mean, &var)?;
                    out
                }
                BnMode::Eval => {
                    let rmean = self
                        .params
                        .get(&format!("{sub}.{li}.rmean"))
                        .ok_or_else(|| Error::Config(format!("missing running stats: {sub}.{li}")))?
                        .data
                        .clone();
                    let rvar = self
                        .params
                        .get(&format!("{sub}.{li}.rvar"))
                        .ok_or_else(|| Error::Config(format!("missing running stats: {sub}.{li}")))?
                        .data
                        .clone();
                    self.graph.batchnorm_eval(h, gamma, beta, &rmean, &rvar)?
                }
            };
        }
        match activation {
            Activation::Relu => self.graph.relu(h),
            Activation::Sigmoid => self.graph.sigmoid(h),
            Activation::None => Ok(h),
        }
    }

    fn update_running_stats(&mut self, sub: &str, li: usize, mean: &[f64], var: &[f64]) -> Result<()> {
        for (suffix, batch) in [("rmean", mean), ("rvar", var)] {
            let t = self
                .params
                .get_mut(&format!("{sub}.{li}.{suffix}"))
                .ok_or_else(|| Error::Config(format!("missing running stats: {sub}.{li}")))?;
            for (r, &b) in t.data.iter_mut().zip(batch) {
                *r = (1.0 - BN_MOMENTUM) * *r + BN_MOMENTUM * b;
            }
        }
        Ok(())
    }

    /// 4 RB blocks mapping raw modality data to K semantic features.
    pub fn encode(&mut self, spec: &ModelSpec, x: NodeId, modality: Modality) -> Result<NodeId> {
        let d = spec.modality_dim(modality);
        let got = self.graph.value(x).shape();
        if got.1 != d {
            return Err(Error::ShapeMismatch {
                op: "encode",
                lhs: got,
                rhs: (got.0, d),
            });
        }
        let sub = match modality {
            Modality::Hsi => "enc_hsi",
            Modality::Lidar => "enc_lidar",
        };
        let mut h = x;
        for li in 0..spec.encoder_widths.len() {
            h = self.layer(h, sub, li, true, Activation::Relu)?;
        }
        Ok(h)
    }

    /// Single FC + softmax over the transmitter-side semantics.
    pub fn pe_classify(&mut self, spec: &ModelSpec, s: NodeId) -> Result<NodeId> {
        self.classify(spec, s, "pe")
    }

    /// Single FC + softmax over the received symbols.
    pub fn final_classify(&mut self, spec: &ModelSpec, s_hat: NodeId) -> Result<NodeId> {
        self.classify(spec, s_hat, "fin")
    }

    fn classify(&mut self, spec: &ModelSpec, s: NodeId, sub: &str) -> Result<NodeId> {
        let got = self.graph.value(s).shape();
        if got.1 != spec.k {
            return Err(Error::ShapeMismatch {
                op: "classify",
                lhs: got,
                rhs: (got.0, spec.k),
            });
        }
        let h = self.layer(s, sub, 0, false, Activation::None)?;
        self.graph.softmax_rows(h)
    }

    /// Concatenates the present inputs in order [S_HSI, S_LiDAR, C_pre]
    /// and applies the fusion RB chain.
    pub fn fuse(
        &mut self,
        spec: &ModelSpec,
        s_hsi: Option<NodeId>,
        s_lidar: Option<NodeId>,
        c_pre: Option<NodeId>,
    ) -> Result<NodeId> {
        let v = spec.variant;
        if s_hsi.is_some() != v.has_hsi()
            || s_lidar.is_some() != v.has_lidar()
            || c_pre.is_some() != v.has_pe()
        {
            return Err(Error::Config(format!(
                "fuse: input presence does not match variant {v}"
            )));
        }
        let parts: Vec<NodeId> = [s_hsi, s_lidar, c_pre].into_iter().flatten().collect();
        let mut h = self.graph.concat_cols(&parts)?;
        for li in 0..spec.fusion_widths.len() {
            h = self.layer(h, "fusion", li, true, Activation::Relu)?;
        }
        Ok(h)
    }

    /// 2 SB blocks then a sigmoid-activated FC back to the modality dim.
    pub fn decode(&mut self, spec: &ModelSpec, s_hat: NodeId, modality: Modality) -> Result<NodeId> {
        let got = self.graph.value(s_hat).shape();
        if got.1 != spec.k {
            return Err(Error::ShapeMismatch {
                op: "decode",
                lhs: got,
                rhs: (got.0, spec.k),
            });
        }
        let sub = match modality {
            Modality::Hsi => "dec_hsi",
            Modality::Lidar => "dec_lidar",
        };
        let total = spec.decoder_widths.len() + 1;
        let mut h = s_hat;
        for li in 0..total {
            let bn = li + 1 < total;
            h = self.layer(h, sub, li, bn, Activation::Sigmoid)?;
        }
        Ok(h)
    }

    /// Full pipeline for the spec's variant: encode, coarse-classify,
    /// fuse, power-normalize, transmit, classify and reconstruct.
    pub fn forward_full(
        &mut self,
        spec: &ModelSpec,
        hsi: Option<&Tensor>,
        lidar: Option<&Tensor>,
        mut channel: impl FnMut(&mut Graph, NodeId) -> Result<NodeId>,
    ) -> Result<ForwardOutput> {
        let v = spec.variant;
        if hsi.is_some() != v.has_hsi() || lidar.is_some() != v.has_lidar() {
            return Err(Error::Config(format!(
                "forward_full: batch modalities do not match variant {v}"
            )));
        }
        let s_hsi = match hsi {
            Some(t) => {
                let x = self.graph.constant(t.clone())?;
                Some(self.encode(spec, x, Modality::Hsi)?)
            }
            None => None,
        };
        let s_lidar = match lidar {
            Some(t) => {
                let x = self.graph.constant(t.clone())?;
                Some(self.encode(spec, x, Modality::Lidar)?)
            }
            None => None,
        };
        let c_pre = if v.has_pe() {
            let src = match v.pe_source() {
                Modality::Hsi => s_hsi.expect("pe source present"),
                Modality::Lidar => s_lidar.expect("pe source present"),
            };
            Some(self.pe_classify(spec, src)?)
        } else {
            None
        };
        let fused = self.fuse(spec, s_hsi, s_lidar, c_pre)?;
        let s = self.graph.power_normalize(fused)?;
        let s_hat = channel(&mut self.graph, s)?;
        let c_fin = self.final_classify(spec, s_hat)?;
        let d_hat_hsi = if v.has_hsi() {
            Some(self.decode(spec, s_hat, Modality::Hsi)?)
        } else {
            None
        };
        let d_hat_lidar = if v.has_lidar() {
            Some(self.decode(spec, s_hat, Modality::Lidar)?)
        } else {
            None
        };
        Ok(ForwardOutput {
            c_pre,
            s,
            s_hat,
            c_fin,
            d_hat_hsi,
            d_hat_lidar,
        })
    }

    /// Backward from the loss node, then accumulate leaf gradients into
    /// the bound parameter tensors.
    pub fn backward_and_collect(&mut self, loss: NodeId) -> Result<()> {
        self.graph.backward(loss)?;
        for &(idx, node) in &self.bound {
            if !self.params.entries[idx].trainable {
                continue;
            }
            if let Some(g) = self.graph.grad(node) {
                let g = g.to_vec();
                self.params.entries[idx].tensor.accumulate_grad(&g);
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
enum Activation {
    Relu,
    Sigmoid,
    None,
}
