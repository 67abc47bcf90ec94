//! The host network: ordered dense blocks with tap points where gates may
//! attach, exact per-block FLOPs accounting, and a cross-entropy-trained
//! final classifier.
//!
//! FLOPs convention: a dense layer of shape in x out costs
//! `2*in*out + out` (multiply-accumulate counted as 2, plus bias adds);
//! activations are free. The backbone is immutable once built, so gate
//! training and calibration cannot disturb it.

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::textio::{fmt_sig9, parse_real, quantize_sig9, read_to_string, write_atomic, Lines};
use crate::util::{argmax, log_sum_exp, softmax};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::path::Path;

pub const BACKBONE_HEADER: &str = "gatecascade-backbone v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Rectifier,
    Identity,
}

impl Activation {
    fn apply(&self, z: f64) -> f64 {
        match self {
            Activation::Rectifier => z.max(0.0),
            Activation::Identity => z,
        }
    }

    /// Derivative at pre-activation `z`; the rectifier kink at 0 takes 0.
    fn derivative(&self, z: f64) -> f64 {
        match self {
            Activation::Rectifier => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Activation::Rectifier => "rectifier",
            Activation::Identity => "identity",
        }
    }

    pub fn from_name(name: &str) -> Option<Activation> {
        match name {
            "rectifier" => Some(Activation::Rectifier),
            "identity" => Some(Activation::Identity),
            _ => None,
        }
    }
}

/// Shape and activation of one dense block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockSpec {
    pub input_dim: usize,
    pub output_dim: usize,
    pub activation: Activation,
}

impl BlockSpec {
    pub fn flops(&self) -> u64 {
        dense_flops(self.input_dim, self.output_dim)
    }
}

/// FLOPs of a dense map of the given shape: 2*in*out multiply-adds plus
/// out bias additions.
pub fn dense_flops(input_dim: usize, output_dim: usize) -> u64 {
    (2 * input_dim * output_dim + output_dim) as u64
}

/// One dense block with trained parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseBlock {
    spec: BlockSpec,
    weights: Vec<f64>, // output_dim x input_dim, row-major
    biases: Vec<f64>,
}

impl DenseBlock {
    pub fn new(spec: BlockSpec, weights: Vec<f64>, biases: Vec<f64>) -> Result<Self> {
        if spec.input_dim < 1 || spec.output_dim < 1 {
            return Err(Error::InvalidInput("block dims must be >= 1".into()));
        }
        if weights.len() != spec.input_dim * spec.output_dim || biases.len() != spec.output_dim {
            return Err(Error::Dimension(format!(
                "block {}x{} given {} weights and {} biases",
                spec.input_dim,
                spec.output_dim,
                weights.len(),
                biases.len()
            )));
        }
        if weights.iter().chain(&biases).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("block parameters must be finite".into()));
        }
        Ok(DenseBlock {
            spec,
            weights,
            biases,
        })
    }

    pub fn spec(&self) -> &BlockSpec {
        &self.spec
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        let (ind, out) = (self.spec.input_dim, self.spec.output_dim);
        let mut y = self.biases.clone();
        for o in 0..out {
            let row = &self.weights[o * ind..(o + 1) * ind];
            let mut acc = 0.0;
            for (w, xi) in row.iter().zip(x) {
                acc += w * xi;
            }
            y[o] += acc;
        }
        for v in y.iter_mut() {
            *v = self.spec.activation.apply(*v);
        }
        y
    }

    /// Pre-activation output, for backprop.
    fn forward_pre(&self, x: &[f64]) -> Vec<f64> {
        let (ind, out) = (self.spec.input_dim, self.spec.output_dim);
        let mut z = self.biases.clone();
        for o in 0..out {
            let row = &self.weights[o * ind..(o + 1) * ind];
            for (w, xi) in row.iter().zip(x) {
                z[o] += w * xi;
            }
        }
        z
    }
}

/// Per-sample record of a full forward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub tap_activations: BTreeMap<usize, Vec<f64>>,
    pub logits: Vec<f64>,
    pub flops_used: u64,
}

/// Ordered dense blocks, tap points, and a final linear classifier.
/// Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Backbone {
    blocks: Vec<DenseBlock>,
    tap_points: Vec<usize>,
    classifier: DenseBlock,
}

impl Backbone {
    pub fn new(
        blocks: Vec<DenseBlock>,
        tap_points: Vec<usize>,
        classifier: DenseBlock,
    ) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidInput("backbone needs at least one block".into()));
        }
        for pair in blocks.windows(2) {
            if pair[0].spec.output_dim != pair[1].spec.input_dim {
                return Err(Error::Dimension(format!(
                    "block output dim {} does not chain into next input dim {}",
                    pair[0].spec.output_dim, pair[1].spec.input_dim
                )));
            }
        }
        if classifier.spec.input_dim != blocks.last().unwrap().spec.output_dim {
            return Err(Error::Dimension(format!(
                "classifier input dim {} does not match last block output dim {}",
                classifier.spec.input_dim,
                blocks.last().unwrap().spec.output_dim
            )));
        }
        if classifier.spec.output_dim < 2 {
            return Err(Error::InvalidInput("classifier must emit >= 2 logits".into()));
        }
        if classifier.spec.activation != Activation::Identity {
            return Err(Error::InvalidInput("classifier activation must be identity".into()));
        }
        let bb = Backbone {
            blocks,
            tap_points: Vec::new(),
            classifier,
        };
        bb.with_tap_points(tap_points)
    }

    /// Same backbone with a different set of tap points.
    pub fn with_tap_points(mut self, tap_points: Vec<usize>) -> Result<Self> {
        for pair in tap_points.windows(2) {
            if pair[0] >= pair[1] {
                return Err(Error::InvalidInput(
                    "tap points must be strictly increasing".into(),
                ));
            }
        }
        if let Some(&last) = tap_points.last() {
            if last >= self.blocks.len() {
                return Err(Error::InvalidInput(format!(
                    "tap point {} out of range for {} blocks",
                    last,
                    self.blocks.len()
                )));
            }
        }
        self.tap_points = tap_points;
        Ok(self)
    }

    pub fn blocks(&self) -> &[DenseBlock] {
        &self.blocks
    }

    pub fn tap_points(&self) -> &[usize] {
        &self.tap_points
    }

    pub fn input_dim(&self) -> usize {
        self.blocks[0].spec.input_dim
    }

    pub fn class_count(&self) -> usize {
        self.classifier.spec.output_dim
    }

    /// Activation dimension exposed at tap `tap` (a block index).
    pub fn tap_dim(&self, tap: usize) -> Result<usize> {
        if !self.tap_points.contains(&tap) {
            return Err(Error::InvalidInput(format!("{tap} is not a tap point")));
        }
        Ok(self.blocks[tap].spec.output_dim)
    }

    pub fn total_flops(&self) -> u64 {
        self.blocks.iter().map(|b| b.spec.flops()).sum::<u64>() + self.classifier.spec.flops()
    }

    /// Cumulative FLOPs of blocks 0..=block_idx.
    pub fn flops_through_block(&self, block_idx: usize) -> u64 {
        self.blocks[..=block_idx]
            .iter()
            .map(|b| b.spec.flops())
            .sum()
    }

    pub fn classifier_flops(&self) -> u64 {
        self.classifier.spec.flops()
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::Dimension(format!(
                "input has {} entries, backbone expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("input contains a non-finite value".into()));
        }
        Ok(())
    }

    /// Runs every block, recording activations at every tap point and the
    /// final logits. `flops_used` equals `total_flops`.
    pub fn forward_collect(&self, x: &[f64]) -> Result<ForwardTrace> {
        self.check_input(x)?;
        let mut tap_activations = BTreeMap::new();
        let mut current = x.to_vec();
        for (idx, block) in self.blocks.iter().enumerate() {
            current = block.forward(&current);
            if self.tap_points.contains(&idx) {
                tap_activations.insert(idx, current.clone());
            }
        }
        let logits = self.classifier.forward(&current);
        Ok(ForwardTrace {
            tap_activations,
            logits,
            flops_used: self.total_flops(),
        })
    }

    /// Executes only blocks `0..=upto_tap` and returns the tap activation
    /// with the FLOPs spent. Bit-identical to the corresponding entry of
    /// [`Backbone::forward_collect`].
    pub fn forward_partial(&self, x: &[f64], upto_tap: usize) -> Result<(Vec<f64>, u64)> {
        self.check_input(x)?;
        if !self.tap_points.contains(&upto_tap) {
            return Err(Error::InvalidInput(format!(
                "{upto_tap} is not a tap point of this backbone"
            )));
        }
        let mut current = x.to_vec();
        for block in &self.blocks[..=upto_tap] {
            current = block.forward(&current);
        }
        Ok((current, self.flops_through_block(upto_tap)))
    }

    /// Full-depth prediction: argmax of the logits (ties to the lowest
    /// index) at `total_flops` cost.
    pub fn predict_final(&self, x: &[f64]) -> Result<(usize, u64)> {
        let trace = self.forward_collect(x)?;
        Ok((argmax(&trace.logits), trace.flops_used))
    }

    /// Mean cross-entropy of the classifier over a dataset.
    pub fn mean_cross_entropy(&self, data: &LabeledDataset) -> Result<f64> {
        let mut total = 0.0;
        for i in 0..data.len() {
            let trace = self.forward_collect(data.row(i))?;
            total += log_sum_exp(&trace.logits) - trace.logits[data.label(i)];
        }
        Ok(total / data.len() as f64)
    }

    /// Fraction of samples whose full-depth prediction matches the label.
    pub fn accuracy(&self, data: &LabeledDataset) -> Result<f64> {
        let mut correct = 0usize;
        for i in 0..data.len() {
            if self.predict_final(data.row(i))?.0 == data.label(i) {
                correct += 1;
            }
        }
        Ok(correct as f64 / data.len() as f64)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        out.push_str(BACKBONE_HEADER);
        out.push('\n');
        out.push_str(&format!("blocks {}\n", self.blocks.len()));
        for block in &self.blocks {
            out.push_str(&format!(
                "block {} {} {}\n",
                block.spec.input_dim,
                block.spec.output_dim,
                block.spec.activation.name()
            ));
            push_params(&mut out, block);
        }
        out.push_str(&format!(
            "classifier {} {}\n",
            self.classifier.spec.input_dim, self.classifier.spec.output_dim
        ));
        push_params(&mut out, &self.classifier);
        out.push_str("taps");
        for t in &self.tap_points {
            out.push_str(&format!(" {t}"));
        }
        out.push('\n');
        write_atomic(path, &out)
    }

    pub fn load(path: &Path) -> Result<Backbone> {
        let text = read_to_string(path)?;
        let mut lines = Lines::new(path, &text);
        let (lno, header) = lines.expect("model header")?;
        if header != BACKBONE_HEADER {
            return Err(lines.err(lno, format!("expected `{BACKBONE_HEADER}`, got `{header}`")));
        }
        let (lno, decl) = lines.expect("blocks count")?;
        let count: usize = decl
            .strip_prefix("blocks ")
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| lines.err(lno, "expected `blocks <n>`"))?;

        let mut blocks = Vec::with_capacity(count);
        for _ in 0..count {
            let (lno, decl) = lines.expect("block declaration")?;
            let parts: Vec<&str> = decl.split_whitespace().collect();
            if parts.len() != 4 || parts[0] != "block" {
                return Err(lines.err(lno, "expected `block <in> <out> <activation>`"));
            }
            let input_dim: usize = parts[1]
                .parse()
                .map_err(|_| lines.err(lno, "bad block input dim"))?;
            let output_dim: usize = parts[2]
                .parse()
                .map_err(|_| lines.err(lno, "bad block output dim"))?;
            let activation = Activation::from_name(parts[3])
                .ok_or_else(|| lines.err(lno, format!("unknown activation `{}`", parts[3])))?;
            let spec = BlockSpec {
                input_dim,
                output_dim,
                activation,
            };
            let (weights, biases) = parse_params(&mut lines, input_dim, output_dim)?;
            blocks.push(DenseBlock::new(spec, weights, biases)?);
        }

        let (lno, decl) = lines.expect("classifier declaration")?;
        let parts: Vec<&str> = decl.split_whitespace().collect();
        if parts.len() != 3 || parts[0] != "classifier" {
            return Err(lines.err(lno, "expected `classifier <in> <out>`"));
        }
        let input_dim: usize = parts[1]
            .parse()
            .map_err(|_| lines.err(lno, "bad classifier input dim"))?;
        let output_dim: usize = parts[2]
            .parse()
            .map_err(|_| lines.err(lno, "bad classifier output dim"))?;
        let (weights, biases) = parse_params(&mut lines, input_dim, output_dim)?;
        let classifier = DenseBlock::new(
            BlockSpec {
                input_dim,
                output_dim,
                activation: Activation::Identity,
            },
            weights,
            biases,
        )?;

        let (lno, decl) = lines.expect("taps line")?;
        let mut taps = Vec::new();
        let mut parts = decl.split_whitespace();
        if parts.next() != Some("taps") {
            return Err(lines.err(lno, "expected `taps ...`"));
        }
        for p in parts {
            taps.push(p.parse().map_err(|_| lines.err(lno, "bad tap index"))?);
        }
        Backbone::new(blocks, taps, classifier)
    }
}

fn push_params(out: &mut String, block: &DenseBlock) {
    let (ind, outd) = (block.spec.input_dim, block.spec.output_dim);
    out.push_str("w\n");
    for o in 0..outd {
        let row: Vec<String> = block.weights[o * ind..(o + 1) * ind]
            .iter()
            .map(|v| fmt_sig9(*v))
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out.push_str("b\n");
    let row: Vec<String> = block.biases.iter().map(|v| fmt_sig9(*v)).collect();
    out.push_str(&row.join(" "));
    out.push('\n');
}

fn parse_params(lines: &mut Lines, input_dim: usize, output_dim: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let (lno, tag) = lines.expect("`w`")?;
    if tag != "w" {
        return Err(lines.err(lno, "expected `w`"));
    }
    let mut weights = Vec::with_capacity(input_dim * output_dim);
    for _ in 0..output_dim {
        let (lno, row) = lines.expect("weight row")?;
        let values: Vec<&str> = row.split_whitespace().collect();
        if values.len() != input_dim {
            return Err(lines.err(
                lno,
                format!("weight row has {} values, expected {input_dim}", values.len()),
            ));
        }
        for v in values {
            weights.push(
                parse_real(v).ok_or_else(|| lines.err(lno, format!("bad weight `{v}`")))?,
            );
        }
    }
    let (lno, tag) = lines.expect("`b`")?;
    if tag != "b" {
        return Err(lines.err(lno, "expected `b`"));
    }
    let (lno, row) = lines.expect("bias row")?;
    let values: Vec<&str> = row.split_whitespace().collect();
    if values.len() != output_dim {
        return Err(lines.err(
            lno,
            format!("bias row has {} values, expected {output_dim}", values.len()),
        ));
    }
    let mut biases = Vec::with_capacity(output_dim);
    for v in values {
        biases.push(parse_real(v).ok_or_else(|| lines.err(lno, format!("bad bias `{v}`")))?);
    }
    Ok((weights, biases))
}

/// Trainable parameter buffers for one dense layer during backprop.
struct LayerGrads {
    weights: Vec<f64>,
    biases: Vec<f64>,
}

/// Trains blocks and final classifier jointly by mini-batch SGD on softmax
/// cross-entropy. Hidden blocks use the rectifier; weights start from a
/// seed-deterministic uniform distribution scaled by 1/sqrt(input_dim);
/// biases start at zero. The returned backbone is frozen, its parameters
/// rounded to the model file's 9-significant-digit precision, with a tap
/// point after every block.
pub fn train_backbone(
    train: &LabeledDataset,
    layer_dims: &[usize],
    epochs: usize,
    learning_rate: f64,
    batch_size: usize,
    seed: u64,
) -> Result<Backbone> {
    train_backbone_with_history(train, layer_dims, epochs, learning_rate, batch_size, seed)
        .map(|(bb, _)| bb)
}

/// [`train_backbone`] plus the mean cross-entropy observed at each epoch.
pub fn train_backbone_with_history(
    train: &LabeledDataset,
    layer_dims: &[usize],
    epochs: usize,
    learning_rate: f64,
    batch_size: usize,
    seed: u64,
) -> Result<(Backbone, Vec<f64>)> {
    if layer_dims.len() < 2 {
        return Err(Error::InvalidInput(
            "layer_dims must list the input dim and at least one block output dim".into(),
        ));
    }
    if layer_dims[0] != train.feature_dim() {
        return Err(Error::InvalidInput(format!(
            "layer_dims[0] = {} must equal the feature dim {}",
            layer_dims[0],
            train.feature_dim()
        )));
    }
    if epochs < 1 {
        return Err(Error::InvalidInput("epochs must be >= 1".into()));
    }
    if batch_size < 1 {
        return Err(Error::InvalidInput("batch_size must be >= 1".into()));
    }
    if !(learning_rate > 0.0 && learning_rate.is_finite()) {
        return Err(Error::InvalidInput("learning_rate must be positive".into()));
    }

    let c = train.class_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Parameters as (weights, biases) per layer; the classifier is last.
    let mut shapes: Vec<(usize, usize)> = layer_dims.windows(2).map(|w| (w[0], w[1])).collect();
    shapes.push((*layer_dims.last().unwrap(), c));
    let mut params: Vec<LayerGrads> = shapes
        .iter()
        .map(|&(ind, outd)| {
            let bound = 1.0 / (ind as f64).sqrt();
            LayerGrads {
                weights: (0..ind * outd).map(|_| rng.random_range(-bound..bound)).collect(),
                biases: vec![0.0; outd],
            }
        })
        .collect();
    let n_layers = shapes.len();

    let mut history = Vec::with_capacity(epochs);
    let mut indices: Vec<usize> = (0..train.len()).collect();
    for epoch in 0..epochs {
        indices.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in indices.chunks(batch_size) {
            let scale = 1.0 / batch.len() as f64;
            let mut grads: Vec<LayerGrads> = shapes
                .iter()
                .map(|&(ind, outd)| LayerGrads {
                    weights: vec![0.0; ind * outd],
                    biases: vec![0.0; outd],
                })
                .collect();

            for &i in batch {
                let x = train.row(i);
                let y = train.label(i);

                // Forward, keeping inputs and pre-activations per layer.
                let mut inputs: Vec<Vec<f64>> = Vec::with_capacity(n_layers);
                let mut pres: Vec<Vec<f64>> = Vec::with_capacity(n_layers);
                let mut current = x.to_vec();
                for (l, p) in params.iter().enumerate() {
                    let (ind, outd) = shapes[l];
                    let mut z = p.biases.clone();
                    for o in 0..outd {
                        let row = &p.weights[o * ind..(o + 1) * ind];
                        for (w, xi) in row.iter().zip(&current) {
                            z[o] += w * xi;
                        }
                    }
                    inputs.push(std::mem::take(&mut current));
                    let is_classifier = l == n_layers - 1;
                    current = if is_classifier {
                        z.clone()
                    } else {
                        z.iter().map(|v| v.max(0.0)).collect()
                    };
                    pres.push(z);
                }
                let logits = &current;
                epoch_loss += log_sum_exp(logits) - logits[y];

                // Backward.
                let mut delta: Vec<f64> = softmax(logits);
                delta[y] -= 1.0;
                for v in delta.iter_mut() {
                    *v *= scale;
                }
                for l in (0..n_layers).rev() {
                    let (ind, _outd) = shapes[l];
                    let input = &inputs[l];
                    for (o, d) in delta.iter().enumerate() {
                        grads[l].biases[o] += d;
                        let row = &mut grads[l].weights[o * ind..(o + 1) * ind];
                        for (g, xi) in row.iter_mut().zip(input) {
                            *g += d * xi;
                        }
                    }
                    if l > 0 {
                        let mut prev = vec![0.0; ind];
                        for (o, d) in delta.iter().enumerate() {
                            let row = &params[l].weights[o * ind..(o + 1) * ind];
                            for (p, w) in prev.iter_mut().zip(row) {
                                *p += d * w;
                            }
                        }
                        for (p, z) in prev.iter_mut().zip(&pres[l - 1]) {
                            if *z <= 0.0 {
                                *p = 0.0;
                            }
                        }
                        delta = prev;
                    }
                }
            }

            for (p, g) in params.iter_mut().zip(&grads) {
                for (w, gw) in p.weights.iter_mut().zip(&g.weights) {
                    *w -= learning_rate * gw;
                }
                for (b, gb) in p.biases.iter_mut().zip(&g.biases) {
                    *b -= learning_rate * gb;
                }
            }
        }
        let mean_loss = epoch_loss / train.len() as f64;
        if !mean_loss.is_finite() {
            return Err(Error::Numerical(format!(
                "training loss became non-finite at epoch {epoch}; reduce learning_rate"
            )));
        }
        history.push(mean_loss);
    }

    // Freeze at the model file's precision so save/load is exact.
    for p in params.iter_mut() {
        for v in p.weights.iter_mut().chain(p.biases.iter_mut()) {
            *v = quantize_sig9(*v);
        }
    }

    let classifier_params = params.pop().unwrap();
    let classifier = DenseBlock::new(
        BlockSpec {
            input_dim: *layer_dims.last().unwrap(),
            output_dim: c,
            activation: Activation::Identity,
        },
        classifier_params.weights,
        classifier_params.biases,
    )?;
    let blocks: Vec<DenseBlock> = params
        .into_iter()
        .zip(layer_dims.windows(2))
        .map(|(p, dims)| {
            DenseBlock::new(
                BlockSpec {
                    input_dim: dims[0],
                    output_dim: dims[1],
                    activation: Activation::Rectifier,
                },
                p.weights,
                p.biases,
            )
        })
        .collect::<Result<_>>()?;
    let all_taps: Vec<usize> = (0..blocks.len()).collect();
    let backbone = Backbone::new(blocks, all_taps, classifier)?;
    Ok((backbone, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_hierarchical_blobs, HierarchyConfig};

    fn identity_block(dim: usize) -> DenseBlock {
        let mut weights = vec![0.0; dim * dim];
        for i in 0..dim {
            weights[i * dim + i] = 1.0;
        }
        DenseBlock::new(
            BlockSpec {
                input_dim: dim,
                output_dim: dim,
                activation: Activation::Identity,
            },
            weights,
            vec![0.0; dim],
        )
        .unwrap()
    }

    /// 2 blocks (4->8, 8->8) + classifier (8->3); total FLOPs 72+136+51.
    pub(crate) fn small_backbone() -> Backbone {
        let b0 = DenseBlock::new(
            BlockSpec {
                input_dim: 4,
                output_dim: 8,
                activation: Activation::Identity,
            },
            (0..32).map(|i| (i as f64) * 0.01 - 0.15).collect(),
            vec![0.05; 8],
        )
        .unwrap();
        let b1 = DenseBlock::new(
            BlockSpec {
                input_dim: 8,
                output_dim: 8,
                activation: Activation::Rectifier,
            },
            (0..64).map(|i| ((i * 7 % 13) as f64) * 0.02 - 0.1).collect(),
            vec![0.0; 8],
        )
        .unwrap();
        let cls = DenseBlock::new(
            BlockSpec {
                input_dim: 8,
                output_dim: 3,
                activation: Activation::Identity,
            },
            (0..24).map(|i| ((i * 5 % 11) as f64) * 0.03 - 0.12).collect(),
            vec![0.01, -0.02, 0.0],
        )
        .unwrap();
        Backbone::new(vec![b0, b1], vec![0, 1], cls).unwrap()
    }

    fn blobs_2class() -> crate::data::LabeledDataset {
        generate_hierarchical_blobs(&HierarchyConfig {
            coarse_count: 2,
            fine_per_coarse: 1,
            samples_per_class: 100,
            coarse_separation: 10.0,
            fine_separation: 0.0,
            noise_sigma: 0.5,
            feature_dim: 2,
            seed: 3,
        })
        .unwrap()
    }

    #[test]
    fn flops_hand_arithmetic() {
        let bb = small_backbone();
        assert_eq!(bb.blocks()[0].spec().flops(), 72);
        assert_eq!(bb.blocks()[1].spec().flops(), 136);
        assert_eq!(bb.classifier_flops(), 51);
        assert_eq!(bb.total_flops(), 259);
        let trace = bb.forward_collect(&[1.0, -2.0, 0.5, 0.0]).unwrap();
        assert_eq!(trace.flops_used, 259);
    }

    #[test]
    fn identity_backbone_passes_input_through() {
        let bb = Backbone::new(
            vec![identity_block(3), identity_block(3)],
            vec![0, 1],
            identity_block(3),
        )
        .unwrap();
        let x = [0.5, -1.25, 2.0];
        let trace = bb.forward_collect(&x).unwrap();
        assert_eq!(trace.tap_activations[&0], x.to_vec());
        assert_eq!(trace.tap_activations[&1], x.to_vec());
        assert_eq!(trace.logits, x.to_vec());
        // classifier = identity, x = (0, 0, 7) -> label 2
        assert_eq!(bb.predict_final(&[0.0, 0.0, 7.0]).unwrap().0, 2);
    }

    #[test]
    fn forward_rejects_bad_input() {
        let bb = small_backbone();
        assert!(bb.forward_collect(&[1.0, 2.0]).is_err());
        assert!(bb.forward_collect(&[1.0, f64::NAN, 0.0, 0.0]).is_err());
    }

    #[test]
    fn partial_matches_collect_and_counts_flops() {
        let bb = small_backbone();
        let x = [0.3, -0.7, 1.1, 0.2];
        let trace = bb.forward_collect(&x).unwrap();
        let (a0, f0) = bb.forward_partial(&x, 0).unwrap();
        assert_eq!(f0, 72);
        assert_eq!(a0, trace.tap_activations[&0]);
        let (a1, f1) = bb.forward_partial(&x, 1).unwrap();
        assert_eq!(f1, 72 + 136);
        assert_eq!(a1, trace.tap_activations[&1]);
        assert!(bb.forward_partial(&x, 99).is_err());
    }

    #[test]
    fn flops_additivity_over_taps() {
        let bb = small_backbone();
        for &tap in bb.tap_points() {
            let upto = bb.flops_through_block(tap);
            let rest: u64 = bb.blocks()[tap + 1..].iter().map(|b| b.spec().flops()).sum();
            assert_eq!(upto + rest + bb.classifier_flops(), bb.total_flops());
        }
    }

    #[test]
    fn predict_final_tie_breaks_low() {
        let bb = Backbone::new(vec![identity_block(2)], vec![0], identity_block(2)).unwrap();
        assert_eq!(bb.predict_final(&[0.5, 0.5]).unwrap().0, 0);
    }

    #[test]
    fn training_fits_separable_blobs() {
        let data = blobs_2class();
        // Oracle first: the blobs are linearly separable.
        let mut means = [[0.0; 2]; 2];
        let mut counts = [0usize; 2];
        for i in 0..data.len() {
            counts[data.label(i)] += 1;
            for d in 0..2 {
                means[data.label(i)][d] += data.row(i)[d];
            }
        }
        let mut correct = 0;
        for i in 0..data.len() {
            let score = |g: usize| {
                let m = &means[g];
                let c = counts[g] as f64;
                data.row(i)[0] * m[0] / c + data.row(i)[1] * m[1] / c
                    - (m[0] * m[0] + m[1] * m[1]) / (2.0 * c * c)
            };
            let pred = if score(1) > score(0) { 1 } else { 0 };
            if pred == data.label(i) {
                correct += 1;
            }
        }
        assert!(correct as f64 / data.len() as f64 >= 0.99, "data not separable");

        let bb = train_backbone(&data, &[2, 8, 8], 50, 0.05, 16, 5).unwrap();
        assert!(bb.accuracy(&data).unwrap() >= 0.99);
    }

    #[test]
    fn training_precondition_errors() {
        let data = blobs_2class();
        assert!(train_backbone(&data, &[2, 8], 0, 0.05, 16, 5).is_err());
        assert!(train_backbone(&data, &[3, 8], 10, 0.05, 16, 5).is_err());
        assert!(train_backbone(&data, &[2], 10, 0.05, 16, 5).is_err());
    }

    #[test]
    fn training_is_deterministic_per_seed() {
        let data = blobs_2class();
        let a = train_backbone(&data, &[2, 6, 6], 10, 0.05, 16, 5).unwrap();
        let b = train_backbone(&data, &[2, 6, 6], 10, 0.05, 16, 5).unwrap();
        assert_eq!(a, b);
        let c = train_backbone(&data, &[2, 6, 6], 10, 0.05, 16, 6).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn loss_non_increasing_at_small_learning_rate() {
        let data = blobs_2class();
        let ten = data.subset(&(0..10).chain(100..110).step_by(2).collect::<Vec<_>>()).unwrap();
        let (_bb, history) =
            train_backbone_with_history(&ten, &[2, 6, 6], 40, 1e-3, ten.len(), 1).unwrap();
        for pair in history.windows(2) {
            assert!(
                pair[1] <= pair[0] * 1.05,
                "loss rose from {} to {}",
                pair[0],
                pair[1]
            );
        }
    }

    #[test]
    fn save_load_round_trip_preserves_outputs() {
        let data = blobs_2class();
        let bb = train_backbone(&data, &[2, 6, 6], 15, 0.05, 16, 5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bb.model");
        bb.save(&path).unwrap();
        let loaded = Backbone::load(&path).unwrap();
        assert_eq!(loaded, bb);
        let x = data.row(17);
        let a = bb.forward_collect(x).unwrap();
        let b = loaded.forward_collect(x).unwrap();
        assert_eq!(a.logits, b.logits);
        assert_eq!(a.tap_activations, b.tap_activations);

        // A second save of the loaded model is byte-identical.
        let path2 = dir.path().join("bb2.model");
        loaded.save(&path2).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&path2).unwrap()
        );
    }
}
