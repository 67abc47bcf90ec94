//! Decision gates: one-vs-all linear classifiers trained by regularized
//! hinge loss with subgradient descent, plus the threshold decision rule and
//! a cross-entropy-trained baseline gate.
//!
//! A gate computes `w'x - b`, the vector of signed distances of a sample to
//! each class's hyperplane. When the largest distance clears the gate's
//! threshold the sample exits with the argmax class; otherwise it passes
//! deeper. Cross-entropy gates apply the same decision rule to their softmax
//! probabilities instead, the standard confidence channel for softmax heads.
//!
//! The training objective per gate is
//! `(1/n) sum_i sum_k max(0, 1 - y_ik (w_k.x_i - b_k)) + lambda * |w|^2`
//! over one-vs-all sign labels y in {-1, +1}; the squared-norm penalty keeps
//! the objective bounded below and convex in (w, b).

use crate::backbone::dense_flops;
use crate::error::{Error, Result};
use crate::textio::{fmt_sig9, parse_real, quantize_sig9, read_to_string, write_atomic, Lines};
use crate::util::{argmax, log_sum_exp, softmax};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::Path;

pub const GATE_HEADER: &str = "gatecascade-gate v1";

/// Which loss the gate was trained with; decides its confidence channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateLoss {
    Hinge,
    CrossEntropy,
}

impl GateLoss {
    pub fn name(&self) -> &'static str {
        match self {
            GateLoss::Hinge => "hinge",
            GateLoss::CrossEntropy => "cross_entropy",
        }
    }

    pub fn from_name(name: &str) -> Option<GateLoss> {
        match name {
            "hinge" => Some(GateLoss::Hinge),
            "cross_entropy" => Some(GateLoss::CrossEntropy),
            _ => None,
        }
    }
}

/// A linear gate: weights `w` (f x c), biases `b` (c), decision threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct DGate {
    weights: Vec<f64>, // f x c, row-major: weights[i*c + k] couples feature i to class k
    biases: Vec<f64>,
    threshold: f64,
    trained_with: GateLoss,
    feature_dim: usize,
    class_count: usize,
}

impl DGate {
    pub fn new(
        weights: Vec<f64>,
        biases: Vec<f64>,
        feature_dim: usize,
        class_count: usize,
        threshold: f64,
        trained_with: GateLoss,
    ) -> Result<Self> {
        if feature_dim < 1 || class_count < 1 {
            return Err(Error::InvalidInput("gate dims must be >= 1".into()));
        }
        if weights.len() != feature_dim * class_count || biases.len() != class_count {
            return Err(Error::Dimension(format!(
                "gate {feature_dim}x{class_count} given {} weights and {} biases",
                weights.len(),
                biases.len()
            )));
        }
        if weights.iter().chain(&biases).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("gate parameters must be finite".into()));
        }
        if threshold.is_nan() {
            return Err(Error::InvalidInput("gate threshold must not be NaN".into()));
        }
        Ok(DGate {
            weights,
            biases,
            threshold,
            trained_with,
            feature_dim,
            class_count,
        })
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn trained_with(&self) -> GateLoss {
        self.trained_with
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn with_threshold(mut self, threshold: f64) -> Result<Self> {
        if threshold.is_nan() {
            return Err(Error::InvalidInput("gate threshold must not be NaN".into()));
        }
        self.threshold = threshold;
        Ok(self)
    }

    /// Evaluation cost of the gate's linear map.
    pub fn cost_flops(&self) -> u64 {
        dense_flops(self.feature_dim, self.class_count)
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.feature_dim {
            return Err(Error::Dimension(format!(
                "input has {} entries, gate expects {}",
                x.len(),
                self.feature_dim
            )));
        }
        Ok(())
    }

    /// Signed distances `w'x - b` to each class hyperplane.
    pub fn distances(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(raw_distances(
            &self.weights,
            &self.biases,
            self.class_count,
            x,
        ))
    }

    /// The score vector the decision rule thresholds: raw distances for
    /// hinge gates, softmax probabilities for cross-entropy gates.
    pub fn decision_scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        let d = self.distances(x)?;
        Ok(match self.trained_with {
            GateLoss::Hinge => d,
            GateLoss::CrossEntropy => softmax(&d),
        })
    }

    /// Applies the decision rule at threshold `t`.
    pub fn decide(&self, x: &[f64], t: f64) -> Result<GateDecision> {
        if t.is_nan() {
            return Err(Error::InvalidInput("threshold must not be NaN".into()));
        }
        let scores = self.decision_scores(x)?;
        let best = argmax(&scores);
        let outcome = if scores[best] >= t {
            GateOutcome::Exit {
                label: best,
                distance: scores[best],
            }
        } else {
            GateOutcome::PassDeeper
        };
        Ok(GateDecision {
            outcome,
            distances: scores,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        out.push_str(GATE_HEADER);
        out.push('\n');
        out.push_str(&format!("f {}\n", self.feature_dim));
        out.push_str(&format!("c {}\n", self.class_count));
        out.push_str(&format!("trained_with {}\n", self.trained_with.name()));
        out.push_str(&format!("threshold {}\n", fmt_sig9(self.threshold)));
        out.push_str("w\n");
        for i in 0..self.feature_dim {
            let row: Vec<String> = self.weights[i * self.class_count..(i + 1) * self.class_count]
                .iter()
                .map(|v| fmt_sig9(*v))
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out.push_str("b\n");
        let row: Vec<String> = self.biases.iter().map(|v| fmt_sig9(*v)).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
        write_atomic(path, &out)
    }

    pub fn load(path: &Path) -> Result<DGate> {
        let text = read_to_string(path)?;
        let mut lines = Lines::new(path, &text);
        let (lno, header) = lines.expect("gate header")?;
        if header != GATE_HEADER {
            return Err(lines.err(lno, format!("expected `{GATE_HEADER}`, got `{header}`")));
        }
        let f = parse_tagged_usize(&mut lines, "f")?;
        let c = parse_tagged_usize(&mut lines, "c")?;
        let (lno, tw) = lines.expect("trained_with")?;
        let trained_with = tw
            .strip_prefix("trained_with ")
            .and_then(GateLoss::from_name)
            .ok_or_else(|| lines.err(lno, "expected `trained_with hinge|cross_entropy`"))?;
        let (lno, th) = lines.expect("threshold")?;
        let threshold = th
            .strip_prefix("threshold ")
            .and_then(parse_real)
            .ok_or_else(|| lines.err(lno, "expected `threshold <real>`"))?;

        let (lno, tag) = lines.expect("`w`")?;
        if tag != "w" {
            return Err(lines.err(lno, "expected `w`"));
        }
        let mut weights = Vec::with_capacity(f * c);
        for _ in 0..f {
            let (lno, row) = lines.expect("weight row")?;
            let values: Vec<&str> = row.split_whitespace().collect();
            if values.len() != c {
                return Err(lines.err(
                    lno,
                    format!("weight row has {} values, expected {c}", values.len()),
                ));
            }
            for v in values {
                weights
                    .push(parse_real(v).ok_or_else(|| lines.err(lno, format!("bad weight `{v}`")))?);
            }
        }
        let (lno, tag) = lines.expect("`b`")?;
        if tag != "b" {
            return Err(lines.err(lno, "expected `b`"));
        }
        let (lno, row) = lines.expect("bias row")?;
        let values: Vec<&str> = row.split_whitespace().collect();
        if values.len() != c {
            return Err(lines.err(
                lno,
                format!("bias row has {} values, expected {c}", values.len()),
            ));
        }
        let mut biases = Vec::with_capacity(c);
        for v in values {
            biases.push(parse_real(v).ok_or_else(|| lines.err(lno, format!("bad bias `{v}`")))?);
        }
        DGate::new(weights, biases, f, c, threshold, trained_with)
    }
}

fn parse_tagged_usize(lines: &mut Lines, tag: &str) -> Result<usize> {
    let (lno, line) = lines.expect(tag)?;
    line.strip_prefix(tag)
        .map(str::trim)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| lines.err(lno, format!("expected `{tag} <n>`")))
}

/// Outcome of one gate evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum GateOutcome {
    Exit { label: usize, distance: f64 },
    PassDeeper,
}

/// Score vector plus the thresholded decision derived from it.
#[derive(Debug, Clone, PartialEq)]
pub struct GateDecision {
    pub outcome: GateOutcome,
    /// The scores the rule thresholded (signed distances or probabilities).
    pub distances: Vec<f64>,
}

impl GateDecision {
    pub fn exited(&self) -> bool {
        matches!(self.outcome, GateOutcome::Exit { .. })
    }
}

/// Hyperparameters for gate training.
#[derive(Debug, Clone, Copy)]
pub struct HingeTrainConfig {
    /// Weight of the squared-norm regularizer on `w`.
    pub lambda: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl HingeTrainConfig {
    fn validate(&self) -> Result<()> {
        if self.epochs < 1 {
            return Err(Error::InvalidInput("epochs must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidInput("learning_rate must be positive".into()));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidInput("lambda must be >= 0".into()));
        }
        if self.batch_size < 1 {
            return Err(Error::InvalidInput("batch_size must be >= 1".into()));
        }
        Ok(())
    }
}

/// Features paired with one-vs-all sign labels, both row-major.
#[derive(Debug, Clone, Copy)]
pub struct SignedBatch<'a> {
    features: &'a [f64], // n x f
    signs: &'a [f64],    // n x c, entries in {-1, +1}
    n: usize,
    f: usize,
    c: usize,
}

impl<'a> SignedBatch<'a> {
    pub fn new(features: &'a [f64], signs: &'a [f64], f: usize, c: usize) -> Result<Self> {
        if f < 1 || c < 1 {
            return Err(Error::InvalidInput("batch dims must be >= 1".into()));
        }
        if features.len() % f != 0 {
            return Err(Error::Dimension(format!(
                "feature buffer of {} entries is not a multiple of f = {f}",
                features.len()
            )));
        }
        let n = features.len() / f;
        if n == 0 {
            return Err(Error::InvalidInput("batch must contain at least one sample".into()));
        }
        if signs.len() != n * c {
            return Err(Error::Dimension(format!(
                "sign buffer has {} entries, expected {} ({n} samples x {c} classes)",
                signs.len(),
                n * c
            )));
        }
        if signs.iter().any(|&s| s != 1.0 && s != -1.0) {
            return Err(Error::InvalidInput("sign labels must be -1 or +1".into()));
        }
        Ok(SignedBatch {
            features,
            signs,
            n,
            f,
            c,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn feature_row(&self, i: usize) -> &[f64] {
        &self.features[i * self.f..(i + 1) * self.f]
    }

    fn sign_row(&self, i: usize) -> &[f64] {
        &self.signs[i * self.c..(i + 1) * self.c]
    }
}

/// Expands class indices into the n x c one-vs-all sign matrix.
pub fn one_vs_all_signs(labels: &[usize], class_count: usize) -> Result<Vec<f64>> {
    let mut signs = vec![-1.0; labels.len() * class_count];
    for (i, &label) in labels.iter().enumerate() {
        if label >= class_count {
            return Err(Error::InvalidInput(format!(
                "label {label} out of range for class_count {class_count}"
            )));
        }
        signs[i * class_count + label] = 1.0;
    }
    Ok(signs)
}

fn raw_distances(weights: &[f64], biases: &[f64], c: usize, x: &[f64]) -> Vec<f64> {
    let mut scores = vec![0.0; c];
    for (i, &xi) in x.iter().enumerate() {
        let row = &weights[i * c..(i + 1) * c];
        for (s, w) in scores.iter_mut().zip(row) {
            *s += w * xi;
        }
    }
    for (s, b) in scores.iter_mut().zip(biases) {
        *s -= b;
    }
    scores
}

/// Signed distances of `x` to each class hyperplane: `w'x - b`.
pub fn gate_distances(gate: &DGate, x: &[f64]) -> Result<Vec<f64>> {
    gate.distances(x)
}

/// Algorithm: exit with the argmax class when the largest score clears `t`,
/// otherwise pass the sample deeper.
pub fn gate_decide(gate: &DGate, x: &[f64], t: f64) -> Result<GateDecision> {
    gate.decide(x, t)
}

fn hinge_objective_raw(
    weights: &[f64],
    biases: &[f64],
    c: usize,
    batch: &SignedBatch,
    lambda: f64,
) -> f64 {
    let mut total = 0.0;
    for i in 0..batch.n {
        let scores = raw_distances(weights, biases, c, batch.feature_row(i));
        for (k, &y) in batch.sign_row(i).iter().enumerate() {
            total += (1.0 - y * scores[k]).max(0.0);
        }
    }
    let norm_sq: f64 = weights.iter().map(|w| w * w).sum();
    total / batch.n as f64 + lambda * norm_sq
}

fn hinge_subgradient_raw(
    weights: &[f64],
    biases: &[f64],
    f: usize,
    c: usize,
    batch: &SignedBatch,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    let mut grad_w = vec![0.0; f * c];
    let mut grad_b = vec![0.0; c];
    for i in 0..batch.n {
        let x = batch.feature_row(i);
        let scores = raw_distances(weights, biases, c, x);
        for (k, &y) in batch.sign_row(i).iter().enumerate() {
            if y * scores[k] < 1.0 {
                for (j, &xj) in x.iter().enumerate() {
                    grad_w[j * c + k] -= y * xj;
                }
                grad_b[k] += y;
            }
        }
    }
    let scale = 1.0 / batch.n as f64;
    for g in grad_w.iter_mut() {
        *g *= scale;
    }
    for g in grad_b.iter_mut() {
        *g *= scale;
    }
    for (g, w) in grad_w.iter_mut().zip(weights) {
        *g += 2.0 * lambda * w;
    }
    (grad_w, grad_b)
}

/// Mean one-vs-all hinge loss of the gate over the batch plus
/// `lambda * |w|^2`. Always finite and >= 0; exactly 0 iff every sample's
/// every margin reaches 1 and the penalty vanishes.
pub fn hinge_objective(gate: &DGate, batch: &SignedBatch, lambda: f64) -> Result<f64> {
    check_gate_batch(gate, batch)?;
    Ok(hinge_objective_raw(
        &gate.weights,
        &gate.biases,
        gate.class_count,
        batch,
        lambda,
    ))
}

/// Batch-averaged subgradient of [`hinge_objective`]: per active margin
/// (`y * yhat < 1`) the sample contributes `-y*x` to its class column of
/// `grad_w` and `+y` to `grad_b`; the penalty adds `2*lambda*w` (bias
/// unregularized).
pub fn hinge_subgradient(
    gate: &DGate,
    batch: &SignedBatch,
    lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_gate_batch(gate, batch)?;
    Ok(hinge_subgradient_raw(
        &gate.weights,
        &gate.biases,
        gate.feature_dim,
        gate.class_count,
        batch,
        lambda,
    ))
}

fn check_gate_batch(gate: &DGate, batch: &SignedBatch) -> Result<()> {
    if batch.f != gate.feature_dim || batch.c != gate.class_count {
        return Err(Error::Dimension(format!(
            "batch is {}x{}, gate is {}x{}",
            batch.f, batch.c, gate.feature_dim, gate.class_count
        )));
    }
    Ok(())
}

fn check_training_inputs(
    features: &[f64],
    labels: &[usize],
    class_count: usize,
    cfg: &HingeTrainConfig,
) -> Result<usize> {
    cfg.validate()?;
    if labels.is_empty() {
        return Err(Error::InvalidInput("training set is empty".into()));
    }
    if features.len() % labels.len() != 0 {
        return Err(Error::Dimension(format!(
            "feature buffer of {} entries is not a multiple of {} samples",
            features.len(),
            labels.len()
        )));
    }
    let f = features.len() / labels.len();
    if f == 0 {
        return Err(Error::InvalidInput("feature_dim must be >= 1".into()));
    }
    if labels.len() < class_count {
        return Err(Error::InvalidInput(format!(
            "need at least {class_count} samples to train a {class_count}-class gate, got {}",
            labels.len()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= class_count) {
        return Err(Error::InvalidInput(format!(
            "label {bad} out of range for class_count {class_count}"
        )));
    }
    if features.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("features contain a non-finite value".into()));
    }
    Ok(f)
}

/// Trains a hinge gate by mini-batch subgradient descent from zero initial
/// weights (the objective is convex, so the start point only affects speed).
/// Deterministic per seed; the returned gate has threshold 0 until
/// calibration assigns one.
pub fn train_gate_hinge(
    features: &[f64],
    labels: &[usize],
    class_count: usize,
    cfg: &HingeTrainConfig,
) -> Result<DGate> {
    let f = check_training_inputs(features, labels, class_count, cfg)?;
    let n = labels.len();
    let c = class_count;
    let signs = one_vs_all_signs(labels, c)?;

    let mut weights = vec![0.0; f * c];
    let mut biases = vec![0.0; c];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut indices: Vec<usize> = (0..n).collect();
    let mut batch_features = Vec::new();
    let mut batch_signs = Vec::new();

    for epoch in 0..cfg.epochs {
        indices.shuffle(&mut rng);
        for chunk in indices.chunks(cfg.batch_size) {
            batch_features.clear();
            batch_signs.clear();
            for &i in chunk {
                batch_features.extend_from_slice(&features[i * f..(i + 1) * f]);
                batch_signs.extend_from_slice(&signs[i * c..(i + 1) * c]);
            }
            let batch = SignedBatch::new(&batch_features, &batch_signs, f, c)?;
            let (gw, gb) = hinge_subgradient_raw(&weights, &biases, f, c, &batch, cfg.lambda);
            for (w, g) in weights.iter_mut().zip(&gw) {
                *w -= cfg.learning_rate * g;
            }
            for (b, g) in biases.iter_mut().zip(&gb) {
                *b -= cfg.learning_rate * g;
            }
        }
        let full = SignedBatch::new(features, &signs, f, c)?;
        let objective = hinge_objective_raw(&weights, &biases, c, &full, cfg.lambda);
        if !objective.is_finite() {
            return Err(Error::Numerical(format!(
                "hinge objective became non-finite at epoch {epoch}; reduce learning_rate"
            )));
        }
    }

    for v in weights.iter_mut().chain(biases.iter_mut()) {
        *v = quantize_sig9(*v);
    }
    DGate::new(weights, biases, f, c, 0.0, GateLoss::Hinge)
}

/// Trains the same-shaped linear gate with softmax cross-entropy (the
/// baseline the hinge gates are compared against). Shares
/// [`HingeTrainConfig`], including the squared-norm penalty on `w`.
pub fn train_gate_crossentropy(
    features: &[f64],
    labels: &[usize],
    class_count: usize,
    cfg: &HingeTrainConfig,
) -> Result<DGate> {
    let f = check_training_inputs(features, labels, class_count, cfg)?;
    let n = labels.len();
    let c = class_count;

    let mut weights = vec![0.0; f * c];
    let mut biases = vec![0.0; c];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut indices: Vec<usize> = (0..n).collect();

    for epoch in 0..cfg.epochs {
        indices.shuffle(&mut rng);
        for chunk in indices.chunks(cfg.batch_size) {
            let scale = 1.0 / chunk.len() as f64;
            let mut grad_w = vec![0.0; f * c];
            let mut grad_b = vec![0.0; c];
            for &i in chunk {
                let x = &features[i * f..(i + 1) * f];
                let scores = raw_distances(&weights, &biases, c, x);
                let probs = softmax(&scores);
                for k in 0..c {
                    let g = scale * (probs[k] - if labels[i] == k { 1.0 } else { 0.0 });
                    for (j, &xj) in x.iter().enumerate() {
                        grad_w[j * c + k] += g * xj;
                    }
                    grad_b[k] -= g;
                }
            }
            for (g, w) in grad_w.iter_mut().zip(&weights) {
                *g += 2.0 * cfg.lambda * w;
            }
            for (w, g) in weights.iter_mut().zip(&grad_w) {
                *w -= cfg.learning_rate * g;
            }
            for (b, g) in biases.iter_mut().zip(&grad_b) {
                *b -= cfg.learning_rate * g;
            }
        }
        let mut loss = 0.0;
        for i in 0..n {
            let scores = raw_distances(&weights, &biases, c, &features[i * f..(i + 1) * f]);
            loss += log_sum_exp(&scores) - scores[labels[i]];
        }
        loss = loss / n as f64 + cfg.lambda * weights.iter().map(|w| w * w).sum::<f64>();
        if !loss.is_finite() {
            return Err(Error::Numerical(format!(
                "cross-entropy objective became non-finite at epoch {epoch}; reduce learning_rate"
            )));
        }
    }

    for v in weights.iter_mut().chain(biases.iter_mut()) {
        *v = quantize_sig9(*v);
    }
    DGate::new(weights, biases, f, c, 0.0, GateLoss::CrossEntropy)
}

/// Fraction of samples whose argmax gate score matches the label.
pub fn gate_accuracy(gate: &DGate, features: &[f64], labels: &[usize]) -> Result<f64> {
    let f = gate.feature_dim;
    if features.len() != labels.len() * f {
        return Err(Error::Dimension(format!(
            "feature buffer has {} entries for {} samples of dim {f}",
            features.len(),
            labels.len()
        )));
    }
    let mut correct = 0usize;
    for (i, &label) in labels.iter().enumerate() {
        let d = gate.distances(&features[i * f..(i + 1) * f])?;
        if argmax(&d) == label {
            correct += 1;
        }
    }
    Ok(correct as f64 / labels.len() as f64)
}
