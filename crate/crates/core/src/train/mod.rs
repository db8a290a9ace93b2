//! Two-phase training: contrastive pretraining of encoder and projector,
//! then a classifier on top of the frozen encoder.

mod pipeline;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::StreamlineSet;
use crate::losses::{scl_loss, SclConfig};
use crate::metrics::MetricsReport;
use crate::model::{argmax_rows, grad_slices, params_mut, tensor_lens, FeatureBatch, ModelBundle};
use crate::nn::{softmax_cross_entropy, AdamConfig, AdamOptimizer, Matrix, SeededRng};

pub use pipeline::{
    load_labeled, run_pipeline, stratified_split, Phase, PhaseSeconds, TrainReport, CHECKPOINT_FILE, REPORT_FILE,
    TIMING_NOTE,
};

const SCL_STREAM: u64 = 1;
const CLS_STREAM: u64 = 2;
const SPLIT_STREAM: u64 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub scl_lr: f64,
    pub scl_batch: usize,
    pub cls_lr: f64,
    pub cls_batch: usize,
    pub scl_epochs: usize,
    pub cls_epochs: usize,
    pub temperature: f64,
    pub seed: u64,
    /// Share of the training set held out for validation when no separate
    /// validation set is given. Zero disables validation.
    pub val_fraction: f64,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            scl_lr: 0.01,
            scl_batch: 6144,
            cls_lr: 0.001,
            cls_batch: 1024,
            // 20 contrastive epochs keep the 20k-streamline desk run well
            // under ten minutes on one core
            scl_epochs: 20,
            cls_epochs: 50,
            temperature: 0.1,
            seed: 0,
            val_fraction: 0.1,
            shuffle: true,
        }
    }
}

impl TrainConfig {
    /// Learning rates may be zero, which freezes the phase.
    pub fn validate(&self) -> Result<()> {
        for (name, lr) in [("scl_lr", self.scl_lr), ("cls_lr", self.cls_lr)] {
            if !(lr >= 0.0 && lr.is_finite()) {
                return Err(Error::Config(format!("{name} must be finite and >= 0, got {lr}")));
            }
        }
        for (name, b) in [("scl_batch", self.scl_batch), ("cls_batch", self.cls_batch)] {
            if b < 2 {
                return Err(Error::Config(format!("{name} must be >= 2, got {b}")));
            }
        }
        for (name, e) in [("scl_epochs", self.scl_epochs), ("cls_epochs", self.cls_epochs)] {
            if e < 1 {
                return Err(Error::Config(format!("{name} must be >= 1")));
            }
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return Err(Error::Config(format!(
                "val_fraction must lie in [0, 1), got {}",
                self.val_fraction
            )));
        }
        self.scl().validate()
    }

    pub fn scl(&self) -> SclConfig {
        SclConfig {
            temperature: self.temperature,
        }
    }
}

/// Index batches for one epoch. Every index appears exactly once; with
/// `merge_singleton` a trailing batch of one is folded into the one before.
pub fn epoch_batches(len: usize, batch: usize, order: &[usize], merge_singleton: bool) -> Vec<Vec<usize>> {
    debug_assert_eq!(order.len(), len);
    let mut out: Vec<Vec<usize>> = order.chunks(batch.max(1)).map(<[usize]>::to_vec).collect();
    if merge_singleton && out.len() > 1 && out.last().is_some_and(|b| b.len() == 1) {
        let tail = out.pop().expect("non-empty");
        out.last_mut().expect("non-empty").extend(tail);
    }
    out
}

fn epoch_order(len: usize, shuffle: bool, rng: &mut SeededRng) -> Vec<usize> {
    let mut order: Vec<usize> = (0..len).collect();
    if shuffle {
        rng.shuffle(&mut order);
    }
    order
}

fn check_labels(labels: &[usize], len: usize, k: usize) -> Result<()> {
    if labels.len() != len {
        return Err(Error::LabelCountMismatch {
            expected: len,
            found: labels.len(),
        });
    }
    if let Some(&label) = labels.iter().find(|&&l| l >= k) {
        return Err(Error::LabelOutOfRange { label, k });
    }
    Ok(())
}

fn gather(labels: &[usize], idx: &[usize]) -> Vec<usize> {
    idx.iter().map(|&i| labels[i]).collect()
}

/// Per-epoch record of one training phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseReport {
    /// Mean per-sample loss of each epoch.
    pub loss: Vec<f64>,
    /// Validation accuracy after each epoch, when a validation set is given.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub val_accuracy: Option<Vec<f64>>,
    pub seconds: f64,
}

/// Contrastive phase: Adam on encoder and projector with the supervised
/// contrastive loss. The classifier is neither evaluated nor touched.
pub fn train_scl_phase(
    model: &mut ModelBundle,
    data: &FeatureBatch,
    labels: &[usize],
    cfg: &TrainConfig,
) -> Result<PhaseReport> {
    cfg.validate()?;
    check_labels(labels, data.len(), model.arch.k)?;
    let first = labels.first().copied();
    if first.is_none() || labels.iter().all(|&l| Some(l) == first) {
        return Err(Error::SingleClass);
    }
    let start = Instant::now();
    let scl = cfg.scl();
    let mut lens = tensor_lens(&model.encoder);
    lens.extend(tensor_lens(&model.projector));
    let mut opt = AdamOptimizer::new(&lens, AdamConfig::default());
    let mut rng = SeededRng::with_stream(cfg.seed, SCL_STREAM);
    let mut losses = Vec::with_capacity(cfg.scl_epochs);
    for epoch in 0..cfg.scl_epochs {
        let order = epoch_order(data.len(), cfg.shuffle, &mut rng);
        let mut total = 0.0;
        for idx in epoch_batches(data.len(), cfg.scl_batch, &order, true) {
            let batch = data.select(&idx);
            let batch_labels = gather(labels, &idx);
            let (g, enc_cache) = model.encode_with_cache(&batch)?;
            let (z, proj_cache) = model.project_with_cache(&g)?;
            let (loss, dz) = scl_loss(&z, &batch_labels, &scl)?;
            let (dg, proj_grads) = model.projector_backward(&proj_cache, &dz)?;
            let enc_grads = model.encoder_backward(&enc_cache, &dg)?;
            let mut grads = grad_slices(&enc_grads);
            grads.extend(grad_slices(&proj_grads));
            let mut params = params_mut(&mut model.encoder);
            params.extend(params_mut(&mut model.projector));
            opt.step(params, grads, cfg.scl_lr)?;
            total += loss;
        }
        let mean = total / data.len() as f64;
        log::info!("scl epoch {}/{}: loss {mean:.6}", epoch + 1, cfg.scl_epochs);
        losses.push(mean);
    }
    Ok(PhaseReport {
        loss: losses,
        val_accuracy: None,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Downstream phase on precomputed global features: Adam on the classifier
/// with cross-entropy. Encoder and projector are not modified.
pub fn train_cls_phase(
    model: &mut ModelBundle,
    g: &Matrix,
    labels: &[usize],
    val: Option<(&Matrix, &[usize])>,
    cfg: &TrainConfig,
) -> Result<PhaseReport> {
    cfg.validate()?;
    let k = model.arch.k;
    check_labels(labels, g.rows(), k)?;
    if let Some((vg, vl)) = val {
        check_labels(vl, vg.rows(), k)?;
    }
    if g.rows() == 0 {
        return Err(Error::Empty("training set".into()));
    }
    let start = Instant::now();
    let mut opt = AdamOptimizer::new(&tensor_lens(&model.classifier), AdamConfig::default());
    let mut rng = SeededRng::with_stream(cfg.seed, CLS_STREAM);
    let mut losses = Vec::with_capacity(cfg.cls_epochs);
    let mut val_acc = val.map(|_| Vec::with_capacity(cfg.cls_epochs));
    for epoch in 0..cfg.cls_epochs {
        let order = epoch_order(g.rows(), cfg.shuffle, &mut rng);
        let mut total = 0.0;
        for idx in epoch_batches(g.rows(), cfg.cls_batch, &order, false) {
            let gb = g.gather_rows(&idx);
            let batch_labels = gather(labels, &idx);
            let (logits, cache) = model.classify_with_cache(&gb)?;
            let (loss, dlogits) = softmax_cross_entropy(&logits, &batch_labels)?;
            let grads = model.classifier_param_grads(&cache, dlogits)?;
            opt.step(params_mut(&mut model.classifier), grad_slices(&grads), cfg.cls_lr)?;
            total += loss * idx.len() as f64;
        }
        let mean = total / g.rows() as f64;
        losses.push(mean);
        if let (Some(curve), Some((vg, vl))) = (val_acc.as_mut(), val) {
            let acc = accuracy_of(&argmax_rows(&model.classify(vg)?), vl);
            log::info!("cls epoch {}/{}: loss {mean:.6}, val acc {acc:.4}", epoch + 1, cfg.cls_epochs);
            curve.push(acc);
        } else {
            log::info!("cls epoch {}/{}: loss {mean:.6}", epoch + 1, cfg.cls_epochs);
        }
    }
    Ok(PhaseReport {
        loss: losses,
        val_accuracy: val_acc,
        seconds: start.elapsed().as_secs_f64(),
    })
}

fn accuracy_of(pred: &[usize], truth: &[usize]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    pred.iter().zip(truth).filter(|(p, t)| p == t).count() as f64 / truth.len() as f64
}

/// Baseline without contrastive pretraining: encoder and classifier trained
/// jointly with cross-entropy, using the downstream phase's rate, batch size
/// and epoch count. Only used to compare against the two-phase model.
pub fn train_end_to_end(
    model: &mut ModelBundle,
    data: &FeatureBatch,
    labels: &[usize],
    cfg: &TrainConfig,
) -> Result<PhaseReport> {
    cfg.validate()?;
    check_labels(labels, data.len(), model.arch.k)?;
    if data.is_empty() {
        return Err(Error::Empty("training set".into()));
    }
    let start = Instant::now();
    let mut lens = tensor_lens(&model.encoder);
    lens.extend(tensor_lens(&model.classifier));
    let mut opt = AdamOptimizer::new(&lens, AdamConfig::default());
    let mut rng = SeededRng::with_stream(cfg.seed, CLS_STREAM);
    let mut losses = Vec::with_capacity(cfg.cls_epochs);
    for epoch in 0..cfg.cls_epochs {
        let order = epoch_order(data.len(), cfg.shuffle, &mut rng);
        let mut total = 0.0;
        for idx in epoch_batches(data.len(), cfg.cls_batch, &order, false) {
            let batch = data.select(&idx);
            let batch_labels = gather(labels, &idx);
            let (g, enc_cache) = model.encode_with_cache(&batch)?;
            let (logits, cls_cache) = model.classify_with_cache(&g)?;
            let (loss, dlogits) = softmax_cross_entropy(&logits, &batch_labels)?;
            let (dg, cls_grads) = model.classifier_backward(&cls_cache, dlogits)?;
            let enc_grads = model.encoder_backward(&enc_cache, &dg)?;
            let mut grads = grad_slices(&enc_grads);
            grads.extend(grad_slices(&cls_grads));
            let mut params = params_mut(&mut model.encoder);
            params.extend(params_mut(&mut model.classifier));
            opt.step(params, grads, cfg.cls_lr)?;
            total += loss * idx.len() as f64;
        }
        let mean = total / data.len() as f64;
        log::info!("end-to-end epoch {}/{}: loss {mean:.6}", epoch + 1, cfg.cls_epochs);
        losses.push(mean);
    }
    Ok(PhaseReport {
        loss: losses,
        val_accuracy: None,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Metrics of `model` on a labeled set.
pub fn evaluate(model: &ModelBundle, set: &StreamlineSet) -> Result<MetricsReport> {
    if set.is_empty() {
        return Err(Error::Empty("evaluation set".into()));
    }
    let truth = set.labels_or_err()?;
    check_labels(truth, set.len(), model.arch.k)?;
    let pred = model.predict(set)?;
    MetricsReport::compute(truth, &pred, model.arch.k)
}
