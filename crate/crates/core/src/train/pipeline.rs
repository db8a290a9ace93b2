use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{evaluate, train_cls_phase, train_scl_phase, TrainConfig, SPLIT_STREAM};
use crate::error::{Error, Result};
use crate::geometry::{read_labels, read_slp, StreamlineSet};
use crate::metrics::MetricsReport;
use crate::model::{save_checkpoint, ArchDescriptor, FeatureBatch, ModelBundle};
use crate::nn::SeededRng;

pub const TIMING_NOTE: &str = "wall-clock seconds; excluded from reproducibility guarantees";

pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const REPORT_FILE: &str = "train_report.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Scl,
    Cls,
    #[default]
    Both,
}

impl Phase {
    pub fn runs_scl(self) -> bool {
        matches!(self, Phase::Scl | Phase::Both)
    }

    pub fn runs_cls(self) -> bool {
        matches!(self, Phase::Cls | Phase::Both)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseSeconds {
    pub resample: f64,
    pub scl: f64,
    pub cls: f64,
    pub evaluate: f64,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub phase: Phase,
    pub config: TrainConfig,
    pub arch: ArchDescriptor,
    pub train_samples: usize,
    pub val_samples: usize,
    /// Mean per-sample contrastive loss per epoch; empty when skipped.
    pub scl_loss: Vec<f64>,
    /// Mean cross-entropy per epoch; empty when skipped.
    pub cls_loss: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub val_accuracy: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub validation: Option<MetricsReport>,
    pub seconds: PhaseSeconds,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub checkpoint: Option<String>,
}

/// Read an SLP file and its label CSV.
pub fn load_labeled(slp: impl AsRef<Path>, labels: impl AsRef<Path>) -> Result<StreamlineSet> {
    let mut set = read_slp(slp)?;
    let l = read_labels(labels, Some(set.len()))?;
    set.labels = Some(l);
    Ok(set)
}

/// Indices `(kept, held_out)`, holding out `round(fraction · count)` of
/// every class. Both lists are ascending.
pub fn stratified_split(labels: &[usize], fraction: f64, rng: &mut SeededRng) -> (Vec<usize>, Vec<usize>) {
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut by_class = vec![Vec::new(); k];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    let mut held = Vec::new();
    for mut members in by_class {
        rng.shuffle(&mut members);
        let n = (members.len() as f64 * fraction).round() as usize;
        held.extend_from_slice(&members[..n.min(members.len())]);
    }
    held.sort_unstable();
    let mut is_held = vec![false; labels.len()];
    for &i in &held {
        is_held[i] = true;
    }
    let kept = (0..labels.len()).filter(|&i| !is_held[i]).collect();
    (kept, held)
}

fn subset(set: &StreamlineSet, idx: &[usize]) -> StreamlineSet {
    let labels = set.labels.as_ref().map(|l| idx.iter().map(|&i| l[i]).collect());
    StreamlineSet {
        streamlines: idx.iter().map(|&i| set.streamlines[i].clone()).collect(),
        labels,
    }
}

/// Resample, train the requested phases, evaluate on the validation data
/// and, with `out_dir`, write the checkpoint and JSON report.
///
/// Validation data is `val` when given, otherwise a stratified
/// `val_fraction` of `train`. `start` carries the initial (for `Cls`, the
/// pretrained) parameters.
pub fn run_pipeline(
    train: &StreamlineSet,
    val: Option<&StreamlineSet>,
    start: ModelBundle,
    phase: Phase,
    cfg: &TrainConfig,
    out_dir: Option<&Path>,
) -> Result<(ModelBundle, TrainReport)> {
    cfg.validate()?;
    let mut model = start;
    model.validate()?;
    let k = model.arch.k;
    let n = model.arch.n;
    train.validate_labels(k).map_err(|e| Error::stage("load", e))?;
    if let Some(v) = val {
        v.validate_labels(k).map_err(|e| Error::stage("load", e))?;
    }

    let (train_set, val_set) = match val {
        Some(v) => (train.clone(), (!v.is_empty()).then(|| v.clone())),
        None if cfg.val_fraction > 0.0 => {
            let mut rng = SeededRng::with_stream(cfg.seed, SPLIT_STREAM);
            let (kept, held) = stratified_split(train.labels_or_err()?, cfg.val_fraction, &mut rng);
            (subset(train, &kept), (!held.is_empty()).then(|| subset(train, &held)))
        }
        None => (train.clone(), None),
    };
    let train_labels = train_set.labels_or_err()?.to_vec();

    let mut seconds = PhaseSeconds {
        note: TIMING_NOTE.to_string(),
        ..PhaseSeconds::default()
    };
    let t = Instant::now();
    let features = FeatureBatch::from_set(&train_set, n).map_err(|e| Error::stage("resample", e))?;
    let val_features = val_set
        .as_ref()
        .map(|v| FeatureBatch::from_set(v, n))
        .transpose()
        .map_err(|e| Error::stage("resample", e))?;
    seconds.resample = t.elapsed().as_secs_f64();

    let mut scl_loss = Vec::new();
    if phase.runs_scl() {
        let r = train_scl_phase(&mut model, &features, &train_labels, cfg).map_err(|e| Error::stage("scl", e))?;
        seconds.scl = r.seconds;
        scl_loss = r.loss;
    }

    let mut cls_loss = Vec::new();
    let mut val_accuracy = None;
    if phase.runs_cls() {
        let cls = (|| {
            let g = model.encode(&features)?;
            let vg = val_features.as_ref().map(|f| model.encode(f)).transpose()?;
            let val_labels = val_set.as_ref().map(|v| v.labels_or_err()).transpose()?;
            let val_pair = vg.as_ref().zip(val_labels);
            train_cls_phase(&mut model, &g, &train_labels, val_pair, cfg)
        })()
        .map_err(|e| Error::stage("cls", e))?;
        seconds.cls = cls.seconds;
        cls_loss = cls.loss;
        val_accuracy = cls.val_accuracy;
    }

    let t = Instant::now();
    let validation = match (&val_set, phase.runs_cls()) {
        (Some(v), true) => Some(evaluate(&model, v).map_err(|e| Error::stage("evaluate", e))?),
        _ => None,
    };
    seconds.evaluate = t.elapsed().as_secs_f64();

    let mut report = TrainReport {
        phase,
        config: cfg.clone(),
        arch: model.arch.clone(),
        train_samples: train_set.len(),
        val_samples: val_set.as_ref().map_or(0, |v| v.len()),
        scl_loss,
        cls_loss,
        val_accuracy,
        validation,
        seconds,
        checkpoint: None,
    };
    if let Some(dir) = out_dir {
        persist(&model, &mut report, dir).map_err(|e| Error::stage("persist", e))?;
    }
    Ok((model, report))
}

fn persist(model: &ModelBundle, report: &mut TrainReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let ckpt: PathBuf = dir.join(CHECKPOINT_FILE);
    save_checkpoint(model, &ckpt)?;
    report.checkpoint = Some(ckpt.display().to_string());
    let path = dir.join(REPORT_FILE);
    let json = serde_json::to_string_pretty(report)?;
    fs::write(&path, json).map_err(|e| Error::io(&path, e))
}
