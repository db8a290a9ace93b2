use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use swmparc::geometry::{apply_affine, format_labels, read_slp};
use swmparc::metrics::MetricsReport;
use swmparc::model::{count_flops, format_millions, load_checkpoint, TNET_LAYOUT};
use swmparc::synthdata::{gen_dataset, DatasetFiles, GenConfig};
use swmparc::train::{load_labeled, run_pipeline, Phase, TrainConfig, CHECKPOINT_FILE, TIMING_NOTE};
use swmparc::{AffineTransform, ModelBundle, StreamlineSet};

use crate::config::FileConfig;
use crate::{EvalArgs, Failure, FlopsArgs, GenArgs, ParcellateArgs, PhaseArg, TrainArgs};

fn require_file(path: &Path, what: &str) -> Result<(), Failure> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure::usage(format!("{what} not found: {}", path.display())))
    }
}

fn prepare_dir(path: &Path) -> Result<(), Failure> {
    fs::create_dir_all(path)
        .map_err(|e| Failure::usage(format!("cannot create output directory {}: {e}", path.display())))
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), Failure> {
    let json = serde_json::to_string_pretty(value).map_err(swmparc::Error::from)?;
    fs::write(path, json + "\n").map_err(|e| swmparc::Error::io(path, e))?;
    Ok(())
}

pub fn gen_data(args: &GenArgs, file: &FileConfig) -> Result<(), Failure> {
    let mut cfg = file.gen.clone().unwrap_or_default();
    let GenConfig {
        seed,
        clusters,
        streamlines_per_cluster,
        outlier_fraction,
        outlier_scale,
        confusable_pairs,
        point_noise,
        endpoint_jitter,
        train_fraction,
        val_fraction,
        test_fraction,
        ..
    } = &mut cfg;
    macro_rules! set {
        ($($field:ident = $flag:expr),* $(,)?) => {$(if let Some(v) = $flag { *$field = v; })*};
    }
    set!(
        seed = args.seed,
        clusters = args.clusters,
        streamlines_per_cluster = args.per_cluster,
        outlier_fraction = args.outlier_fraction,
        outlier_scale = args.outlier_scale,
        confusable_pairs = args.confusable_pairs,
        point_noise = args.noise,
        endpoint_jitter = args.endpoint_jitter,
        train_fraction = args.train_fraction,
        val_fraction = args.val_fraction,
        test_fraction = args.test_fraction,
    );
    cfg.validate()?;
    prepare_dir(&args.out)?;
    let (_, manifest) = gen_dataset(&cfg, &args.out)?;
    log::info!(
        "wrote {} / {} / {} streamlines",
        manifest.train.count,
        manifest.val.count,
        manifest.test.count
    );
    println!("{}", DatasetFiles::new(&args.out).manifest().display());
    Ok(())
}

struct TrainInputs {
    train: (PathBuf, PathBuf),
    val: Option<(PathBuf, PathBuf)>,
}

fn train_inputs(args: &TrainArgs) -> Result<TrainInputs, Failure> {
    let inputs = match (&args.data, &args.train_slp, &args.train_labels) {
        (Some(dir), None, None) => {
            let files = DatasetFiles::new(dir);
            let val = (files.slp("val"), files.labels("val"));
            let has_val = val.0.is_file() && val.1.is_file();
            TrainInputs {
                train: (files.slp("train"), files.labels("train")),
                val: has_val.then_some(val),
            }
        }
        (None, Some(slp), Some(labels)) => TrainInputs {
            train: (slp.clone(), labels.clone()),
            val: args.val_slp.clone().zip(args.val_labels.clone()),
        },
        _ => return Err(Failure::usage("give either --data DIR or --train-slp and --train-labels")),
    };
    require_file(&inputs.train.0, "training streamlines")?;
    require_file(&inputs.train.1, "training labels")?;
    if let Some((slp, labels)) = &inputs.val {
        require_file(slp, "validation streamlines")?;
        require_file(labels, "validation labels")?;
    }
    Ok(inputs)
}

fn train_config(args: &TrainArgs, file: &FileConfig) -> Result<TrainConfig, Failure> {
    let mut cfg = file.train.clone().unwrap_or_default();
    let TrainConfig {
        scl_lr,
        scl_batch,
        cls_lr,
        cls_batch,
        scl_epochs,
        cls_epochs,
        temperature,
        seed,
        val_fraction,
        shuffle,
    } = &mut cfg;
    macro_rules! set {
        ($($field:ident = $flag:expr),* $(,)?) => {$(if let Some(v) = $flag { *$field = v; })*};
    }
    set!(
        scl_lr = args.lr_scl,
        scl_batch = args.batch_scl,
        cls_lr = args.lr_cls,
        cls_batch = args.batch_cls,
        scl_epochs = args.epochs_scl,
        cls_epochs = args.epochs_cls,
        temperature = args.temperature,
        seed = args.seed,
        val_fraction = args.val_fraction,
    );
    if args.no_shuffle {
        *shuffle = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn max_label(sets: &[&StreamlineSet]) -> usize {
    sets.iter()
        .filter_map(|s| s.labels.as_ref())
        .flatten()
        .copied()
        .max()
        .unwrap_or(0)
}

pub fn train(args: &TrainArgs, file: &FileConfig) -> Result<(), Failure> {
    let cfg = train_config(args, file)?;
    let inputs = train_inputs(args)?;
    let phase = match args.phase {
        PhaseArg::Scl => Phase::Scl,
        PhaseArg::Cls => Phase::Cls,
        PhaseArg::Both => Phase::Both,
    };
    let checkpoint = args.checkpoint.clone().unwrap_or_else(|| args.out.join(CHECKPOINT_FILE));
    if phase == Phase::Cls {
        require_file(&checkpoint, "phase-1 checkpoint")?;
    }
    prepare_dir(&args.out)?;

    let stage = |e| swmparc::Error::stage("load", e);
    let train = load_labeled(&inputs.train.0, &inputs.train.1).map_err(stage)?;
    let val = match &inputs.val {
        Some((slp, labels)) => Some(load_labeled(slp, labels).map_err(stage)?),
        None => None,
    };

    let start = if phase == Phase::Cls {
        let model = load_checkpoint(&checkpoint)?;
        if args.arch_k.is_some_and(|k| k != model.arch.k) || args.arch_n.is_some_and(|n| n != model.arch.n) {
            return Err(Failure::usage("--arch-k/--arch-n disagree with the checkpoint"));
        }
        model
    } else {
        let mut sets = vec![&train];
        sets.extend(val.as_ref());
        let inferred = (max_label(&sets) + 1).max(2);
        let arch = file.arch.resolve(args.arch_n, args.arch_k, inferred);
        ModelBundle::init(arch, cfg.seed)?
    };
    let (_, report) = run_pipeline(&train, val.as_ref(), start, phase, &cfg, Some(&args.out))?;
    if let Some(v) = &report.validation {
        log::info!("validation accuracy {:.4}, macro F1 {:.4}", v.accuracy, v.macro_f1_mean);
    }
    println!("{}", args.out.join(swmparc::train::REPORT_FILE).display());
    Ok(())
}

fn parse_ids(text: &str) -> Result<Vec<usize>, Failure> {
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse()
                .map_err(|_| Failure::usage(format!("bad cluster id {t:?} in expected clusters")))
        })
        .collect()
}

pub fn eval(args: &EvalArgs) -> Result<(), Failure> {
    require_file(&args.checkpoint, "checkpoint")?;
    require_file(&args.slp, "streamlines")?;
    require_file(&args.labels, "labels")?;
    let expected = match &args.expected_clusters {
        Some(p) => {
            require_file(p, "expected clusters")?;
            let text = fs::read_to_string(p).map_err(|e| swmparc::Error::io(p, e))?;
            Some(parse_ids(&text)?)
        }
        None => None,
    };
    let model = load_checkpoint(&args.checkpoint)?;
    let set = load_labeled(&args.slp, &args.labels)?;
    set.validate_labels(model.arch.k)?;
    if set.is_empty() {
        return Err(swmparc::Error::Empty("evaluation set".into()).into());
    }
    let pred = model.predict(&set)?;
    let mut report = MetricsReport::compute(set.labels_or_err()?, &pred, model.arch.k)?;
    if let Some(expected) = expected {
        report = report.with_cir(&pred, &expected, args.cir_threshold)?;
    }
    if let Some(out) = &args.out {
        write_json(&report, out)?;
    }
    println!("{}", serde_json::to_string_pretty(&report).map_err(swmparc::Error::from)?);
    Ok(())
}

#[derive(Debug, Serialize)]
struct ParcellationSummary {
    streamlines: usize,
    /// Predicted streamlines per class, indexed by label.
    per_class_counts: Vec<usize>,
    affine_applied: bool,
    threads: usize,
    /// Resampling plus forward passes.
    inference_seconds: f64,
    /// Including file reading and writing.
    total_seconds: f64,
    streamlines_per_second: f64,
    timing_note: &'static str,
}

pub fn parcellate(args: &ParcellateArgs) -> Result<(), Failure> {
    let start = Instant::now();
    require_file(&args.checkpoint, "checkpoint")?;
    require_file(&args.slp, "streamlines")?;
    if let Some(p) = &args.affine {
        require_file(p, "affine")?;
    }
    if args.threads == 0 {
        return Err(Failure::usage("--threads must be >= 1"));
    }
    prepare_dir(&args.out)?;
    let affine = match &args.affine {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| swmparc::Error::io(p, e))?;
            Some(AffineTransform::parse(&text)?)
        }
        None => None,
    };
    let model = load_checkpoint(&args.checkpoint)?;
    let mut set = read_slp(&args.slp)?;
    if let Some(t) = &affine {
        set = apply_affine(&set, t);
    }

    let t = Instant::now();
    let labels = model.predict_parallel(&set.streamlines, args.threads)?;
    let inference_seconds = t.elapsed().as_secs_f64();

    let csv = args.out.join("labels.csv");
    fs::write(&csv, format_labels(&labels)).map_err(|e| swmparc::Error::io(&csv, e))?;
    let mut per_class_counts = vec![0; model.arch.k];
    for &l in &labels {
        per_class_counts[l] += 1;
    }
    let summary = ParcellationSummary {
        streamlines: labels.len(),
        per_class_counts,
        affine_applied: affine.is_some(),
        threads: args.threads,
        inference_seconds,
        total_seconds: start.elapsed().as_secs_f64(),
        streamlines_per_second: if inference_seconds > 0.0 {
            labels.len() as f64 / inference_seconds
        } else {
            0.0
        },
        timing_note: TIMING_NOTE,
    };
    write_json(&summary, &args.out.join("summary.json"))?;
    log::info!(
        "{} streamlines in {:.2} s ({:.0}/s)",
        summary.streamlines,
        inference_seconds,
        summary.streamlines_per_second
    );
    println!("{}", csv.display());
    Ok(())
}

pub fn flops(args: &FlopsArgs, file: &FileConfig) -> Result<(), Failure> {
    let mut arch = file.arch.resolve(args.arch_n, args.arch_k, 199);
    arch.validate()?;
    let macs = count_flops(&arch);
    println!("{macs} ({})", format_millions(macs));
    if args.with_tnets {
        arch.with_tnets = true;
        let with = count_flops(&arch);
        println!("with T-nets: {with} ({})", format_millions(with));
        println!("assumed layout: {TNET_LAYOUT}");
    }
    Ok(())
}
