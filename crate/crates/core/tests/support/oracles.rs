//! Independent reference implementations shared by the integration tests
//! and the acceptance suite.

#![allow(dead_code)]

use std::collections::HashMap;

use swmparc::nn::{
    l2_normalize_backward, l2_normalize_forward, maxpool_backward, maxpool_points, numeric_gradient,
    relative_error, relu_backward, relu_forward, softmax_cross_entropy, DenseLayer, Matrix, SeededRng,
};
use swmparc::losses::{scl_loss_unchecked, SclConfig};
use swmparc::{ArchDescriptor, FeatureBatch, ModelBundle, Point3, Streamline};

pub const FD_STEP: f64 = 1e-6;

pub fn random_matrix(rows: usize, cols: usize, rng: &mut SeededRng) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.normal()).collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

fn weighted_sum(m: &Matrix, r: &Matrix) -> f64 {
    m.data().iter().zip(r.data()).map(|(a, b)| a * b).sum()
}

pub fn toy_arch(k: usize) -> ArchDescriptor {
    ArchDescriptor {
        n: 5,
        encoder_dims: vec![4, 6, 8],
        classifier_hidden: vec![7, 5],
        projector_dims: vec![6, 3],
        k,
        with_tnets: false,
    }
}

fn flatten(layers: &[DenseLayer]) -> Vec<f64> {
    layers
        .iter()
        .flat_map(|l| l.weights.data().iter().chain(&l.bias).copied())
        .collect()
}

fn unflatten(layers: &mut [DenseLayer], values: &[f64]) {
    let mut at = 0;
    for l in layers {
        let w = l.weights.data().len();
        l.weights.data_mut().copy_from_slice(&values[at..at + w]);
        at += w;
        let b = l.bias.len();
        l.bias.copy_from_slice(&values[at..at + b]);
        at += b;
    }
}

fn flatten_grads(grads: &[swmparc::nn::DenseGrads]) -> Vec<f64> {
    grads
        .iter()
        .flat_map(|g| g.weights.data().iter().chain(&g.bias).copied())
        .collect()
}

fn check<F: FnMut(&[f64]) -> f64>(f: F, x: &[f64], analytic: &[f64]) -> f64 {
    relative_error(analytic, &numeric_gradient(f, x, FD_STEP))
}

/// A batch of random streamlines with coordinates in a ±20 mm box.
pub fn random_streamlines(count: usize, rng: &mut SeededRng) -> Vec<Streamline> {
    (0..count)
        .map(|_| {
            let len = 2 + rng.below(40);
            let pts = (0..len)
                .map(|_| {
                    Point3::new(
                        rng.uniform_in(-20.0, 20.0),
                        rng.uniform_in(-20.0, 20.0),
                        rng.uniform_in(-20.0, 20.0),
                    )
                })
                .collect();
            Streamline::new(pts).unwrap()
        })
        .collect()
}

/// Maximum relative finite-difference error of every differentiable
/// operation for one seed.
pub fn gradient_suite(seed: u64) -> Vec<(&'static str, f64)> {
    let mut rng = SeededRng::new(seed);
    let mut out = Vec::new();

    // dense: L = Σ (xW + b) ⊙ R
    {
        let layer = DenseLayer::init(4, 3, &mut rng);
        let x = random_matrix(5, 4, &mut rng);
        let r = random_matrix(5, 3, &mut rng);
        let (gx, gp) = layer.backward(&x, &r).unwrap();
        let e_x = check(
            |v| weighted_sum(&layer.forward(&Matrix::from_vec(5, 4, v.to_vec()).unwrap()).unwrap(), &r),
            x.data(),
            gx.data(),
        );
        let params = flatten(std::slice::from_ref(&layer));
        let e_p = check(
            |v| {
                let mut l = layer.clone();
                unflatten(std::slice::from_mut(&mut l), v);
                weighted_sum(&l.forward(&x).unwrap(), &r)
            },
            &params,
            &flatten_grads(std::slice::from_ref(&gp)),
        );
        out.push(("dense", e_x.max(e_p)));
    }

    // relu, inputs kept away from the kink
    {
        let data = (0..24)
            .map(|_| {
                let v = rng.normal();
                v.signum() * (0.1 + v.abs())
            })
            .collect();
        let x = Matrix::from_vec(4, 6, data).unwrap();
        let r = random_matrix(4, 6, &mut rng);
        let y = relu_forward(&x);
        let gx = relu_backward(&y, &r).unwrap();
        let e = check(
            |v| weighted_sum(&relu_forward(&Matrix::from_vec(4, 6, v.to_vec()).unwrap()), &r),
            x.data(),
            gx.data(),
        );
        out.push(("relu", e));
    }

    // max-pool over points
    {
        let x = random_matrix(7, 5, &mut rng);
        let r: Vec<f64> = (0..5).map(|_| rng.normal()).collect();
        let (_, arg) = maxpool_points(&x).unwrap();
        let gx = maxpool_backward(&r, &arg, 7).unwrap();
        let e = check(
            |v| {
                let (p, _) = maxpool_points(&Matrix::from_vec(7, 5, v.to_vec()).unwrap()).unwrap();
                p.iter().zip(&r).map(|(a, b)| a * b).sum()
            },
            x.data(),
            gx.data(),
        );
        out.push(("maxpool", e));
    }

    // row L2 normalization
    {
        let x = random_matrix(4, 5, &mut rng);
        let r = random_matrix(4, 5, &mut rng);
        let (y, norms) = l2_normalize_forward(&x).unwrap();
        let gx = l2_normalize_backward(&y, &norms, &r).unwrap();
        let e = check(
            |v| weighted_sum(&l2_normalize_forward(&Matrix::from_vec(4, 5, v.to_vec()).unwrap()).unwrap().0, &r),
            x.data(),
            gx.data(),
        );
        out.push(("l2-normalize", e));
    }

    // softmax cross-entropy
    {
        let x = random_matrix(6, 4, &mut rng);
        let labels: Vec<usize> = (0..6).map(|_| rng.below(4)).collect();
        let (_, gx) = softmax_cross_entropy(&x, &labels).unwrap();
        let e = check(
            |v| softmax_cross_entropy(&Matrix::from_vec(6, 4, v.to_vec()).unwrap(), &labels).unwrap().0,
            x.data(),
            gx.data(),
        );
        out.push(("cross-entropy", e));
    }

    // supervised contrastive loss on unit rows
    {
        let (z, _) = l2_normalize_forward(&random_matrix(8, 4, &mut rng)).unwrap();
        let labels: Vec<usize> = (0..8).map(|i| i % 3).collect();
        let cfg = SclConfig::default();
        let (_, gz) = scl_loss_unchecked(&z, &labels, &cfg).unwrap();
        let e = check(
            |v| scl_loss_unchecked(&Matrix::from_vec(8, 4, v.to_vec()).unwrap(), &labels, &cfg).unwrap().0,
            z.data(),
            gz.data(),
        );
        out.push(("scl", e));
    }

    // Zero initial biases put exact zeros in front of ReLUs (a point whose
    // hidden activations all vanish), where the function has a kink; random
    // biases keep the check away from those points.
    let mut model = ModelBundle::init(toy_arch(3), seed).unwrap();
    for l in model.encoder.iter_mut().chain(&mut model.projector).chain(&mut model.classifier) {
        for b in &mut l.bias {
            *b = 0.1 * rng.normal();
        }
    }
    let mut pts = Vec::new();
    for _ in 0..4 * model.arch.n {
        pts.extend([rng.normal(), rng.normal(), rng.normal()]);
    }
    let batch = FeatureBatch::new(model.arch.n, Matrix::from_vec(4 * model.arch.n, 3, pts).unwrap()).unwrap();

    // encoder stack: L = Σ g ⊙ R
    {
        let (g, cache) = model.encode_with_cache(&batch).unwrap();
        let r = random_matrix(g.rows(), g.cols(), &mut rng);
        let grads = model.encoder_backward(&cache, &r).unwrap();
        let e = check(
            |v| {
                let mut m = model.clone();
                unflatten(&mut m.encoder, v);
                weighted_sum(&m.encode(&batch).unwrap(), &r)
            },
            &flatten(&model.encoder),
            &flatten_grads(&grads),
        );
        out.push(("encoder", e));
    }

    let g = model.encode(&batch).unwrap();

    // projector stack with normalization: L = Σ z ⊙ R
    {
        let (z, cache) = model.project_with_cache(&g).unwrap();
        let r = random_matrix(z.rows(), z.cols(), &mut rng);
        let (dg, grads) = model.projector_backward(&cache, &r).unwrap();
        let e_p = check(
            |v| {
                let mut m = model.clone();
                unflatten(&mut m.projector, v);
                weighted_sum(&m.project(&g).unwrap(), &r)
            },
            &flatten(&model.projector),
            &flatten_grads(&grads),
        );
        let e_g = check(
            |v| weighted_sum(&model.project(&Matrix::from_vec(g.rows(), g.cols(), v.to_vec()).unwrap()).unwrap(), &r),
            g.data(),
            dg.data(),
        );
        out.push(("projector", e_p.max(e_g)));
    }

    // classifier stack with cross-entropy
    {
        let labels: Vec<usize> = (0..g.rows()).map(|_| rng.below(3)).collect();
        let (logits, cache) = model.classify_with_cache(&g).unwrap();
        let (_, dl) = softmax_cross_entropy(&logits, &labels).unwrap();
        let (dg, grads) = model.classifier_backward(&cache, dl).unwrap();
        let loss = |m: &ModelBundle, g: &Matrix| softmax_cross_entropy(&m.classify(g).unwrap(), &labels).unwrap().0;
        let e_p = check(
            |v| {
                let mut m = model.clone();
                unflatten(&mut m.classifier, v);
                loss(&m, &g)
            },
            &flatten(&model.classifier),
            &flatten_grads(&grads),
        );
        let e_g = check(
            |v| loss(&model, &Matrix::from_vec(g.rows(), g.cols(), v.to_vec()).unwrap()),
            g.data(),
            dg.data(),
        );
        out.push(("classifier", e_p.max(e_g)));
    }
    out
}

/// The contrastive loss evaluated term by term, straight from its definition.
pub fn nested_loop_scl(z: &Matrix, labels: &[usize], tau: f64) -> f64 {
    let m = z.rows();
    let dot = |i: usize, j: usize| -> f64 { z.row(i).iter().zip(z.row(j)).map(|(a, b)| a * b).sum() };
    let mut total = 0.0;
    for i in 0..m {
        let positives: Vec<usize> = (0..m).filter(|&p| p != i && labels[p] == labels[i]).collect();
        if positives.is_empty() {
            continue;
        }
        let mut denom = 0.0;
        for a in 0..m {
            if a != i {
                denom += (dot(i, a) / tau).exp();
            }
        }
        let mut inner = 0.0;
        for &p in &positives {
            inner += ((dot(i, p) / tau).exp() / denom).ln();
        }
        total += -inner / positives.len() as f64;
    }
    total
}

pub fn brute_accuracy(truth: &[usize], pred: &[usize]) -> f64 {
    let mut hits = 0;
    for i in 0..truth.len() {
        if truth[i] == pred[i] {
            hits += 1;
        }
    }
    hits as f64 / truth.len() as f64
}

/// Per-class F1 (None for classes absent from both truth and prediction),
/// their mean and population standard deviation.
pub fn brute_f1(truth: &[usize], pred: &[usize], k: usize) -> (Vec<Option<f64>>, f64, f64) {
    let mut per_class = Vec::with_capacity(k);
    for c in 0..k {
        let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
        for (&t, &p) in truth.iter().zip(pred) {
            match (t == c, p == c) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fn_ += 1,
                _ => {}
            }
        }
        per_class.push(if tp + fp + fn_ == 0 {
            None
        } else {
            Some(2.0 * tp as f64 / (2 * tp + fp + fn_) as f64)
        });
    }
    let present: Vec<f64> = per_class.iter().flatten().copied().collect();
    let mean = present.iter().sum::<f64>() / present.len() as f64;
    let var = present.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / present.len() as f64;
    (per_class, mean, var.sqrt())
}

pub fn brute_cir(pred: &[usize], expected: &[usize], threshold: usize) -> f64 {
    let mut detected = 0;
    for &c in expected {
        if pred.iter().filter(|&&p| p == c).count() >= threshold {
            detected += 1;
        }
    }
    detected as f64 / expected.len() as f64
}

/// Accuracy of a nearest-class-mean rule on flattened resampled
/// coordinates, with each streamline compared in both point orders.
pub fn nearest_centroid_accuracy(
    train: &swmparc::StreamlineSet,
    test: &swmparc::StreamlineSet,
    n: usize,
    skip: &[usize],
) -> f64 {
    let feats = |s: &Streamline| -> Vec<f64> { s.resample(n).unwrap().points().iter().flat_map(|p| p.to_array()).collect() };
    let labels = train.labels.as_ref().unwrap();
    // orient every training sample like the first one of its class
    let mut sums: HashMap<usize, (Vec<f64>, usize)> = HashMap::new();
    for (s, &l) in train.streamlines.iter().zip(labels) {
        let f = feats(s);
        let entry = sums.entry(l).or_insert_with(|| (vec![0.0; f.len()], 0));
        let reference: Vec<f64> = if entry.1 == 0 { f.clone() } else { entry.0.iter().map(|v| v / entry.1 as f64).collect() };
        let r = feats(&s.reversed());
        let chosen = if sq_dist(&f, &reference) <= sq_dist(&r, &reference) { f } else { r };
        for (a, b) in entry.0.iter_mut().zip(&chosen) {
            *a += b;
        }
        entry.1 += 1;
    }
    let centroids: Vec<(usize, Vec<f64>)> = sums
        .into_iter()
        .map(|(l, (sum, c))| (l, sum.into_iter().map(|v| v / c as f64).collect()))
        .collect();
    let (mut hits, mut total) = (0, 0);
    for (s, &l) in test.streamlines.iter().zip(test.labels.as_ref().unwrap()) {
        if skip.contains(&l) {
            continue;
        }
        let f = feats(s);
        let r = feats(&s.reversed());
        let best = centroids
            .iter()
            .map(|(c, mu)| (*c, sq_dist(&f, mu).min(sq_dist(&r, mu))))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap()
            .0;
        total += 1;
        if best == l {
            hits += 1;
        }
    }
    hits as f64 / total as f64
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}
