//! Encoder, projection head and classifier.
//!
//! The encoder applies one shared dense+ReLU stack to every point of a
//! resampled streamline and max-pools the per-point features into a global
//! feature `g`. There are no input or feature transformation networks, so `g`
//! keeps the absolute pose of the streamline while being independent of the
//! order of its points.

mod checkpoint;
mod flops;

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use flops::{count_flops, format_millions, TNET_LAYOUT};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Streamline, StreamlineSet};
use crate::nn::{
    l2_normalize_backward, l2_normalize_forward, maxpool_groups, relu_in_place, DenseGrads,
    DenseLayer, Matrix, SeededRng,
};

/// Streamlines pushed through the wide last encoder layer at a time.
const ENCODE_CHUNK: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchDescriptor {
    /// Points per resampled streamline.
    pub n: usize,
    /// Output widths of the shared per-point MLP.
    pub encoder_dims: Vec<usize>,
    /// Hidden widths of the classifier; its output width is `k`.
    pub classifier_hidden: Vec<usize>,
    /// Projection head widths; the last entry is the contrastive feature size.
    pub projector_dims: Vec<usize>,
    /// Number of classes.
    pub k: usize,
    /// Only consulted by [`count_flops`].
    #[serde(default)]
    pub with_tnets: bool,
}

impl Default for ArchDescriptor {
    fn default() -> Self {
        Self {
            n: 15,
            encoder_dims: vec![64, 128, 1024],
            classifier_hidden: vec![512, 256],
            projector_dims: vec![1024, 128],
            k: 199,
            with_tnets: false,
        }
    }
}

impl ArchDescriptor {
    pub fn with_k(k: usize) -> Self {
        Self {
            k,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dims = self
            .encoder_dims
            .iter()
            .chain(&self.classifier_hidden)
            .chain(&self.projector_dims);
        if self.n == 0 || dims.clone().any(|&d| d == 0) {
            return Err(Error::Config("architecture dimensions must be >= 1".into()));
        }
        if self.encoder_dims.is_empty() || self.projector_dims.is_empty() {
            return Err(Error::Config("encoder and projector need at least one layer".into()));
        }
        if self.k < 2 {
            return Err(Error::Config(format!("need at least 2 classes, got {}", self.k)));
        }
        Ok(())
    }

    /// Width of the global feature `g`.
    pub fn global_dim(&self) -> usize {
        *self.encoder_dims.last().expect("validated")
    }

    pub fn contrastive_dim(&self) -> usize {
        *self.projector_dims.last().expect("validated")
    }

    pub fn encoder_shapes(&self) -> Vec<(usize, usize)> {
        chain_shapes(3, &self.encoder_dims)
    }

    pub fn projector_shapes(&self) -> Vec<(usize, usize)> {
        chain_shapes(self.global_dim(), &self.projector_dims)
    }

    pub fn classifier_shapes(&self) -> Vec<(usize, usize)> {
        let mut dims = self.classifier_hidden.clone();
        dims.push(self.k);
        chain_shapes(self.global_dim(), &dims)
    }
}

fn chain_shapes(input: usize, dims: &[usize]) -> Vec<(usize, usize)> {
    let mut prev = input;
    dims.iter()
        .map(|&d| {
            let s = (prev, d);
            prev = d;
            s
        })
        .collect()
}

/// `M` streamlines of `n` resampled points, stored as an `(M·n) × 3` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBatch {
    n: usize,
    points: Matrix,
}

impl FeatureBatch {
    pub fn new(n: usize, points: Matrix) -> Result<Self> {
        if n == 0 || points.cols() != 3 || !points.rows().is_multiple_of(n) {
            return Err(Error::Shape(format!(
                "feature batch of {:?} with n = {n}",
                points.shape()
            )));
        }
        Ok(Self { n, points })
    }

    /// Resample every streamline to `n` points.
    pub fn from_streamlines(streamlines: &[Streamline], n: usize) -> Result<Self> {
        let mut data = Vec::with_capacity(streamlines.len() * n * 3);
        for (i, s) in streamlines.iter().enumerate() {
            let r = s.resample(n).map_err(|e| Error::at_streamline(i, e))?;
            data.extend(r.points().iter().flat_map(|p| p.to_array()));
        }
        Ok(Self {
            n,
            points: Matrix::from_vec(streamlines.len() * n, 3, data)?,
        })
    }

    pub fn from_set(set: &StreamlineSet, n: usize) -> Result<Self> {
        Self::from_streamlines(&set.streamlines, n)
    }

    pub fn len(&self) -> usize {
        self.points.rows() / self.n
    }

    pub fn is_empty(&self) -> bool {
        self.points.rows() == 0
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn points(&self) -> &Matrix {
        &self.points
    }

    /// The `n × 3` coordinates of streamline `i`, row-major.
    pub fn streamline(&self, i: usize) -> &[f64] {
        &self.points.data()[i * self.n * 3..(i + 1) * self.n * 3]
    }

    pub fn select(&self, indices: &[usize]) -> FeatureBatch {
        let mut data = Vec::with_capacity(indices.len() * self.n * 3);
        for &i in indices {
            data.extend_from_slice(self.streamline(i));
        }
        FeatureBatch {
            n: self.n,
            points: Matrix::from_vec(indices.len() * self.n, 3, data).expect("shape"),
        }
    }

    pub fn slice(&self, start: usize, end: usize) -> FeatureBatch {
        FeatureBatch {
            n: self.n,
            points: self.points.slice_rows(start * self.n, end * self.n),
        }
    }
}

/// Intermediates of [`ModelBundle::encode_with_cache`].
#[derive(Debug, Clone)]
pub struct EncoderCache {
    n: usize,
    input: Matrix,
    /// Post-ReLU activations of every layer except the last.
    hidden: Vec<Matrix>,
    /// The pooled output `g`.
    pooled: Matrix,
    /// For each streamline and output column, the point that won the max.
    argmax: Vec<u32>,
}

/// Intermediates of a dense stack: `inputs[l]` is the input to layer `l`,
/// and the final entry is the stack output.
#[derive(Debug, Clone)]
pub struct StackCache {
    inputs: Vec<Matrix>,
}

impl StackCache {
    pub fn output(&self) -> &Matrix {
        self.inputs.last().expect("non-empty")
    }
}

#[derive(Debug, Clone)]
pub struct ProjectorCache {
    stack: StackCache,
    z: Matrix,
    norms: Vec<f64>,
}

/// Encoder, projector and classifier parameters with their architecture.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub arch: ArchDescriptor,
    pub encoder: Vec<DenseLayer>,
    pub projector: Vec<DenseLayer>,
    pub classifier: Vec<DenseLayer>,
    /// Seed used for initialization, when known.
    pub seed: Option<u64>,
}

impl ModelBundle {
    /// Glorot-initialized weights and zero biases, drawn in the order
    /// encoder, projector, classifier from stream 0 of `seed`.
    pub fn init(arch: ArchDescriptor, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut rng = SeededRng::new(seed);
        let mut build = |shapes: Vec<(usize, usize)>| {
            shapes
                .into_iter()
                .map(|(i, o)| DenseLayer::init(i, o, &mut rng))
                .collect::<Vec<_>>()
        };
        let encoder = build(arch.encoder_shapes());
        let projector = build(arch.projector_shapes());
        let classifier = build(arch.classifier_shapes());
        Ok(Self {
            arch,
            encoder,
            projector,
            classifier,
            seed: Some(seed),
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.arch.validate()?;
        let check = |name: &str, layers: &[DenseLayer], shapes: Vec<(usize, usize)>| {
            let actual: Vec<_> = layers.iter().map(|l| (l.in_dim(), l.out_dim())).collect();
            if actual != shapes {
                return Err(Error::Shape(format!(
                    "{name} layers {actual:?} do not match architecture {shapes:?}"
                )));
            }
            if layers.iter().any(|l| l.bias.len() != l.out_dim()) {
                return Err(Error::Shape(format!("{name} bias length")));
            }
            Ok(())
        };
        check("encoder", &self.encoder, self.arch.encoder_shapes())?;
        check("projector", &self.projector, self.arch.projector_shapes())?;
        check("classifier", &self.classifier, self.arch.classifier_shapes())
    }

    fn check_batch(&self, batch: &FeatureBatch) -> Result<()> {
        if batch.n() != self.arch.n {
            return Err(Error::Shape(format!(
                "batch has {} points per streamline, model expects {}",
                batch.n(),
                self.arch.n
            )));
        }
        Ok(())
    }

    /// Global features `g`, one row per streamline.
    pub fn encode(&self, batch: &FeatureBatch) -> Result<Matrix> {
        self.check_batch(batch)?;
        let n = batch.n();
        let m = batch.len();
        let mut g = Matrix::zeros(m, self.arch.global_dim());
        let mut start = 0;
        while start < m {
            let end = (start + ENCODE_CHUNK).min(m);
            let mut x = batch.points.slice_rows(start * n, end * n);
            for layer in &self.encoder {
                let mut y = Matrix::zeros(x.rows(), layer.out_dim());
                layer.forward_into(&x, &mut y);
                relu_in_place(&mut y);
                x = y;
            }
            let (pooled, _) = maxpool_groups(&x, n)?;
            let d = pooled.cols();
            g.data_mut()[start * d..end * d].copy_from_slice(pooled.data());
            start = end;
        }
        Ok(g)
    }

    /// Like [`encode`](Self::encode), keeping what the backward pass needs.
    /// The full-width last-layer activations are never stored, only the
    /// max-pool winners.
    pub fn encode_with_cache(&self, batch: &FeatureBatch) -> Result<(Matrix, EncoderCache)> {
        self.check_batch(batch)?;
        let n = batch.n();
        let m = batch.len();
        let (last, hidden_layers) = self.encoder.split_last().expect("validated");
        let mut hidden = Vec::with_capacity(hidden_layers.len());
        for layer in hidden_layers {
            let x = hidden.last().unwrap_or(&batch.points);
            let mut y = Matrix::zeros(x.rows(), layer.out_dim());
            layer.forward_into(x, &mut y);
            relu_in_place(&mut y);
            hidden.push(y);
        }
        let prev = hidden.last().unwrap_or(&batch.points);
        let d = last.out_dim();
        let mut pooled = Matrix::zeros(m, d);
        let mut argmax = vec![0u32; m * d];
        let mut start = 0;
        while start < m {
            let end = (start + ENCODE_CHUNK).min(m);
            let x = prev.slice_rows(start * n, end * n);
            let mut y = Matrix::zeros(x.rows(), d);
            last.forward_into(&x, &mut y);
            relu_in_place(&mut y);
            let (p, a) = maxpool_groups(&y, n)?;
            pooled.data_mut()[start * d..end * d].copy_from_slice(p.data());
            argmax[start * d..end * d].copy_from_slice(&a);
            start = end;
        }
        let cache = EncoderCache {
            n,
            input: batch.points.clone(),
            hidden,
            pooled: pooled.clone(),
            argmax,
        };
        Ok((pooled, cache))
    }

    /// Parameter gradients of the encoder given `∂L/∂g`.
    pub fn encoder_backward(&self, cache: &EncoderCache, grad_g: &Matrix) -> Result<Vec<DenseGrads>> {
        if grad_g.shape() != cache.pooled.shape() {
            return Err(Error::Shape(format!(
                "encoder backward: grad {:?} for features {:?}",
                grad_g.shape(),
                cache.pooled.shape()
            )));
        }
        let n = cache.n;
        let (m, d) = grad_g.shape();
        let (last, hidden_layers) = self.encoder.split_last().expect("validated");
        let prev = cache.hidden.last().unwrap_or(&cache.input);
        let d_in = last.in_dim();

        // Only the winning point of each (streamline, column) pair receives
        // gradient, so the last layer is handled sparsely. Weight gradients
        // are accumulated transposed to keep the updates contiguous.
        let w_t = last.weights.transpose();
        let mut grad_w_t = Matrix::zeros(d, d_in);
        let mut grad_b = vec![0.0; d];
        let mut grad_prev = (!hidden_layers.is_empty()).then(|| Matrix::zeros(m * n, d_in));
        for s in 0..m {
            let g_row = grad_g.row(s);
            let pooled = cache.pooled.row(s);
            let arg = &cache.argmax[s * d..(s + 1) * d];
            for j in 0..d {
                let g = g_row[j];
                if g == 0.0 || pooled[j] <= 0.0 {
                    continue;
                }
                let r = s * n + arg[j] as usize;
                grad_b[j] += g;
                axpy(g, prev.row(r), grad_w_t.row_mut(j));
                if let Some(gp) = grad_prev.as_mut() {
                    axpy(g, w_t.row(j), gp.row_mut(r));
                }
            }
        }
        let mut grads = vec![DenseGrads {
            weights: grad_w_t.transpose(),
            bias: grad_b,
        }];

        if let Some(mut grad) = grad_prev {
            for (l, layer) in hidden_layers.iter().enumerate().rev() {
                crate::nn::activation_mask(&cache.hidden[l], &mut grad);
                let input = if l == 0 { &cache.input } else { &cache.hidden[l - 1] };
                let mut lg = DenseGrads::zeros_like(layer);
                layer.accumulate_param_grads(input, &grad, &mut lg);
                grads.push(lg);
                if l > 0 {
                    grad = layer.input_grad(&grad);
                }
            }
        }
        grads.reverse();
        Ok(grads)
    }

    /// Contrastive features `z`, unit-norm rows.
    pub fn project(&self, g: &Matrix) -> Result<Matrix> {
        Ok(self.project_with_cache(g)?.0)
    }

    pub fn project_with_cache(&self, g: &Matrix) -> Result<(Matrix, ProjectorCache)> {
        self.check_global(g)?;
        let stack = stack_forward(&self.projector, g)?;
        let (z, norms) = l2_normalize_forward(stack.output())?;
        Ok((
            z.clone(),
            ProjectorCache { stack, z, norms },
        ))
    }

    /// Returns `(∂L/∂g, projector gradients)` given `∂L/∂z`.
    pub fn projector_backward(&self, cache: &ProjectorCache, grad_z: &Matrix) -> Result<(Matrix, Vec<DenseGrads>)> {
        let grad_u = l2_normalize_backward(&cache.z, &cache.norms, grad_z)?;
        stack_backward(&self.projector, &cache.stack, grad_u)
    }

    /// Class logits, `M × k`.
    pub fn classify(&self, g: &Matrix) -> Result<Matrix> {
        self.check_global(g)?;
        let mut x = g.clone();
        let last = self.classifier.len() - 1;
        for (l, layer) in self.classifier.iter().enumerate() {
            let mut y = Matrix::zeros(x.rows(), layer.out_dim());
            layer.forward_into(&x, &mut y);
            if l < last {
                relu_in_place(&mut y);
            }
            x = y;
        }
        Ok(x)
    }

    pub fn classify_with_cache(&self, g: &Matrix) -> Result<(Matrix, StackCache)> {
        self.check_global(g)?;
        let cache = stack_forward(&self.classifier, g)?;
        Ok((cache.output().clone(), cache))
    }

    pub fn classifier_backward(&self, cache: &StackCache, grad_logits: Matrix) -> Result<(Matrix, Vec<DenseGrads>)> {
        stack_backward(&self.classifier, cache, grad_logits)
    }

    /// Classifier gradients only, for training on a frozen encoder.
    pub fn classifier_param_grads(&self, cache: &StackCache, grad_logits: Matrix) -> Result<Vec<DenseGrads>> {
        Ok(stack_backward_impl(&self.classifier, cache, grad_logits, false)?.1)
    }

    fn check_global(&self, g: &Matrix) -> Result<()> {
        if g.cols() != self.arch.global_dim() {
            return Err(Error::Shape(format!(
                "global feature width {} != {}",
                g.cols(),
                self.arch.global_dim()
            )));
        }
        Ok(())
    }

    /// Predicted class per resampled streamline.
    pub fn predict_batch(&self, batch: &FeatureBatch) -> Result<Vec<usize>> {
        let logits = self.classify(&self.encode(batch)?)?;
        Ok(argmax_rows(&logits))
    }

    /// Resample, encode and classify every streamline of `set`.
    pub fn predict(&self, set: &StreamlineSet) -> Result<Vec<usize>> {
        self.predict_streamlines(&set.streamlines)
    }

    pub fn predict_streamlines(&self, streamlines: &[Streamline]) -> Result<Vec<usize>> {
        let mut labels = Vec::with_capacity(streamlines.len());
        for (c, chunk) in streamlines.chunks(4 * ENCODE_CHUNK).enumerate() {
            let batch = FeatureBatch::from_streamlines(chunk, self.arch.n).map_err(|e| match e {
                Error::AtStreamline { index, source } => Error::AtStreamline {
                    index: index + c * 4 * ENCODE_CHUNK,
                    source,
                },
                other => other,
            })?;
            labels.extend(self.predict_batch(&batch)?);
        }
        Ok(labels)
    }

    /// Parallel [`predict_streamlines`](Self::predict_streamlines) over
    /// `threads` workers; output order follows input order.
    pub fn predict_parallel(&self, streamlines: &[Streamline], threads: usize) -> Result<Vec<usize>> {
        let threads = threads.max(1);
        if threads == 1 || streamlines.len() < 2 * ENCODE_CHUNK {
            return self.predict_streamlines(streamlines);
        }
        let per = streamlines.len().div_ceil(threads);
        let results: Vec<Result<Vec<usize>>> = std::thread::scope(|scope| {
            let handles: Vec<_> = streamlines
                .chunks(per)
                .enumerate()
                .map(|(t, part)| {
                    scope.spawn(move || {
                        self.predict_streamlines(part).map_err(|e| match e {
                            Error::AtStreamline { index, source } => Error::AtStreamline {
                                index: index + t * per,
                                source,
                            },
                            other => other,
                        })
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("prediction worker panicked"))
                .collect()
        });
        let mut labels = Vec::with_capacity(streamlines.len());
        for r in results {
            labels.extend(r?);
        }
        Ok(labels)
    }

    /// Raw little-endian bytes of the encoder parameters, in layer order.
    pub fn encoder_bytes(&self) -> Vec<u8> {
        layer_bytes(&self.encoder)
    }
}

pub(crate) fn tensor_lens(layers: &[DenseLayer]) -> Vec<usize> {
    layers
        .iter()
        .flat_map(|l| [l.weights.data().len(), l.bias.len()])
        .collect()
}

pub(crate) fn grad_slices(grads: &[DenseGrads]) -> Vec<&[f64]> {
    grads
        .iter()
        .flat_map(|g| [g.weights.data(), g.bias.as_slice()])
        .collect()
}

pub(crate) fn params_mut(layers: &mut [DenseLayer]) -> Vec<&mut [f64]> {
    layers
        .iter_mut()
        .flat_map(|l| [l.weights.data_mut(), l.bias.as_mut_slice()])
        .collect()
}

pub(crate) fn layer_bytes(layers: &[DenseLayer]) -> Vec<u8> {
    let mut out = Vec::new();
    for l in layers {
        for v in l.weights.data().iter().chain(&l.bias) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Index of the largest entry per row; ties go to the lowest index.
pub fn argmax_rows(m: &Matrix) -> Vec<usize> {
    m.row_iter()
        .map(|row| {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate().skip(1) {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Dense stack with ReLU after every layer but the last.
fn stack_forward(layers: &[DenseLayer], input: &Matrix) -> Result<StackCache> {
    let mut inputs = Vec::with_capacity(layers.len() + 1);
    inputs.push(input.clone());
    let last = layers.len() - 1;
    for (l, layer) in layers.iter().enumerate() {
        let x = inputs.last().expect("non-empty");
        if x.cols() != layer.in_dim() {
            return Err(Error::Shape(format!("layer {l} expects {} inputs", layer.in_dim())));
        }
        let mut y = Matrix::zeros(x.rows(), layer.out_dim());
        layer.forward_into(x, &mut y);
        if l < last {
            relu_in_place(&mut y);
        }
        inputs.push(y);
    }
    Ok(StackCache { inputs })
}

fn stack_backward(layers: &[DenseLayer], cache: &StackCache, grad_out: Matrix) -> Result<(Matrix, Vec<DenseGrads>)> {
    let (grad, grads) = stack_backward_impl(layers, cache, grad_out, true)?;
    Ok((grad.expect("input gradient requested"), grads))
}

fn stack_backward_impl(
    layers: &[DenseLayer],
    cache: &StackCache,
    grad_out: Matrix,
    input_grad: bool,
) -> Result<(Option<Matrix>, Vec<DenseGrads>)> {
    if grad_out.shape() != cache.output().shape() {
        return Err(Error::Shape(format!(
            "stack backward: grad {:?} for output {:?}",
            grad_out.shape(),
            cache.output().shape()
        )));
    }
    let mut grad = grad_out;
    let mut grads = Vec::with_capacity(layers.len());
    let last = layers.len() - 1;
    for (l, layer) in layers.iter().enumerate().rev() {
        if l < last {
            crate::nn::activation_mask(&cache.inputs[l + 1], &mut grad);
        }
        let mut lg = DenseGrads::zeros_like(layer);
        layer.accumulate_param_grads(&cache.inputs[l], &grad, &mut lg);
        grads.push(lg);
        if l == 0 && !input_grad {
            grads.reverse();
            return Ok((None, grads));
        }
        grad = layer.input_grad(&grad);
    }
    grads.reverse();
    Ok((Some(grad), grads))
}
