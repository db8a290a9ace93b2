//! Training objectives.
//!
//! The contrastive objective is the supervised contrastive loss with the
//! positive-pair average taken outside the logarithm:
//!
//! ```text
//! L = Σ_i  −1/|P(i)|  Σ_{p∈P(i)}  log( exp(z_i·z_p/τ) / Σ_{a≠i} exp(z_i·z_a/τ) )
//! ```
//!
//! where `P(i)` holds the other batch members sharing the label of `i`.
//! Anchors without positives contribute zero. The loss is summed over
//! anchors, not averaged.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{gemm, Matrix};

pub use crate::nn::softmax_cross_entropy as ce_loss;

/// Tolerance on `‖z_i‖ − 1` accepted by [`scl_loss`].
pub const UNIT_NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SclConfig {
    pub temperature: f64,
}

impl Default for SclConfig {
    fn default() -> Self {
        Self { temperature: 0.1 }
    }
}

impl SclConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0) || !self.temperature.is_finite() {
            return Err(Error::Config(format!(
                "temperature must be positive, got {}",
                self.temperature
            )));
        }
        Ok(())
    }
}

/// Supervised contrastive loss and its gradient with respect to `z`.
///
/// `z` must have unit-norm rows (within [`UNIT_NORM_TOLERANCE`]).
pub fn scl_loss(z: &Matrix, labels: &[usize], cfg: &SclConfig) -> Result<(f64, Matrix)> {
    for (row, r) in z.row_iter().enumerate() {
        let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > UNIT_NORM_TOLERANCE {
            return Err(Error::NotNormalized { row, norm });
        }
    }
    scl_loss_unchecked(z, labels, cfg)
}

/// [`scl_loss`] without the unit-norm precondition. The formula is defined
/// for any finite rows; this entry point exists for gradient checking, where
/// perturbed rows leave the unit sphere.
pub fn scl_loss_unchecked(z: &Matrix, labels: &[usize], cfg: &SclConfig) -> Result<(f64, Matrix)> {
    cfg.validate()?;
    let m = z.rows();
    if m < 2 {
        return Err(Error::BatchTooSmall(m));
    }
    if labels.len() != m {
        return Err(Error::Shape(format!("{} labels for {m} features", labels.len())));
    }
    let inv_tau = 1.0 / cfg.temperature;

    // logits[i][a] = z_i·z_a / τ, overwritten row by row with ∂L/∂logits
    let mut coef = Matrix::zeros(m, m);
    gemm(inv_tau, z, false, z, true, 0.0, &mut coef);

    let mut class_sizes = std::collections::HashMap::<usize, usize>::new();
    for &l in labels {
        *class_sizes.entry(l).or_default() += 1;
    }

    let mut total = 0.0;
    for i in 0..m {
        let positives = class_sizes[&labels[i]] - 1;
        let row = coef.row_mut(i);
        if positives == 0 {
            row.fill(0.0);
            continue;
        }
        let max = row
            .iter()
            .enumerate()
            .filter(|&(a, _)| a != i)
            .map(|(_, &v)| v)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        let mut positive_logits = 0.0;
        for (a, v) in row.iter_mut().enumerate() {
            if a == i {
                *v = 0.0;
                continue;
            }
            if labels[a] == labels[i] {
                positive_logits += *v - max;
            }
            *v = (*v - max).exp();
            sum += *v;
        }
        let inv_p = 1.0 / positives as f64;
        total += sum.ln() - positive_logits * inv_p;
        for (a, v) in row.iter_mut().enumerate() {
            if a == i {
                continue;
            }
            *v /= sum;
            if labels[a] == labels[i] {
                *v -= inv_p;
            }
        }
    }

    // ∂L/∂z = (C + Cᵀ) z / τ
    symmetrize(&mut coef);
    let mut grad = Matrix::zeros(m, z.cols());
    gemm(inv_tau, &coef, false, z, false, 0.0, &mut grad);
    Ok((total, grad))
}

/// `C ← C + Cᵀ` for square `C`, in cache-sized tiles.
fn symmetrize(c: &mut Matrix) {
    const TILE: usize = 64;
    let m = c.rows();
    let data = c.data_mut();
    for bi in (0..m).step_by(TILE) {
        for bj in (bi..m).step_by(TILE) {
            for i in bi..(bi + TILE).min(m) {
                let j0 = if bi == bj { i } else { bj };
                for j in j0..(bj + TILE).min(m) {
                    let s = data[i * m + j] + data[j * m + i];
                    data[i * m + j] = s;
                    data[j * m + i] = s;
                }
            }
        }
    }
}
