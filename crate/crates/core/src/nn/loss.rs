use super::Matrix;
use crate::error::{Error, Result};

/// Mean softmax cross-entropy over the rows of `logits` and its gradient
/// `(softmax − onehot) / M`.
pub fn softmax_cross_entropy(logits: &Matrix, labels: &[usize]) -> Result<(f64, Matrix)> {
    let (m, k) = logits.shape();
    if labels.len() != m {
        return Err(Error::Shape(format!("{} labels for {m} rows", labels.len())));
    }
    if m == 0 {
        return Err(Error::Empty("cross-entropy over an empty batch".into()));
    }
    if let Some(&label) = labels.iter().find(|&&l| l >= k) {
        return Err(Error::LabelOutOfRange { label, k });
    }
    let mut grad = Matrix::zeros(m, k);
    let mut total = 0.0;
    let inv_m = 1.0 / m as f64;
    for (r, &label) in labels.iter().enumerate() {
        let row = logits.row(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let g = grad.row_mut(r);
        let mut sum = 0.0;
        for (gi, &z) in g.iter_mut().zip(row) {
            *gi = (z - max).exp();
            sum += *gi;
        }
        total += sum.ln() - (row[label] - max);
        for gi in g.iter_mut() {
            *gi *= inv_m / sum;
        }
        g[label] -= inv_m;
    }
    Ok((total * inv_m, grad))
}
