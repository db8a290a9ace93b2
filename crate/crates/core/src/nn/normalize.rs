use super::Matrix;
use crate::error::{Error, Result};

/// Rows with Euclidean norm at or below this are rejected by
/// [`l2_normalize_forward`].
pub const NORM_EPS: f64 = 1e-12;

/// Scale each row to unit Euclidean norm. Returns the normalized rows and
/// the original norms (needed by the backward pass).
pub fn l2_normalize_forward(x: &Matrix) -> Result<(Matrix, Vec<f64>)> {
    let mut out = x.clone();
    let mut norms = Vec::with_capacity(x.rows());
    for r in 0..x.rows() {
        let row = out.row_mut(r);
        // scale first so squares of large entries cannot overflow
        let scale = row.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::DegenerateFeature);
        }
        let norm = scale * row.iter().map(|v| (v / scale).powi(2)).sum::<f64>().sqrt();
        if !(norm > NORM_EPS) {
            return Err(Error::DegenerateFeature);
        }
        for v in row.iter_mut() {
            *v /= norm;
        }
        norms.push(norm);
    }
    Ok((out, norms))
}

/// Jacobian-vector product of `x / ‖x‖`: `(g − y (y·g)) / ‖x‖` per row.
pub fn l2_normalize_backward(normalized: &Matrix, norms: &[f64], grad_out: &Matrix) -> Result<Matrix> {
    if normalized.shape() != grad_out.shape() || norms.len() != normalized.rows() {
        return Err(Error::Shape("l2-normalize backward".into()));
    }
    let mut grad = grad_out.clone();
    for (r, &norm) in norms.iter().enumerate() {
        let y = normalized.row(r);
        let g = grad.row_mut(r);
        let dot: f64 = y.iter().zip(g.iter()).map(|(a, b)| a * b).sum();
        for (gi, yi) in g.iter_mut().zip(y) {
            *gi = (*gi - yi * dot) / norm;
        }
    }
    Ok(grad)
}
