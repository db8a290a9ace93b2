use super::Matrix;
use crate::error::{Error, Result};

pub fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

pub fn relu_forward(x: &Matrix) -> Matrix {
    let mut out = x.clone();
    relu_in_place(&mut out);
    out
}

pub fn relu_in_place(x: &mut Matrix) {
    for v in x.data_mut() {
        *v = relu(*v);
    }
}

/// Gradient through ReLU given the forward input (or output: the sign
/// pattern is the same). The subgradient at 0 is 0.
pub fn relu_backward(forward: &Matrix, grad_out: &Matrix) -> Result<Matrix> {
    if forward.shape() != grad_out.shape() {
        return Err(Error::Shape(format!(
            "relu backward: {:?} vs {:?}",
            forward.shape(),
            grad_out.shape()
        )));
    }
    let mut grad = grad_out.clone();
    mask_in_place(forward, &mut grad);
    Ok(grad)
}

pub(crate) fn mask_in_place(forward: &Matrix, grad: &mut Matrix) {
    for (g, &x) in grad.data_mut().iter_mut().zip(forward.data()) {
        if x <= 0.0 {
            *g = 0.0;
        }
    }
}
