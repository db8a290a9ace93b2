use super::{gemm, glorot_uniform, Matrix, SeededRng};
use crate::error::{Error, Result};

/// Fully connected layer `y = x·W + b` with `W` stored `in × out`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

/// Gradients of a scalar loss with respect to a dense layer.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrads {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl DenseGrads {
    pub fn zeros_like(layer: &DenseLayer) -> Self {
        Self {
            weights: Matrix::zeros(layer.in_dim(), layer.out_dim()),
            bias: vec![0.0; layer.out_dim()],
        }
    }
}

impl DenseLayer {
    pub fn new(weights: Matrix, bias: Vec<f64>) -> Result<Self> {
        if weights.cols() != bias.len() {
            return Err(Error::Shape(format!(
                "bias of length {} for {} outputs",
                bias.len(),
                weights.cols()
            )));
        }
        Ok(Self { weights, bias })
    }

    /// Glorot-uniform weights, zero bias.
    pub fn init(in_dim: usize, out_dim: usize, rng: &mut SeededRng) -> Self {
        Self {
            weights: glorot_uniform(in_dim, out_dim, rng),
            bias: vec![0.0; out_dim],
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn forward(&self, input: &Matrix) -> Result<Matrix> {
        self.check_input(input)?;
        let mut out = Matrix::zeros(input.rows(), self.out_dim());
        self.forward_into(input, &mut out);
        Ok(out)
    }

    pub(crate) fn forward_into(&self, input: &Matrix, out: &mut Matrix) {
        for r in 0..out.rows() {
            out.row_mut(r).copy_from_slice(&self.bias);
        }
        gemm(1.0, input, false, &self.weights, false, 1.0, out);
    }

    /// Returns `(grad_input, grads)` for upstream gradient `grad_out`.
    pub fn backward(&self, input: &Matrix, grad_out: &Matrix) -> Result<(Matrix, DenseGrads)> {
        self.check_input(input)?;
        if grad_out.shape() != (input.rows(), self.out_dim()) {
            return Err(Error::Shape(format!(
                "dense backward: grad {:?} for output {:?}",
                grad_out.shape(),
                (input.rows(), self.out_dim())
            )));
        }
        let mut grads = DenseGrads::zeros_like(self);
        self.accumulate_param_grads(input, grad_out, &mut grads);
        Ok((self.input_grad(grad_out), grads))
    }

    pub(crate) fn accumulate_param_grads(&self, input: &Matrix, grad_out: &Matrix, grads: &mut DenseGrads) {
        gemm(1.0, input, true, grad_out, false, 1.0, &mut grads.weights);
        for row in grad_out.row_iter() {
            for (b, g) in grads.bias.iter_mut().zip(row) {
                *b += g;
            }
        }
    }

    pub(crate) fn input_grad(&self, grad_out: &Matrix) -> Matrix {
        let mut grad_in = Matrix::zeros(grad_out.rows(), self.in_dim());
        gemm(1.0, grad_out, false, &self.weights, true, 0.0, &mut grad_in);
        grad_in
    }

    fn check_input(&self, input: &Matrix) -> Result<()> {
        if input.cols() != self.in_dim() {
            return Err(Error::Shape(format!(
                "dense layer expects {} inputs, got {}",
                self.in_dim(),
                input.cols()
            )));
        }
        Ok(())
    }
}
