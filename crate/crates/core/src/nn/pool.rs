use super::Matrix;
use crate::error::{Error, Result};

/// Column-wise max over the rows of an `n × d` feature matrix.
///
/// Returns the pooled `d`-vector and, per column, the index of the row that
/// supplied the maximum. Ties go to the lowest row index.
pub fn maxpool_points(features: &Matrix) -> Result<(Vec<f64>, Vec<usize>)> {
    if features.rows() == 0 {
        return Err(Error::Empty("max-pool over zero points".into()));
    }
    let d = features.cols();
    let mut pooled = features.row(0).to_vec();
    let mut argmax = vec![0usize; d];
    for r in 1..features.rows() {
        for (j, &v) in features.row(r).iter().enumerate() {
            if v > pooled[j] {
                pooled[j] = v;
                argmax[j] = r;
            }
        }
    }
    Ok((pooled, argmax))
}

/// Routes each pooled gradient to the row that won the max.
pub fn maxpool_backward(grad_pooled: &[f64], argmax: &[usize], n_rows: usize) -> Result<Matrix> {
    if grad_pooled.len() != argmax.len() {
        return Err(Error::Shape(format!(
            "{} pooled gradients for {} argmax entries",
            grad_pooled.len(),
            argmax.len()
        )));
    }
    let d = argmax.len();
    let mut grad = Matrix::zeros(n_rows, d);
    for (j, (&g, &r)) in grad_pooled.iter().zip(argmax).enumerate() {
        if r >= n_rows {
            return Err(Error::Shape(format!("argmax row {r} >= {n_rows}")));
        }
        grad.data_mut()[r * d + j] += g;
    }
    Ok(grad)
}

/// Pools consecutive groups of `n` rows: a `(groups·n) × d` matrix becomes
/// `groups × d`. The argmax entries are row offsets within each group, laid
/// out `groups × d`.
pub fn maxpool_groups(features: &Matrix, n: usize) -> Result<(Matrix, Vec<u32>)> {
    if n == 0 {
        return Err(Error::Empty("max-pool over zero points".into()));
    }
    if !features.rows().is_multiple_of(n) {
        return Err(Error::Shape(format!(
            "{} rows do not split into groups of {n}",
            features.rows()
        )));
    }
    let groups = features.rows() / n;
    let d = features.cols();
    let mut pooled = Matrix::zeros(groups, d);
    let mut argmax = vec![0u32; groups * d];
    for g in 0..groups {
        let out = pooled.row_mut(g);
        out.copy_from_slice(features.row(g * n));
        let arg = &mut argmax[g * d..(g + 1) * d];
        for p in 1..n {
            for (j, &v) in features.row(g * n + p).iter().enumerate() {
                if v > out[j] {
                    out[j] = v;
                    arg[j] = p as u32;
                }
            }
        }
    }
    Ok((pooled, argmax))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_row_is_identity() {
        let f = Matrix::from_rows(&[&[1.0, -2.0, 3.0]]);
        let (p, a) = maxpool_points(&f).unwrap();
        assert_eq!(p, vec![1.0, -2.0, 3.0]);
        assert_eq!(a, vec![0, 0, 0]);
    }

    #[test]
    fn hand_example() {
        let f = Matrix::from_rows(&[&[1.0, 5.0], &[3.0, 2.0]]);
        let (p, a) = maxpool_points(&f).unwrap();
        assert_eq!(p, vec![3.0, 5.0]);
        assert_eq!(a, vec![1, 0]);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let f = Matrix::from_rows(&[&[0.0, 7.0], &[2.0, 7.0], &[2.0, 1.0]]);
        assert_eq!(maxpool_points(&f).unwrap().1, vec![1, 0]);
    }

    #[test]
    fn empty_input() {
        assert!(matches!(maxpool_points(&Matrix::zeros(0, 3)), Err(Error::Empty(_))));
    }

    #[test]
    fn backward_routes_to_argmax() {
        let g = maxpool_backward(&[1.5, -2.0], &[1, 0], 3).unwrap();
        assert_eq!(g.data(), &[0.0, -2.0, 1.5, 0.0, 0.0, 0.0]);
        assert!(maxpool_backward(&[1.0], &[3], 3).is_err());
    }

    #[test]
    fn groups_match_per_group_pooling() {
        let f = Matrix::from_rows(&[&[1.0, 5.0], &[3.0, 2.0], &[-1.0, 0.0], &[-4.0, 9.0]]);
        let (p, a) = maxpool_groups(&f, 2).unwrap();
        assert_eq!(p.data(), &[3.0, 5.0, -1.0, 9.0]);
        assert_eq!(a, vec![1, 0, 0, 1]);
        assert!(maxpool_groups(&f, 3).is_err());
    }
}
