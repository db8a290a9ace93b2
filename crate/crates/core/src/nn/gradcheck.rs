//! Central finite-difference checking of analytic gradients.

/// Central-difference gradient of `f` at `input` with step `h`.
pub fn numeric_gradient<F>(mut f: F, input: &[f64], h: f64) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut x = input.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = x[i];
            x[i] = orig + h;
            let plus = f(&x);
            x[i] = orig - h;
            let minus = f(&x);
            x[i] = orig;
            (plus - minus) / (2.0 * h)
        })
        .collect()
}

/// Largest componentwise relative error between two gradients.
///
/// Each component is compared as `|a − n| / max(|a|, |n|, floor)`, where the
/// floor is `1e-3` times the largest gradient magnitude. Components far below
/// the gradient's scale are dominated by cancellation noise in the numeric
/// estimate and are judged against that scale instead of their own.
pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len(), "gradient lengths differ");
    let scale = analytic
        .iter()
        .chain(numeric)
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = (1e-3 * scale).max(f64::MIN_POSITIVE);
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(floor))
        .fold(0.0, f64::max)
}

/// Compares `analytic` against central differences of the scalar function
/// `f` around `input`; returns the maximum relative error.
pub fn finite_difference_check<F>(f: F, input: &[f64], analytic: &[f64], h: f64) -> f64
where
    F: FnMut(&[f64]) -> f64,
{
    relative_error(analytic, &numeric_gradient(f, input, h))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_gradient_of_a_cubic() {
        let x = [0.5, -1.25, 2.0];
        let grad: Vec<f64> = x.iter().map(|v| 3.0 * v * v).collect();
        let err = finite_difference_check(|v| v.iter().map(|a| a * a * a).sum(), &x, &grad, 1e-6);
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn corrupted_gradient_is_caught() {
        let x = [0.5, -1.25, 2.0];
        let grad: Vec<f64> = x.iter().map(|v| 3.3 * v * v).collect();
        let err = finite_difference_check(|v| v.iter().map(|a| a * a * a).sum(), &x, &grad, 1e-6);
        assert!(err > 1e-2, "{err}");
    }
}
