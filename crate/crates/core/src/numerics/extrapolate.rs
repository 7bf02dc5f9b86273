//! Sequence acceleration and small least-squares fits.

use super::Real;

/// Richardson tableau for samples `values[i]` taken at step `steps[i]` with
/// error expansion in powers `steps^(order), steps^(2 order), ...`.
/// Returns the most extrapolated entry.
pub fn richardson<T: Real>(steps: &[T], values: &[T], order: T) -> T {
    assert_eq!(steps.len(), values.len());
    assert!(!values.is_empty());
    let mut table: Vec<T> = values.to_vec();
    let n = table.len();
    for level in 1..n {
        for i in (level..n).rev() {
            let ratio = (steps[i - level] / steps[i]).powf(order);
            table[i] = (ratio * table[i] - table[i - 1]) / (ratio - T::one());
        }
    }
    table[n - 1]
}

/// Ordinary least squares fit y = slope·x + intercept.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit<T> {
    pub slope: T,
    pub intercept: T,
    pub rms_residual: T,
}

pub fn fit_line<T: Real>(x: &[T], y: &[T]) -> LineFit<T> {
    assert_eq!(x.len(), y.len());
    assert!(x.len() >= 2, "a line fit needs two points");
    let n = T::from_usize(x.len()).unwrap();
    let mx = x.iter().fold(T::zero(), |a, &b| a + b) / n;
    let my = y.iter().fold(T::zero(), |a, &b| a + b) / n;
    let mut sxy = T::zero();
    let mut sxx = T::zero();
    for (&xi, &yi) in x.iter().zip(y) {
        sxy = sxy + (xi - mx) * (yi - my);
        sxx = sxx + (xi - mx) * (xi - mx);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut ss = T::zero();
    for (&xi, &yi) in x.iter().zip(y) {
        let r = yi - (slope * xi + intercept);
        ss = ss + r * r;
    }
    LineFit { slope, intercept, rms_residual: (ss / n).sqrt() }
}
