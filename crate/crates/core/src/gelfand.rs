//! Standard operators behind the Gelfand triples: the oscillator `H_(n)`,
//! the weight `νₙ`, the unitary `U = U₂U₁` from `L²(ℝ×𝕊ⁿ⁻¹, dt dμ)` onto
//! `L²(ℝⁿ)` and the radial expression for `A_(3)`.
//!
//! Only the angle-independent sector is sampled. On it `Δ_𝕊` vanishes and the
//! sphere contributes the factor `|𝕊ⁿ⁻¹|` to every measure.
//!
//! With `t = r − 1/r` one has `√(t²+4) = r + 1/r`, so `νₙ(t(r)) = rⁿ⁺¹/(r²+1)`
//! and `νₙ dt = rⁿ⁻¹ dr`: `νₙ` is the Jacobian that makes `U` unitary.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{lit, Real};

/// `νₙ(t) = (t + √(t²+4))ⁿ⁻¹ / (2ⁿ⁻²(t² + 4 − t√(t²+4)))`.
pub fn nu_weight<T: Real>(n: u32, t: T) -> Result<T> {
    if n < 2 {
        return Err(Error::Invalid(format!("the weight is defined for n ≥ 2, got {n}")));
    }
    let s = (t * t + lit(4.0)).sqrt();
    let num = (t + s).powi(n as i32 - 1);
    let den = lit::<T>(2.0).powi(n as i32 - 2) * (t * t + lit(4.0) - t * s);
    Ok(num / den)
}

/// `t(r) = r − 1/r`, increasing on `r > 0`.
pub fn t_of_r<T: Real>(r: T) -> T {
    r - r.recip()
}

/// Inverse of [`t_of_r`].
pub fn r_of_t<T: Real>(t: T) -> T {
    (t + (t * t + lit(4.0)).sqrt()) / lit(2.0)
}

/// `|𝕊ⁿ⁻¹| = 2π^{n/2}/Γ(n/2)`.
pub fn sphere_area<T: Real>(n: u32) -> T {
    let half = n as f64 / 2.0;
    lit(2.0 * std::f64::consts::PI.powf(half) / libm::tgamma(half))
}

/// Uniform radial samples `rᵢ = i·h`, `i = 1..=N`, `h = R/N`, with the
/// induced `tᵢ` and rectangle weights for `dt dμ`, `νₙ dt dμ` and `dⁿp`.
/// Sampled functions are assumed to vanish at both ends, where the rule is
/// spectrally accurate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid<T> {
    pub n: u32,
    pub r: Vec<T>,
    pub t: Vec<T>,
    pub dt: Vec<T>,
    pub nu_dt: Vec<T>,
    pub volume: Vec<T>,
}

impl<T: Real> RadialGrid<T> {
    pub fn uniform(n: u32, r_max: T, points: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Invalid(format!("radial grids need n ≥ 2, got {n}")));
        }
        if points < 3 || !(r_max > T::zero()) {
            return Err(Error::Invalid("radial grid needs R > 0 and at least three points".into()));
        }
        let h = r_max / lit(points as f64);
        let area = sphere_area::<T>(n);
        let mut g = Self { n, r: vec![], t: vec![], dt: vec![], nu_dt: vec![], volume: vec![] };
        for i in 1..=points {
            let r = h * lit(i as f64);
            let w = h;
            let t = t_of_r(r);
            // dt/dr = (r² + 1)/r²
            let dt = w * (r * r + T::one()) / (r * r) * area;
            g.r.push(r);
            g.t.push(t);
            g.dt.push(dt);
            g.nu_dt.push(dt * nu_weight(n, t)?);
            g.volume.push(w * r.powi(n as i32 - 1) * area);
        }
        Ok(g)
    }

    pub fn step(&self) -> T {
        self.r[0]
    }
}

/// `Σ |fᵢ|² wᵢ`.
pub fn norm_sq<T: Real>(values: &[T], weights: &[T]) -> Result<T> {
    if values.len() != weights.len() {
        return Err(Error::DimensionMismatch { expected: weights.len(), got: values.len() });
    }
    Ok(values.iter().zip(weights).fold(T::zero(), |acc, (v, w)| acc + *v * *v * *w))
}

/// `(Uf)(rᵢ) = f(t(rᵢ))/√νₙ(t(rᵢ))` for an angle-independent `f`.
pub fn u_map<T: Real, F: Fn(T) -> T>(grid: &RadialGrid<T>, f: F) -> Result<Vec<T>> {
    grid.t.iter().map(|&t| Ok(f(t) / nu_weight(grid.n, t)?.sqrt())).collect()
}

/// Samples of `U⁻¹g` at the grid's `tᵢ`, i.e. `√νₙ(tᵢ)·g(rᵢ)`.
pub fn u_inverse<T: Real>(grid: &RadialGrid<T>, g: &[T]) -> Result<Vec<T>> {
    if g.len() != grid.r.len() {
        return Err(Error::DimensionMismatch { expected: grid.r.len(), got: g.len() });
    }
    grid.t.iter().zip(g).map(|(&t, &v)| Ok(nu_weight(grid.n, t)?.sqrt() * v)).collect()
}

/// Interior points `xᵢ = −L + i·h`, `h = 2L/N`, `i = 1..N−1`, with
/// Dirichlet conditions at `±L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineGrid<T> {
    pub x: Vec<T>,
    pub h: T,
}

impl<T: Real> LineGrid<T> {
    pub fn new(half_width: T, intervals: usize) -> Result<Self> {
        if intervals < 4 || !(half_width > T::zero()) {
            return Err(Error::Invalid("line grid needs L > 0 and at least four intervals".into()));
        }
        let h = lit::<T>(2.0) * half_width / lit(intervals as f64);
        Ok(Self { x: (1..intervals).map(|i| -half_width + h * lit(i as f64)).collect(), h })
    }
}

/// `H_(1) f = −f″ + (x² + 1) f` with the centred three-point stencil.
pub fn h1_apply<T: Real>(grid: &LineGrid<T>, f: &[T]) -> Result<Vec<T>> {
    if f.len() != grid.x.len() {
        return Err(Error::DimensionMismatch { expected: grid.x.len(), got: f.len() });
    }
    let h2 = grid.h * grid.h;
    let at = |i: isize| if i < 0 || i as usize >= f.len() { T::zero() } else { f[i as usize] };
    Ok((0..f.len())
        .map(|i| {
            let j = i as isize;
            -(at(j + 1) - lit::<T>(2.0) * f[i] + at(j - 1)) / h2 + (grid.x[i] * grid.x[i] + T::one()) * f[i]
        })
        .collect())
}

/// `H_(n) f = −Δf + (r² + 1) f` on angle-independent samples. The radial
/// Laplacian is written in flux form, `r^{1−n}(r^{n−1} f′)′`, with no flux
/// through the origin and `f = 0` beyond `R`; the stencil is symmetric for
/// the `dⁿp` weights.
pub fn h_n_apply<T: Real>(grid: &RadialGrid<T>, f: &[T]) -> Result<Vec<T>> {
    let m = grid.r.len();
    if f.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: f.len() });
    }
    let h = grid.step();
    let p = grid.n as i32 - 1;
    let flux = |i: usize| -> T {
        // flux between samples i and i+1, which sit at (i+1)h and (i+2)h
        let mid = h * (lit::<T>(i as f64) + lit(1.5));
        let right = if i + 1 < m { f[i + 1] } else { T::zero() };
        mid.powi(p) * (right - f[i])
    };
    Ok((0..m)
        .map(|i| {
            let out = flux(i);
            let inn = if i == 0 { T::zero() } else { flux(i - 1) };
            let r = grid.r[i];
            -(out - inn) / (h * h * r.powi(p)) + (r * r + T::one()) * f[i]
        })
        .collect())
}

/// Lowest `count` eigenvalues of the discretised `H_(1)` on `[−L, L]`.
pub fn h1_spectrum(half_width: f64, intervals: usize, count: usize) -> Result<Vec<f64>> {
    let grid = LineGrid::new(half_width, intervals)?;
    let m = grid.x.len();
    if count > m {
        return Err(Error::Invalid(format!("asked for {count} eigenvalues of a {m}-point grid")));
    }
    let h2 = grid.h * grid.h;
    let mat = DMatrix::<f64>::from_fn(m, m, |i, j| {
        if i == j {
            2.0 / h2 + grid.x[i] * grid.x[i] + 1.0
        } else if i.abs_diff(j) == 1 {
            -1.0 / h2
        } else {
            0.0
        }
    });
    let mut ev: Vec<f64> = mat.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev.truncate(count);
    Ok(ev)
}

/// [`h1_spectrum`] on `intervals` and `intervals/2`, combined as
/// `(4E_h − E_{2h})/3` to cancel the `h²` error of the stencil.
pub fn h1_spectrum_extrapolated(half_width: f64, intervals: usize, count: usize) -> Result<Vec<f64>> {
    if intervals % 2 != 0 {
        return Err(Error::Invalid("Richardson step needs an even number of intervals".into()));
    }
    let fine = h1_spectrum(half_width, intervals, count)?;
    let coarse = h1_spectrum(half_width, intervals / 2, count)?;
    Ok(fine.iter().zip(&coarse).map(|(f, c)| (4.0 * f - c) / 3.0).collect())
}

/// Second-order radial differential expression `a(r)∂² + b(r)∂ + c(r)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "expression", rename_all = "snake_case")]
pub enum RadialExpression {
    /// The closed-form radial `A_(3)`.
    DisplayedA3,
    /// `U H_(1) U⁻¹` by the chain rule, for the given dimension.
    Conjugated { n: u32 },
}

impl RadialExpression {
    /// `[a, b, c]` at `r`.
    pub fn coefficients<T: Real>(&self, r: T) -> [T; 3] {
        let one = T::one();
        let r2 = r * r;
        let q = r2 + one;
        match *self {
            RadialExpression::DisplayedA3 => {
                let four = lit::<T>(4.0);
                [
                    -r2 / q,
                    -r2 * r * (r2 + four) / q.powi(3),
                    r2 * (r2 + four) * (r2 - lit(2.0)) / (four * q.powi(4)) + r2 + r2.recip(),
                ]
            }
            RadialExpression::Conjugated { n } => {
                // ∂_t = c ∂_r with c = r²/(r²+1); w = √νₙ, L = ln w
                let c = r2 / q;
                let dc = lit::<T>(2.0) * r / (q * q);
                let half_np1 = lit::<T>((n as f64 + 1.0) / 2.0);
                let dl = half_np1 / r - r / q;
                let ddl = -half_np1 / r2 - (one - r2) / (q * q);
                let w2 = ddl + dl * dl;
                let t = t_of_r(r);
                [-c * c, -(c * dc + lit::<T>(2.0) * c * c * dl), t * t + one - c * dc * dl - c * c * w2]
            }
        }
    }
}

fn three_point<T: Real>(xs: &[T], f: &[T], i: usize) -> (T, T) {
    // neighbours outside the grid are zeros one spacing away
    let n = xs.len();
    let (xm, fm) = if i == 0 { (xs[0] - (xs[1] - xs[0]), T::zero()) } else { (xs[i - 1], f[i - 1]) };
    let (xp, fp) = if i + 1 == n { (xs[i] + (xs[i] - xs[i - 1]), T::zero()) } else { (xs[i + 1], f[i + 1]) };
    let (hm, hp) = (xs[i] - xm, xp - xs[i]);
    let den = hp * hm * (hp + hm);
    let d1 = (hm * hm * fp - hp * hp * fm + (hp * hp - hm * hm) * f[i]) / den;
    let d2 = lit::<T>(2.0) * (hm * fp - (hp + hm) * f[i] + hp * fm) / den;
    (d1, d2)
}

fn check_increasing<T: Real>(xs: &[T], f: &[T]) -> Result<()> {
    if xs.len() != f.len() {
        return Err(Error::DimensionMismatch { expected: xs.len(), got: f.len() });
    }
    if xs.len() < 3 || xs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Invalid("samples must be strictly increasing, at least three".into()));
    }
    Ok(())
}

/// Applies `expr` with centred three-point stencils on a possibly
/// non-uniform grid; `g = 0` is assumed one spacing beyond either end.
pub fn apply_radial<T: Real>(expr: RadialExpression, r: &[T], g: &[T]) -> Result<Vec<T>> {
    check_increasing(r, g)?;
    if !(r[0] > T::zero()) {
        return Err(Error::Refused("grid touches r = 0, where the coefficients are singular".into()));
    }
    Ok((0..r.len())
        .map(|i| {
            let [a, b, c] = expr.coefficients(r[i]);
            let (d1, d2) = three_point(r, g, i);
            a * d2 + b * d1 + c * g[i]
        })
        .collect())
}

/// The closed-form `A_(3)` on angle-independent samples.
pub fn a3_apply<T: Real>(r: &[T], g: &[T]) -> Result<Vec<T>> {
    apply_radial(RadialExpression::DisplayedA3, r, g)
}

/// `U H_(1) U⁻¹ g` by the second route: pull back to `t`, apply the
/// oscillator with the non-uniform stencil on the induced `tᵢ`, push forward.
pub fn conjugated_h1<T: Real>(n: u32, r: &[T], g: &[T]) -> Result<Vec<T>> {
    check_increasing(r, g)?;
    if !(r[0] > T::zero()) {
        return Err(Error::Refused("grid touches r = 0".into()));
    }
    let t: Vec<T> = r.iter().map(|&x| t_of_r(x)).collect();
    let w: Vec<T> = t.iter().map(|&x| Ok(nu_weight(n, x)?.sqrt())).collect::<Result<_>>()?;
    let f: Vec<T> = w.iter().zip(g).map(|(a, b)| *a * *b).collect();
    Ok((0..r.len())
        .map(|i| {
            let (_, d2) = three_point(&t, &f, i);
            (-d2 + (t[i] * t[i] + T::one()) * f[i]) / w[i]
        })
        .collect())
}

/// Residual between [`apply_radial`] and [`conjugated_h1`] over a window,
/// along a sequence of uniform grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjugationStudy {
    pub steps: Vec<f64>,
    pub residuals: Vec<f64>,
    /// `log₂` of successive residual ratios; 2 for a consistent expression.
    pub orders: Vec<f64>,
}

pub fn conjugation_study<F: Fn(f64) -> f64>(
    expr: RadialExpression,
    g: F,
    r_max: f64,
    window: (f64, f64),
    points: &[usize],
) -> Result<ConjugationStudy> {
    if points.len() < 2 {
        return Err(Error::Invalid("need at least two grids".into()));
    }
    let mut steps = vec![];
    let mut residuals = vec![];
    for &m in points {
        let grid = RadialGrid::<f64>::uniform(3, r_max, m)?;
        let samples: Vec<f64> = grid.r.iter().map(|&r| g(r)).collect();
        let lhs = apply_radial(expr, &grid.r, &samples)?;
        let rhs = conjugated_h1(3, &grid.r, &samples)?;
        let res = grid
            .r
            .iter()
            .zip(lhs.iter().zip(&rhs))
            .filter(|(r, _)| **r >= window.0 && **r <= window.1)
            .map(|(_, (a, b))| (a - b).abs())
            .fold(0.0, f64::max);
        steps.push(grid.step());
        residuals.push(res);
    }
    let orders = residuals.windows(2).zip(steps.windows(2)).map(|(r, h)| (r[0] / r[1]).ln() / (h[0] / h[1]).ln()).collect();
    Ok(ConjugationStudy { steps, residuals, orders })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_is_one_half_at_zero() {
        for n in 2..7 {
            assert!((nu_weight(n, 0.0f64).unwrap() - 0.5).abs() < 1e-15);
        }
        assert!(nu_weight(1, 0.0f64).is_err());
    }

    #[test]
    fn weight_in_radial_form() {
        for r in [0.1f64, 0.7, 1.0, 2.5, 9.0] {
            let t = t_of_r(r);
            assert!((r_of_t(t) - r).abs() < 1e-13);
            for n in 2..5 {
                let want = r.powi(n as i32 + 1) / (r * r + 1.0);
                assert!((nu_weight(n, t).unwrap() - want).abs() < 1e-12 * want);
            }
        }
    }

    #[test]
    fn single_precision_weight() {
        assert!((nu_weight(3, 0.0f32).unwrap() - 0.5).abs() < 1e-7);
    }

    #[test]
    fn touching_the_origin_is_refused() {
        let r = [0.0, 0.1, 0.2];
        assert!(matches!(a3_apply(&r, &[1.0, 1.0, 1.0]), Err(Error::Refused(_))));
    }
}
