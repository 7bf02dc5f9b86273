//! Gauss–Legendre rules and a globally adaptive Gauss–Kronrod (7/15) integrator.

use num_complex::Complex;
use std::ops::{Add, Mul, Sub};

use super::Real;
use crate::error::{Error, Result};

/// Values an integrator can accumulate: reals and complex numbers over `T`.
pub trait QuadValue<T: Real>:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<T, Output = Self>
{
    fn zero() -> Self;
    fn magnitude(&self) -> T;
}

impl<T: Real> QuadValue<T> for T {
    fn zero() -> Self {
        T::zero()
    }
    fn magnitude(&self) -> T {
        self.abs()
    }
}

impl<T: Real> QuadValue<T> for Complex<T> {
    fn zero() -> Self {
        Complex::new(T::zero(), T::zero())
    }
    fn magnitude(&self) -> T {
        self.norm()
    }
}

/// Nodes and weights of the n-point Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    assert!(n > 0, "rule needs at least one node");
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let nf = n as f64;
    for i in 0..(n + 1) / 2 {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = T::from_f64(-x).unwrap();
        nodes[n - 1 - i] = T::from_f64(x).unwrap();
        weights[i] = T::from_f64(w).unwrap();
        weights[n - 1 - i] = T::from_f64(w).unwrap();
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Nodes and weights of the n-point Gauss–Hermite rule for `∫ e^{−x²} f(x) dx`,
/// from the eigen-decomposition of the Jacobi matrix.
pub fn gauss_hermite<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    assert!(n > 0, "rule needs at least one node");
    let jacobi = nalgebra::DMatrix::<f64>::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            ((i.max(j)) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = jacobi.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| (eig.eigenvalues[k], std::f64::consts::PI.sqrt() * eig.eigenvectors[(0, k)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.iter().map(|&(x, w)| (T::from_f64(x).unwrap(), T::from_f64(w).unwrap())).unzip()
}

/// Gauss–Legendre rule mapped to [a, b].
pub fn gauss_legendre_on<T: Real>(n: usize, a: T, b: T) -> (Vec<T>, Vec<T>) {
    let (x, w) = gauss_legendre::<T>(n);
    let half = (b - a) / T::from_f64(2.0).unwrap();
    let mid = (a + b) / T::from_f64(2.0).unwrap();
    (
        x.iter().map(|&xi| mid + half * xi).collect(),
        w.iter().map(|&wi| wi * half).collect(),
    )
}

/// Composite Gauss–Legendre rule over consecutive panel edges.
pub fn composite_gauss<T: Real>(edges: &[T], per_panel: usize) -> (Vec<T>, Vec<T>) {
    let mut xs = Vec::with_capacity(edges.len().saturating_sub(1) * per_panel);
    let mut ws = Vec::with_capacity(xs.capacity());
    for pair in edges.windows(2) {
        let (x, w) = gauss_legendre_on(per_panel, pair[0], pair[1]);
        xs.extend(x);
        ws.extend(w);
    }
    (xs, ws)
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod<T: Real, V: QuadValue<T>, F: FnMut(T) -> V>(f: &mut F, a: T, b: T) -> (V, T) {
    let two = T::from_f64(2.0).unwrap();
    let c = (a + b) / two;
    let h = (b - a) / two;
    let fc = f(c);
    let mut k = fc * T::from_f64(WGK[7]).unwrap();
    let mut g = fc * T::from_f64(WG[3]).unwrap();
    for j in 0..7 {
        let dx = h * T::from_f64(XGK[j]).unwrap();
        let s = f(c - dx) + f(c + dx);
        k = k + s * T::from_f64(WGK[j]).unwrap();
        if j % 2 == 1 {
            g = g + s * T::from_f64(WG[j / 2]).unwrap();
        }
    }
    let kv = k * h;
    let gv = g * h;
    (kv, (kv - gv).magnitude())
}

/// Tolerances for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct Tolerance<T> {
    pub rel: T,
    pub abs: T,
    pub max_intervals: usize,
}

impl<T: Real> Tolerance<T> {
    pub fn new(rel: f64, abs: f64) -> Self {
        Self {
            rel: T::from_f64(rel).unwrap(),
            abs: T::from_f64(abs).unwrap(),
            max_intervals: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Estimate<V, T> {
    pub value: V,
    pub error: T,
    pub intervals: usize,
}

/// Globally adaptive 7/15 Gauss–Kronrod quadrature of `f` over [a, b].
///
/// Intervals are bisected in order of largest error estimate; ties break on
/// the left-most interval so the summation order is reproducible.
pub fn integrate<T, V, F>(mut f: F, a: T, b: T, tol: Tolerance<T>) -> Result<Estimate<V, T>>
where
    T: Real,
    V: QuadValue<T>,
    F: FnMut(T) -> V,
{
    if a == b {
        return Ok(Estimate { value: V::zero(), error: T::zero(), intervals: 0 });
    }
    let mut pieces: Vec<(T, T, V, T)> = Vec::new();
    let (v, e) = kronrod(&mut f, a, b);
    pieces.push((a, b, v, e));
    loop {
        let mut total = V::zero();
        let mut err = T::zero();
        for p in &pieces {
            total = total + p.2;
            err = err + p.3;
        }
        let target = tol.abs.max(tol.rel * total.magnitude());
        if err <= target {
            return Ok(Estimate { value: total, error: err, intervals: pieces.len() });
        }
        if pieces.len() >= tol.max_intervals {
            if err <= target * T::from_f64(100.0).unwrap() {
                return Ok(Estimate { value: total, error: err, intervals: pieces.len() });
            }
            return Err(Error::Quadrature(format!(
                "error estimate {:e} above target {:e} after {} intervals",
                err.to_f64().unwrap_or(f64::NAN),
                target.to_f64().unwrap_or(f64::NAN),
                pieces.len()
            )));
        }
        let mut worst = 0;
        for (i, p) in pieces.iter().enumerate() {
            if p.3 > pieces[worst].3 {
                worst = i;
            }
        }
        let (lo, hi, _, _) = pieces.remove(worst);
        let mid = (lo + hi) / T::from_f64(2.0).unwrap();
        if mid <= lo || mid >= hi {
            return Err(Error::Quadrature("interval underflow".into()));
        }
        let (v1, e1) = kronrod(&mut f, lo, mid);
        let (v2, e2) = kronrod(&mut f, mid, hi);
        pieces.insert(worst, (mid, hi, v2, e2));
        pieces.insert(worst, (lo, mid, v1, e1));
    }
}

/// Integral over [a, ∞) through x = a + u/(1-u).
pub fn integrate_to_infinity<T, V, F>(mut f: F, a: T, tol: Tolerance<T>) -> Result<Estimate<V, T>>
where
    T: Real,
    V: QuadValue<T>,
    F: FnMut(T) -> V,
{
    let one = T::one();
    integrate(
        |u: T| {
            if u >= one {
                return V::zero();
            }
            let w = one - u;
            f(a + u / w) * (one / (w * w))
        },
        T::zero(),
        one,
        tol,
    )
}

/// Integral over the whole real line, split at `centre`.
pub fn integrate_real_line<T, V, F>(mut f: F, centre: T, tol: Tolerance<T>) -> Result<Estimate<V, T>>
where
    T: Real,
    V: QuadValue<T>,
    F: FnMut(T) -> V,
{
    let right = integrate_to_infinity(|x| f(x), centre, tol)?;
    let left = integrate_to_infinity(|x| f(centre + centre - x), centre, tol)?;
    Ok(Estimate {
        value: right.value + left.value,
        error: right.error + left.error,
        intervals: right.intervals + left.intervals,
    })
}
