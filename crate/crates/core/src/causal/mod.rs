//! Causal distributions in dispersion form, their singularity degree and
//! retarded/advanced splitting, the vacuum-polarization function, and the
//! small toy models used to exercise the inductive construction.
//!
//! A distribution is `d̃(p) = (p²)^α ∫_{s₀}^∞ ρ(s)/(p² − s + iη0) ds + N(p²)`
//! where the sign `η` of the infinitesimal offset selects the prescription
//! and `N` is the normalization polynomial.

pub mod inductive;
pub mod sokhotski;
pub mod support;

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::C64;
use crate::numerics::extrapolate::fit_line;
use crate::numerics::quadrature::{integrate, integrate_to_infinity, Tolerance};

/// Spectral density `ρ(s)` on `[s₀, ∞)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum SpectralDensity {
    /// `(s + 2m²) s⁻² √(1 − 4m²/s)` above `4m²`.
    VacuumPolarization { mass: f64 },
    /// `s^(−exponent)` above `threshold`.
    Power { threshold: f64, exponent: f64 },
    /// `e^(−rate·s)` above `threshold`.
    Exponential { threshold: f64, rate: f64 },
    /// Piecewise-linear table of `(s, ρ)` pairs, zero beyond the last point.
    Table { points: Vec<[f64; 2]> },
}

impl SpectralDensity {
    pub fn threshold(&self) -> f64 {
        match self {
            SpectralDensity::VacuumPolarization { mass } => 4.0 * mass * mass,
            SpectralDensity::Power { threshold, .. } | SpectralDensity::Exponential { threshold, .. } => *threshold,
            SpectralDensity::Table { points } => points.first().map(|p| p[0]).unwrap_or(0.0),
        }
    }

    pub fn eval(&self, s: f64) -> f64 {
        if s < self.threshold() {
            return 0.0;
        }
        match self {
            SpectralDensity::VacuumPolarization { mass } => {
                let m2 = mass * mass;
                (s + 2.0 * m2) / (s * s) * (1.0 - 4.0 * m2 / s).max(0.0).sqrt()
            }
            SpectralDensity::Power { exponent, .. } => s.powf(-exponent),
            SpectralDensity::Exponential { rate, .. } => (-rate * s).exp(),
            SpectralDensity::Table { points } => {
                let k = points.partition_point(|p| p[0] <= s);
                if k == 0 || k >= points.len() {
                    return if k == points.len() && points.last().is_some_and(|p| p[0] == s) { points[k - 1][1] } else { 0.0 };
                }
                let (a, b) = (points[k - 1], points[k]);
                a[1] + (b[1] - a[1]) * (s - a[0]) / (b[0] - a[0])
            }
        }
    }

    /// Upper end of the support, if finite.
    fn support_end(&self) -> Option<f64> {
        match self {
            SpectralDensity::Table { points } => points.last().map(|p| p[0]),
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            SpectralDensity::VacuumPolarization { mass } => *mass > 0.0,
            SpectralDensity::Power { threshold, exponent } => *threshold > 0.0 && *exponent > 0.0,
            SpectralDensity::Exponential { threshold, rate } => *threshold >= 0.0 && *rate > 0.0,
            SpectralDensity::Table { points } => {
                points.len() >= 2 && points.windows(2).all(|w| w[0][0] < w[1][0]) && points[0][0] >= 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Invalid(format!("invalid spectral density {self:?}")))
        }
    }
}

/// Choice of the infinitesimal imaginary offset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prescription {
    /// `p² − s + i0`.
    Causal,
    /// `p² − s − ip₀0`.
    Advanced,
    /// `p² − s + ip₀0`.
    Retarded,
    /// Principal value only.
    PrincipalValue,
    /// No offset; refused on the cut.
    Real,
}

impl Prescription {
    /// Sign of the imaginary offset at energy `p0`.
    fn offset_sign(self, p0: f64) -> f64 {
        let s = if p0 >= 0.0 { 1.0 } else { -1.0 };
        match self {
            Prescription::Causal => 1.0,
            Prescription::Advanced => -s,
            Prescription::Retarded => s,
            Prescription::PrincipalValue | Prescription::Real => 0.0,
        }
    }
}

fn dispersion_tolerance() -> Tolerance<f64> {
    let mut t = Tolerance::new(1e-11, 1e-300);
    t.max_intervals = 20_000;
    t
}

/// `∫ ρ(s)/(x − s) ds` for real `x` below the threshold.
fn dispersion_below(rho: &SpectralDensity, x: f64) -> Result<f64> {
    let s0 = rho.threshold();
    let tol = dispersion_tolerance();
    if s0 > 0.0 {
        // s = s₀/(1 − u²) absorbs a square-root threshold and the infinite range.
        let f = |u: f64| {
            let w = 1.0 - u * u;
            if w <= 0.0 {
                return 0.0;
            }
            let s = s0 / w;
            rho.eval(s) / (x - s) * 2.0 * s0 * u / (w * w)
        };
        Ok(integrate(f, 0.0, 1.0, tol)?.value)
    } else {
        let head = integrate(|v: f64| 2.0 * v * rho.eval(v * v) / (x - v * v), 0.0, 1.0, tol)?.value;
        let tail = integrate_to_infinity(|s: f64| rho.eval(s) / (x - s), 1.0, tol)?.value;
        Ok(head + tail)
    }
}

/// Principal value of `∫ ρ(s)/(x − s) ds` for `x` above the threshold.
fn dispersion_principal(rho: &SpectralDensity, x: f64) -> Result<f64> {
    let s0 = rho.threshold();
    let tol = dispersion_tolerance();
    let delta = 0.5 * (x - s0).min(x.max(1e-300));
    let lo = x - delta;
    // s = s₀ + v² near the threshold
    let low = integrate(
        |v: f64| {
            let s = s0 + v * v;
            2.0 * v * rho.eval(s) / (x - s)
        },
        0.0,
        (lo - s0).sqrt(),
        tol,
    )?
    .value;
    let window = integrate(|t: f64| (rho.eval(x - t) - rho.eval(x + t)) / t, 0.0, delta, tol)?.value;
    let start = x + delta;
    let high = match rho.support_end() {
        Some(end) if end <= start => 0.0,
        Some(end) => integrate(|s: f64| rho.eval(s) / (x - s), start, end, tol)?.value,
        None => integrate_to_infinity(|s: f64| rho.eval(s) / (x - s), start, tol)?.value,
    };
    Ok(low + window + high)
}

/// `∫ ρ(s)/(w − s) ds` for complex `w` off the real axis.
pub fn dispersion_complex(rho: &SpectralDensity, w: C64) -> Result<C64> {
    if w.im == 0.0 {
        return Err(Error::Invalid("complex dispersion needs Im w ≠ 0".into()));
    }
    let s0 = rho.threshold();
    let tol = dispersion_tolerance();
    // split at the real part so the near-pole region is resolved
    let f = |s: f64| C64::new(rho.eval(s), 0.0) / (w - s);
    let end = rho.support_end();
    let mut edges = vec![s0];
    if w.re > s0 {
        edges.push(w.re);
    }
    let mut total = C64::new(0.0, 0.0);
    for pair in edges.windows(2) {
        total += integrate(f, pair[0], pair[1], tol)?.value;
    }
    let last = *edges.last().unwrap();
    total += match end {
        Some(e) if e <= last => C64::new(0.0, 0.0),
        Some(e) => integrate(f, last, e, tol)?.value,
        None => integrate_to_infinity(f, last, tol)?.value,
    };
    Ok(total)
}

/// `∫ ρ(s)/(x − s + iη0) ds` with the offset of `prescription` at energy `p0`.
pub fn dispersion_integral(rho: &SpectralDensity, x: f64, prescription: Prescription, p0: f64) -> Result<C64> {
    rho.validate()?;
    let s0 = rho.threshold();
    if x <= s0 || rho.support_end().is_some_and(|e| x >= e) {
        if x == s0 && rho.eval(s0) != 0.0 {
            return Err(Error::Singular(format!("logarithmic singularity at the threshold x = {s0}")));
        }
        return Ok(C64::new(dispersion_below_or_above(rho, x)?, 0.0));
    }
    if prescription == Prescription::Real {
        return Err(Error::Refused(format!(
            "p² = {x} lies on the cut [{s0}, ∞); request the principal value or an iε prescription explicitly"
        )));
    }
    let pv = dispersion_principal(rho, x)?;
    let eta = prescription.offset_sign(p0);
    Ok(C64::new(pv, -PI * eta * rho.eval(x)))
}

fn dispersion_below_or_above(rho: &SpectralDensity, x: f64) -> Result<f64> {
    match rho.support_end() {
        Some(end) if x >= end => {
            let tol = dispersion_tolerance();
            Ok(integrate(|s: f64| rho.eval(s) / (x - s), rho.threshold(), end, tol)?.value)
        }
        _ => dispersion_below(rho, x),
    }
}

/// A causal distribution in dispersion form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalDistribution {
    pub density: SpectralDensity,
    /// Power of the `(p²)^α` prefactor.
    pub alpha: u32,
    pub prescription: Prescription,
    /// Coefficients `c₀, c₁, …` of `Σ c_k (p²)^k`.
    #[serde(default)]
    pub normalization: Vec<f64>,
    /// Singularity degree, once known.
    #[serde(default)]
    pub omega: Option<i32>,
}

impl CausalDistribution {
    pub fn new(density: SpectralDensity, alpha: u32, prescription: Prescription) -> Self {
        Self { density, alpha, prescription, normalization: vec![], omega: None }
    }

    pub fn vacuum_polarization(mass: f64) -> Self {
        Self::new(SpectralDensity::VacuumPolarization { mass }, 2, Prescription::Causal)
    }

    pub fn with_prescription(&self, prescription: Prescription) -> Self {
        Self { prescription, ..self.clone() }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let d: Self = serde_json::from_str(text)?;
        d.density.validate()?;
        Ok(d)
    }

    /// Checks that `ρ(s) s^{−(α+1)}` is integrable on `[s₀, ∞)` numerically.
    pub fn check_integrable(&self) -> Result<f64> {
        let a = self.alpha as i32 + 1;
        let s0 = self.density.threshold().max(1e-12);
        let tol = dispersion_tolerance();
        let r = match self.density.support_end() {
            Some(end) => integrate(|s: f64| self.density.eval(s) * s.powi(-a), s0, end, tol),
            None => integrate_to_infinity(|s: f64| self.density.eval(s) * s.powi(-a), s0, tol),
        };
        match r {
            Ok(e) if e.value.is_finite() => Ok(e.value),
            _ => Err(Error::Invalid("density not integrable against s^-(α+1)".into())),
        }
    }

    pub fn normalization_polynomial(&self, p_sq: f64) -> f64 {
        self.normalization.iter().rev().fold(0.0, |acc, c| acc * p_sq + c)
    }

    /// `d̃` at invariant mass `p_sq` and energy `p0`.
    pub fn eval(&self, p_sq: f64, p0: f64) -> Result<C64> {
        let core = dispersion_integral(&self.density, p_sq, self.prescription, p0)?;
        Ok(core * p_sq.powi(self.alpha as i32) + self.normalization_polynomial(p_sq))
    }

    /// `d̃` at a complex energy in the upper half-plane, zero spatial momentum
    /// (the retarded continuation).
    pub fn eval_retarded_continuation(&self, energy: C64) -> Result<C64> {
        let w = energy * energy;
        let core = dispersion_complex(&self.density, w)?;
        let poly = self.normalization.iter().rev().fold(C64::new(0.0, 0.0), |acc, c| acc * w + c);
        Ok(core * w.powu(self.alpha) + poly)
    }

    /// `R − A = −2πi sgn(p₀) (p²)^α ρ(p²)`.
    pub fn discontinuity(&self, p_sq: f64, p0: f64) -> C64 {
        let s = if p0 >= 0.0 { 1.0 } else { -1.0 };
        C64::new(0.0, -2.0 * PI * s * p_sq.powi(self.alpha as i32) * self.density.eval(p_sq))
    }
}

/// Scaling fit of `log|d̃|` against `log|p²|` on a spacelike decade.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeFit {
    pub omega: i32,
    /// Twice the fitted slope: the real-valued growth exponent in `|p|`.
    pub exponent: f64,
    pub local_exponents: Vec<f64>,
}

pub fn singularity_degree_fit(d: &CausalDistribution) -> Result<DegreeFit> {
    let scale = d.density.threshold().max(1.0);
    let xs: Vec<f64> = (0..=8).map(|j| -scale * 10f64.powf(6.0 + j as f64 / 8.0)).collect();
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    for &x in &xs {
        let v = d.eval(x, 0.0)?.norm();
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::Invalid(format!("|d̃| = {v} at p² = {x:e}; no growth exponent")));
        }
        lx.push(x.abs().ln());
        ly.push(v.ln());
    }
    let fit = fit_line(&lx, &ly);
    let local: Vec<f64> = lx.windows(2).zip(ly.windows(2)).map(|(a, b)| 2.0 * (b[1] - b[0]) / (a[1] - a[0])).collect();
    let exponent = 2.0 * fit.slope;
    let omega = exponent.round();
    let spread = local.iter().map(|e| (e - exponent).abs()).fold(0.0, f64::max);
    if (exponent - omega).abs() > 0.3 || spread > 0.3 {
        return Err(Error::Invalid(format!(
            "growth exponent {exponent:.3} (local spread {spread:.3}) is not polynomial-like"
        )));
    }
    Ok(DegreeFit { omega: omega as i32, exponent, local_exponents: local })
}

/// Singularity degree `ω` (growth degree in `|p|`).
pub fn singularity_degree(d: &CausalDistribution) -> Result<i32> {
    Ok(singularity_degree_fit(d)?.omega)
}

/// Retarded and advanced parts of a causal distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub omega: i32,
    pub retarded: CausalDistribution,
    pub advanced: CausalDistribution,
}

/// Splits by switching the prescription and adding `normalization`
/// (coefficients in `p²`). The normalization may have degree at most `ω`
/// in `|p|`; for `ω < 0` the split is unique and must be zero.
pub fn split_retarded_advanced(d: &CausalDistribution, normalization: &[f64]) -> Result<Split> {
    let omega = match d.omega {
        Some(o) => o,
        None => singularity_degree(d)?,
    };
    let degree = normalization.iter().rposition(|c| *c != 0.0).map(|k| 2 * k as i32);
    if let Some(deg) = degree {
        if deg > omega {
            return Err(Error::Refused(format!(
                "normalization of degree {deg} exceeds the singularity degree {omega}"
            )));
        }
    }
    let mut combined = vec![0.0; d.normalization.len().max(normalization.len())];
    for (k, c) in d.normalization.iter().enumerate() {
        combined[k] += c;
    }
    for (k, c) in normalization.iter().enumerate() {
        combined[k] += c;
    }
    let make = |p| CausalDistribution { prescription: p, normalization: combined.clone(), omega: Some(omega), ..d.clone() };
    Ok(Split { omega, retarded: make(Prescription::Retarded), advanced: make(Prescription::Advanced) })
}

/// How the two free constants of the vacuum-polarization split are fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "choice", rename_all = "snake_case")]
pub enum Normalization {
    /// `Π̃(0) = 0` and `Π̃/p²` vanishing at `p² = 0`.
    Natural,
    /// Natural plus a constant term `c` (a `g^{μν}` piece in the tensor).
    PlusConstant { c: f64 },
    /// Arbitrary polynomial `Σ c_k (p²)^k` added to the natural choice.
    Custom { coefficients: Vec<f64> },
}

impl Normalization {
    pub fn coefficients(&self) -> Vec<f64> {
        match self {
            Normalization::Natural => vec![],
            Normalization::PlusConstant { c } => vec![*c],
            Normalization::Custom { coefficients } => coefficients.clone(),
        }
    }
}

/// `Π̃(p) = (1/3) p⁴ ∫ ρ(s)/(p² − s + iη0) ds` plus the normalization
/// polynomial, by quadrature.
pub fn vacuum_polarization(
    p_sq: f64,
    mass: f64,
    prescription: Prescription,
    p0: f64,
    normalization: &Normalization,
) -> Result<C64> {
    if !(mass > 0.0) {
        return Err(Error::Invalid("vacuum polarization needs m > 0".into()));
    }
    let core = dispersion_integral(&SpectralDensity::VacuumPolarization { mass }, p_sq, prescription, p0)?;
    let poly: f64 = normalization.coefficients().iter().rev().fold(0.0, |acc, c| acc * p_sq + c);
    Ok(core * (p_sq * p_sq / 3.0) + poly)
}

/// Closed form of the same integral. With `s = 4m²/(1 − v²)` the integrand
/// becomes the rational function `(3 − v²)v² / ((x − 4) − x v²)` in units
/// of `m²`, which integrates in elementary functions.
pub fn vacuum_polarization_closed_form(
    p_sq: f64,
    mass: f64,
    prescription: Prescription,
    p0: f64,
    normalization: &Normalization,
) -> Result<C64> {
    if !(mass > 0.0) {
        return Err(Error::Invalid("vacuum polarization needs m > 0".into()));
    }
    let m2 = mass * mass;
    let x = p_sq / m2;
    let poly: f64 = normalization.coefficients().iter().rev().fold(0.0, |acc, c| acc * p_sq + c);
    if x == 0.0 {
        return Ok(C64::new(poly, 0.0));
    }
    if x.abs() < 0.1 {
        let integral = -small_momentum_moments().iter().rev().fold(0.0, |acc, m| acc * x + m);
        return Ok(C64::new(p_sq * p_sq / 3.0 * integral / m2 + poly, 0.0));
    }
    let (a, b) = (x - 4.0, x);
    let f = if x < 0.0 {
        -((-x / (4.0 - x)).sqrt()).atanh() / (-x * (4.0 - x)).sqrt()
    } else if x < 4.0 {
        -(b / -a).sqrt().atan() / (-a * b).sqrt()
    } else if x == 4.0 {
        return Ok(C64::new(p_sq * p_sq / 3.0 / m2 * (1.0 / 12.0 - 0.5) + poly, 0.0));
    } else {
        let beta = (a / b).sqrt();
        ((1.0 + beta) / (1.0 - beta)).ln() / (2.0 * b * beta)
    };
    let r = a / b;
    let integral = 1.0 / (3.0 * b) - (3.0 - r) / b + a * (3.0 - r) / b * f;
    let mut im = 0.0;
    if x > 4.0 {
        if prescription == Prescription::Real {
            return Err(Error::Refused("p² on the cut needs an explicit prescription".into()));
        }
        let rho = SpectralDensity::VacuumPolarization { mass }.eval(p_sq);
        im = -PI * prescription.offset_sign(p0) * rho * p_sq * p_sq / 3.0;
    }
    Ok(C64::new(p_sq * p_sq / 3.0 * integral / m2 + poly, im))
}

/// Moments `∫ ρ(s) s^{−k} ds`, `k = 1, 2, …`, in units of `m`. Near `p² = 0`
/// the closed form cancels catastrophically, so it switches to the moment
/// series `−Σ xⁿ M_{n+1}`; the ratio of successive terms is below `|x|/4`.
fn small_momentum_moments() -> &'static [f64; 24] {
    static MOMENTS: OnceLock<[f64; 24]> = OnceLock::new();
    MOMENTS.get_or_init(|| {
        // with t = 4m²/s, M_k = 4^{−1−k}(4B(k, 3/2) + 2B(k+1, 3/2))
        let beta = |k: usize| (1..k).fold(2.0 / 3.0, |b, a| b * a as f64 / (a as f64 + 1.5));
        std::array::from_fn(|i| {
            let k = i + 1;
            4f64.powi(-1 - k as i32) * (4.0 * beta(k) + 2.0 * beta(k + 1))
        })
    })
}

/// `c₀(m) = (1/3)∫ (s + 2m²) s⁻³ √(1 − 4m²/s) ds`, the limit of `−Π̃/p⁴`.
pub fn vacuum_polarization_c0(mass: f64) -> Result<f64> {
    let rho = SpectralDensity::VacuumPolarization { mass };
    let s0 = rho.threshold();
    let f = |u: f64| {
        let w = 1.0 - u * u;
        if w <= 0.0 {
            return 0.0;
        }
        let s = s0 / w;
        rho.eval(s) / s * 2.0 * s0 * u / (w * w)
    };
    Ok(integrate(f, 0.0, 1.0, Tolerance::new(1e-13, 0.0))?.value / 3.0)
}

/// Coefficients `(c₀, c₁)` of the degree-two polynomial that, added to
/// `d`, enforces `d̃(0) = 0` and `d̃/p²|₀ = 0`; solved as a 2×2 linear
/// system from samples at `p² = ±h` below the threshold.
pub fn natural_normalization(d: &CausalDistribution, h: f64) -> Result<[f64; 2]> {
    if !(h > 0.0 && h < d.density.threshold()) {
        return Err(Error::Invalid("sample offset must lie in (0, s₀)".into()));
    }
    let base = CausalDistribution { normalization: vec![], ..d.clone() };
    let x1 = -h;
    let x2 = h;
    let (y1, y2) = (base.eval(x1, 0.0)?.re, base.eval(x2, 0.0)?.re);
    // value and slope at zero from the two samples, then c₀ + c₁x = −(value + slope·x)
    let m = nalgebra::Matrix2::new(1.0, x1, 1.0, x2);
    let sol = m
        .lu()
        .solve(&nalgebra::Vector2::new(-y1, -y2))
        .ok_or_else(|| Error::Singular("normalization system is singular".into()))?;
    Ok([sol[0], sol[1]])
}

/// One sample of the time-domain comparison between the retarded part and
/// `θ(t)·D(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaSample {
    pub t: f64,
    pub retarded: f64,
    pub theta_times_d: f64,
}

/// Time-domain check of the splitting for an `α = 0` distribution in one
/// time dimension (`p² = p₀²`).
///
/// The retarded function is the Fourier transform of `d̃_R` along the line
/// `p₀ + iγ`, where it is analytic; the leading `M₀/(p₀² − c)` tail is
/// subtracted and transformed exactly. The reference `D(t)` is the Fourier
/// transform of the discontinuity `R̃ − Ã`.
pub fn theta_agreement(d: &CausalDistribution, times: &[f64]) -> Result<Vec<ThetaSample>> {
    if d.alpha != 0 || !d.normalization.iter().all(|c| *c == 0.0) {
        return Err(Error::Invalid("time-domain check needs α = 0 without normalization".into()));
    }
    let rho = &d.density;
    let s0 = rho.threshold();
    let tol = Tolerance::new(1e-13, 1e-15);
    let mass0 = match rho.support_end() {
        Some(e) => integrate(|s: f64| rho.eval(s), s0, e, tol)?.value,
        None => integrate_to_infinity(|s: f64| rho.eval(s), s0, tol)?.value,
    };
    let c = s0 + 1.0;
    let rc = c.sqrt();
    let tmax = times.iter().fold(0.0f64, |a, t| a.max(t.abs())).max(1.0);
    let gamma = 0.5 / tmax;
    let cutoff = 400.0;
    let n_panels = 1600;
    let (gx, gw) = crate::numerics::quadrature::gauss_legendre::<f64>(24);
    // remainder r(z) = d̃_R(z) − M₀/(z² − c) sampled once on the contour
    let mut nodes = Vec::with_capacity(2 * n_panels * gx.len());
    let h = 2.0 * cutoff / (2 * n_panels) as f64;
    for k in 0..2 * n_panels {
        let a = -cutoff + k as f64 * h;
        for (x, w) in gx.iter().zip(&gw) {
            let p0 = a + 0.5 * h * (x + 1.0);
            let z = C64::new(p0, gamma);
            let r = dispersion_complex(rho, z * z)? - mass0 / (z * z - c);
            nodes.push((p0, 0.5 * h * w, r));
        }
    }
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let mut acc = C64::new(0.0, 0.0);
        for &(p0, w, r) in &nodes {
            acc += r * C64::from_polar(1.0, -p0 * t) * w;
        }
        let mut retarded = (acc * (gamma * t).exp() / (2.0 * PI)).re;
        if t > 0.0 {
            retarded += -mass0 * (rc * t).sin() / rc;
        }
        let dt = if t > 0.0 { commutator_time_function(rho, t)? } else { 0.0 };
        out.push(ThetaSample { t, retarded, theta_times_d: dt });
    }
    Ok(out)
}

/// `D(t) = (1/2π)∫ e^{−ip₀t} (R̃ − Ã)(p₀) dp₀ = −2∫_{√s₀}^∞ ρ(q²) sin(qt) dq`.
pub fn commutator_time_function(rho: &SpectralDensity, t: f64) -> Result<f64> {
    let q0 = rho.threshold().sqrt();
    let period = PI / t.abs().max(1e-12);
    let tol = Tolerance::new(1e-14, 1e-16);
    let mut total = 0.0;
    let mut a = q0;
    let end = rho.support_end().map(|e| e.sqrt());
    for _ in 0..200_000 {
        let b = match end {
            Some(e) if a >= e => break,
            Some(e) => (a + period).min(e),
            None => a + period,
        };
        let piece = integrate(|q: f64| rho.eval(q * q) * (q * t).sin(), a, b, tol)?.value;
        total += piece;
        let bound = rho.eval(b * b) * (b - a);
        a = b;
        if end.is_none() && bound < 1e-17 && piece.abs() < 1e-17 {
            break;
        }
    }
    Ok(-2.0 * total)
}
