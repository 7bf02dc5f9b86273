//! Position-space support probe in one space and one time dimension.
//!
//! The regularised commutator function of a free field of mass `m`,
//!
//! ```text
//! D_δ(t, z) = ∫_0^∞ sin(ω_k t)/ω_k · cos(kz) · e^{−δ²k²/2} dk,   ω_k = √(k² + m²),
//! ```
//!
//! is the commutator function smeared in `z` with a Gaussian of width `δ`.
//! It must vanish (up to Gaussian tails) outside the light cone widened by
//! a few `δ`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::quadrature::{integrate, Tolerance};

/// Closed form for `m = 0`: `(π/4)[erf((t+z)/(√2δ)) + erf((t−z)/(√2δ))]`.
pub fn massless_commutator_closed_form(t: f64, z: f64, regulator: f64) -> f64 {
    let s = std::f64::consts::SQRT_2 * regulator;
    PI / 4.0 * (libm::erf((t + z) / s) + libm::erf((t - z) / s))
}

/// `D_δ(t, z)` by quadrature in `k`.
pub fn regularised_commutator(t: f64, z: f64, mass: f64, regulator: f64) -> Result<f64> {
    if !(regulator > 0.0) || mass < 0.0 {
        return Err(Error::Invalid("support probe needs δ > 0 and m ≥ 0".into()));
    }
    let k_max = (80.0f64).sqrt() / regulator;
    let f = |k: f64| {
        let w = (k * k + mass * mass).sqrt();
        let kernel = if w == 0.0 { t } else { (w * t).sin() / w };
        kernel * (k * z).cos() * (-0.5 * regulator * regulator * k * k).exp()
    };
    // panels of one oscillation period keep the adaptive rule local
    let period = 2.0 * PI / (t.abs() + z.abs() + mass).max(1e-6);
    let n = ((k_max / period).ceil() as usize).clamp(1, 100_000);
    let mut tol = Tolerance::new(1e-13, 1e-15);
    tol.max_intervals = 200;
    let mut total = 0.0;
    for j in 0..n {
        let a = k_max * j as f64 / n as f64;
        let b = k_max * (j + 1) as f64 / n as f64;
        total += integrate(f, a, b, tol)?.value;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportSample {
    pub t: f64,
    pub z: f64,
    pub value: f64,
    /// `|z| − |t|`; positive outside the cone.
    pub spacelike_separation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportReport {
    pub regulator: f64,
    pub margin: f64,
    pub samples: Vec<SupportSample>,
    /// Largest `|D|` at points farther than `margin` outside the cone.
    pub max_outside: f64,
    /// Smallest `|D|` at points farther than `margin` inside the cone.
    pub min_inside: Option<f64>,
    pub supported_in_cone: bool,
}

/// Samples `D_δ` at `points = [(t, z)]` and checks that it is below `tol`
/// wherever `|z| − |t| > margin·δ`.
pub fn causal_support_probe(
    mass: f64,
    regulator: f64,
    points: &[(f64, f64)],
    margin: f64,
    tol: f64,
) -> Result<SupportReport> {
    let mut samples = Vec::with_capacity(points.len());
    let mut max_outside: f64 = 0.0;
    let mut min_inside: Option<f64> = None;
    for &(t, z) in points {
        let value = regularised_commutator(t, z, mass, regulator)?;
        let sep = z.abs() - t.abs();
        if sep > margin * regulator {
            max_outside = max_outside.max(value.abs());
        } else if -sep > margin * regulator {
            min_inside = Some(min_inside.map_or(value.abs(), |m| m.min(value.abs())));
        }
        samples.push(SupportSample { t, z, value, spacelike_separation: sep });
    }
    Ok(SupportReport {
        regulator,
        margin,
        samples,
        max_outside,
        min_inside,
        supported_in_cone: max_outside < tol,
    })
}
