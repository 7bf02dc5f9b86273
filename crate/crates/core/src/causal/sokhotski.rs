//! Boundary values of `1/(υ + iε)^{k+1}` paired with test functions.
//!
//! For smooth `f` the pairing converges as `ε → 0` to
//! `f.p.∫ f(υ) υ^{−(k+1)} dυ − iπ (−1)^k/k! ⟨δ^{(k)}, f⟩`; against a test
//! function with a jump at the origin it diverges logarithmically.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::C64;
use crate::numerics::extrapolate::richardson;
use crate::numerics::quadrature::{integrate, Tolerance};

/// Test profiles with known boundary values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case")]
pub enum SokhotskiTest {
    /// `(c₀ + c₁υ + c₂υ²) e^{−υ²/(2σ²)}`.
    GaussianPolynomial { coefficients: [f64; 3], width: f64 },
    /// `θ(υ) e^{−υ²/(2σ²)}`.
    ThetaGaussian { width: f64 },
}

impl SokhotskiTest {
    pub fn eval(&self, u: f64) -> f64 {
        match *self {
            SokhotskiTest::GaussianPolynomial { coefficients: c, width } => {
                (c[0] + c[1] * u + c[2] * u * u) * (-u * u / (2.0 * width * width)).exp()
            }
            SokhotskiTest::ThetaGaussian { width } => {
                if u >= 0.0 {
                    (-u * u / (2.0 * width * width)).exp()
                } else {
                    0.0
                }
            }
        }
    }

    fn width(&self) -> f64 {
        match *self {
            SokhotskiTest::GaussianPolynomial { width, .. } | SokhotskiTest::ThetaGaussian { width } => width,
        }
    }

    /// Closed-form limit split into the finite-part and delta contributions.
    pub fn closed_form(&self, k: u32) -> Option<(f64, f64)> {
        let SokhotskiTest::GaussianPolynomial { coefficients: c, width: s } = *self else {
            return None;
        };
        let g = s * (2.0 * PI).sqrt();
        match k {
            0 => Some((c[1] * g, -PI * c[0])),
            1 => Some((-c[0] * (2.0 * PI).sqrt() / s + c[2] * g, -PI * c[1])),
            _ => None,
        }
    }
}

/// `∫ f(υ)/(υ + iε)^{k+1} dυ`.
pub fn regularised_pairing(test: &SokhotskiTest, k: u32, epsilon: f64) -> Result<C64> {
    if !(epsilon > 0.0) {
        return Err(Error::Invalid("ε must be positive".into()));
    }
    let l = 14.0 * test.width();
    let mut edges = vec![-l];
    for m in [-1.0, -0.1, -0.01] {
        let e = m * l.min(1.0) * 10.0 * epsilon / 0.1;
        if e > -l && e < 0.0 {
            edges.push(e);
        }
    }
    edges.extend([-epsilon, 0.0, epsilon]);
    for m in [0.01, 0.1, 1.0] {
        let e = m * l.min(1.0) * 10.0 * epsilon / 0.1;
        if e > epsilon && e < l {
            edges.push(e);
        }
    }
    edges.push(l);
    edges.sort_by(|a, b| a.total_cmp(b));
    edges.dedup();
    let power = (k + 1) as i32;
    let f = |u: f64| C64::new(test.eval(u), 0.0) / C64::new(u, epsilon).powi(power);
    let mut tol = Tolerance::new(1e-13, 1e-15);
    tol.max_intervals = 10_000;
    let mut total = C64::new(0.0, 0.0);
    for w in edges.windows(2) {
        total += integrate(f, w[0], w[1], tol)?.value;
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SokhotskiReport {
    pub k: u32,
    pub epsilons: Vec<f64>,
    pub values: Vec<[f64; 2]>,
    /// Magnitudes of successive differences.
    pub differences: Vec<f64>,
    /// Ratios of successive differences; below one when the sequence contracts.
    pub ratios: Vec<f64>,
    pub contracting: bool,
    /// Richardson estimate of the limit (finite-part real, delta part imaginary).
    pub limit: Option<[f64; 2]>,
    pub finite_part: Option<f64>,
    pub delta_part: Option<f64>,
}

/// Pairings along a decreasing `ε` sequence, their Cauchy differences and,
/// when they contract, a Richardson estimate of the limit.
pub fn sokhotski_limit(test: &SokhotskiTest, k: u32, epsilons: &[f64]) -> Result<SokhotskiReport> {
    if epsilons.len() < 3 || epsilons.windows(2).any(|w| !(w[1] < w[0])) || epsilons.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::Invalid("need at least three strictly decreasing positive ε".into()));
    }
    let values: Vec<C64> = epsilons.iter().map(|&e| regularised_pairing(test, k, e)).collect::<Result<_>>()?;
    let differences: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
    let ratios: Vec<f64> = differences.windows(2).map(|w| w[1] / w[0]).collect();
    let contracting = ratios.iter().all(|r| *r < 0.75);
    let limit = if contracting {
        let re: Vec<f64> = values.iter().map(|v| v.re).collect();
        let im: Vec<f64> = values.iter().map(|v| v.im).collect();
        Some([richardson(epsilons, &re, 1.0), richardson(epsilons, &im, 1.0)])
    } else {
        None
    };
    Ok(SokhotskiReport {
        k,
        epsilons: epsilons.to_vec(),
        values: values.iter().map(|v| [v.re, v.im]).collect(),
        differences,
        ratios,
        contracting,
        finite_part: limit.map(|l| l[0]),
        delta_part: limit.map(|l| l[1]),
        limit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn halving(n: usize) -> Vec<f64> {
        (0..n).map(|j| 0.08 * 0.5f64.powi(j as i32)).collect()
    }

    #[test]
    fn smooth_tests_reach_closed_forms() {
        let t = SokhotskiTest::GaussianPolynomial { coefficients: [1.0, -0.5, 0.3], width: 0.8 };
        for k in 0..2 {
            let r = sokhotski_limit(&t, k, &halving(6)).unwrap();
            let (fp, dp) = t.closed_form(k).unwrap();
            let l = r.limit.unwrap();
            assert!((l[0] - fp).abs() < 1e-6 && (l[1] - dp).abs() < 1e-6, "k={k}: {l:?} vs {fp}, {dp}");
        }
    }

    #[test]
    fn jump_prevents_convergence() {
        let t = SokhotskiTest::ThetaGaussian { width: 1.0 };
        let r = sokhotski_limit(&t, 1, &halving(6)).unwrap();
        assert!(!r.contracting);
        assert!(r.limit.is_none());
    }
}
