//! Adiabatic-limit experiments on the ε-regularised chain kernels.
//!
//! A chain with `k` vacuum-polarization insertions between advanced
//! massless propagators, closed on the current `ψ̄γ^νψ`, is evaluated as
//!
//! ```text
//! Σ_{s₁,s₂} ∫d³p₁ d³p₂ ξ₁ξ₂ ū^±(p₁)γ^ν u^∓(p₂) (−Π̃^av(q))^k φ̃(q) / [q² + iε q₀]^{k+1}
//! ```
//!
//! with `q = ±p₁ ± p₂` on the mass shell. The tensor structure
//! `(q^μ q_ν/q² − δ^μ_ν)Π̃` of each insertion acts on the conserved current
//! as `−Π̃`, so the scalar form is exact.

pub mod decompose;
pub mod infrared;

use std::f64::consts::PI;

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::causal::{vacuum_polarization_closed_form, Normalization, Prescription};
use crate::error::{Error, Result};
use crate::fields::{u_spinor, v_spinor, DiracAlgebra};
use crate::fock::C64;
use crate::kernels::{Role, TestFunctionSpec};
use crate::numerics::extrapolate::fit_line;
use crate::numerics::quadrature::{composite_gauss, gauss_hermite, gauss_legendre_on};

/// Creation/annihilation choice for `ψ̄` (first) and `ψ` (second).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainBranch {
    pub first: Role,
    pub second: Role,
}

impl ChainBranch {
    pub const MIXED: ChainBranch = ChainBranch { first: Role::Creation, second: Role::Annihilation };

    /// Signs of `p₁` and `p₂` in `q`.
    pub fn momentum_signs(self) -> (f64, f64) {
        let s = |r| if r == Role::Creation { 1.0 } else { -1.0 };
        (s(self.first), s(self.second))
    }

    /// Whether the first factor carries `ū` (else `v̄`) and the second `v` (else `u`).
    fn spinor_kinds(self) -> (bool, bool) {
        (self.first == Role::Creation, self.second == Role::Creation)
    }
}

/// What sits in the insertions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum Insertion {
    /// Massive vacuum polarization with the given normalization.
    Massive { normalization: Normalization },
    /// Massless stand-in `Π̃ = (1/3)q²[ln|q²| + iπ sgn(q₀)θ(q²)]`, which has
    /// the logarithm and the jump across the cone but no natural choice.
    SyntheticJump,
}

impl Insertion {
    fn eval(&self, q_sq: f64, q0: f64, mass: f64) -> Result<C64> {
        match self {
            Insertion::Massive { normalization } => {
                vacuum_polarization_closed_form(q_sq, mass, Prescription::Advanced, q0, normalization)
            }
            Insertion::SyntheticJump => {
                if q_sq == 0.0 {
                    return Ok(C64::new(0.0, 0.0));
                }
                let jump = if q_sq > 0.0 { PI * q0.signum() } else { 0.0 };
                Ok(C64::new(q_sq.abs().ln(), jump) * (q_sq / 3.0))
            }
        }
    }
}

fn mixed_branch() -> ChainBranch {
    ChainBranch::MIXED
}

fn default_grid() -> Vec<f64> {
    (0..8).map(|j| 0.4 / 2f64.powi(j)).collect()
}

/// One chain experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub k: u32,
    pub mass: f64,
    pub insertion: Insertion,
    #[serde(default = "mixed_branch")]
    pub branch: ChainBranch,
    /// Free index `ν` of the current.
    #[serde(default)]
    pub component: usize,
    /// Decreasing `ε` values in units of the charged mass (of 1 when massless).
    #[serde(default = "default_grid")]
    pub epsilon_grid: Vec<f64>,
}

impl ChainSpec {
    pub fn new(k: u32, mass: f64, insertion: Insertion) -> Self {
        Self { k, mass, insertion, branch: ChainBranch::MIXED, component: 0, epsilon_grid: default_grid() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.component > 3 {
            return Err(Error::Invalid(format!("current component {} out of range", self.component)));
        }
        if self.epsilon_grid.windows(2).any(|w| !(w[1] < w[0])) || self.epsilon_grid.iter().any(|e| !(*e > 0.0)) {
            return Err(Error::Invalid("ε grid must be positive and strictly decreasing".into()));
        }
        match self.insertion {
            Insertion::Massive { .. } if !(self.mass > 0.0) => {
                Err(Error::Invalid("massive insertions need m > 0".into()))
            }
            Insertion::SyntheticJump if self.mass != 0.0 => {
                Err(Error::Invalid("the synthetic jump stands for a massless charged field; set m = 0".into()))
            }
            _ => Ok(()),
        }
    }

    /// `ε` values in momentum units.
    pub fn epsilons(&self) -> Vec<f64> {
        let unit = if self.mass > 0.0 { self.mass } else { 1.0 };
        self.epsilon_grid.iter().map(|e| e * unit).collect()
    }
}

/// Single-particle spinor test function `ξ(s, 𝐩) = w_s exp(−|𝐩 − c|²/(2σ²))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinorTest {
    pub centre: [f64; 3],
    pub width: f64,
    /// Complex weights `[re, im]` for spins 1 and 2.
    #[serde(default = "default_spins")]
    pub spins: [[f64; 2]; 2],
}

fn default_spins() -> [[f64; 2]; 2] {
    [[1.0, 0.0], [0.5, 0.0]]
}

impl SpinorTest {
    pub fn new(centre: [f64; 3], width: f64) -> Self {
        Self { centre, width, spins: default_spins() }
    }

    pub fn eval(&self, spin: usize, p: [f64; 3]) -> C64 {
        let d2: f64 = (0..3).map(|i| (p[i] - self.centre[i]).powi(2)).sum();
        let w = self.spins[spin - 1];
        C64::new(w[0], w[1]) * (-d2 / (2.0 * self.width * self.width)).exp()
    }

    fn reach(&self) -> f64 {
        norm3(self.centre) + 7.0 * self.width
    }
}

/// Sample points with weights for a product quadrature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentumRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl MomentumRule {
    /// Midpoint rule on the cube `centre ± half_width` with `n³` cells.
    pub fn midpoint(centre: [f64; 3], half_width: f64, n: usize) -> Self {
        let h = 2.0 * half_width / n as f64;
        let mut points = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let c = |a: usize, d: usize| centre[d] - half_width + (a as f64 + 0.5) * h;
                    points.push([c(i, 0), c(j, 1), c(k, 2)]);
                }
            }
        }
        let weights = vec![h * h * h; points.len()];
        Self { points, weights }
    }

    /// Tensor Gauss–Hermite rule adapted to `exp(−|𝐩 − c|²/(2σ²))`; the
    /// weights include the inverse Gaussian so the caller evaluates the full
    /// integrand.
    pub fn hermite(centre: [f64; 3], width: f64, n: usize) -> Self {
        let (x, w) = gauss_hermite::<f64>(n);
        let scale = std::f64::consts::SQRT_2 * width;
        let node = |i: usize| x[i] * scale;
        let weight = |i: usize| w[i] * (x[i] * x[i]).exp() * scale;
        let mut points = Vec::with_capacity(n * n * n);
        let mut weights = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    points.push([centre[0] + node(i), centre[1] + node(j), centre[2] + node(k)]);
                    weights.push(weight(i) * weight(j) * weight(k));
                }
            }
        }
        Self { points, weights }
    }

    /// Tensor Gauss–Legendre rule on the cube `centre ± half_width`.
    pub fn gauss(centre: [f64; 3], half_width: f64, n: usize) -> Self {
        let axes: Vec<(Vec<f64>, Vec<f64>)> =
            (0..3).map(|d| gauss_legendre_on(n, centre[d] - half_width, centre[d] + half_width)).collect();
        let mut points = Vec::with_capacity(n * n * n);
        let mut weights = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    points.push([axes[0].0[i], axes[1].0[j], axes[2].0[k]]);
                    weights.push(axes[0].1[i] * axes[1].1[j] * axes[2].1[k]);
                }
            }
        }
        Self { points, weights }
    }
}

/// Quadrature that follows the singular set: `𝐩₁` on a tensor rule and the
/// spatial part of `q` in spherical coordinates about zero, polar axis along
/// `𝐩₁`, with geometrically graded radial and polar panels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativeRule {
    pub outer_order: usize,
    pub radial_order: usize,
    pub radial_floor: f64,
    pub polar_order: usize,
    pub polar_floor: f64,
    pub azimuth: usize,
}

impl RelativeRule {
    pub fn standard() -> Self {
        Self { outer_order: 5, radial_order: 5, radial_floor: 1e-8, polar_order: 4, polar_floor: 1e-7, azimuth: 10 }
    }

    /// Next rule in the refinement sequence.
    pub fn refined(&self) -> Self {
        Self {
            outer_order: self.outer_order + 1,
            radial_order: self.radial_order + 2,
            radial_floor: self.radial_floor / 2.0,
            polar_order: self.polar_order + 2,
            polar_floor: self.polar_floor / 2.0,
            azimuth: self.azimuth * 3 / 2,
        }
    }

    fn radial(&self, reach: f64) -> (Vec<f64>, Vec<f64>) {
        let mut edges = vec![0.0, self.radial_floor];
        while *edges.last().unwrap() * 2.0 < reach {
            let e = edges.last().unwrap() * 2.0;
            edges.push(e);
        }
        edges.push(reach);
        composite_gauss(&edges, self.radial_order)
    }

    fn polar(&self) -> (Vec<f64>, Vec<f64>) {
        let mut half = vec![0.0, self.polar_floor];
        while *half.last().unwrap() * 2.0 < PI / 2.0 {
            let e = half.last().unwrap() * 2.0;
            half.push(e);
        }
        half.push(PI / 2.0);
        let mut edges = half.clone();
        edges.extend(half.iter().rev().skip(1).map(|t| PI - t));
        composite_gauss(&edges, self.polar_order)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum ChainQuadrature {
    /// Plain double sum over two independent sample sets.
    Product { first: MomentumRule, second: MomentumRule },
    Relative(RelativeRule),
}

/// Everything in the integrand except the `ε`-dependent denominator.
struct Integrand<'a> {
    spec: &'a ChainSpec,
    xi1: &'a SpinorTest,
    xi2: &'a SpinorTest,
    phi: &'a TestFunctionSpec,
    vertex: Matrix4<C64>,
}

impl Integrand<'_> {
    fn new<'a>(spec: &'a ChainSpec, xi1: &'a SpinorTest, xi2: &'a SpinorTest, phi: &'a TestFunctionSpec) -> Integrand<'a> {
        let alg = DiracAlgebra::chiral();
        Integrand { spec, xi1, xi2, phi, vertex: alg.gamma[0] * alg.gamma[spec.component] }
    }

    /// `ξ₁(s, 𝐩₁) w_s†γ⁰γ^ν` for both spins, stored as columns.
    fn first(&self, p1: [f64; 3]) -> Result<[Vector4<C64>; 2]> {
        let (first_u, _) = self.spec.branch.spinor_kinds();
        let mut rows = [Vector4::zeros(), Vector4::zeros()];
        for s in 1..=2 {
            let w = if first_u { u_spinor(s, p1, self.spec.mass)? } else { v_spinor(s, p1, self.spec.mass)? };
            let xi = self.xi1.eval(s, p1);
            rows[s - 1] = (w.adjoint() * self.vertex).transpose() * xi;
        }
        Ok(rows)
    }

    fn current(&self, rows: &[Vector4<C64>; 2], p2: [f64; 3]) -> Result<C64> {
        let (_, second_v) = self.spec.branch.spinor_kinds();
        let mut j = C64::new(0.0, 0.0);
        for s in 1..=2 {
            let xi = self.xi2.eval(s, p2);
            if xi == C64::new(0.0, 0.0) {
                continue;
            }
            let w = if second_v { v_spinor(s, p2, self.spec.mass)? } else { u_spinor(s, p2, self.spec.mass)? };
            j += (rows[0] + rows[1]).dot(&w) * xi;
        }
        Ok(j)
    }

    /// Numerator at `q = (q₀, 𝐪)` and `q²`.
    fn numerator(&self, j: C64, q0: f64, q: [f64; 3]) -> Result<(C64, f64)> {
        let q_sq = q0 * q0 - dot3(q, q);
        let pi = self.spec.insertion.eval(q_sq, q0, self.spec.mass)?;
        let phi = self.phi.eval([q0, q[0], q[1], q[2]]);
        Ok((j * (-pi).powu(self.spec.k) * phi, q_sq))
    }
}

/// Chain kernel at every `ε` of `epsilons` in one pass.
pub fn chain_values(
    spec: &ChainSpec,
    xi1: &SpinorTest,
    xi2: &SpinorTest,
    phi: &TestFunctionSpec,
    epsilons: &[f64],
    quadrature: &ChainQuadrature,
) -> Result<Vec<C64>> {
    spec.validate()?;
    if epsilons.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::Invalid("ε must be positive; the ε = 0 integrand is not defined on the cone".into()));
    }
    let f = Integrand::new(spec, xi1, xi2, phi);
    let (s1, s2) = spec.branch.momentum_signs();
    let power = spec.k as i32 + 1;
    let mut acc = vec![C64::new(0.0, 0.0); epsilons.len()];
    let mut add = |w: f64, num: C64, q_sq: f64, q0: f64| -> Result<()> {
        if q_sq == 0.0 && q0 == 0.0 {
            return Err(Error::Singular("sample point with q = 0".into()));
        }
        for (a, e) in acc.iter_mut().zip(epsilons) {
            *a += num * w / C64::new(q_sq, e * q0).powi(power);
        }
        Ok(())
    };
    let energy = |p: [f64; 3]| (dot3(p, p) + spec.mass * spec.mass).sqrt();
    match quadrature {
        ChainQuadrature::Product { first, second } => {
            for (p1, w1) in first.points.iter().zip(&first.weights) {
                let rows = f.first(*p1)?;
                let e1 = energy(*p1);
                for (p2, w2) in second.points.iter().zip(&second.weights) {
                    let j = f.current(&rows, *p2)?;
                    let q0 = s1 * e1 + s2 * energy(*p2);
                    let q = [0, 1, 2].map(|i| s1 * p1[i] + s2 * p2[i]);
                    let (num, q_sq) = f.numerator(j, q0, q)?;
                    add(w1 * w2, num, q_sq, q0)?;
                }
            }
        }
        ChainQuadrature::Relative(rule) => {
            let outer = MomentumRule::hermite(xi1.centre, xi1.width, rule.outer_order);
            let (thetas, wt) = rule.polar();
            let (cos_phi, sin_phi): (Vec<f64>, Vec<f64>) =
                (0..rule.azimuth).map(|a| (2.0 * PI * a as f64 / rule.azimuth as f64).sin_cos()).map(|(s, c)| (c, s)).unzip();
            let wphi = 2.0 * PI / rule.azimuth as f64;
            for (p1, w1) in outer.points.iter().zip(&outer.weights) {
                let rows = f.first(*p1)?;
                let e1 = energy(*p1);
                let (e_1, e_2, axis) = frame(*p1);
                let reach = norm3(*p1) + xi2.reach();
                let (radii, wr) = rule.radial(reach);
                for (r, wr) in radii.iter().zip(&wr) {
                    for (th, wth) in thetas.iter().zip(&wt) {
                        let (st, ct) = th.sin_cos();
                        for a in 0..rule.azimuth {
                            let dir = [0, 1, 2].map(|i| st * (cos_phi[a] * e_1[i] + sin_phi[a] * e_2[i]) + ct * axis[i]);
                            let q = dir.map(|d| r * d);
                            // q = s₁p₁ + s₂p₂
                            let p2 = [0, 1, 2].map(|i| s2 * (q[i] - s1 * p1[i]));
                            let j = f.current(&rows, p2)?;
                            if j == C64::new(0.0, 0.0) {
                                continue;
                            }
                            let q0 = s1 * e1 + s2 * energy(p2);
                            let (num, q_sq) = f.numerator(j, q0, q)?;
                            add(w1 * wr * wth * wphi * r * r * st, num, q_sq, q0)?;
                        }
                    }
                }
            }
        }
    }
    Ok(acc)
}

/// Chain kernel at a single `ε > 0`.
pub fn chain_kernel(
    spec: &ChainSpec,
    xi1: &SpinorTest,
    xi2: &SpinorTest,
    phi: &TestFunctionSpec,
    epsilon: f64,
    quadrature: &ChainQuadrature,
) -> Result<C64> {
    Ok(chain_values(spec, xi1, xi2, phi, &[epsilon], quadrature)?[0])
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm3(a: [f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

/// Orthonormal frame with the third vector along `p` (or `ẑ` at zero).
fn frame(p: [f64; 3]) -> ([f64; 3], [f64; 3], [f64; 3]) {
    let n = norm3(p);
    let axis = if n > 0.0 { p.map(|x| x / n) } else { [0.0, 0.0, 1.0] };
    let helper = if axis[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let proj = dot3(helper, axis);
    let mut e1 = [0, 1, 2].map(|i| helper[i] - proj * axis[i]);
    let n1 = norm3(e1);
    e1 = e1.map(|x| x / n1);
    let e2 = [
        axis[1] * e1[2] - axis[2] * e1[1],
        axis[2] * e1[0] - axis[0] * e1[2],
        axis[0] * e1[1] - axis[1] * e1[0],
    ];
    (e1, e2, axis)
}

/// Outcome of an `ε → 0` study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Converged { value: [f64; 2], error: f64 },
    Diverged { growth_exponent: f64 },
}

impl Verdict {
    pub fn is_converged(&self) -> bool {
        matches!(self, Verdict::Converged { .. })
    }
}

/// Thresholds of the verdict rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerdictRule {
    /// Successive differences must shrink by at least this factor.
    pub max_ratio: f64,
    /// Number of trailing ratios that must satisfy it.
    pub steps: usize,
    /// Minimal `ε_first/ε_last`.
    pub min_span: f64,
}

impl Default for VerdictRule {
    fn default() -> Self {
        Self { max_ratio: 0.7, steps: 3, min_span: 100.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonFamily {
    pub epsilons: Vec<f64>,
    pub values: Vec<[f64; 2]>,
    pub differences: Vec<f64>,
    pub ratios: Vec<f64>,
    pub verdict: Verdict,
}

/// Converged iff the last `steps` ratios of successive differences are
/// below `max_ratio`; the limit is then the geometric tail extrapolation.
/// Otherwise diverged, with the growth exponent fitted to
/// `log|v_i − v_0|` against `log(1/ε_i)`.
pub fn epsilon_verdict(epsilons: &[f64], values: &[C64], rule: &VerdictRule) -> Result<EpsilonFamily> {
    let n = epsilons.len();
    if n != values.len() {
        return Err(Error::DimensionMismatch { expected: n, got: values.len() });
    }
    if n < rule.steps + 2 || n < 4 {
        return Err(Error::Invalid(format!("need at least {} ε values, got {n}", (rule.steps + 2).max(4))));
    }
    if epsilons.windows(2).any(|w| !(w[1] < w[0])) || !(epsilons[n - 1] > 0.0) {
        return Err(Error::Invalid("ε values must be positive and strictly decreasing".into()));
    }
    if epsilons[0] / epsilons[n - 1] < rule.min_span {
        return Err(Error::Invalid(format!(
            "ε values span a factor {:.1}, below the required {}",
            epsilons[0] / epsilons[n - 1],
            rule.min_span
        )));
    }
    let steps: Vec<C64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let differences: Vec<f64> = steps.iter().map(|d| d.norm()).collect();
    let scale = values.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let negligible = |d: f64| d <= 1e-13 * scale;
    let ratios: Vec<f64> = differences
        .windows(2)
        .map(|w| if negligible(w[1]) { 0.0 } else if negligible(w[0]) { f64::INFINITY } else { w[1] / w[0] })
        .collect();
    let tail = &ratios[ratios.len() - rule.steps..];
    let verdict = if tail.iter().all(|r| *r < rule.max_ratio) {
        let r = *tail.last().unwrap();
        let last = *steps.last().unwrap();
        let rest = last * (r / (1.0 - r));
        let v = values[n - 1] + rest;
        Verdict::Converged { value: [v.re, v.im], error: rest.norm().max(1e-16 * scale) }
    } else {
        let xs: Vec<f64> = epsilons[1..].iter().map(|e| (1.0 / e).ln()).collect();
        let ys: Vec<f64> = values[1..].iter().map(|v| (*v - values[0]).norm().max(f64::MIN_POSITIVE).ln()).collect();
        Verdict::Diverged { growth_exponent: fit_line(&xs, &ys).slope }
    };
    Ok(EpsilonFamily {
        epsilons: epsilons.to_vec(),
        values: values.iter().map(|v| [v.re, v.im]).collect(),
        differences,
        ratios,
        verdict,
    })
}

/// Chain kernel along the chain's `ε` grid and its verdict.
pub fn chain_family(
    spec: &ChainSpec,
    xi1: &SpinorTest,
    xi2: &SpinorTest,
    phi: &TestFunctionSpec,
    quadrature: &ChainQuadrature,
    rule: &VerdictRule,
) -> Result<EpsilonFamily> {
    let eps = spec.epsilons();
    let values = chain_values(spec, xi1, xi2, phi, &eps, quadrature)?;
    epsilon_verdict(&eps, &values, rule)
}
