//! The first-order interacting Dirac field kernel, infrared norm probes and
//! the class A/B verdict.
//!
//! Branch signs: `σ′` for the photon and `σ` for the electron, `+1` for
//! creation and `−1` for annihilation. They enter the test-function argument
//! `(σ′|𝐩′| + σp₀, σ′𝐩′ + σ𝐩)` and the numerator momenta
//! `m + γ^μ(−σ′p′_μ − σp_μ)`, which reproduces the written-out
//! annihilation–annihilation term. The remaining overall sign is fixed so
//! that every branch shares the denominator `|𝐩′|(⟨𝐩′|𝐩⟩ − |𝐩′|p₀(𝐩))`;
//! see [`BRANCH_CONVENTION`].

use std::f64::consts::PI;

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use super::SpinorTest;
use crate::error::{Error, Result};
use crate::fields::{u_spinor, DiracAlgebra};
use crate::fock::C64;
use crate::kernels::{Role, TestFunctionSpec};
use crate::numerics::extrapolate::fit_line;
use crate::numerics::quadrature::{composite_gauss, gauss_legendre_on};
use crate::wick::OperatorClass;

/// Reported with every kernel evaluation so the choice stays visible.
pub const BRANCH_CONVENTION: &str = "only the annihilation-annihilation branch is written out; \
the other three follow from flipping the momentum signs in the test-function argument and the \
numerator, the overall sign is chosen so all branches share the annihilation-annihilation \
denominator, and u_s is kept for every electron branch";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PsiIntBranch {
    pub photon: Role,
    pub electron: Role,
}

impl PsiIntBranch {
    pub const ANNIHILATION: PsiIntBranch = PsiIntBranch { photon: Role::Annihilation, electron: Role::Annihilation };

    fn signs(self) -> (f64, f64) {
        let s = |r| if r == Role::Creation { 1.0 } else { -1.0 };
        (s(self.photon), s(self.electron))
    }

    pub fn flipped(self) -> Self {
        let f = |r| if r == Role::Creation { Role::Annihilation } else { Role::Creation };
        Self { photon: f(self.photon), electron: f(self.electron) }
    }
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// `|𝐩′|(⟨𝐩′|𝐩⟩ − |𝐩′|p₀(𝐩))`.
pub fn psi_int_denominator(p_prime: [f64; 3], p: [f64; 3], mass: f64) -> f64 {
    let k = dot3(p_prime, p_prime).sqrt();
    let e = (dot3(p, p) + mass * mass).sqrt();
    k * (dot3(p_prime, p) - k * e)
}

/// Shared pieces of the kernel so the quadratures do not rebuild the algebra.
pub struct PsiIntKernel {
    pub branch: PsiIntBranch,
    pub mass: f64,
    pub phi: TestFunctionSpec,
    alg: DiracAlgebra,
}

impl PsiIntKernel {
    pub fn new(branch: PsiIntBranch, mass: f64, phi: TestFunctionSpec) -> Result<Self> {
        if !(mass > 0.0) {
            return Err(Error::Invalid("the first-order kernel needs m > 0".into()));
        }
        Ok(Self { branch, mass, phi, alg: DiracAlgebra::chiral() })
    }

    /// Spinor-valued kernel at photon index `ν′`, photon momentum `𝐩′`,
    /// electron spin `s ∈ {1, 2}` and momentum `𝐩`.
    pub fn eval(&self, nu_prime: usize, p_prime: [f64; 3], s: usize, p: [f64; 3]) -> Result<Vector4<C64>> {
        if nu_prime > 3 {
            return Err(Error::Invalid(format!("photon index {nu_prime} out of range")));
        }
        let u = u_spinor(s, p, self.mass)?;
        self.eval_with_spinor(nu_prime, p_prime, &u, p)
    }

    fn eval_with_spinor(&self, nu_prime: usize, p_prime: [f64; 3], u: &Vector4<C64>, p: [f64; 3]) -> Result<Vector4<C64>> {
        let k = dot3(p_prime, p_prime).sqrt();
        if k == 0.0 {
            return Err(Error::Singular("photon momentum 0".into()));
        }
        let den = psi_int_denominator(p_prime, p, self.mass);
        if den == 0.0 {
            return Err(Error::Singular("collinear infrared configuration".into()));
        }
        let e = (dot3(p, p) + self.mass * self.mass).sqrt();
        let (sp, se) = self.branch.signs();
        let arg = [sp * k + se * e, sp * p_prime[0] + se * p[0], sp * p_prime[1] + se * p[1], sp * p_prime[2] + se * p[2]];
        let phi = self.phi.eval(arg);
        if phi == C64::new(0.0, 0.0) {
            return Ok(Vector4::zeros());
        }
        let a = arg.map(|x| -x);
        let num: Matrix4<C64> = (Matrix4::identity() * C64::new(self.mass, 0.0) + self.alg.slash(a)) * self.alg.gamma[nu_prime];
        Ok(num * u * (phi / den))
    }
}

/// Photon test function `ξ′(ν′, 𝐩′) = w_{ν′} exp(−|𝐩′ − c|²/(2σ²))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotonTest {
    pub centre: [f64; 3],
    pub width: f64,
    pub polarizations: [f64; 4],
}

impl PhotonTest {
    pub fn eval(&self, nu: usize, p: [f64; 3]) -> f64 {
        let d2: f64 = (0..3).map(|i| (p[i] - self.centre[i]).powi(2)).sum();
        self.polarizations[nu] * (-d2 / (2.0 * self.width * self.width)).exp()
    }
}

/// Spherical rule in `𝐩′` (about zero) times a tensor rule in `𝐩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairingRule {
    pub radial_panels: usize,
    pub radial_order: usize,
    pub polar_order: usize,
    pub azimuth: usize,
    pub outer_order: usize,
}

impl PairingRule {
    pub fn standard() -> Self {
        Self { radial_panels: 4, radial_order: 6, polar_order: 10, azimuth: 10, outer_order: 6 }
    }

    pub fn refined(&self) -> Self {
        Self {
            radial_panels: self.radial_panels * 2,
            radial_order: self.radial_order,
            polar_order: self.polar_order + 4,
            azimuth: self.azimuth + 4,
            outer_order: self.outer_order + 2,
        }
    }
}

/// `Σ_{ν′,s} ∫d³p′ d³p ξ′(ν′,𝐩′) ξ(s,𝐩) K(ν′,𝐩′,s,𝐩)`, a Dirac spinor.
pub fn psi_int_pairing(kernel: &PsiIntKernel, photon: &PhotonTest, electron: &SpinorTest, rule: &PairingRule) -> Result<Vector4<C64>> {
    let reach = dot3(photon.centre, photon.centre).sqrt() + 7.0 * photon.width;
    let edges: Vec<f64> = (0..=rule.radial_panels).map(|j| reach * j as f64 / rule.radial_panels as f64).collect();
    let (radii, wr) = composite_gauss(&edges, rule.radial_order);
    let (thetas, wt) = gauss_legendre_on(rule.polar_order, 0.0, PI);
    let wphi = 2.0 * PI / rule.azimuth as f64;
    let outer = super::MomentumRule::hermite(electron.centre, electron.width, rule.outer_order);
    let mut total = Vector4::<C64>::zeros();
    for (p, wp) in outer.points.iter().zip(&outer.weights) {
        let spinors = [u_spinor(1, *p, kernel.mass)?, u_spinor(2, *p, kernel.mass)?];
        let xi = [electron.eval(1, *p), electron.eval(2, *p)];
        let u = spinors[0] * xi[0] + spinors[1] * xi[1];
        for (r, w_r) in radii.iter().zip(&wr) {
            for (th, w_t) in thetas.iter().zip(&wt) {
                let (st, ct) = th.sin_cos();
                for a in 0..rule.azimuth {
                    let (sa, ca) = (2.0 * PI * a as f64 / rule.azimuth as f64).sin_cos();
                    let q = [r * st * ca, r * st * sa, r * ct];
                    let w = wp * w_r * w_t * wphi * r * r * st;
                    for nu in 0..4 {
                        let xp = photon.eval(nu, q);
                        if xp == 0.0 {
                            continue;
                        }
                        total += kernel.eval_with_spinor(nu, q, &u, *p)? * C64::new(w * xp, 0.0);
                    }
                }
            }
        }
    }
    Ok(total)
}

/// Pairings along a refinement sequence and their relative changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementStudy {
    pub values: Vec<[[f64; 2]; 4]>,
    pub relative_changes: Vec<f64>,
}

pub fn psi_int_refinement(
    kernel: &PsiIntKernel,
    photon: &PhotonTest,
    electron: &SpinorTest,
    start: &PairingRule,
    levels: usize,
) -> Result<RefinementStudy> {
    let mut rule = *start;
    let mut vals: Vec<Vector4<C64>> = Vec::with_capacity(levels);
    for _ in 0..levels {
        vals.push(psi_int_pairing(kernel, photon, electron, &rule)?);
        rule = rule.refined();
    }
    let relative_changes = vals.windows(2).map(|w| (w[1] - w[0]).norm() / w[1].norm()).collect();
    Ok(RefinementStudy { values: vals.iter().map(|v| [0, 1, 2, 3].map(|i| [v[i].re, v[i].im])).collect(), relative_changes })
}

/// A kernel in an infrared momentum `𝐪` and an optional spectator `𝐩`.
pub trait TwoBodyKernel {
    /// `Σ |K|²` over all discrete labels.
    fn squared_magnitude(&self, q: [f64; 3], p: [f64; 3]) -> Result<f64>;
    /// Cube `(centre, half width)` carrying the spectator dependence; `None`
    /// for single-particle kernels.
    fn spectator(&self) -> Option<([f64; 3], f64)>;
    /// Radius beyond which the kernel is negligible in `𝐪`.
    fn extent(&self) -> f64;
}

impl TwoBodyKernel for PsiIntKernel {
    fn squared_magnitude(&self, q: [f64; 3], p: [f64; 3]) -> Result<f64> {
        let mut total = 0.0;
        for s in 1..=2 {
            let u = u_spinor(s, p, self.mass)?;
            for nu in 0..4 {
                total += self.eval_with_spinor(nu, q, &u, p)?.norm_squared();
            }
        }
        Ok(total)
    }

    fn spectator(&self) -> Option<([f64; 3], f64)> {
        Some(([0.0; 3], self.phi.reach()))
    }

    fn extent(&self) -> f64 {
        self.phi.reach()
    }
}

/// One-particle kernel of the smeared free photon field,
/// `(2π)^{−3/2}(2|𝐪|)^{−1/2} φ̃(|𝐪|, 𝐪)`.
pub struct FreeFieldKernel {
    pub phi: TestFunctionSpec,
}

impl TwoBodyKernel for FreeFieldKernel {
    fn squared_magnitude(&self, q: [f64; 3], _p: [f64; 3]) -> Result<f64> {
        let k = dot3(q, q).sqrt();
        Ok(self.phi.eval([k, q[0], q[1], q[2]]).norm_sqr() / ((2.0 * PI).powi(3) * 2.0 * k))
    }

    fn spectator(&self) -> Option<([f64; 3], f64)> {
        None
    }

    fn extent(&self) -> f64 {
        self.phi.reach()
    }
}

/// First-order interacting potential at `g = 1` on the mixed branch:
/// `ū(𝐩₁)γ^ν u(𝐩₁ − 𝐪) φ̃(q)/q²` with the infrared variable `𝐪 = 𝐩₁ − 𝐩₂`
/// and `𝐩₁` as spectator.
pub struct FirstOrderPotentialKernel {
    pub mass: f64,
    pub phi: TestFunctionSpec,
    alg: DiracAlgebra,
}

impl FirstOrderPotentialKernel {
    pub fn new(mass: f64, phi: TestFunctionSpec) -> Result<Self> {
        if !(mass > 0.0) {
            return Err(Error::Invalid("the first-order potential kernel needs m > 0".into()));
        }
        Ok(Self { mass, phi, alg: DiracAlgebra::chiral() })
    }
}

impl TwoBodyKernel for FirstOrderPotentialKernel {
    fn squared_magnitude(&self, q: [f64; 3], p: [f64; 3]) -> Result<f64> {
        let p2 = [p[0] - q[0], p[1] - q[1], p[2] - q[2]];
        let e1 = (dot3(p, p) + self.mass * self.mass).sqrt();
        let e2 = (dot3(p2, p2) + self.mass * self.mass).sqrt();
        let q0 = e1 - e2;
        let q_sq = q0 * q0 - dot3(q, q);
        if q_sq == 0.0 {
            return Err(Error::Singular("q = 0 sample".into()));
        }
        let phi = self.phi.eval([q0, q[0], q[1], q[2]]);
        if phi == C64::new(0.0, 0.0) {
            return Ok(0.0);
        }
        let g0 = &self.alg.gamma[0];
        let mut total = 0.0;
        for s1 in 1..=2 {
            let bar = u_spinor(s1, p, self.mass)?.adjoint() * g0;
            for s2 in 1..=2 {
                let u2 = u_spinor(s2, p2, self.mass)?;
                for nu in 0..4 {
                    total += ((bar * self.alg.gamma[nu] * u2)[0] * phi / q_sq).norm_sqr();
                }
            }
        }
        Ok(total)
    }

    fn spectator(&self) -> Option<([f64; 3], f64)> {
        Some(([0.0; 3], self.phi.reach().max(3.0)))
    }

    fn extent(&self) -> f64 {
        self.phi.reach()
    }
}

/// `|K|² = |𝐪|^{−2a}` on the ball `|𝐪| < radius`; the squared norm above
/// `λ` is `4π(radius^{3−2a} − λ^{3−2a})/(3 − 2a)`.
pub struct PowerLawKernel {
    pub exponent: f64,
    pub radius: f64,
}

impl TwoBodyKernel for PowerLawKernel {
    fn squared_magnitude(&self, q: [f64; 3], _p: [f64; 3]) -> Result<f64> {
        let r = dot3(q, q).sqrt();
        Ok(if r < self.radius { r.powf(-2.0 * self.exponent) } else { 0.0 })
    }

    fn spectator(&self) -> Option<([f64; 3], f64)> {
        None
    }

    fn extent(&self) -> f64 {
        self.radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeRule {
    pub radial_order: usize,
    pub polar_order: usize,
    pub azimuth: usize,
    pub spectator_order: usize,
}

impl ProbeRule {
    pub fn standard() -> Self {
        Self { radial_order: 8, polar_order: 8, azimuth: 8, spectator_order: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrReport {
    pub cutoffs: Vec<f64>,
    /// Squared norms restricted to `|𝐪| > λ`.
    pub norms: Vec<f64>,
    /// Slope of `log‖K‖²` against `log(1/λ)` over the last three cutoffs.
    pub growth_exponent: f64,
}

/// Squared norms of `kernel` restricted to `|𝐪| > λ` for decreasing cutoffs.
pub fn ir_l2_probe(kernel: &dyn TwoBodyKernel, cutoffs: &[f64], rule: &ProbeRule) -> Result<IrReport> {
    if cutoffs.len() < 3 || cutoffs.windows(2).any(|w| !(w[1] < w[0])) || !(cutoffs[cutoffs.len() - 1] > 0.0) {
        return Err(Error::Invalid("need at least three positive, strictly decreasing cutoffs".into()));
    }
    let extent = kernel.extent();
    if !(cutoffs[0] < extent) {
        return Err(Error::Invalid(format!("largest cutoff must lie below the kernel extent {extent}")));
    }
    // panel edges: every cutoff, octaves in between, octaves up to the extent
    let mut edges = vec![cutoffs[cutoffs.len() - 1]];
    loop {
        let last = *edges.last().unwrap();
        let next_cut = cutoffs.iter().rev().copied().find(|c| *c > last * (1.0 + 1e-12));
        let next = match next_cut {
            Some(c) => (last * 2.0).min(c),
            None => (last * 2.0).min(extent),
        };
        edges.push(next);
        if next >= extent {
            break;
        }
    }
    let (thetas, wt) = gauss_legendre_on(rule.polar_order, 0.0, PI);
    let wphi = 2.0 * PI / rule.azimuth as f64;
    let spectator = kernel.spectator().map(|(c, h)| super::MomentumRule::gauss(c, h, rule.spectator_order));
    let mut panel = Vec::with_capacity(edges.len() - 1);
    for pair in edges.windows(2) {
        let (radii, wr) = composite_gauss(pair, rule.radial_order);
        let mut sum = 0.0;
        for (r, w_r) in radii.iter().zip(&wr) {
            for (th, w_t) in thetas.iter().zip(&wt) {
                let (st, ct) = th.sin_cos();
                for a in 0..rule.azimuth {
                    let (sa, ca) = (2.0 * PI * a as f64 / rule.azimuth as f64).sin_cos();
                    let q = [r * st * ca, r * st * sa, r * ct];
                    let w = w_r * w_t * wphi * r * r * st;
                    sum += w * match &spectator {
                        None => kernel.squared_magnitude(q, [0.0; 3])?,
                        Some(rule) => {
                            let mut s = 0.0;
                            for (p, wp) in rule.points.iter().zip(&rule.weights) {
                                s += wp * kernel.squared_magnitude(q, *p)?;
                            }
                            s
                        }
                    };
                }
            }
        }
        panel.push((pair[0], sum));
    }
    let norms: Vec<f64> = cutoffs
        .iter()
        .map(|&c| panel.iter().filter(|(a, _)| *a >= c * (1.0 - 1e-12)).map(|(_, s)| s).sum())
        .collect();
    let n = cutoffs.len();
    let xs: Vec<f64> = cutoffs[n - 3..].iter().map(|c| (1.0 / c).ln()).collect();
    let ys: Vec<f64> = norms[n - 3..].iter().map(|v| v.max(f64::MIN_POSITIVE).ln()).collect();
    Ok(IrReport { cutoffs: cutoffs.to_vec(), norms, growth_exponent: fit_line(&xs, &ys).slope })
}

/// Which contribution a classification refers to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "contribution", rename_all = "snake_case")]
pub enum Contribution {
    FreeField { phi: TestFunctionSpec },
    FirstOrderPotential { mass: f64, phi: TestFunctionSpec },
    FirstOrderDirac { mass: f64, branch: PsiIntBranch, phi: TestFunctionSpec },
}

impl Contribution {
    pub fn kernel(&self) -> Result<Box<dyn TwoBodyKernel>> {
        Ok(match self {
            Contribution::FreeField { phi } => Box::new(FreeFieldKernel { phi: phi.clone() }),
            Contribution::FirstOrderPotential { mass, phi } => Box::new(FirstOrderPotentialKernel::new(*mass, phi.clone())?),
            Contribution::FirstOrderDirac { mass, branch, phi } => Box::new(PsiIntKernel::new(*branch, *mass, phi.clone())?),
        })
    }
}

/// Class B iff the restricted squared norms stay bounded, read as a growth
/// exponent below `max_exponent`.
pub fn classify_contribution(report: &IrReport, max_exponent: f64) -> OperatorClass {
    if report.growth_exponent < max_exponent && report.norms.iter().all(|n| n.is_finite()) {
        OperatorClass::B
    } else {
        OperatorClass::A
    }
}
