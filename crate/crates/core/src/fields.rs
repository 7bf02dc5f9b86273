//! Plane-wave kernels of the free electromagnetic potential, the Dirac field
//! and a neutral scalar, with the chiral-representation spinor algebra.
//!
//! Conventions: metric `diag(1, −1, −1, −1)`, `p·x = p⁰x⁰ − 𝐩·𝐱`, and the
//! test-function transform `φ̃(k) = (2π)^{-2} ∫ φ(x) e^{ik·x} d⁴x`, so that
//! smearing a plane wave `e^{±ip·x}` yields `(2π)² φ̃(±p)`.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Matrix4, Vector2, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::C64;
use crate::kernels::{Role, TestFunctionSpec};

const I: C64 = C64::new(0.0, 1.0);

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// `g_{μν}` of the Minkowski metric.
pub fn metric(mu: usize, nu: usize) -> f64 {
    match (mu, nu) {
        (0, 0) => 1.0,
        (a, b) if a == b => -1.0,
        _ => 0.0,
    }
}

/// Minkowski product of two four-vectors.
pub fn minkowski(p: [f64; 4], x: [f64; 4]) -> f64 {
    p[0] * x[0] - p[1] * x[1] - p[2] * x[2] - p[3] * x[3]
}

/// Gamma matrices in the chiral representation together with the Pauli matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct DiracAlgebra {
    pub gamma: [Matrix4<C64>; 4],
    pub sigma: [Matrix2<C64>; 3],
}

impl Default for DiracAlgebra {
    fn default() -> Self {
        Self::chiral()
    }
}

impl DiracAlgebra {
    pub fn chiral() -> Self {
        let z = c(0.0);
        let o = c(1.0);
        let sigma = [
            Matrix2::new(z, o, o, z),
            Matrix2::new(z, -I, I, z),
            Matrix2::new(o, z, z, -o),
        ];
        let mut gamma = [Matrix4::zeros(); 4];
        gamma[0].fixed_view_mut::<2, 2>(0, 2).copy_from(&Matrix2::identity());
        gamma[0].fixed_view_mut::<2, 2>(2, 0).copy_from(&Matrix2::identity());
        for k in 0..3 {
            gamma[k + 1].fixed_view_mut::<2, 2>(0, 2).copy_from(&(-sigma[k]));
            gamma[k + 1].fixed_view_mut::<2, 2>(2, 0).copy_from(&sigma[k]);
        }
        Self { gamma, sigma }
    }

    /// `γ^μ p_μ` for a contravariant four-vector `p`.
    pub fn slash(&self, p: [f64; 4]) -> Matrix4<C64> {
        self.gamma[0] * c(p[0]) - self.gamma[1] * c(p[1]) - self.gamma[2] * c(p[2]) - self.gamma[3] * c(p[3])
    }

    /// `𝐩·σ`.
    pub fn sigma_dot(&self, p: [f64; 3]) -> Matrix2<C64> {
        self.sigma[0] * c(p[0]) + self.sigma[1] * c(p[1]) + self.sigma[2] * c(p[2])
    }

    /// Largest entry of `{γ^μ, γ^ν} − 2g^{μν}`.
    pub fn clifford_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for mu in 0..4 {
            for nu in 0..4 {
                let ac = self.gamma[mu] * self.gamma[nu] + self.gamma[nu] * self.gamma[mu];
                let target = Matrix4::<C64>::identity() * c(2.0 * metric(mu, nu));
                worst = worst.max((ac - target).iter().map(|z| z.norm()).fold(0.0, f64::max));
            }
        }
        worst
    }

    /// Largest entry of `σ_iσ_j − δ_ij − iε_ijk σ_k`.
    pub fn pauli_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let mut target = if i == j { Matrix2::identity() } else { Matrix2::zeros() };
                for k in 0..3 {
                    target += self.sigma[k] * (I * levi_civita(i, j, k));
                }
                worst = worst.max((self.sigma[i] * self.sigma[j] - target).iter().map(|z| z.norm()).fold(0.0, f64::max));
            }
        }
        worst
    }
}

fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

fn energy(p: [f64; 3], mass: f64) -> f64 {
    (p[0] * p[0] + p[1] * p[1] + p[2] * p[2] + mass * mass).sqrt()
}

fn spin_basis(s: usize) -> Result<Vector2<C64>> {
    match s {
        1 => Ok(Vector2::new(c(1.0), c(0.0))),
        2 => Ok(Vector2::new(c(0.0), c(1.0))),
        _ => Err(Error::Invalid(format!("spin label {s} not in {{1, 2}}"))),
    }
}

fn spinor(s: usize, p: [f64; 3], mass: f64, lower_sign: f64) -> Result<Vector4<C64>> {
    let e = energy(p, mass);
    if e == 0.0 {
        return Err(Error::Singular("massless spinor at zero momentum".into()));
    }
    let chi = spin_basis(s)?;
    // σ·𝐩 written out; this sits in the inner loops of the momentum quadratures
    let sp = Matrix2::new(c(p[2]), C64::new(p[0], -p[1]), C64::new(p[0], p[1]), c(-p[2]));
    let boosted = sp * chi / c(e + mass);
    let norm = c(((e + mass) / (2.0 * e)).sqrt() / 2f64.sqrt());
    let upper = (chi + boosted) * norm;
    let lower = (chi - boosted) * norm * c(lower_sign);
    Ok(Vector4::new(upper[0], upper[1], lower[0], lower[1]))
}

/// Positive-energy spinor `u_s(𝐩)`, `s ∈ {1, 2}`, normalised to `u†u = 1`.
pub fn u_spinor(s: usize, p: [f64; 3], mass: f64) -> Result<Vector4<C64>> {
    spinor(s, p, mass, 1.0)
}

/// Negative-energy spinor `v_s(𝐩)`; solves `(γ^μ p_μ + m)v = 0` with `p⁰ = E(𝐩)`.
pub fn v_spinor(s: usize, p: [f64; 3], mass: f64) -> Result<Vector4<C64>> {
    spinor(s, p, mass, -1.0)
}

/// Dirac conjugate row `w†γ⁰` as a column of components.
pub fn dirac_adjoint(w: &Vector4<C64>) -> Vector4<C64> {
    let g0 = &DiracAlgebra::chiral().gamma[0];
    (w.adjoint() * g0).transpose()
}

fn plane_wave(p: [f64; 4], x: [f64; 4], role: Role) -> C64 {
    let phase = minkowski(p, x);
    match role {
        Role::Annihilation => C64::from_polar(1.0, -phase),
        Role::Creation => C64::from_polar(1.0, phase),
    }
}

fn norm_3d() -> f64 {
    (2.0 * PI).powf(-1.5)
}

/// E.m. potential kernel `κ(ν, 𝐩; μ, x)` with `p⁰ = √(|𝐩|² + ε²)`.
pub fn em_kernel(polarization: usize, p: [f64; 3], component: usize, x: [f64; 4], role: Role, epsilon: f64) -> Result<C64> {
    if polarization > 3 || component > 3 {
        return Err(Error::Invalid("Lorentz index out of range".into()));
    }
    if epsilon < 0.0 {
        return Err(Error::Invalid("regulator mass must be non-negative".into()));
    }
    let p0 = energy(p, epsilon);
    if p0 == 0.0 {
        return Err(Error::Singular("massless e.m. kernel at zero momentum".into()));
    }
    let amp = metric(polarization, component) * norm_3d() / (2.0 * p0).sqrt();
    Ok(plane_wave([p0, p[0], p[1], p[2]], x, role) * amp)
}

/// Dirac kernel `κ(s, 𝐩; a, x)`, `s ∈ 1..=4`: particle spins 1, 2 in the
/// annihilation part, antiparticle spins 3, 4 in the creation part.
pub fn dirac_kernel(s: usize, p: [f64; 3], mass: f64, component: usize, x: [f64; 4], role: Role) -> Result<C64> {
    if component > 3 {
        return Err(Error::Invalid("spinor index out of range".into()));
    }
    let amp = match (role, s) {
        (Role::Annihilation, 1 | 2) => u_spinor(s, p, mass)?[component],
        (Role::Creation, 3 | 4) => v_spinor(s - 2, p, mass)?[component],
        (_, 1..=4) => return Ok(c(0.0)),
        _ => return Err(Error::Invalid(format!("Dirac spin label {s} not in 1..=4"))),
    };
    let e = energy(p, mass);
    Ok(plane_wave([e, p[0], p[1], p[2]], x, role) * amp * norm_3d())
}

/// Field families with plane-wave kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    /// Neutral scalar, one spin label.
    Scalar,
    /// `A_μ`, four polarization labels.
    EmPotential,
    /// `ψ_a`, four spin labels.
    Dirac,
    /// `ψ♯_a = (ψ†γ⁰)_a`.
    DiracAdjoint,
}

impl FieldKind {
    pub fn n_spins(self) -> usize {
        match self {
            FieldKind::Scalar => 1,
            _ => 4,
        }
    }

    pub fn n_components(self) -> usize {
        self.n_spins()
    }

    pub fn is_fermionic(self) -> bool {
        matches!(self, FieldKind::Dirac | FieldKind::DiracAdjoint)
    }
}

/// Momentum-space amplitude of one part of a field, without the plane wave:
/// the coefficient of `e^{∓ip·x}` for spin label `spin` (0-based) and field
/// component `component`. `energy` is the on-shell `p⁰` supplied by the
/// grid's dispersion rule.
pub fn field_amplitude(
    kind: FieldKind,
    role: Role,
    spin: usize,
    component: usize,
    p: [f64; 3],
    mass: f64,
    energy: f64,
) -> Result<C64> {
    if energy <= 0.0 {
        return Err(Error::Singular("plane-wave amplitude at zero energy".into()));
    }
    let base = norm_3d();
    Ok(match kind {
        FieldKind::Scalar => c(base / (2.0 * energy).sqrt()),
        FieldKind::EmPotential => c(metric(spin, component) * base / (2.0 * energy).sqrt()),
        FieldKind::Dirac => match (role, spin) {
            (Role::Annihilation, 0 | 1) => u_spinor(spin + 1, p, mass)?[component] * base,
            (Role::Creation, 2 | 3) => v_spinor(spin - 1, p, mass)?[component] * base,
            _ => c(0.0),
        },
        FieldKind::DiracAdjoint => match (role, spin) {
            (Role::Creation, 0 | 1) => dirac_adjoint(&u_spinor(spin + 1, p, mass)?)[component] * base,
            (Role::Annihilation, 2 | 3) => dirac_adjoint(&v_spinor(spin - 1, p, mass)?)[component] * base,
            _ => c(0.0),
        },
    })
}

/// Whether a free-field kernel smeared with `test` is an ordinary function
/// of the momenta or only a dual (distributional) object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelRegularity {
    Regular,
    DualValued,
}

pub fn classify_kernel_regularity(mass: f64, test: &TestFunctionSpec) -> KernelRegularity {
    if mass > 0.0 || test.vanishes_at_zero {
        KernelRegularity::Regular
    } else {
        KernelRegularity::DualValued
    }
}
