//! Spectral decomposition of one-dimensional tempered distributions under
//! translations: `⟨F, f⟩ = (1/2π)∫ F̂(χ) f̂(−χ) dχ` whenever `F̂` is a
//! function or a measure.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::C64;
use crate::numerics::quadrature::{integrate_real_line, Tolerance};

/// `f(x) = a·exp(−(x − c)²/(2w²))` with `f̂(χ) = a w√(2π) e^{−iχc} e^{−w²χ²/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianTest1d {
    pub amplitude: [f64; 2],
    pub centre: f64,
    pub width: f64,
}

impl GaussianTest1d {
    fn amp(&self) -> C64 {
        C64::new(self.amplitude[0], self.amplitude[1])
    }

    pub fn eval(&self, x: f64) -> C64 {
        self.amp() * (-(x - self.centre).powi(2) / (2.0 * self.width * self.width)).exp()
    }

    /// `f̂(χ) = ∫ f(x) e^{−iχx} dx`.
    pub fn fourier(&self, chi: f64) -> C64 {
        self.amp()
            * self.width
            * (2.0 * PI).sqrt()
            * (-self.width * self.width * chi * chi / 2.0).exp()
            * C64::from_polar(1.0, -chi * self.centre)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralClass {
    Function,
    Measure,
    Neither,
}

/// Distributions with known transforms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Distribution1d {
    /// The Gaussian function `F = GaussianTest1d`.
    Gaussian(GaussianTest1d),
    /// `δ(x − at)`, with `F̂(χ) = e^{−iχ·at}`.
    Delta { at: f64 },
    /// `a e^{iχ₀x}`, with `F̂ = 2πa δ(χ − χ₀)`, a point measure.
    PlaneWave { frequency: f64, amplitude: [f64; 2] },
    /// `F̂ = δ′(χ − χ₀)`, not a measure.
    SpectralDipole { frequency: f64 },
}

impl Distribution1d {
    pub fn spectral_class(&self) -> SpectralClass {
        match self {
            Distribution1d::Gaussian(_) | Distribution1d::Delta { .. } => SpectralClass::Function,
            Distribution1d::PlaneWave { .. } => SpectralClass::Measure,
            Distribution1d::SpectralDipole { .. } => SpectralClass::Neither,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub class: SpectralClass,
    pub direct: [f64; 2],
    pub spectral: [f64; 2],
    pub defect: f64,
}

fn tol() -> Tolerance<f64> {
    Tolerance::new(1e-14, 1e-16)
}

/// `⟨F, f⟩` directly in position space.
pub fn direct_pairing(dist: &Distribution1d, f: &GaussianTest1d) -> Result<C64> {
    match *dist {
        Distribution1d::Gaussian(g) => Ok(integrate_real_line(|x: f64| g.eval(x) * f.eval(x), f.centre, tol())?.value),
        Distribution1d::Delta { at } => Ok(f.eval(at)),
        Distribution1d::PlaneWave { frequency, amplitude } => {
            let a = C64::new(amplitude[0], amplitude[1]);
            Ok(integrate_real_line(|x: f64| a * C64::from_polar(1.0, frequency * x) * f.eval(x), f.centre, tol())?.value)
        }
        Distribution1d::SpectralDipole { frequency } => {
            // F(x) = (−ix/2π) e^{iχ₀x}
            Ok(integrate_real_line(
                |x: f64| C64::new(0.0, -x / (2.0 * PI)) * C64::from_polar(1.0, frequency * x) * f.eval(x),
                f.centre,
                tol(),
            )?
            .value)
        }
    }
}

/// `(1/2π)∫ F̂(χ) f̂(−χ) dχ`, refusing transforms that are not measures.
pub fn spectral_pairing(dist: &Distribution1d, f: &GaussianTest1d) -> Result<C64> {
    let scale = 1.0 / (2.0 * PI);
    match *dist {
        Distribution1d::Gaussian(g) => {
            Ok(integrate_real_line(|chi: f64| g.fourier(chi) * f.fourier(-chi), 0.0, tol())?.value * scale)
        }
        Distribution1d::Delta { at } => {
            Ok(integrate_real_line(|chi: f64| C64::from_polar(1.0, -chi * at) * f.fourier(-chi), 0.0, tol())?.value * scale)
        }
        Distribution1d::PlaneWave { frequency, amplitude } => Ok(C64::new(amplitude[0], amplitude[1]) * f.fourier(-frequency)),
        Distribution1d::SpectralDipole { .. } => {
            Err(Error::Refused("Fourier transform is not a measure; no spectral decomposition".into()))
        }
    }
}

/// Both routes and their difference.
pub fn decompose_1d(dist: &Distribution1d, f: &GaussianTest1d) -> Result<Decomposition> {
    let spectral = spectral_pairing(dist, f)?;
    let direct = direct_pairing(dist, f)?;
    Ok(Decomposition {
        class: dist.spectral_class(),
        direct: [direct.re, direct.im],
        spectral: [spectral.re, spectral.im],
        defect: (direct - spectral).norm(),
    })
}
