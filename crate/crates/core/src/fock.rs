//! Truncated Fock space over a discretised spin × momentum grid.
//!
//! Conventions used throughout the crate:
//!
//! * Single-particle modes are numbered globally: species in declaration
//!   order, then spin label, then momentum point.
//! * Sector `n` of a [`FockVector`] is a dense array over `n`-tuples of global
//!   modes in row-major order (first slot most significant). Every sector is
//!   graded-symmetric: exchanging two entries multiplies the amplitude by −1
//!   when both are fermionic and by +1 otherwise. This is the tensor product
//!   of the per-species Fock spaces with the fixed global species order.
//! * The inner product is `⟨Φ,Ψ⟩ = Σₙ n! Σ_t W(t) conj(Φₙ(t)) Ψₙ(t)` with
//!   `W(t)` the product of quadrature weights, which makes `a(w)` and
//!   `a†(w)` mutually adjoint.
//! * `a(w)Φₙ = n·(w̄ contracted into the first slot)`, `a†(w)Φₙ = Sym(w⊗Φₙ)`.
//!   The point delta at mode q is the indicator divided by `weight(q)`, so
//!   `[a(δ_p), a†(δ_q)]∓ = δ_pq / weight(p)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::error::{Error, Result};

pub type C64 = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistics {
    Bose,
    Fermi,
}

/// Energy assigned to a momentum point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Dispersion {
    /// `√(|p|² + m²)` with the species mass.
    Massive,
    /// `|p|`.
    Massless,
    /// `√(|p|² + ε²)`, the regularised massless rule.
    Regularized { epsilon: f64 },
}

impl Dispersion {
    pub fn energy(&self, p: [f64; 3], mass: f64) -> f64 {
        let p2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
        match *self {
            Dispersion::Massive => (p2 + mass * mass).sqrt(),
            Dispersion::Massless => p2.sqrt(),
            Dispersion::Regularized { epsilon } => (p2 + epsilon * epsilon).sqrt(),
        }
    }
}

/// One particle species on the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Species {
    pub name: String,
    pub statistics: Statistics,
    pub mass: f64,
    pub spins: Vec<String>,
    pub momentum_points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dispersion: Option<Dispersion>,
}

impl Species {
    pub fn new(
        name: &str,
        statistics: Statistics,
        mass: f64,
        spins: usize,
        momentum_points: Vec<[f64; 3]>,
        weights: Vec<f64>,
    ) -> Self {
        Self {
            name: name.to_string(),
            statistics,
            mass,
            spins: (1..=spins).map(|s| s.to_string()).collect(),
            momentum_points,
            weights,
            dispersion: None,
        }
    }

    pub fn with_dispersion(mut self, d: Dispersion) -> Self {
        self.dispersion = Some(d);
        self
    }

    pub fn dispersion_rule(&self) -> Dispersion {
        self.dispersion.unwrap_or(if self.mass > 0.0 {
            Dispersion::Massive
        } else {
            Dispersion::Massless
        })
    }

    pub fn energy(&self, point: usize) -> f64 {
        self.dispersion_rule().energy(self.momentum_points[point], self.mass)
    }

    pub fn n_modes(&self) -> usize {
        self.spins.len() * self.momentum_points.len()
    }

    fn validate(&self) -> Result<()> {
        if self.spins.is_empty() || self.momentum_points.is_empty() {
            return Err(Error::Invalid(format!("species {} has no modes", self.name)));
        }
        if self.weights.len() != self.momentum_points.len() {
            return Err(Error::Invalid(format!(
                "species {}: {} weights for {} points",
                self.name,
                self.weights.len(),
                self.momentum_points.len()
            )));
        }
        if let Some(w) = self.weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return Err(Error::Invalid(format!("species {}: weight {w} not positive", self.name)));
        }
        if !(self.mass >= 0.0) {
            return Err(Error::Invalid(format!("species {}: negative mass", self.name)));
        }
        for (i, a) in self.momentum_points.iter().enumerate() {
            if a.iter().any(|x| !x.is_finite()) {
                return Err(Error::Invalid(format!("species {}: non-finite point", self.name)));
            }
            if self.momentum_points[..i].contains(a) {
                return Err(Error::Invalid(format!("species {}: repeated point {a:?}", self.name)));
            }
        }
        if let Some(Dispersion::Regularized { epsilon }) = self.dispersion {
            if !(epsilon > 0.0) {
                return Err(Error::Invalid("regularised dispersion needs ε > 0".into()));
            }
        }
        Ok(())
    }
}

/// Flattened per-mode data shared by every vector on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeTable {
    pub weight: Vec<f64>,
    pub fermi: Vec<bool>,
    pub species: Vec<usize>,
    pub offsets: Vec<usize>,
}

impl ModeTable {
    pub fn len(&self) -> usize {
        self.weight.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weight.is_empty()
    }
}

/// Discretised single-particle space: a list of species, each with spin
/// labels, momentum points and positive quadrature weights.
#[derive(Debug, Clone)]
pub struct SpinMomentumGrid {
    species: Vec<Species>,
    modes: Arc<ModeTable>,
}

#[derive(Serialize, Deserialize)]
struct GridDocument {
    species: Vec<Species>,
}

impl SpinMomentumGrid {
    pub fn new(species: Vec<Species>) -> Result<Self> {
        if species.is_empty() {
            return Err(Error::Invalid("grid without species".into()));
        }
        let mut table = ModeTable { weight: vec![], fermi: vec![], species: vec![], offsets: vec![] };
        for (i, s) in species.iter().enumerate() {
            s.validate()?;
            if species[..i].iter().any(|o| o.name == s.name) {
                return Err(Error::Invalid(format!("duplicate species {}", s.name)));
            }
            table.offsets.push(table.weight.len());
            for _spin in 0..s.spins.len() {
                for &w in &s.weights {
                    table.weight.push(w);
                    table.fermi.push(s.statistics == Statistics::Fermi);
                    table.species.push(i);
                }
            }
        }
        Ok(Self { species, modes: Arc::new(table) })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: GridDocument = serde_json::from_str(text)?;
        Self::new(doc.species)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&GridDocument { species: self.species.clone() })
            .expect("grid serialises")
    }

    pub fn species(&self) -> &[Species] {
        &self.species
    }

    pub fn species_index(&self, name: &str) -> Result<usize> {
        self.species
            .iter()
            .position(|s| s.name == name)
            .ok_or_else(|| Error::GridMismatch(format!("no species named {name}")))
    }

    pub fn modes(&self) -> &Arc<ModeTable> {
        &self.modes
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    /// Global index of (species, spin, point).
    pub fn mode(&self, species: usize, spin: usize, point: usize) -> usize {
        let s = &self.species[species];
        self.modes.offsets[species] + spin * s.momentum_points.len() + point
    }

    /// Inverse of [`Self::mode`].
    pub fn locate(&self, mode: usize) -> (usize, usize, usize) {
        let sp = self.modes.species[mode];
        let local = mode - self.modes.offsets[sp];
        let np = self.species[sp].momentum_points.len();
        (sp, local / np, local % np)
    }

    pub fn momentum(&self, mode: usize) -> [f64; 3] {
        let (sp, _, pt) = self.locate(mode);
        self.species[sp].momentum_points[pt]
    }

    pub fn energy(&self, mode: usize) -> f64 {
        let (sp, _, pt) = self.locate(mode);
        self.species[sp].energy(pt)
    }

    pub fn weight(&self, mode: usize) -> f64 {
        self.modes.weight[mode]
    }

    pub fn species_modes(&self, species: usize) -> std::ops::Range<usize> {
        let start = self.modes.offsets[species];
        start..start + self.species[species].n_modes()
    }
}

pub(crate) fn same_modes(a: &Arc<ModeTable>, b: &Arc<ModeTable>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// All permutations of `0..n` in lexicographic order.
pub(crate) fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..n).collect();
    loop {
        out.push(p.clone());
        let Some(i) = (1..n).rev().find(|&i| p[i - 1] < p[i]) else { break };
        let j = (i..n).rev().find(|&j| p[j] > p[i - 1]).unwrap();
        p.swap(i - 1, j);
        p[i..].reverse();
    }
    out
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Sign of rearranging `tuple` into `tuple[perm[0]], tuple[perm[1]], ...`
/// counting only exchanges of two fermionic entries.
pub(crate) fn graded_sign(tuple: &[usize], perm: &[usize], fermi: &[bool]) -> f64 {
    let mut inversions = 0usize;
    for i in 0..perm.len() {
        if !fermi[tuple[perm[i]]] {
            continue;
        }
        for j in i + 1..perm.len() {
            if fermi[tuple[perm[j]]] && perm[i] > perm[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

pub(crate) fn decode(mut idx: usize, n: usize, m: usize, out: &mut [usize]) {
    for k in (0..n).rev() {
        out[k] = idx % m;
        idx /= m;
    }
}

pub(crate) fn encode(tuple: &[usize], m: usize) -> usize {
    tuple.iter().fold(0, |acc, &t| acc * m + t)
}

/// Graded symmetrisation of one sector, scattering only nonzero entries.
pub(crate) fn symmetrize_sector(data: &[C64], n: usize, modes: &ModeTable) -> Vec<C64> {
    let m = modes.len();
    let mut out = vec![C64::new(0.0, 0.0); data.len()];
    if n <= 1 {
        out.copy_from_slice(data);
        return out;
    }
    let perms = permutations(n);
    let norm = 1.0 / factorial(n);
    let mut t = vec![0usize; n];
    let mut u = vec![0usize; n];
    for (idx, &v) in data.iter().enumerate() {
        if v == C64::new(0.0, 0.0) {
            continue;
        }
        decode(idx, n, m, &mut t);
        for p in &perms {
            for k in 0..n {
                u[k] = t[p[k]];
            }
            let s = graded_sign(&t, p, &modes.fermi);
            out[encode(&u, m)] += v * (s * norm);
        }
    }
    out
}

/// Truncated graded Fock vector.
#[derive(Debug, Clone)]
pub struct FockVector {
    modes: Arc<ModeTable>,
    n_max: usize,
    sectors: Vec<Vec<C64>>,
    truncation_loss: usize,
}

impl FockVector {
    pub fn zeros(grid: &SpinMomentumGrid, n_max: usize) -> Self {
        Self::zeros_on(grid.modes().clone(), n_max)
    }

    pub(crate) fn zeros_on(modes: Arc<ModeTable>, n_max: usize) -> Self {
        let m = modes.len();
        let sectors = (0..=n_max).map(|n| vec![C64::new(0.0, 0.0); m.pow(n as u32)]).collect();
        Self { modes, n_max, sectors, truncation_loss: 0 }
    }

    pub fn vacuum(grid: &SpinMomentumGrid, n_max: usize) -> Self {
        let mut v = Self::zeros(grid, n_max);
        v.sectors[0][0] = C64::new(1.0, 0.0);
        v
    }

    /// Builds a vector from raw sector arrays, symmetrising each one.
    pub fn from_sectors(grid: &SpinMomentumGrid, sectors: Vec<Vec<C64>>) -> Result<Self> {
        if sectors.is_empty() {
            return Err(Error::Invalid("at least the vacuum sector is required".into()));
        }
        let m = grid.n_modes();
        for (n, s) in sectors.iter().enumerate() {
            if s.len() != m.pow(n as u32) {
                return Err(Error::DimensionMismatch { expected: m.pow(n as u32), got: s.len() });
            }
        }
        let modes = grid.modes().clone();
        let sectors: Vec<Vec<C64>> =
            sectors.iter().enumerate().map(|(n, s)| symmetrize_sector(s, n, &modes)).collect();
        Ok(Self { n_max: sectors.len() - 1, modes, sectors, truncation_loss: 0 })
    }

    /// Random graded-symmetric vector with entries in the unit square.
    pub fn random<R: Rng>(grid: &SpinMomentumGrid, n_max: usize, rng: &mut R) -> Self {
        let m = grid.n_modes();
        let raw = (0..=n_max)
            .map(|n| {
                (0..m.pow(n as u32))
                    .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect()
            })
            .collect();
        Self::from_sectors(grid, raw).expect("shapes are consistent")
    }

    /// Graded-symmetric basis state generated by the tuple `modes`.
    pub fn basis(grid: &SpinMomentumGrid, n_max: usize, tuple: &[usize]) -> Self {
        let mut v = Self::zeros(grid, n_max);
        let idx = encode(tuple, grid.n_modes());
        v.sectors[tuple.len()][idx] = C64::new(1.0, 0.0);
        let sym = symmetrize_sector(&v.sectors[tuple.len()], tuple.len(), &v.modes);
        v.sectors[tuple.len()] = sym;
        v
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn mode_table(&self) -> &Arc<ModeTable> {
        &self.modes
    }

    pub fn sector(&self, n: usize) -> &[C64] {
        &self.sectors[n]
    }

    pub fn sector_mut(&mut self, n: usize) -> &mut [C64] {
        &mut self.sectors[n]
    }

    /// Number of nonzero amplitudes dropped because they would have landed
    /// above `n_max`, accumulated over the operations that produced `self`.
    pub fn truncation_loss(&self) -> usize {
        self.truncation_loss
    }

    pub(crate) fn add_truncation_loss(&mut self, k: usize) {
        self.truncation_loss += k;
    }

    pub fn amplitude(&self, tuple: &[usize]) -> C64 {
        self.sectors[tuple.len()][encode(tuple, self.modes.len())]
    }

    pub fn check_same_grid(&self, other: &FockVector) -> Result<()> {
        if same_modes(&self.modes, &other.modes) {
            Ok(())
        } else {
            Err(Error::GridMismatch("vectors live on different grids".into()))
        }
    }

    pub(crate) fn tuple_weight(&self, idx: usize, n: usize, scratch: &mut [usize]) -> f64 {
        decode(idx, n, self.modes.len(), scratch);
        scratch[..n].iter().map(|&k| self.modes.weight[k]).product()
    }

    /// Sesquilinear weighted inner product (antilinear in `self`).
    pub fn inner(&self, other: &FockVector) -> Result<C64> {
        self.check_same_grid(other)?;
        Ok(self.bracket(other, true))
    }

    /// Bilinear weighted pairing `⟨⟨self, other⟩⟩`.
    pub fn pairing(&self, other: &FockVector) -> Result<C64> {
        self.check_same_grid(other)?;
        Ok(self.bracket(other, false))
    }

    fn bracket(&self, other: &FockVector, conjugate: bool) -> C64 {
        let mut total = C64::new(0.0, 0.0);
        let mut scratch = vec![0usize; self.n_max.max(other.n_max)];
        for n in 0..=self.n_max.min(other.n_max) {
            let mut s = C64::new(0.0, 0.0);
            for (idx, (&a, &b)) in self.sectors[n].iter().zip(&other.sectors[n]).enumerate() {
                if a == C64::new(0.0, 0.0) || b == C64::new(0.0, 0.0) {
                    continue;
                }
                let w = self.tuple_weight(idx, n, &mut scratch);
                let a = if conjugate { a.conj() } else { a };
                s += a * b * w;
            }
            total += s * factorial(n);
        }
        total
    }

    pub fn norm(&self) -> f64 {
        self.bracket(self, true).re.max(0.0).sqrt()
    }

    pub fn scale(&self, c: C64) -> FockVector {
        let mut v = self.clone();
        v.sectors.iter_mut().flatten().for_each(|x| *x *= c);
        v
    }

    pub fn axpy(&mut self, c: C64, other: &FockVector) -> Result<()> {
        self.check_same_grid(other)?;
        for n in 0..=self.n_max.min(other.n_max) {
            for (a, &b) in self.sectors[n].iter_mut().zip(&other.sectors[n]) {
                *a += c * b;
            }
        }
        for n in self.n_max + 1..=other.n_max {
            if other.sectors[n].iter().any(|x| *x != C64::new(0.0, 0.0)) {
                self.truncation_loss += other.sectors[n].iter().filter(|x| **x != C64::new(0.0, 0.0)).count();
            }
        }
        self.truncation_loss += other.truncation_loss;
        Ok(())
    }

    /// Largest absolute difference between amplitudes of two vectors, over
    /// the common sectors.
    pub fn max_abs_diff(&self, other: &FockVector) -> f64 {
        let mut d: f64 = 0.0;
        for n in 0..=self.n_max.min(other.n_max) {
            for (a, b) in self.sectors[n].iter().zip(&other.sectors[n]) {
                d = d.max((a - b).norm());
            }
        }
        d
    }

    /// Same vector on a different truncation (sectors above `n_max` dropped and counted).
    pub fn retruncate(&self, n_max: usize) -> FockVector {
        let mut v = FockVector::zeros_on(self.modes.clone(), n_max);
        for n in 0..=n_max.min(self.n_max) {
            v.sectors[n].copy_from_slice(&self.sectors[n]);
        }
        let lost: usize = (n_max + 1..=self.n_max)
            .map(|n| self.sectors[n].iter().filter(|x| **x != C64::new(0.0, 0.0)).count())
            .sum();
        v.truncation_loss = self.truncation_loss + lost;
        v
    }

    /// Applies the graded symmetriser to every sector.
    pub fn symmetrized(&self) -> FockVector {
        let mut v = self.clone();
        for n in 0..=self.n_max {
            v.sectors[n] = symmetrize_sector(&self.sectors[n], n, &self.modes);
        }
        v
    }

    /// Concatenation of all sectors (the coordinate vector used by operator matrices).
    pub fn to_coordinates(&self) -> Vec<C64> {
        self.sectors.iter().flatten().copied().collect()
    }

    pub fn from_coordinates(grid: &SpinMomentumGrid, n_max: usize, coords: &[C64]) -> Result<Self> {
        let mut v = Self::zeros(grid, n_max);
        let dim: usize = v.sectors.iter().map(|s| s.len()).sum();
        if coords.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: coords.len() });
        }
        let mut off = 0;
        for s in v.sectors.iter_mut() {
            let len = s.len();
            s.copy_from_slice(&coords[off..off + len]);
            off += len;
        }
        Ok(v)
    }

    pub fn to_json(&self) -> String {
        let doc = FockDocument {
            n_max: self.n_max,
            n_modes: self.modes.len(),
            sectors: self.sectors.iter().map(|s| s.iter().map(|c| [c.re, c.im]).collect()).collect(),
        };
        serde_json::to_string(&doc).expect("vector serialises")
    }

    pub fn from_json(grid: &SpinMomentumGrid, text: &str) -> Result<Self> {
        let doc: FockDocument = serde_json::from_str(text)?;
        if doc.n_modes != grid.n_modes() {
            return Err(Error::GridMismatch(format!(
                "dump has {} modes, grid has {}",
                doc.n_modes,
                grid.n_modes()
            )));
        }
        if doc.sectors.len() != doc.n_max + 1 {
            return Err(Error::Invalid("sector count does not match n_max".into()));
        }
        let raw = doc
            .sectors
            .into_iter()
            .map(|s| s.into_iter().map(|[re, im]| C64::new(re, im)).collect())
            .collect();
        Self::from_sectors(grid, raw)
    }
}

#[derive(Serialize, Deserialize)]
struct FockDocument {
    n_max: usize,
    n_modes: usize,
    sectors: Vec<Vec<[f64; 2]>>,
}

/// Complex function on one species' modes (spin-major, then momentum point).
#[derive(Debug, Clone, PartialEq)]
pub struct SmearedArgument {
    pub species: usize,
    pub values: Vec<C64>,
}

impl SmearedArgument {
    pub fn new(grid: &SpinMomentumGrid, species: usize, values: Vec<C64>) -> Result<Self> {
        let n = grid.species()[species].n_modes();
        if values.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: values.len() });
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Invalid("smeared argument must be finite".into()));
        }
        Ok(Self { species, values })
    }

    /// Point mass at a global mode: indicator divided by the quadrature weight.
    pub fn delta(grid: &SpinMomentumGrid, mode: usize) -> Self {
        let (sp, _, _) = grid.locate(mode);
        let range = grid.species_modes(sp);
        let mut values = vec![C64::new(0.0, 0.0); range.len()];
        values[mode - range.start] = C64::new(1.0 / grid.weight(mode), 0.0);
        Self { species: sp, values }
    }
}

fn check_argument(grid_modes: &ModeTable, w: &SmearedArgument) -> Result<usize> {
    let offset = *grid_modes
        .offsets
        .get(w.species)
        .ok_or_else(|| Error::GridMismatch(format!("species {} not on grid", w.species)))?;
    let end = grid_modes.offsets.get(w.species + 1).copied().unwrap_or(grid_modes.len());
    if end - offset != w.values.len() {
        return Err(Error::GridMismatch("argument length differs from species mode count".into()));
    }
    Ok(offset)
}

/// `a(w)Φ`: contracts `w̄` into the first slot with the quadrature weights.
pub fn a_apply(w: &SmearedArgument, phi: &FockVector) -> Result<FockVector> {
    let offset = check_argument(&phi.modes, w)?;
    let m = phi.modes.len();
    let mut out = FockVector::zeros_on(phi.modes.clone(), phi.n_max);
    out.truncation_loss = phi.truncation_loss;
    for n in 1..=phi.n_max {
        let stride = m.pow((n - 1) as u32);
        let src = &phi.sectors[n];
        let dst = &mut out.sectors[n - 1];
        for (j, wv) in w.values.iter().enumerate() {
            if *wv == C64::new(0.0, 0.0) {
                continue;
            }
            let k = offset + j;
            let c = wv.conj() * (phi.modes.weight[k] * n as f64);
            let block = &src[k * stride..(k + 1) * stride];
            for (d, &s) in dst.iter_mut().zip(block) {
                *d += c * s;
            }
        }
    }
    Ok(out)
}

/// `a†(w)Φ = Sym(w ⊗ Φ)`; the top sector is truncated and counted.
pub fn a_dagger_apply(w: &SmearedArgument, phi: &FockVector) -> Result<FockVector> {
    let offset = check_argument(&phi.modes, w)?;
    let m = phi.modes.len();
    let mut out = FockVector::zeros_on(phi.modes.clone(), phi.n_max);
    out.truncation_loss = phi.truncation_loss;
    for n in 0..=phi.n_max {
        let src = &phi.sectors[n];
        if n == phi.n_max {
            let nz_src = src.iter().filter(|x| **x != C64::new(0.0, 0.0)).count();
            let nz_w = w.values.iter().filter(|x| **x != C64::new(0.0, 0.0)).count();
            out.truncation_loss += nz_src * nz_w;
            continue;
        }
        let stride = m.pow(n as u32);
        let mut raw = vec![C64::new(0.0, 0.0); m * stride];
        for (j, wv) in w.values.iter().enumerate() {
            if *wv == C64::new(0.0, 0.0) {
                continue;
            }
            let k = offset + j;
            for (d, &s) in raw[k * stride..(k + 1) * stride].iter_mut().zip(src) {
                *d = *wv * s;
            }
        }
        out.sectors[n + 1] = symmetrize_sector(&raw, n + 1, &phi.modes);
    }
    Ok(out)
}

/// `Σ_q weight(q) a†(δ_q) a(δ_q)` over every mode of the grid.
pub fn number_operator(grid: &SpinMomentumGrid, phi: &FockVector) -> Result<FockVector> {
    let mut total = FockVector::zeros_on(phi.modes.clone(), phi.n_max);
    for q in 0..grid.n_modes() {
        let d = SmearedArgument::delta(grid, q);
        let v = a_dagger_apply(&d, &a_apply(&d, phi)?)?;
        total.axpy(C64::new(grid.weight(q), 0.0), &v)?;
    }
    Ok(total)
}

/// Deterministic probe state with sectors below `n_max`, unit norm.
pub fn probe_state(grid: &SpinMomentumGrid, n_max: usize) -> FockVector {
    let mut rng = rand::rngs::StdRng::seed_from_u64(0x5eed_cafe);
    let mut v = FockVector::random(grid, n_max, &mut rng);
    for x in v.sectors[n_max].iter_mut() {
        *x = C64::new(0.0, 0.0);
    }
    let norm = v.norm();
    v.scale(C64::new(1.0 / norm, 0.0))
}

/// Expectation value of `[a(δ_p), a†(δ_q)]∓` (commutator for bosonic `p`,
/// anticommutator for fermionic `p`) in the normalised probe state.
/// `n_max` below 1 is raised to 1 so that the probe has room for `a†`.
pub fn commutator_check(grid: &SpinMomentumGrid, p: usize, q: usize, n_max: usize) -> C64 {
    let n_max = n_max.max(1);
    let probe = probe_state(grid, n_max);
    let dp = SmearedArgument::delta(grid, p);
    let dq = SmearedArgument::delta(grid, q);
    let aq = a_dagger_apply(&dq, &probe).expect("delta lives on the grid");
    let first = a_apply(&dp, &aq).expect("delta lives on the grid");
    let ap = a_apply(&dp, &probe).expect("delta lives on the grid");
    let second = a_dagger_apply(&dq, &ap).expect("delta lives on the grid");
    let sign = if grid.modes().fermi[p] && grid.modes().fermi[q] { 1.0 } else { -1.0 };
    let mut c = first;
    c.axpy(C64::new(sign, 0.0), &second).expect("same grid");
    probe.inner(&c).expect("same grid")
}

/// Diagonal indefinite metric: one sign per spin label of every species.
#[derive(Debug, Clone, PartialEq)]
pub struct KreinMetric {
    signs: Vec<Vec<i8>>,
    mode_signs: Vec<i8>,
}

impl KreinMetric {
    pub fn new(grid: &SpinMomentumGrid, signs: Vec<Vec<i8>>) -> Result<Self> {
        if signs.len() != grid.species().len() {
            return Err(Error::DimensionMismatch { expected: grid.species().len(), got: signs.len() });
        }
        let mut mode_signs = Vec::with_capacity(grid.n_modes());
        for (s, sp) in signs.iter().zip(grid.species()) {
            if s.len() != sp.spins.len() {
                return Err(Error::DimensionMismatch { expected: sp.spins.len(), got: s.len() });
            }
            if s.iter().any(|x| *x != 1 && *x != -1) {
                return Err(Error::Invalid("metric signs must be ±1".into()));
            }
            for &sign in s {
                mode_signs.extend(std::iter::repeat(sign).take(sp.momentum_points.len()));
            }
        }
        Ok(Self { signs, mode_signs })
    }

    /// Gupta–Bleuler convention: the first polarisation label of each named
    /// vector species is negative, everything else positive.
    pub fn gupta_bleuler(grid: &SpinMomentumGrid, vector_species: &[&str]) -> Result<Self> {
        let signs = grid
            .species()
            .iter()
            .map(|sp| {
                let mut s = vec![1i8; sp.spins.len()];
                if vector_species.contains(&sp.name.as_str()) {
                    s[0] = -1;
                }
                s
            })
            .collect();
        Self::new(grid, signs)
    }

    pub fn species_signs(&self) -> &[Vec<i8>] {
        &self.signs
    }

    /// Applies η to a Fock vector (product of mode signs per tuple).
    pub fn apply(&self, phi: &FockVector) -> FockVector {
        let mut v = phi.clone();
        let m = phi.n_modes();
        let mut t = vec![0usize; phi.n_max];
        for n in 0..=phi.n_max {
            for (idx, x) in v.sectors[n].iter_mut().enumerate() {
                decode(idx, n, m, &mut t);
                let s: i32 = t[..n].iter().map(|&k| self.mode_signs[k] as i32).product();
                *x *= s as f64;
            }
        }
        v
    }

    /// Diagonal of η on the coordinate basis of [`FockVector::to_coordinates`].
    pub fn basis_signs(&self, n_max: usize) -> Vec<f64> {
        let m = self.mode_signs.len();
        let mut out = Vec::new();
        let mut t = vec![0usize; n_max];
        for n in 0..=n_max {
            for idx in 0..m.pow(n as u32) {
                decode(idx, n, m, &mut t);
                out.push(t[..n].iter().map(|&k| self.mode_signs[k] as f64).product());
            }
        }
        out
    }
}

/// `η M† η` for a square matrix with diagonal metric `eta`.
pub fn krein_adjoint(op: &DMatrix<C64>, eta: &[f64]) -> Result<DMatrix<C64>> {
    if op.nrows() != op.ncols() {
        return Err(Error::DimensionMismatch { expected: op.nrows(), got: op.ncols() });
    }
    if eta.len() != op.nrows() {
        return Err(Error::DimensionMismatch { expected: op.nrows(), got: eta.len() });
    }
    let mut a = op.adjoint();
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            a[(i, j)] *= eta[i] * eta[j];
        }
    }
    Ok(a)
}

/// Matrix of a linear map on the coordinate space; column `j` is the image
/// of the symmetrised `j`-th coordinate basis vector.
pub fn operator_matrix<F>(grid: &SpinMomentumGrid, n_max: usize, mut op: F) -> Result<DMatrix<C64>>
where
    F: FnMut(&FockVector) -> Result<FockVector>,
{
    let m = grid.n_modes();
    let dim: usize = (0..=n_max).map(|n| m.pow(n as u32)).sum();
    let mut mat = DMatrix::<C64>::zeros(dim, dim);
    let mut col = 0;
    let mut t = vec![0usize; n_max];
    for n in 0..=n_max {
        for idx in 0..m.pow(n as u32) {
            decode(idx, n, m, &mut t);
            let e = FockVector::basis(grid, n_max, &t[..n]);
            let image = op(&e)?.retruncate(n_max).to_coordinates();
            for (row, v) in image.into_iter().enumerate() {
                mat[(row, col)] = v;
            }
            col += 1;
        }
    }
    Ok(mat)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point(stats: Statistics) -> SpinMomentumGrid {
        SpinMomentumGrid::new(vec![Species::new(
            "s",
            stats,
            1.0,
            1,
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]],
            vec![1.0, 0.5],
        )])
        .unwrap()
    }

    #[test]
    fn annihilating_vacuum_gives_zero() {
        let g = two_point(Statistics::Bose);
        let w = SmearedArgument::new(&g, 0, vec![C64::new(1.0, 2.0), C64::new(-0.5, 0.1)]).unwrap();
        let r = a_apply(&w, &FockVector::vacuum(&g, 2)).unwrap();
        assert_eq!(r.norm(), 0.0);
    }

    #[test]
    fn point_annihilation_returns_inverse_weight() {
        let g = two_point(Statistics::Bose);
        let d = SmearedArgument::delta(&g, 1);
        let one = a_dagger_apply(&d, &FockVector::vacuum(&g, 1)).unwrap();
        let r = a_apply(&d, &one).unwrap();
        assert!((r.sector(0)[0] - C64::new(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn fermion_double_creation_vanishes() {
        let g = two_point(Statistics::Fermi);
        let d = SmearedArgument::delta(&g, 0);
        let v = a_dagger_apply(&d, &a_dagger_apply(&d, &FockVector::vacuum(&g, 2)).unwrap()).unwrap();
        assert!(v.norm() < 1e-15);
        assert_eq!(v.truncation_loss(), 0);
    }

    #[test]
    fn creation_on_vacuum_is_point_state() {
        let g = two_point(Statistics::Bose);
        let v = a_dagger_apply(&SmearedArgument::delta(&g, 1), &FockVector::vacuum(&g, 1)).unwrap();
        assert!((v.sector(1)[1] - C64::new(2.0, 0.0)).norm() < 1e-15);
        assert_eq!(v.sector(1)[0], C64::new(0.0, 0.0));
    }

    #[test]
    fn truncation_is_counted() {
        let g = two_point(Statistics::Bose);
        let v = a_dagger_apply(&SmearedArgument::delta(&g, 1), &FockVector::basis(&g, 1, &[0])).unwrap();
        assert!(v.truncation_loss() > 0);
    }

    #[test]
    fn json_round_trip() {
        let g = two_point(Statistics::Fermi);
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        let v = FockVector::random(&g, 2, &mut rng);
        let back = FockVector::from_json(&g, &v.to_json()).unwrap();
        assert!(v.max_abs_diff(&back) < 1e-15);
        let g2 = SpinMomentumGrid::from_json(&g.to_json()).unwrap();
        assert_eq!(g2.n_modes(), 2);
    }

    #[test]
    fn grid_rejects_bad_weights() {
        let s = Species::new("x", Statistics::Bose, 0.0, 1, vec![[1.0, 0.0, 0.0]], vec![0.0]);
        assert!(SpinMomentumGrid::new(vec![s]).is_err());
    }

    #[test]
    fn regularized_rule_dominates_massless() {
        let p = [0.3, -0.2, 0.1];
        assert!(Dispersion::Regularized { epsilon: 0.1 }.energy(p, 0.0) > Dispersion::Massless.energy(p, 0.0));
    }
}
