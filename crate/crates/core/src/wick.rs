//! Wick monomials, contraction schemes and the Wick decomposition of
//! operator products.
//!
//! Fermionic signs are fixed by one global rule: an operator string is read
//! left to right (monomial order, then factor order inside a monomial), and
//! every rearrangement contributes `(−1)` per transposition of two fermionic
//! entries.

pub mod dsl;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{field_amplitude, FieldKind};
use crate::fock::{Dispersion, FockVector, SpinMomentumGrid, C64};
use crate::kernels::{contract, kernel_contractions, rearrangement_sign, KernelLM, OperatorSum, Role, TestFunctionSpec};

/// One field in a monomial: which field, on which grid species, which
/// component (Lorentz or spinor index) and which space-time point label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldFactor {
    pub kind: FieldKind,
    pub species: usize,
    pub component: usize,
    pub label: usize,
}

/// Ordered product `c · :F₁ F₂ … Fₙ:`; factors sharing a label sit at the same point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WickMonomial {
    pub coefficient: C64,
    pub factors: Vec<FieldFactor>,
}

impl WickMonomial {
    pub fn new(factors: Vec<FieldFactor>) -> Self {
        Self { coefficient: C64::new(1.0, 0.0), factors }
    }

    pub fn fermion_count(&self) -> usize {
        self.factors.iter().filter(|f| f.kind.is_fermionic()).count()
    }

    pub fn n_labels(&self) -> usize {
        self.factors.iter().map(|f| f.label + 1).max().unwrap_or(0)
    }

    /// Checks the factors against the grid and that labels are `0..L` without gaps.
    pub fn validate(&self, grid: &SpinMomentumGrid) -> Result<()> {
        for f in &self.factors {
            let sp = grid
                .species()
                .get(f.species)
                .ok_or_else(|| Error::GridMismatch(format!("factor species {} not on grid", f.species)))?;
            if sp.spins.len() != f.kind.n_spins() {
                return Err(Error::GridMismatch(format!(
                    "species '{}' has {} spin labels, {:?} needs {}",
                    sp.name,
                    sp.spins.len(),
                    f.kind,
                    f.kind.n_spins()
                )));
            }
            let fermi = grid.modes().fermi[grid.species_modes(f.species).start];
            if fermi != f.kind.is_fermionic() {
                return Err(Error::GridMismatch(format!("statistics of '{}' do not match {:?}", sp.name, f.kind)));
            }
            if f.component >= f.kind.n_components() {
                return Err(Error::Invalid(format!("component {} out of range for {:?}", f.component, f.kind)));
            }
        }
        let n = self.n_labels();
        if (0..n).any(|l| !self.factors.iter().any(|f| f.label == l)) {
            return Err(Error::Invalid("space-time labels must form a contiguous set".into()));
        }
        Ok(())
    }
}

/// Sum of monomials, typically the index expansion of one DSL expression.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WickPolynomial {
    pub terms: Vec<WickMonomial>,
}

/// Kernels of every creation/annihilation split of the monomial, before merging.
/// Split `r` assigns creation to factor `i` when bit `i` of `r` is set.
pub fn monomial_split_kernels(
    grid: &SpinMomentumGrid,
    monomial: &WickMonomial,
    tests: &[TestFunctionSpec],
) -> Result<Vec<KernelLM>> {
    monomial.validate(grid)?;
    let n = monomial.factors.len();
    if tests.len() < monomial.n_labels() {
        return Err(Error::Invalid(format!(
            "{} space-time labels but {} test functions",
            monomial.n_labels(),
            tests.len()
        )));
    }
    let fermi: Vec<bool> = monomial.factors.iter().map(|f| f.kind.is_fermionic()).collect();
    let mut out = Vec::with_capacity(1 << n);
    for split in 0..(1usize << n) {
        let roles: Vec<Role> =
            (0..n).map(|i| if split >> i & 1 == 1 { Role::Creation } else { Role::Annihilation }).collect();
        let mut order: Vec<usize> = (0..n).filter(|&i| roles[i] == Role::Creation).collect();
        order.extend((0..n).filter(|&i| roles[i] == Role::Annihilation));
        let sign = rearrangement_sign(&fermi, &order);
        let creation: Vec<usize> =
            order.iter().filter(|&&i| roles[i] == Role::Creation).map(|&i| monomial.factors[i].species).collect();
        let annihilation: Vec<usize> =
            order.iter().filter(|&&i| roles[i] == Role::Annihilation).map(|&i| monomial.factors[i].species).collect();
        let mut failure = None;
        let kernel = KernelLM::from_fn(grid, &creation, &annihilation, |t| {
            let mut value = monomial.coefficient * sign;
            let mut momenta = vec![[0.0f64; 4]; monomial.n_labels()];
            for (slot, &i) in order.iter().enumerate() {
                let f = &monomial.factors[i];
                let mode = grid.species_modes(f.species).start + t[slot];
                let (_, spin, point) = grid.locate(mode);
                let sp = &grid.species()[f.species];
                let p = sp.momentum_points[point];
                let e = grid.energy(mode);
                match field_amplitude(f.kind, roles[i], spin, f.component, p, sp.mass, e) {
                    Ok(a) => value *= a,
                    Err(err) => {
                        failure.get_or_insert(err);
                        return C64::new(0.0, 0.0);
                    }
                }
                let s = if roles[i] == Role::Creation { 1.0 } else { -1.0 };
                let k = &mut momenta[f.label];
                k[0] += s * e;
                for d in 0..3 {
                    k[d + 1] += s * p[d];
                }
            }
            let fourier = (2.0 * std::f64::consts::PI).powi(2);
            for (label, k) in momenta.iter().enumerate() {
                value *= tests[label].eval(*k) * fourier;
            }
            value
        })?;
        if let Some(err) = failure {
            return Err(err);
        }
        out.push(kernel.symmetrized(grid));
    }
    Ok(out)
}

/// Kernels of the Wick product smeared with one test function per label,
/// merged into an operator sum.
pub fn pointwise_wick_kernels(
    grid: &SpinMomentumGrid,
    monomial: &WickMonomial,
    tests: &[TestFunctionSpec],
) -> Result<OperatorSum> {
    if monomial.factors.is_empty() {
        return Err(Error::Invalid("Wick monomial needs at least one factor".into()));
    }
    let mut sum = OperatorSum::new();
    for k in monomial_split_kernels(grid, monomial, tests)? {
        sum.push(C64::new(1.0, 0.0), k);
    }
    Ok(sum)
}

pub fn polynomial_kernels(
    grid: &SpinMomentumGrid,
    polynomial: &WickPolynomial,
    tests: &[TestFunctionSpec],
) -> Result<OperatorSum> {
    let mut sum = OperatorSum::new();
    for m in &polynomial.terms {
        sum.extend(C64::new(1.0, 0.0), &pointwise_wick_kernels(grid, m, tests)?);
    }
    Ok(sum)
}

/// Which side of a contracted pair is the annihilation part.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairDirection {
    /// Annihilation part of the left factor with creation part of the right one.
    LeftAnnihilates,
    RightAnnihilates,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FactorPair {
    pub left: usize,
    pub right: usize,
    pub direction: PairDirection,
}

/// A set of factor pairings between two monomials with its fermionic sign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionScheme {
    pub pairs: Vec<FactorPair>,
    pub sign: f64,
}

impl ContractionScheme {
    pub fn order(&self) -> usize {
        self.pairs.len()
    }

    /// Only schemes whose every pair has the annihilator on the left survive
    /// in the product `M′·M″`; the others vanish once normal ordered.
    pub fn contributes_to_product(&self) -> bool {
        self.pairs.iter().all(|p| p.direction == PairDirection::LeftAnnihilates)
    }
}

/// All pairings between factors of `left` and `right` of the same species,
/// in both directions, ordered by size then lexicographically.
pub fn enumerate_contractions(left: &WickMonomial, right: &WickMonomial) -> Vec<ContractionScheme> {
    let nl = left.factors.len();
    let mut candidates = Vec::new();
    for i in 0..nl {
        for (j, fr) in right.factors.iter().enumerate() {
            if left.factors[i].species == fr.species {
                candidates.push(FactorPair { left: i, right: j, direction: PairDirection::LeftAnnihilates });
                candidates.push(FactorPair { left: i, right: j, direction: PairDirection::RightAnnihilates });
            }
        }
    }
    let mut found: Vec<Vec<FactorPair>> = vec![vec![]];
    fn extend(cands: &[FactorPair], start: usize, cur: &mut Vec<FactorPair>, out: &mut Vec<Vec<FactorPair>>) {
        for (k, c) in cands.iter().enumerate().skip(start) {
            if cur.iter().any(|p| p.left == c.left || p.right == c.right) {
                continue;
            }
            cur.push(*c);
            out.push(cur.clone());
            extend(cands, k + 1, cur, out);
            cur.pop();
        }
    }
    extend(&candidates, 0, &mut vec![], &mut found);
    found.sort_by_key(|s| s.len());
    let fermi: Vec<bool> = left.factors.iter().chain(&right.factors).map(|f| f.kind.is_fermionic()).collect();
    found
        .into_iter()
        .map(|pairs| {
            let mut used = vec![false; fermi.len()];
            for p in &pairs {
                used[p.left] = true;
                used[nl + p.right] = true;
            }
            let mut order: Vec<usize> = (0..fermi.len()).filter(|&i| !used[i]).collect();
            for p in &pairs {
                match p.direction {
                    PairDirection::LeftAnnihilates => order.extend([p.left, nl + p.right]),
                    PairDirection::RightAnnihilates => order.extend([nl + p.right, p.left]),
                }
            }
            ContractionScheme { sign: rearrangement_sign(&fermi, &order), pairs }
        })
        .collect()
}

fn check_regularised(grid: &SpinMomentumGrid, sum: &OperatorSum, epsilon: f64) -> Result<()> {
    for k in sum.terms() {
        for s in k.slots() {
            let sp = &grid.species()[s.species];
            if sp.mass > 0.0 || matches!(sp.dispersion_rule(), Dispersion::Regularized { .. }) {
                continue;
            }
            let closest = sp
                .momentum_points
                .iter()
                .map(|p| (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt())
                .fold(f64::INFINITY, f64::min);
            if closest < epsilon {
                return Err(Error::Refused(format!(
                    "massless species '{}' is unregularised and its grid reaches |p| = {closest:.3e} < ε = {epsilon}; \
                     use a regularised dispersion",
                    sp.name
                )));
            }
        }
    }
    Ok(())
}

/// Normal-ordered form of the product `Ξ′ ∘ Ξ″`: the sum over kernel pairs
/// and contraction patterns of `sign · κ′ ⊗_k κ″`. Massless slots must be
/// regularised with mass `ε` (or kept at least `ε` away from zero momentum).
pub fn wick_decompose_product(
    grid: &SpinMomentumGrid,
    left: &OperatorSum,
    right: &OperatorSum,
    epsilon: f64,
) -> Result<OperatorSum> {
    if !(epsilon > 0.0) {
        return Err(Error::Invalid("the regulator ε must be positive".into()));
    }
    check_regularised(grid, left, epsilon)?;
    check_regularised(grid, right, epsilon)?;
    let mut out = OperatorSum::new();
    for kl in left.terms() {
        for kr in right.terms() {
            for scheme in kernel_contractions(grid, kl, kr) {
                let k = contract(grid, kl, kr, &scheme.pairs)?;
                out.push(C64::new(scheme.sign, 0.0), k);
            }
        }
    }
    Ok(out)
}

/// Largest entrywise difference between `product` and the direct
/// composition `left ∘ right` on all basis states of sectors `≤ n_max`.
/// The composition is evaluated with enough headroom that no intermediate
/// sector is truncated.
pub fn composition_defect(
    grid: &SpinMomentumGrid,
    left: &OperatorSum,
    right: &OperatorSum,
    product: &OperatorSum,
    n_max: usize,
) -> Result<f64> {
    let headroom = right.terms().iter().map(|k| k.l()).max().unwrap_or(0);
    let mut worst: f64 = 0.0;
    for tuple in canonical_tuples(grid, n_max) {
        let e = FockVector::basis(grid, n_max, &tuple);
        if e.norm() == 0.0 {
            continue;
        }
        let wide = e.retruncate(n_max + headroom);
        let middle = right.apply_capped(grid, &wide, n_max + headroom)?;
        let direct = left.apply_capped(grid, &middle, n_max)?;
        let wick = product.apply_capped(grid, &e, n_max)?;
        worst = worst.max(direct.max_abs_diff(&wick));
    }
    Ok(worst)
}

/// Non-decreasing mode tuples of every sector up to `n_max`.
pub fn canonical_tuples(grid: &SpinMomentumGrid, n_max: usize) -> Vec<Vec<usize>> {
    let m = grid.n_modes();
    let mut out = vec![vec![]];
    let mut frontier: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..n_max {
        let mut next = Vec::new();
        for t in &frontier {
            let start = t.last().copied().unwrap_or(0);
            for q in start..m {
                let mut u = t.clone();
                u.push(q);
                next.push(u);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Operator class of a Wick product of the given species.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OperatorClass {
    /// Maps test states to test states (all fields massive).
    B,
    /// Maps test states only into the dual (some field massless).
    A,
}

pub fn classify_operator_class(masses: &[f64]) -> OperatorClass {
    if masses.iter().all(|&m| m > 0.0) {
        OperatorClass::B
    } else {
        OperatorClass::A
    }
}

/// [`classify_operator_class`] for the species used by a monomial.
pub fn monomial_class(grid: &SpinMomentumGrid, monomial: &WickMonomial) -> OperatorClass {
    let masses: Vec<f64> = monomial.factors.iter().map(|f| grid.species()[f.species].mass).collect();
    classify_operator_class(&masses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{Species, Statistics};

    fn scalar_grid() -> SpinMomentumGrid {
        SpinMomentumGrid::new(vec![
            Species::new("phi", Statistics::Bose, 1.0, 1, vec![[0.1, 0.0, 0.0], [0.0, 0.5, 0.0], [0.0, 0.0, -0.3]], vec![0.4, 0.6, 0.5]),
            Species::new("chi", Statistics::Bose, 2.0, 1, vec![[0.2, 0.0, 0.0]], vec![1.0]),
        ])
        .unwrap()
    }

    fn phi(species: usize, label: usize) -> FieldFactor {
        FieldFactor { kind: FieldKind::Scalar, species, component: 0, label }
    }

    #[test]
    fn single_factor_gives_the_free_field() {
        let g = scalar_grid();
        let sum = pointwise_wick_kernels(&g, &WickMonomial::new(vec![phi(0, 0)]), &[TestFunctionSpec::gaussian(1.0)]).unwrap();
        let lm: Vec<(usize, usize)> = sum.terms().iter().map(|k| (k.l(), k.m())).collect();
        assert_eq!(lm, vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn two_bose_factors_scheme_counts() {
        let a = WickMonomial::new(vec![phi(0, 0)]);
        let schemes = enumerate_contractions(&a, &a);
        assert_eq!(schemes.iter().filter(|s| s.order() == 0).count(), 1);
        assert_eq!(schemes.iter().filter(|s| s.order() == 1).count(), 2);
        let b = WickMonomial::new(vec![phi(1, 0)]);
        assert_eq!(enumerate_contractions(&a, &b).len(), 1);
    }

    #[test]
    fn scalar_product_is_normal_product_plus_two_point_function() {
        let g = scalar_grid();
        let f = [TestFunctionSpec::gaussian(1.2)];
        let h = [TestFunctionSpec::gaussian(0.8).centred([0.3, 0.0, 0.1, 0.0])];
        let left = pointwise_wick_kernels(&g, &WickMonomial::new(vec![phi(0, 0)]), &f).unwrap();
        let right = pointwise_wick_kernels(&g, &WickMonomial::new(vec![phi(0, 0)]), &h).unwrap();
        let product = wick_decompose_product(&g, &left, &right, 0.5).unwrap();
        let scalar = product.terms().iter().find(|k| k.l() + k.m() == 0).unwrap().data()[0];
        let vac = FockVector::vacuum(&g, 2);
        let two_point = left.apply(&g, &right.apply_capped(&g, &vac, 2).unwrap()).unwrap().sector(0)[0];
        assert!((scalar - two_point).norm() < 1e-14);
        assert!(composition_defect(&g, &left, &right, &product, 2).unwrap() < 1e-12);
    }

    #[test]
    fn product_needs_positive_regulator() {
        let g = scalar_grid();
        let s = OperatorSum::new();
        assert!(matches!(wick_decompose_product(&g, &s, &s, 0.0), Err(Error::Invalid(_))));
    }

    #[test]
    fn class_bookkeeping() {
        assert_eq!(classify_operator_class(&[0.5, 0.5]), OperatorClass::B);
        assert_eq!(classify_operator_class(&[0.5, 0.5, 0.0]), OperatorClass::A);
        assert_eq!(classify_operator_class(&[]), OperatorClass::B);
    }
}
