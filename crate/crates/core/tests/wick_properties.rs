use causal_kernels::fields::FieldKind;
use causal_kernels::fock::{Dispersion, Species, SpinMomentumGrid, Statistics, C64};
use causal_kernels::kernels::{kernel_contractions, KernelLM, TestFunctionSpec};
use causal_kernels::wick::dsl::{parse_monomial, SpeciesBinding};
use causal_kernels::wick::{
    composition_defect, enumerate_contractions, monomial_split_kernels, polynomial_kernels, wick_decompose_product,
    FieldFactor, WickMonomial,
};
use proptest::prelude::*;

const POINTS: [[f64; 3]; 3] = [[0.3, 0.0, 0.1], [-0.2, 0.4, 0.0], [0.0, -0.1, -0.5]];
const WEIGHTS: [f64; 3] = [0.5, 0.7, 0.4];

fn grid(species: &[&str]) -> SpinMomentumGrid {
    let all = species
        .iter()
        .map(|&name| match name {
            "phi" => Species::new("phi", Statistics::Bose, 1.0, 1, POINTS.to_vec(), WEIGHTS.to_vec()),
            "photon" => Species::new("photon", Statistics::Bose, 0.0, 4, POINTS.to_vec(), WEIGHTS.to_vec())
                .with_dispersion(Dispersion::Regularized { epsilon: 0.5 }),
            "electron" => Species::new("electron", Statistics::Fermi, 0.8, 4, POINTS.to_vec(), WEIGHTS.to_vec()),
            other => panic!("unknown species {other}"),
        })
        .collect();
    SpinMomentumGrid::new(all).unwrap()
}

fn tests() -> Vec<TestFunctionSpec> {
    vec![TestFunctionSpec::gaussian(1.5).centred([0.2, 0.1, 0.0, -0.1])]
}

fn other_tests() -> Vec<TestFunctionSpec> {
    vec![TestFunctionSpec::gaussian(1.1).with_monomial([0, 1, 0, 0], C64::new(0.5, 0.2)).with_monomial([0; 4], C64::new(1.0, 0.0))]
}

fn wick_defect(species: &[&str], left: &str, right: &str) -> f64 {
    let g = grid(species);
    let b = SpeciesBinding::default();
    let l = polynomial_kernels(&g, &parse_monomial(left, &g, &b).unwrap(), &tests()).unwrap();
    let r = polynomial_kernels(&g, &parse_monomial(right, &g, &b).unwrap(), &other_tests()).unwrap();
    let product = wick_decompose_product(&g, &l, &r, 0.5).unwrap();
    composition_defect(&g, &l, &r, &product, 2).unwrap()
}

#[test]
fn wick_theorem_matches_operator_composition() {
    let cases: [(&[&str], &str, &str); 6] = [
        (&["phi"], ":phi:", ":phi:"),
        (&["phi"], ":phi phi:", ":phi:"),
        (&["phi"], ":phi:", ":phi phi:"),
        (&["photon"], ":A[1]:", ":A[1]:"),
        (&["electron"], ":psi[0]:", ":psi#[0]:"),
        (&["electron"], ":psi#[2]:", ":psi[1]:"),
    ];
    for (species, l, r) in cases {
        let d = wick_defect(species, l, r);
        assert!(d < 1e-10, "{l} · {r}: {d:e}");
    }
}

#[test]
fn fermion_bilinears_compose() {
    let d = wick_defect(&["electron"], ":psi# psi:", ":psi#[1] psi[3]:");
    assert!(d < 1e-10, "{d:e}");
}

#[test]
fn swapping_fermionic_factors_negates_kernels() {
    let g = grid(&["electron"]);
    let f = |kind, component| FieldFactor { kind, species: 0, component, label: 0 };
    let a = WickMonomial::new(vec![f(FieldKind::DiracAdjoint, 1), f(FieldKind::Dirac, 2)]);
    let b = WickMonomial::new(vec![f(FieldKind::Dirac, 2), f(FieldKind::DiracAdjoint, 1)]);
    let ka = monomial_split_kernels(&g, &a, &tests()).unwrap();
    let kb = monomial_split_kernels(&g, &b, &tests()).unwrap();
    // split bit i marks factor i as creation, so reversing factors maps split r to its bit reverse
    for r in 0..4usize {
        let rr = ((r & 1) << 1) | (r >> 1);
        let x = &ka[r];
        let y = &kb[rr];
        assert!(x.same_signature(y));
        for (u, v) in x.data().iter().zip(y.data()) {
            assert_eq!(*u, -*v);
        }
    }
}

/// Independent count of partial matchings: every subset of candidate pairs
/// that uses each slot at most once.
fn bitmask_count(candidates: &[(usize, usize)]) -> usize {
    (0u32..1 << candidates.len())
        .filter(|mask| {
            let chosen: Vec<_> = (0..candidates.len()).filter(|i| mask >> i & 1 == 1).map(|i| candidates[i]).collect();
            chosen.iter().enumerate().all(|(i, a)| chosen[i + 1..].iter().all(|b| a.0 != b.0 && a.1 != b.1))
        })
        .count()
}

proptest! {
    #[test]
    fn kernel_scheme_count_matches_bitmask(left_a in prop::collection::vec(0usize..2, 0..4), right_c in prop::collection::vec(0usize..2, 0..4)) {
        let g = SpinMomentumGrid::new(vec![
            Species::new("b", Statistics::Bose, 1.0, 1, vec![[0.0, 0.0, 0.1]], vec![1.0]),
            Species::new("f", Statistics::Fermi, 1.0, 1, vec![[0.0, 0.0, 0.1]], vec![1.0]),
        ]).unwrap();
        let kl = KernelLM::zeros(&g, &[], &left_a).unwrap();
        let kr = KernelLM::zeros(&g, &right_c, &[]).unwrap();
        let mut cands = Vec::new();
        for (i, a) in left_a.iter().enumerate() {
            for (j, c) in right_c.iter().enumerate() {
                if a == c { cands.push((i, j)); }
            }
        }
        prop_assert_eq!(kernel_contractions(&g, &kl, &kr).len(), bitmask_count(&cands));
    }

    #[test]
    fn monomial_scheme_count_matches_bitmask(left in prop::collection::vec(0usize..3, 0..4), right in prop::collection::vec(0usize..3, 0..4)) {
        let factor = |s: usize| FieldFactor { kind: if s == 2 { FieldKind::Dirac } else { FieldKind::Scalar }, species: s, component: 0, label: 0 };
        let ml = WickMonomial::new(left.iter().map(|&s| factor(s)).collect());
        let mr = WickMonomial::new(right.iter().map(|&s| factor(s)).collect());
        let mut cands = Vec::new();
        for (i, a) in left.iter().enumerate() {
            for (j, c) in right.iter().enumerate() {
                if a == c {
                    // two directions per matched pair, both occupying the same factors
                    cands.push((i, j));
                    cands.push((i, j));
                }
            }
        }
        let schemes = enumerate_contractions(&ml, &mr);
        prop_assert_eq!(schemes.len(), bitmask_count(&cands));
    }
}

#[test]
fn current_times_current() {
    let d = wick_defect(&["electron"], ":psi# gamma[0] psi:", ":psi# gamma[2] psi:");
    assert!(d < 1e-10, "{d:e}");
}

#[test]
fn mixed_species_product() {
    let d = wick_defect(&["electron", "photon"], ":psi#[0] A[2]:", ":psi[1] A[2]:");
    assert!(d < 1e-10, "{d:e}");
}
