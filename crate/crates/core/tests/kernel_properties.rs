use causal_kernels::fock::{a_apply, a_dagger_apply, FockVector, SmearedArgument, Species, SpinMomentumGrid, Statistics, C64};
use causal_kernels::kernels::{contract, pairing_check, xi_apply, xi_apply_capped, KernelLM, OperatorSum};
use proptest::prelude::*;
use rand::Rng;
use rand::rngs::StdRng;
use rand::SeedableRng;

fn mixed_grid() -> SpinMomentumGrid {
    SpinMomentumGrid::new(vec![
        Species::new("b", Statistics::Bose, 1.0, 1, vec![[0.2, 0.0, 0.0], [0.0, -0.5, 0.1]], vec![0.7, 1.3]),
        Species::new("f", Statistics::Fermi, 0.5, 2, vec![[0.1, 0.1, 0.0]], vec![0.9]),
    ])
    .unwrap()
}

fn slot_lists() -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
    (prop::collection::vec(0usize..2, 0..3), prop::collection::vec(0usize..2, 0..3))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn xi_action_matches_eta_pairing(seed in any::<u64>(), (c, a) in slot_lists()) {
        let g = mixed_grid();
        let mut rng = StdRng::seed_from_u64(seed);
        let k = KernelLM::random(&g, &c, &a, &mut rng).unwrap();
        let phi = FockVector::random(&g, 3, &mut rng);
        let psi = FockVector::random(&g, 3, &mut rng);
        let (lhs, rhs) = pairing_check(&g, &k, &phi, &psi).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-10 * (1.0 + rhs.norm()), "{lhs} vs {rhs}");
    }

    #[test]
    fn one_slot_kernels_are_the_field_operators(seed in any::<u64>(), species in 0usize..2) {
        let g = mixed_grid();
        let mut rng = StdRng::seed_from_u64(seed);
        let n = g.species()[species].n_modes();
        let w: Vec<C64> = (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let arg = SmearedArgument::new(&g, species, w.clone()).unwrap();
        let phi = FockVector::random(&g, 3, &mut rng);
        let create = KernelLM::from_fn(&g, &[species], &[], |t| w[t[0]]).unwrap();
        let annih = KernelLM::from_fn(&g, &[], &[species], |t| w[t[0]].conj()).unwrap();
        prop_assert!(xi_apply(&g, &create, &phi).unwrap().max_abs_diff(&a_dagger_apply(&arg, &phi).unwrap()) < 1e-12);
        prop_assert!(xi_apply(&g, &annih, &phi).unwrap().max_abs_diff(&a_apply(&arg, &phi).unwrap()) < 1e-12);
    }

    #[test]
    fn operator_sum_is_linear(seed in any::<u64>(), s in -2.0f64..2.0) {
        let g = mixed_grid();
        let mut rng = StdRng::seed_from_u64(seed);
        let k1 = KernelLM::random(&g, &[0], &[1], &mut rng).unwrap();
        let k2 = KernelLM::random(&g, &[0], &[1], &mut rng).unwrap();
        let phi = FockVector::random(&g, 2, &mut rng);
        let mut sum = OperatorSum::new();
        sum.push(C64::new(s, 0.0), k1.clone());
        sum.push(C64::new(1.0, 0.0), k2.clone());
        prop_assert_eq!(sum.len(), 1);
        let mut expected = xi_apply(&g, &k1, &phi).unwrap().scale(C64::new(s, 0.0));
        expected.axpy(C64::new(1.0, 0.0), &xi_apply(&g, &k2, &phi).unwrap()).unwrap();
        prop_assert!(sum.apply(&g, &phi).unwrap().max_abs_diff(&expected) < 1e-12);
    }
}

#[test]
fn full_contraction_of_annihilator_with_creator_is_the_commutator() {
    // ⟨Ω| a(f) a†(g) |Ω⟩ = Σ W f̄ g
    let g = mixed_grid();
    let f = [C64::new(1.0, 2.0), C64::new(-0.5, 0.0)];
    let h = [C64::new(0.3, -1.0), C64::new(2.0, 0.5)];
    let annih = KernelLM::from_fn(&g, &[], &[0], |t| f[t[0]].conj()).unwrap();
    let create = KernelLM::from_fn(&g, &[0], &[], |t| h[t[0]]).unwrap();
    let scalar = contract(&g, &annih, &create, &[(0, 0)]).unwrap();
    let vac = FockVector::vacuum(&g, 2);
    let direct = xi_apply(&g, &annih, &xi_apply(&g, &create, &vac).unwrap()).unwrap().sector(0)[0];
    assert!((scalar.data()[0] - direct).norm() < 1e-14);
}

#[test]
fn capped_application_counts_dropped_sectors() {
    let g = mixed_grid();
    let mut rng = StdRng::seed_from_u64(3);
    let k = KernelLM::random(&g, &[0], &[], &mut rng).unwrap();
    let phi = FockVector::random(&g, 2, &mut rng);
    let out = xi_apply_capped(&g, &k, &phi, 2).unwrap();
    assert!(out.truncation_loss() > 0);
    let wide = xi_apply_capped(&g, &k, &phi, 3).unwrap();
    assert_eq!(wide.truncation_loss(), phi.truncation_loss());
    assert!(out.max_abs_diff(&wide.retruncate(2)) < 1e-14);
}
