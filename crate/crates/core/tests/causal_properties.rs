use causal_kernels::causal::inductive::{boxed_formula_check, build_a_r_d, partitions, Event, ToyModel};
use causal_kernels::causal::sokhotski::{sokhotski_limit, SokhotskiTest};
use causal_kernels::causal::support::causal_support_probe;
use causal_kernels::causal::{
    natural_normalization, singularity_degree, split_retarded_advanced, vacuum_polarization, CausalDistribution,
    Normalization, Prescription, SpectralDensity,
};
use causal_kernels::error::Error;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

fn synthetic() -> Vec<(CausalDistribution, i32)> {
    let d = |rho, alpha| CausalDistribution::new(rho, alpha, Prescription::Causal);
    vec![
        (d(SpectralDensity::Power { threshold: 1.0, exponent: 2.0 }, 0), -2),
        (d(SpectralDensity::Power { threshold: 1.0, exponent: 1.0 }, 1), 0),
        (CausalDistribution::vacuum_polarization(1.0), 2),
        (d(SpectralDensity::Power { threshold: 4.0, exponent: 2.0 }, 2), 2),
        (d(SpectralDensity::Exponential { threshold: 0.5, rate: 1.0 }, 1), 0),
    ]
}

#[test]
fn splitting_preserves_the_degree() {
    for (d, omega) in synthetic() {
        assert_eq!(singularity_degree(&d).unwrap(), omega, "{:?}", d.density);
        let split = split_retarded_advanced(&d, &[]).unwrap();
        assert_eq!(singularity_degree(&split.retarded).unwrap(), omega);
        assert_eq!(singularity_degree(&split.advanced).unwrap(), omega);
    }
}

#[test]
fn negative_degree_split_is_unique() {
    let (d, omega) = synthetic().remove(0);
    assert!(omega < 0);
    let split = split_retarded_advanced(&d, &[]).unwrap();
    assert!(split.retarded.normalization.iter().all(|c| *c == 0.0));
    assert!(matches!(split_retarded_advanced(&d, &[1e-6]), Err(Error::Refused(_))));
}

#[test]
fn normalization_above_the_degree_is_refused() {
    let d = CausalDistribution::vacuum_polarization(1.0);
    assert!(split_retarded_advanced(&d, &[0.3, -0.1]).is_ok());
    assert!(matches!(split_retarded_advanced(&d, &[0.0, 0.0, 1.0]), Err(Error::Refused(_))));
}

#[test]
fn retarded_minus_advanced_is_the_discontinuity() {
    for (d, _) in synthetic() {
        let split = split_retarded_advanced(&d, &[0.25]).unwrap_or_else(|_| split_retarded_advanced(&d, &[]).unwrap());
        let s0 = d.density.threshold();
        for x in [s0 * 1.3 + 0.1, s0 * 3.0 + 1.0, 40.0] {
            for p0 in [1.0, -1.0] {
                let r = split.retarded.eval(x, p0).unwrap();
                let a = split.advanced.eval(x, p0).unwrap();
                let disc = d.discontinuity(x, p0);
                assert!((r - a - disc).norm() < 1e-9 * disc.norm().max(1.0), "{:?} at {x}", d.density);
            }
        }
    }
}

#[test]
fn advanced_is_retarded_at_reflected_energy() {
    for (d, _) in synthetic() {
        let split = split_retarded_advanced(&d, &[]).unwrap();
        for x in [-3.0, 0.7, 9.0, 55.0] {
            for p0 in [0.4, 2.0] {
                let a = split.advanced.eval(x, p0).unwrap();
                let r = split.retarded.eval(x, -p0).unwrap();
                assert_eq!(a, r);
            }
        }
    }
}

#[test]
fn natural_normalization_solves_both_conditions() {
    // ∫ s⁻²/(x − s) ds over [1, ∞): value −1/2 and slope −1/3 at x = 0
    let d = CausalDistribution::new(SpectralDensity::Power { threshold: 1.0, exponent: 2.0 }, 0, Prescription::Causal);
    let [c0, c1] = natural_normalization(&d, 1e-3).unwrap();
    assert!((c0 - 0.5).abs() < 1e-5 && (c1 - 1.0 / 3.0).abs() < 1e-5, "{c0} {c1}");
    let [v0, v1] = natural_normalization(&CausalDistribution::vacuum_polarization(1.0), 1e-3).unwrap();
    // already natural: the two-point solve only sees the O(h²) curvature
    assert!(v0.abs() < 1e-6 && v1.abs() < 1e-6, "{v0} {v1}");
}

#[test]
fn vacuum_polarization_vanishes_at_zero() {
    let v = vacuum_polarization(0.0, 1.0, Prescription::Causal, 0.0, &Normalization::Natural).unwrap();
    assert_eq!(v.norm(), 0.0);
    let c = vacuum_polarization(0.0, 1.0, Prescription::Causal, 0.0, &Normalization::PlusConstant { c: 0.2 }).unwrap();
    assert_eq!(c.re, 0.2);
}

#[test]
fn timelike_support_probe_is_nonzero() {
    let r = causal_support_probe(1.0, 0.05, &[(2.0, 0.5), (1.0, 0.0), (0.3, 1.5)], 8.0, 1e-8).unwrap();
    assert!(r.supported_in_cone, "{}", r.max_outside);
    assert!(r.min_inside.unwrap() > 1e-3);
}

#[test]
fn sokhotski_test_vanishing_at_the_origin_has_no_delta_part() {
    let t = SokhotskiTest::GaussianPolynomial { coefficients: [0.0, 0.0, 1.0], width: 1.0 };
    let eps: Vec<f64> = (0..6).map(|j| 0.08 / 2f64.powi(j)).collect();
    for k in 0..2 {
        let r = sokhotski_limit(&t, k, &eps).unwrap();
        assert!(r.delta_part.unwrap().abs() < 1e-6);
    }
}

#[test]
fn partition_count_for_three_events() {
    let p = partitions(3);
    assert_eq!(p.len(), 3);
    for (x, y) in p {
        assert_eq!(x & y, 0);
        assert_eq!(x | y, 0b11);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn krein_and_series_inverses_agree(seed in any::<u64>(), times in prop::collection::vec(-2.0f64..2.0, 1..4)) {
        let mut rng = StdRng::seed_from_u64(seed);
        let model = ToyModel::random(vec![-1.0, 1.0, 1.0, 1.0], 3, &mut rng).unwrap();
        let mut ts = times.clone();
        ts.sort_by(|a, b| a.total_cmp(b));
        prop_assume!(ts.windows(2).all(|w| w[1] - w[0] > 1e-6));
        let ev: Vec<Event> = times.iter().enumerate().map(|(j, t)| Event::new(*t, 0.3 * j as f64)).collect();
        let series = model.inverse_series(&ev).unwrap();
        for mask in 1..(1u32 << ev.len()) {
            let krein = model.inverse_krein(&ev, mask).unwrap();
            prop_assert!((&series[mask as usize] - krein).camax() < 1e-10);
        }
    }

    #[test]
    fn boxed_formula_holds_at_orders_two_and_three(seed in any::<u64>(), n in 2usize..4) {
        let mut rng = StdRng::seed_from_u64(seed);
        let model = ToyModel::random(vec![-1.0, 1.0, 1.0], 2, &mut rng).unwrap();
        let mut ev: Vec<Event> = (0..n - 1).map(|j| Event::new(0.5 + 0.7 * j as f64, -0.2 * j as f64)).collect();
        ev.push(Event::new(-0.4, 0.9));
        let check = boxed_formula_check(&model, &ev).unwrap();
        prop_assert!(check.s_defect < 1e-9);
        prop_assert!(check.advanced_residual < 1e-9);
    }

    #[test]
    fn second_order_d_is_odd_under_exchange(seed in any::<u64>(), t in -1.0f64..1.0, z in -1.0f64..1.0) {
        let mut rng = StdRng::seed_from_u64(seed);
        let model = ToyModel::random(vec![1.0, -1.0], 2, &mut rng).unwrap();
        let a = Event::new(t, z);
        let b = Event::new(t + 0.37, z - 0.2);
        let d = build_a_r_d(&model, &[a, b]).unwrap().d;
        let e = build_a_r_d(&model, &[b, a]).unwrap().d;
        prop_assert!((d + e).camax() < 1e-12);
    }
}
