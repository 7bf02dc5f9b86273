use causal_kernels::gelfand::{
    a3_apply, apply_radial, conjugation_study, h1_apply, h1_spectrum, h1_spectrum_extrapolated, h_n_apply, norm_sq, nu_weight,
    sphere_area, t_of_r, u_inverse, u_map, LineGrid, RadialExpression, RadialGrid,
};
use causal_kernels::numerics::quadrature::{integrate, integrate_real_line, integrate_to_infinity, Tolerance};
use proptest::prelude::*;
use std::f64::consts::PI;

fn bump(t: f64) -> f64 {
    (-(t - 0.5).powi(2) / 2.0).exp()
}

#[test]
fn weight_is_the_jacobian_of_the_radial_substitution() {
    let tol = Tolerance::new(1e-13, 0.0);
    for n in 2..5 {
        let in_t = integrate_real_line(|t: f64| bump(t).powi(2) * nu_weight(n, t).unwrap(), 0.5, tol).unwrap().value;
        let near = integrate(|r: f64| bump(t_of_r(r)).powi(2) * r.powi(n as i32 - 1), 1e-3, 1.0, tol).unwrap().value;
        let far = integrate_to_infinity(|r: f64| bump(t_of_r(r)).powi(2) * r.powi(n as i32 - 1), 1.0, tol).unwrap().value;
        assert!((in_t - near - far).abs() < 1e-8 * in_t, "n={n}: {in_t} vs {}", near + far);
    }
}

#[test]
fn u_is_an_isometry_on_a_200_point_grid() {
    for n in 2..5 {
        let grid = RadialGrid::<f64>::uniform(n, 10.0, 200).unwrap();
        let image = u_map(&grid, bump).unwrap();
        // ‖f‖² = |𝕊ⁿ⁻¹| ∫ e^{−(t−½)²} dt
        let want = sphere_area::<f64>(n) * PI.sqrt();
        let got = norm_sq(&image, &grid.volume).unwrap();
        assert!((got - want).abs() < 1e-8 * want, "n={n}: {got} vs {want}");
        let back = u_inverse(&grid, &image).unwrap();
        for (t, b) in grid.t.iter().zip(&back) {
            assert!((b - bump(*t)).abs() < 1e-14);
        }
    }
}

#[test]
fn u_maps_gaussians_to_explicit_profiles() {
    let grid = RadialGrid::<f64>::uniform(3, 6.0, 60).unwrap();
    let image = u_map(&grid, |t| (-t * t / 2.0).exp()).unwrap();
    for (r, v) in grid.r.iter().zip(&image) {
        let want = (-(r - 1.0 / r).powi(2) / 2.0).exp() * ((r * r + 1.0) / r.powi(4)).sqrt();
        assert!((v - want).abs() < 1e-14 * want.max(1e-300));
    }
}

#[test]
fn oscillator_ground_states() {
    let line = LineGrid::<f64>::new(8.0, 800).unwrap();
    let f: Vec<f64> = line.x.iter().map(|x| (-x * x / 2.0).exp()).collect();
    let hf = h1_apply(&line, &f).unwrap();
    for (a, b) in hf.iter().zip(&f) {
        assert!((a - 2.0 * b).abs() < 1e-3);
    }
    // in three dimensions e^{−r²/2} has eigenvalue n + 1 = 4
    let grid = RadialGrid::<f64>::uniform(3, 8.0, 800).unwrap();
    let f: Vec<f64> = grid.r.iter().map(|r| (-r * r / 2.0).exp()).collect();
    let hf = h_n_apply(&grid, &f).unwrap();
    // the flux stencil is second order in h/r, so stay away from the origin
    for ((r, a), b) in grid.r.iter().zip(&hf).zip(&f).filter(|((r, _), _)| **r >= 0.5) {
        assert!((a - 4.0 * b).abs() < 1e-3, "{r}: {a} {b}");
    }
}

#[test]
fn oscillator_spectrum() {
    let plain = h1_spectrum(8.0, 400, 6).unwrap();
    let extrapolated = h1_spectrum_extrapolated(8.0, 400, 6).unwrap();
    for k in 0..6 {
        let want = 2.0 * k as f64 + 2.0;
        assert!((plain[k] - want).abs() < 1e-2);
        assert!((extrapolated[k] - want).abs() < 1e-3, "k={k}: {}", extrapolated[k]);
    }
    assert!(extrapolated[0] > 1.0);
    assert!(h1_spectrum_extrapolated(8.0, 401, 3).is_err());
}

#[test]
fn conjugated_oscillator_is_second_order_consistent() {
    let g = |r: f64| (-(r - 1.5).powi(2)).exp();
    let study = conjugation_study(RadialExpression::Conjugated { n: 3 }, g, 8.0, (0.5, 4.0), &[200, 400, 800]).unwrap();
    for order in &study.orders {
        assert!((order - 2.0).abs() < 0.2, "{study:?}");
    }
}

#[test]
fn displayed_a3_does_not_match_the_conjugated_oscillator() {
    // the radial coefficients differ already at leading order:
    // r²/(r²+1) against r⁴/(r²+1)² in front of ∂²
    let g = |r: f64| (-(r - 1.5).powi(2)).exp();
    let study = conjugation_study(RadialExpression::DisplayedA3, g, 8.0, (0.5, 4.0), &[200, 400, 800]).unwrap();
    assert!(study.residuals.iter().all(|r| *r > 0.1), "{study:?}");
    assert!(study.orders.iter().all(|o| o.abs() < 0.1), "{study:?}");
}

#[test]
fn displayed_a3_potential_grows_like_r_squared() {
    for r in [1e2f64, 1e3, 1e4] {
        let [a, b, c] = RadialExpression::DisplayedA3.coefficients(r);
        assert!((c / (r * r + 1.0 / (r * r)) - 1.0).abs() < 2.0 / (r * r));
        assert!((a + 1.0).abs() < 2.0 / (r * r));
        assert!((b * r + 1.0).abs() < 4.0 / (r * r));
    }
}

proptest! {
    #[test]
    fn a3_is_linear(a in -3.0..3.0f64, b in -3.0..3.0f64, c in 0.5..2.5f64) {
        let grid = RadialGrid::<f64>::uniform(3, 6.0, 120).unwrap();
        let f: Vec<f64> = grid.r.iter().map(|r| (-(r - c).powi(2)).exp()).collect();
        let g: Vec<f64> = grid.r.iter().map(|r| r * (-r * r).exp()).collect();
        let mix: Vec<f64> = f.iter().zip(&g).map(|(x, y)| a * x + b * y).collect();
        let (af, ag, am) = (a3_apply(&grid.r, &f).unwrap(), a3_apply(&grid.r, &g).unwrap(), a3_apply(&grid.r, &mix).unwrap());
        for i in 0..am.len() {
            prop_assert!((am[i] - a * af[i] - b * ag[i]).abs() < 1e-9 * (1.0 + am[i].abs()));
        }
    }

    #[test]
    fn oscillators_are_symmetric(seed in prop::collection::vec(-1.0..1.0f64, 120), other in prop::collection::vec(-1.0..1.0f64, 120)) {
        let grid = RadialGrid::<f64>::uniform(3, 6.0, 120).unwrap();
        let lhs = norm_inner(&h_n_apply(&grid, &seed).unwrap(), &other, &grid.volume);
        let rhs = norm_inner(&seed, &h_n_apply(&grid, &other).unwrap(), &grid.volume);
        prop_assert!((lhs - rhs).abs() < 1e-9 * (1.0 + lhs.abs()));

        let line = LineGrid::<f64>::new(5.0, 121).unwrap();
        let ones = vec![line.h; 120];
        let lhs = norm_inner(&h1_apply(&line, &seed).unwrap(), &other, &ones);
        let rhs = norm_inner(&seed, &h1_apply(&line, &other).unwrap(), &ones);
        prop_assert!((lhs - rhs).abs() < 1e-9 * (1.0 + lhs.abs()));
    }

    #[test]
    fn weight_is_positive(t in -50.0..50.0f64, n in 2u32..6) {
        prop_assert!(nu_weight(n, t).unwrap() > 0.0);
    }
}

fn norm_inner(a: &[f64], b: &[f64], w: &[f64]) -> f64 {
    a.iter().zip(b).zip(w).map(|((x, y), w)| x * y * w).sum()
}

#[test]
fn apply_radial_refuses_bad_grids() {
    assert!(apply_radial(RadialExpression::DisplayedA3, &[0.1, 0.3, 0.2], &[1.0; 3]).is_err());
    assert!(apply_radial(RadialExpression::DisplayedA3, &[0.1, 0.2], &[1.0; 2]).is_err());
    assert!(apply_radial(RadialExpression::DisplayedA3, &[-0.1, 0.1, 0.2], &[1.0; 3]).is_err());
}
