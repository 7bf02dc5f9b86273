use causal_kernels::fields::{dirac_adjoint, dirac_kernel, em_kernel, minkowski, u_spinor, v_spinor, DiracAlgebra};
use causal_kernels::fock::C64;
use causal_kernels::kernels::Role;
use nalgebra::Matrix4;
use proptest::prelude::*;

fn momentum() -> impl Strategy<Value = [f64; 3]> {
    [-3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0]
}

fn energy(p: [f64; 3], m: f64) -> f64 {
    (p.iter().map(|x| x * x).sum::<f64>() + m * m).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn spinors_solve_the_dirac_equation(p in momentum(), m in 0.05f64..3.0, s in 1usize..3) {
        let alg = DiracAlgebra::chiral();
        let e = energy(p, m);
        let slash = alg.slash([e, p[0], p[1], p[2]]);
        let id = Matrix4::<C64>::identity();
        let u = u_spinor(s, p, m).unwrap();
        let v = v_spinor(s, p, m).unwrap();
        prop_assert!(((slash - id * C64::new(m, 0.0)) * u).norm() < 1e-12);
        prop_assert!(((slash + id * C64::new(m, 0.0)) * v).norm() < 1e-12);
        prop_assert!((u.norm_squared() - 1.0).abs() < 1e-12);
        prop_assert!((v.norm_squared() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spin_sums_give_the_projectors(p in momentum(), m in 0.05f64..3.0) {
        let alg = DiracAlgebra::chiral();
        let e = energy(p, m);
        let slash = alg.slash([e, p[0], p[1], p[2]]);
        let id = Matrix4::<C64>::identity() * C64::new(m, 0.0);
        let mut su = Matrix4::<C64>::zeros();
        let mut sv = Matrix4::<C64>::zeros();
        for s in 1..=2 {
            let u = u_spinor(s, p, m).unwrap();
            let v = v_spinor(s, p, m).unwrap();
            su += u * dirac_adjoint(&u).transpose();
            sv += v * dirac_adjoint(&v).transpose();
        }
        let scale = C64::new(1.0 / (2.0 * e), 0.0);
        prop_assert!((su - (slash + id) * scale).norm() < 1e-12);
        prop_assert!((sv - (slash - id) * scale).norm() < 1e-12);
    }

    #[test]
    fn dirac_kernel_translates_by_a_phase(p in momentum(), a in [-2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0], comp in 0usize..4) {
        let m = 0.8;
        let pp = [energy(p, m), p[0], p[1], p[2]];
        let x = [0.2, -0.1, 0.5, 0.3];
        let shifted = [x[0] + a[0], x[1] + a[1], x[2] + a[2], x[3] + a[3]];
        let k = dirac_kernel(1, p, m, comp, x, Role::Annihilation).unwrap();
        let k2 = dirac_kernel(1, p, m, comp, shifted, Role::Annihilation).unwrap();
        prop_assert!((k2 - k * C64::from_polar(1.0, -minkowski(pp, a))).norm() < 1e-12);
        let k = dirac_kernel(4, p, m, comp, x, Role::Creation).unwrap();
        let k2 = dirac_kernel(4, p, m, comp, shifted, Role::Creation).unwrap();
        prop_assert!((k2 - k * C64::from_polar(1.0, minkowski(pp, a))).norm() < 1e-12);
    }

    #[test]
    fn em_kernel_shrinks_with_regulator(p in momentum().prop_filter("nonzero", |p| p.iter().any(|x| x.abs() > 0.05)), e1 in 0.0f64..1.0, de in 0.01f64..1.0) {
        let a = em_kernel(2, p, 2, [0.0; 4], Role::Creation, e1).unwrap().norm();
        let b = em_kernel(2, p, 2, [0.0; 4], Role::Creation, e1 + de).unwrap().norm();
        prop_assert!(b < a);
    }
}

#[test]
fn plane_wave_dirac_residual_via_derivative() {
    // i γ^μ ∂_μ κ − m κ with ∂_μ e^{∓ip·x} = ∓ i p_μ e^{∓ip·x}
    let alg = DiracAlgebra::chiral();
    let (p, m, x) = ([0.4, -1.1, 0.7], 1.3, [0.5, 0.2, -0.3, 0.9]);
    let e = energy(p, m);
    for (s, role, sign) in [(1, Role::Annihilation, 1.0), (2, Role::Annihilation, 1.0), (3, Role::Creation, -1.0), (4, Role::Creation, -1.0)] {
        let k = nalgebra::Vector4::from_fn(|a, _| dirac_kernel(s, p, m, a, x, role).unwrap());
        let residual = alg.slash([e, p[0], p[1], p[2]]) * k * C64::new(sign, 0.0) - k * C64::new(m, 0.0);
        assert!(residual.norm() < 1e-12, "s = {s}: {}", residual.norm());
    }
}

#[test]
fn regularised_kernel_converges_quadratically() {
    let p = [0.3, 0.4, 0.0];
    let exact = em_kernel(0, p, 0, [0.0; 4], Role::Annihilation, 0.0).unwrap();
    let err: Vec<f64> = [0.1, 0.05, 0.025]
        .iter()
        .map(|&e| (em_kernel(0, p, 0, [0.0; 4], Role::Annihilation, e).unwrap() - exact).norm())
        .collect();
    for w in err.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((order - 2.0).abs() < 0.05, "observed order {order}");
    }
}
