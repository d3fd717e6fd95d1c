mod common;

use proptest::prelude::*;

use silab::hermite::{expand, gauss_hermite_coeff, information_exponent};
use silab::MonomialPoly;

fn coeffs(max_deg: usize) -> impl Strategy<Value = Vec<f64>> {
    (0..=max_deg).prop_flat_map(|deg| prop::collection::vec(-5.0f64..5.0, deg + 1))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn expand_then_reconstruct(c in coeffs(10)) {
        let p = MonomialPoly::new(c).unwrap();
        let e = expand(&p);
        let grid: Vec<f64> = (0..=120).map(|k| -3.0 + k as f64 * 0.05).collect();
        let scale = grid.iter().map(|z| p.eval(*z).abs()).fold(1.0, f64::max);
        let err = grid.iter().map(|z| (e.reconstruct(*z) - p.eval(*z)).abs()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-9 * scale, "sup error {err} at scale {scale}");
    }

    #[test]
    fn exact_coefficients_match_quadrature(c in coeffs(8)) {
        let p = MonomialPoly::new(c).unwrap();
        let e = expand(&p);
        for k in 0..=8 {
            let q = gauss_hermite_coeff(|z| p.eval(z), k, 40).unwrap();
            prop_assert!((q - e.coeff(k)).abs() <= 1e-8, "k={k}: {q} vs {}", e.coeff(k));
        }
    }

    #[test]
    fn exponent_ignores_positive_scale(c in coeffs(8), s in 1e-3f64..1e3) {
        let p = MonomialPoly::new(c).unwrap();
        let e = expand(&p);
        let es = expand(&p.scale(s));
        prop_assert_eq!(
            information_exponent(&e, e.default_tol()),
            information_exponent(&es, es.default_tol())
        );
    }
}

#[test]
fn correlated_gaussian_identity() {
    let draws = 200_000;
    for (n, rho) in [0.0, 0.3, -0.3, 0.9, -0.9].into_iter().enumerate() {
        let mut g = common::rng(40 + n as u64);
        let s = (1.0f64 - rho * rho).sqrt();
        for j in 0..=4usize {
            let mut acc = common::Running::default();
            let mut g2 = common::rng(1000 * (n as u64 + 1) + j as u64);
            for _ in 0..draws {
                let z = common::normal(&mut g);
                let zp = rho * z + s * common::normal(&mut g2);
                acc.push(common::he(j, z) * common::he(j, zp));
            }
            let want = (1..=j).product::<usize>() as f64 * rho.powi(j as i32);
            let e = acc.estimate();
            assert!(e.within(want, 4.0), "rho={rho} j={j}: {} ± {} vs {want}", e.mean, e.se);
        }
    }
}
