use num_complex::Complex64;
use proptest::prelude::*;

use spincorr::asymptotics::{sigma0_brute, sigma0_closed, sigma1_brute, sigma1_closed};
use spincorr::correspondence::{operator_of, rotate_operator, symbol_of, CharacteristicNumbers};
use spincorr::exact::{rat, SqrtRational};
use spincorr::sphere::{pointwise_product, poisson_bracket, HarmonicVector, Rotation, SpherePoint};
use spincorr::su2_basis::{index_lm, lm_index};
use spincorr::trikernel::trikernel_coeff;
use spincorr::twisted::twisted_product;
use spincorr::wigner::{clebsch_gordan, wigner_3jm};

fn chars(n: usize) -> impl Strategy<Value = CharacteristicNumbers> {
    prop::collection::vec((0.2f64..2.0, any::<bool>()), n).prop_map(move |v| {
        let mut c = vec![1.0];
        c.extend(v.into_iter().map(|(x, neg)| if neg { -x } else { x }));
        CharacteristicNumbers::new(n, c).unwrap()
    })
}

fn point() -> impl Strategy<Value = SpherePoint> {
    (0.0f64..std::f64::consts::TAU, 0.0f64..std::f64::consts::PI).prop_map(|(t, p)| SpherePoint::new(t, p).unwrap())
}

/// Doubled (j, m) with j <= jmax.
fn jm(jmax: i64) -> impl Strategy<Value = (i64, i64)> {
    (0..=jmax).prop_flat_map(|j| (Just(j), 0..=j).prop_map(|(j, k)| (j, 2 * k - j)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sqrt_rational_text_roundtrip(s in -1i8..=1, p in 0i64..500, q in 1i64..500) {
        let x = SqrtRational::new(if p == 0 { 0 } else if s == 0 { 1 } else { s }, rat(p, q)).unwrap();
        let back: SqrtRational = x.to_string().parse().unwrap();
        prop_assert_eq!(back, x);
    }

    #[test]
    fn sqrt_rational_product_commutes(a in 1i64..200, b in 1i64..200, c in 1i64..200, d in 1i64..200) {
        let x = SqrtRational::new(1, rat(a, b)).unwrap();
        let y = SqrtRational::new(-1, rat(c, d)).unwrap();
        prop_assert_eq!(&x * &y, &y * &x);
        prop_assert_eq!(&x * &x.recip().unwrap(), SqrtRational::one());
    }

    #[test]
    fn cg_exchange_symmetry((j1, m1) in jm(7), (j2, m2) in jm(7), k in 0i64..8) {
        let j3 = (j1 - j2).abs() + 2 * k;
        prop_assume!(j3 <= j1 + j2 && (m1 + m2).abs() <= j3);
        let a = clebsch_gordan(j1, m1, j2, m2, j3, m1 + m2).unwrap();
        let b = clebsch_gordan(j2, m2, j1, m1, j3, m1 + m2).unwrap();
        let s = if ((j1 + j2 - j3) / 2) % 2 == 0 { 1 } else { -1 };
        prop_assert_eq!(a, b.mul_sign(s));
    }

    #[test]
    fn three_jm_cyclic((j1, m1) in jm(6), (j2, m2) in jm(6), k in 0i64..7) {
        let j3 = (j1 - j2).abs() + 2 * k;
        prop_assume!(j3 <= j1 + j2 && (m1 + m2).abs() <= j3);
        let m3 = -m1 - m2;
        prop_assert_eq!(wigner_3jm(j1, m1, j2, m2, j3, m3).unwrap(), wigner_3jm(j3, m3, j1, m1, j2, m2).unwrap());
    }

    #[test]
    fn index_layout(i in 0usize..10_000) {
        let (l, m) = index_lm(i);
        prop_assert_eq!(lm_index(l, m), i);
    }

    #[test]
    fn harmonic_json_roundtrip(n in 0usize..6, seed in any::<u64>()) {
        let f = HarmonicVector::random(n, seed, false);
        let g = HarmonicVector::from_json(&f.to_json(), Some(n)).unwrap();
        prop_assert!(g.max_abs_diff(&f) == 0.0);
    }

    #[test]
    fn classical_product_and_bracket(seed in any::<u64>()) {
        let f = HarmonicVector::random(3, seed, false);
        let g = HarmonicVector::random(3, seed ^ 0x5555, false);
        prop_assert!(pointwise_product(&f, &g, None).max_abs_diff(&pointwise_product(&g, &f, None)) < 1e-12);
        let fg = poisson_bracket(&f, &g, None);
        let gf = poisson_bracket(&g, &f, None);
        prop_assert!(fg.add(&gf).norm() < 1e-11 * (1.0 + fg.norm()));
    }

    #[test]
    fn symbol_roundtrip(c in (1usize..6).prop_flat_map(chars), seed in any::<u64>()) {
        let n = c.n();
        let f = HarmonicVector::random(n, seed, false);
        let back = symbol_of(&operator_of(&f, &c).unwrap(), &c).unwrap();
        prop_assert!(back.max_abs_diff(&f) < 1e-12);
    }

    #[test]
    fn unit_is_neutral(c in (1usize..6).prop_flat_map(chars), seed in any::<u64>()) {
        let n = c.n();
        let f = HarmonicVector::random(n, seed, false);
        let one = HarmonicVector::single(n, 0, 0, Complex64::new(1.0, 0.0)).unwrap();
        prop_assert!(twisted_product(&one, &f, &c).unwrap().max_abs_diff(&f) < 1e-12);
        prop_assert!(twisted_product(&f, &one, &c).unwrap().max_abs_diff(&f) < 1e-12);
    }

    #[test]
    fn twisted_product_is_associative(c in (1usize..5).prop_flat_map(chars), seed in any::<u64>()) {
        let n = c.n();
        let f = HarmonicVector::random(n, seed, false);
        let g = HarmonicVector::random(n, seed.wrapping_add(1), false);
        let h = HarmonicVector::random(n, seed.wrapping_add(2), false);
        let left = twisted_product(&twisted_product(&f, &g, &c).unwrap(), &h, &c).unwrap();
        let right = twisted_product(&f, &twisted_product(&g, &h, &c).unwrap(), &c).unwrap();
        prop_assert!(left.max_abs_diff(&right) < 1e-9 * (1.0 + left.norm()));
    }

    #[test]
    fn symbols_are_equivariant(c in (1usize..5).prop_flat_map(chars), seed in any::<u64>(), p in point()) {
        let n = c.n();
        let f = HarmonicVector::random(n, seed, false);
        let r = Rotation::random(seed ^ 0xabc);
        let rotated = symbol_of(&rotate_operator(&operator_of(&f, &c).unwrap(), &r).unwrap(), &c).unwrap();
        let lhs = rotated.evaluate(&r.apply(&p));
        prop_assert!((lhs - f.evaluate(&p)).norm() < 1e-9 * (1.0 + f.norm()));
    }

    #[test]
    fn trikernel_transposition(c in (1usize..5).prop_flat_map(chars), a in point(), b in point(), d in point()) {
        let v = trikernel_coeff(&c, &a, &b, &d).unwrap();
        let w = trikernel_coeff(&c, &b, &a, &d).unwrap();
        prop_assert!((v - w.conj()).norm() < 1e-9 * (1.0 + v.norm()));
    }

    #[test]
    fn sigma_closed_forms(l1 in 0usize..25, l2 in 0usize..25, l3 in 0usize..25) {
        prop_assume!(l3 >= l1.abs_diff(l2) && l3 <= l1 + l2);
        prop_assert_eq!(sigma0_closed(l1, l2, l3).unwrap(), sigma0_brute(l1, l2, l3).unwrap());
        prop_assert_eq!(sigma1_closed(l1, l2, l3).unwrap(), sigma1_brute(l1, l2, l3).unwrap());
    }
}
