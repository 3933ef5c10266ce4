//! Twisted products of spherical polynomials induced by a symbol correspondence.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::correspondence::{family_chars_exact, CharacteristicNumbers, Family};
use crate::error::{domain, Error, Result};
use crate::exact::{rat, SqrtRational};
use crate::sphere::{legendre_all, pointwise_product, HarmonicVector};
use crate::su2_basis::lm_index;
use crate::wigner::{product_coefficient, product_coefficient_f64};

fn check_degree(f: &HarmonicVector, n: usize) -> Result<()> {
    let d = f.degree();
    if d > n {
        return Err(Error::DegreeTooHigh { degree: d, cap: n });
    }
    Ok(())
}

/// Pairwise tree sum in index order.
fn tree_sum(mut parts: Vec<HarmonicVector>, cap: usize) -> HarmonicVector {
    if parts.is_empty() {
        return HarmonicVector::zeros(cap);
    }
    while parts.len() > 1 {
        parts = parts.chunks(2).map(|c| if c.len() == 2 { c[0].add(&c[1]) } else { c[0].clone() }).collect();
    }
    parts.pop().unwrap()
}

/// f * g for the correspondence with characteristic numbers `c`.
pub fn twisted_product(f: &HarmonicVector, g: &HarmonicVector, c: &CharacteristicNumbers) -> Result<HarmonicVector> {
    let n = c.n();
    check_degree(f, n)?;
    check_degree(g, n)?;
    let sq = ((n + 1) as f64).sqrt();
    let fs: Vec<_> = f.iter().filter(|t| t.2 != Complex64::new(0.0, 0.0)).collect();
    let gs: Vec<_> = g.iter().filter(|t| t.2 != Complex64::new(0.0, 0.0)).collect();
    let parts = fs
        .par_iter()
        .map(|&(l1, m1, a)| -> Result<HarmonicVector> {
            let mut out = HarmonicVector::zeros(n);
            let mut acc = vec![Complex64::new(0.0, 0.0); (n + 1) * (n + 1)];
            for &(l2, m2, b) in &gs {
                let m = m1 + m2;
                let lo = l1.abs_diff(l2).max(m.unsigned_abs() as usize);
                let w = sq / (c.get(l1) * c.get(l2));
                let ab = a * b;
                for l in lo..=(l1 + l2).min(n) {
                    let k = product_coefficient_f64(n as i64, l1 as i64, m1, l2 as i64, m2, l as i64)?;
                    if k != 0.0 {
                        acc[lm_index(l, m)] += ab * (k * w * c.get(l));
                    }
                }
            }
            for (i, v) in acc.into_iter().enumerate() {
                if v != Complex64::new(0.0, 0.0) {
                    let (l, m) = crate::su2_basis::index_lm(i);
                    out.set(l, m, v)?;
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(tree_sum(parts, n))
}

/// Y_{l1}^{m1} * Y_{l2}^{m2} exactly, as ((l, m), coefficient) for the named families.
pub fn twisted_basis_product_exact(family: &Family, n: usize, l1: usize, m1: i64, l2: usize, m2: i64) -> Result<Vec<((usize, i64), SqrtRational)>> {
    let c = family_chars_exact(family, n)?;
    if l1 > n || l2 > n {
        return Err(Error::DegreeTooHigh { degree: l1.max(l2), cap: n });
    }
    let sq = SqrtRational::sqrt(rat(n as i64 + 1, 1))?;
    let w = &sq * &(&c[l1] * &c[l2]).recip()?;
    let m = m1 + m2;
    let mut out = Vec::new();
    for l in l1.abs_diff(l2).max(m.unsigned_abs() as usize)..=(l1 + l2).min(n) {
        let k = product_coefficient(n as i64, l1 as i64, m1, l2 as i64, m2, l as i64)?;
        if !k.is_zero() {
            out.push(((l, m), &(&k * &w) * &c[l]));
        }
    }
    Ok(out)
}

pub fn twisted_commutator(f: &HarmonicVector, g: &HarmonicVector, c: &CharacteristicNumbers) -> Result<HarmonicVector> {
    Ok(twisted_product(f, g, c)?.sub(&twisted_product(g, f, c)?))
}

pub fn twisted_anticommutator(f: &HarmonicVector, g: &HarmonicVector, c: &CharacteristicNumbers) -> Result<HarmonicVector> {
    Ok(twisted_product(f, g, c)?.add(&twisted_product(g, f, c)?))
}

/// Contravariant dual: f_{lm} / c_l^2.
pub fn dual_symbol(f: &HarmonicVector, c: &CharacteristicNumbers) -> Result<HarmonicVector> {
    check_degree(f, c.n())?;
    Ok(f.with_cap(c.n()).map_degree(|l| Complex64::new(1.0 / (c.get(l) * c.get(l)), 0.0)))
}

/// The cartesian coordinate functions x, y, z as degree-1 harmonic vectors.
pub fn cartesian_symbols() -> [HarmonicVector; 3] {
    let s6 = 6f64.sqrt();
    let mut x = HarmonicVector::zeros(1);
    x.set(1, -1, Complex64::new(1.0 / s6, 0.0)).unwrap();
    x.set(1, 1, Complex64::new(-1.0 / s6, 0.0)).unwrap();
    let mut y = HarmonicVector::zeros(1);
    y.set(1, -1, Complex64::new(0.0, 1.0 / s6)).unwrap();
    y.set(1, 1, Complex64::new(0.0, 1.0 / s6)).unwrap();
    let z = HarmonicVector::single(1, 1, 0, Complex64::new(1.0 / 3f64.sqrt(), 0.0)).unwrap();
    [x, y, z]
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CartesianReport {
    pub family: String,
    pub n: usize,
    pub pass: bool,
    pub max_residual: f64,
    pub sum_of_squares: f64,
    pub expected_sum_of_squares: f64,
}

/// Checks every product of two cartesian coordinates against the closed forms.
pub fn cartesian_identities_check(family: &Family, n: usize) -> Result<CartesianReport> {
    let nf = n as f64;
    let (pi, eps, diag_const, sos) = match family {
        Family::StratonovichStandard => {
            let pi = ((nf - 1.0) * (nf + 3.0) / (nf * (nf + 2.0))).sqrt();
            (pi, 1.0 / (nf * (nf + 2.0)).sqrt(), (1.0 - pi) / 3.0, 1.0)
        }
        Family::BerezinStandard => ((nf - 1.0) / nf, 1.0 / nf, 1.0 / nf, (nf + 2.0) / nf),
        other => return domain(format!("closed cartesian products are known for stratonovich and berezin, not {}", other.name())),
    };
    if n < 1 {
        return domain("n must be at least 1");
    }
    let c = crate::correspondence::family_chars(family, n)?;
    let xyz = cartesian_symbols();
    let cap = n.max(2);
    let mut worst = 0.0f64;
    let mut total = HarmonicVector::zeros(cap);
    for a in 0..3 {
        for b in 0..3 {
            let got = twisted_product(&xyz[a].with_cap(n), &xyz[b].with_cap(n), &c)?.with_cap(cap);
            let mut expect = pointwise_product(&xyz[a], &xyz[b], Some(2)).scale(Complex64::new(pi, 0.0)).with_cap(cap);
            if a == b {
                expect = expect.add(&HarmonicVector::single(cap, 0, 0, Complex64::new(diag_const, 0.0))?);
                total = total.add(&got);
            } else {
                let k = 3 - a - b;
                let sign = if (a + 1) % 3 == b { 1.0 } else { -1.0 };
                expect = expect.add(&xyz[k].with_cap(cap).scale(Complex64::new(0.0, sign * eps)));
            }
            worst = worst.max(got.max_abs_diff(&expect));
        }
    }
    let one = HarmonicVector::single(cap, 0, 0, Complex64::new(sos, 0.0))?;
    worst = worst.max(total.max_abs_diff(&one));
    Ok(CartesianReport {
        family: family.name(),
        n,
        pass: worst <= 1e-12,
        max_residual: worst,
        sum_of_squares: total.get(0, 0).re,
        expected_sum_of_squares: sos,
    })
}

/// (1/4pi) sum_{l<=n} (2l+1) P_l(t).
pub fn reproducing_kernel(n: usize, t: f64) -> Result<f64> {
    if !(t.abs() <= 1.0) {
        return domain(format!("reproducing kernel argument {t} outside [-1, 1]"));
    }
    let p = legendre_all(n, t);
    Ok(p.iter().enumerate().map(|(l, v)| (2 * l + 1) as f64 * v).sum::<f64>() / (4.0 * PI))
}

/// Largest coefficient of the wrong parity; even = 0 for even, 1 for odd.
pub fn parity_defect(f: &HarmonicVector, parity: usize) -> f64 {
    f.iter().filter(|t| t.0 % 2 != parity).map(|t| t.2.norm()).fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParityRuleResult {
    pub rule: String,
    pub pairs: usize,
    pub max_defect: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SymbolParityReport {
    pub n: usize,
    pub pass: bool,
    pub rules: Vec<ParityRuleResult>,
}

/// Checks the commutator and anticommutator parity rules on all basis pairs.
pub fn verify_symbol_parity(c: &CharacteristicNumbers) -> Result<SymbolParityReport> {
    let n = c.n();
    let mut rules: Vec<ParityRuleResult> = ["[[even,even]]=even", "[[odd,odd]]=even", "[[even,odd]]=odd", "[even,even]=odd", "[odd,odd]=odd", "[even,odd]=even"]
        .iter()
        .map(|r| ParityRuleResult { rule: r.to_string(), pairs: 0, max_defect: 0.0 })
        .collect();
    for l1 in 0..=n {
        for l2 in 0..=n {
            let class = match (l1 % 2, l2 % 2) {
                (0, 0) => 0,
                (1, 1) => 1,
                (0, 1) => 2,
                _ => continue,
            };
            let sum_parity = (l1 + l2) % 2;
            for m1 in -(l1 as i64)..=(l1 as i64) {
                for m2 in -(l2 as i64)..=(l2 as i64) {
                    let f = HarmonicVector::single(n, l1, m1, Complex64::new(1.0, 0.0))?;
                    let g = HarmonicVector::single(n, l2, m2, Complex64::new(1.0, 0.0))?;
                    let ab = twisted_product(&f, &g, c)?;
                    let ba = twisted_product(&g, &f, c)?;
                    let anti = parity_defect(&ab.add(&ba), sum_parity);
                    let comm = parity_defect(&ab.sub(&ba), 1 - sum_parity);
                    for (k, d) in [(class, anti), (class + 3, comm)] {
                        rules[k].pairs += 1;
                        rules[k].max_defect = rules[k].max_defect.max(d);
                    }
                }
            }
        }
    }
    let pass = rules.iter().all(|r| r.max_defect <= 1e-12);
    Ok(SymbolParityReport { n, pass, rules })
}

/// Largest deviation of Y * _{c-} Y' from Y' * _c Y over all basis pairs.
pub fn alternate_relation_defect(c: &CharacteristicNumbers) -> Result<f64> {
    let n = c.n();
    let alt = CharacteristicNumbers::new(n, (0..=n).map(|l| if l % 2 == 0 { c.get(l) } else { -c.get(l) }).collect())?;
    let mut worst = 0.0f64;
    for l1 in 0..=n {
        for m1 in -(l1 as i64)..=(l1 as i64) {
            let f = HarmonicVector::single(n, l1, m1, Complex64::new(1.0, 0.0))?;
            for l2 in 0..=n {
                for m2 in -(l2 as i64)..=(l2 as i64) {
                    let g = HarmonicVector::single(n, l2, m2, Complex64::new(1.0, 0.0))?;
                    let d = twisted_product(&f, &g, &alt)?.max_abs_diff(&twisted_product(&g, &f, c)?);
                    worst = worst.max(d);
                }
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correspondence::{berezin_chars, dual_chars, family_chars, operator_of, symbol_of};
    use crate::sphere::{build_grid, sample_points, HarmonicVector};
    use crate::su2_basis::OperatorMatrix;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};

    fn y(n: usize, l: usize, m: i64) -> HarmonicVector {
        HarmonicVector::single(n, l, m, Complex64::new(1.0, 0.0)).unwrap()
    }

    fn combo(n: usize, terms: &[(usize, i64, f64)]) -> HarmonicVector {
        let mut out = HarmonicVector::zeros(n);
        for &(l, m, v) in terms {
            out.set(l, m, out.get(l, m) + Complex64::new(v, 0.0)).unwrap();
        }
        out
    }

    fn random_operator(n: usize, seed: u64) -> OperatorMatrix {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        OperatorMatrix::from_dense(DMatrix::from_fn(n + 1, n + 1, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))).unwrap()
    }

    #[test]
    fn standard_basis_products() {
        for n in 2..=9usize {
            let c = family_chars(&Family::StratonovichStandard, n).unwrap();
            let nf = n as f64;
            let pi = ((nf - 1.0) * (nf + 3.0) / (nf * (nf + 2.0))).sqrt();
            let e = (3.0 / (nf * (nf + 2.0))).sqrt();
            let p = twisted_product(&y(n, 1, 0), &y(n, 1, 0), &c).unwrap();
            assert!(p.max_abs_diff(&combo(n, &[(2, 0, pi * 2.0 / 5f64.sqrt()), (0, 0, 1.0)])) < 1e-13);
            for s in [1i64, -1] {
                let p = twisted_product(&y(n, 1, s), &y(n, 1, s), &c).unwrap();
                assert!(p.max_abs_diff(&combo(n, &[(2, 2 * s, pi * 1.2f64.sqrt())])) < 1e-13);
                let p = twisted_product(&y(n, 1, 0), &y(n, 1, s), &c).unwrap();
                assert!(p.max_abs_diff(&combo(n, &[(2, s, pi * 0.6f64.sqrt()), (1, s, s as f64 * e)])) < 1e-13);
                let p = twisted_product(&y(n, 1, s), &y(n, 1, 0), &c).unwrap();
                assert!(p.max_abs_diff(&combo(n, &[(2, s, pi * 0.6f64.sqrt()), (1, s, -s as f64 * e)])) < 1e-13);
                let p = twisted_product(&y(n, 1, s), &y(n, 1, -s), &c).unwrap();
                assert!(p.max_abs_diff(&combo(n, &[(2, 0, pi / 5f64.sqrt()), (1, 0, -s as f64 * e), (0, 0, -1.0)])) < 1e-13);
            }
        }
    }

    #[test]
    fn berezin_basis_products() {
        for n in 2..=9usize {
            let c = berezin_chars(n).unwrap();
            let nf = n as f64;
            let k = (nf - 1.0) / nf;
            let e = 3f64.sqrt() / nf;
            let p = twisted_product(&y(n, 1, 1), &y(n, 1, -1), &c).unwrap();
            assert!(p.max_abs_diff(&combo(n, &[(2, 0, k / 5f64.sqrt()), (1, 0, -e), (0, 0, -(nf + 2.0) / nf)])) < 1e-13);
            let p = twisted_product(&y(n, 1, -1), &y(n, 1, 1), &c).unwrap();
            assert!(p.max_abs_diff(&combo(n, &[(2, 0, k / 5f64.sqrt()), (1, 0, e), (0, 0, -(nf + 2.0) / nf)])) < 1e-13);
            let p = twisted_product(&y(n, 1, 0), &y(n, 1, 0), &c).unwrap();
            assert!(p.max_abs_diff(&combo(n, &[(2, 0, k * 2.0 / 5f64.sqrt()), (0, 0, (nf + 2.0) / nf)])) < 1e-13);
        }
    }

    #[test]
    fn exact_products_match() {
        for n in 1..=6usize {
            for fam in Family::NAMED {
                let c = family_chars(&fam, n).unwrap();
                for (l1, m1, l2, m2) in [(1usize, 0i64, 1usize, 0i64), (1, 1, 1, -1), (n, 0, 1, 1), (n, -1, n, 1)] {
                    if m1.unsigned_abs() as usize > l1 || m2.unsigned_abs() as usize > l2 {
                        continue;
                    }
                    let ex = twisted_basis_product_exact(&fam, n, l1, m1, l2, m2).unwrap();
                    let mut v = HarmonicVector::zeros(n);
                    for ((l, m), k) in ex {
                        v.set(l, m, Complex64::new(k.f64(), 0.0)).unwrap();
                    }
                    let fl = twisted_product(&y(n, l1, m1), &y(n, l2, m2), &c).unwrap();
                    assert!(fl.max_abs_diff(&v) < 1e-12 * (1.0 + v.norm()));
                }
            }
        }
        // Y10 * Y10 = pi_n (2/sqrt5) Y20 + 1 exactly at n = 3: pi_3 = sqrt(12/15)
        let ex = twisted_basis_product_exact(&Family::StratonovichStandard, 3, 1, 0, 1, 0).unwrap();
        let get = |l: usize| ex.iter().find(|t| t.0 == (l, 0)).map(|t| t.1.clone()).unwrap_or_else(SqrtRational::zero);
        assert_eq!(get(0), SqrtRational::one());
        assert_eq!(get(1), SqrtRational::zero());
        assert_eq!(get(2), SqrtRational::sqrt(rat(16, 25)).unwrap());
    }

    #[test]
    fn unit_and_degree_cap() {
        for fam in Family::NAMED {
            let c = family_chars(&fam, 4).unwrap();
            let f = HarmonicVector::random(4, 3, false);
            let one = y(4, 0, 0);
            assert!(twisted_product(&one, &f, &c).unwrap().max_abs_diff(&f) < 1e-13);
            assert!(twisted_product(&f, &one, &c).unwrap().max_abs_diff(&f) < 1e-13);
        }
        let c = berezin_chars(2).unwrap();
        assert!(matches!(twisted_product(&y(3, 3, 0), &y(2, 0, 0), &c), Err(Error::DegreeTooHigh { degree: 3, cap: 2 })));
    }

    #[test]
    fn commutators() {
        for n in 1..=8usize {
            let c = family_chars(&Family::StratonovichStandard, n).unwrap();
            let [x, yy, z] = cartesian_symbols();
            let com = twisted_commutator(&x.with_cap(n), &yy.with_cap(n), &c).unwrap();
            let expect = z.with_cap(n).scale(Complex64::new(0.0, 2.0 / ((n * (n + 2)) as f64).sqrt()));
            assert!(com.max_abs_diff(&expect) < 1e-13);
            let f = HarmonicVector::random(n, 11, false);
            assert!(twisted_commutator(&f, &f, &c).unwrap().norm() < 1e-12);
        }
        let c = berezin_chars(4).unwrap();
        let mut even = HarmonicVector::random(4, 1, false);
        let mut even2 = HarmonicVector::random(4, 2, false);
        for (l, m, _) in HarmonicVector::zeros(4).iter() {
            if l % 2 == 1 {
                even.set(l, m, Complex64::new(0.0, 0.0)).unwrap();
                even2.set(l, m, Complex64::new(0.0, 0.0)).unwrap();
            }
        }
        let com = twisted_commutator(&even, &even2, &c).unwrap();
        assert!(parity_defect(&com, 1) < 1e-13);
        assert!(com.norm() > 1e-3);
        for p in sample_points(5, 2) {
            assert!((com.evaluate(&p) + com.evaluate(&p.antipode())).norm() < 1e-12);
        }
    }

    #[test]
    fn cartesian_checks() {
        for n in 1..=12usize {
            for fam in [Family::StratonovichStandard, Family::BerezinStandard] {
                let r = cartesian_identities_check(&fam, n).unwrap();
                assert!(r.pass, "{r:?}");
            }
        }
        let r = cartesian_identities_check(&Family::StratonovichStandard, 6).unwrap();
        assert!((r.sum_of_squares - 1.0).abs() < 1e-12);
        let r = cartesian_identities_check(&Family::BerezinStandard, 6).unwrap();
        assert!((r.sum_of_squares - 8.0 / 6.0).abs() < 1e-12);
        let c = family_chars(&Family::StratonovichStandard, 1).unwrap();
        let [x, _, _] = cartesian_symbols();
        let xx = twisted_product(&x, &x, &c).unwrap();
        assert!(xx.max_abs_diff(&combo(1, &[(0, 0, 1.0 / 3.0)])) < 1e-14);
        assert!(cartesian_identities_check(&Family::ToeplitzStandard, 3).is_err());
    }

    #[test]
    fn reproducing() {
        let n = 4;
        let grid = build_grid(2 * n + 2);
        let f = y(3, 3, 1);
        let g = y(5, 5, 0);
        for p in sample_points(5, 7) {
            let v = grid.integrate(|q| f.evaluate(q) * reproducing_kernel(n, p.dot(q)).unwrap());
            assert!((v - f.evaluate(&p)).norm() < 1e-10);
            let w = grid.integrate(|q| g.evaluate(q) * reproducing_kernel(n, p.dot(q)).unwrap());
            assert!(w.norm() < 1e-10);
        }
        for n in 0..10 {
            assert!((reproducing_kernel(n, 1.0).unwrap() - ((n + 1) * (n + 1)) as f64 / (4.0 * PI)).abs() < 1e-12);
        }
        assert!(reproducing_kernel(2, -1.01).is_err());
    }

    #[test]
    fn parity_rules() {
        assert!(verify_symbol_parity(&family_chars(&Family::StratonovichStandard, 4).unwrap()).unwrap().pass);
        assert!(verify_symbol_parity(&berezin_chars(5).unwrap()).unwrap().pass);
        let r = verify_symbol_parity(&family_chars(&Family::log_shift(), 3).unwrap()).unwrap();
        assert!(r.pass);
        assert_eq!(r.rules.len(), 6);
        assert!(r.rules.iter().all(|x| x.pairs > 0));
    }

    #[test]
    fn alternate_relation() {
        for n in 1..=4usize {
            for fam in [Family::StratonovichStandard, Family::BerezinStandard, Family::ToeplitzAlternate, Family::inverse_power()] {
                let c = family_chars(&fam, n).unwrap();
                assert!(alternate_relation_defect(&c).unwrap() < 1e-12);
            }
        }
    }

    #[test]
    fn homomorphism() {
        for n in 1..=5usize {
            for fam in Family::NAMED {
                let c = family_chars(&fam, n).unwrap();
                let p = random_operator(n, 3 * n as u64);
                let q = random_operator(n, 3 * n as u64 + 1);
                let lhs = symbol_of(&p.mul(&q).unwrap(), &c).unwrap();
                let rhs = twisted_product(&symbol_of(&p, &c).unwrap(), &symbol_of(&q, &c).unwrap(), &c).unwrap();
                assert!(lhs.max_abs_diff(&rhs) < 1e-11, "{fam:?} n={n}");
            }
        }
    }

    #[test]
    fn associativity_and_star() {
        for n in 1..=5usize {
            for fam in [Family::BerezinStandard, Family::ToeplitzAlternate, Family::log_shift()] {
                let c = family_chars(&fam, n).unwrap();
                let f = HarmonicVector::random(n, 1, false);
                let g = HarmonicVector::random(n, 2, false);
                let h = HarmonicVector::random(n, 3, false);
                let a = twisted_product(&twisted_product(&f, &g, &c).unwrap(), &h, &c).unwrap();
                let b = twisted_product(&f, &twisted_product(&g, &h, &c).unwrap(), &c).unwrap();
                assert!(a.max_abs_diff(&b) < 1e-10);
                let lhs = twisted_product(&f, &g, &c).unwrap().conj_fn();
                let rhs = twisted_product(&g.conj_fn(), &f.conj_fn(), &c).unwrap();
                assert!(lhs.max_abs_diff(&rhs) < 1e-11);
            }
        }
    }

    #[test]
    fn duality() {
        for n in 1..=5usize {
            let c = berezin_chars(n).unwrap();
            let d = dual_chars(&c);
            let f = HarmonicVector::random(n, 5, false);
            let g = HarmonicVector::random(n, 6, false);
            let lhs = dual_symbol(&twisted_product(&f, &g, &c).unwrap(), &c).unwrap();
            let rhs = twisted_product(&dual_symbol(&f, &c).unwrap(), &dual_symbol(&g, &c).unwrap(), &d).unwrap();
            assert!(lhs.max_abs_diff(&rhs) < 1e-10 * (1.0 + lhs.norm()));
            // the dual symbol is the 1/c symbol of the same operator
            let p = operator_of(&f, &c).unwrap();
            assert!(dual_symbol(&f, &c).unwrap().max_abs_diff(&symbol_of(&p, &d).unwrap()) < 1e-11);
        }
    }

    #[test]
    fn deterministic() {
        let c = berezin_chars(6).unwrap();
        let f = HarmonicVector::random(6, 9, false);
        let g = HarmonicVector::random(6, 10, false);
        let a = twisted_product(&f, &g, &c).unwrap();
        for _ in 0..5 {
            assert_eq!(twisted_product(&f, &g, &c).unwrap(), a);
        }
    }
}
