//! Clebsch–Gordan coefficients, Wigner 3jm and {l1 l2 l3; j j j} symbols and the
//! Wigner product symbol. Angular momenta are passed doubled unless noted.

use num_traits::Zero;

use crate::error::{domain, Result};
use crate::exact::{delta_squared, fact_rat, parity_sign, rat_int, triangle_ok, Rational, SqrtRational};
use crate::memo::Memo;

static CG_MEMO: Memo<[i64; 6], SqrtRational> = Memo::new();
static CG_F64_MEMO: Memo<[i64; 6], f64> = Memo::new();
static SIXJ_MEMO: Memo<[i64; 4], SqrtRational> = Memo::new();
static PROD_F64_MEMO: Memo<[i64; 6], f64> = Memo::new();

fn check_jm(j: i64, m: i64) -> Result<()> {
    if j < 0 {
        return domain(format!("negative angular momentum 2j = {j}"));
    }
    if m.abs() > j {
        return domain(format!("|m| > j (doubled m = {m}, j = {j})"));
    }
    if (j - m).rem_euclid(2) != 0 {
        return domain(format!("j - m not an integer (doubled j = {j}, m = {m})"));
    }
    Ok(())
}

/// C^{j1 j2 j3}_{m1 m2 m3} with all arguments doubled.
pub fn clebsch_gordan(j1: i64, m1: i64, j2: i64, m2: i64, j3: i64, m3: i64) -> Result<SqrtRational> {
    check_jm(j1, m1)?;
    check_jm(j2, m2)?;
    check_jm(j3, m3)?;
    if m1 + m2 != m3 || !triangle_ok(j1, j2, j3) {
        return Ok(SqrtRational::zero());
    }
    CG_MEMO.get_or_try([j1, m1, j2, m2, j3, m3], || cg_raw(j1, m1, j2, m2, j3, m3))
}

fn cg_raw(j1: i64, m1: i64, j2: i64, m2: i64, j3: i64, m3: i64) -> Result<SqrtRational> {
    let a = (j1 + j2 - j3) / 2;
    let b = (j1 - m1) / 2;
    let c = (j2 + m2) / 2;
    let d = (j3 - j2 + m1) / 2;
    let e = (j3 - j1 - m2) / 2;
    let zmin = 0.max(-d).max(-e);
    let zmax = a.min(b).min(c);
    let mut sum = Rational::zero();
    for z in zmin..=zmax {
        let den = fact_rat(z) * fact_rat(a - z) * fact_rat(b - z) * fact_rat(c - z) * fact_rat(d + z) * fact_rat(e + z);
        let term = den.recip();
        if z % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    if sum.is_zero() {
        return Ok(SqrtRational::zero());
    }
    let mut s2 = Rational::from_integer(1.into());
    for (j, m) in [(j1, m1), (j2, m2), (j3, m3)] {
        s2 *= fact_rat((j + m) / 2) * fact_rat((j - m) / 2);
    }
    let radicand = rat_int(j3 + 1) * delta_squared(j1, j2, j3)? * s2 * &sum * &sum;
    let sign = if sum > Rational::zero() { 1 } else { -1 };
    SqrtRational::new(sign, radicand)
}

/// Float value of a Clebsch–Gordan coefficient (memoized).
pub fn cg_f64(j1: i64, m1: i64, j2: i64, m2: i64, j3: i64, m3: i64) -> Result<f64> {
    CG_F64_MEMO.get_or_try([j1, m1, j2, m2, j3, m3], || clebsch_gordan(j1, m1, j2, m2, j3, m3)?.to_f64())
}

/// Wigner 3jm symbol (j1 j2 j3; m1 m2 m3), doubled arguments.
pub fn wigner_3jm(j1: i64, m1: i64, j2: i64, m2: i64, j3: i64, m3: i64) -> Result<SqrtRational> {
    check_jm(j1, m1)?;
    check_jm(j2, m2)?;
    check_jm(j3, m3)?;
    if m1 + m2 + m3 != 0 || !triangle_ok(j1, j2, j3) {
        return Ok(SqrtRational::zero());
    }
    let c = clebsch_gordan(j1, m1, j2, m2, j3, -m3)?;
    if c.is_zero() {
        return Ok(c);
    }
    let e = (j1 - j2 - m3) / 2;
    let inv = SqrtRational::sqrt(Rational::new(1.into(), (j3 + 1).into()))?;
    Ok((&c * &inv).mul_sign(parity_sign(e)))
}

/// {l1 l2 l3; j j j} with integer l's and n = 2j, by Racah's single sum.
pub fn wigner_6j_jjj(l1: i64, l2: i64, l3: i64, n: i64) -> Result<SqrtRational> {
    if n < 0 || l1 < 0 || l2 < 0 || l3 < 0 {
        return domain("negative argument to 6j");
    }
    if l1 > n || l2 > n || l3 > n {
        return domain(format!("6j: l exceeds n = {n}"));
    }
    if !triangle_ok(2 * l1, 2 * l2, 2 * l3) {
        return Ok(SqrtRational::zero());
    }
    let mut key = [l1, l2, l3];
    key.sort_unstable();
    SIXJ_MEMO.get_or_try([key[0], key[1], key[2], n], || sixj_raw(key[0], key[1], key[2], n))
}

fn sixj_raw(l1: i64, l2: i64, l3: i64, n: i64) -> Result<SqrtRational> {
    let big_l = l1 + l2 + l3;
    let kmin = l1.max(l2).max(l3).max(big_l - n);
    let kmax = (l1 + l2).min(l2 + l3).min(l3 + l1);
    let mut sum = Rational::zero();
    for k in kmin..=kmax {
        let num = fact_rat(n + 1 + k);
        let den = fact_rat(n + k - big_l) * r_factor(l1, l2, l3, k);
        let term = num / den;
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    if sum.is_zero() {
        return Ok(SqrtRational::zero());
    }
    let lf = fact_rat(l1) * fact_rat(l2) * fact_rat(l3);
    let mut rad = &lf * &lf * delta_squared(2 * l1, 2 * l2, 2 * l3)?;
    for l in [l1, l2, l3] {
        rad *= fact_rat(n - l) / fact_rat(n + l + 1);
    }
    rad *= &sum * &sum;
    let sign = parity_sign(n) * if sum > Rational::zero() { 1 } else { -1 };
    SqrtRational::new(sign, rad)
}

/// R(l1,l2,l3;k) = prod (k - l_i)! prod_{i<j} (l_i + l_j - k)!
pub(crate) fn r_factor(l1: i64, l2: i64, l3: i64, k: i64) -> Rational {
    fact_rat(k - l1) * fact_rat(k - l2) * fact_rat(k - l3) * fact_rat(l1 + l2 - k) * fact_rat(l2 + l3 - k) * fact_rat(l3 + l1 - k)
}

fn check_lm(l: i64, m: i64, n: i64) -> Result<()> {
    if l < 0 || l > n {
        return domain(format!("l = {l} outside 0..={n}"));
    }
    if m.abs() > l {
        return domain(format!("|m| = {} exceeds l = {l}", m.abs()));
    }
    Ok(())
}

/// Wigner product symbol [l1 l2 l3; m1 m2 m3][j], integer arguments, n = 2j.
pub fn product_symbol(l1: i64, m1: i64, l2: i64, m2: i64, l3: i64, m3: i64, n: i64) -> Result<SqrtRational> {
    check_lm(l1, m1, n)?;
    check_lm(l2, m2, n)?;
    check_lm(l3, m3, n)?;
    if m1 + m2 + m3 != 0 || !triangle_ok(2 * l1, 2 * l2, 2 * l3) {
        return Ok(SqrtRational::zero());
    }
    let three = wigner_3jm(2 * l1, -2 * m1, 2 * l2, -2 * m2, 2 * l3, -2 * m3)?;
    if three.is_zero() {
        return Ok(three);
    }
    let six = wigner_6j_jjj(l1, l2, l3, n)?;
    let dims = SqrtRational::sqrt(rat_int((2 * l1 + 1) * (2 * l2 + 1) * (2 * l3 + 1)))?;
    Ok(&(&dims * &three) * &six)
}

/// Product coefficient M[j]^{l1 l2 l}_{m1 m2 m1+m2} of e(l1,m1) e(l2,m2) along e(l, m1+m2).
pub fn product_coefficient(n: i64, l1: i64, m1: i64, l2: i64, m2: i64, l: i64) -> Result<SqrtRational> {
    check_lm(l1, m1, n)?;
    check_lm(l2, m2, n)?;
    if l < 0 || l > n {
        return domain(format!("l = {l} outside 0..={n}"));
    }
    let m = m1 + m2;
    if m.abs() > l {
        return Ok(SqrtRational::zero());
    }
    Ok(product_symbol(l1, m1, l2, m2, l, -m, n)?.mul_sign(parity_sign(n + m)))
}

/// Float product coefficient (memoized).
pub fn product_coefficient_f64(n: i64, l1: i64, m1: i64, l2: i64, m2: i64, l: i64) -> Result<f64> {
    PROD_F64_MEMO.get_or_try([n, l1, m1, l2, m2, l], || product_coefficient(n, l1, m1, l2, m2, l)?.to_f64())
}

/// Closed form of C^{l1 l2 l3}_{0 0 0}; zero for odd L or outside the triangle.
pub fn cg_000(l1: i64, l2: i64, l3: i64) -> Result<SqrtRational> {
    if l1 < 0 || l2 < 0 || l3 < 0 {
        return domain("negative l in cg_000");
    }
    let big_l = l1 + l2 + l3;
    if big_l % 2 == 1 || !triangle_ok(2 * l1, 2 * l2, 2 * l3) {
        return Ok(SqrtRational::zero());
    }
    let h = big_l / 2;
    let q = fact_rat(h) / (fact_rat(h - l1) * fact_rat(h - l2) * fact_rat(h - l3));
    let rad = rat_int(2 * l3 + 1) * delta_squared(2 * l1, 2 * l2, 2 * l3)? * &q * &q;
    SqrtRational::new(parity_sign((l1 + l2 - l3) / 2), rad)
}

/// Closed form of P(l1,l2,l3); zero for even L or outside the triangle.
pub fn poisson_p(l1: i64, l2: i64, l3: i64) -> Result<SqrtRational> {
    if l1 < 0 || l2 < 0 || l3 < 0 {
        return domain("negative l in poisson_p");
    }
    let big_l = l1 + l2 + l3;
    if big_l % 2 == 0 || !triangle_ok(2 * l1, 2 * l2, 2 * l3) {
        return Ok(SqrtRational::zero());
    }
    let h = (big_l - 1) / 2;
    let q = rat_int(big_l + 1) * fact_rat(h) / (fact_rat(h - l1) * fact_rat(h - l2) * fact_rat(h - l3));
    let rad = rat_int(2 * l3 + 1) * delta_squared(2 * l1, 2 * l2, 2 * l3)? * &q * &q;
    SqrtRational::new(parity_sign((l1 + l2 - l3 + 1) / 2), rad)
}

/// Number of cached exact Clebsch–Gordan values.
pub fn cg_cache_len() -> usize {
    CG_MEMO.len()
}
