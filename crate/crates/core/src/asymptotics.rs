//! Large-n behaviour: the two-term expansion of the product symbol, the
//! alternating factorial sums behind it, and numerical classification of
//! sequences of correspondences.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::correspondence::{family_chars, Family};
use crate::error::{domain, Error, Result};
use crate::exact::{factorial, rat_int, triangle_ok, Rational, SqrtRational};
use crate::sphere::{pointwise_product, poisson_bracket, sample_points, HarmonicVector};
use crate::twisted::twisted_product;
use crate::wigner::{cg_000, clebsch_gordan, poisson_p, product_coefficient, r_factor};

fn check_triangle(l1: usize, l2: usize, l3: usize) -> Result<()> {
    if !triangle_ok(2 * l1 as i64, 2 * l2 as i64, 2 * l3 as i64) {
        return Err(Error::TriangleViolation(l1 as i64, l2 as i64, l3 as i64));
    }
    Ok(())
}

/// Coefficient of n^0 (order 0) or n^-1 (order 1) in the normalized product symbol.
pub fn asymptotic_coeff(l1: usize, m1: i64, l2: usize, m2: i64, l3: usize, order: u8) -> Result<SqrtRational> {
    for (l, m) in [(l1, m1), (l2, m2)] {
        if m.unsigned_abs() as usize > l {
            return domain(format!("|m| = {} exceeds l = {l}", m.abs()));
        }
    }
    let m = m1 + m2;
    if m.unsigned_abs() as usize > l3 || !triangle_ok(2 * l1 as i64, 2 * l2 as i64, 2 * l3 as i64) {
        return Ok(SqrtRational::zero());
    }
    let cg = clebsch_gordan(2 * l1 as i64, 2 * m1, 2 * l2 as i64, 2 * m2, 2 * l3 as i64, 2 * m)?;
    let second = match order {
        0 => cg_000(l1 as i64, l2 as i64, l3 as i64)?,
        1 => poisson_p(l1 as i64, l2 as i64, l3 as i64)?,
        _ => return domain(format!("order must be 0 or 1, got {order}")),
    };
    Ok(&cg * &second)
}

/// (-1)^(n+m) sqrt((n+1)(2l+1)/((2l1+1)(2l2+1))) [l1 l2 l; m1 m2 -m][j], exactly.
pub fn normalized_product_symbol(l1: usize, m1: i64, l2: usize, m2: i64, l3: usize, n: usize) -> Result<SqrtRational> {
    let k = product_coefficient(n as i64, l1 as i64, m1, l2 as i64, m2, l3 as i64)?;
    let w = SqrtRational::sqrt(Rational::new(BigInt::from((n + 1) * (2 * l3 + 1)), BigInt::from((2 * l1 + 1) * (2 * l2 + 1))))?;
    Ok(&k * &w)
}

/// |normalized symbol - order 0 - order 1 / n|.
pub fn expansion_residual(l1: usize, m1: i64, l2: usize, m2: i64, l3: usize, n: usize) -> Result<f64> {
    let exact = normalized_product_symbol(l1, m1, l2, m2, l3, n)?.to_f64()?;
    let a0 = asymptotic_coeff(l1, m1, l2, m2, l3, 0)?.to_f64()?;
    let a1 = asymptotic_coeff(l1, m1, l2, m2, l3, 1)?.to_f64()?;
    Ok((exact - a0 - a1 / n as f64).abs())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PowerFit {
    pub exponent: f64,
    pub constant: f64,
}

/// Least-squares fit of y = C x^p on log-log axes; None if fewer than two positive samples.
pub fn power_fit(xs: &[f64], ys: &[f64]) -> Option<PowerFit> {
    let pts: Vec<(f64, f64)> = xs.iter().zip(ys).filter(|(x, y)| **x > 0.0 && **y > 0.0 && y.is_finite()).map(|(x, y)| (x.ln(), y.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let p = sxy / sxx;
    Some(PowerFit { exponent: p, constant: (my - p * mx).exp() })
}

/// Log-log slope of the expansion residual over `ns`; None when the residual vanishes identically.
pub fn residual_slope(l1: usize, m1: i64, l2: usize, m2: i64, l3: usize, ns: &[usize]) -> Result<Option<PowerFit>> {
    let ys = ns.iter().map(|&n| expansion_residual(l1, m1, l2, m2, l3, n)).collect::<Result<Vec<_>>>()?;
    let scale = ns.iter().zip(&ys).map(|(n, y)| y * (*n as f64).powi(2)).fold(0.0, f64::max);
    if scale < 1e-9 {
        return Ok(None);
    }
    let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    Ok(power_fit(&xs, &ys))
}

fn k_range(l1: usize, l2: usize, l3: usize) -> std::ops::RangeInclusive<usize> {
    l1.max(l2).max(l3)..=(l1 + l2).min(l2 + l3).min(l3 + l1)
}

fn sign(k: usize) -> i64 {
    if k.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// Sum over k of (-1)^k / R(l1,l2,l3;k).
pub fn sigma0_brute(l1: usize, l2: usize, l3: usize) -> Result<Rational> {
    check_triangle(l1, l2, l3)?;
    Ok(k_range(l1, l2, l3).map(|k| Rational::from_integer(sign(k).into()) / r_factor(l1 as i64, l2 as i64, l3 as i64, k as i64)).sum())
}

/// Sum over k of (-1)^k k / R(l1,l2,l3;k).
pub fn sigma1_brute(l1: usize, l2: usize, l3: usize) -> Result<Rational> {
    check_triangle(l1, l2, l3)?;
    Ok(k_range(l1, l2, l3).map(|k| Rational::from_integer((sign(k) * k as i64).into()) / r_factor(l1 as i64, l2 as i64, l3 as i64, k as i64)).sum())
}

/// Q = h! / prod l_i! (h - l_i)! with h = floor(L/2).
fn q_value(l1: usize, l2: usize, l3: usize) -> Rational {
    let h = (l1 + l2 + l3) / 2;
    let mut den = BigInt::one();
    for l in [l1, l2, l3] {
        den *= factorial(l) * factorial(h - l);
    }
    Rational::new(factorial(h), den)
}

pub fn sigma0_closed(l1: usize, l2: usize, l3: usize) -> Result<Rational> {
    check_triangle(l1, l2, l3)?;
    let big = l1 + l2 + l3;
    if big % 2 == 1 {
        return Ok(Rational::zero());
    }
    Ok(q_value(l1, l2, l3) * rat_int(sign(big / 2)))
}

/// ((-1)^[(L+1)/2] / 2)(1 + [(L+1)/2] + (-1)^L [(L-1)/2]) Q.
pub fn sigma1_closed(l1: usize, l2: usize, l3: usize) -> Result<Rational> {
    check_triangle(l1, l2, l3)?;
    let big = l1 + l2 + l3;
    let a = big.div_ceil(2);
    let b = (big as i64 - 1).div_euclid(2);
    let factor = 1 + a as i64 + sign(big) * b;
    Ok(q_value(l1, l2, l3) * Rational::new((sign(a) * factor).into(), 2.into()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SigmaSweep {
    pub max_total: usize,
    pub triangles: usize,
    pub odd_triangles: usize,
}

/// L! times (Sigma_0, Sigma_1) as integers: L!/R(k) is a multinomial coefficient.
fn scaled_sigmas(l1: usize, l2: usize, l3: usize) -> (BigInt, BigInt) {
    let big = l1 + l2 + l3;
    let ks = k_range(l1, l2, l3);
    let k0 = *ks.start();
    let parts = |k: usize| [k - l1, k - l2, k - l3, l1 + l2 - k, l2 + l3 - k, l3 + l1 - k];
    let mut term = factorial(big);
    for p in parts(k0) {
        term /= factorial(p);
    }
    let mut s0 = BigInt::zero();
    let mut s1 = BigInt::zero();
    for k in ks.clone() {
        if k > k0 {
            let prev = parts(k - 1);
            let num: BigInt = prev[3..].iter().map(|&v| BigInt::from(v)).product();
            let den: BigInt = parts(k)[..3].iter().map(|&v| BigInt::from(v)).product();
            term = term * num / den;
        }
        let t = if k % 2 == 0 { term.clone() } else { -term.clone() };
        s1 += &t * BigInt::from(k);
        s0 += t;
    }
    (s0, s1)
}

/// Checks both closed forms against the brute sums for every triangle with l1 <= l2 <= l3
/// and L <= max_total, in exact integers. The sums are symmetric in (l1, l2, l3).
pub fn verify_sigma_identities(max_total: usize) -> Result<SigmaSweep> {
    let mut triples = Vec::new();
    for l3 in 0..=max_total {
        for l2 in 0..=l3 {
            for l1 in (l3 - l2)..=l2 {
                if l1 + l2 + l3 <= max_total {
                    triples.push((l1, l2, l3));
                }
            }
        }
    }
    let bad = triples.par_iter().find_map_first(|&(l1, l2, l3)| {
        let big = l1 + l2 + l3;
        let (s0, s1) = scaled_sigmas(l1, l2, l3);
        // closed forms times L! and the product of factorials in Q
        let h = big / 2;
        let mut qden = BigInt::one();
        for l in [l1, l2, l3] {
            qden *= factorial(l) * factorial(h - l);
        }
        let qnum = factorial(h) * factorial(big);
        let c0 = if big % 2 == 1 { BigInt::zero() } else { &qnum * sign(h) };
        let a = big.div_ceil(2);
        let b = (big as i64 - 1).div_euclid(2);
        let c1_twice = &qnum * (sign(a) * (1 + a as i64 + sign(big) * b));
        if s0 * &qden != c0 {
            return Some((l1, l2, l3, "sigma0".to_string()));
        }
        if s1 * &qden * 2 != c1_twice {
            return Some((l1, l2, l3, "sigma1".to_string()));
        }
        None
    });
    if let Some((l1, l2, l3, which)) = bad {
        let (closed, brute) = match which.as_str() {
            "sigma0" => (sigma0_closed(l1, l2, l3)?, sigma0_brute(l1, l2, l3)?),
            _ => (sigma1_closed(l1, l2, l3)?, sigma1_brute(l1, l2, l3)?),
        };
        return Err(Error::Counterexample(l1, l2, l3, format!("{which} closed {closed}"), format!("brute {brute}")));
    }
    let odd = triples.iter().filter(|t| (t.0 + t.1 + t.2) % 2 == 1).count();
    Ok(SigmaSweep { max_total, triangles: triples.len(), odd_triangles: odd })
}

/// Value at h = 0 of the polynomial through (h_i, y_i).
pub fn neville_at_zero(hs: &[f64], ys: &[f64]) -> f64 {
    let mut p = ys.to_vec();
    let k = hs.len();
    for step in 1..k {
        for i in 0..(k - step) {
            p[i] = (hs[i + step] * p[i] - hs[i] * p[i + 1]) / (hs[i + step] - hs[i]);
        }
    }
    p[0]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LimitEstimate {
    pub value: f64,
    pub spread: f64,
    pub converged: bool,
}

/// Richardson estimate of lim y(n) in powers of 1/n from the last points, with the
/// estimate from the window shifted by one point as the convergence check.
pub fn estimate_limit(ns: &[usize], ys: &[f64], tol: f64) -> Option<LimitEstimate> {
    let k = ns.len().min(6);
    if ns.len() < 3 || k < 2 {
        return None;
    }
    let w = k - 1;
    let hs: Vec<f64> = ns.iter().map(|&n| 1.0 / n as f64).collect();
    let len = ns.len();
    let last = neville_at_zero(&hs[len - w..], &ys[len - w..]);
    let prev = neville_at_zero(&hs[len - w - 1..len - 1], &ys[len - w - 1..len - 1]);
    if !last.is_finite() || !prev.is_finite() {
        return None;
    }
    let spread = (last - prev).abs();
    Some(LimitEstimate { value: last, spread, converged: spread <= tol * last.abs().max(1.0) })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct TypeFlags {
    pub poisson: bool,
    pub anti_poisson: bool,
    pub pure: bool,
    pub limiting: bool,
    pub pseudo_classical: bool,
    pub quasi_classical: bool,
    pub strong_limiting: bool,
    pub bohr: bool,
    pub anti_bohr: bool,
    pub none: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SequenceReport {
    pub family: String,
    pub l_max: usize,
    pub n_grid: Vec<usize>,
    pub tolerance: f64,
    pub limits: Vec<Option<LimitEstimate>>,
    pub first_order: Vec<Option<LimitEstimate>>,
    pub diagonal: Option<LimitEstimate>,
    pub half_diagonal: Option<LimitEstimate>,
    pub sup_error_fit: Option<PowerFit>,
    pub flags: TypeFlags,
}

/// Numerical evidence for the type of the sequence n -> c^n; flags are not proofs.
pub fn classify_sequence(family: &Family, l_max: usize, n_grid: &[usize]) -> Result<SequenceReport> {
    classify_sequence_with_tol(family, l_max, n_grid, 1e-6)
}

pub fn classify_sequence_with_tol(family: &Family, l_max: usize, n_grid: &[usize], tol: f64) -> Result<SequenceReport> {
    if l_max < 1 {
        return domain("l_max must be at least 1");
    }
    if n_grid.len() < 3 || n_grid.windows(2).any(|w| w[0] >= w[1]) || n_grid[0] < l_max.max(1) {
        return domain("n_grid must be increasing, have at least 3 points, and start at n >= l_max");
    }
    // raw generator values: n^-l style sequences underflow long before l = n
    let chars: Vec<Vec<f64>> = n_grid.iter().map(|&n| (0..=n).map(|l| family.value(n, l)).collect()).collect();
    let column = |l: usize| -> Vec<f64> { chars.iter().map(|c| c[l]).collect() };
    let limits: Vec<Option<LimitEstimate>> = (0..=l_max).map(|l| estimate_limit(n_grid, &column(l), tol).filter(|e| e.converged)).collect();
    let limiting = limits.iter().all(Option::is_some);
    let lim = |l: usize| limits[l].map(|e| e.value);
    let near = |a: f64, b: f64| (a - b).abs() <= tol.sqrt().max(tol * 10.0);
    let poisson = limiting && (0..=l_max).all(|l| near(lim(l).unwrap(), 1.0));
    let anti = limiting && (0..=l_max).all(|l| near(lim(l).unwrap(), if l % 2 == 0 { 1.0 } else { -1.0 }));
    let pseudo = limiting && (0..=l_max).all(|l| lim(l).unwrap().abs() > tol.sqrt());
    let quasi = limiting && (0..=l_max).all(|l| near(lim(l).unwrap().abs(), 1.0));
    let target = |l: usize| if anti && !poisson && l % 2 == 1 { -1.0 } else { 1.0 };
    let first_order: Vec<Option<LimitEstimate>> = (0..=l_max)
        .map(|l| {
            let ys: Vec<f64> = n_grid.iter().zip(column(l)).map(|(&n, c)| n as f64 * (c - target(l))).collect();
            estimate_limit(n_grid, &ys, tol).filter(|e| e.converged)
        })
        .collect();
    let pure = (poisson || anti) && first_order.iter().all(|e| e.map(|e| e.value.abs() <= tol.sqrt()).unwrap_or(false));
    let diag: Vec<f64> = n_grid.iter().zip(&chars).map(|(&n, c)| c[n].abs()).collect();
    let half: Vec<f64> = n_grid.iter().zip(&chars).map(|(&n, c)| c[n / 2].abs()).collect();
    let diagonal = estimate_limit(n_grid, &diag, tol).filter(|e| e.converged);
    let half_diagonal = estimate_limit(n_grid, &half, tol).filter(|e| e.converged);
    let strong = match (diagonal, half_diagonal, lim(l_max)) {
        (Some(d), Some(h), Some(top)) => near(d.value, h.value) && near(d.value, top.abs()),
        _ => false,
    };
    let sup: Vec<f64> = if limiting {
        n_grid.iter().zip(&chars).map(|(_, c)| (0..=l_max).map(|l| (c[l] - lim(l).unwrap()).abs()).fold(0.0, f64::max)).collect()
    } else {
        Vec::new()
    };
    let xs: Vec<f64> = n_grid.iter().map(|&n| n as f64).collect();
    let sup_error_fit = if limiting { power_fit(&xs, &sup) } else { None };
    let mut flags = TypeFlags {
        poisson,
        anti_poisson: anti,
        pure,
        limiting,
        pseudo_classical: pseudo,
        quasi_classical: quasi,
        strong_limiting: strong,
        bohr: poisson && strong,
        anti_bohr: anti && strong,
        none: false,
    };
    flags.none = !(flags.limiting || flags.strong_limiting);
    Ok(SequenceReport {
        family: family.name(),
        l_max,
        n_grid: n_grid.to_vec(),
        tolerance: tol,
        limits,
        first_order,
        diagonal,
        half_diagonal,
        sup_error_fit,
        flags,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub sym_err: f64,
    pub comm_err: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceStudy {
    pub family: String,
    pub samples: usize,
    pub rows: Vec<ConvergenceRow>,
    pub sym_fit: Option<PowerFit>,
    pub comm_fit: Option<PowerFit>,
}

impl ConvergenceStudy {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,sym_err,comm_err\n");
        for r in &self.rows {
            s.push_str(&format!("{},{:e},{:e}\n", r.n, r.sym_err, r.comm_err));
        }
        s
    }
}

pub const CONVERGENCE_SAMPLES: usize = 2000;

/// Sup-norm distances of the symmetrized product from the pointwise product and of
/// (n/2)[f, g] from i{f, g}, for f = Y_{l1}^{m1}, g = Y_{l2}^{m2}.
pub fn convergence_study(family: &Family, l1: usize, m1: i64, l2: usize, m2: i64, n_grid: &[usize]) -> Result<ConvergenceStudy> {
    if n_grid.is_empty() || n_grid.iter().any(|&n| n < l1.max(l2).max(1)) {
        return domain("every n in the grid must be at least max(l1, l2, 1)");
    }
    let f0 = HarmonicVector::ylm(l1, m1)?;
    let g0 = HarmonicVector::ylm(l2, m2)?;
    let classical = pointwise_product(&f0, &g0, None);
    let bracket = poisson_bracket(&f0, &g0, None);
    let points = sample_points(CONVERGENCE_SAMPLES, 2024);
    let sup = |h: &HarmonicVector| points.iter().map(|p| h.evaluate(p).norm()).fold(0.0, f64::max);
    let rows = n_grid
        .par_iter()
        .map(|&n| -> Result<ConvergenceRow> {
            let c = family_chars(family, n)?;
            let f = f0.with_cap(n);
            let g = g0.with_cap(n);
            let fg = twisted_product(&f, &g, &c)?;
            let gf = twisted_product(&g, &f, &c)?;
            let sym = fg.add(&gf).scale(Complex64::new(0.5, 0.0)).sub(&classical);
            let comm = fg.sub(&gf).scale(Complex64::new(n as f64 / 2.0, 0.0)).sub(&bracket);
            Ok(ConvergenceRow { n, sym_err: sup(&sym), comm_err: sup(&comm) })
        })
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let sym_fit = power_fit(&xs, &rows.iter().map(|r| r.sym_err).collect::<Vec<_>>());
    let comm_fit = power_fit(&xs, &rows.iter().map(|r| r.comm_err).collect::<Vec<_>>());
    Ok(ConvergenceStudy { family: family.name(), samples: points.len(), rows, sym_fit, comm_fit })
}

/// 1 - pi_n with pi_n the degree-2 factor of the standard cartesian products.
pub fn one_minus_pi(n: usize) -> f64 {
    let nf = n as f64;
    1.0 - ((nf - 1.0) * (nf + 3.0) / (nf * (nf + 2.0))).sqrt()
}

/// Whether a Rational is an integer with the given value, for reports.
pub fn is_integer_value(r: &Rational, v: i64) -> bool {
    r.is_integer() && r.to_integer() == BigInt::from(v)
}
