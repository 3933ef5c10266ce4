//! Integral trikernels of twisted products, recursive trikernels and the
//! Berezin-type transforms on spherical polynomials.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::correspondence::{berezin_value, transition_kernel, CharacteristicNumbers};
use crate::error::{Error, Result};
use crate::exact::triangle_ok;
use crate::sphere::{build_grid, legendre, sample_points, ylm_all, HarmonicVector, QuadratureGrid, SpherePoint};
use crate::su2_basis::lm_index;
use crate::twisted::{reproducing_kernel, twisted_product};
use crate::wigner::{product_coefficient_f64, wigner_3jm, wigner_6j_jjj};

fn dot(a: &SpherePoint, b: &SpherePoint) -> f64 {
    a.dot(b)
}

/// det[n1, n2, n3].
pub fn triple_det(p1: &SpherePoint, p2: &SpherePoint, p3: &SpherePoint) -> f64 {
    let a = p1.cartesian();
    let b = p2.cartesian();
    let c = p3.cartesian();
    a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) + a[2] * (b[0] * c[1] - b[1] * c[0])
}

/// X = n1.n2 + n2.n3 + n3.n1.
pub fn sum_of_dots(p1: &SpherePoint, p2: &SpherePoint, p3: &SpherePoint) -> f64 {
    dot(p1, p2) + dot(p2, p3) + dot(p3, p1)
}

fn three_conj_ylm(n: usize, p: [&SpherePoint; 3]) -> [Vec<Complex64>; 3] {
    p.map(|x| ylm_all(n, x).into_iter().map(|v| v.conj()).collect())
}

/// The coefficient sum shared by bona-fide and recursive trikernels.
fn trikernel_sum(n: usize, w: &[f64], ys: &[Vec<Complex64>; 3]) -> Result<Complex64> {
    let ni = n as i64;
    let idx3 = |l1: usize, l2: usize, l3: usize| (l1 * (n + 1) + l2) * (n + 1) + l3;
    let mut total = Complex64::new(0.0, 0.0);
    for l1 in 0..=n {
        for l2 in 0..=n {
            for l3 in l1.abs_diff(l2)..=(l1 + l2).min(n) {
                let wl = w[idx3(l1, l2, l3)];
                if wl == 0.0 {
                    continue;
                }
                for m1 in -(l1 as i64)..=(l1 as i64) {
                    let a = ys[0][lm_index(l1, m1)];
                    for m2 in -(l2 as i64)..=(l2 as i64) {
                        let m = m1 + m2;
                        if m.unsigned_abs() as usize > l3 {
                            continue;
                        }
                        // [l1 l2 l3; m1 m2 -m] = (-1)^(n+m) M
                        let k = product_coefficient_f64(ni, l1 as i64, m1, l2 as i64, m2, l3 as i64)?;
                        if k == 0.0 {
                            continue;
                        }
                        let sign = if (ni + m).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                        total += a * ys[1][lm_index(l2, m2)] * ys[2][lm_index(l3, -m)] * (sign * k * wl);
                    }
                }
            }
        }
    }
    let pre = if n.is_multiple_of(2) { 1.0 } else { -1.0 } * ((n + 1) as f64).sqrt() / (16.0 * PI * PI);
    Ok(total * pre)
}

fn bona_fide_weights(c: &CharacteristicNumbers) -> Vec<f64> {
    let n = c.n();
    let mut w = vec![0.0; (n + 1).pow(3)];
    for l1 in 0..=n {
        for l2 in 0..=n {
            for l3 in 0..=n {
                w[(l1 * (n + 1) + l2) * (n + 1) + l3] = c.get(l3) / (c.get(l1) * c.get(l2));
            }
        }
    }
    w
}

fn recursive_weights(c: &CharacteristicNumbers) -> Vec<f64> {
    let n = c.n();
    let mut w = vec![0.0; (n + 1).pow(3)];
    for l1 in 0..=n {
        for l2 in 0..=n {
            for l3 in 0..=n {
                w[(l1 * (n + 1) + l2) * (n + 1) + l3] = c.get(l1) * c.get(l2) * c.get(l3);
            }
        }
    }
    w
}

/// Bona-fide trikernel L_c(n1, n2, n3) from its spherical harmonic expansion.
pub fn trikernel_coeff(c: &CharacteristicNumbers, p1: &SpherePoint, p2: &SpherePoint, p3: &SpherePoint) -> Result<Complex64> {
    let ys = three_conj_ylm(c.n(), [p1, p2, p3]);
    trikernel_sum(c.n(), &bona_fide_weights(c), &ys)
}

/// Recursive trikernel T_c: the weights c_{l3}/(c_{l1} c_{l2}) become c_{l1} c_{l2} c_{l3}.
pub fn recursive_trikernel(c: &CharacteristicNumbers, p1: &SpherePoint, p2: &SpherePoint, p3: &SpherePoint) -> Result<Complex64> {
    let ys = three_conj_ylm(c.n(), [p1, p2, p3]);
    trikernel_sum(c.n(), &recursive_weights(c), &ys)
}

/// d^m P_l / dz^m = (2m-1)!! C^{(m+1/2)}_{l-m}(z).
pub fn legendre_derivative(l: usize, m: usize, z: f64) -> f64 {
    if m > l {
        return 0.0;
    }
    let alpha = m as f64 + 0.5;
    let k = l - m;
    let mut prev = 1.0;
    let mut cur = if k == 0 { 1.0 } else { 2.0 * alpha * z };
    for i in 2..=k {
        let fi = i as f64;
        let next = (2.0 * z * (fi + alpha - 1.0) * cur - (fi + 2.0 * alpha - 2.0) * prev) / fi;
        prev = cur;
        cur = next;
    }
    let mut df = 1.0;
    for i in 1..=m {
        df *= (2 * i - 1) as f64;
    }
    df * cur
}

fn tau(p1: &SpherePoint, p2: &SpherePoint, p3: &SpherePoint) -> Complex64 {
    Complex64::new(dot(p1, p2) - dot(p1, p3) * dot(p2, p3), -triple_det(p1, p2, p3))
}

/// The SO(3)-invariant function L_{l1,l2,l3}(n1, n2, n3).
pub fn invariant_l(l1: usize, l2: usize, l3: usize, p1: &SpherePoint, p2: &SpherePoint, p3: &SpherePoint) -> Result<Complex64> {
    if !triangle_ok(2 * l1 as i64, 2 * l2 as i64, 2 * l3 as i64) {
        return Err(Error::TriangleViolation(l1 as i64, l2 as i64, l3 as i64));
    }
    let big_l = l1 + l2 + l3;
    let z1 = dot(p1, p3);
    let z2 = dot(p2, p3);
    let tj = |m: i64| -> Result<f64> { wigner_3jm(2 * l1 as i64, 2 * m, 2 * l2 as i64, -2 * m, 2 * l3 as i64, 0)?.to_f64() };
    let mut s = Complex64::new(tj(0)? * legendre(l1, z1)? * legendre(l2, z2)?, 0.0);
    let t12 = tau(p1, p2, p3);
    let t21 = tau(p2, p1, p3);
    let par = if big_l.is_multiple_of(2) { 1.0 } else { -1.0 };
    for m in 1..=l1.min(l2) {
        let w = tj(m as i64)?;
        if w == 0.0 {
            continue;
        }
        let mut r = 1.0f64;
        for &l in &[l1, l2] {
            let mut q = 1.0;
            for k in (l - m + 1)..=(l + m) {
                q /= k as f64;
            }
            r *= q.sqrt();
        }
        let d = legendre_derivative(l1, m, z1) * legendre_derivative(l2, m, z2);
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        s += (t12.powu(m as u32) + t21.powu(m as u32) * par) * (sign * w * r * d);
    }
    Ok(s * ((2 * l1 + 1) * (2 * l2 + 1) * (2 * l3 + 1)) as f64)
}

fn invariant_sum(c: &CharacteristicNumbers, w: &[f64], p1: &SpherePoint, p2: &SpherePoint, p3: &SpherePoint) -> Result<Complex64> {
    let n = c.n();
    let mut total = Complex64::new(0.0, 0.0);
    for l1 in 0..=n {
        for l2 in 0..=n {
            for l3 in l1.abs_diff(l2)..=(l1 + l2).min(n) {
                let six = wigner_6j_jjj(l1 as i64, l2 as i64, l3 as i64, n as i64)?.to_f64()?;
                if six == 0.0 {
                    continue;
                }
                total += invariant_l(l1, l2, l3, p1, p2, p3)? * (six * w[(l1 * (n + 1) + l2) * (n + 1) + l3]);
            }
        }
    }
    let pre = if n.is_multiple_of(2) { 1.0 } else { -1.0 } * ((n + 1) as f64).sqrt() / (16.0 * PI * PI);
    Ok(total * pre)
}

/// Bona-fide trikernel through the 6j expansion in invariant functions.
pub fn trikernel_invariant(c: &CharacteristicNumbers, p1: &SpherePoint, p2: &SpherePoint, p3: &SpherePoint) -> Result<Complex64> {
    invariant_sum(c, &bona_fide_weights(c), p1, p2, p3)
}

/// Recursive trikernel through the 6j expansion.
pub fn recursive_trikernel_invariant(c: &CharacteristicNumbers, p1: &SpherePoint, p2: &SpherePoint, p3: &SpherePoint) -> Result<Complex64> {
    invariant_sum(c, &recursive_weights(c), p1, p2, p3)
}

/// ((n+1)/(2^n 4pi))^2 (1 + X + i det)^n.
pub fn wildberger_closed(n: usize, p1: &SpherePoint, p2: &SpherePoint, p3: &SpherePoint) -> Complex64 {
    let base = Complex64::new(1.0 + sum_of_dots(p1, p2, p3), triple_det(p1, p2, p3));
    let k = (n + 1) as f64 / (2f64.powi(n as i32) * 4.0 * PI);
    base.powu(n as u32) * (k * k)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PolarForm {
    pub amplitude: f64,
    pub phase: f64,
}

/// Modulus ((n+1)/4pi)^2 prod cos^n(beta_k) and phase (n/2) times the oriented area.
pub fn wildberger_polar(n: usize, p1: &SpherePoint, p2: &SpherePoint, p3: &SpherePoint) -> PolarForm {
    let half = |a: &SpherePoint, b: &SpherePoint| ((1.0 + dot(a, b)) / 2.0).max(0.0).sqrt();
    let cb = half(p2, p3) * half(p3, p1) * half(p1, p2);
    let area = oriented_area(p1, p2, p3);
    let k = (n + 1) as f64 / (4.0 * PI);
    PolarForm { amplitude: k * k * cb.powi(n as i32), phase: n as f64 / 2.0 * area }
}

/// Oriented area of the geodesic triangle n1 -> n2 -> n3.
pub fn oriented_area(p1: &SpherePoint, p2: &SpherePoint, p3: &SpherePoint) -> f64 {
    2.0 * triple_det(p1, p2, p3).atan2(1.0 + sum_of_dots(p1, p2, p3))
}

fn require_degree(f: &HarmonicVector, n: usize) -> Result<()> {
    let d = f.degree();
    if d > n {
        return Err(Error::DegreeTooHigh { degree: d, cap: n });
    }
    Ok(())
}

fn scale_blocks(f: &HarmonicVector, n: usize, w: impl Fn(usize) -> f64) -> Result<HarmonicVector> {
    require_degree(f, n)?;
    Ok(f.with_cap(n).map_degree(|l| Complex64::new(w(l), 0.0)))
}

/// f_{lm} -> (b_l^n)^2 f_{lm}.
pub fn berezin_transform(f: &HarmonicVector, n: usize) -> Result<HarmonicVector> {
    scale_blocks(f, n, |l| berezin_value(n, l).powi(2))
}

pub fn berezin_transform_inverse(f: &HarmonicVector, n: usize) -> Result<HarmonicVector> {
    scale_blocks(f, n, |l| berezin_value(n, l).powi(-2))
}

/// f_{lm} -> f_{lm} / b_l^n.
pub fn berezin_stratonovich(f: &HarmonicVector, n: usize) -> Result<HarmonicVector> {
    scale_blocks(f, n, |l| 1.0 / berezin_value(n, l))
}

/// f_{lm} -> b_l^n f_{lm}.
pub fn stratonovich_berezin(f: &HarmonicVector, n: usize) -> Result<HarmonicVector> {
    scale_blocks(f, n, |l| berezin_value(n, l))
}

/// Berezin transform at a point by quadrature against ((n+1)/4pi)((1 + n.n')/2)^n.
pub fn berezin_transform_integral(f: &HarmonicVector, n: usize, p: &SpherePoint, grid: &QuadratureGrid) -> Result<Complex64> {
    require_degree(f, n)?;
    grid.require(f.degree() + n)?;
    let k = (n + 1) as f64 / (4.0 * PI);
    Ok(grid.integrate(|q| f.evaluate(q) * (k * ((1.0 + p.dot(q)) / 2.0).powi(n as i32))))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntegralProductReport {
    pub n: usize,
    pub points: usize,
    pub grid_nodes: usize,
    pub residual: f64,
}

/// Largest gap between the double-integral and coefficient forms of f * g over fixed sample points.
pub fn integral_product_check(f: &HarmonicVector, g: &HarmonicVector, c: &CharacteristicNumbers, grid: &QuadratureGrid) -> Result<IntegralProductReport> {
    let n = c.n();
    require_degree(f, n)?;
    require_degree(g, n)?;
    grid.require(2 * n)?;
    let coeff = twisted_product(f, g, c)?;
    let w = bona_fide_weights(c);
    let conj_y: Vec<Vec<Complex64>> = grid.nodes.iter().map(|p| ylm_all(n, p).into_iter().map(|v| v.conj()).collect()).collect();
    let fv: Vec<Complex64> = grid.nodes.iter().zip(&grid.weights).map(|(p, w)| f.evaluate(p) * *w).collect();
    let gv: Vec<Complex64> = grid.nodes.iter().zip(&grid.weights).map(|(p, w)| g.evaluate(p) * *w).collect();
    let points = sample_points(6, 41);
    let mut worst = 0.0f64;
    for p in &points {
        let yp: Vec<Complex64> = ylm_all(n, p).into_iter().map(|v| v.conj()).collect();
        let rows = (0..grid.nodes.len())
            .into_par_iter()
            .map(|i| -> Result<Complex64> {
                let mut s = Complex64::new(0.0, 0.0);
                for j in 0..grid.nodes.len() {
                    let ys = [conj_y[i].clone(), conj_y[j].clone(), yp.clone()];
                    s += fv[i] * gv[j] * trikernel_sum(n, &w, &ys)?;
                }
                Ok(s)
            })
            .collect::<Result<Vec<_>>>()?;
        let quad: Complex64 = rows.iter().sum();
        worst = worst.max((quad - coeff.evaluate(p)).norm());
    }
    Ok(IntegralProductReport { n, points: points.len(), grid_nodes: grid.len(), residual: worst })
}

/// Largest gap between the marginal integral of L over its first point and the reproducing kernel.
pub fn marginal_check(c: &CharacteristicNumbers, pairs: &[(SpherePoint, SpherePoint)]) -> Result<f64> {
    let n = c.n();
    let grid = build_grid(2 * n);
    let mut worst = 0.0f64;
    for (p2, p) in pairs {
        let v = grid.nodes.iter().zip(&grid.weights).map(|(q, w)| Ok(trikernel_coeff(c, q, p2, p)? * *w)).sum::<Result<Complex64>>()?;
        worst = worst.max((v - reproducing_kernel(n, p2.dot(p))?).norm());
    }
    Ok(worst)
}

/// Largest gap in L_c(n1,n2,n) = double integral of U_{c,1/c} U_{c,1/c} T_c.
pub fn bona_fide_recursive_check(c: &CharacteristicNumbers, triples: &[[SpherePoint; 3]]) -> Result<f64> {
    let n = c.n();
    let dual = crate::correspondence::dual_chars(c);
    let grid = build_grid(2 * n);
    let mut worst = 0.0f64;
    for [p1, p2, p] in triples {
        let u1: Vec<f64> = grid.nodes.iter().map(|q| transition_kernel(c, &dual, p1.dot(q))).collect::<Result<_>>()?;
        let u2: Vec<f64> = grid.nodes.iter().map(|q| transition_kernel(c, &dual, p2.dot(q))).collect::<Result<_>>()?;
        let mut s = Complex64::new(0.0, 0.0);
        for (i, (a, wa)) in grid.nodes.iter().zip(&grid.weights).enumerate() {
            for (j, (b, wb)) in grid.nodes.iter().zip(&grid.weights).enumerate() {
                s += recursive_trikernel(c, a, b, p)? * (u1[i] * u2[j] * wa * wb);
            }
        }
        worst = worst.max((s - trikernel_coeff(c, p1, p2, p)?).norm());
    }
    Ok(worst)
}
