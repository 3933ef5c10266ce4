//! Spherical harmonics with unit norm under (1/4pi) times the area integral,
//! Legendre functions, the pointwise product and Poisson bracket in
//! coefficient space, and product quadrature grids.

use std::f64::consts::PI;

use num_complex::Complex64;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::error::{domain, Error, Result};
use crate::memo::Memo;
use crate::su2_basis::{index_lm, lm_index};
use crate::wigner::{cg_000, cg_f64, poisson_p};

static C000_MEMO: Memo<[i64; 3], f64> = Memo::new();
static PP_MEMO: Memo<[i64; 3], f64> = Memo::new();

/// Point on the unit sphere: longitude theta in [0, 2pi), colatitude phi in [0, pi].
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct SpherePoint {
    pub theta: f64,
    pub phi: f64,
}

impl SpherePoint {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !theta.is_finite() || !phi.is_finite() {
            return domain("non-finite angle");
        }
        if !(0.0..=PI).contains(&phi) {
            return domain(format!("colatitude {phi} outside [0, pi]"));
        }
        Ok(Self { theta: theta.rem_euclid(2.0 * PI), phi })
    }

    pub fn north() -> Self {
        Self { theta: 0.0, phi: 0.0 }
    }

    pub fn from_cartesian(x: f64, y: f64, z: f64) -> Result<Self> {
        let r = (x * x + y * y + z * z).sqrt();
        if r == 0.0 || !r.is_finite() {
            return domain("cannot project the origin onto the sphere");
        }
        let phi = (z / r).clamp(-1.0, 1.0).acos();
        Ok(Self { theta: y.atan2(x).rem_euclid(2.0 * PI), phi })
    }

    pub fn cartesian(&self) -> [f64; 3] {
        let s = self.phi.sin();
        [s * self.theta.cos(), s * self.theta.sin(), self.phi.cos()]
    }

    pub fn antipode(&self) -> Self {
        Self { theta: (self.theta + PI).rem_euclid(2.0 * PI), phi: PI - self.phi }
    }

    pub fn dot(&self, other: &Self) -> f64 {
        let a = self.cartesian();
        let b = other.cartesian();
        (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]).clamp(-1.0, 1.0)
    }
}

/// Rotation R_z(alpha) R_y(beta) R_z(gamma) of the sphere.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Rotation {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self { alpha, beta, gamma }
    }

    pub fn about_z(alpha: f64) -> Self {
        Self { alpha, beta: 0.0, gamma: 0.0 }
    }

    /// Seeded random rotation (uniform axis of the middle factor is not claimed).
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            alpha: rng.gen_range(0.0..2.0 * PI),
            beta: rng.gen_range(-1.0f64..1.0).acos(),
            gamma: rng.gen_range(0.0..2.0 * PI),
        }
    }

    pub fn matrix(&self) -> [[f64; 3]; 3] {
        let rz = |a: f64| [[a.cos(), -a.sin(), 0.0], [a.sin(), a.cos(), 0.0], [0.0, 0.0, 1.0]];
        let ry = |b: f64| [[b.cos(), 0.0, b.sin()], [0.0, 1.0, 0.0], [-b.sin(), 0.0, b.cos()]];
        let mul = |a: [[f64; 3]; 3], b: [[f64; 3]; 3]| {
            let mut c = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
                }
            }
            c
        };
        mul(mul(rz(self.alpha), ry(self.beta)), rz(self.gamma))
    }

    fn act(&self, p: &SpherePoint, transpose: bool) -> SpherePoint {
        let m = self.matrix();
        let v = p.cartesian();
        let w: Vec<f64> = (0..3).map(|i| (0..3).map(|k| if transpose { m[k][i] } else { m[i][k] } * v[k]).sum()).collect();
        SpherePoint::from_cartesian(w[0], w[1], w[2]).expect("rotation preserves the unit sphere")
    }

    pub fn apply(&self, p: &SpherePoint) -> SpherePoint {
        self.act(p, false)
    }

    pub fn apply_inverse(&self, p: &SpherePoint) -> SpherePoint {
        self.act(p, true)
    }
}

/// Uniform-area random points from a fixed seed.
pub fn sample_points(count: usize, seed: u64) -> Vec<SpherePoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let z: f64 = rng.gen_range(-1.0..1.0);
            let theta: f64 = rng.gen_range(0.0..2.0 * PI);
            SpherePoint { theta, phi: z.acos() }
        })
        .collect()
}

/// Legendre polynomial P_l(z).
pub fn legendre(l: usize, z: f64) -> Result<f64> {
    if !(z.abs() <= 1.0) {
        return domain(format!("legendre argument {z} outside [-1, 1]"));
    }
    Ok(legendre_unchecked(l, z))
}

pub(crate) fn legendre_unchecked(l: usize, z: f64) -> f64 {
    legendre_all(l, z)[l]
}

/// P_0(z), ..., P_l(z).
pub fn legendre_all(lmax: usize, z: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(lmax + 1);
    out.push(1.0);
    if lmax >= 1 {
        out.push(z);
    }
    for l in 2..=lmax {
        let lf = l as f64;
        let v = ((2.0 * lf - 1.0) * z * out[l - 1] - (lf - 1.0) * out[l - 2]) / lf;
        out.push(v);
    }
    out
}

/// Associated Legendre function with the (-1)^m phase; negative m by the reflection identity.
pub fn assoc_legendre(l: usize, m: i64, z: f64) -> Result<f64> {
    if !(z.abs() <= 1.0) {
        return domain(format!("assoc_legendre argument {z} outside [-1, 1]"));
    }
    let ma = m.unsigned_abs() as usize;
    if ma > l {
        return domain(format!("|m| = {ma} exceeds l = {l}"));
    }
    let s = (1.0 - z * z).max(0.0).sqrt();
    // P_m^m = (-1)^m (2m-1)!! s^m
    let mut pmm = 1.0;
    for k in 1..=ma {
        pmm *= -((2 * k - 1) as f64) * s;
    }
    let mut prev = 0.0;
    let mut cur = pmm;
    for ll in (ma + 1)..=l {
        let next = ((2 * ll - 1) as f64 * z * cur - (ll + ma - 1) as f64 * prev) / (ll - ma) as f64;
        prev = cur;
        cur = next;
    }
    if m >= 0 {
        return Ok(cur);
    }
    let mut ratio = 1.0;
    for k in (l - ma + 1)..=(l + ma) {
        ratio /= k as f64;
    }
    let sign = if ma.is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok(sign * ratio * cur)
}

/// sqrt(2l+1) sqrt((l-m)!/(l+m)!) P_l^m(z) for l = m..=lmax, m >= 0, by the normalized recurrence.
fn normalized_column(lmax: usize, m: usize, z: f64, s: f64) -> Vec<f64> {
    let mut r = 1.0f64;
    for k in 1..=m {
        r *= ((2 * k - 1) as f64 / (2 * k) as f64).sqrt();
    }
    let mut seed = ((2 * m + 1) as f64).sqrt() * r * s.powi(m as i32);
    if m % 2 == 1 {
        seed = -seed;
    }
    let mut out = Vec::with_capacity(lmax + 1 - m);
    out.push(seed);
    let mf = m as f64;
    for l in (m + 1)..=lmax {
        let lf = l as f64;
        let a = ((4.0 * lf * lf - 1.0) / ((lf - mf) * (lf + mf))).sqrt();
        let prev1 = out[l - m - 1];
        let v = if l == m + 1 {
            a * z * prev1
        } else {
            let b = ((2.0 * lf + 1.0) / (2.0 * lf - 3.0)).sqrt() * (((lf - mf - 1.0) * (lf + mf - 1.0)) / ((lf - mf) * (lf + mf))).sqrt();
            a * z * prev1 - b * out[l - m - 2]
        };
        out.push(v);
    }
    out
}

/// All Y_l^m(p) for l <= lmax, indexed by l^2 + l + m.
pub fn ylm_all(lmax: usize, p: &SpherePoint) -> Vec<Complex64> {
    let z = p.phi.cos();
    let s = p.phi.sin().abs();
    let mut out = vec![Complex64::zero(); (lmax + 1) * (lmax + 1)];
    for m in 0..=lmax {
        let col = normalized_column(lmax, m, z, s);
        let e = Complex64::from_polar(1.0, m as f64 * p.theta);
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        for (k, v) in col.iter().enumerate() {
            let l = m + k;
            let y = e * *v;
            out[lm_index(l, m as i64)] = y;
            if m > 0 {
                out[lm_index(l, -(m as i64))] = y.conj() * sign;
            }
        }
    }
    out
}

/// Y_l^m at a point.
pub fn eval_ylm(l: usize, m: i64, p: &SpherePoint) -> Result<Complex64> {
    let ma = m.unsigned_abs() as usize;
    if ma > l {
        return domain(format!("|m| = {ma} exceeds l = {l}"));
    }
    let col = normalized_column(l, ma, p.phi.cos(), p.phi.sin().abs());
    let y = Complex64::from_polar(1.0, ma as f64 * p.theta) * col[l - ma];
    if m >= 0 {
        Ok(y)
    } else if ma.is_multiple_of(2) {
        Ok(y.conj())
    } else {
        Ok(-y.conj())
    }
}

/// Values, theta-derivatives and phi-derivatives of all Y_l^m up to lmax.
pub fn ylm_all_with_derivatives(lmax: usize, p: &SpherePoint) -> (Vec<Complex64>, Vec<Complex64>, Vec<Complex64>) {
    let y = ylm_all(lmax, p);
    let mut dt = vec![Complex64::zero(); y.len()];
    let mut dp = vec![Complex64::zero(); y.len()];
    let up = Complex64::from_polar(1.0, -p.theta);
    let down = Complex64::from_polar(1.0, p.theta);
    for (i, v) in y.iter().enumerate() {
        let (l, m) = index_lm(i);
        let li = l as i64;
        dt[i] = Complex64::new(0.0, m as f64) * v;
        let mut d = Complex64::zero();
        if m < li {
            d += up * y[lm_index(l, m + 1)] * (((li - m) * (li + m + 1)) as f64).sqrt();
        }
        if m > -li {
            d -= down * y[lm_index(l, m - 1)] * (((li + m) * (li - m + 1)) as f64).sqrt();
        }
        dp[i] = d * 0.5;
    }
    (y, dt, dp)
}

/// Coefficient vector in the Y_l^m basis, 0 <= l <= cap.
#[derive(Clone, Debug, PartialEq)]
pub struct HarmonicVector {
    n: usize,
    coeffs: Vec<Complex64>,
}

impl HarmonicVector {
    pub fn zeros(n: usize) -> Self {
        Self { n, coeffs: vec![Complex64::zero(); (n + 1) * (n + 1)] }
    }

    pub fn from_vec(n: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != (n + 1) * (n + 1) {
            return Err(Error::DimensionMismatch { expected: (n + 1) * (n + 1), got: coeffs.len() });
        }
        Ok(Self { n, coeffs })
    }

    pub fn single(n: usize, l: usize, m: i64, v: Complex64) -> Result<Self> {
        let mut out = Self::zeros(n);
        out.set(l, m, v)?;
        Ok(out)
    }

    /// Y_l^m itself, with cap l.
    pub fn ylm(l: usize, m: i64) -> Result<Self> {
        Self::single(l, l, m, Complex64::new(1.0, 0.0))
    }

    /// Seeded random vector of degree <= n; real symbols when `real` is set.
    pub fn random(n: usize, seed: u64, real: bool) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Self::zeros(n);
        for l in 0..=n {
            for m in 0..=(l as i64) {
                let re: f64 = rng.gen_range(-1.0..1.0);
                let im: f64 = rng.gen_range(-1.0..1.0);
                if real {
                    let v = if m == 0 { Complex64::new(re, 0.0) } else { Complex64::new(re, im) };
                    out.coeffs[lm_index(l, m)] = v;
                    if m > 0 {
                        out.coeffs[lm_index(l, -m)] = v.conj() * if m % 2 == 0 { 1.0 } else { -1.0 };
                    }
                } else {
                    out.coeffs[lm_index(l, m)] = Complex64::new(re, im);
                    if m > 0 {
                        out.coeffs[lm_index(l, -m)] = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    }
                }
            }
        }
        out
    }

    pub fn cap(&self) -> usize {
        self.n
    }

    /// Highest l with a nonzero coefficient (0 for the zero vector).
    pub fn degree(&self) -> usize {
        self.coeffs.iter().rposition(|c| !c.is_zero()).map_or(0, |i| index_lm(i).0)
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn get(&self, l: usize, m: i64) -> Complex64 {
        if l > self.n || m.unsigned_abs() as usize > l {
            return Complex64::zero();
        }
        self.coeffs[lm_index(l, m)]
    }

    pub fn set(&mut self, l: usize, m: i64, v: Complex64) -> Result<()> {
        if l > self.n || m.unsigned_abs() as usize > l {
            return domain(format!("index (l={l}, m={m}) outside cap {}", self.n));
        }
        self.coeffs[lm_index(l, m)] = v;
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, i64, Complex64)> + '_ {
        self.coeffs.iter().enumerate().map(|(i, v)| {
            let (l, m) = index_lm(i);
            (l, m, *v)
        })
    }

    /// Same coefficients with a different cap (truncating or zero-padding).
    pub fn with_cap(&self, cap: usize) -> Self {
        let mut out = Self::zeros(cap);
        let k = out.coeffs.len().min(self.coeffs.len());
        out.coeffs[..k].copy_from_slice(&self.coeffs[..k]);
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let cap = self.n.max(other.n);
        let mut out = self.with_cap(cap);
        for (i, v) in other.coeffs.iter().enumerate() {
            out.coeffs[i] += v;
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self { n: self.n, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    /// Multiply each degree-l block by w(l).
    pub fn map_degree(&self, w: impl Fn(usize) -> Complex64) -> Self {
        let coeffs = self.coeffs.iter().enumerate().map(|(i, c)| c * w(index_lm(i).0)).collect();
        Self { n: self.n, coeffs }
    }

    /// Coefficients of the complex conjugate function.
    pub fn conj_fn(&self) -> Self {
        let mut out = Self::zeros(self.n);
        for (l, m, v) in self.iter() {
            let sign = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            out.coeffs[lm_index(l, -m)] = v.conj() * sign;
        }
        out
    }

    /// f_{l,-m} = (-1)^m conj(f_{l,m}) up to tol.
    pub fn is_real_symbol(&self, tol: f64) -> bool {
        self.max_abs_diff(&self.conj_fn()) <= tol
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let cap = self.n.max(other.n);
        let a = self.with_cap(cap);
        let b = other.with_cap(cap);
        a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    /// L2 norm under (1/4pi) dS.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// <f, g> under (1/4pi) dS, antilinear in f.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn evaluate(&self, p: &SpherePoint) -> Complex64 {
        let deg = self.degree();
        let y = ylm_all(deg, p);
        y.iter().zip(&self.coeffs).map(|(a, b)| a * b).sum()
    }

    /// Value, d/dtheta and d/dphi at a point.
    pub fn evaluate_with_derivatives(&self, p: &SpherePoint) -> (Complex64, Complex64, Complex64) {
        let deg = self.degree();
        let (y, dt, dp) = ylm_all_with_derivatives(deg, p);
        let dot = |v: &[Complex64]| v.iter().zip(&self.coeffs).map(|(a, b)| a * b).sum::<Complex64>();
        (dot(&y), dot(&dt), dot(&dp))
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.iter()
                .filter(|(_, _, v)| !v.is_zero())
                .map(|(l, m, v)| json!({"l": l, "m": m, "re": v.re, "im": v.im}))
                .collect(),
        )
    }

    pub fn from_json(v: &Value, cap: Option<usize>) -> Result<Self> {
        let items = v.as_array().ok_or_else(|| Error::Parse("expected a JSON list of coefficients".into()))?;
        let mut entries = Vec::new();
        for it in items {
            let field = |k: &str| it.get(k).ok_or_else(|| Error::Parse(format!("missing field {k}")));
            let l = field("l")?.as_u64().ok_or_else(|| Error::Parse("l must be a nonnegative integer".into()))? as usize;
            let m = field("m")?.as_i64().ok_or_else(|| Error::Parse("m must be an integer".into()))?;
            let re = it.get("re").and_then(Value::as_f64).unwrap_or(0.0);
            let im = it.get("im").and_then(Value::as_f64).unwrap_or(0.0);
            entries.push((l, m, Complex64::new(re, im)));
        }
        let deg = entries.iter().map(|e| e.0).max().unwrap_or(0);
        let mut out = Self::zeros(cap.unwrap_or(deg).max(deg));
        for (l, m, v) in entries {
            out.set(l, m, out.get(l, m) + v)?;
        }
        Ok(out)
    }
}

pub(crate) fn c000_f64(l1: usize, l2: usize, l: usize) -> f64 {
    C000_MEMO
        .get_or_try([l1 as i64, l2 as i64, l as i64], || cg_000(l1 as i64, l2 as i64, l as i64)?.to_f64())
        .expect("c000 on valid degrees")
}

pub(crate) fn poisson_p_f64(l1: usize, l2: usize, l: usize) -> f64 {
    PP_MEMO
        .get_or_try([l1 as i64, l2 as i64, l as i64], || poisson_p(l1 as i64, l2 as i64, l as i64)?.to_f64())
        .expect("poisson_p on valid degrees")
}

pub(crate) fn cg_int(l1: usize, m1: i64, l2: usize, m2: i64, l: usize) -> f64 {
    cg_f64(2 * l1 as i64, 2 * m1, 2 * l2 as i64, 2 * m2, 2 * l as i64, 2 * (m1 + m2)).expect("cg on valid indices")
}

/// Sum over nonzero coefficient pairs of w(l1, m1, l2, m2, l) f g Y_l^{m1+m2}.
fn bilinear(f: &HarmonicVector, g: &HarmonicVector, cap: usize, w: impl Fn(usize, i64, usize, i64, usize) -> f64) -> HarmonicVector {
    let mut out = HarmonicVector::zeros(cap);
    for (l1, m1, a) in f.iter().filter(|t| !t.2.is_zero()) {
        for (l2, m2, b) in g.iter().filter(|t| !t.2.is_zero()) {
            let m = m1 + m2;
            let lo = l1.abs_diff(l2).max(m.unsigned_abs() as usize);
            let ab = a * b;
            for l in lo..=(l1 + l2).min(cap) {
                let c = w(l1, m1, l2, m2, l);
                if c != 0.0 {
                    out.coeffs[lm_index(l, m)] += ab * c;
                }
            }
        }
    }
    out
}

/// Classical pointwise product, truncated at degree cap.
pub fn pointwise_product(f: &HarmonicVector, g: &HarmonicVector, cap: Option<usize>) -> HarmonicVector {
    let cap = cap.unwrap_or(f.degree() + g.degree());
    bilinear(f, g, cap, |l1, m1, l2, m2, l| {
        if (l1 + l2 + l) % 2 == 1 {
            return 0.0;
        }
        let k = (((2 * l1 + 1) * (2 * l2 + 1)) as f64 / (2 * l + 1) as f64).sqrt();
        k * cg_int(l1, m1, l2, m2, l) * c000_f64(l1, l2, l)
    })
}

/// i{f, g}, truncated at degree cap.
pub fn poisson_bracket(f: &HarmonicVector, g: &HarmonicVector, cap: Option<usize>) -> HarmonicVector {
    let cap = cap.unwrap_or(f.degree() + g.degree());
    bilinear(f, g, cap, |l1, m1, l2, m2, l| {
        if (l1 + l2 + l) % 2 == 0 {
            return 0.0;
        }
        let k = (((2 * l1 + 1) * (2 * l2 + 1)) as f64 / (2 * l + 1) as f64).sqrt();
        k * cg_int(l1, m1, l2, m2, l) * poisson_p_f64(l1, l2, l)
    })
}

/// i{f, g} at a point from the local-coordinate formula.
pub fn poisson_bracket_at(f: &HarmonicVector, g: &HarmonicVector, p: &SpherePoint) -> Result<Complex64> {
    let s = p.phi.sin();
    if s.abs() < 1e-12 {
        return domain("local bracket formula is singular at the poles");
    }
    let (_, ft, fp) = f.evaluate_with_derivatives(p);
    let (_, gt, gp) = g.evaluate_with_derivatives(p);
    Ok(Complex64::i() * (fp * gt - ft * gp) / s)
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(k: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; k];
    let mut w = vec![0.0; k];
    for i in 0..k {
        let mut z = (PI * (i as f64 + 0.75) / (k as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 1..=k {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p2) / j as f64;
            }
            dp = k as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// Gauss–Legendre in cos(phi) times a uniform theta grid.
#[derive(Clone, Debug)]
pub struct QuadratureGrid {
    pub degree: usize,
    pub nodes: Vec<SpherePoint>,
    pub weights: Vec<f64>,
}

/// Product grid exact for spherical polynomials of degree <= `degree`.
pub fn build_grid(degree: usize) -> QuadratureGrid {
    let k = (degree + 2) / 2;
    let nt = degree + 1;
    let (x, w) = gauss_legendre(k);
    let mut nodes = Vec::with_capacity(k * nt);
    let mut weights = Vec::with_capacity(k * nt);
    let dtheta = 2.0 * PI / nt as f64;
    for (xi, wi) in x.iter().zip(&w) {
        let phi = xi.clamp(-1.0, 1.0).acos();
        for t in 0..nt {
            nodes.push(SpherePoint { theta: t as f64 * dtheta, phi });
            weights.push(wi * dtheta);
        }
    }
    QuadratureGrid { degree, nodes, weights }
}

impl QuadratureGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn require(&self, need: usize) -> Result<()> {
        if self.degree < need {
            return Err(Error::GridTooCoarse { have: self.degree, need });
        }
        Ok(())
    }

    /// Integral over the sphere (total area 4pi).
    pub fn integrate(&self, f: impl Fn(&SpherePoint) -> Complex64) -> Complex64 {
        self.nodes.iter().zip(&self.weights).map(|(p, w)| f(p) * *w).sum()
    }

    /// Projects a function of degree <= deg onto Y_l^m, l <= lmax; needs grid degree >= deg + lmax.
    pub fn project(&self, lmax: usize, deg: usize, f: impl Fn(&SpherePoint) -> Complex64) -> Result<HarmonicVector> {
        self.require(deg + lmax)?;
        let mut out = HarmonicVector::zeros(lmax);
        for (p, w) in self.nodes.iter().zip(&self.weights) {
            let v = f(p) * (*w / (4.0 * PI));
            for (c, y) in out.coeffs.iter_mut().zip(ylm_all(lmax, p)) {
                *c += y.conj() * v;
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn legendre_values() {
        assert_eq!(legendre(0, 0.3).unwrap(), 1.0);
        assert!((legendre(2, 0.5).unwrap() + 0.125).abs() < 1e-15);
        for l in 0..20 {
            assert!((legendre(l, 1.0).unwrap() - 1.0).abs() < 1e-13);
        }
        assert!(legendre(2, 1.5).is_err());
        let (x, w) = gauss_legendre(12);
        for l in 0..=10 {
            for k in 0..=10 {
                let s: f64 = x.iter().zip(&w).map(|(z, wi)| wi * legendre(l, *z).unwrap() * legendre(k, *z).unwrap()).sum();
                let expect = if l == k { 2.0 / (2 * l + 1) as f64 } else { 0.0 };
                assert!((s - expect).abs() < 1e-13, "{l} {k}");
            }
        }
    }

    #[test]
    fn assoc_legendre_values() {
        assert!((assoc_legendre(1, 1, 0.0).unwrap() + 1.0).abs() < 1e-15);
        assert!((assoc_legendre(2, 0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((assoc_legendre(3, 2, 0.5).unwrap() - 5.625).abs() < 1e-13);
        // P_2^1 = -3z sqrt(1-z^2); P_2^{-1} = -(1/6) P_2^1
        let z: f64 = 0.3;
        let p21 = -3.0 * z * (1.0 - z * z).sqrt();
        assert!((assoc_legendre(2, 1, z).unwrap() - p21).abs() < 1e-14);
        assert!((assoc_legendre(2, -1, z).unwrap() + p21 / 6.0).abs() < 1e-14);
        assert!(assoc_legendre(2, 3, z).is_err());
        assert!(assoc_legendre(2, 1, -1.01).is_err());
    }

    #[test]
    fn ylm_values() {
        let n = SpherePoint::north();
        assert!((eval_ylm(1, 0, &n).unwrap() - c(3f64.sqrt())).norm() < 1e-15);
        for l in 0..8 {
            for m in -(l as i64)..=(l as i64) {
                let expect = if m == 0 { ((2 * l + 1) as f64).sqrt() } else { 0.0 };
                assert!((eval_ylm(l, m, &n).unwrap() - c(expect)).norm() < 1e-13);
            }
        }
        let eq = SpherePoint::new(0.0, PI / 2.0).unwrap();
        assert!((eval_ylm(1, 1, &eq).unwrap() - c(-(1.5f64).sqrt())).norm() < 1e-15);
        assert!(eval_ylm(1, 2, &eq).is_err());
    }

    #[test]
    fn ylm_matches_legendre_definition() {
        for p in sample_points(20, 3) {
            for l in 0..8usize {
                for m in -(l as i64)..=(l as i64) {
                    let ma = m.unsigned_abs() as usize;
                    let mut ratio = 1.0;
                    for k in (l - ma + 1)..=(l + ma) {
                        ratio /= k as f64;
                    }
                    let ratio = if m >= 0 { ratio } else { 1.0 / ratio };
                    let expect = Complex64::from_polar(((2 * l + 1) as f64 * ratio).sqrt() * assoc_legendre(l, m, p.phi.cos()).unwrap(), m as f64 * p.theta);
                    assert!((eval_ylm(l, m, &p).unwrap() - expect).norm() < 1e-12);
                    assert!((ylm_all(l, &p)[lm_index(l, m)] - expect).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn cartesian_forms() {
        for p in sample_points(30, 11) {
            let [x, y, z] = p.cartesian();
            assert!((x * x + y * y + z * z - 1.0).abs() < 1e-14);
            let xy = Complex64::new(x, y);
            let checks = [
                (2, 2, xy * xy * (15.0f64 / 8.0).sqrt()),
                (2, 1, -xy * z * 7.5f64.sqrt()),
                (3, 0, c(7f64.sqrt() / 2.0 * (5.0 * z * z * z - 3.0 * z))),
                (3, 2, xy * xy * z * 1.5 * (35.0f64 / 6.0).sqrt()),
            ];
            for (l, m, v) in checks {
                assert!((eval_ylm(l, m, &p).unwrap() - v).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn antipodal_parity() {
        for p in sample_points(100, 5) {
            let q = p.antipode();
            for l in 0..=4usize {
                for m in -(l as i64)..=(l as i64) {
                    let a = eval_ylm(l, m, &q).unwrap();
                    let b = eval_ylm(l, m, &p).unwrap() * if l % 2 == 0 { 1.0 } else { -1.0 };
                    assert!((a - b).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn addition_theorem() {
        let pts = sample_points(40, 9);
        for pair in pts.chunks(2) {
            let (a, b) = (&pair[0], &pair[1]);
            let ya = ylm_all(6, a);
            let yb = ylm_all(6, b);
            for l in 0..=6usize {
                let s: Complex64 = (-(l as i64)..=(l as i64)).map(|m| ya[lm_index(l, m)].conj() * yb[lm_index(l, m)]).sum();
                let expect = (2 * l + 1) as f64 * legendre(l, a.dot(b)).unwrap();
                assert!((s - c(expect)).norm() < 1e-11);
            }
        }
    }

    #[test]
    fn grid_integrals() {
        let g = build_grid(8);
        let total: f64 = g.weights.iter().sum();
        assert!((total - 4.0 * PI).abs() < 1e-12);
        let i21 = g.integrate(|p| eval_ylm(2, 1, p).unwrap());
        assert!(i21.norm() < 1e-13);
        let g6 = build_grid(6);
        let n32 = g6.integrate(|p| c(eval_ylm(3, 2, p).unwrap().norm_sqr())) / (4.0 * PI);
        assert!((n32 - c(1.0)).norm() < 1e-12);
        for deg in 0..=12usize {
            let g = build_grid(deg);
            for l in 0..=deg {
                for m in -(l as i64)..=(l as i64) {
                    let v = g.integrate(|p| eval_ylm(l, m, p).unwrap());
                    let expect = if l == 0 { 4.0 * PI } else { 0.0 };
                    assert!((v - c(expect)).norm() < 1e-12, "deg={deg} l={l} m={m}");
                }
            }
        }
        assert!(matches!(g6.require(7), Err(Error::GridTooCoarse { have: 6, need: 7 })));
    }

    #[test]
    fn product_examples() {
        let y10 = HarmonicVector::ylm(1, 0).unwrap();
        let sq = pointwise_product(&y10, &y10, None);
        let mut expect = HarmonicVector::zeros(2);
        expect.set(0, 0, c(1.0)).unwrap();
        expect.set(2, 0, c(2.0 / 5f64.sqrt())).unwrap();
        assert!(sq.max_abs_diff(&expect) < 1e-14);
        let grid = build_grid(4);
        for p in &grid.nodes {
            assert!((sq.evaluate(p) - eval_ylm(1, 0, p).unwrap().powi(2)).norm() < 1e-13);
        }
        let f = HarmonicVector::random(4, 1, false);
        let one = HarmonicVector::ylm(0, 0).unwrap();
        assert!(pointwise_product(&one, &f, None).max_abs_diff(&f) < 1e-14);
    }

    #[test]
    fn product_matches_sampling() {
        for seed in 0..4u64 {
            let f = HarmonicVector::random(5, seed, false);
            let g = HarmonicVector::random(5, seed + 100, false);
            let fg = pointwise_product(&f, &g, None);
            let mut worst = 0.0f64;
            for p in sample_points(60, seed) {
                worst = worst.max((fg.evaluate(&p) - f.evaluate(&p) * g.evaluate(&p)).norm());
            }
            assert!(worst < 1e-11, "{worst}");
        }
    }

    #[test]
    fn derivative_formulas_match_finite_differences() {
        let h = 1e-6;
        for p in sample_points(10, 21) {
            let (_, dt, dp) = ylm_all_with_derivatives(5, &p);
            let pt = SpherePoint { theta: p.theta + h, phi: p.phi };
            let mt = SpherePoint { theta: p.theta - h, phi: p.phi };
            let pp = SpherePoint { theta: p.theta, phi: p.phi + h };
            let mp = SpherePoint { theta: p.theta, phi: p.phi - h };
            let (yt1, yt0, yp1, yp0) = (ylm_all(5, &pt), ylm_all(5, &mt), ylm_all(5, &pp), ylm_all(5, &mp));
            for i in 0..36 {
                assert!(((yt1[i] - yt0[i]) / (2.0 * h) - dt[i]).norm() < 1e-7);
                assert!(((yp1[i] - yp0[i]) / (2.0 * h) - dp[i]).norm() < 1e-7);
            }
        }
    }

    #[test]
    fn bracket_examples() {
        let a = HarmonicVector::ylm(1, 1).unwrap();
        let b = HarmonicVector::ylm(1, -1).unwrap();
        let br = poisson_bracket(&a, &b, None);
        let expect = HarmonicVector::single(2, 1, 0, c(-3f64.sqrt())).unwrap();
        assert!(br.max_abs_diff(&expect) < 1e-14);
        for p in sample_points(20, 4) {
            assert!((poisson_bracket_at(&a, &b, &p).unwrap() - br.evaluate(&p)).norm() < 1e-12);
        }
        let f = HarmonicVector::random(4, 8, false);
        assert!(poisson_bracket(&f, &f, None).norm() < 1e-12);
    }

    #[test]
    fn bracket_matches_local_formula() {
        for seed in 0..3u64 {
            let f = HarmonicVector::random(4, seed, false);
            let g = HarmonicVector::random(3, seed + 50, false);
            let br = poisson_bracket(&f, &g, None);
            for p in sample_points(40, seed + 7) {
                let local = poisson_bracket_at(&f, &g, &p).unwrap();
                assert!((local - br.evaluate(&p)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn leibniz_and_jacobi() {
        let f = HarmonicVector::random(2, 1, false);
        let g = HarmonicVector::random(2, 2, false);
        let h = HarmonicVector::random(2, 3, false);
        // i{f, gh} = i{f,g} h + g i{f,h}
        let lhs = poisson_bracket(&f, &pointwise_product(&g, &h, None), Some(6));
        let rhs = pointwise_product(&poisson_bracket(&f, &g, None), &h, Some(6)).add(&pointwise_product(&g, &poisson_bracket(&f, &h, None), Some(6)));
        assert!(lhs.max_abs_diff(&rhs) < 1e-12);
        let cyc = |a: &HarmonicVector, b: &HarmonicVector, c: &HarmonicVector| poisson_bracket(a, &poisson_bracket(b, c, None), Some(6));
        let jac = cyc(&f, &g, &h).add(&cyc(&g, &h, &f)).add(&cyc(&h, &f, &g));
        assert!(jac.norm() < 1e-12);
    }

    #[test]
    fn reality_closure() {
        let f = HarmonicVector::random(3, 31, true);
        let g = HarmonicVector::random(3, 32, true);
        assert!(f.is_real_symbol(0.0));
        assert!(pointwise_product(&f, &g, None).is_real_symbol(1e-13));
        // poisson_bracket returns i{f,g}; {f,g} itself is real
        let br = poisson_bracket(&f, &g, None).scale(Complex64::new(0.0, -1.0));
        assert!(br.is_real_symbol(1e-13));
        assert!(br.norm() > 0.1);
        for p in sample_points(10, 1) {
            assert!(f.evaluate(&p).im.abs() < 1e-13);
        }
    }

    #[test]
    fn projection_roundtrip() {
        let f = HarmonicVector::random(4, 77, false);
        let grid = build_grid(8);
        let back = grid.project(4, 4, |p| f.evaluate(p)).unwrap();
        assert!(back.max_abs_diff(&f) < 1e-12);
        assert!(grid.project(5, 4, |p| f.evaluate(p)).is_err());
    }

    #[test]
    fn json_roundtrip() {
        let f = HarmonicVector::random(2, 3, true);
        let back = HarmonicVector::from_json(&f.to_json(), None).unwrap();
        assert!(back.max_abs_diff(&f) == 0.0);
        assert!(HarmonicVector::from_json(&json!({"a": 1}), None).is_err());
    }
}
