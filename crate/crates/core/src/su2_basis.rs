//! Angular-momentum matrices, the coupled standard basis e(l,m) of the
//! (n+1)x(n+1) matrix algebra, decomposition and the operator product rule.
//!
//! Rows and columns are indexed from 0, row 0 carrying the highest weight j = n/2.
//! A basis vector e(l,m) lives on the m-th subdiagonal, i.e. entries (r, r+m).

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::{domain, Error, Result};
use crate::exact::{binomial, fact_rat, parity_sign, rat, rat_int, Rational, SqrtRational, SqrtSum};
use crate::memo::Memo;
use crate::wigner::{product_coefficient, product_coefficient_f64};

static BASIS_MEMO: Memo<(usize, i64, i64), ShiftMatrix> = Memo::new();
static FLOAT_BASIS_MEMO: Memo<usize, Arc<FloatBasis>> = Memo::new();

/// Flat index of (l, m) in coefficient vectors: l^2 + l + m.
pub fn lm_index(l: usize, m: i64) -> usize {
    ((l * l + l) as i64 + m) as usize
}

/// Inverse of [`lm_index`].
pub fn index_lm(idx: usize) -> (usize, i64) {
    let l = (idx as f64).sqrt() as usize;
    let l = if (l + 1) * (l + 1) <= idx { l + 1 } else if l * l > idx { l - 1 } else { l };
    (l, idx as i64 - (l * l + l) as i64)
}

fn check_lm(n: usize, l: usize, m: i64) -> Result<()> {
    if l > n {
        return domain(format!("l = {l} exceeds n = {n}"));
    }
    if m.unsigned_abs() as usize > l {
        return domain(format!("|m| = {} exceeds l = {l}", m.abs()));
    }
    Ok(())
}

/// Dense complex (n+1)x(n+1) operator.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    n: usize,
    data: DMatrix<Complex64>,
}

impl OperatorMatrix {
    pub fn from_dense(data: DMatrix<Complex64>) -> Result<Self> {
        if data.nrows() != data.ncols() {
            return Err(Error::DimensionMismatch { expected: data.nrows(), got: data.ncols() });
        }
        if data.nrows() == 0 {
            return domain("empty operator");
        }
        Ok(Self { n: data.nrows() - 1, data })
    }

    pub fn from_real(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        Self { n, data: DMatrix::from_fn(n + 1, n + 1, |r, c| Complex64::new(f(r, c), 0.0)) }
    }

    pub fn zeros(n: usize) -> Self {
        Self { n, data: DMatrix::zeros(n + 1, n + 1) }
    }

    pub fn identity(n: usize) -> Self {
        Self { n, data: DMatrix::identity(n + 1, n + 1) }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.n + 1
    }

    pub fn data(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    pub fn into_data(self) -> DMatrix<Complex64> {
        self.data
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[(r, c)]
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: other.dim() });
        }
        Ok(())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self { n: self.n, data: &self.data * &other.data })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self { n: self.n, data: &self.data + &other.data })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self { n: self.n, data: &self.data - &other.data })
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self { n: self.n, data: &self.data * s }
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self { n: self.n, data: &self.data * &other.data - &other.data * &self.data })
    }

    pub fn anticommutator(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self { n: self.n, data: &self.data * &other.data + &other.data * &self.data })
    }

    pub fn adjoint(&self) -> Self {
        Self { n: self.n, data: self.data.adjoint() }
    }

    pub fn transpose(&self) -> Self {
        Self { n: self.n, data: self.data.transpose() }
    }

    pub fn trace(&self) -> Complex64 {
        self.data.trace()
    }

    /// Hilbert–Schmidt inner product trace(X* Y).
    pub fn hs_inner(&self, other: &Self) -> Result<Complex64> {
        self.check_same(other)?;
        Ok(self.data.iter().zip(other.data.iter()).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data.iter().zip(other.data.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_abs_diff(&self.adjoint()) <= tol
    }

    /// Row-major array of [re, im] pairs.
    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = (0..self.dim())
            .map(|r| Value::Array((0..self.dim()).map(|c| json!([self.data[(r, c)].re, self.data[(r, c)].im])).collect()))
            .collect();
        json!({"n": self.n, "entries": rows})
    }

    /// Accepts the layout of `to_json`; plain numbers are read as real entries.
    pub fn from_json(v: &Value) -> Result<Self> {
        let rows = v
            .get("entries")
            .unwrap_or(v)
            .as_array()
            .ok_or_else(|| Error::Parse("expected a list of matrix rows".into()))?;
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::Parse("empty matrix".into()));
        }
        let mut data = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
        for (r, row) in rows.iter().enumerate() {
            let row = row.as_array().ok_or_else(|| Error::Parse(format!("row {r} is not a list")))?;
            if row.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: row.len() });
            }
            for (c, x) in row.iter().enumerate() {
                data[(r, c)] = match x {
                    Value::Number(_) => Complex64::new(x.as_f64().unwrap_or(0.0), 0.0),
                    Value::Array(p) if p.len() == 2 && p.iter().all(Value::is_number) => {
                        Complex64::new(p[0].as_f64().unwrap_or(0.0), p[1].as_f64().unwrap_or(0.0))
                    }
                    _ => return Err(Error::Parse(format!("entry ({r}, {c}) is not a number or [re, im] pair"))),
                };
            }
        }
        let out = Self::from_dense(data)?;
        if let Some(n) = v.get("n").and_then(Value::as_u64) {
            if n as usize != out.n {
                return Err(Error::DimensionMismatch { expected: n as usize + 1, got: dim });
            }
        }
        Ok(out)
    }
}

/// Exact real matrix supported on a single subdiagonal: entries (r, r+m).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShiftMatrix {
    n: usize,
    m: i64,
    diag: Vec<SqrtRational>,
}

fn first_row(m: i64) -> usize {
    if m < 0 {
        (-m) as usize
    } else {
        0
    }
}

impl ShiftMatrix {
    pub fn new(n: usize, m: i64, diag: Vec<SqrtRational>) -> Result<Self> {
        if m.unsigned_abs() as usize > n {
            return domain(format!("offset {m} exceeds n = {n}"));
        }
        let len = n + 1 - m.unsigned_abs() as usize;
        if diag.len() != len {
            return Err(Error::DimensionMismatch { expected: len, got: diag.len() });
        }
        Ok(Self { n, m, diag })
    }

    pub fn zero(n: usize, m: i64) -> Self {
        let len = n + 1 - m.unsigned_abs() as usize;
        Self { n, m, diag: vec![SqrtRational::zero(); len] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> i64 {
        self.m
    }

    pub fn diag(&self) -> &[SqrtRational] {
        &self.diag
    }

    /// Entry at (r, r+m), if inside the matrix.
    pub fn at_row(&self, r: usize) -> Option<&SqrtRational> {
        let r0 = first_row(self.m);
        if r < r0 {
            return None;
        }
        self.diag.get(r - r0)
    }

    /// Full entry (r, c).
    pub fn entry(&self, r: usize, c: usize) -> SqrtRational {
        if c as i64 - r as i64 != self.m {
            return SqrtRational::zero();
        }
        self.at_row(r).cloned().unwrap_or_else(SqrtRational::zero)
    }

    pub fn transpose(&self) -> Self {
        Self { n: self.n, m: -self.m, diag: self.diag.clone() }
    }

    pub fn scale(&self, s: &SqrtRational) -> Self {
        Self { n: self.n, m: self.m, diag: self.diag.iter().map(|d| d * s).collect() }
    }

    pub fn mul_sign(&self, s: i8) -> Self {
        Self { n: self.n, m: self.m, diag: self.diag.iter().map(|d| d.mul_sign(s)).collect() }
    }

    /// Exact product; the result lives on subdiagonal m1 + m2.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n + 1, got: other.n + 1 });
        }
        let m = self.m + other.m;
        if m.unsigned_abs() as usize > self.n {
            return domain(format!("product offset {m} exceeds n = {}", self.n));
        }
        let r0 = first_row(m);
        let len = self.n + 1 - m.unsigned_abs() as usize;
        let diag = (0..len)
            .map(|i| {
                let r = r0 + i;
                let mid = r as i64 + self.m;
                match (self.at_row(r), usize::try_from(mid).ok().and_then(|c| other.at_row(c))) {
                    (Some(a), Some(b)) => a * b,
                    _ => SqrtRational::zero(),
                }
            })
            .collect();
        Ok(Self { n: self.n, m, diag })
    }

    /// Exact trace(X^T Y) with both matrices real.
    pub fn inner(&self, other: &Self) -> Result<SqrtSum> {
        let mut acc = SqrtSum::new();
        if self.n != other.n || self.m != other.m {
            return Ok(acc);
        }
        for (a, b) in self.diag.iter().zip(&other.diag) {
            acc.add(&(a * b))?;
        }
        Ok(acc)
    }

    pub fn to_f64(&self) -> Result<FloatShift> {
        Ok(FloatShift { m: self.m, diag: self.diag.iter().map(|d| d.to_f64()).collect::<Result<_>>()? })
    }

    pub fn to_operator(&self) -> Result<OperatorMatrix> {
        Ok(self.to_f64()?.to_operator(self.n))
    }

    pub fn to_json(&self) -> Value {
        json!({
            "n": self.n,
            "m": self.m,
            "diag": self.diag.iter().map(|d| d.to_string()).collect::<Vec<_>>(),
        })
    }
}

/// Float subdiagonal matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct FloatShift {
    pub m: i64,
    pub diag: Vec<f64>,
}

impl FloatShift {
    pub fn row0(&self) -> usize {
        first_row(self.m)
    }

    pub fn to_operator(&self, n: usize) -> OperatorMatrix {
        let mut out = OperatorMatrix::zeros(n);
        let r0 = self.row0();
        for (i, v) in self.diag.iter().enumerate() {
            let r = r0 + i;
            out.data[(r, (r as i64 + self.m) as usize)] = Complex64::new(*v, 0.0);
        }
        out
    }

    /// Product of two float subdiagonal matrices of size n+1.
    pub fn mul(&self, other: &Self, n: usize) -> Self {
        let m = self.m + other.m;
        if m.unsigned_abs() as usize > n {
            return Self { m, diag: Vec::new() };
        }
        let r0 = first_row(m);
        let len = n + 1 - m.unsigned_abs() as usize;
        let a0 = self.row0();
        let b0 = other.row0();
        let diag = (0..len)
            .map(|i| {
                let r = r0 + i;
                let mid = r as i64 + self.m;
                if r < a0 || mid < b0 as i64 {
                    return 0.0;
                }
                match (self.diag.get(r - a0), other.diag.get(mid as usize - b0)) {
                    (Some(a), Some(b)) => a * b,
                    _ => 0.0,
                }
            })
            .collect();
        Self { m, diag }
    }

    pub fn dot(&self, other: &Self) -> f64 {
        if self.m != other.m {
            return 0.0;
        }
        self.diag.iter().zip(&other.diag).map(|(a, b)| a * b).sum()
    }
}

/// Cached float coupled basis for a fixed n, indexed by [`lm_index`].
#[derive(Clone, Debug)]
pub struct FloatBasis {
    pub n: usize,
    pub mats: Vec<FloatShift>,
}

impl FloatBasis {
    pub fn get(&self, l: usize, m: i64) -> &FloatShift {
        &self.mats[lm_index(l, m)]
    }
}

/// Coefficients a_{lm} in P = sum a_{lm} e(l,m).
#[derive(Clone, Debug, PartialEq)]
pub struct CoupledCoefficients {
    n: usize,
    coeffs: Vec<Complex64>,
}

impl CoupledCoefficients {
    pub fn zeros(n: usize) -> Self {
        Self { n, coeffs: vec![Complex64::zero(); (n + 1) * (n + 1)] }
    }

    pub fn from_vec(n: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != (n + 1) * (n + 1) {
            return Err(Error::DimensionMismatch { expected: (n + 1) * (n + 1), got: coeffs.len() });
        }
        Ok(Self { n, coeffs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
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
        check_lm(self.n, l, m)?;
        self.coeffs[lm_index(l, m)] = v;
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, i64, Complex64)> + '_ {
        self.coeffs.iter().enumerate().map(|(i, v)| {
            let (l, m) = index_lm(i);
            (l, m, *v)
        })
    }

    pub fn to_json(&self) -> Value {
        let items: Vec<Value> = self
            .iter()
            .filter(|(_, _, v)| v.norm() > 0.0)
            .map(|(l, m, v)| json!({"l": l, "m": m, "re": v.re, "im": v.im}))
            .collect();
        json!({"n": self.n, "coefficients": items})
    }
}

fn jminus_values(n: usize) -> Vec<SqrtRational> {
    (1..=n).map(|k| SqrtRational::sqrt(rat_int((k * (n - k + 1)) as i64)).expect("positive")).collect()
}

fn check_n(n: usize) -> Result<()> {
    if n < 1 {
        return domain("n must be at least 1");
    }
    Ok(())
}

/// J3 = diag(j, j-1, ..., -j), exact.
pub fn j3_exact(n: usize) -> Result<ShiftMatrix> {
    check_n(n)?;
    let diag = (0..=n).map(|k| SqrtRational::from_rational(rat(n as i64 - 2 * k as i64, 2))).collect();
    ShiftMatrix::new(n, 0, diag)
}

/// J- with subdiagonal sqrt(k(n-k+1)), exact.
pub fn jminus_exact(n: usize) -> Result<ShiftMatrix> {
    check_n(n)?;
    ShiftMatrix::new(n, -1, jminus_values(n))
}

/// J+ = transpose of J-, exact.
pub fn jplus_exact(n: usize) -> Result<ShiftMatrix> {
    check_n(n)?;
    ShiftMatrix::new(n, 1, jminus_values(n))
}

pub fn j3_matrix(n: usize) -> Result<OperatorMatrix> {
    j3_exact(n)?.to_operator()
}

pub fn jminus_matrix(n: usize) -> Result<OperatorMatrix> {
    jminus_exact(n)?.to_operator()
}

pub fn jplus_matrix(n: usize) -> Result<OperatorMatrix> {
    jplus_exact(n)?.to_operator()
}

/// J1 = (J+ + J-)/2 and J2 = (J+ - J-)/2i.
pub fn j1_j2_matrices(n: usize) -> Result<(OperatorMatrix, OperatorMatrix)> {
    let p = jplus_matrix(n)?;
    let mm = jminus_matrix(n)?;
    let j1 = p.add(&mm)?.scale(Complex64::new(0.5, 0.0));
    let j2 = p.sub(&mm)?.scale(Complex64::new(0.0, -0.5));
    Ok((j1, j2))
}

/// Squared norm of E(l,m) for 0 <= m <= l.
fn mu_squared(n: usize, l: usize, m: usize) -> Rational {
    let (n, l, m) = (n as i64, l as i64, m as i64);
    let lf = fact_rat(l);
    &lf * &lf / rat_int(2 * l + 1) * fact_rat(n + l + 1) / fact_rat(n - l) * fact_rat(l - m) / fact_rat(l + m)
}

/// Hilbert–Schmidt norm of the unnormalized E(l,m), 0 <= m <= l <= n.
pub fn mu_norm(n: usize, l: usize, m: usize) -> Result<SqrtRational> {
    if m > l || l > n {
        return domain(format!("mu_norm needs 0 <= m <= l <= n, got m={m}, l={l}, n={n}"));
    }
    SqrtRational::sqrt(mu_squared(n, l, m))
}

fn primes_upto(limit: usize) -> Vec<usize> {
    let mut sieve = vec![true; limit + 1];
    let mut out = Vec::new();
    for p in 2..=limit {
        if sieve[p] {
            out.push(p);
            let mut q = p * p;
            while q <= limit {
                sieve[q] = false;
                q += p;
            }
        }
    }
    out
}

/// Prefix sums of prime exponents of g(t) = (t+1)(n-t), the squared J+ entries.
struct JFactorTable {
    primes: Vec<usize>,
    prefix: Vec<Vec<i64>>,
}

impl JFactorTable {
    fn new(n: usize) -> Self {
        let primes = primes_upto(n + 1);
        let mut prefix = vec![vec![0i64; primes.len()]];
        for t in 0..n {
            let mut row = prefix[t].clone();
            for mut x in [t + 1, n - t] {
                for (i, &p) in primes.iter().enumerate() {
                    while x % p == 0 {
                        row[i] += 1;
                        x /= p;
                    }
                }
            }
            prefix.push(row);
        }
        Self { primes, prefix }
    }

    fn add_range(&self, acc: &mut [i64], a: usize, b: usize) {
        for (i, e) in acc.iter_mut().enumerate() {
            *e += self.prefix[b][i] - self.prefix[a][i];
        }
    }

    /// Split prod p^e into (c, s) with the value sqrt(c^2 s), s squarefree.
    fn split(&self, exps: &[i64]) -> (BigInt, BigInt) {
        let mut c = BigInt::one();
        let mut s = BigInt::one();
        for (&p, &e) in self.primes.iter().zip(exps) {
            if e >= 2 {
                c *= BigInt::from(p).pow((e / 2) as u32);
            }
            if e % 2 == 1 {
                s *= p;
            }
        }
        (c, s)
    }
}

/// Entries of E(l,m) = sum_k (-1)^k C(l-m,k) J-^{l-m-k} J+^l J-^k as
/// (integer coefficient, squarefree radical) pairs, any -l <= m <= l.
fn unnormalized_entries(table: &JFactorTable, n: usize, l: usize, m: i64) -> Result<Vec<(BigInt, BigInt)>> {
    let r0 = first_row(m);
    let len = n + 1 - m.unsigned_abs() as usize;
    let span = (l as i64 - m) as usize;
    let mut out = Vec::with_capacity(len);
    let mut exps = vec![0i64; table.primes.len()];
    for i in 0..len {
        let r = r0 + i;
        let mut groups: BTreeMap<BigInt, BigInt> = BTreeMap::new();
        for k in 0..=span {
            let a = span - k;
            if r < a {
                continue;
            }
            let s = r - a;
            if s + l > n || s + l < k {
                continue;
            }
            exps.iter_mut().for_each(|e| *e = 0);
            table.add_range(&mut exps, s, r);
            table.add_range(&mut exps, s, s + l);
            table.add_range(&mut exps, s + l - k, s + l);
            let (c, sf) = table.split(&exps);
            let term = c * binomial(span, k);
            let slot = groups.entry(sf).or_insert_with(BigInt::zero);
            if k % 2 == 0 {
                *slot += term;
            } else {
                *slot -= term;
            }
        }
        groups.retain(|_, v| !v.is_zero());
        match groups.len() {
            0 => out.push((BigInt::zero(), BigInt::one())),
            1 => {
                let (s, c) = groups.into_iter().next().unwrap();
                out.push((c, s));
            }
            k => return Err(Error::Incommensurable(format!("{k} radicals in E({l},{m}) entry {i}"))),
        }
    }
    Ok(out)
}

fn entry_value(c: &BigInt, s: &BigInt, scale: &Rational, sign: i8) -> Result<SqrtRational> {
    if c.is_zero() {
        return Ok(SqrtRational::zero());
    }
    let sgn = if c.is_negative() { -sign } else { sign };
    SqrtRational::new(sgn, Rational::from_integer(c * c * s) * scale)
}

/// Unnormalized E(l,m) = (ad J-)^{l-m}(J+^l), exact, -l <= m <= l.
pub fn unnormalized_e(n: usize, l: usize, m: i64) -> Result<ShiftMatrix> {
    check_lm(n, l, m)?;
    let table = JFactorTable::new(n);
    let diag = unnormalized_entries(&table, n, l, m)?
        .iter()
        .map(|(c, s)| entry_value(c, s, &Rational::one(), 1))
        .collect::<Result<_>>()?;
    ShiftMatrix::new(n, m, diag)
}

fn build_basis(table: &JFactorTable, n: usize, l: usize, m: i64) -> Result<ShiftMatrix> {
    let mabs = m.unsigned_abs() as usize;
    let inv_mu2 = Rational::one() / mu_squared(n, l, mabs);
    let entries = unnormalized_entries(table, n, l, mabs as i64)?;
    let sign = parity_sign(l as i64);
    let diag = entries.iter().map(|(c, s)| entry_value(c, s, &inv_mu2, sign)).collect::<Result<_>>()?;
    let pos = ShiftMatrix::new(n, mabs as i64, diag)?;
    if m >= 0 {
        Ok(pos)
    } else {
        Ok(pos.transpose().mul_sign(parity_sign(m)))
    }
}

/// Coupled standard basis vector e(l,m), exact, unit Hilbert–Schmidt norm.
pub fn coupled_basis(n: usize, l: usize, m: i64) -> Result<ShiftMatrix> {
    check_lm(n, l, m)?;
    BASIS_MEMO.get_or_try((n, l as i64, m), || build_basis(&JFactorTable::new(n), n, l, m))
}

/// Dense float form of e(l,m).
pub fn coupled_basis_dense(n: usize, l: usize, m: i64) -> Result<OperatorMatrix> {
    coupled_basis(n, l, m)?.to_operator()
}

/// Whole float basis for n, computed once and shared.
pub fn basis_f64(n: usize) -> Result<Arc<FloatBasis>> {
    FLOAT_BASIS_MEMO.get_or_try(n, || {
        let table = JFactorTable::new(n);
        let mats = (0..(n + 1) * (n + 1))
            .into_par_iter()
            .map(|i| {
                let (l, m) = index_lm(i);
                build_basis(&table, n, l, m)?.to_f64()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Arc::new(FloatBasis { n, mats }))
    })
}

/// a_{lm} = trace(e(l,m)^T P).
pub fn decompose(p: &OperatorMatrix) -> Result<CoupledCoefficients> {
    let n = p.n();
    let basis = basis_f64(n)?;
    let coeffs = basis
        .mats
        .iter()
        .map(|e| {
            let r0 = e.row0();
            e.diag
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let r = r0 + i;
                    p.data[(r, (r as i64 + e.m) as usize)] * *v
                })
                .sum()
        })
        .collect();
    CoupledCoefficients::from_vec(n, coeffs)
}

/// P = sum a_{lm} e(l,m).
pub fn reconstruct(a: &CoupledCoefficients) -> Result<OperatorMatrix> {
    let n = a.n();
    let basis = basis_f64(n)?;
    let mut out = OperatorMatrix::zeros(n);
    for (e, c) in basis.mats.iter().zip(a.as_slice()) {
        if c.is_zero() {
            continue;
        }
        let r0 = e.row0();
        for (i, v) in e.diag.iter().enumerate() {
            let r = r0 + i;
            out.data[(r, (r as i64 + e.m) as usize)] += c * *v;
        }
    }
    Ok(out)
}

/// Exact decomposition of a subdiagonal matrix: (l, a_{l,m}) for |m| <= l <= n.
pub fn decompose_exact(p: &ShiftMatrix) -> Result<Vec<(usize, SqrtSum)>> {
    let n = p.n();
    let mabs = p.m().unsigned_abs() as usize;
    (mabs..=n).map(|l| Ok((l, coupled_basis(n, l, p.m())?.inner(p)?))).collect()
}

/// Coefficients of e(l1,m1) e(l2,m2) along e(l, m1+m2), float.
pub fn product_in_coupled_basis(n: usize, l1: usize, m1: i64, l2: usize, m2: i64) -> Result<CoupledCoefficients> {
    check_lm(n, l1, m1)?;
    check_lm(n, l2, m2)?;
    let mut out = CoupledCoefficients::zeros(n);
    let m = m1 + m2;
    let lo = l1.abs_diff(l2).max(m.unsigned_abs() as usize);
    for l in lo..=(l1 + l2).min(n) {
        let v = product_coefficient_f64(n as i64, l1 as i64, m1, l2 as i64, m2, l as i64)?;
        out.set(l, m, Complex64::new(v, 0.0))?;
    }
    Ok(out)
}

/// Exact nonzero coefficients (l, M) of e(l1,m1) e(l2,m2).
pub fn product_in_coupled_basis_exact(n: usize, l1: usize, m1: i64, l2: usize, m2: i64) -> Result<Vec<(usize, SqrtRational)>> {
    check_lm(n, l1, m1)?;
    check_lm(n, l2, m2)?;
    let m = m1 + m2;
    let lo = l1.abs_diff(l2).max(m.unsigned_abs() as usize);
    let mut out = Vec::new();
    for l in lo..=(l1 + l2).min(n) {
        let v = product_coefficient(n as i64, l1 as i64, m1, l2 as i64, m2, l as i64)?;
        if !v.is_zero() {
            out.push((l, v));
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ParityViolation {
    pub l1: usize,
    pub m1: i64,
    pub l2: usize,
    pub m2: i64,
    pub l: usize,
    pub kind: &'static str,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ParityReport {
    pub n: usize,
    pub pass: bool,
    pub pairs_checked: usize,
    pub max_forbidden: f64,
    pub counterexample: Option<ParityViolation>,
}

/// Checks that commutators only reach l = l1+l2+1 (mod 2) and anticommutators
/// only l = l1+l2 (mod 2), using dense products of the basis matrices.
pub fn verify_parity(n: usize) -> Result<ParityReport> {
    check_n(n)?;
    let basis = basis_f64(n)?;
    let dim = (n + 1) * (n + 1);
    let tol = 1e-12;
    let results: Vec<(f64, Option<ParityViolation>)> = (0..dim)
        .into_par_iter()
        .map(|i| {
            let (l1, m1) = index_lm(i);
            let e1 = &basis.mats[i];
            let mut worst = 0.0f64;
            let mut first = None;
            for j in 0..dim {
                let (l2, m2) = index_lm(j);
                let m = m1 + m2;
                if m.unsigned_abs() as usize > n {
                    continue;
                }
                let e2 = &basis.mats[j];
                let ab = e1.mul(e2, n);
                let ba = e2.mul(e1, n);
                for l in (m.unsigned_abs() as usize)..=n {
                    let e = basis.get(l, m);
                    let (x, y) = (e.dot(&ab), e.dot(&ba));
                    let (v, kind) = if (l + l1 + l2) % 2 == 0 { (x - y, "commutator") } else { (x + y, "anticommutator") };
                    worst = worst.max(v.abs());
                    if v.abs() > tol && first.is_none() {
                        first = Some(ParityViolation { l1, m1, l2, m2, l, kind, value: v });
                    }
                }
            }
            (worst, first)
        })
        .collect();
    let max_forbidden = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let counterexample = results.into_iter().find_map(|r| r.1);
    Ok(ParityReport { n, pass: counterexample.is_none(), pairs_checked: dim * dim, max_forbidden, counterexample })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wigner::clebsch_gordan;

    fn sr(s: i8, p: i64, q: i64) -> SqrtRational {
        SqrtRational::new(s, rat(p, q)).unwrap()
    }

    fn dense_close(a: &OperatorMatrix, b: &OperatorMatrix, tol: f64) -> bool {
        a.max_abs_diff(b) <= tol
    }

    #[test]
    fn index_roundtrip() {
        for i in 0..400 {
            let (l, m) = index_lm(i);
            assert_eq!(lm_index(l, m), i);
            assert!(m.unsigned_abs() as usize <= l);
        }
    }

    #[test]
    fn j_matrices() {
        let j3 = j3_exact(1).unwrap();
        assert_eq!(j3.diag(), &[SqrtRational::from_rational(rat(1, 2)), SqrtRational::from_rational(rat(-1, 2))]);
        let j3 = j3_exact(2).unwrap();
        assert_eq!(j3.diag(), &[SqrtRational::from_int(1), SqrtRational::zero(), SqrtRational::from_int(-1)]);
        assert_eq!(jminus_exact(1).unwrap().diag(), &[SqrtRational::one()]);
        assert_eq!(jminus_exact(2).unwrap().diag(), &[sr(1, 2, 1), sr(1, 2, 1)]);
        assert!(j3_exact(0).is_err());
        for n in 1..8 {
            assert!(j3_matrix(n).unwrap().trace().norm() < 1e-15);
            let p = jplus_exact(n).unwrap();
            let mm = jminus_exact(n).unwrap();
            assert_eq!(p.transpose(), mm);
            // [J+, J-] is diagonal; compare exactly against 2 J3
            let pm = p.mul(&mm).unwrap();
            let mp = mm.mul(&p).unwrap();
            let j3 = j3_exact(n).unwrap();
            for r in 0..=n {
                let lhs = pm.entry(r, r).to_rational().unwrap();
                let rhs = mp.entry(r, r).to_rational().unwrap();
                let expect = j3.entry(r, r).to_rational().unwrap() * rat(2, 1);
                assert_eq!(lhs - rhs, expect);
            }
        }
    }

    #[test]
    fn small_basis_examples() {
        let e = coupled_basis(1, 1, 0).unwrap();
        assert_eq!(e.diag(), &[sr(1, 1, 2), sr(-1, 1, 2)]);
        assert_eq!(coupled_basis(1, 1, 1).unwrap().diag(), &[SqrtRational::from_int(-1)]);
        assert_eq!(coupled_basis(1, 1, -1).unwrap().diag(), &[SqrtRational::one()]);
        let e = coupled_basis(2, 2, 0).unwrap();
        assert_eq!(e.diag(), &[sr(1, 1, 6), sr(-1, 4, 6), sr(1, 1, 6)]);
        let e = coupled_basis(2, 1, 1).unwrap();
        assert_eq!(e.m(), 1);
        assert_eq!(e.diag(), &[sr(-1, 1, 2), sr(-1, 1, 2)]);
        assert_eq!(coupled_basis(2, 2, 1).unwrap().diag(), &[sr(-1, 1, 2), sr(1, 1, 2)]);
        let e = coupled_basis(3, 3, 0).unwrap();
        assert_eq!(e.diag(), &[sr(1, 1, 20), sr(-1, 9, 20), sr(1, 9, 20), sr(-1, 1, 20)]);
        assert_eq!(coupled_basis(3, 3, 1).unwrap().diag(), &[sr(-1, 1, 5), sr(1, 3, 5), sr(-1, 1, 5)]);
        assert_eq!(coupled_basis(3, 1, 1).unwrap().diag(), &[sr(-1, 3, 10), sr(-1, 4, 10), sr(-1, 3, 10)]);
        assert_eq!(coupled_basis(3, 3, 3).unwrap().diag(), &[SqrtRational::from_int(-1)]);
        assert!(coupled_basis(2, 3, 0).is_err());
        assert!(coupled_basis(3, 1, 2).is_err());
    }

    #[test]
    fn mu_norm_values() {
        for n in 0..10 {
            assert_eq!(mu_norm(n, 0, 0).unwrap(), SqrtRational::sqrt(rat_int(n as i64 + 1)).unwrap());
            let nf = crate::exact::factorial(n);
            assert_eq!(mu_norm(n, n, n).unwrap(), SqrtRational::from_rational(Rational::from_integer(nf)));
        }
        assert!(mu_norm(3, 2, 3).is_err());
        // trace(J-^l J+^l) = mu_{l,l}^2
        for n in 1..=8 {
            let p = jplus_exact(n).unwrap();
            let mut pl = ShiftMatrix::new(n, 0, vec![SqrtRational::one(); n + 1]).unwrap();
            for l in 1..=n {
                pl = pl.mul(&p).unwrap();
                let norm2: Rational = pl.diag().iter().map(|d| d.signed_square()).sum();
                assert_eq!(norm2, mu_norm(n, l, l).unwrap().signed_square());
            }
        }
    }

    #[test]
    fn unnormalized_relations() {
        for n in 1..=6 {
            assert_eq!(unnormalized_e(n, 0, 0).unwrap().diag(), vec![SqrtRational::one(); n + 1].as_slice());
            let jp = jplus_exact(n).unwrap();
            let mut pl = ShiftMatrix::new(n, 0, vec![SqrtRational::one(); n + 1]).unwrap();
            for l in 1..=n {
                pl = pl.mul(&jp).unwrap();
                assert_eq!(unnormalized_e(n, l, l as i64).unwrap(), pl);
            }
            let jpd = jplus_matrix(n).unwrap();
            for l in 0..=n {
                for m in -(l as i64)..(l as i64) {
                    // [J+, E(l,m)] = alpha^2 E(l,m+1), alpha^2 = (l-m)(l+m+1)
                    let e = unnormalized_e(n, l, m).unwrap().to_operator().unwrap();
                    let up = unnormalized_e(n, l, m + 1).unwrap().to_operator().unwrap();
                    let alpha2 = ((l as i64 - m) * (l as i64 + m + 1)) as f64;
                    let lhs = jpd.commutator(&e).unwrap();
                    let rhs = up.scale(Complex64::new(alpha2, 0.0));
                    let scale = 1.0 + rhs.frobenius_norm();
                    assert!(dense_close(&lhs, &rhs, 1e-10 * scale), "n={n} l={l} m={m}");
                }
                for m in 0..=l {
                    // E(l,m) = (-1)^l mu e(l,m); E(l,-m) = (-1)^m p E(l,m)^T
                    let e = unnormalized_e(n, l, m as i64).unwrap();
                    let mu = mu_norm(n, l, m).unwrap();
                    let expect = coupled_basis(n, l, m as i64).unwrap().scale(&mu).mul_sign(parity_sign(l as i64));
                    assert_eq!(e, expect);
                    let p = fact_rat((l + m) as i64) / fact_rat((l - m) as i64);
                    let neg = unnormalized_e(n, l, -(m as i64)).unwrap();
                    let expect = e.transpose().scale(&SqrtRational::from_rational(p)).mul_sign(parity_sign(m as i64));
                    assert_eq!(neg, expect);
                }
            }
        }
    }

    #[test]
    fn orthonormal_exactly() {
        for n in 0..=6 {
            for l in 0..=n {
                for m in -(l as i64)..=(l as i64) {
                    let a = coupled_basis(n, l, m).unwrap();
                    for l2 in (m.unsigned_abs() as usize)..=n {
                        let b = coupled_basis(n, l2, m).unwrap();
                        let ip = a.inner(&b).unwrap().to_sqrt_rational().unwrap();
                        let expect = if l == l2 { SqrtRational::one() } else { SqrtRational::zero() };
                        assert_eq!(ip, expect, "n={n} ({l},{m}) ({l2},{m})");
                    }
                }
            }
        }
    }

    #[test]
    fn phase_convention() {
        for n in 1..=8 {
            for l in 0..=n {
                let e = coupled_basis(n, l, l as i64).unwrap();
                let v = e.entry(0, l).mul_sign(parity_sign(l as i64));
                assert_eq!(v.sign(), 1, "n={n} l={l}");
            }
        }
    }

    #[test]
    fn entries_are_clebsch_gordan() {
        for n in 1..=6i64 {
            for l in 0..=n {
                for m in -l..=l {
                    let e = coupled_basis(n as usize, l as usize, m).unwrap();
                    let len = n + 1 - m.abs();
                    for k in 1..=len {
                        let (m1, m2) = if m >= 0 { (n - 2 * (k - 1), 2 * m - n + 2 * (k - 1)) } else { (n + 2 * m - 2 * (k - 1), -n + 2 * (k - 1)) };
                        let sign = if m >= 0 { parity_sign(m + k - 1) } else { parity_sign(k - 1) };
                        let cg = clebsch_gordan(n, m1, n, m2, 2 * l, 2 * m).unwrap().mul_sign(sign);
                        assert_eq!(e.diag()[(k - 1) as usize], cg, "n={n} l={l} m={m} k={k}");
                    }
                }
            }
        }
    }

    #[test]
    fn eigen_relations() {
        for n in 1..=6 {
            let j3 = j3_matrix(n).unwrap();
            let (j1, j2) = j1_j2_matrices(n).unwrap();
            for l in 0..=n {
                for m in -(l as i64)..=(l as i64) {
                    let e = coupled_basis_dense(n, l, m).unwrap();
                    let c3 = j3.commutator(&e).unwrap();
                    assert!(dense_close(&c3, &e.scale(Complex64::new(m as f64, 0.0)), 1e-12));
                    let mut cas = OperatorMatrix::zeros(n);
                    for jk in [&j1, &j2, &j3] {
                        cas = cas.add(&jk.commutator(&jk.commutator(&e).unwrap()).unwrap()).unwrap();
                    }
                    let ll = (l * (l + 1)) as f64;
                    assert!(dense_close(&cas, &e.scale(Complex64::new(ll, 0.0)), 1e-11));
                }
            }
        }
    }

    #[test]
    fn recursive_lowering_oracle() {
        for n in 1..=7 {
            let jm = jminus_matrix(n).unwrap();
            for l in 0..=n {
                let mut cur = coupled_basis_dense(n, l, l as i64).unwrap();
                for m in (-(l as i64) + 1..=l as i64).rev() {
                    // e(l,m-1) = [J-, e(l,m)] / sqrt((l+m)(l-m+1))
                    let beta = (((l as i64 + m) * (l as i64 - m + 1)) as f64).sqrt();
                    cur = jm.commutator(&cur).unwrap().scale(Complex64::new(1.0 / beta, 0.0));
                    let direct = coupled_basis_dense(n, l, m - 1).unwrap();
                    assert!(dense_close(&cur, &direct, 1e-12), "n={n} l={l} m={}", m - 1);
                }
            }
        }
    }

    #[test]
    fn decompose_examples() {
        for n in 1..=6 {
            let a = decompose(&OperatorMatrix::identity(n)).unwrap();
            for (l, m, v) in a.iter() {
                let expect = if l == 0 { ((n + 1) as f64).sqrt() } else { 0.0 };
                assert!((v - Complex64::new(expect, 0.0)).norm() < 1e-13, "{l} {m}");
            }
        }
        let a = decompose(&coupled_basis_dense(2, 2, 1).unwrap()).unwrap();
        for (l, m, v) in a.iter() {
            let expect = if (l, m) == (2, 1) { 1.0 } else { 0.0 };
            assert!((v - Complex64::new(expect, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn hermitian_reality_and_reconstruction() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for n in 1..=8 {
            let raw = DMatrix::from_fn(n + 1, n + 1, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            let h = OperatorMatrix::from_dense(&raw + raw.adjoint()).unwrap();
            let a = decompose(&h).unwrap();
            for l in 0..=n {
                for m in 0..=(l as i64) {
                    let lhs = a.get(l, -m);
                    let rhs = a.get(l, m).conj() * parity_sign(m) as f64;
                    assert!((lhs - rhs).norm() < 1e-12);
                }
            }
            let back = reconstruct(&a).unwrap();
            assert!(back.sub(&h).unwrap().frobenius_norm() <= 1e-12 * h.frobenius_norm());
        }
    }

    #[test]
    fn product_matches_matrix_oracle_exactly() {
        for n in 1..=6usize {
            for i in 0..(n + 1) * (n + 1) {
                let (l1, m1) = index_lm(i);
                let a = coupled_basis(n, l1, m1).unwrap();
                for j in 0..(n + 1) * (n + 1) {
                    let (l2, m2) = index_lm(j);
                    if (m1 + m2).unsigned_abs() as usize > n {
                        continue;
                    }
                    let prod = a.mul(&coupled_basis(n, l2, m2).unwrap()).unwrap();
                    let brute = decompose_exact(&prod).unwrap();
                    let formula = product_in_coupled_basis_exact(n, l1, m1, l2, m2).unwrap();
                    for (l, coeff) in brute {
                        let got = coeff.to_sqrt_rational().unwrap();
                        let want = formula.iter().find(|(k, _)| *k == l).map(|(_, v)| v.clone()).unwrap_or_else(SqrtRational::zero);
                        assert_eq!(got, want, "n={n} ({l1},{m1})x({l2},{m2}) -> {l}");
                    }
                }
            }
        }
    }

    #[test]
    fn unnormalized_product_example() {
        for n in 5..=9usize {
            let nf = n as f64;
            let lhs = unnormalized_e(n, 3, 2).unwrap().mul(&unnormalized_e(n, 2, 1).unwrap()).unwrap().to_operator().unwrap();
            let k3 = 2.0 / 3.0 * nf * nf + 4.0 / 3.0 * nf - 22.0;
            let mut rhs = unnormalized_e(n, 3, 3).unwrap().to_operator().unwrap().scale(Complex64::new(k3, 0.0));
            rhs = rhs.add(&unnormalized_e(n, 4, 3).unwrap().to_operator().unwrap().scale(Complex64::new(1.5, 0.0))).unwrap();
            rhs = rhs.add(&unnormalized_e(n, 5, 3).unwrap().to_operator().unwrap().scale(Complex64::new(4.0 / 15.0, 0.0))).unwrap();
            assert!(lhs.max_abs_diff(&rhs) <= 1e-9 * lhs.frobenius_norm(), "n={n}");
        }
    }

    #[test]
    fn identity_factor() {
        for n in 1..=5usize {
            for l in 0..=n {
                for m in -(l as i64)..=(l as i64) {
                    let p = product_in_coupled_basis_exact(n, 0, 0, l, m).unwrap();
                    assert_eq!(p, vec![(l, SqrtRational::sqrt(rat(1, n as i64 + 1)).unwrap())]);
                }
            }
        }
    }

    #[test]
    fn parity_holds() {
        for n in [1, 2, 3, 5] {
            let r = verify_parity(n).unwrap();
            assert!(r.pass, "{r:?}");
            assert!(r.max_forbidden < 1e-12);
        }
        let e = coupled_basis_dense(3, 1, 0).unwrap();
        assert!(e.commutator(&e).unwrap().frobenius_norm() == 0.0);
    }

    #[test]
    fn json_forms() {
        let j = coupled_basis(2, 1, 1).unwrap().to_json();
        assert_eq!(j["n"], 2);
        assert_eq!(j["m"], 1);
        assert_eq!(j["diag"].as_array().unwrap().len(), 2);
        let d = OperatorMatrix::identity(1).to_json();
        assert_eq!(d["entries"][0][0][0], 1.0);
    }
}
