//! Exact scalars: big rationals, signed square roots of rationals and a shared
//! factorial table.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{OnceLock, RwLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

static FACTORIALS: OnceLock<RwLock<Vec<BigInt>>> = OnceLock::new();

fn factorial_table() -> &'static RwLock<Vec<BigInt>> {
    FACTORIALS.get_or_init(|| RwLock::new(vec![BigInt::one()]))
}

/// k! as a big integer. The table grows on demand and is shared between threads.
pub fn factorial(k: usize) -> BigInt {
    {
        let table = factorial_table().read().expect("factorial table poisoned");
        if k < table.len() {
            return table[k].clone();
        }
    }
    let mut table = factorial_table().write().expect("factorial table poisoned");
    while table.len() <= k {
        let next = table.last().unwrap() * BigInt::from(table.len());
        table.push(next);
    }
    table[k].clone()
}

/// Number of cached factorials.
pub fn factorial_cache_len() -> usize {
    factorial_table().read().map(|t| t.len()).unwrap_or(0)
}

pub fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    factorial(n) / (factorial(k) * factorial(n - k))
}

pub fn rat(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

pub fn rat_int(p: impl Into<BigInt>) -> Rational {
    Rational::from_integer(p.into())
}

/// (-1)^e as +1/-1.
pub fn parity_sign(e: i64) -> i8 {
    if e.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

/// sign * sqrt(radicand), radicand >= 0 and sign = 0 exactly when radicand = 0.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SqrtRational {
    sign: i8,
    radicand: Rational,
}

impl SqrtRational {
    pub fn new(sign: i8, radicand: Rational) -> Result<Self> {
        if radicand.is_negative() {
            return Err(Error::Domain(format!("negative radicand {radicand}")));
        }
        if radicand.is_zero() || sign == 0 {
            return Ok(Self::zero());
        }
        Ok(Self { sign: sign.signum(), radicand })
    }

    pub fn zero() -> Self {
        Self { sign: 0, radicand: Rational::zero() }
    }

    pub fn one() -> Self {
        Self { sign: 1, radicand: Rational::one() }
    }

    /// The exact value r, stored as sign(r) * sqrt(r^2).
    pub fn from_rational(r: Rational) -> Self {
        if r.is_zero() {
            return Self::zero();
        }
        let sign = if r.is_negative() { -1 } else { 1 };
        Self { sign, radicand: &r * &r }
    }

    pub fn from_int(k: i64) -> Self {
        Self::from_rational(rat_int(k))
    }

    /// +sqrt(r) for r >= 0.
    pub fn sqrt(r: Rational) -> Result<Self> {
        Self::new(1, r)
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    pub fn radicand(&self) -> &Rational {
        &self.radicand
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    /// sign * radicand, i.e. value * |value|.
    pub fn signed_square(&self) -> Rational {
        match self.sign {
            0 => Rational::zero(),
            1 => self.radicand.clone(),
            _ => -self.radicand.clone(),
        }
    }

    /// The value as a rational when the radicand is a perfect square.
    pub fn to_rational(&self) -> Option<Rational> {
        let (s, t) = rational_sqrt_exact(&self.radicand)?;
        let _ = s;
        Some(if self.sign < 0 { -t } else { t })
    }

    pub fn mul_sign(&self, s: i8) -> Self {
        if s == 0 {
            return Self::zero();
        }
        Self { sign: self.sign * s.signum(), radicand: self.radicand.clone() }
    }

    pub fn mul_rational(&self, r: &Rational) -> Self {
        self * &Self::from_rational(r.clone())
    }

    pub fn recip(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::Domain("reciprocal of zero".into()));
        }
        Ok(Self { sign: self.sign, radicand: self.radicand.recip() })
    }

    pub fn abs(&self) -> Self {
        Self { sign: self.sign.abs(), radicand: self.radicand.clone() }
    }

    /// Nearest double to the value; Overflow when the result is not finite.
    pub fn to_f64(&self) -> Result<f64> {
        if self.sign == 0 {
            return Ok(0.0);
        }
        let v = rational_sqrt_to_f64(&self.radicand) * self.sign as f64;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Overflow(self.to_string()))
        }
    }

    /// Float value; panics only on overflow, which cannot happen for the bounded
    /// symbol values produced in this crate.
    pub fn f64(&self) -> f64 {
        self.to_f64().expect("SqrtRational overflow")
    }

    /// Sum of two values when their radicands differ by a rational square factor.
    pub fn try_add(&self, other: &Self) -> Option<Self> {
        if self.is_zero() {
            return Some(other.clone());
        }
        if other.is_zero() {
            return Some(self.clone());
        }
        let ratio = &other.radicand / &self.radicand;
        let (_, q) = rational_sqrt_exact(&ratio)?;
        let s = rat_int(self.sign as i64) + q * rat_int(other.sign as i64);
        if s.is_zero() {
            return Some(Self::zero());
        }
        let sign = if s.is_negative() { -1 } else { 1 };
        Some(Self { sign, radicand: &self.radicand * &s * &s })
    }

    /// Decimal rendering with 17 significant digits.
    pub fn decimal_string(&self) -> String {
        match self.to_f64() {
            Ok(v) => format!("{:.16e}", v),
            Err(_) => "overflow".into(),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "sign": self.sign,
            "radicand": format!("{}/{}", self.radicand.numer(), self.radicand.denom()),
            "decimal": self.to_f64().unwrap_or(f64::NAN),
        })
    }
}

impl fmt::Display for SqrtRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*sqrt({}/{})", self.sign, self.radicand.numer(), self.radicand.denom())
    }
}

impl fmt::Debug for SqrtRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for SqrtRational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("expected s*sqrt(p/q), got {s:?}"));
        let (sign, rest) = s.trim().split_once("*sqrt(").ok_or_else(bad)?;
        let inner = rest.strip_suffix(')').ok_or_else(bad)?;
        let sign: i8 = sign.trim().parse().map_err(|_| bad())?;
        let (p, q) = match inner.split_once('/') {
            Some((p, q)) => (p, q),
            None => (inner, "1"),
        };
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() || !(-1..=1).contains(&sign) {
            return Err(bad());
        }
        Self::new(sign, Rational::new(p, q))
    }
}

impl serde::Serialize for SqrtRational {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(serializer)
    }
}

impl std::ops::Mul<&SqrtRational> for &SqrtRational {
    type Output = SqrtRational;

    fn mul(self, rhs: &SqrtRational) -> SqrtRational {
        if self.is_zero() || rhs.is_zero() {
            return SqrtRational::zero();
        }
        SqrtRational { sign: self.sign * rhs.sign, radicand: &self.radicand * &rhs.radicand }
    }
}

impl std::ops::Mul for SqrtRational {
    type Output = SqrtRational;

    fn mul(self, rhs: SqrtRational) -> SqrtRational {
        &self * &rhs
    }
}

impl std::ops::Neg for SqrtRational {
    type Output = SqrtRational;

    fn neg(self) -> SqrtRational {
        self.mul_sign(-1)
    }
}

impl std::ops::Neg for &SqrtRational {
    type Output = SqrtRational;

    fn neg(self) -> SqrtRational {
        self.mul_sign(-1)
    }
}

/// The product of two values (free-function form).
pub fn sqrt_rational_mul(a: &SqrtRational, b: &SqrtRational) -> SqrtRational {
    a * b
}

pub fn sqrt_rational_to_float(a: &SqrtRational) -> Result<f64> {
    a.to_f64()
}

/// Accurate conversion of a big rational to the nearest double.
pub fn rational_to_f64(r: &Rational) -> f64 {
    if let Some(v) = r.to_f64() {
        if v.is_finite() && (v != 0.0 || r.is_zero()) {
            return v;
        }
    }
    // Fall back to a scaled division for extreme magnitudes.
    let n = r.numer().abs();
    let d = r.denom().clone();
    let nb = n.bits() as i64;
    let db = d.bits() as i64;
    let shift = nb - db - 60;
    let (num, den) = if shift > 0 {
        (n.clone(), d << (shift as usize))
    } else {
        (n.clone() << ((-shift) as usize), d)
    };
    let q = (num / den).to_f64().unwrap_or(f64::INFINITY);
    let v = q * 2f64.powi(shift as i32);
    if r.is_negative() {
        -v
    } else {
        v
    }
}

/// sqrt of a nonnegative rational without intermediate overflow or underflow.
fn rational_sqrt_to_f64(r: &Rational) -> f64 {
    let direct = rational_to_f64(r);
    if direct.is_finite() && direct >= f64::MIN_POSITIVE {
        return direct.sqrt();
    }
    let n = r.numer().abs();
    let d = r.denom().clone();
    let mut shift = n.bits() as i64 - d.bits() as i64 - 60;
    if shift % 2 != 0 {
        shift -= 1;
    }
    let (num, den) = if shift > 0 {
        (n, d << (shift as usize))
    } else {
        (n << ((-shift) as usize), d)
    };
    let q = (num / den).to_f64().unwrap_or(f64::INFINITY);
    q.sqrt() * 2f64.powi((shift / 2) as i32)
}

/// Exact square root of a nonnegative integer when it is a perfect square.
pub fn int_sqrt_exact(n: &BigInt) -> Option<BigInt> {
    if n.is_negative() {
        return None;
    }
    let s = n.sqrt();
    if &(&s * &s) == n {
        Some(s)
    } else {
        None
    }
}

/// For r = t^2 with t rational and t >= 0, returns (r, t).
fn rational_sqrt_exact(r: &Rational) -> Option<(Rational, Rational)> {
    let p = int_sqrt_exact(r.numer())?;
    let q = int_sqrt_exact(r.denom())?;
    Some((r.clone(), Rational::new(p, q)))
}

fn small_primes() -> &'static [u64] {
    static PRIMES: OnceLock<Vec<u64>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        let limit = 1usize << 16;
        let mut sieve = vec![true; limit + 1];
        sieve[0] = false;
        sieve[1] = false;
        let mut i = 2;
        while i * i <= limit {
            if sieve[i] {
                let mut k = i * i;
                while k <= limit {
                    sieve[k] = false;
                    k += i;
                }
            }
            i += 1;
        }
        (0..=limit).filter(|&k| sieve[k]).map(|k| k as u64).collect()
    })
}

/// Writes a positive integer as s * t^2 with s squarefree.
pub fn square_decompose(n: &BigInt) -> Result<(BigInt, BigInt)> {
    if !n.is_positive() {
        return Err(Error::Domain(format!("square_decompose of nonpositive {n}")));
    }
    let mut rest = n.clone();
    let mut s = BigInt::one();
    let mut t = BigInt::one();
    for &p in small_primes() {
        let bp = BigInt::from(p);
        if &bp * &bp > rest {
            break;
        }
        let mut e = 0u32;
        loop {
            let (q, r) = rest.div_rem(&bp);
            if !r.is_zero() {
                break;
            }
            rest = q;
            e += 1;
        }
        if e > 0 {
            t *= bp.pow(e / 2);
            if e % 2 == 1 {
                s *= &bp;
            }
        }
    }
    if rest.is_one() {
        return Ok((s, t));
    }
    if let Some(r) = int_sqrt_exact(&rest) {
        t *= r;
        return Ok((s, t));
    }
    let bound = BigInt::from(*small_primes().last().unwrap());
    if rest <= &bound * &bound {
        s *= rest;
        return Ok((s, t));
    }
    Err(Error::Incommensurable(format!("cannot factor cofactor {rest}")))
}

/// A finite Q-linear combination of square roots of squarefree integers,
/// kept in canonical form so that equality is exact.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SqrtSum {
    terms: BTreeMap<BigInt, Rational>,
}

impl SqrtSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, v: &SqrtRational) -> Result<()> {
        if v.is_zero() {
            return Ok(());
        }
        // sqrt(p/q) = sqrt(p q) / q
        let p = v.radicand.numer();
        let q = v.radicand.denom();
        let (s, t) = square_decompose(&(p * q))?;
        let coeff = Rational::new(t * BigInt::from(v.sign as i64), q.clone());
        let entry = self.terms.entry(s.clone()).or_insert_with(Rational::zero);
        *entry += coeff;
        if entry.is_zero() {
            self.terms.remove(&s);
        }
        Ok(())
    }

    pub fn sub(&mut self, v: &SqrtRational) -> Result<()> {
        self.add(&v.mul_sign(-1))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Collapse to a single SqrtRational; fails if more than one radical survives.
    pub fn to_sqrt_rational(&self) -> Result<SqrtRational> {
        match self.terms.len() {
            0 => Ok(SqrtRational::zero()),
            1 => {
                let (s, c) = self.terms.iter().next().unwrap();
                let sign = if c.is_negative() { -1 } else { 1 };
                SqrtRational::new(sign, c * c * Rational::from_integer(s.clone()))
            }
            _ => Err(Error::Incommensurable(format!("{} distinct radicals", self.terms.len()))),
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.terms
            .iter()
            .map(|(s, c)| rational_to_f64(c) * rational_to_f64(&Rational::from_integer(s.clone())).sqrt())
            .sum()
    }
}

/// Sum a list of SqrtRational values exactly, requiring a single-radical result.
pub fn exact_sum<'a>(values: impl IntoIterator<Item = &'a SqrtRational>) -> Result<SqrtRational> {
    let mut acc = SqrtSum::new();
    for v in values {
        acc.add(v)?;
    }
    acc.to_sqrt_rational()
}

/// Triangle rule on doubled arguments: |a-b| <= c <= a+b and a+b+c even.
pub fn triangle_ok(a: i64, b: i64, c: i64) -> bool {
    a >= 0 && b >= 0 && c >= 0 && (a + b + c) % 2 == 0 && c <= a + b && c >= (a - b).abs()
}

/// Delta(j1,j2,j3) for doubled arguments.
pub fn delta_weight(a: i64, b: i64, c: i64) -> Result<SqrtRational> {
    Ok(SqrtRational::sqrt(delta_squared(a, b, c)?).expect("nonnegative"))
}

pub(crate) fn delta_squared(a: i64, b: i64, c: i64) -> Result<Rational> {
    if !triangle_ok(a, b, c) {
        return Err(Error::TriangleViolation(a, b, c));
    }
    let x = ((a + b - c) / 2) as usize;
    let y = ((c + a - b) / 2) as usize;
    let z = ((b + c - a) / 2) as usize;
    let s = ((a + b + c) / 2) as usize;
    Ok(Rational::new(factorial(x) * factorial(y) * factorial(z), factorial(s + 1)))
}

pub(crate) fn fact_rat(k: i64) -> Rational {
    Rational::from_integer(factorial(k as usize))
}
