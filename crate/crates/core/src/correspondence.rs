//! Symbol correspondences between (n+1)x(n+1) operators and spherical
//! polynomials of degree <= n, parametrized by characteristic numbers.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::error::{domain, Error, Result};
use crate::exact::{rat, SqrtRational};
use crate::sphere::{build_grid, legendre, HarmonicVector, Rotation, SpherePoint};
use crate::su2_basis::{coupled_basis_dense, decompose, j3_matrix, jminus_matrix, jplus_matrix, reconstruct, CoupledCoefficients, OperatorMatrix};

/// c_0 = 1 and c_l != 0, l = 0..=n.
#[derive(Clone, Debug, PartialEq)]
pub struct CharacteristicNumbers {
    n: usize,
    c: Vec<f64>,
}

impl CharacteristicNumbers {
    pub fn new(n: usize, c: Vec<f64>) -> Result<Self> {
        if c.len() != n + 1 {
            return Err(Error::DimensionMismatch { expected: n + 1, got: c.len() });
        }
        if (c[0] - 1.0).abs() > 1e-12 {
            return domain(format!("c_0 must be 1, got {}", c[0]));
        }
        if let Some(l) = c.iter().position(|v| *v == 0.0 || !v.is_finite()) {
            return domain(format!("characteristic number c_{l} = {} must be finite and nonzero", c[l]));
        }
        Ok(Self { n, c })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, l: usize) -> f64 {
        self.c[l]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.c
    }

    pub fn to_json(&self) -> Value {
        json!({"n": self.n, "c": self.c})
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let n = v.get("n").and_then(Value::as_u64).ok_or_else(|| Error::Parse("missing integer field n".into()))? as usize;
        let c = v
            .get("c")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Parse("missing array field c".into()))?
            .iter()
            .map(|x| x.as_f64().ok_or_else(|| Error::Parse("c entries must be numbers".into())))
            .collect::<Result<Vec<_>>>()?;
        Self::new(n, c)
    }
}

/// Generator (n, l) -> c_l^n for a user-defined sequence of correspondences.
pub type Generator = Arc<dyn Fn(usize, usize) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Family {
    StratonovichStandard,
    StratonovichAlternate,
    BerezinStandard,
    BerezinAlternate,
    ToeplitzStandard,
    ToeplitzAlternate,
    Custom { name: String, generator: Generator },
}

impl fmt::Debug for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Family({})", self.name())
    }
}

impl PartialEq for Family {
    fn eq(&self, other: &Self) -> bool {
        self.name() == other.name()
    }
}

impl Family {
    pub const NAMED: [Family; 6] = [
        Family::StratonovichStandard,
        Family::StratonovichAlternate,
        Family::BerezinStandard,
        Family::BerezinAlternate,
        Family::ToeplitzStandard,
        Family::ToeplitzAlternate,
    ];

    pub fn custom(name: impl Into<String>, generator: impl Fn(usize, usize) -> f64 + Send + Sync + 'static) -> Self {
        Family::Custom { name: name.into(), generator: Arc::new(generator) }
    }

    /// c_l^n = n^{-l}.
    pub fn inverse_power() -> Self {
        Self::custom("inverse-power", |n, l| (n as f64).powi(-(l as i32)))
    }

    /// c_l^n = 1 - log(1 - (l-1)/n) for l >= 1.
    pub fn log_shift() -> Self {
        Self::custom("log-shift", |n, l| if l == 0 { 1.0 } else { 1.0 - (1.0 - (l as f64 - 1.0) / n as f64).ln() })
    }

    /// c_l^n = -1 for l = 1 mod 3, otherwise 1.
    pub fn mod3_sign() -> Self {
        Self::custom("mod3-sign", |_, l| if l % 3 == 1 { -1.0 } else { 1.0 })
    }

    pub fn name(&self) -> String {
        match self {
            Family::StratonovichStandard => "stratonovich".into(),
            Family::StratonovichAlternate => "stratonovich-alt".into(),
            Family::BerezinStandard => "berezin".into(),
            Family::BerezinAlternate => "berezin-alt".into(),
            Family::ToeplitzStandard => "toeplitz".into(),
            Family::ToeplitzAlternate => "toeplitz-alt".into(),
            Family::Custom { name, .. } => name.clone(),
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        Ok(match s {
            "stratonovich" => Family::StratonovichStandard,
            "stratonovich-alt" => Family::StratonovichAlternate,
            "berezin" => Family::BerezinStandard,
            "berezin-alt" => Family::BerezinAlternate,
            "toeplitz" => Family::ToeplitzStandard,
            "toeplitz-alt" => Family::ToeplitzAlternate,
            "inverse-power" => Family::inverse_power(),
            "log-shift" => Family::log_shift(),
            "mod3-sign" => Family::mod3_sign(),
            other => return domain(format!("unknown family {other}")),
        })
    }

    pub fn is_alternate(&self) -> bool {
        matches!(self, Family::StratonovichAlternate | Family::BerezinAlternate | Family::ToeplitzAlternate)
    }

    /// The family with every c_l multiplied by (-1)^l, when it is one of the named six.
    pub fn alternate(&self) -> Option<Self> {
        Some(match self {
            Family::StratonovichStandard => Family::StratonovichAlternate,
            Family::StratonovichAlternate => Family::StratonovichStandard,
            Family::BerezinStandard => Family::BerezinAlternate,
            Family::BerezinAlternate => Family::BerezinStandard,
            Family::ToeplitzStandard => Family::ToeplitzAlternate,
            Family::ToeplitzAlternate => Family::ToeplitzStandard,
            Family::Custom { .. } => return None,
        })
    }

    /// c_l^n for this family; custom generators are validated here.
    pub fn value(&self, n: usize, l: usize) -> f64 {
        let sign = if l.is_multiple_of(2) { 1.0 } else { -1.0 };
        match self {
            Family::StratonovichStandard => 1.0,
            Family::StratonovichAlternate => sign,
            Family::BerezinStandard => berezin_value(n, l),
            Family::BerezinAlternate => sign * berezin_value(n, l),
            Family::ToeplitzStandard => 1.0 / berezin_value(n, l),
            Family::ToeplitzAlternate => sign / berezin_value(n, l),
            Family::Custom { generator, .. } => {
                if l == 0 {
                    1.0
                } else {
                    generator(n, l)
                }
            }
        }
    }
}

/// b_l^n = sqrt(prod_{k=1}^l (n-k+1)/(n+k+1)) in floats.
pub(crate) fn berezin_value(n: usize, l: usize) -> f64 {
    let mut p = 1.0f64;
    for k in 1..=l {
        p *= (n + 1 - k) as f64 / (n + k + 1) as f64;
    }
    p.sqrt()
}

/// Berezin characteristic numbers b_l^n = n! sqrt(n+1) / sqrt((n+l+1)! (n-l)!).
pub fn berezin_chars(n: usize) -> Result<CharacteristicNumbers> {
    family_chars(&Family::BerezinStandard, n)
}

/// Exact b_l^n.
pub fn berezin_chars_exact(n: usize) -> Result<Vec<SqrtRational>> {
    if n < 1 {
        return domain("n must be at least 1");
    }
    let mut out = Vec::with_capacity(n + 1);
    let mut r = rat(1, 1);
    out.push(SqrtRational::one());
    for k in 1..=n {
        r *= rat((n + 1 - k) as i64, (n + k + 1) as i64);
        out.push(SqrtRational::sqrt(r.clone())?);
    }
    Ok(out)
}

/// Exact characteristic numbers for the six named families.
pub fn family_chars_exact(family: &Family, n: usize) -> Result<Vec<SqrtRational>> {
    if n < 1 {
        return domain("n must be at least 1");
    }
    let sign = |l: usize| if l.is_multiple_of(2) { 1 } else { -1 };
    let b = || berezin_chars_exact(n);
    Ok(match family {
        Family::StratonovichStandard => vec![SqrtRational::one(); n + 1],
        Family::StratonovichAlternate => (0..=n).map(|l| SqrtRational::from_int(sign(l))).collect(),
        Family::BerezinStandard => b()?,
        Family::BerezinAlternate => b()?.into_iter().enumerate().map(|(l, v)| v.mul_sign(sign(l) as i8)).collect(),
        Family::ToeplitzStandard => b()?.iter().map(|v| v.recip()).collect::<Result<_>>()?,
        Family::ToeplitzAlternate => b()?.iter().enumerate().map(|(l, v)| Ok(v.recip()?.mul_sign(sign(l) as i8))).collect::<Result<_>>()?,
        Family::Custom { name, .. } => return domain(format!("no exact characteristic numbers for {name}")),
    })
}

pub fn family_chars(family: &Family, n: usize) -> Result<CharacteristicNumbers> {
    if n < 1 {
        return domain("n must be at least 1");
    }
    CharacteristicNumbers::new(n, (0..=n).map(|l| family.value(n, l)).collect())
}

/// Elementwise reciprocal.
pub fn dual_chars(c: &CharacteristicNumbers) -> CharacteristicNumbers {
    CharacteristicNumbers { n: c.n, c: c.c.iter().map(|v| 1.0 / v).collect() }
}

/// K = I/(n+1) + sum_{l>=1} c_l sqrt((2l+1)/(n+1)) e(l,0).
pub fn operator_kernel(c: &CharacteristicNumbers) -> Result<OperatorMatrix> {
    let n = c.n;
    let mut out = OperatorMatrix::identity(n).scale(Complex64::new(1.0 / (n + 1) as f64, 0.0));
    for l in 1..=n {
        let w = c.c[l] * ((2 * l + 1) as f64 / (n + 1) as f64).sqrt();
        out = out.add(&coupled_basis_dense(n, l, 0)?.scale(Complex64::new(w, 0.0)))?;
    }
    Ok(out)
}

fn check_dim(p: &OperatorMatrix, c: &CharacteristicNumbers) -> Result<()> {
    if p.n() != c.n {
        return Err(Error::DimensionMismatch { expected: c.n + 1, got: p.dim() });
    }
    Ok(())
}

/// Coefficient-space symbol map: f_{lm} = a_{lm} c_l / sqrt(n+1).
pub fn symbol_of(p: &OperatorMatrix, c: &CharacteristicNumbers) -> Result<HarmonicVector> {
    check_dim(p, c)?;
    let a = decompose(p)?;
    let s = 1.0 / ((c.n + 1) as f64).sqrt();
    HarmonicVector::from_vec(c.n, a.iter().map(|(l, _, v)| v * (c.c[l] * s)).collect())
}

/// Inverse of [`symbol_of`].
pub fn operator_of(f: &HarmonicVector, c: &CharacteristicNumbers) -> Result<OperatorMatrix> {
    let deg = f.degree();
    if deg > c.n {
        return Err(Error::DegreeTooHigh { degree: deg, cap: c.n });
    }
    let f = f.with_cap(c.n);
    let s = ((c.n + 1) as f64).sqrt();
    let a = CoupledCoefficients::from_vec(c.n, f.iter().map(|(l, _, v)| v * (s / c.c[l])).collect())?;
    reconstruct(&a)
}

/// exp(-i alpha J3) exp(-i beta J2) exp(-i gamma J3).
pub fn rotation_operator(n: usize, r: &Rotation) -> Result<OperatorMatrix> {
    let jp = jplus_matrix(n)?;
    let jm = jminus_matrix(n)?;
    // -i beta J2 = -(beta/2)(J+ - J-), a real antisymmetric matrix
    let gen = DMatrix::from_fn(n + 1, n + 1, |i, k| -0.5 * r.beta * (jp.get(i, k).re - jm.get(i, k).re));
    let d = gen.exp();
    let j3 = j3_matrix(n)?;
    let phase = |a: f64, i: usize| Complex64::from_polar(1.0, -a * j3.get(i, i).re);
    let data = DMatrix::from_fn(n + 1, n + 1, |i, k| phase(r.alpha, i) * d[(i, k)] * phase(r.gamma, k));
    OperatorMatrix::from_dense(data)
}

/// U P U* for the rotation operator U.
pub fn rotate_operator(p: &OperatorMatrix, r: &Rotation) -> Result<OperatorMatrix> {
    let u = rotation_operator(p.n(), r)?;
    u.mul(p)?.mul(&u.adjoint())
}

/// Kernel-form symbol trace(P K^g) with g taking the north pole to `point`.
pub fn symbol_via_kernel(p: &OperatorMatrix, c: &CharacteristicNumbers, point: &SpherePoint) -> Result<Complex64> {
    check_dim(p, c)?;
    let k = operator_kernel(c)?;
    let kg = rotate_operator(&k, &Rotation::new(point.theta, point.phi, 0.0))?;
    Ok(p.mul(&kg)?.trace())
}

/// (1/4pi) sum_l (c'_l / c_l)(2l+1) P_l(t).
pub fn transition_kernel(c: &CharacteristicNumbers, c2: &CharacteristicNumbers, t: f64) -> Result<f64> {
    if c.n != c2.n {
        return Err(Error::DimensionMismatch { expected: c.n + 1, got: c2.n + 1 });
    }
    if !(t.abs() <= 1.0) {
        return domain(format!("transition kernel argument {t} outside [-1, 1]"));
    }
    let mut s = 0.0;
    for l in 0..=c.n {
        s += c2.c[l] / c.c[l] * (2 * l + 1) as f64 * legendre(l, t)?;
    }
    Ok(s / (4.0 * PI))
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct MetricCheck {
    pub quadrature: f64,
    pub blockwise: f64,
    pub residual: f64,
}

/// Compares <W_P, W_Q> by quadrature with sum_l c_l^2/(n+1) <P_l, Q_l>.
pub fn metric_identity_check(p: &OperatorMatrix, q: &OperatorMatrix, c: &CharacteristicNumbers) -> Result<MetricCheck> {
    check_dim(p, c)?;
    check_dim(q, c)?;
    let wp = symbol_of(p, c)?;
    let wq = symbol_of(q, c)?;
    let grid = build_grid(2 * c.n);
    let quad = grid.integrate(|x| wp.evaluate(x).conj() * wq.evaluate(x)) / (4.0 * PI);
    let a = decompose(p)?;
    let b = decompose(q)?;
    let block: Complex64 = a.iter().zip(b.iter()).map(|((l, _, x), (_, _, y))| x.conj() * y * (c.c[l] * c.c[l] / (c.n + 1) as f64)).sum();
    Ok(MetricCheck { quadrature: quad.re, blockwise: block.re, residual: (quad - block).norm() })
}
