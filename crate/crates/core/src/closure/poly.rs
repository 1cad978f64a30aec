//! Sparse polynomials in `(t, y¹..yᵐ, φ₁..φₘ)` with exact rational
//! coefficients.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A polynomial variable; indices are zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    T,
    Y(usize),
    Phi(usize),
}

/// Exponent vector in the fixed order `(t, y¹..yᵐ, φ₁..φₘ)`.
pub type Exponents = Vec<u32>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Poly {
    dim: usize,
    terms: BTreeMap<Exponents, BigRational>,
}

/// One monomial in the JSON term-list form `{"coef": "1/2", "exp": [..]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermJson {
    pub coef: String,
    pub exp: Exponents,
}

pub fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Parses `"3"`, `"-1/2"` and similar integer or fraction literals.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let parsed = match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| Error::Config(format!("bad numerator in {s:?}")))?;
            let d: BigInt = d.trim().parse().map_err(|_| Error::Config(format!("bad denominator in {s:?}")))?;
            if d.is_zero() {
                return Err(Error::Config(format!("zero denominator in {s:?}")));
            }
            BigRational::new(n, d)
        }
        None => BigRational::from_integer(s.parse().map_err(|_| Error::Config(format!("bad coefficient {s:?}")))?),
    };
    Ok(parsed)
}

impl Poly {
    pub fn zero(dim: usize) -> Self {
        Poly { dim, terms: BTreeMap::new() }
    }

    pub fn constant(dim: usize, c: BigRational) -> Self {
        let mut p = Poly::zero(dim);
        p.add_term(vec![0; 1 + 2 * dim], c);
        p
    }

    pub fn one(dim: usize) -> Self {
        Poly::constant(dim, rational(1, 1))
    }

    /// The single variable `v`.
    pub fn var(dim: usize, v: Var) -> Result<Self> {
        let mut exp = vec![0; 1 + 2 * dim];
        exp[var_index(dim, v)?] = 1;
        Ok(Poly::monomial(dim, rational(1, 1), exp).expect("exponent length is correct"))
    }

    pub fn y(dim: usize, i: usize) -> Self {
        Poly::var(dim, Var::Y(i)).expect("y index in range")
    }

    pub fn phi(dim: usize, i: usize) -> Self {
        Poly::var(dim, Var::Phi(i)).expect("phi index in range")
    }

    pub fn t(dim: usize) -> Self {
        Poly::var(dim, Var::T).expect("t always exists")
    }

    pub fn monomial(dim: usize, coef: BigRational, exp: Exponents) -> Result<Self> {
        if exp.len() != 1 + 2 * dim {
            return Err(Error::DimensionMismatch { expected: 1 + 2 * dim, got: exp.len() });
        }
        let mut p = Poly::zero(dim);
        p.add_term(exp, coef);
        Ok(p)
    }

    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = (Exponents, BigRational)>) -> Result<Self> {
        let mut p = Poly::zero(dim);
        for (exp, coef) in terms {
            if exp.len() != 1 + 2 * dim {
                return Err(Error::DimensionMismatch { expected: 1 + 2 * dim, got: exp.len() });
            }
            p.add_term(exp, coef);
        }
        Ok(p)
    }

    pub fn from_json_terms(dim: usize, terms: &[TermJson]) -> Result<Self> {
        let parsed = terms
            .iter()
            .map(|t| Ok((t.exp.clone(), parse_rational(&t.coef)?)))
            .collect::<Result<Vec<_>>>()?;
        Poly::from_terms(dim, parsed)
    }

    pub fn to_json_terms(&self) -> Vec<TermJson> {
        self.terms
            .iter()
            .map(|(exp, c)| TermJson { coef: c.to_string(), exp: exp.clone() })
            .collect()
    }

    fn add_term(&mut self, exp: Exponents, coef: BigRational) {
        if coef.is_zero() {
            return;
        }
        let entry = self.terms.entry(exp);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(coef);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += coef;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponents, &BigRational)> {
        self.terms.iter()
    }

    pub fn max_abs_coefficient(&self) -> Option<BigRational> {
        self.terms.values().map(|c| c.abs()).max()
    }

    pub fn scale(&self, c: &BigRational) -> Poly {
        let mut out = Poly::zero(self.dim);
        for (exp, coef) in &self.terms {
            out.add_term(exp.clone(), coef * c);
        }
        out
    }

    pub fn scale_int(&self, c: i64) -> Poly {
        self.scale(&rational(c, 1))
    }

    /// Formal partial derivative.
    pub fn diff(&self, v: Var) -> Result<Poly> {
        let k = var_index(self.dim, v)?;
        let mut out = Poly::zero(self.dim);
        for (exp, coef) in &self.terms {
            if exp[k] == 0 {
                continue;
            }
            let mut e = exp.clone();
            e[k] -= 1;
            out.add_term(e, coef * BigInt::from(exp[k]));
        }
        Ok(out)
    }

    fn d(&self, v: Var) -> Poly {
        self.diff(v).expect("variable index checked by caller")
    }

    fn phi_degree_of(&self, exp: &[u32]) -> u32 {
        exp[1 + self.dim..].iter().sum()
    }

    /// Terms grouped by total φ-degree; zero maps to an empty map.
    pub fn phi_parts(&self) -> BTreeMap<u32, Poly> {
        let mut parts: BTreeMap<u32, Poly> = BTreeMap::new();
        for (exp, coef) in &self.terms {
            parts
                .entry(self.phi_degree_of(exp))
                .or_insert_with(|| Poly::zero(self.dim))
                .add_term(exp.clone(), coef.clone());
        }
        parts
    }

    /// Highest φ-degree, `None` for the zero polynomial.
    pub fn phi_degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| self.phi_degree_of(e)).max()
    }

    /// True when every term has φ-degree `n` (the zero polynomial qualifies).
    pub fn is_phi_homogeneous(&self, n: u32) -> bool {
        self.terms.keys().all(|e| self.phi_degree_of(e) == n)
    }

    /// `φ_i ∂/∂φ_i`.
    pub fn euler(&self) -> Poly {
        (0..self.dim).fold(Poly::zero(self.dim), |acc, i| {
            acc + &(&Poly::phi(self.dim, i) * &self.d(Var::Phi(i)))
        })
    }

    /// `Σ_n (n − 1) H⁽ⁿ⁾` over the φ-homogeneous parts.
    pub fn discriminant(&self) -> Poly {
        self.phi_parts()
            .into_iter()
            .fold(Poly::zero(self.dim), |acc, (n, part)| acc + &part.scale_int(n as i64 - 1))
    }

    /// Exact evaluation at `(t, y, φ)` given in variable order.
    pub fn eval(&self, point: &[BigRational]) -> Result<BigRational> {
        if point.len() != 1 + 2 * self.dim {
            return Err(Error::DimensionMismatch { expected: 1 + 2 * self.dim, got: point.len() });
        }
        let mut total = BigRational::zero();
        for (exp, coef) in &self.terms {
            let mut term = coef.clone();
            for (x, &e) in point.iter().zip(exp) {
                if e > 0 {
                    term *= num_traits::pow(x.clone(), e as usize);
                }
            }
            total += term;
        }
        Ok(total)
    }

    fn check_dim(&self, other: &Poly) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Poly) -> Result<Poly> {
        self.check_dim(other)?;
        Ok(self.clone() + other)
    }

    pub fn checked_sub(&self, other: &Poly) -> Result<Poly> {
        self.check_dim(other)?;
        Ok(self - other)
    }

    pub fn checked_mul(&self, other: &Poly) -> Result<Poly> {
        self.check_dim(other)?;
        Ok(self * other)
    }
}

fn var_index(dim: usize, v: Var) -> Result<usize> {
    match v {
        Var::T => Ok(0),
        Var::Y(i) if i < dim => Ok(1 + i),
        Var::Phi(i) if i < dim => Ok(1 + dim + i),
        _ => Err(Error::DimensionMismatch { expected: dim, got: dim + 1 }),
    }
}

/// Canonical bracket `{F, G} = ∂F/∂yⁱ ∂G/∂φᵢ − ∂F/∂φᵢ ∂G/∂yⁱ`.
pub fn poisson(f: &Poly, g: &Poly) -> Result<Poly> {
    f.check_dim(g)?;
    let m = f.dim;
    let mut out = Poly::zero(m);
    for i in 0..m {
        out = out + &(&f.d(Var::Y(i)) * &g.d(Var::Phi(i)));
        out = out - &(&f.d(Var::Phi(i)) * &g.d(Var::Y(i)));
    }
    Ok(out)
}

// Operator impls panic on dimension mismatch; use the `checked_*` methods
// for untrusted inputs.

impl Add<&Poly> for Poly {
    type Output = Poly;
    fn add(mut self, rhs: &Poly) -> Poly {
        assert_eq!(self.dim, rhs.dim, "polynomial dimension mismatch");
        for (exp, coef) in &rhs.terms {
            self.add_term(exp.clone(), coef.clone());
        }
        self
    }
}

impl Add<&Poly> for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        self.clone() + rhs
    }
}

impl Sub<&Poly> for Poly {
    type Output = Poly;
    fn sub(mut self, rhs: &Poly) -> Poly {
        assert_eq!(self.dim, rhs.dim, "polynomial dimension mismatch");
        for (exp, coef) in &rhs.terms {
            self.add_term(exp.clone(), -coef.clone());
        }
        self
    }
}

impl Sub<&Poly> for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        self.clone() - rhs
    }
}

impl Mul<&Poly> for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        assert_eq!(self.dim, rhs.dim, "polynomial dimension mismatch");
        let mut out = Poly::zero(self.dim);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let exp = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(exp, ca * cb);
            }
        }
        out
    }
}

impl Neg for Poly {
    type Output = Poly;
    fn neg(mut self) -> Poly {
        for c in self.terms.values_mut() {
            *c = -c.clone();
        }
        self
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        -self.clone()
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let names: Vec<String> = std::iter::once("t".to_string())
            .chain((1..=self.dim).map(|i| format!("y{i}")))
            .chain((1..=self.dim).map(|i| format!("phi{i}")))
            .collect();
        for (k, (exp, coef)) in self.terms.iter().enumerate() {
            let neg = coef.is_negative();
            match (k, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let abs = coef.abs();
            let vars: Vec<String> = exp
                .iter()
                .zip(&names)
                .filter(|(e, _)| **e > 0)
                .map(|(e, n)| if *e == 1 { n.clone() } else { format!("{n}^{e}") })
                .collect();
            let one = abs == rational(1, 1);
            match (vars.is_empty(), one) {
                (true, _) => write!(f, "{abs}")?,
                (false, true) => write!(f, "{}", vars.join("*"))?,
                (false, false) => write!(f, "{abs}*{}", vars.join("*"))?,
            }
        }
        Ok(())
    }
}
