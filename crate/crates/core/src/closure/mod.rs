//! Exact order-by-order consistency checks for truncated contact
//! potentials `H = Σ_{n=0}^{N} H⁽ⁿ⁾`, each `H⁽ⁿ⁾` homogeneous of degree `n`
//! in `φ`.
//!
//! The residual of order `p` is
//!
//! ```text
//! C_p = (p−1) ∂_t H⁽ᵖ⁾ + Σ_{n=0}^{p+1} (n−1) {H⁽ⁿ⁾, H⁽ᵖ⁺¹⁻ⁿ⁾},   H⁽ᵏ⁾ = 0 for k > N,
//! ```
//!
//! and the potential closes exactly when every `C_p` vanishes. The four
//! closure conditions are computed from their own formulas and reported
//! alongside the residuals.

mod cases;
mod poly;

use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub use cases::{harmonic, linear_const_k, CaseFile};
pub use poly::{parse_rational, poisson, rational, Exponents, Poly, TermJson, Var};

use crate::error::{Error, Result};

/// Rational points used to re-check zero claims by exact evaluation.
pub const SAMPLE_POINTS: usize = 50;
const SAMPLE_SEED: u64 = 0x5eed_c105;

/// Truncated potential `H⁽⁰⁾..H⁽ᴺ⁾` in `m` dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactPotentialData {
    dim: usize,
    order: usize,
    components: Vec<Poly>,
}

impl ContactPotentialData {
    /// `components[n]` must be homogeneous of φ-degree `n`; `N` is
    /// `components.len() − 1`.
    pub fn new(dim: usize, components: Vec<Poly>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::param("at least H⁽⁰⁾ is required"));
        }
        for (n, c) in components.iter().enumerate() {
            if c.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: c.dim() });
            }
            if !c.is_phi_homogeneous(n as u32) {
                return Err(Error::param(format!(
                    "component {n} is not homogeneous of φ-degree {n} (found degree {:?})",
                    c.phi_degree()
                )));
            }
        }
        Ok(ContactPotentialData { dim, order: components.len() - 1, components })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Truncation order `N`.
    pub fn order(&self) -> usize {
        self.order
    }

    /// `H⁽ⁿ⁾`, zero above the truncation order.
    pub fn component(&self, n: usize) -> Poly {
        self.components.get(n).cloned().unwrap_or_else(|| Poly::zero(self.dim))
    }

    pub fn components(&self) -> &[Poly] {
        &self.components
    }

    /// `Bⁱ = ∂H⁽¹⁾/∂φᵢ`, polynomials in `(t, y)`.
    pub fn drift(&self) -> Vec<Poly> {
        let h1 = self.component(1);
        (0..self.dim).map(|i| h1.diff(Var::Phi(i)).expect("index in range")).collect()
    }

    /// The full truncated potential.
    pub fn total(&self) -> Poly {
        self.components.iter().fold(Poly::zero(self.dim), |acc, c| acc + c)
    }
}

fn bracket(f: &Poly, g: &Poly) -> Poly {
    poisson(f, g).expect("components share a dimension")
}

/// `C_p` with the truncation convention `H⁽ᵏ⁾ = 0` for `k > N`.
pub fn order_residual(data: &ContactPotentialData, p: usize) -> Poly {
    let dt = data.component(p).diff(Var::T).expect("t exists");
    let mut out = dt.scale_int(p as i64 - 1);
    for n in 0..=p + 1 {
        let weight = n as i64 - 1;
        if weight == 0 || n > data.order || p + 1 - n > data.order {
            continue;
        }
        out = out + &bracket(&data.component(n), &data.component(p + 1 - n)).scale_int(weight);
    }
    out
}

/// Condition (i): `∂_t H⁽⁰⁾ + B·∇H⁽⁰⁾`.
pub fn zero_order_transport(data: &ContactPotentialData) -> Poly {
    let h0 = data.component(0);
    let drift = data.drift();
    (0..data.dim).fold(h0.diff(Var::T).expect("t exists"), |acc, i| {
        acc + &(&drift[i] * &h0.diff(Var::Y(i)).expect("index in range"))
    })
}

/// Condition (ii): the components `Σ_j H⁽²⁾ⁱʲ ∂_j H⁽⁰⁾`, with
/// `H⁽²⁾ⁱʲ = ∂²H⁽²⁾/∂φᵢ∂φⱼ`.
pub fn first_order_degeneracy(data: &ContactPotentialData) -> Vec<Poly> {
    let h0 = data.component(0);
    let h2 = data.component(2);
    let grad: Vec<Poly> = (0..data.dim).map(|j| h0.diff(Var::Y(j)).expect("index in range")).collect();
    (0..data.dim)
        .map(|i| {
            let row = h2.diff(Var::Phi(i)).expect("index in range");
            (0..data.dim).fold(Poly::zero(data.dim), |acc, j| {
                acc + &(&row.diff(Var::Phi(j)).expect("index in range") * &grad[j])
            })
        })
        .collect()
}

/// Condition (iii) at order `2 ≤ p ≤ N`:
/// `(p−1)(∂_t H⁽ᵖ⁾ + {H⁽ᵖ⁾, H⁽¹⁾}) + Σ_{n=2}^{p−1} (n−1){H⁽ⁿ⁾, H⁽ᵖ⁺¹⁻ⁿ⁾} − (p+1){H⁽⁰⁾, H⁽ᵖ⁺¹⁾}`.
pub fn recurrence(data: &ContactPotentialData, p: usize) -> Poly {
    let hp = data.component(p);
    let lead = hp.diff(Var::T).expect("t exists") + &bracket(&hp, &data.component(1));
    let mut out = lead.scale_int(p as i64 - 1);
    for n in 2..p {
        out = out + &bracket(&data.component(n), &data.component(p + 1 - n)).scale_int(n as i64 - 1);
    }
    out - &bracket(&data.component(0), &data.component(p + 1)).scale_int(p as i64 + 1)
}

/// Condition (iv) at order `p ≥ N+1`:
/// `Σ_{n=max(0, p+1−N)}^{N} (n−1){H⁽ⁿ⁾, H⁽ᵖ⁺¹⁻ⁿ⁾}`.
pub fn residual_brackets(data: &ContactPotentialData, p: usize) -> Poly {
    let big_n = data.order;
    let lo = (p + 1).saturating_sub(big_n);
    (lo..=big_n).fold(Poly::zero(data.dim), |acc, n| {
        acc + &bracket(&data.component(n), &data.component(p + 1 - n)).scale_int(n as i64 - 1)
    })
}

/// Serialized view of a polynomial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolySummary {
    pub is_zero: bool,
    pub term_count: usize,
    pub max_abs_coefficient: Option<String>,
    pub display: String,
    pub terms: Vec<TermJson>,
}

impl From<&Poly> for PolySummary {
    fn from(p: &Poly) -> Self {
        PolySummary {
            is_zero: p.is_zero(),
            term_count: p.term_count(),
            max_abs_coefficient: p.max_abs_coefficient().map(|c| c.to_string()),
            display: p.to_string(),
            terms: p.to_json_terms(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderResidual {
    pub p: usize,
    pub residual: PolySummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub holds: bool,
    /// Orders (or components, for condition (ii)) the polynomials belong to.
    pub labels: Vec<usize>,
    pub polynomials: Vec<PolySummary>,
}

impl ConditionReport {
    fn new(entries: Vec<(usize, Poly)>) -> Self {
        ConditionReport {
            holds: entries.iter().all(|(_, p)| p.is_zero()),
            labels: entries.iter().map(|(l, _)| *l).collect(),
            polynomials: entries.iter().map(|(_, p)| p.into()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Conditions {
    pub zero_order_transport: ConditionReport,
    pub first_order_degeneracy: ConditionReport,
    pub recurrence: ConditionReport,
    pub residual_brackets: ConditionReport,
}

impl Conditions {
    pub fn all_hold(&self) -> bool {
        self.zero_order_transport.holds
            && self.first_order_degeneracy.holds
            && self.recurrence.holds
            && self.residual_brackets.holds
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorstResidual {
    pub p: usize,
    pub term_count: usize,
    pub max_abs_coefficient: String,
}

/// Exact evaluation of the residuals at random rational points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleCheck {
    pub points: usize,
    /// Every residual reported as zero evaluates to exactly 0.
    pub zero_claims_confirmed: bool,
    /// `C₀ = −(i)`, `C₁ = −2 φ·(ii)` and `C_p = (iii)_p`, `C_p = (iv)_p` pointwise.
    pub routes_agree: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub dim: usize,
    pub order: usize,
    pub p_max: usize,
    pub residuals: Vec<OrderResidual>,
    pub conditions: Conditions,
    pub all_residuals_zero: bool,
    pub worst: Option<WorstResidual>,
    pub sample_check: SampleCheck,
}

pub fn default_p_max(order: usize) -> usize {
    order + 2
}

/// Computes `C_0..C_{p_max}` and the four closure conditions.
pub fn verify_closure(data: &ContactPotentialData, p_max: usize) -> Result<ResidualReport> {
    let big_n = data.order;
    if p_max < big_n + 1 {
        return Err(Error::Precondition(format!("p_max = {p_max} must be at least N + 1 = {}", big_n + 1)));
    }
    let residuals: Vec<Poly> = (0..=p_max).map(|p| order_residual(data, p)).collect();
    let cond_i = zero_order_transport(data);
    let cond_ii = first_order_degeneracy(data);
    let cond_iii: Vec<(usize, Poly)> = (2..=big_n).map(|p| (p, recurrence(data, p))).collect();
    let cond_iv: Vec<(usize, Poly)> = (big_n + 1..=p_max).map(|p| (p, residual_brackets(data, p))).collect();

    let sample_check = sample_check(data, &residuals, &cond_i, &cond_ii, &cond_iii, &cond_iv)?;

    let worst = residuals
        .iter()
        .enumerate()
        .filter(|(_, r)| !r.is_zero())
        .max_by(|(_, a), (_, b)| {
            a.max_abs_coefficient()
                .cmp(&b.max_abs_coefficient())
                .then(a.term_count().cmp(&b.term_count()))
        })
        .map(|(p, r)| WorstResidual {
            p,
            term_count: r.term_count(),
            max_abs_coefficient: r.max_abs_coefficient().expect("nonzero").to_string(),
        });

    let conditions = Conditions {
        zero_order_transport: ConditionReport::new(vec![(0, cond_i)]),
        first_order_degeneracy: ConditionReport::new(cond_ii.into_iter().enumerate().collect()),
        recurrence: ConditionReport::new(cond_iii),
        residual_brackets: ConditionReport::new(cond_iv),
    };
    Ok(ResidualReport {
        dim: data.dim,
        order: big_n,
        p_max,
        all_residuals_zero: residuals.iter().all(Poly::is_zero),
        residuals: residuals
            .iter()
            .enumerate()
            .map(|(p, r)| OrderResidual { p, residual: r.into() })
            .collect(),
        conditions,
        worst,
        sample_check,
    })
}

/// Random point `(t, y, φ)` with small numerators and denominators.
pub fn random_rational_point(rng: &mut impl Rng, dim: usize) -> Vec<BigRational> {
    (0..1 + 2 * dim)
        .map(|_| rational(rng.gen_range(-20..=20), rng.gen_range(1..=9)))
        .collect()
}

fn sample_check(
    data: &ContactPotentialData,
    residuals: &[Poly],
    cond_i: &Poly,
    cond_ii: &[Poly],
    cond_iii: &[(usize, Poly)],
    cond_iv: &[(usize, Poly)],
) -> Result<SampleCheck> {
    let m = data.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(SAMPLE_SEED);
    let mut zero_ok = true;
    let mut agree = true;
    for _ in 0..SAMPLE_POINTS {
        let x = random_rational_point(&mut rng, m);
        let vals = residuals.iter().map(|r| r.eval(&x)).collect::<Result<Vec<_>>>()?;
        for (r, v) in residuals.iter().zip(&vals) {
            if r.is_zero() && *v != rational(0, 1) {
                zero_ok = false;
            }
        }
        agree &= vals[0] == -cond_i.eval(&x)?;
        let mut phi_dot = rational(0, 1);
        for (i, c) in cond_ii.iter().enumerate() {
            phi_dot += &x[1 + m + i] * c.eval(&x)?;
        }
        agree &= vals[1] == phi_dot * rational(-2, 1);
        for (p, c) in cond_iii.iter().chain(cond_iv) {
            agree &= vals[*p] == c.eval(&x)?;
        }
    }
    Ok(SampleCheck { points: SAMPLE_POINTS, zero_claims_confirmed: zero_ok, routes_agree: agree })
}
