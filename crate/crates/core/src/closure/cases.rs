//! Built-in potentials and the JSON case-file format.

use std::path::Path;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::poly::{rational, Poly, TermJson};
use super::ContactPotentialData;
use crate::error::{Error, Result};

/// Rotation field `B = (y², −y¹)` with `H⁽⁰⁾ = ½|y|²`, `H⁽¹⁾ = B·φ` and
/// `H⁽²⁾ = ½(v·φ)²` for `v = (−y², y¹)`.
pub fn harmonic() -> ContactPotentialData {
    let m = 2;
    let (y1, y2) = (Poly::y(m, 0), Poly::y(m, 1));
    let (p1, p2) = (Poly::phi(m, 0), Poly::phi(m, 1));
    let half = rational(1, 2);
    let h0 = (&y1 * &y1 + &(&y2 * &y2)).scale(&half);
    let h1 = &(&y2 * &p1) - &(&y1 * &p2);
    let v_phi = &(&y1 * &p2) - &(&y2 * &p1);
    let h2 = (&v_phi * &v_phi).scale(&half);
    ContactPotentialData::new(m, vec![h0, h1, h2]).expect("harmonic components are homogeneous")
}

/// `m = 1`, `H⁽⁰⁾ = 0`, `H⁽¹⁾ = −yφ`, `H⁽²⁾ = ½kφ²` with constant `k`.
pub fn linear_const_k(k: BigRational) -> ContactPotentialData {
    let m = 1;
    let (y, phi) = (Poly::y(m, 0), Poly::phi(m, 0));
    let h1 = -(&y * &phi);
    let h2 = (&phi * &phi).scale(&(k * rational(1, 2)));
    ContactPotentialData::new(m, vec![Poly::zero(m), h1, h2]).expect("components are homogeneous")
}

/// `{"vars": m, "N": n, "components": [[{"coef": "1/2", "exp": [..]}, ..], ..]}`
/// with exponents ordered `(t, y¹..yᵐ, φ₁..φₘ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseFile {
    pub vars: usize,
    #[serde(rename = "N")]
    pub order: usize,
    pub components: Vec<Vec<TermJson>>,
}

impl CaseFile {
    pub fn from_data(data: &ContactPotentialData) -> Self {
        CaseFile {
            vars: data.dim(),
            order: data.order(),
            components: data.components().iter().map(Poly::to_json_terms).collect(),
        }
    }

    pub fn into_data(self) -> Result<ContactPotentialData> {
        if self.vars == 0 {
            return Err(Error::Config("vars must be at least 1".into()));
        }
        if self.components.len() != self.order + 1 {
            return Err(Error::Config(format!(
                "N = {} needs {} components, found {}",
                self.order,
                self.order + 1,
                self.components.len()
            )));
        }
        let comps = self
            .components
            .iter()
            .map(|terms| Poly::from_json_terms(self.vars, terms))
            .collect::<Result<Vec<_>>>()?;
        ContactPotentialData::new(self.vars, comps).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<ContactPotentialData> {
        let text = std::fs::read_to_string(path)?;
        let file: CaseFile = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        file.into_data()
    }
}
