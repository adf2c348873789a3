//! Sparse multivariate polynomials keyed by exponent tuples.
//!
//! Serialized as a map from comma-separated exponent tuples to coefficients,
//! e.g. `{ "2,0" = 0.5, "0,1" = -1.0 }` for `x₁²/2 − x₂`. The empty map is the
//! zero polynomial in any number of variables; the key `""` is a constant in
//! zero variables.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use serde::de::{self, Deserializer, MapAccess, Visitor};
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ScalarField;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Polynomial {
    terms: BTreeMap<Vec<u32>, f64>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Polynomial::default()
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Polynomial::zero().with_term(vec![0; dim], c)
    }

    /// The coordinate `z^index` in `dim` variables.
    pub fn variable(dim: usize, index: usize) -> Self {
        let mut e = vec![0; dim];
        e[index] = 1;
        Polynomial::zero().with_term(e, 1.0)
    }

    /// Adds `coeff · z^exponents`.
    pub fn with_term(mut self, exponents: Vec<u32>, coeff: f64) -> Self {
        if coeff != 0.0 {
            let slot = self.terms.entry(exponents).or_insert(0.0);
            *slot += coeff;
            if *slot == 0.0 {
                self.terms.retain(|_, c| *c != 0.0);
            }
        }
        self
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], f64)> {
        self.terms.iter().map(|(e, c)| (e.as_slice(), *c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    /// Number of variables implied by the terms, if any.
    pub fn arity(&self) -> Option<usize> {
        self.terms.keys().next().map(Vec::len)
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        match self.terms.keys().find(|e| e.len() != dim) {
            Some(e) => Err(Error::dim("polynomial exponent tuple", dim, e.len())),
            None => Ok(()),
        }
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c * e.iter().zip(z).map(|(&k, x)| x.powi(k as i32)).product::<f64>())
            .sum()
    }

    pub fn derivative(&self, var: usize) -> Polynomial {
        let mut out = Polynomial::zero();
        for (e, c) in &self.terms {
            if e[var] > 0 {
                let mut d = e.clone();
                d[var] -= 1;
                out = out.with_term(d, c * e[var] as f64);
            }
        }
        out
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        other
            .terms
            .iter()
            .fold(self.clone(), |acc, (e, c)| acc.with_term(e.clone(), *c))
    }

    pub fn scale(&self, k: f64) -> Polynomial {
        self.terms
            .iter()
            .fold(Polynomial::zero(), |acc, (e, c)| acc.with_term(e.clone(), k * c))
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out = out.with_term(e, ca * cb);
            }
        }
        out
    }

    /// Re-express in `dim` variables, placing the current variables at `offset`.
    pub fn embed(&self, dim: usize, offset: usize) -> Polynomial {
        let mut out = Polynomial::zero();
        for (e, c) in &self.terms {
            let mut full = vec![0; dim];
            full[offset..offset + e.len()].copy_from_slice(e);
            out = out.with_term(full, *c);
        }
        out
    }

    /// Field with exact gradient and Hessian. Affine polynomials are tagged
    /// as such so closed-form paths can recognise them.
    pub fn to_field(&self, dim: usize) -> Result<ScalarField> {
        self.check_dim(dim)?;
        let value = self.clone();
        let grads: Vec<Polynomial> = (0..dim).map(|i| self.derivative(i)).collect();
        if self.degree() <= 1 {
            let coeffs = grads.iter().map(|g| g.eval(&vec![0.0; dim])).collect();
            let offset = self.eval(&vec![0.0; dim]);
            return Ok(ScalarField::affine(coeffs, offset));
        }
        let hess: Vec<Vec<Polynomial>> = grads
            .iter()
            .map(|g| (0..dim).map(|j| g.derivative(j)).collect())
            .collect();
        Ok(ScalarField::new(dim, move |z| value.eval(z))
            .with_gradient(move |z| grads.iter().map(|g| g.eval(z)).collect())
            .with_hessian(move |z| DMatrix::from_fn(dim, dim, |i, j| hess[i][j].eval(z))))
    }
}

fn format_key(e: &[u32]) -> String {
    e.iter().map(u32::to_string).collect::<Vec<_>>().join(",")
}

fn parse_key(key: &str) -> std::result::Result<Vec<u32>, String> {
    if key.trim().is_empty() {
        return Ok(Vec::new());
    }
    key.split(',')
        .map(|s| {
            s.trim()
                .parse::<u32>()
                .map_err(|_| format!("bad exponent `{s}` in monomial key `{key}`"))
        })
        .collect()
}

impl Serialize for Polynomial {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.terms.len()))?;
        for (e, c) in &self.terms {
            map.serialize_entry(&format_key(e), c)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for Polynomial {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct PolyVisitor;

        impl<'de> Visitor<'de> for PolyVisitor {
            type Value = Polynomial;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a map from exponent tuples like \"1,0,2\" to coefficients")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> std::result::Result<Polynomial, A::Error> {
                let mut poly = Polynomial::zero();
                let mut arity = None;
                while let Some((key, coeff)) = access.next_entry::<String, f64>()? {
                    let e = parse_key(&key).map_err(de::Error::custom)?;
                    match arity {
                        None => arity = Some(e.len()),
                        Some(a) if a != e.len() => {
                            return Err(de::Error::custom(format!(
                                "monomial `{key}` has {} exponents, expected {a}",
                                e.len()
                            )))
                        }
                        _ => {}
                    }
                    if !coeff.is_finite() {
                        return Err(de::Error::custom(format!("coefficient of `{key}` is not finite")));
                    }
                    poly = poly.with_term(e, coeff);
                }
                Ok(poly)
            }
        }

        deserializer.deserialize_map(PolyVisitor)
    }
}
