//! Basis expansions for the latent mean function.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A user-supplied basis function.
pub type BasisFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A deterministic feature map `x ↦ φ(x)` of fixed output dimension `q`.
///
/// The default is a polynomial basis: for scalar `x` of degree `d` it
/// produces `(1, x, x², ..., x^d)`; for `p`-dimensional input it produces
/// the intercept followed by per-coordinate monomials, `q = 1 + p·d`.
#[derive(Clone)]
pub enum Basis {
    Polynomial { input_dim: usize, degree: usize },
    Custom { input_dim: usize, funcs: Vec<BasisFn> },
}

impl Basis {
    pub fn polynomial(input_dim: usize, degree: usize) -> Basis {
        Basis::Polynomial { input_dim, degree }
    }

    pub fn custom(input_dim: usize, funcs: Vec<BasisFn>) -> Result<Basis> {
        if funcs.is_empty() {
            return Err(Error::InvalidArgument("custom basis needs at least one function".into()));
        }
        Ok(Basis::Custom { input_dim, funcs })
    }

    /// Expected predictor dimension `p`.
    pub fn input_dim(&self) -> usize {
        match self {
            Basis::Polynomial { input_dim, .. } | Basis::Custom { input_dim, .. } => *input_dim,
        }
    }

    /// Feature dimension `q`.
    pub fn output_dim(&self) -> usize {
        match self {
            Basis::Polynomial { input_dim, degree } => 1 + input_dim * degree,
            Basis::Custom { funcs, .. } => funcs.len(),
        }
    }

    /// Evaluates `φ(x)`.
    pub fn expand(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::InvalidArgument(format!(
                "basis expects dimension {}, got {}",
                self.input_dim(),
                x.len()
            )));
        }
        match self {
            Basis::Polynomial { degree, .. } => {
                let mut phi = Vec::with_capacity(self.output_dim());
                phi.push(1.0);
                for &xj in x {
                    let mut pow = 1.0;
                    for _ in 0..*degree {
                        pow *= xj;
                        phi.push(pow);
                    }
                }
                Ok(phi)
            }
            Basis::Custom { funcs, .. } => Ok(funcs.iter().map(|f| f(x)).collect()),
        }
    }
}

impl fmt::Debug for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Basis::Polynomial { input_dim, degree } => f
                .debug_struct("Polynomial")
                .field("input_dim", input_dim)
                .field("degree", degree)
                .finish(),
            Basis::Custom { input_dim, funcs } => f
                .debug_struct("Custom")
                .field("input_dim", input_dim)
                .field("q", &funcs.len())
                .finish(),
        }
    }
}

impl PartialEq for Basis {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (
                Basis::Polynomial { input_dim: p1, degree: d1 },
                Basis::Polynomial { input_dim: p2, degree: d2 },
            ) => p1 == p2 && d1 == d2,
            _ => false,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct BasisJson {
    kind: String,
    degree: usize,
    input_dim: usize,
}

impl Serialize for Basis {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Basis::Polynomial { input_dim, degree } => BasisJson {
                kind: "polynomial".into(),
                degree: *degree,
                input_dim: *input_dim,
            }
            .serialize(s),
            Basis::Custom { .. } => Err(serde::ser::Error::custom(
                "custom basis functions cannot be serialized",
            )),
        }
    }
}

impl<'de> Deserialize<'de> for Basis {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Basis, D::Error> {
        let raw = BasisJson::deserialize(d)?;
        if raw.kind != "polynomial" {
            return Err(serde::de::Error::custom(format!("unknown basis kind '{}'", raw.kind)));
        }
        Ok(Basis::Polynomial { input_dim: raw.input_dim, degree: raw.degree })
    }
}
