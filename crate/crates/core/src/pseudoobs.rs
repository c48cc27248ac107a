//! Pseudo-observations: per-column empirical CDF values `rank / (D + 1)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Raw trivariate sample: target `y` and sources `x1`, `x2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub y: Vec<f64>,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
}

impl Dataset {
    pub fn new(y: Vec<f64>, x1: Vec<f64>, x2: Vec<f64>) -> Result<Self> {
        if y.len() != x1.len() {
            return Err(Error::LengthMismatch(y.len(), x1.len()));
        }
        if y.len() != x2.len() {
            return Err(Error::LengthMismatch(y.len(), x2.len()));
        }
        if let Some(&bad) = y.iter().chain(&x1).chain(&x2).find(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "dataset entry",
                value: bad,
            });
        }
        Ok(Dataset { y, x1, x2 })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

/// Rank-transformed sample; every entry lies strictly inside (0, 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoDataset {
    pub uy: Vec<f64>,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
}

impl PseudoDataset {
    pub fn len(&self) -> usize {
        self.uy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.uy.is_empty()
    }

    /// Builds a pseudo-dataset from values already on the unit interval.
    pub fn from_unit(uy: Vec<f64>, u1: Vec<f64>, u2: Vec<f64>) -> Result<Self> {
        let d = Dataset::new(uy, u1, u2)?;
        if let Some(&bad) = d.y.iter().chain(&d.x1).chain(&d.x2).find(|v| !(**v > 0.0 && **v < 1.0)) {
            return Err(Error::Input(format!("pseudo-observation {bad} outside (0, 1)")));
        }
        Ok(PseudoDataset {
            uy: d.y,
            u1: d.x1,
            u2: d.x2,
        })
    }
}

/// Average ranks (1-based) divided by `n + 1`.
pub fn ranks(col: &[f64]) -> Result<Vec<f64>> {
    if let Some(&bad) = col.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: "rank input",
            value: bad,
        });
    }
    let denom = (col.len() + 1) as f64;
    Ok(crate::stats::average_ranks(col).into_iter().map(|r| r / denom).collect())
}

pub fn pseudo_observations(data: &Dataset) -> Result<PseudoDataset> {
    let d = Dataset::new(data.y.clone(), data.x1.clone(), data.x2.clone())?;
    Ok(PseudoDataset {
        uy: ranks(&d.y)?,
        u1: ranks(&d.x1)?,
        u2: ranks(&d.x2)?,
    })
}
