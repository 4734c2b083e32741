//! Threshold functions `φ(ε)` used by uniform regularity and the
//! ladder constructions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ThresholdError {
    #[error("threshold value {value} at eps = {eps} is not positive")]
    NonPositive { eps: String, value: String },
    #[error("threshold table does not cover eps = {0}")]
    Uncovered(String),
    #[error("threshold table is empty or unsorted")]
    BadTable,
}

/// A monotone threshold function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Threshold {
    /// `φ(ε) = c·ε`.
    Linear(Scalar),
    /// `φ(ε) = min(c, ε)`.
    ClippedConstant(Scalar),
    /// Step interpolation over `(ε_i, φ_i)` knots sorted by `ε`: the value of
    /// the greatest knot `ε_i <= ε`.
    Table(Vec<(Scalar, Scalar)>),
}

impl Threshold {
    /// `φ(ε) = ε / (2K)`, the threshold every b-metric with coefficient K admits.
    pub fn b_metric(k: &Scalar) -> Threshold {
        Threshold::Linear(&Scalar::one() / &(&Scalar::int(2) * k))
    }

    /// `φ(ε) = ε / 2`, under which uniform regularity reduces to the
    /// generalized triangle inequality.
    pub fn half() -> Threshold {
        Threshold::Linear(Scalar::ratio(1, 2))
    }

    pub fn table(mut knots: Vec<(Scalar, Scalar)>) -> Result<Threshold, ThresholdError> {
        if knots.is_empty() {
            return Err(ThresholdError::BadTable);
        }
        knots.sort_by(|a, b| a.0.exact_cmp(&b.0));
        Ok(Threshold::Table(knots))
    }

    pub fn eval(&self, eps: &Scalar) -> Result<Scalar, ThresholdError> {
        let v = match self {
            Threshold::Linear(c) => c * eps,
            Threshold::ClippedConstant(c) => c.min_of(eps),
            Threshold::Table(knots) => knots
                .iter()
                .take_while(|(e, _)| e.exact_cmp(eps).is_le())
                .last()
                .map(|(_, v)| v.clone())
                .ok_or_else(|| ThresholdError::Uncovered(eps.to_string()))?,
        };
        if v.is_zero() || v.is_negative() {
            return Err(ThresholdError::NonPositive { eps: eps.to_string(), value: v.to_string() });
        }
        Ok(v)
    }

    /// `ψ(ε) = min(φ(ε), ε/2)`.
    pub fn psi(&self, eps: &Scalar) -> Result<Scalar, ThresholdError> {
        let half = eps * &Scalar::ratio(1, 2);
        Ok(self.eval(eps)?.min_of(&half))
    }
}

/// A per-point threshold `φ(a, ε)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalThreshold {
    Uniform(Threshold),
    PerPoint(Vec<Threshold>),
}

impl LocalThreshold {
    pub fn at(&self, point: usize) -> &Threshold {
        match self {
            LocalThreshold::Uniform(t) => t,
            LocalThreshold::PerPoint(ts) => &ts[point],
        }
    }
}
