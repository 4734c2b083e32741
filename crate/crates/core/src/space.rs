//! Labeled finite point sets and validated distance matrices.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::scalar::{Exponent, Mode, Scalar, DEFAULT_TOL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coords: Option<Vec<Vec<f64>>>,
}

impl PointSet {
    pub fn new(labels: Vec<String>) -> Result<Self, SpaceError> {
        if labels.is_empty() {
            return Err(SpaceError::Empty);
        }
        let mut seen = HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(SpaceError::DuplicateLabel(l.clone()));
            }
        }
        Ok(PointSet { labels, coords: None })
    }

    pub fn with_coords(mut self, coords: Vec<Vec<f64>>) -> Result<Self, SpaceError> {
        if coords.len() != self.labels.len() {
            return Err(SpaceError::Shape(format!("{} coordinate rows for {} points", coords.len(), self.labels.len())));
        }
        self.coords = Some(coords);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn coords(&self) -> Option<&[Vec<f64>]> {
        self.coords.as_deref()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

/// The axiom system a space is claimed to satisfy.
#[derive(Debug, Clone, PartialEq)]
pub enum ClaimedClass {
    RawDistance,
    Metric,
    BMetric(Scalar),
    TwoGeneralized,
    NuGeneralized(u32),
    FDistance,
    CfMetric,
}

impl fmt::Display for ClaimedClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClaimedClass::RawDistance => write!(f, "raw-distance"),
            ClaimedClass::Metric => write!(f, "metric"),
            ClaimedClass::BMetric(k) => write!(f, "b-metric({k})"),
            ClaimedClass::TwoGeneralized => write!(f, "two-generalized"),
            ClaimedClass::NuGeneralized(nu) => write!(f, "nu-generalized({nu})"),
            ClaimedClass::FDistance => write!(f, "F-distance"),
            ClaimedClass::CfMetric => write!(f, "CF-metric"),
        }
    }
}

impl FromStr for ClaimedClass {
    type Err = SpaceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SpaceError::ClaimedClass(s.to_string());
        let arg = |prefix: &str| s.strip_prefix(prefix).and_then(|r| r.strip_prefix('(')).and_then(|r| r.strip_suffix(')'));
        Ok(match s {
            "raw-distance" => ClaimedClass::RawDistance,
            "metric" => ClaimedClass::Metric,
            "two-generalized" => ClaimedClass::TwoGeneralized,
            "F-distance" => ClaimedClass::FDistance,
            "CF-metric" => ClaimedClass::CfMetric,
            _ => {
                if let Some(k) = arg("b-metric") {
                    ClaimedClass::BMetric(k.parse().map_err(|_| bad())?)
                } else if let Some(nu) = arg("nu-generalized") {
                    ClaimedClass::NuGeneralized(nu.parse().map_err(|_| bad())?)
                } else {
                    return Err(bad());
                }
            }
        })
    }
}

impl Serialize for ClaimedClass {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ClaimedClass {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellProblem {
    Asymmetric,
    Negative,
    NonzeroDiagonal,
    ZeroOffDiagonal,
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellViolation {
    pub row: usize,
    pub col: usize,
    pub problem: CellProblem,
}

impl fmt::Display for CellViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} at ({}, {})", self.problem, self.row, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpaceError {
    #[error("point set is empty")]
    Empty,
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid matrix: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", "))]
    Invalid(Vec<CellViolation>),
    #[error("unknown claimed class `{0}`")]
    ClaimedClass(String),
    #[error("exponent {0} outside (0, 1]")]
    ExponentRange(String),
    #[error("parse error: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceOptions {
    pub allow_degenerate: bool,
    pub tol: f64,
}

impl Default for SpaceOptions {
    fn default() -> Self {
        SpaceOptions { allow_degenerate: false, tol: DEFAULT_TOL }
    }
}

/// A labeled finite set with a symmetric, zero-diagonal distance matrix.
///
/// All entries share one arithmetic mode. Off-diagonal zeros are rejected
/// unless the space was built with `allow_degenerate`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceSpace {
    points: PointSet,
    entries: Vec<Scalar>,
    claimed_class: ClaimedClass,
    options: SpaceOptions,
}

/// Builds a validated space with default options.
pub fn make_space(labels: Vec<String>, grid: Vec<Vec<Scalar>>, claimed_class: ClaimedClass) -> Result<DistanceSpace, SpaceError> {
    DistanceSpace::new(PointSet::new(labels)?, grid, claimed_class, SpaceOptions::default())
}

impl DistanceSpace {
    pub fn new(
        points: PointSet,
        grid: Vec<Vec<Scalar>>,
        claimed_class: ClaimedClass,
        options: SpaceOptions,
    ) -> Result<Self, SpaceError> {
        let n = points.len();
        if grid.len() != n || grid.iter().any(|row| row.len() != n) {
            return Err(SpaceError::Shape(format!(
                "expected a {n}x{n} grid, got {} rows with lengths {:?}",
                grid.len(),
                grid.iter().map(Vec::len).collect::<Vec<_>>()
            )));
        }
        let float = grid.iter().flatten().any(|s| !s.is_exact());
        let entries: Vec<Scalar> = grid.into_iter().flatten().map(|s| if float { s.to_float() } else { s }).collect();
        let space = DistanceSpace { points, entries, claimed_class, options };
        let violations = space.violations();
        if violations.is_empty() {
            Ok(space)
        } else {
            Err(SpaceError::Invalid(violations))
        }
    }

    /// Builds from a row-major vector whose validity the caller guarantees
    /// by construction (generators, discretizers). Still validated.
    pub(crate) fn from_flat(
        points: PointSet,
        entries: Vec<Scalar>,
        claimed_class: ClaimedClass,
        options: SpaceOptions,
    ) -> Result<Self, SpaceError> {
        let n = points.len();
        let grid = entries.chunks(n).map(<[Scalar]>::to_vec).collect();
        DistanceSpace::new(points, grid, claimed_class, options)
    }

    fn violations(&self) -> Vec<CellViolation> {
        let n = self.len();
        let tol = self.options.tol;
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let v = self.get(i, j);
                let problem = if !v.is_finite() {
                    Some(CellProblem::NonFinite)
                } else if v.is_negative() {
                    Some(CellProblem::Negative)
                } else if i == j && !v.is_zero() {
                    Some(CellProblem::NonzeroDiagonal)
                } else if i < j && !v.eq_tol(self.get(j, i), tol) {
                    Some(CellProblem::Asymmetric)
                } else if i != j && v.is_zero() && !self.options.allow_degenerate {
                    Some(CellProblem::ZeroOffDiagonal)
                } else {
                    None
                };
                if let Some(problem) = problem {
                    out.push(CellViolation { row: i, col: j, problem });
                }
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn labels(&self) -> &[String] {
        self.points.labels()
    }

    pub fn label(&self, i: usize) -> &str {
        self.points.label(i)
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.points.index_of(label)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &Scalar {
        &self.entries[i * self.len() + j]
    }

    pub fn entries(&self) -> &[Scalar] {
        &self.entries
    }

    pub fn rows(&self) -> Vec<Vec<Scalar>> {
        self.entries.chunks(self.len()).map(<[Scalar]>::to_vec).collect()
    }

    pub fn claimed_class(&self) -> &ClaimedClass {
        &self.claimed_class
    }

    pub fn options(&self) -> SpaceOptions {
        self.options
    }

    pub fn tol(&self) -> f64 {
        self.options.tol
    }

    pub fn mode(&self) -> Mode {
        self.entries.first().map(Scalar::mode).unwrap_or(Mode::Exact)
    }

    pub fn with_claimed_class(mut self, claimed_class: ClaimedClass) -> Self {
        self.claimed_class = claimed_class;
        self
    }

    /// Converts every entry to the given mode.
    pub fn to_mode(&self, mode: Mode) -> DistanceSpace {
        let mut out = self.clone();
        out.entries = self.entries.iter().map(|s| s.to_mode(mode)).collect();
        out
    }

    /// Pairs `i < j` with a zero distance.
    pub fn zero_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.len();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if self.get(i, j).is_zero() {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Smallest positive off-diagonal entry.
    pub fn min_positive(&self) -> Option<Scalar> {
        let n = self.len();
        let mut best: Option<Scalar> = None;
        for i in 0..n {
            for j in i + 1..n {
                let v = self.get(i, j);
                if !v.is_zero() && best.as_ref().is_none_or(|b| v.exact_cmp(b).is_lt()) {
                    best = Some(v.clone());
                }
            }
        }
        best
    }

    pub fn max_entry(&self) -> Scalar {
        self.entries.iter().fold(Scalar::zero(), |m, v| m.max_of(v))
    }

    /// Distinct off-diagonal values in increasing order.
    pub fn distinct_values(&self) -> Vec<Scalar> {
        let n = self.len();
        let mut vals: Vec<Scalar> = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                vals.push(self.get(i, j).clone());
            }
        }
        vals.sort_by(|a, b| a.exact_cmp(b));
        vals.dedup_by(|a, b| a.exact_cmp(b).is_eq());
        vals
    }

    /// Entrywise map. The result is revalidated.
    pub(crate) fn map_entries(
        &self,
        claimed_class: ClaimedClass,
        f: impl Fn(&Scalar) -> Scalar,
    ) -> Result<DistanceSpace, SpaceError> {
        let entries = self.entries.iter().map(f).collect();
        DistanceSpace::from_flat(self.points.clone(), entries, claimed_class, self.options)
    }

    /// Multiplies every entry by a positive factor.
    pub fn scaled(&self, factor: &Scalar) -> Result<DistanceSpace, SpaceError> {
        self.map_entries(self.claimed_class.clone(), |v| v * factor)
    }

    /// Raises every entry to an arbitrary positive exponent. Used to build
    /// b-metrics from metrics (`q >= 1`) as well as by `power_entrywise`.
    pub fn raised(&self, q: &Exponent) -> Result<DistanceSpace, SpaceError> {
        if q.to_f64() <= 0.0 {
            return Err(SpaceError::ExponentRange(q.to_string()));
        }
        if q.is_one() {
            return Ok(self.clone());
        }
        let class = match &self.claimed_class {
            ClaimedClass::Metric if q.to_f64() >= 1.0 => {
                // (a+b)^q <= 2^(q-1) (a^q + b^q) for q >= 1
                let k = match q.as_integer() {
                    Some(qi) => Scalar::int(1i64 << (qi - 1)),
                    None => Scalar::Float(2f64.powf(q.to_f64() - 1.0)),
                };
                ClaimedClass::BMetric(k)
            }
            ClaimedClass::Metric => ClaimedClass::Metric,
            _ => ClaimedClass::RawDistance,
        };
        self.map_entries(class, |v| if v.is_zero() { v.clone() } else { v.pow(q) })
    }
}

/// Replaces every entry by `entry^p` for `0 < p <= 1`.
///
/// The result stays exact when every entry is an exact perfect power for
/// `p`; otherwise the whole space switches to float mode.
pub fn power_entrywise(space: &DistanceSpace, p: &Exponent) -> Result<DistanceSpace, SpaceError> {
    if !p.in_unit_interval() {
        return Err(SpaceError::ExponentRange(p.to_string()));
    }
    if p.is_one() {
        return Ok(space.clone());
    }
    let class = match space.claimed_class() {
        ClaimedClass::Metric => ClaimedClass::Metric,
        _ => ClaimedClass::RawDistance,
    };
    space.map_entries(class, |v| if v.is_zero() { v.clone() } else { v.pow(p) })
}
