//! Contraction moduli, Banach iteration and the transfer of contractivity
//! to the chain metric.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audit::{AuditReport, Axiom, Witness};
use crate::chain::{chain_metric, ChainError};
use crate::scalar::{Exponent, Scalar};
use crate::space::DistanceSpace;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FixedPointError {
    #[error("map has {got} entries for {expected} points")]
    MapLength { expected: usize, got: usize },
    #[error("map sends point {from} to {to}, outside the point set")]
    MapRange { from: usize, to: usize },
    #[error("start point {0} outside the point set")]
    StartRange(usize),
    #[error("degenerate space: zero distance between `{0}` and `{1}`")]
    Degenerate(String, String),
    #[error("map is not a contraction: modulus {0} >= 1")]
    NotContraction(String),
    #[error("map does not send the domain [{lo}, {hi}] into itself")]
    NotClosed { lo: String, hi: String },
    #[error("point {0} lies outside the domain")]
    OutsideDomain(String),
    #[error("tabulated map needs at least two knots with increasing x")]
    BadTable,
    #[error("tolerance must be positive")]
    Tolerance,
    #[error("cannot parse map `{0}`; expected `affine:LAMBDA,C`")]
    Parse(String),
    #[error("distance exponent must be positive, got {0}")]
    Exponent(String),
    #[error(transparent)]
    Chain(#[from] ChainError),
}

/// A self-map on the real line, closed on its domain interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoordMap {
    /// `x ↦ λx + c` on `[lo, hi]`.
    Affine { lambda: Scalar, c: Scalar, lo: Scalar, hi: Scalar },
    /// Piecewise-linear interpolation of `(x, T(x))` knots; the domain is the knot span.
    Tabulated { knots: Vec<(Scalar, Scalar)> },
}

impl CoordMap {
    pub fn affine(lambda: Scalar, c: Scalar, lo: Scalar, hi: Scalar) -> Result<CoordMap, FixedPointError> {
        let m = CoordMap::Affine { lambda, c, lo, hi };
        m.check_closed()?;
        Ok(m)
    }

    pub fn tabulated(mut knots: Vec<(Scalar, Scalar)>) -> Result<CoordMap, FixedPointError> {
        knots.sort_by(|a, b| a.0.exact_cmp(&b.0));
        if knots.len() < 2 || knots.windows(2).any(|w| w[0].0.exact_cmp(&w[1].0).is_ge()) {
            return Err(FixedPointError::BadTable);
        }
        let m = CoordMap::Tabulated { knots };
        m.check_closed()?;
        Ok(m)
    }

    pub fn domain(&self) -> (Scalar, Scalar) {
        match self {
            CoordMap::Affine { lo, hi, .. } => (lo.clone(), hi.clone()),
            CoordMap::Tabulated { knots } => (knots[0].0.clone(), knots[knots.len() - 1].0.clone()),
        }
    }

    fn check_closed(&self) -> Result<(), FixedPointError> {
        let (lo, hi) = self.domain();
        // the image of an interval under a piecewise-linear map is spanned by the knot images
        let images = match self {
            CoordMap::Affine { .. } => vec![self.apply(&lo)?, self.apply(&hi)?],
            CoordMap::Tabulated { knots } => knots.iter().map(|k| k.1.clone()).collect(),
        };
        if lo.exact_cmp(&hi).is_gt() || images.iter().any(|y| y.exact_cmp(&lo).is_lt() || y.exact_cmp(&hi).is_gt()) {
            return Err(FixedPointError::NotClosed { lo: lo.to_string(), hi: hi.to_string() });
        }
        Ok(())
    }

    pub fn apply(&self, x: &Scalar) -> Result<Scalar, FixedPointError> {
        let (lo, hi) = self.domain();
        if x.exact_cmp(&lo).is_lt() || x.exact_cmp(&hi).is_gt() {
            return Err(FixedPointError::OutsideDomain(x.to_string()));
        }
        Ok(match self {
            CoordMap::Affine { lambda, c, .. } => lambda * x + c.clone(),
            CoordMap::Tabulated { knots } => {
                let i = knots.iter().rposition(|k| k.0.exact_cmp(x).is_le()).expect("x >= first knot");
                if i + 1 == knots.len() {
                    knots[i].1.clone()
                } else {
                    let ((x0, y0), (x1, y1)) = (&knots[i], &knots[i + 1]);
                    y0 + &(&(y1 - y0) * &(&(x - x0) / &(x1 - x0)))
                }
            }
        })
    }

    /// Lipschitz constant for `|x - y|`.
    pub fn lipschitz(&self) -> Scalar {
        match self {
            CoordMap::Affine { lambda, .. } => lambda.abs(),
            CoordMap::Tabulated { knots } => knots
                .windows(2)
                .map(|w| (&(&w[1].1 - &w[0].1) / &(&w[1].0 - &w[0].0)).abs())
                .fold(Scalar::zero(), |a, b| a.max_of(&b)),
        }
    }
}

impl FromStr for CoordMap {
    type Err = FixedPointError;

    /// `affine:LAMBDA,C` on the default domain `[0, 1]`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || FixedPointError::Parse(s.to_string());
        let body = s.strip_prefix("affine:").ok_or_else(err)?;
        let (l, c) = body.split_once(',').ok_or_else(err)?;
        let lambda: Scalar = l.trim().parse().map_err(|_| err())?;
        let c: Scalar = c.trim().parse().map_err(|_| err())?;
        CoordMap::affine(lambda, c, Scalar::zero(), Scalar::one())
    }
}

/// `D(x,y) = |x - y|^q` on the line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceRule {
    pub q: Exponent,
}

impl DistanceRule {
    pub fn pow(q: Exponent) -> Result<DistanceRule, FixedPointError> {
        if q.to_f64() <= 0.0 {
            return Err(FixedPointError::Exponent(q.to_string()));
        }
        Ok(DistanceRule { q })
    }

    pub fn eval(&self, x: &Scalar, y: &Scalar) -> Scalar {
        (x - y).abs().pow(&self.q)
    }

    /// b-metric coefficient `2^(q-1)` (1 when `q <= 1`).
    pub fn coefficient(&self) -> Scalar {
        match self.q.as_integer() {
            Some(0) | Some(1) => Scalar::one(),
            Some(k) => Scalar::int(1i64 << (k - 1)),
            None if self.q.to_f64() <= 1.0 => Scalar::one(),
            None => Scalar::Float(2f64.powf(self.q.to_f64() - 1.0)),
        }
    }
}

impl FromStr for DistanceRule {
    type Err = FixedPointError;

    /// `pow2`, `pow3`, `pow1/2`, …
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let q = s
            .strip_prefix("pow")
            .and_then(|q| q.parse::<Exponent>().ok())
            .ok_or_else(|| FixedPointError::Exponent(s.to_string()))?;
        DistanceRule::pow(q)
    }
}

impl fmt::Display for DistanceRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "pow{}", self.q)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SelfMap {
    /// `map[i]` is the image of point `i`.
    Index {
        map: Vec<usize>,
    },
    Coord {
        map: CoordMap,
        rule: DistanceRule,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    FixedPointExact,
    CauchyTol,
    CycleDetected,
    MaxIters,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Orbit {
    Index { indices: Vec<usize>, labels: Vec<String> },
    Coord(Vec<Scalar>),
}

impl Orbit {
    pub fn len(&self) -> usize {
        match self {
            Orbit::Index { indices, .. } => indices.len(),
            Orbit::Coord(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationTrace {
    pub iterates: Orbit,
    /// `D(x_{n+1}, x_n)`.
    pub step_dists: Vec<Scalar>,
    pub lambda_hat: Scalar,
    pub stop_reason: StopReason,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub assumptions: Vec<String>,
}

fn check_index_map(space: &DistanceSpace, map: &[usize]) -> Result<(), FixedPointError> {
    let n = space.len();
    if map.len() != n {
        return Err(FixedPointError::MapLength { expected: n, got: map.len() });
    }
    if let Some((from, &to)) = map.iter().enumerate().find(|(_, &t)| t >= n) {
        return Err(FixedPointError::MapRange { from, to });
    }
    Ok(())
}

/// `λ̂ = max_{x≠y} D(Tx,Ty) / D(x,y)`; 0 on a single point.
pub fn contraction_modulus(space: &DistanceSpace, map: &[usize]) -> Result<Scalar, FixedPointError> {
    check_index_map(space, map)?;
    if let Some(&(i, j)) = space.zero_pairs().first() {
        return Err(FixedPointError::Degenerate(space.label(i).into(), space.label(j).into()));
    }
    let n = space.len();
    let mut best = Scalar::zero().to_mode(space.mode());
    for x in 0..n {
        for y in x + 1..n {
            let r = space.get(map[x], map[y]).checked_div(space.get(x, y)).expect("positive off-diagonal");
            if r.exact_cmp(&best).is_gt() {
                best = r;
            }
        }
    }
    Ok(best)
}

/// Exact iteration of an index map from `x0`. Stops at a fixed point, on
/// revisiting a point, or after `max_iters` steps.
pub fn banach_iterate_index(
    space: &DistanceSpace,
    map: &[usize],
    x0: usize,
    max_iters: usize,
) -> Result<IterationTrace, FixedPointError> {
    check_index_map(space, map)?;
    if x0 >= space.len() {
        return Err(FixedPointError::StartRange(x0));
    }
    let lambda_hat = contraction_modulus(space, map)?;
    let mut indices = vec![x0];
    let mut step_dists = Vec::new();
    let mut seen = HashSet::from([x0]);
    let mut cur = x0;
    let stop_reason = loop {
        if map[cur] == cur {
            break StopReason::FixedPointExact;
        }
        if step_dists.len() >= max_iters {
            break StopReason::MaxIters;
        }
        let next = map[cur];
        step_dists.push(space.get(next, cur).clone());
        indices.push(next);
        if !seen.insert(next) {
            break StopReason::CycleDetected;
        }
        cur = next;
    };
    let labels = indices.iter().map(|&i| space.label(i).to_string()).collect();
    Ok(IterationTrace {
        iterates: Orbit::Index { indices, labels },
        step_dists,
        lambda_hat,
        stop_reason,
        notes: Vec::new(),
        assumptions: Vec::new(),
    })
}

/// Iteration of a coordinate map under `D(x,y) = |x-y|^q`.
///
/// With `L` the Lipschitz constant of the map for `|x-y|` and `L < 1`, the
/// distance from `x_{n+1}` to the fixed point is at most `L/(1-L)·|x_{n+1}-x_n|`;
/// iteration stops once that bound, raised to `q`, is below `tol`. Otherwise
/// it stops once the step `D(x_{n+1}, x_n)` is below `tol`.
pub fn banach_iterate_coord(
    map: &CoordMap,
    rule: &DistanceRule,
    x0: &Scalar,
    tol: &Scalar,
    max_iters: usize,
) -> Result<IterationTrace, FixedPointError> {
    if tol.is_zero() || tol.is_negative() {
        return Err(FixedPointError::Tolerance);
    }
    let l = map.lipschitz();
    let lambda_hat = l.pow(&rule.q);
    let tail_factor = (l.exact_cmp(&Scalar::one()).is_lt()).then(|| &l / &(&Scalar::one() - &l));
    let mut xs = vec![map.apply(x0).map(|_| x0.clone())?];
    let mut step_dists = Vec::new();
    let stop_reason = loop {
        if step_dists.len() >= max_iters {
            break StopReason::MaxIters;
        }
        let cur = xs.last().expect("nonempty").clone();
        let next = map.apply(&cur)?;
        let step = rule.eval(&next, &cur);
        let gap = (&next - &cur).abs();
        step_dists.push(step.clone());
        xs.push(next);
        if gap.is_zero() {
            break StopReason::FixedPointExact;
        }
        let bound = match &tail_factor {
            Some(f) => (f * &gap).pow(&rule.q),
            None => step,
        };
        if bound.exact_cmp(tol).is_lt() {
            break StopReason::CauchyTol;
        }
    };
    let k = rule.coefficient();
    let mut notes = vec![match &tail_factor {
        Some(_) => format!("stop rule: (L/(1-L)|x_(n+1) - x_n|)^q < tol with L = {l}, q = {}", rule.q),
        None => format!("stop rule: D(x_(n+1), x_n) < tol (L = {l} is not below 1)"),
    }];
    if !k.exact_cmp(&Scalar::one()).is_le() && !(&lambda_hat * &k).exact_cmp(&Scalar::one()).is_lt() {
        notes.push(format!(
            "lambda_D = {lambda_hat} is not below 1/K = {}: the lambda < 1/K contraction principle does not apply, \
             the snowflake transfer (any lambda < 1) does",
            &Scalar::one() / &k
        ));
    }
    let (lo, hi) = map.domain();
    Ok(IterationTrace {
        iterates: Orbit::Coord(xs),
        step_dists,
        lambda_hat,
        stop_reason,
        notes,
        assumptions: vec![format!("completeness of the closed interval [{lo}, {hi}] under {rule}")],
    })
}

/// Dispatches on the map kind; `space` is required for index maps.
pub fn banach_iterate(
    space: Option<&DistanceSpace>,
    map: &SelfMap,
    x0: &Scalar,
    tol: &Scalar,
    max_iters: usize,
) -> Result<IterationTrace, FixedPointError> {
    match map {
        SelfMap::Index { map } => {
            let space = space.ok_or(FixedPointError::MapLength { expected: 0, got: map.len() })?;
            let start = x0
                .as_rational()
                .filter(|r| r.is_integer())
                .and_then(|r| usize::try_from(r.to_integer()).ok())
                .ok_or_else(|| FixedPointError::OutsideDomain(x0.to_string()))?;
            banach_iterate_index(space, map, start, max_iters)
        }
        SelfMap::Coord { map, rule } => banach_iterate_coord(map, rule, x0, tol, max_iters),
    }
}

/// Checks `d(Tx,Ty) <= λ̂^p d(x,y)` for every pair, `d` the chain metric with exponent `p`.
pub fn induced_contraction_check(space: &DistanceSpace, map: &[usize], p: &Exponent) -> Result<AuditReport, FixedPointError> {
    let lambda = contraction_modulus(space, map)?;
    if lambda.exact_cmp(&Scalar::one()).is_ge() {
        return Err(FixedPointError::NotContraction(lambda.to_string()));
    }
    let d = chain_metric(space, p)?;
    let factor = lambda.pow(p);
    let tol = space.tol();
    let n = space.len();
    let mut r = AuditReport::new(Axiom::InducedContraction);
    r.note(format!("lambda_hat = {lambda}, lambda_hat^p = {factor}"));
    for x in 0..n {
        for y in x + 1..n {
            let lhs = d.get(map[x], map[y]);
            let rhs = &factor * d.get(x, y);
            if lhs.cmp_tol(&rhs, tol).is_gt() {
                r.record(Witness::new(space, vec![x, y], lhs.clone(), rhs));
            }
        }
    }
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayVerdict {
    pub pass: bool,
    pub lambda: Scalar,
    /// Index `k` of the first step with `step[k] > λ^k · step[0] · (1 + tol)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_failure: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Checks `step[k] <= λ^k · step[0] · (1 + tol)` along a trace.
pub fn geometric_decay_check(trace: &IterationTrace, lambda: &Scalar, tol: f64) -> DecayVerdict {
    let steps = &trace.step_dists;
    if trace.iterates.len() < 3 {
        return DecayVerdict {
            pass: true,
            lambda: lambda.clone(),
            first_failure: None,
            note: Some("fewer than three iterates: nothing to compare".into()),
        };
    }
    let slack = Scalar::Float(1.0 + tol);
    let mut bound = steps[0].clone();
    let mut first_failure = None;
    for (k, s) in steps.iter().enumerate().skip(1) {
        bound = &bound * lambda;
        let allowed = if bound.is_exact() && s.is_exact() { bound.clone() } else { &bound * &slack };
        if s.exact_cmp(&allowed).is_gt() {
            first_failure = Some(k);
            break;
        }
    }
    DecayVerdict { pass: first_failure.is_none(), lambda: lambda.clone(), first_failure, note: None }
}
