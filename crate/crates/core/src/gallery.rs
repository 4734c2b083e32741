//! Deterministic generators for the worked examples and counterexamples,
//! and seeded random instances for property suites.
//!
//! Infinite carriers are truncated; the truncation size is always a
//! parameter.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::chain::shortest_paths;
use crate::families::BallFamilies;
use crate::scalar::{Exponent, Scalar};
use crate::space::{make_space, ClaimedClass, DistanceSpace, PointSet, SpaceError, SpaceOptions};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GalleryError {
    #[error("{name}: parameter {param} = {value} out of range ({expected})")]
    Param { name: &'static str, param: &'static str, value: String, expected: &'static str },
    #[error("unknown random kind `{0}`; expected metric, bmetric(q) or twogen")]
    Kind(String),
    #[error("vectors must be nonempty and share one dimension")]
    Vectors,
    #[error(transparent)]
    Space(#[from] SpaceError),
}

fn param(name: &'static str, param: &'static str, value: impl fmt::Display, expected: &'static str) -> GalleryError {
    GalleryError::Param { name, param, value: value.to_string(), expected }
}

/// Name, parameters and a one-line description of a generated instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GallerySpec {
    pub name: String,
    pub parameters: serde_json::Value,
    pub description: String,
}

fn space_from_fn(
    values: &[Scalar],
    class: ClaimedClass,
    f: impl Fn(usize, usize) -> Scalar,
) -> Result<DistanceSpace, GalleryError> {
    let n = values.len();
    let labels = values.iter().map(Scalar::to_string).collect();
    let grid = (0..n).map(|i| (0..n).map(|j| if i == j { Scalar::zero() } else { f(i, j) }).collect()).collect();
    let points = PointSet::new(labels)?.with_coords(values.iter().map(|v| vec![v.to_f64()]).collect())?;
    Ok(DistanceSpace::new(points, grid, class, SpaceOptions::default())?)
}

/// `{k/n : k = 0..n}` with `D(x,y) = |x-y|^2`.
pub fn gen_square_line(n: u32) -> Result<DistanceSpace, GalleryError> {
    if n < 1 {
        return Err(param("square-line", "n", n, "n >= 1"));
    }
    let pts: Vec<Scalar> = (0..=n).map(|k| Scalar::ratio(k as i64, n as i64)).collect();
    let two = Exponent::ratio(2, 1);
    space_from_fn(&pts, ClaimedClass::BMetric(Scalar::int(2)), |i, j| (&pts[i] - &pts[j]).abs().pow(&two))
}

/// `{0, 1} ∪ {1/k : 2 <= k <= n}`, listed as `0, 1, 1/2, …, 1/n`.
fn reciprocal_carrier(n: u32) -> Vec<Scalar> {
    let mut pts = vec![Scalar::zero(), Scalar::one()];
    pts.extend((2..=n).map(|k| Scalar::ratio(1, k as i64)));
    pts
}

// 0 or 1/(2m)
fn is_even_side(x: &Scalar) -> bool {
    x.is_zero() || (x.as_rational().is_some_and(|r| r.numer() == &1.into() && (r.denom() % 2u32) == 0.into()))
}

fn four_case(n: u32, otherwise: Scalar, name: &'static str) -> Result<DistanceSpace, GalleryError> {
    if n < 4 || !n.is_multiple_of(2) {
        return Err(param(name, "N", n, "even N >= 4"));
    }
    let pts = reciprocal_carrier(n);
    space_from_fn(&pts, ClaimedClass::BMetric(Scalar::int(4)), |i, j| {
        let (x, y) = (&pts[i], &pts[j]);
        if i <= 1 && j <= 1 {
            Scalar::one()
        } else if is_even_side(x) && is_even_side(y) {
            (x - y).abs()
        } else {
            otherwise.clone()
        }
    })
}

/// Four-case table on `{0,1} ∪ {1/k}`: 1 on `{0,1}`, `|x-y|` within
/// `{0} ∪ {1/2m}`, 4 otherwise.
pub fn gen_example_399(n: u32) -> Result<DistanceSpace, GalleryError> {
    four_case(n, Scalar::int(4), "example-399")
}

/// Same carrier and cases as [`gen_example_399`] with `1/4` in the last case.
pub fn gen_example_387(n: u32) -> Result<DistanceSpace, GalleryError> {
    four_case(n, Scalar::ratio(1, 4), "example-387")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpSpace {
    pub space: DistanceSpace,
    /// `q = p/(p+1)`, for which `D^q` is a metric.
    pub companion: Exponent,
}

/// `D(x,y) = (Σ |x_i - y_i|^p)^(1/p)` on the given vectors, claimed
/// b-metric with `K = 2^(1/p)`.
pub fn gen_lp_truncated(p: &Exponent, vectors: &[Vec<Scalar>]) -> Result<LpSpace, GalleryError> {
    if !p.in_unit_interval() {
        return Err(param("lp", "p", p, "0 < p <= 1"));
    }
    let m = vectors.first().map(Vec::len).ok_or(GalleryError::Vectors)?;
    if m == 0 || vectors.iter().any(|v| v.len() != m) {
        return Err(GalleryError::Vectors);
    }
    let inv = match p {
        Exponent::Rational(r) => Exponent::Rational(r.recip()),
        Exponent::Float(f) => Exponent::Float(1.0 / f),
    };
    let k = match inv.as_integer() {
        Some(e) if e < 63 => Scalar::int(1i64 << e),
        _ => Scalar::Float(2f64.powf(inv.to_f64())),
    };
    let n = vectors.len();
    let grid = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        return Scalar::zero();
                    }
                    let sum = vectors[i]
                        .iter()
                        .zip(&vectors[j])
                        .map(|(a, b)| (a - b).abs().pow(p))
                        .fold(Scalar::zero(), |acc, t| &acc + &t);
                    sum.pow(&inv)
                })
                .collect()
        })
        .collect();
    let labels = (0..n).map(|i| format!("v{i}")).collect();
    let coords = vectors.iter().map(|v| v.iter().map(Scalar::to_f64).collect()).collect();
    let points = PointSet::new(labels)?.with_coords(coords)?;
    let space = DistanceSpace::new(points, grid, ClaimedClass::BMetric(k), SpaceOptions::default())?;
    let companion = match p {
        Exponent::Rational(r) => Exponent::Rational(r / (r + num_rational::BigRational::from_integer(1.into()))),
        Exponent::Float(f) => Exponent::Float(f / (f + 1.0)),
    };
    Ok(LpSpace { space, companion })
}

/// Four points `a, b, c, e`: `ρ(a,b) = 3`, `ρ(a,c) = ρ(b,c) = 1`, 2 otherwise.
pub fn gen_branciari4() -> DistanceSpace {
    let labels = ["a", "b", "c", "e"].map(String::from).to_vec();
    let v = |x: i64| Scalar::int(x);
    let grid = vec![
        vec![v(0), v(3), v(1), v(2)],
        vec![v(3), v(0), v(1), v(2)],
        vec![v(1), v(1), v(0), v(2)],
        vec![v(2), v(2), v(2), v(0)],
    ];
    make_space(labels, grid, ClaimedClass::TwoGeneralized).expect("fixed table is valid")
}

/// `{0} ∪ {1/k : 1 <= k <= n}` with `ρ(0, 1/k) = 1/k` and 2 otherwise.
/// The distance is not continuous: `ρ(1/k, 1) = 2` while `ρ(0, 1) = 1`.
pub fn gen_2gen_slow(n: u32) -> Result<DistanceSpace, GalleryError> {
    if n < 1 {
        return Err(param("2gen-slow", "N", n, "N >= 1"));
    }
    let mut pts = vec![Scalar::zero()];
    pts.extend((1..=n).map(|k| Scalar::ratio(1, k as i64)));
    space_from_fn(&pts, ClaimedClass::TwoGeneralized, |i, j| {
        if i == 0 {
            pts[j].clone()
        } else if j == 0 {
            pts[i].clone()
        } else {
            Scalar::int(2)
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoncoherentExample {
    pub space: DistanceSpace,
    /// Index of `a = 0`.
    pub a: usize,
    /// Indices of `a_m = 1/(2m)` and `b_m = 1/(2m+1)`, `m = 1..=n`.
    pub a_seq: Vec<usize>,
    pub b_seq: Vec<usize>,
    /// `ρ(a, a_m)`, `ρ(a_m, b_m)`, `ρ(a, b_m)`.
    pub seq_aan: Vec<Scalar>,
    pub seq_anbn: Vec<Scalar>,
    pub seq_abn: Vec<Scalar>,
}

/// Five-case symmetric distance on `{0} ∪ {1/k : 1 <= k <= 2n+1}` that is
/// not coherent: `ρ(0,1/2m) = 1/2m`, `ρ(1,1/(2m+1)) = 1/(2m+1)`,
/// `ρ(0,1/(2m-1)) = ρ(1,1/2m) = 1`, `|x-y|` otherwise.
pub fn gen_noncoherent(n: u32) -> Result<NoncoherentExample, GalleryError> {
    if n < 1 {
        return Err(param("noncoherent", "N", n, "N >= 1"));
    }
    let top = 2 * n + 1;
    // index 0 is the point 0, index k is 1/k
    let mut pts = vec![Scalar::zero()];
    pts.extend((1..=top).map(|k| Scalar::ratio(1, k as i64)));
    let rho = |i: usize, j: usize| -> Scalar {
        let (i, j) = (i.min(j), i.max(j));
        match (i, j) {
            (0, k) if k % 2 == 0 => pts[k].clone(),
            (0, _) => Scalar::one(),
            (1, k) if k % 2 == 1 => pts[k].clone(),
            (1, _) => Scalar::one(),
            _ => (&pts[i] - &pts[j]).abs(),
        }
    };
    let space = space_from_fn(&pts, ClaimedClass::RawDistance, rho)?;
    let a_seq: Vec<usize> = (1..=n as usize).map(|m| 2 * m).collect();
    let b_seq: Vec<usize> = (1..=n as usize).map(|m| 2 * m + 1).collect();
    let seq_aan = a_seq.iter().map(|&i| space.get(0, i).clone()).collect();
    let seq_anbn = a_seq.iter().zip(&b_seq).map(|(&i, &j)| space.get(i, j).clone()).collect();
    let seq_abn = b_seq.iter().map(|&j| space.get(0, j).clone()).collect();
    Ok(NoncoherentExample { space, a: 0, a_seq, b_seq, seq_aan, seq_anbn, seq_abn })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuCounterexample {
    pub points: Vec<String>,
    pub families: BallFamilies,
}

/// Grid `{k/n_grid}` on `[0,1]` with level-`m` family the open balls of
/// radius `2/m` (usual metric) around every grid point, `m = 1..=n_levels`.
pub fn gen_au_counterexample(n_grid: u32, n_levels: u32) -> Result<AuCounterexample, GalleryError> {
    if n_grid < 1 {
        return Err(param("au-counterexample", "n_grid", n_grid, "n_grid >= 1"));
    }
    if n_levels < 1 {
        return Err(param("au-counterexample", "n_levels", n_levels, "n_levels >= 1"));
    }
    let g = n_grid as i64;
    let labels: Vec<String> = (0..=g).map(|k| Scalar::ratio(k, g).to_string()).collect();
    // |i - j|/g < 2/m  <=>  |i - j|·m < 2g
    let levels = (1..=n_levels as i64)
        .map(|m| (0..=g).map(|c| (0..=g).filter(|&k| (k - c).abs() * m < 2 * g).map(|k| k as usize).collect()).collect())
        .collect();
    let per_point = Some(vec![(0..=g as usize).collect(); n_levels as usize]);
    let families = BallFamilies::new(labels.clone(), 1, levels, per_point).expect("balls contain their centers");
    Ok(AuCounterexample { points: labels, families })
}

#[derive(Debug, Clone, PartialEq)]
pub enum RandomKind {
    Metric,
    /// A random metric raised entrywise to `q ∈ [1, 3]`.
    BMetric(Exponent),
    TwoGen,
}

impl FromStr for RandomKind {
    type Err = GalleryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "metric" => Ok(RandomKind::Metric),
            "twogen" => Ok(RandomKind::TwoGen),
            _ => {
                let q = s
                    .strip_prefix("bmetric(")
                    .and_then(|r| r.strip_suffix(')'))
                    .and_then(|q| q.parse::<Exponent>().ok())
                    .ok_or_else(|| GalleryError::Kind(s.to_string()))?;
                Ok(RandomKind::BMetric(q))
            }
        }
    }
}

impl fmt::Display for RandomKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RandomKind::Metric => write!(f, "metric"),
            RandomKind::BMetric(q) => write!(f, "bmetric({q})"),
            RandomKind::TwoGen => write!(f, "twogen"),
        }
    }
}

/// Seeded random instances.
///
/// * `metric`: shortest-path closure of symmetric entries `k/20`, `k ∈ 1..=20`.
/// * `bmetric(q)`: that metric raised to `q`, a b-metric with `K <= 2^(q-1)`.
/// * `twogen`: symmetric entries `k/20`, `k ∈ 20..60`, i.e. in `[1, 3)`;
///   any such grid is 2-generalized since `ρ(x,y) < 3 <= ` any three-leg sum.
pub fn gen_random(kind: &RandomKind, n: usize, seed: u64) -> Result<DistanceSpace, GalleryError> {
    if n < 2 {
        return Err(param("random", "n", n, "n >= 2"));
    }
    if let RandomKind::BMetric(q) = kind {
        let qf = q.to_f64();
        if !(1.0..=3.0).contains(&qf) {
            return Err(param("random", "q", q, "1 <= q <= 3"));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let range = match kind {
        RandomKind::TwoGen => 20..60,
        _ => 1..21,
    };
    let mut w = vec![Scalar::zero(); n * n];
    for i in 0..n {
        for j in i + 1..n {
            let v = Scalar::ratio(rng.random_range(range.clone()), 20);
            w[i * n + j] = v.clone();
            w[j * n + i] = v;
        }
    }
    let labels = (0..n).map(|i| format!("x{i}")).collect();
    let class = match kind {
        RandomKind::TwoGen => ClaimedClass::TwoGeneralized,
        _ => {
            shortest_paths(n, &mut w);
            ClaimedClass::Metric
        }
    };
    let space = DistanceSpace::from_flat(PointSet::new(labels)?, w, class, SpaceOptions::default())?;
    match kind {
        RandomKind::BMetric(q) => Ok(space.raised(q)?),
        _ => Ok(space),
    }
}
