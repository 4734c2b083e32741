//! Chain metrics as all-pairs shortest paths.
//!
//! The chain metric of `D` with exponent `p` is
//! `d(x,y) = inf Σ D(x_i, x_{i+1})^p` over finite chains from `x` to `y`.
//! On a finite set the weights are nonnegative, so a chain that revisits a
//! point can be shortcut without increasing its sum: the infimum is the
//! minimum over simple paths, which Floyd–Warshall computes exactly.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::One;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::audit::{check_generalized_triangle, min_b_coefficient, AuditReport, Axiom, Witness};
use crate::families::BallFamilies;
use crate::scalar::{common_denominator, Exponent, Scalar};
use crate::space::{power_entrywise, ClaimedClass, DistanceSpace, PointSet, SpaceOptions};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChainError {
    #[error("exponent {0} outside (0, 1]")]
    ExponentRange(String),
    #[error("coefficient K = {0} is below 1")]
    CoefficientBelowOne(String),
    #[error("point `{0}` is not covered by any set")]
    Uncovered(String),
    #[error("chain length must be at least 1")]
    EmptyChain,
}

/// Which sandwich inequality to verify.
#[derive(Debug, Clone, PartialEq)]
pub enum Regime {
    /// `D/4 <= d <= D` for spaces satisfying the generalized triangle inequality.
    FrinkIv,
    /// `D^p/4 <= d <= D^p` for b-metrics with `(2K)^p = 2`. `None` uses `K_min`.
    Ps { k: Option<Scalar> },
    /// `D^β/2 <= d <= D^β` with a caller-supplied `β`.
    Ain { beta: Exponent },
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::FrinkIv => "frink-IV",
            Regime::Ps { .. } => "pS",
            Regime::Ain { .. } => "aIN",
        }
    }

    fn lower_factor(&self) -> Scalar {
        match self {
            Regime::FrinkIv | Regime::Ps { .. } => Scalar::ratio(1, 4),
            Regime::Ain { .. } => Scalar::ratio(1, 2),
        }
    }
}

impl Serialize for Regime {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", content = "reason", rename_all = "kebab-case")]
pub enum Hypotheses {
    Met,
    Unmet(String),
    Unverified(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SandwichVerdict {
    Pass,
    /// Upper bound broken, or lower bound broken while the hypotheses hold.
    Fail,
    /// Lower bound broken, but the regime's hypotheses do not hold.
    HypothesesUnmet,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairVerdict {
    pub i: usize,
    pub j: usize,
    pub d: Scalar,
    pub lower: Scalar,
    pub upper: Scalar,
    pub lower_ok: bool,
    pub upper_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SandwichReport {
    pub regime: Regime,
    pub lower_factor: Scalar,
    pub hypotheses: Hypotheses,
    pub verdict: SandwichVerdict,
    pub lower_failures: usize,
    pub upper_failures: usize,
    pub pairs: Vec<PairVerdict>,
}

/// Induced metric `d` with its diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InducedMetricReport {
    pub exponent: Exponent,
    pub labels: Vec<String>,
    #[serde(serialize_with = "serialize_rows")]
    pub induced: Vec<Scalar>,
    pub degenerate_pairs: Vec<(usize, usize)>,
    pub sandwich: SandwichReport,
    pub is_metric: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

fn serialize_rows<S: Serializer>(flat: &[Scalar], serializer: S) -> Result<S::Ok, S::Error> {
    let n = (flat.len() as f64).sqrt().round() as usize;
    let rows: Vec<&[Scalar]> = flat.chunks(n.max(1)).collect();
    rows.serialize(serializer)
}

impl InducedMetricReport {
    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn get(&self, i: usize, j: usize) -> &Scalar {
        &self.induced[i * self.n() + j]
    }

    pub fn by_label(&self, a: &str, b: &str) -> Option<&Scalar> {
        let i = self.labels.iter().position(|l| l == a)?;
        let j = self.labels.iter().position(|l| l == b)?;
        Some(self.get(i, j))
    }

    /// The induced matrix as a space (degenerate pairs allowed).
    pub fn as_space(&self) -> DistanceSpace {
        let points = PointSet::new(self.labels.clone()).expect("labels come from a valid space");
        let class = if self.is_metric { ClaimedClass::Metric } else { ClaimedClass::RawDistance };
        let options = SpaceOptions { allow_degenerate: true, ..SpaceOptions::default() };
        DistanceSpace::from_flat(points, self.induced.clone(), class, options).expect("shortest-path output is valid")
    }
}

/// All-pairs shortest paths by triple-loop relaxation, in place.
///
/// Exact inputs are put over a common denominator first so the relaxation runs
/// on integers.
pub fn shortest_paths(n: usize, w: &mut [Scalar]) {
    let Some((den, nums)) = common_denominator(w) else {
        relax(n, w, |a, b| a + b, |a, b| a.exact_cmp(b) == Ordering::Less);
        return;
    };
    let fits: Option<Vec<i128>> = nums.iter().map(|v| i64::try_from(v).ok().map(i128::from)).collect();
    let out: Vec<BigInt> = match fits {
        Some(mut m) => {
            relax(n, &mut m, |a, b| a + b, |a, b| a < b);
            m.into_iter().map(BigInt::from).collect()
        }
        None => {
            let mut m = nums;
            relax(n, &mut m, |a, b| a + b, |a, b| a < b);
            m
        }
    };
    for (slot, v) in w.iter_mut().zip(out) {
        *slot = Scalar::Exact(BigRational::new(v, den.clone()));
    }
}

fn relax<T>(n: usize, w: &mut [T], add: impl Fn(&T, &T) -> T, less: impl Fn(&T, &T) -> bool) {
    for k in 0..n {
        for i in 0..n {
            if i == k {
                continue;
            }
            for j in 0..n {
                let via = add(&w[i * n + k], &w[k * n + j]);
                if less(&via, &w[i * n + j]) {
                    w[i * n + j] = via;
                }
            }
        }
    }
}

/// Chain metric with exponent `p`, plus degeneracy and sandwich diagnostics.
///
/// The sandwich is checked in the frink-IV regime for `p = 1` and in the pS
/// regime otherwise; use [`verify_sandwich`] for another regime.
pub fn chain_metric(space: &DistanceSpace, p: &Exponent) -> Result<InducedMetricReport, ChainError> {
    let regime = if p.is_one() { Regime::FrinkIv } else { Regime::Ps { k: None } };
    chain_metric_with(space, p, regime)
}

pub fn chain_metric_with(space: &DistanceSpace, p: &Exponent, regime: Regime) -> Result<InducedMetricReport, ChainError> {
    let weighted = power_entrywise(space, p).map_err(|_| ChainError::ExponentRange(p.to_string()))?;
    let n = space.len();
    let mut induced = weighted.entries().to_vec();
    shortest_paths(n, &mut induced);
    let tol = space.tol();
    let zero = Scalar::zero();
    let mut degenerate_pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if induced[i * n + j].eq_tol(&zero, tol) {
                degenerate_pairs.push((i, j));
            }
        }
    }
    let mut report = InducedMetricReport {
        exponent: p.clone(),
        labels: space.labels().to_vec(),
        induced,
        is_metric: degenerate_pairs.is_empty(),
        degenerate_pairs,
        sandwich: SandwichReport {
            regime: regime.clone(),
            lower_factor: regime.lower_factor(),
            hypotheses: Hypotheses::Unverified(String::new()),
            verdict: SandwichVerdict::Pass,
            lower_failures: 0,
            upper_failures: 0,
            pairs: Vec::new(),
        },
        notes: Vec::new(),
    };
    report.sandwich = verify_sandwich(space, &report, regime);
    if !report.degenerate_pairs.is_empty() {
        report.notes.push(format!("{} distinct pairs at induced distance 0", report.degenerate_pairs.len()));
    }
    if report.sandwich.lower_failures > 0 {
        let worst = report
            .sandwich
            .pairs
            .iter()
            .filter(|v| !v.lower_ok)
            .min_by(|a, b| {
                let ra = a.d.to_f64() / a.upper.to_f64();
                let rb = b.d.to_f64() / b.upper.to_f64();
                ra.total_cmp(&rb)
            })
            .expect("at least one lower failure");
        report.notes.push(format!(
            "degeneracy trend: d({}, {}) = {} is below {} * D^p = {}; chains collapse as the carrier is refined",
            space.label(worst.i),
            space.label(worst.j),
            worst.d,
            report.sandwich.lower_factor,
            worst.lower
        ));
    }
    Ok(report)
}

/// Snowflake exponent `p = log 2 / log(2K)`, i.e. `(2K)^p = 2`.
///
/// Exact (`1/m`) when `2K = 2^m`; float otherwise.
pub fn snowflake_exponent(k: &Scalar) -> Result<Exponent, ChainError> {
    if k.exact_cmp(&Scalar::one()).is_lt() {
        return Err(ChainError::CoefficientBelowOne(k.to_string()));
    }
    if let Some(r) = k.as_rational() {
        let two_k = r * num_rational::BigRational::from_integer(2.into());
        if two_k.is_integer() {
            let m = two_k.numer();
            if m.bits() > 0 && m.trailing_zeros() == Some(m.bits() - 1) {
                return Ok(Exponent::ratio(1, (m.bits() - 1) as i64));
            }
        }
    }
    Ok(Exponent::Float(std::f64::consts::LN_2 / (2.0 * k.to_f64()).ln()))
}

/// Entrywise sandwich check for an induced metric.
///
/// The upper bound `d <= D^p` always applies. The lower bound only counts
/// as a failure when the regime's hypotheses hold.
pub fn verify_sandwich(space: &DistanceSpace, report: &InducedMetricReport, regime: Regime) -> SandwichReport {
    let p = &report.exponent;
    let tol = space.tol();
    let hypotheses = match &regime {
        Regime::FrinkIv => {
            if !p.is_one() {
                Hypotheses::Unmet(format!("frink-IV needs exponent 1, report has {p}"))
            } else {
                let iv = check_generalized_triangle(space, false);
                if iv.passed() {
                    Hypotheses::Met
                } else {
                    Hypotheses::Unmet(format!(
                        "space fails the generalized triangle inequality ({} violating triples)",
                        iv.violation_count
                    ))
                }
            }
        }
        Regime::Ps { k } => match min_b_coefficient(space) {
            Err(e) => Hypotheses::Unmet(e.to_string()),
            Ok(b) => {
                let k = k.clone().unwrap_or_else(|| b.k_min.clone());
                if k.cmp_tol(&b.k_min, tol).is_lt() {
                    Hypotheses::Unmet(format!("K = {k} is below K_min = {}", b.k_min))
                } else {
                    match snowflake_exponent(&k) {
                        Ok(pk) if p.as_scalar().le_tol(&pk.as_scalar(), tol) => Hypotheses::Met,
                        Ok(pk) => Hypotheses::Unmet(format!("p = {p} exceeds the snowflake exponent {pk} of K = {k}")),
                        Err(e) => Hypotheses::Unmet(e.to_string()),
                    }
                }
            }
        },
        Regime::Ain { beta } => {
            if !beta.eq_tol(p, tol) {
                Hypotheses::Unmet(format!("report exponent {p} differs from beta = {beta}"))
            } else {
                Hypotheses::Unverified("beta is caller-supplied; no formula ties it to K".into())
            }
        }
    };
    let factor = regime.lower_factor();
    let n = space.len();
    let mut pairs = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    let (mut lower_failures, mut upper_failures) = (0, 0);
    for i in 0..n {
        for j in i + 1..n {
            let upper = space.get(i, j).pow(p);
            let lower = &factor * &upper;
            let d = report.get(i, j).clone();
            let lower_ok = lower.le_tol(&d, tol);
            let upper_ok = d.le_tol(&upper, tol);
            lower_failures += usize::from(!lower_ok);
            upper_failures += usize::from(!upper_ok);
            pairs.push(PairVerdict { i, j, d, lower, upper, lower_ok, upper_ok });
        }
    }
    let verdict = if upper_failures > 0 || (lower_failures > 0 && hypotheses == Hypotheses::Met) {
        SandwichVerdict::Fail
    } else if lower_failures > 0 {
        SandwichVerdict::HypothesesUnmet
    } else {
        SandwichVerdict::Pass
    };
    SandwichReport { regime, lower_factor: factor, hypotheses, verdict, lower_failures, upper_failures, pairs }
}

/// Right-hand side of Frink's chain inequality for one chain
/// `x, x_1, …, x_k, y`: `2D(x,x_1) + 4Σ D(x_i,x_{i+1}) + 2D(x_k,y)`.
pub fn frink_chain_bound(space: &DistanceSpace, chain: &[usize]) -> Result<Scalar, ChainError> {
    if chain.len() < 3 {
        return Err(ChainError::EmptyChain);
    }
    let two = Scalar::int(2);
    let four = Scalar::int(4);
    let last = chain.len() - 1;
    let mut sum = &two * space.get(chain[0], chain[1]) + &two * space.get(chain[last - 1], chain[last]);
    for w in chain[1..last].windows(2) {
        sum = &sum + &(&four * space.get(w[0], w[1]));
    }
    Ok(sum)
}

/// Checks `D(x,y) <= 2D(x,x_1) + 4Σ D(x_i,x_{i+1}) + 2D(x_k,y)` over every
/// chain with `1 <= k <= max_chain_len` intermediate points (repeats allowed).
///
/// Exhaustive in effect: the minimal right-hand side per pair is found with
/// hop-bounded shortest paths, so no chain is sampled or skipped.
pub fn frink_chain_inequality_check(space: &DistanceSpace, max_chain_len: usize) -> Result<AuditReport, ChainError> {
    if max_chain_len == 0 {
        return Err(ChainError::EmptyChain);
    }
    let n = space.len();
    let tol = space.tol();
    let two = Scalar::int(2);
    let four = Scalar::int(4);
    let mut report = AuditReport::new(Axiom::FrinkChain);
    if !check_generalized_triangle(space, false).passed() {
        report.note("precondition unmet: the space fails the generalized triangle inequality");
    }

    // hops[h][u*n+v]: min weight of a walk u -> v with at most h edges, None = unreachable.
    // next[h][u*n+v]: first step of that walk when it uses an h-th edge.
    let mut hops: Vec<Vec<Option<Scalar>>> = Vec::with_capacity(max_chain_len);
    let mut next: Vec<Vec<Option<usize>>> = Vec::with_capacity(max_chain_len);
    hops.push((0..n * n).map(|k| (k / n == k % n).then(Scalar::zero)).collect());
    next.push(vec![None; n * n]);
    for h in 1..max_chain_len {
        let prev = &hops[h - 1];
        let mut cur = prev.clone();
        let mut nx = vec![None; n * n];
        for u in 0..n {
            for w in 0..n {
                if w == u {
                    continue;
                }
                let duw = space.get(u, w);
                for v in 0..n {
                    if let Some(rest) = &prev[w * n + v] {
                        let cand = duw + rest;
                        if cur[u * n + v].as_ref().is_none_or(|c| cand.exact_cmp(c).is_lt()) {
                            cur[u * n + v] = Some(cand);
                            nx[u * n + v] = Some(w);
                        }
                    }
                }
            }
        }
        hops.push(cur);
        next.push(nx);
    }
    let top = max_chain_len - 1;
    let inner = &hops[top];

    // head[x*n+k] = min over x1 of 2D(x,x1) + 4·inner(x1,k)
    let mut head: Vec<Option<(Scalar, usize)>> = vec![None; n * n];
    for x in 0..n {
        for x1 in 0..n {
            let lead = &two * space.get(x, x1);
            for k in 0..n {
                if let Some(w) = &inner[x1 * n + k] {
                    let cand = &lead + &(&four * w);
                    if head[x * n + k].as_ref().is_none_or(|(c, _)| cand.exact_cmp(c).is_lt()) {
                        head[x * n + k] = Some((cand, x1));
                    }
                }
            }
        }
    }
    for x in 0..n {
        for y in x + 1..n {
            let mut best: Option<(Scalar, usize)> = None;
            for k in 0..n {
                if let Some((h, _)) = &head[x * n + k] {
                    let cand = h + &(&two * space.get(k, y));
                    if best.as_ref().is_none_or(|(c, _)| cand.exact_cmp(c).is_lt()) {
                        best = Some((cand, k));
                    }
                }
            }
            let (rhs, k) = best.expect("complete graph: every pair reachable");
            let lhs = space.get(x, y);
            if lhs.cmp_tol(&rhs, tol).is_gt() {
                let x1 = head[x * n + k].as_ref().expect("set above").1;
                let mut chain = vec![x];
                chain.extend(walk(&next, n, top, x1, k));
                chain.push(y);
                report.record(Witness::new(space, chain, lhs.clone(), rhs));
            }
        }
    }
    Ok(report)
}

// Unwinds the hop table: `next[h]` records the first step whenever an
// h-th edge improved the walk.
fn walk(next: &[Vec<Option<usize>>], n: usize, top: usize, mut u: usize, v: usize) -> Vec<usize> {
    let mut out = vec![u];
    for h in (1..=top).rev() {
        if let Some(w) = next[h][u * n + v] {
            out.push(w);
            u = w;
        }
    }
    debug_assert_eq!(u, v);
    out
}

/// Frink's set-chain construction: sets joined when they share a point,
/// each set at level `n` weighing `1/2^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SetChainProblem {
    pub families: BallFamilies,
    pub a: usize,
    pub b: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SetChainResult {
    /// `None` when no chain joins the endpoints (the +∞ marker).
    #[serde(serialize_with = "serialize_distance")]
    pub distance: Option<Scalar>,
    /// `(level number, set index within the level)` along an optimal chain.
    pub chain: Vec<(u32, usize)>,
}

fn serialize_distance<S: Serializer>(d: &Option<Scalar>, serializer: S) -> Result<S::Ok, S::Error> {
    match d {
        Some(v) => v.serialize(serializer),
        None => serializer.serialize_str("inf"),
    }
}

/// Minimum of `Σ 1/2^{n_r}` over set chains from `a` to `b`: Dijkstra on
/// the set-incidence graph with node weights.
pub fn set_chain_distance(problem: &SetChainProblem) -> SetChainResult {
    let fam = &problem.families;
    let mut nodes: Vec<(u32, usize, &[usize])> = Vec::new();
    for li in 0..fam.level_count() {
        for (si, set) in fam.level(li).iter().enumerate() {
            nodes.push((fam.level_number(li), si, set));
        }
    }
    let mut by_point: Vec<Vec<usize>> = vec![Vec::new(); fam.n_points()];
    for (id, (_, _, set)) in nodes.iter().enumerate() {
        for &p in *set {
            by_point[p].push(id);
        }
    }
    // costs in units of 2^-top, so every weight is an integer
    let top = nodes.iter().map(|n| n.0).max().unwrap_or(0);
    let weights: Vec<BigUint> = nodes.iter().map(|n| BigUint::one() << (top - n.0)).collect();
    let mut dist: Vec<Option<BigUint>> = vec![None; nodes.len()];
    let mut prev: Vec<Option<usize>> = vec![None; nodes.len()];
    let mut done = vec![false; nodes.len()];
    let mut seen = vec![usize::MAX; nodes.len()];
    let mut heap = BinaryHeap::new();
    for &id in &by_point[problem.a] {
        dist[id] = Some(weights[id].clone());
        heap.push(Reverse((weights[id].clone(), id)));
    }
    let mut target = None;
    while let Some(Reverse((cost, node))) = heap.pop() {
        if done[node] {
            continue;
        }
        done[node] = true;
        if nodes[node].2.binary_search(&problem.b).is_ok() {
            target = Some((node, cost));
            break;
        }
        for &p in nodes[node].2 {
            for &nb in &by_point[p] {
                if done[nb] || seen[nb] == node {
                    continue;
                }
                seen[nb] = node;
                let cand = &cost + &weights[nb];
                if dist[nb].as_ref().is_none_or(|d| cand < *d) {
                    dist[nb] = Some(cand.clone());
                    prev[nb] = Some(node);
                    heap.push(Reverse((cand, nb)));
                }
            }
        }
    }
    match target {
        None => SetChainResult { distance: None, chain: Vec::new() },
        Some((node, cost)) => {
            let mut chain = vec![node];
            while let Some(p) = prev[*chain.last().expect("nonempty")] {
                chain.push(p);
            }
            chain.reverse();
            let cost = Scalar::Exact(BigRational::new(BigInt::from(cost), BigInt::one() << top));
            SetChainResult { distance: Some(cost), chain: chain.into_iter().map(|id| (nodes[id].0, nodes[id].1)).collect() }
        }
    }
}
