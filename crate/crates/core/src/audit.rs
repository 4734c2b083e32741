//! Axiom audits on finite distance spaces.
//!
//! Every failing report carries witnesses that re-evaluate to genuine
//! violations. Witness lists are capped at [`MAX_WITNESSES`]; the full
//! number of violations is kept in `violation_count`.

use std::fmt;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::scalar::{scaled_integers, Scalar};
use crate::space::DistanceSpace;
use crate::threshold::{Threshold, ThresholdError};

pub const MAX_WITNESSES: usize = 64;

/// Budget for the ν-generalized audit: `n^(ν+2)` tuples, i.e. `n <= 40` at ν = 2.
pub const NU_AUDIT_BUDGET: u128 = 40u128.pow(4);

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Axiom {
    /// `D(x,y) = 0` iff `x = y`.
    Identity,
    Symmetry,
    Triangle,
    GeneralizedTriangle {
        strict: bool,
    },
    UniformRegularity,
    NuGeneralized(u32),
    BCoefficient,
    /// Alexandroff–Urysohn conditions (A), (B), (C).
    AuNesting,
    AuSeparation,
    AuNeighborhoods,
    FrinkChain,
    InducedContraction,
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axiom::Identity => write!(f, "I"),
            Axiom::Symmetry => write!(f, "II"),
            Axiom::Triangle => write!(f, "III"),
            Axiom::GeneralizedTriangle { strict: false } => write!(f, "IV"),
            Axiom::GeneralizedTriangle { strict: true } => write!(f, "IV-strict"),
            Axiom::UniformRegularity => write!(f, "V"),
            Axiom::NuGeneralized(nu) => write!(f, "nu-generalized({nu})"),
            Axiom::BCoefficient => write!(f, "b-coefficient"),
            Axiom::AuNesting => write!(f, "AU-A"),
            Axiom::AuSeparation => write!(f, "AU-B"),
            Axiom::AuNeighborhoods => write!(f, "AU-C"),
            Axiom::FrinkChain => write!(f, "frink-chain"),
            Axiom::InducedContraction => write!(f, "induced-contraction"),
        }
    }
}

impl Serialize for Axiom {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// Not machine-checkable; recorded as an assumption.
    Assumed,
}

/// A violating tuple: `lhs > rhs` for the audited inequality.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub points: Vec<String>,
    pub indices: Vec<usize>,
    pub lhs: Scalar,
    pub rhs: Scalar,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Witness {
    pub fn new(space: &DistanceSpace, indices: Vec<usize>, lhs: Scalar, rhs: Scalar) -> Self {
        let points = indices.iter().map(|&i| space.label(i).to_string()).collect();
        Witness { points, indices, lhs, rhs, detail: None }
    }

    /// Witness over an explicit label list, for audits without a space.
    pub fn from_labels(labels: &[String], indices: Vec<usize>, lhs: Scalar, rhs: Scalar) -> Self {
        let points = indices.iter().map(|&i| labels[i].clone()).collect();
        Witness { points, indices, lhs, rhs, detail: None }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub axiom: Axiom,
    pub verdict: Verdict,
    pub witnesses: Vec<Witness>,
    pub violation_count: usize,
    #[serde(rename = "K_min", skip_serializing_if = "Option::is_none")]
    pub k_min: Option<Scalar>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl AuditReport {
    pub fn new(axiom: Axiom) -> Self {
        AuditReport { axiom, verdict: Verdict::Pass, witnesses: Vec::new(), violation_count: 0, k_min: None, notes: Vec::new() }
    }

    pub fn assumed(axiom: Axiom, note: impl Into<String>) -> Self {
        let mut r = AuditReport::new(axiom);
        r.verdict = Verdict::Assumed;
        r.notes.push(note.into());
        r
    }

    pub fn record(&mut self, w: Witness) {
        self.record_with(|| w);
    }

    /// Like [`record`](Self::record), building the witness only while under the cap.
    pub fn record_with(&mut self, w: impl FnOnce() -> Witness) {
        self.verdict = Verdict::Fail;
        self.violation_count += 1;
        if self.witnesses.len() < MAX_WITNESSES {
            self.witnesses.push(w());
        }
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    pub fn passed(&self) -> bool {
        self.verdict != Verdict::Fail
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AuditError {
    #[error("degenerate space: zero distance between distinct points {0} and {1}")]
    Degenerate(String, String),
    #[error("audit refused: n = {n} is too large for nu = {nu} (n^(nu+2) exceeds the tuple budget)")]
    TooLarge { n: usize, nu: u32 },
    #[error("nu must be at least 1")]
    NuZero,
    #[error(transparent)]
    Threshold(#[from] ThresholdError),
    #[error("sequence lengths differ: {0}, {1}, {2}")]
    LengthMismatch(usize, usize, usize),
}

/// (I): distinct points at distance zero.
pub fn check_identity(space: &DistanceSpace) -> AuditReport {
    let mut r = AuditReport::new(Axiom::Identity);
    for (i, j) in space.zero_pairs() {
        r.record(Witness::new(space, vec![i, j], Scalar::zero(), Scalar::zero()).with_detail("zero distance"));
    }
    r
}

/// (II): symmetry. Constructed spaces are symmetric; this re-checks.
pub fn check_symmetry(space: &DistanceSpace) -> AuditReport {
    let mut r = AuditReport::new(Axiom::Symmetry);
    let n = space.len();
    for i in 0..n {
        for j in i + 1..n {
            if !space.get(i, j).eq_tol(space.get(j, i), space.tol()) {
                r.record(Witness::new(space, vec![i, j], space.get(i, j).clone(), space.get(j, i).clone()));
            }
        }
    }
    r
}

/// Triples `x != z`, `y ∉ {x, z}` flagged by an integer test, in the same
/// order as the scalar loops.
fn bad_triples(n: usize, bad: impl Fn(usize, usize, usize) -> bool) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for x in 0..n {
        for z in (0..n).filter(|&z| z != x) {
            out.extend((0..n).filter(|&y| y != x && y != z && bad(x, y, z)).map(|y| (x, y, z)));
        }
    }
    out
}

/// (III): `D(x,z) <= D(x,y) + D(y,z)` over all ordered triples.
pub fn check_triangle(space: &DistanceSpace) -> AuditReport {
    let mut r = AuditReport::new(Axiom::Triangle);
    let n = space.len();
    if let Some(m) = scaled_integers(space.entries()) {
        for (x, y, z) in bad_triples(n, |x, y, z| m[x * n + z] > m[x * n + y] + m[y * n + z]) {
            r.record_with(|| Witness::new(space, vec![x, y, z], space.get(x, z).clone(), space.get(x, y) + space.get(y, z)));
        }
        return r;
    }
    let tol = space.tol();
    for x in 0..n {
        for z in 0..n {
            if x == z {
                continue;
            }
            let lhs = space.get(x, z);
            for y in 0..n {
                if y == x || y == z {
                    continue;
                }
                let rhs = space.get(x, y) + space.get(y, z);
                if lhs.cmp_tol(&rhs, tol).is_gt() {
                    r.record(Witness::new(space, vec![x, y, z], lhs.clone(), rhs));
                }
            }
        }
    }
    r
}

/// Sharp b-metric coefficient of a finite space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BCoefficient {
    pub k_min: Scalar,
    /// A triple attaining the maximum ratio, if it exceeds 1.
    pub witness: Option<Witness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// `max D(x,z) / (D(x,y) + D(y,z))` over triples with `x != z`,
/// `y ∉ {x, z}`, floored at 1.
pub fn min_b_coefficient(space: &DistanceSpace) -> Result<BCoefficient, AuditError> {
    let n = space.len();
    if n < 3 {
        return Ok(BCoefficient {
            k_min: Scalar::one(),
            witness: None,
            note: Some(format!("n = {n} < 3: no triples, coefficient 1")),
        });
    }
    if let Some(&(i, j)) = space.zero_pairs().first() {
        return Err(AuditError::Degenerate(space.label(i).into(), space.label(j).into()));
    }
    // Track the best ratio as num/den to avoid divisions in the inner loop.
    let mut best: (Scalar, Scalar) = (Scalar::one(), Scalar::one());
    let mut arg: Option<[usize; 3]> = None;
    for x in 0..n {
        for z in x + 1..n {
            let num = space.get(x, z);
            for y in 0..n {
                if y == x || y == z {
                    continue;
                }
                let den = space.get(x, y) + space.get(y, z);
                if (num * &best.1).exact_cmp(&(&best.0 * &den)).is_gt() {
                    best = (num.clone(), den);
                    arg = Some([x, y, z]);
                }
            }
        }
    }
    let k_min = &best.0 / &best.1;
    let witness = arg.map(|t| Witness::new(space, t.to_vec(), best.0.clone(), best.1.clone()));
    Ok(BCoefficient { k_min, witness, note: None })
}

/// Report form of [`min_b_coefficient`]; passes when `claimed >= K_min`
/// (or always, when no coefficient is claimed).
pub fn check_b_coefficient(space: &DistanceSpace, claimed: Option<&Scalar>) -> Result<AuditReport, AuditError> {
    let b = min_b_coefficient(space)?;
    let mut r = AuditReport::new(Axiom::BCoefficient);
    if let Some(k) = claimed {
        if k.cmp_tol(&b.k_min, space.tol()).is_lt() {
            let w = b.witness.clone().expect("K_min > 1 has a witness");
            r.record(w.with_detail(format!("claimed K = {k} below K_min")));
        }
    }
    if let Some(note) = b.note {
        r.note(note);
    }
    r.k_min = Some(b.k_min);
    Ok(r)
}

/// (IV) in finite form: `D(x,z) <= 2·max(D(x,y), D(y,z))`.
///
/// With `strict`, the implication `D(x,y) < ε ∧ D(y,z) < ε ⇒ D(x,z) < 2ε`
/// is checked at every realized distance value `ε` of the space.
pub fn check_generalized_triangle(space: &DistanceSpace, strict: bool) -> AuditReport {
    let mut r = AuditReport::new(Axiom::GeneralizedTriangle { strict });
    let n = space.len();
    if !strict {
        if let Some(m) = scaled_integers(space.entries()) {
            let two = Scalar::int(2);
            for (x, y, z) in bad_triples(n, |x, y, z| m[x * n + z] > 2 * m[x * n + y].max(m[y * n + z])) {
                r.record_with(|| {
                    let rhs = &two * &space.get(x, y).max_of(space.get(y, z));
                    Witness::new(space, vec![x, y, z], space.get(x, z).clone(), rhs)
                });
            }
            return r;
        }
    }
    let tol = space.tol();
    let two = Scalar::int(2);
    let values = if strict { space.distinct_values() } else { Vec::new() };
    for x in 0..n {
        for z in 0..n {
            if x == z {
                continue;
            }
            let lhs = space.get(x, z);
            for y in 0..n {
                if y == x || y == z {
                    continue;
                }
                let legs = space.get(x, y).max_of(space.get(y, z));
                if strict {
                    // Smallest realized ε strictly above both legs.
                    let idx = values.partition_point(|v| v.cmp_tol(&legs, tol).is_le());
                    if let Some(eps) = values.get(idx) {
                        let rhs = &two * eps;
                        if !lhs.lt_tol(&rhs, tol) {
                            r.record(Witness::new(space, vec![x, y, z], lhs.clone(), rhs).with_detail(format!("eps = {eps}")));
                        }
                    }
                } else {
                    let rhs = &two * &legs;
                    if lhs.cmp_tol(&rhs, tol).is_gt() {
                        r.record(Witness::new(space, vec![x, y, z], lhs.clone(), rhs));
                    }
                }
            }
        }
    }
    r
}

/// (V) for a given `φ`: for every grid `ε`, `D(x,y) < φ(ε)` and
/// `D(y,z) < φ(ε)` imply `D(x,z) <= ε`. The default grid is the set of
/// distinct off-diagonal values.
pub fn check_uniform_regularity(
    space: &DistanceSpace,
    phi: &Threshold,
    eps_grid: Option<&[Scalar]>,
) -> Result<AuditReport, AuditError> {
    let owned;
    let grid = match eps_grid {
        Some(g) => g,
        None => {
            owned = space.distinct_values();
            &owned
        }
    };
    let mut r = AuditReport::new(Axiom::UniformRegularity);
    let n = space.len();
    let tol = space.tol();
    for eps in grid {
        let bound = phi.eval(eps)?;
        for y in 0..n {
            let near: Vec<usize> = (0..n).filter(|&x| space.get(y, x).lt_tol(&bound, tol)).collect();
            for &x in &near {
                for &z in &near {
                    if x == z || x == y || z == y {
                        continue;
                    }
                    let lhs = space.get(x, z);
                    if lhs.cmp_tol(eps, tol).is_gt() {
                        r.record(
                            Witness::new(space, vec![x, y, z], lhs.clone(), eps.clone())
                                .with_detail(format!("eps = {eps}, phi(eps) = {bound}")),
                        );
                    }
                }
            }
        }
    }
    Ok(r)
}

/// ν-generalized (Branciari) inequality: for all `x != y` and all ν
/// pairwise distinct points outside `{x, y}`,
/// `ρ(x,y) <= ρ(x,x_1) + … + ρ(x_ν,y)`.
pub fn check_nu_generalized(space: &DistanceSpace, nu: u32) -> Result<AuditReport, AuditError> {
    if nu == 0 {
        return Err(AuditError::NuZero);
    }
    let n = space.len();
    if (n as u128).saturating_pow(nu + 2) > NU_AUDIT_BUDGET {
        return Err(AuditError::TooLarge { n, nu });
    }
    let mut r = AuditReport::new(Axiom::NuGeneralized(nu));
    if n < nu as usize + 2 {
        r.note(format!("n = {n} < nu + 2: no admissible tuples, vacuous pass"));
        return Ok(r);
    }
    let tol = space.tol();
    for x in 0..n {
        for y in x + 1..n {
            let mut search = NuSearch { space, x, y, nu: nu as usize, best: None, path: Vec::new() };
            search.descend(x, Scalar::zero());
            let (sum, tuple) = search.best.expect("n >= nu + 2 guarantees a tuple");
            let lhs = space.get(x, y);
            if lhs.cmp_tol(&sum, tol).is_gt() {
                let mut idx = vec![x];
                idx.extend(tuple);
                idx.push(y);
                r.record(Witness::new(space, idx, lhs.clone(), sum));
            }
        }
    }
    Ok(r)
}

struct NuSearch<'a> {
    space: &'a DistanceSpace,
    x: usize,
    y: usize,
    nu: usize,
    best: Option<(Scalar, Vec<usize>)>,
    path: Vec<usize>,
}

impl NuSearch<'_> {
    fn descend(&mut self, at: usize, partial: Scalar) {
        if let Some((b, _)) = &self.best {
            if partial.exact_cmp(b).is_ge() {
                return;
            }
        }
        if self.path.len() == self.nu {
            let total = &partial + self.space.get(at, self.y);
            if self.best.as_ref().is_none_or(|(b, _)| total.exact_cmp(b).is_lt()) {
                self.best = Some((total, self.path.clone()));
            }
            return;
        }
        for next in 0..self.space.len() {
            if next == self.x || next == self.y || self.path.contains(&next) {
                continue;
            }
            let step = &partial + self.space.get(at, next);
            self.path.push(next);
            self.descend(next, step);
            self.path.pop();
        }
    }
}

/// Tail diagnostic for the coherence axiom on finite witness prefixes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoherenceDiagnostic {
    pub tail_len: usize,
    /// Maxima over the last quartile of ρ(a,a_n), ρ(a_n,b_n), ρ(a,b_n).
    pub tail_max: [f64; 3],
    pub tol: f64,
    pub floor: f64,
    pub flagged: bool,
    pub message: String,
}

pub const COHERENCE_TOL: f64 = 0.05;
pub const COHERENCE_FLOOR: f64 = 0.5;

/// Flags "coherence witness violated" when the first two tails fall below
/// `tol` while the third stays at or above `floor`. Reports trends only;
/// no limit is claimed.
pub fn coherence_tail_report(
    seq_aan: &[Scalar],
    seq_anbn: &[Scalar],
    seq_abn: &[Scalar],
    tol: f64,
    floor: f64,
) -> Result<CoherenceDiagnostic, AuditError> {
    let len = seq_aan.len();
    if seq_anbn.len() != len || seq_abn.len() != len || len == 0 {
        return Err(AuditError::LengthMismatch(seq_aan.len(), seq_anbn.len(), seq_abn.len()));
    }
    let tail_len = len.div_ceil(4);
    let tail = |s: &[Scalar]| s[len - tail_len..].iter().map(Scalar::to_f64).fold(f64::NEG_INFINITY, f64::max);
    let tail_max = [tail(seq_aan), tail(seq_anbn), tail(seq_abn)];
    let flagged = tail_max[0] < tol && tail_max[1] < tol && tail_max[2] >= floor;
    let message = if flagged {
        "coherence witness violated: rho(a,a_n) and rho(a_n,b_n) decay while rho(a,b_n) stays bounded away from 0".into()
    } else {
        "no coherence violation observed on this prefix".into()
    };
    Ok(CoherenceDiagnostic { tail_len, tail_max, tol, floor, flagged, message })
}
