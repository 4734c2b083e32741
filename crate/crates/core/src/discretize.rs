//! Constructions turning a distance into a dyadic distance satisfying the
//! generalized triangle inequality, ready for [`crate::chain::chain_metric`].

use serde::Serialize;
use thiserror::Error;

use crate::audit::{check_generalized_triangle, check_nu_generalized, AuditError, AuditReport, Axiom, Witness};
use crate::families::{BallFamilies, Bits, FamiliesError};
use crate::scalar::Scalar;
use crate::space::{ClaimedClass, DistanceSpace, PointSet, SpaceError, SpaceOptions};
use crate::threshold::{LocalThreshold, Threshold, ThresholdError};

/// Hard cap on ladder length.
pub const MAX_LADDER: usize = 4096;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiscretizeError {
    #[error(transparent)]
    Threshold(#[from] ThresholdError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Families(#[from] FamiliesError),
    #[error(transparent)]
    Audit(#[from] AuditError),
    #[error("ladder did not reach the minimal positive distance {0} within {MAX_LADDER} rungs")]
    LadderTooLong(String),
    #[error("separation fails: `{0}` and `{1}` share a set at every level")]
    NotSeparated(String, String),
    #[error("input is not 2-generalized ({0} violating pairs)")]
    NotTwoGeneralized(usize),
    #[error("zero distance between distinct points `{0}` and `{1}`")]
    ZeroDistance(String, String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", content = "point", rename_all = "kebab-case")]
pub enum LadderGenerator {
    Global,
    PerPoint(String),
}

/// Radii `r_1 = 1 > r_2 > …` with `r_{n+1} <= r_n / 2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadiiLadder {
    pub values: Vec<Scalar>,
    pub generator: LadderGenerator,
}

impl RadiiLadder {
    fn build(
        generator: LadderGenerator,
        mut step: impl FnMut(&Scalar) -> Result<Scalar, ThresholdError>,
        mut done: impl FnMut(&[Scalar]) -> bool,
        floor: &Scalar,
    ) -> Result<RadiiLadder, DiscretizeError> {
        let mut values = vec![Scalar::one()];
        while !done(&values) {
            if values.len() >= MAX_LADDER {
                return Err(DiscretizeError::LadderTooLong(floor.to_string()));
            }
            let next = step(values.last().expect("nonempty"))?;
            values.push(next);
        }
        Ok(RadiiLadder { values, generator })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `ρ(x,y) = max(σ(x,y), σ(y,x))` for a possibly asymmetric `σ`.
pub fn symmetrize_f_distance(
    labels: Vec<String>,
    sigma: &[Vec<Scalar>],
    options: SpaceOptions,
) -> Result<DistanceSpace, DiscretizeError> {
    let n = labels.len();
    if sigma.len() != n || sigma.iter().any(|r| r.len() != n) {
        return Err(SpaceError::Shape(format!("sigma must be {n}x{n}")).into());
    }
    let grid = (0..n).map(|i| (0..n).map(|j| sigma[i][j].max_of(&sigma[j][i])).collect()).collect();
    Ok(DistanceSpace::new(PointSet::new(labels)?, grid, ClaimedClass::CfMetric, options)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ChittendenOptions {
    /// Divide the input by its maximum entry first when that maximum exceeds 1.
    pub rescale: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChittendenResult {
    pub ladder: RadiiLadder,
    pub space: DistanceSpace,
    /// Factor the input was multiplied by, when rescaled.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<Scalar>,
    /// Strict (V) at consecutive rungs, which is what the level assignment needs.
    pub precondition: AuditReport,
    /// Non-strict (IV) on the output.
    pub output_check: AuditReport,
}

/// Chittenden thresholding: with `ψ(ε) = min(φ(ε), ε/2)` and
/// `r_1 = 1, r_{n+1} = ψ(r_n)`, output `1` where `ρ >= r_1` and `1/2^n`
/// where `r_n > ρ >= r_{n+1}`.
///
/// The ladder stops at the first rung below the minimal positive distance.
pub fn chittenden_discretize(
    space: &DistanceSpace,
    phi: &Threshold,
    options: ChittendenOptions,
) -> Result<ChittendenResult, DiscretizeError> {
    let max = space.max_entry();
    let (input, scale) = if options.rescale && max.exact_cmp(&Scalar::one()).is_gt() {
        let s = &Scalar::one() / &max;
        (space.scaled(&s)?, Some(s))
    } else {
        (space.clone(), None)
    };
    // rescaling x -> s·x turns φ into ε -> s·φ(ε/s)
    let eval_phi = |eps: &Scalar| -> Result<Scalar, ThresholdError> {
        match &scale {
            None => phi.psi(eps),
            Some(s) => {
                let v = phi.eval(&(eps / s))?;
                Ok((s * &v).min_of(&(eps * &Scalar::ratio(1, 2))))
            }
        }
    };
    let tol = input.tol();
    let n = input.len();
    let floor = input.min_positive().unwrap_or_else(Scalar::one);
    let ladder =
        RadiiLadder::build(LadderGenerator::Global, eval_phi, |v| v.last().expect("nonempty").lt_tol(&floor, tol), &floor)?;
    let r = &ladder.values;

    let level = |rho: &Scalar| -> Scalar {
        if rho.is_zero() {
            return Scalar::zero();
        }
        // first k with rho >= r_{k+1}; the last rung is below every positive distance
        let k = r.iter().position(|rk| !rho.lt_tol(rk, tol)).expect("ladder ends below min positive");
        if k == 0 {
            Scalar::one()
        } else {
            Scalar::inv_pow2(k as u32)
        }
    };
    let grid: Vec<Vec<Scalar>> = (0..n).map(|i| (0..n).map(|j| level(input.get(i, j))).collect()).collect();
    let out = DistanceSpace::new(input.points().clone(), grid, ClaimedClass::RawDistance, input.options())?;

    let mut precondition = AuditReport::new(Axiom::UniformRegularity);
    precondition.note("checked strictly at consecutive rungs: legs below r_(j+1) force rho(x,z) < r_j");
    for j in 0..r.len().saturating_sub(1) {
        let (outer, inner) = (&r[j], &r[j + 1]);
        for y in 0..n {
            let near: Vec<usize> = (0..n).filter(|&x| x != y && input.get(y, x).lt_tol(inner, tol)).collect();
            for &x in &near {
                for &z in &near {
                    if x < z && !input.get(x, z).lt_tol(outer, tol) {
                        precondition.record(
                            Witness::new(&input, vec![x, y, z], input.get(x, z).clone(), outer.clone())
                                .with_detail(format!("legs below r_{} = {inner}", j + 2)),
                        );
                    }
                }
            }
        }
    }
    let output_check = check_generalized_triangle(&out, false);
    Ok(ChittendenResult { ladder, space: out, scale, precondition, output_check })
}

/// Checks (A) nesting and (B) separation; (C) is topological and only assumed.
pub fn check_au_conditions(families: &BallFamilies) -> [AuditReport; 3] {
    let n = families.n_points();
    let labels = families.labels();
    let bits: Vec<Vec<Bits>> =
        families.levels().iter().map(|sets| sets.iter().map(|s| Bits::from_indices(n, s)).collect()).collect();

    let mut a = AuditReport::new(Axiom::AuNesting);
    for l in 1..bits.len() {
        for i in 0..bits[l].len() {
            for j in i..bits[l].len() {
                let Some(common) = bits[l][i].first_common(&bits[l][j]) else {
                    continue;
                };
                let union = bits[l][i].union(&bits[l][j]);
                if bits[l - 1].iter().any(|g| union.is_subset(g)) {
                    continue;
                }
                let mut members: Vec<usize> = families.level(l)[i].clone();
                members.extend(&families.level(l)[j]);
                members.sort_unstable();
                members.dedup();
                let best = families
                    .level(l - 1)
                    .iter()
                    .map(|g| members.iter().filter(|p| g.binary_search(p).is_ok()).count())
                    .max()
                    .unwrap_or(0);
                a.record(
                    Witness::from_labels(labels, vec![common], Scalar::int(members.len() as i64), Scalar::int(best as i64))
                        .with_detail(format!(
                            "level {} sets #{i} and #{j} meet, but no level {} set holds their union (best covers {best} of {})",
                            families.level_number(l),
                            families.level_number(l - 1),
                            members.len()
                        )),
                );
            }
        }
    }

    let mut b = AuditReport::new(Axiom::AuSeparation);
    let total = families.level_count();
    for x in 0..n {
        for y in x + 1..n {
            if total > 0 && (0..total).all(|l| families.co_resident(l, x, y)) {
                b.record(
                    Witness::from_labels(labels, vec![x, y], Scalar::int(total as i64), Scalar::int(total as i64 - 1))
                        .with_detail("co-resident at every level"),
                );
            }
        }
    }
    let c = AuditReport::assumed(
        Axiom::AuNeighborhoods,
        "complete system of neighborhoods is topological and has no finite-data check",
    );
    [a, b, c]
}

/// `D(a,b) = 1/2^n` for the greatest level `n` with a set containing both,
/// `1` when no set does.
pub fn au_distance(families: &BallFamilies) -> Result<DistanceSpace, DiscretizeError> {
    let n = families.n_points();
    let total = families.level_count();
    let mut grid = vec![vec![Scalar::zero(); n]; n];
    for x in 0..n {
        for y in x + 1..n {
            if total > 0 && (0..total).all(|l| families.co_resident(l, x, y)) {
                let l = families.labels();
                return Err(DiscretizeError::NotSeparated(l[x].clone(), l[y].clone()));
            }
            let d = match (0..total).rev().find(|&l| families.co_resident(l, x, y)) {
                Some(l) => Scalar::inv_pow2(families.level_number(l)),
                None => Scalar::one(),
            };
            grid[x][y] = d.clone();
            grid[y][x] = d;
        }
    }
    Ok(DistanceSpace::new(PointSet::new(families.labels().to_vec())?, grid, ClaimedClass::RawDistance, SpaceOptions::default())?)
}

/// Niemytski–Wilson balls `V_n(x) = B(x, r_n(x))` for levels `1..=levels`,
/// with per-point ladders `r_{n+1}(x) = φ'(x, φ'(x, r_n(x)))` and
/// `φ'(a,ε) = min(φ(a,ε), ε/2)`.
pub fn nw_ball_families(
    space: &DistanceSpace,
    phi: &LocalThreshold,
    levels: usize,
) -> Result<(BallFamilies, Vec<RadiiLadder>), DiscretizeError> {
    let n = space.len();
    let tol = space.tol();
    let mut ladders = Vec::with_capacity(n);
    for x in 0..n {
        let t = phi.at(x);
        let ladder = RadiiLadder::build(
            LadderGenerator::PerPoint(space.label(x).to_string()),
            |eps| t.psi(&t.psi(eps)?),
            |v| v.len() >= levels,
            &Scalar::zero(),
        )?;
        ladders.push(ladder);
    }
    let sets: Vec<Vec<Vec<usize>>> = (0..levels)
        .map(|l| (0..n).map(|x| (0..n).filter(|&y| space.get(x, y).lt_tol(&ladders[x].values[l], tol)).collect()).collect())
        .collect();
    let per_point = Some(vec![(0..n).collect(); levels]);
    let fam = BallFamilies::new(space.labels().to_vec(), 1, sets, per_point)?;
    Ok((fam, ladders))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoGenResult {
    /// `U_m(a) = {x : ρ(a,x) < 1/3^m}` for `m = 0..=n_max`, attached per point.
    pub families: BallFamilies,
    pub space: DistanceSpace,
    /// `k(a,b)` per pair, row-major.
    pub k: Vec<u32>,
    pub output_check: AuditReport,
}

/// Discretization of a 2-generalized space by the balls `U_m(a)`.
///
/// `k(a,b) = min{n : {a,b} ⊄ U_m(y) for all y and all m >= n}` and
/// `D(a,b) = 1/2^k`. Balls shrink with `m`, so co-residence is antitone in
/// `m` and `k` is one past the greatest co-resident level (0 if none).
/// Past `n_max = ⌈log_3(1/ρ_min)⌉ + 1` every ball is a singleton, so
/// scanning `0..=n_max` suffices.
pub fn two_gen_discretize(space: &DistanceSpace) -> Result<TwoGenResult, DiscretizeError> {
    if let Some(&(i, j)) = space.zero_pairs().first() {
        return Err(DiscretizeError::ZeroDistance(space.label(i).into(), space.label(j).into()));
    }
    let nu = check_nu_generalized(space, 2)?;
    if !nu.passed() {
        return Err(DiscretizeError::NotTwoGeneralized(nu.violation_count));
    }
    let n = space.len();
    let tol = space.tol();
    let rho_min = space.min_positive().unwrap_or_else(Scalar::one);
    let mut n_max = 0u32;
    while rho_min.lt_tol(&Scalar::inv_pow3(n_max), tol) {
        n_max += 1;
    }
    n_max += 1;

    let balls: Vec<Vec<Vec<usize>>> = (0..=n_max)
        .map(|m| {
            let r = Scalar::inv_pow3(m);
            (0..n).map(|a| (0..n).filter(|&x| space.get(a, x).lt_tol(&r, tol)).collect()).collect()
        })
        .collect();
    let bits: Vec<Vec<Bits>> = balls.iter().map(|lv| lv.iter().map(|s| Bits::from_indices(n, s)).collect()).collect();

    let mut k = vec![0u32; n * n];
    let mut grid = vec![vec![Scalar::zero(); n]; n];
    for a in 0..n {
        for b in a + 1..n {
            let pair = Bits::from_indices(n, &[a, b]);
            let top = (0..=n_max as usize).rev().find(|&m| bits[m].iter().any(|u| pair.is_subset(u)));
            let kab = top.map_or(0, |m| m as u32 + 1);
            k[a * n + b] = kab;
            k[b * n + a] = kab;
            grid[a][b] = Scalar::inv_pow2(kab);
            grid[b][a] = Scalar::inv_pow2(kab);
        }
    }
    let out = DistanceSpace::new(space.points().clone(), grid, ClaimedClass::RawDistance, SpaceOptions::default())?;
    let families = BallFamilies::new(space.labels().to_vec(), 0, balls, Some(vec![(0..n).collect(); n_max as usize + 1]))?;
    let output_check = check_generalized_triangle(&out, false);
    Ok(TwoGenResult { families, space: out, k, output_check })
}
