//! Leveled families of point subsets.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FamiliesError {
    #[error("level {level}: set {set} is empty")]
    EmptySet { level: u32, set: usize },
    #[error("level {level}: set {set} references point {point} outside the point set")]
    OutOfRange { level: u32, set: usize, point: usize },
    #[error("level {level}: per-point set for point {point} does not contain it")]
    PerPointMissing { level: u32, point: usize },
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
}

/// Families `𝒢_n` for consecutive level numbers starting at `first_level`.
///
/// Sets are sorted, deduplicated point indices. `per_point[l][x]`, when
/// present, is the index within level `l` of the set attached to point `x`
/// (the `V_n(x)` and `U_n(a)` constructions); it always contains `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct BallFamilies {
    labels: Vec<String>,
    first_level: u32,
    levels: Vec<Vec<Vec<usize>>>,
    per_point: Option<Vec<Vec<usize>>>,
}

impl BallFamilies {
    pub fn new(
        labels: Vec<String>,
        first_level: u32,
        mut levels: Vec<Vec<Vec<usize>>>,
        per_point: Option<Vec<Vec<usize>>>,
    ) -> Result<Self, FamiliesError> {
        let n = labels.len();
        for (li, sets) in levels.iter_mut().enumerate() {
            let level = first_level + li as u32;
            for (si, set) in sets.iter_mut().enumerate() {
                set.sort_unstable();
                set.dedup();
                if set.is_empty() {
                    return Err(FamiliesError::EmptySet { level, set: si });
                }
                if let Some(&p) = set.iter().find(|&&p| p >= n) {
                    return Err(FamiliesError::OutOfRange { level, set: si, point: p });
                }
            }
        }
        if let Some(pp) = &per_point {
            for (li, row) in pp.iter().enumerate() {
                let level = first_level + li as u32;
                for (x, &si) in row.iter().enumerate() {
                    let ok = levels.get(li).and_then(|s| s.get(si)).is_some_and(|s| s.binary_search(&x).is_ok());
                    if !ok {
                        return Err(FamiliesError::PerPointMissing { level, point: x });
                    }
                }
            }
        }
        Ok(BallFamilies { labels, first_level, levels, per_point })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn n_points(&self) -> usize {
        self.labels.len()
    }

    pub fn first_level(&self) -> u32 {
        self.first_level
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    /// Level number of the `idx`-th stored level.
    pub fn level_number(&self, idx: usize) -> u32 {
        self.first_level + idx as u32
    }

    pub fn level(&self, idx: usize) -> &[Vec<usize>] {
        &self.levels[idx]
    }

    pub fn levels(&self) -> &[Vec<Vec<usize>>] {
        &self.levels
    }

    pub fn per_point(&self) -> Option<&[Vec<usize>]> {
        self.per_point.as_deref()
    }

    /// Whether some set at level index `idx` contains both points.
    pub fn co_resident(&self, idx: usize, a: usize, b: usize) -> bool {
        self.levels[idx].iter().any(|s| s.binary_search(&a).is_ok() && s.binary_search(&b).is_ok())
    }
}

/// Fixed-size bitset over point indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Bits(Vec<u64>);

impl Bits {
    pub fn from_indices(n: usize, idx: &[usize]) -> Bits {
        let mut b = Bits(vec![0; n.div_ceil(64).max(1)]);
        for &i in idx {
            b.0[i / 64] |= 1 << (i % 64);
        }
        b
    }

    pub fn union(&self, other: &Bits) -> Bits {
        Bits(self.0.iter().zip(&other.0).map(|(a, b)| a | b).collect())
    }

    pub fn is_subset(&self, other: &Bits) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a & !b == 0)
    }

    pub fn first_common(&self, other: &Bits) -> Option<usize> {
        self.0
            .iter()
            .zip(&other.0)
            .enumerate()
            .find_map(|(w, (a, b))| (a & b != 0).then(|| w * 64 + (a & b).trailing_zeros() as usize))
    }
}

#[derive(Serialize, Deserialize)]
struct FamiliesJson {
    labels: Vec<String>,
    first_level: u32,
    /// `levels[l][s]` is a list of point labels.
    levels: Vec<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    per_point: Option<Vec<Vec<usize>>>,
}

impl Serialize for BallFamilies {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        FamiliesJson {
            labels: self.labels.clone(),
            first_level: self.first_level,
            levels: self
                .levels
                .iter()
                .map(|sets| sets.iter().map(|s| s.iter().map(|&i| self.labels[i].clone()).collect()).collect())
                .collect(),
            per_point: self.per_point.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for BallFamilies {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = FamiliesJson::deserialize(deserializer)?;
        let index = |l: &String| raw.labels.iter().position(|x| x == l).ok_or_else(|| FamiliesError::UnknownLabel(l.clone()));
        let levels = raw
            .levels
            .iter()
            .map(|sets| sets.iter().map(|s| s.iter().map(index).collect::<Result<Vec<_>, _>>()).collect())
            .collect::<Result<Vec<Vec<_>>, _>>()
            .map_err(serde::de::Error::custom)?;
        BallFamilies::new(raw.labels.clone(), raw.first_level, levels, raw.per_point).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| i.to_string()).collect()
    }

    #[test]
    fn validation() {
        assert!(BallFamilies::new(labels(2), 1, vec![vec![vec![]]], None).is_err());
        assert!(BallFamilies::new(labels(2), 1, vec![vec![vec![2]]], None).is_err());
        assert!(BallFamilies::new(labels(2), 1, vec![vec![vec![0], vec![1]]], Some(vec![vec![1, 1]])).is_err());
        let f = BallFamilies::new(labels(2), 1, vec![vec![vec![1, 0, 1]]], Some(vec![vec![0, 0]])).unwrap();
        assert_eq!(f.level(0)[0], vec![0, 1]);
        assert!(f.co_resident(0, 0, 1));
    }

    #[test]
    fn json_roundtrip() {
        let f = BallFamilies::new(labels(3), 0, vec![vec![vec![0, 1], vec![2]], vec![vec![0], vec![1], vec![2]]], None).unwrap();
        let text = serde_json::to_string(&f).unwrap();
        let back: BallFamilies = serde_json::from_str(&text).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn bitset_ops() {
        let a = Bits::from_indices(130, &[1, 70, 129]);
        let b = Bits::from_indices(130, &[70]);
        assert!(b.is_subset(&a));
        assert!(!a.is_subset(&b));
        assert_eq!(a.first_common(&b), Some(70));
        assert!(a.union(&b) == a);
    }
}
