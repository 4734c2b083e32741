//! CSV and JSON encodings of distance spaces.
//!
//! CSV: the first row and first column hold labels; cells are decimal or
//! `p/q` literals. JSON: `{labels, entries, claimed_class, mode}`, where
//! exact entries are strings and float entries are numbers.

use serde::{Deserialize, Serialize};

use crate::scalar::{Mode, Scalar};
use crate::space::{ClaimedClass, DistanceSpace, PointSet, SpaceError, SpaceOptions};

pub fn space_to_csv(space: &DistanceSpace) -> String {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    let mut header = vec![String::new()];
    header.extend(space.labels().iter().cloned());
    w.write_record(&header).expect("in-memory write");
    for (i, row) in space.rows().into_iter().enumerate() {
        let mut rec = vec![space.label(i).to_string()];
        rec.extend(row.iter().map(Scalar::to_string));
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}

pub fn space_from_csv(
    text: &str,
    mode: Mode,
    claimed_class: ClaimedClass,
    options: SpaceOptions,
) -> Result<DistanceSpace, SpaceError> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut records = r.records();
    let header =
        records.next().ok_or_else(|| SpaceError::Parse("empty CSV".into()))?.map_err(|e| SpaceError::Parse(e.to_string()))?;
    let labels: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut grid = Vec::new();
    for (row_idx, rec) in records.enumerate() {
        let rec = rec.map_err(|e| SpaceError::Parse(e.to_string()))?;
        if rec.len() != labels.len() + 1 {
            return Err(SpaceError::Shape(format!(
                "row {} has {} cells, expected {}",
                row_idx + 1,
                rec.len().saturating_sub(1),
                labels.len()
            )));
        }
        let row_label = &rec[0];
        if labels.get(row_idx).map(String::as_str) != Some(row_label) {
            return Err(SpaceError::Parse(format!("row label `{row_label}` does not match column label at position {row_idx}")));
        }
        let row = rec
            .iter()
            .skip(1)
            .map(|cell| Scalar::parse(cell, mode).map_err(|e| SpaceError::Parse(e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        grid.push(row);
    }
    DistanceSpace::new(PointSet::new(labels)?, grid, claimed_class, options)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpaceJson {
    pub labels: Vec<String>,
    pub entries: Vec<Vec<Scalar>>,
    pub claimed_class: ClaimedClass,
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub allow_degenerate: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<Vec<f64>>>,
}

impl From<&DistanceSpace> for SpaceJson {
    fn from(space: &DistanceSpace) -> Self {
        SpaceJson {
            labels: space.labels().to_vec(),
            entries: space.rows(),
            claimed_class: space.claimed_class().clone(),
            mode: space.mode(),
            allow_degenerate: space.options().allow_degenerate,
            coords: space.points().coords().map(<[Vec<f64>]>::to_vec),
        }
    }
}

impl SpaceJson {
    /// Validates into a space; `mode` overrides the recorded mode if given.
    pub fn into_space(self, mode: Option<Mode>, tol: f64) -> Result<DistanceSpace, SpaceError> {
        let mode = mode.unwrap_or(self.mode);
        let mut points = PointSet::new(self.labels)?;
        if let Some(c) = self.coords {
            points = points.with_coords(c)?;
        }
        let grid = self.entries.into_iter().map(|r| r.into_iter().map(|s| s.to_mode(mode)).collect()).collect();
        let options = SpaceOptions { allow_degenerate: self.allow_degenerate, tol };
        DistanceSpace::new(points, grid, self.claimed_class, options)
    }
}

impl Serialize for DistanceSpace {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        SpaceJson::from(self).serialize(serializer)
    }
}

pub fn space_to_json(space: &DistanceSpace) -> String {
    serde_json::to_string_pretty(&SpaceJson::from(space)).expect("serializable")
}

pub fn space_from_json(text: &str, mode: Option<Mode>, tol: f64) -> Result<DistanceSpace, SpaceError> {
    let raw: SpaceJson = serde_json::from_str(text).map_err(|e| SpaceError::Parse(e.to_string()))?;
    raw.into_space(mode, tol)
}
