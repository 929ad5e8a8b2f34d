use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::mdp::{Horizon, Policy};
use crate::model::{AaaAction, DiameterBin, DEAD, NO_AAA, NUM_STATES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    Policy,
    Value,
    Gain,
    Ratio,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: Option<u64>,
    pub replicates: Option<usize>,
    pub parameter_digest: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias_factor: Option<f64>,
}

/// Age × column matrix backing one exported figure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub kind: GridKind,
    #[serde(rename = "ages")]
    pub row_labels: Vec<u32>,
    #[serde(rename = "columns")]
    pub column_labels: Vec<String>,
    pub cells: Vec<Vec<f64>>,
    pub provenance: Provenance,
}

impl GridReport {
    pub fn new(
        kind: GridKind,
        row_labels: Vec<u32>,
        column_labels: Vec<String>,
        cells: Vec<Vec<f64>>,
    ) -> Self {
        debug_assert_eq!(row_labels.len(), cells.len());
        debug_assert!(cells.iter().all(|r| r.len() == column_labels.len()));
        Self {
            kind,
            row_labels,
            column_labels,
            cells,
            provenance: Provenance::default(),
        }
    }

    pub fn with_digest(mut self, digest: impl Into<String>) -> Self {
        self.provenance.parameter_digest = Some(digest.into());
        self
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.row_labels.len(), self.column_labels.len())
    }

    /// Header `age,<labels>`; one line per age. Floats use the shortest
    /// representation that round-trips, so output is byte-stable.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("age");
        for label in &self.column_labels {
            out.push(',');
            out.push_str(label);
        }
        out.push('\n');
        for (age, row) in self.row_labels.iter().zip(&self.cells) {
            write!(out, "{age}").unwrap();
            for cell in row {
                write!(out, ",{cell}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("grid serialises");
        s.push('\n');
        s
    }

    /// Ages downward, diameters rightward. Policy grids use `#` for surgery
    /// and `.` for surveillance; ratio grids print the tenths digit.
    pub fn to_ascii(&self) -> String {
        let mut out = String::from("age  ");
        for label in &self.column_labels {
            write!(out, "{:>8}", label).unwrap();
        }
        out.push('\n');
        for (age, row) in self.row_labels.iter().zip(&self.cells) {
            write!(out, "{age:<5}").unwrap();
            for &cell in row {
                let glyph = match self.kind {
                    GridKind::Policy => {
                        if cell >= 0.5 {
                            "#".to_string()
                        } else {
                            ".".to_string()
                        }
                    }
                    GridKind::Ratio => match cell {
                        c if c <= 0.0 => ".".to_string(),
                        c if c >= 1.0 => "#".to_string(),
                        c => ((c * 10.0).floor() as u32).min(9).to_string(),
                    },
                    GridKind::Value | GridKind::Gain => format!("{cell:.2}"),
                };
                write!(out, "{glyph:>8}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Reads a policy from the policy-grid CSV layout (0 = surveillance,
/// 1 = surgery). `dead` and `no-AAA` are always surveillance.
///
/// A blank cell or an absent age row is a missing entry; all missing
/// entries are reported together.
pub fn policy_from_grid_csv(text: &str, horizon: Horizon) -> Result<Policy, AnalysisError> {
    let malformed = |msg: String| AnalysisError::MalformedGrid(msg);
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| malformed("empty file".into()))?;
    let mut columns = header.split(',').map(str::trim);
    if columns.next() != Some("age") {
        return Err(malformed("first header column must be `age`".into()));
    }
    let bins: Vec<DiameterBin> = columns
        .map(|label| {
            label
                .parse::<DiameterBin>()
                .map_err(|_| malformed(format!("unknown column {label:?}")))
        })
        .collect::<Result<_, _>>()?;

    let mut policy = Policy::empty(horizon, NUM_STATES);
    for k in horizon.decision_epochs() {
        policy.set(k, DEAD, AaaAction::ContinueSurveillance.index());
        policy.set(k, NO_AAA, AaaAction::ContinueSurveillance.index());
    }
    for (n, line) in lines.enumerate() {
        let line_no = n + 2;
        let mut fields = line.split(',').map(str::trim);
        let age_field = fields.next().unwrap_or_default();
        let age: u32 = age_field
            .parse()
            .map_err(|_| malformed(format!("line {line_no}: bad age {age_field:?}")))?;
        if !horizon.contains_decision(age) {
            return Err(malformed(format!(
                "line {line_no}: age {age} outside {}..{}",
                horizon.start(),
                horizon.end()
            )));
        }
        for (bin, field) in bins.iter().zip(fields.by_ref()) {
            if field.is_empty() {
                continue;
            }
            let action = match field.parse::<f64>() {
                Ok(0.0) => AaaAction::ContinueSurveillance,
                Ok(1.0) => AaaAction::PerformSurgery,
                _ => {
                    return Err(malformed(format!(
                        "line {line_no}: cell {field:?} is not 0 or 1"
                    )))
                }
            };
            policy.set(age, bin.state_index(), action.index());
        }
        if fields.next().is_some() {
            return Err(malformed(format!(
                "line {line_no}: more cells than columns"
            )));
        }
    }
    let missing = policy.missing_entries();
    if missing.is_empty() {
        Ok(policy)
    } else {
        Err(AnalysisError::IncompletePolicy(missing))
    }
}
