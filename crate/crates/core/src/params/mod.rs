//! Clinical parameter sets: loading, validation, perturbation and bias scaling.
//!
//! Parameter files are TOML. Diameter bins are keyed by their labels
//! (`"<30mm"`, `"30-35mm"`, ..., `">80mm"`), ages by integer year. The full
//! schema is documented in `docs/parameter-schema.md`.

mod file;
mod perturb;

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::DiameterBin;

pub use file::{load_parameters, parse_parameters, save_parameters, to_toml_string};
pub use perturb::{perturb_parameters, scale_rupture_bias, ParameterFamily, PerturbationSpec};

pub const SCHEMA_VERSION: u32 = 1;

/// Absolute tolerance on growth row sums.
pub const GROWTH_ROW_TOLERANCE: f64 = 1e-9;

/// The shipped illustrative parameter file. Values are non-clinical.
pub const ILLUSTRATIVE_TOML: &str = include_str!("../../data/illustrative.toml");

/// All model inputs, keyed by diameter bin and age.
///
/// `qaly_weight` must cover `start_age..=max_age` (the final age feeds the
/// terminal reward); the mortality maps cover `start_age..max_age`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSet {
    pub schema_version: u32,
    pub description: Option<String>,
    pub start_age: u32,
    pub max_age: u32,
    pub reach_hospital_prob: f64,
    pub rupture_prob: BTreeMap<DiameterBin, f64>,
    /// Sparse rows; an absent target bin has probability zero.
    pub growth: BTreeMap<DiameterBin, BTreeMap<DiameterBin, f64>>,
    pub qaly_weight: BTreeMap<u32, f64>,
    pub background_mortality: BTreeMap<u32, f64>,
    pub elective_mortality: BTreeMap<u32, f64>,
    pub emergency_mortality: BTreeMap<u32, f64>,
}

impl ParameterSet {
    pub fn illustrative() -> Self {
        parse_parameters(ILLUSTRATIVE_TOML).expect("shipped parameter file is valid")
    }

    /// SHA-256 of the canonical TOML serialisation.
    pub fn digest(&self) -> String {
        digest_bytes(to_toml_string(self).as_bytes())
    }
}

/// Lower-case hex SHA-256.
pub fn digest_bytes(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Rule {
    UnsupportedSchemaVersion { expected: u32 },
    InvalidHorizon,
    MissingEntry,
    NotFinite,
    OutOfRange { min: f64, max: f64 },
    Negative,
    RowSum { sum: f64 },
    Shrinkage,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::UnsupportedSchemaVersion { expected } => {
                write!(f, "unsupported schema version (expected {expected})")
            }
            Rule::InvalidHorizon => write!(f, "start_age must be below max_age"),
            Rule::MissingEntry => write!(f, "missing entry"),
            Rule::NotFinite => write!(f, "not a finite number"),
            Rule::OutOfRange { min, max } => write!(f, "outside [{min}, {max}]"),
            Rule::Negative => write!(f, "negative"),
            Rule::RowSum { sum } => write!(f, "row sums to {sum}, expected 1"),
            Rule::Shrinkage => write!(f, "mass on a smaller diameter bin"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    /// Dotted path, e.g. `background_mortality.119` or `growth.50-55mm.45-50mm`.
    pub path: String,
    pub value: Option<f64>,
    #[serde(flatten)]
    pub rule: Rule,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.value {
            Some(v) => write!(f, "{} = {v}: {}", self.path, self.rule),
            None => write!(f, "{}: {}", self.path, self.rule),
        }
    }
}

/// Every violated parameter invariant. Empty iff the set is valid.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, path: impl Into<String>, value: Option<f64>, rule: Rule) {
        self.violations.push(Violation {
            path: path.into(),
            value,
            rule,
        });
    }

    fn probability(&mut self, path: impl Into<String>, value: f64) {
        if !value.is_finite() {
            self.push(path, Some(value), Rule::NotFinite);
        } else if !(0.0..=1.0).contains(&value) {
            self.push(path, Some(value), Rule::OutOfRange { min: 0.0, max: 1.0 });
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "parameters are valid");
        }
        write!(f, "{} violation(s)", self.violations.len())?;
        for v in &self.violations {
            write!(f, "\n  - {v}")?;
        }
        Ok(())
    }
}

pub fn validate_parameters(params: &ParameterSet) -> ValidationReport {
    let mut report = ValidationReport::default();
    if params.schema_version != SCHEMA_VERSION {
        report.push(
            "schema_version",
            Some(params.schema_version as f64),
            Rule::UnsupportedSchemaVersion {
                expected: SCHEMA_VERSION,
            },
        );
    }
    if params.start_age >= params.max_age {
        report.push("horizon", None, Rule::InvalidHorizon);
        return report;
    }

    report.probability("reach_hospital_prob", params.reach_hospital_prob);

    for bin in DiameterBin::all() {
        match params.rupture_prob.get(&bin) {
            Some(&p) => report.probability(format!("rupture_prob.{bin}"), p),
            None => report.push(format!("rupture_prob.{bin}"), None, Rule::MissingEntry),
        }
    }

    for from in DiameterBin::all() {
        let Some(row) = params.growth.get(&from) else {
            report.push(format!("growth.{from}"), None, Rule::MissingEntry);
            continue;
        };
        let mut sum = 0.0;
        let mut finite = true;
        for (&to, &p) in row {
            let path = format!("growth.{from}.{to}");
            finite &= p.is_finite();
            report.probability(path.clone(), p);
            if to < from && p != 0.0 {
                report.push(path, Some(p), Rule::Shrinkage);
            }
            sum += p;
        }
        if finite && (sum - 1.0).abs() > GROWTH_ROW_TOLERANCE {
            report.push(format!("growth.{from}"), Some(sum), Rule::RowSum { sum });
        }
    }

    let decision_ages = params.start_age..params.max_age;
    for age in params.start_age..=params.max_age {
        match params.qaly_weight.get(&age) {
            Some(&c) if !c.is_finite() => {
                report.push(format!("qaly_weight.{age}"), Some(c), Rule::NotFinite)
            }
            Some(&c) if c < 0.0 => {
                report.push(format!("qaly_weight.{age}"), Some(c), Rule::Negative)
            }
            Some(_) => {}
            None => report.push(format!("qaly_weight.{age}"), None, Rule::MissingEntry),
        }
    }
    for (name, map) in [
        ("background_mortality", &params.background_mortality),
        ("elective_mortality", &params.elective_mortality),
        ("emergency_mortality", &params.emergency_mortality),
    ] {
        for age in decision_ages.clone() {
            match map.get(&age) {
                Some(&p) => report.probability(format!("{name}.{age}"), p),
                None => report.push(format!("{name}.{age}"), None, Rule::MissingEntry),
            }
        }
    }
    report
}

#[derive(Debug, Error)]
pub enum ParamError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("unknown diameter bin label(s): {}", .0.join(", "))]
    UnknownBins(Vec<String>),

    #[error("invalid parameters: {0}")]
    Invalid(ValidationReport),

    #[error("invalid perturbation spec: {0}")]
    InvalidSpec(String),

    #[error("replicate {replicate} outside 0..{replicates}")]
    ReplicateOutOfRange { replicate: usize, replicates: usize },

    #[error("bias factor must be finite and non-negative, got {0}")]
    InvalidFactor(f64),
}

/// Parses a comma-separated list of bin labels, reporting every unknown one.
pub fn parse_bins<'a>(
    labels: impl IntoIterator<Item = &'a str>,
) -> Result<Vec<DiameterBin>, ParamError> {
    let mut bins = Vec::new();
    let mut unknown = Vec::new();
    for label in labels.into_iter().map(str::trim).filter(|l| !l.is_empty()) {
        match label.parse::<DiameterBin>() {
            Ok(b) => bins.push(b),
            Err(_) => unknown.push(label.to_string()),
        }
    }
    if unknown.is_empty() {
        Ok(bins)
    } else {
        Err(ParamError::UnknownBins(unknown))
    }
}


#[cfg(test)]
mod tests {
    use super::testing::flat_parameters;
    use super::*;

    fn bin(s: &str) -> DiameterBin {
        s.parse().unwrap()
    }

    #[test]
    fn flat_and_illustrative_sets_are_valid() {
        let report = validate_parameters(&flat_parameters());
        assert!(report.is_valid(), "{report}");
        let report = validate_parameters(&ParameterSet::illustrative());
        assert!(report.is_valid(), "{report}");
    }

    #[test]
    fn rupture_above_one_is_a_range_violation() {
        let mut p = flat_parameters();
        p.rupture_prob.insert(bin(">80mm"), 1.2);
        let report = validate_parameters(&p);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].path, "rupture_prob.>80mm");
        assert!(matches!(report.violations[0].rule, Rule::OutOfRange { .. }));
    }

    #[test]
    fn shrinking_growth_row_flagged() {
        let mut p = flat_parameters();
        let row = p.growth.get_mut(&bin("50-55mm")).unwrap();
        row.insert(bin("50-55mm"), 0.6);
        row.insert(bin("45-50mm"), 0.1);
        let report = validate_parameters(&p);
        assert_eq!(report.violations.len(), 1, "{report}");
        assert_eq!(report.violations[0].rule, Rule::Shrinkage);
        assert_eq!(report.violations[0].path, "growth.50-55mm.45-50mm");
    }

    #[test]
    fn growth_row_sum_names_bin() {
        let mut p = flat_parameters();
        p.growth
            .get_mut(&bin("40-45mm"))
            .unwrap()
            .insert(bin("40-45mm"), 0.68);
        let report = validate_parameters(&p);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].path, "growth.40-45mm");
        assert!(
            matches!(report.violations[0].rule, Rule::RowSum { sum } if (sum - 0.98).abs() < 1e-12)
        );
    }

    #[test]
    fn missing_ages_reported_not_defaulted() {
        let mut p = flat_parameters();
        p.background_mortality.remove(&119);
        p.qaly_weight.remove(&120);
        let paths: Vec<_> = validate_parameters(&p)
            .violations
            .into_iter()
            .map(|v| v.path)
            .collect();
        assert_eq!(paths, vec!["qaly_weight.120", "background_mortality.119"]);
    }

    #[test]
    fn parse_bins_lists_unknown_labels() {
        assert_eq!(parse_bins("55-60mm, 60-65".split(',')).unwrap().len(), 2);
        match parse_bins(["55-60mm", "bogus", "61-66mm"]) {
            Err(ParamError::UnknownBins(u)) => assert_eq!(u, vec!["bogus", "61-66mm"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn digest_is_stable_hex() {
        let d = digest_bytes(b"abc");
        assert_eq!(
            d,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert_eq!(flat_parameters().digest(), flat_parameters().digest());
    }
}
