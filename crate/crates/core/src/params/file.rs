use std::collections::BTreeMap;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{validate_parameters, ParamError, ParameterSet};
use crate::model::DiameterBin;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHorizon {
    start_age: u32,
    max_age: u32,
}

/// On-disk layout. Field order is the serialisation order.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParameterFile {
    schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    description: Option<String>,
    reach_hospital_prob: f64,
    horizon: RawHorizon,
    rupture_prob: IndexMap<String, f64>,
    growth: IndexMap<String, IndexMap<String, f64>>,
    qaly_weight: IndexMap<String, f64>,
    background_mortality: IndexMap<String, f64>,
    elective_mortality: IndexMap<String, f64>,
    emergency_mortality: IndexMap<String, f64>,
}

fn bin_key(family: &str, key: &str) -> Result<DiameterBin, ParamError> {
    key.parse()
        .map_err(|_| ParamError::Schema(format!("{family}: unknown diameter bin label {key:?}")))
}

fn bin_map(
    family: &str,
    raw: &IndexMap<String, f64>,
) -> Result<BTreeMap<DiameterBin, f64>, ParamError> {
    let mut out = BTreeMap::new();
    for (key, &value) in raw {
        let bin = bin_key(family, key)?;
        if out.insert(bin, value).is_some() {
            return Err(ParamError::Schema(format!(
                "{family}: bin {bin} listed twice"
            )));
        }
    }
    Ok(out)
}

fn age_map(family: &str, raw: &IndexMap<String, f64>) -> Result<BTreeMap<u32, f64>, ParamError> {
    let mut out = BTreeMap::new();
    for (key, &value) in raw {
        let age: u32 = key.trim().parse().map_err(|_| {
            ParamError::Schema(format!("{family}: age key {key:?} is not an integer year"))
        })?;
        if out.insert(age, value).is_some() {
            return Err(ParamError::Schema(format!(
                "{family}: age {age} listed twice"
            )));
        }
    }
    Ok(out)
}

impl TryFrom<RawParameterFile> for ParameterSet {
    type Error = ParamError;

    fn try_from(raw: RawParameterFile) -> Result<Self, ParamError> {
        let mut growth = BTreeMap::new();
        for (from, row) in &raw.growth {
            let from_bin = bin_key("growth", from)?;
            let row = bin_map(&format!("growth.{from}"), row)?;
            if growth.insert(from_bin, row).is_some() {
                return Err(ParamError::Schema(format!(
                    "growth: bin {from_bin} listed twice"
                )));
            }
        }
        Ok(ParameterSet {
            schema_version: raw.schema_version,
            description: raw.description,
            start_age: raw.horizon.start_age,
            max_age: raw.horizon.max_age,
            reach_hospital_prob: raw.reach_hospital_prob,
            rupture_prob: bin_map("rupture_prob", &raw.rupture_prob)?,
            growth,
            qaly_weight: age_map("qaly_weight", &raw.qaly_weight)?,
            background_mortality: age_map("background_mortality", &raw.background_mortality)?,
            elective_mortality: age_map("elective_mortality", &raw.elective_mortality)?,
            emergency_mortality: age_map("emergency_mortality", &raw.emergency_mortality)?,
        })
    }
}

impl From<&ParameterSet> for RawParameterFile {
    fn from(p: &ParameterSet) -> Self {
        let bins =
            |m: &BTreeMap<DiameterBin, f64>| m.iter().map(|(b, v)| (b.label(), *v)).collect();
        let ages = |m: &BTreeMap<u32, f64>| m.iter().map(|(a, v)| (a.to_string(), *v)).collect();
        RawParameterFile {
            schema_version: p.schema_version,
            description: p.description.clone(),
            reach_hospital_prob: p.reach_hospital_prob,
            horizon: RawHorizon {
                start_age: p.start_age,
                max_age: p.max_age,
            },
            rupture_prob: bins(&p.rupture_prob),
            growth: p
                .growth
                .iter()
                .map(|(b, row)| (b.label(), bins(row)))
                .collect(),
            qaly_weight: ages(&p.qaly_weight),
            background_mortality: ages(&p.background_mortality),
            elective_mortality: ages(&p.elective_mortality),
            emergency_mortality: ages(&p.emergency_mortality),
        }
    }
}

/// Parses and validates a parameter file's contents.
pub fn parse_parameters(text: &str) -> Result<ParameterSet, ParamError> {
    let raw: RawParameterFile =
        toml::from_str(text).map_err(|e| ParamError::Parse(e.to_string()))?;
    let params = ParameterSet::try_from(raw)?;
    let report = validate_parameters(&params);
    if report.is_valid() {
        Ok(params)
    } else {
        Err(ParamError::Invalid(report))
    }
}

pub fn load_parameters(path: impl AsRef<Path>) -> Result<ParameterSet, ParamError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ParamError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_parameters(&text)
}

/// Canonical TOML serialisation; reloads to an identical set.
pub fn to_toml_string(params: &ParameterSet) -> String {
    toml::to_string(&RawParameterFile::from(params)).expect("parameter sets always serialise")
}

pub fn save_parameters(params: &ParameterSet, path: impl AsRef<Path>) -> Result<(), ParamError> {
    let path = path.as_ref();
    std::fs::write(path, to_toml_string(params)).map_err(|source| ParamError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::super::testing::flat_parameters;
    use super::super::{Rule, ILLUSTRATIVE_TOML};
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn shipped_file_loads() {
        let p = parse_parameters(ILLUSTRATIVE_TOML).unwrap();
        assert_eq!((p.start_age, p.max_age), (65, 120));
    }

    #[test]
    fn missing_age_names_the_age() {
        let mut raw: RawParameterFile = toml::from_str(ILLUSTRATIVE_TOML).unwrap();
        raw.background_mortality.shift_remove("119");
        let edited = toml::to_string(&raw).unwrap();
        match parse_parameters(&edited) {
            Err(ParamError::Invalid(report)) => {
                assert_eq!(report.violations.len(), 1);
                assert_eq!(report.violations[0].path, "background_mortality.119");
                assert_eq!(report.violations[0].rule, Rule::MissingEntry);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn short_growth_row_names_the_bin() {
        let mut raw: RawParameterFile = toml::from_str(ILLUSTRATIVE_TOML).unwrap();
        let row = raw.growth.get_mut("45-50mm").unwrap();
        *row.get_mut("45-50mm").unwrap() -= 0.02;
        match parse_parameters(&toml::to_string(&raw).unwrap()) {
            Err(ParamError::Invalid(report)) => {
                assert_eq!(report.violations[0].path, "growth.45-50mm");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_position() {
        let err =
            parse_parameters("schema_version = 1\nreach_hospital_prob = = 0.5\n").unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, ParamError::Parse(_)));
        assert!(msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn schema_errors() {
        let err = parse_parameters("schema_version = 1\n").unwrap_err();
        assert!(
            matches!(err, ParamError::Parse(ref m) if m.contains("missing field")),
            "{err}"
        );
        let text = ILLUSTRATIVE_TOML.replacen("\"<30mm\" =", "\"<25mm\" =", 1);
        assert!(matches!(
            parse_parameters(&text),
            Err(ParamError::Schema(_))
        ));
    }

    #[test]
    fn file_round_trip() {
        let p = ParameterSet::illustrative();
        let dir = std::env::temp_dir().join(format!("aaa-mdp-roundtrip-{}", std::process::id()));
        save_parameters(&p, &dir).unwrap();
        let q = load_parameters(&dir).unwrap();
        std::fs::remove_file(&dir).ok();
        assert_eq!(p, q);
    }

    proptest! {
        #[test]
        fn round_trip_preserves_values(
            reach in 0.0f64..=1.0,
            rupture in proptest::collection::vec(0.0f64..=1.0, 12),
            qaly in 0.0f64..2.0,
            beta in 0.0f64..=1.0,
        ) {
            let mut p = flat_parameters();
            p.reach_hospital_prob = reach;
            for (b, r) in DiameterBin::all().zip(&rupture) {
                p.rupture_prob.insert(b, *r);
            }
            p.qaly_weight.insert(90, qaly);
            p.background_mortality.insert(100, beta);
            let q = parse_parameters(&to_toml_string(&p)).unwrap();
            prop_assert_eq!(p, q);
        }
    }
}
