use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ParamError, ParameterSet};
use crate::model::DiameterBin;

/// Parameter families that can be perturbed independently.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParameterFamily {
    RuptureProb,
    Growth,
    QalyWeight,
    BackgroundMortality,
    ElectiveMortality,
    EmergencyMortality,
    ReachHospitalProb,
}

impl ParameterFamily {
    pub const ALL: [ParameterFamily; 7] = [
        ParameterFamily::RuptureProb,
        ParameterFamily::Growth,
        ParameterFamily::QalyWeight,
        ParameterFamily::BackgroundMortality,
        ParameterFamily::ElectiveMortality,
        ParameterFamily::EmergencyMortality,
        ParameterFamily::ReachHospitalProb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ParameterFamily::RuptureProb => "rupture_prob",
            ParameterFamily::Growth => "growth",
            ParameterFamily::QalyWeight => "qaly_weight",
            ParameterFamily::BackgroundMortality => "background_mortality",
            ParameterFamily::ElectiveMortality => "elective_mortality",
            ParameterFamily::EmergencyMortality => "emergency_mortality",
            ParameterFamily::ReachHospitalProb => "reach_hospital_prob",
        }
    }
}

impl fmt::Display for ParameterFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ParameterFamily {
    type Err = ParamError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ParameterFamily::ALL
            .into_iter()
            .find(|f| f.name() == s.trim())
            .ok_or_else(|| ParamError::InvalidSpec(format!("unknown parameter family {s:?}")))
    }
}

/// Relative half-widths per family, replicate count and seed.
///
/// Each perturbed value is drawn uniformly from
/// `[nominal·(1 − width), nominal·(1 + width)]` and clamped to its valid
/// range. Families without an entry are left untouched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub widths: BTreeMap<ParameterFamily, f64>,
    pub replicates: usize,
    pub seed: u64,
}

impl PerturbationSpec {
    pub fn new(replicates: usize, seed: u64) -> Self {
        Self {
            widths: BTreeMap::new(),
            replicates,
            seed,
        }
    }

    pub fn with_width(mut self, family: ParameterFamily, width: f64) -> Self {
        self.widths.insert(family, width);
        self
    }

    pub fn width(&self, family: ParameterFamily) -> f64 {
        self.widths.get(&family).copied().unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        if self.replicates == 0 {
            return Err(ParamError::InvalidSpec(
                "replicate count must be at least 1".into(),
            ));
        }
        for (family, width) in &self.widths {
            if !width.is_finite() || *width < 0.0 {
                return Err(ParamError::InvalidSpec(format!(
                    "width for {family} must be finite and non-negative, got {width}"
                )));
            }
        }
        Ok(())
    }

    /// Independent stream per replicate so replicates can be generated in
    /// any order or in parallel.
    fn rng(&self, replicate: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(replicate as u64);
        rng
    }
}

fn draw(rng: &mut ChaCha8Rng, nominal: f64, width: f64, max: f64) -> f64 {
    let u: f64 = rng.gen();
    let lo = nominal * (1.0 - width);
    let hi = nominal * (1.0 + width);
    (lo + (hi - lo) * u).clamp(0.0, max)
}

fn perturb_values<'a>(
    rng: &mut ChaCha8Rng,
    values: impl Iterator<Item = &'a mut f64>,
    width: f64,
    max: f64,
) {
    for v in values {
        *v = draw(rng, *v, width, max);
    }
}

/// Replicate `replicate` of the perturbation experiment.
///
/// A pure function of `(params, spec, replicate)`. Families are drawn in a
/// fixed order; within a family, in ascending bin or age order.
pub fn perturb_parameters(
    params: &ParameterSet,
    spec: &PerturbationSpec,
    replicate: usize,
) -> Result<ParameterSet, ParamError> {
    spec.validate()?;
    if replicate >= spec.replicates {
        return Err(ParamError::ReplicateOutOfRange {
            replicate,
            replicates: spec.replicates,
        });
    }
    let mut out = params.clone();
    let mut rng = spec.rng(replicate);

    for family in ParameterFamily::ALL {
        let width = spec.width(family);
        if width == 0.0 {
            continue;
        }
        match family {
            ParameterFamily::RuptureProb => {
                perturb_values(&mut rng, out.rupture_prob.values_mut(), width, 1.0)
            }
            ParameterFamily::Growth => {
                // Positive entries only, then renormalise; a row whose draws
                // all clamp to zero keeps its nominal value.
                for row in out.growth.values_mut() {
                    let nominal = row.clone();
                    perturb_values(&mut rng, row.values_mut().filter(|p| **p > 0.0), width, 1.0);
                    let sum: f64 = row.values().sum();
                    if sum > 0.0 {
                        row.values_mut().for_each(|p| *p /= sum);
                    } else {
                        *row = nominal;
                    }
                }
            }
            ParameterFamily::QalyWeight => {
                perturb_values(&mut rng, out.qaly_weight.values_mut(), width, f64::INFINITY)
            }
            ParameterFamily::BackgroundMortality => {
                perturb_values(&mut rng, out.background_mortality.values_mut(), width, 1.0)
            }
            ParameterFamily::ElectiveMortality => {
                perturb_values(&mut rng, out.elective_mortality.values_mut(), width, 1.0)
            }
            ParameterFamily::EmergencyMortality => {
                perturb_values(&mut rng, out.emergency_mortality.values_mut(), width, 1.0)
            }
            ParameterFamily::ReachHospitalProb => {
                out.reach_hospital_prob = draw(&mut rng, out.reach_hospital_prob, width, 1.0)
            }
        }
    }
    Ok(out)
}

/// Multiplies the rupture probability of each bin in `bins` by `factor`,
/// clamping at 1. Everything else is untouched.
pub fn scale_rupture_bias(
    params: &ParameterSet,
    factor: f64,
    bins: &[DiameterBin],
) -> Result<ParameterSet, ParamError> {
    if !factor.is_finite() || factor < 0.0 {
        return Err(ParamError::InvalidFactor(factor));
    }
    let mut out = params.clone();
    for bin in bins {
        if let Some(rho) = out.rupture_prob.get_mut(bin) {
            *rho = (*rho * factor).min(1.0);
        }
    }
    Ok(out)
}
