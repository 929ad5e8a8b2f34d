//! The abdominal aortic aneurysm surgery-timing model.
//!
//! Fourteen states: `dead`, `no-AAA` (never had one, or repaired), and twelve
//! 5 mm diameter bins from `<30mm` to `>80mm`. Two actions: continue
//! surveillance for a year, or perform elective repair. One epoch is one
//! year of age.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mdp::{
    ActionSet, DecisionProcess, Horizon, MdpError, Policy, StateSpace, TransitionMatrix,
};
use crate::params::{validate_parameters, ParameterSet, ValidationReport};
use crate::scalar::Scalar;

pub const NUM_BINS: usize = 12;
pub const NUM_STATES: usize = NUM_BINS + 2;
pub const DEAD: usize = 0;
pub const NO_AAA: usize = 1;

/// Quantised aneurysm diameter, 5 mm per bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DiameterBin(u8);

impl DiameterBin {
    pub fn new(index: usize) -> Option<Self> {
        (index < NUM_BINS).then_some(Self(index as u8))
    }

    pub fn all() -> impl DoubleEndedIterator<Item = DiameterBin> + ExactSizeIterator {
        (0..NUM_BINS as u8).map(DiameterBin)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// Index of this bin in the 14-state space.
    pub fn state_index(self) -> usize {
        self.index() + 2
    }

    pub fn from_state_index(state: usize) -> Option<Self> {
        state.checked_sub(2).and_then(Self::new)
    }

    /// Lower edge in millimetres; 0 for the `<30mm` bin.
    pub fn lower_mm(self) -> u32 {
        match self.0 {
            0 => 0,
            i => 25 + 5 * i as u32,
        }
    }

    pub fn label(self) -> String {
        match self.0 {
            0 => "<30mm".to_string(),
            11 => ">80mm".to_string(),
            _ => format!("{}-{}mm", self.lower_mm(), self.lower_mm() + 5),
        }
    }
}

impl fmt::Display for DiameterBin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

fn normalize_label(s: &str) -> String {
    s.chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| if c == '–' || c == '—' { '-' } else { c })
        .collect::<String>()
        .to_ascii_lowercase()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown state label {0:?}")]
pub struct UnknownLabel(pub String);

impl FromStr for DiameterBin {
    type Err = UnknownLabel;

    /// Accepts `30-35mm`, `30-35 mm`, `30-35`, `<30`, `>80 mm`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = normalize_label(s);
        let norm = norm.strip_suffix("mm").unwrap_or(&norm);
        DiameterBin::all()
            .find(|b| b.label().strip_suffix("mm") == Some(norm))
            .ok_or_else(|| UnknownLabel(s.to_string()))
    }
}

impl Serialize for DiameterBin {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.label())
    }
}

impl<'de> Deserialize<'de> for DiameterBin {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AaaState {
    Dead,
    NoAaa,
    Diameter(DiameterBin),
}

impl AaaState {
    /// All states in canonical order, dead first.
    pub fn all() -> impl Iterator<Item = AaaState> {
        [AaaState::Dead, AaaState::NoAaa]
            .into_iter()
            .chain(DiameterBin::all().map(AaaState::Diameter))
    }

    pub fn index(self) -> usize {
        match self {
            AaaState::Dead => DEAD,
            AaaState::NoAaa => NO_AAA,
            AaaState::Diameter(b) => b.state_index(),
        }
    }

    pub fn from_index(index: usize) -> Option<Self> {
        match index {
            DEAD => Some(AaaState::Dead),
            NO_AAA => Some(AaaState::NoAaa),
            i => DiameterBin::from_state_index(i).map(AaaState::Diameter),
        }
    }

    pub fn is_alive(self) -> bool {
        self != AaaState::Dead
    }

    pub fn label(self) -> String {
        match self {
            AaaState::Dead => "dead".to_string(),
            AaaState::NoAaa => "no-AAA".to_string(),
            AaaState::Diameter(b) => b.label(),
        }
    }
}

impl fmt::Display for AaaState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for AaaState {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match normalize_label(s).replace(['-', '_'], "").as_str() {
            "dead" => Ok(AaaState::Dead),
            "noaaa" => Ok(AaaState::NoAaa),
            _ => s.parse().map(AaaState::Diameter),
        }
    }
}

/// The two actions, surveillance first so exact ties favour it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AaaAction {
    ContinueSurveillance = 0,
    PerformSurgery = 1,
}

impl AaaAction {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        match index {
            0 => Some(AaaAction::ContinueSurveillance),
            1 => Some(AaaAction::PerformSurgery),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            AaaAction::ContinueSurveillance => "continue-surveillance",
            AaaAction::PerformSurgery => "perform-surgery",
        }
    }
}

pub fn state_space() -> StateSpace {
    StateSpace::new(AaaState::all().map(AaaState::label)).expect("static labels are valid")
}

pub fn action_set() -> ActionSet {
    ActionSet::new([
        AaaAction::ContinueSurveillance.label(),
        AaaAction::PerformSurgery.label(),
    ])
    .expect("static labels are valid")
}

/// Value credited at the final age.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalReward {
    /// `c(N)` for every alive state.
    #[default]
    Qaly,
    Zero,
}

impl FromStr for TerminalReward {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "qaly" => Ok(TerminalReward::Qaly),
            "zero" => Ok(TerminalReward::Zero),
            other => Err(format!(
                "unknown terminal reward {other:?} (expected qaly or zero)"
            )),
        }
    }
}

/// How the within-year events are composed into one transition row.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventComposition {
    /// Background death is resolved first for every alive patient under
    /// either action; rupture, repair and growth apply to survivors.
    #[default]
    BackgroundFirst,
    /// Rupture is resolved first and background death applies only to the
    /// non-rupture branch under surveillance. Elective repair carries its
    /// own mortality only, with no background death that year.
    RuptureFirst,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelOptions {
    pub terminal: TerminalReward,
    pub composition: EventComposition,
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid parameters: {0}")]
    InvalidParameters(ValidationReport),

    #[error("age {age} outside {start}..{end}")]
    AgeOutOfRange { age: u32, start: u32, end: u32 },

    #[error(transparent)]
    Mdp(#[from] MdpError),
}

fn ensure_valid(params: &ParameterSet) -> Result<(), ModelError> {
    let report = validate_parameters(params);
    if report.is_valid() {
        Ok(())
    } else {
        Err(ModelError::InvalidParameters(report))
    }
}

fn decision_age(params: &ParameterSet, age: u32) -> Result<(), ModelError> {
    if (params.start_age..params.max_age).contains(&age) {
        Ok(())
    } else {
        Err(ModelError::AgeOutOfRange {
            age,
            start: params.start_age,
            end: params.max_age,
        })
    }
}

/// Age-dependent inputs to one year's transition, lifted into `T`.
struct YearInputs<T> {
    background: T,
    elective: T,
    emergency: T,
    reach: T,
}

impl<T: Scalar> YearInputs<T> {
    fn new(params: &ParameterSet, age: u32) -> Self {
        Self {
            background: T::lift(params.background_mortality[&age]),
            elective: T::lift(params.elective_mortality[&age]),
            emergency: T::lift(params.emergency_mortality[&age]),
            reach: T::lift(params.reach_hospital_prob),
        }
    }
}

/// Rows shared by both actions: dead is absorbing, no-AAA only faces
/// background death.
fn base_matrix<T: Scalar>(background: &T) -> TransitionMatrix<T> {
    let mut m = TransitionMatrix::zeros(NUM_STATES);
    m.set(DEAD, DEAD, T::one());
    m.set(NO_AAA, DEAD, background.clone());
    m.set(NO_AAA, NO_AAA, T::one() - background.clone());
    m
}

fn surveillance_matrix<T: Scalar>(
    growth: &[Vec<T>],
    rupture: &[T],
    year: &YearInputs<T>,
    composition: EventComposition,
) -> TransitionMatrix<T> {
    let one = T::one();
    let mut m = base_matrix(&year.background);
    let repaired = year.reach.clone() * (one.clone() - year.emergency.clone());
    for bin in DiameterBin::all() {
        let d = bin.index();
        let rho = rupture[d].clone();
        let survive_background = one.clone() - year.background.clone();
        let (to_no_aaa, grow_mass) = match composition {
            EventComposition::BackgroundFirst => (
                survive_background.clone() * rho.clone() * repaired.clone(),
                survive_background * (one.clone() - rho.clone()),
            ),
            EventComposition::RuptureFirst => (
                rho.clone() * repaired.clone(),
                (one.clone() - rho.clone()) * survive_background,
            ),
        };
        let from = bin.state_index();
        let mut alive = T::zero();
        for (to, g) in growth[d].iter().enumerate() {
            if g.is_zero() {
                continue;
            }
            let p = grow_mass.clone() * g.clone();
            alive = alive + p.clone();
            m.set(from, to + 2, p);
        }
        alive = alive + to_no_aaa.clone();
        m.set(from, NO_AAA, to_no_aaa);
        // Rounding can push `alive` a few ulps past 1.
        let dead = if alive > one {
            T::zero()
        } else {
            one.clone() - alive
        };
        m.set(from, DEAD, dead);
    }
    m
}

fn surgery_matrix<T: Scalar>(
    year: &YearInputs<T>,
    composition: EventComposition,
) -> TransitionMatrix<T> {
    let one = T::one();
    let mut m = base_matrix(&year.background);
    let survive = match composition {
        EventComposition::BackgroundFirst => {
            (one.clone() - year.background.clone()) * (one.clone() - year.elective.clone())
        }
        EventComposition::RuptureFirst => one.clone() - year.elective.clone(),
    };
    for bin in DiameterBin::all() {
        let from = bin.state_index();
        m.set(from, NO_AAA, survive.clone());
        m.set(from, DEAD, one.clone() - survive.clone());
    }
    m
}

/// Growth rows are accepted within a tolerance of 1; each is rescaled to
/// sum to exactly 1 so no diameter state gains probability mass.
fn dense_growth<T: Scalar>(params: &ParameterSet) -> Vec<Vec<T>> {
    DiameterBin::all()
        .map(|from| {
            let row = &params.growth[&from];
            let dense: Vec<T> = DiameterBin::all()
                .map(|to| T::lift(row.get(&to).copied().unwrap_or(0.0)))
                .collect();
            let sum = dense.iter().fold(T::zero(), |acc, g| acc + g.clone());
            dense.into_iter().map(|g| g / sum.clone()).collect()
        })
        .collect()
}

fn dense_rupture<T: Scalar>(params: &ParameterSet) -> Vec<T> {
    DiameterBin::all()
        .map(|b| T::lift(params.rupture_prob[&b]))
        .collect()
}

/// Transition matrix under continued surveillance at `age`.
pub fn build_transition_surveillance<T: Scalar>(
    params: &ParameterSet,
    age: u32,
    options: &ModelOptions,
) -> Result<TransitionMatrix<T>, ModelError> {
    ensure_valid(params)?;
    decision_age(params, age)?;
    Ok(surveillance_matrix(
        &dense_growth(params),
        &dense_rupture(params),
        &YearInputs::new(params, age),
        options.composition,
    ))
}

/// Transition matrix under elective repair at `age`.
pub fn build_transition_surgery<T: Scalar>(
    params: &ParameterSet,
    age: u32,
    options: &ModelOptions,
) -> Result<TransitionMatrix<T>, ModelError> {
    ensure_valid(params)?;
    decision_age(params, age)?;
    Ok(surgery_matrix(
        &YearInputs::new(params, age),
        options.composition,
    ))
}

/// QALYs for one year spent in `state` at `age`: `c(age)` if alive, else 0.
pub fn reward(state: AaaState, age: u32, params: &ParameterSet) -> Result<f64, ModelError> {
    if !(params.start_age..=params.max_age).contains(&age) {
        return Err(ModelError::AgeOutOfRange {
            age,
            start: params.start_age,
            end: params.max_age,
        });
    }
    if !state.is_alive() {
        return Ok(0.0);
    }
    params
        .qaly_weight
        .get(&age)
        .copied()
        .ok_or_else(|| ModelError::InvalidParameters(validate_parameters(params)))
}

/// Assembles the full age-indexed decision process.
pub fn build_process<T: Scalar>(
    params: &ParameterSet,
    options: &ModelOptions,
) -> Result<DecisionProcess<T>, ModelError> {
    ensure_valid(params)?;
    let horizon = Horizon::new(params.start_age, params.max_age)?;
    let growth = dense_growth::<T>(params);
    let rupture = dense_rupture::<T>(params);

    let mut transitions = Vec::with_capacity(horizon.len());
    let mut rewards = Vec::with_capacity(horizon.len());
    for age in horizon.decision_epochs() {
        let year = YearInputs::new(params, age);
        transitions.push(vec![
            surveillance_matrix(&growth, &rupture, &year, options.composition),
            surgery_matrix(&year, options.composition),
        ]);
        let per_state: Vec<T> = AaaState::all()
            .map(|s| reward(s, age, params).map(T::lift))
            .collect::<Result<_, _>>()?;
        rewards.push(vec![per_state.clone(), per_state]);
    }

    let terminal = AaaState::all()
        .map(|s| match options.terminal {
            TerminalReward::Zero => Ok(T::zero()),
            TerminalReward::Qaly => reward(s, params.max_age, params).map(T::lift),
        })
        .collect::<Result<_, _>>()?;

    Ok(DecisionProcess::from_parts(
        state_space(),
        action_set(),
        horizon,
        transitions,
        rewards,
        terminal,
    ))
}

/// The 55 mm rule: operate on every bin from `55-60mm` up, at every age.
pub fn clinical_policy_55(horizon: Horizon) -> Policy {
    let actions: Vec<usize> = AaaState::all()
        .map(|s| match s {
            AaaState::Diameter(b) if b.lower_mm() >= 55 => AaaAction::PerformSurgery.index(),
            _ => AaaAction::ContinueSurveillance.index(),
        })
        .collect();
    Policy::stationary(horizon, &actions)
}
