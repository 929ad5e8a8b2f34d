//! Result artifacts: policy grids, value and gain maps, perturbation ratio
//! maps, and the rupture-bias sweep.
//!
//! Every grid has one row per decision age and one column per diameter bin
//! (value maps additionally carry a leading `no-AAA` column). The `dead`
//! column is never exported.

mod grid;

use rayon::prelude::*;
use thiserror::Error;

use crate::mdp::{solve_backward_induction, MdpError, Policy, ValueFunction};
use crate::model::{
    build_process, AaaAction, AaaState, DiameterBin, ModelError, ModelOptions, NUM_STATES,
};
use crate::params::{
    perturb_parameters, scale_rupture_bias, ParamError, ParameterSet, PerturbationSpec,
};
use crate::scalar::Scalar;

pub use grid::{policy_from_grid_csv, GridKind, GridReport, Provenance};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("expected a {NUM_STATES}-state model, got {0} states")]
    NotAaaShaped(usize),

    #[error("value functions differ in horizon or state count")]
    Mismatched,

    #[error("policy is not total: {} missing entries", .0.len())]
    IncompletePolicy(Vec<(u32, usize)>),

    #[error("replicate {replicate}: {source}")]
    Replicate {
        replicate: usize,
        #[source]
        source: ModelError,
    },

    #[error("malformed policy grid: {0}")]
    MalformedGrid(String),

    #[error(transparent)]
    Model(#[from] ModelError),

    #[error(transparent)]
    Params(#[from] ParamError),

    #[error(transparent)]
    Mdp(#[from] MdpError),
}

fn diameter_labels() -> Vec<String> {
    DiameterBin::all().map(DiameterBin::label).collect()
}

/// Optimal policy and values for a parameter set.
pub fn solve_parameters(
    params: &ParameterSet,
    options: &ModelOptions,
) -> Result<(Policy, ValueFunction<f64>), ModelError> {
    let process = build_process::<f64>(params, options)?;
    Ok(solve_backward_induction(&process)?)
}

/// 1 where the policy operates, 0 where it continues surveillance.
pub fn policy_grid(policy: &Policy) -> Result<GridReport, AnalysisError> {
    if policy.num_states() != NUM_STATES {
        return Err(AnalysisError::NotAaaShaped(policy.num_states()));
    }
    let missing = policy.missing_entries();
    if !missing.is_empty() {
        return Err(AnalysisError::IncompletePolicy(missing));
    }
    let horizon = policy.horizon();
    let cells = horizon
        .decision_epochs()
        .map(|k| {
            DiameterBin::all()
                .map(|b| {
                    let operate =
                        policy.get(k, b.state_index()) == Some(AaaAction::PerformSurgery.index());
                    if operate {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    Ok(GridReport::new(
        GridKind::Policy,
        horizon.decision_epochs().collect(),
        diameter_labels(),
        cells,
    ))
}

/// Expected remaining QALYs for `no-AAA` and each diameter bin.
pub fn qaly_map<T: Scalar>(values: &ValueFunction<T>) -> Result<GridReport, AnalysisError> {
    if values.num_states() != NUM_STATES {
        return Err(AnalysisError::NotAaaShaped(values.num_states()));
    }
    let horizon = values.horizon();
    let columns: Vec<AaaState> = AaaState::all().filter(|s| *s != AaaState::Dead).collect();
    let cells = horizon
        .decision_epochs()
        .map(|k| {
            columns
                .iter()
                .map(|s| values.get(k, s.index()).to_f64_lossy())
                .collect()
        })
        .collect();
    Ok(GridReport::new(
        GridKind::Value,
        horizon.decision_epochs().collect(),
        columns.iter().map(|s| s.label()).collect(),
        cells,
    ))
}

/// `optimal − baseline` per age and diameter bin.
pub fn qaly_gain_map<T: Scalar>(
    optimal: &ValueFunction<T>,
    baseline: &ValueFunction<T>,
) -> Result<GridReport, AnalysisError> {
    if optimal.horizon() != baseline.horizon() || optimal.num_states() != baseline.num_states() {
        return Err(AnalysisError::Mismatched);
    }
    if optimal.num_states() != NUM_STATES {
        return Err(AnalysisError::NotAaaShaped(optimal.num_states()));
    }
    let horizon = optimal.horizon();
    let cells = horizon
        .decision_epochs()
        .map(|k| {
            DiameterBin::all()
                .map(|b| {
                    let i = b.state_index();
                    (optimal.get(k, i).clone() - baseline.get(k, i).clone()).to_f64_lossy()
                })
                .collect()
        })
        .collect();
    Ok(GridReport::new(
        GridKind::Gain,
        horizon.decision_epochs().collect(),
        diameter_labels(),
        cells,
    ))
}

/// Surgery indicator per (age offset, bin), flattened row-major.
fn surgery_indicators(policy: &Policy) -> Vec<u32> {
    policy
        .horizon()
        .decision_epochs()
        .flat_map(|k| {
            DiameterBin::all().map(move |b| {
                u32::from(policy.get(k, b.state_index()) == Some(AaaAction::PerformSurgery.index()))
            })
        })
        .collect()
}

/// Fraction of perturbed replicates whose optimal action is surgery.
///
/// Replicates run in parallel; counts are integers summed in replicate
/// order, so the grid does not depend on scheduling.
pub fn sensitivity_ratio(
    params: &ParameterSet,
    spec: &PerturbationSpec,
    options: &ModelOptions,
) -> Result<GridReport, AnalysisError> {
    spec.validate()?;
    let per_replicate: Vec<Result<Vec<u32>, AnalysisError>> = (0..spec.replicates)
        .into_par_iter()
        .map(|r| {
            let perturbed = perturb_parameters(params, spec, r)?;
            let (policy, _) = solve_parameters(&perturbed, options).map_err(|source| {
                AnalysisError::Replicate {
                    replicate: r,
                    source,
                }
            })?;
            Ok(surgery_indicators(&policy))
        })
        .collect();

    let rows: Vec<u32> = (params.start_age..params.max_age).collect();
    let mut counts = vec![0u32; rows.len() * DiameterBin::all().len()];
    for result in per_replicate {
        for (c, x) in counts.iter_mut().zip(result?) {
            *c += x;
        }
    }
    let n = spec.replicates as f64;
    let cells = counts
        .chunks(DiameterBin::all().len())
        .map(|row| row.iter().map(|&c| c as f64 / n).collect())
        .collect();
    let mut grid = GridReport::new(GridKind::Ratio, rows, diameter_labels(), cells);
    grid.provenance.seed = Some(spec.seed);
    grid.provenance.replicates = Some(spec.replicates);
    Ok(grid)
}

/// Optimal policy grid after scaling the rupture risk of `bins` by each factor.
pub fn bias_experiment(
    params: &ParameterSet,
    factors: &[f64],
    bins: &[DiameterBin],
    options: &ModelOptions,
) -> Result<Vec<(f64, GridReport)>, AnalysisError> {
    factors
        .iter()
        .map(|&factor| {
            let scaled = scale_rupture_bias(params, factor, bins)?;
            let (policy, _) = solve_parameters(&scaled, options)?;
            let mut grid = policy_grid(&policy)?;
            grid.provenance.bias_factor = Some(factor);
            Ok((factor, grid))
        })
        .collect()
}

/// Smallest bin marked for surgery in each row of a policy or ratio grid
/// (cells ≥ 0.5 count as surgery); `None` where the row has no surgery.
pub fn surgery_thresholds(grid: &GridReport) -> Vec<Option<DiameterBin>> {
    grid.cells
        .iter()
        .map(|row| {
            row.iter()
                .position(|&c| c >= 0.5)
                .and_then(DiameterBin::new)
        })
        .collect()
}

/// True if every row's surgery region is upward-closed in diameter.
pub fn is_threshold_form(grid: &GridReport) -> bool {
    grid.cells.iter().all(|row| {
        let first = row.iter().position(|&c| c >= 0.5).unwrap_or(row.len());
        row[first..].iter().all(|&c| c >= 0.5)
    })
}

/// Headline numbers for the optimal-versus-baseline comparison.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ComparisonSummary {
    pub max_gain: f64,
    pub argmax_age: u32,
    pub argmax_bin: String,
    pub differing_cells: usize,
}

impl std::fmt::Display for ComparisonSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "max_gain={} at age={} bin={}; policies differ in {} cells",
            self.max_gain, self.argmax_age, self.argmax_bin, self.differing_cells
        )
    }
}

/// Summarises a gain grid against the two policy grids it came from.
/// Ties in the maximum go to the earliest age, then smallest bin.
pub fn compare_summary(
    gain: &GridReport,
    optimal: &GridReport,
    baseline: &GridReport,
) -> ComparisonSummary {
    let mut best = (f64::NEG_INFINITY, 0, 0);
    for (r, row) in gain.cells.iter().enumerate() {
        for (c, &g) in row.iter().enumerate() {
            if g > best.0 {
                best = (g, r, c);
            }
        }
    }
    let differing_cells = optimal
        .cells
        .iter()
        .flatten()
        .zip(baseline.cells.iter().flatten())
        .filter(|(a, b)| a != b)
        .count();
    ComparisonSummary {
        max_gain: best.0,
        argmax_age: gain.row_labels[best.1],
        argmax_bin: gain.column_labels[best.2].clone(),
        differing_cells,
    }
}
