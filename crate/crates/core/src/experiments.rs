//! Parameter sweeps over the joint solver.

use serde::{Deserialize, Serialize};

use crate::admm::solve;
use crate::cluster::{build_affinity, spectral_cluster, AffinitySource};
use crate::error::{param_err, Result};
use crate::metrics::{evaluate, near_zero_fraction, EvalReport};
use crate::model::{ProblemInput, Scene, SolverConfig};

/// Entries of `C₁` below this magnitude count as zero.
pub const SPARSITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Lambda1,
    Lambda2,
    Lambda3,
}

impl SweepParam {
    pub fn apply(self, config: &SolverConfig, value: f64) -> SolverConfig {
        let mut c = *config;
        match self {
            Self::Lambda1 => c.lambda1 = value,
            Self::Lambda2 => c.lambda2 = value,
            Self::Lambda3 => c.lambda3 = value,
        }
        c
    }
}

impl std::str::FromStr for SweepParam {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lambda1" => Ok(Self::Lambda1),
            "lambda2" => Ok(Self::Lambda2),
            "lambda3" => Ok(Self::Lambda3),
            other => param_err(format!("unknown sweep parameter '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    /// Fraction of `C₁` entries with magnitude below [`SPARSITY_TOL`].
    pub sparsity: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Present when ground truth was supplied.
    pub report: Option<EvalReport>,
}

/// One joint solve per value, in the given order.
pub fn sweep(
    input: &ProblemInput,
    scene: Option<&Scene>,
    base: &SolverConfig,
    param: SweepParam,
    values: &[f64],
    k: usize,
    seed: u64,
) -> Result<Vec<SweepPoint>> {
    values
        .iter()
        .map(|&value| {
            let config = param.apply(base, value);
            let result = solve(input, &config)?;
            let report = match scene {
                Some(scene) => {
                    let aff = build_affinity(result.c1.as_ref(), AffinitySource::Trajectory)?;
                    let seg = spectral_cluster(&aff, k, seed)?;
                    Some(evaluate(
                        result.s.as_ref(),
                        scene.shapes_gt.as_ref(),
                        &seg.labels,
                        &scene.labels_gt,
                        k.max(scene.num_objects),
                    )?)
                }
                None => None,
            };
            Ok(SweepPoint {
                value,
                sparsity: near_zero_fraction(result.c1.as_ref(), SPARSITY_TOL),
                iterations: result.iterations,
                converged: result.converged,
                report,
            })
        })
        .collect()
}
