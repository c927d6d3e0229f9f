//! Candidate generation: random Gaussian points, the spectral relaxation
//! solution, and samples from the lifted semidefinite relaxation.
//!
//! Candidate `k` of a seeded method draws from the sub-seed `seed + k`, so
//! serial and parallel runs produce identical candidate sets.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::problem::QcqpProblem;
use crate::relax::{
    sample_from_lifted, sdr_bound_cutting_plane, spectral_bound, CuttingPlaneOptions, RelaxError,
    RelaxationResult,
};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuggestMethod {
    Random,
    Spectral,
    Sdr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuggestOutcome {
    /// Never empty.
    pub candidates: Vec<Vec<f64>>,
    pub bound: Option<RelaxationResult>,
    pub method: SuggestMethod,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SuggestError {
    #[error("candidate count must be at least 1")]
    ZeroCount,
    #[error("the spectral relaxation is unbounded below, so it yields no candidate")]
    DualUnbounded,
    #[error(transparent)]
    Relax(#[from] RelaxError),
}

/// `count` independent `N(0, scale²·I)` points.
pub fn suggest_random(
    problem: &QcqpProblem,
    count: usize,
    scale: f64,
    seed: u64,
) -> Result<SuggestOutcome, SuggestError> {
    if count == 0 {
        return Err(SuggestError::ZeroCount);
    }
    let n = problem.dim();
    let candidates = (0..count)
        .map(|k| {
            let mut r = rng::seeded(rng::sub_seed(seed, k));
            rng::normal_vec(&mut r, n).into_iter().map(|v| scale * v).collect()
        })
        .collect();
    Ok(SuggestOutcome {
        candidates,
        bound: None,
        method: SuggestMethod::Random,
    })
}

/// The minimizer of the spectral relaxation with weights `lambda` (all ones
/// by default), with the bound attached.
///
/// When the aggregated constraint is infeasible the problem is infeasible
/// too; the origin is returned as the candidate with bound `+∞` so that the
/// improve step still has a starting point.
pub fn suggest_spectral(
    problem: &QcqpProblem,
    lambda: Option<&[f64]>,
) -> Result<SuggestOutcome, SuggestError> {
    let ones;
    let lambda = match lambda {
        Some(l) => l,
        None => {
            ones = vec![1.0; problem.num_constraints()];
            &ones
        }
    };
    let result = spectral_bound(problem, lambda)?;
    let candidate = match &result.candidate {
        Some(x) => x.clone(),
        None if result.bound == f64::INFINITY => vec![0.0; problem.dim()],
        None => return Err(SuggestError::DualUnbounded),
    };
    Ok(SuggestOutcome {
        candidates: vec![candidate],
        bound: Some(result),
        method: SuggestMethod::Spectral,
    })
}

/// Gaussian samples from the cutting-plane approximation of the
/// semidefinite relaxation. When the lifted certificate is rank one within
/// `psd_tol`, its mean is returned `count` times.
pub fn suggest_sdr(
    problem: &QcqpProblem,
    count: usize,
    seed: u64,
    cp_opts: &CuttingPlaneOptions,
) -> Result<SuggestOutcome, SuggestError> {
    if count == 0 {
        return Err(SuggestError::ZeroCount);
    }
    let result = sdr_bound_cutting_plane(problem, cp_opts)?;
    let samples = sample_from_lifted(&result, count, seed)?;
    let candidates = if samples.spread <= cp_opts.psd_tol {
        let mean = result.candidate.clone().expect("cutting plane returns its point");
        vec![mean; count]
    } else {
        samples.points
    };
    Ok(SuggestOutcome {
        candidates,
        bound: Some(result),
        method: SuggestMethod::Sdr,
    })
}
