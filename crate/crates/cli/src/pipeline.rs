//! Suggest-and-improve runs over many candidates.

use std::time::{Duration, Instant};

use qcqp::improve::{ImproveError, ImproveMethod, ImproveReport, ImproveTag};
use qcqp::relax::{sdr_bound_cutting_plane, spectral_bound, CuttingPlaneOptions, RelaxationResult};
use qcqp::suggest::{suggest_random, suggest_sdr, suggest_spectral, SuggestError, SuggestMethod, SuggestOutcome};
use qcqp::{Assessment, QcqpProblem};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::timing::{cpu_seconds, Timings};

/// Settings of the cutting-plane relaxation that can be stored in a config.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CuttingPlaneConfig {
    pub max_rounds: usize,
    pub psd_tol: f64,
    pub max_cuts: Option<usize>,
    pub box_bound: Option<f64>,
}

impl Default for CuttingPlaneConfig {
    fn default() -> Self {
        let d = CuttingPlaneOptions::default();
        CuttingPlaneConfig {
            max_rounds: d.max_rounds,
            psd_tol: d.psd_tol,
            max_cuts: d.max_cuts,
            box_bound: d.box_bound,
        }
    }
}

impl CuttingPlaneConfig {
    pub fn options(&self) -> CuttingPlaneOptions {
        CuttingPlaneOptions {
            max_rounds: self.max_rounds,
            psd_tol: self.psd_tol,
            max_cuts: self.max_cuts,
            box_bound: self.box_bound,
            ..CuttingPlaneOptions::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuggestConfig {
    pub method: SuggestMethod,
    /// Standard deviation of random candidates.
    pub scale: f64,
    /// Spectral weights; all ones when absent.
    pub lambda: Option<Vec<f64>>,
    pub cutting_plane: CuttingPlaneConfig,
}

impl Default for SuggestConfig {
    fn default() -> Self {
        SuggestConfig {
            method: SuggestMethod::Random,
            scale: 1.0,
            lambda: None,
            cutting_plane: CuttingPlaneConfig::default(),
        }
    }
}

/// Caps applied to every improve call.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budgets {
    /// Upper bound on the sweeps or iterations of each iterative method.
    pub max_iter: Option<usize>,
    /// Wall-clock limit per candidate, checked between improve methods.
    pub time_limit_s: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundMethod {
    Spectral,
    Sdr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub suggest: SuggestConfig,
    pub improve: Vec<ImproveMethod>,
    pub candidates: usize,
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    pub parallelism: usize,
    pub budgets: Budgets,
    /// Bounds computed in addition to the one the suggest method yields.
    pub bounds: Vec<BoundMethod>,
    /// Record wall and CPU times. Off by default so that reports are
    /// reproducible byte for byte.
    pub timings: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            suggest: SuggestConfig::default(),
            improve: Vec::new(),
            candidates: 10,
            seed: 0,
            parallelism: 1,
            budgets: Budgets::default(),
            bounds: Vec::new(),
            timings: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub method: BoundMethod,
    #[serde(with = "extended_float")]
    pub bound: f64,
    pub valid: bool,
    pub converged: bool,
    #[serde(with = "extended_float_vec")]
    pub trace: Vec<f64>,
}

impl BoundReport {
    pub fn new(method: BoundMethod, r: &RelaxationResult) -> Self {
        BoundReport {
            method,
            bound: r.bound,
            valid: r.valid,
            converged: r.converged,
            trace: r.trace.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateReport {
    pub index: usize,
    pub start: Assessment,
    pub x: Vec<f64>,
    pub assessment: Assessment,
    pub iterations: usize,
    pub converged: bool,
    pub phase_trace: Vec<(f64, f64)>,
    /// Improve methods actually run, in order.
    pub methods: Vec<ImproveTag>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestPoint {
    pub candidate: usize,
    pub x: Vec<f64>,
    pub assessment: Assessment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub best: BestPoint,
    pub bounds: Vec<BoundReport>,
    /// Best objective minus the largest valid bound, when the best point is
    /// feasible within `1e-6`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
    pub candidates: Vec<CandidateReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("suggest failed: {0}")]
    Suggest(#[from] SuggestError),
    #[error("bound failed: {0}")]
    Bound(String),
    #[error("every candidate failed; first error: {0}")]
    AllFailed(String),
    #[error("cannot start worker pool: {0}")]
    Pool(String),
}

/// Feasibility tolerance used for the reported gap.
pub const GAP_FEAS_TOL: f64 = 1e-6;

fn capped(method: &ImproveMethod, cap: Option<usize>) -> ImproveMethod {
    let mut m = method.clone();
    if let Some(c) = cap {
        match &mut m {
            ImproveMethod::Round { .. } => {}
            ImproveMethod::CoordinateDescent(o) => o.max_sweeps = o.max_sweeps.min(c),
            ImproveMethod::Ccp(o) => o.max_iter = o.max_iter.min(c),
            ImproveMethod::Admm(o) | ImproveMethod::Convex(o) => o.max_iter = o.max_iter.min(c),
        }
    }
    m
}

/// Runs the improve sequence from one candidate. Later methods are skipped
/// once the time budget is spent; a failing method ends the sequence with
/// the point reached so far.
fn improve_candidate(problem: &QcqpProblem, index: usize, x0: &[f64], config: &PipelineConfig) -> CandidateReport {
    let wall = Instant::now();
    let cpu = cpu_seconds();
    let start = problem.assess_unchecked(x0);
    let deadline = config.budgets.time_limit_s.map(|s| wall + Duration::from_secs_f64(s.max(0.0)));
    let mut x = x0.to_vec();
    let mut iterations = 0;
    let mut converged = true;
    let mut phase_trace = Vec::new();
    let mut methods = Vec::new();
    let mut error = None;
    for m in &config.improve {
        if deadline.is_some_and(|d| Instant::now() >= d) {
            error = Some("time budget exhausted".to_string());
            converged = false;
            break;
        }
        let outcome = capped(m, config.budgets.max_iter).run(problem, &x);
        let report: ImproveReport = match outcome {
            Ok(r) => r,
            Err(ImproveError::Subsolver { reason, partial }) => {
                error = Some(reason);
                *partial
            }
            Err(e) => {
                error = Some(e.to_string());
                break;
            }
        };
        methods.push(report.method);
        iterations += report.iterations;
        converged &= report.converged;
        phase_trace.extend(report.phase_trace);
        x = report.x;
        if error.is_some() {
            break;
        }
    }
    let timings = config.timings.then(|| Timings::since(wall, cpu));
    CandidateReport {
        index,
        start,
        assessment: problem.assess_unchecked(&x),
        x,
        iterations,
        converged: converged && error.is_none(),
        phase_trace,
        methods,
        error,
        timings,
    }
}

pub fn suggest(problem: &QcqpProblem, config: &PipelineConfig) -> Result<SuggestOutcome, SuggestError> {
    let s = &config.suggest;
    match s.method {
        SuggestMethod::Random => suggest_random(problem, config.candidates, s.scale, config.seed),
        SuggestMethod::Spectral => suggest_spectral(problem, s.lambda.as_deref()),
        SuggestMethod::Sdr => suggest_sdr(problem, config.candidates, config.seed, &s.cutting_plane.options()),
    }
}

pub fn compute_bound(problem: &QcqpProblem, method: BoundMethod, config: &SuggestConfig) -> Result<BoundReport, PipelineError> {
    let r = match method {
        BoundMethod::Spectral => {
            let ones = vec![1.0; problem.num_constraints()];
            spectral_bound(problem, config.lambda.as_deref().unwrap_or(&ones))
        }
        BoundMethod::Sdr => sdr_bound_cutting_plane(problem, &config.cutting_plane.options()),
    }
    .map_err(|e| PipelineError::Bound(e.to_string()))?;
    Ok(BoundReport::new(method, &r))
}

/// Suggest, then improve every candidate in parallel and keep the
/// lexicographically best result. Candidate reports are merged by index,
/// so the outcome does not depend on the worker count.
pub fn run_pipeline(problem: &QcqpProblem, config: &PipelineConfig) -> Result<RunReport, PipelineError> {
    let wall = Instant::now();
    let cpu = cpu_seconds();
    let outcome = suggest(problem, config)?;
    let mut bounds = Vec::new();
    if let Some(b) = &outcome.bound {
        let method = match outcome.method {
            SuggestMethod::Sdr => BoundMethod::Sdr,
            _ => BoundMethod::Spectral,
        };
        bounds.push(BoundReport::new(method, b));
    }
    for &m in &config.bounds {
        if !bounds.iter().any(|b| b.method == m) {
            bounds.push(compute_bound(problem, m, &config.suggest)?);
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism)
        .build()
        .map_err(|e| PipelineError::Pool(e.to_string()))?;
    let candidates: Vec<CandidateReport> = pool.install(|| {
        outcome
            .candidates
            .par_iter()
            .enumerate()
            .map(|(i, x0)| improve_candidate(problem, i, x0, config))
            .collect()
    });

    // a candidate fails when its first improve method errors out
    let usable: Vec<&CandidateReport> = candidates.iter().filter(|c| c.error.is_none() || !c.methods.is_empty()).collect();
    if usable.is_empty() {
        let first = candidates.iter().find_map(|c| c.error.clone()).unwrap_or_default();
        return Err(PipelineError::AllFailed(first));
    }
    // ties go to the lower index
    let best = usable
        .iter()
        .min_by(|a, b| a.assessment.lex_cmp(&b.assessment).then(a.index.cmp(&b.index)))
        .expect("at least one candidate");
    let best = BestPoint {
        candidate: best.index,
        x: best.x.clone(),
        assessment: best.assessment,
    };
    let gap = if best.assessment.violation <= GAP_FEAS_TOL {
        bounds
            .iter()
            .filter(|b| b.valid && b.bound.is_finite())
            .map(|b| b.bound)
            .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
            .map(|lb| best.assessment.objective - lb)
    } else {
        None
    };
    Ok(RunReport {
        best,
        bounds,
        gap,
        candidates,
        timings: config.timings.then(|| Timings::since(wall, cpu)),
    })
}

/// JSON has no infinities; they are written as the strings `"inf"` and
/// `"-inf"`.
pub mod extended_float {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("not a number: {other}"))),
            },
        }
    }
}

pub mod extended_float_vec {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Wrap(#[serde(with = "super::extended_float")] f64);

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|&x| Wrap(x)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Ok(Vec::<Wrap>::deserialize(d)?.into_iter().map(|w| w.0).collect())
    }
}
