//! Browser demo: three small interactive views of the library, exposed to
//! JavaScript through `wasm-bindgen`. Every export returns a JSON string;
//! the plain Rust functions behind them are usable natively as well.

use qcqp::generators::{brute_force, generate, BruteMode, Family, InstanceSpec};
use qcqp::improve::{improve_coordinate_descent, CdOptions};
use qcqp::oneconstraint::Projector;
use qcqp::onevar::{feasible_set, minimize_over, OnevarOutcome};
use qcqp::relax::{sdr_bound_cutting_plane, CuttingPlaneOptions};
use qcqp::suggest::suggest_spectral;
use qcqp::QuadraticForm;
use serde::Serialize;
use wasm_bindgen::prelude::wasm_bindgen;

/// Largest instance the partitioning view enumerates exhaustively.
pub const MAX_BRUTE_N: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum OnevarView {
    Optimal { x: f64, f: f64, feasible: Vec<(f64, f64)> },
    Unbounded { feasible: Vec<(f64, f64)> },
    Infeasible,
    Error { message: String },
}

/// Minimizes `a x² + b x + c` subject to `p_k x² + q_k x + r_k ≤ 0`, with
/// the constraints given as a flat list of triples.
pub fn onevar_view(objective: &[f64], constraints: &[f64]) -> OnevarView {
    if objective.len() != 3 || constraints.len() % 3 != 0 || objective.iter().chain(constraints).any(|v| !v.is_finite()) {
        return OnevarView::Error {
            message: "expected three objective coefficients and finite constraint triples".into(),
        };
    }
    let cons: Vec<(f64, f64, f64)> = constraints.chunks(3).map(|c| (c[0], c[1], c[2])).collect();
    let set = feasible_set(&cons);
    let feasible = set.intervals().to_vec();
    match minimize_over((objective[0], objective[1], objective[2]), &set) {
        OnevarOutcome::Optimal { x, f } => OnevarView::Optimal { x, f, feasible },
        OnevarOutcome::Unbounded => OnevarView::Unbounded { feasible },
        OnevarOutcome::Infeasible => OnevarView::Infeasible,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectionView {
    pub x: Vec<f64>,
    pub nu: f64,
    pub distance: f64,
    pub kkt_residual: f64,
}

/// Projects `z` onto `{x : xᵀPx + qᵀx + r = 0}` (or `≤ 0` when `inequality`)
/// in the plane, with `P = [[p11, p12], [p12, p22]]`.
pub fn project_view(conic: &[f64], z: &[f64], inequality: bool) -> Result<ProjectionView, String> {
    let [p11, p12, p22, q1, q2, r] = conic else {
        return Err("expected p11, p12, p22, q1, q2, r".into());
    };
    if z.len() != 2 {
        return Err("expected a point in the plane".into());
    }
    let form = QuadraticForm::new(2, vec![(0, 0, *p11), (0, 1, *p12), (1, 1, *p22)], vec![*q1, *q2], *r)
        .map_err(|e| e.to_string())?;
    let proj = Projector::new(&form).map_err(|e| e.to_string())?;
    let res = if inequality { proj.project_ineq(z) } else { proj.project_eq(z) }.map_err(|e| e.to_string())?;
    let distance = res.x.iter().zip(z).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    Ok(ProjectionView {
        x: res.x,
        nu: res.nu,
        distance,
        kkt_residual: res.kkt_residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionView {
    pub n: usize,
    /// Weight matrix, row-major.
    pub weights: Vec<f64>,
    pub spectral_bound: f64,
    pub cutting_plane_bound: f64,
    pub cutting_plane_rounds: usize,
    pub cutting_plane_converged: bool,
    /// Sign pattern from the spectral candidate after coordinate descent.
    pub heuristic_x: Vec<f64>,
    pub heuristic_objective: f64,
    /// Exhaustive optimum, for `n ≤ MAX_BRUTE_N`.
    pub optimum: Option<f64>,
}

/// Random partitioning instance `min −xᵀWx, x ∈ {±1}ⁿ` with its spectral
/// and cutting-plane bounds and a spectral-then-coordinate-descent point.
pub fn partition_view(n: usize, seed: u64, max_rounds: usize) -> Result<PartitionView, String> {
    if !(2..=40).contains(&n) {
        return Err("n must be between 2 and 40".into());
    }
    let p = generate(&InstanceSpec::new(Family::Partitioning, n, seed)).map_err(|e| e.to_string())?;
    let w = p.objective().to_dense().scaled(-1.0);
    let weights = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| w[(i, j)]).collect();
    let spectral = suggest_spectral(&p, None).map_err(|e| e.to_string())?;
    let spectral_bound = spectral.bound.as_ref().map_or(f64::NEG_INFINITY, |b| b.bound);
    let cd = improve_coordinate_descent(&p, &spectral.candidates[0], &CdOptions::default()).map_err(|e| e.to_string())?;
    let cp = sdr_bound_cutting_plane(
        &p,
        &CuttingPlaneOptions {
            max_rounds,
            ..Default::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let optimum = if n <= MAX_BRUTE_N {
        Some(brute_force(&p, BruteMode::Boolean).map_err(|e| e.to_string())?.assessment.objective)
    } else {
        None
    };
    Ok(PartitionView {
        n,
        weights,
        spectral_bound,
        cutting_plane_bound: cp.bound,
        cutting_plane_rounds: cp.trace.len(),
        cutting_plane_converged: cp.converged,
        heuristic_x: cd.x,
        heuristic_objective: cd.assessment.objective,
        optimum,
    })
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).unwrap_or_else(|e| format!(r#"{{"error":"{e}"}}"#))
}

fn result_json<T: Serialize>(r: Result<T, String>) -> String {
    match r {
        Ok(v) => to_json(&v),
        Err(message) => to_json(&serde_json::json!({ "error": message })),
    }
}

#[wasm_bindgen]
pub fn onevar(objective: &[f64], constraints: &[f64]) -> String {
    to_json(&onevar_view(objective, constraints))
}

#[wasm_bindgen]
pub fn project(conic: &[f64], z: &[f64], inequality: bool) -> String {
    result_json(project_view(conic, z, inequality))
}

#[wasm_bindgen]
pub fn partition(n: usize, seed: u32, max_rounds: usize) -> String {
    result_json(partition_view(n, seed as u64, max_rounds))
}
