//! Local improvement of candidate points.
//!
//! Every method here honours the same contract: the returned point is never
//! worse than the input in the `(violation, objective)` lexicographic order.
//! Methods track their best iterate under a tolerant order and fall back to
//! the input when that iterate is not exactly no worse.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{factor_spd, min_eig_bound, EigBoundMode, Mat, SpdFactor};
use crate::oneconstraint::{solve_one_constraint, Projector};
use crate::onevar::{constraint_solution_set, equality_solution_set, intersect, minimize_over, IntervalSet};
use crate::problem::{Assessment, Constraint, QcqpProblem, QuadraticForm, Sense};
use crate::split::{split, SplitMethod};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImproveTag {
    Sign,
    BalancedSign,
    ScaleToCover,
    GreedyClique,
    CoordinateDescent,
    Convex,
    Ccp,
    Admm,
    Sequence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImproveReport {
    pub x: Vec<f64>,
    /// Recomputed from `x`.
    pub assessment: Assessment,
    pub iterations: usize,
    /// `(violation, objective)` after each iteration.
    pub phase_trace: Vec<(f64, f64)>,
    pub converged: bool,
    pub method: ImproveTag,
    /// Raw final iterate of an iterative method, for diagnostics.
    pub last_iterate: Option<Vec<f64>>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ImproveError {
    #[error("balanced rounding needs an even dimension, got {0}")]
    OddDimension(usize),
    #[error("no positive multiple of the point satisfies the covering constraints")]
    NotScalable,
    #[error("the problem has no covering constraints of the form xᵀPx ≥ 1")]
    NoCoverForms,
    #[error("the problem is not convex")]
    NotConvex,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("subsolver failed: {reason}")]
    Subsolver {
        reason: String,
        partial: Box<ImproveReport>,
    },
}

/// Violations at most this large count as feasible when comparing iterates.
pub const FEAS_TOL: f64 = 1e-9;

/// Builds the report for `x`, falling back to `x0` if `x` would break the
/// improve contract.
fn finish(
    problem: &QcqpProblem,
    x0: &[f64],
    x: Vec<f64>,
    method: ImproveTag,
    iterations: usize,
    phase_trace: Vec<(f64, f64)>,
    converged: bool,
) -> ImproveReport {
    let a0 = problem.assess_unchecked(x0);
    let a = problem.assess_unchecked(&x);
    let finite = x.iter().all(|v| v.is_finite()) && a.objective.is_finite() && a.violation.is_finite();
    let (x, assessment) = if finite && a.is_no_worse_than(&a0) { (x, a) } else { (x0.to_vec(), a0) };
    ImproveReport {
        x,
        assessment,
        iterations,
        phase_trace,
        converged,
        method,
        last_iterate: None,
    }
}

fn check_dim(problem: &QcqpProblem, x: &[f64]) -> Result<(), ImproveError> {
    if x.len() == problem.dim() {
        Ok(())
    } else {
        Err(ImproveError::DimensionMismatch {
            expected: problem.dim(),
            got: x.len(),
        })
    }
}

fn trace_point(a: Assessment) -> (f64, f64) {
    (a.violation, a.objective)
}

// ---------------------------------------------------------------- rounders

/// Elementwise sign with `sign(0) = +1`: the nearest point of `{−1, 1}ⁿ`.
pub fn round_sign(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| if v < 0.0 { -1.0 } else { 1.0 }).collect()
}

/// `+1` on the `n/2` largest entries (ties to the lower index), `−1`
/// elsewhere: the nearest balanced sign vector.
pub fn round_balanced_sign(x: &[f64]) -> Result<Vec<f64>, ImproveError> {
    let n = x.len();
    if n % 2 == 1 {
        return Err(ImproveError::OddDimension(n));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[b].total_cmp(&x[a]).then(a.cmp(&b)));
    let mut z = vec![-1.0; n];
    for &i in &order[..n / 2] {
        z[i] = 1.0;
    }
    Ok(z)
}

/// `x/√t` with `t = min_i xᵀP_ix`, so that `min_i zᵀP_iz = 1`.
pub fn scale_to_cover(x: &[f64], forms: &[Mat]) -> Result<Vec<f64>, ImproveError> {
    let t = forms.iter().map(|p| p.quad(x)).fold(f64::INFINITY, f64::min);
    if !(t > 0.0) || !t.is_finite() {
        return Err(ImproveError::NotScalable);
    }
    let s = t.sqrt();
    Ok(x.iter().map(|v| v / s).collect())
}

/// Greedy clique: visit vertices by decreasing `x` (ties to the lower
/// index) and keep each one adjacent to everything kept so far. The result
/// is a maximal clique, returned as a 0/1 indicator.
pub fn greedy_clique(x: &[f64], adjacency: &Mat) -> Vec<f64> {
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[b].total_cmp(&x[a]).then(a.cmp(&b)));
    let mut clique: Vec<usize> = Vec::new();
    for &v in &order {
        if clique.iter().all(|&u| adjacency[(u, v)] != 0.0) {
            clique.push(v);
        }
    }
    let mut z = vec![0.0; n];
    for v in clique {
        z[v] = 1.0;
    }
    z
}

/// Matrices `P/τ` for every constraint `τ − xᵀPx ≤ 0` with `P ⪰ 0`, `τ > 0`
/// and no linear part.
pub fn cover_forms(problem: &QcqpProblem) -> Vec<Mat> {
    problem
        .constraints()
        .iter()
        .filter(|c| c.sense == Sense::LeqZero && c.form.r() > 0.0 && c.form.q().iter().all(|&v| v == 0.0))
        .filter_map(|c| {
            let p = c.form.to_dense().scaled(-1.0 / c.form.r());
            (c.form.has_quadratic_part() && min_eig_bound(&p, EigBoundMode::Exact) >= -1e-9).then_some(p)
        })
        .collect()
}

/// Adjacency implied by the `x_i x_j = 0` constraints of a clique
/// encoding: every such pair is a non-edge, every other pair an edge.
pub fn clique_adjacency(problem: &QcqpProblem) -> Mat {
    let n = problem.dim();
    let mut a = Mat::from_fn(n, n, |_, _| 1.0);
    for c in problem.constraints() {
        let f = &c.form;
        if let (Sense::EqZero, &[(i, j, _)]) = (c.sense, f.triplets()) {
            if i != j && f.r() == 0.0 && f.q().iter().all(|&v| v == 0.0) {
                a[(i, j)] = 0.0;
                a[(j, i)] = 0.0;
            }
        }
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rounder {
    Sign,
    BalancedSign,
    ScaleToCover,
    GreedyClique,
}

/// A rounder used as an improve method: the rounded point is kept only if
/// it is no worse than the input.
pub fn improve_round(problem: &QcqpProblem, x0: &[f64], rounder: Rounder) -> Result<ImproveReport, ImproveError> {
    check_dim(problem, x0)?;
    let (z, tag) = match rounder {
        Rounder::Sign => (round_sign(x0), ImproveTag::Sign),
        Rounder::BalancedSign => (round_balanced_sign(x0)?, ImproveTag::BalancedSign),
        Rounder::ScaleToCover => {
            let forms = cover_forms(problem);
            if forms.is_empty() {
                return Err(ImproveError::NoCoverForms);
            }
            (scale_to_cover(x0, &forms)?, ImproveTag::ScaleToCover)
        }
        Rounder::GreedyClique => (greedy_clique(x0, &clique_adjacency(problem)), ImproveTag::GreedyClique),
    };
    let trace = vec![trace_point(problem.assess_unchecked(&z))];
    Ok(finish(problem, x0, z, tag, 1, trace, true))
}

// ------------------------------------------------------- coordinate descent

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CdOptions {
    pub max_sweeps: usize,
    /// Absolute tolerance of the violation-level bisection.
    pub bisection_tol: f64,
    /// A violation-reducing sweep that gains less than this ends the
    /// feasibility phase unsuccessfully.
    pub stall_tol: f64,
    /// Violation at which the feasibility phase hands over to the
    /// objective phase; equality restrictions with a constant below this
    /// count as satisfied for every value of the coordinate.
    pub feas_tol: f64,
}

impl Default for CdOptions {
    fn default() -> Self {
        CdOptions {
            max_sweeps: 100,
            bisection_tol: 1e-9,
            stall_tol: 1e-12,
            feas_tol: 1e-8,
        }
    }
}

/// Constraints touching each coordinate.
fn incidence(problem: &QcqpProblem) -> Vec<Vec<usize>> {
    let mut touch = vec![Vec::new(); problem.dim()];
    for (i, c) in problem.constraints().iter().enumerate() {
        for j in c.form.support() {
            touch[j].push(i);
        }
    }
    touch
}

/// Values of `x_j` keeping every touched constraint within level `s`.
fn level_set(problem: &QcqpProblem, touched: &[usize], x: &[f64], j: usize, s: f64) -> IntervalSet {
    let mut set = IntervalSet::full();
    for &i in touched {
        let c = &problem.constraints()[i];
        let (p, q, r) = c.form.restrict(x, j);
        let part = constraint_solution_set(p, q, r - s);
        set = intersect(&set, &part);
        if c.sense == Sense::EqZero {
            set = intersect(&set, &constraint_solution_set(-p, -q, -r - s));
        }
        if set.is_empty() {
            break;
        }
    }
    set
}

/// Values of `x_j` keeping every touched constraint satisfied exactly.
fn feasible_line(problem: &QcqpProblem, touched: &[usize], x: &[f64], j: usize, eq_tol: f64) -> IntervalSet {
    let mut set = IntervalSet::full();
    for &i in touched {
        let c = &problem.constraints()[i];
        let (p, q, r) = c.form.restrict(x, j);
        let part = match c.sense {
            Sense::LeqZero => constraint_solution_set(p, q, r),
            Sense::EqZero => equality_solution_set(p, q, r, eq_tol),
        };
        set = intersect(&set, &part);
        if set.is_empty() {
            break;
        }
    }
    set
}

/// Two-phase coordinate descent. Phase I lowers the maximum violation one
/// coordinate at a time by bisecting on the violation level; phase II
/// minimizes the objective along each coordinate over the exact feasible
/// set of that coordinate, accepting strict decreases only.
pub fn improve_coordinate_descent(
    problem: &QcqpProblem,
    x0: &[f64],
    opts: &CdOptions,
) -> Result<ImproveReport, ImproveError> {
    check_dim(problem, x0)?;
    let n = problem.dim();
    let touch = incidence(problem);
    let cons = problem.constraints();
    let mut x = x0.to_vec();
    let mut viol: Vec<f64> = cons.iter().map(|c| c.violation(&x)).collect();
    let max_of = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    let mut v = max_of(&viol);
    let v_in = v;
    let mut trace = Vec::new();
    let mut sweeps = 0;

    // phase I
    let mut phase_one_ok = v <= opts.feas_tol;
    while !phase_one_ok && sweeps < opts.max_sweeps {
        sweeps += 1;
        let v_start = v;
        for j in 0..n {
            let touched = &touch[j];
            if touched.is_empty() {
                continue;
            }
            let local = touched.iter().map(|&i| viol[i]).fold(0.0, f64::max);
            if local == 0.0 {
                continue;
            }
            let mut hi = local;
            let mut set = level_set(problem, touched, &x, j, hi);
            if set.is_empty() {
                continue;
            }
            let probe = level_set(problem, touched, &x, j, 0.0);
            if !probe.is_empty() {
                set = probe;
            } else {
                let mut lo = 0.0;
                while hi - lo > opts.bisection_tol {
                    let mid = 0.5 * (lo + hi);
                    let s = level_set(problem, touched, &x, j, mid);
                    if s.is_empty() {
                        lo = mid;
                    } else {
                        hi = mid;
                        set = s;
                    }
                }
            }
            let Some(t) = set.nearest(x[j]) else { continue };
            let old = x[j];
            x[j] = t;
            let new_local: Vec<f64> = touched.iter().map(|&i| cons[i].violation(&x)).collect();
            if new_local.iter().copied().fold(0.0, f64::max) < local {
                for (&i, &nv) in touched.iter().zip(&new_local) {
                    viol[i] = nv;
                }
                v = max_of(&viol);
            } else {
                x[j] = old;
            }
        }
        trace.push((v, problem.objective().eval(&x)));
        if v <= opts.feas_tol {
            phase_one_ok = true;
        } else if v_start - v < opts.stall_tol {
            break;
        }
    }
    if !phase_one_ok {
        return Ok(finish(problem, x0, x, ImproveTag::CoordinateDescent, sweeps, trace, false));
    }

    // phase II: a step may not push the violation above this reference, so
    // the result stays no worse than the input
    let v_ref = if v_in > opts.feas_tol { opts.feas_tol } else { v_in };
    let obj = problem.objective();
    let mut f = obj.eval(&x);
    let mut converged = false;
    let phase_two_start = sweeps;
    while sweeps < opts.max_sweeps.max(phase_two_start + 1) {
        sweeps += 1;
        let mut improved = false;
        for j in 0..n {
            let set = feasible_line(problem, &touch[j], &x, j, opts.feas_tol);
            let Some((t, ft)) = minimize_over(obj.restrict(&x, j), &set).optimal() else {
                continue;
            };
            if !(ft < f - 1e-12 * (1.0 + f.abs())) {
                continue;
            }
            let old = x[j];
            x[j] = t;
            let new_local: Vec<f64> = touch[j].iter().map(|&i| cons[i].violation(&x)).collect();
            let mut trial = viol.clone();
            for (&i, &nv) in touch[j].iter().zip(&new_local) {
                trial[i] = nv;
            }
            let f_new = obj.eval(&x);
            if max_of(&trial) <= v_ref && f_new < f {
                viol = trial;
                f = f_new;
                improved = true;
            } else {
                x[j] = old;
            }
        }
        trace.push((max_of(&viol), f));
        if !improved {
            converged = true;
            break;
        }
    }
    Ok(finish(problem, x0, x, ImproveTag::CoordinateDescent, sweeps, trace, converged))
}

// -------------------------------------------------------------------- ADMM

/// Simple convex set kept by the consensus variable.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum ConvexSet {
    #[default]
    FullSpace,
    Box { lo: Vec<f64>, hi: Vec<f64> },
    SingleQuadratic(QuadraticForm),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdmmOptions {
    /// Penalty; by default the smallest value (with 10% margin) that keeps
    /// the objective step strictly convex, and at least 1.
    pub rho: Option<f64>,
    pub max_iter: usize,
    /// Violation at which the feasibility phase hands over.
    pub eps_feas: f64,
    pub two_phase: bool,
    #[serde(skip)]
    pub convex_set: ConvexSet,
    /// Relative primal and dual residual tolerance for convergence.
    pub tol: f64,
    /// Rebalance `ρ` every 50 iterations when the primal and dual
    /// residuals differ by more than a factor of 10.
    pub adaptive_rho: bool,
}

impl Default for AdmmOptions {
    fn default() -> Self {
        AdmmOptions {
            rho: None,
            max_iter: 1000,
            eps_feas: 1e-6,
            two_phase: true,
            convex_set: ConvexSet::FullSpace,
            tol: 1e-7,
            adaptive_rho: false,
        }
    }
}

/// Iterates of consensus ADMM: the consensus point `z`, one local copy
/// `x_i` per constraint and scaled duals `u_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub z: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub u: Vec<Vec<f64>>,
}

impl AdmmState {
    /// `z = x_i = x0`, `u_i = 0`.
    pub fn start(x0: &[f64], m: usize) -> Self {
        AdmmState {
            z: x0.to_vec(),
            x: vec![x0.to_vec(); m],
            u: vec![vec![0.0; x0.len()]; m],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdmmPhase {
    Feasibility,
    Objective,
}

/// Consensus ADMM with the per-constraint projections cached.
pub struct Admm<'a> {
    problem: &'a QcqpProblem,
    opts: AdmmOptions,
    rho: f64,
    projectors: Vec<Option<Projector>>,
    set_projector: Option<Projector>,
    factor: Option<SpdFactor>,
    pub state: AdmmState,
    pub phase: AdmmPhase,
    /// `ρ‖z − z_prev‖` of the last step
    pub dual_residual: f64,
}

/// Default penalty: `max(1, 1.1 · 2(−λ_min(P₀))/m)`. The objective step
/// minimizes `f₀(z) + (mρ/2)‖z − z̄‖²`, whose Hessian `2P₀ + mρI` is then
/// positive definite.
pub fn default_rho(problem: &QcqpProblem) -> f64 {
    let m = problem.num_constraints().max(1) as f64;
    let p0 = problem.objective().to_dense();
    let lmin = if problem.objective().has_quadratic_part() { min_eig_bound(&p0, EigBoundMode::Exact) } else { 0.0 };
    (1.1 * 2.0 * (-lmin) / m).max(1.0)
}

impl<'a> Admm<'a> {
    pub fn new(problem: &'a QcqpProblem, state: AdmmState, opts: &AdmmOptions) -> Self {
        let rho = opts.rho.unwrap_or_else(|| default_rho(problem));
        let projectors = problem.constraints().iter().map(|c| Projector::new(&c.form).ok()).collect();
        let set_projector = match &opts.convex_set {
            ConvexSet::SingleQuadratic(f) => Projector::new(f).ok(),
            _ => None,
        };
        let m = problem.num_constraints();
        let factor = Self::factor_for(problem, &opts.convex_set, rho);
        let phase = if opts.two_phase && m > 0 { AdmmPhase::Feasibility } else { AdmmPhase::Objective };
        Admm {
            problem,
            opts: opts.clone(),
            rho,
            projectors,
            set_projector,
            factor,
            state,
            phase,
            dual_residual: f64::INFINITY,
        }
    }

    fn factor_for(problem: &QcqpProblem, set: &ConvexSet, rho: f64) -> Option<SpdFactor> {
        if !matches!(set, ConvexSet::FullSpace) {
            return None;
        }
        let m = problem.num_constraints();
        let h = problem.objective().to_dense().scaled(2.0).add_diag(m as f64 * rho);
        factor_spd(&h).ok()
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Changes the penalty, rescaling the scaled duals so the unscaled ones
    /// are kept.
    pub fn set_rho(&mut self, rho: f64) {
        let ratio = self.rho / rho;
        for ui in &mut self.state.u {
            ui.iter_mut().for_each(|v| *v *= ratio);
        }
        self.rho = rho;
        self.factor = Self::factor_for(self.problem, &self.opts.convex_set, rho);
    }

    fn target(&self) -> Vec<f64> {
        let n = self.problem.dim();
        let m = self.state.x.len();
        let mut t = vec![0.0; n];
        for (xi, ui) in self.state.x.iter().zip(&self.state.u) {
            for k in 0..n {
                t[k] += xi[k] - ui[k];
            }
        }
        t.iter_mut().for_each(|v| *v /= m as f64);
        t
    }

    fn project_set(&self, a: Vec<f64>) -> Vec<f64> {
        match &self.opts.convex_set {
            ConvexSet::FullSpace => a,
            ConvexSet::Box { lo, hi } => a.iter().zip(lo.iter().zip(hi)).map(|(&v, (&l, &h))| v.clamp(l, h)).collect(),
            ConvexSet::SingleQuadratic(_) => match &self.set_projector {
                Some(p) => p.project_ineq(&a).map(|r| r.x).unwrap_or(a),
                None => a,
            },
        }
    }

    /// Minimizes `f₀(z) + (w/2)‖z − a‖²` over the convex set, with
    /// `w = mρ`. `None` when that problem is unbounded or unsolvable.
    fn objective_step(&self, a: &[f64]) -> Option<Vec<f64>> {
        let n = self.problem.dim();
        let w = self.state.x.len() as f64 * self.rho;
        let f0 = self.problem.objective();
        match &self.opts.convex_set {
            ConvexSet::FullSpace => {
                let rhs: Vec<f64> = (0..n).map(|k| -f0.q()[k] + w * a[k]).collect();
                match &self.factor {
                    Some(fac) => Some(fac.back_solve(&rhs)),
                    None => solve_one_constraint(&prox_form(f0, w, a), &QuadraticForm::zero(n)).ok().map(|s| s.x),
                }
            }
            ConvexSet::SingleQuadratic(c) => solve_one_constraint(&prox_form(f0, w, a), c).ok().map(|s| s.x),
            ConvexSet::Box { lo, hi } => {
                let g = prox_form(f0, w, a);
                let mut z: Vec<f64> = self.state.z.iter().zip(lo.iter().zip(hi)).map(|(&v, (&l, &h))| v.clamp(l, h)).collect();
                for _ in 0..500 {
                    let mut change = 0.0f64;
                    for j in 0..n {
                        let (p, q, _) = g.restrict(&z, j);
                        if !(p > 0.0) {
                            return None;
                        }
                        let t = (-q / (2.0 * p)).clamp(lo[j], hi[j]);
                        change = change.max((t - z[j]).abs());
                        z[j] = t;
                    }
                    if change <= 1e-13 * (1.0 + z.iter().fold(0.0f64, |m, v| m.max(v.abs()))) {
                        break;
                    }
                }
                Some(z)
            }
        }
    }

    /// One iteration: consensus step, local projections, dual update.
    /// Returns false when the objective step has no solution.
    pub fn step(&mut self) -> bool {
        let m = self.state.x.len();
        let z_prev = self.state.z.clone();
        if m > 0 || self.phase == AdmmPhase::Objective {
            let a = if m > 0 { self.target() } else { self.state.z.clone() };
            let z = match self.phase {
                AdmmPhase::Feasibility => Some(self.project_set(a)),
                AdmmPhase::Objective => self.objective_step(&a),
            };
            match z {
                Some(z) => self.state.z = z,
                None => return false,
            }
        }
        let z = &self.state.z;
        let cons = self.problem.constraints();
        let update = |(i, (xi, ui)): (usize, (&mut Vec<f64>, &Vec<f64>))| {
            let w: Vec<f64> = z.iter().zip(ui).map(|(a, b)| a + b).collect();
            let projected = self.projectors[i].as_ref().and_then(|p| {
                match cons[i].sense {
                    Sense::LeqZero => p.project_ineq(&w),
                    Sense::EqZero => p.project_eq(&w),
                }
                .ok()
            });
            *xi = projected.map(|r| r.x).unwrap_or(w);
        };
        let pairs = self.state.x.iter_mut().zip(self.state.u.iter()).enumerate();
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            if m >= 16 {
                let v: Vec<_> = pairs.collect();
                v.into_par_iter().for_each(update);
            } else {
                pairs.for_each(update);
            }
        }
        #[cfg(not(feature = "parallel"))]
        pairs.for_each(update);
        for (xi, ui) in self.state.x.iter().zip(self.state.u.iter_mut()) {
            for k in 0..ui.len() {
                ui[k] += self.state.z[k] - xi[k];
            }
        }
        let dz: f64 = self.state.z.iter().zip(&z_prev).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        self.dual_residual = self.rho * dz * (m.max(1) as f64).sqrt();
        true
    }

    /// `max_i ‖z − x_i‖`.
    pub fn primal_residual(&self) -> f64 {
        self.state
            .x
            .iter()
            .map(|xi| xi.iter().zip(&self.state.z).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }
}

/// `f₀(z) + (w/2)‖z − a‖²` as a quadratic form.
fn prox_form(f0: &QuadraticForm, w: f64, a: &[f64]) -> QuadraticForm {
    let n = a.len();
    let diag = QuadraticForm::new(
        n,
        (0..n).map(|k| (k, k, 0.5 * w)).collect(),
        a.iter().map(|v| -w * v).collect(),
        0.5 * w * a.iter().map(|v| v * v).sum::<f64>(),
    )
    .expect("finite proximal term");
    QuadraticForm::linear_combination(n, &[(1.0, f0), (1.0, &diag)])
}

/// Two-phase consensus ADMM from `z = x_i = x0`, `u_i = 0`.
pub fn improve_admm(problem: &QcqpProblem, x0: &[f64], opts: &AdmmOptions) -> Result<ImproveReport, ImproveError> {
    check_dim(problem, x0)?;
    let state = AdmmState::start(x0, problem.num_constraints());
    Ok(improve_admm_from(problem, x0, state, opts))
}

/// ADMM from an explicit initial state; `x0` is the reference point of the
/// improve contract.
pub fn improve_admm_from(problem: &QcqpProblem, x0: &[f64], state: AdmmState, opts: &AdmmOptions) -> ImproveReport {
    let mut admm = Admm::new(problem, state, opts);
    let mut best = x0.to_vec();
    let mut best_a = problem.assess_unchecked(x0);
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..opts.max_iter {
        if !admm.step() {
            break;
        }
        iterations += 1;
        let z = &admm.state.z;
        let a = problem.assess_unchecked(z);
        trace.push(trace_point(a));
        if a.tolerant_cmp(&best_a, opts.eps_feas) == std::cmp::Ordering::Less {
            best = z.clone();
            best_a = a;
        }
        if opts.adaptive_rho && iterations % 50 == 0 && admm.phase == AdmmPhase::Objective {
            let primal = admm.primal_residual() * (problem.num_constraints().max(1) as f64).sqrt();
            if primal > 10.0 * admm.dual_residual {
                admm.set_rho(2.0 * admm.rho());
            } else if admm.dual_residual > 10.0 * primal && admm.rho() > 1e-6 {
                admm.set_rho(0.5 * admm.rho());
            }
        }
        let z = &admm.state.z;
        match admm.phase {
            AdmmPhase::Feasibility => {
                if a.violation <= opts.eps_feas {
                    admm.phase = AdmmPhase::Objective;
                }
            }
            AdmmPhase::Objective => {
                let scale = 1.0 + z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                if admm.primal_residual() <= opts.tol * scale && admm.dual_residual <= opts.tol * scale {
                    converged = true;
                    break;
                }
            }
        }
    }
    let last = admm.state.z.clone();
    let mut report = finish(problem, x0, best, ImproveTag::Admm, iterations, trace, converged);
    report.last_iterate = Some(last);
    report
}

/// Solves a convex QCQP with single-phase ADMM, whose iterates converge for
/// convex problems. This is a solver rather than an improve method: it
/// returns the final iterate even when the start point was better, since
/// the start is only a warm start. [`ImproveMethod::Convex`] adds the
/// improve contract back.
pub fn solve_convex(problem: &QcqpProblem, x0: &[f64], opts: &AdmmOptions) -> Result<ImproveReport, ImproveError> {
    check_dim(problem, x0)?;
    if !problem.is_convex(1e-9) {
        return Err(ImproveError::NotConvex);
    }
    let opts = AdmmOptions {
        two_phase: false,
        ..opts.clone()
    };
    let state = AdmmState::start(x0, problem.num_constraints());
    let report = improve_admm_from(problem, x0, state, &opts);
    let x = report.last_iterate.clone().expect("admm reports its last iterate");
    Ok(ImproveReport {
        assessment: problem.assess_unchecked(&x),
        x,
        method: ImproveTag::Convex,
        ..report
    })
}

/// Options for [`solve_convex`] when used as an inner solver.
pub fn convex_defaults() -> AdmmOptions {
    AdmmOptions {
        max_iter: 20_000,
        eps_feas: 1e-7,
        two_phase: false,
        tol: 1e-9,
        adaptive_rho: true,
        ..AdmmOptions::default()
    }
}

// --------------------------------------------------------------------- CCP

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CcpOptions {
    pub tau0: f64,
    pub tau_max: f64,
    pub mu: f64,
    pub max_iter: usize,
    #[serde(skip)]
    pub split_method: SplitMethod,
    pub subsolver: AdmmOptions,
}

impl Default for CcpOptions {
    fn default() -> Self {
        CcpOptions {
            tau0: 1.0,
            tau_max: 1e4,
            mu: 2.0,
            max_iter: 50,
            split_method: SplitMethod::default(),
            subsolver: AdmmOptions {
                max_iter: 5000,
                eps_feas: 1e-7,
                two_phase: false,
                tol: 1e-8,
                adaptive_rho: true,
                ..AdmmOptions::default()
            },
        }
    }
}

/// `f = g − h` with `g(x) = xᵀP₊x + qᵀx + r` and `h(x) = xᵀP₋x`.
struct DcForm {
    plus: Mat,
    minus: Mat,
    q: Vec<f64>,
    r: f64,
}

impl DcForm {
    fn new(f: &QuadraticForm, method: SplitMethod) -> Result<Self, String> {
        let n = f.dim();
        let (plus, minus) = if f.has_quadratic_part() {
            let s = split(&f.to_dense(), method).map_err(|e| e.to_string())?;
            (s.plus, s.minus)
        } else {
            (Mat::zeros(n, n), Mat::zeros(n, n))
        };
        Ok(DcForm {
            plus,
            minus,
            q: f.q().to_vec(),
            r: f.r(),
        })
    }

    fn negated(&self) -> DcForm {
        DcForm {
            plus: self.minus.clone(),
            minus: self.plus.clone(),
            q: self.q.iter().map(|v| -v).collect(),
            r: -self.r,
        }
    }

    /// `g(x) − ĥ(x)` with `h` linearized at `xk`, embedded in `dim`
    /// variables, plus `extra` added to the linear part.
    fn convexified(&self, xk: &[f64], dim: usize, extra: &[(usize, f64)]) -> QuadraticForm {
        let n = xk.len();
        let mx = self.minus.mul_vec(xk);
        let mut q = vec![0.0; dim];
        for k in 0..n {
            q[k] = self.q[k] - 2.0 * mx[k];
        }
        for &(k, v) in extra {
            q[k] += v;
        }
        let r = self.r + self.minus.quad(xk);
        let mut trips = Vec::new();
        for i in 0..n {
            for j in i..n {
                let v = self.plus[(i, j)];
                if v != 0.0 {
                    trips.push((i, j, v));
                }
            }
        }
        QuadraticForm::new(dim, trips, q, r).expect("finite convexified form")
    }
}

/// Penalty convex-concave procedure. Each form is split into convex minus
/// convex parts; each iteration linearizes the concave parts at the current
/// point and solves the slack-augmented convex problem
/// `min ĝ₀(x) + τΣs  s.t. ĝ_i(x) ≤ s_i, s ≥ 0`, then raises `τ`.
pub fn improve_ccp(problem: &QcqpProblem, x0: &[f64], opts: &CcpOptions) -> Result<ImproveReport, ImproveError> {
    check_dim(problem, x0)?;
    let n = problem.dim();
    let fail = |reason: String, x: Vec<f64>, it: usize, trace: Vec<(f64, f64)>| ImproveError::Subsolver {
        reason,
        partial: Box::new(finish(problem, x0, x, ImproveTag::Ccp, it, trace, false)),
    };
    let obj = DcForm::new(problem.objective(), opts.split_method).map_err(|e| fail(e, x0.to_vec(), 0, Vec::new()))?;
    // one slack row per inequality, two per equality
    let mut rows = Vec::new();
    for c in problem.constraints() {
        let d = DcForm::new(&c.form, opts.split_method).map_err(|e| fail(e, x0.to_vec(), 0, Vec::new()))?;
        if c.sense == Sense::EqZero {
            rows.push(d.negated());
        }
        rows.push(d);
    }
    let k = rows.len();
    let dim = n + k;

    let mut x = x0.to_vec();
    let mut tau = opts.tau0;
    let mut trace = Vec::new();
    let mut best = x0.to_vec();
    let mut best_a = problem.assess_unchecked(x0);
    let mut converged = false;
    let mut iterations = 0;
    let mut last_slack = f64::INFINITY;
    for _ in 0..opts.max_iter {
        iterations += 1;
        let mut q0 = vec![0.0; dim];
        let base = obj.convexified(&x, dim, &[]);
        q0[..n].copy_from_slice(&base.q()[..n]);
        q0[n..].iter_mut().for_each(|v| *v = tau);
        let objective = QuadraticForm::new(dim, base.triplets().to_vec(), q0, base.r()).expect("finite objective");
        let mut cons = Vec::with_capacity(2 * k);
        let mut start = x.clone();
        for (i, row) in rows.iter().enumerate() {
            let f = row.convexified(&x, dim, &[(n + i, -1.0)]);
            let mut probe = x.clone();
            probe.resize(dim, 0.0);
            start.push((f.eval(&probe)).max(0.0));
            cons.push(Constraint::leq(f));
            let mut nonneg = vec![0.0; dim];
            nonneg[n + i] = -1.0;
            cons.push(Constraint::leq(QuadraticForm::affine(nonneg, 0.0).expect("slack bound")));
        }
        let sub = QcqpProblem::new(objective, cons).expect("consistent subproblem");
        let solved = solve_convex(&sub, &start, &opts.subsolver).map_err(|e| fail(e.to_string(), best.clone(), iterations, trace.clone()))?;
        x = solved.x[..n].to_vec();
        // the smallest slacks that fit the new point
        let mut padded = x.clone();
        padded.resize(dim, 0.0);
        let slack: f64 = sub.constraints().iter().step_by(2).map(|c| c.form.eval(&padded).max(0.0)).sum();
        let a = problem.assess_unchecked(&x);
        trace.push(trace_point(a));
        if a.tolerant_cmp(&best_a, opts.subsolver.eps_feas.max(FEAS_TOL)) == std::cmp::Ordering::Less {
            best = x.clone();
            best_a = a;
        }
        if slack <= 1e-6 {
            converged = true;
            break;
        }
        if tau >= opts.tau_max && (last_slack - slack).abs() <= 1e-9 * (1.0 + slack) {
            break;
        }
        last_slack = slack;
        tau = (opts.mu * tau).min(opts.tau_max);
    }
    Ok(finish(problem, x0, best, ImproveTag::Ccp, iterations, trace, converged))
}

// --------------------------------------------------------------- sequences

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "method")]
pub enum ImproveMethod {
    Round { rounder: Rounder },
    CoordinateDescent(CdOptions),
    Ccp(CcpOptions),
    Admm(AdmmOptions),
    Convex(AdmmOptions),
}

impl ImproveMethod {
    pub fn run(&self, problem: &QcqpProblem, x0: &[f64]) -> Result<ImproveReport, ImproveError> {
        match self {
            ImproveMethod::Round { rounder } => improve_round(problem, x0, *rounder),
            ImproveMethod::CoordinateDescent(o) => improve_coordinate_descent(problem, x0, o),
            ImproveMethod::Ccp(o) => improve_ccp(problem, x0, o),
            ImproveMethod::Admm(o) => improve_admm(problem, x0, o),
            ImproveMethod::Convex(o) => {
                let r = solve_convex(problem, x0, o)?;
                Ok(finish(problem, x0, r.x, ImproveTag::Convex, r.iterations, r.phase_trace, r.converged))
            }
        }
    }
}

/// Runs the methods in order, each from the previous result. Since each
/// step is no worse than its input, neither is the composition.
pub fn improve_sequence(
    problem: &QcqpProblem,
    x0: &[f64],
    methods: &[ImproveMethod],
) -> Result<ImproveReport, ImproveError> {
    check_dim(problem, x0)?;
    let mut x = x0.to_vec();
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = true;
    for m in methods {
        match m.run(problem, &x) {
            Ok(r) => {
                x = r.x;
                trace.extend(r.phase_trace);
                iterations += r.iterations;
                converged &= r.converged;
            }
            Err(ImproveError::Subsolver { reason, partial }) => {
                trace.extend(partial.phase_trace.iter().copied());
                let partial = finish(problem, x0, partial.x, ImproveTag::Sequence, iterations + partial.iterations, trace, false);
                return Err(ImproveError::Subsolver {
                    reason,
                    partial: Box::new(partial),
                });
            }
            Err(e) => return Err(e),
        }
    }
    let method = if methods.len() == 1 { tag_of(&methods[0]) } else { ImproveTag::Sequence };
    Ok(finish(problem, x0, x, method, iterations, trace, converged))
}

fn tag_of(m: &ImproveMethod) -> ImproveTag {
    match m {
        ImproveMethod::Round { rounder } => match rounder {
            Rounder::Sign => ImproveTag::Sign,
            Rounder::BalancedSign => ImproveTag::BalancedSign,
            Rounder::ScaleToCover => ImproveTag::ScaleToCover,
            Rounder::GreedyClique => ImproveTag::GreedyClique,
        },
        ImproveMethod::CoordinateDescent(_) => ImproveTag::CoordinateDescent,
        ImproveMethod::Ccp(_) => ImproveTag::Ccp,
        ImproveMethod::Admm(_) => ImproveTag::Admm,
        ImproveMethod::Convex(_) => ImproveTag::Convex,
    }
}

