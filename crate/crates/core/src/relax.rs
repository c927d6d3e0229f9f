//! Lower bounds and relaxation-based candidates.
//!
//! The spectral relaxation aggregates all constraints with fixed weights and
//! solves the resulting one-constraint problem exactly. The semidefinite
//! relaxation works in the lifted space `Z(X, x) = [[X, x], [xᵀ, 1]] ⪰ 0` and
//! is approximated from outside by a linear program whose PSD constraint is
//! replaced with eigenvector cuts `aᵀZa ≥ 0`, refined until `Z` is PSD to
//! tolerance.

use thiserror::Error;

use crate::linalg::{psd_project_with_repair, sym_eigen, LinalgError, Mat};
use crate::lp::{LinearProgram, LpError, LpOptions, LpOutcome, LpSolver};
use crate::oneconstraint::{solve_one_constraint, solve_one_constraint_eq, OneConstraintError};
use crate::problem::{Constraint, QcqpProblem, QuadraticForm, Sense};
use crate::rng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RelaxError {
    #[error("expected {expected} multipliers, got {got}")]
    MultiplierCount { expected: usize, got: usize },
    #[error("multiplier {index} of an inequality constraint is negative")]
    NegativeMultiplier { index: usize },
    #[error("the lifted relaxation is infeasible, so the problem is infeasible within the safeguard box")]
    Infeasible,
    #[error("the relaxation carries no lifted certificate")]
    NoLiftedCertificate,
    #[error(transparent)]
    OneConstraint(#[from] OneConstraintError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Certificate {
    /// Aggregation weights and the multiplier of the aggregated constraint.
    Spectral { lambda: Vec<f64>, eta: f64 },
    /// Lifted pair `(X, x)`.
    Lifted { x_mat: Mat, x: Vec<f64> },
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelaxationResult {
    /// Lower bound on the optimal value; `−∞` when vacuous.
    pub bound: f64,
    pub candidate: Option<Vec<f64>>,
    pub certificate: Certificate,
    /// False when a safeguard (the box of the cutting-plane LP) was active,
    /// so the bound may not hold for the original problem.
    pub valid: bool,
    /// Bound after each cutting-plane round; a single entry otherwise.
    pub trace: Vec<f64>,
    /// Whether the cutting-plane loop reached its PSD tolerance.
    pub converged: bool,
    /// Smallest eigenvalue of the final lifted matrix.
    pub min_eig: f64,
}

/// Bound from aggregating the constraints with weights `lambda`.
///
/// Inequality weights must be nonnegative; equality weights may have any
/// sign. When every constraint is an equality the aggregate is kept as an
/// equality, otherwise it is an inequality.
pub fn spectral_bound(problem: &QcqpProblem, lambda: &[f64]) -> Result<RelaxationResult, RelaxError> {
    let m = problem.num_constraints();
    if lambda.len() != m {
        return Err(RelaxError::MultiplierCount {
            expected: m,
            got: lambda.len(),
        });
    }
    for (i, (c, &l)) in problem.constraints().iter().zip(lambda).enumerate() {
        if c.sense == Sense::LeqZero && l < 0.0 {
            return Err(RelaxError::NegativeMultiplier { index: i });
        }
    }
    let aggregate = aggregate(problem, lambda);
    let all_eq = m > 0 && problem.constraints().iter().all(|c| c.sense == Sense::EqZero);
    let solved = if all_eq {
        solve_one_constraint_eq(problem.objective(), &aggregate)
    } else {
        solve_one_constraint(problem.objective(), &aggregate)
    };
    let single = |bound: f64, candidate, eta| RelaxationResult {
        bound,
        candidate,
        certificate: Certificate::Spectral {
            lambda: lambda.to_vec(),
            eta,
        },
        valid: true,
        trace: vec![bound],
        converged: true,
        min_eig: f64::NAN,
    };
    match solved {
        Ok(s) => Ok(single(s.value, Some(s.x), s.eta)),
        Err(OneConstraintError::DualUnbounded) => Ok(single(f64::NEG_INFINITY, None, f64::NAN)),
        Err(OneConstraintError::Infeasible) => Ok(single(f64::INFINITY, None, f64::NAN)),
        Err(e) => Err(e.into()),
    }
}

fn aggregate(problem: &QcqpProblem, lambda: &[f64]) -> QuadraticForm {
    let terms: Vec<(f64, &QuadraticForm)> = problem
        .constraints()
        .iter()
        .zip(lambda)
        .map(|(c, &l)| (l, &c.form))
        .collect();
    QuadraticForm::linear_combination(problem.dim(), &terms)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CutRule {
    /// One cut per round from the most negative eigenvector.
    MinEigenvector,
    /// Up to `max_per_round` cuts per round, one per eigenvector with a
    /// negative eigenvalue, most negative first.
    NegativeEigenvectors { max_per_round: usize },
}

impl Default for CutRule {
    fn default() -> Self {
        CutRule::NegativeEigenvectors { max_per_round: usize::MAX }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CuttingPlaneOptions {
    /// Most cuts held in the LP at once; defaults to `50·n`. Cuts that stay
    /// slack for a while are dropped, which frees budget.
    pub max_cuts: Option<usize>,
    pub psd_tol: f64,
    /// Safeguard box half-width for `x`; `X` gets `box²`. Defaults to
    /// `10·(1 + ‖q₀‖∞ + max_i ‖q_i‖∞)`.
    pub box_bound: Option<f64>,
    pub cut_rule: CutRule,
    /// Seed the cut pool with the eigenvectors of the unit-weight spectral
    /// certificate, which makes the first LP bound at least the spectral one.
    pub spectral_seed: bool,
    /// Per round, also add up to this many cuts from violated 2×2 principal
    /// minors of the lifted matrix; `None` means `2·(n + 1)`.
    pub minor_cuts: Option<usize>,
    pub max_rounds: usize,
}

impl Default for CuttingPlaneOptions {
    fn default() -> Self {
        CuttingPlaneOptions {
            max_cuts: None,
            psd_tol: 1e-6,
            box_bound: None,
            cut_rule: CutRule::default(),
            spectral_seed: true,
            minor_cuts: None,
            max_rounds: 10_000,
        }
    }
}

/// Rounds a cut may stay slack before it is dropped from the LP.
const CUT_PATIENCE: usize = 20;

pub fn default_box(problem: &QcqpProblem) -> f64 {
    let inf = |f: &QuadraticForm| f.q().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let qmax = problem
        .constraints()
        .iter()
        .map(|c| inf(&c.form))
        .fold(0.0f64, f64::max);
    10.0 * (1.0 + inf(problem.objective()) + qmax)
}

/// Indexing of the lifted LP variables: upper triangle of `X`, then `x`.
struct Lifted {
    n: usize,
    nx: usize,
}

impl Lifted {
    fn new(n: usize) -> Self {
        Lifted { n, nx: n * (n + 1) / 2 }
    }

    fn len(&self) -> usize {
        self.nx + self.n
    }

    fn xij(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        i * self.n - i * (i + 1) / 2 + j
    }

    fn xv(&self, i: usize) -> usize {
        self.nx + i
    }

    /// Coefficients of `Tr(PX) + qᵀx`.
    fn linear_row(&self, f: &QuadraticForm) -> Vec<f64> {
        let mut row = vec![0.0; self.len()];
        for &(i, j, v) in f.triplets() {
            row[self.xij(i, j)] += if i == j { v } else { 2.0 * v };
        }
        for (i, &qi) in f.q().iter().enumerate() {
            row[self.xv(i)] += qi;
        }
        row
    }

    /// `−aᵀZa ≤ a_t²` written as a row and right-hand side.
    fn cut(&self, a: &[f64]) -> (Vec<f64>, f64) {
        let n = self.n;
        let at = a[n];
        let mut row = vec![0.0; self.len()];
        for i in 0..n {
            if a[i] == 0.0 {
                continue;
            }
            row[self.xij(i, i)] -= a[i] * a[i];
            for j in i + 1..n {
                row[self.xij(i, j)] -= 2.0 * a[i] * a[j];
            }
            row[self.xv(i)] -= 2.0 * at * a[i];
        }
        (row, at * at)
    }

    fn unpack(&self, y: &[f64]) -> (Mat, Vec<f64>) {
        let n = self.n;
        let xm = Mat::from_fn(n, n, |i, j| y[self.xij(i, j)]);
        let x = y[self.nx..].to_vec();
        (xm, x)
    }
}

fn lifted_matrix(xm: &Mat, x: &[f64]) -> Mat {
    let n = x.len();
    Mat::from_fn(n + 1, n + 1, |i, j| match (i < n, j < n) {
        (true, true) => xm[(i, j)],
        (true, false) => x[i],
        (false, true) => x[j],
        (false, false) => 1.0,
    })
}

/// Per coordinate `(lo, hi, top)` with `lo ≤ x_i ≤ hi` and `X_ii ≤ top`,
/// implied by constraints whose quadratic part is a single positive
/// diagonal entry and whose linear part involves only that coordinate.
/// Positive semidefiniteness of the lifted matrix then bounds `|X_ij|` by
/// `√(top_i·top_j)`.
fn implied_diagonal_bounds(problem: &QcqpProblem) -> Vec<(f64, f64, f64)> {
    let n = problem.dim();
    let mut out = vec![(f64::NEG_INFINITY, f64::INFINITY, f64::INFINITY); n];
    for c in problem.constraints() {
        let f = &c.form;
        let &[(i, j, p)] = f.triplets() else {
            continue;
        };
        if i != j || p <= 0.0 {
            continue;
        }
        if f.q().iter().enumerate().any(|(k, &v)| k != i && v != 0.0) {
            continue;
        }
        // p·t² + q·t + r ≤ 0 with t = x_i, and p·X_ii ≤ −q·x_i − r
        let (q, r) = (f.q()[i], f.r());
        let disc = q * q - 4.0 * p * r;
        if disc < 0.0 {
            continue;
        }
        let root = disc.sqrt();
        let (lo, hi) = ((-q - root) / (2.0 * p), (-q + root) / (2.0 * p));
        let top = ((-r - q * lo) / p).max((-r - q * hi) / p).max(0.0);
        // a little slack so rounding never cuts off feasible points
        let pad = 1e-9 * (1.0 + lo.abs().max(hi.abs()));
        let e = &mut out[i];
        *e = (e.0.max(lo - pad), e.1.min(hi + pad), e.2.min(top * (1.0 + 1e-9) + pad));
    }
    out
}

/// Unit vectors `a` supported on two coordinates with `aᵀZa < −tol`, taken
/// from the most violated 2×2 principal minors of `z`.
fn minor_cuts(z: &Mat, budget: usize, tol: f64) -> Vec<Vec<f64>> {
    if budget == 0 {
        return Vec::new();
    }
    let m = z.rows();
    let mut found = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            let (a, b, c) = (z[(i, i)], z[(i, j)], z[(j, j)]);
            let half = 0.5 * (a - c);
            let lam = 0.5 * (a + c) - half.hypot(b);
            if lam < -tol {
                found.push((lam, i, j, a, b, c));
            }
        }
    }
    found.sort_by(|p, q| p.0.total_cmp(&q.0));
    found
        .into_iter()
        .take(budget)
        .map(|(lam, i, j, a, b, c)| {
            // larger of the two equivalent eigenvector formulas
            let (u, v) = if (lam - a).abs() >= (lam - c).abs() { (b, lam - a) } else { (lam - c, b) };
            let norm = u.hypot(v);
            let mut vec = vec![0.0; m];
            vec[i] = u / norm;
            vec[j] = v / norm;
            vec
        })
        .collect()
}

/// `[[P, q/2], [qᵀ/2, r − c]]` for the form `f` and constant `c`.
fn homogenized(f: &QuadraticForm, c: f64) -> Mat {
    let n = f.dim();
    let p = f.to_dense();
    Mat::from_fn(n + 1, n + 1, |i, j| match (i < n, j < n) {
        (true, true) => p[(i, j)],
        (true, false) => 0.5 * f.q()[i],
        (false, true) => 0.5 * f.q()[j],
        (false, false) => f.r() - c,
    })
}

/// Lower bound from the cutting-plane LP approximation of the semidefinite
/// relaxation.
pub fn sdr_bound_cutting_plane(
    problem: &QcqpProblem,
    opts: &CuttingPlaneOptions,
) -> Result<RelaxationResult, RelaxError> {
    let n = problem.dim();
    let lifted = Lifted::new(n);
    let b = opts.box_bound.unwrap_or_else(|| default_box(problem));
    let max_cuts = opts.max_cuts.unwrap_or(50 * n.max(1));
    let minor_budget = opts.minor_cuts.unwrap_or(2 * (n + 1));

    let mut lp = LinearProgram::new(lifted.linear_row(problem.objective()));
    lp.bounds = (0..lifted.len())
        .map(|k| {
            if k >= lifted.nx {
                (-b, b)
            } else {
                (-b * b, b * b)
            }
        })
        .collect();
    // bounds implied by the relaxation itself; only the remaining safeguard
    // bounds can make the result invalid
    let diag = implied_diagonal_bounds(problem);
    for i in 0..n {
        let (lo, hi, top) = diag[i];
        let xb = &mut lp.bounds[lifted.xv(i)];
        *xb = (xb.0.max(lo), xb.1.min(hi));
        lp.bounds[lifted.xij(i, i)] = (0.0, (b * b).min(top));
        for j in i + 1..n {
            let lim = (b * b).min((top * diag[j].2).sqrt());
            lp.bounds[lifted.xij(i, j)] = (-lim, lim);
        }
    }
    for c in problem.constraints() {
        let row = lifted.linear_row(&c.form);
        match c.sense {
            Sense::LeqZero => lp.add_leq(row, -c.form.r()),
            Sense::EqZero => lp.add_eq(row, -c.form.r()),
        };
    }
    let mut seed_cuts = Vec::new();
    if opts.spectral_seed && problem.num_constraints() > 0 {
        let ones = vec![1.0; problem.num_constraints()];
        if let Ok(spec) = spectral_bound(problem, &ones) {
            if let Certificate::Spectral { eta, .. } = spec.certificate {
                if spec.bound.is_finite() && eta.is_finite() {
                    let lag = QuadraticForm::linear_combination(
                        n,
                        &[(1.0, problem.objective()), (eta, &aggregate(problem, &ones))],
                    );
                    let e = sym_eigen(&homogenized(&lag, spec.bound))?;
                    for k in 0..=n {
                        seed_cuts.push(lifted.cut(e.vectors.col(k)));
                    }
                }
            }
        }
    }

    let mut solver = LpSolver::new(&lp, LpOptions::default())?;
    // (id, consecutive slack rounds) of each cut held by the solver
    let mut held = Vec::new();
    for (row, rhs) in seed_cuts {
        held.push((solver.add_leq(row, rhs)?, 0));
    }

    let r0 = problem.objective().r();
    let mut trace: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut last: Option<(Vec<f64>, f64, f64)> = None;
    for _round in 0..opts.max_rounds {
        let (y, value) = match solver.solve()? {
            LpOutcome::Optimal { y, value } => (y, value),
            LpOutcome::Infeasible => return Err(RelaxError::Infeasible),
            LpOutcome::Unbounded => {
                return Err(LpError::NumericalFailure {
                    pivots: solver.pivots(),
                    reason: "boxed LP reported unbounded".into(),
                }
                .into())
            }
        };
        let bound = value + r0;
        // dropping slack cuts leaves the optimum unchanged, so the exact
        // trace is monotone; the running max only absorbs rounding noise
        trace.push(trace.last().map_or(bound, |&p: &f64| p.max(bound)));
        let (xm, x) = lifted.unpack(&y);
        let e = sym_eigen(&lifted_matrix(&xm, &x))?;
        let min_eig = e.min_value();
        last = Some((y, bound, min_eig));
        if min_eig >= -opts.psd_tol {
            converged = true;
            break;
        }
        for (id, age) in held.iter_mut() {
            let slack = solver.row_slack(*id).unwrap_or(0.0);
            *age = if slack > 1e-9 { *age + 1 } else { 0 };
        }
        let stale: Vec<usize> = held
            .iter()
            .filter(|&&(_, age)| age >= CUT_PATIENCE)
            .map(|&(id, _)| id)
            .collect();
        solver.remove_rows(&stale);
        held.retain(|&(_, age)| age < CUT_PATIENCE);
        if held.len() >= max_cuts {
            break;
        }
        let per_round = match opts.cut_rule {
            CutRule::MinEigenvector => 1,
            CutRule::NegativeEigenvectors { max_per_round } => max_per_round.max(1),
        };
        for k in 0..=n {
            if k >= per_round || held.len() >= max_cuts || e.values[k] >= -opts.psd_tol {
                break;
            }
            let (row, rhs) = lifted.cut(e.vectors.col(k));
            held.push((solver.add_leq(row, rhs)?, 0));
        }
        let z = lifted_matrix(&xm, &x);
        for a in minor_cuts(&z, minor_budget, opts.psd_tol) {
            if held.len() >= max_cuts {
                break;
            }
            let (row, rhs) = lifted.cut(&a);
            held.push((solver.add_leq(row, rhs)?, 0));
        }
    }
    let (y, bound, min_eig) = last.expect("at least one round");
    let (xm, x) = lifted.unpack(&y);
    let active = |v: f64, lim: f64| v.abs() >= lim * (1.0 - 1e-9);
    let box_active = x.iter().any(|&v| active(v, b))
        || (0..n).any(|i| (i..n).any(|j| active(xm[(i, j)], b * b)));
    Ok(RelaxationResult {
        bound,
        candidate: Some(x.clone()),
        certificate: Certificate::Lifted { x_mat: xm, x },
        valid: !box_active,
        trace,
        converged,
        min_eig,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiftedSamples {
    pub points: Vec<Vec<f64>>,
    /// Most negative eigenvalue clipped from `X − xxᵀ` (zero if none).
    pub repair: f64,
    /// Largest eigenvalue of the repaired covariance.
    pub spread: f64,
}

/// Gaussian samples with mean `x` and covariance the PSD part of
/// `X − xxᵀ`. Sample `k` uses the sub-seed `seed + k`.
pub fn sample_from_lifted(
    result: &RelaxationResult,
    count: usize,
    seed: u64,
) -> Result<LiftedSamples, RelaxError> {
    let Certificate::Lifted { x_mat, x } = &result.certificate else {
        return Err(RelaxError::NoLiftedCertificate);
    };
    let n = x.len();
    let cov = Mat::from_fn(n, n, |i, j| x_mat[(i, j)] - x[i] * x[j]);
    let (_, repair) = psd_project_with_repair(&cov)?;
    let e = sym_eigen(&cov)?;
    let roots: Vec<f64> = e.values.iter().map(|&l| l.max(0.0).sqrt()).collect();
    let spread = e.values.iter().fold(0.0f64, |m, &l| m.max(l));
    let points = (0..count)
        .map(|k| {
            let mut r = rng::seeded(rng::sub_seed(seed, k));
            let g = rng::normal_vec(&mut r, n);
            let scaled: Vec<f64> = g.iter().zip(&roots).map(|(a, b)| a * b).collect();
            let d = e.vectors.mul_vec(&scaled);
            x.iter().zip(&d).map(|(a, b)| a + b).collect()
        })
        .collect();
    Ok(LiftedSamples {
        points,
        repair,
        spread,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TightenOptions {
    /// Maximum number of product constraints to append.
    pub pair_budget: usize,
    /// Accepted for interface completeness; `x_i² = 1` constraints are
    /// already quadratic, so no further cuts are generated from them.
    pub boolean_cuts: bool,
}

impl Default for TightenOptions {
    fn default() -> Self {
        TightenOptions {
            pair_budget: usize::MAX,
            boolean_cuts: false,
        }
    }
}

/// Appends the redundant products `(q_iᵀx + r_i)(q_jᵀx + r_j) ≥ 0` of pairs
/// of affine inequality constraints.
pub fn tighten(problem: &QcqpProblem, opts: &TightenOptions) -> QcqpProblem {
    let n = problem.dim();
    let affine: Vec<&QuadraticForm> = problem
        .constraints()
        .iter()
        .filter(|c| c.sense == Sense::LeqZero && !c.form.has_quadratic_part())
        .map(|c| &c.form)
        .collect();
    let mut constraints = problem.constraints().to_vec();
    let mut added = 0;
    'outer: for i in 0..affine.len() {
        for j in i + 1..affine.len() {
            if added >= opts.pair_budget {
                break 'outer;
            }
            constraints.push(Constraint::leq(product_form(n, affine[i], affine[j])));
            added += 1;
        }
    }
    QcqpProblem::new(problem.objective().clone(), constraints).expect("same dimension")
}

/// `−(q_iᵀx + r_i)(q_jᵀx + r_j)` as a quadratic form.
fn product_form(n: usize, a: &QuadraticForm, b: &QuadraticForm) -> QuadraticForm {
    let (qa, qb) = (a.q(), b.q());
    let mut t = Vec::new();
    for k in 0..n {
        for l in k..n {
            let v = if k == l {
                -qa[k] * qb[k]
            } else {
                -0.5 * (qa[k] * qb[l] + qa[l] * qb[k])
            };
            if v != 0.0 {
                t.push((k, l, v));
            }
        }
    }
    let q = (0..n).map(|k| -(b.r() * qa[k] + a.r() * qb[k])).collect();
    QuadraticForm::new(n, t, q, -a.r() * b.r()).expect("product of affine forms")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn partition2() -> QcqpProblem {
        let obj = QuadraticForm::new(2, vec![(0, 1, -1.0)], vec![0.0; 2], 0.0).unwrap();
        let cons = (0..2)
            .map(|i| Constraint::eq(QuadraticForm::new(2, vec![(i, i, 1.0)], vec![0.0; 2], -1.0).unwrap()))
            .collect();
        QcqpProblem::new(obj, cons).unwrap()
    }

    #[test]
    fn spectral_partitioning() {
        let r = spectral_bound(&partition2(), &[1.0, 1.0]).unwrap();
        assert!((r.bound + 2.0).abs() < 1e-12);
        let x = r.candidate.unwrap();
        assert!((x[0].abs() - 1.0).abs() < 1e-12 && (x[0] - x[1]).abs() < 1e-12);
    }

    #[test]
    fn spectral_zero_weights_unbounded() {
        let r = spectral_bound(&partition2(), &[0.0, 0.0]).unwrap();
        assert_eq!(r.bound, f64::NEG_INFINITY);
        assert!(r.valid);
    }

    #[test]
    fn cutting_plane_convex() {
        // minimize x² s.t. 1 − x ≤ 0
        let obj = QuadraticForm::new(1, vec![(0, 0, 1.0)], vec![0.0], 0.0).unwrap();
        let con = QuadraticForm::affine(vec![-1.0], 1.0).unwrap();
        let p = QcqpProblem::new(obj, vec![Constraint::leq(con)]).unwrap();
        let r = sdr_bound_cutting_plane(&p, &CuttingPlaneOptions::default()).unwrap();
        assert!(r.converged && r.valid);
        assert!((r.bound - 1.0).abs() < 1e-4, "{}", r.bound);
        assert!(r.trace.windows(2).all(|w| w[1] >= w[0] - 1e-9));
    }

    #[test]
    fn cutting_plane_partition2() {
        let r = sdr_bound_cutting_plane(&partition2(), &CuttingPlaneOptions::default()).unwrap();
        assert!(r.converged && r.valid);
        assert!((r.bound + 2.0).abs() < 1e-6, "{}", r.bound);
    }

    #[test]
    fn rank_one_samples_are_the_mean() {
        let x = vec![1.0, -2.0];
        let xm = Mat::from_fn(2, 2, |i, j| x[i] * x[j]);
        let r = RelaxationResult {
            bound: 0.0,
            candidate: None,
            certificate: Certificate::Lifted { x_mat: xm, x: x.clone() },
            valid: true,
            trace: vec![],
            converged: true,
            min_eig: 0.0,
        };
        let s = sample_from_lifted(&r, 3, 1).unwrap();
        for p in s.points {
            assert!((p[0] - 1.0).abs() < 1e-12 && (p[1] + 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tighten_interval_product() {
        let obj = QuadraticForm::zero(1);
        let c1 = QuadraticForm::affine(vec![1.0], -1.0).unwrap();
        let c2 = QuadraticForm::affine(vec![-1.0], 0.0).unwrap();
        let p = QcqpProblem::new(obj, vec![Constraint::leq(c1), Constraint::leq(c2)]).unwrap();
        let t = tighten(&p, &TightenOptions::default());
        assert_eq!(t.num_constraints(), 3);
        let f = &t.constraints()[2].form;
        assert_eq!(f.triplets(), &[(0, 0, 1.0)]);
        assert_eq!(f.q(), &[-1.0]);
        assert_eq!(f.r(), 0.0);
        assert_eq!(tighten(&partition2(), &TightenOptions::default()), partition2());
    }
}
