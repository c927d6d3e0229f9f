//! Problems with a single quadratic constraint.
//!
//! [`Projector`] computes the Euclidean projection onto `{f(x) = 0}` (or
//! `{f(x) ≤ 0}`) by rotating into the eigenbasis of the constraint matrix
//! and solving the scalar secular equation for the multiplier. The general
//! objective case, [`solve_one_constraint`], maximizes the concave dual
//! `g(η) = min_x f₀(x) + η f₁(x)` over the pencil-admissible multipliers.

use thiserror::Error;

use crate::linalg::{dot, factor_spd, norm2, sym_eigen, EigenDecomposition, LinalgError, Mat};
use crate::onevar::quadratic_roots;
use crate::problem::QuadraticForm;

/// A pencil `I + νΛ` entry below this magnitude is treated as singular.
pub const SINGULAR_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OneConstraintError {
    #[error("the constraint set is empty")]
    InfeasibleConstraint,
    #[error("the problem is infeasible")]
    Infeasible,
    #[error("no multiplier makes the Lagrangian bounded below")]
    DualUnbounded,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    pub x: Vec<f64>,
    /// Multiplier of the constraint; zero when it does not bind.
    pub nu: f64,
    /// `max(‖2(x − z) + ν∇f(x)‖, |f(x)|)`, or the stationarity part alone
    /// for an interior point.
    pub kkt_residual: f64,
}

#[derive(Debug, Clone)]
enum Shape {
    Constant,
    /// `qᵀx + r` on the support
    Affine { qq: f64 },
    /// the single support variable: `p t² + q t + r`
    Scalar { p: f64 },
    Quadratic { eig: EigenDecomposition, p: Mat },
}

/// Projection operator onto one quadratic constraint, with the
/// eigendecomposition of the constraint matrix cached. Only the variables
/// touched by the form take part; the rest are passed through.
#[derive(Debug, Clone)]
pub struct Projector {
    n: usize,
    support: Vec<usize>,
    q: Vec<f64>,
    r: f64,
    shape: Shape,
    inf: f64,
    sup: f64,
}

impl Projector {
    pub fn new(form: &QuadraticForm) -> Result<Self, OneConstraintError> {
        let support = form.support();
        let s = support.len();
        let n = form.dim();
        let q: Vec<f64> = support.iter().map(|&j| form.q()[j]).collect();
        let r = form.r();
        let (shape, inf, sup) = if s == 0 {
            (Shape::Constant, r, r)
        } else if !form.has_quadratic_part() {
            let qq = dot(&q, &q);
            (Shape::Affine { qq }, f64::NEG_INFINITY, f64::INFINITY)
        } else if s == 1 {
            let p = form.to_dense()[(support[0], support[0])];
            let (inf, sup) = if p > 0.0 {
                (r - q[0] * q[0] / (4.0 * p), f64::INFINITY)
            } else {
                (f64::NEG_INFINITY, r - q[0] * q[0] / (4.0 * p))
            };
            (Shape::Scalar { p }, inf, sup)
        } else {
            let p = form.to_dense().submatrix(&support);
            let eig = sym_eigen(&p)?;
            let qh = eig.vectors.tr_mul_vec(&q);
            let (inf, sup) = range_of(&eig.values, &qh, r);
            (Shape::Quadratic { eig, p }, inf, sup)
        };
        Ok(Projector {
            n,
            support,
            q,
            r,
            shape,
            inf,
            sup,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn feas_tol(&self) -> f64 {
        1e-12 * (1.0 + self.r.abs())
    }

    /// Whether `{f = 0}` is nonempty.
    pub fn eq_feasible(&self) -> bool {
        self.inf <= self.feas_tol() && self.sup >= -self.feas_tol()
    }

    /// Whether `{f ≤ 0}` is nonempty.
    pub fn ineq_feasible(&self) -> bool {
        self.inf <= self.feas_tol()
    }

    /// Value of the form on the support variables.
    fn eval_support(&self, xs: &[f64]) -> f64 {
        let lin = dot(&self.q, xs) + self.r;
        match &self.shape {
            Shape::Constant | Shape::Affine { .. } => lin,
            Shape::Scalar { p } => p * xs[0] * xs[0] + lin,
            Shape::Quadratic { p, .. } => p.quad(xs) + lin,
        }
    }

    /// `∇f` on the support variables.
    fn grad_support(&self, xs: &[f64]) -> Vec<f64> {
        match &self.shape {
            Shape::Constant | Shape::Affine { .. } => self.q.clone(),
            Shape::Scalar { p } => vec![2.0 * p * xs[0] + self.q[0]],
            Shape::Quadratic { p, .. } => {
                let px = p.mul_vec(xs);
                px.iter().zip(&self.q).map(|(a, b)| 2.0 * a + b).collect()
            }
        }
    }

    fn check_dim(&self, z: &[f64]) -> Result<(), OneConstraintError> {
        if z.len() == self.n {
            Ok(())
        } else {
            Err(OneConstraintError::DimensionMismatch {
                expected: self.n,
                got: z.len(),
            })
        }
    }

    pub fn project_ineq(&self, z: &[f64]) -> Result<ProjectionResult, OneConstraintError> {
        self.check_dim(z)?;
        if !self.ineq_feasible() {
            return Err(OneConstraintError::InfeasibleConstraint);
        }
        let zs: Vec<f64> = self.support.iter().map(|&j| z[j]).collect();
        if self.eval_support(&zs) <= 0.0 {
            return Ok(ProjectionResult {
                x: z.to_vec(),
                nu: 0.0,
                kkt_residual: 0.0,
            });
        }
        self.project_eq(z)
    }

    pub fn project_eq(&self, z: &[f64]) -> Result<ProjectionResult, OneConstraintError> {
        self.check_dim(z)?;
        if !self.eq_feasible() {
            return Err(OneConstraintError::InfeasibleConstraint);
        }
        let zs: Vec<f64> = self.support.iter().map(|&j| z[j]).collect();
        let candidates: Vec<(Vec<f64>, f64)> = match &self.shape {
            Shape::Constant => vec![(zs.clone(), 0.0)],
            Shape::Affine { qq } => {
                let nu = 2.0 * (dot(&self.q, &zs) + self.r) / qq;
                let xs = zs.iter().zip(&self.q).map(|(z, q)| z - 0.5 * nu * q).collect();
                vec![(xs, nu)]
            }
            Shape::Scalar { p } => quadratic_roots(*p, self.q[0], self.r)
                .into_iter()
                .map(|t| {
                    let g = 2.0 * p * t + self.q[0];
                    let nu = if g == 0.0 { 0.0 } else { -2.0 * (t - zs[0]) / g };
                    (vec![t], nu)
                })
                .collect(),
            Shape::Quadratic { eig, .. } => self.quadratic_candidates(eig, &zs),
        };
        let tol = 1e-7 * (1.0 + norm2(z));
        let mut best: Option<(f64, ProjectionResult)> = None;
        let mut fallback: Option<ProjectionResult> = None;
        for (xs, nu) in candidates {
            let res = self.residual(&zs, &xs, nu);
            let dist: f64 = xs.iter().zip(&zs).map(|(a, b)| (a - b) * (a - b)).sum();
            let mut x = z.to_vec();
            for (k, &j) in self.support.iter().enumerate() {
                x[j] = xs[k];
            }
            let pr = ProjectionResult {
                x,
                nu,
                kkt_residual: res,
            };
            if res <= tol {
                if best.as_ref().map_or(true, |(d, _)| dist < *d) {
                    best = Some((dist, pr));
                }
            } else if fallback.as_ref().map_or(true, |f| res < f.kkt_residual) {
                fallback = Some(pr);
            }
        }
        match (best, fallback) {
            (Some((_, pr)), _) => Ok(pr),
            (None, Some(f)) => Err(OneConstraintError::NumericalFailure(format!(
                "best KKT residual {:e}",
                f.kkt_residual
            ))),
            (None, None) => Err(OneConstraintError::NumericalFailure("no KKT candidate".into())),
        }
    }

    fn residual(&self, zs: &[f64], xs: &[f64], nu: f64) -> f64 {
        let g = self.grad_support(xs);
        let stat: f64 = xs
            .iter()
            .zip(zs)
            .zip(&g)
            .map(|((x, z), g)| {
                let v = 2.0 * (x - z) + nu * g;
                v * v
            })
            .sum::<f64>()
            .sqrt();
        stat.max(self.eval_support(xs).abs())
    }

    /// Left side of the secular equation at `ν`, in rotated coordinates.
    pub fn secular(&self, z: &[f64], nu: f64) -> Option<f64> {
        let Shape::Quadratic { eig, .. } = &self.shape else {
            return None;
        };
        let zs: Vec<f64> = self.support.iter().map(|&j| z[j]).collect();
        let zh = eig.vectors.tr_mul_vec(&zs);
        let qh = eig.vectors.tr_mul_vec(&self.q);
        Some(secular_value(&eig.values, &zh, &qh, self.r, nu))
    }

    /// Open interval of multipliers where `I + νP ≻ 0`.
    pub fn admissible_interval(&self) -> (f64, f64) {
        match &self.shape {
            Shape::Quadratic { eig, .. } => admissible(&eig.values),
            Shape::Scalar { p } => admissible(&[*p]),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    fn quadratic_candidates(&self, eig: &EigenDecomposition, zs: &[f64]) -> Vec<(Vec<f64>, f64)> {
        let lam = &eig.values;
        let zh = eig.vectors.tr_mul_vec(zs);
        let qh = eig.vectors.tr_mul_vec(&self.q);
        let h = |nu: f64| secular_value(lam, &zh, &qh, self.r, nu);
        let rotate = |xh: &[f64]| eig.vectors.mul_vec(xh);
        let mut out = Vec::new();

        let (lo, hi) = admissible(lam);
        let h0 = h(0.0);
        if h0 == 0.0 {
            return vec![(zs.to_vec(), 0.0)];
        }
        // bracket [l, u] with h(l) > 0 > h(u), one end possibly at the pencil boundary
        let (mut l, mut u) = if h0 > 0.0 { (0.0, hi) } else { (lo, 0.0) };
        if u.is_infinite() {
            let mut t = 1.0;
            while h(t) > 0.0 && t < 1e300 {
                l = t;
                t *= 2.0;
            }
            u = t;
        }
        if l.is_infinite() {
            let mut t = -1.0;
            while h(t) < 0.0 && t > -1e300 {
                u = t;
                t *= 2.0;
            }
            l = t;
        }
        let nu = bisect_decreasing(&h, l, u);
        if nu > lo && nu < hi {
            let xh = pencil_point(lam, &zh, &qh, nu);
            out.push((rotate(&xh), nu));
        }

        let lmin = lam[0];
        let lmax = lam[lam.len() - 1];
        let scale = lmin.abs().max(lmax.abs());
        for (active, lb) in [(lmin < -1e-14 * scale, lmin), (lmax > 1e-14 * scale, lmax)] {
            if !active {
                continue;
            }
            let nu = -1.0 / lb;
            if let Some(xh) = self.hard_case(lam, &zh, &qh, nu) {
                out.push((rotate(&xh), nu));
            }
        }
        out
    }

    /// Case where `I + νΛ` is singular at the optimum.
    fn hard_case(&self, lam: &[f64], zh: &[f64], qh: &[f64], nu: f64) -> Option<Vec<f64>> {
        let sing: Vec<usize> = (0..lam.len())
            .filter(|&i| (1.0 + nu * lam[i]).abs() < SINGULAR_TOL)
            .collect();
        let k = *sing.first()?;
        let scale = 1.0 + norm2(zh) + nu.abs() * norm2(qh);
        if sing.iter().any(|&i| (zh[i] - 0.5 * nu * qh[i]).abs() > 1e-8 * scale) {
            return None;
        }
        let mut xh: Vec<f64> = (0..lam.len())
            .map(|i| {
                if sing.contains(&i) {
                    zh[i]
                } else {
                    (zh[i] - 0.5 * nu * qh[i]) / (1.0 + nu * lam[i])
                }
            })
            .collect();
        let rest: f64 = (0..lam.len())
            .filter(|&i| i != k)
            .map(|i| lam[i] * xh[i] * xh[i] + qh[i] * xh[i])
            .sum::<f64>()
            + self.r;
        // λ_k (ẑ_k + ρ)² + q̂_k (ẑ_k + ρ) + rest = 0
        let a = lam[k];
        let b = 2.0 * a * zh[k] + qh[k];
        let c = a * zh[k] * zh[k] + qh[k] * zh[k] + rest;
        let disc = b * b - 4.0 * a * c;
        let rho = if disc >= 0.0 {
            let roots = quadratic_roots(a, b, c);
            roots.into_iter().min_by(|x, y| x.abs().total_cmp(&y.abs()))?
        } else if disc > -1e-12 * (b * b + (4.0 * a * c).abs()) {
            -b / (2.0 * a)
        } else {
            return None;
        };
        xh[k] = zh[k] + rho;
        Some(xh)
    }
}

/// `inf f` and `sup f` of `Σ λ_i y_i² + q_i y_i + r`.
fn range_of(lam: &[f64], qh: &[f64], r: f64) -> (f64, f64) {
    let scale = lam.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let ltol = 1e-12 * scale;
    let qtol = 1e-12 * (1.0 + norm2(qh));
    let mut inf = r;
    let mut sup = r;
    for (&l, &q) in lam.iter().zip(qh) {
        if l.abs() <= ltol {
            if q.abs() > qtol {
                inf = f64::NEG_INFINITY;
                sup = f64::INFINITY;
            }
        } else if l > 0.0 {
            sup = f64::INFINITY;
            inf -= q * q / (4.0 * l);
        } else {
            inf = f64::NEG_INFINITY;
            sup -= q * q / (4.0 * l);
        }
    }
    (inf, sup)
}

fn admissible(lam: &[f64]) -> (f64, f64) {
    let lmin = lam.iter().copied().fold(f64::INFINITY, f64::min);
    let lmax = lam.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = if lmax > 0.0 { -1.0 / lmax } else { f64::NEG_INFINITY };
    let hi = if lmin < 0.0 { -1.0 / lmin } else { f64::INFINITY };
    (lo, hi)
}

fn pencil_point(lam: &[f64], zh: &[f64], qh: &[f64], nu: f64) -> Vec<f64> {
    (0..lam.len())
        .map(|i| (zh[i] - 0.5 * nu * qh[i]) / (1.0 + nu * lam[i]))
        .collect()
}

fn secular_value(lam: &[f64], zh: &[f64], qh: &[f64], r: f64, nu: f64) -> f64 {
    let mut s = r;
    for i in 0..lam.len() {
        let x = (zh[i] - 0.5 * nu * qh[i]) / (1.0 + nu * lam[i]);
        s += (lam[i] * x + qh[i]) * x;
    }
    s
}

/// Root of a decreasing function on `[l, u]`, bisected until the bracket
/// cannot shrink further in floating point.
fn bisect_decreasing(h: &impl Fn(f64) -> f64, mut l: f64, mut u: f64) -> f64 {
    for _ in 0..2000 {
        let mid = 0.5 * (l + u);
        if mid <= l || mid >= u {
            break;
        }
        let v = h(mid);
        if v == 0.0 {
            return mid;
        }
        if v > 0.0 {
            l = mid;
        } else {
            u = mid;
        }
    }
    let (hl, hu) = (h(l), h(u));
    if hl.is_finite() && (!hu.is_finite() || hl.abs() <= hu.abs()) {
        l
    } else {
        u
    }
}

pub fn project_eq(z: &[f64], form: &QuadraticForm) -> Result<ProjectionResult, OneConstraintError> {
    Projector::new(form)?.project_eq(z)
}

pub fn project_ineq(z: &[f64], form: &QuadraticForm) -> Result<ProjectionResult, OneConstraintError> {
    Projector::new(form)?.project_ineq(z)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OneConstraintSolution {
    pub x: Vec<f64>,
    /// `f₀(x)`
    pub value: f64,
    /// multiplier of the constraint
    pub eta: f64,
    /// `f₀(x) + η f₁(x)`, the dual function at `η`
    pub dual_value: f64,
}

/// Minimize `f₀(x)` subject to `f₁(x) ≤ 0`.
pub fn solve_one_constraint(
    objective: &QuadraticForm,
    form: &QuadraticForm,
) -> Result<OneConstraintSolution, OneConstraintError> {
    Pencil::new(objective, form, false)?.solve()
}

/// Minimize `f₀(x)` subject to `f₁(x) = 0`; the multiplier is free.
pub fn solve_one_constraint_eq(
    objective: &QuadraticForm,
    form: &QuadraticForm,
) -> Result<OneConstraintSolution, OneConstraintError> {
    Pencil::new(objective, form, true)?.solve()
}

/// Minimize `f₀` subject to `l ≤ f₁(x) ≤ u`: solves the two one-sided
/// problems and keeps the better point that satisfies both sides.
pub fn solve_interval(
    objective: &QuadraticForm,
    form: &QuadraticForm,
    l: f64,
    u: f64,
) -> Result<OneConstraintSolution, OneConstraintError> {
    if l > u {
        return Err(OneConstraintError::Infeasible);
    }
    let n = form.dim();
    let shift = |c: f64| QuadraticForm::linear_combination(n, &[(1.0, form)]).plus_constant(-c);
    if l == u {
        return solve_one_constraint_eq(objective, &shift(l));
    }
    let mut results = Vec::new();
    let mut last_err = OneConstraintError::Infeasible;
    if u.is_finite() {
        match solve_one_constraint(objective, &shift(u)) {
            Ok(s) => results.push(s),
            Err(e) => last_err = e,
        }
    }
    if l.is_finite() {
        match solve_one_constraint(objective, &shift(l).negated()) {
            Ok(s) => results.push(s),
            Err(e) => last_err = e,
        }
    }
    if !u.is_finite() && !l.is_finite() {
        return solve_one_constraint(objective, &QuadraticForm::zero(n));
    }
    results
        .into_iter()
        .filter(|s| {
            let v = form.eval(&s.x);
            let tol = 1e-8 * (1.0 + v.abs());
            v >= l - tol && v <= u + tol
        })
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .ok_or(last_err)
}

struct Pencil<'a> {
    f0: &'a QuadraticForm,
    f1: &'a QuadraticForm,
    p0: Mat,
    p1: Mat,
    free: bool,
    scale: f64,
}

impl<'a> Pencil<'a> {
    fn new(f0: &'a QuadraticForm, f1: &'a QuadraticForm, free: bool) -> Result<Self, OneConstraintError> {
        if f0.dim() != f1.dim() {
            return Err(OneConstraintError::DimensionMismatch {
                expected: f0.dim(),
                got: f1.dim(),
            });
        }
        let p0 = f0.to_dense();
        let p1 = f1.to_dense();
        let scale = 1.0 + p0.max_abs() + p1.max_abs();
        Ok(Pencil {
            f0,
            f1,
            p0,
            p1,
            free,
            scale,
        })
    }

    fn matrix(&self, eta: f64) -> Mat {
        self.p0.axpy(eta, &self.p1)
    }

    fn lin(&self, eta: f64) -> Vec<f64> {
        self.f0.q().iter().zip(self.f1.q()).map(|(a, b)| a + eta * b).collect()
    }

    /// `(λ_min, eigenvector)` of the pencil at `η`.
    fn phi(&self, eta: f64) -> Result<(f64, Vec<f64>), OneConstraintError> {
        let e = sym_eigen(&self.matrix(eta))?;
        Ok((e.values[0], e.vectors.col(0).to_vec()))
    }

    fn feasible_phi(&self, eta: f64) -> Result<bool, OneConstraintError> {
        Ok(self.phi(eta)?.0 >= 0.0)
    }

    /// Lagrangian minimizer and `f₁` there, when the pencil is positive
    /// definite at `η`.
    fn stationary(&self, eta: f64) -> Option<(Vec<f64>, f64)> {
        let f = factor_spd(&self.matrix(eta)).ok()?;
        let q = self.lin(eta);
        let x: Vec<f64> = f.back_solve(&q).into_iter().map(|v| -0.5 * v).collect();
        if x.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let d = self.f1.eval(&x);
        Some((x, d))
    }

    fn solve(&self) -> Result<OneConstraintSolution, OneConstraintError> {
        let n = self.p0.rows();
        let lo_dom = if self.free { f64::NEG_INFINITY } else { 0.0 };
        let eta_f = self.find_admissible()?;

        let p1_eig = sym_eigen(&self.p1)?;
        let ptol = 1e-12 * self.scale;
        // lower end of the admissible interval
        let a = if !self.free && self.feasible_phi(0.0)? {
            0.0
        } else if p1_eig.max_value() <= ptol && self.free {
            f64::NEG_INFINITY
        } else {
            self.boundary(eta_f, -1.0, lo_dom)?
        };
        let b = if p1_eig.min_value() >= -ptol {
            f64::INFINITY
        } else {
            self.boundary(eta_f, 1.0, f64::INFINITY)?
        };

        let mut candidates: Vec<(Vec<f64>, f64)> = Vec::new();
        if b > a {
            self.interior_candidates(a, b, &mut candidates)?;
        }
        for end in [a, b] {
            if end.is_finite() && self.phi(end)?.0 <= 1e-9 * self.scale * (1.0 + end.abs()) {
                if let Some(x) = self.hard_case(end)? {
                    candidates.push((x, end));
                }
            }
        }
        if n == 0 {
            candidates.push((Vec::new(), 0.0));
        }

        if candidates.is_empty() {
            return Err(OneConstraintError::DualUnbounded);
        }
        let mut best: Option<OneConstraintSolution> = None;
        for (x, eta) in candidates {
            let v1 = self.f1.eval(&x);
            let mag = self.f1.to_dense().quad(&x).abs() + dot(self.f1.q(), &x).abs() + self.f1.r().abs();
            let tol = 1e-8 * (1.0 + mag);
            let ok = if self.free { v1.abs() <= tol } else { v1 <= tol };
            if !ok {
                continue;
            }
            let value = self.f0.eval(&x);
            if best.as_ref().map_or(true, |s| value < s.value) {
                best = Some(OneConstraintSolution {
                    dual_value: value + eta * v1,
                    x,
                    value,
                    eta,
                });
            }
        }
        best.ok_or(OneConstraintError::Infeasible)
    }

    /// Some multiplier with a positive semidefinite pencil, found by
    /// following the supergradient of the concave `λ_min(P₀ + ηP₁)`.
    fn find_admissible(&self) -> Result<f64, OneConstraintError> {
        let (phi0, v0) = self.phi(0.0)?;
        if phi0 >= 0.0 {
            return Ok(0.0);
        }
        let s0 = self.p1.quad(&v0);
        let dir = if s0 > 0.0 {
            1.0
        } else if s0 < 0.0 && self.free {
            -1.0
        } else {
            return Err(OneConstraintError::DualUnbounded);
        };
        let mut eta = 0.0;
        let mut phi = phi0;
        let mut slope = s0.abs();
        let mut t = (-phi / slope).max(1e-6);
        for _ in 0..200 {
            let trial = eta + dir * t;
            let (p, v) = self.phi(trial)?;
            if p >= 0.0 {
                return Ok(trial);
            }
            let s = dir * self.p1.quad(&v);
            if s > 0.0 {
                eta = trial;
                phi = p;
                slope = s;
                t = (2.0 * t).max(-phi / slope);
            } else {
                return self.maximize_phi(eta, trial);
            }
        }
        Err(OneConstraintError::DualUnbounded)
    }

    /// Maximizes the concave `λ_min` on `[l, u]` (either order) by bisection
    /// on the supergradient sign; succeeds if the maximum is nonnegative.
    fn maximize_phi(&self, l: f64, u: f64) -> Result<f64, OneConstraintError> {
        let (mut lo, mut hi) = if l < u { (l, u) } else { (u, l) };
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let (p, v) = self.phi(mid)?;
            if p >= 0.0 {
                return Ok(mid);
            }
            if self.p1.quad(&v) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Err(OneConstraintError::DualUnbounded)
    }

    /// Edge of the admissible interval in direction `dir` from the admissible
    /// `eta_f`, clipped to `limit`.
    fn boundary(&self, eta_f: f64, dir: f64, limit: f64) -> Result<f64, OneConstraintError> {
        let mut good = eta_f;
        let mut t = 1.0f64.max(eta_f.abs());
        let bad;
        loop {
            let trial = good + dir * t;
            let clipped = (dir > 0.0 && trial >= limit) || (dir < 0.0 && trial <= limit);
            let trial = if clipped { limit } else { trial };
            if !self.feasible_phi(trial)? {
                bad = trial;
                break;
            }
            if clipped {
                return Ok(limit);
            }
            good = trial;
            t *= 2.0;
            if t > 1e300 {
                return Ok(dir * f64::INFINITY);
            }
        }
        let (mut g, mut b) = (good, bad);
        for _ in 0..2000 {
            let mid = 0.5 * (g + b);
            if mid == g || mid == b {
                break;
            }
            if self.feasible_phi(mid)? {
                g = mid;
            } else {
                b = mid;
            }
        }
        Ok(g)
    }

    /// Bisection on the dual derivative `f₁(x(η))` inside `(a, b)`.
    fn interior_candidates(
        &self,
        a: f64,
        b: f64,
        out: &mut Vec<(Vec<f64>, f64)>,
    ) -> Result<(), OneConstraintError> {
        let start = match (a.is_finite(), b.is_finite()) {
            (true, true) => 0.5 * (a + b),
            (true, false) => a + 1.0f64.max(a.abs()),
            (false, true) => b - 1.0f64.max(b.abs()),
            (false, false) => 0.0,
        };
        // constraint inactive at η = 0
        if !self.free && a == 0.0 {
            if let Some((x, d)) = self.stationary(0.0) {
                if d <= 0.0 {
                    out.push((x, 0.0));
                    return Ok(());
                }
            }
        }
        let Some((x0, d0)) = self.stationary(start) else {
            return Ok(());
        };
        if d0 == 0.0 {
            out.push((x0, start));
            return Ok(());
        }
        // (l, r) with d(l) > 0 > d(r)
        let (mut l, mut r);
        let dtol = |x: &[f64]| 1e-10 * (1.0 + self.f1.r().abs() + dot(x, x) * self.scale);
        if d0 > 0.0 {
            l = start;
            r = b;
            if b.is_infinite() {
                let mut t = 1.0f64.max(start.abs());
                let mut last: (Vec<f64>, f64);
                loop {
                    let trial = start + t;
                    match self.stationary(trial) {
                        Some((_, d)) if d <= 0.0 => {
                            r = trial;
                            break;
                        }
                        Some((x, d)) => {
                            l = trial;
                            last = (x, d);
                        }
                        None => break,
                    }
                    t *= 2.0;
                    if t > 1e15 * self.scale {
                        // the multiplier runs off to infinity
                        if last.1 <= dtol(&last.0) {
                            out.push((last.0, l));
                            return Ok(());
                        }
                        return Err(OneConstraintError::Infeasible);
                    }
                }
            }
        } else {
            r = start;
            l = a;
            if a.is_infinite() {
                let mut t = 1.0f64.max(start.abs());
                let mut last: (Vec<f64>, f64);
                loop {
                    let trial = start - t;
                    match self.stationary(trial) {
                        Some((_, d)) if d >= 0.0 => {
                            l = trial;
                            break;
                        }
                        Some((x, d)) => {
                            r = trial;
                            last = (x, d);
                        }
                        None => break,
                    }
                    t *= 2.0;
                    if t > 1e15 * self.scale {
                        if last.1.abs() <= dtol(&last.0) {
                            out.push((last.0, r));
                            return Ok(());
                        }
                        return Err(OneConstraintError::Infeasible);
                    }
                }
            }
        }
        if l.is_infinite() || r.is_infinite() {
            return Ok(());
        }
        let mut last_l = None;
        let mut last_r = None;
        for _ in 0..2000 {
            let mid = 0.5 * (l + r);
            if mid <= l || mid >= r {
                break;
            }
            match self.stationary(mid) {
                Some((x, d)) if d > 0.0 => {
                    l = mid;
                    last_l = Some((x, mid));
                }
                Some((x, d)) if d < 0.0 => {
                    r = mid;
                    last_r = Some((x, mid));
                }
                Some((x, _)) => {
                    out.push((x, mid));
                    return Ok(());
                }
                None => break,
            }
        }
        out.extend(last_l);
        out.extend(last_r);
        Ok(())
    }

    /// Candidate at a multiplier where the pencil is singular: a particular
    /// solution of the stationarity system plus a null-space step that makes
    /// the constraint active.
    fn hard_case(&self, eta: f64) -> Result<Option<Vec<f64>>, OneConstraintError> {
        let e = sym_eigen(&self.matrix(eta))?;
        let q = self.lin(eta);
        let n = e.values.len();
        let null_tol = 1e-9 * self.scale * (1.0 + eta.abs());
        let null: Vec<usize> = (0..n).filter(|&i| e.values[i] <= null_tol).collect();
        let qn = 1.0 + norm2(&q);
        let mut xp = vec![0.0; n];
        for i in 0..n {
            let v = e.vectors.col(i);
            let c = dot(v, &q);
            if null.contains(&i) {
                if c.abs() > 1e-7 * qn {
                    return Ok(None);
                }
                continue;
            }
            let w = -0.5 * c / e.values[i];
            for (x, vi) in xp.iter_mut().zip(v) {
                *x += w * vi;
            }
        }
        let p1 = &self.p1;
        for &k in &null {
            let v = e.vectors.col(k);
            let a = p1.quad(v);
            let b = 2.0 * dot(&p1.mul_vec(&xp), v) + dot(self.f1.q(), v);
            let c = self.f1.eval(&xp);
            let roots = quadratic_roots(a, b, c);
            let step = |alpha: f64| -> Vec<f64> { xp.iter().zip(v).map(|(x, vi)| x + alpha * vi).collect() };
            let best = roots
                .into_iter()
                .map(step)
                .min_by(|x, y| self.f0.eval(x).total_cmp(&self.f0.eval(y)));
            if let Some(x) = best {
                return Ok(Some(x));
            }
        }
        if null.is_empty() || (!self.free && self.f1.eval(&xp) <= 0.0) {
            return Ok(Some(xp));
        }
        Ok(None)
    }
}

impl QuadraticForm {
    /// The same form with `c` added to its constant term.
    pub fn plus_constant(&self, c: f64) -> QuadraticForm {
        QuadraticForm::new(self.dim(), self.triplets().to_vec(), self.q().to_vec(), self.r() + c)
            .expect("shifting keeps a valid form")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle() -> QuadraticForm {
        QuadraticForm::new(2, vec![(0, 0, 1.0), (1, 1, 1.0)], vec![0.0, 0.0], -1.0).unwrap()
    }

    #[test]
    fn radial_projection() {
        let p = project_eq(&[2.0, 0.0], &circle()).unwrap();
        assert!((p.x[0] - 1.0).abs() < 1e-12 && p.x[1].abs() < 1e-12);
        assert!((p.nu - 1.0).abs() < 1e-10);
        assert!(p.kkt_residual < 1e-10);
    }

    #[test]
    fn point_on_the_set_is_fixed() {
        let z = [0.6, 0.8];
        let p = project_eq(&z, &circle()).unwrap();
        assert!((p.x[0] - 0.6).abs() < 1e-12 && (p.x[1] - 0.8).abs() < 1e-12);
        assert!(p.nu.abs() < 1e-10);
    }

    #[test]
    fn hyperbola_from_origin() {
        let f = QuadraticForm::new(2, vec![(0, 0, 1.0), (1, 1, -1.0)], vec![0.0, 0.0], -1.0).unwrap();
        let p = project_eq(&[0.0, 0.0], &f).unwrap();
        assert!((p.x[0].abs() - 1.0).abs() < 1e-12 && p.x[1].abs() < 1e-12, "{:?}", p.x);
    }

    #[test]
    fn ineq_projection() {
        let p = project_ineq(&[0.1, 0.2], &circle()).unwrap();
        assert_eq!(p.x, vec![0.1, 0.2]);
        let p = project_ineq(&[2.0, 0.0], &circle()).unwrap();
        assert!((p.x[0] - 1.0).abs() < 1e-12);
        // halfspace x + y - 1 <= 0
        let h = QuadraticForm::affine(vec![1.0, 1.0], -1.0).unwrap();
        let p = project_ineq(&[2.0, 2.0], &h).unwrap();
        assert!((p.x[0] - 0.5).abs() < 1e-14 && (p.x[1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn empty_constraint_set() {
        let f = QuadraticForm::new(2, vec![(0, 0, 1.0), (1, 1, 1.0)], vec![0.0, 0.0], 1.0).unwrap();
        assert_eq!(project_eq(&[1.0, 0.0], &f), Err(OneConstraintError::InfeasibleConstraint));
    }

    #[test]
    fn scalar_support_projection() {
        let f = QuadraticForm::new(3, vec![(1, 1, 1.0)], vec![0.0; 3], -1.0).unwrap();
        let p = project_eq(&[5.0, -0.3, 7.0], &f).unwrap();
        assert_eq!(p.x, vec![5.0, -1.0, 7.0]);
    }

    #[test]
    fn partitioning_aggregate() {
        let obj = QuadraticForm::new(2, vec![(0, 1, -1.0)], vec![0.0; 2], 0.0).unwrap();
        let con = QuadraticForm::new(2, vec![(0, 0, 1.0), (1, 1, 1.0)], vec![0.0; 2], -2.0).unwrap();
        let s = solve_one_constraint(&obj, &con).unwrap();
        assert!((s.value + 2.0).abs() < 1e-12, "{s:?}");
        assert!((s.x[0].abs() - 1.0).abs() < 1e-12 && (s.x[0] - s.x[1]).abs() < 1e-12);
        assert!((s.eta - 1.0).abs() < 1e-12);
    }

    #[test]
    fn beamforming_closed_form() {
        let obj = QuadraticForm::new(2, vec![(0, 0, 1.0), (1, 1, 1.0)], vec![0.0; 2], 0.0).unwrap();
        let con = QuadraticForm::new(2, vec![(0, 0, -4.0), (1, 1, -1.0)], vec![0.0; 2], 1.0).unwrap();
        let s = solve_one_constraint(&obj, &con).unwrap();
        assert!((s.value - 0.25).abs() < 1e-12, "{s:?}");
        assert!((s.x[0].abs() - 0.5).abs() < 1e-12 && s.x[1].abs() < 1e-12);
    }

    #[test]
    fn inactive_constraint() {
        let obj = QuadraticForm::new(2, vec![(0, 0, 1.0), (1, 1, 1.0)], vec![-2.0, 0.0], 0.0).unwrap();
        let s = solve_one_constraint(&obj, &circle().plus_constant(-3.0)).unwrap();
        assert!((s.x[0] - 1.0).abs() < 1e-12 && s.x[1].abs() < 1e-12);
        assert_eq!(s.eta, 0.0);
    }

    #[test]
    fn unbounded_dual() {
        let obj = QuadraticForm::new(1, vec![(0, 0, -1.0)], vec![0.0], 0.0).unwrap();
        let con = QuadraticForm::affine(vec![1.0], -1.0).unwrap();
        assert_eq!(solve_one_constraint(&obj, &con), Err(OneConstraintError::DualUnbounded));
    }

    #[test]
    fn interval_problem() {
        let obj = QuadraticForm::new(1, vec![(0, 0, 1.0)], vec![0.0], 0.0).unwrap();
        let con = QuadraticForm::new(1, vec![(0, 0, 1.0)], vec![0.0], 0.0).unwrap();
        let s = solve_interval(&obj, &con, 1.0, 4.0).unwrap();
        assert!((s.x[0].abs() - 1.0).abs() < 1e-12 && (s.value - 1.0).abs() < 1e-12);
        let s = solve_interval(&obj, &con, 2.0, 2.0).unwrap();
        assert!((s.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_one_constraint() {
        let obj = QuadraticForm::new(1, vec![(0, 0, 1.0)], vec![0.0], 0.0).unwrap();
        let con = QuadraticForm::new(1, vec![(0, 0, 1.0)], vec![0.0], 1.0).unwrap();
        assert_eq!(solve_one_constraint(&obj, &con), Err(OneConstraintError::Infeasible));
    }
}
