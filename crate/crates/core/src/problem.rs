//! Problem representation: quadratic forms, constraints, the better-point
//! order and the equivalent epigraph / homogeneous forms.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{dot, Mat};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("triplet ({row}, {col}) is out of range for dimension {n}")]
    IndexOutOfRange { row: usize, col: usize, n: usize },
    #[error("triplet ({row}, {col}) lies below the diagonal; store the upper triangle only")]
    LowerTriangle { row: usize, col: usize },
    #[error("non-finite coefficient")]
    NonFinite,
    #[error("constraint {index}: {source}")]
    Constraint {
        index: usize,
        #[source]
        source: Box<ProblemError>,
    },
    #[error("homogeneous point has zero last coordinate")]
    DegenerateHomogeneous,
}

/// `f(x) = xᵀPx + qᵀx + r`, with `P` symmetric and stored as its upper
/// triangle. A triplet `(i, j, v)` with `i < j` stands for both `P_ij` and
/// `P_ji`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    n: usize,
    triplets: Vec<(usize, usize, f64)>,
    q: Vec<f64>,
    r: f64,
    // neighbors[j] = (k, P_jk) for every stored entry touching j, diagonal included
    neighbors: Vec<Vec<(usize, f64)>>,
}

impl QuadraticForm {
    /// Triplets are normalized to row-major order and duplicates summed.
    /// Explicit zeros are dropped.
    pub fn new(
        n: usize,
        triplets: Vec<(usize, usize, f64)>,
        q: Vec<f64>,
        r: f64,
    ) -> Result<Self, ProblemError> {
        if q.len() != n {
            return Err(ProblemError::DimensionMismatch {
                expected: n,
                got: q.len(),
            });
        }
        if !r.is_finite() || q.iter().any(|v| !v.is_finite()) {
            return Err(ProblemError::NonFinite);
        }
        let mut t = triplets;
        for &(row, col, v) in &t {
            if row >= n || col >= n {
                return Err(ProblemError::IndexOutOfRange { row, col, n });
            }
            if row > col {
                return Err(ProblemError::LowerTriangle { row, col });
            }
            if !v.is_finite() {
                return Err(ProblemError::NonFinite);
            }
        }
        t.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(t.len());
        for (i, j, v) in t {
            match merged.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += v,
                _ => merged.push((i, j, v)),
            }
        }
        merged.retain(|e| e.2 != 0.0);
        let mut neighbors = vec![Vec::new(); n];
        for &(i, j, v) in &merged {
            neighbors[i].push((j, v));
            if i != j {
                neighbors[j].push((i, v));
            }
        }
        Ok(QuadraticForm {
            n,
            triplets: merged,
            q,
            r,
            neighbors,
        })
    }

    pub fn zero(n: usize) -> Self {
        QuadraticForm::new(n, Vec::new(), vec![0.0; n], 0.0).expect("zero form")
    }

    /// Affine form `qᵀx + r`.
    pub fn affine(q: Vec<f64>, r: f64) -> Result<Self, ProblemError> {
        QuadraticForm::new(q.len(), Vec::new(), q, r)
    }

    /// From a dense matrix; only the upper triangle of `(P + Pᵀ)/2` is kept.
    pub fn from_dense(p: &Mat, q: Vec<f64>, r: f64) -> Result<Self, ProblemError> {
        let n = p.rows();
        if !p.is_square() {
            return Err(ProblemError::DimensionMismatch {
                expected: n,
                got: p.cols(),
            });
        }
        let mut t = Vec::new();
        for j in 0..n {
            for i in 0..=j {
                let v = 0.5 * (p[(i, j)] + p[(j, i)]);
                if v != 0.0 {
                    t.push((i, j, v));
                }
            }
        }
        QuadraticForm::new(n, t, q, r)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn triplets(&self) -> &[(usize, usize, f64)] {
        &self.triplets
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn has_quadratic_part(&self) -> bool {
        !self.triplets.is_empty()
    }

    /// Stored entries touching variable `j`, as `(k, P_jk)`.
    pub fn neighbors(&self, j: usize) -> &[(usize, f64)] {
        &self.neighbors[j]
    }

    pub fn to_dense(&self) -> Mat {
        let mut p = Mat::zeros(self.n, self.n);
        for &(i, j, v) in &self.triplets {
            p[(i, j)] = v;
            p[(j, i)] = v;
        }
        p
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64, ProblemError> {
        if x.len() != self.n {
            return Err(ProblemError::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        Ok(self.eval(x))
    }

    /// Unchecked evaluation; panics in debug builds on a length mismatch.
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.n);
        let mut quad = 0.0;
        for &(i, j, v) in &self.triplets {
            if i == j {
                quad += v * x[i] * x[i];
            } else {
                quad += 2.0 * v * x[i] * x[j];
            }
        }
        quad + dot(&self.q, x) + self.r
    }

    /// `∇f(x) = 2Px + q`.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.q.clone();
        for &(i, j, v) in &self.triplets {
            g[i] += 2.0 * v * x[j];
            if i != j {
                g[j] += 2.0 * v * x[i];
            }
        }
        g
    }

    /// Coefficients `(p, q, r)` of `t ↦ f(x with x_j = t)`.
    pub fn restrict(&self, x: &[f64], j: usize) -> (f64, f64, f64) {
        let mut p = 0.0;
        let mut lin = self.q[j];
        let mut cross = 0.0; // Σ_{k≠j} P_jk x_k
        for &(k, v) in &self.neighbors[j] {
            if k == j {
                p = v;
            } else {
                cross += v * x[k];
            }
        }
        lin += 2.0 * cross;
        // f at x_j = 0: subtract the contributions involving x_j
        let xj = x[j];
        let full = self.eval(x);
        let r = full - p * xj * xj - lin * xj;
        (p, lin, r)
    }

    pub fn scaled(&self, s: f64) -> QuadraticForm {
        QuadraticForm::new(
            self.n,
            self.triplets.iter().map(|&(i, j, v)| (i, j, s * v)).collect(),
            self.q.iter().map(|v| s * v).collect(),
            s * self.r,
        )
        .expect("scaling keeps a valid form")
    }

    pub fn negated(&self) -> QuadraticForm {
        self.scaled(-1.0)
    }

    /// `Σ w_k f_k`. All forms must share one dimension.
    pub fn linear_combination(n: usize, terms: &[(f64, &QuadraticForm)]) -> QuadraticForm {
        let mut t = Vec::new();
        let mut q = vec![0.0; n];
        let mut r = 0.0;
        for &(w, f) in terms {
            assert_eq!(f.n, n, "linear_combination: dimension mismatch");
            if w == 0.0 {
                continue;
            }
            t.extend(f.triplets.iter().map(|&(i, j, v)| (i, j, w * v)));
            for (a, b) in q.iter_mut().zip(&f.q) {
                *a += w * b;
            }
            r += w * f.r;
        }
        QuadraticForm::new(n, t, q, r).expect("combination of valid forms")
    }

    /// Embeds the form in a larger space, mapping variable `k` to `map[k]`.
    pub fn embed(&self, new_n: usize, map: &[usize]) -> QuadraticForm {
        let mut q = vec![0.0; new_n];
        for (k, &v) in self.q.iter().enumerate() {
            q[map[k]] += v;
        }
        let t = self
            .triplets
            .iter()
            .map(|&(i, j, v)| {
                let (a, b) = (map[i], map[j]);
                (a.min(b), a.max(b), v)
            })
            .collect();
        QuadraticForm::new(new_n, t, q, self.r).expect("embedding of a valid form")
    }

    /// Indices touched by either the quadratic or the linear part.
    pub fn support(&self) -> Vec<usize> {
        (0..self.n)
            .filter(|&j| !self.neighbors[j].is_empty() || self.q[j] != 0.0)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sense {
    /// `f(x) ≤ 0`
    LeqZero,
    /// `f(x) = 0`
    EqZero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub form: QuadraticForm,
    pub sense: Sense,
}

impl Constraint {
    pub fn leq(form: QuadraticForm) -> Self {
        Constraint {
            form,
            sense: Sense::LeqZero,
        }
    }

    pub fn eq(form: QuadraticForm) -> Self {
        Constraint {
            form,
            sense: Sense::EqZero,
        }
    }

    pub fn violation(&self, x: &[f64]) -> f64 {
        let v = self.form.eval(x);
        match self.sense {
            Sense::LeqZero => v.max(0.0),
            Sense::EqZero => v.abs(),
        }
    }
}

/// Minimize `f_0(x)` subject to each constraint. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct QcqpProblem {
    n: usize,
    objective: QuadraticForm,
    constraints: Vec<Constraint>,
}

impl QcqpProblem {
    pub fn new(objective: QuadraticForm, constraints: Vec<Constraint>) -> Result<Self, ProblemError> {
        let n = objective.dim();
        for (index, c) in constraints.iter().enumerate() {
            if c.form.dim() != n {
                return Err(ProblemError::Constraint {
                    index,
                    source: Box::new(ProblemError::DimensionMismatch {
                        expected: n,
                        got: c.form.dim(),
                    }),
                });
            }
        }
        Ok(QcqpProblem {
            n,
            objective,
            constraints,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn objective(&self) -> &QuadraticForm {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn assess(&self, x: &[f64]) -> Result<Assessment, ProblemError> {
        if x.len() != self.n {
            return Err(ProblemError::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        Ok(self.assess_unchecked(x))
    }

    pub fn assess_unchecked(&self, x: &[f64]) -> Assessment {
        Assessment {
            violation: self.violation(x),
            objective: self.objective.eval(x),
        }
    }

    /// Maximum constraint violation `v(x)`; zero when there are no constraints.
    pub fn violation(&self, x: &[f64]) -> f64 {
        self.constraints
            .iter()
            .map(|c| c.violation(x))
            .fold(0.0, f64::max)
    }

    pub fn is_convex(&self, tol: f64) -> bool {
        let psd = |f: &QuadraticForm| {
            !f.has_quadratic_part()
                || crate::linalg::min_eig_bound(&f.to_dense(), Default::default()) >= -tol
        };
        psd(&self.objective)
            && self.constraints.iter().all(|c| match c.sense {
                Sense::LeqZero => psd(&c.form),
                Sense::EqZero => !c.form.has_quadratic_part(),
            })
    }

    /// Epigraph form over `(x, t)`: minimize `t` s.t. `f_0(x) − t ≤ 0` and the
    /// original constraints.
    pub fn to_epigraph(&self) -> QcqpProblem {
        let n = self.n;
        let map: Vec<usize> = (0..n).collect();
        let mut t_obj = vec![0.0; n + 1];
        t_obj[n] = 1.0;
        let objective = QuadraticForm::new(n + 1, Vec::new(), t_obj, 0.0).expect("linear objective");
        let mut epi = self.objective.embed(n + 1, &map);
        epi.q[n] -= 1.0;
        let epi = QuadraticForm::new(n + 1, epi.triplets, epi.q, epi.r).expect("epigraph form");
        let mut constraints = vec![Constraint::leq(epi)];
        constraints.extend(self.constraints.iter().map(|c| Constraint {
            form: c.form.embed(n + 1, &map),
            sense: c.sense,
        }));
        QcqpProblem::new(objective, constraints).expect("consistent dimensions")
    }

    /// Homogeneous form over `z = (x, s)`: each form becomes
    /// `zᵀ [[P, q/2], [qᵀ/2, r]] z`, and `s² = 1` is appended.
    pub fn to_homogeneous(&self) -> QcqpProblem {
        let n = self.n;
        let lift = |f: &QuadraticForm| {
            let mut t = f.triplets.clone();
            for (i, &qi) in f.q.iter().enumerate() {
                if qi != 0.0 {
                    t.push((i, n, 0.5 * qi));
                }
            }
            if f.r != 0.0 {
                t.push((n, n, f.r));
            }
            QuadraticForm::new(n + 1, t, vec![0.0; n + 1], 0.0).expect("homogeneous form")
        };
        let mut constraints: Vec<Constraint> = self
            .constraints
            .iter()
            .map(|c| Constraint {
                form: lift(&c.form),
                sense: c.sense,
            })
            .collect();
        constraints.push(Constraint::eq(
            QuadraticForm::new(n + 1, vec![(n, n, 1.0)], vec![0.0; n + 1], -1.0).expect("s² = 1"),
        ));
        QcqpProblem::new(lift(&self.objective), constraints).expect("consistent dimensions")
    }
}

/// `(x₁/s, …, x_n/s)` for `z = (x, s)`.
pub fn dehomogenize(z: &[f64]) -> Result<Vec<f64>, ProblemError> {
    match z.split_last() {
        Some((&s, head)) if s != 0.0 => Ok(head.iter().map(|v| v / s).collect()),
        _ => Err(ProblemError::DegenerateHomogeneous),
    }
}

/// `(v(x), f_0(x))`, ordered lexicographically.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Assessment {
    pub violation: f64,
    pub objective: f64,
}

impl Assessment {
    pub fn lex_cmp(&self, other: &Assessment) -> Ordering {
        self.violation
            .total_cmp(&other.violation)
            .then(self.objective.total_cmp(&other.objective))
    }

    /// Strictly better: smaller violation, or equal violation and smaller
    /// objective.
    pub fn is_better_than(&self, other: &Assessment) -> bool {
        self.lex_cmp(other) == Ordering::Less
    }

    pub fn is_no_worse_than(&self, other: &Assessment) -> bool {
        self.lex_cmp(other) != Ordering::Greater
    }

    /// Comparison that treats violations below `feas_tol` as zero.
    pub fn tolerant_cmp(&self, other: &Assessment, feas_tol: f64) -> Ordering {
        let clip = |v: f64| if v <= feas_tol { 0.0 } else { v };
        clip(self.violation)
            .total_cmp(&clip(other.violation))
            .then(self.objective.total_cmp(&other.objective))
    }

    pub fn is_feasible(&self, tol: f64) -> bool {
        self.violation <= tol
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn form(n: usize, t: Vec<(usize, usize, f64)>, q: Vec<f64>, r: f64) -> QuadraticForm {
        QuadraticForm::new(n, t, q, r).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let f = form(2, vec![(0, 0, 1.0), (1, 1, -1.0)], vec![0.0, 0.0], 0.0);
        assert_eq!(f.evaluate(&[1.0, 1.0]).unwrap(), 0.0);
        let f = form(2, vec![], vec![2.0, 3.0], 1.0);
        assert_eq!(f.evaluate(&[1.0, 1.0]).unwrap(), 6.0);
        let f = form(2, vec![(0, 1, 1.0)], vec![0.0, 0.0], 0.0);
        assert_eq!(f.evaluate(&[1.0, 2.0]).unwrap(), 4.0);
        assert!(matches!(
            f.evaluate(&[1.0]),
            Err(ProblemError::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn duplicates_are_summed_and_lower_rejected() {
        let f = form(2, vec![(0, 1, 1.0), (0, 1, 2.0), (1, 1, 1.0)], vec![0.0; 2], 0.0);
        assert_eq!(f.triplets(), &[(0, 1, 3.0), (1, 1, 1.0)]);
        assert!(matches!(
            QuadraticForm::new(2, vec![(1, 0, 1.0)], vec![0.0; 2], 0.0),
            Err(ProblemError::LowerTriangle { .. })
        ));
        assert!(matches!(
            QuadraticForm::new(2, vec![(0, 2, 1.0)], vec![0.0; 2], 0.0),
            Err(ProblemError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn assess_examples() {
        let x2m1 = form(1, vec![(0, 0, 1.0)], vec![0.0], -1.0);
        let p = QcqpProblem::new(QuadraticForm::zero(1), vec![Constraint::leq(x2m1.clone())]).unwrap();
        assert_eq!(p.assess(&[2.0]).unwrap().violation, 3.0);
        let p = QcqpProblem::new(QuadraticForm::zero(1), vec![Constraint::eq(x2m1)]).unwrap();
        assert_eq!(p.assess(&[0.0]).unwrap().violation, 1.0);
        assert_eq!(p.assess(&[1.0]).unwrap().violation, 0.0);
        let free = QcqpProblem::new(QuadraticForm::zero(3), vec![]).unwrap();
        assert_eq!(free.assess(&[1.0, 2.0, 3.0]).unwrap().violation, 0.0);
    }

    #[test]
    fn restriction_matches_evaluation() {
        let f = form(
            3,
            vec![(0, 0, 1.5), (0, 2, -0.5), (1, 2, 2.0), (2, 2, -1.0)],
            vec![0.3, -0.2, 1.0],
            0.7,
        );
        let x = [0.4, -1.3, 2.2];
        for j in 0..3 {
            let (p, q, r) = f.restrict(&x, j);
            for t in [-2.0, 0.0, 0.5, 3.0] {
                let mut y = x;
                y[j] = t;
                assert!((p * t * t + q * t + r - f.eval(&y)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn epigraph_of_square() {
        let p = QcqpProblem::new(form(1, vec![(0, 0, 1.0)], vec![0.0], 0.0), vec![]).unwrap();
        let e = p.to_epigraph();
        assert_eq!((e.dim(), e.num_constraints()), (2, 1));
        assert_eq!(e.objective().q(), &[0.0, 1.0]);
        let c = &e.constraints()[0].form;
        assert_eq!(c.triplets(), &[(0, 0, 1.0)]);
        assert_eq!(c.q(), &[0.0, -1.0]);
        for x in [-1.5, 0.2, 3.0] {
            let a = e.assess(&[x, x * x]).unwrap();
            assert_eq!(a.violation, 0.0);
            assert_eq!(a.objective, x * x);
        }
    }

    #[test]
    fn homogeneous_block_formula() {
        let p = QcqpProblem::new(form(1, vec![(0, 0, 1.0)], vec![2.0], 1.0), vec![]).unwrap();
        let h = p.to_homogeneous();
        assert_eq!(h.dim(), 2);
        assert_eq!(h.objective().to_dense(), Mat::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]));
        assert_eq!(h.num_constraints(), 1);
        assert_eq!(h.constraints()[0].sense, Sense::EqZero);
        assert_eq!(h.constraints()[0].form.triplets(), &[(1, 1, 1.0)]);
        assert_eq!(h.constraints()[0].form.r(), -1.0);
        let z = [0.7, 1.0];
        let zt = [2.1, 3.0];
        let f = h.objective().eval(&z);
        assert!((h.objective().eval(&zt) - 9.0 * f).abs() < 1e-12);
    }

    #[test]
    fn dehomogenize_examples() {
        assert_eq!(dehomogenize(&[2.0, 4.0, 2.0]).unwrap(), vec![1.0, 2.0]);
        assert_eq!(dehomogenize(&[1.0, 1.0, -1.0]).unwrap(), vec![-1.0, -1.0]);
        assert_eq!(dehomogenize(&[1.0, 0.0]), Err(ProblemError::DegenerateHomogeneous));
    }

    #[test]
    fn lexicographic_order() {
        let a = Assessment { violation: 0.0, objective: 5.0 };
        let b = Assessment { violation: 0.1, objective: -5.0 };
        let c = Assessment { violation: 0.0, objective: 4.0 };
        assert!(a.is_better_than(&b));
        assert!(c.is_better_than(&a));
        assert!(!a.is_better_than(&a));
        assert!(a.is_no_worse_than(&a));
    }
}
