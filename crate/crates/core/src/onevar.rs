//! Exact global minimization of a quadratic in one variable subject to
//! quadratic constraints in that variable.
//!
//! Each constraint `px² + qx + r ≤ 0` has a solution set made of at most two
//! closed intervals. Intersecting `m` of them leaves at most `m + 1` disjoint
//! intervals, and the minimizer sits at an endpoint or at the unconstrained
//! vertex of the objective.

/// Below this magnitude a leading coefficient is treated as zero.
pub const AFFINE_TOL: f64 = 1e-12;

/// Sorted, pairwise disjoint closed intervals. Endpoints may be infinite.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IntervalSet {
    intervals: Vec<(f64, f64)>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet { intervals: Vec::new() }
    }

    pub fn full() -> Self {
        IntervalSet {
            intervals: vec![(f64::NEG_INFINITY, f64::INFINITY)],
        }
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        if lo <= hi {
            IntervalSet { intervals: vec![(lo, hi)] }
        } else {
            Self::empty()
        }
    }

    /// Sorts and merges overlapping or touching intervals; drops reversed ones.
    pub fn from_intervals(mut v: Vec<(f64, f64)>) -> Self {
        v.retain(|&(a, b)| a <= b);
        v.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(v.len());
        for (a, b) in v {
            match out.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => out.push((a, b)),
            }
        }
        IntervalSet { intervals: out }
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn contains(&self, x: f64) -> bool {
        let k = self.intervals.partition_point(|&(_, b)| b < x);
        k < self.intervals.len() && self.intervals[k].0 <= x
    }

    /// The member closest to `x`, ties toward the smaller value.
    pub fn nearest(&self, x: f64) -> Option<f64> {
        if self.is_empty() {
            return None;
        }
        let k = self.intervals.partition_point(|&(_, b)| b < x);
        if k < self.intervals.len() && self.intervals[k].0 <= x {
            return Some(x);
        }
        let right = self.intervals.get(k).map(|iv| iv.0);
        let left = k.checked_sub(1).map(|i| self.intervals[i].1);
        match (left, right) {
            (Some(l), Some(r)) => Some(if x - l <= r - x { l } else { r }),
            (Some(l), None) => Some(l),
            (None, Some(r)) => Some(r),
            (None, None) => None,
        }
    }
}

/// Real roots of `px² + qx + r` in ascending order, via the sign-aware
/// formula that avoids cancellation.
pub fn quadratic_roots(p: f64, q: f64, r: f64) -> Vec<f64> {
    if p.abs() < AFFINE_TOL {
        if q.abs() < AFFINE_TOL {
            return Vec::new();
        }
        return vec![-r / q];
    }
    let disc = q * q - 4.0 * p * r;
    if disc < 0.0 {
        return Vec::new();
    }
    let s = -0.5 * (q + q.signum() * disc.sqrt());
    if s == 0.0 {
        // q = 0 and r = 0
        return vec![0.0];
    }
    let (a, b) = (s / p, r / s);
    if a == b {
        vec![a]
    } else {
        vec![a.min(b), a.max(b)]
    }
}

/// Exact solution set of `px² + qx + r ≤ 0`.
pub fn constraint_solution_set(p: f64, q: f64, r: f64) -> IntervalSet {
    if p.abs() < AFFINE_TOL {
        if q.abs() < AFFINE_TOL {
            return if r <= 0.0 { IntervalSet::full() } else { IntervalSet::empty() };
        }
        let root = -r / q;
        return if q > 0.0 {
            IntervalSet::interval(f64::NEG_INFINITY, root)
        } else {
            IntervalSet::interval(root, f64::INFINITY)
        };
    }
    let roots = quadratic_roots(p, q, r);
    match (p > 0.0, roots.as_slice()) {
        (true, []) => IntervalSet::empty(),
        (true, [x]) => IntervalSet::interval(*x, *x),
        (true, [a, b]) => IntervalSet::interval(*a, *b),
        (false, [a, b]) => IntervalSet {
            intervals: vec![(f64::NEG_INFINITY, *a), (*b, f64::INFINITY)],
        },
        (false, _) => IntervalSet::full(),
        (true, _) => unreachable!(),
    }
}

/// Solution set of `px² + qx + r = 0`: isolated roots, or the whole line
/// when the restriction vanishes identically (`|r| ≤ trivial_tol`).
pub fn equality_solution_set(p: f64, q: f64, r: f64, trivial_tol: f64) -> IntervalSet {
    if p.abs() < AFFINE_TOL && q.abs() < AFFINE_TOL {
        return if r.abs() <= trivial_tol { IntervalSet::full() } else { IntervalSet::empty() };
    }
    IntervalSet {
        intervals: quadratic_roots(p, q, r).into_iter().map(|x| (x, x)).collect(),
    }
}

/// Exact intersection by a merge over both sorted lists.
pub fn intersect(s: &IntervalSet, t: &IntervalSet) -> IntervalSet {
    let (a, b) = (&s.intervals, &t.intervals);
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        let lo = a[i].0.max(b[j].0);
        let hi = a[i].1.min(b[j].1);
        if lo <= hi {
            out.push((lo, hi));
        }
        if a[i].1 < b[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    IntervalSet { intervals: out }
}

/// Feasible set of all `≤ 0` constraints, stopping early once empty.
pub fn feasible_set(constraints: &[(f64, f64, f64)]) -> IntervalSet {
    let mut s = IntervalSet::full();
    for &(p, q, r) in constraints {
        s = intersect(&s, &constraint_solution_set(p, q, r));
        if s.is_empty() {
            break;
        }
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OnevarOutcome {
    Optimal { x: f64, f: f64 },
    Unbounded,
    Infeasible,
}

impl OnevarOutcome {
    pub fn optimal(&self) -> Option<(f64, f64)> {
        match *self {
            OnevarOutcome::Optimal { x, f } => Some((x, f)),
            _ => None,
        }
    }
}

/// Minimize `p₀x² + q₀x + r₀` subject to `px² + qx + r ≤ 0` for each triple.
pub fn solve_onevar(objective: (f64, f64, f64), constraints: &[(f64, f64, f64)]) -> OnevarOutcome {
    minimize_over(objective, &feasible_set(constraints))
}

/// Minimize a one-variable quadratic over an interval set.
pub fn minimize_over(objective: (f64, f64, f64), set: &IntervalSet) -> OnevarOutcome {
    let (p0, q0, r0) = objective;
    let f = |x: f64| (p0 * x + q0) * x + r0;
    let Some(&(first_lo, _)) = set.intervals.first() else {
        return OnevarOutcome::Infeasible;
    };
    let last_hi = set.intervals.last().map_or(0.0, |iv| iv.1);
    let flat = p0.abs() < AFFINE_TOL;
    let left_open = first_lo == f64::NEG_INFINITY;
    let right_open = last_hi == f64::INFINITY;
    if (left_open || right_open) && !flat && p0 < 0.0 {
        return OnevarOutcome::Unbounded;
    }
    if flat && ((left_open && q0 > 0.0) || (right_open && q0 < 0.0)) {
        return OnevarOutcome::Unbounded;
    }

    let mut best: Option<(f64, f64)> = None;
    let consider = |best: &mut Option<(f64, f64)>, x: f64| {
        if x.is_finite() {
            let fx = f(x);
            if best.map_or(true, |(_, fb)| fx < fb) {
                *best = Some((x, fx));
            }
        }
    };
    for &(a, b) in &set.intervals {
        consider(&mut best, a);
        consider(&mut best, b);
    }
    if !flat && p0 > 0.0 {
        let v = -q0 / (2.0 * p0);
        if set.contains(v) {
            consider(&mut best, v);
        }
    }
    if best.is_none() {
        // only the whole line remains and the objective is constant
        consider(&mut best, 0.0);
    }
    let (x, fx) = best.expect("nonempty set has a candidate");
    OnevarOutcome::Optimal { x, f: fx }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solution_set_examples() {
        assert_eq!(constraint_solution_set(1.0, -4.0, 3.0).intervals(), &[(1.0, 3.0)]);
        assert_eq!(
            constraint_solution_set(-1.0, 0.0, 1.0).intervals(),
            &[(f64::NEG_INFINITY, -1.0), (1.0, f64::INFINITY)]
        );
        assert_eq!(constraint_solution_set(0.0, 1.0, 0.0).intervals(), &[(f64::NEG_INFINITY, 0.0)]);
        assert!(constraint_solution_set(0.0, 0.0, 1.0).is_empty());
        assert_eq!(constraint_solution_set(0.0, 0.0, 0.0), IntervalSet::full());
        assert_eq!(constraint_solution_set(1.0, -2.0, 1.0).intervals(), &[(1.0, 1.0)]);
        assert_eq!(constraint_solution_set(-1.0, 2.0, -1.0), IntervalSet::full());
        assert!(constraint_solution_set(1.0, 0.0, 1.0).is_empty());
    }

    #[test]
    fn intersect_examples() {
        let s = IntervalSet::interval(1.0, 3.0);
        let t = IntervalSet::from_intervals(vec![(f64::NEG_INFINITY, -1.0), (2.0, f64::INFINITY)]);
        assert_eq!(intersect(&s, &t).intervals(), &[(2.0, 3.0)]);
        assert_eq!(intersect(&s, &IntervalSet::full()), s);
        assert!(intersect(&IntervalSet::interval(0.0, 1.0), &IntervalSet::interval(2.0, 3.0)).is_empty());
    }

    #[test]
    fn stable_roots() {
        let roots = quadratic_roots(1.0, -1e8, 1.0);
        assert!((roots[0] - 1e-8).abs() < 1e-20);
        assert!((roots[1] - 1e8).abs() < 1e-6);
    }

    #[test]
    fn solve_examples() {
        let (x, f) = solve_onevar((1.0, 0.0, 0.0), &[(1.0, -4.0, 3.0)]).optimal().unwrap();
        assert_eq!((x, f), (1.0, 1.0));
        let (x, f) = solve_onevar((1.0, -1.0, 0.25), &[(-1.0, 0.0, 1.0)]).optimal().unwrap();
        assert_eq!(x, 1.0);
        assert!((f - 0.25).abs() < 1e-15);
        assert_eq!(solve_onevar((1.0, 0.0, 0.0), &[]), OnevarOutcome::Optimal { x: 0.0, f: 0.0 });
    }

    #[test]
    fn unbounded_and_infeasible() {
        assert_eq!(solve_onevar((-1.0, 0.0, 0.0), &[(0.0, -1.0, 0.0)]), OnevarOutcome::Unbounded);
        assert_eq!(solve_onevar((0.0, 1.0, 0.0), &[]), OnevarOutcome::Unbounded);
        assert_eq!(solve_onevar((0.0, -1.0, 0.0), &[(0.0, 1.0, -2.0)]).optimal(), Some((2.0, -2.0)));
        assert_eq!(
            solve_onevar((1.0, 0.0, 0.0), &[(0.0, 1.0, 1.0), (0.0, -1.0, 1.0)]),
            OnevarOutcome::Infeasible
        );
        assert_eq!(solve_onevar((0.0, 0.0, 3.0), &[]).optimal(), Some((0.0, 3.0)));
    }

    #[test]
    fn nearest_member() {
        let s = IntervalSet::from_intervals(vec![(-3.0, -1.0), (1.0, 2.0)]);
        assert_eq!(s.nearest(0.0), Some(-1.0));
        assert_eq!(s.nearest(0.5), Some(1.0));
        assert_eq!(s.nearest(1.5), Some(1.5));
        assert_eq!(s.nearest(9.0), Some(2.0));
    }

    #[test]
    fn equality_sets() {
        assert_eq!(equality_solution_set(1.0, 0.0, -1.0, 0.0).intervals(), &[(-1.0, -1.0), (1.0, 1.0)]);
        assert_eq!(equality_solution_set(0.0, 0.0, 1e-12, 1e-10), IntervalSet::full());
    }
}
