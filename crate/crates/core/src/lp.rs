//! Dense bounded-variable simplex for small linear programs.
//!
//! Variables carry explicit bounds and are handled in the ratio tests, so box
//! constraints never become tableau rows. A cold solve runs a two-phase
//! primal simplex with Dantzig pricing that switches to Bland's rule after a
//! run of degenerate pivots. [`LpSolver`] keeps the optimal tableau so that
//! inequality rows can be appended or dropped and the problem re-solved from
//! the previous basis with the dual simplex.

use thiserror::Error;

/// minimize `cᵀy` s.t. `A y ≤ b`, `A_eq y = b_eq`, `lo ≤ y ≤ hi`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearProgram {
    pub c: Vec<f64>,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub a_eq: Vec<Vec<f64>>,
    pub b_eq: Vec<f64>,
    /// Per-variable `(lo, hi)`; infinities allowed.
    pub bounds: Vec<(f64, f64)>,
}

impl LinearProgram {
    /// Nonnegative variables, no constraints yet.
    pub fn new(c: Vec<f64>) -> Self {
        let n = c.len();
        LinearProgram {
            c,
            bounds: vec![(0.0, f64::INFINITY); n],
            ..Default::default()
        }
    }

    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn add_leq(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        self.a.push(row);
        self.b.push(rhs);
        self
    }

    pub fn add_eq(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        self.a_eq.push(row);
        self.b_eq.push(rhs);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { y: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("inconsistent dimensions: {0}")]
    Dimension(String),
    #[error("non-finite data")]
    NonFinite,
    #[error("simplex failed after {pivots} pivots: {reason}")]
    NumericalFailure { pivots: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpOptions {
    /// Per solve; defaults to `50 · (rows + cols)` when `None`.
    pub max_pivots: Option<usize>,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub degeneracy_limit: usize,
    pub feas_tol: f64,
    pub opt_tol: f64,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions {
            max_pivots: None,
            degeneracy_limit: 50,
            feas_tol: 1e-9,
            opt_tol: 1e-9,
        }
    }
}

pub fn solve_lp(lp: &LinearProgram) -> Result<LpOutcome, LpError> {
    solve_lp_with(lp, &LpOptions::default())
}

pub fn solve_lp_with(lp: &LinearProgram, opts: &LpOptions) -> Result<LpOutcome, LpError> {
    LpSolver::new(lp, *opts)?.solve()
}

fn validate(lp: &LinearProgram) -> Result<(), LpError> {
    let n = lp.c.len();
    if lp.bounds.len() != n {
        return Err(LpError::Dimension(format!("{} bounds for {} variables", lp.bounds.len(), n)));
    }
    if lp.a.len() != lp.b.len() || lp.a_eq.len() != lp.b_eq.len() {
        return Err(LpError::Dimension("row count does not match rhs length".into()));
    }
    if let Some(r) = lp.a.iter().chain(&lp.a_eq).find(|r| r.len() != n) {
        return Err(LpError::Dimension(format!("row of length {} for {} variables", r.len(), n)));
    }
    let finite = lp.c.iter().chain(&lp.b).chain(&lp.b_eq).all(|v| v.is_finite())
        && lp.a.iter().chain(&lp.a_eq).flatten().all(|v| v.is_finite())
        && lp.bounds.iter().all(|&(lo, hi)| !lo.is_nan() && !hi.is_nan());
    if finite {
        Ok(())
    } else {
        Err(LpError::NonFinite)
    }
}

#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// `y = lo + t`
    Shift { lo: f64, col: usize },
    /// `y = hi − t`
    Reflect { hi: f64, col: usize },
    /// `y = t⁺ − t⁻`
    Split { pos: usize, neg: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Place {
    Basic,
    Lower,
    Upper,
    /// artificial that has left the basis; never re-enters
    Banned,
}

#[derive(Debug, Clone)]
struct Row {
    id: usize,
    coeffs: Vec<f64>,
    rhs: f64,
    eq: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    /// no usable tableau; the next solve starts cold
    Cold,
    /// tableau optimal for the current rows
    Optimal,
    /// optimal tableau plus appended rows whose slacks may be infeasible
    Dirty,
    Infeasible,
    Unbounded,
}

enum Status {
    Optimal,
    Unbounded,
}

enum DualStatus {
    Feasible,
    Infeasible,
}

/// Incremental LP: solve, append or drop inequality rows, solve again.
///
/// Re-solves after [`LpSolver::add_leq`] start from the last optimal basis.
/// Dropping a row whose slack is basic keeps that basis optimal.
#[derive(Debug, Clone)]
pub struct LpSolver {
    opts: LpOptions,
    c: Vec<f64>,
    bounds: Vec<(f64, f64)>,
    map: Vec<VarMap>,
    n_struct: usize,
    rows: Vec<Row>,
    next_id: usize,
    // standard form, one entry per row in `rows` order
    a: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    /// slack column of each row, if it has one
    slack: Vec<Option<usize>>,
    // per column
    upper: Vec<f64>,
    cost: Vec<f64>,
    cost_scale: f64,
    art: Vec<bool>,
    // tableau rows are not aligned with `rows`
    t: Vec<Vec<f64>>,
    beta: Vec<f64>,
    d: Vec<f64>,
    basis: Vec<usize>,
    place: Vec<Place>,
    state: State,
    pivots: usize,
    budget: usize,
    since_refactor: usize,
    last_y: Option<Vec<f64>>,
}

impl LpSolver {
    pub fn new(lp: &LinearProgram, opts: LpOptions) -> Result<Self, LpError> {
        validate(lp)?;
        let mut map = Vec::with_capacity(lp.c.len());
        let mut n_struct = 0;
        for &(lo, hi) in &lp.bounds {
            if lo.is_finite() {
                map.push(VarMap::Shift { lo, col: n_struct });
                n_struct += 1;
            } else if hi.is_finite() {
                map.push(VarMap::Reflect { hi, col: n_struct });
                n_struct += 1;
            } else {
                map.push(VarMap::Split { pos: n_struct, neg: n_struct + 1 });
                n_struct += 2;
            }
        }
        let mut rows = Vec::with_capacity(lp.a.len() + lp.a_eq.len());
        for (r, &b) in lp.a.iter().zip(&lp.b) {
            rows.push(Row { id: rows.len(), coeffs: r.clone(), rhs: b, eq: false });
        }
        for (r, &b) in lp.a_eq.iter().zip(&lp.b_eq) {
            rows.push(Row { id: rows.len(), coeffs: r.clone(), rhs: b, eq: true });
        }
        Ok(LpSolver {
            opts,
            c: lp.c.clone(),
            bounds: lp.bounds.clone(),
            map,
            n_struct,
            next_id: rows.len(),
            rows,
            a: Vec::new(),
            rhs: Vec::new(),
            slack: Vec::new(),
            upper: Vec::new(),
            cost: Vec::new(),
            cost_scale: 0.0,
            art: Vec::new(),
            t: Vec::new(),
            beta: Vec::new(),
            d: Vec::new(),
            basis: Vec::new(),
            place: Vec::new(),
            state: State::Cold,
            pivots: 0,
            budget: 0,
            since_refactor: 0,
            last_y: None,
        })
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Total pivots over the solver's lifetime.
    pub fn pivots(&self) -> usize {
        self.pivots
    }

    /// Ids of the current rows in insertion order.
    pub fn row_ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.rows.iter().map(|r| r.id)
    }

    /// `rhs − a·y` at the last optimal point.
    pub fn row_slack(&self, id: usize) -> Option<f64> {
        let y = self.last_y.as_ref()?;
        let r = self.rows.iter().find(|r| r.id == id)?;
        Some(r.rhs - dot(&r.coeffs, y))
    }

    /// Appends `a·y ≤ rhs` and returns its id.
    pub fn add_leq(&mut self, coeffs: Vec<f64>, rhs: f64) -> Result<usize, LpError> {
        if coeffs.len() != self.c.len() {
            return Err(LpError::Dimension(format!(
                "row of length {} for {} variables",
                coeffs.len(),
                self.c.len()
            )));
        }
        if !rhs.is_finite() || coeffs.iter().any(|v| !v.is_finite()) {
            return Err(LpError::NonFinite);
        }
        let id = self.next_id;
        self.next_id += 1;
        let row = Row { id, coeffs, rhs, eq: false };
        if matches!(self.state, State::Optimal | State::Dirty) {
            self.append_to_tableau(&row);
            self.state = State::Dirty;
        } else {
            self.state = State::Cold;
        }
        self.rows.push(row);
        Ok(id)
    }

    /// Removes rows by id. Rows whose slack is basic are removed from the
    /// tableau in place; anything else forces the next solve to start cold.
    pub fn remove_rows(&mut self, ids: &[usize]) {
        for &id in ids {
            let Some(i) = self.rows.iter().position(|r| r.id == id) else {
                continue;
            };
            let warm = matches!(self.state, State::Optimal | State::Dirty);
            let basic_at = self.slack[..].get(i).copied().flatten().and_then(|s| {
                if warm && self.place[s] == Place::Basic {
                    self.basis.iter().position(|&b| b == s)
                } else {
                    None
                }
            });
            match basic_at {
                Some(k) => {
                    let s = self.basis[k];
                    self.t.remove(k);
                    self.beta.remove(k);
                    self.basis.remove(k);
                    self.a.remove(i);
                    self.rhs.remove(i);
                    self.slack.remove(i);
                    self.rows.remove(i);
                    let mut keep = vec![true; self.upper.len()];
                    keep[s] = false;
                    self.drop_columns(&keep);
                }
                None => {
                    self.rows.remove(i);
                    self.state = State::Cold;
                }
            }
        }
        if self.state == State::Cold {
            self.last_y = None;
        }
    }

    pub fn solve(&mut self) -> Result<LpOutcome, LpError> {
        if self.bounds.iter().any(|&(lo, hi)| lo > hi) {
            return Ok(LpOutcome::Infeasible);
        }
        match self.state {
            State::Infeasible => return Ok(LpOutcome::Infeasible),
            State::Unbounded => return Ok(LpOutcome::Unbounded),
            State::Cold => return self.solve_cold(),
            State::Optimal | State::Dirty => {}
        }
        self.budget = self.pivot_budget();
        match self.solve_warm() {
            Ok(Some(outcome)) => Ok(outcome),
            _ => self.solve_cold(),
        }
    }

    fn pivot_budget(&self) -> usize {
        self.opts
            .max_pivots
            .unwrap_or(50 * (self.rows.len() + self.n_struct + self.rows.len()).max(1))
    }

    fn to_standard(&self, row: &Row) -> (Vec<f64>, f64) {
        let mut r = vec![0.0; self.n_struct];
        let mut b = row.rhs;
        for (j, &a) in row.coeffs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            match self.map[j] {
                VarMap::Shift { lo, col } => {
                    r[col] += a;
                    b -= a * lo;
                }
                VarMap::Reflect { hi, col } => {
                    r[col] -= a;
                    b -= a * hi;
                }
                VarMap::Split { pos, neg } => {
                    r[pos] += a;
                    r[neg] -= a;
                }
            }
        }
        (r, b)
    }

    fn struct_bounds_and_costs(&self) -> (Vec<f64>, Vec<f64>) {
        let mut upper = vec![0.0; self.n_struct];
        let mut cost = vec![0.0; self.n_struct];
        for (j, m) in self.map.iter().enumerate() {
            let (lo, hi) = self.bounds[j];
            match *m {
                VarMap::Shift { col, .. } => {
                    upper[col] = hi - lo;
                    cost[col] = self.c[j];
                }
                VarMap::Reflect { col, .. } => {
                    upper[col] = f64::INFINITY;
                    cost[col] = -self.c[j];
                }
                VarMap::Split { pos, neg } => {
                    upper[pos] = f64::INFINITY;
                    upper[neg] = f64::INFINITY;
                    cost[pos] = self.c[j];
                    cost[neg] = -self.c[j];
                }
            }
        }
        (upper, cost)
    }

    fn solve_cold(&mut self) -> Result<LpOutcome, LpError> {
        self.last_y = None;
        self.state = State::Cold;
        self.build_cold();
        self.budget = self.pivot_budget();

        if self.art.iter().any(|&a| a) {
            let cost: Vec<f64> = self.art.iter().map(|&a| if a { 1.0 } else { 0.0 }).collect();
            self.set_costs(&cost);
            match self.primal(&cost)? {
                Status::Optimal => {}
                Status::Unbounded => {
                    return Err(self.failure("phase 1 reported unbounded"));
                }
            }
            let infeas: f64 = (0..self.basis.len())
                .filter(|&k| self.art[self.basis[k]])
                .map(|k| self.beta[k].max(0.0))
                .sum();
            let scale = 1.0 + self.rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if infeas > 1e-8 * scale {
                self.state = State::Infeasible;
                return Ok(LpOutcome::Infeasible);
            }
            self.drive_out_artificials();
        }

        let cost = self.cost.clone();
        self.set_costs(&cost);
        for attempt in 0..3 {
            match self.primal(&cost)? {
                Status::Unbounded => {
                    self.state = State::Unbounded;
                    return Ok(LpOutcome::Unbounded);
                }
                Status::Optimal => {}
            }
            self.refactor().map_err(|r| self.failure(&r))?;
            self.set_costs(&cost);
            if self.is_dual_feasible() && self.is_primal_feasible() {
                break;
            }
            if attempt == 2 {
                return Err(self.failure("refactored basis not optimal"));
            }
            if !self.is_primal_feasible() {
                if let DualStatus::Infeasible = self.dual()? {
                    return Err(self.failure("lost feasibility after refactorization"));
                }
            }
        }
        self.state = State::Optimal;
        self.extract()
    }

    /// `Ok(None)` asks the caller to fall back to a cold solve.
    fn solve_warm(&mut self) -> Result<Option<LpOutcome>, LpError> {
        let cost = self.cost.clone();
        for _ in 0..3 {
            if !self.is_dual_feasible() {
                return Ok(None);
            }
            if let DualStatus::Infeasible = self.dual()? {
                // a cold solve decides infeasibility from phase 1
                return Ok(None);
            }
            match self.primal(&cost)? {
                Status::Unbounded => return Ok(None),
                Status::Optimal => {}
            }
            if self.since_refactor > 3 * self.basis.len().max(100) {
                self.refactor().map_err(|r| self.failure(&r))?;
                self.set_costs(&cost);
            }
            if self.is_dual_feasible() && self.is_primal_feasible() {
                self.state = State::Optimal;
                if let Ok(o) = self.extract() {
                    return Ok(Some(o));
                }
            }
            self.refactor().map_err(|r| self.failure(&r))?;
            self.set_costs(&cost);
        }
        Ok(None)
    }

    fn failure(&self, reason: &str) -> LpError {
        LpError::NumericalFailure {
            pivots: self.pivots,
            reason: reason.into(),
        }
    }

    fn build_cold(&mut self) {
        let (mut upper, mut cost) = self.struct_bounds_and_costs();
        let m = self.rows.len();
        let n_slack = self.rows.iter().filter(|r| !r.eq).count();
        let mut a = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        let mut slack = Vec::with_capacity(m);
        let mut needs_art = Vec::with_capacity(m);
        let mut next_slack = self.n_struct;
        for row in &self.rows {
            let (mut r, mut b) = self.to_standard(row);
            r.resize(self.n_struct + n_slack, 0.0);
            if row.eq {
                slack.push(None);
            } else {
                r[next_slack] = 1.0;
                slack.push(Some(next_slack));
                next_slack += 1;
            }
            if b < 0.0 {
                r.iter_mut().for_each(|v| *v = -*v);
                b = -b;
                needs_art.push(true);
            } else {
                needs_art.push(row.eq);
            }
            a.push(r);
            rhs.push(b);
        }
        upper.resize(self.n_struct + n_slack, f64::INFINITY);
        cost.resize(self.n_struct + n_slack, 0.0);
        let art_start = upper.len();
        let n_art = needs_art.iter().filter(|&&x| x).count();
        let ncols = art_start + n_art;
        let mut basis = Vec::with_capacity(m);
        let mut k = art_start;
        for (i, r) in a.iter_mut().enumerate() {
            r.resize(ncols, 0.0);
            if needs_art[i] {
                r[k] = 1.0;
                basis.push(k);
                k += 1;
            } else {
                basis.push(slack[i].expect("inequality row has a slack"));
            }
        }
        upper.resize(ncols, f64::INFINITY);
        cost.resize(ncols, 0.0);
        let mut art = vec![false; ncols];
        art[art_start..].iter_mut().for_each(|v| *v = true);
        let mut place = vec![Place::Lower; ncols];
        for &b in &basis {
            place[b] = Place::Basic;
        }
        self.cost_scale = cost.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        self.t = a.clone();
        self.a = a;
        self.beta = rhs.clone();
        self.rhs = rhs;
        self.slack = slack;
        self.upper = upper;
        self.cost = cost;
        self.art = art;
        self.d = vec![0.0; ncols];
        self.basis = basis;
        self.place = place;
        self.since_refactor = 0;
    }

    fn append_to_tableau(&mut self, row: &Row) {
        let x = self.column_values();
        let (mut r, rhs) = self.to_standard(row);
        let s = self.upper.len();
        r.resize(s, 0.0);
        let value = rhs - dot(&r, &x);
        r.push(1.0);
        let mut tr = r.clone();
        for (k, &b) in self.basis.iter().enumerate() {
            let f = r[b];
            if f != 0.0 {
                for (v, &tv) in tr.iter_mut().zip(&self.t[k]) {
                    *v -= f * tv;
                }
                tr[b] = 0.0;
            }
        }
        tr[s] = 1.0;
        for (ar, tr) in self.a.iter_mut().zip(self.t.iter_mut()) {
            ar.push(0.0);
            tr.push(0.0);
        }
        self.a.push(r);
        self.rhs.push(rhs);
        self.slack.push(Some(s));
        self.t.push(tr);
        self.beta.push(value);
        self.basis.push(s);
        self.upper.push(f64::INFINITY);
        self.cost.push(0.0);
        self.art.push(false);
        self.d.push(0.0);
        self.place.push(Place::Basic);
    }

    fn drop_columns(&mut self, keep: &[bool]) {
        let mut remap = vec![usize::MAX; keep.len()];
        let mut next = 0;
        for (j, &k) in keep.iter().enumerate() {
            if k {
                remap[j] = next;
                next += 1;
            }
        }
        let filter = |v: &mut Vec<f64>| {
            let mut j = 0;
            v.retain(|_| {
                j += 1;
                keep[j - 1]
            });
        };
        self.a.iter_mut().for_each(filter);
        self.t.iter_mut().for_each(filter);
        let mut upper = std::mem::take(&mut self.upper);
        filter(&mut upper);
        self.upper = upper;
        let mut cost = std::mem::take(&mut self.cost);
        filter(&mut cost);
        self.cost = cost;
        let mut d = std::mem::take(&mut self.d);
        filter(&mut d);
        self.d = d;
        let mut j = 0;
        self.art.retain(|_| {
            j += 1;
            keep[j - 1]
        });
        let mut j = 0;
        self.place.retain(|_| {
            j += 1;
            keep[j - 1]
        });
        for b in self.basis.iter_mut() {
            *b = remap[*b];
        }
        for s in self.slack.iter_mut().flatten() {
            *s = remap[*s];
        }
    }

    fn set_costs(&mut self, cost: &[f64]) {
        self.d.copy_from_slice(cost);
        for (k, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb == 0.0 {
                continue;
            }
            for (dj, &tkj) in self.d.iter_mut().zip(&self.t[k]) {
                *dj -= cb * tkj;
            }
        }
        for &b in &self.basis {
            self.d[b] = 0.0;
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let p = self.t[r][j];
        let prow = {
            let row = &mut self.t[r];
            row.iter_mut().for_each(|v| *v /= p);
            row[j] = 1.0;
            row.clone()
        };
        let eliminate = |(k, row): (usize, &mut Vec<f64>)| {
            if k == r {
                return;
            }
            let f = row[j];
            if f != 0.0 {
                for (v, &pv) in row.iter_mut().zip(&prow) {
                    *v -= f * pv;
                }
                row[j] = 0.0;
            }
        };
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            if self.t.len() * prow.len() > 200_000 {
                self.t.par_iter_mut().enumerate().for_each(eliminate);
            } else {
                self.t.iter_mut().enumerate().for_each(eliminate);
            }
        }
        #[cfg(not(feature = "parallel"))]
        self.t.iter_mut().enumerate().for_each(eliminate);
        let f = self.d[j];
        if f != 0.0 {
            for (v, &pv) in self.d.iter_mut().zip(&prow) {
                *v -= f * pv;
            }
            self.d[j] = 0.0;
        }
        self.basis[r] = j;
        self.place[j] = Place::Basic;
        self.pivots += 1;
        self.since_refactor += 1;
    }

    /// Pivot basic artificials (all at zero after a feasible phase 1) out of
    /// the basis, drop rows where that is impossible as redundant, then
    /// delete the artificial columns.
    fn drive_out_artificials(&mut self) {
        let mut redundant = Vec::new();
        let mut k = 0;
        while k < self.basis.len() {
            let art = self.basis[k];
            if !self.art[art] {
                k += 1;
                continue;
            }
            let row = &self.t[k];
            let best = (0..row.len())
                .filter(|&j| !self.art[j] && self.place[j] != Place::Basic)
                .map(|j| (j, row[j].abs()))
                .filter(|&(_, a)| a > 1e-9)
                .max_by(|a, b| a.1.total_cmp(&b.1));
            match best {
                Some((j, _)) => {
                    let val = if self.place[j] == Place::Upper { self.upper[j] } else { 0.0 };
                    self.pivot(k, j);
                    self.beta[k] = val;
                    self.place[art] = Place::Banned;
                    k += 1;
                }
                None => {
                    // the artificial's own row is a combination of the others
                    let i = self.a.iter().position(|r| r[art] != 0.0).expect("artificial row");
                    redundant.push(i);
                    self.t.remove(k);
                    self.beta.remove(k);
                    self.basis.remove(k);
                    self.place[art] = Place::Banned;
                }
            }
        }
        redundant.sort_unstable();
        for &i in redundant.iter().rev() {
            self.a.remove(i);
            self.rhs.remove(i);
            self.slack.remove(i);
            self.rows.remove(i);
        }
        let keep: Vec<bool> = self.art.iter().map(|&a| !a).collect();
        self.drop_columns(&keep);
    }

    fn column_values(&self) -> Vec<f64> {
        let mut x: Vec<f64> = (0..self.upper.len())
            .map(|j| if self.place[j] == Place::Upper { self.upper[j] } else { 0.0 })
            .collect();
        for (k, &b) in self.basis.iter().enumerate() {
            x[b] = self.beta[k].clamp(0.0, self.upper[b]);
        }
        x
    }

    fn dual_tol(&self) -> f64 {
        1e-7 * (1.0 + self.cost_scale)
    }

    fn primal_tol(&self) -> f64 {
        let scale = self.rows.iter().fold(0.0f64, |m, r| m.max(r.rhs.abs()));
        self.opts.feas_tol * (1.0 + scale)
    }

    fn is_dual_feasible(&self) -> bool {
        let tol = self.dual_tol();
        (0..self.d.len()).all(|j| match self.place[j] {
            Place::Lower => self.d[j] >= -tol || self.upper[j] == 0.0,
            Place::Upper => self.d[j] <= tol,
            Place::Basic | Place::Banned => true,
        })
    }

    fn is_primal_feasible(&self) -> bool {
        let tol = self.primal_tol();
        self.basis
            .iter()
            .zip(&self.beta)
            .all(|(&b, &v)| v >= -tol && v <= self.upper[b] + tol)
    }

    fn extract(&mut self) -> Result<LpOutcome, LpError> {
        let x = self.column_values();
        let mut y: Vec<f64> = self
            .map
            .iter()
            .map(|m| match *m {
                VarMap::Shift { lo, col } => lo + x[col],
                VarMap::Reflect { hi, col } => hi - x[col],
                VarMap::Split { pos, neg } => x[pos] - x[neg],
            })
            .collect();
        for (v, &(lo, hi)) in y.iter_mut().zip(&self.bounds) {
            *v = v.clamp(lo, hi);
        }
        for row in &self.rows {
            let lhs = dot(&row.coeffs, &y);
            let mass: f64 = row.coeffs.iter().zip(&y).map(|(a, v)| (a * v).abs()).sum();
            let tol = 1e-7 * (1.0 + row.rhs.abs() + mass);
            let bad = if row.eq { (lhs - row.rhs).abs() > tol } else { lhs > row.rhs + tol };
            if bad {
                return Err(self.failure(&format!("row residual {:e}", lhs - row.rhs)));
            }
        }
        let value = dot(&self.c, &y);
        self.last_y = Some(y.clone());
        Ok(LpOutcome::Optimal { y, value })
    }

    /// Recomputes `B⁻¹A` and the basic values from the standard-form rows.
    fn refactor(&mut self) -> Result<(), String> {
        let m = self.basis.len();
        let n = self.upper.len();
        if self.a.len() != m {
            return Err("row count does not match basis size".into());
        }
        let mut rhs_adj = self.rhs.clone();
        for j in 0..n {
            if self.place[j] == Place::Upper {
                for (i, r) in self.a.iter().enumerate() {
                    rhs_adj[i] -= r[j] * self.upper[j];
                }
            }
        }
        let width = m + n + 1;
        let mut aug: Vec<Vec<f64>> = (0..m)
            .map(|i| {
                let mut r = Vec::with_capacity(width);
                r.extend(self.basis.iter().map(|&b| self.a[i][b]));
                r.extend_from_slice(&self.a[i]);
                r.push(rhs_adj[i]);
                r
            })
            .collect();
        let mut used = vec![false; m];
        let mut pivot_row = vec![0usize; m];
        for k in 0..m {
            let (pr, pv) = (0..m)
                .filter(|&i| !used[i])
                .map(|i| (i, aug[i][k].abs()))
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .ok_or("basis larger than row count")?;
            if pv < 1e-12 {
                return Err("singular basis during refactorization".into());
            }
            used[pr] = true;
            pivot_row[k] = pr;
            let piv = aug[pr][k];
            aug[pr].iter_mut().skip(k).for_each(|v| *v /= piv);
            let prow = aug[pr].clone();
            let eliminate = |(i, row): (usize, &mut Vec<f64>)| {
                if i == pr {
                    return;
                }
                let f = row[k];
                if f != 0.0 {
                    for (v, &p) in row.iter_mut().zip(&prow).skip(k) {
                        *v -= f * p;
                    }
                }
            };
            #[cfg(feature = "parallel")]
            {
                use rayon::prelude::*;
                if m * width > 200_000 {
                    aug.par_iter_mut().enumerate().for_each(eliminate);
                } else {
                    aug.iter_mut().enumerate().for_each(eliminate);
                }
            }
            #[cfg(not(feature = "parallel"))]
            aug.iter_mut().enumerate().for_each(eliminate);
        }
        for k in 0..m {
            let r = &aug[pivot_row[k]];
            self.t[k].copy_from_slice(&r[m..m + n]);
            self.beta[k] = r[m + n];
        }
        self.since_refactor = 0;
        Ok(())
    }

    fn primal(&mut self, cost: &[f64]) -> Result<Status, LpError> {
        let tol = self.opts.opt_tol * (1.0 + cost.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        let ptol = 1e-9;
        let mut degenerate = 0usize;
        let mut bland = false;
        let start = self.pivots;
        loop {
            let mut enter: Option<(usize, f64)> = None;
            for j in 0..self.d.len() {
                let score = match self.place[j] {
                    Place::Lower if self.upper[j] > 0.0 && self.d[j] < -tol => -self.d[j],
                    Place::Upper if self.d[j] > tol => self.d[j],
                    _ => continue,
                };
                if bland {
                    enter = Some((j, score));
                    break;
                }
                if enter.map_or(true, |(_, s)| score > s) {
                    enter = Some((j, score));
                }
            }
            let Some((j, _)) = enter else {
                return Ok(Status::Optimal);
            };
            if self.pivots - start >= self.budget {
                return Err(self.failure("pivot limit reached"));
            }
            let dir = if self.place[j] == Place::Lower { 1.0 } else { -1.0 };

            let mut theta = self.upper[j];
            let mut leave: Option<(usize, bool)> = None;
            let mut best_alpha = 0.0;
            for k in 0..self.basis.len() {
                let alpha = self.t[k][j] * dir;
                let b = self.basis[k];
                let (limit, to_upper) = if alpha > ptol {
                    (self.beta[k].max(0.0) / alpha, false)
                } else if alpha < -ptol && self.upper[b].is_finite() {
                    ((self.upper[b] - self.beta[k]).max(0.0) / -alpha, true)
                } else {
                    continue;
                };
                let better = match leave {
                    None => limit < theta || (limit == theta && theta.is_finite()),
                    Some((r, _)) => {
                        if limit < theta - 1e-12 * (1.0 + theta.abs()) {
                            true
                        } else if limit <= theta + 1e-12 * (1.0 + theta.abs()) {
                            if bland {
                                b < self.basis[r]
                            } else {
                                alpha.abs() > best_alpha
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    theta = if leave.is_none() { limit.min(theta) } else { limit };
                    leave = Some((k, to_upper));
                    best_alpha = alpha.abs();
                }
            }
            if theta.is_infinite() {
                return Ok(Status::Unbounded);
            }
            if leave.is_some() && self.upper[j] < theta {
                leave = None;
                theta = self.upper[j];
            }
            if theta <= 1e-12 {
                degenerate += 1;
                if degenerate > self.opts.degeneracy_limit {
                    bland = true;
                }
            } else {
                degenerate = 0;
            }

            for k in 0..self.basis.len() {
                let a = self.t[k][j];
                if a != 0.0 {
                    self.beta[k] -= a * dir * theta;
                }
            }
            match leave {
                None => {
                    self.pivots += 1;
                    self.place[j] = if dir > 0.0 { Place::Upper } else { Place::Lower };
                }
                Some((r, to_upper)) => {
                    let entering_value = if dir > 0.0 { theta } else { self.upper[j] - theta };
                    let old = self.basis[r];
                    self.pivot(r, j);
                    self.beta[r] = entering_value;
                    self.place[old] = if self.art[old] {
                        Place::Banned
                    } else if to_upper {
                        Place::Upper
                    } else {
                        Place::Lower
                    };
                }
            }
        }
    }

    /// Dual simplex from a dual-feasible basis until the basic values are
    /// within bounds.
    fn dual(&mut self) -> Result<DualStatus, LpError> {
        let ftol = self.primal_tol();
        let ptol = 1e-9;
        let start = self.pivots;
        loop {
            let mut leave: Option<(usize, f64)> = None;
            for (k, (&b, &v)) in self.basis.iter().zip(&self.beta).enumerate() {
                let infeas = if v < -ftol {
                    -v
                } else if v > self.upper[b] + ftol {
                    v - self.upper[b]
                } else {
                    continue;
                };
                if leave.map_or(true, |(_, s)| infeas > s) {
                    leave = Some((k, infeas));
                }
            }
            let Some((r, _)) = leave else {
                return Ok(DualStatus::Feasible);
            };
            if self.pivots - start >= self.budget {
                return Err(self.failure("pivot limit reached in dual simplex"));
            }
            let b = self.basis[r];
            let below = self.beta[r] < 0.0;
            let target = if below { 0.0 } else { self.upper[b] };
            let row = &self.t[r];
            let mut cands: Vec<(usize, f64, f64)> = Vec::new();
            for (j, &alpha) in row.iter().enumerate() {
                let ok = match self.place[j] {
                    Place::Lower if self.upper[j] > 0.0 => {
                        if below {
                            alpha < -ptol
                        } else {
                            alpha > ptol
                        }
                    }
                    Place::Upper => {
                        if below {
                            alpha > ptol
                        } else {
                            alpha < -ptol
                        }
                    }
                    _ => false,
                };
                if ok {
                    cands.push((j, self.d[j].abs() / alpha.abs(), alpha.abs()));
                }
            }
            cands.sort_by(|p, q| p.1.total_cmp(&q.1).then(q.2.total_cmp(&p.2)));
            // bound-flipping ratio test: pass boxed candidates while the
            // leaving row stays infeasible after flipping them
            let mut slope = (self.beta[r] - target).abs();
            let mut flips = Vec::new();
            let mut enter = None;
            for &(j, _, a) in &cands {
                let drop = a * self.upper[j];
                if drop.is_finite() && slope - drop > ftol {
                    slope -= drop;
                    flips.push(j);
                } else {
                    enter = Some(j);
                    break;
                }
            }
            let Some(j) = enter else {
                return Ok(DualStatus::Infeasible);
            };
            for &f in &flips {
                let (step, to) = if self.place[f] == Place::Lower {
                    (self.upper[f], Place::Upper)
                } else {
                    (-self.upper[f], Place::Lower)
                };
                for k in 0..self.basis.len() {
                    let a = self.t[k][f];
                    if a != 0.0 {
                        self.beta[k] -= a * step;
                    }
                }
                self.place[f] = to;
            }
            let alpha = self.t[r][j];
            let delta = (self.beta[r] - target) / alpha;
            for k in 0..self.basis.len() {
                let a = self.t[k][j];
                if a != 0.0 {
                    self.beta[k] -= a * delta;
                }
            }
            let current = if self.place[j] == Place::Upper { self.upper[j] } else { 0.0 };
            self.pivot(r, j);
            self.beta[r] = current + delta;
            self.place[b] = if below { Place::Lower } else { Place::Upper };
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
