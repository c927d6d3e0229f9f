//! Reference instance families and exhaustive oracles.
//!
//! All problems are minimization problems; families that maximize have
//! their objective negated. Random data comes from [`crate::rng`], so a
//! seed reproduces an instance bit for bit.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::Mat;
use crate::problem::{Assessment, Constraint, QcqpProblem, QuadraticForm, Sense};
use crate::rng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error("clause {index} is malformed: {reason}")]
    MalformedClause { index: usize, reason: String },
    #[error("matrix must be square and symmetric")]
    NotSymmetric,
    #[error("enumeration of {points} points exceeds the limit")]
    TooLarge { points: f64 },
    #[error("variable {index} has no recognizable Boolean constraint")]
    NotBoolean { index: usize },
    #[error("invalid dimensions: {0}")]
    Dimensions(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    BooleanLs,
    Partitioning,
    MaxCut,
    MaxBisection,
    MaxClique,
    ThreeSat,
    Beamforming,
}

/// Everything needed to regenerate a random instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub family: Family,
    /// Variables (complex variables for beamforming).
    pub n: usize,
    /// Rows of `A` (Boolean LS), clauses (3-SAT) or lower-bound users
    /// (beamforming). Unused by graph families.
    pub m: usize,
    /// Upper-bound users (beamforming only).
    pub l: usize,
    /// Edge probability for random graphs.
    pub density: f64,
    pub tau: f64,
    pub eta: f64,
    pub seed: u64,
}

impl InstanceSpec {
    pub fn new(family: Family, n: usize, seed: u64) -> Self {
        InstanceSpec {
            family,
            n,
            m: n,
            l: 0,
            density: 0.5,
            tau: 20.0,
            eta: 2.0,
            seed,
        }
    }
}

/// Builds the instance described by `spec`. Graph families draw a
/// symmetric 0/1 adjacency with the given edge density (upper triangle,
/// row-major); partitioning draws `W_ij ~ N(0, 1)` off the diagonal.
pub fn generate(spec: &InstanceSpec) -> Result<QcqpProblem, GenError> {
    if spec.n == 0 {
        return Err(GenError::Dimensions("n must be positive".into()));
    }
    match spec.family {
        Family::BooleanLs => {
            if spec.m == 0 {
                return Err(GenError::Dimensions("m must be positive".into()));
            }
            Ok(gen_boolean_ls(spec.m, spec.n, spec.seed))
        }
        Family::Partitioning => {
            let mut r = rng::seeded(spec.seed);
            let mut w = Mat::zeros(spec.n, spec.n);
            for i in 0..spec.n {
                for j in i + 1..spec.n {
                    let v = rng::normal(&mut r);
                    w[(i, j)] = v;
                    w[(j, i)] = v;
                }
            }
            gen_partitioning(&w)
        }
        Family::MaxCut => gen_maxcut(&random_graph(spec.n, spec.density, spec.seed, false)),
        Family::MaxBisection => gen_maxbisection(&random_graph(spec.n, spec.density, spec.seed, false)),
        Family::MaxClique => gen_maxclique(&random_graph(spec.n, spec.density, spec.seed, true)),
        Family::ThreeSat => {
            if spec.n < 3 {
                return Err(GenError::Dimensions("3-SAT needs at least 3 variables".into()));
            }
            gen_3sat(spec.n, &random_clauses(spec.n, spec.m, spec.seed))
        }
        Family::Beamforming => {
            if spec.m == 0 {
                return Err(GenError::Dimensions("m must be positive".into()));
            }
            Ok(gen_beamforming(spec.n, spec.m, spec.l, spec.tau, spec.eta, spec.seed))
        }
    }
}

/// Symmetric 0/1 adjacency; `unit_diagonal` sets `A_ii = 1`.
pub fn random_graph(n: usize, density: f64, seed: u64, unit_diagonal: bool) -> Mat {
    let mut r = rng::seeded(seed);
    let mut a = Mat::zeros(n, n);
    for i in 0..n {
        if unit_diagonal {
            a[(i, i)] = 1.0;
        }
        for j in i + 1..n {
            if rng::uniform(&mut r, 0.0, 1.0) < density {
                a[(i, j)] = 1.0;
                a[(j, i)] = 1.0;
            }
        }
    }
    a
}

/// `m` clauses of three distinct variables with random signs; literals are
/// signed 1-based indices.
pub fn random_clauses(n: usize, m: usize, seed: u64) -> Vec<[i64; 3]> {
    let mut r = rng::seeded(seed);
    (0..m)
        .map(|_| {
            let mut vars: Vec<i64> = Vec::with_capacity(3);
            while vars.len() < 3 {
                let v = 1 + (rng::uniform(&mut r, 0.0, n as f64) as i64).min(n as i64 - 1);
                if !vars.contains(&v) {
                    vars.push(v);
                }
            }
            let mut c = [0i64; 3];
            for (k, v) in vars.into_iter().enumerate() {
                c[k] = if rng::uniform(&mut r, 0.0, 1.0) < 0.5 { -v } else { v };
            }
            c
        })
        .collect()
}

fn sign_constraints(n: usize) -> Vec<Constraint> {
    (0..n)
        .map(|i| Constraint::eq(QuadraticForm::new(n, vec![(i, i, 1.0)], vec![0.0; n], -1.0).expect("x_i² − 1")))
        .collect()
}

fn binary_constraints(n: usize) -> Vec<Constraint> {
    (0..n)
        .map(|i| {
            let mut q = vec![0.0; n];
            q[i] = -1.0;
            Constraint::eq(QuadraticForm::new(n, vec![(i, i, 1.0)], q, 0.0).expect("x_i² − x_i"))
        })
        .collect()
}

/// `‖Ax − b‖²` over `x ∈ {−1, 1}ⁿ`, with `A` and `b` drawn `N(0, 1)`
/// (`A` row-major first, then `b`).
pub fn gen_boolean_ls(m: usize, n: usize, seed: u64) -> QcqpProblem {
    let mut r = rng::seeded(seed);
    let mut a = Mat::zeros(m, n);
    for i in 0..m {
        for j in 0..n {
            a[(i, j)] = rng::normal(&mut r);
        }
    }
    let b = rng::normal_vec(&mut r, m);
    boolean_ls(&a, &b)
}

/// Boolean least squares for given data.
pub fn boolean_ls(a: &Mat, b: &[f64]) -> QcqpProblem {
    let n = a.cols();
    let ata = a.transpose().matmul(a);
    let atb = a.tr_mul_vec(b);
    let q: Vec<f64> = atb.iter().map(|v| -2.0 * v).collect();
    let r: f64 = b.iter().map(|v| v * v).sum();
    let obj = QuadraticForm::from_dense(&ata, q, r).expect("finite data");
    QcqpProblem::new(obj, sign_constraints(n)).expect("consistent dimensions")
}

fn check_symmetric(w: &Mat) -> Result<(), GenError> {
    let n = w.rows();
    if !w.is_square() || (0..n).any(|i| (0..i).any(|j| w[(i, j)] != w[(j, i)])) {
        return Err(GenError::NotSymmetric);
    }
    Ok(())
}

/// Maximize `xᵀWx` over `x ∈ {−1, 1}ⁿ`, as minimization of `−xᵀWx`.
pub fn gen_partitioning(w: &Mat) -> Result<QcqpProblem, GenError> {
    check_symmetric(w)?;
    let n = w.rows();
    let obj = QuadraticForm::from_dense(&w.scaled(-1.0), vec![0.0; n], 0.0).map_err(|_| GenError::NotSymmetric)?;
    Ok(QcqpProblem::new(obj, sign_constraints(n)).expect("consistent dimensions"))
}

/// Maximize the cut weight `¼(1ᵀW1 − xᵀWx)`, as minimization of its
/// negation.
pub fn gen_maxcut(w: &Mat) -> Result<QcqpProblem, GenError> {
    check_symmetric(w)?;
    let n = w.rows();
    let total: f64 = w.data().iter().sum();
    let obj = QuadraticForm::from_dense(&w.scaled(0.25), vec![0.0; n], -0.25 * total)
        .map_err(|_| GenError::NotSymmetric)?;
    Ok(QcqpProblem::new(obj, sign_constraints(n)).expect("consistent dimensions"))
}

/// Max-cut with the balance constraint `1ᵀx = 0`.
pub fn gen_maxbisection(w: &Mat) -> Result<QcqpProblem, GenError> {
    let base = gen_maxcut(w)?;
    let n = w.rows();
    let mut cons = base.constraints().to_vec();
    cons.push(Constraint::eq(QuadraticForm::affine(vec![1.0; n], 0.0).expect("balance")));
    Ok(QcqpProblem::new(base.objective().clone(), cons).expect("consistent dimensions"))
}

/// Graph Laplacian `L = diag(W1) − W`.
pub fn laplacian(w: &Mat) -> Mat {
    let n = w.rows();
    Mat::from_fn(n, n, |i, j| {
        if i == j {
            (0..n).filter(|&k| k != i).map(|k| w[(i, k)]).sum()
        } else {
            -w[(i, j)]
        }
    })
}

/// Maximum clique: maximize `1ᵀx` over `x ∈ {0, 1}ⁿ` with `x_i x_j = 0` for
/// every non-adjacent pair.
pub fn gen_maxclique(adjacency: &Mat) -> Result<QcqpProblem, GenError> {
    check_symmetric(adjacency)?;
    let n = adjacency.rows();
    let obj = QuadraticForm::affine(vec![-1.0; n], 0.0).expect("linear objective");
    let mut cons = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if adjacency[(i, j)] == 0.0 {
                cons.push(Constraint::eq(
                    QuadraticForm::new(n, vec![(i, j, 0.5)], vec![0.0; n], 0.0).expect("x_i x_j"),
                ));
            }
        }
    }
    cons.extend(binary_constraints(n));
    Ok(QcqpProblem::new(obj, cons).expect("consistent dimensions"))
}

/// 3-SAT feasibility over `x ∈ {0, 1}ⁿ`. Literals are signed 1-based
/// variable indices; each clause becomes `Σ literals ≥ 1` with a negated
/// literal contributing `1 − x_k`.
pub fn gen_3sat(n: usize, clauses: &[[i64; 3]]) -> Result<QcqpProblem, GenError> {
    let mut cons = Vec::with_capacity(clauses.len() + n);
    for (index, clause) in clauses.iter().enumerate() {
        let bad = |reason: &str| GenError::MalformedClause {
            index,
            reason: reason.into(),
        };
        let mut q = vec![0.0; n];
        let mut r = 1.0;
        let mut seen = Vec::new();
        for &lit in clause {
            let v = lit.unsigned_abs() as usize;
            if lit == 0 || v > n {
                return Err(bad("literal out of range"));
            }
            if seen.contains(&v) {
                return Err(bad("repeated variable"));
            }
            seen.push(v);
            if lit > 0 {
                q[v - 1] = -1.0;
            } else {
                q[v - 1] = 1.0;
                r -= 1.0;
            }
        }
        cons.push(Constraint::leq(QuadraticForm::affine(q, r).expect("clause row")));
    }
    cons.extend(binary_constraints(n));
    Ok(QcqpProblem::new(QuadraticForm::zero(n), cons).expect("consistent dimensions"))
}

/// Real form of the beamforming design problem over `x = (Re w, Im w)`:
/// minimize `‖x‖²` with `|h_iᴴw|² ≥ τ` for `m` channels and `|g_jᴴw|² ≤ η`
/// for `l` channels. Each channel draws its real part, then its imaginary
/// part.
pub fn gen_beamforming(n: usize, m: usize, l: usize, tau: f64, eta: f64, seed: u64) -> QcqpProblem {
    let mut r = rng::seeded(seed);
    let mut draw = || {
        let re = rng::normal_vec(&mut r, n);
        let im = rng::normal_vec(&mut r, n);
        (re, im)
    };
    let hs: Vec<_> = (0..m).map(|_| draw()).collect();
    let gs: Vec<_> = (0..l).map(|_| draw()).collect();
    let nn = 2 * n;
    let gram = |(re, im): &(Vec<f64>, Vec<f64>), s: f64| {
        let a: Vec<f64> = re.iter().chain(im).copied().collect();
        let b: Vec<f64> = im.iter().map(|v| -v).chain(re.iter().copied()).collect();
        Mat::from_fn(nn, nn, |i, j| s * (a[i] * a[j] + b[i] * b[j]))
    };
    let mut cons = Vec::with_capacity(m + l);
    for h in &hs {
        cons.push(Constraint::leq(
            QuadraticForm::from_dense(&gram(h, -1.0), vec![0.0; nn], tau).expect("finite data"),
        ));
    }
    for g in &gs {
        cons.push(Constraint::leq(
            QuadraticForm::from_dense(&gram(g, 1.0), vec![0.0; nn], -eta).expect("finite data"),
        ));
    }
    let obj = QuadraticForm::from_dense(&Mat::identity(nn), vec![0.0; nn], 0.0).expect("identity");
    QcqpProblem::new(obj, cons).expect("consistent dimensions")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BruteMode {
    /// Enumerate `{−1, 1}` or `{0, 1}` per variable, as declared by its
    /// `x_i² = 1` or `x_i² − x_i = 0` constraint.
    Boolean,
    /// Uniform grid with `steps` points per coordinate on `[lo, hi]`.
    Grid { lo: f64, hi: f64, steps: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BruteResult {
    pub x: Vec<f64>,
    pub assessment: Assessment,
    /// Points enumerated.
    pub points: u64,
}

pub const BRUTE_MAX_BOOLEAN: usize = 24;
pub const BRUTE_MAX_GRID: f64 = 1e7;
const FEAS_TOL: f64 = 1e-9;

/// Exhaustive minimization over a finite domain. Violations up to `1e-9`
/// count as feasible; among equally good points the first enumerated wins.
pub fn brute_force(problem: &QcqpProblem, mode: BruteMode) -> Result<BruteResult, GenError> {
    let n = problem.dim();
    let domains: Vec<[f64; 2]>;
    let (total, point): (u64, Box<dyn Fn(u64) -> Vec<f64> + Sync>) = match mode {
        BruteMode::Boolean => {
            if n > BRUTE_MAX_BOOLEAN {
                return Err(GenError::TooLarge {
                    points: 2f64.powi(n as i32),
                });
            }
            domains = (0..n).map(|i| boolean_domain(problem, i)).collect::<Result<_, _>>()?;
            let d = domains.clone();
            (
                1u64 << n,
                Box::new(move |k| (0..n).map(|i| d[i][((k >> i) & 1) as usize]).collect()),
            )
        }
        BruteMode::Grid { lo, hi, steps } => {
            let pts = (steps as f64).powi(n as i32);
            if pts > BRUTE_MAX_GRID || steps == 0 {
                return Err(GenError::TooLarge { points: pts });
            }
            let h = if steps > 1 { (hi - lo) / (steps - 1) as f64 } else { 0.0 };
            (
                pts as u64,
                Box::new(move |mut k| {
                    (0..n)
                        .map(|_| {
                            let idx = k % steps as u64;
                            k /= steps as u64;
                            lo + h * idx as f64
                        })
                        .collect()
                }),
            )
        }
    };
    let best_in = |range: std::ops::Range<u64>| -> Option<(u64, Assessment)> {
        let mut best: Option<(u64, Assessment)> = None;
        for k in range {
            let a = problem.assess_unchecked(&point(k));
            if best.map_or(true, |(_, b)| a.tolerant_cmp(&b, FEAS_TOL).is_lt()) {
                best = Some((k, a));
            }
        }
        best
    };
    let chunks = 64u64;
    let step = total.div_ceil(chunks).max(1);
    let ranges: Vec<std::ops::Range<u64>> = (0..chunks)
        .map(|c| (c * step).min(total)..((c + 1) * step).min(total))
        .filter(|r| !r.is_empty())
        .collect();
    #[cfg(feature = "parallel")]
    let partial: Vec<Option<(u64, Assessment)>> = {
        use rayon::prelude::*;
        ranges.into_par_iter().map(best_in).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let partial: Vec<Option<(u64, Assessment)>> = ranges.into_iter().map(best_in).collect();
    let (k, assessment) = partial
        .into_iter()
        .flatten()
        .reduce(|a, b| if b.1.tolerant_cmp(&a.1, FEAS_TOL).is_lt() { b } else { a })
        .ok_or(GenError::Dimensions("empty enumeration".into()))?;
    Ok(BruteResult {
        x: point(k),
        assessment,
        points: total,
    })
}

fn boolean_domain(problem: &QcqpProblem, i: usize) -> Result<[f64; 2], GenError> {
    for c in problem.constraints() {
        if c.sense != Sense::EqZero {
            continue;
        }
        let f = &c.form;
        if f.triplets() != [(i, i, 1.0)] {
            continue;
        }
        let others_zero = f.q().iter().enumerate().all(|(k, &v)| k == i || v == 0.0);
        if !others_zero {
            continue;
        }
        match (f.q()[i], f.r()) {
            (0.0, r) if r == -1.0 => return Ok([-1.0, 1.0]),
            (q, r) if q == -1.0 && r == 0.0 => return Ok([0.0, 1.0]),
            _ => {}
        }
    }
    Err(GenError::NotBoolean { index: i })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boolean_ls_scalar() {
        let p = boolean_ls(&Mat::from_rows(&[vec![1.0]]), &[0.0]);
        let r = brute_force(&p, BruteMode::Boolean).unwrap();
        assert_eq!(r.assessment.objective, 1.0);
        assert_eq!(r.assessment.violation, 0.0);
    }

    #[test]
    fn boolean_ls_matches_norm() {
        let a = Mat::from_rows(&[vec![1.0, 2.0], vec![-1.0, 0.5], vec![0.3, 0.3]]);
        let b = [0.5, -1.0, 2.0];
        let p = boolean_ls(&a, &b);
        for x in [[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]] {
            let ax = a.mul_vec(&x);
            let direct: f64 = ax.iter().zip(&b).map(|(u, v)| (u - v) * (u - v)).sum();
            assert!((p.objective().eval(&x) - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn maxcut_pair() {
        let w = Mat::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let p = gen_maxcut(&w).unwrap();
        let r = brute_force(&p, BruteMode::Boolean).unwrap();
        assert_eq!(r.assessment.objective, -1.0);
        assert_eq!(r.x[0], -r.x[1]);
        let p = gen_partitioning(&w).unwrap();
        assert_eq!(brute_force(&p, BruteMode::Boolean).unwrap().assessment.objective, -2.0);
    }

    #[test]
    fn laplacian_rows_sum_to_zero() {
        let w = random_graph(6, 0.5, 3, false);
        let l = laplacian(&w);
        for s in l.mul_vec(&[1.0; 6]) {
            assert_eq!(s, 0.0);
        }
    }

    #[test]
    fn triangle_clique() {
        let a = Mat::from_rows(&[vec![1.0; 3], vec![1.0; 3], vec![1.0; 3]]);
        let r = brute_force(&gen_maxclique(&a).unwrap(), BruteMode::Boolean).unwrap();
        assert_eq!(r.assessment.objective, -3.0);
        assert_eq!(r.x, vec![1.0; 3]);
    }

    #[test]
    fn clause_row() {
        let p = gen_3sat(6, &[[1, -4, 6]]).unwrap();
        let f = &p.constraints()[0].form;
        // 1 − x₁ − (1 − x₄) − x₆ ≤ 0
        assert_eq!(f.q(), &[-1.0, 0.0, 0.0, 1.0, 0.0, -1.0]);
        assert_eq!(f.r(), 0.0);
        assert!(gen_3sat(3, &[[1, -1, 2]]).is_err());
        assert!(gen_3sat(3, &[[1, 2, 4]]).is_err());
    }

    #[test]
    fn beamforming_shape() {
        let p = gen_beamforming(50, 20, 5, 20.0, 2.0, 1);
        assert_eq!(p.dim(), 100);
        assert_eq!(p.num_constraints(), 25);
    }

    #[test]
    fn deterministic_generation() {
        let spec = InstanceSpec::new(Family::MaxClique, 8, 4);
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
    }
}
