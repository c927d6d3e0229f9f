//! Dense linear algebra kernels.
//!
//! Everything here works on small to medium dense matrices stored
//! column-major. The symmetric eigensolver is a cyclic Jacobi scheme, which
//! keeps the eigenvector basis orthogonal to working precision.

use std::ops::{Index, IndexMut};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("matrix is not positive definite (pivot {index} = {pivot:e})")]
    NotSpd { index: usize, pivot: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Column-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    /// Builds a matrix from row slices. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Mat::from_fn(r, c, |i, j| rows[i][j])
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Mat::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        let mut y = vec![0.0; self.rows];
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            for (yi, &a) in y.iter_mut().zip(self.col(j)) {
                *yi += a * xj;
            }
        }
        y
    }

    /// `selfᵀ x`.
    pub fn tr_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows);
        (0..self.cols).map(|j| dot(self.col(j), x)).collect()
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            for k in 0..self.cols {
                let b = other[(k, j)];
                if b == 0.0 {
                    continue;
                }
                let a = self.col(k);
                let dst = &mut out.data[j * self.rows..(j + 1) * self.rows];
                for (d, &av) in dst.iter_mut().zip(a) {
                    *d += av * b;
                }
            }
        }
        out
    }

    pub fn scaled(&self, s: f64) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &Mat) -> Mat {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        self.axpy(-1.0, other)
    }

    /// `self + alpha * other`.
    pub fn axpy(&self, alpha: f64, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + alpha * b)
                .collect(),
        }
    }

    pub fn add_diag(&self, t: f64) -> Mat {
        let mut m = self.clone();
        for i in 0..self.rows.min(self.cols) {
            m[(i, i)] += t;
        }
        m
    }

    pub fn frob_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `(A + Aᵀ) / 2`.
    pub fn symmetrized(&self) -> Mat {
        assert!(self.is_square());
        Mat::from_fn(self.rows, self.cols, |i, j| 0.5 * (self[(i, j)] + self[(j, i)]))
    }

    /// `xᵀ A x` for square `A`.
    pub fn quad(&self, x: &[f64]) -> f64 {
        dot(x, &self.mul_vec(x))
    }

    /// Principal submatrix on `idx`.
    pub fn submatrix(&self, idx: &[usize]) -> Mat {
        Mat::from_fn(idx.len(), idx.len(), |i, j| self[(idx[i], idx[j])])
    }

    /// `Σ w_k v_k v_kᵀ` for the columns `v_k` of `self`.
    pub fn weighted_gram(&self, weights: &[f64]) -> Mat {
        assert_eq!(weights.len(), self.cols);
        let n = self.rows;
        let mut out = Mat::zeros(n, n);
        for (k, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let v = self.col(k);
            for j in 0..n {
                let s = w * v[j];
                if s == 0.0 {
                    continue;
                }
                let dst = out.col_mut(j);
                for (d, &vi) in dst.iter_mut().zip(v) {
                    *d += vi * s;
                }
            }
        }
        out
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[j * self.rows + i]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[j * self.rows + i]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Symmetric eigendecomposition `P = Q diag(values) Qᵀ`, values ascending.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: Mat,
}

impl EigenDecomposition {
    pub fn min_value(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// `Q diag(f(λ)) Qᵀ`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> Mat {
        let w: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        self.vectors.weighted_gram(&w)
    }

    pub fn reconstruct(&self) -> Mat {
        self.reconstruct_with(|l| l)
    }
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// The input is symmetrized as `(P + Pᵀ)/2` first.
pub fn sym_eigen(p: &Mat) -> Result<EigenDecomposition, LinalgError> {
    if !p.is_square() {
        return Err(LinalgError::DimensionMismatch {
            expected: p.rows(),
            got: p.cols(),
        });
    }
    if !p.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let n = p.rows();
    let mut a = p.symmetrized();
    let mut v = Mat::identity(n);
    let scale = a.frob_norm();
    if n <= 1 || scale == 0.0 {
        return Ok(sorted(a, v));
    }

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for j in 0..n {
            for i in 0..j {
                off += a[(i, j)] * a[(i, j)];
            }
        }
        if off.sqrt() <= f64::EPSILON * scale * 0.5 {
            break;
        }
        for q in 1..n {
            for pi in 0..q {
                let apq = a[(pi, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = a[(pi, pi)];
                let aqq = a[(q, q)];
                // Skip rotations that cannot change the diagonal any more.
                if apq.abs() <= f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
                    a[(pi, q)] = 0.0;
                    a[(q, pi)] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut a, &mut v, pi, q, c, s, t);
            }
        }
    }
    Ok(sorted(a, v))
}

fn rotate(a: &mut Mat, v: &mut Mat, p: usize, q: usize, c: f64, s: f64, t: f64) {
    let n = a.rows();
    let apq = a[(p, q)];
    a[(p, p)] -= t * apq;
    a[(q, q)] += t * apq;
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        let nkp = c * akp - s * akq;
        let nkq = s * akp + c * akq;
        a[(k, p)] = nkp;
        a[(p, k)] = nkp;
        a[(k, q)] = nkq;
        a[(q, k)] = nkq;
    }
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

fn sorted(a: Mat, v: Mat) -> EigenDecomposition {
    let n = a.rows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = Mat::from_fn(n, n, |i, k| v[(i, order[k])]);
    EigenDecomposition { values, vectors }
}

/// Cholesky factor `L` of a symmetric positive definite matrix, kept for
/// repeated back-solves.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    l: Mat,
}

/// Relative pivot floor: a pivot below `SPD_PIVOT_TOL * trace / n` is
/// treated as singular.
pub const SPD_PIVOT_TOL: f64 = 1e-12;

pub fn factor_spd(p: &Mat) -> Result<SpdFactor, LinalgError> {
    if !p.is_square() {
        return Err(LinalgError::DimensionMismatch {
            expected: p.rows(),
            got: p.cols(),
        });
    }
    if !p.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let n = p.rows();
    let floor = SPD_PIVOT_TOL * (p.trace().abs() / n.max(1) as f64);
    let mut l = Mat::zeros(n, n);
    for j in 0..n {
        let mut d = p[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > floor) {
            return Err(LinalgError::NotSpd { index: j, pivot: d });
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut s = 0.5 * (p[(i, j)] + p[(j, i)]);
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(SpdFactor { l })
}

impl SpdFactor {
    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    pub fn lower(&self) -> &Mat {
        &self.l
    }

    pub fn back_solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let l = &self.l;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= l[(i, k)] * y[k];
            }
            y[i] = s / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= l[(k, i)] * y[k];
            }
            y[i] = s / l[(i, i)];
        }
        y
    }
}

pub fn solve_spd(p: &Mat, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    if b.len() != p.rows() {
        return Err(LinalgError::DimensionMismatch {
            expected: p.rows(),
            got: b.len(),
        });
    }
    Ok(factor_spd(p)?.back_solve(b))
}

/// Nearest PSD matrix in Frobenius norm, by clipping negative eigenvalues.
/// Also returns the most negative eigenvalue that was clipped (0 if none).
pub fn psd_project_with_repair(s: &Mat) -> Result<(Mat, f64), LinalgError> {
    let eig = sym_eigen(s)?;
    let repair = eig.min_value().min(0.0);
    Ok((eig.reconstruct_with(|l| l.max(0.0)), repair))
}

pub fn psd_project(s: &Mat) -> Result<Mat, LinalgError> {
    psd_project_with_repair(s).map(|(m, _)| m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EigBoundMode {
    #[default]
    Exact,
    Gershgorin,
}

/// A lower bound on the smallest eigenvalue.
pub fn min_eig_bound(p: &Mat, mode: EigBoundMode) -> f64 {
    let n = p.rows();
    if n == 0 {
        return 0.0;
    }
    match mode {
        EigBoundMode::Exact => match sym_eigen(p) {
            Ok(e) => e.min_value(),
            Err(_) => f64::NEG_INFINITY,
        },
        EigBoundMode::Gershgorin => gershgorin_min(p),
    }
}

pub fn gershgorin_min(p: &Mat) -> f64 {
    let n = p.rows();
    (0..n)
        .map(|i| {
            let radius: f64 = (0..n).filter(|&j| j != i).map(|j| p[(i, j)].abs()).sum();
            p[(i, i)] - radius
        })
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_sym(n: usize, seed: u64) -> Mat {
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let a = Mat::from_fn(n, n, |_, _| next());
        a.symmetrized()
    }

    #[test]
    fn identity_eigenvalues() {
        let e = sym_eigen(&Mat::identity(3)).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn swap_matrix_eigenpairs() {
        let p = Mat::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let e = sym_eigen(&p).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v0 = e.vectors.col(0);
        let v1 = e.vectors.col(1);
        assert!((v0[0] * v0[1] + 0.5).abs() < 1e-14, "{v0:?}");
        assert!((v1[0].abs() - h).abs() < 1e-14 && (v1[0] - v1[1]).abs() < 1e-14);
    }

    #[test]
    fn diagonal_sorted() {
        let e = sym_eigen(&Mat::diag(&[3.0, -2.0, 5.0])).unwrap();
        assert_eq!(e.values, vec![-2.0, 3.0, 5.0]);
    }

    #[test]
    fn non_finite_rejected() {
        let p = Mat::diag(&[1.0, f64::NAN]);
        assert_eq!(sym_eigen(&p).unwrap_err(), LinalgError::NonFinite);
    }

    #[test]
    fn reconstruction_and_orthogonality() {
        for (n, seed) in [(1, 1), (5, 2), (17, 3), (60, 4), (200, 5)] {
            let p = random_sym(n, seed);
            let e = sym_eigen(&p).unwrap();
            let rec = e.reconstruct().sub(&p).frob_norm();
            assert!(rec <= 1e-9 * (1.0 + p.frob_norm()), "n={n} rec={rec}");
            let qtq = e.vectors.transpose().matmul(&e.vectors).sub(&Mat::identity(n));
            assert!(qtq.frob_norm() <= 1e-9, "n={n}");
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn spd_solves() {
        let x = solve_spd(&Mat::identity(2).scaled(2.0), &[4.0, 6.0]).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-14 && (x[1] - 3.0).abs() < 1e-14);
        let p = Mat::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        let x = solve_spd(&p, &[3.0, 3.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cached_factor_matches_fresh_solve() {
        for seed in 0..100u64 {
            let n = 1 + (seed as usize % 9);
            let g = random_sym(n, seed + 100);
            let p = g.matmul(&g).add_diag(0.5);
            let b: Vec<f64> = (0..n).map(|i| (i as f64 + seed as f64).sin()).collect();
            let f = factor_spd(&p).unwrap();
            let a = f.back_solve(&b);
            let c = solve_spd(&p, &b).unwrap();
            for (u, v) in a.iter().zip(&c) {
                assert!((u - v).abs() <= 1e-10);
            }
            let r: Vec<f64> = p.mul_vec(&a).iter().zip(&b).map(|(u, v)| u - v).collect();
            assert!(norm2(&r) <= 1e-8 * (1.0 + norm2(&b)));
        }
    }

    #[test]
    fn spd_residual_with_bad_conditioning() {
        let n = 8;
        let q = sym_eigen(&random_sym(n, 77)).unwrap().vectors;
        let vals: Vec<f64> = (0..n).map(|i| 10f64.powf(6.0 * i as f64 / (n - 1) as f64)).collect();
        let p = q.weighted_gram(&vals);
        let b = vec![1.0; n];
        let x = solve_spd(&p, &b).unwrap();
        let r: Vec<f64> = p.mul_vec(&x).iter().zip(&b).map(|(u, v)| u - v).collect();
        assert!(norm2(&r) <= 1e-8 * (1.0 + norm2(&b)));
    }

    #[test]
    fn indefinite_is_not_spd() {
        let p = Mat::diag(&[1.0, -1.0]);
        assert!(matches!(factor_spd(&p), Err(LinalgError::NotSpd { index: 1, .. })));
    }

    #[test]
    fn psd_projection() {
        let (m, repair) = psd_project_with_repair(&Mat::diag(&[1.0, -1.0])).unwrap();
        assert!(m.sub(&Mat::diag(&[1.0, 0.0])).frob_norm() < 1e-15);
        assert_eq!(repair, -1.0);
        let g = random_sym(4, 9);
        let s = g.matmul(&g);
        assert!(psd_project(&s).unwrap().sub(&s).frob_norm() < 1e-10);
    }

    #[test]
    fn psd_projection_is_nearest_on_grid() {
        // Brute force over 2x2 PSD matrices [[a, b], [b, c]] on a grid.
        let s = Mat::from_rows(&[vec![0.3, 0.9], vec![0.9, -0.4]]);
        let proj = psd_project(&s).unwrap();
        let best_proj = proj.sub(&s).frob_norm();
        let steps = 120;
        let mut best_grid = f64::INFINITY;
        for ia in 0..=steps {
            let a = 1.5 * ia as f64 / steps as f64;
            for ic in 0..=steps {
                let c = 1.5 * ic as f64 / steps as f64;
                for ib in 0..=2 * steps {
                    let b = -1.5 + 1.5 * ib as f64 / steps as f64;
                    if a * c < b * b {
                        continue;
                    }
                    let cand = Mat::from_rows(&[vec![a, b], vec![b, c]]);
                    best_grid = best_grid.min(cand.sub(&s).frob_norm());
                }
            }
        }
        assert!(best_proj <= best_grid + 1e-12);
        assert!(best_grid - best_proj < 0.02);
    }

    #[test]
    fn eig_bounds() {
        assert_eq!(min_eig_bound(&Mat::identity(3), EigBoundMode::Exact), 1.0);
        let p = Mat::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert!((min_eig_bound(&p, EigBoundMode::Exact) + 1.0).abs() < 1e-14);
        assert_eq!(min_eig_bound(&p, EigBoundMode::Gershgorin), -1.0);
        for seed in 0..100 {
            let p = random_sym(1 + seed as usize % 12, seed);
            let exact = min_eig_bound(&p, EigBoundMode::Exact);
            assert!(min_eig_bound(&p, EigBoundMode::Gershgorin) <= exact + 1e-12);
        }
    }
}
