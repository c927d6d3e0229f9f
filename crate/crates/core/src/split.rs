//! Difference-of-convex splittings `P = P₊ − P₋` with both parts PSD.

use crate::linalg::{sym_eigen, LinalgError, Mat};

#[derive(Debug, Clone, PartialEq)]
pub struct Splitting {
    pub plus: Mat,
    pub minus: Mat,
    /// Lower-triangular `(L₁, L₂)` with `P₊ = L₁L₁ᵀ` and `P₋ = L₂L₂ᵀ`, when
    /// the method produces factors.
    pub factors: Option<(Mat, Mat)>,
    /// Curvature added on top of the eigen split:
    /// `Tr P₊ + Tr P₋ − Σ|λ_i(P)|`.
    pub curvature: f64,
    /// Identity multiple used by the shift method.
    pub shift: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PivotChoice {
    /// Zero block in the `L₁` column; the Schur complement grows by `vvᵀ/δ`.
    #[default]
    V1Zero,
    /// Zero block in the `L₂` column; the Schur complement shrinks by
    /// `vvᵀ/(δ + a)`.
    V2Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum SplitMethod {
    Shift,
    #[default]
    Eigen,
    Ldl,
    CholeskyDiff {
        delta: Option<f64>,
        choice: PivotChoice,
    },
}

pub fn split(p: &Mat, method: SplitMethod) -> Result<Splitting, LinalgError> {
    match method {
        SplitMethod::Shift => split_shift(p),
        SplitMethod::Eigen => split_eigen(p),
        SplitMethod::Ldl => split_ldl(p),
        SplitMethod::CholeskyDiff { delta, choice } => {
            split_cholesky_diff(p, delta.unwrap_or_else(|| default_delta(p)), choice)
        }
    }
}

fn nuclear_norm(p: &Mat) -> Result<f64, LinalgError> {
    Ok(sym_eigen(p)?.values.iter().map(|v| v.abs()).sum())
}

fn curvature(plus: &Mat, minus: &Mat, p: &Mat) -> Result<f64, LinalgError> {
    Ok(plus.trace() + minus.trace() - nuclear_norm(p)?)
}

/// Adds the smallest identity multiple that makes one side PSD, choosing
/// between `(P + tI, tI)` and `(tI, tI − P)` by the smaller `t`. Ties go to
/// the first form.
pub fn split_shift(p: &Mat) -> Result<Splitting, LinalgError> {
    if !p.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let n = p.rows();
    if n == 0 {
        return Ok(zero_split(0));
    }
    let e = sym_eigen(p)?;
    let t_up = (-e.min_value()).max(0.0);
    let t_down = e.max_value().max(0.0);
    let (plus, minus, t) = if t_up <= t_down {
        (p.add_diag(t_up), Mat::identity(n).scaled(t_up), t_up)
    } else {
        (Mat::identity(n).scaled(t_down), Mat::identity(n).scaled(t_down).sub(p), t_down)
    };
    let nuclear: f64 = e.values.iter().map(|v| v.abs()).sum();
    Ok(Splitting {
        curvature: plus.trace() + minus.trace() - nuclear,
        plus,
        minus,
        factors: None,
        shift: Some(t),
    })
}

/// Sign split of the eigenvalues; adds no curvature.
pub fn split_eigen(p: &Mat) -> Result<Splitting, LinalgError> {
    if !p.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    if p.rows() == 0 {
        return Ok(zero_split(0));
    }
    let e = sym_eigen(p)?;
    let plus = e.reconstruct_with(|l| l.max(0.0));
    let minus = e.reconstruct_with(|l| (-l).max(0.0));
    let nuclear: f64 = e.values.iter().map(|v| v.abs()).sum();
    Ok(Splitting {
        curvature: plus.trace() + minus.trace() - nuclear,
        plus,
        minus,
        factors: None,
        shift: None,
    })
}

/// `P = LDLᵀ` with diagonal `D`, split by the signs of `D`. Falls back to
/// [`split_cholesky_diff`] when a pivot is too small to continue without
/// a 2×2 block.
pub fn split_ldl(p: &Mat) -> Result<Splitting, LinalgError> {
    if !p.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let n = p.rows();
    let delta = default_delta(p);
    let mut m = p.clone();
    let mut l = Mat::identity(n);
    let mut d = vec![0.0; n];
    for k in 0..n {
        let a = m[(k, k)];
        let tail_nonzero = (k + 1..n).any(|i| m[(i, k)] != 0.0);
        if a.abs() <= delta && tail_nonzero {
            return split_cholesky_diff(p, delta, PivotChoice::V1Zero);
        }
        d[k] = a;
        if a == 0.0 {
            continue;
        }
        for i in k + 1..n {
            l[(i, k)] = m[(i, k)] / a;
        }
        for j in k + 1..n {
            let ljk = l[(j, k)];
            if ljk == 0.0 {
                continue;
            }
            for i in j..n {
                let v = m[(i, j)] - l[(i, k)] * ljk * a;
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
    }
    let l1 = Mat::from_fn(n, n, |i, j| l[(i, j)] * d[j].max(0.0).sqrt());
    let l2 = Mat::from_fn(n, n, |i, j| l[(i, j)] * (-d[j]).max(0.0).sqrt());
    from_factors(p, l1, l2)
}

/// Relative default for the difference-of-Cholesky threshold.
pub fn default_delta(p: &Mat) -> f64 {
    let maxdiag = (0..p.rows()).fold(0.0f64, |m, i| m.max(p[(i, i)].abs()));
    1e-8 * (1.0 + maxdiag)
}

pub fn split_cholesky_diff(p: &Mat, delta: f64, choice: PivotChoice) -> Result<Splitting, LinalgError> {
    Ok(split_cholesky_diff_instrumented(p, delta, choice)?.0)
}

/// As [`split_cholesky_diff`], also returning the smallest divisor used
/// (`+∞` when no division happened).
pub fn split_cholesky_diff_instrumented(
    p: &Mat,
    delta: f64,
    choice: PivotChoice,
) -> Result<(Splitting, f64), LinalgError> {
    if !p.is_finite() || !delta.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    assert!(delta > 0.0, "delta must be positive");
    let n = p.rows();
    let mut m = p.symmetrized();
    let mut l1 = Mat::zeros(n, n);
    let mut l2 = Mat::zeros(n, n);
    let mut min_div = f64::INFINITY;
    let sd = delta.sqrt();
    for k in 0..n {
        let raw = m[(k, k)];
        // work on −M when the pivot is negative, then swap roles
        let sign = if raw < 0.0 { -1.0 } else { 1.0 };
        let a = sign * raw;
        let v: Vec<f64> = (k + 1..n).map(|i| sign * m[(i, k)]).collect();
        let (c1, c2) = if k + 1 == n {
            (a.sqrt(), 0.0)
        } else if a > delta {
            (a.sqrt(), 0.0)
        } else {
            ((delta + a).sqrt(), sd)
        };
        // columns (c1; w1) and (c2; w2) for the sign-adjusted matrix
        let (w1, w2, update): (Vec<f64>, Vec<f64>, f64);
        if k + 1 == n {
            w1 = Vec::new();
            w2 = Vec::new();
            update = 0.0;
        } else if a > delta {
            min_div = min_div.min(c1);
            w1 = v.iter().map(|x| x / c1).collect();
            w2 = vec![0.0; v.len()];
            update = -1.0 / a;
        } else {
            match choice {
                PivotChoice::V1Zero => {
                    min_div = min_div.min(sd);
                    w1 = vec![0.0; v.len()];
                    w2 = v.iter().map(|x| -x / sd).collect();
                    update = 1.0 / delta;
                }
                PivotChoice::V2Zero => {
                    min_div = min_div.min(c1);
                    w1 = v.iter().map(|x| x / c1).collect();
                    w2 = vec![0.0; v.len()];
                    update = -1.0 / (delta + a);
                }
            }
        }
        let (dst1, dst2) = if sign > 0.0 { (&mut l1, &mut l2) } else { (&mut l2, &mut l1) };
        dst1[(k, k)] = c1;
        dst2[(k, k)] = c2;
        for (off, i) in (k + 1..n).enumerate() {
            dst1[(i, k)] = w1[off];
            dst2[(i, k)] = w2[off];
        }
        // Schur complement of the sign-adjusted matrix is M' + update·vvᵀ;
        // the true complement is sign times that.
        for (oj, j) in (k + 1..n).enumerate() {
            for (oi, i) in (k + 1..n).enumerate().skip(oj) {
                let val = m[(i, j)] + sign * update * v[oi] * v[oj];
                m[(i, j)] = val;
                m[(j, i)] = val;
            }
        }
    }
    Ok((from_factors(p, l1, l2)?, min_div))
}

fn from_factors(p: &Mat, l1: Mat, l2: Mat) -> Result<Splitting, LinalgError> {
    let plus = l1.matmul(&l1.transpose());
    let minus = l2.matmul(&l2.transpose());
    Ok(Splitting {
        curvature: curvature(&plus, &minus, p)?,
        plus,
        minus,
        factors: Some((l1, l2)),
        shift: None,
    })
}

fn zero_split(n: usize) -> Splitting {
    Splitting {
        plus: Mat::zeros(n, n),
        minus: Mat::zeros(n, n),
        factors: None,
        curvature: 0.0,
        shift: Some(0.0),
    }
}
