//! Acceptance suite: runs every criterion at its stated tolerance and time
//! budget and prints one PASS/FAIL line per criterion. Exits nonzero if any
//! criterion fails.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use qcqp::generators::{gen_beamforming, gen_boolean_ls, gen_partitioning, generate, random_graph, Family, InstanceSpec};
use qcqp::improve::{
    cover_forms, greedy_clique, improve_admm, improve_admm_from, improve_ccp, improve_coordinate_descent,
    improve_round, improve_sequence, scale_to_cover, Admm, AdmmOptions, AdmmPhase, AdmmState, CcpOptions, CdOptions,
    ImproveError, ImproveMethod, ImproveReport, Rounder,
};
use qcqp::linalg::{min_eig_bound, EigBoundMode, Mat};
use qcqp::oneconstraint::Projector;
use qcqp::onevar::{solve_onevar, OnevarOutcome};
use qcqp::relax::{sample_from_lifted, sdr_bound_cutting_plane, spectral_bound, CuttingPlaneOptions};
use qcqp::rng::{normal, normal_vec, seeded, uniform, Rng};
use qcqp::split::{default_delta, split, split_cholesky_diff_instrumented, PivotChoice, SplitMethod};
use qcqp::suggest::{suggest_random, suggest_sdr};
use qcqp::{Assessment, QcqpProblem, QuadraticForm};
use qcqp_cli::pipeline::{BoundMethod, PipelineConfig, RunReport};
use qcqp_cli::{run_pipeline, save_problem};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within_budget(start: Instant, budget_s: f64, detail: String) -> Outcome {
    let t = start.elapsed().as_secs_f64();
    check(t < budget_s, format!("{detail}; {t:.1} s (budget {budget_s} s)"))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn quad(w: &Mat, x: &[f64]) -> f64 {
    let n = x.len();
    (0..n).map(|i| x[i] * (0..n).map(|j| w[(i, j)] * x[j]).sum::<f64>()).sum()
}

fn random_sym(r: &mut Rng, n: usize) -> Mat {
    let mut m = Mat::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = normal(r);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Cyclic Jacobi eigensolver, ascending eigenvalues with eigenvectors as
/// columns.
fn jacobi_eigen(a: &Mat) -> (Vec<f64>, Mat) {
    let n = a.rows();
    let mut a = a.clone();
    let mut v = Mat::identity(n);
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[(i, j)].powi(2)).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = Mat::from_fn(n, n, |i, k| v[(i, order[k])]);
    (values, vectors)
}

/// Real roots of `p t² + q t + r`.
fn roots(p: f64, q: f64, r: f64) -> Vec<f64> {
    if p == 0.0 {
        return if q == 0.0 { vec![] } else { vec![-r / q] };
    }
    let d = q * q - 4.0 * p * r;
    if d < 0.0 {
        return vec![];
    }
    let s = -0.5 * (q + if q >= 0.0 { d.sqrt() } else { -d.sqrt() });
    if s == 0.0 {
        return vec![0.0];
    }
    vec![s / p, r / s]
}

/// Minimum over all `±1` points.
fn enumerate_signs(p: &QcqpProblem) -> f64 {
    let n = p.dim();
    let mut best = f64::INFINITY;
    let mut x = vec![-1.0; n];
    for mask in 0u64..1 << n {
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = if mask >> i & 1 == 1 { 1.0 } else { -1.0 };
        }
        best = best.min(p.objective().eval(&x));
    }
    best
}

// 1. one-variable problems against a grid plus every root and stationary point
fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut r = seeded(1);
    let f = |(p, q, c): (f64, f64, f64), x: f64| p * x * x + q * x + c;
    let mut worst = 0.0f64;
    let mut failures = 0;
    for _ in 0..1000 {
        let triple = |r: &mut Rng| (uniform(r, -3.0, 3.0), uniform(r, -3.0, 3.0), uniform(r, -3.0, 3.0));
        let obj = triple(&mut r);
        let m = (uniform(&mut r, 0.0, 10.0) as usize).min(9);
        let mut cons: Vec<(f64, f64, f64)> = (0..m).map(|_| triple(&mut r)).collect();
        cons.push((1.0, 0.0, -100.0));
        let mut pts: Vec<f64> = (0..=20_000).map(|k| -10.0 + k as f64 * 1e-3).collect();
        for &(p, q, c) in &cons {
            pts.extend(roots(p, q, c));
        }
        pts.push(-obj.1 / (2.0 * obj.0));
        let feasible = |x: f64| cons.iter().all(|&c| f(c, x) <= 1e-9 * (1.0 + c.0.abs() + c.1.abs() + c.2.abs()) * (1.0 + x * x));
        let oracle = pts.into_iter().filter(|&x| feasible(x)).map(|x| f(obj, x)).min_by(f64::total_cmp);
        match (solve_onevar(obj, &cons), oracle) {
            (OnevarOutcome::Optimal { x, f: v }, Some(o)) => {
                worst = worst.max((v - o).abs());
                if (v - o).abs() > 1e-6 || !feasible(x) {
                    failures += 1;
                }
            }
            (OnevarOutcome::Infeasible, None) => {}
            (OnevarOutcome::Optimal { x, .. }, None) if cons.iter().all(|&c| f(c, x) <= 1e-7) => {}
            _ => failures += 1,
        }
    }
    let detail = format!("{} of 1000 agree, max objective gap {worst:.1e}", 1000 - failures);
    if failures > 0 {
        return Err(detail);
    }
    within_budget(start, 5.0, detail)
}

/// `QᵀΛQ` with random orthogonal `Q` and eigenvalues of both signs.
fn mixed_sign_matrix(r: &mut Rng, n: usize) -> Mat {
    let mut q: Vec<Vec<f64>> = Vec::new();
    while q.len() < n {
        let mut v = normal_vec(r, n);
        for u in &q {
            let d = dot(&v, u);
            v.iter_mut().zip(u).for_each(|(a, b)| *a -= d * b);
        }
        let s = norm(&v);
        if s > 1e-6 {
            q.push(v.iter().map(|a| a / s).collect());
        }
    }
    let lambda: Vec<f64> = (0..n)
        .map(|k| {
            let mag = uniform(r, 0.1, 3.0);
            match k {
                0 => mag,
                1 => -mag,
                _ => mag * if uniform(r, 0.0, 1.0) < 0.5 { -1.0 } else { 1.0 },
            }
        })
        .collect();
    Mat::from_fn(n, n, |i, j| (0..n).map(|k| q[k][i] * lambda[k] * q[k][j]).sum())
}

// 2. projections onto one quadratic constraint
fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut r = seeded(2);
    let (mut kkt_fail, mut grid_fail, mut errors, mut grid_cases) = (0, 0, 0, 0);
    let mut worst_kkt = 0.0f64;
    let mut worst_grid = 0.0f64;
    for trial in 0..500 {
        let n = if trial % 5 == 0 { 2 } else { 2 + (uniform(&mut r, 0.0, 19.0) as usize).min(18) };
        let pm = mixed_sign_matrix(&mut r, n);
        let q: Vec<f64> = normal_vec(&mut r, n);
        let c = normal(&mut r);
        let form = QuadraticForm::from_dense(&pm, q.clone(), c).unwrap();
        let z: Vec<f64> = normal_vec(&mut r, n).iter().map(|v| 2.0 * v).collect();
        let eq = trial % 2 == 0;
        let proj = Projector::new(&form).and_then(|p| if eq { p.project_eq(&z) } else { p.project_ineq(&z) });
        let Ok(res) = proj else {
            errors += 1;
            continue;
        };
        // stationarity and feasibility recomputed here
        let x = &res.x;
        let grad: Vec<f64> = (0..n).map(|i| 2.0 * (0..n).map(|j| pm[(i, j)] * x[j]).sum::<f64>() + q[i]).collect();
        let fx = quad(&pm, x) + dot(&q, x) + c;
        let stat: Vec<f64> = (0..n).map(|i| 2.0 * (x[i] - z[i]) + res.nu * grad[i]).collect();
        let feas = if eq { fx.abs() } else { fx.max(0.0) };
        let mut kkt = norm(&stat).max(feas);
        if !eq && (res.nu < 0.0 || (res.nu * fx).abs() > 1e-7 * (1.0 + norm(&z))) {
            kkt = f64::INFINITY;
        }
        worst_kkt = worst_kkt.max(kkt / (1.0 + norm(&z)));
        if kkt > 1e-7 * (1.0 + norm(&z)) {
            kkt_fail += 1;
        }
        if n == 2 {
            grid_cases += 1;
            let fz = quad(&pm, &z) + dot(&q, &z) + c;
            let dist = if !eq && fz <= 0.0 {
                0.0
            } else {
                let pz = pm.mul_vec(&z);
                // distance to the boundary along the ray at angle θ
                let ray = |th: f64| {
                    let d = [th.cos(), th.sin()];
                    let a = quad(&pm, &d);
                    let b = 2.0 * dot(&d, &pz) + dot(&q, &d);
                    roots(a, b, fz).into_iter().filter(|&t| t >= 0.0).fold(f64::INFINITY, f64::min)
                };
                let coarse = 20_000;
                let h = 2.0 * PI / coarse as f64;
                let th0 = (0..coarse).map(|k| k as f64 * h).min_by(|&a, &b| ray(a).total_cmp(&ray(b))).unwrap();
                (0..=4000).map(|k| ray(th0 - 2.0 * h + k as f64 * h / 1000.0)).fold(ray(th0), f64::min)
            };
            let got = norm(&x.iter().zip(&z).map(|(a, b)| a - b).collect::<Vec<_>>());
            worst_grid = worst_grid.max((got - dist).abs());
            if (got - dist).abs() > 1e-4 {
                grid_fail += 1;
            }
        }
    }
    let detail = format!(
        "KKT ok on {}/{} (worst {worst_kkt:.1e}·(1+‖z‖)), {} solver errors; n = 2 brute force ok on {}/{grid_cases} (worst {worst_grid:.1e})",
        500 - errors - kkt_fail,
        500 - errors,
        errors,
        grid_cases - grid_fail
    );
    if kkt_fail + grid_fail + errors > 0 {
        return Err(detail);
    }
    within_budget(start, 10.0, detail)
}

// 3. spectral bound of partitioning is −n·λ_max(W), attained at √n·v
fn criterion_3() -> Outcome {
    let mut worst_b = 0.0f64;
    let mut worst_x = 0.0f64;
    let mut fails = 0;
    for seed in 0..50u64 {
        let n = 2 + (seed as usize * 7) % 29;
        let p = generate(&InstanceSpec::new(Family::Partitioning, n, seed)).unwrap();
        let w = p.objective().to_dense().scaled(-1.0);
        let (vals, vecs) = jacobi_eigen(&w);
        let lmax = vals[n - 1];
        let v: Vec<f64> = (0..n).map(|i| vecs[(i, n - 1)] * (n as f64).sqrt()).collect();
        let res = spectral_bound(&p, &vec![1.0; n]).unwrap();
        let expected = -(n as f64) * lmax;
        let rel = (res.bound - expected).abs() / expected.abs().max(1e-300);
        let cand = res.candidate.unwrap();
        let diff = |s: f64| norm(&cand.iter().zip(&v).map(|(a, b)| a - s * b).collect::<Vec<_>>());
        let dx = diff(1.0).min(diff(-1.0)) / (n as f64).sqrt();
        worst_b = worst_b.max(rel);
        worst_x = worst_x.max(dx);
        if rel > 1e-8 || dx > 1e-8 {
            fails += 1;
        }
    }
    check(
        fails == 0,
        format!("{}/50 instances; worst bound error {worst_b:.1e} (relative), worst candidate error {worst_x:.1e}", 50 - fails),
    )
}

// 4. brute force, cutting-plane and spectral bounds in order, and the 2/π
// guarantee for sign-rounded samples
fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut sandwich_fail = Vec::new();
    let mut rounding_ok = 0;
    for k in 0..20u64 {
        let n = 4 + (k as usize % 9);
        let mut r = seeded(400 + k);
        let g = Mat::from_fn(n, n, |_, _| normal(&mut r));
        let w = g.transpose().matmul(&g);
        let p = gen_partitioning(&w).unwrap();
        // maximization values of xᵀWx
        let f_star = -enumerate_signs(&p);
        let cp = sdr_bound_cutting_plane(&p, &CuttingPlaneOptions::default()).unwrap();
        let f_cp = -cp.bound;
        let f_spec = -spectral_bound(&p, &vec![1.0; n]).unwrap().bound;
        let ok = cp.converged
            && cp.valid
            && 2.0 / PI * f_cp - 1e-3 * f_cp.abs() <= f_star
            && f_star <= f_cp + 1e-9 * (1.0 + f_cp.abs())
            && f_cp <= f_spec + 1e-6;
        if !ok {
            sandwich_fail.push(format!("#{k}: f*={f_star:.4} f_cp={f_cp:.4} spec={f_spec:.4} converged={}", cp.converged));
        }
        let samples = sample_from_lifted(&cp, 100, 4000 + k).unwrap();
        let best = samples
            .points
            .iter()
            .map(|s| {
                let z: Vec<f64> = s.iter().map(|&v| if v < 0.0 { -1.0 } else { 1.0 }).collect();
                quad(&w, &z)
            })
            .fold(f64::NEG_INFINITY, f64::max);
        if best >= 2.0 / PI * f_cp {
            rounding_ok += 1;
        }
    }
    let detail = format!("sandwich holds on {}/20, rounding meets 2/π on {rounding_ok}/20", 20 - sandwich_fail.len());
    if !sandwich_fail.is_empty() || rounding_ok < 19 {
        return Err(format!("{detail}; {}", sandwich_fail.join("; ")));
    }
    within_budget(start, 60.0, detail)
}

// 5. every weighted spectral bound is below the cutting-plane bound
fn criterion_5() -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    let mut fails = Vec::new();
    for k in 0..10u64 {
        let p = if k % 2 == 0 {
            gen_boolean_ls(8, 6, k)
        } else {
            let mut r = seeded(500 + k);
            gen_partitioning(&random_sym(&mut r, 7)).unwrap()
        };
        let cp = sdr_bound_cutting_plane(&p, &CuttingPlaneOptions::default()).unwrap();
        if !cp.converged || !cp.valid {
            fails.push(format!("#{k}: cutting plane not converged"));
            continue;
        }
        let mut r = seeded(5000 + k);
        for _ in 0..20 {
            let lambda: Vec<f64> = (0..p.num_constraints()).map(|_| uniform(&mut r, 0.0, 2.0)).collect();
            let d = spectral_bound(&p, &lambda).unwrap().bound;
            let excess = (d - cp.bound) / (1.0 + cp.bound.abs());
            worst = worst.max(excess);
            if excess > 1e-4 {
                fails.push(format!("#{k}: d={d} f_cp={}", cp.bound));
            }
        }
    }
    check(fails.is_empty(), format!("200 weightings, worst (d − f_cp)/(1+|f_cp|) = {worst:.1e} {}", fails.join("; ")))
}

// 6. the period-2 ADMM cycle on a three-node partitioning instance
fn criterion_6() -> Outcome {
    let p = gen_partitioning(&Mat::from_fn(3, 3, |i, j| if i == j { 0.0 } else { 1.0 })).unwrap();
    let t = 1.0 / 3.0;
    let state = AdmmState {
        z: vec![t; 3],
        x: vec![vec![-1.0, t, t], vec![t, -1.0, t], vec![t, t, -1.0]],
        u: vec![vec![2.0 * t, 0.0, 0.0], vec![0.0, 2.0 * t, 0.0], vec![0.0, 0.0, 2.0 * t]],
    };
    let opts = AdmmOptions::default();
    let mut admm = Admm::new(&p, state.clone(), &opts);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let before = admm.state.clone();
        admm.step();
        if admm.phase != AdmmPhase::Feasibility {
            return Err("left phase I".into());
        }
        let gap = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x + y).abs()).fold(0.0, f64::max);
        worst = worst.max(gap(&admm.state.z, &before.z));
        for i in 0..3 {
            worst = worst.max(gap(&admm.state.x[i], &before.x[i]));
            worst = worst.max(gap(&admm.state.u[i], &before.u[i]));
        }
    }
    let x0 = vec![t; 3];
    let rep = improve_admm_from(&p, &x0, state, &opts);
    let no_worse = rep.assessment.is_no_worse_than(&p.assess(&x0).unwrap());
    check(
        worst <= 1e-12 && no_worse,
        format!("10 steps, max |next + previous| = {worst:.1e}; best-ever result no worse than x0: {no_worse}"),
    )
}

// 7. difference-of-convex splittings
fn criterion_7() -> Outcome {
    let start = Instant::now();
    let mut r = seeded(7);
    let mut fails = Vec::new();
    let (mut worst_rec, mut worst_psd, mut min_floor_ratio) = (0.0f64, 0.0f64, f64::INFINITY);
    for k in 0..200 {
        let n = 1 + (uniform(&mut r, 0.0, 100.0) as usize).min(99);
        let p = random_sym(&mut r, n);
        let scale = 1.0 + p.frob_norm();
        let mut parts = Vec::new();
        for m in [SplitMethod::Shift, SplitMethod::Eigen, SplitMethod::Ldl] {
            parts.push((format!("{m:?}"), split(&p, m).unwrap()));
        }
        let delta = default_delta(&p);
        for choice in [PivotChoice::V1Zero, PivotChoice::V2Zero] {
            let (s, min_div) = split_cholesky_diff_instrumented(&p, delta, choice).unwrap();
            min_floor_ratio = min_floor_ratio.min(min_div / delta.sqrt());
            if min_div < delta.sqrt() * (1.0 - 1e-12) {
                fails.push(format!("#{k} {choice:?}: divisor {min_div:e} below floor"));
            }
            parts.push((format!("CholeskyDiff {choice:?}"), s));
        }
        for (name, s) in &parts {
            let rec = s.plus.sub(&s.minus).sub(&p).frob_norm() / scale;
            let psd = min_eig_bound(&s.plus, EigBoundMode::Exact).min(min_eig_bound(&s.minus, EigBoundMode::Exact));
            worst_rec = worst_rec.max(rec);
            worst_psd = worst_psd.min(psd);
            if rec > 1e-10 || psd < -1e-9 {
                fails.push(format!("#{k} n={n} {name}: reconstruction {rec:.1e}, min eig {psd:.1e}"));
            }
        }
        if parts[1].1.curvature > parts[0].1.curvature + 1e-9 * scale {
            fails.push(format!("#{k}: eigen curvature above shift curvature"));
        }
    }
    let detail = format!(
        "200 matrices; worst reconstruction {worst_rec:.1e}·(1+‖P‖_F), most negative part eigenvalue {worst_psd:.1e}, min divisor/√δ {min_floor_ratio:.3}"
    );
    if !fails.is_empty() {
        fails.truncate(5);
        return Err(format!("{detail}; {}", fails.join("; ")));
    }
    within_budget(start, 30.0, detail)
}

fn best_feasible(reports: &[ImproveReport]) -> f64 {
    reports
        .iter()
        .filter(|r| r.assessment.violation == 0.0)
        .map(|r| r.assessment.objective)
        .fold(f64::INFINITY, f64::min)
}

// 8. Boolean least squares workflow
fn criterion_8() -> Outcome {
    let start = Instant::now();
    let cd = CdOptions::default();
    let cp_opts = CuttingPlaneOptions { max_rounds: 20, ..Default::default() };
    let mut notes = Vec::new();
    let mut ok = true;
    let mut ordering_holds = 0;
    let mut main_cp = f64::NAN;
    let mut main_spec = f64::NAN;
    let mut main_feasible_min = f64::INFINITY;
    let mut sdr_main = Vec::new();
    let mut main_problem = None;
    for seed in [7u64, 8, 9] {
        let mut spec = InstanceSpec::new(Family::BooleanLs, 50, seed);
        spec.m = 80;
        let p = generate(&spec).unwrap();
        let sdr = suggest_sdr(&p, 20, seed, &cp_opts).unwrap();
        let random = suggest_random(&p, 20, 1.0, seed).unwrap();
        let sign = |c: &Vec<f64>| improve_round(&p, c, Rounder::Sign).unwrap();
        let cd_sdr: Vec<ImproveReport> = sdr.candidates.iter().map(|c| improve_coordinate_descent(&p, c, &cd).unwrap()).collect();
        let sign_sdr: Vec<ImproveReport> = sdr.candidates.iter().map(sign).collect();
        let sign_rand: Vec<ImproveReport> = random.candidates.iter().map(sign).collect();
        let all_feasible = cd_sdr.iter().chain(&sign_sdr).chain(&sign_rand).all(|r| r.assessment.violation == 0.0);
        if !all_feasible {
            ok = false;
            notes.push(format!("seed {seed}: a sign or CD point is infeasible"));
        }
        let (a, b, c) = (best_feasible(&cd_sdr), best_feasible(&sign_sdr), best_feasible(&sign_rand));
        if a <= b && b <= c {
            ordering_holds += 1;
        }
        notes.push(format!("seed {seed}: CD∘SDR {a:.1} ≤ sign∘SDR {b:.1} ≤ sign∘random {c:.1}"));
        if seed == 7 {
            let b = sdr.bound.clone().unwrap();
            main_cp = b.bound;
            main_spec = spectral_bound(&p, &vec![1.0; p.num_constraints()]).unwrap().bound;
            main_feasible_min = a.min(best_feasible(&sign_sdr)).min(c);
            sdr_main = sdr.candidates.clone();
            main_problem = Some(p);
        }
    }
    if ordering_holds < 2 {
        ok = false;
    }
    let p = main_problem.unwrap();
    // bounds below every feasible objective found
    if !(main_spec <= main_cp && main_cp <= main_feasible_min) {
        ok = false;
    }
    notes.push(format!("spectral {main_spec:.1} ≤ cutting plane {main_cp:.1} ≤ best feasible {main_feasible_min:.1}"));

    // penalty CCP from two SDR candidates
    let mut ccp_v = Vec::new();
    for c in sdr_main.iter().take(2) {
        let v = match improve_ccp(&p, c, &CcpOptions::default()) {
            Ok(r) => r.assessment.violation,
            Err(ImproveError::Subsolver { partial, .. }) => partial.assessment.violation,
            Err(e) => return Err(format!("CCP failed: {e}")),
        };
        if v > 1e-6 {
            ok = false;
        }
        ccp_v.push(format!("{v:.1e}"));
    }
    notes.push(format!("CCP violations [{}] (≤ 1e-6)", ccp_v.join(", ")));

    // reduced instance: every valid bound below the enumerated optimum
    let small = gen_boolean_ls(26, 16, 7);
    let f_star = enumerate_signs(&small);
    let spec_b = spectral_bound(&small, &vec![1.0; 16]).unwrap();
    let cp_b = sdr_bound_cutting_plane(&small, &CuttingPlaneOptions::default()).unwrap();
    let bounds_ok = [&spec_b, &cp_b].iter().all(|b| !b.valid || b.bound <= f_star + 1e-9 * (1.0 + f_star.abs()));
    if !bounds_ok || !cp_b.valid {
        ok = false;
    }
    notes.push(format!("n = 16: spectral {:.3}, cutting plane {:.3} ≤ f* {f_star:.3}", spec_b.bound, cp_b.bound));
    notes.push(format!("ordering on {ordering_holds}/3 seeds"));
    let detail = notes.join("; ");
    if !ok {
        return Err(detail);
    }
    within_budget(start, 600.0, detail)
}

// 9. beamforming workflow
fn criterion_9() -> Outcome {
    let start = Instant::now();
    let (n, m, l) = (10, 8, 3);
    let p = gen_beamforming(n, m, l, 20.0, 2.0, 1);
    let sdr = suggest_sdr(&p, 10, 1, &CuttingPlaneOptions { max_rounds: 200, ..Default::default() }).unwrap();
    let admm_opts = AdmmOptions {
        rho: Some(((m + l) as f64).sqrt()),
        ..Default::default()
    };
    let mut best_admm = f64::INFINITY;
    let mut best_ccp = f64::INFINITY;
    let mut composition_ok = true;
    let mut scale_err = 0.0f64;
    let forms = cover_forms(&p);
    if forms.len() != m {
        return Err(format!("expected {m} cover forms, found {}", forms.len()));
    }
    for c in &sdr.candidates {
        let admm = improve_admm(&p, c, &admm_opts).unwrap();
        best_admm = best_admm.min(admm.assessment.violation);
        let seq = improve_sequence(
            &p,
            c,
            &[ImproveMethod::Admm(admm_opts.clone()), ImproveMethod::CoordinateDescent(CdOptions::default())],
        )
        .unwrap();
        composition_ok &= seq.assessment.is_no_worse_than(&admm.assessment);
        let ccp = match improve_ccp(&p, c, &CcpOptions::default()) {
            Ok(r) => r,
            Err(ImproveError::Subsolver { partial, .. }) => *partial,
            Err(e) => return Err(format!("CCP failed: {e}")),
        };
        best_ccp = best_ccp.min(ccp.assessment.violation);
        let z = scale_to_cover(c, &forms).unwrap();
        let lo = forms.iter().map(|f| quad(f, &z)).fold(f64::INFINITY, f64::min);
        scale_err = scale_err.max((lo - 1.0).abs());
    }
    let detail = format!(
        "best violation ADMM∘SDR {best_admm:.1e}, CCP∘SDR {best_ccp:.1e}; ADMM then CD never worse: {composition_ok}; scale-to-cover |min − 1| ≤ {scale_err:.1e}"
    );
    if best_admm > 1e-5 || best_ccp > 1e-5 || !composition_ok || scale_err > 1e-10 {
        return Err(detail);
    }
    within_budget(start, 300.0, detail)
}

fn small_instance(r: &mut Rng, family: Family, seed: u64) -> QcqpProblem {
    let pick = |r: &mut Rng, lo: usize, hi: usize| lo + (uniform(r, 0.0, (hi - lo + 1) as f64) as usize).min(hi - lo);
    let mut spec = InstanceSpec::new(family, 4, seed);
    match family {
        Family::BooleanLs => {
            spec.n = pick(r, 2, 6);
            spec.m = spec.n + 2;
        }
        Family::ThreeSat => {
            spec.n = pick(r, 3, 6);
            spec.m = pick(r, 2, 8);
        }
        Family::Beamforming => {
            spec.n = pick(r, 1, 3);
            spec.m = pick(r, 1, 3);
            spec.l = pick(r, 0, 2);
        }
        _ => spec.n = pick(r, 2, 8),
    }
    generate(&spec).unwrap()
}

// 10. no improve method ever returns a worse point
fn criterion_10() -> Outcome {
    let families = [
        Family::BooleanLs,
        Family::Partitioning,
        Family::MaxCut,
        Family::MaxBisection,
        Family::MaxClique,
        Family::ThreeSat,
        Family::Beamforming,
    ];
    let ccp = CcpOptions {
        max_iter: 5,
        subsolver: AdmmOptions { max_iter: 300, ..CcpOptions::default().subsolver },
        ..Default::default()
    };
    let methods = vec![
        ImproveMethod::Round { rounder: Rounder::Sign },
        ImproveMethod::Round { rounder: Rounder::BalancedSign },
        ImproveMethod::Round { rounder: Rounder::ScaleToCover },
        ImproveMethod::Round { rounder: Rounder::GreedyClique },
        ImproveMethod::CoordinateDescent(CdOptions::default()),
        ImproveMethod::Admm(AdmmOptions { max_iter: 300, ..Default::default() }),
        ImproveMethod::Ccp(ccp),
        ImproveMethod::Convex(qcqp::improve::convex_defaults()),
    ];
    let mut r = seeded(10);
    let (mut checked, mut refused, mut violations) = (0, 0, Vec::new());
    for trial in 0..500u64 {
        let family = families[trial as usize % families.len()];
        let p = small_instance(&mut r, family, trial);
        let scale = uniform(&mut r, 0.1, 3.0);
        let x0: Vec<f64> = normal_vec(&mut r, p.dim()).iter().map(|v| v * scale).collect();
        let a0 = p.assess(&x0).unwrap();
        let which = (trial as usize / families.len()) % (methods.len() + 1);
        let result = if which == methods.len() {
            improve_sequence(&p, &x0, &[methods[0].clone(), methods[4].clone()])
        } else {
            methods[which].run(&p, &x0)
        };
        let report = match result {
            Ok(rep) => rep,
            Err(ImproveError::Subsolver { partial, .. }) => *partial,
            Err(_) => {
                refused += 1;
                continue;
            }
        };
        checked += 1;
        let recomputed: Assessment = p.assess(&report.x).unwrap();
        if !report.assessment.is_no_worse_than(&a0) || recomputed != report.assessment {
            violations.push(format!("trial {trial} {family:?} {:?}", report.method));
        }
    }
    check(
        violations.is_empty(),
        format!(
            "500 trials: {checked} outputs checked, {refused} refused by preconditions, {} contract violations {}",
            violations.len(),
            violations.join("; ")
        ),
    )
}

// 11. greedy clique output is a maximal clique
fn criterion_11() -> Outcome {
    let mut r = seeded(11);
    let mut fails = 0;
    let mut sizes = 0usize;
    for k in 0..100u64 {
        let n = 1 + (uniform(&mut r, 0.0, 40.0) as usize).min(39);
        let density = uniform(&mut r, 0.05, 0.95);
        let a = random_graph(n, density, 1100 + k, false);
        let x = normal_vec(&mut r, n);
        let z = greedy_clique(&x, &a);
        let set: Vec<usize> = (0..n).filter(|&i| z[i] == 1.0).collect();
        let binary = z.iter().all(|&v| v == 0.0 || v == 1.0);
        let clique = set.iter().all(|&u| set.iter().all(|&v| u == v || a[(u, v)] != 0.0));
        let maximal = (0..n).filter(|v| !set.contains(v)).all(|v| set.iter().any(|&u| a[(u, v)] == 0.0));
        sizes += set.len();
        if !(binary && clique && maximal && !set.is_empty()) {
            fails += 1;
        }
    }
    check(fails == 0, format!("{}/100 graphs give a maximal clique (mean size {:.1})", 100 - fails, sizes as f64 / 100.0))
}

// 12. reports are reproducible through the command-line binary
fn criterion_12() -> Outcome {
    let dir = std::path::PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    std::fs::create_dir_all(&dir).unwrap();
    let problem = dir.join("maxcut.json");
    save_problem(&generate(&InstanceSpec::new(Family::MaxCut, 14, 12)).unwrap(), &problem).unwrap();
    let config = dir.join("config.json");
    let cfg = PipelineConfig {
        improve: qcqp_cli::commands::parse_improve_list("sign,cd").unwrap(),
        candidates: 16,
        seed: 42,
        bounds: vec![BoundMethod::Spectral],
        ..Default::default()
    };
    std::fs::write(&config, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    let solve = |w: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_qcqp"))
            .args(["solve", problem.to_str().unwrap(), "--config", config.to_str().unwrap(), "--parallel", w])
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        o.stdout
    };
    let a = solve("1");
    let b = solve("1");
    let best = |bytes: &[u8]| serde_json::from_slice::<RunReport>(bytes).unwrap().best;
    let same_best = [2, 4, 8].iter().all(|w| best(&solve(&w.to_string())) == best(&a));
    let lib = serde_json::to_vec_pretty(&run_pipeline(&qcqp_cli::load_problem(&problem).unwrap(), &cfg).unwrap()).unwrap();
    check(
        a == b && same_best && lib.as_slice() == a.trim_ascii_end(),
        format!("two serial runs byte-identical: {}; best point equal at parallelism 2, 4, 8: {same_best}", a == b),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("one-variable oracle", criterion_1),
        ("projection KKT", criterion_2),
        ("spectral identity", criterion_3),
        ("bound sandwich and 2/π rounding", criterion_4),
        ("weighted spectral bounds below the relaxation", criterion_5),
        ("ADMM period-2 cycle", criterion_6),
        ("splittings", criterion_7),
        ("Boolean least squares workflow", criterion_8),
        ("beamforming workflow", criterion_9),
        ("improve contract", criterion_10),
        ("maximal clique", criterion_11),
        ("determinism", criterion_12),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    let total = Instant::now();
    for (k, (name, run)) in criteria.iter().enumerate() {
        if !only.is_empty() && !only.contains(&(k + 1)) {
            continue;
        }
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = Duration::as_secs_f64(&t.elapsed());
        match outcome {
            Ok(d) => println!("criterion {:>2} PASS  {name} ({secs:.1} s): {d}", k + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name} ({secs:.1} s): {d}", k + 1);
            }
        }
    }
    println!("acceptance: {failed} failed, {:.1} s total", total.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
