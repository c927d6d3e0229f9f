use proptest::prelude::*;
use qcqp::generators::{brute_force, gen_boolean_ls, gen_partitioning, BruteMode};
use qcqp::improve::{improve_admm, AdmmOptions};
use qcqp::linalg::{min_eig_bound, solve_spd, sym_eigen, EigBoundMode, Mat};
use qcqp::lp::{solve_lp, LinearProgram, LpOutcome};
use qcqp::oneconstraint::{solve_one_constraint, Projector};
use qcqp::onevar::{constraint_solution_set, intersect, quadratic_roots, solve_onevar, IntervalSet, OnevarOutcome};
use qcqp::relax::{sdr_bound_cutting_plane, spectral_bound, tighten, CuttingPlaneOptions, TightenOptions};
use qcqp::split::{split, SplitMethod};
use qcqp::suggest::{suggest_sdr, suggest_spectral};
use qcqp::{Assessment, Constraint, QcqpProblem, QuadraticForm};

fn sym(n: usize, seed: u64) -> Mat {
    let mut r = qcqp::rng::seeded(seed);
    Mat::from_fn(n, n, |_, _| qcqp::rng::normal(&mut r)).symmetrized()
}

fn random_form(n: usize, seed: u64) -> QuadraticForm {
    let mut r = qcqp::rng::seeded(seed ^ 0x5eed);
    let q = qcqp::rng::normal_vec(&mut r, n);
    QuadraticForm::from_dense(&sym(n, seed), q, qcqp::rng::normal(&mut r)).unwrap()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Minimum of a one-variable problem over a grid plus every root and
/// stationary point, restricted to `[−10, 10]`.
fn onevar_oracle(obj: (f64, f64, f64), cons: &[(f64, f64, f64)]) -> Option<f64> {
    let mut pts: Vec<f64> = (0..=20_000).map(|k| -10.0 + k as f64 * 1e-3).collect();
    for &(p, q, r) in cons {
        pts.extend(quadratic_roots(p, q, r));
    }
    if obj.0 != 0.0 {
        pts.push(-obj.1 / (2.0 * obj.0));
    }
    let f = |(p, q, r): (f64, f64, f64), x: f64| p * x * x + q * x + r;
    pts.into_iter()
        .filter(|x| x.abs() <= 10.0 + 1e-9)
        .filter(|&x| cons.iter().all(|&c| f(c, x) <= 1e-9 * (1.0 + c.0.abs() + c.1.abs() + c.2.abs()) * (1.0 + x * x)))
        .map(|x| f(obj, x))
        .min_by(f64::total_cmp)
}

fn triple() -> impl Strategy<Value = (f64, f64, f64)> {
    (-3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scaling_constraints_scales_violation(seed in any::<u64>(), s in 0.1f64..10.0) {
        let n = 3;
        let cons = vec![Constraint::leq(random_form(n, seed)), Constraint::eq(random_form(n, seed + 1))];
        let scaled: Vec<Constraint> = cons.iter().map(|c| Constraint { form: c.form.scaled(s), sense: c.sense }).collect();
        let a = QcqpProblem::new(random_form(n, seed + 2), cons).unwrap();
        let b = QcqpProblem::new(random_form(n, seed + 2), scaled).unwrap();
        let x = qcqp::rng::normal_vec(&mut qcqp::rng::seeded(seed), n);
        let (va, vb) = (a.violation(&x), b.violation(&x));
        prop_assert!((vb - s * va).abs() <= 1e-12 * (1.0 + vb.abs()));
        prop_assert_eq!(va == 0.0, vb == 0.0);
    }

    #[test]
    fn better_than_is_a_strict_weak_order(v in proptest::collection::vec((0.0f64..2.0, -2.0f64..2.0), 3)) {
        let a: Vec<Assessment> = v.iter().map(|&(violation, objective)| Assessment { violation, objective }).collect();
        for x in &a {
            prop_assert!(!x.is_better_than(x));
            for y in &a {
                prop_assert!(x.is_better_than(y) || y.is_better_than(x) || (x.violation == y.violation && x.objective == y.objective));
                for z in &a {
                    if x.is_better_than(y) && y.is_better_than(z) {
                        prop_assert!(x.is_better_than(z));
                    }
                }
            }
        }
    }

    #[test]
    fn triplet_and_dense_evaluation_agree(seed in any::<u64>(), n in 1usize..8) {
        let f = random_form(n, seed);
        let x = qcqp::rng::normal_vec(&mut qcqp::rng::seeded(seed + 9), n);
        let dense = f.to_dense().quad(&x) + f.q().iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() + f.r();
        prop_assert!((f.eval(&x) - dense).abs() <= 1e-12 * (1.0 + dense.abs()));
    }

    #[test]
    fn eigen_decomposition_reconstructs(seed in any::<u64>(), n in 1usize..30) {
        let p = sym(n, seed);
        let e = sym_eigen(&p).unwrap();
        let scale = 1.0 + p.frob_norm();
        prop_assert!(e.reconstruct().sub(&p).frob_norm() <= 1e-10 * scale);
        let vtv = e.vectors.transpose().matmul(&e.vectors);
        prop_assert!(vtv.sub(&Mat::identity(n)).frob_norm() <= 1e-10 * n as f64);
        prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn spd_solve_residual(seed in any::<u64>(), n in 1usize..20) {
        let g = sym(n, seed);
        let a = g.matmul(&g).add_diag(1e-3);
        let b = qcqp::rng::normal_vec(&mut qcqp::rng::seeded(seed + 3), n);
        let x = solve_spd(&a, &b).unwrap();
        let res: Vec<f64> = a.mul_vec(&x).iter().zip(&b).map(|(u, v)| u - v).collect();
        prop_assert!(norm(&res) <= 1e-8 * (1.0 + a.frob_norm() * norm(&x)));
    }

    #[test]
    fn lp_matches_vertex_enumeration(seed in any::<u64>(), m in 1usize..5) {
        // min cᵀy over {y ≥ 0, Ay ≤ b, 1ᵀy ≤ 10} in two variables
        let mut r = qcqp::rng::seeded(seed);
        let c = qcqp::rng::normal_vec(&mut r, 2);
        let mut rows: Vec<([f64; 2], f64)> = (0..m)
            .map(|_| ([qcqp::rng::normal(&mut r), qcqp::rng::normal(&mut r)], qcqp::rng::uniform(&mut r, 0.5, 3.0)))
            .collect();
        rows.push(([1.0, 1.0], 10.0));
        rows.push(([-1.0, 0.0], 0.0));
        rows.push(([0.0, -1.0], 0.0));
        let mut lp = LinearProgram::new(c.clone());
        for (a, b) in &rows[..m + 1] {
            lp.add_leq(a.to_vec(), *b);
        }
        let LpOutcome::Optimal { value, .. } = solve_lp(&lp).unwrap() else { panic!("bounded and feasible") };
        let mut best = f64::INFINITY;
        for i in 0..rows.len() {
            for j in i + 1..rows.len() {
                let (a1, b1) = rows[i];
                let (a2, b2) = rows[j];
                let det = a1[0] * a2[1] - a1[1] * a2[0];
                if det.abs() < 1e-12 { continue; }
                let y = [(b1 * a2[1] - b2 * a1[1]) / det, (a1[0] * b2 - a2[0] * b1) / det];
                if rows.iter().all(|(a, b)| a[0] * y[0] + a[1] * y[1] <= b + 1e-9) {
                    best = best.min(c[0] * y[0] + c[1] * y[1]);
                }
            }
        }
        prop_assert!((value - best).abs() <= 1e-6 * (1.0 + best.abs()));
        prop_assert_eq!(solve_lp(&lp).unwrap(), solve_lp(&lp).unwrap());
    }

    #[test]
    fn onevar_matches_oracle(obj in triple(), cons in proptest::collection::vec(triple(), 0..6)) {
        let mut cons = cons;
        cons.push((1.0, 0.0, -100.0));
        let got = solve_onevar(obj, &cons);
        let oracle = onevar_oracle(obj, &cons);
        match (got, oracle) {
            (OnevarOutcome::Optimal { f, .. }, Some(o)) => prop_assert!((f - o).abs() <= 1e-6 * (1.0 + o.abs()), "{f} vs {o}"),
            (OnevarOutcome::Infeasible, None) => {}
            (OnevarOutcome::Optimal { x, .. }, None) => {
                // a feasible set too thin for the grid: the reported point
                // must itself be feasible
                prop_assert!(cons.iter().all(|&(p, q, r)| p * x * x + q * x + r <= 1e-7));
            }
            (g, o) => prop_assert!(false, "{g:?} vs {o:?}"),
        }
    }

    #[test]
    fn intersection_has_at_most_m_plus_one_pieces(cons in proptest::collection::vec(triple(), 1..10)) {
        let mut set = IntervalSet::full();
        for (k, &(p, q, r)) in cons.iter().enumerate() {
            set = intersect(&set, &constraint_solution_set(p, q, r));
            prop_assert!(set.len() <= k + 2);
        }
    }

    #[test]
    fn projection_kkt_and_secular_monotonicity(seed in any::<u64>(), n in 1usize..10) {
        let f = random_form(n, seed);
        let Ok(proj) = Projector::new(&f) else { return Ok(()) };
        let z = qcqp::rng::normal_vec(&mut qcqp::rng::seeded(seed + 1), n);
        if let Ok(res) = proj.project_eq(&z) {
            prop_assert!(res.kkt_residual <= 1e-7 * (1.0 + norm(&z)), "kkt {}", res.kkt_residual);
        }
        let (lo, hi) = proj.admissible_interval();
        let lo = if lo.is_finite() { lo } else { -1e3 };
        let hi = if hi.is_finite() { hi } else { 1e3 };
        let samples: Vec<f64> = (1..100)
            .filter_map(|k| proj.secular(&z, lo + (hi - lo) * k as f64 / 100.0))
            .collect();
        prop_assert!(samples.windows(2).all(|w| w[1] <= w[0] + 1e-9 * (1.0 + w[0].abs())));
    }

    #[test]
    fn splittings_reconstruct(seed in any::<u64>(), n in 1usize..20) {
        let p = sym(n, seed);
        let scale = 1.0 + p.frob_norm();
        let mut curv = Vec::new();
        for m in [SplitMethod::Shift, SplitMethod::Eigen, SplitMethod::Ldl] {
            let s = split(&p, m).unwrap();
            prop_assert!(s.plus.sub(&s.minus).sub(&p).frob_norm() <= 1e-10 * scale);
            prop_assert!(min_eig_bound(&s.plus, EigBoundMode::Exact) >= -1e-9 * scale);
            prop_assert!(min_eig_bound(&s.minus, EigBoundMode::Exact) >= -1e-9 * scale);
            curv.push(s.curvature);
        }
        prop_assert!(curv[1] <= curv[0] + 1e-9 * scale);
    }

    #[test]
    fn generators_are_deterministic_and_boolean_ls_objective_is_convex(seed in any::<u64>()) {
        let a = gen_boolean_ls(7, 5, seed);
        prop_assert_eq!(&a, &gen_boolean_ls(7, 5, seed));
        prop_assert!(min_eig_bound(&a.objective().to_dense(), EigBoundMode::Exact) >= -1e-9);
        prop_assert!(!a.is_convex(1e-9));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn one_constraint_strong_duality(seed in any::<u64>(), n in 1usize..6) {
        let g = sym(n, seed);
        let obj = QuadraticForm::from_dense(&sym(n, seed + 1), qcqp::rng::normal_vec(&mut qcqp::rng::seeded(seed), n), 0.0).unwrap();
        // a bounded constraint set keeps the dual finite
        let con = QuadraticForm::from_dense(&g.matmul(&g).add_diag(0.1), vec![0.0; n], -1.0).unwrap();
        let s = solve_one_constraint(&obj, &con).unwrap();
        prop_assert!((s.value - s.dual_value).abs() <= 1e-6 * (1.0 + s.value.abs()));
        prop_assert!(con.eval(&s.x) <= 1e-8);
    }

    #[test]
    fn relaxation_bounds_are_valid(seed in 0u64..1000) {
        let n = 6;
        let p = gen_boolean_ls(8, n, seed);
        let star = brute_force(&p, BruteMode::Boolean).unwrap().assessment.objective;
        let spec = suggest_spectral(&p, None).unwrap().bound.unwrap();
        prop_assert!(spec.bound <= star + 1e-6 * (1.0 + star.abs()));
        let sdr = suggest_sdr(&p, 3, seed, &CuttingPlaneOptions { max_rounds: 50, ..Default::default() }).unwrap();
        let b = sdr.bound.unwrap();
        if b.valid {
            prop_assert!(b.bound <= star + 1e-6 * (1.0 + star.abs()));
        }
        prop_assert_eq!(sdr.candidates.len(), 3);
    }

    #[test]
    fn converged_cut_loop_satisfies_convex_constraints(seed in any::<u64>()) {
        // ‖x − c‖² ≤ 1 is convex, so the relaxed point must satisfy it
        let n = 3;
        let c = qcqp::rng::normal_vec(&mut qcqp::rng::seeded(seed), n);
        let ball = QuadraticForm::new(
            n,
            (0..n).map(|i| (i, i, 1.0)).collect(),
            c.iter().map(|v| -2.0 * v).collect(),
            c.iter().map(|v| v * v).sum::<f64>() - 1.0,
        ).unwrap();
        let p = QcqpProblem::new(random_form(n, seed), vec![Constraint::leq(ball.clone())]).unwrap();
        // the violation is at most tr(P)·psd_tol, so tighten the tolerance
        let opts = CuttingPlaneOptions { psd_tol: 1e-7, ..Default::default() };
        let r = sdr_bound_cutting_plane(&p, &opts).unwrap();
        if r.converged {
            prop_assert!(ball.eval(r.candidate.as_ref().unwrap()) <= 1e-6);
        }
    }

    #[test]
    fn tighten_keeps_optima_and_never_loosens_the_bound(seed in 0u64..1000) {
        // box constraints 0 ≤ x ≤ 1 as affine rows plus a Boolean-like cap
        let n = 3;
        let mut cons = Vec::new();
        for i in 0..n {
            let mut up = vec![0.0; n];
            up[i] = 1.0;
            cons.push(Constraint::leq(QuadraticForm::affine(up.clone(), -1.0).unwrap()));
            cons.push(Constraint::leq(QuadraticForm::affine(up.iter().map(|v| -v).collect(), 0.0).unwrap()));
        }
        let p = QcqpProblem::new(random_form(n, seed), cons).unwrap();
        let t = tighten(&p, &TightenOptions::default());
        let grid = BruteMode::Grid { lo: 0.0, hi: 1.0, steps: 11 };
        let a = brute_force(&p, grid).unwrap().assessment;
        let b = brute_force(&t, grid).unwrap().assessment;
        prop_assert_eq!(a.objective, b.objective);
        let opts = CuttingPlaneOptions { max_rounds: 200, ..Default::default() };
        let lb = sdr_bound_cutting_plane(&p, &opts).unwrap();
        let lt = sdr_bound_cutting_plane(&t, &opts).unwrap();
        if lb.converged && lt.converged {
            prop_assert!(lt.bound >= lb.bound - 1e-5 * (1.0 + lb.bound.abs()));
        }
    }

    #[test]
    fn admm_converges_on_convex_problems(seed in any::<u64>(), n in 2usize..12) {
        let mut r = qcqp::rng::seeded(seed);
        let g = sym(n, seed);
        let obj = QuadraticForm::from_dense(&g.matmul(&g), qcqp::rng::normal_vec(&mut r, n), 0.0).unwrap();
        let cons: Vec<Constraint> = (0..3)
            .map(|k| {
                let h = sym(n, seed + 10 + k);
                QuadraticForm::from_dense(&h.matmul(&h).add_diag(0.1), qcqp::rng::normal_vec(&mut r, n), -1.0).unwrap()
            })
            .map(Constraint::leq)
            .collect();
        let p = QcqpProblem::new(obj, cons).unwrap();
        let opts = AdmmOptions { max_iter: 2000, two_phase: false, tol: 1e-9, ..AdmmOptions::default() };
        let x0 = vec![0.0; n];
        let rep = improve_admm(&p, &x0, &opts).unwrap();
        let z = rep.last_iterate.unwrap();
        // every constraint is satisfied at the consensus point in the limit
        prop_assert!(p.violation(&z) <= 1e-5 * (1.0 + norm(&z)), "violation {}", p.violation(&z));
    }

    #[test]
    fn partitioning_spectral_bound_dominates_cutting_plane(seed in 0u64..1000) {
        let n = 5;
        let g = sym(n, seed);
        let p = gen_partitioning(&g.matmul(&g)).unwrap();
        let spec = spectral_bound(&p, &vec![1.0; n]).unwrap().bound;
        let cp = sdr_bound_cutting_plane(&p, &CuttingPlaneOptions::default()).unwrap();
        let star = brute_force(&p, BruteMode::Boolean).unwrap().assessment.objective;
        prop_assert!(spec <= cp.bound + 1e-6 * (1.0 + spec.abs()));
        prop_assert!(cp.bound <= star + 1e-6 * (1.0 + star.abs()));
    }
}
