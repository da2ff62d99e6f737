//! Acceptance suite: one test per criterion, each printing a PASS line with
//! its runtime (visible under `cargo test -- --nocapture`).

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fraclmi::linalg;
use fraclmi::lmi::{AffineMatrixExpr, Constraint, LmiBuilder, LmiProblem};
use fraclmi::model::{
    benchmark_plant, realize, sample_uncertainty, uncertainty_bounds, SamplingStrategy,
    UncertaintyModel,
};
use fraclmi::sdp::{
    export_sdpa, read_sdpa, solve, to_feasibility_program, BarrierSolver, SdpStatus,
    SolverOptions,
};
use fraclmi::sim::{gl_coefficients, mittag_leffler, simulate, Memory, SimConfig};
use fraclmi::stability::{argument_margin, lemma1_check, lemma2_check};
use fraclmi::synthesis::{
    close_loop, synthesize, Controller, SynthOptions, VerifyStrategy,
};

fn pass(criterion: &str, elapsed: Duration, detail: &str) {
    println!(
        "ACCEPTANCE {criterion}: PASS ({:.2}s) {detail}",
        elapsed.as_secs_f64()
    );
}

#[test]
fn criterion_01_envelope_exactness() {
    let start = Instant::now();
    let (_, unc) = benchmark_plant(0.65, true);
    let env = uncertainty_bounds(&unc);
    let h_expect =
        DMatrix::from_row_slice(3, 3, &[0.18, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.18]);
    let g_expect =
        DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, 0.0, 0.36, 0.36, 0.0, 0.36, 0.36]);
    assert!(linalg::max_abs(&(env.h() - &h_expect)) <= 1e-12);
    assert!(linalg::max_abs(&(env.g() - &g_expect)) <= 1e-12);
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(1));
    pass("1 envelope-exactness", elapsed, "H, G exact to 1e-12");
}

#[test]
fn criterion_02_open_loop_instability() {
    let start = Instant::now();
    let (sys, _) = benchmark_plant(0.65, true);
    // Characteristic polynomial (3 - l)(l^2 - 2l - 9) = 0.
    let expect = {
        let mut v = [3.0, 1.0 + 10.0f64.sqrt(), 1.0 - 10.0f64.sqrt()];
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    };
    let report = argument_margin(sys.a(), 0.65).unwrap();
    let mut got: Vec<f64> = report.eigenvalues.iter().map(|e| e.re).collect();
    got.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for (g, e) in got.iter().zip(expect) {
        assert!((g - e).abs() <= 1e-9, "{g} vs {e}");
    }
    assert!(report.eigenvalues.iter().all(|e| e.im.abs() <= 1e-9));
    assert!(report.margin < 0.0);
    let report2 = argument_margin(sys.a(), 1.25).unwrap();
    assert!(report2.margin < 0.0);
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(1));
    pass(
        "2 open-loop-instability",
        elapsed,
        &format!(
            "margins {:.4} / {:.4} rad",
            report.margin, report2.margin
        ),
    );
}

fn reproduce_orders(alpha: f64) -> Vec<(usize, fraclmi::synthesis::SynthesisReport)> {
    let (sys, unc) = benchmark_plant(alpha, true);
    let opts = SynthOptions::default();
    let mut solver = BarrierSolver;
    [0usize, 1, 2]
        .iter()
        .map(|&n_c| {
            let report = synthesize(&sys, &unc, n_c, &opts, &mut solver)
                .unwrap_or_else(|e| panic!("order {n_c}: {e}"));
            (n_c, report)
        })
        .collect()
}

fn assert_reproduction(alpha: f64) -> (Duration, String) {
    let start = Instant::now();
    let mut detail = String::new();
    for (n_c, report) in reproduce_orders(alpha) {
        assert!(report.feasible, "order {n_c} infeasible (alpha {alpha})");
        let rec = report.recovery.as_ref().expect("recovery present");
        assert!(
            rec.residual_bc <= 1e-8 && rec.residual_dc <= 1e-8,
            "order {n_c}: residuals {:.2e} / {:.2e}",
            rec.residual_bc,
            rec.residual_dc
        );
        let ver = report.verification.as_ref().expect("verification present");
        assert_eq!(ver.samples, 216);
        assert!(
            ver.worst_margin > 0.0,
            "order {n_c}: worst margin {}",
            ver.worst_margin
        );
        detail.push_str(&format!("nc{n_c} margin {:.3}; ", ver.worst_margin));
    }
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(60));
    (elapsed, detail)
}

#[test]
fn criterion_03_low_branch_reproduction() {
    let (elapsed, detail) = assert_reproduction(0.65);
    pass("3 low-branch-synthesis", elapsed, &detail);
}

#[test]
fn criterion_04_high_branch_reproduction() {
    let (elapsed, detail) = assert_reproduction(1.25);
    pass("4 high-branch-synthesis", elapsed, &detail);
}

#[test]
fn criterion_05_reference_gain_cross_check() {
    let start = Instant::now();
    let (sys, unc) = benchmark_plant(0.65, true);
    let d_c = DMatrix::from_row_slice(
        3,
        3,
        &[
            -1.813, 0.417, 4.216, 0.680, -12.002, -4.945, 4.721, -4.005, -30.816,
        ],
    );
    // Gershgorin pre-check: every disc of A + D_c in the open left
    // half-plane guarantees the nominal case.
    let a_cl = sys.a() + &d_c;
    for i in 0..3 {
        let center = a_cl[(i, i)];
        let radius: f64 = (0..3).filter(|&j| j != i).map(|j| a_cl[(i, j)].abs()).sum();
        assert!(center + radius < 0.0);
    }
    let k = Controller::static_gain(0.65, d_c).unwrap();
    let nominal = argument_margin(&a_cl, 0.65).unwrap();
    assert!(nominal.margin > 1e-3);
    let report =
        fraclmi::synthesis::verify_robust(&sys, &unc, &k, &VerifyStrategy::vertices_only())
            .unwrap();
    assert_eq!(report.samples, 16);
    assert!(
        report.worst_margin > 1e-3,
        "worst vertex margin {}",
        report.worst_margin
    );
    let elapsed = start.elapsed();
    pass(
        "5 reference-gain-cross-check",
        elapsed,
        &format!("worst vertex margin {:.4} rad", report.worst_margin),
    );
}

#[test]
fn criterion_06_analysis_oracle_equivalence() {
    let start = Instant::now();
    let mut solver = BarrierSolver;
    let opts = SolverOptions::default();
    let settings: Vec<(f64, bool)> = vec![
        (0.3, true),
        (0.65, true),
        (1.0, false),
        (1.25, false),
        (1.6, false),
    ];
    let mut detail = String::new();
    for (alpha, low) in settings {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + (alpha * 100.0) as u64);
        let mut agree = 0usize;
        for case in 0..50 {
            let a = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-2.0..2.0));
            let margin = argument_margin(&a, alpha).unwrap().margin;
            let feasible = if low {
                lemma1_check(&a, alpha, &mut solver, &opts).unwrap().feasible
            } else {
                lemma2_check(&a, alpha, &mut solver, &opts).unwrap().feasible
            };
            if feasible == (margin > 0.0) {
                agree += 1;
            } else {
                assert!(
                    margin.abs() < 1e-4,
                    "alpha {alpha} case {case}: disagreement at margin {margin}"
                );
            }
        }
        assert!(agree >= 49, "alpha {alpha}: only {agree}/50 agreements");
        detail.push_str(&format!("a{alpha}: {agree}/50; "));
    }
    let elapsed = start.elapsed();
    pass("6 analysis-oracle-equivalence", elapsed, &detail);
}

#[test]
fn criterion_07_matrix_inequality_suites() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4100);
    let i3 = DMatrix::<f64>::identity(3, 3);

    // Young-type bound.
    for _ in 0..100 {
        let x = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-2.0..2.0));
        let y = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-2.0..2.0));
        for eta in [0.1, 1.0, 10.0] {
            let slack = x.transpose() * &x * eta + y.transpose() * &y / eta
                - x.transpose() * &y
                - y.transpose() * &x;
            assert!(linalg::min_eig_sym(&slack) >= -1e-10);
        }
    }
    // Inverse-completion bound.
    for _ in 0..100 {
        let x = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-2.0..2.0));
        let y = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-2.0..2.0));
        let lam = linalg::max_eig_sym(&(&y * y.transpose()));
        let eps = rng.random_range(0.05..0.95) / lam.max(1e-9);
        let gram = &i3 - &y * y.transpose() * eps;
        assert!(linalg::min_eig_sym(&gram) > 0.0);
        let inv = gram.try_inverse().unwrap();
        let sum = &x + &y;
        let slack = x.transpose() * inv * &x + &i3 / eps - sum.transpose() * &sum;
        assert!(linalg::min_eig_sym(&slack) >= -1e-10);
    }
    // Envelope chain on the benchmark uncertainty.
    let (sys, unc) = benchmark_plant(0.65, true);
    let env = uncertainty_bounds(&unc);
    let g_lam = linalg::max_eig_sym(env.g());
    let samples = sample_uncertainty(
        &unc,
        SamplingStrategy::Random {
            seed: 4200,
            count: 100,
        },
    )
    .unwrap();
    for r in &samples {
        let eps = rng.random_range(0.05..0.95) / g_lam;
        let gram = &i3 - env.g() * eps;
        assert!(linalg::min_eig_sym(&gram) > 0.0);
        let inv = gram.try_inverse().unwrap();
        let da = unc.delta_a(&r.a_params);
        let sum = sys.a() + &da;
        let slack = sys.a().transpose() * inv * sys.a() + &i3 / eps - sum.transpose() * &sum;
        assert!(linalg::min_eig_sym(&slack) >= -1e-10);
    }
    let elapsed = start.elapsed();
    pass(
        "7 matrix-inequality-suites",
        elapsed,
        "300 instances, slack >= -1e-10",
    );
}

#[test]
fn criterion_08_simulator_fidelity() {
    let start = Instant::now();
    // Integer order against the exponential.
    let cl1 = fraclmi::synthesis::ClosedLoop::new(DMatrix::from_row_slice(1, 1, &[-1.0]), 1.0)
        .unwrap();
    let x0 = DVector::from_vec(vec![1.0]);
    let tr = simulate(
        &cl1,
        &x0,
        &SimConfig {
            h: 1e-3,
            horizon: 1.0,
            memory: Memory::Full,
        },
    )
    .unwrap();
    let rel = (tr.state_at(1.0)[0] - (-1.0f64).exp()).abs() / (-1.0f64).exp();
    assert!(rel <= 1e-3, "integer-order relative error {rel}");

    // Fractional order against the Mittag-Leffler series.
    let max_rel = |h: f64| -> f64 {
        let cl = fraclmi::synthesis::ClosedLoop::new(
            DMatrix::from_row_slice(1, 1, &[-1.0]),
            0.65,
        )
        .unwrap();
        let tr = simulate(
            &cl,
            &x0,
            &SimConfig {
                h,
                horizon: 5.0,
                memory: Memory::Full,
            },
        )
        .unwrap();
        tr.times()
            .iter()
            .zip(tr.states())
            .filter(|(t, _)| **t >= 0.1)
            .map(|(t, x)| {
                let exact = mittag_leffler(0.65, -(t.powf(0.65)));
                (x[0] - exact).abs() / exact.abs()
            })
            .fold(0.0, f64::max)
    };
    let e_full = max_rel(1e-3);
    assert!(e_full <= 1e-3, "fractional relative error {e_full}");
    let e_coarse = max_rel(2e-3);
    let gain = e_coarse / e_full;
    assert!(gain >= 1.8, "step-halving gain {gain}");

    // Weight identity spot checks.
    let c = gl_coefficients(1.0, 3);
    assert_eq!(c[1], -1.0);
    assert_eq!(c[2], 0.0);

    let elapsed = start.elapsed();
    pass(
        "8 simulator-fidelity",
        elapsed,
        &format!("ML error {e_full:.2e}, halving gain {gain:.2}"),
    );
}

#[test]
fn criterion_09_closed_loop_convergence() {
    let start = Instant::now();
    let mut detail = String::new();
    for alpha in [0.65, 1.25] {
        let (sys, unc) = benchmark_plant(alpha, true);
        let mut solver = BarrierSolver;
        let report = synthesize(&sys, &unc, 1, &SynthOptions::default(), &mut solver).unwrap();
        assert!(report.feasible, "alpha {alpha} infeasible");
        let k = report.controller.expect("controller");
        let x0 = DVector::from_vec(vec![1.0, -1.0, 0.5, 0.0]);
        let vertices = sample_uncertainty(&unc, SamplingStrategy::Vertices).unwrap();
        let mut worst_ratio = 0.0f64;
        for r in &vertices {
            let (a_t, b_t) = realize(&sys, &unc, r).unwrap();
            let cl = close_loop(&a_t, &b_t, sys.c(), &k).unwrap();
            let tr = simulate(&cl, &x0, &SimConfig::default()).unwrap();
            let ratio = tr.state_at(10.0).amax() / x0.amax();
            worst_ratio = worst_ratio.max(ratio);
            assert!(
                ratio < 0.01,
                "alpha {alpha}: vertex state ratio {ratio} at t=10"
            );
        }
        detail.push_str(&format!("a{alpha}: worst |x(10)|/|x0| = {worst_ratio:.2e}; "));
    }
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(120));
    pass("9 closed-loop-convergence", elapsed, &detail);
}

#[test]
fn criterion_10_strict_lmi_plumbing() {
    let start = Instant::now();
    let scalar_block = |v: f64| {
        Constraint::new(
            "c",
            AffineMatrixExpr::from_const(DMatrix::from_row_slice(1, 1, &[v])),
        )
    };
    // Constant feasible block.
    let p1 = LmiProblem::new(vec![], vec![scalar_block(-1.0)], vec![]).unwrap();
    let s1 = solve(&to_feasibility_program(&p1, 1e-6).unwrap(), &SolverOptions::default())
        .unwrap();
    assert_eq!(s1.status, SdpStatus::Feasible);
    assert!((s1.margin + 1.0).abs() <= 1e-6);

    // Constant infeasible block.
    let p2 = LmiProblem::new(vec![], vec![scalar_block(1.0)], vec![]).unwrap();
    let s2 = solve(&to_feasibility_program(&p2, 1e-6).unwrap(), &SolverOptions::default())
        .unwrap();
    assert_eq!(s2.status, SdpStatus::Infeasible);
    assert!((s2.margin - 1.0).abs() <= 1e-6);

    // Diagonal band: optimum -1 at x = 0.
    let mut b = LmiBuilder::new();
    let x = b.scalar("x");
    let e1 = x
        .expr()
        .add(&AffineMatrixExpr::from_const(DMatrix::from_row_slice(1, 1, &[-1.0])));
    let e2 = x
        .expr()
        .neg()
        .add(&AffineMatrixExpr::from_const(DMatrix::from_row_slice(1, 1, &[-1.0])));
    let band = AffineMatrixExpr::diag2(&e1, &e2);
    let p3 = b.finish(vec![Constraint::new("band", band)], vec![]).unwrap();
    let prog3 = to_feasibility_program(&p3, 1e-6).unwrap();
    let s3 = solve(&prog3, &SolverOptions::default()).unwrap();
    assert_eq!(s3.status, SdpStatus::Feasible);
    assert!((s3.margin + 1.0).abs() <= 1e-6);

    // SDPA round trip of the nontrivial program.
    let mut bytes = Vec::new();
    export_sdpa(&prog3, &mut bytes).unwrap();
    let parsed = read_sdpa(&mut bytes.as_slice()).unwrap();
    assert_eq!(parsed.free_vars(), prog3.free_vars());
    assert_eq!(parsed.blocks().len(), prog3.blocks().len());
    let layout_a = prog3.layout();
    let layout_b = parsed.layout();
    let probe = vec![0.37, -0.81];
    for (ba, bb) in prog3.blocks().iter().zip(parsed.blocks()) {
        let ma = ba.expr.eval(&layout_a, &probe);
        let mb = bb.expr.eval(&layout_b, &probe);
        assert!(linalg::max_abs(&(ma - mb)) <= 1e-15);
    }
    let elapsed = start.elapsed();
    pass(
        "10 strict-lmi-plumbing",
        elapsed,
        &format!("t* = {:.6} / {:.6} / {:.6}", s1.margin, s2.margin, s3.margin),
    );
}

// Theorem soundness spot check (module invariant, not a numbered
// criterion): a feasible synthesis with exact recovery must verify on every
// sample it draws.
#[test]
fn soundness_feasible_implies_sampled_stability() {
    let (sys, unc) = benchmark_plant(0.65, true);
    let mut solver = BarrierSolver;
    let report = synthesize(&sys, &unc, 0, &SynthOptions::default(), &mut solver).unwrap();
    assert!(report.feasible);
    assert!(!report.recovery_inexact());
    let ver = report.verification.unwrap();
    assert!(ver.failures.is_empty());
    assert!(ver.worst_margin > 0.0);
}

// Certain-mode consistency across both branches.
#[test]
fn certain_mode_agrees_with_lemma_checks() {
    let mut solver = BarrierSolver;
    let opts = SynthOptions::default();
    for alpha in [0.65, 1.25] {
        let (sys, _) = benchmark_plant(alpha, true);
        let unc = UncertaintyModel::certain(3);
        let report = synthesize(&sys, &unc, 1, &opts, &mut solver).unwrap();
        assert!(report.feasible, "alpha {alpha}");
        let k = report.controller.unwrap();
        let cl = close_loop(sys.a(), sys.b(), sys.c(), &k).unwrap();
        let ok = if alpha < 1.0 {
            lemma1_check(cl.a_cl(), alpha, &mut solver, &opts.solver)
                .unwrap()
                .feasible
        } else {
            lemma2_check(cl.a_cl(), alpha, &mut solver, &opts.solver)
                .unwrap()
                .feasible
        };
        assert!(ok, "closed loop fails the analysis LMI at alpha {alpha}");
    }
}
