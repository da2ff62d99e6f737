//! Fixed-order dynamic output feedback synthesis.
//!
//! Pipeline: assemble the branch-appropriate inequality (certain-plant
//! reduction when there is no uncertainty), solve its feasibility program,
//! invert the change of variables
//!
//! ```text
//! T1 = A_c R,   T2 = B_c C Q,   T3 = C_c R,   T4 = D_c C Q
//! ```
//!
//! (`Q`, `R` the Lyapunov recovery matrices of the branch) via
//! `A_c = T1 R^-1`, `C_c = T3 R^-1`, `B_c = T2 Q^-1 C+`, `D_c = T4 Q^-1 C+`
//! with `C+ = C^T (C C^T)^-1`, then close the loop and verify the argument
//! criterion over sampled uncertainties. The residuals
//! `|B_c C Q - T2|_F` and `|D_c C Q - T4|_F` vanish exactly when `C = I`;
//! for general `C` they are surfaced and a nonzero value demotes the
//! certificate, so the sampled verification is what gates the result.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;
use crate::lmi::{assemble_certain, assemble_theorem1, assemble_theorem2, Branch, SynthesisLmi};
use crate::model::{
    realize, sample_uncertainty, FoltiSystem, SamplingStrategy, UncertaintyModel,
    UncertaintyRealization,
};
use crate::sdp::{check_lmi, SdpSolver, SolverOptions};
use crate::stability::argument_margin;

/// Dynamic output feedback controller
/// `D^a x_c = A_c x_c + B_c y`, `u = C_c x_c + D_c y`.
#[derive(Debug, Clone)]
pub struct Controller {
    alpha: f64,
    a_c: DMatrix<f64>,
    b_c: DMatrix<f64>,
    c_c: DMatrix<f64>,
    d_c: DMatrix<f64>,
}

impl Controller {
    pub fn new(
        alpha: f64,
        a_c: DMatrix<f64>,
        b_c: DMatrix<f64>,
        c_c: DMatrix<f64>,
        d_c: DMatrix<f64>,
    ) -> Result<Self> {
        let n_c = a_c.nrows();
        if a_c.ncols() != n_c {
            return Err(Error::DimensionError("A_c must be square".into()));
        }
        if b_c.nrows() != n_c || c_c.ncols() != n_c {
            return Err(Error::DimensionError(
                "B_c rows and C_c columns must match the controller order".into(),
            ));
        }
        if n_c > 0 && d_c.nrows() != c_c.nrows() {
            return Err(Error::DimensionError(
                "C_c and D_c must have the same number of rows".into(),
            ));
        }
        if n_c > 0 && b_c.ncols() != d_c.ncols() {
            return Err(Error::DimensionError(
                "B_c and D_c must have the same number of columns".into(),
            ));
        }
        for m in [&a_c, &b_c, &c_c, &d_c] {
            if !linalg::all_finite(m) {
                return Err(Error::InvalidMatrix);
            }
        }
        Ok(Self {
            alpha,
            a_c,
            b_c,
            c_c,
            d_c,
        })
    }

    /// Static output feedback `u = D_c y`.
    pub fn static_gain(alpha: f64, d_c: DMatrix<f64>) -> Result<Self> {
        let (l, m) = (d_c.nrows(), d_c.ncols());
        Self::new(
            alpha,
            DMatrix::zeros(0, 0),
            DMatrix::zeros(0, m),
            DMatrix::zeros(l, 0),
            d_c,
        )
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Controller order `n_c`.
    pub fn order(&self) -> usize {
        self.a_c.nrows()
    }

    /// Number of measurements consumed (plant outputs m).
    pub fn measurements(&self) -> usize {
        self.d_c.ncols()
    }

    /// Number of controls produced (plant inputs l).
    pub fn controls(&self) -> usize {
        self.d_c.nrows()
    }

    pub fn a_c(&self) -> &DMatrix<f64> {
        &self.a_c
    }

    pub fn b_c(&self) -> &DMatrix<f64> {
        &self.b_c
    }

    pub fn c_c(&self) -> &DMatrix<f64> {
        &self.c_c
    }

    pub fn d_c(&self) -> &DMatrix<f64> {
        &self.d_c
    }
}

/// Closed-loop pseudo-state matrix with the plant order.
#[derive(Debug, Clone)]
pub struct ClosedLoop {
    a_cl: DMatrix<f64>,
    alpha: f64,
}

impl ClosedLoop {
    pub fn new(a_cl: DMatrix<f64>, alpha: f64) -> Result<Self> {
        if a_cl.nrows() != a_cl.ncols() {
            return Err(Error::DimensionError(
                "closed-loop matrix must be square".into(),
            ));
        }
        Ok(Self { a_cl, alpha })
    }

    pub fn a_cl(&self) -> &DMatrix<f64> {
        &self.a_cl
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dim(&self) -> usize {
        self.a_cl.nrows()
    }
}

/// Augmented closed loop
/// `A_cl = [[At + Bt D_c C, Bt C_c], [B_c C, A_c]]` for one realization
/// `(At, Bt)` of the plant.
pub fn close_loop(
    a_tilde: &DMatrix<f64>,
    b_tilde: &DMatrix<f64>,
    c: &DMatrix<f64>,
    k: &Controller,
) -> Result<ClosedLoop> {
    let n = a_tilde.nrows();
    let l = b_tilde.ncols();
    let m = c.nrows();
    if a_tilde.ncols() != n || b_tilde.nrows() != n || c.ncols() != n {
        return Err(Error::DimensionError(
            "plant matrices are inconsistent".into(),
        ));
    }
    if k.controls() != l || k.measurements() != m {
        return Err(Error::DimensionError(format!(
            "controller is {}x{} (controls x measurements), plant wants {}x{}",
            k.controls(),
            k.measurements(),
            l,
            m
        )));
    }
    let n_c = k.order();
    let dim = n + n_c;
    let mut a_cl = DMatrix::zeros(dim, dim);
    a_cl.view_mut((0, 0), (n, n))
        .copy_from(&(a_tilde + b_tilde * k.d_c() * c));
    if n_c > 0 {
        a_cl.view_mut((0, n), (n, n_c))
            .copy_from(&(b_tilde * k.c_c()));
        a_cl.view_mut((n, 0), (n_c, n)).copy_from(&(k.b_c() * c));
        a_cl.view_mut((n, n), (n_c, n_c)).copy_from(k.a_c());
    }
    ClosedLoop::new(a_cl, k.alpha())
}

/// Outcome of inverting the change of variables.
#[derive(Debug, Clone)]
pub struct Recovery {
    pub controller: Controller,
    /// `|B_c C Q - T2|_F`.
    pub residual_bc: f64,
    /// `|D_c C Q - T4|_F`.
    pub residual_dc: f64,
    /// Condition estimate of `Q`; values above ~1e10 deserve suspicion.
    pub q_condition: f64,
}

/// Recovers controller matrices from the linearizing variables.
///
/// `q` is the branch recovery matrix of the plant Lyapunov block
/// (`r P_S + conj r conj P_S` in the low branch, `P_S` in the high branch);
/// `r` the controller-block counterpart when the order is positive.
#[allow(clippy::too_many_arguments)]
pub fn recover_controller(
    alpha: f64,
    t1: Option<&DMatrix<f64>>,
    t2: Option<&DMatrix<f64>>,
    t3: Option<&DMatrix<f64>>,
    t4: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: Option<&DMatrix<f64>>,
    c: &DMatrix<f64>,
) -> Result<Recovery> {
    let m = c.nrows();
    let c_pinv = linalg::right_pseudo_inverse(c).map_err(|_| {
        Error::RecoveryFailure(format!(
            "output matrix has rank below its {m} rows, no right inverse"
        ))
    })?;
    let rc = linalg::rcond(q);
    let q_condition = if rc > 0.0 { 1.0 / rc } else { f64::INFINITY };
    let q_inv = q
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::RecoveryFailure("plant Lyapunov block is singular".into()))?;

    let (a_c, c_c, n_c) = match (t1, t3, r) {
        (Some(t1), Some(t3), Some(r)) => {
            let r_inv = r.clone().try_inverse().ok_or_else(|| {
                Error::RecoveryFailure("controller Lyapunov block is singular".into())
            })?;
            (t1 * &r_inv, t3 * &r_inv, t1.nrows())
        }
        (None, None, None) => (DMatrix::zeros(0, 0), DMatrix::zeros(t4.nrows(), 0), 0),
        _ => {
            return Err(Error::RecoveryFailure(
                "T1, T3 and the controller Lyapunov block must be given together".into(),
            ))
        }
    };

    let d_c = t4 * &q_inv * &c_pinv;
    let (b_c, residual_bc) = match t2 {
        Some(t2) => {
            let b_c = t2 * &q_inv * &c_pinv;
            let res = (&b_c * c * q - t2).norm();
            (b_c, res)
        }
        None => (DMatrix::zeros(n_c, m), 0.0),
    };
    let residual_dc = (&d_c * c * q - t4).norm();

    let controller = Controller::new(alpha, a_c, b_c, c_c, d_c)?;
    Ok(Recovery {
        controller,
        residual_bc,
        residual_dc,
        q_condition,
    })
}

/// Sampling plan for robust verification.
#[derive(Debug, Clone)]
pub struct VerifyStrategy {
    /// Include every box vertex while `p + q <= vertex_cap`.
    pub use_vertices: bool,
    pub vertex_cap: usize,
    pub random_count: usize,
    pub random_seed: u64,
}

impl Default for VerifyStrategy {
    fn default() -> Self {
        Self {
            use_vertices: true,
            vertex_cap: 10,
            random_count: 200,
            random_seed: 42,
        }
    }
}

impl VerifyStrategy {
    pub fn vertices_only() -> Self {
        Self {
            random_count: 0,
            ..Self::default()
        }
    }
}

/// Result of sampling the uncertainty box against the argument criterion.
///
/// Vertex sampling falsifies robustness claims, it does not prove them: the
/// closed loop is not affine in the parameters, so a clean sweep over
/// corners and random draws is evidence, not a certificate.
#[derive(Debug, Clone)]
pub struct RobustnessReport {
    pub samples: usize,
    /// Minimum argument margin over all sampled closed loops (radians).
    pub worst_margin: f64,
    pub worst_realization: Option<UncertaintyRealization>,
    /// Realizations whose closed loop had margin <= 0.
    pub failures: Vec<UncertaintyRealization>,
}

/// Closes the loop at every sampled realization and aggregates the argument
/// margins. Vertex enumeration past the guard propagates
/// [`Error::TooManyVertices`].
pub fn verify_robust(
    sys: &FoltiSystem,
    unc: &UncertaintyModel,
    k: &Controller,
    strategy: &VerifyStrategy,
) -> Result<RobustnessReport> {
    let mut realizations = Vec::new();
    if unc.is_certain() {
        realizations.push(UncertaintyRealization::zero(unc));
    } else {
        if strategy.use_vertices && unc.p() + unc.q() <= strategy.vertex_cap {
            realizations.extend(sample_uncertainty(unc, SamplingStrategy::Vertices)?);
        }
        realizations.extend(sample_uncertainty(
            unc,
            SamplingStrategy::Random {
                seed: strategy.random_seed,
                count: strategy.random_count,
            },
        )?);
    }

    let mut worst_margin = f64::INFINITY;
    let mut worst_realization = None;
    let mut failures = Vec::new();
    for r in &realizations {
        let (a_t, b_t) = realize(sys, unc, r)?;
        let cl = close_loop(&a_t, &b_t, sys.c(), k)?;
        let report = argument_margin(cl.a_cl(), sys.alpha())?;
        if report.margin < worst_margin {
            worst_margin = report.margin;
            worst_realization = Some(r.clone());
        }
        if report.margin <= 0.0 {
            failures.push(r.clone());
        }
    }
    Ok(RobustnessReport {
        samples: realizations.len(),
        worst_margin,
        worst_realization,
        failures,
    })
}

/// Options for the synthesis pipeline.
#[derive(Debug, Clone)]
pub struct SynthOptions {
    pub solver: SolverOptions,
    pub verify: VerifyStrategy,
    /// Relative residual above which recovery counts as inexact.
    pub recovery_tol: f64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            solver: SolverOptions::default(),
            verify: VerifyStrategy::default(),
            recovery_tol: 1e-6,
        }
    }
}

/// Recovery bookkeeping attached to a feasible report.
#[derive(Debug, Clone)]
pub struct RecoverySummary {
    pub residual_bc: f64,
    pub residual_dc: f64,
    /// Residuals exceeded `recovery_tol` relative to the T-block norms: the
    /// LMI certificate does not transfer exactly and only the sampled
    /// verification vouches for the controller.
    pub inexact: bool,
    pub q_condition: f64,
}

/// Everything the synthesis pipeline produced.
#[derive(Debug, Clone)]
pub struct SynthesisReport {
    pub feasible: bool,
    pub branch: Branch,
    /// Achieved `t*` of the feasibility program.
    pub solver_margin: f64,
    pub controller: Option<Controller>,
    pub recovery: Option<RecoverySummary>,
    /// Argument margin of the nominal closed loop.
    pub nominal_margin: Option<f64>,
    pub verification: Option<RobustnessReport>,
    pub solver_iterations: usize,
}

impl SynthesisReport {
    /// Feasible, recovered, and every sampled loop (nominal included) stable.
    pub fn verified_stable(&self) -> bool {
        self.feasible
            && self.nominal_margin.map(|m| m > 0.0).unwrap_or(false)
            && self
                .verification
                .as_ref()
                .map(|v| v.worst_margin > 0.0)
                .unwrap_or(false)
    }

    pub fn recovery_inexact(&self) -> bool {
        self.recovery.as_ref().map(|r| r.inexact).unwrap_or(false)
    }
}

/// Assembles the branch-appropriate inequality for a plant.
pub fn assemble_for(sys: &FoltiSystem, unc: &UncertaintyModel, n_c: usize) -> Result<SynthesisLmi> {
    if unc.is_certain() {
        assemble_certain(sys, n_c)
    } else {
        let env = crate::model::uncertainty_bounds(unc);
        if sys.alpha() < 1.0 {
            assemble_theorem1(sys, &env, n_c)
        } else {
            assemble_theorem2(sys, &env, n_c)
        }
    }
}

/// End-to-end synthesis: assemble, solve, recover, close the loop, verify.
///
/// Infeasibility is a clean outcome (`feasible: false`), not an error;
/// numerical solver trouble surfaces as [`Error::SolverFailure`].
pub fn synthesize(
    sys: &FoltiSystem,
    unc: &UncertaintyModel,
    n_c: usize,
    opts: &SynthOptions,
    solver: &mut dyn SdpSolver,
) -> Result<SynthesisReport> {
    let m = sys.outputs();
    let c_rank = linalg::rank(sys.c());
    if c_rank < m {
        return Err(Error::RankDeficientC {
            rank: c_rank,
            rows: m,
        });
    }
    if unc.dim() != sys.n() {
        return Err(Error::DimensionError(format!(
            "uncertainty dimension {} does not match state dimension {}",
            unc.dim(),
            sys.n()
        )));
    }

    let lmi = assemble_for(sys, unc, n_c)?;
    let layout = lmi.problem.layout();
    let verdict = check_lmi(&lmi.problem, solver, &opts.solver)?;

    if !verdict.feasible {
        return Ok(SynthesisReport {
            feasible: false,
            branch: lmi.branch,
            solver_margin: verdict.margin,
            controller: None,
            recovery: None,
            nominal_margin: None,
            verification: None,
            solver_iterations: verdict.stats.newton_iterations,
        });
    }

    let x = &verdict.assignment;
    let q = lmi.vars.p_s.recovery_matrix(lmi.theta, &layout, x);
    let r = lmi
        .vars
        .p_c
        .as_ref()
        .map(|p| p.recovery_matrix(lmi.theta, &layout, x));
    let t1 = lmi.vars.t1.as_ref().map(|v| v.value(&layout, x));
    let t2 = lmi.vars.t2.as_ref().map(|v| v.value(&layout, x));
    let t3 = lmi.vars.t3.as_ref().map(|v| v.value(&layout, x));
    let t4 = lmi.vars.t4.value(&layout, x);

    let recovery = recover_controller(
        sys.alpha(),
        t1.as_ref(),
        t2.as_ref(),
        t3.as_ref(),
        &t4,
        &q,
        r.as_ref(),
        sys.c(),
    )?;

    let t2_norm = t2.as_ref().map(|t| t.norm()).unwrap_or(0.0);
    let inexact = recovery.residual_bc > opts.recovery_tol * (1.0 + t2_norm)
        || recovery.residual_dc > opts.recovery_tol * (1.0 + t4.norm());

    let controller = recovery.controller.clone();
    let nominal = close_loop(sys.a(), sys.b(), sys.c(), &controller)?;
    let nominal_margin = argument_margin(nominal.a_cl(), sys.alpha())?.margin;
    let verification = verify_robust(sys, unc, &controller, &opts.verify)?;

    Ok(SynthesisReport {
        feasible: true,
        branch: lmi.branch,
        solver_margin: verdict.margin,
        controller: Some(controller),
        recovery: Some(RecoverySummary {
            residual_bc: recovery.residual_bc,
            residual_dc: recovery.residual_dc,
            inexact,
            q_condition: recovery.q_condition,
        }),
        nominal_margin: Some(nominal_margin),
        verification: Some(verification),
        solver_iterations: verdict.stats.newton_iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::benchmark_plant;
    use crate::sdp::BarrierSolver;
    use crate::stability::lemma1_check;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dm(r: usize, c: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(r, c, v)
    }

    #[test]
    fn zero_gain_controller_decouples_loop() {
        let a_t = dm(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let b_t = DMatrix::identity(2, 2);
        let c = DMatrix::identity(2, 2);
        let k = Controller::new(
            0.8,
            dm(1, 1, &[-5.0]),
            DMatrix::zeros(1, 2),
            DMatrix::zeros(2, 1),
            DMatrix::zeros(2, 2),
        )
        .unwrap();
        let cl = close_loop(&a_t, &b_t, &c, &k).unwrap();
        let mut expect = DMatrix::zeros(3, 3);
        expect.view_mut((0, 0), (2, 2)).copy_from(&a_t);
        expect[(2, 2)] = -5.0;
        assert!(linalg::max_abs(&(cl.a_cl() - expect)) < 1e-14);
    }

    #[test]
    fn static_controller_reduces_to_output_injection() {
        let (sys, _) = benchmark_plant(0.65, true);
        let d_c = dm(3, 3, &[-1.0, 0.0, 0.0, 0.0, -2.0, 0.0, 0.0, 0.0, -3.0]);
        let k = Controller::static_gain(0.65, d_c.clone()).unwrap();
        let cl = close_loop(sys.a(), sys.b(), sys.c(), &k).unwrap();
        let expect = sys.a() + sys.b() * d_c * sys.c();
        assert!(linalg::max_abs(&(cl.a_cl() - expect)) < 1e-14);
        assert_eq!(cl.dim(), 3);
    }

    #[test]
    fn closed_loop_size_grows_with_order() {
        let (sys, _) = benchmark_plant(0.65, true);
        let k = Controller::new(
            0.65,
            DMatrix::zeros(2, 2),
            DMatrix::zeros(2, 3),
            DMatrix::zeros(3, 2),
            DMatrix::zeros(3, 3),
        )
        .unwrap();
        let cl = close_loop(sys.a(), sys.b(), sys.c(), &k).unwrap();
        assert_eq!(cl.dim(), 5);
    }

    #[test]
    fn close_loop_rejects_dimension_mismatch() {
        let (sys, _) = benchmark_plant(0.65, true);
        let k = Controller::static_gain(0.65, DMatrix::zeros(2, 2)).unwrap();
        assert!(matches!(
            close_loop(sys.a(), sys.b(), sys.c(), &k),
            Err(Error::DimensionError(_))
        ));
    }

    #[test]
    fn recovery_with_identity_output_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let c = DMatrix::<f64>::identity(3, 3);
        let q = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0))
            + DMatrix::identity(3, 3) * 4.0;
        let r = dm(1, 1, &[2.5]);
        let t1 = dm(1, 1, &[rng.random_range(-1.0..1.0)]);
        let t2 = DMatrix::from_fn(1, 3, |_, _| rng.random_range(-1.0..1.0));
        let t3 = DMatrix::from_fn(3, 1, |_, _| rng.random_range(-1.0..1.0));
        let t4 = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0));

        let rec = recover_controller(
            0.65,
            Some(&t1),
            Some(&t2),
            Some(&t3),
            &t4,
            &q,
            Some(&r),
            &c,
        )
        .unwrap();
        assert!(rec.residual_bc < 1e-9);
        assert!(rec.residual_dc < 1e-9);

        // Round trip through the change of variables.
        let k = &rec.controller;
        assert!(linalg::max_abs(&(k.a_c() * &r - &t1)) < 1e-9);
        assert!(linalg::max_abs(&(k.b_c() * &c * &q - &t2)) < 1e-9);
        assert!(linalg::max_abs(&(k.c_c() * &r - &t3)) < 1e-9);
        assert!(linalg::max_abs(&(k.d_c() * &c * &q - &t4)) < 1e-9);
    }

    #[test]
    fn recovery_residual_vs_least_squares_oracle() {
        // With a wide C the fixed recovery formula cannot beat the
        // least-squares minimum of |X C Q - T|_F.
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let c = dm(1, 3, &[1.0, 0.0, 1.0]);
        let q = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0))
            + DMatrix::identity(3, 3) * 4.0;
        let t4 = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0));

        let rec = recover_controller(0.65, None, None, None, &t4, &q, None, &c).unwrap();

        let cq = &c * &q; // 1 x 3
        let gram = (&cq * cq.transpose())[(0, 0)];
        let x_star = &t4 * cq.transpose() / gram;
        let ls_min = (&x_star * &cq - &t4).norm();
        assert!(rec.residual_dc >= ls_min - 1e-12);
        assert!(ls_min > 1e-3, "generic instance should be inexact");
    }

    #[test]
    fn recovery_rejects_rank_deficient_output() {
        let c = dm(2, 3, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let q = DMatrix::identity(3, 3);
        let t4 = DMatrix::zeros(3, 3);
        assert!(matches!(
            recover_controller(0.65, None, None, None, &t4, &q, None, &c),
            Err(Error::RecoveryFailure(_))
        ));
    }

    #[test]
    fn recovery_rejects_singular_q() {
        let c = DMatrix::<f64>::identity(2, 2);
        let q = DMatrix::zeros(2, 2);
        let t4 = DMatrix::zeros(2, 2);
        assert!(matches!(
            recover_controller(0.65, None, None, None, &t4, &q, None, &c),
            Err(Error::RecoveryFailure(_))
        ));
    }

    #[test]
    fn verify_zero_controller_records_open_loop_failure() {
        let (sys, unc) = benchmark_plant(0.65, true);
        let k = Controller::static_gain(0.65, DMatrix::zeros(3, 3)).unwrap();
        let report = verify_robust(&sys, &unc, &k, &VerifyStrategy::vertices_only()).unwrap();
        assert_eq!(report.samples, 16);
        assert!(report.worst_margin <= 0.0);
        assert!(!report.failures.is_empty());
    }

    #[test]
    fn reference_static_gain_passes_vertex_verification() {
        // A published gain for this benchmark (identity output map). The
        // Gershgorin rows of A + D_c all sit in the open left half-plane:
        // centers -3.813, -9.002, -26.816 with radii 3.633, 5.625, 8.726,
        // so the nominal loop clears the boundary before any eigenvalue
        // computation.
        let (sys, unc) = benchmark_plant(0.65, true);
        let d_c = dm(
            3,
            3,
            &[
                -1.813, 0.417, 4.216, 0.680, -12.002, -4.945, 4.721, -4.005, -30.816,
            ],
        );
        let a_cl = sys.a() + &d_c;
        for i in 0..3 {
            let center = a_cl[(i, i)];
            let radius: f64 = (0..3).filter(|&j| j != i).map(|j| a_cl[(i, j)].abs()).sum();
            assert!(center + radius < 0.0, "row {i} disc leaves the half-plane");
        }

        let k = Controller::static_gain(0.65, d_c).unwrap();
        let report = verify_robust(&sys, &unc, &k, &VerifyStrategy::default()).unwrap();
        assert_eq!(report.samples, 216);
        assert!(
            report.worst_margin > 1e-3,
            "worst margin {}",
            report.worst_margin
        );
        assert!(report.failures.is_empty());
    }

    #[test]
    fn synthesize_certain_static_case() {
        // Already-stable plant A = -I, B = C = I, no uncertainty: the
        // certain-mode reduction must be feasible and the recovered static
        // gain keep the loop stable.
        let sys = FoltiSystem::new(
            0.65,
            -DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
        )
        .unwrap();
        let unc = UncertaintyModel::certain(2);
        let mut solver = BarrierSolver;
        let report = synthesize(&sys, &unc, 0, &SynthOptions::default(), &mut solver).unwrap();
        assert!(report.feasible);
        assert!(report.verified_stable());
        assert!(!report.recovery_inexact());

        // Certain-mode consistency: the nominal closed loop passes the
        // analysis-side LMI as well.
        let k = report.controller.unwrap();
        let cl = close_loop(sys.a(), sys.b(), sys.c(), &k).unwrap();
        let check = lemma1_check(cl.a_cl(), 0.65, &mut solver, &SolverOptions::default()).unwrap();
        assert!(check.feasible);
    }

    #[test]
    fn synthesize_certain_scalar_low_order() {
        // Scalar plant with the reduced constraint: P_S = 1, T4 = 0 already
        // satisfies sym(A Pt + B T4) = -4 cos(theta) < 0.
        let sys =
            FoltiSystem::new(0.5, dm(1, 1, &[-1.0]), dm(1, 1, &[1.0]), dm(1, 1, &[1.0])).unwrap();
        let unc = UncertaintyModel::certain(1);
        let mut solver = BarrierSolver;
        let report = synthesize(&sys, &unc, 0, &SynthOptions::default(), &mut solver).unwrap();
        assert!(report.feasible);
        assert!(report.verified_stable());
    }

    #[test]
    fn synthesize_rejects_rank_deficient_output() {
        let (sys, unc) = benchmark_plant(0.65, true);
        let sys = sys
            .with_output(dm(2, 3, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]))
            .unwrap();
        let mut solver = BarrierSolver;
        assert!(matches!(
            synthesize(&sys, &unc, 0, &SynthOptions::default(), &mut solver),
            Err(Error::RankDeficientC { .. })
        ));
    }

    #[test]
    fn synthesize_certain_nominal_benchmark() {
        // Nominal benchmark plant with the uncertainty stripped: corollary
        // mode, static gain, recovered loop stable.
        let (sys, _) = benchmark_plant(0.65, true);
        let unc = UncertaintyModel::certain(3);
        let mut solver = BarrierSolver;
        let report = synthesize(&sys, &unc, 0, &SynthOptions::default(), &mut solver).unwrap();
        assert!(report.feasible);
        assert!(
            report.verified_stable(),
            "nominal margin {:?}",
            report.nominal_margin
        );
    }
}
