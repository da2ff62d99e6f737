//! Semidefinite feasibility backend.
//!
//! Strict LMIs are reduced to one conic program: introduce a scalar `t`,
//! turn every negative-definiteness block `E < 0` into `t I - E >= 0`, shift
//! every positivity block `F > 0` to `F - d I >= 0` (with `d` the scaled
//! strictness), and minimize `t`. The source problem is declared feasible
//! iff the optimum satisfies `t* <= -d`; `t*` itself does not depend on `d`,
//! only the acceptance threshold does.
//!
//! One in-tree backend is provided ([`BarrierSolver`], a log-det barrier
//! interior-point method), behind the [`SdpSolver`] trait so alternatives
//! can be swapped in via `FRACLMI_SOLVER`. Programs can also be exported to
//! the SDPA sparse format for external solvers ([`export_sdpa`]).
//!
//! Every `Feasible` verdict is re-validated by dense eigenvalue
//! decomposition of all blocks at the returned assignment; solver status is
//! never trusted on its own.

mod barrier;
mod sdpa;

pub use sdpa::{export_sdpa, read_sdpa};

use std::time::Duration;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;
use crate::lmi::{
    AffineMatrixExpr, Constraint, DecisionVariable, LmiProblem, VarId, VarKind, VarLayout,
};

/// Linear-objective program over PSD blocks: minimize `objective . x`
/// subject to every block being positive semidefinite (strictly interior
/// for the barrier backend).
#[derive(Debug, Clone)]
pub struct ConicProgram {
    vars: Vec<DecisionVariable>,
    objective: Vec<f64>,
    blocks: Vec<Constraint>,
    /// Objective value at or below which the source LMI counts as feasible.
    threshold: Option<f64>,
}

impl ConicProgram {
    pub fn new(
        vars: Vec<DecisionVariable>,
        objective: Vec<f64>,
        blocks: Vec<Constraint>,
        threshold: Option<f64>,
    ) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::EmptyProblem);
        }
        let layout = VarLayout::of(&vars);
        if objective.len() != layout.total_scalars() {
            return Err(Error::DimensionError(format!(
                "objective has {} entries for {} scalars",
                objective.len(),
                layout.total_scalars()
            )));
        }
        for b in &blocks {
            if b.expr.nrows() != b.expr.ncols() || !b.expr.is_symmetric() {
                return Err(Error::DimensionError(format!(
                    "PSD block {:?} is not square symmetric",
                    b.label
                )));
            }
        }
        Ok(Self {
            vars,
            objective,
            blocks,
            threshold,
        })
    }

    pub fn vars(&self) -> &[DecisionVariable] {
        &self.vars
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn blocks(&self) -> &[Constraint] {
        &self.blocks
    }

    pub fn threshold(&self) -> Option<f64> {
        self.threshold
    }

    pub fn layout(&self) -> VarLayout {
        VarLayout::of(&self.vars)
    }

    /// Number of free scalar variables.
    pub fn free_vars(&self) -> usize {
        self.layout().total_scalars()
    }
}

/// Options shared by the backends.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Base strictness for `< 0` constraints; scaled by the largest absolute
    /// entry of the constraint constants.
    pub delta: f64,
    /// Absolute tolerance on the achieved objective value.
    pub tol: f64,
    /// Half-width of the band around `-delta` classified as `Marginal`.
    pub marginal_band: f64,
    /// Newton iterations per centering stage.
    pub max_newton: usize,
    /// Barrier stages (factor-10 reductions of the path parameter).
    pub max_stages: usize,
    /// Box safeguard on every scalar variable.
    pub var_bound: f64,
    /// Stop minimizing once the objective reaches this value. Feasibility
    /// callers use it: any strictly feasible point at a comfortable margin
    /// settles the verdict, and running to the optimum would inflate the
    /// variable scales (many of these LMIs are nearly homogeneous). `None`
    /// solves to full accuracy.
    pub stop_below: Option<f64>,
    /// Stop once the central-path bound `t - nu mu` certifies the optimum
    /// cannot return below this value, deciding infeasibility without
    /// polishing a degenerate optimum. `None` solves to full accuracy.
    pub decide_threshold: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            delta: 1e-6,
            tol: 1e-8,
            marginal_band: 1e-7,
            max_newton: 80,
            max_stages: 64,
            var_bound: 1e7,
            stop_below: None,
            decide_threshold: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Feasible,
    Infeasible,
    Marginal,
    NumericalFailure,
}

#[derive(Debug, Clone, Default)]
pub struct SolverStats {
    pub newton_iterations: usize,
    pub stages: usize,
    pub wall: Duration,
    /// Some variable ended within 0.1% of the box safeguard.
    pub hit_bound: bool,
    pub message: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: SdpStatus,
    /// Flat assignment over the program layout.
    pub assignment: Vec<f64>,
    /// Achieved objective value `t*`.
    pub margin: f64,
    pub stats: SolverStats,
}

/// Strictness actually applied to a problem: `delta` scaled by the largest
/// absolute entry over all constraint constants.
pub fn scaled_delta(p: &LmiProblem, delta: f64) -> f64 {
    let mut scale = 0.0f64;
    for c in p.neg_constraints().iter().chain(p.pos_constraints()) {
        scale = scale.max(linalg::max_abs(c.expr.constant()));
    }
    delta * scale.max(1.0)
}

/// Reduces a strict-LMI problem to the `minimize t` conic program described
/// in the module docs. Errors with [`Error::EmptyProblem`] when there is no
/// definiteness constraint to minimize over.
pub fn to_feasibility_program(p: &LmiProblem, delta: f64) -> Result<ConicProgram> {
    if p.neg_constraints().is_empty() {
        return Err(Error::EmptyProblem);
    }
    let d = scaled_delta(p, delta);
    let next_id = p.vars().iter().map(|v| v.id.0 + 1).max().unwrap_or(0);
    let t = DecisionVariable {
        id: VarId(next_id),
        name: "t".into(),
        kind: VarKind::Scalar,
    };

    let mut vars = p.vars().to_vec();
    vars.push(t.clone());

    let mut blocks = Vec::new();
    for c in p.neg_constraints() {
        let dim = c.expr.nrows();
        let expr = AffineMatrixExpr::scaled_var(&t, DMatrix::identity(dim, dim)).sub(&c.expr);
        blocks.push(Constraint::new(&c.label, expr));
    }
    for c in p.pos_constraints() {
        let dim = c.expr.nrows();
        let expr = c
            .expr
            .add(&AffineMatrixExpr::from_const(-DMatrix::identity(dim, dim) * d));
        blocks.push(Constraint::new(&c.label, expr));
    }

    let layout = VarLayout::of(&vars);
    let mut objective = vec![0.0; layout.total_scalars()];
    objective[layout.slot(t.id, 0)] = 1.0;

    ConicProgram::new(vars, objective, blocks, Some(-d))
}

/// Backend contract. A solver handle must not be shared across threads
/// during a solve; distinct solves on distinct handles may run in parallel.
pub trait SdpSolver {
    fn name(&self) -> &'static str;
    fn solve(&mut self, program: &ConicProgram, opts: &SolverOptions) -> Result<SdpSolution>;
}

/// The in-tree log-det barrier interior-point backend.
#[derive(Debug, Default, Clone)]
pub struct BarrierSolver;

impl SdpSolver for BarrierSolver {
    fn name(&self) -> &'static str {
        "barrier"
    }

    fn solve(&mut self, program: &ConicProgram, opts: &SolverOptions) -> Result<SdpSolution> {
        barrier::solve(program, opts)
    }
}

/// Solves with the default backend.
pub fn solve(program: &ConicProgram, opts: &SolverOptions) -> Result<SdpSolution> {
    BarrierSolver.solve(program, opts)
}

/// Backend selection via the `FRACLMI_SOLVER` environment variable
/// (unset or `barrier` for the in-tree backend).
pub fn solver_from_env() -> Result<Box<dyn SdpSolver>> {
    match std::env::var("FRACLMI_SOLVER") {
        Err(_) => Ok(Box::new(BarrierSolver)),
        Ok(name) if name.is_empty() || name == "barrier" => Ok(Box::new(BarrierSolver)),
        Ok(other) => Err(Error::UnknownBackend(other)),
    }
}

/// Outcome of a strict-LMI feasibility check, with the assignment restricted
/// to the source problem's variables.
#[derive(Debug, Clone)]
pub struct LmiVerdict {
    pub feasible: bool,
    pub marginal: bool,
    /// Achieved `t*`.
    pub margin: f64,
    pub assignment: Vec<f64>,
    pub stats: SolverStats,
}

/// Solves the feasibility program of `p` and independently re-validates any
/// feasible verdict: every definiteness block must evaluate with maximum
/// eigenvalue at most `-d/2`, every positivity block with minimum eigenvalue
/// at least `d/2`, checked by dense symmetric eigendecomposition.
pub fn check_lmi(
    p: &LmiProblem,
    solver: &mut dyn SdpSolver,
    opts: &SolverOptions,
) -> Result<LmiVerdict> {
    let d = scaled_delta(p, opts.delta);
    let mut scale = 1.0f64;
    for c in p.neg_constraints().iter().chain(p.pos_constraints()) {
        scale = scale.max(linalg::max_abs(c.expr.constant()));
    }

    // Two attempts. The first works at a benign scale: positivity floor
    // 1e-3 and a moderate variable box, so the barrier centers at sane
    // magnitudes (the synthesis LMIs are close to homogeneous, and a wide
    // box drags the central path toward huge, ill-conditioned iterates; a
    // tiny floor makes the infeasible side degenerate instead). A feasible
    // point found there is re-validated against the contract strictness
    // below, so accepting it is sound. Only when the first attempt says
    // infeasible (or struggles) is the exact contract program solved.
    // A problem whose constraints carry no constant term is scale
    // invariant: a verdict at the relaxed floor already settles it.
    let homogeneous = p
        .neg_constraints()
        .iter()
        .chain(p.pos_constraints())
        .all(|c| linalg::max_abs(c.expr.constant()) == 0.0);

    let relaxed_delta = opts.delta.max(1e-3);
    let attempts = [
        (relaxed_delta, 1e3 * scale, 0.02 * scale),
        (opts.delta, opts.var_bound, f64::max(0.02 * scale, 1e4 * d)),
    ];
    let mut sol = None;
    let mut relaxed_infeasible = false;
    for (i, (delta, var_bound, stop)) in attempts.into_iter().enumerate() {
        let program = to_feasibility_program(p, delta)?;
        let da = scaled_delta(p, delta);
        let mut run_opts = opts.clone();
        run_opts.var_bound = var_bound;
        if run_opts.stop_below.is_none() {
            run_opts.stop_below = Some(-stop.max(10.0 * da));
        }
        if run_opts.decide_threshold.is_none() {
            run_opts.decide_threshold = Some(-da);
        }
        let attempt = solver.solve(&program, &run_opts)?;
        let status = attempt.status;
        sol = Some(attempt);
        if status == SdpStatus::Feasible {
            break;
        }
        if i == 0 {
            relaxed_infeasible = status == SdpStatus::Infeasible;
            if relaxed_infeasible && homogeneous {
                break;
            }
        }
    }
    let mut sol = sol.expect("at least one attempt ran");

    if sol.status == SdpStatus::NumericalFailure {
        if relaxed_infeasible {
            // The exact-floor program is degenerate near its optimum, but
            // the well-scaled attempt already certified infeasibility at a
            // larger floor; for these (scale-free) problems that settles it.
            sol.status = SdpStatus::Infeasible;
            sol.stats.message = Some(
                "infeasible at the relaxed floor; exact-floor polish did not converge".into(),
            );
        } else {
            return Err(Error::SolverFailure(
                sol.stats
                    .message
                    .unwrap_or_else(|| "backend reported numerical failure".into()),
            ));
        }
    }
    let layout = p.layout();
    let assignment: Vec<f64> = sol.assignment[..layout.total_scalars()].to_vec();

    let feasible = sol.status == SdpStatus::Feasible;
    if feasible {
        for c in p.neg_constraints() {
            let m = c.expr.eval(&layout, &assignment);
            let top = linalg::max_eig_sym(&m);
            if !(top <= -d / 2.0) {
                return Err(Error::SolverFailure(format!(
                    "re-validation failed: block {:?} has max eigenvalue {:.3e} (needs <= {:.3e})",
                    c.label,
                    top,
                    -d / 2.0
                )));
            }
        }
        for c in p.pos_constraints() {
            let m = c.expr.eval(&layout, &assignment);
            let bottom = linalg::min_eig_sym(&m);
            if !(bottom >= d / 2.0) {
                return Err(Error::SolverFailure(format!(
                    "re-validation failed: block {:?} has min eigenvalue {:.3e} (needs >= {:.3e})",
                    c.label,
                    bottom,
                    d / 2.0
                )));
            }
        }
    }

    Ok(LmiVerdict {
        feasible,
        marginal: sol.status == SdpStatus::Marginal,
        margin: sol.margin,
        assignment,
        stats: sol.stats,
    })
}
