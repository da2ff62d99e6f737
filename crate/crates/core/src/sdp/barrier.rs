//! Log-det barrier interior-point method for `min c.x` over PSD blocks.
//!
//! Classic path-following: minimize `c.x / mu - sum_k log det S_k(x)` with
//! damped Newton steps, shrinking `mu` by a fixed factor until the barrier
//! gap `nu * mu` is below tolerance. A box barrier on every scalar keeps the
//! centering problems bounded even for homogeneous LMIs, whose optimal value
//! would otherwise run off to -infinity; the box is wide enough that it only
//! matters in that regime.
//!
//! A strictly feasible start is produced by the usual phase-I lift
//! `S_k(x) + s I >= 0`, minimizing `s` from `s_0 = 1 + max_k(-lambda_min)`
//! until it turns negative. Problems whose positivity blocks admit no
//! interior are reported infeasible with margin `+inf`.

use std::collections::BTreeMap;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::{ConicProgram, SdpSolution, SdpStatus, SolverOptions, SolverStats};
use crate::error::{Error, Result};
use crate::linalg;

struct FlatBlock {
    dim: usize,
    constant: DMatrix<f64>,
    /// (scalar column, symmetric coefficient), normalized per block.
    coeffs: Vec<(usize, DMatrix<f64>)>,
}

impl FlatBlock {
    fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        let mut s = self.constant.clone();
        for (col, a) in &self.coeffs {
            let v = x[*col];
            if v != 0.0 {
                s += a * v;
            }
        }
        s
    }
}

struct FlatProgram {
    nvars: usize,
    objective: Vec<f64>,
    blocks: Vec<FlatBlock>,
}

impl FlatProgram {
    /// Total barrier degree: block dimensions plus two box terms per scalar.
    fn barrier_degree(&self) -> f64 {
        let dims: usize = self.blocks.iter().map(|b| b.dim).sum();
        (dims + 2 * self.nvars) as f64
    }

    /// Appends the phase-I slack column (identity in every block).
    fn lifted(&self) -> FlatProgram {
        let s_col = self.nvars;
        let blocks = self
            .blocks
            .iter()
            .map(|b| {
                let mut coeffs = b.coeffs.clone();
                coeffs.push((s_col, DMatrix::identity(b.dim, b.dim)));
                FlatBlock {
                    dim: b.dim,
                    constant: b.constant.clone(),
                    coeffs,
                }
            })
            .collect();
        let mut objective = vec![0.0; self.nvars + 1];
        objective[s_col] = 1.0;
        FlatProgram {
            nvars: self.nvars + 1,
            objective,
            blocks,
        }
    }
}

fn flatten(program: &ConicProgram) -> Result<FlatProgram> {
    let layout = program.layout();
    let nvars = layout.total_scalars();
    let mut blocks = Vec::with_capacity(program.blocks().len());
    for c in program.blocks() {
        let dim = c.expr.nrows();
        let mut by_col: BTreeMap<usize, DMatrix<f64>> = BTreeMap::new();
        for (var, entry, coeff) in c.expr.terms() {
            let col = layout.slot(var, entry);
            by_col
                .entry(col)
                .and_modify(|m| *m += coeff)
                .or_insert_with(|| coeff.clone());
        }
        let mut constant = linalg::symmetrize(c.expr.constant());
        let mut scale = linalg::max_abs(&constant);
        let mut coeffs: Vec<(usize, DMatrix<f64>)> = by_col
            .into_iter()
            .map(|(col, m)| (col, linalg::symmetrize(&m)))
            .filter(|(_, m)| linalg::max_abs(m) > 0.0)
            .collect();
        for (_, m) in &coeffs {
            scale = scale.max(linalg::max_abs(m));
        }
        if scale <= 0.0 {
            return Err(Error::SolverFailure(format!(
                "PSD block {:?} is identically zero",
                c.label
            )));
        }
        constant /= scale;
        for (_, m) in coeffs.iter_mut() {
            *m /= scale;
        }
        blocks.push(FlatBlock {
            dim,
            constant,
            coeffs,
        });
    }
    Ok(FlatProgram {
        nvars,
        objective: program.objective().to_vec(),
        blocks,
    })
}

/// Cholesky factors of every block, or None if any block (or the box) is
/// not strictly feasible.
fn factorize(prog: &FlatProgram, bound: f64, x: &[f64]) -> Option<Vec<Cholesky<f64, Dyn>>> {
    if x.iter().any(|v| v.abs() >= bound) {
        return None;
    }
    let mut out = Vec::with_capacity(prog.blocks.len());
    for b in &prog.blocks {
        out.push(Cholesky::new(b.eval(x))?);
    }
    Some(out)
}

/// Barrier value at a feasible point with known factors.
fn barrier_value(bound: f64, x: &[f64], chols: &[Cholesky<f64, Dyn>]) -> f64 {
    let mut v = 0.0;
    for ch in chols {
        let logdet: f64 = ch.l().diagonal().iter().map(|d| d.ln()).sum();
        v -= 2.0 * logdet;
    }
    for &xi in x {
        v -= (bound - xi).ln() + (bound + xi).ln();
    }
    v
}

/// Gradient and Hessian of the barrier at a feasible point.
fn barrier_grad_hess(
    prog: &FlatProgram,
    bound: f64,
    x: &[f64],
    chols: &[Cholesky<f64, Dyn>],
) -> (DVector<f64>, DMatrix<f64>) {
    let n = prog.nvars;
    let mut g = DVector::zeros(n);
    let mut h = DMatrix::zeros(n, n);
    for (b, ch) in prog.blocks.iter().zip(chols) {
        let l = ch.l();
        // W_i = L^-1 A_i L^-T per coefficient; g_i = -tr W_i,
        // H_ij = <W_i, W_j>_F.
        let mut ws: Vec<(usize, DMatrix<f64>)> = Vec::with_capacity(b.coeffs.len());
        for (col, a) in &b.coeffs {
            let u = l
                .solve_lower_triangular(a)
                .expect("cholesky factor is nonsingular");
            let w = l
                .solve_lower_triangular(&u.transpose())
                .expect("cholesky factor is nonsingular")
                .transpose();
            g[*col] -= w.trace();
            ws.push((*col, w));
        }
        for (i, (ci, wi)) in ws.iter().enumerate() {
            for (cj, wj) in ws.iter().skip(i) {
                let v = wi.dot(wj);
                h[(*ci, *cj)] += v;
                if ci != cj {
                    h[(*cj, *ci)] += v;
                }
            }
        }
    }
    for i in 0..n {
        let lo = bound + x[i];
        let hi = bound - x[i];
        g[i] += 1.0 / hi - 1.0 / lo;
        h[(i, i)] += 1.0 / (hi * hi) + 1.0 / (lo * lo);
    }
    (g, h)
}

struct StageReport {
    newton_steps: usize,
    /// Line search stalled while the Newton decrement was still large.
    stalled: bool,
    /// Exited through the decrement test, so the iterate is centered and
    /// the duality bound `obj - nu mu <= optimum` applies.
    centered: bool,
}

/// Damped Newton centering of `c.x / mu + barrier(x)` at fixed `mu`.
fn center(
    prog: &FlatProgram,
    bound: f64,
    c_over_mu: &DVector<f64>,
    x: &mut Vec<f64>,
    max_newton: usize,
) -> StageReport {
    let mut report = StageReport {
        newton_steps: 0,
        stalled: false,
        centered: false,
    };
    let obj = |x: &[f64]| -> f64 { x.iter().zip(c_over_mu.iter()).map(|(a, b)| a * b).sum() };

    for _ in 0..max_newton {
        let chols = match factorize(prog, bound, x) {
            Some(c) => c,
            None => {
                report.stalled = true;
                return report;
            }
        };
        let f_cur = obj(x) + barrier_value(bound, x, &chols);
        let (gb, hb) = barrier_grad_hess(prog, bound, x, &chols);
        let g = &gb + c_over_mu;
        let h = hb;

        // Newton direction with escalating ridge if the factorization of the
        // Hessian is borderline.
        let mut ridge = 0.0f64;
        let base = h.diagonal().amax().max(1e-30);
        let d = loop {
            let mut hr = h.clone();
            if ridge > 0.0 {
                for i in 0..prog.nvars {
                    hr[(i, i)] += ridge;
                }
            }
            match Cholesky::new(hr) {
                Some(ch) => break ch.solve(&(-&g)),
                None => {
                    ridge = if ridge == 0.0 { base * 1e-12 } else { ridge * 100.0 };
                    if ridge > base * 1e6 {
                        report.stalled = true;
                        return report;
                    }
                }
            }
        };

        let decrement2 = -g.dot(&d);
        report.newton_steps += 1;
        if decrement2 * 0.5 <= 1e-9 {
            report.centered = true;
            return report;
        }

        // Backtracking line search with strict feasibility.
        let slope = g.dot(&d);
        let mut step = 1.0f64;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = x
                .iter()
                .zip(d.iter())
                .map(|(xi, di)| xi + step * di)
                .collect();
            if let Some(chols_t) = factorize(prog, bound, &trial) {
                let f_trial = obj(&trial) + barrier_value(bound, &trial, &chols_t);
                if f_trial <= f_cur + 0.01 * step * slope {
                    *x = trial;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            // Rounding floor near the central point; only a problem if the
            // decrement says we are far from centered.
            report.stalled = decrement2 * 0.5 > 1e-4;
            report.centered = !report.stalled;
            return report;
        }
    }
    report
}

struct PathResult {
    converged: bool,
    stalled: bool,
    stages: usize,
    newton_steps: usize,
}

/// Follows the central path for `min c.x` from a strictly feasible start.
///
/// `stop_below`: exit once the objective drops to this value (a feasibility
/// caller has its answer). `decide_threshold`: exit once the centered-point
/// bound `obj - nu mu <= optimum` certifies the optimum stays above the
/// threshold (the problem is decidedly infeasible for that caller).
fn follow_path(
    prog: &FlatProgram,
    bound: f64,
    x: &mut Vec<f64>,
    opts: &SolverOptions,
    stop_below: Option<f64>,
    decide_threshold: Option<f64>,
) -> PathResult {
    let nu = prog.barrier_degree();
    let c = DVector::from_column_slice(&prog.objective);
    let obj = |x: &[f64]| -> f64 { x.iter().zip(c.iter()).map(|(a, b)| a * b).sum() };

    let mut mu = (obj(x).abs() / nu).max(1.0);
    let target = 0.3 * opts.tol;
    let mut result = PathResult {
        converged: false,
        stalled: false,
        stages: 0,
        newton_steps: 0,
    };
    for _ in 0..opts.max_stages {
        let c_over_mu = &c / mu;
        let report = center(prog, bound, &c_over_mu, x, opts.max_newton);
        result.stages += 1;
        result.newton_steps += report.newton_steps;
        if report.stalled {
            result.stalled = true;
            return result;
        }
        let value = obj(x);
        if let Some(limit) = stop_below {
            if value <= limit {
                result.converged = true;
                return result;
            }
        }
        if let Some(threshold) = decide_threshold {
            if report.centered && value - nu * mu > threshold {
                result.converged = true;
                return result;
            }
        }
        if nu * mu <= target {
            result.converged = true;
            return result;
        }
        mu /= 10.0;
    }
    result
}

pub(super) fn solve(program: &ConicProgram, opts: &SolverOptions) -> Result<SdpSolution> {
    let start = std::time::Instant::now();
    let flat = flatten(program)?;
    let bound = opts.var_bound;
    let mut stats = SolverStats::default();

    let fail = |message: String, stats: SolverStats, margin: f64| SdpSolution {
        status: SdpStatus::NumericalFailure,
        assignment: vec![0.0; program.free_vars()],
        margin,
        stats: SolverStats {
            message: Some(message),
            ..stats
        },
    };

    // Phase I: strictly feasible start.
    let mut x = vec![0.0; flat.nvars];
    let interior_at_origin = flat
        .blocks
        .iter()
        .all(|b| linalg::min_eig_sym(&b.eval(&x)) > 1e-6);
    if !interior_at_origin {
        let lifted = flat.lifted();
        let s0 = flat
            .blocks
            .iter()
            .map(|b| -linalg::min_eig_sym(&b.eval(&x)))
            .fold(0.0f64, f64::max)
            + 1.0;
        let mut xs = x.clone();
        xs.push(s0);
        let p1 = follow_path(&lifted, bound, &mut xs, opts, Some(-1e-4), None);
        stats.stages += p1.stages;
        stats.newton_iterations += p1.newton_steps;
        let s_final = xs[flat.nvars];
        if p1.stalled {
            stats.wall = start.elapsed();
            return Ok(fail(
                "phase I stalled before reaching the interior".into(),
                stats,
                f64::INFINITY,
            ));
        }
        if s_final >= 0.0 {
            // No strict interior at all (the positivity blocks exclude it).
            stats.wall = start.elapsed();
            return Ok(SdpSolution {
                status: if p1.converged {
                    SdpStatus::Infeasible
                } else {
                    SdpStatus::NumericalFailure
                },
                assignment: vec![0.0; program.free_vars()],
                margin: f64::INFINITY,
                stats: SolverStats {
                    message: Some(format!(
                        "no strictly feasible point (phase I slack {s_final:.3e})"
                    )),
                    ..stats
                },
            });
        }
        xs.truncate(flat.nvars);
        x = xs;
    }

    // Phase II: minimize the objective.
    let p2 = follow_path(
        &flat,
        bound,
        &mut x,
        opts,
        opts.stop_below,
        opts.decide_threshold,
    );
    stats.stages += p2.stages;
    stats.newton_iterations += p2.newton_steps;
    stats.hit_bound = x.iter().any(|v| v.abs() >= 0.999 * bound);
    stats.wall = start.elapsed();

    let margin: f64 = x
        .iter()
        .zip(&flat.objective)
        .map(|(a, b)| a * b)
        .sum();
    let threshold = program.threshold().unwrap_or(0.0);

    // Independent re-validation of every block at the returned assignment.
    let layout = program.layout();
    for c in program.blocks() {
        let m = c.expr.eval(&layout, &x);
        let lo = linalg::min_eig_sym(&m);
        let tol = 1e-8 * (1.0 + linalg::max_abs(&m));
        if !(lo >= -tol) {
            return Ok(fail(
                format!(
                    "re-validation failed: block {:?} has min eigenvalue {lo:.3e}",
                    c.label
                ),
                stats,
                margin,
            ));
        }
    }

    let clean = p2.converged && !p2.stalled;
    let status = if (margin - threshold).abs() <= opts.marginal_band {
        SdpStatus::Marginal
    } else if margin <= threshold {
        SdpStatus::Feasible
    } else if clean {
        SdpStatus::Infeasible
    } else {
        stats.message = Some("path following did not converge".into());
        SdpStatus::NumericalFailure
    };

    Ok(SdpSolution {
        status,
        assignment: x,
        margin,
        stats,
    })
}
