//! Stability analysis for fractional-order systems.
//!
//! `D^a x = A x` with `0 < a < 2` is asymptotically stable iff every
//! eigenvalue of `A` satisfies `|arg(lambda)| > a pi / 2`.
//! [`argument_margin`] evaluates that criterion directly from a dense
//! eigendecomposition; [`lemma1_check`] and [`lemma2_check`] decide the same
//! question through LMI feasibility (a Hermitian certificate for the
//! `0 < a < 1` branch, a symmetric certificate under the 2x2 rotation
//! structure for `1 <= a < 2`), with every returned certificate re-validated
//! by eigenvalue checks independent of the solver.

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};
use crate::linalg;
use crate::lmi::{hermitian_embedding, real_combination, Constraint, LmiBuilder};
use crate::sdp::{check_lmi, SdpSolver, SolverOptions};

/// Eigenvalue locations of one matrix against the `+-a pi / 2` boundary.
#[derive(Debug, Clone)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<Complex<f64>>,
    /// `|arg(lambda_i)|` in radians, each in `[0, pi]`.
    pub args: Vec<f64>,
    /// `min_i |arg(lambda_i)| - a pi / 2`; positive means stable.
    pub margin: f64,
    pub stable: bool,
    pub alpha: f64,
}

impl SpectrumReport {
    /// CSV rows `Re,Im,absArg`, one eigenvalue per line.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("Re,Im,absArg\n");
        for (ev, arg) in self.eigenvalues.iter().zip(&self.args) {
            s.push_str(&format!("{},{},{}\n", ev.re, ev.im, arg));
        }
        s
    }
}

/// Evaluates the argument criterion for `D^a x = A x`.
///
/// A zero eigenvalue has `arg 0` and therefore yields `margin <= -a pi / 2`:
/// the system is classified unstable for every order.
pub fn argument_margin(a: &DMatrix<f64>, alpha: f64) -> Result<SpectrumReport> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::InvalidOrder { alpha });
    }
    if a.nrows() != a.ncols() || a.nrows() == 0 {
        return Err(Error::DimensionError(
            "argument criterion needs a nonempty square matrix".into(),
        ));
    }
    if !linalg::all_finite(a) {
        return Err(Error::InvalidMatrix);
    }
    let eigenvalues: Vec<Complex<f64>> = a.complex_eigenvalues().iter().copied().collect();
    let args: Vec<f64> = eigenvalues.iter().map(|ev| ev.arg().abs()).collect();
    let min_arg = args.iter().copied().fold(f64::INFINITY, f64::min);
    let margin = min_arg - alpha * std::f64::consts::PI / 2.0;
    Ok(SpectrumReport {
        eigenvalues,
        args,
        margin,
        stable: margin > 0.0,
        alpha,
    })
}

/// Feasibility outcome of one lemma check.
#[derive(Debug, Clone)]
pub struct StabilityCheck {
    pub feasible: bool,
    /// Certificate `X = re + i im` when feasible (`im` zero in the
    /// symmetric branch).
    pub certificate: Option<Certificate>,
    /// Achieved `t*` of the feasibility program.
    pub solver_margin: f64,
}

#[derive(Debug, Clone)]
pub struct Certificate {
    pub re: DMatrix<f64>,
    pub im: DMatrix<f64>,
}

/// LMI stability test for `0 < alpha < 1`: feasibility of a positive
/// definite Hermitian `X` with
/// `(r X + conj r conj X)^T A^T + A (r X + conj r conj X) < 0`,
/// `r = e^{i theta}`, `theta = (1 - alpha) pi / 2`.
pub fn lemma1_check(
    a: &DMatrix<f64>,
    alpha: f64,
    solver: &mut dyn SdpSolver,
    opts: &SolverOptions,
) -> Result<StabilityCheck> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::WrongBranch {
            alpha,
            branch: "0 < alpha < 1",
        });
    }
    if !linalg::all_finite(a) {
        return Err(Error::InvalidMatrix);
    }
    let n = a.nrows();
    let theta = (1.0 - alpha) * std::f64::consts::PI / 2.0;
    let mut b = LmiBuilder::new();
    let x = b.hermitian("X", n);
    let expr = real_combination(&x, theta).lmul(a).sym();
    let problem = b.finish(
        vec![Constraint::new("lemma1", expr)],
        vec![Constraint::new("X", hermitian_embedding(&x))],
    )?;
    let layout = problem.layout();
    let verdict = check_lmi(&problem, solver, opts)?;
    let certificate = verdict.feasible.then(|| {
        let (re, im) = x.value(&layout, &verdict.assignment);
        Certificate { re, im }
    });
    Ok(StabilityCheck {
        feasible: verdict.feasible,
        certificate,
        solver_margin: verdict.margin,
    })
}

/// LMI stability test for `1 <= alpha < 2`: feasibility of a positive
/// definite symmetric `X` with `Sym(Theta (x) (A X)) < 0` where
/// `Theta = [[sin t, -cos t], [cos t, sin t]]`, `t = pi - alpha pi / 2`.
pub fn lemma2_check(
    a: &DMatrix<f64>,
    alpha: f64,
    solver: &mut dyn SdpSolver,
    opts: &SolverOptions,
) -> Result<StabilityCheck> {
    if !(1.0..2.0).contains(&alpha) {
        return Err(Error::WrongBranch {
            alpha,
            branch: "1 <= alpha < 2",
        });
    }
    if !linalg::all_finite(a) {
        return Err(Error::InvalidMatrix);
    }
    let n = a.nrows();
    let theta = std::f64::consts::PI - alpha * std::f64::consts::PI / 2.0;
    let rot = DMatrix::from_row_slice(
        2,
        2,
        &[theta.sin(), -theta.cos(), theta.cos(), theta.sin()],
    );
    let mut b = LmiBuilder::new();
    let x = b.symmetric("X", n);
    let expr = x.expr().lmul(a).kron_left(&rot).sym();
    let problem = b.finish(
        vec![Constraint::new("lemma2", expr)],
        vec![Constraint::new("X", x.expr())],
    )?;
    let layout = problem.layout();
    let verdict = check_lmi(&problem, solver, opts)?;
    let certificate = verdict.feasible.then(|| Certificate {
        re: x.value(&layout, &verdict.assignment),
        im: DMatrix::zeros(n, n),
    });
    Ok(StabilityCheck {
        feasible: verdict.feasible,
        certificate,
        solver_margin: verdict.margin,
    })
}
