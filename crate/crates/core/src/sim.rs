//! Fractional-order time-domain simulation.
//!
//! The autonomous closed loop `D^a x = A x`, `x(0) = x0` is integrated with
//! an implicit Grunwald-Letnikov discretization. Writing `z(t) = x(t) - x0`
//! (so `z` carries zero history and the classical initial condition is
//! honored; for `1 <= a < 2` the start is at rest, `x'(0) = 0`), the scheme
//! solves at each step
//!
//! ```text
//! (I - h^a A) z_k = -sum_{j=1..k} c_j z_{k-j} + h^a A x0,    z_0 = 0,
//! ```
//!
//! with the signed binomial weights `c_j = (-1)^j binom(a, j)`. Memory is
//! kept in full up to [`FULL_MEMORY_LIMIT`] steps; past that the convolution
//! is truncated to the most recent terms, trading the algebraic tail
//! (`c_j ~ j^{-a-1}`) for bounded work per step.
//!
//! [`mittag_leffler`] provides the closed-form scalar reference
//! `x(t) = E_a(lambda t^a)` used to validate the stepper; it is a direct
//! series evaluation intended for the moderate arguments (`|z| <= 5`) that
//! the validation sweeps use, not an all-range special-function routine.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::synthesis::ClosedLoop;

/// Steps of full convolution memory before truncation kicks in.
pub const FULL_MEMORY_LIMIT: usize = 100_000;

/// Convolution memory policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Memory {
    /// Keep every past term (up to [`FULL_MEMORY_LIMIT`]).
    Full,
    /// Keep only the latest `n` terms.
    Truncated(usize),
}

/// Step size, horizon and memory policy for one simulation.
#[derive(Debug, Clone, Copy)]
pub struct SimConfig {
    pub h: f64,
    pub horizon: f64,
    pub memory: Memory,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            h: 1e-3,
            horizon: 10.0,
            memory: Memory::Full,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0) || !self.h.is_finite() {
            return Err(Error::DimensionError("step size must be positive".into()));
        }
        if self.horizon < self.h {
            return Err(Error::DimensionError(
                "horizon must cover at least one step".into(),
            ));
        }
        if let Memory::Truncated(n) = self.memory {
            if n == 0 {
                return Err(Error::DimensionError(
                    "memory length must be at least 1".into(),
                ));
            }
        }
        Ok(())
    }

    fn memory_limit(&self) -> usize {
        match self.memory {
            Memory::Full => FULL_MEMORY_LIMIT,
            Memory::Truncated(n) => n,
        }
    }
}

/// Time-indexed pseudo-state samples on a uniform grid.
#[derive(Debug, Clone)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<DVector<f64>>,
    alpha: f64,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, states: Vec<DVector<f64>>, alpha: f64) -> Result<Self> {
        if times.len() != states.len() || times.is_empty() {
            return Err(Error::DimensionError(
                "trajectory needs matching, nonempty time and state lists".into(),
            ));
        }
        Ok(Self {
            times,
            states,
            alpha,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[DVector<f64>] {
        &self.states
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dim(&self) -> usize {
        self.states[0].len()
    }

    /// State at the grid point closest to `t`.
    pub fn state_at(&self, t: f64) -> &DVector<f64> {
        let h = if self.times.len() > 1 {
            self.times[1] - self.times[0]
        } else {
            1.0
        };
        let k = ((t - self.times[0]) / h).round() as usize;
        &self.states[k.min(self.states.len() - 1)]
    }

    /// CSV with header `t,x1,...,xN`.
    pub fn to_csv(&self) -> String {
        let dim = self.dim();
        let mut s = String::from("t");
        for i in 1..=dim {
            s.push_str(&format!(",x{i}"));
        }
        s.push('\n');
        for (t, x) in self.times.iter().zip(&self.states) {
            s.push_str(&format!("{t}"));
            for v in x.iter() {
                s.push_str(&format!(",{v}"));
            }
            s.push('\n');
        }
        s
    }
}

/// Signed binomial weights `c_0..c_N`: `c_0 = 1`,
/// `c_j = (1 - (alpha + 1) / j) c_{j-1}`.
pub fn gl_coefficients(alpha: f64, n: usize) -> Vec<f64> {
    let mut c = Vec::with_capacity(n + 1);
    c.push(1.0);
    for j in 1..=n {
        let prev = c[j - 1];
        c.push((1.0 - (alpha + 1.0) / j as f64) * prev);
    }
    c
}

/// Integrates the autonomous closed loop from `x0`.
pub fn simulate(cl: &ClosedLoop, x0: &DVector<f64>, cfg: &SimConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let dim = cl.dim();
    if x0.len() != dim {
        return Err(Error::DimensionError(format!(
            "initial state has {} entries, loop dimension is {dim}",
            x0.len()
        )));
    }
    let steps = (cfg.horizon / cfg.h).round() as usize;
    let h_alpha = cfg.h.powf(cl.alpha());
    let stepping = DMatrix::identity(dim, dim) - cl.a_cl() * h_alpha;
    let lu = stepping.lu();
    if !lu.is_invertible() {
        return Err(Error::StepFailure);
    }

    let memory = cfg.memory_limit();
    let coeffs = gl_coefficients(cl.alpha(), steps.min(memory));
    let drive = cl.a_cl() * x0 * h_alpha;

    // Flat history of z = x - x0 for a cache-friendly convolution.
    let mut history: Vec<f64> = Vec::with_capacity((steps + 1) * dim);
    history.resize(dim, 0.0); // z_0 = 0

    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(x0.clone());

    let mut rhs = DVector::<f64>::zeros(dim);
    for k in 1..=steps {
        rhs.copy_from(&drive);
        let window = k.min(memory);
        for j in 1..=window {
            let c = coeffs[j];
            let base = (k - j) * dim;
            for d in 0..dim {
                rhs[d] -= c * history[base + d];
            }
        }
        let z = lu.solve(&rhs).ok_or(Error::StepFailure)?;
        history.extend(z.iter());
        times.push(k as f64 * cfg.h);
        states.push(x0 + &z);
    }
    Trajectory::new(times, states, cl.alpha())
}

/// Settling statistics of a trajectory against `band * |x0|_inf`.
#[derive(Debug, Clone)]
pub struct SettlingReport {
    pub band: f64,
    pub threshold: f64,
    /// First grid time after which `|x(t)|_inf` never leaves the band;
    /// `None` when the trajectory is still outside at the horizon.
    pub overall: Option<f64>,
    /// Same, per state component.
    pub per_component: Vec<Option<f64>>,
}

/// Last-exit settling times. The threshold is `band * |x(0)|_inf` for every
/// component.
pub fn settling_metrics(tr: &Trajectory, band: f64) -> Result<SettlingReport> {
    if !(band > 0.0 && band < 1.0) {
        return Err(Error::DimensionError("band must lie in (0, 1)".into()));
    }
    let threshold = band * tr.states()[0].amax();
    let n = tr.states().len();
    let dim = tr.dim();

    let settle_time = |outside: &dyn Fn(usize) -> bool| -> Option<f64> {
        let mut last_outside = None;
        for k in 0..n {
            if outside(k) {
                last_outside = Some(k);
            }
        }
        match last_outside {
            None => Some(tr.times()[0]),
            Some(k) if k + 1 < n => Some(tr.times()[k + 1]),
            Some(_) => None,
        }
    };

    let overall = settle_time(&|k| tr.states()[k].amax() > threshold);
    let per_component = (0..dim)
        .map(|d| settle_time(&|k| tr.states()[k][d].abs() > threshold))
        .collect();
    Ok(SettlingReport {
        band,
        threshold,
        overall,
        per_component,
    })
}

/// Gamma function by the Lanczos approximation (g = 7, 9 coefficients),
/// with the reflection formula for the negative half-line.
pub fn gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEFFS: [f64; 9] = [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if x < 0.5 {
        std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut acc = COEFFS[0];
        for (i, &c) in COEFFS.iter().enumerate().skip(1) {
            acc += c / (x + i as f64);
        }
        let t = x + G + 0.5;
        (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
    }
}

/// One-parameter Mittag-Leffler function `E_a(z) = sum z^k / Gamma(a k + 1)`
/// by direct series with term-ratio stopping at 1e-16.
pub fn mittag_leffler(alpha: f64, z: f64) -> f64 {
    let mut sum = 0.0;
    let mut term;
    let mut z_pow = 1.0;
    for k in 0..200 {
        term = z_pow / gamma(alpha * k as f64 + 1.0);
        sum += term;
        z_pow *= z;
        if k > 2 && term.abs() <= 1e-16 * sum.abs().max(1.0) {
            break;
        }
    }
    sum
}
