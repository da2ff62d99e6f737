//! Robust output-feedback stabilization of fractional-order LTI systems.
//!
//! The crate covers the full pipeline for plants `D^a x = A x + B u`,
//! `y = C x` with commensurate order `0 < a < 2` and bounded nonlinear
//! parametric uncertainty:
//!
//! - [`model`]: pseudo-state models, block-companion stacking, polytopic
//!   uncertainty structure with constant envelopes, box sampling.
//! - [`stability`]: the eigenvalue argument criterion and LMI feasibility
//!   tests for both order branches.
//! - [`lmi`]: assembly of the synthesis matrix inequalities as affine
//!   symmetric expressions in scalar decision variables, including the
//!   Hermitian real embedding for the `0 < a < 1` branch and the
//!   Kronecker-doubled structure for `1 <= a < 2`.
//! - [`sdp`]: a self-contained barrier-method feasibility solver behind a
//!   backend trait, plus SDPA sparse-format export/import.
//! - [`synthesis`]: fixed-order dynamic output feedback synthesis, change
//!   of variables, closed-loop construction, and sampled robust
//!   verification.
//! - [`sim`]: fractional-order time-domain simulation with a
//!   Grunwald-Letnikov discretization, plus settling metrics.
//! - [`io`]: the JSON system/controller/report formats, CSV writers, and
//!   a minimal SVG plotter.

pub mod error;
pub mod io;
pub mod linalg;
pub mod lmi;
pub mod model;
pub mod plot;
pub mod sdp;
pub mod sim;
pub mod stability;
pub mod synthesis;

pub use error::{Error, Result};
