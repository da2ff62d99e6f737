//! File formats: system descriptions, controllers, synthesis reports (JSON),
//! plus the text controller table.
//!
//! The system description is a JSON object with `alpha`, row-major nested
//! arrays `A`, `B`, `C`, and an optional `uncertainty` section holding
//! `iGenerators` / `iBound` / `aGenerators` / `aBound`. Ragged arrays and
//! unknown fields are rejected.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::lmi::Branch;
use crate::model::{FoltiSystem, UncertaintyModel, UncertaintyRealization};
use crate::synthesis::{Controller, RobustnessReport, SynthesisReport};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDescription {
    pub alpha: f64,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uncertainty: Option<UncertaintySection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UncertaintySection {
    #[serde(rename = "iGenerators", default)]
    pub i_generators: Vec<Vec<Vec<f64>>>,
    #[serde(rename = "iBound", default)]
    pub i_bound: f64,
    #[serde(rename = "aGenerators", default)]
    pub a_generators: Vec<Vec<Vec<f64>>>,
    #[serde(rename = "aBound", default)]
    pub a_bound: f64,
}

/// Parses a system description, validating shapes and bounds.
pub fn parse_system(json: &str) -> Result<(FoltiSystem, UncertaintyModel)> {
    let desc: SystemDescription =
        serde_json::from_str(json).map_err(|e| Error::Parse(e.to_string()))?;
    system_from_description(&desc)
}

pub fn system_from_description(
    desc: &SystemDescription,
) -> Result<(FoltiSystem, UncertaintyModel)> {
    let a = linalg::from_rows(&desc.a)?;
    let b = linalg::from_rows(&desc.b)?;
    let c = linalg::from_rows(&desc.c)?;
    let n = a.nrows();
    let sys = FoltiSystem::new(desc.alpha, a, b, c)?;
    let unc = match &desc.uncertainty {
        None => UncertaintyModel::certain(n),
        Some(u) => {
            let igs = u
                .i_generators
                .iter()
                .map(|g| linalg::from_rows(g))
                .collect::<Result<Vec<_>>>()?;
            let ags = u
                .a_generators
                .iter()
                .map(|g| linalg::from_rows(g))
                .collect::<Result<Vec<_>>>()?;
            UncertaintyModel::new(igs, u.i_bound, ags, u.a_bound, n)?
        }
    };
    Ok((sys, unc))
}

/// Serializes a system back to the wire form.
pub fn system_to_description(sys: &FoltiSystem, unc: &UncertaintyModel) -> SystemDescription {
    SystemDescription {
        alpha: sys.alpha(),
        a: linalg::to_rows(sys.a()),
        b: linalg::to_rows(sys.b()),
        c: linalg::to_rows(sys.c()),
        uncertainty: (!unc.is_certain()).then(|| UncertaintySection {
            i_generators: unc.i_generators().iter().map(linalg::to_rows).collect(),
            i_bound: unc.i_bound(),
            a_generators: unc.a_generators().iter().map(linalg::to_rows).collect(),
            a_bound: unc.a_bound(),
        }),
    }
}

pub fn system_to_json(sys: &FoltiSystem, unc: &UncertaintyModel) -> String {
    serde_json::to_string_pretty(&system_to_description(sys, unc)).expect("serializable")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerJson {
    pub alpha: f64,
    pub order: usize,
    #[serde(rename = "Ac", default)]
    pub a_c: Vec<Vec<f64>>,
    #[serde(rename = "Bc", default)]
    pub b_c: Vec<Vec<f64>>,
    #[serde(rename = "Cc", default)]
    pub c_c: Vec<Vec<f64>>,
    #[serde(rename = "Dc")]
    pub d_c: Vec<Vec<f64>>,
}

pub fn controller_to_json_value(k: &Controller) -> ControllerJson {
    ControllerJson {
        alpha: k.alpha(),
        order: k.order(),
        a_c: linalg::to_rows(k.a_c()),
        b_c: linalg::to_rows(k.b_c()),
        c_c: linalg::to_rows(k.c_c()),
        d_c: linalg::to_rows(k.d_c()),
    }
}

pub fn controller_to_json(k: &Controller) -> String {
    serde_json::to_string_pretty(&controller_to_json_value(k)).expect("serializable")
}

fn controller_from_value(v: &ControllerJson) -> Result<Controller> {
    let d_c = linalg::from_rows(&v.d_c)?;
    let (l, m) = (d_c.nrows(), d_c.ncols());
    let n_c = v.order;
    let or_zeros = |rows: &[Vec<f64>], r: usize, c: usize| -> Result<DMatrix<f64>> {
        if rows.is_empty() {
            Ok(DMatrix::zeros(r, c))
        } else {
            linalg::from_rows(rows)
        }
    };
    let a_c = or_zeros(&v.a_c, n_c, n_c)?;
    let b_c = or_zeros(&v.b_c, n_c, m)?;
    let c_c = or_zeros(&v.c_c, l, n_c)?;
    if a_c.nrows() != n_c {
        return Err(Error::Parse(format!(
            "controller order {} does not match Ac with {} rows",
            n_c,
            a_c.nrows()
        )));
    }
    Controller::new(v.alpha, a_c, b_c, c_c, d_c)
}

/// Parses a controller from either a bare controller object or a synthesis
/// report that embeds one under `"controller"`.
pub fn parse_controller(json: &str) -> Result<Controller> {
    let value: serde_json::Value =
        serde_json::from_str(json).map_err(|e| Error::Parse(e.to_string()))?;
    let obj = match value.get("controller") {
        Some(inner) if !inner.is_null() => inner.clone(),
        Some(_) => return Err(Error::Parse("report contains no controller".into())),
        None => value,
    };
    let parsed: ControllerJson =
        serde_json::from_value(obj).map_err(|e| Error::Parse(e.to_string()))?;
    controller_from_value(&parsed)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RealizationJson {
    pub i_params: Vec<f64>,
    pub a_params: Vec<f64>,
}

impl From<&UncertaintyRealization> for RealizationJson {
    fn from(r: &UncertaintyRealization) -> Self {
        Self {
            i_params: r.i_params.clone(),
            a_params: r.a_params.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VerificationJson {
    pub samples: usize,
    pub worst_margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_realization: Option<RealizationJson>,
    pub failures: Vec<RealizationJson>,
}

impl From<&RobustnessReport> for VerificationJson {
    fn from(r: &RobustnessReport) -> Self {
        Self {
            samples: r.samples,
            worst_margin: r.worst_margin,
            worst_realization: r.worst_realization.as_ref().map(RealizationJson::from),
            failures: r.failures.iter().map(RealizationJson::from).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ReportJson {
    pub feasible: bool,
    pub branch: &'static str,
    pub solver_margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub controller: Option<ControllerJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recovery_residuals: Option<ResidualsJson>,
    pub recovery_inexact: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nominal_margin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verification: Option<VerificationJson>,
    pub solver_iterations: usize,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ResidualsJson {
    pub bc: f64,
    pub dc: f64,
    pub q_condition: f64,
}

pub fn report_to_json_value(r: &SynthesisReport) -> ReportJson {
    ReportJson {
        feasible: r.feasible,
        branch: match r.branch {
            Branch::LowOrder => "lowOrder",
            Branch::HighOrder => "highOrder",
        },
        solver_margin: r.solver_margin,
        controller: r.controller.as_ref().map(controller_to_json_value),
        recovery_residuals: r.recovery.as_ref().map(|rec| ResidualsJson {
            bc: rec.residual_bc,
            dc: rec.residual_dc,
            q_condition: rec.q_condition,
        }),
        recovery_inexact: r.recovery_inexact(),
        nominal_margin: r.nominal_margin,
        verification: r.verification.as_ref().map(VerificationJson::from),
        solver_iterations: r.solver_iterations,
    }
}

pub fn report_to_json(r: &SynthesisReport) -> String {
    serde_json::to_string_pretty(&report_to_json_value(r)).expect("serializable")
}

fn write_matrix_rows(out: &mut String, name: &str, m: &DMatrix<f64>) {
    out.push_str(name);
    out.push_str(":\n");
    if m.nrows() == 0 || m.ncols() == 0 {
        out.push_str("  (empty)\n");
        return;
    }
    for i in 0..m.nrows() {
        out.push(' ');
        for j in 0..m.ncols() {
            out.push_str(&format!(" {:>12.6}", m[(i, j)]));
        }
        out.push('\n');
    }
}

/// Plain-text table of the controller matrices.
pub fn controller_table(k: &Controller) -> String {
    let mut out = String::new();
    out.push_str(&format!("order n_c = {}\n", k.order()));
    write_matrix_rows(&mut out, "A_c", k.a_c());
    write_matrix_rows(&mut out, "B_c", k.b_c());
    write_matrix_rows(&mut out, "C_c", k.c_c());
    write_matrix_rows(&mut out, "D_c", k.d_c());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::benchmark_plant;

    #[test]
    fn system_round_trip() {
        let (sys, unc) = benchmark_plant(0.65, false);
        let json = system_to_json(&sys, &unc);
        let (sys2, unc2) = parse_system(&json).unwrap();
        assert_eq!(sys2.alpha(), 0.65);
        assert_eq!(sys2.outputs(), 1);
        assert_eq!(unc2.p(), 2);
        assert_eq!(unc2.q(), 2);
        assert!(linalg::max_abs(&(sys.a() - sys2.a())) < 1e-15);
    }

    #[test]
    fn missing_uncertainty_means_certain() {
        let json = r#"{"alpha": 0.5, "A": [[-1.0]], "B": [[1.0]], "C": [[1.0]]}"#;
        let (_, unc) = parse_system(json).unwrap();
        assert!(unc.is_certain());
    }

    #[test]
    fn ragged_matrix_is_rejected() {
        let json = r#"{"alpha": 0.5, "A": [[-1.0, 0.0], [1.0]], "B": [[1.0],[0.0]], "C": [[1.0, 0.0]]}"#;
        assert!(matches!(parse_system(json), Err(Error::Parse(_))));
    }

    #[test]
    fn unknown_field_is_rejected() {
        let json = r#"{"alpha": 0.5, "A": [[-1.0]], "B": [[1.0]], "C": [[1.0]], "gamma": 2}"#;
        assert!(matches!(parse_system(json), Err(Error::Parse(_))));
    }

    #[test]
    fn bad_alpha_is_rejected() {
        let json = r#"{"alpha": 2.5, "A": [[-1.0]], "B": [[1.0]], "C": [[1.0]]}"#;
        assert!(parse_system(json).is_err());
    }

    #[test]
    fn controller_round_trip_including_static() {
        let k = Controller::static_gain(
            0.65,
            DMatrix::from_row_slice(2, 2, &[-1.0, 0.5, 0.0, -2.0]),
        )
        .unwrap();
        let json = controller_to_json(&k);
        let k2 = parse_controller(&json).unwrap();
        assert_eq!(k2.order(), 0);
        assert!(linalg::max_abs(&(k.d_c() - k2.d_c())) < 1e-15);

        let k3 = Controller::new(
            0.65,
            DMatrix::from_row_slice(1, 1, &[-1.2]),
            DMatrix::from_row_slice(1, 2, &[0.1, 0.2]),
            DMatrix::from_row_slice(2, 1, &[0.3, 0.4]),
            DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -1.0]),
        )
        .unwrap();
        let json3 = controller_to_json(&k3);
        let back = parse_controller(&json3).unwrap();
        assert_eq!(back.order(), 1);
        assert!(linalg::max_abs(&(k3.b_c() - back.b_c())) < 1e-15);
    }

    #[test]
    fn controller_table_lists_all_blocks() {
        let k = Controller::static_gain(0.65, DMatrix::identity(2, 2) * -3.0).unwrap();
        let table = controller_table(&k);
        assert!(table.contains("order n_c = 0"));
        assert!(table.contains("D_c"));
        assert!(table.contains("-3.000000"));
    }
}
