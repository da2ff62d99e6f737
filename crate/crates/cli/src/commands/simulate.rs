use std::path::Path;

use nalgebra::DVector;
use serde::Serialize;

use super::{ensure_dir, nominal_and_vertices, read_system, write_file};
use crate::manifest::RunManifest;
use fraclmi::model::realize;
use fraclmi::sim::{settling_metrics, simulate, SimConfig, Trajectory};
use fraclmi::synthesis::close_loop;
use fraclmi::{Error, Result};

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct SettlingJson {
    band: f64,
    entries: Vec<SettlingEntry>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct SettlingEntry {
    realization: String,
    final_ratio: f64,
    overall: Option<f64>,
    per_component: Vec<Option<f64>>,
}

fn parse_x0(text: &str, n: usize, n_c: usize) -> Result<DVector<f64>> {
    let values: Vec<f64> = text
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad x0 entry {t:?}")))
        })
        .collect::<Result<_>>()?;
    if values.len() == n + n_c {
        Ok(DVector::from_vec(values))
    } else if values.len() == n {
        let mut padded = values;
        padded.resize(n + n_c, 0.0);
        Ok(DVector::from_vec(padded))
    } else {
        Err(Error::DimensionError(format!(
            "x0 has {} entries; expected {} (plant) or {} (augmented)",
            values.len(),
            n,
            n + n_c
        )))
    }
}

pub fn run(
    system: &Path,
    controller: &Path,
    x0_text: &str,
    h: f64,
    horizon: f64,
    out: &Path,
) -> Result<u8> {
    let (sys, unc) = read_system(system)?;
    let k_text = std::fs::read_to_string(controller)
        .map_err(|e| Error::Parse(format!("{}: {e}", controller.display())))?;
    let k = fraclmi::io::parse_controller(&k_text)?;
    if (k.alpha() - sys.alpha()).abs() > 1e-12 {
        return Err(Error::DimensionError(format!(
            "controller order {} does not match plant order {}",
            k.alpha(),
            sys.alpha()
        )));
    }
    if k.controls() != sys.inputs() || k.measurements() != sys.outputs() {
        return Err(Error::DimensionError(format!(
            "controller is {}x{} (controls x measurements), plant wants {}x{}",
            k.controls(),
            k.measurements(),
            sys.inputs(),
            sys.outputs()
        )));
    }
    let x0 = parse_x0(x0_text, sys.n(), k.order())?;
    let cfg = SimConfig {
        h,
        horizon,
        ..SimConfig::default()
    };

    ensure_dir(out)?;
    let band = 0.02;
    let mut entries = Vec::new();
    let mut nominal_traj: Option<Trajectory> = None;
    for (label, r) in nominal_and_vertices(&unc)? {
        let (a_t, b_t) = realize(&sys, &unc, &r)?;
        let cl = close_loop(&a_t, &b_t, sys.c(), &k)?;
        let tr = simulate(&cl, &x0, &cfg)?;
        write_file(out, &format!("traj_{label}.csv"), &tr.to_csv())?;
        let settling = settling_metrics(&tr, band)?;
        entries.push(SettlingEntry {
            realization: label.clone(),
            final_ratio: tr.state_at(horizon).amax() / x0.amax(),
            overall: settling.overall,
            per_component: settling.per_component,
        });
        if label == "nominal" {
            nominal_traj = Some(tr);
        }
    }

    if let Some(tr) = &nominal_traj {
        let series: Vec<fraclmi::plot::Series> = (0..tr.dim())
            .map(|d| {
                fraclmi::plot::Series::new(
                    &format!("x{}", d + 1),
                    tr.times()
                        .iter()
                        .zip(tr.states())
                        .map(|(t, x)| (*t, x[d]))
                        .collect(),
                )
            })
            .collect();
        write_file(
            out,
            "trajectory.svg",
            &fraclmi::plot::line_plot("closed-loop response (nominal)", &series),
        )?;
    }

    let settling = SettlingJson { band, entries };
    write_file(
        out,
        "settling.json",
        &serde_json::to_string_pretty(&settling).expect("serializable"),
    )?;

    RunManifest::new("simulate", out)
        .input(system)
        .input(controller)
        .option("x0", x0_text)
        .option("h", h)
        .option("T", horizon)
        .write(out)?;

    for e in &settling.entries {
        match e.overall {
            Some(t) => println!("{}: settles at {:.3}s (band {band})", e.realization, t),
            None => println!("{}: does not settle within the horizon", e.realization),
        }
    }
    Ok(0)
}
