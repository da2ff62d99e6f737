use std::path::Path;

use nalgebra::DVector;
use serde::Serialize;

use super::{
    boundary_csv, closed_loop_spectra, ensure_dir, nominal_and_vertices, open_loop_spectra,
    spectra_csv, spectra_svg, verification_csv, write_file,
};
use crate::commands::synth::report_exit_code;
use crate::manifest::RunManifest;
use fraclmi::io::{controller_table, controller_to_json, report_to_json, system_to_json};
use fraclmi::model::{benchmark_plant, realize};
use fraclmi::sdp::solver_from_env;
use fraclmi::sim::{settling_metrics, simulate, SimConfig};
use fraclmi::synthesis::{close_loop, synthesize, SynthOptions, VerifyStrategy};
use fraclmi::{Error, Result};

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct Summary {
    example: String,
    alpha: f64,
    /// The bundled examples measure the full pseudo-state.
    output_map: &'static str,
    seed: u64,
    open_loop_stable: bool,
    orders: Vec<OrderSummary>,
    trajectory: TrajectorySummary,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct OrderSummary {
    order: usize,
    feasible: bool,
    solver_margin: f64,
    nominal_margin: Option<f64>,
    worst_margin: Option<f64>,
    samples: Option<usize>,
    residual_bc: Option<f64>,
    residual_dc: Option<f64>,
    recovery_inexact: bool,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct TrajectorySummary {
    order: usize,
    x0: Vec<f64>,
    horizon: f64,
    step: f64,
    max_final_ratio: f64,
    settling_band: f64,
    worst_settling: Option<f64>,
}

pub fn run(example: &str, out: &Path, seed: u64) -> Result<u8> {
    let alpha = match example {
        "ex1" => 0.65,
        "ex2" => 1.25,
        other => {
            return Err(Error::Parse(format!(
                "unknown example {other:?} (expected ex1 or ex2)"
            )))
        }
    };
    let (sys, unc) = benchmark_plant(alpha, true);
    ensure_dir(out)?;
    write_file(out, "system.json", &system_to_json(&sys, &unc))?;

    // Open-loop analysis.
    let spectra = open_loop_spectra(&sys, &unc, alpha)?;
    let mut rmax = 1.0f64;
    for (_, report) in &spectra {
        for ev in &report.eigenvalues {
            rmax = rmax.max(ev.norm() * 1.2);
        }
    }
    write_file(out, "openloop_spectrum.csv", &spectra_csv(&spectra))?;
    write_file(out, "boundary.csv", &boundary_csv(alpha, rmax))?;
    write_file(
        out,
        "openloop.svg",
        &spectra_svg(&format!("open-loop spectrum (alpha = {alpha})"), &spectra, alpha),
    )?;
    let open_loop_stable = spectra.iter().all(|(_, r)| r.stable);

    // Synthesis sweep over controller orders.
    let opts = SynthOptions {
        verify: VerifyStrategy {
            random_seed: seed,
            ..VerifyStrategy::default()
        },
        ..SynthOptions::default()
    };
    let mut solver = solver_from_env()?;
    let mut orders = Vec::new();
    let mut exit = 0u8;
    let mut traj_controller = None;
    for n_c in [0usize, 1, 2] {
        let report = synthesize(&sys, &unc, n_c, &opts, solver.as_mut())?;
        let dir = out.join(format!("nc{n_c}"));
        ensure_dir(&dir)?;
        write_file(&dir, "report.json", &report_to_json(&report))?;
        if let Some(k) = &report.controller {
            write_file(&dir, "controller.json", &controller_to_json(k))?;
            write_file(&dir, "controller.txt", &controller_table(k))?;
            write_file(
                &dir,
                "verification.csv",
                &verification_csv(&sys, &unc, k, seed, opts.verify.random_count)?,
            )?;
            let closed = closed_loop_spectra(&sys, &unc, k)?;
            write_file(&dir, "closedloop_spectrum.csv", &spectra_csv(&closed))?;
            write_file(
                &dir,
                "closedloop.svg",
                &spectra_svg(
                    &format!("closed-loop spectrum (order {n_c})"),
                    &closed,
                    alpha,
                ),
            )?;
            if n_c == 1 {
                traj_controller = Some(k.clone());
            }
        }
        exit = exit.max(report_exit_code(&report));
        orders.push(OrderSummary {
            order: n_c,
            feasible: report.feasible,
            solver_margin: report.solver_margin,
            nominal_margin: report.nominal_margin,
            worst_margin: report.verification.as_ref().map(|v| v.worst_margin),
            samples: report.verification.as_ref().map(|v| v.samples),
            residual_bc: report.recovery.as_ref().map(|r| r.residual_bc),
            residual_dc: report.recovery.as_ref().map(|r| r.residual_dc),
            recovery_inexact: report.recovery_inexact(),
        });
    }

    // Time responses for the order-1 controller.
    let cfg = SimConfig::default();
    let band = 0.02;
    let k = traj_controller
        .ok_or_else(|| Error::SolverFailure("order-1 synthesis produced no controller".into()))?;
    let x0 = DVector::from_vec(vec![1.0, -1.0, 0.5, 0.0]);
    let mut max_ratio = 0.0f64;
    let mut worst_settling: Option<f64> = None;
    let mut nominal_traj = None;
    for (label, r) in nominal_and_vertices(&unc)? {
        let (a_t, b_t) = realize(&sys, &unc, &r)?;
        let cl = close_loop(&a_t, &b_t, sys.c(), &k)?;
        let tr = simulate(&cl, &x0, &cfg)?;
        write_file(out, &format!("traj_{label}.csv"), &tr.to_csv())?;
        max_ratio = max_ratio.max(tr.state_at(cfg.horizon).amax() / x0.amax());
        if let Some(t) = settling_metrics(&tr, band)?.overall {
            worst_settling = Some(worst_settling.map_or(t, |w: f64| w.max(t)));
        }
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
            "trajectories.svg",
            &fraclmi::plot::line_plot("closed-loop response (order 1, nominal)", &series),
        )?;
    }

    let summary = Summary {
        example: example.to_string(),
        alpha,
        output_map: "identity",
        seed,
        open_loop_stable,
        orders,
        trajectory: TrajectorySummary {
            order: 1,
            x0: x0.iter().copied().collect(),
            horizon: cfg.horizon,
            step: cfg.h,
            max_final_ratio: max_ratio,
            settling_band: band,
            worst_settling,
        },
    };
    write_file(
        out,
        "summary.json",
        &serde_json::to_string_pretty(&summary).expect("serializable"),
    )?;

    RunManifest::new("repro", out)
        .option("example", example)
        .seed(seed)
        .write(out)?;

    for o in &summary.orders {
        println!(
            "order {}: feasible = {}, worst margin = {:?}",
            o.order, o.feasible, o.worst_margin
        );
    }
    println!(
        "trajectories: max |x(T)|/|x0| = {:.3e}, worst settling = {:?}",
        summary.trajectory.max_final_ratio, summary.trajectory.worst_settling
    );
    Ok(exit)
}
