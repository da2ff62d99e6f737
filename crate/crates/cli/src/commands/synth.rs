use std::path::Path;

use super::{
    closed_loop_spectra, ensure_dir, read_system, spectra_csv, verification_csv, write_file,
};
use crate::manifest::RunManifest;
use fraclmi::io::{controller_table, controller_to_json, report_to_json};
use fraclmi::sdp::solver_from_env;
use fraclmi::synthesis::{assemble_for, synthesize, SynthOptions, SynthesisReport, VerifyStrategy};
use fraclmi::Result;

/// Exit code of a finished synthesis run.
pub fn report_exit_code(report: &SynthesisReport) -> u8 {
    if !report.feasible {
        4
    } else if !report.verified_stable() {
        5
    } else if report.recovery_inexact() {
        1
    } else {
        0
    }
}

pub fn run(
    system: &Path,
    order: usize,
    out: &Path,
    explain: bool,
    seed: u64,
    samples: usize,
) -> Result<u8> {
    let (sys, unc) = read_system(system)?;
    let mut solver = solver_from_env()?;
    let opts = SynthOptions {
        verify: VerifyStrategy {
            random_seed: seed,
            random_count: samples,
            ..VerifyStrategy::default()
        },
        ..SynthOptions::default()
    };

    if explain {
        let lmi = assemble_for(&sys, &unc, order)?;
        println!("{}", lmi.problem.describe());
    }

    let report = synthesize(&sys, &unc, order, &opts, solver.as_mut())?;
    ensure_dir(out)?;
    write_file(out, "report.json", &report_to_json(&report))?;

    if let Some(rec) = &report.recovery {
        if rec.q_condition > 1e10 {
            eprintln!(
                "warning: Lyapunov recovery block has condition estimate {:.2e}; \
                 controller entries may be inaccurate",
                rec.q_condition
            );
        }
    }

    if let Some(k) = &report.controller {
        write_file(out, "controller.json", &controller_to_json(k))?;
        write_file(out, "controller.txt", &controller_table(k))?;
        write_file(
            out,
            "verification.csv",
            &verification_csv(&sys, &unc, k, seed, samples)?,
        )?;
        let spectra = closed_loop_spectra(&sys, &unc, k)?;
        write_file(out, "closedloop_spectrum.csv", &spectra_csv(&spectra))?;
    }

    RunManifest::new("synth", out)
        .input(system)
        .option("order", order)
        .option("samples", samples)
        .seed(seed)
        .write(out)?;

    match (&report.feasible, &report.verification) {
        (true, Some(v)) => println!(
            "feasible (t* = {:.3e}); worst sampled margin {:+.6} rad over {} samples",
            report.solver_margin, v.worst_margin, v.samples
        ),
        (true, None) => println!("feasible (t* = {:.3e})", report.solver_margin),
        (false, _) => println!("infeasible (t* = {:.3e})", report.solver_margin),
    }
    Ok(report_exit_code(&report))
}
