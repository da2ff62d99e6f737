use std::path::Path;

use super::read_system;
use crate::manifest::RunManifest;
use fraclmi::lmi::{assemble_certain, assemble_theorem1, assemble_theorem2};
use fraclmi::model::uncertainty_bounds;
use fraclmi::sdp::{export_sdpa, to_feasibility_program, SolverOptions};
use fraclmi::synthesis::assemble_for;
use fraclmi::{Error, Result};

pub fn run(system: &Path, order: usize, theorem: &str, out: &Path) -> Result<u8> {
    let (sys, unc) = read_system(system)?;
    let env = uncertainty_bounds(&unc);
    let lmi = match theorem {
        "auto" => assemble_for(&sys, &unc, order)?,
        "1" => assemble_theorem1(&sys, &env, order)?,
        "2" => assemble_theorem2(&sys, &env, order)?,
        "certain" => assemble_certain(&sys, order)?,
        other => {
            return Err(Error::Parse(format!(
                "unknown theorem selector {other:?} (expected auto, 1, 2, certain)"
            )))
        }
    };
    let program = to_feasibility_program(&lmi.problem, SolverOptions::default().delta)?;
    let mut file = std::fs::File::create(out)?;
    export_sdpa(&program, &mut file)?;

    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        RunManifest::new("export-sdpa", dir)
            .input(system)
            .option("order", order)
            .option("theorem", theorem)
            .option("file", out.display().to_string())
            .write(dir)?;
    }
    println!(
        "wrote {} ({} variables, {} blocks)",
        out.display(),
        program.free_vars(),
        program.blocks().len()
    );
    Ok(0)
}
