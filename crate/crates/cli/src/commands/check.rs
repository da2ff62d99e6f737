use std::path::Path;

use super::{
    boundary_csv, ensure_dir, open_loop_spectra, read_system, spectra_csv, spectra_svg,
    write_file,
};
use crate::manifest::RunManifest;
use fraclmi::Result;

pub fn run(system: &Path, alpha_override: Option<f64>, out: &Path) -> Result<u8> {
    let (mut sys, unc) = read_system(system)?;
    if let Some(alpha) = alpha_override {
        sys = sys.with_alpha(alpha)?;
    }
    let alpha = sys.alpha();
    ensure_dir(out)?;

    let spectra = open_loop_spectra(&sys, &unc, alpha)?;
    let mut rmax = 1.0f64;
    for (label, report) in &spectra {
        write_file(out, &format!("spectrum_{label}.csv"), &report.to_csv())?;
        for ev in &report.eigenvalues {
            rmax = rmax.max(ev.norm() * 1.2);
        }
    }
    write_file(out, "spectrum.csv", &spectra_csv(&spectra))?;
    write_file(out, "boundary.csv", &boundary_csv(alpha, rmax))?;
    write_file(
        out,
        "spectrum.svg",
        &spectra_svg(&format!("open-loop spectrum (alpha = {alpha})"), &spectra, alpha),
    )?;

    let mut manifest = RunManifest::new("check", out).input(system);
    if let Some(a) = alpha_override {
        manifest = manifest.option("alpha", a);
    }
    manifest.write(out)?;

    let mut all_stable = true;
    for (label, report) in &spectra {
        println!(
            "{label}: margin {:+.6} rad ({})",
            report.margin,
            if report.stable { "stable" } else { "unstable" }
        );
        all_stable &= report.stable;
    }
    Ok(if all_stable { 0 } else { 3 })
}
