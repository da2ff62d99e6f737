pub mod check;
pub mod export;
pub mod repro;
pub mod simulate;
pub mod synth;

use std::fmt::Write as _;
use std::path::Path;

use fraclmi::model::{
    realize, sample_uncertainty, FoltiSystem, SamplingStrategy, UncertaintyModel,
    UncertaintyRealization,
};
use fraclmi::stability::{argument_margin, SpectrumReport};
use fraclmi::synthesis::{close_loop, Controller};
use fraclmi::{Error, Result};

/// Vertex sweeps are capped at 2^10 realizations; larger boxes fall back to
/// random sampling only.
pub const VERTEX_SWEEP_CAP: usize = 10;

pub fn read_system(path: &Path) -> Result<(FoltiSystem, UncertaintyModel)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    fraclmi::io::parse_system(&text)
}

pub fn ensure_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path)?;
    Ok(())
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::write(dir.join(name), contents)?;
    Ok(())
}

/// Nominal realization plus all vertices when the box is small enough.
pub fn nominal_and_vertices(unc: &UncertaintyModel) -> Result<Vec<(String, UncertaintyRealization)>> {
    let mut out = vec![("nominal".to_string(), UncertaintyRealization::zero(unc))];
    if !unc.is_certain() && unc.p() + unc.q() <= VERTEX_SWEEP_CAP {
        for (i, v) in sample_uncertainty(unc, SamplingStrategy::Vertices)?
            .into_iter()
            .enumerate()
        {
            out.push((format!("vertex_{i:02}"), v));
        }
    }
    Ok(out)
}

/// Open-loop spectra per realization.
pub fn open_loop_spectra(
    sys: &FoltiSystem,
    unc: &UncertaintyModel,
    alpha: f64,
) -> Result<Vec<(String, SpectrumReport)>> {
    nominal_and_vertices(unc)?
        .into_iter()
        .map(|(label, r)| {
            let (a_t, _) = realize(sys, unc, &r)?;
            Ok((label, argument_margin(&a_t, alpha)?))
        })
        .collect()
}

/// Closed-loop spectra per realization for a fixed controller.
pub fn closed_loop_spectra(
    sys: &FoltiSystem,
    unc: &UncertaintyModel,
    k: &Controller,
) -> Result<Vec<(String, SpectrumReport)>> {
    nominal_and_vertices(unc)?
        .into_iter()
        .map(|(label, r)| {
            let (a_t, b_t) = realize(sys, unc, &r)?;
            let cl = close_loop(&a_t, &b_t, sys.c(), k)?;
            Ok((label, argument_margin(cl.a_cl(), sys.alpha())?))
        })
        .collect()
}

/// Combined CSV over labeled spectra: `realization,Re,Im,absArg`.
pub fn spectra_csv(spectra: &[(String, SpectrumReport)]) -> String {
    let mut s = String::from("realization,Re,Im,absArg\n");
    for (label, report) in spectra {
        for (ev, arg) in report.eigenvalues.iter().zip(&report.args) {
            let _ = writeln!(s, "{label},{},{},{}", ev.re, ev.im, arg);
        }
    }
    s
}

/// Stability boundary rays `arg = +- alpha pi / 2` sampled out to `rmax`:
/// `ray,Re,Im` rows.
pub fn boundary_csv(alpha: f64, rmax: f64) -> String {
    let phi = alpha * std::f64::consts::PI / 2.0;
    let mut s = String::from("ray,Re,Im\n");
    for sign in [1.0f64, -1.0] {
        let name = if sign > 0.0 { "plus" } else { "minus" };
        for k in 0..=50 {
            let r = rmax * k as f64 / 50.0;
            let _ = writeln!(s, "{name},{},{}", r * phi.cos(), sign * r * phi.sin());
        }
    }
    s
}

/// Ray segments for the scatter plot.
pub fn boundary_rays(alpha: f64, rmax: f64) -> Vec<[(f64, f64); 2]> {
    let phi = alpha * std::f64::consts::PI / 2.0;
    vec![
        [(0.0, 0.0), (rmax * phi.cos(), rmax * phi.sin())],
        [(0.0, 0.0), (rmax * phi.cos(), -rmax * phi.sin())],
    ]
}

pub fn spectra_svg(title: &str, spectra: &[(String, SpectrumReport)], alpha: f64) -> String {
    let mut rmax = 1.0f64;
    for (_, report) in spectra {
        for ev in &report.eigenvalues {
            rmax = rmax.max(ev.norm() * 1.2);
        }
    }
    // One series for the nominal spectrum, one pooled series for vertices.
    let mut nominal = fraclmi::plot::Series::new("nominal", vec![]);
    let mut vertices = fraclmi::plot::Series::new("vertices", vec![]);
    for (label, report) in spectra {
        let target = if label == "nominal" {
            &mut nominal
        } else {
            &mut vertices
        };
        target
            .points
            .extend(report.eigenvalues.iter().map(|ev| (ev.re, ev.im)));
    }
    let groups: Vec<fraclmi::plot::Series> = [nominal, vertices]
        .into_iter()
        .filter(|s| !s.points.is_empty())
        .collect();
    fraclmi::plot::scatter_plot(title, &groups, &boundary_rays(alpha, rmax))
}

/// Per-sample verification CSV:
/// `kind,index,margin,i1..ip,a1..aq` (vertices first, then random draws).
pub fn verification_csv(
    sys: &FoltiSystem,
    unc: &UncertaintyModel,
    k: &Controller,
    seed: u64,
    random_count: usize,
) -> Result<String> {
    let mut header = String::from("kind,index,margin");
    for i in 1..=unc.p() {
        let _ = write!(header, ",i{i}");
    }
    for j in 1..=unc.q() {
        let _ = write!(header, ",a{j}");
    }
    header.push('\n');
    let mut s = header;

    let mut emit = |kind: &str, index: usize, r: &UncertaintyRealization| -> Result<()> {
        let (a_t, b_t) = realize(sys, unc, r)?;
        let cl = close_loop(&a_t, &b_t, sys.c(), k)?;
        let margin = argument_margin(cl.a_cl(), sys.alpha())?.margin;
        let _ = write!(s, "{kind},{index},{margin}");
        for v in r.i_params.iter().chain(&r.a_params) {
            let _ = write!(s, ",{v}");
        }
        s.push('\n');
        Ok(())
    };

    if unc.is_certain() {
        emit("nominal", 0, &UncertaintyRealization::zero(unc))?;
    } else {
        if unc.p() + unc.q() <= VERTEX_SWEEP_CAP {
            for (i, v) in sample_uncertainty(unc, SamplingStrategy::Vertices)?
                .iter()
                .enumerate()
            {
                emit("vertex", i, v)?;
            }
        }
        for (i, v) in sample_uncertainty(
            unc,
            SamplingStrategy::Random {
                seed,
                count: random_count,
            },
        )?
        .iter()
        .enumerate()
        {
            emit("random", i, v)?;
        }
    }
    Ok(s)
}
