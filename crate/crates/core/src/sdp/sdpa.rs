//! SDPA sparse format (".dat-s") export and import.
//!
//! The exported problem is `min c.x` subject to `X = sum_i x_i F_i - F_0`,
//! `X >= 0`, block diagonal. Our PSD blocks `A_0 + sum_i x_i A_i >= 0` map
//! to `F_0 = -A_0`, `F_i = A_i`. Layout: comment lines, `mDIM`, `nBLOCK`,
//! `bLOCKsTRUCT`, the objective row, then `k b i j v` entries, 1-indexed,
//! upper triangle only.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use nalgebra::DMatrix;

use super::ConicProgram;
use crate::error::{Error, Result};
use crate::lmi::{AffineMatrixExpr, Constraint, DecisionVariable, VarId, VarKind};

/// Shortest round-trip decimal form (`parse::<f64>` recovers the exact bits).
fn format_value(v: f64) -> String {
    format!("{v}")
}

/// Dense coefficient per flat scalar column for one block.
fn dense_coeffs(program: &ConicProgram, block: &Constraint) -> BTreeMap<usize, DMatrix<f64>> {
    let layout = program.layout();
    let mut by_col: BTreeMap<usize, DMatrix<f64>> = BTreeMap::new();
    for (var, entry, coeff) in block.expr.terms() {
        let col = layout.slot(var, entry);
        by_col
            .entry(col)
            .and_modify(|m| *m += coeff)
            .or_insert_with(|| coeff.clone());
    }
    by_col
}

fn write_upper_entries(
    sink: &mut dyn Write,
    matno: usize,
    blkno: usize,
    m: &DMatrix<f64>,
) -> Result<()> {
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            let v = m[(i, j)];
            if v != 0.0 {
                writeln!(
                    sink,
                    "{matno} {blkno} {} {} {}",
                    i + 1,
                    j + 1,
                    format_value(v)
                )?;
            }
        }
    }
    Ok(())
}

/// Writes a conic program in SDPA sparse format.
pub fn export_sdpa(program: &ConicProgram, sink: &mut dyn Write) -> Result<()> {
    let m = program.free_vars();
    let blocks = program.blocks();
    writeln!(sink, "* fraclmi sdpa sparse export")?;
    writeln!(sink, "{m}")?;
    writeln!(sink, "{}", blocks.len())?;
    let sizes: Vec<String> = blocks
        .iter()
        .map(|b| b.expr.nrows().to_string())
        .collect();
    writeln!(sink, "{}", sizes.join(" "))?;
    let obj: Vec<String> = program
        .objective()
        .iter()
        .map(|v| format_value(*v))
        .collect();
    writeln!(sink, "{}", obj.join(" "))?;

    let per_block: Vec<BTreeMap<usize, DMatrix<f64>>> = blocks
        .iter()
        .map(|b| dense_coeffs(program, b))
        .collect();

    for (bi, c) in blocks.iter().enumerate() {
        let f0 = -linalg_symmetrize(c.expr.constant());
        write_upper_entries(sink, 0, bi + 1, &f0)?;
    }
    for k in 0..m {
        for (bi, coeffs) in per_block.iter().enumerate() {
            if let Some(a) = coeffs.get(&k) {
                write_upper_entries(sink, k + 1, bi + 1, &linalg_symmetrize(a))?;
            }
        }
    }
    Ok(())
}

fn linalg_symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    crate::linalg::symmetrize(m)
}

/// Leading numeric tokens of a line (commas/braces/parens act as spaces,
/// parsing stops at the first non-numeric token, e.g. `3 = mDIM`).
fn numeric_prefix(line: &str) -> Vec<f64> {
    line.split(|c: char| c.is_whitespace() || matches!(c, ',' | '{' | '}' | '(' | ')'))
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>())
        .take_while(|r| r.is_ok())
        .map(|r| r.unwrap())
        .collect()
}

fn is_comment(line: &str) -> bool {
    let t = line.trim_start();
    t.is_empty() || t.starts_with('*') || t.starts_with('"')
}

/// Reads an SDPA sparse file back into a conic program with anonymous
/// scalar variables. Diagonal blocks (negative bLOCKsTRUCT entries) are
/// expanded into dense symmetric blocks.
pub fn read_sdpa(src: &mut dyn BufRead) -> Result<ConicProgram> {
    let mut lines = Vec::new();
    let mut buf = String::new();
    loop {
        buf.clear();
        if src.read_line(&mut buf)? == 0 {
            break;
        }
        if !is_comment(&buf) {
            lines.push(buf.trim_end().to_string());
        }
    }
    let mut it = lines.into_iter();
    let mut next_numbers = |what: &str| -> Result<Vec<f64>> {
        let line = it
            .next()
            .ok_or_else(|| Error::Parse(format!("sdpa: missing {what} line")))?;
        let nums = numeric_prefix(&line);
        if nums.is_empty() {
            return Err(Error::Parse(format!("sdpa: malformed {what} line {line:?}")));
        }
        Ok(nums)
    };

    let m = next_numbers("mDIM")?[0] as usize;
    let nblock = next_numbers("nBLOCK")?[0] as usize;
    let raw_struct = next_numbers("bLOCKsTRUCT")?;
    if raw_struct.len() != nblock {
        return Err(Error::Parse(format!(
            "sdpa: bLOCKsTRUCT lists {} blocks, header says {}",
            raw_struct.len(),
            nblock
        )));
    }
    let diag: Vec<bool> = raw_struct.iter().map(|&s| s < 0.0).collect();
    let sizes: Vec<usize> = raw_struct.iter().map(|&s| s.abs() as usize).collect();
    let objective = next_numbers("objective")?;
    if objective.len() != m {
        return Err(Error::Parse(format!(
            "sdpa: objective has {} entries, mDIM is {m}",
            objective.len()
        )));
    }

    // f[matno][block] sparse triangles.
    let mut f: Vec<Vec<DMatrix<f64>>> = (0..=m)
        .map(|_| sizes.iter().map(|&d| DMatrix::zeros(d, d)).collect())
        .collect();
    for line in it {
        let nums = numeric_prefix(&line);
        if nums.is_empty() {
            continue;
        }
        if nums.len() != 5 {
            return Err(Error::Parse(format!("sdpa: malformed entry line {line:?}")));
        }
        let (k, b, i, j, v) = (
            nums[0] as usize,
            nums[1] as usize,
            nums[2] as usize,
            nums[3] as usize,
            nums[4],
        );
        if k > m || b == 0 || b > nblock {
            return Err(Error::Parse(format!("sdpa: entry out of range {line:?}")));
        }
        let d = sizes[b - 1];
        if i == 0 || j == 0 || i > j || j > d {
            return Err(Error::Parse(format!("sdpa: bad indices in {line:?}")));
        }
        if diag[b - 1] && i != j {
            return Err(Error::Parse(format!(
                "sdpa: off-diagonal entry in diagonal block {line:?}"
            )));
        }
        f[k][b - 1][(i - 1, j - 1)] = v;
        f[k][b - 1][(j - 1, i - 1)] = v;
    }

    let vars: Vec<DecisionVariable> = (0..m)
        .map(|k| DecisionVariable {
            id: VarId(k as u32),
            name: format!("x{}", k + 1),
            kind: VarKind::Scalar,
        })
        .collect();
    let mut blocks = Vec::with_capacity(nblock);
    for b in 0..nblock {
        let mut expr = AffineMatrixExpr::from_const(-f[0][b].clone());
        for (k, var) in vars.iter().enumerate() {
            let coeff = f[k + 1][b].clone();
            if crate::linalg::max_abs(&coeff) > 0.0 {
                expr = expr.add(&AffineMatrixExpr::scaled_var(var, coeff));
            }
        }
        blocks.push(Constraint::new(&format!("block{}", b + 1), expr));
    }
    ConicProgram::new(vars, objective, blocks, None)
}
