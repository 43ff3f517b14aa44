//! File formats: sample matrices, spectra, and generic CSV/JSON output.
//!
//! Every floating-point number is written with 17 significant digits so that
//! values round-trip exactly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::hankel_stats::EmpiricalSpectrum;
use crate::linalg::{C64, CMat};

/// Format a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write `samples` (`M x T`) as CSV: a header record `M,<M>,L,<L>`, then `2M`
/// rows of `T` values, real parts first, then imaginary parts.
pub fn write_samples_csv(path: &Path, samples: &CMat, l: usize) -> Result<()> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_path(path)?;
    let m = samples.nrows();
    w.write_record(["M", &m.to_string(), "L", &l.to_string()])?;
    for part in 0..2 {
        for i in 0..m {
            let row = samples.row(i).iter().map(|z| fmt_f64(if part == 0 { z.re } else { z.im })).collect::<Vec<_>>();
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Read a file written by [`write_samples_csv`]; returns the samples and `L`.
pub fn read_samples_csv(path: &Path) -> Result<(CMat, usize)> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_path(path)?;
    let mut records = r.records();
    let header = records.next().ok_or_else(|| Error::InvalidInput("empty sample file".into()))??;
    let field = |i: usize, name: &str| -> Result<usize> {
        if header.get(i).map(str::trim) != Some(name) {
            return invalid(format!("sample header must be `M,<M>,L,<L>`, got {header:?}"));
        }
        header
            .get(i + 1)
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| Error::InvalidInput(format!("bad {name} in sample header")))
    };
    let m = field(0, "M")?;
    let l = field(2, "L")?;
    if m == 0 || l == 0 {
        return invalid("M and L must be positive");
    }
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(2 * m);
    for rec in records {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|v| v.trim().parse::<f64>().map_err(|e| Error::InvalidInput(format!("bad number {v:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if rows.len() != 2 * m {
        return invalid(format!("expected {} data rows for M = {m}, found {}", 2 * m, rows.len()));
    }
    let t = rows[0].len();
    if rows.iter().any(|r| r.len() != t) {
        return invalid("data rows have different lengths");
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return invalid("samples must be finite");
    }
    Ok((CMat::from_fn(m, t, |i, j| C64::new(rows[i][j], rows[m + i][j])), l))
}

/// Write a spectrum as CSV, one eigenvalue per row under the header `eigenvalue`.
pub fn write_spectrum_csv(path: &Path, spec: &EmpiricalSpectrum) -> Result<()> {
    write_columns_csv(path, &["eigenvalue"], &[&spec.eigs])
}

/// Write equal-length columns of floats as CSV with the given header.
pub fn write_columns_csv(path: &Path, header: &[&str], cols: &[&[f64]]) -> Result<()> {
    if header.len() != cols.len() {
        return invalid("header and column counts differ");
    }
    let n = cols.first().map_or(0, |c| c.len());
    if cols.iter().any(|c| c.len() != n) {
        return invalid("columns have different lengths");
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for i in 0..n {
        w.write_record(cols.iter().map(|c| fmt_f64(c[i])))?;
    }
    w.flush()?;
    Ok(())
}

/// Serialize a value as pretty-printed JSON.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}
