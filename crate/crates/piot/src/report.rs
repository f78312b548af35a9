//! Per-entry prediction reports.

use std::io::{self, Write};

use piot_core::Matrix;

use crate::csvio::write_metadata;

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    /// 1-based.
    pub i: usize,
    pub j: usize,
    pub truth: f64,
    pub predicted: f64,
    /// `100 (predicted - truth) / mean(truth)`.
    pub delta_pct: f64,
}

/// One row per entry, or only `entries` (0-based) when given.
pub fn compare(
    truth: &Matrix,
    predicted: &Matrix,
    entries: Option<&[(usize, usize)]>,
) -> piot_core::Result<Vec<ReportRow>> {
    truth.require_same_dim(predicted)?;
    let mean = truth.sum() / truth.as_slice().len() as f64;
    let all: Vec<(usize, usize)> = (0..truth.rows())
        .flat_map(|i| (0..truth.cols()).map(move |j| (i, j)))
        .collect();
    Ok(entries
        .unwrap_or(&all)
        .iter()
        .map(|&(i, j)| ReportRow {
            i: i + 1,
            j: j + 1,
            truth: truth[(i, j)],
            predicted: predicted[(i, j)],
            delta_pct: 100.0 * (predicted[(i, j)] - truth[(i, j)]) / mean,
        })
        .collect())
}

pub fn write_report(w: &mut impl Write, rows: &[ReportRow], meta: &[String]) -> io::Result<()> {
    write_metadata(w, meta)?;
    writeln!(w, "i,j,truth,predicted,delta_pct")?;
    for r in rows {
        writeln!(w, "{},{},{},{},{}", r.i, r.j, r.truth, r.predicted, r.delta_pct)?;
    }
    Ok(())
}
