//! Plot-ready CSV series for external plotting tools.

use std::io::{self, Write};

use piot_core::diagnostics::{gaussian_kde, simplex_project};
use piot_core::matrix::normalize_columns;
use piot_core::{CostMatrix, Kernel};

use crate::csvio::write_metadata;

/// `t,R` pairs.
pub fn write_autocorrelation(w: &mut impl Write, r: &[f64], meta: &[String]) -> io::Result<()> {
    write_metadata(w, meta)?;
    writeln!(w, "t,R")?;
    for (t, x) in r.iter().enumerate() {
        writeln!(w, "{t},{x}")?;
    }
    Ok(())
}

/// `step,<name>_1,...` with steps counted from 1.
pub fn write_running_average(w: &mut impl Write, name: &str, series: &[Vec<f64>], meta: &[String]) -> io::Result<()> {
    write_metadata(w, meta)?;
    let width = series.first().map_or(0, Vec::len);
    let cols: Vec<String> = (1..=width).map(|k| format!("{name}_{k}")).collect();
    writeln!(w, "step,{}", cols.join(","))?;
    for (s, v) in series.iter().enumerate() {
        let vals: Vec<String> = v.iter().map(f64::to_string).collect();
        writeln!(w, "{},{}", s + 1, vals.join(","))?;
    }
    Ok(())
}

/// Evenly spaced grid covering `points` with `pad` on each side.
pub fn grid_around(points: &[f64], pad: f64, n: usize) -> Vec<f64> {
    let lo = points.iter().copied().fold(f64::INFINITY, f64::min) - pad;
    let hi = points.iter().copied().fold(f64::NEG_INFINITY, f64::max) + pad;
    if n < 2 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntryDensity {
    pub i: usize,
    pub j: usize,
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
}

impl EntryDensity {
    pub fn mode(&self) -> f64 {
        let best = (0..self.density.len()).fold(0, |b, k| if self.density[k] > self.density[b] { k } else { b });
        self.grid[best]
    }
}

/// Density of every cost entry over the pooled samples.
pub fn cost_densities(costs: &[CostMatrix], bandwidth: f64, points: usize) -> piot_core::Result<Vec<EntryDensity>> {
    let Some(first) = costs.first() else {
        return Ok(Vec::new());
    };
    let (m, n) = first.matrix().dim();
    let mut out = Vec::with_capacity(m * n);
    for i in 0..m {
        for j in 0..n {
            let values: Vec<f64> = costs.iter().map(|c| c.matrix()[(i, j)]).collect();
            let grid = grid_around(&values, 4.0 * bandwidth, points);
            let density = gaussian_kde(&values, bandwidth, &grid)?;
            out.push(EntryDensity { i, j, grid, density });
        }
    }
    Ok(out)
}

/// `i,j,x,density` rows with 1-based entry indices.
pub fn write_kde(w: &mut impl Write, densities: &[EntryDensity], meta: &[String]) -> io::Result<()> {
    write_metadata(w, meta)?;
    writeln!(w, "i,j,x,density")?;
    for d in densities {
        for (x, y) in d.grid.iter().zip(&d.density) {
            writeln!(w, "{},{},{x},{y}", d.i + 1, d.j + 1)?;
        }
    }
    Ok(())
}

/// Each column of each column-normalized 3-row kernel as a point in the triangle.
pub fn write_simplex(w: &mut impl Write, samples: &[Kernel], meta: &[String]) -> piot_core::Result<()> {
    let io = |e: io::Error| piot_core::Error::InvalidInput(e.to_string());
    write_metadata(w, meta).map_err(io)?;
    writeln!(w, "sample,column,x,y").map_err(io)?;
    for (s, k) in samples.iter().enumerate() {
        let col = normalize_columns(k.matrix(), None)?;
        if col.rows() != 3 {
            return Err(piot_core::Error::InvalidInput("simplex plots need three rows".into()));
        }
        for j in 0..col.cols() {
            let [x, y] = simplex_project([col[(0, j)], col[(1, j)], col[(2, j)]])?;
            writeln!(w, "{s},{},{x},{y}", j + 1).map_err(io)?;
        }
    }
    Ok(())
}
