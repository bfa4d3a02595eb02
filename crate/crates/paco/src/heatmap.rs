//! PoK heat maps: per-cell window PoK with the time axis collapsed by max.

use std::io::{self, Write};

use paco_core::{Paco, PacoError, QueryOverrides, QueryWindow, StoreBackend};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HeatmapError {
    #[error("heat maps need a bounded spatial window")]
    UnboundedSpace,
    #[error(transparent)]
    Paco(#[from] PacoError),
}

/// Row-major grid; row 0 is the northernmost row, column 0 the westernmost.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

impl Heatmap {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn write_csv<W: Write>(&self, w: W) -> io::Result<()> {
        let mut w = io::BufWriter::new(w);
        for row in self.values.chunks(self.cols) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.6}")).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        w.flush()
    }

    /// Binary 8-bit PGM, PoK 0 to 0 and 1 to 255.
    pub fn write_pgm<W: Write>(&self, w: W) -> io::Result<()> {
        let mut w = io::BufWriter::new(w);
        write!(w, "P5\n{} {}\n255\n", self.cols, self.rows)?;
        let bytes: Vec<u8> = self
            .values
            .iter()
            .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect();
        w.write_all(&bytes)?;
        w.flush()
    }
}

pub fn heatmap<S: StoreBackend>(
    paco: &Paco<S>,
    win: &QueryWindow,
    overrides: &QueryOverrides,
) -> Result<Heatmap, HeatmapError> {
    let space = win.space.ok_or(HeatmapError::UnboundedSpace)?;
    let mut win = *win;
    if win.time.is_none() && paco.store().is_empty() {
        // Nothing to clamp an open time axis to; one empty time cell.
        win = QueryWindow::spatial(space);
        win.time = Some((0.0, 0.0));
    }
    let (_, cells) = paco.window_cells(&win, overrides)?;
    let g = cells.grid;
    let (rows, cols) = (g.lat.n, g.lon.n);
    let mut values = vec![0.0f64; rows * cols];
    for row in 0..rows {
        let j = rows - 1 - row;
        for i in 0..cols {
            values[row * cols + i] = (0..g.time.n).map(|k| cells.get(i, j, k)).fold(0.0, f64::max);
        }
    }
    Ok(Heatmap { rows, cols, values })
}
