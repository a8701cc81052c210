//! Soil moisture grid.
//!
//! The bed is divided into square cells of `cell_size` cm with a fixed
//! `depth`, so one cell holds `cell_size² · depth` cm³ (= mL) of soil. Each
//! cell stores its volumetric water content (VWC), a dimensionless fraction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Grid geometry and moisture bounds, as read from configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SoilSpec {
    pub cell_size: f64,
    pub depth: f64,
    pub initial_vwc: f64,
    pub residual_vwc: f64,
    pub saturation_vwc: f64,
}

impl Default for SoilSpec {
    fn default() -> Self {
        Self {
            cell_size: 10.0,
            depth: 10.0,
            initial_vwc: 0.2,
            residual_vwc: 0.05,
            saturation_vwc: 0.5,
        }
    }
}

impl SoilSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.cell_size > 0.0) {
            return Err(Error::config("soil.cell_size must be > 0"));
        }
        if !(self.depth > 0.0) {
            return Err(Error::config("soil.depth must be > 0"));
        }
        if !(0.0..=1.0).contains(&self.residual_vwc) {
            return Err(Error::config("soil.residual_vwc must lie in [0, 1]"));
        }
        if !(self.residual_vwc..=1.0).contains(&self.saturation_vwc) {
            return Err(Error::config(
                "soil.saturation_vwc must lie in [residual_vwc, 1]",
            ));
        }
        if !(self.residual_vwc..=self.saturation_vwc).contains(&self.initial_vwc) {
            return Err(Error::config(
                "soil.initial_vwc must lie in [residual_vwc, saturation_vwc]",
            ));
        }
        Ok(())
    }
}

/// Index of one soil cell, `(column, row)`.
pub type CellIndex = (usize, usize);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoilGrid {
    pub cell_size: f64,
    pub depth: f64,
    pub residual_vwc: f64,
    pub saturation_vwc: f64,
    pub cols: usize,
    pub rows: usize,
    /// Row-major moisture, `vwc[row][col]`.
    pub vwc: Vec<Vec<f64>>,
}

impl SoilGrid {
    /// Builds a `ceil(w/cell) × ceil(h/cell)` grid at the spec's initial VWC.
    pub fn new(width: f64, height: f64, spec: &SoilSpec) -> Result<Self> {
        spec.validate()?;
        let cols = (width / spec.cell_size).ceil() as usize;
        let rows = (height / spec.cell_size).ceil() as usize;
        Ok(Self {
            cell_size: spec.cell_size,
            depth: spec.depth,
            residual_vwc: spec.residual_vwc,
            saturation_vwc: spec.saturation_vwc,
            cols,
            rows,
            vwc: vec![vec![spec.initial_vwc; cols]; rows],
        })
    }

    /// Soil volume of one cell in mL.
    pub fn cell_volume(&self) -> f64 {
        self.cell_size * self.cell_size * self.depth
    }

    pub fn cell_center(&self, (col, row): CellIndex) -> (f64, f64) {
        (
            (col as f64 + 0.5) * self.cell_size,
            (row as f64 + 0.5) * self.cell_size,
        )
    }

    /// Cell containing a point; points on the far edge map to the last cell.
    pub fn cell_containing(&self, x: f64, y: f64) -> Option<CellIndex> {
        if x < 0.0 || y < 0.0 || self.cols == 0 || self.rows == 0 {
            return None;
        }
        let col = ((x / self.cell_size).floor() as usize).min(self.cols - 1);
        let row = ((y / self.cell_size).floor() as usize).min(self.rows - 1);
        if x > self.cols as f64 * self.cell_size || y > self.rows as f64 * self.cell_size {
            return None;
        }
        Some((col, row))
    }

    /// Cells whose centers lie within `radius` of `(x, y)`.
    ///
    /// When no center is that close the containing cell is returned, so a zone
    /// is never empty for a point inside the grid.
    pub fn zone(&self, x: f64, y: f64, radius: f64) -> Vec<CellIndex> {
        let mut cells = Vec::new();
        if self.cols == 0 || self.rows == 0 {
            return cells;
        }
        let lo_col = (((x - radius) / self.cell_size - 0.5).floor().max(0.0)) as usize;
        let lo_row = (((y - radius) / self.cell_size - 0.5).floor().max(0.0)) as usize;
        let hi_col = (((x + radius) / self.cell_size).ceil().max(0.0) as usize).min(self.cols - 1);
        let hi_row = (((y + radius) / self.cell_size).ceil().max(0.0) as usize).min(self.rows - 1);
        let r2 = radius * radius;
        for row in lo_row..=hi_row {
            for col in lo_col..=hi_col {
                let (cx, cy) = self.cell_center((col, row));
                let (dx, dy) = (cx - x, cy - y);
                if dx * dx + dy * dy <= r2 {
                    cells.push((col, row));
                }
            }
        }
        if cells.is_empty() {
            cells.extend(self.cell_containing(x, y));
        }
        cells
    }

    pub fn get(&self, (col, row): CellIndex) -> f64 {
        self.vwc[row][col]
    }

    pub fn set(&mut self, (col, row): CellIndex, value: f64) {
        self.vwc[row][col] = value;
    }

    /// Water held above the residual content of a cell, in mL.
    pub fn available(&self, cell: CellIndex) -> f64 {
        (self.get(cell) - self.residual_vwc).max(0.0) * self.cell_volume()
    }

    /// Total water stored in the grid, in mL.
    pub fn storage(&self) -> f64 {
        let v = self.cell_volume();
        self.vwc.iter().flatten().map(|w| w * v).sum()
    }

    pub fn mean_over(&self, cells: &[CellIndex]) -> f64 {
        if cells.is_empty() {
            return 0.0;
        }
        cells.iter().map(|&c| self.get(c)).sum::<f64>() / cells.len() as f64
    }

    pub fn iter_cells(&self) -> impl Iterator<Item = CellIndex> + '_ {
        (0..self.rows).flat_map(move |row| (0..self.cols).map(move |col| (col, row)))
    }
}
