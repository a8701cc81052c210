//! Canopy rasterization and light competition.
//!
//! Every living canopy disk is rasterized onto a square grid (cell centers
//! inside the disk count as covered). A cell covered by several plants goes to
//! the one that ranks highest: larger radius, then earlier emergence, then
//! lower id.

use std::cmp::Ordering;

use crate::garden::{GardenState, PlantInstance};

/// Square raster over the bed used for light and coverage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Raster {
    pub resolution: f64,
    pub cols: usize,
    pub rows: usize,
}

impl Raster {
    pub fn new(width: f64, height: f64, resolution: f64) -> Self {
        Self {
            resolution,
            cols: (width / resolution).ceil() as usize,
            rows: (height / resolution).ceil() as usize,
        }
    }

    pub fn len(&self) -> usize {
        self.cols * self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn center(&self, index: usize) -> (f64, f64) {
        let (col, row) = (index % self.cols, index / self.cols);
        (
            (col as f64 + 0.5) * self.resolution,
            (row as f64 + 0.5) * self.resolution,
        )
    }

    /// Indices of cells whose centers lie inside the disk.
    pub fn disk_cells(&self, (x, y): (f64, f64), radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        if radius <= 0.0 || self.is_empty() {
            return out;
        }
        let res = self.resolution;
        let col_range = span(
            (x - radius) / res - 0.5,
            (x + radius) / res - 0.5,
            self.cols,
        );
        let row_range = span(
            (y - radius) / res - 0.5,
            (y + radius) / res - 0.5,
            self.rows,
        );
        let r2 = radius * radius;
        for row in row_range.clone() {
            let cy = (row as f64 + 0.5) * res;
            for col in col_range.clone() {
                let cx = (col as f64 + 0.5) * res;
                let (dx, dy) = (cx - x, cy - y);
                if dx * dx + dy * dy <= r2 {
                    out.push(row * self.cols + col);
                }
            }
        }
        out
    }
}

fn span(lo: f64, hi: f64, n: usize) -> std::ops::Range<usize> {
    // one cell of slack on each side; the distance test decides membership
    let lo = (lo.ceil() - 1.0).max(0.0) as usize;
    let hi = (hi.floor() + 2.0).max(0.0) as usize;
    lo.min(n)..hi.min(n)
}

/// Occlusion order: `Greater` means `a` shades `b`.
pub fn canopy_rank(a: &PlantInstance, b: &PlantInstance) -> Ordering {
    a.radius
        .total_cmp(&b.radius)
        .then_with(|| {
            let ea = a.emerged_day.unwrap_or(u32::MAX);
            let eb = b.emerged_day.unwrap_or(u32::MAX);
            eb.cmp(&ea)
        })
        .then_with(|| b.id.cmp(&a.id))
}

/// Result of assigning raster cells to plants.
#[derive(Debug, Clone, PartialEq)]
pub struct LightAllocation {
    pub raster: Raster,
    /// Owning plant id per raster cell.
    pub owner: Vec<Option<usize>>,
    /// Cells inside each plant's disk.
    pub covered: Vec<usize>,
    /// Cells won by each plant.
    pub assigned: Vec<usize>,
}

impl LightAllocation {
    /// Fraction of a plant's own disk it receives light on (1 when its disk
    /// covers no cell center).
    pub fn f_light(&self, id: usize) -> f64 {
        match self.covered[id] {
            0 => 1.0,
            c => self.assigned[id] as f64 / c as f64,
        }
    }

    pub fn covered_cells(&self) -> usize {
        self.owner.iter().filter(|o| o.is_some()).count()
    }
}

pub fn light_allocation(state: &GardenState) -> LightAllocation {
    let raster = Raster::new(
        state.bed.width,
        state.bed.height,
        state.params.raster_resolution,
    );
    let n = state.plants.len();
    let mut owner: Vec<Option<usize>> = vec![None; raster.len()];
    let mut covered = vec![0usize; n];
    for plant in state
        .plants
        .iter()
        .filter(|p| p.is_living() && p.radius > 0.0)
    {
        let cells = raster.disk_cells(plant.center, plant.radius);
        covered[plant.id] = cells.len();
        for cell in cells {
            let slot = &mut owner[cell];
            match *slot {
                Some(current) if canopy_rank(&state.plants[current], plant) != Ordering::Less => {}
                _ => *slot = Some(plant.id),
            }
        }
    }
    let mut assigned = vec![0usize; n];
    for id in owner.iter().flatten() {
        assigned[*id] += 1;
    }
    LightAllocation {
        raster,
        owner,
        covered,
        assigned,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn span_clamps() {
        assert_eq!(span(-3.2, 2.5, 10), 0..4);
        assert_eq!(span(8.1, 12.0, 10), 8..10);
    }

    #[test]
    fn disk_cells_unit_grid() {
        let r = Raster::new(10.0, 10.0, 1.0);
        // radius 1 around a cell center touches the 4-neighbourhood
        assert_eq!(r.disk_cells((4.5, 4.5), 1.0).len(), 5);
        assert!(r.disk_cells((4.5, 4.5), 0.0).is_empty());
    }
}
