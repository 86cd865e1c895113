use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{endpoints, MetricsError};
use crate::dataflow::{DataflowEdge, DataflowGraph};
use crate::geom::{Outline, Point};
use crate::placer::Floorplan;

/// Routing-demand bins tiling the outline row by row from the bottom. The
/// last row and column may be partial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CongestionGrid {
    pub outline: Outline,
    pub cols: usize,
    pub rows: usize,
    pub bin_width: f64,
    pub bin_height: f64,
    /// Deposited wire per unit bin area.
    pub demand: Vec<f64>,
    pub capacity: Vec<f64>,
}

impl CongestionGrid {
    pub fn new(
        outline: Outline,
        bin_width: f64,
        bin_height: f64,
        capacity: f64,
    ) -> Result<Self, MetricsError> {
        if !(bin_width > 0.0 && bin_height > 0.0) {
            return Err(MetricsError::BadGrid(format!(
                "bin size {bin_width} x {bin_height} must be positive"
            )));
        }
        if !(capacity > 0.0) {
            return Err(MetricsError::BadGrid(format!("capacity {capacity} must be positive")));
        }
        let count = |extent: f64, size: f64| ((extent / size - 1e-9).ceil() as usize).max(1);
        let cols = count(outline.width, bin_width);
        let rows = count(outline.height, bin_height);
        Ok(Self {
            outline,
            cols,
            rows,
            bin_width,
            bin_height,
            demand: vec![0.0; cols * rows],
            capacity: vec![capacity; cols * rows],
        })
    }

    pub fn index(&self, col: usize, row: usize) -> usize {
        row * self.cols + col
    }

    fn edge_x(&self, col: usize) -> f64 {
        if col >= self.cols {
            self.outline.width
        } else {
            (col as f64 * self.bin_width).min(self.outline.width)
        }
    }

    fn edge_y(&self, row: usize) -> f64 {
        if row >= self.rows {
            self.outline.height
        } else {
            (row as f64 * self.bin_height).min(self.outline.height)
        }
    }

    /// `(x0, y0, x1, y1)` of a bin, clipped to the outline.
    pub fn bin_rect(&self, col: usize, row: usize) -> (f64, f64, f64, f64) {
        (self.edge_x(col), self.edge_y(row), self.edge_x(col + 1), self.edge_y(row + 1))
    }

    pub fn bin_area(&self, col: usize, row: usize) -> f64 {
        let (x0, y0, x1, y1) = self.bin_rect(col, row);
        (x1 - x0) * (y1 - y0)
    }

    fn col_of(&self, x: f64) -> usize {
        ((x / self.bin_width).floor().max(0.0) as usize).min(self.cols - 1)
    }

    fn row_of(&self, y: f64) -> usize {
        ((y / self.bin_height).floor().max(0.0) as usize).min(self.rows - 1)
    }

    /// Share of `[lo, hi]` falling in each bin from `first` on. A zero-length
    /// span goes entirely to `first`.
    fn shares(lo: f64, hi: f64, first: usize, last: usize, edge: impl Fn(usize) -> f64) -> Vec<f64> {
        let mut f: Vec<f64> = (first..=last)
            .map(|i| (hi.min(edge(i + 1)) - lo.max(edge(i))).max(0.0))
            .collect();
        let sum: f64 = f.iter().sum();
        if sum > 0.0 {
            f.iter_mut().for_each(|v| *v /= sum);
        } else {
            f.fill(0.0);
            f[0] = 1.0;
        }
        f
    }

    /// Spreads `amount` uniformly over a box by overlap area. Zero-width or
    /// zero-height boxes spread by length, points land in their bin.
    pub fn deposit(&mut self, lo: Point, hi: Point, amount: f64) {
        if amount == 0.0 {
            return;
        }
        let (c0, c1) = (self.col_of(lo.x), self.col_of(hi.x));
        let (r0, r1) = (self.row_of(lo.y), self.row_of(hi.y));
        let fx = Self::shares(lo.x, hi.x, c0, c1, |i| self.edge_x(i));
        let fy = Self::shares(lo.y, hi.y, r0, r1, |i| self.edge_y(i));
        for (row, wy) in (r0..=r1).zip(&fy) {
            for (col, wx) in (c0..=c1).zip(&fx) {
                if *wx == 0.0 || *wy == 0.0 {
                    continue;
                }
                let i = self.index(col, row);
                self.demand[i] += amount * wx * wy / self.bin_area(col, row);
            }
        }
    }

    /// Σ demand × bin area: the total wire deposited.
    pub fn total_deposit(&self) -> f64 {
        let mut sum = 0.0;
        for row in 0..self.rows {
            for col in 0..self.cols {
                sum += self.demand[self.index(col, row)] * self.bin_area(col, row);
            }
        }
        sum
    }

    pub fn overflow(&self) -> f64 {
        self.demand
            .iter()
            .zip(&self.capacity)
            .map(|(d, c)| (d - c).max(0.0))
            .sum()
    }

    pub fn overflowing_bins(&self) -> usize {
        self.demand
            .iter()
            .zip(&self.capacity)
            .filter(|(d, c)| d > c)
            .count()
    }

    pub fn max_demand(&self) -> f64 {
        self.demand.iter().copied().fold(0.0, f64::max)
    }

    pub fn set_capacity(&mut self, capacity: f64) -> Result<(), MetricsError> {
        if !(capacity > 0.0) {
            return Err(MetricsError::BadGrid(format!("capacity {capacity} must be positive")));
        }
        self.capacity.fill(capacity);
        Ok(())
    }

    /// One line per row, top row first, comma-separated demands.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in (0..self.rows).rev() {
            let line: Vec<String> = (0..self.cols)
                .map(|col| format!("{}", self.demand[self.index(col, row)]))
                .collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
        out
    }
}

/// Wire an edge deposits: `bit_width * HPWL` between its endpoints.
pub fn edge_deposit(e: &DataflowEdge, a: Point, b: Point) -> f64 {
    e.bit_width as f64 * a.manhattan(b)
}

/// RUDY-style estimate over every dataflow edge. Endpoints are clamped into
/// the outline before depositing. Returns the grid and its overflow.
pub fn congestion(
    fp: &Floorplan,
    graph: &DataflowGraph,
    bin_width: f64,
    bin_height: f64,
    capacity: f64,
) -> Result<(CongestionGrid, f64), MetricsError> {
    let mut grid = CongestionGrid::new(fp.outline, bin_width, bin_height, capacity)?;
    let points = fp.reference_points();
    for e in graph.edges() {
        let (a, b) = endpoints(&points, e)?;
        let (a, b) = (fp.outline.clamp(a), fp.outline.clamp(b));
        let lo = Point::new(a.x.min(b.x), a.y.min(b.y));
        let hi = Point::new(a.x.max(b.x), a.y.max(b.y));
        grid.deposit(lo, hi, edge_deposit(e, a, b));
    }
    let overflow = grid.overflow();
    Ok((grid, overflow))
}

/// Demand at the given quantile, for use as a per-bin capacity. Falls back
/// to the largest demand, then to 1, so the result is always positive.
pub fn auto_capacity(grid: &CongestionGrid, quantile: f64) -> f64 {
    let mut d = grid.demand.clone();
    d.sort_by(f64::total_cmp);
    let i = ((quantile.clamp(0.0, 1.0) * d.len() as f64).ceil() as usize).clamp(1, d.len()) - 1;
    [d[i], grid.max_demand(), 1.0]
        .into_iter()
        .find(|v| *v > 0.0)
        .unwrap_or(1.0)
}
