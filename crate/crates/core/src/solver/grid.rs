// SPDX-License-Identifier: Apache-2.0

use serde::Serialize;

/// Uniform wealth grid on `[0, max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WealthGrid {
    max: f64,
    points: usize,
    step: f64,
}

impl WealthGrid {
    pub fn new(max: f64, points: usize) -> Self {
        assert!(points >= 2 && max > 0.0);
        WealthGrid {
            max,
            points,
            step: max / (points - 1) as f64,
        }
    }

    pub fn len(&self) -> usize {
        self.points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.points {
            self.max
        } else {
            i as f64 * self.step
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.point(i)).collect()
    }

    /// Cell index and fractional offset of `x`, or `None` when `x` is outside the grid.
    fn locate(&self, x: f64) -> Option<(usize, f64)> {
        if !(x > 0.0) || x >= self.max {
            return None;
        }
        let s = x / self.step;
        let i = (s as usize).min(self.points - 2);
        Some((i, (s - i as f64).clamp(0.0, 1.0)))
    }

    /// Piecewise-linear interpolation, clamped to the end values outside `[0, max]`.
    ///
    /// The result never leaves the range of the two bracketing values, so
    /// monotone data interpolates to a monotone function.
    pub fn interpolate(&self, values: &[f64], x: f64) -> f64 {
        debug_assert_eq!(values.len(), self.points);
        if x >= self.max {
            return values[self.points - 1];
        }
        match self.locate(x) {
            None => values[0],
            Some((i, frac)) => {
                let (a, b) = (values[i], values[i + 1]);
                let v = a + (b - a) * frac;
                v.clamp(a.min(b), a.max(b))
            }
        }
    }

    /// Splits `mass` between the two grid points bracketing `x`.
    pub fn deposit(&self, into: &mut [f64], x: f64, mass: f64) {
        if x >= self.max {
            into[self.points - 1] += mass;
            return;
        }
        match self.locate(x) {
            None => into[0] += mass,
            Some((i, frac)) => {
                let upper = mass * frac;
                into[i] += mass - upper;
                into[i + 1] += upper;
            }
        }
    }
}

/// Row-major `rows x cols` table of `f64`, indexed `(t, wealth index)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Table {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Table {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged table");
        Table {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.cols.max(1)).take(self.rows)
    }
}
