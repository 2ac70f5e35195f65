//! Uniform 1-D grids and fields sampled on them.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

pub const MIN_POINTS: usize = 16;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("grid needs an even number of points >= {MIN_POINTS}, got {0}")]
    PointCount(usize),
    #[error("half-length must be positive and finite, got {0}")]
    HalfLength(f64),
    #[error("field has {got} values for a grid of {expected} points")]
    LengthMismatch { expected: usize, got: usize },
    #[error("profile file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Nodes `x_j = −L + jΔx`, `j = 0..N`, with `Δx = 2L/N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    half_length: f64,
    n_points: usize,
}

impl Grid {
    pub fn new(half_length: f64, n_points: usize) -> Result<Self, GridError> {
        if !(half_length > 0.0 && half_length.is_finite()) {
            return Err(GridError::HalfLength(half_length));
        }
        if n_points < MIN_POINTS || n_points % 2 != 0 {
            return Err(GridError::PointCount(n_points));
        }
        Ok(Self {
            half_length,
            n_points,
        })
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_length / self.n_points as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        -self.half_length + j as f64 * self.spacing()
    }

    pub fn positions(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(|j| self.x(j))
    }

    /// Same domain with twice as many points.
    pub fn refined(&self) -> Self {
        Self {
            half_length: self.half_length,
            n_points: 2 * self.n_points,
        }
    }
}

/// A profile `u_j` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.n_points() {
            return Err(GridError::LengthMismatch {
                expected: grid.n_points(),
                got: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.positions().map(f).collect();
        Self { grid, values }
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.n_points()],
        }
    }

    /// `1 / (1 + e^{(x − center)/width})`.
    pub fn mollified_step(grid: Grid, center: f64, width: f64) -> Self {
        Self::from_fn(grid, |x| logistic_step((x - center) / width))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Translates the profile `cells` nodes toward lower `x` (positive) or
    /// higher `x` (negative), filling vacated nodes with the pads.
    pub fn shift_cells(&mut self, cells: isize, left_pad: f64, right_pad: f64) {
        let n = self.values.len() as isize;
        let old = self.values.clone();
        for (j, v) in self.values.iter_mut().enumerate() {
            let src = j as isize + cells;
            *v = if src < 0 {
                left_pad
            } else if src >= n {
                right_pad
            } else {
                old[src as usize]
            };
        }
    }

    /// CSV with header `x,u`, floats in shortest round-trip form.
    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(self.values.len() * 40);
        s.push_str("x,u\n");
        for (x, u) in self.grid.positions().zip(&self.values) {
            let _ = writeln!(s, "{},{}", format_float(x), format_float(*u));
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), GridError> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    /// Reads an `x,u` CSV and recovers the grid from the first node and spacing.
    pub fn from_csv_str(text: &str) -> Result<Self, GridError> {
        let mut xs = Vec::new();
        let mut us = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (lineno == 0 && line.starts_with('x')) {
                continue;
            }
            let (a, b) = line
                .split_once(',')
                .ok_or_else(|| GridError::Format(format!("line {}: expected `x,u`", lineno + 1)))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| GridError::Format(format!("line {}: `{s}` is not a number", lineno + 1)))
            };
            xs.push(parse(a)?);
            us.push(parse(b)?);
        }
        if xs.len() < 2 {
            return Err(GridError::Format("need at least two rows".into()));
        }
        let half_length = -xs[0];
        let grid = Grid::new(half_length, xs.len())?;
        for (j, &x) in xs.iter().enumerate() {
            if (x - grid.x(j)).abs() > 1e-9 * grid.spacing().max(half_length) {
                return Err(GridError::Format(format!(
                    "row {j}: x = {x} is not on the uniform grid starting at {}",
                    xs[0]
                )));
            }
        }
        Field::new(grid, us)
    }

    pub fn read_csv(path: &Path) -> Result<Self, GridError> {
        Self::from_csv_str(&std::fs::read_to_string(path)?)
    }
}

/// Shortest round-trip decimal form, with an exponent outside `[1e-5, 1e16)`.
pub fn format_float(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || !a.is_finite() || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// `1 / (1 + e^s)`, stable for large `|s|`.
pub fn logistic_step(s: f64) -> f64 {
    if s > 0.0 {
        let e = (-s).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + s.exp())
    }
}
