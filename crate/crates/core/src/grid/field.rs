use alloc::vec;
use alloc::vec::Vec;

use super::ParameterGrid;
use crate::error::{Error, Result};

/// Real scalar per node. `valid[p] == false` marks an excluded node whose
/// value is 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: ParameterGrid,
    pub values: Vec<f64>,
    pub valid: Vec<bool>,
    pub units: &'static str,
}

/// Real 3-vector per node, same masking rules as [`ScalarField`].
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub grid: ParameterGrid,
    pub values: Vec<[f64; 3]>,
    pub valid: Vec<bool>,
    pub units: &'static str,
}

fn check_grid(a: &ParameterGrid, b: &ParameterGrid) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

impl ScalarField {
    pub fn zeros(grid: ParameterGrid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
            valid: vec![true; grid.len()],
            units: "",
        }
    }

    /// Samples `f(R, t)` at every node.
    pub fn from_fn(grid: ParameterGrid, f: impl Fn([f64; 3], f64) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|p| {
                let (r, t) = grid.point(p);
                f(r, t)
            })
            .collect();
        Self {
            grid,
            values,
            valid: vec![true; grid.len()],
            units: "",
        }
    }

    pub fn with_units(mut self, units: &'static str) -> Self {
        self.units = units;
        self
    }

    /// Applies `valid` (intersected with the current mask) and zeroes
    /// excluded nodes.
    pub fn masked(mut self, valid: &[bool]) -> Self {
        for (p, v) in self.valid.iter_mut().enumerate() {
            *v &= valid[p];
            if !*v {
                self.values[p] = 0.0;
            }
        }
        self
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        let values = self
            .values
            .iter()
            .zip(&self.valid)
            .map(|(&x, &ok)| if ok { f(x) } else { 0.0 })
            .collect();
        Self {
            values,
            valid: self.valid.clone(),
            ..*self
        }
    }

    /// Pointwise combination on the intersection of both masks.
    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        check_grid(&self.grid, &other.grid)?;
        let mut out = Self::zeros(self.grid);
        out.units = self.units;
        for p in 0..self.values.len() {
            out.valid[p] = self.valid[p] && other.valid[p];
            if out.valid[p] {
                out.values[p] = f(self.values[p], other.values[p]);
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|x| s * x)
    }

    /// Largest `|value|` over valid nodes (0 when none are valid).
    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.valid)
            .filter(|(_, &ok)| ok)
            .fold(0.0, |m, (x, _)| m.max(x.abs()))
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    pub fn get(&self, i: usize, j: usize, k: usize, tau: usize) -> f64 {
        self.values[self.grid.index(i, j, k, tau)]
    }
}

impl VectorField {
    pub fn zeros(grid: ParameterGrid) -> Self {
        Self {
            grid,
            values: vec![[0.0; 3]; grid.len()],
            valid: vec![true; grid.len()],
            units: "",
        }
    }

    pub fn from_fn(grid: ParameterGrid, f: impl Fn([f64; 3], f64) -> [f64; 3]) -> Self {
        let values = (0..grid.len())
            .map(|p| {
                let (r, t) = grid.point(p);
                f(r, t)
            })
            .collect();
        Self {
            grid,
            values,
            valid: vec![true; grid.len()],
            units: "",
        }
    }

    /// Stacks three scalar components; valid where all three are.
    pub fn from_components(c: [&ScalarField; 3]) -> Result<Self> {
        check_grid(&c[0].grid, &c[1].grid)?;
        check_grid(&c[0].grid, &c[2].grid)?;
        let grid = c[0].grid;
        let mut out = Self::zeros(grid);
        out.units = c[0].units;
        for p in 0..grid.len() {
            out.valid[p] = c.iter().all(|s| s.valid[p]);
            if out.valid[p] {
                out.values[p] = [c[0].values[p], c[1].values[p], c[2].values[p]];
            }
        }
        Ok(out)
    }

    pub fn component(&self, axis: usize) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|v| v[axis]).collect(),
            valid: self.valid.clone(),
            units: self.units,
        }
    }

    pub fn with_units(mut self, units: &'static str) -> Self {
        self.units = units;
        self
    }

    pub fn masked(mut self, valid: &[bool]) -> Self {
        for (p, v) in self.valid.iter_mut().enumerate() {
            *v &= valid[p];
            if !*v {
                self.values[p] = [0.0; 3];
            }
        }
        self
    }

    pub fn map(&self, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let values = self
            .values
            .iter()
            .zip(&self.valid)
            .map(|(&x, &ok)| if ok { f(x) } else { [0.0; 3] })
            .collect();
        Self {
            values,
            valid: self.valid.clone(),
            ..*self
        }
    }

    pub fn zip_with(
        &self,
        other: &Self,
        f: impl Fn([f64; 3], [f64; 3]) -> [f64; 3],
    ) -> Result<Self> {
        check_grid(&self.grid, &other.grid)?;
        let mut out = Self::zeros(self.grid);
        out.units = self.units;
        for p in 0..self.values.len() {
            out.valid[p] = self.valid[p] && other.valid[p];
            if out.valid[p] {
                out.values[p] = f(self.values[p], other.values[p]);
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| [a[0] - b[0], a[1] - b[1], a[2] - b[2]])
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| [a[0] + b[0], a[1] + b[1], a[2] + b[2]])
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|x| x.map(|c| s * c))
    }

    /// Largest component magnitude over valid nodes.
    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.valid)
            .filter(|(_, &ok)| ok)
            .fold(0.0, |m, (x, _)| {
                m.max(x[0].abs()).max(x[1].abs()).max(x[2].abs())
            })
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    pub fn get(&self, i: usize, j: usize, k: usize, tau: usize) -> [f64; 3] {
        self.values[self.grid.index(i, j, k, tau)]
    }
}
