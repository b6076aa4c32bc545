//! Uniform `(R, t)` grids, node-collocated fields and second-order discrete
//! vector calculus.
//!
//! Nodes are addressed by `(i, j, k, tau)` and stored with `i` slowest and
//! `tau` fastest. Every derivative is a three-point stencil; a result is valid
//! only where every node of its stencil is valid.

mod field;
mod integrate;
mod ops;

pub use field::{ScalarField, VectorField};
pub use integrate::{line_integral, surface_flux, BoxSurface, Rectangle, Surface};
pub use ops::{
    cumulative_time_integral, cumulative_time_integral_vector, curl_field, divergence_field,
    gradient_field, partial_derivative, time_derivative_field, time_derivative_vector,
};

use alloc::format;

use crate::error::{Error, Result};

/// Index of the time axis in [`ParameterGrid::stencil`].
pub const TIME_AXIS: usize = 3;

/// Uniform time samples `t0 + tau * dt`, `tau < nt`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TimeAxis {
    pub t0: f64,
    pub dt: f64,
    pub nt: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParameterGrid {
    origin: [f64; 3],
    spacing: [f64; 3],
    shape: [usize; 3],
    periodic: [bool; 3],
    time: Option<TimeAxis>,
}

/// Three-node derivative stencil; weights already include `1 / (2h)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stencil {
    pub nodes: [usize; 3],
    pub weights: [f64; 3],
}

impl ParameterGrid {
    /// Axes of length 1 are trivial (derivatives along them vanish); any
    /// other axis needs at least 3 points.
    pub fn new(
        origin: [f64; 3],
        spacing: [f64; 3],
        shape: [usize; 3],
        periodic: [bool; 3],
        time: Option<TimeAxis>,
    ) -> Result<Self> {
        if origin.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        for axis in 0..3 {
            let h = spacing[axis];
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::InvalidGrid(format!(
                    "spacing[{axis}] must be positive, got {h}"
                )));
            }
            let n = shape[axis];
            if n == 0 || n == 2 {
                return Err(Error::AxisTooShort {
                    axis,
                    len: n,
                    min: 3,
                });
            }
            if periodic[axis] && n == 1 {
                return Err(Error::AxisTooShort {
                    axis,
                    len: 1,
                    min: 3,
                });
            }
        }
        if let Some(ax) = time {
            if !(ax.t0.is_finite() && ax.dt.is_finite() && ax.dt > 0.0) {
                return Err(Error::InvalidGrid(
                    "time axis needs finite t0 and dt > 0".into(),
                ));
            }
            if ax.nt == 0 {
                return Err(Error::AxisTooShort {
                    axis: TIME_AXIS,
                    len: 0,
                    min: 1,
                });
            }
        }
        Ok(Self {
            origin,
            spacing,
            shape,
            periodic,
            time,
        })
    }

    /// Non-periodic grid without a time axis.
    pub fn spatial(origin: [f64; 3], spacing: [f64; 3], shape: [usize; 3]) -> Result<Self> {
        Self::new(origin, spacing, shape, [false; 3], None)
    }

    /// Same spatial grid with a different time axis.
    pub fn with_time(self, time: Option<TimeAxis>) -> Result<Self> {
        Self::new(self.origin, self.spacing, self.shape, self.periodic, time)
    }

    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    pub fn periodic(&self) -> [bool; 3] {
        self.periodic
    }

    pub fn time_axis(&self) -> Option<TimeAxis> {
        self.time
    }

    /// Number of time samples (1 without a time axis).
    pub fn nt(&self) -> usize {
        self.time.map_or(1, |t| t.nt)
    }

    pub fn spatial_len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn len(&self) -> usize {
        self.spatial_len() * self.nt()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize, k: usize, tau: usize) -> usize {
        debug_assert!(
            i < self.shape[0] && j < self.shape[1] && k < self.shape[2] && tau < self.nt()
        );
        ((i * self.shape[1] + j) * self.shape[2] + k) * self.nt() + tau
    }

    /// Inverse of [`index`](Self::index).
    pub fn unravel(&self, idx: usize) -> (usize, usize, usize, usize) {
        let nt = self.nt();
        let tau = idx % nt;
        let s = idx / nt;
        let k = s % self.shape[2];
        let s = s / self.shape[2];
        (s / self.shape[1], s % self.shape[1], k, tau)
    }

    pub fn coord(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        [
            self.origin[0] + i as f64 * self.spacing[0],
            self.origin[1] + j as f64 * self.spacing[1],
            self.origin[2] + k as f64 * self.spacing[2],
        ]
    }

    /// Time of sample `tau` (0 without a time axis).
    pub fn time(&self, tau: usize) -> f64 {
        self.time.map_or(0.0, |t| t.t0 + tau as f64 * t.dt)
    }

    /// `(R, t)` of a linear index.
    pub fn point(&self, idx: usize) -> ([f64; 3], f64) {
        let (i, j, k, tau) = self.unravel(idx);
        (self.coord(i, j, k), self.time(tau))
    }

    fn stride(&self, axis: usize) -> usize {
        let nt = self.nt();
        match axis {
            0 => self.shape[1] * self.shape[2] * nt,
            1 => self.shape[2] * nt,
            2 => nt,
            _ => 1,
        }
    }

    fn axis_len(&self, axis: usize) -> usize {
        if axis == TIME_AXIS {
            self.nt()
        } else {
            self.shape[axis]
        }
    }

    fn axis_step(&self, axis: usize) -> f64 {
        if axis == TIME_AXIS {
            self.time.map_or(1.0, |t| t.dt)
        } else {
            self.spacing[axis]
        }
    }

    fn axis_position(&self, idx: usize, axis: usize) -> usize {
        let (i, j, k, tau) = self.unravel(idx);
        [i, j, k, tau][axis]
    }

    /// Neighbour of `idx` shifted by `delta` along `axis`, wrapping on
    /// periodic axes; `None` when it falls off the grid.
    pub fn neighbor(&self, idx: usize, axis: usize, delta: isize) -> Option<usize> {
        let n = self.axis_len(axis) as isize;
        let p = self.axis_position(idx, axis) as isize;
        let mut q = p + delta;
        if axis < 3 && self.periodic[axis] {
            q = q.rem_euclid(n);
        } else if q < 0 || q >= n {
            return None;
        }
        let s = self.stride(axis) as isize;
        Some((idx as isize + (q - p) * s) as usize)
    }

    /// Second-order first-derivative stencil at `idx` along `axis`
    /// (`0..3` spatial, [`TIME_AXIS`] for time). Trivial axes yield a zero
    /// stencil on the node itself.
    pub fn stencil(&self, idx: usize, axis: usize) -> Stencil {
        let n = self.axis_len(axis);
        if n < 3 {
            return Stencil {
                nodes: [idx; 3],
                weights: [0.0; 3],
            };
        }
        let c = 0.5 / self.axis_step(axis);
        let s = self.stride(axis);
        let p = self.axis_position(idx, axis);
        let periodic = axis < 3 && self.periodic[axis];
        if periodic || (p > 0 && p + 1 < n) {
            let minus = self.neighbor(idx, axis, -1).expect("interior or periodic");
            let plus = self.neighbor(idx, axis, 1).expect("interior or periodic");
            Stencil {
                nodes: [minus, idx, plus],
                weights: [-c, 0.0, c],
            }
        } else if p == 0 {
            Stencil {
                nodes: [idx, idx + s, idx + 2 * s],
                weights: [-3.0 * c, 4.0 * c, -c],
            }
        } else {
            Stencil {
                nodes: [idx - 2 * s, idx - s, idx],
                weights: [c, -4.0 * c, 3.0 * c],
            }
        }
    }

    pub(crate) fn check_time(&self, min: usize) -> Result<TimeAxis> {
        let t = self.time.ok_or(Error::MissingTimeAxis)?;
        if t.nt < min {
            return Err(Error::AxisTooShort {
                axis: TIME_AXIS,
                len: t.nt,
                min,
            });
        }
        Ok(t)
    }
}

impl Stencil {
    pub fn apply(&self, f: impl Fn(usize) -> f64) -> f64 {
        self.weights[0] * f(self.nodes[0])
            + self.weights[1] * f(self.nodes[1])
            + self.weights[2] * f(self.nodes[2])
    }

    pub fn all_valid(&self, valid: &[bool]) -> bool {
        self.nodes.iter().all(|&n| valid[n])
    }
}
