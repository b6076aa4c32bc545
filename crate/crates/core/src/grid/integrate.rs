use alloc::format;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use super::{ParameterGrid, VectorField};
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

const SNAP_TOL: f64 = 1e-9;

fn snap(grid: &ParameterGrid, axis: usize, x: f64) -> Result<usize> {
    let u = (x - grid.origin()[axis]) / grid.spacing()[axis];
    let r = u.round();
    if !u.is_finite() || (u - r).abs() > SNAP_TOL || r < 0.0 || r >= grid.shape()[axis] as f64 {
        return Err(Error::SurfaceOffGrid(format!(
            "coordinate {x} is not a node on axis {axis}"
        )));
    }
    Ok(r as usize)
}

/// Closed axis-aligned box with outward normals; corners are node coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoxSurface {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

/// Open axis-aligned rectangle in the plane `R[normal] = plane`. The in-plane
/// axes are `normal + 1` and `normal + 2` (mod 3); the surface normal is
/// `+e_normal` when `positive`, and the rim runs counterclockwise around it.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Rectangle {
    pub normal: usize,
    pub plane: f64,
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    pub positive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Surface {
    Closed(BoxSurface),
    Open(Rectangle),
}

/// One flat piece: normal axis, plane index, in-plane axes and index ranges.
struct Face {
    normal: usize,
    plane: usize,
    sign: f64,
    axes: [usize; 2],
    lo: [usize; 2],
    hi: [usize; 2],
}

impl BoxSurface {
    /// Index bounds `(lo, hi)`; every axis must have `lo < hi`.
    pub fn resolve(&self, grid: &ParameterGrid) -> Result<([usize; 3], [usize; 3])> {
        let mut lo = [0; 3];
        let mut hi = [0; 3];
        for a in 0..3 {
            lo[a] = snap(grid, a, self.lo[a])?;
            hi[a] = snap(grid, a, self.hi[a])?;
            if lo[a] >= hi[a] {
                return Err(Error::SurfaceOffGrid(format!("box is flat along axis {a}")));
            }
        }
        Ok((lo, hi))
    }

    /// Box spanning node indices `lo..=hi`.
    pub fn from_indices(grid: &ParameterGrid, lo: [usize; 3], hi: [usize; 3]) -> Self {
        let a = grid.coord(lo[0], lo[1], lo[2]);
        let b = grid.coord(hi[0], hi[1], hi[2]);
        Self { lo: a, hi: b }
    }

    fn faces(&self, grid: &ParameterGrid) -> Result<Vec<Face>> {
        let (lo, hi) = self.resolve(grid)?;
        let mut faces = Vec::with_capacity(6);
        for n in 0..3 {
            let axes = [(n + 1) % 3, (n + 2) % 3];
            for (plane, sign) in [(lo[n], -1.0), (hi[n], 1.0)] {
                faces.push(Face {
                    normal: n,
                    plane,
                    sign,
                    axes,
                    lo: [lo[axes[0]], lo[axes[1]]],
                    hi: [hi[axes[0]], hi[axes[1]]],
                });
            }
        }
        Ok(faces)
    }
}

impl Rectangle {
    fn face(&self, grid: &ParameterGrid) -> Result<Face> {
        if self.normal > 2 {
            return Err(Error::InvalidArgument(format!(
                "normal axis {} out of range",
                self.normal
            )));
        }
        let axes = [(self.normal + 1) % 3, (self.normal + 2) % 3];
        let plane = snap(grid, self.normal, self.plane)?;
        let mut lo = [0; 2];
        let mut hi = [0; 2];
        for s in 0..2 {
            lo[s] = snap(grid, axes[s], self.lo[s])?;
            hi[s] = snap(grid, axes[s], self.hi[s])?;
            if lo[s] >= hi[s] {
                return Err(Error::SurfaceOffGrid(format!(
                    "rectangle is flat along axis {}",
                    axes[s]
                )));
            }
        }
        let sign = if self.positive { 1.0 } else { -1.0 };
        Ok(Face {
            normal: self.normal,
            plane,
            sign,
            axes,
            lo,
            hi,
        })
    }

    /// Same rectangle with the opposite normal and rim direction.
    pub fn reversed(self) -> Self {
        Self {
            positive: !self.positive,
            ..self
        }
    }

    /// Closed rim `[i, j, k]` nodes, first point repeated at the end.
    pub fn boundary(&self, grid: &ParameterGrid) -> Result<Vec<[usize; 3]>> {
        let f = self.face(grid)?;
        let node = |u: usize, w: usize| {
            let mut p = [0; 3];
            p[f.normal] = f.plane;
            p[f.axes[0]] = u;
            p[f.axes[1]] = w;
            p
        };
        let mut rim = Vec::new();
        for u in f.lo[0]..f.hi[0] {
            rim.push(node(u, f.lo[1]));
        }
        for w in f.lo[1]..f.hi[1] {
            rim.push(node(f.hi[0], w));
        }
        for u in (f.lo[0] + 1..=f.hi[0]).rev() {
            rim.push(node(u, f.hi[1]));
        }
        for w in (f.lo[1] + 1..=f.hi[1]).rev() {
            rim.push(node(f.lo[0], w));
        }
        rim.push(rim[0]);
        if !self.positive {
            rim.reverse();
        }
        Ok(rim)
    }
}

impl Surface {
    fn faces(&self, grid: &ParameterGrid) -> Result<Vec<Face>> {
        match self {
            Surface::Closed(b) => b.faces(grid),
            Surface::Open(r) => Ok(alloc::vec![r.face(grid)?]),
        }
    }

    /// Linear indices (at time sample `tau`) of every node on the surface,
    /// in traversal order; shared edges repeat.
    pub fn nodes(&self, grid: &ParameterGrid, tau: usize) -> Result<Vec<usize>> {
        let mut out = Vec::new();
        for f in self.faces(grid)? {
            for u in f.lo[0]..=f.hi[0] {
                for w in f.lo[1]..=f.hi[1] {
                    out.push(face_node(grid, &f, u, w, tau));
                }
            }
        }
        Ok(out)
    }
}

fn face_node(grid: &ParameterGrid, f: &Face, u: usize, w: usize, tau: usize) -> usize {
    let mut p = [0; 3];
    p[f.normal] = f.plane;
    p[f.axes[0]] = u;
    p[f.axes[1]] = w;
    grid.index(p[0], p[1], p[2], tau)
}

/// `int F . dS` at time sample `tau`: per cell, the mean normal component of
/// the four corner nodes times the cell area, summed in fixed order.
pub fn surface_flux(field: &VectorField, surface: &Surface, tau: usize) -> Result<f64> {
    let grid = &field.grid;
    if tau >= grid.nt() {
        return Err(Error::InvalidArgument(format!(
            "time sample {tau} out of range"
        )));
    }
    let faces = surface.faces(grid)?;
    for f in &faces {
        for u in f.lo[0]..=f.hi[0] {
            for w in f.lo[1]..=f.hi[1] {
                let p = face_node(grid, f, u, w, tau);
                if !field.valid[p] {
                    return Err(Error::MaskedSurfacePoint(p));
                }
            }
        }
    }
    let h = grid.spacing();
    let mut sum = CompensatedSum::new();
    for f in &faces {
        let area = h[f.axes[0]] * h[f.axes[1]];
        let fnorm = |u, w| field.values[face_node(grid, f, u, w, tau)][f.normal];
        for u in f.lo[0]..f.hi[0] {
            for w in f.lo[1]..f.hi[1] {
                let avg =
                    0.25 * (fnorm(u, w) + fnorm(u + 1, w) + fnorm(u, w + 1) + fnorm(u + 1, w + 1));
                sum.add(f.sign * area * avg);
            }
        }
    }
    Ok(sum.value())
}

/// Trapezoid `int F . dR` along a polyline of neighbouring nodes at time
/// sample `tau`. Steps may wrap around periodic axes.
pub fn line_integral(field: &VectorField, points: &[[usize; 3]], tau: usize) -> Result<f64> {
    let grid = &field.grid;
    let shape = grid.shape();
    if tau >= grid.nt() {
        return Err(Error::InvalidArgument(format!(
            "time sample {tau} out of range"
        )));
    }
    for (n, p) in points.iter().enumerate() {
        if (0..3).any(|a| p[a] >= shape[a]) {
            return Err(Error::InvalidArgument(format!(
                "loop point {n} lies outside the grid"
            )));
        }
        if !field.valid[grid.index(p[0], p[1], p[2], tau)] {
            return Err(Error::MaskedLoopPoint(n));
        }
    }
    let h = grid.spacing();
    let periodic = grid.periodic();
    let mut sum = CompensatedSum::new();
    for (n, pair) in points.windows(2).enumerate() {
        let (a, b) = (pair[0], pair[1]);
        let mut step = None;
        for axis in 0..3 {
            if a[axis] == b[axis] {
                continue;
            }
            let d = b[axis] as isize - a[axis] as isize;
            let len = shape[axis] as isize;
            let dir = match d {
                1 | -1 => d,
                _ if periodic[axis] && d == 1 - len => 1,
                _ if periodic[axis] && d == len - 1 => -1,
                _ => 0,
            };
            if dir == 0 || step.is_some() {
                step = None;
                break;
            }
            step = Some((axis, dir as f64));
        }
        let (axis, dir) = step.ok_or(Error::NonAdjacentLoopPoints {
            index: n,
            next: n + 1,
        })?;
        let fa = field.values[grid.index(a[0], a[1], a[2], tau)][axis];
        let fb = field.values[grid.index(b[0], b[1], b[2], tau)][axis];
        sum.add(0.5 * (fa + fb) * dir * h[axis]);
    }
    Ok(sum.value())
}
