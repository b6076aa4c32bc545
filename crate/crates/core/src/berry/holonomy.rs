use alloc::format;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use super::{BundleOptions, EigenBundle};
use crate::error::{Error, Result};
use crate::model::{evaluate_hamiltonian, HamiltonianFamily};
use crate::numeric::{hermitian_eigensystem_with, overlap_unchecked, CompensatedSum, C64};

const TWO_PI: f64 = 2.0 * core::f64::consts::PI;

/// `-arg` of a product of link overlaps, accumulated as a product of unit
/// phases to keep the result in `(-pi, pi]`.
fn holonomy<'a>(links: impl Iterator<Item = (&'a [C64], &'a [C64])>) -> f64 {
    let mut u = C64::new(1.0, 0.0);
    for (a, b) in links {
        let o = overlap_unchecked(a, b);
        u *= o / o.norm();
    }
    -u.arg()
}

fn adjacent(bundle: &EigenBundle, a: [usize; 3], b: [usize; 3]) -> bool {
    let shape = bundle.grid.shape();
    let periodic = bundle.grid.periodic();
    let mut moved = 0;
    for axis in 0..3 {
        if a[axis] == b[axis] {
            continue;
        }
        let d = a[axis].abs_diff(b[axis]);
        let wraps = periodic[axis] && d == shape[axis] - 1;
        if d != 1 && !wraps {
            return false;
        }
        moved += 1;
    }
    moved == 1
}

/// Holonomy of band `n` around a closed polyline of neighbouring nodes at
/// time sample `tau`. The loop closes from the last point back to the first
/// (a repeated endpoint is allowed). Result in `(-pi, pi]`.
pub fn wilson_loop_phase(bundle: &EigenBundle, points: &[[usize; 3]], tau: usize) -> Result<f64> {
    let grid = &bundle.grid;
    let shape = grid.shape();
    if tau >= grid.nt() {
        return Err(Error::InvalidArgument(format!(
            "time sample {tau} out of range"
        )));
    }
    let mut pts: Vec<[usize; 3]> = points.to_vec();
    if pts.len() > 1 && pts.first() == pts.last() {
        pts.pop();
    }
    if pts.len() < 2 {
        return Err(Error::InvalidArgument(
            "a loop needs at least two distinct points".into(),
        ));
    }
    let mut idx = Vec::with_capacity(pts.len());
    for (n, p) in pts.iter().enumerate() {
        if (0..3).any(|a| p[a] >= shape[a]) {
            return Err(Error::InvalidArgument(format!(
                "loop point {n} lies outside the grid"
            )));
        }
        let q = grid.index(p[0], p[1], p[2], tau);
        if !bundle.is_valid(q) {
            return Err(Error::DegeneratePointOnLoop(n));
        }
        idx.push(q);
    }
    for n in 0..pts.len() {
        let next = (n + 1) % pts.len();
        if !adjacent(bundle, pts[n], pts[next]) {
            return Err(Error::NonAdjacentLoopPoints { index: n, next });
        }
    }
    let links = (0..idx.len()).map(|n| {
        (
            bundle.vector(idx[n]),
            bundle.vector(idx[(n + 1) % idx.len()]),
        )
    });
    Ok(holonomy(links))
}

/// Holonomy of band `band` along arbitrary parameter points at time `t`,
/// closing from the last point to the first.
pub fn wilson_loop_phase_points(
    family: &dyn HamiltonianFamily,
    band: usize,
    points: &[[f64; 3]],
    t: f64,
    options: &BundleOptions,
) -> Result<f64> {
    let dim = family.dim();
    if band >= dim {
        return Err(Error::BandOutOfRange { band, dim });
    }
    if points.len() < 2 {
        return Err(Error::InvalidArgument(
            "a loop needs at least two points".into(),
        ));
    }
    let solver = options.solver();
    let mut vectors = Vec::with_capacity(points.len());
    let mut gaps = Vec::with_capacity(points.len());
    let mut scale = 0.0f64;
    for &r in points {
        let pairs = hermitian_eigensystem_with(&evaluate_hamiltonian(family, r, t)?, &solver)?;
        scale = pairs.iter().fold(scale, |m, e| m.max(e.value.abs()));
        let mut gap = f64::INFINITY;
        if band > 0 {
            gap = pairs[band].value - pairs[band - 1].value;
        }
        if band + 1 < dim {
            gap = gap.min(pairs[band + 1].value - pairs[band].value);
        }
        gaps.push(gap);
        vectors.push(pairs[band].vector.clone());
    }
    let tol = options.gap_tol * if scale > 0.0 { scale } else { 1.0 };
    if let Some(n) = gaps.iter().position(|&g| g < tol) {
        return Err(Error::DegeneratePointOnLoop(n));
    }
    let n = vectors.len();
    Ok(holonomy((0..n).map(|j| {
        (vectors[j].as_slice(), vectors[(j + 1) % n].as_slice())
    })))
}

/// Lattice field strength on one grid plane.
#[derive(Debug, Clone)]
pub struct PlaquetteChern {
    /// Normal axis; the plane spans axes `normal + 1`, `normal + 2` (mod 3).
    pub normal: usize,
    /// Per-plaquette flux in `(-pi, pi]`, row-major over the two plane axes,
    /// lower-left corner index first.
    pub fluxes: Vec<f64>,
    pub cells: [usize; 2],
    /// `sum(fluxes) / 2 pi`.
    pub chern: f64,
}

impl PlaquetteChern {
    /// Distance of `chern` from the nearest integer.
    pub fn integer_error(&self) -> f64 {
        (self.chern - self.chern.round()).abs()
    }
}

/// Gauge-invariant plaquette fluxes `-arg(U_1 U_2 U_3 U_4)` on the plane
/// `R[normal] = plane` at time sample `tau`, counterclockwise about
/// `+e_normal`. Periodic in-plane axes include the wrap-around plaquettes,
/// so a full torus sums to an integer.
pub fn plaquette_chern(
    bundle: &EigenBundle,
    normal: usize,
    plane: usize,
    tau: usize,
) -> Result<PlaquetteChern> {
    let grid = &bundle.grid;
    if normal > 2 || plane >= grid.shape()[normal] || tau >= grid.nt() {
        return Err(Error::InvalidArgument(
            "plaquette plane out of range".into(),
        ));
    }
    let axes = [(normal + 1) % 3, (normal + 2) % 3];
    let shape = grid.shape();
    let periodic = grid.periodic();
    let cells: [usize; 2] = core::array::from_fn(|s| {
        let n = shape[axes[s]];
        if periodic[axes[s]] {
            n
        } else {
            n.saturating_sub(1)
        }
    });
    let node = |u: usize, w: usize| {
        let mut p = [0; 3];
        p[normal] = plane;
        p[axes[0]] = u % shape[axes[0]];
        p[axes[1]] = w % shape[axes[1]];
        grid.index(p[0], p[1], p[2], tau)
    };
    for u in 0..shape[axes[0]] {
        for w in 0..shape[axes[1]] {
            let p = node(u, w);
            if !bundle.is_valid(p) {
                return Err(Error::SurfaceTouchesDegeneracy(p));
            }
        }
    }
    let mut fluxes = Vec::with_capacity(cells[0] * cells[1]);
    for u in 0..cells[0] {
        for w in 0..cells[1] {
            let corners = [
                node(u, w),
                node(u + 1, w),
                node(u + 1, w + 1),
                node(u, w + 1),
            ];
            let f = holonomy((0..4).map(|c| {
                (
                    bundle.vector(corners[c]),
                    bundle.vector(corners[(c + 1) % 4]),
                )
            }));
            fluxes.push(f);
        }
    }
    let mut sum = CompensatedSum::new();
    for &f in &fluxes {
        sum.add(f);
    }
    Ok(PlaquetteChern {
        normal,
        fluxes,
        cells,
        chern: sum.value() / TWO_PI,
    })
}
