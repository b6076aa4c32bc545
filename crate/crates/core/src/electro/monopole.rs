use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use super::velocity_field;
use crate::berry::{magnetic_bilinear_at, magnetic_curvature, potentials_eigenstate, EigenBundle};
use crate::error::{Error, Result};
use crate::grid::{
    curl_field, gradient_field, line_integral, surface_flux, BoxSurface, Rectangle, Surface,
    VectorField, TIME_AXIS,
};
use crate::model::HamiltonianFamily;

const TWO_PI: f64 = 2.0 * core::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct MonopoleCharge {
    /// `flux / 2 pi`.
    pub charge: f64,
    pub flux: f64,
    /// Distance of `charge` from the nearest integer.
    pub quantization_error: f64,
}

/// Outward flux of `B_n` through a closed box at time sample `tau`, in units
/// of `2 pi`. `B_n` is evaluated only on the surface, from projected
/// eigenvector differences.
pub fn monopole_charge(
    bundle: &EigenBundle,
    surface: &BoxSurface,
    tau: usize,
) -> Result<MonopoleCharge> {
    let closed = Surface::Closed(*surface);
    let nodes = closed.nodes(&bundle.grid, tau)?;
    let b = magnetic_bilinear_at(bundle, &nodes);
    if let Some(&p) = nodes.iter().find(|&&p| !b.valid[p]) {
        return Err(Error::SurfaceTouchesDegeneracy(p));
    }
    let flux = surface_flux(&b, &closed, tau)?;
    let charge = flux / TWO_PI;
    Ok(MonopoleCharge {
        charge,
        flux,
        quantization_error: (charge - charge.round()).abs(),
    })
}

/// A connected cluster of degenerate nodes and the charge it carries.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct MonopoleSite {
    /// Mean coordinate of the cluster's nodes.
    pub center: [f64; 3],
    pub nodes: usize,
    /// Enclosing box: the cluster's bounding box grown by the margin.
    pub bounds: BoxSurface,
    /// `None` when the box is flat or its surface touches a degeneracy.
    pub charge: Option<MonopoleCharge>,
}

/// Groups degenerate nodes at time sample `tau` into face-connected clusters
/// and measures the flux around each through a box `margin` nodes wider
/// than the cluster (clipped to the grid).
pub fn find_monopoles(
    bundle: &EigenBundle,
    tau: usize,
    margin: usize,
) -> Result<Vec<MonopoleSite>> {
    let grid = bundle.grid;
    if tau >= grid.nt() {
        return Err(Error::InvalidArgument(alloc::format!(
            "time sample {tau} out of range"
        )));
    }
    let shape = grid.shape();
    let mut seen = vec![false; grid.spatial_len()];
    let spatial = |i: usize, j: usize, k: usize| (i * shape[1] + j) * shape[2] + k;
    let mut sites = Vec::new();
    for i in 0..shape[0] {
        for j in 0..shape[1] {
            for k in 0..shape[2] {
                let s = spatial(i, j, k);
                if seen[s] || !bundle.degenerate[grid.index(i, j, k, tau)] {
                    continue;
                }
                seen[s] = true;
                let mut queue = VecDeque::from([[i, j, k]]);
                let mut lo = [i, j, k];
                let mut hi = [i, j, k];
                let mut sum = [0.0; 3];
                let mut count = 0usize;
                while let Some(c) = queue.pop_front() {
                    count += 1;
                    let r = grid.coord(c[0], c[1], c[2]);
                    for a in 0..3 {
                        sum[a] += r[a];
                        lo[a] = lo[a].min(c[a]);
                        hi[a] = hi[a].max(c[a]);
                    }
                    let p = grid.index(c[0], c[1], c[2], tau);
                    for axis in 0..3 {
                        for delta in [-1isize, 1] {
                            let Some(q) = grid.neighbor(p, axis, delta) else {
                                continue;
                            };
                            let (qi, qj, qk, _) = grid.unravel(q);
                            let sq = spatial(qi, qj, qk);
                            if !seen[sq] && bundle.degenerate[q] {
                                seen[sq] = true;
                                queue.push_back([qi, qj, qk]);
                            }
                        }
                    }
                }
                let blo: [usize; 3] = core::array::from_fn(|a| lo[a].saturating_sub(margin));
                let bhi: [usize; 3] = core::array::from_fn(|a| (hi[a] + margin).min(shape[a] - 1));
                let bounds = BoxSurface::from_indices(&grid, blo, bhi);
                let charge = monopole_charge(bundle, &bounds, tau).ok();
                sites.push(MonopoleSite {
                    center: sum.map(|x| x / count as f64),
                    nodes: count,
                    bounds,
                    charge,
                });
            }
        }
    }
    Ok(sites)
}

/// Magnetic current through an open rectangle, per time sample.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct MagneticCurrent {
    /// `circulation of v - d_t (flux of B_n)`.
    pub loop_route: Vec<f64>,
    /// Flux of `J_m = curl grad Phi_n`.
    pub flux_route: Vec<f64>,
    pub area: f64,
}

impl MagneticCurrent {
    /// `max_tau |loop - flux| / area`.
    pub fn residual(&self) -> f64 {
        self.loop_route
            .iter()
            .zip(&self.flux_route)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
            / self.area
    }
}

pub(crate) fn current_through(
    v: &VectorField,
    b: &VectorField,
    jm: &VectorField,
    rect: &Rectangle,
) -> Result<MagneticCurrent> {
    let grid = v.grid;
    grid.check_time(3)?;
    let rim = rect.boundary(&grid)?;
    let surface = Surface::Open(*rect);
    let nt = grid.nt();
    let mut circulation = Vec::with_capacity(nt);
    let mut flux_b = Vec::with_capacity(nt);
    let mut flux_route = Vec::with_capacity(nt);
    for tau in 0..nt {
        circulation.push(line_integral(v, &rim, tau)?);
        flux_b.push(surface_flux(b, &surface, tau)?);
        flux_route.push(surface_flux(jm, &surface, tau)?);
    }
    // node `tau` of the spatial origin has linear index `tau`
    let loop_route = (0..nt)
        .map(|tau| circulation[tau] - grid.stencil(tau, TIME_AXIS).apply(|q| flux_b[q]))
        .collect();
    let sides = [rect.hi[0] - rect.lo[0], rect.hi[1] - rect.lo[1]];
    Ok(MagneticCurrent {
        loop_route,
        flux_route,
        area: sides[0] * sides[1],
    })
}

/// Magnetic current through `rect` computed around its rim and across its
/// surface.
pub fn magnetic_current_surface(
    family: &dyn HamiltonianFamily,
    bundle: &EigenBundle,
    hbar: f64,
    rect: &Rectangle,
) -> Result<MagneticCurrent> {
    bundle.grid.check_time(3)?;
    let eigen = potentials_eigenstate(bundle);
    let jm = curl_field(&gradient_field(&eigen.phi));
    let b = magnetic_curvature(&eigen);
    let v = velocity_field(family, bundle, hbar)?;
    current_through(&v, &b, &jm, rect)
}
