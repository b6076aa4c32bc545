use alloc::vec;
use alloc::vec::Vec;

use super::EigenBundle;
use crate::error::Result;
use crate::grid::{
    cumulative_time_integral, cumulative_time_integral_vector, gradient_field, ScalarField,
    VectorField, TIME_AXIS,
};
use crate::numeric::overlap_unchecked;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum PotentialSource {
    Eigenstate,
    FullWavefunction,
}

#[derive(Debug, Clone)]
pub struct GaugePotential {
    pub a: VectorField,
    pub phi: ScalarField,
    pub source: PotentialSource,
    /// `d_t A` known in closed form, used when the grid has no time axis.
    pub static_dadt: Option<VectorField>,
}

#[derive(Debug, Clone)]
pub struct GeometricPhase {
    pub gamma: ScalarField,
}

/// `Im <n|d_axis n>` on every node, as the stencil-weighted sum of link
/// phases `arg <n_p|n_q>` taken in the pivot convention of `p`. A gauge
/// change shifts it by exactly the stencil derivative of the gauge function.
/// Invalid where the stencil touches a degenerate node.
fn link_phase_derivative(bundle: &EigenBundle, axis: usize) -> (Vec<f64>, Vec<bool>) {
    let grid = bundle.grid;
    let mut out = vec![0.0; grid.len()];
    let mut valid = vec![false; grid.len()];
    for p in 0..grid.len() {
        let s = grid.stencil(p, axis);
        if s.nodes.iter().any(|&q| bundle.degenerate[q]) {
            continue;
        }
        let n = bundle.vector(p);
        valid[p] = true;
        out[p] = s
            .nodes
            .iter()
            .zip(&s.weights)
            .filter(|&(&q, &w)| q != p && w != 0.0)
            .map(|(&q, &w)| {
                w * (bundle.continuation(p, q) * overlap_unchecked(n, bundle.vector(q))).arg()
            })
            .sum();
    }
    (out, valid)
}

/// `A = i<n|grad n>`, real by construction.
pub fn connection_eigenstate(bundle: &EigenBundle) -> VectorField {
    let grid = bundle.grid;
    let mut a = VectorField::zeros(grid).with_units("1/parameter");
    for axis in 0..3 {
        let (d, valid) = link_phase_derivative(bundle, axis);
        for p in 0..grid.len() {
            a.valid[p] &= valid[p];
            a.values[p][axis] = -d[p];
        }
    }
    a.masked(&bundle.valid())
}

/// `Phi = -i<n|d_t n>`; identically zero without a time axis.
pub fn scalar_potential_eigenstate(bundle: &EigenBundle) -> ScalarField {
    let grid = bundle.grid;
    let mut phi = ScalarField::zeros(grid).with_units("energy/hbar");
    if grid.nt() > 1 {
        let (d, valid) = link_phase_derivative(bundle, TIME_AXIS);
        phi.valid = valid;
        phi.values = d;
    }
    phi.masked(&bundle.valid())
}

pub fn potentials_eigenstate(bundle: &EigenBundle) -> GaugePotential {
    GaugePotential {
        a: connection_eigenstate(bundle),
        phi: scalar_potential_eigenstate(bundle),
        source: PotentialSource::Eigenstate,
        static_dadt: None,
    }
}

/// `gamma = -int_{t0}^t Phi dt'`; zero at the first sample and everywhere
/// on grids without a time axis.
pub fn geometric_phase(bundle: &EigenBundle) -> Result<GeometricPhase> {
    let phi = scalar_potential_eigenstate(bundle);
    let gamma = if bundle.grid.nt() >= 2 {
        cumulative_time_integral(&phi)?.scale(-1.0)
    } else {
        phi
    };
    Ok(GeometricPhase {
        gamma: gamma.with_units("rad"),
    })
}

/// Potentials of the full adiabatic state
/// `Psi = exp(i gamma) exp(-(i/hbar) int eps dt') |n>`:
/// `A_psi = -grad gamma + (1/hbar) int grad eps dt' + A_n`, `Phi_psi = -eps/hbar`.
///
/// Without a time axis the grid is read as the instant `t = 0`, where
/// `A_psi = A_n`; the linear-in-`t` term survives as `static_dadt`.
pub fn potentials_full_wavefunction(bundle: &EigenBundle, hbar: f64) -> Result<GaugePotential> {
    let a_n = connection_eigenstate(bundle);
    let grad_eps = gradient_field(&bundle.energies).scale(1.0 / hbar);
    let phi = bundle.energies.scale(-1.0 / hbar).with_units("energy/hbar");
    if bundle.grid.nt() == 1 {
        return Ok(GaugePotential {
            a: a_n,
            phi,
            source: PotentialSource::FullWavefunction,
            static_dadt: Some(grad_eps),
        });
    }
    bundle.grid.check_time(3)?;
    let gamma = geometric_phase(bundle)?.gamma;
    let a = gradient_field(&gamma)
        .scale(-1.0)
        .add(&cumulative_time_integral_vector(&grad_eps)?)?
        .add(&a_n)?
        .with_units("1/parameter");
    Ok(GaugePotential {
        a,
        phi,
        source: PotentialSource::FullWavefunction,
        static_dadt: None,
    })
}
