//! Eigenbundles, Berry potentials, curvatures and holonomies.
//!
//! Conventions: `A = i<n|grad n>`, `Phi = -i<n|d_t n>`,
//! `Omega = -grad Phi - d_t A`, `B = curl A`. For the lower band of `R . sigma`
//! this gives `B = +R_hat / (2 R^2)`, i.e. flux `+2 pi` through a surface
//! enclosing the origin. Holonomies are `-arg` of ordered overlap products.
//!
//! Stored eigenvectors follow a [`GaugeChoice`]: one component real and
//! positive across the grid when such a component exists, otherwise the
//! dominant component per node (with neighbours re-phased onto the centre's
//! pivot when differencing) or spatial propagation smoothing. Potentials are stencil sums of link phases `arg <n_p|n_q>`, so a gauge
//! change shifts them by exactly the discrete derivative of the gauge
//! function. Bilinear curvatures difference neighbours brought into phase
//! with the centre node along each link.

mod bundle;
mod curvature;
mod holonomy;
mod potentials;

pub use bundle::{
    build_eigenbundle, gauge_transform_apply, BundleOptions, EigenBundle, GaugeChoice,
};
pub(crate) use curvature::magnetic_bilinear_at;
pub use curvature::{
    curvature_sum_over_states, electric_curvature, electric_curvature_bilinear, magnetic_curvature,
    magnetic_curvature_bilinear, sum_over_states, CurvaturePair, SumOverStates,
};
pub use holonomy::{plaquette_chern, wilson_loop_phase, wilson_loop_phase_points, PlaquetteChern};
pub use potentials::{
    connection_eigenstate, geometric_phase, potentials_eigenstate, potentials_full_wavefunction,
    scalar_potential_eigenstate, GaugePotential, GeometricPhase, PotentialSource,
};

/// Human-readable record of the sign and gauge conventions above.
pub const CONVENTIONS: Conventions = Conventions {
    connection: "A = i<n|grad n>, Phi = -i<n|d_t n>",
    electric_curvature: "Omega = -grad Phi - d_t A = i(<grad n|d_t n> - <d_t n|grad n>)",
    magnetic_curvature: "B = curl A = -2 Im <d_b n|d_c n> (cyclic)",
    monopole_sign: "spin-zeeman lower band: B = +R_hat/(2R^2), flux +2pi, charge +1",
    holonomy: "phase = -arg prod <n_j|n_j+1>; plaquette flux counterclockwise about +normal",
    gauge_fix: "one component real and positive grid-wide when it stays above 0.1, else dominant \
                component per node (lowest index on ties) or spatial propagation for time-dependent \
                families; potentials from stencil sums of link phases arg<n_p|n_q>",
    geometric_phase: "gamma = -int_0^t Phi dt', gamma(t0) = 0",
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Conventions {
    pub connection: &'static str,
    pub electric_curvature: &'static str,
    pub magnetic_curvature: &'static str,
    pub monopole_sign: &'static str,
    pub holonomy: &'static str,
    pub gauge_fix: &'static str,
    pub geometric_phase: &'static str,
}

#[cfg(test)]
mod tests;
