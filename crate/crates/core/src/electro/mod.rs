//! Parameter-space electrodynamics of a band: velocity, vorticity, charge and
//! current densities, and residuals of the identities tying them to the Berry
//! curvatures.
//!
//! The band velocity is the first-order adiabatic expectation
//! `v = <n|grad H|n>/hbar - Omega`, with `Omega` from the sum-over-states
//! formula. Residuals are compared against a noise floor measured on the same
//! grid (see [`NoiseFloor`]).

use alloc::string::{String, ToString};
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::berry::{
    electric_curvature, electric_curvature_bilinear, magnetic_curvature,
    magnetic_curvature_bilinear, potentials_eigenstate, potentials_full_wavefunction,
    sum_over_states, EigenBundle, SumOverStates,
};
use crate::error::Result;
use crate::grid::{
    curl_field, divergence_field, gradient_field, time_derivative_field, time_derivative_vector,
    ParameterGrid, ScalarField, VectorField, TIME_AXIS,
};
use crate::model::HamiltonianFamily;

mod monopole;
mod suite;

pub use monopole::{
    find_monopoles, magnetic_current_surface, monopole_charge, MagneticCurrent, MonopoleCharge,
    MonopoleSite,
};
pub use suite::{
    run_verification_suite, verify_bundle, ModelInfo, SuiteOptions, SuiteTolerances, TrigGauge,
    VerificationReport,
};

/// Node layers next to a non-periodic edge left out of residual statistics.
/// Composite operators (a divergence or curl of a differenced field) are only
/// first-order accurate there because of the one-sided edge stencils.
pub const EDGE_LAYERS: usize = 2;

/// Closed box in `(R, t)`; bounds are inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Region {
    pub lo: [f64; 4],
    pub hi: [f64; 4],
}

impl Region {
    /// The nodes of `grid` that `residual_mask` keeps, as a box.
    pub fn interior_of(grid: &ParameterGrid) -> Self {
        let mut lo = [0.0; 4];
        let mut hi = [0.0; 4];
        for axis in 0..4 {
            let (first, last) = interior_range(grid, axis);
            let coord = |i: usize| {
                if axis == TIME_AXIS {
                    grid.time(i)
                } else {
                    grid.origin()[axis] + i as f64 * grid.spacing()[axis]
                }
            };
            lo[axis] = coord(first);
            hi[axis] = coord(last);
        }
        Self { lo, hi }
    }

    fn contains(&self, grid: &ParameterGrid, p: usize) -> bool {
        let (r, t) = grid.point(p);
        let x = [r[0], r[1], r[2], t];
        let step = [
            grid.spacing()[0],
            grid.spacing()[1],
            grid.spacing()[2],
            grid.time_axis().map_or(1.0, |a| a.dt),
        ];
        (0..4).all(|a| {
            let slack = 1e-9 * step[a];
            x[a] >= self.lo[a] - slack && x[a] <= self.hi[a] + slack
        })
    }
}

fn interior_range(grid: &ParameterGrid, axis: usize) -> (usize, usize) {
    let (n, periodic) = if axis == TIME_AXIS {
        (grid.nt(), false)
    } else {
        (grid.shape()[axis], grid.periodic()[axis])
    };
    if periodic || n < 3 {
        return (0, n - 1);
    }
    let m = EDGE_LAYERS.min((n - 1) / 2);
    (m, n - 1 - m)
}

/// Nodes entering residual statistics: at least [`EDGE_LAYERS`] away from
/// every non-periodic edge (fewer on very short axes) and inside `region`.
pub fn residual_mask(grid: &ParameterGrid, region: Option<&Region>) -> Vec<bool> {
    let ranges: [(usize, usize); 4] = core::array::from_fn(|a| interior_range(grid, a));
    (0..grid.len())
        .map(|p| {
            let (i, j, k, tau) = grid.unravel(p);
            let inside = [i, j, k, tau]
                .iter()
                .zip(&ranges)
                .all(|(&x, &(lo, hi))| x >= lo && x <= hi);
            inside && region.is_none_or(|r| r.contains(grid, p))
        })
        .collect()
}

/// Summary of a residual field over its valid nodes.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ResidualStat {
    pub name: String,
    /// Largest component magnitude.
    pub max_abs: f64,
    /// Root mean square of the pointwise magnitude.
    pub l2: f64,
    pub valid_points: usize,
    pub noise_floor: f64,
    pub exceeds_floor: bool,
    /// Pass threshold on `max_abs`; `None` for diagnostics and skipped checks.
    pub tolerance: Option<f64>,
    /// False when the grid or family cannot exercise the identity.
    pub applicable: bool,
    /// Reported only; never fails.
    pub diagnostic: bool,
    pub pass: bool,
}

impl ResidualStat {
    fn from_magnitudes(
        name: &str,
        points: impl Iterator<Item = (f64, f64)>,
        noise_floor: f64,
    ) -> Self {
        let mut max_abs = 0.0f64;
        let mut sq = 0.0;
        let mut n = 0usize;
        for (m, norm2) in points {
            max_abs = max_abs.max(m);
            sq += norm2;
            n += 1;
        }
        let l2 = if n > 0 { (sq / n as f64).sqrt() } else { 0.0 };
        Self {
            name: name.to_string(),
            max_abs,
            l2,
            valid_points: n,
            noise_floor,
            exceeds_floor: max_abs > noise_floor,
            tolerance: None,
            applicable: true,
            diagnostic: false,
            pass: true,
        }
    }

    pub fn from_vector(name: &str, field: &VectorField, noise_floor: f64) -> Self {
        Self::from_vector_on(name, field, None, noise_floor)
    }

    pub fn from_scalar(name: &str, field: &ScalarField, noise_floor: f64) -> Self {
        Self::from_scalar_on(name, field, None, noise_floor)
    }

    /// Statistics over nodes that are valid and, if given, inside `mask`.
    pub fn from_vector_on(
        name: &str,
        field: &VectorField,
        mask: Option<&[bool]>,
        noise_floor: f64,
    ) -> Self {
        let keep = |p: usize| field.valid[p] && mask.is_none_or(|m| m[p]);
        let points = field
            .values
            .iter()
            .enumerate()
            .filter(|(p, _)| keep(*p))
            .map(|(_, v)| {
                let m = v[0].abs().max(v[1].abs()).max(v[2].abs());
                (m, v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
            });
        Self::from_magnitudes(name, points, noise_floor)
    }

    pub fn from_scalar_on(
        name: &str,
        field: &ScalarField,
        mask: Option<&[bool]>,
        noise_floor: f64,
    ) -> Self {
        let keep = |p: usize| field.valid[p] && mask.is_none_or(|m| m[p]);
        let points = field
            .values
            .iter()
            .enumerate()
            .filter(|(p, _)| keep(*p))
            .map(|(_, x)| (x.abs(), x * x));
        Self::from_magnitudes(name, points, noise_floor)
    }

    /// A check the current grid or family cannot exercise.
    pub fn not_applicable(name: &str, noise_floor: f64) -> Self {
        let mut s = Self::from_magnitudes(name, core::iter::empty(), noise_floor);
        s.applicable = false;
        s
    }

    /// Sets the threshold; a check with no valid points fails.
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = Some(tolerance);
        self.pass = self.valid_points > 0 && self.max_abs <= tolerance;
        self
    }

    pub fn as_diagnostic(mut self) -> Self {
        self.diagnostic = true;
        self.tolerance = None;
        self.pass = true;
        self
    }

    /// Worst case of two statistics of the same quantity.
    pub fn merge(mut self, other: &Self) -> Self {
        self.max_abs = self.max_abs.max(other.max_abs);
        self.l2 = self.l2.max(other.l2);
        self.valid_points = self.valid_points.min(other.valid_points);
        self.exceeds_floor = self.max_abs > self.noise_floor;
        self
    }
}

/// Measured discretization baseline of a grid, over the residual mask.
/// `value` is the largest of the components:
///
/// * `curl_gradient`: `max |curl (<n|grad H|n>)| / hbar`, the discrete curl of
///   the exact band gradient;
/// * `magnetic_routes`, `electric_routes`: `max |F_bilinear - F_sos|` between
///   eigenvector differencing and the sum-over-states formula;
/// * `roundoff`: a rounding guard for second differences.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct NoiseFloor {
    pub value: f64,
    pub curl_gradient: f64,
    pub magnetic_routes: f64,
    pub electric_routes: f64,
    pub roundoff: f64,
}

const ROUNDOFF_FACTOR: f64 = 64.0;

fn smallest_step(bundle: &EigenBundle) -> f64 {
    let grid = bundle.grid;
    let mut h = f64::INFINITY;
    for a in 0..3 {
        if grid.shape()[a] >= 3 {
            h = h.min(grid.spacing()[a]);
        }
    }
    if let Some(t) = grid.time_axis().filter(|t| t.nt >= 3) {
        h = h.min(t.dt);
    }
    if h.is_finite() {
        h
    } else {
        1.0
    }
}

fn masked_max(field: &VectorField, mask: &[bool]) -> f64 {
    ResidualStat::from_vector_on("", field, Some(mask), 0.0).max_abs
}

fn measure_floor(
    bundle: &EigenBundle,
    sos: &SumOverStates,
    potential_scale: f64,
    hbar: f64,
    mask: &[bool],
) -> Result<NoiseFloor> {
    let curl_gradient = masked_max(&curl_field(&sos.grad_energy), mask) / hbar;
    let magnetic_routes = masked_max(&magnetic_curvature_bilinear(bundle).sub(&sos.b)?, mask);
    let electric_routes = masked_max(&electric_curvature_bilinear(bundle).sub(&sos.omega)?, mask);
    let h = smallest_step(bundle);
    let scale = bundle.energies.max_abs() / hbar + potential_scale;
    let roundoff = ROUNDOFF_FACTOR * f64::EPSILON * scale / (h * h);
    let value = curl_gradient
        .max(magnetic_routes)
        .max(electric_routes)
        .max(roundoff);
    Ok(NoiseFloor {
        value,
        curl_gradient,
        magnetic_routes,
        electric_routes,
        roundoff,
    })
}

/// Noise floor of `bundle`'s grid.
pub fn noise_floor(
    family: &dyn HamiltonianFamily,
    bundle: &EigenBundle,
    hbar: f64,
) -> Result<NoiseFloor> {
    let sos = sum_over_states(family, bundle)?;
    let pot = potentials_eigenstate(bundle);
    let mask = residual_mask(&bundle.grid, None);
    measure_floor(
        bundle,
        &sos,
        pot.a.max_abs() + pot.phi.max_abs(),
        hbar,
        &mask,
    )
}

fn velocity_from(sos: &SumOverStates, hbar: f64) -> Result<VectorField> {
    Ok(sos
        .grad_energy
        .scale(1.0 / hbar)
        .sub(&sos.omega)?
        .with_units("parameter/time"))
}

/// `<n|grad H|n> / hbar` alone.
pub fn expectation_velocity(
    family: &dyn HamiltonianFamily,
    bundle: &EigenBundle,
    hbar: f64,
) -> Result<VectorField> {
    Ok(sum_over_states(family, bundle)?
        .grad_energy
        .scale(1.0 / hbar)
        .with_units("parameter/time"))
}

/// Band velocity `<n|grad H|n>/hbar - Omega`.
pub fn velocity_field(
    family: &dyn HamiltonianFamily,
    bundle: &EigenBundle,
    hbar: f64,
) -> Result<VectorField> {
    velocity_from(&sum_over_states(family, bundle)?, hbar)
}

/// `v - grad eps / hbar + Omega_n` with finite-difference `grad eps` and
/// `Omega_n`.
pub fn hellmann_feynman_residual(
    family: &dyn HamiltonianFamily,
    bundle: &EigenBundle,
    hbar: f64,
    noise_floor: f64,
) -> Result<ResidualStat> {
    let v = velocity_field(family, bundle, hbar)?;
    let omega = electric_curvature(&potentials_eigenstate(bundle))?;
    let r = hf_field(&v, bundle, &omega, hbar)?;
    let mask = residual_mask(&bundle.grid, None);
    Ok(ResidualStat::from_vector_on(
        "hellmann_feynman",
        &r,
        Some(&mask),
        noise_floor,
    ))
}

fn hf_field(
    v: &VectorField,
    bundle: &EigenBundle,
    omega_n: &VectorField,
    hbar: f64,
) -> Result<VectorField> {
    let grad = gradient_field(&bundle.energies).scale(1.0 / hbar);
    v.sub(&grad)?.add(omega_n)
}

/// Faraday residuals `curl Omega + d_t B + curl grad Phi` for the
/// eigenstate and full-wavefunction potentials, and the size of
/// `J_m = curl grad Phi_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct FaradayResidual {
    pub eigen: ResidualStat,
    pub full: ResidualStat,
    pub monopole_current: ResidualStat,
}

fn faraday_field(
    omega: &VectorField,
    b: &VectorField,
    curl_grad_phi: &VectorField,
) -> Result<VectorField> {
    curl_field(omega)
        .add(&time_derivative_vector(b)?)?
        .add(curl_grad_phi)
}

pub fn faraday_residual(
    bundle: &EigenBundle,
    hbar: f64,
    noise_floor: f64,
) -> Result<FaradayResidual> {
    bundle.grid.check_time(3)?;
    let eigen = potentials_eigenstate(bundle);
    let jm = curl_field(&gradient_field(&eigen.phi));
    let r_eigen = faraday_field(
        &electric_curvature(&eigen)?,
        &magnetic_curvature(&eigen),
        &jm,
    )?;
    let full = potentials_full_wavefunction(bundle, hbar)?;
    let jm_full = curl_field(&gradient_field(&full.phi));
    let r_full = faraday_field(
        &electric_curvature(&full)?,
        &magnetic_curvature(&full),
        &jm_full,
    )?;
    let mask = residual_mask(&bundle.grid, None);
    let m = Some(mask.as_slice());
    Ok(FaradayResidual {
        eigen: ResidualStat::from_vector_on("faraday_eigen", &r_eigen, m, noise_floor),
        full: ResidualStat::from_vector_on("faraday_full", &r_full, m, noise_floor),
        monopole_current: ResidualStat::from_vector_on("monopole_current", &jm, m, noise_floor),
    })
}

/// `omega = curl v`.
pub fn vorticity_field(
    family: &dyn HamiltonianFamily,
    bundle: &EigenBundle,
    hbar: f64,
) -> Result<VectorField> {
    Ok(curl_field(&velocity_field(family, bundle, hbar)?).with_units("1/time"))
}

/// `rho_el = div Omega_n`.
pub fn electric_charge_density(bundle: &EigenBundle) -> Result<ScalarField> {
    Ok(divergence_field(&electric_curvature(
        &potentials_eigenstate(bundle),
    )?))
}

/// `P = grad eps / hbar - v`.
pub fn polarization_density(
    family: &dyn HamiltonianFamily,
    bundle: &EigenBundle,
    hbar: f64,
) -> Result<VectorField> {
    let v = velocity_field(family, bundle, hbar)?;
    gradient_field(&bundle.energies).scale(1.0 / hbar).sub(&v)
}

/// `rho_m = div B_n` with `B_n = curl A_n`.
pub fn magnetic_charge_density(bundle: &EigenBundle) -> ScalarField {
    divergence_field(&magnetic_curvature(&potentials_eigenstate(bundle)))
}

/// Magnetic current density from the potential (`curl grad Phi_n`) and from
/// the velocity (`curl v - d_t B_n`).
#[derive(Debug, Clone, PartialEq)]
pub struct MonopoleCurrent {
    pub potential_route: VectorField,
    pub velocity_route: VectorField,
}

impl MonopoleCurrent {
    pub fn route_difference(&self) -> Result<VectorField> {
        self.velocity_route.sub(&self.potential_route)
    }
}

pub fn monopole_current_density(
    family: &dyn HamiltonianFamily,
    bundle: &EigenBundle,
    hbar: f64,
) -> Result<MonopoleCurrent> {
    bundle.grid.check_time(3)?;
    let eigen = potentials_eigenstate(bundle);
    let potential_route = curl_field(&gradient_field(&eigen.phi));
    let b = magnetic_curvature(&eigen);
    let velocity_route =
        vorticity_field(family, bundle, hbar)?.sub(&time_derivative_vector(&b)?)?;
    Ok(MonopoleCurrent {
        potential_route,
        velocity_route,
    })
}

fn continuity_field(
    vorticity: &VectorField,
    b: &VectorField,
    jm: &VectorField,
) -> Result<ScalarField> {
    let drho = time_derivative_field(&divergence_field(b))?;
    divergence_field(vorticity)
        .zip_with(&drho, |a, c| a - c)?
        .zip_with(&divergence_field(jm), |a, c| a - c)
}

/// `div omega - d_t rho_m - div J_m` with `J_m = curl grad Phi_n`.
pub fn continuity_residual(
    family: &dyn HamiltonianFamily,
    bundle: &EigenBundle,
    hbar: f64,
    noise_floor: f64,
) -> Result<ResidualStat> {
    bundle.grid.check_time(3)?;
    let eigen = potentials_eigenstate(bundle);
    let jm = curl_field(&gradient_field(&eigen.phi));
    let r = continuity_field(
        &vorticity_field(family, bundle, hbar)?,
        &magnetic_curvature(&eigen),
        &jm,
    )?;
    let mask = residual_mask(&bundle.grid, None);
    Ok(ResidualStat::from_scalar_on(
        "continuity",
        &r,
        Some(&mask),
        noise_floor,
    ))
}

fn polarization_field(
    omega_n: &VectorField,
    v: &VectorField,
    bundle: &EigenBundle,
    hbar: f64,
) -> Result<ScalarField> {
    let p = gradient_field(&bundle.energies).scale(1.0 / hbar).sub(v)?;
    divergence_field(omega_n).zip_with(&divergence_field(&p), |a, b| a - b)
}

/// `div Omega_n - div P`.
pub fn polarization_residual(
    family: &dyn HamiltonianFamily,
    bundle: &EigenBundle,
    hbar: f64,
    noise_floor: f64,
) -> Result<ResidualStat> {
    let v = velocity_field(family, bundle, hbar)?;
    let omega = electric_curvature(&potentials_eigenstate(bundle))?;
    let r = polarization_field(&omega, &v, bundle, hbar)?;
    let mask = residual_mask(&bundle.grid, None);
    Ok(ResidualStat::from_scalar_on(
        "polarization",
        &r,
        Some(&mask),
        noise_floor,
    ))
}
