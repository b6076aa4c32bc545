use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use super::monopole::current_through;
use super::{
    continuity_field, faraday_field, hf_field, measure_floor, polarization_field, residual_mask,
    velocity_from, NoiseFloor, Region, ResidualStat,
};
use crate::berry::{
    build_eigenbundle, electric_curvature, gauge_transform_apply, magnetic_curvature,
    potentials_eigenstate, potentials_full_wavefunction, sum_over_states, BundleOptions,
    Conventions, EigenBundle, CONVENTIONS,
};
use crate::error::Result;
use crate::grid::{
    curl_field, gradient_field, time_derivative_vector, ParameterGrid, Rectangle, ScalarField,
    VectorField,
};
use crate::model::HamiltonianFamily;

/// `Lambda(R, t) = amplitude * sin(k . R + frequency * t + phase)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrigGauge {
    pub amplitude: f64,
    pub wavevector: [f64; 3],
    pub frequency: f64,
    pub phase: f64,
}

impl TrigGauge {
    fn argument(&self, r: [f64; 3], t: f64) -> f64 {
        let k = self.wavevector;
        k[0] * r[0] + k[1] * r[1] + k[2] * r[2] + self.frequency * t + self.phase
    }

    pub fn value(&self, r: [f64; 3], t: f64) -> f64 {
        self.amplitude * self.argument(r, t).sin()
    }

    pub fn gradient(&self, r: [f64; 3], t: f64) -> [f64; 3] {
        let c = self.amplitude * self.argument(r, t).cos();
        self.wavevector.map(|k| c * k)
    }

    pub fn time_derivative(&self, r: [f64; 3], t: f64) -> f64 {
        self.amplitude * self.frequency * self.argument(r, t).cos()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOptions {
    pub hbar: f64,
    pub bundle: BundleOptions,
    /// Identity tolerance in units of the noise floor.
    pub residual_multiplier: f64,
    /// Tolerance of the static-limit checks in units of the noise floor.
    pub static_multiplier: f64,
    /// Gauge functions for the invariance checks.
    pub gauges: Vec<TrigGauge>,
    /// Surface for the magnetic-current check; a central rectangle is chosen
    /// when `None`.
    pub current_surface: Option<Rectangle>,
    /// Restricts statistics (and the floor) to a box, e.g. a region shared by
    /// every level of a refinement study.
    pub region: Option<Region>,
    /// Flips the sign of `Omega_n` before it enters any identity.
    pub corrupt_electric: bool,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            hbar: 1.0,
            bundle: BundleOptions::default(),
            residual_multiplier: 10.0,
            static_multiplier: 1.0,
            gauges: vec![
                TrigGauge {
                    amplitude: 0.3,
                    wavevector: [0.7, -0.4, 0.5],
                    frequency: 0.0,
                    phase: 0.2,
                },
                TrigGauge {
                    amplitude: 0.3,
                    wavevector: [0.5, 0.3, -0.6],
                    frequency: 0.8,
                    phase: -0.4,
                },
            ],
            current_surface: None,
            region: None,
            corrupt_electric: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ModelInfo {
    pub name: String,
    pub dim: usize,
    pub is_static: bool,
    pub parameters: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SuiteTolerances {
    pub hbar: f64,
    pub residual_multiplier: f64,
    pub static_multiplier: f64,
    /// Absolute gap threshold of the bundle.
    pub gap_tol: f64,
    pub herm_tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct VerificationReport {
    pub model: ModelInfo,
    pub grid: ParameterGrid,
    pub band: usize,
    pub conventions: Conventions,
    pub noise_floor: NoiseFloor,
    pub tolerances: SuiteTolerances,
    pub residuals: Vec<ResidualStat>,
    pub pass: bool,
}

impl VerificationReport {
    /// Names of every identity, in report order.
    pub const IDENTITIES: [&'static str; 15] = [
        "static_electric_zero",
        "static_magnetic_equal",
        "full_vs_eigen_magnetic",
        "electric_full_vs_eigen",
        "faraday_eigen",
        "faraday_full",
        "monopole_current",
        "hellmann_feynman",
        "vorticity",
        "continuity",
        "polarization",
        "monopole_current_routes",
        "magnetic_current_surface",
        "gauge_invariance",
        "gauge_shift",
    ];

    pub fn residual(&self, name: &str) -> Option<&ResidualStat> {
        self.residuals.iter().find(|r| r.name == name)
    }
}

/// Builds the bundle of `band` on `grid` and runs [`verify_bundle`].
pub fn run_verification_suite(
    family: &dyn HamiltonianFamily,
    grid: &ParameterGrid,
    band: usize,
    options: &SuiteOptions,
) -> Result<VerificationReport> {
    let bundle = build_eigenbundle(family, grid, band, &options.bundle)?;
    verify_bundle(family, &bundle, options)
}

fn central_rectangle(grid: &ParameterGrid) -> Option<Rectangle> {
    let shape = grid.shape();
    let normal = (0..3).find(|&n| shape[(n + 1) % 3] >= 5 && shape[(n + 2) % 3] >= 5)?;
    let axes = [(normal + 1) % 3, (normal + 2) % 3];
    let mut lo_idx = [0; 3];
    let mut hi_idx = [0; 3];
    lo_idx[normal] = shape[normal] / 2;
    hi_idx[normal] = shape[normal] / 2;
    for a in axes {
        lo_idx[a] = shape[a] / 4;
        hi_idx[a] = shape[a] - 1 - shape[a] / 4;
    }
    let lo = grid.coord(lo_idx[0], lo_idx[1], lo_idx[2]);
    let hi = grid.coord(hi_idx[0], hi_idx[1], hi_idx[2]);
    Some(Rectangle {
        normal,
        plane: lo[normal],
        lo: [lo[axes[0]], lo[axes[1]]],
        hi: [hi[axes[0]], hi[axes[1]]],
        positive: true,
    })
}

/// The time axis of `grid` alone, on a single spatial node.
fn time_line(grid: &ParameterGrid) -> ParameterGrid {
    ParameterGrid::new(
        grid.origin(),
        grid.spacing(),
        [1, 1, 1],
        [false; 3],
        grid.time_axis(),
    )
    .expect("valid axis")
}

fn time_only(region: &Region) -> Region {
    let mut r = *region;
    for a in 0..3 {
        r.lo[a] = f64::NEG_INFINITY;
        r.hi[a] = f64::INFINITY;
    }
    r
}

fn scalar_as_vector(f: &ScalarField) -> VectorField {
    let mut out = VectorField::zeros(f.grid);
    for p in 0..f.values.len() {
        out.values[p] = [f.values[p], 0.0, 0.0];
        out.valid[p] = f.valid[p];
    }
    out
}

/// Evaluates every identity on an existing bundle. Residuals are compared
/// with `residual_multiplier` (or `static_multiplier` for the static-limit
/// checks) times the noise floor, which is measured before any corruption.
pub fn verify_bundle(
    family: &dyn HamiltonianFamily,
    bundle: &EigenBundle,
    options: &SuiteOptions,
) -> Result<VerificationReport> {
    let grid = bundle.grid;
    let hbar = options.hbar;
    let timed = grid.nt() >= 3;
    let is_static = family.is_static();

    let mask = residual_mask(&grid, options.region.as_ref());
    let sos = sum_over_states(family, bundle)?;
    let eigen = potentials_eigenstate(bundle);
    let floor = measure_floor(
        bundle,
        &sos,
        eigen.a.max_abs() + eigen.phi.max_abs(),
        hbar,
        &mask,
    )?;
    let f = floor.value;
    let tol = options.residual_multiplier * f;
    let static_tol = options.static_multiplier * f;
    let skip = |name: &str| ResidualStat::not_applicable(name, f);
    let stat =
        |name: &str, field: &VectorField| ResidualStat::from_vector_on(name, field, Some(&mask), f);
    let scalar_stat =
        |name: &str, field: &ScalarField| ResidualStat::from_scalar_on(name, field, Some(&mask), f);

    let mut omega_n = electric_curvature(&eigen)?;
    if options.corrupt_electric {
        omega_n = omega_n.scale(-1.0);
    }
    let b_n = magnetic_curvature(&eigen);
    let mut out: BTreeMap<&'static str, ResidualStat> = BTreeMap::new();

    {
        let full = potentials_full_wavefunction(bundle, hbar)?;
        let omega_psi = electric_curvature(&full)?;
        let b_psi = magnetic_curvature(&full);
        let magnetic = stat("", &b_psi.sub(&b_n)?);
        if is_static {
            out.insert(
                "static_electric_zero",
                stat("", &omega_psi).with_tolerance(static_tol),
            );
            out.insert("static_magnetic_equal", magnetic.with_tolerance(static_tol));
            out.insert("full_vs_eigen_magnetic", skip(""));
            out.insert("electric_full_vs_eigen", skip(""));
        } else {
            out.insert("static_electric_zero", skip(""));
            out.insert("static_magnetic_equal", skip(""));
            out.insert("full_vs_eigen_magnetic", magnetic.with_tolerance(tol));
            out.insert(
                "electric_full_vs_eigen",
                stat("", &omega_psi.sub(&omega_n)?).with_tolerance(tol),
            );
        }
        let faraday = if timed {
            let jm = curl_field(&gradient_field(&full.phi));
            stat("", &faraday_field(&omega_psi, &b_psi, &jm)?).with_tolerance(tol)
        } else {
            skip("")
        };
        out.insert("faraday_full", faraday);
    }

    let jm = curl_field(&gradient_field(&eigen.phi));
    let v = velocity_from(&sos, hbar)?;
    drop(sos);
    out.insert(
        "hellmann_feynman",
        stat("", &hf_field(&v, bundle, &omega_n, hbar)?).with_tolerance(tol),
    );
    out.insert(
        "polarization",
        scalar_stat("", &polarization_field(&omega_n, &v, bundle, hbar)?).with_tolerance(tol),
    );

    if timed {
        out.insert(
            "faraday_eigen",
            stat("", &faraday_field(&omega_n, &b_n, &jm)?).with_tolerance(tol),
        );
        out.insert("monopole_current", stat("", &jm).as_diagnostic());
        let vorticity = curl_field(&v);
        let jm_velocity = vorticity.sub(&time_derivative_vector(&b_n)?)?;
        let routes = stat("", &jm_velocity.sub(&jm)?);
        out.insert("vorticity", routes.clone().with_tolerance(tol));
        out.insert("monopole_current_routes", routes.with_tolerance(tol));
        drop(jm_velocity);
        out.insert(
            "continuity",
            scalar_stat("", &continuity_field(&vorticity, &b_n, &jm)?).with_tolerance(tol),
        );
        let surface = options.current_surface.or_else(|| central_rectangle(&grid));
        let current = surface.and_then(|rect| current_through(&v, &b_n, &jm, &rect).ok());
        let entry = match current {
            Some(c) => {
                // time samples kept by the mask at the spatial origin's time line
                let kept = residual_mask(
                    &time_line(&grid),
                    options.region.map(|r| time_only(&r)).as_ref(),
                );
                let per_tau = (0..grid.nt()).filter(|&tau| kept[tau]).map(|tau| {
                    let d = (c.loop_route[tau] - c.flux_route[tau]).abs() / c.area;
                    (d, d * d)
                });
                ResidualStat::from_magnitudes("", per_tau, f).with_tolerance(tol)
            }
            None => skip(""),
        };
        out.insert("magnetic_current_surface", entry);
    } else {
        for name in [
            "faraday_eigen",
            "monopole_current",
            "vorticity",
            "monopole_current_routes",
            "continuity",
        ] {
            out.insert(name, skip(""));
        }
        out.insert("magnetic_current_surface", skip(""));
    }
    drop(v);
    drop(jm);

    let mut invariance: Option<ResidualStat> = None;
    let mut shift: Option<ResidualStat> = None;
    for g in &options.gauges {
        let moved = gauge_transform_apply(bundle, |r, t| g.value(r, t));
        let pot = potentials_eigenstate(&moved);
        drop(moved);
        let db = stat("", &magnetic_curvature(&pot).sub(&b_n)?);
        let domega = stat("", &electric_curvature(&pot)?.sub(&omega_n)?);
        let inv = db.merge(&domega);
        let grad = VectorField::from_fn(grid, |r, t| g.gradient(r, t));
        let da = stat("", &pot.a.sub(&eigen.a)?.add(&grad)?);
        drop(grad);
        let dphi = if timed {
            let dt = ScalarField::from_fn(grid, |r, t| g.time_derivative(r, t));
            let d = pot
                .phi
                .zip_with(&eigen.phi, |a, b| a - b)?
                .zip_with(&dt, |a, b| a - b)?;
            stat("", &scalar_as_vector(&d))
        } else {
            da.clone()
        };
        let sh = da.merge(&dphi);
        invariance = Some(match invariance {
            Some(s) => s.merge(&inv),
            None => inv,
        });
        shift = Some(match shift {
            Some(s) => s.merge(&sh),
            None => sh,
        });
    }
    out.insert(
        "gauge_invariance",
        invariance.map_or_else(|| skip(""), |s| s.with_tolerance(tol)),
    );
    out.insert(
        "gauge_shift",
        shift.map_or_else(|| skip(""), |s| s.with_tolerance(tol)),
    );

    let residuals: Vec<ResidualStat> = VerificationReport::IDENTITIES
        .iter()
        .map(|&name| {
            let mut s = out.remove(name).expect("every identity is evaluated");
            s.name = name.to_string();
            s
        })
        .collect();
    let pass = residuals.iter().all(|r| r.pass);
    Ok(VerificationReport {
        model: ModelInfo {
            name: family.name().to_string(),
            dim: family.dim(),
            is_static,
            parameters: BTreeMap::new(),
        },
        grid,
        band: bundle.band,
        conventions: CONVENTIONS,
        noise_floor: floor,
        tolerances: SuiteTolerances {
            hbar,
            residual_multiplier: options.residual_multiplier,
            static_multiplier: options.static_multiplier,
            gap_tol: bundle.gap_tol,
            herm_tol: bundle.options.herm_tol,
        },
        residuals,
        pass,
    })
}
