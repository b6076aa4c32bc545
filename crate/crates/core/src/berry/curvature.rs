use alloc::vec;
use alloc::vec::Vec;

use super::{EigenBundle, GaugePotential, PotentialSource};
use crate::error::{Error, Result};
use crate::grid::{curl_field, gradient_field, time_derivative_vector, VectorField, TIME_AXIS};
use crate::model::{
    evaluate_hamiltonian, gradient_hamiltonian, time_derivative_hamiltonian, HamiltonianFamily,
};
use crate::numeric::{hermitian_eigensystem_with, overlap_unchecked, C64};

#[derive(Debug, Clone)]
pub struct CurvaturePair {
    pub omega: VectorField,
    pub b: VectorField,
    pub source: PotentialSource,
}

impl CurvaturePair {
    pub fn from_potential(potential: &GaugePotential) -> Result<Self> {
        Ok(Self {
            omega: electric_curvature(potential)?,
            b: magnetic_curvature(potential),
            source: potential.source,
        })
    }
}

/// `Omega = -grad Phi - d_t A`. Without a time axis `d_t A` comes from the
/// potential's closed-form term (or is zero).
pub fn electric_curvature(potential: &GaugePotential) -> Result<VectorField> {
    let grid = potential.a.grid;
    let minus_grad_phi = gradient_field(&potential.phi).scale(-1.0);
    let dadt = match (grid.nt(), &potential.static_dadt) {
        (1, Some(d)) => d.clone(),
        (1, None) => VectorField::zeros(grid).masked(&potential.a.valid),
        _ => time_derivative_vector(&potential.a)?,
    };
    Ok(minus_grad_phi
        .sub(&dadt)?
        .with_units("energy/(hbar parameter)"))
}

/// `B = curl A`.
pub fn magnetic_curvature(potential: &GaugePotential) -> VectorField {
    curl_field(&potential.a).with_units("1/parameter^2")
}

/// Derivatives along the three spatial axes and time with the component
/// along `n` removed, so that only gauge-covariant pieces remain.
fn transverse_derivatives(
    bundle: &EigenBundle,
    p: usize,
    with_time: bool,
    d: &mut [Vec<C64>; 4],
) -> bool {
    let n = bundle.vector(p);
    let last = if with_time { TIME_AXIS } else { 2 };
    for axis in 0..=last {
        if !bundle.transported_derivative_into(p, axis, &mut d[axis]) {
            return false;
        }
        let c = overlap_unchecked(n, &d[axis]);
        for (z, v) in d[axis].iter_mut().zip(n) {
            *z -= c * v;
        }
    }
    true
}

fn minus_two_im(u: &[C64], v: &[C64]) -> f64 {
    -2.0 * overlap_unchecked(u, v).im
}

fn bilinear(bundle: &EigenBundle, electric: bool) -> VectorField {
    let grid = bundle.grid;
    let with_time = electric && grid.nt() >= 3;
    let mut out = VectorField::zeros(grid);
    let mut d = derivative_buffers(bundle);
    for p in 0..grid.len() {
        if !transverse_derivatives(bundle, p, with_time, &mut d) {
            out.valid[p] = false;
            continue;
        }
        out.values[p] = if !electric {
            magnetic_from(&d)
        } else if with_time {
            core::array::from_fn(|a| minus_two_im(&d[a], &d[TIME_AXIS]))
        } else {
            [0.0; 3]
        };
    }
    out
}

fn derivative_buffers(bundle: &EigenBundle) -> [Vec<C64>; 4] {
    core::array::from_fn(|_| vec![C64::new(0.0, 0.0); bundle.dim])
}

fn magnetic_from(d: &[Vec<C64>; 4]) -> [f64; 3] {
    [
        minus_two_im(&d[1], &d[2]),
        minus_two_im(&d[2], &d[0]),
        minus_two_im(&d[0], &d[1]),
    ]
}

/// Bilinear `B` at the listed nodes only; every other node is invalid.
pub(crate) fn magnetic_bilinear_at(bundle: &EigenBundle, nodes: &[usize]) -> VectorField {
    let mut out = VectorField::zeros(bundle.grid);
    out.valid.iter_mut().for_each(|v| *v = false);
    let mut d = derivative_buffers(bundle);
    for &p in nodes {
        if transverse_derivatives(bundle, p, false, &mut d) {
            out.valid[p] = true;
            out.values[p] = magnetic_from(&d);
        }
    }
    out.with_units("1/parameter^2")
}

/// `B_a = -2 Im <d_b n|d_c n>` (cyclic `a, b, c`) from projected eigenvector
/// differences. Gauge-invariant, so patch boundaries of the stored gauge do
/// not leak into it.
pub fn magnetic_curvature_bilinear(bundle: &EigenBundle) -> VectorField {
    bilinear(bundle, false).with_units("1/parameter^2")
}

/// `Omega_a = i(<d_a n|d_t n> - <d_t n|d_a n>)`, zero without a time axis.
pub fn electric_curvature_bilinear(bundle: &EigenBundle) -> VectorField {
    bilinear(bundle, true).with_units("energy/(hbar parameter)")
}

/// Curvatures and band derivatives from matrix elements of `dH` between
/// instantaneous eigenstates; no eigenvector differentiation involved.
#[derive(Debug, Clone)]
pub struct SumOverStates {
    /// `B_a = -2 Im sum_m <n|d_b H|m><m|d_c H|n> / (e_m - e_n)^2`.
    pub b: VectorField,
    /// `Omega_a = -2 Im sum_m <n|d_a H|m><m|d_t H|n> / (e_m - e_n)^2`.
    pub omega: VectorField,
    /// `<n|grad H|n>`, the exact gradient of `eps_n`.
    pub grad_energy: VectorField,
}

pub fn sum_over_states(
    family: &dyn HamiltonianFamily,
    bundle: &EigenBundle,
) -> Result<SumOverStates> {
    let grid = bundle.grid;
    let band = bundle.band;
    let solver = bundle.options.solver();
    let mut b = VectorField::zeros(grid).with_units("1/parameter^2");
    let mut omega = VectorField::zeros(grid).with_units("energy/(hbar parameter)");
    let mut grad_energy = VectorField::zeros(grid).with_units("energy/parameter");

    for p in 0..grid.len() {
        if !bundle.is_valid(p) {
            continue;
        }
        let (r, t) = grid.point(p);
        let pairs = hermitian_eigensystem_with(&evaluate_hamiltonian(family, r, t)?, &solver)?;
        let dh = gradient_hamiltonian(family, r, t, &bundle.steps)?;
        let dt = time_derivative_hamiltonian(family, r, t, &bundle.steps)?;
        let n = &pairs[band].vector;
        let en = pairs[band].value;

        let mut x = [[C64::new(0.0, 0.0); 4]; 4];
        for (m, pair) in pairs.iter().enumerate() {
            if m == band {
                continue;
            }
            let gap = pair.value - en;
            if gap.abs() < bundle.gap_tol {
                return Err(Error::GapTooSmall {
                    node: p,
                    gap: gap.abs(),
                });
            }
            let g: [C64; 4] = [
                dh[0].sandwich(n, &pair.vector),
                dh[1].sandwich(n, &pair.vector),
                dh[2].sandwich(n, &pair.vector),
                dt.sandwich(n, &pair.vector),
            ];
            let w = 1.0 / (gap * gap);
            for (row, ga) in x.iter_mut().zip(&g) {
                for (cell, gb) in row.iter_mut().zip(&g) {
                    *cell += ga * gb.conj() * w;
                }
            }
        }
        b.values[p] = [-2.0 * x[1][2].im, -2.0 * x[2][0].im, -2.0 * x[0][1].im];
        omega.values[p] = core::array::from_fn(|a| -2.0 * x[a][3].im);
        grad_energy.values[p] = core::array::from_fn(|a| dh[a].sandwich(n, n).re);
    }
    let valid = bundle.valid();
    Ok(SumOverStates {
        b: b.masked(&valid),
        omega: omega.masked(&valid),
        grad_energy: grad_energy.masked(&valid),
    })
}

/// Gauge-invariant oracle for `B` on the bundle's grid and band.
pub fn curvature_sum_over_states(
    family: &dyn HamiltonianFamily,
    bundle: &EigenBundle,
) -> Result<VectorField> {
    Ok(sum_over_states(family, bundle)?.b)
}
