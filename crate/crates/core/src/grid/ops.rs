use alloc::vec;
use alloc::vec::Vec;

use super::{ScalarField, VectorField, TIME_AXIS};
use crate::error::Result;
use crate::numeric::CompensatedSum;

/// `d f / d axis` on the node grid with the mask propagated through the stencil.
pub fn partial_derivative(f: &ScalarField, axis: usize) -> ScalarField {
    let grid = f.grid;
    let mut values = vec![0.0; grid.len()];
    let mut valid = vec![false; grid.len()];
    for p in 0..grid.len() {
        let s = grid.stencil(p, axis);
        if s.all_valid(&f.valid) {
            valid[p] = true;
            values[p] = s.apply(|q| f.values[q]);
        }
    }
    ScalarField {
        grid,
        values,
        valid,
        units: "",
    }
}

pub fn gradient_field(f: &ScalarField) -> VectorField {
    let d: [ScalarField; 3] = core::array::from_fn(|a| partial_derivative(f, a));
    VectorField::from_components([&d[0], &d[1], &d[2]]).expect("same grid")
}

fn jacobian(field: &VectorField) -> [[ScalarField; 3]; 3] {
    core::array::from_fn(|c| {
        let comp = field.component(c);
        core::array::from_fn(|a| partial_derivative(&comp, a))
    })
}

pub fn curl_field(field: &VectorField) -> VectorField {
    // d[c][a] = d F_c / d R_a
    let d = jacobian(field);
    let grid = field.grid;
    let mut out = VectorField::zeros(grid);
    for p in 0..grid.len() {
        let ok = d.iter().flatten().all(|s| s.valid[p]);
        out.valid[p] = ok;
        if ok {
            let g = |c: usize, a: usize| d[c][a].values[p];
            out.values[p] = [g(2, 1) - g(1, 2), g(0, 2) - g(2, 0), g(1, 0) - g(0, 1)];
        }
    }
    out
}

pub fn divergence_field(field: &VectorField) -> ScalarField {
    let d: [ScalarField; 3] = core::array::from_fn(|a| partial_derivative(&field.component(a), a));
    let grid = field.grid;
    let mut out = ScalarField::zeros(grid);
    for p in 0..grid.len() {
        let ok = d.iter().all(|s| s.valid[p]);
        out.valid[p] = ok;
        if ok {
            out.values[p] = d[0].values[p] + d[1].values[p] + d[2].values[p];
        }
    }
    out
}

pub fn time_derivative_field(f: &ScalarField) -> Result<ScalarField> {
    f.grid.check_time(3)?;
    Ok(partial_derivative(f, TIME_AXIS))
}

pub fn time_derivative_vector(field: &VectorField) -> Result<VectorField> {
    field.grid.check_time(3)?;
    let d: [ScalarField; 3] =
        core::array::from_fn(|c| partial_derivative(&field.component(c), TIME_AXIS));
    VectorField::from_components([&d[0], &d[1], &d[2]])
}

/// Trapezoid `int_{t0}^{t} f dt'`, 0 at the first sample. A sample is valid
/// only if every earlier sample on its time line is.
pub fn cumulative_time_integral(f: &ScalarField) -> Result<ScalarField> {
    let time = f.grid.check_time(2)?;
    let mut out = ScalarField::zeros(f.grid);
    out.valid = vec![false; f.grid.len()];
    for line in 0..f.grid.spatial_len() {
        let base = line * time.nt;
        let mut acc = CompensatedSum::new();
        let mut ok = f.valid[base];
        out.valid[base] = ok;
        for tau in 1..time.nt {
            let p = base + tau;
            ok &= f.valid[p];
            if !ok {
                break;
            }
            acc.add(0.5 * time.dt * f.values[p - 1]);
            acc.add(0.5 * time.dt * f.values[p]);
            out.values[p] = acc.value();
            out.valid[p] = true;
        }
    }
    Ok(out)
}

pub fn cumulative_time_integral_vector(field: &VectorField) -> Result<VectorField> {
    let c: Vec<ScalarField> = (0..3)
        .map(|a| cumulative_time_integral(&field.component(a)))
        .collect::<Result<_>>()?;
    VectorField::from_components([&c[0], &c[1], &c[2]])
}
