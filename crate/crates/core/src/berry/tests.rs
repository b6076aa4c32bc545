use super::*;
use crate::error::Error;
use crate::grid::{surface_flux, ParameterGrid, Rectangle, Surface, TimeAxis, VectorField};
use crate::model::{DriveAxes, RotatingTwoLevel, SpinZeeman, StaticDiagonal, TwoBandLattice};
use crate::numeric::C64;
use alloc::vec::Vec;
use core::f64::consts::PI;

fn opts() -> BundleOptions {
    BundleOptions::default()
}

fn cube(n: usize, lo: f64, hi: f64) -> ParameterGrid {
    let h = (hi - lo) / (n - 1) as f64;
    ParameterGrid::spatial([lo; 3], [h; 3], [n; 3]).unwrap()
}

fn rotating(theta: f64, omega: f64) -> RotatingTwoLevel {
    RotatingTwoLevel {
        b0: 1.0,
        theta,
        omega,
        phi0: 0.0,
        axes: DriveAxes::Fixed,
    }
}

fn timeline(nt: usize, t1: f64) -> ParameterGrid {
    let dt = t1 / (nt - 1) as f64;
    ParameterGrid::new(
        [0.0; 3],
        [1.0; 3],
        [1, 1, 1],
        [false; 3],
        Some(TimeAxis { t0: 0.0, dt, nt }),
    )
    .unwrap()
}

/// Lower eigenvector of `n(theta, phi) . sigma`, written independently of the solver.
fn lower_state(theta: f64, phi: f64) -> [C64; 2] {
    [
        C64::from_polar(-(theta / 2.0).sin(), -phi),
        C64::new((theta / 2.0).cos(), 0.0),
    ]
}

fn rel_max_diff(a: &VectorField, b: &VectorField) -> f64 {
    a.sub(b).unwrap().max_abs() / b.max_abs()
}

#[test]
fn spin_zeeman_energies_and_origin_mask() {
    let g = cube(6, 0.2, 1.2);
    let bundle = build_eigenbundle(&SpinZeeman, &g, 0, &opts()).unwrap();
    for p in 0..g.len() {
        let (r, _) = g.point(p);
        let norm = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        assert!((bundle.energies.values[p] + norm).abs() < 1e-13);
    }
    assert_eq!(bundle.valid_count(), g.len());

    let g = cube(5, -1.0, 1.0);
    let bundle = build_eigenbundle(&SpinZeeman, &g, 0, &opts()).unwrap();
    let origin = g.index(2, 2, 2, 0);
    assert!(bundle.degenerate[origin]);
    assert_eq!(bundle.valid_count(), g.len() - 1);
    assert_eq!(bundle.energies.values[origin], 0.0);
}

#[test]
fn bundle_errors() {
    let g = cube(3, 0.0, 1.0);
    assert_eq!(
        build_eigenbundle(&SpinZeeman, &g, 2, &opts()).unwrap_err(),
        Error::BandOutOfRange { band: 2, dim: 2 }
    );
    let flat = StaticDiagonal::new(alloc::vec![
        Polynomial::constant(1.0),
        Polynomial::constant(1.0)
    ])
    .unwrap();
    assert_eq!(
        build_eigenbundle(&flat, &g, 0, &opts()).unwrap_err(),
        Error::AllPointsDegenerate
    );
}

use crate::model::Polynomial;

#[test]
fn static_diagonal_vectors_are_constant_axes() {
    let g = cube(5, 0.5, 1.5);
    let fam = StaticDiagonal::new(StaticDiagonal::default_entries()).unwrap();
    let bundle = build_eigenbundle(&fam, &g, 1, &opts()).unwrap();
    for p in 0..g.len() {
        assert_eq!(bundle.vector(p), &[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
    }
    let a = connection_eigenstate(&bundle);
    assert_eq!(a.max_abs(), 0.0);
    assert_eq!(
        magnetic_curvature(&potentials_eigenstate(&bundle)).max_abs(),
        0.0
    );
    assert_eq!(
        curvature_sum_over_states(&fam, &bundle).unwrap().max_abs(),
        0.0
    );
}

#[test]
fn linear_phase_connection() {
    // vectors exp(i k.R) v0: every stencil sums link phases k.(R_q - R_p)
    let g = cube(7, 0.5, 1.1);
    let h = g.spacing()[0];
    let k = [0.7, -1.3, 2.1];
    let fam = StaticDiagonal::new(StaticDiagonal::default_entries()).unwrap();
    let base = build_eigenbundle(&fam, &g, 1, &opts()).unwrap();
    let bundle = gauge_transform_apply(&base, |r, _| k[0] * r[0] + k[1] * r[1] + k[2] * r[2]);
    let a = connection_eigenstate(&bundle);
    assert!(k.iter().all(|c| 2.0 * c.abs() * h < PI));
    for v in &a.values {
        for c in 0..3 {
            assert!((v[c] + k[c]).abs() < 1e-12, "{v:?}");
        }
    }
}

#[test]
fn monopole_curvature_sign_and_magnitude() {
    let g = ParameterGrid::spatial([-0.1, -0.1, 0.9], [0.1; 3], [3, 3, 3]).unwrap();
    let bundle = build_eigenbundle(&SpinZeeman, &g, 0, &opts()).unwrap();
    let sos = curvature_sum_over_states(&SpinZeeman, &bundle).unwrap();
    let top = sos.get(1, 1, 1, 0);
    assert!(top[0].abs() < 1e-14 && top[1].abs() < 1e-14);
    assert!((top[2] - 0.5).abs() < 1e-14, "{top:?}");

    let g = cube(11, 0.5, 1.5);
    let bundle = build_eigenbundle(&SpinZeeman, &g, 0, &opts()).unwrap();
    let sos = curvature_sum_over_states(&SpinZeeman, &bundle).unwrap();
    let analytic = VectorField::from_fn(g, |r, _| {
        let d = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        r.map(|c| c / (2.0 * d * d * d))
    });
    assert!(rel_max_diff(&sos, &analytic) < 1e-13);

    let fd = magnetic_curvature_bilinear(&bundle);
    assert!(
        rel_max_diff(&fd, &sos) < 0.05,
        "{}",
        rel_max_diff(&fd, &sos)
    );
    let curl = magnetic_curvature(&potentials_eigenstate(&bundle));
    assert!(
        rel_max_diff(&curl, &sos) < 0.05,
        "{}",
        rel_max_diff(&curl, &sos)
    );
}

#[test]
fn magnetic_curvature_routes_converge() {
    let err = |n: usize| {
        let g = cube(n, 0.4, 1.2);
        let bundle = build_eigenbundle(&SpinZeeman, &g, 0, &opts()).unwrap();
        let sos = curvature_sum_over_states(&SpinZeeman, &bundle).unwrap();
        magnetic_curvature_bilinear(&bundle)
            .sub(&sos)
            .unwrap()
            .max_abs()
    };
    let order = (err(9) / err(17)).log2();
    assert!((1.7..=2.3).contains(&order), "order {order}");
}

#[test]
fn static_scalar_potential_and_phase_vanish() {
    let g = cube(4, 0.5, 1.1)
        .with_time(Some(TimeAxis {
            t0: 0.0,
            dt: 0.1,
            nt: 5,
        }))
        .unwrap();
    let bundle = build_eigenbundle(&SpinZeeman, &g, 0, &opts()).unwrap();
    assert!(scalar_potential_eigenstate(&bundle).max_abs() < 1e-14);
    assert!(geometric_phase(&bundle).unwrap().gamma.max_abs() < 1e-14);
    let no_time = build_eigenbundle(&SpinZeeman, &cube(4, 0.5, 1.1), 0, &opts()).unwrap();
    assert_eq!(scalar_potential_eigenstate(&no_time).max_abs(), 0.0);
}

#[test]
fn rotating_scalar_potential_matches_analytic_link_phases() {
    let (theta, omega): (f64, f64) = (0.9, 1.4);
    let g = timeline(41, 2.0);
    let dt = g.time_axis().unwrap().dt;
    let bundle = build_eigenbundle(&rotating(theta, omega), &g, 0, &opts()).unwrap();
    let phi = scalar_potential_eigenstate(&bundle);
    for tau in 1..40 {
        let t = g.time(tau);
        let n = lower_state(theta, omega * t);
        let plus = lower_state(theta, omega * (t + dt));
        let minus = lower_state(theta, omega * (t - dt));
        let link = |m: [C64; 2]| (n[0].conj() * m[0] + n[1].conj() * m[1]).arg();
        let oracle = (link(plus) - link(minus)) / (2.0 * dt);
        assert!((phi.values[tau] - oracle).abs() < 1e-12, "tau {tau}");
        let exact = -omega * (theta / 2.0).sin().powi(2);
        assert!((phi.values[tau] - exact).abs() < 1e-2);
    }
}

#[test]
fn gauge_shift_of_scalar_potential() {
    let c = 0.37;
    let g = cube(3, 0.5, 1.0)
        .with_time(Some(TimeAxis {
            t0: 0.0,
            dt: 0.05,
            nt: 21,
        }))
        .unwrap();
    let fam = StaticDiagonal::new(StaticDiagonal::default_entries()).unwrap();
    let flat = build_eigenbundle(&fam, &g, 1, &opts()).unwrap();
    let phi = scalar_potential_eigenstate(&gauge_transform_apply(&flat, |_, t| c * t));
    for v in &phi.values {
        assert!((v - c).abs() < 1e-12);
    }

    let g = timeline(21, 1.0);
    let bundle = build_eigenbundle(&rotating(0.7, 1.0), &g, 0, &opts()).unwrap();
    let shifted = gauge_transform_apply(&bundle, |_, t| c * t);
    let diff = scalar_potential_eigenstate(&shifted)
        .sub(&scalar_potential_eigenstate(&bundle))
        .unwrap();
    for v in &diff.values {
        assert!((v - c).abs() < 1e-12, "{v}");
    }
}

#[test]
fn geometric_phase_over_one_period() {
    let (theta, omega): (f64, f64) = (1.1, 2.0);
    let period = 2.0 * PI / omega;
    let exact = 2.0 * PI * (theta / 2.0).sin().powi(2);
    let err = |nt: usize| {
        let g = timeline(nt, period);
        let bundle = build_eigenbundle(&rotating(theta, omega), &g, 0, &opts()).unwrap();
        let gamma = geometric_phase(&bundle).unwrap().gamma;
        assert_eq!(gamma.values[0], 0.0);
        (gamma.values[nt - 1] - exact).abs()
    };
    let e200 = err(200);
    assert!(e200 < 0.01 * exact, "{e200}");
    let order = (err(101) / err(201)).log2();
    assert!((1.8..=2.2).contains(&order), "order {order}");
}

#[test]
fn gauge_transform_of_geometric_phase() {
    let g = timeline(31, 1.5);
    let bundle = build_eigenbundle(&rotating(0.8, 1.2), &g, 0, &opts()).unwrap();
    let lambda = |_: [f64; 3], t: f64| 0.4 * t * t + 0.3 * (2.0 * t).sin();
    let moved = gauge_transform_apply(&bundle, lambda);
    let g0 = geometric_phase(&bundle).unwrap().gamma;
    let g1 = geometric_phase(&moved).unwrap().gamma;
    for tau in 0..31 {
        let t = g.time(tau);
        let expected = -lambda([0.0; 3], t) + lambda([0.0; 3], 0.0);
        assert!(
            (g1.values[tau] - g0.values[tau] - expected).abs() < 5e-3,
            "tau {tau}"
        );
    }
    let same = gauge_transform_apply(&bundle, |_, _| 0.0);
    assert_eq!(same.vectors, bundle.vectors);
}

#[test]
fn full_potentials_on_static_diagonal() {
    let hbar = 0.8;
    let g = cube(5, 0.5, 1.3)
        .with_time(Some(TimeAxis {
            t0: 0.0,
            dt: 0.25,
            nt: 6,
        }))
        .unwrap();
    let fam = StaticDiagonal::new(StaticDiagonal::default_entries()).unwrap();
    let bundle = build_eigenbundle(&fam, &g, 1, &opts()).unwrap();
    let pot = potentials_full_wavefunction(&bundle, hbar).unwrap();
    let a_n = connection_eigenstate(&bundle);
    for p in 0..g.len() {
        let (r, t) = g.point(p);
        let v = pot.a.values[p];
        assert!((v[0] - t / hbar * 2.0 * r[0]).abs() < 1e-12);
        assert!(v[1].abs() < 1e-12 && v[2].abs() < 1e-12);
        assert!((pot.phi.values[p] + bundle.energies.values[p] / hbar).abs() < 1e-15);
        if g.unravel(p).3 == 0 {
            assert_eq!(v, a_n.values[p]);
        }
    }
    let omega = electric_curvature(&pot).unwrap();
    assert!(omega.max_abs() < 1e-12, "{}", omega.max_abs());
}

#[test]
fn full_potentials_without_time_axis() {
    let g = cube(5, 0.5, 1.3);
    let bundle = build_eigenbundle(&SpinZeeman, &g, 0, &opts()).unwrap();
    let pot = potentials_full_wavefunction(&bundle, 1.0).unwrap();
    assert_eq!(pot.a, connection_eigenstate(&bundle));
    assert_eq!(electric_curvature(&pot).unwrap().max_abs(), 0.0);
    assert_eq!(geometric_phase(&bundle).unwrap().gamma.max_abs(), 0.0);
}

#[test]
fn static_full_and_eigen_magnetic_agree() {
    let g = cube(9, -1.0, 1.0)
        .with_time(Some(TimeAxis {
            t0: 0.0,
            dt: 0.2,
            nt: 5,
        }))
        .unwrap();
    let bundle = build_eigenbundle(&SpinZeeman, &g, 0, &opts()).unwrap();
    let full = potentials_full_wavefunction(&bundle, 1.0).unwrap();
    let eigen = potentials_eigenstate(&bundle);
    let diff = magnetic_curvature(&full)
        .sub(&magnetic_curvature(&eigen))
        .unwrap();
    assert!(diff.max_abs() < 1e-11, "{}", diff.max_abs());
    assert!(electric_curvature(&full).unwrap().max_abs() < 1e-11);
}

fn drive_grid(nb: usize, nth: usize, nw: usize, nt: usize) -> ParameterGrid {
    let spacing = [
        1.0 / (nb - 1) as f64,
        0.8 / (nth - 1) as f64,
        0.2 / (nw - 1) as f64,
    ];
    let dt = 2.0 * PI / (nt - 1) as f64;
    ParameterGrid::new(
        [1.0, 0.4, 0.9],
        spacing,
        [nb, nth, nw],
        [false; 3],
        Some(TimeAxis { t0: 0.0, dt, nt }),
    )
    .unwrap()
}

fn drive_family() -> RotatingTwoLevel {
    RotatingTwoLevel {
        b0: 1.0,
        theta: 0.0,
        omega: 1.0,
        phi0: 0.2,
        axes: DriveAxes::AmplitudePolarFrequency,
    }
}

#[test]
fn rotating_electric_curvature_routes() {
    let fam = drive_family();
    let errors = |scale: usize| {
        let g = drive_grid(4 * scale + 1, 8 * scale + 1, 4 * scale + 1, 60 * scale + 1);
        let bundle = build_eigenbundle(&fam, &g, 0, &opts()).unwrap();
        let eigen = electric_curvature(&potentials_eigenstate(&bundle)).unwrap();
        let full =
            electric_curvature(&potentials_full_wavefunction(&bundle, 1.0).unwrap()).unwrap();
        let bilinear = electric_curvature_bilinear(&bundle);
        let sos = sum_over_states(&fam, &bundle).unwrap().omega;
        let analytic = VectorField::from_fn(g, |r, _| [0.0, 0.5 * r[2] * r[1].sin(), 0.0]);
        assert!(rel_max_diff(&sos, &analytic) < 1e-12);
        // both potentials carry the same stencil error
        let discretization = bilinear.sub(&sos).unwrap().max_abs();
        assert!(full.sub(&eigen).unwrap().max_abs() < discretization);
        [eigen.sub(&sos).unwrap().max_abs(), discretization]
    };
    let coarse = errors(1);
    let fine = errors(2);
    let potential_order = (coarse[0] / fine[0]).log2();
    assert!((1.7..=2.3).contains(&potential_order), "{potential_order}");
    let bilinear_order = (coarse[1] / fine[1]).log2();
    assert!(bilinear_order > 1.7, "{bilinear_order}");
}

#[test]
fn wilson_latitude_loop() {
    let theta = PI / 3.0;
    let loop_points: Vec<[f64; 3]> = (0..100)
        .map(|j| {
            let phi = 2.0 * PI * j as f64 / 100.0;
            [
                theta.sin() * phi.cos(),
                theta.sin() * phi.sin(),
                theta.cos(),
            ]
        })
        .collect();
    let phase = wilson_loop_phase_points(&SpinZeeman, 0, &loop_points, 0.0, &opts()).unwrap();
    let exact = PI * (1.0 - theta.cos());
    assert!((phase - exact).abs() < 0.02 * exact, "{phase}");

    let mut back = loop_points.clone();
    back.reverse();
    let reversed = wilson_loop_phase_points(&SpinZeeman, 0, &back, 0.0, &opts()).unwrap();
    assert!((reversed + phase).abs() < 1e-12);

    let through_origin = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
    assert_eq!(
        wilson_loop_phase_points(&SpinZeeman, 0, &through_origin, 0.0, &opts()),
        Err(Error::DegeneratePointOnLoop(0))
    );
}

#[test]
fn wilson_loop_on_grid() {
    let g = cube(21, -1.0, 1.0);
    let bundle = build_eigenbundle(&SpinZeeman, &g, 0, &opts()).unwrap();
    let b = magnetic_curvature_bilinear(&bundle);
    let rect = Rectangle {
        normal: 2,
        plane: 0.5,
        lo: [-0.4, -0.3],
        hi: [0.6, 0.5],
        positive: true,
    };
    let rim = rect.boundary(&g).unwrap();
    let phase = wilson_loop_phase(&bundle, &rim, 0).unwrap();
    let flux = surface_flux(&b, &Surface::Open(rect), 0).unwrap();
    assert!(
        (phase - flux).abs() < 0.05 * flux.abs(),
        "{phase} vs {flux}"
    );

    let back = rect.reversed().boundary(&g).unwrap();
    assert!((wilson_loop_phase(&bundle, &back, 0).unwrap() + phase).abs() < 1e-12);

    let fam = StaticDiagonal::new(StaticDiagonal::default_entries()).unwrap();
    let flat = build_eigenbundle(&fam, &cube(5, 0.5, 1.5), 1, &opts()).unwrap();
    let sq = [[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]];
    assert_eq!(wilson_loop_phase(&flat, &sq, 0).unwrap(), 0.0);
    assert!(matches!(
        wilson_loop_phase(&flat, &[[0, 0, 0], [2, 0, 0], [2, 1, 0]], 0),
        Err(Error::NonAdjacentLoopPoints { .. })
    ));
    let ring = [
        [9, 10, 10],
        [10, 10, 10],
        [11, 10, 10],
        [11, 11, 10],
        [10, 11, 10],
    ];
    assert_eq!(
        wilson_loop_phase(&bundle, &ring, 0),
        Err(Error::DegeneratePointOnLoop(1))
    );
}

fn brillouin_zone(n: usize) -> ParameterGrid {
    let h = 2.0 * PI / n as f64;
    ParameterGrid::new(
        [-PI, -PI, 0.0],
        [h, h, 1.0],
        [n, n, 1],
        [true, true, false],
        None,
    )
    .unwrap()
}

#[test]
fn lattice_chern_numbers() {
    let g = brillouin_zone(60);
    let topo = build_eigenbundle(&TwoBandLattice { m: 1.0 }, &g, 0, &opts()).unwrap();
    let c = plaquette_chern(&topo, 2, 0, 0).unwrap();
    assert_eq!(c.fluxes.len(), 3600);
    assert!((c.chern.abs() - 1.0).abs() < 1e-6, "{}", c.chern);

    let trivial = build_eigenbundle(&TwoBandLattice { m: 3.0 }, &g, 0, &opts()).unwrap();
    assert!(plaquette_chern(&trivial, 2, 0, 0).unwrap().chern.abs() < 1e-6);
}

#[test]
fn plaquette_flux_matches_sum_over_states() {
    let g = brillouin_zone(60);
    let fam = TwoBandLattice { m: 1.0 };
    let bundle = build_eigenbundle(&fam, &g, 0, &opts()).unwrap();
    let plaq = plaquette_chern(&bundle, 2, 0, 0).unwrap();
    let sos = curvature_sum_over_states(&fam, &bundle).unwrap();
    let h = g.spacing()[0];
    let n = 60;
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for u in 0..n {
        for w in 0..n {
            let corner = |a: usize, b: usize| sos.get(a % n, b % n, 0, 0)[2];
            let avg =
                0.25 * (corner(u, w) + corner(u + 1, w) + corner(u + 1, w + 1) + corner(u, w + 1));
            worst = worst.max((plaq.fluxes[u * n + w] / (h * h) - avg).abs());
            scale = scale.max(avg.abs());
        }
    }
    assert!(worst < 0.05 * scale, "{worst} vs {scale}");
    // plaquette sign agrees with the sum-over-states sign
    let total: f64 = sos.values.iter().map(|v| v[2]).sum::<f64>() * h * h / (2.0 * PI);
    assert!((total - plaq.chern).abs() < 0.05);
}

#[test]
fn curvatures_are_gauge_invariant() {
    let g = cube(9, 0.3, 1.1);
    let bundle = build_eigenbundle(&SpinZeeman, &g, 0, &opts()).unwrap();
    let lambda = |r: [f64; 3], _| 0.8 * (1.3 * r[0]).sin() + 0.5 * (r[1] * r[2]).cos();
    let moved = gauge_transform_apply(&bundle, lambda);
    let b0 = magnetic_curvature(&potentials_eigenstate(&bundle));
    let b1 = magnetic_curvature(&potentials_eigenstate(&moved));
    let tol = magnetic_curvature_bilinear(&bundle)
        .sub(&curvature_sum_over_states(&SpinZeeman, &bundle).unwrap())
        .unwrap()
        .max_abs();
    assert!(
        b1.sub(&b0).unwrap().max_abs() < 10.0 * tol,
        "{} vs {tol}",
        b1.sub(&b0).unwrap().max_abs()
    );
    let bb0 = magnetic_curvature_bilinear(&bundle);
    let bb1 = magnetic_curvature_bilinear(&moved);
    assert!(bb1.sub(&bb0).unwrap().max_abs() < 10.0 * tol);

    let grad = VectorField::from_fn(g, |r, _| {
        [
            0.8 * 1.3 * (1.3 * r[0]).cos(),
            -0.5 * r[2] * (r[1] * r[2]).sin(),
            -0.5 * r[1] * (r[1] * r[2]).sin(),
        ]
    });
    let shift = connection_eigenstate(&moved)
        .sub(&connection_eigenstate(&bundle))
        .unwrap();
    assert!(shift.add(&grad).unwrap().max_abs() < 10.0 * tol);
}

#[test]
fn sum_over_states_flags_unmasked_small_gaps() {
    let g = cube(3, 0.5, 1.0);
    let mut bundle = build_eigenbundle(&SpinZeeman, &g, 0, &opts()).unwrap();
    bundle.gap_tol = 10.0;
    assert!(matches!(
        curvature_sum_over_states(&SpinZeeman, &bundle),
        Err(Error::GapTooSmall { .. })
    ));
}

#[test]
fn overlap_floor_masks_band_inversions() {
    // band 0 of diag(x, -x) switches from e1 to e2 across x = 0
    use crate::model::Monomial;
    let fam = StaticDiagonal::new(alloc::vec![
        Polynomial(alloc::vec![Monomial::new(1.0, [1, 0, 0])]),
        Polynomial(alloc::vec![Monomial::new(-1.0, [1, 0, 0])]),
    ])
    .unwrap();
    let g = ParameterGrid::spatial([-0.55, 0.0, 0.0], [0.1, 1.0, 1.0], [12, 1, 1]).unwrap();
    let bundle = build_eigenbundle(&fam, &g, 0, &opts()).unwrap();
    assert!(bundle.degenerate[5] && bundle.degenerate[6]);
    assert_eq!(bundle.valid_count(), 10);
}
