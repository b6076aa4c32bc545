use super::*;
use crate::numeric::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn max_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.axpy(-1.0, b).max_abs()
}

fn params() -> ModelParams {
    ModelParams {
        b0: 1.3,
        theta: 0.8,
        omega: 1.7,
        phi0: 0.3,
        ..Default::default()
    }
}

#[test]
fn spin_zeeman_examples() {
    let reg = FamilyRegistry::with_builtins(&ModelParams::default()).unwrap();
    let h = reg.evaluate("spin-zeeman", [0.0, 0.0, 1.0], 0.0).unwrap();
    assert_eq!(h, pauli_vector([0.0, 0.0, 1.0]));
    let h0 = reg.evaluate("spin-zeeman", [0.0; 3], 0.0).unwrap();
    assert_eq!(h0.max_abs(), 0.0);

    let fam = reg.get("spin-zeeman").unwrap();
    let g = gradient_hamiltonian(
        fam.as_ref(),
        [0.3, -2.0, 5.0],
        1.0,
        &DerivativeSteps::default(),
    )
    .unwrap();
    assert_eq!(g[0], pauli_vector([1.0, 0.0, 0.0]));
    assert_eq!(g[1], pauli_vector([0.0, 1.0, 0.0]));
    assert_eq!(g[2], pauli_vector([0.0, 0.0, 1.0]));
    let dt = time_derivative_hamiltonian(
        fam.as_ref(),
        [0.3, -2.0, 5.0],
        4.0,
        &DerivativeSteps::default(),
    )
    .unwrap();
    assert_eq!(dt.max_abs(), 0.0);
}

#[test]
fn unknown_family_and_non_finite_input() {
    let reg = FamilyRegistry::with_builtins(&ModelParams::default()).unwrap();
    assert_eq!(
        reg.evaluate("nope", [0.0; 3], 0.0),
        Err(Error::UnknownFamily("nope".into()))
    );
    assert_eq!(
        reg.evaluate("spin-zeeman", [f64::NAN, 0.0, 0.0], 0.0),
        Err(Error::NonFiniteInput)
    );
    assert_eq!(
        reg.evaluate("spin-zeeman", [0.0; 3], f64::INFINITY),
        Err(Error::NonFiniteInput)
    );
}

#[test]
fn rotating_two_level_axis_aligned() {
    let fam = RotatingTwoLevel {
        b0: 2.5,
        theta: 0.0,
        omega: 3.0,
        phi0: 0.1,
        axes: DriveAxes::Fixed,
    };
    for t in [0.0, 0.7, 12.0] {
        let h = evaluate_hamiltonian(&fam, [9.0, 9.0, 9.0], t).unwrap();
        assert!(max_diff(&h, &pauli_vector([0.0, 0.0, 2.5])) < 1e-15);
    }
}

#[test]
fn rotating_two_level_time_derivative_at_origin_of_time() {
    // d/dt of B0 (sin th cos wt, sin th sin wt, cos th) at t = 0 is B0 sin th w y-hat.
    let (b0, theta, omega) = (1.3, 0.8, 1.7);
    let fam = RotatingTwoLevel {
        b0,
        theta,
        omega,
        phi0: 0.0,
        axes: DriveAxes::Fixed,
    };
    let dt = time_derivative_hamiltonian(&fam, [0.0; 3], 0.0, &DerivativeSteps::default()).unwrap();
    let expected = pauli_vector([0.0, b0 * theta.sin() * omega, 0.0]);
    assert!(max_diff(&dt, &expected) < 1e-15);
}

#[test]
fn static_diagonal_gradient() {
    let fam = StaticDiagonal::new(StaticDiagonal::default_entries()).unwrap();
    let x = 0.37;
    let g = gradient_hamiltonian(&fam, [x, 1.0, -2.0], 0.0, &DerivativeSteps::default()).unwrap();
    assert_eq!(g[0], ComplexMatrix::from_diagonal(&[2.0 * x, 0.0]));
    assert_eq!(g[1].max_abs(), 0.0);
    assert_eq!(g[2].max_abs(), 0.0);
    assert!(StaticDiagonal::new(vec![]).is_err());
}

#[test]
fn two_band_lattice_is_static() {
    let fam = TwoBandLattice { m: 1.0 };
    let dt = time_derivative_hamiltonian(&fam, [0.4, -1.0, 0.0], 2.0, &DerivativeSteps::default())
        .unwrap();
    assert_eq!(dt.max_abs(), 0.0);
}

/// Central-difference oracle with step 1e-4, independent of the families' analytic code.
fn fd_gradient(f: &dyn HamiltonianFamily, r: [f64; 3], t: f64) -> [ComplexMatrix; 3] {
    let h = 1e-4;
    core::array::from_fn(|a| {
        let mut p = r;
        let mut m = r;
        p[a] += h;
        m[a] -= h;
        f.evaluate(p, t)
            .axpy(-1.0, &f.evaluate(m, t))
            .scale(0.5 / h)
    })
}

fn fd_time(f: &dyn HamiltonianFamily, r: [f64; 3], t: f64) -> ComplexMatrix {
    let h = 1e-4;
    f.evaluate(r, t + h)
        .axpy(-1.0, &f.evaluate(r, t - h))
        .scale(0.5 / h)
}

#[test]
fn analytic_derivatives_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut families: Vec<Arc<dyn HamiltonianFamily>> = Vec::new();
    for name in BUILTIN_FAMILIES {
        families.push(builtin_family(name, &params()).unwrap());
    }
    for axes in [DriveAxes::Fixed, DriveAxes::AmplitudePolarPhase] {
        let mut p = params();
        p.axes = axes;
        families.push(builtin_family("rotating-two-level", &p).unwrap());
    }
    let diag = vec![
        Polynomial(vec![
            Monomial::new(0.5, [1, 2, 0]),
            Monomial::new(-1.0, [0, 0, 3]),
        ]),
        Polynomial::constant(0.25),
        Polynomial(vec![Monomial::new(2.0, [1, 1, 1])]),
    ];
    families.push(Arc::new(StaticDiagonal::new(diag).unwrap()));

    for fam in &families {
        for _ in 0..50 {
            let r = [
                rng.gen_range(-1.5..1.5),
                rng.gen_range(-1.5..1.5),
                rng.gen_range(-1.5..1.5),
            ];
            let t = rng.gen_range(0.0..3.0);
            let h = fam.evaluate(r, t);
            assert!(
                h.hermiticity_defect() <= 1e-12 * h.max_abs(),
                "{}",
                fam.name()
            );

            let analytic = fam
                .gradient(r, t)
                .expect("built-ins carry analytic gradients");
            let oracle = fd_gradient(fam.as_ref(), r, t);
            for (a, o) in analytic.iter().zip(&oracle) {
                assert!(a.hermiticity_defect() <= 1e-12, "{}", fam.name());
                assert!(
                    max_diff(a, o) <= 1e-6,
                    "{} gradient off by {}",
                    fam.name(),
                    max_diff(a, o)
                );
            }
            let dt = fam.time_derivative(r, t).unwrap();
            assert!(dt.hermiticity_defect() <= 1e-12);
            assert!(
                max_diff(&dt, &fd_time(fam.as_ref(), r, t)) <= 1e-6,
                "{} dt",
                fam.name()
            );
        }
    }
}

#[test]
fn finite_difference_fallback_for_callbacks() {
    let fam = CallbackFamily::new("custom", 2, |r, t| {
        pauli_vector([r[0] * r[1], t * r[2], (r[0] + t).sin()])
    });
    let r = [0.4, -0.3, 0.9];
    let t = 0.6;
    let steps = DerivativeSteps::default();
    let g = gradient_hamiltonian(&fam, r, t, &steps).unwrap();
    let expected = [
        pauli_vector([r[1], 0.0, (r[0] + t).cos()]),
        pauli_vector([r[0], 0.0, 0.0]),
        pauli_vector([0.0, t, 0.0]),
    ];
    for (a, e) in g.iter().zip(&expected) {
        assert!(max_diff(a, e) < 1e-6);
    }
    let dt = time_derivative_hamiltonian(&fam, r, t, &steps).unwrap();
    assert!(max_diff(&dt, &pauli_vector([0.0, r[2], (r[0] + t).cos()])) < 1e-6);

    let mut reg = FamilyRegistry::new();
    reg.register(Arc::new(fam));
    assert_eq!(reg.names().collect::<Vec<_>>(), vec!["custom"]);
    let h = reg.evaluate("custom", r, t).unwrap();
    assert_eq!(h[(0, 1)], C64::new(r[0] * r[1], -t * r[2]));
}
