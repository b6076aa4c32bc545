use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use super::HamiltonianFamily;
use crate::error::{Error, Result};
use crate::numeric::{ComplexMatrix, C64};

/// `d . sigma` for a real 3-vector `d`.
pub fn pauli_vector(d: [f64; 3]) -> ComplexMatrix {
    let [x, y, z] = d;
    ComplexMatrix::from_row_major(
        2,
        vec![
            C64::new(z, 0.0),
            C64::new(x, -y),
            C64::new(x, y),
            C64::new(-z, 0.0),
        ],
    )
    .expect("2x2")
}

/// `H = R . sigma`; a Berry monopole sits at the origin.
#[derive(Debug, Clone, Copy, Default)]
pub struct SpinZeeman;

impl HamiltonianFamily for SpinZeeman {
    fn name(&self) -> &str {
        "spin-zeeman"
    }
    fn dim(&self) -> usize {
        2
    }
    fn evaluate(&self, r: [f64; 3], _t: f64) -> ComplexMatrix {
        pauli_vector(r)
    }
    fn gradient(&self, _r: [f64; 3], _t: f64) -> Option<[ComplexMatrix; 3]> {
        Some([
            pauli_vector([1.0, 0.0, 0.0]),
            pauli_vector([0.0, 1.0, 0.0]),
            pauli_vector([0.0, 0.0, 1.0]),
        ])
    }
    fn time_derivative(&self, _r: [f64; 3], _t: f64) -> Option<ComplexMatrix> {
        Some(ComplexMatrix::zeros(2))
    }
    fn is_static(&self) -> bool {
        true
    }
}

/// How grid coordinates enter the rotating drive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriveAxes {
    /// Parameters come from the configuration; `R` is ignored.
    Fixed,
    /// `R = (B0, theta, phi0)`.
    AmplitudePolarPhase,
    /// `R = (B0, theta, omega)`.
    AmplitudePolarFrequency,
}

/// `H(t) = B0 (sin th cos(w t + phi0), sin th sin(w t + phi0), cos th) . sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotatingTwoLevel {
    pub b0: f64,
    pub theta: f64,
    pub omega: f64,
    pub phi0: f64,
    pub axes: DriveAxes,
}

impl RotatingTwoLevel {
    /// `(B0, theta, omega, phi0)` at grid point `r`.
    fn params(&self, r: [f64; 3]) -> (f64, f64, f64, f64) {
        match self.axes {
            DriveAxes::Fixed => (self.b0, self.theta, self.omega, self.phi0),
            DriveAxes::AmplitudePolarPhase => (r[0], r[1], self.omega, r[2]),
            DriveAxes::AmplitudePolarFrequency => (r[0], r[1], r[2], self.phi0),
        }
    }

    fn unit_field(theta: f64, phi: f64) -> [f64; 3] {
        [
            theta.sin() * phi.cos(),
            theta.sin() * phi.sin(),
            theta.cos(),
        ]
    }
}

impl HamiltonianFamily for RotatingTwoLevel {
    fn name(&self) -> &str {
        "rotating-two-level"
    }
    fn dim(&self) -> usize {
        2
    }
    fn evaluate(&self, r: [f64; 3], t: f64) -> ComplexMatrix {
        let (b0, theta, omega, phi0) = self.params(r);
        let n = Self::unit_field(theta, omega * t + phi0);
        pauli_vector(n.map(|c| b0 * c))
    }

    fn gradient(&self, r: [f64; 3], t: f64) -> Option<[ComplexMatrix; 3]> {
        let (b0, theta, omega, phi0) = self.params(r);
        let phi = omega * t + phi0;
        let d_b0 = Self::unit_field(theta, phi);
        let d_theta = [
            b0 * theta.cos() * phi.cos(),
            b0 * theta.cos() * phi.sin(),
            -b0 * theta.sin(),
        ];
        let d_phi = [
            -b0 * theta.sin() * phi.sin(),
            b0 * theta.sin() * phi.cos(),
            0.0,
        ];
        let zero = ComplexMatrix::zeros(2);
        Some(match self.axes {
            DriveAxes::Fixed => [zero.clone(), zero.clone(), zero],
            DriveAxes::AmplitudePolarPhase => [
                pauli_vector(d_b0),
                pauli_vector(d_theta),
                pauli_vector(d_phi),
            ],
            DriveAxes::AmplitudePolarFrequency => [
                pauli_vector(d_b0),
                pauli_vector(d_theta),
                pauli_vector(d_phi.map(|c| c * t)),
            ],
        })
    }

    fn time_derivative(&self, r: [f64; 3], t: f64) -> Option<ComplexMatrix> {
        let (b0, theta, omega, phi0) = self.params(r);
        let phi = omega * t + phi0;
        let w = b0 * theta.sin() * omega;
        Some(pauli_vector([-w * phi.sin(), w * phi.cos(), 0.0]))
    }
}

/// `H(q) = sin qx sx + sin qy sy + (m - cos qx - cos qy) sz`; `q_z` is unused.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoBandLattice {
    pub m: f64,
}

impl HamiltonianFamily for TwoBandLattice {
    fn name(&self) -> &str {
        "two-band-lattice"
    }
    fn dim(&self) -> usize {
        2
    }
    fn evaluate(&self, q: [f64; 3], _t: f64) -> ComplexMatrix {
        pauli_vector([q[0].sin(), q[1].sin(), self.m - q[0].cos() - q[1].cos()])
    }
    fn gradient(&self, q: [f64; 3], _t: f64) -> Option<[ComplexMatrix; 3]> {
        Some([
            pauli_vector([q[0].cos(), 0.0, q[0].sin()]),
            pauli_vector([0.0, q[1].cos(), q[1].sin()]),
            ComplexMatrix::zeros(2),
        ])
    }
    fn time_derivative(&self, _q: [f64; 3], _t: f64) -> Option<ComplexMatrix> {
        Some(ComplexMatrix::zeros(2))
    }
    fn is_static(&self) -> bool {
        true
    }
}

/// `coef * x^px * y^py * z^pz`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monomial {
    pub coef: f64,
    pub powers: [u32; 3],
}

impl Monomial {
    pub fn new(coef: f64, powers: [u32; 3]) -> Self {
        Self { coef, powers }
    }

    fn eval(&self, r: [f64; 3]) -> f64 {
        let mut v = self.coef;
        for (x, &p) in r.iter().zip(&self.powers) {
            v *= x.powi(p as i32);
        }
        v
    }

    fn partial(&self, r: [f64; 3], axis: usize) -> f64 {
        let p = self.powers[axis];
        if p == 0 {
            return 0.0;
        }
        let mut d = *self;
        d.coef *= p as f64;
        d.powers[axis] -= 1;
        d.eval(r)
    }
}

/// Real polynomial in `R`, a sum of monomials (empty = 0).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Polynomial(pub Vec<Monomial>);

impl Polynomial {
    pub fn constant(c: f64) -> Self {
        Self(vec![Monomial::new(c, [0, 0, 0])])
    }

    pub fn eval(&self, r: [f64; 3]) -> f64 {
        self.0.iter().map(|m| m.eval(r)).sum()
    }

    pub fn partial(&self, r: [f64; 3], axis: usize) -> f64 {
        self.0.iter().map(|m| m.partial(r, axis)).sum()
    }
}

/// `H = diag(f_1(R), ..., f_N(R))`; every curvature vanishes identically.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticDiagonal {
    entries: Vec<Polynomial>,
}

impl StaticDiagonal {
    pub fn new(entries: Vec<Polynomial>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidModel(
                "static-diagonal needs at least one entry".into(),
            ));
        }
        let finite = entries
            .iter()
            .flat_map(|p| &p.0)
            .all(|m| m.coef.is_finite());
        if !finite {
            return Err(Error::InvalidModel(
                "static-diagonal coefficients must be finite".into(),
            ));
        }
        Ok(Self { entries })
    }

    /// `f = (x^2, 0)`.
    pub fn default_entries() -> Vec<Polynomial> {
        vec![
            Polynomial(vec![Monomial::new(1.0, [2, 0, 0])]),
            Polynomial::default(),
        ]
    }

    pub fn entries(&self) -> &[Polynomial] {
        &self.entries
    }
}

impl HamiltonianFamily for StaticDiagonal {
    fn name(&self) -> &str {
        "static-diagonal"
    }
    fn dim(&self) -> usize {
        self.entries.len()
    }
    fn evaluate(&self, r: [f64; 3], _t: f64) -> ComplexMatrix {
        let d: Vec<f64> = self.entries.iter().map(|p| p.eval(r)).collect();
        ComplexMatrix::from_diagonal(&d)
    }
    fn gradient(&self, r: [f64; 3], _t: f64) -> Option<[ComplexMatrix; 3]> {
        Some(core::array::from_fn(|axis| {
            let d: Vec<f64> = self.entries.iter().map(|p| p.partial(r, axis)).collect();
            ComplexMatrix::from_diagonal(&d)
        }))
    }
    fn time_derivative(&self, _r: [f64; 3], _t: f64) -> Option<ComplexMatrix> {
        Some(ComplexMatrix::zeros(self.dim()))
    }
    fn is_static(&self) -> bool {
        true
    }
}
