//! Parameterized Hamiltonian families `H(R, t)`.
//!
//! A family maps a 3-component parameter point and a time to a Hermitian
//! matrix. Analytic derivatives are optional; when a family does not supply
//! them, central finite differences of `evaluate` stand in.

mod builtin;

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::numeric::ComplexMatrix;

pub use builtin::{
    pauli_vector, DriveAxes, Monomial, Polynomial, RotatingTwoLevel, SpinZeeman, StaticDiagonal,
    TwoBandLattice,
};

/// Names of the registered built-in families.
pub const BUILTIN_FAMILIES: [&str; 4] = [
    "spin-zeeman",
    "rotating-two-level",
    "two-band-lattice",
    "static-diagonal",
];

pub trait HamiltonianFamily: Send + Sync {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    fn evaluate(&self, r: [f64; 3], t: f64) -> ComplexMatrix;

    /// Analytic `(dH/dR_0, dH/dR_1, dH/dR_2)`, if known.
    fn gradient(&self, _r: [f64; 3], _t: f64) -> Option<[ComplexMatrix; 3]> {
        None
    }

    /// Analytic `dH/dt`, if known.
    fn time_derivative(&self, _r: [f64; 3], _t: f64) -> Option<ComplexMatrix> {
        None
    }

    /// True when `H` does not depend on `t`.
    fn is_static(&self) -> bool {
        false
    }
}

type EvalFn = dyn Fn([f64; 3], f64) -> ComplexMatrix + Send + Sync;
type GradFn = dyn Fn([f64; 3], f64) -> [ComplexMatrix; 3] + Send + Sync;

/// A family assembled from user callbacks.
pub struct CallbackFamily {
    name: String,
    dim: usize,
    is_static: bool,
    evaluate: Box<EvalFn>,
    gradient: Option<Box<GradFn>>,
    time_derivative: Option<Box<EvalFn>>,
}

impl CallbackFamily {
    pub fn new(
        name: &str,
        dim: usize,
        evaluate: impl Fn([f64; 3], f64) -> ComplexMatrix + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.to_string(),
            dim,
            is_static: false,
            evaluate: Box::new(evaluate),
            gradient: None,
            time_derivative: None,
        }
    }

    pub fn with_gradient(
        mut self,
        gradient: impl Fn([f64; 3], f64) -> [ComplexMatrix; 3] + Send + Sync + 'static,
    ) -> Self {
        self.gradient = Some(Box::new(gradient));
        self
    }

    pub fn with_time_derivative(
        mut self,
        dt: impl Fn([f64; 3], f64) -> ComplexMatrix + Send + Sync + 'static,
    ) -> Self {
        self.time_derivative = Some(Box::new(dt));
        self
    }

    pub fn static_in_time(mut self) -> Self {
        self.is_static = true;
        self
    }
}

impl HamiltonianFamily for CallbackFamily {
    fn name(&self) -> &str {
        &self.name
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn evaluate(&self, r: [f64; 3], t: f64) -> ComplexMatrix {
        (self.evaluate)(r, t)
    }
    fn gradient(&self, r: [f64; 3], t: f64) -> Option<[ComplexMatrix; 3]> {
        self.gradient.as_ref().map(|g| g(r, t))
    }
    fn time_derivative(&self, r: [f64; 3], t: f64) -> Option<ComplexMatrix> {
        self.time_derivative.as_ref().map(|g| g(r, t))
    }
    fn is_static(&self) -> bool {
        self.is_static
    }
}

/// Parameters read by the built-in families.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub b0: f64,
    pub theta: f64,
    pub omega: f64,
    pub phi0: f64,
    pub axes: DriveAxes,
    pub m: f64,
    /// Diagonal entries of `static-diagonal`; its dimension is the length.
    pub diagonal: Vec<Polynomial>,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            b0: 1.0,
            theta: 0.7,
            omega: 1.0,
            phi0: 0.0,
            axes: DriveAxes::AmplitudePolarFrequency,
            m: 1.0,
            diagonal: StaticDiagonal::default_entries(),
        }
    }
}

/// Instantiates a built-in family by name.
pub fn builtin_family(name: &str, params: &ModelParams) -> Result<Arc<dyn HamiltonianFamily>> {
    let family: Arc<dyn HamiltonianFamily> = match name {
        "spin-zeeman" => Arc::new(SpinZeeman),
        "rotating-two-level" => Arc::new(RotatingTwoLevel {
            b0: params.b0,
            theta: params.theta,
            omega: params.omega,
            phi0: params.phi0,
            axes: params.axes,
        }),
        "two-band-lattice" => Arc::new(TwoBandLattice { m: params.m }),
        "static-diagonal" => Arc::new(StaticDiagonal::new(params.diagonal.clone())?),
        other => return Err(Error::UnknownFamily(other.to_string())),
    };
    Ok(family)
}

/// Name-indexed collection of families. Populated during setup, read-only after.
#[derive(Default, Clone)]
pub struct FamilyRegistry {
    families: BTreeMap<String, Arc<dyn HamiltonianFamily>>,
}

impl FamilyRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registry holding every built-in family instantiated with `params`.
    pub fn with_builtins(params: &ModelParams) -> Result<Self> {
        let mut reg = Self::new();
        for name in BUILTIN_FAMILIES {
            reg.register(builtin_family(name, params)?);
        }
        Ok(reg)
    }

    pub fn register(&mut self, family: Arc<dyn HamiltonianFamily>) {
        self.families.insert(family.name().to_string(), family);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn HamiltonianFamily>> {
        self.families
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownFamily(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.families.keys().map(String::as_str)
    }

    pub fn evaluate(&self, name: &str, r: [f64; 3], t: f64) -> Result<ComplexMatrix> {
        evaluate_hamiltonian(self.get(name)?.as_ref(), r, t)
    }
}

/// Finite-difference steps used when a family has no analytic derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeSteps {
    pub spatial: [f64; 3],
    pub time: f64,
}

impl Default for DerivativeSteps {
    fn default() -> Self {
        Self {
            spatial: [1e-5; 3],
            time: 1e-5,
        }
    }
}

impl DerivativeSteps {
    /// Steps proportional to the grid spacings (`scale * h`).
    pub fn scaled(spacing: [f64; 3], dt: Option<f64>, scale: f64) -> Self {
        Self {
            spatial: spacing.map(|h| scale * h),
            time: scale * dt.unwrap_or(1.0),
        }
    }
}

fn check_inputs(r: [f64; 3], t: f64) -> Result<()> {
    if r.iter().all(|x| x.is_finite()) && t.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFiniteInput)
    }
}

fn check_output(family: &dyn HamiltonianFamily, m: ComplexMatrix) -> Result<ComplexMatrix> {
    if m.dim() != family.dim() {
        return Err(Error::DimensionMismatch {
            left: family.dim(),
            right: m.dim(),
        });
    }
    if !m.is_finite() {
        return Err(Error::NonFiniteInput);
    }
    Ok(m)
}

pub fn evaluate_hamiltonian(
    family: &dyn HamiltonianFamily,
    r: [f64; 3],
    t: f64,
) -> Result<ComplexMatrix> {
    check_inputs(r, t)?;
    check_output(family, family.evaluate(r, t))
}

/// `dH/dR` from the family when available, else central differences.
pub fn gradient_hamiltonian(
    family: &dyn HamiltonianFamily,
    r: [f64; 3],
    t: f64,
    steps: &DerivativeSteps,
) -> Result<[ComplexMatrix; 3]> {
    check_inputs(r, t)?;
    if let Some(g) = family.gradient(r, t) {
        let [a, b, c] = g;
        return Ok([
            check_output(family, a)?,
            check_output(family, b)?,
            check_output(family, c)?,
        ]);
    }
    let mut out: [ComplexMatrix; 3] = core::array::from_fn(|_| ComplexMatrix::zeros(family.dim()));
    for (axis, slot) in out.iter_mut().enumerate() {
        let h = steps.spatial[axis];
        let mut plus = r;
        let mut minus = r;
        plus[axis] += h;
        minus[axis] -= h;
        let hp = evaluate_hamiltonian(family, plus, t)?;
        let hm = evaluate_hamiltonian(family, minus, t)?;
        *slot = hp.axpy(-1.0, &hm).scale(0.5 / h);
    }
    Ok(out)
}

/// `dH/dt` from the family when available, else central differences.
pub fn time_derivative_hamiltonian(
    family: &dyn HamiltonianFamily,
    r: [f64; 3],
    t: f64,
    steps: &DerivativeSteps,
) -> Result<ComplexMatrix> {
    check_inputs(r, t)?;
    if family.is_static() {
        return Ok(ComplexMatrix::zeros(family.dim()));
    }
    if let Some(m) = family.time_derivative(r, t) {
        return check_output(family, m);
    }
    let h = steps.time;
    let hp = evaluate_hamiltonian(family, r, t + h)?;
    let hm = evaluate_hamiltonian(family, r, t - h)?;
    Ok(hp.axpy(-1.0, &hm).scale(0.5 / h))
}

#[cfg(test)]
mod tests;
