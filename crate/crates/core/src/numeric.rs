//! Dense complex linear algebra for small Hermitian matrices.
//!
//! Everything here is deterministic: identical input bits give identical
//! output bits, which the field dumps rely on for byte-identical reruns.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use num_complex::Complex;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Relative Hermiticity tolerance used when none is configured.
pub const DEFAULT_HERM_TOL: f64 = 1e-12;
/// Jacobi sweep limit used when none is configured.
pub const DEFAULT_MAX_SWEEPS: usize = 100;
/// Magnitude ties closer than this select the lowest index in [`phase_fix`].
pub const PHASE_TIE_TOL: f64 = 1e-12;

/// Square complex matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(d, 0.0);
        }
        m
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_major(dim: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                left: dim * dim,
                right: data.len(),
            });
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// `max_ij |H_ij - conj(H_ji)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim;
        let mut defect = 0.0f64;
        for i in 0..n {
            for j in i..n {
                defect = defect.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        defect
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    /// Entrywise `self + s * other`.
    pub fn axpy(&self, s: f64, other: &Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b * s)
            .collect();
        Self {
            dim: self.dim,
            data,
        }
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        let n = self.dim;
        (0..n)
            .map(|i| {
                let row = &self.data[i * n..(i + 1) * n];
                row.iter()
                    .zip(v)
                    .fold(C64::new(0.0, 0.0), |acc, (a, b)| acc + a * b)
            })
            .collect()
    }

    /// `<u| self |v>`.
    pub fn sandwich(&self, u: &[C64], v: &[C64]) -> C64 {
        let hv = self.mul_vec(v);
        u.iter()
            .zip(&hv)
            .fold(C64::new(0.0, 0.0), |acc, (a, b)| acc + a.conj() * b)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

/// One eigenvalue with its unit-norm eigenvector.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<C64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenSolverOptions {
    /// Hermiticity tolerance relative to `max|H|`.
    pub herm_tol: f64,
    pub max_sweeps: usize,
}

impl Default for EigenSolverOptions {
    fn default() -> Self {
        Self {
            herm_tol: DEFAULT_HERM_TOL,
            max_sweeps: DEFAULT_MAX_SWEEPS,
        }
    }
}

/// Eigendecomposition of a Hermitian matrix with default options.
pub fn hermitian_eigensystem(h: &ComplexMatrix) -> Result<Vec<EigenPair>> {
    hermitian_eigensystem_with(h, &EigenSolverOptions::default())
}

/// Cyclic complex Jacobi eigensolver. Eigenvalues are returned ascending.
pub fn hermitian_eigensystem_with(
    h: &ComplexMatrix,
    opts: &EigenSolverOptions,
) -> Result<Vec<EigenPair>> {
    let n = h.dim();
    if n == 0 {
        return Err(Error::DimensionMismatch { left: 1, right: 0 });
    }
    if !h.is_finite() {
        return Err(Error::NonFiniteInput);
    }
    let tolerance = opts.herm_tol * h.max_abs();
    let defect = h.hermiticity_defect();
    if defect > tolerance {
        return Err(Error::NonHermitianInput { defect, tolerance });
    }

    // Work on the exactly Hermitian part so tiny input asymmetry cannot leak in.
    let mut a = ComplexMatrix::zeros(n);
    for i in 0..n {
        a[(i, i)] = C64::new(h[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            let z = (h[(i, j)] + h[(j, i)].conj()) * 0.5;
            a[(i, j)] = z;
            a[(j, i)] = z.conj();
        }
    }
    let mut v = ComplexMatrix::identity(n);
    let frob = a.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();

    let mut converged = false;
    for _ in 0..=opts.max_sweeps {
        let off = off_diagonal_norm(&a);
        if off == 0.0 || off <= 1e-3 * f64::EPSILON * frob {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged {
        return Err(Error::ConvergenceFailure {
            sweeps: opts.max_sweeps,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[(x, x)].re.total_cmp(&a[(y, y)].re).then(x.cmp(&y)));
    Ok(order
        .into_iter()
        .map(|c| EigenPair {
            value: a[(c, c)].re,
            vector: (0..n).map(|r| v[(r, c)]).collect(),
        })
        .collect())
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.dim();
    let mut s = 0.0;
    for p in 0..n {
        for q in (p + 1)..n {
            s += a[(p, q)].norm_sqr();
        }
    }
    (2.0 * s).sqrt()
}

/// Annihilates `a[p][q]` with the unitary `G = diag(1, e^{-i phi}) R(c, s)`
/// acting on the (p, q) plane, updating `a <- G^H a G` and `v <- v G`.
fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let e = apq / r;
    let theta = (a[(q, q)].re - a[(p, p)].re) / (2.0 * r);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
        sign / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let ec = e.conj();
    let n = a.dim();

    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * c - akq * ec * s;
        a[(k, q)] = akp * s + akq * ec * c;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = apk * c - aqk * e * s;
        a[(q, k)] = apk * s + aqk * e * c;
    }
    a[(p, q)] = C64::new(0.0, 0.0);
    a[(q, p)] = C64::new(0.0, 0.0);
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c - vkq * ec * s;
        v[(k, q)] = vkp * s + vkq * ec * c;
    }
}

/// Index of the largest-magnitude component, lowest index on ties.
pub fn dominant_index(v: &[C64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, z) in v.iter().enumerate() {
        let m = z.norm();
        match best {
            None => best = Some((i, m)),
            Some((_, bm)) if m > bm + PHASE_TIE_TOL => best = Some((i, m)),
            _ => {}
        }
    }
    best.filter(|&(_, m)| m > 0.0).map(|(i, _)| i)
}

/// Rotates `v` by a global phase so its dominant component is real and positive.
pub fn phase_fix(v: &[C64]) -> Result<Vec<C64>> {
    let k = dominant_index(v).ok_or(Error::ZeroVector)?;
    let pivot = v[k];
    if pivot.im == 0.0 && pivot.re > 0.0 {
        return Ok(v.to_vec());
    }
    let factor = pivot.conj() / pivot.norm();
    let mut out: Vec<C64> = v.iter().map(|z| z * factor).collect();
    out[k] = C64::new(pivot.norm(), 0.0);
    Ok(out)
}

/// `sum_i conj(u_i) v_i`.
pub fn overlap(u: &[C64], v: &[C64]) -> Result<C64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    Ok(overlap_unchecked(u, v))
}

#[inline]
pub(crate) fn overlap_unchecked(u: &[C64], v: &[C64]) -> C64 {
    u.iter()
        .zip(v)
        .fold(C64::new(0.0, 0.0), |acc, (a, b)| acc + a.conj() * b)
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sigma_x() -> ComplexMatrix {
        ComplexMatrix::from_row_major(2, vec![c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]).unwrap()
    }

    #[test]
    fn diagonal_matrices() {
        let pairs = hermitian_eigensystem(&ComplexMatrix::from_diagonal(&[1.0, 2.0])).unwrap();
        assert_eq!(pairs[0].value, 1.0);
        assert_eq!(pairs[1].value, 2.0);
        assert_eq!(pairs[0].vector, vec![c(1., 0.), c(0., 0.)]);
        assert_eq!(pairs[1].vector, vec![c(0., 0.), c(1., 0.)]);

        let pairs = hermitian_eigensystem(&ComplexMatrix::from_diagonal(&[1.0, -1.0])).unwrap();
        assert_eq!([pairs[0].value, pairs[1].value], [-1.0, 1.0]);
    }

    #[test]
    fn sigma_x_spectrum() {
        let pairs = hermitian_eigensystem(&sigma_x()).unwrap();
        assert!((pairs[0].value + 1.0).abs() < 1e-14);
        assert!((pairs[1].value - 1.0).abs() < 1e-14);
        let r = core::f64::consts::FRAC_1_SQRT_2;
        // (1, -1)/sqrt2 and (1, 1)/sqrt2 up to phase
        let lo = phase_fix(&pairs[0].vector).unwrap();
        let hi = phase_fix(&pairs[1].vector).unwrap();
        assert!((lo[0] - c(r, 0.)).norm() < 1e-14 && (lo[1] - c(-r, 0.)).norm() < 1e-14);
        assert!((hi[0] - c(r, 0.)).norm() < 1e-14 && (hi[1] - c(r, 0.)).norm() < 1e-14);
    }

    #[test]
    fn zero_matrix_is_fine() {
        let pairs = hermitian_eigensystem(&ComplexMatrix::zeros(3)).unwrap();
        assert!(pairs.iter().all(|p| p.value == 0.0));
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = ComplexMatrix::from_row_major(2, vec![c(0., 0.), c(1., 0.), c(2., 0.), c(0., 0.)])
            .unwrap();
        assert!(matches!(
            hermitian_eigensystem(&m),
            Err(Error::NonHermitianInput { .. })
        ));
    }

    #[test]
    fn zero_sweep_budget_fails_on_offdiagonal_input() {
        let opts = EigenSolverOptions {
            max_sweeps: 0,
            ..Default::default()
        };
        assert!(matches!(
            hermitian_eigensystem_with(&sigma_x(), &opts),
            Err(Error::ConvergenceFailure { sweeps: 0 })
        ));
    }

    #[test]
    fn phase_fix_examples() {
        assert_eq!(
            phase_fix(&[c(0., 0.), c(0., 1.)]).unwrap(),
            vec![c(0., 0.), c(1., 0.)]
        );
        assert_eq!(
            phase_fix(&[c(1., 0.), c(0., 0.)]).unwrap(),
            vec![c(1., 0.), c(0., 0.)]
        );
        let r = core::f64::consts::FRAC_1_SQRT_2;
        let fixed = phase_fix(&[c(0., r), c(0., r)]).unwrap();
        assert_eq!(fixed[0], c(r, 0.));
        assert!((fixed[1] - c(r, 0.)).norm() < 1e-16);
        assert_eq!(phase_fix(&[c(0., 0.); 3]), Err(Error::ZeroVector));
    }

    #[test]
    fn overlap_examples() {
        let e1 = [c(1., 0.), c(0., 0.)];
        let e2 = [c(0., 0.), c(1., 0.)];
        assert_eq!(overlap(&e1, &e1).unwrap(), c(1., 0.));
        assert_eq!(overlap(&e1, &e2).unwrap(), c(0., 0.));
        let r = core::f64::consts::FRAC_1_SQRT_2;
        let z = overlap(&[c(r, 0.), c(0., r)], &[c(r, 0.), c(0., -r)]).unwrap();
        assert!(z.norm() < 1e-16);
        assert!(matches!(
            overlap(&e1, &[c(1., 0.)]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::new();
        s.add(1e16);
        for _ in 0..10 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 10.0);
    }
}
