use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::grid::{ParameterGrid, ScalarField, TIME_AXIS};
use crate::model::{evaluate_hamiltonian, DerivativeSteps, HamiltonianFamily};
use crate::numeric::{
    dominant_index, hermitian_eigensystem_with, overlap_unchecked, phase_fix, EigenSolverOptions,
    C64, DEFAULT_HERM_TOL, DEFAULT_MAX_SWEEPS,
};

/// Below this magnitude a neighbour's component on the centre pivot is
/// considered unusable for re-phasing.
const CONTINUATION_FLOOR: f64 = 1e-8;

/// A component whose magnitude stays above this on every valid node can
/// carry one phase convention for the whole grid.
const GLOBAL_PIVOT_FLOOR: f64 = 0.1;

/// How stored eigenvector phases are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum GaugeChoice {
    /// `Global` when some component is bounded away from zero on every valid
    /// node; otherwise `Propagated` for time-dependent families on a time
    /// axis and `Pivot` for the rest.
    #[default]
    Auto,
    /// Largest component real and positive at each node. Differencing
    /// re-phases neighbours onto the centre's pivot, so the node sets sharing
    /// a pivot act as overlapping patches.
    Pivot,
    /// The same component real and positive on every node.
    Global,
    /// Pivot-fixed, then smoothed along each spatial axis in turn: every
    /// valid node takes the phase that makes its overlap with the previous
    /// valid node on the line real and positive. Time slices are treated
    /// separately.
    Propagated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BundleOptions {
    /// Gap threshold relative to the largest `|eigenvalue|` on the grid.
    pub gap_tol: f64,
    pub herm_tol: f64,
    pub max_sweeps: usize,
    /// Adjacent valid nodes need `|<n_p|n_q>|` at least this large.
    pub overlap_floor: f64,
    /// Finite-difference step for families without analytic derivatives,
    /// relative to the grid spacing (and `dt`).
    pub fd_scale: f64,
    pub gauge: GaugeChoice,
}

impl Default for BundleOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-6,
            herm_tol: DEFAULT_HERM_TOL,
            max_sweeps: DEFAULT_MAX_SWEEPS,
            overlap_floor: 0.5,
            fd_scale: 1e-5,
            gauge: GaugeChoice::Auto,
        }
    }
}

impl BundleOptions {
    pub(crate) fn solver(&self) -> EigenSolverOptions {
        EigenSolverOptions {
            herm_tol: self.herm_tol,
            max_sweeps: self.max_sweeps,
        }
    }
}

/// Band `n` sampled on every node of a grid.
#[derive(Debug, Clone)]
pub struct EigenBundle {
    pub grid: ParameterGrid,
    pub band: usize,
    pub dim: usize,
    /// `eps_n`; invalid exactly where `degenerate` is set.
    pub energies: ScalarField,
    /// Node-major, `dim` entries per node.
    pub vectors: Vec<C64>,
    pub degenerate: Vec<bool>,
    /// Absolute gap threshold actually applied.
    pub gap_tol: f64,
    /// Smallest gap to a neighbouring band per node (infinite for `dim == 1`).
    pub gaps: Vec<f64>,
    pub steps: DerivativeSteps,
    pub options: BundleOptions,
    /// Convention actually applied; never `Auto`.
    pub gauge: GaugeChoice,
    pivots: Vec<usize>,
}

pub fn build_eigenbundle(
    family: &dyn HamiltonianFamily,
    grid: &ParameterGrid,
    band: usize,
    options: &BundleOptions,
) -> Result<EigenBundle> {
    let dim = family.dim();
    if band >= dim {
        return Err(Error::BandOutOfRange { band, dim });
    }
    let len = grid.len();
    let solver = options.solver();
    let mut energies = vec![0.0; len];
    let mut vectors = Vec::with_capacity(len * dim);
    let mut pivots = vec![0; len];
    let mut gaps = vec![f64::INFINITY; len];
    let mut scale = 0.0f64;

    for p in 0..len {
        let (r, t) = grid.point(p);
        let pairs = hermitian_eigensystem_with(&evaluate_hamiltonian(family, r, t)?, &solver)?;
        scale = pairs.iter().fold(scale, |m, e| m.max(e.value.abs()));
        energies[p] = pairs[band].value;
        if band > 0 {
            gaps[p] = pairs[band].value - pairs[band - 1].value;
        }
        if band + 1 < dim {
            gaps[p] = gaps[p].min(pairs[band + 1].value - pairs[band].value);
        }
        let v = phase_fix(&pairs[band].vector)?;
        pivots[p] = dominant_index(&v).expect("unit vector");
        vectors.extend_from_slice(&v);
    }

    let gap_tol = options.gap_tol * if scale > 0.0 { scale } else { 1.0 };
    let mut degenerate: Vec<bool> = gaps.iter().map(|&g| g < gap_tol).collect();

    // Adjacent valid nodes whose states barely overlap straddle an unresolved
    // crossing; exclude both.
    let mut flagged = Vec::new();
    for p in 0..len {
        if degenerate[p] {
            continue;
        }
        for axis in 0..=TIME_AXIS {
            if let Some(q) = grid.neighbor(p, axis, 1) {
                if q == p || degenerate[q] {
                    continue;
                }
                let o = overlap_unchecked(
                    &vectors[p * dim..(p + 1) * dim],
                    &vectors[q * dim..(q + 1) * dim],
                );
                if o.norm() < options.overlap_floor {
                    flagged.push(p);
                    flagged.push(q);
                }
            }
        }
    }
    for p in flagged {
        degenerate[p] = true;
    }
    if degenerate.iter().all(|&d| d) {
        return Err(Error::AllPointsDegenerate);
    }

    let gauge = apply_gauge(
        family,
        grid,
        dim,
        &degenerate,
        options.gauge,
        &mut vectors,
        &mut pivots,
    );
    let valid: Vec<bool> = degenerate.iter().map(|d| !d).collect();
    let energies = ScalarField {
        grid: *grid,
        values: energies,
        valid: vec![true; len],
        units: "energy",
    }
    .masked(&valid);
    let dt = grid.time_axis().map(|t| t.dt);
    Ok(EigenBundle {
        grid: *grid,
        band,
        dim,
        energies,
        vectors,
        degenerate,
        gap_tol,
        gaps,
        steps: DerivativeSteps::scaled(grid.spacing(), dt, options.fd_scale),
        options: *options,
        gauge,
        pivots,
    })
}

/// Component with the largest minimum magnitude over valid nodes, if that
/// minimum clears [`GLOBAL_PIVOT_FLOOR`].
fn global_pivot(dim: usize, vectors: &[C64], degenerate: &[bool]) -> Option<usize> {
    let mut least = vec![f64::INFINITY; dim];
    for (v, _) in vectors
        .chunks_exact(dim)
        .zip(degenerate)
        .filter(|(_, &d)| !d)
    {
        for (m, z) in least.iter_mut().zip(v) {
            *m = m.min(z.norm());
        }
    }
    let (k, m) =
        least.iter().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |b, (k, &m)| if m > b.1 { (k, m) } else { b },
        );
    (m >= GLOBAL_PIVOT_FLOOR).then_some(k)
}

fn rotate_by(v: &mut [C64], phase: C64) {
    for z in v {
        *z *= phase;
    }
}

fn apply_gauge(
    family: &dyn HamiltonianFamily,
    grid: &ParameterGrid,
    dim: usize,
    degenerate: &[bool],
    choice: GaugeChoice,
    vectors: &mut [C64],
    pivots: &mut [usize],
) -> GaugeChoice {
    let global = match choice {
        GaugeChoice::Auto | GaugeChoice::Global => global_pivot(dim, vectors, degenerate),
        _ => None,
    };
    let resolved = match (choice, global) {
        (GaugeChoice::Auto, Some(_)) => GaugeChoice::Global,
        (GaugeChoice::Auto, None) if grid.nt() > 1 && !family.is_static() => {
            GaugeChoice::Propagated
        }
        (GaugeChoice::Auto, None) => GaugeChoice::Pivot,
        (GaugeChoice::Global, None) => GaugeChoice::Pivot,
        (other, _) => other,
    };
    match resolved {
        GaugeChoice::Global => {
            let k = global.expect("resolved from a global pivot");
            for (v, pivot) in vectors.chunks_exact_mut(dim).zip(pivots.iter_mut()) {
                let z = v[k];
                if z.norm() > 0.0 {
                    rotate_by(v, z.conj() / z.norm());
                }
                *pivot = k;
            }
        }
        GaugeChoice::Propagated => {
            let shape = grid.shape();
            for axis in 0..3 {
                if shape[axis] < 2 {
                    continue;
                }
                let stride = grid.index(
                    usize::from(axis == 0),
                    usize::from(axis == 1),
                    usize::from(axis == 2),
                    0,
                );
                for start in (0..grid.len()).filter(|&p| position(grid, p, axis) == 0) {
                    let mut prev: Option<usize> = None;
                    for p in (0..shape[axis]).map(|i| start + i * stride) {
                        if degenerate[p] {
                            continue;
                        }
                        if let Some(q) = prev {
                            let o = overlap_unchecked(
                                &vectors[p * dim..(p + 1) * dim],
                                &vectors[q * dim..(q + 1) * dim],
                            );
                            if o.norm() > CONTINUATION_FLOOR {
                                rotate_by(&mut vectors[p * dim..(p + 1) * dim], o / o.norm());
                            }
                        }
                        prev = Some(p);
                    }
                }
            }
            pivots.iter_mut().for_each(|k| *k = 0);
        }
        _ => {}
    }
    resolved
}

fn position(grid: &ParameterGrid, p: usize, axis: usize) -> usize {
    let (i, j, k, _) = grid.unravel(p);
    [i, j, k][axis]
}

/// Multiplies every vector by `exp(i Lambda(R, t))`. Phase fixing is not
/// re-applied; energies and masks are unchanged.
pub fn gauge_transform_apply(
    bundle: &EigenBundle,
    lambda: impl Fn([f64; 3], f64) -> f64,
) -> EigenBundle {
    let mut out = bundle.clone();
    let dim = bundle.dim;
    for p in 0..bundle.grid.len() {
        let (r, t) = bundle.grid.point(p);
        let phase = Complex::from_polar(1.0, lambda(r, t));
        for z in &mut out.vectors[p * dim..(p + 1) * dim] {
            *z *= phase;
        }
    }
    out
}

impl EigenBundle {
    pub fn vector(&self, p: usize) -> &[C64] {
        &self.vectors[p * self.dim..(p + 1) * self.dim]
    }

    pub fn is_valid(&self, p: usize) -> bool {
        !self.degenerate[p]
    }

    pub fn valid(&self) -> Vec<bool> {
        self.degenerate.iter().map(|d| !d).collect()
    }

    pub fn valid_count(&self) -> usize {
        self.degenerate.iter().filter(|d| !**d).count()
    }

    /// Component whose phase convention the stored vector at `p` follows;
    /// the same everywhere unless the gauge is [`GaugeChoice::Pivot`].
    pub fn pivot(&self, p: usize) -> usize {
        self.pivots[p]
    }

    /// Phase bringing the vector at `q` onto the pivot convention of `p`.
    /// Equal to 1 when both share a pivot. Built from two components of the
    /// same vector, so unchanged by a gauge transform.
    pub(crate) fn continuation(&self, p: usize, q: usize) -> C64 {
        let (kp, kq) = (self.pivots[p], self.pivots[q]);
        if kp == kq {
            return C64::new(1.0, 0.0);
        }
        let v = self.vector(q);
        let (own, other) = (v[kq], v[kp]);
        if other.norm() < CONTINUATION_FLOOR || own.norm() == 0.0 {
            return C64::new(1.0, 0.0);
        }
        (own / own.norm()) * (other.conj() / other.norm())
    }

    /// Stencil derivative of the band vector at `p` along `axis`, with every
    /// neighbour brought into phase with `p` along its link, written into
    /// `out`. Under a gauge change the result picks up only the phase of the
    /// vector at `p`. Returns false (leaving `out` zeroed) when a stencil
    /// node is degenerate.
    pub(crate) fn transported_derivative_into(
        &self,
        p: usize,
        axis: usize,
        out: &mut [C64],
    ) -> bool {
        let n = self.vector(p);
        for z in out.iter_mut() {
            *z = C64::new(0.0, 0.0);
        }
        let s = self.grid.stencil(p, axis);
        if s.nodes.iter().any(|&q| self.degenerate[q]) {
            return false;
        }
        for (&q, &w) in s.nodes.iter().zip(&s.weights) {
            if w == 0.0 {
                continue;
            }
            let link = overlap_unchecked(self.vector(q), n);
            let c = if link.norm() == 0.0 {
                C64::new(w, 0.0)
            } else {
                link / link.norm() * w
            };
            for (o, z) in out.iter_mut().zip(self.vector(q)) {
                *o += c * z;
            }
        }
        true
    }
}
