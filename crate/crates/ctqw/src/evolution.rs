//! Unitary evolution of a single walker: psi(z) = exp(-i H z) psi(0).
//!
//! Two independent backends compute the same propagator:
//!
//! * [`Propagator`] diagonalizes the real symmetric Hamiltonian once and
//!   evaluates exp(-i H z) exactly for any number of propagation lengths.
//! * [`evolve_krylov`] projects the evolution onto a small Lanczos subspace
//!   with full reorthogonalization and adaptive step splitting, never
//!   forming a dense matrix.
//!
//! Agreement between the two is one of the main correctness checks of the
//! crate.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::hamiltonian::Hamiltonian;

/// Tolerance on | ||psi|| - 1 | accepted when constructing a state.
const NORM_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum EvolutionError {
    #[error("state vector must have unit norm (got ||psi|| = {norm})")]
    NotNormalized { norm: f64 },
    #[error("state vector must be non-empty")]
    EmptyState,
    #[error("site index {site} is out of range for {n} sites")]
    SiteOutOfRange { site: usize, n: usize },
    #[error("propagation length must be non-negative (got {z_mm} mm)")]
    NegativeLength { z_mm: f64 },
    #[error("state has {state} amplitudes but the Hamiltonian has {hamiltonian} sites")]
    DimensionMismatch { state: usize, hamiltonian: usize },
    #[error("eigendecomposition failed: {0}")]
    Eigendecomposition(String),
    #[error("z values must be non-negative and strictly increasing")]
    ZValuesNotIncreasing,
    #[error("trace has {z_count} z values but {grid_count} grids")]
    TraceLengthMismatch { z_count: usize, grid_count: usize },
    #[error("Krylov subspace must allow at least 2 vectors (got {0})")]
    SubspaceTooSmall(usize),
    #[error("Krylov tolerance must be strictly positive (got {0})")]
    NonPositiveTolerance(f64),
    #[error(
        "Krylov step splitting did not reach tol {tol} within {max_halvings} halvings \
         (last error estimate {last_estimate})"
    )]
    KrylovNonConvergence {
        tol: f64,
        max_halvings: u32,
        last_estimate: f64,
    },
    #[error("probabilities must be finite and non-negative (value {value} at site {site})")]
    InvalidProbability { site: usize, value: f64 },
}

/// Complex amplitudes over the lattice sites, kept at unit norm.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Array1<Complex64>,
}

impl StateVector {
    /// Wrap amplitudes that are already normalized (within 1e-8).
    pub fn new(amplitudes: Array1<Complex64>) -> Result<Self, EvolutionError> {
        if amplitudes.is_empty() {
            return Err(EvolutionError::EmptyState);
        }
        let norm = vector_norm(&amplitudes);
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(EvolutionError::NotNormalized { norm });
        }
        Ok(Self { amplitudes })
    }

    /// Normalize arbitrary non-zero amplitudes to a unit vector.
    pub fn normalized(amplitudes: Array1<Complex64>) -> Result<Self, EvolutionError> {
        if amplitudes.is_empty() {
            return Err(EvolutionError::EmptyState);
        }
        let norm = vector_norm(&amplitudes);
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(EvolutionError::NotNormalized { norm });
        }
        Ok(Self {
            amplitudes: amplitudes.mapv(|a| a / norm),
        })
    }

    /// Single-site excitation |site>.
    pub fn basis_state(n: usize, site: usize) -> Result<Self, EvolutionError> {
        if n == 0 {
            return Err(EvolutionError::EmptyState);
        }
        if site >= n {
            return Err(EvolutionError::SiteOutOfRange { site, n });
        }
        let mut amplitudes = Array1::zeros(n);
        amplitudes[site] = Complex64::new(1.0, 0.0);
        Ok(Self { amplitudes })
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn amplitudes(&self) -> &Array1<Complex64> {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        vector_norm(&self.amplitudes)
    }

    /// Per-site detection probabilities |a_j|^2.
    pub fn probabilities(&self) -> ProbabilityGrid {
        ProbabilityGrid {
            values: self.amplitudes.iter().map(|a| a.norm_sqr()).collect(),
        }
    }

    fn from_unchecked(amplitudes: Array1<Complex64>) -> Self {
        Self { amplitudes }
    }
}

fn vector_norm(v: &Array1<Complex64>) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// Non-negative weights per site, arranged by flat lattice index.
///
/// Grids produced by evolution sum to 1; the observable formulas normalize
/// internally, so externally supplied grids only need to be non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityGrid {
    values: Vec<f64>,
}

impl ProbabilityGrid {
    pub fn new(values: Vec<f64>) -> Result<Self, EvolutionError> {
        if values.is_empty() {
            return Err(EvolutionError::EmptyState);
        }
        for (site, &value) in values.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(EvolutionError::InvalidProbability { site, value });
            }
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// An ordered series of probability grids along the propagation axis.
#[derive(Debug, Clone)]
pub struct EvolutionTrace {
    z_values: Vec<f64>,
    grids: Vec<ProbabilityGrid>,
}

impl EvolutionTrace {
    pub fn new(z_values: Vec<f64>, grids: Vec<ProbabilityGrid>) -> Result<Self, EvolutionError> {
        validate_z_values(&z_values)?;
        if z_values.len() != grids.len() {
            return Err(EvolutionError::TraceLengthMismatch {
                z_count: z_values.len(),
                grid_count: grids.len(),
            });
        }
        Ok(Self { z_values, grids })
    }

    pub fn z_values(&self) -> &[f64] {
        &self.z_values
    }

    pub fn grids(&self) -> &[ProbabilityGrid] {
        &self.grids
    }

    pub fn len(&self) -> usize {
        self.z_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z_values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &ProbabilityGrid)> {
        self.z_values.iter().copied().zip(self.grids.iter())
    }
}

fn validate_z_values(z_values: &[f64]) -> Result<(), EvolutionError> {
    let increasing = z_values.windows(2).all(|w| w[0] < w[1]);
    let non_negative = z_values.first().map_or(true, |&z| z >= 0.0);
    let finite = z_values.iter().all(|z| z.is_finite());
    if increasing && non_negative && finite {
        Ok(())
    } else {
        Err(EvolutionError::ZValuesNotIncreasing)
    }
}

/// Evolution backend selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Spectral,
    Krylov,
}

impl std::fmt::Display for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Backend::Spectral => write!(f, "spectral"),
            Backend::Krylov => write!(f, "krylov"),
        }
    }
}

/// Spectral propagator: H = V diag(lambda) V^T computed once, then
/// psi(z) = V exp(-i lambda z) V^T psi(0) for each requested z.
#[derive(Debug, Clone)]
pub struct Propagator {
    eigenvalues: Array1<f64>,
    eigenvectors: Array2<f64>,
}

impl Propagator {
    pub fn diagonalize(h: &Hamiltonian) -> Result<Self, EvolutionError> {
        let (eigenvalues, eigenvectors) = h
            .dense()
            .eigh(UPLO::Lower)
            .map_err(|e| EvolutionError::Eigendecomposition(e.to_string()))?;
        Ok(Self {
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &Array1<f64> {
        &self.eigenvalues
    }

    pub fn evolve(&self, psi0: &StateVector, z_mm: f64) -> Result<StateVector, EvolutionError> {
        let coeffs = self.spectral_coefficients(psi0)?;
        if z_mm < 0.0 {
            return Err(EvolutionError::NegativeLength { z_mm });
        }
        Ok(self.evolve_coefficients(&coeffs, z_mm))
    }

    /// Probability grids for a whole set of propagation lengths, reusing the
    /// one decomposition. Independent z values are evaluated in parallel.
    pub fn trace(
        &self,
        psi0: &StateVector,
        z_values: &[f64],
    ) -> Result<EvolutionTrace, EvolutionError> {
        validate_z_values(z_values)?;
        let coeffs = self.spectral_coefficients(psi0)?;
        let grids: Vec<ProbabilityGrid> = z_values
            .par_iter()
            .map(|&z| self.evolve_coefficients(&coeffs, z).probabilities())
            .collect();
        EvolutionTrace::new(z_values.to_vec(), grids)
    }

    /// Eigenbasis coordinates of a state: c = V^T psi, kept as separate real
    /// and imaginary parts so the heavy products stay in real arithmetic.
    fn spectral_coefficients(
        &self,
        psi0: &StateVector,
    ) -> Result<(Array1<f64>, Array1<f64>), EvolutionError> {
        if psi0.len() != self.n_sites() {
            return Err(EvolutionError::DimensionMismatch {
                state: psi0.len(),
                hamiltonian: self.n_sites(),
            });
        }
        let re = psi0.amplitudes.mapv(|a| a.re);
        let im = psi0.amplitudes.mapv(|a| a.im);
        let vt = self.eigenvectors.t();
        Ok((vt.dot(&re), vt.dot(&im)))
    }

    fn evolve_coefficients(&self, (c_re, c_im): &(Array1<f64>, Array1<f64>), z_mm: f64) -> StateVector {
        let n = self.n_sites();
        let mut w_re = Array1::zeros(n);
        let mut w_im = Array1::zeros(n);
        for k in 0..n {
            // exp(-i theta) (a + i b) with theta = lambda_k z.
            let (sin, cos) = (self.eigenvalues[k] * z_mm).sin_cos();
            w_re[k] = c_re[k] * cos + c_im[k] * sin;
            w_im[k] = c_im[k] * cos - c_re[k] * sin;
        }
        let out_re = self.eigenvectors.dot(&w_re);
        let out_im = self.eigenvectors.dot(&w_im);
        let amplitudes = out_re
            .iter()
            .zip(out_im.iter())
            .map(|(&re, &im)| Complex64::new(re, im))
            .collect();
        StateVector::from_unchecked(amplitudes)
    }
}

/// One-shot spectral evolution; diagonalizes on every call, so prefer
/// [`Propagator`] when several lengths share a Hamiltonian.
pub fn evolve_spectral(
    h: &Hamiltonian,
    psi0: &StateVector,
    z_mm: f64,
) -> Result<StateVector, EvolutionError> {
    Propagator::diagonalize(h)?.evolve(psi0, z_mm)
}

/// Options for the Lanczos backend.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct KrylovOptions {
    /// Maximum Lanczos subspace dimension per step.
    pub max_subspace: usize,
    /// Target bound on the accumulated a-posteriori error estimate.
    pub tol: f64,
    /// Budget of step halvings before giving up.
    pub max_halvings: u32,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self {
            max_subspace: 30,
            tol: 1e-10,
            max_halvings: 40,
        }
    }
}

/// Lanczos (Krylov subspace) approximation of exp(-i H z) psi0.
///
/// The propagation length is split adaptively: each substep projects H onto
/// a subspace of at most `max_subspace` Lanczos vectors (with full
/// reorthogonalization) and is accepted only when the residual-based error
/// estimate beta_m |y_m| fits within the substep's share of `tol`; otherwise
/// the substep is halved.
pub fn evolve_krylov(
    h: &Hamiltonian,
    psi0: &StateVector,
    z_mm: f64,
    options: &KrylovOptions,
) -> Result<StateVector, EvolutionError> {
    if z_mm < 0.0 {
        return Err(EvolutionError::NegativeLength { z_mm });
    }
    if psi0.len() != h.n_sites() {
        return Err(EvolutionError::DimensionMismatch {
            state: psi0.len(),
            hamiltonian: h.n_sites(),
        });
    }
    if options.max_subspace < 2 {
        return Err(EvolutionError::SubspaceTooSmall(options.max_subspace));
    }
    if !(options.tol > 0.0) {
        return Err(EvolutionError::NonPositiveTolerance(options.tol));
    }
    if z_mm == 0.0 {
        return Ok(psi0.clone());
    }

    let mut state = psi0.amplitudes.clone();
    let mut remaining = z_mm;
    let mut step = z_mm;
    let mut halvings = 0u32;
    while remaining > 0.0 {
        let step_now = step.min(remaining);
        let projection = lanczos_project(h, &state, options.max_subspace);
        let (candidate, error_estimate) = projection.apply_exponential(step_now);
        // Budget the tolerance proportionally to the substep length.
        if error_estimate <= options.tol * (step_now / z_mm) {
            state = candidate;
            remaining -= step_now;
        } else {
            halvings += 1;
            if halvings > options.max_halvings {
                return Err(EvolutionError::KrylovNonConvergence {
                    tol: options.tol,
                    max_halvings: options.max_halvings,
                    last_estimate: error_estimate,
                });
            }
            step = step_now / 2.0;
        }
    }
    Ok(StateVector::from_unchecked(state))
}

/// Lanczos tridiagonalization of H restricted to the Krylov subspace of a
/// starting vector.
struct LanczosProjection {
    /// Orthonormal basis vectors, one per Lanczos step.
    basis: Vec<Array1<Complex64>>,
    /// Diagonal of the projected tridiagonal matrix.
    alphas: Vec<f64>,
    /// Off-diagonal of the projected matrix (length alphas.len() - 1).
    betas: Vec<f64>,
    /// Norm of the first residual outside the subspace; 0 on happy breakdown.
    residual_beta: f64,
    /// Norm of the starting vector.
    start_norm: f64,
}

fn lanczos_project(h: &Hamiltonian, start: &Array1<Complex64>, max_subspace: usize) -> LanczosProjection {
    let start_norm = vector_norm(start);
    let mut basis: Vec<Array1<Complex64>> = vec![start.mapv(|a| a / start_norm)];
    let mut alphas = Vec::with_capacity(max_subspace);
    let mut betas = Vec::with_capacity(max_subspace.saturating_sub(1));
    let mut residual_beta = 0.0;
    // Breakdown scale: couplings bound the spectral radius via the max row sum.
    let breakdown = 1e-13 * matrix_scale(h).max(1.0);

    for j in 0..max_subspace {
        let mut w = h.apply(&basis[j]);
        // H is Hermitian, so the projection coefficients are real; full
        // reorthogonalization keeps the basis orthonormal to round-off.
        let alpha = basis[j]
            .iter()
            .zip(w.iter())
            .map(|(v, w)| (v.conj() * w).re)
            .sum::<f64>();
        alphas.push(alpha);
        for (k, v) in basis.iter().enumerate() {
            let coeff = if k == j {
                Complex64::new(alpha, 0.0)
            } else {
                v.iter().zip(w.iter()).map(|(v, w)| v.conj() * w).sum()
            };
            if coeff.norm_sqr() > 0.0 {
                ndarray::Zip::from(&mut w).and(v).for_each(|w, &v| *w -= coeff * v);
            }
        }
        let beta = vector_norm(&w);
        if beta <= breakdown {
            // Invariant subspace: the projection is exact.
            residual_beta = 0.0;
            break;
        }
        if j + 1 == max_subspace {
            residual_beta = beta;
            break;
        }
        betas.push(beta);
        basis.push(w.mapv(|a| a / beta));
    }

    LanczosProjection {
        basis,
        alphas,
        betas,
        residual_beta,
        start_norm,
    }
}

fn matrix_scale(h: &Hamiltonian) -> f64 {
    let mut row_sums = vec![h.beta().abs(); h.n_sites()];
    for p in h.pairs() {
        row_sums[p.i] += p.coupling.abs();
        row_sums[p.j] += p.coupling.abs();
    }
    row_sums.into_iter().fold(0.0, f64::max)
}

impl LanczosProjection {
    /// exp(-i T z) applied within the subspace, mapped back to site space,
    /// together with the residual-based error estimate beta_m |y_m|.
    fn apply_exponential(&self, z_mm: f64) -> (Array1<Complex64>, f64) {
        let m = self.alphas.len();
        let (eigenvalues, eigenvectors) = tridiagonal_eigh(&self.alphas, &self.betas);
        // y = Q exp(-i Lambda z) Q^T e_1.
        let mut y = vec![Complex64::new(0.0, 0.0); m];
        for k in 0..m {
            let (sin, cos) = (eigenvalues[k] * z_mm).sin_cos();
            let phase = Complex64::new(cos, -sin) * eigenvectors[[0, k]];
            for (j, yj) in y.iter_mut().enumerate() {
                *yj += eigenvectors[[j, k]] * phase;
            }
        }
        let n = self.basis[0].len();
        let mut out = Array1::from_elem(n, Complex64::new(0.0, 0.0));
        for (j, v) in self.basis.iter().enumerate() {
            let weight = y[j] * self.start_norm;
            ndarray::Zip::from(&mut out).and(v).for_each(|o, &v| *o += weight * v);
        }
        let error_estimate = self.residual_beta * y[m - 1].norm() * self.start_norm;
        (out, error_estimate)
    }
}

/// Eigendecomposition of a symmetric tridiagonal matrix by the implicit QL
/// method with Wilkinson shifts. Returns ascending eigenvalues and the
/// orthonormal eigenvector matrix (columns).
///
/// Kept separate from the LAPACK path on purpose: the Krylov backend stays
/// an independent cross-check of the spectral backend.
fn tridiagonal_eigh(diag: &[f64], offdiag: &[f64]) -> (Vec<f64>, Array2<f64>) {
    let n = diag.len();
    assert!(n > 0 && offdiag.len() + 1 == n);
    let mut d = diag.to_vec();
    // e is padded so e[i] couples rows i and i+1.
    let mut e = offdiag.to_vec();
    e.push(0.0);
    let mut q = Array2::eye(n);
    if n == 1 {
        return (d, q);
    }

    for l in 0..n {
        let mut iterations = 0;
        loop {
            // Find the first decoupled block boundary at or after l.
            let mut m = l;
            while m + 1 < n {
                let scale = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * scale {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            assert!(iterations <= 50, "tridiagonal QL failed to converge");

            // Wilkinson shift from the leading 2x2 of the active block.
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c) = (1.0f64, 1.0f64);
            let mut p = 0.0f64;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    f = q[[k, i + 1]];
                    q[[k, i + 1]] = s * q[[k, i]] + c * f;
                    q[[k, i]] = c * q[[k, i]] - s * f;
                }
            }
            if r == 0.0 && m > l + 1 {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    // Sort ascending, permuting eigenvector columns to match.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap());
    let sorted_d: Vec<f64> = order.iter().map(|&k| d[k]).collect();
    let mut sorted_q = Array2::zeros((n, n));
    for (new_col, &old_col) in order.iter().enumerate() {
        for k in 0..n {
            sorted_q[[k, new_col]] = q[[k, old_col]];
        }
    }
    (sorted_d, sorted_q)
}

/// Evolve over a set of propagation lengths with the chosen backend.
///
/// The spectral backend reuses one eigendecomposition for every z. The
/// Krylov backend continues from each previous sample, so the total work
/// scales with the final length rather than the sum of all lengths.
pub fn evolve_trace(
    h: &Hamiltonian,
    psi0: &StateVector,
    z_values: &[f64],
    backend: Backend,
) -> Result<EvolutionTrace, EvolutionError> {
    evolve_trace_with(h, psi0, z_values, backend, &KrylovOptions::default())
}

/// [`evolve_trace`] with explicit Krylov options.
pub fn evolve_trace_with(
    h: &Hamiltonian,
    psi0: &StateVector,
    z_values: &[f64],
    backend: Backend,
    options: &KrylovOptions,
) -> Result<EvolutionTrace, EvolutionError> {
    validate_z_values(z_values)?;
    match backend {
        Backend::Spectral => Propagator::diagonalize(h)?.trace(psi0, z_values),
        Backend::Krylov => {
            let mut grids = Vec::with_capacity(z_values.len());
            let mut current = psi0.clone();
            let mut current_z = 0.0;
            for &z in z_values {
                current = evolve_krylov(h, &current, z - current_z, options)?;
                current_z = z;
                grids.push(current.probabilities());
            }
            EvolutionTrace::new(z_values.to_vec(), grids)
        }
    }
}
