//! Classical continuous-time random walk on the same lattice, as the
//! diffusive baseline: master-equation evolution under the symmetric rate
//! generator, plus the analytic Gaussian reference pattern.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, UPLO};
use thiserror::Error;

use crate::evolution::{EvolutionTrace, ProbabilityGrid};
use crate::lattice::Lattice;

#[derive(Debug, Error)]
pub enum ClassicalError {
    #[error("eigendecomposition failed: {0}")]
    Eigendecomposition(String),
    #[error("initial distribution must be non-negative and sum to 1 (got sum {sum})")]
    NotADistribution { sum: f64 },
    #[error("distribution has {state} entries but the generator has {generator} sites")]
    DimensionMismatch { state: usize, generator: usize },
    #[error("propagation length must be non-negative (got {z_mm} mm)")]
    NegativeLength { z_mm: f64 },
    #[error("z values must be non-negative and strictly increasing")]
    ZValuesNotIncreasing,
    #[error("Gaussian sigma must be strictly positive (got {0})")]
    NonPositiveSigma(f64),
    #[error("site index {site} is out of range for {n} sites")]
    SiteOutOfRange { site: usize, n: usize },
}

/// Symmetric master-equation generator: off-diagonal jump rates equal to the
/// quantum couplings (1/mm), diagonal closing each column to zero.
#[derive(Debug, Clone)]
pub struct RateMatrix {
    entries: Array2<f64>,
}

impl RateMatrix {
    /// Rates are taken equal to the coupling coefficients so classical and
    /// quantum walks on the same lattice are directly comparable.
    pub fn build(lattice: &Lattice) -> Self {
        let n = lattice.n_sites();
        let mut entries = Array2::zeros((n, n));
        for p in lattice.neighbor_pairs() {
            entries[[p.i, p.j]] = p.coupling;
            entries[[p.j, p.i]] = p.coupling;
            entries[[p.i, p.i]] -= p.coupling;
            entries[[p.j, p.j]] -= p.coupling;
        }
        Self { entries }
    }

    pub fn n_sites(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }
}

/// Spectral solver for p(z) = exp(L z) p(0), reusing one decomposition of
/// the symmetric generator for any number of lengths.
#[derive(Debug, Clone)]
pub struct ClassicalPropagator {
    eigenvalues: Array1<f64>,
    eigenvectors: Array2<f64>,
}

impl ClassicalPropagator {
    pub fn diagonalize(rates: &RateMatrix) -> Result<Self, ClassicalError> {
        let (eigenvalues, eigenvectors) = rates
            .entries
            .eigh(UPLO::Lower)
            .map_err(|e| ClassicalError::Eigendecomposition(e.to_string()))?;
        Ok(Self {
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn evolve(&self, p0: &[f64], z_mm: f64) -> Result<ProbabilityGrid, ClassicalError> {
        if z_mm < 0.0 {
            return Err(ClassicalError::NegativeLength { z_mm });
        }
        if p0.len() != self.n_sites() {
            return Err(ClassicalError::DimensionMismatch {
                state: p0.len(),
                generator: self.n_sites(),
            });
        }
        let sum: f64 = p0.iter().sum();
        if p0.iter().any(|&v| v < 0.0) || (sum - 1.0).abs() > 1e-8 {
            return Err(ClassicalError::NotADistribution { sum });
        }
        let p0 = Array1::from_iter(p0.iter().copied());
        let mut coefficients = self.eigenvectors.t().dot(&p0);
        for (k, c) in coefficients.iter_mut().enumerate() {
            *c *= (self.eigenvalues[k] * z_mm).exp();
        }
        let evolved = self.eigenvectors.dot(&coefficients);
        // The generator preserves positivity; only round-off can push an
        // entry below zero.
        let values = evolved.iter().map(|&v| v.max(0.0)).collect();
        Ok(ProbabilityGrid::new(values).expect("entries are finite and non-negative"))
    }

    pub fn trace(&self, p0: &[f64], z_values: &[f64]) -> Result<EvolutionTrace, ClassicalError> {
        if !z_values.windows(2).all(|w| w[0] < w[1])
            || z_values.first().is_some_and(|&z| z < 0.0)
        {
            return Err(ClassicalError::ZValuesNotIncreasing);
        }
        let grids = z_values
            .iter()
            .map(|&z| self.evolve(p0, z))
            .collect::<Result<Vec<_>, _>>()?;
        EvolutionTrace::new(z_values.to_vec(), grids)
            .map_err(|_| ClassicalError::ZValuesNotIncreasing)
    }
}

/// One-shot classical evolution; prefer [`ClassicalPropagator`] for traces.
pub fn evolve_classical(
    rates: &RateMatrix,
    p0: &[f64],
    z_mm: f64,
) -> Result<ProbabilityGrid, ClassicalError> {
    ClassicalPropagator::diagonalize(rates)?.evolve(p0, z_mm)
}

/// Analytic 2D Gaussian reference pattern centered on a site, with sigma in
/// spacing units, normalized to total mass 1.
pub fn gaussian_reference(
    lattice: &Lattice,
    sigma_units: f64,
    origin: usize,
) -> Result<ProbabilityGrid, ClassicalError> {
    if !(sigma_units > 0.0) {
        return Err(ClassicalError::NonPositiveSigma(sigma_units));
    }
    if origin >= lattice.n_sites() {
        return Err(ClassicalError::SiteOutOfRange {
            site: origin,
            n: lattice.n_sites(),
        });
    }
    let (r0, c0) = lattice.row_col(origin);
    let mut values = Vec::with_capacity(lattice.n_sites());
    for site in 0..lattice.n_sites() {
        let (r, c) = lattice.row_col(site);
        let dr = r as f64 - r0 as f64;
        let dc = c as f64 - c0 as f64;
        values.push((-(dr * dr + dc * dc) / (2.0 * sigma_units * sigma_units)).exp());
    }
    let total: f64 = values.iter().sum();
    for v in &mut values {
        *v /= total;
    }
    Ok(ProbabilityGrid::new(values).expect("Gaussian weights are positive"))
}
