//! Quantitative observables over probability grids and traces: spread
//! variance, distribution similarity, axis projections, return probability,
//! power-law fits and the Pólya recurrence number.

use thiserror::Error;

use crate::evolution::{EvolutionTrace, ProbabilityGrid};
use crate::lattice::Lattice;

#[derive(Debug, Error, PartialEq)]
pub enum ObservableError {
    #[error("grid has {grid} values but the lattice has {lattice} sites")]
    GridShapeMismatch { grid: usize, lattice: usize },
    #[error("grids have different shapes ({left} vs {right} values)")]
    ShapeMismatch { left: usize, right: usize },
    #[error("grid with zero total mass is rejected")]
    ZeroMass,
    #[error("site index {site} is out of range for {n} sites")]
    SiteOutOfRange { site: usize, n: usize },
    #[error("series z values must be strictly increasing")]
    ZNotIncreasing,
    #[error("series has {z_count} z values but {value_count} values")]
    LengthMismatch { z_count: usize, value_count: usize },
    #[error("fit window must satisfy 0 < z_min < z_max (got [{z_min}, {z_max}])")]
    InvalidWindow { z_min: f64, z_max: f64 },
    #[error("fit window holds {found} samples but at least {needed} are required")]
    TooFewSamples { found: usize, needed: usize },
    #[error("log-log fit requires positive values (got {value} at z = {z_mm})")]
    NonPositiveValue { z_mm: f64, value: f64 },
    #[error(
        "envelope fit found {found} local maxima in the window but needs at least {needed}; \
         widen the window or sample more densely"
    )]
    TooFewMaxima { found: usize, needed: usize },
    #[error("return probabilities must lie in [0, 1] (got {value} at z = {z_mm})")]
    InvalidProbability { z_mm: f64, value: f64 },
    #[error("sample period must be strictly positive (got {0} mm)")]
    NonPositivePeriod(f64),
    #[error("Pólya estimate needs at least one term")]
    NoTerms,
    #[error("series spans z in [{available_min}, {available_max}] mm but sampling needs [{needed_min}, {needed_max}] mm")]
    InsufficientCoverage {
        needed_min: f64,
        needed_max: f64,
        available_min: f64,
        available_max: f64,
    },
}

/// A real-valued observable sampled on an increasing set of propagation
/// lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableSeries {
    z_values: Vec<f64>,
    values: Vec<f64>,
}

impl ObservableSeries {
    pub fn new(z_values: Vec<f64>, values: Vec<f64>) -> Result<Self, ObservableError> {
        if !z_values.windows(2).all(|w| w[0] < w[1]) {
            return Err(ObservableError::ZNotIncreasing);
        }
        if z_values.len() != values.len() {
            return Err(ObservableError::LengthMismatch {
                z_count: z_values.len(),
                value_count: values.len(),
            });
        }
        Ok(Self { z_values, values })
    }

    pub fn z_values(&self) -> &[f64] {
        &self.z_values
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.z_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z_values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.z_values.iter().copied().zip(self.values.iter().copied())
    }

    /// Linear interpolation between samples; clamps nothing, so `z` must lie
    /// within the sampled range.
    fn interpolate(&self, z: f64) -> Option<f64> {
        let first = *self.z_values.first()?;
        let last = *self.z_values.last()?;
        if z < first || z > last {
            return None;
        }
        let upper = self.z_values.partition_point(|&zk| zk < z);
        if upper == 0 {
            return Some(self.values[0]);
        }
        if upper == self.z_values.len() {
            return Some(*self.values.last().unwrap());
        }
        let (z0, z1) = (self.z_values[upper - 1], self.z_values[upper]);
        let (v0, v1) = (self.values[upper - 1], self.values[upper]);
        Some(v0 + (v1 - v0) * (z - z0) / (z1 - z0))
    }
}

/// Pólya number estimate from periodically sampled return probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolyaEstimate {
    pub value: f64,
    pub terms_used: usize,
    pub sample_period_mm: f64,
}

fn check_grid(grid: &ProbabilityGrid, lattice: &Lattice) -> Result<(), ObservableError> {
    if grid.len() != lattice.n_sites() {
        return Err(ObservableError::GridShapeMismatch {
            grid: grid.len(),
            lattice: lattice.n_sites(),
        });
    }
    Ok(())
}

/// Normalized spacing between two sites: one unit per lattice step along
/// each axis, combined Euclidean.
fn spacing_units(lattice: &Lattice, site: usize, origin: usize) -> f64 {
    let (r, c) = lattice.row_col(site);
    let (r0, c0) = lattice.row_col(origin);
    let dr = r as f64 - r0 as f64;
    let dc = c as f64 - c0 as f64;
    dr.hypot(dc)
}

/// Spread variance of a grid about an origin site, in squared spacing
/// units: sigma^2 = sum(dl_i^2 P_i) / sum(P_i).
///
/// The normalization makes the result invariant under scaling the grid, and
/// the unit-per-step distance makes 1D and 2D walks directly comparable.
pub fn variance(
    grid: &ProbabilityGrid,
    lattice: &Lattice,
    origin: usize,
) -> Result<f64, ObservableError> {
    check_grid(grid, lattice)?;
    if origin >= lattice.n_sites() {
        return Err(ObservableError::SiteOutOfRange {
            site: origin,
            n: lattice.n_sites(),
        });
    }
    let total = grid.sum();
    if !(total > 0.0) {
        return Err(ObservableError::ZeroMass);
    }
    let weighted: f64 = grid
        .values()
        .iter()
        .enumerate()
        .map(|(site, &p)| spacing_units(lattice, site, origin).powi(2) * p)
        .sum();
    Ok(weighted / total)
}

/// Variance of every grid in a trace.
pub fn variance_series(
    trace: &EvolutionTrace,
    lattice: &Lattice,
    origin: usize,
) -> Result<ObservableSeries, ObservableError> {
    let values = trace
        .grids()
        .iter()
        .map(|grid| variance(grid, lattice, origin))
        .collect::<Result<Vec<_>, _>>()?;
    ObservableSeries::new(trace.z_values().to_vec(), values)
}

/// Bhattacharyya-style similarity between two non-negative distributions:
/// S = (sum sqrt(g1 g2))^2 / (sum g1 * sum g2), in [0, 1] with S = 1 only
/// for identical normalized distributions.
pub fn similarity(g1: &ProbabilityGrid, g2: &ProbabilityGrid) -> Result<f64, ObservableError> {
    if g1.len() != g2.len() {
        return Err(ObservableError::ShapeMismatch {
            left: g1.len(),
            right: g2.len(),
        });
    }
    let (s1, s2) = (g1.sum(), g2.sum());
    if !(s1 > 0.0) || !(s2 > 0.0) {
        return Err(ObservableError::ZeroMass);
    }
    let overlap: f64 = g1
        .values()
        .iter()
        .zip(g2.values().iter())
        .map(|(&a, &b)| (a * b).sqrt())
        .sum();
    Ok(overlap * overlap / (s1 * s2))
}

/// Column and row marginals of a grid: x_profile[c] = sum_r P[(r, c)] and
/// y_profile[r] = sum_c P[(r, c)]. Both conserve the grid total exactly.
pub fn projections(
    grid: &ProbabilityGrid,
    lattice: &Lattice,
) -> Result<(Vec<f64>, Vec<f64>), ObservableError> {
    check_grid(grid, lattice)?;
    let mut x_profile = vec![0.0; lattice.cols()];
    let mut y_profile = vec![0.0; lattice.rows()];
    for (site, &p) in grid.values().iter().enumerate() {
        let (r, c) = lattice.row_col(site);
        x_profile[c] += p;
        y_profile[r] += p;
    }
    Ok((x_profile, y_profile))
}

/// Series of the probability at the origin site, P_origin(z).
pub fn return_probability(
    trace: &EvolutionTrace,
    origin: usize,
) -> Result<ObservableSeries, ObservableError> {
    let values = trace
        .grids()
        .iter()
        .map(|grid| {
            grid.values()
                .get(origin)
                .copied()
                .ok_or(ObservableError::SiteOutOfRange {
                    site: origin,
                    n: grid.len(),
                })
        })
        .collect::<Result<Vec<_>, _>>()?;
    ObservableSeries::new(trace.z_values().to_vec(), values)
}

fn window_samples(
    series: &ObservableSeries,
    z_min: f64,
    z_max: f64,
) -> Result<Vec<(f64, f64)>, ObservableError> {
    if !(z_min > 0.0) || !(z_max > z_min) {
        return Err(ObservableError::InvalidWindow { z_min, z_max });
    }
    Ok(series
        .iter()
        .filter(|&(z, _)| z >= z_min && z <= z_max)
        .collect())
}

fn least_squares_loglog(samples: &[(f64, f64)]) -> Result<f64, ObservableError> {
    for &(z, value) in samples {
        if !(value > 0.0) {
            return Err(ObservableError::NonPositiveValue { z_mm: z, value });
        }
    }
    let n = samples.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(z, value) in samples {
        let (x, y) = (z.ln(), value.ln());
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    Ok((n * sxy - sx * sy) / (n * sxx - sx * sx))
}

/// Least-squares slope of log(value) against log(z) over a window, e.g. the
/// ballistic (2) vs diffusive (1) transport exponent of a variance series.
pub fn loglog_slope(
    series: &ObservableSeries,
    z_min: f64,
    z_max: f64,
) -> Result<f64, ObservableError> {
    let samples = window_samples(series, z_min, z_max)?;
    if samples.len() < 5 {
        return Err(ObservableError::TooFewSamples {
            found: samples.len(),
            needed: 5,
        });
    }
    least_squares_loglog(&samples)
}

/// Asymptotic decay exponent d of a return-probability series, P0(z) ~ z^-d.
///
/// Return probabilities oscillate, so the fit runs through the upper
/// envelope: the local maxima of the series inside the window, of which at
/// least 4 are required. A series that is monotone non-increasing over the
/// window has no interior maxima and is its own envelope, so it is fitted
/// directly.
pub fn decay_exponent(
    series: &ObservableSeries,
    z_min: f64,
    z_max: f64,
) -> Result<f64, ObservableError> {
    let samples = window_samples(series, z_min, z_max)?;
    let mut maxima = Vec::new();
    for i in 1..samples.len().saturating_sub(1) {
        if samples[i].1 > samples[i - 1].1 && samples[i].1 >= samples[i + 1].1 {
            maxima.push(samples[i]);
        }
    }
    if maxima.is_empty() {
        let monotone = samples.windows(2).all(|w| w[1].1 <= w[0].1);
        if monotone && samples.len() >= 5 {
            return Ok(-least_squares_loglog(&samples)?);
        }
        return Err(ObservableError::TooFewMaxima {
            found: 0,
            needed: 4,
        });
    }
    if maxima.len() < 4 {
        return Err(ObservableError::TooFewMaxima {
            found: maxima.len(),
            needed: 4,
        });
    }
    Ok(-least_squares_loglog(&maxima)?)
}

/// Pólya number P = 1 - prod_{m=1..max_terms} (1 - P0(m * period)), with
/// P0 linearly interpolated between trace samples.
///
/// The estimate is monotone non-decreasing in `max_terms`: 1 marks a
/// recurrent walk, values below 1 a transient one.
pub fn polya_number(
    p0: &ObservableSeries,
    sample_period_mm: f64,
    max_terms: usize,
) -> Result<PolyaEstimate, ObservableError> {
    if !(sample_period_mm > 0.0) {
        return Err(ObservableError::NonPositivePeriod(sample_period_mm));
    }
    if max_terms == 0 {
        return Err(ObservableError::NoTerms);
    }
    for (z, value) in p0.iter() {
        if !(-1e-12..=1.0 + 1e-12).contains(&value) {
            return Err(ObservableError::InvalidProbability { z_mm: z, value });
        }
    }
    let needed_min = sample_period_mm;
    let needed_max = sample_period_mm * max_terms as f64;
    let available_min = p0.z_values().first().copied().unwrap_or(f64::NAN);
    let available_max = p0.z_values().last().copied().unwrap_or(f64::NAN);
    if p0.is_empty() || available_min > needed_min || available_max < needed_max {
        return Err(ObservableError::InsufficientCoverage {
            needed_min,
            needed_max,
            available_min,
            available_max,
        });
    }
    let mut survival = 1.0;
    for m in 1..=max_terms {
        let p = p0
            .interpolate(sample_period_mm * m as f64)
            .expect("coverage was checked above")
            .clamp(0.0, 1.0);
        survival *= 1.0 - p;
    }
    Ok(PolyaEstimate {
        value: 1.0 - survival,
        terms_used: max_terms,
        sample_period_mm,
    })
}
