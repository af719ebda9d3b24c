//! JSON experiment configuration: schema, defaults and semantic validation.

use std::collections::BTreeSet;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use ctqw::{Backend, KrylovOptions, Lattice, LatticeSpec};

use crate::svg::{colormap_by_name, HeatmapStyle};

/// A semantic configuration error, anchored to the offending field.
#[derive(Debug, Error, PartialEq)]
#[error("{path}: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn new(path: &str, message: impl Into<String>) -> Self {
        Self {
            path: path.to_string(),
            message: message.into(),
        }
    }
}

/// Walker injection site.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Injection {
    Named(NamedInjection),
    Site { row: usize, col: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NamedInjection {
    Center,
}

impl Default for Injection {
    fn default() -> Self {
        Injection::Named(NamedInjection::Center)
    }
}

impl Injection {
    pub fn site_index(&self, lattice: &Lattice) -> Result<usize, ConfigError> {
        match *self {
            Injection::Named(NamedInjection::Center) => Ok(lattice.center_site()),
            Injection::Site { row, col } => lattice.site(row, col).map_err(|e| ConfigError {
                path: "injection".to_string(),
                message: e.to_string(),
            }),
        }
    }
}

/// Propagation lengths: an explicit list or an inclusive range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ZValues {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl ZValues {
    pub fn resolve(&self) -> Result<Vec<f64>, ConfigError> {
        let path = "z_values";
        let values = match self {
            ZValues::List(values) => values.clone(),
            ZValues::Range { start, stop, step } => {
                if !(*step > 0.0) {
                    return Err(ConfigError::new(path, format!("step must be > 0 (got {step})")));
                }
                if stop < start {
                    return Err(ConfigError::new(
                        path,
                        format!("stop ({stop}) must not be below start ({start})"),
                    ));
                }
                let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
                (0..count).map(|k| start + k as f64 * step).collect()
            }
        };
        if values.is_empty() {
            return Err(ConfigError::new(path, "at least one propagation length is required"));
        }
        if values.iter().any(|z| !z.is_finite() || *z < 0.0) {
            return Err(ConfigError::new(path, "lengths must be finite and non-negative"));
        }
        if !values.windows(2).all(|w| w[0] < w[1]) {
            return Err(ConfigError::new(path, "lengths must be strictly increasing"));
        }
        Ok(values)
    }
}

/// Observables the runner can emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Observable {
    Grids,
    Variance,
    P0,
    Polya,
    Slope,
    Decay,
    Projections,
    Similarity,
}

fn default_observables() -> Vec<Observable> {
    vec![Observable::Grids, Observable::Variance, Observable::P0]
}

/// Knobs for the derived observables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisOptions {
    /// Periodic sampling interval for the Pólya product (mm).
    pub polya_period_mm: f64,
    /// Number of periodic samples in the Pólya product.
    pub polya_terms: usize,
    /// Window for the slope and decay fits; defaults to the positive part
    /// of the trace.
    pub fit_window_mm: Option<(f64, f64)>,
    /// Sigma (spacing units) of the analytic Gaussian reference emitted with
    /// the classical baseline.
    pub gaussian_sigma_units: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            polya_period_mm: 0.5,
            polya_terms: 100,
            fit_window_mm: None,
            gaussian_sigma_units: 1.5,
        }
    }
}

/// Output destination and rendering options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputOptions {
    /// Output directory; relative paths are resolved against the
    /// `CTQW_OUT_ROOT` environment variable when it is set.
    pub dir: PathBuf,
    #[serde(default = "default_true")]
    pub svg: bool,
    #[serde(default)]
    pub heatmap: HeatmapStyle,
}

fn default_true() -> bool {
    true
}

fn default_backend() -> Backend {
    Backend::Spectral
}

/// A full experiment: lattice -> Hamiltonian -> evolution -> observables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub lattice: LatticeSpec,
    #[serde(default)]
    pub injection: Injection,
    pub z_values: ZValues,
    #[serde(default = "default_backend")]
    pub backend: Backend,
    #[serde(default)]
    pub krylov: KrylovOptions,
    /// Uniform propagation constant (1/mm); affects only the global phase.
    #[serde(default)]
    pub beta: f64,
    #[serde(default = "default_observables")]
    pub observables: Vec<Observable>,
    #[serde(default)]
    pub classical: bool,
    #[serde(default)]
    pub analysis: AnalysisOptions,
    pub output: OutputOptions,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn observable_set(&self) -> BTreeSet<Observable> {
        self.observables.iter().copied().collect()
    }

    /// Full semantic validation; every error names the offending field.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.lattice.validate().map_err(|e| ConfigError {
            path: "lattice".to_string(),
            message: e.to_string(),
        })?;
        let lattice = Lattice::build(self.lattice.clone()).map_err(|e| ConfigError {
            path: "lattice".to_string(),
            message: e.to_string(),
        })?;
        self.injection.site_index(&lattice)?;
        let z_values = self.z_values.resolve()?;

        if self.krylov.max_subspace < 2 {
            return Err(ConfigError::new("krylov.max_subspace", "must be at least 2"));
        }
        if !(self.krylov.tol > 0.0) {
            return Err(ConfigError::new("krylov.tol", "must be strictly positive"));
        }
        if !self.beta.is_finite() {
            return Err(ConfigError::new("beta", "must be finite"));
        }

        let observables = self.observable_set();
        if observables.contains(&Observable::Similarity) && !self.classical {
            return Err(ConfigError::new(
                "observables",
                "\"similarity\" compares the quantum and classical patterns and needs \"classical\": true",
            ));
        }
        if observables.contains(&Observable::Polya) {
            if !(self.analysis.polya_period_mm > 0.0) {
                return Err(ConfigError::new("analysis.polya_period_mm", "must be > 0"));
            }
            if self.analysis.polya_terms == 0 {
                return Err(ConfigError::new("analysis.polya_terms", "must be at least 1"));
            }
            let needed = self.analysis.polya_period_mm * self.analysis.polya_terms as f64;
            let covered = *z_values.last().unwrap();
            if covered < needed {
                return Err(ConfigError::new(
                    "analysis.polya_terms",
                    format!(
                        "Pólya sampling needs the trace to reach {needed} mm but z_values stop at {covered} mm"
                    ),
                ));
            }
        }
        if observables.contains(&Observable::Slope) || observables.contains(&Observable::Decay) {
            let (z_min, z_max) = self.fit_window(&z_values)?;
            let in_window = z_values.iter().filter(|&&z| z >= z_min && z <= z_max).count();
            if in_window < 5 {
                return Err(ConfigError::new(
                    "analysis.fit_window_mm",
                    format!("window [{z_min}, {z_max}] mm holds {in_window} samples but fits need at least 5"),
                ));
            }
        }
        if !(self.analysis.gaussian_sigma_units > 0.0) {
            return Err(ConfigError::new("analysis.gaussian_sigma_units", "must be > 0"));
        }

        self.output.heatmap.validate().map_err(|e| ConfigError {
            path: format!("output.heatmap.{}", e.path),
            message: e.message,
        })?;
        colormap_by_name(&self.output.heatmap.colormap).map_err(|message| {
            ConfigError::new("output.heatmap.colormap", message)
        })?;
        Ok(())
    }

    /// Fit window for slope/decay: configured, or the positive part of the
    /// trace.
    pub fn fit_window(&self, z_values: &[f64]) -> Result<(f64, f64), ConfigError> {
        let window = match self.analysis.fit_window_mm {
            Some((z_min, z_max)) => (z_min, z_max),
            None => {
                let z_min = z_values
                    .iter()
                    .copied()
                    .find(|&z| z > 0.0)
                    .unwrap_or(f64::NAN);
                (z_min, *z_values.last().unwrap_or(&f64::NAN))
            }
        };
        if !(window.0 > 0.0) || !(window.1 > window.0) {
            return Err(ConfigError::new(
                "analysis.fit_window_mm",
                format!("window must satisfy 0 < z_min < z_max (got [{}, {}])", window.0, window.1),
            ));
        }
        Ok(window)
    }
}
