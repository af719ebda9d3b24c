//! Lattice geometry and the distance/direction-dependent coupling model.
//!
//! Sites live on a rectangular grid with independent horizontal and vertical
//! center-to-center spacings. Couplings between waveguide pairs decay
//! exponentially with spacing, with separate fits for the horizontal and
//! vertical directions; inclined pairs take the average of both fits
//! evaluated at the pair's Euclidean spacing.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LatticeError {
    #[error("lattice must have at least one row and one column (got {rows}x{cols})")]
    EmptyGrid { rows: usize, cols: usize },
    #[error("{name} must be strictly positive (got {value})")]
    NonPositive { name: &'static str, value: f64 },
    #[error("coupling coefficient is undefined for coincident sites (dx = dy = 0)")]
    CoincidentSites,
    #[error("site ({row}, {col}) is outside a {rows}x{cols} lattice")]
    SiteOutOfBounds {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
}

/// Exponential-decay model for the coupling coefficient, with separate
/// horizontal and vertical fits.
///
/// The coefficient at spacing `d` (µm) is `amp * exp(-kappa * d)` in 1/mm,
/// using the horizontal fit for purely horizontal pairs, the vertical fit
/// for purely vertical pairs, and the mean of both fits for inclined pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingModel {
    /// Amplitude of the horizontal exponential fit (1/mm).
    pub amp_h: f64,
    /// Horizontal decay rate (1/µm).
    pub kappa_h: f64,
    /// Amplitude of the vertical exponential fit (1/mm).
    pub amp_v: f64,
    /// Vertical decay rate (1/µm).
    pub kappa_v: f64,
}

impl CouplingModel {
    /// Model with prescribed nearest-neighbor couplings: the amplitudes are
    /// chosen so that the horizontal fit equals `c_h` at spacing `dh_um` and
    /// the vertical fit equals `c_v` at spacing `dv_um`.
    pub fn with_nearest_couplings(c_h: f64, dh_um: f64, c_v: f64, dv_um: f64, kappa: f64) -> Self {
        Self {
            amp_h: c_h * (kappa * dh_um).exp(),
            kappa_h: kappa,
            amp_v: c_v * (kappa * dv_um).exp(),
            kappa_v: kappa,
        }
    }

    pub fn validate(&self) -> Result<(), LatticeError> {
        for (name, value) in [
            ("amp_h", self.amp_h),
            ("kappa_h", self.kappa_h),
            ("amp_v", self.amp_v),
            ("kappa_v", self.kappa_v),
        ] {
            if !(value > 0.0) {
                return Err(LatticeError::NonPositive { name, value });
            }
        }
        Ok(())
    }

    /// Coupling coefficient (1/mm) for a pair separated by `dx_um`
    /// horizontally and `dy_um` vertically.
    ///
    /// Purely horizontal and purely vertical pairs use their own fit; an
    /// inclined pair takes the arithmetic mean of the two fits, both
    /// evaluated at the Euclidean spacing. Coincident sites are rejected:
    /// self-coupling is the propagation constant, not a coupling.
    pub fn coefficient(&self, dx_um: f64, dy_um: f64) -> Result<f64, LatticeError> {
        let d = dx_um.hypot(dy_um);
        if d == 0.0 {
            return Err(LatticeError::CoincidentSites);
        }
        let horizontal = self.amp_h * (-self.kappa_h * d).exp();
        let vertical = self.amp_v * (-self.kappa_v * d).exp();
        Ok(if dy_um == 0.0 {
            horizontal
        } else if dx_um == 0.0 {
            vertical
        } else {
            0.5 * (horizontal + vertical)
        })
    }
}

impl Default for CouplingModel {
    /// Placeholder fit: both nearest-neighbor couplings equal 0.1 /mm at the
    /// default spacings (13.5 µm horizontal, 15 µm vertical) with decay rate
    /// 0.2 /µm. The measured fit constants are not published, so every
    /// experiment should treat these as configurable.
    fn default() -> Self {
        Self::with_nearest_couplings(0.1, default_dh_um(), 0.1, default_dv_um(), 0.2)
    }
}

pub fn default_dv_um() -> f64 {
    15.0
}

pub fn default_dh_um() -> f64 {
    13.5
}

/// Default cutoff radius (µm): keeps the four pair classes discussed for the
/// chip geometry (13.5, 15, ~20.19 and ~30.89 µm) and drops farther pairs.
pub fn default_cutoff_um() -> f64 {
    31.0
}

/// Grid geometry plus the coupling model and cutoff radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub rows: usize,
    pub cols: usize,
    /// Vertical center-to-center spacing (µm).
    #[serde(default = "default_dv_um")]
    pub dv_um: f64,
    /// Horizontal center-to-center spacing (µm).
    #[serde(default = "default_dh_um")]
    pub dh_um: f64,
    #[serde(default)]
    pub coupling: CouplingModel,
    /// Pairs farther apart than this center-to-center distance (µm) are
    /// dropped from the coupling graph.
    #[serde(default = "default_cutoff_um")]
    pub cutoff_um: f64,
}

impl LatticeSpec {
    /// Spec with the default spacings, coupling model and cutoff.
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            dv_um: default_dv_um(),
            dh_um: default_dh_um(),
            coupling: CouplingModel::default(),
            cutoff_um: default_cutoff_um(),
        }
    }

    pub fn validate(&self) -> Result<(), LatticeError> {
        if self.rows == 0 || self.cols == 0 {
            return Err(LatticeError::EmptyGrid {
                rows: self.rows,
                cols: self.cols,
            });
        }
        for (name, value) in [
            ("dv_um", self.dv_um),
            ("dh_um", self.dh_um),
            ("cutoff_um", self.cutoff_um),
        ] {
            if !(value > 0.0) {
                return Err(LatticeError::NonPositive { name, value });
            }
        }
        self.coupling.validate()
    }
}

/// One unordered coupled pair of sites, stored once with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingPair {
    pub i: usize,
    pub j: usize,
    /// Coupling coefficient (1/mm).
    pub coupling: f64,
}

/// A validated lattice: per-site coordinates and the (row, col) <-> flat
/// index bijection, with `index = row * cols + col`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    spec: LatticeSpec,
    /// Per-site (x_um, y_um), indexed by flat site index.
    positions: Vec<(f64, f64)>,
}

impl Lattice {
    pub fn build(spec: LatticeSpec) -> Result<Self, LatticeError> {
        spec.validate()?;
        let mut positions = Vec::with_capacity(spec.rows * spec.cols);
        for r in 0..spec.rows {
            for c in 0..spec.cols {
                positions.push((c as f64 * spec.dh_um, r as f64 * spec.dv_um));
            }
        }
        Ok(Self { spec, positions })
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn rows(&self) -> usize {
        self.spec.rows
    }

    pub fn cols(&self) -> usize {
        self.spec.cols
    }

    pub fn n_sites(&self) -> usize {
        self.positions.len()
    }

    /// Flat index of the site at (row, col).
    pub fn site(&self, row: usize, col: usize) -> Result<usize, LatticeError> {
        if row >= self.spec.rows || col >= self.spec.cols {
            return Err(LatticeError::SiteOutOfBounds {
                row,
                col,
                rows: self.spec.rows,
                cols: self.spec.cols,
            });
        }
        Ok(row * self.spec.cols + col)
    }

    /// Inverse of [`Lattice::site`].
    pub fn row_col(&self, index: usize) -> (usize, usize) {
        (index / self.spec.cols, index % self.spec.cols)
    }

    /// The central site, where walkers are injected by default.
    pub fn center_site(&self) -> usize {
        (self.spec.rows / 2) * self.spec.cols + self.spec.cols / 2
    }

    /// (x_um, y_um) coordinates of a site.
    pub fn position(&self, index: usize) -> (f64, f64) {
        self.positions[index]
    }

    pub fn positions(&self) -> &[(f64, f64)] {
        &self.positions
    }

    /// Every unordered pair of sites within the cutoff radius, each exactly
    /// once, with its coupling coefficient.
    ///
    /// Sites are scanned over a window of row/column offsets large enough to
    /// cover the cutoff, so the cost is linear in the number of sites for a
    /// fixed cutoff.
    pub fn neighbor_pairs(&self) -> Vec<CouplingPair> {
        let spec = &self.spec;
        let row_span = (spec.cutoff_um / spec.dv_um).floor() as isize;
        let col_span = (spec.cutoff_um / spec.dh_um).floor() as isize;
        let mut pairs = Vec::new();
        for r in 0..spec.rows as isize {
            for c in 0..spec.cols as isize {
                for dr in 0..=row_span {
                    for dc in -col_span..=col_span {
                        // Enumerate each unordered pair once: strictly below,
                        // or strictly to the right within the same row.
                        if dr == 0 && dc <= 0 {
                            continue;
                        }
                        let (r2, c2) = (r + dr, c + dc);
                        if r2 >= spec.rows as isize || c2 < 0 || c2 >= spec.cols as isize {
                            continue;
                        }
                        let dx = dc.unsigned_abs() as f64 * spec.dh_um;
                        let dy = dr as f64 * spec.dv_um;
                        if dx.hypot(dy) > spec.cutoff_um {
                            continue;
                        }
                        let coupling = spec
                            .coupling
                            .coefficient(dx, dy)
                            .expect("pair offsets are never both zero");
                        pairs.push(CouplingPair {
                            i: (r * spec.cols as isize + c) as usize,
                            j: (r2 * spec.cols as isize + c2) as usize,
                            coupling,
                        });
                    }
                }
            }
        }
        pairs
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn single_site_lattice() {
        let lattice = Lattice::build(LatticeSpec::new(1, 1)).unwrap();
        assert_eq!(lattice.n_sites(), 1);
        assert_eq!(lattice.position(0), (0.0, 0.0));
        assert!(lattice.neighbor_pairs().is_empty());
    }

    #[test]
    fn two_by_two_coordinates() {
        let lattice = Lattice::build(LatticeSpec::new(2, 2)).unwrap();
        assert_eq!(
            lattice.positions(),
            &[(0.0, 0.0), (13.5, 0.0), (0.0, 15.0), (13.5, 15.0)]
        );
    }

    #[test]
    fn chip_scale_extent() {
        // 49x49 at the default spacings spans 0.648 mm x 0.72 mm.
        let lattice = Lattice::build(LatticeSpec::new(49, 49)).unwrap();
        let max_x = lattice.positions().iter().map(|p| p.0).fold(0.0, f64::max);
        let max_y = lattice.positions().iter().map(|p| p.1).fold(0.0, f64::max);
        assert_relative_eq!(max_x, 648.0);
        assert_relative_eq!(max_y, 720.0);
    }

    #[test]
    fn rejects_degenerate_specs() {
        assert!(matches!(
            Lattice::build(LatticeSpec::new(0, 3)),
            Err(LatticeError::EmptyGrid { .. })
        ));
        let mut spec = LatticeSpec::new(2, 2);
        spec.dh_um = 0.0;
        assert!(matches!(
            Lattice::build(spec),
            Err(LatticeError::NonPositive { name: "dh_um", .. })
        ));
        let mut spec = LatticeSpec::new(2, 2);
        spec.coupling.kappa_v = -1.0;
        assert!(Lattice::build(spec).is_err());
    }

    #[test]
    fn site_index_bijection() {
        let lattice = Lattice::build(LatticeSpec::new(3, 5)).unwrap();
        for index in 0..lattice.n_sites() {
            let (r, c) = lattice.row_col(index);
            assert_eq!(lattice.site(r, c).unwrap(), index);
        }
        assert!(lattice.site(3, 0).is_err());
        assert!(lattice.site(0, 5).is_err());
    }

    #[test]
    fn horizontal_coefficient_is_exponential() {
        let model = CouplingModel {
            amp_h: 1.0,
            kappa_h: 0.2,
            amp_v: 1.0,
            kappa_v: 0.2,
        };
        assert_relative_eq!(
            model.coefficient(15.0, 0.0).unwrap(),
            (-3.0f64).exp(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn symmetric_model_is_isotropic() {
        let model = CouplingModel {
            amp_h: 1.0,
            kappa_h: 0.2,
            amp_v: 1.0,
            kappa_v: 0.2,
        };
        assert_eq!(
            model.coefficient(3.0, 4.0).unwrap(),
            model.coefficient(4.0, 3.0).unwrap()
        );
    }

    #[test]
    fn inclined_pair_averages_both_fits() {
        let model = CouplingModel {
            amp_h: 1.0,
            kappa_h: 0.2,
            amp_v: 2.0,
            kappa_v: 0.1,
        };
        // d = 5, so (1.0 e^{-1.0} + 2.0 e^{-0.5}) / 2.
        let expected = 0.5 * ((-1.0f64).exp() + 2.0 * (-0.5f64).exp());
        assert_relative_eq!(
            model.coefficient(3.0, 4.0).unwrap(),
            expected,
            max_relative = 1e-12
        );
        assert_relative_eq!(expected, 0.790_470_38, epsilon = 1e-8);
    }

    #[test]
    fn coincident_sites_rejected() {
        let model = CouplingModel::default();
        assert_eq!(
            model.coefficient(0.0, 0.0),
            Err(LatticeError::CoincidentSites)
        );
    }

    #[test]
    fn default_model_has_uniform_nearest_couplings() {
        let model = CouplingModel::default();
        let horizontal = model.coefficient(13.5, 0.0).unwrap();
        let vertical = model.coefficient(0.0, 15.0).unwrap();
        assert_relative_eq!(horizontal, 0.1, max_relative = 1e-12);
        assert_relative_eq!(vertical, 0.1, max_relative = 1e-12);
    }

    #[test]
    fn single_pair_chain() {
        let lattice = Lattice::build(LatticeSpec::new(1, 2)).unwrap();
        let pairs = lattice.neighbor_pairs();
        assert_eq!(pairs.len(), 1);
        assert_eq!((pairs[0].i, pairs[0].j), (0, 1));
        let c = lattice.spec().coupling.coefficient(13.5, 0.0).unwrap();
        assert_relative_eq!(pairs[0].coupling, c);
    }

    #[test]
    fn cutoff_below_nearest_spacing_gives_no_pairs() {
        let mut spec = LatticeSpec::new(4, 4);
        spec.cutoff_um = 10.0;
        let lattice = Lattice::build(spec).unwrap();
        assert!(lattice.neighbor_pairs().is_empty());
    }

    /// Hand enumeration of the 3x3 grid at the default spacings and cutoff.
    ///
    /// Spacing classes within 31 µm: 13.5 (6 pairs), 15 (6), sqrt(13.5^2 +
    /// 15^2) ~ 20.185 (8), 27 (3), 30 (3) and sqrt(27^2 + 15^2) ~ 30.887 (4).
    /// The two knight-move classes sqrt(13.5^2 + 30^2) ~ 32.9 and
    /// sqrt(27^2 + 30^2) ~ 40.4 fall outside the cutoff, leaving 30 of the
    /// 36 possible pairs.
    #[test]
    fn three_by_three_spacing_classes() {
        let lattice = Lattice::build(LatticeSpec::new(3, 3)).unwrap();
        let pairs = lattice.neighbor_pairs();
        assert_eq!(pairs.len(), 30);

        let spacing = |p: &CouplingPair| {
            let (xi, yi) = lattice.position(p.i);
            let (xj, yj) = lattice.position(p.j);
            (xj - xi).hypot(yj - yi)
        };
        let count_class = |d: f64| {
            pairs
                .iter()
                .filter(|p| (spacing(p) - d).abs() < 1e-9)
                .count()
        };
        assert_eq!(count_class(13.5), 6);
        assert_eq!(count_class(15.0), 6);
        assert_eq!(count_class(407.25f64.sqrt()), 8);
        assert_eq!(count_class(27.0), 3);
        assert_eq!(count_class(30.0), 3);
        // The N-class pair exists iff a site two columns and one row away
        // exists; on 3x3 there are four such pairs.
        assert_eq!(count_class(954.0f64.sqrt()), 4);

        // The center site sees only the three nearest classes.
        let center = lattice.center_site();
        let incident: Vec<f64> = pairs
            .iter()
            .filter(|p| p.i == center || p.j == center)
            .map(|p| spacing(p))
            .collect();
        assert_eq!(incident.len(), 8);
        assert_eq!(incident.iter().filter(|d| (**d - 13.5).abs() < 1e-9).count(), 2);
        assert_eq!(incident.iter().filter(|d| (**d - 15.0).abs() < 1e-9).count(), 2);
        assert_eq!(
            incident
                .iter()
                .filter(|d| (**d - 407.25f64.sqrt()).abs() < 1e-9)
                .count(),
            4
        );
    }

    #[test]
    fn interior_sites_share_coupling_multiset() {
        // Translation invariance: every interior site of a uniform grid is
        // incident to the same multiset of coupling values.
        let lattice = Lattice::build(LatticeSpec::new(7, 7)).unwrap();
        let pairs = lattice.neighbor_pairs();
        let incident_couplings = |site: usize| {
            let mut values: Vec<f64> = pairs
                .iter()
                .filter(|p| p.i == site || p.j == site)
                .map(|p| p.coupling)
                .collect();
            values.sort_by(|a, b| a.partial_cmp(b).unwrap());
            values
        };
        // Interior here means at least 2 rows and 2 columns from every edge,
        // enough for the 31 µm cutoff window.
        let reference = incident_couplings(lattice.site(2, 2).unwrap());
        for r in 2..5 {
            for c in 2..5 {
                assert_eq!(incident_couplings(lattice.site(r, c).unwrap()), reference);
            }
        }
    }

    fn brute_force_pairs(lattice: &Lattice) -> Vec<(usize, usize)> {
        let n = lattice.n_sites();
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let (xi, yi) = lattice.position(i);
                let (xj, yj) = lattice.position(j);
                if (xj - xi).hypot(yj - yi) <= lattice.spec().cutoff_um {
                    pairs.push((i, j));
                }
            }
        }
        pairs
    }

    proptest! {
        #[test]
        fn matches_brute_force_scan(
            rows in 1usize..=7,
            cols in 1usize..=7,
            cutoff in 5.0f64..80.0,
        ) {
            let mut spec = LatticeSpec::new(rows, cols);
            spec.cutoff_um = cutoff;
            let lattice = Lattice::build(spec).unwrap();
            let mut fast: Vec<(usize, usize)> =
                lattice.neighbor_pairs().iter().map(|p| (p.i, p.j)).collect();
            fast.sort_unstable();
            prop_assert_eq!(fast, brute_force_pairs(&lattice));
        }

        #[test]
        fn pairs_are_unique_and_ordered(rows in 1usize..=6, cols in 1usize..=6) {
            let lattice = Lattice::build(LatticeSpec::new(rows, cols)).unwrap();
            let pairs = lattice.neighbor_pairs();
            let mut seen = std::collections::HashSet::new();
            for p in &pairs {
                prop_assert!(p.i < p.j);
                prop_assert!(seen.insert((p.i, p.j)));
            }
        }

        #[test]
        fn coefficient_decreases_with_spacing(
            d1 in 1.0f64..60.0,
            extra in 0.1f64..40.0,
            vertical in proptest::bool::ANY,
        ) {
            let model = CouplingModel::default();
            let at = |d: f64| if vertical {
                model.coefficient(0.0, d).unwrap()
            } else {
                model.coefficient(d, 0.0).unwrap()
            };
            prop_assert!(at(d1) > at(d1 + extra));
        }
    }
}
