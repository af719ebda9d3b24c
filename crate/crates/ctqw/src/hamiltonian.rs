//! Tight-binding Hamiltonian assembly from a lattice's coupling graph.
//!
//! The Hamiltonian is a real symmetric N x N matrix with a uniform
//! propagation constant on the diagonal and the pair couplings off-diagonal.
//! Both a dense matrix (for the spectral backend) and the pair list (for
//! sparse matrix-vector products in the Krylov backend) are kept.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::lattice::{CouplingPair, Lattice};

/// Real symmetric single-excitation Hamiltonian (entries in 1/mm).
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    beta: f64,
    dense: Array2<f64>,
    pairs: Vec<CouplingPair>,
}

/// Result of [`Hamiltonian::hermiticity_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HermiticityReport {
    pub max_asymmetry: f64,
    pub pass: bool,
}

impl Hamiltonian {
    /// Assemble the Hamiltonian for a lattice with uniform propagation
    /// constant `beta` (1/mm) on the diagonal.
    ///
    /// A uniform diagonal only contributes a global phase to the evolved
    /// state, so every probability in this crate is independent of `beta`;
    /// 0 is the conventional choice.
    pub fn build(lattice: &Lattice, beta: f64) -> Self {
        let n = lattice.n_sites();
        let pairs = lattice.neighbor_pairs();
        let mut dense = Array2::zeros((n, n));
        for i in 0..n {
            dense[[i, i]] = beta;
        }
        for p in &pairs {
            dense[[p.i, p.j]] = p.coupling;
            dense[[p.j, p.i]] = p.coupling;
        }
        Self { beta, dense, pairs }
    }

    /// Wrap an explicit dense matrix, deriving the pair list from the
    /// strictly upper triangle. Intended for custom Hamiltonians and tests;
    /// the sparse product assumes the matrix is symmetric, which
    /// [`Hamiltonian::hermiticity_check`] verifies.
    pub fn from_dense(dense: Array2<f64>, beta: f64) -> Self {
        assert_eq!(dense.nrows(), dense.ncols(), "Hamiltonian must be square");
        let n = dense.nrows();
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if dense[[i, j]] != 0.0 {
                    pairs.push(CouplingPair {
                        i,
                        j,
                        coupling: dense[[i, j]],
                    });
                }
            }
        }
        Self { beta, dense, pairs }
    }

    pub fn n_sites(&self) -> usize {
        self.dense.nrows()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn dense(&self) -> &Array2<f64> {
        &self.dense
    }

    pub fn pairs(&self) -> &[CouplingPair] {
        &self.pairs
    }

    /// y = H x via the pair list; O(N + pairs) rather than O(N^2).
    pub fn apply(&self, x: &Array1<Complex64>) -> Array1<Complex64> {
        let mut y: Array1<Complex64> = x.mapv(|a| a * self.beta);
        for p in &self.pairs {
            y[p.i] += x[p.j] * p.coupling;
            y[p.j] += x[p.i] * p.coupling;
        }
        y
    }

    /// Report the maximum absolute asymmetry |H[i,j] - H[j,i]|; passes only
    /// when it is exactly zero.
    pub fn hermiticity_check(&self) -> HermiticityReport {
        let n = self.n_sites();
        let mut max_asymmetry = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                max_asymmetry = max_asymmetry.max((self.dense[[i, j]] - self.dense[[j, i]]).abs());
            }
        }
        HermiticityReport {
            max_asymmetry,
            pass: max_asymmetry == 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeSpec;
    use ndarray::array;

    #[test]
    fn two_site_matrix() {
        let lattice = Lattice::build(LatticeSpec::new(1, 2)).unwrap();
        let c = lattice.neighbor_pairs()[0].coupling;
        let h = Hamiltonian::build(&lattice, 0.0);
        assert_eq!(h.dense(), &array![[0.0, c], [c, 0.0]]);
    }

    #[test]
    fn single_site_is_diagonal() {
        let lattice = Lattice::build(LatticeSpec::new(1, 1)).unwrap();
        let h = Hamiltonian::build(&lattice, 2.5);
        assert_eq!(h.dense(), &array![[2.5]]);
        assert!(h.hermiticity_check().pass);
    }

    #[test]
    fn nearest_neighbor_chain_is_tridiagonal() {
        let mut spec = LatticeSpec::new(1, 3);
        spec.cutoff_um = 20.0; // below 2 * dh
        let lattice = Lattice::build(spec).unwrap();
        let c = lattice.spec().coupling.coefficient(13.5, 0.0).unwrap();
        let h = Hamiltonian::build(&lattice, 0.0);
        assert_eq!(
            h.dense(),
            &array![[0.0, c, 0.0], [c, 0.0, c], [0.0, c, 0.0]]
        );
    }

    #[test]
    fn built_hamiltonians_are_exactly_symmetric() {
        let lattice = Lattice::build(LatticeSpec::new(5, 4)).unwrap();
        let h = Hamiltonian::build(&lattice, 1.0);
        let report = h.hermiticity_check();
        assert!(report.pass);
        assert_eq!(report.max_asymmetry, 0.0);
        // Off-diagonal nonzeros come in symmetric pairs.
        let nonzeros = h
            .dense()
            .indexed_iter()
            .filter(|((i, j), v)| i != j && **v != 0.0)
            .count();
        assert_eq!(nonzeros, 2 * h.pairs().len());
    }

    #[test]
    fn asymmetric_matrix_fails_check() {
        let h = Hamiltonian::from_dense(array![[0.0, 1.0], [0.0, 0.0]], 0.0);
        let report = h.hermiticity_check();
        assert!(!report.pass);
        assert_eq!(report.max_asymmetry, 1.0);
    }

    #[test]
    fn apply_matches_dense_product() {
        let lattice = Lattice::build(LatticeSpec::new(3, 3)).unwrap();
        let h = Hamiltonian::build(&lattice, 0.7);
        let x: Array1<Complex64> = (0..h.n_sites())
            .map(|k| Complex64::new(k as f64, -(k as f64) * 0.3))
            .collect();
        let dense = h.dense().mapv(|v| Complex64::new(v, 0.0)).dot(&x);
        let sparse = h.apply(&x);
        for (a, b) in dense.iter().zip(sparse.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
