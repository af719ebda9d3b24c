//! Oracle-based integration checks of the evolution backends: the analytic
//! Bessel solution of the uniform chain, cross-backend agreement, and the
//! global-phase independence of probabilities.

mod support;

use ctqw::{
    evolve_krylov, evolve_spectral, Backend, CouplingModel, Hamiltonian, KrylovOptions, Lattice,
    LatticeSpec, Propagator, StateVector,
};

/// Uniform nearest-neighbor chain: `cols` sites with only the 13.5 µm
/// horizontal coupling inside the cutoff.
fn chain(cols: usize) -> (Lattice, f64) {
    let mut spec = LatticeSpec::new(1, cols);
    spec.cutoff_um = 14.0;
    let lattice = Lattice::build(spec).unwrap();
    let c = lattice.spec().coupling.coefficient(13.5, 0.0).unwrap();
    (lattice, c)
}

#[test]
fn uniform_chain_matches_bessel_solution() {
    // On the infinite uniform chain with center injection the exact site
    // probabilities are J_{|j - j0|}(2 C z)^2; 101 sites keep the wavefront
    // far from the boundary for C z <= 5.
    let (lattice, c) = chain(101);
    let h = Hamiltonian::build(&lattice, 0.0);
    let center = lattice.center_site();
    let psi0 = StateVector::basis_state(h.n_sites(), center).unwrap();
    let propagator = Propagator::diagonalize(&h).unwrap();

    for &cz in &[0.5, 1.0, 2.5, 5.0] {
        let z = cz / c;
        let probabilities = propagator.evolve(&psi0, z).unwrap().probabilities();
        let reference = support::bessel_j_row(50, 2.0 * cz);
        for (site, &p) in probabilities.values().iter().enumerate() {
            let order = site.abs_diff(center);
            let expected = if order <= 50 {
                reference[order] * reference[order]
            } else {
                0.0
            };
            assert!(
                (p - expected).abs() < 1e-6,
                "site {site}: P = {p}, Bessel oracle = {expected} at Cz = {cz}"
            );
        }
    }
}

#[test]
fn krylov_matches_bessel_solution_on_chain() {
    let (lattice, c) = chain(101);
    let h = Hamiltonian::build(&lattice, 0.0);
    let center = lattice.center_site();
    let psi0 = StateVector::basis_state(h.n_sites(), center).unwrap();
    let cz = 4.0;
    let z = cz / c;
    let psi = evolve_krylov(&h, &psi0, z, &KrylovOptions::default()).unwrap();
    let reference = support::bessel_j_row(50, 2.0 * cz);
    for (site, &p) in psi.probabilities().values().iter().enumerate() {
        let order = site.abs_diff(center);
        let expected = if order <= 50 {
            reference[order] * reference[order]
        } else {
            0.0
        };
        assert!((p - expected).abs() < 1e-6);
    }
}

#[test]
fn backends_agree_on_21x21_lattice() {
    let lattice = Lattice::build(LatticeSpec::new(21, 21)).unwrap();
    let h = Hamiltonian::build(&lattice, 0.0);
    let psi0 = StateVector::basis_state(h.n_sites(), lattice.center_site()).unwrap();
    let propagator = Propagator::diagonalize(&h).unwrap();
    for &z in &[1.0, 5.0, 10.0] {
        let spectral = propagator.evolve(&psi0, z).unwrap();
        let krylov = evolve_krylov(&h, &psi0, z, &KrylovOptions::default()).unwrap();
        let max_diff = spectral
            .amplitudes()
            .iter()
            .zip(krylov.amplitudes().iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(max_diff < 1e-8, "max amplitude diff {max_diff} at z = {z}");
    }
}

#[test]
fn probabilities_are_independent_of_propagation_constant() {
    // A uniform diagonal shift only rotates the global phase.
    let lattice = Lattice::build(LatticeSpec::new(5, 5)).unwrap();
    let psi0 = StateVector::basis_state(25, lattice.center_site()).unwrap();
    let h_zero = Hamiltonian::build(&lattice, 0.0);
    let h_shifted = Hamiltonian::build(&lattice, 8.25);
    for &z in &[0.7, 3.0, 9.5] {
        let p_zero = evolve_spectral(&h_zero, &psi0, z).unwrap().probabilities();
        let p_shifted = evolve_spectral(&h_shifted, &psi0, z)
            .unwrap()
            .probabilities();
        let max_diff = p_zero
            .values()
            .iter()
            .zip(p_shifted.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(max_diff < 1e-12, "max probability diff {max_diff} at z = {z}");
    }
}

#[test]
fn anisotropic_coupling_model_still_evolves_unitarily() {
    let mut spec = LatticeSpec::new(6, 7);
    spec.coupling = CouplingModel {
        amp_h: 2.0,
        kappa_h: 0.15,
        amp_v: 1.0,
        kappa_v: 0.25,
    };
    let lattice = Lattice::build(spec).unwrap();
    let h = Hamiltonian::build(&lattice, 0.0);
    let psi0 = StateVector::basis_state(h.n_sites(), lattice.center_site()).unwrap();
    for backend in [Backend::Spectral, Backend::Krylov] {
        let trace = ctqw::evolve_trace(&h, &psi0, &[0.5, 2.0, 6.0], backend).unwrap();
        for (_, grid) in trace.iter() {
            assert!((grid.sum() - 1.0).abs() < 1e-10);
        }
    }
}
