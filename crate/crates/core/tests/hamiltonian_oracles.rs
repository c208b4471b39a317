mod common;

use std::path::Path;

use common::*;
use nalgebra::DMatrix;
use num_complex::Complex64;
use qvqe_core::exact::fci_spectrum;
use qvqe_core::hamiltonian::{
    build_qubit_hamiltonian, hf_determinant, list_fixtures, number_operator, parse_fcidump,
    sz_operator, write_fcidump, BUNDLED_FIXTURES,
};
use qvqe_core::state::energy;

fn all_labels() -> Vec<String> {
    let labels = list_fixtures(Path::new(BUNDLED_FIXTURES));
    assert_eq!(labels.len(), 17, "{labels:?}");
    labels
}

#[test]
fn h2_dense_ground_state_matches_minimal_basis_value() {
    let sys = system("H2_d0.735");
    let h = build_qubit_hamiltonian(&sys).unwrap().to_dense();
    let real = DMatrix::from_fn(16, 16, |i, j| h[(i, j)].re);
    let eig = nalgebra::SymmetricEigen::new(real);
    let e0 = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    assert!((e0 - -1.1373).abs() < 1e-4, "{e0}");
}

#[test]
fn sector_fci_matches_every_sidecar() {
    for label in all_labels() {
        let f = fixture(&label);
        let meta = f.meta.clone().unwrap();
        let sys = system(&label);
        let expected = if meta.frozen_core_default > 0 {
            meta.fci_energy_frozen_core.unwrap()
        } else {
            meta.fci_energy.unwrap()
        };
        let h = build_qubit_hamiltonian(&sys).unwrap();
        let e = fci_spectrum(&h, &sys, 1).unwrap()[0].energy;
        assert!((e - expected).abs() < 1e-8, "{label}: {e} vs {expected}");
    }
}

#[test]
fn reference_determinant_energy_matches_sidecar() {
    for label in all_labels() {
        let f = fixture(&label);
        let meta = f.meta.clone().unwrap();
        let sys = system(&label);
        let h = build_qubit_hamiltonian(&sys).unwrap();
        let e = energy(&hf_determinant(&sys), &h).unwrap();
        assert!((e - meta.hf_energy).abs() < 1e-8, "{label}: {e} vs {}", meta.hf_energy);
        assert!((sys.hf_energy() - meta.hf_energy).abs() < 1e-8, "{label}");
    }
}

#[test]
fn hamiltonian_is_hermitian_and_conserves_n_and_sz() {
    for label in ["H2_d0.735", "H4_d1.50", "BH_d1.25", "BeH2_d1.00"] {
        let sys = system(label);
        let h = build_qubit_hamiltonian(&sys).unwrap();
        assert!(h.is_hermitian(1e-12), "{label}");
        let n = number_operator(sys.n_qubits).unwrap();
        let sz = sz_operator(sys.n_qubits).unwrap();
        assert!(h.commutator(&n).unwrap().max_abs_coeff() < 1e-12, "{label}");
        assert!(h.commutator(&sz).unwrap().max_abs_coeff() < 1e-12, "{label}");
    }
}

#[test]
fn number_and_sz_are_diagonal_counts() {
    let n = number_operator(6).unwrap();
    let sz = sz_operator(6).unwrap();
    for b in [0usize, 0b000011, 0b101010, 0b110101, 0b111111] {
        let v = basis_vec(6, b);
        let nv = n.to_dense() * &v;
        let sv = sz.to_dense() * &v;
        let alpha = (0..3).filter(|p| b >> (2 * p) & 1 == 1).count() as f64;
        let beta = (0..3).filter(|p| b >> (2 * p + 1) & 1 == 1).count() as f64;
        assert!((nv[b] - Complex64::new(alpha + beta, 0.0)).norm() < 1e-14);
        assert!((sv[b] - Complex64::new(0.5 * (alpha - beta), 0.0)).norm() < 1e-14);
    }
}

#[test]
fn fcidump_round_trip_preserves_integrals() {
    for label in ["H2_d0.735", "BH_d1.25"] {
        let f = fixture(label);
        let again = parse_fcidump(&write_fcidump(&f.integrals)).unwrap();
        assert_eq!(again.n_spatial, f.integrals.n_spatial);
        assert!((again.core_energy - f.integrals.core_energy).abs() < 1e-14);
        let n = f.integrals.n_spatial;
        for p in 0..n {
            for q in 0..n {
                assert!((again.h1(p, q) - f.integrals.h1(p, q)).abs() < 1e-14);
                for r in 0..n {
                    for s in 0..n {
                        assert!((again.h2(p, q, r, s) - f.integrals.h2(p, q, r, s)).abs() < 1e-14);
                    }
                }
            }
        }
    }
}

#[test]
fn freezing_the_core_shifts_qubits_and_keeps_the_reference_energy() {
    let f = fixture("BeH2_d1.00");
    let full = qvqe_core::MoleculeSystem::from_fixture(&f, 0).unwrap();
    let frozen = qvqe_core::MoleculeSystem::from_fixture(&f, 1).unwrap();
    assert_eq!(full.n_qubits, frozen.n_qubits + 2);
    assert_eq!(full.n_alpha, frozen.n_alpha + 1);
    assert!((full.hf_energy() - frozen.hf_energy()).abs() < 1e-8);
}
