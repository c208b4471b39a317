mod common;

use common::*;
use nalgebra::{DMatrix, SymmetricEigen};
use qvqe_core::exact::{fci_spectrum, first_excited_singlet, track_overlaps, SectorBasis};
use qvqe_core::hamiltonian::{build_qubit_hamiltonian, number_operator, sz_operator};
use qvqe_core::state::{overlap_sq, Simulator};

fn real_dense(op: &qvqe_core::pauli::PauliSum) -> DMatrix<f64> {
    let d = op.to_dense();
    DMatrix::from_fn(d.nrows(), d.ncols(), |i, j| d[(i, j)].re)
}

#[test]
fn sector_solve_matches_penalised_full_space() {
    for label in ["H2_d0.735", "H4_d1.50", "H4_d3.20"] {
        let sys = system(label);
        let h = build_qubit_hamiltonian(&sys).unwrap();
        let n = real_dense(&number_operator(sys.n_qubits).unwrap());
        let sz = real_dense(&sz_operator(sys.n_qubits).unwrap());
        let dim = 1 << sys.n_qubits;
        let id = DMatrix::<f64>::identity(dim, dim);
        let n_shift = &n - &id * sys.n_electrons() as f64;
        let sz_shift = &sz - &id * (0.5 * (sys.n_alpha as f64 - sys.n_beta as f64));
        let penalised = real_dense(&h) + (&n_shift * &n_shift + &sz_shift * &sz_shift) * 10.0;
        let mut full: Vec<f64> = SymmetricEigen::new(penalised).eigenvalues.iter().copied().collect();
        full.sort_by(f64::total_cmp);
        let roots = 6;
        let sector = fci_spectrum(&h, &sys, roots).unwrap();
        for (k, pair) in sector.iter().enumerate() {
            assert!((pair.energy - full[k]).abs() < 1e-9, "{label} root {k}");
        }
    }
}

#[test]
fn eigenpairs_are_orthonormal_spin_pure_and_solve_h() {
    for label in ["H4_d3.20", "BH_d1.25", "BeH2_d1.00"] {
        let sys = system(label);
        let h = build_qubit_hamiltonian(&sys).unwrap();
        let sim = Simulator::new(&h, sys.n_alpha, sys.n_beta);
        let pairs = fci_spectrum(&h, &sys, 8).unwrap();
        for (i, p) in pairs.iter().enumerate() {
            let hv = sim.apply_hamiltonian(&p.vector).unwrap();
            let residual: f64 = hv
                .amplitudes()
                .iter()
                .zip(p.vector.amplitudes())
                .map(|(a, b)| (a - b * p.energy).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(residual < 1e-9, "{label} root {i}: {residual}");
            let s = p.s_squared;
            let spin = (-1.0 + (1.0 + 4.0 * s).sqrt()) / 2.0;
            assert!((2.0 * spin - (2.0 * spin).round()).abs() < 1e-8, "{label}: S² = {s}");
            for (j, q) in pairs.iter().enumerate() {
                let o = p.vector.inner(&q.vector).unwrap().norm();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((o - want).abs() < 1e-10, "{label} {i},{j}");
            }
        }
        assert!(pairs.windows(2).all(|w| w[0].energy <= w[1].energy + 1e-12));
    }
}

#[test]
fn overlaps_of_a_root_with_the_spectrum_form_an_identity_row() {
    let sys = system("H4_d3.00");
    let h = build_qubit_hamiltonian(&sys).unwrap();
    let pairs = fci_spectrum(&h, &sys, 5).unwrap();
    let states: Vec<_> = pairs.iter().map(|p| p.vector.clone()).collect();
    let table = track_overlaps(&states, &pairs).unwrap();
    for (i, row) in table.rows.iter().enumerate() {
        for (j, o) in row.iter().enumerate() {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((o - want).abs() < 1e-10);
        }
    }
}

#[test]
fn stretched_h4_has_a_dense_low_lying_manifold() {
    let sys = system("H4_d3.20");
    let h = build_qubit_hamiltonian(&sys).unwrap();
    let pairs = fci_spectrum(&h, &sys, 8).unwrap();
    let gap = pairs[5].energy - pairs[0].energy;
    assert!(gap < 1e-3, "six lowest roots span {gap}");
    let es = first_excited_singlet(&pairs, &[]).unwrap();
    assert!(pairs[es].s_squared < 1e-6 && es > 0);
    assert!(pairs[es].energy - pairs[0].energy < 1.6e-3);
}

#[test]
fn overlaps_with_a_partial_spectrum_obey_bessel() {
    let sys = system("H4_d2.00");
    let h = build_qubit_hamiltonian(&sys).unwrap();
    let pairs = fci_spectrum(&h, &sys, 10).unwrap();
    let sim = Simulator::new(&h, sys.n_alpha, sys.n_beta);
    let space = sys.orbital_space();
    let gens = qvqe_core::screening::enumerate_doubles(&space).unwrap();
    let program = qvqe_core::state::AnsatzProgram::from_blocks(
        gens.into_iter().map(qvqe_core::state::AnsatzBlock::single),
    );
    let x: Vec<f64> = (0..program.param_count()).map(|k| 0.1 * (k as f64).sin()).collect();
    let psi = sim
        .prepare(&program, &x, &qvqe_core::hamiltonian::hf_determinant(&sys))
        .unwrap();
    let total: f64 = pairs.iter().map(|p| overlap_sq(&psi, &p.vector).unwrap()).sum();
    assert!(total <= 1.0 + 1e-12, "{total}");
    let basis = SectorBasis::for_system(&sys);
    let all = qvqe_core::exact::fci_spectrum_in(&h, &basis, basis.dim(), 6000).unwrap();
    let full: f64 = all.iter().map(|p| overlap_sq(&psi, &p.vector).unwrap()).sum();
    assert!((full - 1.0).abs() < 1e-10, "{full}");
}
