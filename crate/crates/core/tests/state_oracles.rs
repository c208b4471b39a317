mod common;

use common::*;
use nalgebra::DVector;
use num_complex::Complex64;
use proptest::prelude::*;
use qvqe_core::fermion::jordan_wigner;
use qvqe_core::hamiltonian::{build_qubit_hamiltonian, hf_determinant, number_operator, sz_operator};
use qvqe_core::screening::{enumerate_doubles, enumerate_singles, enumerate_triples};
use qvqe_core::state::{
    apply_generator_exponential, prepare_ansatz_state, AnsatzBlock, AnsatzProgram, Simulator,
    StateVector,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn to_dvec(s: &StateVector) -> DVector<Complex64> {
    DVector::from_column_slice(s.amplitudes())
}

fn program_for(label: &str, max_gens: usize) -> (qvqe_core::MoleculeSystem, AnsatzProgram) {
    let sys = system(label);
    let space = sys.orbital_space();
    let mut gens = enumerate_singles(&space).unwrap();
    gens.extend(enumerate_doubles(&space).unwrap());
    gens.truncate(max_gens);
    (sys, AnsatzProgram::from_blocks(gens.into_iter().map(AnsatzBlock::single)))
}

fn random_params(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

#[test]
fn pair_rotation_matches_dense_exponential() {
    let sys = system("H4_d1.50");
    let space = sys.orbital_space();
    let mut gens = enumerate_singles(&space).unwrap();
    gens.extend(enumerate_doubles(&space).unwrap());
    gens.extend(enumerate_triples(&space).unwrap().into_iter().take(4));
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let amps: Vec<Complex64> = (0..256)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let psi = StateVector::from_amplitudes(8, amps.iter().map(|z| z / norm).collect()).unwrap();
    for g in &gens {
        let theta = rng.gen_range(-3.0..3.0);
        let a = jordan_wigner(g, 8).unwrap().to_dense() * Complex64::new(theta, 0.0);
        let expected = a.exp() * to_dvec(&psi);
        let got = to_dvec(&apply_generator_exponential(&psi, g, theta).unwrap());
        assert!((expected - got).norm() < 1e-10, "{}", g.label());
    }
}

#[test]
fn adjoint_gradient_matches_finite_differences() {
    for (label, n) in [("H4_d1.50", 26), ("BeH2_d1.00", 30)] {
        let (sys, program) = program_for(label, n);
        let h = build_qubit_hamiltonian(&sys).unwrap();
        let sim = Simulator::new(&h, sys.n_alpha, sys.n_beta);
        let hf = hf_determinant(&sys);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random_params(&mut rng, program.param_count());
        let adj = sim.energy_and_gradient(&program, &x, &hf).unwrap();
        let fd = sim.finite_difference_gradient(&program, &x, &hf, 1e-5).unwrap();
        assert!((adj.energy - fd.energy).abs() < 1e-12);
        for (a, f) in adj.gradient.iter().zip(&fd.gradient) {
            assert!((a - f).abs() < 1e-6, "{label}: {a} vs {f}");
        }
    }
}

#[test]
fn sector_simulation_matches_full_space() {
    let (sys, program) = program_for("H4_d3.00", 26);
    let h = build_qubit_hamiltonian(&sys).unwrap();
    let sector = Simulator::new(&h, sys.n_alpha, sys.n_beta);
    let full = Simulator::full(&h);
    let hf = hf_determinant(&sys);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..5 {
        let x = random_params(&mut rng, program.param_count());
        let a = sector.prepare(&program, &x, &hf).unwrap();
        let b = full.prepare(&program, &x, &hf).unwrap();
        let c = prepare_ansatz_state(&program, &x, &hf).unwrap();
        assert!((to_dvec(&a) - to_dvec(&b)).norm() < 1e-10);
        assert!((to_dvec(&a) - to_dvec(&c)).norm() < 1e-10);
        let ea = sector.energy(&a).unwrap();
        let eb = full.energy(&b).unwrap();
        let ec = qvqe_core::state::energy(&c, &h).unwrap();
        assert!((ea - eb).abs() < 1e-10 && (ea - ec).abs() < 1e-10);
    }
}

#[test]
fn thousand_gates_preserve_norm_and_quantum_numbers() {
    let sys = system("BeH2_d1.00");
    let space = sys.orbital_space();
    let mut pool = enumerate_singles(&space).unwrap();
    pool.extend(enumerate_doubles(&space).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let gens: Vec<_> = (0..1000).map(|_| pool[rng.gen_range(0..pool.len())].clone()).collect();
    let x = random_params(&mut rng, gens.len());
    let program = AnsatzProgram::from_blocks(gens.into_iter().map(AnsatzBlock::single));
    let h = build_qubit_hamiltonian(&sys).unwrap();
    let sim = Simulator::new(&h, sys.n_alpha, sys.n_beta);
    let psi = sim.prepare(&program, &x, &hf_determinant(&sys)).unwrap();
    assert!((psi.norm() - 1.0).abs() < 1e-12);
    let n = psi.expectation(&number_operator(sys.n_qubits).unwrap()).unwrap();
    let sz = psi.expectation(&sz_operator(sys.n_qubits).unwrap()).unwrap();
    assert!((n - sys.n_electrons() as f64).abs() < 1e-10);
    assert!(sz.abs() < 1e-10);
}

#[test]
fn gradients_vanish_at_the_exact_ground_state() {
    let sys = system("H4_d1.50");
    let h = build_qubit_hamiltonian(&sys).unwrap();
    let sim = Simulator::new(&h, sys.n_alpha, sys.n_beta);
    let ground = qvqe_core::fci_spectrum(&h, &sys, 1).unwrap().remove(0).vector;
    let space = sys.orbital_space();
    let mut gens = enumerate_singles(&space).unwrap();
    gens.extend(enumerate_doubles(&space).unwrap());
    let g = sim.append_gradients(&ground, &gens).unwrap();
    assert!(g.iter().all(|x| x.abs() < 1e-10), "{g:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn prepared_states_stay_in_the_sector(seed in any::<u64>()) {
        let (sys, program) = program_for("H4_d2.00", 26);
        let h = build_qubit_hamiltonian(&sys).unwrap();
        let sim = Simulator::new(&h, sys.n_alpha, sys.n_beta);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..program.param_count()).map(|_| rng.gen_range(-3.2..3.2)).collect();
        let psi = sim.prepare(&program, &x, &hf_determinant(&sys)).unwrap();
        let support: std::collections::HashSet<usize> = sim.support().iter().copied().collect();
        let leak: f64 = psi.amplitudes().iter().enumerate()
            .filter(|(b, _)| !support.contains(b))
            .map(|(_, z)| z.norm_sqr())
            .sum();
        prop_assert!(leak == 0.0);
        prop_assert!((psi.norm() - 1.0).abs() < 1e-12);
        let e = sim.energy(&psi).unwrap();
        let e0 = qvqe_core::fci_spectrum(&h, &sys, 1).unwrap()[0].energy;
        prop_assert!(e >= e0 - 1e-10);
    }
}
