#![allow(dead_code)]

use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use qvqe_core::hamiltonian::{fixture_path, load_fixture, Fixture, MoleculeSystem, BUNDLED_FIXTURES};

pub const C0: Complex64 = Complex64::new(0.0, 0.0);

pub fn fixture(label: &str) -> Fixture {
    load_fixture(&fixture_path(Path::new(BUNDLED_FIXTURES), label)).unwrap()
}

/// System with the fixture's default core freezing.
pub fn system(label: &str) -> MoleculeSystem {
    let f = fixture(label);
    let n = f.meta.as_ref().map(|m| m.frozen_core_default).unwrap_or(0);
    MoleculeSystem::from_fixture(&f, n).unwrap()
}

/// Dense `a_p` / `a†_p` built directly on occupation bitstrings.
pub fn dense_ladder(n: usize, p: usize, dagger: bool) -> DMatrix<Complex64> {
    let dim = 1usize << n;
    let mut m = DMatrix::from_element(dim, dim, C0);
    for b in 0..dim {
        let occupied = b >> p & 1 == 1;
        if occupied == dagger {
            continue;
        }
        let parity = (b & ((1 << p) - 1)).count_ones();
        let sign = if parity % 2 == 0 { 1.0 } else { -1.0 };
        m[(b ^ (1 << p), b)] = Complex64::new(sign, 0.0);
    }
    m
}

/// `t - t†` with `t = a†_{c0} a†_{c1} .. a_{a1} a_{a0}` in the given orders.
pub fn dense_generator(n: usize, creators: &[usize], annihilators: &[usize]) -> DMatrix<Complex64> {
    let dim = 1usize << n;
    let mut t = DMatrix::<Complex64>::identity(dim, dim);
    for &c in creators {
        t *= dense_ladder(n, c, true);
    }
    for &a in annihilators.iter().rev() {
        t *= dense_ladder(n, a, false);
    }
    &t - t.adjoint()
}

pub fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn basis_vec(n: usize, index: usize) -> nalgebra::DVector<Complex64> {
    let mut v = nalgebra::DVector::from_element(1 << n, C0);
    v[index] = Complex64::new(1.0, 0.0);
    v
}
