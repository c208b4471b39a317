//! Exact diagonalisation inside one (N, S_z) sector.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{s_squared_operator, MoleculeSystem};
use crate::pauli::PauliSum;
use crate::state::{overlap_sq, sector_indices, SparseOperator, StateVector};

/// Default ceiling on the dense sector solve.
pub const DEFAULT_SECTOR_LIMIT: usize = 6000;
/// Energies closer than this are treated as one degenerate level.
pub const DEGENERACY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectorBasis {
    pub n_qubits: usize,
    pub n_alpha: usize,
    pub n_beta: usize,
    pub states: Vec<usize>,
}

impl SectorBasis {
    pub fn new(n_qubits: usize, n_alpha: usize, n_beta: usize) -> Self {
        Self {
            n_qubits,
            n_alpha,
            n_beta,
            states: sector_indices(n_qubits, n_alpha, n_beta),
        }
    }

    pub fn for_system(system: &MoleculeSystem) -> Self {
        Self::new(system.n_qubits, system.n_alpha, system.n_beta)
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    /// Dense real matrix of `op` restricted to the sector.
    pub fn restrict(&self, op: &PauliSum) -> Result<DMatrix<f64>> {
        let sparse = SparseOperator::from_pauli(op, &self.states);
        let mut position = vec![usize::MAX; 1 << self.n_qubits];
        for (i, &b) in self.states.iter().enumerate() {
            position[b] = i;
        }
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for (col, v) in sparse.row(i) {
                if v.im.abs() > 1e-10 {
                    return Err(Error::InvalidSystem(format!(
                        "operator has complex matrix element {v} in the determinant basis"
                    )));
                }
                m[(i, position[col])] = v.re;
            }
        }
        Ok(m)
    }

    pub fn embed(&self, coeffs: impl IntoIterator<Item = f64>) -> StateVector {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << self.n_qubits];
        for (&b, c) in self.states.iter().zip(coeffs) {
            amps[b] = Complex64::new(c, 0.0);
        }
        StateVector::from_amplitudes(self.n_qubits, amps).expect("sized by construction")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eigenpair {
    pub energy: f64,
    pub vector: StateVector,
    pub s_squared: f64,
}

/// Largest-magnitude amplitude (lowest index on ties) made positive.
fn fix_phase(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() + 1e-12 {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Lowest `n_roots` eigenpairs of `h` in the system's (n_alpha, n_beta) sector.
pub fn fci_spectrum(h: &PauliSum, system: &MoleculeSystem, n_roots: usize) -> Result<Vec<Eigenpair>> {
    fci_spectrum_in(h, &SectorBasis::for_system(system), n_roots, DEFAULT_SECTOR_LIMIT)
}

pub fn fci_spectrum_in(
    h: &PauliSum,
    basis: &SectorBasis,
    n_roots: usize,
    limit: usize,
) -> Result<Vec<Eigenpair>> {
    let dim = basis.dim();
    if dim > limit {
        return Err(Error::SectorTooLarge { dim, limit });
    }
    if h.n_qubits() != basis.n_qubits {
        return Err(Error::QubitMismatch {
            left: h.n_qubits(),
            right: basis.n_qubits,
        });
    }
    let hm = basis.restrict(h)?;
    let s2 = basis.restrict(&s_squared_operator(basis.n_qubits)?)?;
    let eig = SymmetricEigen::new(hm);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let mut pairs: Vec<(f64, Vec<f64>, f64)> = Vec::with_capacity(dim);
    let mut start = 0;
    while start < dim && pairs.len() < n_roots {
        let e0 = eig.eigenvalues[order[start]];
        let mut end = start + 1;
        while end < dim && eig.eigenvalues[order[end]] - e0 < DEGENERACY_TOL {
            end += 1;
        }
        let cols: Vec<_> = order[start..end]
            .iter()
            .map(|&k| eig.eigenvectors.column(k).into_owned())
            .collect();
        let block = DMatrix::from_columns(&cols);
        // rotate the degenerate block onto S² eigenvectors
        let proj = block.transpose() * &s2 * &block;
        let inner = SymmetricEigen::new(proj);
        let mut inner_order: Vec<usize> = (0..end - start).collect();
        inner_order.sort_by(|&a, &b| inner.eigenvalues[a].total_cmp(&inner.eigenvalues[b]));
        for &k in &inner_order {
            let mut v: Vec<f64> = (&block * inner.eigenvectors.column(k)).iter().copied().collect();
            fix_phase(&mut v);
            let vv = nalgebra::DVector::from_column_slice(&v);
            let energy = (vv.transpose() * &eig_matrix(&eig) * &vv)[(0, 0)];
            let s_sq = (vv.transpose() * &s2 * &vv)[(0, 0)];
            pairs.push((energy, v, s_sq));
        }
        start = end;
    }
    pairs.truncate(n_roots);
    Ok(pairs
        .into_iter()
        .map(|(energy, v, s_squared)| Eigenpair {
            energy,
            vector: basis.embed(v),
            s_squared,
        })
        .collect())
}

fn eig_matrix(eig: &SymmetricEigen<f64, nalgebra::Dyn>) -> DMatrix<f64> {
    eig.recompose()
}

/// `<v|S²|v>`.
pub fn s_squared(vector: &StateVector) -> Result<f64> {
    vector.expectation(&s_squared_operator(vector.n_qubits())?)
}

/// `|<psi_k|Phi_n>|²` for every trace state and requested root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapTable {
    pub rows: Vec<Vec<f64>>,
}

pub fn track_overlaps(trace_states: &[StateVector], eigenpairs: &[Eigenpair]) -> Result<OverlapTable> {
    let rows = trace_states
        .iter()
        .map(|psi| {
            eigenpairs
                .iter()
                .map(|e| overlap_sq(psi, &e.vector))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OverlapTable { rows })
}

/// Index of the first excited singlet: the lowest root above the ground level
/// with `<S²> < 1e-6` that the trace visits (overlap above `1e-8` somewhere);
/// falls back to the lowest singlet above the ground level.
pub fn first_excited_singlet(eigenpairs: &[Eigenpair], trace_states: &[StateVector]) -> Option<usize> {
    let ground = eigenpairs.first()?.energy;
    let candidates: Vec<usize> = (1..eigenpairs.len())
        .filter(|&n| eigenpairs[n].energy - ground > DEGENERACY_TOL && eigenpairs[n].s_squared < 1e-6)
        .collect();
    let visited = candidates.iter().copied().find(|&n| {
        trace_states
            .iter()
            .any(|psi| overlap_sq(psi, &eigenpairs[n].vector).map(|o| o > 1e-8).unwrap_or(false))
    });
    visited.or_else(|| candidates.first().copied())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub energy: f64,
    pub s_squared: f64,
}

/// JSON export: one `{energy, s_squared}` object per root.
pub fn spectrum_json(eigenpairs: &[Eigenpair]) -> serde_json::Value {
    let entries: Vec<SpectrumEntry> = eigenpairs
        .iter()
        .map(|e| SpectrumEntry {
            energy: e.energy,
            s_squared: e.s_squared,
        })
        .collect();
    serde_json::to_value(entries).expect("plain data serialises")
}
