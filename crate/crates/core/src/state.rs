//! Dense statevector engine for disentangled ansätze.
//!
//! Every pool generator `A = t - t†` satisfies `A³ = -A`, so
//! `exp(θA) = 1 + sin θ·A + (1 - cos θ)·A²`. On a determinant pair
//! `t|x> = s|y>` that is a plane rotation, which is how it is evaluated here.
//! The [`Simulator`] restricts all work to one (N, S_z) sector while keeping
//! the full `2^n` amplitude layout.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fermion::FermionGenerator;
use crate::pauli::PauliSum;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn basis_state(n_qubits: usize, index: usize) -> Self {
        let mut amplitudes = vec![ZERO; 1 << n_qubits];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Self {
            n_qubits,
            amplitudes,
        }
    }

    pub fn from_amplitudes(n_qubits: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != 1 << n_qubits {
            return Err(Error::DimensionMismatch {
                expected: 1 << n_qubits,
                got: amplitudes.len(),
            });
        }
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `<self| O |self>` for a diagonal-free Pauli observable, real part.
    pub fn expectation(&self, op: &PauliSum) -> Result<f64> {
        energy(self, op)
    }
}

/// `|<a|b>|²`.
pub fn overlap_sq(a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr())
}

/// `<psi|H|psi>` with the imaginary residue checked and discarded.
pub fn energy(state: &StateVector, h: &PauliSum) -> Result<f64> {
    if h.n_qubits() != state.n_qubits {
        return Err(Error::QubitMismatch {
            left: h.n_qubits(),
            right: state.n_qubits,
        });
    }
    let hpsi = h.apply(&state.amplitudes)?;
    let e: Complex64 = state
        .amplitudes
        .iter()
        .zip(&hpsi)
        .map(|(a, b)| a.conj() * b)
        .sum();
    debug_assert!(e.im.abs() < 1e-10 * e.re.abs().max(1.0), "non-real energy {e}");
    Ok(e.re)
}

/// Determinant pairs `(x, y, s)` with `sign·t|x> = s|y>`.
fn generator_pairs(gen: &FermionGenerator, indices: impl Iterator<Item = usize>) -> Vec<(usize, usize, f64)> {
    indices
        .filter_map(|x| gen.excite(x).map(|(s, y)| (x, y, s)))
        .collect()
}

#[inline]
fn rotate_pairs(amps: &mut [Complex64], pairs: &[(usize, usize, f64)], theta: f64) {
    if theta == 0.0 {
        return;
    }
    let (sin, cos) = theta.sin_cos();
    for &(x, y, s) in pairs {
        let (px, py) = (amps[x], amps[y]);
        amps[x] = px * cos - py * (s * sin);
        amps[y] = py * cos + px * (s * sin);
    }
}

/// `<lambda| A |psi>` for the generator described by `pairs`.
#[inline]
fn pair_matrix_element(lambda: &[Complex64], psi: &[Complex64], pairs: &[(usize, usize, f64)]) -> Complex64 {
    pairs
        .iter()
        .map(|&(x, y, s)| (lambda[y].conj() * psi[x] - lambda[x].conj() * psi[y]) * s)
        .sum()
}

fn check_generator(state: &StateVector, gen: &FermionGenerator) -> Result<()> {
    if gen.max_index() >= state.n_qubits {
        return Err(Error::QubitMismatch {
            left: gen.max_index() + 1,
            right: state.n_qubits,
        });
    }
    Ok(())
}

/// `exp(θA)|psi>` over the full `2^n` space.
pub fn apply_generator_exponential(
    state: &StateVector,
    gen: &FermionGenerator,
    theta: f64,
) -> Result<StateVector> {
    check_generator(state, gen)?;
    let mut out = state.clone();
    let pairs = generator_pairs(gen, 0..state.dim());
    rotate_pairs(&mut out.amplitudes, &pairs, theta);
    Ok(out)
}

/// `A|psi>` over the full `2^n` space.
pub fn apply_generator(state: &StateVector, gen: &FermionGenerator) -> Result<StateVector> {
    check_generator(state, gen)?;
    let mut out = vec![ZERO; state.dim()];
    for (x, y, s) in generator_pairs(gen, 0..state.dim()) {
        out[y] += state.amplitudes[x] * s;
        out[x] -= state.amplitudes[y] * s;
    }
    StateVector::from_amplitudes(state.n_qubits, out)
}

/// Basis indices with `n_alpha` bits on even qubits and `n_beta` on odd qubits.
pub fn sector_indices(n_qubits: usize, n_alpha: usize, n_beta: usize) -> Vec<usize> {
    let even = (0..n_qubits).step_by(2).fold(0usize, |m, q| m | 1 << q);
    let odd = even << 1 & ((1usize << n_qubits) - 1);
    (0..1usize << n_qubits)
        .filter(|&b| (b & even).count_ones() as usize == n_alpha && (b & odd).count_ones() as usize == n_beta)
        .collect()
}

/// Row-compressed operator restricted to a set of basis rows.
#[derive(Debug, Clone)]
pub struct SparseOperator {
    n_qubits: usize,
    rows: Vec<usize>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl SparseOperator {
    /// Compiles `op` on the rows in `support`; columns outside `support` are dropped,
    /// which is exact whenever `op` preserves the subspace spanned by `support`.
    pub fn from_pauli(op: &PauliSum, support: &[usize]) -> Self {
        let n = op.n_qubits();
        let mut member = vec![false; 1 << n];
        for &b in support {
            member[b] = true;
        }
        let mut groups: std::collections::BTreeMap<u64, Vec<(u64, Complex64)>> = Default::default();
        for t in op.terms() {
            let (phase, _) = t.string.apply_to_basis(0);
            // phase at b = 0 is exactly i^{|x&z|}
            groups.entry(t.string.x).or_default().push((t.string.z, t.coeff * phase));
        }
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for &r in support {
            for (x, zs) in &groups {
                let c = r ^ *x as usize;
                if !member[c] {
                    continue;
                }
                let v: Complex64 = zs
                    .iter()
                    .map(|(z, coeff)| {
                        if (z & c as u64).count_ones() % 2 == 0 {
                            *coeff
                        } else {
                            -*coeff
                        }
                    })
                    .sum();
                if v.norm() > 1e-14 {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self {
            n_qubits: n,
            rows: support.to_vec(),
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    /// Matrix element `<rows[i]| O |cols>` entries of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    pub fn apply_into(&self, psi: &[Complex64], out: &mut [Complex64]) {
        for (i, &r) in self.rows.iter().enumerate() {
            let mut acc = ZERO;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * psi[self.cols[k]];
            }
            out[r] = acc;
        }
    }

    pub fn expectation(&self, psi: &[Complex64]) -> Complex64 {
        let mut e = ZERO;
        for (i, &r) in self.rows.iter().enumerate() {
            if psi[r] == ZERO {
                continue;
            }
            let mut acc = ZERO;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * psi[self.cols[k]];
            }
            e += psi[r].conj() * acc;
        }
        e
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }
}

/// One unit of ansatz growth: generators applied in the listed order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnsatzBlock {
    pub label: String,
    pub generators: Vec<FermionGenerator>,
}

impl AnsatzBlock {
    pub fn single(gen: FermionGenerator) -> Self {
        Self {
            label: gen.label().to_string(),
            generators: vec![gen],
        }
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }
}

/// Ordered product of blocks; the first block acts first on the reference.
/// Parameters are laid out block by block, one slot per generator.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnsatzProgram {
    blocks: Vec<AnsatzBlock>,
    offsets: Vec<usize>,
    param_count: usize,
}

impl AnsatzProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_blocks(blocks: impl IntoIterator<Item = AnsatzBlock>) -> Self {
        let mut p = Self::new();
        for b in blocks {
            p.push(b);
        }
        p
    }

    pub fn push(&mut self, block: AnsatzBlock) {
        self.offsets.push(self.param_count);
        self.param_count += block.len();
        self.blocks.push(block);
    }

    pub fn blocks(&self) -> &[AnsatzBlock] {
        &self.blocks
    }

    pub fn param_count(&self) -> usize {
        self.param_count
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Global parameter index of generator `local` in block `block`.
    pub fn slot(&self, block: usize, local: usize) -> usize {
        assert!(local < self.blocks[block].len());
        self.offsets[block] + local
    }

    pub fn generators(&self) -> impl Iterator<Item = &FermionGenerator> {
        self.blocks.iter().flat_map(|b| b.generators.iter())
    }

    pub fn labels(&self) -> Vec<String> {
        self.blocks.iter().map(|b| b.label.clone()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMethod {
    Adjoint,
    FiniteDifference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientReport {
    pub energy: f64,
    pub gradient: Vec<f64>,
    pub method: GradientMethod,
}

/// Generator pair lists resolved against a simulator's sector.
#[derive(Debug, Clone)]
pub struct CompiledProgram {
    gates: Vec<Vec<(usize, usize, f64)>>,
}

impl CompiledProgram {
    pub fn param_count(&self) -> usize {
        self.gates.len()
    }
}

/// Hamiltonian compiled on one (N, S_z) sector plus the sector itself.
#[derive(Debug, Clone)]
pub struct Simulator {
    n_qubits: usize,
    support: Vec<usize>,
    hamiltonian: SparseOperator,
}

impl Simulator {
    pub fn new(h: &PauliSum, n_alpha: usize, n_beta: usize) -> Self {
        let support = sector_indices(h.n_qubits(), n_alpha, n_beta);
        Self::with_support(h, support)
    }

    /// Unrestricted simulator over all `2^n` basis states.
    pub fn full(h: &PauliSum) -> Self {
        Self::with_support(h, (0..1usize << h.n_qubits()).collect())
    }

    fn with_support(h: &PauliSum, support: Vec<usize>) -> Self {
        let hamiltonian = SparseOperator::from_pauli(h, &support);
        Self {
            n_qubits: h.n_qubits(),
            support,
            hamiltonian,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn hamiltonian(&self) -> &SparseOperator {
        &self.hamiltonian
    }

    pub fn compile(&self, program: &AnsatzProgram) -> CompiledProgram {
        self.compile_generators(program.generators())
    }

    pub fn compile_generators<'a>(
        &self,
        gens: impl IntoIterator<Item = &'a FermionGenerator>,
    ) -> CompiledProgram {
        CompiledProgram {
            gates: gens
                .into_iter()
                .map(|g| generator_pairs(g, self.support.iter().copied()))
                .collect(),
        }
    }

    fn check_params(&self, compiled: &CompiledProgram, params: &[f64]) -> Result<()> {
        if params.len() != compiled.param_count() {
            return Err(Error::DimensionMismatch {
                expected: compiled.param_count(),
                got: params.len(),
            });
        }
        Ok(())
    }

    fn check_state(&self, state: &StateVector) -> Result<()> {
        if state.n_qubits != self.n_qubits {
            return Err(Error::QubitMismatch {
                left: self.n_qubits,
                right: state.n_qubits,
            });
        }
        Ok(())
    }

    pub fn prepare_compiled(
        &self,
        compiled: &CompiledProgram,
        params: &[f64],
        reference: &StateVector,
    ) -> Result<StateVector> {
        self.check_params(compiled, params)?;
        self.check_state(reference)?;
        let mut state = reference.clone();
        for (pairs, &theta) in compiled.gates.iter().zip(params) {
            rotate_pairs(&mut state.amplitudes, pairs, theta);
        }
        Ok(state)
    }

    /// Applies the program's blocks in order, each block's generators in stored order.
    pub fn prepare(
        &self,
        program: &AnsatzProgram,
        params: &[f64],
        reference: &StateVector,
    ) -> Result<StateVector> {
        self.prepare_compiled(&self.compile(program), params, reference)
    }

    pub fn energy(&self, state: &StateVector) -> Result<f64> {
        self.check_state(state)?;
        let e = self.hamiltonian.expectation(&state.amplitudes);
        debug_assert!(e.im.abs() < 1e-10 * e.re.abs().max(1.0), "non-real energy {e}");
        Ok(e.re)
    }

    pub fn apply_hamiltonian(&self, state: &StateVector) -> Result<StateVector> {
        self.check_state(state)?;
        let mut out = vec![ZERO; state.dim()];
        self.hamiltonian.apply_into(&state.amplitudes, &mut out);
        StateVector::from_amplitudes(self.n_qubits, out)
    }

    pub fn energy_compiled(
        &self,
        compiled: &CompiledProgram,
        params: &[f64],
        reference: &StateVector,
    ) -> Result<f64> {
        self.energy(&self.prepare_compiled(compiled, params, reference)?)
    }

    /// Energy and analytic gradient by one forward build and one reverse sweep.
    pub fn energy_and_gradient_compiled(
        &self,
        compiled: &CompiledProgram,
        params: &[f64],
        reference: &StateVector,
    ) -> Result<GradientReport> {
        let mut psi = self.prepare_compiled(compiled, params, reference)?.amplitudes;
        let mut lambda = vec![ZERO; psi.len()];
        self.hamiltonian.apply_into(&psi, &mut lambda);
        let energy: Complex64 = self
            .support
            .iter()
            .map(|&b| psi[b].conj() * lambda[b])
            .sum();
        let mut gradient = vec![0.0; params.len()];
        for k in (0..params.len()).rev() {
            let pairs = &compiled.gates[k];
            gradient[k] = 2.0 * pair_matrix_element(&lambda, &psi, pairs).re;
            rotate_pairs(&mut psi, pairs, -params[k]);
            rotate_pairs(&mut lambda, pairs, -params[k]);
        }
        Ok(GradientReport {
            energy: energy.re,
            gradient,
            method: GradientMethod::Adjoint,
        })
    }

    pub fn energy_and_gradient(
        &self,
        program: &AnsatzProgram,
        params: &[f64],
        reference: &StateVector,
    ) -> Result<GradientReport> {
        self.energy_and_gradient_compiled(&self.compile(program), params, reference)
    }

    /// Central finite-difference gradient, kept as a cross-check mode.
    pub fn finite_difference_gradient(
        &self,
        program: &AnsatzProgram,
        params: &[f64],
        reference: &StateVector,
        step: f64,
    ) -> Result<GradientReport> {
        let compiled = self.compile(program);
        let energy = self.energy_compiled(&compiled, params, reference)?;
        let mut x = params.to_vec();
        let mut gradient = Vec::with_capacity(params.len());
        for k in 0..params.len() {
            x[k] = params[k] + step;
            let up = self.energy_compiled(&compiled, &x, reference)?;
            x[k] = params[k] - step;
            let down = self.energy_compiled(&compiled, &x, reference)?;
            x[k] = params[k];
            gradient.push((up - down) / (2.0 * step));
        }
        Ok(GradientReport {
            energy,
            gradient,
            method: GradientMethod::FiniteDifference,
        })
    }

    /// `∂E/∂θ` at `θ = 0` for appending each generator after `state`:
    /// `2·Re<psi|H A|psi>`.
    pub fn append_gradients(&self, state: &StateVector, gens: &[FermionGenerator]) -> Result<Vec<f64>> {
        let hpsi = self.apply_hamiltonian(state)?;
        let compiled = self.compile_generators(gens);
        Ok(compiled
            .gates
            .iter()
            .map(|pairs| 2.0 * pair_matrix_element(&hpsi.amplitudes, &state.amplitudes, pairs).re)
            .collect())
    }
}

/// Full-space reference path of [`Simulator::prepare`].
pub fn prepare_ansatz_state(
    program: &AnsatzProgram,
    params: &[f64],
    reference: &StateVector,
) -> Result<StateVector> {
    if params.len() != program.param_count() {
        return Err(Error::DimensionMismatch {
            expected: program.param_count(),
            got: params.len(),
        });
    }
    let mut state = reference.clone();
    for (gen, &theta) in program.generators().zip(params) {
        state = apply_generator_exponential(&state, gen, theta)?;
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fermion::{make_generator, GeneratorKind, OrbitalSpace};

    fn single(space: &OrbitalSpace, cre: usize, ann: usize) -> FermionGenerator {
        make_generator(
            GeneratorKind::Single,
            &space.orbitals(&[cre]).unwrap(),
            &space.orbitals(&[ann]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn zero_angle_is_identity() {
        let space = OrbitalSpace::new(4, 1, 1).unwrap();
        let g = single(&space, 2, 0);
        let psi = StateVector::basis_state(4, 0b0011);
        assert_eq!(apply_generator_exponential(&psi, &g, 0.0).unwrap(), psi);
    }

    #[test]
    fn pi_rotation_swaps_with_sign() {
        // a†_1 a_0 on |01> (qubit 0 occupied): θ = π sends |01> -> -|01>... through |10>
        let space = OrbitalSpace::new(2, 1, 0).unwrap();
        let g = single(&space, 1, 0);
        let psi = StateVector::basis_state(2, 0b01);
        let half = apply_generator_exponential(&psi, &g, std::f64::consts::FRAC_PI_2).unwrap();
        assert!((half.amplitudes()[0b10] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let full = apply_generator_exponential(&psi, &g, std::f64::consts::PI).unwrap();
        assert!((full.amplitudes()[0b01] + Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((full.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sector_enumeration() {
        let s = sector_indices(4, 1, 1);
        assert_eq!(s, vec![0b0011, 0b0110, 0b1001, 0b1100]);
        assert_eq!(sector_indices(8, 2, 2).len(), 36);
    }

    #[test]
    fn program_slots_are_contiguous() {
        let space = OrbitalSpace::new(4, 1, 1).unwrap();
        let mut p = AnsatzProgram::new();
        p.push(AnsatzBlock::single(single(&space, 2, 0)));
        p.push(AnsatzBlock {
            label: "pair".into(),
            generators: vec![single(&space, 3, 1), single(&space, 2, 0)],
        });
        assert_eq!(p.param_count(), 3);
        assert_eq!(p.slot(1, 1), 2);
        assert_eq!(p.labels(), vec!["S(0->2)".to_string(), "pair".into()]);
    }

    #[test]
    fn param_length_mismatch_is_rejected() {
        let p = AnsatzProgram::new();
        let psi = StateVector::basis_state(2, 1);
        assert!(matches!(
            prepare_ansatz_state(&p, &[0.1], &psi),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn overlap_of_orthogonal_states() {
        let a = StateVector::basis_state(2, 1);
        let b = StateVector::basis_state(2, 2);
        assert_eq!(overlap_sq(&a, &b).unwrap(), 0.0);
        assert_eq!(overlap_sq(&a, &a).unwrap(), 1.0);
        let c = StateVector::basis_state(3, 1);
        assert!(overlap_sq(&a, &c).is_err());
    }
}
