//! Sparse Pauli-string algebra.
//!
//! A Pauli string on up to 64 qubits is stored as a pair of bit masks in the
//! symplectic form `P = i^{|x & z|} X^x Z^z`, so that `Y = iXZ` on every qubit
//! where both bits are set. Qubit `q` corresponds to bit `q` of a basis index.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Single-qubit Pauli axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// `i^k` for `k` taken mod 4.
fn i_pow(k: u32) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct PauliString {
    pub x: u64,
    pub z: u64,
}

impl PauliString {
    pub const IDENTITY: PauliString = PauliString { x: 0, z: 0 };

    pub fn new(x: u64, z: u64) -> Self {
        Self { x, z }
    }

    pub fn single(qubit: usize, axis: Axis) -> Self {
        let bit = 1u64 << qubit;
        match axis {
            Axis::X => Self::new(bit, 0),
            Axis::Y => Self::new(bit, bit),
            Axis::Z => Self::new(0, bit),
        }
    }

    pub fn from_axes<I: IntoIterator<Item = (usize, Axis)>>(axes: I) -> Self {
        axes.into_iter().fold(Self::IDENTITY, |acc, (q, a)| {
            let s = Self::single(q, a);
            Self::new(acc.x | s.x, acc.z | s.z)
        })
    }

    pub fn axis(&self, qubit: usize) -> Option<Axis> {
        let bit = 1u64 << qubit;
        match (self.x & bit != 0, self.z & bit != 0) {
            (false, false) => None,
            (true, false) => Some(Axis::X),
            (true, true) => Some(Axis::Y),
            (false, true) => Some(Axis::Z),
        }
    }

    /// Non-identity axes in ascending qubit order.
    pub fn axes(&self) -> BTreeMap<usize, Axis> {
        let support = self.x | self.z;
        (0..64)
            .filter(|q| support >> q & 1 == 1)
            .map(|q| (q, self.axis(q).unwrap()))
            .collect()
    }

    pub fn weight(&self) -> u32 {
        (self.x | self.z).count_ones()
    }

    pub fn max_qubit(&self) -> Option<usize> {
        let support = self.x | self.z;
        (support != 0).then(|| 63 - support.leading_zeros() as usize)
    }

    /// Product `self * other = phase * result`.
    pub fn mul(&self, other: &PauliString) -> (Complex64, PauliString) {
        let x = self.x ^ other.x;
        let z = self.z ^ other.z;
        let k = (self.x & self.z).count_ones()
            + (other.x & other.z).count_ones()
            + 2 * (self.z & other.x).count_ones();
        // result carries its own i^{|x&z|}; divide it out
        let k = k + 4 * 64 - (x & z).count_ones();
        (i_pow(k), PauliString { x, z })
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) % 2 == 0
    }

    /// Action on a computational basis state: `P|b> = phase |b'>`.
    #[inline]
    pub fn apply_to_basis(&self, basis: usize) -> (Complex64, usize) {
        let b = basis as u64;
        let k = (self.x & self.z).count_ones() + 2 * (self.z & b).count_ones();
        (i_pow(k), (b ^ self.x) as usize)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let axes = self.axes();
        if axes.is_empty() {
            return write!(f, "I");
        }
        let mut first = true;
        for (q, a) in axes {
            if !first {
                write!(f, " ")?;
            }
            first = false;
            write!(f, "{a:?}{q}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PauliTerm {
    pub coeff: Complex64,
    pub string: PauliString,
}

impl PauliTerm {
    pub fn axes(&self) -> BTreeMap<usize, Axis> {
        self.string.axes()
    }
}

/// Weighted sum of Pauli strings with merged, nonzero coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliSum {
    n_qubits: usize,
    terms: BTreeMap<PauliString, Complex64>,
}

impl PauliSum {
    pub fn zero(n_qubits: usize) -> Self {
        assert!(n_qubits <= 64, "at most 64 qubits supported");
        Self {
            n_qubits,
            terms: BTreeMap::new(),
        }
    }

    pub fn identity(n_qubits: usize, coeff: Complex64) -> Self {
        let mut s = Self::zero(n_qubits);
        s.add_term(PauliString::IDENTITY, coeff);
        s
    }

    pub fn from_terms<I>(n_qubits: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Complex64, PauliString)>,
    {
        let mut s = Self::zero(n_qubits);
        for (c, p) in terms {
            if let Some(q) = p.max_qubit() {
                if q >= n_qubits {
                    return Err(Error::IndexOutOfRange { index: q, n_qubits });
                }
            }
            s.add_term(p, c);
        }
        Ok(s)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, p: &PauliString) -> Complex64 {
        self.terms.get(p).copied().unwrap_or(ZERO)
    }

    pub fn terms(&self) -> impl Iterator<Item = PauliTerm> + '_ {
        self.terms.iter().map(|(s, c)| PauliTerm {
            coeff: *c,
            string: *s,
        })
    }

    pub fn add_term(&mut self, string: PauliString, coeff: Complex64) {
        if coeff == ZERO {
            return;
        }
        let entry = self.terms.entry(string).or_insert(ZERO);
        *entry += coeff;
        if *entry == ZERO {
            self.terms.remove(&string);
        }
    }

    fn check_same(&self, other: &PauliSum) -> Result<()> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::QubitMismatch {
                left: self.n_qubits,
                right: other.n_qubits,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &PauliSum) -> Result<PauliSum> {
        self.check_same(other)?;
        let mut out = self.clone();
        for (p, c) in &other.terms {
            out.add_term(*p, *c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &PauliSum) -> Result<PauliSum> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, factor: Complex64) -> PauliSum {
        let mut out = Self::zero(self.n_qubits);
        for (p, c) in &self.terms {
            out.add_term(*p, *c * factor);
        }
        out
    }

    pub fn mul(&self, other: &PauliSum) -> Result<PauliSum> {
        self.check_same(other)?;
        let mut out = Self::zero(self.n_qubits);
        for (pa, ca) in &self.terms {
            for (pb, cb) in &other.terms {
                let (phase, p) = pa.mul(pb);
                out.add_term(p, phase * ca * cb);
            }
        }
        Ok(out)
    }

    /// Exact commutator `self * other - other * self`.
    ///
    /// Only anticommuting string pairs contribute, each with twice their product.
    pub fn commutator(&self, other: &PauliSum) -> Result<PauliSum> {
        self.check_same(other)?;
        let mut out = Self::zero(self.n_qubits);
        for (pa, ca) in &self.terms {
            for (pb, cb) in &other.terms {
                if pa.commutes_with(pb) {
                    continue;
                }
                let (phase, p) = pa.mul(pb);
                out.add_term(p, phase * ca * cb * 2.0);
            }
        }
        Ok(out)
    }

    pub fn adjoint(&self) -> PauliSum {
        let mut out = Self::zero(self.n_qubits);
        for (p, c) in &self.terms {
            out.add_term(*p, c.conj());
        }
        out
    }

    /// Drops terms with magnitude at or below `tol`.
    pub fn chop(&self, tol: f64) -> PauliSum {
        let mut out = Self::zero(self.n_qubits);
        for (p, c) in &self.terms {
            if c.norm() > tol {
                out.add_term(*p, *c);
            }
        }
        out
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.terms.values().all(|c| c.im.abs() <= tol)
    }

    pub fn is_anti_hermitian(&self, tol: f64) -> bool {
        self.terms.values().all(|c| c.re.abs() <= tol)
    }

    /// `self |psi>` on a dense amplitude vector of length `2^n`.
    pub fn apply(&self, psi: &[Complex64]) -> Result<Vec<Complex64>> {
        let dim = 1usize << self.n_qubits;
        if psi.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: psi.len(),
            });
        }
        let mut out = vec![ZERO; dim];
        for (p, c) in &self.terms {
            for (b, amp) in psi.iter().enumerate() {
                if *amp == ZERO {
                    continue;
                }
                let (phase, b2) = p.apply_to_basis(b);
                out[b2] += c * phase * amp;
            }
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let dim = 1usize << self.n_qubits;
        let mut m = DMatrix::from_element(dim, dim, ZERO);
        for (p, c) in &self.terms {
            for col in 0..dim {
                let (phase, row) = p.apply_to_basis(col);
                m[(row, col)] += c * phase;
            }
        }
        m
    }
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (p, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({:+}{:+}i) {}", c.re, c.im, p)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn single(n: usize, q: usize, a: Axis) -> PauliSum {
        PauliSum::from_terms(n, [(c(1.0, 0.0), PauliString::single(q, a))]).unwrap()
    }

    #[test]
    fn z_on_different_qubits_commute() {
        let z0 = single(2, 0, Axis::Z);
        let z1 = single(2, 1, Axis::Z);
        assert!(z0.commutator(&z1).unwrap().is_empty());
    }

    #[test]
    fn x_y_commutator_is_2iz() {
        let x = single(1, 0, Axis::X);
        let y = single(1, 0, Axis::Y);
        let comm = x.commutator(&y).unwrap();
        assert_eq!(comm.len(), 1);
        assert_eq!(comm.coeff(&PauliString::single(0, Axis::Z)), c(0.0, 2.0));
    }

    #[test]
    fn single_qubit_products() {
        let x = PauliString::single(0, Axis::X);
        let y = PauliString::single(0, Axis::Y);
        let z = PauliString::single(0, Axis::Z);
        assert_eq!(x.mul(&y), (c(0.0, 1.0), z));
        assert_eq!(y.mul(&z), (c(0.0, 1.0), x));
        assert_eq!(z.mul(&x), (c(0.0, 1.0), y));
        assert_eq!(y.mul(&x), (c(0.0, -1.0), z));
        assert_eq!(y.mul(&y), (c(1.0, 0.0), PauliString::IDENTITY));
    }

    #[test]
    fn dense_matrix_of_y() {
        let m = single(1, 0, Axis::Y).to_dense();
        assert_eq!(m[(0, 1)], c(0.0, -1.0));
        assert_eq!(m[(1, 0)], c(0.0, 1.0));
    }

    #[test]
    fn qubit_mismatch_is_rejected() {
        let a = PauliSum::zero(2);
        let b = PauliSum::zero(3);
        assert!(matches!(a.commutator(&b), Err(Error::QubitMismatch { .. })));
    }

    #[test]
    fn out_of_range_term_is_rejected() {
        let r = PauliSum::from_terms(2, [(c(1.0, 0.0), PauliString::single(2, Axis::X))]);
        assert!(matches!(r, Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn cancelling_terms_are_removed() {
        let mut s = single(2, 1, Axis::X);
        s.add_term(PauliString::single(1, Axis::X), c(-1.0, 0.0));
        assert!(s.is_empty());
    }

    #[test]
    fn display_lists_axes() {
        let p = PauliString::from_axes([(0, Axis::X), (2, Axis::Y)]);
        assert_eq!(p.to_string(), "X0 Y2");
        assert_eq!(p.axes().len(), 2);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn string(n: usize) -> impl Strategy<Value = PauliString> {
            let mask = (1u64 << n) - 1;
            (any::<u64>(), any::<u64>()).prop_map(move |(x, z)| PauliString::new(x & mask, z & mask))
        }

        proptest! {
            #[test]
            fn product_matches_dense(a in string(3), b in string(3)) {
                let pa = PauliSum::from_terms(3, [(c(1.0, 0.0), a)]).unwrap();
                let pb = PauliSum::from_terms(3, [(c(1.0, 0.0), b)]).unwrap();
                let dense = pa.to_dense() * pb.to_dense();
                let prod = pa.mul(&pb).unwrap().to_dense();
                prop_assert!((dense - prod).norm() < 1e-12);
            }

            #[test]
            fn commutator_matches_dense(a in string(3), b in string(3)) {
                let pa = PauliSum::from_terms(3, [(c(0.5, 0.25), a)]).unwrap();
                let pb = PauliSum::from_terms(3, [(c(-1.0, 0.5), b)]).unwrap();
                let (ma, mb) = (pa.to_dense(), pb.to_dense());
                let expect = &ma * &mb - &mb * &ma;
                let got = pa.commutator(&pb).unwrap().to_dense();
                prop_assert!((expect - got).norm() < 1e-12);
            }
        }
    }
}
