//! Fermionic excitation and scatterer generators, their Jordan–Wigner images,
//! and the symbolic contraction rules between scatterers and doubles.
//!
//! Spin-orbitals are interleaved: alpha of spatial orbital `p` is qubit `2p`,
//! beta is qubit `2p + 1`. A generator stores a single index monomial
//! `t = a†_{c1} ... a†_{cn} a_{an} ... a_{a1}` with creators and annihilators
//! sorted ascending, and denotes the anti-hermitian combination `t - t†`.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{Axis, PauliString, PauliSum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Spin {
    Alpha,
    Beta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Occupancy {
    Occupied,
    Virtual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SpinOrbital {
    pub index: usize,
    pub spatial: usize,
    pub spin: Spin,
    pub occ: Occupancy,
    /// Member of the contractible set of orbitals.
    pub active: bool,
}

impl SpinOrbital {
    pub fn is_occupied(&self) -> bool {
        self.occ == Occupancy::Occupied
    }
}

pub fn spin_of(index: usize) -> Spin {
    if index % 2 == 0 {
        Spin::Alpha
    } else {
        Spin::Beta
    }
}

/// Spin-orbital bookkeeping relative to a Hartree–Fock determinant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitalSpace {
    pub n_qubits: usize,
    pub n_alpha: usize,
    pub n_beta: usize,
    /// Spatial orbitals whose occupied spin-orbitals may act as quasi-hole vertices.
    pub active_occupied: Vec<usize>,
    /// Spatial orbitals whose virtual spin-orbitals may act as quasi-particle vertices.
    pub active_virtual: Vec<usize>,
}

impl OrbitalSpace {
    pub fn new(n_qubits: usize, n_alpha: usize, n_beta: usize) -> Result<Self> {
        let n_spatial = n_qubits / 2;
        if n_qubits % 2 != 0 || n_alpha > n_spatial || n_beta > n_spatial {
            return Err(Error::InvalidSystem(format!(
                "{n_alpha} alpha / {n_beta} beta electrons do not fit {n_qubits} spin-orbitals"
            )));
        }
        let homo = n_alpha.max(n_beta).checked_sub(1);
        let lumo = n_alpha.min(n_beta);
        Ok(Self {
            n_qubits,
            n_alpha,
            n_beta,
            active_occupied: homo.into_iter().collect(),
            active_virtual: (lumo < n_spatial).then_some(lumo).into_iter().collect(),
        })
    }

    pub fn with_active(mut self, occupied: Vec<usize>, virtuals: Vec<usize>) -> Self {
        self.active_occupied = occupied;
        self.active_virtual = virtuals;
        self
    }

    pub fn n_spatial(&self) -> usize {
        self.n_qubits / 2
    }

    pub fn orbital(&self, index: usize) -> Result<SpinOrbital> {
        if index >= self.n_qubits {
            return Err(Error::IndexOutOfRange {
                index,
                n_qubits: self.n_qubits,
            });
        }
        let spatial = index / 2;
        let spin = spin_of(index);
        let n_occ = match spin {
            Spin::Alpha => self.n_alpha,
            Spin::Beta => self.n_beta,
        };
        let occ = if spatial < n_occ {
            Occupancy::Occupied
        } else {
            Occupancy::Virtual
        };
        let active = match occ {
            Occupancy::Occupied => self.active_occupied.contains(&spatial),
            Occupancy::Virtual => self.active_virtual.contains(&spatial),
        };
        Ok(SpinOrbital {
            index,
            spatial,
            spin,
            occ,
            active,
        })
    }

    pub fn orbitals(&self, indices: &[usize]) -> Result<Vec<SpinOrbital>> {
        indices.iter().map(|&i| self.orbital(i)).collect()
    }

    pub fn occupied(&self) -> Vec<usize> {
        (0..self.n_qubits)
            .filter(|&i| self.orbital(i).map(|o| o.is_occupied()).unwrap_or(false))
            .collect()
    }

    pub fn virtuals(&self) -> Vec<usize> {
        (0..self.n_qubits)
            .filter(|&i| self.orbital(i).map(|o| !o.is_occupied()).unwrap_or(false))
            .collect()
    }

    /// Basis index of the Hartree–Fock determinant.
    pub fn reference_mask(&self) -> usize {
        self.occupied().iter().fold(0usize, |m, &i| m | 1 << i)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GeneratorKind {
    Single,
    Double,
    ScattererH,
    ScattererP,
    Triple,
}

impl GeneratorKind {
    fn rank(self) -> usize {
        match self {
            GeneratorKind::Single => 1,
            GeneratorKind::Triple => 3,
            _ => 2,
        }
    }

    pub fn is_scatterer(self) -> bool {
        matches!(self, GeneratorKind::ScattererH | GeneratorKind::ScattererP)
    }
}

/// Anti-hermitian generator `sign * (t - t†)` for one canonical index monomial `t`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FermionGenerator {
    kind: GeneratorKind,
    creators: Vec<SpinOrbital>,
    annihilators: Vec<SpinOrbital>,
    /// Quasi-destruction vertex of a scatterer.
    quasi: Option<usize>,
    sign: i8,
    label: String,
}

/// Sorts in place and returns the permutation parity as `+1` / `-1`.
fn sort_with_parity(v: &mut [SpinOrbital]) -> i8 {
    let mut sign = 1i8;
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1].index > v[j].index {
            v.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    sign
}

fn join(indices: impl Iterator<Item = String>) -> String {
    indices.collect::<Vec<_>>().join(",")
}

/// Validates a generator and returns it in canonical form.
///
/// `creators` and `annihilators` describe `t = a†_{C0} a†_{C1} ... a_{A1} a_{A0}`;
/// reordering either list to ascending order multiplies the stored sign by the
/// permutation parity, so permuted inputs give the same label and the same
/// Jordan–Wigner image up to that sign.
pub fn make_generator(
    kind: GeneratorKind,
    creators: &[SpinOrbital],
    annihilators: &[SpinOrbital],
) -> Result<FermionGenerator> {
    let rank = kind.rank();
    if creators.len() != rank || annihilators.len() != rank {
        return Err(Error::MalformedGenerator(format!(
            "{kind:?} needs {rank} creators and {rank} annihilators, got {}/{}",
            creators.len(),
            annihilators.len()
        )));
    }
    let mut cre = creators.to_vec();
    let mut ann = annihilators.to_vec();
    let sign = sort_with_parity(&mut cre) * sort_with_parity(&mut ann);
    for list in [&cre, &ann] {
        if list.windows(2).any(|w| w[0].index == w[1].index) {
            return Err(Error::MalformedGenerator("repeated spin-orbital index".into()));
        }
    }
    if cre.iter().any(|c| ann.iter().any(|a| a.index == c.index)) {
        return Err(Error::MalformedGenerator(
            "an index appears as both creator and annihilator".into(),
        ));
    }

    let quasi = match kind {
        GeneratorKind::ScattererH => {
            if !ann.iter().all(SpinOrbital::is_occupied) {
                return Err(Error::MalformedGenerator(
                    "hole scatterer must annihilate occupied orbitals".into(),
                ));
            }
            let occ: Vec<_> = cre.iter().filter(|o| o.is_occupied()).collect();
            match occ.as_slice() {
                [m] if m.active => Some(m.index),
                _ => {
                    return Err(Error::MalformedGenerator(
                        "hole scatterer needs exactly one active occupied creator".into(),
                    ))
                }
            }
        }
        GeneratorKind::ScattererP => {
            if cre.iter().any(SpinOrbital::is_occupied) {
                return Err(Error::MalformedGenerator(
                    "particle scatterer must create virtual orbitals".into(),
                ));
            }
            let virt: Vec<_> = ann.iter().filter(|o| !o.is_occupied()).collect();
            match virt.as_slice() {
                [e] if e.active => Some(e.index),
                _ => {
                    return Err(Error::MalformedGenerator(
                        "particle scatterer needs exactly one active virtual annihilator".into(),
                    ))
                }
            }
        }
        _ => None,
    };

    let idx = |o: &SpinOrbital| o.index.to_string();
    let label = match kind {
        GeneratorKind::Single => format!("S({}->{})", ann[0].index, cre[0].index),
        GeneratorKind::Double => format!(
            "D({}->{})",
            join(ann.iter().map(idx)),
            join(cre.iter().map(idx))
        ),
        GeneratorKind::Triple => format!(
            "T({}->{})",
            join(ann.iter().map(idx)),
            join(cre.iter().map(idx))
        ),
        GeneratorKind::ScattererH => {
            let m = quasi.unwrap();
            let rest = cre.iter().filter(|o| o.index != m).map(idx);
            format!(
                "Sh({}->{},{m}*)",
                join(ann.iter().map(idx)),
                join(rest)
            )
        }
        GeneratorKind::ScattererP => {
            let e = quasi.unwrap();
            let rest = ann.iter().filter(|o| o.index != e).map(idx);
            format!("Sp({},{e}*->{})", join(rest), join(cre.iter().map(idx)))
        }
    };

    Ok(FermionGenerator {
        kind,
        creators: cre,
        annihilators: ann,
        quasi,
        sign,
        label,
    })
}

impl FermionGenerator {
    pub fn kind(&self) -> GeneratorKind {
        self.kind
    }

    pub fn creators(&self) -> &[SpinOrbital] {
        &self.creators
    }

    pub fn annihilators(&self) -> &[SpinOrbital] {
        &self.annihilators
    }

    pub fn creator_indices(&self) -> Vec<usize> {
        self.creators.iter().map(|o| o.index).collect()
    }

    pub fn annihilator_indices(&self) -> Vec<usize> {
        self.annihilators.iter().map(|o| o.index).collect()
    }

    pub fn quasi_vertex(&self) -> Option<usize> {
        self.quasi
    }

    pub fn sign(&self) -> f64 {
        f64::from(self.sign)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn creator_mask(&self) -> usize {
        self.creators.iter().fold(0, |m, o| m | 1 << o.index)
    }

    pub fn annihilator_mask(&self) -> usize {
        self.annihilators.iter().fold(0, |m, o| m | 1 << o.index)
    }

    pub fn support_mask(&self) -> usize {
        self.creator_mask() | self.annihilator_mask()
    }

    pub fn max_index(&self) -> usize {
        self.creators
            .iter()
            .chain(&self.annihilators)
            .map(|o| o.index)
            .max()
            .unwrap_or(0)
    }

    pub fn conserves_sz(&self) -> bool {
        let count = |v: &[SpinOrbital]| v.iter().filter(|o| o.spin == Spin::Alpha).count();
        count(&self.creators) == count(&self.annihilators)
    }

    /// Action of the signed monomial `sign * t` on a basis determinant.
    ///
    /// Returns `None` when `t` annihilates the determinant.
    #[inline]
    pub fn excite(&self, basis: usize) -> Option<(f64, usize)> {
        let ann = self.annihilator_mask();
        let cre = self.creator_mask();
        if basis & ann != ann || basis & cre != 0 {
            return None;
        }
        let mut state = basis;
        let mut parity = 0u32;
        // rightmost annihilator (smallest index) acts first
        for o in &self.annihilators {
            parity += (state & ((1usize << o.index) - 1)).count_ones();
            state &= !(1usize << o.index);
        }
        for o in self.creators.iter().rev() {
            parity += (state & ((1usize << o.index) - 1)).count_ones();
            state |= 1usize << o.index;
        }
        let sign = if parity % 2 == 0 { 1.0 } else { -1.0 };
        Some((sign * self.sign(), state))
    }

    /// Monomial as an ordered ladder product, leftmost first.
    fn ladder_sequence(&self) -> Vec<(usize, bool)> {
        self.creators
            .iter()
            .map(|o| (o.index, true))
            .chain(self.annihilators.iter().rev().map(|o| (o.index, false)))
            .collect()
    }
}

impl fmt::Display for FermionGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

/// Jordan–Wigner image of `a_p` (`dagger = false`) or `a†_p`.
pub fn jw_ladder(n_qubits: usize, p: usize, dagger: bool) -> Result<PauliSum> {
    if p >= n_qubits {
        return Err(Error::IndexOutOfRange { index: p, n_qubits });
    }
    let z_string = (1u64 << p) - 1;
    let x = PauliString::new(1 << p, z_string);
    let y_single = PauliString::single(p, Axis::Y);
    let y = PauliString::new(y_single.x, y_single.z | z_string);
    let y_coeff = if dagger { -0.5 } else { 0.5 };
    PauliSum::from_terms(
        n_qubits,
        [
            (Complex64::new(0.5, 0.0), x),
            (Complex64::new(0.0, y_coeff), y),
        ],
    )
}

/// Jordan–Wigner image of an ordered ladder product (leftmost factor first).
pub fn jw_product(n_qubits: usize, ladders: &[(usize, bool)]) -> Result<PauliSum> {
    let mut acc = PauliSum::identity(n_qubits, Complex64::new(1.0, 0.0));
    for &(p, dagger) in ladders {
        acc = acc.mul(&jw_ladder(n_qubits, p, dagger)?)?;
    }
    Ok(acc)
}

/// Anti-hermitian Pauli image of `gen`.
pub fn jordan_wigner(gen: &FermionGenerator, n_qubits: usize) -> Result<PauliSum> {
    if gen.max_index() >= n_qubits {
        return Err(Error::IndexOutOfRange {
            index: gen.max_index(),
            n_qubits,
        });
    }
    let t = jw_product(n_qubits, &gen.ladder_sequence())?;
    let a = t.sub(&t.adjoint())?;
    Ok(a.scale(Complex64::new(gen.sign(), 0.0)))
}

/// Whether the scatterer's quasi-vertex contracts with the double `tau`.
pub fn shares_cso(tau: &FermionGenerator, sigma: &FermionGenerator) -> Result<bool> {
    if tau.kind != GeneratorKind::Double {
        return Err(Error::WrongKind(format!(
            "expected a double excitation, got {}",
            tau.label
        )));
    }
    let q = sigma.quasi.ok_or_else(|| {
        Error::WrongKind(format!("expected a scatterer, got {}", sigma.label))
    })?;
    Ok(match sigma.kind {
        GeneratorKind::ScattererH => tau.annihilators.iter().any(|o| o.index == q),
        _ => tau.creators.iter().any(|o| o.index == q),
    })
}

/// Effective triple excitation induced by contracting `sigma` with `tau`
/// over the shared quasi-vertex.
pub fn composite_excitation(
    sigma: &FermionGenerator,
    tau: &FermionGenerator,
) -> Result<FermionGenerator> {
    if !shares_cso(tau, sigma)? {
        return Err(Error::NonContracting(format!(
            "{} and {} share no quasi-vertex",
            sigma.label, tau.label
        )));
    }
    let q = sigma.quasi.unwrap();
    let gather = |a: &[SpinOrbital], b: &[SpinOrbital]| -> Vec<SpinOrbital> {
        a.iter().chain(b).filter(|o| o.index != q).copied().collect()
    };
    let cre = gather(&sigma.creators, &tau.creators);
    let ann = gather(&sigma.annihilators, &tau.annihilators);
    make_generator(GeneratorKind::Triple, &cre, &ann).map_err(|e| {
        Error::NonContracting(format!("{} with {}: {e}", sigma.label, tau.label))
    })
}
