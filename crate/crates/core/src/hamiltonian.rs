//! FCIDUMP ingestion, frozen-core reduction and qubit Hamiltonian assembly.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fermion::{jw_product, OrbitalSpace};
use crate::pauli::PauliSum;
use crate::state::StateVector;

/// One- and two-electron integrals over spatial orbitals, two-electron part
/// in chemists' notation `(pq|rs)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MolecularIntegrals {
    pub n_spatial: usize,
    pub n_electrons: usize,
    pub ms2: i64,
    pub core_energy: f64,
    h1: Vec<f64>,
    h2: Vec<f64>,
    /// Optional `value p 0 0 0` records.
    pub orbital_energies: Option<Vec<f64>>,
}

impl MolecularIntegrals {
    pub fn zeros(n_spatial: usize, n_electrons: usize, ms2: i64) -> Self {
        Self {
            n_spatial,
            n_electrons,
            ms2,
            core_energy: 0.0,
            h1: vec![0.0; n_spatial * n_spatial],
            h2: vec![0.0; n_spatial.pow(4)],
            orbital_energies: None,
        }
    }

    #[inline]
    pub fn h1(&self, p: usize, q: usize) -> f64 {
        self.h1[p * self.n_spatial + q]
    }

    #[inline]
    pub fn h2(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        let n = self.n_spatial;
        self.h2[((p * n + q) * n + r) * n + s]
    }

    pub fn set_h1(&mut self, p: usize, q: usize, v: f64) {
        let n = self.n_spatial;
        self.h1[p * n + q] = v;
        self.h1[q * n + p] = v;
    }

    /// Sets `(pq|rs)` and its seven symmetry partners.
    pub fn set_h2(&mut self, p: usize, q: usize, r: usize, s: usize, v: f64) {
        let n = self.n_spatial;
        for (a, b, c, d) in [
            (p, q, r, s),
            (q, p, r, s),
            (p, q, s, r),
            (q, p, s, r),
            (r, s, p, q),
            (s, r, p, q),
            (r, s, q, p),
            (s, r, q, p),
        ] {
            self.h2[((a * n + b) * n + c) * n + d] = v;
        }
    }

    pub fn n_alpha(&self) -> usize {
        ((self.n_electrons as i64 + self.ms2) / 2) as usize
    }

    pub fn n_beta(&self) -> usize {
        ((self.n_electrons as i64 - self.ms2) / 2) as usize
    }

    /// Largest deviation from the 8-fold and h1 symmetries.
    pub fn symmetry_violation(&self) -> f64 {
        let n = self.n_spatial;
        let mut worst: f64 = 0.0;
        for p in 0..n {
            for q in 0..n {
                worst = worst.max((self.h1(p, q) - self.h1(q, p)).abs());
                for r in 0..n {
                    for s in 0..n {
                        let v = self.h2(p, q, r, s);
                        for w in [self.h2(q, p, r, s), self.h2(p, q, s, r), self.h2(r, s, p, q)] {
                            worst = worst.max((v - w).abs());
                        }
                    }
                }
            }
        }
        worst
    }

    /// Closed-form energy of the aufbau determinant with `n_alpha` / `n_beta`
    /// lowest orbitals occupied.
    pub fn determinant_energy(&self) -> f64 {
        let (na, nb) = (self.n_alpha(), self.n_beta());
        let mut e = self.core_energy;
        for i in 0..na {
            e += self.h1(i, i);
        }
        for i in 0..nb {
            e += self.h1(i, i);
        }
        let coulomb = |ni: usize, nj: usize| -> f64 {
            let mut s = 0.0;
            for i in 0..ni {
                for j in 0..nj {
                    s += self.h2(i, i, j, j);
                }
            }
            s
        };
        let exchange = |no: usize| -> f64 {
            let mut s = 0.0;
            for i in 0..no {
                for j in 0..no {
                    s += self.h2(i, j, j, i);
                }
            }
            s
        };
        e += 0.5 * (coulomb(na, na) + coulomb(nb, nb)) + coulomb(na, nb);
        e -= 0.5 * (exchange(na) + exchange(nb));
        e
    }
}

fn fcidump_err(line: usize, message: impl Into<String>) -> Error {
    Error::Fcidump {
        line,
        message: message.into(),
    }
}

/// Parses FCIDUMP text: a `&FCI ... &END` namelist followed by
/// `value p q r s` records with 1-based spatial indices.
pub fn parse_fcidump(text: &str) -> Result<MolecularIntegrals> {
    let mut lines = text.lines().enumerate();
    let mut header = String::new();
    let mut header_end = None;
    for (no, line) in lines.by_ref() {
        let upper = line.trim().to_ascii_uppercase();
        if let Some(pos) = upper.find("&END").or_else(|| (upper == "/").then_some(0)) {
            header.push_str(&upper[..pos]);
            header_end = Some(no + 1);
            break;
        }
        header.push_str(&upper);
        header.push(',');
    }
    let header_end = header_end.ok_or_else(|| fcidump_err(1, "missing &END terminating the header"))?;

    let compact: String = header
        .trim_start()
        .trim_start_matches("&FCI")
        .chars()
        .filter(|c| !c.is_whitespace())
        .collect();
    let mut norb = None;
    let mut nelec = None;
    let mut ms2 = Some(0i64);
    for piece in compact.split(',') {
        let Some((key, value)) = piece.split_once('=') else {
            continue;
        };
        let parse_int = |v: &str| -> Result<i64> {
            v.parse::<i64>()
                .map_err(|_| fcidump_err(1, format!("header field {key} has non-integer value '{v}'")))
        };
        match key {
            "NORB" => norb = Some(parse_int(value)?),
            "NELEC" => nelec = Some(parse_int(value)?),
            "MS2" => ms2 = Some(parse_int(value)?),
            _ => {}
        }
    }
    let norb = norb.ok_or_else(|| fcidump_err(1, "header lacks NORB"))?;
    let nelec = nelec.ok_or_else(|| fcidump_err(1, "header lacks NELEC"))?;
    if norb <= 0 || nelec < 0 || nelec > 2 * norb {
        return Err(fcidump_err(1, format!("inconsistent header NORB={norb} NELEC={nelec}")));
    }
    let ms2 = ms2.unwrap();
    if (nelec + ms2) % 2 != 0 || ms2.abs() > nelec {
        return Err(fcidump_err(1, format!("MS2={ms2} inconsistent with NELEC={nelec}")));
    }
    let n = norb as usize;
    let mut ints = MolecularIntegrals::zeros(n, nelec as usize, ms2);
    let mut orbital_energies = vec![0.0; n];
    let mut saw_orbital_energy = false;

    for (no, line) in lines {
        let line_no = no + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(fcidump_err(line_no, format!("expected 5 fields, found {}", fields.len())));
        }
        let value: f64 = fields[0]
            .replace(['D', 'd'], "e")
            .parse()
            .map_err(|_| fcidump_err(line_no, format!("non-numeric value '{}'", fields[0])))?;
        let mut idx = [0usize; 4];
        for (k, f) in fields[1..].iter().enumerate() {
            let v: usize = f
                .parse()
                .map_err(|_| fcidump_err(line_no, format!("non-integer index '{f}'")))?;
            if v > n {
                return Err(fcidump_err(line_no, format!("index {v} exceeds NORB={n}")));
            }
            idx[k] = v;
        }
        match idx {
            [0, 0, 0, 0] => ints.core_energy = value,
            [p, 0, 0, 0] => {
                orbital_energies[p - 1] = value;
                saw_orbital_energy = true;
            }
            [p, q, 0, 0] if q > 0 => ints.set_h1(p - 1, q - 1, value),
            [p, q, r, s] if p > 0 && q > 0 && r > 0 && s > 0 => {
                ints.set_h2(p - 1, q - 1, r - 1, s - 1, value)
            }
            _ => {
                return Err(fcidump_err(
                    line_no,
                    format!("unrecognised index pattern {idx:?}"),
                ))
            }
        }
    }
    let _ = header_end;
    if saw_orbital_energy {
        ints.orbital_energies = Some(orbital_energies);
    }
    Ok(ints)
}

/// Writes integrals in FCIDUMP form; values use shortest round-trip notation.
pub fn write_fcidump(ints: &MolecularIntegrals) -> String {
    let n = ints.n_spatial;
    let mut out = format!(
        " &FCI NORB={},NELEC={},MS2={},\n &END\n",
        n, ints.n_electrons, ints.ms2
    );
    let mut rec = |v: f64, p: usize, q: usize, r: usize, s: usize| {
        if v != 0.0 {
            let _ = writeln!(out, "{v:?} {p} {q} {r} {s}");
        }
    };
    for p in 0..n {
        for q in 0..=p {
            for r in 0..n {
                for s in 0..=r {
                    if p * (p + 1) / 2 + q >= r * (r + 1) / 2 + s {
                        rec(ints.h2(p, q, r, s), p + 1, q + 1, r + 1, s + 1);
                    }
                }
            }
        }
    }
    for p in 0..n {
        for q in 0..=p {
            rec(ints.h1(p, q), p + 1, q + 1, 0, 0);
        }
    }
    if let Some(eps) = &ints.orbital_energies {
        for (p, e) in eps.iter().enumerate() {
            rec(*e, p + 1, 0, 0, 0);
        }
    }
    let _ = writeln!(out, "{:?} 0 0 0 0", ints.core_energy);
    out
}

/// Folds the lowest `n_frozen` doubly occupied spatial orbitals into the core.
pub fn freeze_core(ints: &MolecularIntegrals, n_frozen: usize) -> Result<MolecularIntegrals> {
    let doubly = ints.n_alpha().min(ints.n_beta());
    if n_frozen == 0 {
        return Ok(ints.clone());
    }
    if n_frozen >= doubly {
        return Err(Error::FreezeTooMany {
            requested: n_frozen,
            occupied: doubly,
        });
    }
    let n = ints.n_spatial - n_frozen;
    let mut out = MolecularIntegrals::zeros(n, ints.n_electrons - 2 * n_frozen, ints.ms2);
    let core = 0..n_frozen;

    let mut e = ints.core_energy;
    for c in core.clone() {
        e += 2.0 * ints.h1(c, c);
        for d in core.clone() {
            e += 2.0 * ints.h2(c, c, d, d) - ints.h2(c, d, d, c);
        }
    }
    out.core_energy = e;

    for p in 0..n {
        for q in 0..n {
            let (gp, gq) = (p + n_frozen, q + n_frozen);
            let mut v = ints.h1(gp, gq);
            for c in core.clone() {
                v += 2.0 * ints.h2(gp, gq, c, c) - ints.h2(gp, c, c, gq);
            }
            out.h1[p * n + q] = v;
            for r in 0..n {
                for s in 0..n {
                    out.h2[((p * n + q) * n + r) * n + s] =
                        ints.h2(gp, gq, r + n_frozen, s + n_frozen);
                }
            }
        }
    }
    out.orbital_energies = ints
        .orbital_energies
        .as_ref()
        .map(|eps| eps[n_frozen..].to_vec());
    Ok(out)
}

/// Sidecar metadata shipped next to each fixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureMeta {
    pub label: String,
    #[serde(default)]
    pub molecule: String,
    #[serde(default)]
    pub bond_length_angstrom: f64,
    pub hf_energy: f64,
    #[serde(default)]
    pub fci_energy: Option<f64>,
    #[serde(default)]
    pub fci_energy_frozen_core: Option<f64>,
    #[serde(default)]
    pub frozen_core_default: usize,
    #[serde(default)]
    pub frozen_core_available: usize,
    #[serde(default)]
    pub generator: String,
}

/// A parsed fixture: integrals plus the optional JSON sidecar.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub label: String,
    pub integrals: MolecularIntegrals,
    pub meta: Option<FixtureMeta>,
    pub raw: String,
}

pub fn load_fixture(path: &Path) -> Result<Fixture> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| fcidump_err(0, format!("cannot read {}: {e}", path.display())))?;
    let integrals = parse_fcidump(&raw)?;
    let sidecar = path.with_extension("json");
    let meta = match std::fs::read_to_string(&sidecar) {
        Ok(text) => Some(serde_json::from_str::<FixtureMeta>(&text).map_err(|e| {
            Error::InvalidSystem(format!("bad sidecar {}: {e}", sidecar.display()))
        })?),
        Err(_) => None,
    };
    let label = meta
        .as_ref()
        .map(|m| m.label.clone())
        .or_else(|| path.file_stem().map(|s| s.to_string_lossy().into_owned()))
        .unwrap_or_default();
    Ok(Fixture {
        label,
        integrals,
        meta,
        raw,
    })
}

/// Fixtures shipped with this crate.
pub const BUNDLED_FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");

/// `<dir>/<molecule>/<label>.fcidump` for labels like `H4_d1.50`.
pub fn fixture_path(dir: &Path, label: &str) -> std::path::PathBuf {
    let molecule = label.split('_').next().unwrap_or(label);
    dir.join(molecule).join(format!("{label}.fcidump"))
}

/// Every fixture label under `dir`, sorted.
pub fn list_fixtures(dir: &Path) -> Vec<String> {
    let mut out = Vec::new();
    let Ok(entries) = std::fs::read_dir(dir) else {
        return out;
    };
    for sub in entries.flatten() {
        let Ok(files) = std::fs::read_dir(sub.path()) else {
            continue;
        };
        for f in files.flatten() {
            let p = f.path();
            if p.extension().is_some_and(|e| e == "fcidump") {
                if let Some(stem) = p.file_stem() {
                    out.push(stem.to_string_lossy().into_owned());
                }
            }
        }
    }
    out.sort();
    out
}

/// Active-space molecule ready for qubit encoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoleculeSystem {
    pub integrals: MolecularIntegrals,
    pub n_qubits: usize,
    pub n_alpha: usize,
    pub n_beta: usize,
    pub homo: usize,
    pub lumo: usize,
    pub label: String,
}

impl MoleculeSystem {
    pub fn new(integrals: MolecularIntegrals, label: impl Into<String>) -> Result<Self> {
        let n_alpha = integrals.n_alpha();
        let n_beta = integrals.n_beta();
        let n_spatial = integrals.n_spatial;
        if n_alpha.max(n_beta) > n_spatial || n_alpha.max(n_beta) == 0 {
            return Err(Error::InvalidSystem(format!(
                "{n_alpha} alpha / {n_beta} beta electrons in {n_spatial} orbitals"
            )));
        }
        let homo = n_alpha.max(n_beta) - 1;
        let lumo = n_alpha.min(n_beta);
        if lumo >= n_spatial {
            return Err(Error::InvalidSystem("no virtual orbitals".into()));
        }
        if 2 * n_spatial > 30 {
            return Err(Error::InvalidSystem(format!(
                "{} qubits exceed the dense statevector limit",
                2 * n_spatial
            )));
        }
        Ok(Self {
            n_qubits: 2 * n_spatial,
            n_alpha,
            n_beta,
            homo,
            lumo,
            integrals,
            label: label.into(),
        })
    }

    pub fn from_fixture(fixture: &Fixture, n_frozen: usize) -> Result<Self> {
        let ints = freeze_core(&fixture.integrals, n_frozen)?;
        Self::new(ints, fixture.label.clone())
    }

    pub fn n_electrons(&self) -> usize {
        self.n_alpha + self.n_beta
    }

    /// Orbital space with the HOMO/LUMO contractible window.
    pub fn orbital_space(&self) -> OrbitalSpace {
        OrbitalSpace::new(self.n_qubits, self.n_alpha, self.n_beta)
            .expect("validated at construction")
            .with_active(vec![self.homo], vec![self.lumo])
    }

    pub fn hf_energy(&self) -> f64 {
        self.integrals.determinant_energy()
    }
}

fn real(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

/// `E_{PQ} = a†_P a_Q` images for all spin-orbital pairs.
fn excitation_table(n_qubits: usize) -> Result<Vec<PauliSum>> {
    let mut table = Vec::with_capacity(n_qubits * n_qubits);
    for p in 0..n_qubits {
        for q in 0..n_qubits {
            table.push(jw_product(n_qubits, &[(p, true), (q, false)])?);
        }
    }
    Ok(table)
}

fn accumulate(target: &mut PauliSum, src: &PauliSum, factor: f64) {
    for t in src.terms() {
        target.add_term(t.string, t.coeff * factor);
    }
}

/// Qubit Hamiltonian
/// `E_core + Σ h_pq a†_pσ a_qσ + ½ Σ (pq|rs) a†_pσ a†_rτ a_sτ a_qσ`.
pub fn build_qubit_hamiltonian(system: &MoleculeSystem) -> Result<PauliSum> {
    let ints = &system.integrals;
    let n = ints.n_spatial;
    let nq = system.n_qubits;
    let table = excitation_table(nq)?;
    let e = |p: usize, q: usize| &table[p * nq + q];
    let so = |p: usize, spin: usize| 2 * p + spin;

    let mut h = PauliSum::identity(nq, real(ints.core_energy));
    for p in 0..n {
        for q in 0..n {
            let v = ints.h1(p, q);
            if v == 0.0 {
                continue;
            }
            for s in 0..2 {
                accumulate(&mut h, e(so(p, s), so(q, s)), v);
            }
        }
    }
    // a†_P a†_R a_S a_Q = E_PQ E_RS - δ_QR E_PS
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                for s in 0..n {
                    let v = ints.h2(p, q, r, s);
                    if v == 0.0 {
                        continue;
                    }
                    for sig in 0..2 {
                        for tau in 0..2 {
                            let (pp, qq, rr, ss) = (so(p, sig), so(q, sig), so(r, tau), so(s, tau));
                            let prod = e(pp, qq).mul(e(rr, ss))?;
                            accumulate(&mut h, &prod, 0.5 * v);
                            if qq == rr {
                                accumulate(&mut h, e(pp, ss), -0.5 * v);
                            }
                        }
                    }
                }
            }
        }
    }
    real_part(&h, 1e-10)
}

/// Strips imaginary round-off from a Hamiltonian built from real integrals.
fn real_part(h: &PauliSum, tol: f64) -> Result<PauliSum> {
    let mut out = PauliSum::zero(h.n_qubits());
    for t in h.terms() {
        if t.coeff.im.abs() > tol {
            return Err(Error::InvalidSystem(format!(
                "non-real coefficient {} on {}",
                t.coeff, t.string
            )));
        }
        if t.coeff.re.abs() > 1e-14 {
            out.add_term(t.string, real(t.coeff.re));
        }
    }
    Ok(out)
}

pub fn hf_determinant(system: &MoleculeSystem) -> StateVector {
    StateVector::basis_state(system.n_qubits, system.orbital_space().reference_mask())
}

pub fn number_operator(n_qubits: usize) -> Result<PauliSum> {
    let mut n = PauliSum::zero(n_qubits);
    for p in 0..n_qubits {
        accumulate(&mut n, &jw_product(n_qubits, &[(p, true), (p, false)])?, 1.0);
    }
    Ok(n)
}

pub fn sz_operator(n_qubits: usize) -> Result<PauliSum> {
    let mut sz = PauliSum::zero(n_qubits);
    for p in 0..n_qubits {
        let w = if p % 2 == 0 { 0.5 } else { -0.5 };
        accumulate(&mut sz, &jw_product(n_qubits, &[(p, true), (p, false)])?, w);
    }
    Ok(sz)
}

/// `S² = S₋S₊ + S_z(S_z + 1)`.
pub fn s_squared_operator(n_qubits: usize) -> Result<PauliSum> {
    let mut s_plus = PauliSum::zero(n_qubits);
    let mut s_minus = PauliSum::zero(n_qubits);
    for p in 0..n_qubits / 2 {
        let (a, b) = (2 * p, 2 * p + 1);
        accumulate(&mut s_plus, &jw_product(n_qubits, &[(a, true), (b, false)])?, 1.0);
        accumulate(&mut s_minus, &jw_product(n_qubits, &[(b, true), (a, false)])?, 1.0);
    }
    let sz = sz_operator(n_qubits)?;
    let one = PauliSum::identity(n_qubits, real(1.0));
    s_minus.mul(&s_plus)?.add(&sz.mul(&sz.add(&one)?)?)
}
