//! Operator-block pool assembly: one-parameter screening of doubles,
//! two-parameter screening of scatterers, pruning of duplicate triple
//! pathways, and singles blocks.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::driver::optimize_compiled;
use crate::error::{Error, Result};
use crate::fermion::{
    composite_excitation, make_generator, shares_cso, spin_of, FermionGenerator, GeneratorKind,
    OrbitalSpace,
};
use crate::hamiltonian::MoleculeSystem;
use crate::optimizer::MinimizeOptions;
use crate::state::{AnsatzBlock, Simulator, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub threshold_d: f64,
    pub threshold_s: f64,
    pub macro_tol: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            threshold_d: 1e-5,
            threshold_s: 1e-6,
            macro_tol: 1e-7,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("threshold_d", self.threshold_d),
            ("threshold_s", self.threshold_s),
            ("macro_tol", self.macro_tol),
        ] {
            if v.is_nan() || v <= 0.0 {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Optimiser settings for the one- and two-parameter screens.
pub fn screening_options() -> MinimizeOptions {
    MinimizeOptions::default().with_grad_tol(1e-9)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningRecord {
    pub generator: FermionGenerator,
    /// `E_I`
    pub e_single: f64,
    /// `|E_I - E_HF|`
    pub delta_e: f64,
    pub theta_opt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScattererRecord {
    pub sigma: FermionGenerator,
    pub e_pair: f64,
    /// `|E_Iμ - E_I|`
    pub delta_pair: f64,
    pub composite: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    DoubleBlock,
    SingleBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorBlock {
    pub kind: BlockKind,
    pub cluster: FermionGenerator,
    pub scatterers: Vec<ScattererRecord>,
    /// `ΔE_I` for double blocks; zero for singles until a run scores them.
    pub stabilization: f64,
}

impl OperatorBlock {
    pub fn double_block(record: &ScreeningRecord) -> Self {
        Self {
            kind: BlockKind::DoubleBlock,
            cluster: record.generator.clone(),
            scatterers: Vec::new(),
            stabilization: record.delta_e,
        }
    }

    pub fn single_block(gen: FermionGenerator) -> Self {
        Self {
            kind: BlockKind::SingleBlock,
            cluster: gen,
            scatterers: Vec::new(),
            stabilization: 0.0,
        }
    }

    pub fn label(&self) -> &str {
        self.cluster.label()
    }

    /// Cluster first, then scatterers in stored order.
    pub fn generators(&self) -> Vec<FermionGenerator> {
        std::iter::once(self.cluster.clone())
            .chain(self.scatterers.iter().map(|s| s.sigma.clone()))
            .collect()
    }

    pub fn param_count(&self) -> usize {
        1 + self.scatterers.len()
    }

    pub fn to_ansatz_block(&self) -> AnsatzBlock {
        AnsatzBlock {
            label: self.label().to_string(),
            generators: self.generators(),
        }
    }
}

fn desc_then_label(a: (f64, &str), b: (f64, &str)) -> std::cmp::Ordering {
    b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1))
}

fn spin_index(i: usize) -> usize {
    i % 2
}

/// All N- and S_z-conserving singles `i -> a`, ordered by `(i, a)`.
pub fn enumerate_singles(space: &OrbitalSpace) -> Result<Vec<FermionGenerator>> {
    let mut out = Vec::new();
    for &i in &space.occupied() {
        for &a in &space.virtuals() {
            if spin_index(i) == spin_index(a) {
                out.push(make_generator(
                    GeneratorKind::Single,
                    &space.orbitals(&[a])?,
                    &space.orbitals(&[i])?,
                )?);
            }
        }
    }
    Ok(out)
}

/// All N- and S_z-conserving doubles `i<j -> a<b`, ordered by `(i, j, a, b)`.
pub fn enumerate_doubles(space: &OrbitalSpace) -> Result<Vec<FermionGenerator>> {
    let occ = space.occupied();
    let vir = space.virtuals();
    let mut out = Vec::new();
    for (x, &i) in occ.iter().enumerate() {
        for &j in &occ[x + 1..] {
            for (y, &a) in vir.iter().enumerate() {
                for &b in &vir[y + 1..] {
                    if spin_index(i) + spin_index(j) == spin_index(a) + spin_index(b) {
                        out.push(make_generator(
                            GeneratorKind::Double,
                            &space.orbitals(&[a, b])?,
                            &space.orbitals(&[i, j])?,
                        )?);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// All N- and S_z-conserving triples, ordered by index tuples.
pub fn enumerate_triples(space: &OrbitalSpace) -> Result<Vec<FermionGenerator>> {
    let occ = space.occupied();
    let vir = space.virtuals();
    let mut out = Vec::new();
    let triples = |v: &[usize]| {
        let mut t = Vec::new();
        for x in 0..v.len() {
            for y in x + 1..v.len() {
                for z in y + 1..v.len() {
                    t.push([v[x], v[y], v[z]]);
                }
            }
        }
        t
    };
    let vir_triples = triples(&vir);
    for ann in triples(&occ) {
        for cre in &vir_triples {
            let s = |t: &[usize; 3]| t.iter().map(|&i| spin_index(i)).sum::<usize>();
            if s(&ann) == s(cre) {
                out.push(make_generator(
                    GeneratorKind::Triple,
                    &space.orbitals(cre)?,
                    &space.orbitals(&ann)?,
                )?);
            }
        }
    }
    Ok(out)
}

/// One-parameter screen of every double on the reference.
pub fn screen_doubles(
    sim: &Simulator,
    reference: &StateVector,
    system: &MoleculeSystem,
    threshold_d: f64,
) -> Result<Vec<ScreeningRecord>> {
    let e_ref = sim.energy(reference)?;
    let doubles = enumerate_doubles(&system.orbital_space())?;
    let opts = screening_options();
    let mut records = doubles
        .into_par_iter()
        .map(|g| {
            let compiled = sim.compile_generators([&g]);
            let r = optimize_compiled(sim, &compiled, &[0.0], reference, &opts)?;
            Ok(ScreeningRecord {
                e_single: r.f_opt,
                delta_e: (r.f_opt - e_ref).abs(),
                theta_opt: r.x_opt[0],
                generator: g,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    records.retain(|r| r.delta_e > threshold_d);
    records.sort_by(|a, b| {
        desc_then_label((a.delta_e, a.generator.label()), (b.delta_e, b.generator.label()))
    });
    Ok(records)
}

/// Scatterer candidates for one double: quasi-vertex inside the active window
/// and shared with the cluster, opposite-spin pair of creators (hence of
/// annihilators), and a well-formed triple composite.
pub fn scatterer_candidates(
    tau: &FermionGenerator,
    space: &OrbitalSpace,
) -> Result<Vec<FermionGenerator>> {
    let occ = space.occupied();
    let vir = space.virtuals();
    let mut out = Vec::new();
    let mut consider = |kind, cre: [usize; 2], ann: [usize; 2]| -> Result<()> {
        if spin_of(cre[0]) == spin_of(cre[1]) || spin_of(ann[0]) == spin_of(ann[1]) {
            return Ok(());
        }
        let sigma = match make_generator(kind, &space.orbitals(&cre)?, &space.orbitals(&ann)?) {
            Ok(s) => s,
            Err(Error::MalformedGenerator(_)) => return Ok(()),
            Err(e) => return Err(e),
        };
        if !shares_cso(tau, &sigma)? {
            return Ok(());
        }
        match composite_excitation(&sigma, tau) {
            Ok(_) => {
                out.push(sigma);
                Ok(())
            }
            Err(Error::NonContracting(_)) => Ok(()),
            Err(e) => Err(e),
        }
    };
    for m in tau.annihilator_indices() {
        if !space.orbital(m)?.active {
            continue;
        }
        for &a in &vir {
            for (x, &i) in occ.iter().enumerate() {
                for &j in &occ[x + 1..] {
                    if i != m && j != m {
                        consider(GeneratorKind::ScattererH, [a, m], [i, j])?;
                    }
                }
            }
        }
    }
    for e in tau.creator_indices() {
        if !space.orbital(e)?.active {
            continue;
        }
        for &i in &occ {
            for (y, &a) in vir.iter().enumerate() {
                for &b in &vir[y + 1..] {
                    if a != e && b != e {
                        consider(GeneratorKind::ScattererP, [a, b], [i, e])?;
                    }
                }
            }
        }
    }
    out.sort_by(|a, b| a.label().cmp(b.label()));
    out.dedup_by(|a, b| a.label() == b.label());
    Ok(out)
}

/// Two-parameter screen of the scatterers of one double block.
///
/// The pair functional is started from `(θ_I*, 0)`, so `E_Iμ <= E_I`.
pub fn screen_scatterers(
    block: &OperatorBlock,
    record: &ScreeningRecord,
    sim: &Simulator,
    reference: &StateVector,
    system: &MoleculeSystem,
    threshold_s: f64,
) -> Result<OperatorBlock> {
    if block.kind != BlockKind::DoubleBlock {
        return Err(Error::WrongKind(format!(
            "scatterer screening needs a double block, got {}",
            block.label()
        )));
    }
    let tau = &block.cluster;
    let opts = screening_options();
    let candidates = scatterer_candidates(tau, &system.orbital_space())?;
    let mut kept = candidates
        .into_par_iter()
        .map(|sigma| {
            let compiled = sim.compile_generators([tau, &sigma]);
            let r = optimize_compiled(sim, &compiled, &[record.theta_opt, 0.0], reference, &opts)?;
            let composite = composite_excitation(&sigma, tau)?.label().to_string();
            Ok(ScattererRecord {
                e_pair: r.f_opt,
                delta_pair: (r.f_opt - record.e_single).abs(),
                composite,
                sigma,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    kept.retain(|s| s.delta_pair > threshold_s);
    let mut out = block.clone();
    out.scatterers.extend(kept);
    out.scatterers.sort_by(|a, b| {
        desc_then_label((a.delta_pair, a.sigma.label()), (b.delta_pair, b.sigma.label()))
    });
    Ok(out)
}

/// Keeps, for every composite triple label, only the scatterer record with the
/// largest `delta_pair` (ties: smallest block label, then scatterer label).
pub fn prune_redundant(blocks: Vec<OperatorBlock>) -> Vec<OperatorBlock> {
    let mut winner: BTreeMap<String, (f64, String, String)> = BTreeMap::new();
    for b in &blocks {
        for s in &b.scatterers {
            let cand = (s.delta_pair, b.label().to_string(), s.sigma.label().to_string());
            match winner.get(&s.composite) {
                Some(best)
                    if best.0 > cand.0
                        || (best.0 == cand.0 && (&best.1, &best.2) <= (&cand.1, &cand.2)) => {}
                _ => {
                    winner.insert(s.composite.clone(), cand);
                }
            }
        }
    }
    blocks
        .into_iter()
        .map(|mut b| {
            let label = b.label().to_string();
            b.scatterers.retain(|s| {
                let w = &winner[&s.composite];
                w.1 == label && w.2 == s.sigma.label()
            });
            b
        })
        .collect()
}

/// Screened, pruned double blocks (descending `ΔE_I`) followed by singles
/// blocks in canonical order.
pub fn build_block_pool(
    sim: &Simulator,
    reference: &StateVector,
    system: &MoleculeSystem,
    thresholds: &Thresholds,
) -> Result<Vec<OperatorBlock>> {
    thresholds.validate()?;
    let records = screen_doubles(sim, reference, system, thresholds.threshold_d)?;
    let blocks = records
        .iter()
        .map(|r| {
            screen_scatterers(
                &OperatorBlock::double_block(r),
                r,
                sim,
                reference,
                system,
                thresholds.threshold_s,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let mut pool = prune_redundant(blocks);
    pool.extend(
        enumerate_singles(&system.orbital_space())?
            .into_iter()
            .map(OperatorBlock::single_block),
    );
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    Ok(pool)
}

#[derive(Serialize)]
struct ScattererDump<'a> {
    label: &'a str,
    delta_pair: f64,
    composite: &'a str,
}

#[derive(Serialize)]
struct BlockDump<'a> {
    label: &'a str,
    kind: BlockKind,
    delta_e: f64,
    scatterers: Vec<ScattererDump<'a>>,
}

/// Inspectable JSON view of a pool.
pub fn pool_json(pool: &[OperatorBlock]) -> serde_json::Value {
    let dump: Vec<BlockDump> = pool
        .iter()
        .map(|b| BlockDump {
            label: b.label(),
            kind: b.kind,
            delta_e: b.stabilization,
            scatterers: b
                .scatterers
                .iter()
                .map(|s| ScattererDump {
                    label: s.sigma.label(),
                    delta_pair: s.delta_pair,
                    composite: &s.composite,
                })
                .collect(),
        })
        .collect();
    serde_json::to_value(dump).expect("plain data serialises")
}
