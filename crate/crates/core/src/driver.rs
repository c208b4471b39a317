//! Ansatz-growth drivers: the progressive block loop, ADAPT baselines and
//! fixed-order ansätze.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{fci_spectrum, Eigenpair};
use crate::fermion::{make_generator, spin_of, FermionGenerator, GeneratorKind, OrbitalSpace};
use crate::hamiltonian::{build_qubit_hamiltonian, hf_determinant, MoleculeSystem};
use crate::optimizer::{minimize, MinimizeOptions, MinimizeResult, MinimizeStatus};
use crate::pauli::PauliSum;
use crate::screening::{
    build_block_pool, enumerate_doubles, enumerate_singles, enumerate_triples, OperatorBlock,
    Thresholds,
};
use crate::state::{AnsatzBlock, AnsatzProgram, CompiledProgram, Simulator, StateVector};

pub const CHEMICAL_ACCURACY: f64 = 1.6e-3;
/// Two micro-cycle energies closer than this count as tied.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    CompassPro,
    CompassStatic,
    CompassStepwise,
    Uccsd,
    Uccsdt,
    AdaptSd,
    AdaptGsd,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::CompassPro => "compass_pro",
            Method::CompassStatic => "compass_static",
            Method::CompassStepwise => "compass_stepwise",
            Method::Uccsd => "uccsd",
            Method::Uccsdt => "uccsdt",
            Method::AdaptSd => "adapt_sd",
            Method::AdaptGsd => "adapt_gsd",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitStrategy {
    Warm,
    HfZero,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub method: Method,
    pub thresholds: Thresholds,
    pub init_strategy: InitStrategy,
    pub random_range: f64,
    pub seed: u64,
    pub max_blocks: usize,
    /// ADAPT stopping threshold on the largest pool gradient.
    pub gradient_tol: f64,
    pub micro_grad_tol: f64,
    pub macro_grad_tol: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            method: Method::CompassPro,
            thresholds: Thresholds::default(),
            init_strategy: InitStrategy::Warm,
            random_range: std::f64::consts::PI,
            seed: 0,
            max_blocks: 200,
            gradient_tol: 1e-4,
            micro_grad_tol: 1e-8,
            macro_grad_tol: 1e-9,
        }
    }
}

impl RunConfig {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.thresholds.validate()?;
        if self.random_range.is_nan() || self.random_range <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "random_range must be positive, got {}",
                self.random_range
            )));
        }
        if self.max_blocks == 0 {
            return Err(Error::InvalidConfig("max_blocks must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Converged,
    PoolExhausted,
    PoolExhaustedGain,
    MaxBlocks,
    GradientConverged,
    GradientTrough,
    Completed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub k: usize,
    pub label: String,
    pub param_count: usize,
    pub energy: f64,
    /// `|E_k - E_{k-1}|`
    pub delta_e: f64,
    /// Best micro-cycle energy for the progressive loop, largest `|g|` for ADAPT.
    pub selection_score: Option<f64>,
    pub error_fci: Option<f64>,
    pub overlaps: Option<Vec<f64>>,
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroTrace {
    pub rows: Vec<TraceRow>,
    pub status: RunStatus,
}

impl MacroTrace {
    pub fn final_energy(&self) -> Option<f64> {
        self.rows.last().map(|r| r.energy)
    }

    /// Parameter count of the first row within `tol` of `e_exact`.
    pub fn params_to_accuracy(&self, e_exact: f64, tol: f64) -> Option<usize> {
        self.rows
            .iter()
            .find(|r| (r.energy - e_exact).abs() < tol)
            .map(|r| r.param_count)
    }
}

/// Everything produced by one driver run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub trace: MacroTrace,
    pub program: AnsatzProgram,
    pub params: Vec<f64>,
    /// Number of program blocks present at each trace row.
    pub depths: Vec<usize>,
    /// Optimised parameters at each trace row.
    pub row_params: Vec<Vec<f64>>,
    pub states: Vec<StateVector>,
}

/// System, encoded Hamiltonian, sector simulator and exact reference energy.
#[derive(Debug, Clone)]
pub struct Workbench {
    pub system: MoleculeSystem,
    pub hamiltonian: PauliSum,
    pub sim: Simulator,
    pub hf: StateVector,
    pub e_hf: f64,
    pub e_fci: f64,
}

impl Workbench {
    pub fn new(system: MoleculeSystem) -> Result<Self> {
        let hamiltonian = build_qubit_hamiltonian(&system)?;
        let sim = Simulator::new(&hamiltonian, system.n_alpha, system.n_beta);
        let hf = hf_determinant(&system);
        let e_hf = sim.energy(&hf)?;
        let e_fci = fci_spectrum(&hamiltonian, &system, 1)?[0].energy;
        Ok(Self {
            system,
            hamiltonian,
            sim,
            hf,
            e_hf,
            e_fci,
        })
    }

    pub fn spectrum(&self, n_roots: usize) -> Result<Vec<Eigenpair>> {
        fci_spectrum(&self.hamiltonian, &self.system, n_roots)
    }

    pub fn pool(&self, thresholds: &Thresholds) -> Result<Vec<OperatorBlock>> {
        build_block_pool(&self.sim, &self.hf, &self.system, thresholds)
    }
}

/// Quasi-Newton minimisation of the compiled ansatz energy.
pub fn optimize_compiled(
    sim: &Simulator,
    compiled: &CompiledProgram,
    x0: &[f64],
    reference: &StateVector,
    options: &MinimizeOptions,
) -> Result<MinimizeResult> {
    minimize(
        |x| {
            let r = sim.energy_and_gradient_compiled(compiled, x, reference)?;
            Ok((r.energy, r.gradient))
        },
        x0,
        options,
    )
}

/// Gradient norm above which an unconverged optimisation is an error.
const FAILURE_GRAD_NORM: f64 = 1e-3;
const MACRO_MAX_ITERS: usize = 20_000;

fn check_optimizer(r: &MinimizeResult) -> Result<()> {
    if !r.converged() && r.grad_norm > FAILURE_GRAD_NORM {
        return Err(Error::OptimizerFailure {
            iterations: r.n_iters,
            grad_norm: r.grad_norm,
            reason: match r.status {
                MinimizeStatus::MaxIters => "iteration limit".into(),
                _ => "line search failed".into(),
            },
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MicroResult {
    /// Position in the pool passed to [`micro_cycle`].
    pub index: usize,
    pub label: String,
    pub energy: f64,
    pub theta: Vec<f64>,
}

/// Optimises each pool block alone (from zero) on top of `reference`;
/// returns candidates in ascending energy, label order on exact ties.
pub fn micro_cycle(
    sim: &Simulator,
    pool: &[OperatorBlock],
    reference: &StateVector,
    grad_tol: f64,
) -> Result<Vec<MicroResult>> {
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    let opts = MinimizeOptions::default().with_grad_tol(grad_tol);
    let mut ranked = pool
        .par_iter()
        .enumerate()
        .map(|(index, block)| {
            let gens = block.generators();
            let compiled = sim.compile_generators(&gens);
            let r = optimize_compiled(sim, &compiled, &vec![0.0; gens.len()], reference, &opts)?;
            Ok(MicroResult {
                index,
                label: block.label().to_string(),
                energy: r.f_opt,
                theta: r.x_opt,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ranked.sort_by(|a, b| a.energy.total_cmp(&b.energy).then_with(|| a.label.cmp(&b.label)));
    Ok(ranked)
}

/// Winner of a ranked micro-cycle: lowest energy, smallest label among
/// candidates within [`TIE_TOL`] of it.
pub fn choose(ranked: &[MicroResult]) -> Option<&MicroResult> {
    let best = ranked.first()?.energy;
    ranked
        .iter()
        .take_while(|r| r.energy - best <= TIE_TOL)
        .min_by(|a, b| a.label.cmp(&b.label))
}

/// Appends the winning block with its micro-cycle angles and removes it from the pool.
pub fn select_and_grow(
    ranked: &[MicroResult],
    pool: &mut Vec<OperatorBlock>,
    program: &mut AnsatzProgram,
    params: &mut Vec<f64>,
) -> Result<MicroResult> {
    let chosen = choose(ranked).ok_or(Error::EmptyPool)?.clone();
    let block = pool.remove(chosen.index);
    program.push(block.to_ansatz_block());
    params.extend_from_slice(&chosen.theta);
    Ok(chosen)
}

/// Uniform draws in `[-range, range]`.
pub fn random_params(rng: &mut ChaCha8Rng, n: usize, range: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-range..=range)).collect()
}

/// Joint optimisation of every parameter starting at `x0`.
pub fn macro_cycle(
    sim: &Simulator,
    program: &AnsatzProgram,
    x0: &[f64],
    hf: &StateVector,
    grad_tol: f64,
) -> Result<(Vec<f64>, f64)> {
    let compiled = sim.compile(program);
    let opts = MinimizeOptions {
        max_iters: MACRO_MAX_ITERS,
        ..MinimizeOptions::default().with_grad_tol(grad_tol)
    };
    let r = optimize_compiled(sim, &compiled, x0, hf, &opts)?;
    check_optimizer(&r)?;
    Ok((r.x_opt, r.f_opt))
}

fn initial_point(
    config: &RunConfig,
    warm: &[f64],
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    match config.init_strategy {
        InitStrategy::Warm => warm.to_vec(),
        InitStrategy::HfZero => vec![0.0; warm.len()],
        InitStrategy::Random => random_params(rng, warm.len(), config.random_range),
    }
}

struct Recorder<'a> {
    wb: &'a Workbench,
    start: Instant,
    outcome: RunOutcome,
}

impl<'a> Recorder<'a> {
    fn new(wb: &'a Workbench) -> Self {
        Self {
            wb,
            start: Instant::now(),
            outcome: RunOutcome {
                trace: MacroTrace {
                    rows: Vec::new(),
                    status: RunStatus::Completed,
                },
                program: AnsatzProgram::new(),
                params: Vec::new(),
                depths: Vec::new(),
                row_params: Vec::new(),
                states: Vec::new(),
            },
        }
    }

    fn previous_energy(&self) -> f64 {
        self.outcome.trace.final_energy().unwrap_or(self.wb.e_hf)
    }

    fn push(
        &mut self,
        label: String,
        program: &AnsatzProgram,
        params: &[f64],
        energy: f64,
        selection_score: Option<f64>,
    ) -> Result<StateVector> {
        let state = self.wb.sim.prepare(program, params, &self.wb.hf)?;
        let prev = self.previous_energy();
        let rows = &mut self.outcome.trace.rows;
        rows.push(TraceRow {
            k: rows.len() + 1,
            label,
            param_count: program.param_count(),
            energy,
            delta_e: (energy - prev).abs(),
            selection_score,
            error_fci: Some(energy - self.wb.e_fci),
            overlaps: None,
            wall_time: self.start.elapsed().as_secs_f64(),
        });
        self.outcome.depths.push(program.blocks().len());
        self.outcome.row_params.push(params.to_vec());
        self.outcome.states.push(state.clone());
        Ok(state)
    }

    fn finish(mut self, status: RunStatus, program: AnsatzProgram, params: Vec<f64>) -> RunOutcome {
        self.outcome.trace.status = status;
        self.outcome.program = program;
        self.outcome.params = params;
        self.outcome
    }
}

/// Progressive block loop: micro-cycle ranking, growth by the most
/// stabilising block, joint re-optimisation, reference update.
pub fn run_compass_pro(wb: &Workbench, config: &RunConfig) -> Result<RunOutcome> {
    config.validate()?;
    let pool = wb.pool(&config.thresholds)?;
    run_compass_pro_with_pool(wb, config, pool)
}

pub fn run_compass_pro_with_pool(
    wb: &Workbench,
    config: &RunConfig,
    mut pool: Vec<OperatorBlock>,
) -> Result<RunOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut rec = Recorder::new(wb);
    let mut program = AnsatzProgram::new();
    let mut params = Vec::new();
    let mut reference = wb.hf.clone();
    let status = loop {
        if pool.is_empty() {
            break RunStatus::PoolExhausted;
        }
        if program.blocks().len() >= config.max_blocks {
            break RunStatus::MaxBlocks;
        }
        let prev = rec.previous_energy();
        let ranked = micro_cycle(&wb.sim, &pool, &reference, config.micro_grad_tol)?;
        let best = choose(&ranked).expect("nonempty pool").energy;
        if prev - best < config.thresholds.macro_tol {
            break RunStatus::PoolExhaustedGain;
        }
        let chosen = select_and_grow(&ranked, &mut pool, &mut program, &mut params)?;
        let x0 = initial_point(config, &params, &mut rng);
        let (opt, energy) = macro_cycle(&wb.sim, &program, &x0, &wb.hf, config.macro_grad_tol)?;
        params = opt;
        reference = rec.push(chosen.label, &program, &params, energy, Some(chosen.energy))?;
        if (energy - prev).abs() < config.thresholds.macro_tol {
            break RunStatus::Converged;
        }
    };
    Ok(rec.finish(status, program, params))
}

/// ADAPT operator pools.
pub fn adapt_pool(space: &OrbitalSpace, generalized: bool) -> Result<Vec<FermionGenerator>> {
    if !generalized {
        let mut pool = enumerate_singles(space)?;
        pool.extend(enumerate_doubles(space)?);
        return Ok(pool);
    }
    let n = space.n_qubits;
    let mut pool = Vec::new();
    for q in 0..n {
        for p in q + 1..n {
            if spin_of(p) == spin_of(q) {
                pool.push(make_generator(
                    GeneratorKind::Single,
                    &space.orbitals(&[p])?,
                    &space.orbitals(&[q])?,
                )?);
            }
        }
    }
    let mut pairs = Vec::new();
    for p in 0..n {
        for q in p + 1..n {
            pairs.push([p, q]);
        }
    }
    let alpha = |pq: &[usize; 2]| pq.iter().filter(|&&i| i % 2 == 0).count();
    for (x, cre) in pairs.iter().enumerate() {
        for ann in &pairs[..x] {
            if cre.iter().any(|c| ann.contains(c)) || alpha(cre) != alpha(ann) {
                continue;
            }
            pool.push(make_generator(
                GeneratorKind::Double,
                &space.orbitals(cre)?,
                &space.orbitals(ann)?,
            )?);
        }
    }
    Ok(pool)
}

/// Gradient-selected growth from the SD or generalised SD pool. Operators may
/// be selected more than once.
pub fn run_adapt(wb: &Workbench, config: &RunConfig, generalized: bool) -> Result<RunOutcome> {
    config.validate()?;
    let pool = adapt_pool(&wb.system.orbital_space(), generalized)?;
    let mut rec = Recorder::new(wb);
    let mut program = AnsatzProgram::new();
    let mut params: Vec<f64> = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut state = wb.hf.clone();
    let status = loop {
        if program.blocks().len() >= config.max_blocks {
            break RunStatus::MaxBlocks;
        }
        let grads = wb.sim.append_gradients(&state, &pool)?;
        let (best, g) = grads
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |acc, (i, g)| if g.abs() > acc.1 { (i, g.abs()) } else { acc });
        if g < config.gradient_tol {
            let error = rec.previous_energy() - wb.e_fci;
            break if error > CHEMICAL_ACCURACY {
                RunStatus::GradientTrough
            } else {
                RunStatus::GradientConverged
            };
        }
        program.push(AnsatzBlock::single(pool[best].clone()));
        params.push(0.0);
        let x0 = initial_point(config, &params, &mut rng);
        let (opt, energy) = macro_cycle(&wb.sim, &program, &x0, &wb.hf, config.macro_grad_tol)?;
        params = opt;
        state = rec.push(pool[best].label().to_string(), &program, &params, energy, Some(g))?;
    };
    Ok(rec.finish(status, program, params))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StaticKind {
    Uccsd,
    Uccsdt,
    CompassStatic,
    CompassStepwise,
}

/// Blocks of a fixed-order ansatz, first block acting first.
pub fn static_blocks(wb: &Workbench, kind: StaticKind, thresholds: &Thresholds) -> Result<Vec<AnsatzBlock>> {
    let space = wb.system.orbital_space();
    Ok(match kind {
        StaticKind::Uccsd | StaticKind::Uccsdt => {
            let mut gens = enumerate_singles(&space)?;
            gens.extend(enumerate_doubles(&space)?);
            if kind == StaticKind::Uccsdt {
                gens.extend(enumerate_triples(&space)?);
            }
            gens.into_iter().map(AnsatzBlock::single).collect()
        }
        StaticKind::CompassStatic | StaticKind::CompassStepwise => wb
            .pool(thresholds)?
            .iter()
            .map(OperatorBlock::to_ansatz_block)
            .collect(),
    })
}

/// Fixed-order ansätze. UCC variants and the static block product are
/// optimised once; the stepwise variant appends one block per cycle.
pub fn run_static(wb: &Workbench, config: &RunConfig, kind: StaticKind) -> Result<RunOutcome> {
    config.validate()?;
    let blocks = static_blocks(wb, kind, &config.thresholds)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut rec = Recorder::new(wb);
    if kind != StaticKind::CompassStepwise {
        let program = AnsatzProgram::from_blocks(blocks);
        let zeros = vec![0.0; program.param_count()];
        let x0 = match config.init_strategy {
            InitStrategy::Random => initial_point(config, &zeros, &mut rng),
            _ => zeros,
        };
        let (params, energy) = macro_cycle(&wb.sim, &program, &x0, &wb.hf, config.macro_grad_tol)?;
        rec.push(format!("{kind:?}"), &program, &params, energy, None)?;
        return Ok(rec.finish(RunStatus::Completed, program, params));
    }
    let mut program = AnsatzProgram::new();
    let mut params = Vec::new();
    let mut status = RunStatus::Completed;
    for block in blocks {
        if program.blocks().len() >= config.max_blocks {
            status = RunStatus::MaxBlocks;
            break;
        }
        let label = block.label.clone();
        params.extend(std::iter::repeat_n(0.0, block.len()));
        program.push(block);
        let x0 = initial_point(config, &params, &mut rng);
        let (opt, energy) = macro_cycle(&wb.sim, &program, &x0, &wb.hf, config.macro_grad_tol)?;
        params = opt;
        rec.push(label, &program, &params, energy, None)?;
    }
    Ok(rec.finish(status, program, params))
}

/// Dispatches on `config.method`.
pub fn run_method(wb: &Workbench, config: &RunConfig) -> Result<RunOutcome> {
    match config.method {
        Method::CompassPro => run_compass_pro(wb, config),
        Method::AdaptSd => run_adapt(wb, config, false),
        Method::AdaptGsd => run_adapt(wb, config, true),
        Method::Uccsd => run_static(wb, config, StaticKind::Uccsd),
        Method::Uccsdt => run_static(wb, config, StaticKind::Uccsdt),
        Method::CompassStatic => run_static(wb, config, StaticKind::CompassStatic),
        Method::CompassStepwise => run_static(wb, config, StaticKind::CompassStepwise),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthDistribution {
    pub depth: usize,
    pub param_count: usize,
    pub warm_energy: f64,
    /// One optimised energy per seed, in seed order.
    pub restart_energies: Vec<f64>,
}

impl DepthDistribution {
    pub fn min(&self) -> f64 {
        self.restart_energies.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn spread(&self) -> f64 {
        let max = self.restart_energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        max - self.min()
    }
}

/// Re-optimises every depth of a warm run from uniform random starts, one per seed.
pub fn landscape_study(
    wb: &Workbench,
    warm: &RunOutcome,
    seeds: &[u64],
    range: f64,
    grad_tol: f64,
) -> Result<Vec<DepthDistribution>> {
    let mut out = Vec::new();
    for (row, &depth) in warm.trace.rows.iter().zip(&warm.depths) {
        let program = AnsatzProgram::from_blocks(warm.program.blocks()[..depth].iter().cloned());
        let compiled = wb.sim.compile(&program);
        let opts = MinimizeOptions::default().with_grad_tol(grad_tol);
        let restart_energies = seeds
            .par_iter()
            .map(|&seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((depth as u64) << 32));
                let x0 = random_params(&mut rng, program.param_count(), range);
                optimize_compiled(&wb.sim, &compiled, &x0, &wb.hf, &opts).map(|r| r.f_opt)
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(DepthDistribution {
            depth,
            param_count: program.param_count(),
            warm_energy: row.energy,
            restart_energies,
        });
    }
    Ok(out)
}
