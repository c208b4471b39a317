use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use qvqe_core::driver::{landscape_study, CHEMICAL_ACCURACY};
use qvqe_core::exact::{first_excited_singlet, spectrum_json, track_overlaps};
use qvqe_core::hamiltonian::fixture_path;
use qvqe_core::screening::{pool_json, BlockKind};
use qvqe_core::{
    load_fixture, run_method, Eigenpair, InitStrategy, Method, MoleculeSystem, RunConfig,
    RunOutcome, RunStatus, Workbench,
};

use crate::args::{Command, Opts};
use crate::artifacts::{num, opt_num, run_id, sha256_hex, Artifact, FixtureRef, Table};
use crate::CliError;

/// Restart count used by `landscape` when no seeds are given.
pub const DEFAULT_RESTARTS: u64 = 50;
/// Repetition count used by `burrow` when no seeds are given.
pub const DEFAULT_BURROWS: u64 = 10;

pub struct Loaded {
    pub fixture: FixtureRef,
    pub wb: Workbench,
}

/// Artifacts plus the lines printed on stdout.
#[derive(Debug, Default)]
pub struct Report {
    pub artifacts: Vec<Artifact>,
    pub lines: Vec<String>,
}

pub fn resolve_fixture(dir: &Path, name: &str) -> Result<PathBuf, CliError> {
    let direct = PathBuf::from(name);
    if direct.is_file() {
        return Ok(direct);
    }
    let bundled = fixture_path(dir, name);
    if bundled.is_file() {
        return Ok(bundled);
    }
    Err(CliError::Usage(format!(
        "fixture {name:?} is neither a file nor a label under {}",
        dir.display()
    )))
}

pub fn load(opts: &Opts, name: &str) -> Result<Loaded, CliError> {
    let path = resolve_fixture(&opts.fixtures_dir, name)?;
    let fixture = load_fixture(&path)?;
    let n_frozen = opts
        .freeze
        .or_else(|| fixture.meta.as_ref().map(|m| m.frozen_core_default))
        .unwrap_or(0);
    let system = MoleculeSystem::from_fixture(&fixture, n_frozen)?;
    Ok(Loaded {
        fixture: FixtureRef {
            label: fixture.label.clone(),
            path,
            sha256: sha256_hex(fixture.raw.as_bytes()),
            n_frozen,
        },
        wb: Workbench::new(system)?,
    })
}

fn single_fixture(opts: &Opts) -> Result<&str, CliError> {
    match opts.fixture.as_slice() {
        [one] => Ok(one),
        [] => Err(CliError::Usage("--fixture is required".into())),
        _ => Err(CliError::Usage("this command takes exactly one --fixture".into())),
    }
}

fn single_method(opts: &Opts, default: Method) -> Result<Method, CliError> {
    let methods = opts.methods(&[default]);
    match methods.as_slice() {
        [m] => Ok(*m),
        _ => Err(CliError::Usage("this command takes exactly one --method".into())),
    }
}

pub fn execute(command: &Command) -> Result<Report, CliError> {
    let opts = command.opts();
    opts.thresholds().validate().map_err(|e| CliError::Usage(e.to_string()))?;
    if opts.roots == 0 {
        return Err(CliError::Usage("--roots must be at least 1".into()));
    }
    match command {
        Command::Screen(o) => screen(o),
        Command::Run(o) => run(o),
        Command::Sweep(o) => sweep(o),
        Command::Landscape(o) => landscape(o),
        Command::Burrow(o) => burrow(o),
        Command::Overlap(o) => overlap(o),
        Command::Fci(o) => fci(o),
    }
}

fn config_json(opts: &Opts, extra: Value) -> Value {
    let mut v = json!({
        "threshold_d": opts.threshold_d,
        "threshold_s": opts.threshold_s,
        "macro_tol": opts.macro_tol,
        "roots": opts.roots,
        "max_blocks": opts.max_blocks,
        "freeze": opts.freeze,
    });
    if let (Value::Object(a), Value::Object(b)) = (&mut v, extra) {
        a.extend(b);
    }
    v
}

fn screen(opts: &Opts) -> Result<Report, CliError> {
    let l = load(opts, single_fixture(opts)?)?;
    let pool = l.wb.pool(&opts.thresholds())?;
    let mut table = Table::new(&["index", "label", "kind", "delta_e", "scatterers", "params"]);
    for (i, b) in pool.iter().enumerate() {
        table.push(vec![
            i.to_string(),
            b.label().to_string(),
            match b.kind {
                BlockKind::DoubleBlock => "double",
                BlockKind::SingleBlock => "single",
            }
            .into(),
            num(b.stabilization),
            b.scatterers.len().to_string(),
            b.param_count().to_string(),
        ]);
    }
    let doubles = pool.iter().filter(|b| b.kind == BlockKind::DoubleBlock).count();
    let scatterers: usize = pool.iter().map(|b| b.scatterers.len()).sum();
    let id = run_id(&["screen", &l.fixture.label]);
    let lines = vec![format!(
        "{}: {} blocks ({doubles} double, {scatterers} scatterers)",
        l.fixture.label,
        pool.len()
    )];
    Ok(Report {
        artifacts: vec![Artifact::new(
            id,
            "screen",
            config_json(opts, json!({})),
            &[l.fixture],
            &[],
            json!({ "e_hf": l.wb.e_hf, "pool": pool_json(&pool) }),
            table,
        )],
        lines,
    })
}

/// Overlap columns for a finished run: fills `rows[k].overlaps` and returns
/// the spectrum with the first-excited-singlet index.
pub fn attach_overlaps(
    wb: &Workbench,
    outcome: &mut RunOutcome,
    roots: usize,
) -> Result<(Vec<Eigenpair>, Option<usize>), CliError> {
    let spectrum = wb.spectrum(roots)?;
    let table = track_overlaps(&outcome.states, &spectrum)?;
    for (row, o) in outcome.trace.rows.iter_mut().zip(table.rows) {
        row.overlaps = Some(o);
    }
    let es = first_excited_singlet(&spectrum, &outcome.states);
    Ok((spectrum, es))
}

fn overlap_at(row: &qvqe_core::TraceRow, n: Option<usize>) -> Option<f64> {
    row.overlaps.as_ref().zip(n).and_then(|(o, n)| o.get(n).copied())
}

fn trace_table(outcome: &RunOutcome, es: Option<usize>) -> Table {
    let mut t = Table::new(&["k", "params", "energy", "delta_e_fci", "overlap_gs", "overlap_es"]);
    for r in &outcome.trace.rows {
        t.push(vec![
            r.k.to_string(),
            r.param_count.to_string(),
            num(r.energy),
            opt_num(r.error_fci),
            opt_num(overlap_at(r, Some(0))),
            opt_num(overlap_at(r, es)),
        ]);
    }
    t
}

fn outcome_json(outcome: &RunOutcome, config: &RunConfig, wb: &Workbench) -> Value {
    json!({
        "method": config.method.name(),
        "run_config": config,
        "e_hf": wb.e_hf,
        "e_fci": wb.e_fci,
        "status": outcome.trace.status,
        "rows": outcome.trace.rows,
        "labels": outcome.program.labels(),
        "params": outcome.params,
    })
}

fn final_line(label: &str, method: Method, outcome: &RunOutcome, wb: &Workbench) -> String {
    let e = outcome.trace.final_energy().unwrap_or(wb.e_hf);
    format!(
        "{label} {}: E = {e:.10} Ha, E - E_FCI = {:.3e} Ha, params = {}, status = {:?}",
        method.name(),
        e - wb.e_fci,
        outcome.params.len(),
        outcome.trace.status
    )
}

fn run(opts: &Opts) -> Result<Report, CliError> {
    let l = load(opts, single_fixture(opts)?)?;
    let method = single_method(opts, Method::CompassPro)?;
    let seeds = opts.seeds_or(1);
    let config = opts.run_config(method, InitStrategy::Warm, seeds[0]);
    let mut outcome = run_method(&l.wb, &config)?;
    let (spectrum, es) = attach_overlaps(&l.wb, &mut outcome, opts.roots)?;
    let line = final_line(&l.fixture.label, method, &outcome, &l.wb);
    let mut body = outcome_json(&outcome, &config, &l.wb);
    body["spectrum"] = spectrum_json(&spectrum);
    body["excited_singlet_root"] = json!(es);
    let id = run_id(&["run", method.name(), &l.fixture.label]);
    Ok(Report {
        artifacts: vec![Artifact::new(
            id,
            "run",
            config_json(opts, json!({ "method": method.name() })),
            &[l.fixture],
            &seeds[..1],
            body,
            trace_table(&outcome, es),
        )],
        lines: vec![line],
    })
}

fn sweep(opts: &Opts) -> Result<Report, CliError> {
    if opts.fixture.is_empty() {
        return Err(CliError::Usage("sweep needs at least one --fixture".into()));
    }
    let methods = opts.methods(&[Method::CompassPro]);
    let seed = opts.seeds_or(1)[0];
    let mut table = Table::new(&[
        "fixture", "bond_length", "method", "params", "energy", "e_fci", "delta_e_fci", "status",
    ]);
    let mut runs = Vec::new();
    let mut fixtures = Vec::new();
    let mut lines = Vec::new();
    for name in &opts.fixture {
        let l = load(opts, name)?;
        let bond = load_fixture(&l.fixture.path)?
            .meta
            .map(|m| m.bond_length_angstrom)
            .unwrap_or(f64::NAN);
        for &method in &methods {
            let config = opts.run_config(method, InitStrategy::Warm, seed);
            let outcome = run_method(&l.wb, &config)?;
            let e = outcome.trace.final_energy().unwrap_or(l.wb.e_hf);
            table.push(vec![
                l.fixture.label.clone(),
                format!("{bond}"),
                method.name().into(),
                outcome.params.len().to_string(),
                num(e),
                num(l.wb.e_fci),
                num(e - l.wb.e_fci),
                format!("{:?}", outcome.trace.status),
            ]);
            lines.push(final_line(&l.fixture.label, method, &outcome, &l.wb));
            runs.push(json!({ "fixture": l.fixture.label, "outcome": outcome_json(&outcome, &config, &l.wb) }));
        }
        fixtures.push(l.fixture);
    }
    let names: Vec<&str> = methods.iter().map(|m| m.name()).collect();
    let id = run_id(&["sweep", &names.join("+"), &fixtures[0].label, &format!("n{}", fixtures.len())]);
    Ok(Report {
        artifacts: vec![Artifact::new(
            id,
            "sweep",
            config_json(opts, json!({ "methods": names })),
            &fixtures,
            &[seed],
            json!({ "runs": runs }),
            table,
        )],
        lines,
    })
}

fn landscape(opts: &Opts) -> Result<Report, CliError> {
    let l = load(opts, single_fixture(opts)?)?;
    let method = single_method(opts, Method::CompassPro)?;
    let seeds = opts.seeds_or(DEFAULT_RESTARTS);
    let config = RunConfig {
        init_strategy: InitStrategy::Warm,
        ..opts.run_config(method, InitStrategy::Warm, 0)
    };
    let warm = run_method(&l.wb, &config)?;
    let dists = landscape_study(&l.wb, &warm, &seeds, config.random_range, config.macro_grad_tol)?;
    let mut table = Table::new(&["depth", "params", "warm_energy", "seed", "energy"]);
    let mut lines = Vec::new();
    for d in &dists {
        for (seed, e) in seeds.iter().zip(&d.restart_energies) {
            table.push(vec![
                d.depth.to_string(),
                d.param_count.to_string(),
                num(d.warm_energy),
                seed.to_string(),
                num(*e),
            ]);
        }
        lines.push(format!(
            "depth {:>3} params {:>4}: warm - min = {:.3e}, spread = {:.3e}",
            d.depth,
            d.param_count,
            d.warm_energy - d.min(),
            d.spread()
        ));
    }
    let id = run_id(&["landscape", method.name(), &l.fixture.label]);
    Ok(Report {
        artifacts: vec![Artifact::new(
            id,
            "landscape",
            config_json(opts, json!({ "method": method.name(), "random_range": config.random_range })),
            &[l.fixture],
            &seeds,
            json!({ "e_fci": l.wb.e_fci, "warm": outcome_json(&warm, &config, &l.wb), "depths": dists }),
            table,
        )],
        lines,
    })
}

/// True when some macro-cycle raised the energy.
pub fn non_monotone(outcome: &RunOutcome, tol: f64) -> bool {
    outcome.trace.rows.windows(2).any(|w| w[1].energy > w[0].energy + tol)
}

fn burrow(opts: &Opts) -> Result<Report, CliError> {
    let l = load(opts, single_fixture(opts)?)?;
    let seeds = opts.seeds_or(DEFAULT_BURROWS);
    let mut table = Table::new(&["seed", "k", "params", "energy", "delta_e_fci"]);
    let mut runs = Vec::new();
    let (mut accurate, mut bumpy) = (0, 0);
    for &seed in &seeds {
        let config = RunConfig {
            init_strategy: InitStrategy::Random,
            ..opts.run_config(Method::CompassPro, InitStrategy::Random, seed)
        };
        let outcome = run_method(&l.wb, &config)?;
        for r in &outcome.trace.rows {
            table.push(vec![
                seed.to_string(),
                r.k.to_string(),
                r.param_count.to_string(),
                num(r.energy),
                opt_num(r.error_fci),
            ]);
        }
        let err = outcome.trace.final_energy().unwrap_or(l.wb.e_hf) - l.wb.e_fci;
        accurate += usize::from(err < CHEMICAL_ACCURACY);
        bumpy += usize::from(non_monotone(&outcome, 1e-10));
        runs.push(json!({ "seed": seed, "outcome": outcome_json(&outcome, &config, &l.wb) }));
    }
    let lines = vec![format!(
        "{}: {accurate}/{} runs within chemical accuracy, {bumpy} non-monotone traces",
        l.fixture.label,
        seeds.len()
    )];
    let id = run_id(&["burrow", &l.fixture.label]);
    Ok(Report {
        artifacts: vec![Artifact::new(
            id,
            "burrow",
            config_json(opts, json!({ "method": "compass_pro", "init": "random" })),
            &[l.fixture],
            &seeds,
            json!({ "e_fci": l.wb.e_fci, "accurate": accurate, "non_monotone": bumpy, "runs": runs }),
            table,
        )],
        lines,
    })
}

fn overlap(opts: &Opts) -> Result<Report, CliError> {
    if opts.roots < 2 {
        return Err(CliError::Usage("overlap needs --roots >= 2".into()));
    }
    let l = load(opts, single_fixture(opts)?)?;
    let methods = opts.methods(&[Method::CompassPro, Method::AdaptSd, Method::AdaptGsd]);
    let seed = opts.seeds_or(1)[0];
    let spectrum = l.wb.spectrum(opts.roots)?;
    let mut table = Table::new(&[
        "method", "k", "params", "energy", "delta_e_fci", "overlap_gs", "overlap_es", "trough",
    ]);
    let mut runs = Vec::new();
    let mut lines = Vec::new();
    for &method in &methods {
        let config = opts.run_config(method, InitStrategy::Warm, seed);
        let mut outcome = run_method(&l.wb, &config)?;
        let (_, es) = attach_overlaps(&l.wb, &mut outcome, opts.roots)?;
        let trough = outcome.trace.status == RunStatus::GradientTrough;
        let last = outcome.trace.rows.len();
        for r in &outcome.trace.rows {
            table.push(vec![
                method.name().into(),
                r.k.to_string(),
                r.param_count.to_string(),
                num(r.energy),
                opt_num(r.error_fci),
                opt_num(overlap_at(r, Some(0))),
                opt_num(overlap_at(r, es)),
                u8::from(trough && r.k == last).to_string(),
            ]);
        }
        if let Some(r) = outcome.trace.rows.last() {
            lines.push(format!(
                "{} {}: GS overlap {:.4}, ES overlap {:.4} (root {}), status {:?}",
                l.fixture.label,
                method.name(),
                overlap_at(r, Some(0)).unwrap_or(f64::NAN),
                overlap_at(r, es).unwrap_or(f64::NAN),
                es.map_or("-".into(), |e| e.to_string()),
                outcome.trace.status
            ));
        }
        let mut body = outcome_json(&outcome, &config, &l.wb);
        body["excited_singlet_root"] = json!(es);
        runs.push(body);
    }
    let names: Vec<&str> = methods.iter().map(|m| m.name()).collect();
    let id = run_id(&["overlap", &names.join("+"), &l.fixture.label]);
    Ok(Report {
        artifacts: vec![Artifact::new(
            id,
            "overlap",
            config_json(opts, json!({ "methods": names })),
            &[l.fixture],
            &[seed],
            json!({ "spectrum": spectrum_json(&spectrum), "runs": runs }),
            table,
        )],
        lines,
    })
}

fn fci(opts: &Opts) -> Result<Report, CliError> {
    let l = load(opts, single_fixture(opts)?)?;
    let spectrum = l.wb.spectrum(opts.roots)?;
    let mut table = Table::new(&["root", "energy", "s_squared"]);
    let mut lines = Vec::new();
    for (n, p) in spectrum.iter().enumerate() {
        table.push(vec![n.to_string(), num(p.energy), num(p.s_squared)]);
        lines.push(format!("root {n}: E = {:.10} Ha, <S^2> = {:.6}", p.energy, p.s_squared));
    }
    let id = run_id(&["fci", &l.fixture.label]);
    Ok(Report {
        artifacts: vec![Artifact::new(
            id,
            "fci",
            config_json(opts, json!({})),
            &[l.fixture],
            &[],
            json!({ "e_hf": l.wb.e_hf, "spectrum": spectrum_json(&spectrum) }),
            table,
        )],
        lines,
    })
}
