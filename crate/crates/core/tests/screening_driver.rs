mod common;

use std::collections::HashSet;

use common::*;
use qvqe_core::driver::{
    adapt_pool, macro_cycle, micro_cycle, select_and_grow, CHEMICAL_ACCURACY,
};
use qvqe_core::screening::{enumerate_doubles, screen_doubles, BlockKind};
use qvqe_core::state::AnsatzProgram;
use qvqe_core::{run_method, Method, RunConfig, RunStatus, Thresholds, Workbench};

fn bench(label: &str) -> Workbench {
    Workbench::new(system(label)).unwrap()
}

fn composites(pool: &[qvqe_core::OperatorBlock]) -> Vec<String> {
    pool.iter()
        .flat_map(|b| b.scatterers.iter().map(|s| s.composite.clone()))
        .collect()
}

#[test]
fn h2_single_double_recovers_the_correlation_energy() {
    let wb = bench("H2_d0.735");
    let records = screen_doubles(&wb.sim, &wb.hf, &wb.system, 1e-5).unwrap();
    assert_eq!(records.len(), 1);
    assert!((records[0].delta_e - (wb.e_hf - wb.e_fci)).abs() < 1e-6);
    let pool = wb.pool(&Thresholds::default()).unwrap();
    let kinds: Vec<_> = pool.iter().map(|b| b.kind).collect();
    assert_eq!(kinds, [BlockKind::DoubleBlock, BlockKind::SingleBlock, BlockKind::SingleBlock]);
    assert!(pool[0].scatterers.is_empty());
}

#[test]
fn infinite_double_threshold_screens_everything_out() {
    let wb = bench("H4_d1.50");
    let records = screen_doubles(&wb.sim, &wb.hf, &wb.system, f64::INFINITY).unwrap();
    assert!(records.is_empty());
    let th = Thresholds {
        threshold_d: 1e9,
        ..Thresholds::default()
    };
    let pool = wb.pool(&th).unwrap();
    assert!(pool.iter().all(|b| b.kind == BlockKind::SingleBlock));
}

#[test]
fn stretched_h4_keeps_scatterers_and_prunes_duplicates() {
    for label in ["H4_d3.00", "BeH2_d1.00"] {
        let wb = bench(label);
        let pool = wb.pool(&Thresholds::default()).unwrap();
        let c = composites(&pool);
        let unique: HashSet<_> = c.iter().collect();
        assert_eq!(unique.len(), c.len(), "{label}: duplicate composite");
        let records = screen_doubles(&wb.sim, &wb.hf, &wb.system, 1e-5).unwrap();
        let doubles = pool.iter().filter(|b| b.kind == BlockKind::DoubleBlock).count();
        assert_eq!(doubles, records.len(), "{label}: pruning dropped a cluster");
        for b in &pool {
            for s in &b.scatterers {
                assert!(s.e_pair <= wb.e_hf - b.stabilization + 1e-12, "{label}");
            }
        }
    }
    let pool = bench("H4_d3.00").pool(&Thresholds::default()).unwrap();
    assert_eq!(composites(&pool).len(), H4_300_SCATTERERS);
}

// regression values from the committed fixtures
const H4_300_SCATTERERS: usize = 4;
const H4_150_POOL: usize = 18;

#[test]
fn pool_is_deterministic_and_pinned() {
    let wb = bench("H4_d1.50");
    let a = qvqe_core::screening::pool_json(&wb.pool(&Thresholds::default()).unwrap());
    let b = qvqe_core::screening::pool_json(&wb.pool(&Thresholds::default()).unwrap());
    assert_eq!(a, b);
    assert_eq!(a.as_array().unwrap().len(), H4_150_POOL);
}

#[test]
fn h2_converges_after_one_block() {
    let wb = bench("H2_d0.735");
    let out = run_method(&wb, &RunConfig::new(Method::CompassPro)).unwrap();
    let first = &out.trace.rows[0];
    assert!((first.energy - wb.e_fci).abs() < 1e-8);
    assert_eq!(first.param_count, 1);
    let uccsd = run_method(&wb, &RunConfig::new(Method::Uccsd)).unwrap();
    assert!((uccsd.trace.final_energy().unwrap() - wb.e_fci).abs() < 1e-8);
}

#[test]
fn micro_cycle_picks_the_lowest_block_and_shrinks_the_pool() {
    let wb = bench("H4_d1.50");
    let mut pool = wb.pool(&Thresholds::default()).unwrap();
    let ranked = micro_cycle(&wb.sim, &pool, &wb.hf, 1e-8).unwrap();
    assert_eq!(ranked.len(), pool.len());
    assert!(ranked.windows(2).all(|w| w[0].energy <= w[1].energy));
    assert!(ranked[0].energy < wb.e_hf);
    let before = pool.len();
    let mut program = AnsatzProgram::new();
    let mut params = Vec::new();
    let chosen = select_and_grow(&ranked, &mut pool, &mut program, &mut params).unwrap();
    assert_eq!(pool.len(), before - 1);
    assert!(pool.iter().all(|b| b.label() != chosen.label));
    assert_eq!(params.len(), program.param_count());
    let (x, e) = macro_cycle(&wb.sim, &program, &params, &wb.hf, 1e-9).unwrap();
    assert_eq!(x.len(), params.len());
    assert!(e <= chosen.energy + 1e-10);
}

#[test]
fn warm_traces_are_monotone_variational_and_reproducible() {
    for label in ["H4_d2.00", "BH_d1.25"] {
        let wb = bench(label);
        let config = RunConfig::new(Method::CompassPro);
        let a = run_method(&wb, &config).unwrap();
        let b = run_method(&wb, &config).unwrap();
        let energies: Vec<f64> = a.trace.rows.iter().map(|r| r.energy).collect();
        assert!(energies.windows(2).all(|w| w[1] <= w[0] + 1e-10), "{label}");
        assert!(energies.iter().all(|&e| e >= wb.e_fci - 1e-10), "{label}");
        let labels = |o: &qvqe_core::RunOutcome| o.trace.rows.iter().map(|r| r.label.clone()).collect::<Vec<_>>();
        assert_eq!(labels(&a), labels(&b));
        assert_eq!(energies, b.trace.rows.iter().map(|r| r.energy).collect::<Vec<_>>());
        assert!(a.trace.final_energy().unwrap() - wb.e_fci < CHEMICAL_ACCURACY);
    }
}

#[test]
fn uccsd_on_four_hydrogens_has_twenty_six_parameters() {
    let wb = bench("H4_d0.90");
    let out = run_method(&wb, &RunConfig::new(Method::Uccsd)).unwrap();
    assert_eq!(out.params.len(), 26);
    assert_eq!(out.trace.status, RunStatus::Completed);
}

#[test]
fn first_adapt_pick_has_the_largest_gradient() {
    let wb = bench("H4_d1.50");
    let pool = adapt_pool(&wb.system.orbital_space(), false).unwrap();
    let g = wb.sim.append_gradients(&wb.hf, &pool).unwrap();
    let best = (0..pool.len())
        .max_by(|&a, &b| g[a].abs().total_cmp(&g[b].abs()).then(b.cmp(&a)))
        .unwrap();
    let out = run_method(&wb, &RunConfig::new(Method::AdaptSd)).unwrap();
    assert_eq!(out.trace.rows[0].label, pool[best].label());
    let doubles = enumerate_doubles(&wb.system.orbital_space()).unwrap();
    assert!(doubles.iter().any(|d| d.label() == pool[best].label()));
}
