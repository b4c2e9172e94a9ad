//! Cross-module checks: protocol pipelines against their oracles, harness runs,
//! and the reduced ML detector.

use coopalign::backhaul::BackhaulLedger;
use coopalign::detection::{ml_symbol_error_rate, ReducedSpec};
use coopalign::harness::{run_experiment, ExperimentConfig, PowerGrid, Scheme, RESULTS_FILE};
use coopalign::lattice::{exact_observations, ChannelMatrix, Coord, StreamSet};
use coopalign::rng::{stream_rng, Purpose};
use coopalign::rx::{run_rx_protocol, run_rx_slots, DetectorMode};
use coopalign::tradeoff::{measured_tradeoff_point, simulate_centralized};
use coopalign::tx::{run_tx_backhaul, verify_diagonalization};

#[test]
fn rx_n2_counts_1536_symbols() {
    let mut rng = stream_rng(3, 0, Purpose::Symbols, 0);
    let s = StreamSet::random(2, 2, &mut rng);
    let out = run_rx_protocol(&s, DetectorMode::ExactGenie, &mut rng).unwrap();
    assert_eq!(out.ledger.total_symbols(), 1536);
    assert_eq!(out.resolved, s.tables);
}

#[test]
fn uniform_cost_of_one_symbol_per_slot_at_q5() {
    // N = 1: three symbols per slot, each billed at log2(6·5 + 1) bits, averaged over 3 links.
    let mut rng = stream_rng(4, 0, Purpose::Symbols, 0);
    let s = StreamSet::random(1, 5, &mut rng);
    let out = run_rx_protocol(&s, DetectorMode::ExactGenie, &mut rng).unwrap();
    let rb = out.ledger.uniform_rate_bound(3, 5);
    assert!((rb - 31f64.log2()).abs() < 1e-12, "{rb}");
    assert!((rb - 4.954).abs() < 1e-3);
    // Per-message alphabets are never larger than the uniform bound.
    assert!(out.ledger.average_rate(3) <= rb + 1e-12);
}

#[test]
fn tx_n2_matches_oracle_and_cancels_interference() {
    let mut rng = stream_rng(8, 0, Purpose::Channel, 0);
    let h = ChannelMatrix::random_generic(&mut rng, 2);
    let s = StreamSet::random(2, 2, &mut stream_rng(8, 0, Purpose::Symbols, 0));
    let out = run_tx_backhaul(&s).unwrap();
    assert_eq!(out.tables, exact_observations(&s).unwrap());
    assert!(out.ledger.total_symbols() <= 3 * 3usize.pow(9));
    let diag = verify_diagonalization(&s, &h, 1e8, None).unwrap();
    assert!(diag.max_relative_residual <= 1e-9, "{}", diag.max_relative_residual);
}

#[test]
fn injected_error_stays_in_its_slot() {
    let slots: Vec<StreamSet> = (0..6)
        .map(|t| StreamSet::random(1, 3, &mut stream_rng(21, t, Purpose::Symbols, 0)))
        .collect();
    let clean = run_rx_slots(&slots, &[0.0; 6], 99).unwrap();
    let mut rates = [0.0; 6];
    rates[2] = 1.0;
    let dirty = run_rx_slots(&slots, &rates, 99).unwrap();
    for t in 0..6 {
        if t == 2 {
            assert!(dirty[t].contaminated());
        } else {
            assert_eq!(dirty[t], clean[t], "slot {t}");
            assert_eq!(clean[t].resolved, slots[t].tables);
        }
    }
}

#[test]
fn harness_rx_run_has_rows_per_trial_and_power() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(Scheme::RxCoop);
    cfg.trials = 10;
    cfg.p_grid = PowerGrid::Geometric {
        from: 1e280,
        to: 1e305,
        points: 5,
    };
    run_experiment(&cfg, dir.path(), 0).unwrap();
    let text = std::fs::read_to_string(dir.path().join(RESULTS_FILE)).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 10 * 5);
    let trials: Vec<usize> = rows.iter().map(|r| r.split(',').next().unwrap().parse().unwrap()).collect();
    assert!(trials.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn centralized_point_is_four_thirds_one() {
    let h = ChannelMatrix::random(&mut stream_rng(2, 0, Purpose::Channel, 0));
    let grid: Vec<f64> = (0..8).map(|i| 10f64.powi(6 + 2 * i)).collect();
    let pt = measured_tradeoff_point(&simulate_centralized(&h, &grid).unwrap()).unwrap();
    assert!((pt.alpha - 4.0 / 3.0).abs() <= 0.05 * 4.0 / 3.0, "{pt:?}");
    assert!((pt.dof - 1.0).abs() <= 0.05, "{pt:?}");
}

#[test]
fn empty_ledger_has_zero_rate() {
    let l = BackhaulLedger::new();
    assert_eq!(l.total_symbols(), 0);
    assert_eq!(l.average_rate(3), 0.0);
}

#[test]
fn ml_single_coordinate_high_and_low_power() {
    let spec = ReducedSpec::new(vec![Coord::new(1, 1).unwrap()], 1, 1).unwrap();
    let h = ChannelMatrix::random_generic(&mut stream_rng(6, 0, Purpose::Channel, 0), 1);
    let high = ml_symbol_error_rate(&spec, &h, 1e6, 10_000, 1, false).unwrap();
    assert_eq!(high.errors, 0);
    let sweep: Vec<f64> = [1.0, 10.0, 100.0, 1000.0]
        .iter()
        .map(|&p| ml_symbol_error_rate(&spec, &h, p, 10_000, 1, false).unwrap().ser())
        .collect();
    assert!(sweep[0] > 0.0);
    assert!(sweep.windows(2).all(|w| w[1] <= w[0]), "{sweep:?}");
}
