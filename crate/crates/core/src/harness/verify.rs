//! Quick self-checks behind the `verify` subcommand.

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::run::trial_channel;
use crate::detection::ml_symbol_error_rate;
use crate::error::Result;
use crate::lattice::{exact_observations, StreamSet};
use crate::rng::{stream_rng, Purpose};
use crate::rx::{run_rx_protocol, DetectorMode};
use crate::tradeoff::{
    corner_points, fit_slope, lemma1_check, rx_sum_upper_bound, timeshare, to_dmatrix,
    tx_sum_upper_bound,
};
use crate::tx::{run_tx_backhaul, verify_diagonalization};

/// Symbols for the protocol checks are drawn from `Z_5`.
const CHECK_Q: i64 = 2;
const MAX_INSTANCES: usize = 10;
const RESIDUAL_TOL: f64 = 1e-9;
const ML_TRIALS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        CheckResult {
            name: name.into(),
            passed,
            detail,
        }
    }
}

/// Protocol oracles at the config's `N` on up to ten channels and symbol draws,
/// plus the closed-form tradeoff, bound and Lemma 1 checks, and noiseless ML
/// detection when the config carries a reduced instance.
pub fn verify_config(config: &ExperimentConfig) -> Result<Vec<CheckResult>> {
    let n = config.n;
    let instances = config.trials.clamp(1, MAX_INSTANCES);
    let mut protocol_cfg = config.clone();
    protocol_cfg.scheme = super::config::Scheme::TxCoop;
    let mut checks = Vec::new();

    let (mut rx_ok, mut tx_ok, mut count_ok) = (0, 0, 0);
    let mut worst_residual: f64 = 0.0;
    let rx_count = 3 * n.pow(9);
    let tx_cap = 3 * (n + 1).pow(9);
    for t in 0..instances {
        let h = trial_channel(&protocol_cfg, t);
        let mut rng = stream_rng(config.seed, t as u64, Purpose::Symbols, 0xffff);
        let streams = StreamSet::random(n, CHECK_Q, &mut rng);
        let rx = run_rx_protocol(&streams, DetectorMode::ExactGenie, &mut rng)?;
        if rx.resolved == streams.tables && rx.ledger.total_symbols() == rx_count {
            rx_ok += 1;
        }
        let tx = run_tx_backhaul(&streams)?;
        if tx.tables == exact_observations(&streams)? {
            tx_ok += 1;
        }
        if tx.ledger.total_symbols() <= tx_cap {
            count_ok += 1;
        }
        let diag = verify_diagonalization(&streams, &h, 1e6, None)?;
        worst_residual = worst_residual.max(diag.max_relative_residual);
    }
    checks.push(CheckResult::new(
        "rx-oracle",
        rx_ok == instances,
        format!("{rx_ok}/{instances} instances recovered exactly with {rx_count} backhaul symbols"),
    ));
    checks.push(CheckResult::new(
        "tx-oracle",
        tx_ok == instances && count_ok == instances,
        format!("{tx_ok}/{instances} match the observation oracle, {count_ok}/{instances} within {tx_cap} symbols"),
    ));
    checks.push(CheckResult::new(
        "tx-diagonalization",
        worst_residual <= RESIDUAL_TOL,
        format!("max relative residual {worst_residual:.3e}"),
    ));

    let [p1, p2] = corner_points();
    let mut line_err: f64 = 0.0;
    for i in 0..=20 {
        let pt = timeshare(&p1, &p2, i as f64 / 20.0)?;
        line_err = line_err.max((pt.dof - (1.0 + pt.alpha) / 2.0).abs());
    }
    checks.push(CheckResult::new(
        "timeshare-line",
        line_err == 0.0,
        format!("max deviation {line_err:e} on 21 points"),
    ));

    let h = to_dmatrix(&trial_channel(&protocol_cfg, 0));
    let xs: Vec<f64> = (6..=12).map(|e| 10f64.powi(e).log2()).collect();
    let mut worst: f64 = 0.0;
    for alpha in [0.0, 0.5, 1.0] {
        let target = (1.0 + alpha) / 2.0;
        for bound in [rx_sum_upper_bound, tx_sum_upper_bound] {
            let ys = xs
                .iter()
                .map(|&lp| bound(&h, lp.exp2(), alpha * lp).map(|b| b / 6.0))
                .collect::<Result<Vec<_>>>()?;
            worst = worst.max((fit_slope(&xs, &ys)? - target).abs() / target);
        }
    }
    checks.push(CheckResult::new(
        "bound-slopes",
        worst <= 0.01,
        format!("max relative slope error {worst:.3e}"),
    ));

    let mut lemma_ok = true;
    let mut max_ratio: f64 = 0.0;
    for k in 1..=3 {
        let powers: Vec<f64> = (1..=k).map(|i| i as f64).collect();
        let rep = lemma1_check(k, 2, &powers, 50, config.seed)?;
        lemma_ok &= rep.all_pass();
        max_ratio = max_ratio.max(rep.max_ratio);
    }
    checks.push(CheckResult::new(
        "lemma1",
        lemma_ok,
        format!("max lhs/rhs {max_ratio:.6}"),
    ));

    if let Some(spec) = &config.reduced_spec {
        let h = trial_channel(&protocol_cfg, 0);
        let point = ml_symbol_error_rate(spec, &h, 1e6, ML_TRIALS, config.seed, true)?;
        checks.push(CheckResult::new(
            "ml-noiseless",
            point.errors == 0,
            format!("{} errors in {ML_TRIALS} noiseless trials", point.errors),
        ));
    }
    Ok(checks)
}
