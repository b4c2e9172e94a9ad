//! Experiment orchestration.
//!
//! A run writes into its output directory:
//! - `manifest.json`, first with status `incomplete`, rewritten at the end as
//!   `complete` or `failed`;
//! - `results.csv`, one row per `(trial, P)` (and per `α` for `bounds-only`),
//!   sorted by trial;
//! - `tradeoff.csv` (`alpha,dof,label`);
//! - `trace.jsonl` when tracing is enabled for a protocol scheme.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ChannelMode, ExperimentConfig, PowerGrid, Scheme};
use super::output::{csv_writer, emit_tradeoff_csv, fmt_num, sha256_file, write_atomic};
use crate::backhaul::TraceRecord;
use crate::detection::{substream_rate_lb, union_bound_pe};
use crate::error::{Error, Result};
use crate::lattice::{derive_params, exact_observations, ChannelMatrix, StreamSet, DEFAULT_SINGULARITY_THRESHOLD};
use crate::rng::{stream_rng, Purpose};
use crate::rx::{run_rx_protocol, DetectorMode};
use crate::tradeoff::{
    centralized_baseline, corner_points, fit_slope, illustrating_example, measured_tradeoff_point,
    optimal_tradeoff, rx_sum_upper_bound, simulate_centralized, simulate_tdma, to_dmatrix, tx_sum_upper_bound,
    RateReport, TradeoffPoint,
};
use crate::tx::{airtime_records, run_tx_backhaul, verify_diagonalization};

pub const RESULTS_FILE: &str = "results.csv";
pub const TRADEOFF_FILE: &str = "tradeoff.csv";
pub const TRACE_FILE: &str = "trace.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Incomplete,
    Complete,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRecord {
    pub trial: usize,
    /// Row-major `[re, im]` pairs.
    pub h: [[[f64; 2]; 3]; 3],
}

impl ChannelRecord {
    fn new(trial: usize, h: &ChannelMatrix) -> Self {
        ChannelRecord {
            trial,
            h: h.h.map(|row| row.map(|z| [z.re, z.im])),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub status: RunStatus,
    pub config: ExperimentConfig,
    pub version: String,
    pub channels: Vec<ChannelRecord>,
    pub wall_time_s: f64,
    /// File name to SHA-256 hex digest.
    pub outputs: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    fn write(&self, dir: &Path) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(self)?;
        bytes.push(b'\n');
        write_atomic(&dir.join(MANIFEST_FILE), &bytes)
    }
}

/// Column names of `results.csv` for a scheme.
pub fn result_header(scheme: Scheme) -> Vec<&'static str> {
    let mut h = vec!["trial", "power", "log2_power"];
    match scheme {
        Scheme::BoundsOnly => h.extend([
            "alpha_load",
            "rx_bound",
            "tx_bound",
            "rx_normalized",
            "tx_normalized",
            "optimal_dof",
        ]),
        Scheme::RxCoop | Scheme::TxCoop => h.extend([
            "q",
            "rate_1",
            "rate_2",
            "rate_3",
            "backhaul_rate",
            "alpha",
            "backhaul_symbols",
            "mismatches",
            "residual",
        ]),
        Scheme::Centralized | Scheme::Tdma | Scheme::IllustratingExample => {
            h.extend(["rate_1", "rate_2", "rate_3", "backhaul_rate", "alpha"])
        }
    }
    h
}

#[derive(Debug, Clone, PartialEq)]
struct Row {
    trial: usize,
    power: f64,
    values: Vec<f64>,
}

struct TrialOutput {
    trial: usize,
    channel: ChannelRecord,
    rows: Vec<Row>,
    report: Option<RateReport>,
    trace: Vec<TraceLine>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceLine {
    pub trial: usize,
    pub power_index: usize,
    #[serde(flatten)]
    pub record: TraceRecord,
}

fn complex(c: [f64; 2]) -> Complex64 {
    Complex64::new(c[0], c[1])
}

/// The channel for `trial`: drawn from the trial's own stream for random modes.
pub fn trial_channel(config: &ExperimentConfig, trial: usize) -> ChannelMatrix {
    let mut rng = stream_rng(config.seed, trial as u64, Purpose::Channel, 0);
    match &config.channel {
        ChannelMode::RandomGeneric => {
            if matches!(config.scheme, Scheme::RxCoop | Scheme::TxCoop) {
                ChannelMatrix::random_generic(&mut rng, config.n)
            } else {
                ChannelMatrix::random(&mut rng)
            }
        }
        ChannelMode::Fixed { values } => ChannelMatrix::new(ChannelMode::fixed_matrix(values)),
        ChannelMode::Illustrating { gamma, base } => {
            let base = match base {
                Some(b) => ChannelMode::fixed_matrix(b),
                None => ChannelMatrix::random(&mut rng).h,
            };
            ChannelMatrix::illustrating(base, complex(*gamma))
        }
    }
}

fn rate_rows(trial: usize, report: &RateReport) -> Vec<Row> {
    report
        .powers
        .iter()
        .zip(&report.rates)
        .zip(&report.backhaul_rate)
        .map(|((&p, r), &rb)| Row {
            trial,
            power: p,
            values: vec![p.log2(), r[0], r[1], r[2], rb, rb / p.log2()],
        })
        .collect()
}

type ProtocolTrial = (Vec<Row>, RateReport, Vec<TraceLine>);

fn run_protocol_trial(config: &ExperimentConfig, trial: usize, h: &ChannelMatrix) -> Result<ProtocolTrial> {
    let powers = config.powers();
    let mut rows = Vec::with_capacity(powers.len());
    let mut rates = Vec::with_capacity(powers.len());
    let mut backhaul = Vec::with_capacity(powers.len());
    let mut trace = Vec::new();
    let n9 = (config.n as f64).powi(9);
    for (pi, &p) in powers.iter().enumerate() {
        let mut params = derive_params(p, config.n, config.epsilon, config.c1)?;
        params.c2 = config.c2;
        let q = params.q_int();
        let per_user = n9 * substream_rate_lb(union_bound_pe(&params), q as f64)?;
        let mut sym_rng = stream_rng(config.seed, trial as u64, Purpose::Symbols, pi as u32);
        let streams = StreamSet::random(config.n, q, &mut sym_rng);
        let (ledger, mismatches, residual, mut records) = match config.scheme {
            Scheme::RxCoop => {
                let mode = if config.error_rate > 0.0 {
                    DetectorMode::GenieWithErrors {
                        error_rate: config.error_rate,
                    }
                } else {
                    DetectorMode::ExactGenie
                };
                let mut det_rng = stream_rng(config.seed, trial as u64, Purpose::Detection, pi as u32);
                let out = run_rx_protocol(&streams, mode, &mut det_rng)?;
                let mismatches: usize = out
                    .resolved
                    .iter()
                    .zip(&streams.tables)
                    .map(|(got, want)| got.values().iter().zip(want.values()).filter(|(a, b)| a != b).count())
                    .sum();
                let records: Vec<TraceRecord> = out.ledger.trace_records().collect();
                (out.ledger, mismatches, 0.0, records)
            }
            Scheme::TxCoop => {
                let out = run_tx_backhaul(&streams)?;
                let oracle = exact_observations(&streams)?;
                let mismatches: usize = out
                    .tables
                    .iter()
                    .zip(&oracle)
                    .map(|(got, want)| got.values().iter().zip(want.values()).filter(|(a, b)| a != b).count())
                    .sum();
                let diag = verify_diagonalization(&streams, h, p, None)?;
                let mut records: Vec<TraceRecord> = out.ledger.trace_records().collect();
                if config.trace {
                    records.extend(airtime_records(&diag.transmit, config.n + 1));
                }
                (out.ledger, mismatches, diag.max_relative_residual, records)
            }
            _ => unreachable!("protocol trial for a non-protocol scheme"),
        };
        let rb = ledger.average_rate(3);
        rows.push(Row {
            trial,
            power: p,
            values: vec![
                p.log2(),
                q as f64,
                per_user,
                per_user,
                per_user,
                rb,
                rb / p.log2(),
                ledger.total_symbols() as f64,
                mismatches as f64,
                residual,
            ],
        });
        rates.push([per_user; 3]);
        backhaul.push(rb);
        if config.trace {
            trace.extend(records.drain(..).map(|record| TraceLine {
                trial,
                power_index: pi,
                record,
            }));
        }
    }
    let report = RateReport {
        label: config.scheme.name().into(),
        powers,
        rates,
        backhaul_rate: backhaul,
    };
    Ok((rows, report, trace))
}

fn run_bounds_trial(config: &ExperimentConfig, trial: usize, h: &ChannelMatrix) -> Result<Vec<Row>> {
    let hm = to_dmatrix(h);
    let mut rows = Vec::new();
    for &p in &config.powers() {
        let lp = p.log2();
        for &alpha in &config.alphas {
            let rb = alpha * lp;
            let rx = rx_sum_upper_bound(&hm, p, rb)?;
            let tx = tx_sum_upper_bound(&hm, p, rb)?;
            let norm = 2.0 * 3.0 * lp;
            rows.push(Row {
                trial,
                power: p,
                values: vec![lp, alpha, rx, tx, rx / norm, tx / norm, optimal_tradeoff(alpha)?],
            });
        }
    }
    Ok(rows)
}

fn run_trial(config: &ExperimentConfig, trial: usize) -> Result<TrialOutput> {
    let h = trial_channel(config, trial);
    let powers = config.powers();
    let (rows, report, trace) = match config.scheme {
        Scheme::RxCoop | Scheme::TxCoop => {
            let (rows, report, trace) = run_protocol_trial(config, trial, &h)?;
            (rows, Some(report), trace)
        }
        Scheme::Centralized => {
            h.check_invertible(DEFAULT_SINGULARITY_THRESHOLD)?;
            let report = simulate_centralized(&h, &powers)?;
            (rate_rows(trial, &report), Some(report), Vec::new())
        }
        Scheme::Tdma => {
            let report = simulate_tdma(&h, &powers)?;
            (rate_rows(trial, &report), Some(report), Vec::new())
        }
        Scheme::IllustratingExample => {
            let gamma = config
                .channel
                .gamma()
                .or_else(|| h.illustrating_gamma())
                .ok_or_else(|| Error::InvalidConfig {
                    field: "channel".into(),
                    reason: "illustrating-example needs mode = \"illustrating\"".into(),
                })?;
            let mut seed_rng = stream_rng(config.seed, trial as u64, Purpose::Noise, 0);
            let seed = rand::Rng::random::<u64>(&mut seed_rng);
            let report = illustrating_example(gamma, h.h, &powers, config.samples, seed)?;
            (rate_rows(trial, &report), Some(report), Vec::new())
        }
        Scheme::BoundsOnly => (run_bounds_trial(config, trial, &h)?, None, Vec::new()),
    };
    Ok(TrialOutput {
        trial,
        channel: ChannelRecord::new(trial, &h),
        rows,
        report,
        trace,
    })
}

/// Averages per-trial rate reports entrywise.
fn mean_report(reports: &[&RateReport]) -> Option<RateReport> {
    let first = reports.first()?;
    let m = reports.len() as f64;
    let mut mean = RateReport {
        label: first.label.clone(),
        powers: first.powers.clone(),
        rates: vec![[0.0; 3]; first.powers.len()],
        backhaul_rate: vec![0.0; first.powers.len()],
    };
    for r in reports {
        for (i, rate) in r.rates.iter().enumerate() {
            for (acc, v) in mean.rates[i].iter_mut().zip(rate) {
                *acc += v / m;
            }
            mean.backhaul_rate[i] += r.backhaul_rate[i] / m;
        }
    }
    Some(mean)
}

fn tradeoff_points(config: &ExperimentConfig, trials: &[TrialOutput]) -> Result<Vec<TradeoffPoint>> {
    let mut points = Vec::new();
    if config.scheme == Scheme::BoundsOnly {
        // Slope of the trial-averaged normalized bound against log2 P, per α.
        let powers = config.powers();
        let xs: Vec<f64> = powers.iter().map(|p| p.log2()).collect();
        let na = config.alphas.len();
        for (ai, &alpha) in config.alphas.iter().enumerate() {
            for (col, label) in [(2usize, "rx-bound"), (3, "tx-bound")] {
                let ys: Vec<f64> = (0..powers.len())
                    .map(|pi| {
                        trials.iter().map(|t| t.rows[pi * na + ai].values[col]).sum::<f64>() / (6.0 * trials.len() as f64)
                    })
                    .collect();
                points.push(TradeoffPoint::new(alpha, fit_slope(&xs, &ys)?, label));
            }
            points.push(TradeoffPoint::new(alpha, optimal_tradeoff(alpha)?, "optimal"));
        }
        return Ok(points);
    }
    let reports: Vec<&RateReport> = trials.iter().filter_map(|t| t.report.as_ref()).collect();
    if let Some(mean) = mean_report(&reports) {
        points.push(measured_tradeoff_point(&mean)?);
    }
    points.extend(corner_points());
    points.push(centralized_baseline(3)?);
    Ok(points)
}

fn write_results(path: &Path, scheme: Scheme, trials: &[TrialOutput]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(result_header(scheme))?;
    for t in trials {
        for row in &t.rows {
            let mut rec = Vec::with_capacity(row.values.len() + 2);
            rec.push(row.trial.to_string());
            rec.push(fmt_num(row.power));
            rec.extend(row.values.iter().map(|v| fmt_num(*v)));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_trace_file(path: &Path, trials: &[TrialOutput]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for t in trials {
        for line in &t.trace {
            serde_json::to_writer(&mut out, line)?;
            std::io::Write::write_all(&mut out, b"\n")?;
        }
    }
    std::io::Write::flush(&mut out)?;
    Ok(())
}

/// Output directory: the explicit override, else the config's `output_dir`.
pub fn resolve_out_dir(config: &ExperimentConfig, out_dir: Option<&Path>) -> PathBuf {
    out_dir.map(Path::to_path_buf).unwrap_or_else(|| config.output_dir.clone())
}

/// Runs `config` over its power grid and trials on `jobs` worker threads
/// (`0` picks the rayon default) and writes every output into `out_dir`.
///
/// On failure the rows of the trials that did finish are still written, and
/// the manifest is marked `failed` with the error message.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path, jobs: usize) -> Result<RunManifest> {
    config.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let start = Instant::now();
    let mut manifest = RunManifest {
        status: RunStatus::Incomplete,
        config: config.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        channels: Vec::new(),
        wall_time_s: 0.0,
        outputs: BTreeMap::new(),
        error: None,
    };
    manifest.write(out_dir)?;
    for stale in [RESULTS_FILE, TRADEOFF_FILE, TRACE_FILE] {
        let p = out_dir.join(stale);
        if p.exists() {
            std::fs::remove_file(p)?;
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidConfig {
            field: "jobs".into(),
            reason: e.to_string(),
        })?;
    let results: Vec<Result<TrialOutput>> =
        pool.install(|| (0..config.trials).into_par_iter().map(|t| run_trial(config, t)).collect());

    let mut done = Vec::with_capacity(results.len());
    let mut first_err = None;
    for (trial, r) in results.into_iter().enumerate() {
        match r {
            Ok(t) => done.push(t),
            Err(e) if first_err.is_none() => first_err = Some(format!("trial {trial}: {e}")),
            Err(_) => {}
        }
    }
    done.sort_by_key(|t| t.trial);
    manifest.channels = done.iter().map(|t| t.channel.clone()).collect();

    let outcome = (|| -> Result<()> {
        write_results(&out_dir.join(RESULTS_FILE), config.scheme, &done)?;
        manifest.outputs.insert(RESULTS_FILE.into(), sha256_file(&out_dir.join(RESULTS_FILE))?);
        if let Some(msg) = &first_err {
            return Err(Error::Protocol {
                round: 0,
                node: 0,
                reason: msg.clone(),
            });
        }
        emit_tradeoff_csv(&tradeoff_points(config, &done)?, &out_dir.join(TRADEOFF_FILE))?;
        manifest.outputs.insert(TRADEOFF_FILE.into(), sha256_file(&out_dir.join(TRADEOFF_FILE))?);
        if config.trace && config.scheme.is_protocol() {
            write_trace_file(&out_dir.join(TRACE_FILE), &done)?;
            manifest.outputs.insert(TRACE_FILE.into(), sha256_file(&out_dir.join(TRACE_FILE))?);
        }
        Ok(())
    })();

    manifest.wall_time_s = start.elapsed().as_secs_f64();
    match outcome {
        Ok(()) => {
            manifest.status = RunStatus::Complete;
            manifest.write(out_dir)?;
            Ok(manifest)
        }
        Err(e) => {
            manifest.status = RunStatus::Failed;
            manifest.error = Some(first_err.unwrap_or_else(|| e.to_string()));
            manifest.write(out_dir)?;
            Err(e)
        }
    }
}

/// Trace lines of one protocol instance (trial 0, first grid power), without
/// writing any files.
pub fn trace_instance(config: &ExperimentConfig) -> Result<Vec<TraceLine>> {
    if !config.scheme.is_protocol() {
        return Err(Error::InvalidConfig {
            field: "scheme".into(),
            reason: format!("{} has no backhaul trace", config.scheme),
        });
    }
    config.validate()?;
    let mut single = config.clone();
    single.trace = true;
    single.p_grid = PowerGrid::List(vec![config.powers()[0]]);
    let h = trial_channel(&single, 0);
    let (_, _, trace) = run_protocol_trial(&single, 0, &h)?;
    Ok(trace)
}

/// Writes trace lines as JSON lines.
pub fn write_trace_lines<W: std::io::Write>(mut out: W, lines: &[TraceLine]) -> Result<()> {
    for l in lines {
        serde_json::to_writer(&mut out, l)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
