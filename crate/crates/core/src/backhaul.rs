//! Backhaul messages, the per-run ledger and JSON-lines trace records.

use std::io::Write;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Which part of a run a trace record belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Backhaul,
    Airtime,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackhaulMessage {
    pub source: u8,
    pub destination: u8,
    pub round: usize,
    pub payload: Vec<i64>,
    /// Symbols lie in `[-alphabet_halfwidth, alphabet_halfwidth]`.
    pub alphabet_halfwidth: i64,
}

impl BackhaulMessage {
    pub fn new(source: u8, destination: u8, round: usize, payload: Vec<i64>, alphabet_halfwidth: i64) -> Result<Self> {
        let msg = BackhaulMessage {
            source,
            destination,
            round,
            payload,
            alphabet_halfwidth,
        };
        msg.validate()?;
        Ok(msg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.source) || !(1..=3).contains(&self.destination) || self.source == self.destination {
            return Err(Error::protocol(
                self.round,
                self.source,
                format!("invalid link {} -> {}", self.source, self.destination),
            ));
        }
        if let Some(v) = self.payload.iter().find(|v| v.abs() > self.alphabet_halfwidth) {
            return Err(Error::protocol(
                self.round,
                self.source,
                format!("payload symbol {v} exceeds alphabet ±{}", self.alphabet_halfwidth),
            ));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.payload.len()
    }

    pub fn is_empty(&self) -> bool {
        self.payload.is_empty()
    }

    /// `length · log2(2·halfwidth + 1)`.
    pub fn bits(&self) -> f64 {
        self.payload.len() as f64 * ((2 * self.alphabet_halfwidth + 1) as f64).log2()
    }

    /// Hex SHA-256 of the payload as little-endian `i64`s.
    pub fn payload_digest(&self) -> String {
        let mut hasher = Sha256::new();
        for v in &self.payload {
            hasher.update(v.to_le_bytes());
        }
        hex::encode(hasher.finalize())
    }

    pub fn trace_record(&self) -> TraceRecord {
        TraceRecord {
            stage: Stage::Backhaul,
            source: self.source,
            destination: self.destination,
            round: self.round,
            length: self.payload.len(),
            alphabet: self.alphabet_halfwidth,
            payload_digest: self.payload_digest(),
        }
    }
}

/// Ordered record of every message sent in one protocol run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackhaulLedger {
    pub messages: Vec<BackhaulMessage>,
}

impl BackhaulLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, msg: BackhaulMessage) {
        self.messages.push(msg);
    }

    pub fn total_symbols(&self) -> usize {
        self.messages.iter().map(|m| m.len()).sum()
    }

    pub fn total_bits(&self) -> f64 {
        self.messages.iter().map(|m| m.bits()).sum()
    }

    /// `R_b^{[source, destination]}` in bits per channel use.
    pub fn link_bits(&self, source: u8, destination: u8) -> f64 {
        self.messages
            .iter()
            .filter(|m| m.source == source && m.destination == destination)
            .map(|m| m.bits())
            .sum()
    }

    /// `R̄_b = (1/K)·Σ_i Σ_{î≠i} R_b^{[i,î]}` with each message costed by its own alphabet.
    pub fn average_rate(&self, k: usize) -> f64 {
        self.total_bits() / k as f64
    }

    /// `R̄_b` with every symbol costed at the widest alphabet `3⌊Q⌋`,
    /// i.e. `(#symbols / K)·log2(6⌊Q⌋ + 1)`.
    pub fn uniform_rate_bound(&self, k: usize, q: i64) -> f64 {
        self.total_symbols() as f64 * ((6 * q + 1) as f64).log2() / k as f64
    }

    pub fn trace_records(&self) -> impl Iterator<Item = TraceRecord> + '_ {
        self.messages.iter().map(BackhaulMessage::trace_record)
    }
}

/// One JSON-lines trace entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub stage: Stage,
    pub source: u8,
    pub destination: u8,
    pub round: usize,
    pub length: usize,
    pub alphabet: i64,
    pub payload_digest: String,
}

pub fn write_trace<W: Write>(mut out: W, records: impl IntoIterator<Item = TraceRecord>) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, &r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
