//! Receiver-side cooperation alignment.
//!
//! Round `r ∈ {0..N-1}` resolves the slab `s31 = N - r` of every user's
//! substreams through the chain 3 → 1 → 2 → 3. Each payload entry is a
//! three-term sum whose two interference terms equal a quantity the recipient
//! already holds, so one subtraction isolates a fresh desired symbol.
//!
//! With `u = s + e31` and receiver 3's two-term sums `r3_u - c_{u-e33}`:
//!
//! * `3 → 1`: `a_s + b_{u-e32} + c_{u-e32+e12-e13}`, cancelled by receiver 1's
//!   `r1_v - a_{v-e11}` at `v = u - e32 + e12`.
//! * `1 → 2`: `b_s + c_{s+e12-e13} + a_{s+e12-e13+e23-e21}`, which minus
//!   `r2_w` at `w = s + e12 - e13 + e23` leaves `b_s - b_{w-e22}`; the second
//!   term sits one step higher in `s23`, so `b` unravels from `s23 = N` down.
//! * `2 → 3`: `c_s + a_{s+e23-e21} + b_{s+e23-e21+e31-e32}`, cancelled by
//!   receiver 3's two-term sum at `s + e23 - e21 + e31`.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use crate::backhaul::{BackhaulLedger, BackhaulMessage};
use crate::detection::genie_detect;
use crate::error::{Error, Result};
use crate::lattice::{Coord, IndexCube, IndexVector, ObservationTable, PartialTable, StreamSet, SubstreamTable};
use crate::rng::{stream_rng, Purpose};

use Coord as C;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DetectorMode {
    ExactGenie,
    /// Genie detection with one ±1 error per receiver with probability `error_rate`.
    /// Out-of-range intermediate values are clamped and recorded instead of aborting.
    GenieWithErrors { error_rate: f64 },
}

#[derive(Debug, Clone)]
pub struct ReceiverState {
    pub id: u8,
    pub observations: ObservationTable,
    pub resolved_own: PartialTable,
    /// Two-term interference sums `r_{i,u} - own_{u - e_ii'}`, keyed by `u`.
    pub known_interference_sums: BTreeMap<IndexVector, i64>,
    /// Indices whose value had to be clamped into its alphabet.
    pub clamped: BTreeSet<IndexVector>,
    q: i64,
    lenient: bool,
}

impl ReceiverState {
    pub fn new(observations: ObservationTable, q: i64, lenient: bool) -> Self {
        let n = observations.n();
        ReceiverState {
            id: observations.receiver(),
            observations,
            resolved_own: PartialTable::new(IndexCube::new(n)),
            known_interference_sums: BTreeMap::new(),
            clamped: BTreeSet::new(),
            q,
            lenient,
        }
    }

    pub fn n(&self) -> usize {
        self.observations.n()
    }

    pub fn q(&self) -> i64 {
        self.q
    }

    fn own(&self, s: &IndexVector, round: usize) -> Result<i64> {
        self.resolved_own
            .get(s)
            .ok_or_else(|| Error::protocol(round, self.id, format!("own symbol at {s} is not resolved yet")))
    }

    fn bounded(&mut self, value: i64, bound: i64, s: IndexVector, round: usize, what: &str) -> Result<i64> {
        if value.abs() <= bound {
            return Ok(value);
        }
        if self.lenient {
            self.clamped.insert(s);
            return Ok(value.clamp(-bound, bound));
        }
        Err(Error::protocol(
            round,
            self.id,
            format!("{what} {value} at {s} outside ±{bound}"),
        ))
    }

    /// `r_{i,u} - own_{u - drop}`, remembered as a known interference sum.
    fn interference_sum(&mut self, u: IndexVector, drop: Coord, round: usize) -> Result<i64> {
        let x = self.observations.get(&u) - self.own(&u.shift(drop, -1), round)?;
        let x = self.bounded(x, 2 * self.q, u, round, "interference sum")?;
        self.known_interference_sums.insert(u, x);
        Ok(x)
    }

    fn resolve(&mut self, s: IndexVector, value: i64, round: usize) -> Result<()> {
        let v = self.bounded(value, self.q, s, round, "resolved symbol")?;
        self.resolved_own.set(&s, v);
        Ok(())
    }

    fn expect(&self, round: usize, who: u8) -> Result<()> {
        if self.id != who {
            return Err(Error::protocol(round, self.id, format!("step belongs to receiver {who}")));
        }
        if round >= self.n() {
            return Err(Error::protocol(round, self.id, format!("round must be below N = {}", self.n())));
        }
        Ok(())
    }
}

/// The slab `{s ∈ S_N : s31 = N - round}` in canonical payload order.
pub fn round_slab(n: usize, round: usize) -> Vec<IndexVector> {
    IndexCube::new(n).slab(C::C31, (n - round) as i32).collect()
}

fn check_incoming(msg: &BackhaulMessage, from: u8, to: u8, round: usize, len: usize) -> Result<()> {
    if msg.source != from || msg.destination != to || msg.round != round {
        return Err(Error::protocol(
            round,
            to,
            format!(
                "expected message {from}->{to} of round {round}, got {}->{} of round {}",
                msg.source, msg.destination, msg.round
            ),
        ));
    }
    if msg.len() != len {
        return Err(Error::protocol(round, to, format!("payload length {} != {len}", msg.len())));
    }
    Ok(())
}

fn emit(state: &mut ReceiverState, to: u8, round: usize, payload: Vec<(IndexVector, i64)>, halfwidth: i64) -> Result<BackhaulMessage> {
    let mut values = Vec::with_capacity(payload.len());
    for (s, m) in payload {
        values.push(state.bounded(m, halfwidth, s, round, "payload entry")?);
    }
    BackhaulMessage::new(state.id, to, round, values, halfwidth)
}

/// `M^{[r]}_{3→1}`. At round 0 the `b` and `c` terms vanish and the payload is raw `a` symbols.
pub fn rx3_emit(state3: &mut ReceiverState, round: usize) -> Result<BackhaulMessage> {
    state3.expect(round, 3)?;
    let q = state3.q;
    let mut payload = Vec::new();
    for s in round_slab(state3.n(), round) {
        let u = s.shift(C::C31, 1);
        let i3 = state3.interference_sum(u, C::C33, round)?;
        let c = state3.own(&u.shifted(&[(C::C32, -1), (C::C12, 1), (C::C13, -1)]), round)?;
        payload.push((s, i3 + c));
    }
    let halfwidth = if round == 0 { q } else { 3 * q };
    emit(state3, 1, round, payload, halfwidth)
}

/// Resolves `a` on the round's slab from `M^{[r]}_{3→1}` and emits `M^{[r]}_{1→2}`.
pub fn rx1_absorb_and_emit(state1: &mut ReceiverState, msg: &BackhaulMessage, round: usize) -> Result<BackhaulMessage> {
    state1.expect(round, 1)?;
    let slab = round_slab(state1.n(), round);
    check_incoming(msg, 3, 1, round, slab.len())?;
    for (&s, &m) in slab.iter().zip(&msg.payload) {
        let v = s.shifted(&[(C::C31, 1), (C::C32, -1), (C::C12, 1)]);
        let i1 = state1.interference_sum(v, C::C11, round)?;
        state1.resolve(s, m - i1, round)?;
    }
    let mut payload = Vec::with_capacity(slab.len());
    for &s in &slab {
        let u = s.shift(C::C12, 1);
        let x = state1.interference_sum(u, C::C11, round)?;
        let a = state1.own(&s.shifted(&[(C::C12, 1), (C::C13, -1), (C::C23, 1), (C::C21, -1)]), round)?;
        payload.push((s, x + a));
    }
    emit(state1, 2, round, payload, 3 * state1.q)
}

/// Resolves `b` on the round's slab from `M^{[r]}_{1→2}` and emits `M^{[r]}_{2→3}`.
pub fn rx2_absorb_and_emit(state2: &mut ReceiverState, msg: &BackhaulMessage, round: usize) -> Result<BackhaulMessage> {
    state2.expect(round, 2)?;
    let slab = round_slab(state2.n(), round);
    check_incoming(msg, 1, 2, round, slab.len())?;
    // b_s - b_{s+e12-e13-e22+e23}
    let mut diffs: Vec<(IndexVector, i64)> = slab
        .iter()
        .zip(&msg.payload)
        .map(|(&s, &m)| {
            let w = s.shifted(&[(C::C12, 1), (C::C13, -1), (C::C23, 1)]);
            (s, m - state2.observations.get(&w))
        })
        .collect();
    diffs.sort_by_key(|(s, _)| std::cmp::Reverse(s.get(C::C23)));
    for (s, d) in diffs {
        let dep = s.shifted(&[(C::C12, 1), (C::C13, -1), (C::C22, -1), (C::C23, 1)]);
        let b_dep = state2.own(&dep, round)?;
        state2.resolve(s, d + b_dep, round)?;
    }
    let mut payload = Vec::with_capacity(slab.len());
    for &s in &slab {
        let w = s.shift(C::C23, 1);
        let x = state2.interference_sum(w, C::C22, round)?;
        let b = state2.own(&w.shifted(&[(C::C21, -1), (C::C31, 1), (C::C32, -1)]), round)?;
        payload.push((s, x + b));
    }
    let halfwidth = if round == 0 { 2 * state2.q } else { 3 * state2.q };
    emit(state2, 3, round, payload, halfwidth)
}

/// Resolves `c` on the round's slab from `M^{[r]}_{2→3}`.
pub fn rx3_absorb(state3: &mut ReceiverState, msg: &BackhaulMessage, round: usize) -> Result<()> {
    state3.expect(round, 3)?;
    let slab = round_slab(state3.n(), round);
    check_incoming(msg, 2, 3, round, slab.len())?;
    for (&s, &m) in slab.iter().zip(&msg.payload) {
        let u = s.shifted(&[(C::C23, 1), (C::C21, -1), (C::C31, 1)]);
        let x = state3.interference_sum(u, C::C33, round)?;
        state3.resolve(s, m - x, round)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RxOutcome {
    pub resolved: [SubstreamTable; 3],
    pub ledger: BackhaulLedger,
    /// Per receiver, indices where a value was clamped into its alphabet.
    pub clamped: [BTreeSet<IndexVector>; 3],
    /// Receivers whose observations carried an injected detection error.
    pub detection_flags: [bool; 3],
}

impl RxOutcome {
    /// True when the slot may not have been recovered exactly.
    pub fn contaminated(&self) -> bool {
        self.detection_flags.iter().any(|&f| f) || self.clamped.iter().any(|c| !c.is_empty())
    }
}

/// Runs the receiver protocol from already-detected observation tables.
pub fn run_rx_on_observations(observations: [ObservationTable; 3], q: i64, lenient: bool) -> Result<RxOutcome> {
    let n = observations[0].n();
    let [o1, o2, o3] = observations;
    let mut st1 = ReceiverState::new(o1, q, lenient);
    let mut st2 = ReceiverState::new(o2, q, lenient);
    let mut st3 = ReceiverState::new(o3, q, lenient);
    if (st1.id, st2.id, st3.id) != (1, 2, 3) {
        return Err(Error::DimensionMismatch("observation tables must be ordered by receiver".into()));
    }
    let mut ledger = BackhaulLedger::new();
    for round in 0..n {
        let m31 = rx3_emit(&mut st3, round)?;
        let m12 = rx1_absorb_and_emit(&mut st1, &m31, round)?;
        let m23 = rx2_absorb_and_emit(&mut st2, &m12, round)?;
        rx3_absorb(&mut st3, &m23, round)?;
        ledger.push(m31);
        ledger.push(m12);
        ledger.push(m23);
    }
    let finish = |st: &ReceiverState| {
        st.resolved_own
            .to_substream(st.id, q)
            .ok_or_else(|| Error::protocol(n, st.id, "substream table incomplete after the last round"))
    };
    Ok(RxOutcome {
        resolved: [finish(&st1)?, finish(&st2)?, finish(&st3)?],
        ledger,
        clamped: [st1.clamped, st2.clamped, st3.clamped],
        detection_flags: [false; 3],
    })
}

/// Detects observations with the genie detector and runs rounds `0..N-1`.
pub fn run_rx_protocol<R: Rng + ?Sized>(streams: &StreamSet, mode: DetectorMode, rng: &mut R) -> Result<RxOutcome> {
    let (rate, lenient) = match mode {
        DetectorMode::ExactGenie => (0.0, false),
        DetectorMode::GenieWithErrors { error_rate } => (error_rate, true),
    };
    let report = genie_detect(streams, rate, rng)?;
    let mut out = run_rx_on_observations(report.tables, streams.q(), lenient)?;
    out.detection_flags = report.symbol_error_flags;
    Ok(out)
}

/// Runs one independent protocol instance per time slot.
///
/// Slot `t` uses detection error rate `error_rates[t]` (exact genie when 0)
/// and its own RNG stream, so slots never influence one another.
pub fn run_rx_slots(slots: &[StreamSet], error_rates: &[f64], seed: u64) -> Result<Vec<RxOutcome>> {
    if slots.len() != error_rates.len() {
        return Err(Error::DimensionMismatch("one error rate per slot is required".into()));
    }
    slots
        .iter()
        .zip(error_rates)
        .enumerate()
        .map(|(t, (streams, &rate))| {
            let mode = if rate > 0.0 {
                DetectorMode::GenieWithErrors { error_rate: rate }
            } else {
                DetectorMode::ExactGenie
            };
            run_rx_protocol(streams, mode, &mut stream_rng(seed, t as u64, Purpose::Detection, 0))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::exact_observations;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn states(streams: &StreamSet) -> [ReceiverState; 3] {
        let q = streams.q();
        exact_observations(streams).unwrap().map(|o| ReceiverState::new(o, q, false))
    }

    #[test]
    fn n1_recovers_everything() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let streams = StreamSet::random(1, 5, &mut rng);
            let out = run_rx_protocol(&streams, DetectorMode::ExactGenie, &mut rng).unwrap();
            assert_eq!(out.resolved, streams.tables);
            assert_eq!(out.ledger.total_symbols(), 3);
            assert!(!out.contaminated());
        }
    }

    #[test]
    fn seed_message_is_raw_a() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let streams = StreamSet::random(1, 5, &mut rng);
        let [_, _, mut st3] = states(&streams);
        let m = rx3_emit(&mut st3, 0).unwrap();
        assert_eq!(m.payload, vec![streams.a().get(&IndexVector::splat(1))]);
        assert_eq!(m.alphabet_halfwidth, 5);
    }

    #[test]
    fn zero_streams_give_zero_payloads() {
        let out = run_rx_protocol(&StreamSet::zeros(2, 3), DetectorMode::ExactGenie, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(out.ledger.messages.iter().all(|m| m.payload.iter().all(|&v| v == 0)));
        assert!(out.resolved.iter().all(|t| t.values().iter().all(|&v| v == 0)));
    }

    #[test]
    fn n2_slab_progression_and_alphabets() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let streams = StreamSet::random(2, 5, &mut rng);
        let [mut st1, mut st2, mut st3] = states(&streams);
        let m31 = rx3_emit(&mut st3, 0).unwrap();
        let m12 = rx1_absorb_and_emit(&mut st1, &m31, 0).unwrap();
        let m23 = rx2_absorb_and_emit(&mut st2, &m12, 0).unwrap();
        rx3_absorb(&mut st3, &m23, 0).unwrap();
        assert_eq!(
            [m31.alphabet_halfwidth, m12.alphabet_halfwidth, m23.alphabet_halfwidth],
            [5, 15, 10]
        );
        for (st, truth) in [&st1, &st2, &st3].into_iter().zip(&streams.tables) {
            for (s, v) in st.resolved_own.entries() {
                if s.get(C::C31) == 2 {
                    assert_eq!(v, Some(truth.get(&s)), "receiver {} at {s}", st.id);
                } else {
                    assert_eq!(v, None);
                }
            }
            assert!(st.known_interference_sums.values().all(|v| v.abs() <= 10));
        }
        assert_eq!(m31.len(), 256);
        // Round 1 requires round 0, and must be fed in order.
        assert!(rx1_absorb_and_emit(&mut st1, &m31, 1).is_err());
    }

    #[test]
    fn every_payload_entry_isolates_one_symbol() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let streams = StreamSet::random(2, 4, &mut rng);
        let obs = exact_observations(&streams).unwrap();
        let out = run_rx_protocol(&streams, DetectorMode::ExactGenie, &mut rng).unwrap();
        let (a, b, c) = (streams.a(), streams.b(), streams.c());
        for m in &out.ledger.messages {
            for (s, &v) in round_slab(2, m.round).iter().zip(&m.payload) {
                match (m.source, m.destination) {
                    (3, 1) => {
                        let vv = s.shifted(&[(C::C31, 1), (C::C32, -1), (C::C12, 1)]);
                        let known = obs[0].get(&vv) - a.get(&vv.shift(C::C11, -1));
                        assert_eq!(v - known, a.get(s));
                    }
                    (1, 2) => {
                        let w = s.shifted(&[(C::C12, 1), (C::C13, -1), (C::C23, 1)]);
                        let dep = b.get(&w.shift(C::C22, -1));
                        assert_eq!(v - obs[1].get(&w) + dep, b.get(s));
                    }
                    (2, 3) => {
                        let u = s.shifted(&[(C::C23, 1), (C::C21, -1), (C::C31, 1)]);
                        let known = obs[2].get(&u) - c.get(&u.shift(C::C33, -1));
                        assert_eq!(v - known, c.get(s));
                    }
                    link => panic!("unexpected link {link:?}"),
                }
            }
        }
    }

    #[test]
    fn injected_errors_do_not_abort() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let streams = StreamSet::random(2, 1, &mut rng);
        let out = run_rx_protocol(&streams, DetectorMode::GenieWithErrors { error_rate: 1.0 }, &mut rng).unwrap();
        assert!(out.contaminated());
        assert_eq!(out.ledger.total_symbols(), 3 * 512);
    }

    #[test]
    fn mismatched_message_rejected() {
        let streams = StreamSet::zeros(1, 1);
        let [mut st1, _, _] = states(&streams);
        let bogus = BackhaulMessage::new(2, 1, 0, vec![0], 1).unwrap();
        assert!(rx1_absorb_and_emit(&mut st1, &bogus, 0).is_err());
    }
}
