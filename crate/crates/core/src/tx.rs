//! Transmitter-side cooperation alignment and aligned network diagonalization.
//!
//! Round `r ∈ {1..N+1}` builds the slab `s21 = r` of every transmitter's
//! `r_{i,·}` table (slab 0 is identically zero). Messages are indexed by the
//! recipient's target index `t` on that slab:
//!
//! * `3 → 2`, `u = t - e21 + e31`: `r3_u - c_{u-e33} + c_{t-e23}`.
//!   Transmitter 2 gets `r2_t = M - b_{u-e32} + b_{t-e22}`.
//! * `2 → 1`, `w = t + e23 - e13`: `r2_w - b_{w-e22} + b_{t-e12}`.
//!   Transmitter 1 gets `B_t = M - a_{w-e21} = b_{t-e12} + c_{t-e13}` and
//!   `r1_t = a_{t-e11} + B_t`.
//! * `1 → 3`, `v = t - e32 + e12`: `a_{t-e31} + B_v`.
//!   Transmitter 3 gets `r3_t = M - c_{v-e13} + c_{t-e33}`.
//!
//! The observation identities hold on all of `Z^9` (both sides vanish outside
//! `S_{N+1}`), so lookups outside the cube resolve to 0.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::backhaul::{BackhaulLedger, BackhaulMessage, Stage, TraceRecord};
use crate::error::{Error, Result};
use crate::lattice::{
    apply_channel, ChannelMatrix, Coord, IndexCube, IndexVector, MonomialTable, ObservationTable, PartialTable,
    StreamSet, SubstreamTable, DEFAULT_SINGULARITY_THRESHOLD,
};

use Coord as C;

#[derive(Debug, Clone)]
pub struct TransmitterState {
    pub id: u8,
    pub own_streams: SubstreamTable,
    /// `r_{id,·}` over `S_{N+1}`, filled one `s21` slab per round.
    pub built_r: PartialTable,
    /// Transmitter 1 only: `B_t = b_{t-e12} + c_{t-e13}` from the latest message.
    partial_sums: PartialTable,
    rounds_done: usize,
}

impl TransmitterState {
    pub fn new(own_streams: SubstreamTable) -> Self {
        let cube = IndexCube::new(own_streams.n() + 1);
        TransmitterState {
            id: own_streams.owner(),
            own_streams,
            built_r: PartialTable::new(cube),
            partial_sums: PartialTable::new(cube),
            rounds_done: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.own_streams.n()
    }

    pub fn rounds_done(&self) -> usize {
        self.rounds_done
    }

    fn own(&self, s: &IndexVector) -> i64 {
        self.own_streams.get(s)
    }

    fn r_at(&self, s: &IndexVector, round: usize) -> Result<i64> {
        if s.get(C::C21) == 0 {
            return Ok(0);
        }
        self.built_r
            .get(s)
            .ok_or_else(|| Error::protocol(round, self.id, format!("slab dependency missing at {s}")))
    }

    /// Number of leading `s21` slabs that are completely built.
    pub fn complete_slabs(&self) -> usize {
        let cube = self.built_r.cube();
        (1..=cube.depth())
            .take_while(|&v| cube.slab(C::C21, v as i32).all(|s| self.built_r.get(&s).is_some()))
            .count()
    }
}

pub fn tx_slab(n: usize, round: usize) -> Vec<IndexVector> {
    IndexCube::new(n + 1).slab(C::C21, round as i32).collect()
}

/// Alphabet half-width per message: `⌊Q⌋` times the number of terms that can be nonzero.
fn halfwidth(q: i64, round: usize, link: (u8, u8)) -> i64 {
    let terms = match (round, link) {
        (1, (3, 2)) => 1,
        (1, (2, 1)) => 2,
        _ => 3,
    };
    terms * q
}

/// One round: emits `M_{3→2}`, `M_{2→1}`, `M_{1→3}` and extends every built table by slab `s21 = round`.
pub fn tx_round(states: &mut [TransmitterState; 3], round: usize) -> Result<[BackhaulMessage; 3]> {
    let n = states[0].n();
    let q = states[0].own_streams.q();
    if states.iter().map(|s| s.id).ne([1, 2, 3]) {
        return Err(Error::DimensionMismatch("transmitter states must be ordered 1, 2, 3".into()));
    }
    if round < 1 || round > n + 1 {
        return Err(Error::protocol(round, 1, format!("rounds run from 1 to {}", n + 1)));
    }
    if let Some(st) = states.iter().find(|st| st.rounds_done + 1 != round) {
        return Err(Error::protocol(
            round,
            st.id,
            format!("{} rounds completed, cannot run round {round}", st.rounds_done),
        ));
    }
    let slab = tx_slab(n, round);
    let [t1, t2, t3] = states;

    let mut m32 = Vec::with_capacity(slab.len());
    for t in &slab {
        let u = t.shifted(&[(C::C21, -1), (C::C31, 1)]);
        m32.push(t3.r_at(&u, round)? - t3.own(&u.shift(C::C33, -1)) + t3.own(&t.shift(C::C23, -1)));
    }
    for (t, &m) in slab.iter().zip(&m32) {
        let u = t.shifted(&[(C::C21, -1), (C::C31, 1)]);
        t2.built_r.set(t, m - t2.own(&u.shift(C::C32, -1)) + t2.own(&t.shift(C::C22, -1)));
    }

    let mut m21 = Vec::with_capacity(slab.len());
    for t in &slab {
        let w = t.shifted(&[(C::C23, 1), (C::C13, -1)]);
        m21.push(t2.r_at(&w, round)? - t2.own(&w.shift(C::C22, -1)) + t2.own(&t.shift(C::C12, -1)));
    }
    for (t, &m) in slab.iter().zip(&m21) {
        let w = t.shifted(&[(C::C23, 1), (C::C13, -1)]);
        let b = m - t1.own(&w.shift(C::C21, -1));
        t1.partial_sums.set(t, b);
        t1.built_r.set(t, t1.own(&t.shift(C::C11, -1)) + b);
    }

    let mut m13 = Vec::with_capacity(slab.len());
    for t in &slab {
        let v = t.shifted(&[(C::C32, -1), (C::C12, 1)]);
        let b = t1
            .partial_sums
            .get(&v)
            .ok_or_else(|| Error::protocol(round, 1, format!("partial sum missing at {v}")))?;
        m13.push(t1.own(&t.shift(C::C31, -1)) + b);
    }
    for (t, &m) in slab.iter().zip(&m13) {
        let v = t.shifted(&[(C::C32, -1), (C::C12, 1)]);
        t3.built_r.set(t, m - t3.own(&v.shift(C::C13, -1)) + t3.own(&t.shift(C::C33, -1)));
    }

    for st in [t1, t2, t3] {
        st.rounds_done = round;
    }
    Ok([
        BackhaulMessage::new(3, 2, round, m32, halfwidth(q, round, (3, 2)))?,
        BackhaulMessage::new(2, 1, round, m21, halfwidth(q, round, (2, 1)))?,
        BackhaulMessage::new(1, 3, round, m13, halfwidth(q, round, (1, 3)))?,
    ])
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TxOutcome {
    /// Transmitter `i`'s reconstructed `r_{i,·}` table.
    pub tables: [ObservationTable; 3],
    pub ledger: BackhaulLedger,
}

/// Runs rounds `1..N+1` from the transmitters' own streams.
pub fn run_tx_backhaul(streams: &StreamSet) -> Result<TxOutcome> {
    for t in &streams.tables {
        t.validate()?;
    }
    let n = streams.n();
    let mut states = streams.tables.clone().map(TransmitterState::new);
    let mut ledger = BackhaulLedger::new();
    for round in 1..=n + 1 {
        for m in tx_round(&mut states, round)? {
            ledger.push(m);
        }
    }
    let mut tables = Vec::with_capacity(3);
    for st in &states {
        tables.push(
            st.built_r
                .to_observation(st.id)
                .ok_or_else(|| Error::protocol(n + 1, st.id, "r-table incomplete after the last round"))?,
        );
    }
    let tables: [ObservationTable; 3] = tables.try_into().expect("three transmitters");
    Ok(TxOutcome { tables, ledger })
}

/// `Ĥ = H⁻¹` and the diagonalized-stage power scaling `Γ′`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InverseChannel {
    pub hhat: ChannelMatrix,
    pub gamma_prime: f64,
}

impl InverseChannel {
    /// Inverts `H` with `Γ′ = 1`. Rejects singular channels and inverses with a
    /// zero entry, for which the monomials `ν̂_s` collapse.
    pub fn new(h: &ChannelMatrix, threshold: f64) -> Result<Self> {
        let hhat = h.inverse(threshold)?;
        if let Some(c) = Coord::ALL.into_iter().find(|&c| hhat.gain(c).norm() == 0.0) {
            return Err(Error::DegenerateChannel(format!("inverse channel entry {c} is zero")));
        }
        Ok(InverseChannel { hhat, gamma_prime: 1.0 })
    }

    /// Max entry of `|H·Ĥ - I|`.
    pub fn inversion_error(&self, h: &ChannelMatrix) -> f64 {
        let prod = h.mul(&self.hhat);
        let mut err: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let id = if i == j { 1.0 } else { 0.0 };
                err = err.max((prod.h[i][j] - id).norm());
            }
        }
        err
    }

    /// Sets `Γ′` so the strongest transmitter's average power over `tables`
    /// (one entry per transmitter per slot) equals `power`.
    pub fn calibrate(&mut self, slots: &[[ObservationTable; 3]], power: f64) -> Result<()> {
        if slots.is_empty() {
            return Err(Error::Empty("calibration slots"));
        }
        let monomials = MonomialTable::new(&self.hhat, slots[0][0].cube());
        let mut mean = [0.0; 3];
        for slot in slots {
            for (i, t) in slot.iter().enumerate() {
                mean[i] += diagonalized_with(t, &monomials, 1.0).norm_sqr() / slots.len() as f64;
            }
        }
        let peak = mean.iter().cloned().fold(0.0, f64::max);
        self.gamma_prime = if peak > 0.0 { (power / peak).sqrt() } else { 1.0 };
        Ok(())
    }
}

/// `x_i = Γ′·Σ_{s∈S_{N+1}} ν̂_s·r_{i,s}`.
pub fn diagonalized_transmit(state_r: &ObservationTable, inv: &InverseChannel) -> Complex64 {
    let monomials = MonomialTable::new(&inv.hhat, state_r.cube());
    diagonalized_with(state_r, &monomials, inv.gamma_prime)
}

fn diagonalized_with(state_r: &ObservationTable, monomials: &MonomialTable, gamma_prime: f64) -> Complex64 {
    crate::lattice::reconstruct_received(state_r, monomials, gamma_prime)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagonalizationReport {
    pub transmit: [Complex64; 3],
    pub received: [Complex64; 3],
    /// `Γ′·Σ_{s∈S_N} ν̂_s·own_s` per receiver.
    pub desired: [Complex64; 3],
    /// `|y_i - desired_i - z_i|` divided by `max_k |desired_k|` (absolute when all desired are 0).
    pub relative_residual: [f64; 3],
    pub max_relative_residual: f64,
    pub gamma_prime: f64,
}

/// Full transmitter pipeline for one slot: backhaul, diagonalized transmit with
/// `Γ′` calibrated to `power`, channel, and per-receiver interference residuals.
pub fn verify_diagonalization(
    streams: &StreamSet,
    h: &ChannelMatrix,
    power: f64,
    noise: Option<[Complex64; 3]>,
) -> Result<DiagonalizationReport> {
    let mut inv = InverseChannel::new(h, DEFAULT_SINGULARITY_THRESHOLD)?;
    let out = run_tx_backhaul(streams)?;
    inv.calibrate(std::slice::from_ref(&out.tables), power)?;
    let n = streams.n();
    let big = MonomialTable::new(&inv.hhat, IndexCube::new(n + 1));
    let small = MonomialTable::new(&inv.hhat, IndexCube::new(n));
    let transmit = [0, 1, 2].map(|i| diagonalized_with(&out.tables[i], &big, inv.gamma_prime));
    let received = apply_channel(transmit, h, noise);
    let desired = [0, 1, 2].map(|i| crate::lattice::synthesize_with(&streams.tables[i], &small, inv.gamma_prime));
    let z = noise.unwrap_or_default();
    let scale = desired.iter().map(|d| d.norm()).fold(0.0, f64::max);
    let relative_residual = [0, 1, 2].map(|i| {
        let r = (received[i] - desired[i] - z[i]).norm();
        if scale > 0.0 {
            r / scale
        } else {
            r
        }
    });
    Ok(DiagonalizationReport {
        transmit,
        received,
        desired,
        relative_residual,
        max_relative_residual: relative_residual.iter().cloned().fold(0.0, f64::max),
        gamma_prime: inv.gamma_prime,
    })
}

/// Trace records for the over-the-air stage, one per transmitter.
pub fn airtime_records(transmit: &[Complex64; 3], round: usize) -> Vec<TraceRecord> {
    use sha2::{Digest, Sha256};
    transmit
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let mut hasher = Sha256::new();
            hasher.update(x.re.to_le_bytes());
            hasher.update(x.im.to_le_bytes());
            TraceRecord {
                stage: Stage::Airtime,
                source: i as u8 + 1,
                destination: i as u8 + 1,
                round,
                length: 1,
                alphabet: 0,
                payload_digest: hex::encode(hasher.finalize()),
            }
        })
        .collect()
}
