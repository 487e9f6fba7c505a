//! Repetition stream code: `k` verbatim copies of a binary LDC codeword, decoded in one pass
//! by first settling confidence trackers and then decoding with advice, copy by copy.

use std::collections::BTreeMap;
use std::ops::Range;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curves::SparseOracle;
use crate::ldc_binary::{AdviceOutcome, AdvicePlan, BinaryLdc, BinaryLdcParams, LdcError};
use crate::stream::{width_for, BitWriter, CanonicalState, MemoryLedger, OutputTape, StreamError, SymbolStream};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RepeatError {
    #[error("expected {expected} symbols, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("stream exhausted after writing {written} of {needed} bits")]
    StreamExhausted { written: usize, needed: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Stream(#[from] StreamError),
    #[error(transparent)]
    Ldc(#[from] LdcError),
}

/// Acceptance rule for a copy in the second phase.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Threshold {
    /// `c < (1/2 - 2ε) v`
    #[default]
    TwoEps,
    /// `c < (1/2 - ε) v`
    OneEps,
}

impl Threshold {
    pub fn accepts(self, c: usize, v: usize, eps: f64) -> bool {
        let m = match self {
            Threshold::TwoEps => 2.0,
            Threshold::OneEps => 1.0,
        };
        (c as f64) < (0.5 - m * eps) * v as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepeatParams {
    pub ldc: BinaryLdcParams,
    /// `k`
    pub copies: usize,
    /// `v`
    pub checksums: usize,
    /// `r_out`
    pub out_per_copy: usize,
    pub threshold: Threshold,
}

impl RepeatParams {
    /// n = 64, k = 12, v = 32, r_out = 32.
    pub fn toy() -> Self {
        RepeatParams { ldc: BinaryLdcParams::repeat_toy(), copies: 12, checksums: 32, out_per_copy: 32, threshold: Threshold::TwoEps }
    }

    /// `Q = min(s^0.1, 2^sqrt(log n))`, `k = Q² n / s`, `v = (log n)²`, `r_out = s / Q²`.
    pub fn formula(n: usize, eps: f64, space: f64) -> Self {
        let log_n = (n.max(2) as f64).log2();
        let q = space.powf(0.1).min(2f64.powf(log_n.sqrt())).max(2.0);
        let q2 = q * q;
        RepeatParams {
            ldc: BinaryLdcParams::formula(n, eps, q.ceil() as usize),
            copies: ((q2 * n as f64 / space).ceil() as usize).max(1),
            checksums: (log_n * log_n).ceil() as usize,
            out_per_copy: ((space / q2).floor() as usize).max(1),
            threshold: Threshold::TwoEps,
        }
    }

    pub fn validate(&self) -> Result<(), RepeatError> {
        let mut problems = Vec::new();
        if self.copies == 0 {
            problems.push("copies must be at least 1");
        }
        if self.checksums == 0 {
            problems.push("checksums must be at least 1");
        }
        if self.out_per_copy == 0 {
            problems.push("out_per_copy must be at least 1");
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(RepeatError::InvalidParams(problems.join("; ")))
        }
    }
}

const RNG_STATE_BITS: u64 = 256 + 64 + 68;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Widths {
    copy: u32,
    out: u32,
    point: u32,
    pos: u32,
    tracker: u32,
    param: u32,
}

/// Everything the decoder keeps between two stream reads.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RepeatState {
    widths: Widths,
    pub rng_seed: [u8; 32],
    pub rng_stream: u64,
    pub rng_word_pos: u128,
    pub copy: usize,
    pub next_out: usize,
    pub settled_phase: bool,
    pub advice_points: Vec<usize>,
    pub checks: Vec<usize>,
    /// Accumulated numerators `(P_0, P_1)` per tracker, first phase only.
    pub trackers: Vec<[u64; 2]>,
    /// Settled bits per tracker, second phase only.
    pub settled: Vec<u8>,
    /// RM points of the current copy's query plans.
    pub plan_points: Vec<usize>,
    pub plan_params: Vec<u32>,
    pub collected: Vec<u8>,
}

impl RepeatState {
    fn snapshot_rng(&mut self, rng: &ChaCha8Rng) {
        self.rng_seed = rng.get_seed();
        self.rng_stream = rng.get_stream();
        self.rng_word_pos = rng.get_word_pos();
    }
}

impl CanonicalState for RepeatState {
    fn state_bits(&self) -> u64 {
        let w = &self.widths;
        RNG_STATE_BITS
            + (w.copy + w.out + 1) as u64
            + self.advice_points.len() as u64 * w.point as u64
            + self.checks.len() as u64 * w.pos as u64
            + self.trackers.len() as u64 * 2 * w.tracker as u64
            + self.settled.len() as u64
            + self.plan_points.len() as u64 * w.point as u64
            + self.plan_params.len() as u64 * w.param as u64
            + self.collected.len() as u64
    }

    fn encode_state(&self, out: &mut BitWriter) {
        let w = &self.widths;
        for b in self.rng_seed {
            out.push(b as u64, 8);
        }
        out.push(self.rng_stream, 64);
        out.push(self.rng_word_pos as u64, 64);
        out.push((self.rng_word_pos >> 64) as u64, 4);
        out.push(self.copy as u64, w.copy);
        out.push(self.next_out as u64, w.out);
        out.push(self.settled_phase as u64, 1);
        for &p in &self.advice_points {
            out.push(p as u64, w.point);
        }
        for &p in &self.checks {
            out.push(p as u64, w.pos);
        }
        for t in &self.trackers {
            out.push(t[0], w.tracker);
            out.push(t[1], w.tracker);
        }
        for &b in &self.settled {
            out.push(b as u64, 1);
        }
        for &p in &self.plan_points {
            out.push(p as u64, w.point);
        }
        for &p in &self.plan_params {
            out.push(p as u64, w.param);
        }
        for &b in &self.collected {
            out.push(b as u64, 1);
        }
    }
}

/// Result of one decoding run, with diagnostics.
#[derive(Clone, Debug)]
pub struct RepeatRun {
    pub tape: OutputTape,
    pub outcome: Result<(), RepeatError>,
    pub copies_used: usize,
    /// Copies spent in the first phase, if it finished.
    pub phase1_copies: Option<usize>,
    /// Checksum mismatches of every second-phase copy.
    pub per_copy_c: Vec<usize>,
    /// After each first-phase copy: whether some tracker still had both `P_b <= (1-ε)k/2`.
    pub unsettled_after: Vec<bool>,
    /// `(codeword position, settled bit)` for the advice trackers, then the checksums.
    pub settled: Vec<(usize, u8)>,
    /// Accepted copies in which a target had no surviving candidate.
    pub advice_failures: usize,
    /// Message indices written while each copy was read.
    pub written_by_copy: Vec<Range<usize>>,
    pub symbols_read: usize,
    pub ledger: MemoryLedger,
}

impl RepeatRun {
    pub fn success(&self) -> bool {
        self.outcome.is_ok()
    }
}

pub struct RepeatCodec {
    params: RepeatParams,
    ldc: BinaryLdc,
}

impl RepeatCodec {
    pub fn new(params: RepeatParams) -> Result<Self, RepeatError> {
        params.validate()?;
        let ldc = BinaryLdc::new(params.ldc.clone())?;
        Ok(RepeatCodec { params, ldc })
    }

    pub fn params(&self) -> &RepeatParams {
        &self.params
    }
    pub fn ldc(&self) -> &BinaryLdc {
        &self.ldc
    }
    pub fn msg_len(&self) -> usize {
        self.params.ldc.n
    }
    /// `N`
    pub fn copy_len(&self) -> usize {
        self.ldc.code_len()
    }
    pub fn code_len(&self) -> usize {
        self.params.copies * self.copy_len()
    }

    pub fn encode(&self, x: &[u8]) -> Result<Vec<u8>, RepeatError> {
        let y = self.ldc.encode(x)?;
        Ok(y.repeat(self.params.copies))
    }

    fn widths(&self) -> Widths {
        let p = &self.params;
        let den = 2 * self.ldc.curve_len() as u64 * p.ldc.t_smooth as u64;
        Widths {
            copy: width_for(p.copies as u64),
            out: width_for(p.ldc.n as u64),
            point: width_for(self.ldc.geometry().points() as u64 - 1),
            pos: width_for(self.copy_len() as u64 - 1),
            tracker: width_for(p.copies as u64 * den),
            param: width_for(p.ldc.q() as u64 - 1),
        }
    }

    /// Upper bound on [`RepeatState::state_bits`] over a whole run: `u + v` trackers with their
    /// query plans in the first phase, `r_out` advice decoders in the second.
    pub fn space_bound(&self) -> u64 {
        let p = &self.params;
        let w = self.widths();
        let u = self.ldc.advice_len() as u64;
        let v = p.checksums as u64;
        let n_in = self.ldc.n_in() as u64;
        let per_curve = p.ldc.q() as u64 - 1;
        let copy_len = self.copy_len() as u64;
        let fixed = RNG_STATE_BITS + (w.copy + w.out + 1) as u64 + p.ldc.k_adv as u64 * w.point as u64 + v * w.pos as u64;
        let blocks1 = p.ldc.k_adv as u64 + v;
        let points1 = blocks1 * p.ldc.t_smooth as u64 * per_curve;
        let phase1 = (u + v) * 2 * w.tracker as u64 + points1 * w.point as u64 + (points1 * n_in).min(copy_len);
        let e = self.ldc.geometry().basis.dim() as u64;
        let symbols = (p.out_per_copy as u64).div_ceil(e) + 1;
        let iters = symbols * p.ldc.t_advice as u64;
        let points2 = iters * per_curve;
        let phase2 = (u + v)
            + points2 * w.point as u64
            + iters * p.ldc.k_adv as u64 * w.param as u64
            + (symbols * per_curve * n_in + v).min(copy_len);
        fixed + phase1.max(phase2)
    }

    /// Single pass over `stream`, which must hold `k N` bits.
    pub fn decode(&self, stream: &mut SymbolStream<u8>, budget_bits: u64, rng: &mut ChaCha8Rng) -> RepeatRun {
        let mut run = RepeatRun {
            tape: OutputTape::new(),
            outcome: Ok(()),
            copies_used: 0,
            phase1_copies: None,
            per_copy_c: Vec::new(),
            unsettled_after: Vec::new(),
            settled: Vec::new(),
            advice_failures: 0,
            written_by_copy: Vec::new(),
            symbols_read: 0,
            ledger: MemoryLedger::new(budget_bits),
        };
        run.outcome = self.decode_into(stream, rng, &mut run);
        run.symbols_read = stream.observed();
        run
    }

    fn decode_into(&self, stream: &mut SymbolStream<u8>, rng: &mut ChaCha8Rng, run: &mut RepeatRun) -> Result<(), RepeatError> {
        let p = &self.params;
        let n = p.ldc.n;
        let big_n = self.copy_len();
        if stream.len() != self.code_len() {
            return Err(RepeatError::LengthMismatch { expected: self.code_len(), got: stream.len() });
        }
        let geo = self.ldc.geometry();
        let n_in = self.ldc.n_in();
        let adv = self.ldc.sample_advice(rng);
        let checks: Vec<usize> = (0..p.checksums).map(|_| rng.gen_range(0..big_n)).collect();
        let tracked: Vec<usize> = adv.positions.iter().chain(&checks).copied().collect();
        let u = adv.positions.len();
        let mut state = RepeatState {
            widths: self.widths(),
            rng_seed: [0; 32],
            rng_stream: 0,
            rng_word_pos: 0,
            copy: 0,
            next_out: 0,
            settled_phase: false,
            advice_points: adv.rm_points.clone(),
            checks: checks.clone(),
            trackers: vec![[0; 2]; tracked.len()],
            settled: Vec::new(),
            plan_points: Vec::new(),
            plan_params: Vec::new(),
            collected: Vec::new(),
        };
        let points: Vec<usize> = {
            let mut v: Vec<usize> = tracked.iter().map(|&j| j / n_in).collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        let den = 2 * self.ldc.curve_len() as u64 * p.ldc.t_smooth as u64;
        let settle_bound = (1.0 - p.ldc.eps) * p.copies as f64 * den as f64;
        let mut adv_symbols: Vec<u32> = Vec::new();

        for copy in 0..p.copies {
            let base = copy * big_n;
            state.copy = copy;
            run.copies_used = copy + 1;
            let before = run.tape.next_index();
            run.written_by_copy.push(before..before);
            if !state.settled_phase {
                let plans: Vec<_> = points.iter().map(|&pt| self.ldc.block_plan(pt, rng)).collect();
                state.snapshot_rng(rng);
                state.plan_points = plans.iter().flat_map(|pl| pl.curves.iter().flatten().copied()).collect();
                let mut queries: Vec<usize> = plans.iter().flat_map(|pl| self.ldc.plan_queries(pl)).collect();
                queries.sort_unstable();
                queries.dedup();
                let oracle = self.collect(stream, base, queries, &mut state, &mut run.ledger)?;
                let outcomes: Vec<_> = plans.iter().map(|pl| self.ldc.decode_block(pl, &oracle)).collect();
                for (t, &j) in tracked.iter().enumerate() {
                    let at = points.binary_search(&(j / n_in)).expect("tracked point");
                    let conf = self.ldc.confidence(&outcomes[at], j % n_in);
                    state.trackers[t][0] += conf.num0;
                    state.trackers[t][1] += conf.num1;
                }
                state.collected.clear();
                state.plan_points.clear();
                let unsettled = state.trackers.iter().any(|t| t.iter().all(|&num| 2.0 * num as f64 <= settle_bound));
                run.unsettled_after.push(unsettled);
                if !unsettled {
                    state.settled = state.trackers.iter().map(|t| u8::from(t[1] > t[0])).collect();
                    state.trackers.clear();
                    state.settled_phase = true;
                    run.phase1_copies = Some(copy + 1);
                    run.settled = tracked.iter().copied().zip(state.settled.iter().copied()).collect();
                    adv_symbols = self.ldc.advice_symbols(&adv, &state.settled[..u])?;
                }
                run.ledger.checkpoint(&state);
                continue;
            }

            // second phase: checksums plus advice decoding of the next r_out bits
            let next = run.tape.next_index();
            let end = (next + p.out_per_copy).min(n);
            let mut by_point: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
            for i in next..end {
                let (pt, off) = geo.message_target(i);
                by_point.entry(pt).or_default().push((i, off));
            }
            let plans: Vec<AdvicePlan> = by_point.keys().map(|&pt| self.ldc.advice_block_plan(pt, 0, &adv, rng)).collect();
            state.snapshot_rng(rng);
            state.plan_points = plans.iter().flat_map(|pl| pl.iterations.iter().flat_map(|it| it.curve.iter().copied())).collect();
            state.plan_params = plans.iter().flat_map(|pl| pl.iterations.iter().flat_map(|it| it.params.iter().copied())).collect();
            let mut queries: Vec<usize> = plans.iter().flat_map(|pl| self.ldc.advice_plan_queries(pl)).chain(checks.iter().copied()).collect();
            queries.sort_unstable();
            queries.dedup();
            let oracle = self.collect(stream, base, queries, &mut state, &mut run.ledger)?;
            let c = checks
                .iter()
                .zip(&state.settled[u..])
                .filter(|(&j, &b)| oracle.values[oracle.positions.binary_search(&j).expect("checksum collected")] != Some(b as u32))
                .count();
            run.per_copy_c.push(c);
            if p.threshold.accepts(c, p.checksums, p.ldc.eps) {
                'points: for (plan, targets) in plans.iter().zip(by_point.values()) {
                    let bits = self.advice_bits(plan, targets, &adv.rm_points, &adv_symbols, &oracle);
                    for (&(i, _), bit) in targets.iter().zip(bits) {
                        match bit {
                            Some(b) => run.tape.write(i, b)?,
                            None => {
                                run.advice_failures += 1;
                                break 'points;
                            }
                        }
                    }
                }
            }
            state.next_out = run.tape.next_index();
            run.written_by_copy[copy].end = state.next_out;
            state.collected.clear();
            state.plan_points.clear();
            state.plan_params.clear();
            run.ledger.checkpoint(&state);
            if run.tape.next_index() == n {
                return Ok(());
            }
        }
        Err(RepeatError::StreamExhausted { written: run.tape.len(), needed: n })
    }

    /// Reads the planned positions of one copy in stream order.
    fn collect(
        &self,
        stream: &mut SymbolStream<u8>,
        base: usize,
        queries: Vec<usize>,
        state: &mut RepeatState,
        ledger: &mut MemoryLedger,
    ) -> Result<SparseOracle, RepeatError> {
        ledger.checkpoint(state);
        for &j in &queries {
            stream.skip_to(base + j)?;
            state.collected.push(stream.read_next()? & 1);
            ledger.checkpoint(state);
        }
        let values = state.collected.iter().map(|&b| Some(b as u32)).collect();
        Ok(SparseOracle { len: self.copy_len(), positions: queries, values })
    }

    /// Advice-decoded bits for every `(index, offset)` target in one block; `None` when every
    /// iteration came up empty.
    fn advice_bits(
        &self,
        plan: &AdvicePlan,
        targets: &[(usize, usize)],
        adv_points: &[usize],
        adv_symbols: &[u32],
        oracle: &SparseOracle,
    ) -> Vec<Option<u8>> {
        let geo = self.ldc.geometry();
        if plan.is_direct() {
            let at = adv_points.iter().position(|&p| p == plan.point).expect("direct plans target advice");
            return targets.iter().map(|&(_, off)| Some(geo.symbol_at(adv_symbols[at], off) as u8)).collect();
        }
        let outcomes = self.ldc.advice_outcomes(plan, adv_symbols, oracle);
        if outcomes.iter().all(|o| *o == AdviceOutcome::Empty) {
            return vec![None; targets.len()];
        }
        targets.iter().map(|&(_, off)| self.ldc.advice_vote(&outcomes, off).ok()).collect()
    }
}

/// Copies `ℓ` after which some tracker was still unsettled although fewer than
/// `½(1-ε)(ℓ - k/2)N` errors had been planted in the first `ℓ` copies.
pub fn errcount_property_probe(params: &RepeatParams, copy_len: usize, run: &RepeatRun, planted_per_copy: &[usize]) -> usize {
    let mut planted = 0usize;
    let mut violations = 0;
    for (l, &unsettled) in run.unsettled_after.iter().enumerate() {
        planted += planted_per_copy.get(l).copied().unwrap_or(0);
        let ell = (l + 1) as f64;
        let bound = 0.5 * (1.0 - params.ldc.eps) * (ell - 0.5 * params.copies as f64) * copy_len as f64;
        if unsettled && (planted as f64) < bound {
            violations += 1;
        }
    }
    violations
}

/// Monte Carlo estimate of which message indices the decoder writes while reading each copy,
/// from `samples` runs on the clean encoding of `x`.
pub fn estimate_block_targets(codec: &RepeatCodec, x: &[u8], samples: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<usize>>, RepeatError> {
    let y = codec.encode(x)?;
    let mut targets: Vec<Vec<usize>> = vec![Vec::new(); codec.params.copies];
    for _ in 0..samples {
        let mut s = SymbolStream::new(y.clone());
        let run = codec.decode(&mut s, u64::MAX, rng);
        for (t, range) in targets.iter_mut().zip(run.written_by_copy) {
            t.extend(range);
        }
    }
    for t in &mut targets {
        t.sort_unstable();
        t.dedup();
    }
    Ok(targets)
}

/// Planted errors per copy of a corrupted repeated codeword.
pub fn errors_per_copy(clean: &[u8], corrupted: &[u8], copy_len: usize) -> Vec<usize> {
    clean
        .chunks(copy_len)
        .zip(corrupted.chunks(copy_len))
        .map(|(a, b)| a.iter().zip(b).filter(|(x, y)| x != y).count())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn msg(seed: u64, n: usize) -> Vec<u8> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen_range(0..2)).collect()
    }

    #[test]
    fn copies_are_verbatim() {
        let codec = RepeatCodec::new(RepeatParams::toy()).unwrap();
        let x = msg(1, 64);
        let y = codec.encode(&x).unwrap();
        let n = codec.copy_len();
        assert_eq!(y.len(), 12 * n);
        assert_eq!(&y[..n], codec.ldc().encode(&x).unwrap().as_slice());
        assert!(y.chunks(n).all(|c| c == &y[..n]));
    }

    #[test]
    fn clean_stream_decodes() {
        let codec = RepeatCodec::new(RepeatParams::toy()).unwrap();
        let x = msg(2, 64);
        let y = codec.encode(&x).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut s = SymbolStream::new(y);
        let run = codec.decode(&mut s, codec.space_bound(), &mut rng);
        assert!(run.success(), "{:?}", run.outcome);
        assert_eq!(run.tape.bits(64).unwrap(), x);
        assert!(!run.ledger.exceeded);
        assert_eq!(run.phase1_copies, Some(5));
    }

    #[test]
    fn state_bits_match_serialization() {
        let codec = RepeatCodec::new(RepeatParams::toy()).unwrap();
        let state = RepeatState {
            widths: codec.widths(),
            rng_seed: [7; 32],
            rng_stream: 1,
            rng_word_pos: 99,
            copy: 3,
            next_out: 10,
            settled_phase: false,
            advice_points: vec![5],
            checks: vec![1, 2, 3],
            trackers: vec![[1, 2]; 4],
            settled: vec![1; 4],
            plan_points: vec![9; 30],
            plan_params: vec![3; 2],
            collected: vec![1; 17],
        };
        let mut w = BitWriter::new();
        state.encode_state(&mut w);
        assert_eq!(w.bit_len(), state.state_bits());
    }

    #[test]
    fn threshold_flag() {
        assert!(Threshold::TwoEps.accepts(3, 32, 0.2));
        assert!(!Threshold::TwoEps.accepts(4, 32, 0.2));
        assert!(Threshold::OneEps.accepts(9, 32, 0.2));
        assert!(!Threshold::OneEps.accepts(10, 32, 0.2));
    }

    #[test]
    fn wrong_length_is_reported() {
        let codec = RepeatCodec::new(RepeatParams::toy()).unwrap();
        let mut s = SymbolStream::new(vec![0u8; 10]);
        let run = codec.decode(&mut s, 0, &mut ChaCha8Rng::seed_from_u64(0));
        assert!(matches!(run.outcome, Err(RepeatError::LengthMismatch { .. })));
    }
}
