//! Encode → corrupt → decode trials driven by a [`Profile`], with JSON reports.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{corrupt, AttackStrategy};
use crate::codec_repeat::{errcount_property_probe, errors_per_copy, estimate_block_targets, RepeatCodec, RepeatError};
use crate::codec_tensor::{LinearFunctional, TensorCodec, TensorError};
use crate::codes::{min_distance_bruteforce, nearest_codeword_bruteforce, rm_code, rs_code, simplex_code, to_word, unique_decode, LinearCode};
use crate::gf::FieldSpec;
use crate::ldc_large::LargeLdc;
use crate::profile::{Codec, Derived, FunctionalSpec, Profile, ProfileError};
use crate::stream::{StreamError, SymbolStream};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileEcho {
    pub name: String,
    pub codec: Codec,
    /// Canonical profile text; parsing it reproduces the run.
    pub text: String,
    pub derived: Vec<Derived>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub seed: u64,
    pub success: bool,
    pub strategy: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_step: Option<usize>,
    pub flips: usize,
    pub flip_limit: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub copies_used: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase1_copies: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub peak_bits: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_copy_c: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub errcount_violations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub settled_correct: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bit: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bottoms: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_live: Option<Vec<usize>>,
    /// Deterministic invariants this trial broke.
    pub invariant_failures: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_flips: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_copies_used: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub peak_bits: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget_bits: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub errcount_violation_trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub settled_correct_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_live: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub live_cap: Option<usize>,
    pub message_bits: usize,
    pub code_length: usize,
    pub rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub profile: ProfileEcho,
    pub rho: f64,
    pub seeds: Vec<u64>,
    pub trials: Vec<TrialOutcome>,
    pub aggregates: Aggregates,
    pub invariant_failures: Vec<String>,
    pub notes: Vec<String>,
}

impl Report {
    /// Re-runs the echoed profile with the echoed seeds.
    pub fn rerun(&self) -> Result<Report, ProfileError> {
        let p = Profile::parse(&self.profile.text)?;
        run_experiment(&p, &self.seeds)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

fn echo(profile: &Profile, derived: Vec<Derived>) -> ProfileEcho {
    ProfileEcho { name: profile.name.clone(), codec: profile.codec, text: profile.to_text(), derived }
}

fn problem(e: String) -> ProfileError {
    ProfileError { problems: vec![e] }
}

/// Runs one trial per seed; trials run in parallel and are reported in seed order.
pub fn run_experiment(profile: &Profile, seeds: &[u64]) -> Result<Report, ProfileError> {
    let rho = profile.rho().map_err(problem)?;
    match profile.codec {
        Codec::Repeat => {
            let (params, derived) = profile.repeat_params()?;
            let codec = RepeatCodec::new(params).map_err(|e| problem(e.to_string()))?;
            let budget = profile.budget_bits(&codec).map_err(problem)?;
            let samples = profile.blockzero_samples().map_err(problem)?;
            let strategies: Vec<AttackStrategy> = (0..seeds.len())
                .map(|t| profile.strategy(t, codec.copy_len()))
                .collect::<Result<_, _>>()
                .map_err(problem)?;
            let trials: Vec<TrialOutcome> = seeds
                .par_iter()
                .zip(strategies.par_iter())
                .map(|(&seed, strat)| repeat_trial(&codec, strat, rho, budget, samples, seed))
                .collect();
            let mut notes = Vec::new();
            if profile.strategy_kind().map_err(problem)? == "blockzero_window" {
                notes.push("blockzero_window targets are estimated from sampled clean decoder runs (heuristic adversary)".into());
            }
            let n = codec.msg_len();
            let mut agg = aggregate(&trials, n, codec.code_len());
            let copies: usize = trials.iter().filter_map(|t| t.copies_used).sum();
            agg.mean_copies_used = Some(copies as f64 / trials.len().max(1) as f64);
            agg.peak_bits = trials.iter().filter_map(|t| t.peak_bits).max();
            agg.budget_bits = Some(budget);
            agg.errcount_violation_trials = Some(trials.iter().filter(|t| t.errcount_violations.unwrap_or(0) > 0).count());
            let settled = trials.iter().filter(|t| t.settled_correct == Some(true)).count();
            agg.settled_correct_rate = Some(settled as f64 / trials.len().max(1) as f64);
            Ok(finish(echo(profile, derived), rho, seeds, trials, agg, notes))
        }
        Codec::Tensor => {
            let (params, derived) = profile.tensor_params()?;
            let codec = TensorCodec::new(params).map_err(|e| problem(e.to_string()))?;
            let functional = profile.functional().map_err(problem)?;
            let strat = profile.strategy(0, codec.code_len()).map_err(problem)?;
            let trials: Vec<TrialOutcome> = seeds.par_iter().map(|&seed| tensor_trial(&codec, &functional, &strat, rho, seed)).collect();
            let mut agg = aggregate(&trials, codec.msg_len(), codec.code_len());
            let depth = codec.params().depth + 1;
            let mut live = vec![0usize; depth];
            for t in &trials {
                for (a, b) in live.iter_mut().zip(t.max_live.iter().flatten()) {
                    *a = (*a).max(*b);
                }
            }
            agg.max_live = Some(live);
            agg.live_cap = Some(codec.qlist_cap());
            Ok(finish(echo(profile, derived), rho, seeds, trials, agg, Vec::new()))
        }
    }
}

fn aggregate(trials: &[TrialOutcome], n: usize, len: usize) -> Aggregates {
    let successes = trials.iter().filter(|t| t.success).count();
    let count = trials.len().max(1) as f64;
    Aggregates {
        trials: trials.len(),
        successes,
        success_rate: successes as f64 / count,
        mean_flips: trials.iter().map(|t| t.flips).sum::<usize>() as f64 / count,
        mean_copies_used: None,
        peak_bits: None,
        budget_bits: None,
        errcount_violation_trials: None,
        settled_correct_rate: None,
        max_live: None,
        live_cap: None,
        message_bits: n,
        code_length: len,
        rate: n as f64 / len as f64,
    }
}

fn finish(profile: ProfileEcho, rho: f64, seeds: &[u64], trials: Vec<TrialOutcome>, aggregates: Aggregates, notes: Vec<String>) -> Report {
    let invariant_failures = trials
        .iter()
        .flat_map(|t| t.invariant_failures.iter().map(move |f| format!("seed {}: {f}", t.seed)))
        .collect();
    Report { profile, rho, seeds: seeds.to_vec(), trials, aggregates, invariant_failures, notes }
}

fn random_bits(rng: &mut ChaCha8Rng, n: usize) -> Vec<u8> {
    (0..n).map(|_| rng.gen_range(0..2)).collect()
}

/// One repeat-codec trial: random message, corruption, single-pass decode.
pub fn repeat_trial(codec: &RepeatCodec, strategy: &AttackStrategy, rho: f64, budget: u64, samples: usize, seed: u64) -> TrialOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = codec.msg_len();
    let x = random_bits(&mut rng, n);
    let y = codec.encode(&x).expect("message length matches");
    let mut strategy = strategy.clone();
    let mut window_step = None;
    if let AttackStrategy::BlockzeroWindow { targets, window_step: w, .. } = &mut strategy {
        *targets = estimate_block_targets(codec, &x, samples, &mut rng).expect("message length matches");
        window_step = Some(*w);
    }
    let c = corrupt(&y, &strategy, rho, &mut rng);
    let planted = errors_per_copy(&y, &c.word, codec.copy_len());
    let mut stream = SymbolStream::new(c.word);
    let run = codec.decode(&mut stream, budget, &mut rng);
    let mut failures = Vec::new();
    if run.ledger.exceeded {
        failures.push(format!("memory ledger peak {} exceeded budget {}", run.ledger.peak_bits, budget));
    }
    if let Err(RepeatError::Stream(StreamError::OutOfOrderWrite { last, index })) = &run.outcome {
        failures.push(format!("out-of-order write of {index} after {last}"));
    }
    if run.symbols_read > codec.code_len() {
        failures.push("a symbol was read twice".into());
    }
    if c.flips > c.limit {
        failures.push("corruption exceeded its budget".into());
    }
    let output_ok = run.tape.bits(n).as_deref() == Some(x.as_slice());
    if run.success() && !output_ok {
        failures.push("accepted run wrote a wrong message".into());
    }
    TrialOutcome {
        seed,
        success: run.success() && output_ok,
        strategy: strategy.name().into(),
        window_step,
        flips: c.flips,
        flip_limit: c.limit,
        error: run.outcome.as_ref().err().map(|e| e.to_string()),
        copies_used: Some(run.copies_used),
        phase1_copies: run.phase1_copies,
        peak_bits: Some(run.ledger.peak_bits),
        per_copy_c: Some(run.per_copy_c.clone()),
        errcount_violations: Some(errcount_property_probe(codec.params(), codec.copy_len(), &run, &planted)),
        settled_correct: Some(!run.settled.is_empty() && run.settled.iter().all(|&(j, b)| y[j] == b)),
        invariant_failures: failures,
        ..Default::default()
    }
}

/// One tensor-codec trial: random message and functional, corruption, majority decode.
pub fn tensor_trial(codec: &TensorCodec, functional: &FunctionalSpec, strategy: &AttackStrategy, rho: f64, seed: u64) -> TrialOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = codec.msg_len();
    let x = random_bits(&mut rng, n);
    let ell = match functional {
        FunctionalSpec::Random => random_bits(&mut rng, n),
        FunctionalSpec::Zero => vec![0; n],
        FunctionalSpec::Fixed(bits) => bits.clone(),
    };
    let truth = x.iter().zip(&ell).fold(0u8, |acc, (a, b)| acc ^ (a & b));
    let y = codec.encode_linear(&x).expect("message length matches");
    let c = corrupt(&y, strategy, rho, &mut rng);
    let mut stream = SymbolStream::new(c.word);
    let mut out = TrialOutcome { seed, strategy: strategy.name().into(), flips: c.flips, flip_limit: c.limit, truth: Some(truth), ..Default::default() };
    match codec.linear_dec(&mut stream, &LinearFunctional::from_bits(&ell), &mut rng) {
        Ok(run) => {
            out.success = run.bit == truth;
            out.bit = Some(run.bit);
            out.bottoms = Some(run.values.iter().filter(|v| v.is_none()).count());
            out.max_live = Some(run.max_live);
        }
        Err(e) => {
            if let TensorError::LiveInstances { .. } = e {
                out.invariant_failures.push(e.to_string());
            }
            out.error = Some(e.to_string());
        }
    }
    if c.flips > c.limit {
        out.invariant_failures.push("corruption exceeded its budget".into());
    }
    out
}

/// One brute-force check of a claimed distance bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub claim: String,
    pub code: String,
    pub message_space_bits: usize,
    /// Claimed lower bound on relative distance (or exact value where stated).
    pub bound: f64,
    pub measured: Option<f64>,
    pub pass: Option<bool>,
    pub skipped: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TablesReport {
    pub profile: String,
    pub entries: Vec<TableEntry>,
    pub all_pass: bool,
}

/// Largest message space, in bits, the table check enumerates.
pub const TABLE_SPACE_BITS: usize = 12;

fn space_bits(code: &LinearCode) -> usize {
    code.msg_len() * code.field().degree() as usize
}

fn distance_entry(claim: &str, name: &str, code: Result<LinearCode, String>, bound: f64, exact: bool) -> TableEntry {
    let code = match code {
        Ok(c) => c,
        Err(e) => {
            return TableEntry { claim: claim.into(), code: name.into(), message_space_bits: 0, bound, measured: None, pass: None, skipped: Some(e) }
        }
    };
    let bits = space_bits(&code);
    let mut e = TableEntry { claim: claim.into(), code: name.into(), message_space_bits: bits, bound, measured: None, pass: None, skipped: None };
    if bits > TABLE_SPACE_BITS {
        e.skipped = Some(format!("message space 2^{bits} exceeds 2^{TABLE_SPACE_BITS}"));
        return e;
    }
    match min_distance_bruteforce(&code) {
        Ok(d) => {
            let rel = d as f64 / code.code_len() as f64;
            e.measured = Some(rel);
            e.pass = Some(if exact { (rel - bound).abs() < 1e-12 } else { rel + 1e-12 >= bound });
        }
        Err(err) => e.skipped = Some(err.to_string()),
    }
    e
}

/// Runs the brute-force distance oracles against every distance claim involved in a profile.
pub fn verify_code_tables(profile: &Profile) -> Result<TablesReport, ProfileError> {
    let mut entries = Vec::new();
    let gf2 = FieldSpec::binary();
    let rm12 = rm_code(gf2, 2, 1).map_err(|e| problem(e.to_string()))?;
    let zero_ok = nearest_codeword_bruteforce(&rm12, &to_word(&rm12.encode(&[1, 0, 1]).expect("length 3"))).map(|(_, d)| d == 0).unwrap_or(false);
    entries.push(TableEntry {
        claim: "codeword input is at distance 0".into(),
        code: "RM(1,2) over GF(2)".into(),
        message_space_bits: 3,
        bound: 0.0,
        measured: Some(0.0),
        pass: Some(zero_ok),
        skipped: None,
    });
    entries.push(distance_entry("RM(1,2) has distance 2", "RM(1,2) over GF(2)", Ok(rm12), 0.5, true));
    let gf8 = FieldSpec::gf2k(3).map_err(|e| problem(e.to_string()))?;
    let rs = rs_code(gf8, &[1, 2, 3, 4, 5, 6, 7], 3).map_err(|e| problem(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut agree = true;
    for _ in 0..100 {
        let msg: Vec<u32> = (0..3).map(|_| rng.gen_range(0..8)).collect();
        let mut w = to_word(&rs.encode(&msg).expect("length 3"));
        for _ in 0..rng.gen_range(0..=2) {
            let i = rng.gen_range(0..7);
            w[i] = Some(rng.gen_range(0..8));
        }
        let nearest = nearest_codeword_bruteforce(&rs, &w).map(|(m, _)| m).ok();
        agree &= unique_decode(&rs, &w).ok() == nearest;
    }
    entries.push(TableEntry {
        claim: "unique decoding agrees with the nearest codeword inside the radius".into(),
        code: "RS[7,3] over GF(8)".into(),
        message_space_bits: 9,
        bound: 1.0,
        measured: Some(if agree { 1.0 } else { 0.0 }),
        pass: Some(agree),
        skipped: None,
    });
    entries.push(distance_entry("RS codes are MDS", "RS[7,3] over GF(8)", Ok(rs), 5.0 / 7.0, true));

    match profile.codec {
        Codec::Repeat => {
            let (params, _) = profile.repeat_params()?;
            let l = &params.ldc;
            let q = l.q();
            let inner = simplex_code(l.field_bits as usize, l.inner_reps).map_err(|e| e.to_string());
            let inner_rel = 2f64.powi(l.field_bits as i32 - 1) / (q - 1) as f64;
            entries.push(distance_entry("simplex inner code", "inner simplex", inner, inner_rel, true));
            let outer = FieldSpec::gf2k(l.field_bits).map_err(|e| e.to_string()).and_then(|f| rm_code(f, l.vars, l.degree).map_err(|e| e.to_string()));
            entries.push(distance_entry("Schwartz-Zippel: RM relative distance >= (q - d)/q", "outer RM", outer, (q - l.degree) as f64 / q as f64, false));
            let ldc = crate::ldc_binary::BinaryLdc::new(l.clone()).map_err(|e| e.to_string()).and_then(|c| {
                if l.n > TABLE_SPACE_BITS {
                    Err(format!("message space 2^{} exceeds 2^{TABLE_SPACE_BITS}", l.n))
                } else {
                    c.as_linear_code().map_err(|e| e.to_string())
                }
            });
            entries.push(distance_entry("binary LDC relative distance >= 1/2 - eps^6", "binary LDC", ldc, 0.5 - l.eps.powi(6), false));
        }
        Codec::Tensor => {
            let (params, _) = profile.tensor_params()?;
            let l = &params.ldc;
            let q = 1usize << (l.symbol_bits * l.ext);
            let inner = simplex_code(l.symbol_bits as usize, params.inner_reps).map_err(|e| e.to_string());
            let inner_rel = 2f64.powi(l.symbol_bits as i32 - 1) / ((1usize << l.symbol_bits) - 1) as f64;
            entries.push(distance_entry("simplex inner code", "inner simplex", inner, inner_rel, true));
            let base = LargeLdc::new(l.clone()).map_err(|e| e.to_string()).and_then(|c| c.as_linear_code().map_err(|e| e.to_string()));
            let base_bound = (q - l.degree) as f64 / q as f64;
            entries.push(distance_entry("base LDC relative distance >= 1 - d/q", "base code", base, base_bound, false));
        }
    }
    let all_pass = entries.iter().all(|e| e.pass != Some(false));
    Ok(TablesReport { profile: profile.name.clone(), entries, all_pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_repeat_profile_succeeds() {
        let p = Profile::builtin("repeat-clean").unwrap();
        let r = run_experiment(&p, &[1, 2, 3]).unwrap();
        assert_eq!(r.aggregates.success_rate, 1.0);
        assert!(r.invariant_failures.is_empty());
    }

    #[test]
    fn reports_reproduce() {
        let p = Profile::builtin("tensor-toy").unwrap();
        let r = run_experiment(&p, &[5, 6]).unwrap();
        let again = r.rerun().unwrap();
        assert_eq!(r.to_json(), again.to_json());
    }

    #[test]
    fn tables_pass() {
        for name in ["repeat-toy", "tensor-toy"] {
            let t = verify_code_tables(&Profile::builtin(name).unwrap()).unwrap();
            assert!(t.all_pass, "{t:?}");
        }
    }
}
