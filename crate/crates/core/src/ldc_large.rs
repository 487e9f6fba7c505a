//! Large-alphabet linear LDC over `K = GF(2^k)` with erasure-aware smooth decoding and
//! query lists with bounded overlap.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::codes::{ecc_eps, CodeError, LinearCode};
use crate::curves::{BlockPlan, CurveOutcome, Oracle, RmGeometry};
use crate::gf::FieldSpec;
pub use crate::ldc_binary::{LdcError, Target};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LargeLdcParams {
    /// `K = GF(2^symbol_bits)`.
    pub symbol_bits: u32,
    /// `F_q` has `q = 2^(symbol_bits * ext)`.
    pub ext: u32,
    pub vars: usize,
    pub degree: usize,
    /// Curves per smooth decode.
    pub t: usize,
    pub eps: f64,
}

impl LargeLdcParams {
    /// Standalone desk-scale profile: `K = F_q = GF(16)`, `m = 2`, `d = 1`.
    pub fn toy() -> Self {
        LargeLdcParams { symbol_bits: 4, ext: 1, vars: 2, degree: 1, t: 8, eps: 0.1 }
    }

    /// Base code of the tensor codec: RS[16, 4] over GF(16), read through degree-2 curves.
    pub fn tensor_toy() -> Self {
        LargeLdcParams { symbol_bits: 4, ext: 1, vars: 1, degree: 3, t: 4, eps: 0.1 }
    }
}

/// Mass on at most one field symbol plus mass on ⊥, as integer numerators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConfidenceDist {
    pub symbol: Option<(u32, u64)>,
    pub bot: u64,
    pub den: u64,
}

impl ConfidenceDist {
    pub fn prob(&self, sigma: u32) -> f64 {
        match self.symbol {
            Some((s, m)) if s == sigma => m as f64 / self.den as f64,
            _ => 0.0,
        }
    }
    pub fn p_bot(&self) -> f64 {
        self.bot as f64 / self.den as f64
    }
    /// `p(σ) + p(⊥)/2`.
    pub fn score(&self, sigma: u32) -> f64 {
        self.prob(sigma) + 0.5 * self.p_bot()
    }
    /// The supported symbol and its mass, if any.
    pub fn argmax(&self) -> Option<(u32, f64)> {
        self.symbol.map(|(s, m)| (s, m as f64 / self.den as f64))
    }
    pub fn is_normalized(&self) -> bool {
        self.symbol.map_or(0, |s| s.1) + self.bot == self.den
    }

    /// Collapses per-symbol masses: the two largest cancel against each other, their common
    /// part moving to ⊥ twice over, until one symbol remains.
    pub fn merge(masses: BTreeMap<u32, u64>, mut bot: u64, den: u64) -> Self {
        let mut items: Vec<(u32, u64)> = masses.into_iter().filter(|&(_, m)| m > 0).collect();
        loop {
            items.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
            if items.len() < 2 {
                break;
            }
            let low = items[1].1;
            items[0].1 -= low;
            items[1].1 = 0;
            bot += 2 * low;
            items.retain(|&(_, m)| m > 0);
        }
        ConfidenceDist { symbol: items.first().copied(), bot, den }
    }
}

/// One non-adaptive query plan per message index, with the distinct indices each reads.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryLists {
    pub lists: Vec<Vec<usize>>,
    pub plans: Vec<BlockPlan>,
    pub cap: usize,
    pub resamples: usize,
}

impl QueryLists {
    /// Largest number of lists sharing one index.
    pub fn max_overlap(&self, code_len: usize) -> usize {
        let mut count = vec![0usize; code_len];
        for l in &self.lists {
            for &i in l {
                count[i] += 1;
            }
        }
        count.into_iter().max().unwrap_or(0)
    }

    /// Newline-delimited decimal rows, row `i` holding list `i`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for l in &self.lists {
            let row: Vec<String> = l.iter().map(|i| i.to_string()).collect();
            let _ = writeln!(s, "{}", row.join(" "));
        }
        s
    }
}

/// `⌈3 r Q² / R⌉`.
pub fn qlist_cap(r: usize, q: usize, big_r: usize) -> usize {
    (3 * r * q * q).div_ceil(big_r)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SmoothnessReport {
    pub trials: usize,
    pub max_freq: f64,
    /// `1.1 Q / R`.
    pub bound: f64,
    /// Three standard deviations of a frequency estimate at the bound.
    pub slack: f64,
}

impl SmoothnessReport {
    pub fn holds(&self) -> bool {
        self.max_freq <= self.bound + self.slack
    }
}

#[derive(Clone, Debug)]
pub struct LargeLdc {
    params: LargeLdcParams,
    geo: RmGeometry,
}

impl LargeLdc {
    pub fn new(params: LargeLdcParams) -> Result<Self, LdcError> {
        let bad = |m: String| Err(LdcError::InvalidParams(m));
        if params.ext == 0 || params.t == 0 {
            return bad("extension degree and curve count must be positive".into());
        }
        let small = FieldSpec::gf2k(params.symbol_bits).map_err(CodeError::from)?;
        let big = FieldSpec::gf2k(params.symbol_bits * params.ext).map_err(CodeError::from)?;
        let q = big.size() as usize;
        if params.degree >= q || 2 * params.degree + 1 > q - 1 {
            return bad(format!("degree {} too large for q = {q}", params.degree));
        }
        let inner = if params.ext == 1 {
            LinearCode::identity(small, 1)
        } else {
            ecc_eps(small, params.eps, params.ext as usize)?
        };
        let geo = RmGeometry::new(small, big, params.vars, params.degree, inner)?;
        Ok(LargeLdc { params, geo })
    }

    pub fn params(&self) -> &LargeLdcParams {
        &self.params
    }
    pub fn geometry(&self) -> &RmGeometry {
        &self.geo
    }
    pub fn field(&self) -> FieldSpec {
        self.geo.small
    }
    /// Message symbols `r`.
    pub fn msg_len(&self) -> usize {
        self.geo.msg_symbols()
    }
    /// Codeword symbols `R`.
    pub fn code_len(&self) -> usize {
        self.geo.code_len()
    }
    /// Queries per smooth decode, `Q = t (q - 1) N_in`.
    pub fn query_budget(&self) -> usize {
        self.params.t * self.geo.curve_len()
    }
    pub fn qlist_cap(&self) -> usize {
        qlist_cap(self.msg_len(), self.query_budget(), self.code_len())
    }

    pub fn encode(&self, x: &[u32]) -> Result<Vec<u32>, LdcError> {
        if x.len() != self.msg_len() {
            return Err(LdcError::LengthMismatch { expected: self.msg_len(), got: x.len() });
        }
        Ok(self.geo.encode(x)?)
    }

    pub fn as_linear_code(&self) -> Result<LinearCode, LdcError> {
        let sys: Vec<usize> = (0..self.msg_len())
            .map(|i| {
                let (p, o) = self.geo.message_target(i);
                p * self.geo.n_in() + o
            })
            .collect();
        Ok(LinearCode::from_encoder(self.field(), self.msg_len(), self.code_len(), Some(sys), |m| {
            self.geo.encode(m).expect("length matches")
        })?)
    }

    fn locate(&self, target: Target) -> (usize, usize) {
        match target {
            Target::Message(i) => self.geo.message_target(i),
            Target::Codeword(j) => self.geo.codeword_target(j),
        }
    }

    pub fn plan<R: Rng + ?Sized>(&self, target: Target, rng: &mut R) -> (BlockPlan, usize) {
        let (point, offset) = self.locate(target);
        (self.geo.smooth_plan(point, self.params.t, rng), offset)
    }

    pub fn plan_queries(&self, plan: &BlockPlan) -> Vec<usize> {
        self.geo.block_queries(&plan.curves)
    }

    pub fn confidence(&self, outcomes: &[CurveOutcome], offset: usize) -> ConfidenceDist {
        let len = self.geo.curve_len() as u64;
        let mut masses = BTreeMap::new();
        let mut bot = 0u64;
        for o in outcomes {
            match *o {
                CurveOutcome::Decoded { symbol, half } => {
                    *masses.entry(self.geo.symbol_at(symbol, offset)).or_insert(0) += len - half;
                    bot += half;
                }
                CurveOutcome::Failed => bot += len,
            }
        }
        ConfidenceDist::merge(masses, bot, len * outcomes.len() as u64)
    }

    pub fn decode_plan<O: Oracle + ?Sized>(&self, plan: &BlockPlan, offset: usize, oracle: &O) -> ConfidenceDist {
        self.confidence(&self.geo.decode_plan(plan, oracle), offset)
    }

    pub fn smooth_local_decode<O: Oracle + ?Sized, R: Rng + ?Sized>(
        &self,
        oracle: &O,
        target: Target,
        rng: &mut R,
    ) -> ConfidenceDist {
        let (plan, offset) = self.plan(target, rng);
        self.decode_plan(&plan, offset, oracle)
    }

    pub fn gen_qlists<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<QueryLists, LdcError> {
        self.gen_qlists_with_cap(self.qlist_cap(), rng)
    }

    /// Draws one plan per message index, resampling a plan (at most `Q²` times) while it would
    /// push some index into more than `cap` lists.
    pub fn gen_qlists_with_cap<R: Rng + ?Sized>(&self, cap: usize, rng: &mut R) -> Result<QueryLists, LdcError> {
        let r = self.msg_len();
        let budget = self.query_budget() * self.query_budget();
        let mut count = vec![0usize; self.code_len()];
        let mut lists = Vec::with_capacity(r);
        let mut plans = Vec::with_capacity(r);
        let mut resamples = 0;
        for i in 0..r {
            let mut attempts = 0;
            loop {
                let (plan, _) = self.plan(Target::Message(i), rng);
                let list = self.plan_queries(&plan);
                if list.iter().all(|&j| count[j] < cap) {
                    for &j in &list {
                        count[j] += 1;
                    }
                    lists.push(list);
                    plans.push(plan);
                    break;
                }
                attempts += 1;
                resamples += 1;
                if attempts >= budget {
                    return Err(LdcError::ResampleExhausted { list: i, attempts });
                }
            }
        }
        Ok(QueryLists { lists, plans, cap, resamples })
    }

    /// Empirical probability with which the most-queried index appears in a decode's plan.
    pub fn query_smoothness_check<R: Rng + ?Sized>(&self, target: Target, trials: usize, rng: &mut R) -> SmoothnessReport {
        let mut hits = vec![0usize; self.code_len()];
        for _ in 0..trials {
            let (plan, _) = self.plan(target, rng);
            for j in self.plan_queries(&plan) {
                hits[j] += 1;
            }
        }
        let max = hits.into_iter().max().unwrap_or(0);
        let bound = 1.1 * self.query_budget() as f64 / self.code_len() as f64;
        let p = bound.min(1.0);
        SmoothnessReport {
            trials,
            max_freq: max as f64 / trials as f64,
            bound,
            slack: 3.0 * (p * (1.0 - p) / trials as f64).sqrt(),
        }
    }
}
