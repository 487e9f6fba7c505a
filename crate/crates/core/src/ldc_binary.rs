//! Binary locally decodable code: a Reed-Muller code over `F_q` concatenated with a binary
//! simplex code, with smooth local decoding and local decoding with advice.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codes::{simplex_code, CodeError, LinearCode};
use crate::curves::{BlockPlan, CurveOutcome, Oracle, RmGeometry};
use crate::gf::{FieldSpec, Poly};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LdcError {
    #[error("invalid LDC parameters: {0}")]
    InvalidParams(String),
    #[error("expected {expected} symbols, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("advice values are inconsistent with every candidate")]
    AdviceMismatch,
    #[error("query list {list} could not be resampled under the overlap cap within {attempts} attempts")]
    ResampleExhausted { list: usize, attempts: usize },
    #[error(transparent)]
    Code(#[from] CodeError),
}

/// Parameters of the binary LDC.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinaryLdcParams {
    /// Message bits.
    pub n: usize,
    pub eps: f64,
    /// `q = 2^field_bits`.
    pub field_bits: u32,
    /// RM variables `m`.
    pub vars: usize,
    /// RM degree `d`.
    pub degree: usize,
    /// Curves per smooth decode.
    pub t_smooth: usize,
    /// Iterations per advice decode.
    pub t_advice: usize,
    /// RM points in the advice.
    pub k_adv: usize,
    /// Repetitions of the simplex inner code.
    pub inner_reps: usize,
    /// Query budget `Q`.
    pub query_budget: usize,
}

impl BinaryLdcParams {
    /// Desk-scale profile for standalone LDC experiments (n = 12).
    pub fn toy() -> Self {
        BinaryLdcParams {
            n: 12,
            eps: 0.1,
            field_bits: 4,
            vars: 2,
            degree: 1,
            t_smooth: 8,
            t_advice: 5,
            k_adv: 2,
            inner_reps: 4,
            query_budget: 7200,
        }
    }

    /// LDC under the repetition codec profile (n = 64).
    pub fn repeat_toy() -> Self {
        BinaryLdcParams {
            n: 64,
            eps: 0.2,
            field_bits: 4,
            vars: 3,
            degree: 3,
            t_smooth: 4,
            t_advice: 5,
            k_adv: 1,
            inner_reps: 8,
            query_budget: 7200,
        }
    }

    /// Asymptotic parameter rule: `q ≈ √Q`, `d = ε⁶√Q/4`, `t = ∛Q` curves, `√Q` advice
    /// iterations, `⌈1/ε⌉` advice points and the least `m` whose monomials hold the message.
    pub fn formula(n: usize, eps: f64, query_budget: usize) -> Self {
        let sq = (query_budget as f64).sqrt();
        let field_bits = sq.log2().round().clamp(1.0, 12.0) as u32;
        let q = 1usize << field_bits;
        let degree = ((eps.powi(6) * sq / 4.0).floor() as usize).min(q - 1);
        let mut vars = 1;
        while crate::codes::monomials(vars, degree).len() * (field_bits as usize) < n && vars < 64 {
            vars += 1;
        }
        BinaryLdcParams {
            n,
            eps,
            field_bits,
            vars,
            degree,
            t_smooth: (query_budget as f64).cbrt().round().max(1.0) as usize,
            t_advice: sq.round().max(1.0) as usize,
            k_adv: (1.0 / eps).ceil() as usize,
            inner_reps: 1,
            query_budget,
        }
    }

    pub fn q(&self) -> usize {
        1 << self.field_bits
    }
    pub fn inner_len(&self) -> usize {
        self.inner_reps * (self.q() - 1)
    }
}

/// Target of a local decode.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    Message(usize),
    Codeword(usize),
}

/// Probability of each bit value, as exact integer numerators over a common denominator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Confidence {
    pub num0: u64,
    pub num1: u64,
    pub den: u64,
}

impl Confidence {
    pub fn p0(&self) -> f64 {
        self.num0 as f64 / self.den as f64
    }
    pub fn p1(&self) -> f64 {
        self.num1 as f64 / self.den as f64
    }
    pub fn prob(&self, bit: u8) -> f64 {
        if bit == 0 {
            self.p0()
        } else {
            self.p1()
        }
    }
    pub fn numerator(&self, bit: u8) -> u64 {
        if bit == 0 {
            self.num0
        } else {
            self.num1
        }
    }
    pub fn is_normalized(&self) -> bool {
        self.num0 + self.num1 == self.den
    }
}

/// Non-adaptive smooth decoding plan: curves through the target's RM point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmoothPlan {
    pub block: BlockPlan,
    pub offset: usize,
}

/// Advice drawn independently of any target: `k_adv` RM points expanded to whole blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdvicePositions {
    pub rm_points: Vec<usize>,
    pub positions: Vec<usize>,
}

/// One advice-decoding iteration: curve parameters of the advice points and the curve.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdviceIteration {
    pub params: Vec<u32>,
    pub curve: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdvicePlan {
    pub point: usize,
    pub offset: usize,
    pub iterations: Vec<AdviceIteration>,
}

impl AdvicePlan {
    /// True when the target block is itself part of the advice (no queries needed).
    pub fn is_direct(&self) -> bool {
        self.iterations.is_empty()
    }
}

/// Survivors of one advice iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdviceOutcome {
    Unique(u32),
    Ambiguous,
    Empty,
}

#[derive(Clone, Debug)]
pub struct BinaryLdc {
    params: BinaryLdcParams,
    geo: RmGeometry,
}

impl BinaryLdc {
    pub fn new(params: BinaryLdcParams) -> Result<Self, LdcError> {
        let bad = |m: String| Err(LdcError::InvalidParams(m));
        if !(params.eps > 0.0 && params.eps < 0.5) {
            return bad(format!("eps must lie in (0, 1/2), got {}", params.eps));
        }
        let q = params.q();
        if params.degree >= q {
            return bad(format!("degree {} must be below q = {q}", params.degree));
        }
        if 2 * params.degree + 1 > q - 1 {
            return bad("curve restrictions of degree 2d do not fit in q - 1 points".into());
        }
        if params.k_adv == 0 || params.k_adv * params.degree + 1 > q - 1 || params.k_adv >= q {
            return bad(format!("advice curves of degree {} do not fit", params.k_adv * params.degree));
        }
        if params.t_smooth == 0 || params.t_advice == 0 {
            return bad("curve and iteration counts must be at least 1".into());
        }
        let inner = simplex_code(params.field_bits as usize, params.inner_reps)?;
        let big = FieldSpec::gf2k(params.field_bits).map_err(CodeError::from)?;
        let geo = RmGeometry::new(FieldSpec::binary(), big, params.vars, params.degree, inner)?;
        if params.k_adv > geo.points() {
            return bad("more advice points than RM points".into());
        }
        if geo.msg_symbols() < params.n {
            return bad(format!("RM message holds {} bits, need {}", geo.msg_symbols(), params.n));
        }
        let per_decode = params.t_smooth * geo.curve_len();
        if per_decode > params.query_budget || geo.curve_len() > params.query_budget {
            return bad(format!("{per_decode} queries per decode exceed the budget {}", params.query_budget));
        }
        if params.k_adv * geo.n_in() > params.query_budget {
            return bad("advice length exceeds the query budget".into());
        }
        Ok(BinaryLdc { params, geo })
    }

    pub fn params(&self) -> &BinaryLdcParams {
        &self.params
    }
    pub fn geometry(&self) -> &RmGeometry {
        &self.geo
    }
    /// Codeword length `N`.
    pub fn code_len(&self) -> usize {
        self.geo.code_len()
    }
    pub fn n_in(&self) -> usize {
        self.geo.n_in()
    }
    /// Advice length `u`.
    pub fn advice_len(&self) -> usize {
        self.params.k_adv * self.geo.n_in()
    }
    /// Bits read by one curve.
    pub fn curve_len(&self) -> usize {
        self.geo.curve_len()
    }

    pub fn encode(&self, x: &[u8]) -> Result<Vec<u8>, LdcError> {
        if x.len() != self.params.n {
            return Err(LdcError::LengthMismatch { expected: self.params.n, got: x.len() });
        }
        let mut msg: Vec<u32> = x.iter().map(|&b| (b & 1) as u32).collect();
        msg.resize(self.geo.msg_symbols(), 0);
        Ok(self.geo.encode(&msg)?.into_iter().map(|b| b as u8).collect())
    }

    /// Codeword positions carrying the message bits.
    pub fn systematic_positions(&self) -> Vec<usize> {
        (0..self.params.n)
            .map(|i| {
                let (p, o) = self.geo.message_target(i);
                p * self.n_in() + o
            })
            .collect()
    }

    /// The code as an explicit binary generator matrix.
    pub fn as_linear_code(&self) -> Result<LinearCode, LdcError> {
        let sys = self.systematic_positions();
        Ok(LinearCode::from_encoder(FieldSpec::binary(), self.params.n, self.code_len(), Some(sys), |m| {
            let bits: Vec<u8> = m.iter().map(|&b| b as u8).collect();
            self.encode(&bits).expect("length matches").into_iter().map(u32::from).collect()
        })?)
    }

    fn locate(&self, target: Target) -> (usize, usize) {
        match target {
            Target::Message(i) => self.geo.message_target(i),
            Target::Codeword(j) => self.geo.codeword_target(j),
        }
    }

    pub fn smooth_plan<R: Rng + ?Sized>(&self, target: Target, rng: &mut R) -> SmoothPlan {
        let (point, offset) = self.locate(target);
        SmoothPlan { block: self.block_plan(point, rng), offset }
    }

    pub fn block_plan<R: Rng + ?Sized>(&self, point: usize, rng: &mut R) -> BlockPlan {
        self.geo.smooth_plan(point, self.params.t_smooth, rng)
    }

    /// Distinct codeword indices a block plan reads.
    pub fn plan_queries(&self, plan: &BlockPlan) -> Vec<usize> {
        self.geo.block_queries(&plan.curves)
    }

    pub fn decode_block<O: Oracle + ?Sized>(&self, plan: &BlockPlan, oracle: &O) -> Vec<CurveOutcome> {
        self.geo.decode_plan(plan, oracle)
    }

    /// Confidence for one in-block offset from per-curve outcomes.
    pub fn confidence(&self, outcomes: &[CurveOutcome], offset: usize) -> Confidence {
        let len = self.geo.curve_len() as u64;
        let mut num = [0u64; 2];
        for o in outcomes {
            match *o {
                CurveOutcome::Decoded { symbol, half } => {
                    let b = self.geo.symbol_at(symbol, offset) as usize;
                    num[b] += 2 * (len - half);
                    num[1 - b] += 2 * half;
                }
                CurveOutcome::Failed => {
                    num[0] += len;
                    num[1] += len;
                }
            }
        }
        Confidence { num0: num[0], num1: num[1], den: 2 * len * outcomes.len() as u64 }
    }

    pub fn decode_smooth<O: Oracle + ?Sized>(&self, plan: &SmoothPlan, oracle: &O) -> Confidence {
        self.confidence(&self.decode_block(&plan.block, oracle), plan.offset)
    }

    pub fn smooth_local_decode<O: Oracle + ?Sized, R: Rng + ?Sized>(
        &self,
        oracle: &O,
        target: Target,
        rng: &mut R,
    ) -> Confidence {
        let plan = self.smooth_plan(target, rng);
        self.decode_smooth(&plan, oracle)
    }

    pub fn sample_advice<R: Rng + ?Sized>(&self, rng: &mut R) -> AdvicePositions {
        let rm_points: Vec<usize> = sample(rng, self.geo.points(), self.params.k_adv).into_vec();
        let n_in = self.n_in();
        let positions = rm_points.iter().flat_map(|&p| p * n_in..(p + 1) * n_in).collect();
        AdvicePositions { rm_points, positions }
    }

    pub fn advice_plan<R: Rng + ?Sized>(&self, target: Target, adv: &AdvicePositions, rng: &mut R) -> AdvicePlan {
        let (point, offset) = self.locate(target);
        self.advice_block_plan(point, offset, adv, rng)
    }

    pub fn advice_block_plan<R: Rng + ?Sized>(
        &self,
        point: usize,
        offset: usize,
        adv: &AdvicePositions,
        rng: &mut R,
    ) -> AdvicePlan {
        if adv.rm_points.contains(&point) {
            return AdvicePlan { point, offset, iterations: Vec::new() };
        }
        let q = self.params.q();
        let iterations = (0..self.params.t_advice)
            .map(|_| {
                let params: Vec<u32> = sample(rng, q - 1, adv.rm_points.len()).into_iter().map(|j| j as u32 + 1).collect();
                let anchors: Vec<(u32, usize)> = params.iter().copied().zip(adv.rm_points.iter().copied()).collect();
                let curve = self.geo.curve_through(point, &anchors);
                AdviceIteration { params, curve }
            })
            .collect();
        AdvicePlan { point, offset, iterations }
    }

    pub fn advice_plan_queries(&self, plan: &AdvicePlan) -> Vec<usize> {
        self.geo.block_queries(plan.iterations.iter().map(|it| &it.curve))
    }

    /// Outer symbols of the advice blocks, or `AdviceMismatch` if a block is not an inner codeword.
    pub fn advice_symbols(&self, adv: &AdvicePositions, adv_values: &[u8]) -> Result<Vec<u32>, LdcError> {
        if adv_values.len() != adv.positions.len() {
            return Err(LdcError::LengthMismatch { expected: adv.positions.len(), got: adv_values.len() });
        }
        adv_values
            .chunks(self.n_in())
            .map(|blk| {
                let b: Vec<u32> = blk.iter().map(|&x| (x & 1) as u32).collect();
                self.geo.block_symbol(&b).ok_or(LdcError::AdviceMismatch)
            })
            .collect()
    }

    /// Enumerates curve restrictions that match the advice exactly and keeps those within
    /// relative distance `(1 - ε)/2` of the oracle.
    pub fn advice_iteration<O: Oracle + ?Sized>(
        &self,
        point_iter: &AdviceIteration,
        adv_symbols: &[u32],
        oracle: &O,
    ) -> AdviceOutcome {
        let f = self.geo.big;
        let k = adv_symbols.len();
        let deg = k * self.params.degree;
        let free = deg + 1 - k;
        let lambdas = self.geo.lambdas();
        let table = self.geo.curve_table(&point_iter.curve, oracle);
        let lagrange = Poly::interpolate_raw(f, &point_iter.params, adv_symbols).expect("distinct parameters");
        let vanish = Poly::from_roots(f, &point_iter.params);
        let base: Vec<u32> = lambdas.iter().map(|&l| lagrange.eval_raw(l)).collect();
        let zval: Vec<u32> = lambdas.iter().map(|&l| vanish.eval_raw(l)).collect();
        let pows: Vec<Vec<u32>> = lambdas.iter().map(|&l| (0..free).map(|c| f.pow(l, c as u64)).collect()).collect();
        let limit = ((1.0 - self.params.eps) * self.geo.curve_len() as f64 + 1e-9).floor() as u64;
        let q = f.size();
        let mut g = vec![0u32; free];
        let mut s = vec![0u32; lambdas.len()];
        let at_zero = |g0: u32| lagrange.eval_raw(0) ^ f.mul(vanish.eval_raw(0), g0);
        let mut found: Option<u32> = None;
        loop {
            let mut total = 0u64;
            for (b, (&bv, &zv)) in base.iter().zip(&zval).enumerate() {
                total += table.get(b, bv ^ f.mul(zv, s[b])) as u64;
                if total > limit {
                    break;
                }
            }
            if total <= limit {
                if found.is_some() {
                    return AdviceOutcome::Ambiguous;
                }
                found = Some(at_zero(g.first().copied().unwrap_or(0)));
            }
            // odometer step over the free coefficients
            let mut c = 0;
            loop {
                if c == free {
                    return match found {
                        Some(sym) => AdviceOutcome::Unique(sym),
                        None => AdviceOutcome::Empty,
                    };
                }
                let old = g[c];
                let new = (old + 1) % q;
                g[c] = new;
                let delta = old ^ new;
                for (sv, pw) in s.iter_mut().zip(&pows) {
                    *sv ^= f.mul(delta, pw[c]);
                }
                if new != 0 {
                    break;
                }
                c += 1;
            }
        }
    }

    /// Outcomes of every iteration of an advice plan. With a single advice point all
    /// iterations read the same line, so one evaluation serves them all.
    pub fn advice_outcomes<O: Oracle + ?Sized>(&self, plan: &AdvicePlan, adv_symbols: &[u32], oracle: &O) -> Vec<AdviceOutcome> {
        if adv_symbols.len() == 1 {
            if let Some(first) = plan.iterations.first() {
                let o = self.advice_iteration(first, adv_symbols, oracle);
                return vec![o; plan.iterations.len()];
            }
            return Vec::new();
        }
        plan.iterations.iter().map(|it| self.advice_iteration(it, adv_symbols, oracle)).collect()
    }

    /// Majority vote for one offset; ties give 0.
    pub fn advice_vote(&self, outcomes: &[AdviceOutcome], offset: usize) -> Result<u8, LdcError> {
        let mut votes = [0usize; 2];
        for o in outcomes {
            if let AdviceOutcome::Unique(sym) = o {
                votes[self.geo.symbol_at(*sym, offset) as usize] += 1;
            }
        }
        if outcomes.iter().all(|o| *o == AdviceOutcome::Empty) {
            return Err(LdcError::AdviceMismatch);
        }
        Ok(u8::from(votes[1] > votes[0]))
    }

    pub fn decode_advice<O: Oracle + ?Sized>(
        &self,
        plan: &AdvicePlan,
        adv: &AdvicePositions,
        adv_values: &[u8],
        oracle: &O,
    ) -> Result<u8, LdcError> {
        let symbols = self.advice_symbols(adv, adv_values)?;
        if plan.is_direct() {
            let at = adv.rm_points.iter().position(|&p| p == plan.point).expect("direct plans target advice");
            return Ok(self.geo.symbol_at(symbols[at], plan.offset) as u8);
        }
        let outcomes = self.advice_outcomes(plan, &symbols, oracle);
        self.advice_vote(&outcomes, plan.offset)
    }

    pub fn decode_with_advice<O: Oracle + ?Sized, R: Rng + ?Sized>(
        &self,
        oracle: &O,
        i: usize,
        adv: &AdvicePositions,
        adv_values: &[u8],
        rng: &mut R,
    ) -> Result<u8, LdcError> {
        let plan = self.advice_plan(Target::Message(i), adv, rng);
        self.decode_advice(&plan, adv, adv_values, oracle)
    }
}
