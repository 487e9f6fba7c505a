//! Tensor-power stream code for linear functions: `LDC^{⊗d}` over `K`, each symbol re-encoded
//! by a binary inner code, decoded by a recursive confidence decoder in one pass.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codes::{simplex_code, CodeError, LinearCode};
use crate::gf::FieldSpec;
use crate::ldc_large::{LargeLdc, LargeLdcParams, LdcError, QueryLists};
use crate::stream::{StreamError, SymbolStream};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("expected {expected} symbols, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("{live} live instances at depth {depth} exceed the cap {cap}")]
    LiveInstances { depth: usize, live: usize, cap: usize },
    #[error(transparent)]
    Stream(#[from] StreamError),
    #[error(transparent)]
    Ldc(#[from] LdcError),
    #[error(transparent)]
    Code(#[from] CodeError),
}

/// Applies `code` along every axis of a `d`-dimensional array of side `code.msg_len()`.
pub fn tensor_encode(code: &LinearCode, d: usize, x: &[u32]) -> Result<Vec<u32>, TensorError> {
    let order: Vec<usize> = (0..d).collect();
    tensor_encode_axes(code, d, x, &order)
}

/// As [`tensor_encode`], encoding the axes in the given order.
pub fn tensor_encode_axes(code: &LinearCode, d: usize, x: &[u32], order: &[usize]) -> Result<Vec<u32>, TensorError> {
    let r = code.msg_len();
    let big_r = code.code_len();
    if x.len() != r.pow(d as u32) {
        return Err(TensorError::LengthMismatch { expected: r.pow(d as u32), got: x.len() });
    }
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    if sorted != (0..d).collect::<Vec<_>>() {
        return Err(TensorError::InvalidParams("axis order must be a permutation".into()));
    }
    let mut dims = vec![r; d];
    let mut cur = x.to_vec();
    let mut line = vec![0u32; r];
    for &axis in order {
        let outer: usize = dims[..axis].iter().product();
        let inner: usize = dims[axis + 1..].iter().product();
        let mut next = vec![0u32; outer * big_r * inner];
        for o in 0..outer {
            for i in 0..inner {
                for (a, slot) in line.iter_mut().enumerate() {
                    *slot = cur[(o * r + a) * inner + i];
                }
                let enc = code.encode(&line)?;
                for (b, v) in enc.into_iter().enumerate() {
                    next[(o * big_r + b) * inner + i] = v;
                }
            }
        }
        dims[axis] = big_r;
        cur = next;
    }
    Ok(cur)
}

/// Row-major block index of a tuple `(i_1, …, i_d)` over `[base]^d`.
pub fn tuple_index(digits: &[usize], base: usize) -> usize {
    digits.iter().fold(0, |acc, &i| acc * base + i)
}

/// Coefficients of a linear functional on `K^{r^d}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearFunctional {
    pub coeffs: Vec<u32>,
}

impl LinearFunctional {
    /// Lifts a binary functional into `K` coefficient-wise.
    pub fn from_bits(bits: &[u8]) -> Self {
        LinearFunctional { coeffs: bits.iter().map(|&b| (b & 1) as u32).collect() }
    }

    /// Coefficients on indices whose leading digits spell `prefix` (as a row-major index over
    /// `[r]^{d-a}`), where `a` digits remain free.
    pub fn restrict(&self, prefix: usize, r: usize, a: usize) -> &[u32] {
        let span = r.pow(a as u32);
        &self.coeffs[prefix * span..(prefix + 1) * span]
    }

    pub fn apply(&self, field: FieldSpec, x: &[u32]) -> u32 {
        self.coeffs.iter().zip(x).fold(0, |acc, (&c, &v)| acc ^ field.mul(c, v))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorParams {
    /// Base code `K^r → K^R`.
    pub ldc: LargeLdcParams,
    /// `d`
    pub depth: usize,
    /// The inner code is the simplex code on `symbol_bits` bits, repeated this many times.
    pub inner_reps: usize,
    /// Parallel top-level instances of the majority vote.
    pub instances: usize,
}

impl TensorParams {
    /// n = 16 over GF(16): r = 4, R = 16, d = 2, 60-bit inner blocks.
    pub fn toy() -> Self {
        TensorParams { ldc: LargeLdcParams::tensor_toy(), depth: 2, inner_reps: 4, instances: default_instances(16) }
    }

    /// `ε' = ε / 10d`.
    pub fn eps_prime(&self) -> f64 {
        self.ldc.eps / (10.0 * self.depth.max(1) as f64)
    }
}

/// `max(9, ⌈log₂ n⌉²)`, capped at 49.
pub fn default_instances(n: usize) -> usize {
    let l = (n.max(2) as f64).log2().ceil() as usize;
    (l * l).clamp(9, 49)
}

/// Decode and coin of one inner block, shared by every instance reading it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BaseOutcome {
    pub block: usize,
    /// Unique-decoded symbol and its distance in bits, if any.
    pub decoded: Option<(u32, usize)>,
    pub kept: bool,
}

impl BaseOutcome {
    pub fn value(&self) -> Option<u32> {
        match self.decoded {
            Some((s, _)) if self.kept => Some(s),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TensorRun {
    /// `ℓ·x` projected to one bit, by majority over the instances.
    pub bit: u8,
    /// Value of every top-level instance, `None` for ⊥.
    pub values: Vec<Option<u32>>,
    /// Largest number of simultaneously live instances per top-level instance, by depth.
    pub max_live: Vec<usize>,
    pub cap: usize,
    pub base_log: Vec<BaseOutcome>,
    pub symbols_read: usize,
}

#[derive(Clone, Copy, Debug)]
struct Instance {
    top: usize,
    prefix: usize,
}

pub struct TensorCodec {
    params: TensorParams,
    ldc: LargeLdc,
    base: LinearCode,
    inner: LinearCode,
    inner_words: Vec<u64>,
    inner_distance: usize,
    offsets: Vec<usize>,
}

impl TensorCodec {
    pub fn new(params: TensorParams) -> Result<Self, TensorError> {
        if params.ldc.ext != 1 {
            return Err(TensorError::InvalidParams("the tensor base code must be over K itself (ext = 1)".into()));
        }
        if params.instances == 0 || params.inner_reps == 0 {
            return Err(TensorError::InvalidParams("instances and inner_reps must be positive".into()));
        }
        let ldc = LargeLdc::new(params.ldc.clone())?;
        let base = ldc.as_linear_code()?;
        let bits = params.ldc.symbol_bits as usize;
        let inner = simplex_code(bits, params.inner_reps)?;
        if inner.code_len() > 64 {
            return Err(TensorError::InvalidParams(format!("inner blocks of {} bits exceed 64", inner.code_len())));
        }
        let inner_distance = inner.designed_distance()?;
        let inner_words = (0..1u32 << bits)
            .map(|s| {
                let w = inner.encode_unchecked(&symbol_bits(s, bits));
                w.iter().enumerate().fold(0u64, |acc, (i, &b)| acc | ((b as u64) << i))
            })
            .collect();
        let offsets = (0..ldc.msg_len()).map(|i| ldc.geometry().message_target(i).1).collect();
        Ok(TensorCodec { params, ldc, base, inner, inner_words, inner_distance, offsets })
    }

    pub fn params(&self) -> &TensorParams {
        &self.params
    }
    pub fn ldc(&self) -> &LargeLdc {
        &self.ldc
    }
    pub fn base_code(&self) -> &LinearCode {
        &self.base
    }
    pub fn inner_code(&self) -> &LinearCode {
        &self.inner
    }
    pub fn field(&self) -> FieldSpec {
        self.ldc.field()
    }
    /// `r`
    pub fn r(&self) -> usize {
        self.base.msg_len()
    }
    /// `R`
    pub fn big_r(&self) -> usize {
        self.base.code_len()
    }
    pub fn n_inner(&self) -> usize {
        self.inner.code_len()
    }
    /// `n = r^d`
    pub fn msg_len(&self) -> usize {
        self.r().pow(self.params.depth as u32)
    }
    /// `N_inner · R^d`
    pub fn code_len(&self) -> usize {
        self.n_inner() * self.big_r().pow(self.params.depth as u32)
    }
    /// `⌈3 r Q² / R⌉`
    pub fn qlist_cap(&self) -> usize {
        self.ldc.qlist_cap()
    }

    pub fn encode_symbols(&self, x: &[u32]) -> Result<Vec<u32>, TensorError> {
        tensor_encode(&self.base, self.params.depth, x)
    }

    pub fn inner_encode(&self, sigma: u32) -> Vec<u8> {
        let w = self.inner_words[sigma as usize];
        (0..self.n_inner()).map(|i| ((w >> i) & 1) as u8).collect()
    }

    pub fn encode_linear(&self, x: &[u8]) -> Result<Vec<u8>, TensorError> {
        if x.len() != self.msg_len() {
            return Err(TensorError::LengthMismatch { expected: self.msg_len(), got: x.len() });
        }
        let lifted: Vec<u32> = x.iter().map(|&b| (b & 1) as u32).collect();
        let sym = self.encode_symbols(&lifted)?;
        Ok(sym.into_iter().flat_map(|s| self.inner_encode(s)).collect())
    }

    /// Nearest inner codeword strictly inside half the inner distance.
    pub fn base_decode(&self, block: &[u8]) -> Option<(u32, usize)> {
        let w = block.iter().enumerate().fold(0u64, |acc, (i, &b)| acc | (((b & 1) as u64) << i));
        let (sym, dist) = self
            .inner_words
            .iter()
            .enumerate()
            .map(|(s, &c)| (s as u32, (w ^ c).count_ones() as usize))
            .min_by_key(|&(_, d)| d)?;
        (2 * dist < self.inner_distance).then_some((sym, dist))
    }

    /// Decodes one inner block and draws its coin: keep with probability `1 - 2δ`.
    pub fn base_outcome(&self, block_index: usize, block: &[u8], rng: &mut ChaCha8Rng) -> BaseOutcome {
        let decoded = self.base_decode(block);
        let n = self.n_inner();
        let kept = match decoded {
            Some((_, e)) => rng.gen_range(0..n) < n.saturating_sub(2 * e),
            None => false,
        };
        BaseOutcome { block: block_index, decoded, kept }
    }

    /// Query lists for levels `1..=depth`, one set per level.
    pub fn gen_level_qlists(&self, depth: usize, rng: &mut ChaCha8Rng) -> Result<Vec<QueryLists>, TensorError> {
        (0..depth).map(|_| self.ldc.gen_qlists(rng).map_err(TensorError::from)).collect()
    }

    /// Recursive decoder for one instance on a segment of `N_inner · R^a` bits holding the
    /// encoding of the sub-message with prefix `prefix`; `qlists[a - 1]` serves level `a`.
    pub fn recurse_linear(
        &self,
        a: usize,
        stream: &mut SymbolStream<u8>,
        prefix: usize,
        ell: &LinearFunctional,
        qlists: &[QueryLists],
        rng: &mut ChaCha8Rng,
    ) -> Result<Option<u32>, TensorError> {
        let owned = vec![qlists.to_vec()];
        let mut driver = Driver { codec: self, ell, qlists: &owned, rng, live: vec![0; a + 1], base_log: Vec::new(), block: 0, top_a: a };
        let out = driver.level(a, stream, &[Instance { top: 0, prefix }])?;
        Ok(out[0])
    }

    /// Majority over the parallel instances, ⊥ replaced by a fair coin and values projected to
    /// their low bit; ties give 0.
    pub fn linear_dec(&self, stream: &mut SymbolStream<u8>, ell: &LinearFunctional, rng: &mut ChaCha8Rng) -> Result<TensorRun, TensorError> {
        let d = self.params.depth;
        if stream.len() != self.code_len() {
            return Err(TensorError::LengthMismatch { expected: self.code_len(), got: stream.len() });
        }
        if ell.coeffs.len() != self.msg_len() {
            return Err(TensorError::LengthMismatch { expected: self.msg_len(), got: ell.coeffs.len() });
        }
        let qlists: Vec<Vec<QueryLists>> = (0..self.params.instances).map(|_| self.gen_level_qlists(d, rng)).collect::<Result<_, _>>()?;
        let tops: Vec<Instance> = (0..self.params.instances).map(|top| Instance { top, prefix: 0 }).collect();
        let mut driver = Driver { codec: self, ell, qlists: &qlists, rng, live: vec![0; d + 1], base_log: Vec::new(), block: 0, top_a: d };
        let values = driver.level(d, stream, &tops)?;
        let (live, base_log) = (driver.live, driver.base_log);
        let mut ones = 0usize;
        for v in &values {
            let bit = match v {
                Some(s) => (s & 1) as usize,
                None => rng.gen_range(0..2),
            };
            ones += bit;
        }
        let bit = u8::from(2 * ones > values.len());
        let mut max_live = live;
        max_live[0] = 1;
        Ok(TensorRun { bit, values, max_live, cap: self.qlist_cap(), base_log, symbols_read: stream.observed() })
    }
}

fn symbol_bits(s: u32, bits: usize) -> Vec<u32> {
    (0..bits).map(|a| (s >> (bits - 1 - a)) & 1).collect()
}

/// Lockstep driver: every instance of a level reads the same slices together.
struct Driver<'a> {
    codec: &'a TensorCodec,
    ell: &'a LinearFunctional,
    qlists: &'a [Vec<QueryLists>],
    rng: &'a mut ChaCha8Rng,
    /// Peak live instances per top-level instance, by depth.
    live: Vec<usize>,
    base_log: Vec<BaseOutcome>,
    block: usize,
    top_a: usize,
}

impl Driver<'_> {
    fn level(&mut self, a: usize, stream: &mut SymbolStream<u8>, insts: &[Instance]) -> Result<Vec<Option<u32>>, TensorError> {
        let codec = self.codec;
        let f = codec.field();
        let r = codec.r();
        let big_r = codec.big_r();
        let n_in = codec.n_inner();
        if a == 0 {
            let mut block = Vec::with_capacity(n_in);
            for _ in 0..n_in {
                block.push(stream.read_next()?);
            }
            let outcome = codec.base_outcome(self.block, &block, self.rng);
            self.block += 1;
            self.base_log.push(outcome);
            let sigma = outcome.value();
            return Ok(insts
                .iter()
                .map(|inst| sigma.map(|s| f.mul(self.ell.restrict(inst.prefix, r, 0)[0], s)))
                .collect());
        }
        let slice_bits = n_in * big_r.pow(a as u32 - 1);
        let depth = self.top_a - a + 1;
        // values[inst][i][j]
        let mut values: Vec<Vec<Vec<Option<u32>>>> = vec![vec![vec![None; big_r]; r]; insts.len()];
        for j in 0..big_r {
            let mut children = Vec::new();
            let mut slots = Vec::new();
            for (k, inst) in insts.iter().enumerate() {
                let lists = &self.qlists[inst.top][a - 1];
                for i in 0..r {
                    if lists.lists[i].binary_search(&j).is_ok() {
                        children.push(Instance { top: inst.top, prefix: inst.prefix * r + i });
                        slots.push((k, i));
                    }
                }
            }
            if children.is_empty() {
                stream.skip(slice_bits)?;
                self.block += big_r.pow(a as u32 - 1);
                continue;
            }
            let mut per_top = std::collections::BTreeMap::new();
            for c in &children {
                *per_top.entry(c.top).or_insert(0usize) += 1;
            }
            let peak = per_top.values().copied().max().unwrap_or(0);
            let cap = codec.qlist_cap().saturating_pow(depth as u32);
            if peak > cap {
                return Err(TensorError::LiveInstances { depth, live: peak, cap });
            }
            self.live[depth] = self.live[depth].max(peak);
            let out = self.level(a - 1, stream, &children)?;
            for ((k, i), v) in slots.into_iter().zip(out) {
                values[k][i][j] = v;
            }
        }
        let mut results = Vec::with_capacity(insts.len());
        for (k, inst) in insts.iter().enumerate() {
            let lists = &self.qlists[inst.top][a - 1];
            let mut sum = 0u32;
            let mut p_num = u64::MAX;
            let mut den = 1u64;
            for i in 0..r {
                let conf = codec.ldc.decode_plan(&lists.plans[i], codec.offsets[i], &values[k][i]);
                den = conf.den;
                let (sigma, mass) = conf.symbol.unwrap_or((0, 0));
                sum ^= sigma;
                p_num = p_num.min(mass);
            }
            let keep = p_num > 0 && self.rng.gen_range(0..den) < p_num;
            results.push(keep.then_some(sum));
        }
        Ok(results)
    }
}
