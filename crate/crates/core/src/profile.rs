//! Flat `key = value` experiment profiles. Any parameter that departs from its formula value
//! must be written as `override.<key>`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::AttackStrategy;
use crate::codec_repeat::{RepeatCodec, RepeatParams, Threshold};
use crate::codec_tensor::{default_instances, TensorParams};
use crate::ldc_binary::BinaryLdcParams;
use crate::ldc_large::LargeLdcParams;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid profile: {}", problems.join("; "))]
pub struct ProfileError {
    pub problems: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Codec {
    Repeat,
    Tensor,
}

impl fmt::Display for Codec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Codec::Repeat => "repeat",
            Codec::Tensor => "tensor",
        })
    }
}

const COMMON_KEYS: &[&str] = &["n", "eps", "space", "rho", "trials", "seed", "strategy"];
const REPEAT_KEYS: &[&str] = &["threshold", "budget_bits"];
const TENSOR_KEYS: &[&str] = &["functional"];
const STRATEGY_KEYS: &[&str] = &["strategy.copy", "strategy.erase_frac", "strategy.window_steps", "strategy.samples"];
pub const REPEAT_DERIVED: &[&str] = &[
    "field_bits",
    "vars",
    "degree",
    "t_smooth",
    "t_advice",
    "k_adv",
    "inner_reps",
    "query_budget",
    "copies",
    "checksums",
    "out_per_copy",
];
pub const TENSOR_DERIVED: &[&str] = &["symbol_bits", "ext", "vars", "degree", "t", "depth", "inner_reps", "instances"];

/// A derived parameter and where its value came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Derived {
    pub key: String,
    pub value: String,
    /// `formula` or `override`.
    pub source: String,
}

/// Which functional a tensor trial decodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FunctionalSpec {
    Random,
    Zero,
    Fixed(Vec<u8>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Profile {
    pub name: String,
    pub codec: Codec,
    pub values: BTreeMap<String, String>,
    pub overrides: BTreeMap<String, String>,
}

impl Profile {
    pub fn parse(text: &str) -> Result<Self, ProfileError> {
        let mut problems = Vec::new();
        let mut values = BTreeMap::new();
        let mut overrides = BTreeMap::new();
        let mut name = None;
        let mut codec = None;
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                problems.push(format!("line {}: expected key = value", ln + 1));
                continue;
            };
            let (k, v) = (k.trim(), v.trim().to_string());
            match k {
                "name" => name = Some(v),
                "codec" => match v.as_str() {
                    "repeat" => codec = Some(Codec::Repeat),
                    "tensor" => codec = Some(Codec::Tensor),
                    other => problems.push(format!("unknown codec {other:?}")),
                },
                _ => {
                    let (map, key) = match k.strip_prefix("override.") {
                        Some(rest) => (&mut overrides, rest),
                        None => (&mut values, k),
                    };
                    if map.insert(key.to_string(), v).is_some() {
                        problems.push(format!("duplicate key {k}"));
                    }
                }
            }
        }
        if name.is_none() {
            problems.push("missing name".into());
        }
        if codec.is_none() && !problems.iter().any(|p| p.starts_with("unknown codec")) {
            problems.push("missing codec".into());
        }
        if let Some(c) = codec {
            let (extra, derived) = match c {
                Codec::Repeat => (REPEAT_KEYS, REPEAT_DERIVED),
                Codec::Tensor => (TENSOR_KEYS, TENSOR_DERIVED),
            };
            for k in values.keys() {
                let known = COMMON_KEYS.contains(&k.as_str())
                    || STRATEGY_KEYS.contains(&k.as_str())
                    || extra.contains(&k.as_str())
                    || derived.contains(&k.as_str());
                if !known {
                    problems.push(format!("unknown key {k}"));
                }
            }
            for k in overrides.keys() {
                if !derived.contains(&k.as_str()) {
                    problems.push(format!("override.{k} does not name a derived parameter"));
                }
            }
        }
        let (Some(name), Some(codec)) = (name, codec) else {
            return Err(ProfileError { problems });
        };
        let p = Profile { name, codec, values, overrides };
        p.check_all(&mut problems);
        if problems.is_empty() {
            Ok(p)
        } else {
            Err(ProfileError { problems })
        }
    }

    /// Canonical text: reparsing it gives an equal profile.
    pub fn to_text(&self) -> String {
        let mut s = format!("name = {}\ncodec = {}\n", self.name, self.codec);
        for (k, v) in &self.values {
            s.push_str(&format!("{k} = {v}\n"));
        }
        for (k, v) in &self.overrides {
            s.push_str(&format!("override.{k} = {v}\n"));
        }
        s
    }

    pub fn builtin(name: &str) -> Option<Self> {
        let text = builtin_text(name)?;
        Some(Profile::parse(&text).expect("built-in profiles are valid"))
    }

    pub fn builtin_names() -> Vec<&'static str> {
        BUILTIN_NAMES.to_vec()
    }

    fn check_all(&self, problems: &mut Vec<String>) {
        for k in ["n", "eps", "rho", "trials", "seed"] {
            if !self.values.contains_key(k) {
                problems.push(format!("missing {k}"));
            }
        }
        let mut p = Problems(problems);
        let rho: f64 = p.get(self, "rho").unwrap_or(0.0);
        if !(0.0..=1.0).contains(&rho) {
            p.0.push(format!("rho = {rho} outside [0, 1]"));
        }
        let eps: f64 = p.get(self, "eps").unwrap_or(0.1);
        if !(eps > 0.0 && eps < 0.5) {
            p.0.push(format!("eps = {eps} outside (0, 1/2)"));
        }
        let _: Option<u64> = p.get(self, "seed");
        let _: Option<usize> = p.get(self, "trials");
        if let Err(e) = self.strategy_kind() {
            p.0.push(e);
        }
        match self.codec {
            Codec::Repeat => {
                if let Err(e) = self.repeat_params() {
                    p.0.extend(e.problems);
                }
            }
            Codec::Tensor => {
                if let Err(e) = self.tensor_params() {
                    p.0.extend(e.problems);
                }
                if let Err(e) = self.functional() {
                    p.0.push(e);
                }
            }
        }
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, String> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| format!("cannot parse {key} = {v:?}")),
        }
    }

    fn require<T: FromStr>(&self, key: &str) -> Result<T, String> {
        self.get(key)?.ok_or_else(|| format!("missing {key}"))
    }

    pub fn n(&self) -> Result<usize, String> {
        self.require("n")
    }
    pub fn eps(&self) -> Result<f64, String> {
        self.require("eps")
    }
    pub fn rho(&self) -> Result<f64, String> {
        self.require("rho")
    }
    pub fn trials(&self) -> Result<usize, String> {
        self.require("trials")
    }
    pub fn seed(&self) -> Result<u64, String> {
        self.require("seed")
    }
    /// Seeds of every trial: `seed, seed + 1, …`.
    pub fn seeds(&self) -> Result<Vec<u64>, String> {
        let s = self.seed()?;
        Ok((0..self.trials()? as u64).map(|t| s + t).collect())
    }
    /// Space `s`; defaults to `n^1.5` when absent.
    pub fn space(&self) -> Result<f64, String> {
        Ok(self.get("space")?.unwrap_or((self.n()? as f64).powf(1.5)))
    }

    pub fn strategy_kind(&self) -> Result<String, String> {
        let s = self.get::<String>("strategy")?.unwrap_or_else(|| "uniform_flip".into());
        match s.as_str() {
            "uniform_flip" | "burst" | "copy_kill" | "blockzero_window" | "erasure_mix" => Ok(s),
            other => Err(format!("unknown strategy {other:?}")),
        }
    }

    /// Window steps swept by `blockzero_window`, one per trial in rotation.
    pub fn window_steps(&self) -> Result<Vec<usize>, String> {
        match self.values.get("strategy.window_steps") {
            None => Ok(vec![4]),
            Some(v) => v.split(',').map(|x| x.trim().parse().map_err(|_| format!("cannot parse window step {x:?}"))).collect(),
        }
    }

    pub fn blockzero_samples(&self) -> Result<usize, String> {
        Ok(self.get("strategy.samples")?.unwrap_or(2))
    }

    /// Concrete strategy for a trial; blockzero targets are filled in by the caller.
    pub fn strategy(&self, trial: usize, copy_len: usize) -> Result<AttackStrategy, String> {
        Ok(match self.strategy_kind()?.as_str() {
            "uniform_flip" => AttackStrategy::UniformFlip,
            "burst" => AttackStrategy::Burst,
            "copy_kill" => AttackStrategy::CopyKill { copy_len, copy: self.get("strategy.copy")?.unwrap_or(0) },
            "erasure_mix" => AttackStrategy::ErasureMix { erase_frac: self.get("strategy.erase_frac")?.unwrap_or(0.5) },
            _ => {
                let steps = self.window_steps()?;
                AttackStrategy::BlockzeroWindow {
                    block_len: copy_len,
                    window_step: steps[trial % steps.len()],
                    message_len: self.n()?,
                    targets: Vec::new(),
                }
            }
        })
    }

    pub fn functional(&self) -> Result<FunctionalSpec, String> {
        match self.values.get("functional").map(String::as_str) {
            None | Some("random") => Ok(FunctionalSpec::Random),
            Some("zero") => Ok(FunctionalSpec::Zero),
            Some(hex) => Ok(FunctionalSpec::Fixed(parse_bit_hex(hex, self.n()?)?)),
        }
    }

    /// Resolves a derived parameter: the formula value unless overridden. A plain key is
    /// accepted only when it agrees with the formula.
    fn derive<T: FromStr + PartialEq + fmt::Display + Copy>(
        &self,
        key: &str,
        formula: T,
        out: &mut Vec<Derived>,
        problems: &mut Vec<String>,
    ) -> T {
        if let Some(v) = self.overrides.get(key) {
            return match v.parse::<T>() {
                Ok(x) => {
                    out.push(Derived { key: key.into(), value: x.to_string(), source: "override".into() });
                    x
                }
                Err(_) => {
                    problems.push(format!("cannot parse override.{key} = {v:?}"));
                    formula
                }
            };
        }
        if let Some(v) = self.values.get(key) {
            match v.parse::<T>() {
                Ok(x) if x == formula => {}
                Ok(x) => problems.push(format!("{key} = {x} departs from the formula value {formula}; write override.{key}")),
                Err(_) => problems.push(format!("cannot parse {key} = {v:?}")),
            }
        }
        out.push(Derived { key: key.into(), value: formula.to_string(), source: "formula".into() });
        formula
    }

    pub fn repeat_params(&self) -> Result<(RepeatParams, Vec<Derived>), ProfileError> {
        let mut problems = Vec::new();
        let mut derived = Vec::new();
        let base = (|| -> Result<(usize, f64, f64), String> { Ok((self.n()?, self.eps()?, self.space()?)) })();
        let (n, eps, space) = match base {
            Ok(b) => b,
            Err(e) => return Err(ProfileError { problems: vec![e] }),
        };
        let f = RepeatParams::formula(n, eps, space);
        let ldc = BinaryLdcParams {
            n,
            eps,
            field_bits: self.derive("field_bits", f.ldc.field_bits, &mut derived, &mut problems),
            vars: self.derive("vars", f.ldc.vars, &mut derived, &mut problems),
            degree: self.derive("degree", f.ldc.degree, &mut derived, &mut problems),
            t_smooth: self.derive("t_smooth", f.ldc.t_smooth, &mut derived, &mut problems),
            t_advice: self.derive("t_advice", f.ldc.t_advice, &mut derived, &mut problems),
            k_adv: self.derive("k_adv", f.ldc.k_adv, &mut derived, &mut problems),
            inner_reps: self.derive("inner_reps", f.ldc.inner_reps, &mut derived, &mut problems),
            query_budget: self.derive("query_budget", f.ldc.query_budget, &mut derived, &mut problems),
        };
        let threshold = match self.values.get("threshold").map(String::as_str) {
            None | Some("two_eps") => Threshold::TwoEps,
            Some("one_eps") => Threshold::OneEps,
            Some(other) => {
                problems.push(format!("unknown threshold {other:?}"));
                Threshold::TwoEps
            }
        };
        let params = RepeatParams {
            ldc,
            copies: self.derive("copies", f.copies, &mut derived, &mut problems),
            checksums: self.derive("checksums", f.checksums, &mut derived, &mut problems),
            out_per_copy: self.derive("out_per_copy", f.out_per_copy, &mut derived, &mut problems),
            threshold,
        };
        if problems.is_empty() {
            if let Err(e) = RepeatCodec::new(params.clone()) {
                problems.push(e.to_string());
            }
        }
        if problems.is_empty() {
            Ok((params, derived))
        } else {
            Err(ProfileError { problems })
        }
    }

    /// Budget for the repeat decoder: `budget_bits` if given, else the accounting bound.
    pub fn budget_bits(&self, codec: &RepeatCodec) -> Result<u64, String> {
        Ok(self.get("budget_bits")?.unwrap_or_else(|| codec.space_bound()))
    }

    pub fn tensor_params(&self) -> Result<(TensorParams, Vec<Derived>), ProfileError> {
        let mut problems = Vec::new();
        let mut derived = Vec::new();
        let base = (|| -> Result<(usize, f64, f64), String> { Ok((self.n()?, self.eps()?, self.space()?)) })();
        let (n, eps, space) = match base {
            Ok(b) => b,
            Err(e) => return Err(ProfileError { problems: vec![e] }),
        };
        let f = tensor_formula(n, eps, space);
        let ldc = LargeLdcParams {
            symbol_bits: self.derive("symbol_bits", f.ldc.symbol_bits, &mut derived, &mut problems),
            ext: self.derive("ext", f.ldc.ext, &mut derived, &mut problems),
            vars: self.derive("vars", f.ldc.vars, &mut derived, &mut problems),
            degree: self.derive("degree", f.ldc.degree, &mut derived, &mut problems),
            t: self.derive("t", f.ldc.t, &mut derived, &mut problems),
            eps,
        };
        let params = TensorParams {
            ldc,
            depth: self.derive("depth", f.depth, &mut derived, &mut problems),
            inner_reps: self.derive("inner_reps", f.inner_reps, &mut derived, &mut problems),
            instances: self.derive("instances", f.instances, &mut derived, &mut problems),
        };
        if problems.is_empty() {
            match crate::codec_tensor::TensorCodec::new(params.clone()) {
                Ok(c) if c.msg_len() != n => problems.push(format!("r^d = {} does not match n = {n}", c.msg_len())),
                Ok(_) => {}
                Err(e) => problems.push(e.to_string()),
            }
        }
        if problems.is_empty() {
            Ok((params, derived))
        } else {
            Err(ProfileError { problems })
        }
    }
}

struct Problems<'a>(&'a mut Vec<String>);

impl Problems<'_> {
    fn get<T: FromStr>(&mut self, p: &Profile, key: &str) -> Option<T> {
        match p.get(key) {
            Ok(v) => v,
            Err(e) => {
                self.0.push(e);
                None
            }
        }
    }
}

/// `r = ⌊s^0.2⌋`, `d = ⌈log n / log r⌉`, base code RS over the least `GF(2^b)` with
/// `q - 1 ≥ 2(r - 1) + 1`, `t = ⌈log₂ n⌉` curves, one simplex copy.
pub fn tensor_formula(n: usize, eps: f64, space: f64) -> TensorParams {
    let r = (space.powf(0.2).floor() as usize).max(2);
    let depth = ((n.max(2) as f64).ln() / (r as f64).ln()).ceil().max(1.0) as usize;
    let degree = r - 1;
    let mut bits = 1;
    while (1usize << bits) - 1 < 2 * degree + 1 {
        bits += 1;
    }
    TensorParams {
        ldc: LargeLdcParams { symbol_bits: bits, ext: 1, vars: 1, degree, t: (n.max(2) as f64).log2().ceil() as usize, eps },
        depth,
        inner_reps: 1,
        instances: default_instances(n),
    }
}

/// Hex digits of a bit vector packed least significant bit first.
pub fn parse_bit_hex(hex: &str, n: usize) -> Result<Vec<u8>, String> {
    let clean: String = hex.chars().filter(|c| !c.is_whitespace()).collect();
    let clean = clean.strip_prefix("0x").unwrap_or(&clean);
    if !clean.len().is_multiple_of(2) {
        return Err(format!("odd number of hex digits in {clean:?}"));
    }
    let bytes: Vec<u8> = (0..clean.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(&clean[i..i + 2], 16).map_err(|_| format!("bad hex {:?}", &clean[i..i + 2])))
        .collect::<Result<_, _>>()?;
    if bytes.len() * 8 < n {
        return Err(format!("{} hex bytes cannot hold {n} bits", bytes.len()));
    }
    Ok((0..n).map(|i| (bytes[i / 8] >> (i % 8)) & 1).collect())
}

pub fn to_bit_hex(bits: &[u8]) -> String {
    let mut bytes = vec![0u8; bits.len().div_ceil(8)];
    for (i, &b) in bits.iter().enumerate() {
        bytes[i / 8] |= (b & 1) << (i % 8);
    }
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

const REPEAT_TOY_OVERRIDES: &str = "\
override.field_bits = 4
override.vars = 3
override.degree = 3
override.t_smooth = 4
override.t_advice = 5
override.k_adv = 1
override.inner_reps = 8
override.query_budget = 7200
override.copies = 12
override.checksums = 32
override.out_per_copy = 32
";

const TENSOR_TOY_OVERRIDES: &str = "\
override.symbol_bits = 4
override.inner_reps = 4
";

const BUILTIN_NAMES: &[&str] = &["repeat-toy", "repeat-clean", "repeat-copykill", "repeat-blockzero", "tensor-toy", "tensor-clean", "tensor-zero"];

fn builtin_text(name: &str) -> Option<String> {
    let repeat = |rest: &str| format!("name = {name}\ncodec = repeat\nn = 64\neps = 0.2\nspace = 4096\nseed = 1\n{rest}{REPEAT_TOY_OVERRIDES}");
    let tensor = |rest: &str| format!("name = {name}\ncodec = tensor\nn = 16\neps = 0.1\nspace = 1024\nseed = 1\n{rest}{TENSOR_TOY_OVERRIDES}");
    Some(match name {
        "repeat-toy" => repeat("rho = 0.05\ntrials = 200\nstrategy = uniform_flip\n"),
        "repeat-clean" => repeat("rho = 0\ntrials = 100\nstrategy = uniform_flip\n"),
        "repeat-copykill" => repeat("rho = 0.05\ntrials = 200\nstrategy = copy_kill\nstrategy.copy = 0\n"),
        "repeat-blockzero" => repeat("rho = 0.05\ntrials = 200\nstrategy = blockzero_window\nstrategy.window_steps = 2,4,8,16,32\nstrategy.samples = 2\n"),
        "tensor-toy" => tensor("rho = 0.05\ntrials = 300\nstrategy = uniform_flip\n"),
        "tensor-clean" => tensor("rho = 0\ntrials = 300\nstrategy = uniform_flip\n"),
        "tensor-zero" => tensor("rho = 0.05\ntrials = 100\nstrategy = uniform_flip\nfunctional = zero\n"),
        _ => return None,
    })
}
