//! Linear codes described by generator matrices, with Reed-Solomon, Reed-Muller,
//! concatenated and simplex constructions, unique (GMD) decoding, exhaustive list
//! decoding, and brute-force oracles.
//!
//! Words may contain erasures (`None`). Distances are measured in half-symbol units:
//! a mismatch costs 2, an erasure costs 1.

use std::fmt::Write as _;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::gf::{FieldSpec, GfError, Poly, SubfieldBasis};

/// A received symbol; `None` is an erasure.
pub type Symbol = Option<u32>;

/// Largest message space the exhaustive routines will enumerate.
pub const BRUTE_FORCE_LIMIT_LOG2: u32 = 20;

/// Retry budget of the randomized inner-code search.
pub const INNER_SEARCH_BUDGET: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodeError {
    #[error("expected length {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("evaluation points are not distinct")]
    DuplicatePoints,
    #[error("degree bound {degree_bound} exceeds {points} evaluation points")]
    DegreeBound { degree_bound: usize, points: usize },
    #[error("Reed-Muller degree {degree} must be below the field size {q}")]
    DegreeTooLarge { degree: usize, q: u32 },
    #[error("generator has rank {rank}, expected {expected}")]
    RankDeficient { rank: usize, expected: usize },
    #[error("systematic positions do not reproduce the message")]
    NotSystematic,
    #[error("inner code does not align with the outer alphabet: {0}")]
    Misaligned(String),
    #[error("message space of 2^{log2:.1} exceeds the enumeration limit")]
    SpaceTooLarge { log2: f64 },
    #[error("no codeword within the unique decoding radius")]
    NoDecode,
    #[error("no inner code found within the search budget of {budget} tries")]
    InnerSearchExhausted { budget: usize },
    #[error("epsilon must lie in (0, 1), got {0}")]
    InvalidEps(f64),
    #[error("symbol {0:#x} outside the code alphabet")]
    BadSymbol(u32),
    #[error("malformed code descriptor: {0}")]
    Descriptor(String),
    #[error(transparent)]
    Field(#[from] GfError),
}

/// Structural information kept alongside the generator.
#[derive(Clone, Debug)]
pub enum CodeKind {
    Generic,
    /// Evaluations of polynomials of degree `< degree_bound` at `points`.
    ReedSolomon { points: Vec<u32>, degree_bound: usize },
    /// Evaluations of `vars`-variate polynomials of total degree `<= degree` at every point.
    ReedMuller { vars: usize, degree: usize },
    /// Binary simplex code repeated `reps` times.
    Simplex { bits: usize, reps: usize },
    Concatenated { outer: Box<LinearCode>, inner: Box<LinearCode>, basis: SubfieldBasis },
}

impl CodeKind {
    pub fn name(&self) -> &'static str {
        match self {
            CodeKind::Generic => "generic",
            CodeKind::ReedSolomon { .. } => "reed-solomon",
            CodeKind::ReedMuller { .. } => "reed-muller",
            CodeKind::Simplex { .. } => "simplex",
            CodeKind::Concatenated { .. } => "concatenated",
        }
    }
}

/// A linear code `F^m -> F^M`.
#[derive(Clone, Debug)]
pub struct LinearCode {
    field: FieldSpec,
    msg_len: usize,
    code_len: usize,
    // row-major code_len x msg_len; absent for concatenated codes
    generator: Option<Vec<u32>>,
    systematic: Option<Vec<usize>>,
    kind: CodeKind,
    min_distance: OnceLock<usize>,
}

impl LinearCode {
    /// Code from an explicit generator (`code_len` rows of `msg_len` entries).
    pub fn from_generator(
        field: FieldSpec,
        code_len: usize,
        msg_len: usize,
        generator: Vec<u32>,
        systematic: Option<Vec<usize>>,
    ) -> Result<Self, CodeError> {
        Self::build(field, code_len, msg_len, generator, systematic, CodeKind::Generic)
    }

    fn build(
        field: FieldSpec,
        code_len: usize,
        msg_len: usize,
        generator: Vec<u32>,
        systematic: Option<Vec<usize>>,
        kind: CodeKind,
    ) -> Result<Self, CodeError> {
        if generator.len() != code_len * msg_len {
            return Err(CodeError::LengthMismatch { expected: code_len * msg_len, got: generator.len() });
        }
        if let Some(&bad) = generator.iter().find(|&&g| !field.contains(g)) {
            return Err(CodeError::BadSymbol(bad));
        }
        if msg_len <= 1 << 12 {
            let r = rank(field, code_len, msg_len, &generator);
            if r != msg_len {
                return Err(CodeError::RankDeficient { rank: r, expected: msg_len });
            }
        }
        if let Some(sys) = &systematic {
            if sys.len() != msg_len || sys.iter().any(|&p| p >= code_len) {
                return Err(CodeError::NotSystematic);
            }
            for (i, &p) in sys.iter().enumerate() {
                for j in 0..msg_len {
                    let want = u32::from(i == j);
                    if generator[p * msg_len + j] != want {
                        return Err(CodeError::NotSystematic);
                    }
                }
            }
        }
        Ok(LinearCode {
            field,
            msg_len,
            code_len,
            generator: Some(generator),
            systematic,
            kind,
            min_distance: OnceLock::new(),
        })
    }

    /// Code whose generator columns are the encodings of the unit vectors under `enc`.
    pub fn from_encoder(
        field: FieldSpec,
        msg_len: usize,
        code_len: usize,
        systematic: Option<Vec<usize>>,
        mut enc: impl FnMut(&[u32]) -> Vec<u32>,
    ) -> Result<Self, CodeError> {
        let mut generator = vec![0u32; code_len * msg_len];
        let mut unit = vec![0u32; msg_len];
        for i in 0..msg_len {
            unit[i] = 1;
            let col = enc(&unit);
            if col.len() != code_len {
                return Err(CodeError::LengthMismatch { expected: code_len, got: col.len() });
            }
            for (j, &c) in col.iter().enumerate() {
                generator[j * msg_len + i] = c;
            }
            unit[i] = 0;
        }
        Self::from_generator(field, code_len, msg_len, generator, systematic)
    }

    pub fn identity(field: FieldSpec, n: usize) -> Self {
        let mut g = vec![0u32; n * n];
        for i in 0..n {
            g[i * n + i] = 1;
        }
        Self::from_generator(field, n, n, g, Some((0..n).collect())).expect("identity is valid")
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }
    pub fn msg_len(&self) -> usize {
        self.msg_len
    }
    pub fn code_len(&self) -> usize {
        self.code_len
    }
    pub fn kind(&self) -> &CodeKind {
        &self.kind
    }
    pub fn systematic_positions(&self) -> Option<&[usize]> {
        self.systematic.as_deref()
    }

    /// Generator entry at codeword position `row`, message coordinate `col`.
    pub fn generator_entry(&self, row: usize, col: usize) -> u32 {
        match &self.generator {
            Some(g) => g[row * self.msg_len + col],
            None => {
                let mut unit = vec![0u32; self.msg_len];
                unit[col] = 1;
                self.encode_unchecked(&unit)[row]
            }
        }
    }

    /// Dense generator, materialized for structured codes.
    pub fn generator_matrix(&self) -> Vec<u32> {
        match &self.generator {
            Some(g) => g.clone(),
            None => {
                let cols = self.columns();
                let mut g = vec![0u32; self.code_len * self.msg_len];
                for (i, col) in cols.iter().enumerate() {
                    for (j, &c) in col.iter().enumerate() {
                        g[j * self.msg_len + i] = c;
                    }
                }
                g
            }
        }
    }

    /// Encodings of the unit vectors.
    pub fn columns(&self) -> Vec<Vec<u32>> {
        let mut unit = vec![0u32; self.msg_len];
        (0..self.msg_len)
            .map(|i| {
                unit[i] = 1;
                let c = self.encode_unchecked(&unit);
                unit[i] = 0;
                c
            })
            .collect()
    }

    pub fn encode(&self, msg: &[u32]) -> Result<Vec<u32>, CodeError> {
        if msg.len() != self.msg_len {
            return Err(CodeError::LengthMismatch { expected: self.msg_len, got: msg.len() });
        }
        if let Some(&bad) = msg.iter().find(|&&s| !self.field.contains(s)) {
            return Err(CodeError::BadSymbol(bad));
        }
        Ok(self.encode_unchecked(msg))
    }

    pub(crate) fn encode_unchecked(&self, msg: &[u32]) -> Vec<u32> {
        match (&self.generator, &self.kind) {
            (Some(g), _) => {
                let f = self.field;
                let m = self.msg_len;
                (0..self.code_len)
                    .map(|j| {
                        let row = &g[j * m..(j + 1) * m];
                        row.iter().zip(msg).fold(0u32, |acc, (&a, &b)| acc ^ f.mul(a, b))
                    })
                    .collect()
            }
            (None, CodeKind::Concatenated { outer, inner, basis }) => {
                let e = basis.dim();
                let outer_msg: Vec<u32> = msg.chunks(e).map(|c| basis.from_coords(c)).collect();
                let outer_cw = outer.encode_unchecked(&outer_msg);
                let mut out = Vec::with_capacity(self.code_len);
                for s in outer_cw {
                    out.extend(inner.encode_unchecked(&basis.to_coords(s)));
                }
                out
            }
            (None, _) => unreachable!("only concatenated codes omit the generator"),
        }
    }

    /// Message of a codeword (no error correction).
    pub fn message_of(&self, codeword: &[u32]) -> Result<Vec<u32>, CodeError> {
        if let Some(sys) = &self.systematic {
            return Ok(sys.iter().map(|&p| codeword[p]).collect());
        }
        match &self.kind {
            CodeKind::ReedSolomon { points, degree_bound } => {
                let p = Poly::interpolate_raw(self.field, &points[..*degree_bound], &codeword[..*degree_bound])?;
                let mut c = p.coeffs().to_vec();
                c.resize(*degree_bound, 0);
                Ok(c)
            }
            CodeKind::Concatenated { outer, inner, basis } => {
                let n_in = inner.code_len;
                let mut outer_cw = Vec::with_capacity(outer.code_len);
                for block in codeword.chunks(n_in) {
                    outer_cw.push(basis.from_coords(&inner.message_of(block)?));
                }
                let om = outer.message_of(&outer_cw)?;
                Ok(om.iter().flat_map(|&s| basis.to_coords(s)).collect())
            }
            _ => solve_message(self, codeword),
        }
    }

    /// Re-parametrize so that a greedy (lexicographic) choice of positions carries the message.
    pub fn systematize(self) -> Result<Self, CodeError> {
        if self.systematic.is_some() {
            return Ok(self);
        }
        let g = self.generator_matrix();
        let m = self.msg_len;
        let pivots = independent_rows(self.field, self.code_len, m, &g, m);
        if pivots.len() < m {
            return Err(CodeError::RankDeficient { rank: pivots.len(), expected: m });
        }
        let mut s = vec![0u32; m * m];
        for (i, &p) in pivots.iter().enumerate() {
            s[i * m..(i + 1) * m].copy_from_slice(&g[p * m..(p + 1) * m]);
        }
        let s_inv = invert(self.field, m, &s).ok_or(CodeError::RankDeficient { rank: 0, expected: m })?;
        let gs = matmul(self.field, &g, self.code_len, m, &s_inv, m);
        let mut out = Self::build(self.field, self.code_len, m, gs, Some(pivots), self.kind.clone())?;
        if let Some(d) = self.min_distance.get() {
            let _ = out.min_distance.set(*d);
        }
        out.kind = self.kind;
        Ok(out)
    }

    /// Distance guaranteed by the construction, in symbols.
    pub fn designed_distance(&self) -> Result<usize, CodeError> {
        match &self.kind {
            CodeKind::ReedSolomon { points, degree_bound } => Ok(points.len() + 1 - degree_bound),
            CodeKind::ReedMuller { vars, degree } => {
                let q = self.field.size() as usize;
                Ok((q - degree) * q.pow(*vars as u32 - 1))
            }
            CodeKind::Simplex { bits, reps } => Ok(reps << (bits - 1)),
            CodeKind::Concatenated { outer, inner, .. } => {
                Ok(outer.designed_distance()? * inner.designed_distance()?)
            }
            CodeKind::Generic => min_distance_bruteforce(self),
        }
    }

    /// Canonical text descriptor: header line then one hex row per codeword position.
    pub fn to_descriptor(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "code kind={} field={} modulus={:x} msg_len={} code_len={}",
            self.kind.name(),
            self.field.degree(),
            self.field.modulus(),
            self.msg_len,
            self.code_len
        );
        match &self.systematic {
            Some(sys) => {
                let parts: Vec<String> = sys.iter().map(|p| p.to_string()).collect();
                let _ = writeln!(s, "systematic {}", parts.join(" "));
            }
            None => {
                let _ = writeln!(s, "systematic none");
            }
        }
        let g = self.generator_matrix();
        for row in g.chunks(self.msg_len.max(1)) {
            let parts: Vec<String> = row.iter().map(|&v| self.field.to_hex(v)).collect();
            let _ = writeln!(s, "{}", parts.join(" "));
        }
        s
    }

    pub fn from_descriptor(text: &str) -> Result<Self, CodeError> {
        let bad = |m: &str| CodeError::Descriptor(m.to_string());
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| bad("empty descriptor"))?;
        let mut k = None;
        let mut modulus = None;
        let mut m = None;
        let mut big_m = None;
        for tok in header.split_whitespace().skip(1) {
            let (key, val) = tok.split_once('=').ok_or_else(|| bad(tok))?;
            match key {
                "kind" => {}
                "field" => k = val.parse::<u32>().ok(),
                "modulus" => modulus = u32::from_str_radix(val, 16).ok(),
                "msg_len" => m = val.parse::<usize>().ok(),
                "code_len" => big_m = val.parse::<usize>().ok(),
                _ => return Err(bad(tok)),
            }
        }
        let (k, modulus, m, big_m) = match (k, modulus, m, big_m) {
            (Some(a), Some(b), Some(c), Some(d)) => (a, b, c, d),
            _ => return Err(bad("incomplete header")),
        };
        let field = FieldSpec::with_modulus(k, modulus)?;
        let sys_line = lines.next().ok_or_else(|| bad("missing systematic line"))?;
        let sys_rest = sys_line.strip_prefix("systematic").ok_or_else(|| bad(sys_line))?.trim();
        let systematic = if sys_rest == "none" {
            None
        } else {
            Some(
                sys_rest
                    .split_whitespace()
                    .map(|t| t.parse::<usize>().map_err(|_| bad(t)))
                    .collect::<Result<Vec<_>, _>>()?,
            )
        };
        let mut g = Vec::with_capacity(m * big_m);
        for line in lines {
            for tok in line.split_whitespace() {
                g.push(field.parse_hex(tok)?);
            }
        }
        Self::from_generator(field, big_m, m, g, systematic)
    }
}

fn solve_message(code: &LinearCode, codeword: &[u32]) -> Result<Vec<u32>, CodeError> {
    let g = code.generator_matrix();
    let m = code.msg_len;
    let rows = independent_rows(code.field, code.code_len, m, &g, m);
    if rows.len() < m {
        return Err(CodeError::RankDeficient { rank: rows.len(), expected: m });
    }
    let mut s = vec![0u32; m * m];
    for (i, &p) in rows.iter().enumerate() {
        s[i * m..(i + 1) * m].copy_from_slice(&g[p * m..(p + 1) * m]);
    }
    let inv = invert(code.field, m, &s).ok_or(CodeError::RankDeficient { rank: 0, expected: m })?;
    let rhs: Vec<u32> = rows.iter().map(|&p| codeword[p]).collect();
    let f = code.field;
    Ok((0..m)
        .map(|i| (0..m).fold(0u32, |acc, j| acc ^ f.mul(inv[i * m + j], rhs[j])))
        .collect())
}

// ---------------------------------------------------------------- linear algebra

/// Rank of a row-major matrix.
pub fn rank(field: FieldSpec, rows: usize, cols: usize, data: &[u32]) -> usize {
    independent_rows(field, rows, cols, data, cols).len()
}

/// Greedy scan of rows in order, keeping those independent of the ones already kept.
pub fn independent_rows(field: FieldSpec, rows: usize, cols: usize, data: &[u32], want: usize) -> Vec<usize> {
    let mut basis: Vec<(usize, Vec<u32>)> = Vec::new();
    let mut picked = Vec::new();
    for r in 0..rows {
        if picked.len() == want {
            break;
        }
        let mut v = data[r * cols..(r + 1) * cols].to_vec();
        for (pivot, b) in &basis {
            let c = v[*pivot];
            if c != 0 {
                for (x, &y) in v.iter_mut().zip(b) {
                    *x ^= field.mul(c, y);
                }
            }
        }
        if let Some(p) = v.iter().position(|&x| x != 0) {
            let inv = field.inv(v[p]);
            for x in v.iter_mut() {
                *x = field.mul(*x, inv);
            }
            // keep the basis fully reduced on its pivot columns
            for (_, b) in basis.iter_mut() {
                let c = b[p];
                if c != 0 {
                    for (x, &y) in b.iter_mut().zip(&v) {
                        *x ^= field.mul(c, y);
                    }
                }
            }
            basis.push((p, v));
            picked.push(r);
        }
    }
    picked
}

/// Inverse of an `n x n` row-major matrix.
pub fn invert(field: FieldSpec, n: usize, data: &[u32]) -> Option<Vec<u32>> {
    let w = 2 * n;
    let mut a = vec![0u32; n * w];
    for i in 0..n {
        a[i * w..i * w + n].copy_from_slice(&data[i * n..(i + 1) * n]);
        a[i * w + n + i] = 1;
    }
    for col in 0..n {
        let piv = (col..n).find(|&r| a[r * w + col] != 0)?;
        if piv != col {
            for j in 0..w {
                a.swap(piv * w + j, col * w + j);
            }
        }
        let inv = field.inv(a[col * w + col]);
        for j in 0..w {
            a[col * w + j] = field.mul(a[col * w + j], inv);
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let c = a[r * w + col];
            if c != 0 {
                for j in 0..w {
                    let y = a[col * w + j];
                    a[r * w + j] ^= field.mul(c, y);
                }
            }
        }
    }
    let mut out = vec![0u32; n * n];
    for i in 0..n {
        out[i * n..(i + 1) * n].copy_from_slice(&a[i * w + n..(i + 1) * w]);
    }
    Some(out)
}

fn matmul(field: FieldSpec, a: &[u32], ar: usize, ac: usize, b: &[u32], bc: usize) -> Vec<u32> {
    let mut out = vec![0u32; ar * bc];
    for i in 0..ar {
        for k in 0..ac {
            let x = a[i * ac + k];
            if x == 0 {
                continue;
            }
            for j in 0..bc {
                out[i * bc + j] ^= field.mul(x, b[k * bc + j]);
            }
        }
    }
    out
}

// ---------------------------------------------------------------- constructions

/// Reed-Solomon code: message = coefficients of a polynomial of degree `< degree_bound`.
pub fn rs_code(field: FieldSpec, eval_points: &[u32], degree_bound: usize) -> Result<LinearCode, CodeError> {
    for (i, &a) in eval_points.iter().enumerate() {
        if !field.contains(a) {
            return Err(CodeError::BadSymbol(a));
        }
        if eval_points[..i].contains(&a) {
            return Err(CodeError::DuplicatePoints);
        }
    }
    if degree_bound == 0 || degree_bound > eval_points.len() {
        return Err(CodeError::DegreeBound { degree_bound, points: eval_points.len() });
    }
    let mut g = Vec::with_capacity(eval_points.len() * degree_bound);
    for &a in eval_points {
        let mut pw = 1u32;
        for _ in 0..degree_bound {
            g.push(pw);
            pw = field.mul(pw, a);
        }
    }
    LinearCode::build(
        field,
        eval_points.len(),
        degree_bound,
        g,
        None,
        CodeKind::ReedSolomon { points: eval_points.to_vec(), degree_bound },
    )
}

/// Exponent vectors of all monomials in `vars` variables with total degree `<= degree`.
pub fn monomials(vars: usize, degree: usize) -> Vec<Vec<usize>> {
    fn rec(vars: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == vars {
            out.push(cur.clone());
            return;
        }
        for e in 0..=left {
            cur.push(e);
            rec(vars, left - e, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(vars, degree, &mut Vec::new(), &mut out);
    out
}

/// Coordinates of RM point `index` (first coordinate most significant).
pub fn point_coords(q: u32, vars: usize, index: usize) -> Vec<u32> {
    let mut c = vec![0u32; vars];
    let mut rest = index;
    for slot in c.iter_mut().rev() {
        *slot = (rest % q as usize) as u32;
        rest /= q as usize;
    }
    c
}

pub fn point_index(q: u32, coords: &[u32]) -> usize {
    coords.iter().fold(0usize, |acc, &c| acc * q as usize + c as usize)
}

/// Reed-Muller code over all points of `F^vars`, made systematic on greedily chosen points.
pub fn rm_code(field: FieldSpec, vars: usize, degree: usize) -> Result<LinearCode, CodeError> {
    let q = field.size();
    if degree >= q as usize {
        return Err(CodeError::DegreeTooLarge { degree, q });
    }
    if vars == 0 {
        return Err(CodeError::Misaligned("Reed-Muller code needs at least one variable".into()));
    }
    let monos = monomials(vars, degree);
    let m = monos.len();
    let n = (q as usize).pow(vars as u32);
    let mut g = Vec::with_capacity(n * m);
    let mut pows = vec![vec![0u32; degree + 1]; vars];
    for idx in 0..n {
        let c = point_coords(q, vars, idx);
        for (v, &cv) in c.iter().enumerate() {
            let mut pw = 1u32;
            for slot in pows[v].iter_mut() {
                *slot = pw;
                pw = field.mul(pw, cv);
            }
        }
        for mono in &monos {
            let mut val = 1u32;
            for (v, &e) in mono.iter().enumerate() {
                val = field.mul(val, pows[v][e]);
            }
            g.push(val);
        }
    }
    let code = LinearCode::build(field, n, m, g, None, CodeKind::ReedMuller { vars, degree })?;
    code.systematize()
}

/// Binary simplex code on `bits` message bits, repeated `reps` times.
///
/// The first `bits` positions carry the message, so the code is systematic.
pub fn simplex_code(bits: usize, reps: usize) -> Result<LinearCode, CodeError> {
    if bits == 0 || bits > 16 || reps == 0 {
        return Err(CodeError::Misaligned(format!("simplex code needs 1..=16 bits, got {bits}")));
    }
    let mut cols: Vec<u32> = (0..bits).map(|a| 1u32 << (bits - 1 - a)).collect();
    for v in 1u32..(1 << bits) {
        if v.count_ones() > 1 {
            cols.push(v);
        }
    }
    let base = cols.len();
    let mut g = Vec::with_capacity(base * reps * bits);
    for _ in 0..reps {
        for &c in &cols {
            for a in 0..bits {
                g.push((c >> (bits - 1 - a)) & 1);
            }
        }
    }
    LinearCode::build(
        FieldSpec::binary(),
        base * reps,
        bits,
        g,
        Some((0..bits).collect()),
        CodeKind::Simplex { bits, reps },
    )
}

/// Concatenation: every outer symbol is split into coordinates over the inner field and inner-encoded.
pub fn concat(outer: LinearCode, inner: LinearCode) -> Result<LinearCode, CodeError> {
    let basis = SubfieldBasis::new(inner.field, outer.field)
        .map_err(|e| CodeError::Misaligned(e.to_string()))?;
    if basis.dim() != inner.msg_len {
        return Err(CodeError::Misaligned(format!(
            "outer symbols have {} inner coordinates but the inner code takes {}",
            basis.dim(),
            inner.msg_len
        )));
    }
    let e = basis.dim();
    let msg_len = outer.msg_len * e;
    let code_len = outer.code_len * inner.code_len;
    let systematic = match (&outer.systematic, &inner.systematic) {
        (Some(os), Some(is)) => Some(
            os.iter()
                .flat_map(|&p| is.iter().map(move |&c| p * inner.code_len + c))
                .collect(),
        ),
        _ => None,
    };
    Ok(LinearCode {
        field: inner.field,
        msg_len,
        code_len,
        generator: None,
        systematic,
        kind: CodeKind::Concatenated { outer: Box::new(outer), inner: Box::new(inner), basis },
        min_distance: OnceLock::new(),
    })
}

/// Systematic linear code over `field` with relative distance at least `1 - 1/|field| - eps`.
///
/// Outer Reed-Solomon code of rate at most `eps/2` over an extension field, concatenated with an
/// inner code found by seeded random search.
pub fn ecc_eps(field: FieldSpec, eps: f64, n: usize) -> Result<LinearCode, CodeError> {
    let seed = 0x5eed_0000_u64 ^ ((field.degree() as u64) << 40) ^ ((n as u64) << 8) ^ eps.to_bits().rotate_left(17);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ecc_eps_with_rng(field, eps, n, &mut rng)
}

pub fn ecc_eps_with_rng(field: FieldSpec, eps: f64, n: usize, rng: &mut impl Rng) -> Result<LinearCode, CodeError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(CodeError::InvalidEps(eps));
    }
    if n == 0 {
        return Err(CodeError::LengthMismatch { expected: 1, got: 0 });
    }
    let k = field.degree();
    let qs = field.size() as f64;
    let inner_target = (1.0 - 1.0 / qs) * (1.0 - eps / 2.0);
    // smallest extension that fits an outer RS code of rate <= eps/2
    let mut choice = None;
    for e in 1..=12u32 {
        let kb = k * e;
        if FieldSpec::gf2k(kb).is_err() {
            continue;
        }
        let n_out = n.div_ceil(e as usize);
        if n_out == 1 {
            choice = Some((e as usize, n_out, 1usize));
            break;
        }
        let m_out = (2.0 * n_out as f64 / eps).ceil() as usize;
        if m_out <= 1usize << kb {
            choice = Some((e as usize, n_out, m_out));
            break;
        }
    }
    let (e, n_out, m_out) = choice.ok_or(CodeError::SpaceTooLarge { log2: f64::INFINITY })?;
    let inner = search_inner(field, e, inner_target, rng)?;
    let code = if n_out == 1 {
        inner
    } else {
        let big = FieldSpec::gf2k(k * e as u32)?;
        let points: Vec<u32> = (0..m_out as u32).collect();
        let outer = rs_code(big, &points, n_out)?.systematize()?;
        concat(outer, inner)?
    };
    if code.msg_len == n {
        return Ok(code);
    }
    // shorten: only the first n message symbols are used
    let full = code.msg_len;
    let sys = code.systematic.as_ref().map(|s| s[..n].to_vec());
    LinearCode::from_encoder(field, n, code.code_len, sys, |msg| {
        let mut padded = msg.to_vec();
        padded.resize(full, 0);
        code.encode_unchecked(&padded)
    })
}

fn search_inner(field: FieldSpec, e: usize, target: f64, rng: &mut impl Rng) -> Result<LinearCode, CodeError> {
    let q = field.size();
    let mut tries = 0usize;
    let mut len = e;
    while tries < INNER_SEARCH_BUDGET && len <= 256 {
        let need = (target * len as f64 - 1e-9).ceil() as usize;
        if need <= len + 1 - e {
            let per_len = 2_000.min(INNER_SEARCH_BUDGET - tries);
            for _ in 0..per_len {
                tries += 1;
                let mut g = vec![0u32; len * e];
                for i in 0..e {
                    g[i * e + i] = 1;
                }
                for x in g.iter_mut().skip(e * e) {
                    *x = rng.gen_range(0..q);
                }
                let code = LinearCode::from_generator(field, len, e, g, Some((0..e).collect()));
                if let Ok(code) = code {
                    if let Ok(d) = min_distance_bruteforce(&code) {
                        if d >= need {
                            return Ok(code);
                        }
                    }
                }
            }
        }
        len += 1;
    }
    Err(CodeError::InnerSearchExhausted { budget: INNER_SEARCH_BUDGET })
}

// ---------------------------------------------------------------- distances

#[inline]
pub fn symbol_half_distance(w: Symbol, c: u32) -> u64 {
    match w {
        None => 1,
        Some(v) if v == c => 0,
        Some(_) => 2,
    }
}

/// Distance in half-symbol units.
pub fn half_distance(w: &[Symbol], c: &[u32]) -> u64 {
    w.iter().zip(c).map(|(&a, &b)| symbol_half_distance(a, b)).sum()
}

/// Relative distance, erasures counting one half.
pub fn relative_distance(w: &[Symbol], c: &[u32]) -> f64 {
    half_distance(w, c) as f64 / (2.0 * c.len() as f64)
}

pub fn to_word(c: &[u32]) -> Vec<Symbol> {
    c.iter().map(|&v| Some(v)).collect()
}

fn space_log2(code: &LinearCode) -> f64 {
    code.msg_len as f64 * code.field.degree() as f64
}

fn check_space(code: &LinearCode) -> Result<(), CodeError> {
    let log2 = space_log2(code);
    if log2 > BRUTE_FORCE_LIMIT_LOG2 as f64 {
        return Err(CodeError::SpaceTooLarge { log2 });
    }
    Ok(())
}

/// Walks every message in odometer order, keeping the codeword updated incrementally.
fn for_each_codeword(code: &LinearCode, mut visit: impl FnMut(&[u32], &[u32]) -> bool) -> Result<(), CodeError> {
    check_space(code)?;
    let f = code.field;
    let q = f.size();
    let cols = code.columns();
    let mut msg = vec![0u32; code.msg_len];
    let mut cw = vec![0u32; code.code_len];
    if !visit(&msg, &cw) {
        return Ok(());
    }
    loop {
        let mut i = 0;
        loop {
            if i == msg.len() {
                return Ok(());
            }
            let old = msg[i];
            let new = (old + 1) % q;
            msg[i] = new;
            let delta = old ^ new;
            for (x, &g) in cw.iter_mut().zip(&cols[i]) {
                *x ^= f.mul(delta, g);
            }
            if new != 0 {
                break;
            }
            i += 1;
        }
        if !visit(&msg, &cw) {
            return Ok(());
        }
    }
}

/// Exact nearest codeword; ties resolve to the first message in enumeration order.
pub fn nearest_codeword_bruteforce(code: &LinearCode, w: &[Symbol]) -> Result<(Vec<u32>, u64), CodeError> {
    if w.len() != code.code_len {
        return Err(CodeError::LengthMismatch { expected: code.code_len, got: w.len() });
    }
    let mut best = (Vec::new(), u64::MAX);
    for_each_codeword(code, |msg, cw| {
        let d = half_distance(w, cw);
        if d < best.1 {
            best = (msg.to_vec(), d);
        }
        true
    })?;
    Ok(best)
}

/// All messages whose codewords lie within `max_half` (half-symbol units) of `w`.
pub fn within_radius_bruteforce(code: &LinearCode, w: &[Symbol], max_half: u64) -> Result<Vec<Vec<u32>>, CodeError> {
    let mut out = Vec::new();
    for_each_codeword(code, |msg, cw| {
        if half_distance(w, cw) <= max_half {
            out.push(msg.to_vec());
        }
        true
    })?;
    Ok(out)
}

/// Exact minimum distance in symbols.
pub fn min_distance_bruteforce(code: &LinearCode) -> Result<usize, CodeError> {
    if let Some(&d) = code.min_distance.get() {
        return Ok(d);
    }
    let mut best = usize::MAX;
    let mut first = true;
    for_each_codeword(code, |_, cw| {
        if first {
            first = false;
            return true;
        }
        let wt = cw.iter().filter(|&&x| x != 0).count();
        best = best.min(wt);
        best > 1
    })?;
    let _ = code.min_distance.set(best);
    Ok(best)
}

// ---------------------------------------------------------------- decoding

/// Unique decoding up to half the designed distance.
///
/// Reed-Solomon codes use errors-and-erasures decoding, concatenations with a Reed-Solomon
/// outer code use GMD, anything else falls back to exhaustive nearest-codeword search.
pub fn unique_decode(code: &LinearCode, w: &[Symbol]) -> Result<Vec<u32>, CodeError> {
    if w.len() != code.code_len {
        return Err(CodeError::LengthMismatch { expected: code.code_len, got: w.len() });
    }
    let dist = code.designed_distance()? as u64;
    match &code.kind {
        CodeKind::ReedSolomon { points, degree_bound } => {
            let poly = rs_decode_erasures(code.field, points, w, *degree_bound).ok_or(CodeError::NoDecode)?;
            let cw: Vec<u32> = points.iter().map(|&a| poly.eval_raw(a)).collect();
            if half_distance(w, &cw) >= dist {
                return Err(CodeError::NoDecode);
            }
            code.message_of(&cw)
        }
        CodeKind::Concatenated { outer, inner, basis } if matches!(outer.kind, CodeKind::ReedSolomon { .. }) => {
            let CodeKind::ReedSolomon { points, degree_bound } = &outer.kind else { unreachable!() };
            let table = BlockTable::from_word(outer.field, inner, basis, w);
            let d_in = inner.designed_distance()?;
            let (poly, total) =
                gmd_decode(outer.field, points, *degree_bound, &table, d_in, dist).ok_or(CodeError::NoDecode)?;
            if total >= dist {
                return Err(CodeError::NoDecode);
            }
            let outer_cw: Vec<u32> = points.iter().map(|&a| poly.eval_raw(a)).collect();
            let om = outer.message_of(&outer_cw)?;
            Ok(om.iter().flat_map(|&s| basis.to_coords(s)).collect())
        }
        _ => {
            let (msg, d) = nearest_codeword_bruteforce(code, w)?;
            if d >= dist {
                return Err(CodeError::NoDecode);
            }
            Ok(msg)
        }
    }
}

/// Errors-and-erasures Reed-Solomon decoding (Gao). Returns the message polynomial if one of
/// degree `< k` agrees with the unerased positions up to half the residual distance.
pub fn rs_decode_erasures(field: FieldSpec, points: &[u32], received: &[Symbol], k: usize) -> Option<Poly> {
    let mut xs = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    for (&a, &r) in points.iter().zip(received) {
        if let Some(v) = r {
            xs.push(a);
            ys.push(v);
        }
    }
    gao_decode(field, &xs, &ys, k)
}

pub fn gao_decode(field: FieldSpec, xs: &[u32], ys: &[u32], k: usize) -> Option<Poly> {
    let n = xs.len();
    if n < k {
        return None;
    }
    let g0 = Poly::from_roots(field, xs);
    let g1 = Poly::interpolate_raw(field, xs, ys).ok()?;
    let (mut r_prev, mut r_cur) = (g0, g1);
    let (mut v_prev, mut v_cur) = (Poly::zero(field), Poly::new(field, vec![1]));
    while let Some(deg) = r_cur.degree() {
        if 2 * deg < n + k {
            break;
        }
        let (quot, rem) = r_prev.div_rem(&r_cur);
        let v_next = v_prev.add(&quot.mul(&v_cur));
        r_prev = std::mem::replace(&mut r_cur, rem);
        v_prev = std::mem::replace(&mut v_cur, v_next);
    }
    let (f, rem) = r_cur.div_rem(&v_cur);
    if !rem.is_zero() || f.degree().is_some_and(|d| d >= k) {
        return None;
    }
    Some(f)
}

/// Per-block half distances from a received word to the inner encoding of every outer symbol.
#[derive(Clone, Debug)]
pub struct BlockTable {
    pub q: usize,
    pub blocks: usize,
    pub half: Vec<u32>,
}

impl BlockTable {
    pub fn new(q: usize, blocks: usize) -> Self {
        BlockTable { q, blocks, half: vec![0; q * blocks] }
    }

    pub fn from_word(outer_field: FieldSpec, inner: &LinearCode, basis: &SubfieldBasis, w: &[Symbol]) -> Self {
        let q = outer_field.size() as usize;
        let n_in = inner.code_len;
        let blocks = w.len() / n_in;
        let encodings: Vec<Vec<u32>> =
            (0..q as u32).map(|a| inner.encode_unchecked(&basis.to_coords(a))).collect();
        let mut t = BlockTable::new(q, blocks);
        for b in 0..blocks {
            let blk = &w[b * n_in..(b + 1) * n_in];
            for (a, enc) in encodings.iter().enumerate() {
                t.half[b * q + a] = half_distance(blk, enc) as u32;
            }
        }
        t
    }

    #[inline]
    pub fn get(&self, block: usize, symbol: u32) -> u32 {
        self.half[block * self.q + symbol as usize]
    }

    pub fn row(&self, block: usize) -> &[u32] {
        &self.half[block * self.q..(block + 1) * self.q]
    }

    /// Total half distance of the outer word `symbols`.
    pub fn total(&self, symbols: &[u32]) -> u64 {
        symbols.iter().enumerate().map(|(b, &s)| self.get(b, s) as u64).sum()
    }
}

/// GMD decoding of a Reed-Solomon outer code (evaluation points `points`, degree `< k`) over
/// inner blocks described by `table`. Blocks are erased in order of decreasing inner distance;
/// every erasure count is tried. Returns the closest candidate found with its total half
/// distance, stopping early once a candidate falls below `stop_below`.
pub fn gmd_decode(
    field: FieldSpec,
    points: &[u32],
    k: usize,
    table: &BlockTable,
    inner_distance: usize,
    stop_below: u64,
) -> Option<(Poly, u64)> {
    let n = points.len();
    let mut best_sym = vec![0u32; n];
    let mut best_d = vec![0u32; n];
    for b in 0..n {
        let row = table.row(b);
        let (mut s, mut d) = (0u32, u32::MAX);
        for (a, &h) in row.iter().enumerate() {
            if h < d {
                d = h;
                s = a as u32;
            }
        }
        best_sym[b] = s;
        best_d[b] = d;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| best_d[b].cmp(&best_d[a]).then(a.cmp(&b)));
    // blocks at or beyond the inner unique radius are always erased
    let forced = order.iter().take_while(|&&b| best_d[b] as usize >= inner_distance).count();
    let mut best: Option<(Poly, u64)> = None;
    let mut tried_clean = false;
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for s in 0..=n.saturating_sub(k) {
        if s < forced && tried_clean {
            continue;
        }
        tried_clean = true;
        xs.clear();
        ys.clear();
        for &b in &order[s..] {
            xs.push(points[b]);
            ys.push(best_sym[b]);
        }
        if let Some(f) = gao_decode(field, &xs, &ys, k) {
            let total: u64 = points.iter().enumerate().map(|(b, &a)| table.get(b, f.eval_raw(a)) as u64).sum();
            if best.as_ref().is_none_or(|(_, d)| total < *d) {
                let done = total < stop_below;
                best = Some((f, total));
                if done {
                    break;
                }
            }
        }
    }
    best
}

/// Every message of a concatenated code whose codeword lies within relative distance
/// `(1 - eps)/2` of `w`, found by enumerating the outer message space.
pub fn list_decode_concat(code: &LinearCode, w: &[Symbol], eps: f64) -> Result<Vec<Vec<u32>>, CodeError> {
    let CodeKind::Concatenated { outer, inner, basis } = &code.kind else {
        return Err(CodeError::Misaligned("list decoding expects a concatenated code".into()));
    };
    if w.len() != code.code_len {
        return Err(CodeError::LengthMismatch { expected: code.code_len, got: w.len() });
    }
    let max_half = ((1.0 - eps) * code.code_len as f64 + 1e-9).floor() as u64;
    let table = BlockTable::from_word(outer.field, inner, basis, w);
    let mut out = Vec::new();
    for_each_codeword(outer, |om, ocw| {
        if table.total(ocw) <= max_half {
            out.push(om.iter().flat_map(|&s| basis.to_coords(s)).collect());
        }
        true
    })?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gf(k: u32) -> FieldSpec {
        FieldSpec::gf2k(k).unwrap()
    }

    // independent oracle: enumerate messages and encode by evaluating polynomials directly
    fn rs_min_distance_oracle(f: FieldSpec, points: &[u32], k: usize) -> usize {
        let q = f.size();
        let total = (q as usize).pow(k as u32);
        let mut best = usize::MAX;
        for idx in 1..total {
            let mut c = vec![0u32; k];
            let mut r = idx;
            for slot in c.iter_mut() {
                *slot = (r % q as usize) as u32;
                r /= q as usize;
            }
            let wt = points.iter().filter(|&&a| f.eval(&c, a) != 0).count();
            best = best.min(wt);
        }
        best
    }

    #[test]
    fn rs_examples() {
        let f4 = gf(2);
        let code = rs_code(f4, &[0, 1, 2, 3], 2).unwrap();
        assert_eq!(code.encode(&[1, 1]).unwrap(), vec![1, 0, 3, 2]);
        assert_eq!(min_distance_bruteforce(&code).unwrap(), 3);
        assert_eq!(rs_min_distance_oracle(f4, &[0, 1, 2, 3], 2), 3);
        let f8 = gf(3);
        let pts: Vec<u32> = (1..8).collect();
        let code = rs_code(f8, &pts, 3).unwrap();
        assert_eq!(min_distance_bruteforce(&code).unwrap(), 5);
        assert_eq!(rs_min_distance_oracle(f8, &pts, 3), 5);
        let full = rs_code(f4, &[0, 1, 2, 3], 4).unwrap();
        assert_eq!(min_distance_bruteforce(&full).unwrap(), 1);
        assert_eq!(rs_code(f4, &[1, 1], 1).unwrap_err(), CodeError::DuplicatePoints);
    }

    #[test]
    fn rm_examples() {
        let code = rm_code(gf(2), 2, 1).unwrap();
        assert_eq!(code.msg_len(), 3);
        assert_eq!(code.code_len(), 16);
        assert_eq!(min_distance_bruteforce(&code).unwrap(), 12);
        let b = rm_code(FieldSpec::binary(), 2, 1).unwrap();
        assert_eq!((b.code_len(), b.msg_len()), (4, 3));
        assert_eq!(min_distance_bruteforce(&b).unwrap(), 2);
        // oracle: the 8 affine functions on F_2^2
        let mut weights = Vec::new();
        for c in 0..8u32 {
            let wt = (0..4u32)
                .filter(|p| {
                    let (x, y) = (p >> 1, p & 1);
                    ((c & 1) ^ ((c >> 1) & 1 & x) ^ ((c >> 2) & 1 & y)) == 1
                })
                .count();
            if c != 0 {
                weights.push(wt);
            }
        }
        assert_eq!(*weights.iter().min().unwrap(), 2);
        assert!(matches!(rm_code(gf(2), 2, 4), Err(CodeError::DegreeTooLarge { .. })));
    }

    #[test]
    fn rm_is_systematic() {
        let code = rm_code(gf(4), 2, 2).unwrap();
        let sys = code.systematic_positions().unwrap().to_vec();
        let msg: Vec<u32> = (0..code.msg_len() as u32).map(|i| (i * 7 + 3) % 16).collect();
        let cw = code.encode(&msg).unwrap();
        let back: Vec<u32> = sys.iter().map(|&p| cw[p]).collect();
        assert_eq!(back, msg);
    }

    #[test]
    fn concat_example() {
        let f4 = gf(2);
        let outer = rs_code(f4, &[0, 1, 2, 3], 2).unwrap();
        let inner = LinearCode::from_generator(FieldSpec::binary(), 3, 2, vec![1, 0, 0, 1, 1, 1], Some(vec![0, 1])).unwrap();
        let code = concat(outer, inner).unwrap();
        assert_eq!((code.code_len(), code.msg_len()), (12, 4));
        // oracle: enumerate the 16 messages through the component codes
        let d = min_distance_bruteforce(&code).unwrap();
        assert_eq!(d, 6);
        assert_eq!(code.encode(&[0, 0, 0, 0]).unwrap(), vec![0; 12]);
    }

    #[test]
    fn concat_identity_inner_is_outer() {
        let f = gf(4);
        let outer = rs_code(f, &(0..16).collect::<Vec<_>>(), 3).unwrap();
        let code = concat(outer.clone(), LinearCode::identity(f, 1)).unwrap();
        let msg = [3, 9, 14];
        assert_eq!(code.encode(&msg).unwrap(), outer.encode(&msg).unwrap());
    }

    #[test]
    fn concat_misaligned() {
        let outer = rs_code(gf(4), &[1, 2, 3], 2).unwrap();
        let inner = LinearCode::identity(FieldSpec::binary(), 3);
        assert!(matches!(concat(outer, inner), Err(CodeError::Misaligned(_))));
    }

    #[test]
    fn simplex_distance() {
        let s = simplex_code(4, 1).unwrap();
        assert_eq!(s.code_len(), 15);
        assert_eq!(min_distance_bruteforce(&s).unwrap(), 8);
        let s4 = simplex_code(4, 4).unwrap();
        assert_eq!(min_distance_bruteforce(&s4).unwrap(), 32);
        assert_eq!(s4.designed_distance().unwrap(), 32);
    }

    #[test]
    fn ecc_examples() {
        let c = ecc_eps(FieldSpec::binary(), 0.25, 4).unwrap();
        let d = min_distance_bruteforce(&c).unwrap() as f64 / c.code_len() as f64;
        assert!(d >= 0.25, "relative distance {d}");
        let f16 = gf(4);
        let c = ecc_eps(f16, 0.25, 4).unwrap();
        let d = min_distance_bruteforce(&c).unwrap() as f64 / c.code_len() as f64;
        assert!(d >= 1.0 - 1.0 / 16.0 - 0.25, "relative distance {d}");
        let one = ecc_eps(f16, 0.25, 1).unwrap();
        assert_eq!(one.msg_len(), 1);
        assert_eq!(min_distance_bruteforce(&one).unwrap(), one.code_len());
    }

    #[test]
    fn descriptor_round_trip() {
        let code = rm_code(gf(2), 2, 1).unwrap();
        let text = code.to_descriptor();
        let back = LinearCode::from_descriptor(&text).unwrap();
        let body = |t: &str| t.lines().skip(1).map(str::to_string).collect::<Vec<_>>();
        assert_eq!(body(&back.to_descriptor()), body(&text));
        assert!(text.starts_with("code kind=reed-muller field=2 modulus=7 msg_len=3 code_len=16"));
        let msg = [1, 2, 3];
        assert_eq!(back.encode(&msg).unwrap(), code.encode(&msg).unwrap());
    }

    #[test]
    fn gao_corrects_errors_and_erasures() {
        let f = gf(4);
        let pts: Vec<u32> = (1..16).collect();
        let code = rs_code(f, &pts, 5).unwrap();
        let msg = [7, 0, 3, 11, 2];
        let cw = code.encode(&msg).unwrap();
        let mut w = to_word(&cw);
        // d = 11: 3 errors + 4 erasures -> 2*3 + 4 = 10 < 11
        for &p in &[0usize, 5, 9] {
            w[p] = Some(w[p].unwrap() ^ 1);
        }
        for &p in &[1usize, 2, 3, 4] {
            w[p] = None;
        }
        assert_eq!(unique_decode(&code, &w).unwrap(), msg.to_vec());
    }
}
