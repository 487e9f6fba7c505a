//! Reed-Muller ∘ inner geometry shared by the binary and large-alphabet LDCs: point
//! arithmetic in `F_q^m`, random curves, query plans and per-curve decoding.

use std::cell::RefCell;

use rand::Rng;

use crate::codes::{gmd_decode, rm_code, symbol_half_distance, BlockTable, CodeError, LinearCode, Symbol};
use crate::gf::{FieldSpec, Poly, SubfieldBasis};

/// Random-access view of a (possibly corrupted) codeword.
pub trait Oracle {
    fn len(&self) -> usize;
    fn query(&self, index: usize) -> Symbol;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Oracle for [Symbol] {
    fn len(&self) -> usize {
        <[Symbol]>::len(self)
    }
    fn query(&self, index: usize) -> Symbol {
        self[index]
    }
}

impl Oracle for [u32] {
    fn len(&self) -> usize {
        <[u32]>::len(self)
    }
    fn query(&self, index: usize) -> Symbol {
        Some(self[index])
    }
}

impl Oracle for [u8] {
    fn len(&self) -> usize {
        <[u8]>::len(self)
    }
    fn query(&self, index: usize) -> Symbol {
        Some(self[index] as u32)
    }
}

impl Oracle for Vec<u8> {
    fn len(&self) -> usize {
        self.as_slice().len()
    }
    fn query(&self, index: usize) -> Symbol {
        Some(self[index] as u32)
    }
}

impl Oracle for Vec<Symbol> {
    fn len(&self) -> usize {
        self.as_slice().len()
    }
    fn query(&self, index: usize) -> Symbol {
        self[index]
    }
}

/// Values at a sorted set of positions, as collected from a stream.
#[derive(Clone, Debug, Default)]
pub struct SparseOracle {
    pub len: usize,
    pub positions: Vec<usize>,
    pub values: Vec<Symbol>,
}

impl SparseOracle {
    pub fn new(len: usize, positions: Vec<usize>) -> Self {
        let values = Vec::with_capacity(positions.len());
        SparseOracle { len, positions, values }
    }
}

impl Oracle for SparseOracle {
    fn len(&self) -> usize {
        self.len
    }
    /// Panics if `index` was never collected; decoders only ask for planned positions.
    fn query(&self, index: usize) -> Symbol {
        let at = self.positions.binary_search(&index).expect("query outside the collected plan");
        self.values[at]
    }
}

/// Oracle wrapper that logs every query, for non-adaptivity checks.
pub struct RecordingOracle<'a, O: Oracle + ?Sized> {
    inner: &'a O,
    log: RefCell<Vec<usize>>,
}

impl<'a, O: Oracle + ?Sized> RecordingOracle<'a, O> {
    pub fn new(inner: &'a O) -> Self {
        RecordingOracle { inner, log: RefCell::new(Vec::new()) }
    }
    pub fn queries(&self) -> Vec<usize> {
        self.log.borrow().clone()
    }
    pub fn distinct_queries(&self) -> usize {
        let mut q = self.log.borrow().clone();
        q.sort_unstable();
        q.dedup();
        q.len()
    }
}

impl<O: Oracle + ?Sized> Oracle for RecordingOracle<'_, O> {
    fn len(&self) -> usize {
        self.inner.len()
    }
    fn query(&self, index: usize) -> Symbol {
        self.log.borrow_mut().push(index);
        self.inner.query(index)
    }
}

/// Outcome of decoding the restriction of a word to one curve.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CurveOutcome {
    /// The restriction decoded; `symbol` is the outer symbol at the curve's base point and
    /// `half` the half distance of the restricted word to the decoded codeword.
    Decoded { symbol: u32, half: u64 },
    Failed,
}

/// Curves through one RM point, fixed before any query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockPlan {
    pub point: usize,
    /// For each curve, the RM points at `λ = 1, …, q-1`.
    pub curves: Vec<Vec<usize>>,
}

/// RM code over `F_q^m` concatenated with an inner code over the symbol field `K ⊆ F_q`.
#[derive(Clone, Debug)]
pub struct RmGeometry {
    pub small: FieldSpec,
    pub big: FieldSpec,
    pub basis: SubfieldBasis,
    pub vars: usize,
    pub degree: usize,
    pub rm: LinearCode,
    pub inner: LinearCode,
    inner_distance: usize,
    encodings: Vec<Vec<u32>>,
    // binary inner codes of length <= 128, one bit per position
    packed: Option<Vec<u128>>,
    lambdas: Vec<u32>,
}

fn pack_bits(block: &[Symbol]) -> Option<u128> {
    let mut w = 0u128;
    for (i, s) in block.iter().enumerate() {
        w |= ((*s)? as u128 & 1) << i;
    }
    Some(w)
}

impl RmGeometry {
    pub fn new(small: FieldSpec, big: FieldSpec, vars: usize, degree: usize, inner: LinearCode) -> Result<Self, CodeError> {
        let basis = SubfieldBasis::new(small, big).map_err(|e| CodeError::Misaligned(e.to_string()))?;
        if inner.field() != small || inner.msg_len() != basis.dim() {
            return Err(CodeError::Misaligned(format!(
                "inner code must map {} symbols of GF(2^{}) per outer symbol",
                basis.dim(),
                small.degree()
            )));
        }
        if inner.systematic_positions().is_none() {
            return Err(CodeError::NotSystematic);
        }
        let rm = rm_code(big, vars, degree)?;
        let inner_distance = inner.designed_distance()?;
        let encodings: Vec<Vec<u32>> = (0..big.size()).map(|a| inner.encode_unchecked(&basis.to_coords(a))).collect();
        let packed = (small.degree() == 1 && inner.code_len() <= 128).then(|| {
            encodings.iter().map(|e| pack_bits(&e.iter().map(|&b| Some(b)).collect::<Vec<_>>()).expect("no erasures")).collect()
        });
        let lambdas = (1..big.size()).collect();
        Ok(RmGeometry { small, big, basis, vars, degree, rm, inner, inner_distance, encodings, packed, lambdas })
    }

    pub fn q(&self) -> u32 {
        self.big.size()
    }
    pub fn n_in(&self) -> usize {
        self.inner.code_len()
    }
    pub fn points(&self) -> usize {
        self.rm.code_len()
    }
    pub fn code_len(&self) -> usize {
        self.points() * self.n_in()
    }
    pub fn inner_distance(&self) -> usize {
        self.inner_distance
    }
    /// Message length in symbols of `K`.
    pub fn msg_symbols(&self) -> usize {
        self.rm.msg_len() * self.basis.dim()
    }
    /// Curve parameters `λ ∈ F*`.
    pub fn lambdas(&self) -> &[u32] {
        &self.lambdas
    }
    /// Symbols of `K` read per curve.
    pub fn curve_len(&self) -> usize {
        self.lambdas.len() * self.n_in()
    }

    pub fn encode(&self, msg: &[u32]) -> Result<Vec<u32>, CodeError> {
        if msg.len() != self.msg_symbols() {
            return Err(CodeError::LengthMismatch { expected: self.msg_symbols(), got: msg.len() });
        }
        let outer_msg: Vec<u32> = msg.chunks(self.basis.dim()).map(|c| self.basis.from_coords(c)).collect();
        let outer = self.rm.encode(&outer_msg)?;
        let mut out = Vec::with_capacity(self.code_len());
        for s in outer {
            out.extend_from_slice(&self.encodings[s as usize]);
        }
        Ok(out)
    }

    /// RM point and in-block offset carrying message symbol `i`.
    pub fn message_target(&self, i: usize) -> (usize, usize) {
        let e = self.basis.dim();
        let point = self.rm.systematic_positions().expect("rm codes are systematic")[i / e];
        let offset = self.inner.systematic_positions().expect("checked at construction")[i % e];
        (point, offset)
    }

    pub fn codeword_target(&self, j: usize) -> (usize, usize) {
        (j / self.n_in(), j % self.n_in())
    }

    /// Symbol of `K` at `offset` within the inner encoding of outer symbol `alpha`.
    #[inline]
    pub fn symbol_at(&self, alpha: u32, offset: usize) -> u32 {
        self.encodings[alpha as usize][offset]
    }

    pub fn inner_encoding(&self, alpha: u32) -> &[u32] {
        &self.encodings[alpha as usize]
    }

    /// Outer symbol whose inner encoding is exactly `block`, if any.
    pub fn block_symbol(&self, block: &[u32]) -> Option<u32> {
        let sys = self.inner.systematic_positions()?;
        let coords: Vec<u32> = sys.iter().map(|&p| block[p]).collect();
        let alpha = self.basis.from_coords(&coords);
        (self.encodings[alpha as usize] == block).then_some(alpha)
    }

    pub fn coords(&self, point: usize) -> Vec<u32> {
        crate::codes::point_coords(self.q(), self.vars, point)
    }

    pub fn index(&self, coords: &[u32]) -> usize {
        crate::codes::point_index(self.q(), coords)
    }

    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        rng.gen_range(0..self.points())
    }

    /// Degree-2 curve `v0 + a1 λ + a2 λ²` with uniformly random `a1, a2`.
    pub fn random_curve<R: Rng + ?Sized>(&self, v0: usize, rng: &mut R) -> Vec<usize> {
        let f = self.big;
        let q = self.q();
        let base = self.coords(v0);
        let a1: Vec<u32> = (0..self.vars).map(|_| rng.gen_range(0..q)).collect();
        let a2: Vec<u32> = (0..self.vars).map(|_| rng.gen_range(0..q)).collect();
        let mut pt = vec![0u32; self.vars];
        self.lambdas
            .iter()
            .map(|&l| {
                let l2 = f.mul(l, l);
                for v in 0..self.vars {
                    pt[v] = base[v] ^ f.mul(a1[v], l) ^ f.mul(a2[v], l2);
                }
                self.index(&pt)
            })
            .collect()
    }

    /// The curve of degree `anchors.len()` with `γ(0) = v0` and `γ(λ_l) = p_l`.
    pub fn curve_through(&self, v0: usize, anchors: &[(u32, usize)]) -> Vec<usize> {
        let f = self.big;
        let mut xs = vec![0u32];
        xs.extend(anchors.iter().map(|a| a.0));
        let mut coord_polys = Vec::with_capacity(self.vars);
        let mut ys: Vec<Vec<u32>> = vec![self.coords(v0)];
        ys.extend(anchors.iter().map(|a| self.coords(a.1)));
        for v in 0..self.vars {
            let col: Vec<u32> = ys.iter().map(|c| c[v]).collect();
            coord_polys.push(Poly::interpolate_raw(f, &xs, &col).expect("anchor parameters are distinct"));
        }
        let mut pt = vec![0u32; self.vars];
        self.lambdas
            .iter()
            .map(|&l| {
                for (v, p) in coord_polys.iter().enumerate() {
                    pt[v] = p.eval_raw(l);
                }
                self.index(&pt)
            })
            .collect()
    }

    pub fn smooth_plan<R: Rng + ?Sized>(&self, point: usize, curves: usize, rng: &mut R) -> BlockPlan {
        BlockPlan { point, curves: (0..curves).map(|_| self.random_curve(point, rng)).collect() }
    }

    /// Codeword indices of every block on the given curves, sorted and distinct.
    pub fn block_queries<'a>(&self, curves: impl IntoIterator<Item = &'a Vec<usize>>) -> Vec<usize> {
        let n_in = self.n_in();
        let mut pts: Vec<usize> = curves.into_iter().flatten().copied().collect();
        pts.sort_unstable();
        pts.dedup();
        pts.iter().flat_map(|&p| p * n_in..(p + 1) * n_in).collect()
    }

    /// Half distances from the blocks along `curve` to the inner encoding of every outer symbol.
    pub fn curve_table<O: Oracle + ?Sized>(&self, curve: &[usize], oracle: &O) -> BlockTable {
        let q = self.q() as usize;
        let n_in = self.n_in();
        let mut table = BlockTable::new(q, curve.len());
        let mut block: Vec<Symbol> = vec![None; n_in];
        for (b, &p) in curve.iter().enumerate() {
            for (c, slot) in block.iter_mut().enumerate() {
                *slot = oracle.query(p * n_in + c);
            }
            let row = &mut table.half[b * q..(b + 1) * q];
            if let Some(packed) = &self.packed {
                if let Some(word) = pack_bits(&block) {
                    for (slot, &enc) in row.iter_mut().zip(packed) {
                        *slot = 2 * (word ^ enc).count_ones();
                    }
                    continue;
                }
            }
            for (a, enc) in self.encodings.iter().enumerate() {
                row[a] = block.iter().zip(enc).map(|(&w, &e)| symbol_half_distance(w, e) as u32).sum();
            }
        }
        table
    }

    /// GMD decoding of one curve restriction of degree `< degree_bound`; accepted only
    /// within half the designed distance.
    pub fn decode_curve(&self, table: &BlockTable, degree_bound: usize) -> CurveOutcome {
        let n = self.lambdas.len();
        if degree_bound > n {
            return CurveOutcome::Failed;
        }
        let radius = ((n + 1 - degree_bound) * self.inner_distance) as u64;
        match gmd_decode(self.big, &self.lambdas, degree_bound, table, self.inner_distance, radius) {
            Some((poly, half)) if half < radius => {
                CurveOutcome::Decoded { symbol: poly.coeffs().first().copied().unwrap_or(0), half }
            }
            _ => CurveOutcome::Failed,
        }
    }

    pub fn decode_plan<O: Oracle + ?Sized>(&self, plan: &BlockPlan, oracle: &O) -> Vec<CurveOutcome> {
        plan.curves
            .iter()
            .map(|c| self.decode_curve(&self.curve_table(c, oracle), 2 * self.degree + 1))
            .collect()
    }
}
