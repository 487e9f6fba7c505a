//! Arithmetic in binary extension fields GF(2^k) and univariate polynomials over them.
//!
//! Elements are packed into the low `k` bits of a `u32`, bit `i` holding the
//! coefficient of `x^i`. Multiplication goes through log/antilog tables that are
//! built once per distinct modulus and shared for the life of the process.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Mutex, OnceLock};

use thiserror::Error;

/// Largest supported extension degree.
pub const MAX_DEGREE: u32 = 16;

/// Moduli used when a field is requested by degree alone.
pub const STANDARD_MODULI: [(u32, u32); 8] = [
    (1, 0b11),
    (2, 0b111),
    (3, 0b1011),
    (4, 0b1_0011),
    (6, 0b100_0011),
    (8, 0x11b),
    (10, 0x409),
    (12, 0x1053),
];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GfError {
    /// No standard modulus is tabulated for this degree.
    #[error("no standard modulus for GF(2^{0})")]
    UnsupportedDegree(u32),
    /// The supplied modulus does not have the requested degree.
    #[error("modulus {modulus:#x} does not have degree {k}")]
    BadModulus { k: u32, modulus: u32 },
    /// The supplied modulus factors over GF(2).
    #[error("modulus {0:#x} is reducible")]
    Reducible(u32),
    /// Operands come from different fields.
    #[error("operands belong to different fields")]
    FieldMismatch,
    /// Inverse of zero requested.
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    /// Two interpolation points share an abscissa.
    #[error("duplicate abscissa in interpolation points")]
    DuplicateAbscissa,
    #[error("value {value:#x} does not fit in GF(2^{k})")]
    ValueOutOfRange { k: u32, value: u32 },
    #[error("cannot parse field element from {0:?}")]
    Parse(String),
    /// The smaller field does not embed in the larger one.
    #[error("GF(2^{small}) is not a subfield of GF(2^{big})")]
    NotSubfield { small: u32, big: u32 },
}

struct Tables {
    exp: Vec<u32>,
    log: Vec<u32>,
}

fn registry() -> &'static Mutex<HashMap<u32, &'static Tables>> {
    static REG: OnceLock<Mutex<HashMap<u32, &'static Tables>>> = OnceLock::new();
    REG.get_or_init(|| Mutex::new(HashMap::new()))
}

fn degree_of(p: u32) -> u32 {
    31 - p.leading_zeros()
}

/// Carry-less product reduced modulo `modulus`.
fn slow_mul(mut a: u32, mut b: u32, k: u32, modulus: u32) -> u32 {
    let mut acc = 0u32;
    let top = 1u32 << k;
    while b != 0 {
        if b & 1 == 1 {
            acc ^= a;
        }
        b >>= 1;
        a <<= 1;
        if a & top != 0 {
            a ^= modulus;
        }
    }
    acc
}

fn poly2_mod(mut a: u64, m: u64) -> u64 {
    let dm = 63 - m.leading_zeros();
    while a != 0 && 63 - a.leading_zeros() >= dm {
        let shift = (63 - a.leading_zeros()) - dm;
        a ^= m << shift;
    }
    a
}

/// Trial division by every polynomial of degree 1..=k/2.
fn is_irreducible(modulus: u32) -> bool {
    let k = degree_of(modulus);
    if k == 0 {
        return false;
    }
    for deg in 1..=k / 2 {
        for low in 0..(1u64 << deg) {
            let divisor = (1u64 << deg) | low;
            if poly2_mod(modulus as u64, divisor) == 0 {
                return false;
            }
        }
    }
    true
}

fn build_tables(k: u32, modulus: u32) -> Tables {
    let order = (1u32 << k) - 1;
    let mut exp = vec![0u32; 2 * order as usize];
    let mut log = vec![0u32; 1usize << k];
    if k == 1 {
        exp[0] = 1;
        exp[1] = 1;
        return Tables { exp, log };
    }
    // find a generator of the multiplicative group
    for g in 2..=order {
        let mut x = g;
        let mut period = 1;
        while x != 1 {
            x = slow_mul(x, g, k, modulus);
            period += 1;
        }
        if period == order {
            let mut x = 1u32;
            for slot in exp.iter_mut().take(order as usize) {
                *slot = x;
                x = slow_mul(x, g, k, modulus);
            }
            break;
        }
    }
    for i in 0..order as usize {
        exp[i + order as usize] = exp[i];
        log[exp[i] as usize] = i as u32;
    }
    Tables { exp, log }
}

fn tables_for(k: u32, modulus: u32) -> &'static Tables {
    let mut reg = registry().lock().expect("field table registry poisoned");
    reg.entry(modulus)
        .or_insert_with(|| Box::leak(Box::new(build_tables(k, modulus))))
}

/// Description of GF(2^k) by its modulus. Cheap to copy; arithmetic tables are shared.
#[derive(Clone, Copy)]
pub struct FieldSpec {
    k: u32,
    modulus: u32,
    tables: &'static Tables,
}

impl PartialEq for FieldSpec {
    fn eq(&self, other: &Self) -> bool {
        self.k == other.k && self.modulus == other.modulus
    }
}
impl Eq for FieldSpec {}

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF(2^{}; {:#x})", self.k, self.modulus)
    }
}

impl FieldSpec {
    /// GF(2^k) with the tabulated standard modulus.
    pub fn gf2k(k: u32) -> Result<Self, GfError> {
        let modulus = STANDARD_MODULI
            .iter()
            .find(|(d, _)| *d == k)
            .map(|(_, m)| *m)
            .ok_or(GfError::UnsupportedDegree(k))?;
        Self::with_modulus(k, modulus)
    }

    /// GF(2^k) defined by an explicit modulus, checked for irreducibility.
    pub fn with_modulus(k: u32, modulus: u32) -> Result<Self, GfError> {
        if k == 0 || k > MAX_DEGREE || degree_of(modulus.max(1)) != k {
            return Err(GfError::BadModulus { k, modulus });
        }
        if !is_irreducible(modulus) {
            return Err(GfError::Reducible(modulus));
        }
        Ok(FieldSpec { k, modulus, tables: tables_for(k, modulus) })
    }

    /// GF(2).
    pub fn binary() -> Self {
        Self::gf2k(1).expect("GF(2) is always available")
    }

    pub fn degree(&self) -> u32 {
        self.k
    }
    pub fn modulus(&self) -> u32 {
        self.modulus
    }
    pub fn size(&self) -> u32 {
        1 << self.k
    }
    pub fn is_binary(&self) -> bool {
        self.k == 1
    }

    #[inline]
    pub fn add(&self, a: u32, b: u32) -> u32 {
        a ^ b
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        if a == 0 || b == 0 {
            return 0;
        }
        let t = self.tables;
        t.exp[(t.log[a as usize] + t.log[b as usize]) as usize]
    }

    /// Inverse of a nonzero element; zero maps to zero.
    #[inline]
    pub fn inv(&self, a: u32) -> u32 {
        if a == 0 {
            return 0;
        }
        let order = self.size() - 1;
        let t = self.tables;
        t.exp[((order - t.log[a as usize]) % order) as usize]
    }

    #[inline]
    pub fn div(&self, a: u32, b: u32) -> u32 {
        self.mul(a, self.inv(b))
    }

    pub fn pow(&self, a: u32, e: u64) -> u32 {
        if e == 0 {
            return 1;
        }
        if a == 0 {
            return 0;
        }
        let order = (self.size() - 1) as u64;
        let t = self.tables;
        t.exp[((t.log[a as usize] as u64 * (e % order)) % order) as usize]
    }

    pub fn contains(&self, v: u32) -> bool {
        v < self.size()
    }

    pub fn elem(&self, value: u32) -> Result<FieldElem, GfError> {
        if !self.contains(value) {
            return Err(GfError::ValueOutOfRange { k: self.k, value });
        }
        Ok(FieldElem { value, field: *self })
    }

    pub fn zero(&self) -> FieldElem {
        FieldElem { value: 0, field: *self }
    }
    pub fn one(&self) -> FieldElem {
        FieldElem { value: 1, field: *self }
    }

    /// Number of hex digits in the serialized form.
    pub fn hex_width(&self) -> usize {
        self.k.div_ceil(4) as usize
    }

    pub fn to_hex(&self, v: u32) -> String {
        format!("{:0width$x}", v, width = self.hex_width())
    }

    pub fn parse_hex(&self, s: &str) -> Result<u32, GfError> {
        let v = u32::from_str_radix(s.trim(), 16).map_err(|_| GfError::Parse(s.to_string()))?;
        if !self.contains(v) {
            return Err(GfError::ValueOutOfRange { k: self.k, value: v });
        }
        Ok(v)
    }

    /// Evaluate a polynomial given low-to-high coefficients.
    #[inline]
    pub fn eval(&self, coeffs: &[u32], x: u32) -> u32 {
        let mut acc = 0;
        for &c in coeffs.iter().rev() {
            acc = self.mul(acc, x) ^ c;
        }
        acc
    }
}

/// An element of a specific field.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct FieldElem {
    value: u32,
    field: FieldSpec,
}

impl FieldElem {
    pub fn value(&self) -> u32 {
        self.value
    }
    pub fn field(&self) -> FieldSpec {
        self.field
    }
    pub fn is_zero(&self) -> bool {
        self.value == 0
    }
}

impl fmt::Debug for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.field.to_hex(self.value))
    }
}

impl fmt::Display for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.field.to_hex(self.value))
    }
}

fn same_field(a: &FieldElem, b: &FieldElem) -> Result<FieldSpec, GfError> {
    if a.field != b.field {
        return Err(GfError::FieldMismatch);
    }
    Ok(a.field)
}

pub fn field_add(a: FieldElem, b: FieldElem) -> Result<FieldElem, GfError> {
    let f = same_field(&a, &b)?;
    Ok(FieldElem { value: a.value ^ b.value, field: f })
}

pub fn field_mul(a: FieldElem, b: FieldElem) -> Result<FieldElem, GfError> {
    let f = same_field(&a, &b)?;
    Ok(FieldElem { value: f.mul(a.value, b.value), field: f })
}

pub fn field_inv(a: FieldElem) -> Result<FieldElem, GfError> {
    if a.value == 0 {
        return Err(GfError::ZeroInverse);
    }
    Ok(FieldElem { value: a.field.inv(a.value), field: a.field })
}

/// Polynomial with coefficients stored low-to-high. Never carries trailing zeros.
#[derive(Clone, PartialEq, Eq)]
pub struct Poly {
    field: FieldSpec,
    coeffs: Vec<u32>,
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coeffs.iter().map(|&c| self.field.to_hex(c)).collect();
        write!(f, "Poly[{}]", parts.join(" "))
    }
}

impl Poly {
    pub fn new(field: FieldSpec, mut coeffs: Vec<u32>) -> Self {
        trim(&mut coeffs);
        Poly { field, coeffs }
    }

    pub fn from_elems(coeffs: &[FieldElem]) -> Result<Self, GfError> {
        let Some(first) = coeffs.first() else {
            return Err(GfError::Parse("empty coefficient list".into()));
        };
        let field = first.field;
        if coeffs.iter().any(|c| c.field != field) {
            return Err(GfError::FieldMismatch);
        }
        Ok(Self::new(field, coeffs.iter().map(|c| c.value).collect()))
    }

    pub fn zero(field: FieldSpec) -> Self {
        Poly { field, coeffs: Vec::new() }
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn coeffs(&self) -> &[u32] {
        &self.coeffs
    }

    pub fn coefficient(&self, i: usize) -> FieldElem {
        FieldElem { value: self.coeffs.get(i).copied().unwrap_or(0), field: self.field }
    }

    /// Degree, with `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eval_raw(&self, x: u32) -> u32 {
        self.field.eval(&self.coeffs, x)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![0u32; n];
        for (i, &c) in self.coeffs.iter().enumerate() {
            out[i] ^= c;
        }
        for (i, &c) in other.coeffs.iter().enumerate() {
            out[i] ^= c;
        }
        Poly::new(self.field, out)
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero(self.field);
        }
        let f = self.field;
        let mut out = vec![0u32; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] ^= f.mul(a, b);
            }
        }
        Poly::new(f, out)
    }

    pub fn scale(&self, c: u32) -> Poly {
        let f = self.field;
        Poly::new(f, self.coeffs.iter().map(|&a| f.mul(a, c)).collect())
    }

    /// Quotient and remainder. Panics on division by the zero polynomial.
    pub fn div_rem(&self, divisor: &Poly) -> (Poly, Poly) {
        let f = self.field;
        let dd = divisor.degree().expect("division by zero polynomial");
        let lead_inv = f.inv(divisor.coeffs[dd]);
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return (Poly::zero(f), self.clone());
        }
        let mut quot = vec![0u32; rem.len() - dd];
        for i in (dd..rem.len()).rev() {
            let c = rem[i];
            if c == 0 {
                continue;
            }
            let factor = f.mul(c, lead_inv);
            quot[i - dd] = factor;
            for (j, &dc) in divisor.coeffs.iter().enumerate() {
                rem[i - dd + j] ^= f.mul(factor, dc);
            }
        }
        rem.truncate(dd);
        (Poly::new(f, quot), Poly::new(f, rem))
    }

    /// Product of (X - a) over the given roots.
    pub fn from_roots(field: FieldSpec, roots: &[u32]) -> Poly {
        let mut coeffs = vec![1u32];
        for &a in roots {
            let mut next = vec![0u32; coeffs.len() + 1];
            for (i, &c) in coeffs.iter().enumerate() {
                next[i + 1] ^= c;
                next[i] ^= field.mul(c, a);
            }
            coeffs = next;
        }
        Poly::new(field, coeffs)
    }

    /// Lagrange interpolation on raw values, Newton form.
    pub fn interpolate_raw(field: FieldSpec, xs: &[u32], ys: &[u32]) -> Result<Poly, GfError> {
        assert_eq!(xs.len(), ys.len());
        let n = xs.len();
        for i in 0..n {
            for j in 0..i {
                if xs[i] == xs[j] {
                    return Err(GfError::DuplicateAbscissa);
                }
            }
        }
        // divided differences
        let mut dd: Vec<u32> = ys.to_vec();
        for level in 1..n {
            for i in (level..n).rev() {
                let num = dd[i] ^ dd[i - 1];
                let den = xs[i] ^ xs[i - level];
                dd[i] = field.div(num, den);
            }
        }
        // expand Newton basis from the top
        let mut coeffs: Vec<u32> = Vec::with_capacity(n);
        for i in (0..n).rev() {
            // coeffs = coeffs * (X - xs[i]) + dd[i]
            let mut next = vec![0u32; coeffs.len() + 1];
            for (j, &c) in coeffs.iter().enumerate() {
                next[j + 1] ^= c;
                next[j] ^= field.mul(c, xs[i]);
            }
            next[0] ^= dd[i];
            coeffs = next;
        }
        Ok(Poly::new(field, coeffs))
    }
}

fn trim(c: &mut Vec<u32>) {
    while c.last() == Some(&0) {
        c.pop();
    }
}

pub fn poly_eval(p: &Poly, x: FieldElem) -> Result<FieldElem, GfError> {
    if p.field != x.field {
        return Err(GfError::FieldMismatch);
    }
    Ok(FieldElem { value: p.eval_raw(x.value), field: p.field })
}

pub fn poly_interpolate(points: &[(FieldElem, FieldElem)]) -> Result<Poly, GfError> {
    let Some(first) = points.first() else {
        return Err(GfError::Parse("no interpolation points".into()));
    };
    let field = first.0.field;
    if points.iter().any(|(x, y)| x.field != field || y.field != field) {
        return Err(GfError::FieldMismatch);
    }
    let xs: Vec<u32> = points.iter().map(|p| p.0.value).collect();
    let ys: Vec<u32> = points.iter().map(|p| p.1.value).collect();
    Poly::interpolate_raw(field, &xs, &ys)
}

/// GF(2^k) viewed inside GF(2^{k e}) together with a basis of the big field over the small one.
///
/// Coordinates are listed in basis order. When the small field is GF(2) the basis is
/// `x^{K-1}, ..., x, 1`, so coordinates are the bits of the element read most significant first.
#[derive(Clone, Debug)]
pub struct SubfieldBasis {
    small: FieldSpec,
    big: FieldSpec,
    e: usize,
    embed: Vec<u32>,
    basis: Vec<u32>,
    // big element -> packed coordinates (base |small|, first coordinate most significant)
    coords: Vec<u32>,
}

impl SubfieldBasis {
    pub fn new(small: FieldSpec, big: FieldSpec) -> Result<Self, GfError> {
        let (k, kb) = (small.degree(), big.degree());
        if kb % k != 0 {
            return Err(GfError::NotSubfield { small: k, big: kb });
        }
        let e = (kb / k) as usize;
        let embed: Vec<u32> = if k == 1 {
            vec![0, 1]
        } else if small == big {
            (0..small.size()).collect()
        } else {
            let beta = (2..big.size())
                .find(|&b| {
                    let mut acc = 0u32;
                    for i in (0..=k).rev() {
                        acc = big.mul(acc, b);
                        if (small.modulus() >> i) & 1 == 1 {
                            acc ^= 1;
                        }
                    }
                    acc == 0
                })
                .ok_or(GfError::NotSubfield { small: k, big: kb })?;
            (0..small.size())
                .map(|a| {
                    let mut v = 0u32;
                    let mut pw = 1u32;
                    for i in 0..k {
                        if (a >> i) & 1 == 1 {
                            v ^= pw;
                        }
                        pw = big.mul(pw, beta);
                    }
                    v
                })
                .collect()
        };
        let basis: Vec<u32> = if k == 1 {
            (0..kb).rev().map(|i| 1u32 << i).collect()
        } else {
            let mut chosen: Vec<u32> = Vec::new();
            let mut span = vec![false; big.size() as usize];
            span[0] = true;
            let mut members = vec![0u32];
            for cand in (0..kb).map(|i| 1u32 << i) {
                if chosen.len() == e {
                    break;
                }
                if span[cand as usize] {
                    continue;
                }
                let mut next = Vec::with_capacity(members.len() * small.size() as usize);
                for &m in &members {
                    for &s in &embed {
                        let v = m ^ big.mul(s, cand);
                        span[v as usize] = true;
                        next.push(v);
                    }
                }
                members = next;
                chosen.push(cand);
            }
            chosen
        };
        let q = small.size();
        let mut coords = vec![0u32; big.size() as usize];
        for packed in 0..big.size() {
            let mut v = 0u32;
            let mut rest = packed;
            for j in (0..e).rev() {
                let c = rest % q;
                rest /= q;
                v ^= big.mul(embed[c as usize], basis[j]);
            }
            coords[v as usize] = packed;
        }
        Ok(SubfieldBasis { small, big, e, embed, basis, coords })
    }

    pub fn small(&self) -> FieldSpec {
        self.small
    }
    pub fn big(&self) -> FieldSpec {
        self.big
    }
    /// Number of small-field coordinates per big-field element.
    pub fn dim(&self) -> usize {
        self.e
    }

    pub fn embed(&self, a: u32) -> u32 {
        self.embed[a as usize]
    }

    pub fn basis(&self) -> &[u32] {
        &self.basis
    }

    /// Coordinate `j` of a big-field element.
    #[inline]
    pub fn coord(&self, v: u32, j: usize) -> u32 {
        let q = self.small.size();
        let packed = self.coords[v as usize];
        (packed / q.pow((self.e - 1 - j) as u32)) % q
    }

    pub fn to_coords(&self, v: u32) -> Vec<u32> {
        (0..self.e).map(|j| self.coord(v, j)).collect()
    }

    pub fn from_coords(&self, c: &[u32]) -> u32 {
        let mut v = 0u32;
        for (j, &cj) in c.iter().enumerate() {
            v ^= self.big.mul(self.embed[cj as usize], self.basis[j]);
        }
        v
    }
}
