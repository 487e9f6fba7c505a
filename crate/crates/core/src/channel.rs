//! Adversarial corruption under a hard error budget.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::codes::Symbol;
use crate::stream::StreamFile;

/// At most `⌊ρ m⌋` symbol errors, counted in half units so that erasures cost one half.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorBudget {
    pub rho: f64,
    pub m: usize,
    pub used_half: usize,
}

impl ErrorBudget {
    pub fn new(rho: f64, m: usize) -> Self {
        ErrorBudget { rho, m, used_half: 0 }
    }
    /// `⌊ρ m⌋`.
    pub fn limit(&self) -> usize {
        (self.rho * self.m as f64 + 1e-9).floor() as usize
    }
    pub fn remaining_half(&self) -> usize {
        2 * self.limit() - self.used_half
    }
    /// Spends `half` units if available.
    pub fn spend(&mut self, half: usize) -> bool {
        if half > self.remaining_half() {
            return false;
        }
        self.used_half += half;
        true
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttackStrategy {
    /// Exactly `⌊ρ m⌋` distinct uniformly random positions.
    UniformFlip,
    /// One contiguous run starting at a random offset.
    Burst,
    /// Every symbol of one copy of a repeated codeword, truncated to the budget.
    CopyKill { copy_len: usize, copy: usize },
    /// Zeroes whole blocks whose output window is targeted; see [`blockzero_attack`].
    BlockzeroWindow { block_len: usize, window_step: usize, message_len: usize, targets: Vec<Vec<usize>> },
    /// Mixture of erasures (cost ½) and substitutions (cost 1).
    ErasureMix { erase_frac: f64 },
}

impl AttackStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            AttackStrategy::UniformFlip => "uniform_flip",
            AttackStrategy::Burst => "burst",
            AttackStrategy::CopyKill { .. } => "copy_kill",
            AttackStrategy::BlockzeroWindow { .. } => "blockzero_window",
            AttackStrategy::ErasureMix { .. } => "erasure_mix",
        }
    }
}

/// Result of corrupting a binary word.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Corruption {
    pub word: Vec<u8>,
    /// Hamming distance to the original.
    pub flips: usize,
    pub limit: usize,
}

impl Corruption {
    /// Positions that differ from the original, as a bit mask.
    pub fn mask(&self, original: &[u8]) -> Vec<u8> {
        original.iter().zip(&self.word).map(|(a, b)| a ^ b).collect()
    }
}

/// Corruption mask as a bit-packed stream file.
pub fn export_mask(mask: &[u8]) -> Vec<u8> {
    StreamFile::bits(mask.len(), mask).to_bytes()
}

pub fn apply_mask(word: &[u8], mask: &[u8]) -> Vec<u8> {
    word.iter().zip(mask).map(|(a, b)| a ^ b).collect()
}

pub fn corrupt<R: Rng + ?Sized>(word: &[u8], strategy: &AttackStrategy, rho: f64, rng: &mut R) -> Corruption {
    let m = word.len();
    let mut budget = ErrorBudget::new(rho, m);
    let limit = budget.limit();
    let mut out = word.to_vec();
    match strategy {
        AttackStrategy::UniformFlip => {
            for i in sample(rng, m, limit.min(m)) {
                out[i] ^= 1;
            }
        }
        AttackStrategy::Burst => {
            let len = limit.min(m);
            let start = if m > len { rng.gen_range(0..=m - len) } else { 0 };
            for b in &mut out[start..start + len] {
                *b ^= 1;
            }
        }
        AttackStrategy::CopyKill { copy_len, copy } => {
            let start = (copy * copy_len).min(m);
            let end = (start + copy_len).min(m).min(start + limit);
            for b in &mut out[start..end] {
                *b ^= 1;
            }
        }
        AttackStrategy::BlockzeroWindow { block_len, window_step, message_len, targets } => {
            out = blockzero_attack(word, *block_len, *window_step, *message_len, targets, &mut budget, rng);
        }
        AttackStrategy::ErasureMix { erase_frac } => {
            // a bit stream cannot carry ⊥: an erased bit is replaced by a fresh random bit
            let order = sample(rng, m, m);
            let mut spent = 0;
            for i in order {
                if spent == limit {
                    break;
                }
                let new = if rng.gen_bool(*erase_frac) { rng.gen_range(0..2u8) } else { word[i] ^ 1 };
                if new != word[i] {
                    out[i] = new;
                    spent += 1;
                }
            }
        }
    }
    let flips = out.iter().zip(word).filter(|(a, b)| a != b).count();
    assert!(flips <= limit, "attack exceeded its budget");
    Corruption { word: out, flips, limit }
}

/// Zeroes whole blocks of `block_len` bits. A start `j` is drawn uniformly from `[0, n/2)`;
/// block `i` is assigned the window `[j + w i, j + w (i + 1))` of message indices and is zeroed
/// when `targets[i]` (indices the decoder is estimated to output while reading block `i`) covers
/// at least half of that window. Blocks whose zeroing would overrun the budget are skipped and
/// the last block is never touched.
pub fn blockzero_attack<R: Rng + ?Sized>(
    word: &[u8],
    block_len: usize,
    window_step: usize,
    message_len: usize,
    targets: &[Vec<usize>],
    budget: &mut ErrorBudget,
    rng: &mut R,
) -> Vec<u8> {
    let mut out = word.to_vec();
    if block_len == 0 {
        return out;
    }
    let blocks = word.len() / block_len;
    let j = rng.gen_range(0..(message_len / 2).max(1));
    for i in 0..blocks.saturating_sub(1) {
        let lo = j + window_step * i;
        let hi = lo + window_step;
        let covered = targets
            .get(i)
            .map_or(0, |s| s.iter().filter(|&&x| x >= lo && x < hi).count());
        if window_step == 0 || 2 * covered < window_step {
            continue;
        }
        let blk = &mut out[i * block_len..(i + 1) * block_len];
        let cost = blk.iter().filter(|&&b| b == 1).count();
        if budget.spend(2 * cost) {
            blk.iter_mut().for_each(|b| *b = 0);
        }
    }
    out
}

/// Corrupts a word over an alphabet of `q` symbols; erasures cost half a symbol error.
pub fn corrupt_symbols<R: Rng + ?Sized>(word: &[u32], q: u32, erase_frac: f64, rho: f64, rng: &mut R) -> (Vec<Symbol>, usize) {
    let m = word.len();
    let mut budget = ErrorBudget::new(rho, m);
    let mut out: Vec<Symbol> = word.iter().map(|&s| Some(s)).collect();
    for i in sample(rng, m, m) {
        if budget.remaining_half() == 0 {
            break;
        }
        if budget.remaining_half() == 1 || rng.gen_bool(erase_frac) {
            budget.spend(1);
            out[i] = None;
        } else {
            budget.spend(2);
            out[i] = Some(word[i] ^ rng.gen_range(1..q));
        }
    }
    (out, budget.used_half)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn strategies(m: usize) -> Vec<AttackStrategy> {
        vec![
            AttackStrategy::UniformFlip,
            AttackStrategy::Burst,
            AttackStrategy::CopyKill { copy_len: m / 4, copy: 1 },
            AttackStrategy::BlockzeroWindow { block_len: m / 4, window_step: 4, message_len: 16, targets: vec![(0..16).collect(); 4] },
            AttackStrategy::ErasureMix { erase_frac: 0.5 },
        ]
    }

    #[test]
    fn zero_rho_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w: Vec<u8> = (0..400).map(|i| (i % 3 == 0) as u8).collect();
        for s in strategies(400) {
            assert_eq!(corrupt(&w, &s, 0.0, &mut rng).word, w);
        }
    }

    #[test]
    fn uniform_flip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w = vec![0u8; 10_000];
        assert_eq!(corrupt(&w, &AttackStrategy::UniformFlip, 0.05, &mut rng).flips, 500);
    }

    #[test]
    fn copy_kill_truncates() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = vec![1u8; 1200];
        let c = corrupt(&w, &AttackStrategy::CopyKill { copy_len: 100, copy: 0 }, 0.1, &mut rng);
        assert_eq!(c.flips, 100);
        assert!(c.word[..100].iter().all(|&b| b == 0));
        let c = corrupt(&w, &AttackStrategy::CopyKill { copy_len: 100, copy: 0 }, 0.05, &mut rng);
        assert_eq!(c.flips, 60);
    }

    #[test]
    fn blockzero_charges_popcount() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let w: Vec<u8> = (0..40).map(|i| (i % 2) as u8).collect();
        let mut b = ErrorBudget::new(0.5, 40);
        let out = blockzero_attack(&w, 10, 100, 2, &[(0..100).collect()], &mut b, &mut rng);
        assert_eq!(out.iter().zip(&w).filter(|(a, b)| a != b).count(), 5);
        let mut none = ErrorBudget::new(0.0, 40);
        assert_eq!(blockzero_attack(&w, 10, 100, 2, &[(0..100).collect()], &mut none, &mut rng), w);
    }

    #[test]
    fn masks_replay() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w: Vec<u8> = (0..64).map(|i| (i % 5 == 0) as u8).collect();
        let c = corrupt(&w, &AttackStrategy::UniformFlip, 0.1, &mut rng);
        let mask = c.mask(&w);
        let f = StreamFile::from_bytes(&export_mask(&mask)).unwrap();
        assert_eq!(apply_mask(&w, &f.to_bits()), c.word);
    }

    #[test]
    fn symbol_budget_counts_halves() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let w = vec![3u32; 101];
        let (out, used) = corrupt_symbols(&w, 16, 0.5, 0.1, &mut rng);
        assert!(used <= 20);
        let half: usize = out.iter().zip(&w).map(|(a, &b)| crate::codes::symbol_half_distance(*a, b) as usize).sum();
        assert_eq!(half, used);
    }
}
