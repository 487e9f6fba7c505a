//! Fixtures shared by the criterion benches.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use streamcode_core::{corrupt, AttackStrategy, RepeatCodec, TensorCodec};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_bits(seed: u64, n: usize) -> Vec<u8> {
    let mut r = rng(seed);
    (0..n).map(|_| r.gen_range(0..2)).collect()
}

/// Message and its repeat encoding after uniform flips at rate `rho`.
pub fn corrupted_repeat_word(codec: &RepeatCodec, rho: f64, seed: u64) -> (Vec<u8>, Vec<u8>) {
    let x = random_bits(seed, codec.msg_len());
    let y = codec.encode(&x).expect("message length matches");
    let w = corrupt(&y, &AttackStrategy::UniformFlip, rho, &mut rng(seed ^ 1)).word;
    (x, w)
}

/// Message, functional and tensor encoding after uniform flips at rate `rho`.
pub fn corrupted_tensor_word(codec: &TensorCodec, rho: f64, seed: u64) -> (Vec<u8>, Vec<u8>, Vec<u8>) {
    let x = random_bits(seed, codec.msg_len());
    let ell = random_bits(seed ^ 2, codec.msg_len());
    let y = codec.encode_linear(&x).expect("message length matches");
    let w = corrupt(&y, &AttackStrategy::UniformFlip, rho, &mut rng(seed ^ 1)).word;
    (x, ell, w)
}
