//! Seed splitting: every random stream is `hash(seed, module_tag, index)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64-bit key for the stream `(seed, tag, index)`.
pub fn stream_key(seed: u64, tag: &str, index: u64) -> u64 {
    // FNV-1a over the tag, then mixed with seed and index.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    splitmix(splitmix(seed ^ splitmix(h)) ^ index)
}

pub fn stream(seed: u64, tag: &str, index: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(stream_key(seed, tag, index))
}

/// Radical inverse in base `b`, used for Halton points.
pub fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let inv = 1.0 / b as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % b) as f64;
        i /= b;
        f *= inv;
    }
    r
}

const PRIMES: [u64; 32] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
    97, 101, 103, 107, 109, 113, 127, 131,
];

/// `i`-th Halton point in `[0,1)^d`, with a per-seed index offset.
pub fn halton(i: u64, d: usize, offset: u64) -> Vec<f64> {
    (0..d)
        .map(|k| {
            let b = PRIMES[k % PRIMES.len()];
            let skip = (k / PRIMES.len()) as u64 * 7919;
            radical_inverse(i + 1 + offset + skip, b)
        })
        .collect()
}
