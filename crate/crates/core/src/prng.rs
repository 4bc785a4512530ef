//! Pseudorandom baselines: MT19937, XORWOW and Philox-4x32-10.

use crate::error::{Error, Result};

/// SplitMix64 output function.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a tuple of words into one seed with [`splitmix64`].
///
/// Every per-replication seed in the crate comes from this function applied
/// to `(global seed, generator family, replication, ...)`, so runs are
/// reproducible across platforms.
pub fn derive_seed(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(0x6A09_E667_F3BC_C908, |h, &p| splitmix64(h ^ splitmix64(p)))
}

/// Maps a 32-bit word to `(w + 0.5) / 2^32`, strictly inside `(0, 1)`.
#[inline]
pub fn word_to_uniform(w: u32) -> f64 {
    (w as f64 + 0.5) * (1.0 / 4_294_967_296.0)
}

const MT_N: usize = 624;
const MT_M: usize = 397;
const MT_MATRIX_A: u32 = 0x9908_B0DF;
const MT_UPPER: u32 = 0x8000_0000;
const MT_LOWER: u32 = 0x7FFF_FFFF;

/// The MT19937 Mersenne twister.
#[derive(Clone)]
pub struct Mt19937 {
    state: [u32; MT_N],
    cursor: usize,
}

impl Mt19937 {
    /// Standard `init_genrand` seeding.
    pub fn new(seed: u32) -> Self {
        let mut state = [0u32; MT_N];
        state[0] = seed;
        for i in 1..MT_N {
            let prev = state[i - 1];
            state[i] = 1_812_433_253u32
                .wrapping_mul(prev ^ (prev >> 30))
                .wrapping_add(i as u32);
        }
        Mt19937 { state, cursor: MT_N }
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    fn twist(&mut self) {
        for i in 0..MT_N {
            let y = (self.state[i] & MT_UPPER) | (self.state[(i + 1) % MT_N] & MT_LOWER);
            let mut v = self.state[(i + MT_M) % MT_N] ^ (y >> 1);
            if y & 1 != 0 {
                v ^= MT_MATRIX_A;
            }
            self.state[i] = v;
        }
        self.cursor = 0;
    }

    #[inline]
    pub fn next_u32(&mut self) -> u32 {
        if self.cursor >= MT_N {
            self.twist();
        }
        let mut y = self.state[self.cursor];
        self.cursor += 1;
        y ^= y >> 11;
        y ^= (y << 7) & 0x9D2C_5680;
        y ^= (y << 15) & 0xEFC6_0000;
        y ^ (y >> 18)
    }
}

impl std::fmt::Debug for Mt19937 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Mt19937").field("cursor", &self.cursor).finish_non_exhaustive()
    }
}

/// Marsaglia's xorwow: a five-word xorshift plus a Weyl counter.
#[derive(Debug, Clone)]
pub struct Xorwow {
    words: [u32; 5],
    counter: u32,
}

impl Xorwow {
    const WEYL: u32 = 362_437;

    /// Expands `seed` into five xorshift words through SplitMix64.
    pub fn new(seed: u64) -> Result<Self> {
        let a = splitmix64(seed);
        let b = splitmix64(a);
        let c = splitmix64(b);
        let words = [a as u32, (a >> 32) as u32, b as u32, (b >> 32) as u32, c as u32];
        Self::from_words(words, 0)
    }

    pub fn from_words(words: [u32; 5], counter: u32) -> Result<Self> {
        if words.iter().all(|&w| w == 0) {
            return Err(Error::invalid("xorwow state must not be all zero"));
        }
        Ok(Xorwow { words, counter })
    }

    #[inline]
    pub fn next_u32(&mut self) -> u32 {
        let [x, y, z, w, v] = self.words;
        let t = x ^ (x >> 2);
        let v_new = (v ^ (v << 4)) ^ (t ^ (t << 1));
        self.words = [y, z, w, v, v_new];
        self.counter = self.counter.wrapping_add(Self::WEYL);
        v_new.wrapping_add(self.counter)
    }
}

/// Counter and key of one Philox invocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PhiloxInput {
    pub counter: [u32; 4],
    pub key: [u32; 2],
}

const PHILOX_M0: u32 = 0xD251_1F53;
const PHILOX_M1: u32 = 0xCD9E_8D57;
const PHILOX_W0: u32 = 0x9E37_79B9;
const PHILOX_W1: u32 = 0xBB67_AE85;

#[inline(always)]
fn mulhilo(a: u32, b: u32) -> (u32, u32) {
    let p = a as u64 * b as u64;
    ((p >> 32) as u32, p as u32)
}

/// Philox-4x32 with 10 rounds: a pure function of `(counter, key)`.
#[inline]
pub fn philox4x32_10(counter: [u32; 4], key: [u32; 2]) -> [u32; 4] {
    let mut c = counter;
    let mut k = key;
    for round in 0..10 {
        if round > 0 {
            k[0] = k[0].wrapping_add(PHILOX_W0);
            k[1] = k[1].wrapping_add(PHILOX_W1);
        }
        let (hi0, lo0) = mulhilo(PHILOX_M0, c[0]);
        let (hi1, lo1) = mulhilo(PHILOX_M1, c[2]);
        c = [hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0];
    }
    c
}

/// [`philox4x32_10`] on a [`PhiloxInput`].
pub fn philox_block(input: PhiloxInput) -> [u32; 4] {
    philox4x32_10(input.counter, input.key)
}
