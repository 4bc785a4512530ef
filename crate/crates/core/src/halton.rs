//! Van der Corput and Halton sequences.
//!
//! Three generation routes are provided for the (permuted) radical inverse:
//!
//! * direct evaluation of the `n`-th term ([`vdc_direct`], [`vdc_permuted_direct`],
//!   [`rasrap_counter`]), a pure function of the index;
//! * the von Neumann–Kakutani transformation ([`KakutaniState`]), whose orbit
//!   from zero is the van der Corput sequence;
//! * the digit-recursive update ([`RasrapStream`]) that keeps the base-`p`
//!   digits of the current index together with their partial sums, so each
//!   step touches only the digits changed by the carry.
//!
//! The random-start randomly-permuted Halton sequence (Rasrap) draws, per
//! dimension, a uniform start `ω` and a uniform digit permutation `σ`. The
//! start is turned into an index by inverting the radical inverse to a fixed
//! number of digits (see [`digit_capacity`]).

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::prng::derive_seed;
use crate::Point;

/// Largest number of base-`b` digits a `u64` index can have (base 2).
const MAX_DIGITS: usize = 64;

/// Snapping tolerance for the Kakutani interval search.
const KAKUTANI_TOL: f64 = 1e-24;

/// Returns the first `count` primes.
pub fn first_primes(count: usize) -> Vec<u32> {
    if count == 0 {
        return Vec::new();
    }
    // Rosser's bound p_n < n (ln n + ln ln n) for n >= 6.
    let limit = if count < 6 {
        15
    } else {
        let n = count as f64;
        (n * (n.ln() + n.ln().ln())).ceil() as usize + 1
    };
    let mut composite = vec![false; limit + 1];
    let mut primes = Vec::with_capacity(count);
    for i in 2..=limit {
        if composite[i] {
            continue;
        }
        primes.push(i as u32);
        if primes.len() == count {
            break;
        }
        let mut j = i * i;
        while j <= limit {
            composite[j] = true;
            j += i;
        }
    }
    primes
}

/// Smallest `K` with `base^K >= 2^32`.
///
/// Random starts are resolved to `K` digits, so every base gets the same
/// 32-bit budget and `|φ(n) - ω| <= base^-K`.
pub fn digit_capacity(base: u32) -> usize {
    assert!(base >= 2, "base must be at least 2");
    let mut k = 0;
    let mut power: u64 = 1;
    while power < 1 << 32 {
        power *= base as u64;
        k += 1;
    }
    k
}

/// `base^-(i+1)` for `i = 0..len`, by repeated division.
///
/// Both the direct and the recursive evaluators use this table so that they
/// agree bit for bit.
pub(crate) fn radix_weights(base: u32, len: usize) -> Vec<f64> {
    let p = base as f64;
    let mut w = Vec::with_capacity(len);
    let mut cur = 1.0 / p;
    for _ in 0..len {
        w.push(cur);
        cur /= p;
    }
    w
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// A bijection of the digit set `{0, ..., base-1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DigitPermutation {
    map: Vec<u32>,
}

impl DigitPermutation {
    pub fn new(map: Vec<u32>) -> Result<Self> {
        if map.len() < 2 {
            return Err(Error::invalid("a digit permutation needs base >= 2"));
        }
        let mut seen = vec![false; map.len()];
        for &d in &map {
            let slot = seen
                .get_mut(d as usize)
                .ok_or_else(|| Error::invalid(format!("digit {d} out of range for base {}", map.len())))?;
            if *slot {
                return Err(Error::invalid(format!("digit {d} appears twice")));
            }
            *slot = true;
        }
        Ok(DigitPermutation { map })
    }

    pub fn identity(base: u32) -> Self {
        assert!(base >= 2, "base must be at least 2");
        DigitPermutation {
            map: (0..base).collect(),
        }
    }

    /// Uniformly random permutation (Fisher–Yates shuffle).
    pub fn random<R: Rng + ?Sized>(base: u32, rng: &mut R) -> Self {
        let mut perm = Self::identity(base);
        perm.map.shuffle(rng);
        perm
    }

    pub fn base(&self) -> u32 {
        self.map.len() as u32
    }

    #[inline]
    pub fn apply(&self, digit: u32) -> u32 {
        self.map[digit as usize]
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.map
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(i, &d)| i as u32 == d)
    }
}

/// Base-`b` digits of `n`, least significant first, padded with zeros to
/// `min_digits`. Returns the digit count.
#[inline]
fn expand(n: u64, base: u32, min_digits: usize, digits: &mut [u32; MAX_DIGITS]) -> usize {
    let b = base as u64;
    let mut m = n;
    let mut len = 0;
    while m > 0 {
        digits[len] = (m % b) as u32;
        m /= b;
        len += 1;
    }
    for d in digits.iter_mut().take(min_digits).skip(len) {
        *d = 0;
    }
    len.max(min_digits)
}

/// `Σ σ(a_i) w_i`, summed from the most significant digit down, which is the
/// order the recursive partial sums use.
#[inline]
fn permuted_sum(n: u64, base: u32, map: &[u32], min_digits: usize, weights: &[f64]) -> f64 {
    let mut digits = [0u32; MAX_DIGITS];
    let len = expand(n, base, min_digits, &mut digits);
    let mut acc = 0.0;
    for i in (0..len).rev() {
        acc += map[digits[i] as usize] as f64 * weights[i];
    }
    acc
}

/// The `n`-th term of the van der Corput sequence in `base`.
pub fn vdc_direct(n: u64, base: u32) -> Result<f64> {
    if base < 2 {
        return Err(Error::invalid(format!("base must be at least 2, got {base}")));
    }
    let mut digits = [0u32; MAX_DIGITS];
    let len = expand(n, base, 0, &mut digits);
    let weights = radix_weights(base, len);
    let mut acc = 0.0;
    for i in (0..len).rev() {
        acc += digits[i] as f64 * weights[i];
    }
    Ok(acc)
}

/// The `n`-th term of the permuted van der Corput sequence.
///
/// `σ` is applied to the digits of `n` padded with leading zeros to at least
/// `digits` positions, so `σ(0)` contributes for every padded position.
pub fn vdc_permuted_direct(n: u64, base: u32, perm: &DigitPermutation, digits: usize) -> Result<f64> {
    if perm.base() != base {
        return Err(Error::invalid(format!(
            "permutation has length {} but base is {base}",
            perm.base()
        )));
    }
    if digits > MAX_DIGITS {
        return Err(Error::invalid(format!("at most {MAX_DIGITS} digits supported")));
    }
    let weights = radix_weights(base, MAX_DIGITS);
    Ok(permuted_sum(n, base, perm.as_slice(), digits, &weights))
}

/// Finds `n < base^digits` whose radical inverse agrees with the first
/// `digits` base-`b` digits of `omega`, so `|φ_b(n) - ω| <= b^-digits`.
pub fn invert_radical(omega: f64, base: u32, digits: usize) -> Result<u64> {
    if !(0.0..1.0).contains(&omega) {
        return Err(Error::invalid(format!("start {omega} is outside [0, 1)")));
    }
    if base < 2 {
        return Err(Error::invalid(format!("base must be at least 2, got {base}")));
    }
    if digits == 0 {
        return Err(Error::invalid("digit count must be at least 1"));
    }
    if (base as u64).checked_pow(digits as u32).is_none() {
        return Err(Error::invalid(format!("{base}^{digits} does not fit in 64 bits")));
    }
    // ω as an exact 64-bit binary fraction; the digit peel-off is then exact.
    const ONE: u128 = 1 << 64;
    let mut frac = (omega * ONE as f64) as u128;
    let b = base as u128;
    let mut n: u64 = 0;
    let mut place: u64 = 1;
    for i in 0..digits {
        let t = frac * b;
        let a = (t >> 64) as u64;
        frac = t & (ONE - 1);
        n += a * place;
        if i + 1 < digits {
            place *= base as u64;
        }
    }
    Ok(n)
}

/// `a + b` as an unevaluated sum `(s, e)` with `s = fl(a + b)`.
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// `num / den` to about twice double precision; `num` and `den` exact.
fn exact_quotient(num: f64, den: f64) -> (f64, f64) {
    let q = num / den;
    (q, (-q).mul_add(den, num) / den)
}

/// State of the von Neumann–Kakutani transformation `T_p`.
///
/// The point is carried as a double-double `x + lo`. In plain double
/// precision the orbit drifts by about one ulp per step, and after a few
/// thousand steps a point that should sit exactly on an interval boundary
/// lands on the wrong side of it.
#[derive(Debug, Clone)]
pub struct KakutaniState {
    base: u32,
    x: f64,
    lo: f64,
    ln_base: f64,
    /// `b_k = (p + 1 - p^k) / p^k`, `k = 1..`, as double-doubles.
    shifts: Vec<(f64, f64)>,
    /// `1 - p^-k`, `k = 1..`: upper end of the interval mapped with `b_k`.
    thresholds: Vec<(f64, f64)>,
}

impl KakutaniState {
    pub fn new(base: u32, x0: f64) -> Result<Self> {
        if base < 2 {
            return Err(Error::invalid(format!("base must be at least 2, got {base}")));
        }
        if !(0.0..1.0).contains(&x0) {
            return Err(Error::invalid(format!("start {x0} is outside [0, 1)")));
        }
        let p = base as f64;
        let mut shifts = Vec::new();
        let mut thresholds = Vec::new();
        let mut pk = p;
        // Tabulate while p^k is an exact double.
        while pk <= (1u64 << 53) as f64 {
            shifts.push(exact_quotient(p + 1.0 - pk, pk));
            thresholds.push(exact_quotient(pk - 1.0, pk));
            pk *= p;
        }
        Ok(KakutaniState {
            base,
            x: x0,
            lo: 0.0,
            ln_base: p.ln(),
            shifts,
            thresholds,
        })
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    /// `b_k` for `k >= 1`, rounded to double.
    pub fn shift(&self, k: usize) -> f64 {
        self.shifts[k - 1].0
    }

    /// Whether the current point is at or above `1 - p^-k`, up to the
    /// snapping tolerance.
    fn at_or_above(&self, k: usize) -> bool {
        let (th, tl) = self.thresholds[k - 1];
        (self.x - th) + (self.lo - tl) >= -KAKUTANI_TOL
    }

    /// The index `k` used for the current point: the floor formula, then
    /// corrected so that `x ∈ [1 - p^-(k-1), 1 - p^-k)`. The floor of a
    /// logarithm misplaces points that sit on an interval boundary.
    pub fn step_index(&self) -> usize {
        let kmax = self.shifts.len();
        let raw = (-(1.0 - self.x).ln() / self.ln_base).floor();
        let mut k = if raw.is_finite() && raw >= 0.0 {
            (raw as usize + 1).min(kmax)
        } else {
            kmax
        };
        while k < kmax && self.at_or_above(k) {
            k += 1;
        }
        while k > 1 && !self.at_or_above(k - 1) {
            k -= 1;
        }
        k
    }

    /// Applies `T_p` and returns the new point.
    pub fn next(&mut self) -> f64 {
        let k = self.step_index();
        let (sh, sl) = self.shifts[k - 1];
        let (s, e) = two_sum(self.x, sh);
        let (x, lo) = two_sum(s, e + self.lo + sl);
        if x < 0.0 {
            // A snapped boundary point lands a rounding error below zero.
            self.x = 0.0;
            self.lo = 0.0;
        } else if x >= 1.0 {
            self.x = 1.0 - f64::EPSILON / 2.0;
            self.lo = 0.0;
        } else {
            self.x = x;
            self.lo = lo;
        }
        self.x
    }
}

/// Digit-recursive random-start permuted van der Corput stream.
///
/// Holds the digits `a_0..a_K` of the current index and the partial sums
/// `S_j = Σ_{i>=j} σ(a_i) / p^(i+1)`; the current term is `S_0`.
#[derive(Debug, Clone)]
pub struct RasrapStream {
    base: u32,
    perm: DigitPermutation,
    start_index: u64,
    index: u64,
    digits: Vec<u32>,
    /// One longer than `digits`; the last entry is always zero.
    partial_sums: Vec<f64>,
    weights: Vec<f64>,
}

impl RasrapStream {
    /// Initialises the stream at `start_index`, with `capacity` digit
    /// positions (grown on demand if the index outgrows them).
    pub fn new(base: u32, perm: DigitPermutation, start_index: u64, capacity: usize) -> Result<Self> {
        if perm.base() != base {
            return Err(Error::invalid(format!(
                "permutation has length {} but base is {base}",
                perm.base()
            )));
        }
        let mut buf = [0u32; MAX_DIGITS];
        let len = expand(start_index, base, capacity.max(1), &mut buf);
        let digits = buf[..len].to_vec();
        let weights = radix_weights(base, len);
        let mut partial_sums = vec![0.0; len + 1];
        for j in (0..len).rev() {
            partial_sums[j] = partial_sums[j + 1] + perm.apply(digits[j]) as f64 * weights[j];
        }
        Ok(RasrapStream {
            base,
            perm,
            start_index,
            index: start_index,
            digits,
            partial_sums,
            weights,
        })
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn perm(&self) -> &DigitPermutation {
        &self.perm
    }

    pub fn start_index(&self) -> u64 {
        self.start_index
    }

    /// Index of the current term.
    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn digits(&self) -> &[u32] {
        &self.digits
    }

    pub fn partial_sums(&self) -> &[f64] {
        &self.partial_sums[..self.digits.len()]
    }

    /// The current term `S_0`.
    #[inline]
    pub fn current(&self) -> f64 {
        self.partial_sums[0]
    }

    /// Advances the index by one and returns the new term.
    #[inline]
    pub fn next(&mut self) -> f64 {
        let top = self.base - 1;
        let m = match self.digits.iter().position(|&a| a < top) {
            Some(m) => m,
            None => self.grow(),
        };
        let a = self.digits[m] + 1;
        self.digits[m] = a;
        self.partial_sums[m] = self.partial_sums[m + 1] + self.perm.apply(a) as f64 * self.weights[m];
        if m > 0 {
            let zero = self.perm.apply(0) as f64;
            for i in (0..m).rev() {
                self.digits[i] = 0;
                self.partial_sums[i] = self.partial_sums[i + 1] + zero * self.weights[i];
            }
        }
        self.index += 1;
        self.partial_sums[0]
    }

    /// Adds one digit position (the carry ran off the top).
    #[cold]
    fn grow(&mut self) -> usize {
        let len = self.digits.len();
        self.digits.push(0);
        self.partial_sums.push(0.0);
        let last = *self.weights.last().expect("at least one digit");
        self.weights.push(last / self.base as f64);
        len
    }
}

/// Bases, starts and digit permutations of a (randomized) Halton sequence.
#[derive(Debug, Clone)]
pub struct HaltonConfig {
    bases: Vec<u32>,
    starts: Vec<f64>,
    perms: Vec<DigitPermutation>,
    start_indices: Vec<u64>,
    capacities: Vec<usize>,
    weights: Vec<Vec<f64>>,
}

impl HaltonConfig {
    pub fn new(bases: Vec<u32>, starts: Vec<f64>, perms: Vec<DigitPermutation>) -> Result<Self> {
        let s = bases.len();
        if s == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        if starts.len() != s || perms.len() != s {
            return Err(Error::invalid(format!(
                "expected {s} starts and permutations, got {} and {}",
                starts.len(),
                perms.len()
            )));
        }
        for (i, &b) in bases.iter().enumerate() {
            if b < 2 {
                return Err(Error::invalid(format!("base {b} in dimension {i} is below 2")));
            }
            for &c in &bases[..i] {
                if gcd(b, c) != 1 {
                    return Err(Error::invalid(format!("bases {c} and {b} are not relatively prime")));
                }
            }
            if perms[i].base() != b {
                return Err(Error::invalid(format!(
                    "permutation {i} has length {} but base is {b}",
                    perms[i].base()
                )));
            }
        }
        let capacities: Vec<usize> = bases.iter().map(|&b| digit_capacity(b)).collect();
        let start_indices = bases
            .iter()
            .zip(&starts)
            .zip(&capacities)
            .map(|((&b, &w), &k)| invert_radical(w, b, k))
            .collect::<Result<Vec<_>>>()?;
        let weights = bases.iter().map(|&b| radix_weights(b, MAX_DIGITS)).collect();
        Ok(HaltonConfig {
            bases,
            starts,
            perms,
            start_indices,
            capacities,
            weights,
        })
    }

    /// The plain Halton sequence in the first `dimension` prime bases.
    pub fn halton(dimension: usize) -> Result<Self> {
        let bases = first_primes(dimension);
        let perms = bases.iter().map(|&b| DigitPermutation::identity(b)).collect();
        Self::new(bases, vec![0.0; dimension], perms)
    }

    /// Rasrap: a uniform random start and a uniform random permutation per
    /// dimension, drawn from a generator seeded by `(seed, dimension index)`.
    pub fn rasrap(dimension: usize, seed: u64) -> Result<Self> {
        let bases = first_primes(dimension);
        let mut starts = Vec::with_capacity(dimension);
        let mut perms = Vec::with_capacity(dimension);
        for (i, &b) in bases.iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[seed, i as u64]));
            starts.push(rng.random::<f64>());
            perms.push(DigitPermutation::random(b, &mut rng));
        }
        Self::new(bases, starts, perms)
    }

    pub fn dimension(&self) -> usize {
        self.bases.len()
    }

    pub fn bases(&self) -> &[u32] {
        &self.bases
    }

    pub fn starts(&self) -> &[f64] {
        &self.starts
    }

    pub fn perms(&self) -> &[DigitPermutation] {
        &self.perms
    }

    pub fn start_indices(&self) -> &[u64] {
        &self.start_indices
    }

    pub fn capacities(&self) -> &[usize] {
        &self.capacities
    }

    /// Writes point `index` (offset from the start indices) into `out`.
    #[inline]
    pub fn point_into(&self, index: u64, out: &mut [f64]) {
        for (i, x) in out.iter_mut().enumerate().take(self.bases.len()) {
            *x = permuted_sum(
                self.start_indices[i] + index,
                self.bases[i],
                self.perms[i].as_slice(),
                self.capacities[i],
                &self.weights[i],
            );
        }
    }

    /// One recursive stream per dimension, positioned at the start index.
    pub fn streams(&self) -> Vec<RasrapStream> {
        (0..self.dimension())
            .map(|i| {
                RasrapStream::new(self.bases[i], self.perms[i].clone(), self.start_indices[i], self.capacities[i])
                    .expect("validated configuration")
            })
            .collect()
    }

    /// Kakutani states started at the unpermuted radical inverse of each
    /// start index.
    pub fn kakutani_states(&self) -> Vec<KakutaniState> {
        self.bases
            .iter()
            .zip(&self.start_indices)
            .map(|(&b, &n)| {
                let x0 = vdc_direct(n, b).expect("validated base");
                KakutaniState::new(b, x0).expect("validated base")
            })
            .collect()
    }
}

/// Rasrap initialisation: one recursive stream per dimension.
pub fn rasrap_init(dimension: usize, seed: u64) -> Result<Vec<RasrapStream>> {
    Ok(HaltonConfig::rasrap(dimension, seed)?.streams())
}

/// Counter-based Rasrap point: coordinate `i` is
/// `φ_σi(start_i + index)` in base `b_i`.
pub fn rasrap_counter(index: u64, config: &HaltonConfig) -> Point {
    let mut p = vec![0.0; config.dimension()];
    config.point_into(index, &mut p);
    p
}
