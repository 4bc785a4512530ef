//! Sobol' sequences from Joe–Kuo primitive polynomials and direction numbers.
//!
//! Direction numbers are held in 32-bit fixed point, `v_k = m_k << (32 - k)`,
//! and extended to all 32 bits at load time. A point's `j`-th coordinate is
//! the XOR of the `v_k^j` selected by the bits of the index (counter-based)
//! or, in Gray-code order, one XOR away from its predecessor.
//!
//! Randomization is a random linear scramble (lower-triangular bit matrix
//! with unit diagonal) followed by a random digital shift. The scramble is
//! linear over GF(2), so it is folded into the direction numbers once per
//! replication and generation costs nothing extra.

use std::io::BufRead;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::prng::derive_seed;
use crate::Point;

/// Number of bits per coordinate.
pub const BITS: usize = 32;

const TWO_POW_32: f64 = 4_294_967_296.0;

static JOE_KUO: &str = include_str!("../../../data/new-joe-kuo-6.1024");

/// A primitive polynomial `x^s + a_1 x^(s-1) + ... + a_(s-1) x + 1` over GF(2).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrimitivePolynomial {
    degree: u32,
    /// `a_1..a_(s-1)`, with `a_1` in the most significant of the `s - 1` bits
    /// (the Joe–Kuo `a` column).
    coeffs: u32,
}

impl PrimitivePolynomial {
    pub fn new(degree: u32, coeffs: u32) -> Result<Self> {
        if degree == 0 || degree as usize >= BITS {
            return Err(Error::invalid(format!("polynomial degree {degree} out of range")));
        }
        if coeffs >> (degree - 1) != 0 {
            return Err(Error::invalid(format!(
                "coefficient word {coeffs} has more than {} bits",
                degree - 1
            )));
        }
        Ok(PrimitivePolynomial { degree, coeffs })
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// Coefficient `a_j`, `1 <= j < s`.
    pub fn coeff(&self, j: u32) -> u32 {
        (self.coeffs >> (self.degree - 1 - j)) & 1
    }
}

/// Direction numbers of one dimension.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectionSet {
    poly: Option<PrimitivePolynomial>,
    /// `m_1..m_32`; `m_k` is odd and below `2^k`.
    m: [u32; BITS],
    /// `v_k = m_k * 2^(32-k)`.
    v: [u32; BITS],
}

impl DirectionSet {
    /// Dimension 1: `m_k = 1`, i.e. the van der Corput sequence in base 2.
    pub fn first() -> Self {
        let m = [1u32; BITS];
        Self::from_m(None, m)
    }

    /// Extends the initial values `m_1..m_s` with the recurrence
    /// `m_k = 2 a_1 m_(k-1) ^ 4 a_2 m_(k-2) ^ ... ^ 2^s m_(k-s) ^ m_(k-s)`.
    pub fn from_initial(poly: PrimitivePolynomial, initial: &[u32]) -> Result<Self> {
        let s = poly.degree() as usize;
        if initial.len() != s {
            return Err(Error::invalid(format!(
                "degree {s} needs {s} initial direction numbers, got {}",
                initial.len()
            )));
        }
        for (l, &ml) in initial.iter().enumerate() {
            let l = l + 1;
            if ml % 2 == 0 {
                return Err(Error::invalid(format!("m_{l} = {ml} is even")));
            }
            if ml as u64 >= 1u64 << l {
                return Err(Error::invalid(format!("m_{l} = {ml} is not below 2^{l}")));
            }
        }
        let mut m = [0u32; BITS];
        m[..s].copy_from_slice(initial);
        for k in s..BITS {
            m[k] = Self::recur(&poly, &m, k);
        }
        Ok(Self::from_m(Some(poly), m))
    }

    /// The recurrence for the zero-based slot `k >= s`.
    fn recur(poly: &PrimitivePolynomial, m: &[u32; BITS], k: usize) -> u32 {
        let s = poly.degree() as usize;
        let mut next = (m[k - s] as u64) ^ ((m[k - s] as u64) << s);
        for j in 1..s {
            if poly.coeff(j as u32) == 1 {
                next ^= (m[k - j] as u64) << j;
            }
        }
        next as u32
    }

    fn from_m(poly: Option<PrimitivePolynomial>, m: [u32; BITS]) -> Self {
        let mut v = [0u32; BITS];
        for k in 0..BITS {
            v[k] = m[k] << (BITS - 1 - k);
        }
        DirectionSet { poly, m, v }
    }

    pub fn polynomial(&self) -> Option<PrimitivePolynomial> {
        self.poly
    }

    /// `m_1..m_32`.
    pub fn m(&self) -> &[u32; BITS] {
        &self.m
    }

    /// `v_1..v_32` in 32-bit fixed point.
    pub fn v(&self) -> &[u32; BITS] {
        &self.v
    }

    /// Checks the recurrence for every `k > s`.
    pub fn satisfies_recurrence(&self) -> bool {
        match &self.poly {
            None => self.m.iter().all(|&x| x == 1),
            Some(p) => (p.degree() as usize..BITS).all(|k| self.m[k] == Self::recur(p, &self.m, k)),
        }
    }
}

/// Per-dimension linear scramble and digital shift.
///
/// `columns[b]` is the image of input bit `b`: bit `b` itself plus random
/// bits strictly below it. Output digit `j` therefore depends on input digits
/// `1..=j` only, and the matrix is unit lower-triangular in digit order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScrambleSet {
    columns: Vec<[u32; BITS]>,
    shifts: Vec<u32>,
}

impl ScrambleSet {
    pub fn identity(dimension: usize) -> Self {
        let mut col = [0u32; BITS];
        for (b, c) in col.iter_mut().enumerate() {
            *c = 1 << b;
        }
        ScrambleSet {
            columns: vec![col; dimension],
            shifts: vec![0; dimension],
        }
    }

    /// Random unit lower-triangular matrices and shifts, one per dimension.
    pub fn random(dimension: usize, seed: u64) -> Self {
        let mut columns = Vec::with_capacity(dimension);
        let mut shifts = Vec::with_capacity(dimension);
        for j in 0..dimension {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[seed, j as u64]));
            let mut col = [0u32; BITS];
            for (b, c) in col.iter_mut().enumerate() {
                let below = if b == 0 { 0 } else { rng.next_u32() & ((1u32 << b) - 1) };
                *c = (1 << b) | below;
            }
            columns.push(col);
            shifts.push(rng.next_u32());
        }
        ScrambleSet { columns, shifts }
    }

    /// Builds a scramble from explicit columns, checking the unit diagonal
    /// and the triangular shape.
    pub fn from_parts(columns: Vec<[u32; BITS]>, shifts: Vec<u32>) -> Result<Self> {
        if columns.len() != shifts.len() {
            return Err(Error::invalid("one shift per matrix is required"));
        }
        for col in &columns {
            for (b, &c) in col.iter().enumerate() {
                let upper = if b == BITS - 1 { 0 } else { c >> (b + 1) };
                if (c >> b) & 1 != 1 || upper != 0 {
                    return Err(Error::invalid(format!(
                        "column {b} must have a unit diagonal and nothing above it"
                    )));
                }
            }
        }
        Ok(ScrambleSet { columns, shifts })
    }

    pub fn dimension(&self) -> usize {
        self.shifts.len()
    }

    pub fn shifts(&self) -> &[u32] {
        &self.shifts
    }

    /// `L y` over GF(2) for dimension `j`.
    #[inline]
    pub fn linear(&self, j: usize, y: u32) -> u32 {
        let col = &self.columns[j];
        let mut z = 0;
        let mut bits = y;
        while bits != 0 {
            let b = bits.trailing_zeros() as usize;
            z ^= col[b];
            bits &= bits - 1;
        }
        z
    }
}

/// Applies `z = L y ⊕ e` coordinate-wise.
pub fn scramble_point(y: &[u32], scr: &ScrambleSet) -> Vec<u32> {
    y.iter()
        .enumerate()
        .map(|(j, &yj)| scr.linear(j, yj) ^ scr.shifts[j])
        .collect()
}

/// Direction numbers for `dimension` coordinates, with an optional scramble.
#[derive(Debug, Clone)]
pub struct SobolTable {
    directions: Vec<DirectionSet>,
    scramble: Option<ScrambleSet>,
    /// Direction numbers with the linear scramble folded in.
    effective: Vec<[u32; BITS]>,
    /// Digital shift per dimension (zero when unscrambled).
    shifts: Vec<u32>,
}

impl SobolTable {
    fn from_directions(directions: Vec<DirectionSet>) -> Self {
        let effective = directions.iter().map(|d| *d.v()).collect();
        let shifts = vec![0; directions.len()];
        SobolTable {
            directions,
            scramble: None,
            effective,
            shifts,
        }
    }

    /// The bundled Joe–Kuo table (1024 dimensions), truncated to `dimension`.
    pub fn joe_kuo(dimension: usize) -> Result<Self> {
        load_direction_numbers(JOE_KUO.as_bytes())?.truncated(dimension)
    }

    /// Keeps the first `dimension` coordinates.
    pub fn truncated(&self, dimension: usize) -> Result<Self> {
        if dimension == 0 || dimension > self.directions.len() {
            return Err(Error::invalid(format!(
                "dimension {dimension} outside 1..={} supported by the direction numbers",
                self.directions.len()
            )));
        }
        let table = Self::from_directions(self.directions[..dimension].to_vec());
        match &self.scramble {
            None => Ok(table),
            Some(s) => Ok(table.with_scramble(ScrambleSet {
                columns: s.columns[..dimension].to_vec(),
                shifts: s.shifts[..dimension].to_vec(),
            })),
        }
    }

    /// Replaces the scramble with `scramble`.
    pub fn with_scramble(&self, scramble: ScrambleSet) -> Self {
        assert_eq!(scramble.dimension(), self.dimension(), "scramble dimension mismatch");
        let effective = self
            .directions
            .iter()
            .enumerate()
            .map(|(j, d)| {
                let mut v = [0u32; BITS];
                for (k, vk) in v.iter_mut().enumerate() {
                    *vk = scramble.linear(j, d.v()[k]);
                }
                v
            })
            .collect();
        let shifts = scramble.shifts.clone();
        SobolTable {
            directions: self.directions.clone(),
            scramble: Some(scramble),
            effective,
            shifts,
        }
    }

    pub fn dimension(&self) -> usize {
        self.directions.len()
    }

    pub fn directions(&self) -> &[DirectionSet] {
        &self.directions
    }

    pub fn scramble(&self) -> Option<&ScrambleSet> {
        self.scramble.as_ref()
    }

    /// Integer coordinate `j` of point `index`: XOR of `v_k` over the set
    /// bits of the index, then the digital shift.
    #[inline]
    fn coordinate(&self, j: usize, index: u32) -> u32 {
        let v = &self.effective[j];
        let mut acc = self.shifts[j];
        let mut i = index;
        let mut k = 0;
        while i != 0 {
            if i & 1 == 1 {
                acc ^= v[k];
            }
            i >>= 1;
            k += 1;
        }
        acc
    }

    /// Integer coordinates of point `index` (scrambled if a scramble is set).
    pub fn integer_point_into(&self, index: u32, out: &mut [u32]) {
        for (j, y) in out.iter_mut().enumerate().take(self.dimension()) {
            *y = self.coordinate(j, index);
        }
    }

    /// Point `index` mapped to `[0, 1)`.
    #[inline]
    pub fn point_into(&self, index: u32, out: &mut [f64]) {
        for (j, x) in out.iter_mut().enumerate().take(self.dimension()) {
            *x = self.coordinate(j, index) as f64 / TWO_POW_32;
        }
    }
}

/// Parses the Joe–Kuo layout: a header line, then `d s a m_1 ... m_s` per
/// dimension starting at `d = 2`. Dimension 1 is the fixed `m_k = 1` set.
pub fn load_direction_numbers<R: BufRead>(source: R) -> Result<SobolTable> {
    let mut directions = vec![DirectionSet::first()];
    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let line = line.trim();
        if line.is_empty() || line_no == 1 && !line.starts_with(|c: char| c.is_ascii_digit()) {
            continue;
        }
        let fail = |message: String| Error::Parse { line: line_no, message };
        let fields = line
            .split_whitespace()
            .map(|t| t.parse::<u32>().map_err(|_| fail(format!("`{t}` is not a non-negative integer"))))
            .collect::<Result<Vec<_>>>()?;
        if fields.len() < 3 {
            return Err(fail("expected `d s a m_1 ... m_s`".into()));
        }
        let (d, s, a) = (fields[0], fields[1], fields[2]);
        if d as usize != directions.len() + 1 {
            return Err(fail(format!("expected dimension {}, found {d}", directions.len() + 1)));
        }
        if fields.len() != 3 + s as usize {
            return Err(fail(format!(
                "degree {s} needs {s} direction numbers, found {}",
                fields.len() - 3
            )));
        }
        let poly = PrimitivePolynomial::new(s, a).map_err(|e| fail(e.to_string()))?;
        let set = DirectionSet::from_initial(poly, &fields[3..]).map_err(|e| fail(e.to_string()))?;
        directions.push(set);
    }
    Ok(SobolTable::from_directions(directions))
}

/// Counter-based Sobol' point `index`.
pub fn sobol_counter(index: u32, table: &SobolTable) -> Point {
    let mut p = vec![0.0; table.dimension()];
    table.point_into(index, &mut p);
    p
}

/// A copy of `table` with a fresh scramble derived from `(seed, replication)`.
pub fn sobol_randomize(table: &SobolTable, seed: u64, replication: u64) -> SobolTable {
    table.with_scramble(ScrambleSet::random(table.dimension(), derive_seed(&[seed, replication])))
}

/// Gray-code (Antonov–Saleev) walk through the sequence.
///
/// The `k`-th point produced is the counter-based point with index
/// `k ^ (k >> 1)`, so every block `[0, 2^m)` is a permutation of the
/// counter-ordered block.
#[derive(Debug, Clone)]
pub struct SobolGrayState {
    index: u64,
    x: Vec<u32>,
}

impl SobolGrayState {
    pub fn new(table: &SobolTable) -> Self {
        SobolGrayState {
            index: 0,
            x: table.shifts.clone(),
        }
    }

    /// Number of points produced so far.
    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn integer_state(&self) -> &[u32] {
        &self.x
    }

    /// Writes the current point into `out`, then flips `v_c` with `c` the
    /// position of the lowest zero bit of the index.
    #[inline]
    pub fn next_into(&mut self, table: &SobolTable, out: &mut [f64]) -> Result<()> {
        if self.index >= 1 << BITS {
            return Err(Error::Overflow(format!("Sobol' index reached 2^{BITS}")));
        }
        for (o, &x) in out.iter_mut().zip(&self.x) {
            *o = x as f64 / TWO_POW_32;
        }
        let c = self.index.trailing_ones() as usize;
        if c < BITS {
            for (x, v) in self.x.iter_mut().zip(&table.effective) {
                *x ^= v[c];
            }
        }
        self.index += 1;
        Ok(())
    }

    /// [`next_into`](Self::next_into) returning a fresh point.
    pub fn next(&mut self, table: &SobolTable) -> Result<Point> {
        let mut p = vec![0.0; self.x.len()];
        self.next_into(table, &mut p)?;
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_table_loads() {
        let t = SobolTable::joe_kuo(1024).unwrap();
        assert_eq!(t.dimension(), 1024);
        assert!(t.directions().iter().all(DirectionSet::satisfies_recurrence));
        assert!(SobolTable::joe_kuo(1025).is_err());
    }

    #[test]
    fn first_dimension_is_powers_of_two() {
        let t = SobolTable::joe_kuo(1).unwrap();
        let v = t.directions()[0].v();
        assert_eq!(v[0], 1 << 31);
        assert_eq!(v[1], 1 << 30);
        assert_eq!(v[31], 1);
    }

    #[test]
    fn second_dimension_recurrence_by_hand() {
        // Degree 1, m_1 = 1: m_k = 2 m_(k-1) ^ m_(k-1).
        let t = SobolTable::joe_kuo(2).unwrap();
        let m = t.directions()[1].m();
        assert_eq!(&m[..5], &[1, 3, 5, 15, 17]);
    }

    #[test]
    fn parse_errors_name_the_line() {
        let src = "d s a m_i\n2 1 0 1\n3 2 1 1 4\n";
        match load_direction_numbers(src.as_bytes()) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("even"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
        let src = "d s a m_i\n2 1 0 1\n3 2 1 1 5\n";
        assert!(matches!(load_direction_numbers(src.as_bytes()), Err(Error::Parse { line: 3, .. })));
        let src = "d s a m_i\n2 1 0 x\n";
        assert!(matches!(load_direction_numbers(src.as_bytes()), Err(Error::Parse { line: 2, .. })));
        let src = "d s a m_i\n2 2 1 1\n";
        assert!(matches!(load_direction_numbers(src.as_bytes()), Err(Error::Parse { line: 2, .. })));
        let src = "d s a m_i\n3 1 0 1\n";
        assert!(matches!(load_direction_numbers(src.as_bytes()), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn counter_examples() {
        let t = SobolTable::joe_kuo(3).unwrap();
        assert_eq!(sobol_counter(0, &t), vec![0.0; 3]);
        assert_eq!(sobol_counter(1, &t)[0], 0.5);
        assert_eq!(sobol_counter(2, &t)[0], 0.25);
        assert_eq!(sobol_counter(3, &t)[0], 0.75);
        assert_eq!(sobol_counter(5, &t)[0], 0.625);
    }

    #[test]
    fn gray_walk_examples() {
        let t = SobolTable::joe_kuo(2).unwrap();
        let mut g = SobolGrayState::new(&t);
        let firsts: Vec<f64> = (0..4).map(|_| g.next(&t).unwrap()[0]).collect();
        assert_eq!(firsts, vec![0.0, 0.5, 0.75, 0.25]);

        let mut g = SobolGrayState::new(&t);
        g.next(&t).unwrap();
        let v1: Vec<u32> = t.directions().iter().map(|d| d.v()[0]).collect();
        assert_eq!(g.integer_state(), v1.as_slice());
    }

    #[test]
    fn gray_is_counter_at_gray_index() {
        let t = sobol_randomize(&SobolTable::joe_kuo(8).unwrap(), 3, 1);
        let mut g = SobolGrayState::new(&t);
        for k in 0u32..5000 {
            let p = g.next(&t).unwrap();
            assert_eq!(p, sobol_counter(k ^ (k >> 1), &t));
        }
    }

    #[test]
    fn gray_overflow_is_an_error() {
        let t = SobolTable::joe_kuo(1).unwrap();
        let mut g = SobolGrayState {
            index: (1 << 32) - 1,
            x: vec![0],
        };
        assert!(g.next(&t).is_ok());
        assert!(matches!(g.next(&t), Err(Error::Overflow(_))));
    }

    #[test]
    fn scramble_examples() {
        let id = ScrambleSet::identity(2);
        assert_eq!(scramble_point(&[7, 1 << 31], &id), vec![7, 1 << 31]);
        let shifted = ScrambleSet::from_parts(vec![[0; BITS]; 0], vec![]).unwrap();
        assert_eq!(shifted.dimension(), 0);
        let mut cols = ScrambleSet::identity(1).columns;
        let top = ScrambleSet::from_parts(cols.clone(), vec![1 << 31]).unwrap();
        let y = 0x1234_5678u32;
        let z = scramble_point(&[y], &top)[0];
        let dv = (z as f64 - y as f64) / TWO_POW_32;
        assert_eq!(dv.abs(), 0.5);
        cols[0][3] |= 1 << 4;
        assert!(ScrambleSet::from_parts(cols, vec![0]).is_err());
    }

    #[test]
    fn scramble_is_bijective_on_a_block() {
        let scr = ScrambleSet::random(1, 99);
        let mut out: Vec<u32> = (0u32..4096).map(|y| scramble_point(&[y << 20], &scr)[0]).collect();
        out.sort_unstable();
        out.dedup();
        assert_eq!(out.len(), 4096);
    }

    #[test]
    fn folded_scramble_matches_explicit_scramble() {
        let base = SobolTable::joe_kuo(16).unwrap();
        let t = sobol_randomize(&base, 12, 4);
        let scr = t.scramble().unwrap();
        let mut y = vec![0u32; 16];
        let mut z = vec![0u32; 16];
        for i in [0u32, 1, 2, 3, 77, 1023, 65_535, 4_000_000_000] {
            base.integer_point_into(i, &mut y);
            t.integer_point_into(i, &mut z);
            assert_eq!(scramble_point(&y, scr), z);
        }
    }

    #[test]
    fn randomize_is_deterministic_and_varies_with_replication() {
        let base = SobolTable::joe_kuo(4).unwrap();
        let a = sobol_randomize(&base, 5, 1);
        let b = sobol_randomize(&base, 5, 1);
        let c = sobol_randomize(&base, 5, 2);
        assert_eq!(a.scramble(), b.scramble());
        let sa = a.scramble().unwrap().shifts();
        let sc = c.scramble().unwrap().shifts();
        assert!(sa.iter().zip(sc).all(|(x, y)| x != y));
        for i in 0..1000 {
            assert!(sobol_counter(i, &a).iter().all(|x| (0.0..1.0).contains(x)));
        }
    }
}
