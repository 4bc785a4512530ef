//! Generator families and their per-replication randomizations.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::halton::{HaltonConfig, KakutaniState, RasrapStream};
use crate::prng::{derive_seed, philox4x32_10, word_to_uniform, Mt19937, Xorwow};
use crate::sobol::{ScrambleSet, SobolGrayState, SobolTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GeneratorKind {
    Twister,
    Xorwow,
    Philox,
    RasrapRecursive,
    RasrapCounter,
    SobolGray,
    SobolCounter,
    Kakutani,
}

impl GeneratorKind {
    pub const ALL: [GeneratorKind; 8] = [
        GeneratorKind::Twister,
        GeneratorKind::Xorwow,
        GeneratorKind::Philox,
        GeneratorKind::RasrapRecursive,
        GeneratorKind::RasrapCounter,
        GeneratorKind::SobolGray,
        GeneratorKind::SobolCounter,
        GeneratorKind::Kakutani,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GeneratorKind::Twister => "twister",
            GeneratorKind::Xorwow => "xorwow",
            GeneratorKind::Philox => "philox",
            GeneratorKind::RasrapRecursive => "rasrap-recursive",
            GeneratorKind::RasrapCounter => "rasrap-counter",
            GeneratorKind::SobolGray => "sobol-gray",
            GeneratorKind::SobolCounter => "sobol-counter",
            GeneratorKind::Kakutani => "kakutani",
        }
    }

    /// Whether point `i` can be computed directly from `i`.
    pub fn is_counter_based(self) -> bool {
        matches!(
            self,
            GeneratorKind::Philox | GeneratorKind::RasrapCounter | GeneratorKind::SobolCounter
        )
    }

    pub fn is_sobol(self) -> bool {
        matches!(self, GeneratorKind::SobolGray | GeneratorKind::SobolCounter)
    }

    /// Randomization family. The recursive and counter forms of one
    /// construction share a family, so that with equal seeds they randomize
    /// identically and differ only in the order points are visited.
    pub fn family(self) -> u64 {
        match self {
            GeneratorKind::Twister => 1,
            GeneratorKind::Xorwow => 2,
            GeneratorKind::Philox => 3,
            GeneratorKind::RasrapRecursive | GeneratorKind::RasrapCounter => 4,
            GeneratorKind::SobolGray | GeneratorKind::SobolCounter => 5,
            GeneratorKind::Kakutani => 6,
        }
    }
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GeneratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GeneratorKind::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = GeneratorKind::ALL.iter().map(|g| g.name()).collect();
                Error::config(format!("unknown generator `{s}` (expected one of {})", names.join(", ")))
            })
    }
}

/// Seed of replication `m`: a mix of the global seed, the generator family
/// and `m`. Per-dimension seeds are derived from it further down.
pub fn replication_seed(seed: u64, kind: GeneratorKind, replication: u64) -> u64 {
    derive_seed(&[seed, kind.family(), replication])
}

#[derive(Debug, Clone)]
enum Randomization {
    Twister(u32),
    Xorwow(u64),
    Philox([u32; 2]),
    Halton(HaltonConfig),
    Sobol(SobolTable),
}

/// One independently randomized instance of a generator: immutable and
/// shareable, it hands out counter-based points or sequential streams.
#[derive(Debug, Clone)]
pub struct Replica {
    kind: GeneratorKind,
    dimension: usize,
    randomization: Randomization,
}

impl Replica {
    /// Randomizes `kind` for replication `m`. Sobol' kinds need the
    /// unscrambled table, of at least `dimension` dimensions.
    pub fn new(
        kind: GeneratorKind,
        dimension: usize,
        seed: u64,
        replication: u64,
        sobol: Option<&SobolTable>,
    ) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        let r = replication_seed(seed, kind, replication);
        let randomization = match kind {
            GeneratorKind::Twister => Randomization::Twister((r ^ (r >> 32)) as u32),
            GeneratorKind::Xorwow => Randomization::Xorwow(r),
            GeneratorKind::Philox => Randomization::Philox([r as u32, (r >> 32) as u32]),
            GeneratorKind::RasrapRecursive | GeneratorKind::RasrapCounter | GeneratorKind::Kakutani => {
                Randomization::Halton(HaltonConfig::rasrap(dimension, r)?)
            }
            GeneratorKind::SobolGray | GeneratorKind::SobolCounter => {
                let base = sobol.ok_or_else(|| Error::config("Sobol' generators need a direction-number table"))?;
                let table = if base.dimension() == dimension {
                    base.clone()
                } else {
                    base.truncated(dimension)?
                };
                Randomization::Sobol(table.with_scramble(ScrambleSet::random(dimension, r)))
            }
        };
        Ok(Replica {
            kind,
            dimension,
            randomization,
        })
    }

    pub fn kind(&self) -> GeneratorKind {
        self.kind
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Point `index` of a counter-based generator.
    #[inline]
    pub fn point_at(&self, index: u64, out: &mut [f64]) -> Result<()> {
        match (&self.randomization, self.kind) {
            (Randomization::Philox(key), _) => {
                philox_point(*key, index, out);
                Ok(())
            }
            (Randomization::Halton(config), GeneratorKind::RasrapCounter) => {
                config.point_into(index, out);
                Ok(())
            }
            (Randomization::Sobol(table), GeneratorKind::SobolCounter) => {
                let i = u32::try_from(index).map_err(|_| Error::Overflow(format!("Sobol' index {index}")))?;
                table.point_into(i, out);
                Ok(())
            }
            _ => Err(Error::config(format!("{} is not counter-based", self.kind))),
        }
    }

    /// A sequential stream starting at point 0.
    pub fn stream(&self) -> PointStream<'_> {
        let inner = match (&self.randomization, self.kind) {
            (Randomization::Twister(s), _) => StreamState::Twister(Box::new(Mt19937::new(*s))),
            (Randomization::Xorwow(s), _) => {
                StreamState::Xorwow(Xorwow::new(*s).expect("splitmix64 never yields five zero words"))
            }
            (Randomization::Halton(config), GeneratorKind::RasrapRecursive) => StreamState::Rasrap(config.streams()),
            (Randomization::Halton(config), GeneratorKind::Kakutani) => StreamState::Kakutani(config.kakutani_states()),
            (Randomization::Sobol(table), GeneratorKind::SobolGray) => StreamState::SobolGray(table, SobolGrayState::new(table)),
            _ => StreamState::Counter,
        };
        PointStream {
            replica: self,
            index: 0,
            inner,
        }
    }
}

/// Coordinates `4b..4b+3` of point `index` come from the Philox block with
/// counter `(b, index_lo, index_hi, 0)`.
#[inline]
fn philox_point(key: [u32; 2], index: u64, out: &mut [f64]) {
    let (lo, hi) = (index as u32, (index >> 32) as u32);
    for (b, chunk) in out.chunks_mut(4).enumerate() {
        let words = philox4x32_10([b as u32, lo, hi, 0], key);
        for (x, &w) in chunk.iter_mut().zip(&words) {
            *x = word_to_uniform(w);
        }
    }
}

#[derive(Debug)]
enum StreamState<'a> {
    Twister(Box<Mt19937>),
    Xorwow(Xorwow),
    Rasrap(Vec<RasrapStream>),
    Kakutani(Vec<KakutaniState>),
    SobolGray(&'a SobolTable, SobolGrayState),
    Counter,
}

/// Sequential access to a replica's points.
#[derive(Debug)]
pub struct PointStream<'a> {
    replica: &'a Replica,
    index: u64,
    inner: StreamState<'a>,
}

impl PointStream<'_> {
    /// Number of points produced so far.
    pub fn index(&self) -> u64 {
        self.index
    }

    /// Writes the next point into `out` (length = the replica's dimension).
    #[inline]
    pub fn next_into(&mut self, out: &mut [f64]) -> Result<()> {
        let first = self.index == 0;
        match &mut self.inner {
            StreamState::Twister(mt) => {
                for x in out.iter_mut() {
                    *x = word_to_uniform(mt.next_u32());
                }
            }
            StreamState::Xorwow(g) => {
                for x in out.iter_mut() {
                    *x = word_to_uniform(g.next_u32());
                }
            }
            StreamState::Rasrap(streams) => {
                for (x, s) in out.iter_mut().zip(streams.iter_mut()) {
                    *x = if first { s.current() } else { s.next() };
                }
            }
            StreamState::Kakutani(states) => {
                for (x, s) in out.iter_mut().zip(states.iter_mut()) {
                    *x = if first { s.x() } else { s.next() };
                }
            }
            StreamState::SobolGray(table, state) => state.next_into(table, out)?,
            StreamState::Counter => self.replica.point_at(self.index, out)?,
        }
        self.index += 1;
        Ok(())
    }
}
