use std::hint::black_box;
use std::time::Instant;

use super::generator::{GeneratorKind, Replica};
use super::stats::median;
use crate::error::{Error, Result};
use crate::sobol::SobolTable;

/// Coordinates generated per second on the calling thread: the median of 5
/// runs. Meant for `count >= 10^7`.
pub fn bench_throughput(generator: GeneratorKind, dimension: usize, count: u64) -> Result<f64> {
    bench_throughput_runs(generator, dimension, count, 5)
}

/// [`bench_throughput`] with an explicit number of timed runs.
///
/// Each run generates `ceil(count / dimension)` points and folds every
/// coordinate into a sink, so no work can be optimised away. Randomization
/// and table loading happen before the clock starts.
pub fn bench_throughput_runs(generator: GeneratorKind, dimension: usize, count: u64, runs: usize) -> Result<f64> {
    if dimension == 0 || count == 0 || runs == 0 {
        return Err(Error::invalid("dimension, count and runs must be positive"));
    }
    let table = if generator.is_sobol() {
        Some(SobolTable::joe_kuo(dimension)?)
    } else {
        None
    };
    let replica = Replica::new(generator, dimension, 0, 0, table.as_ref())?;
    let points = count.div_ceil(dimension as u64);
    let numbers = (points * dimension as u64) as f64;
    let mut point = vec![0.0; dimension];
    let mut rates = Vec::with_capacity(runs);
    for _ in 0..runs {
        let mut stream = replica.stream();
        let mut sink = 0.0;
        let start = Instant::now();
        for _ in 0..points {
            stream.next_into(&mut point)?;
            for &x in &point {
                sink += x;
            }
        }
        let elapsed = start.elapsed().as_secs_f64();
        black_box(sink);
        rates.push(numbers / elapsed.max(1e-9));
    }
    Ok(median(&rates))
}
