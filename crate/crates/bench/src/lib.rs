//! Shared fixtures for the criterion benchmarks.

use rqmc_core::sobol::SobolTable;
use rqmc_core::GeneratorKind;

/// Dimensions benchmarked: the LIBOR path length and the MBS term.
pub const DIMENSIONS: [usize; 2] = [10, 360];

/// Generators compared in pairs (recursive form, counter form) plus the
/// pseudorandom baselines.
pub const GENERATORS: [GeneratorKind; 8] = GeneratorKind::ALL;

/// Unscrambled Sobol' table if `kind` needs one.
pub fn table_for(kind: GeneratorKind, dimension: usize) -> Option<SobolTable> {
    kind.is_sobol()
        .then(|| SobolTable::joe_kuo(dimension).expect("bundled table covers the benchmarked dimensions"))
}
