//! Randomized quasi-Monte Carlo sequence generation and financial simulation.
//!
//! The crate is organised in four layers:
//!
//! * [`halton`]: van der Corput / Halton sequences in direct, Kakutani-recursive
//!   and digit-recursive form, including the random-start randomly-permuted
//!   Halton sequence (Rasrap).
//! * [`sobol`]: Sobol' sequences from Joe–Kuo direction numbers, counter-based
//!   and Gray-code forms, with random linear digit scrambling.
//! * [`prng`]: pseudorandom baselines (MT19937, XORWOW, Philox-4x32-10).
//! * [`models`]: a LIBOR market model caplet pricer and a mortgage-backed
//!   security present-value model.
//! * [`harness`]: independent replications, execution paradigms, statistics,
//!   throughput measurement and CSV reports.
//!
//! Every generator produces points in `[0, 1)^s`. Randomized generators are
//! rebuilt per replication from a seed, so that the `M` estimates of an
//! experiment are independent.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Streams expose an infallible `next` without being iterators.
#![allow(clippy::should_implement_trait)]

pub mod error;
pub mod halton;
pub mod harness;
pub mod models;
pub mod prng;
pub mod sobol;

pub use error::{Error, Result};

/// An `s`-dimensional point with coordinates in `[0, 1)`.
pub type Point = Vec<f64>;

pub use halton::{
    invert_radical, rasrap_counter, rasrap_init, vdc_direct, vdc_permuted_direct,
    DigitPermutation, HaltonConfig, KakutaniState, RasrapStream,
};
pub use harness::{
    assign_stride, bench_throughput, fit_slope, run_experiment, run_experiment_with, sample_std,
    write_report, ConvergenceReport, ExperimentConfig, GeneratorKind, Integrand, ModelKind, Paradigm,
    ReplicationResult,
};
pub use models::{
    black_caplet, bond_prices, caplet_discounted_payoff, init_libor, inv_normal,
    libor_euler_path, mbs_pv, spline_rate, LiborConfig, LiborPricer, MbsConfig, MbsModel, YieldCurve,
};
pub use prng::{philox4x32_10, philox_block, word_to_uniform, Mt19937, PhiloxInput, Xorwow};
pub use sobol::{
    load_direction_numbers, scramble_point, sobol_counter, sobol_randomize, ScrambleSet,
    SobolGrayState, SobolTable,
};
