//! Independent replications under the two execution paradigms.
//!
//! Point `i` of a replication is credited to stripe `i mod S` (`S` =
//! [`STRIPES`]). Each stripe sums its payoffs in increasing index order and
//! the stripe sums are added in stripe order, so an estimate does not depend
//! on how many workers there are, nor on whether the stripes were walked one
//! after another or concurrently.
//!
//! The randomization of replication `m` depends only on the seed, the
//! generator family and `m`, so `θ_N` for the whole grid comes out of one
//! pass over the first `max N` points.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use super::generator::{GeneratorKind, Replica};
use super::integrand::{ConstantOne, FirstCoordinate, Integrand, ModelKind};
use super::report::{ConvergenceReport, ReportRow};
use super::stats::{fit_slope, mean, sample_std};
use crate::error::{Error, Result};
use crate::models::{LiborConfig, LiborPricer, MbsConfig, MbsModel};
use crate::sobol::SobolTable;

/// Number of index stripes ("virtual processors") a replication is split
/// into.
pub const STRIPES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Paradigm {
    /// Each worker runs whole replications with its own generator state.
    ReplicationParallel,
    /// Workers share one replication, each taking index stripes
    /// `{w, w + S, w + 2S, ...}` of a counter-based generator.
    StrideParallel,
}

impl Paradigm {
    pub fn name(self) -> &'static str {
        match self {
            Paradigm::ReplicationParallel => "replication-parallel",
            Paradigm::StrideParallel => "stride-parallel",
        }
    }
}

impl fmt::Display for Paradigm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Paradigm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "replication-parallel" => Ok(Paradigm::ReplicationParallel),
            "stride-parallel" => Ok(Paradigm::StrideParallel),
            _ => Err(Error::config(format!("unknown paradigm `{s}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub model: ModelKind,
    pub generator: GeneratorKind,
    /// Sample sizes, strictly increasing.
    pub n_grid: Vec<u64>,
    /// Replication count `M`.
    pub reps: usize,
    pub seed: u64,
    pub workers: usize,
    pub paradigm: Paradigm,
    pub libor: LiborConfig,
    pub mbs: MbsConfig,
    /// Dimension of the built-in test models.
    pub test_dimension: usize,
}

impl ExperimentConfig {
    /// Defaults: `N ∈ {2^10, ..., 2^18}`, `M = 50`, seed 0, one worker,
    /// replication-parallel.
    pub fn new(model: ModelKind, generator: GeneratorKind) -> Self {
        ExperimentConfig {
            model,
            generator,
            n_grid: power_grid(10, 18),
            reps: 50,
            seed: 0,
            workers: 1,
            paradigm: Paradigm::ReplicationParallel,
            libor: LiborConfig::default(),
            mbs: MbsConfig::default(),
            test_dimension: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() {
            return Err(Error::config("the N grid is empty"));
        }
        if self.n_grid[0] == 0 || self.n_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("the N grid must be positive and strictly increasing"));
        }
        if self.reps < 2 {
            return Err(Error::config(format!("at least 2 replications are needed, got {}", self.reps)));
        }
        if self.workers == 0 {
            return Err(Error::config("at least one worker is needed"));
        }
        if self.paradigm == Paradigm::StrideParallel && !self.generator.is_counter_based() {
            return Err(Error::config(format!(
                "{} is recursive; stride-parallel runs need a counter-based generator",
                self.generator
            )));
        }
        if self.generator.is_sobol() && self.max_n() > 1 << 32 {
            return Err(Error::config("Sobol' sample sizes are limited to 2^32"));
        }
        if self.test_dimension == 0 {
            return Err(Error::config("test model dimension must be at least 1"));
        }
        Ok(())
    }

    pub fn max_n(&self) -> u64 {
        self.n_grid.last().copied().unwrap_or(0)
    }
}

/// `{2^lo, ..., 2^hi}`.
pub fn power_grid(lo: u32, hi: u32) -> Vec<u64> {
    (lo..=hi).map(|k| 1u64 << k).collect()
}

/// Global index of the `k`-th point of worker `w` out of `W`: `w + kW`.
pub fn assign_stride(worker: u64, workers: u64, k: u64) -> u64 {
    debug_assert!(worker < workers);
    worker + k * workers
}

/// One replication's estimate at one sample size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicationResult {
    pub replication: usize,
    pub n: u64,
    pub estimate: f64,
    /// Seconds from the first point to the `N`-th, setup excluded.
    pub time_s: f64,
    /// Paths with a NaN payoff, left out of the estimate.
    pub invalid_paths: u64,
}

/// Builds the configured model and runs the experiment.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ConvergenceReport> {
    config.validate()?;
    match config.model {
        ModelKind::Libor => run_experiment_with(config, &LiborPricer::new(config.libor.clone())?),
        ModelKind::Mbs => run_experiment_with(config, &MbsModel::new(config.mbs.clone())?),
        ModelKind::Constant => run_experiment_with(
            config,
            &ConstantOne {
                dimension: config.test_dimension,
            },
        ),
        ModelKind::FirstCoordinate => run_experiment_with(
            config,
            &FirstCoordinate {
                dimension: config.test_dimension,
            },
        ),
    }
}

/// Runs `config` against an arbitrary integrand (`config.model` is ignored).
pub fn run_experiment_with(config: &ExperimentConfig, integrand: &dyn Integrand) -> Result<ConvergenceReport> {
    config.validate()?;
    let dim = integrand.dimension();
    let table = if config.generator.is_sobol() {
        Some(SobolTable::joe_kuo(dim)?)
    } else {
        None
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Model(format!("cannot start worker pool: {e}")))?;

    let replicate = |m: usize| -> Result<Vec<ReplicationResult>> {
        let replica = Replica::new(config.generator, dim, config.seed, m as u64, table.as_ref())?;
        let levels = match config.paradigm {
            Paradigm::ReplicationParallel => sequential_levels(&replica, integrand, &config.n_grid)?,
            Paradigm::StrideParallel => striped_levels(&replica, integrand, &config.n_grid)?,
        };
        finish(m, &config.n_grid, levels)
    };

    let per_rep = pool.install(|| -> Result<Vec<Vec<ReplicationResult>>> {
        match config.paradigm {
            Paradigm::ReplicationParallel => (0..config.reps).into_par_iter().map(replicate).collect(),
            Paradigm::StrideParallel => (0..config.reps).map(replicate).collect(),
        }
    })?;

    let mut rows = Vec::with_capacity(config.n_grid.len());
    for (g, &n) in config.n_grid.iter().enumerate() {
        let estimates: Vec<f64> = per_rep.iter().map(|r| r[g].estimate).collect();
        let times: Vec<f64> = per_rep.iter().map(|r| r[g].time_s).collect();
        let std = sample_std(&estimates)?;
        let time_s = mean(&times);
        rows.push(ReportRow {
            n,
            reps: config.reps,
            mean: mean(&estimates),
            std,
            time_s,
            efficiency: std * time_s,
            invalid_paths: per_rep.iter().map(|r| r[g].invalid_paths).sum(),
        });
    }
    let fit = fit_slope(&rows.iter().map(|r| (r.n as f64, r.std)).collect::<Vec<_>>()).ok();
    let replications = per_rep.into_iter().flatten().collect();
    Ok(ConvergenceReport {
        generator: config.generator,
        model: integrand.name().to_string(),
        reps: config.reps,
        rows,
        fit,
        replications,
    })
}

/// Stripe sums at one grid level.
#[derive(Debug, Clone)]
struct Level {
    sums: Vec<f64>,
    invalid: u64,
    time_s: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Stripe {
    sum: f64,
    invalid: u64,
}

impl Stripe {
    #[inline]
    fn add(&mut self, v: f64) {
        if v.is_nan() {
            self.invalid += 1;
        } else {
            self.sum += v;
        }
    }
}

/// Walks the replica's stream once, recording the stripe sums at each level.
fn sequential_levels(replica: &Replica, f: &dyn Integrand, grid: &[u64]) -> Result<Vec<Level>> {
    let mut point = vec![0.0; replica.dimension()];
    let mut stripes = [Stripe::default(); STRIPES];
    let mut stream = replica.stream();
    let mut levels = Vec::with_capacity(grid.len());
    let start = Instant::now();
    let mut i = 0u64;
    for &n in grid {
        while i < n {
            stream.next_into(&mut point)?;
            stripes[(i % STRIPES as u64) as usize].add(f.evaluate(&point));
            i += 1;
        }
        levels.push(Level {
            sums: stripes.iter().map(|s| s.sum).collect(),
            invalid: stripes.iter().map(|s| s.invalid).sum(),
            time_s: start.elapsed().as_secs_f64(),
        });
    }
    Ok(levels)
}

/// Evaluates the stripes concurrently on the current pool. Each stripe
/// reads points straight from the counter-based replica.
fn striped_levels(replica: &Replica, f: &dyn Integrand, grid: &[u64]) -> Result<Vec<Level>> {
    let start = Instant::now();
    let per_stripe: Vec<Vec<(Stripe, f64)>> = (0..STRIPES)
        .into_par_iter()
        .map(|s| -> Result<Vec<(Stripe, f64)>> {
            let mut point = vec![0.0; replica.dimension()];
            let mut acc = Stripe::default();
            let mut out = Vec::with_capacity(grid.len());
            let mut k = 0u64;
            for &n in grid {
                loop {
                    let i = assign_stride(s as u64, STRIPES as u64, k);
                    if i >= n {
                        break;
                    }
                    replica.point_at(i, &mut point)?;
                    acc.add(f.evaluate(&point));
                    k += 1;
                }
                out.push((acc, start.elapsed().as_secs_f64()));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok((0..grid.len())
        .map(|g| Level {
            sums: per_stripe.iter().map(|v| v[g].0.sum).collect(),
            invalid: per_stripe.iter().map(|v| v[g].0.invalid).sum(),
            time_s: per_stripe.iter().map(|v| v[g].1).fold(0.0, f64::max),
        })
        .collect())
}

/// Combines stripe sums in stripe order into the estimates.
fn finish(m: usize, grid: &[u64], levels: Vec<Level>) -> Result<Vec<ReplicationResult>> {
    grid.iter()
        .zip(levels)
        .map(|(&n, level)| {
            let valid = n - level.invalid;
            if valid == 0 {
                return Err(Error::Model(format!("replication {m}: all {n} paths were invalid")));
            }
            let total = level.sums.iter().fold(0.0, |a, b| a + b);
            let estimate = total / valid as f64;
            if !estimate.is_finite() {
                return Err(Error::Model(format!("replication {m}: non-finite estimate at N = {n}")));
            }
            Ok(ReplicationResult {
                replication: m,
                n,
                estimate,
                time_s: level.time_s,
                invalid_paths: level.invalid,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn config(model: ModelKind, generator: GeneratorKind) -> ExperimentConfig {
        ExperimentConfig {
            n_grid: vec![64, 256, 1024],
            reps: 4,
            seed: 17,
            ..ExperimentConfig::new(model, generator)
        }
    }

    #[test]
    fn stride_examples() {
        assert_eq!(assign_stride(0, 8, 0), 0);
        assert_eq!(assign_stride(3, 8, 2), 19);
    }

    #[test]
    fn constant_model_is_exact() {
        for g in GeneratorKind::ALL {
            let r = run_experiment(&config(ModelKind::Constant, g)).unwrap();
            for row in &r.rows {
                assert_eq!(row.mean, 1.0);
                assert_eq!(row.std, 0.0);
            }
            assert!(r.replications.iter().all(|x| x.estimate == 1.0));
            assert!(r.fit.is_none());
        }
    }

    #[test]
    fn rerun_is_bit_identical() {
        let c = config(ModelKind::Libor, GeneratorKind::RasrapRecursive);
        let a = run_experiment(&c).unwrap();
        let b = run_experiment(&c).unwrap();
        assert!(a.same_estimates(&b));
    }

    #[test]
    fn grand_average_is_mean_of_estimates() {
        let r = run_experiment(&config(ModelKind::FirstCoordinate, GeneratorKind::Xorwow)).unwrap();
        for row in &r.rows {
            let est = r.estimates(row.n);
            assert_eq!(est.len(), 4);
            assert_eq!(row.mean, mean(&est));
            assert_eq!(row.std, sample_std(&est).unwrap());
            assert_eq!(row.efficiency, row.std * row.time_s);
        }
    }

    #[test]
    fn nested_grid_matches_single_size_runs() {
        let full = run_experiment(&config(ModelKind::Libor, GeneratorKind::SobolGray)).unwrap();
        for &n in &[64, 256, 1024] {
            let single = run_experiment(&ExperimentConfig {
                n_grid: vec![n],
                ..config(ModelKind::Libor, GeneratorKind::SobolGray)
            })
            .unwrap();
            assert_eq!(single.estimates(n), full.estimates(n));
        }
    }

    #[test]
    fn paradigms_agree() {
        for g in [GeneratorKind::Philox, GeneratorKind::RasrapCounter, GeneratorKind::SobolCounter] {
            // 100 is not a multiple of the stripe count.
            let base = ExperimentConfig {
                n_grid: vec![64, 100, 1024],
                ..config(ModelKind::Libor, g)
            };
            let want = run_experiment(&base).unwrap();
            for (paradigm, workers) in [
                (Paradigm::ReplicationParallel, 3),
                (Paradigm::StrideParallel, 1),
                (Paradigm::StrideParallel, 3),
            ] {
                let got = run_experiment(&ExperimentConfig {
                    paradigm,
                    workers,
                    ..base.clone()
                })
                .unwrap();
                assert!(want.same_estimates(&got), "{g} {paradigm} {workers}");
            }
        }
    }

    #[test]
    fn invalid_configurations() {
        let ok = config(ModelKind::Constant, GeneratorKind::Twister);
        let cases = [
            ExperimentConfig { n_grid: vec![], ..ok.clone() },
            ExperimentConfig { n_grid: vec![8, 8], ..ok.clone() },
            ExperimentConfig { n_grid: vec![0, 8], ..ok.clone() },
            ExperimentConfig { reps: 1, ..ok.clone() },
            ExperimentConfig { workers: 0, ..ok.clone() },
            ExperimentConfig {
                paradigm: Paradigm::StrideParallel,
                ..ok.clone()
            },
            ExperimentConfig {
                paradigm: Paradigm::StrideParallel,
                generator: GeneratorKind::SobolGray,
                ..ok.clone()
            },
            ExperimentConfig {
                generator: GeneratorKind::SobolCounter,
                n_grid: vec![1 << 33],
                ..ok.clone()
            },
        ];
        for c in cases {
            assert!(matches!(run_experiment(&c), Err(Error::Config(_))), "{c:?}");
        }
    }

    #[test]
    fn paradigm_names() {
        for p in [Paradigm::ReplicationParallel, Paradigm::StrideParallel] {
            assert_eq!(p.name().parse::<Paradigm>().unwrap(), p);
        }
        assert!("leapfrog".parse::<Paradigm>().is_err());
    }

    struct Flaky;

    impl Integrand for Flaky {
        fn dimension(&self) -> usize {
            1
        }

        fn evaluate(&self, p: &[f64]) -> f64 {
            if p[0] < 0.25 {
                f64::NAN
            } else {
                1.0
            }
        }

        fn name(&self) -> &str {
            "flaky"
        }
    }

    #[test]
    fn invalid_paths_are_counted_and_skipped() {
        let c = config(ModelKind::Constant, GeneratorKind::SobolCounter);
        let r = run_experiment_with(&c, &Flaky).unwrap();
        assert_eq!(r.model, "flaky");
        for row in &r.rows {
            assert_eq!(row.mean, 1.0);
            // Scrambled Sobol' puts exactly a quarter of each block below 1/4.
            assert_eq!(row.invalid_paths, row.n);
        }
    }

    proptest! {
        #[test]
        fn stripes_partition_the_indices(workers in 1u64..40, per in 1u64..50) {
            let n = workers * per;
            let mut seen = HashSet::new();
            for w in 0..workers {
                for k in 0..per {
                    let i = assign_stride(w, workers, k);
                    prop_assert!(i < n);
                    prop_assert!(seen.insert(i));
                }
            }
            prop_assert_eq!(seen.len() as u64, n);
        }
    }
}
