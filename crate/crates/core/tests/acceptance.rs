//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs at desk scale (N = 2^10..2^18, M = 50).

use std::collections::HashMap;
use std::process::ExitCode;
use std::time::Instant;

use rqmc_core::halton::{first_primes, vdc_direct, HaltonConfig, KakutaniState};
use rqmc_core::harness::{
    bench_throughput, power_grid, run_experiment, ConvergenceReport, ExperimentConfig, GeneratorKind, ModelKind,
    Paradigm,
};
use rqmc_core::models::{mbs_pv, LiborPricer, MbsConfig, MbsModel};
use rqmc_core::prng::{philox4x32_10, word_to_uniform, Mt19937};
use rqmc_core::sobol::{sobol_randomize, SobolGrayState, SobolTable};
use rqmc_core::{inv_normal, rasrap_counter, vdc_permuted_direct};

const SEED: u64 = 20_120_224;
const REPS: usize = 50;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Desk-scale convergence runs shared by several criteria.
struct Runs {
    reports: HashMap<(ModelKind, GeneratorKind), ConvergenceReport>,
}

impl Runs {
    fn collect() -> Runs {
        let jobs = [
            (ModelKind::Libor, GeneratorKind::Twister),
            (ModelKind::Libor, GeneratorKind::RasrapRecursive),
            (ModelKind::Libor, GeneratorKind::SobolGray),
            (ModelKind::Mbs, GeneratorKind::Philox),
            (ModelKind::Mbs, GeneratorKind::Xorwow),
            (ModelKind::Mbs, GeneratorKind::SobolGray),
            (ModelKind::Mbs, GeneratorKind::RasrapRecursive),
        ];
        let mut reports = HashMap::new();
        for (model, generator) in jobs {
            let start = Instant::now();
            let config = ExperimentConfig {
                reps: REPS,
                seed: SEED,
                workers: workers(),
                n_grid: power_grid(10, 18),
                ..ExperimentConfig::new(model, generator)
            };
            let report = run_experiment(&config).expect("experiment runs");
            eprintln!(
                "  ran {model}/{generator}: slope {:?} in {:.1}s",
                report.fit.map(|f| f.slope),
                start.elapsed().as_secs_f64()
            );
            reports.insert((model, generator), report);
        }
        Runs { reports }
    }

    fn get(&self, model: ModelKind, generator: GeneratorKind) -> &ConvergenceReport {
        &self.reports[&(model, generator)]
    }

    fn slope(&self, model: ModelKind, generator: GeneratorKind) -> f64 {
        self.get(model, generator).fit.map_or(f64::NAN, |f| f.slope)
    }
}

fn libor_slopes(runs: &Runs) -> Outcome {
    let tw = runs.slope(ModelKind::Libor, GeneratorKind::Twister);
    let ra = runs.slope(ModelKind::Libor, GeneratorKind::RasrapRecursive);
    let so = runs.slope(ModelKind::Libor, GeneratorKind::SobolGray);
    outcome(
        (-0.62..=-0.38).contains(&tw) && ra <= -0.72 && so <= -0.78,
        format!("twister {tw:.3} in [-0.62, -0.38]; rasrap {ra:.3} <= -0.72; sobol {so:.3} <= -0.78"),
    )
}

fn mbs_slopes(runs: &Runs) -> Outcome {
    let ph = runs.slope(ModelKind::Mbs, GeneratorKind::Philox);
    let xw = runs.slope(ModelKind::Mbs, GeneratorKind::Xorwow);
    let so = runs.slope(ModelKind::Mbs, GeneratorKind::SobolGray);
    let ra = runs.slope(ModelKind::Mbs, GeneratorKind::RasrapRecursive);
    let band = -0.62..=-0.38;
    outcome(
        band.contains(&ph) && band.contains(&xw) && so <= -0.70 && ra <= -0.55,
        format!(
            "philox {ph:.3}, xorwow {xw:.3} in [-0.62, -0.38]; sobol {so:.3} <= -0.70; rasrap {ra:.3} <= -0.55"
        ),
    )
}

fn mbs_ordering(runs: &Runs) -> Outcome {
    let so = runs.get(ModelKind::Mbs, GeneratorKind::SobolGray);
    let ra = runs.get(ModelKind::Mbs, GeneratorKind::RasrapRecursive);
    let wins = ra.rows.iter().zip(&so.rows).filter(|(r, s)| r.std < s.std).count();
    outcome(wins >= 6, format!("rasrap std < sobol std at {wins} of {} sizes (need 6)", ra.rows.len()))
}

fn black_consistency(runs: &Runs) -> Outcome {
    let report = runs.get(ModelKind::Libor, GeneratorKind::SobolGray);
    let row = report.row(1 << 18).expect("N = 2^18 row");
    let pricer = LiborPricer::new(Default::default()).expect("paper parameters");
    let black = pricer.black_price().expect("Black price");
    let tol = (3.0 * row.std / (REPS as f64).sqrt()).max(0.005 * black);
    let err = (row.mean - black).abs();
    outcome(
        err <= tol,
        format!("MC {:.9e} vs Black {black:.9e}: |diff| {err:.3e} <= {tol:.3e}", row.mean),
    )
}

fn algorithm_equivalences() -> Outcome {
    let mut worst_orbit: f64 = 0.0;
    for &p in &first_primes(8) {
        let mut k = KakutaniState::new(p, 0.0).unwrap();
        for n in 1..10_000u64 {
            let x = k.next();
            worst_orbit = worst_orbit.max((x - vdc_direct(n, p).unwrap()).abs());
        }
    }

    let config = HaltonConfig::rasrap(40, SEED).unwrap();
    let mut streams = config.streams();
    let mut worst_rec: f64 = 0.0;
    for n in 0..10_000u64 {
        let direct = rasrap_counter(n, &config);
        for (j, s) in streams.iter_mut().enumerate() {
            let x = if n == 0 { s.current() } else { s.next() };
            worst_rec = worst_rec.max((x - direct[j]).abs());
            if n % 997 == 0 {
                let alt = vdc_permuted_direct(
                    config.start_indices()[j] + n,
                    config.bases()[j],
                    &config.perms()[j],
                    config.capacities()[j],
                )
                .unwrap();
                worst_rec = worst_rec.max((alt - direct[j]).abs());
            }
        }
    }

    let base = SobolTable::joe_kuo(360).unwrap();
    let mut gray_ok = true;
    for table in [base.clone(), sobol_randomize(&base, SEED, 7)] {
        let mut state = SobolGrayState::new(&table);
        let mut gray: Vec<Vec<u32>> = vec![Vec::new(); 360];
        let mut ctr: Vec<Vec<u32>> = vec![Vec::new(); 360];
        let mut y = vec![0u32; 360];
        let mut sink = vec![0.0; 360];
        for i in 0..4096u32 {
            for (j, &x) in state.integer_state().iter().enumerate() {
                gray[j].push(x);
            }
            state.next_into(&table, &mut sink).unwrap();
            table.integer_point_into(i, &mut y);
            for (j, &x) in y.iter().enumerate() {
                ctr[j].push(x);
            }
        }
        // Whole points, not just coordinates, must match as sets.
        let mut gp: Vec<Vec<u32>> = (0..4096).map(|i| gray.iter().map(|c| c[i]).collect()).collect();
        let mut cp: Vec<Vec<u32>> = (0..4096).map(|i| ctr.iter().map(|c| c[i]).collect()).collect();
        gp.sort();
        cp.sort();
        gray_ok &= gp == cp;
    }

    outcome(
        worst_orbit <= 1e-12 && worst_rec <= 1e-12 && gray_ok,
        format!(
            "Kakutani orbit vs direct max err {worst_orbit:.1e}; recursive vs direct Rasrap max err {worst_rec:.1e}; \
             Gray block 2^12 permutation of counter block: {gray_ok}"
        ),
    )
}

fn read_words(text: &str) -> Vec<u32> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.trim().parse().expect("oracle word"))
        .collect()
}

fn known_answers() -> Outcome {
    let mt_ref = read_words(include_str!("data/mt19937_seed5489.txt"));
    let mut mt = Mt19937::new(5489);
    let mt_ok = mt_ref.len() == 10_000 && mt_ref.iter().all(|&w| mt.next_u32() == w);

    let ph_ref = read_words(include_str!("data/philox4x32_10_zero_key.txt"));
    let ph: Vec<u32> = (0..2500u32).flat_map(|b| philox4x32_10([b, 0, 0, 0], [0, 0])).collect();
    let ph_ok = ph_ref.len() == 10_000 && ph == ph_ref;
    outcome(
        mt_ok && ph_ok,
        format!("MT19937(5489) 10^4 words match: {mt_ok}; Philox-4x32-10 zero key 10^4 words match: {ph_ok}"),
    )
}

fn paradigm_equivalence() -> Outcome {
    let mut checked = 0;
    let mut failures = Vec::new();
    for model in [ModelKind::Libor, ModelKind::Mbs] {
        for generator in [GeneratorKind::Philox, GeneratorKind::RasrapCounter, GeneratorKind::SobolCounter] {
            let base = ExperimentConfig {
                reps: 6,
                seed: SEED,
                n_grid: vec![256, 1000, 2048],
                ..ExperimentConfig::new(model, generator)
            };
            let want = run_experiment(&base).unwrap();
            for paradigm in [Paradigm::ReplicationParallel, Paradigm::StrideParallel] {
                for workers in [1, 2, 8] {
                    let got = run_experiment(&ExperimentConfig {
                        paradigm,
                        workers,
                        ..base.clone()
                    })
                    .unwrap();
                    checked += 1;
                    if !want.same_estimates(&got) {
                        failures.push(format!("{model}/{generator}/{paradigm}/{workers}"));
                    }
                }
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!("{checked} runs compared bitwise, mismatches: {failures:?}"),
    )
}

fn throughput_ordering() -> Outcome {
    let dim = 10;
    let count = 10_000_000;
    let rate = |g| bench_throughput(g, dim, count).unwrap();
    let (rr, rc) = (rate(GeneratorKind::RasrapRecursive), rate(GeneratorKind::RasrapCounter));
    let (sg, sc) = (rate(GeneratorKind::SobolGray), rate(GeneratorKind::SobolCounter));
    let (q1, q2) = (rr / rc, sg / sc);
    outcome(
        q1 >= 5.0 && q2 >= 5.0,
        format!(
            "rasrap recursive/counter {q1:.1}x ({rr:.3e} vs {rc:.3e}/s); sobol gray/counter {q2:.1}x ({sg:.3e} vs {sc:.3e}/s)"
        ),
    )
}

fn mbs_invariants() -> Outcome {
    let config = MbsConfig::default();
    let model = MbsModel::new(config.clone()).unwrap();
    let sigma = config.sigma();
    let samples = 1_000_000;
    let ks = [1usize, 12, 120];
    let mut sum = [0.0f64; 3];
    let mut sum2 = [0.0f64; 3];
    let mut mt = Mt19937::new(SEED as u32);
    let mut xi = vec![0.0; 120];
    for _ in 0..samples {
        for x in xi.iter_mut() {
            *x = sigma * inv_normal(word_to_uniform(mt.next_u32()));
        }
        let path = model.rate_path(&xi);
        for (s, &k) in ks.iter().enumerate() {
            let r = path[k - 1];
            sum[s] += r;
            sum2[s] += r * r;
        }
    }
    let n = samples as f64;
    let mut norm_ok = true;
    let mut zs = Vec::new();
    for s in 0..3 {
        let mean = sum[s] / n;
        let var = (sum2[s] - n * mean * mean) / (n - 1.0);
        let z = (mean - config.initial_rate) / (var / n).sqrt();
        norm_ok &= z.abs() <= 3.0;
        zs.push(format!("k={}: z={z:.2}", ks[s]));
    }

    let one = MbsConfig {
        months: 1,
        ..config.clone()
    };
    let collapse_ok = [-0.3, 0.0, 0.01, 0.7]
        .iter()
        .all(|&x| mbs_pv(&[x], &one).unwrap() == one.payment / (1.0 + one.initial_rate));

    let flat = MbsConfig {
        variance: 0.0,
        ..config.clone()
    };
    let pv = mbs_pv(&vec![0.0; flat.months], &flat).unwrap();
    let i0 = flat.initial_rate;
    let w = flat.k1 + flat.k2 * (flat.k3 * i0 + flat.k4).atan();
    let m = flat.months as i32;
    let oracle: f64 = (1..=m)
        .map(|k| {
            let ck: f64 = (0..=(m - k)).map(|j| (1.0 + i0).powi(-j)).sum();
            (1.0 + i0).powi(-k) * flat.payment * (1.0 - w).powi(k - 1) * ((1.0 - w) + w * ck)
        })
        .sum();
    let flat_err = (pv - oracle).abs();

    outcome(
        norm_ok && collapse_ok && flat_err <= 1e-12,
        format!(
            "E(i_k) = i_0 within 3 SE at 10^6 samples ({}); M=1 collapse exact: {collapse_ok}; σ²=0 vs straight loop err {flat_err:.1e}",
            zs.join(", ")
        ),
    )
}

fn sobol_structure() -> Outcome {
    let table = SobolTable::joe_kuo(1024).unwrap();
    let recursion_ok = table.directions().iter().all(|d| d.satisfies_recurrence());

    let mut vdc_ok = true;
    let mut p = vec![0.0; 1024];
    for i in 0..=10_000u32 {
        table.point_into(i, &mut p);
        vdc_ok &= p[0] == vdc_direct(i as u64, 2).unwrap();
    }

    let mut y = vec![0u32; 1024];
    let mut points = Vec::with_capacity(4096);
    for i in 0..4096u32 {
        table.integer_point_into(i, &mut y);
        points.push(y.clone());
    }
    let mut strat_ok = true;
    for m in 0..=12u32 {
        let count = 1usize << m;
        for j in 0..1024 {
            let mut seen = vec![false; count];
            for pt in &points[..count] {
                let cell = if m == 0 { 0 } else { (pt[j] >> (32 - m)) as usize };
                strat_ok &= !std::mem::replace(&mut seen[cell], true);
            }
        }
    }
    outcome(
        recursion_ok && vdc_ok && strat_ok,
        format!(
            "m-recursion over 1024 dimensions: {recursion_ok}; dimension 1 = van der Corput base 2 (10^4): {vdc_ok}; \
             one point per dyadic interval (m <= 12, all dimensions): {strat_ok}"
        ),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    eprintln!("running desk-scale experiments (N = 2^10..2^18, M = {REPS}, {} workers)", workers());
    let runs = Runs::collect();

    type Criterion<'a> = (&'a str, Box<dyn Fn() -> Outcome + 'a>);
    let criteria: Vec<Criterion> = vec![
        ("1 LIBOR convergence slopes", Box::new(|| libor_slopes(&runs))),
        ("2 MBS convergence slopes", Box::new(|| mbs_slopes(&runs))),
        ("3 MBS Rasrap vs Sobol' ordering", Box::new(|| mbs_ordering(&runs))),
        ("4 Black-formula consistency", Box::new(|| black_consistency(&runs))),
        ("5 algorithm equivalences", Box::new(algorithm_equivalences)),
        ("6 known-answer vectors", Box::new(known_answers)),
        ("7 paradigm equivalence", Box::new(paradigm_equivalence)),
        ("8 throughput ordering", Box::new(throughput_ordering)),
        ("9 MBS model invariants", Box::new(mbs_invariants)),
        ("10 Sobol' structural checks", Box::new(sobol_structure)),
    ];

    let mut failed = 0;
    for (name, check) in &criteria {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!("[{}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!(
        "{} of {} criteria passed in {:.0}s",
        criteria.len() - failed,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
