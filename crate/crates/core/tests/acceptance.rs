//! Acceptance criteria. Runs without the libtest harness and prints one
//! PASS/FAIL line per criterion; exits non-zero if any criterion fails.
//!
//! Criterion 12 is slow and runs only with `--include-ignored` or `--ignored`.

use ekscope::arith::{exp_exp, loglog, omega_phi, sieve_window, LogLog, OmegaWindow, SpfTable};
use ekscope::cache::WindowCache;
use ekscope::coverage::{asymptotic_coverage, fuzzy_asymptotic_coverage, rarity_proportion, window_coverage, FuzzyBounds};
use ekscope::estimator::Estimator;
use ekscope::intervals::{
    bounds, ep_standardized_statistic, exclusion_point, inclusion_point, optimal_lambda, poisson_bounds,
    score_bounds, width, Bounds, IntervalSpec, ShiftedPoissonModel, TrainedModel,
};
use ekscope::numerics::alpha_from_z;
use ekscope::training::{sieve_for_grid, train, TrainingGrid, TrainingOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const NOMINAL: f64 = 0.6319;

fn alpha_star() -> f64 {
    alpha_from_z(0.9).unwrap()
}

struct Outcome {
    failures: Vec<String>,
    detail: String,
}

fn outcome(failures: Vec<String>, detail: &str) -> Outcome {
    Outcome { failures, detail: detail.to_string() }
}

fn check(failures: &mut Vec<String>, ok: bool, what: String) {
    if !ok {
        failures.push(what);
    }
}

fn trial_division(mut n: u64, primes: &[u64]) -> (u8, u8) {
    let (mut w, mut bw) = (0u8, 0u8);
    for &p in primes {
        if p * p > n {
            break;
        }
        if n.is_multiple_of(p) {
            w += 1;
            while n.is_multiple_of(p) {
                n /= p;
                bw += 1;
            }
        }
    }
    if n > 1 {
        w += 1;
        bw += 1;
    }
    (w, bw)
}

fn simple_primes(limit: usize) -> Vec<u64> {
    let mut composite = vec![false; limit + 1];
    let mut primes = Vec::new();
    for i in 2..=limit {
        if !composite[i] {
            primes.push(i as u64);
            let mut k = i * i;
            while k <= limit {
                composite[k] = true;
                k += i;
            }
        }
    }
    primes
}

fn criterion_01_sieve_matches_trial_division() -> Outcome {
    let primes = simple_primes(10_000_001);
    let mut failures = Vec::new();
    let low = sieve_window(50_001, 50_000).unwrap();
    for (t, w, bw) in low.iter() {
        if (w, bw) != trial_division(t, &primes) {
            failures.push(format!("t = {t}: sieve ({w}, {bw})"));
        }
    }
    let center = 100_000_000_000_000u64;
    let high = sieve_window(center, 2000).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..1000 {
        let t = rng.gen_range(center - 2000..=center + 2000);
        let got = (high.omega_at(t).unwrap(), high.big_omega_at(t).unwrap());
        if got != trial_division(t, &primes) {
            failures.push(format!("t = {t}: sieve {got:?}"));
        }
    }
    failures.truncate(10);
    outcome(failures, "sieve equals trial division on [1, 1e5] and 1000 draws near 1e14")
}

fn criterion_02_rarity_table() -> Outcome {
    let table = [(0.5, 0.3173105), (1.0, 0.0455003), (1.5, 0.0026998), (2.0, 0.0000633)];
    let mut failures = Vec::new();
    for (thr, expect) in table {
        let got = rarity_proportion(thr);
        check(&mut failures, (got - expect).abs() < 5e-8, format!("threshold {thr}: {got:.9} vs {expect}"));
    }
    outcome(failures, "rarity proportions to 7 decimals")
}

fn criterion_03_first_exclusion_three_quarters() -> Outcome {
    let mut failures = Vec::new();
    for (z, expect) in [(1.0, 2.4104), (2.0, 4.7422), (3.0, 8.0830)] {
        let got = exclusion_point(1, &IntervalSpec::from_z(0.75, z).unwrap()).unwrap();
        check(&mut failures, (got - expect).abs() < 5e-5, format!("z = {z}: {got:.6} vs {expect}"));
    }
    outcome(failures, "first exclusion points for lambda = 3/4")
}

fn criterion_04_inclusion_exclusion_table() -> Outcome {
    let published = [
        (0.4181, 2.3919),
        (1.0693, 3.7407),
        (1.7944, 5.0156),
        (2.5600, 6.2500),
        (3.3522, 7.4578),
        (4.1636, 8.6464),
        (4.9896, 9.8204),
        (5.8274, 10.9826),
    ];
    let spec = IntervalSpec::from_z(1.0, 0.9).unwrap();
    let mut failures = Vec::new();
    for (i, &(a, b)) in published.iter().enumerate() {
        let k = i as u32 + 1;
        let inc = inclusion_point(k, &spec).unwrap();
        let exc = exclusion_point(k, &spec).unwrap();
        let (lo, hi) = (inc.min(exc), inc.max(exc));
        check(
            &mut failures,
            (lo - a).abs() < 5e-5 && (hi - b).abs() < 5e-5,
            format!("k = {k}: ({inc:.6}, {exc:.6}) vs ({a}, {b})"),
        );
    }
    outcome(failures, "16 inclusion/exclusion points for lambda = 1, z = 0.9")
}

/// m just before and after each transition, per the Table 4 caption.
fn phase_points(j: u64) -> [u64; 4] {
    let spec = IntervalSpec::from_z(1.0, 0.9).unwrap();
    let exit_one = exp_exp(exclusion_point(1, &spec).unwrap()).value().unwrap();
    let enter_four = exp_exp(inclusion_point(4, &spec).unwrap()).value().unwrap();
    let j = j as f64;
    [
        (exit_one - j).floor() as u64,
        (exit_one + j).ceil() as u64,
        (enter_four - j).floor() as u64,
        (enter_four + j).ceil() as u64,
    ]
}

fn criterion_05_phase_coverage() -> Outcome {
    let j = 2000;
    let ms = phase_points(j);
    let conventional = [0.8090, 0.7153, 0.6651, 0.8755];
    let asymptotic = [0.5727, 0.4798, 0.4513, 0.6673];
    let spec = IntervalSpec::from_alpha(1.0, alpha_star()).unwrap();
    let mut failures = Vec::new();
    let mut got_conv = Vec::new();
    for (i, &m) in ms.iter().enumerate() {
        let w = sieve_window(m, j).unwrap();
        let c = window_coverage(&w, |l| bounds(&spec, l)).unwrap().conventional;
        let ell2 = loglog(m).unwrap().value();
        let a = asymptotic_coverage(ell2, &bounds(&spec, ell2).unwrap(), &ShiftedPoissonModel::IDENTITY).unwrap();
        check(&mut failures, (c - conventional[i]).abs() <= 0.005, format!("m = {m}: conventional {c:.4} vs {}", conventional[i]));
        check(&mut failures, (a - asymptotic[i]).abs() <= 0.0005, format!("m = {m}: asymptotic {a:.4} vs {}", asymptotic[i]));
        got_conv.push(c);
    }
    check(&mut failures, got_conv[1] < got_conv[0], "coverage should drop across the first exclusion".into());
    check(&mut failures, got_conv[3] > got_conv[2], "coverage should rise across the fourth inclusion".into());
    outcome(failures, &format!("phase points {ms:?}"))
}

fn criterion_06_intervals_at_1e70() -> Outcome {
    let ell2 = LogLog::of_pow10(70.0).unwrap().value();
    let mut failures = Vec::new();
    let b = bounds(&IntervalSpec::from_z(1.0, 0.9).unwrap(), ell2).unwrap();
    let (lo, hi) = (b.lower.unwrap(), b.upper);
    check(&mut failures, (lo - 3.0535).abs() < 5e-5 && (hi - 7.1115).abs() < 5e-5, format!("Box-Cox [{lo:.5}, {hi:.5}]"));
    let p = poisson_bounds(alpha_star(), ell2, &ShiftedPoissonModel::IDENTITY, None).unwrap();
    let (lo, hi) = (p.lower.unwrap(), p.upper);
    check(&mut failures, (lo - 4.5169).abs() <= 1e-3 && (hi - 7.6482).abs() <= 1e-3, format!("Poisson [{lo:.5}, {hi:.5}]"));
    let fuzzy = fuzzy_asymptotic_coverage(ell2, &FuzzyBounds::from_bounds(&p), &ShiftedPoissonModel::IDENTITY).unwrap();
    check(&mut failures, (fuzzy - (1.0 - alpha_star())).abs() < 1e-8, format!("Poisson fuzzy mass {fuzzy}"));
    outcome(failures, "Box-Cox and Poisson intervals at ell2(1e70)")
}

fn criterion_07_huge_ell2_ranges() -> Outcome {
    let ell2 = 2807.0f64 * 2807.0;
    let alpha = alpha_from_z(2.0).unwrap();
    let mut failures = Vec::new();
    let round_pair = |b: Bounds| (b.lower.unwrap().round() as i64, b.upper.round() as i64);
    let one = round_pair(bounds(&IntervalSpec::from_z(1.0, 2.0).unwrap(), ell2).unwrap());
    check(&mut failures, one == (7_873_635, 7_884_863), format!("lambda = 1: {one:?}"));
    let half = round_pair(bounds(&IntervalSpec::from_z(0.5, 2.0).unwrap(), ell2).unwrap());
    check(&mut failures, half == (7_873_636, 7_884_864), format!("lambda = 1/2: {half:?}"));
    let score = round_pair(score_bounds(2.0, ell2).unwrap());
    check(&mut failures, score == (7_873_637, 7_884_865), format!("score: {score:?}"));
    let p = poisson_bounds(alpha, ell2, &ShiftedPoissonModel::IDENTITY, None).unwrap();
    let fb = FuzzyBounds::from_bounds(&p);
    let poisson = (fb.ceil_lower() as i64, fb.floor_upper() as i64);
    check(&mut failures, poisson == (7_873_637, 7_884_863), format!("Poisson: {poisson:?} from {p:?}"));
    outcome(failures, "integer ranges at ell2 = 2807^2, z = 2")
}

fn paper_table5() -> [(f64, [f64; 4]); 3] {
    [
        (0.5, [0.4300, 0.9152, -0.0109, 0.1498]),
        (0.75, [0.4284, 0.9343, 0.0196, 0.2695]),
        (1.0, [0.4270, 0.9527, 0.0499, 0.3677]),
    ]
}

fn criterion_08_training_table() -> Outcome {
    let started = std::time::Instant::now();
    let grid = TrainingGrid::default();
    let window = sieve_for_grid(&grid).unwrap();
    let mut failures = Vec::new();
    let mut summary = Vec::new();
    for (lambda, expect) in paper_table5() {
        let r = train(&grid, lambda, &window, &TrainingOptions::default()).unwrap();
        let m = &r.model;
        let got = [m.beta0, m.beta1, m.gamma0, m.gamma1];
        for (name, (g, e)) in ["beta0", "beta1", "gamma0", "gamma1"].iter().zip(got.iter().zip(expect)) {
            check(&mut failures, (g - e).abs() <= 0.05, format!("lambda = {lambda}: {name} {g:.4} vs {e}"));
        }
        check(&mut failures, r.mean_correlation > 0.999, format!("lambda = {lambda}: mean correlation {}", r.mean_correlation));
        check(&mut failures, r.sigma_correlation > 0.943, format!("lambda = {lambda}: scale correlation {}", r.sigma_correlation));
        if lambda == 1.0 {
            let (e0, e1) = (m.eta0.unwrap(), m.eta1.unwrap());
            check(&mut failures, (e0 + 0.1136).abs() <= 0.05 && (e1 - 0.3855).abs() <= 0.05, format!("eta ({e0:.4}, {e1:.4})"));
            check(&mut failures, r.eta_correlation.unwrap() > 0.990, format!("eta correlation {:?}", r.eta_correlation));
            summary.push(format!("eta=({e0:.4},{e1:.4})"));
        }
        summary.push(format!("l={lambda}:({:.4},{:.4},{:.4},{:.4})", got[0], got[1], got[2], got[3]));
    }
    let secs = started.elapsed().as_secs_f64();
    check(&mut failures, secs < 300.0, format!("runtime {secs:.1}s"));
    outcome(failures, &summary.join(" "))
}

fn decade_window(a: u32, j: u64) -> OmegaWindow {
    let cache = WindowCache::new(std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("windows"));
    cache.load_or_sieve(10u64.pow(a), j).unwrap()
}

fn fuzzy_at(window: &OmegaWindow, estimator: &Estimator, alpha: f64) -> f64 {
    window_coverage(window, |l| estimator.bounds(l, alpha)).unwrap().fuzzy
}

fn untrained_estimators() -> Vec<(&'static str, Estimator)> {
    vec![
        ("boxcox-1/2", Estimator::boxcox(0.5)),
        ("boxcox-3/4", Estimator::boxcox(0.75)),
        ("boxcox-1", Estimator::boxcox(1.0)),
        ("score", Estimator::Score),
        ("poisson", Estimator::Poisson),
    ]
}

fn figure4_decade(a: u32, failures: &mut Vec<String>) -> String {
    let window = decade_window(a, 2000);
    let alpha = alpha_star();
    let mut row = Vec::new();
    for (name, est) in untrained_estimators() {
        let p = fuzzy_at(&window, &est, alpha);
        if name == "poisson" {
            check(failures, (0.70..=0.78).contains(&p), format!("1e{a} {name}: {p:.4} outside [0.70, 0.78]"));
        } else {
            check(failures, p > NOMINAL, format!("1e{a} {name}: {p:.4} not above {NOMINAL}"));
        }
        row.push(format!("{name}={p:.4}"));
    }
    format!("1e{a}[{}]", row.join(","))
}

fn criterion_09_untrained_fuzzy_coverage() -> Outcome {
    let mut failures = Vec::new();
    let rows: Vec<String> = (5..=8).map(|a| figure4_decade(a, &mut failures)).collect();
    outcome(failures, &rows.join(" "))
}

fn trained_lambda_one() -> TrainedModel {
    let grid = TrainingGrid::default();
    let window = sieve_for_grid(&grid).unwrap();
    train(&grid, 1.0, &window, &TrainingOptions::default()).unwrap().model
}

fn criterion_10_trained_fuzzy_coverage() -> Outcome {
    let model = trained_lambda_one();
    let alpha = alpha_star();
    let mut failures = Vec::new();
    let mut rows = Vec::new();
    let pairs = [
        ("score", Estimator::TrainedScore(model.clone()), Estimator::Score),
        ("poisson", Estimator::TrainedPoisson(model.clone()), Estimator::Poisson),
    ];
    for a in [5u32, 6] {
        let window = decade_window(a, 2000);
        for (name, trained, plain) in &pairs {
            let t = fuzzy_at(&window, trained, alpha);
            let u = fuzzy_at(&window, plain, alpha);
            check(
                &mut failures,
                (t - NOMINAL).abs() < (u - NOMINAL).abs(),
                format!("1e{a} {name}: trained {t:.4} not closer to {NOMINAL} than untrained {u:.4}"),
            );
            rows.push(format!("1e{a} {name}: trained={t:.4} untrained={u:.4}"));
        }
    }
    // log-spaced scan of [1e7, 1e8]
    let trained_poisson = Estimator::TrainedPoisson(model);
    let mut closest = (f64::INFINITY, 0u64);
    for i in 0..=10 {
        let m = (1e7 * 10f64.powf(i as f64 / 10.0)).round() as u64;
        let window = sieve_window(m, 2000).unwrap();
        let p = fuzzy_at(&window, &trained_poisson, alpha);
        if (p - NOMINAL).abs() < (closest.0 - NOMINAL).abs() {
            closest = (p, m);
        }
    }
    check(
        &mut failures,
        (closest.0 - NOMINAL).abs() <= 0.02,
        format!("trained Poisson never within 0.02 of {NOMINAL} on [1e7, 1e8]; closest {:.4} at m = {}", closest.0, closest.1),
    );
    rows.push(format!("closest trained Poisson on [1e7,1e8]: {:.4} at {}", closest.0, closest.1));
    outcome(failures, &rows.join("; "))
}

fn criterion_11_optimal_lambda() -> Outcome {
    let mut failures = Vec::new();
    let lam = optimal_lambda(2.0, 1e6).unwrap();
    check(&mut failures, (lam - 0.75).abs() <= 1e-3, format!("optimal lambda {lam}"));
    let z: f64 = 2.0;
    let mut detail = format!("lambda_opt={lam:.6}");
    for lambda in [0.0, 0.75, 1.5] {
        let spec = IntervalSpec::from_z(lambda, z).unwrap();
        let scaled: Vec<f64> = [1e3f64, 1e4, 1e5, 1e6]
            .iter()
            .map(|&l| {
                let expansion = 2.0 * z * l.sqrt() + z.powi(3) / (3.0 * l.sqrt()) * (lambda - 1.0) * (2.0 * lambda - 1.0);
                (width(&spec, l).unwrap() - expansion) * l.powf(1.5)
            })
            .collect();
        for w in scaled.windows(2) {
            let ratio = w[1] / w[0];
            check(&mut failures, (0.9..=1.1).contains(&ratio), format!("lambda = {lambda}: residual*l^1.5 ratio {ratio:.4}"));
        }
        detail.push_str(&format!(" l={lambda}:{:.4e}", scaled[3]));
    }
    outcome(failures, &detail)
}

fn criterion_12_extended_decades() -> Outcome {
    let mut failures = Vec::new();
    let model = trained_lambda_one();
    let alpha = alpha_star();
    let mut rows = Vec::new();
    for a in 9..=14u32 {
        let started = std::time::Instant::now();
        rows.push(figure4_decade(a, &mut failures));
        let window = decade_window(a, 2000);
        let t_score = fuzzy_at(&window, &Estimator::TrainedScore(model.clone()), alpha);
        let t_poisson = fuzzy_at(&window, &Estimator::TrainedPoisson(model.clone()), alpha);
        rows.push(format!("trained score={t_score:.4} poisson={t_poisson:.4}"));
        let secs = started.elapsed().as_secs_f64();
        check(&mut failures, secs < 120.0, format!("1e{a} took {secs:.1}s"));
    }
    outcome(failures, &rows.join(" "))
}

fn criterion_13_erdos_pomerance() -> Outcome {
    let mut failures = Vec::new();
    for lambda in [0.0, 0.25, 0.5, 1.0] {
        for l in [1.5, 2.5, 4.0] {
            let s = ep_standardized_statistic(l * l / 2.0, l, lambda).unwrap();
            check(&mut failures, s.abs() < 1e-12, format!("centre statistic {s} at lambda = {lambda}, ell2 = {l}"));
        }
    }
    for l in [1.5f64, 2.5, 4.0] {
        let one_sd = l * l / 2.0 + l.powf(1.5) / 3f64.sqrt();
        let s = ep_standardized_statistic(one_sd, l, 1.0).unwrap();
        check(&mut failures, (s - 1.0).abs() < 1e-12, format!("one-sigma statistic {s} at ell2 = {l}"));
    }
    let (lo, hi) = (100_000u64, 1_000_000u64);
    let spf = SpfTable::new(hi as u32 + 1);
    let (mut sum_w, mut sum_target) = (0.0, 0.0);
    for m in lo..=hi {
        sum_w += omega_phi(m, &spf).unwrap() as f64;
        let l = loglog(m).unwrap().value();
        sum_target += l * l / 2.0;
    }
    let ratio = sum_w / sum_target;
    check(&mut failures, (ratio - 1.0).abs() <= 0.25, format!("mean omega(phi) / mean ell2^2/2 = {ratio:.4}"));
    outcome(failures, &format!("mean ratio {ratio:.4}"))
}

fn criterion_14_fuzzy_continuity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let model = ShiftedPoissonModel::IDENTITY;
    let delta = 1e-10;
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let ell2: f64 = rng.gen_range(0.5..20.0);
        let centre = ell2 + 1.0;
        // an integer crossing for the upper end
        let k = (centre.ceil() + rng.gen_range(0..6) as f64).max(centre.ceil());
        let kappa = k - centre;
        let eval = |kap: f64| {
            let b = Bounds::new(centre - kap, centre + kap);
            fuzzy_asymptotic_coverage(ell2, &FuzzyBounds::from_bounds(&b), &model).unwrap()
        };
        let diff = (eval(kappa + delta) - eval(kappa - delta)).abs();
        worst = worst.max(diff);
        check(&mut failures, diff < 1e-8, format!("ell2 = {ell2}, kappa = {kappa}: jump {diff:e}"));
    }
    failures.truncate(10);
    outcome(failures, &format!("largest left/right gap {worst:.2e}"))
}

type Criterion = (u32, &'static str, fn() -> Outcome);

const CRITERIA: &[Criterion] = &[
    (1, "sieve_matches_trial_division", criterion_01_sieve_matches_trial_division),
    (2, "rarity_table", criterion_02_rarity_table),
    (3, "first_exclusion_three_quarters", criterion_03_first_exclusion_three_quarters),
    (4, "inclusion_exclusion_table", criterion_04_inclusion_exclusion_table),
    (5, "phase_coverage", criterion_05_phase_coverage),
    (6, "intervals_at_1e70", criterion_06_intervals_at_1e70),
    (7, "huge_ell2_ranges", criterion_07_huge_ell2_ranges),
    (8, "training_table", criterion_08_training_table),
    (9, "untrained_fuzzy_coverage", criterion_09_untrained_fuzzy_coverage),
    (10, "trained_fuzzy_coverage", criterion_10_trained_fuzzy_coverage),
    (11, "optimal_lambda", criterion_11_optimal_lambda),
    (12, "extended_decades", criterion_12_extended_decades),
    (13, "erdos_pomerance", criterion_13_erdos_pomerance),
    (14, "fuzzy_continuity", criterion_14_fuzzy_continuity),
];

const EXTENDED: &[u32] = &[12];

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let include_ignored = args.iter().any(|a| a == "--include-ignored");
    let only_ignored = args.iter().any(|a| a == "--ignored");
    let filters: Vec<&String> = args.iter().filter(|a| !a.starts_with("--")).collect();
    if args.iter().any(|a| a == "--list") {
        for (n, name, _) in CRITERIA {
            println!("criterion_{n:02}_{name}: test");
        }
        return;
    }
    let mut failed = 0;
    for &(n, name, run) in CRITERIA {
        let label = format!("criterion_{n:02}_{name}");
        if !filters.is_empty() && !filters.iter().any(|f| label.contains(f.as_str())) {
            continue;
        }
        let extended = EXTENDED.contains(&n);
        if extended && !(include_ignored || only_ignored) {
            println!("criterion {n:>2}: SKIP {name} (extended; pass --include-ignored)");
            continue;
        }
        if !extended && only_ignored {
            continue;
        }
        let started = std::time::Instant::now();
        let out = run();
        let status = if out.failures.is_empty() { "PASS" } else { "FAIL" };
        println!("criterion {n:>2}: {status} {name} [{:.1}s] {}", started.elapsed().as_secs_f64(), out.detail);
        for f in &out.failures {
            println!("    {f}");
        }
        if !out.failures.is_empty() {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
