use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};

use ekscope::cache::{read_window, WindowCache};
use ekscope::coverage::{
    asymptotic_coverage, empirical_cdf_distance, fmt_num, fuzzy_asymptotic_coverage, separation_sequence_z,
};
use ekscope::intervals::{exclusion_point, inclusion_point, optimal_lambda, width};
use ekscope::numerics::{alpha_from_z, z_from_alpha};
use ekscope::training::{sieve_for_grid, train, EtaResponse, TrainingOptions};
use ekscope::{
    exp_exp, loglog, omega_phi, sieve_window, window_coverage, CoverageReport, Estimator, FuzzyBounds,
    IntervalSpec, OmegaWindow, ShiftedPoissonModel, SpfTable, TrainedModel, TrainingGrid,
};

use clap::ValueEnum;

use crate::{Cli, Command, CoverageArgs, EstimatorKind, EtaForm, Level, Location, TrainArgs};

const DEFAULT_CACHE_DIR: &str = ".ekscope-cache";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Compute(ekscope::Error),
    Fit(String),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Compute(_) | CliError::Io(_) => 3,
            CliError::Fit(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Compute(e) => write!(f, "{e}"),
            CliError::Fit(msg) => write!(f, "fit failed: {msg}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<ekscope::Error> for CliError {
    fn from(e: ekscope::Error) -> Self {
        match e {
            ekscope::Error::FitFailed(msg) => CliError::Fit(msg),
            other => CliError::Compute(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

type Result<T> = std::result::Result<T, CliError>;

pub fn run(cli: &Cli) -> Result<()> {
    let ctx = Context::new(cli);
    let out = match &cli.command {
        Command::Window { center, j } => cmd_window(&ctx, *center, *j)?,
        Command::Coverage(args) => cmd_coverage(&ctx, args)?,
        Command::Points { lambda, level, k_max, shift } => cmd_points(*lambda, *level, *k_max, *shift)?,
        Command::Intervals { at, level, lambda, model } => cmd_intervals(at, *level, lambda, model.as_deref())?,
        Command::Train(args) => cmd_train(&ctx, args)?,
        Command::Separation { level, n_max, count, z_grid } => {
            cmd_separation(*level, *n_max, *count, z_grid.as_deref())?
        }
        Command::OptimalLambda { z, ell2_grid } => cmd_optimal_lambda(*z, ell2_grid)?,
        Command::Ep { m_lo, m_hi, step, lambda, rows } => cmd_ep(*m_lo, *m_hi, *step, *lambda, *rows)?,
        Command::CdfCheck { n, lambda } => cmd_cdf_check(n, lambda)?,
    };
    match &cli.output {
        Some(path) => fs::write(path, out)?,
        None => print!("{out}"),
    }
    Ok(())
}

struct Context {
    cache: Option<WindowCache>,
}

impl Context {
    fn new(cli: &Cli) -> Self {
        let dir = match (&cli.cache_dir, cli.cache) {
            (Some(dir), _) => Some(dir.clone()),
            (None, true) => Some(PathBuf::from(DEFAULT_CACHE_DIR)),
            (None, false) => None,
        };
        Context { cache: dir.map(WindowCache::new) }
    }

    fn window(&self, center: u64, j: u64) -> Result<OmegaWindow> {
        Ok(match &self.cache {
            Some(cache) => cache.load_or_sieve(center, j)?,
            None => sieve_window(center, j)?,
        })
    }
}

/// `(α, z)` from whichever of the two was given; z = 0.9 otherwise.
fn resolve_level(level: Level) -> Result<(f64, f64)> {
    match (level.alpha, level.z) {
        (Some(alpha), _) => Ok((alpha, z_from_alpha(alpha)?)),
        (None, Some(z)) => Ok((alpha_from_z(z)?, z)),
        (None, None) => Ok((alpha_from_z(0.9)?, 0.9)),
    }
}

fn opt_num(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_default()
}

fn load_model(path: Option<&Path>, kind: EstimatorKind) -> Result<TrainedModel> {
    let name = kind.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
    let path = path.ok_or_else(|| CliError::Usage(format!("--model FILE is required for the {name} estimator")))?;
    Ok(TrainedModel::load(path)?)
}

fn make_estimator(kind: EstimatorKind, lambda: f64, shift: f64, model: Option<&Path>) -> Result<Estimator> {
    if shift != 0.0 && kind != EstimatorKind::Boxcox {
        return Err(CliError::Usage("--shift applies only to the boxcox estimator".into()));
    }
    Ok(match kind {
        EstimatorKind::Boxcox => Estimator::BoxCox { lambda, shift },
        EstimatorKind::Score => Estimator::Score,
        EstimatorKind::Poisson => Estimator::Poisson,
        EstimatorKind::TrainedBoxcox => Estimator::TrainedBoxCox(load_model(model, kind)?),
        EstimatorKind::TrainedScore => Estimator::TrainedScore(load_model(model, kind)?),
        EstimatorKind::TrainedPoisson => Estimator::TrainedPoisson(load_model(model, kind)?),
    })
}

fn cmd_window(ctx: &Context, center: u64, j: u64) -> Result<String> {
    let window = ctx.window(center, j)?;
    let mut out = String::from("t,omega,big_omega\n");
    for (t, w, bw) in window.iter() {
        writeln!(out, "{t},{w},{bw}").unwrap();
    }
    Ok(out)
}

fn cmd_coverage(ctx: &Context, args: &CoverageArgs) -> Result<String> {
    let (alpha, _) = resolve_level(args.level)?;
    let estimator = make_estimator(args.estimator, args.lambda, args.shift, args.model.as_deref())?;
    let mut out = format!("{}\n", CoverageReport::CSV_HEADER);
    for m in &args.at.m {
        let ell2 = loglog(*m)?.value();
        let b = estimator.bounds(ell2, alpha)?;
        let fb = FuzzyBounds::from_bounds(&b);
        let window = ctx.window(*m, args.j)?;
        let wc = window_coverage(&window, |l| estimator.bounds(l, alpha))?;
        let report = CoverageReport {
            m: m.to_string(),
            j: Some(args.j),
            estimator: estimator.tag().to_string(),
            lambda: estimator.lambda(),
            alpha,
            lower: b.lower,
            upper: b.upper,
            p_lower: fb.p_lower,
            p_upper: fb.p_upper,
            conventional: wc.conventional,
            fuzzy: args.fuzzy.then_some(wc.fuzzy),
        };
        writeln!(out, "{}", report.csv_row()).unwrap();
    }
    // beyond sieving range: the Landau shifted Poisson stands in for the window
    for &ell2 in &args.at.ell2 {
        let b = estimator.bounds(ell2, alpha)?;
        let fb = FuzzyBounds::from_bounds(&b);
        let model = ShiftedPoissonModel::IDENTITY;
        let fuzzy = if args.fuzzy { Some(fuzzy_asymptotic_coverage(ell2, &fb, &model)?) } else { None };
        let report = CoverageReport {
            m: exp_exp(ell2).to_string(),
            j: None,
            estimator: estimator.tag().to_string(),
            lambda: estimator.lambda(),
            alpha,
            lower: b.lower,
            upper: b.upper,
            p_lower: fb.p_lower,
            p_upper: fb.p_upper,
            conventional: asymptotic_coverage(ell2, &b, &model)?,
            fuzzy,
        };
        writeln!(out, "{}", report.csv_row()).unwrap();
    }
    Ok(out)
}

fn point_cells(result: ekscope::Result<f64>, what: &str, notes: &mut Vec<String>) -> (String, String) {
    match result {
        Ok(ell2) => (fmt_num(ell2), exp_exp(ell2).to_string()),
        Err(e) => {
            notes.push(format!("{what}: {e}"));
            (String::new(), String::new())
        }
    }
}

fn cmd_points(lambda: f64, level: Level, k_max: u32, shift: f64) -> Result<String> {
    let (_, z) = resolve_level(level)?;
    if k_max == 0 {
        return Err(CliError::Usage("--k-max must be at least 1".into()));
    }
    let spec = IntervalSpec::from_z(lambda, z)?.with_shift(shift);
    let mut out = String::from("k,ell2_inclusion,m_inclusion,ell2_exclusion,m_exclusion,note\n");
    for k in 1..=k_max {
        let mut notes = Vec::new();
        let (li, mi) = point_cells(inclusion_point(k, &spec), "inclusion", &mut notes);
        let (le, me) = point_cells(exclusion_point(k, &spec), "exclusion", &mut notes);
        let note = notes.join("; ").replace(',', ";");
        writeln!(out, "{k},{li},{mi},{le},{me},{note}").unwrap();
    }
    Ok(out)
}

fn cmd_intervals(at: &Location, level: Level, lambdas: &[f64], model: Option<&Path>) -> Result<String> {
    let (alpha, _) = resolve_level(level)?;
    let mut estimators: Vec<Estimator> = lambdas.iter().map(|&l| Estimator::boxcox(l)).collect();
    estimators.push(Estimator::Score);
    estimators.push(Estimator::Poisson);
    if let Some(path) = model {
        let m = TrainedModel::load(path)?;
        estimators.push(Estimator::TrainedBoxCox(m.clone()));
        estimators.push(Estimator::TrainedScore(m.clone()));
        estimators.push(Estimator::TrainedPoisson(m));
    }
    let mut points: Vec<(String, f64)> = Vec::new();
    for &m in &at.m {
        points.push((m.to_string(), loglog(m)?.value()));
    }
    for &ell2 in &at.ell2 {
        points.push((exp_exp(ell2).to_string(), ell2));
    }
    let mut out = String::from("m,ell2,estimator,lambda,lower,upper,int_lower,int_upper,note\n");
    for (label, ell2) in &points {
        for est in &estimators {
            let lam = opt_num(est.lambda());
            match est.bounds(*ell2, alpha) {
                Ok(b) => {
                    let lo = b.lower_or_zero().max(0.0).ceil();
                    let hi = b.upper.floor();
                    let (il, iu, note) = if lo <= hi {
                        (fmt_int(lo), fmt_int(hi), "")
                    } else {
                        (String::new(), String::new(), "no integers inside")
                    };
                    let note = if b.lower.is_none() { "lower bound undefined" } else { note };
                    writeln!(
                        out,
                        "{label},{},{},{lam},{},{},{il},{iu},{note}",
                        fmt_num(*ell2),
                        est.tag(),
                        opt_num(b.lower),
                        fmt_num(b.upper)
                    )
                    .unwrap();
                }
                Err(e) => {
                    let note = e.to_string().replace(',', ";");
                    writeln!(out, "{label},{},{},{lam},,,,,{note}", fmt_num(*ell2), est.tag()).unwrap();
                }
            }
        }
    }
    Ok(out)
}

fn fmt_int(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.0}")
    } else {
        fmt_num(v)
    }
}

fn cmd_train(ctx: &Context, args: &TrainArgs) -> Result<String> {
    let grid = TrainingGrid::new(args.m_lo, args.m_hi, args.step, args.j)?;
    let source = match &args.window_file {
        Some(path) => read_window(path)?,
        None => match &ctx.cache {
            Some(cache) => {
                let (lo, hi) = grid.sieve_range();
                let half = (hi - lo).div_ceil(2);
                cache.load_or_sieve(lo + half, half)?
            }
            None => sieve_for_grid(&grid)?,
        },
    };
    let (q_mu, q_sigma) = if args.search_powers { (None, None) } else { (args.q_mu, args.q_sigma) };
    let mut options = TrainingOptions {
        q_mu,
        q_sigma,
        eta: match args.eta {
            EtaForm::Sd => EtaResponse::StdDev,
            EtaForm::Variance => EtaResponse::Variance,
        },
    };
    if args.search_powers {
        let probe = train(&grid, args.lambda, &source, &options)?;
        options.q_mu = Some(probe.q_mu_searched);
        options.q_sigma = Some(probe.q_sigma_searched);
    }
    let report = train(&grid, args.lambda, &source, &options)?;
    report.model.save(&args.out)?;
    if let Some(path) = &args.series {
        fs::write(path, report.series.to_csv())?;
    }
    let m = &report.model;
    let mut out = String::from("name,value\n");
    let mut row = |name: &str, v: Option<f64>| writeln!(out, "{name},{}", opt_num(v)).unwrap();
    row("lambda", Some(m.lambda));
    row("q_mu", Some(m.q_mu));
    row("q_sigma", Some(m.q_sigma));
    row("beta0", Some(m.beta0));
    row("beta1", Some(m.beta1));
    row("gamma0", Some(m.gamma0));
    row("gamma1", Some(m.gamma1));
    row("eta0", m.eta0);
    row("eta1", m.eta1);
    row("q_mu_searched", Some(report.q_mu_searched));
    row("q_sigma_searched", Some(report.q_sigma_searched));
    row("mean_correlation", Some(report.mean_correlation));
    row("sigma_correlation", Some(report.sigma_correlation));
    row("eta_correlation", report.eta_correlation);
    row("mean_rss", Some(report.mean_fit.residual_sum_sq));
    row("sigma_rss", Some(report.sigma_fit.residual_sum_sq));
    Ok(out)
}

/// Parses `lo:hi:step` into an inclusive arithmetic grid.
fn parse_step_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("bad grid {s:?}; expected lo:hi:step")))?;
    let [lo, hi, step] = parts[..] else {
        return Err(CliError::Usage(format!("bad grid {s:?}; expected lo:hi:step")));
    };
    if !(step > 0.0 && hi >= lo) {
        return Err(CliError::Usage(format!("bad grid {s:?}; need step > 0 and hi >= lo")));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| lo + step * i as f64).collect())
}

fn cmd_separation(level: Level, n_max: u64, count: usize, z_grid: Option<&str>) -> Result<String> {
    let (zs, with_z) = match z_grid {
        Some(g) => (parse_step_grid(g)?, true),
        None => (vec![resolve_level(level)?.1], false),
    };
    let mut out = String::from(if with_z { "z,i,s_i,log_ratio\n" } else { "i,s_i,log_ratio\n" });
    for z in zs {
        let sep = separation_sequence_z(z, n_max, count)?;
        if !sep.complete {
            eprintln!("warning: z = {z}: only {} of {count} indices found up to {n_max}", sep.indices.len());
        }
        for (i, s) in sep.indices.iter().enumerate() {
            let ratio = sep.log_ratios.get(i).map(|&r| fmt_num(r)).unwrap_or_default();
            if with_z {
                write!(out, "{},", fmt_num(z)).unwrap();
            }
            writeln!(out, "{},{s},{ratio}", i + 1).unwrap();
        }
    }
    Ok(out)
}

/// Comma list, or `lo:hi:count` spaced geometrically.
fn parse_ell2_grid(s: &str) -> Result<Vec<f64>> {
    let bad = || CliError::Usage(format!("bad ell2 grid {s:?}"));
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, n] = parts[..] else { return Err(bad()) };
        let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
        let n: usize = n.trim().parse().map_err(|_| bad())?;
        if !(lo > 0.0 && hi >= lo && n >= 1) {
            return Err(bad());
        }
        if n == 1 {
            return Ok(vec![lo]);
        }
        let r = (hi / lo).ln() / (n - 1) as f64;
        Ok((0..n).map(|i| lo * (r * i as f64).exp()).collect())
    } else {
        s.split(',').map(|p| p.trim().parse::<f64>().map_err(|_| bad())).collect()
    }
}

fn cmd_optimal_lambda(z: f64, ell2_grid: &str) -> Result<String> {
    let grid = parse_ell2_grid(ell2_grid)?;
    let mut out = String::from("ell2,lambda_opt,width,first_exclusion_ell2,past_first_exclusion,note\n");
    for ell2 in grid {
        match optimal_lambda(z, ell2) {
            Ok(lambda) => {
                let spec = IntervalSpec::from_z(lambda, z)?;
                let w = width(&spec, ell2).map(fmt_num).unwrap_or_default();
                let first = exclusion_point(1, &spec).ok();
                let past = first.map(|f| (ell2 >= f).to_string()).unwrap_or_default();
                writeln!(out, "{},{},{w},{},{past},", fmt_num(ell2), fmt_num(lambda), opt_num(first)).unwrap();
            }
            Err(e) => {
                let note = e.to_string().replace(',', ";");
                writeln!(out, "{},,,,,{note}", fmt_num(ell2)).unwrap();
            }
        }
    }
    Ok(out)
}

fn cmd_ep(m_lo: u64, m_hi: u64, step: u64, lambda: f64, rows: bool) -> Result<String> {
    if m_lo < 3 || m_hi < m_lo || step == 0 {
        return Err(CliError::Usage("need 3 <= m-lo <= m-hi and step >= 1".into()));
    }
    let limit = u32::try_from(m_hi).map_err(|_| CliError::Usage("m-hi must fit in 32 bits".into()))?;
    let spf = SpfTable::new(limit);
    let mut out = String::new();
    if rows {
        out.push_str("m,ell2,omega_phi,statistic\n");
    }
    let (mut n, mut sum_w, mut sum_ref) = (0u64, 0.0, 0.0);
    for m in (m_lo..=m_hi).step_by(step as usize) {
        let w = omega_phi(m, &spf)? as f64;
        let ell2 = loglog(m)?.value();
        n += 1;
        sum_w += w;
        sum_ref += ell2 * ell2 / 2.0;
        if rows {
            let stat = ekscope::intervals::ep_standardized_statistic(w, ell2, lambda)
                .map(fmt_num)
                .unwrap_or_default();
            writeln!(out, "{m},{},{w},{stat}", fmt_num(ell2)).unwrap();
        }
    }
    if !rows {
        let (mw, mr) = (sum_w / n as f64, sum_ref / n as f64);
        out.push_str("m_lo,m_hi,step,count,mean_omega_phi,mean_half_ell2_sq,ratio\n");
        writeln!(out, "{m_lo},{m_hi},{step},{n},{},{},{}", fmt_num(mw), fmt_num(mr), fmt_num(mw / mr)).unwrap();
    }
    Ok(out)
}

fn cmd_cdf_check(ns: &[u64], lambdas: &[f64]) -> Result<String> {
    let mut out = String::from("n,lambda,distance\n");
    for &n in ns {
        for &lambda in lambdas {
            let d = empirical_cdf_distance(n, lambda)?;
            writeln!(out, "{n},{},{}", fmt_num(lambda), fmt_num(d)).unwrap();
        }
    }
    Ok(out)
}
