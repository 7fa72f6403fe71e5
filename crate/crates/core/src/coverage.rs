//! Empirical and asymptotic coverage of interval estimates.

use std::fmt::Write as _;

use libm::lgamma as ln_gamma;

use crate::arith::{loglog, sieve_window, OmegaWindow};
use crate::error::{domain, Error, Result};
use crate::intervals::{standardized_statistic, Bounds, ShiftedPoissonModel};
use crate::numerics::{normal_cdf, z_from_alpha};

/// Integer-adjusted view of real bounds.
///
/// Integers strictly inside `[⌈L⌉, ⌊U⌋]` count fully; `⌊L⌋` is credited with
/// `p^L = ⌈L⌉ − L` and `⌈U⌉` with `p^U = U − ⌊U⌋`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FuzzyBounds {
    pub lower: f64,
    pub upper: f64,
    pub p_lower: f64,
    pub p_upper: f64,
}

impl FuzzyBounds {
    /// An undefined lower bound is clamped to 0.
    pub fn from_bounds(b: &Bounds) -> Self {
        let lower = b.lower_or_zero().max(0.0);
        let upper = b.upper;
        let p_upper = if upper.is_finite() { upper - upper.floor() } else { 0.0 };
        FuzzyBounds { lower, upper, p_lower: lower.ceil() - lower, p_upper }
    }

    pub fn ceil_lower(&self) -> f64 {
        self.lower.ceil()
    }

    pub fn floor_upper(&self) -> f64 {
        self.upper.floor()
    }

    /// Whether `[⌈L⌉, ⌊U⌋]` contains an integer.
    pub fn has_interior(&self) -> bool {
        self.ceil_lower() <= self.floor_upper()
    }

    /// Membership weight of the integer `d`.
    pub fn weight(&self, d: f64) -> f64 {
        let mut w = 0.0;
        if self.has_interior() && d >= self.ceil_lower() && d <= self.floor_upper() {
            w += 1.0;
        }
        if d == self.lower.floor() {
            w += self.p_lower;
        }
        if d == self.upper.ceil() {
            w += self.p_upper;
        }
        w
    }
}

/// Conventional and fuzzy coverage over one window, with the count of integers used.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowCoverage {
    pub conventional: f64,
    pub fuzzy: f64,
    pub count: usize,
}

/// Coverage of `bounds_at(ℓ₂(t))` over the integers `t ≥ 3` of `window`.
pub fn window_coverage<F>(window: &OmegaWindow, mut bounds_at: F) -> Result<WindowCoverage>
where
    F: FnMut(f64) -> Result<Bounds>,
{
    let (mut hits, mut fuzzy, mut count) = (0usize, 0.0f64, 0usize);
    for (t, w, _) in window.iter() {
        if t < 3 {
            continue;
        }
        let b = bounds_at(loglog(t)?.value())?;
        let w = w as f64;
        if b.contains(w) {
            hits += 1;
        }
        fuzzy += FuzzyBounds::from_bounds(&b).weight(w);
        count += 1;
    }
    if count == 0 {
        return Err(Error::EmptyWindow);
    }
    Ok(WindowCoverage { conventional: hits as f64 / count as f64, fuzzy: fuzzy / count as f64, count })
}

pub fn conventional_coverage<F>(window: &OmegaWindow, bounds_at: F) -> Result<f64>
where
    F: FnMut(f64) -> Result<Bounds>,
{
    Ok(window_coverage(window, bounds_at)?.conventional)
}

pub fn fuzzy_coverage<F>(window: &OmegaWindow, bounds_at: F) -> Result<f64>
where
    F: FnMut(f64) -> Result<Bounds>,
{
    Ok(window_coverage(window, bounds_at)?.fuzzy)
}

/// `P(D = d)` for `D − 1 ~ Poisson(θ)`.
pub fn shifted_poisson_pmf(d: u64, theta: f64) -> Result<f64> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(domain(format!("Poisson parameter must be positive, got {theta}")));
    }
    if d == 0 {
        return Ok(0.0);
    }
    let x = (d - 1) as f64;
    Ok((-theta + x * theta.ln() - ln_gamma(x + 1.0)).exp())
}

/// `P(a ≤ D ≤ b)` for integer reals `a ≤ b`, summed outward from the mode.
fn shifted_poisson_mass(theta: f64, a: f64, b: f64) -> f64 {
    // D − 1 = X ~ Poisson(θ); mass outside mode ± (12σ + 40) is below 1e-20
    let reach = (12.0 * theta.sqrt() + 40.0).ceil();
    let mode = theta.floor();
    let lo = (a - 1.0).max(0.0).max(mode - reach);
    let hi = (b - 1.0).min(mode + reach);
    if lo > hi {
        return 0.0;
    }
    let log_pmf = |x: f64| -theta + x * theta.ln() - ln_gamma(x + 1.0);
    let start = mode.clamp(lo, hi);
    let p0 = log_pmf(start).exp();
    let mut total = p0;
    let mut p = p0;
    let mut x = start;
    while x < hi {
        p *= theta / (x + 1.0);
        x += 1.0;
        total += p;
    }
    p = p0;
    x = start;
    while x > lo {
        p *= x / theta;
        x -= 1.0;
        total += p;
    }
    total
}

/// Shifted-Poisson probability of `[⌈L⌉, ⌊U⌋]`, undefined lower bounds clamped to 0.
pub fn asymptotic_coverage(ell2: f64, bounds: &Bounds, model: &ShiftedPoissonModel) -> Result<f64> {
    let theta = model.mean_param(ell2)?;
    let lo = bounds.lower_or_zero().max(0.0).ceil();
    let hi = bounds.upper.floor();
    if lo > hi {
        return Ok(0.0);
    }
    Ok(shifted_poisson_mass(theta, lo, hi))
}

/// Shifted-Poisson expectation of the fuzzy membership weight.
pub fn fuzzy_asymptotic_coverage(ell2: f64, fb: &FuzzyBounds, model: &ShiftedPoissonModel) -> Result<f64> {
    let theta = model.mean_param(ell2)?;
    let mut total = 0.0;
    if fb.has_interior() {
        total += shifted_poisson_mass(theta, fb.ceil_lower(), fb.floor_upper());
    }
    let point = |d: f64| if d >= 1.0 { shifted_poisson_mass(theta, d, d) } else { 0.0 };
    if fb.p_lower > 0.0 {
        total += fb.p_lower * point(fb.lower.floor());
    }
    if fb.p_upper > 0.0 {
        total += fb.p_upper * point(fb.upper.ceil());
    }
    Ok(total)
}

/// Gaussian probability that `|S_λ| > 2·threshold`, i.e. `2(1 − Φ(2·threshold))`.
pub fn rarity_proportion(threshold: f64) -> f64 {
    2.0 * (1.0 - normal_cdf(2.0 * threshold))
}

/// Grid `x = −3.0, −2.9, …, 3.0`.
pub fn default_cdf_grid() -> Vec<f64> {
    (0..=60).map(|i| -3.0 + 0.1 * i as f64).collect()
}

/// `max_x |F_n(x) − Φ(x)|` for the standardized statistic over `3 ≤ m ≤ n`, on `grid`.
///
/// `F_n` counts statistics `≤ x` and divides by `n`, so the two excluded
/// integers `m = 1, 2` sit in the denominator as they do in the theorem.
pub fn empirical_cdf_distance_on(n: u64, lambda: f64, grid: &[f64]) -> Result<f64> {
    if n < 1000 {
        return Err(domain(format!("n must be at least 1000, got {n}")));
    }
    let half = n / 2;
    let window = sieve_window(half + 1, half)?;
    let mut stats = Vec::with_capacity(n as usize);
    for (t, w, _) in window.iter() {
        if t < 3 || t > n {
            continue;
        }
        stats.push(standardized_statistic(w as f64, loglog(t)?.value(), lambda)?);
    }
    stats.sort_by(f64::total_cmp);
    let mut worst: f64 = 0.0;
    for &x in grid {
        let below = stats.partition_point(|&s| s <= x) as f64 / n as f64;
        worst = worst.max((below - normal_cdf(x)).abs());
    }
    Ok(worst)
}

pub fn empirical_cdf_distance(n: u64, lambda: f64) -> Result<f64> {
    empirical_cdf_distance_on(n, lambda, &default_cdf_grid())
}

/// Occurrence indices `s_i` of `ω(m) > U_{1,α}(m)` and the log gaps between them.
#[derive(Clone, Debug, PartialEq)]
pub struct Separation {
    pub indices: Vec<u64>,
    /// `log(s_{i+1}/s_i)`, one shorter than `indices`.
    pub log_ratios: Vec<f64>,
    /// False when `n_max` was reached before `count` indices were found.
    pub complete: bool,
}

const SEPARATION_CHUNK: u64 = 1 << 22;

/// The first `count` integers `3 ≤ m ≤ n_max` whose ω exceeds `ℓ₂ + z√ℓ₂`.
pub fn separation_sequence(alpha: f64, n_max: u64, count: usize) -> Result<Separation> {
    let z = z_from_alpha(alpha)?;
    separation_sequence_z(z, n_max, count)
}

pub fn separation_sequence_z(z: f64, n_max: u64, count: usize) -> Result<Separation> {
    let mut indices = Vec::new();
    let mut start = 1u64;
    'chunks: while start <= n_max && indices.len() < count {
        let half = SEPARATION_CHUNK / 2;
        let window = sieve_window(start + half, half)?;
        for (t, w, _) in window.iter() {
            if t > n_max {
                break 'chunks;
            }
            if t < 3 {
                continue;
            }
            let ell2 = loglog(t)?.value();
            if w as f64 > ell2 + z * ell2.sqrt() {
                indices.push(t);
                if indices.len() == count {
                    break 'chunks;
                }
            }
        }
        start = window.end() + 1;
    }
    let log_ratios = indices.windows(2).map(|p| (p[1] as f64 / p[0] as f64).ln()).collect();
    let complete = indices.len() == count;
    Ok(Separation { indices, log_ratios, complete })
}

/// Bradley's criteria: negligible when `|p − (1−α)| ≤ α/10`, liberal when `≤ α/2`.
pub fn bradley_flags(p: f64, alpha: f64) -> (bool, bool) {
    let gap = (p - (1.0 - alpha)).abs();
    (gap <= alpha / 10.0, gap <= alpha / 2.0)
}

/// One row of a coverage table.
#[derive(Clone, Debug, PartialEq)]
pub struct CoverageReport {
    pub m: String,
    pub j: Option<u64>,
    pub estimator: String,
    pub lambda: Option<f64>,
    pub alpha: f64,
    pub lower: Option<f64>,
    pub upper: f64,
    pub p_lower: f64,
    pub p_upper: f64,
    pub conventional: f64,
    pub fuzzy: Option<f64>,
}

impl CoverageReport {
    pub fn nominal(&self) -> f64 {
        1.0 - self.alpha
    }

    /// Flags from fuzzy coverage when present, else conventional.
    pub fn bradley(&self) -> (bool, bool) {
        bradley_flags(self.fuzzy.unwrap_or(self.conventional), self.alpha)
    }

    pub const CSV_HEADER: &'static str =
        "m,j,estimator,lambda,alpha,lower,upper,p_lower,p_upper,conventional,fuzzy,nominal";

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(fmt_num).unwrap_or_default();
        let mut row = String::new();
        write!(
            row,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.m,
            self.j.map(|j| j.to_string()).unwrap_or_default(),
            self.estimator,
            opt(self.lambda),
            fmt_num(self.alpha),
            opt(self.lower),
            fmt_num(self.upper),
            fmt_num(self.p_lower),
            fmt_num(self.p_upper),
            fmt_num(self.conventional),
            opt(self.fuzzy),
            fmt_num(self.nominal()),
        )
        .unwrap();
        row
    }
}

/// Fixed ten-decimal formatting so CSV output is byte-stable.
pub fn fmt_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.10}")
    } else if v > 0.0 {
        "inf".to_string()
    } else if v < 0.0 {
        "-inf".to_string()
    } else {
        "nan".to_string()
    }
}
