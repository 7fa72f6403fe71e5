//! Trains the local adjustment functions f̂_μ and f̂_σ from smoothed sieve data.

use std::borrow::Cow;
use std::fmt::Write as _;

use crate::arith::{loglog, sieve_window, OmegaWindow};
use crate::coverage::fmt_num;
use crate::error::{domain, Error, Result};
use crate::intervals::{TrainedModel, MODEL_VERSION};
use crate::numerics::{nls_fit, ols_line, pearson_correlation, FitResult};

/// Training grid `m = m_lo, m_lo + step, …, m_hi` with smoothing half-width `j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrainingGrid {
    pub m_lo: u64,
    pub m_hi: u64,
    pub step: u64,
    pub j: u64,
}

impl Default for TrainingGrid {
    fn default() -> Self {
        TrainingGrid { m_lo: 10_000, m_hi: 1_000_000, step: 1000, j: 2000 }
    }
}

impl TrainingGrid {
    pub fn new(m_lo: u64, m_hi: u64, step: u64, j: u64) -> Result<Self> {
        let grid = TrainingGrid { m_lo, m_hi, step, j };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.step == 0 {
            return Err(domain("grid step must be positive"));
        }
        if self.m_hi < self.m_lo {
            return Err(domain(format!("empty grid: m_hi {} < m_lo {}", self.m_hi, self.m_lo)));
        }
        if self.m_lo < self.j + 3 {
            return Err(domain(format!("m_lo - j must be at least 3 (m_lo = {}, j = {})", self.m_lo, self.j)));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<u64> {
        (self.m_lo..=self.m_hi).step_by(self.step as usize).collect()
    }

    /// Integers touched by the smoothing windows, `[m_lo − j, m_hi + j]`.
    pub fn sieve_range(&self) -> (u64, u64) {
        (self.m_lo - self.j, self.m_hi + self.j)
    }
}

/// Provider of ω over integer ranges.
pub trait OmegaSource {
    fn omega_range(&self, lo: u64, hi: u64) -> Result<Cow<'_, [u8]>>;
}

impl OmegaSource for OmegaWindow {
    fn omega_range(&self, lo: u64, hi: u64) -> Result<Cow<'_, [u8]>> {
        self.omega_slice(lo, hi)
            .map(Cow::Borrowed)
            .ok_or(Error::Unavailable(if self.contains(lo) { hi } else { lo }))
    }
}

/// Sieves each requested range afresh.
#[derive(Clone, Copy, Debug, Default)]
pub struct OnDemandSieve;

impl OmegaSource for OnDemandSieve {
    fn omega_range(&self, lo: u64, hi: u64) -> Result<Cow<'_, [u8]>> {
        let half = (hi - lo).div_ceil(2);
        let w = sieve_window(lo + half, half)?;
        Ok(Cow::Owned(w.omega()[..=(hi - lo) as usize].to_vec()))
    }
}

/// One sieve covering every smoothing window of `grid`.
pub fn sieve_for_grid(grid: &TrainingGrid) -> Result<OmegaWindow> {
    grid.validate()?;
    let (lo, hi) = grid.sieve_range();
    let half = (hi - lo).div_ceil(2);
    sieve_window(lo + half, half)
}

/// ω̃_λ and, once estimated, σ̃_λ at each grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothedSeries {
    pub grid: TrainingGrid,
    pub lambda: f64,
    pub ms: Vec<u64>,
    pub ell2: Vec<f64>,
    pub omega_tilde: Vec<f64>,
    /// Empty until [`estimate_sigma`] runs.
    pub sigma_tilde: Vec<f64>,
}

impl SmoothedSeries {
    /// CSV with header `m,ell2,omega_tilde,sigma_tilde`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,ell2,omega_tilde,sigma_tilde\n");
        for i in 0..self.ms.len() {
            let sigma = self.sigma_tilde.get(i).map(|&s| fmt_num(s)).unwrap_or_default();
            writeln!(out, "{},{},{},{}", self.ms[i], fmt_num(self.ell2[i]), fmt_num(self.omega_tilde[i]), sigma).unwrap();
        }
        out
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("{name} must be positive, got {v}")))
    }
}

/// ω̃_λ(m): mean of `ω(t)^λ` over `t ∈ [m − j, m + j]` for each grid point.
pub fn smooth_omega<S: OmegaSource + ?Sized>(grid: &TrainingGrid, lambda: f64, source: &S) -> Result<SmoothedSeries> {
    grid.validate()?;
    check_positive("lambda", lambda)?;
    let ms = grid.points();
    let mut ell2 = Vec::with_capacity(ms.len());
    let mut omega_tilde = Vec::with_capacity(ms.len());
    for &m in &ms {
        let omegas = source.omega_range(m - grid.j, m + grid.j)?;
        let sum: f64 = omegas.iter().map(|&w| (w as f64).powf(lambda)).sum();
        ell2.push(loglog(m)?.value());
        omega_tilde.push(sum / omegas.len() as f64);
    }
    Ok(SmoothedSeries { grid: *grid, lambda, ms, ell2, omega_tilde, sigma_tilde: Vec::new() })
}

/// Exponents 0.10, 0.15, …, 3.00.
pub fn default_power_grid() -> Vec<f64> {
    (2..=60).map(|i| i as f64 * 0.05).collect()
}

/// Correlations within this of the best count as ties.
pub const POWER_TIE_TOLERANCE: f64 = 1e-5;

/// Grid exponent `q` maximizing the correlation of `series^q` with `ell2`.
///
/// Near-ties (within [`POWER_TIE_TOLERANCE`]) go to the exponent closest to 1.
pub fn power_search(series: &[f64], ell2: &[f64], grid: &[f64]) -> Result<f64> {
    if series.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Degenerate("power search needs a positive series".into()));
    }
    let mut scored = Vec::with_capacity(grid.len());
    for &q in grid {
        let powered: Vec<f64> = series.iter().map(|v| v.powf(q)).collect();
        scored.push((q, pearson_correlation(&powered, ell2)?));
    }
    let best = scored
        .iter()
        .map(|&(_, c)| c)
        .fold(f64::NEG_INFINITY, f64::max);
    scored
        .iter()
        .filter(|&&(_, c)| c >= best - POWER_TIE_TOLERANCE)
        .min_by(|a, b| (a.0 - 1.0).abs().total_cmp(&(b.0 - 1.0).abs()))
        .map(|&(q, _)| q)
        .ok_or_else(|| domain("empty exponent grid"))
}

/// Fits `ω̃_λ ≈ (β₀ + β₁ℓ₂)^(λ/q_μ)`, seeded by OLS of `ω̃^(q_μ/λ)` on ℓ₂.
pub fn fit_mean_model(series: &SmoothedSeries, q_mu: f64) -> Result<FitResult> {
    check_positive("q_mu", q_mu)?;
    let lambda = series.lambda;
    let linearized: Vec<f64> = series.omega_tilde.iter().map(|v| v.powf(q_mu / lambda)).collect();
    let (b0, b1) = ols_line(&series.ell2, &linearized)?;
    let power = lambda / q_mu;
    nls_fit(move |p: &[f64], x: f64| (p[0] + p[1] * x).powf(power), &[b0, b1], &series.ell2, &series.omega_tilde)
}

/// σ̃_λ(m): root mean square of `(ω(t)^λ − f̂_μ(t)^λ)/λ` over the window, divisor `2j + 1`.
pub fn estimate_sigma<S: OmegaSource + ?Sized>(
    series: &SmoothedSeries,
    mean_fit: &FitResult,
    q_mu: f64,
    source: &S,
) -> Result<SmoothedSeries> {
    let (b0, b1) = (mean_fit.params[0], mean_fit.params[1]);
    let lambda = series.lambda;
    let power = lambda / q_mu;
    let j = series.grid.j;
    let mut sigma = Vec::with_capacity(series.ms.len());
    for &m in &series.ms {
        let omegas = source.omega_range(m - j, m + j)?;
        let mut ss = 0.0;
        for (i, &w) in omegas.iter().enumerate() {
            let t = m - j + i as u64;
            let centre = (b0 + b1 * loglog(t)?.value()).powf(power);
            let d = ((w as f64).powf(lambda) - centre) / lambda;
            ss += d * d;
        }
        let s = (ss / omegas.len() as f64).sqrt();
        if !s.is_finite() {
            return Err(Error::Degenerate(format!("fitted mean undefined near m = {m}")));
        }
        sigma.push(s);
    }
    Ok(SmoothedSeries { sigma_tilde: sigma, ..series.clone() })
}

fn require_sigma(series: &SmoothedSeries) -> Result<()> {
    if series.sigma_tilde.len() == series.ms.len() {
        Ok(())
    } else {
        Err(domain("series has no sigma estimates yet"))
    }
}

/// Fits `σ̃_λ ≈ (γ₀ + γ₁ℓ₂)^(1/q_σ)`, seeded by OLS of `σ̃^(q_σ)` on ℓ₂.
pub fn fit_sigma_model(series: &SmoothedSeries, q_sigma: f64) -> Result<FitResult> {
    check_positive("q_sigma", q_sigma)?;
    require_sigma(series)?;
    let linearized: Vec<f64> = series.sigma_tilde.iter().map(|v| v.powf(q_sigma)).collect();
    let (g0, g1) = ols_line(&series.ell2, &linearized)?;
    let power = 1.0 / q_sigma;
    nls_fit(move |p: &[f64], x: f64| (p[0] + p[1] * x).powf(power), &[g0, g1], &series.ell2, &series.sigma_tilde)
}

/// Response regressed on ω̃₁ when fitting η.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum EtaResponse {
    /// σ̃₁ itself; reproduces the published coefficients.
    #[default]
    StdDev,
    /// σ̃₁², the variance form of the same relationship.
    Variance,
}

/// OLS line `(η₀, η₁)` of the chosen response on ω̃₁; requires a λ = 1 series.
pub fn fit_eta(series: &SmoothedSeries, response: EtaResponse) -> Result<(f64, f64)> {
    if series.lambda != 1.0 {
        return Err(domain(format!("eta needs a lambda = 1 series, got {}", series.lambda)));
    }
    require_sigma(series)?;
    let ys: Vec<f64> = match response {
        EtaResponse::StdDev => series.sigma_tilde.clone(),
        EtaResponse::Variance => series.sigma_tilde.iter().map(|s| s * s).collect(),
    };
    ols_line(&series.omega_tilde, &ys)
}

/// Power choices and η form for [`train`].
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct TrainingOptions {
    /// `None` uses q_μ = 1.
    pub q_mu: Option<f64>,
    /// `None` uses q_σ = 1/λ.
    pub q_sigma: Option<f64>,
    pub eta: EtaResponse,
}

/// Trained model plus the fits and diagnostics behind it.
#[derive(Clone, Debug)]
pub struct TrainingReport {
    pub model: TrainedModel,
    pub series: SmoothedSeries,
    pub mean_fit: FitResult,
    pub sigma_fit: FitResult,
    /// Correlation-maximizing exponents from the power search.
    pub q_mu_searched: f64,
    pub q_sigma_searched: f64,
    /// Correlation of ω̃^(1/λ) with ℓ₂.
    pub mean_correlation: f64,
    /// Correlation of σ̃^(1/λ) with ℓ₂.
    pub sigma_correlation: f64,
    /// Correlation of σ̃₁ with ω̃₁, for λ = 1.
    pub eta_correlation: Option<f64>,
}

fn converged(fit: FitResult, what: &str) -> Result<FitResult> {
    if fit.converged {
        Ok(fit)
    } else {
        Err(Error::FitFailed(format!(
            "{what} fit stopped after {} iterations at {:?}",
            fit.iterations, fit.params
        )))
    }
}

/// Full pipeline: smooth, search powers, fit mean and scale, then η for λ = 1.
pub fn train<S: OmegaSource + ?Sized>(
    grid: &TrainingGrid,
    lambda: f64,
    source: &S,
    options: &TrainingOptions,
) -> Result<TrainingReport> {
    let series = smooth_omega(grid, lambda, source)?;
    let powers = default_power_grid();
    let mean_base: Vec<f64> = series.omega_tilde.iter().map(|v| v.powf(1.0 / lambda)).collect();
    let q_mu_searched = power_search(&mean_base, &series.ell2, &powers)?;
    let q_mu = options.q_mu.unwrap_or(1.0);
    let mean_fit = converged(fit_mean_model(&series, q_mu)?, "mean")?;

    let series = estimate_sigma(&series, &mean_fit, q_mu, source)?;
    let q_sigma_searched = power_search(&series.sigma_tilde, &series.ell2, &powers)?;
    let q_sigma = options.q_sigma.unwrap_or(1.0 / lambda);
    let sigma_fit = converged(fit_sigma_model(&series, q_sigma)?, "scale")?;

    let mean_correlation = pearson_correlation(&mean_base, &series.ell2)?;
    let sigma_base: Vec<f64> = series.sigma_tilde.iter().map(|v| v.powf(1.0 / lambda)).collect();
    let sigma_correlation = pearson_correlation(&sigma_base, &series.ell2)?;
    let (eta, eta_correlation) = if lambda == 1.0 {
        let eta = fit_eta(&series, options.eta)?;
        (Some(eta), Some(pearson_correlation(&series.sigma_tilde, &series.omega_tilde)?))
    } else {
        (None, None)
    };

    let model = TrainedModel {
        lambda,
        q_mu,
        q_sigma,
        beta0: mean_fit.params[0],
        beta1: mean_fit.params[1],
        gamma0: sigma_fit.params[0],
        gamma1: sigma_fit.params[1],
        eta0: eta.map(|e| e.0),
        eta1: eta.map(|e| e.1),
        m_lo: grid.m_lo,
        m_hi: grid.m_hi,
        step: grid.step,
        j: grid.j,
        version: MODEL_VERSION,
    };
    Ok(TrainingReport {
        model,
        series,
        mean_fit,
        sigma_fit,
        q_mu_searched,
        q_sigma_searched,
        mean_correlation,
        sigma_correlation,
        eta_correlation,
    })
}

/// Sieves the grid's range and runs [`train`] with default options.
pub fn build_trained_model(grid: &TrainingGrid, lambda: f64) -> Result<TrainedModel> {
    let window = sieve_for_grid(grid)?;
    Ok(train(grid, lambda, &window, &TrainingOptions::default())?.model)
}
