//! Interval estimates for ω in the vicinity of m, on the ℓ₂ scale.
//!
//! Every estimator here maps an ℓ₂ value (and a coverage level) to real
//! bounds `[L, U]`. The Box-Cox family, its centre-shifted variant, the score
//! interval, the shifted-Poisson interval, and their trained counterparts all
//! share the [`Bounds`] type so the coverage module can treat them uniformly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::coverage::{fuzzy_asymptotic_coverage, FuzzyBounds};
use crate::error::{domain, Error, Result};
use crate::numerics::{alpha_from_z, find_root, golden_section_min, z_from_alpha};

/// Box-Cox power, coverage level, and optional shift of the leading ℓ₂ factor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntervalSpec {
    pub lambda: f64,
    pub alpha: f64,
    pub z: f64,
    pub center_shift: f64,
}

impl IntervalSpec {
    pub fn from_alpha(lambda: f64, alpha: f64) -> Result<Self> {
        check_lambda(lambda)?;
        let z = z_from_alpha(alpha)?;
        Ok(IntervalSpec { lambda, alpha, z, center_shift: 0.0 })
    }

    pub fn from_z(lambda: f64, z: f64) -> Result<Self> {
        check_lambda(lambda)?;
        let alpha = alpha_from_z(z)?;
        Ok(IntervalSpec { lambda, alpha, z, center_shift: 0.0 })
    }

    /// Replaces the leading ℓ₂ factor by ℓ₂ + `shift`; the √ℓ₂ term is unchanged.
    pub fn with_shift(mut self, shift: f64) -> Self {
        self.center_shift = shift;
        self
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("lambda must be finite, got {lambda}")))
    }
}

fn check_ell2(ell2: f64) -> Result<()> {
    if ell2 > 0.0 && ell2.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("log log value must be positive, got {ell2}")))
    }
}

/// Real interval bounds. `lower` is `None` when its radicand is negative
/// under a non-integer exponent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bounds {
    pub lower: Option<f64>,
    pub upper: f64,
}

impl Bounds {
    pub fn new(lower: f64, upper: f64) -> Self {
        Bounds { lower: Some(lower), upper }
    }

    /// Lower bound with the undefined case clamped to 0.
    pub fn lower_or_zero(&self) -> f64 {
        self.lower.unwrap_or(0.0)
    }

    pub fn contains(&self, value: f64) -> bool {
        value >= self.lower_or_zero() && value <= self.upper
    }

    pub fn width(&self) -> Result<f64> {
        self.lower.map(|l| self.upper - l).ok_or(Error::UndefinedBound)
    }
}

/// Box-Cox transform `(x^λ − 1)/λ`, `log x` at λ = 0.
pub fn boxcox(x: f64, lambda: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(domain(format!("Box-Cox needs x > 0, got {x}")));
    }
    if lambda == 0.0 {
        Ok(x.ln())
    } else {
        Ok((lambda * x.ln()).exp_m1() / lambda)
    }
}

/// `(ω^λ − ℓ₂^λ)/(λ ℓ₂^(λ−1/2))`, or `(log ω − log ℓ₂)√ℓ₂` at λ = 0.
pub fn standardized_statistic(omega: f64, ell2: f64, lambda: f64) -> Result<f64> {
    check_ell2(ell2)?;
    if omega < 0.0 || (omega == 0.0 && lambda <= 0.0) {
        return Err(domain(format!("statistic undefined for omega = {omega} at lambda = {lambda}")));
    }
    if lambda == 0.0 {
        Ok((omega.ln() - ell2.ln()) * ell2.sqrt())
    } else {
        Ok((omega.powf(lambda) - ell2.powf(lambda)) / (lambda * ell2.powf(lambda - 0.5)))
    }
}

fn is_integer_exponent(lambda: f64) -> bool {
    let inv = 1.0 / lambda;
    (inv - inv.round()).abs() < 1e-12
}

/// `base·radicand^(1/λ)`, `None` for a negative radicand with non-integer exponent.
fn powered(base: f64, radicand: f64, lambda: f64) -> Option<f64> {
    if radicand >= 0.0 {
        Some(base * radicand.powf(1.0 / lambda))
    } else if is_integer_exponent(lambda) {
        Some(base * radicand.powf((1.0 / lambda).round()))
    } else {
        None
    }
}

/// Box-Cox interval `[(ℓ₂+s)(1 − zλ/√ℓ₂)^(1/λ), (ℓ₂+s)(1 + zλ/√ℓ₂)^(1/λ)]`.
pub fn bounds(spec: &IntervalSpec, ell2: f64) -> Result<Bounds> {
    check_ell2(ell2)?;
    let base = ell2 + spec.center_shift;
    if !(base > 0.0) {
        return Err(domain(format!("shifted centre {base} must be positive")));
    }
    let root = ell2.sqrt();
    if spec.lambda == 0.0 {
        let e = spec.z / root;
        return Ok(Bounds::new(base * (-e).exp(), base * e.exp()));
    }
    let a = spec.z * spec.lambda / root;
    let lower = powered(base, 1.0 - a, spec.lambda);
    // λ < 0 with 1 + a ≤ 0: every large ω satisfies the statistic bound
    let upper = powered(base, 1.0 + a, spec.lambda).unwrap_or(f64::INFINITY);
    Ok(Bounds { lower, upper })
}

/// Width `U − L` of the Box-Cox interval, continuous at λ = 0.
pub fn width(spec: &IntervalSpec, ell2: f64) -> Result<f64> {
    check_ell2(ell2)?;
    let base = ell2 + spec.center_shift;
    let root = ell2.sqrt();
    if spec.lambda == 0.0 {
        let e = spec.z / root;
        return Ok(2.0 * base * e.sinh());
    }
    let a = spec.z * spec.lambda / root;
    if 1.0 - a > 0.0 && 1.0 + a > 0.0 {
        // ℓ·(e^u − e^v) = ℓ·e^v·expm1(u − v), free of cancellation
        let u = a.ln_1p() / spec.lambda;
        let v = (-a).ln_1p() / spec.lambda;
        return Ok(base * v.exp() * (u - v).exp_m1().abs());
    }
    bounds(spec, ell2)?.width()
}

/// Roots of `((ω − ℓ₂)/√ω)² = z²` in ω.
pub fn score_bounds(z: f64, ell2: f64) -> Result<Bounds> {
    check_ell2(ell2)?;
    if !(z >= 0.0) {
        return Err(domain(format!("z must be non-negative, got {z}")));
    }
    let half = z * z / 2.0;
    let upper = ell2 + half + z * (ell2 + z * z / 4.0).sqrt();
    // product of the roots is ℓ₂²
    let lower = ell2 * (ell2 / upper);
    Ok(Bounds::new(lower, upper))
}

/// `(β₀, β₁)` for a shifted Poisson whose parameter is `β₀ + β₁ℓ₂`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftedPoissonModel {
    pub beta0: f64,
    pub beta1: f64,
}

impl ShiftedPoissonModel {
    /// Parameter ℓ₂ itself.
    pub const IDENTITY: ShiftedPoissonModel = ShiftedPoissonModel { beta0: 0.0, beta1: 1.0 };

    pub fn mean_param(&self, ell2: f64) -> Result<f64> {
        let theta = self.beta0 + self.beta1 * ell2;
        if theta > 0.0 && theta.is_finite() {
            Ok(theta)
        } else {
            Err(domain(format!("shifted Poisson parameter {theta} must be positive")))
        }
    }
}

impl Default for ShiftedPoissonModel {
    fn default() -> Self {
        Self::IDENTITY
    }
}

/// Symmetric interval `[c − κ, c + κ]` whose fuzzy shifted-Poisson mass equals `1 − α`.
///
/// `c` defaults to the distribution mean `θ + 1`.
pub fn poisson_bounds(
    alpha: f64,
    ell2: f64,
    model: &ShiftedPoissonModel,
    mean_override: Option<f64>,
) -> Result<Bounds> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let theta = model.mean_param(ell2)?;
    let center = mean_override.unwrap_or(theta + 1.0);
    let target = 1.0 - alpha;
    let coverage = |kappa: f64| -> f64 {
        let fb = FuzzyBounds::from_bounds(&Bounds::new(center - kappa, center + kappa));
        fuzzy_asymptotic_coverage(ell2, &fb, model).unwrap_or(f64::NAN) - target
    };
    // a point interval already carries fuzzy mass; smaller targets saturate at κ = 0
    if coverage(0.0) >= 0.0 {
        return Ok(Bounds::new(center, center));
    }
    let hi = (center - 1.0).max(0.0) + 60.0 * theta.max(1.0).sqrt();
    let kappa = find_root(coverage, 0.0, hi, 1e-12 * hi.max(1.0)).map_err(|_| {
        domain(format!("coverage {target} unreachable for the Poisson interval at ell2 = {ell2}"))
    })?;
    Ok(Bounds::new(center - kappa, center + kappa))
}

/// Argmin over λ ∈ [0.05, 2] of the Box-Cox width.
///
/// A 0.01 grid locates the basin, then golden-section search refines it.
pub fn optimal_lambda(z: f64, ell2: f64) -> Result<f64> {
    check_ell2(ell2)?;
    let objective = |lambda: f64| {
        let spec = IntervalSpec { lambda, alpha: f64::NAN, z, center_shift: 0.0 };
        width(&spec, ell2).ok().filter(|w| w.is_finite()).unwrap_or(f64::INFINITY)
    };
    let (lo, hi, steps) = (0.05, 2.0, 195usize);
    let h = (hi - lo) / steps as f64;
    let grid: Vec<f64> = (0..=steps).map(|i| lo + h * i as f64).collect();
    let values: Vec<f64> = grid.iter().map(|&l| objective(l)).collect();
    let best = (0..values.len())
        .filter(|&i| values[i].is_finite())
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .ok_or_else(|| domain(format!("width undefined on [0.05, 2] at ell2 = {ell2}")))?;
    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(steps)];
    Ok(golden_section_min(objective, a, b, 1e-7))
}

const POINT_GRID_LO: f64 = 1e-6;
const POINT_GRID_HI: f64 = 1e3;
const POINT_GRID_STEPS: usize = 900;

/// Largest ℓ₂ in `[1e-6, 1e3]` where `f` crosses from negative to non-negative.
fn last_upward_crossing<F: Fn(f64) -> Option<f64>>(f: F) -> Result<f64> {
    let ratio = (POINT_GRID_HI / POINT_GRID_LO).ln() / POINT_GRID_STEPS as f64;
    let grid: Vec<f64> = (0..=POINT_GRID_STEPS).map(|i| POINT_GRID_LO * (ratio * i as f64).exp()).collect();
    let vals: Vec<Option<f64>> = grid.iter().map(|&x| f(x)).collect();
    for i in (0..POINT_GRID_STEPS).rev() {
        if let (Some(a), Some(b)) = (vals[i], vals[i + 1]) {
            if a < 0.0 && b >= 0.0 {
                return find_root(|x| f(x).unwrap_or(f64::NAN), grid[i], grid[i + 1], 1e-14);
            }
        }
    }
    Err(Error::NoBracket { lo: POINT_GRID_LO, hi: POINT_GRID_HI })
}

/// ℓ₂ at which the upper bound reaches `k`, by root finding.
pub fn inclusion_point_by_root(k: u32, spec: &IntervalSpec) -> Result<f64> {
    let k = k as f64;
    last_upward_crossing(|l| bounds(spec, l).ok().map(|b| b.upper - k))
}

/// ℓ₂ at which the lower bound reaches `k`, by root finding.
pub fn exclusion_point_by_root(k: u32, spec: &IntervalSpec) -> Result<f64> {
    let k = k as f64;
    last_upward_crossing(|l| bounds(spec, l).ok().and_then(|b| b.lower).map(|lo| lo - k))
}

/// ℓ₂ of the `k`-th inclusion point, where `k` enters the interval through U.
pub fn inclusion_point(k: u32, spec: &IntervalSpec) -> Result<f64> {
    if k == 0 {
        return Err(domain("inclusion points are defined for k >= 1"));
    }
    let kf = k as f64;
    let z = spec.z;
    if spec.center_shift == 0.0 {
        if spec.lambda == 1.0 {
            return Ok((kf + z * z / 2.0) - z * (kf + z * z / 4.0).sqrt());
        }
        if spec.lambda == 0.5 {
            if z * z > 4.0 * kf {
                return Err(domain(format!("no inclusion point: z^2 = {} exceeds 4k = {}", z * z, 4.0 * kf)));
            }
            return Ok((kf.sqrt() - z / 2.0).powi(2));
        }
    }
    inclusion_point_by_root(k, spec)
}

/// ℓ₂ of the `k`-th exclusion point, where `k` leaves the interval through L.
pub fn exclusion_point(k: u32, spec: &IntervalSpec) -> Result<f64> {
    if k == 0 {
        return Err(domain("exclusion points are defined for k >= 1"));
    }
    let kf = k as f64;
    let (z, lambda) = (spec.z, spec.lambda);
    if spec.center_shift == 0.0 {
        if lambda == 1.0 {
            return Ok((kf + z * z / 2.0) + z * (kf + z * z / 4.0).sqrt());
        }
        if lambda == 0.5 {
            return Ok((kf.sqrt() + z / 2.0).powi(2));
        }
        if k == 1 {
            // L(θ) = 1  ⇔  z = ℓ₂^(1/2 − λ)(ℓ₂^λ − 1)/λ
            let first_exit = |l: f64| {
                let rhs = if lambda == 0.0 { l.sqrt() * l.ln() } else { l.powf(0.5 - lambda) * (l.powf(lambda) - 1.0) / lambda };
                Some(rhs - z)
            };
            return last_upward_crossing(first_exit);
        }
    }
    exclusion_point_by_root(k, spec)
}

/// Box-Cox statistic for ω∘φ, centred at ℓ₂² with scale `2λℓ₂^(2λ−1/2)/√3`.
pub fn ep_standardized_statistic(omega_phi: f64, ell2: f64, lambda: f64) -> Result<f64> {
    check_ell2(ell2)?;
    if omega_phi < 0.0 || (omega_phi == 0.0 && lambda <= 0.0) {
        return Err(domain(format!("statistic undefined for omega_phi = {omega_phi} at lambda = {lambda}")));
    }
    let x = 2.0 * omega_phi;
    let s3 = 3f64.sqrt();
    if lambda == 0.0 {
        Ok((x.ln() - 2.0 * ell2.ln()) / (2.0 / (s3 * ell2.sqrt())))
    } else {
        Ok((x.powf(lambda) - ell2.powf(2.0 * lambda)) / (2.0 * lambda * ell2.powf(2.0 * lambda - 0.5) / s3))
    }
}

pub const MODEL_VERSION: u32 = 1;

/// Fitted local adjustment functions plus the training grid they came from.
///
/// `f̂_μ = (β₀ + β₁ℓ₂)^(1/q_μ)`, `f̂_σ = (γ₀ + γ₁ℓ₂)^(1/q_σ)`; `η` is present
/// for λ = 1 models and drives the trained score interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub lambda: f64,
    pub q_mu: f64,
    pub q_sigma: f64,
    pub beta0: f64,
    pub beta1: f64,
    pub gamma0: f64,
    pub gamma1: f64,
    pub eta0: Option<f64>,
    pub eta1: Option<f64>,
    pub m_lo: u64,
    pub m_hi: u64,
    pub step: u64,
    pub j: u64,
    pub version: u32,
}

impl TrainedModel {
    pub fn f_mu(&self, ell2: f64) -> Result<f64> {
        let base = self.beta0 + self.beta1 * ell2;
        if !(base > 0.0) {
            return Err(domain(format!("mean model base {base} not positive at ell2 = {ell2}")));
        }
        Ok(base.powf(1.0 / self.q_mu))
    }

    pub fn f_sigma(&self, ell2: f64) -> Result<f64> {
        let base = self.gamma0 + self.gamma1 * ell2;
        if !(base > 0.0) {
            return Err(domain(format!("scale model base {base} not positive at ell2 = {ell2}")));
        }
        Ok(base.powf(1.0 / self.q_sigma))
    }

    pub fn eta(&self) -> Option<(f64, f64)> {
        Some((self.eta0?, self.eta1?))
    }

    /// Shifted Poisson with parameter `(β₀ − 1) + β₁ℓ₂`, whose mean is f̂_μ when q_μ = 1.
    pub fn poisson_model(&self) -> ShiftedPoissonModel {
        ShiftedPoissonModel { beta0: self.beta0 - 1.0, beta1: self.beta1 }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: TrainedModel = serde_json::from_str(text)?;
        if model.version != MODEL_VERSION {
            return Err(domain(format!("unsupported model version {}", model.version)));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrainedKind {
    BoxCox,
    Score,
}

/// Trained Box-Cox or score interval at `ell2`.
pub fn trained_bounds(model: &TrainedModel, ell2: f64, alpha: f64, kind: TrainedKind) -> Result<Bounds> {
    check_ell2(ell2)?;
    let z = z_from_alpha(alpha)?;
    let f_mu = model.f_mu(ell2)?;
    match kind {
        TrainedKind::BoxCox => {
            let lambda = model.lambda;
            let f_sigma = model.f_sigma(ell2)?;
            if lambda == 0.0 {
                let e = z * f_sigma;
                return Ok(Bounds::new(f_mu * (-e).exp(), f_mu * e.exp()));
            }
            let centre = f_mu.powf(lambda);
            let spread = z * lambda * f_sigma;
            let lower = powered(1.0, centre - spread, lambda);
            let upper = powered(1.0, centre + spread, lambda).unwrap_or(f64::INFINITY);
            Ok(Bounds { lower, upper })
        }
        TrainedKind::Score => {
            let (eta0, eta1) = model
                .eta()
                .ok_or_else(|| domain("trained score interval needs eta coefficients"))?;
            let radicand = eta0 + eta1 * f_mu + eta1 * eta1 * z * z / 4.0;
            if radicand < 0.0 {
                return Err(Error::NegativeRadicand(radicand));
            }
            let mid = f_mu + eta1 * z * z / 2.0;
            let half = z * radicand.sqrt();
            Ok(Bounds::new(mid - half, mid + half))
        }
    }
}

/// Trained Poisson interval centred at f̂_μ.
pub fn trained_poisson_bounds(model: &TrainedModel, ell2: f64, alpha: f64) -> Result<Bounds> {
    let centre = model.f_mu(ell2)?;
    poisson_bounds(alpha, ell2, &model.poisson_model(), Some(centre))
}
