//! Browser bindings. Every export returns a JSON string; failures come back
//! as `{"error": "..."}` so the page never has to catch exceptions.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use ekscope::intervals::{optimal_lambda, width};
use ekscope::numerics::{alpha_from_z, z_from_alpha};
use ekscope::{exp_exp, loglog, sieve_window, window_coverage, Estimator, FuzzyBounds, IntervalSpec};

/// Largest halfwidth the page may request; keeps a sieve well under a second.
pub const MAX_DEMO_HALFWIDTH: u64 = 50_000;

#[derive(Serialize)]
struct Failure {
    error: String,
}

fn to_json<T: Serialize>(result: Result<T, ekscope::Error>) -> String {
    match result {
        Ok(v) => serde_json::to_string(&v),
        Err(e) => serde_json::to_string(&Failure { error: e.to_string() }),
    }
    .expect("plain structs serialize")
}

#[derive(Serialize, Debug)]
pub struct IntervalRow {
    pub estimator: String,
    pub lambda: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub error: Option<String>,
}

#[derive(Serialize, Debug)]
pub struct IntervalTable {
    pub ell2: f64,
    pub magnitude: String,
    pub alpha: f64,
    pub z: f64,
    pub rows: Vec<IntervalRow>,
}

pub fn interval_table(ell2: f64, z: f64) -> ekscope::Result<IntervalTable> {
    if !(ell2 > 0.0 && ell2.is_finite()) {
        return Err(ekscope::Error::Domain(format!("ell2 must be positive, got {ell2}")));
    }
    let alpha = alpha_from_z(z)?;
    let estimators = [
        Estimator::boxcox(0.5),
        Estimator::boxcox(0.75),
        Estimator::boxcox(1.0),
        Estimator::Score,
        Estimator::Poisson,
    ];
    let rows = estimators
        .iter()
        .map(|est| {
            let (lower, upper, error) = match est.bounds(ell2, alpha) {
                Ok(b) => (b.lower, Some(b.upper).filter(|u| u.is_finite()), None),
                Err(e) => (None, None, Some(e.to_string())),
            };
            IntervalRow { estimator: est.tag().to_string(), lambda: est.lambda(), lower, upper, error }
        })
        .collect();
    Ok(IntervalTable { ell2, magnitude: exp_exp(ell2).to_string(), alpha, z, rows })
}

#[derive(Serialize, Debug)]
pub struct WidthCurve {
    pub ell2: f64,
    pub z: f64,
    pub lambdas: Vec<f64>,
    /// `None` where the lower bound is undefined.
    pub widths: Vec<Option<f64>>,
    pub lambda_opt: f64,
    pub width_opt: f64,
}

pub fn width_curve(ell2: f64, z: f64) -> ekscope::Result<WidthCurve> {
    let lambda_opt = optimal_lambda(z, ell2)?;
    let spec_at = |lambda| IntervalSpec { lambda, alpha: f64::NAN, z, center_shift: 0.0 };
    let lambdas: Vec<f64> = (0..=195).map(|i| 0.05 + 0.01 * i as f64).collect();
    let widths = lambdas.iter().map(|&l| width(&spec_at(l), ell2).ok().filter(|w| w.is_finite())).collect();
    let width_opt = width(&spec_at(lambda_opt), ell2)?;
    Ok(WidthCurve { ell2, z, lambdas, widths, lambda_opt, width_opt })
}

#[derive(Serialize, Debug)]
pub struct WindowSummary {
    pub m: u64,
    pub j: u64,
    pub ell2: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub lower: Option<f64>,
    pub upper: f64,
    pub p_lower: f64,
    pub p_upper: f64,
    pub conventional: f64,
    pub fuzzy: f64,
    /// `histogram[k]` counts integers in the window with ω = k.
    pub histogram: Vec<u64>,
}

pub fn window_summary(m: u64, j: u64, lambda: f64, alpha: f64) -> ekscope::Result<WindowSummary> {
    if j > MAX_DEMO_HALFWIDTH {
        return Err(ekscope::Error::Domain(format!("halfwidth is capped at {MAX_DEMO_HALFWIDTH} here")));
    }
    let spec = IntervalSpec::from_alpha(lambda, alpha)?;
    let ell2 = loglog(m)?.value();
    let b = ekscope::intervals::bounds(&spec, ell2)?;
    let fb = FuzzyBounds::from_bounds(&b);
    let window = sieve_window(m, j)?;
    let cov = window_coverage(&window, |l| ekscope::intervals::bounds(&spec, l))?;
    let mut histogram = Vec::new();
    for &w in window.omega() {
        let k = w as usize;
        if histogram.len() <= k {
            histogram.resize(k + 1, 0);
        }
        histogram[k] += 1;
    }
    Ok(WindowSummary {
        m,
        j,
        ell2,
        lambda,
        alpha,
        lower: b.lower,
        upper: b.upper,
        p_lower: fb.p_lower,
        p_upper: fb.p_upper,
        conventional: cov.conventional,
        fuzzy: cov.fuzzy,
        histogram,
    })
}

/// Bounds of every untrained estimator at `ell2`, level given by z.
#[wasm_bindgen]
pub fn intervals(ell2: f64, z: f64) -> String {
    to_json(interval_table(ell2, z))
}

/// Box-Cox width over λ ∈ [0.05, 2] and its minimizer.
#[wasm_bindgen(js_name = widthCurve)]
pub fn width_curve_json(ell2: f64, z: f64) -> String {
    to_json(width_curve(ell2, z))
}

/// Sieves `[m − j, m + j]` and reports Box-Cox coverage there. `m` arrives as
/// an f64 from JavaScript and must be an exact integer.
#[wasm_bindgen(js_name = windowCoverage)]
pub fn window_coverage_json(m: f64, j: u32, lambda: f64, z: f64) -> String {
    let result = if m.fract() != 0.0 || !(1.0..=9.007_199_254_740_991e15).contains(&m) {
        Err(ekscope::Error::Domain(format!("m must be a positive integer below 2^53, got {m}")))
    } else {
        alpha_from_z(z).and_then(|alpha| window_summary(m as u64, j as u64, lambda, alpha))
    };
    to_json(result)
}

/// α for a given z, for display next to the slider.
#[wasm_bindgen(js_name = alphaFromZ)]
pub fn alpha_from_z_js(z: f64) -> f64 {
    alpha_from_z(z).unwrap_or(f64::NAN)
}

/// z for a given α.
#[wasm_bindgen(js_name = zFromAlpha)]
pub fn z_from_alpha_js(alpha: f64) -> f64 {
    z_from_alpha(alpha).unwrap_or(f64::NAN)
}
