//! Numerical building blocks: the standard normal, bracketing root finding,
//! smoothing, correlation, and damped Gauss-Newton least squares.

use libm::erfc;

use crate::error::{domain, Error, Result};

/// Φ(x), evaluated through the complementary error function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Φ⁻¹(p): bisection down to a narrow bracket, then Newton polishing.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(domain(format!("normal quantile needs p in (0, 1), got {p}")));
    }
    let (mut lo, mut hi) = (-40.0f64, 40.0f64);
    while hi - lo > 1e-3 {
        let mid = 0.5 * (lo + hi);
        if normal_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..50 {
        let pdf = normal_pdf(x);
        if pdf == 0.0 {
            break;
        }
        let step = (normal_cdf(x) - p) / pdf;
        let next = (x - step).clamp(lo, hi);
        if (next - x).abs() <= 1e-15 * x.abs().max(1.0) {
            x = next;
            break;
        }
        x = next;
    }
    Ok(x)
}

/// `z` with Φ(z) = 1 − α/2.
pub fn z_from_alpha(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    normal_quantile(1.0 - alpha / 2.0)
}

/// α with Φ(z) = 1 − α/2.
pub fn alpha_from_z(z: f64) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(domain(format!("z must be positive and finite, got {z}")));
    }
    Ok(2.0 * (1.0 - normal_cdf(z)))
}

/// Bisection on a monotone `f` whose values at `lo` and `hi` bracket zero.
///
/// Stops once the bracket is narrower than `tol` or after 200 halvings.
pub fn find_root<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if !(fa.signum() * fb.signum() < 0.0) {
        return Err(Error::NoBracket { lo: a, hi: b });
    }
    let rising = fa < 0.0;
    for _ in 0..200 {
        if b - a <= tol {
            break;
        }
        let mid = 0.5 * (a + b);
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm < 0.0) == rising {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// Golden-section minimization of a unimodal `f` on `[lo, hi]`.
pub fn golden_section_min<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Mean of `values[at - j ..= at + j]`.
pub fn moving_average(values: &[f64], j: usize, at: usize) -> Result<f64> {
    if at < j || at + j >= values.len() {
        return Err(domain(format!(
            "moving average window [{}, {}] outside array of length {}",
            at as i64 - j as i64,
            at + j,
            values.len()
        )));
    }
    let window = &values[at - j..=at + j];
    Ok(window.iter().sum::<f64>() / window.len() as f64)
}

/// Sample Pearson correlation coefficient.
pub fn pearson_correlation(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(domain(format!("length mismatch: {} vs {}", x.len(), y.len())));
    }
    if x.len() < 3 {
        return Err(domain("correlation needs at least 3 points"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if !(sxx > 0.0 && syy > 0.0) || !sxx.is_finite() || !syy.is_finite() {
        return Err(Error::Degenerate("zero variance in correlation input".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Ordinary least squares line `y ≈ intercept + slope·x`.
pub fn ols_line(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(domain("ols needs two equal-length arrays of at least 2 points"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    if !(sxx > 0.0) {
        return Err(Error::Degenerate("regressor has zero variance".into()));
    }
    let slope = sxy / sxx;
    Ok((my - slope * mx, slope))
}

/// Outcome of [`nls_fit`].
#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    pub params: Vec<f64>,
    pub residual_sum_sq: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Residual sum of squares after each accepted step, starting from `init`.
    pub rss_trace: Vec<f64>,
}

const NLS_MAX_ITER: usize = 100;
const NLS_REL_STEP: f64 = 1e-10;
const NLS_MAX_HALVINGS: usize = 30;

fn rss<M: Fn(&[f64], f64) -> f64>(model: &M, p: &[f64], xs: &[f64], ys: &[f64]) -> f64 {
    xs.iter().zip(ys).map(|(&x, &y)| (y - model(p, x)).powi(2)).sum()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Solves the small dense system `a·x = b` in place; `None` when singular.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(scale > 0.0) || !scale.is_finite() {
        return None;
    }
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &k| a[i][col].abs().total_cmp(&a[k][col].abs()))?;
        if a[piv][col].abs() <= scale * 1e-14 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        let (upper, lower) = a.split_at_mut(col + 1);
        let pivot_row = &upper[col];
        for (i, row) in lower.iter_mut().enumerate() {
            let factor = row[col] / pivot_row[col];
            for (x, p) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                *x -= factor * p;
            }
            b[col + 1 + i] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Damped Gauss-Newton fit of `ys ≈ model(params, xs)`.
///
/// Jacobians come from central differences with step `1e-6·max(1, |p|)`.
/// A step is halved (up to 30 times) until the residual sum does not grow.
/// Stops when the accepted step is below `1e-10` relative to the parameters,
/// or after 100 iterations. A singular normal matrix ends the iteration with
/// `converged = false` and the best iterate so far.
pub fn nls_fit<M: Fn(&[f64], f64) -> f64>(
    model: M,
    init: &[f64],
    xs: &[f64],
    ys: &[f64],
) -> Result<FitResult> {
    if xs.len() != ys.len() || xs.is_empty() {
        return Err(domain("nls_fit needs equal-length, nonempty data"));
    }
    if init.is_empty() || init.iter().any(|v| !v.is_finite()) {
        return Err(domain("nls_fit needs finite initial parameters"));
    }
    let k = init.len();
    let mut p = init.to_vec();
    let mut current = rss(&model, &p, xs, ys);
    if !current.is_finite() {
        return Err(domain("model is not finite at the initial parameters"));
    }
    let mut trace = vec![current];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < NLS_MAX_ITER {
        iterations += 1;
        let mut jac = vec![vec![0.0; k]; xs.len()];
        for i in 0..k {
            let h = 1e-6 * p[i].abs().max(1.0);
            let mut up = p.clone();
            let mut down = p.clone();
            up[i] += h;
            down[i] -= h;
            for (row, &x) in jac.iter_mut().zip(xs) {
                row[i] = (model(&up, x) - model(&down, x)) / (2.0 * h);
            }
        }
        let mut jtj = vec![vec![0.0; k]; k];
        let mut jtr = vec![0.0; k];
        for ((row, &x), &y) in jac.iter().zip(xs).zip(ys) {
            let r = y - model(&p, x);
            for a in 0..k {
                jtr[a] += row[a] * r;
                for b in 0..k {
                    jtj[a][b] += row[a] * row[b];
                }
            }
        }
        let Some(delta) = solve_dense(jtj, jtr) else {
            break;
        };
        if delta.iter().any(|d| !d.is_finite()) {
            break;
        }

        let pnorm = norm(&p).max(f64::MIN_POSITIVE);
        let mut step = delta;
        let mut accepted = None;
        for _ in 0..=NLS_MAX_HALVINGS {
            let cand: Vec<f64> = p.iter().zip(&step).map(|(a, d)| a + d).collect();
            let r = rss(&model, &cand, xs, ys);
            if r.is_finite() && r <= current {
                accepted = Some((cand, r));
                break;
            }
            step.iter_mut().for_each(|d| *d *= 0.5);
        }
        let Some((cand, r)) = accepted else {
            // no descent left along the Gauss-Newton direction
            converged = norm(&step) * (1u64 << NLS_MAX_HALVINGS) as f64 / pnorm < 1e-8;
            break;
        };
        let rel = norm(&step) / pnorm;
        p = cand;
        current = r;
        trace.push(r);
        if rel < NLS_REL_STEP {
            converged = true;
            break;
        }
    }

    Ok(FitResult { params: p, residual_sum_sq: current, iterations, converged, rss_trace: trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cdf_reference_values() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((2.0 * normal_cdf(0.9) - 1.0 - 0.6319).abs() < 5e-5);
        assert!((2.0 * (1.0 - normal_cdf(2.0)) - 0.045_500_3).abs() < 5e-8);
        // Φ(-5) from tables
        assert!((normal_cdf(-5.0) / 2.866_515_718_791_939e-7 - 1.0).abs() < 1e-13);
    }

    #[test]
    fn quantile_reference_values() {
        assert_eq!(normal_quantile(0.5).unwrap(), 0.0);
        let alpha_star = 2.0 * (1.0 - normal_cdf(0.9));
        assert!((alpha_star - 0.3681).abs() < 5e-5);
        assert!((normal_quantile(1.0 - alpha_star / 2.0).unwrap() - 0.9).abs() < 1e-12);
        let x = normal_quantile(0.97725).unwrap();
        assert!((normal_cdf(x) - 0.97725).abs() < 1e-12);
        assert!((x - 2.0).abs() < 1e-3);
        assert!(normal_quantile(0.0).is_err());
        assert!(normal_quantile(1.0).is_err());
    }

    proptest! {
        #[test]
        fn quantile_inverts_cdf(x in -6.0f64..6.0) {
            prop_assert!((normal_quantile(normal_cdf(x)).unwrap() - x).abs() <= 1e-8);
        }

        #[test]
        fn cdf_symmetric_and_monotone(x in -8.0f64..8.0, dx in 0.0f64..1.0) {
            prop_assert!((normal_cdf(-x) - (1.0 - normal_cdf(x))).abs() <= 1e-12);
            prop_assert!(normal_cdf(x + dx) >= normal_cdf(x));
        }

        #[test]
        fn root_within_tolerance(c in -5.0f64..5.0) {
            let r = find_root(|x| x * x * x - c, -10.0, 10.0, 1e-12).unwrap();
            prop_assert!((r - c.cbrt()).abs() < 1e-10);
        }
    }

    #[test]
    fn roots() {
        assert!((find_root(|x| x - 1.0, 0.0, 2.0, 1e-12).unwrap() - 1.0).abs() < 1e-12);
        let g = |l: f64, z: f64| l.powf(-0.25) * (l.powf(0.75) - 1.0) / 0.75 - z;
        assert!((find_root(|l| g(l, 1.0), 1.0, 10.0, 1e-12).unwrap() - 2.4104).abs() < 5e-5);
        assert!((find_root(|l| g(l, 2.0), 1.0, 20.0, 1e-12).unwrap() - 4.7422).abs() < 5e-5);
        assert!(matches!(find_root(|x| x * x + 1.0, -1.0, 1.0, 1e-9), Err(Error::NoBracket { .. })));
        // decreasing function
        assert!((find_root(|x| 3.0 - x, 0.0, 10.0, 1e-12).unwrap() - 3.0).abs() < 1e-11);
    }

    #[test]
    fn golden_section_parabola() {
        let x = golden_section_min(|x| (x - 0.3).powi(2), -1.0, 2.0, 1e-9);
        assert!((x - 0.3).abs() < 1e-8);
    }

    #[test]
    fn smoothing() {
        assert_eq!(moving_average(&[4.0; 9], 3, 4).unwrap(), 4.0);
        assert_eq!(moving_average(&[1.0, 2.0, 3.0], 1, 1).unwrap(), 2.0);
        assert!(moving_average(&[1.0, 2.0, 3.0], 1, 0).is_err());
        assert!(moving_average(&[1.0, 2.0, 3.0], 2, 1).is_err());
    }

    #[test]
    fn correlation() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson_correlation(&x, &y).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson_correlation(&x, &neg).unwrap() + 1.0).abs() < 1e-12);
        assert!(pearson_correlation(&x, &[1.0; 10]).is_err());
        assert!(pearson_correlation(&x[..2], &y[..2]).is_err());
    }

    #[test]
    fn fit_linear_exact() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.5).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 1.5 - 0.25 * x).collect();
        let fit = nls_fit(|p, x| p[0] + p[1] * x, &[0.0, 0.0], &xs, &ys).unwrap();
        assert!(fit.converged);
        assert!((fit.params[0] - 1.5).abs() < 1e-8);
        assert!((fit.params[1] + 0.25).abs() < 1e-8);
    }

    #[test]
    fn fit_square_root_model() {
        let xs: Vec<f64> = (0..50).map(|i| 1.0 + i as f64 * 0.1).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (0.4 + 0.9 * x).sqrt()).collect();
        let fit = nls_fit(|p, x| (p[0] + p[1] * x).sqrt(), &[0.0, 1.0], &xs, &ys).unwrap();
        assert!((fit.params[0] - 0.4).abs() < 1e-6);
        assert!((fit.params[1] - 0.9).abs() < 1e-6);
        assert!(fit.rss_trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn fit_singular_reports_nonconvergence() {
        // p[0] and p[1] are not separately identifiable
        let xs = [1.0, 2.0, 3.0];
        let ys = [2.0, 4.0, 6.0];
        let fit = nls_fit(|p, x| (p[0] + p[1]) * x, &[1.0, 1.0], &xs, &ys).unwrap();
        assert!(!fit.converged);
        assert_eq!(fit.params, vec![1.0, 1.0]);
    }

    #[test]
    fn ols() {
        let (a, b) = ols_line(&[1.0, 2.0, 3.0], &[3.0, 5.0, 7.0]).unwrap();
        assert!((a - 1.0).abs() < 1e-12 && (b - 2.0).abs() < 1e-12);
        assert!(ols_line(&[1.0, 1.0], &[1.0, 2.0]).is_err());
    }
}
