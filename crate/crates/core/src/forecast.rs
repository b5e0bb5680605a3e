//! Least-squares trend and ARIMA(1,1,1) forecasting of short series.

use thiserror::Error;

pub use crate::cost::ForecastKind;

pub const ARIMA_MAX_ITER: usize = 500;
pub const ARIMA_TOL: f64 = 1e-8;

#[derive(Debug, Error, PartialEq)]
pub enum ForecastError {
    #[error("series has {got} points, at least {needed} required")]
    SeriesTooShort { needed: usize, got: usize },
    #[error("series contains a non-finite value at index {0}")]
    NonFiniteInput(usize),
    #[error("forecast horizon must be at least 1")]
    InvalidHorizon,
}

fn check(history: &[f64], needed: usize) -> Result<(), ForecastError> {
    if history.len() < needed {
        return Err(ForecastError::SeriesTooShort {
            needed,
            got: history.len(),
        });
    }
    match history.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(ForecastError::NonFiniteInput(i)),
        None => Ok(()),
    }
}

/// Least squares of value on time index 0..n−1. Returns (slope, intercept).
pub fn ols_fit(history: &[f64]) -> Result<(f64, f64), ForecastError> {
    check(history, 2)?;
    let n = history.len() as f64;
    let tbar = (n - 1.0) / 2.0;
    let ybar = history.iter().sum::<f64>() / n;
    let (mut sty, mut stt) = (0.0, 0.0);
    for (t, y) in history.iter().enumerate() {
        let dt = t as f64 - tbar;
        sty += dt * (y - ybar);
        stt += dt * dt;
    }
    let slope = sty / stt;
    Ok((slope, ybar - slope * tbar))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArimaParams {
    pub phi: f64,
    pub theta: f64,
    /// Mean of the differenced process.
    pub intercept: f64,
    pub css: f64,
    /// Objective at the starting point of the search.
    pub initial_css: f64,
    pub iterations: usize,
    /// All differences were equal, so only the intercept was fitted.
    pub degenerate: bool,
}

fn differences(history: &[f64]) -> Vec<f64> {
    history.windows(2).map(|w| w[1] - w[0]).collect()
}

/// One-step residuals of the differenced series, conditional on e₀ = 0.
fn residuals(w: &[f64], phi: f64, theta: f64, mu: f64) -> Vec<f64> {
    let mut e = vec![0.0; w.len()];
    for t in 1..w.len() {
        e[t] = (w[t] - mu) - phi * (w[t - 1] - mu) - theta * e[t - 1];
    }
    e
}

/// Conditional sum of squares of the differenced series `w`.
pub fn arima_css(w: &[f64], phi: f64, theta: f64, mu: f64) -> f64 {
    let s: f64 = residuals(w, phi, theta, mu).iter().map(|e| e * e).sum();
    if s.is_finite() {
        s
    } else {
        f64::INFINITY
    }
}

struct NelderMead {
    iterations: usize,
    best: [f64; 3],
    value: f64,
}

fn simplex_diameter(pts: &[[f64; 3]; 4]) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..4 {
        for j in i + 1..4 {
            let s: f64 = (0..3).map(|k| (pts[i][k] - pts[j][k]).powi(2)).sum();
            d = d.max(s.sqrt());
        }
    }
    d
}

/// Derivative-free simplex minimisation in three dimensions.
fn nelder_mead(f: impl Fn(&[f64; 3]) -> f64, x0: [f64; 3], tol: f64, max_iter: usize) -> NelderMead {
    let mut pts = [x0; 4];
    for i in 0..3 {
        let step = if x0[i] != 0.0 { 0.05 * x0[i] } else { 0.00025 };
        pts[i + 1][i] += step;
    }
    let mut vals = pts.map(|p| f(&p));
    let lerp = |a: &[f64; 3], b: &[f64; 3], t: f64| -> [f64; 3] {
        [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), a[2] + t * (b[2] - a[2])]
    };
    let mut iterations = 0;
    loop {
        // Stable ordering keeps ties reproducible.
        let mut order = [0usize, 1, 2, 3];
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.map(|i| pts[i]);
        vals = order.map(|i| vals[i]);
        if iterations >= max_iter || simplex_diameter(&pts) < tol {
            break;
        }
        iterations += 1;
        let mut centroid = [0.0; 3];
        for p in &pts[..3] {
            for k in 0..3 {
                centroid[k] += p[k] / 3.0;
            }
        }
        let worst = pts[3];
        let xr = lerp(&centroid, &worst, -1.0);
        let fr = f(&xr);
        if fr < vals[0] {
            let xe = lerp(&centroid, &worst, -2.0);
            let fe = f(&xe);
            if fe < fr {
                pts[3] = xe;
                vals[3] = fe;
            } else {
                pts[3] = xr;
                vals[3] = fr;
            }
            continue;
        }
        if fr < vals[2] {
            pts[3] = xr;
            vals[3] = fr;
            continue;
        }
        let (xc, fc) = if fr < vals[3] {
            let xc = lerp(&centroid, &worst, -0.5);
            (xc, f(&xc))
        } else {
            let xc = lerp(&centroid, &worst, 0.5);
            (xc, f(&xc))
        };
        if fc < vals[3].min(fr) {
            pts[3] = xc;
            vals[3] = fc;
            continue;
        }
        let best = pts[0];
        for i in 1..4 {
            pts[i] = lerp(&best, &pts[i], 0.5);
            vals[i] = f(&pts[i]);
        }
    }
    NelderMead {
        iterations,
        best: pts[0],
        value: vals[0],
    }
}

/// Fits ARIMA(1,1,1) by minimising the conditional sum of squares.
pub fn fit_arima_css(history: &[f64]) -> Result<ArimaParams, ForecastError> {
    check(history, 5)?;
    let w = differences(history);
    let mean = w.iter().sum::<f64>() / w.len() as f64;
    if w.iter().all(|d| *d == w[0]) {
        return Ok(ArimaParams {
            phi: 0.0,
            theta: 0.0,
            intercept: w[0],
            css: 0.0,
            initial_css: arima_css(&w, 0.1, 0.1, mean),
            iterations: 0,
            degenerate: true,
        });
    }
    let x0 = [0.1, 0.1, mean];
    let objective = |p: &[f64; 3]| arima_css(&w, p[0], p[1], p[2]);
    let initial_css = objective(&x0);
    let nm = nelder_mead(objective, x0, ARIMA_TOL, ARIMA_MAX_ITER);
    Ok(ArimaParams {
        phi: nm.best[0],
        theta: nm.best[1],
        intercept: nm.best[2],
        css: nm.value,
        initial_css,
        iterations: nm.iterations,
        degenerate: false,
    })
}

/// Forecasts the differenced series with zero future shocks, then
/// integrates from the last observation.
pub fn arima_forecast(history: &[f64], params: &ArimaParams, horizon: usize) -> Vec<f64> {
    let w = differences(history);
    let e = residuals(&w, params.phi, params.theta, params.intercept);
    let mu = params.intercept;
    let mut prev_w = *w.last().expect("fit requires at least 5 points");
    let mut prev_e = *e.last().unwrap();
    let mut level = *history.last().unwrap();
    let mut out = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let next = mu + params.phi * (prev_w - mu) + params.theta * prev_e;
        level += next;
        out.push(level);
        prev_w = next;
        prev_e = 0.0;
    }
    out
}

pub fn forecast(history: &[f64], model: ForecastKind, horizon: usize) -> Result<Vec<f64>, ForecastError> {
    if horizon == 0 {
        return Err(ForecastError::InvalidHorizon);
    }
    match model {
        ForecastKind::Ols => {
            let (slope, intercept) = ols_fit(history)?;
            let n = history.len();
            Ok((0..horizon).map(|h| intercept + slope * (n + h) as f64).collect())
        }
        ForecastKind::Arima => {
            let params = fit_arima_css(history)?;
            Ok(arima_forecast(history, &params, horizon))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ols_examples() {
        assert_eq!(forecast(&[1.0, 2.0, 3.0], ForecastKind::Ols, 2).unwrap(), vec![4.0, 5.0]);
        assert_eq!(ols_fit(&[1.0, 2.0, 3.0]).unwrap(), (1.0, 1.0));
        assert_eq!(ols_fit(&[5.0, 5.0, 5.0]).unwrap(), (0.0, 5.0));
        assert!(matches!(ols_fit(&[1.0]), Err(ForecastError::SeriesTooShort { .. })));
        assert_eq!(ols_fit(&[1.0, f64::NAN]), Err(ForecastError::NonFiniteInput(1)));
    }

    #[test]
    fn arima_constant_and_short() {
        assert_eq!(forecast(&[5.0; 5], ForecastKind::Arima, 3).unwrap(), vec![5.0, 5.0, 5.0]);
        assert!(matches!(
            fit_arima_css(&[1.0, 2.0, 3.0, 4.0]),
            Err(ForecastError::SeriesTooShort { needed: 5, got: 4 })
        ));
        assert_eq!(forecast(&[5.0; 5], ForecastKind::Arima, 0), Err(ForecastError::InvalidHorizon));
    }

    #[test]
    fn arima_linear_series_is_degenerate_trend() {
        let p = fit_arima_css(&[1.0, 3.0, 5.0, 7.0, 9.0]).unwrap();
        assert!(p.degenerate);
        assert_eq!(forecast(&[1.0, 3.0, 5.0, 7.0, 9.0], ForecastKind::Arima, 2).unwrap(), vec![11.0, 13.0]);
    }

    #[test]
    fn arima_objective_decreases() {
        let h = [1.0, 1.5, 1.3, 2.2, 2.0, 2.9, 3.1, 2.8, 3.6, 4.0];
        let p = fit_arima_css(&h).unwrap();
        assert!(p.css <= p.initial_css);
        let w = differences(&h);
        assert!((arima_css(&w, p.phi, p.theta, p.intercept) - p.css).abs() < 1e-12);
    }
}
