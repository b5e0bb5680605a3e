use lit_core::forecast::{arima_css, fit_arima_css, forecast, ols_fit, ForecastError, ForecastKind};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// AR(1) differences (phi 0.6, mean 0.4) integrated from 10.0, rounded to
/// four decimals.
const AR1_SERIES: [f64; 40] = [
    10.0, 10.6344, 11.956, 13.4424, 13.9676, 13.7063, 13.7031, 14.2519, 14.9558, 16.4032, 17.7671, 19.0253,
    19.5346, 19.4063, 20.1915, 20.8071, 21.7023, 21.6711, 21.5542, 20.9586, 20.3333, 20.5297, 20.0273, 19.5787,
    19.5115, 19.257, 19.0981, 19.0118, 19.2891, 19.3599, 19.6585, 19.986, 20.5148, 21.0646, 22.3433, 22.8987,
    23.9515, 24.5019, 24.4732, 25.1815,
];

/// Reference CSS fit of AR1_SERIES from an independent optimizer run.
const AR1_ORACLE_CSS: f64 = 8.162544319214033;
const AR1_ORACLE_FORECAST: [f64; 4] = [25.776832094049695, 26.29040193464194, 26.754437135478593, 27.1884623936833];

fn random_series(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let (a, b) = (rng.gen_range(-50.0..50.0), rng.gen_range(-3.0..3.0));
    (0..n).map(|t| a + b * t as f64 + rng.gen_range(-10.0..10.0)).collect()
}

/// Normal equations (XᵀX)β = Xᵀy for X = [1, t], solved by Cramer's rule.
fn normal_equations(y: &[f64]) -> (f64, f64) {
    let n = y.len() as f64;
    let (mut st, mut stt, mut sy, mut sty) = (0.0, 0.0, 0.0, 0.0);
    for (t, v) in y.iter().enumerate() {
        let t = t as f64;
        st += t;
        stt += t * t;
        sy += v;
        sty += t * v;
    }
    let det = n * stt - st * st;
    let intercept = (sy * stt - st * sty) / det;
    let slope = (n * sty - st * sy) / det;
    (slope, intercept)
}

#[test]
fn ols_examples() {
    assert_eq!(forecast(&[1.0, 2.0, 3.0], ForecastKind::Ols, 2).unwrap(), vec![4.0, 5.0]);
    assert_eq!(ols_fit(&[1.0, 2.0, 3.0]).unwrap(), (1.0, 1.0));
    assert_eq!(ols_fit(&[5.0, 5.0, 5.0]).unwrap(), (0.0, 5.0));
}

#[test]
fn arima_examples() {
    assert_eq!(forecast(&[5.0; 5], ForecastKind::Arima, 3).unwrap(), vec![5.0; 3]);
    assert_eq!(
        fit_arima_css(&[1.0, 2.0, 3.0, 4.0]),
        Err(ForecastError::SeriesTooShort { needed: 5, got: 4 })
    );
}

#[test]
fn ar1_series_matches_the_reference_fit() {
    let p = fit_arima_css(&AR1_SERIES).unwrap();
    assert!(p.css <= AR1_ORACLE_CSS + 1e-6, "css {} vs oracle {AR1_ORACLE_CSS}", p.css);
    let f = forecast(&AR1_SERIES, ForecastKind::Arima, 4).unwrap();
    for (got, want) in f.iter().zip(AR1_ORACLE_FORECAST) {
        assert!((got - want).abs() < 1e-4, "{got} vs {want}");
    }
}

#[test]
fn ols_matches_normal_equations_on_random_series() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..1000 {
        let n = rng.gen_range(2..80);
        let y = random_series(&mut rng, n);
        let (s, i) = ols_fit(&y).unwrap();
        let (ws, wi) = normal_equations(&y);
        assert!((s - ws).abs() <= 1e-9 * (1.0 + ws.abs()), "slope {s} vs {ws}");
        assert!((i - wi).abs() <= 1e-9 * (1.0 + wi.abs()), "intercept {i} vs {wi}");
    }
}

#[test]
fn arima_never_ends_above_its_start() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..200 {
        let n = rng.gen_range(5..60);
        let y = random_series(&mut rng, n);
        let p = fit_arima_css(&y).unwrap();
        assert!(p.css <= p.initial_css, "{} > {}", p.css, p.initial_css);
    }
}

#[test]
fn white_noise_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut level = 0.0;
    let mut y = vec![level];
    for _ in 0..400 {
        // Sum of uniforms: roughly normal, variance 1.
        let z: f64 = (0..12).map(|_| rng.gen::<f64>()).sum::<f64>() - 6.0;
        level += z;
        y.push(level);
    }
    let w: Vec<f64> = y.windows(2).map(|p| p[1] - p[0]).collect();
    let mean = w.iter().sum::<f64>() / w.len() as f64;
    let var = w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (w.len() - 1) as f64;
    let p = fit_arima_css(&y).unwrap();
    let expected = var * (w.len() - 1) as f64;
    assert!((p.css - expected).abs() <= 0.2 * expected, "css {} vs {expected}", p.css);
    assert!(p.phi.abs() < 0.25 && p.theta.abs() < 0.25, "phi {} theta {}", p.phi, p.theta);
}

#[test]
fn constant_series_forecast_exactly_constant() {
    for c in [-3.5, 0.0, 7.25, 1e6] {
        for h in 1..6 {
            assert_eq!(forecast(&[c; 9], ForecastKind::Arima, h).unwrap(), vec![c; h]);
            assert_eq!(forecast(&[c; 9], ForecastKind::Ols, h).unwrap(), vec![c; h]);
        }
    }
}

fn series() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-100.0f64..100.0, 5..50)
}

proptest! {
    #[test]
    fn ols_residuals_are_orthogonal_to_time(y in series()) {
        let (s, i) = ols_fit(&y).unwrap();
        let r: Vec<f64> = y.iter().enumerate().map(|(t, v)| v - (i + s * t as f64)).collect();
        let dot: f64 = r.iter().enumerate().map(|(t, e)| t as f64 * e).sum();
        let norm = r.iter().map(|e| e * e).sum::<f64>().sqrt();
        prop_assert!(dot.abs() <= 1e-9 * norm.max(1.0) * y.len() as f64, "dot {dot}, norm {norm}");
    }

    #[test]
    fn ols_is_shift_invariant(y in series(), c in -1000.0f64..1000.0, h in 1usize..6) {
        let base = forecast(&y, ForecastKind::Ols, h).unwrap();
        let shifted: Vec<f64> = y.iter().map(|v| v + c).collect();
        let moved = forecast(&shifted, ForecastKind::Ols, h).unwrap();
        for (a, b) in base.iter().zip(&moved) {
            prop_assert!((a + c - b).abs() <= 1e-9 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn arima_first_step_is_the_forecast_difference(y in series()) {
        let p = fit_arima_css(&y).unwrap();
        let f = forecast(&y, ForecastKind::Arima, 3).unwrap();
        // Independent residual recursion on the differenced series.
        let w: Vec<f64> = y.windows(2).map(|q| q[1] - q[0]).collect();
        let mut e = 0.0;
        for t in 1..w.len() {
            e = (w[t] - p.intercept) - p.phi * (w[t - 1] - p.intercept) - p.theta * e;
        }
        let next = p.intercept + p.phi * (w[w.len() - 1] - p.intercept) + p.theta * e;
        let last = y[y.len() - 1];
        prop_assert_eq!(f[0], last + next);
        prop_assert!((arima_css(&w, p.phi, p.theta, p.intercept) - p.css).abs() <= 1e-9 * (1.0 + p.css));
    }

    #[test]
    fn forecasts_are_bit_identical(y in series(), h in 1usize..5) {
        for kind in [ForecastKind::Ols, ForecastKind::Arima] {
            let a: Vec<u64> = forecast(&y, kind, h).unwrap().iter().map(|v| v.to_bits()).collect();
            let b: Vec<u64> = forecast(&y, kind, h).unwrap().iter().map(|v| v.to_bits()).collect();
            prop_assert_eq!(a, b);
        }
    }
}
