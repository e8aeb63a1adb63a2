use std::f64::consts::PI;

use proptest::prelude::*;
use specquant::quantile::{estimate_from_periodogram, invert_cumulative};
use specquant::spectral::bartlett_window;
use specquant::*;

mod common;
use common::{argmin_oracle, autocovariance_oracle, periodogram_oracle};

fn model_strategy() -> impl Strategy<Value = SpectralModel> {
    let noise = prop_oneof![
        (0.1f64..5.0).prop_map(|v| SpectralModel::white_noise(v).unwrap()),
        (-0.95f64..0.95, 0.1f64..5.0).prop_map(|(t, v)| SpectralModel::ma1(t, v).unwrap()),
        (-0.95f64..0.95, 0.1f64..5.0).prop_map(|(a, v)| SpectralModel::ar1(a, v).unwrap()),
    ];
    (noise, proptest::option::of((0.1f64..2.0, 0.1f64..3.0))).prop_map(|(m, atom)| match atom {
        Some((r, w)) => m.with_sinusoid(r, w).unwrap(),
        None => m,
    })
}

fn series_strategy() -> impl Strategy<Value = TimeSeries> {
    proptest::collection::vec(-10.0f64..10.0, 8..=64)
        .prop_map(|v| TimeSeries::observed(v).unwrap())
}

fn fine_grid() -> FrequencyGrid {
    FrequencyGrid::lattice(512).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cdf_reaches_total_mass(model in model_strategy()) {
        let m = spectral_measure(&model);
        let ratio = spectral_cdf(&m, PI).unwrap() / m.total_mass();
        prop_assert!((ratio - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn true_quantile_is_scale_free(model in model_strategy(), c in 0.01f64..100.0, p in 0.0f64..=1.0) {
        let a = true_quantile(&spectral_measure(&model), p).unwrap();
        let b = true_quantile(&spectral_measure(&model.scaled(c).unwrap()), p).unwrap();
        prop_assert!((a - b).abs() <= 1e-9);
    }

    #[test]
    fn true_quantile_is_monotone(model in model_strategy(), p1 in 0.0f64..=1.0, p2 in 0.0f64..=1.0) {
        let m = spectral_measure(&model);
        let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
        prop_assert!(true_quantile(&m, lo).unwrap() <= true_quantile(&m, hi).unwrap());
    }

    #[test]
    fn structural_population_quantiles(model in model_strategy()) {
        let m = spectral_measure(&model);
        prop_assert_eq!(true_quantile(&m, 0.5).unwrap(), 0.0);
        prop_assert_eq!(true_quantile(&m, 1.0).unwrap(), PI);
    }

    #[test]
    fn periodogram_matches_direct_sum(series in series_strategy()) {
        let grid = FrequencyGrid::for_length(series.len()).unwrap();
        let pg = raw_periodogram(&series, &grid).unwrap();
        for (&w, &i) in grid.points().iter().zip(pg.ordinates()) {
            prop_assert!((i - periodogram_oracle(series.values(), w)).abs() <= 1e-9 * (1.0 + i));
        }
    }

    #[test]
    fn periodogram_equals_lag_sum(series in series_strategy()) {
        let x = series.values();
        let n = x.len();
        let grid = FrequencyGrid::for_length(n).unwrap();
        let pg = raw_periodogram(&series, &grid).unwrap();
        let acov: Vec<f64> = (0..n).map(|h| autocovariance_oracle(x, h)).collect();
        for (&w, &i) in grid.points().iter().zip(pg.ordinates()) {
            let lag_sum = acov[0]
                + 2.0 * (1..n).map(|h| acov[h] * (h as f64 * w).cos()).sum::<f64>();
            prop_assert!((i - lag_sum / (2.0 * PI)).abs() <= 1e-9 * (1.0 + i));
        }
    }

    #[test]
    fn periodogram_is_symmetric(series in series_strategy()) {
        let grid = FrequencyGrid::for_length(series.len()).unwrap();
        let pg = raw_periodogram(&series, &grid).unwrap();
        let o = pg.ordinates();
        for k in 0..o.len() {
            prop_assert!((o[k] - o[o.len() - 1 - k]).abs() <= 1e-9);
        }
    }

    #[test]
    fn autocovariance_matches_direct_sum(series in series_strategy()) {
        let x = series.values();
        let acov = autocovariance(&series, x.len() - 1).unwrap();
        for (h, c) in acov.iter().enumerate() {
            let direct = autocovariance_oracle(x, h);
            prop_assert!((c - direct).abs() <= 1e-10 * (1.0 + direct.abs()));
        }
    }

    #[test]
    fn bartlett_smoothing_is_nonnegative_and_mass_preserving(series in series_strategy(), m in 1usize..8) {
        let n = series.len();
        let window = bartlett_window(m.min(n - 1)).unwrap();
        let grid = FrequencyGrid::lattice(4 * n).unwrap();
        let raw = specquant::spectral::lag_window_estimate(&series, &window, &grid).unwrap();
        let floor = raw.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assert!(floor >= -1e-12);
        let smoothed = smoothed_density(&series, &window, &grid).unwrap();
        let c0 = autocovariance(&series, 0).unwrap()[0];
        prop_assert!((smoothed.integral() - c0).abs() <= 1e-9 * (1.0 + c0));
    }

    #[test]
    fn inversion_equals_bruteforce_argmin(series in series_strategy(), p in 0.01f64..0.99) {
        let grid = fine_grid();
        let raw = raw_periodogram(&series, &grid).unwrap();
        prop_assert_eq!(estimate_from_periodogram(&raw, p).unwrap().lambda_hat, argmin_oracle(&raw, p));
        let window = WindowSpec::default().resolve(series.len()).unwrap();
        let smooth = smoothed_density(&series, &window, &grid).unwrap();
        prop_assert_eq!(estimate_from_periodogram(&smooth, p).unwrap().lambda_hat, argmin_oracle(&smooth, p));
    }

    #[test]
    fn estimate_is_scale_invariant(series in series_strategy(), c in 1e-3f64..1e3, p in 0.0f64..=1.0) {
        let grid = FrequencyGrid::for_length(series.len()).unwrap();
        let pg = raw_periodogram(&series, &grid).unwrap();
        prop_assert_eq!(
            invert_cumulative(&pg, p).unwrap().0,
            invert_cumulative(&pg.scaled(c), p).unwrap().0
        );
    }

    #[test]
    fn estimate_is_monotone_in_p(series in series_strategy(), p1 in 0.0f64..=1.0, p2 in 0.0f64..=1.0) {
        let grid = FrequencyGrid::for_length(series.len()).unwrap();
        let window = WindowSpec::default().resolve(series.len()).unwrap();
        let pg = smoothed_density(&series, &window, &grid).unwrap();
        let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
        prop_assert!(invert_cumulative(&pg, lo).unwrap().0 <= invert_cumulative(&pg, hi).unwrap().0);
    }

    #[test]
    fn structural_sample_quantiles(series in series_strategy()) {
        let grid = FrequencyGrid::for_length(series.len()).unwrap();
        let window = WindowSpec::default().resolve(series.len()).unwrap();
        prop_assert_eq!(estimate_raw(&series, 0.5, &grid).unwrap().lambda_hat, 0.0);
        prop_assert_eq!(estimate_raw(&series, 1.0, &grid).unwrap().lambda_hat, PI);
        prop_assert_eq!(estimate_smoothed(&series, 0.5, &window, &grid).unwrap().lambda_hat, 0.0);
        prop_assert_eq!(estimate_smoothed(&series, 1.0, &window, &grid).unwrap().lambda_hat, PI);
    }

    #[test]
    fn smoothing_normalisation_does_not_move_estimates(series in series_strategy(), p in 0.0f64..=1.0) {
        // f_hat and its 2 pi multiple (the unnormalised lag sum) share all quantiles.
        let grid = FrequencyGrid::for_length(series.len()).unwrap();
        let window = WindowSpec::default().resolve(series.len()).unwrap();
        let pg = smoothed_density(&series, &window, &grid).unwrap();
        prop_assert_eq!(
            invert_cumulative(&pg, p).unwrap().0,
            invert_cumulative(&pg.scaled(2.0 * PI), p).unwrap().0
        );
    }

    #[test]
    fn generation_is_deterministic(model in model_strategy(), n in 2usize..200, seed in any::<u64>()) {
        prop_assert_eq!(generate(&model, n, seed).unwrap(), generate(&model, n, seed).unwrap());
    }
}

#[test]
fn population_objective_grid_argmin_tracks_true_quantile() {
    let models = [
        SpectralModel::white_noise(1.0).unwrap(),
        SpectralModel::ma1(0.9, 1.0).unwrap(),
        SpectralModel::ar1(0.9, 1.0).unwrap(),
        SpectralModel::ar1(-0.9, 1.0).unwrap(),
        SpectralModel::white_noise(1.0).unwrap().with_sinusoid(0.5, PI / 2.0).unwrap(),
    ];
    let step = 1e-3;
    let thetas: Vec<f64> = (0..)
        .map(|k| -PI + k as f64 * step)
        .take_while(|&t| t <= PI)
        .collect();
    for model in &models {
        let m = spectral_measure(model);
        for i in 1..=9 {
            let p = i as f64 / 10.0;
            let values: Vec<f64> = thetas
                .iter()
                .map(|&t| population_objective(&m, p, t).unwrap())
                .collect();
            let best = values.iter().cloned().fold(f64::INFINITY, f64::min);
            let j = values.iter().position(|&v| v == best).unwrap();
            let truth = true_quantile(&m, p).unwrap();
            assert!(
                (thetas[j] - truth).abs() <= step + 1e-9,
                "{model} p={p}: argmin {} vs quantile {truth}",
                thetas[j]
            );
        }
    }
}

#[test]
fn alternating_series_lag_one() {
    let s = TimeSeries::observed(vec![1.0, -1.0, 1.0, -1.0]).unwrap();
    assert!((autocovariance(&s, 1).unwrap()[1] + 0.75).abs() < 1e-15);
    assert!(autocovariance(&s, 4).is_err());
}
