//! Check-function objectives over a periodogram and the resulting quantile
//! estimators.
//!
//! A periodogram on a grid is treated as the discrete measure with mass
//! `w_k I(w_k)` at each grid point (`w_k` the trapezoid weights). Its
//! objective `S(theta) = sum_k w_k rho_p(w_k - theta) I(w_k)` has forward
//! difference `S(theta_{j+1}) - S(theta_j) = h (G_j - p G_total)` with `G_j`
//! the cumulative mass up to and including `theta_j`. The smallest grid
//! minimizer is therefore the first grid point where `G_j >= p G_total`,
//! which is what [`invert_cumulative`] returns; [`argmin_crosscheck`]
//! scans the objective itself.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{check_frequency, check_probability, invalid, Error, Result};
use crate::numeric::NeumaierSum;
use crate::sample::TimeSeries;
use crate::spectral::{
    raw_periodogram, smoothed_density, FrequencyGrid, LagWindow, Periodogram, PeriodogramKind,
    WindowMeta,
};

/// `rho_tau(u) = u (tau - 1{u < 0})`.
pub fn check_function(tau: f64, u: f64) -> Result<f64> {
    check_probability("tau", tau)?;
    Ok(rho(tau, u))
}

#[inline]
fn rho(tau: f64, u: f64) -> f64 {
    if u < 0.0 {
        (tau - 1.0) * u
    } else {
        tau * u
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateKind {
    Raw,
    Smoothed,
}

impl fmt::Display for EstimateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EstimateKind::Raw => "raw",
            EstimateKind::Smoothed => "smoothed",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantileEstimate {
    pub p: f64,
    /// Grid point minimizing the objective.
    pub lambda_hat: f64,
    pub kind: EstimateKind,
    /// Resolution of the estimate.
    pub grid_step: f64,
    /// Integral of the spectrum estimate over `[-pi, pi]`.
    pub total_mass_hat: f64,
    pub n: usize,
    pub window: Option<WindowMeta>,
    pub seed: u64,
}

/// `S_n(theta)`: trapezoidal quadrature of `rho_p(w - theta)` against the
/// ordinates.
pub fn empirical_objective(pgram: &Periodogram, p: f64, theta: f64) -> Result<f64> {
    check_probability("p", p)?;
    check_frequency("theta", theta)?;
    Ok(objective_unchecked(pgram.frequencies(), &pgram.masses(), p, theta))
}

fn objective_unchecked(freqs: &[f64], masses: &[f64], p: f64, theta: f64) -> f64 {
    freqs
        .iter()
        .zip(masses)
        .map(|(&w, &m)| rho(p, w - theta) * m)
        .collect::<NeumaierSum>()
        .value()
}

fn total_mass(masses: &[f64]) -> Result<f64> {
    let total = masses.iter().copied().collect::<NeumaierSum>().value();
    if total > 0.0 {
        Ok(total)
    } else {
        Err(Error::Degenerate(
            "spectrum estimate has no mass; the quantile is undefined".into(),
        ))
    }
}

/// Smallest grid point whose cumulative mass reaches `p` of the total.
/// Returns `(lambda_hat, total_mass)`.
pub fn invert_cumulative(pgram: &Periodogram, p: f64) -> Result<(f64, f64)> {
    check_probability("p", p)?;
    let masses = pgram.masses();
    let total = total_mass(&masses)?;
    let target = p * total;
    let mut cumulative = NeumaierSum::new();
    for (w, m) in pgram.frequencies().iter().zip(&masses) {
        cumulative.add(*m);
        if cumulative.value() >= target {
            return Ok((*w, total));
        }
    }
    // Only reachable through rounding when p = 1.
    Ok((*pgram.frequencies().last().expect("non-empty grid"), total))
}

/// Quantile estimate from an already computed periodogram.
pub fn estimate_from_periodogram(pgram: &Periodogram, p: f64) -> Result<QuantileEstimate> {
    let (lambda_hat, total) = invert_cumulative(pgram, p)?;
    let kind = match pgram.kind() {
        PeriodogramKind::Raw | PeriodogramKind::Extended => EstimateKind::Raw,
        PeriodogramKind::Smoothed => EstimateKind::Smoothed,
    };
    if kind == EstimateKind::Smoothed && pgram.window().is_none() {
        return Err(invalid("smoothed estimate requires window metadata"));
    }
    Ok(QuantileEstimate {
        p,
        lambda_hat,
        kind,
        grid_step: pgram.grid().step(),
        total_mass_hat: total,
        n: pgram.n(),
        window: pgram.window().cloned(),
        seed: 0,
    })
}

/// Estimates for several `p` from one periodogram.
pub fn estimate_many(pgram: &Periodogram, ps: &[f64]) -> Result<Vec<QuantileEstimate>> {
    ps.iter().map(|&p| estimate_from_periodogram(pgram, p)).collect()
}

/// Quantile estimate from the raw periodogram.
pub fn estimate_raw(series: &TimeSeries, p: f64, grid: &FrequencyGrid) -> Result<QuantileEstimate> {
    check_probability("p", p)?;
    let pgram = raw_periodogram(series, grid)?;
    let mut est = estimate_from_periodogram(&pgram, p)?;
    est.seed = series.seed();
    Ok(est)
}

/// Quantile estimate from the lag-window smoothed density.
pub fn estimate_smoothed(
    series: &TimeSeries,
    p: f64,
    window: &LagWindow,
    grid: &FrequencyGrid,
) -> Result<QuantileEstimate> {
    check_probability("p", p)?;
    let pgram = smoothed_density(series, window, grid)?;
    let mut est = estimate_from_periodogram(&pgram, p)?;
    est.seed = series.seed();
    Ok(est)
}

/// Brute force: evaluates the objective at every grid point and returns the
/// smallest minimizer.
pub fn argmin_crosscheck(pgram: &Periodogram, p: f64) -> Result<f64> {
    check_probability("p", p)?;
    let masses = pgram.masses();
    total_mass(&masses)?;
    let freqs = pgram.frequencies();
    let mut best = (freqs[0], objective_unchecked(freqs, &masses, p, freqs[0]));
    for &theta in &freqs[1..] {
        let s = objective_unchecked(freqs, &masses, p, theta);
        if s < best.1 {
            best = (theta, s);
        }
    }
    Ok(best.0)
}

/// Writes one row per estimate: `p,lambda_hat,kind,n,m,seed`.
pub fn write_estimates_csv<W: Write>(estimates: &[QuantileEstimate], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["p", "lambda_hat", "kind", "n", "m", "seed"])?;
    for e in estimates {
        let m = e
            .window
            .as_ref()
            .map(|meta| meta.m.to_string())
            .unwrap_or_default();
        w.write_record([
            e.p.to_string(),
            format!("{:?}", e.lambda_hat),
            e.kind.to_string(),
            e.n.to_string(),
            m,
            e.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::SpectralModel;
    use crate::sample::generate;
    use crate::spectral::bartlett_window;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn flat(half: usize, c: f64) -> Periodogram {
        let g = FrequencyGrid::lattice(half).unwrap();
        let n = g.len();
        Periodogram::from_ordinates(g, vec![c; n], PeriodogramKind::Raw, 2 * half).unwrap()
    }

    #[test]
    fn check_function_values() {
        assert_abs_diff_eq!(check_function(0.7, 1.0).unwrap(), 0.7);
        assert_abs_diff_eq!(check_function(0.7, -1.0).unwrap(), 0.3, epsilon = 1e-15);
        for tau in [0.0, 0.3, 1.0] {
            assert_eq!(check_function(tau, 0.0).unwrap(), 0.0);
        }
        assert!(check_function(1.1, 0.5).is_err());
        assert!(check_function(-0.1, 0.5).is_err());
    }

    #[test]
    fn objective_of_flat_spectrum() {
        let pg = flat(1000, 2.0);
        assert_abs_diff_eq!(
            empirical_objective(&pg, 0.5, 0.0).unwrap(),
            2.0 * PI * PI / 2.0,
            epsilon = 1e-4
        );
        let zero = flat(10, 0.0);
        assert_eq!(empirical_objective(&zero, 0.3, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn objective_is_linear_in_ordinates() {
        let s = generate(&SpectralModel::ar1(0.5, 1.0).unwrap(), 40, 2).unwrap();
        let pg = raw_periodogram(&s, &FrequencyGrid::for_length(40).unwrap()).unwrap();
        let pg3 = pg.scaled(3.0);
        for &theta in &[-3.0, -1.0, 0.0, 0.7, 3.1] {
            assert_abs_diff_eq!(
                empirical_objective(&pg3, 0.6, theta).unwrap(),
                3.0 * empirical_objective(&pg, 0.6, theta).unwrap(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn uniform_quantile_is_on_the_nearest_grid_point() {
        let pg = flat(256, 1.0);
        let expected = (2.0 * 0.75 - 1.0) * PI;
        let brute = argmin_crosscheck(&pg, 0.75).unwrap();
        assert!((brute - expected).abs() <= pg.grid().step() / 2.0 + 1e-12);
        assert_eq!(invert_cumulative(&pg, 0.75).unwrap().0, brute);
    }

    #[test]
    fn structural_quantiles() {
        let s = generate(&SpectralModel::ma1(0.9, 1.0).unwrap(), 30, 5).unwrap();
        let g = FrequencyGrid::for_length(30).unwrap();
        assert_eq!(estimate_raw(&s, 0.5, &g).unwrap().lambda_hat, 0.0);
        assert_eq!(estimate_raw(&s, 1.0, &g).unwrap().lambda_hat, PI);
        let w = bartlett_window(3).unwrap();
        assert_eq!(estimate_smoothed(&s, 0.5, &w, &g).unwrap().lambda_hat, 0.0);
        assert_eq!(estimate_smoothed(&s, 1.0, &w, &g).unwrap().lambda_hat, PI);
    }

    #[test]
    fn degenerate_spectrum_is_an_error() {
        let s = TimeSeries::observed(vec![0.0; 10]).unwrap();
        let g = FrequencyGrid::for_length(10).unwrap();
        assert!(matches!(estimate_raw(&s, 0.7, &g), Err(Error::Degenerate(_))));
        let w = bartlett_window(2).unwrap();
        assert!(matches!(
            estimate_smoothed(&s, 0.7, &w, &g),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(
            argmin_crosscheck(&flat(4, 0.0), 0.5),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn estimate_metadata() {
        let s = generate(&SpectralModel::white_noise(1.0).unwrap(), 64, 77).unwrap();
        let g = FrequencyGrid::for_length(64).unwrap();
        let raw = estimate_raw(&s, 0.7, &g).unwrap();
        assert_eq!(raw.kind, EstimateKind::Raw);
        assert_eq!(raw.seed, 77);
        assert!(raw.window.is_none());
        assert_abs_diff_eq!(raw.grid_step, PI / 64.0);
        assert!(g.points().contains(&raw.lambda_hat));
        let sm = estimate_smoothed(&s, 0.7, &bartlett_window(5).unwrap(), &g).unwrap();
        assert_eq!(sm.kind, EstimateKind::Smoothed);
        assert_eq!(sm.window.as_ref().unwrap().m, 5);
        // Bartlett smoothing preserves C_n(0) = integral of the estimate.
        let c0 = crate::spectral::autocovariance(&s, 0).unwrap()[0];
        assert_abs_diff_eq!(sm.total_mass_hat, c0, epsilon = 1e-10);
    }

    #[test]
    fn smoothed_without_window_meta_is_rejected() {
        let g = FrequencyGrid::lattice(8).unwrap();
        let n = g.len();
        let pg = Periodogram::from_ordinates(g, vec![1.0; n], PeriodogramKind::Smoothed, 8).unwrap();
        assert!(estimate_from_periodogram(&pg, 0.5).is_err());
    }

    #[test]
    fn estimates_csv_layout() {
        let s = generate(&SpectralModel::white_noise(1.0).unwrap(), 20, 4).unwrap();
        let g = FrequencyGrid::for_length(20).unwrap();
        let a = estimate_raw(&s, 0.7, &g).unwrap();
        let b = estimate_smoothed(&s, 0.8, &bartlett_window(3).unwrap(), &g).unwrap();
        let mut buf = Vec::new();
        write_estimates_csv(&[a, b], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "p,lambda_hat,kind,n,m,seed");
        assert!(lines[1].starts_with("0.7,") && lines[1].ends_with(",raw,20,,4"));
        assert!(lines[2].ends_with(",smoothed,20,3,4"));
    }
}
