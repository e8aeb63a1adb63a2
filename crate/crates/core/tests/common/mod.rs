//! Oracles shared by the integration suites. Deliberately naive.
#![allow(dead_code)]

use std::f64::consts::PI;

use specquant::{Periodogram, SpectralModel};

/// White noise, MA(1) 0.9, AR(1) 0.9 and AR(1) -0.9, unit innovation variance.
pub fn table_models() -> Vec<(String, SpectralModel)> {
    vec![
        ("White noise".into(), SpectralModel::white_noise(1.0).unwrap()),
        ("MA(1)".into(), SpectralModel::ma1(0.9, 1.0).unwrap()),
        ("AR(1) 0.9".into(), SpectralModel::ar1(0.9, 1.0).unwrap()),
        ("AR(1) -0.9".into(), SpectralModel::ar1(-0.9, 1.0).unwrap()),
    ]
}

/// `(1 / 2 pi n) |sum_t x_t e^{i t w}|^2` by direct summation.
pub fn periodogram_oracle(x: &[f64], w: f64) -> f64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (t, v) in x.iter().enumerate() {
        let a = (t + 1) as f64 * w;
        re += v * a.cos();
        im += v * a.sin();
    }
    (re * re + im * im) / (2.0 * PI * x.len() as f64)
}

pub fn autocovariance_oracle(x: &[f64], h: usize) -> f64 {
    let n = x.len();
    (0..n - h).map(|s| x[s] * x[s + h]).sum::<f64>() / n as f64
}

pub fn rho(p: f64, u: f64) -> f64 {
    u * (p - if u < 0.0 { 1.0 } else { 0.0 })
}

/// Smallest grid point minimizing `sum_k m_k rho_p(w_k - theta)` over the
/// grid, by scanning every candidate.
pub fn argmin_oracle(pgram: &Periodogram, p: f64) -> f64 {
    let masses = pgram.masses();
    let points = pgram.frequencies();
    let objective: Vec<f64> = points
        .iter()
        .map(|&theta| {
            points
                .iter()
                .zip(&masses)
                .map(|(&w, &m)| m * rho(p, w - theta))
                .sum::<f64>()
        })
        .collect();
    let best = objective.iter().cloned().fold(f64::INFINITY, f64::min);
    let scale = masses.iter().sum::<f64>() * 2.0 * PI;
    let j = objective
        .iter()
        .position(|&s| s <= best + 1e-12 * scale)
        .unwrap();
    points[j]
}
