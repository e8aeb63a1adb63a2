//! Quantile tests built on the smoothed estimator, their Monte Carlo
//! calibration, and simulation diagnostics for the estimators' limit laws.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_probability, invalid, Error, Result};
use crate::models::{spectral_measure, SpectralModel, QUADRATURE_TOLERANCE};
use crate::numeric::{
    integrate, inverse_normal_cdf, median, sample_variance, Moments, NeumaierSum,
};
use crate::quantile::{estimate_raw, estimate_smoothed, EstimateKind};
use crate::sample::{derive_seed, generate, TimeSeries};
use crate::spectral::{autocovariance, FrequencyGrid, LagWindow, WindowSpec};

/// Smallest sigma reported when every Monte Carlo estimate is identical.
pub const SIGMA_FLOOR: f64 = 1e-12;

/// Normality is rejected when the Jarque–Bera p-value falls below this.
pub const NORMALITY_LEVEL: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaMethod {
    MonteCarlo,
    PluginGaussian,
}

/// Scale `sigma` of `sqrt(n) (lambda_hat* - lambda_p)` under a null model.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaEstimate {
    pub sigma: f64,
    pub method: SigmaMethod,
    /// Number of simulated series (Monte Carlo only).
    pub replications: Option<usize>,
    pub model: SpectralModel,
}

/// Stream tags used to split one base seed into independent sub-streams.
const NULL_STREAM: u64 = 0x4e55_4c4c;
const ALT_STREAM: u64 = 0x414c_54;

/// Smoothed estimates `lambda_hat*_p` for `replications` simulated series.
pub fn simulate_smoothed_estimates(
    model: &SpectralModel,
    p: f64,
    n: usize,
    window: &WindowSpec,
    replications: usize,
    base_seed: u64,
) -> Result<Vec<f64>> {
    let lag_window = window.resolve(n)?;
    let grid = FrequencyGrid::for_length(n)?;
    (0..replications)
        .into_par_iter()
        .map(|k| {
            let series = generate(model, n, derive_seed(base_seed, k as u64))?;
            Ok(estimate_smoothed(&series, p, &lag_window, &grid)?.lambda_hat)
        })
        .collect()
}

/// `sigma_hat = sqrt(n) * sd(lambda_hat*)` over `replications` series from the
/// null model (unbiased variance).
pub fn mc_sigma(
    null_model: &SpectralModel,
    p: f64,
    n: usize,
    window: &WindowSpec,
    replications: usize,
    base_seed: u64,
) -> Result<SigmaEstimate> {
    check_probability("p", p)?;
    if replications < 2 {
        return Err(invalid("Monte Carlo sigma needs at least 2 replications"));
    }
    let estimates = simulate_smoothed_estimates(null_model, p, n, window, replications, base_seed)?;
    let mut sigma = (n as f64 * sample_variance(&estimates)).sqrt();
    if !(sigma > SIGMA_FLOOR) {
        log::warn!("all {replications} null estimates coincide; sigma floored at {SIGMA_FLOOR}");
        sigma = SIGMA_FLOOR;
    }
    Ok(SigmaEstimate {
        sigma,
        method: SigmaMethod::MonteCarlo,
        replications: Some(replications),
        model: null_model.clone(),
    })
}

/// Pieces of the closed-form Gaussian variance of the smoothed estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PluginTerms {
    pub lambda_p: f64,
    pub density_at_quantile: f64,
    /// `pi p^2 int phi^2 f f + 2 pi (1 - 4p) int_{-pi}^{lambda_p} phi^2 f f`.
    pub bracket: f64,
    /// `bracket / f(lambda_p)^2`.
    pub sigma_sq: f64,
}

fn check_gaussian(model: &SpectralModel) -> Result<()> {
    if model.atoms().is_empty() {
        Ok(())
    } else {
        Err(invalid("a Gaussian noise model without sinusoids is required"))
    }
}

/// Evaluates the closed-form Gaussian-case variance (fourth-order cumulant
/// terms vanish). The window shape is applied to frequencies rescaled to
/// `[-1, 1]`, i.e. `phi(w / pi)`; the truncated window gives `phi = 1`.
pub fn plugin_terms(null_model: &SpectralModel, p: f64, window: &LagWindow) -> Result<PluginTerms> {
    check_probability("p", p)?;
    check_gaussian(null_model)?;
    let measure = spectral_measure(null_model);
    let lambda_p = measure.quantile(p)?;
    let f = |w: f64| measure.density(w);
    let integrand = |w: f64| window.shape(w / PI).powi(2) * f(w) * f(w);
    let full = integrate(integrand, -PI, PI, QUADRATURE_TOLERANCE);
    let lower = integrate(integrand, -PI, lambda_p, QUADRATURE_TOLERANCE);
    let bracket = PI * p * p * full + 2.0 * PI * (1.0 - 4.0 * p) * lower;
    let density_at_quantile = f(lambda_p);
    Ok(PluginTerms {
        lambda_p,
        density_at_quantile,
        bracket,
        sigma_sq: bracket / (density_at_quantile * density_at_quantile),
    })
}

/// Plug-in sigma from the closed-form Gaussian variance. Diagnostic only:
/// the expression is negative for many `(model, p)`, in which case
/// [`Error::FormulaInconsistency`] carries the computed values.
pub fn plugin_sigma_gaussian(
    null_model: &SpectralModel,
    p: f64,
    window: &LagWindow,
) -> Result<SigmaEstimate> {
    let terms = plugin_terms(null_model, p, window)?;
    if !(terms.sigma_sq > 0.0) {
        return Err(Error::FormulaInconsistency {
            bracket: terms.bracket,
            sigma_sq: terms.sigma_sq,
        });
    }
    Ok(SigmaEstimate {
        sigma: terms.sigma_sq.sqrt(),
        method: SigmaMethod::PluginGaussian,
        replications: None,
        model: null_model.clone(),
    })
}

/// Limit law of the raw estimator for Gaussian noise: an exponential
/// variable with mean `f(lambda_p)` and a centred normal with variance from
/// the closed-form expression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawLimitLaw {
    pub exp_mean: f64,
    pub normal_sd: f64,
}

pub fn raw_limit_law(model: &SpectralModel, p: f64) -> Result<RawLimitLaw> {
    check_probability("p", p)?;
    check_gaussian(model)?;
    let measure = spectral_measure(model);
    let lambda_p = measure.quantile(p)?;
    let sq = |w: f64| measure.density(w).powi(2);
    let variance = PI * p * p * integrate(sq, -PI, PI, QUADRATURE_TOLERANCE)
        + 2.0 * PI * (1.0 - 4.0 * p) * integrate(sq, -PI, lambda_p, QUADRATURE_TOLERANCE);
    if !(variance > 0.0) {
        return Err(Error::FormulaInconsistency {
            bracket: variance,
            sigma_sq: variance,
        });
    }
    Ok(RawLimitLaw {
        exp_mean: measure.density(lambda_p),
        normal_sd: variance.sqrt(),
    })
}

/// Outcome of one quantile test.
#[derive(Debug, Clone, PartialEq)]
pub struct TestResult {
    /// `sqrt(n) |lambda_hat* - lambda_p| / sigma`.
    pub statistic: f64,
    /// `Phi^{-1}(1 - alpha/2)`.
    pub critical: f64,
    pub alpha: f64,
    pub reject: bool,
    pub p_quantile: f64,
    pub lambda_null: f64,
    pub lambda_hat: f64,
    pub n: usize,
    pub sigma_used: SigmaEstimate,
}

impl TestResult {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["field", "value"])?;
        let method = match self.sigma_used.method {
            SigmaMethod::MonteCarlo => "monte_carlo",
            SigmaMethod::PluginGaussian => "plugin_gaussian",
        };
        let rows: [(&str, String); 12] = [
            ("statistic", format!("{:?}", self.statistic)),
            ("critical", format!("{:?}", self.critical)),
            ("alpha", self.alpha.to_string()),
            ("reject", self.reject.to_string()),
            ("p", self.p_quantile.to_string()),
            ("lambda_null", format!("{:?}", self.lambda_null)),
            ("lambda_hat", format!("{:?}", self.lambda_hat)),
            ("n", self.n.to_string()),
            ("sigma", format!("{:?}", self.sigma_used.sigma)),
            ("sigma_method", method.to_string()),
            (
                "sigma_replications",
                self.sigma_used
                    .replications
                    .map(|r| r.to_string())
                    .unwrap_or_default(),
            ),
            ("null_model", self.sigma_used.model.label()),
        ];
        for (k, v) in rows {
            w.write_record([k, v.as_str()])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "alpha",
            value: alpha,
            domain: "(0, 1)",
        })
    }
}

/// Two-sided test of `lambda_p(series) = lambda_p(null_model)`: reject when
/// `sqrt(n) |lambda_hat* - lambda_p| / sigma > Phi^{-1}(1 - alpha/2)`.
pub fn quantile_test(
    series: &TimeSeries,
    p: f64,
    null_model: &SpectralModel,
    window: &WindowSpec,
    alpha: f64,
    sigma: &SigmaEstimate,
) -> Result<TestResult> {
    check_probability("p", p)?;
    check_alpha(alpha)?;
    if !(sigma.sigma > 0.0) {
        return Err(invalid(format!("sigma must be > 0, got {}", sigma.sigma)));
    }
    let lambda_null = spectral_measure(null_model).quantile(p)?;
    let n = series.len();
    let lag_window = window.resolve(n)?;
    let grid = FrequencyGrid::for_length(n)?;
    let lambda_hat = estimate_smoothed(series, p, &lag_window, &grid)?.lambda_hat;
    Ok(decide(lambda_hat, lambda_null, n, p, alpha, sigma))
}

fn decide(
    lambda_hat: f64,
    lambda_null: f64,
    n: usize,
    p: f64,
    alpha: f64,
    sigma: &SigmaEstimate,
) -> TestResult {
    let statistic = (n as f64).sqrt() * (lambda_hat - lambda_null).abs() / sigma.sigma;
    let critical = inverse_normal_cdf(1.0 - alpha / 2.0);
    TestResult {
        statistic,
        critical,
        alpha,
        reject: statistic > critical,
        p_quantile: p,
        lambda_null,
        lambda_hat,
        n,
        sigma_used: sigma.clone(),
    }
}

/// Design shared by every cell of a power study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerDesign {
    pub p: f64,
    pub n: usize,
    pub alpha: f64,
    /// Series simulated from the alternative per cell.
    pub replications: usize,
    /// Null simulations behind the Monte Carlo sigma.
    pub sigma_replications: usize,
    #[serde(default)]
    pub window: WindowSpec,
    pub base_seed: u64,
}

impl PowerDesign {
    /// n = 50, 100 replications, 100 null simulations for sigma, alpha = 0.1,
    /// Bartlett window with the default bandwidth.
    pub fn standard(p: f64, base_seed: u64) -> Self {
        Self {
            p,
            n: 50,
            alpha: 0.1,
            replications: 100,
            sigma_replications: 100,
            window: WindowSpec::default(),
            base_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_probability("p", self.p)?;
        check_alpha(self.alpha)?;
        if self.replications < 1 {
            return Err(invalid("replications must be >= 1"));
        }
        if self.sigma_replications < 2 {
            return Err(invalid("sigma_replications must be >= 2"));
        }
        self.window.resolve(self.n)?;
        Ok(())
    }

    /// Base seed of the null simulations behind sigma.
    pub fn null_seed(&self) -> u64 {
        derive_seed(self.base_seed, NULL_STREAM)
    }

    /// Base seed of the series drawn from the alternative.
    pub fn alternative_seed(&self) -> u64 {
        derive_seed(self.base_seed, ALT_STREAM)
    }

    pub fn sigma(&self, null_model: &SpectralModel) -> Result<SigmaEstimate> {
        mc_sigma(
            null_model,
            self.p,
            self.n,
            &self.window,
            self.sigma_replications,
            self.null_seed(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerResult {
    pub rejection_rate: f64,
    pub rejections: usize,
    pub replications: usize,
    pub lambda_null: f64,
    /// The sigma used; for [`size_study`], the average over runs.
    pub sigma: SigmaEstimate,
}

/// Rejection rate of tests against an already calibrated sigma.
pub fn power_with_sigma(
    null_model: &SpectralModel,
    alt_model: &SpectralModel,
    design: &PowerDesign,
    sigma: &SigmaEstimate,
) -> Result<PowerResult> {
    design.validate()?;
    let lambda_null = spectral_measure(null_model).quantile(design.p)?;
    let estimates = simulate_smoothed_estimates(
        alt_model,
        design.p,
        design.n,
        &design.window,
        design.replications,
        design.alternative_seed(),
    )?;
    let rejections = estimates
        .iter()
        .filter(|&&l| decide(l, lambda_null, design.n, design.p, design.alpha, sigma).reject)
        .count();
    Ok(PowerResult {
        rejection_rate: rejections as f64 / design.replications as f64,
        rejections,
        replications: design.replications,
        lambda_null,
        sigma: sigma.clone(),
    })
}

/// Simulates from `alt_model`, tests each series against `null_model` with a
/// Monte Carlo sigma, and returns the rejection fraction.
pub fn power_study(
    null_model: &SpectralModel,
    alt_model: &SpectralModel,
    design: &PowerDesign,
) -> Result<PowerResult> {
    design.validate()?;
    let sigma = design.sigma(null_model)?;
    power_with_sigma(null_model, alt_model, design, &sigma)
}

/// Size of the whole procedure: each of `design.replications` runs draws its
/// own null simulations for sigma and its own series from the null, so the
/// rate averages over the Monte Carlo error in sigma.
pub fn size_study(null_model: &SpectralModel, design: &PowerDesign) -> Result<PowerResult> {
    design.validate()?;
    let lambda_null = spectral_measure(null_model).quantile(design.p)?;
    let lag_window = design.window.resolve(design.n)?;
    let grid = FrequencyGrid::for_length(design.n)?;
    let outcomes: Vec<(bool, f64)> = (0..design.replications)
        .into_par_iter()
        .map(|k| {
            let run = derive_seed(design.base_seed, k as u64);
            let null_seed = derive_seed(run, NULL_STREAM);
            let sigma = mc_sigma(
                null_model,
                design.p,
                design.n,
                &design.window,
                design.sigma_replications,
                null_seed,
            )?;
            let series = generate(null_model, design.n, derive_seed(run, ALT_STREAM))?;
            let lambda_hat = estimate_smoothed(&series, design.p, &lag_window, &grid)?.lambda_hat;
            let r = decide(lambda_hat, lambda_null, design.n, design.p, design.alpha, &sigma);
            Ok((r.reject, sigma.sigma))
        })
        .collect::<Result<_>>()?;
    let rejections = outcomes.iter().filter(|o| o.0).count();
    let sigmas: Vec<f64> = outcomes.iter().map(|o| o.1).collect();
    Ok(PowerResult {
        rejection_rate: rejections as f64 / design.replications as f64,
        rejections,
        replications: design.replications,
        lambda_null,
        sigma: SigmaEstimate {
            sigma: crate::numeric::mean(&sigmas),
            method: SigmaMethod::MonteCarlo,
            replications: Some(design.sigma_replications),
            model: null_model.clone(),
        },
    })
}

/// Rejection fractions with rows = null model, columns = alternative.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerTable {
    pub p: f64,
    pub labels: Vec<String>,
    /// `None` on the diagonal.
    pub cells: Vec<Vec<Option<f64>>>,
    /// Monte Carlo sigma of each null; `None` when its row has no test.
    pub sigmas: Vec<Option<f64>>,
}

impl PowerTable {
    pub fn off_diagonal(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.cells.iter().enumerate().flat_map(|(i, row)| {
            row.iter()
                .enumerate()
                .filter_map(move |(j, c)| c.map(|v| (i, j, v)))
        })
    }

    /// CSV in the layout of a printed power table; the diagonal reads `--`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["null\\alternative".to_string()];
        header.extend(self.labels.iter().cloned());
        w.write_record(&header)?;
        for (label, row) in self.labels.iter().zip(&self.cells) {
            let mut record = vec![label.clone()];
            record.extend(row.iter().map(|c| match c {
                Some(v) => format!("{v:.2}"),
                None => "--".to_string(),
            }));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Full null x alternative power matrix. Each null's sigma is calibrated once
/// and shared across its row.
pub fn power_table(models: &[(String, SpectralModel)], design: &PowerDesign) -> Result<PowerTable> {
    design.validate()?;
    if models.is_empty() {
        return Err(invalid("power table needs at least one model"));
    }
    let rows = models
        .iter()
        .enumerate()
        .map(|(i, (_, null))| {
            if models.len() == 1 {
                return Ok((vec![None], None));
            }
            let sigma = design.sigma(null)?;
            let row = models
                .iter()
                .enumerate()
                .map(|(j, (_, alt))| {
                    if i == j {
                        return Ok(None);
                    }
                    Ok(Some(power_with_sigma(null, alt, design, &sigma)?.rejection_rate))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((row, Some(sigma.sigma)))
        })
        .collect::<Result<Vec<_>>>()?;
    let (cells, sigmas) = rows.into_iter().unzip();
    Ok(PowerTable {
        p: design.p,
        labels: models.iter().map(|(l, _)| l.clone()).collect(),
        cells,
        sigmas,
    })
}

/// Sampling-distribution summary of `sqrt(n) (lambda_hat - lambda_p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitRow {
    pub n: usize,
    pub kind: EstimateKind,
    pub replications: usize,
    pub mean: f64,
    pub median: f64,
    pub sd: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub jarque_bera: f64,
    pub jb_p_value: f64,
    pub normality_rejected: bool,
}

impl LimitRow {
    fn from_sample(n: usize, kind: EstimateKind, xs: &[f64]) -> Self {
        let m = Moments::of(xs);
        let jb_p_value = m.jarque_bera_p_value();
        Self {
            n,
            kind,
            replications: xs.len(),
            mean: m.mean,
            median: median(xs),
            sd: sample_variance(xs).sqrt(),
            skewness: m.skewness,
            excess_kurtosis: m.excess_kurtosis,
            jarque_bera: m.jarque_bera(),
            jb_p_value,
            normality_rejected: jb_p_value < NORMALITY_LEVEL,
        }
    }
}

/// Monte Carlo law of the raw and smoothed estimators (same series for both)
/// for each sample size, with a Jarque–Bera normality check at 1%.
pub fn raw_limit_diagnostic(
    model: &SpectralModel,
    p: f64,
    n_list: &[usize],
    replications: usize,
    window: &WindowSpec,
    base_seed: u64,
) -> Result<Vec<LimitRow>> {
    check_probability("p", p)?;
    check_gaussian(model)?;
    if replications < 2 {
        return Err(invalid("diagnostic needs at least 2 replications"));
    }
    let lambda_p = spectral_measure(model).quantile(p)?;
    let mut rows = Vec::with_capacity(2 * n_list.len());
    for &n in n_list {
        let lag_window = window.resolve(n)?;
        let grid = FrequencyGrid::for_length(n)?;
        let seed = derive_seed(base_seed, n as u64);
        let root_n = (n as f64).sqrt();
        let pairs: Vec<(f64, f64)> = (0..replications)
            .into_par_iter()
            .map(|k| {
                let series = generate(model, n, derive_seed(seed, k as u64))?;
                let raw = estimate_raw(&series, p, &grid)?.lambda_hat;
                let smooth = estimate_smoothed(&series, p, &lag_window, &grid)?.lambda_hat;
                Ok((root_n * (raw - lambda_p), root_n * (smooth - lambda_p)))
            })
            .collect::<Result<_>>()?;
        let (raw, smooth): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        rows.push(LimitRow::from_sample(n, EstimateKind::Raw, &raw));
        rows.push(LimitRow::from_sample(n, EstimateKind::Smoothed, &smooth));
    }
    Ok(rows)
}

/// `T_n(lambda) = a int_lambda^{lambda + 1/a} I(w) dw` with `a = n^beta`,
/// computed exactly from the lag-sum form of the periodogram.
pub fn local_periodogram_mass(series: &TimeSeries, lambda: f64, beta: f64) -> Result<f64> {
    let n = series.len();
    let a = (n as f64).powf(beta);
    let width = 1.0 / a;
    let acov = autocovariance(series, n - 1)?;
    let centre = lambda + 0.5 * width;
    let mut acc = NeumaierSum::new();
    acc.add(acov[0] * width);
    for (h, c) in acov.iter().enumerate().skip(1) {
        let h = h as f64;
        // sin(h b) - sin(h lambda) = 2 cos(h centre) sin(h width / 2)
        acc.add(2.0 * c * 2.0 * (h * centre).cos() * (0.5 * h * width).sin() / h);
    }
    Ok(a * acc.value() / (2.0 * PI))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TnRow {
    pub n: usize,
    pub beta: f64,
    pub variance: f64,
    /// `f(lambda)^2`, the finite limit at `beta = 1`.
    pub reference: f64,
    pub replications: usize,
}

/// Monte Carlo variance of `T_n(lambda)` for each `n`.
pub fn tn_variance_diagnostic(
    model: &SpectralModel,
    lambda: f64,
    beta: f64,
    n_list: &[usize],
    replications: usize,
    base_seed: u64,
) -> Result<Vec<TnRow>> {
    check_gaussian(model)?;
    if !(beta > 0.0) {
        return Err(invalid(format!("beta must be > 0, got {beta}")));
    }
    if replications < 2 {
        return Err(invalid("diagnostic needs at least 2 replications"));
    }
    for &n in n_list {
        if n < 2 {
            return Err(invalid(format!("sample size must be >= 2, got {n}")));
        }
        let upper = lambda + (n as f64).powf(-beta);
        if !(lambda > -PI && upper <= PI) {
            return Err(invalid(format!(
                "integration window [{lambda}, {upper}] must lie inside [-pi, pi] for n = {n}"
            )));
        }
    }
    let reference = spectral_measure(model).density(lambda).powi(2);
    n_list
        .iter()
        .map(|&n| {
            let seed = derive_seed(base_seed, n as u64);
            let values: Vec<f64> = (0..replications)
                .into_par_iter()
                .map(|k| {
                    let series = generate(model, n, derive_seed(seed, k as u64))?;
                    local_periodogram_mass(&series, lambda, beta)
                })
                .collect::<Result<_>>()?;
            Ok(TnRow {
                n,
                beta,
                variance: sample_variance(&values),
                reference,
                replications,
            })
        })
        .collect()
}
