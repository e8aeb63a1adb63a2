//! Command bodies. Each writes CSV preceded by `#` lines echoing the config.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use specquant::inference::{
    raw_limit_diagnostic, tn_variance_diagnostic, LimitRow, TnRow,
};
use specquant::sample::export_batch;
use specquant::{
    generate_batch, mc_sigma, power_table, quantile_test, replicate_estimates, summarise,
    SimulationPlan, TestResult, TimeSeries, WindowSpec,
};

use crate::config::{
    DiagnoseConfig, EstimateConfig, EstimateRows, PowerConfig, SimulateConfig, TestConfig,
};

/// `# specquant <version> <command>` and `# config <json>`.
pub fn write_header<W: Write, C: Serialize>(out: &mut W, command: &str, config: &C) -> Result<()> {
    writeln!(out, "# specquant {} {command}", env!("CARGO_PKG_VERSION"))?;
    writeln!(out, "# config {}", serde_json::to_string(config)?)?;
    Ok(())
}

fn bandwidth(window: &WindowSpec, n: usize) -> Result<usize> {
    Ok(window.resolve(n)?.m())
}

pub fn estimate<W: Write>(config: &EstimateConfig, out: &mut W) -> Result<()> {
    write_header(out, "estimate", config)?;
    let estimator = config.estimator();
    let smoothed = matches!(estimator, specquant::Estimator::Smoothed { .. });
    let mut w = csv::Writer::from_writer(out);
    match config.rows {
        EstimateRows::Summary => w.write_record([
            "model", "n", "p", "kind", "m", "true_quantile", "single", "mean", "sd", "replications",
        ])?,
        EstimateRows::Estimates => {
            w.write_record(["model", "p", "lambda_hat", "kind", "n", "m", "seed"])?
        }
    }
    for named in &config.models {
        let label = named.label();
        for &n in &config.n {
            let m = if smoothed {
                bandwidth(&config.window, n)?.to_string()
            } else {
                String::new()
            };
            let plan = SimulationPlan::new(named.model.clone(), n, config.replications, config.base_seed)?;
            log::info!("estimate: {label}, n = {n}, {} replications", config.replications);
            match config.rows {
                EstimateRows::Summary => {
                    for s in summarise(&plan, &config.p, &estimator)? {
                        w.write_record([
                            label.clone(),
                            n.to_string(),
                            s.p.to_string(),
                            s.kind.to_string(),
                            m.clone(),
                            format!("{:.6}", s.true_quantile),
                            format!("{:.6}", s.single),
                            format!("{:.6}", s.mean),
                            format!("{:.6}", s.sd),
                            s.replications.to_string(),
                        ])?;
                    }
                }
                EstimateRows::Estimates => {
                    for run in replicate_estimates(&plan, &config.p, &estimator)? {
                        for e in run {
                            w.write_record([
                                label.clone(),
                                e.p.to_string(),
                                format!("{:?}", e.lambda_hat),
                                e.kind.to_string(),
                                e.n.to_string(),
                                m.clone(),
                                e.seed.to_string(),
                            ])?;
                        }
                    }
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Calibrates sigma on the null at the series length and runs the test.
pub fn test<W: Write>(config: &TestConfig, series: &TimeSeries, out: &mut W) -> Result<TestResult> {
    let n = series.len();
    config
        .window
        .resolve(n)
        .with_context(|| format!("window does not fit a series of length {n}"))?;
    let sigma = mc_sigma(
        &config.null.model,
        config.p,
        n,
        &config.window,
        config.sigma_replications,
        config.base_seed,
    )?;
    let result = quantile_test(series, config.p, &config.null.model, &config.window, config.alpha, &sigma)?;
    write_header(out, "test", config)?;
    result.write_csv(&mut *out)?;
    Ok(result)
}

pub fn load_series(path: &Path) -> Result<TimeSeries> {
    Ok(TimeSeries::load_csv(path)?)
}

pub fn power<W: Write>(config: &PowerConfig, out: &mut W) -> Result<()> {
    write_header(out, "power", config)?;
    let models: Vec<(String, specquant::SpectralModel)> = config
        .models
        .iter()
        .map(|m| (m.label(), m.model.clone()))
        .collect();
    let labels: Vec<String> = models.iter().map(|m| m.0.clone()).collect();
    let mut tables = Vec::new();
    for &p in &config.p {
        log::info!("power: p = {p}, {} models", models.len());
        let table = power_table(&models, &config.design(p))?;
        for (label, sigma) in labels.iter().zip(&table.sigmas) {
            if let Some(s) = sigma {
                writeln!(out, "# sigma_hat p={p} null={label}: {s:.6}")?;
            }
        }
        tables.push(table);
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["p".to_string(), "null\\alternative".to_string()];
    header.extend(labels.iter().cloned());
    w.write_record(&header)?;
    for table in &tables {
        for (label, row) in labels.iter().zip(&table.cells) {
            let mut record = vec![table.p.to_string(), label.clone()];
            record.extend(row.iter().map(|c| match c {
                Some(v) => format!("{v:.2}"),
                None => "--".to_string(),
            }));
            w.write_record(&record)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes `replicate_000.csv`, ... into `dir`.
pub fn simulate(config: &SimulateConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let plan = SimulationPlan::new(
        config.model.model.clone(),
        config.n,
        config.replications,
        config.base_seed,
    )?;
    let batch = generate_batch(&plan)?;
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let paths = export_batch(&batch, dir)?;
    let mut manifest = std::fs::File::create(dir.join("config.json"))?;
    serde_json::to_writer_pretty(&mut manifest, config)?;
    writeln!(manifest)?;
    Ok(paths)
}

const DIAGNOSE_COLUMNS: [&str; 15] = [
    "diagnostic",
    "n",
    "beta",
    "kind",
    "replications",
    "variance",
    "reference",
    "mean",
    "median",
    "sd",
    "skewness",
    "excess_kurtosis",
    "jarque_bera",
    "jb_p_value",
    "normality_rejected",
];

fn tn_record(r: &TnRow) -> Vec<String> {
    let mut v = vec![
        "tn_variance".to_string(),
        r.n.to_string(),
        r.beta.to_string(),
        String::new(),
        r.replications.to_string(),
        format!("{:.8}", r.variance),
        format!("{:.8}", r.reference),
    ];
    v.resize(DIAGNOSE_COLUMNS.len(), String::new());
    v
}

fn limit_record(r: &LimitRow) -> Vec<String> {
    vec![
        "raw_limit".to_string(),
        r.n.to_string(),
        String::new(),
        r.kind.to_string(),
        r.replications.to_string(),
        format!("{:.6}", r.sd * r.sd),
        String::new(),
        format!("{:.6}", r.mean),
        format!("{:.6}", r.median),
        format!("{:.6}", r.sd),
        format!("{:.4}", r.skewness),
        format!("{:.4}", r.excess_kurtosis),
        format!("{:.4}", r.jarque_bera),
        format!("{:.4}", r.jb_p_value),
        r.normality_rejected.to_string(),
    ]
}

/// Tidy CSV with one row per (diagnostic, n, beta or estimator kind).
pub fn diagnose<W: Write>(config: &DiagnoseConfig, out: &mut W) -> Result<()> {
    write_header(out, "diagnose", config)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(DIAGNOSE_COLUMNS)?;
    if let Some(tn) = &config.tn {
        for &beta in &tn.betas {
            log::info!("diagnose: T_n variance, beta = {beta}");
            let rows = tn_variance_diagnostic(
                &config.model.model,
                tn.lambda,
                beta,
                &tn.n,
                tn.replications,
                config.base_seed,
            )?;
            for r in &rows {
                w.write_record(tn_record(r))?;
            }
        }
    }
    if let Some(rl) = &config.raw_limit {
        log::info!("diagnose: limit law, p = {}", rl.p);
        let rows = raw_limit_diagnostic(
            &config.model.model,
            rl.p,
            &rl.n,
            rl.replications,
            &rl.window,
            config.base_seed,
        )?;
        for r in &rows {
            w.write_record(limit_record(r))?;
        }
    }
    w.flush()?;
    Ok(())
}
