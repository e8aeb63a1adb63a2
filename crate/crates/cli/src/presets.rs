//! Built-in experiment designs.

use std::f64::consts::PI;

use specquant::{EstimateKind, SpectralModel, WindowSpec, DEFAULT_SEED};

use crate::config::{
    DiagnoseConfig, EstimateConfig, EstimateRows, NamedModel, PowerConfig, RawLimitConfig,
    TnConfig,
};

pub const NAMES: [&str; 7] = ["table1", "table2", "table3", "table4", "table5", "tn-variance", "rawlimit"];

#[derive(Debug, Clone, PartialEq)]
pub enum Preset {
    Estimate(EstimateConfig),
    Power(PowerConfig),
    Diagnose(DiagnoseConfig),
}

impl Preset {
    pub fn command(&self) -> &'static str {
        match self {
            Preset::Estimate(_) => "estimate",
            Preset::Power(_) => "power",
            Preset::Diagnose(_) => "diagnose",
        }
    }
}

/// White noise, MA(1) 0.9, AR(1) 0.9 and AR(1) -0.9 with unit innovations.
pub fn table_models() -> Vec<NamedModel> {
    vec![
        NamedModel::new("White noise", SpectralModel::white_noise(1.0).unwrap()),
        NamedModel::new("MA(1)", SpectralModel::ma1(0.9, 1.0).unwrap()),
        NamedModel::new("AR(1) 0.9", SpectralModel::ar1(0.9, 1.0).unwrap()),
        NamedModel::new("AR(1) -0.9", SpectralModel::ar1(-0.9, 1.0).unwrap()),
    ]
}

fn upper_half_ps() -> Vec<f64> {
    vec![0.5, 0.6, 0.7, 0.8, 0.9, 1.0]
}

fn raw_estimates(models: Vec<NamedModel>, n: Vec<usize>) -> Preset {
    Preset::Estimate(EstimateConfig {
        models,
        p: upper_half_ps(),
        n,
        replications: 100,
        estimator: EstimateKind::Raw,
        window: WindowSpec::default(),
        rows: EstimateRows::Summary,
        base_seed: DEFAULT_SEED,
    })
}

fn power(p: f64) -> Preset {
    Preset::Power(PowerConfig {
        models: table_models(),
        p: vec![p],
        n: 50,
        alpha: 0.1,
        replications: 100,
        sigma_replications: 100,
        window: WindowSpec::default(),
        base_seed: DEFAULT_SEED,
    })
}

fn white_noise() -> NamedModel {
    NamedModel::new("White noise", SpectralModel::white_noise(1.0).unwrap())
}

pub fn preset(name: &str) -> Option<Preset> {
    Some(match name {
        "table1" => raw_estimates(table_models(), vec![30]),
        "table2" => raw_estimates(vec![white_noise()], vec![30, 50, 100, 200]),
        "table3" => raw_estimates(
            table_models()
                .into_iter()
                .map(|m| NamedModel {
                    name: m.name.map(|n| format!("{n} + sinusoid")),
                    model: m.model.with_sinusoid(0.5, PI / 2.0).unwrap(),
                })
                .collect(),
            vec![30],
        ),
        "table4" => power(0.7),
        "table5" => power(0.8),
        "tn-variance" => Preset::Diagnose(DiagnoseConfig {
            model: white_noise(),
            tn: Some(TnConfig {
                lambda: PI / 4.0,
                betas: vec![0.5, 1.0, 1.5],
                n: vec![64, 128, 256, 512, 1024],
                replications: 2000,
            }),
            raw_limit: None,
            base_seed: DEFAULT_SEED,
        }),
        "rawlimit" => Preset::Diagnose(DiagnoseConfig {
            model: white_noise(),
            tn: None,
            raw_limit: Some(RawLimitConfig {
                p: 0.7,
                n: vec![30, 60, 120, 240, 480],
                replications: 1000,
                window: WindowSpec::default(),
            }),
            base_seed: DEFAULT_SEED,
        }),
        _ => return None,
    })
}
