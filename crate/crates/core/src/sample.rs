//! Seeded simulation of Gaussian noise plus random-phase sinusoids.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::models::{Noise, SpectralModel};

/// An observed stretch `x_1, ..., x_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
    seed: u64,
    model_tag: String,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>, seed: u64, model_tag: impl Into<String>) -> Result<Self> {
        if values.len() < 2 {
            return Err(invalid(format!(
                "a time series needs at least 2 values, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("value at index {i} is not finite")));
        }
        Ok(Self {
            values,
            seed,
            model_tag: model_tag.into(),
        })
    }

    /// Wraps observed data that did not come from the simulator.
    pub fn observed(values: Vec<f64>) -> Result<Self> {
        Self::new(values, 0, "observed")
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn model_tag(&self) -> &str {
        &self.model_tag
    }

    /// Every value multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(
            self.values.iter().map(|v| v * c).collect(),
            self.seed,
            self.model_tag.clone(),
        )
    }

    /// Single-column CSV with header `value`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["value"])?;
        for v in &self.values {
            w.write_record([format!("{v:?}")])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Parses a single-column CSV with header `value`. Errors name the
    /// 1-based line of the offending row.
    pub fn read_csv<R: Read>(reader: R, origin: &Path) -> Result<Self> {
        let parse_err = |row: usize, message: String| Error::Parse {
            path: origin.to_path_buf(),
            row,
            message,
        };
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| parse_err(1, e.to_string()))?
            .clone();
        if headers.len() != 1 || &headers[0] != "value" {
            return Err(parse_err(1, format!("expected header `value`, found `{}`", headers.as_slice())));
        }
        let mut values = Vec::new();
        for record in rdr.records() {
            let record = record.map_err(|e| {
                let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
                parse_err(line, e.to_string())
            })?;
            let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
            if record.len() != 1 {
                return Err(parse_err(line, format!("expected 1 field, found {}", record.len())));
            }
            let v: f64 = record[0]
                .parse()
                .map_err(|_| parse_err(line, format!("`{}` is not a number", &record[0])))?;
            if !v.is_finite() {
                return Err(parse_err(line, format!("`{}` is not finite", &record[0])));
            }
            values.push(v);
        }
        TimeSeries::observed(values)
            .map_err(|e| parse_err(0, e.to_string()))
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(file), path)
    }
}

/// Replications of one model at one sample size.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationPlan {
    pub model: SpectralModel,
    pub n: usize,
    pub replications: usize,
    pub base_seed: u64,
}

impl SimulationPlan {
    pub fn new(model: SpectralModel, n: usize, replications: usize, base_seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(invalid(format!("sample size must be >= 2, got {n}")));
        }
        if replications < 1 {
            return Err(invalid("replications must be >= 1"));
        }
        Ok(Self {
            model,
            n,
            replications,
            base_seed,
        })
    }

    pub fn replicate_seed(&self, k: usize) -> u64 {
        derive_seed(self.base_seed, k as u64)
    }
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function (a bijection on `u64`).
pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replicate `k`: the `k+1`-th SplitMix64 output of the stream
/// started at `base`. Injective in `k` for a fixed base.
pub fn derive_seed(base: u64, k: u64) -> u64 {
    splitmix64(base.wrapping_add(GOLDEN_GAMMA.wrapping_mul(k.wrapping_add(1))))
}

/// Simulates `n` observations of the model. Pure in `(model, n, seed)`.
///
/// Sinusoid phases are drawn first, uniform on `(-pi, pi)`, then the noise:
/// MA(1) uses one burn-in innovation, AR(1) starts from its stationary law.
pub fn generate(model: &SpectralModel, n: usize, seed: u64) -> Result<TimeSeries> {
    if n < 2 {
        return Err(invalid(format!("sample size must be >= 2, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phases: Vec<f64> = model
        .atoms()
        .iter()
        .map(|_| rng.random_range(-PI..PI))
        .collect();
    let mut normal = || -> f64 { rng.sample(StandardNormal) };

    let mut values = Vec::with_capacity(n);
    match *model.noise() {
        Noise::WhiteNoise { variance } => {
            let sd = variance.sqrt();
            values.extend((0..n).map(|_| sd * normal()));
        }
        Noise::Ma1 { theta, variance } => {
            let sd = variance.sqrt();
            let mut prev = sd * normal();
            for _ in 0..n {
                let e = sd * normal();
                values.push(e + theta * prev);
                prev = e;
            }
        }
        Noise::Ar1 { coeff, variance } => {
            let sd = variance.sqrt();
            let mut x = sd / (1.0 - coeff * coeff).sqrt() * normal();
            values.push(x);
            for _ in 1..n {
                x = coeff * x + sd * normal();
                values.push(x);
            }
        }
    }
    for (atom, phase) in model.atoms().iter().zip(&phases) {
        for (i, v) in values.iter_mut().enumerate() {
            let t = (i + 1) as f64;
            *v += atom.amplitude * (atom.frequency * t + phase).cos();
        }
    }
    TimeSeries::new(values, seed, model.label())
}

/// Phases the generator draws for `seed`; exposed for independence checks.
pub fn drawn_phases(model: &SpectralModel, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    model
        .atoms()
        .iter()
        .map(|_| rng.random_range(-PI..PI))
        .collect()
}

/// All replicates of a plan, generated in parallel; replicate `k` uses
/// `derive_seed(base_seed, k)`, so output does not depend on scheduling.
pub fn generate_batch(plan: &SimulationPlan) -> Result<Vec<TimeSeries>> {
    (0..plan.replications)
        .into_par_iter()
        .map(|k| generate(&plan.model, plan.n, plan.replicate_seed(k)))
        .collect()
}

/// Writes `replicate_000.csv`, `replicate_001.csv`, ... into `dir`.
pub fn export_batch(batch: &[TimeSeries], dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let width = batch.len().saturating_sub(1).to_string().len().max(3);
    batch
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let path = dir.join(format!("replicate_{k:0width$}.csv"));
            s.save_csv(&path)?;
            Ok(path)
        })
        .collect()
}
