//! Parametric process families and their spectral measures.
//!
//! A [`SpectralModel`] is Gaussian noise (white, MA(1) or AR(1)) plus any
//! number of random-phase sinusoids. Its [`SpectralMeasure`] has an absolutely
//! continuous part with a closed-form density and one symmetric pair of atoms
//! per sinusoid. The measure's CDF and quantiles are the ground truth that the
//! estimators are checked against.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{check_frequency, check_probability, invalid, Error, Result};
use crate::numeric::integrate;
use crate::quantile::check_function;

/// Absolute tolerance for every quadrature over the continuous part.
pub const QUADRATURE_TOLERANCE: f64 = 1e-10;

/// Bisection tolerance (radians) for quantile inversion.
pub const BISECTION_TOLERANCE: f64 = 1e-10;

/// Stationary Gaussian noise family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Noise {
    WhiteNoise { variance: f64 },
    /// `X_t = e_t + theta e_{t-1}` with `Var(e_t) = variance`.
    Ma1 { theta: f64, variance: f64 },
    /// `X_t = coeff X_{t-1} + e_t` with `Var(e_t) = variance`, `|coeff| < 1`.
    Ar1 { coeff: f64, variance: f64 },
}

impl Noise {
    fn validate(self) -> Result<Self> {
        let variance = self.innovation_variance();
        if !(variance.is_finite() && variance > 0.0) {
            return Err(invalid(format!("noise variance must be > 0, got {variance}")));
        }
        match self {
            Noise::Ma1 { theta, .. } if !theta.is_finite() => {
                Err(invalid(format!("MA(1) coefficient must be finite, got {theta}")))
            }
            Noise::Ar1 { coeff, .. } if !(coeff.abs() < 1.0) => Err(invalid(format!(
                "AR(1) coefficient must lie strictly inside (-1, 1), got {coeff}"
            ))),
            _ => Ok(self),
        }
    }

    pub fn innovation_variance(&self) -> f64 {
        match *self {
            Noise::WhiteNoise { variance }
            | Noise::Ma1 { variance, .. }
            | Noise::Ar1 { variance, .. } => variance,
        }
    }

    /// Autocovariance `R_X(h)`.
    pub fn autocovariance(&self, lag: i64) -> f64 {
        let h = lag.unsigned_abs();
        match *self {
            Noise::WhiteNoise { variance } => {
                if h == 0 {
                    variance
                } else {
                    0.0
                }
            }
            Noise::Ma1 { theta, variance } => match h {
                0 => variance * (1.0 + theta * theta),
                1 => variance * theta,
                _ => 0.0,
            },
            Noise::Ar1 { coeff, variance } => {
                variance * coeff.powi(h as i32) / (1.0 - coeff * coeff)
            }
        }
    }

    /// Closed-form spectral density at `omega` (no domain check).
    pub fn density(&self, omega: f64) -> f64 {
        let c = omega.cos();
        match *self {
            Noise::WhiteNoise { variance } => variance / (2.0 * PI),
            Noise::Ma1 { theta, variance } => {
                variance / (2.0 * PI) * (1.0 + theta * theta + 2.0 * theta * c).max(0.0)
            }
            Noise::Ar1 { coeff, variance } => {
                variance / (2.0 * PI) / (1.0 - 2.0 * coeff * c + coeff * coeff)
            }
        }
    }

    fn scaled(self, c: f64) -> Self {
        match self {
            Noise::WhiteNoise { variance } => Noise::WhiteNoise {
                variance: variance * c,
            },
            Noise::Ma1 { theta, variance } => Noise::Ma1 {
                theta,
                variance: variance * c,
            },
            Noise::Ar1 { coeff, variance } => Noise::Ar1 {
                coeff,
                variance: variance * c,
            },
        }
    }
}

/// Deterministic-amplitude, random-phase harmonic `R cos(lambda t + phi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinusoidAtom {
    pub amplitude: f64,
    pub frequency: f64,
}

impl SinusoidAtom {
    pub fn new(amplitude: f64, frequency: f64) -> Result<Self> {
        if !(amplitude.is_finite() && amplitude > 0.0) {
            return Err(invalid(format!("sinusoid amplitude must be > 0, got {amplitude}")));
        }
        if !(frequency > 0.0 && frequency < PI) {
            return Err(Error::Domain {
                what: "sinusoid frequency",
                value: frequency,
                domain: "(0, pi)",
            });
        }
        Ok(Self {
            amplitude,
            frequency,
        })
    }
}

/// Noise family plus sinusoidal components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelRecord", into = "ModelRecord")]
pub struct SpectralModel {
    noise: Noise,
    atoms: Vec<SinusoidAtom>,
}

impl SpectralModel {
    pub fn new(noise: Noise, atoms: Vec<SinusoidAtom>) -> Result<Self> {
        let noise = noise.validate()?;
        let atoms = atoms
            .into_iter()
            .map(|a| SinusoidAtom::new(a.amplitude, a.frequency))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { noise, atoms })
    }

    pub fn white_noise(variance: f64) -> Result<Self> {
        Self::new(Noise::WhiteNoise { variance }, Vec::new())
    }

    pub fn ma1(theta: f64, variance: f64) -> Result<Self> {
        Self::new(Noise::Ma1 { theta, variance }, Vec::new())
    }

    pub fn ar1(coeff: f64, variance: f64) -> Result<Self> {
        Self::new(Noise::Ar1 { coeff, variance }, Vec::new())
    }

    pub fn with_sinusoid(mut self, amplitude: f64, frequency: f64) -> Result<Self> {
        self.atoms.push(SinusoidAtom::new(amplitude, frequency)?);
        Ok(self)
    }

    pub fn noise(&self) -> &Noise {
        &self.noise
    }

    pub fn atoms(&self) -> &[SinusoidAtom] {
        &self.atoms
    }

    /// `R_Y(h) = R_X(h) + 1/2 sum R_j^2 cos(lambda_j h)`.
    pub fn autocovariance(&self, lag: i64) -> f64 {
        self.noise.autocovariance(lag)
            + self
                .atoms
                .iter()
                .map(|a| 0.5 * a.amplitude * a.amplitude * (a.frequency * lag as f64).cos())
                .sum::<f64>()
    }

    pub fn variance(&self) -> f64 {
        self.autocovariance(0)
    }

    /// The same model with every variance-like quantity multiplied by `c`
    /// (amplitudes scale by `sqrt(c)`).
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(invalid(format!("scale factor must be > 0, got {c}")));
        }
        let atoms = self
            .atoms
            .iter()
            .map(|a| SinusoidAtom {
                amplitude: a.amplitude * c.sqrt(),
                frequency: a.frequency,
            })
            .collect();
        Self::new(self.noise.scaled(c), atoms)
    }

    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for SpectralModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.noise {
            Noise::WhiteNoise { variance } => write!(f, "WN(v={variance})")?,
            Noise::Ma1 { theta, variance } => write!(f, "MA1({theta}, v={variance})")?,
            Noise::Ar1 { coeff, variance } => write!(f, "AR1({coeff}, v={variance})")?,
        }
        for a in &self.atoms {
            write!(f, "+{}cos({:.4}t)", a.amplitude, a.frequency)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseFamily {
    #[serde(alias = "wn", alias = "white")]
    WhiteNoise,
    #[serde(alias = "ma")]
    Ma1,
    #[serde(alias = "ar")]
    Ar1,
}

/// Wire form of a noise family: `{family, coeff, variance}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseRecord {
    pub family: NoiseFamily,
    #[serde(default)]
    pub coeff: f64,
    #[serde(default = "unit_variance")]
    pub variance: f64,
}

fn unit_variance() -> f64 {
    1.0
}

/// Wire form of a model: `{noise: {...}, atoms: [{amplitude, frequency}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelRecord {
    pub noise: NoiseRecord,
    #[serde(default)]
    pub atoms: Vec<SinusoidAtom>,
}

impl TryFrom<ModelRecord> for SpectralModel {
    type Error = Error;

    fn try_from(r: ModelRecord) -> Result<Self> {
        let noise = match r.noise.family {
            NoiseFamily::WhiteNoise => Noise::WhiteNoise {
                variance: r.noise.variance,
            },
            NoiseFamily::Ma1 => Noise::Ma1 {
                theta: r.noise.coeff,
                variance: r.noise.variance,
            },
            NoiseFamily::Ar1 => Noise::Ar1 {
                coeff: r.noise.coeff,
                variance: r.noise.variance,
            },
        };
        SpectralModel::new(noise, r.atoms)
    }
}

impl From<SpectralModel> for ModelRecord {
    fn from(m: SpectralModel) -> Self {
        let (family, coeff, variance) = match m.noise {
            Noise::WhiteNoise { variance } => (NoiseFamily::WhiteNoise, 0.0, variance),
            Noise::Ma1 { theta, variance } => (NoiseFamily::Ma1, theta, variance),
            Noise::Ar1 { coeff, variance } => (NoiseFamily::Ar1, coeff, variance),
        };
        ModelRecord {
            noise: NoiseRecord {
                family,
                coeff,
                variance,
            },
            atoms: m.atoms,
        }
    }
}

/// Point mass of the spectral measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

/// Spectral measure on `[-pi, pi]`: closed-form density plus symmetric atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMeasure {
    continuous: Noise,
    atoms: Vec<Atom>,
    half_continuous_mass: f64,
    positive_atom_mass: f64,
    total_mass: f64,
}

/// Continuous part of the model's spectral measure, atoms excluded.
pub fn spectral_density(model: &SpectralModel, omega: f64) -> Result<f64> {
    check_frequency("omega", omega)?;
    Ok(model.noise.density(omega))
}

/// Builds the spectral measure of a model. Each sinusoid of amplitude `R`
/// at `lambda` contributes mass `R^2/4` at both `+lambda` and `-lambda`.
pub fn spectral_measure(model: &SpectralModel) -> SpectralMeasure {
    let mut atoms: Vec<Atom> = model
        .atoms
        .iter()
        .flat_map(|a| {
            let mass = 0.25 * a.amplitude * a.amplitude;
            [
                Atom {
                    location: -a.frequency,
                    mass,
                },
                Atom {
                    location: a.frequency,
                    mass,
                },
            ]
        })
        .collect();
    atoms.sort_by(|a, b| a.location.total_cmp(&b.location));
    SpectralMeasure::build(model.noise, atoms)
}

impl SpectralMeasure {
    fn build(continuous: Noise, atoms: Vec<Atom>) -> Self {
        let half_continuous_mass =
            integrate(|w| continuous.density(w), 0.0, PI, QUADRATURE_TOLERANCE);
        let positive_atom_mass: f64 = atoms
            .iter()
            .filter(|a| a.location > 0.0)
            .map(|a| a.mass)
            .sum();
        let total_mass = 2.0 * (half_continuous_mass + positive_atom_mass);
        Self {
            continuous,
            atoms,
            half_continuous_mass,
            positive_atom_mass,
            total_mass,
        }
    }

    pub fn density(&self, omega: f64) -> f64 {
        self.continuous.density(omega)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// The measure multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(invalid(format!("scale factor must be > 0, got {c}")));
        }
        let atoms = self
            .atoms
            .iter()
            .map(|a| Atom {
                location: a.location,
                mass: a.mass * c,
            })
            .collect();
        Ok(Self::build(self.continuous.scaled(c), atoms))
    }

    /// `F(omega)`: mass of `[-pi, omega]`, right-continuous at atoms.
    ///
    /// Evaluated outward from 0 so that `F(0) = total/2` and `F(pi) = total`
    /// hold exactly for the symmetric measure.
    pub fn cdf(&self, omega: f64) -> Result<f64> {
        check_frequency("omega", omega)?;
        Ok(self.cdf_unchecked(omega))
    }

    fn cdf_unchecked(&self, omega: f64) -> f64 {
        let half = 0.5 * self.total_mass;
        if omega >= PI {
            return self.total_mass;
        }
        if omega <= -PI {
            return 0.0;
        }
        if omega >= 0.0 {
            let cont = integrate(|w| self.density(w), 0.0, omega, QUADRATURE_TOLERANCE);
            let jumps: f64 = self
                .atoms
                .iter()
                .filter(|a| a.location > 0.0 && a.location <= omega)
                .map(|a| a.mass)
                .sum();
            (half + cont + jumps).min(self.total_mass)
        } else {
            let cont = integrate(|w| self.density(w), omega, 0.0, QUADRATURE_TOLERANCE);
            let jumps: f64 = self
                .atoms
                .iter()
                .filter(|a| a.location > omega && a.location < 0.0)
                .map(|a| a.mass)
                .sum();
            (half - cont - jumps).max(0.0)
        }
    }

    /// Smallest `omega` with `F(omega) / total >= p`.
    ///
    /// `p = 0` gives `-pi`; `p = 1` gives `pi` (every supported family has a
    /// density reaching `pi`). When an atom's jump straddles `p` the atom
    /// location is returned exactly.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        check_probability("p", p)?;
        if p == 0.0 {
            return Ok(-PI);
        }
        if p == 1.0 {
            return Ok(PI);
        }
        let target = p * self.total_mass;
        for atom in &self.atoms {
            let upper = self.cdf_unchecked(atom.location);
            let lower = upper - atom.mass;
            if lower < target && target <= upper {
                return Ok(atom.location);
            }
        }
        let (mut lo, mut hi) = (-PI, PI);
        while hi - lo > BISECTION_TOLERANCE {
            let mid = 0.5 * (lo + hi);
            if self.cdf_unchecked(mid) >= target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    /// `S(theta) = integral of rho_p(omega - theta) dF(omega)`.
    pub fn population_objective(&self, p: f64, theta: f64) -> Result<f64> {
        check_probability("p", p)?;
        check_frequency("theta", theta)?;
        let left = integrate(
            |w| (p - 1.0) * (w - theta) * self.density(w),
            -PI,
            theta,
            QUADRATURE_TOLERANCE,
        );
        let right = integrate(
            |w| p * (w - theta) * self.density(w),
            theta,
            PI,
            QUADRATURE_TOLERANCE,
        );
        let atoms: f64 = self
            .atoms
            .iter()
            .map(|a| check_function(p, a.location - theta).map(|r| r * a.mass))
            .sum::<Result<f64>>()?;
        Ok(left + right + atoms)
    }

    /// Mass of the continuous part on `[0, pi]` and of the atoms on `(0, pi)`.
    pub fn half_masses(&self) -> (f64, f64) {
        (self.half_continuous_mass, self.positive_atom_mass)
    }
}

/// `F(omega)` for the model's spectral measure.
pub fn spectral_cdf(measure: &SpectralMeasure, omega: f64) -> Result<f64> {
    measure.cdf(omega)
}

/// The `p`-th quantile of the normalized spectral distribution.
pub fn true_quantile(measure: &SpectralMeasure, p: f64) -> Result<f64> {
    measure.quantile(p)
}

pub fn population_objective(measure: &SpectralMeasure, p: f64, theta: f64) -> Result<f64> {
    measure.population_objective(p, theta)
}
