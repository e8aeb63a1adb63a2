//! Sample autocovariances, raw and extended periodograms, lag windows and
//! the lag-window smoothed spectral density.
//!
//! Conventions:
//!
//! * `C_n(h) = (1/n) sum_{s=1}^{n-h} x_s x_{s+h}` (biased divisor), so that
//!   `I(w) = (1/2pi) sum_{|h|<n} C_n(h) e^{-ihw}` holds exactly.
//! * `I(w) = |sum_j x_j e^{ijw}|^2 / (2 pi n)`, and the extended periodogram is
//!   `I*(w) = sum_{|h|<n} C_n(h) e^{-ihw} = 2 pi I(w)`.
//! * The smoothed estimate is `f(w) = (1/2pi) sum_{|h|<=m} phi(h/m) C_n(h) e^{-ihw}`,
//!   whose integral over `[-pi, pi]` is `C_n(0)`.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::path::Path;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::numeric::NeumaierSum;
use crate::sample::TimeSeries;

/// Strictly increasing frequencies in `[-pi, pi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    points: Vec<f64>,
    /// `Some(l)` when the grid is `{pi k / l : k = -l..=l}`.
    lattice: Option<usize>,
}

impl FrequencyGrid {
    /// The symmetric lattice `{pi k / half : k = -half..=half}`; negative
    /// points are exact mirrors of positive ones.
    pub fn lattice(half: usize) -> Result<Self> {
        if half == 0 {
            return Err(invalid("lattice needs at least one positive frequency"));
        }
        let positive: Vec<f64> = (0..=half).map(|k| PI * (k as f64 / half as f64)).collect();
        let mut points: Vec<f64> = positive[1..].iter().rev().map(|w| -w).collect();
        points.extend_from_slice(&positive);
        Ok(Self {
            points,
            lattice: Some(half),
        })
    }

    /// Default evaluation grid for a series of length `n`: step `pi/n`,
    /// i.e. the Fourier lattice refined by a factor of two.
    pub fn for_length(n: usize) -> Result<Self> {
        Self::lattice(n)
    }

    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(invalid("frequency grid is empty"));
        }
        if points.iter().any(|w| !(-PI..=PI).contains(w)) {
            return Err(invalid("frequency grid must lie within [-pi, pi]"));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("frequency grid must be strictly increasing"));
        }
        Ok(Self {
            points,
            lattice: None,
        })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn lattice_half(&self) -> Option<usize> {
        self.lattice
    }

    /// Largest spacing between neighbouring points (the lattice step for lattices).
    pub fn step(&self) -> f64 {
        match self.lattice {
            Some(half) => PI / half as f64,
            None => self
                .points
                .windows(2)
                .map(|w| w[1] - w[0])
                .fold(0.0, f64::max),
        }
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.points.len();
        (0..n).all(|i| self.points[i] == -self.points[n - 1 - i])
    }

    /// Trapezoid weights of the grid.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let p = &self.points;
        let n = p.len();
        if n == 1 {
            return vec![0.0];
        }
        if let Some(half) = self.lattice {
            let h = PI / half as f64;
            let mut w = vec![h; n];
            w[0] = 0.5 * h;
            w[n - 1] = 0.5 * h;
            return w;
        }
        (0..n)
            .map(|i| {
                let lo = if i == 0 { p[0] } else { p[i - 1] };
                let hi = if i + 1 == n { p[n - 1] } else { p[i + 1] };
                0.5 * (hi - lo)
            })
            .collect()
    }

    /// Evaluates `f` on the grid. On symmetric grids only the non-negative
    /// half is evaluated and mirrored, making the result exactly even.
    fn map_even<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        if self.is_symmetric() {
            let n = self.points.len();
            let mid = n / 2;
            let mut out = vec![0.0; n];
            for i in mid..n {
                let v = f(self.points[i]);
                out[i] = v;
                out[n - 1 - i] = v;
            }
            out
        } else {
            self.points.iter().map(|&w| f(w)).collect()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeriodogramKind {
    Raw,
    Extended,
    Smoothed,
}

impl fmt::Display for PeriodogramKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PeriodogramKind::Raw => "raw",
            PeriodogramKind::Extended => "extended",
            PeriodogramKind::Smoothed => "smoothed",
        })
    }
}

/// Lag-window shape `phi` on `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    /// `1 - |x|`; its spectral window is the non-negative Fejér kernel.
    Bartlett,
    Parzen,
    TukeyHanning,
    /// `phi = 1` on `[-1, 1]`. Can produce negative estimates.
    Truncated,
}

impl WindowKind {
    pub fn shape(self, x: f64) -> f64 {
        let a = x.abs();
        if a > 1.0 {
            return 0.0;
        }
        match self {
            WindowKind::Bartlett => 1.0 - a,
            WindowKind::Parzen => {
                if a <= 0.5 {
                    1.0 - 6.0 * a * a + 6.0 * a * a * a
                } else {
                    2.0 * (1.0 - a).powi(3)
                }
            }
            WindowKind::TukeyHanning => 0.5 * (1.0 + (PI * a).cos()),
            WindowKind::Truncated => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            WindowKind::Bartlett => "bartlett",
            WindowKind::Parzen => "parzen",
            WindowKind::TukeyHanning => "tukey_hanning",
            WindowKind::Truncated => "truncated",
        }
    }
}

/// A lag window with bandwidth `m`: weights `phi(h/m)` for `|h| <= m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagWindow {
    kind: WindowKind,
    m: usize,
}

impl LagWindow {
    pub fn new(kind: WindowKind, m: usize) -> Result<Self> {
        if m < 1 {
            return Err(invalid("lag window bandwidth m must be >= 1"));
        }
        Ok(Self { kind, m })
    }

    pub fn kind(&self) -> WindowKind {
        self.kind
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn shape(&self, x: f64) -> f64 {
        self.kind.shape(x)
    }

    pub fn weight(&self, lag: usize) -> f64 {
        self.kind.shape(lag as f64 / self.m as f64)
    }

    pub fn meta(&self) -> WindowMeta {
        WindowMeta {
            name: self.kind.name().to_string(),
            m: self.m,
        }
    }
}

pub fn bartlett_window(m: usize) -> Result<LagWindow> {
    LagWindow::new(WindowKind::Bartlett, m)
}

/// `floor(n^0.4)`, at least 1.
pub fn default_bandwidth(n: usize) -> usize {
    ((n as f64).powf(0.4) + 1e-9).floor().max(1.0) as usize
}

/// Bandwidth choice that is resolved once the sample size is known.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Bandwidth {
    #[default]
    #[serde(with = "auto_literal")]
    Auto,
    Fixed(usize),
}

mod auto_literal {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("auto")
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        let s = String::deserialize(d)?;
        if s == "auto" {
            Ok(())
        } else {
            Err(D::Error::custom(format!("expected \"auto\" or an integer, got \"{s}\"")))
        }
    }
}

/// Window family plus bandwidth rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub kind: WindowKind,
    #[serde(default)]
    pub m: Bandwidth,
}

impl Default for WindowSpec {
    fn default() -> Self {
        Self {
            kind: WindowKind::Bartlett,
            m: Bandwidth::Auto,
        }
    }
}

impl WindowSpec {
    pub fn bartlett_auto() -> Self {
        Self::default()
    }

    pub fn resolve(&self, n: usize) -> Result<LagWindow> {
        let m = match self.m {
            Bandwidth::Auto => default_bandwidth(n),
            Bandwidth::Fixed(m) => m,
        };
        if m >= n {
            return Err(invalid(format!("bandwidth m = {m} must be < n = {n}")));
        }
        LagWindow::new(self.kind, m)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowMeta {
    pub name: String,
    pub m: usize,
}

/// Spectral ordinates on a frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Periodogram {
    grid: FrequencyGrid,
    ordinates: Vec<f64>,
    kind: PeriodogramKind,
    n: usize,
    window: Option<WindowMeta>,
    clamped: usize,
}

impl Periodogram {
    /// Builds a periodogram from precomputed ordinates (e.g. for tests or
    /// externally computed spectra).
    pub fn from_ordinates(
        grid: FrequencyGrid,
        ordinates: Vec<f64>,
        kind: PeriodogramKind,
        n: usize,
    ) -> Result<Self> {
        if grid.len() != ordinates.len() {
            return Err(invalid(format!(
                "{} ordinates for a grid of {} points",
                ordinates.len(),
                grid.len()
            )));
        }
        if ordinates.iter().any(|v| !v.is_finite()) {
            return Err(invalid("ordinates must be finite"));
        }
        Ok(Self {
            grid,
            ordinates,
            kind,
            n,
            window: None,
            clamped: 0,
        })
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn frequencies(&self) -> &[f64] {
        self.grid.points()
    }

    pub fn ordinates(&self) -> &[f64] {
        &self.ordinates
    }

    pub fn kind(&self) -> PeriodogramKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn window(&self) -> Option<&WindowMeta> {
        self.window.as_ref()
    }

    /// Number of negative ordinates set to 0 while smoothing.
    pub fn clamped(&self) -> usize {
        self.clamped
    }

    /// Every ordinate multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            ordinates: self.ordinates.iter().map(|v| v * c).collect(),
            ..self.clone()
        }
    }

    /// Trapezoid-weighted masses `w_k I(w_k)`.
    pub fn masses(&self) -> Vec<f64> {
        self.grid
            .trapezoid_weights()
            .iter()
            .zip(&self.ordinates)
            .map(|(w, v)| w * v)
            .collect()
    }

    /// Trapezoid integral of the ordinates over the grid.
    pub fn integral(&self) -> f64 {
        self.masses().into_iter().collect::<NeumaierSum>().value()
    }

    /// Two-column CSV (`frequency,ordinate`) preceded by `#` comment lines
    /// recording kind, n, window and m.
    pub fn write_csv<W: Write>(&self, mut writer: W) -> Result<()> {
        writeln!(writer, "# kind={}", self.kind)?;
        writeln!(writer, "# n={}", self.n)?;
        match &self.window {
            Some(meta) => {
                writeln!(writer, "# window={}", meta.name)?;
                writeln!(writer, "# m={}", meta.m)?;
            }
            None => {
                writeln!(writer, "# window=none")?;
                writeln!(writer, "# m=none")?;
            }
        }
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["frequency", "ordinate"])?;
        for (f, v) in self.grid.points().iter().zip(&self.ordinates) {
            w.write_record([format!("{f:?}"), format!("{v:?}")])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// `C_n(0..=max_lag)` with the `1/n` divisor, via zero-padded FFT.
pub fn autocovariance(series: &TimeSeries, max_lag: usize) -> Result<Vec<f64>> {
    let x = series.values();
    let n = x.len();
    if max_lag >= n {
        return Err(invalid(format!("max_lag = {max_lag} must be < n = {n}")));
    }
    let size = (2 * n).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let mut buf: Vec<Complex64> = x
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
        .take(size)
        .collect();
    planner.plan_fft_forward(size).process(&mut buf);
    for z in buf.iter_mut() {
        *z = Complex64::new(z.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(size).process(&mut buf);
    let scale = 1.0 / (size as f64 * n as f64);
    Ok(buf[..=max_lag].iter().map(|z| z.re * scale).collect())
}

/// Raw periodogram on `grid`. Lattice grids go through an FFT of length
/// `2 * half` (folding the series when it is longer); other grids are
/// evaluated by direct summation.
pub fn raw_periodogram(series: &TimeSeries, grid: &FrequencyGrid) -> Result<Periodogram> {
    if grid.is_empty() {
        return Err(invalid("frequency grid is empty"));
    }
    let x = series.values();
    let n = x.len();
    let norm = 1.0 / (2.0 * PI * n as f64);
    let ordinates = match grid.lattice_half() {
        Some(half) => {
            let size = 2 * half;
            let mut buf = vec![Complex64::new(0.0, 0.0); size];
            for (j, &v) in x.iter().enumerate() {
                buf[j % size].re += v;
            }
            FftPlanner::<f64>::new()
                .plan_fft_forward(size)
                .process(&mut buf);
            let mut out = vec![0.0; 2 * half + 1];
            for k in 0..=half {
                let v = buf[k].norm_sqr() * norm;
                out[half + k] = v;
                out[half - k] = v;
            }
            out
        }
        None => grid.map_even(|w| {
            let (mut re, mut im) = (NeumaierSum::new(), NeumaierSum::new());
            for (j, &v) in x.iter().enumerate() {
                let phase = w * (j + 1) as f64;
                re.add(v * phase.cos());
                im.add(v * phase.sin());
            }
            (re.value().powi(2) + im.value().powi(2)) * norm
        }),
    };
    Ok(Periodogram {
        grid: grid.clone(),
        ordinates,
        kind: PeriodogramKind::Raw,
        n,
        window: None,
        clamped: 0,
    })
}

fn cosine_lag_sum(acov: &[f64], weight: impl Fn(usize) -> f64, w: f64) -> f64 {
    let mut acc = NeumaierSum::new();
    acc.add(acov[0]);
    for (h, c) in acov.iter().enumerate().skip(1) {
        acc.add(2.0 * weight(h) * c * (h as f64 * w).cos());
    }
    acc.value()
}

/// `I*(w) = sum_{|h|<n} C_n(h) e^{-ihw}`, evaluated as a lag sum of the
/// sample autocovariances (independently of the FFT route of
/// [`raw_periodogram`]).
pub fn extended_periodogram(series: &TimeSeries, grid: &FrequencyGrid) -> Result<Periodogram> {
    if grid.is_empty() {
        return Err(invalid("frequency grid is empty"));
    }
    let n = series.len();
    let acov = autocovariance(series, n - 1)?;
    let ordinates = grid.map_even(|w| cosine_lag_sum(&acov, |_| 1.0, w));
    Ok(Periodogram {
        grid: grid.clone(),
        ordinates,
        kind: PeriodogramKind::Extended,
        n,
        window: None,
        clamped: 0,
    })
}

/// Lag-window estimate `(1/2pi) sum_{|h|<=m} phi(h/m) C_n(h) e^{-ihw}`
/// before any clamping.
pub fn lag_window_estimate(
    series: &TimeSeries,
    window: &LagWindow,
    grid: &FrequencyGrid,
) -> Result<Vec<f64>> {
    let n = series.len();
    if window.m() >= n {
        return Err(invalid(format!(
            "bandwidth m = {} must be < n = {n}",
            window.m()
        )));
    }
    let acov = autocovariance(series, window.m())?;
    Ok(grid.map_even(|w| cosine_lag_sum(&acov, |h| window.weight(h), w) / (2.0 * PI)))
}

/// Smoothed spectral density on `grid`; negative ordinates (possible for
/// windows other than Bartlett) are set to 0 and counted.
pub fn smoothed_density(
    series: &TimeSeries,
    window: &LagWindow,
    grid: &FrequencyGrid,
) -> Result<Periodogram> {
    if grid.is_empty() {
        return Err(invalid("frequency grid is empty"));
    }
    let mut ordinates = lag_window_estimate(series, window, grid)?;
    let mut clamped = 0;
    for v in ordinates.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
            clamped += 1;
        }
    }
    if clamped > 0 && window.kind() != WindowKind::Bartlett {
        log::warn!(
            "{} window (m = {}) produced {clamped} negative ordinates; clamped to 0",
            window.kind().name(),
            window.m()
        );
    }
    Ok(Periodogram {
        grid: grid.clone(),
        ordinates,
        kind: PeriodogramKind::Smoothed,
        n: series.len(),
        window: Some(window.meta()),
        clamped,
    })
}
