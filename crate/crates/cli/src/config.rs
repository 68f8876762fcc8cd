//! Experiment configuration: a TOML file, then command-line overrides.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use pilotgmi_core::decoder::DEFAULT_CODEBOOK_BYTES;
use pilotgmi_core::SpectralDensity;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    Rectangular,
    RaisedCosine,
    Tabulated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsdConfig {
    pub shape: ShapeKind,
    /// `lambda_D`; ignored for tabulated spectra, whose support sets it.
    pub bandwidth: f64,
    pub rolloff: f64,
    /// Two-column `lambda,value` CSV for tabulated spectra.
    pub path: Option<PathBuf>,
    pub quadrature_points: Option<usize>,
}

impl Default for PsdConfig {
    fn default() -> Self {
        Self { shape: ShapeKind::Rectangular, bandwidth: 0.1, rolloff: 0.5, path: None, quadrature_points: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GmiSection {
    /// Data periods per simulated frame.
    pub data_periods: usize,
    /// Matrices per SNR for the infinite-window bound.
    pub asymptotic_samples: u64,
    /// Also sweep theta around the fixed choice.
    pub sweep: bool,
}

impl Default for GmiSection {
    fn default() -> Self {
        Self { data_periods: 250, asymptotic_samples: 100_000, sweep: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    /// Codebook size. When absent, `rate` sets it.
    pub messages: Option<usize>,
    /// Rate in nats per channel use; `M = ceil(exp(N R))`, capped.
    pub rate: Option<f64>,
    pub codebook_bytes: usize,
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self { messages: None, rate: None, codebook_bytes: DEFAULT_CODEBOOK_BYTES }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_t: usize,
    pub n_r: usize,
    /// Pilot spacing `L`.
    pub period: usize,
    /// Estimator window `T` in pilot periods.
    pub window: usize,
    /// Windows tabulated by `variance`.
    pub windows: Vec<usize>,
    /// Data symbols per frame `N` for `variance` and `simulate`.
    pub data_len: usize,
    pub snr_db: Vec<f64>,
    /// Monte Carlo frames (trials) per SNR.
    pub frames: u64,
    pub seed: u64,
    /// Report rates in bits instead of nats.
    pub bits: bool,
    pub threads: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub psd: PsdConfig,
    pub gmi: GmiSection,
    pub simulate: SimulateSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_t: 1,
            n_r: 1,
            period: 5,
            window: 20,
            windows: vec![1, 2, 5, 10, 20],
            data_len: 4,
            snr_db: vec![30.0, 40.0, 50.0, 60.0],
            frames: 100,
            seed: 0,
            bits: false,
            threads: None,
            out_dir: None,
            psd: PsdConfig::default(),
            gmi: GmiSection::default(),
            simulate: SimulateSection::default(),
        }
    }
}

/// Flags that override the configuration file.
#[derive(Clone, Debug, Default, Args)]
pub struct Overrides {
    #[arg(long)]
    pub n_t: Option<usize>,
    #[arg(long)]
    pub n_r: Option<usize>,
    /// Pilot spacing L.
    #[arg(long, short = 'L')]
    pub period: Option<usize>,
    /// Estimator window T in pilot periods.
    #[arg(long, short = 'T')]
    pub window: Option<usize>,
    /// Comma-separated windows for `variance`.
    #[arg(long, value_delimiter = ',')]
    pub windows: Option<Vec<usize>>,
    /// Data symbols per frame N.
    #[arg(long, short = 'N')]
    pub data_len: Option<usize>,
    /// Comma-separated SNR grid in dB.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub snr_db: Option<Vec<f64>>,
    #[arg(long)]
    pub frames: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub bits: bool,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Directory for CSV and JSON outputs; without it the main table goes to stdout.
    #[arg(long, short = 'o')]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub shape: Option<ShapeKind>,
    /// Doppler bandwidth lambda_D.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    #[arg(long)]
    pub rolloff: Option<f64>,
    /// Tabulated spectrum CSV.
    #[arg(long)]
    pub psd_file: Option<PathBuf>,
    #[arg(long)]
    pub quadrature_points: Option<usize>,
    #[arg(long)]
    pub data_periods: Option<usize>,
    #[arg(long)]
    pub asymptotic_samples: Option<u64>,
    #[arg(long)]
    pub sweep: bool,
    #[arg(long)]
    pub messages: Option<usize>,
    #[arg(long)]
    pub rate: Option<f64>,
}

macro_rules! set {
    ($dst:expr, $src:expr) => {
        if let Some(v) = $src.clone() {
            $dst = v;
        }
    };
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Reads `path` (or starts from defaults), applies `overrides` and validates.
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self, CliError> {
        let mut cfg = match path {
            Some(p) => Self::from_file(p)?,
            None => Self::default(),
        };
        cfg.apply(overrides);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        set!(self.n_t, o.n_t);
        set!(self.n_r, o.n_r);
        set!(self.period, o.period);
        set!(self.window, o.window);
        set!(self.windows, o.windows);
        set!(self.data_len, o.data_len);
        set!(self.snr_db, o.snr_db);
        set!(self.frames, o.frames);
        set!(self.seed, o.seed);
        set!(self.psd.shape, o.shape);
        set!(self.psd.bandwidth, o.bandwidth);
        set!(self.psd.rolloff, o.rolloff);
        set!(self.gmi.data_periods, o.data_periods);
        set!(self.gmi.asymptotic_samples, o.asymptotic_samples);
        self.bits |= o.bits;
        self.gmi.sweep |= o.sweep;
        if o.threads.is_some() {
            self.threads = o.threads;
        }
        if o.out.is_some() {
            self.out_dir = o.out.clone();
        }
        if o.psd_file.is_some() {
            self.psd.path = o.psd_file.clone();
        }
        if o.quadrature_points.is_some() {
            self.psd.quadrature_points = o.quadrature_points;
        }
        if o.messages.is_some() {
            self.simulate.messages = o.messages;
        }
        if o.rate.is_some() {
            self.simulate.rate = o.rate;
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.n_t == 0 || self.n_r == 0 {
            return bad("n_t and n_r must be at least 1".into());
        }
        if self.period <= self.n_t {
            return bad(format!("pilot spacing L = {} must exceed n_t = {} to leave room for data", self.period, self.n_t));
        }
        if self.window == 0 || self.windows.contains(&0) {
            return bad("estimator windows T must be at least 1".into());
        }
        if self.windows.is_empty() {
            return bad("`windows` must list at least one T".into());
        }
        if self.data_len == 0 {
            return bad("data_len N must be at least 1".into());
        }
        if self.snr_db.is_empty() || self.snr_db.iter().any(|s| !s.is_finite()) {
            return bad("snr_db must be a non-empty list of finite values".into());
        }
        if self.frames == 0 {
            return bad("frames must be at least 1".into());
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        if self.gmi.data_periods == 0 {
            return bad("gmi.data_periods must be at least 1".into());
        }
        if self.psd.shape != ShapeKind::Tabulated && !(self.psd.bandwidth > 0.0 && self.psd.bandwidth < 0.5) {
            return bad(format!("bandwidth lambda_D = {} must lie in (0, 1/2)", self.psd.bandwidth));
        }
        if self.psd.shape == ShapeKind::RaisedCosine && !(0.0..=1.0).contains(&self.psd.rolloff) {
            return bad(format!("rolloff {} must lie in [0, 1]", self.psd.rolloff));
        }
        if self.psd.shape == ShapeKind::Tabulated && self.psd.path.is_none() {
            return bad("tabulated spectra need `psd.path` (or --psd-file)".into());
        }
        if self.psd.quadrature_points.is_some_and(|q| q < 16) {
            return bad("quadrature_points must be at least 16".into());
        }
        if let Some(r) = self.simulate.rate {
            if !(r >= 0.0 && r.is_finite()) {
                return bad(format!("rate {r} must be a finite non-negative number of nats"));
            }
        }
        if self.simulate.messages == Some(0) {
            return bad("messages must be at least 1".into());
        }
        Ok(())
    }

    /// Builds the spectrum; tabulated files are read here.
    pub fn spectrum(&self) -> Result<SpectralDensity, CliError> {
        let psd = match self.psd.shape {
            ShapeKind::Rectangular => SpectralDensity::rectangular(self.psd.bandwidth),
            ShapeKind::RaisedCosine => SpectralDensity::raised_cosine(self.psd.bandwidth, self.psd.rolloff),
            ShapeKind::Tabulated => {
                let path = self.psd.path.as_ref().ok_or_else(|| CliError::Config("missing psd.path".into()))?;
                SpectralDensity::from_csv_path(path)
            }
        }
        .map_err(|e| CliError::Config(format!("spectrum: {e}")))?;
        Ok(match self.psd.quadrature_points {
            Some(q) => psd.with_quadrature_points(q),
            None => psd,
        })
    }

    /// Non-fatal remarks, such as pilot spacing beyond the alias-free limit.
    pub fn warnings(&self, psd: &SpectralDensity) -> Vec<String> {
        let l_star = psd.nyquist_spacing();
        let mut out = Vec::new();
        if self.period > l_star {
            out.push(format!(
                "L = {} exceeds floor(1/(2 lambda_D)) = {l_star}: the fading is undersampled, offsets alias and \
                 the infinite-window GMI bound is skipped",
                self.period
            ));
        }
        if self.n_t != self.n_r {
            out.push(format!("GMI bounds use min(n_t, n_r) = {} antennas on each side", self.n_t.min(self.n_r)));
        }
        out
    }

    pub fn snr_linear(&self) -> Vec<f64> {
        self.snr_db.iter().map(|db| 10f64.powf(db / 10.0)).collect()
    }
}
