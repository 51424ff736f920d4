//! Engine configuration: a plain `key = value` file with command-line
//! overrides layered on top.
//!
//! Blank lines and lines starting with `#` are ignored. Unknown keys are an
//! error so typos do not silently fall back to defaults.

use std::fmt::Write as _;
use std::path::Path;

use gesture_core::matcher::{Init, DEFAULT_FREQ_WEIGHT};
use gesture_core::metrics::BEAT_SIGMA;
use gesture_core::motion::UPPER_BODY_JOINTS;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EngineConfig {
    pub fps: f64,
    pub d: usize,
    pub codebook_size: usize,
    pub phase_channels: usize,
    pub n_phase: usize,
    pub n_stride: usize,
    /// Speech window length around each code step, seconds.
    pub window_seconds: f64,
    /// Frames in the sliding phase-extraction window (odd).
    pub phase_window: usize,
    pub k: usize,
    pub freq_weight: f64,
    pub seed: u64,
    pub init: Init,
    pub joints: Vec<String>,
    pub hist_bin_width: f64,
    pub hist_max: f64,
    pub beat_sigma: f64,
    pub diversity_pairs: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            fps: 60.0,
            d: 8,
            codebook_size: 512,
            phase_channels: 8,
            n_phase: 8,
            n_stride: 3,
            window_seconds: 0.5,
            phase_window: 31,
            k: 1,
            freq_weight: DEFAULT_FREQ_WEIGHT,
            seed: 0,
            init: Init::Frequent,
            joints: UPPER_BODY_JOINTS.iter().map(|s| s.to_string()).collect(),
            hist_bin_width: 0.5,
            hist_max: 50.0,
            beat_sigma: BEAT_SIGMA,
            diversity_pairs: 500,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Usage(format!("config key {key}: cannot parse {value:?}")))
}

impl EngineConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let v = value.trim();
        match key.trim() {
            "fps" => self.fps = parse_num(key, v)?,
            "d" => self.d = parse_num(key, v)?,
            "codebook_size" => self.codebook_size = parse_num(key, v)?,
            "phase_channels" => self.phase_channels = parse_num(key, v)?,
            "n_phase" => self.n_phase = parse_num(key, v)?,
            "n_stride" => self.n_stride = parse_num(key, v)?,
            "window_seconds" => self.window_seconds = parse_num(key, v)?,
            "phase_window" => self.phase_window = parse_num(key, v)?,
            "k" => self.k = parse_num(key, v)?,
            "freq_weight" => self.freq_weight = parse_num(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "init" => self.init = v.parse().map_err(|e: gesture_core::Error| CliError::Usage(e.to_string()))?,
            "joints" => {
                self.joints = v
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect()
            }
            "hist_bin_width" => self.hist_bin_width = parse_num(key, v)?,
            "hist_max" => self.hist_max = parse_num(key, v)?,
            "beat_sigma" => self.beat_sigma = parse_num(key, v)?,
            "diversity_pairs" => self.diversity_pairs = parse_num(key, v)?,
            other => return Err(CliError::Usage(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = EngineConfig::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", i + 1)))?;
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    /// Defaults, then the file at `path` if given, then `overrides`
    /// (`key=value` each).
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", p.display())))?;
                EngineConfig::parse(&text)?
            }
            None => EngineConfig::default(),
        };
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("override {o:?} is not key=value")))?;
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Usage(m.to_string()));
        if !(self.fps > 0.0) {
            return bad("fps must be positive");
        }
        if self.d == 0 || self.codebook_size == 0 || self.phase_channels == 0 || self.k == 0 {
            return bad("d, codebook_size, phase_channels and k must be positive");
        }
        if self.n_stride == 0 || self.n_stride >= self.n_phase {
            return bad("need 0 < n_stride < n_phase");
        }
        if !(self.window_seconds > 0.0) {
            return bad("window_seconds must be positive");
        }
        if self.phase_window < 3 || self.phase_window % 2 == 0 {
            return bad("phase_window must be odd and at least 3");
        }
        if !(self.freq_weight >= 0.0) {
            return bad("freq_weight must be non-negative");
        }
        if self.joints.is_empty() {
            return bad("joint list is empty");
        }
        if !(self.hist_bin_width > 0.0) || !(self.hist_max > self.hist_bin_width) {
            return bad("need 0 < hist_bin_width < hist_max");
        }
        if !(self.beat_sigma > 0.0) || self.diversity_pairs == 0 {
            return bad("beat_sigma and diversity_pairs must be positive");
        }
        Ok(())
    }

    /// Canonical `key = value` rendering; parses back to the same config.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let init = match self.init {
            Init::Random => "random",
            Init::Frequent => "frequent",
        };
        let _ = writeln!(s, "fps = {}", self.fps);
        let _ = writeln!(s, "d = {}", self.d);
        let _ = writeln!(s, "codebook_size = {}", self.codebook_size);
        let _ = writeln!(s, "phase_channels = {}", self.phase_channels);
        let _ = writeln!(s, "n_phase = {}", self.n_phase);
        let _ = writeln!(s, "n_stride = {}", self.n_stride);
        let _ = writeln!(s, "window_seconds = {}", self.window_seconds);
        let _ = writeln!(s, "phase_window = {}", self.phase_window);
        let _ = writeln!(s, "k = {}", self.k);
        let _ = writeln!(s, "freq_weight = {}", self.freq_weight);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "init = {init}");
        let _ = writeln!(s, "joints = {}", self.joints.join(","));
        let _ = writeln!(s, "hist_bin_width = {}", self.hist_bin_width);
        let _ = writeln!(s, "hist_max = {}", self.hist_max);
        let _ = writeln!(s, "beat_sigma = {}", self.beat_sigma);
        let _ = writeln!(s, "diversity_pairs = {}", self.diversity_pairs);
        s
    }

    /// Hex SHA-256 of [`EngineConfig::render`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.render().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
