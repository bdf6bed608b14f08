//! Flat `key = value` experiment configuration with `#` comments, a fixed key
//! list (unknown keys are hard errors), and `FDX_<KEY>` environment overrides.

use crate::error::{Error, Result};
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentConfig {
    /// exponent q > 2
    pub q: f64,
    /// domain length L
    pub length: f64,
    /// interior node count
    pub n: usize,
    /// rescaled time step
    pub ds: f64,
    /// rescaled horizon; 0 picks one from the spectral gap
    pub s_horizon: f64,
    /// perturbation size along e_2
    pub epsilon: f64,
    /// size of the E_2-orthogonal component for the well-prepared search
    pub delta: f64,
    /// bump count for profile experiments
    pub bumps: usize,
    pub seed: u64,
    /// steps between trajectory records
    pub record_stride: usize,
    /// records between spectral samples (0 disables)
    pub spectrum_stride: usize,
    /// number of leading dynamic eigenvalues per spectral record
    pub mu_head: usize,
    /// relative tolerance of the extinction bisection
    pub extinction_tol: f64,
    /// window policy: fits start once dist < onset_frac * initial dist
    pub onset_frac: f64,
    /// window policy: fits end when the diagnostic hits floor_mult * noise floor
    pub floor_mult: f64,
    /// epsilon for the regularized dual-norm cross-check
    pub eps_reg: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            q: 3.0,
            length: std::f64::consts::PI,
            n: 400,
            ds: 5e-3,
            s_horizon: 0.0,
            epsilon: 1e-3,
            delta: 1e-3,
            bumps: 1,
            seed: 42,
            record_stride: 10,
            spectrum_stride: 5,
            mu_head: 3,
            extinction_tol: 1e-4,
            onset_frac: 0.3,
            floor_mult: 1e3,
            eps_reg: 1e-7,
        }
    }
}

const KEYS: &[&str] = &[
    "q",
    "length",
    "n",
    "ds",
    "s_horizon",
    "epsilon",
    "delta",
    "bumps",
    "seed",
    "record_stride",
    "spectrum_stride",
    "mu_head",
    "extinction_tol",
    "onset_frac",
    "floor_mult",
    "eps_reg",
];

/// Parses the flat text format into key/value pairs, with line diagnostics.
fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {}: expected `key = value`, got `{raw}`", lineno + 1))
        })?;
        let key = key.trim().to_string();
        if !KEYS.contains(&key.as_str()) {
            return Err(Error::Config(format!(
                "line {}: unknown key `{key}` (known keys: {})",
                lineno + 1,
                KEYS.join(", ")
            )));
        }
        out.insert(key, value.trim().to_string());
    }
    Ok(out)
}

impl ExperimentConfig {
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_pairs(parse_pairs(text)?)?;
        Ok(cfg)
    }

    /// Sets one key on top of the current values, with validation.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !KEYS.contains(&key) {
            return Err(Error::Config(format!(
                "unknown key `{key}` (known keys: {})",
                KEYS.join(", ")
            )));
        }
        let mut pairs = BTreeMap::new();
        pairs.insert(key.to_string(), value.to_string());
        self.apply_pairs(pairs)
    }

    /// Applies `FDX_<KEY>` environment variables on top of the current values.
    pub fn apply_env(&mut self) -> Result<()> {
        let mut pairs = BTreeMap::new();
        for key in KEYS {
            let var = format!("FDX_{}", key.to_uppercase());
            if let Ok(v) = std::env::var(&var) {
                pairs.insert(key.to_string(), v);
            }
        }
        self.apply_pairs(pairs)
    }

    fn apply_pairs(&mut self, pairs: BTreeMap<String, String>) -> Result<()> {
        fn f64_of(key: &str, v: &str) -> Result<f64> {
            v.parse()
                .map_err(|_| Error::Config(format!("key `{key}`: `{v}` is not a number")))
        }
        fn usize_of(key: &str, v: &str) -> Result<usize> {
            v.parse()
                .map_err(|_| Error::Config(format!("key `{key}`: `{v}` is not a nonnegative integer")))
        }
        for (key, v) in &pairs {
            match key.as_str() {
                "q" => self.q = f64_of(key, v)?,
                "length" => self.length = f64_of(key, v)?,
                "n" => self.n = usize_of(key, v)?,
                "ds" => self.ds = f64_of(key, v)?,
                "s_horizon" => self.s_horizon = f64_of(key, v)?,
                "epsilon" => self.epsilon = f64_of(key, v)?,
                "delta" => self.delta = f64_of(key, v)?,
                "bumps" => self.bumps = usize_of(key, v)?,
                "seed" => {
                    self.seed = v.parse().map_err(|_| {
                        Error::Config(format!("key `seed`: `{v}` is not an integer"))
                    })?
                }
                "record_stride" => self.record_stride = usize_of(key, v)?.max(1),
                "spectrum_stride" => self.spectrum_stride = usize_of(key, v)?,
                "mu_head" => self.mu_head = usize_of(key, v)?,
                "extinction_tol" => self.extinction_tol = f64_of(key, v)?,
                "onset_frac" => self.onset_frac = f64_of(key, v)?,
                "floor_mult" => self.floor_mult = f64_of(key, v)?,
                "eps_reg" => self.eps_reg = f64_of(key, v)?,
                _ => unreachable!("key list checked in parse_pairs"),
            }
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q > 2.0) {
            return Err(Error::Config(format!("q must exceed 2, got {}", self.q)));
        }
        if !(self.length > 0.0) {
            return Err(Error::Config("length must be positive".into()));
        }
        if self.n < 3 {
            return Err(Error::Config("n must be at least 3".into()));
        }
        if !(self.ds > 0.0) {
            return Err(Error::Config("ds must be positive".into()));
        }
        if self.s_horizon < 0.0 {
            return Err(Error::Config("s_horizon must be nonnegative".into()));
        }
        if self.epsilon < 0.0 {
            return Err(Error::Config("epsilon must be nonnegative".into()));
        }
        if self.bumps == 0 || self.bumps > crate::profiles::MAX_BUMPS {
            return Err(Error::Config(format!(
                "bumps must lie in 1..={}",
                crate::profiles::MAX_BUMPS
            )));
        }
        if !(self.extinction_tol > 0.0 && self.extinction_tol < 1.0) {
            return Err(Error::Config("extinction_tol must lie in (0,1)".into()));
        }
        Ok(())
    }
}
