//! Run configuration: flat `key = value` config files, overlay of
//! command-line flags, and validation into a fully resolved run.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use fluvial::simulation::SimParams;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Algorithm {
    Ours,
    Baseline,
}

impl FromStr for Algorithm {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "ours" => Ok(Algorithm::Ours),
            "baseline" => Ok(Algorithm::Baseline),
            other => err(format!("algorithm must be ours|baseline, got {other}")),
        }
    }
}

/// Value strength: a uniform scalar or the `remap` mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ValueStrengthArg {
    Uniform(f64),
    Remap,
}

impl FromStr for ValueStrengthArg {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, ConfigError> {
        if s == "remap" {
            return Ok(ValueStrengthArg::Remap);
        }
        match s.parse::<f64>() {
            Ok(v) => Ok(ValueStrengthArg::Uniform(v)),
            Err(_) => err(format!("value_strength must be a number or \"remap\", got {s}")),
        }
    }
}

/// `MIN,MAX` pair for map world ranges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangePair {
    pub lo: f64,
    pub hi: f64,
}

impl FromStr for RangePair {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, ConfigError> {
        let parts: Vec<&str> = s.split(',').collect();
        if parts.len() != 2 {
            return err(format!("range must be MIN,MAX, got {s}"));
        }
        let lo: f64 = parts[0]
            .trim()
            .parse()
            .map_err(|_| ConfigError(format!("bad range minimum {s}")))?;
        let hi: f64 = parts[1]
            .trim()
            .parse()
            .map_err(|_| ConfigError(format!("bad range maximum {s}")))?;
        if lo >= hi {
            return err(format!("range minimum must be below maximum, got {s}"));
        }
        Ok(RangePair { lo, hi })
    }
}

/// Partial run configuration; every field optional so config files and
/// flags can be overlaid. Later sources win.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    pub algorithm: Option<Algorithm>,
    pub constraint: Option<PathBuf>,
    pub constraint_range: Option<RangePair>,
    pub moisture: Option<PathBuf>,
    pub moisture_uniform: Option<f64>,
    pub gradient_strength: Option<PathBuf>,
    pub gradient_strength_uniform: Option<f64>,
    pub value_strength: Option<ValueStrengthArg>,
    pub iterations: Option<usize>,
    pub seed: Option<u64>,
    pub sea_level: Option<f64>,
    pub k_d: Option<f64>,
    pub k_e: Option<f64>,
    pub n_exp: Option<f64>,
    pub m_exp: Option<f64>,
    pub k_g: Option<f64>,
    pub noise_amplitude: Option<f64>,
    pub out: Option<PathBuf>,
    pub water_out: Option<PathBuf>,
    pub snapshot_every: Option<usize>,
    pub uplift_scale: Option<f64>,
    pub baseline_k: Option<f64>,
}

impl RunConfig {
    /// Parses `key = value` lines. Blank lines and `#` comments are
    /// skipped; unknown keys are rejected with their line number.
    pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        let mut cfg = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return err(format!("line {}: expected key = value", lineno + 1));
            };
            let key = key.trim();
            let value = value.trim();
            if value.is_empty() {
                return err(format!("line {}: empty value for {key}", lineno + 1));
            }
            cfg.set(key, value)
                .map_err(|e| ConfigError(format!("line {}: {}", lineno + 1, e.0)))?;
        }
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
            value
                .parse()
                .map_err(|_| ConfigError(format!("bad value for {key}: {value}")))
        }
        match key {
            "algorithm" => self.algorithm = Some(value.parse()?),
            "constraint" => self.constraint = Some(PathBuf::from(value)),
            "constraint_range" => self.constraint_range = Some(value.parse()?),
            "moisture" => self.moisture = Some(PathBuf::from(value)),
            "moisture_uniform" => self.moisture_uniform = Some(num(key, value)?),
            "gradient_strength" => self.gradient_strength = Some(PathBuf::from(value)),
            "gradient_strength_uniform" => {
                self.gradient_strength_uniform = Some(num(key, value)?)
            }
            "value_strength" => self.value_strength = Some(value.parse()?),
            "iterations" => self.iterations = Some(num(key, value)?),
            "seed" => self.seed = Some(num(key, value)?),
            "sea_level" => self.sea_level = Some(num(key, value)?),
            "k_d" => self.k_d = Some(num(key, value)?),
            "k_e" => self.k_e = Some(num(key, value)?),
            "n_exp" => self.n_exp = Some(num(key, value)?),
            "m_exp" => self.m_exp = Some(num(key, value)?),
            "k_g" => self.k_g = Some(num(key, value)?),
            "noise_amplitude" => self.noise_amplitude = Some(num(key, value)?),
            "out" => self.out = Some(PathBuf::from(value)),
            "water_out" => self.water_out = Some(PathBuf::from(value)),
            "snapshot_every" => self.snapshot_every = Some(num(key, value)?),
            "uplift_scale" => self.uplift_scale = Some(num(key, value)?),
            "baseline_k" => self.baseline_k = Some(num(key, value)?),
            other => return err(format!("unknown key: {other}")),
        }
        Ok(())
    }

    /// Overlays `over` on top of `self`; set fields in `over` win.
    pub fn overlay(mut self, over: RunConfig) -> RunConfig {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if over.$field.is_some() { self.$field = over.$field; })*
            };
        }
        take!(
            algorithm, constraint, constraint_range, moisture, moisture_uniform,
            gradient_strength, gradient_strength_uniform, value_strength, iterations,
            seed, sea_level, k_d, k_e, n_exp, m_exp, k_g, noise_amplitude, out,
            water_out, snapshot_every, uplift_scale, baseline_k
        );
        self
    }

    /// Validates the merged configuration and fills in defaults.
    pub fn resolve(self) -> Result<ResolvedRun, ConfigError> {
        let Some(constraint) = self.constraint else {
            return err("missing constraint map (set constraint = PATH or --constraint)");
        };
        let Some(out) = self.out else {
            return err("missing output path (set out = PATH or --out)");
        };
        if self.moisture.is_some() && self.moisture_uniform.is_some() {
            return err("moisture and moisture_uniform are mutually exclusive");
        }
        if self.gradient_strength.is_some() && self.gradient_strength_uniform.is_some() {
            return err("gradient_strength and gradient_strength_uniform are mutually exclusive");
        }

        let defaults = SimParams::default();
        let params = SimParams {
            k_d: self.k_d.unwrap_or(defaults.k_d),
            k_e: self.k_e.unwrap_or(defaults.k_e),
            n_exp: self.n_exp.unwrap_or(defaults.n_exp),
            m_exp: self.m_exp.unwrap_or(defaults.m_exp),
            k_g: self.k_g.unwrap_or(defaults.k_g),
            sea_level: self.sea_level.unwrap_or(defaults.sea_level),
            constraint_noise_amplitude: self.noise_amplitude,
            iterations: self.iterations.unwrap_or(100),
            seed: self.seed.unwrap_or(0),
        };
        if !(0.0..=1.0).contains(&params.k_d) {
            return err(format!("k_d must be in [0,1], got {}", params.k_d));
        }
        for (name, v) in [("k_e", params.k_e), ("k_g", params.k_g)] {
            if v <= 0.0 {
                return err(format!("{name} must be positive, got {v}"));
            }
        }

        let moisture = match (self.moisture, self.moisture_uniform) {
            (Some(path), None) => MapOrUniform::Map(path),
            (None, Some(v)) => MapOrUniform::Uniform(v),
            (None, None) => MapOrUniform::Uniform(1.0),
            _ => unreachable!(),
        };
        let gradient_strength = match (self.gradient_strength, self.gradient_strength_uniform) {
            (Some(path), None) => MapOrUniform::Map(path),
            (None, Some(v)) => MapOrUniform::Uniform(v),
            (None, None) => MapOrUniform::Uniform(0.8),
            _ => unreachable!(),
        };

        Ok(ResolvedRun {
            algorithm: self.algorithm.unwrap_or(Algorithm::Ours),
            constraint,
            constraint_range: self.constraint_range,
            moisture,
            gradient_strength,
            value_strength: self.value_strength.unwrap_or(ValueStrengthArg::Uniform(0.02)),
            params,
            out,
            water_out: self.water_out,
            snapshot_every: self.snapshot_every.filter(|&k| k > 0),
            uplift_scale: self.uplift_scale.unwrap_or(0.02),
            baseline_k: self.baseline_k.unwrap_or(0.5),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MapOrUniform {
    Map(PathBuf),
    Uniform(f64),
}

/// Fully validated run description.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedRun {
    pub algorithm: Algorithm,
    pub constraint: PathBuf,
    pub constraint_range: Option<RangePair>,
    pub moisture: MapOrUniform,
    pub gradient_strength: MapOrUniform,
    pub value_strength: ValueStrengthArg,
    pub params: SimParams,
    pub out: PathBuf,
    pub water_out: Option<PathBuf>,
    pub snapshot_every: Option<usize>,
    pub uplift_scale: f64,
    pub baseline_k: f64,
}

impl ResolvedRun {
    /// Input paths that must exist and output directories that must be
    /// writable, checked before any work starts.
    pub fn input_paths(&self) -> Vec<&Path> {
        let mut paths = vec![self.constraint.as_path()];
        if let MapOrUniform::Map(p) = &self.moisture {
            paths.push(p);
        }
        if let MapOrUniform::Map(p) = &self.gradient_strength {
            paths.push(p);
        }
        paths
    }

    pub fn output_paths(&self) -> Vec<&Path> {
        let mut paths = vec![self.out.as_path()];
        if let Some(p) = &self.water_out {
            paths.push(p);
        }
        paths
    }
}
