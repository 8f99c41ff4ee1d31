//! Plain-text `key=value` run configuration.
//!
//! Lines starting with `#` and blank lines are ignored. Unknown keys are
//! rejected and every numeric value is range-checked at parse time.
//! Environment variables with the `CFK_` prefix (key uppercased) override
//! file values, e.g. `CFK_TAU=0.5`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use cfkit::pcl::PclVariant;

pub const ENV_PREFIX: &str = "CFK_";

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Everything a pipeline run needs; one seed feeds all randomness.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub out_dir: PathBuf,
    pub data_dir: PathBuf,
    pub height: usize,
    pub width: usize,
    pub n_fonts: usize,
    pub n_chars: usize,
    pub holdout_fonts: usize,
    pub projections: usize,
    pub content_dim: usize,
    pub style_dim: usize,
    pub basis_count: usize,
    pub tau: f64,
    pub variant: PclVariant,
    pub lambda_pcl: f64,
    pub kl_epsilon: f64,
    pub seed: u64,
    pub stage1_iters: usize,
    pub stage2_iters: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub isr_epochs: usize,
    pub isr_step: f64,
}

const KNOWN_KEYS: &[&str] = &[
    "out_dir",
    "data_dir",
    "height",
    "width",
    "n_fonts",
    "n_chars",
    "holdout_fonts",
    "projections",
    "content_dim",
    "style_dim",
    "basis_count",
    "tau",
    "variant",
    "lambda_pcl",
    "kl_epsilon",
    "seed",
    "stage1_iters",
    "stage2_iters",
    "batch_size",
    "learning_rate",
    "isr_epochs",
    "isr_step",
];

impl RunConfig {
    /// Parses a config file, applies `CFK_*` environment overrides, and
    /// validates every value.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        let mut map = parse_pairs(&text)?;
        apply_env_overrides(&mut map)?;
        Self::from_map(map)
    }

    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let mut map = parse_pairs(text)?;
        apply_env_overrides(&mut map)?;
        Self::from_map(map)
    }

    fn from_map(map: BTreeMap<String, String>) -> Result<Self, ConfigError> {
        for key in map.keys() {
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(ConfigError(format!("unknown key {key:?}")));
            }
        }
        let get = |key: &str| map.get(key).map(String::as_str);
        let out_dir = PathBuf::from(
            get("out_dir").ok_or_else(|| ConfigError("missing required key out_dir".into()))?,
        );
        let data_dir = get("data_dir")
            .map(PathBuf::from)
            .unwrap_or_else(|| out_dir.clone());

        let height = parse_range(get("height"), "height", 80, 11, 512)?;
        let width = parse_range(get("width"), "width", 80, 11, 512)?;
        let n_fonts = parse_range(get("n_fonts"), "n_fonts", 40, 4, 500)?;
        let n_chars = parse_range(get("n_chars"), "n_chars", 26, 20, 26)?;
        let holdout_fonts = parse_range(get("holdout_fonts"), "holdout_fonts", 12, 1, 498)?;
        let projections = parse_range(get("projections"), "projections", 12, 1, 360)?;
        let content_dim = parse_range(get("content_dim"), "content_dim", 64, 1, 4096)?;
        let style_dim = parse_range(get("style_dim"), "style_dim", 16, 1, 1024)?;
        let basis_count = parse_range(get("basis_count"), "basis_count", 10, 1, 500)?;
        let stage1_iters = parse_range(get("stage1_iters"), "stage1_iters", 3000, 1, 1_000_000)?;
        let stage2_iters = parse_range(get("stage2_iters"), "stage2_iters", 1000, 1, 1_000_000)?;
        let batch_size = parse_range(get("batch_size"), "batch_size", 8, 1, 1024)?;
        let isr_epochs = parse_range(get("isr_epochs"), "isr_epochs", 10, 0, 10_000)?;
        let seed = match get("seed") {
            None => 0,
            Some(s) => s
                .parse::<u64>()
                .map_err(|_| ConfigError(format!("seed: not an unsigned integer: {s:?}")))?,
        };
        let variant = match get("variant") {
            None => PclVariant::Wdl,
            Some(s) => PclVariant::parse(s)
                .map_err(|_| ConfigError(format!("variant: expected wdl or kl, got {s:?}")))?,
        };
        let tau = parse_float(get("tau"), "tau", cfkit::fusion::DEFAULT_TAU, 0.0, false, 1e6)?;
        let lambda_pcl = parse_float(
            get("lambda_pcl"),
            "lambda_pcl",
            variant.default_lambda(),
            0.0,
            true,
            1e6,
        )?;
        let kl_epsilon = parse_float(
            get("kl_epsilon"),
            "kl_epsilon",
            cfkit::pcl::DEFAULT_KL_EPSILON,
            0.0,
            false,
            1.0,
        )?;
        let learning_rate = parse_float(
            get("learning_rate"),
            "learning_rate",
            cfkit::train::DEFAULT_LEARNING_RATE,
            0.0,
            false,
            1e3,
        )?;
        let isr_step = parse_float(get("isr_step"), "isr_step", cfkit::isr::DEFAULT_STEP, 0.0, true, 1e3)?;

        let cfg = RunConfig {
            out_dir,
            data_dir,
            height,
            width,
            n_fonts,
            n_chars,
            holdout_fonts,
            projections,
            content_dim,
            style_dim,
            basis_count,
            tau,
            variant,
            lambda_pcl,
            kl_epsilon,
            seed,
            stage1_iters,
            stage2_iters,
            batch_size,
            learning_rate,
            isr_epochs,
            isr_step,
        };
        cfg.validate_cross_fields()?;
        Ok(cfg)
    }

    fn validate_cross_fields(&self) -> Result<(), ConfigError> {
        let train_fonts = self
            .n_fonts
            .checked_sub(self.holdout_fonts)
            .unwrap_or_default();
        if train_fonts < 2 {
            return Err(ConfigError(format!(
                "n_fonts ({}) minus holdout_fonts ({}) must leave at least 2 training fonts",
                self.n_fonts, self.holdout_fonts
            )));
        }
        if self.basis_count > train_fonts {
            return Err(ConfigError(format!(
                "basis_count ({}) exceeds the {} training fonts",
                self.basis_count, train_fonts
            )));
        }
        if self.n_chars <= cfkit::dataset::REFERENCE_CHARS_PER_FONT {
            return Err(ConfigError(format!(
                "n_chars ({}) must exceed the {} reference characters so evaluation characters remain",
                self.n_chars,
                cfkit::dataset::REFERENCE_CHARS_PER_FONT
            )));
        }
        Ok(())
    }

    pub fn train_font_count(&self) -> usize {
        self.n_fonts - self.holdout_fonts
    }
}

fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("line {}: expected key=value, got {raw:?}", i + 1)))?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if map.insert(key.clone(), value).is_some() {
            return Err(ConfigError(format!("line {}: duplicate key {key:?}", i + 1)));
        }
    }
    Ok(map)
}

fn apply_env_overrides(map: &mut BTreeMap<String, String>) -> Result<(), ConfigError> {
    for key in KNOWN_KEYS {
        let var = format!("{ENV_PREFIX}{}", key.to_uppercase());
        if let Ok(value) = std::env::var(&var) {
            map.insert((*key).to_string(), value);
        }
    }
    Ok(())
}

fn parse_range(
    value: Option<&str>,
    key: &str,
    default: usize,
    lo: usize,
    hi: usize,
) -> Result<usize, ConfigError> {
    let v = match value {
        None => default,
        Some(s) => s
            .parse::<usize>()
            .map_err(|_| ConfigError(format!("{key}: not an unsigned integer: {s:?}")))?,
    };
    if v < lo || v > hi {
        return Err(ConfigError(format!("{key}: {v} outside [{lo}, {hi}]")));
    }
    Ok(v)
}

fn parse_float(
    value: Option<&str>,
    key: &str,
    default: f64,
    lo: f64,
    lo_inclusive: bool,
    hi: f64,
) -> Result<f64, ConfigError> {
    let v = match value {
        None => default,
        Some(s) => s
            .parse::<f64>()
            .map_err(|_| ConfigError(format!("{key}: not a number: {s:?}")))?,
    };
    let lo_ok = if lo_inclusive { v >= lo } else { v > lo };
    if !lo_ok || v > hi || !v.is_finite() {
        return Err(ConfigError(format!("{key}: {v} outside the accepted range")));
    }
    Ok(v)
}
