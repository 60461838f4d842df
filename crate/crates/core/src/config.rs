//! Key-value configuration files and seed resolution.
//!
//! Format: one `key = value` per line, `#` starts a comment, blank lines are
//! skipped. Unknown keys are rejected so typos fail loudly instead of
//! silently running defaults. Nested blocks use prefixes (`mlp_epochs`,
//! `eval_population`).

use crate::bench::PipelineConfig;
use crate::ga::EvalConfig;
use crate::mlp::MLPConfig;
use crate::mst::MSTConfig;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Environment variable consulted when neither a flag nor a config file
/// provides a seed.
pub const SEED_ENV: &str = "SYMSKEL_SEED";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Malformed { line: usize, text: String },
    #[error("duplicate key `{0}`")]
    Duplicate(String),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{key}`: cannot parse `{value}` as {kind}")]
    BadValue {
        key: String,
        value: String,
        kind: &'static str,
    },
    #[error("SYMSKEL_SEED: cannot parse `{0}` as an integer seed")]
    BadEnvSeed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A parsed key-value file. Key semantics are applied by the `*_config_from`
/// builders below.
#[derive(Debug, Clone, Default)]
pub struct FileConfig {
    map: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<FileConfig, ConfigError> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(ConfigError::Malformed {
                    line: i + 1,
                    text: raw.trim().to_string(),
                });
            };
            let key = k.trim().to_string();
            if map.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(ConfigError::Duplicate(key));
            }
        }
        Ok(FileConfig { map })
    }

    pub fn load(path: &Path) -> Result<FileConfig, ConfigError> {
        FileConfig::parse(&std::fs::read_to_string(path)?)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    /// Typed read of an optional key.
    pub fn get_u64(&self, key: &str) -> Result<Option<u64>, ConfigError> {
        self.get(key)
            .map(|v| parse_as::<u64>(key, v, "u64"))
            .transpose()
    }
}

fn parse_as<T: std::str::FromStr>(
    key: &str,
    value: &str,
    kind: &'static str,
) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        kind,
    })
}

fn parse_usize_list(key: &str, value: &str) -> Result<Vec<usize>, ConfigError> {
    value
        .split(',')
        .map(|p| parse_as::<usize>(key, p.trim(), "usize list"))
        .collect()
}

// ---------------------------------------------------------------------------
// typed builders: defaults overridden by file keys

pub fn mlp_config_from(file: &FileConfig) -> Result<MLPConfig, ConfigError> {
    let mut cfg = MLPConfig::default();
    for (k, v) in &file.map {
        match k.as_str() {
            "hidden" => cfg.hidden = parse_usize_list(k, v)?,
            "learning_rate" => cfg.learning_rate = parse_as(k, v, "f64")?,
            "momentum" => cfg.momentum = parse_as(k, v, "f64")?,
            "epochs" => cfg.epochs = parse_as(k, v, "usize")?,
            "batch_size" => cfg.batch_size = parse_as(k, v, "usize")?,
            "split" => cfg.split = parse_as(k, v, "f64")?,
            "patience" => cfg.patience = parse_as(k, v, "usize")?,
            "seed" => cfg.rng_seed = parse_as(k, v, "u64")?,
            _ => return Err(ConfigError::UnknownKey(k.clone())),
        }
    }
    Ok(cfg)
}

pub fn mst_config_from(file: &FileConfig) -> Result<MSTConfig, ConfigError> {
    let mut cfg = MSTConfig::default();
    for (k, v) in &file.map {
        match k.as_str() {
            "isab_blocks" => cfg.isab_blocks = parse_as(k, v, "usize")?,
            "decoder_blocks" => cfg.decoder_blocks = parse_as(k, v, "usize")?,
            "d" => cfg.d = parse_as(k, v, "usize")?,
            "heads" => cfg.heads = parse_as(k, v, "usize")?,
            "inducing" => cfg.inducing = parse_as(k, v, "usize")?,
            "k_seed" => cfg.k_seed = parse_as(k, v, "usize")?,
            "max_len" => cfg.max_len = parse_as(k, v, "usize")?,
            "learning_rate" => cfg.learning_rate = parse_as(k, v, "f64")?,
            "grad_clip" => cfg.grad_clip = parse_as(k, v, "f64")?,
            "seed" => cfg.rng_seed = parse_as(k, v, "u64")?,
            _ => return Err(ConfigError::UnknownKey(k.clone())),
        }
    }
    Ok(cfg)
}

pub fn eval_config_from(file: &FileConfig) -> Result<EvalConfig, ConfigError> {
    let mut cfg = EvalConfig::default();
    for (k, v) in &file.map {
        match k.as_str() {
            "n_test" => cfg.n_test = parse_as(k, v, "usize")?,
            "repeats" => cfg.repeats = parse_as(k, v, "usize")?,
            "expansion" => cfg.expansion = parse_as(k, v, "f64")?,
            "population" => cfg.population = parse_as(k, v, "usize")?,
            "tournament" => cfg.tournament = parse_as(k, v, "usize")?,
            "crossover_rate" => cfg.crossover_rate = parse_as(k, v, "f64")?,
            "mutation_sigma" => cfg.mutation_sigma = parse_as(k, v, "f64")?,
            "mutation_rate" => cfg.mutation_rate = parse_as(k, v, "f64")?,
            "stop_window" => cfg.stop_window = parse_as(k, v, "usize")?,
            "stop_delta" => cfg.stop_delta = parse_as(k, v, "f64")?,
            "max_generations" => cfg.max_generations = parse_as(k, v, "usize")?,
            "init_lo" => cfg.init_range.0 = parse_as(k, v, "f64")?,
            "init_hi" => cfg.init_range.1 = parse_as(k, v, "f64")?,
            "seed" => cfg.rng_seed = parse_as(k, v, "u64")?,
            _ => return Err(ConfigError::UnknownKey(k.clone())),
        }
    }
    Ok(cfg)
}

/// Pipeline keys plus `mlp_*` and `eval_*` prefixed blocks.
pub fn pipeline_config_from(file: &FileConfig) -> Result<PipelineConfig, ConfigError> {
    let mut cfg = PipelineConfig::default();
    let mut mlp = FileConfig::default();
    let mut eval = FileConfig::default();
    for (k, v) in &file.map {
        if let Some(rest) = k.strip_prefix("mlp_") {
            mlp.map.insert(rest.to_string(), v.clone());
            continue;
        }
        if let Some(rest) = k.strip_prefix("eval_") {
            eval.map.insert(rest.to_string(), v.clone());
            continue;
        }
        match k.as_str() {
            "n_r" => cfg.n_r = parse_as(k, v, "usize")?,
            "n_s" => cfg.n_s = parse_as(k, v, "usize")?,
            "n" => cfg.n = parse_as(k, v, "usize")?,
            "seed" => cfg.seed = parse_as(k, v, "u64")?,
            "oracle" => cfg.oracle = parse_as(k, v, "bool")?,
            "timings" => cfg.timings = parse_as(k, v, "bool")?,
            "mst_checkpoint" => cfg.mst_checkpoint = Some(PathBuf::from(v)),
            _ => return Err(ConfigError::UnknownKey(k.clone())),
        }
    }
    cfg.mlp = mlp_config_from(&mlp)?;
    cfg.eval = eval_config_from(&eval)?;
    Ok(cfg)
}

/// Seed precedence: command-line flag, then config-file key, then the
/// `SYMSKEL_SEED` environment variable, then 0.
pub fn resolve_seed(flag: Option<u64>, from_file: Option<u64>) -> Result<u64, ConfigError> {
    if let Some(s) = flag {
        return Ok(s);
    }
    if let Some(s) = from_file {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| ConfigError::BadEnvSeed(v)),
        Err(_) => Ok(0),
    }
}

// ---------------------------------------------------------------------------
