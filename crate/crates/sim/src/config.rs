//! Flat `key = value` scenario files.
//!
//! Keys are the `ScenarioConfig` field names. Blank lines and anything after
//! `#` are ignored. Keys missing from the file keep the base value.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use smallcell_core::{ScenarioConfig, ScenarioId};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value `{value}` for `{key}`")]
    BadValue { line: usize, key: String, value: String },
    #[error("invalid scenario: {0}")]
    Invalid(#[from] smallcell_core::Error),
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

fn value<T: FromStr>(line: usize, key: &str, raw: &str) -> Result<T, ConfigError> {
    raw.parse().map_err(|_| ConfigError::BadValue { line, key: key.to_owned(), value: raw.to_owned() })
}

/// Applies the settings in `text` on top of `base` and validates the result.
pub fn parse_config(text: &str, base: ScenarioConfig) -> Result<ScenarioConfig, ConfigError> {
    let mut cfg = base;
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, raw) = content.split_once('=').ok_or(ConfigError::Syntax { line })?;
        let (key, raw) = (key.trim(), raw.trim());
        match key {
            "scenario_id" => cfg.scenario_id = value::<ScenarioId>(line, key, raw)?,
            "cell_radius" => cfg.cell_radius = value(line, key, raw)?,
            "num_links" => cfg.num_links = value(line, key, raw)?,
            "num_tones" => cfg.num_tones = value(line, key, raw)?,
            "tone_bandwidth" => cfg.tone_bandwidth = value(line, key, raw)?,
            "noise_density" => cfg.noise_density = value(line, key, raw)?,
            "max_power" => cfg.max_power = value(line, key, raw)?,
            "d_indoor" => cfg.d_indoor = value(line, key, raw)?,
            "n_floors" => cfg.n_floors = value(line, key, raw)?,
            "q_walls" => cfg.q_walls = value(line, key, raw)?,
            "l_iw" => cfg.l_iw = value(line, key, raw)?,
            "l_ow" => cfg.l_ow = value(line, key, raw)?,
            "shadow_sigma" => cfg.shadow_sigma = value(line, key, raw)?,
            "rng_seed" => cfg.rng_seed = value(line, key, raw)?,
            _ => return Err(ConfigError::UnknownKey { line, key: key.to_owned() }),
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path, base: ScenarioConfig) -> Result<ScenarioConfig, ConfigError> {
    let text = fs::read_to_string(path)
        .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
    parse_config(&text, base)
}

/// Renders `cfg` in the format [`parse_config`] reads.
pub fn render_config(cfg: &ScenarioConfig) -> String {
    format!(
        "scenario_id = {}\ncell_radius = {}\nnum_links = {}\nnum_tones = {}\ntone_bandwidth = {}\n\
         noise_density = {}\nmax_power = {}\nd_indoor = {}\nn_floors = {}\nq_walls = {}\n\
         l_iw = {}\nl_ow = {}\nshadow_sigma = {}\nrng_seed = {}\n",
        cfg.scenario_id,
        cfg.cell_radius,
        cfg.num_links,
        cfg.num_tones,
        cfg.tone_bandwidth,
        cfg.noise_density,
        cfg.max_power,
        cfg.d_indoor,
        cfg.n_floors,
        cfg.q_walls,
        cfg.l_iw,
        cfg.l_ow,
        cfg.shadow_sigma,
        cfg.rng_seed,
    )
}
