//! Flat `key = value` configuration files.
//!
//! Keys are exactly the [`SimConfig`] field names, values are SI units in
//! decimal or scientific notation, `#` starts a comment. Lists
//! (`cn2_sweep`, `n_modes_sweep`, `regimes`) are comma separated. Unknown
//! and repeated keys are errors; missing keys keep their defaults.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use turbmimo_core::experiment::SimConfig;
use turbmimo_core::photon::Regime;

use crate::error::{AppError, AppResult};

/// Every recognized key, in file order.
pub const KEYS: [&str; 21] = [
    "wavelength",
    "path_length",
    "waist",
    "n_points",
    "spacing",
    "outer_scale",
    "inner_scale",
    "n_slabs",
    "rho_z",
    "n_mc",
    "cn2_sweep",
    "cn2_min",
    "cn2_max",
    "cn2_points",
    "n_modes_sweep",
    "master_seed",
    "absorber",
    "guard_fraction",
    "regimes",
    "subharmonics",
    "slab_factors",
];

/// A parsed configuration and the keys that fell back to defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedConfig {
    pub config: SimConfig,
    pub defaulted: Vec<&'static str>,
}

fn scalar<T: FromStr>(value: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("cannot parse {value:?} as {}", std::any::type_name::<T>()))
}

fn list<T: FromStr>(value: &str) -> Result<Vec<T>, String> {
    let items: Vec<&str> = value.split(',').map(str::trim).collect();
    if items.iter().any(|s| s.is_empty()) {
        return Err(format!("malformed list {value:?}"));
    }
    items.into_iter().map(scalar).collect()
}

fn boolean(value: &str) -> Result<bool, String> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("expected true or false, got {value:?}")),
    }
}

/// Sets one field from its textual value.
pub fn set_field(config: &mut SimConfig, key: &str, value: &str) -> Result<(), String> {
    let value = value.trim();
    match key {
        "wavelength" => config.wavelength = scalar(value)?,
        "path_length" => config.path_length = scalar(value)?,
        "waist" => config.waist = scalar(value)?,
        "n_points" => config.n_points = scalar(value)?,
        "spacing" => config.spacing = scalar(value)?,
        "outer_scale" => config.outer_scale = scalar(value)?,
        "inner_scale" => config.inner_scale = scalar(value)?,
        "n_slabs" => config.n_slabs = scalar(value)?,
        "rho_z" => config.rho_z = scalar(value)?,
        "n_mc" => config.n_mc = scalar(value)?,
        "cn2_sweep" => config.cn2_sweep = Some(list(value)?),
        "cn2_min" => config.cn2_min = scalar(value)?,
        "cn2_max" => config.cn2_max = scalar(value)?,
        "cn2_points" => config.cn2_points = scalar(value)?,
        "n_modes_sweep" => config.n_modes_sweep = list(value)?,
        "master_seed" => config.master_seed = scalar(value)?,
        "absorber" => config.absorber = boolean(value)?,
        "guard_fraction" => config.guard_fraction = scalar(value)?,
        "regimes" => {
            config.regimes = value
                .split(',')
                .map(|s| Regime::parse(s.trim()).ok_or_else(|| format!("unknown regime {:?}", s.trim())))
                .collect::<Result<_, _>>()?
        }
        "subharmonics" => config.subharmonics = boolean(value)?,
        "slab_factors" => config.slab_factors = boolean(value)?,
        _ => return Err(format!("unknown key {key:?}")),
    }
    Ok(())
}

fn known_key(key: &str) -> Option<&'static str> {
    KEYS.iter().copied().find(|k| *k == key)
}

/// Parses configuration text; `source_name` labels error messages.
pub fn parse_config(text: &str, source_name: &str) -> AppResult<LoadedConfig> {
    let mut config = SimConfig::default();
    let mut seen = BTreeSet::new();
    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let fail = |message: String| AppError::Parse {
            source_name: source_name.to_string(),
            line,
            message,
        };
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| fail(format!("expected key = value, got {content:?}")))?;
        let key = key.trim();
        let known = known_key(key).ok_or_else(|| fail(format!("unknown key {key:?}")))?;
        if !seen.insert(known) {
            return Err(fail(format!("duplicate key {key:?}")));
        }
        set_field(&mut config, known, value).map_err(|m| fail(format!("{key}: {m}")))?;
    }
    let defaulted: Vec<&'static str> = KEYS.iter().copied().filter(|k| !seen.contains(k)).collect();
    if !defaulted.is_empty() {
        log::info!("{source_name}: using defaults for {}", defaulted.join(", "));
    }
    Ok(LoadedConfig { config, defaulted })
}

pub fn load_config(path: &Path) -> AppResult<LoadedConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    parse_config(&text, &path.display().to_string())
}

/// Applies a `key=value` override as given on the command line.
pub fn apply_override(config: &mut SimConfig, assignment: &str) -> AppResult<()> {
    let (key, value) = assignment
        .split_once('=')
        .ok_or_else(|| AppError::Config(format!("override {assignment:?} is not key=value")))?;
    let key = key.trim();
    known_key(key).ok_or_else(|| AppError::Config(format!("unknown key {key:?}")))?;
    set_field(config, key, value).map_err(|m| AppError::Config(format!("{key}: {m}")))
}

fn float(x: f64) -> String {
    format!("{x:e}")
}

fn join<T>(items: &[T], f: impl Fn(&T) -> String) -> String {
    items.iter().map(f).collect::<Vec<_>>().join(", ")
}

/// Renders a configuration in the file format; parsing the result
/// reproduces `config` exactly.
pub fn render_config(config: &SimConfig) -> String {
    let mut out = String::new();
    let mut put = |k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };
    put("wavelength", float(config.wavelength));
    put("path_length", float(config.path_length));
    put("waist", float(config.waist));
    put("n_points", config.n_points.to_string());
    put("spacing", float(config.spacing));
    put("outer_scale", float(config.outer_scale));
    put("inner_scale", float(config.inner_scale));
    put("n_slabs", config.n_slabs.to_string());
    put("rho_z", float(config.rho_z));
    put("n_mc", config.n_mc.to_string());
    if let Some(list) = &config.cn2_sweep {
        put("cn2_sweep", join(list, |x| float(*x)));
    }
    put("cn2_min", float(config.cn2_min));
    put("cn2_max", float(config.cn2_max));
    put("cn2_points", config.cn2_points.to_string());
    put("n_modes_sweep", join(&config.n_modes_sweep, |n| n.to_string()));
    put("master_seed", config.master_seed.to_string());
    put("absorber", config.absorber.to_string());
    put("guard_fraction", float(config.guard_fraction));
    put("regimes", join(&config.regimes, |r| r.name().to_string()));
    put("subharmonics", config.subharmonics.to_string());
    put("slab_factors", config.slab_factors.to_string());
    out
}
