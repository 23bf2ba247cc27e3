//! Flat `key = value` parameter files.
//!
//! Blank lines and lines starting with `#` are ignored. Keys are the
//! [`IonParams`] field names; keys left out keep their reference values.
//! Unknown or repeated keys and an empty file are configuration errors.

use std::collections::BTreeSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::IonParams;

pub const KEYS: [&str; 17] = [
    "nu",
    "omega_g",
    "omega_r",
    "omega_mw",
    "delta_g",
    "delta_gr",
    "gamma_g",
    "gamma_r",
    "gamma_d",
    "eta1",
    "eta2",
    "eta_decay_g",
    "eta_decay_r",
    "eta_decay_d",
    "recoil_moment",
    "fock_cutoff",
    "nbar0",
];

/// Sets the named floating-point field. `fock_cutoff` is rejected here
/// because it is not a continuous axis.
pub fn set_param(p: &mut IonParams, key: &str, value: f64) -> Result<()> {
    let slot = match key {
        "nu" => &mut p.nu,
        "omega_g" => &mut p.omega_g,
        "omega_r" => &mut p.omega_r,
        "omega_mw" => &mut p.omega_mw,
        "delta_g" => &mut p.delta_g,
        "delta_gr" => &mut p.delta_gr,
        "gamma_g" => &mut p.gamma_g,
        "gamma_r" => &mut p.gamma_r,
        "gamma_d" => &mut p.gamma_d,
        "eta1" => &mut p.eta1,
        "eta2" => &mut p.eta2,
        "eta_decay_g" => &mut p.eta_decay_g,
        "eta_decay_r" => &mut p.eta_decay_r,
        "eta_decay_d" => &mut p.eta_decay_d,
        "recoil_moment" => &mut p.recoil_moment,
        "nbar0" => &mut p.nbar0,
        _ => return Err(Error::Config(format!("unknown parameter `{key}`"))),
    };
    *slot = value;
    Ok(())
}

pub fn get_param(p: &IonParams, key: &str) -> Result<f64> {
    Ok(match key {
        "nu" => p.nu,
        "omega_g" => p.omega_g,
        "omega_r" => p.omega_r,
        "omega_mw" => p.omega_mw,
        "delta_g" => p.delta_g,
        "delta_gr" => p.delta_gr,
        "gamma_g" => p.gamma_g,
        "gamma_r" => p.gamma_r,
        "gamma_d" => p.gamma_d,
        "eta1" => p.eta1,
        "eta2" => p.eta2,
        "eta_decay_g" => p.eta_decay_g,
        "eta_decay_r" => p.eta_decay_r,
        "eta_decay_d" => p.eta_decay_d,
        "recoil_moment" => p.recoil_moment,
        "fock_cutoff" => p.fock_cutoff as f64,
        "nbar0" => p.nbar0,
        _ => return Err(Error::Config(format!("unknown parameter `{key}`"))),
    })
}

pub fn parse_params(text: &str) -> Result<IonParams> {
    let mut p = IonParams::fig3();
    let mut seen = BTreeSet::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let at = |msg: String| Error::Config(format!("line {}: {msg}", lineno + 1));
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| at(format!("expected `key = value`, got `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(at(format!("unknown key `{key}`")));
        }
        if !seen.insert(key.to_string()) {
            return Err(at(format!("duplicate key `{key}`")));
        }
        if key == "fock_cutoff" {
            p.fock_cutoff = value
                .parse()
                .map_err(|_| at(format!("fock_cutoff must be a non-negative integer, got `{value}`")))?;
        } else {
            let v: f64 = value
                .parse()
                .map_err(|_| at(format!("`{key}` must be a number, got `{value}`")))?;
            if !v.is_finite() {
                return Err(at(format!("`{key}` must be finite")));
            }
            set_param(&mut p, key, v)?;
        }
    }
    if seen.is_empty() {
        return Err(Error::Config("parameter file is empty".into()));
    }
    p.validate()?;
    Ok(p)
}

pub fn load_params(path: &Path) -> Result<IonParams> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_params(&text)
}

/// Renders `p` in the file format, one key per line.
pub fn render_params(p: &IonParams) -> String {
    KEYS.iter()
        .map(|k| {
            let v = get_param(p, k).expect("known key");
            if *k == "fock_cutoff" {
                format!("{k} = {}\n", p.fock_cutoff)
            } else {
                format!("{k} = {v:?}\n")
            }
        })
        .collect()
}
