//! Plain-text configuration files.
//!
//! Format: UTF-8, one `key = value` pair per line, `#` starts a comment.
//! Keys are field paths such as `nv.L21` or `cavity.kappa`; values are
//! decimal or scientific-notation numbers in SI units (Hz, W, m). Keys that
//! are not listed keep their defaults.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::params::ModelParams;

/// Every recognized key, in the order used when emitting a config.
pub const CONFIG_KEYS: [&str; 26] = [
    "nv.L21",
    "nv.L43",
    "nv.L25",
    "nv.L45",
    "nv.L56",
    "nv.L61",
    "nv.L63",
    "nv.Gamma13",
    "nv.Lambda_NV",
    "nv.Omega",
    "nv.Delta",
    "nv.G_S",
    "nv.N_NV",
    "nv.pump_rate_per_watt",
    "mecsel.L_eg",
    "mecsel.G_eg",
    "mecsel.Lambda_ge",
    "mecsel.N_2M",
    "mecsel.pump_rate_per_watt",
    "cavity.kappa",
    "cavity.kappa_mirror",
    "cavity.wavelength",
    "constants.planck_h",
    "constants.electron_g",
    "constants.bohr_magneton",
    "constants.speed_of_light",
];

fn field_mut<'a>(params: &'a mut ModelParams, key: &str) -> Option<&'a mut f64> {
    let field = match key {
        "nv.L21" => &mut params.nv.l21,
        "nv.L43" => &mut params.nv.l43,
        "nv.L25" => &mut params.nv.l25,
        "nv.L45" => &mut params.nv.l45,
        "nv.L56" => &mut params.nv.l56,
        "nv.L61" => &mut params.nv.l61,
        "nv.L63" => &mut params.nv.l63,
        "nv.Gamma13" => &mut params.nv.gamma13,
        "nv.Lambda_NV" => &mut params.nv.lambda_nv,
        "nv.Omega" => &mut params.nv.omega,
        "nv.Delta" => &mut params.nv.delta,
        "nv.G_S" => &mut params.nv.g_s,
        "nv.N_NV" => &mut params.nv.n_nv,
        "nv.pump_rate_per_watt" => &mut params.nv.pump_rate_per_watt,
        "mecsel.L_eg" => &mut params.mecsel.l_eg,
        "mecsel.G_eg" => &mut params.mecsel.g_eg,
        "mecsel.Lambda_ge" => &mut params.mecsel.lambda_ge,
        "mecsel.N_2M" => &mut params.mecsel.n_2m,
        "mecsel.pump_rate_per_watt" => &mut params.mecsel.pump_rate_per_watt,
        "cavity.kappa" => &mut params.cavity.kappa,
        "cavity.kappa_mirror" => &mut params.cavity.kappa_mirror,
        "cavity.wavelength" => &mut params.cavity.wavelength,
        "constants.planck_h" => &mut params.constants.planck_h,
        "constants.electron_g" => &mut params.constants.electron_g,
        "constants.bohr_magneton" => &mut params.constants.bohr_magneton,
        "constants.speed_of_light" => &mut params.constants.speed_of_light,
        _ => return None,
    };
    Some(field)
}

/// Reads the value of `key` out of a parameter set.
pub fn field_value(params: &ModelParams, key: &str) -> Option<f64> {
    let mut copy = *params;
    field_mut(&mut copy, key).map(|f| *f)
}

/// Applies a single `key = value` override. Used by the loader and by CLI
/// `--set` flags.
pub fn set_field(params: &mut ModelParams, key: &str, value: f64) -> Result<()> {
    match field_mut(params, key) {
        Some(field) => {
            *field = value;
            Ok(())
        }
        None => Err(Error::UnknownConfigKey {
            key: key.to_string(),
            line: 0,
        }),
    }
}

/// Parses config text. Unlisted keys keep Table-S1 defaults; the merged
/// parameter set is validated before it is returned.
pub fn parse_config(text: &str) -> Result<ModelParams> {
    let mut params = ModelParams::default();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.split_once('#') {
            Some((before, _)) => before,
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::ConfigParse {
            line: line_no,
            message: format!("expected `key = value`, got `{raw_line}`"),
        })?;
        let key = key.trim();
        let value = value.trim();
        let parsed: f64 = value.parse().map_err(|_| Error::ConfigParse {
            line: line_no,
            message: format!("`{value}` is not a number"),
        })?;
        match field_mut(&mut params, key) {
            Some(field) => *field = parsed,
            None => {
                return Err(Error::UnknownConfigKey {
                    key: key.to_string(),
                    line: line_no,
                })
            }
        }
    }
    params.validate()?;
    Ok(params)
}

/// Loads and validates a config file.
pub fn load_config<P: AsRef<Path>>(path: P) -> Result<ModelParams> {
    let text = fs::read_to_string(path)?;
    parse_config(&text)
}

/// Emits a config listing every key. Values use the shortest representation
/// that round-trips, so `parse_config(emit_config(p)) == p` bit for bit.
pub fn emit_config(params: &ModelParams) -> String {
    let mut out = String::new();
    for key in CONFIG_KEYS {
        let value = field_value(params, key).expect("key table is exhaustive");
        out.push_str(&format!("{key} = {value:e}\n"));
    }
    out
}
