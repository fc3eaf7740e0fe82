//! Plain-text key–value configuration.
//!
//! ```text
//! # resonator
//! omega0 = 193 THz
//! R      = 34.5 µm
//! phi3   = 1.5pi
//! frequency-convention = angular
//! ```
//!
//! Keys are listed in [`KEYS`]. Blank lines and `#` comments are ignored.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Drive, SystemParams};
use crate::units::{parse_quantity, Dimension, FrequencyConvention, Phase};

pub const CONVENTION_KEY: &str = "frequency-convention";

/// Recognized keys with their dimension and a one-line description.
pub const KEYS: &[(&str, Dimension, &str)] = &[
    ("omega0", Dimension::Frequency, "optical resonance frequency"),
    ("gamma0", Dimension::Frequency, "intrinsic decay rate"),
    ("gamma1", Dimension::Frequency, "fiber coupling rate at port 1"),
    ("gamma2", Dimension::Frequency, "fiber coupling rate at port 2"),
    ("J", Dimension::Frequency, "symmetric backscattering coupling"),
    ("t0", Dimension::Dimensionless, "fiber transmission magnitude"),
    ("phi1", Dimension::Angle, "pump path phase (defaults to phi3)"),
    ("phi2", Dimension::Angle, "probe path phase (defaults to phi3)"),
    ("phi3", Dimension::Angle, "loop phase"),
    ("R", Dimension::Length, "resonator radius"),
    ("m", Dimension::Mass, "effective mechanical mass"),
    ("omega_m", Dimension::Frequency, "mechanical frequency"),
    ("gamma_m", Dimension::Frequency, "mechanical damping"),
    (
        "g",
        Dimension::Dimensionless,
        "optomechanical coupling override [rad/(s m)], default omega0/R",
    ),
    ("Pc", Dimension::Power, "pump power"),
    ("Pp", Dimension::Power, "probe power (defaults to 1e-4 Pc)"),
    (
        "delta_a",
        Dimension::Frequency,
        "pump detuning omega0 - omega_c (defaults to omega_m)",
    ),
];

const REQUIRED: &[&str] = &[
    "omega0", "gamma0", "gamma1", "gamma2", "J", "t0", "phi3", "R", "m", "omega_m", "gamma_m",
];

/// Unparsed key–value pairs. Later insertions override earlier ones.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RawParams {
    entries: BTreeMap<String, String>,
}

fn canonical(key: &str) -> Option<&'static str> {
    let key = key.trim();
    if key == CONVENTION_KEY {
        return Some(CONVENTION_KEY);
    }
    KEYS.iter().map(|(k, _, _)| *k).find(|k| *k == key || (key == "j" && *k == "J"))
}

impl RawParams {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self> {
        let mut raw = RawParams::new();
        for (k, v) in pairs {
            raw.insert(k, v)?;
        }
        Ok(raw)
    }

    /// Parses the text of a configuration file.
    pub fn parse(text: &str) -> Result<Self> {
        let mut raw = RawParams::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Invalid(format!("line {}: expected `key = value`", lineno + 1)))?;
            raw.insert(k, v)?;
        }
        Ok(raw)
    }

    pub fn insert(&mut self, key: &str, value: &str) -> Result<()> {
        let key = canonical(key).ok_or_else(|| Error::UnknownField(key.trim().to_string()))?;
        self.entries.insert(key.to_string(), value.trim().to_string());
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Invalid(format!("expected key=value, got `{assignment}`")))?;
        self.insert(k, v)
    }

    pub fn merge(&mut self, other: &RawParams) {
        for (k, v) in &other.entries {
            self.entries.insert(k.clone(), v.clone());
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn convention(&self) -> Result<FrequencyConvention> {
        self.get(CONVENTION_KEY).map_or(Ok(FrequencyConvention::default()), str::parse)
    }

    fn quantity(&self, key: &str) -> Result<Option<f64>> {
        let Some(text) = self.get(key) else {
            return Ok(None);
        };
        let dim = KEYS.iter().find(|(k, _, _)| *k == key).map(|(_, d, _)| *d).expect("known key");
        parse_quantity(key, text, dim, self.convention()?).map(Some)
    }

    fn required(&self, key: &str) -> Result<f64> {
        self.quantity(key)?.ok_or_else(|| Error::MissingField(key.to_string()))
    }

    fn phase(&self, key: &str) -> Result<Option<Phase>> {
        self.get(key).map(|text| Phase::parse(key, text)).transpose()
    }
}

/// Validates raw parameters into [`SystemParams`].
pub fn build_system(raw: &RawParams) -> Result<SystemParams> {
    if let Some(missing) = REQUIRED.iter().find(|k| raw.get(k).is_none()) {
        return Err(Error::MissingField(missing.to_string()));
    }
    let phi3 = raw.phase("phi3")?.expect("required");
    let params = SystemParams {
        omega0: raw.required("omega0")?,
        gamma0: raw.required("gamma0")?,
        gamma1: raw.required("gamma1")?,
        gamma2: raw.required("gamma2")?,
        j: raw.required("J")?,
        t0: raw.required("t0")?,
        phi1: raw.phase("phi1")?.unwrap_or(phi3),
        phi2: raw.phase("phi2")?.unwrap_or(phi3),
        phi3,
        radius: raw.required("R")?,
        mass: raw.required("m")?,
        omega_m: raw.required("omega_m")?,
        gamma_m: raw.required("gamma_m")?,
        g_override: raw.quantity("g")?,
    };
    params.validate()?;
    Ok(params)
}

/// Builds the pump/probe drive. The probe sits at the cavity frequency.
pub fn build_drive(raw: &RawParams, params: &SystemParams) -> Result<Drive> {
    let pump_power = raw.required("Pc")?;
    if !(pump_power > 0.0) {
        return Err(Error::NegativeRate {
            field: "Pc".into(),
            value: pump_power,
            requirement: "> 0",
        });
    }
    let probe_power = raw.quantity("Pp")?.unwrap_or(1e-4 * pump_power);
    if probe_power < 0.0 {
        return Err(Error::NegativeRate {
            field: "Pp".into(),
            value: probe_power,
            requirement: ">= 0",
        });
    }
    let delta_a = raw.quantity("delta_a")?.unwrap_or(params.omega_m);
    let drive = Drive {
        probe_power,
        ..Drive::detuned(params, pump_power, delta_a)
    };
    if !(drive.omega_c > 0.0) {
        return Err(Error::NonPositiveFrequency {
            field: "omega_c".into(),
            value: drive.omega_c,
        });
    }
    Ok(drive)
}

/// A fully validated model: parameters, drive and the convention used to read them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelConfig {
    pub params: SystemParams,
    pub drive: Drive,
    pub convention: FrequencyConvention,
}

impl ModelConfig {
    pub fn from_raw(raw: &RawParams) -> Result<Self> {
        let params = build_system(raw)?;
        let drive = build_drive(raw, &params)?;
        Ok(ModelConfig {
            params,
            drive,
            convention: raw.convention()?,
        })
    }
}
