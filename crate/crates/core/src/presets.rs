//! Named parameter points, sweep scenarios and the sweep engine.
//!
//! Presets are written as configuration text and go through the same
//! validation as user input. Sweep points are rebuilt the same way, so every
//! swept parameter set is validated too.

use std::fmt;
use std::str::FromStr;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ModelConfig, RawParams, CONVENTION_KEY};
use crate::eigen::es_coupling;
use crate::error::{Error, Result};
use crate::model::Cavity;
use crate::response::{DelayOptions, ProbeResponse, SpectrumTable};
use crate::units::{parse_quantity, Dimension, FrequencyConvention, Phase};

/// Evenly spaced grid, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Grid {
    pub fn new(min: f64, max: f64, count: usize) -> Result<Grid> {
        let ok = min.is_finite() && max.is_finite() && count > 0 && (count == 1 || max > min) && (count > 1 || min == max);
        if !ok {
            return Err(Error::BadGrid);
        }
        Ok(Grid { min, max, count })
    }

    /// A single-point grid.
    pub fn point(value: f64) -> Result<Grid> {
        Grid::new(value, value, 1)
    }

    /// Parses `min:max:count`, where min and max may carry unit suffixes.
    pub fn parse(text: &str, dimension: Dimension, convention: FrequencyConvention) -> Result<Grid> {
        let parts: Vec<&str> = text.split(':').collect();
        let [min, max, count] = parts[..] else {
            return Err(Error::Invalid(format!("grid `{text}` is not min:max:count")));
        };
        let min = parse_quantity("grid", min, dimension, convention)?;
        let max = parse_quantity("grid", max, dimension, convention)?;
        let count: usize = count
            .trim()
            .parse()
            .map_err(|_| Error::Invalid(format!("grid count `{count}` is not a non-negative integer")))?;
        Grid::new(min, max, count)
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|k| {
                if k == self.count - 1 {
                    self.max
                } else {
                    self.min + (self.max - self.min) * (k as f64 / last)
                }
            })
            .collect()
    }

    pub fn step(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.max - self.min) / (self.count - 1) as f64
        }
    }
}

/// Parameter swept by [`sweep_1d`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    #[serde(rename = "gamma0")]
    Gamma0,
    #[serde(rename = "gamma1")]
    Gamma1,
    #[serde(rename = "gamma2")]
    Gamma2,
    #[serde(rename = "J")]
    J,
    #[serde(rename = "t0")]
    T0,
    #[serde(rename = "phi3")]
    Phi3,
    #[serde(rename = "Pc")]
    PumpPower,
    #[serde(rename = "delta_a")]
    PumpDetuning,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 8] = [
        SweepAxis::Gamma0,
        SweepAxis::Gamma1,
        SweepAxis::Gamma2,
        SweepAxis::J,
        SweepAxis::T0,
        SweepAxis::Phi3,
        SweepAxis::PumpPower,
        SweepAxis::PumpDetuning,
    ];

    pub fn key(self) -> &'static str {
        match self {
            SweepAxis::Gamma0 => "gamma0",
            SweepAxis::Gamma1 => "gamma1",
            SweepAxis::Gamma2 => "gamma2",
            SweepAxis::J => "J",
            SweepAxis::T0 => "t0",
            SweepAxis::Phi3 => "phi3",
            SweepAxis::PumpPower => "Pc",
            SweepAxis::PumpDetuning => "delta_a",
        }
    }

    pub fn dimension(self) -> Dimension {
        match self {
            SweepAxis::T0 => Dimension::Dimensionless,
            SweepAxis::Phi3 => Dimension::Angle,
            SweepAxis::PumpPower => Dimension::Power,
            _ => Dimension::Frequency,
        }
    }

    /// Configuration text for an SI value on this axis.
    fn entry(self, value: f64) -> String {
        match self {
            SweepAxis::Phi3 => format!("{}pi", Phase::from_radians(value).pi_units()),
            _ => format!("{value:e}"),
        }
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        SweepAxis::ALL
            .into_iter()
            .find(|a| a.key() == s || (s == "j" && *a == SweepAxis::J))
            .ok_or_else(|| Error::UnknownField(s.to_string()))
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

/// Parameters tied to the swept one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Constraint {
    /// γ2 = line_gamma2(γ1).
    Gamma2OnLine,
    /// γ2 = γ1.
    Gamma2EqualsGamma1,
    /// J = t0√(γ1γ2).
    JOnEs,
}

impl Constraint {
    fn apply(self, config: &ModelConfig, raw: &mut RawParams) -> Result<()> {
        let p = &config.params;
        match self {
            Constraint::Gamma2OnLine => raw.insert("gamma2", &format!("{:e}", line_gamma2(p.gamma1, config.convention))),
            Constraint::Gamma2EqualsGamma1 => raw.insert("gamma2", &format!("{:e}", p.gamma1)),
            Constraint::JOnEs => raw.insert("J", &format!("{:e}", es_coupling(p.t0, p.gamma1, p.gamma2))),
        }
    }
}

impl FromStr for Constraint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "gamma2-on-line" => Ok(Constraint::Gamma2OnLine),
            "gamma2-equals-gamma1" => Ok(Constraint::Gamma2EqualsGamma1),
            "j-on-es" => Ok(Constraint::JOnEs),
            other => Err(Error::Invalid(format!(
                "unknown constraint `{other}` (expected gamma2-on-line, gamma2-equals-gamma1 or j-on-es)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub grid: Grid,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Preset {
    pub name: String,
    pub description: String,
    pub raw: RawParams,
    pub config: ModelConfig,
    /// Probe detuning grid δp [rad/s].
    pub grid: Grid,
    pub sweep: Option<SweepSpec>,
    /// Loop phases for phase sweeps.
    pub phases: Option<Vec<Phase>>,
    pub notes: Vec<String>,
}

const BASE: &str = "
    R = 34.5 µm
    omega0 = 193 THz
    gamma0 = 1 MHz
    m = 50 ng
    omega_m = 147 MHz
    gamma_m = 0.24 MHz
    Pc = 1 mW
    t0 = 1
    phi3 = 1.5pi
    gamma1 = 1 MHz
    gamma2 = 1 MHz
    J = 0
";

struct Entry {
    name: &'static str,
    description: &'static str,
    /// (J, γ1, γ2) in MHz and t0.
    point: (f64, f64, f64, f64),
}

const POINTS: &[Entry] = &[
    Entry {
        name: "baseline",
        description: "reference resonator, gamma1 = gamma2 = 1 MHz, no backscattering",
        point: (0.0, 1.0, 1.0, 1.0),
    },
    Entry {
        name: "es1-ep1",
        description: "first-kind exceptional point on the gamma2 line, gamma1 = 0.7 MHz",
        point: (0.0, 0.7, 1.26, 1.0),
    },
    Entry {
        name: "es1-ep2",
        description: "first-kind exceptional point, gamma1 = gamma2 = 1 MHz",
        point: (0.0, 1.0, 1.0, 1.0),
    },
    Entry {
        name: "es1-ep3",
        description: "first-kind exceptional point on the gamma2 line, gamma1 = 1.38 MHz",
        point: (0.0, 1.38, 0.68, 1.0),
    },
    Entry {
        name: "es1-np",
        description: "non-exceptional point next to es1-ep2 with J = 0.3 MHz",
        point: (0.3, 1.0, 1.0, 1.0),
    },
    Entry {
        name: "es2-np1",
        description: "non-exceptional point with J = 1.5 MHz above J* = 0.5 MHz",
        point: (1.5, 0.5, 0.5, 1.0),
    },
    Entry {
        name: "es2-ep1",
        description: "second-kind exceptional point, J = gamma1 = gamma2 = 0.5 MHz",
        point: (0.5, 0.5, 0.5, 1.0),
    },
    Entry {
        name: "es2-ep2",
        description: "second-kind exceptional point, J = gamma1 = gamma2 = 1 MHz",
        point: (1.0, 1.0, 1.0, 1.0),
    },
    Entry {
        name: "es2-ep3",
        description: "second-kind exceptional point, J = gamma1 = gamma2 = 1.5 MHz",
        point: (1.5, 1.5, 1.5, 1.0),
    },
    Entry {
        name: "es2-ep4",
        description: "second-kind exceptional point with a lossy loop, t0 = 0.9",
        point: (0.9, 1.0, 1.0, 0.9),
    },
    Entry {
        name: "es2-ep5",
        description: "second-kind exceptional point with unequal couplings",
        point: (0.82, 0.61, 1.11, 1.0),
    },
];

/// Catalog of preset names, in listing order.
pub const CATALOG: &[&str] = &[
    "baseline",
    "es1-ep1",
    "es1-ep2",
    "es1-ep3",
    "es1-np",
    "es2-ep1",
    "es2-ep2",
    "es2-ep3",
    "es2-ep4",
    "es2-ep5",
    "es2-np1",
    "fig2a-black",
    "fig2a-red",
    "fig2d-line",
    "fig4-surfaces",
    "fig5-phase-sweep",
];

/// Default loop phases (units of π) for the phase sweep.
pub const DEFAULT_PHASES: [f64; 5] = [1.3, 1.4, 1.5, 1.6, 1.7];

/// γ2 on the straight line through the first-kind points: γ2 = −0.86·γ1 + 1.86 (MHz).
pub fn line_gamma2(gamma1: f64, convention: FrequencyConvention) -> f64 {
    let mhz = convention.mhz();
    let x = gamma1 / mhz;
    if !(0.6..=1.5).contains(&x) {
        warn!("gamma1 = {x} MHz is outside the line's range [0.6, 1.5] MHz");
    }
    (-0.86 * x + 1.86) * mhz
}

fn raw_for(point: (f64, f64, f64, f64), convention: FrequencyConvention) -> Result<RawParams> {
    let mut raw = RawParams::parse(BASE)?;
    let (j, g1, g2, t0) = point;
    raw.insert("J", &format!("{j} MHz"))?;
    raw.insert("gamma1", &format!("{g1} MHz"))?;
    raw.insert("gamma2", &format!("{g2} MHz"))?;
    raw.insert("t0", &format!("{t0}"))?;
    raw.insert(CONVENTION_KEY, &convention.to_string())?;
    Ok(raw)
}

fn point_preset(entry_name: &str, name: &str, description: &str, convention: FrequencyConvention) -> Result<Preset> {
    let entry = POINTS.iter().find(|e| e.name == entry_name).expect("catalog entry");
    let raw = raw_for(entry.point, convention)?;
    let config = ModelConfig::from_raw(&raw)?;
    let mhz = convention.mhz();
    Ok(Preset {
        name: name.to_string(),
        description: description.to_string(),
        raw,
        config,
        grid: Grid::new(-5.0 * mhz, 5.0 * mhz, 2001)?,
        sweep: None,
        phases: None,
        notes: vec![
            "pump detuning delta_a defaults to omega_m".to_string(),
            "probe power defaults to 1e-4 Pc".to_string(),
        ],
    })
}

fn unknown(name: &str) -> Error {
    Error::UnknownPreset {
        name: name.to_string(),
        catalog: CATALOG.iter().map(|s| s.to_string()).collect(),
    }
}

/// Looks up a preset by name.
pub fn preset(name: &str, convention: FrequencyConvention) -> Result<Preset> {
    let mhz = convention.mhz();
    if let Some(entry) = POINTS.iter().find(|e| e.name == name) {
        return point_preset(entry.name, entry.name, entry.description, convention);
    }
    match name {
        "fig2a-black" => point_preset(
            "es1-ep2",
            name,
            "first-kind exceptional point es1-ep2, standard OMIT shape",
            convention,
        ),
        "fig2a-red" => point_preset(
            "es2-ep2",
            name,
            "second-kind exceptional point es2-ep2, window at blue detuning",
            convention,
        ),
        "fig2d-line" => {
            let mut p = point_preset(
                "es1-ep1",
                name,
                "gamma1 swept along the first-kind exceptional line, gamma2 = line_gamma2(gamma1), J = 0",
                convention,
            )?;
            p.sweep = Some(SweepSpec {
                axis: SweepAxis::Gamma1,
                grid: Grid::new(0.7 * mhz, 1.38 * mhz, 50)?,
                constraints: vec![Constraint::Gamma2OnLine],
            });
            Ok(p)
        }
        "fig4-surfaces" => {
            let mut p = point_preset(
                "es2-ep2",
                name,
                "gamma1 = gamma2 swept on the second-kind exceptional surface, J = t0 sqrt(gamma1 gamma2)",
                convention,
            )?;
            p.sweep = Some(SweepSpec {
                axis: SweepAxis::Gamma1,
                grid: Grid::new(0.5 * mhz, 1.5 * mhz, 11)?,
                constraints: vec![Constraint::Gamma2EqualsGamma1, Constraint::JOnEs],
            });
            Ok(p)
        }
        "fig5-phase-sweep" => {
            let mut p = point_preset(
                "es2-ep2",
                name,
                "loop phase phi3 swept around the exceptional-surface value 1.5pi on es2-ep2",
                convention,
            )?;
            p.phases = Some(DEFAULT_PHASES.iter().map(|&x| Phase::from_pi(x)).collect());
            p.notes
                .push("the phase list is a chosen default; phi1 and phi2 follow phi3 unless set".to_string());
            Ok(p)
        }
        _ => Err(unknown(name)),
    }
}

/// Every preset, in catalog order.
pub fn catalog(convention: FrequencyConvention) -> Result<Vec<Preset>> {
    CATALOG.iter().map(|name| preset(name, convention)).collect()
}

/// Configurations along a sweep axis, with constraints applied in order.
pub fn sweep_configs(raw: &RawParams, axis: SweepAxis, values: &[f64], constraints: &[Constraint]) -> Result<Vec<ModelConfig>> {
    if values.is_empty() {
        return Err(Error::BadGrid);
    }
    values
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let mut point = raw.clone();
            point.insert(axis.key(), &axis.entry(v))?;
            for c in constraints {
                let config = ModelConfig::from_raw(&point)?;
                c.apply(&config, &mut point)?;
            }
            ModelConfig::from_raw(&point).map_err(|e| e.at_row(k))
        })
        .collect()
}

fn table_for(config: &ModelConfig, preset: Option<&str>, grid: &[f64], note: Option<String>) -> Result<SpectrumTable> {
    let probe = ProbeResponse::new(Cavity::new(config.params.clone()), config.drive)?;
    let mut table = probe.spectrum(grid, &DelayOptions::default())?;
    table.meta.preset = preset.map(str::to_string);
    table.meta.convention = config.convention;
    table.meta.notes.extend(note);
    Ok(table)
}

/// One spectrum of the preset at its own parameters.
pub fn preset_spectrum(preset: &Preset, grid: &[f64]) -> Result<SpectrumTable> {
    let mut table = table_for(&preset.config, Some(&preset.name), grid, None)?;
    table.meta.notes.extend(preset.notes.iter().cloned());
    Ok(table)
}

/// One spectrum per axis value, in grid order.
pub fn sweep_1d(preset: &Preset, axis: SweepAxis, values: &[f64], constraints: &[Constraint], grid: &[f64]) -> Result<Vec<SpectrumTable>> {
    let configs = sweep_configs(&preset.raw, axis, values, constraints)?;
    configs
        .par_iter()
        .zip(values.par_iter())
        .enumerate()
        .map(|(k, (config, &v))| table_for(config, Some(&preset.name), grid, Some(format!("{axis} = {v:e}"))).map_err(|e| e.at_row(k)))
        .collect()
}

/// One spectrum per loop phase. The 1.5π entry is marked as on the exceptional surface.
pub fn sweep_phase(preset: &Preset, phases: &[Phase], grid: &[f64]) -> Result<Vec<SpectrumTable>> {
    if phases.is_empty() {
        return Err(Error::BadGrid);
    }
    phases
        .par_iter()
        .enumerate()
        .map(|(k, phase)| {
            let mut raw = preset.raw.clone();
            raw.insert("phi3", &phase.to_string())?;
            let config = ModelConfig::from_raw(&raw).map_err(|e| e.at_row(k))?;
            let mut note = format!("phi3 = {phase}");
            if phase_is_special(*phase) {
                note.push_str(" (on the exceptional surface)");
            }
            table_for(&config, Some(&preset.name), grid, Some(note)).map_err(|e| e.at_row(k))
        })
        .collect()
}

fn phase_is_special(phase: Phase) -> bool {
    let offset = (phase.pi_units() - 1.5).rem_euclid(2.0);
    offset.min(2.0 - offset) < 1e-12
}
