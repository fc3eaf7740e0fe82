//! Parameter model of the coupled CW/CCW/mechanical system.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::Phase;

/// Reduced Planck constant [J·s].
pub const HBAR: f64 = 1.054_571_817e-34;
/// Speed of light in vacuum [m/s].
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Static parameters of the resonator, fiber loop and mechanical mode.
///
/// All rates are angular frequencies in rad/s. The optomechanical coupling
/// `g` is `omega0 / radius` unless `g_override` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub omega0: f64,
    pub gamma0: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    /// Symmetric backscattering coupling J.
    pub j: f64,
    pub t0: f64,
    pub phi1: Phase,
    pub phi2: Phase,
    pub phi3: Phase,
    pub radius: f64,
    pub mass: f64,
    pub omega_m: f64,
    pub gamma_m: f64,
    pub g_override: Option<f64>,
}

impl SystemParams {
    /// Optomechanical coupling per displacement [rad/(s·m)].
    pub fn g(&self) -> f64 {
        self.g_override.unwrap_or(self.omega0 / self.radius)
    }

    /// Total half-linewidth (γ0 + γ1 + γ2)/2.
    pub fn gamma_half(&self) -> f64 {
        (self.gamma0 + self.gamma1 + self.gamma2) / 2.0
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("omega0", self.omega0),
            ("gamma0", self.gamma0),
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
            ("J", self.j),
            ("t0", self.t0),
            ("phi1", self.phi1.pi_units()),
            ("phi2", self.phi2.pi_units()),
            ("phi3", self.phi3.pi_units()),
            ("R", self.radius),
            ("m", self.mass),
            ("omega_m", self.omega_m),
            ("gamma_m", self.gamma_m),
            ("g", self.g()),
        ];
        if let Some((field, _)) = finite.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { field: field.to_string() });
        }
        let positive = [
            ("omega0", self.omega0),
            ("gamma0", self.gamma0),
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
            ("R", self.radius),
            ("m", self.mass),
            ("omega_m", self.omega_m),
            ("gamma_m", self.gamma_m),
        ];
        for (field, value) in positive {
            if value <= 0.0 {
                return Err(Error::NegativeRate {
                    field: field.into(),
                    value,
                    requirement: "> 0",
                });
            }
        }
        for (field, value) in [("J", self.j), ("g", self.g())] {
            if value < 0.0 {
                return Err(Error::NegativeRate {
                    field: field.into(),
                    value,
                    requirement: ">= 0",
                });
            }
        }
        if !(0.0..=1.0).contains(&self.t0) {
            return Err(Error::T0OutOfRange(self.t0));
        }
        Ok(())
    }
}

/// Pump and probe fields. Frequencies are absolute angular frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Drive {
    pub pump_power: f64,
    pub probe_power: f64,
    pub omega_c: f64,
    pub omega_p: f64,
}

impl Drive {
    /// Pump detuned by `delta_a` below the cavity, probe at the cavity frequency,
    /// probe power `1e-4` of the pump.
    pub fn detuned(params: &SystemParams, pump_power: f64, delta_a: f64) -> Drive {
        Drive {
            pump_power,
            probe_power: 1e-4 * pump_power,
            omega_c: params.omega0 - delta_a,
            omega_p: params.omega0,
        }
    }

    /// Pump detuning Δa = ω0 − ωc.
    pub fn pump_detuning(&self, params: &SystemParams) -> f64 {
        params.omega0 - self.omega_c
    }

    /// Same drive with the probe at `omega0 + delta_p`.
    pub fn with_probe_detuning(&self, params: &SystemParams, delta_p: f64) -> Drive {
        Drive {
            omega_p: params.omega0 + delta_p,
            ..*self
        }
    }

    pub fn with_probe_power(&self, probe_power: f64) -> Drive {
        Drive { probe_power, ..*self }
    }
}

/// Drive amplitudes `(Ec, Ep)` in √(photons/s).
pub fn drive_amplitudes(drive: &Drive) -> Result<(f64, f64)> {
    for (field, value) in [("omega_c", drive.omega_c), ("omega_p", drive.omega_p)] {
        if !(value > 0.0) {
            return Err(Error::NonPositiveFrequency {
                field: field.into(),
                value,
            });
        }
    }
    if !(drive.pump_power >= 0.0) || !(drive.probe_power >= 0.0) {
        return Err(Error::Invalid("drive powers must be non-negative".into()));
    }
    let ec = (drive.pump_power / (HBAR * drive.omega_c)).sqrt();
    let ep = (drive.probe_power / (HBAR * drive.omega_p)).sqrt();
    Ok((ec, ep))
}

/// Rates derived from [`SystemParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedRates {
    pub gamma_half: f64,
    /// Unidirectional coupling magnitude t0·√(γ1γ2).
    pub s: f64,
    pub t1: Complex64,
    pub t2: Complex64,
    pub t3: Complex64,
    /// λ = i·√(γ1γ2)·t3.
    pub lambda: Complex64,
}

fn transmission(t0: f64, phase: Phase) -> Complex64 {
    let (s, c) = phase.sin_cos();
    Complex64::new(t0 * c, t0 * s)
}

pub fn derived_rates(params: &SystemParams) -> DerivedRates {
    let root = (params.gamma1 * params.gamma2).sqrt();
    let t3 = transmission(params.t0, params.phi3);
    DerivedRates {
        gamma_half: params.gamma_half(),
        s: params.t0 * root,
        t1: transmission(params.t0, params.phi1),
        t2: transmission(params.t0, params.phi2),
        t3,
        lambda: Complex64::i() * root * t3,
    }
}

/// A parameter set together with the complex transmissions used by the
/// dynamical equations.
///
/// [`Cavity::new`] derives the transmissions from the parameters. The
/// `with_*` methods replace individual transmissions to build reduced
/// reference configurations (for example a cut fiber loop, `t3 = 0`); those
/// configurations no longer satisfy `|t_j| = t0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cavity {
    pub params: SystemParams,
    pub rates: DerivedRates,
    pub reduced: bool,
}

impl Cavity {
    pub fn new(params: SystemParams) -> Cavity {
        let rates = derived_rates(&params);
        Cavity {
            params,
            rates,
            reduced: false,
        }
    }

    pub fn with_t1(mut self, t1: Complex64) -> Cavity {
        self.rates.t1 = t1;
        self.reduced = true;
        self
    }

    pub fn with_t2(mut self, t2: Complex64) -> Cavity {
        self.rates.t2 = t2;
        self.reduced = true;
        self
    }

    pub fn with_t3(mut self, t3: Complex64) -> Cavity {
        let root = (self.params.gamma1 * self.params.gamma2).sqrt();
        self.rates.t3 = t3;
        self.rates.lambda = Complex64::i() * root * t3;
        self.reduced = true;
        self
    }

    /// √(γ1γ2)·t3, the loop term entering the amplitude equations.
    pub fn loop_coupling(&self) -> Complex64 {
        (self.params.gamma1 * self.params.gamma2).sqrt() * self.rates.t3
    }
}

impl From<SystemParams> for Cavity {
    fn from(params: SystemParams) -> Self {
        Cavity::new(params)
    }
}
