//! Mapping from microscopic quantities to coupling rates, and a check of
//! parameters against experimentally reported ranges.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{SystemParams, SPEED_OF_LIGHT};
use crate::units::FrequencyConvention;

/// A scatterer in the evanescent field of the resonator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NanoparticleSpec {
    /// Polarizability [m³].
    pub alpha_pol: f64,
    /// Normalized field distribution at the particle, in [0, 1].
    pub f_at_r: f64,
    /// Mode volume [m³].
    pub v_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NanoparticleCoupling {
    /// |J| [rad/s].
    pub j: f64,
    /// Sign of the frequency shift −α f² ω0/(2Vm): −1, 0 or +1.
    pub sign: f64,
}

/// J = |α f² ω0 / Vm| / 2.
pub fn coupling_from_nanoparticle(spec: &NanoparticleSpec, omega0: f64) -> Result<NanoparticleCoupling> {
    if !(spec.v_m > 0.0) {
        return Err(Error::ZeroModeVolume);
    }
    if !(0.0..=1.0).contains(&spec.f_at_r) {
        return Err(Error::Invalid(format!("f(r) must lie in [0, 1], got {}", spec.f_at_r)));
    }
    if !spec.alpha_pol.is_finite() || !omega0.is_finite() {
        return Err(Error::NonFinite { field: "alpha_pol".into() });
    }
    let shift = -spec.alpha_pol * spec.f_at_r * spec.f_at_r * omega0 / spec.v_m / 2.0;
    let sign = if shift == 0.0 { 0.0 } else { shift.signum() };
    Ok(NanoparticleCoupling { j: shift.abs(), sign })
}

/// Fiber–resonator coupling geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberCouplingSpec {
    /// Mode overlap factor η.
    pub eta: f64,
    /// Refractive index.
    pub n: f64,
    /// Resonator radius [m].
    pub radius: f64,
}

/// γ = η / (2τc) with round-trip time τc = 2nπR/c.
pub fn fiber_coupling_rate(spec: &FiberCouplingSpec) -> Result<f64> {
    if !(spec.eta >= 0.0) {
        return Err(Error::Invalid(format!("eta must be non-negative, got {}", spec.eta)));
    }
    if !(spec.n >= 1.0) {
        return Err(Error::Invalid(format!("refractive index must be at least 1, got {}", spec.n)));
    }
    if !(spec.radius > 0.0) {
        return Err(Error::NegativeRate {
            field: "R".into(),
            value: spec.radius,
            requirement: "> 0",
        });
    }
    Ok(spec.eta * SPEED_OF_LIGHT / (4.0 * spec.n * PI * spec.radius))
}

/// One set of reported ranges, bounds in MHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportedRange {
    pub label: &'static str,
    pub gamma: Option<(f64, f64)>,
    pub j: Option<(f64, f64)>,
}

pub const REPORTED_RANGES: [ReportedRange; 4] = [
    ReportedRange {
        label: "gamma 5.57-11.98 MHz, J 0.22-7.11 MHz",
        gamma: Some((5.57, 11.98)),
        j: Some((0.22, 7.11)),
    },
    ReportedRange {
        label: "J 0-200 MHz",
        gamma: None,
        j: Some((0.0, 200.0)),
    },
    ReportedRange {
        label: "gamma 0.1-3 MHz, J 0.87 MHz",
        gamma: Some((0.1, 3.0)),
        j: Some((0.87, 0.87)),
    },
    ReportedRange {
        label: "gamma 0.87-5.84 MHz",
        gamma: Some((0.87, 5.84)),
        j: None,
    },
];

/// Overall accepted bounds in MHz.
pub const GAMMA_BOUNDS: (f64, f64) = (0.1, 12.0);
pub const J_BOUNDS: (f64, f64) = (0.0, 200.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeRow {
    pub label: String,
    pub gamma1_in: Option<bool>,
    pub gamma2_in: Option<bool>,
    pub j_in: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeReport {
    pub gamma1_mhz: f64,
    pub gamma2_mhz: f64,
    pub j_mhz: f64,
    pub gamma1_in_range: bool,
    pub gamma2_in_range: bool,
    pub j_in_range: bool,
    pub rows: Vec<RangeRow>,
    pub warnings: Vec<String>,
}

impl RangeReport {
    pub fn all_in_range(&self) -> bool {
        self.gamma1_in_range && self.gamma2_in_range && self.j_in_range
    }
}

fn within(x: f64, (lo, hi): (f64, f64)) -> bool {
    const SLACK: f64 = 1e-9;
    x >= lo - SLACK && x <= hi + SLACK
}

/// Compares γ1, γ2 and J with the reported ranges. Never modifies `params`.
pub fn check_ranges(params: &SystemParams, convention: FrequencyConvention) -> RangeReport {
    let mhz = convention.mhz();
    let (g1, g2, j) = (params.gamma1 / mhz, params.gamma2 / mhz, params.j / mhz);
    let rows = REPORTED_RANGES
        .iter()
        .map(|r| RangeRow {
            label: r.label.to_string(),
            gamma1_in: r.gamma.map(|b| within(g1, b)),
            gamma2_in: r.gamma.map(|b| within(g2, b)),
            j_in: r.j.map(|b| within(j, b)),
        })
        .collect();

    let mut warnings = Vec::new();
    for (name, value) in [("gamma1", g1), ("gamma2", g2)] {
        if value < GAMMA_BOUNDS.0 {
            warnings.push(format!("{name} = {value} MHz is below the reported range (gamma 0.1-3 MHz)"));
        } else if value > GAMMA_BOUNDS.1 {
            warnings.push(format!("{name} = {value} MHz is above the reported range (gamma 5.57-11.98 MHz)"));
        }
    }
    if j > J_BOUNDS.1 {
        warnings.push(format!("J = {j} MHz is above the reported range (J 0-200 MHz)"));
    }
    RangeReport {
        gamma1_mhz: g1,
        gamma2_mhz: g2,
        j_mhz: j,
        gamma1_in_range: within(g1, GAMMA_BOUNDS),
        gamma2_in_range: within(g2, GAMMA_BOUNDS),
        j_in_range: within(j, J_BOUNDS),
        rows,
        warnings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{build_system, RawParams};
    use crate::model::fixtures::baseline;

    const MHZ: f64 = 1e6;
    const ANG: FrequencyConvention = FrequencyConvention::Angular;

    fn particle() -> NanoparticleSpec {
        NanoparticleSpec {
            alpha_pol: 1e-21,
            f_at_r: 0.4,
            v_m: 1e-15,
        }
    }

    #[test]
    fn particle_outside_the_field_does_not_couple() {
        let c = coupling_from_nanoparticle(&NanoparticleSpec { f_at_r: 0.0, ..particle() }, 193e12).unwrap();
        assert_eq!((c.j, c.sign), (0.0, 0.0));
    }

    #[test]
    fn coupling_scales_inversely_with_mode_volume() {
        let a = coupling_from_nanoparticle(&particle(), 193e12).unwrap();
        let b = coupling_from_nanoparticle(&NanoparticleSpec { v_m: 2e-15, ..particle() }, 193e12).unwrap();
        assert!((a.j / b.j - 2.0).abs() < 1e-12);
        assert_eq!(a.sign, -1.0);
        let c = coupling_from_nanoparticle(
            &NanoparticleSpec {
                alpha_pol: 3e-21,
                ..particle()
            },
            193e12,
        )
        .unwrap();
        assert!((c.j / a.j - 3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_mode_volume_is_rejected() {
        let spec = NanoparticleSpec { v_m: 0.0, ..particle() };
        assert_eq!(coupling_from_nanoparticle(&spec, 193e12), Err(Error::ZeroModeVolume));
    }

    #[test]
    fn designed_particle_gives_reported_coupling() {
        let (f, v_m, omega0) = (0.5, 1e-15, 193e12);
        let alpha_pol = 2.0 * 0.87 * MHZ * v_m / (f * f * omega0);
        let c = coupling_from_nanoparticle(&NanoparticleSpec { alpha_pol, f_at_r: f, v_m }, omega0).unwrap();
        assert!((c.j - 0.87 * MHZ).abs() <= 1e-12 * 0.87 * MHZ);
        let mut raw = RawParams::parse(
            "R = 34.5 um\nomega0 = 193 THz\ngamma0 = 1 MHz\nm = 50 ng\nomega_m = 147 MHz\ngamma_m = 0.24 MHz\ngamma1 = 1 MHz\ngamma2 = 1 MHz\nt0 = 1\nphi3 = 1.5pi",
        )
        .unwrap();
        raw.insert("J", &format!("{:e}", c.j)).unwrap();
        assert_eq!(build_system(&raw).unwrap().j, c.j);
    }

    #[test]
    fn fiber_rate_inverts() {
        assert_eq!(
            fiber_coupling_rate(&FiberCouplingSpec {
                eta: 0.0,
                n: 1.45,
                radius: 34.5e-6
            })
            .unwrap(),
            0.0
        );
        let (n, radius) = (1.45, 34.5e-6);
        let eta = MHZ * 4.0 * n * PI * radius / SPEED_OF_LIGHT;
        let gamma = fiber_coupling_rate(&FiberCouplingSpec { eta, n, radius }).unwrap();
        assert!((gamma - MHZ).abs() <= 1e-12 * MHZ);
    }

    #[test]
    fn fiber_rate_is_linear_in_eta_and_inverse_in_radius() {
        let base = FiberCouplingSpec {
            eta: 1e-3,
            n: 1.45,
            radius: 34.5e-6,
        };
        let g = fiber_coupling_rate(&base).unwrap();
        let g2 = fiber_coupling_rate(&FiberCouplingSpec { eta: 2e-3, ..base }).unwrap();
        let g3 = fiber_coupling_rate(&FiberCouplingSpec { radius: 69e-6, ..base }).unwrap();
        assert!((g2 / g - 2.0).abs() < 1e-12);
        assert!((g / g3 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn exceptional_point_is_in_range() {
        let p = SystemParams { j: MHZ, ..baseline() };
        let report = check_ranges(&p, ANG);
        assert!(report.all_in_range());
        assert!(report.warnings.is_empty());
        let both: Vec<_> = report.rows.iter().filter(|r| r.gamma1_in.is_some() && r.j_in.is_some()).collect();
        assert_eq!(both.len(), 2);
    }

    #[test]
    fn strong_scatterer_is_flagged() {
        let p = SystemParams {
            j: 500.0 * MHZ,
            ..baseline()
        };
        let before = p.clone();
        let report = check_ranges(&p, ANG);
        assert!(!report.j_in_range);
        assert!(report.warnings.iter().any(|w| w.contains("0-200 MHz")));
        assert_eq!(p, before);
    }

    #[test]
    fn weak_coupling_is_flagged() {
        let p = SystemParams {
            gamma1: 0.05 * MHZ,
            ..baseline()
        };
        let report = check_ranges(&p, ANG);
        assert!(!report.gamma1_in_range);
        assert!(report.warnings.iter().any(|w| w.contains("gamma1") && w.contains("0.1-3 MHz")));
    }
}
