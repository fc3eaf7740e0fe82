//! Quantities with SI unit suffixes.
//!
//! Frequencies are stored as angular frequencies in rad/s. Under the
//! [`FrequencyConvention::Angular`] convention a value written as `147 MHz`
//! is taken to mean 147e6 rad/s; under [`FrequencyConvention::Cyclic`] it is
//! multiplied by 2π on ingestion.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrequencyConvention {
    #[default]
    Angular,
    Cyclic,
}

impl FrequencyConvention {
    /// Multiplier applied to frequency values written with a Hz-family suffix.
    pub fn factor(self) -> f64 {
        match self {
            FrequencyConvention::Angular => 1.0,
            FrequencyConvention::Cyclic => 2.0 * PI,
        }
    }

    /// One "MHz" in rad/s under this convention.
    pub fn mhz(self) -> f64 {
        1e6 * self.factor()
    }
}

impl FromStr for FrequencyConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "angular" => Ok(FrequencyConvention::Angular),
            "cyclic" => Ok(FrequencyConvention::Cyclic),
            other => Err(Error::BadQuantity {
                field: "frequency-convention".into(),
                input: other.into(),
                reason: "expected `angular` or `cyclic`".into(),
            }),
        }
    }
}

impl fmt::Display for FrequencyConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FrequencyConvention::Angular => f.write_str("angular"),
            FrequencyConvention::Cyclic => f.write_str("cyclic"),
        }
    }
}

/// Physical dimension expected by a configuration key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Frequency,
    Length,
    Mass,
    Power,
    Angle,
    Time,
    Dimensionless,
}

struct Unit {
    symbol: &'static str,
    dimension: Dimension,
    scale: f64,
}

const UNITS: &[Unit] = &[
    Unit {
        symbol: "Hz",
        dimension: Dimension::Frequency,
        scale: 1.0,
    },
    Unit {
        symbol: "kHz",
        dimension: Dimension::Frequency,
        scale: 1e3,
    },
    Unit {
        symbol: "MHz",
        dimension: Dimension::Frequency,
        scale: 1e6,
    },
    Unit {
        symbol: "GHz",
        dimension: Dimension::Frequency,
        scale: 1e9,
    },
    Unit {
        symbol: "THz",
        dimension: Dimension::Frequency,
        scale: 1e12,
    },
    Unit {
        symbol: "m",
        dimension: Dimension::Length,
        scale: 1.0,
    },
    Unit {
        symbol: "mm",
        dimension: Dimension::Length,
        scale: 1e-3,
    },
    Unit {
        symbol: "µm",
        dimension: Dimension::Length,
        scale: 1e-6,
    },
    Unit {
        symbol: "um",
        dimension: Dimension::Length,
        scale: 1e-6,
    },
    Unit {
        symbol: "nm",
        dimension: Dimension::Length,
        scale: 1e-9,
    },
    Unit {
        symbol: "kg",
        dimension: Dimension::Mass,
        scale: 1.0,
    },
    Unit {
        symbol: "g",
        dimension: Dimension::Mass,
        scale: 1e-3,
    },
    Unit {
        symbol: "mg",
        dimension: Dimension::Mass,
        scale: 1e-6,
    },
    Unit {
        symbol: "µg",
        dimension: Dimension::Mass,
        scale: 1e-9,
    },
    Unit {
        symbol: "ug",
        dimension: Dimension::Mass,
        scale: 1e-9,
    },
    Unit {
        symbol: "ng",
        dimension: Dimension::Mass,
        scale: 1e-12,
    },
    Unit {
        symbol: "pg",
        dimension: Dimension::Mass,
        scale: 1e-15,
    },
    Unit {
        symbol: "W",
        dimension: Dimension::Power,
        scale: 1.0,
    },
    Unit {
        symbol: "mW",
        dimension: Dimension::Power,
        scale: 1e-3,
    },
    Unit {
        symbol: "µW",
        dimension: Dimension::Power,
        scale: 1e-6,
    },
    Unit {
        symbol: "uW",
        dimension: Dimension::Power,
        scale: 1e-6,
    },
    Unit {
        symbol: "nW",
        dimension: Dimension::Power,
        scale: 1e-9,
    },
    Unit {
        symbol: "rad",
        dimension: Dimension::Angle,
        scale: 1.0,
    },
    Unit {
        symbol: "pi",
        dimension: Dimension::Angle,
        scale: PI,
    },
    Unit {
        symbol: "s",
        dimension: Dimension::Time,
        scale: 1.0,
    },
    Unit {
        symbol: "ms",
        dimension: Dimension::Time,
        scale: 1e-3,
    },
    Unit {
        symbol: "µs",
        dimension: Dimension::Time,
        scale: 1e-6,
    },
    Unit {
        symbol: "us",
        dimension: Dimension::Time,
        scale: 1e-6,
    },
    Unit {
        symbol: "ns",
        dimension: Dimension::Time,
        scale: 1e-9,
    },
];

fn lookup(symbol: &str) -> Option<&'static Unit> {
    UNITS.iter().find(|u| u.symbol == symbol)
}

fn split_number(input: &str) -> (&str, &str) {
    let s = input.trim();
    let mut end = 0;
    let bytes = s.as_bytes();
    while end < bytes.len() {
        let c = bytes[end] as char;
        let exponent_sign = (c == '+' || c == '-') && end > 0 && matches!(bytes[end - 1], b'e' | b'E');
        let exponent =
            (c == 'e' || c == 'E') && end > 0 && bytes.get(end + 1).is_some_and(|n| n.is_ascii_digit() || *n == b'-' || *n == b'+');
        if c.is_ascii_digit() || c == '.' || (end == 0 && (c == '-' || c == '+')) || exponent || exponent_sign {
            end += 1;
        } else {
            break;
        }
    }
    (&s[..end], s[end..].trim())
}

/// Parses `"<number> [unit]"` into the SI value of `dimension`.
///
/// A bare number is taken in SI base units (rad for angles). Hz-family
/// suffixes are scaled by `convention`; bare frequencies are not.
pub fn parse_quantity(field: &str, input: &str, dimension: Dimension, convention: FrequencyConvention) -> Result<f64> {
    let bad = |reason: String| Error::BadQuantity {
        field: field.to_string(),
        input: input.to_string(),
        reason,
    };
    let (number, suffix) = split_number(input);
    let value: f64 = if number.is_empty() && suffix == "pi" {
        1.0
    } else {
        number.parse().map_err(|_| bad("not a number".into()))?
    };
    if !value.is_finite() {
        return Err(Error::NonFinite { field: field.to_string() });
    }
    if suffix.is_empty() {
        return Ok(value);
    }
    let unit = lookup(suffix).ok_or_else(|| bad(format!("unknown unit `{suffix}`")))?;
    if unit.dimension != dimension {
        return Err(bad(format!("unit `{suffix}` does not match {dimension:?}")));
    }
    let mut si = value * unit.scale;
    if dimension == Dimension::Frequency {
        si *= convention.factor();
    }
    Ok(si)
}

/// Formats an SI value in the given unit, e.g. `format_quantity(1.47e8, "MHz") == "147 MHz"`.
///
/// Inverse of [`parse_quantity`] under the angular convention.
pub fn format_quantity(value: f64, symbol: &str) -> Option<String> {
    let unit = lookup(symbol)?;
    Some(format!("{} {}", value / unit.scale, unit.symbol))
}

/// An angle stored in units of π so that quarter turns stay exact.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Phase {
    pi: f64,
}

impl Phase {
    pub const fn from_pi(multiple: f64) -> Self {
        Phase { pi: multiple }
    }

    pub fn from_radians(rad: f64) -> Self {
        Phase { pi: rad / PI }
    }

    /// Value in units of π.
    pub fn pi_units(self) -> f64 {
        self.pi
    }

    pub fn radians(self) -> f64 {
        self.pi * PI
    }

    /// `(sin, cos)` of the angle; exact at integer multiples of π/2.
    pub fn sin_cos(self) -> (f64, f64) {
        let r = self.pi.rem_euclid(2.0);
        let quarter = (2.0 * r).round();
        let rest = (r - quarter / 2.0) * PI;
        let (s, c) = if rest == 0.0 { (0.0, 1.0) } else { rest.sin_cos() };
        match quarter as i64 % 4 {
            0 => (s, c),
            1 => (c, -s),
            2 => (-s, -c),
            _ => (-c, s),
        }
    }

    /// Parses `1.5pi`, `pi` or a value in radians.
    pub fn parse(field: &str, input: &str) -> Result<Self> {
        let (number, suffix) = split_number(input);
        if suffix == "pi" {
            let multiple = if number.is_empty() {
                1.0
            } else {
                number.parse().map_err(|_| Error::BadQuantity {
                    field: field.into(),
                    input: input.into(),
                    reason: "not a number".into(),
                })?
            };
            return Ok(Phase::from_pi(multiple));
        }
        parse_quantity(field, input, Dimension::Angle, FrequencyConvention::Angular).map(Phase::from_radians)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}pi", self.pi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_common_suffixes() {
        let a = FrequencyConvention::Angular;
        assert_eq!(parse_quantity("w", "147 MHz", Dimension::Frequency, a).unwrap(), 147e6);
        assert_eq!(parse_quantity("w", "193THz", Dimension::Frequency, a).unwrap(), 193e12);
        assert_eq!(parse_quantity("R", "34.5 µm", Dimension::Length, a).unwrap(), 34.5e-6);
        assert_eq!(parse_quantity("R", "34.5 um", Dimension::Length, a).unwrap(), 34.5e-6);
        assert_eq!(parse_quantity("m", "50 ng", Dimension::Mass, a).unwrap(), 50e-12);
        assert_eq!(parse_quantity("Pc", "1 mW", Dimension::Power, a).unwrap(), 1e-3);
        assert_eq!(parse_quantity("Pc", "1e-3", Dimension::Power, a).unwrap(), 1e-3);
        assert_eq!(parse_quantity("g", "-1 MHz", Dimension::Frequency, a).unwrap(), -1e6);
    }

    #[test]
    fn cyclic_convention_scales_only_hz_suffixes() {
        let c = FrequencyConvention::Cyclic;
        let v = parse_quantity("w", "1 MHz", Dimension::Frequency, c).unwrap();
        assert!((v - 2.0 * PI * 1e6).abs() < 1e-6);
        assert_eq!(parse_quantity("w", "5", Dimension::Frequency, c).unwrap(), 5.0);
        assert_eq!(parse_quantity("R", "1 m", Dimension::Length, c).unwrap(), 1.0);
    }

    #[test]
    fn rejects_wrong_dimension_and_garbage() {
        let a = FrequencyConvention::Angular;
        assert!(parse_quantity("R", "1 MHz", Dimension::Length, a).is_err());
        assert!(parse_quantity("R", "abc", Dimension::Length, a).is_err());
        assert!(parse_quantity("R", "1 furlong", Dimension::Length, a).is_err());
        assert!(matches!(
            parse_quantity("R", "inf", Dimension::Length, a),
            Err(Error::BadQuantity { .. }) | Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn phases_parse_in_pi_units_and_radians() {
        assert_eq!(Phase::parse("phi3", "1.5pi").unwrap().pi_units(), 1.5);
        assert_eq!(Phase::parse("phi3", "1.5 pi").unwrap().pi_units(), 1.5);
        assert_eq!(Phase::parse("phi3", "pi").unwrap().pi_units(), 1.0);
        let p = Phase::parse("phi3", "2.5 rad").unwrap();
        assert!((p.radians() - 2.5).abs() < 1e-15);
    }

    #[test]
    fn sin_cos_is_exact_on_quarter_turns() {
        assert_eq!(Phase::from_pi(1.5).sin_cos(), (-1.0, 0.0));
        assert_eq!(Phase::from_pi(0.5).sin_cos(), (1.0, 0.0));
        assert_eq!(Phase::from_pi(1.0).sin_cos(), (0.0, -1.0));
        assert_eq!(Phase::from_pi(-0.5).sin_cos(), (-1.0, 0.0));
        assert_eq!(Phase::from_pi(2.0).sin_cos(), (0.0, 1.0));
    }

    proptest! {
        #[test]
        fn sin_cos_matches_std(x in -4.0f64..4.0) {
            let (s, c) = Phase::from_pi(x).sin_cos();
            let (s0, c0) = (x * PI).sin_cos();
            prop_assert!((s - s0).abs() < 1e-14);
            prop_assert!((c - c0).abs() < 1e-14);
        }

        #[test]
        fn mhz_round_trip(v in 1e-3f64..1e6) {
            let text = format_quantity(v * 1e6, "MHz").unwrap();
            let back = parse_quantity("x", &text, Dimension::Frequency, FrequencyConvention::Angular).unwrap();
            prop_assert!(((back - v * 1e6) / (v * 1e6)).abs() <= 1e-12);
        }
    }

    #[test]
    fn formats_147_mhz() {
        assert_eq!(format_quantity(147e6, "MHz").unwrap(), "147 MHz");
        let back = parse_quantity("x", "147 MHz", Dimension::Frequency, FrequencyConvention::Angular).unwrap();
        assert_eq!(format_quantity(back, "MHz").unwrap(), "147 MHz");
    }
}
