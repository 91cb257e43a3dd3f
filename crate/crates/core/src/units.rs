//! Physical units accepted at the interfaces.
//!
//! Everything inside the simulator is SI. Config files and CLI flags may
//! carry a unit suffix (`"105 cm^2/s"`, `"15 uT/cm"`, `"1.1 us"`), which is
//! converted here exactly once.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Dimension exponents over (length, time, magnetic field, angle).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dimension {
    pub length: i8,
    pub time: i8,
    pub field: i8,
    pub angle: i8,
}

impl Dimension {
    pub const NONE: Dimension = Dimension::new(0, 0, 0, 0);
    pub const LENGTH: Dimension = Dimension::new(1, 0, 0, 0);
    pub const TIME: Dimension = Dimension::new(0, 1, 0, 0);
    pub const RATE: Dimension = Dimension::new(0, -1, 0, 0);
    pub const DIFFUSIVITY: Dimension = Dimension::new(2, -1, 0, 0);
    pub const FIELD: Dimension = Dimension::new(0, 0, 1, 0);
    pub const FIELD_GRADIENT: Dimension = Dimension::new(-1, 0, 1, 0);
    pub const DETUNING_SLOPE: Dimension = Dimension::new(-1, -1, 0, 1);

    pub const fn new(length: i8, time: i8, field: i8, angle: i8) -> Self {
        Dimension {
            length,
            time,
            field,
            angle,
        }
    }
}

/// A named unit: a dimension plus the factor that takes it to SI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unit {
    pub symbol: &'static str,
    pub dimension: Dimension,
    pub to_si: f64,
}

const fn unit(symbol: &'static str, dimension: Dimension, to_si: f64) -> Unit {
    Unit {
        symbol,
        dimension,
        to_si,
    }
}

const UNITS: &[Unit] = &[
    unit("1", Dimension::NONE, 1.0),
    unit("m", Dimension::LENGTH, 1.0),
    unit("cm", Dimension::LENGTH, 1e-2),
    unit("mm", Dimension::LENGTH, 1e-3),
    unit("um", Dimension::LENGTH, 1e-6),
    unit("µm", Dimension::LENGTH, 1e-6),
    unit("nm", Dimension::LENGTH, 1e-9),
    unit("s", Dimension::TIME, 1.0),
    unit("ms", Dimension::TIME, 1e-3),
    unit("us", Dimension::TIME, 1e-6),
    unit("µs", Dimension::TIME, 1e-6),
    unit("ns", Dimension::TIME, 1e-9),
    unit("1/s", Dimension::RATE, 1.0),
    unit("1/ms", Dimension::RATE, 1e3),
    unit("1/us", Dimension::RATE, 1e6),
    unit("1/µs", Dimension::RATE, 1e6),
    unit("m^2/s", Dimension::DIFFUSIVITY, 1.0),
    unit("cm^2/s", Dimension::DIFFUSIVITY, 1e-4),
    unit("mm^2/s", Dimension::DIFFUSIVITY, 1e-6),
    unit("T", Dimension::FIELD, 1.0),
    unit("mT", Dimension::FIELD, 1e-3),
    unit("uT", Dimension::FIELD, 1e-6),
    unit("µT", Dimension::FIELD, 1e-6),
    unit("G", Dimension::FIELD, 1e-4),
    unit("T/m", Dimension::FIELD_GRADIENT, 1.0),
    unit("mT/m", Dimension::FIELD_GRADIENT, 1e-3),
    unit("uT/cm", Dimension::FIELD_GRADIENT, 1e-4),
    unit("µT/cm", Dimension::FIELD_GRADIENT, 1e-4),
    unit("G/cm", Dimension::FIELD_GRADIENT, 1e-2),
    unit("rad/s/m", Dimension::DETUNING_SLOPE, 1.0),
    unit("rad/s/cm", Dimension::DETUNING_SLOPE, 1e2),
];

impl Unit {
    pub fn parse(symbol: &str) -> Result<Unit> {
        let symbol = symbol.trim();
        let symbol = if symbol.is_empty() { "1" } else { symbol };
        UNITS
            .iter()
            .find(|u| u.symbol == symbol)
            .copied()
            .ok_or_else(|| Error::UnknownUnit(symbol.to_string()))
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol)
    }
}

/// `value · factor`. Decimal factors shift the exponent of the shortest
/// decimal form of `value`, so `"0.8 us"` lands exactly on `0.8e-6`.
fn to_si(value: f64, factor: f64) -> f64 {
    let k = factor.log10().round();
    if (10f64.powi(k as i32) - factor).abs() <= 1e-15 * factor {
        let text = format!("{value:e}");
        if let Some((mantissa, exp)) = text.split_once('e') {
            if let Ok(e) = exp.parse::<i32>() {
                if let Ok(v) = format!("{mantissa}e{}", e + k as i32).parse::<f64>() {
                    return v;
                }
            }
        }
    }
    value * factor
}

/// Converts `value` expressed in `from` into `to`.
pub fn unit_convert(value: f64, from: &str, to: &str) -> Result<f64> {
    let from = Unit::parse(from)?;
    let to = Unit::parse(to)?;
    convert(value, from, to)
}

pub fn convert(value: f64, from: Unit, to: Unit) -> Result<f64> {
    if from.dimension != to.dimension {
        return Err(Error::IncompatibleUnits {
            from: from.symbol.to_string(),
            to: to.symbol.to_string(),
        });
    }
    if from.to_si == to.to_si {
        return Ok(value);
    }
    Ok(value * from.to_si / to.to_si)
}

/// A number with a unit, as written in config files: `"105 cm^2/s"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantity {
    pub value: f64,
    pub unit: Unit,
}

impl Quantity {
    /// Value in SI, checked against the expected dimension.
    pub fn si(&self, expected: Dimension) -> Result<f64> {
        if self.unit.dimension != expected {
            return Err(Error::IncompatibleUnits {
                from: self.unit.symbol.to_string(),
                to: format!("{expected:?}"),
            });
        }
        Ok(to_si(self.value, self.unit.to_si))
    }
}

impl FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let split = s
            .char_indices()
            .find(|&(i, c)| {
                !(c.is_ascii_digit() || c == '.' || c == '+' || c == '-')
                    && !((c == 'e' || c == 'E') && s[i + 1..].starts_with(|n: char| n.is_ascii_digit() || n == '-' || n == '+'))
            })
            .map(|(i, _)| i)
            .unwrap_or(s.len());
        let (num, sym) = s.split_at(split);
        let value: f64 = num
            .trim()
            .parse()
            .map_err(|_| Error::InvalidInput(format!("cannot parse quantity `{s}`")))?;
        Ok(Quantity {
            value,
            unit: Unit::parse(sym)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diffusion_coefficient_to_si() {
        let d = unit_convert(105.0, "cm^2/s", "m^2/s").unwrap();
        assert!((d - 1.05e-2).abs() < 1e-16);
    }

    #[test]
    fn zero_and_prefixes() {
        assert_eq!(unit_convert(0.0, "us", "s").unwrap(), 0.0);
        assert_eq!(unit_convert(0.0, "cm^2/s", "mm^2/s").unwrap(), 0.0);
        let a = unit_convert(375.0, "um", "m").unwrap();
        assert!((a - 3.75e-4).abs() < 1e-18);
    }

    #[test]
    fn incompatible_dimensions_rejected() {
        assert!(matches!(
            unit_convert(1.0, "us", "m"),
            Err(Error::IncompatibleUnits { .. })
        ));
        assert!(matches!(unit_convert(1.0, "furlong", "m"), Err(Error::UnknownUnit(_))));
    }

    #[test]
    fn parse_quantities() {
        let q: Quantity = "15 uT/cm".parse().unwrap();
        assert_eq!(q.si(Dimension::FIELD_GRADIENT).unwrap(), 15.0 * 1e-4);
        let q: Quantity = "1.1e-6 s".parse().unwrap();
        assert_eq!(q.si(Dimension::TIME).unwrap(), 1.1e-6);
        let q: Quantity = "-2.5us".parse().unwrap();
        assert!((q.si(Dimension::TIME).unwrap() + 2.5e-6).abs() < 1e-20);
        let q: Quantity = "3".parse().unwrap();
        assert_eq!(q.si(Dimension::NONE).unwrap(), 3.0);
        assert!("105 cm^2/s".parse::<Quantity>().unwrap().si(Dimension::TIME).is_err());
    }

    proptest::proptest! {
        #[test]
        fn round_trip_is_identity(v in -1e6f64..1e6, i in 0usize..UNITS.len(), j in 0usize..UNITS.len()) {
            let (a, b) = (UNITS[i], UNITS[j]);
            if a.dimension == b.dimension {
                let there = convert(v, a, b).unwrap();
                let back = convert(there, b, a).unwrap();
                proptest::prop_assert!((back - v).abs() <= 4.0 * f64::EPSILON * v.abs());
            }
        }
    }
}
