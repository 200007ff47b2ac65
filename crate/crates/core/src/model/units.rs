//! Conversion from the quoted physical units into the internal system
//! (ħ = 1, energy in MeV, time in MeV⁻¹).

use std::fmt;
use std::str::FromStr;

use crate::{Error, Real};

/// ħ in MeV·s.
pub const HBAR_MEV_S: f64 = 6.582119569e-22;
const HBAR_SQ: f64 = HBAR_MEV_S * HBAR_MEV_S;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Unit {
    /// Energies, and couplings quoted as energies.
    MeV,
    /// Rates and angular frequencies, quoted as ħω or ħλ in MeV.
    MeVPerHbar,
    /// Mass parameters.
    Hbar2PerMeV,
    Seconds,
    /// Inverse-mass couplings (κ, α) quoted in MeV⁻¹·s⁻².
    PerMeVPerS2,
}

impl Unit {
    pub const ALL: [Unit; 5] = [
        Unit::MeV,
        Unit::MeVPerHbar,
        Unit::Hbar2PerMeV,
        Unit::Seconds,
        Unit::PerMeVPerS2,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Unit::MeV => "MeV",
            Unit::MeVPerHbar => "MeV/hbar",
            Unit::Hbar2PerMeV => "hbar^2/MeV",
            Unit::Seconds => "s",
            Unit::PerMeVPerS2 => "MeV^-1 s^-2",
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Unit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let unit = match s.trim() {
            "MeV" => Unit::MeV,
            "MeV/hbar" | "MeV/ħ" => Unit::MeVPerHbar,
            "hbar^2/MeV" | "ħ²/MeV" => Unit::Hbar2PerMeV,
            "s" | "seconds" => Unit::Seconds,
            "MeV^-1 s^-2" | "MeV⁻¹·s⁻²" | "1/(MeV s^2)" => Unit::PerMeVPerS2,
            other => return Err(Error::UnknownUnit(other.to_string())),
        };
        Ok(unit)
    }
}

/// Convert `value` expressed in `unit` into internal units.
pub fn unit_convert<T: Real>(value: T, unit: Unit) -> T {
    match unit {
        Unit::MeV | Unit::MeVPerHbar | Unit::Hbar2PerMeV => value,
        Unit::Seconds => value / T::lit(HBAR_MEV_S),
        Unit::PerMeVPerS2 => value * T::lit(HBAR_SQ),
    }
}

/// Inverse of [`unit_convert`].
pub fn from_internal<T: Real>(value: T, unit: Unit) -> T {
    match unit {
        Unit::MeV | Unit::MeVPerHbar | Unit::Hbar2PerMeV => value,
        Unit::Seconds => value * T::lit(HBAR_MEV_S),
        Unit::PerMeVPerS2 => value / T::lit(HBAR_SQ),
    }
}

/// String-tagged variant of [`unit_convert`].
pub fn unit_convert_tagged<T: Real>(value: T, tag: &str) -> Result<T, Error> {
    Ok(unit_convert(value, tag.parse()?))
}
