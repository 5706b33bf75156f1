//! Collective-mode labels, photon polarizations and qubit rails.

use core::fmt;
use core::str::FromStr;

use crate::error::Error;

/// One collective single-excitation mode of an ensemble.
///
/// The reservoir `g` is not a mode: a mode is either occupied by one
/// collective excitation or empty, and "empty" means the atoms sit in `g`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ModeLabel {
    U,
    D,
    UT,
    DT,
    RU,
    RD,
    EU,
    ED,
}

impl ModeLabel {
    pub const ALL: [ModeLabel; 8] = [
        ModeLabel::U,
        ModeLabel::D,
        ModeLabel::UT,
        ModeLabel::DT,
        ModeLabel::RU,
        ModeLabel::RD,
        ModeLabel::EU,
        ModeLabel::ED,
    ];

    pub const fn bit(self) -> u8 {
        1 << (self as u8)
    }

    pub const fn is_rydberg(self) -> bool {
        matches!(self, ModeLabel::RU | ModeLabel::RD)
    }

    pub const fn is_intermediate(self) -> bool {
        matches!(self, ModeLabel::EU | ModeLabel::ED)
    }

    pub const fn name(self) -> &'static str {
        match self {
            ModeLabel::U => "u",
            ModeLabel::D => "d",
            ModeLabel::UT => "u_t",
            ModeLabel::DT => "d_t",
            ModeLabel::RU => "R_u",
            ModeLabel::RD => "R_d",
            ModeLabel::EU => "e_u",
            ModeLabel::ED => "e_d",
        }
    }

    /// Intermediate state a Rydberg mode decays through on readout, and the
    /// circular polarization of the photon emitted on the way back to `g`.
    pub const fn readout_channel(self) -> Option<(ModeLabel, Polarization)> {
        match self {
            ModeLabel::RU => Some((ModeLabel::EU, Polarization::SigmaPlus)),
            ModeLabel::RD => Some((ModeLabel::ED, Polarization::SigmaMinus)),
            _ => None,
        }
    }
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModeLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ModeLabel::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Parse(alloc::format!("unknown mode `{s}`")))
    }
}

/// A pulse endpoint: either the implicit reservoir or a named mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Level {
    Reservoir,
    Mode(ModeLabel),
}

impl Level {
    pub const fn mode(self) -> Option<ModeLabel> {
        match self {
            Level::Reservoir => None,
            Level::Mode(m) => Some(m),
        }
    }
}

impl From<ModeLabel> for Level {
    fn from(m: ModeLabel) -> Self {
        Level::Mode(m)
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Level::Reservoir => f.write_str("g"),
            Level::Mode(m) => m.fmt(f),
        }
    }
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "g" {
            Ok(Level::Reservoir)
        } else {
            s.parse().map(Level::Mode)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Polarization {
    SigmaPlus,
    SigmaMinus,
    H,
    V,
}

impl Polarization {
    /// Quarter-wave-plate mapping: sigma- to H, sigma+ to V (and back).
    pub const fn through_waveplate(self) -> Polarization {
        match self {
            Polarization::SigmaMinus => Polarization::H,
            Polarization::SigmaPlus => Polarization::V,
            Polarization::H => Polarization::SigmaMinus,
            Polarization::V => Polarization::SigmaPlus,
        }
    }

    pub const fn is_linear(self) -> bool {
        matches!(self, Polarization::H | Polarization::V)
    }

    pub const fn name(self) -> &'static str {
        match self {
            Polarization::SigmaPlus => "s+",
            Polarization::SigmaMinus => "s-",
            Polarization::H => "H",
            Polarization::V => "V",
        }
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Polarization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "s+" => Ok(Polarization::SigmaPlus),
            "s-" => Ok(Polarization::SigmaMinus),
            "H" => Ok(Polarization::H),
            "V" => Ok(Polarization::V),
            _ => Err(Error::Parse(alloc::format!("unknown polarization `{s}`"))),
        }
    }
}

/// Which of the two modes of a dual-rail qubit was found occupied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Rail {
    Up,
    Down,
}

impl Rail {
    pub const BOTH: [Rail; 2] = [Rail::Up, Rail::Down];

    pub const fn symbol(self) -> char {
        match self {
            Rail::Up => 'u',
            Rail::Down => 'd',
        }
    }

    pub fn from_symbol(c: char) -> Option<Rail> {
        match c {
            'u' => Some(Rail::Up),
            'd' => Some(Rail::Down),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eight_modes_with_flags() {
        assert_eq!(ModeLabel::ALL.len(), 8);
        let rydberg: alloc::vec::Vec<_> = ModeLabel::ALL.into_iter().filter(|m| m.is_rydberg()).collect();
        assert_eq!(rydberg, [ModeLabel::RU, ModeLabel::RD]);
        let inter: alloc::vec::Vec<_> = ModeLabel::ALL.into_iter().filter(|m| m.is_intermediate()).collect();
        assert_eq!(inter, [ModeLabel::EU, ModeLabel::ED]);
        let bits: u16 = ModeLabel::ALL.iter().map(|m| m.bit() as u16).sum();
        assert_eq!(bits, 0xff);
    }

    #[test]
    fn waveplate_is_a_bijection() {
        assert_eq!(Polarization::SigmaMinus.through_waveplate(), Polarization::H);
        assert_eq!(Polarization::SigmaPlus.through_waveplate(), Polarization::V);
        for p in [Polarization::SigmaPlus, Polarization::SigmaMinus, Polarization::H, Polarization::V] {
            assert_eq!(p.through_waveplate().through_waveplate(), p);
        }
    }

    #[test]
    fn names_round_trip() {
        for m in ModeLabel::ALL {
            assert_eq!(m.name().parse::<ModeLabel>().unwrap(), m);
        }
        assert_eq!("g".parse::<Level>().unwrap(), Level::Reservoir);
        assert!("x".parse::<Level>().is_err());
    }
}
