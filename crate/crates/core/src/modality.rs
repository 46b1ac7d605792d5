use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// The four per-drug feature modalities, in their fixed storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Modality {
    /// Molecular graph embedding.
    Graph,
    /// Sequence (string notation) embedding.
    Sequence,
    Target,
    Enzyme,
}

impl Modality {
    pub const ALL: [Modality; 4] = [
        Modality::Graph,
        Modality::Sequence,
        Modality::Target,
        Modality::Enzyme,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn letter(self) -> char {
        match self {
            Modality::Graph => 'G',
            Modality::Sequence => 'S',
            Modality::Target => 'T',
            Modality::Enzyme => 'E',
        }
    }

    /// The weaker modality concatenated into this one at each fusion stage.
    pub fn enhancer(self) -> Option<Modality> {
        match self {
            Modality::Graph => Some(Modality::Sequence),
            Modality::Target => Some(Modality::Enzyme),
            _ => None,
        }
    }
}

/// A subset of modalities, e.g. `GS` or `GSTE`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModalitySet([bool; 4]);

impl ModalitySet {
    pub const FULL: ModalitySet = ModalitySet([true; 4]);

    /// The seven ablation variants.
    pub const VARIANTS: [&'static str; 7] = ["G", "S", "T", "E", "GS", "TE", "GSTE"];

    pub fn contains(&self, m: Modality) -> bool {
        self.0[m.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = Modality> + '_ {
        Modality::ALL.into_iter().filter(|&m| self.contains(m))
    }

    pub fn is_empty(&self) -> bool {
        !self.0.iter().any(|&b| b)
    }

    pub fn is_subset_of(&self, other: &ModalitySet) -> bool {
        self.0.iter().zip(other.0).all(|(&a, b)| !a || b)
    }
}

impl fmt::Display for ModalitySet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for m in self.iter() {
            write!(f, "{}", m.letter())?;
        }
        Ok(())
    }
}

impl FromStr for ModalitySet {
    type Err = Error;

    /// Accepts `GS`, `tfl-gs` or `TFL-GS` style names.
    fn from_str(s: &str) -> Result<Self> {
        let upper = s.trim().to_ascii_uppercase();
        let letters = upper.strip_prefix("TFL-").unwrap_or(&upper);
        let mut set = [false; 4];
        for ch in letters.chars() {
            let m = Modality::ALL
                .into_iter()
                .find(|m| m.letter() == ch)
                .ok_or_else(|| Error::param("variant", format!("unknown modality `{ch}` in `{s}`")))?;
            if set[m.index()] {
                return Err(Error::param("variant", format!("repeated modality in `{s}`")));
            }
            set[m.index()] = true;
        }
        let set = ModalitySet(set);
        if set.is_empty() {
            return Err(Error::param("variant", "empty modality set"));
        }
        Ok(set)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_variants() {
        for v in ModalitySet::VARIANTS {
            let set: ModalitySet = v.parse().unwrap();
            assert_eq!(set.to_string(), v);
            assert!(set.is_subset_of(&ModalitySet::FULL));
        }
        assert_eq!("tfl-gs".parse::<ModalitySet>().unwrap().to_string(), "GS");
        assert_eq!("EG".parse::<ModalitySet>().unwrap().to_string(), "GE");
        assert!("GX".parse::<ModalitySet>().is_err());
        assert!("GG".parse::<ModalitySet>().is_err());
        assert!("".parse::<ModalitySet>().is_err());
    }
}
