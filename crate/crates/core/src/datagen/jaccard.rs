use crate::error::{Error, Result};

/// Value returned by the printed-ratio mode when two profiles are identical
/// and nonempty, which makes its denominator zero.
pub const DEFAULT_CAP: f64 = 1e6;

/// Binary presence vector of a drug over a target or enzyme vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitProfile {
    pub drug_id: u32,
    pub bits: Vec<bool>,
}

impl BitProfile {
    pub fn new(drug_id: u32, bits: Vec<bool>) -> Self {
        Self { drug_id, bits }
    }

    /// Parses a string of `0`/`1` characters.
    pub fn from_str_bits(drug_id: u32, s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Input(format!("bit profile contains {other:?}"))),
            })
            .collect::<Result<_>>()?;
        Ok(Self { drug_id, bits })
    }

    pub fn width(&self) -> usize {
        self.bits.len()
    }
}

/// How shared and combined bits become a similarity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JaccardMode {
    /// `|A∩B| / (|A∪B| − |A∩B|)`, with a zero denominator mapped to `cap`.
    Printed { cap: f64 },
    /// `|A∩B| / |A∪B|`, zero when both sets are empty.
    Standard,
}

impl Default for JaccardMode {
    fn default() -> Self {
        JaccardMode::Printed { cap: DEFAULT_CAP }
    }
}

impl JaccardMode {
    fn score(self, inter: usize, union: usize) -> f64 {
        match self {
            JaccardMode::Printed { cap } => {
                let diff = union - inter;
                if diff == 0 {
                    if inter == 0 { 0.0 } else { cap }
                } else {
                    inter as f64 / diff as f64
                }
            }
            JaccardMode::Standard => {
                if union == 0 {
                    0.0
                } else {
                    inter as f64 / union as f64
                }
            }
        }
    }
}

/// Similarity of `profile` to each of `others`, in order.
pub fn jaccard_similarity_profile(
    profile: &BitProfile,
    others: &[BitProfile],
    mode: JaccardMode,
) -> Result<Vec<f64>> {
    others
        .iter()
        .map(|other| {
            if other.width() != profile.width() {
                return Err(Error::Input(format!(
                    "drug {} has {} bits, drug {} has {}",
                    profile.drug_id,
                    profile.width(),
                    other.drug_id,
                    other.width()
                )));
            }
            let (mut inter, mut union) = (0, 0);
            for (&a, &b) in profile.bits.iter().zip(&other.bits) {
                inter += usize::from(a && b);
                union += usize::from(a || b);
            }
            Ok(mode.score(inter, union))
        })
        .collect()
}
