use crate::datagen::DatasetSpec;

/// Aggregate statistics of a benchmark dataset: interaction count, class
/// count, drug count and class-imbalance ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub n_samples: u64,
    pub n_classes: usize,
    pub n_drugs: usize,
    pub cir: f64,
}

pub const PRESETS: &[Preset] = &[
    Preset { name: "DDIMDL", n_samples: 37_243, n_classes: 65, n_drugs: 569, cir: 3270.0 },
    Preset { name: "MUFFIN", n_samples: 172_426, n_classes: 81, n_drugs: 1569, cir: 5243.0 },
    Preset { name: "DDI-DB110", n_samples: 198_631, n_classes: 110, n_drugs: 1178, cir: 3304.0 },
    Preset { name: "DDI-DB171", n_samples: 199_052, n_classes: 171, n_drugs: 1178, cir: 31390.0 },
];

impl Preset {
    /// Case-insensitive lookup by name.
    pub fn by_name(name: &str) -> Option<&'static Preset> {
        PRESETS.iter().find(|p| p.name.eq_ignore_ascii_case(name))
    }

    /// Generator spec with this preset's aggregates and default feature
    /// settings.
    pub fn spec(&self, seed: u64) -> DatasetSpec {
        DatasetSpec {
            n_classes: self.n_classes,
            n_samples: self.n_samples,
            cir: self.cir,
            n_drugs: self.n_drugs,
            seed,
            ..DatasetSpec::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup() {
        assert_eq!(Preset::by_name("ddi-db110").unwrap().n_samples, 198_631);
        assert_eq!(Preset::by_name("MUFFIN").unwrap().n_drugs, 1569);
        assert!(Preset::by_name("nope").is_none());
    }

    #[test]
    fn specs_validate() {
        for p in PRESETS {
            p.spec(1).validate().unwrap();
        }
    }
}
