use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::datagen::sample_class_counts;
use crate::error::{Error, Result};
use crate::imbalance::ClassStats;
use crate::modality::Modality;

/// Generator parameters. Features for a record of class `c` and drug `d` are
/// `signal[m]·prototype[c][m] + drug_offset_std·offset[d][m] + noise_std·ε`
/// per modality `m`, with standard-normal prototypes, offsets and noise.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub n_classes: usize,
    pub n_samples: u64,
    /// Target ratio of the largest to the smallest class.
    pub cir: f64,
    pub n_drugs: usize,
    /// Widths of the G, S, T, E blocks.
    pub embed_dims: [usize; 4],
    pub seed: u64,
    pub signal: [f64; 4],
    pub noise_std: f64,
    pub drug_offset_std: f64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            n_classes: 10,
            n_samples: 1000,
            cir: 10.0,
            n_drugs: 100,
            embed_dims: [64; 4],
            seed: 0,
            signal: [1.0; 4],
            noise_std: 1.0,
            drug_offset_std: 0.3,
        }
    }
}

impl DatasetSpec {
    /// Noise-free, offset-free data whose classes are separated by their
    /// prototypes alone.
    pub fn separable(n_classes: usize, n_samples: u64, cir: f64, seed: u64) -> Self {
        Self {
            n_classes,
            n_samples,
            cir,
            seed,
            noise_std: 0.0,
            drug_offset_std: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_classes < 2 {
            return Err(Error::Spec(format!(
                "need at least 2 classes, got {}",
                self.n_classes
            )));
        }
        if self.n_samples < self.n_classes as u64 {
            return Err(Error::Spec(format!(
                "{} samples cannot cover {} classes",
                self.n_samples, self.n_classes
            )));
        }
        if !(self.cir >= 1.0 && self.cir.is_finite()) {
            return Err(Error::Spec(format!("cir must be >= 1, got {}", self.cir)));
        }
        if self.n_drugs < 2 {
            return Err(Error::Spec("need at least 2 drugs".into()));
        }
        if self.embed_dims.contains(&0) {
            return Err(Error::Spec("embedding widths must be positive".into()));
        }
        let scales = self
            .signal
            .iter()
            .chain([&self.noise_std, &self.drug_offset_std]);
        if scales.into_iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::Spec("signal and noise scales must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// The four modality blocks of one drug.
#[derive(Debug, Clone, PartialEq)]
pub struct DrugFeatures {
    pub blocks: [Vec<f64>; 4],
}

impl DrugFeatures {
    pub fn get(&self, m: Modality) -> &[f64] {
        &self.blocks[m.index()]
    }

    pub fn widths(&self) -> [usize; 4] {
        [0, 1, 2, 3].map(|i| self.blocks[i].len())
    }
}

/// One labeled drug pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub pair_id: String,
    pub drug_a: u32,
    pub drug_b: u32,
    pub label: usize,
    pub features_a: DrugFeatures,
    pub features_b: DrugFeatures,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub n_classes: usize,
    pub embed_dims: [usize; 4],
    pub records: Vec<Record>,
}

impl Dataset {
    pub fn labels(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.label).collect()
    }

    pub fn class_stats(&self) -> Result<ClassStats> {
        ClassStats::from_labels(&self.labels(), self.n_classes)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// The records at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            n_classes: self.n_classes,
            embed_dims: self.embed_dims,
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
        }
    }
}

/// Rounds to the nine significant digits the dataset file stores, so that
/// generated data survives a write/read cycle unchanged.
pub(crate) fn quantize(x: f64) -> f64 {
    format!("{x:.8e}").parse().expect("formatted float parses")
}

fn normal_block(rng: &mut ChaCha8Rng, width: usize, scale: f64) -> Vec<f64> {
    (0..width)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

pub fn generate_dataset(spec: &DatasetSpec) -> Result<(Dataset, ClassStats)> {
    let counts = sample_class_counts(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let dims = spec.embed_dims;

    let prototypes: Vec<[Vec<f64>; 4]> = (0..spec.n_classes)
        .map(|_| [0, 1, 2, 3].map(|m| normal_block(&mut rng, dims[m], spec.signal[m])))
        .collect();
    let offsets: Vec<[Vec<f64>; 4]> = (0..spec.n_drugs)
        .map(|_| [0, 1, 2, 3].map(|m| normal_block(&mut rng, dims[m], spec.drug_offset_std)))
        .collect();

    let mut labels: Vec<usize> = counts
        .iter()
        .enumerate()
        .flat_map(|(c, &n)| std::iter::repeat_n(c, n as usize))
        .collect();
    labels.shuffle(&mut rng);

    let draw = |rng: &mut ChaCha8Rng, label: usize, drug: usize| DrugFeatures {
        blocks: [0, 1, 2, 3].map(|m| {
            (0..dims[m])
                .map(|k| {
                    let noise: f64 = rng.sample(StandardNormal);
                    quantize(prototypes[label][m][k] + offsets[drug][m][k] + spec.noise_std * noise)
                })
                .collect()
        }),
    };

    let mut records = Vec::with_capacity(labels.len());
    for (i, &label) in labels.iter().enumerate() {
        let a = rng.random_range(0..spec.n_drugs);
        let mut b = rng.random_range(0..spec.n_drugs - 1);
        if b >= a {
            b += 1;
        }
        let features_a = draw(&mut rng, label, a);
        let features_b = draw(&mut rng, label, b);
        records.push(Record {
            pair_id: format!("p{i}"),
            drug_a: a as u32,
            drug_b: b as u32,
            label,
            features_a,
            features_b,
        });
    }

    let stats = ClassStats::from_counts(&counts)?;
    Ok((
        Dataset {
            n_classes: spec.n_classes,
            embed_dims: dims,
            records,
        },
        stats,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> DatasetSpec {
        DatasetSpec {
            n_classes: 4,
            n_samples: 120,
            cir: 8.0,
            n_drugs: 12,
            embed_dims: [3, 2, 4, 1],
            seed: 9,
            ..DatasetSpec::default()
        }
    }

    #[test]
    fn counts_match_schedule() {
        let spec = small();
        let (data, stats) = generate_dataset(&spec).unwrap();
        let expected = sample_class_counts(&spec).unwrap();
        let mut tally = vec![0u64; spec.n_classes];
        for r in &data.records {
            tally[r.label] += 1;
        }
        assert_eq!(tally, expected);
        assert_eq!(stats.counts(), expected.as_slice());
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let spec = small();
        assert_eq!(generate_dataset(&spec).unwrap(), generate_dataset(&spec).unwrap());
        let other = DatasetSpec { seed: 10, ..small() };
        assert_ne!(generate_dataset(&spec).unwrap().0, generate_dataset(&other).unwrap().0);
    }

    #[test]
    fn shapes_and_finiteness() {
        let (data, _) = generate_dataset(&small()).unwrap();
        for r in &data.records {
            assert_eq!(r.features_a.widths(), [3, 2, 4, 1]);
            assert_eq!(r.features_b.widths(), [3, 2, 4, 1]);
            assert_ne!(r.drug_a, r.drug_b);
            assert!(r.label < 4);
            assert!(r.features_a.blocks.iter().flatten().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn separable_data_is_nearest_prototype_classifiable() {
        let spec = DatasetSpec {
            embed_dims: [4; 4],
            ..DatasetSpec::separable(5, 200, 6.0, 3)
        };
        let (data, _) = generate_dataset(&spec).unwrap();
        // with no noise every record of a class carries the same features;
        // the first occurrence serves as the prototype
        let mut prototypes: Vec<Option<&DrugFeatures>> = vec![None; 5];
        for r in &data.records {
            prototypes[r.label].get_or_insert(&r.features_a);
        }
        let dist = |a: &DrugFeatures, b: &DrugFeatures| -> f64 {
            a.blocks.iter().flatten().zip(b.blocks.iter().flatten()).map(|(x, y)| (x - y).powi(2)).sum()
        };
        for r in &data.records {
            let nearest = (0..5)
                .min_by(|&a, &b| {
                    dist(&r.features_a, prototypes[a].unwrap())
                        .total_cmp(&dist(&r.features_a, prototypes[b].unwrap()))
                })
                .unwrap();
            assert_eq!(nearest, r.label);
        }
    }

    #[test]
    fn rejects_invalid_specs() {
        assert!(generate_dataset(&DatasetSpec { cir: 0.0, ..small() }).is_err());
        assert!(generate_dataset(&DatasetSpec { n_drugs: 1, ..small() }).is_err());
        assert!(generate_dataset(&DatasetSpec { embed_dims: [0, 1, 1, 1], ..small() }).is_err());
        assert!(generate_dataset(&DatasetSpec { noise_std: -1.0, ..small() }).is_err());
    }

    #[test]
    fn quantize_is_idempotent() {
        for &x in &[0.1, -1.234567891234, 1e-300, 123456789.98765432] {
            let q = quantize(x);
            assert_eq!(quantize(q), q);
            assert!((q - x).abs() <= 1e-8 * x.abs());
        }
    }
}
