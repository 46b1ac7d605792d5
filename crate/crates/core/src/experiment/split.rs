use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::experiment::SplitConfig;

/// Record indices of each part, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

fn share(n: usize, fraction: f64) -> usize {
    (n as f64 * fraction).round() as usize
}

/// Seeded train/validation/test split.
///
/// Stratified: within every class with at least two samples the test part
/// gets `round(n·test)` samples clamped to `[1, n − 1]`; single-sample
/// classes stay in training. The validation share is then taken from what
/// remains, never emptying a class's training part.
pub fn split_indices(labels: &[usize], n_classes: usize, cfg: &SplitConfig, seed: u64) -> Result<Split> {
    cfg.validate()?;
    if labels.is_empty() {
        return Err(Error::Input("cannot split an empty dataset".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut split = Split {
        train: Vec::new(),
        validation: Vec::new(),
        test: Vec::new(),
    };

    let mut assign = |mut idx: Vec<usize>, rng: &mut ChaCha8Rng, floor_one: bool| {
        idx.shuffle(rng);
        let n = idx.len();
        let n_test = if floor_one {
            if n < 2 {
                0
            } else {
                share(n, cfg.test_fraction).clamp(1, n - 1)
            }
        } else {
            share(n, cfg.test_fraction).min(n)
        };
        let rest = n - n_test;
        let n_val = share(rest, cfg.val_fraction).min(rest.saturating_sub(1));
        split.test.extend_from_slice(&idx[..n_test]);
        split.validation.extend_from_slice(&idx[n_test..n_test + n_val]);
        split.train.extend_from_slice(&idx[n_test + n_val..]);
    };

    if cfg.stratified {
        let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
        for (i, &y) in labels.iter().enumerate() {
            if y >= n_classes {
                return Err(Error::Index { index: y, len: n_classes });
            }
            by_class[y].push(i);
        }
        for idx in by_class {
            assign(idx, &mut rng, true);
        }
    } else {
        assign((0..labels.len()).collect(), &mut rng, false);
    }

    split.train.sort_unstable();
    split.validation.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_sample_classes_train_only() {
        let labels = [0, 0, 0, 0, 0, 1, 2, 2];
        let s = split_indices(&labels, 3, &SplitConfig::default(), 1).unwrap();
        assert!(s.train.contains(&5));
        assert!(!s.test.contains(&5));
        assert_eq!(s.test.iter().filter(|&&i| labels[i] == 0).count(), 1);
        assert_eq!(s.test.iter().filter(|&&i| labels[i] == 2).count(), 1);
    }

    #[test]
    fn deterministic_per_seed() {
        let labels: Vec<usize> = (0..200).map(|i| i % 7).collect();
        let cfg = SplitConfig::default();
        assert_eq!(split_indices(&labels, 7, &cfg, 3).unwrap(), split_indices(&labels, 7, &cfg, 3).unwrap());
        assert_ne!(split_indices(&labels, 7, &cfg, 3).unwrap(), split_indices(&labels, 7, &cfg, 4).unwrap());
    }

    #[test]
    fn unstratified_fraction() {
        let labels = vec![0; 100];
        let cfg = SplitConfig { stratified: false, ..SplitConfig::default() };
        let s = split_indices(&labels, 1, &cfg, 0).unwrap();
        assert_eq!(s.test.len(), 20);
        assert_eq!(s.train.len(), 80);
    }

    proptest! {
        #[test]
        fn partitions_and_keeps_classes(
            counts in prop::collection::vec(1usize..40, 1..10),
            test in 0.05f64..0.6,
            val in prop_oneof![Just(0.0), 0.05f64..0.3],
            seed in any::<u64>(),
        ) {
            let labels: Vec<usize> = counts.iter().enumerate()
                .flat_map(|(c, &n)| std::iter::repeat_n(c, n)).collect();
            let cfg = SplitConfig { test_fraction: test, val_fraction: val, stratified: true };
            let s = split_indices(&labels, counts.len(), &cfg, seed).unwrap();
            let mut all: Vec<usize> = s.train.iter().chain(&s.validation).chain(&s.test).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
            for (c, &n) in counts.iter().enumerate() {
                let in_train = s.train.iter().filter(|&&i| labels[i] == c).count();
                let in_test = s.test.iter().filter(|&&i| labels[i] == c).count();
                prop_assert!(in_train >= 1);
                prop_assert_eq!(in_test >= 1, n >= 2);
            }
        }
    }
}
