//! Class-frequency statistics and the tail-membership threshold function.
//!
//! Classes are ranked by sample count (descending, ties by ascending class
//! index). The normalized position of a class is the cumulative share of
//! samples from the head of that ranking through the class itself; a class
//! belongs to the tail when its position strictly exceeds the threshold.

use crate::error::{Error, Result};

/// Per-class sample counts and the derived imbalance context.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassStats {
    counts: Vec<u64>,
    total: u64,
    desc_order: Vec<usize>,
    normalized_position: Vec<f64>,
    cir: f64,
}

impl ClassStats {
    /// Builds statistics from raw per-class counts. Every class must have at
    /// least one sample.
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::Construction("class counts are empty".into()));
        }
        if let Some(c) = counts.iter().position(|&n| n == 0) {
            return Err(Error::Construction(format!("class {c} has zero samples")));
        }

        let total: u64 = counts.iter().sum();
        let mut desc_order: Vec<usize> = (0..counts.len()).collect();
        // stable sort keeps ascending index among equal counts
        desc_order.sort_by(|&a, &b| counts[b].cmp(&counts[a]));

        let mut normalized_position = vec![0.0; counts.len()];
        let mut cumulative = 0u64;
        for &c in &desc_order {
            cumulative += counts[c];
            normalized_position[c] = cumulative as f64 / total as f64;
        }

        let max = *counts.iter().max().unwrap();
        let min = *counts.iter().min().unwrap();

        Ok(Self {
            counts: counts.to_vec(),
            total,
            desc_order,
            normalized_position,
            cir: max as f64 / min as f64,
        })
    }

    /// Tallies labels into counts for `n_classes` classes.
    pub fn from_labels(labels: &[usize], n_classes: usize) -> Result<Self> {
        let mut counts = vec![0u64; n_classes];
        for &y in labels {
            if y >= n_classes {
                return Err(Error::Index {
                    index: y,
                    len: n_classes,
                });
            }
            counts[y] += 1;
        }
        Self::from_counts(&counts)
    }

    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, class: usize) -> u64 {
        self.counts[class]
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Class indices from most to least frequent.
    pub fn desc_order(&self) -> &[usize] {
        &self.desc_order
    }

    /// Normalized cumulative position, indexed by class.
    pub fn normalized_position(&self) -> &[f64] {
        &self.normalized_position
    }

    /// Class imbalance ratio: largest count over smallest count.
    pub fn cir(&self) -> f64 {
        self.cir
    }

    pub fn tail_partition(&self, threshold: f64) -> Result<TailPartition> {
        TailPartition::new(self, threshold)
    }
}

/// Tail-membership mask for a fixed threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct TailPartition {
    threshold: f64,
    is_tail: Vec<bool>,
}

impl TailPartition {
    pub fn new(stats: &ClassStats, threshold: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(Error::param(
                "ts",
                format!("threshold {threshold} outside [0, 1]"),
            ));
        }
        let is_tail = stats
            .normalized_position
            .iter()
            .map(|&p| p > threshold)
            .collect();
        Ok(Self { threshold, is_tail })
    }

    /// A partition with every class marked as head.
    pub fn all_head(n_classes: usize) -> Self {
        Self {
            threshold: 1.0,
            is_tail: vec![false; n_classes],
        }
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn is_tail(&self, class: usize) -> bool {
        self.is_tail[class]
    }

    pub fn mask(&self) -> &[bool] {
        &self.is_tail
    }

    pub fn n_tail(&self) -> usize {
        self.is_tail.iter().filter(|&&t| t).count()
    }

    pub fn tail_classes(&self) -> impl Iterator<Item = usize> + '_ {
        self.is_tail
            .iter()
            .enumerate()
            .filter_map(|(c, &t)| t.then_some(c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Recomputes the tail mask by an explicit selection sort over
    // (count desc, index asc) followed by a running-sum scan.
    fn brute_force_mask(counts: &[u64], threshold: f64) -> Vec<bool> {
        let n = counts.len();
        let total: u64 = counts.iter().sum();
        let mut used = vec![false; n];
        let mut mask = vec![false; n];
        let mut running = 0u64;
        for _ in 0..n {
            let mut best: Option<usize> = None;
            for c in 0..n {
                if used[c] {
                    continue;
                }
                best = match best {
                    Some(b) if counts[b] >= counts[c] => Some(b),
                    _ => Some(c),
                };
            }
            let c = best.unwrap();
            used[c] = true;
            running += counts[c];
            mask[c] = running as f64 / total as f64 > threshold;
        }
        mask
    }

    #[test]
    fn positions_for_three_classes() {
        let stats = ClassStats::from_counts(&[100, 10, 2]).unwrap();
        let p = stats.normalized_position();
        assert!((p[0] - 100.0 / 112.0).abs() < 1e-15);
        assert!((p[1] - 110.0 / 112.0).abs() < 1e-15);
        assert_eq!(p[2], 1.0);
        assert!((p[0] - 0.8929).abs() < 1e-4);
        assert!((p[1] - 0.9821).abs() < 1e-4);
        assert_eq!(stats.cir(), 50.0);
        assert_eq!(stats.total(), 112);
        assert_eq!(stats.desc_order(), &[0, 1, 2]);
    }

    #[test]
    fn single_class() {
        let stats = ClassStats::from_counts(&[5]).unwrap();
        assert_eq!(stats.normalized_position(), &[1.0]);
        assert_eq!(stats.cir(), 1.0);
    }

    #[test]
    fn ties_break_by_index() {
        let stats = ClassStats::from_counts(&[7, 7]).unwrap();
        assert_eq!(stats.desc_order(), &[0, 1]);
        assert_eq!(stats.normalized_position(), &[0.5, 1.0]);
    }

    #[test]
    fn rejects_empty_and_zero() {
        assert!(matches!(
            ClassStats::from_counts(&[]),
            Err(Error::Construction(_))
        ));
        assert!(matches!(
            ClassStats::from_counts(&[3, 0, 1]),
            Err(Error::Construction(_))
        ));
    }

    #[test]
    fn from_labels_tallies() {
        let stats = ClassStats::from_labels(&[0, 1, 1, 2, 1], 3).unwrap();
        assert_eq!(stats.counts(), &[1, 3, 1]);
        assert!(ClassStats::from_labels(&[0, 3], 3).is_err());
    }

    #[test]
    fn threshold_examples() {
        let stats = ClassStats::from_counts(&[100, 10, 2]).unwrap();
        let tail = stats.tail_partition(0.9).unwrap();
        assert_eq!(tail.mask(), &[false, true, true]);
        assert_eq!(tail.tail_classes().collect::<Vec<_>>(), vec![1, 2]);
        assert_eq!(stats.tail_partition(1.0).unwrap().n_tail(), 0);
        assert_eq!(stats.tail_partition(0.0).unwrap().n_tail(), 3);
        assert!(stats.tail_partition(1.5).is_err());
        assert!(stats.tail_partition(-0.1).is_err());
        assert!(stats.tail_partition(f64::NAN).is_err());
    }

    #[test]
    fn boundary_class_is_head() {
        // positions 0.5, 1.0: a class exactly at the threshold stays head
        let stats = ClassStats::from_counts(&[1, 1]).unwrap();
        assert_eq!(stats.tail_partition(0.5).unwrap().mask(), &[false, true]);
    }

    proptest! {
        #[test]
        fn matches_sort_and_scan(
            counts in prop::collection::vec(1u64..=1_000_000, 1..=32),
            ts in 0.0f64..=1.0,
        ) {
            let stats = ClassStats::from_counts(&counts).unwrap();
            let tail = stats.tail_partition(ts).unwrap();
            let expected = brute_force_mask(&counts, ts);
            prop_assert_eq!(tail.mask(), expected.as_slice());
            prop_assert_eq!(stats.total(), counts.iter().sum::<u64>());
            prop_assert!(stats.cir() >= 1.0);
            let along: Vec<f64> = stats.desc_order().iter()
                .map(|&c| stats.normalized_position()[c]).collect();
            prop_assert!(along.windows(2).all(|w| w[0] <= w[1]));
            prop_assert_eq!(*along.last().unwrap(), 1.0);
        }

        #[test]
        fn scaling_counts_preserves_mask(
            counts in prop::collection::vec(1u64..=10_000, 1..=16),
            k in 1u64..=50,
            ts in 0.0f64..=1.0,
        ) {
            let a = ClassStats::from_counts(&counts).unwrap();
            let scaled: Vec<u64> = counts.iter().map(|n| n * k).collect();
            let b = ClassStats::from_counts(&scaled).unwrap();
            prop_assert_eq!(a.normalized_position(), b.normalized_position());
            let (ta, tb) = (a.tail_partition(ts).unwrap(), b.tail_partition(ts).unwrap());
            prop_assert_eq!(ta.mask(), tb.mask());
        }

        #[test]
        fn tail_count_non_increasing_in_threshold(
            counts in prop::collection::vec(1u64..=1000, 1..=20),
            t1 in 0.0f64..=1.0,
            t2 in 0.0f64..=1.0,
        ) {
            let stats = ClassStats::from_counts(&counts).unwrap();
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            prop_assert!(
                stats.tail_partition(lo).unwrap().n_tail()
                    >= stats.tail_partition(hi).unwrap().n_tail()
            );
        }

        #[test]
        fn relabeling_permutes_mask(
            counts in prop::collection::vec(1u64..=1000, 1..=12)
                .prop_filter("distinct", |c| {
                    let mut s = c.clone(); s.sort(); s.dedup(); s.len() == c.len()
                }),
            seed in any::<u64>(),
            ts in 0.0f64..=1.0,
        ) {
            // distinct counts keep the ranking independent of label ids
            use rand::{seq::SliceRandom, SeedableRng};
            let mut perm: Vec<usize> = (0..counts.len()).collect();
            perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let mut permuted = vec![0; counts.len()];
            for (c, &to) in perm.iter().enumerate() {
                permuted[to] = counts[c];
            }
            let a = ClassStats::from_counts(&counts).unwrap().tail_partition(ts).unwrap();
            let b = ClassStats::from_counts(&permuted).unwrap().tail_partition(ts).unwrap();
            for (c, &to) in perm.iter().enumerate() {
                prop_assert_eq!(a.is_tail(c), b.is_tail(to));
            }
        }
    }
}
