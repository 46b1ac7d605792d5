use crate::datagen::DatasetSpec;
use crate::error::Result;

/// Deterministic long-tailed class counts for `spec`, largest first.
///
/// The schedule is a decay `n_i = h·exp(−ln(h/t)·(i/(N−1))^p)` between a
/// pinned head count `h` and tail count `t` with `h/t ≈ cir`. With `p = 1`
/// this is the geometric decay `n_0·r^i`. The tail count starts from the
/// continuous geometric solution (at least 1), and `p` is solved so the
/// counts sum to `n_samples`; when the geometric tail falls below one sample
/// this steepens the head of the curve instead of giving up the ratio.
/// Interior counts are rounded by largest remainder.
pub fn sample_class_counts(spec: &DatasetSpec) -> Result<Vec<u64>> {
    spec.validate()?;
    let n = spec.n_classes;
    let total = spec.n_samples;
    let cir = spec.cir;

    if cir == 1.0 {
        let base = total / n as u64;
        let extra = (total % n as u64) as usize;
        return Ok((0..n).map(|i| base + u64::from(i < extra)).collect());
    }

    let r = cir.powf(-1.0 / (n - 1) as f64);
    let head_cont = total as f64 * (1.0 - r) / (1.0 - r.powi(n as i32));
    let tail_start = (head_cont / cir).round().max(1.0) as u64;

    if n == 2 {
        let tail = ((total as f64 / (1.0 + cir)).round() as u64).clamp(1, total - 1);
        return Ok(vec![total - tail, tail]);
    }

    match pinned_endpoints(n, total, cir, tail_start) {
        Some((head, tail)) => Ok(shaped_counts(n, total, head, tail)),
        None => Ok(geometric_counts(n, total, r)),
    }
}

/// Searches outward from `tail_start` for a tail count whose pinned head
/// `round(cir·t)` admits a monotone schedule summing to `total`.
fn pinned_endpoints(n: usize, total: u64, cir: f64, tail_start: u64) -> Option<(u64, u64)> {
    let interior = (n - 2) as u64;
    let feasible = |t: u64| -> Option<(u64, u64)> {
        if t == 0 {
            return None;
        }
        let h = (cir * t as f64).round() as u64;
        if h <= t {
            return None;
        }
        let min = h + t + interior * t;
        let max = h + t + interior * h;
        (min <= total && total <= max).then_some((h, t))
    };
    let limit = total / n as u64 + 1;
    for step in 0..=limit {
        if let Some(found) = feasible(tail_start + step) {
            return Some(found);
        }
        if step <= tail_start {
            if let Some(found) = feasible(tail_start - step) {
                return Some(found);
            }
        }
    }
    None
}

fn shaped_counts(n: usize, total: u64, head: u64, tail: u64) -> Vec<u64> {
    let decay = (head as f64 / tail as f64).ln();
    let last = (n - 1) as f64;
    let values = |shape: f64| -> Vec<f64> {
        (0..n)
            .map(|i| head as f64 * (-decay * (i as f64 / last).powf(shape)).exp())
            .collect()
    };
    let target = (total - head - tail) as f64;
    let interior_sum = |shape: f64| values(shape)[1..n - 1].iter().sum::<f64>();

    // interior sum increases with the shape exponent
    let (mut lo, mut hi) = (-40.0f64, 40.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if interior_sum(mid.exp()) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let real = values((0.5 * (lo + hi)).exp());

    let mut counts = vec![0u64; n];
    counts[0] = head;
    counts[n - 1] = tail;
    let interior = &real[1..n - 1];
    let floors: Vec<u64> = interior
        .iter()
        .map(|&v| (v.floor() as u64).clamp(tail, head))
        .collect();
    let assigned: u64 = floors.iter().sum();
    let remaining = (total - head - tail).saturating_sub(assigned) as usize;

    let mut by_fraction: Vec<usize> = (0..interior.len()).collect();
    by_fraction.sort_by(|&a, &b| {
        let fa = interior[a] - floors[a] as f64;
        let fb = interior[b] - floors[b] as f64;
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for (k, &i) in by_fraction.iter().enumerate() {
        let bump = u64::from(k < remaining);
        counts[i + 1] = (floors[i] + bump).min(head);
    }
    fix_total(&mut counts, total);
    counts
}

/// Plain geometric counts with every class at least 1, used when no pinned
/// endpoints are feasible.
fn geometric_counts(n: usize, total: u64, r: f64) -> Vec<u64> {
    let head = total as f64 * (1.0 - r) / (1.0 - r.powi(n as i32));
    let real: Vec<f64> = (0..n).map(|i| head * r.powi(i as i32)).collect();
    let mut counts: Vec<u64> = real.iter().map(|&v| (v.floor() as u64).max(1)).collect();
    let assigned: u64 = counts.iter().sum();
    if assigned < total {
        let mut by_fraction: Vec<usize> = (0..n).collect();
        by_fraction.sort_by(|&a, &b| {
            let fa = real[a] - real[a].floor();
            let fb = real[b] - real[b].floor();
            fb.total_cmp(&fa).then(a.cmp(&b))
        });
        for &i in by_fraction.iter().take((total - assigned) as usize) {
            counts[i] += 1;
        }
    }
    fix_total(&mut counts, total);
    counts
}

/// Final exact-sum correction: surplus comes off the largest classes,
/// deficit goes to the head.
fn fix_total(counts: &mut [u64], total: u64) {
    let mut sum: u64 = counts.iter().sum();
    while sum > total {
        let i = (0..counts.len())
            .max_by(|&a, &b| counts[a].cmp(&counts[b]).then(a.cmp(&b)))
            .unwrap();
        if counts[i] <= 1 {
            break;
        }
        counts[i] -= 1;
        sum -= 1;
    }
    if sum < total {
        counts[0] += total - sum;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::PRESETS;
    use crate::error::Error;
    use proptest::prelude::*;

    fn spec(n_classes: usize, n_samples: u64, cir: f64) -> DatasetSpec {
        DatasetSpec {
            n_classes,
            n_samples,
            cir,
            ..DatasetSpec::default()
        }
    }

    fn realized_cir(counts: &[u64]) -> f64 {
        *counts.iter().max().unwrap() as f64 / *counts.iter().min().unwrap() as f64
    }

    #[test]
    fn balanced() {
        assert_eq!(sample_class_counts(&spec(2, 100, 1.0)).unwrap(), vec![50, 50]);
        assert_eq!(sample_class_counts(&spec(3, 100, 1.0)).unwrap(), vec![34, 33, 33]);
    }

    #[test]
    fn three_class_geometric() {
        assert_eq!(sample_class_counts(&spec(3, 70, 4.0)).unwrap(), vec![40, 20, 10]);
    }

    #[test]
    fn infeasible_specs() {
        assert!(matches!(sample_class_counts(&spec(5, 4, 2.0)), Err(Error::Spec(_))));
        assert!(sample_class_counts(&spec(1, 10, 2.0)).is_err());
        assert!(sample_class_counts(&spec(3, 10, 0.0)).is_err());
        assert!(sample_class_counts(&spec(3, 10, f64::NAN)).is_err());
    }

    #[test]
    fn presets_match_aggregates() {
        for preset in PRESETS {
            let counts = sample_class_counts(&preset.spec(0)).unwrap();
            assert_eq!(counts.len(), preset.n_classes);
            assert_eq!(counts.iter().sum::<u64>(), preset.n_samples);
            assert!(counts.iter().all(|&c| c >= 1));
            let cir = realized_cir(&counts);
            assert!((cir / preset.cir - 1.0).abs() <= 0.05, "{}: {cir}", preset.name);
            assert!(counts.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn extreme_preset_pins_tail() {
        let preset = PRESETS.iter().find(|p| p.name == "DDI-DB171").unwrap();
        let counts = sample_class_counts(&preset.spec(0)).unwrap();
        assert_eq!(*counts.last().unwrap(), 1);
        assert_eq!(counts[0], 31390);
    }

    #[test]
    fn deterministic() {
        let s = spec(50, 20_000, 1000.0);
        assert_eq!(sample_class_counts(&s).unwrap(), sample_class_counts(&s).unwrap());
    }

    proptest! {
        #[test]
        fn sums_and_ratio(
            n in 3usize..60,
            cir in 1.0f64..50_000.0,
            extra in 0u64..200_000,
        ) {
            // enough samples for the pinned schedule with a unit tail
            let total = cir.round() as u64 + 10 * n as u64 + extra + (20.0 * n as f64 / cir).ceil() as u64 * n as u64;
            let counts = sample_class_counts(&spec(n, total, cir)).unwrap();
            prop_assert_eq!(counts.len(), n);
            prop_assert_eq!(counts.iter().sum::<u64>(), total);
            prop_assert!(counts.iter().all(|&c| c >= 1));
            prop_assert!(counts.windows(2).all(|w| w[0] >= w[1]));
            let realized = realized_cir(&counts);
            prop_assert!((realized / cir - 1.0).abs() <= 0.05, "{:?} realized {}", counts, realized);
        }
    }
}
