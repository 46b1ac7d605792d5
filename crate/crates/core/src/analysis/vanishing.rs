use crate::analysis::lambert::lambert_w0;
use crate::error::{Error, Result};
use crate::losses::LossKind;

const UNIT_SLACK: f64 = 1e-12;

/// Where a loss's gradient-magnitude upper bound meets the cross-entropy
/// gradient `−1/p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VanishingReport {
    pub loss_kind: LossKind,
    pub gamma: f64,
    pub beta: Option<f64>,
    pub crossover_p: f64,
    /// `false` means the bound stays at or above the cross-entropy level on
    /// all of `(0, 1)`.
    pub in_unit_interval: bool,
}

/// Cross-entropy derivative in `p`.
pub fn ce_grad(p: f64) -> f64 {
    -1.0 / p
}

/// Upper bound on the focal-loss derivative: `γ ln p − 1/p + 1`.
pub fn fl_grad_bound(p: f64, gamma: f64) -> f64 {
    gamma * p.ln() - 1.0 / p + 1.0
}

/// Upper bound on the tail-class tailed-focal derivative.
pub fn tfl_grad_bound(p: f64, gamma: f64, beta: f64) -> f64 {
    fl_grad_bound(p, gamma) - beta / p
}

/// Solves `γ ln p − 1/p + 1 = −1/p`, i.e. `p = e^{−1/γ}`.
pub fn fl_vanishing_threshold(gamma: f64) -> Result<VanishingReport> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::param("gamma", format!("{gamma} must be > 0")));
    }
    let crossover_p = (-1.0 / gamma).exp();
    Ok(VanishingReport {
        loss_kind: LossKind::Fl,
        gamma,
        beta: None,
        crossover_p,
        in_unit_interval: crossover_p <= 1.0,
    })
}

/// Solves `γ ln p = (β − p)/p` through `p = β / (γ·W₀((β/γ)·e^{1/γ}))`.
pub fn tfl_vanishing_threshold(gamma: f64, beta: f64) -> Result<VanishingReport> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::param("gamma", format!("{gamma} must be > 0")));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::param("beta", format!("{beta} must be > 0")));
    }
    let ratio = beta / gamma;
    let w = lambert_w0(ratio * (1.0 / gamma).exp())?;
    let crossover_p = ratio / w;
    Ok(VanishingReport {
        loss_kind: LossKind::Tfl,
        gamma,
        beta: Some(beta),
        crossover_p,
        // the β = 1, γ = 2 case lands on 1 up to rounding
        in_unit_interval: crossover_p <= 1.0 + UNIT_SLACK,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        let flo = f(lo);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (f(mid) > 0.0) == (flo > 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn focal_examples() {
        let r = fl_vanishing_threshold(2.0).unwrap();
        assert!((r.crossover_p - 0.60653).abs() < 1e-5);
        assert_eq!(format!("{:.2}", r.crossover_p), "0.61");
        assert!(r.in_unit_interval);
        let r = fl_vanishing_threshold(1.0).unwrap();
        assert!((r.crossover_p - (-1.0f64).exp()).abs() < 1e-15);
        assert!(fl_vanishing_threshold(0.0).is_err());
        assert!(fl_vanishing_threshold(-1.0).is_err());
    }

    #[test]
    fn focal_crossover_grows_with_gamma() {
        let ps: Vec<f64> = (1..50)
            .map(|i| fl_vanishing_threshold(i as f64 * 0.2).unwrap().crossover_p)
            .collect();
        assert!(ps.windows(2).all(|w| w[1] > w[0]));
        assert!(ps.iter().all(|&p| p > 0.0 && p < 1.0));
    }

    #[test]
    fn focal_crossover_matches_numeric_root() {
        for &gamma in &[0.5, 1.0, 2.0, 3.0, 5.0] {
            let root = bisect(|p| fl_grad_bound(p, gamma) - ce_grad(p), 1e-9, 1.0);
            let r = fl_vanishing_threshold(gamma).unwrap();
            assert!((root - r.crossover_p).abs() < 1e-10);
        }
    }

    #[test]
    fn tailed_examples() {
        let r = tfl_vanishing_threshold(2.0, 1.0).unwrap();
        assert!((r.crossover_p - 1.0).abs() < 1e-12);
        assert!(r.in_unit_interval);

        let r = tfl_vanishing_threshold(2.0, 3.0).unwrap();
        assert!((r.crossover_p - 1.574).abs() < 1e-3);
        assert!(!r.in_unit_interval);

        assert!(tfl_vanishing_threshold(2.0, 0.0).is_err());
        assert!(tfl_vanishing_threshold(0.0, 1.0).is_err());
    }

    #[test]
    fn tailed_crossover_solves_equality() {
        for &gamma in &[0.5, 1.0, 2.0, 3.0] {
            for &beta in &[0.1, 0.5, 1.0, 2.0, 3.0, 10.0] {
                let p = tfl_vanishing_threshold(gamma, beta).unwrap().crossover_p;
                let residual = gamma * p.ln() - (beta - p) / p;
                assert!(residual.abs() < 1e-10, "γ={gamma} β={beta}");
                assert!(p > 0.0);
            }
        }
    }

    #[test]
    fn tailed_bound_dominates_ce_for_beta_at_least_one() {
        for i in 0..50 {
            let beta = 1.0 + i as f64 * 0.2;
            let r = tfl_vanishing_threshold(2.0, beta).unwrap();
            assert!(r.crossover_p >= 1.0 - 1e-12);
            for k in 1..1000 {
                let p = k as f64 / 1000.0;
                assert!(tfl_grad_bound(p, 2.0, beta) <= ce_grad(p) + 1e-12);
            }
        }
    }
}
