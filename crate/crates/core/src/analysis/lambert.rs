use std::f64::consts::E;

use crate::error::{Error, Result};

const MAX_ITER: usize = 64;
const INV_E: f64 = 1.0 / E;

/// Principal branch `W₀(x)` of the Lambert W function, the `w ≥ −1` solving
/// `w·eʷ = x`.
///
/// Halley iteration, stopped once `|w·eʷ − x| ≤ 1e-12·max(1, |x|)`.
pub fn lambert_w0(x: f64) -> Result<f64> {
    if x.is_nan() || x < -INV_E {
        return Err(Error::Domain(x));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == -INV_E {
        return Ok(-1.0);
    }
    if x == f64::INFINITY {
        return Ok(f64::INFINITY);
    }

    let tol = 1e-12 * x.abs().max(1.0);
    let mut w = initial_guess(x);
    for _ in 0..MAX_ITER {
        let ew = w.exp();
        let f = w * ew - x;
        if f.abs() <= tol {
            break;
        }
        let wp1 = w + 1.0;
        if wp1 == 0.0 {
            // derivative vanishes at the branch point
            break;
        }
        let step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        w = (w - step).max(-1.0);
    }
    Ok(w)
}

fn initial_guess(x: f64) -> f64 {
    if x < -0.32 {
        // series about the branch point in p = sqrt(2(e·x + 1))
        let p = (2.0 * (E * x + 1.0)).max(0.0).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else if x < 3.0 {
        x.ln_1p() * (1.0 - x.ln_1p() / (2.0 + x.ln_1p()))
    } else {
        let l1 = x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    }
}
