use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::losses::LossKind;

/// Which curve to tabulate. Only probability-form losses that need no class
/// counts are supported: CE, FL and TFL (tail or head class).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveSpec {
    pub kind: LossKind,
    pub gamma: f64,
    pub beta: f64,
    pub tail: bool,
}

impl CurveSpec {
    pub fn ce() -> Self {
        Self {
            kind: LossKind::Ce,
            gamma: 0.0,
            beta: 0.0,
            tail: false,
        }
    }

    pub fn focal(gamma: f64) -> Self {
        Self {
            kind: LossKind::Fl,
            gamma,
            beta: 0.0,
            tail: false,
        }
    }

    pub fn tailed(gamma: f64, beta: f64) -> Self {
        Self {
            kind: LossKind::Tfl,
            gamma,
            beta,
            tail: true,
        }
    }

    /// Short label for file names, e.g. `tfl_g2_b2`.
    pub fn label(&self) -> String {
        match self.kind {
            LossKind::Tfl => format!("tfl_g{}_b{}", self.gamma, self.beta),
            LossKind::Fl => format!("fl_g{}", self.gamma),
            k => k.name().to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub p: f64,
    pub loss: f64,
    pub grad: f64,
}

/// 512 points uniform on `[0.001, 0.999]`.
pub fn default_grid() -> Vec<f64> {
    let n = 512;
    (0..n)
        .map(|i| 0.001 + 0.998 * i as f64 / (n - 1) as f64)
        .collect()
}

/// Tabulates loss and `d loss / d p` over `grid`, using the factored
/// derivative `(1−p)^{γ−1}[γ ln p − 1/p + 1] − β/p`.
pub fn curve_export(spec: &CurveSpec, grid: &[f64]) -> Result<Vec<CurveRow>> {
    if let Some(&p) = grid.iter().find(|&&p| !(p > 0.0 && p < 1.0)) {
        return Err(Error::param("grid", format!("{p} is not inside (0, 1)")));
    }
    if spec.gamma < 0.0 || spec.beta < 0.0 {
        return Err(Error::param("gamma/beta", "must be >= 0"));
    }
    let (gamma, beta) = match spec.kind {
        LossKind::Ce => (0.0, 0.0),
        LossKind::Fl => (spec.gamma, 0.0),
        LossKind::Tfl => (spec.gamma, if spec.tail { spec.beta } else { 0.0 }),
        other => {
            return Err(Error::param(
                "loss",
                format!("no curve for `{other}`: it depends on class counts or logits"),
            ))
        }
    };
    Ok(grid
        .iter()
        .map(|&p| {
            let q = 1.0 - p;
            let loss = -q.powf(gamma) * p.ln() - beta * p.ln();
            let grad = q.powf(gamma - 1.0) * (gamma * p.ln() - 1.0 / p + 1.0) - beta / p;
            CurveRow { p, loss, grad }
        })
        .collect())
}

/// Writes `p,loss,grad` rows with 16 significant digits.
pub fn write_curve(rows: &[CurveRow], out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "p,loss,grad")?;
    for r in rows {
        writeln!(out, "{:.15e},{:.15e},{:.15e}", r.p, r.loss, r.grad)?;
    }
    Ok(())
}

pub fn write_curve_file(rows: &[CurveRow], path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_curve(rows, &mut buf).expect("writing to memory");
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}
