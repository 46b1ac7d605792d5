//! Classification losses for long-tailed training.
//!
//! Every loss reports its value, its derivative with respect to the
//! true-class probability (for losses written over probabilities) and its
//! gradient with respect to the raw logits. Probability-form losses reach the
//! logits through the softmax Jacobian; balanced softmax and LDAM are written
//! directly over logits.
//!
//! All logarithms are natural. The true-class probability is clamped to
//! `[PROB_FLOOR, 1 - PROB_FLOOR]` before any log or division.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::imbalance::{ClassStats, TailPartition};

pub const PROB_FLOOR: f64 = 1e-12;

pub const DEFAULT_GAMMA: f64 = 2.0;
pub const DEFAULT_BETA: f64 = 2.0;
pub const DEFAULT_LAMBDA: f64 = 0.999;
pub const DEFAULT_TS: f64 = 0.9;
pub const DEFAULT_MARGIN_C: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossKind {
    /// Cross entropy.
    Ce,
    /// Inverse-frequency weighted cross entropy.
    Wce,
    /// Focal loss.
    Fl,
    /// Class-balanced (effective number) loss.
    Cb,
    /// Balanced softmax.
    Bs,
    /// Label-distribution-aware margin loss.
    Ldam,
    /// Tailed focal loss.
    Tfl,
}

impl LossKind {
    pub const ALL: [LossKind; 7] = [
        LossKind::Ce,
        LossKind::Wce,
        LossKind::Fl,
        LossKind::Cb,
        LossKind::Bs,
        LossKind::Ldam,
        LossKind::Tfl,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LossKind::Ce => "ce",
            LossKind::Wce => "wce",
            LossKind::Fl => "fl",
            LossKind::Cb => "cb",
            LossKind::Bs => "bs",
            LossKind::Ldam => "ldam",
            LossKind::Tfl => "tfl",
        }
    }

    /// Whether the loss consumes class counts.
    pub fn needs_stats(self) -> bool {
        !matches!(self, LossKind::Ce | LossKind::Fl)
    }

    /// Balanced softmax and LDAM are defined over logits.
    pub fn is_logit_form(self) -> bool {
        matches!(self, LossKind::Bs | LossKind::Ldam)
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LossKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::param("loss", format!("unknown loss kind `{s}`")))
    }
}

/// Hyperparameters shared by all loss kinds. Fields irrelevant to a kind
/// are ignored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParams {
    pub gamma: f64,
    pub beta: f64,
    pub lambda: f64,
    pub margin_c: f64,
    pub ts: f64,
}

impl Default for LossParams {
    fn default() -> Self {
        Self {
            gamma: DEFAULT_GAMMA,
            beta: DEFAULT_BETA,
            lambda: DEFAULT_LAMBDA,
            margin_c: DEFAULT_MARGIN_C,
            ts: DEFAULT_TS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossEval {
    pub value: f64,
    /// Derivative with respect to the true-class probability. `None` for
    /// logit-form losses.
    pub grad_p: Option<f64>,
    pub grad_z: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
enum Context {
    None,
    Weights(Vec<f64>),
    LogCounts(Vec<f64>),
    Margins(Vec<f64>),
    Tail(TailPartition),
}

/// A fully bound loss: kind, hyperparameters and the class context it needs.
#[derive(Debug, Clone, PartialEq)]
pub struct LossSpec {
    kind: LossKind,
    params: LossParams,
    n_classes: Option<usize>,
    context: Context,
}

impl LossSpec {
    /// Validates `params` for `kind` and binds the class statistics. `stats`
    /// may be `None` only for CE and FL.
    pub fn new(kind: LossKind, params: LossParams, stats: Option<&ClassStats>) -> Result<Self> {
        let stats_for = |kind: LossKind| {
            stats.ok_or_else(|| {
                Error::param("stats", format!("{kind} requires class statistics"))
            })
        };
        let context = match kind {
            LossKind::Ce => Context::None,
            LossKind::Fl => {
                check_gamma(params.gamma)?;
                Context::None
            }
            LossKind::Wce => Context::Weights(wce_weights(stats_for(kind)?)),
            LossKind::Cb => {
                check_lambda(params.lambda)?;
                let stats = stats_for(kind)?;
                Context::Weights(
                    stats
                        .counts()
                        .iter()
                        .map(|&n| cb_weight(params.lambda, n))
                        .collect(),
                )
            }
            LossKind::Bs => Context::LogCounts(
                stats_for(kind)?
                    .counts()
                    .iter()
                    .map(|&n| (n as f64).ln())
                    .collect(),
            ),
            LossKind::Ldam => {
                Context::Margins(ldam_margins(params.margin_c, stats_for(kind)?)?)
            }
            LossKind::Tfl => {
                check_gamma(params.gamma)?;
                check_beta(params.beta)?;
                Context::Tail(stats_for(kind)?.tail_partition(params.ts)?)
            }
        };
        Ok(Self {
            kind,
            params,
            n_classes: stats.map(ClassStats::n_classes),
            context,
        })
    }

    pub fn ce() -> Self {
        Self::new(LossKind::Ce, LossParams::default(), None).unwrap()
    }

    pub fn focal(gamma: f64) -> Result<Self> {
        let params = LossParams {
            gamma,
            ..LossParams::default()
        };
        Self::new(LossKind::Fl, params, None)
    }

    pub fn tailed_focal(gamma: f64, beta: f64, ts: f64, stats: &ClassStats) -> Result<Self> {
        let params = LossParams {
            gamma,
            beta,
            ts,
            ..LossParams::default()
        };
        Self::new(LossKind::Tfl, params, Some(stats))
    }

    pub fn kind(&self) -> LossKind {
        self.kind
    }

    pub fn params(&self) -> &LossParams {
        &self.params
    }

    /// Tail partition bound to a TFL spec.
    pub fn tail(&self) -> Option<&TailPartition> {
        match &self.context {
            Context::Tail(t) => Some(t),
            _ => None,
        }
    }

    /// Evaluates the loss on one logit vector.
    pub fn eval(&self, z: &[f64], y: usize) -> Result<LossEval> {
        if let Some(n) = self.n_classes {
            if z.len() != n {
                return Err(Error::Shape(format!(
                    "{} logits for a loss bound to {n} classes",
                    z.len()
                )));
            }
        }
        check_index(y, z.len())?;
        match (&self.kind, &self.context) {
            (LossKind::Bs, Context::LogCounts(log_n)) => shifted_ce(z, y, log_n, 1.0),
            (LossKind::Ldam, Context::Margins(margins)) => shifted_ce(z, y, margins, -1.0),
            _ => {
                let p = softmax(z)?;
                let py = p[y];
                let (value, grad_p) = self.prob_value_grad(clamp_prob(py), y);
                Ok(LossEval {
                    value,
                    grad_p: Some(grad_p),
                    grad_z: chain_softmax(&p, y, grad_p),
                })
            }
        }
    }

    /// Value and derivative in `P_y` for probability-form kinds.
    fn prob_value_grad(&self, py: f64, y: usize) -> (f64, f64) {
        let gamma = self.params.gamma;
        match (&self.kind, &self.context) {
            (LossKind::Ce, _) => ce_value_grad(py),
            (LossKind::Fl, _) => focal_value_grad(py, gamma),
            (LossKind::Wce | LossKind::Cb, Context::Weights(w)) => {
                let (v, g) = ce_value_grad(py);
                (w[y] * v, w[y] * g)
            }
            (LossKind::Tfl, Context::Tail(tail)) => {
                tailed_value_grad(py, gamma, self.params.beta, tail.is_tail(y))
            }
            _ => unreachable!("context does not match loss kind"),
        }
    }
}

fn check_index(y: usize, len: usize) -> Result<()> {
    if y >= len {
        return Err(Error::Index { index: y, len });
    }
    Ok(())
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::param("gamma", format!("{gamma} must be >= 0")));
    }
    Ok(())
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::param("beta", format!("{beta} must be >= 0")));
    }
    Ok(())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::param("lambda", format!("{lambda} outside (0, 1)")));
    }
    Ok(())
}

pub fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR)
}

/// Numerically stable softmax. Sums run in index order.
pub fn softmax(z: &[f64]) -> Result<Vec<f64>> {
    if z.is_empty() {
        return Err(Error::Shape("empty logit vector".into()));
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("logits"));
    }
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = z.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    for v in &mut out {
        *v /= sum;
    }
    Ok(out)
}

fn log_sum_exp(z: &[f64]) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + z.iter().map(|&v| (v - max).exp()).sum::<f64>().ln()
}

/// `dL/dz_j = dL/dP_y * P_y * (1[j == y] - p_j)`.
fn chain_softmax(p: &[f64], y: usize, grad_p: f64) -> Vec<f64> {
    let py = p[y];
    p.iter()
        .enumerate()
        .map(|(j, &pj)| {
            let onehot = if j == y { 1.0 } else { 0.0 };
            grad_p * py * (onehot - pj)
        })
        .collect()
}

fn ce_value_grad(py: f64) -> (f64, f64) {
    (-py.ln(), -1.0 / py)
}

/// `FL = -(1-p)^γ ln p` and its derivative in `p`.
pub fn focal_value_grad(py: f64, gamma: f64) -> (f64, f64) {
    let q = 1.0 - py;
    let ln_p = py.ln();
    let modulating = q.powf(gamma);
    let value = -modulating * ln_p;
    let lead = if gamma == 0.0 {
        0.0
    } else {
        gamma * q.powf(gamma - 1.0) * ln_p
    };
    (value, lead - modulating / py)
}

/// Focal loss plus `β·(−ln p)` on tail classes.
pub fn tailed_value_grad(py: f64, gamma: f64, beta: f64, tail: bool) -> (f64, f64) {
    let (fl, fl_grad) = focal_value_grad(py, gamma);
    if !tail {
        return (fl, fl_grad);
    }
    (fl + beta * -py.ln(), fl_grad - beta / py)
}

/// Inverse class frequency `Σn / n_c` per class.
pub fn wce_weights(stats: &ClassStats) -> Vec<f64> {
    let total = stats.total() as f64;
    stats.counts().iter().map(|&n| total / n as f64).collect()
}

/// Effective-number weight `(1−λ)/(1−λ^n)`.
pub fn cb_weight(lambda: f64, n: u64) -> f64 {
    if n == 1 {
        return 1.0;
    }
    // 1 - λ^n without cancellation for λ near 1
    (1.0 - lambda) / -((n as f64) * lambda.ln()).exp_m1()
}

/// Per-class margins `C / n^{1/4}`.
pub fn ldam_margins(margin_c: f64, stats: &ClassStats) -> Result<Vec<f64>> {
    if !(margin_c > 0.0 && margin_c <= 1.0) {
        return Err(Error::param("margin_c", format!("{margin_c} outside (0, 1]")));
    }
    Ok(stats
        .counts()
        .iter()
        .map(|&n| margin_c / (n as f64).powf(0.25))
        .collect())
}

/// Cross entropy over `z + sign·offset`.
fn shifted_ce(z: &[f64], y: usize, offset: &[f64], sign: f64) -> Result<LossEval> {
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("logits"));
    }
    let shifted: Vec<f64> = z
        .iter()
        .zip(offset)
        .map(|(&zi, &o)| zi + sign * o)
        .collect();
    let lse = log_sum_exp(&shifted);
    let value = lse - shifted[y];
    let mut grad_z = softmax(&shifted)?;
    grad_z[y] -= 1.0;
    Ok(LossEval {
        value,
        grad_p: None,
        grad_z,
    })
}

fn check_distribution(p: &[f64], y: usize) -> Result<()> {
    check_index(y, p.len())?;
    if p.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::Numeric("probabilities"));
    }
    Ok(())
}

fn prob_form(p: &[f64], y: usize, (value, grad_p): (f64, f64)) -> LossEval {
    LossEval {
        value,
        grad_p: Some(grad_p),
        grad_z: chain_softmax(p, y, grad_p),
    }
}

/// `−ln P_y`.
pub fn ce_loss(p: &[f64], y: usize) -> Result<LossEval> {
    check_distribution(p, y)?;
    Ok(prob_form(p, y, ce_value_grad(clamp_prob(p[y]))))
}

/// Cross entropy weighted by `Σn / n_y`.
pub fn wce_loss(p: &[f64], y: usize, stats: &ClassStats) -> Result<LossEval> {
    check_distribution(p, y)?;
    check_index(y, stats.n_classes())?;
    let w = stats.total() as f64 / stats.count(y) as f64;
    let (v, g) = ce_value_grad(clamp_prob(p[y]));
    Ok(prob_form(p, y, (w * v, w * g)))
}

pub fn focal_loss(p: &[f64], y: usize, gamma: f64) -> Result<LossEval> {
    check_gamma(gamma)?;
    check_distribution(p, y)?;
    Ok(prob_form(p, y, focal_value_grad(clamp_prob(p[y]), gamma)))
}

pub fn cb_loss(p: &[f64], y: usize, lambda: f64, stats: &ClassStats) -> Result<LossEval> {
    check_lambda(lambda)?;
    check_distribution(p, y)?;
    check_index(y, stats.n_classes())?;
    let w = cb_weight(lambda, stats.count(y));
    let (v, g) = ce_value_grad(clamp_prob(p[y]));
    Ok(prob_form(p, y, (w * v, w * g)))
}

/// `−ln( n_y e^{z_y} / Σ n_i e^{z_i} )`.
pub fn bs_loss(z: &[f64], y: usize, stats: &ClassStats) -> Result<LossEval> {
    check_index(y, z.len())?;
    if stats.n_classes() != z.len() {
        return Err(Error::Shape(format!(
            "{} logits, {} class counts",
            z.len(),
            stats.n_classes()
        )));
    }
    let log_n: Vec<f64> = stats.counts().iter().map(|&n| (n as f64).ln()).collect();
    shifted_ce(z, y, &log_n, 1.0)
}

/// Cross entropy over margin-shifted logits `z_i − C/n_i^{1/4}`.
pub fn ldam_loss(z: &[f64], y: usize, margin_c: f64, stats: &ClassStats) -> Result<LossEval> {
    let margins = ldam_margins(margin_c, stats)?;
    check_index(y, z.len())?;
    if margins.len() != z.len() {
        return Err(Error::Shape(format!(
            "{} logits, {} class counts",
            z.len(),
            margins.len()
        )));
    }
    shifted_ce(z, y, &margins, -1.0)
}

pub fn tfl_loss(
    p: &[f64],
    y: usize,
    gamma: f64,
    beta: f64,
    tail: &TailPartition,
) -> Result<LossEval> {
    check_gamma(gamma)?;
    check_beta(beta)?;
    check_distribution(p, y)?;
    check_index(y, tail.mask().len())?;
    Ok(prob_form(
        p,
        y,
        tailed_value_grad(clamp_prob(p[y]), gamma, beta, tail.is_tail(y)),
    ))
}

/// Uniform entry point over logits.
pub fn loss_on_logits(spec: &LossSpec, z: &[f64], y: usize) -> Result<LossEval> {
    spec.eval(z, y)
}

/// Mean loss over a batch of logit rows. Gradient rows are scaled by
/// `1/batch`; the reduction runs in index order.
pub fn batch_loss(spec: &LossSpec, logits: &[Vec<f64>], labels: &[usize]) -> Result<(f64, Vec<Vec<f64>>)> {
    if logits.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} logit rows, {} labels",
            logits.len(),
            labels.len()
        )));
    }
    if logits.is_empty() {
        return Err(Error::Shape("empty batch".into()));
    }
    let scale = 1.0 / logits.len() as f64;
    let mut sum = 0.0;
    let mut grads = Vec::with_capacity(logits.len());
    for (z, &y) in logits.iter().zip(labels) {
        let eval = spec.eval(z, y)?;
        sum += eval.value;
        grads.push(eval.grad_z.into_iter().map(|g| g * scale).collect());
    }
    Ok((sum * scale, grads))
}
