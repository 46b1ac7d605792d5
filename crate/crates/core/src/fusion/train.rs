use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::datagen::{Dataset, Record};
use crate::error::{Error, Result};
use crate::fusion::{FusionModel, ForwardCache};
use crate::losses::{softmax, LossSpec};
use crate::metrics::{argmax, evaluate};

/// Mini-batch Adam settings.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Epochs without validation macro-F1 improvement before stopping. Only
    /// used when a validation set is given; 0 disables early stopping.
    pub patience: usize,
    /// Seed of the per-epoch shuffle.
    pub seed: u64,
    /// Also train on every pair with its drugs swapped.
    pub symmetric_pairs: bool,
}

impl Default for OptimConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            batch_size: 256,
            epochs: 50,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            patience: 10,
            seed: 0,
            symmetric_pairs: false,
        }
    }
}

impl OptimConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lr >= 0.0
            && self.lr.is_finite()
            && self.batch_size > 0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.eps > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid optimizer settings: {self:?}")))
        }
    }

    pub fn to_pairs(&self) -> Vec<(String, String)> {
        vec![
            ("lr".into(), self.lr.to_string()),
            ("batch_size".into(), self.batch_size.to_string()),
            ("epochs".into(), self.epochs.to_string()),
            ("beta1".into(), self.beta1.to_string()),
            ("beta2".into(), self.beta2.to_string()),
            ("eps".into(), self.eps.to_string()),
            ("patience".into(), self.patience.to_string()),
            ("symmetric_pairs".into(), self.symmetric_pairs.to_string()),
        ]
    }

    /// Sets one field from its `to_pairs` key. The shuffle seed comes from
    /// the run seed and has no key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad value for {key}: `{v}`")))
        }
        match key {
            "lr" => self.lr = num(key, value)?,
            "batch_size" => self.batch_size = num(key, value)?,
            "epochs" => self.epochs = num(key, value)?,
            "beta1" => self.beta1 = num(key, value)?,
            "beta2" => self.beta2 = num(key, value)?,
            "eps" => self.eps = num(key, value)?,
            "patience" => self.patience = num(key, value)?,
            "symmetric_pairs" => self.symmetric_pairs = num(key, value)?,
            other => return Err(Error::Config(format!("unknown optimizer key `{other}`"))),
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    /// 1-based.
    pub epoch: usize,
    /// Mean training loss over the epoch's samples.
    pub loss: f64,
    /// Accuracy of the training-time predictions made during the epoch.
    pub train_accuracy: f64,
    pub val_macro_f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainTrace {
    pub epochs: Vec<EpochStats>,
    /// Epoch whose parameters were kept, when early stopping was active.
    pub best_epoch: Option<usize>,
    pub stopped_early: bool,
}

impl TrainTrace {
    /// Delimited per-epoch table.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,loss,train_accuracy,val_macro_f1\n");
        for e in &self.epochs {
            let val = e.val_macro_f1.map_or_else(|| "NA".to_string(), |v| format!("{v:.6}"));
            out.push_str(&format!("{},{:.9},{:.6},{val}\n", e.epoch, e.loss, e.train_accuracy));
        }
        out
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grads: &[f64], cfg: &OptimConfig) {
        self.t += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.t);
        let c2 = 1.0 - cfg.beta2.powi(self.t);
        for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
            *p -= cfg.lr * (*m / c1) / ((*v / c2).sqrt() + cfg.eps);
        }
    }
}

/// Class-probability rows for every record.
pub fn predict_proba(model: &FusionModel, data: &Dataset) -> Result<Vec<Vec<f64>>> {
    let mut cache = ForwardCache::new();
    data.records
        .iter()
        .map(|r| {
            model.forward_into(&r.features_a, &r.features_b, &mut cache)?;
            if cache.logits().iter().any(|z| !z.is_finite()) {
                return Err(Error::Numeric("model logits"));
            }
            softmax(cache.logits())
        })
        .collect()
}

/// Trains `model` in place. Samples are visited in a seeded shuffled order;
/// within a batch per-sample gradients are summed in visiting order, so a
/// run is reproducible bit for bit.
pub fn train(
    model: &mut FusionModel,
    data: &Dataset,
    validation: Option<&Dataset>,
    loss: &LossSpec,
    cfg: &OptimConfig,
) -> Result<TrainTrace> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Input("training set is empty".into()));
    }
    if data.n_classes != model.config().n_classes {
        return Err(Error::Shape(format!(
            "dataset has {} classes, model has {}",
            data.n_classes,
            model.config().n_classes
        )));
    }

    // (record, swapped) pairs
    let mut samples: Vec<(&Record, bool)> = data.records.iter().map(|r| (r, false)).collect();
    if cfg.symmetric_pairs {
        samples.extend(data.records.iter().map(|r| (r, true)));
    }
    let n = samples.len();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut adam = Adam::new(model.n_params());
    let mut grads = vec![0.0; model.n_params()];
    let mut cache = ForwardCache::new();
    let mut sample_loss = vec![0.0; n];
    let mut trace = TrainTrace::default();
    let early_stop = validation.filter(|v| !v.is_empty() && cfg.patience > 0);
    let mut best: Option<(f64, usize, Vec<f64>)> = None;

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut correct = 0usize;
        for (batch_idx, batch) in order.chunks(cfg.batch_size).enumerate() {
            grads.iter_mut().for_each(|g| *g = 0.0);
            let scale = 1.0 / batch.len() as f64;
            for &s in batch {
                let (r, swapped) = samples[s];
                let (a, b) = if swapped {
                    (&r.features_b, &r.features_a)
                } else {
                    (&r.features_a, &r.features_b)
                };
                model.forward_into(a, b, &mut cache)?;
                let logits = cache.logits();
                if logits.iter().any(|z| !z.is_finite()) {
                    return Err(Error::Divergence { epoch, batch: batch_idx });
                }
                let eval = loss.eval(logits, r.label)?;
                if !eval.value.is_finite() {
                    return Err(Error::Divergence { epoch, batch: batch_idx });
                }
                correct += usize::from(argmax(logits) == r.label);
                sample_loss[s] = eval.value;
                let grad_z: Vec<f64> = eval.grad_z.iter().map(|g| g * scale).collect();
                model.backward_into(&cache, &grad_z, &mut grads, None)?;
            }
            if grads.iter().any(|g| !g.is_finite()) {
                return Err(Error::Divergence { epoch, batch: batch_idx });
            }
            model.update_params(|p| adam.step(p, &grads, cfg));
        }

        let val_macro_f1 = match early_stop {
            Some(v) => {
                let scores = predict_proba(model, v)?;
                Some(evaluate(&scores, &v.labels())?.macro_f1)
            }
            None => None,
        };
        trace.epochs.push(EpochStats {
            epoch,
            loss: sample_loss.iter().sum::<f64>() / n as f64,
            train_accuracy: correct as f64 / n as f64,
            val_macro_f1,
        });

        if let Some(f1) = val_macro_f1 {
            let improved = best.as_ref().is_none_or(|(b, _, _)| f1 > *b);
            if improved {
                best = Some((f1, epoch, model.params().to_vec()));
            } else if epoch - best.as_ref().unwrap().1 >= cfg.patience {
                trace.stopped_early = true;
                break;
            }
        }
    }

    if let Some((_, epoch, params)) = best {
        model.update_params(|p| p.copy_from_slice(&params));
        trace.best_epoch = Some(epoch);
    }
    Ok(trace)
}
