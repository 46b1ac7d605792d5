use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::modality::{Modality, ModalitySet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    #[inline]
    pub(crate) fn apply(self, v: &mut [f64]) {
        match self {
            Activation::Relu => v.iter_mut().for_each(|x| *x = x.max(0.0)),
            Activation::Tanh => v.iter_mut().for_each(|x| *x = x.tanh()),
        }
    }

    /// Derivative expressed through the activation's output.
    #[inline]
    pub(crate) fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
        })
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            other => Err(Error::Config(format!("unknown activation `{other}`"))),
        }
    }
}

/// Architecture of the fusion network.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    /// Input widths of the G, S, T, E blocks.
    pub embed_dims: [usize; 4],
    /// Output width of every per-stage modality map.
    pub hidden_dim: usize,
    /// Number of fusion stages.
    pub k_stages: usize,
    /// Widths of the first three classifier layers; the fourth emits
    /// `n_classes` logits.
    pub classifier_hidden: [usize; 3],
    pub activation: Activation,
    pub pool_window: usize,
    pub n_classes: usize,
    pub modalities: ModalitySet,
}

impl ModelConfig {
    pub fn new(n_classes: usize, embed_dims: [usize; 4]) -> Self {
        Self {
            embed_dims,
            hidden_dim: 256,
            k_stages: 2,
            classifier_hidden: [256, 256, 128],
            activation: Activation::Relu,
            pool_window: 4,
            n_classes,
            modalities: ModalitySet::FULL,
        }
    }

    /// All four classifier widths, ending in `n_classes`.
    pub fn classifier_dims(&self) -> [usize; 4] {
        let [a, b, c] = self.classifier_hidden;
        [a, b, c, self.n_classes]
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.n_classes < 2 {
            return bad(format!("n_classes must be >= 2, got {}", self.n_classes));
        }
        if self.k_stages < 1 {
            return bad("k_stages must be >= 1".into());
        }
        if self.hidden_dim == 0 || self.classifier_hidden.contains(&0) {
            return bad("layer widths must be positive".into());
        }
        if self.pool_window == 0 {
            return bad("pool_window must be positive".into());
        }
        if self.modalities.is_empty() {
            return bad("no modalities enabled".into());
        }
        for m in self.modalities.iter() {
            let d = self.embed_dims[m.index()];
            if d == 0 || !d.is_multiple_of(self.pool_window) {
                return bad(format!(
                    "{} width {d} is not a positive multiple of pool window {}",
                    m.letter(),
                    self.pool_window
                ));
            }
        }
        Ok(())
    }

    /// Flat `key=value` pairs, keys without any section prefix.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let join = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        vec![
            ("embed_dims".into(), join(&self.embed_dims)),
            ("hidden_dim".into(), self.hidden_dim.to_string()),
            ("k_stages".into(), self.k_stages.to_string()),
            ("classifier_dims".into(), join(&self.classifier_hidden)),
            ("activation".into(), self.activation.to_string()),
            ("pool_window".into(), self.pool_window.to_string()),
            ("n_classes".into(), self.n_classes.to_string()),
            ("modalities".into(), self.modalities.to_string()),
        ]
    }

    /// Sets one field from its `to_pairs` key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "embed_dims" => self.embed_dims = parse_list(key, value)?,
            "hidden_dim" => self.hidden_dim = parse_num(key, value)?,
            "k_stages" => self.k_stages = parse_num(key, value)?,
            "classifier_dims" => self.classifier_hidden = parse_list(key, value)?,
            "activation" => self.activation = value.parse()?,
            "pool_window" => self.pool_window = parse_num(key, value)?,
            "n_classes" => self.n_classes = parse_num(key, value)?,
            "modalities" => {
                self.modalities = value
                    .parse()
                    .map_err(|e: Error| Error::Config(e.to_string()))?
            }
            other => return Err(Error::Config(format!("unknown model key `{other}`"))),
        }
        Ok(())
    }

    /// Width of one drug's fused representation: pooled input plus final
    /// stage output for each enabled modality.
    pub fn fused_width(&self) -> usize {
        self.modalities
            .iter()
            .map(|m| self.embed_dims[m.index()] / self.pool_window + self.hidden_dim)
            .sum()
    }

    /// Input width of modality `m`'s map at `stage` (1-based).
    pub(crate) fn stage_input(&self, m: Modality, stage: usize) -> usize {
        let width = |m: Modality| {
            if stage == 1 {
                self.embed_dims[m.index()]
            } else {
                self.hidden_dim
            }
        };
        let enhancer = m
            .enhancer()
            .filter(|e| self.modalities.contains(*e))
            .map_or(0, width);
        width(m) + enhancer
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value for {key}: `{value}`")))
}

fn parse_list<const N: usize>(key: &str, value: &str) -> Result<[usize; N]> {
    let items: Vec<usize> = value
        .split(',')
        .map(|v| parse_num(key, v.trim()))
        .collect::<Result<_>>()?;
    items
        .try_into()
        .map_err(|_| Error::Config(format!("{key} needs {N} comma-separated values")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_round_trip() {
        let mut cfg = ModelConfig::new(7, [8, 4, 12, 4]);
        cfg.modalities = "TE".parse().unwrap();
        cfg.activation = Activation::Tanh;
        let mut back = ModelConfig::new(2, [4; 4]);
        for (k, v) in cfg.to_pairs() {
            back.set(&k, &v).unwrap();
        }
        assert_eq!(back, cfg);
    }

    #[test]
    fn validation() {
        let ok = ModelConfig::new(3, [8; 4]);
        ok.validate().unwrap();
        assert!(ModelConfig { k_stages: 0, ..ok.clone() }.validate().is_err());
        assert!(ModelConfig { embed_dims: [8, 6, 8, 8], ..ok.clone() }.validate().is_err());
        // a disabled modality's width is irrelevant
        let partial = ModelConfig {
            embed_dims: [8, 6, 8, 8],
            modalities: "GTE".parse().unwrap(),
            ..ok.clone()
        };
        partial.validate().unwrap();
        assert!(ModelConfig { n_classes: 1, ..ok.clone() }.validate().is_err());
        assert!(ok.clone().set("bogus", "1").is_err());
        assert!(ok.clone().set("embed_dims", "1,2").is_err());
    }

    #[test]
    fn widths() {
        let cfg = ModelConfig {
            hidden_dim: 5,
            ..ModelConfig::new(3, [8, 4, 12, 4])
        };
        assert_eq!(cfg.fused_width(), (2 + 5) + (1 + 5) + (3 + 5) + (1 + 5));
        assert_eq!(cfg.stage_input(Modality::Graph, 1), 12);
        assert_eq!(cfg.stage_input(Modality::Graph, 2), 10);
        assert_eq!(cfg.stage_input(Modality::Sequence, 1), 4);
        let g_only = ModelConfig { modalities: "G".parse().unwrap(), ..cfg };
        assert_eq!(g_only.stage_input(Modality::Graph, 1), 8);
    }
}
