//! Flat `key=value` run configuration with `dataset.`, `model.`, `loss.`,
//! `optim.` and `split.` sections. Lines starting with `#` are comments.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::datagen::{DatasetSpec, Preset};
use crate::error::{Error, Result};
use crate::fusion::{ModelConfig, OptimConfig};
use crate::losses::{LossKind, LossParams};

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    /// Generate from the `dataset.*` generator keys.
    Generate,
    Preset(String),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitConfig {
    pub test_fraction: f64,
    /// Share of the training part held out for early stopping; 0 trains on
    /// all of it for the full epoch budget.
    pub val_fraction: f64,
    pub stratified: bool,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            test_fraction: 0.2,
            val_fraction: 0.0,
            stratified: true,
        }
    }
}

impl SplitConfig {
    pub fn validate(&self) -> Result<()> {
        let inside = |f: f64| f > 0.0 && f < 1.0;
        if !inside(self.test_fraction) {
            return Err(Error::Config(format!(
                "split.test must be in (0, 1), got {}",
                self.test_fraction
            )));
        }
        if !(self.val_fraction == 0.0 || inside(self.val_fraction)) {
            return Err(Error::Config(format!(
                "split.val must be 0 or in (0, 1), got {}",
                self.val_fraction
            )));
        }
        if self.test_fraction + self.val_fraction * (1.0 - self.test_fraction) >= 1.0 {
            return Err(Error::Config("split fractions leave no training data".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub source: DatasetSource,
    /// Generator settings; `n_classes`, `n_samples`, `cir` and `n_drugs` are
    /// replaced by the preset's when the source is a preset.
    pub data: DatasetSpec,
    /// Seed of the generated dataset; the run seed when unset.
    pub data_seed: Option<u64>,
    pub loss: LossKind,
    pub loss_params: LossParams,
    /// `n_classes` and `embed_dims` are taken from the dataset at run time.
    pub model: ModelConfig,
    pub optim: OptimConfig,
    pub split: SplitConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let data = DatasetSpec::default();
        Self {
            seed: 0,
            source: DatasetSource::Generate,
            model: ModelConfig::new(data.n_classes, data.embed_dims),
            data,
            data_seed: None,
            loss: LossKind::Tfl,
            loss_params: LossParams::default(),
            optim: OptimConfig::default(),
            split: SplitConfig::default(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("bad value for {key}: `{value}`")))
}

fn parse_f64s<const N: usize>(key: &str, value: &str) -> Result<[f64; N]> {
    let items: Vec<f64> = value.split(',').map(|v| parse(key, v)).collect::<Result<_>>()?;
    items
        .try_into()
        .map_err(|_| Error::Config(format!("{key} needs {N} comma-separated values")))
}

fn parse_usizes<const N: usize>(key: &str, value: &str) -> Result<[usize; N]> {
    let items: Vec<usize> = value.split(',').map(|v| parse(key, v)).collect::<Result<_>>()?;
    items
        .try_into()
        .map_err(|_| Error::Config(format!("{key} needs {N} comma-separated values")))
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Sets one fully qualified key such as `loss.beta` or `seed`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let (section, field) = key.split_once('.').unwrap_or(("", key));
        match (section, field) {
            ("", "seed") => self.seed = parse(key, value)?,
            ("dataset", "source") => {
                self.source = match value {
                    "generate" => DatasetSource::Generate,
                    _ => {
                        return Err(Error::Config(format!(
                            "dataset.source must be `generate`; use dataset.preset or dataset.file, got `{value}`"
                        )))
                    }
                }
            }
            ("dataset", "preset") => {
                let preset = Preset::by_name(value)
                    .ok_or_else(|| Error::Config(format!("unknown preset `{value}`")))?;
                self.source = DatasetSource::Preset(preset.name.to_string());
            }
            ("dataset", "file") => self.source = DatasetSource::File(PathBuf::from(value)),
            ("dataset", "seed") => self.data_seed = Some(parse(key, value)?),
            ("dataset", "n_classes") => self.data.n_classes = parse(key, value)?,
            ("dataset", "n_samples") => self.data.n_samples = parse(key, value)?,
            ("dataset", "cir") => self.data.cir = parse(key, value)?,
            ("dataset", "n_drugs") => self.data.n_drugs = parse(key, value)?,
            ("dataset", "embed_dims") => self.data.embed_dims = parse_usizes(key, value)?,
            ("dataset", "signal") => self.data.signal = parse_f64s(key, value)?,
            ("dataset", "noise_std") => self.data.noise_std = parse(key, value)?,
            ("dataset", "drug_offset_std") => self.data.drug_offset_std = parse(key, value)?,
            ("loss", "kind") => self.loss = value.parse()?,
            ("loss", "gamma") => self.loss_params.gamma = parse(key, value)?,
            ("loss", "beta") => self.loss_params.beta = parse(key, value)?,
            ("loss", "lambda") => self.loss_params.lambda = parse(key, value)?,
            ("loss", "margin_c") => self.loss_params.margin_c = parse(key, value)?,
            ("loss", "ts") => self.loss_params.ts = parse(key, value)?,
            ("model", f) => self.model.set(f, value)?,
            ("optim", f) => self.optim.set(f, value)?,
            ("split", "test") => self.split.test_fraction = parse(key, value)?,
            ("split", "val") => self.split.val_fraction = parse(key, value)?,
            ("split", "stratified") => self.split.stratified = parse(key, value)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Applies every `key=value` line of `text` on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value, found `{line}`", i + 1)))?;
            self.set(k.trim(), v)
                .map_err(|e| Error::Config(format!("line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    /// Every setting as `key=value` lines; applying the text to a default
    /// config reproduces `self`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: String| writeln!(out, "{k}={v}").unwrap();
        line("seed", self.seed.to_string());
        match &self.source {
            DatasetSource::Generate => line("dataset.source", "generate".into()),
            DatasetSource::Preset(name) => line("dataset.preset", name.clone()),
            DatasetSource::File(path) => line("dataset.file", path.display().to_string()),
        }
        if let Some(s) = self.data_seed {
            line("dataset.seed", s.to_string());
        }
        let d = &self.data;
        line("dataset.n_classes", d.n_classes.to_string());
        line("dataset.n_samples", d.n_samples.to_string());
        line("dataset.cir", d.cir.to_string());
        line("dataset.n_drugs", d.n_drugs.to_string());
        line("dataset.embed_dims", join(&d.embed_dims));
        line("dataset.signal", join(&d.signal));
        line("dataset.noise_std", d.noise_std.to_string());
        line("dataset.drug_offset_std", d.drug_offset_std.to_string());
        let p = &self.loss_params;
        line("loss.kind", self.loss.name().to_string());
        line("loss.gamma", p.gamma.to_string());
        line("loss.beta", p.beta.to_string());
        line("loss.lambda", p.lambda.to_string());
        line("loss.margin_c", p.margin_c.to_string());
        line("loss.ts", p.ts.to_string());
        for (k, v) in self.model.to_pairs() {
            line(&format!("model.{k}"), v);
        }
        for (k, v) in self.optim.to_pairs() {
            line(&format!("optim.{k}"), v);
        }
        line("split.test", self.split.test_fraction.to_string());
        line("split.val", self.split.val_fraction.to_string());
        line("split.stratified", self.split.stratified.to_string());
        out
    }

    /// The generator spec this config resolves to.
    pub fn dataset_spec(&self) -> Result<DatasetSpec> {
        let mut spec = self.data.clone();
        spec.seed = self.data_seed.unwrap_or(self.seed);
        if let DatasetSource::Preset(name) = &self.source {
            let preset = Preset::by_name(name)
                .ok_or_else(|| Error::Config(format!("unknown preset `{name}`")))?;
            spec.n_classes = preset.n_classes;
            spec.n_samples = preset.n_samples;
            spec.cir = preset.cir;
            spec.n_drugs = preset.n_drugs;
        }
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut cfg = RunConfig::default();
        cfg.apply_text(
            "# comment\n\nseed=7\ndataset.preset=ddimdl\nloss.kind=ldam\nloss.margin_c=0.3\n\
             model.hidden_dim=12\nmodel.modalities=TE\noptim.lr=0.01\noptim.symmetric_pairs=true\n\
             split.test=0.25\nsplit.val=0.1\ndataset.seed=99\ndataset.signal=1,0.5,0.25,0\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.source, DatasetSource::Preset("DDIMDL".into()));
        assert_eq!(cfg.loss, LossKind::Ldam);
        let mut back = RunConfig::default();
        back.apply_text(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.dataset_spec().unwrap().n_samples, 37_243);
        assert_eq!(back.dataset_spec().unwrap().seed, 99);
    }

    #[test]
    fn errors_name_the_line() {
        let mut cfg = RunConfig::default();
        let err = cfg.apply_text("seed=1\nbogus.key=3\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(cfg.apply_text("no equals sign").is_err());
        assert!(cfg.set("dataset.preset", "nope").is_err());
        assert!(cfg.set("loss.kind", "hinge").is_err());
        assert!(cfg.set("split.test", "x").is_err());
    }

    #[test]
    fn split_validation() {
        SplitConfig::default().validate().unwrap();
        assert!(SplitConfig { test_fraction: 0.0, ..SplitConfig::default() }.validate().is_err());
        assert!(SplitConfig { test_fraction: 1.0, ..SplitConfig::default() }.validate().is_err());
        assert!(SplitConfig { val_fraction: 1.0, ..SplitConfig::default() }.validate().is_err());
    }
}
