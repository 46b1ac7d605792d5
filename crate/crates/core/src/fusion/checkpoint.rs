//! Text checkpoints: a header, the model config as `key=value` lines, then
//! one `tensor <name> <d0>x<d1>...` line per tensor followed by a line of its
//! values in shortest round-trip form.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fusion::{FusionModel, ModelConfig};

const HEADER: &str = "tfmd-checkpoint v1";

pub fn checkpoint_to_string(model: &FusionModel) -> String {
    let mut out = String::new();
    writeln!(out, "{HEADER}").unwrap();
    writeln!(out, "seed={}", model.seed()).unwrap();
    for (k, v) in model.config().to_pairs() {
        writeln!(out, "model.{k}={v}").unwrap();
    }
    for t in model.tensors() {
        let shape: Vec<String> = t.shape.iter().map(|d| d.to_string()).collect();
        writeln!(out, "tensor {} {}", t.name, shape.join("x")).unwrap();
        let values = &model.params()[t.offset..t.offset + t.len()];
        for (i, v) in values.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            write!(out, "{v:e}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn checkpoint_from_str(text: &str) -> Result<FusionModel> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let parse = |line: usize, reason: String| Error::Parse { line, reason };

    match lines.next() {
        Some((_, HEADER)) => {}
        _ => return Err(parse(1, "not a checkpoint".into())),
    }
    let (line, seed_line) = lines.next().ok_or_else(|| parse(2, "missing seed".into()))?;
    let seed = seed_line
        .strip_prefix("seed=")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| parse(line, format!("bad seed line `{seed_line}`")))?;

    let mut config = ModelConfig::new(2, [4; 4]);
    let mut pending = None;
    for (line, text) in lines.by_ref() {
        if let Some(rest) = text.strip_prefix("model.") {
            let (k, v) = rest
                .split_once('=')
                .ok_or_else(|| parse(line, format!("bad config line `{text}`")))?;
            config.set(k, v).map_err(|e| parse(line, e.to_string()))?;
        } else {
            pending = Some((line, text));
            break;
        }
    }
    config.validate()?;

    let template = FusionModel::init(config.clone(), seed)?;
    let mut params = vec![0.0; template.n_params()];
    let expected = template.tensors();
    let mut next = pending;
    for t in &expected {
        let (line, head) = next.ok_or_else(|| {
            Error::Shape(format!("checkpoint ends before tensor {}", t.name))
        })?;
        let mut parts = head.split_whitespace();
        if parts.next() != Some("tensor") {
            return Err(parse(line, format!("expected tensor header, found `{head}`")));
        }
        let name = parts.next().unwrap_or_default();
        let shape: Vec<usize> = parts
            .next()
            .unwrap_or_default()
            .split('x')
            .map(|d| d.parse().map_err(|_| parse(line, format!("bad shape in `{head}`"))))
            .collect::<Result<_>>()?;
        if name != t.name || shape != t.shape {
            return Err(Error::Shape(format!(
                "line {line}: tensor {name} {shape:?} where the config requires {} {:?}",
                t.name, t.shape
            )));
        }
        let (vline, values) = lines
            .next()
            .ok_or_else(|| parse(line + 1, format!("missing values for {name}")))?;
        let values: Vec<f64> = values
            .split_whitespace()
            .map(|v| {
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| parse(vline, format!("bad value `{v}`")))
            })
            .collect::<Result<_>>()?;
        if values.len() != t.len() {
            return Err(Error::Shape(format!(
                "line {vline}: tensor {name} has {} values, shape needs {}",
                values.len(),
                t.len()
            )));
        }
        params[t.offset..t.offset + t.len()].copy_from_slice(&values);
        next = lines.next();
    }
    if let Some((line, extra)) = next {
        return Err(Error::Shape(format!("line {line}: unexpected content `{extra}`")));
    }
    FusionModel::from_parts(config, seed, params)
}

pub fn save_checkpoint(model: &FusionModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, checkpoint_to_string(model)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<FusionModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    checkpoint_from_str(&text)
}

/// Loads a checkpoint and requires its architecture to equal `expected`.
pub fn load_checkpoint_for(path: impl AsRef<Path>, expected: &ModelConfig) -> Result<FusionModel> {
    let model = load_checkpoint(path)?;
    if model.config() != expected {
        return Err(Error::Shape(format!(
            "checkpoint architecture {:?} differs from {:?}",
            model.config(),
            expected
        )));
    }
    Ok(model)
}
