//! Line-oriented dataset files.
//!
//! ```text
//! tfmd-dataset v1 classes=3 g=2 s=2 t=1 e=1
//! p0<TAB>4<TAB>7<TAB>2<TAB>g_a<TAB>s_a<TAB>t_a<TAB>e_a<TAB>g_b<TAB>s_b<TAB>t_b<TAB>e_b
//! ```
//!
//! Each block is a comma-separated list of values written with nine
//! significant digits.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::datagen::{Dataset, DrugFeatures, Record};
use crate::error::{Error, Result};

const MAGIC: &str = "tfmd-dataset";
const VERSION: &str = "v1";
const BLOCK_KEYS: [&str; 4] = ["g", "s", "t", "e"];

pub fn write_dataset(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_dataset_to(data, &mut out).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn write_dataset_to(data: &Dataset, out: &mut impl Write) -> Result<()> {
    let io_err = |e| Error::io("<writer>", e);
    let d = data.embed_dims;
    writeln!(
        out,
        "{MAGIC} {VERSION} classes={} g={} s={} t={} e={}",
        data.n_classes, d[0], d[1], d[2], d[3]
    )
    .map_err(io_err)?;

    let mut line = String::new();
    for r in &data.records {
        if r.pair_id.is_empty() || r.pair_id.contains(['\t', '\n', '\r']) {
            return Err(Error::Input(format!("pair id {:?} is not writable", r.pair_id)));
        }
        if r.label >= data.n_classes {
            return Err(Error::Index { index: r.label, len: data.n_classes });
        }
        if r.features_a.widths() != d || r.features_b.widths() != d {
            return Err(Error::Shape(format!("record {} has mismatched block widths", r.pair_id)));
        }
        line.clear();
        write!(line, "{}\t{}\t{}\t{}", r.pair_id, r.drug_a, r.drug_b, r.label).unwrap();
        for block in r.features_a.blocks.iter().chain(&r.features_b.blocks) {
            line.push('\t');
            for (k, v) in block.iter().enumerate() {
                if k > 0 {
                    line.push(',');
                }
                write!(line, "{v:.8e}").unwrap();
            }
        }
        line.push('\n');
        out.write_all(line.as_bytes()).map_err(io_err)?;
    }
    Ok(())
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset_from(BufReader::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn read_dataset_from(input: impl BufRead) -> Result<Dataset> {
    let mut lines = input.lines();
    let header = match lines.next() {
        Some(line) => line.map_err(|e| Error::io("<reader>", e))?,
        None => return Err(Error::Parse { line: 1, reason: "missing header".into() }),
    };
    let (n_classes, dims) = parse_header(&header)?;

    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line.map_err(|e| Error::io("<reader>", e))?;
        if line.is_empty() {
            continue;
        }
        records.push(parse_record(&line, line_no, n_classes, dims)?);
    }
    Ok(Dataset { n_classes, embed_dims: dims, records })
}

fn parse_header(header: &str) -> Result<(usize, [usize; 4])> {
    let bad = |reason: &str| Error::Parse { line: 1, reason: reason.into() };
    let mut parts = header.split_whitespace();
    if parts.next() != Some(MAGIC) {
        return Err(bad("not a dataset file"));
    }
    if parts.next() != Some(VERSION) {
        return Err(bad("unsupported version"));
    }
    let mut field = |key: &str| -> Result<usize> {
        let token = parts.next().ok_or_else(|| bad("truncated header"))?;
        let value = token
            .strip_prefix(key)
            .and_then(|rest| rest.strip_prefix('='))
            .ok_or_else(|| bad(&format!("expected {key}=, found {token:?}")))?;
        value.parse().map_err(|_| bad(&format!("bad value for {key}: {value:?}")))
    };
    let n_classes = field("classes")?;
    let mut dims = [0; 4];
    for (m, key) in BLOCK_KEYS.iter().enumerate() {
        dims[m] = field(key)?;
    }
    if parts.next().is_some() {
        return Err(bad("trailing header fields"));
    }
    if n_classes == 0 || dims.contains(&0) {
        return Err(Error::Schema { line: 1, reason: "class count and widths must be positive".into() });
    }
    Ok((n_classes, dims))
}

fn parse_record(line: &str, line_no: usize, n_classes: usize, dims: [usize; 4]) -> Result<Record> {
    let parse_err = |reason: String| Error::Parse { line: line_no, reason };
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 12 {
        return Err(parse_err(format!("expected 12 tab-separated fields, found {}", fields.len())));
    }
    let int = |s: &str, what: &str| -> Result<u64> {
        s.parse().map_err(|_| parse_err(format!("bad {what}: {s:?}")))
    };
    let drug_a = int(fields[1], "drug id")?;
    let drug_b = int(fields[2], "drug id")?;
    let label = int(fields[3], "label")? as usize;
    if drug_a > u32::MAX as u64 || drug_b > u32::MAX as u64 {
        return Err(parse_err("drug id out of range".into()));
    }
    if label >= n_classes {
        return Err(Error::Schema {
            line: line_no,
            reason: format!("label {label} outside {n_classes} classes"),
        });
    }

    let mut blocks: Vec<Vec<f64>> = Vec::with_capacity(8);
    for (k, field) in fields[4..].iter().enumerate() {
        let block = field
            .split(',')
            .map(|v| {
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| parse_err(format!("bad value {v:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        let m = k % 4;
        if block.len() != dims[m] {
            return Err(Error::Schema {
                line: line_no,
                reason: format!(
                    "block {} of drug {} has width {}, header says {}",
                    BLOCK_KEYS[m],
                    if k < 4 { 'a' } else { 'b' },
                    block.len(),
                    dims[m]
                ),
            });
        }
        blocks.push(block);
    }
    let mut it = blocks.into_iter();
    let mut take4 = || DrugFeatures { blocks: std::array::from_fn(|_| it.next().unwrap()) };
    let features_a = take4();
    let features_b = take4();
    Ok(Record {
        pair_id: fields[0].to_string(),
        drug_a: drug_a as u32,
        drug_b: drug_b as u32,
        label,
        features_a,
        features_b,
    })
}
