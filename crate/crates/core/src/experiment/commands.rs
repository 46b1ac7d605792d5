use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use crate::analysis::{
    curve_export, default_grid, fl_vanishing_threshold, tfl_vanishing_threshold, write_curve_file, CurveSpec,
    VanishingReport,
};
use crate::datagen::{generate_dataset, read_dataset, write_dataset, Dataset, DatasetSpec};
use crate::error::{Error, Result};
use crate::experiment::{split_indices, DatasetSource, RunConfig, Split};
use crate::fusion::{predict_proba, save_checkpoint, train, FusionModel, TrainTrace};
use crate::imbalance::ClassStats;
use crate::losses::{LossKind, LossSpec};
use crate::metrics::{evaluate, MetricsReport, SubsetMetrics};
use crate::modality::ModalitySet;

const SPLIT_STREAM: u64 = 0x5151_7e57;
const SHUFFLE_STREAM: u64 = 0x0b5e_55ed;

fn stream(seed: u64, tag: u64) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ tag
}

/// Everything a finished training run produced.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: MetricsReport,
    /// Macro metrics over the tail classes of the training split.
    pub tail: SubsetMetrics,
    pub tail_classes: Vec<usize>,
    pub trace: TrainTrace,
    pub model: FusionModel,
    pub n_train: usize,
    pub n_test: usize,
}

/// A dataset together with its split.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub data: Dataset,
    pub split: Split,
}

pub fn load_dataset(cfg: &RunConfig) -> Result<Dataset> {
    match &cfg.source {
        DatasetSource::File(path) => read_dataset(path),
        DatasetSource::Generate | DatasetSource::Preset(_) => Ok(generate_dataset(&cfg.dataset_spec()?)?.0),
    }
}

pub fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    let data = load_dataset(cfg)?;
    let split = split_indices(&data.labels(), data.n_classes, &cfg.split, stream(cfg.seed, SPLIT_STREAM))?;
    Ok(Prepared { data, split })
}

/// Trains and evaluates one configuration on an already prepared dataset.
pub fn run_prepared(cfg: &RunConfig, prepared: &Prepared) -> Result<RunOutcome> {
    let Prepared { data, split } = prepared;
    let train_set = data.subset(&split.train);
    let val_set = data.subset(&split.validation);
    let test_set = data.subset(&split.test);
    if test_set.is_empty() {
        return Err(Error::Config("the split leaves no test samples".into()));
    }

    let stats = ClassStats::from_labels(&train_set.labels(), data.n_classes).map_err(|e| {
        Error::Config(format!("training split cannot provide class statistics: {e}"))
    })?;
    let loss = LossSpec::new(cfg.loss, cfg.loss_params, Some(&stats))?;

    let mut model_cfg = cfg.model.clone();
    model_cfg.n_classes = data.n_classes;
    model_cfg.embed_dims = data.embed_dims;
    let mut model = FusionModel::init(model_cfg, cfg.seed)?;

    let mut optim = cfg.optim.clone();
    optim.seed = stream(cfg.seed, SHUFFLE_STREAM);
    let validation = (!val_set.is_empty()).then_some(&val_set);
    let trace = train(&mut model, &train_set, validation, &loss, &optim)?;

    let scores = predict_proba(&model, &test_set)?;
    let report = evaluate(&scores, &test_set.labels())?;
    let tail_partition = stats.tail_partition(cfg.loss_params.ts)?;
    let tail = report.subset(tail_partition.mask());
    Ok(RunOutcome {
        report,
        tail,
        tail_classes: tail_partition.tail_classes().collect(),
        trace,
        model,
        n_train: train_set.len(),
        n_test: test_set.len(),
    })
}

fn timestamp_line() -> String {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("# generated_unix={secs}\n")
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn tail_lines(tail: &SubsetMetrics) -> String {
    format!(
        "tail_classes={}\ntail_precision={:.6}\ntail_recall={:.6}\ntail_f1={:.6}\n",
        tail.n_classes, tail.precision, tail.recall, tail.f1
    )
}

/// Key-value summary of a run. Only the first line carries a timestamp.
pub fn metrics_text(cfg: &RunConfig, outcome: &RunOutcome) -> String {
    let mut out = timestamp_line();
    writeln!(out, "loss={}", cfg.loss).unwrap();
    writeln!(out, "seed={}", cfg.seed).unwrap();
    writeln!(out, "n_train={}", outcome.n_train).unwrap();
    writeln!(out, "n_test={}", outcome.n_test).unwrap();
    writeln!(out, "epochs_run={}", outcome.trace.epochs.len()).unwrap();
    out.push_str(&outcome.report.to_key_value());
    out.push_str(&tail_lines(&outcome.tail));
    out
}

/// Writes `metrics.txt`, `per_class.csv`, `trace.csv`, `config.txt` and
/// `model.ckpt` into `dir`.
pub fn write_run(dir: &Path, cfg: &RunConfig, outcome: &RunOutcome) -> Result<()> {
    create_dir(dir)?;
    write_file(&dir.join("metrics.txt"), &metrics_text(cfg, outcome))?;
    write_file(&dir.join("per_class.csv"), &outcome.report.per_class_table())?;
    write_file(&dir.join("trace.csv"), &outcome.trace.to_csv())?;
    write_file(&dir.join("config.txt"), &cfg.to_text())?;
    save_checkpoint(&outcome.model, dir.join("model.ckpt"))
}

pub fn cmd_gen(spec: &DatasetSpec, out: &Path) -> Result<(Dataset, ClassStats)> {
    let (data, stats) = generate_dataset(spec)?;
    write_dataset(&data, out)?;
    Ok((data, stats))
}

pub fn cmd_train(cfg: &RunConfig, out: Option<&Path>) -> Result<RunOutcome> {
    let outcome = run_prepared(cfg, &prepare(cfg)?)?;
    if let Some(dir) = out {
        write_run(dir, cfg, &outcome)?;
    }
    Ok(outcome)
}

/// One row of a comparison or ablation table.
#[derive(Debug, Clone)]
pub struct ComparisonRow {
    pub label: String,
    pub report: MetricsReport,
    pub tail: SubsetMetrics,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".into(), |v| format!("{v:.6}"))
}

pub fn comparison_table(first_column: &str, rows: &[ComparisonRow]) -> String {
    let mut out = format!(
        "{first_column},accuracy,precision,recall,f1,auc,aupr,tail_precision,tail_recall,tail_f1\n"
    );
    for r in rows {
        let m = &r.report;
        writeln!(
            out,
            "{},{:.6},{:.6},{:.6},{:.6},{},{},{:.6},{:.6},{:.6}",
            r.label,
            m.accuracy,
            m.macro_precision,
            m.macro_recall,
            m.macro_f1,
            fmt_opt(m.macro_auc),
            fmt_opt(m.macro_aupr),
            r.tail.precision,
            r.tail.recall,
            r.tail.f1
        )
        .unwrap();
    }
    out
}

fn write_table(dir: &Path, name: &str, table: &str) -> Result<()> {
    create_dir(dir)?;
    write_file(&dir.join(name), &format!("{}{table}", timestamp_line()))
}

/// Trains one model per loss on a shared dataset, split and initialization.
pub fn cmd_compare_losses(cfg: &RunConfig, losses: &[LossKind], out: Option<&Path>) -> Result<Vec<ComparisonRow>> {
    if losses.is_empty() {
        return Err(Error::Config("no losses to compare".into()));
    }
    let prepared = prepare(cfg)?;
    let mut rows = Vec::with_capacity(losses.len());
    for &kind in losses {
        let run_cfg = RunConfig { loss: kind, ..cfg.clone() };
        let outcome = run_prepared(&run_cfg, &prepared)?;
        if let Some(dir) = out {
            write_run(&dir.join(kind.name()), &run_cfg, &outcome)?;
        }
        rows.push(ComparisonRow {
            label: kind.name().to_string(),
            report: outcome.report,
            tail: outcome.tail,
        });
    }
    if let Some(dir) = out {
        write_table(dir, "compare.csv", &comparison_table("loss", &rows))?;
    }
    Ok(rows)
}

/// Trains one model per modality subset.
pub fn cmd_ablate(cfg: &RunConfig, variants: &[ModalitySet], out: Option<&Path>) -> Result<Vec<ComparisonRow>> {
    if variants.is_empty() {
        return Err(Error::Config("no variants to run".into()));
    }
    let prepared = prepare(cfg)?;
    let mut rows = Vec::with_capacity(variants.len());
    for &set in variants {
        let mut run_cfg = cfg.clone();
        run_cfg.model.modalities = set;
        let outcome = run_prepared(&run_cfg, &prepared)?;
        let label = format!("TFL-{set}");
        if let Some(dir) = out {
            write_run(&dir.join(&label), &run_cfg, &outcome)?;
        }
        rows.push(ComparisonRow {
            label,
            report: outcome.report,
            tail: outcome.tail,
        });
    }
    if let Some(dir) = out {
        write_table(dir, "ablation.csv", &comparison_table("variant", &rows))?;
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Beta,
    Ts,
    Gamma,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Beta => "beta",
            SweepParam::Ts => "ts",
            SweepParam::Gamma => "gamma",
        }
    }

    fn check(self, v: f64) -> Result<()> {
        let ok = match self {
            SweepParam::Beta | SweepParam::Gamma => v >= 0.0 && v.is_finite(),
            SweepParam::Ts => (0.0..=1.0).contains(&v),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("{} value {v} outside its domain", self.name())))
        }
    }
}

impl std::str::FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "beta" => Ok(SweepParam::Beta),
            "ts" => Ok(SweepParam::Ts),
            "gamma" => Ok(SweepParam::Gamma),
            other => Err(Error::Config(format!("cannot sweep `{other}`; use beta, ts or gamma"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub param: SweepParam,
    pub grid: Vec<f64>,
    /// Runs per grid point, with seeds `seed, seed + 1, ...`.
    pub repeats: usize,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::Config("sweep grid is empty".into()));
        }
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be at least 1".into()));
        }
        self.grid.iter().try_for_each(|&v| self.param.check(v))
    }
}

/// Mean and sample standard deviation of one metric at one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spread {
    pub mean: Option<f64>,
    pub std: Option<f64>,
}

impl Spread {
    fn of(values: &[Option<f64>]) -> Self {
        let v: Vec<f64> = values.iter().flatten().copied().collect();
        let n = v.len();
        if n == 0 {
            return Spread { mean: None, std: None };
        }
        let mean = v.iter().sum::<f64>() / n as f64;
        let std = (n >= 2).then(|| (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt());
        Spread { mean: Some(mean), std }
    }
}

pub const SWEEP_METRICS: [&str; 7] = ["accuracy", "precision", "recall", "f1", "auc", "aupr", "tail_f1"];

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub value: f64,
    pub runs: Vec<ComparisonRow>,
    /// In `SWEEP_METRICS` order.
    pub spreads: Vec<Spread>,
}

fn metric_values(row: &ComparisonRow) -> [Option<f64>; 7] {
    let m = &row.report;
    [
        Some(m.accuracy),
        Some(m.macro_precision),
        Some(m.macro_recall),
        Some(m.macro_f1),
        m.macro_auc,
        m.macro_aupr,
        Some(row.tail.f1),
    ]
}

pub fn sweep_table(param: SweepParam, points: &[SweepPoint]) -> String {
    let mut out = format!("{},repeats", param.name());
    for m in SWEEP_METRICS {
        write!(out, ",{m}_mean,{m}_std").unwrap();
    }
    out.push('\n');
    for p in points {
        write!(out, "{},{}", p.value, p.runs.len()).unwrap();
        for s in &p.spreads {
            write!(out, ",{},{}", fmt_opt(s.mean), fmt_opt(s.std)).unwrap();
        }
        out.push('\n');
    }
    out
}

/// Trains `repeats` seeds at every grid value of one loss hyperparameter.
pub fn cmd_sweep(cfg: &RunConfig, sweep: &SweepConfig, out: Option<&Path>) -> Result<Vec<SweepPoint>> {
    sweep.validate()?;
    let prepared: Vec<Prepared> = (0..sweep.repeats as u64)
        .map(|r| prepare(&RunConfig { seed: cfg.seed + r, ..cfg.clone() }))
        .collect::<Result<_>>()?;
    let mut points = Vec::with_capacity(sweep.grid.len());
    for &value in &sweep.grid {
        let mut runs = Vec::with_capacity(sweep.repeats);
        for (r, prep) in prepared.iter().enumerate() {
            let mut run_cfg = RunConfig { seed: cfg.seed + r as u64, ..cfg.clone() };
            match sweep.param {
                SweepParam::Beta => run_cfg.loss_params.beta = value,
                SweepParam::Ts => run_cfg.loss_params.ts = value,
                SweepParam::Gamma => run_cfg.loss_params.gamma = value,
            }
            let outcome = run_prepared(&run_cfg, prep)?;
            runs.push(ComparisonRow {
                label: format!("{}={value}", sweep.param.name()),
                report: outcome.report,
                tail: outcome.tail,
            });
        }
        let values: Vec<[Option<f64>; 7]> = runs.iter().map(metric_values).collect();
        let spreads = (0..SWEEP_METRICS.len())
            .map(|k| Spread::of(&values.iter().map(|v| v[k]).collect::<Vec<_>>()))
            .collect();
        points.push(SweepPoint { value, runs, spreads });
    }
    if let Some(dir) = out {
        write_table(dir, "sweep.csv", &sweep_table(sweep.param, &points))?;
    }
    Ok(points)
}

/// Vanishing-threshold report for FL or TFL, plus CE/FL/TFL curve tables
/// written to `out` when given.
pub fn cmd_analyze(kind: LossKind, gamma: f64, beta: f64, out: Option<&Path>) -> Result<VanishingReport> {
    let report = match kind {
        LossKind::Fl => fl_vanishing_threshold(gamma)?,
        LossKind::Tfl => tfl_vanishing_threshold(gamma, beta)?,
        other => {
            return Err(Error::param(
                "loss",
                format!("vanishing analysis covers fl and tfl, not {other}"),
            ))
        }
    };
    if let Some(dir) = out {
        create_dir(dir)?;
        let grid = default_grid();
        for spec in [CurveSpec::ce(), CurveSpec::focal(gamma), CurveSpec::tailed(gamma, beta)] {
            let rows = curve_export(&spec, &grid)?;
            write_curve_file(&rows, &dir.join(format!("curve_{}.csv", spec.label())))?;
        }
        write_file(&dir.join("analysis.txt"), &analysis_text(&report))?;
    }
    Ok(report)
}

pub fn analysis_text(report: &VanishingReport) -> String {
    let mut out = String::new();
    writeln!(out, "loss={}", report.loss_kind).unwrap();
    writeln!(out, "gamma={}", report.gamma).unwrap();
    if let Some(b) = report.beta {
        writeln!(out, "beta={b}").unwrap();
    }
    writeln!(out, "crossover_p={:.5}", report.crossover_p).unwrap();
    writeln!(out, "in_unit_interval={}", report.in_unit_interval).unwrap();
    out
}
