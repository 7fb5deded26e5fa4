//! End-to-end runs: corpus preparation, partitioning, baselines and
//! report rows for the three experiment presets.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::attribution::{build_index, AttributionIndex};
use crate::baselines::{lm_perplexity, train_memorizer, train_ngram_lm, LmConfig, Smoothing};
use crate::corpus::{self, dedup, read_seeds, Instance, PartitionManifest, Scheme, Seed, SplitName};
use crate::kgstore::{load_ntriples, Graph};
use crate::metrics::{self, corpus_bleu, leakage_report, LeakageStats};
use crate::partitioner::{
    halve_seed_test_ids, leaky_partition, sanitized_partition, select_seed_test_ids, split_templates, subsample_train,
    validate_ratios, SanitizeDiagnostics, Split3,
};
use crate::synthesis::{extract_template, generate_corpus, Template};
use crate::toy;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{stage}: {message}")]
    Stage { stage: &'static str, message: String },
}

fn stage<E: fmt::Display>(stage: &'static str) -> impl FnOnce(E) -> ExperimentError {
    move |e| ExperimentError::Stage {
        stage,
        message: e.to_string(),
    }
}

/// Run configuration. Loaded from a flat TOML file; every key is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// `seeds.jsonl`; the bundled toy seeds when absent.
    pub seeds: Option<PathBuf>,
    /// N-Triples graph; the bundled toy graph when absent.
    pub kg: Option<PathBuf>,
    #[serde(skip)]
    pub workdir: PathBuf,
    pub rng_seeds: Vec<u64>,
    pub ratios: [f64; 3],
    pub seed_test_fraction: f64,
    pub fractions: Vec<f64>,
    pub instance_limit: usize,
    pub generation_seed: u64,
    pub lm_order: usize,
    pub lm_k: f64,
    pub lm_min_count: usize,
    pub lm_smoothing: Smoothing,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seeds: None,
            kg: None,
            workdir: PathBuf::from("work"),
            rng_seeds: vec![1, 2, 3, 4, 5],
            ratios: [0.8, 0.1, 0.1],
            seed_test_fraction: 0.2,
            fractions: vec![0.125, 0.25, 0.5, 1.0],
            instance_limit: 100,
            generation_seed: 0,
            lm_order: 5,
            lm_k: 0.1,
            lm_min_count: 1,
            lm_smoothing: Smoothing::WittenBell,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        if self.rng_seeds.is_empty() {
            return bad("rng_seeds is empty".into());
        }
        validate_ratios(self.ratios).map_err(|e| ExperimentError::Config(e.to_string()))?;
        if !(self.seed_test_fraction > 0.0 && self.seed_test_fraction < 1.0) {
            return bad(format!("seed_test_fraction {} outside (0, 1)", self.seed_test_fraction));
        }
        if let Some(f) = self.fractions.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
            return bad(format!("fraction {f} outside (0, 1]"));
        }
        if self.lm_order == 0 || self.lm_k.is_nan() || self.lm_k <= 0.0 {
            return bad("lm_order must be >= 1 and lm_k > 0".into());
        }
        for p in self.seeds.iter().chain(&self.kg) {
            if !p.is_file() {
                return bad(format!("input file {} does not exist", p.display()));
            }
        }
        Ok(())
    }

    pub fn lm_config(&self) -> LmConfig {
        LmConfig {
            order: self.lm_order,
            k: self.lm_k,
            min_count: self.lm_min_count,
            smoothing: self.lm_smoothing,
        }
    }
}

/// Seeds, graph, templates and the attributed instance corpus.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub seeds: Vec<Seed>,
    pub graph: Graph,
    pub templates: Vec<Template>,
    pub instances: Vec<Instance>,
    pub duplicates_removed: usize,
    pub index: AttributionIndex,
    /// Digest of the configuration and the input contents.
    pub config_digest: String,
}

pub fn prepare(config: &RunConfig) -> Result<Prepared, ExperimentError> {
    config.validate()?;
    let (seeds, seeds_text) = match &config.seeds {
        Some(p) => (
            read_seeds(p).map_err(stage("load seeds"))?,
            std::fs::read(p).map_err(stage("load seeds"))?,
        ),
        None => (toy::load_bundled().seeds, toy::SEEDS_JSONL.as_bytes().to_vec()),
    };
    let (graph, kg_text) = match &config.kg {
        Some(p) => (
            load_ntriples(p).map_err(stage("load graph"))?.graph,
            std::fs::read(p).map_err(stage("load graph"))?,
        ),
        None => (toy::load_bundled().graph, toy::KG_NT.as_bytes().to_vec()),
    };
    let templates: Vec<Template> = seeds
        .iter()
        .map(extract_template)
        .collect::<Result<_, _>>()
        .map_err(stage("extract templates"))?;
    let generated = generate_corpus(&templates, &graph, config.instance_limit, config.generation_seed)
        .map_err(stage("generate"))?;
    let (mut instances, duplicates_removed) = dedup(generated);
    let index = build_index(&instances, &templates);
    index.apply(&mut instances);
    let config_json = serde_json::to_string(config).expect("config serializes");
    let config_digest = corpus::config_digest([config_json.as_bytes(), &seeds_text, &kg_text]);
    Ok(Prepared {
        seeds,
        graph,
        templates,
        instances,
        duplicates_removed,
        index,
        config_digest,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Exp1,
    Exp2,
    Exp3,
}

impl Preset {
    pub fn as_str(self) -> &'static str {
        match self {
            Preset::Exp1 => "exp1",
            Preset::Exp2 => "exp2",
            Preset::Exp3 => "exp3",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        [Preset::Exp1, Preset::Exp2, Preset::Exp3]
            .into_iter()
            .find(|p| p.as_str() == s)
    }
}

/// One CSV/JSON report row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub preset: String,
    pub scheme: String,
    /// Seed of the run; aggregates list all seeds joined by `+`.
    pub rng_seed: String,
    /// Training fraction; empty for full training data.
    pub fraction: String,
    pub metric: String,
    pub split: String,
    pub value: f64,
    /// `value`, `mean` or `stdev`.
    pub stat: String,
    pub config_digest: String,
}

/// Scores of one partition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetrics {
    pub counts: [usize; 3],
    pub bleu_test: f64,
    pub bleu_valid: f64,
    pub ppl_test: f64,
    pub ppl_valid: f64,
    pub leakage: LeakageStats,
}

impl RunMetrics {
    fn rows(&self, base: &ReportRow) -> Vec<ReportRow> {
        let row = |metric: &str, split: &str, value: f64| ReportRow {
            metric: metric.into(),
            split: split.into(),
            value,
            ..base.clone()
        };
        let mut out = Vec::new();
        for (name, n) in SplitName::ALL.iter().zip(self.counts) {
            out.push(row("instances", name.as_str(), n as f64));
        }
        out.push(row("memorizer_bleu", "test", self.bleu_test));
        out.push(row("memorizer_bleu", "valid", self.bleu_valid));
        out.push(row("lm_perplexity", "test", self.ppl_test));
        out.push(row("lm_perplexity", "valid", self.ppl_valid));
        out.push(row("seen_template_fraction", "test", self.leakage.test_seen_fraction));
        out.push(row("seen_template_fraction", "valid", self.leakage.valid_seen_fraction));
        out
    }
}

/// Predictions and scores for one partition.
#[derive(Debug, Clone)]
pub struct Evaluated {
    pub metrics: RunMetrics,
    pub test_predictions: Vec<String>,
    pub test_log_probs: Vec<Vec<f64>>,
}

fn query_tokens(records: &[Instance]) -> Vec<Vec<String>> {
    records.iter().map(|i| i.pair.query_tokens()).collect()
}

fn bleu_or_zero(pred: &[Vec<String>], refs: &[Vec<String>]) -> Result<f64, ExperimentError> {
    if refs.is_empty() {
        return Ok(0.0);
    }
    Ok(corpus_bleu(pred, refs).map_err(stage("bleu"))?.bleu)
}

/// Trains both baselines on train and scores valid and test.
pub fn evaluate_split(
    split: &Split3<Instance>,
    prepared: &Prepared,
    lm_config: LmConfig,
) -> Result<Evaluated, ExperimentError> {
    let memorizer = train_memorizer(&split.train, &prepared.templates, &prepared.index);
    let predict = |records: &[Instance]| -> Vec<String> {
        records.iter().map(|i| memorizer.predict(&i.pair.nlq).query).collect()
    };
    let test_predictions = predict(&split.test);
    let valid_predictions = predict(&split.valid);
    let tok = |qs: &[String]| -> Vec<Vec<String>> {
        qs.iter()
            .map(|q| q.split_whitespace().map(str::to_string).collect())
            .collect()
    };
    let bleu_test = bleu_or_zero(&tok(&test_predictions), &query_tokens(&split.test))?;
    let bleu_valid = bleu_or_zero(&tok(&valid_predictions), &query_tokens(&split.valid))?;

    let lm = train_ngram_lm(&query_tokens(&split.train), lm_config).map_err(stage("train lm"))?;
    let test_log_probs: Vec<Vec<f64>> = split
        .test
        .iter()
        .map(|i| lm.sentence_log_probs(&i.pair.query_tokens()))
        .collect();
    let ppl = |records: &[Instance]| -> Result<f64, ExperimentError> {
        if records.is_empty() {
            return Ok(0.0);
        }
        lm_perplexity(&lm, &query_tokens(records)).map_err(stage("perplexity"))
    };
    Ok(Evaluated {
        metrics: RunMetrics {
            counts: split.counts(),
            bleu_test,
            bleu_valid,
            ppl_test: ppl(&split.test)?,
            ppl_valid: ppl(&split.valid)?,
            leakage: leakage_report(split, &prepared.index),
        },
        test_predictions,
        test_log_probs,
    })
}

/// Sanitized partition for a given seed test selection.
pub fn sanitized_split(
    prepared: &Prepared,
    seed_test_ids: &BTreeSet<String>,
    rng_seed: u64,
) -> Result<(Split3<Instance>, SanitizeDiagnostics), ExperimentError> {
    let tsplit = split_templates(&prepared.templates, &prepared.seeds, seed_test_ids);
    let s = sanitized_partition(&prepared.instances, &tsplit, &prepared.index, rng_seed).map_err(stage("partition"))?;
    Ok((s.split, s.diagnostics))
}

/// Everything a preset run produced.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub preset: Preset,
    pub config_digest: String,
    pub complete: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub corpus: CorpusSummary,
    pub rows: Vec<ReportRow>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct CorpusSummary {
    pub seeds: usize,
    pub triples: usize,
    pub templates: usize,
    pub instances: usize,
    pub duplicates_removed: usize,
    pub ambiguous_instances: usize,
    pub seed_test_ids: Vec<String>,
}

impl ExperimentReport {
    /// Rows matching all given fields.
    pub fn find(&self, scheme: &str, metric: &str, split: &str, stat: &str, fraction: &str) -> Vec<&ReportRow> {
        self.rows
            .iter()
            .filter(|r| {
                r.scheme == scheme && r.metric == metric && r.split == split && r.stat == stat && r.fraction == fraction
            })
            .collect()
    }

    /// Single value or `None` when absent or not unique.
    pub fn value(&self, scheme: &str, metric: &str, split: &str, stat: &str, fraction: &str) -> Option<f64> {
        match self.find(scheme, metric, split, stat, fraction)[..] {
            [r] => Some(r.value),
            _ => None,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> String {
        rows_to_csv(&self.rows)
    }
}

pub fn rows_to_csv(rows: &[ReportRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record([
            "preset",
            "scheme",
            "rng_seed",
            "fraction",
            "metric",
            "split",
            "value",
            "stat",
            "config_digest",
        ])
        .expect("in-memory write");
    }
    for r in rows {
        w.serialize(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

pub fn rows_from_csv(text: &str) -> Result<Vec<ReportRow>, csv::Error> {
    csv::Reader::from_reader(text.as_bytes()).deserialize().collect()
}

fn mean_stdev(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn write(path: &Path, text: &str) -> Result<(), ExperimentError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(stage("write outputs"))?;
    }
    std::fs::write(path, text).map_err(|e| ExperimentError::Stage {
        stage: "write outputs",
        message: format!("{}: {e}", path.display()),
    })
}

/// Writes split files, manifest, predictions and optional diagnostics.
fn persist_run(
    dir: &Path,
    manifest: &PartitionManifest,
    split: &Split3<Instance>,
    evaluated: &Evaluated,
    diagnostics: Option<&SanitizeDiagnostics>,
) -> Result<(), ExperimentError> {
    corpus::write_split(dir, split, manifest).map_err(stage("write split"))?;
    let mut pred = String::new();
    for p in &evaluated.test_predictions {
        pred.push_str(p);
        pred.push('\n');
    }
    write(&dir.join("pred.ql"), &pred)?;
    let mut logp = String::new();
    for lp in &evaluated.test_log_probs {
        logp.push_str(&metrics::logp_line(lp));
        logp.push('\n');
    }
    write(&dir.join("pred.logp"), &logp)?;
    write(&dir.join("metrics.json"), &{
        let mut s = serde_json::to_string_pretty(&evaluated.metrics).expect("metrics serialize");
        s.push('\n');
        s
    })?;
    if let Some(d) = diagnostics {
        write(&dir.join("diagnostics.json"), &d.to_json())?;
    }
    Ok(())
}

struct Runner<'a> {
    preset: Preset,
    config: &'a RunConfig,
    prepared: &'a Prepared,
    out: PathBuf,
    rows: Vec<ReportRow>,
}

impl Runner<'_> {
    fn base(&self, scheme: &str, rng_seed: String, fraction: String) -> ReportRow {
        ReportRow {
            preset: self.preset.as_str().into(),
            scheme: scheme.into(),
            rng_seed,
            fraction,
            metric: String::new(),
            split: String::new(),
            value: 0.0,
            stat: "value".into(),
            config_digest: self.prepared.config_digest.clone(),
        }
    }

    fn manifest(&self, scheme: Scheme, seed: u64, split: &Split3<Instance>) -> PartitionManifest {
        PartitionManifest::new(
            scheme,
            seed,
            self.config.ratios,
            split,
            self.prepared.config_digest.clone(),
        )
    }

    fn sanitized(&mut self, seed_test_ids: &BTreeSet<String>) -> Result<Split3<Instance>, ExperimentError> {
        let seed = self.config.rng_seeds[0];
        let (split, diag) = sanitized_split(self.prepared, seed_test_ids, seed)?;
        let ev = evaluate_split(&split, self.prepared, self.config.lm_config())?;
        persist_run(
            &self.out.join("sanitized"),
            &self.manifest(Scheme::Sanitized, seed, &split),
            &split,
            &ev,
            Some(&diag),
        )?;
        let base = self.base("sanitized", seed.to_string(), String::new());
        self.rows.extend(ev.metrics.rows(&base));
        Ok(split)
    }

    fn leaky(&mut self) -> Result<(), ExperimentError> {
        let mut per_seed: Vec<Vec<ReportRow>> = Vec::new();
        for &seed in &self.config.rng_seeds {
            let split =
                leaky_partition(&self.prepared.instances, self.config.ratios, seed).map_err(stage("partition"))?;
            let ev = evaluate_split(&split, self.prepared, self.config.lm_config())?;
            persist_run(
                &self.out.join(format!("leaky-{seed}")),
                &self.manifest(Scheme::Leaky, seed, &split),
                &split,
                &ev,
                None,
            )?;
            let rows = ev.metrics.rows(&self.base("leaky", seed.to_string(), String::new()));
            self.rows.extend(rows.iter().cloned());
            per_seed.push(rows);
        }
        let all_seeds = self
            .config
            .rng_seeds
            .iter()
            .map(u64::to_string)
            .collect::<Vec<_>>()
            .join("+");
        for (k, template) in per_seed[0].iter().enumerate() {
            let values: Vec<f64> = per_seed.iter().map(|rows| rows[k].value).collect();
            let (mean, stdev) = mean_stdev(&values);
            for (stat, value) in [("mean", mean), ("stdev", stdev)] {
                self.rows.push(ReportRow {
                    rng_seed: all_seeds.clone(),
                    value,
                    stat: stat.into(),
                    ..template.clone()
                });
            }
        }
        Ok(())
    }

    fn sweep(&mut self, split: &Split3<Instance>) -> Result<(), ExperimentError> {
        let seed = self.config.rng_seeds[0];
        for &f in &self.config.fractions {
            let sub = subsample_train(split, f, seed).map_err(stage("subsample"))?;
            let ev = evaluate_split(&sub, self.prepared, self.config.lm_config())?;
            persist_run(
                &self.out.join(format!("fraction-{f}")),
                &self.manifest(Scheme::Sanitized, seed, &sub),
                &sub,
                &ev,
                None,
            )?;
            let base = self.base("sanitized", seed.to_string(), f.to_string());
            self.rows.extend(ev.metrics.rows(&base));
        }
        Ok(())
    }
}

/// Seed test ids for a preset: the configured fraction, halved for exp3.
pub fn seed_test_ids_for(
    preset: Preset,
    prepared: &Prepared,
    config: &RunConfig,
) -> Result<BTreeSet<String>, ExperimentError> {
    let seed = config.rng_seeds[0];
    let ids = select_seed_test_ids(&prepared.seeds, config.seed_test_fraction, seed).map_err(stage("seed split"))?;
    Ok(match preset {
        Preset::Exp3 => halve_seed_test_ids(&ids, seed),
        _ => ids,
    })
}

/// Runs a preset on prepared data, writing outputs under
/// `<workdir>/<preset>/` and returning the report. A failing stage still
/// writes the rows gathered so far, flagged incomplete.
pub fn run_prepared(
    preset: Preset,
    config: &RunConfig,
    prepared: &Prepared,
) -> Result<ExperimentReport, ExperimentError> {
    let out = config.workdir.join(preset.as_str());
    let mut runner = Runner {
        preset,
        config,
        prepared,
        out: out.clone(),
        rows: Vec::new(),
    };
    let mut summary = CorpusSummary {
        seeds: prepared.seeds.len(),
        triples: prepared.graph.len(),
        templates: prepared.templates.len(),
        instances: prepared.instances.len(),
        duplicates_removed: prepared.duplicates_removed,
        ambiguous_instances: prepared.index.ambiguous.len(),
        seed_test_ids: Vec::new(),
    };
    let result = (|| -> Result<(), ExperimentError> {
        let ids = seed_test_ids_for(preset, prepared, config)?;
        summary.seed_test_ids = ids.iter().cloned().collect();
        match preset {
            Preset::Exp1 => {
                runner.leaky()?;
                runner.sanitized(&ids)?;
            }
            Preset::Exp2 => {
                let split = runner.sanitized(&ids)?;
                runner.sweep(&split)?;
            }
            Preset::Exp3 => {
                runner.sanitized(&ids)?;
            }
        }
        Ok(())
    })();
    let report = ExperimentReport {
        preset,
        config_digest: prepared.config_digest.clone(),
        complete: result.is_ok(),
        error: result.as_ref().err().map(ToString::to_string),
        corpus: summary,
        rows: runner.rows,
    };
    write(&out.join("report.json"), &report.to_json())?;
    write(&out.join("report.csv"), &report.to_csv())?;
    result.map(|()| report)
}

pub fn run_experiment(preset: Preset, config: &RunConfig) -> Result<ExperimentReport, ExperimentError> {
    let prepared = prepare(config)?;
    run_prepared(preset, config, &prepared)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_toml_and_validation() {
        let c = RunConfig::from_toml("rng_seeds = [7]\nseed_test_fraction = 0.1\nfractions = [0.5, 1.0]\n").unwrap();
        assert_eq!(c.rng_seeds, vec![7]);
        assert!(c.validate().is_ok());
        assert!(RunConfig::from_toml("bogus = 1\n").is_err());
        let bad = RunConfig {
            fractions: vec![0.0],
            ..RunConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = RunConfig {
            seeds: Some("/nonexistent/seeds.jsonl".into()),
            ..RunConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn mean_and_sample_stdev() {
        let (m, s) = mean_stdev(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-12);
        assert_eq!(mean_stdev(&[4.0]), (4.0, 0.0));
    }

    #[test]
    fn csv_round_trip() {
        let row = ReportRow {
            preset: "exp1".into(),
            scheme: "leaky".into(),
            rng_seed: "1".into(),
            fraction: String::new(),
            metric: "memorizer_bleu".into(),
            split: "test".into(),
            value: 97.5,
            stat: "value".into(),
            config_digest: "ab".into(),
        };
        let text = rows_to_csv(std::slice::from_ref(&row));
        assert!(text.starts_with("preset,scheme,rng_seed,fraction,metric,split,value,stat,config_digest\n"));
        assert_eq!(rows_from_csv(&text).unwrap(), vec![row]);
    }
}
