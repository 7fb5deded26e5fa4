//! Command-line front end.
//!
//! Every subcommand reads its inputs from flags, falling back to the
//! conventional locations inside the work directory:
//!
//! | file | written by |
//! |------|------------|
//! | `templates.jsonl` | `extract` |
//! | `corpus.{nlq,ql,ids}` | `generate` |
//! | `attribution.tsv` | `attribute` |
//! | `split-<scheme>-<seed>/` | `partition` |
//! | `<split>/pred.ql`, `<split>/pred.logp` | `memorize`, `lm` |
//! | `<preset>/report.{csv,json}` | `experiment` |
//! | `report.csv` | `report` |

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use crate::attribution::{build_index, AttributionIndex};
use crate::baselines::{lm_perplexity, train_memorizer, train_ngram_lm};
use crate::corpus::{self, read_corpus, read_parallel, PartitionManifest, Scheme};
use crate::experiment::{self, rows_from_csv, rows_to_csv, Preset, RunConfig};
use crate::kgstore::load_ntriples;
use crate::metrics::{self, corpus_bleu, leakage_report, read_logp, read_query_tokens};
use crate::partitioner::{leaky_partition, sanitized_partition, select_seed_test_ids, split_templates};
use crate::synthesis::{extract_template, generate_corpus, read_templates, write_templates, Template};
use crate::toy;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

fn runtime<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Runtime(e.to_string())
}

#[derive(Debug, Parser)]
#[command(
    name = "splithygiene",
    version,
    about = "Template-aware partitioning and evaluation of KGQA corpora"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Random seed; overrides the first configured seed.
    #[arg(long, global = true)]
    pub rng_seed: Option<u64>,
    /// Flat TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Work directory for inputs and outputs.
    #[arg(long, global = true, env = "SPLITHYGIENE_WORKDIR")]
    pub workdir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SchemeArg {
    Leaky,
    Sanitized,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PresetArg {
    Exp1,
    Exp2,
    Exp3,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract templates from seeds.
    Extract {
        #[arg(long)]
        seeds: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Instantiate templates against a graph.
    Generate {
        #[arg(long)]
        templates: Option<PathBuf>,
        #[arg(long)]
        kg: Option<PathBuf>,
        #[arg(long)]
        limit: Option<usize>,
        /// Output directory for corpus.{nlq,ql,ids}.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Attribute corpus instances to templates.
    Attribute {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        templates: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Partition the corpus into train, valid and test.
    Partition {
        #[arg(long, value_enum, default_value = "leaky")]
        scheme: SchemeArg,
        /// Comma-separated train,valid,test ratios (leaky only).
        #[arg(long, value_delimiter = ',')]
        ratios: Option<Vec<f64>>,
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        templates: Option<PathBuf>,
        #[arg(long)]
        attribution: Option<PathBuf>,
        #[arg(long)]
        seeds: Option<PathBuf>,
        /// Share of seeds whose templates are held out (sanitized only).
        #[arg(long)]
        seed_test_fraction: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the template memorizer on a split and predict its test questions.
    Memorize {
        #[arg(long)]
        split: PathBuf,
        #[arg(long)]
        templates: Option<PathBuf>,
        #[arg(long)]
        attribution: Option<PathBuf>,
        /// Questions to answer; defaults to the split's test.nlq.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the n-gram model on a split and score its test queries.
    Lm {
        #[arg(long)]
        split: PathBuf,
        /// Queries to score; defaults to the split's test.ql.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score predictions against references.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        test: PathBuf,
        /// Per-token log probabilities for perplexity.
        #[arg(long)]
        logp: Option<PathBuf>,
        /// Split directory and attribution file for leakage statistics.
        #[arg(long, requires = "attribution")]
        split: Option<PathBuf>,
        #[arg(long)]
        attribution: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Merge preset reports under the work directory into one CSV.
    Report {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment preset end to end.
    Experiment {
        #[arg(long, value_enum)]
        preset: PresetArg,
    },
}

struct Ctx {
    config: RunConfig,
    rng_seed: u64,
}

impl Ctx {
    fn new(global: &GlobalArgs) -> Result<Self, CliError> {
        let mut config = match &global.config {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Validation(format!("--config {}: {e}", p.display())))?;
                RunConfig::from_toml(&text)
                    .map_err(|e| CliError::Validation(format!("--config {}: {e}", p.display())))?
            }
            None => RunConfig::default(),
        };
        if let Some(w) = &global.workdir {
            config.workdir = w.clone();
        }
        if let Some(s) = global.rng_seed {
            config.rng_seeds = vec![s];
        }
        let rng_seed = *config
            .rng_seeds
            .first()
            .ok_or_else(|| CliError::Validation("rng_seeds is empty".into()))?;
        Ok(Self { config, rng_seed })
    }

    fn work(&self, name: &str) -> PathBuf {
        self.config.workdir.join(name)
    }

    fn input(&self, flag: &str, given: Option<&PathBuf>, default: &str) -> Result<PathBuf, CliError> {
        let p = given.cloned().unwrap_or_else(|| self.work(default));
        if p.exists() {
            Ok(p)
        } else {
            Err(CliError::Validation(format!(
                "--{flag}: {} does not exist",
                p.display()
            )))
        }
    }

    fn templates(&self, given: Option<&PathBuf>) -> Result<Vec<Template>, CliError> {
        read_templates(&self.input("templates", given, "templates.jsonl")?).map_err(runtime)
    }

    fn seeds(&self, given: Option<&PathBuf>) -> Result<Vec<corpus::Seed>, CliError> {
        match given.or(self.config.seeds.as_ref()) {
            Some(p) if !p.is_file() => Err(CliError::Validation(format!("--seeds: {} does not exist", p.display()))),
            Some(p) => corpus::read_seeds(p).map_err(runtime),
            None => Ok(toy::load_bundled().seeds),
        }
    }

    fn digest(&self) -> String {
        corpus::config_digest([serde_json::to_string(&self.config).expect("config serializes")])
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("value serializes");
    s.push('\n');
    s
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let ctx = Ctx::new(&cli.global)?;
    match cli.command {
        Command::Extract { seeds, out } => {
            let seeds = ctx.seeds(seeds.as_ref())?;
            let templates: Vec<Template> = seeds
                .iter()
                .map(extract_template)
                .collect::<Result<_, _>>()
                .map_err(runtime)?;
            let out = out.unwrap_or_else(|| ctx.work("templates.jsonl"));
            write_text(&out, "")?;
            write_templates(&out, &templates).map_err(runtime)?;
            println!("{} templates -> {}", templates.len(), out.display());
        }
        Command::Generate {
            templates,
            kg,
            limit,
            out,
        } => {
            let templates = ctx.templates(templates.as_ref())?;
            let graph = match kg.as_ref().or(ctx.config.kg.as_ref()) {
                Some(p) if !p.is_file() => {
                    return Err(CliError::Validation(format!("--kg: {} does not exist", p.display())))
                }
                Some(p) => {
                    let summary = load_ntriples(p).map_err(runtime)?;
                    info!(
                        "loaded {} triples, skipped {} non-IRI objects, {} malformed lines",
                        summary.graph.len(),
                        summary.skipped_non_iri,
                        summary.malformed_lines.len()
                    );
                    summary.graph
                }
                None => toy::load_bundled().graph,
            };
            let limit = limit.unwrap_or(ctx.config.instance_limit);
            let instances = generate_corpus(&templates, &graph, limit, ctx.config.generation_seed).map_err(runtime)?;
            let (instances, removed) = corpus::dedup(instances);
            let out = out.unwrap_or_else(|| ctx.config.workdir.clone());
            corpus::write_corpus(&out, "corpus", &instances).map_err(runtime)?;
            println!(
                "{} instances ({removed} duplicates removed) -> {}",
                instances.len(),
                out.display()
            );
        }
        Command::Attribute { corpus, templates, out } => {
            let dir = ctx.input("corpus", corpus.as_ref(), "")?;
            let instances = read_corpus(&dir, "corpus").map_err(runtime)?;
            let templates = ctx.templates(templates.as_ref())?;
            let index = build_index(&instances, &templates);
            let out = out.unwrap_or_else(|| ctx.work("attribution.tsv"));
            index.write_tsv(&out).map_err(runtime)?;
            println!(
                "{} instances, {} ambiguous, {} unattributed -> {}",
                index.len(),
                index.ambiguous.len(),
                index.unattributed().count(),
                out.display()
            );
        }
        Command::Partition {
            scheme,
            ratios,
            corpus,
            templates,
            attribution,
            seeds,
            seed_test_fraction,
            out,
        } => {
            let ratios = match ratios.as_deref() {
                Some(&[a, b, c]) => [a, b, c],
                Some(r) => {
                    return Err(CliError::Validation(format!(
                        "--ratios: expected 3 values, got {}",
                        r.len()
                    )))
                }
                None => ctx.config.ratios,
            };
            crate::partitioner::validate_ratios(ratios).map_err(|e| CliError::Validation(format!("--ratios: {e}")))?;
            let dir = ctx.input("corpus", corpus.as_ref(), "")?;
            let instances = read_corpus(&dir, "corpus").map_err(runtime)?;
            let digest = ctx.digest();
            let (scheme, split, diagnostics) = match scheme {
                SchemeArg::Leaky => {
                    let split = leaky_partition(&instances, ratios, ctx.rng_seed).map_err(runtime)?;
                    (Scheme::Leaky, split, None)
                }
                SchemeArg::Sanitized => {
                    let fraction = seed_test_fraction.unwrap_or(ctx.config.seed_test_fraction);
                    if !(fraction > 0.0 && fraction < 1.0) {
                        return Err(CliError::Validation(format!(
                            "--seed-test-fraction {fraction} outside (0, 1)"
                        )));
                    }
                    let templates = ctx.templates(templates.as_ref())?;
                    let index = AttributionIndex::read_tsv(&ctx.input(
                        "attribution",
                        attribution.as_ref(),
                        "attribution.tsv",
                    )?)
                    .map_err(runtime)?;
                    let seeds = ctx.seeds(seeds.as_ref())?;
                    let ids: BTreeSet<String> =
                        select_seed_test_ids(&seeds, fraction, ctx.rng_seed).map_err(runtime)?;
                    let tsplit = split_templates(&templates, &seeds, &ids);
                    let s = sanitized_partition(&instances, &tsplit, &index, ctx.rng_seed).map_err(runtime)?;
                    (Scheme::Sanitized, s.split, Some(s.diagnostics))
                }
            };
            let out = out.unwrap_or_else(|| ctx.work(&format!("split-{scheme}-{}", ctx.rng_seed)));
            let manifest = PartitionManifest::new(scheme, ctx.rng_seed, ratios, &split, digest);
            corpus::write_split(&out, &split, &manifest).map_err(runtime)?;
            if let Some(d) = diagnostics {
                write_text(&out.join("diagnostics.json"), &d.to_json())?;
            }
            let [a, b, c] = split.counts();
            println!("train {a}, valid {b}, test {c} -> {}", out.display());
        }
        Command::Memorize {
            split,
            templates,
            attribution,
            input,
            out,
        } => {
            let train = read_parallel(
                &ctx.input("split", Some(&split.join("train.nlq")), "")?,
                &split.join("train.ql"),
                Some(&split.join("manifest.json")),
            )
            .map_err(runtime)?;
            let templates = ctx.templates(templates.as_ref())?;
            let index = match attribution {
                Some(p) => AttributionIndex::read_tsv(&ctx.input("attribution", Some(&p), "")?).map_err(runtime)?,
                None => build_index(&train, &templates),
            };
            let model = train_memorizer(&train, &templates, &index);
            let input = ctx.input("input", Some(&input.unwrap_or_else(|| split.join("test.nlq"))), "")?;
            let text =
                std::fs::read_to_string(&input).map_err(|e| CliError::Runtime(format!("{}: {e}", input.display())))?;
            let preds: Vec<String> = text
                .lines()
                .map(|l| model.predict(&crate::qlang::tokenize_nlq(l)).query)
                .collect();
            let out = out.unwrap_or_else(|| split.join("pred.ql"));
            metrics::write_lines(&out, &preds).map_err(runtime)?;
            println!("{} predictions -> {}", preds.len(), out.display());
        }
        Command::Lm { split, input, out } => {
            let train = read_query_tokens(&ctx.input("split", Some(&split.join("train.ql")), "")?).map_err(runtime)?;
            let lm = train_ngram_lm(&train, ctx.config.lm_config()).map_err(runtime)?;
            let input = ctx.input("input", Some(&input.unwrap_or_else(|| split.join("test.ql"))), "")?;
            let eval = read_query_tokens(&input).map_err(runtime)?;
            let lines: Vec<String> = eval
                .iter()
                .map(|s| metrics::logp_line(&lm.sentence_log_probs(s)))
                .collect();
            let out = out.unwrap_or_else(|| split.join("pred.logp"));
            metrics::write_lines(&out, &lines).map_err(runtime)?;
            let ppl = lm_perplexity(&lm, &eval).map_err(runtime)?;
            println!("perplexity {ppl:.4} over {} sentences -> {}", eval.len(), out.display());
        }
        Command::Eval {
            pred,
            test,
            logp,
            split,
            attribution,
            out,
        } => {
            let cand = read_query_tokens(&ctx.input("pred", Some(&pred), "")?).map_err(runtime)?;
            let refs = read_query_tokens(&ctx.input("test", Some(&test), "")?).map_err(runtime)?;
            if cand.len() != refs.len() {
                return Err(CliError::Validation(format!(
                    "--pred has {} lines but --test has {}",
                    cand.len(),
                    refs.len()
                )));
            }
            let mut report = serde_json::Map::new();
            report.insert(
                "bleu".into(),
                serde_json::to_value(corpus_bleu(&cand, &refs).map_err(runtime)?).expect("serializable"),
            );
            if let Some(p) = logp {
                let lps = read_logp(&ctx.input("logp", Some(&p), "")?).map_err(runtime)?;
                let ppl = metrics::perplexity(&lps).map_err(runtime)?;
                report.insert("perplexity".into(), ppl.into());
            }
            if let (Some(dir), Some(attr)) = (split, attribution) {
                let index = AttributionIndex::read_tsv(&ctx.input("attribution", Some(&attr), "")?).map_err(runtime)?;
                let manifest = PartitionManifest::read(&ctx.input("split", Some(&dir.join("manifest.json")), "")?)
                    .map_err(runtime)?;
                let ids = crate::partitioner::Split3 {
                    train: manifest.lines.train.clone(),
                    valid: manifest.lines.valid.clone(),
                    test: manifest.lines.test.clone(),
                };
                report.insert(
                    "leakage".into(),
                    serde_json::to_value(leakage_report(&ids, &index)).expect("serializable"),
                );
            }
            let text = json(&report);
            if let Some(out) = out {
                write_text(&out, &text)?;
            }
            print!("{text}");
        }
        Command::Report { out } => {
            let mut rows = Vec::new();
            for preset in [Preset::Exp1, Preset::Exp2, Preset::Exp3] {
                let p = ctx.work(preset.as_str()).join("report.csv");
                if p.is_file() {
                    let text =
                        std::fs::read_to_string(&p).map_err(|e| CliError::Runtime(format!("{}: {e}", p.display())))?;
                    rows.extend(rows_from_csv(&text).map_err(|e| CliError::Runtime(format!("{}: {e}", p.display())))?);
                }
            }
            if rows.is_empty() {
                return Err(CliError::Validation(format!(
                    "--workdir {}: no preset reports found",
                    ctx.config.workdir.display()
                )));
            }
            let out = out.unwrap_or_else(|| ctx.work("report.csv"));
            write_text(&out, &rows_to_csv(&rows))?;
            println!("{} rows -> {}", rows.len(), out.display());
        }
        Command::Experiment { preset } => {
            let preset = match preset {
                PresetArg::Exp1 => Preset::Exp1,
                PresetArg::Exp2 => Preset::Exp2,
                PresetArg::Exp3 => Preset::Exp3,
            };
            if ctx.config.seeds.is_some() || ctx.config.kg.is_some() {
                ctx.config.validate().map_err(|e| CliError::Validation(e.to_string()))?;
            }
            let report = experiment::run_experiment(preset, &ctx.config).map_err(|e| match e {
                experiment::ExperimentError::Config(m) => CliError::Validation(m),
                other => runtime(other),
            })?;
            println!(
                "{}: {} rows -> {}",
                preset.as_str(),
                report.rows.len(),
                ctx.work(preset.as_str()).join("report.csv").display()
            );
        }
    }
    Ok(())
}

/// Parses arguments, runs the command and maps errors to exit codes.
pub fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
