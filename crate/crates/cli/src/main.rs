//! `scisimp`: corpus statistics, prompt rendering, system evaluation and a
//! zero-shot simplifier client for scholarly-abstract simplification.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use scisimp_core::corpus::{
    aggregate_annotations, corpus_stats, discipline_histogram, filter_split, load_annotations,
    load_corpus, render_inference_prompt, render_training_example, SassRecord, Split,
};
use scisimp_core::lexicon::{load_frequency_table, load_voa, FrequencyTable, VoaLexicon};
use scisimp_core::metrics::Resources;
use scisimp_core::pipeline::{
    emit_corpus_stats, emit_report, evaluate_batch, load_outputs, BatchOptions, ReportFormat,
    SystemOutput,
};
use scisimp_core::semantic::{HttpEmbeddingProvider, DEFAULT_LAYER};
use scisimp_core::simplifier::{SimplifierClient, SimplifierConfig};
use scisimp_core::text::AbbreviationList;
use scisimp_core::Error;

#[derive(Parser, Debug)]
#[command(
    name = "scisimp",
    version,
    about = "Evaluate simplification of scholarly abstracts"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Readability statistics of abstracts vs. significance statements, with paired tests
    Stats(StatsArgs),
    /// Record counts per discipline
    Histogram(HistogramArgs),
    /// Render fine-tuning examples or inference prompts as JSONL
    Render(RenderArgs),
    /// Score system outputs against the original abstracts
    Evaluate(EvaluateArgs),
    /// Simplify abstracts with an OpenAI-compatible chat endpoint
    Simplify(SimplifyArgs),
    /// Grade counts per dimension from a human annotation CSV
    AnnotateSummary(AnnotateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Markdown,
    Csv,
    Json,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Markdown => ReportFormat::Markdown,
            Format::Csv => ReportFormat::Csv,
            Format::Json => ReportFormat::Json,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SplitArg {
    Train,
    Validation,
    Test,
    All,
}

impl SplitArg {
    fn select(self, records: Vec<SassRecord>) -> Vec<SassRecord> {
        let split = match self {
            SplitArg::Train => Split::Train,
            SplitArg::Validation => Split::Validation,
            SplitArg::Test => Split::Test,
            SplitArg::All => return records,
        };
        filter_split(&records, split)
    }
}

#[derive(Args, Debug)]
struct ResourceArgs {
    /// VOA word list (one word per line); defaults to the bundled list
    #[arg(long)]
    voa: Option<PathBuf>,

    /// Word frequency table (word<TAB>per-billion); defaults to the bundled table
    #[arg(long)]
    freq_table: Option<PathBuf>,

    /// Abbreviations that do not end a sentence; defaults to the bundled list
    #[arg(long)]
    abbreviations: Option<PathBuf>,
}

struct LoadedResources {
    voa: VoaLexicon,
    freq: FrequencyTable,
    abbreviations: AbbreviationList,
}

impl ResourceArgs {
    fn load(&self) -> Result<LoadedResources> {
        let voa = match &self.voa {
            Some(p) => load_voa(p).with_context(|| format!("loading VOA list {}", p.display()))?,
            None => VoaLexicon::bundled().clone(),
        };
        let freq = match &self.freq_table {
            Some(p) => load_frequency_table(p)
                .with_context(|| format!("loading frequency table {}", p.display()))?,
            None => FrequencyTable::bundled().clone(),
        };
        let abbreviations = match &self.abbreviations {
            Some(p) => AbbreviationList::load(p)
                .with_context(|| format!("loading abbreviations {}", p.display()))?,
            None => AbbreviationList::bundled().clone(),
        };
        Ok(LoadedResources {
            voa,
            freq,
            abbreviations,
        })
    }
}

impl LoadedResources {
    fn view(&self) -> Resources<'_> {
        Resources::new(&self.voa, &self.freq).with_abbreviations(&self.abbreviations)
    }
}

#[derive(Args, Debug)]
struct StatsArgs {
    /// Corpus JSONL
    #[arg(long)]
    corpus: PathBuf,

    #[arg(long, value_enum, default_value = "train")]
    split: SplitArg,

    #[command(flatten)]
    resources: ResourceArgs,

    #[arg(long, value_enum, default_value = "markdown")]
    format: Format,

    /// Family-wise significance level
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,

    /// Write here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct HistogramArgs {
    #[arg(long)]
    corpus: PathBuf,

    #[arg(long, value_enum, default_value = "all")]
    split: SplitArg,

    /// Omit disciplines with fewer records
    #[arg(long, default_value_t = 3)]
    min_count: usize,

    #[arg(long, value_enum, default_value = "markdown")]
    format: Format,

    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RenderMode {
    Training,
    Inference,
}

#[derive(Args, Debug)]
struct RenderArgs {
    #[arg(long)]
    corpus: PathBuf,

    #[arg(long, value_enum, default_value = "train")]
    split: SplitArg,

    #[arg(long, value_enum, default_value = "training")]
    mode: RenderMode,

    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    corpus: PathBuf,

    /// System outputs JSONL with `id` and `text`; repeat for several systems
    #[arg(long, required = true)]
    outputs: Vec<PathBuf>,

    /// Row names, one per --outputs (default: file stem)
    #[arg(long)]
    system_id: Vec<String>,

    #[arg(long, value_enum, default_value = "test")]
    split: SplitArg,

    #[command(flatten)]
    resources: ResourceArgs,

    /// Embedding service base URL; BS is omitted without it
    #[arg(long)]
    embed_endpoint: Option<String>,

    #[arg(long, default_value_t = DEFAULT_LAYER)]
    embed_layer: u32,

    /// Embedding request timeout in seconds
    #[arg(long, default_value_t = 120)]
    embed_timeout: u64,

    #[arg(long, value_enum, default_value = "markdown")]
    format: Format,

    #[arg(long, default_value_t = 0.05)]
    alpha: f64,

    /// Worker threads (default: all cores)
    #[arg(long)]
    threads: Option<usize>,

    #[arg(long)]
    out: Option<PathBuf>,

    /// Also write per-record metric rows as JSONL
    #[arg(long)]
    rows: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimplifyArgs {
    #[arg(long)]
    corpus: PathBuf,

    #[arg(long, value_enum, default_value = "test")]
    split: SplitArg,

    /// Base URL of the chat API, e.g. https://api.openai.com/v1
    #[arg(long)]
    endpoint: String,

    #[arg(long)]
    model: String,

    /// Environment variable holding the API key
    #[arg(long, default_value = "OPENAI_API_KEY")]
    api_key_env: String,

    #[arg(long)]
    max_tokens: Option<u32>,

    /// Request timeout in seconds
    #[arg(long, default_value_t = 60)]
    timeout: u64,

    #[arg(long, default_value_t = 3)]
    attempts: u32,

    /// Concurrent requests
    #[arg(long, default_value_t = 4)]
    concurrency: usize,

    /// Only the first N records of the split
    #[arg(long)]
    limit: Option<usize>,

    /// Output JSONL (`id`, `text`), usable as `evaluate --outputs`
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct AnnotateArgs {
    /// CSV with record_id,dimension,grade,annotator,note
    #[arg(long)]
    annotations: PathBuf,

    #[arg(long, value_enum, default_value = "markdown")]
    format: Format,

    #[arg(long)]
    out: Option<PathBuf>,
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn load_split(path: &Path, split: SplitArg) -> Result<Vec<SassRecord>> {
    let records =
        load_corpus(path).with_context(|| format!("loading corpus {}", path.display()))?;
    Ok(split.select(records))
}

fn jsonl<T: Serialize>(items: impl IntoIterator<Item = T>) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, &item)?;
        out.push(b'\n');
    }
    Ok(out)
}

fn stats(args: StatsArgs) -> Result<()> {
    let records = load_split(&args.corpus, args.split)?;
    let loaded = args.resources.load()?;
    let stats = corpus_stats(&records, &loaded.view(), args.alpha)?;
    for s in &stats.skipped {
        eprintln!("skipped {}: {}", s.id, s.reason);
    }
    write_output(
        args.out.as_deref(),
        &emit_corpus_stats(&stats, args.format.into()),
    )
}

fn histogram(args: HistogramArgs) -> Result<()> {
    let records = load_split(&args.corpus, args.split)?;
    let bins = discipline_histogram(&records, args.min_count);
    let bytes = match args.format {
        Format::Markdown => {
            let mut s = String::from("| Discipline | Records |\n|---|---:|\n");
            for (d, n) in &bins {
                s.push_str(&format!("| {d} | {n} |\n"));
            }
            s.into_bytes()
        }
        Format::Csv => {
            let mut s = String::from("discipline,records\n");
            for (d, n) in &bins {
                if d.contains([',', '"', '\n']) {
                    s.push_str(&format!("\"{}\",{n}\n", d.replace('"', "\"\"")));
                } else {
                    s.push_str(&format!("{d},{n}\n"));
                }
            }
            s.into_bytes()
        }
        Format::Json => {
            let v: Vec<_> = bins
                .iter()
                .map(|(d, n)| serde_json::json!({"discipline": d, "records": n}))
                .collect();
            let mut b = serde_json::to_vec_pretty(&v)?;
            b.push(b'\n');
            b
        }
    };
    write_output(args.out.as_deref(), &bytes)
}

fn render(args: RenderArgs) -> Result<()> {
    let records = load_split(&args.corpus, args.split)?;
    let mut rendered = Vec::with_capacity(records.len());
    for r in &records {
        let text = match args.mode {
            RenderMode::Training => render_training_example(r),
            RenderMode::Inference => render_inference_prompt(&r.abstract_text)
                .with_context(|| format!("record {}", r.id))?,
        };
        rendered.push(SystemOutput {
            id: r.id.clone(),
            text,
        });
    }
    write_output(args.out.as_deref(), &jsonl(rendered)?)
}

fn evaluate(args: EvaluateArgs) -> Result<()> {
    if !args.system_id.is_empty() && args.system_id.len() != args.outputs.len() {
        bail!(
            "{} --system-id values for {} --outputs files",
            args.system_id.len(),
            args.outputs.len()
        );
    }
    let records = load_split(&args.corpus, args.split)?;
    let loaded = args.resources.load()?;
    let embedder = match &args.embed_endpoint {
        Some(url) => Some(
            HttpEmbeddingProvider::connect(
                url,
                args.embed_layer,
                Duration::from_secs(args.embed_timeout),
            )
            .with_context(|| format!("connecting to embedding service {url}"))?,
        ),
        None => None,
    };
    let mut resources = loaded.view();
    if let Some(e) = &embedder {
        resources = resources.with_embedder(e);
    }
    let options = BatchOptions {
        alpha: args.alpha,
        threads: args.threads,
    };

    let mut reports = Vec::new();
    for (i, path) in args.outputs.iter().enumerate() {
        let system_id = match args.system_id.get(i) {
            Some(s) => s.clone(),
            None => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| format!("system{}", i + 1)),
        };
        let outputs: HashMap<String, String> =
            load_outputs(path).with_context(|| format!("loading outputs {}", path.display()))?;
        let report = evaluate_batch(&records, &outputs, &system_id, &resources, &options)
            .with_context(|| format!("evaluating {system_id}"))?;
        for f in &report.failures {
            eprintln!("{system_id}: skipped {}: {}", f.id, f.reason);
        }
        for r in report.rows.iter().filter(|r| r.bs_error.is_some()) {
            eprintln!(
                "{system_id}: no BS for {}: {}",
                r.record_id,
                r.bs_error.as_deref().unwrap_or_default()
            );
        }
        reports.push(report);
    }

    if let Some(path) = &args.rows {
        let rows = reports.iter().flat_map(|r| {
            r.rows
                .iter()
                .map(move |row| serde_json::json!({"system": r.system_id, "row": row}))
        });
        std::fs::write(path, jsonl(rows)?)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    write_output(
        args.out.as_deref(),
        &emit_report(&reports, args.format.into()),
    )
}

#[derive(Serialize)]
struct SimplifyFailure<'a> {
    id: &'a str,
    error: String,
    last_payload: Option<&'a str>,
}

fn simplify(args: SimplifyArgs) -> Result<bool> {
    let mut records = load_split(&args.corpus, args.split)?;
    if let Some(n) = args.limit {
        records.truncate(n);
    }
    let mut config = SimplifierConfig::new(&args.endpoint, &args.model);
    config.api_key = std::env::var(&args.api_key_env)
        .ok()
        .filter(|k| !k.is_empty());
    if config.api_key.is_none() {
        eprintln!(
            "warning: ${} is not set; sending requests without a key",
            args.api_key_env
        );
    }
    config.max_tokens = args.max_tokens;
    config.timeout = Duration::from_secs(args.timeout);
    config.max_attempts = args.attempts;
    let client = SimplifierClient::new(config)?;

    let abstracts: Vec<&str> = records.iter().map(|r| r.abstract_text.as_str()).collect();
    let results = client.simplify_batch(&abstracts, args.concurrency)?;

    let file =
        File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let mut out = BufWriter::new(file);
    let mut failed = 0;
    for (record, result) in records.iter().zip(&results) {
        match result {
            Ok(text) => {
                serde_json::to_writer(
                    &mut out,
                    &SystemOutput {
                        id: record.id.clone(),
                        text: text.clone(),
                    },
                )?;
                out.write_all(b"\n")?;
            }
            Err(e) => {
                failed += 1;
                let last_payload = match e {
                    Error::Endpoint { last_payload, .. } => last_payload.as_deref(),
                    _ => None,
                };
                let failure = SimplifyFailure {
                    id: &record.id,
                    error: e.to_string(),
                    last_payload,
                };
                eprintln!("{}", serde_json::to_string(&failure)?);
            }
        }
    }
    out.flush()?;
    eprintln!(
        "{} of {} records simplified, written to {}",
        records.len() - failed,
        records.len(),
        args.out.display()
    );
    Ok(failed == 0)
}

fn annotate_summary(args: AnnotateArgs) -> Result<()> {
    let annotations = load_annotations(&args.annotations)
        .with_context(|| format!("loading annotations {}", args.annotations.display()))?;
    let summary = aggregate_annotations(&annotations);
    let bytes = match args.format {
        Format::Markdown => {
            let mut s = String::from(
                "| Dimension | Good | Acceptable | Poor | Total |\n|---|---:|---:|---:|---:|\n",
            );
            for (d, c) in &summary {
                s.push_str(&format!(
                    "| {d} | {} | {} | {} | {} |\n",
                    c.good,
                    c.acceptable,
                    c.poor,
                    c.total()
                ));
            }
            s.into_bytes()
        }
        Format::Csv => {
            let mut s = String::from("dimension,good,acceptable,poor,total\n");
            for (d, c) in &summary {
                s.push_str(&format!(
                    "{d},{},{},{},{}\n",
                    c.good,
                    c.acceptable,
                    c.poor,
                    c.total()
                ));
            }
            s.into_bytes()
        }
        Format::Json => {
            let mut b = serde_json::to_vec_pretty(&summary)?;
            b.push(b'\n');
            b
        }
    };
    write_output(args.out.as_deref(), &bytes)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Stats(a) => stats(a).map(|_| true),
        Command::Histogram(a) => histogram(a).map(|_| true),
        Command::Render(a) => render(a).map(|_| true),
        Command::Evaluate(a) => evaluate(a).map(|_| true),
        Command::Simplify(a) => simplify(a),
        Command::AnnotateSummary(a) => annotate_summary(a).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
