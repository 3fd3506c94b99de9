//! Batch evaluation of simplification systems against original abstracts,
//! and report rendering.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusStats, RecordFailure, SassRecord};
use crate::error::{Error, Result};
use crate::metrics::{
    DocumentMetrics, Metric, MetricSummary, Resources, ALL_METRICS, SURFACE_METRICS,
};
use crate::sari::sari;
use crate::semantic::{bertscore, EmbedError};
use crate::stats::TestOutcome;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Original,
    SystemOutput,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub record_id: String,
    pub ari: f64,
    pub fk: f64,
    pub voa: f64,
    pub sl: f64,
    pub wa: f64,
    pub wl: f64,
    pub sari: Option<f64>,
    pub bs: Option<f64>,
    /// Why `bs` is absent when a provider was configured.
    pub bs_error: Option<String>,
    pub provenance: Provenance,
}

impl MetricRow {
    fn from_doc(record_id: &str, m: DocumentMetrics, provenance: Provenance) -> Self {
        MetricRow {
            record_id: record_id.to_string(),
            ari: m.ari,
            fk: m.fk,
            voa: m.voa,
            sl: m.sl,
            wa: m.wa,
            wl: m.wl,
            sari: None,
            bs: None,
            bs_error: None,
            provenance,
        }
    }

    pub fn original(record_id: &str, text: &str, resources: &Resources<'_>) -> Result<Self> {
        Ok(Self::from_doc(
            record_id,
            DocumentMetrics::compute(text, resources)?,
            Provenance::Original,
        ))
    }

    pub fn get(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::Ari => Some(self.ari),
            Metric::Fk => Some(self.fk),
            Metric::Voa => Some(self.voa),
            Metric::Sl => Some(self.sl),
            Metric::Wa => Some(self.wa),
            Metric::Wl => Some(self.wl),
            Metric::Sari => self.sari,
            Metric::Bs => self.bs,
        }
    }
}

/// Scores one system output. SARI uses (abstract, output, reference); BS
/// compares the output with the reference when an embedder is configured.
///
/// An unreachable embedder is an error; any other embedding failure leaves
/// `bs` empty with the reason in `bs_error`.
pub fn evaluate_pair(
    record_id: &str,
    abstract_text: &str,
    system_output: &str,
    reference: &str,
    resources: &Resources<'_>,
) -> Result<MetricRow> {
    if reference.trim().is_empty() {
        return Err(Error::DegenerateDocument("empty reference"));
    }
    let doc = DocumentMetrics::compute(system_output, resources)?;
    let mut row = MetricRow::from_doc(record_id, doc, Provenance::SystemOutput);
    row.sari = Some(sari(abstract_text, system_output, reference)?.total);
    if let Some(embedder) = resources.embedder {
        let scored = embedder
            .embed(system_output)
            .and_then(|c| embedder.embed(reference).map(|r| (c, r)));
        match scored {
            Ok((cand, refr)) => match bertscore(&cand, &refr) {
                Ok(s) => row.bs = Some(s.f1),
                Err(e) => row.bs_error = Some(e.to_string()),
            },
            Err(e @ EmbedError::ProviderUnavailable(_)) => return Err(e.into()),
            Err(e) => row.bs_error = Some(e.to_string()),
        }
    }
    Ok(row)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemOutput {
    pub id: String,
    pub text: String,
}

/// Reads system outputs as JSONL lines `{"id": ..., "text": ...}`.
pub fn parse_outputs(reader: impl Read) -> Result<HashMap<String, String>> {
    let mut out = HashMap::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: SystemOutput =
            serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
                line: lineno,
                field: "id/text".into(),
                reason: e.to_string(),
            })?;
        if out.insert(rec.id.clone(), rec.text).is_some() {
            return Err(Error::DuplicateId {
                id: rec.id,
                line: lineno,
            });
        }
    }
    Ok(out)
}

pub fn load_outputs(path: &Path) -> Result<HashMap<String, String>> {
    let file = File::open(path).map_err(|_| Error::MissingResource {
        path: path.to_path_buf(),
    })?;
    parse_outputs(file)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub metric: Metric,
    pub system: MetricSummary,
    /// Original abstracts over the same records; absent for SARI and BS.
    pub original: Option<MetricSummary>,
    /// Paired test against the originals; absent for SARI and BS.
    pub test: Option<TestOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub system_id: String,
    pub n_records: usize,
    pub metrics: Vec<MetricReport>,
    pub family_size: usize,
    pub alpha: f64,
    pub failures: Vec<RecordFailure>,
    pub voa_source: String,
    pub freq_source: String,
    /// Provider id and layer used for BS.
    pub embedder: Option<(String, u32)>,
    pub rows: Vec<MetricRow>,
    pub original_rows: Vec<MetricRow>,
}

impl ComparisonReport {
    pub fn metric(&self, metric: Metric) -> Option<&MetricReport> {
        self.metrics.iter().find(|m| m.metric == metric)
    }
}

#[derive(Debug, Clone)]
pub struct BatchOptions {
    pub alpha: f64,
    /// Worker threads for per-record scoring; this also bounds in-flight
    /// embedding requests. `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

impl Default for BatchOptions {
    fn default() -> Self {
        BatchOptions {
            alpha: 0.05,
            threads: None,
        }
    }
}

/// Scores every test record's system output and tests each surface metric
/// against the original abstracts (paired, Bonferroni over the six metrics).
pub fn evaluate_batch(
    test_records: &[SassRecord],
    outputs: &HashMap<String, String>,
    system_id: &str,
    resources: &Resources<'_>,
    options: &BatchOptions,
) -> Result<ComparisonReport> {
    if test_records.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    let missing: Vec<String> = test_records
        .iter()
        .filter(|r| !outputs.contains_key(&r.id))
        .map(|r| r.id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingOutput(missing));
    }

    let score = |r: &SassRecord| -> Result<(MetricRow, MetricRow)> {
        let wrap = |e: Error| Error::Record {
            id: r.id.clone(),
            source: Box::new(e),
        };
        let original = MetricRow::original(&r.id, &r.abstract_text, resources).map_err(wrap)?;
        let system = evaluate_pair(
            &r.id,
            &r.abstract_text,
            &outputs[&r.id],
            &r.significance,
            resources,
        )
        .map_err(wrap)?;
        Ok((original, system))
    };
    let scored: Vec<Result<(MetricRow, MetricRow)>> = match options.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|_| Error::Numeric("could not build thread pool"))?
            .install(|| test_records.par_iter().map(score).collect()),
        None => test_records.par_iter().map(score).collect(),
    };

    let mut rows = Vec::new();
    let mut original_rows = Vec::new();
    let mut failures = Vec::new();
    for (record, result) in test_records.iter().zip(scored) {
        match result {
            Ok((o, s)) => {
                original_rows.push(o);
                rows.push(s);
            }
            Err(Error::Record { source, .. })
                if matches!(*source, Error::Embed(EmbedError::ProviderUnavailable(_))) =>
            {
                return Err(*source)
            }
            Err(e) => failures.push(RecordFailure {
                id: record.id.clone(),
                reason: e.to_string(),
            }),
        }
    }

    if rows.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }

    let family_size = SURFACE_METRICS.len();
    let mut metrics = Vec::new();
    for metric in ALL_METRICS {
        let sys: Vec<f64> = rows.iter().filter_map(|r| r.get(metric)).collect();
        if SURFACE_METRICS.contains(&metric) {
            let orig: Vec<f64> = original_rows.iter().filter_map(|r| r.get(metric)).collect();
            metrics.push(MetricReport {
                metric,
                system: MetricSummary::of(&sys),
                original: Some(MetricSummary::of(&orig)),
                test: Some(TestOutcome::run(&sys, &orig, family_size, options.alpha)?),
            });
        } else if !sys.is_empty() {
            metrics.push(MetricReport {
                metric,
                system: MetricSummary::of(&sys),
                original: None,
                test: None,
            });
        }
    }

    Ok(ComparisonReport {
        system_id: system_id.to_string(),
        n_records: rows.len(),
        metrics,
        family_size,
        alpha: options.alpha,
        failures,
        voa_source: resources.voa.source_id.clone(),
        freq_source: resources.freq.source_id.clone(),
        embedder: resources
            .embedder
            .map(|e| (e.provider_id().to_string(), e.layer())),
        rows,
        original_rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Markdown,
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(format!("unknown format `{other}`")),
        }
    }
}

fn fmt_num(v: f64, decimals: usize) -> String {
    // Avoid "-0.0" for values that round to zero.
    let s = format!("{v:.decimals$}");
    if s.trim_start_matches('-')
        .chars()
        .all(|c| c == '0' || c == '.')
    {
        s.trim_start_matches('-').to_string()
    } else {
        s
    }
}

fn header_label(metric: Metric) -> String {
    if metric.lower_is_better() {
        format!("{}↓", metric.label())
    } else {
        metric.label().to_string()
    }
}

/// `mean* (sd)`, asterisk when the paired test is significant.
pub fn format_cell(summary: &MetricSummary, decimals: usize, significant: bool) -> String {
    format!(
        "{}{} ({})",
        fmt_num(summary.mean, decimals),
        if significant { "*" } else { "" },
        fmt_num(summary.sd, decimals)
    )
}

fn csv_bytes(header: &[String], rows: &[Vec<String>]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv write");
    for r in rows {
        w.write_record(r).expect("in-memory csv write");
    }
    w.into_inner().expect("in-memory csv flush")
}

fn json_bytes<T: Serialize + ?Sized>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("report serializes");
    out.push(b'\n');
    out
}

/// Renders one row per system, columns in table order.
pub fn emit_report(reports: &[ComparisonReport], format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Markdown => {
            let mut out = String::new();
            let headers: Vec<String> = ALL_METRICS.iter().map(|&m| header_label(m)).collect();
            let _ = writeln!(out, "| System | N | {} |", headers.join(" | "));
            let _ = writeln!(out, "|---|---:|{}", "---:|".repeat(ALL_METRICS.len()));
            for r in reports {
                let cells: Vec<String> = ALL_METRICS
                    .iter()
                    .map(|&m| match r.metric(m) {
                        Some(mr) => format_cell(
                            &mr.system,
                            m.decimals(),
                            mr.test.is_some_and(|t| t.is_significant()),
                        ),
                        None => "n/a".to_string(),
                    })
                    .collect();
                let _ = writeln!(
                    out,
                    "| {} | {} | {} |",
                    r.system_id,
                    r.n_records,
                    cells.join(" | ")
                );
            }
            out.into_bytes()
        }
        ReportFormat::Csv => {
            let mut header = vec!["system".to_string(), "n".to_string()];
            for m in ALL_METRICS {
                header.push(format!("{}_mean", m.key()));
                header.push(format!("{}_sd", m.key()));
                header.push(format!("{}_p_adjusted", m.key()));
                header.push(format!("{}_significant", m.key()));
            }
            let rows: Vec<Vec<String>> = reports
                .iter()
                .map(|r| {
                    let mut row = vec![r.system_id.clone(), r.n_records.to_string()];
                    for m in ALL_METRICS {
                        match r.metric(m) {
                            Some(mr) => {
                                row.push(format!("{:.6}", mr.system.mean));
                                row.push(format!("{:.6}", mr.system.sd));
                                match mr.test {
                                    Some(TestOutcome::Tested(t)) => {
                                        row.push(format!("{:.6e}", t.p_adjusted));
                                        row.push(t.significant.to_string());
                                    }
                                    Some(TestOutcome::NoChange) => {
                                        row.push("no_change".into());
                                        row.push("false".into());
                                    }
                                    Some(_) => {
                                        row.push("untested".into());
                                        row.push("false".into());
                                    }
                                    None => {
                                        row.push(String::new());
                                        row.push(String::new());
                                    }
                                }
                            }
                            None => row.extend(std::iter::repeat_n(String::new(), 4)),
                        }
                    }
                    row
                })
                .collect();
            csv_bytes(&header, &rows)
        }
        ReportFormat::Json => json_bytes(reports),
    }
}

/// Renders corpus statistics as the two-row abstract / significance table.
pub fn emit_corpus_stats(stats: &CorpusStats, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Markdown => {
            let mut out = String::new();
            let headers: Vec<String> = stats
                .metrics
                .iter()
                .map(|m| header_label(m.metric))
                .collect();
            let _ = writeln!(out, "| Category | {} |", headers.join(" | "));
            let _ = writeln!(out, "|---|{}", "---:|".repeat(stats.metrics.len()));
            let abstracts: Vec<String> = stats
                .metrics
                .iter()
                .map(|m| format_cell(&m.abstracts, m.metric.decimals(), false))
                .collect();
            let significance: Vec<String> = stats
                .metrics
                .iter()
                .map(|m| {
                    format_cell(
                        &m.significance,
                        m.metric.decimals(),
                        m.test.is_significant(),
                    )
                })
                .collect();
            let _ = writeln!(out, "| Abstract | {} |", abstracts.join(" | "));
            let _ = writeln!(
                out,
                "| Significance statement | {} |",
                significance.join(" | ")
            );
            out.into_bytes()
        }
        ReportFormat::Csv => {
            let header: Vec<String> = [
                "metric",
                "abstract_mean",
                "abstract_sd",
                "significance_mean",
                "significance_sd",
                "t_stat",
                "p_raw",
                "p_adjusted",
                "significant",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect();
            let rows: Vec<Vec<String>> = stats
                .metrics
                .iter()
                .map(|m| {
                    let (t, p, pa, sig) = match m.test {
                        TestOutcome::Tested(t) => (
                            format!("{:.6}", t.t_stat),
                            format!("{:.6e}", t.p_raw),
                            format!("{:.6e}", t.p_adjusted),
                            t.significant.to_string(),
                        ),
                        TestOutcome::NoChange => (
                            "0".into(),
                            "no_change".into(),
                            "no_change".into(),
                            "false".into(),
                        ),
                        _ => (
                            "".into(),
                            "untested".into(),
                            "untested".into(),
                            "false".into(),
                        ),
                    };
                    vec![
                        m.metric.label().to_string(),
                        format!("{:.6}", m.abstracts.mean),
                        format!("{:.6}", m.abstracts.sd),
                        format!("{:.6}", m.significance.mean),
                        format!("{:.6}", m.significance.sd),
                        t,
                        p,
                        pa,
                        sig,
                    ]
                })
                .collect();
            csv_bytes(&header, &rows)
        }
        ReportFormat::Json => json_bytes(stats),
    }
}
