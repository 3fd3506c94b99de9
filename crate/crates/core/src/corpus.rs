//! Parallel abstract / significance-statement corpus: records, split
//! bookkeeping, Table-1 style statistics, discipline histogram, prompt
//! templates and human annotation tallies.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{DocumentMetrics, Metric, MetricSummary, Resources, SURFACE_METRICS};
use crate::stats::TestOutcome;

pub const INSTRUCTION: &str = "Rewrite this abstract in plain English for middle school students: ";
pub const SUMMARY_CUE: &str = "\nLay summary:";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "validation" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SassRecord {
    pub id: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub significance: String,
    pub discipline: String,
    pub split: Split,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

impl SplitCounts {
    pub fn total(&self) -> usize {
        self.train + self.validation + self.test
    }
}

pub fn split_counts(records: &[SassRecord]) -> SplitCounts {
    let mut c = SplitCounts::default();
    for r in records {
        match r.split {
            Split::Train => c.train += 1,
            Split::Validation => c.validation += 1,
            Split::Test => c.test += 1,
        }
    }
    c
}

pub fn filter_split(records: &[SassRecord], split: Split) -> Vec<SassRecord> {
    records
        .iter()
        .filter(|r| r.split == split)
        .cloned()
        .collect()
}

fn field_error(line: usize, field: &str, reason: impl Into<String>) -> Error {
    Error::MalformedRecord {
        line,
        field: field.to_string(),
        reason: reason.into(),
    }
}

/// Parses one JSON object per line. Blank lines are skipped.
pub fn parse_corpus(reader: impl Read) -> Result<Vec<SassRecord>> {
    let mut content = String::new();
    let mut reader = reader;
    reader.read_to_string(&mut content)?;
    let mut records = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for (idx, line) in content.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(line)
            .map_err(|e| field_error(line_no, "<line>", e.to_string()))?;
        let obj = value
            .as_object()
            .ok_or_else(|| field_error(line_no, "<line>", "expected a JSON object"))?;
        let text_field = |name: &str| -> Result<String> {
            match obj.get(name) {
                Some(serde_json::Value::String(s)) => Ok(s.clone()),
                Some(_) => Err(field_error(line_no, name, "expected a string")),
                None => Err(field_error(line_no, name, "missing")),
            }
        };
        let id = text_field("id")?;
        if id.trim().is_empty() {
            return Err(field_error(line_no, "id", "empty"));
        }
        let abstract_text = text_field("abstract")?;
        if abstract_text.trim().is_empty() {
            return Err(field_error(line_no, "abstract", "empty after trimming"));
        }
        let significance = text_field("significance")?;
        if significance.trim().is_empty() {
            return Err(field_error(line_no, "significance", "empty after trimming"));
        }
        let discipline = text_field("discipline")?;
        let split: Split = text_field("split")?
            .parse()
            .map_err(|e: String| field_error(line_no, "split", e))?;
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId { id, line: line_no });
        }
        records.push(SassRecord {
            id,
            abstract_text,
            significance,
            discipline,
            split,
        });
    }
    Ok(records)
}

pub fn load_corpus(path: &Path) -> Result<Vec<SassRecord>> {
    let file = std::fs::File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingResource {
            path: path.to_path_buf(),
        },
        _ => Error::Io(e),
    })?;
    parse_corpus(std::io::BufReader::new(file))
}

/// Per-metric means/sds of both columns plus the paired test between them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricComparison {
    pub metric: Metric,
    pub abstracts: MetricSummary,
    pub significance: MetricSummary,
    pub test: TestOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordFailure {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_records: usize,
    pub metrics: Vec<MetricComparison>,
    pub family_size: usize,
    pub alpha: f64,
    pub skipped: Vec<RecordFailure>,
    pub voa_source: String,
    pub freq_source: String,
}

/// Computes both columns of every pair and the Bonferroni-adjusted paired
/// tests over the six surface metrics.
///
/// Pairs where either side has no words are skipped and listed.
pub fn corpus_stats(
    records: &[SassRecord],
    resources: &Resources,
    alpha: f64,
) -> Result<CorpusStats> {
    let per_record: Vec<std::result::Result<(DocumentMetrics, DocumentMetrics), RecordFailure>> =
        records
            .par_iter()
            .map(|r| {
                let a = DocumentMetrics::compute(&r.abstract_text, resources);
                let s = DocumentMetrics::compute(&r.significance, resources);
                match (a, s) {
                    (Ok(a), Ok(s)) => Ok((a, s)),
                    (Err(e), _) | (_, Err(e)) => Err(RecordFailure {
                        id: r.id.clone(),
                        reason: e.to_string(),
                    }),
                }
            })
            .collect();

    let mut pairs = Vec::new();
    let mut skipped = Vec::new();
    for item in per_record {
        match item {
            Ok(p) => pairs.push(p),
            Err(f) => skipped.push(f),
        }
    }
    if pairs.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: pairs.len(),
        });
    }

    let family_size = SURFACE_METRICS.len();
    let metrics = SURFACE_METRICS
        .iter()
        .map(|&metric| {
            let xs: Vec<f64> = pairs.iter().map(|(a, _)| a.get(metric)).collect();
            let ys: Vec<f64> = pairs.iter().map(|(_, s)| s.get(metric)).collect();
            Ok(MetricComparison {
                metric,
                abstracts: MetricSummary::of(&xs),
                significance: MetricSummary::of(&ys),
                test: TestOutcome::run(&ys, &xs, family_size, alpha)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(CorpusStats {
        n_records: pairs.len(),
        metrics,
        family_size,
        alpha,
        skipped,
        voa_source: resources.voa.source_id.clone(),
        freq_source: resources.freq.source_id.clone(),
    })
}

/// Record counts per discipline, largest first (ties by name); disciplines
/// with fewer than `min_count` records are omitted.
pub fn discipline_histogram(records: &[SassRecord], min_count: usize) -> Vec<(String, usize)> {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for r in records {
        *counts.entry(r.discipline.as_str()).or_default() += 1;
    }
    let mut bins: Vec<(String, usize)> = counts
        .into_iter()
        .filter(|&(_, c)| c >= min_count)
        .map(|(d, c)| (d.to_string(), c))
        .collect();
    bins.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    bins
}

/// Fine-tuning text: instruction, abstract, newline, cue, one space, target.
pub fn render_training_example(record: &SassRecord) -> String {
    format!(
        "{INSTRUCTION}{}{SUMMARY_CUE} {}",
        record.abstract_text, record.significance
    )
}

/// Generation prompt: the training text cut right after `Lay summary:`.
pub fn render_inference_prompt(abstract_text: &str) -> Result<String> {
    if abstract_text.trim().is_empty() {
        return Err(Error::DegenerateDocument("empty abstract"));
    }
    Ok(format!("{INSTRUCTION}{abstract_text}{SUMMARY_CUE}"))
}

/// Inverse of [`render_training_example`].
pub fn parse_training_example(text: &str) -> Option<(&str, &str)> {
    let body = text.strip_prefix(INSTRUCTION)?;
    let cue = format!("{SUMMARY_CUE} ");
    let at = body.rfind(&cue)?;
    Some((&body[..at], &body[at + cue.len()..]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    LanguageQuality,
    Faithfulness,
    Completeness,
}

impl Dimension {
    pub const ALL: [Dimension; 3] = [
        Dimension::LanguageQuality,
        Dimension::Faithfulness,
        Dimension::Completeness,
    ];
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dimension::LanguageQuality => "language_quality",
            Dimension::Faithfulness => "faithfulness",
            Dimension::Completeness => "completeness",
        })
    }
}

impl FromStr for Dimension {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s
            .trim()
            .to_ascii_lowercase()
            .replace([' ', '-'], "_")
            .as_str()
        {
            "language_quality" => Ok(Dimension::LanguageQuality),
            "faithfulness" => Ok(Dimension::Faithfulness),
            "completeness" => Ok(Dimension::Completeness),
            _ => Err(Error::InvalidDimension(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Grade {
    Good,
    Acceptable,
    Poor,
}

impl fmt::Display for Grade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Grade::Good => "Good",
            Grade::Acceptable => "Acceptable",
            Grade::Poor => "Poor",
        })
    }
}

impl FromStr for Grade {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "good" => Ok(Grade::Good),
            "acceptable" => Ok(Grade::Acceptable),
            "poor" => Ok(Grade::Poor),
            _ => Err(Error::InvalidGrade(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub record_id: String,
    pub dimension: Dimension,
    pub grade: Grade,
    pub annotator: String,
    pub note: Option<String>,
}

impl AnnotationRecord {
    pub fn new(
        record_id: &str,
        dimension: &str,
        grade: &str,
        annotator: &str,
        note: Option<&str>,
    ) -> Result<Self> {
        Ok(AnnotationRecord {
            record_id: record_id.to_string(),
            dimension: dimension.parse()?,
            grade: grade.parse()?,
            annotator: annotator.to_string(),
            note: note.filter(|n| !n.trim().is_empty()).map(str::to_string),
        })
    }
}

#[derive(Debug, Deserialize)]
struct AnnotationRow {
    record_id: String,
    dimension: String,
    grade: String,
    annotator: String,
    #[serde(default)]
    note: Option<String>,
}

/// Reads `record_id,dimension,grade,annotator,note` CSV with a header row.
pub fn parse_annotations(reader: impl Read) -> Result<Vec<AnnotationRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    rdr.deserialize::<AnnotationRow>()
        .map(|row| {
            let row = row?;
            AnnotationRecord::new(
                &row.record_id,
                &row.dimension,
                &row.grade,
                &row.annotator,
                row.note.as_deref(),
            )
        })
        .collect()
}

pub fn load_annotations(path: &Path) -> Result<Vec<AnnotationRecord>> {
    let file = std::fs::File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingResource {
            path: path.to_path_buf(),
        },
        _ => Error::Io(e),
    })?;
    parse_annotations(file)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GradeCounts {
    pub good: usize,
    pub acceptable: usize,
    pub poor: usize,
}

impl GradeCounts {
    pub fn total(&self) -> usize {
        self.good + self.acceptable + self.poor
    }
}

/// Grade counts for every rubric dimension (all three always present).
pub fn aggregate_annotations(records: &[AnnotationRecord]) -> BTreeMap<Dimension, GradeCounts> {
    let mut out: BTreeMap<Dimension, GradeCounts> = Dimension::ALL
        .iter()
        .map(|&d| (d, GradeCounts::default()))
        .collect();
    for r in records {
        let c = out.entry(r.dimension).or_default();
        match r.grade {
            Grade::Good => c.good += 1,
            Grade::Acceptable => c.acceptable += 1,
            Grade::Poor => c.poor += 1,
        }
    }
    out
}
