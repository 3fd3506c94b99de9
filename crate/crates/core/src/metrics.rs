//! The per-document metric family shared by corpus statistics and system
//! evaluation.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::lexicon::{voa_log_ratio, word_accessibility, FrequencyTable, VoaLexicon};
use crate::readability::ReadabilityScores;
use crate::semantic::EmbeddingProvider;
use crate::stats::{mean, sample_sd};
use crate::text::{analyze_with, AbbreviationList};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Ari,
    Fk,
    Sari,
    Voa,
    Sl,
    Wa,
    Wl,
    Bs,
}

/// Table column order.
pub const ALL_METRICS: [Metric; 8] = [
    Metric::Ari,
    Metric::Fk,
    Metric::Sari,
    Metric::Voa,
    Metric::Sl,
    Metric::Wa,
    Metric::Wl,
    Metric::Bs,
];

/// Metrics defined on a single document; these form the paired-test family.
pub const SURFACE_METRICS: [Metric; 6] = [
    Metric::Ari,
    Metric::Fk,
    Metric::Voa,
    Metric::Sl,
    Metric::Wa,
    Metric::Wl,
];

impl Metric {
    pub fn label(self) -> &'static str {
        match self {
            Metric::Ari => "ARI",
            Metric::Fk => "F-K",
            Metric::Sari => "SARI",
            Metric::Voa => "VOA",
            Metric::Sl => "SL",
            Metric::Wa => "WA",
            Metric::Wl => "WL",
            Metric::Bs => "BS",
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            Metric::Ari => "ari",
            Metric::Fk => "fk",
            Metric::Sari => "sari",
            Metric::Voa => "voa",
            Metric::Sl => "sl",
            Metric::Wa => "wa",
            Metric::Wl => "wl",
            Metric::Bs => "bs",
        }
    }

    pub fn lower_is_better(self) -> bool {
        matches!(self, Metric::Ari | Metric::Fk | Metric::Sl | Metric::Wl)
    }

    /// Decimal places used in rendered tables.
    pub fn decimals(self) -> usize {
        match self {
            Metric::Voa | Metric::Bs => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Shared, read-only scoring resources.
#[derive(Clone, Copy)]
pub struct Resources<'a> {
    pub voa: &'a VoaLexicon,
    pub freq: &'a FrequencyTable,
    pub abbreviations: &'a AbbreviationList,
    pub embedder: Option<&'a dyn EmbeddingProvider>,
}

impl<'a> Resources<'a> {
    pub fn new(voa: &'a VoaLexicon, freq: &'a FrequencyTable) -> Self {
        Resources {
            voa,
            freq,
            abbreviations: AbbreviationList::bundled(),
            embedder: None,
        }
    }

    pub fn bundled() -> Resources<'static> {
        Resources::new(VoaLexicon::bundled(), FrequencyTable::bundled())
    }

    pub fn with_embedder(mut self, embedder: &'a dyn EmbeddingProvider) -> Self {
        self.embedder = Some(embedder);
        self
    }

    pub fn with_abbreviations(mut self, abbreviations: &'a AbbreviationList) -> Self {
        self.abbreviations = abbreviations;
        self
    }
}

impl fmt::Debug for Resources<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Resources")
            .field("voa", &self.voa.source_id)
            .field("freq", &self.freq.source_id)
            .field("abbreviations", &self.abbreviations.version)
            .field(
                "embedder",
                &self.embedder.map(|e| (e.provider_id(), e.layer())),
            )
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DocumentMetrics {
    pub ari: f64,
    pub fk: f64,
    pub voa: f64,
    pub sl: f64,
    pub wa: f64,
    pub wl: f64,
}

impl DocumentMetrics {
    pub fn compute(text: &str, resources: &Resources<'_>) -> Result<Self> {
        let doc = analyze_with(text, resources.abbreviations)?;
        let r = ReadabilityScores::from_doc(&doc)?;
        Ok(DocumentMetrics {
            ari: r.ari,
            fk: r.fk,
            voa: voa_log_ratio(&doc, resources.voa)?,
            sl: r.avg_sentence_len,
            wa: word_accessibility(&doc, resources.freq)?,
            wl: r.avg_word_len,
        })
    }

    /// Value of a surface metric; SARI and BS are not document metrics.
    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Ari => self.ari,
            Metric::Fk => self.fk,
            Metric::Voa => self.voa,
            Metric::Sl => self.sl,
            Metric::Wa => self.wa,
            Metric::Wl => self.wl,
            Metric::Sari | Metric::Bs => panic!("{metric} is not a single-document metric"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation; 0 when n < 2.
    pub sd: f64,
}

impl MetricSummary {
    pub fn of(values: &[f64]) -> Self {
        MetricSummary {
            n: values.len(),
            mean: mean(values),
            sd: sample_sd(values),
        }
    }
}
