//! Word-level accessibility resources: Special English vocabulary membership
//! and per-billion word frequencies.

use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::text::{AnalyzedDocument, Token};

const BUNDLED_VOA: &str = include_str!("../resources/voa_wordbook.txt");
const BUNDLED_FREQ: &str = include_str!("../resources/wiki_freq_en.tsv");

/// Lookup form of a word: lowercase, typographic apostrophes folded to ASCII.
pub fn normalize_word(surface: &str) -> String {
    surface
        .chars()
        .flat_map(char::to_lowercase)
        .map(|c| if c == '\u{2019}' { '\'' } else { c })
        .collect()
}

fn read_text(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingResource {
            path: path.to_path_buf(),
        },
        _ => Error::Io(e),
    })?;
    String::from_utf8(bytes).map_err(|e| Error::MalformedResource {
        source_id: path.display().to_string(),
        line: 0,
        reason: format!("not UTF-8 text: {e}"),
    })
}

/// Returns the value of a `# version: ...` comment, if the line is one.
fn version_comment(line: &str) -> Option<&str> {
    line.strip_prefix('#')?
        .trim()
        .strip_prefix("version:")
        .map(str::trim)
}

#[derive(Debug, Clone)]
pub struct VoaLexicon {
    entries: HashSet<String>,
    pub source_id: String,
}

impl VoaLexicon {
    /// One word per line; blank lines and `#` comments are skipped, entries
    /// containing whitespace (multi-word phrases) are dropped.
    pub fn parse(content: &str, default_source: &str) -> Result<Self> {
        let mut source_id = default_source.to_string();
        let mut entries = HashSet::new();
        for (idx, raw) in content.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('#') {
                if let Some(v) = version_comment(line) {
                    source_id = v.to_string();
                }
                continue;
            }
            if line.chars().any(char::is_control) {
                return Err(Error::MalformedResource {
                    source_id,
                    line: idx + 1,
                    reason: "control characters in entry".into(),
                });
            }
            if line.contains(char::is_whitespace) {
                continue;
            }
            entries.insert(normalize_word(line));
        }
        Ok(VoaLexicon { entries, source_id })
    }

    pub fn from_words<I, S>(words: I, source_id: &str) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        VoaLexicon {
            entries: words
                .into_iter()
                .map(|w| normalize_word(w.as_ref().trim()))
                .filter(|w| !w.is_empty())
                .collect(),
            source_id: source_id.to_string(),
        }
    }

    pub fn bundled() -> &'static VoaLexicon {
        static LEX: OnceLock<VoaLexicon> = OnceLock::new();
        LEX.get_or_init(|| {
            VoaLexicon::parse(BUNDLED_VOA, "bundled-voa").expect("bundled VOA list is valid")
        })
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains(&normalize_word(word))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn load_voa(path: &Path) -> Result<VoaLexicon> {
    VoaLexicon::parse(&read_text(path)?, &path.display().to_string())
}

/// Word frequencies per 10^9 tokens.
#[derive(Debug, Clone)]
pub struct FrequencyTable {
    freqs: HashMap<String, f64>,
    pub floor_freq: f64,
    pub source_id: String,
}

impl FrequencyTable {
    pub const DEFAULT_FLOOR: f64 = 1.0;

    /// Two-column TSV: `word<TAB>frequency_per_billion`. `#` lines are comments.
    pub fn parse(content: &str, default_source: &str) -> Result<Self> {
        let mut source_id = default_source.to_string();
        let mut freqs = HashMap::new();
        for (idx, raw) in content.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            if line.starts_with('#') {
                if let Some(v) = version_comment(line) {
                    source_id = v.to_string();
                }
                continue;
            }
            let malformed = |reason: String| Error::MalformedResource {
                source_id: source_id.clone(),
                line: idx + 1,
                reason,
            };
            let (word, value) = line
                .split_once('\t')
                .ok_or_else(|| malformed("expected two tab-separated columns".into()))?;
            let freq: f64 = value
                .trim()
                .parse()
                .map_err(|e| malformed(format!("bad frequency `{value}`: {e}")))?;
            if !(freq.is_finite() && freq > 0.0) {
                return Err(malformed(format!("frequency must be positive, got {freq}")));
            }
            let word = normalize_word(word.trim());
            if word.is_empty() {
                return Err(malformed("empty word".into()));
            }
            // Keys differing only by case collapse to the larger count.
            let slot = freqs.entry(word).or_insert(freq);
            if freq > *slot {
                *slot = freq;
            }
        }
        Ok(FrequencyTable {
            freqs,
            floor_freq: Self::DEFAULT_FLOOR,
            source_id,
        })
    }

    pub fn from_pairs<I, S>(pairs: I, floor_freq: f64, source_id: &str) -> Self
    where
        I: IntoIterator<Item = (S, f64)>,
        S: AsRef<str>,
    {
        FrequencyTable {
            freqs: pairs
                .into_iter()
                .map(|(w, f)| (normalize_word(w.as_ref()), f))
                .collect(),
            floor_freq,
            source_id: source_id.to_string(),
        }
    }

    pub fn bundled() -> &'static FrequencyTable {
        static TABLE: OnceLock<FrequencyTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            FrequencyTable::parse(BUNDLED_FREQ, "bundled-freq").expect("bundled table is valid")
        })
    }

    pub fn with_floor(mut self, floor_freq: f64) -> Self {
        assert!(floor_freq > 0.0, "floor frequency must be positive");
        self.floor_freq = floor_freq;
        self
    }

    pub fn freq_per_billion(&self, word: &str) -> f64 {
        self.freqs
            .get(&normalize_word(word))
            .copied()
            .unwrap_or(self.floor_freq)
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }
}

pub fn load_frequency_table(path: &Path) -> Result<FrequencyTable> {
    FrequencyTable::parse(&read_text(path)?, &path.display().to_string())
}

/// Haldane-smoothed log ratio `ln((in + 0.5) / (out + 0.5))`.
pub fn voa_log_ratio_from_counts(n_in: usize, n_out: usize) -> f64 {
    ((n_in as f64 + 0.5) / (n_out as f64 + 0.5)).ln()
}

pub fn voa_counts<'a>(words: impl Iterator<Item = &'a Token>, lex: &VoaLexicon) -> (usize, usize) {
    words.fold((0, 0), |(i, o), w| {
        if lex.contains(&w.surface) {
            (i + 1, o)
        } else {
            (i, o + 1)
        }
    })
}

pub fn voa_log_ratio(doc: &AnalyzedDocument, lex: &VoaLexicon) -> Result<f64> {
    if doc.n_words == 0 {
        return Err(Error::DegenerateDocument("zero words"));
    }
    let (n_in, n_out) = voa_counts(doc.words(), lex);
    Ok(voa_log_ratio_from_counts(n_in, n_out))
}

/// Mean natural-log frequency per billion tokens over the document's words.
pub fn word_accessibility(doc: &AnalyzedDocument, table: &FrequencyTable) -> Result<f64> {
    if doc.n_words == 0 {
        return Err(Error::DegenerateDocument("zero words"));
    }
    let (sum, n) = doc.words().fold((0.0, 0usize), |(s, n), w| {
        (s + table.freq_per_billion(&w.surface).ln(), n + 1)
    });
    Ok(sum / n as f64)
}
