//! Grade-level readability formulas and surface-length statistics.
//!
//! ARI:  `4.71 * chars/words + 0.5 * words/sentences - 21.43`
//! F-K:  `0.39 * words/sentences + 11.8 * syllables/words - 15.59`
//!
//! Scores are reported raw (never clamped), so corpus means stay unbiased.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::AnalyzedDocument;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadabilityScores {
    pub ari: f64,
    pub fk: f64,
    pub avg_sentence_len: f64,
    pub avg_word_len: f64,
}

impl ReadabilityScores {
    pub fn from_doc(doc: &AnalyzedDocument) -> Result<Self> {
        Ok(ReadabilityScores {
            ari: ari(doc)?,
            fk: flesch_kincaid(doc)?,
            avg_sentence_len: avg_sentence_len(doc)?,
            avg_word_len: avg_word_len(doc)?,
        })
    }
}

fn check(doc: &AnalyzedDocument) -> Result<()> {
    if doc.n_words == 0 {
        return Err(Error::DegenerateDocument("zero words"));
    }
    if doc.n_sentences == 0 {
        return Err(Error::DegenerateDocument("zero sentences"));
    }
    Ok(())
}

pub fn avg_sentence_len(doc: &AnalyzedDocument) -> Result<f64> {
    check(doc)?;
    Ok(doc.n_words as f64 / doc.n_sentences as f64)
}

pub fn avg_word_len(doc: &AnalyzedDocument) -> Result<f64> {
    check(doc)?;
    Ok(doc.n_chars as f64 / doc.n_words as f64)
}

/// Automated Readability Index.
pub fn ari(doc: &AnalyzedDocument) -> Result<f64> {
    check(doc)?;
    let chars_per_word = doc.n_chars as f64 / doc.n_words as f64;
    let words_per_sentence = doc.n_words as f64 / doc.n_sentences as f64;
    Ok(4.71 * chars_per_word + 0.5 * words_per_sentence - 21.43)
}

/// Flesch-Kincaid grade level.
pub fn flesch_kincaid(doc: &AnalyzedDocument) -> Result<f64> {
    check(doc)?;
    let words_per_sentence = doc.n_words as f64 / doc.n_sentences as f64;
    let syllables_per_word = doc.n_syllables as f64 / doc.n_words as f64;
    Ok(0.39 * words_per_sentence + 11.8 * syllables_per_word - 15.59)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GradeBand {
    /// Below 14: kindergarten through twelfth grade.
    K12,
    /// 14 up to (not including) 19.
    College,
    /// 19 and above.
    Advanced,
}

impl fmt::Display for GradeBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GradeBand::K12 => "K-12",
            GradeBand::College => "College",
            GradeBand::Advanced => "Advanced",
        })
    }
}

pub fn grade_band(score: f64) -> GradeBand {
    if score < 14.0 {
        GradeBand::K12
    } else if score < 19.0 {
        GradeBand::College
    } else {
        GradeBand::Advanced
    }
}
