//! SARI: n-gram add/keep/delete scoring of a system output against its
//! input and a single reference.
//!
//! Set semantics over lowercased word n-grams, n = 1..=4. A precision or
//! recall whose denominator set is empty scores 1.0 when the set it is
//! trying to hit is also empty and 0.0 otherwise; F1 of (0, 0) is 0.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::tokenize;

pub const MAX_ORDER: usize = 4;

pub type Ngram = Vec<String>;
pub type NgramSet = HashSet<Ngram>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SariOrder {
    pub n: usize,
    pub keep_precision: f64,
    pub keep_recall: f64,
    pub f_keep: f64,
    pub add_precision: f64,
    pub add_recall: f64,
    pub f_add: f64,
    pub p_del: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SariScore {
    /// `100 * (f_add + f_keep + p_del) / 3`.
    pub total: f64,
    pub f_add: f64,
    pub f_keep: f64,
    pub p_del: f64,
    pub per_order: Vec<SariOrder>,
}

fn lowercase_words(text: &str) -> Vec<String> {
    tokenize(text)
        .into_iter()
        .filter(|t| t.is_word)
        .map(|t| t.surface.to_lowercase())
        .collect()
}

fn sets_from_words(words: &[String], n: usize) -> NgramSet {
    if n == 0 {
        return NgramSet::new();
    }
    words.windows(n).map(<[String]>::to_vec).collect()
}

/// Distinct contiguous lowercased word n-grams; empty when the text is
/// shorter than `n` words (or `n` is 0).
pub fn ngram_sets(text: &str, n: usize) -> NgramSet {
    sets_from_words(&lowercase_words(text), n)
}

fn ratio(hits: usize, denominator: usize, target_empty: bool) -> f64 {
    if denominator == 0 {
        if target_empty {
            1.0
        } else {
            0.0
        }
    } else {
        hits as f64 / denominator as f64
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

fn score_order(n: usize, input: &NgramSet, output: &NgramSet, reference: &NgramSet) -> SariOrder {
    // keep
    let kept: HashSet<&Ngram> = input.intersection(output).collect();
    let should_keep: HashSet<&Ngram> = input.intersection(reference).collect();
    let kept_good = kept.intersection(&should_keep).count();
    let keep_precision = ratio(kept_good, kept.len(), should_keep.is_empty());
    let keep_recall = ratio(kept_good, should_keep.len(), true);

    // add
    let added: HashSet<&Ngram> = output.difference(input).collect();
    let should_add: HashSet<&Ngram> = reference.difference(input).collect();
    let added_good = added.intersection(&should_add).count();
    let add_precision = ratio(added_good, added.len(), should_add.is_empty());
    let add_recall = ratio(added_good, should_add.len(), true);

    // delete
    let deleted: HashSet<&Ngram> = input.difference(output).collect();
    let should_delete: HashSet<&Ngram> = input.difference(reference).collect();
    let deleted_good = deleted.intersection(&should_delete).count();
    let p_del = ratio(deleted_good, deleted.len(), should_delete.is_empty());

    SariOrder {
        n,
        keep_precision,
        keep_recall,
        f_keep: f1(keep_precision, keep_recall),
        add_precision,
        add_recall,
        f_add: f1(add_precision, add_recall),
        p_del,
    }
}

pub fn sari(input: &str, output: &str, reference: &str) -> Result<SariScore> {
    let input_words = lowercase_words(input);
    if input_words.is_empty() {
        return Err(Error::DegenerateDocument("SARI input has no words"));
    }
    let output_words = lowercase_words(output);
    let reference_words = lowercase_words(reference);

    let per_order: Vec<SariOrder> = (1..=MAX_ORDER)
        .map(|n| {
            score_order(
                n,
                &sets_from_words(&input_words, n),
                &sets_from_words(&output_words, n),
                &sets_from_words(&reference_words, n),
            )
        })
        .collect();

    let mean = |f: fn(&SariOrder) -> f64| per_order.iter().map(f).sum::<f64>() / MAX_ORDER as f64;
    let f_add = mean(|o| o.f_add);
    let f_keep = mean(|o| o.f_keep);
    let p_del = mean(|o| o.p_del);
    Ok(SariScore {
        total: 100.0 * (f_add + f_keep + p_del) / 3.0,
        f_add,
        f_keep,
        p_del,
        per_order,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gram(words: &[&str]) -> Ngram {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn ngram_set_semantics() {
        let unigrams = ngram_sets("a b a", 1);
        assert_eq!(unigrams.len(), 2);
        assert!(unigrams.contains(&gram(&["a"])) && unigrams.contains(&gram(&["b"])));
        assert!(ngram_sets("a b", 3).is_empty());
        let bigrams = ngram_sets("a b c", 2);
        assert_eq!(
            bigrams,
            [gram(&["a", "b"]), gram(&["b", "c"])].into_iter().collect()
        );
        assert!(ngram_sets("a b c", 0).is_empty());
    }

    #[test]
    fn ngrams_drop_punctuation_and_case() {
        assert_eq!(ngram_sets("The, CAT.", 2), ngram_sets("the cat", 2));
    }

    #[test]
    fn identical_triple_is_perfect() {
        let s = sari(
            "the cat sat on the mat",
            "the cat sat on the mat",
            "the cat sat on the mat",
        )
        .unwrap();
        assert_eq!(s.total, 100.0);
        assert_eq!((s.f_add, s.f_keep, s.p_del), (1.0, 1.0, 1.0));
    }

    #[test]
    fn copying_input_against_disjoint_reference_is_zero() {
        let s = sari(
            "alpha beta gamma delta epsilon",
            "alpha beta gamma delta epsilon",
            "one two three four five",
        )
        .unwrap();
        assert_eq!(s.total, 0.0);
    }

    #[test]
    fn partial_unigram_case() {
        // I={a,b,c}, O={a,b,d}, R={a,c,d}
        let s = sari("a b c", "a b d", "a c d").unwrap();
        let o = s.per_order[0];
        // keep: I∩O={a,b}, I∩R={a,c}, I∩O∩R={a}
        assert_eq!(o.keep_precision, 0.5);
        assert_eq!(o.keep_recall, 0.5);
        // add: O\I={d}, R\I={d}
        assert_eq!((o.add_precision, o.add_recall), (1.0, 1.0));
        // del: I\O={c}, I\R={b}
        assert_eq!(o.p_del, 0.0);
        assert!(s.total > 0.0 && s.total < 100.0);
    }

    #[test]
    fn empty_output_and_reference_are_allowed() {
        let s = sari("some input words", "", "").unwrap();
        // Deleting everything when the reference also drops everything.
        assert_eq!(s.p_del, 1.0);
        assert_eq!(s.f_add, 1.0);
        assert!(s.total.is_finite());
    }

    #[test]
    fn degenerate_input_errors() {
        assert!(matches!(
            sari("  ", "a", "a"),
            Err(Error::DegenerateDocument(_))
        ));
        assert!(matches!(
            sari("...", "a", "a"),
            Err(Error::DegenerateDocument(_))
        ));
    }

    #[test]
    fn case_insensitive() {
        let a = sari("The Cat sat", "the cat SAT down", "THE cat lay down").unwrap();
        let b = sari("the cat sat", "the cat sat down", "the cat lay down").unwrap();
        assert_eq!(a, b);
    }
}
