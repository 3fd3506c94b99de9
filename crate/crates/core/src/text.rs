//! Tokenization, sentence segmentation and syllable counting.
//!
//! Everything downstream (readability formulas, lexicon ratios, SARI n-grams)
//! consumes the word tokens produced here, so the rules are kept small and
//! deterministic:
//!
//! - input is NFC-normalized first;
//! - a word is a maximal run of alphanumerics, joined across a single internal
//!   hyphen or apostrophe (`state-of-the-art`, `don't`) and across a decimal
//!   point or thousands separator between digits (`3.5`, `1,000`);
//! - every other non-whitespace character is a one-character punctuation token.

use std::collections::HashSet;
use std::path::Path;
use std::sync::OnceLock;

use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

const BUNDLED_ABBREVIATIONS: &str = include_str!("../resources/abbreviations.txt");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    /// Alphanumeric characters in `surface`.
    pub char_count: usize,
    pub is_word: bool,
}

impl Token {
    fn new(surface: String) -> Self {
        let char_count = surface.chars().filter(|c| c.is_alphanumeric()).count();
        Token {
            is_word: char_count > 0,
            char_count,
            surface,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub tokens: Vec<Token>,
}

impl Sentence {
    pub fn words(&self) -> impl Iterator<Item = &Token> {
        self.tokens.iter().filter(|t| t.is_word)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalyzedDocument {
    pub sentences: Vec<Sentence>,
    pub n_sentences: usize,
    pub n_words: usize,
    pub n_chars: usize,
    pub n_syllables: usize,
}

impl AnalyzedDocument {
    pub fn words(&self) -> impl Iterator<Item = &Token> {
        self.sentences.iter().flat_map(Sentence::words)
    }
}

fn is_joiner(c: char) -> bool {
    matches!(c, '-' | '\u{2010}' | '\u{2011}' | '\'' | '\u{2019}')
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?' | '\u{2026}')
}

fn is_closer(c: char) -> bool {
    matches!(
        c,
        ')' | ']' | '}' | '"' | '\'' | '\u{2019}' | '\u{201D}' | '\u{00BB}'
    )
}

fn is_opener(c: char) -> bool {
    matches!(
        c,
        '(' | '[' | '{' | '"' | '\'' | '\u{2018}' | '\u{201C}' | '\u{00AB}'
    )
}

/// A token plus whether whitespace (or end of text) follows it.
struct Spanned {
    token: Token,
    gap_after: bool,
}

fn scan(text: &str) -> Vec<Spanned> {
    let chars: Vec<char> = text.nfc().collect();
    let mut out: Vec<Spanned> = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            if let Some(last) = out.last_mut() {
                last.gap_after = true;
            }
            i += 1;
            continue;
        }
        let start = i;
        if c.is_alphanumeric() {
            i += 1;
            while i < chars.len() {
                let next = chars[i];
                if next.is_alphanumeric() {
                    i += 1;
                    continue;
                }
                let after = chars.get(i + 1).copied();
                let joins_word = is_joiner(next) && after.is_some_and(char::is_alphanumeric);
                let joins_number = matches!(next, '.' | ',')
                    && chars[i - 1].is_ascii_digit()
                    && after.is_some_and(|a| a.is_ascii_digit());
                if joins_word || joins_number {
                    i += 2;
                } else {
                    break;
                }
            }
        } else {
            i += 1;
        }
        out.push(Spanned {
            token: Token::new(chars[start..i].iter().collect()),
            gap_after: i >= chars.len(),
        });
    }
    out
}

pub fn tokenize(text: &str) -> Vec<Token> {
    scan(text).into_iter().map(|s| s.token).collect()
}

/// Abbreviations whose trailing period never ends a sentence.
///
/// Entries are stored without the final period (`Dr`, `e.g`, `al`) and are
/// matched case-sensitively.
#[derive(Debug, Clone)]
pub struct AbbreviationList {
    entries: HashSet<String>,
    pub version: String,
}

impl AbbreviationList {
    pub fn parse(content: &str, default_version: &str) -> Self {
        let mut version = default_version.to_string();
        let mut entries = HashSet::new();
        for line in content.lines() {
            let line = line.trim();
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(v) = comment.trim().strip_prefix("version:") {
                    version = v.trim().to_string();
                }
                continue;
            }
            let entry = line.trim_end_matches('.');
            if !entry.is_empty() {
                entries.insert(entry.to_string());
            }
        }
        AbbreviationList { entries, version }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingResource {
                path: path.to_path_buf(),
            },
            _ => Error::Io(e),
        })?;
        let content = String::from_utf8(bytes).map_err(|e| Error::MalformedResource {
            source_id: path.display().to_string(),
            line: 0,
            reason: e.to_string(),
        })?;
        Ok(Self::parse(&content, &path.display().to_string()))
    }

    /// The list shipped with this crate.
    pub fn bundled() -> &'static AbbreviationList {
        static LIST: OnceLock<AbbreviationList> = OnceLock::new();
        LIST.get_or_init(|| AbbreviationList::parse(BUNDLED_ABBREVIATIONS, "bundled"))
    }

    pub fn contains(&self, entry: &str) -> bool {
        self.entries.contains(entry)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// True when the period at `dot` belongs to an abbreviation or an initial.
fn is_abbreviation_period(tokens: &[Spanned], dot: usize, abbrevs: &AbbreviationList) -> bool {
    if dot == 0 || tokens[dot - 1].gap_after || !tokens[dot - 1].token.is_word {
        return false;
    }
    let last = &tokens[dot - 1].token.surface;
    if abbrevs.contains(last) {
        return true;
    }
    // Multi-part forms such as "e.g" or "U.S" span several adjacent tokens.
    let mut start = dot - 1;
    while start > 0 && !tokens[start - 1].gap_after {
        start -= 1;
    }
    if start < dot - 1 {
        let joined: String = tokens[start..dot]
            .iter()
            .map(|s| s.token.surface.as_str())
            .collect();
        if abbrevs.contains(&joined) {
            return true;
        }
    }
    // Single capital initial, as in "J. Smith".
    let mut chars = last.chars();
    matches!((chars.next(), chars.next()), (Some(c), None) if c.is_uppercase()) && start == dot - 1
}

fn starts_sentence(token: &Token) -> bool {
    token
        .surface
        .chars()
        .next()
        .is_some_and(|c| c.is_uppercase() || is_opener(c))
}

pub fn segment_sentences(text: &str) -> Vec<Sentence> {
    segment_sentences_with(text, AbbreviationList::bundled())
}

pub fn segment_sentences_with(text: &str, abbrevs: &AbbreviationList) -> Vec<Sentence> {
    let spans = scan(text);
    let mut groups: Vec<Vec<Token>> = Vec::new();
    let mut current: Vec<Token> = Vec::new();
    let mut i = 0;
    while i < spans.len() {
        let first = spans[i].token.surface.chars().next();
        if !first.is_some_and(is_terminator) || spans[i].token.is_word {
            current.push(spans[i].token.clone());
            i += 1;
            continue;
        }
        // Absorb a run like `?!` or `.)` glued to the terminator.
        let mut end = i;
        while end + 1 < spans.len()
            && !spans[end].gap_after
            && spans[end + 1]
                .token
                .surface
                .chars()
                .next()
                .is_some_and(|c| is_terminator(c) || is_closer(c))
        {
            end += 1;
        }
        let boundary = spans[end].gap_after
            && spans
                .get(end + 1)
                .is_none_or(|next| starts_sentence(&next.token))
            && !(first == Some('.') && is_abbreviation_period(&spans, i, abbrevs));
        current.extend(spans[i..=end].iter().map(|s| s.token.clone()));
        if boundary {
            groups.push(std::mem::take(&mut current));
        }
        i = end + 1;
    }
    if !current.is_empty() {
        groups.push(current);
    }

    // Word-less fragments (stray punctuation) join a neighbouring sentence.
    let mut sentences: Vec<Sentence> = Vec::new();
    let mut pending: Vec<Token> = Vec::new();
    for group in groups {
        if group.iter().any(|t| t.is_word) {
            let mut tokens = std::mem::take(&mut pending);
            tokens.extend(group);
            sentences.push(Sentence { tokens });
        } else if let Some(last) = sentences.last_mut() {
            last.tokens.extend(group);
        } else {
            pending.extend(group);
        }
    }
    sentences
}

fn is_vowel(c: char) -> bool {
    matches!(
        c,
        'a' | 'e'
            | 'i'
            | 'o'
            | 'u'
            | 'y'
            | 'à'
            | 'á'
            | 'â'
            | 'ä'
            | 'è'
            | 'é'
            | 'ê'
            | 'ë'
            | 'ì'
            | 'í'
            | 'î'
            | 'ï'
            | 'ò'
            | 'ó'
            | 'ô'
            | 'ö'
            | 'ù'
            | 'ú'
            | 'û'
            | 'ü'
            | 'ý'
            | 'ÿ'
    )
}

fn syllables_in_part(part: &[char]) -> usize {
    let mut groups: usize = 0;
    let mut prev_vowel = false;
    for &c in part {
        let v = is_vowel(c);
        if v && !prev_vowel {
            groups += 1;
        }
        prev_vowel = v;
    }
    // Silent final e: "make", "the". Kept for consonant+"le" ("table") and
    // when the e extends a vowel group ("agree").
    let n = part.len();
    if n >= 2 && part[n - 1] == 'e' && !is_vowel(part[n - 2]) {
        let consonant_le = n >= 3 && part[n - 2] == 'l' && !is_vowel(part[n - 3]);
        if !consonant_le {
            groups = groups.saturating_sub(1);
        }
    }
    groups.max(1)
}

/// Vowel-group syllable estimate, at least 1.
///
/// Hyphenated compounds are counted part by part; apostrophes are dropped.
pub fn count_syllables(word: &str) -> usize {
    let lower: Vec<char> = word
        .chars()
        .flat_map(char::to_lowercase)
        .filter(|c| !matches!(c, '\'' | '\u{2019}'))
        .collect();
    let total: usize = lower
        .split(|&c| matches!(c, '-' | '\u{2010}' | '\u{2011}'))
        .filter(|part| part.iter().any(|c| c.is_alphanumeric()))
        .map(syllables_in_part)
        .sum();
    total.max(1)
}

pub fn analyze(text: &str) -> Result<AnalyzedDocument> {
    analyze_with(text, AbbreviationList::bundled())
}

pub fn analyze_with(text: &str, abbrevs: &AbbreviationList) -> Result<AnalyzedDocument> {
    let sentences = segment_sentences_with(text, abbrevs);
    let (mut n_words, mut n_chars, mut n_syllables) = (0, 0, 0);
    for word in sentences.iter().flat_map(Sentence::words) {
        n_words += 1;
        n_chars += word.char_count;
        n_syllables += count_syllables(&word.surface);
    }
    if n_words == 0 {
        return Err(Error::DegenerateDocument("text contains no words"));
    }
    Ok(AnalyzedDocument {
        n_sentences: sentences.len(),
        sentences,
        n_words,
        n_chars,
        n_syllables,
    })
}
