//! Pronunciation dictionaries, word frequencies, and the sentence →
//! pronunciation corpus used for distillation.

use std::collections::HashMap;
use std::fmt;
use std::io::BufRead;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::inventory::{AttributeTable, PronunciationSequence};
use crate::par;

/// Word → transcription, first listed variant only.
#[derive(Debug, Clone, Default)]
pub struct PronunciationDictionary {
    entries: HashMap<String, PronunciationSequence>,
}

/// A dictionary line that could not be used.
#[derive(Debug, Clone, PartialEq)]
pub struct RejectedLine {
    pub line: usize,
    pub word: String,
    pub error: Error,
}

impl PronunciationDictionary {
    /// Read `word<TAB>ipa[, ipa2 ...]` lines. Lines whose first variant does
    /// not parse are returned as rejections rather than failing the load.
    pub fn load<R: BufRead>(reader: R, table: &AttributeTable) -> Result<(Self, Vec<RejectedLine>)> {
        let mut entries = HashMap::new();
        let mut rejected = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((word, ipa)) = line.split_once('\t') else {
                rejected.push(RejectedLine {
                    line: i + 1,
                    word: line.trim().to_string(),
                    error: Error::Parse { line: i + 1, message: "missing tab separator".into() },
                });
                continue;
            };
            let word = word.trim().to_lowercase();
            let first = ipa.split(',').next().unwrap_or("").trim();
            match table.parse(first) {
                Ok(seq) => {
                    entries.entry(word).or_insert(seq);
                }
                Err(error) => rejected.push(RejectedLine { line: i + 1, word, error }),
            }
        }
        Ok((Self { entries }, rejected))
    }

    pub fn insert(&mut self, word: &str, pron: PronunciationSequence) {
        self.entries.insert(word.to_lowercase(), pron);
    }

    pub fn get(&self, word: &str) -> Option<&PronunciationSequence> {
        self.entries.get(&word.to_lowercase())
    }

    pub fn contains(&self, word: &str) -> bool {
        self.get(word).is_some()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn pronunciations(&self) -> impl Iterator<Item = &PronunciationSequence> {
        self.entries.values()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConvertFailure {
    MissingWord(String),
    UnknownSymbol { position: usize, character: char },
}

impl fmt::Display for ConvertFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConvertFailure::MissingWord(w) => write!(f, "word {w:?} not in dictionary"),
            ConvertFailure::UnknownSymbol { position, character } => {
                write!(f, "character {character:?} at {position} has no token")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Segment<'a> {
    Word(&'a str),
    Other(char),
}

/// Split text into words (maximal runs of Latin letters and inner
/// apostrophes) and single non-letter characters.
pub fn segment(text: &str) -> Vec<Segment<'_>> {
    let is_word_char = |c: char| c.is_ascii_alphabetic() || c == '\'';
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(c) = rest.chars().next() {
        if is_word_char(c) {
            let end = rest.find(|c: char| !is_word_char(c)).unwrap_or(rest.len());
            let run = &rest[..end];
            let core = run.trim_matches('\'');
            if core.is_empty() {
                out.extend(run.chars().map(Segment::Other));
            } else {
                let lead = run.len() - run.trim_start_matches('\'').len();
                out.extend(std::iter::repeat_n(Segment::Other('\''), lead));
                out.push(Segment::Word(core));
                let trail = run.len() - lead - core.len();
                out.extend(std::iter::repeat_n(Segment::Other('\''), trail));
            }
            rest = &rest[end..];
        } else {
            out.push(Segment::Other(c));
            rest = &rest[c.len_utf8()..];
        }
    }
    out
}

/// Replace every word of `text` by its dictionary transcription, keeping
/// spaces and punctuation as tokens.
pub fn convert_sentence(
    text: &str,
    dict: &PronunciationDictionary,
    table: &AttributeTable,
) -> std::result::Result<PronunciationSequence, ConvertFailure> {
    let mut tokens = Vec::new();
    let mut position = 0;
    for seg in segment(text) {
        match seg {
            Segment::Word(w) => {
                let pron = dict.get(w).ok_or_else(|| ConvertFailure::MissingWord(w.to_lowercase()))?;
                tokens.extend(pron.iter());
                position += w.chars().count();
            }
            Segment::Other(c) => {
                let c = if c.is_whitespace() { ' ' } else { c };
                let mut buf = [0u8; 4];
                let seq = table
                    .parse(c.encode_utf8(&mut buf))
                    .map_err(|_| ConvertFailure::UnknownSymbol { position, character: c })?;
                tokens.extend(seq.iter());
                position += 1;
            }
        }
    }
    Ok(PronunciationSequence::new(tokens))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusPair {
    pub text: String,
    pub pronunciation: PronunciationSequence,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorpusReport {
    pub kept: usize,
    pub dropped: usize,
    pub single_words_added: usize,
    pub single_words_missing: usize,
    /// `(1-based line, failure)` for every dropped sentence.
    pub failures: Vec<(usize, ConvertFailure)>,
}

/// Convert every sentence, drop the ones that fail, then append one-word
/// sentences for each wordlist entry found in the dictionary.
pub fn build_corpus(
    sentences: &[String],
    dict: &PronunciationDictionary,
    table: &AttributeTable,
    single_words: Option<&[String]>,
) -> (Vec<CorpusPair>, CorpusReport) {
    let converted = par::map(sentences, |s| convert_sentence(s, dict, table));
    let mut pairs = Vec::with_capacity(sentences.len());
    let mut report = CorpusReport::default();
    for (i, (text, result)) in sentences.iter().zip(converted).enumerate() {
        match result {
            Ok(pronunciation) => pairs.push(CorpusPair { text: text.clone(), pronunciation }),
            Err(f) => report.failures.push((i + 1, f)),
        }
    }
    report.kept = pairs.len();
    report.dropped = report.failures.len();
    for word in single_words.unwrap_or_default() {
        let word = word.trim();
        if word.is_empty() {
            continue;
        }
        match convert_sentence(word, dict, table) {
            Ok(pronunciation) => {
                pairs.push(CorpusPair { text: word.to_string(), pronunciation });
                report.single_words_added += 1;
            }
            Err(_) => report.single_words_missing += 1,
        }
    }
    (pairs, report)
}

/// Seeded shuffle, then the first `val_size` pairs become the validation set.
pub fn split_validation<T: Clone>(pairs: &[T], val_size: usize, seed: u64) -> Result<(Vec<T>, Vec<T>)> {
    if val_size > pairs.len() {
        return Err(Error::Precondition(format!("validation size {val_size} exceeds corpus size {}", pairs.len())));
    }
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let val = order[..val_size].iter().map(|&i| pairs[i].clone()).collect();
    let train = order[val_size..].iter().map(|&i| pairs[i].clone()).collect();
    Ok((train, val))
}

/// Word → Zipf-scale frequency.
#[derive(Debug, Clone, Default)]
pub struct FrequencyTable {
    entries: HashMap<String, f64>,
}

impl FrequencyTable {
    pub fn load<R: BufRead>(reader: R) -> Result<Self> {
        let mut entries = HashMap::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| Error::Parse { line: i + 1, message };
            let (word, value) = line.split_once('\t').ok_or_else(|| err("expected word<TAB>zipf".into()))?;
            let zipf: f64 = value.trim().parse().map_err(|_| err(format!("bad zipf value {value:?}")))?;
            if !zipf.is_finite() || zipf < 0.0 {
                return Err(err(format!("zipf value {zipf} must be finite and non-negative")));
            }
            entries.insert(word.trim().to_lowercase(), zipf);
        }
        Ok(Self { entries })
    }

    pub fn insert(&mut self, word: &str, zipf: f64) {
        self.entries.insert(word.to_lowercase(), zipf);
    }

    pub fn zipf(&self, word: &str) -> f64 {
        self.entries.get(&word.to_lowercase()).copied().unwrap_or(0.0)
    }

    /// Minimum Zipf value over the words of a label; 0 for labels without words.
    pub fn label_zipf(&self, label: &str) -> f64 {
        segment(label)
            .into_iter()
            .filter_map(|s| match s {
                Segment::Word(w) => Some(self.zipf(w)),
                Segment::Other(_) => None,
            })
            .reduce(f64::min)
            .unwrap_or(0.0)
    }
}

/// Keep labels whose rarest word reaches `threshold` on the Zipf scale.
pub fn zipf_filter(labels: &[String], freq: &FrequencyTable, threshold: f64) -> Vec<String> {
    labels.iter().filter(|l| freq.label_zipf(l) >= threshold).cloned().collect()
}

/// Read a one-entry-per-line list, skipping blank lines.
pub fn read_lines<R: BufRead>(reader: R) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if !line.trim().is_empty() {
            out.push(line.to_string());
        }
    }
    Ok(out)
}

/// Read `text<TAB>ipa` corpus pairs.
pub fn read_pairs<R: BufRead>(reader: R, table: &AttributeTable) -> Result<Vec<CorpusPair>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let (text, ipa) = line
            .rsplit_once('\t')
            .ok_or_else(|| Error::Parse { line: i + 1, message: "expected text<TAB>ipa".into() })?;
        let pronunciation = table.parse(ipa).map_err(|e| Error::Parse { line: i + 1, message: e.to_string() })?;
        out.push(CorpusPair { text: text.to_string(), pronunciation });
    }
    Ok(out)
}

pub fn write_pairs<W: std::io::Write>(mut w: W, pairs: &[CorpusPair], table: &AttributeTable) -> Result<()> {
    for p in pairs {
        writeln!(w, "{}\t{}", p.text, table.render(&p.pronunciation))?;
    }
    Ok(())
}
