//! Nonword generation by substituting a word's initial consonant.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::inventory::{AttributeTable, Phoneme, PronunciationSequence, TokenId};
use crate::lexicon::{convert_sentence, PronunciationDictionary};

/// Candidate consonants and their spellings. /ð/ is excluded; /k/ has two
/// spellings, tried in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubstitutionTable {
    entries: Vec<(String, Vec<String>)>,
}

impl Default for SubstitutionTable {
    fn default() -> Self {
        let raw: [(&str, &[&str]); 21] = [
            ("s", &["s"]),
            ("n", &["n"]),
            ("f", &["f"]),
            ("l", &["l"]),
            ("z", &["z"]),
            ("b", &["b"]),
            ("ɹ", &["r"]),
            ("p", &["p"]),
            ("g", &["g"]),
            ("k", &["k", "c"]),
            ("d", &["d"]),
            ("m", &["m"]),
            ("θ", &["th"]),
            ("t", &["t"]),
            ("ʤ", &["j"]),
            ("j", &["y"]),
            ("h", &["h"]),
            ("v", &["v"]),
            ("ʃ", &["sh"]),
            ("ʧ", &["ch"]),
            ("w", &["w"]),
        ];
        Self { entries: raw.iter().map(|(c, s)| (c.to_string(), s.iter().map(|x| x.to_string()).collect())).collect() }
    }
}

impl SubstitutionTable {
    pub fn entries(&self) -> &[(String, Vec<String>)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Longest listed spelling that prefixes `label`, ignoring case.
    pub fn leading_grapheme(&self, label: &str) -> Option<&str> {
        let lower = label.to_lowercase();
        self.entries
            .iter()
            .flat_map(|(_, spellings)| spellings.iter())
            .filter(|s| lower.starts_with(s.as_str()))
            .max_by_key(|s| s.len())
            .map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Nonword {
    pub pronunciation: PronunciationSequence,
    pub spelling: String,
    pub source_label: String,
    pub source_consonant: TokenId,
    pub new_consonant: TokenId,
    pub shared_attribute_count: u8,
}

/// Position of the first phoneme, skipping leading stress marks.
fn first_phoneme(seq: &PronunciationSequence, table: &AttributeTable) -> Option<usize> {
    seq.tokens.iter().position(|&id| !table.is_stress(id))
}

/// True when the pronunciation opens with one consonant followed by a
/// non-consonant (leading stress marks are skipped).
pub fn starts_with_sole_consonant(seq: &PronunciationSequence, table: &AttributeTable) -> Result<bool> {
    if seq.is_empty() {
        return Err(Error::Precondition("empty pronunciation".into()));
    }
    let Some(i) = first_phoneme(seq, table) else {
        return Ok(false);
    };
    if !table.is_consonant(seq.tokens[i]) {
        return Ok(false);
    }
    let next = seq.tokens[i + 1..].iter().find(|&&id| !table.is_stress(id));
    Ok(matches!(next, Some(&id) if !table.is_consonant(id)))
}

/// Number of attribute groups (voicing, place, manner) two consonants share.
pub fn shared_attributes(table: &AttributeTable, a: &str, b: &str) -> Result<u8> {
    let get = |s: &str| -> Result<&Phoneme> {
        let p = table.phoneme(s).ok_or_else(|| Error::UnknownToken(s.to_string()))?;
        if p.is_consonant() {
            Ok(p)
        } else {
            Err(Error::Precondition(format!("/{s}/ is not a consonant")))
        }
    };
    Ok(shared_between(get(a)?, get(b)?))
}

fn shared_between(a: &Phoneme, b: &Phoneme) -> u8 {
    let (a, b) = (a.consonant().expect("consonant"), b.consonant().expect("consonant"));
    u8::from(a.voiced == b.voiced) + u8::from(a.shares_place(b)) + u8::from(a.shares_manner(b))
}

/// Generate every initial-consonant substitution of `label` whose spelling
/// is not a known word and whose pronunciation is not a known transcription.
pub fn generate_nonwords(
    label: &str,
    dict: &PronunciationDictionary,
    table: &AttributeTable,
    substitutions: &SubstitutionTable,
    vocab: &HashSet<String>,
    known_prons: &HashSet<PronunciationSequence>,
) -> Result<Vec<Nonword>> {
    let source =
        convert_sentence(label, dict, table).map_err(|f| Error::Precondition(format!("label {label:?}: {f}")))?;
    if !starts_with_sole_consonant(&source, table)? {
        return Err(Error::Precondition(format!("label {label:?} does not start with a sole consonant")));
    }
    let pos = first_phoneme(&source, table).expect("checked above");
    let source_id = source.tokens[pos];
    let source_phoneme = table.phoneme_of(source_id).expect("consonant");
    let stem = match substitutions.leading_grapheme(label) {
        Some(g) => &label[g.len()..],
        None => {
            let first = label.chars().next().map_or(0, char::len_utf8);
            &label[first..]
        }
    };
    let is_word = |spelling: &str| {
        let lower = spelling.to_lowercase();
        let first = lower.split_whitespace().next().unwrap_or("");
        vocab.contains(&lower) || vocab.contains(first)
    };

    let mut out = Vec::new();
    for (symbol, spellings) in substitutions.entries() {
        let Some(new_id) = table.id(symbol) else { continue };
        if new_id == source_id {
            continue;
        }
        let mut pronunciation = source.clone();
        pronunciation.tokens[pos] = new_id;
        if known_prons.contains(&pronunciation) {
            continue;
        }
        let Some(spelling) = spellings.iter().map(|s| format!("{s}{stem}")).find(|s| !is_word(s)) else {
            continue;
        };
        let new_phoneme = table.phoneme_of(new_id).expect("substitution symbols are phonemes");
        out.push(Nonword {
            pronunciation,
            spelling,
            source_label: label.to_string(),
            source_consonant: source_id,
            new_consonant: new_id,
            shared_attribute_count: shared_between(source_phoneme, new_phoneme),
        });
    }
    Ok(out)
}

/// Write `spelling<TAB>ipa<TAB>source_label<TAB>shared_count` rows.
pub fn write_nonwords<W: std::io::Write>(mut w: W, nonwords: &[Nonword], table: &AttributeTable) -> Result<()> {
    for n in nonwords {
        writeln!(
            w,
            "{}\t{}\t{}\t{}",
            n.spelling,
            table.render(&n.pronunciation),
            n.source_label,
            n.shared_attribute_count
        )?;
    }
    Ok(())
}

/// Read rows written by [`write_nonwords`]. Source and substituted
/// consonants are recovered from the label's dictionary pronunciation.
pub fn read_nonwords<R: std::io::BufRead>(
    reader: R,
    table: &AttributeTable,
    dict: &PronunciationDictionary,
) -> Result<Vec<Nonword>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse { line: i + 1, message };
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(err(format!("expected 4 columns, found {}", cols.len())));
        }
        let pronunciation = table.parse(cols[1]).map_err(|e| err(e.to_string()))?;
        let shared_attribute_count: u8 = cols[3].trim().parse().map_err(|_| err("bad shared count".into()))?;
        let source = convert_sentence(cols[2], dict, table).map_err(|f| err(f.to_string()))?;
        let pos = first_phoneme(&source, table).ok_or_else(|| err("empty source pronunciation".into()))?;
        let new_consonant = *pronunciation.tokens.get(pos).ok_or_else(|| err("pronunciation too short".into()))?;
        out.push(Nonword {
            pronunciation,
            spelling: cols[0].to_string(),
            source_label: cols[2].to_string(),
            source_consonant: source.tokens[pos],
            new_consonant,
            shared_attribute_count,
        });
    }
    Ok(out)
}
