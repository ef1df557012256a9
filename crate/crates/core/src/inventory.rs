//! Phoneme attribute inventory and IPA transcription parsing.
//!
//! The attribute table assigns every phoneme its position on the IPA chart:
//! voicing, manner and place for consonants; height, backness and rounding
//! for vowels. Non-phoneme characters (stress marks, space, punctuation,
//! digits) are carried as plain tokens so that homophonic texts still map to
//! distinct sequences.

use std::collections::HashMap;
use std::fmt;
use std::io::BufRead;

use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

/// Highest vowel height level (open).
pub const HEIGHT_LEVELS: u8 = 6;
/// Highest vowel backness level (back).
pub const BACKNESS_LEVELS: u8 = 4;

pub const PRIMARY_STRESS: &str = "ˈ";
pub const SECONDARY_STRESS: &str = "ˌ";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Manner {
    Nasal,
    Plosive,
    Fricative,
    Approximant,
    Trill,
    TapFlap,
    LateralFricative,
    LateralApproximant,
}

impl Manner {
    pub const ALL: [Manner; 8] = [
        Manner::Nasal,
        Manner::Plosive,
        Manner::Fricative,
        Manner::Approximant,
        Manner::Trill,
        Manner::TapFlap,
        Manner::LateralFricative,
        Manner::LateralApproximant,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Manner::Nasal => "nasal",
            Manner::Plosive => "plosive",
            Manner::Fricative => "fricative",
            Manner::Approximant => "approximant",
            Manner::Trill => "trill",
            Manner::TapFlap => "tap_flap",
            Manner::LateralFricative => "lateral_fricative",
            Manner::LateralApproximant => "lateral_approximant",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        let s = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        Manner::ALL.into_iter().find(|m| m.name() == s || (s == "tap" && *m == Manner::TapFlap))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Place {
    Bilabial,
    Labiodental,
    Dental,
    Alveolar,
    Postalveolar,
    Retroflex,
    Palatal,
    Velar,
    Uvular,
    Pharyngeal,
    Glottal,
}

impl Place {
    pub const ALL: [Place; 11] = [
        Place::Bilabial,
        Place::Labiodental,
        Place::Dental,
        Place::Alveolar,
        Place::Postalveolar,
        Place::Retroflex,
        Place::Palatal,
        Place::Velar,
        Place::Uvular,
        Place::Pharyngeal,
        Place::Glottal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Place::Bilabial => "bilabial",
            Place::Labiodental => "labiodental",
            Place::Dental => "dental",
            Place::Alveolar => "alveolar",
            Place::Postalveolar => "postalveolar",
            Place::Retroflex => "retroflex",
            Place::Palatal => "palatal",
            Place::Velar => "velar",
            Place::Uvular => "uvular",
            Place::Pharyngeal => "pharyngeal",
            Place::Glottal => "glottal",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        let s = s.trim().to_ascii_lowercase();
        Place::ALL.into_iter().find(|p| p.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Consonant {
    pub voiced: bool,
    pub manners: Vec<Manner>,
    pub places: Vec<Place>,
}

impl Consonant {
    pub fn shares_manner(&self, other: &Consonant) -> bool {
        self.manners.iter().any(|m| other.manners.contains(m))
    }

    pub fn shares_place(&self, other: &Consonant) -> bool {
        self.places.iter().any(|p| other.places.contains(p))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Vowel {
    /// 0 = close .. 6 = open.
    pub height_level: u8,
    /// 0 = front .. 4 = back.
    pub backness_level: u8,
    pub rounded: bool,
}

impl Vowel {
    pub fn height(&self) -> f64 {
        f64::from(self.height_level) / f64::from(HEIGHT_LEVELS)
    }

    pub fn backness(&self) -> f64 {
        f64::from(self.backness_level) / f64::from(BACKNESS_LEVELS)
    }

    pub fn roundedness(&self) -> f64 {
        if self.rounded {
            1.0
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PhonemeClass {
    Consonant(Consonant),
    Vowel(Vowel),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Phoneme {
    pub symbol: String,
    pub class: PhonemeClass,
}

impl Phoneme {
    pub fn consonant(&self) -> Option<&Consonant> {
        match &self.class {
            PhonemeClass::Consonant(c) => Some(c),
            PhonemeClass::Vowel(_) => None,
        }
    }

    pub fn vowel(&self) -> Option<&Vowel> {
        match &self.class {
            PhonemeClass::Vowel(v) => Some(v),
            PhonemeClass::Consonant(_) => None,
        }
    }

    pub fn is_consonant(&self) -> bool {
        self.consonant().is_some()
    }

    pub fn is_vowel(&self) -> bool {
        self.vowel().is_some()
    }
}

/// Index of a symbol in an [`AttributeTable`]: phonemes first, in table
/// order, then the non-phoneme tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TokenId(pub u16);

impl TokenId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind<'a> {
    Phoneme(&'a Phoneme),
    Other(&'a str),
}

const DEFAULT_TABLE: &str = include_str!("default_attributes.tsv");

/// The phoneme inventory plus the non-phoneme token list.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeTable {
    phonemes: Vec<Phoneme>,
    other_tokens: Vec<String>,
    lookup: HashMap<String, TokenId>,
    max_symbol_chars: usize,
}

impl AttributeTable {
    /// The builtin English inventory.
    pub fn english() -> Self {
        Self::from_tsv(DEFAULT_TABLE.as_bytes()).expect("builtin attribute table is valid")
    }

    /// Load a table from the TSV schema: `symbol, class, voicing, manners,
    /// places, height_level, backness_level, rounded`. `#` starts a comment
    /// line; `<space>` names the space token.
    pub fn from_tsv<R: BufRead>(reader: R) -> Result<Self> {
        let mut phonemes = Vec::new();
        let mut other_tokens = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line?;
            let line = line.trim_end_matches(['\r', '\n']);
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            let err = |message: String| Error::Table { line: line_no, message };
            if cols.len() < 2 {
                return Err(err(format!("expected 8 columns, found {}", cols.len())));
            }
            let col = |k: usize| cols.get(k).map(|c| c.trim()).unwrap_or("");
            let symbol = match cols[0] {
                "<space>" => " ".to_string(),
                s if s.chars().all(|c| c == ' ') && !s.is_empty() => " ".to_string(),
                s => s.trim().nfc().collect(),
            };
            if symbol.is_empty() {
                return Err(err("empty symbol".into()));
            }
            let is_blank = |s: &str| s.is_empty() || s == "-";
            match col(1).to_ascii_lowercase().as_str() {
                "consonant" => {
                    let voiced = match col(2) {
                        "voiced" => true,
                        "voiceless" => false,
                        other => return Err(err(format!("bad voicing {other:?}"))),
                    };
                    let manners =
                        parse_list(col(3), Manner::from_name).map_err(|m| err(format!("unknown manner {m:?}")))?;
                    let places =
                        parse_list(col(4), Place::from_name).map_err(|p| err(format!("unknown place {p:?}")))?;
                    if manners.is_empty() {
                        return Err(err("consonant without manner".into()));
                    }
                    if places.is_empty() || places.len() > 2 {
                        return Err(err(format!("consonant needs 1 or 2 places, got {}", places.len())));
                    }
                    if !(is_blank(col(5)) && is_blank(col(6)) && is_blank(col(7))) {
                        return Err(err("consonant row with vowel fields".into()));
                    }
                    phonemes.push(Phoneme {
                        symbol,
                        class: PhonemeClass::Consonant(Consonant { voiced, manners, places }),
                    });
                }
                "vowel" => {
                    if !(is_blank(col(2)) && is_blank(col(3)) && is_blank(col(4))) {
                        return Err(err("vowel row with consonant fields".into()));
                    }
                    let height_level = parse_level(col(5), HEIGHT_LEVELS)
                        .ok_or_else(|| err(format!("height_level {:?} outside 0..={HEIGHT_LEVELS}", col(5))))?;
                    let backness_level = parse_level(col(6), BACKNESS_LEVELS)
                        .ok_or_else(|| err(format!("backness_level {:?} outside 0..={BACKNESS_LEVELS}", col(6))))?;
                    let rounded = match col(7) {
                        "yes" => true,
                        "no" => false,
                        other => return Err(err(format!("bad rounded value {other:?}"))),
                    };
                    phonemes.push(Phoneme {
                        symbol,
                        class: PhonemeClass::Vowel(Vowel { height_level, backness_level, rounded }),
                    });
                }
                "other" => other_tokens.push(symbol),
                other => return Err(err(format!("unknown class {other:?}"))),
            }
        }
        Self::new(phonemes, other_tokens)
    }

    pub fn new(phonemes: Vec<Phoneme>, other_tokens: Vec<String>) -> Result<Self> {
        let mut lookup = HashMap::new();
        let symbols = phonemes.iter().map(|p| p.symbol.as_str()).chain(other_tokens.iter().map(String::as_str));
        for (i, s) in symbols.enumerate() {
            let id = u16::try_from(i).map_err(|_| Error::Precondition("too many symbols".into()))?;
            if lookup.insert(s.to_string(), TokenId(id)).is_some() {
                return Err(Error::DuplicateSymbol(s.to_string()));
            }
        }
        let max_symbol_chars = lookup.keys().map(|s| s.chars().count()).max().unwrap_or(1);
        Ok(Self { phonemes, other_tokens, lookup, max_symbol_chars })
    }

    pub fn phonemes(&self) -> &[Phoneme] {
        &self.phonemes
    }

    pub fn other_tokens(&self) -> &[String] {
        &self.other_tokens
    }

    /// Total number of symbols (phonemes plus other tokens).
    pub fn len(&self) -> usize {
        self.phonemes.len() + self.other_tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn consonants(&self) -> impl Iterator<Item = &Phoneme> {
        self.phonemes.iter().filter(|p| p.is_consonant())
    }

    pub fn vowels(&self) -> impl Iterator<Item = &Phoneme> {
        self.phonemes.iter().filter(|p| p.is_vowel())
    }

    pub fn id(&self, symbol: &str) -> Option<TokenId> {
        self.lookup.get(symbol).copied()
    }

    pub fn phoneme(&self, symbol: &str) -> Option<&Phoneme> {
        self.id(symbol).and_then(|id| self.phonemes.get(id.index()))
    }

    pub fn kind(&self, id: TokenId) -> TokenKind<'_> {
        match self.phonemes.get(id.index()) {
            Some(p) => TokenKind::Phoneme(p),
            None => TokenKind::Other(&self.other_tokens[id.index() - self.phonemes.len()]),
        }
    }

    pub fn phoneme_of(&self, id: TokenId) -> Option<&Phoneme> {
        self.phonemes.get(id.index())
    }

    pub fn symbol(&self, id: TokenId) -> &str {
        match self.kind(id) {
            TokenKind::Phoneme(p) => &p.symbol,
            TokenKind::Other(s) => s,
        }
    }

    pub fn is_consonant(&self, id: TokenId) -> bool {
        self.phoneme_of(id).is_some_and(Phoneme::is_consonant)
    }

    pub fn is_stress(&self, id: TokenId) -> bool {
        matches!(self.symbol(id), PRIMARY_STRESS | SECONDARY_STRESS)
    }

    /// Tokenize an IPA string. Latin letters are case-folded, affricate and
    /// rhotic spellings are normalized, and matching is greedy longest-first.
    pub fn parse(&self, text: &str) -> Result<PronunciationSequence> {
        let chars: Vec<char> = normalize_ipa(text).chars().collect();
        let mut tokens = Vec::with_capacity(chars.len());
        let mut pos = 0;
        let mut buf = String::new();
        'outer: while pos < chars.len() {
            let longest = self.max_symbol_chars.min(chars.len() - pos);
            for len in (1..=longest).rev() {
                buf.clear();
                buf.extend(&chars[pos..pos + len]);
                if let Some(&id) = self.lookup.get(buf.as_str()) {
                    tokens.push(id);
                    pos += len;
                    continue 'outer;
                }
            }
            return Err(Error::UnknownSymbol { position: pos, character: chars[pos] });
        }
        Ok(PronunciationSequence { tokens })
    }

    pub fn render(&self, seq: &PronunciationSequence) -> String {
        seq.tokens.iter().map(|&id| self.symbol(id)).collect()
    }

    /// Iterate symbols in id order.
    pub fn symbols(&self) -> impl Iterator<Item = &str> {
        self.phonemes.iter().map(|p| p.symbol.as_str()).chain(self.other_tokens.iter().map(String::as_str))
    }
}

impl Default for AttributeTable {
    fn default() -> Self {
        Self::english()
    }
}

fn parse_list<T>(cell: &str, f: impl Fn(&str) -> Option<T>) -> std::result::Result<Vec<T>, String> {
    if cell.is_empty() || cell == "-" {
        return Ok(Vec::new());
    }
    cell.split(',').map(|s| f(s).ok_or_else(|| s.trim().to_string())).collect()
}

fn parse_level(cell: &str, max: u8) -> Option<u8> {
    cell.parse::<u8>().ok().filter(|&v| v <= max)
}

/// Canonicalize an IPA string before tokenization.
pub fn normalize_ipa(text: &str) -> String {
    let composed: String =
        text.nfc().map(|c| if c.is_ascii_uppercase() { c.to_ascii_lowercase() } else { c }).collect();
    // Order matters: tie-bar forms first, then bare digraphs.
    const RULES: [(&str, &str); 12] = [
        ("t\u{361}ʃ", "ʧ"),
        ("d\u{361}ʒ", "ʤ"),
        ("t\u{35c}ʃ", "ʧ"),
        ("d\u{35c}ʒ", "ʤ"),
        ("tʃ", "ʧ"),
        ("dʒ", "ʤ"),
        ("ɝ", "əɹ"),
        ("ɚ", "əɹ"),
        ("ʌ", "ə"),
        ("ɜ", "ə"),
        ("r", "ɹ"),
        ("ɡ", "g"),
    ];
    let mut out = composed;
    for (from, to) in RULES {
        if out.contains(from) {
            out = out.replace(from, to);
        }
    }
    out
}

/// An ordered list of tokens drawn from one [`AttributeTable`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PronunciationSequence {
    pub tokens: Vec<TokenId>,
}

impl PronunciationSequence {
    pub fn new(tokens: Vec<TokenId>) -> Self {
        Self { tokens }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = TokenId> + '_ {
        self.tokens.iter().copied()
    }
}

impl fmt::Display for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}
