//! IPA attribute embedding: a token's embedding is `xᵀW`, the weighted sum
//! of the feature-matrix rows selected by its sparse attribute vector.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::inventory::{AttributeTable, Manner, Place, PronunciationSequence, TokenId, TokenKind};
use crate::tensor::Matrix;

/// Standard deviation of the Normal initializer for embedding tables.
pub const INIT_STD: f64 = 0.02;

const CONSONANT_FLAG: usize = 0;
const VOICING: usize = 1;
const MANNER_BASE: usize = 2;
const PLACE_BASE: usize = MANNER_BASE + Manner::ALL.len();
const VOWEL_FLAG: usize = PLACE_BASE + Place::ALL.len();
const HEIGHT: usize = VOWEL_FLAG + 1;
const BACKNESS: usize = VOWEL_FLAG + 2;
const ROUNDEDNESS: usize = VOWEL_FLAG + 3;
const OTHER_BASE: usize = VOWEL_FLAG + 4;

/// Ordered labels of the attribute dimensions for a given table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeIndex {
    labels: Vec<String>,
}

impl AttributeIndex {
    pub fn new(table: &AttributeTable) -> Self {
        let mut labels = vec!["Consonant".to_string(), "Voicing".to_string()];
        labels.extend(Manner::ALL.iter().map(|m| format!("Manner:{}", m.name())));
        labels.extend(Place::ALL.iter().map(|p| format!("Place:{}", p.name())));
        labels.extend(["Vowel", "Height", "Backness", "Roundedness"].map(String::from));
        labels.extend(table.other_tokens().iter().map(|s| other_label(s)));
        Self { labels }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

fn other_label(symbol: &str) -> String {
    match symbol {
        "ˈ" => "PrimaryStress".into(),
        "ˌ" => "SecondaryStress".into(),
        " " => "Char:Space".into(),
        "." => "Char:Period".into(),
        "," => "Char:Comma".into(),
        "!" => "Char:Exclamation".into(),
        "?" => "Char:Question".into(),
        "'" => "Char:Apostrophe".into(),
        "-" => "Char:Hyphen".into(),
        d if d.len() == 1 && d.as_bytes()[0].is_ascii_digit() => format!("Char:Digit{d}"),
        s => format!("Char:{s}"),
    }
}

/// Number of attribute dimensions for `table`.
pub fn attribute_count(table: &AttributeTable) -> usize {
    OTHER_BASE + table.other_tokens().len()
}

/// Nonzero entries of a token's attribute vector, in index order.
pub fn sparse_attributes(table: &AttributeTable, id: TokenId) -> Vec<(usize, f64)> {
    match table.kind(id) {
        TokenKind::Phoneme(p) => {
            if let Some(c) = p.consonant() {
                let mut out = vec![(CONSONANT_FLAG, 1.0)];
                if c.voiced {
                    out.push((VOICING, 1.0));
                }
                let mut dims: Vec<usize> = c
                    .manners
                    .iter()
                    .map(|m| MANNER_BASE + *m as usize)
                    .chain(c.places.iter().map(|p| PLACE_BASE + *p as usize))
                    .collect();
                dims.sort_unstable();
                dims.dedup();
                out.extend(dims.into_iter().map(|d| (d, 1.0)));
                out
            } else {
                let v = p.vowel().expect("phoneme is a consonant or a vowel");
                [(VOWEL_FLAG, 1.0), (HEIGHT, v.height()), (BACKNESS, v.backness()), (ROUNDEDNESS, v.roundedness())]
                    .into_iter()
                    .filter(|&(_, x)| x != 0.0)
                    .collect()
            }
        }
        TokenKind::Other(_) => vec![(OTHER_BASE + id.index() - table.phonemes().len(), 1.0)],
    }
}

/// Dense attribute vector of a symbol.
pub fn attribute_vector(table: &AttributeTable, symbol: &str) -> Result<Vec<f64>> {
    let id = table.id(symbol).ok_or_else(|| Error::UnknownToken(symbol.to_string()))?;
    Ok(dense_attributes(table, id))
}

pub fn dense_attributes(table: &AttributeTable, id: TokenId) -> Vec<f64> {
    let mut x = vec![0.0; attribute_count(table)];
    for (i, v) in sparse_attributes(table, id) {
        x[i] = v;
    }
    x
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightMode {
    Frozen,
    Trainable,
}

/// The `N × D` feature matrix `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub weights: Matrix,
    pub mode: WeightMode,
}

impl FeatureMatrix {
    pub fn new(table: &AttributeTable, dim: usize, mode: WeightMode, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self { weights: Matrix::normal(attribute_count(table), dim, INIT_STD, &mut rng), mode }
    }

    pub fn from_matrix(weights: Matrix, mode: WeightMode) -> Self {
        Self { weights, mode }
    }

    pub fn dim(&self) -> usize {
        self.weights.cols
    }

    /// `xᵀW` for a single token.
    pub fn embed(&self, table: &AttributeTable, id: TokenId) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for (i, x) in sparse_attributes(table, id) {
            for (o, &w) in out.iter_mut().zip(self.weights.row(i)) {
                *o += x * w;
            }
        }
        out
    }
}

/// One independent trainable row per symbol: the ordinary lookup-table
/// embedding the attribute layer is compared against.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineTable {
    pub weights: Matrix,
}

impl BaselineTable {
    pub fn new(table: &AttributeTable, dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self { weights: Matrix::normal(table.len(), dim, INIT_STD, &mut rng) }
    }

    pub fn dim(&self) -> usize {
        self.weights.cols
    }

    pub fn embed(&self, id: TokenId) -> Vec<f64> {
        self.weights.row(id.index()).to_vec()
    }
}

/// Either kind of token embedding layer.
#[derive(Debug, Clone, PartialEq)]
pub enum TokenLayer {
    Attribute(FeatureMatrix),
    Baseline(BaselineTable),
}

impl TokenLayer {
    pub fn dim(&self) -> usize {
        match self {
            TokenLayer::Attribute(w) => w.dim(),
            TokenLayer::Baseline(b) => b.dim(),
        }
    }

    pub fn weights(&self) -> &Matrix {
        match self {
            TokenLayer::Attribute(w) => &w.weights,
            TokenLayer::Baseline(b) => &b.weights,
        }
    }

    pub fn weights_mut(&mut self) -> &mut Matrix {
        match self {
            TokenLayer::Attribute(w) => &mut w.weights,
            TokenLayer::Baseline(b) => &mut b.weights,
        }
    }

    pub fn is_trainable(&self) -> bool {
        !matches!(self, TokenLayer::Attribute(FeatureMatrix { mode: WeightMode::Frozen, .. }))
    }

    pub fn embed_token(&self, table: &AttributeTable, id: TokenId) -> Result<Vec<f64>> {
        if id.index() >= table.len() {
            return Err(Error::UnknownToken(id.to_string()));
        }
        Ok(match self {
            TokenLayer::Attribute(w) => w.embed(table, id),
            TokenLayer::Baseline(b) => b.embed(id),
        })
    }

    pub fn embed_sequence(&self, table: &AttributeTable, seq: &PronunciationSequence) -> Result<Vec<Vec<f64>>> {
        seq.iter().map(|id| self.embed_token(table, id)).collect()
    }
}

/// Embed a symbol through the feature matrix.
pub fn embed_token(table: &AttributeTable, w: &FeatureMatrix, symbol: &str) -> Result<Vec<f64>> {
    let id = table.id(symbol).ok_or_else(|| Error::UnknownToken(symbol.to_string()))?;
    Ok(w.embed(table, id))
}
