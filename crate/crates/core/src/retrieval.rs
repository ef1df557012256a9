//! Prompted retrieval evaluations: zero-shot classification from
//! pronunciation, nonword-to-image and nonword-to-text retrieval, embedding
//! fusion and correlation with human similarity judgements.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::inventory::{AttributeTable, PronunciationSequence};
use crate::lexicon::{convert_sentence, ConvertFailure, PronunciationDictionary};
use crate::metrics::{spearman, Spearman};
use crate::model::StudentModel;
use crate::nonword::Nonword;
use crate::par;
use crate::teacher::TeacherTable;
use crate::tensor::cosine;

/// Pronunciation of "a photo of ", placed before every class label.
pub const PROMPT_PREFIX: &str = "ə ˈfoʊˌtoʊ əv ";

pub fn prompt_prefix(table: &AttributeTable) -> Result<PronunciationSequence> {
    table.parse(PROMPT_PREFIX)
}

/// The prompt prefix followed by `label`.
pub fn prompt(table: &AttributeTable, label: &PronunciationSequence) -> Result<PronunciationSequence> {
    let mut seq = prompt_prefix(table)?;
    seq.tokens.extend(label.iter());
    Ok(seq)
}

/// Anything that maps a pronunciation to a vector.
pub trait Encoder: Sync {
    fn dim(&self) -> usize;
    fn encode(&self, seq: &PronunciationSequence) -> Result<Vec<f64>>;
}

impl Encoder for StudentModel {
    fn dim(&self) -> usize {
        self.config().teacher_dim
    }

    fn encode(&self, seq: &PronunciationSequence) -> Result<Vec<f64>> {
        StudentModel::encode(self, seq)
    }
}

/// Fixed table of precomputed vectors.
#[derive(Debug, Clone, Default)]
pub struct LookupEncoder {
    dim: usize,
    vectors: HashMap<PronunciationSequence, Vec<f64>>,
}

impl LookupEncoder {
    pub fn new(dim: usize) -> Self {
        Self { dim, vectors: HashMap::new() }
    }

    pub fn insert(&mut self, seq: PronunciationSequence, v: Vec<f64>) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, actual: v.len() });
        }
        self.vectors.insert(seq, v);
        Ok(())
    }
}

impl Encoder for LookupEncoder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn encode(&self, seq: &PronunciationSequence) -> Result<Vec<f64>> {
        self.vectors
            .get(seq)
            .cloned()
            .ok_or_else(|| Error::UnknownToken(format!("no vector for sequence {:?}", seq.tokens)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedClass {
    pub label: String,
    pub prompt_embedding: Vec<f64>,
    pub image_embeddings: Vec<Vec<f64>>,
}

impl EmbeddedClass {
    pub fn new(label: impl Into<String>, prompt_embedding: Vec<f64>) -> Self {
        Self { label: label.into(), prompt_embedding, image_embeddings: Vec::new() }
    }
}

/// Build classes from prompt embeddings and an image table keyed
/// `label/index`. Image records are attached in file order; records whose
/// label is not among `labels` are ignored.
pub fn embedded_classes(
    labels: &[String],
    prompts: &[Vec<f64>],
    images: Option<&TeacherTable>,
) -> Result<Vec<EmbeddedClass>> {
    if labels.len() != prompts.len() {
        return Err(Error::DimensionMismatch { expected: labels.len(), actual: prompts.len() });
    }
    let mut classes: Vec<EmbeddedClass> =
        labels.iter().zip(prompts).map(|(l, p)| EmbeddedClass::new(l.clone(), p.clone())).collect();
    if let Some(images) = images {
        let index: HashMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
        for (key, v) in images.records() {
            let Some((label, _)) = key.rsplit_once('/') else {
                return Err(Error::Teacher(format!("image key {key:?} is not label/index")));
            };
            if let Some(&i) = index.get(label) {
                classes[i].image_embeddings.push(v.iter().map(|&x| f64::from(x)).collect());
            }
        }
    }
    Ok(classes)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub class: usize,
    pub score: f64,
    /// Candidates that scored `-inf` because a vector had zero norm.
    pub zero_norm: Vec<usize>,
}

fn score(a: &[f64], b: &[f64]) -> f64 {
    cosine(a, b).unwrap_or(f64::NEG_INFINITY)
}

/// Index of the maximum over `scores`; ties go to the earliest.
fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Class whose prompt embedding is most cosine-similar to `query`.
pub fn classify(query: &[f64], classes: &[EmbeddedClass]) -> Result<Classification> {
    if classes.is_empty() {
        return Err(Error::Precondition("classify needs at least one class".into()));
    }
    let mut scores = Vec::with_capacity(classes.len());
    let mut zero_norm = Vec::new();
    for (i, c) in classes.iter().enumerate() {
        if c.prompt_embedding.len() != query.len() {
            return Err(Error::DimensionMismatch { expected: query.len(), actual: c.prompt_embedding.len() });
        }
        let s = score(query, &c.prompt_embedding);
        if s == f64::NEG_INFINITY {
            zero_norm.push(i);
        }
        scores.push(s);
    }
    let class = argmax(&scores);
    Ok(Classification { class, score: scores[class], zero_norm })
}

/// Elementwise mean of two unnormalized vectors.
pub fn fuse(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), actual: b.len() });
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x + y) / 2.0).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RetrievalTarget {
    /// Recall@k over the pooled images of every class.
    Images { k: usize },
    /// Top-1 accuracy over class prompt embeddings.
    Texts,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupScore {
    pub shared: u8,
    pub count: usize,
    /// Mean item score; `None` for an empty group.
    pub mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalReport {
    pub target: RetrievalTarget,
    pub pool_images: usize,
    pub pool_classes: usize,
    /// Score per nonword, in input order.
    pub items: Vec<f64>,
    pub groups: [GroupScore; 3],
}

impl RetrievalReport {
    pub fn overall(&self) -> Option<f64> {
        (!self.items.is_empty()).then(|| self.items.iter().sum::<f64>() / self.items.len() as f64)
    }

    pub fn metric_name(&self) -> String {
        match self.target {
            RetrievalTarget::Images { k } => format!("recall@{k}"),
            RetrievalTarget::Texts => "accuracy".into(),
        }
    }

    /// `metric<TAB>group<TAB>value`; the pool size rows come first.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        let fmt = |v: Option<f64>| v.map(|v| format!("{v:.6}")).unwrap_or_else(|| "NA".into());
        writeln!(w, "metric\tgroup\tvalue")?;
        writeln!(w, "pool_classes\tall\t{}", self.pool_classes)?;
        writeln!(w, "pool_images\tall\t{}", self.pool_images)?;
        let name = self.metric_name();
        for g in &self.groups {
            writeln!(w, "count\tshared_{}\t{}", g.shared, g.count)?;
            writeln!(w, "{name}\tshared_{}\t{}", g.shared, fmt(g.mean))?;
        }
        writeln!(w, "count\tall\t{}", self.items.len())?;
        writeln!(w, "{name}\tall\t{}", fmt(self.overall()))?;
        Ok(())
    }
}

/// Retrieve with each nonword's prompt and score against its source class.
pub fn nonword_retrieval<E: Encoder + ?Sized>(
    nonwords: &[Nonword],
    classes: &[EmbeddedClass],
    target: RetrievalTarget,
    encoder: &E,
    table: &AttributeTable,
) -> Result<RetrievalReport> {
    let index: HashMap<&str, usize> = classes.iter().enumerate().map(|(i, c)| (c.label.as_str(), i)).collect();
    let sources = nonwords
        .iter()
        .map(|n| {
            index.get(n.source_label.as_str()).copied().ok_or_else(|| {
                Error::Precondition(format!("nonword {:?}: source class {:?} is missing", n.spelling, n.source_label))
            })
        })
        .collect::<Result<Vec<usize>>>()?;
    if let Some(n) = nonwords.iter().find(|n| n.shared_attribute_count > 2) {
        return Err(Error::Precondition(format!(
            "nonword {:?}: shared count {} > 2",
            n.spelling, n.shared_attribute_count
        )));
    }
    let pool: Vec<(usize, &[f64])> = classes
        .iter()
        .enumerate()
        .flat_map(|(i, c)| c.image_embeddings.iter().map(move |v| (i, v.as_slice())))
        .collect();
    if let RetrievalTarget::Images { k } = target {
        if k == 0 {
            return Err(Error::Precondition("recall cutoff k must be positive".into()));
        }
        if pool.is_empty() && !nonwords.is_empty() {
            return Err(Error::Precondition("image retrieval needs at least one image".into()));
        }
    }
    let indices: Vec<usize> = (0..nonwords.len()).collect();
    let items = par::map(&indices, |&i| -> Result<f64> {
        let query = encoder.encode(&prompt(table, &nonwords[i].pronunciation)?)?;
        let source = sources[i];
        Ok(match target {
            RetrievalTarget::Texts => {
                if classify(&query, classes)?.class == source {
                    1.0
                } else {
                    0.0
                }
            }
            RetrievalTarget::Images { k } => {
                let scores: Vec<f64> = pool.iter().map(|(_, v)| score(&query, v)).collect();
                let mut order: Vec<usize> = (0..pool.len()).collect();
                order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
                let hits = order.iter().take(k).filter(|&&j| pool[j].0 == source).count();
                hits as f64 / k as f64
            }
        })
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let groups = [0u8, 1, 2].map(|shared| {
        let members: Vec<f64> =
            nonwords.iter().zip(&items).filter(|(n, _)| n.shared_attribute_count == shared).map(|(_, &s)| s).collect();
        GroupScore {
            shared,
            count: members.len(),
            mean: (!members.is_empty()).then(|| members.iter().sum::<f64>() / members.len() as f64),
        }
    });
    Ok(RetrievalReport { target, pool_images: pool.len(), pool_classes: classes.len(), items, groups })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HumanSimilarityTrial {
    pub target: String,
    pub rows: Vec<(String, f64)>,
}

impl HumanSimilarityTrial {
    /// Parse `target<TAB>comparison<TAB>score` lines sharing one target.
    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut target: Option<String> = None;
        let mut rows = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse { line: i + 1, message };
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(err(format!("expected 3 columns, found {}", cols.len())));
            }
            let score: f64 = cols[2].trim().parse().map_err(|_| err(format!("bad score {:?}", cols[2])))?;
            match &target {
                None => target = Some(cols[0].to_string()),
                Some(t) if t != cols[0] => return Err(err(format!("target {:?} differs from {t:?}", cols[0]))),
                _ => {}
            }
            rows.push((cols[1].to_string(), score));
        }
        let target = target.ok_or_else(|| Error::Parse { line: 0, message: "empty trial".into() })?;
        if rows.len() < 2 {
            return Err(Error::Precondition(format!("trial for {target:?} needs at least 2 rows")));
        }
        Ok(Self { target, rows })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HumanCorrelation {
    pub correlation: Spearman,
    pub used: usize,
    /// Comparison words that could not be transcribed.
    pub excluded: Vec<(String, ConvertFailure)>,
}

/// Spearman correlation between human scores and the encoder's cosine
/// similarity of each comparison word to the target word.
pub fn human_similarity_correlation<E: Encoder + ?Sized>(
    trial: &HumanSimilarityTrial,
    encoder: &E,
    dict: &PronunciationDictionary,
    table: &AttributeTable,
) -> Result<HumanCorrelation> {
    let target = convert_sentence(&trial.target, dict, table)
        .map_err(|f| Error::Precondition(format!("target {:?}: {f}", trial.target)))?;
    let target = encoder.encode(&target)?;
    let mut human = Vec::new();
    let mut model = Vec::new();
    let mut excluded = Vec::new();
    for (word, s) in &trial.rows {
        match convert_sentence(word, dict, table) {
            Ok(seq) => {
                human.push(*s);
                model.push(score(&target, &encoder.encode(&seq)?));
            }
            Err(f) => {
                log::warn!("excluding {word:?}: {f}");
                excluded.push((word.clone(), f));
            }
        }
    }
    if human.len() < 2 {
        return Err(Error::Precondition(format!("only {} convertible comparison words", human.len())));
    }
    Ok(HumanCorrelation { correlation: spearman(&human, &model)?, used: human.len(), excluded })
}
