//! Phoneme-space evaluation.
//!
//! All metrics work on a [`PhonemeSpace`]: one vector per phoneme, kept in
//! attribute-table order. Distances are Euclidean. Ranking ties are broken
//! by table order so every metric is deterministic.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::embedding::TokenLayer;
use crate::error::{Error, Result};
use crate::inventory::{AttributeTable, Phoneme, Vowel};
use crate::par;
use crate::tensor::euclidean;

#[derive(Debug, Clone, PartialEq)]
pub struct PhonemeSpace {
    symbols: Vec<String>,
    points: Vec<Vec<f64>>,
}

impl PhonemeSpace {
    /// Build a space from `(symbol, vector)` pairs. Symbols must be
    /// phonemes of `table`; the result is ordered as in the table.
    pub fn new(table: &AttributeTable, points: Vec<(String, Vec<f64>)>) -> Result<Self> {
        let dim = points.first().map_or(0, |(_, v)| v.len());
        let mut indexed = Vec::with_capacity(points.len());
        for (s, v) in points {
            let id = table.id(&s).filter(|id| table.phoneme_of(*id).is_some());
            let id = id.ok_or_else(|| Error::UnknownToken(s.clone()))?;
            if v.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, actual: v.len() });
            }
            indexed.push((id, s, v));
        }
        indexed.sort_by_key(|(id, _, _)| *id);
        if indexed.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::DuplicateSymbol("phoneme listed twice in space".into()));
        }
        let (symbols, points) = indexed.into_iter().map(|(_, s, v)| (s, v)).unzip();
        Ok(Self { symbols, points })
    }

    /// The token layer's embedding of every phoneme in the table.
    pub fn from_layer(table: &AttributeTable, layer: &TokenLayer) -> Result<Self> {
        let points = table
            .phonemes()
            .iter()
            .map(|p| {
                let id = table.id(&p.symbol).expect("table symbol");
                Ok((p.symbol.clone(), layer.embed_token(table, id)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(table, points)
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }

    pub fn point(&self, symbol: &str) -> Option<&[f64]> {
        self.symbols.iter().position(|s| s == symbol).map(|i| self.points[i].as_slice())
    }

    fn members<'a>(&'a self, table: &'a AttributeTable, f: impl Fn(&Phoneme) -> bool + 'a) -> Vec<usize> {
        (0..self.len()).filter(|&i| table.phoneme(&self.symbols[i]).is_some_and(&f)).collect()
    }
}

fn mean_distance(space: &PhonemeSpace, i: usize, others: &[usize], skip_self: bool) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for &j in others {
        if skip_self && j == i {
            continue;
        }
        sum += euclidean(&space.points[i], &space.points[j]);
        n += 1;
    }
    sum / n as f64
}

fn cluster_silhouette(space: &PhonemeSpace, own: &[usize], other: &[usize]) -> f64 {
    let scores = par::map(own, |&i| {
        let a = mean_distance(space, i, own, true);
        let b = mean_distance(space, i, other, false);
        let m = a.max(b);
        if m == 0.0 {
            0.0
        } else {
            (b - a) / m
        }
    });
    scores.iter().sum::<f64>() / own.len() as f64
}

/// Silhouette coefficients of the consonant and vowel clusters.
pub fn silhouette(space: &PhonemeSpace, table: &AttributeTable) -> Result<(f64, f64)> {
    let consonants = space.members(table, Phoneme::is_consonant);
    let vowels = space.members(table, Phoneme::is_vowel);
    if consonants.len() < 2 || vowels.len() < 2 {
        return Err(Error::Precondition(format!(
            "silhouette needs at least 2 consonants and 2 vowels, got {} and {}",
            consonants.len(),
            vowels.len()
        )));
    }
    Ok((cluster_silhouette(space, &consonants, &vowels), cluster_silhouette(space, &vowels, &consonants)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConsonantAttribute {
    Voicing,
    Place,
    Manner,
}

impl ConsonantAttribute {
    pub const ALL: [ConsonantAttribute; 3] = [Self::Voicing, Self::Place, Self::Manner];

    pub fn relevant(self, a: &Phoneme, b: &Phoneme) -> bool {
        let (a, b) = (a.consonant().expect("consonant"), b.consonant().expect("consonant"));
        match self {
            Self::Voicing => a.voiced == b.voiced,
            Self::Place => a.shares_place(b),
            Self::Manner => a.shares_manner(b),
        }
    }
}

/// Average precision of a ranked relevance list in which every relevant
/// item appears: `Σ_k Precision@k · ΔRecall@k`.
pub fn average_precision(relevance: &[bool]) -> f64 {
    let total = relevance.iter().filter(|r| **r).count();
    if total == 0 {
        return 0.0;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (k, &rel) in relevance.iter().enumerate() {
        if rel {
            hits += 1;
            sum += hits as f64 / (k + 1) as f64;
        }
    }
    sum / total as f64
}

/// Indices of `candidates` sorted by ascending distance to `query`; ties
/// keep candidate order.
fn rank_by_distance(space: &PhonemeSpace, query: usize, candidates: &[usize]) -> Vec<usize> {
    let mut ranked: Vec<(f64, usize)> =
        candidates.iter().map(|&j| (euclidean(&space.points[query], &space.points[j]), j)).collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0));
    ranked.into_iter().map(|(_, j)| j).collect()
}

/// Ranked relevance list for each consonant query; queries without any
/// relevant consonant are omitted.
fn consonant_queries(
    space: &PhonemeSpace,
    attribute: ConsonantAttribute,
    table: &AttributeTable,
) -> Result<Vec<Vec<bool>>> {
    let consonants = space.members(table, Phoneme::is_consonant);
    if consonants.len() < 2 {
        return Err(Error::Precondition("attribute mAP needs at least 2 consonants".into()));
    }
    let phoneme = |i: usize| table.phoneme(&space.symbols[i]).expect("space symbol");
    let lists = par::map(&consonants, |&q| {
        let others: Vec<usize> = consonants.iter().copied().filter(|&j| j != q).collect();
        let ranked = rank_by_distance(space, q, &others);
        ranked.into_iter().map(|j| attribute.relevant(phoneme(q), phoneme(j))).collect::<Vec<bool>>()
    });
    Ok(lists.into_iter().filter(|l| l.iter().any(|r| *r)).collect())
}

/// Per-query AP values for one consonant attribute.
pub fn attribute_average_precisions(
    space: &PhonemeSpace,
    attribute: ConsonantAttribute,
    table: &AttributeTable,
) -> Result<Vec<f64>> {
    Ok(consonant_queries(space, attribute, table)?.iter().map(|l| average_precision(l)).collect())
}

/// Mean AP over consonant queries for one attribute.
pub fn attribute_map(space: &PhonemeSpace, attribute: ConsonantAttribute, table: &AttributeTable) -> Result<f64> {
    let aps = attribute_average_precisions(space, attribute, table)?;
    if aps.is_empty() {
        return Err(Error::Precondition("no consonant query has a relevant item".into()));
    }
    Ok(aps.iter().sum::<f64>() / aps.len() as f64)
}

/// Expected mAP of a uniformly random ranking with the same relevance sets,
/// estimated by shuffling each query's list `shuffles` times.
pub fn random_map_baseline(
    space: &PhonemeSpace,
    attribute: ConsonantAttribute,
    table: &AttributeTable,
    shuffles: usize,
    seed: u64,
) -> Result<f64> {
    let lists = consonant_queries(space, attribute, table)?;
    let per_query = par::map_range(lists.len(), |q| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add((q as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)));
        let mut list = lists[q].clone();
        let mut sum = 0.0;
        for _ in 0..shuffles {
            list.shuffle(&mut rng);
            sum += average_precision(&list);
        }
        sum / shuffles as f64
    });
    Ok(per_query.iter().sum::<f64>() / per_query.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VowelAxis {
    Height,
    Backness,
    Roundedness,
}

impl VowelAxis {
    pub const ALL: [VowelAxis; 3] = [Self::Height, Self::Backness, Self::Roundedness];

    fn coordinate(self, v: &Vowel) -> f64 {
        match self {
            Self::Height => v.height(),
            Self::Backness => v.backness(),
            Self::Roundedness => v.roundedness(),
        }
    }

    fn shares(self, a: &Vowel, b: &Vowel) -> bool {
        match self {
            Self::Height => a.height_level == b.height_level,
            Self::Backness => a.backness_level == b.backness_level,
            Self::Roundedness => a.rounded == b.rounded,
        }
    }

    fn others(self) -> [VowelAxis; 2] {
        match self {
            Self::Height => [Self::Backness, Self::Roundedness],
            Self::Backness => [Self::Height, Self::Roundedness],
            Self::Roundedness => [Self::Height, Self::Backness],
        }
    }
}

/// Vowels sharing `shared` with the target, scored by their distance from
/// the target along the evaluated axis (lower ranks higher; equal scores tie).
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthRanking {
    pub shared: VowelAxis,
    pub items: Vec<(String, f64)>,
}

impl GroundTruthRanking {
    /// Group symbols into tie classes, best first.
    pub fn tiers(&self) -> Vec<Vec<&str>> {
        let mut tiers: Vec<(f64, Vec<&str>)> = Vec::new();
        for (s, d) in &self.items {
            match tiers.last_mut() {
                Some((last, group)) if *last == *d => group.push(s),
                _ => tiers.push((*d, vec![s])),
            }
        }
        tiers.into_iter().map(|(_, g)| g).collect()
    }
}

/// The (up to two) ground-truth rankings for `target` on `axis`, over the
/// given vowel symbols. Slices with fewer than two vowels are skipped.
pub fn vowel_ground_truth_rankings_among(
    target: &str,
    axis: VowelAxis,
    table: &AttributeTable,
    vowels: &[&str],
) -> Result<Vec<GroundTruthRanking>> {
    let tv = table
        .phoneme(target)
        .and_then(Phoneme::vowel)
        .ok_or_else(|| Error::Precondition(format!("/{target}/ is not a vowel")))?;
    let mut out = Vec::new();
    for shared in axis.others() {
        let mut items: Vec<(String, f64)> = vowels
            .iter()
            .filter_map(|s| table.phoneme(s).and_then(Phoneme::vowel).map(|v| (*s, v)))
            .filter(|(_, v)| shared.shares(tv, v))
            .map(|(s, v)| (s.to_string(), (axis.coordinate(v) - axis.coordinate(tv)).abs()))
            .collect();
        if items.len() < 2 {
            continue;
        }
        items.sort_by(|a, b| a.1.total_cmp(&b.1));
        out.push(GroundTruthRanking { shared, items });
    }
    Ok(out)
}

pub fn vowel_ground_truth_rankings(
    target: &str,
    axis: VowelAxis,
    table: &AttributeTable,
) -> Result<Vec<GroundTruthRanking>> {
    let vowels: Vec<&str> = table.vowels().map(|p| p.symbol.as_str()).collect();
    vowel_ground_truth_rankings_among(target, axis, table, &vowels)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spearman {
    pub value: f64,
    /// One of the inputs had zero rank variance; `value` is 0.
    pub degenerate: bool,
}

/// Average (fractional) 1-based ranks; tied values share their mean rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        None
    } else {
        Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
    }
}

/// Spearman's rank correlation of two score lists over the same items.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<Spearman> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), actual: y.len() });
    }
    if x.len() < 2 {
        return Err(Error::Precondition("spearman needs at least 2 items".into()));
    }
    Ok(match pearson(&average_ranks(x), &average_ranks(y)) {
        Some(value) => Spearman { value, degenerate: false },
        None => Spearman { value: 0.0, degenerate: true },
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankCorrelation {
    pub mean: f64,
    pub scored: usize,
    /// Rankings whose ground truth or retrieval had no rank variance.
    pub skipped: usize,
}

/// Mean Spearman correlation between each vowel's ground-truth rankings on
/// `axis` and the same vowels ranked by distance in the space.
pub fn vowel_rank_correlation(
    space: &PhonemeSpace,
    axis: VowelAxis,
    table: &AttributeTable,
) -> Result<RankCorrelation> {
    let vowels = space.members(table, Phoneme::is_vowel);
    if vowels.len() < 2 {
        return Err(Error::Precondition("vowel rank correlation needs at least 2 vowels".into()));
    }
    let symbols: Vec<&str> = vowels.iter().map(|&i| space.symbols[i].as_str()).collect();
    let per_vowel = par::map(&vowels, |&v| -> Result<Vec<Spearman>> {
        let target = &space.symbols[v];
        let rankings = vowel_ground_truth_rankings_among(target, axis, table, &symbols)?;
        rankings
            .iter()
            .map(|r| {
                let truth: Vec<f64> = r.items.iter().map(|(_, d)| *d).collect();
                let retrieved: Vec<f64> =
                    r.items.iter().map(|(s, _)| euclidean(&space.points[v], space.point(s).expect("member"))).collect();
                spearman(&truth, &retrieved)
            })
            .collect()
    });
    let (mut sum, mut scored, mut skipped) = (0.0, 0usize, 0usize);
    for scores in per_vowel {
        for s in scores? {
            if s.degenerate {
                skipped += 1;
            } else {
                sum += s.value;
                scored += 1;
            }
        }
    }
    let mean = if scored == 0 { 0.0 } else { sum / scored as f64 };
    Ok(RankCorrelation { mean, scored, skipped })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    /// Unit principal directions, by descending variance.
    pub components: Vec<Vec<f64>>,
    /// Sample variance along each requested component (`k` entries; trailing
    /// entries are ~0 when the data has lower rank).
    pub explained_variance: Vec<f64>,
    /// `n × components.len()` coordinates of the centered points.
    pub projections: Vec<Vec<f64>>,
    pub rank_deficient: bool,
}

const JACOBI_TOLERANCE: f64 = 1e-10;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
/// eigenvalues in descending order and the matching eigenvectors as columns.
pub fn symmetric_eigen(matrix: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = matrix.len();
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    let scale = a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off.sqrt() <= JACOBI_TOLERANCE * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vkp, vkq) = (row[p], row[q]);
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]));
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = order.iter().map(|&i| v.iter().map(|row| row[i]).collect()).collect();
    (values, vectors)
}

/// Principal component analysis of a point set.
pub fn pca(points: &[Vec<f64>], k: usize) -> Result<Pca> {
    let n = points.len();
    if n < k + 1 {
        return Err(Error::Precondition(format!("PCA with {k} components needs at least {} points", k + 1)));
    }
    let dim = points[0].len();
    let mean: Vec<f64> = (0..dim).map(|d| points.iter().map(|p| p[d]).sum::<f64>() / n as f64).collect();
    let centered: Vec<Vec<f64>> = points.iter().map(|p| p.iter().zip(&mean).map(|(x, m)| x - m).collect()).collect();
    // Eigen-decompose the n×n Gram matrix; D may be much larger than n.
    let gram: Vec<Vec<f64>> =
        centered.iter().map(|a| centered.iter().map(|b| crate::tensor::dot(a, b)).collect()).collect();
    let (values, vectors) = symmetric_eigen(&gram);
    let top = values.first().copied().unwrap_or(0.0).max(0.0);
    let cutoff = top * 1e-12 * n as f64;
    let mut components = Vec::new();
    let mut explained_variance = Vec::new();
    let mut rank_deficient = false;
    for (lambda, u) in values.iter().zip(&vectors).take(k) {
        explained_variance.push(lambda.max(0.0) / (n - 1) as f64);
        if *lambda <= cutoff || *lambda <= 0.0 {
            rank_deficient = true;
            continue;
        }
        let inv = 1.0 / lambda.sqrt();
        let mut dir: Vec<f64> =
            (0..dim).map(|d| centered.iter().zip(u).map(|(p, w)| p[d] * w).sum::<f64>() * inv).collect();
        let pivot = dir.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
        if pivot < 0.0 {
            dir.iter_mut().for_each(|x| *x = -*x);
        }
        components.push(dir);
    }
    let projections = centered.iter().map(|p| components.iter().map(|c| crate::tensor::dot(p, c)).collect()).collect();
    Ok(Pca { components, explained_variance, projections, rank_deficient })
}

/// `(symbol, class, coordinates)` for one phoneme.
pub type PcaRow = (String, &'static str, Vec<f64>);

/// `(symbol, class, coordinates...)` rows of a PCA projection of the space.
pub fn pca_export(space: &PhonemeSpace, table: &AttributeTable, k: usize) -> Result<(Pca, Vec<PcaRow>)> {
    let result = pca(space.points(), k)?;
    let rows = space
        .symbols()
        .iter()
        .zip(&result.projections)
        .map(|(s, coords)| {
            let class = if table.phoneme(s).is_some_and(Phoneme::is_consonant) { "consonant" } else { "vowel" };
            let mut coords = coords.clone();
            coords.resize(k, 0.0);
            (s.clone(), class, coords)
        })
        .collect();
    Ok((result, rows))
}

/// The eight phoneme-space metrics, in report order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceReport {
    pub silhouette_consonant: f64,
    pub silhouette_vowel: f64,
    pub map_voicing: f64,
    pub map_place: f64,
    pub map_manner: f64,
    pub rc_height: f64,
    pub rc_backness: f64,
    pub rc_roundedness: f64,
}

impl SpaceReport {
    pub fn compute(space: &PhonemeSpace, table: &AttributeTable) -> Result<Self> {
        let (silhouette_consonant, silhouette_vowel) = silhouette(space, table)?;
        Ok(Self {
            silhouette_consonant,
            silhouette_vowel,
            map_voicing: attribute_map(space, ConsonantAttribute::Voicing, table)?,
            map_place: attribute_map(space, ConsonantAttribute::Place, table)?,
            map_manner: attribute_map(space, ConsonantAttribute::Manner, table)?,
            rc_height: vowel_rank_correlation(space, VowelAxis::Height, table)?.mean,
            rc_backness: vowel_rank_correlation(space, VowelAxis::Backness, table)?.mean,
            rc_roundedness: vowel_rank_correlation(space, VowelAxis::Roundedness, table)?.mean,
        })
    }

    pub fn rows(&self) -> [(&'static str, f64); 8] {
        [
            ("silhouette_consonant", self.silhouette_consonant),
            ("silhouette_vowel", self.silhouette_vowel),
            ("map_voicing", self.map_voicing),
            ("map_place", self.map_place),
            ("map_manner", self.map_manner),
            ("rc_height", self.rc_height),
            ("rc_backness", self.rc_backness),
            ("rc_roundedness", self.rc_roundedness),
        ]
    }

    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "metric\tvalue")?;
        for (name, value) in self.rows() {
            writeln!(w, "{name}\t{value:.6}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> AttributeTable {
        AttributeTable::english()
    }

    fn space_of(table: &AttributeTable, f: impl Fn(&Phoneme) -> Vec<f64>) -> PhonemeSpace {
        PhonemeSpace::new(table, table.phonemes().iter().map(|p| (p.symbol.clone(), f(p))).collect()).unwrap()
    }

    #[test]
    fn silhouette_of_two_points() {
        let t = table();
        let s = space_of(&t, |p| if p.is_consonant() { vec![0.0, 0.0] } else { vec![3.0, 4.0] });
        assert_eq!(silhouette(&s, &t).unwrap(), (1.0, 1.0));
        let s = space_of(&t, |_| vec![1.0]);
        assert_eq!(silhouette(&s, &t).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn silhouette_needs_two_per_cluster() {
        let t = table();
        let s = PhonemeSpace::new(&t, vec![("p".into(), vec![0.0]), ("b".into(), vec![1.0]), ("i".into(), vec![2.0])])
            .unwrap();
        assert!(silhouette(&s, &t).is_err());
    }

    #[test]
    fn ap_of_worked_example() {
        // /b/ retrieves [p, d, t, m, g] under voicing relevance.
        let ap = average_precision(&[false, true, false, true, true]);
        assert!((ap - (0.5 + 0.5 + 0.6) / 3.0).abs() < 1e-15);
        assert_eq!(average_precision(&[true, true, false]), 1.0);
        assert_eq!(average_precision(&[false, false]), 0.0);
    }

    #[test]
    fn clustered_voicing_gives_perfect_map() {
        let t = table();
        let s = space_of(&t, |p| match p.consonant() {
            Some(c) if c.voiced => vec![1.0, 0.0],
            Some(_) => vec![0.0, 0.0],
            None => vec![0.0, 5.0],
        });
        assert_eq!(attribute_map(&s, ConsonantAttribute::Voicing, &t).unwrap(), 1.0);
    }

    #[test]
    fn golden_vowel_rankings() {
        let t = table();
        let r = vowel_ground_truth_rankings("ɑ", VowelAxis::Height, &t).unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r[0].shared, VowelAxis::Backness);
        assert_eq!(r[0].tiers(), vec![vec!["ɑ"], vec!["ɔ"], vec!["o"], vec!["u"]]);
        assert_eq!(r[1].shared, VowelAxis::Roundedness);
        assert_eq!(
            r[1].tiers(),
            vec![vec!["a", "ɑ"], vec!["æ"], vec!["ɛ"], vec!["ə"], vec!["e"], vec!["ɪ"], vec!["i"]]
        );
        let r = vowel_ground_truth_rankings("i", VowelAxis::Height, &t).unwrap();
        assert_eq!(r[0].items[0], ("i".to_string(), 0.0));
        assert!(vowel_ground_truth_rankings("p", VowelAxis::Height, &t).is_err());
    }

    #[test]
    fn singleton_slices_are_skipped() {
        let t = table();
        // Only ə has backness 2 and height 3.
        let r = vowel_ground_truth_rankings("ə", VowelAxis::Roundedness, &t).unwrap();
        assert!(r.is_empty());
    }

    #[test]
    fn spearman_basics() {
        assert!((spearman(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap().value - 1.0).abs() < 1e-12);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap().value + 1.0).abs() < 1e-12);
        let d = spearman(&[1.0, 1.0], &[1.0, 2.0]).unwrap();
        assert!(d.degenerate && d.value == 0.0);
        assert!(spearman(&[1.0], &[1.0]).is_err());
        assert_eq!(average_ranks(&[0.0, 1.0, 1.0, 2.0]), vec![1.0, 2.5, 2.5, 4.0]);
    }

    #[test]
    fn one_dimensional_axis_space_is_perfectly_correlated() {
        let t = table();
        for axis in [VowelAxis::Height, VowelAxis::Backness] {
            let s = space_of(&t, |p| match p.vowel() {
                Some(v) => vec![axis.coordinate(v)],
                None => vec![10.0],
            });
            let rc = vowel_rank_correlation(&s, axis, &t).unwrap();
            assert!((rc.mean - 1.0).abs() < 1e-12, "{axis:?}: {rc:?}");
            assert!(rc.scored > 0);
        }
    }

    #[test]
    fn pca_of_planar_points() {
        let pts: Vec<Vec<f64>> = (0..10)
            .map(|i| {
                let (a, b) = (i as f64, ((i * 7) % 5) as f64);
                vec![a + b, a - b, 2.0 * a + 0.5 * b, 0.0]
            })
            .collect();
        let r = pca(&pts, 3).unwrap();
        assert!(r.explained_variance[2] < 1e-8);
        assert!(r.rank_deficient);
        assert_eq!(r.components.len(), 2);
        assert!(r.explained_variance[0] >= r.explained_variance[1]);
        for c in &r.components {
            let big = c.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
            assert!(big > 0.0);
        }
    }

    #[test]
    fn pca_needs_enough_points() {
        assert!(pca(&[vec![0.0], vec![1.0]], 3).is_err());
    }

    #[test]
    fn report_has_eight_rows() {
        let t = table();
        let s = space_of(&t, |p| crate::embedding::dense_attributes(&t, t.id(&p.symbol).unwrap()));
        let r = SpaceReport::compute(&s, &t).unwrap();
        let mut buf = Vec::new();
        r.write_tsv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 9);
        assert!(text.contains("rc_roundedness\t"));
    }
}
