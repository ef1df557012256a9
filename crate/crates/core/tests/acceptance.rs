//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::HashSet;
use std::panic;
use std::time::{Duration, Instant};

use ipakit::embedding::{attribute_vector, AttributeIndex, FeatureMatrix, TokenLayer, WeightMode};
use ipakit::lexicon::{build_corpus, read_lines, PronunciationDictionary};
use ipakit::metrics::{
    attribute_average_precisions, attribute_map, average_precision, pca, random_map_baseline, silhouette, spearman,
    vowel_ground_truth_rankings, ConsonantAttribute, PhonemeSpace, VowelAxis,
};
use ipakit::model::{
    grad_check, load_checkpoint, save_checkpoint, spread, train, Mode, StudentConfig, StudentModel, TrainExample,
};
use ipakit::nonword::{generate_nonwords, shared_attributes, SubstitutionTable};
use ipakit::retrieval::{nonword_retrieval, prompt, EmbeddedClass, LookupEncoder, RetrievalTarget};
use ipakit::teacher::{synthetic_teacher, TeacherTable};
use ipakit::tensor::{euclidean, Matrix};
use ipakit::AttributeTable;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

const DATA: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data");

fn data(name: &str) -> std::io::BufReader<std::fs::File> {
    std::io::BufReader::new(std::fs::File::open(format!("{DATA}/{name}")).expect("fixture"))
}

fn toy_dictionary(table: &AttributeTable) -> PronunciationDictionary {
    PronunciationDictionary::load(data("dict.tsv"), table).expect("dict").0
}

fn timed(limit: Duration, start: Instant) -> Outcome {
    let took = start.elapsed();
    ensure!(took < limit, "took {took:.2?}, limit {limit:?}");
    Ok(format!("{took:.2?}"))
}

fn golden_attribute_vectors() -> Outcome {
    let start = Instant::now();
    let table = AttributeTable::english();
    let index = AttributeIndex::new(&table);
    let at = |label: &str| index.position(label).unwrap_or_else(|| panic!("label {label}"));
    let expect: [(&str, Vec<(&str, f64)>); 5] = [
        ("p", vec![("Consonant", 1.0), ("Manner:plosive", 1.0), ("Place:bilabial", 1.0)]),
        ("v", vec![("Consonant", 1.0), ("Voicing", 1.0), ("Manner:fricative", 1.0), ("Place:labiodental", 1.0)]),
        ("e", vec![("Vowel", 1.0), ("Height", 2.0 / 6.0)]),
        ("ʊ", vec![("Vowel", 1.0), ("Height", 1.0 / 6.0), ("Backness", 3.0 / 4.0), ("Roundedness", 1.0)]),
        (",", vec![("Char:Comma", 1.0)]),
    ];
    for (symbol, nonzero) in expect {
        let x = attribute_vector(&table, symbol).map_err(|e| e.to_string())?;
        ensure!(x.len() == index.len(), "{symbol}: {} dims", x.len());
        let mut want = vec![0.0; index.len()];
        for (label, v) in nonzero {
            want[at(label)] = v;
        }
        ensure!(x == want, "/{symbol}/ = {x:?}");
    }
    timed(Duration::from_secs(1), start)
}

fn golden_average_precision() -> Outcome {
    let table = AttributeTable::english();
    // On a line, distances from /b/ order the others as p, d, t, m, g.
    let coords = [("b", 0.0), ("p", 1.0), ("d", 2.0), ("t", 3.0), ("m", 4.0), ("g", 5.0)];
    let space = PhonemeSpace::new(&table, coords.iter().map(|(s, x)| (s.to_string(), vec![*x])).collect())
        .map_err(|e| e.to_string())?;
    let aps = attribute_average_precisions(&space, ConsonantAttribute::Voicing, &table).map_err(|e| e.to_string())?;
    let b = space.symbols().iter().position(|s| s == "b").expect("b");
    // Voiced relevant set R = {d, m, g}.
    let expected = (1.0 / 3.0) * (1.0 / 2.0 + 2.0 / 4.0 + 3.0 / 5.0);
    let delta = (aps[b] - expected).abs();
    ensure!(delta < 1e-12, "AP_b = {}, expected {expected}", aps[b]);
    let direct = average_precision(&[false, true, false, true, true]);
    ensure!((direct - expected).abs() < 1e-12, "average_precision = {direct}");
    Ok(format!("AP_b = {:.12}, |Δ| = {delta:.1e}", aps[b]))
}

fn golden_vowel_rankings() -> Outcome {
    let table = AttributeTable::english();
    let rankings = vowel_ground_truth_rankings("ɑ", VowelAxis::Height, &table).map_err(|e| e.to_string())?;
    let tiers: Vec<(VowelAxis, Vec<Vec<&str>>)> = rankings.iter().map(|r| (r.shared, r.tiers())).collect();
    let back = vec![vec!["ɑ"], vec!["ɔ"], vec!["o"], vec!["u"]];
    let unrounded = vec![vec!["ɑ", "a"], vec!["æ"], vec!["ɛ"], vec!["ə"], vec!["e"], vec!["ɪ"], vec!["i"]];
    fn normalize(mut t: Vec<Vec<&str>>) -> Vec<Vec<&str>> {
        t.iter_mut().for_each(|tier| tier.sort());
        t
    }
    let got: Vec<(VowelAxis, Vec<Vec<&str>>)> = tiers.into_iter().map(|(a, t)| (a, normalize(t))).collect();
    let want = vec![(VowelAxis::Backness, normalize(back)), (VowelAxis::Roundedness, normalize(unrounded))];
    ensure!(got == want, "got {got:?}");
    Ok("ɑ>ɔ>o>u ; ɑ=a>æ>ɛ>ə>e>ɪ>i".into())
}

fn random_space(table: &AttributeTable, rng: &mut ChaCha8Rng, dim: usize) -> PhonemeSpace {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let points =
        table.phonemes().iter().map(|p| (p.symbol.clone(), (0..dim).map(|_| normal.sample(rng)).collect())).collect();
    PhonemeSpace::new(table, points).unwrap()
}

fn oracle_silhouette(points: &[Vec<f64>], own: &[usize], other: &[usize]) -> f64 {
    let mut total = 0.0;
    for &i in own {
        let mut a = 0.0;
        for &j in own {
            if j != i {
                a += euclidean(&points[i], &points[j]);
            }
        }
        a /= (own.len() - 1) as f64;
        let mut b = 0.0;
        for &j in other {
            b += euclidean(&points[i], &points[j]);
        }
        b /= other.len() as f64;
        total += (b - a) / a.max(b);
    }
    total / own.len() as f64
}

/// Σ_k P@k (R@k − R@(k−1)) over a ranking found by repeated selection.
fn oracle_ap(points: &[Vec<f64>], q: usize, others: &[usize], relevant: impl Fn(usize) -> bool) -> Option<f64> {
    let mut remaining: Vec<usize> = others.to_vec();
    let mut ranking = Vec::new();
    while !remaining.is_empty() {
        let mut best = 0;
        for k in 1..remaining.len() {
            if euclidean(&points[q], &points[remaining[k]]) < euclidean(&points[q], &points[remaining[best]]) {
                best = k;
            }
        }
        ranking.push(remaining.remove(best));
    }
    let r = ranking.iter().filter(|&&j| relevant(j)).count() as f64;
    if r == 0.0 {
        return None;
    }
    let (mut ap, mut hits, mut prev_recall) = (0.0, 0.0, 0.0);
    for (k, &j) in ranking.iter().enumerate() {
        if relevant(j) {
            hits += 1.0;
        }
        let recall = hits / r;
        ap += hits / (k + 1) as f64 * (recall - prev_recall);
        prev_recall = recall;
    }
    Some(ap)
}

fn oracle_spearman(x: &[f64], y: &[f64]) -> f64 {
    let rank = |v: &[f64]| -> Vec<f64> {
        v.iter()
            .map(|a| {
                let less = v.iter().filter(|b| *b < a).count() as f64;
                let equal = v.iter().filter(|b| *b == a).count() as f64;
                less + (equal + 1.0) / 2.0
            })
            .collect()
    };
    let (rx, ry) = (rank(x), rank(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        0.0
    } else {
        cov / (vx * vy).sqrt()
    }
}

/// Eigenvalues of a symmetric 3×3 matrix, descending, by the trigonometric
/// closed form.
fn eigen3(a: [[f64; 3]; 3]) -> [f64; 3] {
    let p1 = a[0][1].powi(2) + a[0][2].powi(2) + a[1][2].powi(2);
    let q = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
    let p2 = (a[0][0] - q).powi(2) + (a[1][1] - q).powi(2) + (a[2][2] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let mut b = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            b[i][j] = (a[i][j] - if i == j { q } else { 0.0 }) / p;
        }
    }
    let det = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1]) - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
        + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
    let phi = (det / 2.0).clamp(-1.0, 1.0).acos() / 3.0;
    let e1 = q + 2.0 * p * phi.cos();
    let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
    [e1, 3.0 * q - e1 - e3, e3]
}

fn metric_oracles() -> Outcome {
    let start = Instant::now();
    let table = AttributeTable::english();
    let mut worst: f64 = 0.0;
    for instance in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + instance);
        let dim = rng.random_range(2..8);
        let space = random_space(&table, &mut rng, dim);
        let pts = space.points();
        let is_cons = |i: usize| table.phoneme(&space.symbols()[i]).unwrap().is_consonant();
        let cons: Vec<usize> = (0..pts.len()).filter(|&i| is_cons(i)).collect();
        let vows: Vec<usize> = (0..pts.len()).filter(|&i| !is_cons(i)).collect();

        let (sc, sv) = silhouette(&space, &table).map_err(|e| e.to_string())?;
        let d =
            (sc - oracle_silhouette(pts, &cons, &vows)).abs().max((sv - oracle_silhouette(pts, &vows, &cons)).abs());
        ensure!(d < 1e-9, "instance {instance}: silhouette |Δ| = {d:e}");
        worst = worst.max(d);

        for attr in ConsonantAttribute::ALL {
            let phon = |i: usize| table.phoneme(&space.symbols()[i]).unwrap();
            let aps: Vec<f64> = cons
                .iter()
                .filter_map(|&q| {
                    let others: Vec<usize> = cons.iter().copied().filter(|&j| j != q).collect();
                    oracle_ap(pts, q, &others, |j| attr.relevant(phon(q), phon(j)))
                })
                .collect();
            let got = attribute_average_precisions(&space, attr, &table).map_err(|e| e.to_string())?;
            ensure!(got.len() == aps.len(), "instance {instance}: {} APs vs {}", got.len(), aps.len());
            for (g, o) in got.iter().zip(&aps) {
                ensure!((g - o).abs() < 1e-9, "instance {instance}: AP {g} vs {o}");
                worst = worst.max((g - o).abs());
            }
            let map = attribute_map(&space, attr, &table).map_err(|e| e.to_string())?;
            let oracle_map = aps.iter().sum::<f64>() / aps.len() as f64;
            ensure!((map - oracle_map).abs() < 1e-9, "instance {instance}: mAP {map} vs {oracle_map}");
        }

        let n = rng.random_range(5..20);
        let x: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..6u8))).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let rho = spearman(&x, &y).map_err(|e| e.to_string())?.value;
        let d = (rho - oracle_spearman(&x, &y)).abs();
        ensure!(d < 1e-9, "instance {instance}: spearman |Δ| = {d:e}");
        worst = worst.max(d);

        let m = rng.random_range(4..10);
        let cloud: Vec<Vec<f64>> =
            (0..m).map(|_| (0..3).map(|k| rng.random_range(-1.0..1.0) * (k + 1) as f64).collect()).collect();
        let result = pca(&cloud, 3).map_err(|e| e.to_string())?;
        let mean: Vec<f64> = (0..3).map(|k| cloud.iter().map(|p| p[k]).sum::<f64>() / m as f64).collect();
        let mut cov = [[0.0; 3]; 3];
        for p in &cloud {
            for i in 0..3 {
                for j in 0..3 {
                    cov[i][j] += (p[i] - mean[i]) * (p[j] - mean[j]) / (m - 1) as f64;
                }
            }
        }
        for (got, want) in result.explained_variance.iter().zip(eigen3(cov)) {
            ensure!((got - want).abs() < 1e-8, "instance {instance}: PCA variance {got} vs {want}");
            worst = worst.max((got - want).abs());
        }
    }
    let t = timed(Duration::from_secs(30), start)?;
    Ok(format!("50 instances, max |Δ| = {worst:.1e}, {t}"))
}

fn attribute_space_sanity() -> Outcome {
    let table = AttributeTable::english();
    let n = ipakit::embedding::attribute_count(&table);
    let layer = TokenLayer::Attribute(FeatureMatrix::from_matrix(Matrix::identity(n), WeightMode::Frozen));
    let space = PhonemeSpace::from_layer(&table, &layer).map_err(|e| e.to_string())?;
    let (sc, sv) = silhouette(&space, &table).map_err(|e| e.to_string())?;
    ensure!(sc > 0.0 && sv > 0.0, "silhouette ({sc}, {sv})");
    let mut parts = vec![format!("s_Cc {sc:.3}, s_Cv {sv:.3}")];
    for attr in ConsonantAttribute::ALL {
        let map = attribute_map(&space, attr, &table).map_err(|e| e.to_string())?;
        let base = random_map_baseline(&space, attr, &table, 10_000, 7).map_err(|e| e.to_string())?;
        ensure!(map - base > 0.1, "{attr:?}: mAP {map:.3} vs random {base:.3}");
        parts.push(format!("{attr:?} {map:.3}/{base:.3}"));
    }
    Ok(parts.join(", "))
}

fn gradient_check() -> Outcome {
    let table = AttributeTable::english();
    let batch: Vec<_> = ["kæt", "ʃu", "ˈwi"].iter().map(|s| table.parse(s).unwrap()).collect();
    let targets = vec![vec![0.3, -0.2, 0.5], vec![-0.4, 0.1, 0.0], vec![0.2, 0.2, -0.3]];
    let mut parts = Vec::new();
    for mode in [Mode::IpaFrozen, Mode::IpaTrainable, Mode::Baseline] {
        let mut cfg = StudentConfig::new(mode, 8, 1, 2, 3);
        cfg.max_len = 6;
        cfg.ffn_mult = 2;
        cfg.seed = 21;
        let mut model = StudentModel::new(cfg, &table).map_err(|e| e.to_string())?;
        spread(&mut model);
        ensure!(model.params.parameter_count() <= 10_000, "{} parameters", model.params.parameter_count());
        let r = grad_check(&model, &batch, &targets, 1e-3).map_err(|e| e.to_string())?;
        ensure!(r.max_relative_error < 1e-4, "{mode:?}: {r:?}");
        parts.push(format!("{} {:.1e}", mode.name(), r.max_relative_error));
    }

    let mut cfg = StudentConfig::new(Mode::IpaFrozen, 16, 1, 2, 4);
    cfg.batch_size = 4;
    cfg.epochs = 100;
    cfg.learning_rate = 1e-2;
    let mut model = StudentModel::new(cfg, &table).map_err(|e| e.to_string())?;
    let before = model.params.clone();
    let examples: Vec<TrainExample> = ["kæt", "dɔg", "ʃu", "ˈwi"]
        .iter()
        .enumerate()
        .map(|(i, s)| TrainExample { pronunciation: table.parse(s).unwrap(), target: vec![0.1 * i as f64; 4] })
        .collect();
    let log = train(&mut model, &examples, &[]).map_err(|e| e.to_string())?;
    ensure!(log.steps == 100, "{} steps", log.steps);
    ensure!(model.params.token == before.token, "W changed in frozen mode");
    ensure!(model.params.out_w != before.out_w, "nothing trained");
    parts.push("frozen W bit-identical after 100 steps".into());
    Ok(parts.join(", "))
}

fn toy_corpus(table: &AttributeTable) -> Vec<ipakit::lexicon::CorpusPair> {
    let dict = toy_dictionary(table);
    let sentences = read_lines(data("sentences.txt")).unwrap();
    build_corpus(&sentences, &dict, table, None).0
}

fn distillation_smoke() -> Outcome {
    let start = Instant::now();
    let table = AttributeTable::english();
    let pairs: Vec<_> = toy_corpus(&table).into_iter().take(200).collect();
    ensure!(pairs.len() == 200, "only {} pairs", pairs.len());
    let texts: Vec<String> = pairs.iter().map(|p| p.text.clone()).collect();
    let teacher = synthetic_teacher(&texts, 32, 3);
    let examples = TrainExample::from_pairs(&pairs, &teacher).map_err(|e| e.to_string())?;
    let mut cfg = StudentConfig::new(Mode::IpaTrainable, 64, 2, 4, 32);
    cfg.seed = 5;
    cfg.learning_rate = 1e-3;
    let mut model = StudentModel::new(cfg, &table).map_err(|e| e.to_string())?;
    let log = train(&mut model, &examples, &[]).map_err(|e| e.to_string())?;
    let first = log.epochs.first().unwrap().train_mse;
    let last = log.epochs.last().unwrap().train_mse;
    ensure!(log.epochs.len() == 50, "{} epochs", log.epochs.len());
    ensure!(last <= 0.5 * first, "epoch 1 {first:.4} -> epoch 50 {last:.4}");

    let mut cfg = StudentConfig::new(Mode::IpaTrainable, 16, 1, 2, 32);
    cfg.learning_rate = 1e-2;
    cfg.epochs = 500;
    let mut single = StudentModel::new(cfg, &table).map_err(|e| e.to_string())?;
    let one = &examples[..1];
    let log1 = train(&mut single, one, &[]).map_err(|e| e.to_string())?;
    let mse = single.loss(&[one[0].pronunciation.clone()], &[one[0].target.clone()]).map_err(|e| e.to_string())?;
    ensure!(log1.steps <= 500 && mse < 1e-3, "single pair mse {mse:e} after {} steps", log1.steps);
    let t = timed(Duration::from_secs(300), start)?;
    Ok(format!("train mse {first:.4} -> {last:.4}; single pair {mse:.1e}; {t}"))
}

fn nonword_golden() -> Outcome {
    let table = AttributeTable::english();
    let (dict, _) = PronunciationDictionary::load("desk\tdɛsk\n".as_bytes(), &table).map_err(|e| e.to_string())?;
    let vocab: HashSet<String> = ["desk".to_string()].into();
    let known: HashSet<_> = dict.pronunciations().cloned().collect();
    let out = generate_nonwords("desk", &dict, &table, &SubstitutionTable::default(), &vocab, &known)
        .map_err(|e| e.to_string())?;
    for (pron, spelling) in [("zɛsk", "zesk"), ("nɛsk", "nesk")] {
        let p = table.parse(pron).unwrap();
        ensure!(out.iter().any(|n| n.pronunciation == p && n.spelling == spelling), "missing {pron}/{spelling}");
    }
    ensure!(out.iter().all(|n| n.shared_attribute_count <= 2), "shared count out of range");
    let mk = shared_attributes(&table, "m", "k").map_err(|e| e.to_string())?;
    let mt = shared_attributes(&table, "m", "t").map_err(|e| e.to_string())?;
    ensure!(mk == 0 && mt == 0, "m/k {mk}, m/t {mt}");
    Ok(format!("{} nonwords incl. zesk, nesk; m-k = m-t = 0", out.len()))
}

fn train_checkpoint(table: &AttributeTable, examples: &[TrainExample]) -> Vec<u8> {
    let mut cfg = StudentConfig::new(Mode::IpaFrozen, 16, 1, 2, 8);
    cfg.seed = 7;
    cfg.epochs = 2;
    cfg.learning_rate = 1e-3;
    let mut model = StudentModel::new(cfg, table).unwrap();
    train(&mut model, examples, &[]).unwrap();
    let mut bytes = Vec::new();
    save_checkpoint(&model, &mut bytes).unwrap();
    bytes
}

fn round_trips() -> Outcome {
    let table = AttributeTable::english();
    let corpus = toy_corpus(&table);
    for p in &corpus {
        let rendered = table.render(&p.pronunciation);
        let back = table.parse(&rendered).map_err(|e| format!("{:?}: {e}", p.text))?;
        ensure!(back == p.pronunciation, "{:?} does not survive render/parse", p.text);
        ensure!(table.render(&back) == rendered, "{rendered:?} is not a fixed point");
    }

    let texts: Vec<String> = corpus.iter().map(|p| p.text.clone()).collect();
    let teacher = synthetic_teacher(&texts, 8, 1);
    let mut teb = Vec::new();
    teacher.write(&mut teb).map_err(|e| e.to_string())?;
    let reread = TeacherTable::read(teb.as_slice()).map_err(|e| e.to_string())?;
    let mut teb2 = Vec::new();
    reread.write(&mut teb2).map_err(|e| e.to_string())?;
    ensure!(teb == teb2, "TEB1 bytes differ after round-trip");

    let examples = TrainExample::from_pairs(&corpus[..40], &teacher).map_err(|e| e.to_string())?;
    let a = train_checkpoint(&table, &examples);
    let model = load_checkpoint(a.as_slice(), &table).map_err(|e| e.to_string())?;
    let mut again = Vec::new();
    save_checkpoint(&model, &mut again).map_err(|e| e.to_string())?;
    ensure!(a == again, "MDL1 bytes differ after round-trip");
    let b = train_checkpoint(&table, &examples);
    ensure!(a == b, "two seeded training runs differ");
    Ok(format!("{} pairs, TEB1 {} bytes, MDL1 {} bytes", corpus.len(), teb.len(), a.len()))
}

fn retrieval_monotonicity() -> Outcome {
    let table = AttributeTable::english();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let labels: Vec<String> = (0..10).map(|i| format!("class{i}")).collect();
    let classes: Vec<EmbeddedClass> = labels
        .iter()
        .map(|l| EmbeddedClass::new(l.clone(), (0..32).map(|_| normal.sample(&mut rng)).collect()))
        .collect();
    let onsets = ["p", "b", "t", "d", "k", "g", "m", "n", "f", "v"];
    let vowels = ["i", "ɪ", "e", "ɛ", "æ", "a", "ə", "ɑ", "o", "u"];
    let nonwords: Vec<ipakit::nonword::Nonword> = (0..100)
        .map(|i| {
            let pronunciation = table.parse(&format!("{}{}s", onsets[i % 10], vowels[i / 10])).unwrap();
            let c = pronunciation.tokens[0];
            ipakit::nonword::Nonword {
                pronunciation,
                spelling: format!("nw{i}"),
                source_label: labels[i % 10].clone(),
                source_consonant: c,
                new_consonant: c,
                shared_attribute_count: (i % 3) as u8,
            }
        })
        .collect();
    let mut accs = Vec::new();
    for sigma in [0.0, 0.1, 10.0] {
        let mut enc = LookupEncoder::new(32);
        for (i, n) in nonwords.iter().enumerate() {
            let v = classes[i % 10].prompt_embedding.iter().map(|x| x + sigma * normal.sample(&mut rng)).collect();
            enc.insert(prompt(&table, &n.pronunciation).unwrap(), v).unwrap();
        }
        let r =
            nonword_retrieval(&nonwords, &classes, RetrievalTarget::Texts, &enc, &table).map_err(|e| e.to_string())?;
        accs.push(r.overall().unwrap());
    }
    ensure!(accs[0] == 1.0, "accuracy at sigma 0 is {}", accs[0]);
    ensure!(accs.windows(2).all(|w| w[1] <= w[0]), "not monotone: {accs:?}");
    Ok(format!("accuracy at sigma 0/0.1/10: {:.2}/{:.2}/{:.2}", accs[0], accs[1], accs[2]))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("golden attribute vectors", golden_attribute_vectors),
        ("golden average precision", golden_average_precision),
        ("golden vowel rankings", golden_vowel_rankings),
        ("metric oracles", metric_oracles),
        ("attribute-space sanity", attribute_space_sanity),
        ("gradient check", gradient_check),
        ("distillation smoke test", distillation_smoke),
        ("nonword golden", nonword_golden),
        ("round-trips", round_trips),
        ("retrieval-harness monotonicity", retrieval_monotonicity),
    ];
    // Silence panic messages; a panic counts as a failure.
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, run) in criteria {
        let outcome = panic::catch_unwind(run).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!("{} of {} criteria passed", 10 - failed, 10);
    if failed > 0 {
        std::process::exit(1);
    }
}
