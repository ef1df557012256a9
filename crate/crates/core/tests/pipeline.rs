//! End-to-end runs over the toy fixtures.

use std::collections::HashSet;
use std::fs::File;
use std::io::BufReader;

use ipakit::lexicon::{
    build_corpus, read_lines, read_pairs, split_validation, write_pairs, zipf_filter, FrequencyTable,
    PronunciationDictionary,
};
use ipakit::metrics::{PhonemeSpace, SpaceReport};
use ipakit::model::{load_checkpoint, save_checkpoint, train, Mode, StudentConfig, StudentModel, TrainExample};
use ipakit::nonword::{
    generate_nonwords, read_nonwords, starts_with_sole_consonant, write_nonwords, SubstitutionTable,
};
use ipakit::retrieval::{
    embedded_classes, human_similarity_correlation, nonword_retrieval, prompt, Encoder, HumanSimilarityTrial,
    RetrievalTarget,
};
use ipakit::teacher::synthetic_teacher;
use ipakit::AttributeTable;

fn open(name: &str) -> BufReader<File> {
    BufReader::new(File::open(format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap())
}

fn fixtures() -> (AttributeTable, PronunciationDictionary) {
    let table = AttributeTable::english();
    let (dict, rejected) = PronunciationDictionary::load(open("dict.tsv"), &table).unwrap();
    assert_eq!(rejected.len(), 1, "{rejected:?}");
    assert_eq!(rejected[0].word, "bogus");
    (table, dict)
}

#[test]
fn corpus_drops_unconvertible_sentences() {
    let (table, dict) = fixtures();
    let sentences = read_lines(open("sentences.txt")).unwrap();
    let labels = read_lines(open("labels.txt")).unwrap();
    let (pairs, report) = build_corpus(&sentences, &dict, &table, Some(&labels));
    let dropped: Vec<usize> = report.failures.iter().map(|(line, _)| *line).collect();
    assert_eq!(dropped, vec![6, 18]);
    assert_eq!(report.kept + report.single_words_added, pairs.len());
    assert_eq!(report.single_words_added, labels.len());
    assert!(pairs.iter().any(|p| p.text == "zebra"));

    let mut buf = Vec::new();
    write_pairs(&mut buf, &pairs, &table).unwrap();
    assert_eq!(read_pairs(buf.as_slice(), &table).unwrap(), pairs);

    let (tr, val) = split_validation(&pairs, 20, 1).unwrap();
    assert_eq!((tr.len(), val.len()), (pairs.len() - 20, 20));
    let seen: HashSet<_> = tr.iter().chain(&val).map(|p| p.text.clone()).collect();
    assert_eq!(seen.len(), pairs.iter().map(|p| &p.text).collect::<HashSet<_>>().len());
}

#[test]
fn nonwords_for_frequent_labels_round_trip() {
    let (table, dict) = fixtures();
    let labels = read_lines(open("labels.txt")).unwrap();
    let freq = FrequencyTable::load(open("freq.tsv")).unwrap();
    let kept = zipf_filter(&labels, &freq, 2.5);
    assert!(!kept.contains(&"zebra".to_string()) && !kept.contains(&"jug".to_string()));
    assert!(kept.contains(&"desk".to_string()));

    let vocab: HashSet<String> = dict.words().map(str::to_string).collect();
    let known: HashSet<_> = dict.pronunciations().cloned().collect();
    let subs = SubstitutionTable::default();
    let mut all = Vec::new();
    let eligible: Vec<&String> =
        kept.iter().filter(|l| starts_with_sole_consonant(dict.get(l).unwrap(), &table).unwrap()).collect();
    assert!(!eligible.iter().any(|l| *l == "tree" || *l == "apple"));
    for label in eligible {
        let nonwords = generate_nonwords(label, &dict, &table, &subs, &vocab, &known).unwrap();
        for n in &nonwords {
            assert!(!vocab.contains(&n.spelling), "{} is a word", n.spelling);
            assert!(!known.contains(&n.pronunciation));
            assert!(n.shared_attribute_count <= 2);
        }
        all.extend(nonwords);
    }
    assert!(!all.is_empty());
    let mut buf = Vec::new();
    write_nonwords(&mut buf, &all, &table).unwrap();
    assert_eq!(read_nonwords(buf.as_slice(), &table, &dict).unwrap(), all);
}

#[test]
fn trained_model_feeds_every_evaluation() {
    let (table, dict) = fixtures();
    let sentences = read_lines(open("sentences.txt")).unwrap();
    let labels = read_lines(open("labels.txt")).unwrap();
    let (pairs, _) = build_corpus(&sentences, &dict, &table, Some(&labels));
    let texts: Vec<String> = pairs.iter().map(|p| p.text.clone()).collect();
    let teacher = synthetic_teacher(&texts, 16, 9);
    let (tr, val) = split_validation(&pairs, 16, 2).unwrap();
    let tr = TrainExample::from_pairs(&tr, &teacher).unwrap();
    let val = TrainExample::from_pairs(&val, &teacher).unwrap();

    let mut cfg = StudentConfig::new(Mode::IpaTrainable, 16, 1, 2, 16);
    cfg.epochs = 3;
    cfg.learning_rate = 1e-3;
    let mut model = StudentModel::new(cfg, &table).unwrap();
    let log = train(&mut model, &tr, &val).unwrap();
    assert_eq!(log.epochs.len(), 3);
    assert!(log.epochs.iter().all(|e| e.val_mse.is_some_and(f64::is_finite)));

    let mut bytes = Vec::new();
    save_checkpoint(&model, &mut bytes).unwrap();
    let model = load_checkpoint(bytes.as_slice(), &table).unwrap();

    let space = PhonemeSpace::from_layer(&table, &model.token_layer()).unwrap();
    let report = SpaceReport::compute(&space, &table).unwrap();
    assert!(report.rows().iter().all(|(_, v)| v.is_finite()));

    let label_prons: Vec<_> = labels.iter().map(|l| dict.get(l).unwrap().clone()).collect();
    let prompts: Vec<Vec<f64>> =
        label_prons.iter().map(|p| model.encode(&prompt(&table, p).unwrap()).unwrap()).collect();
    let classes = embedded_classes(&labels, &prompts, None).unwrap();
    let vocab: HashSet<String> = dict.words().map(str::to_string).collect();
    let known: HashSet<_> = dict.pronunciations().cloned().collect();
    let nonwords = generate_nonwords("desk", &dict, &table, &SubstitutionTable::default(), &vocab, &known).unwrap();
    let r = nonword_retrieval(&nonwords, &classes, RetrievalTarget::Texts, &model, &table).unwrap();
    assert_eq!(r.items.len(), nonwords.len());
    assert_eq!(r.groups.iter().map(|g| g.count).sum::<usize>(), nonwords.len());
    assert!((0.0..=1.0).contains(&r.overall().unwrap()));

    let trial = HumanSimilarityTrial::read(open("human_kiki.tsv")).unwrap();
    let h = human_similarity_correlation(&trial, &model, &dict, &table).unwrap();
    assert_eq!(h.used, 5);
    assert_eq!(h.excluded.len(), 1);
    assert_eq!(h.excluded[0].0, "kiwi");
    assert!(h.correlation.value.abs() <= 1.0);
    assert_eq!(model.dim(), 16);
}
