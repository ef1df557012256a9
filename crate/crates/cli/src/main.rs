//! `ipakit` command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error.

mod manifest;

use std::collections::HashSet;
use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use ipakit::embedding::{attribute_count, FeatureMatrix, TokenLayer, WeightMode};
use ipakit::lexicon::{
    build_corpus, convert_sentence, read_lines, read_pairs, split_validation, write_pairs, zipf_filter, CorpusPair,
    CorpusReport, FrequencyTable, PronunciationDictionary,
};
use ipakit::metrics::{pca_export, PhonemeSpace, SpaceReport};
use ipakit::model::{load_checkpoint, save_checkpoint, train, Mode, StudentConfig, StudentModel, TrainExample};
use ipakit::nonword::{
    generate_nonwords, read_nonwords, starts_with_sole_consonant, write_nonwords, SubstitutionTable,
};
use ipakit::retrieval::{
    embedded_classes, human_similarity_correlation, nonword_retrieval, prompt, HumanSimilarityTrial, RetrievalTarget,
};
use ipakit::teacher::{synthetic_teacher, TeacherTable};
use ipakit::tensor::Matrix;
use ipakit::{par, AttributeTable};

use manifest::RunManifest;

const ATTR_TABLE_ENV: &str = "IPAKIT_ATTR_TABLE";

/// A problem with how the tool was invoked rather than with its inputs.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(UsageError(msg.into()).into())
}

#[derive(Parser, Debug)]
#[command(name = "ipakit", version, about = "Phonetics-aware pronunciation embeddings")]
struct Cli {
    /// Worker threads for data-parallel stages (1 = reference sequential order).
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,

    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Convert sentences to IPA pairs, dropping sentences with unknown words.
    Convert(ConvertArgs),
    /// Build a distillation corpus with single-word sentences and a validation split.
    Corpus(CorpusArgs),
    /// Generate initial-consonant substitution nonwords for class labels.
    Nonwords(NonwordArgs),
    /// Write a deterministic synthetic teacher (TEB1) for a set of texts.
    TeacherSynth(TeacherArgs),
    /// Distill a student pronunciation encoder from teacher vectors.
    Train(TrainArgs),
    /// Phoneme-space metrics (silhouette, attribute mAP, vowel rank correlation).
    EvalSpace(SpaceArgs),
    /// Nonword-to-text or nonword-to-image retrieval grouped by shared attributes.
    EvalRetrieval(RetrievalArgs),
    /// Spearman correlation between model similarities and human ratings.
    EvalHuman(HumanArgs),
    /// PCA projection of the phoneme embeddings.
    Pca(PcaArgs),
}

#[derive(Args, Debug)]
struct ConvertArgs {
    #[arg(long)]
    dict: PathBuf,
    /// Sentences, one per line.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output pairs TSV.
    #[arg(long)]
    out: PathBuf,
    /// Dropped-line report (default: <out>.dropped.tsv).
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CorpusArgs {
    #[arg(long)]
    dict: PathBuf,
    #[arg(long = "in")]
    input: PathBuf,
    /// Words appended as one-word sentences.
    #[arg(long)]
    wordlist: Option<PathBuf>,
    /// Training pairs TSV.
    #[arg(long)]
    out: PathBuf,
    /// Validation pairs TSV; without it nothing is held out.
    #[arg(long)]
    val_out: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    val_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct NonwordArgs {
    #[arg(long)]
    dict: PathBuf,
    /// Class labels, one per line.
    #[arg(long)]
    labels: PathBuf,
    /// Existing-word list; defaults to the dictionary's words.
    #[arg(long)]
    wordlist: Option<PathBuf>,
    /// Zipf table; labels below --zipf are skipped.
    #[arg(long)]
    freq: Option<PathBuf>,
    #[arg(long, default_value_t = 3.0)]
    zipf: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct TeacherArgs {
    /// Texts, one per line.
    #[arg(long = "in", conflicts_with = "corpus")]
    input: Option<PathBuf>,
    /// Pairs TSV whose texts are embedded.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long, default_value_t = 512)]
    dim: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    IpaFrozen,
    IpaTrainable,
    Baseline,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::IpaFrozen => Mode::IpaFrozen,
            ModeArg::IpaTrainable => Mode::IpaTrainable,
            ModeArg::Baseline => Mode::Baseline,
        }
    }
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long, value_enum)]
    mode: ModeArg,
    #[arg(long)]
    teacher: PathBuf,
    /// Training pairs TSV.
    #[arg(long)]
    corpus: PathBuf,
    /// Validation pairs TSV.
    #[arg(long)]
    val: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 50)]
    epochs: usize,
    #[arg(long, default_value_t = 5e-5)]
    lr: f64,
    #[arg(long, default_value_t = 32)]
    batch: usize,
    #[arg(long, default_value_t = 64)]
    d_model: usize,
    #[arg(long, default_value_t = 2)]
    layers: usize,
    #[arg(long, default_value_t = 4)]
    heads: usize,
    #[arg(long, default_value_t = 4)]
    ffn_mult: usize,
    #[arg(long, default_value_t = 77)]
    max_len: usize,
    /// Checkpoint output (MDL1).
    #[arg(long, default_value = "model.bin")]
    out: PathBuf,
    /// Per-epoch training log TSV.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SpaceSource {
    #[arg(long, required_unless_present = "identity")]
    checkpoint: Option<PathBuf>,
    /// Use the raw attribute vectors (W = identity) instead of a checkpoint.
    #[arg(long, conflicts_with = "checkpoint")]
    identity: bool,
}

#[derive(Args, Debug)]
struct SpaceArgs {
    #[command(flatten)]
    source: SpaceSource,
    /// Metric report TSV; a text summary is printed either way.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PcaArgs {
    #[command(flatten)]
    source: SpaceSource,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TargetArg {
    Texts,
    Images,
}

#[derive(Args, Debug)]
struct RetrievalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    dict: PathBuf,
    /// Class labels, one per line.
    #[arg(long)]
    labels: PathBuf,
    /// Nonword TSV from `nonwords`.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = TargetArg::Texts)]
    target: TargetArg,
    /// Image embeddings (TEB1) keyed "label/index".
    #[arg(long)]
    images: Option<PathBuf>,
    /// Recall cutoff for image retrieval.
    #[arg(long, default_value_t = 50)]
    k: usize,
    #[arg(long)]
    report: PathBuf,
}

#[derive(Args, Debug)]
struct HumanArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    dict: PathBuf,
    /// Trial TSV: target, comparison, score.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    report: PathBuf,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("{}: cannot open", path.display()))?))
}

fn write_file(path: &Path, write: impl FnOnce(&mut Vec<u8>) -> ipakit::Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    write(&mut buf).with_context(|| format!("{}: cannot serialize", path.display()))?;
    fs::write(path, buf).with_context(|| format!("{}: cannot write", path.display()))
}

struct Session {
    table: AttributeTable,
    table_path: Option<PathBuf>,
}

impl Session {
    fn load() -> Result<Self> {
        match std::env::var_os(ATTR_TABLE_ENV) {
            Some(p) => {
                let path = PathBuf::from(p);
                let table = AttributeTable::from_tsv(open(&path)?).with_context(|| format!("{}", path.display()))?;
                Ok(Self { table, table_path: Some(path) })
            }
            None => Ok(Self { table: AttributeTable::english(), table_path: None }),
        }
    }

    fn manifest(&self, command: &str) -> RunManifest {
        let mut m = RunManifest::new(command);
        if let Some(p) = &self.table_path {
            m.input(p);
        }
        m
    }

    fn dictionary(&self, path: &Path) -> Result<PronunciationDictionary> {
        let (dict, rejected) =
            PronunciationDictionary::load(open(path)?, &self.table).with_context(|| format!("{}", path.display()))?;
        for r in &rejected {
            log::warn!("{}:{}: rejected {:?}: {}", path.display(), r.line, r.word, r.error);
        }
        Ok(dict)
    }

    fn lines(&self, path: &Path) -> Result<Vec<String>> {
        read_lines(open(path)?).with_context(|| format!("{}", path.display()))
    }

    fn pairs(&self, path: &Path) -> Result<Vec<CorpusPair>> {
        read_pairs(open(path)?, &self.table).with_context(|| format!("{}", path.display()))
    }

    fn teacher(&self, path: &Path) -> Result<TeacherTable> {
        TeacherTable::read(open(path)?).with_context(|| format!("{}", path.display()))
    }

    fn model(&self, path: &Path) -> Result<StudentModel> {
        load_checkpoint(open(path)?, &self.table).with_context(|| format!("{}", path.display()))
    }

    fn space(&self, source: &SpaceSource, m: &mut RunManifest) -> Result<PhonemeSpace> {
        let layer = match &source.checkpoint {
            Some(path) => {
                m.input(path);
                self.model(path)?.token_layer()
            }
            None => {
                m.flag("--identity", true);
                let n = attribute_count(&self.table);
                TokenLayer::Attribute(FeatureMatrix::from_matrix(Matrix::identity(n), WeightMode::Frozen))
            }
        };
        Ok(PhonemeSpace::from_layer(&self.table, &layer)?)
    }
}

fn write_dropped(path: &Path, report: &CorpusReport) -> Result<()> {
    write_file(path, |w| {
        writeln!(w, "line\treason")?;
        for (line, failure) in &report.failures {
            writeln!(w, "{line}\t{failure}")?;
        }
        Ok(())
    })
}

fn default_report(out: &Path, suffix: &str) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(suffix);
    out.with_file_name(name)
}

fn cmd_convert(ctx: &Session, a: &ConvertArgs) -> Result<RunManifest> {
    let mut m = ctx.manifest("convert");
    m.input(&a.dict).input(&a.input);
    let dict = ctx.dictionary(&a.dict)?;
    let sentences = ctx.lines(&a.input)?;
    let (pairs, report) = build_corpus(&sentences, &dict, &ctx.table, None);
    let report_path = a.report.clone().unwrap_or_else(|| default_report(&a.out, ".dropped.tsv"));
    write_file(&a.out, |w| write_pairs(w, &pairs, &ctx.table))?;
    write_dropped(&report_path, &report)?;
    eprintln!("kept {} sentences, dropped {}", report.kept, report.dropped);
    m.output(&a.out).output(&report_path);
    Ok(m)
}

fn cmd_corpus(ctx: &Session, a: &CorpusArgs) -> Result<RunManifest> {
    let mut m = ctx.manifest("corpus");
    m.seed = Some(a.seed);
    m.input(&a.dict).input(&a.input);
    let dict = ctx.dictionary(&a.dict)?;
    let sentences = ctx.lines(&a.input)?;
    let words = match &a.wordlist {
        Some(p) => {
            m.input(p);
            Some(ctx.lines(p)?)
        }
        None => None,
    };
    let (pairs, report) = build_corpus(&sentences, &dict, &ctx.table, words.as_deref());
    let (train_pairs, val_pairs) = match &a.val_out {
        Some(_) => {
            if a.val_size > pairs.len() {
                return usage(format!("--val-size {} exceeds the {} available pairs", a.val_size, pairs.len()));
            }
            m.flag("--val-size", a.val_size);
            split_validation(&pairs, a.val_size, a.seed)?
        }
        None => (pairs, Vec::new()),
    };
    write_file(&a.out, |w| write_pairs(w, &train_pairs, &ctx.table))?;
    m.output(&a.out);
    if let Some(v) = &a.val_out {
        write_file(v, |w| write_pairs(w, &val_pairs, &ctx.table))?;
        m.output(v);
    }
    let report_path = a.report.clone().unwrap_or_else(|| default_report(&a.out, ".dropped.tsv"));
    write_dropped(&report_path, &report)?;
    m.output(&report_path);
    eprintln!(
        "kept {} sentences, dropped {}, added {} single words ({} missing); {} train / {} validation",
        report.kept,
        report.dropped,
        report.single_words_added,
        report.single_words_missing,
        train_pairs.len(),
        val_pairs.len()
    );
    Ok(m)
}

fn cmd_nonwords(ctx: &Session, a: &NonwordArgs) -> Result<RunManifest> {
    let mut m = ctx.manifest("nonwords");
    m.input(&a.dict).input(&a.labels);
    let dict = ctx.dictionary(&a.dict)?;
    let mut labels = ctx.lines(&a.labels)?;
    if let Some(p) = &a.freq {
        m.input(p).flag("--zipf", a.zipf);
        let freq = FrequencyTable::load(open(p)?).with_context(|| format!("{}", p.display()))?;
        labels = zipf_filter(&labels, &freq, a.zipf);
    }
    let vocab: HashSet<String> = match &a.wordlist {
        Some(p) => {
            m.input(p);
            ctx.lines(p)?.into_iter().map(|w| w.to_lowercase()).collect()
        }
        None => dict.words().map(str::to_string).collect(),
    };
    let known: HashSet<_> = dict.pronunciations().cloned().collect();
    let subs = SubstitutionTable::default();
    let mut out = Vec::new();
    let mut used = 0;
    for label in &labels {
        let Some(pron) = dict.get(label) else {
            log::warn!("skipping {label:?}: not a single dictionary word");
            continue;
        };
        if !starts_with_sole_consonant(pron, &ctx.table)? {
            log::info!("skipping {label:?}: does not start with a sole consonant");
            continue;
        }
        used += 1;
        out.extend(generate_nonwords(label, &dict, &ctx.table, &subs, &vocab, &known)?);
    }
    write_file(&a.out, |w| write_nonwords(w, &out, &ctx.table))?;
    eprintln!("{} nonwords from {used} of {} labels", out.len(), labels.len());
    m.output(&a.out);
    Ok(m)
}

fn cmd_teacher(ctx: &Session, a: &TeacherArgs) -> Result<RunManifest> {
    let mut m = ctx.manifest("teacher-synth");
    m.seed = Some(a.seed);
    m.flag("--dim", a.dim);
    if a.dim == 0 {
        return usage("--dim must be positive");
    }
    let texts: Vec<String> = match (&a.input, &a.corpus) {
        (Some(p), None) => {
            m.input(p);
            ctx.lines(p)?
        }
        (None, Some(p)) => {
            m.input(p);
            ctx.pairs(p)?.into_iter().map(|pair| pair.text).collect()
        }
        _ => return usage("teacher-synth needs --in or --corpus"),
    };
    let teacher = synthetic_teacher(&texts, a.dim, a.seed);
    write_file(&a.out, |w| teacher.write(w).map(|_| ()))?;
    m.output(&a.out);
    Ok(m)
}

fn cmd_train(ctx: &Session, a: &TrainArgs) -> Result<RunManifest> {
    let mut m = ctx.manifest("train");
    m.seed = Some(a.seed);
    m.flag("--mode", Mode::from(a.mode).name())
        .flag("--epochs", a.epochs)
        .flag("--lr", a.lr)
        .flag("--batch", a.batch)
        .flag("--d-model", a.d_model)
        .flag("--layers", a.layers)
        .flag("--heads", a.heads)
        .flag("--ffn-mult", a.ffn_mult)
        .flag("--max-len", a.max_len);
    m.input(&a.teacher).input(&a.corpus);
    let teacher = ctx.teacher(&a.teacher)?;
    let mut cfg = StudentConfig::new(a.mode.into(), a.d_model, a.layers, a.heads, teacher.dim());
    cfg.seed = a.seed;
    cfg.epochs = a.epochs;
    cfg.learning_rate = a.lr;
    cfg.batch_size = a.batch;
    cfg.ffn_mult = a.ffn_mult;
    cfg.max_len = a.max_len;
    if let Err(e) = cfg.validate() {
        return usage(e.to_string());
    }
    if !(a.lr.is_finite() && a.lr >= 0.0) {
        return usage("--lr must be a non-negative number");
    }
    let train_set = TrainExample::from_pairs(&ctx.pairs(&a.corpus)?, &teacher)?;
    let val_set = match &a.val {
        Some(p) => {
            m.input(p);
            TrainExample::from_pairs(&ctx.pairs(p)?, &teacher)?
        }
        None => Vec::new(),
    };
    let mut model = StudentModel::new(cfg, &ctx.table)?;
    let log = train(&mut model, &train_set, &val_set)?;
    write_file(&a.out, |w| save_checkpoint(&model, w))?;
    m.output(&a.out);
    if let Some(r) = &a.report {
        write_file(r, |w| log.write_tsv(w))?;
        m.output(r);
    }
    if let Some(last) = log.epochs.last() {
        eprintln!("{} steps; final train_mse {:.6}", log.steps, last.train_mse);
    }
    Ok(m)
}

fn cmd_eval_space(ctx: &Session, a: &SpaceArgs) -> Result<RunManifest> {
    let mut m = ctx.manifest("eval-space");
    let space = ctx.space(&a.source, &mut m)?;
    let report = SpaceReport::compute(&space, &ctx.table)?;
    for (name, value) in report.rows() {
        println!("{name:<22}{value:>10.4}");
    }
    if let Some(r) = &a.report {
        write_file(r, |w| report.write_tsv(w))?;
        m.output(r);
    }
    Ok(m)
}

fn cmd_pca(ctx: &Session, a: &PcaArgs) -> Result<RunManifest> {
    let mut m = ctx.manifest("pca");
    m.flag("--k", a.k);
    let space = ctx.space(&a.source, &mut m)?;
    let (result, rows) = pca_export(&space, &ctx.table, a.k)?;
    if result.rank_deficient {
        log::warn!("embedding space has rank below {}; trailing components are degenerate", a.k);
    }
    write_file(&a.out, |w| {
        let variances: Vec<String> = result.explained_variance.iter().map(|v| format!("{v:.6}")).collect();
        writeln!(w, "# explained_variance\t{}", variances.join("\t"))?;
        let pcs: Vec<String> = (1..=a.k).map(|i| format!("pc{i}")).collect();
        writeln!(w, "symbol\tclass\t{}", pcs.join("\t"))?;
        for (symbol, class, coords) in &rows {
            let c: Vec<String> = coords.iter().map(|v| format!("{v:.6}")).collect();
            writeln!(w, "{symbol}\t{class}\t{}", c.join("\t"))?;
        }
        Ok(())
    })?;
    m.output(&a.out);
    Ok(m)
}

fn cmd_eval_retrieval(ctx: &Session, a: &RetrievalArgs) -> Result<RunManifest> {
    let mut m = ctx.manifest("eval-retrieval");
    m.input(&a.checkpoint).input(&a.dict).input(&a.labels).input(&a.input);
    let target = match a.target {
        TargetArg::Texts => RetrievalTarget::Texts,
        TargetArg::Images => {
            if a.images.is_none() {
                return usage("--target images needs --images");
            }
            m.flag("--k", a.k);
            RetrievalTarget::Images { k: a.k }
        }
    };
    m.flag("--target", format!("{:?}", a.target).to_lowercase());
    let model = ctx.model(&a.checkpoint)?;
    let dict = ctx.dictionary(&a.dict)?;
    let labels = ctx.lines(&a.labels)?;
    let prompts = labels
        .iter()
        .map(|l| {
            let pron = convert_sentence(l, &dict, &ctx.table)
                .map_err(|f| anyhow::anyhow!("{}: label {l:?}: {f}", a.labels.display()))?;
            Ok(prompt(&ctx.table, &pron)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let prompt_vecs = par::map(&prompts, |p| model.encode(p)).into_iter().collect::<ipakit::Result<Vec<_>>>()?;
    let images = match &a.images {
        Some(p) => {
            m.input(p);
            Some(ctx.teacher(p)?)
        }
        None => None,
    };
    let classes = embedded_classes(&labels, &prompt_vecs, images.as_ref())?;
    let nonwords =
        read_nonwords(open(&a.input)?, &ctx.table, &dict).with_context(|| format!("{}", a.input.display()))?;
    let report = nonword_retrieval(&nonwords, &classes, target, &model, &ctx.table)?;
    write_file(&a.report, |w| report.write_tsv(w))?;
    if let Some(v) = report.overall() {
        eprintln!("{} over {} nonwords: {v:.4}", report.metric_name(), nonwords.len());
    }
    m.output(&a.report);
    Ok(m)
}

fn cmd_eval_human(ctx: &Session, a: &HumanArgs) -> Result<RunManifest> {
    let mut m = ctx.manifest("eval-human");
    m.input(&a.checkpoint).input(&a.dict).input(&a.input);
    let model = ctx.model(&a.checkpoint)?;
    let dict = ctx.dictionary(&a.dict)?;
    let trial = HumanSimilarityTrial::read(open(&a.input)?).with_context(|| format!("{}", a.input.display()))?;
    let result = human_similarity_correlation(&trial, &model, &dict, &ctx.table)?;
    write_file(&a.report, |w| {
        writeln!(w, "metric\tvalue")?;
        writeln!(w, "spearman\t{:.6}", result.correlation.value)?;
        writeln!(w, "degenerate\t{}", result.correlation.degenerate)?;
        writeln!(w, "used\t{}", result.used)?;
        writeln!(w, "excluded\t{}", result.excluded.len())?;
        for (word, why) in &result.excluded {
            writeln!(w, "excluded_word\t{word}: {why}")?;
        }
        Ok(())
    })?;
    eprintln!("spearman {:.4} over {} words (target {:?})", result.correlation.value, result.used, trial.target);
    m.output(&a.report);
    Ok(m)
}

fn configure_jobs(jobs: Option<usize>) -> Result<()> {
    let Some(n) = jobs else { return Ok(()) };
    if n == 0 {
        return usage("--jobs must be at least 1");
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("cannot start worker pool")?;
    #[cfg(not(feature = "parallel"))]
    if n > 1 {
        log::warn!("built without the parallel feature; --jobs {n} runs sequentially");
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    configure_jobs(cli.jobs)?;
    let ctx = Session::load()?;
    let manifest = match &cli.command {
        Command::Convert(a) => cmd_convert(&ctx, a)?,
        Command::Corpus(a) => cmd_corpus(&ctx, a)?,
        Command::Nonwords(a) => cmd_nonwords(&ctx, a)?,
        Command::TeacherSynth(a) => cmd_teacher(&ctx, a)?,
        Command::Train(a) => cmd_train(&ctx, a)?,
        Command::EvalSpace(a) => cmd_eval_space(&ctx, a)?,
        Command::EvalRetrieval(a) => cmd_eval_retrieval(&ctx, a)?,
        Command::EvalHuman(a) => cmd_eval_human(&ctx, a)?,
        Command::Pca(a) => cmd_pca(&ctx, a)?,
    };
    if !manifest.outputs.is_empty() {
        let path = manifest.write()?;
        log::info!("manifest written to {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
