//! The `sr` command line.
//!
//! Every subcommand writes a manifest next to its output recording the
//! configuration and the SHA-256 of every input and output file, so a run
//! can be checked or repeated exactly. Exit codes: 0 success, 1 usage error,
//! 2 data error.

use std::fmt::Write as _;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::conllu::{parse_conllu, serialize_conllu, UdSentence};
use crate::deptree::{references_from_text, references_to_text, shallow_transform, ShallowSentence};
use crate::eval::{evaluate, EvalMode};
use crate::linearize::{emit_training_pairs, write_pairs, PairOptions};
use crate::realize::{
    beam_realize, uncovered_nodes, FormLexicon, NGramModel, OracleScorer, Scorer, DEFAULT_BEAM, DEFAULT_LAMBDA,
    DEFAULT_ORDER,
};
use crate::synth::{
    build_synthetic_dataset, build_vocab, FilterPolicy, DEFAULT_MAX_LEN, DEFAULT_MIN_COUNT, DEFAULT_MIN_LEN,
    DEFAULT_OVERLAP,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

pub const SHALLOW_FILE: &str = "shallow.conllu";
pub const REFERENCES_FILE: &str = "references.txt";
pub const STATS_FILE: &str = "stats.txt";
pub const MANIFEST_FILE: &str = "manifest.txt";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    fn data(err: impl std::fmt::Display) -> Self {
        CliError::Data(err.to_string())
    }

    fn usage(err: impl std::fmt::Display) -> Self {
        CliError::Usage(err.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "sr", version, about = "Shallow surface realization toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Shuffle and lemmatize a gold treebank into a shallow-task dataset.
    MakeDataset(MakeDatasetArgs),
    /// Filter parsed unlabeled text and turn it into a shallow-task dataset.
    Synth(SynthArgs),
    /// Emit linearized source/target pairs for a sequence model.
    Pairs(PairsArgs),
    /// Train the interpolated n-gram scorer.
    TrainLm(TrainLmArgs),
    /// Realize shallow trees with restricted beam search.
    Realize(RealizeArgs),
    /// Score hypotheses: BLEU-4, error categories, length buckets.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct MakeDatasetArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Keep `original_id` in MISC (debugging; leaks word order).
    #[arg(long)]
    pub keep_alignment: bool,
    /// Skip malformed sentences instead of failing.
    #[arg(long)]
    pub lenient: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Parser output, CoNLL-U.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Gold CoNLL-U that defines the vocabulary.
    #[arg(long)]
    pub vocab_from: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MIN_LEN)]
    pub min_len: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_LEN)]
    pub max_len: usize,
    #[arg(long, default_value_t = DEFAULT_OVERLAP)]
    pub overlap: f64,
    #[arg(long, default_value_t = DEFAULT_MIN_COUNT)]
    pub min_count: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Compare tokens to the vocabulary after lowercasing.
    #[arg(long)]
    pub ignore_case: bool,
    /// Leave punctuation tokens out of the overlap ratio.
    #[arg(long)]
    pub skip_punct: bool,
    #[arg(long)]
    pub keep_alignment: bool,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct PairsArgs {
    /// Shallow-task CoNLL-U.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Reference sidecar, one tokenized sentence per line.
    #[arg(long)]
    pub refs: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Base name of the `.src` / `.tgt` files.
    #[arg(long, default_value = "train")]
    pub name: String,
    /// Linearizations per sentence.
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long)]
    pub scoped: bool,
    /// Append candidate forms for ambiguous lemmas; needs `--lexicon`.
    #[arg(long)]
    pub with_forms: bool,
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct TrainLmArgs {
    /// Tokenized text, one sentence per line (repeatable).
    #[arg(long)]
    pub refs: Vec<PathBuf>,
    /// CoNLL-U whose forms are used as training text (repeatable).
    #[arg(long)]
    pub conllu: Vec<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_ORDER)]
    pub order: usize,
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    pub lambda: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RealizeArgs {
    /// Shallow-task CoNLL-U.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// N-gram model from `train-lm`.
    #[arg(long, required_unless_present = "oracle")]
    pub lm: Option<PathBuf>,
    /// Gold CoNLL-U the inflection lexicon is built from.
    #[arg(long)]
    pub lexicon: PathBuf,
    #[arg(long, default_value_t = DEFAULT_BEAM)]
    pub beam: usize,
    /// Hypothesis file, one tokenized sentence per line.
    #[arg(long)]
    pub out: PathBuf,
    /// Decode with the reference oracle; needs aligned input and `--refs`.
    #[arg(long, requires = "refs")]
    pub oracle: bool,
    #[arg(long)]
    pub refs: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Hypotheses, one tokenized sentence per line.
    #[arg(long)]
    pub hyp: PathBuf,
    /// Gold CoNLL-U with forms, lemmas and UPOS.
    #[arg(long = "ref")]
    pub reference: PathBuf,
    /// Compare token lists (default).
    #[arg(long, conflicts_with = "detokenized")]
    pub tokenized: bool,
    /// Detokenize both sides before scoring.
    #[arg(long)]
    pub detokenized: bool,
    /// Gold CoNLL-U used to relate inflected forms to lemmas.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Directory for `report.txt` and `categories.tsv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = err.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(err) => {
            match &err {
                CliError::Usage(msg) => eprintln!("sr: usage error: {msg}"),
                CliError::Data(msg) => eprintln!("sr: {msg}"),
            }
            err.exit_code()
        }
    }
}

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::MakeDataset(args) => make_dataset(&args),
        Command::Synth(args) => with_jobs(args.jobs, || synth(&args)),
        Command::Pairs(args) => pairs(&args),
        Command::TrainLm(args) => train_lm(&args),
        Command::Realize(args) => with_jobs(args.jobs, || realize(&args)),
        Command::Eval(args) => with_jobs(args.jobs, || eval(&args)),
    }
}

fn with_jobs(jobs: usize, f: impl FnOnce() -> Result<()> + Send) -> Result<()> {
    if jobs == 0 {
        return Err(CliError::usage("--jobs must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(CliError::data)?;
    pool.install(f)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn read_conllu(path: &Path, strict: bool) -> Result<Vec<UdSentence>> {
    let text = read(path)?;
    let parsed = parse_conllu(&text, strict).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    if parsed.skipped > 0 {
        eprintln!("sr: {}: skipped {} malformed sentences", path.display(), parsed.skipped);
    }
    Ok(parsed.sentences)
}

fn read_shallow(path: &Path, refs: Option<&Path>) -> Result<Vec<ShallowSentence>> {
    let sentences = read_conllu(path, true)?;
    let references = match refs {
        Some(p) => {
            let r = references_from_text(&read(p)?);
            if r.len() != sentences.len() {
                return Err(CliError::Data(format!(
                    "{} has {} sentences but {} has {} lines",
                    path.display(),
                    sentences.len(),
                    p.display(),
                    r.len()
                )));
            }
            r.into_iter().map(Some).collect()
        }
        None => vec![None; sentences.len()],
    };
    sentences
        .into_iter()
        .zip(references)
        .enumerate()
        .map(|(i, (s, r))| {
            ShallowSentence::from_conllu(s, r).map_err(|e| CliError::Data(format!("sentence {}: {e}", i + 1)))
        })
        .collect()
}

fn digest(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Run record: command, configuration and file digests, in a fixed order.
struct Manifest {
    body: String,
}

impl Manifest {
    fn new(command: &str) -> Self {
        let mut body = String::new();
        let _ = writeln!(body, "command={command}");
        let _ = writeln!(body, "version={}", env!("CARGO_PKG_VERSION"));
        Manifest { body }
    }

    fn config(mut self, key: &str, value: impl std::fmt::Display) -> Self {
        let _ = writeln!(self.body, "config.{key}={value}");
        self
    }

    fn file(mut self, kind: &str, path: &Path) -> Result<Self> {
        let _ = writeln!(self.body, "{kind}.{}={}", path.display(), digest(path)?);
        Ok(self)
    }

    fn write(self, path: &Path) -> Result<()> {
        write(path, &self.body)
    }
}

fn manifest_for_file(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest");
    PathBuf::from(name)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))
}

fn write_dataset(dir: &Path, dataset: Vec<ShallowSentence>, keep_alignment: bool) -> Result<()> {
    let dataset: Vec<ShallowSentence> = if keep_alignment {
        dataset
    } else {
        dataset.into_iter().map(ShallowSentence::strip_alignment).collect()
    };
    let rows: Vec<UdSentence> = dataset.iter().map(ShallowSentence::to_conllu).collect();
    write(&dir.join(SHALLOW_FILE), &serialize_conllu(&rows))?;
    write(&dir.join(REFERENCES_FILE), &references_to_text(&dataset))
}

fn make_dataset(args: &MakeDatasetArgs) -> Result<()> {
    let gold = read_conllu(&args.input, !args.lenient)?;
    let dataset = gold
        .iter()
        .enumerate()
        .map(|(i, s)| shallow_transform(s, args.seed.wrapping_add(i as u64)).map_err(CliError::data))
        .collect::<Result<Vec<_>>>()?;
    ensure_dir(&args.out)?;
    write_dataset(&args.out, dataset, args.keep_alignment)?;
    Manifest::new("make-dataset")
        .config("seed", args.seed)
        .config("keep_alignment", args.keep_alignment)
        .config("strict", !args.lenient)
        .file("input", &args.input)?
        .file("output", &args.out.join(SHALLOW_FILE))?
        .file("output", &args.out.join(REFERENCES_FILE))?
        .write(&args.out.join(MANIFEST_FILE))
}

fn synth(args: &SynthArgs) -> Result<()> {
    let policy = FilterPolicy {
        min_len: args.min_len,
        max_len: args.max_len,
        overlap_threshold: args.overlap,
        case_sensitive: !args.ignore_case,
        count_punct: !args.skip_punct,
    };
    policy.validate().map_err(CliError::usage)?;
    let gold = read_conllu(&args.vocab_from, true)?;
    let vocab = build_vocab(gold.iter().map(|s| s.tokens.iter().map(|t| t.form.as_str())), args.min_count)
        .map_err(CliError::usage)?;
    let file = fs::File::open(&args.input).map_err(|e| CliError::Data(format!("{}: {e}", args.input.display())))?;
    let (dataset, stats) =
        build_synthetic_dataset(BufReader::new(file), &vocab, &policy, args.seed).map_err(CliError::data)?;
    ensure_dir(&args.out)?;
    write_dataset(&args.out, dataset, args.keep_alignment)?;
    write(&args.out.join(STATS_FILE), &format!("vocab_size={}\n{stats}", vocab.len()))?;
    Manifest::new("synth")
        .config("min_len", policy.min_len)
        .config("max_len", policy.max_len)
        .config("overlap", policy.overlap_threshold)
        .config("min_count", args.min_count)
        .config("case_sensitive", policy.case_sensitive)
        .config("count_punct", policy.count_punct)
        .config("seed", args.seed)
        .config("keep_alignment", args.keep_alignment)
        .file("input", &args.input)?
        .file("input", &args.vocab_from)?
        .file("output", &args.out.join(SHALLOW_FILE))?
        .file("output", &args.out.join(REFERENCES_FILE))?
        .file("output", &args.out.join(STATS_FILE))?
        .write(&args.out.join(MANIFEST_FILE))
}

fn pairs(args: &PairsArgs) -> Result<()> {
    if args.k == 0 {
        return Err(CliError::usage("--k must be at least 1"));
    }
    if args.with_forms && args.lexicon.is_none() {
        return Err(CliError::usage("--with-forms needs --lexicon"));
    }
    let dataset = read_shallow(&args.input, Some(&args.refs))?;
    let lexicon = match &args.lexicon {
        Some(p) => Some(FormLexicon::build(&read_conllu(p, true)?)),
        None => None,
    };
    let opts = PairOptions {
        linearizations: args.k,
        scoped: args.scoped,
        with_forms: args.with_forms,
        seed: args.seed,
    };
    let pairs = emit_training_pairs(&dataset, opts, lexicon.as_ref()).map_err(CliError::data)?;
    ensure_dir(&args.out)?;
    let src_path = args.out.join(format!("{}.src", args.name));
    let tgt_path = args.out.join(format!("{}.tgt", args.name));
    let (mut src, mut tgt) = (Vec::new(), Vec::new());
    write_pairs(&pairs, &mut src, &mut tgt).map_err(CliError::data)?;
    fs::write(&src_path, src).map_err(CliError::data)?;
    fs::write(&tgt_path, tgt).map_err(CliError::data)?;
    let mut manifest = Manifest::new("pairs")
        .config("k", args.k)
        .config("scoped", args.scoped)
        .config("with_forms", args.with_forms)
        .config("seed", args.seed)
        .file("input", &args.input)?
        .file("input", &args.refs)?;
    if let Some(p) = &args.lexicon {
        manifest = manifest.file("input", p)?;
    }
    manifest
        .file("output", &src_path)?
        .file("output", &tgt_path)?
        .write(&args.out.join(format!("{}.{MANIFEST_FILE}", args.name)))
}

fn train_lm(args: &TrainLmArgs) -> Result<()> {
    if args.refs.is_empty() && args.conllu.is_empty() {
        return Err(CliError::usage("give at least one --refs or --conllu input"));
    }
    let mut corpus: Vec<Vec<String>> = Vec::new();
    for p in &args.refs {
        corpus.extend(references_from_text(&read(p)?));
    }
    for p in &args.conllu {
        corpus.extend(read_conllu(p, true)?.iter().map(UdSentence::forms));
    }
    let model = NGramModel::train(&corpus, args.order, args.lambda).map_err(|e| match e {
        crate::realize::NgramError::EmptyCorpus => CliError::data(e),
        _ => CliError::usage(e),
    })?;
    write(&args.out, &model.to_text())?;
    let mut manifest = Manifest::new("train-lm")
        .config("order", args.order)
        .config("lambda", args.lambda);
    for p in args.refs.iter().chain(&args.conllu) {
        manifest = manifest.file("input", p)?;
    }
    manifest
        .file("output", &args.out)?
        .write(&manifest_for_file(&args.out))
}

fn realize(args: &RealizeArgs) -> Result<()> {
    if args.beam == 0 {
        return Err(CliError::usage("--beam must be at least 1"));
    }
    let dataset = read_shallow(&args.input, args.refs.as_deref())?;
    let lexicon = FormLexicon::build(&read_conllu(&args.lexicon, true)?);
    let model = match (&args.lm, args.oracle) {
        (Some(p), false) => Some(NGramModel::from_text(&read(p)?).map_err(CliError::data)?),
        _ => None,
    };
    let outputs: Vec<Result<(String, usize)>> = dataset
        .par_iter()
        .enumerate()
        .map(|(i, sentence)| {
            let oracle;
            let scorer: &dyn Scorer = match &model {
                Some(m) => m,
                None => {
                    oracle = OracleScorer::new(sentence)
                        .map_err(|e| CliError::Data(format!("sentence {}: {e}", i + 1)))?;
                    &oracle
                }
            };
            let result = beam_realize(sentence, scorer, args.beam, &lexicon).map_err(CliError::usage)?;
            Ok((result.tokens.join(" "), uncovered_nodes(sentence, &lexicon).len()))
        })
        .collect();
    let mut text = String::new();
    let mut uncovered = 0;
    for out in outputs {
        let (line, missing) = out?;
        text.push_str(&line);
        text.push('\n');
        if missing > 0 {
            uncovered += 1;
        }
    }
    write(&args.out, &text)?;
    if args.refs.is_some() {
        eprintln!("sr: {uncovered} sentences have reference forms missing from the lexicon");
    }
    let mut manifest = Manifest::new("realize")
        .config("beam", args.beam)
        .config("scorer", if args.oracle { "oracle" } else { "ngram" })
        .file("input", &args.input)?
        .file("input", &args.lexicon)?;
    if let Some(p) = &args.lm {
        manifest = manifest.file("input", p)?;
    }
    if let Some(p) = &args.refs {
        manifest = manifest.file("input", p)?;
    }
    manifest
        .file("output", &args.out)?
        .write(&manifest_for_file(&args.out))
}

fn eval(args: &EvalArgs) -> Result<()> {
    let mode = if args.detokenized {
        EvalMode::Detokenized
    } else {
        EvalMode::Tokenized
    };
    let hyps = references_from_text(&read(&args.hyp)?);
    let refs = read_conllu(&args.reference, true)?;
    let lexicon = match &args.lexicon {
        Some(p) => Some(FormLexicon::build(&read_conllu(p, true)?)),
        None => None,
    };
    let report = evaluate(&hyps, &refs, mode, lexicon.as_ref()).map_err(CliError::data)?;
    print!("{}", report.to_table());
    if let Some(dir) = &args.out {
        ensure_dir(dir)?;
        let report_path = dir.join("report.txt");
        let categories_path = dir.join("categories.tsv");
        write(&report_path, &report.to_kv())?;
        write(&categories_path, &report.categories_tsv())?;
        let mut manifest = Manifest::new("eval")
            .config("mode", mode.key())
            .file("input", &args.hyp)?
            .file("input", &args.reference)?;
        if let Some(p) = &args.lexicon {
            manifest = manifest.file("input", p)?;
        }
        manifest
            .file("output", &report_path)?
            .file("output", &categories_path)?
            .write(&dir.join(MANIFEST_FILE))?;
    }
    Ok(())
}
