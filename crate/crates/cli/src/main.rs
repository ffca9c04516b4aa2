//! Command-line pipeline: extract edits, build pattern pools, augment
//! corpora, compute pool metrics, and score corrections.
//!
//! Every subcommand logs its fully resolved configuration (seed included) as
//! one JSON line on stderr before doing any work, writes machine-readable
//! results to stdout or `--out`, and on failure prints a JSON error object to
//! stderr and exits nonzero. Options may also be given through `--config
//! FILE` (a JSON object keyed by the long option names with underscores);
//! explicit flags override the file.

mod stream;

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use gecaug::{
    affinity_with, deserialize_pool, diversity, emit_m2, extract_edits_with, mix_seed, parse_m2,
    score_corpus, serialize_pool, AugmentChain, AugmentSpec, AugmentedSample, CandidateSource,
    CorpusAugmenter, DirectNoiseParams, MergePolicy, Method, MixEditOptions, ParallelSample,
    PatternNoiseParams, PatternPool, Sentence, SupportMode, Vocabulary, MASK_TOKEN,
};

use stream::{CorpusStream, SampleReader};

const BATCH_SIZE: usize = 8192;

#[derive(Parser)]
#[command(
    name = "gecaug",
    version,
    about = "Edit-based data augmentation pipeline for GEC corpora"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Extract edits from a corpus and write an annotated file
    Extract(ExtractArgs),
    /// Build an error-pattern pool from a corpus
    BuildPool(BuildPoolArgs),
    /// Generate augmented corpora, one output file per epoch
    Augment(AugmentArgs),
    /// Affinity between two pools, or diversity of one pool
    Metrics(MetricsArgs),
    /// Score hypothesis corrections against annotated references
    Score(ScoreArgs),
    /// Summary statistics for a corpus or a pool
    Stats(StatsArgs),
}

/// Corpus inputs shared by several subcommands; files concatenate in the
/// order annotated, TSV, then paired text.
#[derive(Args, Clone, Default)]
struct InputArgs {
    /// Annotated corpus file(s) (S/A blocks)
    #[arg(long = "m2", value_name = "FILE")]
    m2: Vec<PathBuf>,
    /// Parallel TSV file(s): `source<TAB>target` per line
    #[arg(long, value_name = "FILE")]
    tsv: Vec<PathBuf>,
    /// Source-side text file, one tokenized sentence per line
    #[arg(long, requires = "tgt", value_name = "FILE")]
    src: Option<PathBuf>,
    /// Target-side text file aligned with --src
    #[arg(long, requires = "src", value_name = "FILE")]
    tgt: Option<PathBuf>,
}

impl InputArgs {
    fn merge_config(&mut self, cfg: &CommonConfig) {
        if self.m2.is_empty() {
            if let Some(m2) = &cfg.m2 {
                self.m2 = m2.clone();
            }
        }
        if self.tsv.is_empty() {
            if let Some(tsv) = &cfg.tsv {
                self.tsv = tsv.clone();
            }
        }
        if self.src.is_none() {
            self.src = cfg.src.clone();
        }
        if self.tgt.is_none() {
            self.tgt = cfg.tgt.clone();
        }
    }

    fn open(&self) -> Result<CorpusStream> {
        let mut readers = Vec::new();
        for path in &self.m2 {
            readers.push(SampleReader::m2(path)?);
        }
        for path in &self.tsv {
            readers.push(SampleReader::tsv(path)?);
        }
        if let (Some(src), Some(tgt)) = (&self.src, &self.tgt) {
            readers.push(SampleReader::paired(src, tgt)?);
        }
        if readers.is_empty() {
            bail!("no input given; use --m2, --tsv, or --src/--tgt");
        }
        Ok(CorpusStream::new(readers))
    }

    fn describe(&self) -> serde_json::Value {
        json!({
            "m2": self.m2,
            "tsv": self.tsv,
            "src": self.src,
            "tgt": self.tgt,
        })
    }
}

/// Input keys accepted in every `--config` file.
#[derive(Deserialize, Default)]
struct CommonConfig {
    m2: Option<Vec<PathBuf>>,
    tsv: Option<Vec<PathBuf>>,
    src: Option<PathBuf>,
    tgt: Option<PathBuf>,
}

fn load_config<T: for<'de> Deserialize<'de> + Default>(path: &Option<PathBuf>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text =
                fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", p.display()))
        }
    }
}

fn log_header(command: &str, resolved: serde_json::Value) {
    eprintln!("{}", json!({ "run": { "command": command }, "config": resolved }));
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Extract(args) => cmd_extract(args),
        Command::BuildPool(args) => cmd_build_pool(args),
        Command::Augment(args) => cmd_augment(args),
        Command::Metrics(args) => cmd_metrics(args),
        Command::Score(args) => cmd_score(args),
        Command::Stats(args) => cmd_stats(args),
    };
    if let Err(err) = result {
        eprintln!("{}", json!({ "error": format!("{err:#}") }));
        std::process::exit(1);
    }
}

// ---------------------------------------------------------------------------
// extract
// ---------------------------------------------------------------------------

#[derive(Args)]
struct ExtractArgs {
    #[command(flatten)]
    inputs: InputArgs,
    /// JSON config file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Emit one edit per alignment operation instead of merging runs
    #[arg(long)]
    no_merge: bool,
    /// Output file
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
struct ExtractConfig {
    #[serde(flatten)]
    inputs: CommonConfig,
    no_merge: Option<bool>,
    out: Option<PathBuf>,
}

fn cmd_extract(mut args: ExtractArgs) -> Result<()> {
    let cfg: ExtractConfig = load_config(&args.config)?;
    args.inputs.merge_config(&cfg.inputs);
    let no_merge = args.no_merge || cfg.no_merge.unwrap_or(false);
    let out = args
        .out
        .or(cfg.out)
        .ok_or_else(|| anyhow!("extract requires --out"))?;
    let policy = if no_merge { MergePolicy::PerOp } else { MergePolicy::MaximalRuns };
    log_header(
        "extract",
        json!({ "inputs": args.inputs.describe(), "no_merge": no_merge, "out": out }),
    );

    let mut reader = args.inputs.open()?;
    let mut writer = BufWriter::new(
        fs::File::create(&out).with_context(|| format!("creating {}", out.display()))?,
    );
    let mut first = true;
    let mut count = 0usize;
    loop {
        let mut batch = reader.next_batch(BATCH_SIZE)?;
        if batch.is_empty() {
            break;
        }
        for sample in &mut batch {
            let edits = extract_edits_with(&sample.source, &sample.target, policy);
            sample.gold_edits = Some(edits);
        }
        count += batch.len();
        let text = emit_m2(&batch)?;
        if !first && !text.is_empty() {
            writer.write_all(b"\n")?;
        }
        writer.write_all(text.as_bytes())?;
        first = false;
    }
    writer.flush()?;
    eprintln!("{}", json!({ "written": out, "samples": count }));
    Ok(())
}

// ---------------------------------------------------------------------------
// build-pool
// ---------------------------------------------------------------------------

#[derive(Args)]
struct BuildPoolArgs {
    #[command(flatten)]
    inputs: InputArgs,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Extract one pattern per alignment operation instead of merged runs
    #[arg(long)]
    no_merge: bool,
    /// Output pool file (JSON Lines)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
struct BuildPoolConfig {
    #[serde(flatten)]
    inputs: CommonConfig,
    no_merge: Option<bool>,
    out: Option<PathBuf>,
}

fn cmd_build_pool(mut args: BuildPoolArgs) -> Result<()> {
    let cfg: BuildPoolConfig = load_config(&args.config)?;
    args.inputs.merge_config(&cfg.inputs);
    let no_merge = args.no_merge || cfg.no_merge.unwrap_or(false);
    let out = args
        .out
        .or(cfg.out)
        .ok_or_else(|| anyhow!("build-pool requires --out"))?;
    log_header(
        "build-pool",
        json!({ "inputs": args.inputs.describe(), "no_merge": no_merge, "out": out }),
    );

    let policy = if no_merge { MergePolicy::PerOp } else { MergePolicy::MaximalRuns };
    let mut reader = args.inputs.open()?;
    let mut pool = PatternPool::new();
    let mut samples = 0usize;
    loop {
        let batch = reader.next_batch(BATCH_SIZE)?;
        if batch.is_empty() {
            break;
        }
        samples += batch.len();
        for sample in &batch {
            // Gold edits are used as-is; unannotated pairs are extracted.
            match (&sample.gold_edits, no_merge) {
                (Some(edits), false) => {
                    for e in edits {
                        pool.add(&e.src_tokens, &e.tgt_tokens)?;
                    }
                }
                _ => {
                    let edits = extract_edits_with(&sample.source, &sample.target, policy);
                    for e in &edits {
                        pool.add(&e.src_tokens, &e.tgt_tokens)?;
                    }
                }
            }
        }
    }
    fs::write(&out, serialize_pool(&pool)).with_context(|| format!("writing {}", out.display()))?;
    eprintln!(
        "{}",
        json!({ "written": out, "samples": samples, "patterns": pool.len(), "grand_total": pool.grand_total() })
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// augment
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodName {
    Dn,
    Pn,
    Mixedit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Tsv,
    Jsonl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CandidateSourceArg {
    Pool,
    RandomMask,
}

#[derive(Args)]
struct AugmentArgs {
    #[command(flatten)]
    inputs: InputArgs,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Single augmenter: dn, pn, or mixedit
    #[arg(long, value_enum, conflicts_with = "chain")]
    method: Option<MethodName>,
    /// Comma-separated augmenter chain applied left to right, e.g. mixedit,pn
    #[arg(long)]
    chain: Option<String>,
    /// Pattern pool file (required for pn and mixedit)
    #[arg(long)]
    pool: Option<PathBuf>,
    /// Base seed; all randomness derives from (seed, epoch, index)
    #[arg(long)]
    seed: Option<u64>,
    /// Number of epochs; each writes `<out>.epoch<N>.<ext>`
    #[arg(long)]
    epochs: Option<u64>,
    /// Worker threads (output bytes are invariant to this)
    #[arg(long)]
    workers: Option<usize>,
    /// Augmented copies per input sample
    #[arg(long)]
    multiplicity: Option<u64>,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    /// dn: masking probability
    #[arg(long)]
    mu_mask: Option<f64>,
    /// dn: deletion probability
    #[arg(long)]
    mu_del: Option<f64>,
    /// dn: insertion probability
    #[arg(long)]
    mu_ins: Option<f64>,
    /// dn: vocabulary file (token, or token<TAB>count, per line); derived
    /// from the corpus target side when omitted
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Mask token used by dn and the mixedit random-mask ablation
    #[arg(long)]
    mask_token: Option<String>,
    /// pn: number of injection rounds
    #[arg(long)]
    pn_rounds: Option<u64>,
    /// pn: longest segment matched against the pool
    #[arg(long)]
    pn_max_ngram: Option<usize>,
    /// mixedit: candidate source (pool, or random-mask for the ablation)
    #[arg(long, value_enum)]
    candidate_source: Option<CandidateSourceArg>,
    /// mixedit: drop the original error form from the candidate draw
    #[arg(long)]
    exclude_original: bool,
    /// Output path prefix
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct AugmentConfig {
    #[serde(flatten)]
    inputs: CommonConfig,
    method: Option<String>,
    chain: Option<String>,
    pool: Option<PathBuf>,
    seed: Option<u64>,
    epochs: Option<u64>,
    workers: Option<usize>,
    multiplicity: Option<u64>,
    format: Option<String>,
    mu_mask: Option<f64>,
    mu_del: Option<f64>,
    mu_ins: Option<f64>,
    vocab: Option<PathBuf>,
    mask_token: Option<String>,
    pn_rounds: Option<u64>,
    pn_max_ngram: Option<usize>,
    candidate_source: Option<String>,
    exclude_original: Option<bool>,
    out: Option<PathBuf>,
}

/// One augmented line in JSONL output.
#[derive(Serialize)]
struct JsonlRecord<'a> {
    source: String,
    target: String,
    method: &'a str,
    epoch: u64,
    index: u64,
    seed: u64,
}

fn cmd_augment(mut args: AugmentArgs) -> Result<()> {
    let cfg: AugmentConfig = load_config(&args.config)?;
    args.inputs.merge_config(&cfg.inputs);

    let chain_names: Vec<String> = match (&args.method, &args.chain) {
        (Some(m), None) => vec![format!("{m:?}").to_lowercase()],
        (None, Some(chain)) => chain.split(',').map(|s| s.trim().to_string()).collect(),
        (None, None) => match (&cfg.method, &cfg.chain) {
            (Some(m), None) => vec![m.clone()],
            (None, Some(c)) => c.split(',').map(|s| s.trim().to_string()).collect(),
            (Some(_), Some(_)) => bail!("config sets both method and chain"),
            (None, None) => bail!("augment requires --method or --chain"),
        },
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };
    let seed = args
        .seed
        .or(cfg.seed)
        .ok_or_else(|| anyhow!("augment requires --seed"))?;
    let epochs = args.epochs.or(cfg.epochs).unwrap_or(1);
    let workers = args.workers.or(cfg.workers).unwrap_or(1);
    let multiplicity = args.multiplicity.or(cfg.multiplicity).unwrap_or(1);
    let format = args.format.unwrap_or(match cfg.format.as_deref() {
        Some("jsonl") => OutputFormat::Jsonl,
        Some("tsv") | None => OutputFormat::Tsv,
        Some(other) => bail!("unknown format {other:?}"),
    });
    let pool_path = args.pool.or(cfg.pool);
    let out = args
        .out
        .or(cfg.out)
        .ok_or_else(|| anyhow!("augment requires --out"))?;
    let mask_token = args
        .mask_token
        .or(cfg.mask_token)
        .unwrap_or_else(|| MASK_TOKEN.to_string());
    let mu_mask = args.mu_mask.or(cfg.mu_mask).unwrap_or(0.3);
    let mu_del = args.mu_del.or(cfg.mu_del).unwrap_or(0.1);
    let mu_ins = args.mu_ins.or(cfg.mu_ins).unwrap_or(0.1);
    let vocab_path = args.vocab.or(cfg.vocab);
    let pn_rounds = args.pn_rounds.or(cfg.pn_rounds).unwrap_or(1);
    let pn_max_ngram = args.pn_max_ngram.or(cfg.pn_max_ngram).unwrap_or(4);
    let candidate_source = match args.candidate_source {
        Some(CandidateSourceArg::Pool) => CandidateSource::Pool,
        Some(CandidateSourceArg::RandomMask) => CandidateSource::RandomMask,
        None => match cfg.candidate_source.as_deref() {
            Some("random_mask") | Some("random-mask") => CandidateSource::RandomMask,
            Some("pool") | None => CandidateSource::Pool,
            Some(other) => bail!("unknown candidate source {other:?}"),
        },
    };
    let include_original = !(args.exclude_original || cfg.exclude_original.unwrap_or(false));

    log_header(
        "augment",
        json!({
            "inputs": args.inputs.describe(),
            "chain": chain_names,
            "pool": pool_path,
            "seed": seed,
            "epochs": epochs,
            "workers": workers,
            "multiplicity": multiplicity,
            "format": match format { OutputFormat::Tsv => "tsv", OutputFormat::Jsonl => "jsonl" },
            "mu_mask": mu_mask,
            "mu_del": mu_del,
            "mu_ins": mu_ins,
            "vocab": vocab_path,
            "mask_token": mask_token,
            "pn_rounds": pn_rounds,
            "pn_max_ngram": pn_max_ngram,
            "candidate_source": match candidate_source {
                CandidateSource::Pool => "pool",
                CandidateSource::RandomMask => "random_mask",
            },
            "include_original": include_original,
            "out": out,
        }),
    );

    let pool = match &pool_path {
        Some(path) => Some(load_pool(path)?),
        None => None,
    };

    if chain_names.iter().any(|n| n == "dn") && mu_mask == 0.0 && mu_del == 0.0 && mu_ins == 0.0 {
        eprintln!(
            "{}",
            json!({ "warning": "all dn probabilities are zero; dn will copy its input unchanged" })
        );
    }

    let needs_vocab = chain_names.iter().any(|n| n == "dn") && mu_ins > 0.0;
    let vocab = if let Some(path) = &vocab_path {
        load_vocab(path)?
    } else if needs_vocab {
        derive_vocab(&args.inputs)?
    } else {
        Vocabulary::default()
    };

    let dn_params = DirectNoiseParams {
        mask_prob: mu_mask,
        delete_prob: mu_del,
        insert_prob: mu_ins,
        mask_token: mask_token.clone(),
        vocab,
    };
    let pn_params = PatternNoiseParams {
        rounds: pn_rounds,
        max_ngram: pn_max_ngram,
    };
    let mixedit_options = MixEditOptions {
        candidate_source,
        include_original,
        mask_token,
    };

    // Chain element k derives its seed stream as mix_seed(seed, k, 0).
    let mut specs = Vec::new();
    for (k, name) in chain_names.iter().enumerate() {
        let method = match name.as_str() {
            "dn" => Method::DirectNoise(dn_params.clone()),
            "pn" => Method::PatternNoise(pn_params.clone()),
            "mixedit" => Method::MixEdit(mixedit_options.clone()),
            other => bail!("unknown augmenter {other:?} (expected dn, pn, or mixedit)"),
        };
        specs.push(AugmentSpec::new(method, mix_seed(seed, k as u64, 0))?);
    }
    let chain = AugmentChain::new(specs)?;
    let augmenter = CorpusAugmenter::new(&chain, pool.as_ref())?
        .with_multiplicity(multiplicity)?
        .with_workers(workers);

    let ext = match format {
        OutputFormat::Tsv => "tsv",
        OutputFormat::Jsonl => "jsonl",
    };
    let mut written = Vec::new();
    for epoch in 0..epochs {
        let path = out.with_file_name(format!(
            "{}.epoch{epoch}.{ext}",
            out.file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| "augmented".into())
        ));
        let mut writer = BufWriter::new(
            fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?,
        );
        let mut reader = args.inputs.open()?;
        let mut next_index = 0u64;
        loop {
            let batch = reader.next_batch(BATCH_SIZE)?;
            if batch.is_empty() {
                break;
            }
            let outputs = augmenter.augment_batch(&batch, epoch, next_index)?;
            next_index += batch.len() as u64;
            for sample in &outputs {
                write_augmented(&mut writer, sample, format)?;
            }
        }
        writer.flush()?;
        written.push(path);
    }
    eprintln!("{}", json!({ "written": written }));
    Ok(())
}

fn write_augmented(
    writer: &mut impl Write,
    sample: &AugmentedSample,
    format: OutputFormat,
) -> Result<()> {
    match format {
        OutputFormat::Tsv => {
            writeln!(writer, "{}\t{}", sample.source.text(), sample.target.text())?;
        }
        OutputFormat::Jsonl => {
            let record = JsonlRecord {
                source: sample.source.text(),
                target: sample.target.text(),
                method: &sample.provenance.method,
                epoch: sample.provenance.epoch,
                index: sample.provenance.index,
                seed: sample.provenance.seed,
            };
            writeln!(writer, "{}", serde_json::to_string(&record)?)?;
        }
    }
    Ok(())
}

fn load_pool(path: &Path) -> Result<PatternPool> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    deserialize_pool(&text).with_context(|| format!("parsing pool {}", path.display()))
}

fn load_vocab(path: &Path) -> Result<Vocabulary> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut counts = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let (token, count) = match line.split_once('\t') {
            None => (line, 1u64),
            Some((token, count)) => (
                token,
                count.parse().with_context(|| {
                    format!("{}:{}: bad vocabulary count {count:?}", path.display(), idx + 1)
                })?,
            ),
        };
        *counts.entry(token.to_string()).or_insert(0) += count;
    }
    Ok(Vocabulary::from_counts(counts))
}

fn derive_vocab(inputs: &InputArgs) -> Result<Vocabulary> {
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    let mut reader = inputs.open()?;
    loop {
        let batch = reader.next_batch(BATCH_SIZE)?;
        if batch.is_empty() {
            break;
        }
        for sample in &batch {
            for token in sample.target.tokens() {
                *counts.entry(token.clone()).or_insert(0) += 1;
            }
        }
    }
    Ok(Vocabulary::from_counts(counts))
}

// ---------------------------------------------------------------------------
// metrics
// ---------------------------------------------------------------------------

#[derive(Args)]
struct MetricsArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// First pool (the augmented / pseudo side)
    #[arg(long)]
    pool_p: Option<PathBuf>,
    /// Second pool (the realistic / reference side)
    #[arg(long)]
    pool_r: Option<PathBuf>,
    /// Use the literal truncated sum instead of renormalizing over the
    /// support intersection
    #[arg(long)]
    raw_truncated: bool,
    /// Report the entropy of a single pool instead
    #[arg(long, requires = "pool")]
    diversity: bool,
    /// Pool file for --diversity
    #[arg(long)]
    pool: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
struct MetricsConfig {
    pool_p: Option<PathBuf>,
    pool_r: Option<PathBuf>,
    raw_truncated: Option<bool>,
    diversity: Option<bool>,
    pool: Option<PathBuf>,
}

fn cmd_metrics(args: MetricsArgs) -> Result<()> {
    let cfg: MetricsConfig = load_config(&args.config)?;
    let raw = args.raw_truncated || cfg.raw_truncated.unwrap_or(false);
    let want_diversity = args.diversity || cfg.diversity.unwrap_or(false);
    if want_diversity {
        let path = args
            .pool
            .or(cfg.pool)
            .ok_or_else(|| anyhow!("--diversity requires --pool"))?;
        log_header("metrics", json!({ "diversity": true, "pool": path }));
        let pool = load_pool(&path)?;
        let value: f64 = diversity(&pool)?;
        println!(
            "{}",
            json!({ "diversity": value, "patterns": pool.len(), "grand_total": pool.grand_total() })
        );
        return Ok(());
    }
    let pool_p = args
        .pool_p
        .or(cfg.pool_p)
        .ok_or_else(|| anyhow!("metrics requires --pool-p and --pool-r (or --diversity --pool)"))?;
    let pool_r = args
        .pool_r
        .or(cfg.pool_r)
        .ok_or_else(|| anyhow!("metrics requires --pool-r"))?;
    log_header(
        "metrics",
        json!({ "pool_p": pool_p, "pool_r": pool_r, "raw_truncated": raw }),
    );
    let p = load_pool(&pool_p)?;
    let r = load_pool(&pool_r)?;
    let mode = if raw {
        SupportMode::RawTruncated
    } else {
        SupportMode::RenormalizedIntersection
    };
    let report = affinity_with::<f64>(&p, &r, mode)?;
    println!("{}", serde_json::to_string(&report)?);
    Ok(())
}

// ---------------------------------------------------------------------------
// score
// ---------------------------------------------------------------------------

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Hypothesis corrections, one tokenized sentence per line
    #[arg(long)]
    hyp: Option<PathBuf>,
    /// Annotated reference corpus
    #[arg(long)]
    ref_m2: Option<PathBuf>,
    /// Precision weight (0.5 weighs precision twice as heavily)
    #[arg(long)]
    beta: Option<f64>,
}

#[derive(Deserialize, Default)]
struct ScoreConfig {
    hyp: Option<PathBuf>,
    ref_m2: Option<PathBuf>,
    beta: Option<f64>,
}

fn cmd_score(args: ScoreArgs) -> Result<()> {
    let cfg: ScoreConfig = load_config(&args.config)?;
    let hyp_path = args
        .hyp
        .or(cfg.hyp)
        .ok_or_else(|| anyhow!("score requires --hyp"))?;
    let ref_path = args
        .ref_m2
        .or(cfg.ref_m2)
        .ok_or_else(|| anyhow!("score requires --ref-m2"))?;
    let beta = args.beta.or(cfg.beta).unwrap_or(0.5);
    log_header(
        "score",
        json!({ "hyp": hyp_path, "ref_m2": ref_path, "beta": beta }),
    );
    let hyp_text =
        fs::read_to_string(&hyp_path).with_context(|| format!("reading {}", hyp_path.display()))?;
    let hyp: Vec<Sentence> = hyp_text.lines().map(Sentence::from_text).collect();
    let ref_text =
        fs::read_to_string(&ref_path).with_context(|| format!("reading {}", ref_path.display()))?;
    let gold: Vec<ParallelSample> =
        parse_m2(&ref_text).with_context(|| format!("parsing {}", ref_path.display()))?;
    let report = score_corpus(&hyp, &gold, beta)?;
    println!("{}", serde_json::to_string(&report)?);
    eprintln!(
        "P/R/F{beta}: {:.4} {:.4} {:.4}",
        report.precision, report.recall, report.f_beta
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// stats
// ---------------------------------------------------------------------------

#[derive(Args)]
struct StatsArgs {
    #[command(flatten)]
    inputs: InputArgs,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Summarize a pool file instead of a corpus
    #[arg(long)]
    pool: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
struct StatsConfig {
    #[serde(flatten)]
    inputs: CommonConfig,
    pool: Option<PathBuf>,
}

fn cmd_stats(mut args: StatsArgs) -> Result<()> {
    let cfg: StatsConfig = load_config(&args.config)?;
    args.inputs.merge_config(&cfg.inputs);
    if let Some(path) = args.pool.or(cfg.pool) {
        log_header("stats", json!({ "pool": path }));
        let pool = load_pool(&path)?;
        let h: Option<f64> = diversity(&pool).ok();
        let corrections: std::collections::BTreeSet<_> =
            pool.entries().map(|((c, _), _)| c.to_vec()).collect();
        println!(
            "{}",
            json!({
                "patterns": pool.len(),
                "corrections": corrections.len(),
                "grand_total": pool.grand_total(),
                "diversity": h,
            })
        );
        return Ok(());
    }
    log_header("stats", json!({ "inputs": args.inputs.describe() }));
    let mut reader = args.inputs.open()?;
    let (mut samples, mut src_tokens, mut tgt_tokens) = (0u64, 0u64, 0u64);
    let (mut identical, mut annotated, mut gold_edits) = (0u64, 0u64, 0u64);
    loop {
        let batch = reader.next_batch(BATCH_SIZE)?;
        if batch.is_empty() {
            break;
        }
        for sample in &batch {
            samples += 1;
            src_tokens += sample.source.len() as u64;
            tgt_tokens += sample.target.len() as u64;
            if sample.source == sample.target {
                identical += 1;
            }
            if let Some(edits) = &sample.gold_edits {
                annotated += 1;
                gold_edits += edits.len() as u64;
            }
        }
    }
    println!(
        "{}",
        json!({
            "samples": samples,
            "source_tokens": src_tokens,
            "target_tokens": tgt_tokens,
            "identical_pairs": identical,
            "annotated_samples": annotated,
            "gold_edits": gold_edits,
        })
    );
    Ok(())
}
