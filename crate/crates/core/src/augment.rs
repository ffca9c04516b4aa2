//! Corruption procedures for generating pseudo parallel data.
//!
//! Three augmenters are provided:
//!
//! * **dn** — direct noise: per-token masking, deletion, and insertion;
//! * **pn** — pattern noise: substitutes sentence segments with error forms
//!   drawn from a pattern pool;
//! * **mixedit** — label-preserving replacement: each gold error whose
//!   correction appears in the pool is re-drawn from the pool's candidates
//!   for that correction, so the target stays valid and the error density is
//!   unchanged.
//!
//! Augmenters can be chained; every element after the first corrupts the
//! previous element's output, while the target sentence is never touched.
//! `mixedit` is only valid as the first element because it needs gold edits
//! against the true source.
//!
//! # Determinism
//!
//! Each chain element `k` owns a `base_seed`. The sample at output index `i`
//! in epoch `e` is corrupted with a fresh [`Rng`] seeded
//! `mix_seed(base_seed_k, e, i)` (see [`crate::rng::mix_seed`] for the exact
//! bit-level definition), and every engine draws from its generator in a
//! fixed documented order. Output bytes therefore depend only on
//! `(corpus, chain seeds, epoch)` — never on the worker count.

use std::collections::BTreeMap;

use crate::alignment::{extract_edits, EditPart, EditSequence, Span};
use crate::corpus_io::{ParallelSample, Sentence};
use crate::error::{Error, Result};
use crate::parallel::ordered_map;
use crate::pattern_pool::PatternPool;
use crate::rng::{mix_seed, Rng};

/// Default mask token, matching the conventional angle-bracket spelling.
pub const MASK_TOKEN: &str = "\u{27E8}mask\u{27E9}";

type Segment = Vec<String>;

/// Unigram-weighted vocabulary used for insertion noise.
#[derive(Debug, Clone, Default)]
pub struct Vocabulary {
    tokens: Vec<String>,
    cumulative: Vec<u64>,
}

impl Vocabulary {
    /// Builds from `(token, count)` pairs; tokens are kept in sorted order so
    /// sampling is deterministic.
    pub fn from_counts(counts: BTreeMap<String, u64>) -> Self {
        let mut tokens = Vec::with_capacity(counts.len());
        let mut cumulative = Vec::with_capacity(counts.len());
        let mut running = 0u64;
        for (token, count) in counts {
            if count == 0 {
                continue;
            }
            running += count;
            tokens.push(token);
            cumulative.push(running);
        }
        Vocabulary { tokens, cumulative }
    }

    /// Unigram counts over the target side of a corpus.
    pub fn from_corpus_targets(samples: &[ParallelSample]) -> Self {
        let mut counts: BTreeMap<String, u64> = BTreeMap::new();
        for sample in samples {
            for token in sample.target.tokens() {
                *counts.entry(token.clone()).or_insert(0) += 1;
            }
        }
        Self::from_counts(counts)
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    fn sample(&self, rng: &mut Rng) -> &str {
        let total = *self.cumulative.last().expect("non-empty vocabulary");
        let r = rng.below(total);
        let idx = self.cumulative.partition_point(|&c| c <= r);
        &self.tokens[idx]
    }
}

/// Parameters for direct noise.
#[derive(Debug, Clone)]
pub struct DirectNoiseParams {
    pub mask_prob: f64,
    pub delete_prob: f64,
    pub insert_prob: f64,
    pub mask_token: String,
    pub vocab: Vocabulary,
}

impl Default for DirectNoiseParams {
    fn default() -> Self {
        DirectNoiseParams {
            mask_prob: 0.3,
            delete_prob: 0.1,
            insert_prob: 0.1,
            mask_token: MASK_TOKEN.to_string(),
            vocab: Vocabulary::default(),
        }
    }
}

impl DirectNoiseParams {
    fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("mask", self.mask_prob),
            ("delete", self.delete_prob),
            ("insert", self.insert_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} probability {p} outside [0, 1]")));
            }
        }
        if self.insert_prob > 0.0 && self.vocab.is_empty() {
            return Err(Error::Config(
                "insertion noise needs a non-empty vocabulary".into(),
            ));
        }
        if self.mask_token.is_empty() || self.mask_token.chars().any(char::is_whitespace) {
            return Err(Error::Config("mask token must be a valid token".into()));
        }
        Ok(())
    }
}

/// Parameters for pattern noise.
#[derive(Debug, Clone)]
pub struct PatternNoiseParams {
    /// Number of injection passes; each corrupts at most one segment.
    pub rounds: u64,
    /// Longest segment considered when matching pool corrections.
    pub max_ngram: usize,
}

impl Default for PatternNoiseParams {
    fn default() -> Self {
        PatternNoiseParams { rounds: 1, max_ngram: 4 }
    }
}

impl PatternNoiseParams {
    fn validate(&self) -> Result<()> {
        if self.rounds < 1 {
            return Err(Error::Config("pattern noise needs rounds >= 1".into()));
        }
        if self.max_ngram < 1 {
            return Err(Error::Config("pattern noise needs max_ngram >= 1".into()));
        }
        Ok(())
    }
}

/// Where replacement candidates come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CandidateSource {
    /// Draw from the pattern pool's conditional distribution.
    #[default]
    Pool,
    /// Replace each gold error with mask tokens instead (ablation mode).
    RandomMask,
}

/// Options for the label-preserving augmenter.
#[derive(Debug, Clone)]
pub struct MixEditOptions {
    pub candidate_source: CandidateSource,
    /// Keep the original error form among the candidates at its pooled
    /// weight (the default); `false` re-draws among the alternatives only.
    pub include_original: bool,
    pub mask_token: String,
}

impl Default for MixEditOptions {
    fn default() -> Self {
        MixEditOptions {
            candidate_source: CandidateSource::Pool,
            include_original: true,
            mask_token: MASK_TOKEN.to_string(),
        }
    }
}

/// One augmenter with its parameters.
#[derive(Debug, Clone)]
pub enum Method {
    DirectNoise(DirectNoiseParams),
    PatternNoise(PatternNoiseParams),
    MixEdit(MixEditOptions),
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::DirectNoise(_) => "dn",
            Method::PatternNoise(_) => "pn",
            Method::MixEdit(_) => "mixedit",
        }
    }

    fn needs_pool(&self) -> bool {
        matches!(self, Method::PatternNoise(_))
            || matches!(
                self,
                Method::MixEdit(MixEditOptions {
                    candidate_source: CandidateSource::Pool,
                    ..
                })
            )
    }
}

/// A configured augmenter: method, parameters, and its seed stream.
#[derive(Debug, Clone)]
pub struct AugmentSpec {
    pub method: Method,
    pub base_seed: u64,
}

impl AugmentSpec {
    pub fn new(method: Method, base_seed: u64) -> Result<Self> {
        match &method {
            Method::DirectNoise(p) => p.validate()?,
            Method::PatternNoise(p) => p.validate()?,
            Method::MixEdit(_) => {}
        }
        Ok(AugmentSpec { method, base_seed })
    }
}

/// Where an augmented sample came from.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Provenance {
    pub method: String,
    pub epoch: u64,
    pub index: u64,
    /// The first chain element's per-sample seed.
    pub seed: u64,
}

/// A corrupted source with its unchanged target.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedSample {
    pub source: Sentence,
    pub target: Sentence,
    /// Corruption edits from the pre-corruption sentence to `source`. For a
    /// single augmenter these are the exact spans the engine touched; for a
    /// chain of two or more they are re-extracted from the endpoints.
    pub edits: EditSequence,
    /// Segments the augmenter re-drew. For `mixedit` this counts every gold
    /// edit whose correction was found in the pool, including draws that
    /// returned the original form, so it equals the pool-covered gold-edit
    /// count exactly.
    pub corrupted_spans: usize,
    pub provenance: Provenance,
}

fn assemble(
    pre: &Sentence,
    target: &Sentence,
    parts: Vec<EditPart>,
    corrupted_spans: usize,
    provenance: Provenance,
) -> Result<AugmentedSample> {
    let (edits, source) = EditSequence::from_parts(pre, parts)?;
    Ok(AugmentedSample {
        source,
        target: target.clone(),
        edits,
        corrupted_spans,
        provenance,
    })
}

fn direct_provenance(method: &'static str) -> Provenance {
    Provenance {
        method: method.to_string(),
        epoch: 0,
        index: 0,
        seed: 0,
    }
}

// ---------------------------------------------------------------------------
// Engines. Each returns raw edit parts against its input sentence plus the
// number of segments it re-drew; the caller assembles them.
// ---------------------------------------------------------------------------

/// Per token, in this draw order: mask with `mask_prob`; otherwise delete
/// with `delete_prob`; otherwise insert a vocabulary token before it with
/// `insert_prob` (one extra draw picks the token).
fn dn_parts(working: &Sentence, params: &DirectNoiseParams, rng: &mut Rng) -> (Vec<EditPart>, usize) {
    let mut parts: Vec<EditPart> = Vec::new();
    for (i, token) in working.tokens().iter().enumerate() {
        if params.mask_prob > 0.0 && rng.next_f64() < params.mask_prob {
            if *token != params.mask_token {
                parts.push((Span::new(i, i + 1), vec![params.mask_token.clone()], None));
            }
        } else if params.delete_prob > 0.0 && rng.next_f64() < params.delete_prob {
            parts.push((Span::new(i, i + 1), Vec::new(), None));
        } else if params.insert_prob > 0.0 && rng.next_f64() < params.insert_prob {
            let inserted = params.vocab.sample(rng).to_string();
            parts.push((Span::new(i, i), vec![inserted], None));
        }
    }
    let n = parts.len();
    (parts, n)
}

/// Each round enumerates the segments of the *input* sentence (up to
/// `max_ngram` tokens, in `(start, length)` order) that appear as corrections
/// in the pool and do not overlap an already corrupted span, picks one
/// uniformly, and replaces it with an error form drawn from the pool's
/// conditional distribution. A round with no eligible segment is a no-op.
fn pn_parts(
    working: &Sentence,
    pool: &PatternPool,
    params: &PatternNoiseParams,
    rng: &mut Rng,
) -> Result<(Vec<EditPart>, usize)> {
    let tokens = working.tokens();
    let n = tokens.len();
    let mut corrupted = vec![false; n];
    let mut parts: Vec<EditPart> = Vec::new();
    for _ in 0..params.rounds {
        let mut eligible: Vec<Span> = Vec::new();
        for start in 0..n {
            if corrupted[start] {
                continue;
            }
            for len in 1..=params.max_ngram.min(n - start) {
                if corrupted[start + len - 1] {
                    break;
                }
                if pool.has_correction(&tokens[start..start + len]) {
                    eligible.push(Span::new(start, start + len));
                }
            }
        }
        if eligible.is_empty() {
            continue;
        }
        let span = eligible[rng.below(eligible.len() as u64) as usize];
        let correction = &tokens[span.start..span.end];
        let error = pool.sample_replacement(correction, rng)?;
        corrupted[span.start..span.end].fill(true);
        parts.push((span, error, None));
    }
    let count = parts.len();
    Ok((parts, count))
}

/// For each gold edit `(x, y)`: when `y` is in the pool, splice a candidate
/// drawn from `P(· | y)` over the edit's source span (one draw per covered
/// edit); edits with `y` outside the pool, and pure deletions (empty `y`),
/// keep their original `x`.
fn mixedit_parts(
    source: &Sentence,
    edits: &EditSequence,
    pool: Option<&PatternPool>,
    options: &MixEditOptions,
    rng: &mut Rng,
) -> Result<(Vec<EditPart>, usize)> {
    let mut parts: Vec<EditPart> = Vec::new();
    let mut covered = 0usize;
    for edit in edits {
        let (x, y) = (&edit.src_tokens, &edit.tgt_tokens);
        if edit.src_span.end > source.len()
            || source.tokens()[edit.src_span.start..edit.src_span.end] != x[..]
        {
            return Err(Error::Validation(format!(
                "gold edit {edit:?} does not match the source sentence"
            )));
        }
        if y.is_empty() {
            continue;
        }
        let replacement: Segment = match options.candidate_source {
            CandidateSource::RandomMask => {
                if x.is_empty() {
                    continue;
                }
                covered += 1;
                vec![options.mask_token.clone(); x.len()]
            }
            CandidateSource::Pool => {
                let pool = pool.expect("pool checked at configuration time");
                if !pool.has_correction(y) {
                    continue;
                }
                covered += 1;
                if options.include_original {
                    pool.sample_replacement(y, rng)?
                } else {
                    match sample_excluding(pool, y, x, rng) {
                        Some(candidate) => candidate,
                        None => continue, // no alternative exists; keep x
                    }
                }
            }
        };
        if replacement != *x {
            parts.push((edit.src_span, replacement, None));
        }
    }
    Ok((parts, covered))
}

/// Draws from `P(· | correction)` with one candidate removed from the
/// distribution. Returns `None` when nothing but the excluded form exists.
fn sample_excluding(
    pool: &PatternPool,
    correction: &[String],
    exclude: &[String],
    rng: &mut Rng,
) -> Option<Segment> {
    let excluded_count = pool.count(exclude, correction);
    let total = pool.correction_total(correction) - excluded_count;
    if total == 0 {
        return None;
    }
    let mut r = rng.below(total);
    for (error, count) in pool.candidates(correction) {
        if error == exclude {
            continue;
        }
        if r < count {
            return Some(error.to_vec());
        }
        r -= count;
    }
    unreachable!("candidate counts cover the reduced total");
}

// ---------------------------------------------------------------------------
// Single-shot operations.
// ---------------------------------------------------------------------------

/// Applies direct noise to a clean sentence. All-zero probabilities yield an
/// uncorrupted sample rather than an error.
pub fn direct_noise(
    target: &Sentence,
    params: &DirectNoiseParams,
    rng: &mut Rng,
) -> Result<AugmentedSample> {
    params.validate()?;
    let (parts, count) = dn_parts(target, params, rng);
    assemble(
        target,
        target,
        parts,
        count,
        direct_provenance("dn"),
    )
}

/// Applies pattern noise to a clean sentence. A pool with no matching
/// segment (including an empty pool) yields an uncorrupted sample.
pub fn pattern_noise(
    target: &Sentence,
    pool: &PatternPool,
    params: &PatternNoiseParams,
    rng: &mut Rng,
) -> Result<AugmentedSample> {
    params.validate()?;
    let (parts, count) = pn_parts(target, pool, params, rng)?;
    assemble(
        target,
        target,
        parts,
        count,
        direct_provenance("pn"),
    )
}

/// Label-preserving augmentation of one sample. Gold edits are extracted
/// when absent; the target sentence is never modified.
pub fn mixedit_augment(
    sample: &ParallelSample,
    pool: &PatternPool,
    options: &MixEditOptions,
    rng: &mut Rng,
) -> Result<AugmentedSample> {
    let edits = sample.edits_or_extract();
    let (parts, covered) = mixedit_parts(&sample.source, &edits, Some(pool), options, rng)?;
    assemble(
        &sample.source,
        &sample.target,
        parts,
        covered,
        direct_provenance("mixedit"),
    )
}

/// Ingests line-aligned pseudo-corpus files (for example backtranslation or
/// round-translation output). Edits are left for lazy extraction.
pub fn import_pseudo(source_text: &str, target_text: &str) -> Result<Vec<ParallelSample>> {
    let sources: Vec<&str> = source_text.lines().collect();
    let targets: Vec<&str> = target_text.lines().collect();
    if sources.len() != targets.len() {
        return Err(Error::LengthMismatch {
            left: sources.len(),
            right: targets.len(),
        });
    }
    Ok(sources
        .into_iter()
        .zip(targets)
        .map(|(s, t)| ParallelSample::from_pair(Sentence::from_text(s), Sentence::from_text(t)))
        .collect())
}

// ---------------------------------------------------------------------------
// Chained, per-epoch corpus augmentation.
// ---------------------------------------------------------------------------

/// A validated left-to-right augmenter chain.
#[derive(Debug, Clone)]
pub struct AugmentChain {
    specs: Vec<AugmentSpec>,
}

impl AugmentChain {
    /// The chain must be non-empty, and `mixedit` may only appear first: it
    /// needs gold edits against the true source, which later positions no
    /// longer have.
    pub fn new(specs: Vec<AugmentSpec>) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::Config("augmenter chain is empty".into()));
        }
        for spec in &specs[1..] {
            if matches!(spec.method, Method::MixEdit(_)) {
                return Err(Error::Config(
                    "mixedit is only valid as the first chain element".into(),
                ));
            }
        }
        Ok(AugmentChain { specs })
    }

    pub fn single(spec: AugmentSpec) -> Self {
        AugmentChain { specs: vec![spec] }
    }

    pub fn specs(&self) -> &[AugmentSpec] {
        &self.specs
    }

    /// Chain label for provenance, e.g. `"mixedit+pn"`.
    pub fn label(&self) -> String {
        self.specs
            .iter()
            .map(|s| s.method.name())
            .collect::<Vec<_>>()
            .join("+")
    }

    fn needs_pool(&self) -> bool {
        self.specs.iter().any(|s| s.method.needs_pool())
    }
}

/// Applies a chain over a corpus, one epoch at a time.
#[derive(Debug, Clone)]
pub struct CorpusAugmenter<'a> {
    chain: &'a AugmentChain,
    pool: Option<&'a PatternPool>,
    label: String,
    multiplicity: u64,
    workers: usize,
}

impl<'a> CorpusAugmenter<'a> {
    pub fn new(chain: &'a AugmentChain, pool: Option<&'a PatternPool>) -> Result<Self> {
        if chain.needs_pool() && pool.is_none() {
            return Err(Error::Config(
                "chain contains a pool-based augmenter but no pool was supplied".into(),
            ));
        }
        Ok(CorpusAugmenter {
            chain,
            pool,
            label: chain.label(),
            multiplicity: 1,
            workers: 1,
        })
    }

    /// Number of augmented copies per input sample (default 1).
    pub fn with_multiplicity(mut self, multiplicity: u64) -> Result<Self> {
        if multiplicity < 1 {
            return Err(Error::Config("multiplicity must be >= 1".into()));
        }
        self.multiplicity = multiplicity;
        Ok(self)
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }

    /// Corrupts one sample for the given epoch and *output* index. The output
    /// index for copy `c` of input sample `i` is `i * multiplicity + c`.
    pub fn augment_sample(
        &self,
        sample: &ParallelSample,
        epoch: u64,
        output_index: u64,
    ) -> Result<AugmentedSample> {
        let mut first_seed = 0u64;
        let mut stage: Option<(Sentence, EditSequence)> = None;
        let mut corrupted_spans = 0usize;
        // The first element corrupts its natural input (the source for
        // mixedit, the clean target otherwise); later elements corrupt the
        // previous output.
        for (k, spec) in self.chain.specs.iter().enumerate() {
            let seed = mix_seed(spec.base_seed, epoch, output_index);
            if k == 0 {
                first_seed = seed;
            }
            let mut rng = Rng::new(seed);
            let working: &Sentence = match &stage {
                None => match &spec.method {
                    Method::MixEdit(_) => &sample.source,
                    _ => &sample.target,
                },
                Some((corrupted, _)) => corrupted,
            };
            let (parts, count) = match &spec.method {
                Method::DirectNoise(params) => dn_parts(working, params, &mut rng),
                Method::PatternNoise(params) => {
                    pn_parts(working, self.pool.expect("pool checked"), params, &mut rng)?
                }
                Method::MixEdit(options) => {
                    let edits = sample.edits_or_extract();
                    mixedit_parts(&sample.source, &edits, self.pool, options, &mut rng)?
                }
            };
            corrupted_spans += count;
            let (edits, corrupted) = EditSequence::from_parts(working, parts)?;
            stage = Some((corrupted, edits));
        }
        let (source, mut edits) = stage.expect("chain is non-empty");
        if self.chain.specs.len() > 1 {
            // Tracked edits from the last element are relative to an
            // intermediate sentence; re-extract against the chain's input.
            let pre = match &self.chain.specs[0].method {
                Method::MixEdit(_) => &sample.source,
                _ => &sample.target,
            };
            edits = extract_edits(pre, &source);
        }
        Ok(AugmentedSample {
            source,
            target: sample.target.clone(),
            edits,
            corrupted_spans,
            provenance: Provenance {
                method: self.label.clone(),
                epoch,
                index: output_index,
                seed: first_seed,
            },
        })
    }

    /// Augments a batch whose first input sample has corpus index
    /// `first_sample_index`. Output order matches input order for any worker
    /// count.
    pub fn augment_batch(
        &self,
        samples: &[ParallelSample],
        epoch: u64,
        first_sample_index: u64,
    ) -> Result<Vec<AugmentedSample>> {
        let m = self.multiplicity;
        let jobs: Vec<(u64, &ParallelSample)> = samples
            .iter()
            .enumerate()
            .flat_map(|(i, s)| {
                (0..m).map(move |c| ((first_sample_index + i as u64) * m + c, s))
            })
            .collect();
        ordered_map(&jobs, self.workers, |_, (output_index, sample)| {
            self.augment_sample(sample, epoch, *output_index)
        })
        .into_iter()
        .collect()
    }

    /// Augments a whole in-memory corpus for one epoch.
    pub fn augment_corpus(
        &self,
        samples: &[ParallelSample],
        epoch: u64,
    ) -> Result<Vec<AugmentedSample>> {
        self.augment_batch(samples, epoch, 0)
    }
}
