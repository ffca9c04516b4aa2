//! Edit-based data augmentation toolkit for grammatical error correction
//! corpora.
//!
//! The crate covers the full desk-scale pipeline:
//!
//! * [`corpus_io`] — annotated (`S`/`A` block) corpora, parallel TSV, and
//!   JSON-Lines pattern pools;
//! * [`alignment`] — token-level Levenshtein alignment, edit extraction, and
//!   edit application;
//! * [`pattern_pool`] — counted `(error, correction)` pattern pools with
//!   exact joint, marginal, and conditional probabilities plus weighted
//!   candidate sampling;
//! * [`metrics`] — Affinity (inverse symmetrized KL divergence between two
//!   pools) and Diversity (pattern entropy);
//! * [`augment`] — direct noise, pattern noise, and label-preserving mixedit
//!   corruption with chaining and dynamic per-epoch generation;
//! * [`scorer`] — edit-overlap precision / recall / F-beta scoring;
//! * [`losses`] — cross-entropy and consistency-KL kernels for the combined
//!   training objective.
//!
//! Numeric kernels are generic over the [`Real`] scalar (`f32` or `f64`) and
//! default to `f64`; the discrete machinery works in exact integer counts
//! until a final division. All randomness flows through the seeded [`rng`]
//! generator, making every corruption byte-reproducible from
//! `(base_seed, epoch, index)`.
//!
//! ```
//! use gecaug::{build_pool, extract_edits, mixedit_augment, MixEditOptions,
//!              ParallelSample, Rng, Sentence};
//!
//! let source = Sentence::from_text("He go to school yesterday .");
//! let target = Sentence::from_text("He went to school yesterday .");
//! let edits = extract_edits(&source, &target);
//! assert_eq!(edits.len(), 1);
//! assert_eq!(edits.edits()[0].src_tokens, ["go"]);
//!
//! let corpus = vec![
//!     ParallelSample::from_pair(source, target.clone()),
//!     ParallelSample::from_pair(Sentence::from_text("She goes to a school ."),
//!                               Sentence::from_text("She went to a school .")),
//! ];
//! let pool = build_pool(&corpus);
//! assert!(pool.has_correction(&["went".to_string()]));
//!
//! // Replace each gold error with another error form sharing its correction.
//! let out = mixedit_augment(&corpus[0], &pool, &MixEditOptions::default(),
//!                           &mut Rng::new(7)).unwrap();
//! assert_eq!(out.target, target);
//! assert_eq!(out.corrupted_spans, 1);
//! ```

pub mod alignment;
pub mod augment;
pub mod corpus_io;
pub mod error;
pub mod losses;
pub mod metrics;
pub mod num;
pub mod parallel;
pub mod pattern_pool;
pub mod rng;
pub mod scorer;

pub use alignment::{
    align, apply_edits, extract_edits, extract_edits_with, AlignOp, Edit, EditSequence,
    MergePolicy, Span,
};
pub use augment::{
    direct_noise, import_pseudo, mixedit_augment, pattern_noise, AugmentChain, AugmentSpec,
    AugmentedSample, CandidateSource, CorpusAugmenter, DirectNoiseParams, Method, MixEditOptions,
    PatternNoiseParams, Provenance, Vocabulary, MASK_TOKEN,
};
pub use corpus_io::{
    deserialize_pool, emit_m2, emit_parallel_tsv, parse_m2, parse_parallel_tsv, serialize_pool,
    ParallelSample, PoolRecord, Sentence,
};
pub use error::{Error, Result};
pub use losses::{
    combined_loss, consistency_kl, consistency_kl_with, cross_entropy, KlMode,
    PredictionSequence, Reduction,
};
pub use metrics::{
    affinity, affinity_with, diversity, kl_restricted, kl_truncated, support_intersection,
    AffinityReport, SupportMode,
};
pub use num::Real;
pub use pattern_pool::{build_pool, PatternPool};
pub use rng::{mix64, mix_seed, Rng};
pub use scorer::{f_beta, match_edits, score_corpus, ScoreReport};

/// Reference sentences used across the unit tests.
#[cfg(test)]
pub(crate) mod fixtures {
    pub const TARGET_A: &str =
        "This will , if not already , cause problems as there is very limited space for us .";
    pub const SOURCE_A: &str =
        "This will , if not already , caused problems as there are very limited spaces for us .";
    /// A machine-translated variant of `TARGET_A` with heavier divergence.
    pub const BT_SOURCE_A: &str =
        "This if not already cause the problems as there are very few space for us .";

    pub const TARGET_B: &str =
        "We realize that burning of fuels produces a large amount of greenhouse gases .";
    pub const SOURCE_B: &str =
        "We relize that burning of fuels produce the large amount of greenhouse gases .";

    pub const M2_BLOCK_A: &str = "\
S This will , if not already , caused problems as there are very limited spaces for us .
A 7 8|||R:VERB|||cause|||REQUIRED|||-NONE-|||0
A 11 12|||R:SVA|||is|||REQUIRED|||-NONE-|||0
A 14 15|||R:NOUN|||space|||REQUIRED|||-NONE-|||0
";
}
