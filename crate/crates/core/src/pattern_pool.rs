//! The error-pattern pool: a counted joint distribution over
//! `(error, correction)` segment pairs.
//!
//! All probabilities are ratios of integer counts, divided exactly once at
//! the end, so nothing accumulates rounding error and scaling every count by
//! a constant leaves every derived quantity bit-identical.

use std::collections::BTreeMap;

use crate::corpus_io::ParallelSample;
use crate::error::{Error, Result};
use crate::num::{ratio, Real};
use crate::rng::Rng;

type Segment = Vec<String>;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
struct CorrectionEntry {
    total: u64,
    errors: BTreeMap<Segment, u64>,
}

/// Counted collection of error patterns, nested correction-first so that
/// iteration, serialization, and candidate enumeration share one fixed
/// `(correction, error)` order and lookups borrow instead of cloning keys.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PatternPool {
    by_correction: BTreeMap<Segment, CorrectionEntry>,
    patterns: usize,
    grand_total: u64,
}

impl PatternPool {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records `count` occurrences of the pattern `error -> correction`.
    pub fn add_count(&mut self, error: Segment, correction: Segment, count: u64) -> Result<()> {
        if count == 0 {
            return Err(Error::Validation("pattern count must be >= 1".into()));
        }
        if error == correction {
            return Err(Error::Validation(format!(
                "identity pattern not allowed: {error:?}"
            )));
        }
        let entry = self.by_correction.entry(correction).or_default();
        entry.total += count;
        match entry.errors.entry(error) {
            std::collections::btree_map::Entry::Occupied(mut n) => *n.get_mut() += count,
            std::collections::btree_map::Entry::Vacant(slot) => {
                slot.insert(count);
                self.patterns += 1;
            }
        }
        self.grand_total += count;
        Ok(())
    }

    /// Records one occurrence, cloning the segments only for new patterns.
    pub fn add(&mut self, error: &[String], correction: &[String]) -> Result<()> {
        if error == correction {
            return Err(Error::Validation(format!(
                "identity pattern not allowed: {error:?}"
            )));
        }
        if let Some(entry) = self.by_correction.get_mut(correction) {
            entry.total += 1;
            if let Some(n) = entry.errors.get_mut(error) {
                *n += 1;
            } else {
                entry.errors.insert(error.to_vec(), 1);
                self.patterns += 1;
            }
            self.grand_total += 1;
            Ok(())
        } else {
            self.add_count(error.to_vec(), correction.to_vec(), 1)
        }
    }

    /// Number of distinct patterns.
    pub fn len(&self) -> usize {
        self.patterns
    }

    pub fn is_empty(&self) -> bool {
        self.patterns == 0
    }

    pub fn grand_total(&self) -> u64 {
        self.grand_total
    }

    pub fn count(&self, error: &[String], correction: &[String]) -> u64 {
        self.by_correction
            .get(correction)
            .and_then(|entry| entry.errors.get(error))
            .copied()
            .unwrap_or(0)
    }

    pub fn has_correction(&self, correction: &[String]) -> bool {
        self.by_correction.contains_key(correction)
    }

    pub fn correction_total(&self, correction: &[String]) -> u64 {
        self.by_correction.get(correction).map_or(0, |e| e.total)
    }

    /// Patterns in `(correction, error)` order, with counts.
    pub fn entries(&self) -> impl Iterator<Item = ((&[String], &[String]), u64)> {
        self.by_correction.iter().flat_map(|(c, entry)| {
            entry
                .errors
                .iter()
                .map(move |(e, &n)| ((c.as_slice(), e.as_slice()), n))
        })
    }

    /// Error candidates for one correction, in error-segment sort order.
    pub fn candidates<'a>(
        &'a self,
        correction: &[String],
    ) -> impl Iterator<Item = (&'a [String], u64)> + 'a {
        self.by_correction
            .get(correction)
            .into_iter()
            .flat_map(|entry| entry.errors.iter().map(|(e, &n)| (e.as_slice(), n)))
    }

    /// `P(error | correction)` — zero when the pair is absent.
    pub fn conditional_prob<F: Real>(&self, error: &[String], correction: &[String]) -> Result<F> {
        let entry = self
            .by_correction
            .get(correction)
            .ok_or_else(|| Error::UnknownCorrection(correction.to_vec()))?;
        Ok(ratio(
            entry.errors.get(error).copied().unwrap_or(0),
            entry.total,
        ))
    }

    /// `P(error, correction)` over the whole pool.
    pub fn joint_prob<F: Real>(&self, error: &[String], correction: &[String]) -> Result<F> {
        if self.grand_total == 0 {
            return Err(Error::EmptyPool);
        }
        Ok(ratio(self.count(error, correction), self.grand_total))
    }

    /// `P(correction)` marginal.
    pub fn marginal_prob<F: Real>(&self, correction: &[String]) -> Result<F> {
        if self.grand_total == 0 {
            return Err(Error::EmptyPool);
        }
        Ok(ratio(self.correction_total(correction), self.grand_total))
    }

    /// The full joint distribution in `(correction, error)` order.
    pub fn pattern_distribution<F: Real>(&self) -> Result<Vec<((Segment, Segment), F)>> {
        if self.grand_total == 0 {
            return Err(Error::EmptyPool);
        }
        Ok(self
            .entries()
            .map(|((c, e), n)| ((e.to_vec(), c.to_vec()), ratio(n, self.grand_total)))
            .collect())
    }

    /// Draws an error form for `correction` with probability
    /// `P(error | correction)`, walking candidates in sort order against a
    /// single uniform integer draw.
    pub fn sample_replacement(&self, correction: &[String], rng: &mut Rng) -> Result<Segment> {
        let entry = self
            .by_correction
            .get(correction)
            .ok_or_else(|| Error::UnknownCorrection(correction.to_vec()))?;
        let mut r = rng.below(entry.total);
        for (error, &n) in &entry.errors {
            if r < n {
                return Ok(error.clone());
            }
            r -= n;
        }
        unreachable!("correction totals cover candidate counts");
    }
}

/// Counts every edit occurrence across all samples; samples without gold
/// edits are extracted first.
pub fn build_pool(samples: &[ParallelSample]) -> PatternPool {
    let mut pool = PatternPool::new();
    for sample in samples {
        let edits = sample.edits_or_extract();
        for e in edits.iter() {
            pool.add(&e.src_tokens, &e.tgt_tokens)
                .expect("extracted edits never contain identity patterns");
        }
    }
    pool
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus_io::Sentence;
    use crate::fixtures;

    fn seg(text: &str) -> Segment {
        text.split_whitespace().map(str::to_string).collect()
    }

    fn cause_pool() -> PatternPool {
        let mut pool = PatternPool::new();
        pool.add_count(seg("caused"), seg("cause"), 2).unwrap();
        pool.add_count(seg("causing"), seg("cause"), 1).unwrap();
        pool
    }

    #[test]
    fn identity_corpus_builds_empty_pool() {
        let s = Sentence::from_text("a b c");
        let corpus = vec![ParallelSample::from_pair(s.clone(), s)];
        assert!(build_pool(&corpus).is_empty());
    }

    #[test]
    fn fixture_corpus_builds_expected_patterns() {
        let corpus = vec![
            ParallelSample::from_pair(
                Sentence::from_text(fixtures::SOURCE_A),
                Sentence::from_text(fixtures::TARGET_A),
            ),
            ParallelSample::from_pair(
                Sentence::from_text(fixtures::SOURCE_B),
                Sentence::from_text(fixtures::TARGET_B),
            ),
        ];
        let pool = build_pool(&corpus);
        assert_eq!(pool.len(), 5);
        for (error, correction) in [
            ("caused", "cause"),
            ("are", "is"),
            ("spaces", "space"),
            ("relize", "realize"),
            ("produce the", "produces a"),
        ] {
            assert_eq!(pool.count(&seg(error), &seg(correction)), 1, "{error:?}");
        }
    }

    #[test]
    fn repeating_corpus_scales_counts() {
        let sample = ParallelSample::from_pair(
            Sentence::from_text(fixtures::SOURCE_A),
            Sentence::from_text(fixtures::TARGET_A),
        );
        let once = build_pool(std::slice::from_ref(&sample));
        let thrice = build_pool(&vec![sample; 3]);
        assert_eq!(thrice.len(), once.len());
        for ((c, e), n) in once.entries() {
            assert_eq!(thrice.count(e, c), 3 * n);
        }
    }

    #[test]
    fn conditional_probability_is_count_ratio() {
        let pool = cause_pool();
        let p: f64 = pool.conditional_prob(&seg("caused"), &seg("cause")).unwrap();
        assert_eq!(p, 2.0 / 3.0);
        let q: f64 = pool.conditional_prob(&seg("causing"), &seg("cause")).unwrap();
        assert_eq!(q, 1.0 / 3.0);
        // Absent pair under a present correction is zero, not an error.
        let z: f64 = pool.conditional_prob(&seg("cuzed"), &seg("cause")).unwrap();
        assert_eq!(z, 0.0);
    }

    #[test]
    fn single_candidate_has_probability_one() {
        let mut pool = PatternPool::new();
        pool.add_count(seg("are"), seg("is"), 7).unwrap();
        let p: f64 = pool.conditional_prob(&seg("are"), &seg("is")).unwrap();
        assert_eq!(p, 1.0);
    }

    #[test]
    fn absent_correction_is_an_error() {
        let pool = cause_pool();
        assert!(matches!(
            pool.conditional_prob::<f64>(&seg("x"), &seg("nope")),
            Err(Error::UnknownCorrection(_))
        ));
        let mut rng = Rng::new(0);
        assert!(pool.sample_replacement(&seg("nope"), &mut rng).is_err());
    }

    #[test]
    fn joint_probabilities() {
        let mut pool = PatternPool::new();
        pool.add_count(seg("a"), seg("b"), 5).unwrap();
        let p: f64 = pool.joint_prob(&seg("a"), &seg("b")).unwrap();
        assert_eq!(p, 1.0);

        let mut pool = PatternPool::new();
        pool.add_count(seg("a"), seg("b"), 1).unwrap();
        pool.add_count(seg("c"), seg("d"), 3).unwrap();
        let pa: f64 = pool.joint_prob(&seg("a"), &seg("b")).unwrap();
        let pc: f64 = pool.joint_prob(&seg("c"), &seg("d")).unwrap();
        assert_eq!(pa, 0.25);
        assert_eq!(pc, 0.75);

        assert!(matches!(
            PatternPool::new().joint_prob::<f64>(&seg("a"), &seg("b")),
            Err(Error::EmptyPool)
        ));
    }

    #[test]
    fn distributions_sum_to_one_on_fuzzed_pools() {
        let mut rng = Rng::new(11);
        for _ in 0..50 {
            let mut pool = PatternPool::new();
            let n = 1 + rng.below(30);
            for i in 0..n {
                let y = seg(&format!("y{}", rng.below(8)));
                let x = seg(&format!("x{i}"));
                pool.add_count(x, y, 1 + rng.below(20)).unwrap();
            }
            let dist: Vec<_> = pool.pattern_distribution::<f64>().unwrap();
            let total: f64 = dist.iter().map(|(_, p)| *p).sum();
            assert!((total - 1.0).abs() < 1e-12);
            // Conditionals sum to one per correction.
            let corrections: std::collections::BTreeSet<_> =
                pool.entries().map(|((c, _), _)| c.to_vec()).collect();
            for c in corrections {
                let s: f64 = pool
                    .candidates(&c)
                    .map(|(e, _)| pool.conditional_prob::<f64>(e, &c).unwrap())
                    .sum();
                assert!((s - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bayes_identity_holds() {
        let mut rng = Rng::new(5);
        for _ in 0..20 {
            let mut pool = PatternPool::new();
            for i in 0..(1 + rng.below(15)) {
                pool.add_count(
                    seg(&format!("x{i}")),
                    seg(&format!("y{}", rng.below(4))),
                    1 + rng.below(9),
                )
                .unwrap();
            }
            for ((c, e), n) in pool.entries() {
                let joint: f64 = pool.joint_prob(e, c).unwrap();
                let cond: f64 = pool.conditional_prob(e, c).unwrap();
                let marginal: f64 = pool.marginal_prob(c).unwrap();
                assert_eq!(joint, n as f64 / pool.grand_total() as f64);
                assert!((joint - cond * marginal).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn sampling_single_candidate_is_deterministic() {
        let mut pool = PatternPool::new();
        pool.add_count(seg("are"), seg("is"), 3).unwrap();
        for seed in 0..20 {
            let mut rng = Rng::new(seed);
            assert_eq!(pool.sample_replacement(&seg("is"), &mut rng).unwrap(), seg("are"));
        }
    }

    #[test]
    fn sampling_matches_conditional_frequencies() {
        let pool = cause_pool();
        let mut rng = Rng::new(2024);
        let draws = 30_000;
        let mut caused = 0u32;
        for _ in 0..draws {
            if pool.sample_replacement(&seg("cause"), &mut rng).unwrap() == seg("caused") {
                caused += 1;
            }
        }
        let freq = f64::from(caused) / f64::from(draws);
        assert!((freq - 2.0 / 3.0).abs() < 0.01, "freq = {freq}");
    }

    #[test]
    fn sampling_is_reproducible() {
        let pool = cause_pool();
        let run = |seed| {
            let mut rng = Rng::new(seed);
            (0..100)
                .map(|_| pool.sample_replacement(&seg("cause"), &mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(run(7), run(7));
    }

    #[test]
    fn doubling_corpus_doubles_counts() {
        let corpus = vec![
            ParallelSample::from_pair(
                Sentence::from_text(fixtures::SOURCE_A),
                Sentence::from_text(fixtures::TARGET_A),
            ),
            ParallelSample::from_pair(
                Sentence::from_text(fixtures::SOURCE_B),
                Sentence::from_text(fixtures::TARGET_B),
            ),
        ];
        let doubled: Vec<_> = corpus.iter().chain(&corpus).cloned().collect();
        let p1 = build_pool(&corpus);
        let p2 = build_pool(&doubled);
        for ((c, e), n) in p1.entries() {
            assert_eq!(p2.count(e, c), 2 * n);
        }
        assert_eq!(p2.grand_total(), 2 * p1.grand_total());
    }

    #[test]
    fn rejects_identity_patterns() {
        let mut pool = PatternPool::new();
        assert!(pool.add_count(seg("same"), seg("same"), 1).is_err());
    }
}
