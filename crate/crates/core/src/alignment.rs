//! Token-level alignment and edit extraction.
//!
//! Sentences are aligned with a Levenshtein dynamic program over whole tokens
//! (match 0, substitute 1, insert 1, delete 1). Ties are broken in a fixed
//! order — substitute, then delete, then insert — so extraction is
//! deterministic everywhere. Maximal runs of non-match operations merge into
//! single [`Edit`]s; [`MergePolicy::PerOp`] keeps them apart instead.

use serde::{Deserialize, Serialize};

use crate::corpus_io::Sentence;
use crate::error::{Error, Result};

/// Half-open token interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

/// Raw material for one edit: a source span, the replacement segment, and an
/// optional error-type label.
pub type EditPart = (Span, Vec<String>, Option<String>);

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

/// One aligned position in the minimal edit script.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlignOp {
    Match,
    Substitute,
    /// Target token absent from the source.
    Insert,
    /// Source token absent from the target.
    Delete,
}

/// A span-aligned correction: the source segment `[i, j)` is replaced by the
/// target segment `[k, l)`. The segments are stored redundantly so an edit is
/// meaningful without the sentences it came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edit {
    pub src_span: Span,
    pub tgt_span: Span,
    pub src_tokens: Vec<String>,
    pub tgt_tokens: Vec<String>,
    /// Error-type label carried through from annotated files; never computed.
    pub category: Option<String>,
}

impl Edit {
    /// The `(error, correction)` segment pair this edit contributes to a pool.
    pub fn pattern(&self) -> (&[String], &[String]) {
        (&self.src_tokens, &self.tgt_tokens)
    }

    fn validate(&self) -> Result<()> {
        if self.src_span.start > self.src_span.end || self.tgt_span.start > self.tgt_span.end {
            return Err(Error::Validation(format!("inverted span in edit {self:?}")));
        }
        if self.src_span.len() != self.src_tokens.len() || self.tgt_span.len() != self.tgt_tokens.len()
        {
            return Err(Error::Validation(format!(
                "span/segment length mismatch in edit {self:?}"
            )));
        }
        if self.src_span.is_empty() && self.tgt_span.is_empty() {
            return Err(Error::Validation("edit with two empty spans".into()));
        }
        if self.src_tokens == self.tgt_tokens {
            return Err(Error::Validation(format!(
                "identity edit (segments equal): {:?}",
                self.src_tokens
            )));
        }
        for tok in self.src_tokens.iter().chain(&self.tgt_tokens) {
            if tok.is_empty() || tok.chars().any(char::is_whitespace) {
                return Err(Error::Validation(format!("bad token in edit: {tok:?}")));
            }
        }
        Ok(())
    }
}

/// An ordered, non-overlapping sequence of edits against one sentence pair.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EditSequence {
    edits: Vec<Edit>,
}

impl EditSequence {
    pub fn empty() -> Self {
        EditSequence { edits: Vec::new() }
    }

    /// Validates and sorts the edits by `(src start, src end)`.
    ///
    /// Source spans must be pairwise non-overlapping; two zero-width source
    /// spans may not share a position (their application order would be
    /// ambiguous). Target spans must be non-overlapping and in source order.
    pub fn new(mut edits: Vec<Edit>) -> Result<Self> {
        for e in &edits {
            e.validate()?;
        }
        edits.sort_by_key(|e| (e.src_span.start, e.src_span.end));
        for pair in edits.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if a.src_span.end > b.src_span.start {
                return Err(Error::Validation(format!(
                    "overlapping source spans: {:?} and {:?}",
                    a.src_span, b.src_span
                )));
            }
            if a.src_span.is_empty() && b.src_span.is_empty() && a.src_span.start == b.src_span.start
            {
                return Err(Error::Validation(format!(
                    "two insertions at the same source position {}",
                    a.src_span.start
                )));
            }
            if a.tgt_span.end > b.tgt_span.start {
                return Err(Error::Validation(format!(
                    "target spans out of order: {:?} then {:?}",
                    a.tgt_span, b.tgt_span
                )));
            }
        }
        Ok(EditSequence { edits })
    }

    pub fn edits(&self) -> &[Edit] {
        &self.edits
    }

    pub fn len(&self) -> usize {
        self.edits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edits.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Edit> {
        self.edits.iter()
    }

    /// Swaps the source and target sides of every edit.
    ///
    /// Inverted pure insertions that land on the same position (they were
    /// adjacent deletions) are merged so the result is a valid sequence;
    /// applying the inverse to the target side reconstructs the source.
    pub fn inverse(&self) -> EditSequence {
        let mut out: Vec<Edit> = Vec::with_capacity(self.edits.len());
        for e in &self.edits {
            let inv = Edit {
                src_span: e.tgt_span,
                tgt_span: e.src_span,
                src_tokens: e.tgt_tokens.clone(),
                tgt_tokens: e.src_tokens.clone(),
                category: e.category.clone(),
            };
            match out.last_mut() {
                Some(prev)
                    if prev.src_span.is_empty()
                        && inv.src_span.is_empty()
                        && prev.src_span.start == inv.src_span.start =>
                {
                    prev.tgt_span.end = inv.tgt_span.end;
                    prev.tgt_tokens.extend(inv.tgt_tokens);
                    prev.category = None;
                }
                _ => out.push(inv),
            }
        }
        EditSequence { edits: out }
    }

    /// Builds a sequence from raw `(source span, replacement, category)` parts,
    /// filling in source segments and computing target spans against `source`.
    /// Returns the sequence together with the reconstructed target sentence.
    ///
    /// Construction establishes every sequence invariant directly, so the
    /// parts are validated inline rather than through [`EditSequence::new`];
    /// replacement tokens are still vetted by the final [`Sentence::new`].
    pub fn from_parts(
        source: &Sentence,
        parts: Vec<EditPart>,
    ) -> Result<(EditSequence, Sentence)> {
        let mut parts = parts;
        parts.sort_by_key(|(span, _, _)| (span.start, span.end));
        let src = source.tokens();
        let mut edits = Vec::with_capacity(parts.len());
        let mut target: Vec<String> = Vec::with_capacity(src.len());
        let mut cursor = 0usize;
        let mut prev_span: Option<Span> = None;
        for (span, replacement, category) in parts {
            if span.end > src.len() {
                return Err(Error::Validation(format!(
                    "edit span {span:?} out of bounds for {}-token sentence",
                    src.len()
                )));
            }
            if span.start < cursor {
                return Err(Error::Validation(format!(
                    "overlapping edit span {span:?} (previous edit ends at {cursor})"
                )));
            }
            if let Some(prev) = prev_span {
                if prev.is_empty() && span.is_empty() && prev.start == span.start {
                    return Err(Error::Validation(format!(
                        "two insertions at the same source position {}",
                        span.start
                    )));
                }
            }
            let segment = &src[span.start..span.end];
            if segment == replacement {
                return Err(Error::Validation(format!(
                    "identity edit (segments equal): {replacement:?}"
                )));
            }
            if span.is_empty() && replacement.is_empty() {
                return Err(Error::Validation("edit with two empty spans".into()));
            }
            target.extend_from_slice(&src[cursor..span.start]);
            let tgt_start = target.len();
            target.extend(replacement.iter().cloned());
            edits.push(Edit {
                src_span: span,
                tgt_span: Span::new(tgt_start, target.len()),
                src_tokens: segment.to_vec(),
                tgt_tokens: replacement,
                category,
            });
            cursor = span.end;
            prev_span = Some(span);
        }
        target.extend_from_slice(&src[cursor..]);
        Ok((EditSequence { edits }, Sentence::new(target)?))
    }
}

impl<'a> IntoIterator for &'a EditSequence {
    type Item = &'a Edit;
    type IntoIter = std::slice::Iter<'a, Edit>;
    fn into_iter(self) -> Self::IntoIter {
        self.edits.iter()
    }
}

/// How extraction groups non-match alignment runs into edits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MergePolicy {
    /// One edit per maximal contiguous run of non-match operations.
    #[default]
    MaximalRuns,
    /// One edit per operation (consecutive insertions still coalesce, since
    /// they share a source position).
    PerOp,
}

/// Minimal-cost alignment script between two token sequences.
///
/// Among all minimal-cost scripts the one with the most matches is chosen
/// (a sub/sub/sub path never shadows a del/match/sub path of equal cost);
/// remaining ties resolve substitute, then delete, then insert.
pub fn align(source: &Sentence, target: &Sentence) -> Vec<AlignOp> {
    let s = source.tokens();
    let t = target.tokens();
    let (m, n) = (s.len(), t.len());
    // Lexicographic DP over (cost ascending, matches descending), row-major.
    let w = n + 1;
    let mut cost = vec![0u32; (m + 1) * w];
    let mut matched = vec![0u32; (m + 1) * w];
    for (j, slot) in cost[..w].iter_mut().enumerate() {
        *slot = j as u32;
    }
    for i in 1..=m {
        cost[i * w] = i as u32;
        for j in 1..=n {
            let eq = s[i - 1] == t[j - 1];
            let diag = (
                cost[(i - 1) * w + j - 1] + u32::from(!eq),
                matched[(i - 1) * w + j - 1] + u32::from(eq),
            );
            let del = (cost[(i - 1) * w + j] + 1, matched[(i - 1) * w + j]);
            let ins = (cost[i * w + j - 1] + 1, matched[i * w + j - 1]);
            let best = [diag, del, ins]
                .into_iter()
                .min_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)))
                .unwrap();
            cost[i * w + j] = best.0;
            matched[i * w + j] = best.1;
        }
    }
    // Backtrace, preferring match, then substitute, then delete, then insert.
    let mut ops = Vec::with_capacity(m.max(n));
    let (mut i, mut j) = (m, n);
    while i > 0 || j > 0 {
        let here = (cost[i * w + j], matched[i * w + j]);
        if i > 0 && j > 0 {
            let eq = s[i - 1] == t[j - 1];
            let diag = (cost[(i - 1) * w + j - 1], matched[(i - 1) * w + j - 1]);
            if eq && here == (diag.0, diag.1 + 1) {
                ops.push(AlignOp::Match);
                i -= 1;
                j -= 1;
                continue;
            }
            if !eq && here == (diag.0 + 1, diag.1) {
                ops.push(AlignOp::Substitute);
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && here == (cost[(i - 1) * w + j] + 1, matched[(i - 1) * w + j]) {
            ops.push(AlignOp::Delete);
            i -= 1;
        } else {
            debug_assert!(j > 0);
            ops.push(AlignOp::Insert);
            j -= 1;
        }
    }
    ops.reverse();
    ops
}

/// Extracts the edit sequence turning `source` into `target`.
pub fn extract_edits(source: &Sentence, target: &Sentence) -> EditSequence {
    extract_edits_with(source, target, MergePolicy::MaximalRuns)
}

pub fn extract_edits_with(source: &Sentence, target: &Sentence, policy: MergePolicy) -> EditSequence {
    let ops = align(source, target);
    let make = |si: std::ops::Range<usize>, sj: std::ops::Range<usize>| Edit {
        src_span: Span::new(si.start, si.end),
        tgt_span: Span::new(sj.start, sj.end),
        src_tokens: source.tokens()[si].to_vec(),
        tgt_tokens: target.tokens()[sj].to_vec(),
        category: None,
    };
    let mut edits = Vec::new();
    let (mut i, mut j) = (0usize, 0usize);
    let mut run: Option<(usize, usize)> = None;
    let mut k = 0;
    while k <= ops.len() {
        let op = ops.get(k).copied();
        match op {
            Some(AlignOp::Match) | None => {
                if let Some((si, sj)) = run.take() {
                    edits.push(make(si..i, sj..j));
                }
                if op.is_some() {
                    i += 1;
                    j += 1;
                }
                k += 1;
            }
            Some(AlignOp::Substitute) => {
                match policy {
                    MergePolicy::MaximalRuns => {
                        run.get_or_insert((i, j));
                    }
                    MergePolicy::PerOp => edits.push(make(i..i + 1, j..j + 1)),
                }
                i += 1;
                j += 1;
                k += 1;
            }
            Some(AlignOp::Delete) => {
                match policy {
                    MergePolicy::MaximalRuns => {
                        run.get_or_insert((i, j));
                    }
                    MergePolicy::PerOp => edits.push(make(i..i + 1, j..j)),
                }
                i += 1;
                k += 1;
            }
            Some(AlignOp::Insert) => {
                match policy {
                    MergePolicy::MaximalRuns => {
                        run.get_or_insert((i, j));
                        j += 1;
                        k += 1;
                    }
                    MergePolicy::PerOp => {
                        // Consecutive insertions share a source position.
                        let start = j;
                        while ops.get(k) == Some(&AlignOp::Insert) {
                            j += 1;
                            k += 1;
                        }
                        edits.push(make(i..i, start..j));
                    }
                }
            }
        }
    }
    EditSequence { edits }
}

/// Splices each edit's target segment over its source span, right to left.
pub fn apply_edits(source: &Sentence, edits: &EditSequence) -> Result<Sentence> {
    let src = source.tokens();
    for e in edits {
        if e.src_span.end > src.len() {
            return Err(Error::Validation(format!(
                "edit {:?} out of bounds for {}-token sentence",
                e, src.len()
            )));
        }
        if src[e.src_span.start..e.src_span.end] != e.src_tokens[..] {
            return Err(Error::Validation(format!(
                "edit {:?} does not match source segment {:?}",
                e,
                &src[e.src_span.start..e.src_span.end]
            )));
        }
    }
    let mut tokens = src.to_vec();
    for e in edits.iter().rev() {
        tokens.splice(e.src_span.start..e.src_span.end, e.tgt_tokens.iter().cloned());
    }
    Sentence::new(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn s(text: &str) -> Sentence {
        Sentence::from_text(text)
    }

    #[test]
    fn align_identical() {
        assert_eq!(align(&s("a b c"), &s("a b c")), vec![AlignOp::Match; 3]);
    }

    #[test]
    fn align_single_substitution() {
        assert_eq!(align(&s("caused"), &s("cause")), vec![AlignOp::Substitute]);
    }

    #[test]
    fn align_insertion() {
        assert_eq!(
            align(&s("a c"), &s("a b c")),
            vec![AlignOp::Match, AlignOp::Insert, AlignOp::Match]
        );
    }

    #[test]
    fn align_empty_sides() {
        assert_eq!(align(&s(""), &s("a b")), vec![AlignOp::Insert; 2]);
        assert_eq!(align(&s("a b"), &s("")), vec![AlignOp::Delete; 2]);
        assert_eq!(align(&s(""), &s("")), vec![]);
    }

    #[test]
    fn extract_fixture_pair_finds_three_edits() {
        let seq = extract_edits(&s(fixtures::SOURCE_A), &s(fixtures::TARGET_A));
        let pats: Vec<_> = seq
            .iter()
            .map(|e| (e.src_tokens.join(" "), e.tgt_tokens.join(" ")))
            .collect();
        assert_eq!(
            pats,
            vec![
                ("caused".to_string(), "cause".to_string()),
                ("are".to_string(), "is".to_string()),
                ("spaces".to_string(), "space".to_string()),
            ]
        );
        assert_eq!(seq.edits()[0].src_span, Span::new(7, 8));
        assert_eq!(seq.edits()[1].src_span, Span::new(11, 12));
        assert_eq!(seq.edits()[2].src_span, Span::new(14, 15));
    }

    #[test]
    fn extract_second_fixture_merges_adjacent_run() {
        let seq = extract_edits(&s(fixtures::SOURCE_B), &s(fixtures::TARGET_B));
        let pats: Vec<_> = seq
            .iter()
            .map(|e| (e.src_tokens.join(" "), e.tgt_tokens.join(" ")))
            .collect();
        assert_eq!(
            pats,
            vec![
                ("relize".to_string(), "realize".to_string()),
                ("produce the".to_string(), "produces a".to_string()),
            ]
        );
    }

    #[test]
    fn extract_identical_is_empty() {
        assert!(extract_edits(&s("a b"), &s("a b")).is_empty());
    }

    #[test]
    fn extract_pure_insertion_run() {
        let seq = extract_edits(&s("x y"), &s("x a b y"));
        assert_eq!(seq.len(), 1);
        let e = &seq.edits()[0];
        assert!(e.src_tokens.is_empty());
        assert_eq!(e.tgt_tokens, vec!["a", "b"]);
    }

    #[test]
    fn apply_empty_is_identity() {
        let src = s("a b c");
        assert_eq!(apply_edits(&src, &EditSequence::empty()).unwrap(), src);
    }

    #[test]
    fn apply_fixture_edits_reconstructs_target() {
        let src = s(fixtures::SOURCE_A);
        let tgt = s(fixtures::TARGET_A);
        let seq = extract_edits(&src, &tgt);
        assert_eq!(apply_edits(&src, &seq).unwrap(), tgt);
    }

    #[test]
    fn apply_deletion() {
        let (seq, tgt) =
            EditSequence::from_parts(&s("a b"), vec![(Span::new(1, 2), vec![], None)]).unwrap();
        assert_eq!(tgt, s("a"));
        assert_eq!(apply_edits(&s("a b"), &seq).unwrap(), s("a"));
    }

    #[test]
    fn apply_rejects_segment_mismatch() {
        let src = s("a b");
        let seq = EditSequence::new(vec![Edit {
            src_span: Span::new(0, 1),
            tgt_span: Span::new(0, 1),
            src_tokens: vec!["z".into()],
            tgt_tokens: vec!["q".into()],
            category: None,
        }])
        .unwrap();
        let err = apply_edits(&src, &seq).unwrap_err();
        assert!(err.to_string().contains("does not match"));
    }

    #[test]
    fn sequence_rejects_overlap_and_double_insertion() {
        let edit = |a, b, c, d, x: &str, y: &str| Edit {
            src_span: Span::new(a, b),
            tgt_span: Span::new(c, d),
            src_tokens: if x.is_empty() { vec![] } else { vec![x.into()] },
            tgt_tokens: if y.is_empty() { vec![] } else { vec![y.into()] },
            category: None,
        };
        assert!(EditSequence::new(vec![edit(0, 1, 0, 1, "a", "b"), edit(0, 1, 1, 2, "a", "c")]).is_err());
        assert!(EditSequence::new(vec![edit(1, 1, 0, 1, "", "b"), edit(1, 1, 1, 2, "", "c")]).is_err());
    }

    #[test]
    fn per_op_policy_splits_runs() {
        let seq = extract_edits_with(
            &s("a b c d"),
            &s("x y d"),
            MergePolicy::PerOp,
        );
        // Run covers "a b c" -> "x y": one deletion plus two substitutions.
        assert_eq!(seq.len(), 3);
        assert!(seq.edits()[0].tgt_tokens.is_empty());
        assert_eq!(seq.edits()[1].tgt_tokens, vec!["x"]);
        assert_eq!(seq.edits()[2].tgt_tokens, vec!["y"]);
    }

    #[test]
    fn inverse_round_trips_through_target() {
        let src = s("a b c d e");
        let tgt = s("a x d");
        let seq = extract_edits(&src, &tgt);
        let back = apply_edits(&tgt, &seq.inverse()).unwrap();
        assert_eq!(back, src);
    }

    /// Independent top-down memoized cost oracle.
    fn oracle_cost(s: &[String], t: &[String]) -> u32 {
        fn go(s: &[String], t: &[String], i: usize, j: usize, memo: &mut Vec<Option<u32>>, w: usize) -> u32 {
            if let Some(v) = memo[i * w + j] {
                return v;
            }
            let v = if i == 0 {
                j as u32
            } else if j == 0 {
                i as u32
            } else {
                let sub = go(s, t, i - 1, j - 1, memo, w) + u32::from(s[i - 1] != t[j - 1]);
                let del = go(s, t, i - 1, j, memo, w) + 1;
                let ins = go(s, t, i, j - 1, memo, w) + 1;
                sub.min(del).min(ins)
            };
            memo[i * w + j] = Some(v);
            v
        }
        let w = t.len() + 1;
        let mut memo = vec![None; (s.len() + 1) * w];
        go(s, t, s.len(), t.len(), &mut memo, w)
    }

    fn script_cost(ops: &[AlignOp]) -> u32 {
        ops.iter().filter(|op| **op != AlignOp::Match).count() as u32
    }

    #[test]
    fn alignment_cost_matches_oracle_exhaustively() {
        // All sentence pairs of length <= 4 over a 3-symbol alphabet (the
        // acceptance suite extends this to length 5).
        let alphabet = ["a", "b", "c"];
        let mut sentences = vec![vec![]];
        for len in 1..=4usize {
            let mut next = Vec::new();
            for s in sentences.iter().filter(|s| s.len() == len - 1) {
                for sym in alphabet {
                    let mut v = s.clone();
                    v.push(sym.to_string());
                    next.push(v);
                }
            }
            sentences.extend(next);
        }
        for a in &sentences {
            for b in &sentences {
                let sa = Sentence::new(a.clone()).unwrap();
                let sb = Sentence::new(b.clone()).unwrap();
                let ops = align(&sa, &sb);
                assert_eq!(script_cost(&ops), oracle_cost(a, b), "{a:?} vs {b:?}");
            }
        }
    }

    #[test]
    fn extraction_never_leaves_mergeable_neighbors() {
        let mut rng = crate::rng::Rng::new(99);
        let alphabet = ["a", "b", "c"];
        for _ in 0..500 {
            let mk = |rng: &mut crate::rng::Rng| {
                let len = rng.below(8) as usize;
                Sentence::new(
                    (0..len)
                        .map(|_| alphabet[rng.below(3) as usize].to_string())
                        .collect(),
                )
                .unwrap()
            };
            let a = mk(&mut rng);
            let b = mk(&mut rng);
            let seq = extract_edits(&a, &b);
            for pair in seq.edits().windows(2) {
                let adjacent_src = pair[0].src_span.end == pair[1].src_span.start;
                let adjacent_tgt = pair[0].tgt_span.end == pair[1].tgt_span.start;
                assert!(!(adjacent_src && adjacent_tgt), "{a:?} vs {b:?}: {seq:?}");
            }
            assert_eq!(apply_edits(&a, &seq).unwrap(), b);
        }
    }
}
