//! Corpus and pool file formats.
//!
//! Everything here operates on pre-tokenized text: tokens are non-empty,
//! whitespace-free strings, and joining with single spaces is the inverse of
//! splitting on them. Tokenization itself is the caller's responsibility.
//!
//! Three formats are supported:
//!
//! * annotated corpora — `S <tokens>` lines followed by
//!   `A <start> <end>|||<type>|||<replacement>|||<required>|||<comment>|||<annotator>`
//!   lines, blocks separated by exactly one blank line, `-NONE-` encoding an
//!   empty replacement;
//! * parallel TSV — `source<TAB>target` per line;
//! * pattern pools — JSON Lines with fields `y`, `x`, `count`.
//!
//! Emission is canonical (edits sorted, annotators ascending, `REQUIRED` /
//! `-NONE-` filler fields, one trailing newline), so any parsed file is
//! byte-stable after one parse/emit pass.

use std::borrow::Cow;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::alignment::{extract_edits, EditPart, EditSequence, Span};
use crate::error::{Error, Result};
use crate::pattern_pool::PatternPool;

/// A tokenized sentence. May be empty.
///
/// Immutable after construction; the token storage is shared, so cloning is
/// cheap and sentences can move freely between worker threads.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Sentence {
    tokens: Arc<Vec<String>>,
}

impl Sentence {
    /// Validates that every token is non-empty and whitespace-free.
    pub fn new(tokens: Vec<String>) -> Result<Self> {
        for tok in &tokens {
            if tok.is_empty() {
                return Err(Error::Validation("empty token in sentence".into()));
            }
            if tok.chars().any(char::is_whitespace) {
                return Err(Error::Validation(format!(
                    "token contains whitespace: {tok:?}"
                )));
            }
        }
        Ok(Sentence {
            tokens: Arc::new(tokens),
        })
    }

    /// Splits on whitespace. Cannot fail: the pieces are non-empty and clean.
    pub fn from_text(text: &str) -> Self {
        Sentence {
            tokens: Arc::new(text.split_whitespace().map(str::to_string).collect()),
        }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }
}

impl fmt::Display for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.tokens.join(" "))
    }
}

/// A (source, target) sentence pair, optionally carrying gold edits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParallelSample {
    pub source: Sentence,
    pub target: Sentence,
    pub gold_edits: Option<EditSequence>,
    pub annotator_id: Option<u32>,
}

impl ParallelSample {
    /// A pair with no edit annotation.
    pub fn from_pair(source: Sentence, target: Sentence) -> Self {
        ParallelSample {
            source,
            target,
            gold_edits: None,
            annotator_id: None,
        }
    }

    /// The gold edits if present, otherwise freshly extracted.
    pub fn edits_or_extract(&self) -> Cow<'_, EditSequence> {
        match &self.gold_edits {
            Some(e) => Cow::Borrowed(e),
            None => Cow::Owned(extract_edits(&self.source, &self.target)),
        }
    }
}

const NONE_FIELD: &str = "-NONE-";

/// Parses an annotated corpus. One sample is produced per (block, annotator)
/// pair, with the target reconstructed by applying that annotator's edits.
pub fn parse_m2(text: &str) -> Result<Vec<ParallelSample>> {
    let mut samples = Vec::new();
    let mut block: Option<BlockParser> = None;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.is_empty() {
            if let Some(b) = block.take() {
                b.finish(&mut samples)?;
            }
        } else if let Some(rest) = strip_tag(line, 'S') {
            if block.is_some() {
                return Err(Error::Parse {
                    line: lineno,
                    msg: "S line inside an open block (missing blank separator?)".into(),
                });
            }
            block = Some(BlockParser::new(Sentence::from_text(rest), lineno));
        } else if let Some(rest) = strip_tag(line, 'A') {
            match block.as_mut() {
                Some(b) => b.push_annotation(rest, lineno)?,
                None => {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: "A line before any S line".into(),
                    })
                }
            }
        } else {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected S or A line, got {line:?}"),
            });
        }
    }
    if let Some(b) = block.take() {
        b.finish(&mut samples)?;
    }
    Ok(samples)
}

fn strip_tag(line: &str, tag: char) -> Option<&str> {
    let mut chars = line.chars();
    if chars.next() != Some(tag) {
        return None;
    }
    match chars.next() {
        Some(' ') => Some(&line[2..]),
        None => Some(""),
        _ => None,
    }
}

struct BlockParser {
    source: Sentence,
    start_line: usize,
    // annotator -> raw edit parts; ascending annotator order is canonical.
    annotations: BTreeMap<u32, Vec<EditPart>>,
}

impl BlockParser {
    fn new(source: Sentence, start_line: usize) -> Self {
        BlockParser {
            source,
            start_line,
            annotations: BTreeMap::new(),
        }
    }

    fn push_annotation(&mut self, rest: &str, lineno: usize) -> Result<()> {
        let fields: Vec<&str> = rest.split("|||").collect();
        if fields.len() != 6 {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected 6 |||-separated fields, got {}", fields.len()),
            });
        }
        let mut span_it = fields[0].split_whitespace();
        let (start_s, end_s) = match (span_it.next(), span_it.next(), span_it.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("expected `start end` span, got {:?}", fields[0]),
                })
            }
        };
        let annotator: u32 = fields[5].trim().parse().map_err(|_| Error::Parse {
            line: lineno,
            msg: format!("bad annotator id {:?}", fields[5]),
        })?;
        // `-1 -1` marks an annotator who proposes no edits.
        if start_s == "-1" && end_s == "-1" {
            self.annotations.entry(annotator).or_default();
            return Ok(());
        }
        let parse_idx = |s: &str| -> Result<usize> {
            s.parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad span index {s:?}"),
            })
        };
        let (start, end) = (parse_idx(start_s)?, parse_idx(end_s)?);
        if start > end {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("inverted span {start} {end}"),
            });
        }
        let replacement = if fields[2] == NONE_FIELD {
            Vec::new()
        } else {
            let toks: Vec<String> = fields[2].split(' ').map(str::to_string).collect();
            if toks.iter().any(String::is_empty) {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("empty token in replacement {:?}", fields[2]),
                });
            }
            toks
        };
        let category = Some(fields[1].to_string());
        self.annotations
            .entry(annotator)
            .or_default()
            .push((Span::new(start, end), replacement, category));
        Ok(())
    }

    fn finish(self, samples: &mut Vec<ParallelSample>) -> Result<()> {
        if self.annotations.is_empty() {
            samples.push(ParallelSample {
                target: self.source.clone(),
                source: self.source,
                gold_edits: Some(EditSequence::empty()),
                annotator_id: None,
            });
            return Ok(());
        }
        for (annotator, parts) in self.annotations {
            let (edits, target) =
                EditSequence::from_parts(&self.source, parts).map_err(|e| {
                    Error::Validation(format!(
                        "block at line {}, annotator {annotator}: {e}",
                        self.start_line
                    ))
                })?;
            samples.push(ParallelSample {
                source: self.source.clone(),
                target,
                gold_edits: Some(edits),
                annotator_id: Some(annotator),
            });
        }
        Ok(())
    }
}

/// Emits samples in the annotated-corpus format. Consecutive samples sharing
/// a source sentence become one block when their annotator ids ascend.
pub fn emit_m2(samples: &[ParallelSample]) -> Result<String> {
    let mut blocks: Vec<String> = Vec::new();
    let mut current: Option<(String, Vec<String>, u32)> = None; // (S line, A lines, last annotator)
    for (index, sample) in samples.iter().enumerate() {
        let edits = sample
            .gold_edits
            .as_ref()
            .ok_or(Error::MissingGoldEdits { index })?;
        let s_line = if sample.source.is_empty() {
            "S".to_string()
        } else {
            format!("S {}", sample.source.text())
        };
        let annotator = sample.annotator_id.unwrap_or(0);
        let mut a_lines = Vec::with_capacity(edits.len());
        if edits.is_empty() {
            if sample.annotator_id.is_some() {
                a_lines.push(format!(
                    "A -1 -1|||noop|||{NONE_FIELD}|||REQUIRED|||{NONE_FIELD}|||{annotator}"
                ));
            }
        } else {
            for e in edits {
                let replacement = if e.tgt_tokens.is_empty() {
                    NONE_FIELD.to_string()
                } else {
                    e.tgt_tokens.join(" ")
                };
                let category = e.category.as_deref().unwrap_or("UNK");
                a_lines.push(format!(
                    "A {} {}|||{category}|||{replacement}|||REQUIRED|||{NONE_FIELD}|||{annotator}",
                    e.src_span.start, e.src_span.end
                ));
            }
        }
        match current.as_mut() {
            Some((s, lines, last))
                if *s == s_line && !a_lines.is_empty() && annotator > *last =>
            {
                lines.extend(a_lines);
                *last = annotator;
            }
            _ => {
                if let Some((s, lines, _)) = current.take() {
                    blocks.push(assemble_block(s, lines));
                }
                current = Some((s_line, a_lines, annotator));
            }
        }
    }
    if let Some((s, lines, _)) = current.take() {
        blocks.push(assemble_block(s, lines));
    }
    let mut out = blocks.join("\n\n");
    if !out.is_empty() {
        out.push('\n');
    }
    Ok(out)
}

fn assemble_block(s_line: String, a_lines: Vec<String>) -> String {
    let mut block = s_line;
    for line in a_lines {
        block.push('\n');
        block.push_str(&line);
    }
    block
}

/// Parses `source<TAB>target` lines. Empty lines are skipped; samples carry
/// no gold edits.
pub fn parse_parallel_tsv(text: &str) -> Result<Vec<ParallelSample>> {
    let mut samples = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut it = line.split('\t');
        let (src, tgt) = match (it.next(), it.next(), it.next()) {
            (Some(s), Some(t), None) => (s, t),
            _ => {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: "expected exactly one tab per line".into(),
                })
            }
        };
        samples.push(ParallelSample::from_pair(
            Sentence::from_text(src),
            Sentence::from_text(tgt),
        ));
    }
    Ok(samples)
}

/// Emits `source<TAB>target` lines.
pub fn emit_parallel_tsv(samples: &[ParallelSample]) -> String {
    let mut out = String::new();
    for s in samples {
        out.push_str(&s.source.text());
        out.push('\t');
        out.push_str(&s.target.text());
        out.push('\n');
    }
    out
}

/// One serialized pool entry: a correction `y`, an error form `x`, and how
/// often the pair was observed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolRecord {
    #[serde(rename = "y")]
    pub correction: Vec<String>,
    #[serde(rename = "x")]
    pub error: Vec<String>,
    pub count: u64,
}

/// Serializes a pool as JSON Lines, sorted by `(y, x)`.
pub fn serialize_pool(pool: &PatternPool) -> String {
    let mut out = String::new();
    for ((correction, error), count) in pool.entries() {
        let record = PoolRecord {
            correction: correction.to_vec(),
            error: error.to_vec(),
            count,
        };
        out.push_str(&serde_json::to_string(&record).expect("pool record serializes"));
        out.push('\n');
    }
    out
}

/// Parses a JSON Lines pool file; duplicates and zero counts are rejected.
pub fn deserialize_pool(text: &str) -> Result<PatternPool> {
    let mut pool = PatternPool::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.is_empty() {
            continue;
        }
        let record: PoolRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
            line: lineno,
            msg: e.to_string(),
        })?;
        if record.count == 0 {
            return Err(Error::Validation(format!(
                "line {lineno}: pattern count must be >= 1"
            )));
        }
        if record.error.is_empty() && record.correction.is_empty() {
            return Err(Error::Validation(format!(
                "line {lineno}: pattern with both segments empty"
            )));
        }
        for token in record.error.iter().chain(&record.correction) {
            if token.is_empty() || token.chars().any(char::is_whitespace) {
                return Err(Error::Validation(format!(
                    "line {lineno}: bad pattern token {token:?}"
                )));
            }
        }
        if pool.count(&record.error, &record.correction) > 0 {
            return Err(Error::Validation(format!(
                "line {lineno}: duplicate pattern ({:?} -> {:?})",
                record.error, record.correction
            )));
        }
        pool.add_count(record.error, record.correction, record.count)
            .map_err(|e| Error::Validation(format!("line {lineno}: {e}")))?;
    }
    Ok(pool)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn parse_fixture_block_reconstructs_target() {
        let samples = parse_m2(fixtures::M2_BLOCK_A).unwrap();
        assert_eq!(samples.len(), 1);
        let s = &samples[0];
        assert_eq!(s.source, Sentence::from_text(fixtures::SOURCE_A));
        assert_eq!(s.target, Sentence::from_text(fixtures::TARGET_A));
        assert_eq!(s.annotator_id, Some(0));
        let edits = s.gold_edits.as_ref().unwrap();
        assert_eq!(edits.len(), 3);
        assert_eq!(edits.edits()[0].category.as_deref(), Some("R:VERB"));
    }

    #[test]
    fn parse_block_without_annotations_is_identity() {
        let samples = parse_m2("S Hello .\n").unwrap();
        assert_eq!(samples.len(), 1);
        assert_eq!(samples[0].source, samples[0].target);
        assert!(samples[0].gold_edits.as_ref().unwrap().is_empty());
        assert_eq!(samples[0].annotator_id, None);
    }

    #[test]
    fn parse_deletion_edit() {
        let text = "S a b\nA 1 2|||R|||-NONE-|||REQUIRED|||-NONE-|||0\n";
        let samples = parse_m2(text).unwrap();
        assert_eq!(samples[0].target, Sentence::from_text("a"));
    }

    #[test]
    fn parse_rejects_malformed_line_with_number() {
        let err = parse_m2("S a b\nA 0 1|||oops\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn parse_rejects_misplaced_lines() {
        let err = parse_m2("A 0 1|||R|||x|||REQUIRED|||-NONE-|||0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
        let err = parse_m2("S a\nS b\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn parse_rejects_overlapping_spans() {
        let text = "S a b c\n\
                    A 0 2|||R|||x|||REQUIRED|||-NONE-|||0\n\
                    A 1 3|||R|||y|||REQUIRED|||-NONE-|||0\n";
        let err = parse_m2(text).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn emit_identity_sample_is_single_s_line() {
        let sentence = Sentence::from_text("Hello .");
        let sample = ParallelSample {
            source: sentence.clone(),
            target: sentence,
            gold_edits: Some(EditSequence::empty()),
            annotator_id: None,
        };
        assert_eq!(emit_m2(&[sample]).unwrap(), "S Hello .\n");
    }

    #[test]
    fn emit_requires_gold_edits() {
        let sample = ParallelSample::from_pair(
            Sentence::from_text("a"),
            Sentence::from_text("b"),
        );
        let err = emit_m2(&[sample]).unwrap_err();
        assert!(err.to_string().contains("extract_edits"));
    }

    #[test]
    fn fixture_block_round_trips_byte_identically() {
        let samples = parse_m2(fixtures::M2_BLOCK_A).unwrap();
        assert_eq!(emit_m2(&samples).unwrap(), fixtures::M2_BLOCK_A);
    }

    #[test]
    fn two_annotators_share_one_block() {
        let text = "S a b\n\
                    A 0 1|||R|||x|||REQUIRED|||-NONE-|||0\n\
                    A 1 2|||R|||y|||REQUIRED|||-NONE-|||1\n";
        let samples = parse_m2(text).unwrap();
        assert_eq!(samples.len(), 2);
        assert_eq!(samples[0].annotator_id, Some(0));
        assert_eq!(samples[1].annotator_id, Some(1));
        assert_eq!(samples[0].target, Sentence::from_text("x b"));
        assert_eq!(samples[1].target, Sentence::from_text("a y"));
        let emitted = emit_m2(&samples).unwrap();
        assert_eq!(emitted, text);
        assert_eq!(parse_m2(&emitted).unwrap(), samples);
    }

    #[test]
    fn annotated_identity_round_trips_through_noop_line() {
        let sentence = Sentence::from_text("a b");
        let samples = vec![
            ParallelSample {
                source: sentence.clone(),
                target: sentence.clone(),
                gold_edits: Some(EditSequence::empty()),
                annotator_id: Some(0),
            },
            ParallelSample {
                source: sentence.clone(),
                target: Sentence::from_text("a c"),
                gold_edits: Some(extract_edits(&sentence, &Sentence::from_text("a c"))),
                annotator_id: Some(1),
            },
        ];
        let text = emit_m2(&samples).unwrap();
        assert!(text.contains("A -1 -1|||noop|||"));
        let parsed = parse_m2(&text).unwrap();
        assert_eq!(parsed.len(), 2);
        assert_eq!(parsed[0].annotator_id, Some(0));
        assert!(parsed[0].gold_edits.as_ref().unwrap().is_empty());
        assert_eq!(parsed[1].target, Sentence::from_text("a c"));
    }

    #[test]
    fn tsv_identity_pair() {
        let samples = parse_parallel_tsv("a b\ta b\n").unwrap();
        assert_eq!(samples.len(), 1);
        assert_eq!(samples[0].source, samples[0].target);
        assert!(samples[0].gold_edits.is_none());
    }

    #[test]
    fn tsv_fixture_pair_has_18_source_tokens() {
        let text = format!("{}\t{}\n", fixtures::SOURCE_A, fixtures::TARGET_A);
        let samples = parse_parallel_tsv(&text).unwrap();
        assert_eq!(samples[0].source.len(), 18);
    }

    #[test]
    fn tsv_skips_blank_lines_and_counts_others() {
        let samples = parse_parallel_tsv("a\ta\n\nb\tb\n").unwrap();
        assert_eq!(samples.len(), 2);
    }

    #[test]
    fn tsv_rejects_wrong_field_count() {
        let err = parse_parallel_tsv("a\ta\nno tabs here\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn empty_pool_serializes_to_empty_string() {
        assert_eq!(serialize_pool(&PatternPool::new()), "");
        assert!(deserialize_pool("").unwrap().is_empty());
    }

    #[test]
    fn pool_round_trip() {
        let mut pool = PatternPool::new();
        pool.add_count(vec!["caused".into()], vec!["cause".into()], 2).unwrap();
        pool.add_count(vec!["causing".into()], vec!["cause".into()], 1).unwrap();
        let text = serialize_pool(&pool);
        assert_eq!(text.lines().count(), 2);
        let back = deserialize_pool(&text).unwrap();
        assert_eq!(back, pool);
        assert_eq!(serialize_pool(&back), text);
    }

    #[test]
    fn pool_rejects_zero_count_and_duplicates() {
        let zero = r#"{"y":["a"],"x":["b"],"count":0}"#;
        assert!(matches!(deserialize_pool(zero), Err(Error::Validation(_))));
        let dup = "{\"y\":[\"a\"],\"x\":[\"b\"],\"count\":1}\n{\"y\":[\"a\"],\"x\":[\"b\"],\"count\":2}\n";
        assert!(matches!(deserialize_pool(dup), Err(Error::Validation(_))));
    }

    #[test]
    fn sentence_rejects_bad_tokens() {
        assert!(Sentence::new(vec!["a b".into()]).is_err());
        assert!(Sentence::new(vec!["".into()]).is_err());
        assert!(Sentence::new(vec!["ok".into()]).is_ok());
    }
}
