//! Streaming corpus readers.
//!
//! Inputs are consumed in bounded batches so corpus size never dictates
//! memory use: annotated files advance one block at a time, parallel files
//! one line at a time. Each reader reports absolute `file:line` positions in
//! its errors.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use gecaug::{parse_m2, ParallelSample, Sentence};

pub enum SampleReader {
    M2 {
        path: PathBuf,
        lines: std::io::Lines<BufReader<File>>,
        lineno: usize,
        done: bool,
    },
    Tsv {
        path: PathBuf,
        lines: std::io::Lines<BufReader<File>>,
        lineno: usize,
    },
    Paired {
        src_path: PathBuf,
        src_lines: std::io::Lines<BufReader<File>>,
        tgt_lines: std::io::Lines<BufReader<File>>,
        lineno: usize,
    },
}

fn open_lines(path: &Path) -> Result<std::io::Lines<BufReader<File>>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(file).lines())
}

impl SampleReader {
    pub fn m2(path: &Path) -> Result<Self> {
        Ok(SampleReader::M2 {
            path: path.to_path_buf(),
            lines: open_lines(path)?,
            lineno: 0,
            done: false,
        })
    }

    pub fn tsv(path: &Path) -> Result<Self> {
        Ok(SampleReader::Tsv {
            path: path.to_path_buf(),
            lines: open_lines(path)?,
            lineno: 0,
        })
    }

    pub fn paired(src: &Path, tgt: &Path) -> Result<Self> {
        Ok(SampleReader::Paired {
            src_path: src.to_path_buf(),
            src_lines: open_lines(src)?,
            tgt_lines: open_lines(tgt)?,
            lineno: 0,
        })
    }

    /// Reads up to `max` samples; an empty result means end of input.
    /// Annotated blocks are never split, so one block's samples always share
    /// a batch (a block may push the count past `max`).
    pub fn next_batch(&mut self, max: usize) -> Result<Vec<ParallelSample>> {
        match self {
            SampleReader::M2 {
                path,
                lines,
                lineno,
                done,
            } => {
                let mut samples = Vec::new();
                let mut block = String::new();
                let mut block_start = *lineno + 1;
                while !*done && samples.len() < max {
                    let line = match lines.next() {
                        Some(line) => {
                            *lineno += 1;
                            line.with_context(|| format!("reading {}", path.display()))?
                        }
                        None => {
                            *done = true;
                            String::new()
                        }
                    };
                    if line.is_empty() {
                        if !block.is_empty() {
                            let parsed = parse_m2(&block).map_err(|e| {
                                located(path, block_start, e)
                            })?;
                            samples.extend(parsed);
                            block.clear();
                        }
                        block_start = *lineno + 1;
                    } else {
                        block.push_str(&line);
                        block.push('\n');
                    }
                }
                if !block.is_empty() {
                    let parsed =
                        parse_m2(&block).map_err(|e| located(path, block_start, e))?;
                    samples.extend(parsed);
                }
                Ok(samples)
            }
            SampleReader::Tsv { path, lines, lineno } => {
                let mut samples = Vec::new();
                while samples.len() < max {
                    let Some(line) = lines.next() else { break };
                    *lineno += 1;
                    let line = line.with_context(|| format!("reading {}", path.display()))?;
                    if line.is_empty() {
                        continue;
                    }
                    let mut it = line.split('\t');
                    let (src, tgt) = match (it.next(), it.next(), it.next()) {
                        (Some(s), Some(t), None) => (s, t),
                        _ => bail!(
                            "{}:{}: expected exactly one tab per line",
                            path.display(),
                            lineno
                        ),
                    };
                    samples.push(ParallelSample::from_pair(
                        Sentence::from_text(src),
                        Sentence::from_text(tgt),
                    ));
                }
                Ok(samples)
            }
            SampleReader::Paired {
                src_path,
                src_lines,
                tgt_lines,
                lineno,
            } => {
                let mut samples = Vec::new();
                while samples.len() < max {
                    match (src_lines.next(), tgt_lines.next()) {
                        (None, None) => break,
                        (Some(_), None) | (None, Some(_)) => bail!(
                            "{}: source and target files have different line counts (diverge after line {})",
                            src_path.display(),
                            lineno
                        ),
                        (Some(s), Some(t)) => {
                            *lineno += 1;
                            let s = s.with_context(|| format!("reading {}", src_path.display()))?;
                            let t = t?;
                            samples.push(ParallelSample::from_pair(
                                Sentence::from_text(&s),
                                Sentence::from_text(&t),
                            ));
                        }
                    }
                }
                Ok(samples)
            }
        }
    }
}

fn located(path: &Path, block_start: usize, err: gecaug::Error) -> anyhow::Error {
    match err {
        gecaug::Error::Parse { line, msg } => {
            anyhow::anyhow!("{}:{}: {msg}", path.display(), block_start + line - 1)
        }
        other => anyhow::anyhow!("{} (block at {}:{block_start})", other, path.display()),
    }
}

/// A sequence of readers consumed back to back, so several corpus files
/// concatenate into one logical corpus.
pub struct CorpusStream {
    readers: Vec<SampleReader>,
    current: usize,
}

impl CorpusStream {
    pub fn new(readers: Vec<SampleReader>) -> Self {
        CorpusStream { readers, current: 0 }
    }

    pub fn next_batch(&mut self, max: usize) -> Result<Vec<ParallelSample>> {
        while self.current < self.readers.len() {
            let batch = self.readers[self.current].next_batch(max)?;
            if batch.is_empty() {
                self.current += 1;
                continue;
            }
            return Ok(batch);
        }
        Ok(Vec::new())
    }

}
