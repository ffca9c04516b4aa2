//! Loss functions for consistency-regularized training, as pure functions
//! over explicit per-position categorical distributions.
//!
//! These let the combined objective — cross-entropy on the original and
//! augmented sources plus a consistency KL pulling both predictions toward
//! their average — be computed and tested without any model in the loop.

use crate::error::{Error, Result};
use crate::num::Real;

/// Probabilities below this floor are clamped before any logarithm.
const PROB_FLOOR: f64 = 1e-12;

/// Default tolerance for per-position probability sums.
const SUM_TOLERANCE: f64 = 1e-9;

/// Per-target-position categorical distributions over a fixed vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSequence<F = f64> {
    rows: Vec<Vec<F>>,
    vocab: usize,
}

impl<F: Real> PredictionSequence<F> {
    /// Validates that rows share one width, entries are non-negative, and
    /// each row sums to 1 within `1e-9`.
    pub fn new(rows: Vec<Vec<F>>) -> Result<Self> {
        Self::with_tolerance(rows, F::from_f64(SUM_TOLERANCE).unwrap())
    }

    pub fn with_tolerance(rows: Vec<Vec<F>>, tolerance: F) -> Result<Self> {
        let vocab = rows.first().map_or(0, Vec::len);
        for (t, row) in rows.iter().enumerate() {
            if row.len() != vocab {
                return Err(Error::ShapeMismatch(format!(
                    "row {t} has {} entries, expected {vocab}",
                    row.len()
                )));
            }
            let mut sum = F::zero();
            for &p in row {
                if p < F::zero() {
                    return Err(Error::Validation(format!(
                        "negative probability at position {t}"
                    )));
                }
                sum = sum + p;
            }
            if (sum - F::one()).abs() > tolerance {
                return Err(Error::Validation(format!(
                    "position {t} sums to {sum:?}, not 1"
                )));
            }
        }
        Ok(PredictionSequence { rows, vocab })
    }

    /// Number of target positions.
    pub fn positions(&self) -> usize {
        self.rows.len()
    }

    /// Vocabulary size.
    pub fn vocab_size(&self) -> usize {
        self.vocab
    }

    pub fn rows(&self) -> &[Vec<F>] {
        &self.rows
    }
}

/// Which branches enter the consistency term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KlMode {
    /// `Σ_t KL(pred_xp[t] ‖ avg[t])` — the augmented branch only.
    #[default]
    OneSided,
    /// Both branches against the average; twice the summed Jensen–Shannon
    /// divergence. Invariant under swapping the inputs.
    Symmetric,
}

/// How per-position terms are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reduction {
    #[default]
    Sum,
    MeanPerPosition,
}

fn floor<F: Real>(p: F) -> F {
    p.max(F::from_f64(PROB_FLOOR).unwrap())
}

/// `−Σ_t ln pred[t][target[t]]` with the probability floor applied.
pub fn cross_entropy<F: Real>(pred: &PredictionSequence<F>, targets: &[usize]) -> Result<F> {
    if targets.len() != pred.positions() {
        return Err(Error::ShapeMismatch(format!(
            "{} targets for {} positions",
            targets.len(),
            pred.positions()
        )));
    }
    let mut total = F::zero();
    for (row, &index) in pred.rows.iter().zip(targets) {
        if index >= pred.vocab {
            return Err(Error::IndexOutOfRange {
                index,
                vocab: pred.vocab,
            });
        }
        total = total - floor(row[index]).ln();
    }
    Ok(total)
}

fn kl_to_avg<F: Real>(branch: &[F], other: &[F]) -> F {
    let half = F::from_f64(0.5).unwrap();
    let mut total = F::zero();
    for (&a, &b) in branch.iter().zip(other) {
        if a > F::zero() {
            let avg = half * (a + b);
            total = total + a * (floor(a) / floor(avg)).ln();
        }
    }
    total
}

/// Consistency divergence between predictions on the original and augmented
/// source, against their positionwise average. Finite for any valid inputs:
/// the average dominates each branch with ratio at most 2.
pub fn consistency_kl<F: Real>(
    pred_x: &PredictionSequence<F>,
    pred_xp: &PredictionSequence<F>,
    mode: KlMode,
) -> Result<F> {
    consistency_kl_with(pred_x, pred_xp, mode, Reduction::Sum)
}

pub fn consistency_kl_with<F: Real>(
    pred_x: &PredictionSequence<F>,
    pred_xp: &PredictionSequence<F>,
    mode: KlMode,
    reduction: Reduction,
) -> Result<F> {
    if pred_x.positions() != pred_xp.positions() || pred_x.vocab_size() != pred_xp.vocab_size() {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} vs {}x{}",
            pred_x.positions(),
            pred_x.vocab_size(),
            pred_xp.positions(),
            pred_xp.vocab_size()
        )));
    }
    let mut total = F::zero();
    for (rx, rxp) in pred_x.rows.iter().zip(&pred_xp.rows) {
        total = total
            + match mode {
                KlMode::OneSided => kl_to_avg(rxp, rx),
                KlMode::Symmetric => kl_to_avg(rx, rxp) + kl_to_avg(rxp, rx),
            };
    }
    Ok(match reduction {
        Reduction::Sum => total,
        Reduction::MeanPerPosition => {
            if pred_x.positions() == 0 {
                F::zero()
            } else {
                total / F::from_count(pred_x.positions() as u64)
            }
        }
    })
}

/// `ce_x + alpha · ce_xp + beta · kl`. With `alpha = beta = 0` this is the
/// plain empirical-risk objective.
pub fn combined_loss<F: Real>(ce_x: F, ce_xp: F, kl: F, alpha: F, beta: F) -> F {
    ce_x + alpha * ce_xp + beta * kl
}
