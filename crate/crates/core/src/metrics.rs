//! Affinity and Diversity of pattern pools.
//!
//! Affinity is the inverse of the symmetrized KL divergence between two
//! pools' joint pattern distributions; Diversity is the Shannon entropy of a
//! single pool. Natural log throughout, so both are reported in nats.
//!
//! Because two pools rarely share their full support, the divergence is
//! computed over the intersection of supports with both sides renormalized,
//! which keeps it finite and non-negative. [`SupportMode::RawTruncated`]
//! instead sums each term over the other pool's support without
//! renormalizing — that reading can go negative and is provided for
//! comparison only.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{ratio, Real};
use crate::pattern_pool::PatternPool;

type Segment = Vec<String>;
/// Support-set key, in `(correction, error)` order like pool iteration.
pub type PatternKey = (Segment, Segment);

/// How the divergence handles mismatched supports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SupportMode {
    /// Intersect supports and renormalize both distributions over it.
    #[default]
    RenormalizedIntersection,
    /// Sum each KL term over the reference pool's support, unrenormalized.
    RawTruncated,
}

/// Result of an affinity computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "F: Serialize + Real",
    deserialize = "F: serde::de::DeserializeOwned + Real"
))]
pub struct AffinityReport<F = f64> {
    /// Symmetrized KL divergence in nats; non-negative in the default mode.
    pub divergence: F,
    /// `1 / divergence`; serialized as the string `"inf"` when the
    /// divergence is zero.
    #[serde(
        serialize_with = "serialize_affinity",
        deserialize_with = "deserialize_affinity"
    )]
    pub affinity: F,
    /// Number of patterns in the evaluated support.
    pub support_size: usize,
    /// Probability mass of the first pool outside the evaluated support.
    pub dropped_p: F,
    /// Probability mass of the second pool outside the evaluated support.
    pub dropped_r: F,
}

impl<F: Real> AffinityReport<F> {
    /// Ordering for ranking: ascending divergence, so infinite affinities
    /// (identical pools) sort first without comparing infinities.
    pub fn cmp_by_divergence(&self, other: &Self) -> std::cmp::Ordering {
        self.divergence
            .partial_cmp(&other.divergence)
            .unwrap_or(std::cmp::Ordering::Equal)
    }
}

fn serialize_affinity<F, S>(value: &F, serializer: S) -> std::result::Result<S::Ok, S::Error>
where
    F: Real + Serialize,
    S: serde::Serializer,
{
    if value.is_infinite() && *value > F::zero() {
        serializer.serialize_str("inf")
    } else {
        value.serialize(serializer)
    }
}

fn deserialize_affinity<'de, F, D>(deserializer: D) -> std::result::Result<F, D::Error>
where
    F: Real + serde::de::DeserializeOwned,
    D: serde::Deserializer<'de>,
{
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw<F> {
        Number(F),
        Text(String),
    }
    match Raw::<F>::deserialize(deserializer)? {
        Raw::Number(v) => Ok(v),
        Raw::Text(s) if s == "inf" => Ok(F::infinity()),
        Raw::Text(s) => Err(serde::de::Error::custom(format!(
            "expected a number or \"inf\", got {s:?}"
        ))),
    }
}

/// Patterns present in both pools, in `(correction, error)` order.
pub fn support_intersection(a: &PatternPool, b: &PatternPool) -> BTreeSet<PatternKey> {
    a.entries()
        .filter(|((c, e), _)| b.count(e, c) > 0)
        .map(|((c, e), _)| (c.to_vec(), e.to_vec()))
        .collect()
}

/// KL divergence of `p` from `q`, both renormalized over `support`.
///
/// Every probability is an exact integer ratio; the log argument is formed by
/// cross-multiplying counts so the whole term rounds only at the final
/// floating-point operations.
pub fn kl_restricted<F: Real>(
    p: &PatternPool,
    q: &PatternPool,
    support: &BTreeSet<PatternKey>,
) -> Result<F> {
    if support.is_empty() {
        return Err(Error::DisjointSupports);
    }
    let mass = |pool: &PatternPool| -> u64 {
        support.iter().map(|(c, e)| pool.count(e, c)).sum()
    };
    let (mass_p, mass_q) = (mass(p), mass(q));
    let mut total = F::zero();
    for (c, e) in support {
        let cp = p.count(e, c);
        if cp == 0 {
            continue;
        }
        let cq = q.count(e, c);
        if cq == 0 {
            return Err(Error::Validation(format!(
                "support pattern absent from reference pool: ({e:?} -> {c:?})"
            )));
        }
        let p_hat: F = ratio(cp, mass_p);
        let log_ratio =
            (F::from_wide(cp as u128 * mass_q as u128) / F::from_wide(cq as u128 * mass_p as u128)).ln();
        total = total + p_hat * log_ratio;
    }
    Ok(total)
}

/// The literal truncated sum: `Σ_{s ∈ supp(q)} P_p(s) · ln(P_p(s) / P_q(s))`
/// over unrenormalized global probabilities. May be negative.
pub fn kl_truncated<F: Real>(p: &PatternPool, q: &PatternPool) -> Result<F> {
    if p.is_empty() || q.is_empty() {
        return Err(Error::EmptyPool);
    }
    let (gp, gq) = (p.grand_total(), q.grand_total());
    let mut total = F::zero();
    for ((c, e), cq) in q.entries() {
        let cp = p.count(e, c);
        if cp == 0 {
            continue;
        }
        let p_global: F = ratio(cp, gp);
        let log_ratio = (F::from_wide(cp as u128 * gq as u128)
            / F::from_wide(cq as u128 * gp as u128))
        .ln();
        total = total + p_global * log_ratio;
    }
    Ok(total)
}

/// Symmetrized divergence and its inverse for two pools.
pub fn affinity<F: Real>(pool_p: &PatternPool, pool_r: &PatternPool) -> Result<AffinityReport<F>> {
    affinity_with(pool_p, pool_r, SupportMode::RenormalizedIntersection)
}

pub fn affinity_with<F: Real>(
    pool_p: &PatternPool,
    pool_r: &PatternPool,
    mode: SupportMode,
) -> Result<AffinityReport<F>> {
    if pool_p.is_empty() || pool_r.is_empty() {
        return Err(Error::EmptyPool);
    }
    let support = support_intersection(pool_p, pool_r);
    let half = F::from_f64(0.5).unwrap();
    let divergence = match mode {
        SupportMode::RenormalizedIntersection => {
            let kl_pr: F = kl_restricted(pool_p, pool_r, &support)?;
            let kl_rp: F = kl_restricted(pool_r, pool_p, &support)?;
            half * kl_pr + half * kl_rp
        }
        SupportMode::RawTruncated => {
            if support.is_empty() {
                return Err(Error::DisjointSupports);
            }
            let kl_pr: F = kl_truncated(pool_p, pool_r)?;
            let kl_rp: F = kl_truncated(pool_r, pool_p)?;
            half * kl_pr + half * kl_rp
        }
    };
    let mass_in = |pool: &PatternPool| -> u64 {
        support.iter().map(|(c, e)| pool.count(e, c)).sum()
    };
    let dropped = |pool: &PatternPool| -> F {
        ratio(pool.grand_total() - mass_in(pool), pool.grand_total())
    };
    let affinity = if divergence == F::zero() {
        F::infinity()
    } else {
        F::one() / divergence
    };
    Ok(AffinityReport {
        divergence,
        affinity,
        support_size: support.len(),
        dropped_p: dropped(pool_p),
        dropped_r: dropped(pool_r),
    })
}

/// Shannon entropy of the pool's joint pattern distribution, in nats.
pub fn diversity<F: Real>(pool: &PatternPool) -> Result<F> {
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    let total = pool.grand_total();
    let mut entropy = F::zero();
    for (_, count) in pool.entries() {
        let p: F = ratio(count, total);
        entropy = entropy - p * p.ln();
    }
    Ok(entropy)
}
