//! Temporal Neighboring Graph sampling.
//!
//! Every temporal neighbor of (s_q, t_q) gets probability
//! exp(−|t_q−t|) / Σ exp(−|t_q−t'|); the sampler draws up to a capped number
//! of distinct neighbors without replacement by sequential renormalized
//! draws. Sampling consults no trainable parameter — this module has no
//! access to model state, which enforces that property structurally.

use rand::Rng;

use crate::config::SamplerVariant;
use crate::tkg::{EntityId, SearchRange, TemporalKg, TemporalNeighbor, TimeIndex};
use crate::{Error, Result};

/// A sampled TNG: the capped neighbor subset plus the candidate-set
/// distribution it was drawn from.
#[derive(Debug, Clone)]
pub struct TngSample {
    pub center: (EntityId, TimeIndex),
    /// Sampled neighbors (≤ cap; the whole candidate set for `All`).
    pub neighbors: Vec<TemporalNeighbor>,
    /// Probabilities over the deduplicated candidate set, in candidate
    /// order. Sums to 1. For the `All` variant these are the softmax(−|Δt|)
    /// weights (reported, not used for selection); for `Uniform` they are
    /// equal.
    pub weights: Vec<f64>,
}

impl TngSample {
    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }
}

/// Softmax of −|t − t_q| over the neighbor list.
///
/// Computed stably by shifting with the minimal |Δt| before exponentiation
/// (|Δt| spans thousands on ICEWS05-15, which underflows a naive exp).
pub fn neighbor_probabilities(
    neighbors: &[TemporalNeighbor],
    query_time: TimeIndex,
) -> Result<Vec<f64>> {
    if neighbors.is_empty() {
        return Err(Error::Validation(
            "neighbor_probabilities on an empty neighbor list".into(),
        ));
    }
    let tq = i64::from(query_time);
    let abs_dt: Vec<u64> = neighbors
        .iter()
        .map(|n| (i64::from(n.time) - tq).unsigned_abs())
        .collect();
    let min = *abs_dt.iter().min().unwrap();
    let mut probs: Vec<f64> = abs_dt
        .iter()
        .map(|&d| -((d - min) as f64))
        .map(f64::exp)
        .collect();
    let sum: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= sum;
    }
    Ok(probs)
}

/// Deduplicate (e, r, t) triples, keeping first occurrence, preserving order.
fn dedup_neighbors(mut neighbors: Vec<TemporalNeighbor>) -> Vec<TemporalNeighbor> {
    let mut seen = std::collections::HashSet::new();
    neighbors.retain(|n| seen.insert((n.entity, n.relation, n.time)));
    neighbors
}

/// Sample a TNG for (s_q, t_q) from the graph's incoming-edge index.
///
/// `weighted` draws min(cap, |N|) distinct neighbors without replacement in
/// sequential renormalized draws from the softmax(−|Δt|) distribution;
/// `uniform` does the same from equal probabilities; `all` returns the whole
/// candidate set and ignores the cap. An empty neighborhood yields an empty
/// sample (the encoder applies its fallback).
#[allow(clippy::too_many_arguments)]
pub fn sample_tng<R: Rng>(
    kg: &TemporalKg,
    subject: EntityId,
    query_time: TimeIndex,
    cap: usize,
    range: SearchRange,
    variant: SamplerVariant,
    exclude_query_time: bool,
    rng: &mut R,
) -> Result<TngSample> {
    let candidates =
        dedup_neighbors(kg.temporal_neighbors(subject, query_time, range, exclude_query_time));
    if candidates.is_empty() {
        return Ok(TngSample {
            center: (subject, query_time),
            neighbors: Vec::new(),
            weights: Vec::new(),
        });
    }
    let n = candidates.len();
    let weights = match variant {
        SamplerVariant::Uniform => vec![1.0 / n as f64; n],
        SamplerVariant::Weighted | SamplerVariant::All => {
            neighbor_probabilities(&candidates, query_time)?
        }
    };
    let neighbors = match variant {
        SamplerVariant::All => candidates.clone(),
        SamplerVariant::Weighted | SamplerVariant::Uniform => {
            if cap == 0 {
                return Err(Error::Validation(
                    "sampling cap must be >= 1 for weighted/uniform variants".into(),
                ));
            }
            draw_without_replacement(&candidates, &weights, cap.min(n), rng)
        }
    };
    Ok(TngSample {
        center: (subject, query_time),
        neighbors,
        weights,
    })
}

/// Sequential draws without replacement: pick from the remaining mass, remove,
/// renormalize implicitly by walking only live entries.
fn draw_without_replacement<R: Rng>(
    candidates: &[TemporalNeighbor],
    probs: &[f64],
    k: usize,
    rng: &mut R,
) -> Vec<TemporalNeighbor> {
    let n = candidates.len();
    let mut alive = vec![true; n];
    let mut remaining_mass: f64 = probs.iter().sum();
    let mut out = Vec::with_capacity(k);
    for _ in 0..k {
        let u: f64 = rng.gen::<f64>() * remaining_mass;
        let mut acc = 0.0;
        let mut chosen = None;
        for i in 0..n {
            if !alive[i] {
                continue;
            }
            acc += probs[i];
            if u < acc {
                chosen = Some(i);
                break;
            }
        }
        // Rounding at the top of the cumulative walk falls back to the last
        // live entry.
        let idx = chosen.unwrap_or_else(|| (0..n).rev().find(|&i| alive[i]).unwrap());
        alive[idx] = false;
        remaining_mass -= probs[idx];
        out.push(candidates[idx]);
    }
    out
}
