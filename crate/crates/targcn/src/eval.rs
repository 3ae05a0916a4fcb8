//! Filtered-ranking evaluation: per-query rank of the ground truth, MRR and
//! Hits@1/3/10.
//!
//! Every raw held-out fact (s, r, o, t) yields two object-prediction
//! queries: (s, r, ?, t) and the reciprocal (o, r + |R|, ?, t). The filtered
//! setting removes every other known-true candidate for the same query
//! before ranking; time-aware filtering (the default) only removes facts at
//! the same timestamp, static filtering ignores timestamps.
//!
//! Tie handling: `Pessimistic` (default) counts tied candidates as ranked
//! above the ground truth; `MeanOfTies` assigns the mean rank of the tie
//! group, reported as its ceiling so ranks stay integers.

use std::collections::{HashMap, HashSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::encoder::{encode_query, ModelParams};
use crate::math::derive_seed;
use crate::scoring::{score_all_candidates, CandidateTable};
use crate::tkg::{EntityId, Quadruple, RelationId, SplitTag, TemporalKg, TimeIndex};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TieMode {
    Pessimistic,
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterMode {
    /// Remove known-true candidates at the same timestamp only.
    TimeAware,
    /// Remove known-true candidates at any timestamp.
    Static,
}

/// One evaluated query with its filtered rank.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RankResult {
    pub subject: EntityId,
    pub relation: RelationId,
    pub object: EntityId,
    pub time: TimeIndex,
    pub filtered_rank: usize,
    /// Candidates removed by the filter (the ground truth is never removed).
    pub num_filtered: usize,
}

/// Aggregate metrics over a query set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub split: String,
    pub mrr: f64,
    pub hits1: f64,
    pub hits3: f64,
    pub hits10: f64,
    pub num_queries: usize,
    pub tie_mode: TieMode,
    pub filter_mode: FilterMode,
}

impl MetricsReport {
    pub fn from_ranks(
        ranks: &[usize],
        split: &str,
        tie_mode: TieMode,
        filter_mode: FilterMode,
    ) -> Self {
        let n = ranks.len().max(1) as f64;
        let mrr = ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / n;
        let frac = |k: usize| ranks.iter().filter(|&&r| r <= k).count() as f64 / n;
        MetricsReport {
            split: split.to_string(),
            mrr,
            hits1: frac(1),
            hits3: frac(3),
            hits10: frac(10),
            num_queries: ranks.len(),
            tie_mode,
            filter_mode,
        }
    }

    pub fn csv_header() -> &'static str {
        "split,mrr,hits1,hits3,hits10,num_queries,tie_mode,filter_mode"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.split,
            self.mrr,
            self.hits1,
            self.hits3,
            self.hits10,
            self.num_queries,
            match self.tie_mode {
                TieMode::Pessimistic => "pessimistic",
                TieMode::Mean => "mean",
            },
            match self.filter_mode {
                FilterMode::TimeAware => "time-aware",
                FilterMode::Static => "static",
            }
        )
    }
}

/// Known-true objects per (s, r, t) and per (s, r), built over the
/// reciprocal-augmented union of splits.
#[derive(Debug, Default, Clone)]
pub struct FilterIndex {
    time_aware: HashMap<(EntityId, RelationId, TimeIndex), Vec<EntityId>>,
    static_: HashMap<(EntityId, RelationId), Vec<EntityId>>,
}

impl FilterIndex {
    /// Build from raw splits; reciprocals are added here so reciprocal
    /// queries filter correctly.
    pub fn build(raw_splits: &[&[Quadruple]], num_base_relations: u32) -> FilterIndex {
        let mut idx = FilterIndex::default();
        for split in raw_splits {
            for q in split.iter() {
                idx.insert_augmented(q);
                idx.insert_augmented(&q.reciprocal(num_base_relations));
            }
        }
        idx
    }

    /// Insert a fact that already carries its final relation id (use this
    /// for quadruple lists that were reciprocal-augmented beforehand).
    pub fn insert_augmented(&mut self, q: &Quadruple) {
        self.time_aware
            .entry((q.subject, q.relation, q.time))
            .or_default()
            .push(q.object);
        self.static_
            .entry((q.subject, q.relation))
            .or_default()
            .push(q.object);
    }

    /// Objects to remove for a query, excluding the ground truth.
    pub fn filter_set(
        &self,
        subject: EntityId,
        relation: RelationId,
        time: TimeIndex,
        ground_truth: EntityId,
        mode: FilterMode,
    ) -> HashSet<EntityId> {
        let objects = match mode {
            FilterMode::TimeAware => self.time_aware.get(&(subject, relation, time)),
            FilterMode::Static => self.static_.get(&(subject, relation)),
        };
        objects
            .map(|v| v.iter().copied().filter(|&o| o != ground_truth).collect())
            .unwrap_or_default()
    }
}

/// Rank the ground truth among unfiltered candidates.
///
/// Pessimistic: rank = 1 + #greater + #ties. Mean: rank =
/// ceil(1 + #greater + #ties/2). The ground truth itself is never filtered
/// or counted as a tie.
pub fn filtered_rank(
    scores: &[f64],
    ground_truth: EntityId,
    filter_set: &HashSet<EntityId>,
    tie_mode: TieMode,
) -> (usize, usize) {
    let target = scores[ground_truth as usize];
    let mut greater = 0usize;
    let mut ties = 0usize;
    let mut filtered = 0usize;
    for (e, &s) in scores.iter().enumerate() {
        let e = e as EntityId;
        if e == ground_truth {
            continue;
        }
        if filter_set.contains(&e) {
            filtered += 1;
            continue;
        }
        if s > target {
            greater += 1;
        } else if s == target {
            ties += 1;
        }
    }
    let rank = match tie_mode {
        TieMode::Pessimistic => 1 + greater + ties,
        // 1 + greater + ties/2, rounded up to keep an integer rank
        TieMode::Mean => 1 + greater + ties.div_ceil(2),
    };
    (rank, filtered)
}

#[derive(Debug, Clone, Copy)]
pub struct EvalOptions {
    pub tie_mode: TieMode,
    pub filter_mode: FilterMode,
    /// Worker threads for query scoring; results are merged in query order
    /// so the report is identical at any thread count.
    pub threads: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            tie_mode: TieMode::Pessimistic,
            filter_mode: FilterMode::TimeAware,
            threads: 1,
        }
    }
}

/// Seed tag separating evaluation RNG streams from training ones.
const EVAL_STREAM: u64 = 0xe7a1;

fn split_ordinal(split: SplitTag) -> u64 {
    match split {
        SplitTag::Train => 0,
        SplitTag::Valid => 1,
        SplitTag::Test => 2,
    }
}

/// Evaluate a raw held-out split with reciprocal query expansion.
///
/// TNG sampling uses the training graph only; per-query seeds derive from
/// (config.seed, split, fact index, direction), so any parallel schedule
/// reproduces the single-threaded result.
pub fn evaluate(
    train_kg: &TemporalKg,
    facts: &[Quadruple],
    filter: &FilterIndex,
    params: &ModelParams,
    config: &RunConfig,
    split: SplitTag,
    options: EvalOptions,
) -> Result<(MetricsReport, Vec<RankResult>)> {
    let num_base = train_kg.num_base_relations() as u32;
    // Expand each fact into the object query and its reciprocal.
    let queries: Vec<(Quadruple, u64)> = facts
        .iter()
        .enumerate()
        .flat_map(|(i, q)| {
            [
                (
                    *q,
                    derive_seed(
                        config.seed,
                        &[EVAL_STREAM, split_ordinal(split), i as u64, 0],
                    ),
                ),
                (
                    q.reciprocal(num_base),
                    derive_seed(
                        config.seed,
                        &[EVAL_STREAM, split_ordinal(split), i as u64, 1],
                    ),
                ),
            ]
        })
        .collect();

    // Candidate tables, one per distinct Φ argument.
    let mut tables: HashMap<u32, CandidateTable> = HashMap::new();
    for (q, _) in &queries {
        let key = CandidateTable::key_for(config, q.time);
        tables
            .entry(key)
            .or_insert_with(|| CandidateTable::build(params, config, q.time));
    }

    let run_query = |(query, seed): &(Quadruple, u64)| -> Result<RankResult> {
        let mut rng = ChaCha8Rng::seed_from_u64(*seed);
        let h_s = encode_query(
            train_kg,
            query.subject,
            query.time,
            config,
            params,
            &mut rng,
        )?;
        let table = &tables[&CandidateTable::key_for(config, query.time)];
        let scores = score_all_candidates(&h_s, query.relation, table, params, config.score_fn)?;
        let filter_set = filter.filter_set(
            query.subject,
            query.relation,
            query.time,
            query.object,
            options.filter_mode,
        );
        let (rank, num_filtered) =
            filtered_rank(&scores, query.object, &filter_set, options.tie_mode);
        Ok(RankResult {
            subject: query.subject,
            relation: query.relation,
            object: query.object,
            time: query.time,
            filtered_rank: rank,
            num_filtered,
        })
    };

    let results: Vec<RankResult> = if options.threads <= 1 || queries.len() < 2 {
        queries.iter().map(run_query).collect::<Result<_>>()?
    } else {
        let chunk = queries.len().div_ceil(options.threads);
        let mut merged: Vec<Vec<RankResult>> = Vec::new();
        std::thread::scope(|scope| -> Result<()> {
            let handles: Vec<_> = queries
                .chunks(chunk)
                .map(|part| {
                    scope.spawn(move || part.iter().map(run_query).collect::<Result<Vec<_>>>())
                })
                .collect();
            for h in handles {
                merged.push(h.join().expect("evaluation worker panicked")?);
            }
            Ok(())
        })?;
        merged.into_iter().flatten().collect()
    };

    let ranks: Vec<usize> = results.iter().map(|r| r.filtered_rank).collect();
    let report = MetricsReport::from_ranks(
        &ranks,
        &split.to_string(),
        options.tie_mode,
        options.filter_mode,
    );
    Ok((report, results))
}

/// Per-query rank dump: `s⟨TAB⟩r⟨TAB⟩o⟨TAB⟩t⟨TAB⟩rank` lines.
pub fn ranks_tsv(results: &[RankResult]) -> String {
    let mut out = String::new();
    for r in results {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            r.subject, r.relation, r.object, r.time, r.filtered_rank
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(items: &[u32]) -> HashSet<EntityId> {
        items.iter().copied().collect()
    }

    #[test]
    fn unique_maximum_is_rank_one() {
        let scores = [0.1, 0.9, 0.3, 0.2];
        let (rank, _) = filtered_rank(&scores, 1, &set(&[]), TieMode::Pessimistic);
        assert_eq!(rank, 1);
    }

    #[test]
    fn all_equal_tie_arithmetic() {
        let scores = [0.5; 4];
        let (pess, _) = filtered_rank(&scores, 2, &set(&[]), TieMode::Pessimistic);
        assert_eq!(pess, 4); // three ties all counted above
        let (mean, _) = filtered_rank(&scores, 2, &set(&[]), TieMode::Mean);
        assert_eq!(mean, 3); // ceil(1 + 3/2) = ceil(2.5)
    }

    #[test]
    fn filtering_removes_candidates() {
        let scores = [0.9, 0.8, 0.7, 0.6];
        let (rank, nf) = filtered_rank(&scores, 3, &set(&[0, 1]), TieMode::Pessimistic);
        assert_eq!(rank, 2);
        assert_eq!(nf, 2);
    }

    #[test]
    fn ground_truth_never_filtered() {
        let scores = [0.9, 0.8];
        // even if the caller passes the ground truth inside the filter set
        let (rank, nf) = filtered_rank(&scores, 0, &set(&[0, 1]), TieMode::Pessimistic);
        assert_eq!(rank, 1);
        assert_eq!(nf, 1);
    }

    #[test]
    fn rank_matches_sort_scan_oracle() {
        // pseudo-random score vectors and filter sets vs. an independent
        // sort-and-scan evaluator, both tie modes
        let mut state = 777u64;
        let mut next = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 33) as u32
        };
        for _trial in 0..200 {
            let n = 10usize;
            let scores: Vec<f64> = (0..n).map(|_| f64::from(next() % 7) / 3.0).collect();
            let truth = next() % n as u32;
            let mut fset = HashSet::new();
            for _ in 0..(next() % 5) {
                let e = next() % n as u32;
                if e != truth {
                    fset.insert(e);
                }
            }
            for tie_mode in [TieMode::Pessimistic, TieMode::Mean] {
                let (rank, _) = filtered_rank(&scores, truth, &fset, tie_mode);

                // oracle: materialize remaining candidates, sort by score
                // descending, scan for the tie group around the target
                let mut remaining: Vec<(f64, u32)> = scores
                    .iter()
                    .enumerate()
                    .map(|(e, &s)| (s, e as u32))
                    .filter(|&(_, e)| e == truth || !fset.contains(&e))
                    .collect();
                remaining.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
                let target = scores[truth as usize];
                let first = remaining.iter().position(|&(s, _)| s == target).unwrap();
                let group = remaining.iter().filter(|&&(s, _)| s == target).count();
                let expect = match tie_mode {
                    // tie group occupies positions first+1 ..= first+group
                    TieMode::Pessimistic => first + group,
                    TieMode::Mean => {
                        // mean of 1-based positions of the group, others tied
                        // with the target excluded from "others ranked above"
                        let mean2 = 2 * (first + 1) + (group - 1); // 2*mean rank
                        mean2.div_ceil(2)
                    }
                };
                assert_eq!(rank, expect, "scores={scores:?} truth={truth} {tie_mode:?}");
            }
        }
    }

    #[test]
    fn rank_invariant_under_monotone_transform() {
        let scores: [f64; 5] = [0.2, 1.4, -0.3, 0.9, 0.9];
        let transformed: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp()).collect();
        for truth in 0..5u32 {
            for tie_mode in [TieMode::Pessimistic, TieMode::Mean] {
                let (a, _) = filtered_rank(&scores, truth, &set(&[]), tie_mode);
                let (b, _) = filtered_rank(&transformed, truth, &set(&[]), tie_mode);
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn enlarging_filter_never_increases_rank() {
        let scores = [0.2, 1.4, -0.3, 0.9, 0.7];
        let (base, _) = filtered_rank(&scores, 4, &set(&[]), TieMode::Pessimistic);
        let (less, _) = filtered_rank(&scores, 4, &set(&[1, 3]), TieMode::Pessimistic);
        assert!(less <= base);
    }

    #[test]
    fn metrics_arithmetic() {
        let report = MetricsReport::from_ranks(
            &[1, 4],
            "valid",
            TieMode::Pessimistic,
            FilterMode::TimeAware,
        );
        assert!((report.mrr - 0.625).abs() < 1e-12);
        assert!((report.hits1 - 0.5).abs() < 1e-12);
        assert!((report.hits3 - 0.5).abs() < 1e-12);
        assert!((report.hits10 - 1.0).abs() < 1e-12);
        assert!(report.hits1 <= report.hits3 && report.hits3 <= report.hits10);
        assert!(report.mrr >= report.hits1);
    }

    #[test]
    fn single_rank_one_query() {
        let report =
            MetricsReport::from_ranks(&[1], "test", TieMode::Pessimistic, FilterMode::TimeAware);
        assert_eq!(report.mrr, 1.0);
        assert_eq!(report.hits10, 1.0);
        assert_eq!(report.num_queries, 1);
    }

    #[test]
    fn filter_index_respects_mode() {
        let raw = [Quadruple::new(0, 0, 1, 3), Quadruple::new(0, 0, 2, 5)];
        let idx = FilterIndex::build(&[&raw], 1);
        let ta = idx.filter_set(0, 0, 3, 9, FilterMode::TimeAware);
        assert_eq!(ta, set(&[1]));
        let st = idx.filter_set(0, 0, 3, 9, FilterMode::Static);
        assert_eq!(st, set(&[1, 2]));
        // reciprocal facts are filterable too
        let rec = idx.filter_set(1, 1, 3, 9, FilterMode::TimeAware);
        assert_eq!(rec, set(&[0]));
    }
}
