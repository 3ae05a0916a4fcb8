//! Core temporal knowledge graph data model.
//!
//! A TKG is a set of quadruples (s, r, o, t) over dense integer vocabularies.
//! Reciprocal augmentation adds (o, r + |R|, s, t) for every raw fact, which
//! turns subject prediction into object prediction and lets the neighbor
//! index stay single-sided: temporal neighbors of a node are its *incoming*
//! edges, one per quadruple that has the node as object.

use std::collections::BTreeSet;

use crate::{Error, Result};

/// Dense entity index, `< |E|`.
pub type EntityId = u32;
/// Dense relation index, `< 2·|R_base|` after reciprocal augmentation.
pub type RelationId = u32;
/// Discrete timestamp counted from 0 (days for the ICEWS benchmarks).
pub type TimeIndex = u32;

/// One timestamped fact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Quadruple {
    pub subject: EntityId,
    pub relation: RelationId,
    pub object: EntityId,
    pub time: TimeIndex,
}

impl Quadruple {
    pub fn new(subject: EntityId, relation: RelationId, object: EntityId, time: TimeIndex) -> Self {
        Quadruple {
            subject,
            relation,
            object,
            time,
        }
    }

    /// The reciprocal fact (o, r + num_base_relations, s, t).
    pub fn reciprocal(&self, num_base_relations: u32) -> Quadruple {
        Quadruple {
            subject: self.object,
            relation: self.relation + num_base_relations,
            object: self.subject,
            time: self.time,
        }
    }
}

/// An incoming edge (e, r, t) relative to some query node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TemporalNeighbor {
    pub entity: EntityId,
    pub relation: RelationId,
    pub time: TimeIndex,
    /// Signed time difference t − t_q.
    pub delta: i64,
}

/// Which split a graph was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitTag {
    Train,
    Valid,
    Test,
}

impl std::fmt::Display for SplitTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SplitTag::Train => write!(f, "train"),
            SplitTag::Valid => write!(f, "valid"),
            SplitTag::Test => write!(f, "test"),
        }
    }
}

/// Neighbor search radius: bounded |t − t_q| ≤ r, or the whole timeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchRange {
    Bounded(u32),
    Unbounded,
}

impl SearchRange {
    pub fn contains(&self, delta: i64) -> bool {
        match self {
            SearchRange::Bounded(r) => delta.unsigned_abs() <= u64::from(*r),
            SearchRange::Unbounded => true,
        }
    }
}

/// Immutable indexed quadruple store.
///
/// `incoming[o]` lists every (e, r, t) with a quadruple (e, r, o, t), sorted
/// ascending by (t, e, r). Built once, then read-only.
#[derive(Debug, Clone)]
pub struct TemporalKg {
    quadruples: Vec<Quadruple>,
    incoming: Vec<Vec<(EntityId, RelationId, TimeIndex)>>,
    num_entities: usize,
    num_base_relations: usize,
    num_timestamps: usize,
    split: SplitTag,
}

/// Append the reciprocal of every quadruple.
///
/// Output is the input followed by, for each (s, r, o, t), the quadruple
/// (o, r + num_base_relations, s, t); length is exactly doubled.
pub fn add_reciprocals(raw: &[Quadruple], num_base_relations: u32) -> Result<Vec<Quadruple>> {
    for (i, q) in raw.iter().enumerate() {
        if q.relation >= num_base_relations {
            return Err(Error::Validation(format!(
                "quadruple {} has relation id {} >= {} base relations",
                i + 1,
                q.relation,
                num_base_relations
            )));
        }
    }
    let mut out = Vec::with_capacity(raw.len() * 2);
    out.extend_from_slice(raw);
    out.extend(raw.iter().map(|q| q.reciprocal(num_base_relations)));
    Ok(out)
}

impl TemporalKg {
    /// Build the incoming-edge index over a (usually reciprocal-augmented)
    /// quadruple list. Rebuilding from the same input yields an identical
    /// index.
    pub fn build(
        quadruples: Vec<Quadruple>,
        num_entities: usize,
        num_base_relations: usize,
        num_timestamps: usize,
        split: SplitTag,
    ) -> Result<Self> {
        let max_relation = (num_base_relations * 2) as u32;
        for (i, q) in quadruples.iter().enumerate() {
            if (q.subject as usize) >= num_entities || (q.object as usize) >= num_entities {
                return Err(Error::Validation(format!(
                    "quadruple {}: entity id out of range (|E| = {})",
                    i + 1,
                    num_entities
                )));
            }
            if q.relation >= max_relation {
                return Err(Error::Validation(format!(
                    "quadruple {}: relation id {} out of range (2|R| = {})",
                    i + 1,
                    q.relation,
                    max_relation
                )));
            }
            if (q.time as usize) >= num_timestamps {
                return Err(Error::Validation(format!(
                    "quadruple {}: time index {} out of range (|T| = {})",
                    i + 1,
                    q.time,
                    num_timestamps
                )));
            }
        }
        let mut incoming = vec![Vec::new(); num_entities];
        for q in &quadruples {
            incoming[q.object as usize].push((q.subject, q.relation, q.time));
        }
        for list in &mut incoming {
            list.sort_unstable_by_key(|&(e, r, t)| (t, e, r));
        }
        Ok(TemporalKg {
            quadruples,
            incoming,
            num_entities,
            num_base_relations,
            num_timestamps,
            split,
        })
    }

    pub fn quadruples(&self) -> &[Quadruple] {
        &self.quadruples
    }

    pub fn num_entities(&self) -> usize {
        self.num_entities
    }

    /// Base relation count, before reciprocal augmentation.
    pub fn num_base_relations(&self) -> usize {
        self.num_base_relations
    }

    pub fn num_timestamps(&self) -> usize {
        self.num_timestamps
    }

    pub fn split(&self) -> SplitTag {
        self.split
    }

    /// All incoming edges of `entity` (the raw index entry).
    pub fn incoming(&self, entity: EntityId) -> &[(EntityId, RelationId, TimeIndex)] {
        &self.incoming[entity as usize]
    }

    /// Every temporal neighbor (e, r, t) of (s_q, t_q) with |t − t_q| inside
    /// `range`. Neighbors at t = t_q are included unless `exclude_query_time`
    /// is set; an empty result is a valid outcome.
    pub fn temporal_neighbors(
        &self,
        subject: EntityId,
        query_time: TimeIndex,
        range: SearchRange,
        exclude_query_time: bool,
    ) -> Vec<TemporalNeighbor> {
        let list = &self.incoming[subject as usize];
        let tq = i64::from(query_time);
        // Lists are sorted by time, so a bounded range is a contiguous slice.
        let slice = match range {
            SearchRange::Bounded(r) => {
                let lo = tq.saturating_sub(i64::from(r));
                let hi = tq + i64::from(r);
                let start = list.partition_point(|&(_, _, t)| i64::from(t) < lo);
                let end = list.partition_point(|&(_, _, t)| i64::from(t) <= hi);
                &list[start..end]
            }
            SearchRange::Unbounded => &list[..],
        };
        slice
            .iter()
            .filter(|&&(_, _, t)| !(exclude_query_time && t == query_time))
            .map(|&(e, r, t)| TemporalNeighbor {
                entity: e,
                relation: r,
                time: t,
                delta: i64::from(t) - tq,
            })
            .collect()
    }

    /// Distinct entity / relation / timestamp counts actually present.
    pub fn present_counts(&self) -> (usize, usize, usize) {
        let mut ents = BTreeSet::new();
        let mut rels = BTreeSet::new();
        let mut times = BTreeSet::new();
        for q in &self.quadruples {
            ents.insert(q.subject);
            ents.insert(q.object);
            rels.insert(q.relation);
            times.insert(q.time);
        }
        (ents.len(), rels.len(), times.len())
    }
}
