//! Property tests for structural invariants that hold over whole input spaces.

mod common;

use std::collections::HashSet;

use proptest::prelude::*;

use targcn::encoder::{time_encoding, TimeEncoderParams};
use targcn::eval::{filtered_rank, TieMode};
use targcn::sampler::neighbor_probabilities;
use targcn::scoring::{complex_score, distmult};
use targcn::tkg::{
    add_reciprocals, Quadruple, SearchRange, SplitTag, TemporalKg, TemporalNeighbor,
};

fn quad_strategy(
    num_entities: u32,
    num_relations: u32,
    num_times: u32,
) -> impl Strategy<Value = Quadruple> {
    (
        0..num_entities,
        0..num_relations,
        0..num_entities,
        0..num_times,
    )
        .prop_map(|(s, r, o, t)| Quadruple::new(s, r, o, t))
}

proptest! {
    // Reciprocal symmetry: (s,r,o,t) ∈ augmented ⟺ (o, r+|R|, s, t) ∈ augmented,
    // and the count exactly doubles.
    #[test]
    fn reciprocal_augmentation_symmetry(raw in prop::collection::vec(quad_strategy(6, 3, 5), 0..40)) {
        let aug = add_reciprocals(&raw, 3).unwrap();
        prop_assert_eq!(aug.len(), raw.len() * 2);
        let set: HashSet<_> = aug.iter().copied().collect();
        for q in &raw {
            prop_assert!(set.contains(&q.reciprocal(3)));
        }
    }

    // Index sortedness and the neighbor round trip hold for any quadruple list.
    #[test]
    fn index_sorted_and_round_trip(raw in prop::collection::vec(quad_strategy(6, 3, 8), 1..40)) {
        let kg = TemporalKg::build(raw.clone(), 6, 3, 8, SplitTag::Train).unwrap();
        for e in 0..6u32 {
            let list = kg.incoming(e);
            for w in list.windows(2) {
                prop_assert!(w[0].2 <= w[1].2, "index list not time-sorted");
            }
        }
        for q in &raw {
            let ns = kg.temporal_neighbors(q.object, 0, SearchRange::Unbounded, false);
            prop_assert!(ns.iter().any(|n| n.entity == q.subject
                && n.relation == q.relation
                && n.time == q.time));
        }
    }

    // Sampling probabilities: sum to one, strictly monotone in |Δt|, and
    // symmetric for equidistant past/future neighbors.
    #[test]
    fn sampling_probabilities_invariants(
        deltas in prop::collection::vec(-50i64..50, 1..20),
        tq in 100u32..200,
    ) {
        let neighbors: Vec<TemporalNeighbor> = deltas
            .iter()
            .enumerate()
            .map(|(i, &d)| TemporalNeighbor {
                entity: i as u32,
                relation: 0,
                time: (i64::from(tq) + d) as u32,
                delta: d,
            })
            .collect();
        let probs = neighbor_probabilities(&neighbors, tq).unwrap();
        let sum: f64 = probs.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
        for i in 0..deltas.len() {
            for j in 0..deltas.len() {
                let (a, b) = (deltas[i].unsigned_abs(), deltas[j].unsigned_abs());
                if a < b {
                    prop_assert!(probs[i] > probs[j], "|Δ|={a} should outweigh |Δ|={b}");
                }
                if a == b {
                    prop_assert_eq!(probs[i], probs[j]);
                }
            }
        }
    }

    // ‖Φ(δ)‖₂ ≤ 1 for any parameters and any time difference.
    #[test]
    fn time_encoding_norm_bound(
        omega in prop::collection::vec(-10.0f64..10.0, 1..16),
        delta in -5000.0f64..5000.0,
    ) {
        let d = omega.len();
        let te = TimeEncoderParams {
            omega,
            phi: (0..d).map(|i| i as f64 * 0.37).collect(),
        };
        let v = time_encoding(&te, delta);
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!(norm <= 1.0 + 1e-12);
    }

    // Ranks are invariant under strictly monotone transforms of the scores.
    #[test]
    fn rank_invariant_under_monotone_transforms(
        scores in prop::collection::vec(-5.0f64..5.0, 2..30),
        truth_idx in 0usize..30,
        scale in 0.1f64..4.0,
        shift in -10.0f64..10.0,
    ) {
        let truth = (truth_idx % scores.len()) as u32;
        let transformed: Vec<f64> = scores.iter().map(|&s| scale * s + shift).collect();
        let empty = HashSet::new();
        for tie_mode in [TieMode::Pessimistic, TieMode::Mean] {
            let (a, _) = filtered_rank(&scores, truth, &empty, tie_mode);
            let (b, _) = filtered_rank(&transformed, truth, &empty, tie_mode);
            prop_assert_eq!(a, b);
        }
    }

    // Growing the filter set never increases the rank; the rank stays in
    // its structural bounds.
    #[test]
    fn filtering_is_monotone(
        scores in prop::collection::vec(-3.0f64..3.0, 3..20),
        truth_idx in 0usize..20,
        extra in prop::collection::vec(0u32..20, 0..8),
    ) {
        let n = scores.len();
        let truth = (truth_idx % n) as u32;
        let base: HashSet<u32> = HashSet::new();
        let grown: HashSet<u32> = extra.into_iter().filter(|&e| (e as usize) < n && e != truth).collect();
        let (r_base, f_base) = filtered_rank(&scores, truth, &base, TieMode::Pessimistic);
        let (r_grown, f_grown) = filtered_rank(&scores, truth, &grown, TieMode::Pessimistic);
        prop_assert!(r_grown <= r_base);
        prop_assert!(f_grown >= f_base);
        prop_assert!(r_base >= 1 && r_base <= n);
        prop_assert!(r_grown <= n - f_grown);
    }

    // Distmult is subject/object symmetric.
    #[test]
    fn distmult_symmetry(
        s in prop::collection::vec(-2.0f64..2.0, 6),
        r in prop::collection::vec(-2.0f64..2.0, 6),
        o in prop::collection::vec(-2.0f64..2.0, 6),
    ) {
        let a = distmult(&s, &r, &o).unwrap();
        let b = distmult(&o, &r, &s).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    // ComplEx with zero imaginary parts reduces to Distmult on the real halves.
    #[test]
    fn complex_reduces_to_distmult(
        s in prop::collection::vec(-2.0f64..2.0, 4),
        r in prop::collection::vec(-2.0f64..2.0, 4),
        o in prop::collection::vec(-2.0f64..2.0, 4),
    ) {
        let lift = |v: &[f64]| {
            let mut out = v.to_vec();
            out.extend(vec![0.0; v.len()]);
            out
        };
        let c = complex_score(&lift(&s), &lift(&r), &lift(&o)).unwrap();
        let d = distmult(&s, &r, &o).unwrap();
        prop_assert!((c - d).abs() < 1e-12);
    }
}
