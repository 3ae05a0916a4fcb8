//! Shared fixtures for the integration and acceptance suites.
#![allow(dead_code)] // each test binary uses a different subset

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use targcn::config::RunConfig;
use targcn::tkg::Quadruple;

/// A synthetic TKG whose answers are recoverable from one-hop temporal
/// neighborhoods by construction: the object of every answer fact at t is
/// the unique temporal neighbor of its subject at t − 1.
///
/// 30 entities, 2 base relations, 300 quadruples. Entities split into 15
/// query subjects and 15 carrier entities. Queries happen at times 1, 4, …,
/// 28; at each query time t a fresh bijection σ_t pairs subject s with
/// carrier σ_t(s), and the dataset holds the carrier fact
/// (σ_t(s), 0, s, t−1) and the answer fact (s, 1, σ_t(s), t). The 3-step
/// spacing and the role split keep every subject's in-edges at query time
/// windows down to exactly the one carrier edge at Δt = −1 (and, for
/// reciprocal queries, exactly the one reciprocal carrier edge), so the
/// copy rule is the simplest hypothesis that fits.
/// All carrier facts stay in training; 3 answer facts per query time are
/// held out for validation.
pub struct CopyPattern {
    pub train: Vec<Quadruple>,
    pub valid: Vec<Quadruple>,
    pub num_entities: usize,
    pub num_base_relations: usize,
    pub num_timestamps: usize,
}

pub fn copy_pattern(seed: u64) -> CopyPattern {
    let subjects = 15u32;
    let query_times: Vec<u32> = (0..10).map(|k| 3 * k + 1).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut valid = Vec::new();
    for &t in &query_times {
        let mut sigma: Vec<u32> = (subjects..2 * subjects).collect();
        sigma.shuffle(&mut rng);
        let mut held: Vec<u32> = (0..subjects).collect();
        held.shuffle(&mut rng);
        let held = &held[..3];
        for s in 0..subjects {
            let o = sigma[s as usize];
            train.push(Quadruple::new(o, 0, s, t - 1));
            let answer = Quadruple::new(s, 1, o, t);
            if held.contains(&s) {
                valid.push(answer);
            } else {
                train.push(answer);
            }
        }
    }
    assert_eq!(train.len() + valid.len(), 300);
    CopyPattern {
        train,
        valid,
        num_entities: 2 * subjects as usize,
        num_base_relations: 2,
        num_timestamps: 29,
    }
}

/// Config tuned for the copy-pattern task: small embeddings, query-time
/// neighbors excluded so training cannot lean on the reciprocal of the fact
/// being predicted, and a tight search range (all signal sits at Δt = 1).
pub fn copy_pattern_config() -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.embedding_size = 32;
    cfg.time_dim = 32;
    cfg.max_neighbors = 100;
    cfg.search_range = Some(1);
    cfg.exclude_query_time = true;
    cfg.learning_rate = 0.01;
    cfg.batch_size = 64;
    cfg.epochs = 200;
    cfg.seed = 7;
    cfg.log_wall_time = false;
    cfg
}

/// Deterministic pseudo-random quadruples for oracle comparisons.
pub fn random_quads(
    count: usize,
    num_entities: u32,
    num_relations: u32,
    num_times: u32,
    seed: u64,
) -> Vec<Quadruple> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            Quadruple::new(
                rng.gen_range(0..num_entities),
                rng.gen_range(0..num_relations),
                rng.gen_range(0..num_entities),
                rng.gen_range(0..num_times),
            )
        })
        .collect()
}
