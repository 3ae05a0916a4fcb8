//! KG score functions over time-aware representations.
//!
//! Distmult is the default: score = (h_s ⊙ h_r)ᵀ h_o. ComplEx interprets
//! each vector as real ∥ imaginary halves and scores Re(⟨h_s, h_r, conj(h_o)⟩).
//! Neither adds parameters beyond the embeddings, so swapping them never
//! changes the parameter count.
//!
//! Candidates are never TNG-sampled: every candidate o' uses the shortcut
//! representation f(h_o' ∥ Φ(t_q, t_q)), so the transform of the whole entity
//! table is computed once per timestamp and reused.

use crate::config::{RunConfig, ScoreFn, TimeEncoderVariant};
use crate::encoder::{phi_argument, time_aware_rep, time_encoding, Gradients, ModelParams};
use crate::math::{axpy, dot, Mat};
use crate::tkg::{RelationId, TimeIndex};
use crate::{Error, Result};

/// Distmult: Σ_i h_s[i]·h_r[i]·h_o[i].
pub fn distmult(h_s: &[f64], h_r: &[f64], h_o: &[f64]) -> Result<f64> {
    if h_s.len() != h_r.len() || h_s.len() != h_o.len() {
        return Err(Error::Dimension {
            expected: h_s.len(),
            got: h_r.len().max(h_o.len()),
        });
    }
    let mut acc = 0.0;
    for i in 0..h_s.len() {
        acc += h_s[i] * h_r[i] * h_o[i];
    }
    Ok(acc)
}

/// ComplEx: Re(⟨h_s, h_r, conj(h_o)⟩) with real ∥ imaginary halves.
pub fn complex_score(h_s: &[f64], h_r: &[f64], h_o: &[f64]) -> Result<f64> {
    if h_s.len() != h_r.len() || h_s.len() != h_o.len() {
        return Err(Error::Dimension {
            expected: h_s.len(),
            got: h_r.len().max(h_o.len()),
        });
    }
    if !h_s.len().is_multiple_of(2) {
        return Err(Error::Validation(format!(
            "complex score needs an even dimension, got {}",
            h_s.len()
        )));
    }
    let k = h_s.len() / 2;
    let mut acc = 0.0;
    for i in 0..k {
        let (sr, si) = (h_s[i], h_s[k + i]);
        let (rr, ri) = (h_r[i], h_r[k + i]);
        let (or, oi) = (h_o[i], h_o[k + i]);
        // (s·r)·conj(o), real part
        acc += (sr * rr - si * ri) * or + (sr * ri + si * rr) * oi;
    }
    Ok(acc)
}

/// Both score functions are bilinear in h_o once (h_s, h_r) are fixed:
/// score(o) = q ᵀ h_o for a query vector q. Distmult: q = h_s ⊙ h_r.
/// ComplEx: q = (sR⊙rR − sI⊙rI) ∥ (sR⊙rI + sI⊙rR).
pub(crate) fn query_vector(score_fn: ScoreFn, h_s: &[f64], h_r: &[f64]) -> Vec<f64> {
    match score_fn {
        ScoreFn::Distmult => h_s.iter().zip(h_r).map(|(&a, &b)| a * b).collect(),
        ScoreFn::Complex => {
            let k = h_s.len() / 2;
            let mut q = vec![0.0; h_s.len()];
            for i in 0..k {
                let (sr, si) = (h_s[i], h_s[k + i]);
                let (rr, ri) = (h_r[i], h_r[k + i]);
                q[i] = sr * rr - si * ri;
                q[k + i] = sr * ri + si * rr;
            }
            q
        }
    }
}

/// Reverse of [`query_vector`]: fold d_q into gradients for h_s and h_r.
pub(crate) fn query_vector_backward(
    score_fn: ScoreFn,
    h_s: &[f64],
    h_r: &[f64],
    d_q: &[f64],
    d_s: &mut [f64],
    d_r: &mut [f64],
) {
    match score_fn {
        ScoreFn::Distmult => {
            for i in 0..h_s.len() {
                d_s[i] += h_r[i] * d_q[i];
                d_r[i] += h_s[i] * d_q[i];
            }
        }
        ScoreFn::Complex => {
            let k = h_s.len() / 2;
            for i in 0..k {
                let (sr, si) = (h_s[i], h_s[k + i]);
                let (rr, ri) = (h_r[i], h_r[k + i]);
                let (dqr, dqi) = (d_q[i], d_q[k + i]);
                d_s[i] += rr * dqr + ri * dqi;
                d_s[k + i] += -ri * dqr + rr * dqi;
                d_r[i] += sr * dqr + si * dqi;
                d_r[k + i] += -si * dqr + sr * dqi;
            }
        }
    }
}

/// Zero-time-difference transform of the full entity table at one
/// timestamp: row o holds f(h_o ∥ Φ(t_q, t_q)).
#[derive(Debug, Clone)]
pub struct CandidateTable {
    pub(crate) phi_arg: f64,
    /// Row o is the candidate representation of entity o.
    pub reps: Mat,
}

impl CandidateTable {
    /// Build candidate representations for query time `t_q`. In the default
    /// difference variant the Φ argument is 0 for every t_q, so one table
    /// serves the whole pass; the absolute variant needs one per timestamp.
    pub fn build(params: &ModelParams, config: &RunConfig, t_q: TimeIndex) -> Self {
        let phi_arg = phi_argument(config.time_encoder_variant, t_q, t_q);
        let n = params.dims.num_entities;
        let mut reps = Mat::zeros(n, params.dims.d_h);
        for e in 0..n {
            let rep = time_aware_rep(params, e as u32, phi_arg, config.activation);
            reps.row_mut(e).copy_from_slice(&rep);
        }
        CandidateTable { phi_arg, reps }
    }

    /// Cache key: tables are shared across timestamps only when the Φ
    /// argument coincides.
    pub fn key_for(config: &RunConfig, t_q: TimeIndex) -> u32 {
        match config.time_encoder_variant {
            TimeEncoderVariant::Difference => 0,
            TimeEncoderVariant::Absolute => t_q,
        }
    }

    pub fn num_entities(&self) -> usize {
        self.reps.rows
    }

    /// Scores for every candidate given a query vector.
    pub(crate) fn scores_for_query(&self, q: &[f64]) -> Vec<f64> {
        (0..self.reps.rows)
            .map(|e| dot(self.reps.row(e), q))
            .collect()
    }

    /// Backpropagate a full |E| × d_h gradient of candidate representations
    /// through the shared zero-delta transform.
    pub(crate) fn backward(
        &self,
        d_reps: &Mat,
        params: &ModelParams,
        grads: &mut Gradients,
        config: &RunConfig,
    ) {
        let d_e = params.dims.d_e;
        let d_t = params.dims.d_t;
        let phi_vec = time_encoding(&params.time_enc, self.phi_arg);
        let mut d_phi_acc = vec![0.0; d_t];
        let mut input = vec![0.0; d_e + d_t];
        input[d_e..].copy_from_slice(&phi_vec);
        for e in 0..self.reps.rows {
            let d_row = d_reps.row(e);
            if d_row.iter().all(|&v| v == 0.0) {
                continue;
            }
            let out = self.reps.row(e);
            let dz: Vec<f64> = d_row
                .iter()
                .zip(out)
                .map(|(&d, &o)| {
                    d * match config.activation {
                        crate::config::Activation::Tanh => 1.0 - o * o,
                        crate::config::Activation::Relu => {
                            if o > 0.0 {
                                1.0
                            } else {
                                0.0
                            }
                        }
                    }
                })
                .collect();
            input[..d_e].copy_from_slice(params.entity.row(e));
            grads.combiner_w.add_outer(&dz, &input, 1.0);
            axpy(&mut grads.combiner_b, &dz, 1.0);
            let d_input = params.combiner_w.matvec_t(&dz);
            axpy(grads.entity.row_mut(e), &d_input[..d_e], 1.0);
            axpy(&mut d_phi_acc, &d_input[d_e..], 1.0);
        }
        crate::encoder::time_encoding_backward(
            &params.time_enc,
            self.phi_arg,
            &d_phi_acc,
            &mut grads.time_enc,
        );
    }
}

/// Score every candidate object for a query: score_fn(h_sq, h_{r_q}, h_(o',t_q))
/// over the candidate table built for t_q.
pub fn score_all_candidates(
    h_subject: &[f64],
    relation: RelationId,
    table: &CandidateTable,
    params: &ModelParams,
    score_fn: ScoreFn,
) -> Result<Vec<f64>> {
    let h_r = params.relation.row(relation as usize);
    if h_subject.len() != h_r.len() || h_subject.len() != params.dims.d_h {
        return Err(Error::Dimension {
            expected: params.dims.d_h,
            got: h_subject.len(),
        });
    }
    if score_fn == ScoreFn::Complex && !h_subject.len().is_multiple_of(2) {
        return Err(Error::Validation(
            "complex score needs an even dimension".into(),
        ));
    }
    let q = query_vector(score_fn, h_subject, h_r);
    Ok(table.scores_for_query(&q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Activation;
    use crate::encoder::ModelDims;

    #[test]
    fn distmult_all_ones() {
        let v = vec![1.0; 4];
        assert_eq!(distmult(&v, &v, &v).unwrap(), 4.0);
    }

    #[test]
    fn distmult_zero_relation_annihilates() {
        let s = vec![0.3, -2.0, 5.0];
        let o = vec![1.0, 4.0, -0.5];
        assert_eq!(distmult(&s, &[0.0; 3], &o).unwrap(), 0.0);
    }

    #[test]
    fn distmult_matches_loop_oracle() {
        let s = [0.1, -0.9, 2.0, 0.7, -1.1, 0.05, 3.0, -0.3];
        let r = [1.2, 0.4, -0.8, 0.9, 0.33, -2.0, 0.6, 1.5];
        let o = [-0.7, 0.2, 1.1, -1.3, 0.44, 0.9, -0.6, 2.2];
        let got = distmult(&s, &r, &o).unwrap();
        let mut expect = 0.0;
        for i in 0..8 {
            expect += s[i] * r[i] * o[i];
        }
        assert!((got - expect).abs() < 1e-12);
    }

    #[test]
    fn distmult_dimension_mismatch() {
        assert!(distmult(&[1.0, 2.0], &[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn distmult_subject_object_symmetry() {
        let s = [0.3, -1.0, 0.8];
        let r = [0.5, 2.0, -0.2];
        let o = [1.1, 0.7, -0.4];
        assert_eq!(distmult(&s, &r, &o).unwrap(), distmult(&o, &r, &s).unwrap());
    }

    #[test]
    fn complex_reduces_to_distmult_when_real() {
        let s = [0.4, -1.2, 0.0, 0.0];
        let r = [0.9, 0.3, 0.0, 0.0];
        let o = [-0.5, 2.0, 0.0, 0.0];
        let c = complex_score(&s, &r, &o).unwrap();
        let d = distmult(&s[..2], &r[..2], &o[..2]).unwrap();
        assert!((c - d).abs() < 1e-12);
    }

    #[test]
    fn complex_unit_relation_is_inner_product() {
        // h_r = 1 + 0i → Re(⟨s, conj(o)⟩)
        let s = [0.4, -1.2, 0.3, 0.8];
        let r = [1.0, 1.0, 0.0, 0.0];
        let o = [-0.5, 2.0, 1.5, -0.7];
        let got = complex_score(&s, &r, &o).unwrap();
        let expect = s[0] * o[0] + s[1] * o[1] + s[2] * o[2] + s[3] * o[3];
        assert!((got - expect).abs() < 1e-12);
    }

    #[test]
    fn complex_matches_complex_arithmetic_oracle() {
        let s = [0.1, -0.9, 2.0, 0.7, -1.1, 0.05, 3.0, -0.3];
        let r = [1.2, 0.4, -0.8, 0.9, 0.33, -2.0, 0.6, 1.5];
        let o = [-0.7, 0.2, 1.1, -1.3, 0.44, 0.9, -0.6, 2.2];
        let got = complex_score(&s, &r, &o).unwrap();
        // oracle in plain complex arithmetic
        let k = 4;
        let mut re = 0.0;
        for i in 0..k {
            let (ar, ai) = (s[i], s[k + i]);
            let (br, bi) = (r[i], r[k + i]);
            let (cr, ci) = (o[i], o[k + i]);
            // a*b = (ar*br - ai*bi) + i(ar*bi + ai*br); times conj(c) = cr - i*ci
            let (abr, abi) = (ar * br - ai * bi, ar * bi + ai * br);
            re += abr * cr + abi * ci;
        }
        assert!((got - re).abs() < 1e-12);
    }

    #[test]
    fn complex_rejects_odd_dimension() {
        let v = [1.0, 2.0, 3.0];
        assert!(complex_score(&v, &v, &v).is_err());
    }

    #[test]
    fn query_vector_agrees_with_direct_scores() {
        let s = [0.1, -0.9, 2.0, 0.7];
        let r = [1.2, 0.4, -0.8, 0.9];
        let o = [-0.7, 0.2, 1.1, -1.3];
        for fun in [ScoreFn::Distmult, ScoreFn::Complex] {
            let q = query_vector(fun, &s, &r);
            let via_q = dot(&q, &o);
            let direct = match fun {
                ScoreFn::Distmult => distmult(&s, &r, &o).unwrap(),
                ScoreFn::Complex => complex_score(&s, &r, &o).unwrap(),
            };
            assert!((via_q - direct).abs() < 1e-12, "{fun:?}");
        }
    }

    fn table_fixture() -> (ModelParams, RunConfig) {
        let dims = ModelDims {
            num_entities: 5,
            num_relations: 2,
            d_e: 4,
            d_r: 4,
            d_t: 4,
            d_h: 4,
        };
        let params = ModelParams::init(dims, 12, 3);
        let mut cfg = RunConfig::default();
        cfg.embedding_size = 4;
        cfg.time_dim = 4;
        (params, cfg)
    }

    #[test]
    fn candidate_table_matches_per_entity_loop() {
        let (params, cfg) = table_fixture();
        let table = CandidateTable::build(&params, &cfg, 7);
        for e in 0..5u32 {
            let direct = time_aware_rep(&params, e, 0.0, Activation::Tanh);
            assert_eq!(table.reps.row(e as usize), &direct[..]);
        }
    }

    #[test]
    fn score_all_candidates_matches_loop_oracle() {
        let (params, cfg) = table_fixture();
        let table = CandidateTable::build(&params, &cfg, 2);
        let h_s = time_aware_rep(&params, 0, -1.0, Activation::Tanh);
        let scores = score_all_candidates(&h_s, 1, &table, &params, ScoreFn::Distmult).unwrap();
        assert_eq!(scores.len(), 5);
        for e in 0..5u32 {
            let h_o = time_aware_rep(&params, e, 0.0, Activation::Tanh);
            let expect = distmult(&h_s, params.relation.row(1), &h_o).unwrap();
            assert!((scores[e as usize] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn single_entity_table() {
        let dims = ModelDims {
            num_entities: 1,
            num_relations: 2,
            d_e: 4,
            d_r: 4,
            d_t: 4,
            d_h: 4,
        };
        let params = ModelParams::init(dims, 5, 1);
        let mut cfg = RunConfig::default();
        cfg.embedding_size = 4;
        cfg.time_dim = 4;
        let table = CandidateTable::build(&params, &cfg, 0);
        let h_s = time_aware_rep(&params, 0, 0.0, Activation::Tanh);
        let scores = score_all_candidates(&h_s, 0, &table, &params, ScoreFn::Distmult).unwrap();
        let direct = distmult(&h_s, params.relation.row(0), table.reps.row(0)).unwrap();
        assert_eq!(scores, vec![direct]);
    }

    #[test]
    fn absolute_variant_changes_cache_key() {
        let mut cfg = RunConfig::default();
        assert_eq!(CandidateTable::key_for(&cfg, 5), 0);
        assert_eq!(CandidateTable::key_for(&cfg, 9), 0);
        cfg.time_encoder_variant = TimeEncoderVariant::Absolute;
        assert_eq!(CandidateTable::key_for(&cfg, 5), 5);
        assert_eq!(CandidateTable::key_for(&cfg, 9), 9);
    }
}
