//! The TARGCN encoder.
//!
//! Three pieces, composed per query:
//!
//! * a functional time encoder mapping a signed time difference δ to
//!   sqrt(1/d_t)·[cos(ω_1·δ + φ_1), …, cos(ω_{d_t}·δ + φ_{d_t})] with
//!   trainable frequencies ω and phases φ;
//! * a time-aware representation h_(e,t) = act(W_c·(h_e ∥ Φ(δ)) + b_c),
//!   one feed-forward layer over the entity embedding concatenated with its
//!   time encoding;
//! * a relational mean aggregator
//!   h_(s_q,t_q) = (1/|N̄|) Σ W_a·(h_(e,t) ∥ h_r) + b_a over the sampled TNG.
//!
//! An empty neighborhood falls back to the self representation at zero time
//! difference, the same rule candidates use. No nonlinearity follows the
//! mean; the activation lives inside the combiner only.
//!
//! Every forward here has a matching hand-written backward; traces carry
//! exactly what the reverse pass needs. Neighbors are summed in (t, e, r)
//! order so outputs are bit-reproducible.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Activation, RunConfig, TimeEncoderVariant};
use crate::math::{axpy, derive_seed, Mat};
use crate::sampler::{sample_tng, TngSample};
use crate::tkg::{EntityId, RelationId, TemporalKg, TimeIndex};
use crate::Result;

/// Trainable frequency/phase components of the time encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeEncoderParams {
    pub omega: Vec<f64>,
    pub phi: Vec<f64>,
}

/// Tensor dimensions; by default d_e = d_r = d_h = embedding_size and
/// d_t = time_dim (or embedding_size when unset).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelDims {
    pub num_entities: usize,
    /// Relation rows after reciprocal augmentation (2·|R_base|).
    pub num_relations: usize,
    pub d_e: usize,
    pub d_r: usize,
    pub d_t: usize,
    pub d_h: usize,
}

impl ModelDims {
    pub fn from_config(config: &RunConfig, num_entities: usize, num_base_relations: usize) -> Self {
        let d = config.embedding_size;
        ModelDims {
            num_entities,
            num_relations: 2 * num_base_relations,
            d_e: d,
            d_r: d,
            d_t: config.time_dim_effective(),
            d_h: d,
        }
    }
}

/// All trainable tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub dims: ModelDims,
    /// |E| × d_e entity table.
    pub entity: Mat,
    /// 2|R| × d_r relation table.
    pub relation: Mat,
    pub time_enc: TimeEncoderParams,
    /// d_h × (d_e + d_t) combiner weights (the feed-forward layer f).
    pub combiner_w: Mat,
    pub combiner_b: Vec<f64>,
    /// d_h × (d_h + d_r) aggregator weights (the W of the relational mean).
    pub agg_w: Mat,
    pub agg_b: Vec<f64>,
}

/// Gradient buffers share the parameter layout.
pub type Gradients = ModelParams;

impl ModelParams {
    /// Seeded initialization: uniform fan-based tables and weights, ω a
    /// geometric sequence from 1 down to 1/|T| (multi-scale periods), φ and
    /// biases zero.
    pub fn init(dims: ModelDims, num_time_indices: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0x1217]));
        let table = |rows: usize, cols: usize, rng: &mut ChaCha8Rng| {
            let limit = (3.0 / cols as f64).sqrt();
            let data = (0..rows * cols)
                .map(|_| rng.gen_range(-limit..limit))
                .collect();
            Mat { rows, cols, data }
        };
        let omega = if dims.d_t == 1 {
            vec![1.0]
        } else {
            let t = (num_time_indices.max(1)) as f64;
            (0..dims.d_t)
                .map(|i| t.powf(-(i as f64) / (dims.d_t as f64 - 1.0)))
                .collect()
        };
        ModelParams {
            dims,
            entity: table(dims.num_entities, dims.d_e, &mut rng),
            relation: table(dims.num_relations, dims.d_r, &mut rng),
            time_enc: TimeEncoderParams {
                omega,
                phi: vec![0.0; dims.d_t],
            },
            combiner_w: Mat::xavier_uniform(dims.d_h, dims.d_e + dims.d_t, &mut rng),
            combiner_b: vec![0.0; dims.d_h],
            agg_w: Mat::xavier_uniform(dims.d_h, dims.d_h + dims.d_r, &mut rng),
            agg_b: vec![0.0; dims.d_h],
        }
    }

    pub fn zeros(dims: ModelDims) -> Self {
        ModelParams {
            dims,
            entity: Mat::zeros(dims.num_entities, dims.d_e),
            relation: Mat::zeros(dims.num_relations, dims.d_r),
            time_enc: TimeEncoderParams {
                omega: vec![0.0; dims.d_t],
                phi: vec![0.0; dims.d_t],
            },
            combiner_w: Mat::zeros(dims.d_h, dims.d_e + dims.d_t),
            combiner_b: vec![0.0; dims.d_h],
            agg_w: Mat::zeros(dims.d_h, dims.d_h + dims.d_r),
            agg_b: vec![0.0; dims.d_h],
        }
    }

    /// All tensors in declared order, the canonical layout for the
    /// optimizer, checkpoints and gradient checks.
    pub fn tensor_names() -> [&'static str; 8] {
        [
            "entity",
            "relation",
            "time_frequencies",
            "time_phases",
            "combiner_weight",
            "combiner_bias",
            "aggregator_weight",
            "aggregator_bias",
        ]
    }

    pub fn tensors(&self) -> [(&'static str, &[f64]); 8] {
        [
            ("entity", &self.entity.data),
            ("relation", &self.relation.data),
            ("time_frequencies", &self.time_enc.omega),
            ("time_phases", &self.time_enc.phi),
            ("combiner_weight", &self.combiner_w.data),
            ("combiner_bias", &self.combiner_b),
            ("aggregator_weight", &self.agg_w.data),
            ("aggregator_bias", &self.agg_b),
        ]
    }

    pub fn tensors_mut(&mut self) -> [(&'static str, &mut [f64]); 8] {
        [
            ("entity", &mut self.entity.data[..]),
            ("relation", &mut self.relation.data[..]),
            ("time_frequencies", &mut self.time_enc.omega[..]),
            ("time_phases", &mut self.time_enc.phi[..]),
            ("combiner_weight", &mut self.combiner_w.data[..]),
            ("combiner_bias", &mut self.combiner_b[..]),
            ("aggregator_weight", &mut self.agg_w.data[..]),
            ("aggregator_bias", &mut self.agg_b[..]),
        ]
    }

    /// Shapes in tensor order, used by checkpoints and parameter counting.
    pub fn tensor_shapes(&self) -> [Vec<usize>; 8] {
        [
            vec![self.entity.rows, self.entity.cols],
            vec![self.relation.rows, self.relation.cols],
            vec![self.time_enc.omega.len()],
            vec![self.time_enc.phi.len()],
            vec![self.combiner_w.rows, self.combiner_w.cols],
            vec![self.combiner_b.len()],
            vec![self.agg_w.rows, self.agg_w.cols],
            vec![self.agg_b.len()],
        ]
    }
}

/// Φ argument for a neighbor at `t` seen from a center at `t_center`:
/// the signed difference by default, the raw timestamp under the
/// absolute-time ablation.
pub fn phi_argument(variant: TimeEncoderVariant, t: TimeIndex, t_center: TimeIndex) -> f64 {
    match variant {
        TimeEncoderVariant::Difference => f64::from(t) - f64::from(t_center),
        TimeEncoderVariant::Absolute => f64::from(t),
    }
}

/// Functional time encoding: sqrt(1/d_t)·cos(ω_i·arg + φ_i).
pub fn time_encoding(te: &TimeEncoderParams, arg: f64) -> Vec<f64> {
    let scale = (1.0 / te.omega.len() as f64).sqrt();
    te.omega
        .iter()
        .zip(&te.phi)
        .map(|(&w, &p)| scale * (w * arg + p).cos())
        .collect()
}

/// The absolute-time ablation encodes the raw timestamp t wherever the
/// default model encodes t − t_q (candidates then use Φ(t_q)).
pub fn absolute_time_encoding(te: &TimeEncoderParams, t: TimeIndex) -> Vec<f64> {
    time_encoding(te, f64::from(t))
}

pub(crate) fn time_encoding_backward(
    te: &TimeEncoderParams,
    arg: f64,
    d_out: &[f64],
    grads: &mut TimeEncoderParams,
) {
    let scale = (1.0 / te.omega.len() as f64).sqrt();
    for (i, (&w, &p)) in te.omega.iter().zip(&te.phi).enumerate() {
        let common = -scale * (w * arg + p).sin() * d_out[i];
        grads.omega[i] += common * arg;
        grads.phi[i] += common;
    }
}

fn activate(activation: Activation, z: &mut [f64]) {
    match activation {
        Activation::Tanh => z.iter_mut().for_each(|v| *v = v.tanh()),
        Activation::Relu => z.iter_mut().for_each(|v| *v = v.max(0.0)),
    }
}

/// Derivative expressed through the activation output.
fn activation_grad(activation: Activation, out: f64) -> f64 {
    match activation {
        Activation::Tanh => 1.0 - out * out,
        Activation::Relu => {
            if out > 0.0 {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// What the reverse pass needs to differentiate one time-aware
/// representation.
#[derive(Debug, Clone)]
pub(crate) struct RepTrace {
    entity: EntityId,
    phi_arg: f64,
    /// Combiner input h_e ∥ Φ(arg).
    input: Vec<f64>,
    /// Activation output (the representation itself).
    output: Vec<f64>,
}

fn rep_traced(
    params: &ModelParams,
    activation: Activation,
    entity: EntityId,
    phi_arg: f64,
) -> RepTrace {
    let d_e = params.dims.d_e;
    let mut input = Vec::with_capacity(d_e + params.dims.d_t);
    input.extend_from_slice(params.entity.row(entity as usize));
    input.extend(time_encoding(&params.time_enc, phi_arg));
    let mut z = params.combiner_w.matvec(&input);
    for (v, b) in z.iter_mut().zip(&params.combiner_b) {
        *v += b;
    }
    activate(activation, &mut z);
    RepTrace {
        entity,
        phi_arg,
        input,
        output: z,
    }
}

fn rep_backward(
    trace: &RepTrace,
    d_out: &[f64],
    params: &ModelParams,
    grads: &mut Gradients,
    activation: Activation,
) {
    let d_e = params.dims.d_e;
    let dz: Vec<f64> = d_out
        .iter()
        .zip(&trace.output)
        .map(|(&d, &o)| d * activation_grad(activation, o))
        .collect();
    grads.combiner_w.add_outer(&dz, &trace.input, 1.0);
    axpy(&mut grads.combiner_b, &dz, 1.0);
    let d_input = params.combiner_w.matvec_t(&dz);
    axpy(
        grads.entity.row_mut(trace.entity as usize),
        &d_input[..d_e],
        1.0,
    );
    time_encoding_backward(
        &params.time_enc,
        trace.phi_arg,
        &d_input[d_e..],
        &mut grads.time_enc,
    );
}

/// Time-aware entity representation act(W_c·(h_e ∥ Φ(delta)) + b_c).
///
/// `delta` is the already-resolved Φ argument: a signed difference in the
/// default variant, a raw timestamp under the absolute ablation.
pub fn time_aware_rep(
    params: &ModelParams,
    entity: EntityId,
    delta: f64,
    activation: Activation,
) -> Vec<f64> {
    rep_traced(params, activation, entity, delta).output
}

#[derive(Debug, Clone)]
pub(crate) enum ChildTrace {
    Leaf(RepTrace),
    Node(Box<EncodeTrace>),
}

#[derive(Debug, Clone)]
pub(crate) struct AggTrace {
    /// (1/n) Σ (h_(e,t) ∥ h_r), the aggregator's input.
    mean_input: Vec<f64>,
    children: Vec<(RelationId, ChildTrace)>,
}

/// Trace of one encoded node (possibly recursive for 2-step aggregation).
#[derive(Debug, Clone)]
pub(crate) enum EncodeTrace {
    Fallback(RepTrace),
    Agg(AggTrace),
}

fn aggregate_children(
    params: &ModelParams,
    children: Vec<(RelationId, Vec<f64>, ChildTrace)>,
) -> (Vec<f64>, AggTrace) {
    let (d_h, d_r) = (params.dims.d_h, params.dims.d_r);
    let n = children.len() as f64;
    let mut mean_input = vec![0.0; d_h + d_r];
    let mut kept = Vec::with_capacity(children.len());
    for (rel, child_out, trace) in children {
        axpy(&mut mean_input[..d_h], &child_out, 1.0 / n);
        axpy(
            &mut mean_input[d_h..],
            params.relation.row(rel as usize),
            1.0 / n,
        );
        kept.push((rel, trace));
    }
    let mut out = params.agg_w.matvec(&mean_input);
    for (v, b) in out.iter_mut().zip(&params.agg_b) {
        *v += b;
    }
    (
        out,
        AggTrace {
            mean_input,
            children: kept,
        },
    )
}

pub(crate) fn encode_node<R: Rng>(
    kg: &TemporalKg,
    entity: EntityId,
    time: TimeIndex,
    steps: usize,
    params: &ModelParams,
    config: &RunConfig,
    rng: &mut R,
) -> Result<(Vec<f64>, EncodeTrace)> {
    let sample = sample_tng(
        kg,
        entity,
        time,
        config.max_neighbors,
        config.search_range_enum(),
        config.sampler_variant,
        config.exclude_query_time,
        rng,
    )?;
    if sample.is_empty() {
        let trace = rep_traced(
            params,
            config.activation,
            entity,
            phi_argument(config.time_encoder_variant, time, time),
        );
        return Ok((trace.output.clone(), EncodeTrace::Fallback(trace)));
    }
    let mut neighbors = sample.neighbors;
    neighbors.sort_unstable_by_key(|n| (n.time, n.entity, n.relation));
    let mut children = Vec::with_capacity(neighbors.len());
    for nb in &neighbors {
        if steps > 1 {
            // Each inner hop re-samples its own TNG from a derived stream.
            let mut inner = ChaCha8Rng::seed_from_u64(rng.next_u64());
            let (value, trace) = encode_node(
                kg,
                nb.entity,
                nb.time,
                steps - 1,
                params,
                config,
                &mut inner,
            )?;
            children.push((nb.relation, value, ChildTrace::Node(Box::new(trace))));
        } else {
            let trace = rep_traced(
                params,
                config.activation,
                nb.entity,
                phi_argument(config.time_encoder_variant, nb.time, time),
            );
            let value = trace.output.clone();
            children.push((nb.relation, value, ChildTrace::Leaf(trace)));
        }
    }
    let (out, trace) = aggregate_children(params, children);
    Ok((out, EncodeTrace::Agg(trace)))
}

pub(crate) fn encode_backward(
    trace: &EncodeTrace,
    d_out: &[f64],
    params: &ModelParams,
    grads: &mut Gradients,
    activation: Activation,
) {
    match trace {
        EncodeTrace::Fallback(rep) => rep_backward(rep, d_out, params, grads, activation),
        EncodeTrace::Agg(agg) => {
            grads.agg_w.add_outer(d_out, &agg.mean_input, 1.0);
            axpy(&mut grads.agg_b, d_out, 1.0);
            let d_mean = params.agg_w.matvec_t(d_out);
            let d_h = params.dims.d_h;
            let n = agg.children.len() as f64;
            let d_child: Vec<f64> = d_mean[..d_h].iter().map(|v| v / n).collect();
            for (rel, child) in &agg.children {
                axpy(
                    grads.relation.row_mut(*rel as usize),
                    &d_mean[d_h..],
                    1.0 / n,
                );
                match child {
                    ChildTrace::Leaf(rep) => rep_backward(rep, &d_child, params, grads, activation),
                    ChildTrace::Node(inner) => {
                        encode_backward(inner, &d_child, params, grads, activation)
                    }
                }
            }
        }
    }
}

/// One-step relational mean aggregation over an already-sampled TNG.
///
/// An empty sample falls back to the center's self representation at zero
/// time difference.
pub fn aggregate(
    center: (EntityId, TimeIndex),
    sample: &TngSample,
    params: &ModelParams,
    config: &RunConfig,
) -> Vec<f64> {
    if sample.is_empty() {
        return time_aware_rep(
            params,
            center.0,
            phi_argument(config.time_encoder_variant, center.1, center.1),
            config.activation,
        );
    }
    let mut neighbors = sample.neighbors.clone();
    neighbors.sort_unstable_by_key(|n| (n.time, n.entity, n.relation));
    let children = neighbors
        .iter()
        .map(|nb| {
            let trace = rep_traced(
                params,
                config.activation,
                nb.entity,
                phi_argument(config.time_encoder_variant, nb.time, center.1),
            );
            let value = trace.output.clone();
            (nb.relation, value, ChildTrace::Leaf(trace))
        })
        .collect();
    aggregate_children(params, children).0
}

/// Full query encoding: sample a TNG for (s_q, t_q) and aggregate, with one
/// recursive hop per extra aggregation step.
pub fn encode_query<R: Rng>(
    kg: &TemporalKg,
    subject: EntityId,
    query_time: TimeIndex,
    config: &RunConfig,
    params: &ModelParams,
    rng: &mut R,
) -> Result<Vec<f64>> {
    encode_node(
        kg,
        subject,
        query_time,
        config.agg_steps,
        params,
        config,
        rng,
    )
    .map(|(out, _)| out)
}
