//! Training: softmax cross-entropy over the full candidate set, reverse-mode
//! gradients through scoring, aggregation, the combiner and the time
//! encoder, an Adam optimizer, checkpointing and parameter counting.
//!
//! The loss for a batch is the mean over quadruples of
//! −log softmax(scores)[o], with every entity as a candidate (no negative
//! subsampling). Candidate representations share one zero-time-difference
//! transform per Φ argument, so their backward pass runs once per batch with
//! accumulated upstream gradients.

use std::collections::HashMap;
use std::path::PathBuf;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::encoder::{encode_backward, encode_node, Gradients, ModelDims, ModelParams};
use crate::eval::{evaluate, EvalOptions, FilterIndex};
use crate::math::{axpy, derive_seed, log_sum_exp, Mat};
use crate::scoring::{query_vector, query_vector_backward, CandidateTable};
use crate::tkg::{Quadruple, SplitTag, TemporalKg};
use crate::{Error, Result};

const TRAIN_STREAM: u64 = 0x7121;

/// Mean cross-entropy loss over a batch plus gradients for every trainable
/// tensor.
///
/// Sampling consumes `rng` sequentially, one query at a time; because the
/// sampler touches no parameter, replaying the same seed reproduces the
/// exact forward pass (which is what makes finite-difference checks valid).
pub fn loss_batch<R: Rng>(
    batch: &[Quadruple],
    kg_train: &TemporalKg,
    params: &ModelParams,
    config: &RunConfig,
    rng: &mut R,
) -> Result<(f64, Gradients)> {
    if batch.is_empty() {
        return Err(Error::Validation("empty batch".into()));
    }
    let dims = params.dims;
    let inv_b = 1.0 / batch.len() as f64;
    let mut grads = ModelParams::zeros(dims);
    let mut tables: HashMap<u32, CandidateTable> = HashMap::new();
    let mut d_tables: HashMap<u32, Mat> = HashMap::new();
    let mut total_loss = 0.0;

    for quad in batch {
        let (h_s, trace) = encode_node(
            kg_train,
            quad.subject,
            quad.time,
            config.agg_steps,
            params,
            config,
            rng,
        )?;
        let key = CandidateTable::key_for(config, quad.time);
        let table = tables
            .entry(key)
            .or_insert_with(|| CandidateTable::build(params, config, quad.time));
        let h_r = params.relation.row(quad.relation as usize);
        let qvec = query_vector(config.score_fn, &h_s, h_r);
        let scores = table.scores_for_query(&qvec);

        let lse = log_sum_exp(&scores);
        let loss = lse - scores[quad.object as usize];
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss {
                s: quad.subject,
                r: quad.relation,
                o: quad.object,
                t: quad.time,
                value: loss,
            });
        }
        total_loss += loss;

        // d loss / d scores = softmax(scores) − onehot(o), scaled by 1/B.
        let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum_exp: f64 = scores.iter().map(|&s| (s - max).exp()).sum();
        let d_table = d_tables
            .entry(key)
            .or_insert_with(|| Mat::zeros(dims.num_entities, dims.d_h));
        let mut d_qvec = vec![0.0; qvec.len()];
        for (o, &score) in scores.iter().enumerate() {
            let mut ds = (score - max).exp() / sum_exp;
            if o == quad.object as usize {
                ds -= 1.0;
            }
            let ds = ds * inv_b;
            if ds == 0.0 {
                continue;
            }
            axpy(&mut d_qvec, table.reps.row(o), ds);
            axpy(d_table.row_mut(o), &qvec, ds);
        }
        let mut d_hs = vec![0.0; dims.d_h];
        let mut d_hr = vec![0.0; dims.d_r];
        query_vector_backward(config.score_fn, &h_s, h_r, &d_qvec, &mut d_hs, &mut d_hr);
        axpy(grads.relation.row_mut(quad.relation as usize), &d_hr, 1.0);
        encode_backward(&trace, &d_hs, params, &mut grads, config.activation);
    }

    // One shared backward through each candidate transform, in sorted key
    // order: HashMap iteration order would make float accumulation differ
    // between runs.
    let mut keys: Vec<u32> = d_tables.keys().copied().collect();
    keys.sort_unstable();
    for key in keys {
        tables[&key].backward(&d_tables[&key], params, &mut grads, config);
    }

    Ok((total_loss * inv_b, grads))
}

/// Adam with bias correction; defaults β1 = 0.9, β2 = 0.999, ε = 1e−8,
/// no weight decay.
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u64,
    m: ModelParams,
    v: ModelParams,
}

impl Adam {
    pub fn new(dims: ModelDims, learning_rate: f64) -> Self {
        Adam {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            m: ModelParams::zeros(dims),
            v: ModelParams::zeros(dims),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn update(&mut self, params: &mut ModelParams, grads: &Gradients) {
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        let Adam {
            learning_rate,
            beta1,
            beta2,
            epsilon,
            m,
            v,
            ..
        } = self;
        for (((_, p), (_, g)), ((_, m), (_, v))) in params
            .tensors_mut()
            .into_iter()
            .zip(grads.tensors())
            .zip(m.tensors_mut().into_iter().zip(v.tensors_mut()))
        {
            for i in 0..p.len() {
                m[i] = *beta1 * m[i] + (1.0 - *beta1) * g[i];
                v[i] = *beta2 * v[i] + (1.0 - *beta2) * g[i] * g[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= *learning_rate * m_hat / (v_hat.sqrt() + *epsilon);
            }
        }
    }

    pub(crate) fn state(&self) -> (u64, &ModelParams, &ModelParams) {
        (self.step, &self.m, &self.v)
    }

    pub(crate) fn restore(
        dims: ModelDims,
        learning_rate: f64,
        step: u64,
        m: ModelParams,
        v: ModelParams,
    ) -> Self {
        let _ = dims;
        Adam {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step,
            m,
            v,
        }
    }
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub valid_mrr: f64,
    pub valid_hits1: f64,
    pub valid_hits3: f64,
    pub valid_hits10: f64,
    /// 0.0 when wall-time logging is disabled for reproducible logs.
    pub wall_seconds: f64,
}

pub fn records_to_jsonl(records: &[EpochRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("epoch record serializes"));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Default)]
pub struct TrainOptions {
    /// When set, `train_log.jsonl`, `checkpoint_last.ckpt` and
    /// `checkpoint_best.ckpt` are written here as training progresses.
    pub out_dir: Option<PathBuf>,
    pub eval_options: EvalOptions,
}

#[derive(Debug)]
pub struct TrainOutcome {
    /// Parameters of the best-validation-MRR epoch, reloaded from its
    /// checkpoint so downstream evaluation matches the file exactly.
    pub params: ModelParams,
    pub records: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_valid_mrr: f64,
    pub best_checkpoint: Vec<u8>,
    pub last_checkpoint: Vec<u8>,
}

/// Full training loop: seeded shuffled mini-batches, Adam updates, filtered
/// validation MRR after every epoch, best-MRR checkpoint retained.
/// Single-worker execution is bitwise deterministic in (config, data).
pub fn train(
    kg_train: &TemporalKg,
    valid_facts: &[Quadruple],
    config: &RunConfig,
    options: &TrainOptions,
) -> Result<TrainOutcome> {
    config.validate()?;
    let dims = ModelDims::from_config(
        config,
        kg_train.num_entities(),
        kg_train.num_base_relations(),
    );
    let mut params = ModelParams::init(dims, kg_train.num_timestamps(), config.seed);
    let mut adam = Adam::new(dims, config.learning_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, &[TRAIN_STREAM]));

    // Validation filtering sees train ∪ valid; the train graph is already
    // reciprocal-augmented, held-out facts are augmented here.
    let mut filter = FilterIndex::default();
    for q in kg_train.quadruples() {
        filter.insert_augmented(q);
    }
    let num_base = kg_train.num_base_relations() as u32;
    for q in valid_facts {
        filter.insert_augmented(q);
        filter.insert_augmented(&q.reciprocal(num_base));
    }

    if let Some(dir) = &options.out_dir {
        std::fs::create_dir_all(dir)?;
    }

    let train_quads = kg_train.quadruples().to_vec();
    let mut records: Vec<EpochRecord> = Vec::new();
    let mut best: Option<(usize, f64, Vec<u8>)> = None;
    let mut last_checkpoint = save_checkpoint(
        &params,
        config,
        kg_train.num_timestamps(),
        Some(&adam),
        Some(&rng),
    );
    if let Some(dir) = &options.out_dir {
        // the initial state is the last good checkpoint until an epoch
        // completes, so a first-epoch divergence still leaves a loadable file
        std::fs::write(dir.join("checkpoint_last.ckpt"), &last_checkpoint)?;
    }

    for epoch in 1..=config.epochs {
        let t0 = Instant::now();
        let mut order: Vec<usize> = (0..train_quads.len()).collect();
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<Quadruple> = chunk.iter().map(|&i| train_quads[i]).collect();
            let (loss, grads) =
                loss_batch(&batch, kg_train, &params, config, &mut rng).map_err(|e| match e {
                    Error::NonFiniteLoss { .. } => Error::Divergence(format!(
                        "epoch {epoch}: {e}; last good checkpoint preserved"
                    )),
                    other => other,
                })?;
            adam.update(&mut params, &grads);
            loss_sum += loss * batch.len() as f64;
        }
        let train_loss = loss_sum / train_quads.len().max(1) as f64;

        let (report, _) = evaluate(
            kg_train,
            valid_facts,
            &filter,
            &params,
            config,
            SplitTag::Valid,
            options.eval_options,
        )?;
        let wall_seconds = if config.log_wall_time {
            t0.elapsed().as_secs_f64()
        } else {
            0.0
        };
        records.push(EpochRecord {
            epoch,
            train_loss,
            valid_mrr: report.mrr,
            valid_hits1: report.hits1,
            valid_hits3: report.hits3,
            valid_hits10: report.hits10,
            wall_seconds,
        });

        last_checkpoint = save_checkpoint(
            &params,
            config,
            kg_train.num_timestamps(),
            Some(&adam),
            Some(&rng),
        );
        let improved = best.as_ref().is_none_or(|(_, mrr, _)| report.mrr > *mrr);
        if improved {
            best = Some((epoch, report.mrr, last_checkpoint.clone()));
        }
        if let Some(dir) = &options.out_dir {
            std::fs::write(dir.join("checkpoint_last.ckpt"), &last_checkpoint)?;
            if improved {
                std::fs::write(dir.join("checkpoint_best.ckpt"), &best.as_ref().unwrap().2)?;
            }
            std::fs::write(dir.join("train_log.jsonl"), records_to_jsonl(&records))?;
        }
    }

    let (best_epoch, best_valid_mrr, best_checkpoint) = match best {
        Some(b) => b,
        None => (0, 0.0, last_checkpoint.clone()),
    };
    let loaded = load_checkpoint(&best_checkpoint)?;
    Ok(TrainOutcome {
        params: loaded.params,
        records,
        best_epoch,
        best_valid_mrr,
        best_checkpoint,
        last_checkpoint,
    })
}

/// Parameter total and per-tensor breakdown for the efficiency report.
#[derive(Debug, Clone, Serialize)]
pub struct ParamCountReport {
    pub total: usize,
    pub breakdown: Vec<(String, usize)>,
}

impl ParamCountReport {
    pub fn csv(&self) -> String {
        let mut out = String::from("tensor,parameters\n");
        for (name, count) in &self.breakdown {
            out.push_str(&format!("{name},{count}\n"));
        }
        out.push_str(&format!("total,{}\n", self.total));
        out
    }
}

/// Count every trainable scalar: entity and (reciprocal-doubled) relation
/// tables, time-encoder frequencies and phases, combiner and aggregator
/// weights and biases.
pub fn count_parameters(
    config: &RunConfig,
    num_entities: usize,
    num_base_relations: usize,
) -> ParamCountReport {
    let dims = ModelDims::from_config(config, num_entities, num_base_relations);
    let breakdown = vec![
        ("entity".to_string(), dims.num_entities * dims.d_e),
        ("relation".to_string(), dims.num_relations * dims.d_r),
        ("time_frequencies".to_string(), dims.d_t),
        ("time_phases".to_string(), dims.d_t),
        (
            "combiner_weight".to_string(),
            dims.d_h * (dims.d_e + dims.d_t),
        ),
        ("combiner_bias".to_string(), dims.d_h),
        (
            "aggregator_weight".to_string(),
            dims.d_h * (dims.d_h + dims.d_r),
        ),
        ("aggregator_bias".to_string(), dims.d_h),
    ];
    let total = breakdown.iter().map(|(_, c)| c).sum();
    ParamCountReport { total, breakdown }
}

// ---------------------------------------------------------------------------
// Checkpoint format
// ---------------------------------------------------------------------------
//
// magic "TARGCNCK" | version u32 | config_len u32 + key=value UTF-8 |
// num_entities u64 | num_base_relations u64 | num_time_indices u64 |
// tensor_count u32 | per tensor: name_len u32 + name, ndim u32, dims u64…,
// data f32 LE | optimizer flag u8 (step u64, m tensors, v tensors) |
// rng flag u8 (seed [u8;32], word_pos u128, stream u64).
//
// Tensors are stored in declared order as 32-bit little-endian IEEE-754.

const CHECKPOINT_MAGIC: &[u8; 8] = b"TARGCNCK";
const CHECKPOINT_VERSION: u32 = 1;

/// A deserialized checkpoint.
#[derive(Debug)]
pub struct Checkpoint {
    pub config: RunConfig,
    pub num_entities: usize,
    pub num_base_relations: usize,
    pub num_time_indices: usize,
    pub params: ModelParams,
    pub adam: Option<Adam>,
    pub rng: Option<ChaCha8Rng>,
}

fn push_f32_slice(out: &mut Vec<u8>, data: &[f64]) {
    for &v in data {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
}

pub fn save_checkpoint(
    params: &ModelParams,
    config: &RunConfig,
    num_time_indices: usize,
    adam: Option<&Adam>,
    rng: Option<&ChaCha8Rng>,
) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    let config_text = config.to_key_values();
    out.extend_from_slice(&(config_text.len() as u32).to_le_bytes());
    out.extend_from_slice(config_text.as_bytes());
    out.extend_from_slice(&(params.dims.num_entities as u64).to_le_bytes());
    out.extend_from_slice(&((params.dims.num_relations / 2) as u64).to_le_bytes());
    out.extend_from_slice(&(num_time_indices as u64).to_le_bytes());

    let tensors = params.tensors();
    let shapes = params.tensor_shapes();
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for ((name, data), shape) in tensors.iter().zip(&shapes) {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(shape.len() as u32).to_le_bytes());
        for &d in shape {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        push_f32_slice(&mut out, data);
    }

    match adam {
        Some(a) => {
            out.push(1);
            let (step, m, v) = a.state();
            out.extend_from_slice(&step.to_le_bytes());
            for (_, data) in m.tensors() {
                push_f32_slice(&mut out, data);
            }
            for (_, data) in v.tensors() {
                push_f32_slice(&mut out, data);
            }
        }
        None => out.push(0),
    }

    match rng {
        Some(r) => {
            out.push(1);
            out.extend_from_slice(&r.get_seed());
            out.extend_from_slice(&r.get_word_pos().to_le_bytes());
            out.extend_from_slice(&r.get_stream().to_le_bytes());
        }
        None => out.push(0),
    }
    out
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.data.len() {
            return Err(Error::Checkpoint("truncated checkpoint".into()));
        }
        let out = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn u128(&mut self) -> Result<u128> {
        Ok(u128::from_le_bytes(self.take(16)?.try_into().unwrap()))
    }

    fn f32_into(&mut self, target: &mut [f64]) -> Result<()> {
        let bytes = self.take(target.len() * 4)?;
        for (i, chunk) in bytes.chunks_exact(4).enumerate() {
            target[i] = f64::from(f32::from_le_bytes(chunk.try_into().unwrap()));
        }
        Ok(())
    }
}

pub fn load_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    let mut c = Cursor {
        data: bytes,
        pos: 0,
    };
    if c.take(8)? != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("bad magic; not a checkpoint file".into()));
    }
    let version = c.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported checkpoint version {version} (expected {CHECKPOINT_VERSION})"
        )));
    }
    let config_len = c.u32()? as usize;
    let config_text = std::str::from_utf8(c.take(config_len)?)
        .map_err(|_| Error::Checkpoint("config block is not UTF-8".into()))?;
    let config = RunConfig::from_key_values(config_text)?;
    let num_entities = c.u64()? as usize;
    let num_base_relations = c.u64()? as usize;
    let num_time_indices = c.u64()? as usize;

    let dims = ModelDims::from_config(&config, num_entities, num_base_relations);
    let mut params = ModelParams::zeros(dims);
    let expected_shapes = params.tensor_shapes();

    let tensor_count = c.u32()? as usize;
    if tensor_count != expected_shapes.len() {
        return Err(Error::Checkpoint(format!(
            "expected {} tensors, found {tensor_count}",
            expected_shapes.len()
        )));
    }
    for (idx, (name, data)) in params.tensors_mut().into_iter().enumerate() {
        let name_len = c.u32()? as usize;
        let stored_name = std::str::from_utf8(c.take(name_len)?)
            .map_err(|_| Error::Checkpoint("tensor name is not UTF-8".into()))?;
        if stored_name != name {
            return Err(Error::Checkpoint(format!(
                "tensor {idx} is {stored_name:?}, expected {name:?}"
            )));
        }
        let ndim = c.u32()? as usize;
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            shape.push(c.u64()? as usize);
        }
        if shape != expected_shapes[idx] {
            return Err(Error::Checkpoint(format!(
                "tensor {name} has shape {shape:?}, expected {:?}",
                expected_shapes[idx]
            )));
        }
        c.f32_into(data)?;
    }

    let adam = if c.u8()? == 1 {
        let step = c.u64()?;
        let mut m = ModelParams::zeros(dims);
        for (_, data) in m.tensors_mut() {
            c.f32_into(data)?;
        }
        let mut v = ModelParams::zeros(dims);
        for (_, data) in v.tensors_mut() {
            c.f32_into(data)?;
        }
        Some(Adam::restore(dims, config.learning_rate, step, m, v))
    } else {
        None
    };

    let rng = if c.u8()? == 1 {
        let seed: [u8; 32] = c.take(32)?.try_into().unwrap();
        let word_pos = c.u128()?;
        let stream = c.u64()?;
        let mut r = ChaCha8Rng::from_seed(seed);
        r.set_stream(stream);
        r.set_word_pos(word_pos);
        Some(r)
    } else {
        None
    };

    if c.pos != bytes.len() {
        return Err(Error::Checkpoint(format!(
            "{} trailing bytes after checkpoint payload",
            bytes.len() - c.pos
        )));
    }

    Ok(Checkpoint {
        config,
        num_entities,
        num_base_relations,
        num_time_indices,
        params,
        adam,
        rng,
    })
}
