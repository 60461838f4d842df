//! Multi-set transformer: encodes a collection of (x, y) support sets into a
//! small latent bundle and autoregressively decodes a skeleton token sequence.
//!
//! The encoder is a Set-Transformer stack — per-set ISAB blocks (attention
//! through `m` inducing points), PMA pooling of each set to `k_seed` vectors,
//! and a second PMA across sets — so the latent is invariant to row order
//! within sets and to set order. The decoder is a standard pre-norm
//! transformer with causal self-attention and cross-attention over the
//! latent vectors. Everything runs on the reverse-mode [`tape`] engine in
//! float64, which keeps gradients checkable against finite differences.

mod tape;

use crate::data::SetCollection;
use crate::expr::{skeleton_to_tokens, tokens_to_tree, Skeleton, Token, VOCAB_SIZE};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;
use tape::Tape;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MSTError {
    #[error("collection contains an empty set")]
    EmptySet,
    #[error("training loss is not finite")]
    NonFiniteLoss,
    #[error("decoded sequence does not parse (truncated: {truncated})")]
    DecodeInvalid { tokens: Vec<Token>, truncated: bool },
    #[error("unsupported checkpoint version {got}")]
    VersionError { got: u32 },
    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

// ---------------------------------------------------------------------------
// Configuration and parameter layout

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MSTConfig {
    /// ISAB blocks in the per-set encoder.
    pub isab_blocks: usize,
    /// Decoder blocks (self-attention + cross-attention + feed-forward).
    pub decoder_blocks: usize,
    /// Embedding width; must be divisible by `heads`.
    pub d: usize,
    pub heads: usize,
    /// Inducing points per ISAB block.
    pub inducing: usize,
    /// PMA seed vectors; the decoder cross-attends over this many latents.
    pub k_seed: usize,
    /// Decode length cap, counting the implicit SOS.
    pub max_len: usize,
    pub learning_rate: f64,
    /// Global gradient-norm clip applied before each update.
    pub grad_clip: f64,
    pub rng_seed: u64,
}

impl Default for MSTConfig {
    fn default() -> MSTConfig {
        MSTConfig {
            isab_blocks: 3,
            decoder_blocks: 5,
            d: 64,
            heads: 4,
            inducing: 16,
            k_seed: 4,
            max_len: 64,
            learning_rate: 0.05,
            grad_clip: 1.0,
            rng_seed: 0,
        }
    }
}

/// Parameter handles are indices into `MSTModel::params`; the layout is
/// rebuilt deterministically from the config, so checkpoints only carry the
/// flat array list.
#[derive(Debug, Clone)]
struct AttnIds {
    wq: usize,
    bq: usize,
    wk: usize,
    bk: usize,
    wv: usize,
    bv: usize,
    wo: usize,
    bo: usize,
}

#[derive(Debug, Clone)]
struct MabIds {
    ln_q_g: usize,
    ln_q_b: usize,
    ln_kv_g: usize,
    ln_kv_b: usize,
    attn: AttnIds,
    ln_ff_g: usize,
    ln_ff_b: usize,
    ff_w1: usize,
    ff_b1: usize,
    ff_w2: usize,
    ff_b2: usize,
}

#[derive(Debug, Clone)]
struct IsabIds {
    inducing: usize,
    /// H = MAB(I, X): inducing points attend to the set.
    mab_h: MabIds,
    /// out = MAB(X, H): the set attends back to the summary.
    mab_out: MabIds,
}

#[derive(Debug, Clone)]
struct DecBlockIds {
    ln_self_g: usize,
    ln_self_b: usize,
    self_attn: AttnIds,
    /// Cross-attention over the latent plus the block's feed-forward.
    cross: MabIds,
}

#[derive(Debug, Clone)]
struct Layout {
    lift_w: usize,
    lift_b: usize,
    isabs: Vec<IsabIds>,
    set_seeds: usize,
    set_pma: MabIds,
    rho_seeds: usize,
    rho_pma: MabIds,
    embed: usize,
    dec: Vec<DecBlockIds>,
    final_ln_g: usize,
    final_ln_b: usize,
    out_w: usize,
    out_b: usize,
}

struct Store {
    arrays: Vec<Array2<f64>>,
}

impl Store {
    fn push(&mut self, a: Array2<f64>) -> usize {
        self.arrays.push(a);
        self.arrays.len() - 1
    }

    fn glorot(&mut self, r: usize, c: usize, rng: &mut ChaCha12Rng) -> usize {
        let lim = (6.0 / (r + c) as f64).sqrt();
        let a = Array2::from_shape_fn((r, c), |_| rng.random_range(-lim..lim));
        self.push(a)
    }

    fn zeros(&mut self, r: usize, c: usize) -> usize {
        self.push(Array2::zeros((r, c)))
    }

    fn ones(&mut self, r: usize, c: usize) -> usize {
        self.push(Array2::ones((r, c)))
    }
}

fn attn_ids(st: &mut Store, d: usize, rng: &mut ChaCha12Rng) -> AttnIds {
    AttnIds {
        wq: st.glorot(d, d, rng),
        bq: st.zeros(1, d),
        wk: st.glorot(d, d, rng),
        bk: st.zeros(1, d),
        wv: st.glorot(d, d, rng),
        bv: st.zeros(1, d),
        wo: st.glorot(d, d, rng),
        bo: st.zeros(1, d),
    }
}

fn mab_ids(st: &mut Store, d: usize, rng: &mut ChaCha12Rng) -> MabIds {
    let dff = 2 * d;
    MabIds {
        ln_q_g: st.ones(1, d),
        ln_q_b: st.zeros(1, d),
        ln_kv_g: st.ones(1, d),
        ln_kv_b: st.zeros(1, d),
        attn: attn_ids(st, d, rng),
        ln_ff_g: st.ones(1, d),
        ln_ff_b: st.zeros(1, d),
        ff_w1: st.glorot(d, dff, rng),
        ff_b1: st.zeros(1, dff),
        ff_w2: st.glorot(dff, d, rng),
        ff_b2: st.zeros(1, d),
    }
}

#[derive(Debug, Clone)]
pub struct MSTModel {
    pub config: MSTConfig,
    params: Vec<Array2<f64>>,
    layout: Layout,
}

/// Latent summary of a whole collection: `k_seed` rows of width `d`, plus
/// the per-set (max |x|, max |y|) scales applied before encoding. The scales
/// follow input set order and are diagnostic; `z` itself is order-invariant.
#[derive(Debug, Clone)]
pub struct LatentZ {
    pub z: Array2<f64>,
    pub scales: Vec<(f64, f64)>,
}

impl MSTModel {
    pub fn new(config: MSTConfig) -> MSTModel {
        assert!(config.heads >= 1, "at least one attention head");
        assert!(
            config.d % config.heads == 0,
            "embedding width must be divisible by head count"
        );
        assert!(config.inducing >= 1 && config.k_seed >= 1);
        assert!(config.max_len >= 2);
        let mut rng = ChaCha12Rng::seed_from_u64(config.rng_seed);
        let mut st = Store { arrays: Vec::new() };
        let d = config.d;
        let layout = Layout {
            lift_w: st.glorot(2, d, &mut rng),
            lift_b: st.zeros(1, d),
            isabs: (0..config.isab_blocks)
                .map(|_| IsabIds {
                    inducing: st.glorot(config.inducing, d, &mut rng),
                    mab_h: mab_ids(&mut st, d, &mut rng),
                    mab_out: mab_ids(&mut st, d, &mut rng),
                })
                .collect(),
            set_seeds: st.glorot(config.k_seed, d, &mut rng),
            set_pma: mab_ids(&mut st, d, &mut rng),
            rho_seeds: st.glorot(config.k_seed, d, &mut rng),
            rho_pma: mab_ids(&mut st, d, &mut rng),
            embed: st.glorot(VOCAB_SIZE, d, &mut rng),
            dec: (0..config.decoder_blocks)
                .map(|_| DecBlockIds {
                    ln_self_g: st.ones(1, d),
                    ln_self_b: st.zeros(1, d),
                    self_attn: attn_ids(&mut st, d, &mut rng),
                    cross: mab_ids(&mut st, d, &mut rng),
                })
                .collect(),
            final_ln_g: st.ones(1, d),
            final_ln_b: st.zeros(1, d),
            out_w: st.glorot(d, VOCAB_SIZE, &mut rng),
            out_b: st.zeros(1, VOCAB_SIZE),
        };
        MSTModel {
            config,
            params: st.arrays,
            layout,
        }
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(|p| p.len()).sum()
    }

    /// Load every parameter onto a fresh tape; `ids[i]` is the tape node for
    /// `params[i]`.
    fn load_tape(&self) -> (Tape, Vec<usize>) {
        let mut t = Tape::new();
        let ids = self.params.iter().map(|p| t.leaf(p.clone())).collect();
        (t, ids)
    }
}

// ---------------------------------------------------------------------------
// Forward graphs

const NEG_MASK: f64 = -1e30;

fn causal_mask(len: usize) -> Array2<f64> {
    Array2::from_shape_fn((len, len), |(i, j)| if j > i { NEG_MASK } else { 0.0 })
}

fn positional_encoding(len: usize, d: usize) -> Array2<f64> {
    Array2::from_shape_fn((len, d), |(pos, j)| {
        let pair = (j / 2) as f64;
        let angle = pos as f64 / 10000f64.powf(2.0 * pair / d as f64);
        if j % 2 == 0 {
            angle.sin()
        } else {
            angle.cos()
        }
    })
}

/// Multi-head attention: queries from `q`, keys/values from `kv`, optional
/// additive mask on the score matrix.
fn mha(
    t: &mut Tape,
    pid: &[usize],
    a: &AttnIds,
    q: usize,
    kv: usize,
    heads: usize,
    mask: Option<&Array2<f64>>,
) -> usize {
    let d = t.value(q).ncols();
    let dk = d / heads;
    let qm = t.matmul(q, pid[a.wq]);
    let qp = t.add_row(qm, pid[a.bq]);
    let km = t.matmul(kv, pid[a.wk]);
    let kp = t.add_row(km, pid[a.bk]);
    let vm = t.matmul(kv, pid[a.wv]);
    let vp = t.add_row(vm, pid[a.bv]);
    let mut heads_out = Vec::with_capacity(heads);
    for h in 0..heads {
        let qh = t.slice_cols(qp, h * dk, dk);
        let kh = t.slice_cols(kp, h * dk, dk);
        let vh = t.slice_cols(vp, h * dk, dk);
        let scores = t.matmul_t(qh, kh);
        let scaled = t.scale(scores, 1.0 / (dk as f64).sqrt());
        let masked = match mask {
            Some(m) => t.add_const(scaled, m),
            None => scaled,
        };
        let attn = t.softmax_rows(masked);
        heads_out.push(t.matmul(attn, vh));
    }
    let cat = t.concat_cols(&heads_out);
    let om = t.matmul(cat, pid[a.wo]);
    t.add_row(om, pid[a.bo])
}

/// Pre-norm attention block: `q + MHA(LN(q), LN(kv))` followed by a
/// residual feed-forward on the result.
fn mab(t: &mut Tape, pid: &[usize], m: &MabIds, q: usize, kv: usize, heads: usize) -> usize {
    let qn = t.layer_norm(q, pid[m.ln_q_g], pid[m.ln_q_b]);
    let kn = t.layer_norm(kv, pid[m.ln_kv_g], pid[m.ln_kv_b]);
    let att = mha(t, pid, &m.attn, qn, kn, heads, None);
    let a = t.add(q, att);
    let an = t.layer_norm(a, pid[m.ln_ff_g], pid[m.ln_ff_b]);
    let h1 = t.matmul(an, pid[m.ff_w1]);
    let h1b = t.add_row(h1, pid[m.ff_b1]);
    let hr = t.relu(h1b);
    let h2 = t.matmul(hr, pid[m.ff_w2]);
    let ff = t.add_row(h2, pid[m.ff_b2]);
    t.add(a, ff)
}

/// Build the encoder graph for one collection; returns the latent node
/// (k_seed × d) and the per-set input scales.
fn encoder_graph(
    model: &MSTModel,
    t: &mut Tape,
    pid: &[usize],
    coll: &SetCollection,
) -> Result<(usize, Vec<(f64, f64)>), MSTError> {
    if coll.sets.is_empty() {
        return Err(MSTError::EmptySet);
    }
    let lay = &model.layout;
    let heads = model.config.heads;
    let mut pooled = Vec::with_capacity(coll.sets.len());
    let mut scales = Vec::with_capacity(coll.sets.len());
    for (support, ys) in &coll.sets {
        let n = support.values.len();
        if n == 0 || ys.len() != n {
            return Err(MSTError::EmptySet);
        }
        let max_abs = |vs: &[f64]| {
            let m = vs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if m > 0.0 {
                m
            } else {
                1.0
            }
        };
        let sx = max_abs(&support.values);
        let sy = max_abs(ys);
        scales.push((sx, sy));
        let rows = Array2::from_shape_fn((n, 2), |(i, j)| {
            if j == 0 {
                support.values[i] / sx
            } else {
                ys[i] / sy
            }
        });
        let s = t.leaf(rows);
        let lm = t.matmul(s, pid[lay.lift_w]);
        let mut x = t.add_row(lm, pid[lay.lift_b]);
        for isab in &lay.isabs {
            let h = mab(t, pid, &isab.mab_h, pid[isab.inducing], x, heads);
            x = mab(t, pid, &isab.mab_out, x, h, heads);
        }
        pooled.push(mab(t, pid, &lay.set_pma, pid[lay.set_seeds], x, heads));
    }
    let cat = t.concat_rows(&pooled);
    let z = mab(t, pid, &lay.rho_pma, pid[lay.rho_seeds], cat, heads);
    Ok((z, scales))
}

/// Build the decoder graph over a teacher-forced token prefix; returns the
/// logits node (len × vocab).
fn decoder_graph(
    model: &MSTModel,
    t: &mut Tape,
    pid: &[usize],
    z: usize,
    tokens: &[Token],
) -> usize {
    let lay = &model.layout;
    let heads = model.config.heads;
    let ids: Vec<usize> = tokens.iter().map(|tok| tok.id()).collect();
    let emb = t.gather(pid[lay.embed], &ids);
    let pe = positional_encoding(tokens.len(), model.config.d);
    let mut x = t.add_const(emb, &pe);
    let mask = causal_mask(tokens.len());
    for blk in &lay.dec {
        let xn = t.layer_norm(x, pid[blk.ln_self_g], pid[blk.ln_self_b]);
        let sa = mha(t, pid, &blk.self_attn, xn, xn, heads, Some(&mask));
        let res = t.add(x, sa);
        x = mab(t, pid, &blk.cross, res, z, heads);
    }
    let xn = t.layer_norm(x, pid[lay.final_ln_g], pid[lay.final_ln_b]);
    let om = t.matmul(xn, pid[lay.out_w]);
    t.add_row(om, pid[lay.out_b])
}

fn softmax_slice(row: &[f64]) -> Vec<f64> {
    let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = row.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = exps.iter().sum();
    exps.into_iter().map(|v| v / s).collect()
}

// ---------------------------------------------------------------------------
// Inference

/// Encode a collection into its latent summary.
pub fn encode(model: &MSTModel, coll: &SetCollection) -> Result<LatentZ, MSTError> {
    let (mut t, pid) = model.load_tape();
    let (z, scales) = encoder_graph(model, &mut t, &pid, coll)?;
    Ok(LatentZ {
        z: t.value(z).clone(),
        scales,
    })
}

/// Next-token distribution given a prefix that starts with SOS.
pub fn decode_step(model: &MSTModel, z: &LatentZ, prefix: &[Token]) -> Vec<f64> {
    let dists = decode_all(model, z, prefix);
    dists.row(dists.nrows() - 1).to_vec()
}

/// Per-position next-token distributions for a whole teacher-forced prefix
/// (row i predicts the token after `prefix[i]`).
pub fn decode_all(model: &MSTModel, z: &LatentZ, prefix: &[Token]) -> Array2<f64> {
    assert_eq!(
        prefix.first(),
        Some(&Token::Sos),
        "decoder prefix must begin with SOS"
    );
    let (mut t, pid) = model.load_tape();
    let zn = t.leaf(z.z.clone());
    let logits = decoder_graph(model, &mut t, &pid, zn, prefix);
    let lv = t.value(logits);
    let mut out = Array2::zeros(lv.dim());
    for (i, row) in lv.rows().into_iter().enumerate() {
        let p = softmax_slice(row.as_slice().expect("contiguous row"));
        for (j, v) in p.into_iter().enumerate() {
            out[(i, j)] = v;
        }
    }
    out
}

/// Greedy decode: repeatedly take the highest-probability token (ties break
/// toward the lowest id) until EOS or the length cap. Returns the parsed
/// skeleton, or `DecodeInvalid` carrying the raw tokens when the sequence is
/// truncated or fails to parse.
pub fn greedy_decode(model: &MSTModel, z: &LatentZ) -> Result<Skeleton, MSTError> {
    let mut seq = vec![Token::Sos];
    let mut truncated = true;
    while seq.len() < model.config.max_len {
        let p = decode_step(model, z, &seq);
        let mut best = 0;
        for (i, &v) in p.iter().enumerate() {
            if v > p[best] {
                best = i;
            }
        }
        let tok = Token::from_id(best).expect("distribution indexed by vocab");
        if tok == Token::Eos {
            truncated = false;
            break;
        }
        seq.push(tok);
    }
    let tokens = seq.split_off(1);
    if truncated {
        return Err(MSTError::DecodeInvalid {
            tokens,
            truncated: true,
        });
    }
    match tokens_to_tree(&tokens).ok().and_then(|tr| Skeleton::new(tr).ok()) {
        Some(s) => Ok(s),
        None => Err(MSTError::DecodeInvalid {
            tokens,
            truncated: false,
        }),
    }
}

// ---------------------------------------------------------------------------
// Training

/// A teacher-forcing batch: target sequences are SOS … EOS padded with EOS
/// to a common length, and the mask is 1 on real positions (including the
/// first EOS) and 0 exactly on padding.
#[derive(Debug, Clone)]
pub struct TrainBatch {
    pub collections: Vec<SetCollection>,
    pub targets: Vec<Vec<Token>>,
    pub mask: Vec<Vec<f64>>,
}

pub fn make_batch(records: &[SetCollection]) -> TrainBatch {
    let seqs: Vec<Vec<Token>> = records
        .iter()
        .map(|r| {
            let target = r.target.as_ref().expect("training records carry a target");
            let mut s = vec![Token::Sos];
            s.extend(skeleton_to_tokens(target.tree()));
            s.push(Token::Eos);
            s
        })
        .collect();
    let max_len = seqs.iter().map(|s| s.len()).max().unwrap_or(0);
    let mut targets = Vec::with_capacity(seqs.len());
    let mut mask = Vec::with_capacity(seqs.len());
    for mut s in seqs {
        let mut m = vec![1.0; s.len()];
        while s.len() < max_len {
            s.push(Token::Eos);
            m.push(0.0);
        }
        targets.push(s);
        mask.push(m);
    }
    TrainBatch {
        collections: records.to_vec(),
        targets,
        mask,
    }
}

/// Shared loss graph: mean over the batch of masked cross-entropy between
/// teacher-forced predictions and targets. Returns the scalar loss node.
fn batch_loss_graph(
    model: &MSTModel,
    t: &mut Tape,
    pid: &[usize],
    batch: &TrainBatch,
) -> Result<usize, MSTError> {
    let b = batch.collections.len();
    assert!(b > 0, "batch must be nonempty");
    assert_eq!(b, batch.targets.len());
    assert_eq!(b, batch.mask.len());
    let mut parts = Vec::with_capacity(b);
    for j in 0..b {
        let (z, _) = encoder_graph(model, t, pid, &batch.collections[j])?;
        let tgt = &batch.targets[j];
        let m = &batch.mask[j];
        assert!(tgt.len() >= 2, "target needs at least SOS and EOS");
        assert_eq!(tgt.len(), m.len());
        let input = &tgt[..tgt.len() - 1];
        let logits = decoder_graph(model, t, pid, z, input);
        let target_ids: Vec<usize> = tgt[1..].iter().map(|tok| tok.id()).collect();
        let weights: Vec<f64> = m[1..].iter().map(|&w| w / b as f64).collect();
        parts.push(t.cross_entropy(logits, &target_ids, &weights));
    }
    let mut loss = parts[0];
    for &p in &parts[1..] {
        loss = t.add(loss, p);
    }
    Ok(loss)
}

fn batch_loss(model: &MSTModel, batch: &TrainBatch) -> Result<f64, MSTError> {
    let (mut t, pid) = model.load_tape();
    let loss = batch_loss_graph(model, &mut t, &pid, batch)?;
    Ok(t.value(loss)[(0, 0)])
}

/// One gradient-descent step with global-norm clipping. Returns the
/// pre-update loss.
pub fn train_step(model: &mut MSTModel, batch: &TrainBatch) -> Result<f64, MSTError> {
    let (mut t, pid) = model.load_tape();
    let loss = batch_loss_graph(model, &mut t, &pid, batch)?;
    let lval = t.value(loss)[(0, 0)];
    if !lval.is_finite() {
        return Err(MSTError::NonFiniteLoss);
    }
    t.backward(loss);
    let grads: Vec<Array2<f64>> = pid.iter().map(|&id| t.grad(id).clone()).collect();
    let norm = grads
        .iter()
        .map(|g| g.iter().map(|v| v * v).sum::<f64>())
        .sum::<f64>()
        .sqrt();
    let clip = model.config.grad_clip;
    let scale = if norm > clip { clip / norm } else { 1.0 };
    let step = model.config.learning_rate * scale;
    for (p, g) in model.params.iter_mut().zip(&grads) {
        p.scaled_add(-step, g);
    }
    Ok(lval)
}

/// Worst relative error between analytic gradients and central finite
/// differences over every parameter entry.
pub fn grad_check_mst(model: &MSTModel, batch: &TrainBatch) -> f64 {
    let h = 1e-5;
    let (mut t, pid) = model.load_tape();
    let loss = batch_loss_graph(model, &mut t, &pid, batch).expect("valid batch");
    t.backward(loss);
    let mut worst = 0.0f64;
    for i in 0..model.params.len() {
        let (rows, cols) = model.params[i].dim();
        for r in 0..rows {
            for c in 0..cols {
                let probe = |delta: f64| -> f64 {
                    let mut m = model.clone();
                    m.params[i][(r, c)] += delta;
                    batch_loss(&m, batch).expect("valid batch")
                };
                let numeric = (probe(h) - probe(-h)) / (2.0 * h);
                let analytic = t.grad(pid[i])[(r, c)];
                let err =
                    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-6);
                worst = worst.max(err);
            }
        }
    }
    worst
}

// ---------------------------------------------------------------------------
// Checkpointing

const MAGIC: &[u8; 4] = b"SKMT";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    config: MSTConfig,
    shapes: Vec<(usize, usize)>,
}

pub fn save_model(model: &MSTModel, path: &Path) -> Result<(), MSTError> {
    let header = Header {
        config: model.config.clone(),
        shapes: model.params.iter().map(|p| p.dim()).collect(),
    };
    let hjson =
        serde_json::to_vec(&header).map_err(|e| MSTError::CorruptCheckpoint(e.to_string()))?;
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(hjson.len() as u32).to_le_bytes());
    out.extend_from_slice(&hjson);
    for p in &model.params {
        for v in p.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(&out)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<MSTModel, MSTError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let fail = |m: &str| MSTError::CorruptCheckpoint(m.to_string());
    if bytes.len() < 12 || &bytes[0..4] != MAGIC {
        return Err(fail("not an SKMT checkpoint"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(MSTError::VersionError { got: version });
    }
    let hlen = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if bytes.len() < 12 + hlen {
        return Err(fail("truncated header"));
    }
    let header: Header = serde_json::from_slice(&bytes[12..12 + hlen])
        .map_err(|e| MSTError::CorruptCheckpoint(e.to_string()))?;
    let mut model = MSTModel::new(header.config);
    if header.shapes != model.params.iter().map(|p| p.dim()).collect::<Vec<_>>() {
        return Err(fail("parameter shapes do not match config"));
    }
    let mut off = 12 + hlen;
    for p in model.params.iter_mut() {
        for v in p.iter_mut() {
            if bytes.len() < off + 8 {
                return Err(fail("truncated payload"));
            }
            *v = f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
            off += 8;
        }
    }
    if off != bytes.len() {
        return Err(fail("trailing bytes after payload"));
    }
    Ok(model)
}

// ---------------------------------------------------------------------------
