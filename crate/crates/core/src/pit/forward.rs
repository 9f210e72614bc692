//! Forward pass: tokens, attention blocks, and the decoding head.
//!
//! Training uses [`forward_loss`], which keeps every intermediate needed by
//! the backward pass. Inference uses [`predict_values`], which encodes the
//! known points once and decodes query pixels in chunks, dropping
//! intermediates. Both run the same arithmetic, so a pixel's prediction does
//! not depend on which other pixels are decoded alongside it.

use super::math::{
    gelu, layer_norm, linear_forward, softmax_rows, Mat, NormCache, Real,
};
use super::weights::{AttnP, BlockP, PitWeights};
use super::{rmse, MapTask, PitConfig};
use crate::error::{Error, Result};
use crate::sample::KnownPoint;

/// Sin/cos position features: for each axis (row, then column), octaves
/// k = 0..n_fourier of sin(2^k pi u) and cos(2^k pi u), with u the pixel
/// center in (0, 1).
pub(super) fn fourier_features<T: Real>(
    coords: &[(usize, usize)],
    h: usize,
    w: usize,
    n_fourier: usize,
) -> Mat<T> {
    let mut out = Mat::zeros(coords.len(), 4 * n_fourier);
    for (i, &(r, c)) in coords.iter().enumerate() {
        let row = out.row_mut(i);
        let ur = (r as f64 + 0.5) / h as f64;
        let uc = (c as f64 + 0.5) / w as f64;
        let mut j = 0;
        for u in [ur, uc] {
            for k in 0..n_fourier {
                let arg = 2f64.powi(k as i32) * std::f64::consts::PI * u;
                row[j] = T::from_f64(arg.sin());
                row[j + 1] = T::from_f64(arg.cos());
                j += 2;
            }
        }
    }
    out
}

pub(super) struct AttnCache<T> {
    pub q: Mat<T>,
    pub k: Mat<T>,
    pub v: Mat<T>,
    pub o_concat: Mat<T>,
    /// Post-softmax attention per head, each n_q x n_k.
    pub probs: Vec<Mat<T>>,
}

pub(super) fn attention_forward<T: Real>(
    q_in: &Mat<T>,
    kv_in: &Mat<T>,
    p: &AttnP<T>,
    n_heads: usize,
) -> (Mat<T>, AttnCache<T>) {
    let d = p.q.w.rows;
    let dh = d / n_heads;
    let scale = T::from_f64(1.0 / (dh as f64).sqrt());
    let q = linear_forward(q_in, &p.q.w, &p.q.b);
    let k = linear_forward(kv_in, &p.k.w, &p.k.b);
    let v = linear_forward(kv_in, &p.v.w, &p.v.b);
    let mut o_concat = Mat::zeros(q.rows, d);
    let mut probs = Vec::with_capacity(n_heads);
    for head in 0..n_heads {
        let c0 = head * dh;
        let qh = q.col_block(c0, c0 + dh);
        let kh = k.col_block(c0, c0 + dh);
        let vh = v.col_block(c0, c0 + dh);
        let mut s = qh.matmul_nt(&kh);
        for e in s.data.iter_mut() {
            *e *= scale;
        }
        softmax_rows(&mut s);
        let oh = s.matmul(&vh);
        o_concat.add_col_block(c0, &oh);
        probs.push(s);
    }
    let out = linear_forward(&o_concat, &p.o.w, &p.o.b);
    (out, AttnCache { q, k, v, o_concat, probs })
}

pub(super) struct BlockCache<T> {
    pub norm1: NormCache<T>,
    /// Normed block input; the attention queries (and keys/values when
    /// self-attending).
    pub h1: Mat<T>,
    pub attn: AttnCache<T>,
    pub norm2: NormCache<T>,
    /// Normed residual state feeding the feed-forward.
    pub h2: Mat<T>,
    pub ff_pre: Mat<T>,
    pub ff_tanh: Mat<T>,
    pub ff_act: Mat<T>,
}

/// Pre-norm block: x + attn(LN(x)), then + ff(LN(.)). `kv` selects
/// cross-attention onto an external memory; `None` self-attends.
pub(super) fn block_forward<T: Real>(
    x: &Mat<T>,
    kv: Option<&Mat<T>>,
    p: &BlockP<T>,
    n_heads: usize,
) -> (Mat<T>, BlockCache<T>) {
    let (h1, norm1) = layer_norm(x, &p.norm_attn.gain, &p.norm_attn.bias);
    let (attn_out, attn) = attention_forward(&h1, kv.unwrap_or(&h1), &p.attn, n_heads);
    let mut x_mid = x.clone();
    x_mid.add_assign(&attn_out);
    let (h2, norm2) = layer_norm(&x_mid, &p.norm_ff.gain, &p.norm_ff.bias);
    let ff_pre = linear_forward(&h2, &p.ff1.w, &p.ff1.b);
    let (ff_act, ff_tanh) = gelu(&ff_pre);
    let ff_out = linear_forward(&ff_act, &p.ff2.w, &p.ff2.b);
    let mut out = x_mid;
    out.add_assign(&ff_out);
    let cache = BlockCache {
        norm1,
        h1,
        attn,
        norm2,
        h2,
        ff_pre,
        ff_tanh,
        ff_act,
    };
    (out, cache)
}

pub(super) struct EncState<T> {
    pub known_feat: Mat<T>,
    pub known_vals: Mat<T>,
    pub blocks: Vec<BlockCache<T>>,
    pub final_norm: NormCache<T>,
    pub memory: Mat<T>,
}

pub(super) fn encode<T: Real>(
    wt: &PitWeights<T>,
    cfg: &PitConfig,
    known: &[KnownPoint],
    h: usize,
    w: usize,
) -> EncState<T> {
    let coords: Vec<(usize, usize)> = known.iter().map(|p| (p.row, p.col)).collect();
    let known_feat = fourier_features(&coords, h, w, cfg.n_fourier);
    let known_vals = Mat::from_vec(
        known.len(),
        1,
        known.iter().map(|p| T::from_f64(p.value)).collect(),
    );
    let pos = linear_forward(&known_feat, &wt.pos_proj.w, &wt.pos_proj.b);
    let val = linear_forward(&known_vals, &wt.val_proj.w, &wt.val_proj.b);
    let mut x = pos.concat_cols(&val);
    let mut blocks = Vec::with_capacity(wt.enc.len());
    for b in &wt.enc {
        let (nx, cache) = block_forward(&x, None, b, cfg.n_heads);
        blocks.push(cache);
        x = nx;
    }
    let (memory, final_norm) = layer_norm(&x, &wt.enc_norm.gain, &wt.enc_norm.bias);
    EncState {
        known_feat,
        known_vals,
        blocks,
        final_norm,
        memory,
    }
}

pub(super) struct DecState<T> {
    pub query_feat: Mat<T>,
    pub blocks: Vec<BlockCache<T>>,
    pub final_norm: NormCache<T>,
    /// Normed decoder output; input of the readout head.
    pub z: Mat<T>,
    pub head_pre: Mat<T>,
    pub head_tanh: Mat<T>,
    pub head_act: Mat<T>,
    pub preds: Vec<T>,
}

/// Decode a batch of pixel positions against an encoded memory. A query
/// token is its position embedding with the value half zeroed; queries only
/// cross-attend to the memory, never to each other.
pub(super) fn decode<T: Real>(
    wt: &PitWeights<T>,
    cfg: &PitConfig,
    memory: &Mat<T>,
    coords: &[(usize, usize)],
    h: usize,
    w: usize,
) -> DecState<T> {
    let query_feat = fourier_features(coords, h, w, cfg.n_fourier);
    let pos = linear_forward(&query_feat, &wt.pos_proj.w, &wt.pos_proj.b);
    let zeros = Mat::zeros(coords.len(), cfg.d_model / 2);
    let mut x = pos.concat_cols(&zeros);
    let mut blocks = Vec::with_capacity(wt.dec.len());
    for b in &wt.dec {
        let (nx, cache) = block_forward(&x, Some(memory), b, cfg.n_heads);
        blocks.push(cache);
        x = nx;
    }
    let (z, final_norm) = layer_norm(&x, &wt.dec_norm.gain, &wt.dec_norm.bias);
    let head_pre = linear_forward(&z, &wt.head1.w, &wt.head1.b);
    let (head_act, head_tanh) = gelu(&head_pre);
    let out = linear_forward(&head_act, &wt.head2.w, &wt.head2.b);
    let preds = out.data;
    DecState {
        query_feat,
        blocks,
        final_norm,
        z,
        head_pre,
        head_tanh,
        head_act,
        preds,
    }
}

/// Everything the backward pass needs from one training forward.
pub struct TrainState<T> {
    pub loss: T,
    /// Predictions for `task.query`, in task order.
    pub preds: Vec<T>,
    pub(super) enc: EncState<T>,
    pub(super) dec: DecState<T>,
}

/// Full forward over one map task: encode known points, decode all query
/// points in one chunk, and score RMSE against the held-out truth.
pub fn forward_loss<T: Real>(
    wt: &PitWeights<T>,
    cfg: &PitConfig,
    task: &MapTask<'_>,
) -> Result<TrainState<T>> {
    task.validate(cfg)?;
    let enc = encode(wt, cfg, task.known, task.h, task.w);
    let coords: Vec<(usize, usize)> = task.query.iter().map(|q| (q.row, q.col)).collect();
    let dec = decode(wt, cfg, &enc.memory, &coords, task.h, task.w);
    let truth: Vec<T> = task.query.iter().map(|q| T::from_f64(q.truth)).collect();
    let loss = rmse(&dec.preds, &truth);
    let preds = dec.preds.clone();
    Ok(TrainState {
        loss,
        preds,
        enc,
        dec,
    })
}

/// Predict values at arbitrary pixel positions. Encodes once, then decodes
/// `cfg.decode_chunk` positions at a time; chunking changes memory use, not
/// results.
pub fn predict_values<T: Real>(
    wt: &PitWeights<T>,
    cfg: &PitConfig,
    known: &[KnownPoint],
    coords: &[(usize, usize)],
    h: usize,
    w: usize,
) -> Result<Vec<T>> {
    MapTask {
        h,
        w,
        known,
        query: &[],
    }
    .validate(cfg)?;
    for &(r, c) in coords {
        if r >= h || c >= w {
            return Err(Error::Dimension(format!(
                "prediction target ({r}, {c}) outside {h}x{w} grid"
            )));
        }
    }
    let enc = encode(wt, cfg, known, h, w);
    let mut preds = Vec::with_capacity(coords.len());
    for chunk in coords.chunks(cfg.decode_chunk) {
        let dec = decode(wt, cfg, &enc.memory, chunk, h, w);
        preds.extend_from_slice(&dec.preds);
    }
    Ok(preds)
}
