//! Reverse-mode gradients for the full model, plus a finite-difference
//! checker that verifies them parameter by parameter.

use super::forward::{forward_loss, AttnCache, BlockCache};
use super::math::{
    gelu_backward, layer_norm_backward, linear_backward, softmax_backward, Mat, Real,
};
use super::weights::{AttnP, BlockP, PitWeights};
use super::{rmse_grad, MapTask, PitConfig, TrainState};
use crate::error::Result;

/// Returns (d/d q_in, d/d kv_in); accumulates projection gradients into `g`.
fn attention_backward<T: Real>(
    dout: &Mat<T>,
    q_in: &Mat<T>,
    kv_in: &Mat<T>,
    p: &AttnP<T>,
    cache: &AttnCache<T>,
    g: &mut AttnP<T>,
    n_heads: usize,
) -> (Mat<T>, Mat<T>) {
    let d = p.q.w.rows;
    let dh = d / n_heads;
    let scale = T::from_f64(1.0 / (dh as f64).sqrt());
    let do_concat = linear_backward(&cache.o_concat, &p.o.w, dout, &mut g.o.w, &mut g.o.b);
    let mut dq = Mat::zeros(cache.q.rows, d);
    let mut dk = Mat::zeros(cache.k.rows, d);
    let mut dv = Mat::zeros(cache.v.rows, d);
    for head in 0..n_heads {
        let c0 = head * dh;
        let doh = do_concat.col_block(c0, c0 + dh);
        let probs = &cache.probs[head];
        let vh = cache.v.col_block(c0, c0 + dh);
        // O_h = P V_h.
        let dp = doh.matmul_nt(&vh);
        let dvh = probs.matmul_tn(&doh);
        let mut ds = softmax_backward(probs, &dp);
        for e in ds.data.iter_mut() {
            *e *= scale;
        }
        // S = scale * Q_h K_h^T.
        let kh = cache.k.col_block(c0, c0 + dh);
        let qh = cache.q.col_block(c0, c0 + dh);
        let dqh = ds.matmul(&kh);
        let dkh = ds.matmul_tn(&qh);
        dq.add_col_block(c0, &dqh);
        dk.add_col_block(c0, &dkh);
        dv.add_col_block(c0, &dvh);
    }
    let dq_in = linear_backward(q_in, &p.q.w, &dq, &mut g.q.w, &mut g.q.b);
    let mut dkv_in = linear_backward(kv_in, &p.k.w, &dk, &mut g.k.w, &mut g.k.b);
    dkv_in.add_assign(&linear_backward(kv_in, &p.v.w, &dv, &mut g.v.w, &mut g.v.b));
    (dq_in, dkv_in)
}

/// Returns d/d block-input, and d/d memory for cross-attention blocks.
fn block_backward<T: Real>(
    dout: &Mat<T>,
    kv: Option<&Mat<T>>,
    p: &BlockP<T>,
    cache: &BlockCache<T>,
    g: &mut BlockP<T>,
    n_heads: usize,
) -> (Mat<T>, Option<Mat<T>>) {
    // out = x_mid + ff2(gelu(ff1(LN(x_mid)))).
    let dff_act = linear_backward(&cache.ff_act, &p.ff2.w, dout, &mut g.ff2.w, &mut g.ff2.b);
    let dff_pre = gelu_backward(&cache.ff_pre, &cache.ff_tanh, &dff_act);
    let dh2 = linear_backward(&cache.h2, &p.ff1.w, &dff_pre, &mut g.ff1.w, &mut g.ff1.b);
    let mut dx_mid = layer_norm_backward(
        &dh2,
        &cache.norm2,
        &p.norm_ff.gain,
        &mut g.norm_ff.gain,
        &mut g.norm_ff.bias,
    );
    dx_mid.add_assign(dout);
    // x_mid = x + attn(LN(x), kv).
    let kv_in = kv.unwrap_or(&cache.h1);
    let (dq_in, dkv_in) = attention_backward(
        &dx_mid,
        &cache.h1,
        kv_in,
        &p.attn,
        &cache.attn,
        &mut g.attn,
        n_heads,
    );
    let (dh1, dmem) = match kv {
        None => {
            // Self-attention: queries and keys/values share h1.
            let mut s = dq_in;
            s.add_assign(&dkv_in);
            (s, None)
        }
        Some(_) => (dq_in, Some(dkv_in)),
    };
    let mut dx = layer_norm_backward(
        &dh1,
        &cache.norm1,
        &p.norm_attn.gain,
        &mut g.norm_attn.gain,
        &mut g.norm_attn.bias,
    );
    dx.add_assign(&dx_mid);
    (dx, dmem)
}

/// Gradient of the task RMSE with respect to every parameter, shaped like
/// the weights. `state` must come from [`forward_loss`] on the same task.
pub fn backward<T: Real>(
    wt: &PitWeights<T>,
    cfg: &PitConfig,
    task: &MapTask<'_>,
    state: &TrainState<T>,
) -> Result<PitWeights<T>> {
    let mut g = PitWeights::zeros(cfg);
    let half = cfg.d_model / 2;
    let truth: Vec<T> = task.query.iter().map(|q| T::from_f64(q.truth)).collect();
    let dpreds = rmse_grad(&state.preds, &truth, state.loss);
    let dout = Mat::from_vec(dpreds.len(), 1, dpreds);

    // Readout head.
    let dec = &state.dec;
    let dhead_act = linear_backward(&dec.head_act, &wt.head2.w, &dout, &mut g.head2.w, &mut g.head2.b);
    let dhead_pre = gelu_backward(&dec.head_pre, &dec.head_tanh, &dhead_act);
    let dz = linear_backward(&dec.z, &wt.head1.w, &dhead_pre, &mut g.head1.w, &mut g.head1.b);
    let mut dx = layer_norm_backward(
        &dz,
        &dec.final_norm,
        &wt.dec_norm.gain,
        &mut g.dec_norm.gain,
        &mut g.dec_norm.bias,
    );

    // Decoder stack; every block contributes gradient to the shared memory.
    let enc = &state.enc;
    let mut dmemory = Mat::zeros(enc.memory.rows, cfg.d_model);
    for i in (0..wt.dec.len()).rev() {
        let (ndx, dmem) = block_backward(
            &dx,
            Some(&enc.memory),
            &wt.dec[i],
            &dec.blocks[i],
            &mut g.dec[i],
            cfg.n_heads,
        );
        dx = ndx;
        dmemory.add_assign(&dmem.expect("cross-attention block yields a memory gradient"));
    }
    // Query tokens are [position embedding | zeros]; only the position half
    // carries gradient to parameters.
    let dpos_q = dx.col_block(0, half);
    linear_backward(
        &dec.query_feat,
        &wt.pos_proj.w,
        &dpos_q,
        &mut g.pos_proj.w,
        &mut g.pos_proj.b,
    );

    // Encoder stack underneath the memory norm.
    let mut dxe = layer_norm_backward(
        &dmemory,
        &enc.final_norm,
        &wt.enc_norm.gain,
        &mut g.enc_norm.gain,
        &mut g.enc_norm.bias,
    );
    for i in (0..wt.enc.len()).rev() {
        let (ndx, _) = block_backward(&dxe, None, &wt.enc[i], &enc.blocks[i], &mut g.enc[i], cfg.n_heads);
        dxe = ndx;
    }
    let dpos_k = dxe.col_block(0, half);
    linear_backward(
        &enc.known_feat,
        &wt.pos_proj.w,
        &dpos_k,
        &mut g.pos_proj.w,
        &mut g.pos_proj.b,
    );
    let dval = dxe.col_block(half, cfg.d_model);
    linear_backward(
        &enc.known_vals,
        &wt.val_proj.w,
        &dval,
        &mut g.val_proj.w,
        &mut g.val_proj.b,
    );
    Ok(g)
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    /// Parameter where the worst relative error occurred.
    pub worst: String,
    pub n_checked: usize,
    /// Parameters skipped because both gradients were below the magnitude floor.
    pub n_skipped: usize,
}

/// Compare analytic gradients against central finite differences for every
/// parameter, in f64. Relative error uses max(|analytic|, |numeric|) as the
/// denominator; parameters where that is below `floor` are skipped, since
/// the ratio of two vanishing numbers says nothing.
pub fn gradient_check(
    wt: &PitWeights<f64>,
    cfg: &PitConfig,
    task: &MapTask<'_>,
    eps: f64,
    floor: f64,
) -> Result<GradCheckReport> {
    let state = forward_loss(wt, cfg, task)?;
    let analytic = backward(wt, cfg, task, &state)?.flatten();
    let base = wt.flatten();
    let mut probe = wt.clone();
    let mut flat = base.clone();
    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        worst: String::new(),
        n_checked: 0,
        n_skipped: 0,
    };
    for i in 0..base.len() {
        flat[i] = base[i] + eps;
        probe.assign_flat(&flat);
        let up = forward_loss(&probe, cfg, task)?.loss;
        flat[i] = base[i] - eps;
        probe.assign_flat(&flat);
        let down = forward_loss(&probe, cfg, task)?.loss;
        flat[i] = base[i];
        let numeric = (up - down) / (2.0 * eps);
        let denom = analytic[i].abs().max(numeric.abs());
        if denom < floor {
            report.n_skipped += 1;
            continue;
        }
        report.n_checked += 1;
        let rel = (analytic[i] - numeric).abs() / denom;
        if rel > report.max_rel_err {
            report.max_rel_err = rel;
            report.worst = wt.param_name(i);
        }
    }
    Ok(report)
}
