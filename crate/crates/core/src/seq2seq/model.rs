//! PreNorm transformer encoder-decoder: forward passes, teacher-forced
//! cross-entropy and its exact reverse-mode gradient.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::kernels::{
    gelu, gelu_grad, gemm, layer_norm, layer_norm_backward, linear, linear_backward,
    log_softmax, positional_table, softmax_in_place, LayerNormCache, Matrix, View,
};
use super::params::{AttnIdx, FfnIdx, Gradients, NormIdx, Parameters};
use crate::error::{Error, Result};
use crate::tokenizer::{id_to_class, TokenSequence, BOS, NUM_CHAR_CLASSES};

/// One (source, target) training pair; the target is `[BOS, c.., EOS]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainPair {
    pub src: TokenSequence,
    pub tgt: TokenSequence,
}

/// Splits `buf` into two disjoint mutable tensors; `a` must precede `b`.
fn pair_mut(buf: &mut [f64], a: usize, a_len: usize, b: usize, b_len: usize) -> (&mut [f64], &mut [f64]) {
    debug_assert!(a + a_len <= b);
    let (lo, hi) = buf.split_at_mut(b);
    (&mut lo[a..a + a_len], &mut hi[..b_len])
}

fn hadamard(x: &mut Matrix, mask: Option<&Vec<f64>>) {
    if let Some(m) = mask {
        for (v, s) in x.data.iter_mut().zip(m) {
            *v *= s;
        }
    }
}

fn add_in_place(x: &mut Matrix, y: &Matrix) {
    for (a, b) in x.data.iter_mut().zip(&y.data) {
        *a += b;
    }
}

struct Dropout<'a> {
    rng: &'a mut ChaCha8Rng,
    rate: f64,
}

impl Dropout<'_> {
    fn mask(&mut self, n: usize) -> Vec<f64> {
        let keep = 1.0 / (1.0 - self.rate);
        (0..n)
            .map(|_| if self.rng.gen::<f64>() < self.rate { 0.0 } else { keep })
            .collect()
    }
}

fn maybe_mask(drop: &mut Option<Dropout<'_>>, n: usize) -> Option<Vec<f64>> {
    drop.as_mut().filter(|d| d.rate > 0.0).map(|d| d.mask(n))
}

struct AttnCache {
    q: Matrix,
    k: Matrix,
    v: Matrix,
    probs: Vec<Matrix>,
    ctx: Matrix,
}

struct FfnCache {
    pre: Matrix,
    act: Matrix,
}

struct EncLayerCache {
    ln1: LayerNormCache,
    h1: Matrix,
    attn: AttnCache,
    drop1: Option<Vec<f64>>,
    ln2: LayerNormCache,
    h2: Matrix,
    ffn: FfnCache,
    drop2: Option<Vec<f64>>,
}

struct DecLayerCache {
    ln1: LayerNormCache,
    h1: Matrix,
    self_attn: AttnCache,
    drop1: Option<Vec<f64>>,
    ln2: LayerNormCache,
    h2: Matrix,
    cross_attn: AttnCache,
    drop2: Option<Vec<f64>>,
    ln3: LayerNormCache,
    h3: Matrix,
    ffn: FfnCache,
    drop3: Option<Vec<f64>>,
}

struct EncoderCache {
    drop0: Option<Vec<f64>>,
    layers: Vec<EncLayerCache>,
    final_ln: LayerNormCache,
}

struct DecoderCache {
    drop0: Option<Vec<f64>>,
    layers: Vec<DecLayerCache>,
    final_ln: LayerNormCache,
    out: Matrix,
}

impl Parameters {
    fn norm(&self, n: NormIdx) -> (&[f64], &[f64]) {
        let d = self.cfg.d_model;
        (self.slice(n.gain, d), self.slice(n.bias, d))
    }

    fn embed(&self, ids: &[u32], drop: &mut Option<Dropout<'_>>) -> (Matrix, Option<Vec<f64>>) {
        let d = self.cfg.d_model;
        let scale = (d as f64).sqrt();
        let pe = positional_table(ids.len(), d);
        let mut x = Matrix::zeros(ids.len(), d);
        for (i, &id) in ids.iter().enumerate() {
            let row = self.slice(self.idx.embedding + id as usize * d, d);
            for ((o, e), p) in x.row_mut(i).iter_mut().zip(row).zip(pe.row(i)) {
                *o = e * scale + p;
            }
        }
        let mask = maybe_mask(drop, x.data.len());
        hadamard(&mut x, mask.as_ref());
        (x, mask)
    }

    fn attention(&self, a: &AttnIdx, q_in: &Matrix, kv_in: &Matrix, causal: bool) -> (Matrix, AttnCache) {
        let d = self.cfg.d_model;
        let dk = self.cfg.head_dim();
        let q = linear(q_in, self.slice(a.wq, d * d), self.slice(a.bq, d), d);
        let k = linear(kv_in, self.slice(a.wk, d * d), self.slice(a.bk, d), d);
        let v = linear(kv_in, self.slice(a.wv, d * d), self.slice(a.bv, d), d);
        let (lq, lk) = (q.rows, k.rows);
        let scale = 1.0 / (dk as f64).sqrt();
        let mut ctx = Matrix::zeros(lq, d);
        let mut probs = Vec::with_capacity(self.cfg.n_heads);
        for h in 0..self.cfg.n_heads {
            let off = h * dk;
            let mut s = Matrix::zeros(lq, lk);
            gemm(
                lq,
                dk,
                lk,
                View::cols(&q.data, d, off),
                View::cols(&k.data, d, off).t(),
                &mut s.data,
                lk,
                0,
                0.0,
            );
            for i in 0..lq {
                let row = s.row_mut(i);
                for (j, v) in row.iter_mut().enumerate() {
                    *v = if causal && j > i { f64::NEG_INFINITY } else { *v * scale };
                }
                softmax_in_place(row);
            }
            gemm(
                lq,
                lk,
                dk,
                View::rm(&s.data, lk),
                View::cols(&v.data, d, off),
                &mut ctx.data,
                d,
                off,
                0.0,
            );
            probs.push(s);
        }
        let out = linear(&ctx, self.slice(a.wo, d * d), self.slice(a.bo, d), d);
        (out, AttnCache { q, k, v, probs, ctx })
    }

    fn ffn(&self, f: &FfnIdx, x: &Matrix) -> (Matrix, FfnCache) {
        let (d, ff) = (self.cfg.d_model, self.cfg.d_ff);
        let pre = linear(x, self.slice(f.w1, d * ff), self.slice(f.b1, ff), ff);
        let act = Matrix {
            rows: pre.rows,
            cols: ff,
            data: pre.data.iter().map(|&v| gelu(v)).collect(),
        };
        let out = linear(&act, self.slice(f.w2, ff * d), self.slice(f.b2, d), d);
        (out, FfnCache { pre, act })
    }

    fn check_source(&self, src: &TokenSequence) -> Result<()> {
        if src.is_empty() {
            return Err(Error::EmptySource);
        }
        if src.len() > self.cfg.max_src_len {
            return Err(Error::Contract(format!(
                "source length {} exceeds max_src_len {}",
                src.len(),
                self.cfg.max_src_len
            )));
        }
        match src.ids.iter().find(|&&id| id as usize >= self.cfg.vocab_size) {
            Some(&id) => Err(Error::InvalidTokenId(id)),
            None => Ok(()),
        }
    }

    fn check_prefix(&self, prefix: &[u32]) -> Result<()> {
        if prefix.first() != Some(&BOS) {
            return Err(Error::Contract("decoder prefix must start with BOS".into()));
        }
        if prefix.len() > self.cfg.max_tgt_len {
            return Err(Error::Contract(format!(
                "prefix length {} exceeds max_tgt_len {}",
                prefix.len(),
                self.cfg.max_tgt_len
            )));
        }
        match prefix.iter().find(|&&id| id as usize >= self.cfg.vocab_size) {
            Some(&id) => Err(Error::InvalidTokenId(id)),
            None => Ok(()),
        }
    }

    fn encoder_forward(&self, src: &[u32], mut drop: Option<Dropout<'_>>) -> (Matrix, EncoderCache) {
        let (mut x, drop0) = self.embed(src, &mut drop);
        let mut layers = Vec::with_capacity(self.idx.enc.len());
        for l in &self.idx.enc {
            let (g, b) = self.norm(l.norm1);
            let (h1, ln1) = layer_norm(&x, g, b);
            let (mut a, attn) = self.attention(&l.attn, &h1, &h1, false);
            let drop1 = maybe_mask(&mut drop, a.data.len());
            hadamard(&mut a, drop1.as_ref());
            add_in_place(&mut x, &a);

            let (g, b) = self.norm(l.norm2);
            let (h2, ln2) = layer_norm(&x, g, b);
            let (mut f, ffn) = self.ffn(&l.ffn, &h2);
            let drop2 = maybe_mask(&mut drop, f.data.len());
            hadamard(&mut f, drop2.as_ref());
            add_in_place(&mut x, &f);
            layers.push(EncLayerCache {
                ln1,
                h1,
                attn,
                drop1,
                ln2,
                h2,
                ffn,
                drop2,
            });
        }
        let (g, b) = self.norm(self.idx.enc_norm);
        let (mem, final_ln) = layer_norm(&x, g, b);
        (
            mem,
            EncoderCache {
                drop0,
                layers,
                final_ln,
            },
        )
    }

    fn decoder_forward_cached(
        &self,
        mem: &Matrix,
        prefix: &[u32],
        mut drop: Option<Dropout<'_>>,
    ) -> (Matrix, DecoderCache) {
        let (mut y, drop0) = self.embed(prefix, &mut drop);
        let mut layers = Vec::with_capacity(self.idx.dec.len());
        for l in &self.idx.dec {
            let (g, b) = self.norm(l.norm1);
            let (h1, ln1) = layer_norm(&y, g, b);
            let (mut a, self_attn) = self.attention(&l.self_attn, &h1, &h1, true);
            let drop1 = maybe_mask(&mut drop, a.data.len());
            hadamard(&mut a, drop1.as_ref());
            add_in_place(&mut y, &a);

            let (g, b) = self.norm(l.norm2);
            let (h2, ln2) = layer_norm(&y, g, b);
            let (mut c, cross_attn) = self.attention(&l.cross_attn, &h2, mem, false);
            let drop2 = maybe_mask(&mut drop, c.data.len());
            hadamard(&mut c, drop2.as_ref());
            add_in_place(&mut y, &c);

            let (g, b) = self.norm(l.norm3);
            let (h3, ln3) = layer_norm(&y, g, b);
            let (mut f, ffn) = self.ffn(&l.ffn, &h3);
            let drop3 = maybe_mask(&mut drop, f.data.len());
            hadamard(&mut f, drop3.as_ref());
            add_in_place(&mut y, &f);
            layers.push(DecLayerCache {
                ln1,
                h1,
                self_attn,
                drop1,
                ln2,
                h2,
                cross_attn,
                drop2,
                ln3,
                h3,
                ffn,
                drop3,
            });
        }
        let (g, b) = self.norm(self.idx.dec_norm);
        let (out, final_ln) = layer_norm(&y, g, b);
        let logits = linear(
            &out,
            self.slice(self.idx.out_w, self.cfg.d_model * NUM_CHAR_CLASSES),
            self.slice(self.idx.out_b, NUM_CHAR_CLASSES),
            NUM_CHAR_CLASSES,
        );
        (
            logits,
            DecoderCache {
                drop0,
                layers,
                final_ln,
                out,
            },
        )
    }

    fn attention_backward(
        &self,
        a: &AttnIdx,
        cache: &AttnCache,
        q_in: &Matrix,
        kv_in: &Matrix,
        dout: &Matrix,
        grads: &mut [f64],
    ) -> (Matrix, Matrix) {
        let d = self.cfg.d_model;
        let dk = self.cfg.head_dim();
        let (lq, lk) = (cache.q.rows, cache.k.rows);
        let scale = 1.0 / (dk as f64).sqrt();

        let (dwo, dbo) = pair_mut(grads, a.wo, d * d, a.bo, d);
        let dctx = linear_backward(&cache.ctx, self.slice(a.wo, d * d), dout, dwo, dbo);

        let mut dq = Matrix::zeros(lq, d);
        let mut dkm = Matrix::zeros(lk, d);
        let mut dv = Matrix::zeros(lk, d);
        let mut dp = Matrix::zeros(lq, lk);
        for (h, p) in cache.probs.iter().enumerate() {
            let off = h * dk;
            gemm(
                lq,
                dk,
                lk,
                View::cols(&dctx.data, d, off),
                View::cols(&cache.v.data, d, off).t(),
                &mut dp.data,
                lk,
                0,
                0.0,
            );
            gemm(
                lk,
                lq,
                dk,
                View::rm(&p.data, lk).t(),
                View::cols(&dctx.data, d, off),
                &mut dv.data,
                d,
                off,
                0.0,
            );
            for i in 0..lq {
                let prow = p.row(i);
                let drow = dp.row_mut(i);
                let dot: f64 = prow.iter().zip(drow.iter()).map(|(a, b)| a * b).sum();
                for (g, &pv) in drow.iter_mut().zip(prow) {
                    *g = pv * (*g - dot) * scale;
                }
            }
            gemm(
                lq,
                lk,
                dk,
                View::rm(&dp.data, lk),
                View::cols(&cache.k.data, d, off),
                &mut dq.data,
                d,
                off,
                0.0,
            );
            gemm(
                lk,
                lq,
                dk,
                View::rm(&dp.data, lk).t(),
                View::cols(&cache.q.data, d, off),
                &mut dkm.data,
                d,
                off,
                0.0,
            );
        }

        let (dw, db) = pair_mut(grads, a.wq, d * d, a.bq, d);
        let dq_in = linear_backward(q_in, self.slice(a.wq, d * d), &dq, dw, db);
        let (dw, db) = pair_mut(grads, a.wk, d * d, a.bk, d);
        let mut dkv_in = linear_backward(kv_in, self.slice(a.wk, d * d), &dkm, dw, db);
        let (dw, db) = pair_mut(grads, a.wv, d * d, a.bv, d);
        let dkv_v = linear_backward(kv_in, self.slice(a.wv, d * d), &dv, dw, db);
        add_in_place(&mut dkv_in, &dkv_v);
        (dq_in, dkv_in)
    }

    fn ffn_backward(&self, f: &FfnIdx, cache: &FfnCache, x: &Matrix, dout: &Matrix, grads: &mut [f64]) -> Matrix {
        let (d, ff) = (self.cfg.d_model, self.cfg.d_ff);
        let (dw2, db2) = pair_mut(grads, f.w2, ff * d, f.b2, d);
        let mut dact = linear_backward(&cache.act, self.slice(f.w2, ff * d), dout, dw2, db2);
        for (g, &pre) in dact.data.iter_mut().zip(&cache.pre.data) {
            *g *= gelu_grad(pre);
        }
        let (dw1, db1) = pair_mut(grads, f.w1, d * ff, f.b1, ff);
        linear_backward(x, self.slice(f.w1, d * ff), &dact, dw1, db1)
    }

    fn norm_backward(&self, n: NormIdx, cache: &LayerNormCache, dy: &Matrix, grads: &mut [f64]) -> Matrix {
        let d = self.cfg.d_model;
        let (dg, db) = pair_mut(grads, n.gain, d, n.bias, d);
        layer_norm_backward(cache, self.slice(n.gain, d), dy, dg, db)
    }

    fn embed_backward(&self, ids: &[u32], mut dx: Matrix, mask: Option<&Vec<f64>>, grads: &mut [f64]) {
        let d = self.cfg.d_model;
        let scale = (d as f64).sqrt();
        hadamard(&mut dx, mask);
        for (i, &id) in ids.iter().enumerate() {
            let off = self.idx.embedding + id as usize * d;
            for (g, v) in grads[off..off + d].iter_mut().zip(dx.row(i)) {
                *g += v * scale;
            }
        }
    }

    /// Backpropagates `dlogits` through the decoder; returns d(memory).
    fn decoder_backward(
        &self,
        cache: &DecoderCache,
        mem: &Matrix,
        prefix: &[u32],
        dlogits: &Matrix,
        grads: &mut [f64],
    ) -> Matrix {
        let d = self.cfg.d_model;
        let (dw, db) = pair_mut(grads, self.idx.out_w, d * NUM_CHAR_CLASSES, self.idx.out_b, NUM_CHAR_CLASSES);
        let dout = linear_backward(
            &cache.out,
            self.slice(self.idx.out_w, d * NUM_CHAR_CLASSES),
            dlogits,
            dw,
            db,
        );
        let mut dy = self.norm_backward(self.idx.dec_norm, &cache.final_ln, &dout, grads);
        let mut dmem = Matrix::zeros(mem.rows, d);
        for (l, c) in self.idx.dec.iter().zip(&cache.layers).rev() {
            let mut df = dy.clone();
            hadamard(&mut df, c.drop3.as_ref());
            let dh3 = self.ffn_backward(&l.ffn, &c.ffn, &c.h3, &df, grads);
            add_in_place(&mut dy, &self.norm_backward(l.norm3, &c.ln3, &dh3, grads));

            let mut dc = dy.clone();
            hadamard(&mut dc, c.drop2.as_ref());
            let (dh2, dm) = self.attention_backward(&l.cross_attn, &c.cross_attn, &c.h2, mem, &dc, grads);
            add_in_place(&mut dmem, &dm);
            add_in_place(&mut dy, &self.norm_backward(l.norm2, &c.ln2, &dh2, grads));

            let mut da = dy.clone();
            hadamard(&mut da, c.drop1.as_ref());
            let (mut dh1, dkv) = self.attention_backward(&l.self_attn, &c.self_attn, &c.h1, &c.h1, &da, grads);
            add_in_place(&mut dh1, &dkv);
            add_in_place(&mut dy, &self.norm_backward(l.norm1, &c.ln1, &dh1, grads));
        }
        self.embed_backward(prefix, dy, cache.drop0.as_ref(), grads);
        dmem
    }

    fn encoder_backward(&self, cache: &EncoderCache, src: &[u32], dmem: &Matrix, grads: &mut [f64]) {
        let mut dx = self.norm_backward(self.idx.enc_norm, &cache.final_ln, dmem, grads);
        for (l, c) in self.idx.enc.iter().zip(&cache.layers).rev() {
            let mut df = dx.clone();
            hadamard(&mut df, c.drop2.as_ref());
            let dh2 = self.ffn_backward(&l.ffn, &c.ffn, &c.h2, &df, grads);
            add_in_place(&mut dx, &self.norm_backward(l.norm2, &c.ln2, &dh2, grads));

            let mut da = dx.clone();
            hadamard(&mut da, c.drop1.as_ref());
            let (mut dh1, dkv) = self.attention_backward(&l.attn, &c.attn, &c.h1, &c.h1, &da, grads);
            add_in_place(&mut dh1, &dkv);
            add_in_place(&mut dx, &self.norm_backward(l.norm1, &c.ln1, &dh1, grads));
        }
        self.embed_backward(src, dx, cache.drop0.as_ref(), grads);
    }
}

/// Runs the encoder: embedding plus positions, PreNorm layers, final norm.
pub fn encode(p: &Parameters, src: &TokenSequence) -> Result<Matrix> {
    p.check_source(src)?;
    Ok(p.encoder_forward(&src.ids, None).0)
}

/// Encoder output plus every self-attention distribution, ordered by
/// layer then head; each matrix is `[len x len]`.
pub fn encode_with_attention(p: &Parameters, src: &TokenSequence) -> Result<(Matrix, Vec<Matrix>)> {
    p.check_source(src)?;
    let (mem, cache) = p.encoder_forward(&src.ids, None);
    let probs = cache
        .layers
        .into_iter()
        .flat_map(|l| l.attn.probs)
        .collect();
    Ok((mem, probs))
}

/// Character logits `[prefix_len x NUM_CHAR_CLASSES]` for a target prefix
/// starting with BOS.
pub fn decoder_forward(p: &Parameters, memory: &Matrix, prefix: &TokenSequence) -> Result<Matrix> {
    p.check_prefix(&prefix.ids)?;
    check_memory(p, memory)?;
    Ok(p.decoder_forward_cached(memory, &prefix.ids, None).0)
}

/// Decoder logits plus the self- and cross-attention distributions of every
/// layer and head, in that order per layer.
pub fn decoder_forward_with_attention(
    p: &Parameters,
    memory: &Matrix,
    prefix: &TokenSequence,
) -> Result<(Matrix, Vec<Matrix>)> {
    p.check_prefix(&prefix.ids)?;
    check_memory(p, memory)?;
    let (logits, cache) = p.decoder_forward_cached(memory, &prefix.ids, None);
    let probs = cache
        .layers
        .into_iter()
        .flat_map(|l| l.self_attn.probs.into_iter().chain(l.cross_attn.probs))
        .collect();
    Ok((logits, probs))
}

fn check_memory(p: &Parameters, memory: &Matrix) -> Result<()> {
    if memory.cols != p.cfg.d_model || memory.rows == 0 {
        return Err(Error::Contract(format!(
            "memory shape {:?} incompatible with d_model {}",
            memory.shape(),
            p.cfg.d_model
        )));
    }
    Ok(())
}

fn target_classes(p: &Parameters, tgt: &TokenSequence) -> Result<Vec<usize>> {
    if tgt.len() < 2 {
        return Err(Error::Contract("target needs at least BOS and EOS".into()));
    }
    p.check_prefix(&tgt.ids[..tgt.len() - 1])?;
    tgt.ids[1..]
        .iter()
        .map(|&id| id_to_class(id).ok_or(Error::InvalidTokenId(id)))
        .collect()
}

/// Summed next-character NLL of one pair, optionally with backprop.
fn example_nll(
    p: &Parameters,
    pair: &TrainPair,
    rng: Option<&mut ChaCha8Rng>,
    grads: Option<(&mut [f64], f64)>,
) -> Result<(f64, usize)> {
    p.check_source(&pair.src)?;
    let classes = target_classes(p, &pair.tgt)?;
    let prefix = &pair.tgt.ids[..pair.tgt.len() - 1];
    let rate = p.cfg.dropout;

    let (mem, enc_cache, logits, dec_cache) = match rng {
        Some(rng) => {
            let (mem, ec) = p.encoder_forward(&pair.src.ids, Some(Dropout { rng: &mut *rng, rate }));
            let (lg, dc) = p.decoder_forward_cached(&mem, prefix, Some(Dropout { rng, rate }));
            (mem, ec, lg, dc)
        }
        None => {
            let (mem, ec) = p.encoder_forward(&pair.src.ids, None);
            let (lg, dc) = p.decoder_forward_cached(&mem, prefix, None);
            (mem, ec, lg, dc)
        }
    };

    let mut nll = 0.0;
    let mut dlogits = Matrix::zeros(logits.rows, logits.cols);
    for (t, &class) in classes.iter().enumerate() {
        let ls = log_softmax(logits.row(t));
        nll -= ls[class];
        for (g, l) in dlogits.row_mut(t).iter_mut().zip(&ls) {
            *g = l.exp();
        }
        dlogits.row_mut(t)[class] -= 1.0;
    }

    if let Some((grads, scale)) = grads {
        for g in dlogits.data.iter_mut() {
            *g *= scale;
        }
        let dmem = p.decoder_backward(&dec_cache, &mem, prefix, &dlogits, grads);
        p.encoder_backward(&enc_cache, &pair.src.ids, &dmem, grads);
    }
    Ok((nll, classes.len()))
}

/// Mean negative log-likelihood over all target positions of the batch,
/// computed without dropout.
pub fn loss(p: &Parameters, batch: &[TrainPair]) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::Contract("empty batch".into()));
    }
    let mut total = 0.0;
    let mut count = 0;
    for pair in batch {
        let (nll, n) = example_nll(p, pair, None, None)?;
        total += nll;
        count += n;
    }
    Ok(total / count as f64)
}

/// Exact gradient of [`loss`] with respect to every parameter.
pub fn gradients(p: &Parameters, batch: &[TrainPair]) -> Result<(f64, Gradients)> {
    batch_gradients(p, batch, None)
}

/// Loss and gradient of one batch. Examples are processed in batch order
/// and accumulated into one buffer, so the summation order is fixed.
pub(crate) fn batch_gradients(
    p: &Parameters,
    batch: &[TrainPair],
    mut rng: Option<&mut ChaCha8Rng>,
) -> Result<(f64, Gradients)> {
    if batch.is_empty() {
        return Err(Error::Contract("empty batch".into()));
    }
    let positions: usize = batch.iter().map(|b| b.tgt.len().saturating_sub(1)).sum();
    let scale = 1.0 / positions as f64;
    let mut grads = p.zeros_like();
    let mut total = 0.0;
    for pair in batch {
        let (nll, _) = example_nll(p, pair, rng.as_deref_mut(), Some((&mut grads.data, scale)))?;
        total += nll;
    }
    Ok((total * scale, grads))
}
