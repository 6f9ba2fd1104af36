use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tokenizer::{BOUNDARY_ID, NUM_CHAR_CLASSES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub n_layers: usize,
    pub n_heads: usize,
    pub d_model: usize,
    pub d_ff: usize,
    pub dropout: f64,
    pub max_src_len: usize,
    pub max_tgt_len: usize,
    /// Rows of the shared embedding table.
    pub vocab_size: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            n_layers: 2,
            n_heads: 2,
            d_model: 64,
            d_ff: 256,
            dropout: 0.1,
            max_src_len: 256,
            max_tgt_len: 32,
            vocab_size: BOUNDARY_ID as usize + 1,
        }
    }
}

impl ModelConfig {
    pub fn with_vocab(vocab_size: usize) -> Self {
        Self {
            vocab_size,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("n_layers", self.n_layers),
            ("n_heads", self.n_heads),
            ("d_model", self.d_model),
            ("d_ff", self.d_ff),
            ("max_src_len", self.max_src_len),
            ("max_tgt_len", self.max_tgt_len),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be >= 1")));
        }
        if !self.d_model.is_multiple_of(self.n_heads) {
            return Err(Error::Config(format!(
                "d_model {} is not divisible by n_heads {}",
                self.d_model, self.n_heads
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout {} outside [0,1)", self.dropout)));
        }
        if self.vocab_size <= BOUNDARY_ID as usize {
            return Err(Error::Config(format!(
                "vocab_size {} smaller than the base alphabet",
                self.vocab_size
            )));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.n_heads
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorSpec {
    pub path: String,
    pub shape: Vec<usize>,
    pub offset: usize,
}

impl TensorSpec {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct NormIdx {
    pub gain: usize,
    pub bias: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct AttnIdx {
    pub wq: usize,
    pub bq: usize,
    pub wk: usize,
    pub bk: usize,
    pub wv: usize,
    pub bv: usize,
    pub wo: usize,
    pub bo: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct FfnIdx {
    pub w1: usize,
    pub b1: usize,
    pub w2: usize,
    pub b2: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct EncLayerIdx {
    pub norm1: NormIdx,
    pub attn: AttnIdx,
    pub norm2: NormIdx,
    pub ffn: FfnIdx,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct DecLayerIdx {
    pub norm1: NormIdx,
    pub self_attn: AttnIdx,
    pub norm2: NormIdx,
    pub cross_attn: AttnIdx,
    pub norm3: NormIdx,
    pub ffn: FfnIdx,
}

/// Offsets of every tensor inside the flat parameter buffer.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Index {
    pub embedding: usize,
    pub enc: Vec<EncLayerIdx>,
    pub enc_norm: NormIdx,
    pub dec: Vec<DecLayerIdx>,
    pub dec_norm: NormIdx,
    pub out_w: usize,
    pub out_b: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Init {
    Xavier,
    Zero,
    One,
}

struct Builder {
    specs: Vec<TensorSpec>,
    inits: Vec<Init>,
    total: usize,
}

impl Builder {
    fn push(&mut self, path: String, shape: &[usize], init: Init) -> usize {
        let offset = self.total;
        let spec = TensorSpec {
            path,
            shape: shape.to_vec(),
            offset,
        };
        self.total += spec.len();
        self.specs.push(spec);
        self.inits.push(init);
        offset
    }

    fn norm(&mut self, prefix: &str, d: usize) -> NormIdx {
        NormIdx {
            gain: self.push(format!("{prefix}.gain"), &[d], Init::One),
            bias: self.push(format!("{prefix}.bias"), &[d], Init::Zero),
        }
    }

    fn attn(&mut self, prefix: &str, d: usize) -> AttnIdx {
        let mut proj = |name: &str| {
            (
                self.push(format!("{prefix}.{name}.weight"), &[d, d], Init::Xavier),
                self.push(format!("{prefix}.{name}.bias"), &[d], Init::Zero),
            )
        };
        let (wq, bq) = proj("q");
        let (wk, bk) = proj("k");
        let (wv, bv) = proj("v");
        let (wo, bo) = proj("o");
        AttnIdx {
            wq,
            bq,
            wk,
            bk,
            wv,
            bv,
            wo,
            bo,
        }
    }

    fn ffn(&mut self, prefix: &str, d: usize, ff: usize) -> FfnIdx {
        FfnIdx {
            w1: self.push(format!("{prefix}.w1"), &[d, ff], Init::Xavier),
            b1: self.push(format!("{prefix}.b1"), &[ff], Init::Zero),
            w2: self.push(format!("{prefix}.w2"), &[ff, d], Init::Xavier),
            b2: self.push(format!("{prefix}.b2"), &[d], Init::Zero),
        }
    }
}

fn build_layout(cfg: &ModelConfig) -> (Vec<TensorSpec>, Vec<Init>, Index) {
    let (d, ff) = (cfg.d_model, cfg.d_ff);
    let mut b = Builder {
        specs: Vec::new(),
        inits: Vec::new(),
        total: 0,
    };
    let embedding = b.push("embedding.weight".into(), &[cfg.vocab_size, d], Init::Xavier);
    let enc = (0..cfg.n_layers)
        .map(|l| {
            let p = format!("encoder.layers.{l}");
            EncLayerIdx {
                norm1: b.norm(&format!("{p}.norm1"), d),
                attn: b.attn(&format!("{p}.self_attn"), d),
                norm2: b.norm(&format!("{p}.norm2"), d),
                ffn: b.ffn(&format!("{p}.ffn"), d, ff),
            }
        })
        .collect();
    let enc_norm = b.norm("encoder.norm", d);
    let dec = (0..cfg.n_layers)
        .map(|l| {
            let p = format!("decoder.layers.{l}");
            DecLayerIdx {
                norm1: b.norm(&format!("{p}.norm1"), d),
                self_attn: b.attn(&format!("{p}.self_attn"), d),
                norm2: b.norm(&format!("{p}.norm2"), d),
                cross_attn: b.attn(&format!("{p}.cross_attn"), d),
                norm3: b.norm(&format!("{p}.norm3"), d),
                ffn: b.ffn(&format!("{p}.ffn"), d, ff),
            }
        })
        .collect();
    let dec_norm = b.norm("decoder.norm", d);
    let out_w = b.push("output.weight".into(), &[d, NUM_CHAR_CLASSES], Init::Xavier);
    let out_b = b.push("output.bias".into(), &[NUM_CHAR_CLASSES], Init::Zero);
    let index = Index {
        embedding,
        enc,
        enc_norm,
        dec,
        dec_norm,
        out_w,
        out_b,
    };
    (b.specs, b.inits, index)
}

/// All trainable tensors of the model in one flat buffer, each addressable
/// by a stable path such as `decoder.layers.1.cross_attn.q.weight`.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    pub(crate) cfg: ModelConfig,
    pub(crate) specs: Vec<TensorSpec>,
    pub(crate) idx: Index,
    pub(crate) data: Vec<f64>,
}

impl Parameters {
    /// Parameters of the right shape, all zero.
    pub fn zeros(cfg: &ModelConfig) -> Result<Self> {
        cfg.validate()?;
        let (specs, _, idx) = build_layout(cfg);
        let total = specs.last().map_or(0, |s| s.offset + s.len());
        Ok(Self {
            cfg: cfg.clone(),
            specs,
            idx,
            data: vec![0.0; total],
        })
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            data: vec![0.0; self.data.len()],
            ..self.clone()
        }
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    pub fn specs(&self) -> &[TensorSpec] {
        &self.specs
    }

    pub fn spec(&self, path: &str) -> Option<&TensorSpec> {
        self.specs.iter().find(|s| s.path == path)
    }

    pub fn tensor(&self, path: &str) -> Option<&[f64]> {
        self.spec(path).map(|s| &self.data[s.range()])
    }

    pub fn tensor_mut(&mut self, path: &str) -> Option<&mut [f64]> {
        let range = self.spec(path)?.range();
        Some(&mut self.data[range])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Copy with every value rounded through `f32`, as stored in checkpoints.
    pub fn rounded_f32(&self) -> Self {
        Self {
            data: self.data.iter().map(|&v| v as f32 as f64).collect(),
            ..self.clone()
        }
    }

    pub(crate) fn slice(&self, offset: usize, len: usize) -> &[f64] {
        &self.data[offset..offset + len]
    }
}

/// Gradient buffer laid out exactly like [`Parameters`].
pub type Gradients = Parameters;

/// Xavier-uniform weights, zero biases, unit layer-norm gains.
pub fn init_model(cfg: &ModelConfig, seed: u64) -> Result<Parameters> {
    cfg.validate()?;
    let (specs, inits, _) = build_layout(cfg);
    let mut p = Parameters::zeros(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (spec, init) in specs.iter().zip(inits) {
        let out = &mut p.data[spec.range()];
        match init {
            Init::Zero => out.fill(0.0),
            Init::One => out.fill(1.0),
            Init::Xavier => {
                let (fan_in, fan_out) = (spec.shape[0], spec.shape[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                for v in out.iter_mut() {
                    *v = rng.gen_range(-limit..limit);
                }
            }
        }
    }
    Ok(p)
}
