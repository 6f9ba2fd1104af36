//! On-disk model files.
//!
//! A file is one JSON manifest line followed by raw little-endian floats.
//! The manifest records the model config, the BPE merge list, the floating
//! type and, per stored array, its name, shape and element offset into the
//! payload. Inference checkpoints store `f32`; resume files store `f64`
//! parameters together with the Adam moments and the training bookkeeping so
//! a resumed run continues exactly where it left off.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::adam::AdamState;
use super::params::{ModelConfig, Parameters};
use super::train::{EpochStats, Trainer};
use super::TrainConfig;
use crate::error::{Error, Result};
use crate::tokenizer::BpeModel;

const FORMAT: &str = "spellcap-model";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Entry {
    name: String,
    shape: Vec<usize>,
    offset: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TrainState {
    train_config: TrainConfig,
    adam_t: u64,
    history: Vec<EpochStats>,
    best_dev: Option<f64>,
    since_best: usize,
    stopped: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Manifest {
    format: String,
    version: u32,
    dtype: String,
    config: ModelConfig,
    merges: Vec<(String, String)>,
    tensors: Vec<Entry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    train_state: Option<TrainState>,
}

#[derive(Clone, Copy, PartialEq)]
enum Dtype {
    F32,
    F64,
}

impl Dtype {
    fn name(self) -> &'static str {
        match self {
            Dtype::F32 => "f32",
            Dtype::F64 => "f64",
        }
    }

    fn width(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }
}

/// A trained model with the tokenizer it was trained with.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub params: Parameters,
    pub bpe: BpeModel,
}

fn write_file(
    path: &Path,
    dtype: Dtype,
    params: &Parameters,
    bpe: &BpeModel,
    extra: &[(&str, &[f64])],
    train_state: Option<TrainState>,
) -> Result<()> {
    let mut tensors = Vec::new();
    let mut payload = Vec::new();
    let mut offset = 0;
    let mut push = |name: &str, shape: Vec<usize>, values: &[f64]| {
        tensors.push(Entry {
            name: name.to_string(),
            shape,
            offset,
        });
        offset += values.len();
        for &v in values {
            match dtype {
                Dtype::F32 => payload.extend_from_slice(&(v as f32).to_le_bytes()),
                Dtype::F64 => payload.extend_from_slice(&v.to_le_bytes()),
            }
        }
    };
    for s in params.specs() {
        push(&s.path, s.shape.clone(), &params.as_slice()[s.range()]);
    }
    for (name, values) in extra {
        push(name, vec![values.len()], values);
    }
    let manifest = Manifest {
        format: FORMAT.into(),
        version: VERSION,
        dtype: dtype.name().into(),
        config: params.config().clone(),
        merges: bpe.merges().to_vec(),
        tensors,
        train_state,
    };
    let mut bytes = serde_json::to_vec(&manifest).expect("manifest serializes");
    bytes.push(b'\n');
    bytes.extend_from_slice(&payload);
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

struct Loaded {
    manifest: Manifest,
    values: Vec<f64>,
}

impl Loaded {
    fn entry(&self, name: &str) -> Option<&Entry> {
        self.manifest.tensors.iter().find(|e| e.name == name)
    }

    fn array(&self, name: &str, len: usize) -> Result<&[f64]> {
        let e = self
            .entry(name)
            .ok_or_else(|| Error::Contract(format!("missing array `{name}`")))?;
        if e.shape.iter().product::<usize>() != len {
            return Err(Error::Contract(format!("array `{name}` has shape {:?}, expected {len} values", e.shape)));
        }
        Ok(&self.values[e.offset..e.offset + len])
    }
}

fn read_file(path: &Path) -> Result<Loaded> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::parse(1, "missing manifest line"))?;
    let manifest: Manifest =
        serde_json::from_slice(&bytes[..nl]).map_err(|e| Error::parse(1, format!("bad manifest: {e}")))?;
    if manifest.format != FORMAT || manifest.version != VERSION {
        return Err(Error::parse(1, format!("unsupported format {} v{}", manifest.format, manifest.version)));
    }
    let dtype = match manifest.dtype.as_str() {
        "f32" => Dtype::F32,
        "f64" => Dtype::F64,
        other => return Err(Error::parse(1, format!("unsupported dtype {other}"))),
    };
    let payload = &bytes[nl + 1..];
    if payload.len() % dtype.width() != 0 {
        return Err(Error::Contract("payload is not a whole number of values".into()));
    }
    let values: Vec<f64> = match dtype {
        Dtype::F32 => payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect(),
        Dtype::F64 => payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect(),
    };
    for e in &manifest.tensors {
        if e.offset + e.shape.iter().product::<usize>() > values.len() {
            return Err(Error::Contract(format!("array `{}` runs past the payload", e.name)));
        }
    }
    Ok(Loaded { manifest, values })
}

/// Builds parameters from the manifest's config, requiring every tensor to
/// be present with exactly the layout's shape.
fn restore(loaded: &Loaded) -> Result<(Parameters, BpeModel)> {
    let mut params = Parameters::zeros(&loaded.manifest.config)?;
    let bpe = BpeModel::from_merges(loaded.manifest.merges.clone())?;
    if bpe.vocab_size() > params.config().vocab_size {
        return Err(Error::Contract(format!(
            "tokenizer has {} tokens but the model embeds {}",
            bpe.vocab_size(),
            params.config().vocab_size
        )));
    }
    let specs = params.specs().to_vec();
    for s in &specs {
        let e = loaded
            .entry(&s.path)
            .ok_or_else(|| Error::Contract(format!("missing tensor `{}`", s.path)))?;
        if e.shape != s.shape {
            return Err(Error::Contract(format!(
                "shape mismatch for `{}`: file has {:?}, model expects {:?}",
                s.path, e.shape, s.shape
            )));
        }
        params.as_mut_slice()[s.range()].copy_from_slice(&loaded.values[e.offset..e.offset + s.len()]);
    }
    Ok((params, bpe))
}

/// Writes parameters (as `f32`) and tokenizer to `path`.
pub fn save_checkpoint(path: &Path, params: &Parameters, bpe: &BpeModel) -> Result<()> {
    write_file(path, Dtype::F32, params, bpe, &[], None)
}

/// Reads a checkpoint or resume file. Shapes that disagree with the stored
/// config are rejected.
pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let loaded = read_file(path)?;
    let (params, bpe) = restore(&loaded)?;
    Ok(Checkpoint { params, bpe })
}

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        save_checkpoint(path, &self.params, &self.bpe)
    }

    pub fn load(path: &Path) -> Result<Self> {
        load_checkpoint(path)
    }
}

impl Trainer {
    /// Writes the full training state at full precision.
    pub fn save_state(&self, path: &Path, bpe: &BpeModel) -> Result<()> {
        let mut extra: Vec<(&str, &[f64])> = vec![("adam.m", &self.adam.m), ("adam.v", &self.adam.v)];
        if let Some((_, best)) = &self.best {
            extra.push(("best", best.as_slice()));
        }
        let state = TrainState {
            train_config: self.cfg.clone(),
            adam_t: self.adam.t,
            history: self.history.clone(),
            best_dev: self.best.as_ref().map(|b| b.0),
            since_best: self.since_best,
            stopped: self.stopped,
        };
        write_file(path, Dtype::F64, &self.params, bpe, &extra, Some(state))
    }

    /// Restores a trainer written by [`Trainer::save_state`].
    pub fn load_state(path: &Path) -> Result<(Self, BpeModel)> {
        let loaded = read_file(path)?;
        let state = loaded
            .manifest
            .train_state
            .clone()
            .ok_or_else(|| Error::Contract(format!("{} holds no training state", path.display())))?;
        let (params, bpe) = restore(&loaded)?;
        let n = params.len();
        let adam = AdamState {
            m: loaded.array("adam.m", n)?.to_vec(),
            v: loaded.array("adam.v", n)?.to_vec(),
            t: state.adam_t,
        };
        let best = match state.best_dev {
            Some(dev) => {
                let mut b = params.clone();
                b.as_mut_slice().copy_from_slice(loaded.array("best", n)?);
                Some((dev, b))
            }
            None => None,
        };
        state.train_config.validate()?;
        Ok((
            Self {
                params,
                adam,
                cfg: state.train_config,
                history: state.history,
                best,
                since_best: state.since_best,
                stopped: state.stopped,
            },
            bpe,
        ))
    }
}
