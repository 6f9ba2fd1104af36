//! Python bindings. Hypotheses cross the boundary as `"word/conf ..."`
//! strings in rank order, the same token format the dataset files use.

use std::path::PathBuf;

use pyo3::exceptions::{PyArithmeticError, PyIOError, PyValueError};
use pyo3::prelude::*;

use spellcap::baseline;
use spellcap::datagen::{self, Lexicon, NoiseConfig};
use spellcap::evalharness::{self, ScoredResult};
use spellcap::seq2seq::{self, Checkpoint, ConfidenceMode, ModelConfig, TrainConfig};
use spellcap::tokenizer::{self, BpeModel, TokenSequence};
use spellcap::{AsrHypothesis, LabeledSample, Prediction, Source};

fn py_err(e: spellcap::Error) -> PyErr {
    match e.exit_code() {
        3 => PyIOError::new_err(e.to_string()),
        4 => PyArithmeticError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn parse_nbest(nbest: &[String]) -> PyResult<Vec<AsrHypothesis>> {
    nbest
        .iter()
        .enumerate()
        .map(|(i, s)| AsrHypothesis::parse_tokens(i + 1, s).map_err(PyValueError::new_err))
        .collect()
}

fn hyp_text(h: &AsrHypothesis) -> String {
    h.tokens.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(" ")
}

fn samples_from_py(samples: Vec<(String, Vec<String>)>) -> PyResult<Vec<LabeledSample>> {
    samples
        .into_iter()
        .map(|(gold, nbest)| Ok(LabeledSample { nbest: parse_nbest(&nbest)?, gold }))
        .collect()
}

type PyPrediction = (String, f64, &'static str);

fn pred_to_py(p: Prediction) -> PyPrediction {
    (p.name, p.confidence, p.source.as_str())
}

/// A byte-pair tokenizer over lowercase ASR text.
#[pyclass(name = "Bpe", module = "spellcap_py", from_py_object)]
#[derive(Clone)]
struct PyBpe {
    inner: BpeModel,
}

#[pymethods]
impl PyBpe {
    #[staticmethod]
    #[pyo3(signature = (corpus, n_merges = tokenizer::DEFAULT_MERGES))]
    fn learn(corpus: Vec<String>, n_merges: usize) -> PyResult<Self> {
        Ok(Self {
            inner: tokenizer::learn_bpe(&corpus, n_merges).map_err(py_err)?,
        })
    }

    #[staticmethod]
    fn load(vocab_path: PathBuf, merges_path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: BpeModel::load(&vocab_path, &merges_path).map_err(py_err)?,
        })
    }

    fn save(&self, vocab_path: PathBuf, merges_path: PathBuf) -> PyResult<()> {
        self.inner.save(&vocab_path, &merges_path).map_err(py_err)
    }

    fn encode(&self, text: &str) -> Vec<u32> {
        self.inner.encode(text).ids
    }

    fn decode(&self, ids: Vec<u32>) -> PyResult<String> {
        self.inner.decode(&TokenSequence::source(ids)).map_err(py_err)
    }

    #[getter]
    fn vocab_size(&self) -> usize {
        self.inner.vocab_size()
    }

    #[getter]
    fn merges(&self) -> Vec<(String, String)> {
        self.inner.merges().to_vec()
    }

    fn __repr__(&self) -> String {
        format!("Bpe(vocab_size={})", self.inner.vocab_size())
    }
}

/// A transformer transducer with its tokenizer.
#[pyclass(name = "Model", module = "spellcap_py")]
struct PyModel {
    inner: Checkpoint,
}

#[pymethods]
impl PyModel {
    #[new]
    #[pyo3(signature = (bpe, seed = 0, n_layers = None, n_heads = None, d_model = None, d_ff = None, dropout = None))]
    fn new(
        bpe: PyBpe,
        seed: u64,
        n_layers: Option<usize>,
        n_heads: Option<usize>,
        d_model: Option<usize>,
        d_ff: Option<usize>,
        dropout: Option<f64>,
    ) -> PyResult<Self> {
        let mut cfg = ModelConfig::with_vocab(bpe.inner.vocab_size());
        cfg.n_layers = n_layers.unwrap_or(cfg.n_layers);
        cfg.n_heads = n_heads.unwrap_or(cfg.n_heads);
        cfg.d_model = d_model.unwrap_or(cfg.d_model);
        cfg.d_ff = d_ff.unwrap_or(cfg.d_ff);
        cfg.dropout = dropout.unwrap_or(cfg.dropout);
        let params = seq2seq::init_model(&cfg, seed).map_err(py_err)?;
        Ok(Self {
            inner: Checkpoint { params, bpe: bpe.inner },
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: Checkpoint::load(&path).map_err(py_err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(py_err)
    }

    #[getter]
    fn bpe(&self) -> PyBpe {
        PyBpe {
            inner: self.inner.bpe.clone(),
        }
    }

    #[getter]
    fn n_params(&self) -> usize {
        self.inner.params.len()
    }

    /// Trains in place, keeping the best-dev parameters. Samples are
    /// `(gold, [hypothesis, ...])`. Returns `(epoch, train_loss, dev_loss)`.
    #[pyo3(signature = (train, dev, learning_rate = None, epochs = None, batch_size = None, patience = None, seed = None))]
    #[allow(clippy::too_many_arguments)]
    fn train(
        &mut self,
        py: Python<'_>,
        train: Vec<(String, Vec<String>)>,
        dev: Vec<(String, Vec<String>)>,
        learning_rate: Option<f64>,
        epochs: Option<usize>,
        batch_size: Option<usize>,
        patience: Option<usize>,
        seed: Option<u64>,
    ) -> PyResult<Vec<(usize, f64, Option<f64>)>> {
        let d = TrainConfig::default();
        let tc = TrainConfig {
            learning_rate: learning_rate.unwrap_or(d.learning_rate),
            epochs: epochs.unwrap_or(d.epochs),
            batch_size: batch_size.unwrap_or(d.batch_size),
            patience: patience.unwrap_or(d.patience),
            seed: seed.unwrap_or(d.seed),
            ..d
        };
        let mc = self.inner.params.config().clone();
        let tr = seq2seq::prepare_pairs(&self.inner.bpe, &samples_from_py(train)?, mc.max_src_len, mc.max_tgt_len);
        let dv = seq2seq::prepare_pairs(&self.inner.bpe, &samples_from_py(dev)?, mc.max_src_len, mc.max_tgt_len);
        let start = self.inner.params.clone();
        let (params, history) = py
            .detach(|| seq2seq::train(start, &tr, &dv, &tc))
            .map_err(py_err)?;
        self.inner.params = params;
        Ok(history
            .into_iter()
            .map(|s| (s.epoch, s.train_loss, s.dev_loss))
            .collect())
    }

    /// Greedy-decodes a name from the top hypothesis text.
    #[pyo3(signature = (text, per_char = false))]
    fn predict(&self, text: &str, per_char: bool) -> PyResult<PyPrediction> {
        let mode = if per_char { ConfidenceMode::PerChar } else { ConfidenceMode::Total };
        seq2seq::predict_name_with(&self.inner.params, &self.inner.bpe, text, mode)
            .map(pred_to_py)
            .map_err(py_err)
    }
}

#[pyfunction]
#[pyo3(signature = (nbest, editdist = false))]
fn baseline_predict(nbest: Vec<String>, editdist: bool) -> PyResult<PyPrediction> {
    let hyps = parse_nbest(&nbest)?;
    let p = if editdist {
        baseline::baseline_predict_editdist(&hyps)
    } else {
        baseline::baseline_predict(&hyps)
    };
    Ok(pred_to_py(p))
}

#[pyfunction]
fn edit_distance(a: &str, b: &str) -> usize {
    baseline::edit_distance(a, b)
}

/// Confidence of `name` against a hypothesis by normalized edit distance.
#[pyfunction]
fn edit_distance_confidence(name: &str, hypothesis: &str) -> PyResult<f64> {
    let h = AsrHypothesis::parse_tokens(1, hypothesis).map_err(PyValueError::new_err)?;
    Ok(baseline::edit_distance_confidence(&Prediction::new(name, 0.0, Source::BaselineEditDist), &h))
}

#[pyfunction]
fn word_error_rate(hyp: Vec<String>, reference: Vec<String>) -> PyResult<f64> {
    evalharness::word_error_rate(&hyp, &reference).map_err(py_err)
}

fn scored(results: Vec<(String, f64, String)>) -> Vec<ScoredResult> {
    results
        .into_iter()
        .map(|(name, conf, gold)| ScoredResult::new(Prediction::new(name, conf, Source::Seq2Seq), gold))
        .collect()
}

/// Fraction of `(prediction, confidence, gold)` triples that miss.
#[pyfunction]
fn exact_match_error(results: Vec<(String, f64, String)>) -> PyResult<f64> {
    evalharness::exact_match_error(&scored(results)).map_err(py_err)
}

/// `(rejection_rate, error_rate, threshold)` points.
#[pyfunction]
#[pyo3(signature = (results, n_points = evalharness::DEFAULT_ER_POINTS))]
fn er_curve(results: Vec<(String, f64, String)>, n_points: usize) -> PyResult<Vec<(f64, f64, f64)>> {
    Ok(evalharness::er_curve(&scored(results), n_points)
        .map_err(py_err)?
        .into_iter()
        .map(|p| (p.rejection_rate, p.error_rate, p.threshold))
        .collect())
}

/// `n` samples as `(gold, [hypothesis, ...])`. `noise` is `key = value`
/// text; `lexicon` is one name per line. Both default to the built-ins.
#[pyfunction]
#[pyo3(signature = (n, seed = 0, noise = None, lexicon = None))]
fn generate_dataset(n: usize, seed: u64, noise: Option<&str>, lexicon: Option<&str>) -> PyResult<Vec<(String, Vec<String>)>> {
    let cfg = match noise {
        Some(text) => NoiseConfig::from_kv_text(text).map_err(py_err)?,
        None => NoiseConfig::default(),
    };
    let lex = match lexicon {
        Some(text) => Lexicon::parse(text).map_err(py_err)?,
        None => Lexicon::seed(),
    };
    Ok(datagen::generate_dataset(&lex, n, &cfg, seed)
        .map_err(py_err)?
        .into_iter()
        .map(|s| (s.nbest.iter().map(hyp_text).collect(), s.gold))
        .map(|(nbest, gold)| (gold, nbest))
        .collect())
}

#[pymodule]
fn spellcap_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBpe>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(baseline_predict, m)?)?;
    m.add_function(wrap_pyfunction!(edit_distance, m)?)?;
    m.add_function(wrap_pyfunction!(edit_distance_confidence, m)?)?;
    m.add_function(wrap_pyfunction!(word_error_rate, m)?)?;
    m.add_function(wrap_pyfunction!(exact_match_error, m)?)?;
    m.add_function(wrap_pyfunction!(er_curve, m)?)?;
    m.add_function(wrap_pyfunction!(generate_dataset, m)?)?;
    Ok(())
}
