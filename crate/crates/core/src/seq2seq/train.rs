use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamState};
use super::model::{batch_gradients, loss, TrainPair};
use super::params::Parameters;
use super::TrainConfig;
use crate::error::{Error, Result};
use crate::hypothesis::LabeledSample;
use crate::tokenizer::{char_encode, BpeModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_loss: Option<f64>,
}

/// Turns labeled samples into training pairs from their 1-best text.
/// Samples with an empty source or a name that does not fit the target
/// limit are skipped.
pub fn prepare_pairs(bpe: &BpeModel, samples: &[LabeledSample], max_src_len: usize, max_tgt_len: usize) -> Vec<TrainPair> {
    samples
        .iter()
        .filter_map(|s| {
            let mut src = bpe.encode(&s.best().text());
            src.ids.truncate(max_src_len);
            let tgt = char_encode(&s.gold).ok()?;
            (!src.is_empty() && tgt.len() <= max_tgt_len + 1).then_some(TrainPair { src, tgt })
        })
        .collect()
}

/// Mini-batch Adam training with dev-loss early stopping. Holds everything
/// needed to continue a run exactly where it stopped.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub params: Parameters,
    pub adam: AdamState,
    pub cfg: TrainConfig,
    pub history: Vec<EpochStats>,
    pub best: Option<(f64, Parameters)>,
    pub since_best: usize,
    pub stopped: bool,
}

impl Trainer {
    pub fn new(params: Parameters, cfg: TrainConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            adam: AdamState::new(&params),
            params,
            cfg,
            history: Vec::new(),
            best: None,
            since_best: 0,
            stopped: false,
        })
    }

    pub fn epochs_done(&self) -> usize {
        self.history.len()
    }

    pub fn is_finished(&self) -> bool {
        self.stopped || self.history.len() >= self.cfg.epochs
    }

    /// One pass over `train` in a shuffled order derived from
    /// `(seed, epoch)`, followed by a dev evaluation.
    pub fn run_epoch(&mut self, train: &[TrainPair], dev: &[TrainPair]) -> Result<&EpochStats> {
        if train.is_empty() {
            return Err(Error::Contract("empty training set".into()));
        }
        let epoch = self.history.len();
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(epoch as u64 + 1);
        let mut order: Vec<usize> = (0..train.len()).collect();
        order.shuffle(&mut rng);

        let mut total = 0.0;
        let mut positions = 0usize;
        let mut batch = Vec::with_capacity(self.cfg.batch_size);
        for chunk in order.chunks(self.cfg.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| train[i].clone()));
            let (l, grads) = batch_gradients(&self.params, &batch, Some(&mut rng))?;
            if !l.is_finite() {
                return Err(Error::Numeric(format!("non-finite training loss in epoch {}", epoch + 1)));
            }
            let n: usize = batch.iter().map(|b| b.tgt.len() - 1).sum();
            total += l * n as f64;
            positions += n;
            adam_step(&mut self.params, &grads, &mut self.adam, &self.cfg)?;
        }

        let dev_loss = if dev.is_empty() {
            None
        } else {
            let l = loss(&self.params, dev)?;
            if !l.is_finite() {
                return Err(Error::Numeric(format!("non-finite dev loss in epoch {}", epoch + 1)));
            }
            Some(l)
        };
        if let Some(l) = dev_loss {
            match &self.best {
                Some((b, _)) if l >= *b => {
                    self.since_best += 1;
                    if self.since_best >= self.cfg.patience {
                        self.stopped = true;
                    }
                }
                _ => {
                    self.best = Some((l, self.params.clone()));
                    self.since_best = 0;
                }
            }
        }
        self.history.push(EpochStats {
            epoch: epoch + 1,
            train_loss: total / positions as f64,
            dev_loss,
        });
        Ok(self.history.last().unwrap())
    }

    /// Runs epochs until the configured count or early stop.
    pub fn run(&mut self, train: &[TrainPair], dev: &[TrainPair], mut on_epoch: impl FnMut(&EpochStats)) -> Result<()> {
        while !self.is_finished() {
            let stats = self.run_epoch(train, dev)?;
            on_epoch(stats);
        }
        Ok(())
    }

    /// Best-dev parameters, or the current ones when no dev loss exists.
    pub fn best_params(&self) -> &Parameters {
        self.best.as_ref().map_or(&self.params, |(_, p)| p)
    }
}

/// Trains from `p` and returns the best-dev parameters with the per-epoch
/// loss history. An empty dev set yields the final-epoch parameters.
pub fn train(p: Parameters, train_set: &[TrainPair], dev_set: &[TrainPair], cfg: &TrainConfig) -> Result<(Parameters, Vec<EpochStats>)> {
    let mut t = Trainer::new(p, cfg.clone())?;
    t.run(train_set, dev_set, |_| {})?;
    let best = t.best_params().clone();
    Ok((best, t.history))
}
