//! Distillation: fit the student to teacher vectors with Adam on MSE.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Params, StudentModel};
use crate::error::{Error, Result};
use crate::inventory::PronunciationSequence;
use crate::lexicon::CorpusPair;
use crate::teacher::TeacherTable;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainExample {
    pub pronunciation: PronunciationSequence,
    pub target: Vec<f64>,
}

impl TrainExample {
    /// Pair each corpus entry with its teacher vector.
    pub fn from_pairs(pairs: &[CorpusPair], teacher: &TeacherTable) -> Result<Vec<Self>> {
        pairs
            .iter()
            .map(|p| {
                let target = teacher.get_f64(&p.text).ok_or_else(|| Error::MissingTeacher(p.text.clone()))?;
                Ok(Self { pronunciation: p.pronunciation.clone(), target })
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    /// Mean over the epoch's batches, measured before each update.
    pub train_mse: f64,
    pub val_mse: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub epochs: Vec<EpochLog>,
    pub steps: usize,
}

impl TrainLog {
    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "epoch\ttrain_mse\tval_mse")?;
        for e in &self.epochs {
            let val = e.val_mse.map(|v| format!("{v:.6}")).unwrap_or_else(|| "NA".into());
            writeln!(w, "{}\t{:.6}\t{}", e.epoch, e.train_mse, val)?;
        }
        Ok(())
    }
}

/// Mean squared error over all examples and dimensions.
pub fn mse_loss(preds: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<f64> {
    if preds.len() != targets.len() || preds.is_empty() {
        return Err(Error::DimensionMismatch { expected: targets.len(), actual: preds.len() });
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for (p, t) in preds.iter().zip(targets) {
        if p.len() != t.len() {
            return Err(Error::DimensionMismatch { expected: t.len(), actual: p.len() });
        }
        sum += p.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        count += p.len();
    }
    Ok(sum / count as f64)
}

#[derive(Debug, Clone)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: i32,
    m: Params,
    v: Params,
}

impl Adam {
    pub fn new(params: &Params) -> Self {
        Self { beta1: 0.9, beta2: 0.999, eps: 1e-8, step: 0, m: params.zeros_like(), v: params.zeros_like() }
    }

    pub fn steps(&self) -> i32 {
        self.step
    }

    /// One update of every trainable tensor. Updated values are rounded to
    /// `f32` so the model always matches what a checkpoint would store.
    pub fn update(&mut self, model: &mut StudentModel, grads: &Params, lr: f64) {
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step);
        let c2 = 1.0 - self.beta2.powi(self.step);
        let names: Vec<bool> = model.params.named().iter().map(|(n, _)| model.is_trainable(n)).collect();
        let grads = grads.named();
        let params = model.params.tensors_mut();
        let ms = self.m.tensors_mut();
        let vs = self.v.tensors_mut();
        for ((((p, (_, g)), m), v), trainable) in params.into_iter().zip(grads).zip(ms).zip(vs).zip(names) {
            if !trainable {
                continue;
            }
            for i in 0..p.data.len() {
                let gi = g.data[i];
                m.data[i] = self.beta1 * m.data[i] + (1.0 - self.beta1) * gi;
                v.data[i] = self.beta2 * v.data[i] + (1.0 - self.beta2) * gi * gi;
                let update = lr * (m.data[i] / c1) / ((v.data[i] / c2).sqrt() + self.eps);
                p.data[i] = f64::from((p.data[i] - update) as f32);
            }
        }
    }
}

/// Train with the model's configured learning rate, batch size, epochs and
/// seed. The training order is reshuffled every epoch from the seed, and
/// batch gradients are reduced in a fixed order, so runs are reproducible
/// regardless of thread count.
pub fn train(model: &mut StudentModel, train: &[TrainExample], val: &[TrainExample]) -> Result<TrainLog> {
    let cfg = model.config().clone();
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Precondition("no training examples".into()));
    }
    for ex in train.iter().chain(val) {
        if ex.target.len() != cfg.teacher_dim {
            return Err(Error::DimensionMismatch { expected: cfg.teacher_dim, actual: ex.target.len() });
        }
    }
    let mut adam = Adam::new(&model.params);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_0f5b_u64);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut log = TrainLog::default();
    let val_seqs: Vec<PronunciationSequence> = val.iter().map(|e| e.pronunciation.clone()).collect();
    let val_targets: Vec<Vec<f64>> = val.iter().map(|e| e.target.clone()).collect();

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut weighted = 0.0;
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let seqs: Vec<PronunciationSequence> = chunk.iter().map(|&i| train[i].pronunciation.clone()).collect();
            let targets: Vec<Vec<f64>> = chunk.iter().map(|&i| train[i].target.clone()).collect();
            let (loss, grads) = model.loss_and_gradient(&seqs, &targets)?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, step: b + 1 });
            }
            weighted += loss * chunk.len() as f64;
            adam.update(model, &grads, cfg.learning_rate);
            log.steps += 1;
        }
        let train_mse = weighted / train.len() as f64;
        let val_mse = if val.is_empty() { None } else { Some(model.loss(&val_seqs, &val_targets)?) };
        log::info!(
            "epoch {epoch}/{}: train_mse {train_mse:.6}{}",
            cfg.epochs,
            val_mse.map(|v| format!(" val_mse {v:.6}")).unwrap_or_default()
        );
        log.epochs.push(EpochLog { epoch, train_mse, val_mse });
    }
    Ok(log)
}
