//! The trainable parser, its optimizer and the training loop.

use log::{debug, info};
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::codec::{encode_corpus, EncodingScheme, SyntaxMap};
use crate::error::{Error, Result};
use crate::io::{ContextualStore, EmbeddingTable};
use crate::metrics::arc_f1;
use crate::model::{AnnotatedSentence, ParseGraph, Sentence};

use super::hyper::Hyperparams;
use super::network::{backward, check_ctx, forward, Batch};
use super::params::ModelParams;
use super::scores::{loss_and_grad, predict_from_scores, ScoreTensor};
use super::vocab::{build_vocab, Vocabulary};

/// A graph parser: vocabulary, settings, encoding scheme and weights.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub vocab: Vocabulary,
    pub hyper: Hyperparams,
    pub scheme: EncodingScheme,
    pub params: ModelParams,
}

impl Model {
    /// Freshly initialized model. `ctx_dim` is the width of contextual
    /// vectors, or 0 when none are used.
    pub fn new(
        vocab: Vocabulary,
        hyper: Hyperparams,
        scheme: EncodingScheme,
        pretrained: Option<&EmbeddingTable>,
        ctx_dim: usize,
    ) -> Result<Self> {
        hyper.validate()?;
        let params = ModelParams::init(&vocab, &hyper, pretrained, ctx_dim);
        Ok(Model {
            vocab,
            hyper,
            scheme,
            params,
        })
    }

    pub fn ctx_dim(&self) -> usize {
        self.params.dims.ctx_dim
    }

    fn batch(&self, sentences: &[&Sentence], ctx: Option<&ContextualStore>) -> Result<Batch> {
        let mut batch = Batch {
            feats: Vec::with_capacity(sentences.len()),
            ctx: Vec::with_capacity(sentences.len()),
        };
        for sentence in sentences {
            let matrix = match (self.ctx_dim(), ctx) {
                (0, _) => None,
                (_, None) => return Err(Error::MissingContext(sentence.sent_id.clone())),
                (_, Some(store)) => Some(store.lookup(&sentence.sent_id, sentence.len())?.clone()),
            };
            check_ctx(&self.params, sentence.len(), matrix.as_ref(), &sentence.sent_id)?;
            batch.feats.push(self.vocab.featurize(sentence));
            batch.ctx.push(matrix);
        }
        Ok(batch)
    }

    /// Masked arc scores for one sentence, without dropout.
    pub fn scores(&self, sentence: &Sentence, ctx: Option<&Array2<f64>>) -> Result<ScoreTensor> {
        check_ctx(&self.params, sentence.len(), ctx, &sentence.sent_id)?;
        let batch = Batch {
            feats: vec![self.vocab.featurize(sentence)],
            ctx: vec![ctx.cloned()],
        };
        let (mut scores, _) = forward(&self.params, &self.hyper, &self.vocab, &batch, None);
        Ok(scores.pop().expect("one sentence in, one tensor out"))
    }

    pub fn predict(&self, sentence: &Sentence, ctx: Option<&Array2<f64>>) -> Result<ParseGraph> {
        Ok(predict_from_scores(&self.scores(sentence, ctx)?, &self.vocab))
    }

    /// Predict graphs for many sentences, scored in batches.
    pub fn predict_all(&self, sentences: &[Sentence], ctx: Option<&ContextualStore>) -> Result<Vec<ParseGraph>> {
        let mut graphs = Vec::with_capacity(sentences.len());
        let refs: Vec<&Sentence> = sentences.iter().collect();
        for chunk in refs.chunks(self.hyper.batch_size.max(1)) {
            let batch = self.batch(chunk, ctx)?;
            let (scores, _) = forward(&self.params, &self.hyper, &self.vocab, &batch, None);
            graphs.extend(scores.iter().map(|s| predict_from_scores(s, &self.vocab)));
        }
        Ok(graphs)
    }

    /// Mean loss over a batch and its gradient. Dropout is active iff `rng`
    /// is given.
    pub fn loss_and_grad(
        &self,
        sentences: &[&Sentence],
        gold: &[&ParseGraph],
        ctx: Option<&ContextualStore>,
        rng: Option<&mut ChaCha8Rng>,
    ) -> Result<(f64, ModelParams)> {
        let batch = self.batch(sentences, ctx)?;
        let (scores, cache) = forward(&self.params, &self.hyper, &self.vocab, &batch, rng);
        let scale = 1.0 / sentences.len().max(1) as f64;
        let mut total = 0.0;
        let mut d_scores = Vec::with_capacity(scores.len());
        for (s, g) in scores.iter().zip(gold) {
            let (loss, mut grad) = loss_and_grad(s, g, &self.vocab, self.hyper.none_weight)?;
            total += loss * scale;
            grad.data_mut().mapv_inplace(|v| v * scale);
            d_scores.push(grad);
        }
        Ok((total, backward(&self.params, &self.hyper, &cache, &d_scores)))
    }
}

/// Adam with L2 regularization added to the gradient and global-norm
/// clipping. Tensors without a gradient (the frozen word table) are skipped.
pub struct Adam {
    m: ModelParams,
    v: ModelParams,
    step: i32,
}

impl Adam {
    pub fn new(params: &ModelParams) -> Self {
        Adam {
            m: params.zeros_like(),
            v: params.zeros_like(),
            step: 0,
        }
    }

    pub fn step(&mut self, params: &mut ModelParams, mut grad: ModelParams, hyper: &Hyperparams) {
        self.step += 1;
        let mut norm_sq = 0.0;
        {
            let values = params.tensors();
            for ((_, _, p), g) in values.iter().zip(grad.tensors_mut()) {
                if g.len() != p.len() {
                    continue;
                }
                for (gi, &pi) in g.iter_mut().zip(p.iter()) {
                    *gi += hyper.l2 * pi;
                    norm_sq += *gi * *gi;
                }
            }
        }
        let norm = norm_sq.sqrt();
        let clip = if hyper.clip_norm > 0.0 && norm > hyper.clip_norm {
            hyper.clip_norm / norm
        } else {
            1.0
        };
        let bias1 = 1.0 - hyper.beta1.powi(self.step);
        let bias2 = 1.0 - hyper.beta2.powi(self.step);
        let slots = params
            .tensors_mut()
            .into_iter()
            .zip(grad.tensors_mut())
            .zip(self.m.tensors_mut().into_iter().zip(self.v.tensors_mut()));
        for ((p, g), (m, v)) in slots {
            if g.len() != p.len() {
                continue;
            }
            for i in 0..p.len() {
                let gi = g[i] * clip;
                m[i] = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * gi;
                v[i] = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * gi * gi;
                let m_hat = m[i] / bias1;
                let v_hat = v[i] / bias2;
                p[i] -= hyper.learning_rate * m_hat / (v_hat.sqrt() + hyper.adam_epsilon);
            }
        }
    }
}

/// Inputs beyond the corpora.
#[derive(Clone, Copy, Default)]
pub struct TrainInputs<'a> {
    pub pretrained: Option<&'a EmbeddingTable>,
    pub contextual: Option<&'a ContextualStore>,
    pub syntax: Option<&'a SyntaxMap>,
}

/// Per-epoch training record.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub dev_uf1: Option<f64>,
    pub dev_lf1: Option<f64>,
}

pub struct TrainOutcome {
    /// Weights of the best epoch by development LF1, or of the last epoch
    /// without a development set.
    pub model: Model,
    pub history: Vec<EpochRecord>,
    /// 1-based epoch whose weights were kept; `None` for the initialization.
    pub best_epoch: Option<usize>,
}

/// Train a parser on `train`, selecting weights by LF1 on `dev`. Ties keep
/// the earliest epoch.
pub fn train(
    train: &[AnnotatedSentence],
    dev: &[AnnotatedSentence],
    scheme: &EncodingScheme,
    hyper: &Hyperparams,
    inputs: TrainInputs<'_>,
) -> Result<TrainOutcome> {
    hyper.validate()?;
    let (train_graphs, train_loss) = encode_corpus(train, scheme, inputs.syntax)?;
    let (dev_graphs, _) = encode_corpus(dev, scheme, inputs.syntax)?;
    if !train_loss.is_empty() {
        info!("encoding lost {} items in the training corpus", train_loss.count());
    }
    let vocab = build_vocab(train, scheme, inputs.pretrained)?;
    let ctx_dim = inputs.contextual.map_or(0, ContextualStore::dim);
    let mut model = Model::new(vocab, hyper.clone(), scheme.clone(), inputs.pretrained, ctx_dim)?;
    let dev_sentences: Vec<Sentence> = dev.iter().map(|a| a.sentence.clone()).collect();

    let mut adam = Adam::new(&model.params);
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = Vec::with_capacity(hyper.epochs);
    let mut best: Option<(f64, usize, ModelParams)> = None;

    for epoch in 1..=hyper.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut batches = 0;
        for (b, chunk) in order.chunks(hyper.batch_size).enumerate() {
            let sentences: Vec<&Sentence> = chunk.iter().map(|&i| &train[i].sentence).collect();
            let gold: Vec<&ParseGraph> = chunk.iter().map(|&i| &train_graphs[i]).collect();
            let (loss, grad) = model.loss_and_grad(&sentences, &gold, inputs.contextual, Some(&mut rng))?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: b + 1 });
            }
            adam.step(&mut model.params, grad, hyper);
            if !model.params.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: b + 1 });
            }
            epoch_loss += loss;
            batches += 1;
        }
        let loss = epoch_loss / batches.max(1) as f64;
        let mut record = EpochRecord {
            epoch,
            loss,
            dev_uf1: None,
            dev_lf1: None,
        };
        if !dev.is_empty() {
            let pred = model.predict_all(&dev_sentences, inputs.contextual)?;
            let uf1 = arc_f1(&dev_graphs, &pred, false)?.f1;
            let lf1 = arc_f1(&dev_graphs, &pred, true)?.f1;
            record.dev_uf1 = Some(uf1);
            record.dev_lf1 = Some(lf1);
            if best.as_ref().is_none_or(|(score, _, _)| lf1 > *score) {
                best = Some((lf1, epoch, model.params.clone()));
            }
        }
        info!(
            "epoch {}: loss {:.6} dev UF1 {} LF1 {}",
            epoch,
            loss,
            record.dev_uf1.map_or("-".into(), |v| format!("{:.4}", v)),
            record.dev_lf1.map_or("-".into(), |v| format!("{:.4}", v)),
        );
        history.push(record);
    }

    let best_epoch = match best {
        Some((score, epoch, params)) => {
            debug!("keeping epoch {} with dev LF1 {:.4}", epoch, score);
            model.params = params;
            Some(epoch)
        }
        None if hyper.epochs > 0 => Some(hyper.epochs),
        None => None,
    };
    Ok(TrainOutcome {
        model,
        history,
        best_epoch,
    })
}
