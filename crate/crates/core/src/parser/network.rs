//! Batched forward pass and backpropagation of the graph parser.

use ndarray::{concatenate, s, Array2, ArrayView2, Axis};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::hyper::Hyperparams;
use super::nn::{apply_mask, dropout_mask, BiLstmCache};
use super::params::ModelParams;
use super::scores::ScoreTensor;
use super::vocab::{SentenceFeatures, Vocabulary};

/// Featurized sentences with optional contextual vectors (one row per
/// token, ROOT excluded).
pub struct Batch {
    pub feats: Vec<SentenceFeatures>,
    pub ctx: Vec<Option<Array2<f64>>>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.feats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.feats.is_empty()
    }
}

pub(crate) struct Cache {
    batch: usize,
    lens: Vec<usize>,
    lstm_mask: Vec<f64>,
    /// Time-major row of each real token, in char-batch order.
    token_rows: Vec<usize>,
    word_ids: Vec<usize>,
    pos_ids: Vec<usize>,
    lemma_ids: Vec<usize>,
    char_ids: Vec<usize>,
    char_x: Array2<f64>,
    char_mask: Vec<f64>,
    char_in_mask: Option<Array2<f64>>,
    char_cache: BiLstmCache,
    char_steps: usize,
    char_final_mask: Option<Array2<f64>>,
    char_final: Array2<f64>,
    char_out_mask: Option<Array2<f64>>,
    emb_masks: [Option<Array2<f64>>; 3],
    layer_inputs: Vec<Array2<f64>>,
    layer_caches: Vec<BiLstmCache>,
    layer_masks: Vec<Option<Array2<f64>>>,
    top: Array2<f64>,
    head_pre: Array2<f64>,
    dep_pre: Array2<f64>,
    head_mask: Option<Array2<f64>>,
    dep_mask: Option<Array2<f64>>,
    head_out: Array2<f64>,
    dep_out: Array2<f64>,
}

fn leaky(x: &Array2<f64>, slope: f64) -> Array2<f64> {
    x.mapv(|v| if v > 0.0 { v } else { slope * v })
}

fn leaky_backward(pre: &Array2<f64>, d_out: &Array2<f64>, slope: f64) -> Array2<f64> {
    let mut d = d_out.clone();
    d.zip_mut_with(pre, |g, &p| {
        if p <= 0.0 {
            *g *= slope;
        }
    });
    d
}

fn with_ones(x: ArrayView2<'_, f64>) -> Array2<f64> {
    let mut out = Array2::ones((x.nrows(), x.ncols() + 1));
    out.slice_mut(s![.., ..x.ncols()]).assign(&x);
    out
}

fn rows_of(x: &Array2<f64>, rows: impl Iterator<Item = usize>) -> Array2<f64> {
    let rows: Vec<usize> = rows.collect();
    x.select(Axis(0), &rows)
}

/// Row indices of sentence `b` in time-major layout, optionally skipping ROOT.
fn sentence_rows(batch: usize, b: usize, len: usize, skip_root: bool) -> impl Iterator<Item = usize> {
    let start = usize::from(skip_root);
    (start..len).map(move |t| t * batch + b)
}

/// Additive masks applied to raw scores: self-loops are forced to NONE and
/// ROOT may only emit expression labels.
fn apply_structure_mask(scores: &mut ScoreTensor, vocab: &Vocabulary) {
    let none = vocab.none_id();
    let n = scores.n();
    for l in 0..scores.labels() {
        let root_allowed = l == none || vocab.label(l).is_some_and(|lab| lab.is_expression() && !lab.inside);
        if !root_allowed {
            for dep in 1..=n {
                scores.set(0, dep, l, f64::NEG_INFINITY);
            }
        }
        for t in 1..=n {
            scores.set(t, t, l, if l == none { 0.0 } else { f64::NEG_INFINITY });
        }
    }
}

/// Check contextual inputs against the model.
pub(crate) fn check_ctx(params: &ModelParams, n: usize, ctx: Option<&Array2<f64>>, sent_id: &str) -> Result<()> {
    match (params.dims.ctx_dim, ctx) {
        (0, None) => Ok(()),
        (0, Some(_)) => Err(Error::DimensionMismatch(format!(
            "model takes no contextual vectors but '{}' has some",
            sent_id
        ))),
        (_, None) => Err(Error::MissingContext(sent_id.to_owned())),
        (dim, Some(m)) if m.ncols() != dim || m.nrows() != n => Err(Error::DimensionMismatch(format!(
            "contextual vectors for '{}' are {}×{}, expected {}×{}",
            sent_id,
            m.nrows(),
            m.ncols(),
            n,
            dim
        ))),
        _ => Ok(()),
    }
}

/// Score every sentence of a batch. Dropout is active iff `rng` is given.
pub(crate) fn forward(
    params: &ModelParams,
    hyper: &Hyperparams,
    vocab: &Vocabulary,
    batch: &Batch,
    mut rng: Option<&mut ChaCha8Rng>,
) -> (Vec<ScoreTensor>, Cache) {
    let dims = &params.dims;
    let drop = &hyper.dropout;
    let bsz = batch.len();
    let lens: Vec<usize> = batch.feats.iter().map(SentenceFeatures::len).collect();
    let tmax = lens.iter().copied().max().unwrap_or(0);
    let rows = tmax * bsz;
    let lstm_mask: Vec<f64> = (0..rows)
        .map(|r| f64::from(u8::from(r / bsz < lens[r % bsz])))
        .collect();

    // Character encoder over every real token.
    let token_rows: Vec<usize> = (0..rows).filter(|&r| lstm_mask[r] > 0.0).collect();
    let char_seqs: Vec<&Vec<usize>> = token_rows
        .iter()
        .map(|&r| &batch.feats[r % bsz].chars[r / bsz])
        .collect();
    let k = token_rows.len();
    let char_steps = char_seqs.iter().map(|c| c.len()).max().unwrap_or(0);
    let mut char_x = Array2::zeros((char_steps * k, dims.char_dim));
    let mut char_mask = vec![0.0; char_steps * k];
    let mut char_ids = vec![0; char_steps * k];
    for (i, seq) in char_seqs.iter().enumerate() {
        for (c, &id) in seq.iter().enumerate() {
            char_x.row_mut(c * k + i).assign(&params.char_emb.row(id));
            char_mask[c * k + i] = 1.0;
            char_ids[c * k + i] = id;
        }
    }
    let char_in_mask = dropout_mask(rng.as_deref_mut(), drop.char_ff, char_x.dim());
    apply_mask(&mut char_x, &char_in_mask);
    let (cf, cb, char_cache) = params.char_lstm.forward(&char_x, &char_mask, k);
    let last = char_steps.saturating_sub(1) * k;
    let mut char_final =
        concatenate(Axis(1), &[cf.slice(s![last..last + k, ..]), cb.slice(s![0..k, ..])]).expect("matching row counts");
    let char_final_mask = dropout_mask(rng.as_deref_mut(), drop.char_recurrent, char_final.dim());
    apply_mask(&mut char_final, &char_final_mask);
    let mut char_rep = params.char_proj.forward(char_final.view());
    let char_out_mask = dropout_mask(rng.as_deref_mut(), drop.char_linear, char_rep.dim());
    apply_mask(&mut char_rep, &char_out_mask);

    // Token inputs.
    let ids_of = |pick: fn(&SentenceFeatures) -> &Vec<usize>| -> Vec<usize> {
        (0..rows)
            .map(|r| {
                if lstm_mask[r] > 0.0 {
                    pick(&batch.feats[r % bsz])[r / bsz]
                } else {
                    0
                }
            })
            .collect()
    };
    let word_ids = ids_of(|f| &f.words);
    let pos_ids = ids_of(|f| &f.pos);
    let lemma_ids = ids_of(|f| &f.lemmas);
    let gather = |table: &Array2<f64>, ids: &[usize]| {
        let mut out = Array2::zeros((rows, table.ncols()));
        for &r in &token_rows {
            out.row_mut(r).assign(&table.row(ids[r]));
        }
        out
    };
    let mut word = gather(&params.word_emb, &word_ids);
    let mut pos = gather(&params.pos_emb, &pos_ids);
    let mut lemma = gather(&params.lemma_emb, &lemma_ids);
    let emb_masks = [
        dropout_mask(rng.as_deref_mut(), drop.embedding, word.dim()),
        dropout_mask(rng.as_deref_mut(), drop.embedding, pos.dim()),
        dropout_mask(rng.as_deref_mut(), drop.embedding, lemma.dim()),
    ];
    apply_mask(&mut word, &emb_masks[0]);
    apply_mask(&mut pos, &emb_masks[1]);
    apply_mask(&mut lemma, &emb_masks[2]);
    let mut chars = Array2::zeros((rows, dims.char_out));
    for (i, &r) in token_rows.iter().enumerate() {
        chars.row_mut(r).assign(&char_rep.row(i));
    }
    let mut ctx = Array2::zeros((rows, dims.ctx_dim));
    if dims.ctx_dim > 0 {
        for (b, m) in batch.ctx.iter().enumerate() {
            if let Some(m) = m {
                for t in 1..lens[b] {
                    ctx.row_mut(t * bsz + b).assign(&m.row(t - 1));
                }
            }
        }
    }
    let mut x = concatenate(
        Axis(1),
        &[word.view(), pos.view(), lemma.view(), chars.view(), ctx.view()],
    )
    .expect("matching row counts");

    // Sentence encoder.
    let mut layer_inputs = Vec::with_capacity(params.layers.len());
    let mut layer_caches = Vec::with_capacity(params.layers.len());
    let mut layer_masks = Vec::with_capacity(params.layers.len());
    for layer in &params.layers {
        let (hf, hb, cache) = layer.forward(&x, &lstm_mask, bsz);
        let mut out = concatenate(Axis(1), &[hf.view(), hb.view()]).expect("matching row counts");
        let mask = dropout_mask(rng.as_deref_mut(), drop.recurrent, out.dim());
        apply_mask(&mut out, &mask);
        layer_inputs.push(std::mem::replace(&mut x, out));
        layer_caches.push(cache);
        layer_masks.push(mask);
    }
    let top = x;

    // Head and dependent projections.
    let head_pre = params.head_ff.forward(top.view());
    let dep_pre = params.dep_ff.forward(top.view());
    let mut head_out = leaky(&head_pre, hyper.leaky_slope);
    let mut dep_out = leaky(&dep_pre, hyper.leaky_slope);
    let head_mask = dropout_mask(rng.as_deref_mut(), drop.main_ff, head_out.dim());
    let dep_mask = dropout_mask(rng, drop.main_ff, dep_out.dim());
    apply_mask(&mut head_out, &head_mask);
    apply_mask(&mut dep_out, &dep_mask);

    // Biaffine scoring per sentence.
    let mut scores = Vec::with_capacity(bsz);
    for (b, &len) in lens.iter().enumerate() {
        let n = len - 1;
        let h = with_ones(rows_of(&head_out, sentence_rows(bsz, b, len, false)).view());
        let d = with_ones(rows_of(&dep_out, sentence_rows(bsz, b, len, true)).view());
        let mut tensor = ScoreTensor::zeros(n, dims.labels);
        for l in 0..dims.labels {
            let s_l = h.dot(&params.u.index_axis(Axis(0), l)).dot(&d.t());
            tensor.data_mut().index_axis_mut(Axis(0), l).assign(&s_l);
        }
        apply_structure_mask(&mut tensor, vocab);
        scores.push(tensor);
    }

    let cache = Cache {
        batch: bsz,
        lens,
        lstm_mask,
        token_rows,
        word_ids,
        pos_ids,
        lemma_ids,
        char_ids,
        char_x,
        char_mask,
        char_in_mask,
        char_cache,
        char_steps,
        char_final_mask,
        char_final,
        char_out_mask,
        emb_masks,
        layer_inputs,
        layer_caches,
        layer_masks,
        top,
        head_pre,
        dep_pre,
        head_mask,
        dep_mask,
        head_out,
        dep_out,
    };
    (scores, cache)
}

fn masked(mut d: Array2<f64>, mask: &Option<Array2<f64>>) -> Array2<f64> {
    apply_mask(&mut d, mask);
    d
}

/// Gradients of all parameters given gradients of the scores.
pub(crate) fn backward(
    params: &ModelParams,
    hyper: &Hyperparams,
    cache: &Cache,
    d_scores: &[ScoreTensor],
) -> ModelParams {
    let dims = &params.dims;
    let mut grad = params.zeros_like();
    let bsz = cache.batch;

    // Biaffine scorer.
    let mut d_head_out = Array2::<f64>::zeros(cache.head_out.dim());
    let mut d_dep_out = Array2::<f64>::zeros(cache.dep_out.dim());
    for (b, &len) in cache.lens.iter().enumerate() {
        let head_rows: Vec<usize> = sentence_rows(bsz, b, len, false).collect();
        let dep_rows: Vec<usize> = sentence_rows(bsz, b, len, true).collect();
        let h = with_ones(cache.head_out.select(Axis(0), &head_rows).view());
        let d = with_ones(cache.dep_out.select(Axis(0), &dep_rows).view());
        let mut dh = Array2::<f64>::zeros(h.dim());
        let mut dd = Array2::<f64>::zeros(d.dim());
        for l in 0..dims.labels {
            let ds = d_scores[b].data().index_axis(Axis(0), l);
            let u = params.u.index_axis(Axis(0), l);
            let g = ds.dot(&d);
            grad.u.index_axis_mut(Axis(0), l).scaled_add(1.0, &h.t().dot(&g));
            dh += &g.dot(&u.t());
            dd += &ds.t().dot(&h.dot(&u));
        }
        for (i, &r) in head_rows.iter().enumerate() {
            let mut row = d_head_out.row_mut(r);
            row += &dh.slice(s![i, ..dims.mlp_dim]);
        }
        for (i, &r) in dep_rows.iter().enumerate() {
            let mut row = d_dep_out.row_mut(r);
            row += &dd.slice(s![i, ..dims.mlp_dim]);
        }
    }

    // Projections.
    let d_head_pre = leaky_backward(
        &cache.head_pre,
        &masked(d_head_out, &cache.head_mask),
        hyper.leaky_slope,
    );
    let d_dep_pre = leaky_backward(&cache.dep_pre, &masked(d_dep_out, &cache.dep_mask), hyper.leaky_slope);
    let mut d_x = params
        .head_ff
        .backward(cache.top.view(), &d_head_pre, &mut grad.head_ff);
    d_x += &params.dep_ff.backward(cache.top.view(), &d_dep_pre, &mut grad.dep_ff);

    // Sentence encoder.
    let h = dims.lstm_hidden;
    for (idx, layer) in params.layers.iter().enumerate().rev() {
        let d_out = masked(d_x, &cache.layer_masks[idx]);
        let d_f = d_out.slice(s![.., ..h]).to_owned();
        let d_b = d_out.slice(s![.., h..]).to_owned();
        d_x = layer.backward(
            &cache.layer_inputs[idx],
            &cache.lstm_mask,
            &cache.layer_caches[idx],
            &d_f,
            &d_b,
            &mut grad.layers[idx],
        );
    }

    // Token inputs.
    let mut offset = 0;
    let mut split = |width: usize| {
        let part = d_x.slice(s![.., offset..offset + width]).to_owned();
        offset += width;
        part
    };
    let d_word = masked(split(dims.word_dim), &cache.emb_masks[0]);
    let d_pos = masked(split(dims.pos_dim), &cache.emb_masks[1]);
    let d_lemma = masked(split(dims.lemma_dim), &cache.emb_masks[2]);
    let d_chars = split(dims.char_out);
    for &r in &cache.token_rows {
        if !params.word_frozen {
            let mut row = grad.word_emb.row_mut(cache.word_ids[r]);
            row += &d_word.row(r);
        }
        let mut row = grad.pos_emb.row_mut(cache.pos_ids[r]);
        row += &d_pos.row(r);
        let mut row = grad.lemma_emb.row_mut(cache.lemma_ids[r]);
        row += &d_lemma.row(r);
    }

    // Character encoder.
    let k = cache.token_rows.len();
    let d_char_rep = masked(d_chars.select(Axis(0), &cache.token_rows), &cache.char_out_mask);
    let d_char_final = masked(
        params
            .char_proj
            .backward(cache.char_final.view(), &d_char_rep, &mut grad.char_proj),
        &cache.char_final_mask,
    );
    let ch = dims.char_hidden;
    let mut d_cf = Array2::zeros((cache.char_x.nrows(), ch));
    let mut d_cb = Array2::zeros((cache.char_x.nrows(), ch));
    if k > 0 {
        let last = (cache.char_steps - 1) * k;
        d_cf.slice_mut(s![last..last + k, ..])
            .assign(&d_char_final.slice(s![.., ..ch]));
        d_cb.slice_mut(s![0..k, ..]).assign(&d_char_final.slice(s![.., ch..]));
    }
    let d_char_x = masked(
        params.char_lstm.backward(
            &cache.char_x,
            &cache.char_mask,
            &cache.char_cache,
            &d_cf,
            &d_cb,
            &mut grad.char_lstm,
        ),
        &cache.char_in_mask,
    );
    for (row, &id) in cache.char_ids.iter().enumerate() {
        if cache.char_mask[row] > 0.0 {
            let mut g = grad.char_emb.row_mut(id);
            g += &d_char_x.row(row);
        }
    }
    grad
}
