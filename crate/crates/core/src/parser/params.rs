//! Model parameters and their flat tensor view.

use ndarray::{Array1, Array2, Array3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::EmbeddingTable;

use super::hyper::Hyperparams;
use super::nn::{xavier, BiLstm, Linear};
use super::vocab::Vocabulary;

/// Layer sizes of a model.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub words: usize,
    pub lemmas: usize,
    pub pos: usize,
    pub chars: usize,
    pub word_dim: usize,
    pub lemma_dim: usize,
    pub pos_dim: usize,
    pub char_dim: usize,
    pub char_hidden: usize,
    pub char_out: usize,
    pub ctx_dim: usize,
    pub lstm_hidden: usize,
    pub lstm_layers: usize,
    pub mlp_dim: usize,
    /// Score columns including NONE.
    pub labels: usize,
}

impl Dims {
    pub fn new(vocab: &Vocabulary, hyper: &Hyperparams, word_dim: usize, ctx_dim: usize) -> Self {
        Dims {
            words: vocab.words.len(),
            lemmas: vocab.lemmas.len(),
            pos: vocab.pos.len(),
            chars: vocab.chars.len(),
            word_dim,
            lemma_dim: hyper.lemma_dim,
            pos_dim: hyper.pos_dim,
            char_dim: hyper.char_dim,
            char_hidden: hyper.char_hidden,
            char_out: hyper.char_out,
            ctx_dim,
            lstm_hidden: hyper.lstm_hidden,
            lstm_layers: hyper.lstm_layers,
            mlp_dim: hyper.mlp_dim,
            labels: vocab.num_labels(),
        }
    }

    /// Width of a token input vector.
    pub fn input_dim(&self) -> usize {
        self.word_dim + self.pos_dim + self.lemma_dim + self.char_out + self.ctx_dim
    }
}

/// All weights of the parser.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub dims: Dims,
    /// Pretrained word vectors are not updated during training.
    pub word_frozen: bool,
    pub word_emb: Array2<f64>,
    pub pos_emb: Array2<f64>,
    pub lemma_emb: Array2<f64>,
    pub char_emb: Array2<f64>,
    pub char_lstm: BiLstm,
    pub char_proj: Linear,
    pub layers: Vec<BiLstm>,
    pub head_ff: Linear,
    pub dep_ff: Linear,
    /// Biaffine tensor, shape `labels × (mlp + 1) × (mlp + 1)`.
    pub u: Array3<f64>,
}

impl ModelParams {
    /// Seeded initialization. Rows of words found in `pretrained` are
    /// copied from it and the word table is frozen.
    pub fn init(vocab: &Vocabulary, hyper: &Hyperparams, pretrained: Option<&EmbeddingTable>, ctx_dim: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
        let word_dim = pretrained.map_or(hyper.word_dim, EmbeddingTable::dim);
        let dims = Dims::new(vocab, hyper, word_dim, ctx_dim);
        let mut word_emb = xavier(&mut rng, dims.words, dims.word_dim);
        if let Some(table) = pretrained {
            for (id, word) in (0..vocab.words.len()).map(|id| (id, vocab.words.item(id))) {
                if let Some(vector) = table.get(word) {
                    word_emb.row_mut(id).assign(&vector);
                }
            }
        }
        let pos_emb = xavier(&mut rng, dims.pos, dims.pos_dim);
        let lemma_emb = xavier(&mut rng, dims.lemmas, dims.lemma_dim);
        let char_emb = xavier(&mut rng, dims.chars, dims.char_dim);
        let char_lstm = BiLstm::new(&mut rng, dims.char_dim, dims.char_hidden);
        let char_proj = Linear::new(&mut rng, 2 * dims.char_hidden, dims.char_out);
        let mut layers = Vec::with_capacity(dims.lstm_layers);
        for layer in 0..dims.lstm_layers {
            let input = if layer == 0 {
                dims.input_dim()
            } else {
                2 * dims.lstm_hidden
            };
            layers.push(BiLstm::new(&mut rng, input, dims.lstm_hidden));
        }
        let head_ff = Linear::new(&mut rng, 2 * dims.lstm_hidden, dims.mlp_dim);
        let dep_ff = Linear::new(&mut rng, 2 * dims.lstm_hidden, dims.mlp_dim);
        let m = dims.mlp_dim + 1;
        let bound = (6.0 / (2 * m) as f64).sqrt();
        let u = Array3::from_shape_simple_fn((dims.labels, m, m), || rand::Rng::gen_range(&mut rng, -bound..bound));
        ModelParams {
            dims,
            word_frozen: pretrained.is_some(),
            word_emb,
            pos_emb,
            lemma_emb,
            char_emb,
            char_lstm,
            char_proj,
            layers,
            head_ff,
            dep_ff,
            u,
        }
    }

    /// Same shapes, all zeros; used for gradients and optimizer state.
    pub fn zeros_like(&self) -> Self {
        let z2 = |a: &Array2<f64>| Array2::zeros(a.raw_dim());
        ModelParams {
            dims: self.dims.clone(),
            word_frozen: self.word_frozen,
            word_emb: if self.word_frozen {
                Array2::zeros((0, 0))
            } else {
                z2(&self.word_emb)
            },
            pos_emb: z2(&self.pos_emb),
            lemma_emb: z2(&self.lemma_emb),
            char_emb: z2(&self.char_emb),
            char_lstm: self.char_lstm.zeros_like(),
            char_proj: self.char_proj.zeros_like(),
            layers: self.layers.iter().map(BiLstm::zeros_like).collect(),
            head_ff: self.head_ff.zeros_like(),
            dep_ff: self.dep_ff.zeros_like(),
            u: Array3::zeros(self.u.raw_dim()),
        }
    }

    /// Every tensor with its name and shape, in a fixed order. The word
    /// table is always included.
    pub fn tensors(&self) -> Vec<(String, Vec<usize>, &[f64])> {
        let mut out = Vec::new();
        fn push2<'a>(out: &mut Vec<(String, Vec<usize>, &'a [f64])>, name: String, a: &'a Array2<f64>) {
            out.push((name, a.shape().to_vec(), a.as_slice().expect("standard layout")));
        }
        fn push1<'a>(out: &mut Vec<(String, Vec<usize>, &'a [f64])>, name: String, a: &'a Array1<f64>) {
            out.push((name, a.shape().to_vec(), a.as_slice().expect("standard layout")));
        }
        fn push_bilstm<'a>(out: &mut Vec<(String, Vec<usize>, &'a [f64])>, prefix: &str, l: &'a BiLstm) {
            for (dir, cell) in [("fwd", &l.fwd), ("bwd", &l.bwd)] {
                push2(out, format!("{}.{}.wx", prefix, dir), &cell.wx);
                push2(out, format!("{}.{}.wh", prefix, dir), &cell.wh);
                push1(out, format!("{}.{}.b", prefix, dir), &cell.b);
            }
        }
        push2(&mut out, "word_emb".into(), &self.word_emb);
        push2(&mut out, "pos_emb".into(), &self.pos_emb);
        push2(&mut out, "lemma_emb".into(), &self.lemma_emb);
        push2(&mut out, "char_emb".into(), &self.char_emb);
        push_bilstm(&mut out, "char_lstm", &self.char_lstm);
        push2(&mut out, "char_proj.w".into(), &self.char_proj.w);
        push1(&mut out, "char_proj.b".into(), &self.char_proj.b);
        for (i, layer) in self.layers.iter().enumerate() {
            push_bilstm(&mut out, &format!("lstm.{}", i), layer);
        }
        push2(&mut out, "head_ff.w".into(), &self.head_ff.w);
        push1(&mut out, "head_ff.b".into(), &self.head_ff.b);
        push2(&mut out, "dep_ff.w".into(), &self.dep_ff.w);
        push1(&mut out, "dep_ff.b".into(), &self.dep_ff.b);
        out.push((
            "u".into(),
            self.u.shape().to_vec(),
            self.u.as_slice().expect("standard layout"),
        ));
        out
    }

    /// Mutable views of every tensor, in the order of [`ModelParams::tensors`].
    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        fn bilstm<'a>(out: &mut Vec<&'a mut [f64]>, l: &'a mut BiLstm) {
            for cell in [&mut l.fwd, &mut l.bwd] {
                out.push(cell.wx.as_slice_mut().expect("standard layout"));
                out.push(cell.wh.as_slice_mut().expect("standard layout"));
                out.push(cell.b.as_slice_mut().expect("standard layout"));
            }
        }
        out.push(self.word_emb.as_slice_mut().expect("standard layout"));
        out.push(self.pos_emb.as_slice_mut().expect("standard layout"));
        out.push(self.lemma_emb.as_slice_mut().expect("standard layout"));
        out.push(self.char_emb.as_slice_mut().expect("standard layout"));
        bilstm(&mut out, &mut self.char_lstm);
        out.push(self.char_proj.w.as_slice_mut().expect("standard layout"));
        out.push(self.char_proj.b.as_slice_mut().expect("standard layout"));
        for layer in &mut self.layers {
            bilstm(&mut out, layer);
        }
        out.push(self.head_ff.w.as_slice_mut().expect("standard layout"));
        out.push(self.head_ff.b.as_slice_mut().expect("standard layout"));
        out.push(self.dep_ff.w.as_slice_mut().expect("standard layout"));
        out.push(self.dep_ff.b.as_slice_mut().expect("standard layout"));
        out.push(self.u.as_slice_mut().expect("standard layout"));
        out
    }

    /// Rebuild parameters from named tensors produced by [`ModelParams::tensors`].
    pub fn from_tensors(dims: Dims, word_frozen: bool, tensors: Vec<(String, Vec<usize>, Vec<f64>)>) -> Result<Self> {
        let template = ModelParams::shape_template(&dims, word_frozen);
        let expected = template.tensors();
        if expected.len() != tensors.len() {
            return Err(Error::Checkpoint(format!(
                "expected {} tensors, found {}",
                expected.len(),
                tensors.len()
            )));
        }
        for ((name, shape, _), (found_name, found_shape, data)) in expected.iter().zip(&tensors) {
            if name != found_name || shape != found_shape || data.len() != shape.iter().product::<usize>() {
                return Err(Error::Checkpoint(format!(
                    "tensor '{}' {:?} does not match expected '{}' {:?}",
                    found_name, found_shape, name, shape
                )));
            }
        }
        let mut params = template;
        for (slot, (_, _, data)) in params.tensors_mut().into_iter().zip(tensors) {
            slot.copy_from_slice(&data);
        }
        Ok(params)
    }

    fn shape_template(dims: &Dims, word_frozen: bool) -> Self {
        let z2 = |r, c| Array2::zeros((r, c));
        let z1 = |n| Array1::zeros(n);
        let cell = |input: usize, hidden: usize| super::nn::LstmCell {
            wx: z2(4 * hidden, input),
            wh: z2(4 * hidden, hidden),
            b: z1(4 * hidden),
        };
        let bilstm = |input, hidden| BiLstm {
            fwd: cell(input, hidden),
            bwd: cell(input, hidden),
        };
        let lin = |input, output| Linear {
            w: z2(output, input),
            b: z1(output),
        };
        let m = dims.mlp_dim + 1;
        ModelParams {
            dims: dims.clone(),
            word_frozen,
            word_emb: z2(dims.words, dims.word_dim),
            pos_emb: z2(dims.pos, dims.pos_dim),
            lemma_emb: z2(dims.lemmas, dims.lemma_dim),
            char_emb: z2(dims.chars, dims.char_dim),
            char_lstm: bilstm(dims.char_dim, dims.char_hidden),
            char_proj: lin(2 * dims.char_hidden, dims.char_out),
            layers: (0..dims.lstm_layers)
                .map(|l| {
                    bilstm(
                        if l == 0 { dims.input_dim() } else { 2 * dims.lstm_hidden },
                        dims.lstm_hidden,
                    )
                })
                .collect(),
            head_ff: lin(2 * dims.lstm_hidden, dims.mlp_dim),
            dep_ff: lin(2 * dims.lstm_hidden, dims.mlp_dim),
            u: Array3::zeros((dims.labels, m, m)),
        }
    }

    /// Whether every entry is finite.
    pub fn is_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|(_, _, data)| data.iter().all(|v| v.is_finite()))
    }
}
