//! Layers with explicit forward caches and hand-written backward passes.
//!
//! Sequences are processed in batches laid out time-major: row `t * B + b`
//! of an input matrix holds step `t` of sequence `b`. Sequences shorter
//! than the batch maximum are padded and masked.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Uniform initialization scaled by fan-in and fan-out.
pub(crate) fn xavier(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || rng.gen_range(-bound..bound))
}

/// Inverted dropout mask; `None` when inactive.
pub(crate) fn dropout_mask(rng: Option<&mut ChaCha8Rng>, rate: f64, shape: (usize, usize)) -> Option<Array2<f64>> {
    let rng = rng?;
    if rate <= 0.0 {
        return None;
    }
    let keep = 1.0 - rate;
    Some(Array2::from_shape_simple_fn(shape, || {
        if rng.gen::<f64>() < keep {
            1.0 / keep
        } else {
            0.0
        }
    }))
}

pub(crate) fn apply_mask(x: &mut Array2<f64>, mask: &Option<Array2<f64>>) {
    if let Some(mask) = mask {
        *x *= mask;
    }
}

/// Affine map `y = x Wᵀ + b` over row vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct Linear {
    /// Shape `out × in`.
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl Linear {
    pub fn new(rng: &mut ChaCha8Rng, input: usize, output: usize) -> Self {
        Linear {
            w: xavier(rng, output, input),
            b: Array1::zeros(output),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Linear {
            w: Array2::zeros(self.w.raw_dim()),
            b: Array1::zeros(self.b.raw_dim()),
        }
    }

    pub fn forward(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        x.dot(&self.w.t()) + &self.b
    }

    /// Accumulate parameter gradients and return the input gradient.
    pub fn backward(&self, x: ArrayView2<'_, f64>, dy: &Array2<f64>, grad: &mut Linear) -> Array2<f64> {
        grad.w += &dy.t().dot(&x);
        grad.b += &dy.sum_axis(Axis(0));
        dy.dot(&self.w)
    }
}

/// One LSTM direction with gates ordered input, forget, cell, output.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmCell {
    /// Shape `4H × in`.
    pub wx: Array2<f64>,
    /// Shape `4H × H`.
    pub wh: Array2<f64>,
    pub b: Array1<f64>,
}

pub(crate) struct LstmCache {
    batch: usize,
    order: Vec<usize>,
    /// Post-activation gates per row.
    gates: Array2<f64>,
    /// `tanh` of the unmasked new cell state.
    tanh_c: Array2<f64>,
    /// Masked hidden and cell states after each step.
    h: Array2<f64>,
    c: Array2<f64>,
}

impl LstmCell {
    pub fn new(rng: &mut ChaCha8Rng, input: usize, hidden: usize) -> Self {
        let mut b = Array1::zeros(4 * hidden);
        b.slice_mut(s![hidden..2 * hidden]).fill(1.0);
        LstmCell {
            wx: xavier(rng, 4 * hidden, input),
            wh: xavier(rng, 4 * hidden, hidden),
            b,
        }
    }

    pub fn zeros_like(&self) -> Self {
        LstmCell {
            wx: Array2::zeros(self.wx.raw_dim()),
            wh: Array2::zeros(self.wh.raw_dim()),
            b: Array1::zeros(self.b.raw_dim()),
        }
    }

    pub fn hidden(&self) -> usize {
        self.wh.ncols()
    }

    /// Run over `steps` time steps of `batch` sequences. `mask[t * B + b]`
    /// is 1 where the step exists; masked steps carry the state through.
    /// Returns per-row hidden states.
    pub(crate) fn forward(
        &self,
        x: &Array2<f64>,
        mask: &[f64],
        batch: usize,
        reverse: bool,
    ) -> (Array2<f64>, LstmCache) {
        let hdim = self.hidden();
        let rows = x.nrows();
        let steps = rows / batch;
        let zx = x.dot(&self.wx.t()) + &self.b;
        let mut gates = Array2::zeros((rows, 4 * hdim));
        let mut tanh_c = Array2::zeros((rows, hdim));
        let mut h_all = Array2::zeros((rows, hdim));
        let mut c_all = Array2::zeros((rows, hdim));
        let order: Vec<usize> = if reverse {
            (0..steps).rev().collect()
        } else {
            (0..steps).collect()
        };

        let mut h = Array2::<f64>::zeros((batch, hdim));
        let mut c = Array2::<f64>::zeros((batch, hdim));
        for &t in &order {
            let r0 = t * batch;
            let z = zx.slice(s![r0..r0 + batch, ..]).to_owned() + h.dot(&self.wh.t());
            for b in 0..batch {
                let row = r0 + b;
                let m = mask[row];
                let zr = z.row(b);
                for k in 0..hdim {
                    let i = sigmoid(zr[k]);
                    let f = sigmoid(zr[hdim + k]);
                    let g = zr[2 * hdim + k].tanh();
                    let o = sigmoid(zr[3 * hdim + k]);
                    let c_new = f * c[[b, k]] + i * g;
                    let tc = c_new.tanh();
                    let h_new = o * tc;
                    gates[[row, k]] = i;
                    gates[[row, hdim + k]] = f;
                    gates[[row, 2 * hdim + k]] = g;
                    gates[[row, 3 * hdim + k]] = o;
                    tanh_c[[row, k]] = tc;
                    c[[b, k]] = m * c_new + (1.0 - m) * c[[b, k]];
                    h[[b, k]] = m * h_new + (1.0 - m) * h[[b, k]];
                }
            }
            h_all.slice_mut(s![r0..r0 + batch, ..]).assign(&h);
            c_all.slice_mut(s![r0..r0 + batch, ..]).assign(&c);
        }
        let cache = LstmCache {
            batch,
            order,
            gates,
            tanh_c,
            h: h_all.clone(),
            c: c_all,
        };
        (h_all, cache)
    }

    /// Backpropagate output gradients `dh_out` (same layout as the output),
    /// accumulating into `grad` and returning the input gradient.
    pub(crate) fn backward(
        &self,
        x: &Array2<f64>,
        mask: &[f64],
        cache: &LstmCache,
        dh_out: &Array2<f64>,
        grad: &mut LstmCell,
    ) -> Array2<f64> {
        let hdim = self.hidden();
        let batch = cache.batch;
        let rows = x.nrows();
        let mut dz_all = Array2::<f64>::zeros((rows, 4 * hdim));
        let mut h_prev_all = Array2::<f64>::zeros((rows, hdim));
        let mut dh_next = Array2::<f64>::zeros((batch, hdim));
        let mut dc_next = Array2::<f64>::zeros((batch, hdim));

        for (pos, &t) in cache.order.iter().enumerate().rev() {
            let r0 = t * batch;
            let prev = if pos == 0 {
                None
            } else {
                Some(cache.order[pos - 1] * batch)
            };
            let mut dz = Array2::<f64>::zeros((batch, 4 * hdim));
            for b in 0..batch {
                let row = r0 + b;
                let m = mask[row];
                for k in 0..hdim {
                    let (h_prev, c_prev) = match prev {
                        Some(p) => (cache.h[[p + b, k]], cache.c[[p + b, k]]),
                        None => (0.0, 0.0),
                    };
                    h_prev_all[[row, k]] = h_prev;
                    let dh = dh_out[[row, k]] + dh_next[[b, k]];
                    let dc = dc_next[[b, k]];
                    let i = cache.gates[[row, k]];
                    let f = cache.gates[[row, hdim + k]];
                    let g = cache.gates[[row, 2 * hdim + k]];
                    let o = cache.gates[[row, 3 * hdim + k]];
                    let tc = cache.tanh_c[[row, k]];
                    let dh_new = m * dh;
                    let dc_new = m * dc + dh_new * o * (1.0 - tc * tc);
                    dz[[b, k]] = dc_new * g * i * (1.0 - i);
                    dz[[b, hdim + k]] = dc_new * c_prev * f * (1.0 - f);
                    dz[[b, 2 * hdim + k]] = dc_new * i * (1.0 - g * g);
                    dz[[b, 3 * hdim + k]] = dh_new * tc * o * (1.0 - o);
                    dh_next[[b, k]] = (1.0 - m) * dh;
                    dc_next[[b, k]] = (1.0 - m) * dc + dc_new * f;
                }
            }
            dh_next += &dz.dot(&self.wh);
            dz_all.slice_mut(s![r0..r0 + batch, ..]).assign(&dz);
        }
        grad.wh += &dz_all.t().dot(&h_prev_all);
        grad.wx += &dz_all.t().dot(x);
        grad.b += &dz_all.sum_axis(Axis(0));
        dz_all.dot(&self.wx)
    }
}

/// Forward and backward LSTMs whose outputs are concatenated.
#[derive(Clone, Debug, PartialEq)]
pub struct BiLstm {
    pub fwd: LstmCell,
    pub bwd: LstmCell,
}

pub(crate) struct BiLstmCache {
    fwd: LstmCache,
    bwd: LstmCache,
}

impl BiLstm {
    pub fn new(rng: &mut ChaCha8Rng, input: usize, hidden: usize) -> Self {
        BiLstm {
            fwd: LstmCell::new(rng, input, hidden),
            bwd: LstmCell::new(rng, input, hidden),
        }
    }

    pub fn zeros_like(&self) -> Self {
        BiLstm {
            fwd: self.fwd.zeros_like(),
            bwd: self.bwd.zeros_like(),
        }
    }

    /// Returns forward and backward hidden states separately.
    pub(crate) fn forward(
        &self,
        x: &Array2<f64>,
        mask: &[f64],
        batch: usize,
    ) -> (Array2<f64>, Array2<f64>, BiLstmCache) {
        let (hf, cf) = self.fwd.forward(x, mask, batch, false);
        let (hb, cb) = self.bwd.forward(x, mask, batch, true);
        (hf, hb, BiLstmCache { fwd: cf, bwd: cb })
    }

    pub(crate) fn backward(
        &self,
        x: &Array2<f64>,
        mask: &[f64],
        cache: &BiLstmCache,
        dh_fwd: &Array2<f64>,
        dh_bwd: &Array2<f64>,
        grad: &mut BiLstm,
    ) -> Array2<f64> {
        let dx = self.fwd.backward(x, mask, &cache.fwd, dh_fwd, &mut grad.fwd);
        dx + self.bwd.backward(x, mask, &cache.bwd, dh_bwd, &mut grad.bwd)
    }
}
