use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dropout rates per site.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dropout {
    pub embedding: f64,
    pub edge: f64,
    pub label: f64,
    pub recurrent: f64,
    pub char_recurrent: f64,
    pub main_ff: f64,
    pub char_ff: f64,
    pub char_linear: f64,
}

impl Default for Dropout {
    fn default() -> Self {
        Dropout {
            embedding: 0.2,
            edge: 0.2,
            label: 0.3,
            recurrent: 0.2,
            char_recurrent: 0.3,
            main_ff: 0.4,
            char_ff: 0.3,
            char_linear: 0.3,
        }
    }
}

impl Dropout {
    pub fn none() -> Self {
        Dropout {
            embedding: 0.0,
            edge: 0.0,
            label: 0.0,
            recurrent: 0.0,
            char_recurrent: 0.0,
            main_ff: 0.0,
            char_ff: 0.0,
            char_linear: 0.0,
        }
    }

    fn rates(&self) -> [(&'static str, f64); 8] {
        [
            ("embedding", self.embedding),
            ("edge", self.edge),
            ("label", self.label),
            ("recurrent", self.recurrent),
            ("char_recurrent", self.char_recurrent),
            ("main_ff", self.main_ff),
            ("char_ff", self.char_ff),
            ("char_linear", self.char_linear),
        ]
    }
}

/// Training and architecture settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_epsilon: f64,
    pub l2: f64,
    pub clip_norm: f64,
    pub lstm_hidden: usize,
    pub lstm_layers: usize,
    pub mlp_dim: usize,
    pub word_dim: usize,
    pub pos_dim: usize,
    pub lemma_dim: usize,
    pub char_dim: usize,
    pub char_hidden: usize,
    pub char_out: usize,
    pub leaky_slope: f64,
    pub dropout: Dropout,
    pub none_weight: f64,
    /// Accepted for configuration compatibility; the joint scorer has a
    /// single head and does not interpolate.
    pub model_interpolation: f64,
    /// Accepted for configuration compatibility; unused by the joint loss.
    pub loss_interpolation: f64,
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            epochs: 100,
            batch_size: 50,
            learning_rate: 1e-3,
            beta1: 0.0,
            beta2: 0.95,
            adam_epsilon: 1e-12,
            l2: 3e-9,
            clip_norm: 5.0,
            lstm_hidden: 200,
            lstm_layers: 3,
            mlp_dim: 200,
            word_dim: 100,
            pos_dim: 100,
            lemma_dim: 100,
            char_dim: 80,
            char_hidden: 100,
            char_out: 100,
            leaky_slope: 0.1,
            dropout: Dropout::default(),
            none_weight: 1.0,
            model_interpolation: 0.5,
            loss_interpolation: 0.025,
            seed: 1,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidHyperparams(msg));
        for (name, rate) in self.dropout.rates() {
            if !(0.0..1.0).contains(&rate) {
                return bad(format!("dropout.{} = {} is outside [0, 1)", name, rate));
            }
        }
        let dims = [
            ("batch_size", self.batch_size),
            ("lstm_hidden", self.lstm_hidden),
            ("lstm_layers", self.lstm_layers),
            ("mlp_dim", self.mlp_dim),
            ("word_dim", self.word_dim),
            ("pos_dim", self.pos_dim),
            ("lemma_dim", self.lemma_dim),
            ("char_dim", self.char_dim),
            ("char_hidden", self.char_hidden),
            ("char_out", self.char_out),
        ];
        for (name, value) in dims {
            if value == 0 {
                return bad(format!("{} must be positive", name));
            }
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate = {} must be positive", self.learning_rate));
        }
        for (name, beta) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&beta) {
                return bad(format!("{} = {} is outside [0, 1)", name, beta));
            }
        }
        for (name, value) in [
            ("adam_epsilon", self.adam_epsilon),
            ("l2", self.l2),
            ("clip_norm", self.clip_norm),
            ("none_weight", self.none_weight),
            ("leaky_slope", self.leaky_slope),
        ] {
            if !(value >= 0.0 && value.is_finite()) {
                return bad(format!("{} = {} must be finite and non-negative", name, value));
            }
        }
        Ok(())
    }

    /// Set a field from its name and textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .trim()
                .parse()
                .map_err(|_| Error::InvalidHyperparams(format!("invalid value '{}' for {}", value, key)))
        }
        match key {
            "epochs" => self.epochs = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "learning_rate" => self.learning_rate = parse(key, value)?,
            "beta1" => self.beta1 = parse(key, value)?,
            "beta2" => self.beta2 = parse(key, value)?,
            "adam_epsilon" => self.adam_epsilon = parse(key, value)?,
            "l2" => self.l2 = parse(key, value)?,
            "clip_norm" => self.clip_norm = parse(key, value)?,
            "lstm_hidden" => self.lstm_hidden = parse(key, value)?,
            "lstm_layers" => self.lstm_layers = parse(key, value)?,
            "mlp_dim" => self.mlp_dim = parse(key, value)?,
            "word_dim" => self.word_dim = parse(key, value)?,
            "pos_dim" => self.pos_dim = parse(key, value)?,
            "lemma_dim" => self.lemma_dim = parse(key, value)?,
            "char_dim" => self.char_dim = parse(key, value)?,
            "char_hidden" => self.char_hidden = parse(key, value)?,
            "char_out" => self.char_out = parse(key, value)?,
            "leaky_slope" => self.leaky_slope = parse(key, value)?,
            "none_weight" => self.none_weight = parse(key, value)?,
            "model_interpolation" => self.model_interpolation = parse(key, value)?,
            "loss_interpolation" => self.loss_interpolation = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "dropout.embedding" => self.dropout.embedding = parse(key, value)?,
            "dropout.edge" => self.dropout.edge = parse(key, value)?,
            "dropout.label" => self.dropout.label = parse(key, value)?,
            "dropout.recurrent" => self.dropout.recurrent = parse(key, value)?,
            "dropout.char_recurrent" => self.dropout.char_recurrent = parse(key, value)?,
            "dropout.main_ff" => self.dropout.main_ff = parse(key, value)?,
            "dropout.char_ff" => self.dropout.char_ff = parse(key, value)?,
            "dropout.char_linear" => self.dropout.char_linear = parse(key, value)?,
            other => return Err(Error::InvalidHyperparams(format!("unknown setting '{}'", other))),
        }
        Ok(())
    }
}
