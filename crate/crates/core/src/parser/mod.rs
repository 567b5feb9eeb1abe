//! Biaffine graph parser: a character-aware BiLSTM encoder with a joint
//! arc-and-label scorer, trained with Adam.

mod checkpoint;
mod hyper;
mod network;
mod nn;
mod params;
mod scores;
mod train;
mod vocab;

pub use checkpoint::{load_model, model_from_bytes, model_to_bytes, save_model};
pub use hyper::{Dropout, Hyperparams};
pub use network::Batch;
pub use nn::{BiLstm, Linear, LstmCell};
pub use params::{Dims, ModelParams};
pub use scores::{gold_labels, loss_and_grad, predict_from_scores, ScoreTensor};
pub use train::{train, Adam, EpochRecord, Model, TrainInputs, TrainOutcome};
pub use vocab::{build_vocab, Indexer, SentenceFeatures, Vocabulary, PAD, ROOT_ID, UNK};
