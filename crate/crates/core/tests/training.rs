mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sentigraph::codec::{encode_corpus, EncodingScheme};
use sentigraph::metrics::arc_f1;
use sentigraph::model::{AnnotatedSentence, Sentence};
use sentigraph::parser::{train, Dropout, Hyperparams, TrainInputs};

const WINDOW: usize = 10;

fn corpus() -> Vec<AnnotatedSentence> {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    (0..10)
        .map(|i| common::lossless(&mut rng, &format!("m{}", i), 10, 2))
        .collect()
}

fn small_hyper(epochs: usize) -> Hyperparams {
    Hyperparams {
        epochs,
        batch_size: 10,
        learning_rate: 3e-3,
        beta1: 0.9,
        beta2: 0.999,
        lstm_hidden: 24,
        lstm_layers: 2,
        mlp_dim: 24,
        word_dim: 16,
        pos_dim: 4,
        lemma_dim: 8,
        char_dim: 8,
        char_hidden: 8,
        char_out: 8,
        dropout: Dropout::none(),
        ..Hyperparams::default()
    }
}

#[test]
fn small_corpus_is_memorized() {
    let data = corpus();
    let scheme = EncodingScheme::head_first();
    let outcome = train(&data, &data, &scheme, &small_hyper(250), TrainInputs::default()).unwrap();
    let losses: Vec<f64> = outcome.history.iter().map(|r| r.loss).collect();
    for i in 0..losses.len() - WINDOW {
        assert!(
            losses[i + WINDOW] <= losses[i],
            "loss rose from {} at epoch {} to {} at epoch {}",
            losses[i],
            i + 1,
            losses[i + WINDOW],
            i + WINDOW + 1
        );
    }
    let (gold, _) = encode_corpus(&data, &scheme, None).unwrap();
    let sentences: Vec<Sentence> = data.iter().map(|a| a.sentence.clone()).collect();
    let pred = outcome.model.predict_all(&sentences, None).unwrap();
    let lf1 = arc_f1(&gold, &pred, true).unwrap().f1;
    assert!(lf1 >= 0.95, "train LF1 {} (history {:?})", lf1, outcome.history.last());
}
