//! File formats: opinion corpora, CoNLL-U trees, graph files, embeddings
//! and contextual vector stores.

mod conllu;
mod contextual;
mod embeddings;
mod graph_file;
mod opinion_json;

pub use conllu::{attach_annotations, load_conllu, load_conllu_syntax, parse_conllu, ConlluSentence};
pub use contextual::{load_contextual_vectors, write_contextual_vectors, ContextualStore};
pub use embeddings::{load_embeddings, parse_embeddings, EmbeddingTable};
pub use graph_file::{format_graphs, graphs_to_string, parse_graphs, read_graph_file, write_graph_file, GraphRecord};
pub use opinion_json::{
    convert_corpus, load_opinion_corpus, load_opinion_json, opinion_json_string, parse_opinion_json, to_raw,
    write_opinion_json, LoadedCorpus, RawElement, RawOpinion, RawSentence,
};
