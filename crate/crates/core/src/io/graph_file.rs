//! Tab-separated graph files.
//!
//! Each sentence starts with a `# sent_id = <id>` comment followed by one
//! line per token, `ID\tFORM\tDEPS`, where DEPS lists the incoming arcs as
//! `head:label` pairs joined by `|`, or `_` when there are none. Sentences
//! are separated by a blank line.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{Arc, ParseGraph, Sentence};

/// A graph together with the sentence it annotates.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphRecord {
    pub sent_id: String,
    pub forms: Vec<String>,
    pub graph: ParseGraph,
}

impl GraphRecord {
    pub fn new(sentence: &Sentence, graph: ParseGraph) -> Self {
        GraphRecord {
            sent_id: sentence.sent_id.clone(),
            forms: sentence.tokens.iter().map(|t| t.form.clone()).collect(),
            graph,
        }
    }
}

fn check_form(form: &str) -> &str {
    if form.contains(['\t', '\n']) || form.is_empty() {
        "_"
    } else {
        form
    }
}

/// Render records in graph-file format.
pub fn format_graphs(records: &[GraphRecord]) -> String {
    let mut out = String::new();
    for (idx, record) in records.iter().enumerate() {
        if idx > 0 {
            out.push('\n');
        }
        out.push_str(&format!("# sent_id = {}\n", record.sent_id));
        for dep in 1..=record.graph.n() {
            let deps: Vec<String> = record
                .graph
                .incoming(dep)
                .iter()
                .map(|a| format!("{}:{}", a.head, a.label))
                .collect();
            let deps = if deps.is_empty() {
                "_".to_owned()
            } else {
                deps.join("|")
            };
            let form = record.forms.get(dep - 1).map(String::as_str).unwrap_or("_");
            out.push_str(&format!("{}\t{}\t{}\n", dep, check_form(form), deps));
        }
    }
    out
}

/// Pair sentences with graphs and render them.
pub fn graphs_to_string(graphs: &[ParseGraph], sentences: &[Sentence]) -> Result<String> {
    if graphs.len() != sentences.len() {
        return Err(Error::MisalignedCorpora(format!(
            "{} graphs for {} sentences",
            graphs.len(),
            sentences.len()
        )));
    }
    let mut records = Vec::with_capacity(graphs.len());
    for (graph, sentence) in graphs.iter().zip(sentences) {
        if graph.n() != sentence.len() {
            return Err(Error::DimensionMismatch(format!(
                "graph for '{}' has {} nodes, sentence has {} tokens",
                sentence.sent_id,
                graph.n(),
                sentence.len()
            )));
        }
        records.push(GraphRecord::new(sentence, graph.clone()));
    }
    Ok(format_graphs(&records))
}

pub fn write_graph_file(graphs: &[ParseGraph], sentences: &[Sentence], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = graphs_to_string(graphs, sentences)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

struct Pending {
    sent_id: Option<String>,
    forms: Vec<String>,
    arcs: Vec<(usize, Arc)>,
}

impl Pending {
    fn new() -> Self {
        Pending {
            sent_id: None,
            forms: Vec::new(),
            arcs: Vec::new(),
        }
    }

    fn is_empty(&self) -> bool {
        self.sent_id.is_none() && self.forms.is_empty()
    }

    fn finish(self, path: &Path, line: usize) -> Result<GraphRecord> {
        let sent_id = self.sent_id.ok_or_else(|| Error::MissingSentId {
            path: path.to_owned(),
            line,
        })?;
        let mut graph = ParseGraph::new(self.forms.len());
        for (arc_line, arc) in self.arcs {
            graph
                .add(arc)
                .map_err(|e| Error::parse(path, arc_line, e.to_string()))?;
        }
        Ok(GraphRecord {
            sent_id,
            forms: self.forms,
            graph,
        })
    }
}

/// Parse graph-file text; `path` is used in error messages.
pub fn parse_graphs(text: &str, path: &Path) -> Result<Vec<GraphRecord>> {
    let mut records = Vec::new();
    let mut pending = Pending::new();
    let mut last_line = 0;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        if line.trim().is_empty() {
            if !pending.is_empty() {
                records.push(std::mem::replace(&mut pending, Pending::new()).finish(path, line_no)?);
            }
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                if key.trim() == "sent_id" {
                    pending.sent_id = Some(value.trim().to_owned());
                }
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(Error::parse(
                path,
                line_no,
                format!("expected 3 columns, found {}", cols.len()),
            ));
        }
        let id: usize = cols[0]
            .parse()
            .map_err(|_| Error::parse(path, line_no, format!("invalid token id '{}'", cols[0])))?;
        if id != pending.forms.len() + 1 {
            return Err(Error::parse(
                path,
                line_no,
                format!("token id {} out of sequence, expected {}", id, pending.forms.len() + 1),
            ));
        }
        pending.forms.push(cols[1].to_owned());
        if cols[2] != "_" {
            for dep in cols[2].split('|') {
                let (head, label) = dep
                    .split_once(':')
                    .ok_or_else(|| Error::parse(path, line_no, format!("malformed dependency '{}'", dep)))?;
                let head: usize = head
                    .parse()
                    .map_err(|_| Error::parse(path, line_no, format!("invalid head '{}'", head)))?;
                let label = label
                    .parse()
                    .map_err(|e: Error| Error::parse(path, line_no, e.to_string()))?;
                pending.arcs.push((line_no, Arc::new(head, id, label)));
            }
        }
    }
    if !pending.is_empty() {
        records.push(pending.finish(path, last_line)?);
    }
    Ok(records)
}

pub fn read_graph_file(path: impl AsRef<Path>) -> Result<Vec<GraphRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_graphs(&text, path)
}
