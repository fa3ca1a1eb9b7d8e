//! Plain-text edge lists.
//!
//! One undirected edge per line as two whitespace-separated 0-based node
//! ids, each edge listed once. Lines starting with `#` are comments, except
//! that a `# n=N` header before the first edge fixes the node count; without
//! it the node count is one more than the largest id seen. Graphs have no
//! isolated nodes, so files are written without the header.

use std::collections::HashSet;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use biasmaj_core::{Graph, GraphError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EdgeListError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

fn line_error(line: usize, message: impl Into<String>) -> EdgeListError {
    EdgeListError::Line {
        line,
        message: message.into(),
    }
}

fn parse_header(body: &str) -> Option<&str> {
    body.trim().strip_prefix("n=").map(str::trim)
}

/// Parses edge-list text.
pub fn parse(text: &str) -> Result<Graph, EdgeListError> {
    let mut declared: Option<usize> = None;
    let mut edges = Vec::new();
    let mut seen = HashSet::new();
    let mut max_id = None::<usize>;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            if let Some(value) = parse_header(comment) {
                if declared.is_some() || !edges.is_empty() {
                    return Err(line_error(line, "node-count header must come before any edge and appear once"));
                }
                declared = Some(
                    value
                        .parse()
                        .map_err(|_| line_error(line, format!("`{value}` is not a node count")))?,
                );
            }
            continue;
        }
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        if tokens.len() != 2 {
            return Err(line_error(line, format!("expected two node ids, found {} tokens", tokens.len())));
        }
        let mut ids = [0usize; 2];
        for (slot, token) in ids.iter_mut().zip(&tokens) {
            *slot = token
                .parse()
                .map_err(|_| line_error(line, format!("`{token}` is not a non-negative integer")))?;
        }
        let [u, v] = ids;
        if u == v {
            return Err(line_error(line, format!("self-loop at node {u}")));
        }
        if let Some(n) = declared {
            if let Some(&bad) = ids.iter().find(|&&id| id >= n) {
                return Err(line_error(line, format!("node id {bad} >= n = {n}")));
            }
        }
        if !seen.insert((u.min(v), u.max(v))) {
            return Err(line_error(line, format!("duplicate edge {u}-{v}")));
        }
        max_id = Some(max_id.map_or(u.max(v), |m| m.max(u).max(v)));
        edges.push((u, v));
    }
    let n = declared.unwrap_or_else(|| max_id.map_or(0, |m| m + 1));
    Ok(Graph::from_edges(n, edges)?)
}

pub fn load(path: impl AsRef<Path>) -> Result<Graph, EdgeListError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| EdgeListError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse(&text)
}

/// Writes every edge `u v` with `u < v`, in ascending order.
pub fn write<W: Write>(graph: &Graph, out: W) -> io::Result<()> {
    let mut out = BufWriter::new(out);
    for (u, v) in graph.edges() {
        writeln!(out, "{u} {v}")?;
    }
    out.flush()
}

pub fn save(graph: &Graph, path: impl AsRef<Path>) -> Result<(), EdgeListError> {
    let path = path.as_ref();
    let io_err = |source| EdgeListError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = fs::File::create(path).map_err(io_err)?;
    write(graph, file).map_err(io_err)
}
