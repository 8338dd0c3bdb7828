//! Line-oriented graph text format:
//!
//! ```text
//! # comment
//! vertex <id> <value>
//! edge <id> <id> <weight>
//! ```
//!
//! Records may appear in any order; edges are applied after all vertices.

use std::fmt::Write as _;

use thiserror::Error;

use super::{Edge, GraphError, Vertex, VertexId, WorldGraph};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, message: impl Into<String>) -> Self {
        Self { line, message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphRecord {
    Vertex(Vertex),
    Edge(Edge),
}

fn number<T: std::str::FromStr>(field: Option<&str>, what: &str, line: usize) -> Result<T, ParseError> {
    let raw = field.ok_or_else(|| ParseError::new(line, format!("missing {what}")))?;
    raw.parse().map_err(|_| ParseError::new(line, format!("bad {what} {raw:?}")))
}

/// Parses one non-comment record. Returns `Ok(None)` for lines whose first
/// word is not `vertex` or `edge`, so callers can embed graph records in
/// larger files.
pub fn parse_graph_record(text: &str, line: usize) -> Result<Option<GraphRecord>, ParseError> {
    let mut fields = text.split_whitespace();
    let record = match fields.next() {
        Some("vertex") => {
            let id: VertexId = number(fields.next(), "vertex id", line)?;
            let value: u32 = number(fields.next(), "vertex value", line)?;
            GraphRecord::Vertex(Vertex::probed(id, value))
        }
        Some("edge") => {
            let a: VertexId = number(fields.next(), "edge endpoint", line)?;
            let b: VertexId = number(fields.next(), "edge endpoint", line)?;
            let w: u32 = number(fields.next(), "edge weight", line)?;
            GraphRecord::Edge(Edge::surveyed(a, b, w))
        }
        _ => return Ok(None),
    };
    if let Some(extra) = fields.next() {
        return Err(ParseError::new(line, format!("unexpected field {extra:?}")));
    }
    Ok(Some(record))
}

/// Builds a graph from records tagged with their source line numbers.
pub fn graph_from_records(records: &[(usize, GraphRecord)]) -> Result<WorldGraph, ParseError> {
    let mut graph = WorldGraph::new();
    let wrap = |line: usize, e: GraphError| ParseError::new(line, e.to_string());
    for &(line, record) in records {
        if let GraphRecord::Vertex(v) = record {
            graph.add_vertex(v).map_err(|e| wrap(line, e))?;
        }
    }
    for &(line, record) in records {
        if let GraphRecord::Edge(e) = record {
            graph.add_edge(e).map_err(|err| wrap(line, err))?;
        }
    }
    Ok(graph)
}

pub fn parse_graph(text: &str) -> Result<WorldGraph, ParseError> {
    let mut records = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        match parse_graph_record(content, line)? {
            Some(record) => records.push((line, record)),
            None => {
                let word = content.split_whitespace().next().unwrap_or("");
                return Err(ParseError::new(line, format!("unknown record {word:?}")));
            }
        }
    }
    graph_from_records(&records)
}

/// Canonical rendering: vertices by id, then edges by endpoints. Unknown
/// values are written as 0 and unknown weights as the assumed weight.
pub fn write_graph(graph: &WorldGraph) -> String {
    let mut out = String::new();
    for v in graph.vertices() {
        let _ = writeln!(out, "vertex {} {}", v.id, v.value.unwrap_or(0));
    }
    for e in graph.edges() {
        let _ = writeln!(out, "edge {} {} {}", e.a, e.b, e.effective_weight());
    }
    out
}
