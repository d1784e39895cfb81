//! Edge-list and JSON graph formats.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Serialize, Deserialize)]
struct JsonGraph {
    n: usize,
    edges: Vec<[usize; 2]>,
}

/// Parses either the plain edge list ("N M" header, then M lines "i j",
/// 1-based, `#` comments) or the JSON form `{"n": .., "edges": [[i, j], ..]}`.
pub fn parse_graph(text: &str) -> Result<Graph> {
    if text.trim_start().starts_with('{') {
        let j: JsonGraph = serde_json::from_str(text)?;
        let edges = j
            .edges
            .iter()
            .map(|&[a, b]| one_based(a, 1).and_then(|a| Ok((a, one_based(b, 1)?))))
            .collect::<Result<Vec<_>>>()?;
        return Graph::new(j.n, edges);
    }
    let mut header = None;
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("expected two integers, got {:?}", line),
            });
        }
        let parse = |s: &str| {
            s.parse::<usize>().map_err(|e| Error::Parse {
                line: line_no,
                msg: format!("{s:?}: {e}"),
            })
        };
        let (a, b) = (parse(fields[0])?, parse(fields[1])?);
        if header.is_none() {
            header = Some((a, b));
        } else {
            edges.push((one_based(a, line_no)?, one_based(b, line_no)?));
        }
    }
    let (n, m) = header.ok_or(Error::Parse {
        line: 1,
        msg: "missing \"N M\" header".into(),
    })?;
    if edges.len() != m {
        return Err(Error::Parse {
            line: text.lines().count(),
            msg: format!("header declares {m} edges, found {}", edges.len()),
        });
    }
    Graph::new(n, edges)
}

fn one_based(v: usize, line: usize) -> Result<usize> {
    v.checked_sub(1).ok_or(Error::Parse {
        line,
        msg: "vertex indices are 1-based".into(),
    })
}

pub fn read_graph(path: impl AsRef<Path>) -> Result<Graph> {
    parse_graph(&std::fs::read_to_string(path)?)
}

/// Plain edge-list text, 1-based.
pub fn format_edge_list(g: &Graph) -> String {
    let mut s = format!("{} {}\n", g.n(), g.edges().len());
    for &(a, b) in g.edges() {
        let _ = writeln!(s, "{} {}", a + 1, b + 1);
    }
    s
}

pub fn format_json(g: &Graph) -> String {
    let j = JsonGraph {
        n: g.n(),
        edges: g.edges().iter().map(|&(a, b)| [a + 1, b + 1]).collect(),
    };
    serde_json::to_string(&j).expect("graph serializes")
}
