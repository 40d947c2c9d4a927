//! Plain-text graph files.
//!
//! ```text
//! # comment
//! nodes 4 communities 2
//! m 0 0
//! e 0 1 1.0000000000000000e0
//! ```

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use super::{ContactGraph, Edge, GraphError};

pub fn render_graph(g: &ContactGraph) -> String {
    let mut out = String::new();
    writeln!(out, "nodes {} communities {}", g.n(), g.n_communities()).unwrap();
    for (v, c) in g.membership().iter().enumerate() {
        writeln!(out, "m {v} {c}").unwrap();
    }
    for e in g.edges() {
        writeln!(out, "e {} {} {:.16e}", e.u, e.v, e.w).unwrap();
    }
    out
}

fn field<T: FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T, GraphError> {
    let tok = tok.ok_or_else(|| GraphError::Parse {
        line,
        msg: format!("missing {what}"),
    })?;
    tok.parse().map_err(|_| GraphError::Parse {
        line,
        msg: format!("invalid {what} {tok:?}"),
    })
}

pub fn parse_graph(text: &str) -> Result<ContactGraph, GraphError> {
    let mut header: Option<(usize, usize)> = None;
    let mut membership: Vec<Option<usize>> = Vec::new();
    let mut edges = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut tok = body.split_whitespace();
        let tag = tok.next().unwrap();
        if tag != "nodes" && header.is_none() {
            return Err(GraphError::Parse {
                line,
                msg: "expected `nodes <n> communities <c>` header first".into(),
            });
        }
        match tag {
            "nodes" => {
                if header.is_some() {
                    return Err(GraphError::Parse {
                        line,
                        msg: "duplicate header".into(),
                    });
                }
                let n: usize = field(tok.next(), line, "node count")?;
                if tok.next() != Some("communities") {
                    return Err(GraphError::Parse {
                        line,
                        msg: "expected `communities` after node count".into(),
                    });
                }
                let c: usize = field(tok.next(), line, "community count")?;
                header = Some((n, c));
                membership = vec![None; n];
            }
            "m" => {
                let (n, c_max) = header.unwrap();
                let v: usize = field(tok.next(), line, "node id")?;
                let c: usize = field(tok.next(), line, "community id")?;
                if v >= n {
                    return Err(GraphError::Validation(format!("line {line}: node {v} out of range 0..{n}")));
                }
                if c >= c_max {
                    return Err(GraphError::Validation(format!(
                        "line {line}: community {c} out of range 0..{c_max}"
                    )));
                }
                if membership[v].replace(c).is_some() {
                    return Err(GraphError::Validation(format!("line {line}: node {v} assigned twice")));
                }
            }
            "e" => {
                let u: usize = field(tok.next(), line, "endpoint")?;
                let v: usize = field(tok.next(), line, "endpoint")?;
                let w: f64 = field(tok.next(), line, "weight")?;
                edges.push(Edge { u, v, w });
            }
            other => {
                return Err(GraphError::Parse {
                    line,
                    msg: format!("unknown record type {other:?}"),
                })
            }
        }
        if let Some(extra) = tok.next() {
            return Err(GraphError::Parse {
                line,
                msg: format!("unexpected trailing token {extra:?}"),
            });
        }
    }
    let Some((_, c)) = header else {
        return Err(GraphError::Parse {
            line: 0,
            msg: "empty graph file".into(),
        });
    };
    let membership = membership
        .into_iter()
        .enumerate()
        .map(|(v, m)| m.ok_or_else(|| GraphError::Validation(format!("node {v} has no community"))))
        .collect::<Result<Vec<_>, _>>()?;
    let g = ContactGraph::new(membership, edges)?;
    if g.n_communities() != c {
        return Err(GraphError::Validation(format!(
            "header declares {c} communities, found {}",
            g.n_communities()
        )));
    }
    Ok(g)
}

pub fn save_graph(g: &ContactGraph, path: impl AsRef<Path>) -> Result<(), GraphError> {
    std::fs::write(path, render_graph(g))?;
    Ok(())
}

pub fn load_graph(path: impl AsRef<Path>) -> Result<ContactGraph, GraphError> {
    parse_graph(&std::fs::read_to_string(path)?)
}
