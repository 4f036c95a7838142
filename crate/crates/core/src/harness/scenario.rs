//! Scenario text format.
//!
//! ```text
//! graph <n> directed|undirected [weighted]   |   matrix <n> <p>
//! batch
//! ins <u> <v> [len]  |  del <u> <v>  |  set <i> <j> <val>
//! q reach <s> <t> | q dist <s> <t> | q path <s> <t> | q match | q witness | q rank
//! ```
//!
//! Indices are 1-based in the text and 0-based once parsed. The first batch
//! is the initial load and has no size cap.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::FieldPrime;

/// Largest vertex count of a `graph` header.
pub const GRAPH_SIZE_CAP: usize = 64;
/// Largest dimension of a `matrix` header.
pub const MATRIX_SIZE_CAP: usize = 1024;
/// Edits allowed in any batch after the first.
pub const SCENARIO_BATCH_CAP: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Header {
    Graph { n: usize, directed: bool, weighted: bool },
    Matrix { n: usize, p: u64 },
}

impl Header {
    pub fn n(&self) -> usize {
        match *self {
            Header::Graph { n, .. } | Header::Matrix { n, .. } => n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Edit {
    Ins(usize, usize, u64),
    Del(usize, usize),
    Set(usize, usize, i64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Query {
    Reach(usize, usize),
    Dist(usize, usize),
    Path(usize, usize),
    Match,
    Witness,
    Rank,
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Query::Reach(s, t) => write!(f, "reach {} {}", s + 1, t + 1),
            Query::Dist(s, t) => write!(f, "dist {} {}", s + 1, t + 1),
            Query::Path(s, t) => write!(f, "path {} {}", s + 1, t + 1),
            Query::Match => f.write_str("match"),
            Query::Witness => f.write_str("witness"),
            Query::Rank => f.write_str("rank"),
        }
    }
}

/// Edits applied atomically, then the queries that follow them.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Batch {
    pub line: usize,
    pub edits: Vec<Edit>,
    pub queries: Vec<Query>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Scenario {
    pub header: Header,
    /// Queries before the first batch, answered on the empty instance.
    pub prelude: Vec<Query>,
    pub batches: Vec<Batch>,
}

impl Scenario {
    pub fn query_count(&self) -> usize {
        self.prelude.len() + self.batches.iter().map(|b| b.queries.len()).sum::<usize>()
    }
}

struct Line<'a> {
    no: usize,
    words: Vec<&'a str>,
}

impl Line<'_> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse { line: self.no, msg: msg.into() }
    }

    fn arity(&self, want: usize, names: &str) -> Result<()> {
        if self.words.len() < want {
            return Err(self.err(format!("`{}` is missing {names}", self.words.join(" "))));
        }
        if self.words.len() > want {
            return Err(self.err(format!("unexpected `{}`", self.words[want])));
        }
        Ok(())
    }

    fn num<T: std::str::FromStr>(&self, k: usize, name: &str) -> Result<T> {
        self.words[k].parse().map_err(|_| self.err(format!("{name} `{}` is not a valid number", self.words[k])))
    }

    fn index(&self, k: usize, name: &str, n: usize) -> Result<usize> {
        let i: usize = self.num(k, name)?;
        if i == 0 || i > n {
            return Err(self.err(format!("{name} {i} outside 1..={n}")));
        }
        Ok(i - 1)
    }
}

fn parse_header(l: &Line) -> Result<Header> {
    match l.words[0] {
        "graph" => {
            if l.words.len() < 3 {
                return Err(l.err("graph header is missing the vertex count or direction"));
            }
            let n: usize = l.num(1, "vertex count")?;
            if n == 0 || n > GRAPH_SIZE_CAP {
                return Err(l.err(format!("vertex count {n} outside 1..={GRAPH_SIZE_CAP}")));
            }
            let directed = match l.words[2] {
                "directed" => true,
                "undirected" => false,
                w => return Err(l.err(format!("expected directed or undirected, got `{w}`"))),
            };
            let weighted = match l.words.get(3) {
                None => false,
                Some(&"weighted") if l.words.len() == 4 => true,
                Some(w) => return Err(l.err(format!("unexpected `{w}`"))),
            };
            Ok(Header::Graph { n, directed, weighted })
        }
        "matrix" => {
            l.arity(3, "the dimension or modulus")?;
            let n: usize = l.num(1, "dimension")?;
            if n == 0 || n > MATRIX_SIZE_CAP {
                return Err(l.err(format!("dimension {n} outside 1..={MATRIX_SIZE_CAP}")));
            }
            let p: u64 = l.num(2, "modulus")?;
            FieldPrime::new(p).map_err(|e| l.err(e.to_string()))?;
            Ok(Header::Matrix { n, p })
        }
        w => Err(l.err(format!("expected a graph or matrix header, got `{w}`"))),
    }
}

fn parse_edit(l: &Line, h: &Header) -> Result<Edit> {
    let n = h.n();
    match (l.words[0], h) {
        ("ins", Header::Graph { weighted, .. }) => {
            if l.words.len() < 3 {
                return Err(l.err(format!("`{}` is missing an endpoint", l.words.join(" "))));
            }
            let max = if *weighted { 4 } else { 3 };
            if l.words.len() > max {
                return Err(l.err(format!("unexpected `{}`", l.words[max])));
            }
            let (u, v) = (l.index(1, "endpoint", n)?, l.index(2, "endpoint", n)?);
            if u == v {
                return Err(l.err("self-loops are not allowed"));
            }
            let len = if l.words.len() == 4 { l.num(3, "length")? } else { 1 };
            if len == 0 {
                return Err(l.err("edge length must be positive"));
            }
            Ok(Edit::Ins(u, v, len))
        }
        ("del", Header::Graph { .. }) => {
            l.arity(3, "an endpoint")?;
            Ok(Edit::Del(l.index(1, "endpoint", n)?, l.index(2, "endpoint", n)?))
        }
        ("set", Header::Matrix { .. }) => {
            l.arity(4, "a row, column or value")?;
            Ok(Edit::Set(l.index(1, "row", n)?, l.index(2, "column", n)?, l.num(3, "value")?))
        }
        (w, _) => Err(l.err(format!("`{w}` does not apply to this header"))),
    }
}

fn parse_query(l: &Line, h: &Header) -> Result<Query> {
    let Some(&kind) = l.words.get(1) else { return Err(l.err("query is missing its kind")) };
    let n = h.n();
    let graph = matches!(h, Header::Graph { .. });
    let pair = |l: &Line| -> Result<(usize, usize)> {
        l.arity(4, "a source or target")?;
        Ok((l.index(2, "source", n)?, l.index(3, "target", n)?))
    };
    let q = match kind {
        "reach" if graph => {
            let (s, t) = pair(l)?;
            Query::Reach(s, t)
        }
        "dist" if graph => {
            let (s, t) = pair(l)?;
            Query::Dist(s, t)
        }
        "path" if graph => {
            let (s, t) = pair(l)?;
            Query::Path(s, t)
        }
        "match" | "witness" if matches!(h, Header::Graph { directed: false, .. }) => {
            l.arity(2, "")?;
            if kind == "match" {
                Query::Match
            } else {
                Query::Witness
            }
        }
        "rank" if !graph => {
            l.arity(2, "")?;
            Query::Rank
        }
        "reach" | "dist" | "path" | "match" | "witness" | "rank" => {
            return Err(l.err(format!("query `{kind}` does not apply to this header")))
        }
        w => return Err(l.err(format!("unknown query `{w}`"))),
    };
    Ok(q)
}

/// Parses scenario text, stopping at the first error.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let mut lines = text.lines().enumerate().filter_map(|(i, raw)| {
        let body = raw.split('#').next().unwrap_or("");
        let words: Vec<&str> = body.split_whitespace().collect();
        (!words.is_empty()).then_some(Line { no: i + 1, words })
    });
    let first = lines.next().ok_or(Error::Parse { line: 1, msg: "missing header".into() })?;
    let header = parse_header(&first)?;
    let mut sc = Scenario { header, prelude: Vec::new(), batches: Vec::new() };
    for l in lines {
        match l.words[0] {
            "batch" => {
                l.arity(1, "")?;
                sc.batches.push(Batch { line: l.no, ..Batch::default() });
            }
            "q" => {
                let q = parse_query(&l, &sc.header)?;
                match sc.batches.last_mut() {
                    Some(b) => b.queries.push(q),
                    None => sc.prelude.push(q),
                }
            }
            "graph" | "matrix" => return Err(l.err("second header")),
            _ => {
                let e = parse_edit(&l, &sc.header)?;
                let capped = sc.batches.len() > 1;
                let Some(b) = sc.batches.last_mut() else {
                    return Err(l.err("edit before the first `batch`"));
                };
                if !b.queries.is_empty() {
                    return Err(l.err("edit after a query in the same batch"));
                }
                if capped && b.edits.len() == SCENARIO_BATCH_CAP {
                    return Err(l.err(format!("batch exceeds {SCENARIO_BATCH_CAP} edits")));
                }
                b.edits.push(e);
            }
        }
    }
    Ok(sc)
}
