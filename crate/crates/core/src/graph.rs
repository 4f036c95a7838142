//! Graphs and edge batches shared by the engines, oracles and harness.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A simple graph on vertices `0..n` with a positive length per edge.
///
/// Undirected edges are stored once with the smaller endpoint first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    n: usize,
    directed: bool,
    edges: BTreeMap<(usize, usize), u64>,
}

/// An atomic set of edge changes. Deletions apply before insertions.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeBatch {
    pub ins: Vec<(usize, usize, u64)>,
    pub del: Vec<(usize, usize)>,
}

impl EdgeBatch {
    pub fn len(&self) -> usize {
        self.ins.len() + self.del.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ins.is_empty() && self.del.is_empty()
    }
}

impl Graph {
    pub fn new(n: usize, directed: bool) -> Self {
        Graph { n, directed, edges: BTreeMap::new() }
    }

    pub fn from_edges(n: usize, directed: bool, edges: &[(usize, usize, u64)]) -> Result<Self> {
        let mut g = Graph::new(n, directed);
        for &(u, v, len) in edges {
            g.insert(u, v, len)?;
        }
        Ok(g)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn directed(&self) -> bool {
        self.directed
    }

    pub fn key(&self, u: usize, v: usize) -> (usize, usize) {
        if self.directed || u <= v {
            (u, v)
        } else {
            (v, u)
        }
    }

    pub fn len(&self, u: usize, v: usize) -> Option<u64> {
        self.edges.get(&self.key(u, v)).copied()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains_key(&self.key(u, v))
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Stored edges `(u, v, len)` in key order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        self.edges.iter().map(|(&(u, v), &l)| (u, v, l))
    }

    pub fn max_len(&self) -> u64 {
        self.edges.values().copied().max().unwrap_or(0)
    }

    fn check_pair(&self, u: usize, v: usize) -> Result<()> {
        if u >= self.n || v >= self.n {
            return Err(Error::Parameter(format!("edge ({u},{v}) outside 0..{}", self.n)));
        }
        if u == v {
            return Err(Error::Parameter(format!("self-loop at {u}")));
        }
        Ok(())
    }

    pub fn insert(&mut self, u: usize, v: usize, len: u64) -> Result<()> {
        self.check_pair(u, v)?;
        if len == 0 {
            return Err(Error::Parameter(format!("edge ({u},{v}) has zero length")));
        }
        let k = self.key(u, v);
        if self.edges.insert(k, len).is_some() {
            return Err(Error::Parameter(format!("edge ({u},{v}) already present")));
        }
        Ok(())
    }

    pub fn remove(&mut self, u: usize, v: usize) -> Result<u64> {
        self.check_pair(u, v)?;
        let k = self.key(u, v);
        self.edges
            .remove(&k)
            .ok_or_else(|| Error::Parameter(format!("edge ({u},{v}) not present")))
    }

    /// Applies a batch, deletions first. On error the graph is left unchanged.
    pub fn apply(&mut self, batch: &EdgeBatch) -> Result<()> {
        let mut next = self.clone();
        for &(u, v) in &batch.del {
            next.remove(u, v)?;
        }
        for &(u, v, len) in &batch.ins {
            next.insert(u, v, len)?;
        }
        *self = next;
        Ok(())
    }

    /// Out-neighbours with lengths (both directions for undirected graphs).
    pub fn adjacency(&self) -> Vec<Vec<(usize, u64)>> {
        let mut adj = vec![Vec::new(); self.n];
        for (u, v, l) in self.edges() {
            adj[u].push((v, l));
            if !self.directed {
                adj[v].push((u, l));
            }
        }
        adj
    }
}

/// Two-colouring of an undirected edge list; `true` marks the right side.
pub fn bipartition(n: usize, edges: &[(usize, usize)]) -> Result<Vec<bool>> {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        if u >= n || v >= n {
            return Err(Error::Parameter(format!("edge ({u},{v}) outside 0..{n}")));
        }
        adj[u].push(v);
        adj[v].push(u);
    }
    let mut color: Vec<Option<bool>> = vec![None; n];
    for s in 0..n {
        if color[s].is_some() {
            continue;
        }
        color[s] = Some(false);
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            let cu = color[u].unwrap();
            for &v in &adj[u] {
                match color[v] {
                    None => {
                        color[v] = Some(!cu);
                        queue.push_back(v);
                    }
                    Some(cv) if cv == cu => {
                        return Err(Error::NotBipartite(format!("odd cycle through edge ({u},{v})")));
                    }
                    _ => {}
                }
            }
        }
    }
    Ok(color.into_iter().map(|c| c.unwrap()).collect())
}
