//! Plain-text edge lists: one `u v` pair of integer labels per line, `#`
//! starts a comment.
//!
//! Labels are compacted to dense ids in ascending label order. The
//! adjacency order of each vertex is the order in which its edges first
//! appear in the text, so an edge list also pins down the default rotor
//! mechanism.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::graph::{Graph, VertexId};

/// Parses an edge list and validates the resulting graph.
pub fn load_edge_list(text: &str, origin: i64, sinks: &[i64]) -> Result<Graph> {
    let mut edges = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let mut next = || -> Result<i64> {
            let tok = tokens.next().ok_or_else(|| Error::Parse {
                line: lineno + 1,
                msg: "expected two labels".into(),
            })?;
            tok.parse().map_err(|_| Error::Parse {
                line: lineno + 1,
                msg: format!("not an integer label: {tok:?}"),
            })
        };
        let (u, v) = (next()?, next()?);
        if tokens.next().is_some() {
            return Err(Error::Parse {
                line: lineno + 1,
                msg: "more than two labels".into(),
            });
        }
        edges.push((u, v));
    }
    if edges.is_empty() {
        return Err(Error::GraphInvalid("edge list is empty".into()));
    }

    let ids: BTreeMap<i64, usize> = edges
        .iter()
        .flat_map(|&(u, v)| [u, v])
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .enumerate()
        .map(|(i, l)| (l, i))
        .collect();
    let lookup = |label: i64, what: &str| {
        ids.get(&label).map(|&i| VertexId(i)).ok_or_else(|| {
            Error::GraphInvalid(format!("{what} {label} does not appear in the edge list"))
        })
    };

    let mut adjacency = vec![Vec::new(); ids.len()];
    for &(u, v) in &edges {
        let (u, v) = (VertexId(ids[&u]), VertexId(ids[&v]));
        adjacency[u.index()].push(v);
        if u != v {
            adjacency[v.index()].push(u);
        }
    }
    let origin = lookup(origin, "origin")?;
    let sinks = sinks
        .iter()
        .map(|&s| lookup(s, "sink"))
        .collect::<Result<Vec<_>>>()?;
    let labels = ids.keys().copied().collect();
    Graph::from_adjacency(adjacency, origin, &sinks, Some(labels), "edge-list")
}

/// Emits `g` as an edge list whose parse reproduces every adjacency order.
///
/// Edges are ordered topologically under the constraints "edge at position
/// k of adj(x) precedes edge at position k+1". Graphs produced by
/// edge-by-edge insertion always admit such an order; hand-built adjacency
/// lists may not, in which case [`Error::NotRealizable`] is returned.
pub fn save_edge_list(g: &Graph) -> Result<String> {
    let mut edge_id: HashMap<(usize, usize), usize> = HashMap::new();
    let mut endpoints = Vec::new();
    for x in g.vertices() {
        for &y in g.neighbors(x) {
            let key = (x.index().min(y.index()), x.index().max(y.index()));
            edge_id.entry(key).or_insert_with(|| {
                endpoints.push(key);
                endpoints.len() - 1
            });
        }
    }

    let m = endpoints.len();
    let mut successors = vec![Vec::new(); m];
    let mut indegree = vec![0usize; m];
    for x in g.vertices() {
        let ids: Vec<usize> = g
            .neighbors(x)
            .iter()
            .map(|&y| edge_id[&(x.index().min(y.index()), x.index().max(y.index()))])
            .collect();
        for w in ids.windows(2) {
            successors[w[0]].push(w[1]);
            indegree[w[1]] += 1;
        }
    }

    let mut ready: BinaryHeap<Reverse<usize>> =
        (0..m).filter(|&e| indegree[e] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(m);
    while let Some(Reverse(e)) = ready.pop() {
        order.push(e);
        for &f in &successors[e] {
            indegree[f] -= 1;
            if indegree[f] == 0 {
                ready.push(Reverse(f));
            }
        }
    }
    if order.len() != m {
        return Err(Error::NotRealizable);
    }

    let mut out = String::new();
    let sinks: Vec<String> = g.sinks().map(|s| g.label(s).to_string()).collect();
    let _ = writeln!(out, "# {}", g.descriptor());
    let _ = writeln!(
        out,
        "# origin {} sinks {}",
        g.label(g.origin()),
        sinks.join(",")
    );
    for e in order {
        let (u, v) = endpoints[e];
        let _ = writeln!(out, "{} {}", g.label(VertexId(u)), g.label(VertexId(v)));
    }
    Ok(out)
}
