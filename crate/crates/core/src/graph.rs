//! Finite sink-truncated graphs.
//!
//! A [`Graph`] is a finite, simple, connected, undirected graph with a
//! designated origin and a non-empty set of absorbing sinks. It stands in
//! for an infinite transient graph: a walker that reaches a sink is treated
//! as having escaped to infinity.
//!
//! Adjacency order is construction order. Every builder here inserts edges
//! one at a time and appends each endpoint to the other's list, so the
//! default rotor mechanism is fully determined by the builder.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// Dense vertex index in `0..num_vertices`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct VertexId(pub usize);

impl VertexId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<VertexId>>,
    origin: VertexId,
    is_sink: Vec<bool>,
    labels: Vec<i64>,
    descriptor: String,
}

impl Graph {
    /// Builds a graph from explicit adjacency lists and validates it.
    ///
    /// `labels` are the external names used when reporting; pass `None` to
    /// label every vertex by its id.
    pub fn from_adjacency(
        adjacency: Vec<Vec<VertexId>>,
        origin: VertexId,
        sinks: &[VertexId],
        labels: Option<Vec<i64>>,
        descriptor: impl Into<String>,
    ) -> Result<Self> {
        let n = adjacency.len();
        if origin.index() >= n {
            return Err(Error::GraphInvalid(format!(
                "origin {origin} is not a vertex"
            )));
        }
        let mut is_sink = vec![false; n];
        for &s in sinks {
            if s.index() >= n {
                return Err(Error::GraphInvalid(format!("sink {s} is not a vertex")));
            }
            is_sink[s.index()] = true;
        }
        let labels = match labels {
            Some(l) if l.len() != n => {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: l.len(),
                })
            }
            Some(l) => l,
            None => (0..n as i64).collect(),
        };
        let g = Graph {
            adjacency,
            origin,
            is_sink,
            labels,
            descriptor: descriptor.into(),
        };
        check_graph(&g)?;
        Ok(g)
    }

    pub fn num_vertices(&self) -> usize {
        self.adjacency.len()
    }

    pub fn num_edges(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn origin(&self) -> VertexId {
        self.origin
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.num_vertices()).map(VertexId)
    }

    pub fn neighbors(&self, x: VertexId) -> &[VertexId] {
        &self.adjacency[x.index()]
    }

    pub fn degree(&self, x: VertexId) -> usize {
        self.adjacency[x.index()].len()
    }

    pub fn is_sink(&self, x: VertexId) -> bool {
        self.is_sink[x.index()]
    }

    pub fn sinks(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices().filter(|&v| self.is_sink(v))
    }

    pub fn non_sinks(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices().filter(|&v| !self.is_sink(v))
    }

    pub fn label(&self, x: VertexId) -> i64 {
        self.labels[x.index()]
    }

    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    pub fn vertex_by_label(&self, label: i64) -> Option<VertexId> {
        self.labels.iter().position(|&l| l == label).map(VertexId)
    }

    /// Short human-readable description, e.g. `lattice:d=3,r=6`.
    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }
}

/// Validates every structural invariant of a [`Graph`].
pub fn check_graph(g: &Graph) -> Result<()> {
    let n = g.num_vertices();
    if n < 2 {
        return Err(Error::GraphInvalid("fewer than two vertices".into()));
    }
    if g.is_sink(g.origin) {
        return Err(Error::GraphInvalid("origin is a sink".into()));
    }
    if !g.is_sink.iter().any(|&s| s) {
        return Err(Error::GraphInvalid("no sink vertex".into()));
    }

    let mut seen = vec![usize::MAX; n];
    for x in g.vertices() {
        for &y in g.neighbors(x) {
            if y.index() >= n {
                return Err(Error::GraphInvalid(format!(
                    "edge {x}-{y} leaves the vertex set"
                )));
            }
            if y == x {
                return Err(Error::GraphInvalid(format!("self-loop at {}", g.label(x))));
            }
            if seen[y.index()] == x.index() {
                return Err(Error::GraphInvalid(format!(
                    "duplicate edge {}-{}",
                    g.label(x),
                    g.label(y)
                )));
            }
            seen[y.index()] = x.index();
            if !g.neighbors(y).contains(&x) {
                return Err(Error::GraphInvalid(format!(
                    "edge {}-{} is not symmetric",
                    g.label(x),
                    g.label(y)
                )));
            }
        }
    }

    // connectivity
    let reached = bfs(g, [g.origin], |_| true);
    if let Some(v) = reached.iter().position(|&r| !r) {
        return Err(Error::GraphInvalid(format!(
            "disconnected: vertex {} unreachable from origin",
            g.labels[v]
        )));
    }

    // every non-sink must reach a sink through non-sinks: search backwards
    // from the sinks, expanding only through non-sink vertices.
    let drains = bfs(g, g.sinks(), |v| !g.is_sink(v));
    if let Some(v) = drains.iter().position(|&r| !r) {
        return Err(Error::GraphInvalid(format!(
            "vertex {} cannot reach a sink",
            g.labels[v]
        )));
    }
    Ok(())
}

fn bfs(
    g: &Graph,
    starts: impl IntoIterator<Item = VertexId>,
    expand: impl Fn(VertexId) -> bool,
) -> Vec<bool> {
    let mut reached = vec![false; g.num_vertices()];
    let mut queue = VecDeque::new();
    for s in starts {
        reached[s.index()] = true;
        queue.push_back(s);
    }
    while let Some(x) = queue.pop_front() {
        for &y in g.neighbors(x) {
            if !reached[y.index()] && expand(y) {
                reached[y.index()] = true;
                queue.push_back(y);
            }
        }
    }
    reached
}

/// Incremental edge-by-edge construction.
#[derive(Debug, Default)]
pub(crate) struct GraphBuilder {
    adjacency: Vec<Vec<VertexId>>,
    labels: Vec<i64>,
}

impl GraphBuilder {
    pub(crate) fn with_vertices(n: usize) -> Self {
        GraphBuilder {
            adjacency: vec![Vec::new(); n],
            labels: (0..n as i64).collect(),
        }
    }

    pub(crate) fn add_vertex(&mut self, label: i64) -> VertexId {
        self.adjacency.push(Vec::new());
        self.labels.push(label);
        VertexId(self.adjacency.len() - 1)
    }

    pub(crate) fn add_edge(&mut self, u: VertexId, v: VertexId) {
        self.adjacency[u.index()].push(v);
        self.adjacency[v.index()].push(u);
    }

    pub(crate) fn finish(
        self,
        origin: VertexId,
        sinks: &[VertexId],
        descriptor: String,
    ) -> Result<Graph> {
        Graph::from_adjacency(self.adjacency, origin, sinks, Some(self.labels), descriptor)
    }
}

/// Path `v0 - v1 - ... - v(k-1)` with origin `v0` and sink `v(k-1)`.
pub fn build_path(k: usize) -> Result<Graph> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!(
            "path length must be >= 2, got {k}"
        )));
    }
    let mut b = GraphBuilder::with_vertices(k);
    for i in 1..k {
        b.add_edge(VertexId(i - 1), VertexId(i));
    }
    b.finish(VertexId(0), &[VertexId(k - 1)], format!("path:{k}"))
}

/// Star with centre `o` and `k` leaves, all of them sinks.
pub fn build_star(k: usize) -> Result<Graph> {
    if k < 1 {
        return Err(Error::InvalidParameter(
            "star needs at least one leaf".into(),
        ));
    }
    let mut b = GraphBuilder::with_vertices(k + 1);
    for i in 1..=k {
        b.add_edge(VertexId(0), VertexId(i));
    }
    let sinks: Vec<_> = (1..=k).map(VertexId).collect();
    b.finish(VertexId(0), &sinks, format!("star:{k}"))
}

/// How edges leaving a lattice ball are terminated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum LatticeBoundary {
    /// One shared sink vertex. A boundary vertex with any neighbour outside
    /// the ball gets a single edge to it, so boundary degrees drop below
    /// `2d` when `d >= 2`.
    #[default]
    SharedSink,
    /// Every lattice point just outside the ball is its own sink vertex.
    /// All ball vertices keep degree `2d` and the Green function is exactly
    /// that of simple random walk on `Z^d` killed on exiting the ball.
    SinkLayer,
}

/// The L1 ball of radius `radius` in `Z^d`, plus one shared sink.
///
/// Vertices are numbered by (norm, lexicographic coordinates), so the
/// origin is vertex 0 and sinks come last. Vertices of norm below `radius`
/// always have degree `2d`.
pub fn build_lattice_ball(d: usize, radius: usize) -> Result<Graph> {
    build_lattice_ball_with(d, radius, LatticeBoundary::SharedSink)
}

pub fn build_lattice_ball_with(
    d: usize,
    radius: usize,
    boundary: LatticeBoundary,
) -> Result<Graph> {
    if d < 1 || radius < 1 {
        return Err(Error::InvalidParameter(format!(
            "lattice ball needs d >= 1 and radius >= 1, got d={d}, radius={radius}"
        )));
    }
    let r = radius as i64;
    let mut points = Vec::new();
    let mut current = vec![0i64; d];
    enumerate_ball(d, 0, r, &mut current, &mut points);
    points.sort_by(|a, b| l1(a).cmp(&l1(b)).then_with(|| a.cmp(b)));
    let index: HashMap<&[i64], usize> = points
        .iter()
        .enumerate()
        .map(|(i, p)| (p.as_slice(), i))
        .collect();

    let mut b = GraphBuilder::with_vertices(points.len());
    let mut sinks = Vec::new();
    let mut layer: HashMap<Vec<i64>, VertexId> = HashMap::new();
    if boundary == LatticeBoundary::SharedSink {
        sinks.push(b.add_vertex(points.len() as i64));
    }
    let mut q = vec![0i64; d];
    for (i, p) in points.iter().enumerate() {
        let mut linked_to_sink = false;
        for axis in 0..d {
            for step in [-1i64, 1] {
                q.copy_from_slice(p);
                q[axis] += step;
                match (index.get(q.as_slice()), boundary) {
                    (Some(&j), _) if j > i => b.add_edge(VertexId(i), VertexId(j)),
                    (Some(_), _) => {}
                    (None, LatticeBoundary::SharedSink) if !linked_to_sink => {
                        b.add_edge(VertexId(i), sinks[0]);
                        linked_to_sink = true;
                    }
                    (None, LatticeBoundary::SharedSink) => {}
                    (None, LatticeBoundary::SinkLayer) => {
                        let s = match layer.get(q.as_slice()) {
                            Some(&s) => s,
                            None => {
                                let s = b.add_vertex(b.adjacency.len() as i64);
                                layer.insert(q.clone(), s);
                                sinks.push(s);
                                s
                            }
                        };
                        b.add_edge(VertexId(i), s);
                    }
                }
            }
        }
    }
    let tag = match boundary {
        LatticeBoundary::SharedSink => "",
        LatticeBoundary::SinkLayer => ",boundary=layer",
    };
    b.finish(
        VertexId(0),
        &sinks,
        format!("lattice:d={d},r={radius}{tag}"),
    )
}

fn l1(p: &[i64]) -> i64 {
    p.iter().map(|c| c.abs()).sum()
}

fn enumerate_ball(
    d: usize,
    axis: usize,
    budget: i64,
    current: &mut Vec<i64>,
    out: &mut Vec<Vec<i64>>,
) {
    if axis == d {
        out.push(current.clone());
        return;
    }
    for c in -budget..=budget {
        current[axis] = c;
        enumerate_ball(d, axis + 1, budget - c.abs(), current, out);
    }
    current[axis] = 0;
}

/// Complete `b`-ary tree of the given depth, rooted at the origin.
///
/// Vertices at depth `depth` are individual sinks (a merged sink would
/// create parallel edges). Numbering is breadth-first.
pub fn build_bary_tree(b: usize, depth: usize) -> Result<Graph> {
    if b < 2 || depth < 1 {
        return Err(Error::InvalidParameter(format!(
            "b-ary tree needs b >= 2 and depth >= 1, got b={b}, depth={depth}"
        )));
    }
    let mut builder = GraphBuilder::with_vertices(1);
    let mut level = vec![VertexId(0)];
    let mut sinks = Vec::new();
    for d in 1..=depth {
        let mut next = Vec::with_capacity(level.len() * b);
        for &parent in &level {
            for _ in 0..b {
                let child = builder.add_vertex(0);
                builder.add_edge(parent, child);
                next.push(child);
            }
        }
        if d == depth {
            sinks.clone_from(&next);
        }
        level = next;
    }
    for (i, l) in builder.labels.iter_mut().enumerate() {
        *l = i as i64;
    }
    builder.finish(VertexId(0), &sinks, format!("tree:b={b},depth={depth}"))
}
