//! Rotor mechanisms: a fixed cyclic order on each vertex's outgoing edges.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::{Graph, VertexId};

/// Per-vertex cyclic order of outgoing edges, stored as the list of edge
/// targets. The successor of position `i` at `x` is position
/// `(i + 1) % deg(x)`. Sinks carry an empty order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RotorMechanism {
    order: Vec<Vec<VertexId>>,
}

impl RotorMechanism {
    /// Mechanism following each vertex's adjacency order.
    pub fn default_for(g: &Graph) -> Self {
        let order = g
            .vertices()
            .map(|x| {
                if g.is_sink(x) {
                    Vec::new()
                } else {
                    g.neighbors(x).to_vec()
                }
            })
            .collect();
        RotorMechanism { order }
    }

    /// Seeded uniform permutation of each vertex's adjacency list.
    pub fn shuffled(g: &Graph, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut mech = Self::default_for(g);
        for o in &mut mech.order {
            o.shuffle(&mut rng);
        }
        mech
    }

    /// Cyclic order at `x` as a slice of edge targets.
    pub fn order(&self, x: VertexId) -> &[VertexId] {
        &self.order[x.index()]
    }

    pub fn num_vertices(&self) -> usize {
        self.order.len()
    }

    /// Target of the edge at mechanism position `i` (taken mod `deg(x)`).
    #[inline]
    pub fn target(&self, x: VertexId, i: usize) -> VertexId {
        let o = &self.order[x.index()];
        o[i % o.len()]
    }

    /// Position reached by one application of `m_x`.
    #[inline]
    pub fn advance(&self, x: VertexId, i: usize) -> usize {
        let d = self.order[x.index()].len();
        if i + 1 == d {
            0
        } else {
            i + 1
        }
    }

    /// True when this mechanism is a per-vertex permutation of `g`'s
    /// adjacency and sinks have empty orders.
    pub fn is_valid_for(&self, g: &Graph) -> bool {
        if self.order.len() != g.num_vertices() {
            return false;
        }
        g.vertices().all(|x| {
            let o = self.order(x);
            if g.is_sink(x) {
                return o.is_empty();
            }
            let mut a = o.to_vec();
            let mut b = g.neighbors(x).to_vec();
            a.sort();
            b.sort();
            a == b
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_bary_tree, build_lattice_ball, build_path};

    #[test]
    fn default_follows_adjacency() {
        let g = build_path(3).unwrap();
        let m = RotorMechanism::default_for(&g);
        assert_eq!(m.order(VertexId(1)), &[VertexId(0), VertexId(2)]);
        assert!(m.order(VertexId(2)).is_empty());

        let g = build_lattice_ball(1, 2).unwrap();
        let m = RotorMechanism::default_for(&g);
        let labels: Vec<_> = m.order(g.origin()).iter().map(|&v| v.index()).collect();
        // vertex 1 is the point -1, vertex 2 is +1
        assert_eq!(labels, vec![1, 2]);
    }

    #[test]
    fn shuffled_is_reproducible() {
        let g = build_lattice_ball(3, 3).unwrap();
        assert_eq!(
            RotorMechanism::shuffled(&g, 9),
            RotorMechanism::shuffled(&g, 9)
        );
        assert!(RotorMechanism::shuffled(&g, 9).is_valid_for(&g));

        let p3 = build_path(3).unwrap();
        for seed in 0..20 {
            let m = RotorMechanism::shuffled(&p3, seed);
            let o = m.order(VertexId(1));
            assert!(o == [VertexId(0), VertexId(2)] || o == [VertexId(2), VertexId(0)]);
            assert_eq!(m.order(VertexId(0)), &[VertexId(1)]);
        }
    }

    #[test]
    fn full_orbit_returns_home() {
        for g in [
            build_path(4).unwrap(),
            build_lattice_ball(2, 3).unwrap(),
            build_bary_tree(3, 2).unwrap(),
        ] {
            let m = RotorMechanism::shuffled(&g, 1);
            for x in g.non_sinks() {
                for start in 0..g.degree(x) {
                    let mut i = start;
                    for _ in 0..g.degree(x) {
                        i = m.advance(x, i);
                    }
                    assert_eq!(i, start);
                }
            }
        }
    }
}
