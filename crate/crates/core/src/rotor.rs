//! Rotor configurations and edge weights.
//!
//! For a non-sink vertex `x` of degree `d` with mechanism order
//! `e_0, ..., e_{d-1}` (targets `y_0, ..., y_{d-1}`), the weight of edge
//! `e_i` is
//!
//! ```text
//! w(x, i) = -(1/d) * sum_{j=0}^{d-1} j * h(y_{(i + j + 1) mod d})
//! ```
//!
//! with `h = G / deg`. Indices wrap, so the last term (`j = d - 1`) refers
//! back to the target of `e_i` itself. Advancing the rotor from `e_i` to
//! `e_{i+1}` changes the weight by `-h(y_{i+1}) + (1/d) sum_{z ~ x} h(z)`.
//!
//! A configuration whose rotor at every vertex points to a minimum-weight
//! edge is what [`build_rho_min`] produces.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, VertexId};
use crate::harmonic::HarmonicProfile;
use crate::mechanism::RotorMechanism;

/// Weights closer than this are treated as tied when choosing a minimizer.
pub const NEAR_TIE: f64 = 1e-13;

/// Current rotor at every vertex, as a position in the mechanism order.
/// Entries at sinks are always 0 and carry no meaning.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RotorConfig {
    pos: Vec<usize>,
}

impl RotorConfig {
    /// Validates positions against `g`. Sink entries are ignored and reset to 0.
    pub fn new(g: &Graph, mut pos: Vec<usize>) -> Result<Self> {
        if pos.len() != g.num_vertices() {
            return Err(Error::DimensionMismatch {
                expected: g.num_vertices(),
                actual: pos.len(),
            });
        }
        for x in g.vertices() {
            if g.is_sink(x) {
                pos[x.index()] = 0;
            } else if pos[x.index()] >= g.degree(x) {
                return Err(Error::IndexOutOfRange {
                    vertex: x.index(),
                    index: pos[x.index()],
                    degree: g.degree(x),
                });
            }
        }
        Ok(RotorConfig { pos })
    }

    /// Every rotor at mechanism position 0.
    pub fn zeros(g: &Graph) -> Self {
        RotorConfig {
            pos: vec![0; g.num_vertices()],
        }
    }

    #[inline]
    pub fn pos(&self, x: VertexId) -> usize {
        self.pos[x.index()]
    }

    #[inline]
    pub(crate) fn set(&mut self, x: VertexId, i: usize) {
        self.pos[x.index()] = i;
    }

    pub fn positions(&self) -> &[usize] {
        &self.pos
    }

    pub fn len(&self) -> usize {
        self.pos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pos.is_empty()
    }

    /// CSV with columns `vertex_label, rotor_index`, non-sink vertices only.
    pub fn write_csv<W: Write>(&self, g: &Graph, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for x in g.non_sinks() {
            w.serialize(ConfigRow {
                vertex_label: g.label(x),
                rotor_index: self.pos(x),
            })?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the format written by [`RotorConfig::write_csv`]. Vertices not
    /// listed keep position 0.
    pub fn read_csv<R: Read>(g: &Graph, input: R) -> Result<Self> {
        let mut pos = vec![0; g.num_vertices()];
        for row in csv::Reader::from_reader(input).deserialize() {
            let row: ConfigRow = row?;
            let x = g.vertex_by_label(row.vertex_label).ok_or_else(|| {
                Error::InvalidParameter(format!("unknown vertex label {}", row.vertex_label))
            })?;
            if g.is_sink(x) {
                return Err(Error::SinkHasNoRotor(x.index()));
            }
            pos[x.index()] = row.rotor_index;
        }
        Self::new(g, pos)
    }
}

#[derive(Serialize, Deserialize)]
struct ConfigRow {
    vertex_label: i64,
    rotor_index: usize,
}

/// Weight of every (non-sink vertex, mechanism index) edge.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightTable {
    w: Vec<Vec<f64>>,
}

impl WeightTable {
    #[inline]
    pub fn weight(&self, x: VertexId, i: usize) -> f64 {
        self.w[x.index()][i]
    }

    /// Weights at `x` in mechanism order; empty for sinks.
    pub fn at(&self, x: VertexId) -> &[f64] {
        &self.w[x.index()]
    }

    pub fn num_vertices(&self) -> usize {
        self.w.len()
    }

    /// Weight of the rotor `rho` currently points to at `x`.
    #[inline]
    pub fn of_config(&self, rho: &RotorConfig, x: VertexId) -> f64 {
        self.w[x.index()][rho.pos(x)]
    }

    /// Overwrites one weight. Only meant for negative-control experiments.
    pub fn corrupt(&mut self, x: VertexId, i: usize, value: f64) {
        self.w[x.index()][i] = value;
    }

    /// CSV with columns `vertex_label, mechanism_index, target_label, weight`.
    pub fn write_csv<W: Write>(&self, g: &Graph, mech: &RotorMechanism, out: W) -> Result<()> {
        #[derive(Serialize)]
        struct Row {
            vertex_label: i64,
            mechanism_index: usize,
            target_label: i64,
            weight: f64,
        }
        let mut w = csv::Writer::from_writer(out);
        for x in g.non_sinks() {
            for (i, &weight) in self.at(x).iter().enumerate() {
                w.serialize(Row {
                    vertex_label: g.label(x),
                    mechanism_index: i,
                    target_label: g.label(mech.target(x, i)),
                    weight,
                })?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn check_edge(g: &Graph, x: VertexId, i: usize) -> Result<()> {
    if x.index() >= g.num_vertices() {
        return Err(Error::IndexOutOfRange {
            vertex: x.index(),
            index: i,
            degree: 0,
        });
    }
    if g.is_sink(x) {
        return Err(Error::SinkHasNoRotor(x.index()));
    }
    if i >= g.degree(x) {
        return Err(Error::IndexOutOfRange {
            vertex: x.index(),
            index: i,
            degree: g.degree(x),
        });
    }
    Ok(())
}

pub fn edge_weight(
    g: &Graph,
    mech: &RotorMechanism,
    h: &HarmonicProfile,
    x: VertexId,
    i: usize,
) -> Result<f64> {
    check_edge(g, x, i)?;
    let d = g.degree(x);
    let sum: f64 = (1..d)
        .map(|j| j as f64 * h.h(mech.target(x, i + j + 1)))
        .sum();
    // adding 0.0 turns -0.0 into 0.0 so dumps never print a signed zero
    Ok(-sum / d as f64 + 0.0)
}

pub fn weight_table(g: &Graph, mech: &RotorMechanism, h: &HarmonicProfile) -> Result<WeightTable> {
    let w = g
        .vertices()
        .map(|x| {
            if g.is_sink(x) {
                Ok(Vec::new())
            } else {
                (0..g.degree(x))
                    .map(|i| edge_weight(g, mech, h, x, i))
                    .collect()
            }
        })
        .collect::<Result<_>>()?;
    Ok(WeightTable { w })
}

/// `w(m_x(e)) - w(e)` for the edge `e` at mechanism index `i` of `x`.
pub fn weight_increment(
    g: &Graph,
    mech: &RotorMechanism,
    h: &HarmonicProfile,
    x: VertexId,
    i: usize,
) -> Result<f64> {
    let next = mech.advance(x, i);
    Ok(edge_weight(g, mech, h, x, next)? - edge_weight(g, mech, h, x, i)?)
}

/// Right-hand side of the increment identity:
/// `-h(target of m_x(e)) + (1/deg x) sum_{z ~ x} h(z)`.
pub fn weight_increment_identity(
    g: &Graph,
    mech: &RotorMechanism,
    h: &HarmonicProfile,
    x: VertexId,
    i: usize,
) -> Result<f64> {
    check_edge(g, x, i)?;
    let avg = g.neighbors(x).iter().map(|&z| h.h(z)).sum::<f64>() / g.degree(x) as f64;
    Ok(avg - h.h(mech.target(x, i + 1)))
}

/// Outcome of [`build_rho_min`].
#[derive(Clone, Debug, PartialEq)]
pub struct RhoMin {
    pub config: RotorConfig,
    /// Vertices where two or more edges share the minimum weight.
    pub ties: usize,
    /// Ties among them that were only ties up to [`NEAR_TIE`], not bit-exact.
    pub near_ties: usize,
}

/// Points every rotor at a minimum-weight edge, breaking ties (within
/// [`NEAR_TIE`]) by smallest mechanism index.
pub fn build_rho_min(g: &Graph, wt: &WeightTable) -> RhoMin {
    let mut pos = vec![0; g.num_vertices()];
    let (mut ties, mut near_ties) = (0, 0);
    for x in g.non_sinks() {
        let w = wt.at(x);
        let min = w.iter().copied().fold(f64::INFINITY, f64::min);
        let candidates: Vec<usize> = (0..w.len()).filter(|&i| w[i] <= min + NEAR_TIE).collect();
        pos[x.index()] = candidates[0];
        if candidates.len() > 1 {
            ties += 1;
            if candidates.iter().any(|&i| w[i] != min) {
                near_ties += 1;
            }
        }
    }
    RhoMin {
        config: RotorConfig { pos },
        ties,
        near_ties,
    }
}

/// Points every rotor at a maximum-weight edge. Used as a negative control.
pub fn build_rho_max(g: &Graph, wt: &WeightTable) -> RotorConfig {
    let mut pos = vec![0; g.num_vertices()];
    for x in g.non_sinks() {
        let w = wt.at(x);
        let mut best = 0;
        for i in 1..w.len() {
            if w[i] > w[best] + NEAR_TIE {
                best = i;
            }
        }
        pos[x.index()] = best;
    }
    RotorConfig { pos }
}

/// Independent uniform rotor at every non-sink vertex.
pub fn random_config(g: &Graph, seed: u64) -> RotorConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pos = g
        .vertices()
        .map(|x| {
            if g.is_sink(x) {
                0
            } else {
                rng.random_range(0..g.degree(x))
            }
        })
        .collect();
    RotorConfig { pos }
}

/// Checks the minimizer inequality `w(rho(x)) <= w(x, y)` at every vertex,
/// allowing [`NEAR_TIE`] slack. Returns the first offending vertex.
pub fn violates_minimizer(g: &Graph, wt: &WeightTable, rho: &RotorConfig) -> Option<VertexId> {
    g.non_sinks().find(|&x| {
        let chosen = wt.of_config(rho, x);
        wt.at(x).iter().any(|&w| chosen > w + NEAR_TIE)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_path, build_star};
    use crate::harmonic::{solve_harmonic, DEFAULT_TOL};

    fn p3() -> (Graph, RotorMechanism, HarmonicProfile) {
        let g = build_path(3).unwrap();
        let m = RotorMechanism::default_for(&g);
        let h = solve_harmonic(&g, DEFAULT_TOL).unwrap();
        (g, m, h)
    }

    #[test]
    fn p3_weights() {
        let (g, m, h) = p3();
        let a = VertexId(1);
        assert!((edge_weight(&g, &m, &h, a, 0).unwrap() + 1.0).abs() < 1e-12);
        assert!(edge_weight(&g, &m, &h, a, 1).unwrap().abs() < 1e-12);
        assert_eq!(edge_weight(&g, &m, &h, VertexId(0), 0).unwrap(), 0.0);

        let wt = weight_table(&g, &m, &h).unwrap();
        assert_eq!(wt.at(VertexId(0)).len(), 1);
        assert!(wt.at(VertexId(2)).is_empty());
    }

    #[test]
    fn p3_increments() {
        let (g, m, h) = p3();
        let a = VertexId(1);
        let inc = weight_increment(&g, &m, &h, a, 0).unwrap();
        let id = weight_increment_identity(&g, &m, &h, a, 0).unwrap();
        assert!((inc - 1.0).abs() < 1e-12 && (id - 1.0).abs() < 1e-12);
        let inc = weight_increment(&g, &m, &h, a, 1).unwrap();
        let id = weight_increment_identity(&g, &m, &h, a, 1).unwrap();
        assert!((inc + 1.0).abs() < 1e-12 && (id + 1.0).abs() < 1e-12);
        assert_eq!(weight_increment(&g, &m, &h, VertexId(0), 0).unwrap(), 0.0);
        assert_eq!(
            weight_increment_identity(&g, &m, &h, VertexId(0), 0).unwrap(),
            0.0
        );
    }

    #[test]
    fn edge_errors() {
        let (g, m, h) = p3();
        assert!(matches!(
            edge_weight(&g, &m, &h, VertexId(2), 0),
            Err(Error::SinkHasNoRotor(2))
        ));
        assert!(matches!(
            edge_weight(&g, &m, &h, VertexId(1), 2),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn p3_rho_min() {
        let (g, m, h) = p3();
        let wt = weight_table(&g, &m, &h).unwrap();
        let rho = build_rho_min(&g, &wt);
        assert_eq!(rho.config.pos(VertexId(0)), 0);
        assert_eq!(rho.config.pos(VertexId(1)), 0);
        assert_eq!(m.target(VertexId(1), 0), VertexId(0));
        assert_eq!(rho.ties, 0);
        assert!(violates_minimizer(&g, &wt, &rho.config).is_none());

        let max = build_rho_max(&g, &wt);
        assert_eq!(max.pos(VertexId(1)), 1);
        assert_eq!(violates_minimizer(&g, &wt, &max), Some(VertexId(1)));
    }

    #[test]
    fn star_all_ties() {
        let g = build_star(4).unwrap();
        let m = RotorMechanism::default_for(&g);
        let h = solve_harmonic(&g, DEFAULT_TOL).unwrap();
        let wt = weight_table(&g, &m, &h).unwrap();
        assert!(wt.at(g.origin()).iter().all(|&w| w == 0.0));
        let rho = build_rho_min(&g, &wt);
        assert_eq!(rho.config.pos(g.origin()), 0);
        assert_eq!(rho.ties, 1);
        assert_eq!(rho.near_ties, 0);
    }

    #[test]
    fn random_configs() {
        let g = build_path(3).unwrap();
        assert_eq!(random_config(&g, 5), random_config(&g, 5));
        let zeros = (0..10_000u64)
            .filter(|&s| {
                let c = random_config(&g, s);
                assert_eq!(c.pos(VertexId(0)), 0);
                c.pos(VertexId(1)) == 0
            })
            .count();
        let freq = zeros as f64 / 1e4;
        assert!((freq - 0.5).abs() <= 0.02, "{freq}");
    }

    #[test]
    fn config_validation_and_csv() {
        let g = build_path(4).unwrap();
        assert!(RotorConfig::new(&g, vec![0, 2, 0, 0]).is_err());
        assert!(RotorConfig::new(&g, vec![0, 1]).is_err());
        let c = RotorConfig::new(&g, vec![0, 1, 0, 7]).unwrap();
        assert_eq!(c.pos(VertexId(3)), 0);

        let mut buf = Vec::new();
        c.write_csv(&g, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "vertex_label,rotor_index\n0,0\n1,1\n2,0\n"
        );
        assert_eq!(RotorConfig::read_csv(&g, buf.as_slice()).unwrap(), c);
    }
}
