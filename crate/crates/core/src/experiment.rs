//! The n-particle rotor-walk escape experiment.
//!
//! All `n` particles start at the origin. At step `t` the particle with
//! index `(t + 1) mod n` moves: the rotor at its vertex advances one
//! position and the particle follows the new rotor. A particle that has
//! come back to the origin, or has reached a sink, never moves again, but
//! its turns still consume a step. This mover order is fixed; the
//! conserved quantity computed by [`compute_invariant`] depends on it
//! through the `min(t, n)` term.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Graph, VertexId};
use crate::harmonic::HarmonicProfile;
use crate::mechanism::RotorMechanism;
use crate::rotor::{RotorConfig, WeightTable};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Status {
    AtOriginNeverLeft,
    Active,
    ReturnedToOrigin,
    AbsorbedAtSink,
}

impl Status {
    pub fn is_terminal(self) -> bool {
        matches!(self, Status::ReturnedToOrigin | Status::AbsorbedAtSink)
    }

    /// Position in the one-way lifecycle; terminal states share the top rank.
    fn rank(self) -> u8 {
        match self {
            Status::AtOriginNeverLeft => 0,
            Status::Active => 1,
            Status::ReturnedToOrigin | Status::AbsorbedAtSink => 2,
        }
    }

    /// Whether `self -> next` is an allowed transition (including no change).
    pub fn may_become(self, next: Status) -> bool {
        self == next || (!self.is_terminal() && next.rank() > self.rank())
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::AtOriginNeverLeft => "at_origin",
            Status::Active => "active",
            Status::ReturnedToOrigin => "returned",
            Status::AbsorbedAtSink => "absorbed",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Particle {
    pub status: Status,
    pub position: VertexId,
}

/// What happened during one step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepEvent {
    /// Time index of the step; the state moves from `t` to `t + 1`.
    pub t: u64,
    pub mover: usize,
    pub from: VertexId,
    /// `None` when the mover was already terminal and stayed put.
    pub to: Option<VertexId>,
    pub status_change: Option<(Status, Status)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExperimentState {
    t: u64,
    particles: Vec<Particle>,
    rho: RotorConfig,
    rho0: RotorConfig,
    in_range: Vec<bool>,
    range: Vec<VertexId>,
    survivors: usize,
    terminal: usize,
}

impl ExperimentState {
    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn n(&self) -> usize {
        self.particles.len()
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    /// Live rotor configuration.
    pub fn rho(&self) -> &RotorConfig {
        &self.rho
    }

    /// Initial rotor configuration.
    pub fn rho0(&self) -> &RotorConfig {
        &self.rho0
    }

    /// Particles that have not returned to the origin.
    pub fn survivors(&self) -> usize {
        self.survivors
    }

    /// Visited vertices in order of first visit.
    pub fn range(&self) -> &[VertexId] {
        &self.range
    }

    pub fn in_range(&self, x: VertexId) -> bool {
        self.in_range[x.index()]
    }

    pub fn is_settled(&self) -> bool {
        self.terminal == self.particles.len()
    }
}

/// A running experiment bound to its graph and mechanism.
#[derive(Clone, Debug)]
pub struct Experiment<'a> {
    graph: &'a Graph,
    mech: &'a RotorMechanism,
    state: ExperimentState,
}

impl<'a> Experiment<'a> {
    pub fn new(
        graph: &'a Graph,
        mech: &'a RotorMechanism,
        rho: RotorConfig,
        n: usize,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("need at least one particle".into()));
        }
        if rho.len() != graph.num_vertices() || mech.num_vertices() != graph.num_vertices() {
            return Err(Error::DimensionMismatch {
                expected: graph.num_vertices(),
                actual: rho.len().min(mech.num_vertices()),
            });
        }
        if let Some(x) = graph.non_sinks().find(|&x| rho.pos(x) >= graph.degree(x)) {
            return Err(Error::IndexOutOfRange {
                vertex: x.index(),
                index: rho.pos(x),
                degree: graph.degree(x),
            });
        }
        let o = graph.origin();
        let mut in_range = vec![false; graph.num_vertices()];
        in_range[o.index()] = true;
        let state = ExperimentState {
            t: 0,
            particles: vec![
                Particle {
                    status: Status::AtOriginNeverLeft,
                    position: o,
                };
                n
            ],
            rho: rho.clone(),
            rho0: rho,
            in_range,
            range: vec![o],
            survivors: n,
            terminal: 0,
        };
        Ok(Experiment { graph, mech, state })
    }

    pub fn graph(&self) -> &'a Graph {
        self.graph
    }

    pub fn mechanism(&self) -> &'a RotorMechanism {
        self.mech
    }

    pub fn state(&self) -> &ExperimentState {
        &self.state
    }

    pub fn into_state(self) -> ExperimentState {
        self.state
    }

    pub fn survivors(&self) -> usize {
        self.state.survivors
    }

    pub fn range(&self) -> &[VertexId] {
        &self.state.range
    }

    /// Index of the particle that moves at the current time.
    pub fn next_mover(&self) -> usize {
        ((self.state.t + 1) % self.state.n() as u64) as usize
    }

    pub fn step(&mut self) -> StepEvent {
        let mover = self.next_mover();
        let s = &mut self.state;
        let t = s.t;
        s.t += 1;
        let p = s.particles[mover];
        if p.status.is_terminal() {
            return StepEvent {
                t,
                mover,
                from: p.position,
                to: None,
                status_change: None,
            };
        }

        let x = p.position;
        let next = self.mech.advance(x, s.rho.pos(x));
        s.rho.set(x, next);
        let y = self.mech.target(x, next);
        if !s.in_range[y.index()] {
            s.in_range[y.index()] = true;
            s.range.push(y);
        }
        let status = if self.graph.is_sink(y) {
            Status::AbsorbedAtSink
        } else if y == self.graph.origin() {
            Status::ReturnedToOrigin
        } else {
            Status::Active
        };
        if status == Status::ReturnedToOrigin {
            s.survivors -= 1;
        }
        if status.is_terminal() {
            s.terminal += 1;
        }
        s.particles[mover] = Particle {
            status,
            position: y,
        };
        StepEvent {
            t,
            mover,
            from: x,
            to: Some(y),
            status_change: (status != p.status).then_some((p.status, status)),
        }
    }

    /// Steps until every particle has returned or been absorbed.
    pub fn run_until_settled(&mut self, max_steps: u64) -> Result<()> {
        self.run_until_settled_with(max_steps, |_, _| {})
    }

    /// As [`Experiment::run_until_settled`], calling `observe` after every step.
    pub fn run_until_settled_with<F>(&mut self, max_steps: u64, mut observe: F) -> Result<()>
    where
        F: FnMut(&Experiment<'a>, &StepEvent),
    {
        let mut taken = 0u64;
        while !self.state.is_settled() {
            if taken >= max_steps {
                return Err(Error::AbortedMaxSteps { steps: taken });
            }
            let ev = self.step();
            taken += 1;
            observe(self, &ev);
        }
        Ok(())
    }
}

/// The conserved quantity
///
/// ```text
/// M_t = sum_i h(X_t^i) + min(t, n) / deg(o) + sum_{x in R_t} (w(rho_t(x)) - w(rho_0(x)))
/// ```
///
/// Particles at sinks contribute `h = 0`; sinks carry no rotor. For every
/// initial configuration this stays equal to `n * h(o)`.
pub fn compute_invariant(
    g: &Graph,
    state: &ExperimentState,
    h: &HarmonicProfile,
    wt: &WeightTable,
) -> Result<f64> {
    let n = g.num_vertices();
    for len in [h.len(), wt.num_vertices(), state.rho.len()] {
        if len != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: len,
            });
        }
    }
    let positions: f64 = state.particles.iter().map(|p| h.h(p.position)).sum();
    let departures = state.t.min(state.n() as u64) as f64 / g.degree(g.origin()) as f64;
    let displacement: f64 = state
        .range
        .iter()
        .filter(|&&x| !g.is_sink(x))
        .map(|&x| wt.of_config(&state.rho, x) - wt.of_config(&state.rho0, x))
        .sum();
    Ok(positions + departures + displacement)
}

/// Value the invariant holds at all times: `n * G(o) / deg(o)`.
pub fn invariant_target(g: &Graph, h: &HarmonicProfile, n: usize) -> f64 {
    n as f64 * h.h(g.origin())
}

/// Per-step CSV trace with columns
/// `t, mover, from_label, to_label, status_change, survivors, invariant`.
pub struct TraceWriter<W: Write> {
    out: csv::Writer<W>,
}

#[derive(Serialize)]
struct TraceRow<'s> {
    t: u64,
    mover: usize,
    from_label: i64,
    to_label: Option<i64>,
    status_change: &'s str,
    survivors: usize,
    invariant: Option<f64>,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(out: W) -> Self {
        TraceWriter {
            out: csv::Writer::from_writer(out),
        }
    }

    pub fn record(
        &mut self,
        g: &Graph,
        ev: &StepEvent,
        survivors: usize,
        invariant: Option<f64>,
    ) -> Result<()> {
        let change = ev
            .status_change
            .map(|(a, b)| format!("{}->{}", a.as_str(), b.as_str()))
            .unwrap_or_default();
        self.out.serialize(TraceRow {
            t: ev.t,
            mover: ev.mover,
            from_label: g.label(ev.from),
            to_label: ev.to.map(|v| g.label(v)),
            status_change: &change,
            survivors,
            invariant,
        })?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.out.flush()?;
        self.out
            .into_inner()
            .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_path;
    use crate::harmonic::{solve_harmonic, DEFAULT_TOL};
    use crate::rotor::{build_rho_min, weight_table};

    #[test]
    fn init_state() {
        let g = build_path(3).unwrap();
        let m = RotorMechanism::default_for(&g);
        let exp = Experiment::new(&g, &m, RotorConfig::zeros(&g), 2).unwrap();
        assert_eq!(exp.survivors(), 2);
        assert_eq!(exp.range(), &[g.origin()]);
        assert!(exp
            .state()
            .particles()
            .iter()
            .all(|p| p.status == Status::AtOriginNeverLeft && p.position == g.origin()));
        assert!(Experiment::new(&g, &m, RotorConfig::zeros(&g), 0).is_err());
    }

    #[test]
    fn p3_hand_trace() {
        let g = build_path(3).unwrap();
        let m = RotorMechanism::default_for(&g);
        let h = solve_harmonic(&g, DEFAULT_TOL).unwrap();
        let wt = weight_table(&g, &m, &h).unwrap();
        let rho = build_rho_min(&g, &wt).config;
        let mut exp = Experiment::new(&g, &m, rho, 2).unwrap();
        let (o, a, s) = (VertexId(0), VertexId(1), VertexId(2));
        let m_t = |e: &Experiment| compute_invariant(&g, e.state(), &h, &wt).unwrap();
        assert!((m_t(&exp) - 4.0).abs() < 1e-12);

        let ev = exp.step();
        assert_eq!((ev.mover, ev.from, ev.to), (1, o, Some(a)));
        assert_eq!(
            ev.status_change,
            Some((Status::AtOriginNeverLeft, Status::Active))
        );
        let ev = exp.step();
        assert_eq!((ev.mover, ev.from, ev.to), (0, o, Some(a)));
        assert!((m_t(&exp) - 4.0).abs() < 1e-12);

        let ev = exp.step();
        assert_eq!((ev.mover, ev.from, ev.to), (1, a, Some(s)));
        assert_eq!(exp.state().rho().pos(a), 1);
        assert_eq!(exp.survivors(), 2);
        assert!((m_t(&exp) - 4.0).abs() < 1e-12);

        let ev = exp.step();
        assert_eq!((ev.mover, ev.from, ev.to), (0, a, Some(o)));
        assert_eq!(
            ev.status_change,
            Some((Status::Active, Status::ReturnedToOrigin))
        );
        assert_eq!(exp.survivors(), 1);
        assert!(exp.state().is_settled());
        assert!((m_t(&exp) - 4.0).abs() < 1e-12);

        // terminal movers only advance time
        let before = exp.state().clone();
        let ev = exp.step();
        assert_eq!(ev.to, None);
        assert_eq!(exp.state().t(), before.t() + 1);
        assert_eq!(exp.state().particles(), before.particles());
    }

    #[test]
    fn budget_exhaustion() {
        let g = build_path(6).unwrap();
        let m = RotorMechanism::default_for(&g);
        let mut exp = Experiment::new(&g, &m, RotorConfig::zeros(&g), 3).unwrap();
        assert!(matches!(
            exp.run_until_settled(2),
            Err(Error::AbortedMaxSteps { steps: 2 })
        ));
    }

    #[test]
    fn p2_everyone_escapes() {
        let g = build_path(2).unwrap();
        let m = RotorMechanism::default_for(&g);
        let mut exp = Experiment::new(&g, &m, RotorConfig::zeros(&g), 5).unwrap();
        exp.run_until_settled(100).unwrap();
        assert_eq!(exp.survivors(), 5);
    }

    #[test]
    fn status_transitions() {
        use Status::*;
        assert!(AtOriginNeverLeft.may_become(Active));
        assert!(Active.may_become(ReturnedToOrigin));
        assert!(Active.may_become(AbsorbedAtSink));
        assert!(!ReturnedToOrigin.may_become(Active));
        assert!(!AbsorbedAtSink.may_become(ReturnedToOrigin));
        assert!(!Active.may_become(AtOriginNeverLeft));
    }
}
