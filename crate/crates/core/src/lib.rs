//! Rotor-walk escape experiments on finite sink-truncated graphs.
//!
//! The pipeline is:
//!
//! 1. build a [`Graph`] (path, `Z^d` ball, b-ary tree, star, or an edge list),
//! 2. pick a [`RotorMechanism`] (adjacency order or a seeded shuffle),
//! 3. solve the [`HarmonicProfile`] `h = G / deg` and the escape probability
//!    `alpha = 1 / G(o)`,
//! 4. compute the [`WeightTable`] and the weight-minimizing configuration
//!    with [`build_rho_min`],
//! 5. run the n-particle [`Experiment`] and watch the conserved quantity
//!    from [`compute_invariant`] and the survivor count.
//!
//! [`analysis`] wraps these steps into sweeps over `n`, random-configuration
//! ensembles and a pass/fail theorem check. See the `examples/` directory
//! for one runnable program per capability.

pub mod analysis;
pub mod cli;
pub mod edge_list;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod harmonic;
pub mod mechanism;
pub mod rotor;

pub use analysis::{
    escape_sweep, random_ensemble, run_experiment, srw_escape_mc, theorem_check, EscapeReport,
    InvariantCheck, RotorSetup, RunOptions,
};
pub use edge_list::{load_edge_list, save_edge_list};
pub use error::{Error, Result};
pub use experiment::{compute_invariant, Experiment, ExperimentState, Particle, Status, StepEvent};
pub use graph::{
    build_bary_tree, build_lattice_ball, build_lattice_ball_with, build_path, build_star,
    check_graph, Graph, LatticeBoundary, VertexId,
};
pub use harmonic::{mc_green, residual, solve_harmonic, HarmonicProfile};
pub use mechanism::RotorMechanism;
pub use rotor::{
    build_rho_min, edge_weight, random_config, weight_increment, weight_table, RotorConfig,
    WeightTable,
};
