//! Step-by-step trace of a small run with the conserved quantity recomputed
//! after every move.
//!
//!     cargo run --example invariant_trace

use std::io;

use rotor_escape::analysis::{run_experiment_with, InvariantCheck, RunOptions};
use rotor_escape::experiment::TraceWriter;
use rotor_escape::harmonic::DEFAULT_TOL;
use rotor_escape::{build_path, random_config, RotorMechanism, RotorSetup};

fn main() -> rotor_escape::Result<()> {
    let g = build_path(5)?;
    let mech = RotorMechanism::shuffled(&g, 3);
    let setup = RotorSetup::new(g, mech, DEFAULT_TOL)?;
    let rho = random_config(&setup.graph, 11);

    let opts = RunOptions {
        invariant_check: InvariantCheck::EveryStep,
        ..RunOptions::default()
    };
    let mut trace = TraceWriter::new(io::stdout());
    let run = run_experiment_with(&setup, rho, 4, &opts, |exp, ev, m| {
        trace.record(exp.graph(), ev, exp.survivors(), m).unwrap();
    })?;
    trace.finish()?;
    eprintln!(
        "survivors {} of {}, max invariant deviation {:.2e}",
        run.survivors, run.n, run.max_invariant_dev
    );
    Ok(())
}
