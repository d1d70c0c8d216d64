//! Escape rate of rho_min for growing particle counts on a lattice ball,
//! with the lower bound and invariant checked along the way.
//!
//!     cargo run --release --example escape_sweep [radius]

use rotor_escape::analysis::{theorem_check, RunOptions};
use rotor_escape::harmonic::DEFAULT_TOL;
use rotor_escape::{build_lattice_ball, RotorMechanism, RotorSetup};

fn main() -> rotor_escape::Result<()> {
    let radius = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(6);
    let g = build_lattice_ball(3, radius)?;
    let mech = RotorMechanism::default_for(&g);
    let setup = RotorSetup::new(g, mech, DEFAULT_TOL)?;

    let check = theorem_check(&setup, &[10, 100, 1000, 10_000], &RunOptions::default())?;
    println!(
        "graph {}  alpha {:.6}",
        setup.graph.descriptor(),
        setup.alpha()
    );
    for r in &check.report.runs {
        println!(
            "n={:>6}  rate {:.6}  gap {:+.3e}  steps {:>10}  invariant dev {:.1e}",
            r.n, r.rate, r.gap, r.steps, r.max_invariant_rel_dev
        );
    }
    println!(
        "lower bound ok: {}  gaps shrinking: {}  invariant ok: {}",
        check.lower_bound_ok, check.gap_monotone, check.invariant_ok
    );
    Ok(())
}
