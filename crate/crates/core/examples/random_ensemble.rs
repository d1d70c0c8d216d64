//! Escape rates of uniformly random rotor configurations next to rho_min.
//!
//!     cargo run --release --example random_ensemble

use rotor_escape::analysis::{run_experiment, InvariantCheck, RunOptions};
use rotor_escape::harmonic::DEFAULT_TOL;
use rotor_escape::{build_bary_tree, random_ensemble, RotorMechanism, RotorSetup};

fn main() -> rotor_escape::Result<()> {
    let g = build_bary_tree(2, 6)?;
    let mech = RotorMechanism::default_for(&g);
    let setup = RotorSetup::new(g, mech, DEFAULT_TOL)?;
    let opts = RunOptions {
        invariant_check: InvariantCheck::Off,
        ..RunOptions::default()
    };
    let n = 2000;

    let seeds: Vec<u64> = (0..40).collect();
    let e = random_ensemble(&setup, &seeds, n, 0.01, &opts)?;
    let best = run_experiment(&setup, setup.rho_min().config, n, &opts)?;

    println!("alpha            {:.5}", e.alpha);
    println!("rho_min rate     {:.5}", best.rate);
    println!("random min/max   {:.5} / {:.5}", e.min, e.max);
    println!("random mean      {:.5} +- {:.5}", e.mean, e.stderr);
    println!("within 0.01      {:.0}%", 100.0 * e.within_eps);
    Ok(())
}
