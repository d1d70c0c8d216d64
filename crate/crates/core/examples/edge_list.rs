//! Load a graph from an edge list, run it, and write it back out.
//!
//!     cargo run --example edge_list

use rotor_escape::analysis::{escape_sweep, RunOptions};
use rotor_escape::harmonic::DEFAULT_TOL;
use rotor_escape::{load_edge_list, save_edge_list, RotorMechanism, RotorSetup};

// A 4-cycle with a tail; 0 is the origin, 9 the sink.
const EDGES: &str = "\
0 1
1 2
2 3
3 0
2 9
";

fn main() -> rotor_escape::Result<()> {
    let g = load_edge_list(EDGES, 0, &[9])?;
    let mech = RotorMechanism::default_for(&g);
    let setup = RotorSetup::new(g, mech, DEFAULT_TOL)?;
    let rho = setup.rho_min().config;

    let rep = escape_sweep(
        &setup,
        &rho,
        "rho-min",
        &[10, 100, 1000],
        &RunOptions::default(),
    )?;
    println!("alpha {:.6}  rates {:?}", rep.alpha, rep.rates);
    print!("{}", save_edge_list(&setup.graph)?);
    Ok(())
}
