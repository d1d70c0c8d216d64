//! Build the weight-minimizing rotor configuration on the three-vertex path
//! and print the edge weights it was chosen from.
//!
//!     cargo run --example rho_min

use std::io;

use rotor_escape::harmonic::DEFAULT_TOL;
use rotor_escape::rotor::build_rho_max;
use rotor_escape::{build_path, RotorMechanism, RotorSetup};

fn main() -> rotor_escape::Result<()> {
    let g = build_path(3)?;
    let mech = RotorMechanism::default_for(&g);
    let setup = RotorSetup::new(g, mech, DEFAULT_TOL)?;

    setup
        .weights
        .write_csv(&setup.graph, &setup.mechanism, io::stdout())?;

    let rho = setup.rho_min();
    println!(
        "\nrho_min (ties {}, near ties {}):",
        rho.ties, rho.near_ties
    );
    rho.config.write_csv(&setup.graph, io::stdout())?;

    println!("\nrho_max:");
    build_rho_max(&setup.graph, &setup.weights).write_csv(&setup.graph, io::stdout())?;
    Ok(())
}
