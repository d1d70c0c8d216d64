//! Solve the Green function on a few graphs and compare the escape
//! probability with a Monte Carlo estimate.
//!
//!     cargo run --release --example green_function

use rotor_escape::analysis::srw_escape_mc;
use rotor_escape::harmonic::DEFAULT_TOL;
use rotor_escape::{build_bary_tree, build_lattice_ball, build_path, solve_harmonic};

fn main() -> rotor_escape::Result<()> {
    let graphs = [
        build_path(3)?,
        build_lattice_ball(2, 10)?,
        build_lattice_ball(3, 8)?,
        build_bary_tree(2, 6)?,
    ];
    println!(
        "{:<22} {:>8} {:>10} {:>10} {:>10} {:>9}",
        "graph", "vertices", "G(o)", "alpha", "mc", "residual"
    );
    for g in &graphs {
        let p = solve_harmonic(g, DEFAULT_TOL)?;
        let mc = srw_escape_mc(g, 100_000, 1)?;
        println!(
            "{:<22} {:>8} {:>10.6} {:>10.6} {:>10.6} {:>9.1e}",
            g.descriptor(),
            g.num_vertices(),
            p.green(g.origin()),
            p.alpha(),
            mc.p,
            p.residual()
        );
    }
    Ok(())
}
