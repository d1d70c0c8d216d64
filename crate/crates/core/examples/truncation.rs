//! How the escape probability of a lattice ball depends on its radius, in
//! one, two and three dimensions, and for both boundary constructions.
//!
//!     cargo run --release --example truncation

use rotor_escape::harmonic::DEFAULT_TOL;
use rotor_escape::{build_lattice_ball_with, solve_harmonic, LatticeBoundary};

fn main() -> rotor_escape::Result<()> {
    println!(
        "{:>2} {:>3} {:>12} {:>12}",
        "d", "R", "shared sink", "sink layer"
    );
    for d in 1..=3 {
        for r in [2, 5, 10, 20] {
            let mut row = Vec::new();
            for b in [LatticeBoundary::SharedSink, LatticeBoundary::SinkLayer] {
                let g = build_lattice_ball_with(d, r, b)?;
                row.push(solve_harmonic(&g, DEFAULT_TOL)?.alpha());
            }
            println!("{d:>2} {r:>3} {:>12.6} {:>12.6}", row[0], row[1]);
        }
    }
    Ok(())
}
