mod common;

use common::{brute_force_run, dense_green};
use rotor_escape::harmonic::DEFAULT_TOL;
use rotor_escape::{
    build_bary_tree, build_lattice_ball, build_lattice_ball_with, build_path, build_star,
    random_config, solve_harmonic, Experiment, LatticeBoundary, RotorConfig, RotorMechanism,
    RotorSetup,
};

#[test]
fn green_matches_dense_elimination() {
    let graphs = [
        build_path(3).unwrap(),
        build_path(7).unwrap(),
        build_star(3).unwrap(),
        build_lattice_ball(1, 6).unwrap(),
        build_lattice_ball(2, 4).unwrap(),
        build_lattice_ball(3, 3).unwrap(),
        build_lattice_ball_with(3, 3, LatticeBoundary::SinkLayer).unwrap(),
        build_bary_tree(2, 5).unwrap(),
        build_bary_tree(3, 3).unwrap(),
    ];
    for g in &graphs {
        let exact = dense_green(g);
        let p = solve_harmonic(g, DEFAULT_TOL).unwrap();
        for v in g.vertices() {
            let diff = (p.green(v) - exact[v.index()]).abs();
            assert!(diff < 1e-10, "{} vertex {v}: {diff}", g.descriptor());
        }
    }
}

#[test]
fn p3_green_by_hand() {
    // G(o) = 1 + G(o)/2 from o -> a -> {o, s}: G(o) = 2, and G(a) = G(o)
    let g = build_path(3).unwrap();
    assert_eq!(dense_green(&g), vec![2.0, 2.0, 0.0]);
}

#[test]
fn z2_ball_point_count() {
    let enumerated = (-5i64..=5)
        .flat_map(|x| (-5i64..=5).map(move |y| (x, y)))
        .filter(|(x, y)| x.abs() + y.abs() <= 5)
        .count();
    assert_eq!(enumerated, 61);
    assert_eq!(
        build_lattice_ball(2, 5).unwrap().num_vertices(),
        enumerated + 1
    );
}

#[test]
fn p3_rho_min_matches_brute_force_for_even_n() {
    let g = build_path(3).unwrap();
    let m = RotorMechanism::default_for(&g);
    let setup = RotorSetup::new(g.clone(), m.clone(), DEFAULT_TOL).unwrap();
    let rho = setup.rho_min().config;
    for k in 1..=8 {
        let n = 2 * k;
        let brute = brute_force_run(&g, &m, rho.positions(), n, 10_000);
        assert_eq!(brute.final_survivors, k);

        let mut exp = Experiment::new(&g, &m, rho.clone(), n).unwrap();
        exp.run_until_settled(10_000).unwrap();
        assert_eq!(exp.survivors(), k, "n = {n}");
    }
}

#[test]
fn p3_survivor_and_range_sequence() {
    let g = build_path(3).unwrap();
    let m = RotorMechanism::default_for(&g);
    let setup = RotorSetup::new(g.clone(), m.clone(), DEFAULT_TOL).unwrap();
    let rho = setup.rho_min().config;
    let brute = brute_force_run(&g, &m, rho.positions(), 2, 100);
    assert_eq!(brute.survivors_by_time, vec![2, 2, 2, 2, 1]);
    assert_eq!(
        brute.range_by_time,
        vec![
            vec![0],
            vec![0, 1],
            vec![0, 1],
            vec![0, 1, 2],
            vec![0, 1, 2]
        ]
    );

    let mut exp = Experiment::new(&g, &m, rho, 2).unwrap();
    let mut survivors = vec![exp.survivors()];
    let mut ranges = vec![sorted(exp.range())];
    exp.run_until_settled_with(100, |e, _| {
        survivors.push(e.survivors());
        ranges.push(sorted(e.range()));
    })
    .unwrap();
    assert_eq!(survivors, brute.survivors_by_time);
    assert_eq!(ranges, brute.range_by_time);
}

fn sorted(r: &[rotor_escape::VertexId]) -> Vec<usize> {
    let mut v: Vec<usize> = r.iter().map(|x| x.index()).collect();
    v.sort();
    v
}

#[test]
fn engine_matches_brute_force_on_assorted_cases() {
    let graphs = [
        build_path(5).unwrap(),
        build_star(3).unwrap(),
        build_lattice_ball(2, 2).unwrap(),
        build_bary_tree(2, 3).unwrap(),
    ];
    for g in &graphs {
        for mseed in 0..3 {
            let m = RotorMechanism::shuffled(g, mseed);
            for cseed in 0..4 {
                let rho = random_config(g, cseed);
                for n in [1, 2, 3, 7] {
                    let brute = brute_force_run(g, &m, rho.positions(), n, 100_000);
                    let mut exp = Experiment::new(g, &m, rho.clone(), n).unwrap();
                    let mut survivors = vec![exp.survivors()];
                    exp.run_until_settled_with(100_000, |e, _| survivors.push(e.survivors()))
                        .unwrap();
                    assert_eq!(survivors, brute.survivors_by_time, "{}", g.descriptor());
                }
            }
        }
    }
}

#[test]
fn p2_everyone_escapes_for_any_rotor() {
    let g = build_path(2).unwrap();
    let m = RotorMechanism::default_for(&g);
    for n in [1, 4, 9] {
        let brute = brute_force_run(&g, &m, RotorConfig::zeros(&g).positions(), n, 100);
        assert_eq!(brute.final_survivors, n);
    }
}
