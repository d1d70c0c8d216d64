//! Independent reference implementations used by the integration tests.
//! Nothing here calls into the solver or the experiment engine.

#![allow(dead_code)]

use rotor_escape::{Graph, RotorMechanism, VertexId};

/// Green function `G(x) = sum_t P^t(o, x)` of the walk killed at sinks,
/// solved from `(I - P)^T G = e_o` by dense Gaussian elimination with
/// partial pivoting. Sinks get 0.
pub fn dense_green(g: &Graph) -> Vec<f64> {
    let free: Vec<VertexId> = g.non_sinks().collect();
    let m = free.len();
    let slot = |v: VertexId| free.iter().position(|&f| f == v);
    // a[i][j] = (I - P)^T[i][j] = delta_ij - P(j, i)
    let mut a = vec![vec![0.0f64; m + 1]; m];
    for (i, row) in a.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for (j, &x) in free.iter().enumerate() {
        let p = 1.0 / g.degree(x) as f64;
        for &y in g.neighbors(x) {
            if let Some(i) = slot(y) {
                a[i][j] -= p;
            }
        }
    }
    a[slot(g.origin()).unwrap()][m] = 1.0;
    for col in 0..m {
        let pivot = (col..m)
            .max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        let prow = a[col].clone();
        for (r, row) in a.iter_mut().enumerate() {
            let f = row[col] / prow[col];
            if r != col && f != 0.0 {
                for (x, p) in row[col..].iter_mut().zip(&prow[col..]) {
                    *x -= f * p;
                }
            }
        }
    }
    let mut green = vec![0.0; g.num_vertices()];
    for (i, &x) in free.iter().enumerate() {
        green[x.index()] = a[i][m] / a[i][i];
    }
    green
}

/// Outcome of the brute-force simulator.
#[derive(Debug, Clone)]
pub struct BruteRun {
    pub survivors_by_time: Vec<usize>,
    pub range_by_time: Vec<Vec<usize>>,
    pub final_survivors: usize,
}

/// Literal transcription of the experiment recurrence. Keeps the full
/// position history and decides "has returned" from it, rather than from a
/// status flag. Stops once every particle has returned or sits at a sink.
pub fn brute_force_run(
    g: &Graph,
    mech: &RotorMechanism,
    rho0: &[usize],
    n: usize,
    max_steps: usize,
) -> BruteRun {
    let o = g.origin().index();
    let mut rho = rho0.to_vec();
    let mut history: Vec<Vec<usize>> = vec![vec![o; n]];
    let returned = |hist: &Vec<Vec<usize>>, i: usize| {
        let now = hist.last().unwrap()[i];
        now == o && hist[..hist.len() - 1].iter().any(|x| x[i] != o)
    };
    let count_survivors = |hist: &Vec<Vec<usize>>| (0..n).filter(|&i| !returned(hist, i)).count();
    let mut range = vec![o];
    let mut survivors_by_time = vec![n];
    let mut range_by_time = vec![range.clone()];
    for t in 0..max_steps {
        let cur = history.last().unwrap().clone();
        let done = (0..n).all(|i| returned(&history, i) || g.is_sink(VertexId(cur[i])));
        if done {
            break;
        }
        let it = (t + 1) % n;
        let mut next = cur.clone();
        let x = cur[it];
        if !returned(&history, it) && !g.is_sink(VertexId(x)) {
            let d = g.degree(VertexId(x));
            rho[x] = (rho[x] + 1) % d;
            next[it] = mech.order(VertexId(x))[rho[x]].index();
        }
        history.push(next);
        for &p in history.last().unwrap() {
            if !range.contains(&p) {
                range.push(p);
            }
        }
        let mut sorted = range.clone();
        sorted.sort();
        survivors_by_time.push(count_survivors(&history));
        range_by_time.push(sorted);
    }
    BruteRun {
        final_survivors: *survivors_by_time.last().unwrap(),
        survivors_by_time,
        range_by_time,
    }
}
