//! Green function of simple random walk killed at the sinks.
//!
//! We solve for the voltage form `h(x) = G(x) / deg(x)`, which satisfies
//!
//! ```text
//! (1/deg(x)) * sum_{y ~ x} h(y) = h(x) - 1{x = o} / deg(o)     for every non-sink x
//! h(s) = 0                                                     for every sink s
//! ```
//!
//! Multiplying through by `deg(x)` gives the Dirichlet Laplacian system
//! `deg(x) h(x) - sum_{y ~ x, y non-sink} h(y) = 1{x = o}`, which is
//! symmetric positive definite on the non-sink vertices. It is solved with
//! conjugate gradients; acceptance is judged on the max-norm residual of
//! the neighbour-average form above, not on the CG recursion.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Graph, VertexId};

pub const DEFAULT_TOL: f64 = 1e-12;

/// Per-trajectory step cap for Monte Carlo walks.
pub const DEFAULT_WALK_STEP_CAP: u64 = 100_000_000;

/// Walks per independent RNG stream in the Monte Carlo estimators.
pub(crate) const MC_BATCH: u64 = 1_000;

#[derive(Clone, Debug)]
pub struct HarmonicProfile {
    h: Vec<f64>,
    green: Vec<f64>,
    alpha: f64,
    residual: f64,
    iterations: usize,
}

impl HarmonicProfile {
    /// Wraps an externally computed `h`. Sink entries are forced to zero.
    pub fn from_h(g: &Graph, mut h: Vec<f64>) -> Result<Self> {
        if h.len() != g.num_vertices() {
            return Err(Error::DimensionMismatch {
                expected: g.num_vertices(),
                actual: h.len(),
            });
        }
        for s in g.sinks() {
            h[s.index()] = 0.0;
        }
        let green: Vec<f64> = g
            .vertices()
            .map(|x| h[x.index()] * g.degree(x) as f64)
            .collect();
        let alpha = 1.0 / green[g.origin().index()];
        let residual = residual(g, &h)?;
        Ok(HarmonicProfile {
            h,
            green,
            alpha,
            residual,
            iterations: 0,
        })
    }

    #[inline]
    pub fn h(&self, x: VertexId) -> f64 {
        self.h[x.index()]
    }

    pub fn h_values(&self) -> &[f64] {
        &self.h
    }

    #[inline]
    pub fn green(&self, x: VertexId) -> f64 {
        self.green[x.index()]
    }

    pub fn green_values(&self) -> &[f64] {
        &self.green
    }

    /// Escape probability `1 / G(o)`.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Max-norm defect of the neighbour-average equations.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// CG iterations used by [`solve_harmonic`] (0 for [`HarmonicProfile::from_h`]).
    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    /// CSV with columns `vertex_label, degree, h, green`.
    pub fn write_csv<W: Write>(&self, g: &Graph, out: W) -> Result<()> {
        #[derive(Serialize)]
        struct Row {
            vertex_label: i64,
            degree: usize,
            h: f64,
            green: f64,
        }
        let mut w = csv::Writer::from_writer(out);
        for x in g.vertices() {
            w.serialize(Row {
                vertex_label: g.label(x),
                degree: g.degree(x),
                h: self.h(x),
                green: self.green(x),
            })?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Max over non-sink `x` of `|(1/deg x) sum_{y~x} h(y) - h(x) + 1{x=o}/deg(o)|`.
pub fn residual(g: &Graph, h: &[f64]) -> Result<f64> {
    if h.len() != g.num_vertices() {
        return Err(Error::DimensionMismatch {
            expected: g.num_vertices(),
            actual: h.len(),
        });
    }
    let o = g.origin();
    let source = 1.0 / g.degree(o) as f64;
    let mut worst = 0.0f64;
    for x in g.non_sinks() {
        let avg = g.neighbors(x).iter().map(|y| h[y.index()]).sum::<f64>() / g.degree(x) as f64;
        let mut r = avg - h[x.index()];
        if x == o {
            r += source;
        }
        worst = worst.max(r.abs());
    }
    Ok(worst)
}

/// Solves for the harmonic profile to a max-norm residual of `tol`.
pub fn solve_harmonic(g: &Graph, tol: f64) -> Result<HarmonicProfile> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "tol must be positive, got {tol}"
        )));
    }
    let n = g.num_vertices();
    // compact indices over non-sink vertices
    let free: Vec<VertexId> = g.non_sinks().collect();
    let mut slot = vec![usize::MAX; n];
    for (k, v) in free.iter().enumerate() {
        slot[v.index()] = k;
    }
    let m = free.len();
    let rows: Vec<Vec<usize>> = free
        .iter()
        .map(|&x| {
            g.neighbors(x)
                .iter()
                .filter(|y| !g.is_sink(**y))
                .map(|y| slot[y.index()])
                .collect()
        })
        .collect();
    let diag: Vec<f64> = free.iter().map(|&x| g.degree(x) as f64).collect();
    let apply = |v: &[f64], out: &mut [f64]| {
        for k in 0..m {
            let off: f64 = rows[k].iter().map(|&j| v[j]).sum();
            out[k] = diag[k] * v[k] - off;
        }
    };
    let mut b = vec![0.0; m];
    b[slot[g.origin().index()]] = 1.0;

    let max_iter = 20 * m + 1_000;
    let mut x = vec![0.0; m];
    let mut r = b.clone();
    let mut p = r.clone();
    let mut ap = vec![0.0; m];
    let mut rr: f64 = r.iter().map(|v| v * v).sum();
    let mut iterations = 0;
    let mut full = vec![0.0; n];

    let scatter = |x: &[f64], full: &mut [f64]| {
        for (k, v) in free.iter().enumerate() {
            full[v.index()] = x[k];
        }
    };

    loop {
        // CG residual is in the deg-scaled form; divide by the degree to
        // compare against the neighbour-average form.
        let scaled = r
            .iter()
            .zip(&diag)
            .fold(0.0f64, |acc, (ri, d)| acc.max(ri.abs() / d));
        if scaled <= 0.1 * tol || rr == 0.0 {
            scatter(&x, &mut full);
            let res = residual(g, &full)?;
            if res <= tol {
                let mut profile = HarmonicProfile::from_h(g, full)?;
                profile.iterations = iterations;
                return Ok(profile);
            }
            // recursion drifted from the true residual: restart from x
            apply(&x, &mut ap);
            for k in 0..m {
                r[k] = b[k] - ap[k];
            }
            p.copy_from_slice(&r);
            rr = r.iter().map(|v| v * v).sum();
            if rr == 0.0 {
                return Err(Error::NonConvergence {
                    residual: res,
                    iterations,
                    tol,
                });
            }
        }
        if iterations >= max_iter {
            scatter(&x, &mut full);
            return Err(Error::NonConvergence {
                residual: residual(g, &full)?,
                iterations,
                tol,
            });
        }
        apply(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        let step = rr / pap;
        for k in 0..m {
            x[k] += step * p[k];
            r[k] -= step * ap[k];
        }
        let rr_next: f64 = r.iter().map(|v| v * v).sum();
        let beta = rr_next / rr;
        for k in 0..m {
            p[k] = r[k] + beta * p[k];
        }
        rr = rr_next;
        iterations += 1;
    }
}

/// Monte Carlo estimate of the Green function with per-vertex standard errors.
#[derive(Clone, Debug, PartialEq)]
pub struct GreenEstimate {
    pub walks: u64,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
}

/// RNG for batch `batch` of a seeded ensemble. Each batch owns an
/// independent ChaCha stream, so results do not depend on how batches are
/// scheduled across threads.
pub(crate) fn batch_rng(seed: u64, batch: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch);
    rng
}

/// Splits `total` items into [`MC_BATCH`]-sized `(batch index, count)` chunks.
pub(crate) fn batches(total: u64) -> Vec<(u64, u64)> {
    (0..total.div_ceil(MC_BATCH))
        .map(|b| (b, MC_BATCH.min(total - b * MC_BATCH)))
        .collect()
}

/// Mean visit counts of `walks` simple random walks from the origin, each
/// run until it is absorbed. The starting position counts as a visit; the
/// absorbing sink visit does not, so sink estimates are always zero.
pub fn mc_green(g: &Graph, walks: u64, seed: u64) -> Result<GreenEstimate> {
    mc_green_capped(g, walks, seed, DEFAULT_WALK_STEP_CAP)
}

pub fn mc_green_capped(g: &Graph, walks: u64, seed: u64, step_cap: u64) -> Result<GreenEstimate> {
    if walks == 0 {
        return Err(Error::InvalidParameter("walks must be >= 1".into()));
    }
    let n = g.num_vertices();
    let partials = batches(walks)
        .into_par_iter()
        .map(|(batch, count)| {
            let mut rng = batch_rng(seed, batch);
            let mut sum = vec![0u64; n];
            let mut sum_sq = vec![0u128; n];
            let mut visits = vec![0u64; n];
            let mut touched = Vec::new();
            for _ in 0..count {
                let mut x = g.origin();
                let mut steps = 0u64;
                while !g.is_sink(x) {
                    if visits[x.index()] == 0 {
                        touched.push(x.index());
                    }
                    visits[x.index()] += 1;
                    let nbrs = g.neighbors(x);
                    x = nbrs[rng.random_range(0..nbrs.len())];
                    steps += 1;
                    if steps > step_cap {
                        return Err(Error::AbortedMaxSteps { steps });
                    }
                }
                for &v in &touched {
                    let c = visits[v];
                    sum[v] += c;
                    sum_sq[v] += (c as u128) * (c as u128);
                    visits[v] = 0;
                }
                touched.clear();
            }
            Ok((sum, sum_sq))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut sum = vec![0u64; n];
    let mut sum_sq = vec![0u128; n];
    for (s, sq) in partials {
        for v in 0..n {
            sum[v] += s[v];
            sum_sq[v] += sq[v];
        }
    }
    let w = walks as f64;
    let mean: Vec<f64> = sum.iter().map(|&s| s as f64 / w).collect();
    let stderr = (0..n)
        .map(|v| {
            if walks < 2 {
                return 0.0;
            }
            let var = (sum_sq[v] as f64 - w * mean[v] * mean[v]) / (w - 1.0);
            (var.max(0.0) / w).sqrt()
        })
        .collect();
    Ok(GreenEstimate {
        walks,
        mean,
        stderr,
    })
}
