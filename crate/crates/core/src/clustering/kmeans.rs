use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::matrix::{squared_distance, Matrix};
use crate::error::{Error, Result};

pub const MAX_ITERATIONS: usize = 300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansFit {
    pub k: usize,
    pub assignments: Vec<usize>,
    pub centroids: Matrix,
    pub within_ss: f64,
    pub seed: u64,
    pub restarts: usize,
    /// Restart that produced this solution.
    pub best_restart: usize,
    pub iterations: usize,
    /// Objective after every Lloyd update of the winning restart.
    pub history: Vec<f64>,
}

impl KMeansFit {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

struct Run {
    assignments: Vec<usize>,
    centroids: Matrix,
    within_ss: f64,
    iterations: usize,
    history: Vec<f64>,
}

fn nearest(point: &[f64], centroids: &Matrix) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for c in 0..centroids.rows() {
        let d = squared_distance(point, centroids.row(c));
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn plus_plus_init(z: &Matrix, k: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let n = z.rows();
    let mut centroids = Matrix::zeros(k, z.cols());
    let first = rng.random_range(0..n);
    centroids.row_mut(0).copy_from_slice(z.row(first));
    let mut d2: Vec<f64> = (0..n).map(|i| squared_distance(z.row(i), z.row(first))).collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = None;
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 {
                    if target < d {
                        chosen = Some(i);
                        break;
                    }
                    target -= d;
                }
            }
            // Rounding can walk off the end; fall back to the last positive weight.
            chosen.unwrap_or_else(|| d2.iter().rposition(|&d| d > 0.0).expect("positive total"))
        } else {
            0
        };
        centroids.row_mut(c).copy_from_slice(z.row(pick));
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(squared_distance(z.row(i), z.row(pick)));
        }
    }
    centroids
}

fn update_centroids(z: &Matrix, assignments: &[usize], k: usize) -> Matrix {
    let mut sums = Matrix::zeros(k, z.cols());
    let mut counts = vec![0usize; k];
    for (i, &a) in assignments.iter().enumerate() {
        counts[a] += 1;
        for (s, x) in sums.row_mut(a).iter_mut().zip(z.row(i)) {
            *s += x;
        }
    }
    for (c, &count) in counts.iter().enumerate() {
        for s in sums.row_mut(c) {
            *s /= count as f64;
        }
    }
    sums
}

fn objective(z: &Matrix, assignments: &[usize], centroids: &Matrix) -> f64 {
    assignments
        .iter()
        .enumerate()
        .map(|(i, &a)| squared_distance(z.row(i), centroids.row(a)))
        .sum()
}

/// Assigns points to their nearest centroid, then moves the point farthest
/// from its centroid into each empty cluster.
fn assign(z: &Matrix, centroids: &Matrix, assignments: &mut [usize]) {
    let k = centroids.rows();
    let mut dist = vec![0.0; z.rows()];
    let mut counts = vec![0usize; k];
    for i in 0..z.rows() {
        let (c, d) = nearest(z.row(i), centroids);
        assignments[i] = c;
        dist[i] = d;
        counts[c] += 1;
    }
    for empty in 0..k {
        if counts[empty] > 0 {
            continue;
        }
        let donor = (0..z.rows())
            .filter(|&i| counts[assignments[i]] > 1)
            .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)))
            .expect("k <= n leaves a cluster with a spare point");
        counts[assignments[donor]] -= 1;
        assignments[donor] = empty;
        counts[empty] = 1;
        dist[donor] = 0.0;
    }
}

fn lloyd(z: &Matrix, k: usize, rng: &mut ChaCha8Rng) -> Run {
    let mut centroids = plus_plus_init(z, k, rng);
    let mut assignments = vec![usize::MAX; z.rows()];
    let mut history = Vec::new();
    let mut iterations = 0;
    loop {
        let previous = assignments.clone();
        assign(z, &centroids, &mut assignments);
        if assignments == previous {
            break;
        }
        centroids = update_centroids(z, &assignments, k);
        history.push(objective(z, &assignments, &centroids));
        iterations += 1;
        if iterations >= MAX_ITERATIONS {
            break;
        }
    }
    let within_ss = objective(z, &assignments, &centroids);
    Run {
        assignments,
        centroids,
        within_ss,
        iterations,
        history,
    }
}

/// Relabels clusters so centroids are in lexicographic order.
fn canonical(mut run: Run) -> Run {
    let k = run.centroids.rows();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| lex_cmp(run.centroids.row(a), run.centroids.row(b)));
    let mut relabel = vec![0; k];
    for (new, &old) in order.iter().enumerate() {
        relabel[old] = new;
    }
    let rows: Vec<Vec<f64>> = order.iter().map(|&c| run.centroids.row(c).to_vec()).collect();
    run.centroids = Matrix::from_rows(&rows).expect("rows share a width");
    for a in &mut run.assignments {
        *a = relabel[*a];
    }
    run
}

fn distinct_rows(sorted: &Matrix) -> usize {
    (0..sorted.rows())
        .filter(|&i| i == 0 || lex_cmp(sorted.row(i - 1), sorted.row(i)).is_ne())
        .count()
}

/// Best of `restarts` k-means++ seeded Lloyd runs.
///
/// Rows are processed in lexicographic order internally, so permuting the
/// input permutes the returned assignments and nothing else. Restart `r`
/// draws from stream `r` of a ChaCha generator seeded with `seed`; the
/// lowest within-cluster sum of squares wins, ties going to the earlier
/// restart.
pub fn kmeans(z: &Matrix, k: usize, seed: u64, restarts: usize) -> Result<KMeansFit> {
    let n = z.rows();
    if k == 0 || restarts == 0 {
        return Err(Error::InvalidArgument("k and restarts must be positive".into()));
    }
    if k > n {
        return Err(Error::InvalidArgument(format!("k = {k} exceeds the {n} rows")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| lex_cmp(z.row(a), z.row(b)).then(a.cmp(&b)));
    let sorted = Matrix::from_rows(&order.iter().map(|&i| z.row(i).to_vec()).collect::<Vec<_>>())?;
    let distinct = distinct_rows(&sorted);
    if distinct < k {
        return Err(Error::InvalidArgument(format!(
            "k = {k} exceeds the {distinct} distinct rows"
        )));
    }

    let runs: Vec<Run> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            canonical(lloyd(&sorted, k, &mut rng))
        })
        .collect();
    let (best_restart, best) = runs
        .into_iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| a.within_ss.total_cmp(&b.within_ss).then(ia.cmp(ib)))
        .expect("at least one restart");

    let mut assignments = vec![0; n];
    for (pos, &original) in order.iter().enumerate() {
        assignments[original] = best.assignments[pos];
    }
    Ok(KMeansFit {
        k,
        assignments,
        centroids: best.centroids,
        within_ss: best.within_ss,
        seed,
        restarts,
        best_restart,
        iterations: best.iterations,
        history: best.history,
    })
}
