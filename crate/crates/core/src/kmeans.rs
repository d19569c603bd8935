//! Lloyd's algorithm with k-means++ seeding over dense real vectors.
//!
//! Everything here is deterministic for a given `(points, k, seed)`: the seeding
//! RNG is ChaCha8 seeded from `seed`, points are visited in slice order, and
//! distance ties resolve to the lowest cluster index.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const MAX_ITERATIONS: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit<T> {
    pub centroids: Vec<Vec<T>>,
    pub labels: Vec<usize>,
    /// Number of update steps performed.
    pub iterations: usize,
    pub converged: bool,
    /// Total within-cluster squared distance: after seeding, then after each
    /// centroid update.
    pub cost_trace: Vec<T>,
}

impl<T: Scalar> KMeansFit<T> {
    pub fn cost(&self) -> T {
        *self.cost_trace.last().expect("trace holds the seeding cost")
    }
}

pub fn squared_distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = *x - *y;
            d * d
        })
        .fold(T::zero(), |acc, d| acc + d)
}

/// Index of the closest centroid; the lowest index wins on ties.
pub fn nearest<T: Scalar>(point: &[T], centroids: &[Vec<T>]) -> usize {
    let mut best = 0;
    let mut best_d = squared_distance(point, &centroids[0]);
    for (i, c) in centroids.iter().enumerate().skip(1) {
        let d = squared_distance(point, c);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

pub fn partition_cost<T: Scalar>(points: &[Vec<T>], labels: &[usize], centroids: &[Vec<T>]) -> T {
    points
        .iter()
        .zip(labels)
        .map(|(p, &l)| squared_distance(p, &centroids[l]))
        .fold(T::zero(), |acc, d| acc + d)
}

/// Number of pairwise-distinct points.
pub fn distinct_count<T: Scalar>(points: &[Vec<T>]) -> usize {
    let mut sorted: Vec<&Vec<T>> = points.iter().collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    sorted.dedup_by(|a, b| a == b);
    sorted.len()
}

fn assign<T: Scalar>(points: &[Vec<T>], centroids: &[Vec<T>]) -> Vec<usize> {
    points.iter().map(|p| nearest(p, centroids)).collect()
}

/// Arithmetic mean of each cluster's members. Empty clusters keep their old centroid.
fn means<T: Scalar>(points: &[Vec<T>], labels: &[usize], previous: &[Vec<T>]) -> Vec<Vec<T>> {
    let dim = previous[0].len();
    let mut sums = vec![vec![T::zero(); dim]; previous.len()];
    let mut counts = vec![0usize; previous.len()];
    for (p, &l) in points.iter().zip(labels) {
        counts[l] += 1;
        for (s, x) in sums[l].iter_mut().zip(p) {
            *s = *s + *x;
        }
    }
    sums.into_iter()
        .zip(counts)
        .zip(previous)
        .map(|((sum, n), old)| {
            if n == 0 {
                old.clone()
            } else {
                let n = T::from_count(n);
                sum.into_iter().map(|s| s / n).collect()
            }
        })
        .collect()
}

/// Moves the point farthest from its centroid into each empty cluster, drawing
/// only from clusters that keep at least one member.
fn reseed_empty<T: Scalar>(points: &[Vec<T>], labels: &mut [usize], centroids: &[Vec<T>]) {
    let k = centroids.len();
    loop {
        let mut counts = vec![0usize; k];
        for &l in labels.iter() {
            counts[l] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        let mut donor: Option<(usize, T)> = None;
        for (i, p) in points.iter().enumerate() {
            if counts[labels[i]] < 2 {
                continue;
            }
            let d = squared_distance(p, &centroids[labels[i]]);
            if donor.is_none_or(|(_, best)| d > best) {
                donor = Some((i, d));
            }
        }
        match donor {
            Some((i, _)) => labels[i] = empty,
            None => return,
        }
    }
}

fn plus_plus_seed<T: Scalar>(points: &[Vec<T>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<T>> {
    let n = points.len();
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.gen_range(0..n)].clone());
    let mut d2: Vec<f64> = points
        .iter()
        .map(|p| squared_distance(p, &centroids[0]).to_f64_lossy())
        .collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let target = rng.gen::<f64>() * total;
        let mut acc = 0.0;
        let mut chosen = None;
        for (i, &w) in d2.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            acc += w;
            if acc > target {
                chosen = Some(i);
                break;
            }
        }
        // rounding can leave `acc` a hair under `target`; fall back to the last candidate
        let chosen = chosen
            .or_else(|| d2.iter().rposition(|&w| w > 0.0))
            .expect("distinct points remain");
        let c = points[chosen].clone();
        for (w, p) in d2.iter_mut().zip(points) {
            *w = w.min(squared_distance(p, &c).to_f64_lossy());
        }
        centroids.push(c);
    }
    centroids
}

/// Fits `k` clusters to `points`.
///
/// Fails with [`Error::Infeasible`] when fewer than `k` distinct points exist.
pub fn fit<T: Scalar>(points: &[Vec<T>], k: usize, seed: u64, max_iterations: usize) -> Result<KMeansFit<T>> {
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    let distinct = distinct_count(points);
    if distinct < k {
        return Err(Error::Infeasible { k, distinct });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus_seed(points, k, &mut rng);
    let mut labels = assign(points, &centroids);
    let mut cost_trace = vec![partition_cost(points, &labels, &centroids)];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iterations {
        iterations += 1;
        reseed_empty(points, &mut labels, &centroids);
        centroids = means(points, &labels, &centroids);
        cost_trace.push(partition_cost(points, &labels, &centroids));
        let next = assign(points, &centroids);
        if next == labels {
            converged = true;
            break;
        }
        labels = next;
    }

    Ok(KMeansFit {
        centroids,
        labels,
        iterations,
        converged,
        cost_trace,
    })
}
