//! Lloyd's k-means with seeded k-means++ initialization (Euclidean).

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Purpose};

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Sum of squared distances to the assigned centroid after each
    /// assignment step.
    pub objective: Vec<f64>,
    pub iterations: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = sq_dist(point, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn check_points(points: &[Vec<f64>], k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::argument("k must be at least 1"));
    }
    if points.len() < k {
        return Err(Error::argument(format!("{} points cannot form {k} clusters", points.len())));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::argument("points have differing dimensions"));
    }
    if points.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::argument("points must be finite"));
    }
    Ok(())
}

/// k-means++ seeding: first center uniform, then each next center drawn with
/// probability proportional to squared distance from the chosen ones.
pub fn kmeans_plus_plus(points: &[Vec<f64>], k: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    check_points(points, k)?;
    let mut rng = stream_rng(seed, Purpose::KMeansInit, 0);
    let mut centroids = vec![points[rng.random_range(0..points.len())].clone()];
    let mut dist: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = dist.iter().sum();
        let idx = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = dist.iter().rposition(|&d| d > 0.0).unwrap_or(0);
            for (i, &d) in dist.iter().enumerate() {
                if d > 0.0 && target < d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            pick
        } else {
            // every point coincides with a center already
            rng.random_range(0..points.len())
        };
        let c = points[idx].clone();
        for (d, p) in dist.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &c));
        }
        centroids.push(c);
    }
    Ok(centroids)
}

/// Lloyd iterations from explicit initial centroids.
///
/// Stops when no centroid moves by more than `tol` (Euclidean) or after
/// `max_iter` update steps. An empty cluster keeps its previous centroid.
/// The returned assignments are nearest-centroid for the returned centroids.
pub fn lloyd(points: &[Vec<f64>], init: Vec<Vec<f64>>, max_iter: usize, tol: f64) -> Result<KMeansResult> {
    check_points(points, init.len())?;
    let k = init.len();
    let dim = points[0].len();
    let mut centroids = init;
    let mut objective = Vec::new();
    let mut iterations = 0;

    let assign = |centroids: &[Vec<f64>]| {
        let mut sse = 0.0;
        let a: Vec<usize> = points
            .iter()
            .map(|p| {
                let (c, d) = nearest(p, centroids);
                sse += d;
                c
            })
            .collect();
        (a, sse)
    };

    let (mut assignments, sse) = assign(&centroids);
    objective.push(sse);
    while iterations < max_iter {
        iterations += 1;
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.iter().zip(&assignments) {
            counts[c] += 1;
            for (s, x) in sums[c].iter_mut().zip(p) {
                *s += x;
            }
        }
        let mut shift: f64 = 0.0;
        for c in 0..k {
            if counts[c] == 0 {
                continue;
            }
            let updated: Vec<f64> = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            shift = shift.max(sq_dist(&updated, &centroids[c]).sqrt());
            centroids[c] = updated;
        }
        let (a, sse) = assign(&centroids);
        assignments = a;
        objective.push(sse);
        if shift <= tol {
            break;
        }
    }
    Ok(KMeansResult {
        assignments,
        centroids,
        objective,
        iterations,
    })
}

pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64, max_iter: usize, tol: f64) -> Result<KMeansResult> {
    let init = kmeans_plus_plus(points, k, seed)?;
    lloyd(points, init, max_iter, tol)
}
