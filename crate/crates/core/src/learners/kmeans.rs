//! Lloyd's k-means with k-means++ seeding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::LearnerError;

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let d = sq_dist(point, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn seed_centers(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centers = vec![points[rng.random_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random_range(0.0..total);
            let mut idx = points.len() - 1;
            for (i, d) in d2.iter().enumerate() {
                if *d > 0.0 && target < *d {
                    idx = i;
                    break;
                }
                target -= d;
            }
            // guard against landing on an already chosen point through rounding
            if d2[idx] == 0.0 {
                idx = d2.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map_or(0, |(i, _)| i);
            }
            idx
        } else {
            rng.random_range(0..points.len())
        };
        let c = points[pick].clone();
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &c));
        }
        centers.push(c);
    }
    centers
}

/// Cluster `points` into `k` centers.
///
/// Stops at an assignment fixpoint or after `max_iters` Lloyd iterations.
/// A cluster that empties is re-seeded with the point farthest from its own
/// center.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64, max_iters: usize) -> Result<Vec<Vec<f64>>, LearnerError> {
    if k == 0 || points.len() < k {
        return Err(LearnerError::TooFewPoints {
            points: points.len(),
            k,
        });
    }
    let dim = points[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = seed_centers(points, k, &mut rng);
    let mut assign = vec![usize::MAX; points.len()];

    for _ in 0..max_iters {
        let mut changed = false;
        for (p, point) in points.iter().enumerate() {
            let (c, _) = nearest(point, &centers);
            if assign[p] != c {
                assign[p] = c;
                changed = true;
            }
        }
        if !changed {
            break;
        }

        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (point, &c) in points.iter().zip(&assign) {
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(point) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let (far, dist) = points
                .iter()
                .enumerate()
                .map(|(p, point)| (p, sq_dist(point, &centers[assign[p]])))
                .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            centers[c] = points[far].clone();
            if dist > 0.0 {
                let old = assign[far];
                assign[far] = c;
                counts[old] -= 1;
                counts[c] = 1;
            }
        }
    }
    Ok(centers)
}
