//! Seeded k-means with k-means++ initialisation and best-of-n restarts.

use rand::Rng;

const MAX_ITERATIONS: usize = 100;

#[derive(Clone, Debug)]
pub struct KMeansFit {
    pub centroids: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    pub inertia: f64,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest centroid; ties go to the lower index.
fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (k, c) in centroids.iter().enumerate() {
        let d = sq_dist(point, c);
        if d < best.1 {
            best = (k, d);
        }
    }
    best
}

fn plus_plus_init<R: Rng>(data: &[f64], dims: usize, k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let n = data.len() / dims;
    let row = |i: usize| &data[i * dims..(i + 1) * dims];
    let mut centroids = vec![row(rng.gen_range(0..n)).to_vec()];
    let mut dist: Vec<f64> = (0..n).map(|i| sq_dist(row(i), &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, &d) in dist.iter().enumerate() {
                acc += d;
                if acc > target && d > 0.0 {
                    chosen = i;
                    break;
                }
            }
            if dist[chosen] == 0.0 {
                // rounding pushed the draw past the last positive weight
                chosen = dist.iter().rposition(|&d| d > 0.0).unwrap_or(chosen);
            }
            chosen
        } else {
            rng.gen_range(0..n)
        };
        let c = row(pick).to_vec();
        for (i, d) in dist.iter_mut().enumerate() {
            *d = d.min(sq_dist(row(i), &c));
        }
        centroids.push(c);
    }
    centroids
}

fn lloyd(data: &[f64], dims: usize, mut centroids: Vec<Vec<f64>>) -> KMeansFit {
    let n = data.len() / dims;
    let k = centroids.len();
    let mut assignments = vec![usize::MAX; n];
    for _ in 0..MAX_ITERATIONS {
        let mut changed = false;
        for (i, slot) in assignments.iter_mut().enumerate() {
            let (best, _) = nearest(&data[i * dims..(i + 1) * dims], &centroids);
            if *slot != best {
                *slot = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; dims]; k];
        let mut sizes = vec![0usize; k];
        for (i, &a) in assignments.iter().enumerate() {
            sizes[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(&data[i * dims..(i + 1) * dims]) {
                *s += v;
            }
        }
        for ((c, s), &size) in centroids.iter_mut().zip(sums).zip(&sizes) {
            // empty clusters keep their previous centre
            if size > 0 {
                *c = s.into_iter().map(|v| v / size as f64).collect();
            }
        }
    }
    let inertia = assignments
        .iter()
        .enumerate()
        .map(|(i, &a)| sq_dist(&data[i * dims..(i + 1) * dims], &centroids[a]))
        .sum();
    KMeansFit {
        centroids,
        assignments,
        inertia,
    }
}

/// Best-inertia fit over `restarts` k-means++ initialisations.
pub fn kmeans<R: Rng>(
    data: &[f64],
    dims: usize,
    k: usize,
    restarts: usize,
    rng: &mut R,
) -> KMeansFit {
    let mut best: Option<KMeansFit> = None;
    for _ in 0..restarts.max(1) {
        let fit = lloyd(data, dims, plus_plus_init(data, dims, k, rng));
        if best.as_ref().is_none_or(|b| fit.inertia < b.inertia) {
            best = Some(fit);
        }
    }
    best.expect("at least one restart")
}
