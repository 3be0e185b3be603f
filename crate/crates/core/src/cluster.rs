//! Row clustering of spectral embeddings: K-means (squared Euclidean) and
//! K-median (Euclidean, geometric-median centres), each seeded by
//! D^p-weighted sampling and refined by alternating assignment and centre
//! updates, best of several restarts.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::linalg::{distance, squared_distance, DenseMatrix};
use crate::rng;

/// Rows with Euclidean norm at or below this are treated as zero.
pub const ZERO_ROW_TOL: f64 = 1e-12;
const MAX_ALTERNATIONS: usize = 1000;
const WEISZFELD_TOL: f64 = 1e-9;
const WEISZFELD_MAX_STEPS: usize = 200;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClusterError {
    #[error("cannot form {k} clusters from {m} points")]
    DegenerateInput { m: usize, k: usize },
}

#[derive(Clone, Debug)]
pub struct RowClustering {
    /// Cluster index of each row.
    pub assign: Vec<usize>,
    /// `k x d` centres.
    pub centers: DenseMatrix,
    /// Sum of squared distances (K-means) or of distances (K-median).
    pub objective: f64,
    /// Empty-cluster repairs performed in the winning restart.
    pub repairs: usize,
    /// Alternation steps of the winning restart.
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Metric {
    SquaredEuclidean,
    Euclidean,
}

impl Metric {
    fn cost(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::SquaredEuclidean => squared_distance(a, b),
            Metric::Euclidean => distance(a, b),
        }
    }
}

/// Best-of-`restarts` K-means: K-means++ seeding followed by Lloyd steps.
pub fn approx_kmeans(
    rows: &DenseMatrix,
    k: usize,
    restarts: usize,
    seed: u64,
) -> Result<RowClustering, ClusterError> {
    best_of(rows, k, restarts, seed, Metric::SquaredEuclidean)
}

/// Best-of-`restarts` K-median: D-weighted seeding followed by alternating
/// assignment and Weiszfeld geometric-median updates.
pub fn approx_kmedian(
    rows: &DenseMatrix,
    k: usize,
    restarts: usize,
    seed: u64,
) -> Result<RowClustering, ClusterError> {
    best_of(rows, k, restarts, seed, Metric::Euclidean)
}

/// Scales each row with norm above [`ZERO_ROW_TOL`] to unit length and
/// drops the rest; returns the normalised rows and their original indices.
pub fn normalize_rows(u: &DenseMatrix) -> (DenseMatrix, Vec<usize>) {
    let nonzero: Vec<usize> = (0..u.rows())
        .filter(|&i| crate::linalg::norm2(u.row(i)) > ZERO_ROW_TOL)
        .collect();
    let mut out = DenseMatrix::zeros(nonzero.len(), u.cols());
    for (r, &i) in nonzero.iter().enumerate() {
        let norm = crate::linalg::norm2(u.row(i));
        for (o, x) in out.row_mut(r).iter_mut().zip(u.row(i)) {
            *o = x / norm;
        }
    }
    (out, nonzero)
}

/// Recomputes the objective of an assignment against given centres.
pub fn kmeans_objective(rows: &DenseMatrix, assign: &[usize], centers: &DenseMatrix) -> f64 {
    objective(rows, assign, centers, Metric::SquaredEuclidean)
}

pub fn kmedian_objective(rows: &DenseMatrix, assign: &[usize], centers: &DenseMatrix) -> f64 {
    objective(rows, assign, centers, Metric::Euclidean)
}

fn objective(rows: &DenseMatrix, assign: &[usize], centers: &DenseMatrix, metric: Metric) -> f64 {
    assign
        .iter()
        .enumerate()
        .map(|(i, &c)| metric.cost(rows.row(i), centers.row(c)))
        .sum()
}

fn best_of(
    rows: &DenseMatrix,
    k: usize,
    restarts: usize,
    seed: u64,
    metric: Metric,
) -> Result<RowClustering, ClusterError> {
    let m = rows.rows();
    if k == 0 || m < k {
        return Err(ClusterError::DegenerateInput { m, k });
    }
    let mut best: Option<RowClustering> = None;
    for r in 0..restarts.max(1) {
        let mut rng = rng::stream(seed, rng::CLUSTER_STREAM_BASE + r as u64);
        let centers = seed_centers(rows, k, metric, &mut rng);
        let run = alternate(rows, centers, metric);
        if best.as_ref().is_none_or(|b| run.objective < b.objective) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// K-means++ style seeding: each new centre is a data row drawn with
/// probability proportional to its current cost to the nearest centre.
fn seed_centers<R: Rng>(rows: &DenseMatrix, k: usize, metric: Metric, rng: &mut R) -> DenseMatrix {
    let m = rows.rows();
    let mut centers = DenseMatrix::zeros(k, rows.cols());
    let first = rng.random_range(0..m);
    centers.row_mut(0).copy_from_slice(rows.row(first));
    let mut nearest: Vec<f64> = (0..m).map(|i| metric.cost(rows.row(i), rows.row(first))).collect();
    for c in 1..k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = m - 1;
            for (i, w) in nearest.iter().enumerate() {
                acc += w;
                if acc > target && *w > 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..m)
        };
        centers.row_mut(c).copy_from_slice(rows.row(pick));
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(metric.cost(rows.row(i), rows.row(pick)));
        }
    }
    centers
}

fn nearest_center(point: &[f64], centers: &DenseMatrix, metric: Metric) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for c in 0..centers.rows() {
        let d = metric.cost(point, centers.row(c));
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn alternate(rows: &DenseMatrix, mut centers: DenseMatrix, metric: Metric) -> RowClustering {
    let m = rows.rows();
    let k = centers.rows();
    let mut state: Option<RowClustering> = None;
    let mut repairs = 0;
    let mut settled = true;

    for iteration in 1..=MAX_ALTERNATIONS {
        let mut assign = vec![0usize; m];
        let mut cost = vec![0.0; m];
        for i in 0..m {
            let (c, d) = nearest_center(rows.row(i), &centers, metric);
            assign[i] = c;
            cost[i] = d;
        }
        let assigned_objective: f64 = cost.iter().sum();
        if let Some(prev) = &state {
            let slack = 1e-12 * prev.objective.abs();
            // an unsettled median update keeps going from where it stopped
            if assigned_objective >= prev.objective - slack && settled {
                break;
            }
        }

        // Refill empty clusters with the row farthest from its centre.
        let mut sizes = vec![0usize; k];
        for &c in &assign {
            sizes[c] += 1;
        }
        for c in 0..k {
            if sizes[c] > 0 {
                continue;
            }
            let far = (0..m)
                .filter(|&i| sizes[assign[i]] > 1)
                .fold(None::<usize>, |best, i| match best {
                    Some(b) if cost[b] >= cost[i] => Some(b),
                    _ => Some(i),
                })
                .expect("m >= k leaves a cluster with two rows");
            sizes[assign[far]] -= 1;
            assign[far] = c;
            cost[far] = 0.0;
            sizes[c] = 1;
            centers.row_mut(c).copy_from_slice(rows.row(far));
            repairs += 1;
        }

        settled = update_centers(rows, &assign, &mut centers, metric);
        let obj = objective(rows, &assign, &centers, metric);
        if let Some(prev) = &state {
            debug_assert!(
                obj <= prev.objective * (1.0 + 1e-9) + 1e-12,
                "objective increased: {} -> {}",
                prev.objective,
                obj
            );
        }
        state = Some(RowClustering {
            assign,
            centers: centers.clone(),
            objective: obj,
            repairs,
            iterations: iteration,
        });
    }
    state.expect("at least one alternation")
}

/// Returns false if some geometric median hit the step cap.
fn update_centers(
    rows: &DenseMatrix,
    assign: &[usize],
    centers: &mut DenseMatrix,
    metric: Metric,
) -> bool {
    let mut settled = true;
    let k = centers.rows();
    let d = rows.cols();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &c) in assign.iter().enumerate() {
        members[c].push(i);
    }
    for (c, idx) in members.iter().enumerate() {
        if idx.is_empty() {
            continue;
        }
        match metric {
            Metric::SquaredEuclidean => {
                let mut mean = vec![0.0; d];
                for &i in idx {
                    for (s, x) in mean.iter_mut().zip(rows.row(i)) {
                        *s += x;
                    }
                }
                let inv = 1.0 / idx.len() as f64;
                for (o, s) in centers.row_mut(c).iter_mut().zip(&mean) {
                    *o = s * inv;
                }
            }
            Metric::Euclidean => {
                let points: Vec<&[f64]> = idx.iter().map(|&i| rows.row(i)).collect();
                let (median, done) = weiszfeld(&points, centers.row(c));
                settled &= done;
                centers.row_mut(c).copy_from_slice(&median);
            }
        }
    }
    settled
}

fn sum_distances(points: &[&[f64]], y: &[f64]) -> f64 {
    points.iter().map(|p| distance(p, y)).sum()
}

/// Weiszfeld iteration with the Vardi-Zhang correction for iterates that
/// land on a data point. Starts from `start` and never returns a point
/// with a larger sum of distances than `start`.
pub fn geometric_median(points: &[&[f64]], start: &[f64]) -> Vec<f64> {
    weiszfeld(points, start).0
}

/// Also reports whether the iteration settled before the step cap.
fn weiszfeld(points: &[&[f64]], start: &[f64]) -> (Vec<f64>, bool) {
    let d = start.len();
    let mut y = start.to_vec();
    let mut cost = sum_distances(points, &y);
    let mut settled = false;
    for _ in 0..WEISZFELD_MAX_STEPS {
        let mut num = vec![0.0; d];
        let mut weight = 0.0;
        let mut coincident = 0usize;
        let mut pull = vec![0.0; d];
        for p in points {
            let dist = distance(p, &y);
            if dist <= 1e-14 {
                coincident += 1;
                continue;
            }
            let w = 1.0 / dist;
            weight += w;
            for t in 0..d {
                num[t] += p[t] * w;
                pull[t] += (p[t] - y[t]) * w;
            }
        }
        if weight == 0.0 {
            settled = true;
            break;
        }
        let weiszfeld: Vec<f64> = num.iter().map(|v| v / weight).collect();
        let next = if coincident == 0 {
            weiszfeld
        } else {
            let r = crate::linalg::norm2(&pull);
            let eta = coincident as f64;
            if r <= eta {
                // the coincident data point is itself optimal
                settled = true;
                break;
            }
            let beta = eta / r;
            weiszfeld
                .iter()
                .zip(&y)
                .map(|(t, yy)| (1.0 - beta) * t + beta * yy)
                .collect()
        };
        let next_cost = sum_distances(points, &next);
        if next_cost > cost {
            settled = true;
            break;
        }
        let step = distance(&next, &y);
        y = next;
        cost = next_cost;
        if step <= WEISZFELD_TOL {
            settled = true;
            break;
        }
    }
    // Iterates creep towards an optimal data point without reaching it.
    let nearest = points
        .iter()
        .min_by(|a, b| distance(a, &y).total_cmp(&distance(b, &y)));
    if let Some(x) = nearest {
        if is_optimal_data_point(points, x) && sum_distances(points, x) <= cost {
            return (x.to_vec(), true);
        }
    }
    (y, settled)
}

/// A data point `x` is a geometric median iff the unit vectors towards the
/// other points sum to a vector no longer than the multiplicity of `x`.
fn is_optimal_data_point(points: &[&[f64]], x: &[f64]) -> bool {
    let mut pull = vec![0.0; x.len()];
    let mut multiplicity = 0.0;
    for p in points {
        let dist = distance(p, x);
        if dist <= 1e-14 {
            multiplicity += 1.0;
            continue;
        }
        for t in 0..x.len() {
            pull[t] += (p[t] - x[t]) / dist;
        }
    }
    crate::linalg::norm2(&pull) <= multiplicity
}
