//! Node clustering: line k-means on latent directions, plus spectral
//! baselines on the clique expansion of a hypergraph.
//!
//! Estimated directions live on the unit sphere and are only identified up to
//! sign, so `v` and `-v` must land in the same cluster. Line k-means clusters
//! lines through the origin: assignment maximizes the squared cosine
//! `(v·c)^2` and the centroid update takes the leading eigenvector of the
//! cluster's second-moment matrix (the axial mean), which keeps the
//! within-cluster cost `Σ (1 - (v·c)^2)` nonincreasing.
//!
//! The baselines operate on the weighted co-occurrence graph: regularized
//! normalized spectral clustering (small-eigenvalue eigenvectors of the
//! regularized symmetric Laplacian, rows normalized) and a SCORE variant
//! (leading adjacency eigenvectors divided by their row norms to cancel
//! degree heterogeneity).

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::consts::{ROW_NORM_TOL, ZERO_EMBED_TOL};
use crate::error::{Error, Result};
use crate::kernel::Hypergraph;

/// Pairwise co-occurrence weights; symmetric, nonnegative, zero diagonal.
#[derive(Debug, Clone)]
pub struct WeightedAdjacency {
    matrix: DMatrix<f64>,
}

impl WeightedAdjacency {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                got: matrix.ncols(),
            });
        }
        for i in 0..matrix.nrows() {
            if matrix[(i, i)] != 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "adjacency diagonal must be zero, got {} at {i}",
                    matrix[(i, i)]
                )));
            }
            for j in 0..matrix.ncols() {
                if matrix[(i, j)] < 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "adjacency weights must be nonnegative, got {} at ({i},{j})",
                        matrix[(i, j)]
                    )));
                }
                if (matrix[(i, j)] - matrix[(j, i)]).abs() > 1e-12 {
                    return Err(Error::InvalidArgument(format!(
                        "adjacency not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn n_nodes(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn degrees(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.matrix.nrows(),
            self.matrix.row_iter().map(|r| r.sum()),
        )
    }
}

/// Dyadic projection: `A_ij` counts the hyperedges containing both `i` and
/// `j`, with multiplicity. Singleton and empty edges contribute nothing.
pub fn clique_expansion(h: &Hypergraph) -> WeightedAdjacency {
    let n = h.n_nodes();
    let mut matrix = DMatrix::zeros(n, n);
    for edge in h.edges() {
        for (a, &i) in edge.iter().enumerate() {
            for &j in &edge[a + 1..] {
                matrix[(i, j)] += 1.0;
                matrix[(j, i)] += 1.0;
            }
        }
    }
    WeightedAdjacency { matrix }
}

/// Options for [`line_kmeans`].
#[derive(Debug, Clone)]
pub struct LineKmeansOptions {
    pub n_starts: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for LineKmeansOptions {
    fn default() -> Self {
        Self {
            n_starts: 10,
            max_iters: 300,
            tol: 1e-10,
            seed: 0,
        }
    }
}

/// Clusters unit vectors up to sign: maximizes `(v·c_j)^2` per assignment and
/// updates each centroid to the leading eigenvector of its cluster's second
/// moment. A cluster that empties is re-seeded with the currently worst-fit
/// point. Best of `n_starts` restarts by within-cluster cost; ties in
/// assignment go to the lowest cluster index.
pub fn line_kmeans(
    directions: &DMatrix<f64>,
    k: usize,
    opts: &LineKmeansOptions,
) -> Result<Vec<usize>> {
    let n = directions.nrows();
    let d = directions.ncols();
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if k > n {
        return Err(Error::InvalidArgument(format!(
            "k = {k} exceeds number of points {n}"
        )));
    }
    for i in 0..n {
        if (directions.row(i).norm() - 1.0).abs() > ROW_NORM_TOL {
            return Err(Error::InvalidArgument(format!(
                "row {i} is not unit norm"
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best: Option<(f64, Vec<usize>)> = None;
    for _ in 0..opts.n_starts {
        let (cost, labels) = line_kmeans_once(directions, k, d, opts, &mut rng);
        if best.as_ref().map_or(true, |(c, _)| cost < *c) {
            best = Some((cost, labels));
        }
    }
    Ok(best.unwrap().1)
}

fn line_distance(point: &DVector<f64>, centroid: &DVector<f64>) -> f64 {
    let dot = point.dot(centroid);
    1.0 - dot * dot
}

fn line_kmeans_once(
    directions: &DMatrix<f64>,
    k: usize,
    d: usize,
    opts: &LineKmeansOptions,
    rng: &mut ChaCha8Rng,
) -> (f64, Vec<usize>) {
    let n = directions.nrows();
    let rows: Vec<DVector<f64>> = (0..n)
        .map(|i| directions.row(i).transpose().into_owned())
        .collect();

    // Seeding in the k-means++ style, with the line distance.
    let mut centroids: Vec<DVector<f64>> = Vec::with_capacity(k);
    centroids.push(rows[rng.random_range(0..n)].clone());
    while centroids.len() < k {
        let dists: Vec<f64> = rows
            .iter()
            .map(|p| {
                centroids
                    .iter()
                    .map(|c| line_distance(p, c))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let total: f64 = dists.iter().sum();
        let next = if total <= 0.0 {
            rng.random_range(0..n)
        } else {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in dists.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        };
        centroids.push(rows[next].clone());
    }

    let mut labels = vec![0usize; n];
    let mut prev_cost = f64::INFINITY;
    for _ in 0..opts.max_iters {
        // Assignment: highest squared cosine, lowest index on ties.
        for (i, p) in rows.iter().enumerate() {
            let mut best_j = 0;
            let mut best_val = -1.0;
            for (j, c) in centroids.iter().enumerate() {
                let dot = p.dot(c);
                let val = dot * dot;
                if val > best_val {
                    best_val = val;
                    best_j = j;
                }
            }
            labels[i] = best_j;
        }

        // Axial-mean update: leading eigenvector of the cluster scatter.
        for j in 0..k {
            let members: Vec<usize> = (0..n).filter(|&i| labels[i] == j).collect();
            if members.is_empty() {
                // Re-seed with the worst-fit point.
                let worst = (0..n)
                    .max_by(|&a, &b| {
                        line_distance(&rows[a], &centroids[labels[a]])
                            .total_cmp(&line_distance(&rows[b], &centroids[labels[b]]))
                    })
                    .unwrap();
                centroids[j] = rows[worst].clone();
                labels[worst] = j;
                continue;
            }
            let mut scatter = DMatrix::zeros(d, d);
            for &i in &members {
                scatter += &rows[i] * rows[i].transpose();
            }
            let eig = scatter.symmetric_eigen();
            let lead = eig
                .eigenvalues
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(idx, _)| idx)
                .unwrap();
            centroids[j] = eig.eigenvectors.column(lead).into_owned();
        }

        let cost: f64 = rows
            .iter()
            .zip(&labels)
            .map(|(p, &j)| line_distance(p, &centroids[j]))
            .sum();
        if prev_cost - cost < opts.tol {
            prev_cost = cost.min(prev_cost);
            break;
        }
        prev_cost = cost;
    }
    (prev_cost, labels)
}

/// Regularized normalized spectral clustering on a weighted graph.
///
/// Degrees are regularized to `d_i + tau * mean(d)` and the graph is
/// normalized to `S = D_reg^{-1/2} A D_reg^{-1/2}`. The embedding is the `k`
/// eigenvectors of `S` with largest eigenvalue magnitude — equivalently the
/// normalized-Laplacian eigenvalues farthest from 1 — row-normalized and
/// clustered with Euclidean k-means. Selecting by magnitude matters here:
/// co-occurrence graphs produced by a diversity-driven model are
/// disassortative (nodes of the same cluster rarely co-occur), which puts
/// the informative eigenvalues at the negative end where a smallest-
/// eigenvalue rule would miss assortative blocks and a bottom-Laplacian rule
/// would miss these. A node with zero regularized degree keeps a zero
/// embedding row and is assigned to the centroid nearest the origin.
pub fn nsc(adj: &WeightedAdjacency, k: usize, tau: f64, seed: u64) -> Result<Vec<usize>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if tau < 0.0 {
        return Err(Error::InvalidArgument("tau must be nonnegative".into()));
    }
    let n = adj.n_nodes();
    if k > n {
        return Err(Error::InvalidArgument(format!(
            "k = {k} exceeds number of nodes {n}"
        )));
    }
    let degrees = adj.degrees();
    let mean_degree = degrees.sum() / n as f64;
    let inv_sqrt: Vec<f64> = degrees
        .iter()
        .map(|&di| {
            let reg = di + tau * mean_degree;
            if reg > 0.0 {
                1.0 / reg.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let normalized = DMatrix::from_fn(n, n, |i, j| {
        inv_sqrt[i] * adj.matrix[(i, j)] * inv_sqrt[j]
    });

    let eig = normalized.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].abs().total_cmp(&eig.eigenvalues[a].abs()));
    let mut embedding = DMatrix::zeros(n, k);
    for (col, &idx) in order.iter().take(k).enumerate() {
        embedding
            .column_mut(col)
            .copy_from(&eig.eigenvectors.column(idx));
    }
    normalize_rows(&mut embedding);
    kmeans_with_zero_row_fallback(&embedding, k, seed)
}

/// SCORE-style spectral clustering: top-`k` adjacency eigenvectors by
/// eigenvalue magnitude, each row divided by its l2 norm so that degree
/// heterogeneity cancels, then Euclidean k-means. Rows with vanishing norm
/// are left at zero and assigned to the nearest centroid afterwards.
pub fn score(adj: &WeightedAdjacency, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::InvalidArgument(
            "score requires at least 2 clusters".into(),
        ));
    }
    let n = adj.n_nodes();
    if k > n {
        return Err(Error::InvalidArgument(format!(
            "k = {k} exceeds number of nodes {n}"
        )));
    }
    let eig = adj.matrix.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].abs().total_cmp(&eig.eigenvalues[a].abs()));
    let mut embedding = DMatrix::zeros(n, k);
    for (col, &idx) in order.iter().take(k).enumerate() {
        embedding
            .column_mut(col)
            .copy_from(&eig.eigenvectors.column(idx));
    }
    normalize_rows(&mut embedding);
    kmeans_with_zero_row_fallback(&embedding, k, seed)
}

fn normalize_rows(m: &mut DMatrix<f64>) {
    for i in 0..m.nrows() {
        let norm = m.row(i).norm();
        if norm >= ZERO_EMBED_TOL {
            let mut row = m.row_mut(i);
            row /= norm;
        } else {
            m.row_mut(i).fill(0.0);
        }
    }
}

/// Runs k-means on the nonzero rows; zero rows (degenerate embeddings) are
/// assigned afterwards to the centroid nearest the origin.
fn kmeans_with_zero_row_fallback(
    embedding: &DMatrix<f64>,
    k: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    let n = embedding.nrows();
    let nonzero: Vec<usize> = (0..n)
        .filter(|&i| embedding.row(i).norm() >= ZERO_EMBED_TOL)
        .collect();
    if nonzero.len() < k {
        return Err(Error::Numerical(format!(
            "only {} usable embedding rows for {k} clusters",
            nonzero.len()
        )));
    }
    let points: Vec<DVector<f64>> = nonzero
        .iter()
        .map(|&i| embedding.row(i).transpose().into_owned())
        .collect();
    let (sub_labels, centroids) = kmeans(&points, k, seed);
    let mut labels = vec![0usize; n];
    for (pos, &i) in nonzero.iter().enumerate() {
        labels[i] = sub_labels[pos];
    }
    let zero = DVector::zeros(embedding.ncols());
    for i in 0..n {
        if embedding.row(i).norm() < ZERO_EMBED_TOL {
            labels[i] = nearest_centroid(&zero, &centroids);
        }
    }
    Ok(labels)
}

fn nearest_centroid(point: &DVector<f64>, centroids: &[DVector<f64>]) -> usize {
    centroids
        .iter()
        .enumerate()
        .min_by(|a, b| (point - a.1).norm_squared().total_cmp(&(point - b.1).norm_squared()))
        .map(|(j, _)| j)
        .unwrap()
}

/// Euclidean k-means: k-means++ seeding, 10 restarts, 300 Lloyd iterations.
fn kmeans(points: &[DVector<f64>], k: usize, seed: u64) -> (Vec<usize>, Vec<DVector<f64>>) {
    const N_STARTS: usize = 10;
    const MAX_ITERS: usize = 300;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Vec<usize>, Vec<DVector<f64>>)> = None;
    for _ in 0..N_STARTS {
        let (cost, labels, centroids) = kmeans_once(points, k, MAX_ITERS, &mut rng);
        if best.as_ref().map_or(true, |(c, _, _)| cost < *c) {
            best = Some((cost, labels, centroids));
        }
    }
    let (_, labels, centroids) = best.unwrap();
    (labels, centroids)
}

fn kmeans_once(
    points: &[DVector<f64>],
    k: usize,
    max_iters: usize,
    rng: &mut ChaCha8Rng,
) -> (f64, Vec<usize>, Vec<DVector<f64>>) {
    let n = points.len();
    // k-means++ seeding.
    let mut centroids: Vec<DVector<f64>> = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..n)].clone());
    while centroids.len() < k {
        let dists: Vec<f64> = points
            .iter()
            .map(|p| {
                centroids
                    .iter()
                    .map(|c| (p - c).norm_squared())
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let total: f64 = dists.iter().sum();
        let next = if total <= 0.0 {
            rng.random_range(0..n)
        } else {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in dists.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        };
        centroids.push(points[next].clone());
    }

    let mut labels = vec![0usize; n];
    let mut cost = f64::INFINITY;
    for _ in 0..max_iters {
        for (i, p) in points.iter().enumerate() {
            labels[i] = nearest_centroid(p, &centroids);
        }
        for j in 0..k {
            let members: Vec<usize> = (0..n).filter(|&i| labels[i] == j).collect();
            if members.is_empty() {
                let worst = (0..n)
                    .max_by(|&a, &b| {
                        (&points[a] - &centroids[labels[a]])
                            .norm_squared()
                            .total_cmp(&(&points[b] - &centroids[labels[b]]).norm_squared())
                    })
                    .unwrap();
                centroids[j] = points[worst].clone();
                labels[worst] = j;
                continue;
            }
            let mut mean = DVector::zeros(points[0].len());
            for &i in &members {
                mean += &points[i];
            }
            centroids[j] = mean / members.len() as f64;
        }
        let new_cost: f64 = points
            .iter()
            .zip(&labels)
            .map(|(p, &j)| (p - &centroids[j]).norm_squared())
            .sum();
        if cost - new_cost < 1e-10 {
            cost = new_cost.min(cost);
            break;
        }
        cost = new_cost;
    }
    (cost, labels, centroids)
}
