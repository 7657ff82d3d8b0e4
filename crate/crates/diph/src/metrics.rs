//! Error measures that respect the model's gauge freedoms.
//!
//! Latent directions are only identified up to one global orthogonal rotation
//! plus per-node sign flips, and the kernel only up to sign conjugation, so
//! naive norms between estimates and truth are meaningless. The losses here
//! minimize over those freedoms:
//!
//! ```text
//! loss_v(V̂, V*) = min_{O orthogonal, S diagonal ±1} ‖V̂ - S V* O‖_F
//! loss_l(L̂, L*) = min_{S diagonal ±1} ‖L̂ - S L* S‖_F
//! ```
//!
//! The sign search for `loss_l` is greedy coordinate descent (with an
//! exhaustive variant for small problems to measure suboptimality); `loss_v`
//! alternates the orthogonal-Procrustes solution for `O` with independent
//! per-row sign choices for `S`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernel::{Hypergraph, LatentConfig, SignVector};

/// A gauge-aligned loss value together with the alignment that attains it.
#[derive(Debug, Clone)]
pub struct AlignmentResult {
    pub loss: f64,
    pub sign_vector: SignVector,
    /// Orthogonal alignment of the latent dimensions; only produced by
    /// direction-matrix losses.
    pub rotation: Option<DMatrix<f64>>,
}

fn check_same_shape(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<()> {
    if a.nrows() != b.nrows() || a.ncols() != b.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows() * a.ncols(),
            got: b.nrows() * b.ncols(),
        });
    }
    Ok(())
}

fn conjugation_cost_sq(l_hat: &DMatrix<f64>, l_star: &DMatrix<f64>, signs: &[f64]) -> f64 {
    let n = l_hat.nrows();
    let mut cost = 0.0;
    for i in 0..n {
        for j in 0..n {
            let diff = l_hat[(i, j)] - signs[i] * signs[j] * l_star[(i, j)];
            cost += diff * diff;
        }
    }
    cost
}

/// Flip gains: `delta_k` is the change in squared cost from flipping `s_k`.
fn flip_deltas(l_hat: &DMatrix<f64>, l_star: &DMatrix<f64>, signs: &[f64]) -> Vec<f64> {
    let n = l_hat.nrows();
    (0..n)
        .map(|k| {
            let mut acc = 0.0;
            for j in 0..n {
                if j != k {
                    acc += l_hat[(k, j)] * signs[j] * l_star[(k, j)];
                }
            }
            8.0 * signs[k] * acc
        })
        .collect()
}

fn greedy_from(l_hat: &DMatrix<f64>, l_star: &DMatrix<f64>, mut signs: Vec<f64>) -> (f64, Vec<f64>) {
    loop {
        let deltas = flip_deltas(l_hat, l_star, &signs);
        let (best_k, best_delta) = deltas
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, &d)| (k, d))
            .unwrap();
        if best_delta >= -1e-15 {
            break;
        }
        signs[best_k] = -signs[best_k];
    }
    (conjugation_cost_sq(l_hat, l_star, &signs), signs)
}

/// `min_S ‖L̂ - S L* S‖_F` by greedy single-flip descent.
///
/// The search starts both from the identity and from the per-coordinate sign
/// agreement of the two leading eigenvectors, and keeps the better local
/// minimum. Greedy descent can stop above the true minimum; use
/// [`loss_l_exhaustive`] to verify on small problems.
pub fn loss_l(l_hat: &DMatrix<f64>, l_star: &DMatrix<f64>) -> Result<AlignmentResult> {
    check_same_shape(l_hat, l_star)?;
    let n = l_hat.nrows();

    let (cost_id, signs_id) = greedy_from(l_hat, l_star, vec![1.0; n]);

    let lead_hat = leading_eigenvector(l_hat);
    let lead_star = leading_eigenvector(l_star);
    let seeded: Vec<f64> = (0..n)
        .map(|i| {
            if lead_hat[i] * lead_star[i] < 0.0 {
                -1.0
            } else {
                1.0
            }
        })
        .collect();
    let (cost_seed, signs_seed) = greedy_from(l_hat, l_star, seeded);

    let (cost, signs) = if cost_seed < cost_id {
        (cost_seed, signs_seed)
    } else {
        (cost_id, signs_id)
    };
    Ok(AlignmentResult {
        loss: cost.max(0.0).sqrt(),
        sign_vector: SignVector::new(signs).expect("greedy signs are ±1"),
        rotation: None,
    })
}

/// `min_S ‖L̂ - S L* S‖_F` by exhaustive search over all sign vectors
/// (with `s_0` fixed to +1, since a global flip is a no-op). Only intended
/// for small matrices.
pub fn loss_l_exhaustive(l_hat: &DMatrix<f64>, l_star: &DMatrix<f64>) -> Result<AlignmentResult> {
    check_same_shape(l_hat, l_star)?;
    let n = l_hat.nrows();
    if n > 15 {
        return Err(Error::TooManyNodes { n_v: n, limit: 15 });
    }
    let mut best_cost = f64::INFINITY;
    let mut best_signs = vec![1.0; n];
    let mut signs = vec![1.0; n];
    for mask in 0u32..(1 << (n.saturating_sub(1))) {
        for i in 1..n {
            signs[i] = if mask & (1 << (i - 1)) != 0 { -1.0 } else { 1.0 };
        }
        let cost = conjugation_cost_sq(l_hat, l_star, &signs);
        if cost < best_cost {
            best_cost = cost;
            best_signs.copy_from_slice(&signs);
        }
    }
    Ok(AlignmentResult {
        loss: best_cost.max(0.0).sqrt(),
        sign_vector: SignVector::new(best_signs).expect("signs are ±1"),
        rotation: None,
    })
}

fn leading_eigenvector(m: &DMatrix<f64>) -> DVector<f64> {
    let eig = m.clone().symmetric_eigen();
    let lead = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| i)
        .unwrap();
    eig.eigenvectors.column(lead).into_owned()
}

/// `min_{O, S} ‖V̂ - S V* O‖_F` by alternating minimization: for fixed `S`
/// the optimal `O` is the orthogonal Procrustes solution (polar factor of
/// `(S V*)' V̂`), and for fixed `O` each row's sign is chosen independently.
/// The objective is nonincreasing between half-steps, so the alternation
/// converges.
///
/// The alternation runs from three starts and keeps the best: the identity,
/// per-row dot-product signs, and the sign vector obtained by greedily
/// aligning the two Gram matrices `V̂ V̂'` and `V* V*'` (the sign freedom of
/// the direction matrices is exactly the conjugation freedom of their
/// Grams). The extra starts cost little and escape the local minima that the
/// plain identity start falls into when many rows are flipped.
pub fn loss_v(v_hat: &DMatrix<f64>, v_star: &DMatrix<f64>) -> Result<AlignmentResult> {
    check_same_shape(v_hat, v_star)?;
    let n = v_hat.nrows();

    let row_dot_signs: Vec<f64> = (0..n)
        .map(|i| {
            if v_hat.row(i).dot(&v_star.row(i)) < 0.0 {
                -1.0
            } else {
                1.0
            }
        })
        .collect();
    let gram_hat = v_hat * v_hat.transpose();
    let gram_star = v_star * v_star.transpose();
    let gram_signs = loss_l(&gram_hat, &gram_star)?.sign_vector;

    let mut best: Option<(f64, Vec<f64>, DMatrix<f64>)> = None;
    for start in [vec![1.0; n], row_dot_signs, gram_signs.signs().to_vec()] {
        let (cost, signs, rotation) = alternate_signs_rotation(v_hat, v_star, start);
        if best.as_ref().map_or(true, |(c, _, _)| cost < *c) {
            best = Some((cost, signs, rotation));
        }
    }
    let (cost, signs, rotation) = best.unwrap();
    Ok(AlignmentResult {
        loss: cost.max(0.0).sqrt(),
        sign_vector: SignVector::new(signs).expect("signs are ±1"),
        rotation: Some(rotation),
    })
}

fn alternate_signs_rotation(
    v_hat: &DMatrix<f64>,
    v_star: &DMatrix<f64>,
    mut signs: Vec<f64>,
) -> (f64, Vec<f64>, DMatrix<f64>) {
    let n = v_hat.nrows();
    let mut rotation = DMatrix::identity(v_hat.ncols(), v_hat.ncols());
    let mut prev_cost = f64::INFINITY;
    for _ in 0..100 {
        // O-step: polar factor of (S V*)' V̂.
        let signed_star = apply_row_signs(v_star, &signs);
        let cross = signed_star.transpose() * v_hat;
        rotation = polar_orthogonal(&cross);

        // S-step: per-row sign of <V̂_i, (V* O)_i>.
        let aligned = v_star * &rotation;
        for i in 0..n {
            let dot = v_hat.row(i).dot(&aligned.row(i));
            signs[i] = if dot < 0.0 { -1.0 } else { 1.0 };
        }

        let cost = residual_cost(v_hat, &aligned, &signs);
        if prev_cost - cost <= 1e-15 {
            prev_cost = cost.min(prev_cost);
            break;
        }
        prev_cost = cost;
    }
    (prev_cost, signs, rotation)
}

fn apply_row_signs(m: &DMatrix<f64>, signs: &[f64]) -> DMatrix<f64> {
    let mut out = m.clone();
    for (i, &s) in signs.iter().enumerate() {
        if s < 0.0 {
            out.row_mut(i).neg_mut();
        }
    }
    out
}

fn residual_cost(v_hat: &DMatrix<f64>, aligned_star: &DMatrix<f64>, signs: &[f64]) -> f64 {
    let mut cost = 0.0;
    for i in 0..v_hat.nrows() {
        for j in 0..v_hat.ncols() {
            let diff = v_hat[(i, j)] - signs[i] * aligned_star[(i, j)];
            cost += diff * diff;
        }
    }
    cost
}

/// Orthogonal factor `U W'` of the SVD `M = U Σ W'`; maximizes `tr(O' M)`
/// over the full orthogonal group (reflections allowed).
fn polar_orthogonal(m: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("svd requested u");
    let v_t = svd.v_t.expect("svd requested v_t");
    u * v_t
}

/// `‖α̂ - α*‖_2`.
pub fn loss_alpha(alpha_hat: &DVector<f64>, alpha_star: &DVector<f64>) -> Result<f64> {
    if alpha_hat.len() != alpha_star.len() {
        return Err(Error::DimensionMismatch {
            expected: alpha_star.len(),
            got: alpha_hat.len(),
        });
    }
    Ok((alpha_hat - alpha_star).norm())
}

/// `|β̂ - β*|`.
pub fn loss_beta(beta_hat: f64, beta_star: f64) -> f64 {
    (beta_hat - beta_star).abs()
}

/// The four relative errors used to report estimation quality.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct RelativeErrors {
    pub v: f64,
    pub beta: f64,
    pub alpha: f64,
    pub l: f64,
}

/// Gauge-aligned relative errors between an estimated and a reference
/// configuration: each loss divided by the reference's own norm.
pub fn relative_errors(hat: &LatentConfig, star: &LatentConfig) -> Result<RelativeErrors> {
    let v = loss_v(&hat.directions, &star.directions)?.loss / star.directions.norm();
    let beta = loss_beta(hat.beta, star.beta) / star.beta.abs();
    let alpha = loss_alpha(&hat.alpha, &star.alpha)? / star.alpha.norm();
    let l_hat = crate::kernel::build_kernel(hat)?;
    let l_star = crate::kernel::build_kernel(star)?;
    let l = loss_l(l_hat.matrix(), l_star.matrix())?.loss / l_star.matrix().norm();
    Ok(RelativeErrors { v, beta, alpha, l })
}

/// Per-node inclusion frequency `(1/n_e) Σ_ℓ 1(i ∈ e_ℓ)`.
pub fn empirical_marginals(h: &Hypergraph) -> Result<DVector<f64>> {
    if h.n_edges() == 0 {
        return Err(Error::InvalidArgument(
            "empirical marginals need at least one hyperedge".into(),
        ));
    }
    let mut counts = DVector::zeros(h.n_nodes());
    for edge in h.edges() {
        for &i in edge {
            counts[i] += 1.0;
        }
    }
    Ok(counts / h.n_edges() as f64)
}

/// Fraction of agreeing nodes, maximized over relabelings of one side.
///
/// Label values need not be contiguous. Up to 8 distinct labels the maximum
/// is found by enumerating permutations; beyond that a Hungarian assignment
/// solves the same matching exactly.
pub fn clustering_accuracy(labels_hat: &[usize], labels_true: &[usize]) -> Result<f64> {
    if labels_hat.len() != labels_true.len() {
        return Err(Error::DimensionMismatch {
            expected: labels_true.len(),
            got: labels_hat.len(),
        });
    }
    if labels_hat.is_empty() {
        return Err(Error::InvalidArgument("empty labelings".into()));
    }
    let (hat_ids, k_hat) = compact_labels(labels_hat);
    let (true_ids, k_true) = compact_labels(labels_true);
    let k = k_hat.max(k_true);
    let mut confusion = vec![vec![0.0; k]; k];
    for (&a, &b) in hat_ids.iter().zip(&true_ids) {
        confusion[a][b] += 1.0;
    }
    let best = if k <= 8 {
        max_over_permutations(&confusion)
    } else {
        hungarian_max(&confusion)
    };
    Ok(best / labels_hat.len() as f64)
}

fn compact_labels(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut map = std::collections::HashMap::new();
    let mut out = Vec::with_capacity(labels.len());
    for &l in labels {
        let next = map.len();
        out.push(*map.entry(l).or_insert(next));
    }
    (out, map.len())
}

/// Max trace over permutations via Heap's algorithm.
fn max_over_permutations(confusion: &[Vec<f64>]) -> f64 {
    let k = confusion.len();
    let mut perm: Vec<usize> = (0..k).collect();
    let mut counters = vec![0usize; k];
    let score =
        |perm: &[usize]| -> f64 { (0..k).map(|row| confusion[row][perm[row]]).sum::<f64>() };
    let mut best = score(&perm);
    let mut i = 0;
    while i < k {
        if counters[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(counters[i], i);
            }
            best = best.max(score(&perm));
            counters[i] += 1;
            i = 0;
        } else {
            counters[i] = 0;
            i += 1;
        }
    }
    best
}

/// Maximum-weight perfect assignment on a square matrix: the classic
/// potentials formulation of the Hungarian algorithm, run on negated weights.
fn hungarian_max(weights: &[Vec<f64>]) -> f64 {
    let k = weights.len();
    // Costs for minimization, 1-indexed with a dummy row/column 0.
    let inf = f64::INFINITY;
    let mut u = vec![0.0; k + 1];
    let mut v = vec![0.0; k + 1];
    let mut assignment = vec![0usize; k + 1]; // column -> row
    for row in 1..=k {
        let mut links = vec![0usize; k + 1];
        let mut mins = vec![inf; k + 1];
        let mut used = vec![false; k + 1];
        let mut j0 = 0usize;
        assignment[0] = row;
        loop {
            used[j0] = true;
            let i0 = assignment[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=k {
                if !used[j] {
                    let cur = -weights[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < mins[j] {
                        mins[j] = cur;
                        links[j] = j0;
                    }
                    if mins[j] < delta {
                        delta = mins[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=k {
                if used[j] {
                    u[assignment[j]] += delta;
                    v[j] -= delta;
                } else {
                    mins[j] -= delta;
                }
            }
            j0 = j1;
            if assignment[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = links[j0];
            assignment[j0] = assignment[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    (1..=k)
        .map(|j| weights[assignment[j] - 1][j - 1])
        .sum::<f64>()
}
