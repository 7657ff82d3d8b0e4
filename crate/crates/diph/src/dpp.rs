//! Exact inference and sampling for the determinantal hyperedge distribution.
//!
//! A kernel `L` defines a distribution over all subsets of the node set:
//!
//! ```text
//! P(E = e) = det(L_e) / det(L + I)
//! ```
//!
//! with `det(L_∅) = 1`, so the empty set has probability `1/det(L+I)`.
//! This module provides the normalizer, subset log-probabilities, marginal
//! and conditional distributions, the expected hyperedge size, exact
//! eigendecomposition-based sampling (free and fixed-cardinality), hyperedge
//! completion, and a brute-force enumeration oracle for small node counts.
//!
//! All determinants on the production path are computed through symmetric
//! Cholesky factorizations with log-domain accumulation; the enumeration
//! oracle deliberately goes through plain LU determinants instead so the two
//! routes stay independent.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::consts::{BRUTE_FORCE_MAX_NODES, DEGENERATE_MASS_TOL};
use crate::error::{Error, Result};
use crate::kernel::{validate_edge, KernelMatrix};

/// Marginal kernel `K = I - (L+I)^{-1}`.
///
/// Principal minors of `K` give inclusion probabilities: `P(e ⊂ E) = det(K_e)`,
/// and in particular `P(i ∈ E) = K_ii ∈ (0, 1)`.
#[derive(Debug, Clone)]
pub struct MarginalKernel {
    matrix: DMatrix<f64>,
}

impl MarginalKernel {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn n_nodes(&self) -> usize {
        self.matrix.nrows()
    }

    /// `P(i ∈ E)`.
    pub fn inclusion_prob(&self, i: usize) -> f64 {
        self.matrix[(i, i)]
    }

    /// `P(e ⊂ E) = det(K_e)`; the empty subset has probability 1.
    pub fn subset_prob(&self, subset: &[usize]) -> Result<f64> {
        validate_edge(subset, self.n_nodes())?;
        if subset.is_empty() {
            return Ok(1.0);
        }
        Ok(gather(&self.matrix, subset).determinant())
    }

    /// `trace(K)`, which equals the expected hyperedge size.
    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().sum()
    }
}

/// Exhaustive distribution over all `2^{n_v}` subsets, indexed by bitmask
/// (bit `i` set means node `i` is in the subset).
#[derive(Debug, Clone)]
pub struct SubsetDistribution {
    n_v: usize,
    probs: Vec<f64>,
    log_partition: f64,
}

impl SubsetDistribution {
    pub fn n_nodes(&self) -> usize {
        self.n_v
    }

    /// Log of the enumerated partition function `Σ_e det(L_e)`, which the
    /// normalization identity says equals `det(L + I)`.
    pub fn log_partition(&self) -> f64 {
        self.log_partition
    }

    pub fn prob_mask(&self, mask: u32) -> f64 {
        self.probs[mask as usize]
    }

    pub fn prob_subset(&self, subset: &[usize]) -> f64 {
        self.probs[mask_of(subset) as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.probs.iter().enumerate().map(|(m, &p)| (m as u32, p))
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// `Σ_e |e| P(E=e)`.
    pub fn expected_size(&self) -> f64 {
        self.iter().map(|(m, p)| m.count_ones() as f64 * p).sum()
    }

    /// `P(i ∈ E)` by summation.
    pub fn inclusion_prob(&self, i: usize) -> f64 {
        self.iter()
            .filter(|(m, _)| m & (1 << i) != 0)
            .map(|(_, p)| p)
            .sum()
    }

    /// `P(e ⊂ E)` by summation over supersets.
    pub fn superset_prob(&self, subset: &[usize]) -> f64 {
        let mask = mask_of(subset);
        self.iter()
            .filter(|(m, _)| m & mask == mask)
            .map(|(_, p)| p)
            .sum()
    }

    /// Probabilities restricted and renormalized to subsets of size `k`.
    pub fn restricted_to_size(&self, k: usize) -> Vec<(u32, f64)> {
        let mut entries: Vec<(u32, f64)> = self
            .iter()
            .filter(|(m, _)| m.count_ones() as usize == k)
            .collect();
        let total: f64 = entries.iter().map(|(_, p)| p).sum();
        for entry in &mut entries {
            entry.1 /= total;
        }
        entries
    }
}

fn mask_of(subset: &[usize]) -> u32 {
    subset.iter().fold(0u32, |acc, &i| acc | (1 << i))
}

/// Extracts the principal submatrix indexed by `idx`.
fn gather(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |a, b| m[(idx[a], idx[b])])
}

/// Log-determinant of a symmetric positive-definite matrix via Cholesky.
/// Returns `None` when the factorization fails.
fn sym_log_det(m: DMatrix<f64>) -> Option<f64> {
    if m.nrows() == 0 {
        return Some(0.0);
    }
    m.cholesky()
        .map(|c| 2.0 * c.l().diagonal().iter().map(|x| x.ln()).sum::<f64>())
}

/// `log det(L + I)`, the log of the normalizing constant `Σ_e det(L_e)`.
pub fn log_normalizer(kernel: &KernelMatrix) -> Result<f64> {
    kernel.cached_log_normalizer()
}

/// `log P(E = e) = log det(L_e) - log det(L + I)`.
///
/// The empty edge uses `det(L_∅) = 1`. A numerically singular submatrix
/// (Cholesky failure) yields `f64::NEG_INFINITY` rather than an error, since
/// it describes an event of vanishing probability.
pub fn log_prob(kernel: &KernelMatrix, edge: &[usize]) -> Result<f64> {
    validate_edge(edge, kernel.n_nodes())?;
    let log_norm = log_normalizer(kernel)?;
    let log_det = match sym_log_det(gather(kernel.matrix(), edge)) {
        Some(v) => v,
        None => return Ok(f64::NEG_INFINITY),
    };
    Ok(log_det - log_norm)
}

/// Enumerates `P(E = e)` for every subset. Refused above
/// [`BRUTE_FORCE_MAX_NODES`] nodes.
///
/// Each subset's determinant is computed by LU elimination and the table is
/// normalized by the enumerated sum, so this path shares nothing with the
/// Cholesky-based `log_prob`/`log_normalizer` route and can serve as an
/// independent oracle for it.
pub fn brute_force_distribution(kernel: &KernelMatrix) -> Result<SubsetDistribution> {
    let n_v = kernel.n_nodes();
    if n_v > BRUTE_FORCE_MAX_NODES {
        return Err(Error::TooManyNodes {
            n_v,
            limit: BRUTE_FORCE_MAX_NODES,
        });
    }
    let mut probs = vec![0.0; 1usize << n_v];
    for mask in 0..(1usize << n_v) {
        let subset: Vec<usize> = (0..n_v).filter(|i| mask & (1 << i) != 0).collect();
        let det = if subset.is_empty() {
            1.0
        } else {
            gather(kernel.matrix(), &subset).determinant()
        };
        probs[mask] = det.max(0.0);
    }
    let total: f64 = probs.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::Numerical(format!(
            "subset determinant sum is {total}; kernel is not usable"
        )));
    }
    for p in &mut probs {
        *p /= total;
    }
    Ok(SubsetDistribution {
        n_v,
        probs,
        log_partition: total.ln(),
    })
}

/// `K = I - (L+I)^{-1}`.
pub fn marginal_kernel(kernel: &KernelMatrix) -> Result<MarginalKernel> {
    let n = kernel.n_nodes();
    let shifted = kernel.matrix() + DMatrix::<f64>::identity(n, n);
    let chol = shifted.cholesky().ok_or(Error::NotPositiveDefinite)?;
    let mut matrix = chol.inverse();
    matrix.neg_mut();
    for i in 0..n {
        matrix[(i, i)] += 1.0;
    }
    Ok(MarginalKernel { matrix })
}

/// `log P(E = e2 | e1 ⊂ E) = log det(L_{e2}) - log det(L + I - I_{e1})`,
/// where `I_{e1}` keeps the identity's ones only on `e1`.
///
/// Requires `e1 ⊆ e2`.
pub fn conditional_log_prob(kernel: &KernelMatrix, given: &[usize], edge: &[usize]) -> Result<f64> {
    let n = kernel.n_nodes();
    validate_edge(given, n)?;
    validate_edge(edge, n)?;
    if !is_subset(given, edge) {
        return Err(Error::NotSubset);
    }
    let log_den = log_conditional_normalizer(kernel, given)?;
    let log_num = match sym_log_det(gather(kernel.matrix(), edge)) {
        Some(v) => v,
        None => return Ok(f64::NEG_INFINITY),
    };
    Ok(log_num - log_den)
}

/// `log det(L + I - I_{given})`; positive definite whenever `L` is.
fn log_conditional_normalizer(kernel: &KernelMatrix, given: &[usize]) -> Result<f64> {
    let n = kernel.n_nodes();
    let mut m = kernel.matrix() + DMatrix::<f64>::identity(n, n);
    for &i in given {
        m[(i, i)] -= 1.0;
    }
    sym_log_det(m).ok_or(Error::NotPositiveDefinite)
}

fn is_subset(small: &[usize], large: &[usize]) -> bool {
    // Both sorted strictly increasing.
    let mut it = large.iter();
    'outer: for &s in small {
        for &l in it.by_ref() {
            if l == s {
                continue 'outer;
            }
            if l > s {
                return false;
            }
        }
        return false;
    }
    true
}

/// Ranks the nodes outside `given` by `log P(E = given ∪ {i} | given ⊂ E)`,
/// descending, ties broken by ascending node index. Returns at most `top_k`
/// entries of `(node, conditional log-probability)`.
pub fn complete_edge(
    kernel: &KernelMatrix,
    given: &[usize],
    top_k: usize,
) -> Result<Vec<(usize, f64)>> {
    let n = kernel.n_nodes();
    validate_edge(given, n)?;
    if given.len() >= n {
        return Err(Error::InvalidArgument(
            "edge already covers every node; nothing to complete".into(),
        ));
    }
    let log_den = log_conditional_normalizer(kernel, given)?;
    let mut ranked: Vec<(usize, f64)> = Vec::with_capacity(n - given.len());
    for i in 0..n {
        if given.binary_search(&i).is_ok() {
            continue;
        }
        let mut extended = given.to_vec();
        let pos = extended.partition_point(|&x| x < i);
        extended.insert(pos, i);
        let score = match sym_log_det(gather(kernel.matrix(), &extended)) {
            Some(v) => v - log_den,
            None => f64::NEG_INFINITY,
        };
        ranked.push((i, score));
    }
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked.truncate(top_k);
    Ok(ranked)
}

/// Expected hyperedge size `Σ_i λ_i / (1 + λ_i)` over the kernel's
/// eigenvalues; equal to `trace(K)` for the marginal kernel `K`.
pub fn expected_size(kernel: &KernelMatrix) -> Result<f64> {
    let decomp = kernel.eigendecomposition();
    if decomp.eigenvalues[decomp.eigenvalues.len() - 1] <= 0.0 {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(decomp.eigenvalues.iter().map(|&l| l / (1.0 + l)).sum())
}

/// Variance of the hyperedge size, `Σ_i λ_i / (1 + λ_i)^2`.
pub fn size_variance(kernel: &KernelMatrix) -> Result<f64> {
    let decomp = kernel.eigendecomposition();
    if decomp.eigenvalues[decomp.eigenvalues.len() - 1] <= 0.0 {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(decomp
        .eigenvalues
        .iter()
        .map(|&l| l / ((1.0 + l) * (1.0 + l)))
        .sum())
}

/// Draws one hyperedge from the exact distribution.
///
/// Phase 1 selects each eigenvector independently with probability
/// `λ_i / (1 + λ_i)`; phase 2 sequentially samples nodes proportional to
/// their squared mass in the selected eigenspace, deflating the basis after
/// each pick. The returned edge is sorted ascending and has exactly as many
/// nodes as eigenvectors were selected.
pub fn sample<R: Rng + ?Sized>(kernel: &KernelMatrix, rng: &mut R) -> Result<Vec<usize>> {
    let decomp = kernel.eigendecomposition();
    if decomp.eigenvalues[decomp.eigenvalues.len() - 1] <= 0.0 {
        return Err(Error::NotPositiveDefinite);
    }
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for (i, &lam) in decomp.eigenvalues.iter().enumerate() {
        if rng.random::<f64>() < lam / (1.0 + lam) {
            basis.push(decomp.eigenvectors.column(i).into_owned());
        }
    }
    sample_from_basis(basis, rng)
}

/// Draws one hyperedge of size exactly `k`, distributed proportionally to
/// `det(L_e)` over subsets with `|e| = k`.
///
/// Eigenvector selection follows the elementary-symmetric-polynomial
/// recursion, carried entirely in the log domain so that neither large nor
/// tiny eigenvalue products can overflow or underflow.
pub fn sample_k<R: Rng + ?Sized>(kernel: &KernelMatrix, k: usize, rng: &mut R) -> Result<Vec<usize>> {
    let n = kernel.n_nodes();
    if k > n {
        return Err(Error::InvalidArgument(format!(
            "requested size {k} exceeds node count {n}"
        )));
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    let decomp = kernel.eigendecomposition();
    if decomp.eigenvalues[decomp.eigenvalues.len() - 1] <= 0.0 {
        return Err(Error::NotPositiveDefinite);
    }
    let log_lambda: Vec<f64> = decomp.eigenvalues.iter().map(|&l| l.ln()).collect();
    let log_esp = log_elementary_symmetric(&log_lambda, k);
    if log_esp[k][n] == f64::NEG_INFINITY {
        return Err(Error::Numerical(format!(
            "elementary symmetric polynomial e_{k} vanished"
        )));
    }

    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut remaining = k;
    for m in (1..=n).rev() {
        if remaining == 0 {
            break;
        }
        // When as many eigenvalues remain as picks, all must be selected.
        let take = if m == remaining {
            true
        } else {
            let log_p = log_lambda[m - 1] + log_esp[remaining - 1][m - 1] - log_esp[remaining][m];
            rng.random::<f64>() < log_p.exp()
        };
        if take {
            basis.push(decomp.eigenvectors.column(m - 1).into_owned());
            remaining -= 1;
        }
    }
    sample_from_basis(basis, rng)
}

/// `log e_j(λ_1..λ_m)` for `j = 0..=k`, `m = 0..=n`, computed by the
/// two-dimensional recursion `e_j^m = e_j^{m-1} + λ_m e_{j-1}^{m-1}`
/// in the log domain.
fn log_elementary_symmetric(log_lambda: &[f64], k: usize) -> Vec<Vec<f64>> {
    let n = log_lambda.len();
    let mut table = vec![vec![f64::NEG_INFINITY; n + 1]; k + 1];
    for m in 0..=n {
        table[0][m] = 0.0;
    }
    for j in 1..=k {
        for m in 1..=n {
            table[j][m] = log_add_exp(table[j][m - 1], log_lambda[m - 1] + table[j - 1][m - 1]);
        }
    }
    table
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Phase 2 of the sampler: given an orthonormal basis (columns), repeatedly
/// pick a node proportional to its squared row mass, then deflate the basis
/// against that coordinate and re-orthonormalize.
fn sample_from_basis<R: Rng + ?Sized>(
    mut basis: Vec<DVector<f64>>,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let mut picked = Vec::with_capacity(basis.len());
    while !basis.is_empty() {
        let n = basis[0].len();
        let mut masses = vec![0.0; n];
        for col in &basis {
            for (i, &x) in col.iter().enumerate() {
                masses[i] += x * x;
            }
        }
        let total: f64 = masses.iter().sum();
        if total < DEGENERATE_MASS_TOL {
            return Err(Error::Numerical(
                "degenerate deflation: residual eigenbasis mass vanished".into(),
            ));
        }
        let mut target = rng.random::<f64>() * total;
        let mut item = n - 1;
        for (i, &m) in masses.iter().enumerate() {
            if target < m {
                item = i;
                break;
            }
            target -= m;
        }
        picked.push(item);

        // Deflate: eliminate coordinate `item` from the basis using the
        // column with the largest component there, then drop that column.
        let pivot_idx = (0..basis.len())
            .max_by(|&a, &b| basis[a][item].abs().total_cmp(&basis[b][item].abs()))
            .unwrap();
        let pivot = basis.swap_remove(pivot_idx);
        if pivot[item].abs() * pivot[item].abs() < DEGENERATE_MASS_TOL {
            return Err(Error::Numerical(
                "degenerate deflation: no basis column carries the sampled node".into(),
            ));
        }
        for col in &mut basis {
            let coeff = col[item] / pivot[item];
            col.axpy(-coeff, &pivot, 1.0);
        }
        // Modified Gram–Schmidt re-orthonormalization.
        for j in 0..basis.len() {
            for i in 0..j {
                let proj = basis[i].dot(&basis[j]);
                let prev = basis[i].clone();
                basis[j].axpy(-proj, &prev, 1.0);
            }
            let norm = basis[j].norm();
            if norm * norm < DEGENERATE_MASS_TOL {
                return Err(Error::Numerical(
                    "degenerate deflation: basis collapsed during orthonormalization".into(),
                ));
            }
            basis[j] /= norm;
        }
    }
    picked.sort_unstable();
    Ok(picked)
}
