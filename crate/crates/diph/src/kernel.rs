//! Model parameter types and kernel construction.
//!
//! The model places each node on the unit sphere (a direction matrix `V` with
//! unit rows), gives every node a positive popularity weight `alpha_i`, and
//! shares one squared length `beta` across all latent vectors. These determine
//! the symmetric positive-definite kernel
//!
//! ```text
//! L = beta * V * V' + diag(alpha)
//! ```
//!
//! whose principal minors drive the hyperedge distribution (see [`crate::dpp`]).
//! The kernel is identifiable only up to conjugation by a diagonal sign matrix:
//! `L` and `D L D` define the same distribution for any `D` with entries in
//! {-1, +1}, which is why [`SignVector`] and [`KernelMatrix::sign_conjugate`]
//! exist as first-class operations.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use crate::consts::{ROW_NORM_TOL, SYMMETRY_TOL};
use crate::error::{Error, Result};

/// Latent parameterization `(V, beta, alpha)`.
///
/// Invariants (checked by [`validate_config`] and at construction):
/// unit rows in `directions`, `beta > 0`, `alpha_i > 0`, and `0 < d < n_v`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentConfig {
    /// `n_v x d` matrix; row `i` is node `i`'s latent direction (unit norm).
    pub directions: DMatrix<f64>,
    /// Shared squared length of the latent vectors.
    pub beta: f64,
    /// Per-node popularity weights, all strictly positive.
    pub alpha: DVector<f64>,
}

impl LatentConfig {
    /// Builds a config and rejects it if any invariant fails.
    pub fn new(directions: DMatrix<f64>, beta: f64, alpha: DVector<f64>) -> Result<Self> {
        let config = Self {
            directions,
            beta,
            alpha,
        };
        let violations = validate_config(&config);
        if violations.is_empty() {
            Ok(config)
        } else {
            Err(Error::InvalidConfig(render_violations(&violations)))
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.directions.nrows()
    }

    /// Latent dimension `d`.
    pub fn dim(&self) -> usize {
        self.directions.ncols()
    }
}

/// One invariant violation, naming the offending field and index.
#[derive(Debug, Clone)]
pub struct Violation {
    pub field: &'static str,
    pub index: Option<usize>,
    pub value: f64,
    pub message: String,
}

fn render_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| match v.index {
            Some(i) => format!("{}[{}]: {}", v.field, i, v.message),
            None => format!("{}: {}", v.field, v.message),
        })
        .collect::<Vec<_>>()
        .join("; ")
}

/// Checks every [`LatentConfig`] invariant and reports all violations found.
///
/// Returns an empty list exactly when the config is valid. This never fails;
/// it is the reporting counterpart of the constructors that do.
pub fn validate_config(config: &LatentConfig) -> Vec<Violation> {
    let mut out = Vec::new();
    let n_v = config.directions.nrows();
    let d = config.directions.ncols();

    if d == 0 || d >= n_v {
        out.push(Violation {
            field: "directions",
            index: None,
            value: d as f64,
            message: format!("latent dimension must satisfy 0 < d < n_v, got d={d}, n_v={n_v}"),
        });
    }
    for i in 0..n_v {
        let norm = config.directions.row(i).norm();
        if (norm - 1.0).abs() > ROW_NORM_TOL {
            out.push(Violation {
                field: "directions",
                index: Some(i),
                value: norm,
                message: format!("row must have unit norm, got {norm}"),
            });
        }
    }
    if !(config.beta > 0.0) {
        out.push(Violation {
            field: "beta",
            index: None,
            value: config.beta,
            message: format!("beta must be strictly positive, got {}", config.beta),
        });
    }
    if config.alpha.len() != n_v {
        out.push(Violation {
            field: "alpha",
            index: None,
            value: config.alpha.len() as f64,
            message: format!("alpha has length {}, expected {n_v}", config.alpha.len()),
        });
    }
    for (i, &a) in config.alpha.iter().enumerate() {
        if !(a > 0.0) {
            out.push(Violation {
                field: "alpha",
                index: Some(i),
                value: a,
                message: format!("alpha must be strictly positive, got {a}"),
            });
        }
    }
    out
}

/// Diagonal sign matrix, stored as its diagonal of ±1 entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SignVector {
    signs: Vec<f64>,
}

impl SignVector {
    /// Entries must be exactly -1.0 or +1.0.
    pub fn new(signs: Vec<f64>) -> Result<Self> {
        for (i, &s) in signs.iter().enumerate() {
            if s != 1.0 && s != -1.0 {
                return Err(Error::InvalidArgument(format!(
                    "sign vector entry {i} must be ±1, got {s}"
                )));
            }
        }
        Ok(Self { signs })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            signs: vec![1.0; n],
        }
    }

    /// Builds the vector from boolean flips: `true` means -1.
    pub fn from_flips(flips: &[bool]) -> Self {
        Self {
            signs: flips.iter().map(|&f| if f { -1.0 } else { 1.0 }).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    pub fn signs(&self) -> &[f64] {
        &self.signs
    }
}

/// Sorted eigendecomposition of a kernel, eigenvalues nonincreasing.
#[derive(Debug, Clone)]
pub struct SpectralDecomp {
    /// Eigenvalues in nonincreasing order.
    pub eigenvalues: DVector<f64>,
    /// Orthonormal eigenvectors as columns, aligned with `eigenvalues`.
    pub eigenvectors: DMatrix<f64>,
}

/// Symmetric positive-definite kernel with a lazily cached eigendecomposition.
///
/// Immutable after construction, so the cache can never go stale; the
/// `OnceLock` gives single-writer initialization and lock-free reads, making
/// shared read-only use across threads safe.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    matrix: DMatrix<f64>,
    eigen: OnceLock<SpectralDecomp>,
    log_normalizer: OnceLock<Option<f64>>,
}

impl KernelMatrix {
    /// Wraps an explicit symmetric matrix. Symmetry is enforced within
    /// [`SYMMETRY_TOL`]; positive definiteness is checked lazily by the
    /// operations that need a factorization.
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                got: matrix.ncols(),
            });
        }
        for i in 0..matrix.nrows() {
            for j in (i + 1)..matrix.ncols() {
                if (matrix[(i, j)] - matrix[(j, i)]).abs() > SYMMETRY_TOL {
                    return Err(Error::InvalidArgument(format!(
                        "kernel not symmetric at ({i},{j}): {} vs {}",
                        matrix[(i, j)],
                        matrix[(j, i)]
                    )));
                }
            }
        }
        Ok(Self {
            matrix,
            eigen: OnceLock::new(),
            log_normalizer: OnceLock::new(),
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// The cached eigendecomposition, computed on first use.
    pub fn eigendecomposition(&self) -> &SpectralDecomp {
        self.eigen.get_or_init(|| {
            let eig = self.matrix.clone().symmetric_eigen();
            let n = eig.eigenvalues.len();
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
            let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
            let mut eigenvectors = DMatrix::zeros(n, n);
            for (dst, &src) in order.iter().enumerate() {
                eigenvectors
                    .column_mut(dst)
                    .copy_from(&eig.eigenvectors.column(src));
            }
            SpectralDecomp {
                eigenvalues,
                eigenvectors,
            }
        })
    }

    /// `log det(L + I)`, cached, via Cholesky factorization.
    pub(crate) fn cached_log_normalizer(&self) -> Result<f64> {
        let value = self.log_normalizer.get_or_init(|| {
            let n = self.matrix.nrows();
            let shifted = &self.matrix + DMatrix::<f64>::identity(n, n);
            shifted
                .cholesky()
                .map(|chol| 2.0 * chol.l().diagonal().iter().map(|x| x.ln()).sum::<f64>())
        });
        value.ok_or(Error::NotPositiveDefinite)
    }

    /// Conjugates the kernel by a diagonal sign matrix: `(L')_ij = s_i s_j L_ij`.
    ///
    /// The diagonal is unchanged, and applying the same signs twice returns
    /// the original kernel.
    pub fn sign_conjugate(&self, signs: &SignVector) -> Result<KernelMatrix> {
        let n = self.n_nodes();
        if signs.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: signs.len(),
            });
        }
        let s = signs.signs();
        let matrix = DMatrix::from_fn(n, n, |i, j| s[i] * s[j] * self.matrix[(i, j)]);
        Ok(KernelMatrix {
            matrix,
            eigen: OnceLock::new(),
            log_normalizer: OnceLock::new(),
        })
    }
}

/// Builds `L = beta * V * V' + diag(alpha)` from a validated config.
///
/// The result is symmetric with diagonal `alpha_i + beta`, and positive
/// definite with smallest eigenvalue at least `min_i alpha_i` (the outer
/// product term is positive semidefinite).
pub fn build_kernel(config: &LatentConfig) -> Result<KernelMatrix> {
    let violations = validate_config(config);
    if !violations.is_empty() {
        return Err(Error::InvalidConfig(render_violations(&violations)));
    }
    Ok(build_kernel_unchecked(config))
}

/// Same as [`build_kernel`] without re-validating; used on the optimizer's
/// hot path where feasibility is maintained by projection.
pub(crate) fn build_kernel_unchecked(config: &LatentConfig) -> KernelMatrix {
    let mut matrix = &config.directions * config.directions.transpose();
    matrix *= config.beta;
    for i in 0..config.n_nodes() {
        matrix[(i, i)] += config.alpha[i];
    }
    // Exact identity beta*V_i.V_i' + alpha_i may drift from alpha_i + beta by
    // rounding in the row norm; pin the diagonal to the closed form.
    for i in 0..config.n_nodes() {
        matrix[(i, i)] = config.alpha[i] + config.beta;
    }
    KernelMatrix {
        matrix,
        eigen: OnceLock::new(),
        log_normalizer: OnceLock::new(),
    }
}

/// Node set plus a multiset of hyperedges.
///
/// Edges are strictly increasing index lists; the same edge may appear any
/// number of times (multiplicity is meaningful), and the empty edge is legal
/// because the model assigns it positive probability.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypergraph {
    n_v: usize,
    vocab: Option<Vec<String>>,
    edges: Vec<Vec<usize>>,
}

impl Hypergraph {
    pub fn new(n_v: usize, edges: Vec<Vec<usize>>) -> Result<Self> {
        for edge in &edges {
            validate_edge(edge, n_v)?;
        }
        Ok(Self {
            n_v,
            vocab: None,
            edges,
        })
    }

    /// Attaches node labels; `vocab.len()` must equal the node count.
    pub fn with_vocab(mut self, vocab: Vec<String>) -> Result<Self> {
        if vocab.len() != self.n_v {
            return Err(Error::DimensionMismatch {
                expected: self.n_v,
                got: vocab.len(),
            });
        }
        self.vocab = Some(vocab);
        Ok(self)
    }

    pub fn n_nodes(&self) -> usize {
        self.n_v
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Vec<usize>] {
        &self.edges
    }

    pub fn vocab(&self) -> Option<&[String]> {
        self.vocab.as_deref()
    }

    /// Label for node `i`: the vocabulary entry when present, else the index.
    pub fn label(&self, i: usize) -> String {
        match &self.vocab {
            Some(v) => v[i].clone(),
            None => i.to_string(),
        }
    }
}

/// Checks that an edge is a strictly increasing list of indices in `[0, n_v)`.
pub fn validate_edge(edge: &[usize], n_v: usize) -> Result<()> {
    for (pos, &idx) in edge.iter().enumerate() {
        if idx >= n_v {
            return Err(Error::IndexOutOfRange { index: idx, n_v });
        }
        if pos > 0 && edge[pos - 1] >= idx {
            return Err(Error::NotStrictlyIncreasing { position: pos });
        }
    }
    Ok(())
}
