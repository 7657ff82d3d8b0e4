//! Centralized numerical tolerances.
//!
//! Every tolerance used for validation or numerical guards lives here so that
//! the same threshold is applied everywhere a given check appears.

/// Maximum deviation of a latent-direction row norm from 1.
///
/// Rows of the direction matrix are projected onto the unit sphere after
/// every gradient step; 1e-9 allows for accumulated rounding in the
/// normalization itself.
pub const ROW_NORM_TOL: f64 = 1e-9;

/// Maximum asymmetry `|L_ij - L_ji|` tolerated in a kernel matrix.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Row norms below this are treated as zero during projection and replaced
/// by a deterministic fallback direction.
pub const ZERO_ROW_TOL: f64 = 1e-12;

/// Residual squared mass below which the sequential sampler considers its
/// remaining eigenbasis degenerate and aborts.
pub const DEGENERATE_MASS_TOL: f64 = 1e-12;

/// Row l2 norms below this are treated as zero when row-normalizing
/// spectral embeddings.
pub const ZERO_EMBED_TOL: f64 = 1e-12;

/// Brute-force subset enumeration is refused above this node count
/// (2^20 subsets is the largest table worth materializing).
pub const BRUTE_FORCE_MAX_NODES: usize = 20;
