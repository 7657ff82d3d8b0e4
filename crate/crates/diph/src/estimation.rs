//! Maximum-likelihood fitting of `(V, beta, alpha)` and latent-dimension
//! selection.
//!
//! The objective is the mean log-likelihood of the observed hyperedges,
//!
//! ```text
//! f(V, beta, alpha) = -log det(L + I) + (1/n_e) Σ_ℓ log det(L_{e_ℓ}),
//! L = beta V V' + diag(alpha),
//! ```
//!
//! maximized by projected accelerated proximal gradient: gradient steps in
//! ambient coordinates, rows of `V` projected back onto the unit sphere, and
//! `beta`, `alpha` clamped to a positive floor. Acceleration uses the
//! monotone scheme suited to nonconvex objectives: every iteration takes
//! both a step from the Nesterov-extrapolated point and a plain
//! projected-gradient step from the current iterate, keeps the better one,
//! and lets the extrapolation sequence persist even when the plain step wins
//! so momentum survives shallow dips. Step sizes adapt by backtracking
//! against a sufficient-ascent condition along the projection arc.
//!
//! Mini-batches run in random-permutation epochs; the full-data objective is
//! evaluated once per epoch and drives both the stopping rule and the
//! best-iterate bookkeeping, so the recorded trace is nondecreasing.
//! Restarts from independent random initializations guard against local
//! optima, and the Akaike information criterion over a candidate list picks
//! the latent dimension.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::consts::ZERO_ROW_TOL;
use crate::error::{Error, Result};
use crate::kernel::{validate_config, Hypergraph, LatentConfig};
use crate::metrics::empirical_marginals;
use crate::simgen::{derive_seed, sample_uniform_sphere};

const ARMIJO_SIGMA: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 30;
const STEP_GROWTH: f64 = 2.0;

/// The `beta` component of the gradient aggregates all `n_v^2` kernel
/// entries, so its magnitude grows with the node count while the per-row
/// direction gradients do not. One shared step size serves every block only
/// after `beta`'s component is scaled back toward the per-row magnitude;
/// this is a fixed diagonal preconditioner and leaves ascent directions
/// ascent.
fn precondition(mut g: Params, n_v: usize) -> Params {
    g.beta /= (n_v as f64).sqrt();
    g
}

/// Mini-batch size: explicit, or the whole edge list every iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchSize {
    Full,
    Size(usize),
}

/// Options controlling [`fit`].
#[derive(Debug, Clone)]
pub struct FitOptions {
    /// Latent dimension to fit.
    pub d: usize,
    /// Maximum number of epochs.
    pub max_iters: usize,
    /// Initial gradient step size.
    pub step_size: f64,
    /// Multiplicative step shrink on a failed backtracking trial, in (0, 1).
    pub backtrack_factor: f64,
    /// Stop when the relative change of the full objective between epochs
    /// falls below this.
    pub tol: f64,
    pub batch_size: BatchSize,
    /// Number of random restarts.
    pub n_inits: usize,
    /// Positive floor for `beta` and `alpha` under projection.
    pub floor_eps: f64,
    pub seed: u64,
}

impl FitOptions {
    pub fn new(d: usize) -> Self {
        Self {
            d,
            max_iters: 5000,
            step_size: 0.05,
            backtrack_factor: 0.5,
            tol: 1e-7,
            batch_size: BatchSize::Size(256),
            n_inits: 5,
            floor_eps: 1e-8,
            seed: 0,
        }
    }

    fn validate(&self, n_v: usize) -> Result<()> {
        if self.d == 0 || self.d >= n_v {
            return Err(Error::InvalidArgument(format!(
                "latent dimension must satisfy 0 < d < n_v, got d={}, n_v={n_v}",
                self.d
            )));
        }
        if self.max_iters == 0 || self.n_inits == 0 {
            return Err(Error::InvalidArgument(
                "max_iters and n_inits must be positive".into(),
            ));
        }
        if !(self.step_size > 0.0) || !(self.tol > 0.0) || !(self.floor_eps > 0.0) {
            return Err(Error::InvalidArgument(
                "step_size, tol and floor_eps must be positive".into(),
            ));
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return Err(Error::InvalidArgument(
                "backtrack_factor must lie in (0, 1)".into(),
            ));
        }
        if let BatchSize::Size(0) = self.batch_size {
            return Err(Error::InvalidArgument("batch size must be positive".into()));
        }
        Ok(())
    }
}

/// Outcome of [`fit`]: the best restart plus its diagnostics.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub config: LatentConfig,
    /// Best-so-far full objective after each epoch (nondecreasing), starting
    /// with the value at the initialization.
    pub objective_trace: Vec<f64>,
    pub final_objective: f64,
    pub aic: f64,
    pub converged: bool,
    pub iterations_used: usize,
    /// Final objective of every restart, in restart order.
    pub restart_objectives: Vec<f64>,
}

/// Gradient of the batch objective in ambient coordinates.
#[derive(Debug, Clone)]
pub struct Gradient {
    pub directions: DMatrix<f64>,
    pub beta: f64,
    pub alpha: DVector<f64>,
}

/// Unconstrained parameter point; the optimizer's working representation.
#[derive(Debug, Clone)]
struct Params {
    v: DMatrix<f64>,
    beta: f64,
    alpha: DVector<f64>,
}

impl Params {
    fn stepped(&self, g: &Params, scale: f64) -> Params {
        Params {
            v: &self.v + &g.v * scale,
            beta: self.beta + g.beta * scale,
            alpha: &self.alpha + &g.alpha * scale,
        }
    }

    /// `self + a (toward - self) + b (self - prev)`.
    fn lin_combine(&self, toward: &Params, a: f64, prev: &Params, b: f64) -> Params {
        Params {
            v: &self.v + (&toward.v - &self.v) * a + (&self.v - &prev.v) * b,
            beta: self.beta + (toward.beta - self.beta) * a + (self.beta - prev.beta) * b,
            alpha: &self.alpha
                + (&toward.alpha - &self.alpha) * a
                + (&self.alpha - &prev.alpha) * b,
        }
    }

    fn distance_sq(&self, other: &Params) -> f64 {
        (&self.v - &other.v).norm_squared()
            + (self.beta - other.beta).powi(2)
            + (&self.alpha - &other.alpha).norm_squared()
    }

    fn into_config(self) -> LatentConfig {
        LatentConfig {
            directions: self.v,
            beta: self.beta,
            alpha: self.alpha,
        }
    }
}

fn kernel_of(p: &Params) -> DMatrix<f64> {
    let mut l = &p.v * p.v.transpose();
    l *= p.beta;
    for i in 0..p.v.nrows() {
        l[(i, i)] += p.alpha[i];
    }
    l
}

/// `log det(M_e)` for a principal submatrix, with closed forms for sizes
/// 1 and 2 and Cholesky beyond. `None` when the submatrix is not positive
/// definite.
fn log_det_submatrix(m: &DMatrix<f64>, edge: &[usize]) -> Option<f64> {
    match edge.len() {
        0 => Some(0.0),
        1 => {
            let a = m[(edge[0], edge[0])];
            (a > 0.0).then(|| a.ln())
        }
        2 => {
            let (i, j) = (edge[0], edge[1]);
            let det = m[(i, i)] * m[(j, j)] - m[(i, j)] * m[(i, j)];
            (det > 0.0 && m[(i, i)] > 0.0).then(|| det.ln())
        }
        len => {
            let sub = DMatrix::from_fn(len, len, |a, b| m[(edge[a], edge[b])]);
            sub.cholesky()
                .map(|c| 2.0 * c.l().diagonal().iter().map(|x| x.ln()).sum::<f64>())
        }
    }
}

/// Adds `weight * (L_e)^{-1}` into `acc` at the positions of `edge`.
fn scatter_inverse(acc: &mut DMatrix<f64>, l: &DMatrix<f64>, edge: &[usize], weight: f64) -> bool {
    match edge.len() {
        0 => true,
        1 => {
            let i = edge[0];
            let a = l[(i, i)];
            if a <= 0.0 {
                return false;
            }
            acc[(i, i)] += weight / a;
            true
        }
        2 => {
            let (i, j) = (edge[0], edge[1]);
            let det = l[(i, i)] * l[(j, j)] - l[(i, j)] * l[(i, j)];
            if det <= 0.0 || l[(i, i)] <= 0.0 {
                return false;
            }
            acc[(i, i)] += weight * l[(j, j)] / det;
            acc[(j, j)] += weight * l[(i, i)] / det;
            acc[(i, j)] -= weight * l[(i, j)] / det;
            acc[(j, i)] -= weight * l[(i, j)] / det;
            true
        }
        len => {
            let sub = DMatrix::from_fn(len, len, |a, b| l[(edge[a], edge[b])]);
            let Some(chol) = sub.cholesky() else {
                return false;
            };
            let inv = chol.inverse();
            for a in 0..len {
                for b in 0..len {
                    acc[(edge[a], edge[b])] += weight * inv[(a, b)];
                }
            }
            true
        }
    }
}

/// Mean log-likelihood over `edges`; `NEG_INFINITY` when any factorization
/// fails, which the optimizer treats as an inadmissible step.
fn raw_objective(p: &Params, edges: &[&Vec<usize>]) -> f64 {
    let n = p.v.nrows();
    let l = kernel_of(p);
    let mut shifted = l.clone();
    for i in 0..n {
        shifted[(i, i)] += 1.0;
    }
    let Some(chol) = shifted.cholesky() else {
        return f64::NEG_INFINITY;
    };
    let log_norm = 2.0 * chol.l().diagonal().iter().map(|x| x.ln()).sum::<f64>();
    let mut acc = 0.0;
    for edge in edges {
        match log_det_submatrix(&l, edge) {
            Some(v) => acc += v,
            None => return f64::NEG_INFINITY,
        }
    }
    -log_norm + acc / edges.len() as f64
}

/// Gradient of the batch objective. `None` when a submatrix is singular.
///
/// In kernel space `G = -(L+I)^{-1} + (1/|batch|) Σ_e expand((L_e)^{-1})`;
/// the chain rule then gives `grad_V = 2 beta G V`, `grad_beta = <G, V V'>`,
/// and `grad_alpha = diag(G)`.
fn raw_gradient(p: &Params, edges: &[&Vec<usize>]) -> Option<Params> {
    let n = p.v.nrows();
    let l = kernel_of(p);
    let mut shifted = l.clone();
    for i in 0..n {
        shifted[(i, i)] += 1.0;
    }
    let chol = shifted.cholesky()?;
    let mut g = chol.inverse();
    g.neg_mut();
    let weight = 1.0 / edges.len() as f64;
    for edge in edges {
        if !scatter_inverse(&mut g, &l, edge, weight) {
            return None;
        }
    }
    let gv = &g * &p.v;
    let grad_beta = gv.component_mul(&p.v).sum();
    Some(Params {
        v: gv * (2.0 * p.beta),
        beta: grad_beta,
        alpha: g.diagonal(),
    })
}

/// Projects in place: rows of `v` onto the unit sphere, `beta` and `alpha`
/// clamped to `floor_eps`. Returns the rows whose norm vanished and were
/// replaced by the first basis vector.
fn project_params(p: &mut Params, floor_eps: f64) -> Vec<usize> {
    let mut fallbacks = Vec::new();
    for i in 0..p.v.nrows() {
        let norm = p.v.row(i).norm();
        if norm < ZERO_ROW_TOL {
            p.v.row_mut(i).fill(0.0);
            p.v[(i, 0)] = 1.0;
            fallbacks.push(i);
        } else {
            let mut row = p.v.row_mut(i);
            row /= norm;
        }
    }
    p.beta = p.beta.max(floor_eps);
    for a in p.alpha.iter_mut() {
        *a = a.max(floor_eps);
    }
    fallbacks
}

/// Mean log-likelihood of the hypergraph under `config` (the quantity that
/// [`fit`] maximizes). Empty hyperedges contribute `log det` of the empty
/// matrix, i.e. zero, to the data term.
pub fn objective(config: &LatentConfig, h: &Hypergraph) -> Result<f64> {
    ensure_valid(config)?;
    if h.n_edges() == 0 {
        return Err(Error::InvalidArgument(
            "objective needs at least one hyperedge".into(),
        ));
    }
    if h.n_nodes() != config.n_nodes() {
        return Err(Error::DimensionMismatch {
            expected: config.n_nodes(),
            got: h.n_nodes(),
        });
    }
    let p = params_of(config);
    let edges: Vec<&Vec<usize>> = h.edges().iter().collect();
    let value = raw_objective(&p, &edges);
    if value == f64::NEG_INFINITY {
        // Identify the offending edge for the error message.
        let l = kernel_of(&p);
        for (idx, edge) in h.edges().iter().enumerate() {
            if log_det_submatrix(&l, edge).is_none() {
                return Err(Error::Numerical(format!(
                    "singular kernel submatrix at edge {idx}"
                )));
            }
        }
        return Err(Error::NotPositiveDefinite);
    }
    Ok(value)
}

/// The batch objective as a function of ambient coordinates, without the
/// unit-row constraint on `directions`: the mean log-likelihood of `edges`
/// under `L = beta V V' + diag(alpha)`.
///
/// This is the function whose exact ambient gradient [`gradient`] computes,
/// so it is the right target for finite-difference checks (perturbed rows
/// need not stay on the sphere). Returns `NEG_INFINITY` when any required
/// factorization fails.
pub fn ambient_objective(
    directions: &DMatrix<f64>,
    beta: f64,
    alpha: &DVector<f64>,
    edges: &[Vec<usize>],
) -> Result<f64> {
    if edges.is_empty() {
        return Err(Error::InvalidArgument(
            "ambient objective needs at least one hyperedge".into(),
        ));
    }
    for edge in edges {
        crate::kernel::validate_edge(edge, directions.nrows())?;
    }
    let p = Params {
        v: directions.clone(),
        beta,
        alpha: alpha.clone(),
    };
    let refs: Vec<&Vec<usize>> = edges.iter().collect();
    Ok(raw_objective(&p, &refs))
}

/// Exact gradient of the batch objective with respect to `(V, beta, alpha)`
/// in ambient coordinates; projection is handled separately by [`project`].
pub fn gradient(config: &LatentConfig, batch: &[Vec<usize>]) -> Result<Gradient> {
    ensure_valid(config)?;
    if batch.is_empty() {
        return Err(Error::InvalidArgument("gradient needs a nonempty batch".into()));
    }
    for edge in batch {
        crate::kernel::validate_edge(edge, config.n_nodes())?;
    }
    let p = params_of(config);
    let edges: Vec<&Vec<usize>> = batch.iter().collect();
    let g = raw_gradient(&p, &edges).ok_or_else(|| {
        Error::Numerical("singular kernel submatrix in gradient batch".into())
    })?;
    Ok(Gradient {
        directions: g.v,
        beta: g.beta,
        alpha: g.alpha,
    })
}

/// A zero-norm direction row replaced during projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProjectionEvent {
    pub row: usize,
}

/// Projects raw ambient parameters onto the feasible set: every direction row
/// is normalized (zero rows fall back to the first basis vector and are
/// reported), and `beta` and each `alpha_i` are clamped up to `floor_eps`.
/// Already-feasible input passes through unchanged.
pub fn project(
    raw_directions: DMatrix<f64>,
    raw_beta: f64,
    raw_alpha: DVector<f64>,
    floor_eps: f64,
) -> (LatentConfig, Vec<ProjectionEvent>) {
    let mut p = Params {
        v: raw_directions,
        beta: raw_beta,
        alpha: raw_alpha,
    };
    let events = project_params(&mut p, floor_eps)
        .into_iter()
        .map(|row| ProjectionEvent { row })
        .collect();
    (p.into_config(), events)
}

fn ensure_valid(config: &LatentConfig) -> Result<()> {
    let violations = validate_config(config);
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "{} invariant violation(s); run validate_config for details",
            violations.len()
        )))
    }
}

fn params_of(config: &LatentConfig) -> Params {
    Params {
        v: config.directions.clone(),
        beta: config.beta,
        alpha: config.alpha.clone(),
    }
}

struct RestartOutcome {
    params: Option<Params>,
    objective: f64,
    trace: Vec<f64>,
    converged: bool,
    epochs: usize,
}

/// Popularity-aligned initialization: directions uniform on the sphere,
/// `alpha` seeded from empirical inclusion frequencies through the
/// single-node marginal relation `alpha ≈ p/(1-p) - beta0`, `beta = 0.5`.
fn initialize(
    n_v: usize,
    d: usize,
    frequencies: &DVector<f64>,
    floor_eps: f64,
    rng: &mut ChaCha8Rng,
) -> Params {
    let v = sample_uniform_sphere(d, n_v, rng);
    let beta0 = 0.5;
    let init_floor = 0.01f64.max(floor_eps);
    let alpha = DVector::from_fn(n_v, |i, _| {
        let p = frequencies[i].clamp(floor_eps, 0.9);
        (p / (1.0 - p) - beta0).max(init_floor)
    });
    Params {
        v,
        beta: beta0,
        alpha,
    }
}

/// One backtracked projected-ascent step along the projection arc from
/// `base`: shrinks the persistent `step` until the sufficient-ascent
/// condition holds, grows it again after clean accepts. Returns the accepted
/// point and its batch objective, or `None` when no admissible step exists.
fn ascend(
    base: &Params,
    grad: &Params,
    batch: &[&Vec<usize>],
    step: &mut f64,
    opts: &FitOptions,
) -> Option<(Params, f64)> {
    let f_base = raw_objective(base, batch);
    if !f_base.is_finite() {
        return None;
    }
    let mut backtracked = false;
    for _ in 0..MAX_BACKTRACKS {
        let mut candidate = base.stepped(grad, *step);
        project_params(&mut candidate, opts.floor_eps);
        let f_candidate = raw_objective(&candidate, batch);
        let dist = candidate.distance_sq(base);
        if f_candidate.is_finite()
            && f_candidate >= f_base + ARMIJO_SIGMA * dist / step.max(1e-300)
        {
            if !backtracked {
                *step = (*step * STEP_GROWTH).min(opts.step_size * 100.0);
            }
            return Some((candidate, f_candidate));
        }
        *step *= opts.backtrack_factor;
        backtracked = true;
    }
    *step = opts.step_size;
    None
}

fn run_restart(
    edges: &[Vec<usize>],
    n_v: usize,
    frequencies: &DVector<f64>,
    opts: &FitOptions,
    restart_seed: u64,
) -> RestartOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(restart_seed);
    let n_e = edges.len();
    let batch_len = match opts.batch_size {
        BatchSize::Full => n_e,
        BatchSize::Size(s) => s.min(n_e),
    };
    let full_mode = batch_len == n_e;
    let all_edges: Vec<&Vec<usize>> = edges.iter().collect();

    let mut x = initialize(n_v, opts.d, frequencies, opts.floor_eps, &mut rng);
    project_params(&mut x, opts.floor_eps);
    let mut x_prev = x.clone();
    // The extrapolation sequence: kept even when the plain step wins the
    // monotone comparison, so momentum survives shallow dips.
    let mut z = x.clone();
    let mut t_prev = 0.0f64;
    let mut t = 1.0f64;
    let mut step_y = opts.step_size;
    let mut step_x = opts.step_size;

    let mut best_obj = raw_objective(&x, &all_edges);
    if !best_obj.is_finite() {
        return RestartOutcome {
            params: None,
            objective: f64::NAN,
            trace: vec![f64::NAN],
            converged: false,
            epochs: 0,
        };
    }
    let mut best_params = x.clone();
    let mut trace = vec![best_obj];
    let mut prev_full = best_obj;
    let mut converged = false;
    let mut quiet_epochs = 0;
    let mut epochs = 0;

    let mut order: Vec<usize> = (0..n_e).collect();
    for epoch in 1..=opts.max_iters {
        if !full_mode {
            use rand::seq::SliceRandom;
            order.shuffle(&mut rng);
        }
        for chunk in order.chunks(batch_len) {
            let batch: Vec<&Vec<usize>> = chunk.iter().map(|&i| &edges[i]).collect();

            // Extrapolated point, pulled toward the z-sequence:
            // y = x + (t_prev/t)(z - x) + ((t_prev - 1)/t)(x - x_prev).
            let mut y = x.lin_combine(&z, t_prev / t, &x_prev, (t_prev - 1.0) / t);
            project_params(&mut y, opts.floor_eps);

            // Accelerated step from the extrapolated point.
            let z_next = raw_gradient(&y, &batch)
                .map(|g| precondition(g, n_v))
                .and_then(|g| ascend(&y, &g, &batch, &mut step_y, opts));
            // Plain projected-gradient step from the current iterate; its
            // sufficient-ascent guarantee is what makes the scheme monotone.
            let v_next = raw_gradient(&x, &batch)
                .map(|g| precondition(g, n_v))
                .and_then(|g| ascend(&x, &g, &batch, &mut step_x, opts));

            let (next, z_new) = match (z_next, v_next) {
                (Some((z_cand, f_z)), Some((v_cand, f_v))) => {
                    let next = if f_z >= f_v { z_cand.clone() } else { v_cand };
                    (next, z_cand)
                }
                (Some((z_cand, _)), None) => (z_cand.clone(), z_cand),
                (None, Some((v_cand, _))) => (v_cand.clone(), v_cand),
                (None, None) => continue,
            };
            z = z_new;
            x_prev = std::mem::replace(&mut x, next);
            t_prev = t;
            t = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        }

        let full = raw_objective(&x, &all_edges);
        epochs = epoch;
        if !full.is_finite() {
            return RestartOutcome {
                params: None,
                objective: f64::NAN,
                trace,
                converged: false,
                epochs,
            };
        }
        if full > best_obj {
            best_obj = full;
            best_params = x.clone();
        }
        trace.push(best_obj);
        let rel_change = (full - prev_full).abs() / prev_full.abs().max(1e-12);
        if rel_change < opts.tol {
            quiet_epochs += 1;
            if quiet_epochs >= 3 {
                converged = true;
                break;
            }
        } else {
            quiet_epochs = 0;
        }
        prev_full = full;
    }

    RestartOutcome {
        params: Some(best_params),
        objective: best_obj,
        trace,
        converged,
        epochs,
    }
}

/// Fits the model by projected accelerated proximal gradient with restarts.
///
/// Each restart starts from an independent random initialization; the result
/// is the restart with the highest full-data objective. Requires at least one
/// nonempty hyperedge. Fails only if every restart diverges.
pub fn fit(h: &Hypergraph, opts: &FitOptions) -> Result<FitResult> {
    opts.validate(h.n_nodes())?;
    if !h.edges().iter().any(|e| !e.is_empty()) {
        return Err(Error::InvalidArgument(
            "fit needs at least one nonempty hyperedge".into(),
        ));
    }
    let n_v = h.n_nodes();
    let n_e = h.n_edges();
    let frequencies = empirical_marginals(h)?;
    let seeds: Vec<u64> = (0..opts.n_inits)
        .map(|r| derive_seed(opts.seed, r as u64))
        .collect();

    let outcomes: Vec<RestartOutcome> = if opts.n_inits > 1 {
        seeds
            .par_iter()
            .map(|&s| run_restart(h.edges(), n_v, &frequencies, opts, s))
            .collect()
    } else {
        seeds
            .iter()
            .map(|&s| run_restart(h.edges(), n_v, &frequencies, opts, s))
            .collect()
    };

    let restart_objectives: Vec<f64> = outcomes.iter().map(|o| o.objective).collect();
    let best_idx = outcomes
        .iter()
        .enumerate()
        .filter(|(_, o)| o.params.is_some() && o.objective.is_finite())
        .max_by(|a, b| a.1.objective.total_cmp(&b.1.objective))
        .map(|(i, _)| i);
    let Some(best_idx) = best_idx else {
        return Err(Error::FitFailed(format!(
            "all {} restarts diverged (objectives: {:?})",
            opts.n_inits, restart_objectives
        )));
    };
    let best = &outcomes[best_idx];
    let final_objective = best.objective;
    let aic = aic_value(n_v, opts.d, n_e, final_objective);
    Ok(FitResult {
        config: best.params.clone().unwrap().into_config(),
        objective_trace: best.trace.clone(),
        final_objective,
        aic,
        converged: best.converged,
        iterations_used: best.epochs,
        restart_objectives,
    })
}

/// `AIC = 2 (n_v d + 1) - 2 (n_e * mean log-likelihood)`; the second term is
/// the total log-likelihood.
pub fn aic_value(n_v: usize, d: usize, n_e: usize, mean_objective: f64) -> f64 {
    2.0 * (n_v as f64 * d as f64 + 1.0) - 2.0 * (n_e as f64 * mean_objective)
}

/// Outcome of [`select_dimension`].
#[derive(Debug, Clone)]
pub struct DimensionSelection {
    pub best_d: usize,
    /// Successful fits per candidate, in candidate order.
    pub fits: Vec<(usize, FitResult)>,
    /// Candidates whose fit failed, with the failure rendered as text.
    pub failures: Vec<(usize, String)>,
}

/// Fits every candidate dimension and picks the one with minimal AIC,
/// breaking ties toward the smaller dimension. Failed candidates are
/// excluded and reported; the call fails only if no candidate fits.
pub fn select_dimension(
    h: &Hypergraph,
    d_candidates: &[usize],
    opts: &FitOptions,
) -> Result<DimensionSelection> {
    if d_candidates.is_empty() {
        return Err(Error::InvalidArgument("no candidate dimensions".into()));
    }
    let mut fits = Vec::new();
    let mut failures = Vec::new();
    for &d in d_candidates {
        let mut candidate_opts = opts.clone();
        candidate_opts.d = d;
        match fit(h, &candidate_opts) {
            Ok(result) => fits.push((d, result)),
            Err(err) => failures.push((d, err.to_string())),
        }
    }
    if fits.is_empty() {
        return Err(Error::FitFailed(
            "every candidate dimension failed to fit".into(),
        ));
    }
    let best_d = fits
        .iter()
        .min_by(|a, b| a.1.aic.total_cmp(&b.1.aic).then(a.0.cmp(&b.0)))
        .map(|(d, _)| *d)
        .unwrap();
    Ok(DimensionSelection {
        best_d,
        fits,
        failures,
    })
}
