//! Optimal quantization grids for the standard Gaussian.
//!
//! A grid is the finite support used in place of the Brownian increments: the
//! scheme draws its conditional expectations from these nodes and weights, so
//! every grid must be stationary (each point is the conditional mean of its
//! Voronoi cell), exactly centered, and symmetric.
//!
//! One-dimensional grids are built by Lloyd iteration started from the
//! equiprobable Gaussian quantiles. Plain Lloyd stalls for large point counts
//! (its contraction degrades like 1 - O(1/M^2)), so once the sweep has tamed
//! the residual the remaining distance to the fixed point is closed by a
//! Newton iteration on the stationarity system, whose Jacobian is
//! tridiagonal. Both phases target the same fixed point; the budget counts
//! sweeps and Newton steps alike.
//!
//! Multi-dimensional grids are coordinate products of the 1-D grid. They are
//! suboptimal by a constant factor but achieve the same `M^(-2/d)` distortion
//! rate and keep the build self-contained.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use thiserror::Error;

use crate::fit;
use crate::gauss;

#[derive(Debug, Error)]
pub enum QuantizerError {
    #[error("grid must have at least one point")]
    ZeroPoints,
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("no convergence after {iters} iterations (residual {residual:.3e}); tolerance too tight")]
    NonConvergence { iters: usize, residual: f64 },
    #[error("distortion-rate fit needs at least 3 increasing point counts")]
    BadCountList,
    #[error("degenerate distortion fit: no variation across point counts (grid build failure?)")]
    DegenerateFit,
    #[error("grid file {path}: {kind}")]
    File { path: String, kind: FileErrorKind },
    #[error("grid invariant violated: {0}")]
    InvariantViolation(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum FileErrorKind {
    #[error("missing or malformed header (expected \"M d\")")]
    BadHeader,
    #[error("row {row} is missing (file truncated: expected {expected} node rows)")]
    MissingRow { row: usize, expected: usize },
    #[error("row {row}: expected {expected} fields, found {found}")]
    ShapeMismatch { row: usize, expected: usize, found: usize },
    #[error("row {row}: unparseable number {token:?}")]
    BadNumber { row: usize, token: String },
    #[error("node count {count} is not a perfect {dim}-th power")]
    BadNodeCount { count: usize, dim: usize },
}

/// Stationary quantizer of N(0,1) with `points.len()` levels.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantGrid1D {
    /// Quantizer levels, strictly increasing.
    pub points: Vec<f64>,
    /// Voronoi cell probabilities, each positive, summing to one.
    pub weights: Vec<f64>,
    /// Mean squared quantization error E[(Z - q(Z))^2].
    pub distortion: f64,
}

/// Product quantizer of the d-dimensional standard Gaussian.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantGridD {
    pub dim: usize,
    /// Per-dimension level count; `nodes` holds `per_dim_points^dim` rows.
    pub per_dim_points: usize,
    /// Node coordinates, row-major: node k occupies `[k*dim, (k+1)*dim)`.
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Total mean squared error, `dim` times the 1-D distortion.
    pub distortion: f64,
}

impl QuantGridD {
    pub fn node_count(&self) -> usize {
        self.weights.len()
    }

    pub fn node(&self, k: usize) -> &[f64] {
        &self.nodes[k * self.dim..(k + 1) * self.dim]
    }
}

/// Gaussian mass, first and second moment of the cell (a, b).
/// Uses E[Z 1_{a<Z<b}] = pdf(a) - pdf(b) and
/// E[Z^2 1_{a<Z<b}] = mass + a pdf(a) - b pdf(b), with infinite edges
/// contributing zero.
fn cell_moments(a: f64, b: f64) -> (f64, f64, f64) {
    let (pa, ca) = if a.is_finite() {
        (gauss::pdf(a), gauss::cdf(a))
    } else {
        (0.0, 0.0)
    };
    let (pb, cb) = if b.is_finite() {
        (gauss::pdf(b), gauss::cdf(b))
    } else {
        (0.0, 1.0)
    };
    let mass = cb - ca;
    let m1 = pa - pb;
    let apa = if a.is_finite() { a * pa } else { 0.0 };
    let bpb = if b.is_finite() { b * pb } else { 0.0 };
    (mass, m1, mass + apa - bpb)
}

fn cell_edges(points: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let m = points.len();
    let mut lo = Vec::with_capacity(m);
    let mut hi = Vec::with_capacity(m);
    for k in 0..m {
        lo.push(if k == 0 {
            f64::NEG_INFINITY
        } else {
            0.5 * (points[k - 1] + points[k])
        });
        hi.push(if k == m - 1 {
            f64::INFINITY
        } else {
            0.5 * (points[k] + points[k + 1])
        });
    }
    (lo, hi)
}

/// Cell centroids for the Voronoi partition of `points`.
fn centroids(points: &[f64], out: &mut [f64]) {
    let (lo, hi) = cell_edges(points);
    for k in 0..points.len() {
        let (mass, m1, _) = cell_moments(lo[k], hi[k]);
        out[k] = m1 / mass;
    }
}

/// Max stationarity residual `|x_k - centroid_k|`.
fn residual(points: &[f64]) -> f64 {
    let mut c = vec![0.0; points.len()];
    centroids(points, &mut c);
    points
        .iter()
        .zip(&c)
        .map(|(x, c)| (x - c).abs())
        .fold(0.0, f64::max)
}

/// One Newton step on F(x) = x - centroid(x). The Jacobian is tridiagonal
/// because each centroid depends only on its own point and the two
/// neighbours through the shared cell edges. Returns the proposed update.
fn newton_step(points: &[f64]) -> Option<Vec<f64>> {
    let m = points.len();
    let (lo, hi) = cell_edges(points);
    let mut diag = vec![0.0; m];
    let mut sub = vec![0.0; m]; // sub[k] multiplies x_{k-1}
    let mut sup = vec![0.0; m]; // sup[k] multiplies x_{k+1}
    let mut rhs = vec![0.0; m];
    for k in 0..m {
        let (mass, m1, _) = cell_moments(lo[k], hi[k]);
        if !(mass > 0.0) {
            return None;
        }
        let c = m1 / mass;
        rhs[k] = points[k] - c;
        // d centroid / d edge, times d edge / d point = 1/2
        let dlo = if lo[k].is_finite() {
            gauss::pdf(lo[k]) * (c - lo[k]) / mass
        } else {
            0.0
        };
        let dhi = if hi[k].is_finite() {
            gauss::pdf(hi[k]) * (hi[k] - c) / mass
        } else {
            0.0
        };
        diag[k] = 1.0 - 0.5 * (dlo + dhi);
        sub[k] = -0.5 * dlo;
        sup[k] = -0.5 * dhi;
    }
    // Thomas algorithm
    let mut cp = vec![0.0; m];
    let mut dp = vec![0.0; m];
    let mut den = diag[0];
    if den.abs() < 1e-300 {
        return None;
    }
    cp[0] = sup[0] / den;
    dp[0] = rhs[0] / den;
    for k in 1..m {
        den = diag[k] - sub[k] * cp[k - 1];
        if den.abs() < 1e-300 {
            return None;
        }
        cp[k] = sup[k] / den;
        dp[k] = (rhs[k] - sub[k] * dp[k - 1]) / den;
    }
    let mut delta = vec![0.0; m];
    delta[m - 1] = dp[m - 1];
    for k in (0..m - 1).rev() {
        delta[k] = dp[k] - cp[k] * delta[k + 1];
    }
    Some(delta)
}

fn strictly_increasing(points: &[f64]) -> bool {
    points.windows(2).all(|w| w[0] < w[1])
}

/// Distortion of a stationary-or-not grid, in closed form per cell.
fn distortion_of(points: &[f64]) -> (Vec<f64>, f64) {
    let (lo, hi) = cell_edges(points);
    let mut weights = Vec::with_capacity(points.len());
    let mut dist = 0.0;
    for k in 0..points.len() {
        let (mass, m1, m2) = cell_moments(lo[k], hi[k]);
        weights.push(mass);
        dist += m2 - 2.0 * points[k] * m1 + points[k] * points[k] * mass;
    }
    (weights, dist)
}

/// Builds the stationary M-point quantizer of N(0,1).
///
/// Deterministic in `(m, tol, max_iters)`: quantile initialization, Lloyd
/// sweeps, then Newton polish once the sweep movement falls under 1e-6.
/// Convergence is declared when the point movement of a step drops below
/// `tol`; the returned grid additionally satisfies the stationarity residual
/// bound checked by the invariants.
pub fn build_gaussian_grid_1d(
    m: usize,
    tol: f64,
    max_iters: usize,
) -> Result<QuantGrid1D, QuantizerError> {
    if m == 0 {
        return Err(QuantizerError::ZeroPoints);
    }
    if !(tol > 0.0) {
        return Err(QuantizerError::BadTolerance(tol));
    }
    let mut points: Vec<f64> = (0..m)
        .map(|k| gauss::ppf((k as f64 + 0.5) / m as f64))
        .collect();
    if m == 1 {
        points[0] = 0.0;
    }
    let mut converged = m == 1;
    let mut iters = 0usize;
    let mut last_move = f64::INFINITY;
    let mut scratch = vec![0.0; m];
    while !converged && iters < max_iters {
        if last_move < 1e-6 {
            if let Some(delta) = newton_step(&points) {
                let moved = delta.iter().fold(0.0f64, |a, d| a.max(d.abs()));
                let candidate: Vec<f64> =
                    points.iter().zip(&delta).map(|(x, d)| x - d).collect();
                if strictly_increasing(&candidate) {
                    points = candidate;
                    iters += 1;
                    if moved < tol {
                        converged = true;
                    }
                    continue;
                }
            }
            // Newton rejected; fall through to a plain sweep
        }
        centroids(&points, &mut scratch);
        last_move = points
            .iter()
            .zip(&scratch)
            .map(|(x, c)| (x - c).abs())
            .fold(0.0, f64::max);
        points.copy_from_slice(&scratch);
        iters += 1;
        if last_move < tol {
            converged = true;
        }
    }
    if !converged {
        return Err(QuantizerError::NonConvergence {
            iters,
            residual: residual(&points),
        });
    }
    // symmetrize exactly: the fixed point is odd-symmetric, so averaging a
    // point against its mirror only removes roundoff
    let sym: Vec<f64> = (0..m)
        .map(|k| 0.5 * (points[k] - points[m - 1 - k]))
        .collect();
    let (weights, distortion) = distortion_of(&sym);
    Ok(QuantGrid1D {
        points: sym,
        weights,
        distortion,
    })
}

/// d-fold coordinate product of a 1-D grid. Nodes enumerate row-major with
/// the first coordinate slowest, weights multiply, distortion adds.
pub fn product_grid(base: &QuantGrid1D, d: usize) -> Result<QuantGridD, QuantizerError> {
    if d == 0 {
        return Err(QuantizerError::ZeroPoints);
    }
    let m = base.points.len();
    let count = m
        .checked_pow(d as u32)
        .ok_or(QuantizerError::ZeroPoints)?;
    let mut nodes = Vec::with_capacity(count * d);
    let mut weights = Vec::with_capacity(count);
    let mut idx = vec![0usize; d];
    for _ in 0..count {
        let mut w = 1.0;
        for &i in idx.iter() {
            nodes.push(base.points[i]);
            w *= base.weights[i];
        }
        weights.push(w);
        for j in (0..d).rev() {
            idx[j] += 1;
            if idx[j] < m {
                break;
            }
            idx[j] = 0;
        }
    }
    Ok(QuantGridD {
        dim: d,
        per_dim_points: m,
        nodes,
        weights,
        distortion: d as f64 * base.distortion,
    })
}

/// Fitted log-log slope of total distortion against total node count for
/// per-dimension counts `m_list` (total count is `m^d`).
pub fn grid_distortion_rate(d: usize, m_list: &[usize]) -> Result<f64, QuantizerError> {
    if m_list.len() < 3 || !m_list.windows(2).all(|w| w[0] < w[1]) {
        return Err(QuantizerError::BadCountList);
    }
    let mut counts = Vec::with_capacity(m_list.len());
    let mut dists = Vec::with_capacity(m_list.len());
    for &m in m_list {
        let g = build_gaussian_grid_1d(m, 1e-12, 100_000)?;
        counts.push((m as f64).powi(d as i32));
        dists.push(d as f64 * g.distortion);
    }
    let spread = dists.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - dists.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(spread > 0.0) {
        return Err(QuantizerError::DegenerateFit);
    }
    fit::loglog_slope(&counts, &dists).ok_or(QuantizerError::DegenerateFit)
}

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes a grid as plain text: header `M d`, then one line per node with
/// `d` coordinates and a weight at 17 significant digits.
pub fn save_grid(grid: &QuantGridD, path: &Path) -> Result<(), QuantizerError> {
    let mut out = String::new();
    let count = grid.node_count();
    writeln!(out, "{} {}", count, grid.dim).unwrap();
    for k in 0..count {
        let mut line = String::new();
        for &c in grid.node(k) {
            line.push_str(&fmt17(c));
            line.push(' ');
        }
        line.push_str(&fmt17(grid.weights[k]));
        out.push_str(&line);
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Saves a 1-D grid in the same format with `d = 1`.
pub fn save_grid_1d(grid: &QuantGrid1D, path: &Path) -> Result<(), QuantizerError> {
    save_grid(&product_grid(grid, 1)?, path)
}

/// Reads a grid file back, recomputing the distortion and validating the
/// grid invariants before returning.
pub fn load_grid(path: &Path) -> Result<QuantGridD, QuantizerError> {
    let text = std::fs::read_to_string(path)?;
    let file_err = |kind| QuantizerError::File {
        path: path.display().to_string(),
        kind,
    };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| file_err(FileErrorKind::BadHeader))?;
    let mut hdr = header.split_whitespace();
    let count: usize = hdr
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| file_err(FileErrorKind::BadHeader))?;
    let dim: usize = hdr
        .next()
        .and_then(|t| t.parse().ok())
        .filter(|&d| d >= 1)
        .ok_or_else(|| file_err(FileErrorKind::BadHeader))?;
    if hdr.next().is_some() {
        return Err(file_err(FileErrorKind::BadHeader));
    }
    let mut nodes = Vec::with_capacity(count * dim);
    let mut weights = Vec::with_capacity(count);
    for row in 0..count {
        let line = lines.next().ok_or_else(|| {
            file_err(FileErrorKind::MissingRow {
                row: row + 1,
                expected: count,
            })
        })?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != dim + 1 {
            return Err(file_err(FileErrorKind::ShapeMismatch {
                row: row + 1,
                expected: dim + 1,
                found: fields.len(),
            }));
        }
        for (j, tok) in fields.iter().enumerate() {
            let v: f64 = tok.parse().map_err(|_| {
                file_err(FileErrorKind::BadNumber {
                    row: row + 1,
                    token: tok.to_string(),
                })
            })?;
            if j < dim {
                nodes.push(v);
            } else {
                weights.push(v);
            }
        }
    }
    let per_dim = per_dim_count(count, dim)
        .ok_or_else(|| file_err(FileErrorKind::BadNodeCount { count, dim }))?;
    let grid = QuantGridD {
        dim,
        per_dim_points: per_dim,
        distortion: recompute_distortion(&nodes, dim, per_dim),
        nodes,
        weights,
    };
    validate_grid(&grid)?;
    Ok(grid)
}

fn per_dim_count(count: usize, dim: usize) -> Option<usize> {
    let m = (count as f64).powf(1.0 / dim as f64).round() as usize;
    for cand in m.saturating_sub(1)..=m + 1 {
        if cand >= 1 && cand.checked_pow(dim as u32) == Some(count) {
            return Some(cand);
        }
    }
    None
}

/// Distortion from the distinct first-axis levels (the product structure
/// makes the total d times the 1-D value).
fn recompute_distortion(nodes: &[f64], dim: usize, per_dim: usize) -> f64 {
    let stride = per_dim.pow(dim as u32 - 1) * dim;
    let mut levels: Vec<f64> = (0..per_dim).map(|i| nodes[i * stride]).collect();
    levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let (_, d1) = distortion_of(&levels);
    dim as f64 * d1
}

/// Checks the grid invariants: positive weights summing to one, centered
/// node set, sign-flip symmetry with matching weights, and (through the
/// first-axis levels) stationarity of the underlying 1-D grid.
pub fn validate_grid(grid: &QuantGridD) -> Result<(), QuantizerError> {
    let inv = |msg: String| Err(QuantizerError::InvariantViolation(msg));
    let sum: f64 = grid.weights.iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        return inv(format!("weights sum to {sum:.17}, expected 1"));
    }
    if let Some(w) = grid.weights.iter().find(|&&w| !(w > 0.0)) {
        return inv(format!("non-positive weight {w}"));
    }
    for j in 0..grid.dim {
        let c: f64 = (0..grid.node_count())
            .map(|k| grid.weights[k] * grid.node(k)[j])
            .sum();
        if c.abs() > 1e-12 {
            return inv(format!("grid not centered: coordinate {j} has mean {c:.3e}"));
        }
    }
    // sign-flip closure: match each node's flip along every axis
    let key = |coords: &[f64]| -> Vec<u64> {
        coords
            .iter()
            .map(|&c| (if c == 0.0 { 0.0f64 } else { c }).to_bits())
            .collect()
    };
    let mut index = std::collections::HashMap::new();
    for k in 0..grid.node_count() {
        index.insert(key(grid.node(k)), k);
    }
    let mut flipped = vec![0.0; grid.dim];
    for k in 0..grid.node_count() {
        for j in 0..grid.dim {
            flipped.copy_from_slice(grid.node(k));
            flipped[j] = -flipped[j];
            match index.get(&key(&flipped)) {
                Some(&k2) if (grid.weights[k2] - grid.weights[k]).abs() <= 1e-10 => {}
                Some(&k2) => {
                    return inv(format!(
                        "asymmetric weights under sign flip: {} vs {}",
                        grid.weights[k], grid.weights[k2]
                    ))
                }
                None => return inv(format!("node set not closed under sign flip of axis {j}")),
            }
        }
    }
    // stationarity of the first-axis levels
    let stride = grid.per_dim_points.pow(grid.dim as u32 - 1) * grid.dim;
    let mut levels: Vec<f64> = (0..grid.per_dim_points)
        .map(|i| grid.nodes[i * stride])
        .collect();
    levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if !strictly_increasing(&levels) {
        return inv("per-dimension levels are not strictly increasing".into());
    }
    let res = residual(&levels);
    if res > 1e-9 {
        return inv(format!("stationarity residual {res:.3e} exceeds 1e-9"));
    }
    Ok(())
}

impl QuantGrid1D {
    /// Max over points of the distance to the Gaussian cell centroid.
    pub fn stationarity_residual(&self) -> f64 {
        residual(&self.points)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Shared handle used by the solver so repeated studies reuse built grids.
pub type SharedGrid = Arc<QuantGridD>;
