//! The Euler scheme, its lattice-projected quantized version, and seeded
//! path simulation for diagnostics.

use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::driver::clamp_weights;
use crate::gauss;
use crate::lattice::Lattice;
use crate::quantizer::QuantGridD;

#[derive(Debug, Error)]
pub enum ForwardError {
    #[error("time grid needs at least one step")]
    EmptyGrid,
    #[error("horizon must be positive, got {0}")]
    BadHorizon(f64),
    #[error("path count must be at least 1")]
    NoPaths,
}

type VecField = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

/// Drift and diffusion of the forward SDE. `drift` writes a d-vector,
/// `diffusion` writes the d x d matrix row-major.
#[derive(Clone)]
pub struct SdeCoeffs {
    pub drift: Arc<VecField>,
    pub diffusion: Arc<VecField>,
    /// Common Lipschitz constant of both coefficient maps.
    pub lipschitz_k: f64,
}

impl SdeCoeffs {
    /// Coordinatewise geometric Brownian motion: zero drift,
    /// `sigma(x) = nu * diag(x)`.
    pub fn gbm(_dim: usize, nu: f64) -> Self {
        SdeCoeffs {
            drift: Arc::new(|_x, out| out.fill(0.0)),
            diffusion: Arc::new(move |x, out| {
                out.fill(0.0);
                for j in 0..x.len() {
                    out[j * x.len() + j] = nu * x[j];
                }
            }),
            lipschitz_k: nu.abs(),
        }
    }

    /// Constant coefficients (used by tests and custom problems).
    pub fn constant(dim: usize, b: Vec<f64>, sigma_diag: Vec<f64>) -> Self {
        assert_eq!(b.len(), dim);
        assert_eq!(sigma_diag.len(), dim);
        SdeCoeffs {
            drift: Arc::new(move |_x, out| out.copy_from_slice(&b)),
            diffusion: Arc::new(move |_x, out| {
                out.fill(0.0);
                for (j, &s) in sigma_diag.iter().enumerate() {
                    out[j * dim + j] = s;
                }
            }),
            lipschitz_k: 0.0,
        }
    }
}

/// Uniform time grid on [0, T].
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    pub n: usize,
    pub horizon: f64,
}

impl TimeGrid {
    pub fn uniform(n: usize, horizon: f64) -> Result<Self, ForwardError> {
        if n == 0 {
            return Err(ForwardError::EmptyGrid);
        }
        if !(horizon > 0.0) {
            return Err(ForwardError::BadHorizon(horizon));
        }
        Ok(TimeGrid { n, horizon })
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.n as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        self.step() * i as f64
    }
}

/// One Euler step `x + h b(x) + sigma(x) dw`.
pub fn euler_step(coeffs: &SdeCoeffs, x: &[f64], h: f64, dw: &[f64]) -> Vec<f64> {
    let d = x.len();
    let mut b = vec![0.0; d];
    let mut sig = vec![0.0; d * d];
    (coeffs.drift)(x, &mut b);
    (coeffs.diffusion)(x, &mut sig);
    let mut out = vec![0.0; d];
    for j in 0..d {
        let mut acc = x[j] + h * b[j];
        for l in 0..d {
            acc += sig[j * d + l] * dw[l];
        }
        out[j] = acc;
    }
    out
}

/// Lattice-projected Euler step with a quantized increment:
/// `project(x + h b(x) + sigma(x) dw_hat)`.
pub fn discrete_euler_step(
    coeffs: &SdeCoeffs,
    lat: &Lattice,
    x: &[f64],
    h: f64,
    dw_hat: &[f64],
) -> Vec<f64> {
    lat.project(&euler_step(coeffs, x, h, dw_hat))
}

/// One successor of a lattice point under the quantized transition kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct Successor {
    /// Flat lattice index of the projected successor.
    pub index: usize,
    pub point: Vec<f64>,
    /// Quantizer cell probability.
    pub weight: f64,
    /// Clamped weight row used to extract Z: clamp of node/sqrt(h).
    pub h_weights: Vec<f64>,
}

/// The full successor fan of `x` under the quantizer `grid`: for each node
/// g_k, the projected Euler step with increment sqrt(h) g_k, the node's
/// weight, and the clamped weight vector. `r_level = None` leaves the
/// weights unclamped (untruncated mode).
pub fn transition_support(
    coeffs: &SdeCoeffs,
    lat: &Lattice,
    grid: &QuantGridD,
    x: &[f64],
    h: f64,
    r_level: Option<f64>,
) -> Vec<Successor> {
    let d = lat.dim();
    let sqh = h.sqrt();
    let mut b = vec![0.0; d];
    let mut sig = vec![0.0; d * d];
    (coeffs.drift)(x, &mut b);
    (coeffs.diffusion)(x, &mut sig);
    let base: Vec<f64> = (0..d).map(|j| x[j] + h * b[j]).collect();
    let mut out = Vec::with_capacity(grid.node_count());
    let mut target = vec![0.0; d];
    for k in 0..grid.node_count() {
        let node = grid.node(k);
        for j in 0..d {
            let mut acc = base[j];
            for l in 0..d {
                acc += sqh * sig[j * d + l] * node[l];
            }
            target[j] = acc;
        }
        let point = lat.project(&target);
        let index = lat.project_index(&target);
        let dw_over_h: Vec<f64> = node.iter().map(|&g| g / sqh).collect();
        let h_weights = match r_level {
            Some(r) => clamp_weights(&dw_over_h, r, h),
            None => dw_over_h,
        };
        out.push(Successor {
            index,
            point,
            weight: grid.weights[k],
            h_weights,
        });
    }
    out
}

/// Moment summaries of a seeded Euler path ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsembleStats {
    pub count: usize,
    pub terminal_mean: Vec<f64>,
    /// Standard deviation of each terminal coordinate across paths.
    pub terminal_std: Vec<f64>,
    /// Mean over paths of the max-over-time Euclidean norm.
    pub mean_sup_norm: f64,
    pub max_sup_norm: f64,
}

const PATH_CHUNK: usize = 4096;

/// Simulates `count` Euler paths with the counter-based Gaussian stream
/// (draw for path p, step i, coordinate j sits at counter `(p*n + i)*d + j`),
/// so results are bit-identical for a given seed regardless of worker count.
pub fn simulate_paths(
    coeffs: &SdeCoeffs,
    n: usize,
    horizon: f64,
    x0: &[f64],
    count: usize,
    seed: u64,
) -> Result<PathEnsembleStats, ForwardError> {
    let grid = TimeGrid::uniform(n, horizon)?;
    if count == 0 {
        return Err(ForwardError::NoPaths);
    }
    let d = x0.len();
    let h = grid.step();
    let sqh = h.sqrt();
    let chunks: Vec<(usize, usize)> = (0..count)
        .step_by(PATH_CHUNK)
        .map(|lo| (lo, (lo + PATH_CHUNK).min(count)))
        .collect();
    struct Partial {
        sum: Vec<f64>,
        sum_sq: Vec<f64>,
        sup_sum: f64,
        sup_max: f64,
    }
    let partials: Vec<Partial> = chunks
        .par_iter()
        .map(|&(lo, hi)| {
            let mut sum = vec![0.0; d];
            let mut sum_sq = vec![0.0; d];
            let mut sup_sum = 0.0f64;
            let mut sup_max = 0.0f64;
            let mut x = vec![0.0; d];
            let mut dw = vec![0.0; d];
            for p in lo..hi {
                x.copy_from_slice(x0);
                let mut sup = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                for i in 0..n {
                    for j in 0..d {
                        let ctr = ((p * n + i) * d + j) as u64;
                        dw[j] = sqh * gauss::gaussian_at(seed, ctr);
                    }
                    x = euler_step(coeffs, &x, h, &dw);
                    sup = sup.max(x.iter().map(|v| v * v).sum::<f64>().sqrt());
                }
                for j in 0..d {
                    sum[j] += x[j];
                    sum_sq[j] += x[j] * x[j];
                }
                sup_sum += sup;
                sup_max = sup_max.max(sup);
            }
            Partial {
                sum,
                sum_sq,
                sup_sum,
                sup_max,
            }
        })
        .collect();
    // fixed chunk order keeps the reduction deterministic
    let mut sum = vec![0.0; d];
    let mut sum_sq = vec![0.0; d];
    let mut sup_sum = 0.0;
    let mut sup_max = 0.0f64;
    for p in &partials {
        for j in 0..d {
            sum[j] += p.sum[j];
            sum_sq[j] += p.sum_sq[j];
        }
        sup_sum += p.sup_sum;
        sup_max = sup_max.max(p.sup_max);
    }
    let cnt = count as f64;
    let terminal_mean: Vec<f64> = sum.iter().map(|s| s / cnt).collect();
    let terminal_std: Vec<f64> = (0..d)
        .map(|j| ((sum_sq[j] / cnt - terminal_mean[j] * terminal_mean[j]).max(0.0)).sqrt())
        .collect();
    Ok(PathEnsembleStats {
        count,
        terminal_mean,
        terminal_std,
        mean_sup_norm: sup_sum / cnt,
        max_sup_norm: sup_max,
    })
}

/// Empirical stability constant of the Euler scheme under per-step
/// perturbations: two schemes share increments, the second starts offset and
/// receives seeded bounded perturbations; returns
/// `E[sup_k |X_k - X~_k|] / (|X_0 - X~_0| + E sum |zeta_j|)`.
pub fn perturbation_stability_constant(
    coeffs: &SdeCoeffs,
    n: usize,
    horizon: f64,
    x0: &[f64],
    initial_gap: f64,
    zeta_scale: f64,
    count: usize,
    seed: u64,
) -> Result<f64, ForwardError> {
    let grid = TimeGrid::uniform(n, horizon)?;
    if count == 0 {
        return Err(ForwardError::NoPaths);
    }
    let d = x0.len();
    let h = grid.step();
    let sqh = h.sqrt();
    let mut gap_sum = 0.0;
    let mut denom_sum = 0.0;
    let mut x = vec![0.0; d];
    let mut xt = vec![0.0; d];
    let mut dw = vec![0.0; d];
    for p in 0..count {
        x.copy_from_slice(x0);
        for j in 0..d {
            xt[j] = x0[j] + initial_gap / (d as f64).sqrt();
        }
        let mut sup_gap = initial_gap;
        let mut zeta_total = 0.0;
        for i in 0..n {
            for j in 0..d {
                let ctr = ((p * n + i) * d + j) as u64;
                dw[j] = sqh * gauss::gaussian_at(seed, ctr);
            }
            x = euler_step(coeffs, &x, h, &dw);
            xt = euler_step(coeffs, &xt, h, &dw);
            let mut znorm2 = 0.0;
            for j in 0..d {
                // perturbation stream disjoint from the increment stream
                let ctr = ((p * n + i) * d + j) as u64;
                let z = zeta_scale * h * (2.0 * gauss::uniform_at(seed ^ 0xABCD_EF01, ctr) - 1.0);
                xt[j] += z;
                znorm2 += z * z;
            }
            zeta_total += znorm2.sqrt();
            let gap = x
                .iter()
                .zip(&xt)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            sup_gap = sup_gap.max(gap);
        }
        gap_sum += sup_gap;
        denom_sum += initial_gap + zeta_total;
    }
    Ok(gap_sum / denom_sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantizer::{build_gaussian_grid_1d, product_grid};

    fn zero_coeffs(dim: usize) -> SdeCoeffs {
        SdeCoeffs::constant(dim, vec![0.0; dim], vec![0.0; dim])
    }

    #[test]
    fn euler_step_examples() {
        let c = zero_coeffs(1);
        assert_eq!(euler_step(&c, &[2.0], 0.5, &[0.3]), vec![2.0]);

        let gbm = SdeCoeffs::gbm(1, 1.0);
        let y = euler_step(&gbm, &[1.0], 0.1, &[0.2]);
        assert!((y[0] - 1.2).abs() < 1e-15);

        let drifty = SdeCoeffs {
            drift: Arc::new(|x, out| out.copy_from_slice(x)),
            diffusion: Arc::new(|_x, out| out.fill(0.0)),
            lipschitz_k: 1.0,
        };
        let y = euler_step(&drifty, &[2.0], 0.5, &[0.0]);
        assert!((y[0] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn discrete_step_rounds_onto_lattice() {
        let lat = Lattice::new(1, 0.5, 2, vec![0.0]).unwrap();
        let unit = SdeCoeffs::constant(1, vec![0.0], vec![1.0]);
        // 1.0 + 0.3 = 1.3, floor(1.3/0.5 + 0.5) * 0.5 = 1.5
        let p = discrete_euler_step(&unit, &lat, &[1.0], 1.0, &[0.3]);
        assert_eq!(p, vec![1.5]);
        // zero coefficients leave lattice points fixed
        let z = zero_coeffs(1);
        assert_eq!(discrete_euler_step(&z, &lat, &[1.0], 1.0, &[0.9]), vec![1.0]);
        // exit through the box clamps to the boundary
        let p = discrete_euler_step(&unit, &lat, &[1.0], 1.0, &[5.0]);
        assert_eq!(p, vec![1.0]); // kappa * delta = 1.0
    }

    #[test]
    fn transition_support_degenerate_single_node() {
        let lat = Lattice::new(1, 0.5, 4, vec![0.0]).unwrap();
        let base = build_gaussian_grid_1d(1, 1e-12, 10).unwrap();
        let grid = product_grid(&base, 1).unwrap();
        let c = SdeCoeffs::constant(1, vec![0.1], vec![1.0]);
        let succ = transition_support(&c, &lat, &grid, &[0.0], 1.0, Some(2.0));
        assert_eq!(succ.len(), 1);
        assert_eq!(succ[0].weight, 1.0);
        assert_eq!(succ[0].h_weights, vec![0.0]);
        assert_eq!(succ[0].point, vec![0.0]); // 0.1 rounds back to 0
    }

    #[test]
    fn transition_support_no_diffusion_collapses() {
        let lat = Lattice::new(1, 0.5, 4, vec![0.0]).unwrap();
        let base = build_gaussian_grid_1d(3, 1e-12, 100_000).unwrap();
        let grid = product_grid(&base, 1).unwrap();
        let c = zero_coeffs(1);
        let succ = transition_support(&c, &lat, &grid, &[1.0], 0.5, Some(2.0));
        assert!(succ.iter().all(|s| s.point == vec![1.0]));
    }

    #[test]
    fn transition_weights_sum_to_one_and_h_centered() {
        let lat = Lattice::new(2, 0.1, 30, vec![1.0, 1.0]).unwrap();
        let base = build_gaussian_grid_1d(2, 1e-13, 100_000).unwrap();
        let grid = product_grid(&base, 2).unwrap();
        let gbm = SdeCoeffs::gbm(2, 0.5);
        let succ = transition_support(&gbm, &lat, &grid, &[1.0, 1.0], 0.25, Some(5.0));
        let wsum: f64 = succ.iter().map(|s| s.weight).sum();
        assert!((wsum - 1.0).abs() < 1e-12);
        for j in 0..2 {
            let m: f64 = succ.iter().map(|s| s.weight * s.h_weights[j]).sum();
            assert!(m.abs() < 1e-12, "H mean {m}");
        }
    }

    #[test]
    fn constant_paths_without_noise() {
        let c = zero_coeffs(2);
        let stats = simulate_paths(&c, 10, 1.0, &[3.0, -1.0], 500, 7).unwrap();
        assert_eq!(stats.terminal_mean, vec![3.0, -1.0]);
        assert_eq!(stats.terminal_std, vec![0.0, 0.0]);
        let norm = (9.0f64 + 1.0).sqrt();
        assert!((stats.mean_sup_norm - norm).abs() < 1e-12);
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let gbm = SdeCoeffs::gbm(1, 0.7);
        let a = simulate_paths(&gbm, 16, 1.0, &[1.0], 2000, 99).unwrap();
        let b = simulate_paths(&gbm, 16, 1.0, &[1.0], 2000, 99).unwrap();
        assert_eq!(a, b);
        let c = simulate_paths(&gbm, 16, 1.0, &[1.0], 2000, 100).unwrap();
        assert_ne!(a.terminal_mean, c.terminal_mean);
    }

    #[test]
    fn gbm_terminal_mean_is_a_martingale() {
        let gbm = SdeCoeffs::gbm(1, 1.0);
        let count = 200_000;
        let stats = simulate_paths(&gbm, 32, 1.0, &[1.0], count, 2024).unwrap();
        let se = stats.terminal_std[0] / (count as f64).sqrt();
        assert!(
            (stats.terminal_mean[0] - 1.0).abs() < 3.0 * se,
            "mean {} vs 1.0 (se {se})",
            stats.terminal_mean[0]
        );
    }

    #[test]
    fn perturbation_constant_is_finite_and_positive() {
        let gbm = SdeCoeffs::gbm(1, 0.4);
        let c = perturbation_stability_constant(&gbm, 10, 1.0, &[1.0], 0.01, 0.5, 200, 5).unwrap();
        assert!(c.is_finite() && c > 0.0);
    }
}
