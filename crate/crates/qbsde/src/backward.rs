//! Backward dynamic-programming induction for the value pair (u, v) on the
//! lattice, with Picard iteration for the implicit y-equation.
//!
//! The transition from step i+1 to step i reads, for every grid point x with
//! quantizer nodes (g_k, w_k) and successors s_k = project(x + h b(x) +
//! sqrt(h) sigma(x) g_k):
//!
//! ```text
//! v(t_i, x) = sum_k w_k u(t_{i+1}, s_k) Hhat_k        (row vector)
//! u(t_i, x) = sum_k w_k u(t_{i+1}, s_k) + h f_N(x, u(t_i,x), v(t_i,x))
//! ```
//!
//! where `Hhat_k` is the clamped node `clamp(g_k, +-R)/sqrt(h)`. The
//! y-implicit equation is solved by Picard iteration (contraction factor
//! h K_y). Non-finite values are not errors: an untruncated quadratic driver
//! is expected to blow up, and reproducing that divergence is part of the
//! scheme's contract, so Inf/NaN propagate and are reported as a diverged
//! result.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::driver::{
    stability_diagnostic, truncate_driver, Driver, StabilityReport, TruncationPolicy,
};
use crate::forward::{transition_support, ForwardError, SdeCoeffs, TimeGrid};
use crate::lattice::{Lattice, LatticeError};
use crate::models::Problem;
use crate::quantizer::{build_gaussian_grid_1d, product_grid, QuantGridD, QuantizerError};

#[derive(Debug, Error)]
pub enum BackwardError {
    #[error(transparent)]
    Quantizer(#[from] QuantizerError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Forward(#[from] ForwardError),
    #[error("Picard contraction not certified: h * K_y = {h_ky} >= 1")]
    ContractionViolated { h_ky: f64 },
    #[error(
        "Picard iteration did not converge at time index {time_index}, point {point_index} (residual {residual:.3e})"
    )]
    PicardNonConvergence {
        time_index: usize,
        point_index: usize,
        residual: f64,
    },
    #[error("quantized path tree has ~{leaves:.3e} nodes, above the {cap:.1e} oracle guard")]
    TreeTooLarge { leaves: f64, cap: f64 },
}

/// Scheme parameters: everything the schedule or the experiments fix.
#[derive(Debug, Clone, Serialize)]
pub struct SchemeParams {
    /// Time steps.
    pub n: usize,
    /// Total quantizer node target M; per-dimension count is round(M^(1/d)).
    pub points: usize,
    /// Lattice spacing.
    pub delta: f64,
    /// Lattice half-width (points span center +- kappa*delta).
    pub kappa: i64,
    pub truncation: TruncationPolicy,
    /// Relative Picard tolerance.
    pub picard_tol: f64,
    pub picard_max_iters: usize,
    /// Worker threads for the per-point loops; 0 uses the global pool.
    pub workers: usize,
    /// Keep every time slab (for field inspection); off by default, the
    /// induction then holds only two slabs at a time.
    pub retain_fields: bool,
}

impl SchemeParams {
    pub fn new(n: usize, points: usize, delta: f64, kappa: i64, truncation: TruncationPolicy) -> Self {
        SchemeParams {
            n,
            points,
            delta,
            kappa,
            truncation,
            picard_tol: 1e-12,
            picard_max_iters: 50,
            workers: 0,
            retain_fields: false,
        }
    }

    pub fn per_dim_points(&self, dim: usize) -> usize {
        ((self.points as f64).powf(1.0 / dim as f64).round() as usize).max(1)
    }

    pub fn alpha(&self) -> Option<f64> {
        match self.truncation {
            TruncationPolicy::Adaptive { alpha } => Some(alpha),
            _ => None,
        }
    }
}

/// Value arrays over the lattice at one time index: u scalar, v a row
/// d-vector stored row-major per point.
#[derive(Debug, Clone)]
pub struct ValueField {
    pub time_index: usize,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl ValueField {
    pub fn v_row(&self, point_index: usize, dim: usize) -> &[f64] {
        &self.v[point_index * dim..(point_index + 1) * dim]
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveDiagnostics {
    pub stability: StabilityReport,
    /// sup over the lattice of |u| at each time index, terminal first.
    pub sup_u_per_step: Vec<f64>,
    /// First (time index, point index) where a non-finite value appeared.
    pub first_nonfinite: Option<(usize, usize)>,
    pub max_picard_iters: usize,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub y0: f64,
    pub z0: Vec<f64>,
    /// True when y0 is not finite.
    pub diverged: bool,
    pub diagnostics: SolveDiagnostics,
    pub runtime_ms: u64,
    /// All time slabs, terminal last, when `retain_fields` was set.
    pub fields: Option<Vec<ValueField>>,
}

/// Fixed point of `y = e + h f(x, y, v)`, with the contraction certificate
/// h K_y < 1 checked by the caller. Returns the value and iteration count;
/// y-independent drivers finish after a single evaluation. Non-finite
/// intermediate values short-circuit and propagate to the caller.
pub fn picard_solve(
    y_guess: f64,
    e: f64,
    x: &[f64],
    v: &[f64],
    f_n: &Driver,
    h: f64,
    tol: f64,
    max_iters: usize,
) -> Result<(f64, usize), (f64, usize)> {
    let mut y = e + h * f_n.eval(x, y_guess, v);
    if f_n.is_y_independent() || !y.is_finite() {
        return Ok((y, 1));
    }
    let mut prev = y_guess;
    for it in 1..=max_iters {
        let resid = (y - prev).abs();
        if resid < tol * (1.0 + y.abs()) {
            return Ok((y, it));
        }
        prev = y;
        y = e + h * f_n.eval(x, y, v);
        if !y.is_finite() {
            return Ok((y, it + 1));
        }
    }
    Err((y, max_iters))
}

/// Per-step summary returned alongside the new field.
#[derive(Debug, Clone, Copy)]
pub struct StepSummary {
    pub sup_u: f64,
    pub first_nonfinite: Option<usize>,
    pub max_picard: usize,
}

const POINT_CHUNK: usize = 2048;

/// One induction step: computes the field at time index i from the field at
/// i+1. Per-point work is independent and runs in parallel; sums over
/// quantizer nodes run in fixed node order so results do not depend on the
/// worker count.
#[allow(clippy::too_many_arguments)]
pub fn backward_step(
    next: &ValueField,
    lat: &Lattice,
    grid: &QuantGridD,
    coeffs: &SdeCoeffs,
    f_n: &Driver,
    r_level: Option<f64>,
    h: f64,
    picard_tol: f64,
    picard_max_iters: usize,
) -> Result<(ValueField, StepSummary), BackwardError> {
    let d = lat.dim();
    let pcount = lat.point_count();
    let kcount = grid.node_count();
    let sqh = h.sqrt();
    let i = next.time_index - 1;

    // clamped weight rows per node, shared across points
    let hweights: Vec<f64> = (0..kcount)
        .flat_map(|k| {
            let node = grid.node(k);
            node.iter().map(move |&g| {
                let raw = g / sqh;
                match r_level {
                    Some(r) => raw.clamp(-r / sqh, r / sqh),
                    None => raw,
                }
            })
        })
        .collect();

    let mut u = vec![0.0f64; pcount];
    let mut v = vec![0.0f64; pcount * d];
    let u_next = &next.u;

    let summaries: Result<Vec<StepSummary>, BackwardError> = u
        .par_chunks_mut(POINT_CHUNK)
        .zip(v.par_chunks_mut(POINT_CHUNK * d))
        .enumerate()
        .map(|(chunk_idx, (u_chunk, v_chunk))| {
            let base_index = chunk_idx * POINT_CHUNK;
            let mut x = vec![0.0; d];
            let mut b = vec![0.0; d];
            let mut sig = vec![0.0; d * d];
            let mut base = vec![0.0; d];
            let mut target = vec![0.0; d];
            let mut sup_u = 0.0f64;
            let mut first_nonfinite = None;
            let mut max_picard = 0usize;
            for (off, u_out) in u_chunk.iter_mut().enumerate() {
                let p = base_index + off;
                lat.decode_into(p, &mut x);
                (coeffs.drift)(&x, &mut b);
                (coeffs.diffusion)(&x, &mut sig);
                for j in 0..d {
                    base[j] = x[j] + h * b[j];
                }
                let vrow = &mut v_chunk[off * d..(off + 1) * d];
                let mut e = 0.0f64;
                for k in 0..kcount {
                    let node = grid.node(k);
                    for j in 0..d {
                        let mut acc = base[j];
                        for l in 0..d {
                            acc += sqh * sig[j * d + l] * node[l];
                        }
                        target[j] = acc;
                    }
                    let s = lat.project_index(&target);
                    let w_u = grid.weights[k] * u_next[s];
                    e += w_u;
                    let hw = &hweights[k * d..(k + 1) * d];
                    for j in 0..d {
                        vrow[j] += w_u * hw[j];
                    }
                }
                let val = match picard_solve(
                    e,
                    e,
                    &x,
                    vrow,
                    f_n,
                    h,
                    picard_tol,
                    picard_max_iters,
                ) {
                    Ok((y, iters)) => {
                        max_picard = max_picard.max(iters);
                        y
                    }
                    Err((y, _)) => {
                        return Err(BackwardError::PicardNonConvergence {
                            time_index: i,
                            point_index: p,
                            residual: (y - e).abs(),
                        })
                    }
                };
                *u_out = val;
                if val.is_finite() {
                    sup_u = sup_u.max(val.abs());
                } else if first_nonfinite.is_none() {
                    first_nonfinite = Some(p);
                }
            }
            Ok(StepSummary {
                sup_u,
                first_nonfinite,
                max_picard,
            })
        })
        .collect();
    let summaries = summaries?;

    // combine in chunk order so the reported first offender is deterministic
    let mut sup_u = 0.0f64;
    let mut first_nonfinite = None;
    let mut max_picard = 0;
    for s in summaries {
        sup_u = sup_u.max(s.sup_u);
        if first_nonfinite.is_none() {
            first_nonfinite = s.first_nonfinite;
        }
        max_picard = max_picard.max(s.max_picard);
    }
    Ok((
        ValueField { time_index: i, u, v },
        StepSummary {
            sup_u,
            first_nonfinite,
            max_picard,
        },
    ))
}

/// Runs the full backward induction and extracts (y0, z0) at the lattice
/// center (the initial point). Deterministic for a fixed parameter set and
/// independent of the worker count.
pub fn solve(problem: &Problem, params: &SchemeParams) -> Result<SolveResult, BackwardError> {
    if params.workers > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(params.workers)
            .build()
            .expect("worker pool");
        pool.install(|| solve_inner(problem, params))
    } else {
        solve_inner(problem, params)
    }
}

fn solve_inner(problem: &Problem, params: &SchemeParams) -> Result<SolveResult, BackwardError> {
    let start = Instant::now();
    let d = problem.dim;
    let levels = params.truncation.resolve(params.n.max(1));
    let stability = stability_diagnostic(
        params.n,
        if params.n == 0 {
            0.0
        } else {
            problem.horizon / params.n as f64
        },
        levels,
        problem.driver.local_lipschitz_l,
        d,
    );

    if params.n == 0 {
        let y0 = (problem.terminal.g)(&problem.x0);
        return Ok(SolveResult {
            y0,
            z0: vec![0.0; d],
            diverged: !y0.is_finite(),
            diagnostics: SolveDiagnostics {
                stability,
                sup_u_per_step: vec![y0.abs()],
                first_nonfinite: None,
                max_picard_iters: 0,
            },
            runtime_ms: start.elapsed().as_millis() as u64,
            fields: None,
        });
    }

    let grid_time = TimeGrid::uniform(params.n, problem.horizon)?;
    let h = grid_time.step();
    let h_ky = h * problem.driver.lipschitz_ky;
    if h_ky >= 1.0 {
        return Err(BackwardError::ContractionViolated { h_ky });
    }

    let m = params.per_dim_points(d);
    let base = build_gaussian_grid_1d(m, 1e-12, 100_000)?;
    let grid = product_grid(&base, d)?;
    let lat = Lattice::new(d, params.delta, params.kappa, problem.x0.clone())?;

    let f_used = match levels {
        Some(l) => truncate_driver(&problem.driver, l.radius),
        None => problem.driver.clone(),
    };
    let r_level = levels.map(|l| l.r_level);

    // terminal condition: u = g on the grid, v = 0
    let pcount = lat.point_count();
    let mut u = vec![0.0f64; pcount];
    u.par_chunks_mut(POINT_CHUNK)
        .enumerate()
        .for_each(|(chunk_idx, chunk)| {
            let mut x = vec![0.0; d];
            for (off, out) in chunk.iter_mut().enumerate() {
                lat.decode_into(chunk_idx * POINT_CHUNK + off, &mut x);
                *out = (problem.terminal.g)(&x);
            }
        });
    let mut field = ValueField {
        time_index: params.n,
        u,
        v: vec![0.0; pcount * d],
    };

    let mut sup_u_per_step = Vec::with_capacity(params.n + 1);
    sup_u_per_step.push(
        field
            .u
            .iter()
            .filter(|v| v.is_finite())
            .fold(0.0f64, |a, &b| a.max(b.abs())),
    );
    let mut first_nonfinite = field
        .u
        .iter()
        .position(|v| !v.is_finite())
        .map(|p| (params.n, p));
    let mut max_picard = 0usize;
    let mut retained: Vec<ValueField> = Vec::new();

    for _ in 0..params.n {
        if params.retain_fields {
            retained.push(field.clone());
        }
        let (next_field, summary) = backward_step(
            &field,
            &lat,
            &grid,
            &problem.coeffs,
            &f_used,
            r_level,
            h,
            params.picard_tol,
            params.picard_max_iters,
        )?;
        field = next_field;
        sup_u_per_step.push(summary.sup_u);
        if first_nonfinite.is_none() {
            first_nonfinite = summary.first_nonfinite.map(|p| (field.time_index, p));
        }
        max_picard = max_picard.max(summary.max_picard);
    }

    let center = lat.center_index();
    let y0 = field.u[center];
    let z0 = field.v_row(center, d).to_vec();
    if params.retain_fields {
        retained.push(field);
        retained.reverse(); // index by time: retained[i].time_index == i
    }
    Ok(SolveResult {
        y0,
        z0,
        diverged: !y0.is_finite(),
        diagnostics: SolveDiagnostics {
            stability,
            sup_u_per_step,
            first_nonfinite,
            max_picard_iters: max_picard,
        },
        runtime_ms: start.elapsed().as_millis() as u64,
        fields: if params.retain_fields {
            Some(retained)
        } else {
            None
        },
    })
}

const ORACLE_NODE_CAP: f64 = 2e6;

/// Brute-force evaluation of the same scheme by explicit recursion over the
/// quantized path tree, without lattice tables. Feasible only for tiny
/// instances; used as the independent correctness oracle for `solve`.
pub fn naive_recursive_oracle(
    problem: &Problem,
    params: &SchemeParams,
) -> Result<f64, BackwardError> {
    if params.n == 0 {
        return Ok((problem.terminal.g)(&problem.x0));
    }
    let d = problem.dim;
    let m = params.per_dim_points(d);
    let kcount = (m as f64).powi(d as i32);
    let leaves = kcount.powi(params.n as i32);
    if leaves > ORACLE_NODE_CAP {
        return Err(BackwardError::TreeTooLarge {
            leaves,
            cap: ORACLE_NODE_CAP,
        });
    }
    let grid_time = TimeGrid::uniform(params.n, problem.horizon)?;
    let h = grid_time.step();
    let h_ky = h * problem.driver.lipschitz_ky;
    if h_ky >= 1.0 {
        return Err(BackwardError::ContractionViolated { h_ky });
    }
    let base = build_gaussian_grid_1d(m, 1e-12, 100_000)?;
    let grid = product_grid(&base, d)?;
    let lat = Lattice::new(d, params.delta, params.kappa, problem.x0.clone())?;
    let levels = params.truncation.resolve(params.n);
    let f_used = match levels {
        Some(l) => truncate_driver(&problem.driver, l.radius),
        None => problem.driver.clone(),
    };
    let r_level = levels.map(|l| l.r_level);

    fn rec(
        i: usize,
        x: &[f64],
        n: usize,
        h: f64,
        problem: &Problem,
        lat: &Lattice,
        grid: &QuantGridD,
        f_used: &Driver,
        r_level: Option<f64>,
        params: &SchemeParams,
    ) -> Result<f64, BackwardError> {
        if i == n {
            return Ok((problem.terminal.g)(x));
        }
        let succ = transition_support(&problem.coeffs, lat, grid, x, h, r_level);
        let d = x.len();
        let mut e = 0.0f64;
        let mut v = vec![0.0f64; d];
        for s in &succ {
            let child = rec(i + 1, &s.point, n, h, problem, lat, grid, f_used, r_level, params)?;
            let w_u = s.weight * child;
            e += w_u;
            for j in 0..d {
                v[j] += w_u * s.h_weights[j];
            }
        }
        match picard_solve(e, e, x, &v, f_used, h, params.picard_tol, params.picard_max_iters) {
            Ok((y, _)) => Ok(y),
            Err((y, _)) => Err(BackwardError::PicardNonConvergence {
                time_index: i,
                point_index: usize::MAX,
                residual: (y - e).abs(),
            }),
        }
    }

    rec(
        0,
        &problem.x0.clone(),
        params.n,
        h,
        problem,
        &lat,
        &grid,
        &f_used,
        r_level,
        params,
    )
}

/// JSON-serializable view of a solve outcome (the CLI `solve` output).
#[derive(Debug, Serialize)]
pub struct SolveReport {
    pub y0: f64,
    pub z0: Vec<f64>,
    pub n: usize,
    pub alpha: Option<f64>,
    #[serde(rename = "M")]
    pub m_total: usize,
    pub delta: f64,
    pub kappa: i64,
    pub truncation: String,
    pub diverged: bool,
    pub diagnostics: SolveDiagnostics,
    pub runtime_ms: u64,
}

impl SolveReport {
    pub fn new(params: &SchemeParams, result: &SolveResult) -> Self {
        SolveReport {
            y0: result.y0,
            z0: result.z0.clone(),
            n: params.n,
            alpha: params.alpha(),
            m_total: params.points,
            delta: params.delta,
            kappa: params.kappa,
            truncation: params.truncation.label(),
            diverged: result.diverged,
            diagnostics: result.diagnostics.clone(),
            runtime_ms: result.runtime_ms,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    fn tiny_params(n: usize, m: usize) -> SchemeParams {
        SchemeParams::new(n, m, 0.1, 40, TruncationPolicy::Adaptive { alpha: 0.25 })
    }

    #[test]
    fn constant_terminal_is_exact() {
        let problem = models::custom(models::CustomProblemSpec {
            dim: 1,
            coeffs: crate::forward::SdeCoeffs::gbm(1, 0.4),
            driver: Driver::quadratic(5.0, 0.0, None).unwrap(),
            g: std::sync::Arc::new(|_| 2.0),
            g_sup_norm: Some(2.0),
            g_lipschitz: Some(0.0),
            horizon: 1.0,
            x0: vec![1.0],
        })
        .unwrap()
        .0;
        let params = tiny_params(6, 8);
        let res = solve(&problem, &params).unwrap();
        assert!((res.y0 - 2.0).abs() < 1e-12, "y0 {}", res.y0);
        assert!(res.z0[0].abs() < 1e-12);
        assert!(!res.diverged);
    }

    #[test]
    fn n_zero_returns_terminal_at_center() {
        let problem = models::builtin(models::BuiltinModel::D1Alpha);
        let params = tiny_params(0, 4);
        let res = solve(&problem, &params).unwrap();
        let g0 = (problem.terminal.g)(&problem.x0);
        assert_eq!(res.y0, g0);
        assert_eq!(naive_recursive_oracle(&problem, &params).unwrap(), g0);
    }

    #[test]
    fn one_step_two_nodes_matches_hand_formula() {
        // d=1, n=1, b=0, sigma=1, m=2 nodes +-sqrt(2/pi), f == 0:
        // u(0,x) = 0.5 [ g(P(x + sqrt(h) c)) + g(P(x - sqrt(h) c)) ]
        let g = std::sync::Arc::new(|x: &[f64]| (1.0 + x[0].abs()).recip());
        let problem = models::Problem {
            dim: 1,
            coeffs: crate::forward::SdeCoeffs::constant(1, vec![0.0], vec![1.0]),
            driver: Driver::quadratic(0.0, 0.0, None).unwrap(),
            terminal: models::TerminalCondition {
                g: g.clone(),
                sup_norm: 1.0,
                lipschitz: 1.0,
            },
            horizon: 1.0,
            x0: vec![0.0],
            reference: None,
        };
        let params = SchemeParams::new(1, 2, 0.25, 12, TruncationPolicy::None);
        let res = solve(&problem, &params).unwrap();
        let lat = Lattice::new(1, 0.25, 12, vec![0.0]).unwrap();
        let c = 0.797_884_560_802_865_4;
        let expect = 0.5 * (g(&lat.project(&[c])) + g(&lat.project(&[-c])));
        assert!((res.y0 - expect).abs() < 1e-14, "{} vs {expect}", res.y0);
    }

    #[test]
    fn picard_examples() {
        // y-independent: one evaluation
        let f = Driver::quadratic(2.0, 0.0, None).unwrap();
        let (y, iters) = picard_solve(0.0, 1.0, &[0.0], &[0.5], &f, 0.1, 1e-12, 50).unwrap();
        assert_eq!(iters, 1);
        assert!((y - (1.0 + 0.1 * 0.25)).abs() < 1e-15);

        // f = y: fixed point of y = 1 + 0.1 y is 1/0.9
        let fy = Driver::new(std::sync::Arc::new(|_x, y, _z| y), 0.0, 1.0, 0.0);
        let (y, iters) = picard_solve(1.0, 1.0, &[0.0], &[0.0], &fy, 0.1, 1e-12, 50).unwrap();
        assert!((y - 1.0 / 0.9).abs() < 1e-12, "y {y}");
        // geometric contraction with factor 0.1 needs roughly log(tol)/log(0.1) iterations
        assert!(iters <= 14, "iters {iters}");
    }

    #[test]
    fn picard_nonconvergence_reported() {
        // h K_y = 1.2: not a contraction, must exhaust max_iters
        let fy = Driver::new(std::sync::Arc::new(|_x, y: f64, _z| 12.0 * y + 1.0), 0.0, 12.0, 0.0);
        assert!(picard_solve(1.0, 1.0, &[0.0], &[0.0], &fy, 0.1, 1e-12, 30).is_err());
    }

    #[test]
    fn oracle_equivalence_small_instances() {
        let problem = models::builtin(models::BuiltinModel::D1Alpha);
        for (n, m) in [(1usize, 3usize), (2, 3), (3, 2), (3, 3)] {
            let mut params = tiny_params(n, m);
            params.delta = 0.2;
            params.kappa = 12;
            let direct = solve(&problem, &params).unwrap().y0;
            let tree = naive_recursive_oracle(&problem, &params).unwrap();
            assert!(
                (direct - tree).abs() <= 1e-12,
                "n={n} m={m}: {direct} vs {tree}"
            );
        }
    }

    #[test]
    fn oracle_single_node_collapses_to_deterministic_recursion() {
        let problem = models::builtin(models::BuiltinModel::D1Alpha);
        let mut params = tiny_params(3, 1);
        params.delta = 0.2;
        params.kappa = 10;
        let direct = solve(&problem, &params).unwrap().y0;
        let tree = naive_recursive_oracle(&problem, &params).unwrap();
        assert!((direct - tree).abs() <= 1e-12);
    }

    #[test]
    fn oracle_guard_rejects_large_trees() {
        let problem = models::builtin(models::BuiltinModel::D1Alpha);
        let params = tiny_params(12, 100);
        assert!(matches!(
            naive_recursive_oracle(&problem, &params),
            Err(BackwardError::TreeTooLarge { .. })
        ));
    }

    #[test]
    fn worker_count_does_not_change_y0() {
        let problem = models::builtin(models::BuiltinModel::D1Alpha);
        let mut params = SchemeParams::new(
            10,
            24,
            0.05,
            120,
            TruncationPolicy::Adaptive { alpha: 0.25 },
        );
        params.workers = 1;
        let a = solve(&problem, &params).unwrap();
        params.workers = 4;
        let b = solve(&problem, &params).unwrap();
        assert_eq!(a.y0.to_bits(), b.y0.to_bits());
        assert_eq!(a.z0, b.z0);
    }

    #[test]
    fn contraction_violation_is_an_error() {
        let mut problem = models::builtin(models::BuiltinModel::D1Alpha);
        problem.driver = Driver::new(std::sync::Arc::new(|_x, y, _z| y), 0.0, 3.0, 0.0);
        let params = tiny_params(2, 2);
        assert!(matches!(
            solve(&problem, &params),
            Err(BackwardError::ContractionViolated { .. })
        ));
    }
}
