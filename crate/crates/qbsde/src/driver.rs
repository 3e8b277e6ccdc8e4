//! Drivers, their truncation in the z-argument, and the clamped increment
//! weights that extract the Z-component of the scheme.
//!
//! The built-in family is `f(x,y,z) = (a/2)|z|^2 + c_y * y + phi(x)`, which
//! covers every experiment model (there `c_y = 0`, `phi = 0`). Truncation
//! composes the driver with the Euclidean projection of z onto a ball; the
//! adaptive schedule grows the projection radius as `N = n^alpha` and the
//! weight clamp as `R = log n`, so both truncations vanish in the limit
//! while keeping each finite-n induction stable.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gauss;

#[derive(Debug, Error)]
pub enum DriverError {
    #[error("driver constants must be finite and non-negative where required: {0}")]
    BadConstant(String),
}

type EvalFn = dyn Fn(&[f64], f64, &[f64]) -> f64 + Send + Sync;

/// A driver f(x, y, z) with its structural constants.
#[derive(Clone)]
pub struct Driver {
    eval: Arc<EvalFn>,
    /// Constant L of the local z-Lipschitz bound L(1+|z|+|z'|)|z-z'| and of
    /// the growth bound L(1+|y|+|z|^2).
    pub local_lipschitz_l: f64,
    /// Lipschitz constant in y.
    pub lipschitz_ky: f64,
    /// Lipschitz constant in x.
    pub lipschitz_kx: f64,
    /// Projection radius applied to z, when this driver is a truncation.
    pub truncation_radius: Option<f64>,
}

impl std::fmt::Debug for Driver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Driver")
            .field("local_lipschitz_l", &self.local_lipschitz_l)
            .field("lipschitz_ky", &self.lipschitz_ky)
            .field("lipschitz_kx", &self.lipschitz_kx)
            .field("truncation_radius", &self.truncation_radius)
            .finish()
    }
}

impl Driver {
    pub fn new(
        eval: Arc<EvalFn>,
        local_lipschitz_l: f64,
        lipschitz_ky: f64,
        lipschitz_kx: f64,
    ) -> Self {
        Self {
            eval,
            local_lipschitz_l,
            lipschitz_ky,
            lipschitz_kx,
            truncation_radius: None,
        }
    }

    /// The built-in family `(a/2)|z|^2 + c_y y + phi(x)`.
    ///
    /// `phi` must be bounded Lipschitz; pass its Lipschitz constant. The
    /// z-local-Lipschitz constant of the quadratic term is a/2.
    pub fn quadratic(
        a: f64,
        c_y: f64,
        phi: Option<(Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>, f64)>,
    ) -> Result<Self, DriverError> {
        if !(a >= 0.0) || !a.is_finite() {
            return Err(DriverError::BadConstant(format!("a = {a}")));
        }
        let (phi_fn, kx) = match phi {
            Some((f, k)) => (Some(f), k),
            None => (None, 0.0),
        };
        let eval: Arc<EvalFn> = {
            let phi_fn = phi_fn.clone();
            Arc::new(move |x: &[f64], y: f64, z: &[f64]| {
                let z2: f64 = z.iter().map(|v| v * v).sum();
                0.5 * a * z2 + c_y * y + phi_fn.as_ref().map_or(0.0, |p| p(x))
            })
        };
        Ok(Self::new(eval, 0.5 * a, c_y.abs(), kx))
    }

    #[inline]
    pub fn eval(&self, x: &[f64], y: f64, z: &[f64]) -> f64 {
        (self.eval)(x, y, z)
    }

    /// Whether a single Picard evaluation already solves the implicit step.
    pub fn is_y_independent(&self) -> bool {
        self.lipschitz_ky == 0.0
    }
}

/// Largest radius r for which the local-Lipschitz bound certifies that the
/// truncated driver is N-Lipschitz in z: L(1 + 2r) <= N gives
/// r = (N - L) / (2L), floored at zero. A zero radius means the schedule
/// level N cannot certify any truncation ball (degenerate truncation).
pub fn truncation_radius(l: f64, n_level: f64) -> f64 {
    ((n_level - l) / (2.0 * l)).max(0.0)
}

/// Composes a driver with the Euclidean projection of z onto the ball of
/// radius r. The result agrees with the original whenever |z| <= r and
/// inherits the x/y constants.
pub fn truncate_driver(f: &Driver, r: f64) -> Driver {
    assert!(r >= 0.0, "truncation radius must be non-negative");
    let inner = f.eval.clone();
    let eval: Arc<EvalFn> = Arc::new(move |x: &[f64], y: f64, z: &[f64]| {
        let norm2: f64 = z.iter().map(|v| v * v).sum();
        let norm = norm2.sqrt();
        if norm <= r {
            return inner(x, y, z);
        }
        let scale = if r == 0.0 { 0.0 } else { r / norm };
        if z.len() <= 8 {
            let mut buf = [0.0f64; 8];
            for (b, v) in buf.iter_mut().zip(z) {
                *b = v * scale;
            }
            inner(x, y, &buf[..z.len()])
        } else {
            let proj: Vec<f64> = z.iter().map(|v| v * scale).collect();
            inner(x, y, &proj)
        }
    });
    Driver {
        eval,
        local_lipschitz_l: f.local_lipschitz_l,
        lipschitz_ky: f.lipschitz_ky,
        lipschitz_kx: f.lipschitz_kx,
        truncation_radius: Some(r),
    }
}

/// Componentwise clamp of a scaled increment to [-R/sqrt(h), R/sqrt(h)].
pub fn clamp_weights(dw_over_h: &[f64], r_level: f64, h: f64) -> Vec<f64> {
    let bound = r_level / h.sqrt();
    dw_over_h.iter().map(|&v| v.clamp(-bound, bound)).collect()
}

/// Analytic E|clamp(Z, +-R) - Z| for Z ~ N(0,1):
/// 2 * (pdf(R) - R * (1 - cdf(R))), the Gaussian tail integral.
pub fn clamp_tail_gap(r_level: f64) -> f64 {
    2.0 * (gauss::pdf(r_level) - r_level * gauss::sf(r_level))
}

/// How the scheme truncates at a given step count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum TruncationPolicy {
    /// N = n^alpha, R = log n (natural log), projection radius N.
    Adaptive { alpha: f64 },
    /// Fixed levels independent of n, projection radius `n_level`.
    Fixed { n_level: f64, r_level: f64 },
    /// Raw driver and raw quantized weights; nothing is truncated.
    None,
}

/// Resolved truncation levels for one value of n.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationLevels {
    /// Lipschitz schedule level N.
    pub n_level: f64,
    /// Weight clamp level R.
    pub r_level: f64,
    /// Projection radius applied to the driver's z-argument.
    ///
    /// The radius equals N: for the built-in quadratic family this is the
    /// ball on which the paper's experiments operate, and the certified
    /// z-Lipschitz constant becomes L(1 + 2N).
    pub radius: f64,
}

impl TruncationPolicy {
    /// Levels for an n-step scheme; `None` for the untruncated mode.
    pub fn resolve(&self, n: usize) -> Option<TruncationLevels> {
        match *self {
            TruncationPolicy::Adaptive { alpha } => {
                let n_level = (n as f64).powf(alpha);
                Some(TruncationLevels {
                    n_level,
                    r_level: (n as f64).ln(),
                    radius: n_level,
                })
            }
            TruncationPolicy::Fixed { n_level, r_level } => Some(TruncationLevels {
                n_level,
                r_level,
                radius: n_level,
            }),
            TruncationPolicy::None => None,
        }
    }

    pub fn label(&self) -> String {
        match self {
            TruncationPolicy::Adaptive { .. } => "adaptive".into(),
            TruncationPolicy::Fixed { .. } => "fixed".into(),
            TruncationPolicy::None => "none".into(),
        }
    }
}

/// Verdict of the sufficient stability check. Advisory only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StabilityFlag {
    Stable,
    Violated,
    Unverifiable,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityReport {
    pub flag: StabilityFlag,
    /// h * sqrt(d) * R * (L + L(1 + 2r)); compared against 1 - epsilon.
    pub condition_value: Option<f64>,
    pub note: String,
}

const STABILITY_MARGIN: f64 = 0.05;

/// Plug-in check of the sufficient stability condition for the truncated
/// scheme: the clamped weights are bounded by sqrt(d) R / sqrt(h) and the
/// truncated driver is L(1+2r)-Lipschitz in z on the radius-r ball, so the
/// reported value is h * sqrt(d) * R * (L + L(1+2r)) with r = N. Untruncated
/// drivers have no finite z-Lipschitz constant, so nothing can be verified.
pub fn stability_diagnostic(
    n: usize,
    h: f64,
    levels: Option<TruncationLevels>,
    l: f64,
    d: usize,
) -> StabilityReport {
    let Some(levels) = levels else {
        return StabilityReport {
            flag: StabilityFlag::Unverifiable,
            condition_value: None,
            note: "condition unverifiable (unbounded Lipschitz constant)".into(),
        };
    };
    let r = levels.radius;
    let certified = l * (1.0 + 2.0 * r);
    let value = h * (d as f64).sqrt() * levels.r_level * (l + certified);
    let degenerate = levels.n_level <= l && truncation_radius(l, levels.n_level) == 0.0;
    let flag = if value < 1.0 - STABILITY_MARGIN {
        StabilityFlag::Stable
    } else {
        StabilityFlag::Violated
    };
    let note = match (&flag, degenerate) {
        (StabilityFlag::Stable, true) => format!(
            "stable (value {value:.4}); note: N = {:.4} <= L = {l} leaves the generic Lipschitz certificate degenerate",
            levels.n_level
        ),
        (StabilityFlag::Stable, false) => format!("stable (value {value:.4} < {})", 1.0 - STABILITY_MARGIN),
        (StabilityFlag::Violated, _) => format!(
            "violated (value {value:.4} >= {}) at n = {n}",
            1.0 - STABILITY_MARGIN
        ),
        (StabilityFlag::Unverifiable, _) => unreachable!(),
    };
    StabilityReport {
        flag,
        condition_value: Some(value),
        note,
    }
}
