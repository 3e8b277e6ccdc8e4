//! The bounded spatial grid, its nearest-point projection, and the bijection
//! between grid points and flat array indices.
//!
//! The grid holds every point `center + delta * j` with multi-index
//! `j in {-kappa, ..., kappa}^d`, i.e. `(2 kappa + 1)^d` points. Projection
//! rounds componentwise with `floor(u + 1/2)` (ties go to the upper point)
//! and clamps overshoots to the centered boundary `center_j +- kappa delta`,
//! so the image always lies on the grid regardless of where the grid is
//! centered.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LatticeError {
    #[error("lattice dimension must be positive")]
    ZeroDim,
    #[error("lattice spacing must be positive, got {0}")]
    BadSpacing(f64),
    #[error("half-width must be at least 1, got {0}")]
    BadHalfWidth(i64),
    #[error("center length {got} does not match dimension {dim}")]
    CenterMismatch { got: usize, dim: usize },
    #[error("lattice would hold {0} points, which overflows addressable memory")]
    TooManyPoints(u128),
    #[error("point is not on the lattice (coordinate {coord} deviates by {dev:.3e})")]
    OffLattice { coord: usize, dev: f64 },
    #[error("index {index} out of range for {count} lattice points")]
    IndexOutOfRange { index: usize, count: usize },
}

/// Bounded uniform grid with `(2*half_width + 1)^dim` points.
#[derive(Debug, Clone)]
pub struct Lattice {
    dim: usize,
    spacing: f64,
    half_width: i64,
    center: Vec<f64>,
    side: i64,
    point_count: usize,
}

impl Lattice {
    pub fn new(
        dim: usize,
        spacing: f64,
        half_width: i64,
        center: Vec<f64>,
    ) -> Result<Self, LatticeError> {
        if dim == 0 {
            return Err(LatticeError::ZeroDim);
        }
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(LatticeError::BadSpacing(spacing));
        }
        if half_width < 1 {
            return Err(LatticeError::BadHalfWidth(half_width));
        }
        if center.len() != dim {
            return Err(LatticeError::CenterMismatch {
                got: center.len(),
                dim,
            });
        }
        let side = 2 * half_width + 1;
        let count_wide = (side as u128).pow(dim as u32);
        if count_wide > usize::MAX as u128 / 16 {
            return Err(LatticeError::TooManyPoints(count_wide));
        }
        Ok(Self {
            dim,
            spacing,
            half_width,
            center,
            side,
            point_count: count_wide as usize,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn half_width(&self) -> i64 {
        self.half_width
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn point_count(&self) -> usize {
        self.point_count
    }

    /// Flat index of the center point (multi-index 0).
    pub fn center_index(&self) -> usize {
        let mut flat = 0usize;
        for _ in 0..self.dim {
            flat = flat * self.side as usize + self.half_width as usize;
        }
        flat
    }

    /// Rounded grid offset for one coordinate: `floor(u + 1/2)` clamped to
    /// the half-width. For `|x - c| <= kappa delta` the floor already lands
    /// in range, so clamping only acts on the overshoot branches.
    #[inline]
    pub fn offset_of(&self, x: f64, j: usize) -> i64 {
        let u = (x - self.center[j]) / self.spacing;
        let m = (u + 0.5).floor();
        if m < -(self.half_width as f64) {
            -self.half_width
        } else if m > self.half_width as f64 {
            self.half_width
        } else {
            m as i64
        }
    }

    /// Projection onto the grid, componentwise round-and-clamp.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.project_into(x, &mut out);
        out
    }

    pub fn project_into(&self, x: &[f64], out: &mut [f64]) {
        for j in 0..self.dim {
            let m = self.offset_of(x[j], j);
            out[j] = self.center[j] + self.spacing * m as f64;
        }
    }

    /// Projection straight to the flat index, skipping the coordinate
    /// round-trip. Equals `encode(project(x))` for every x.
    #[inline]
    pub fn project_index(&self, x: &[f64]) -> usize {
        let mut flat = 0usize;
        for j in 0..self.dim {
            let m = self.offset_of(x[j], j);
            flat = flat * self.side as usize + (m + self.half_width) as usize;
        }
        flat
    }

    /// Flat index of a grid point. Rejects coordinates that do not sit on
    /// the lattice (relative deviation above `spacing * 1e-9`).
    pub fn encode(&self, point: &[f64]) -> Result<usize, LatticeError> {
        let mut flat = 0usize;
        for j in 0..self.dim {
            let u = (point[j] - self.center[j]) / self.spacing;
            let m = u.round();
            let dev = (point[j] - (self.center[j] + self.spacing * m)).abs();
            if dev > self.spacing * 1e-9 || m.abs() > self.half_width as f64 {
                return Err(LatticeError::OffLattice { coord: j, dev });
            }
            flat = flat * self.side as usize + (m as i64 + self.half_width) as usize;
        }
        Ok(flat)
    }

    /// Grid point for a flat index (row-major, first coordinate slowest).
    pub fn decode(&self, index: usize) -> Result<Vec<f64>, LatticeError> {
        if index >= self.point_count {
            return Err(LatticeError::IndexOutOfRange {
                index,
                count: self.point_count,
            });
        }
        let mut out = vec![0.0; self.dim];
        self.decode_into(index, &mut out);
        Ok(out)
    }

    pub fn decode_into(&self, index: usize, out: &mut [f64]) {
        let mut rem = index;
        for j in (0..self.dim).rev() {
            let m = (rem % self.side as usize) as i64 - self.half_width;
            out[j] = self.center[j] + self.spacing * m as f64;
            rem /= self.side as usize;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lat1() -> Lattice {
        Lattice::new(1, 0.5, 4, vec![0.0]).unwrap()
    }

    #[test]
    fn center_projects_to_itself() {
        let lat = Lattice::new(2, 0.3, 5, vec![1.0, -2.0]).unwrap();
        assert_eq!(lat.project(&[1.0, -2.0]), vec![1.0, -2.0]);
        assert_eq!(lat.project_index(&[1.0, -2.0]), lat.center_index());
    }

    #[test]
    fn rounding_and_tie_convention() {
        let lat = lat1();
        assert_eq!(lat.project(&[0.2]), vec![0.0]);
        assert_eq!(lat.project(&[0.3]), vec![0.5]);
        // half-cell tie: floor(u + 1/2) sends 0.25 up to 0.5
        assert_eq!(lat.project(&[0.25]), vec![0.5]);
        assert_eq!(lat.project(&[-0.25]), vec![0.0]);
    }

    #[test]
    fn overshoot_clamps_to_centered_boundary() {
        let lat = lat1();
        assert_eq!(lat.project(&[7.0]), vec![2.0]);
        assert_eq!(lat.project(&[-7.0]), vec![-2.0]);
        let off = Lattice::new(1, 0.5, 4, vec![10.0]).unwrap();
        assert_eq!(off.project(&[17.0]), vec![12.0]);
    }

    #[test]
    fn point_count_and_enumeration_order() {
        let lat = Lattice::new(1, 0.5, 2, vec![0.25]).unwrap();
        assert_eq!(lat.point_count(), 5);
        let pts: Vec<f64> = (0..5).map(|i| lat.decode(i).unwrap()[0]).collect();
        assert_eq!(pts, vec![-0.75, -0.25, 0.25, 0.75, 1.25]);
        for (i, &p) in pts.iter().enumerate() {
            assert_eq!(lat.encode(&[p]).unwrap(), i);
        }
    }

    #[test]
    fn encode_rejects_off_lattice() {
        let lat = lat1();
        assert!(matches!(
            lat.encode(&[0.31]),
            Err(LatticeError::OffLattice { .. })
        ));
        assert!(matches!(
            lat.encode(&[2.5]), // on delta Z but outside the half-width
            Err(LatticeError::OffLattice { .. })
        ));
    }

    #[test]
    fn decode_rejects_out_of_range() {
        let lat = lat1();
        assert!(matches!(
            lat.decode(9),
            Err(LatticeError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn bad_construction_errors() {
        assert!(Lattice::new(0, 0.5, 4, vec![]).is_err());
        assert!(Lattice::new(1, 0.0, 4, vec![0.0]).is_err());
        assert!(Lattice::new(1, 0.5, 0, vec![0.0]).is_err());
        assert!(Lattice::new(2, 0.5, 4, vec![0.0]).is_err());
        assert!(Lattice::new(9, 0.5, 1000, vec![0.0; 9]).is_err());
    }

    proptest! {
        #[test]
        fn projection_is_idempotent_and_on_grid(
            xs in proptest::collection::vec(-50.0f64..50.0, 3),
            center in proptest::collection::vec(-2.0f64..2.0, 3),
            spacing in 0.01f64..1.0,
            kappa in 1i64..12,
        ) {
            let lat = Lattice::new(3, spacing, kappa, center).unwrap();
            let p = lat.project(&xs);
            let pp = lat.project(&p);
            prop_assert_eq!(&p, &pp);
            let idx = lat.encode(&p).unwrap();
            prop_assert_eq!(idx, lat.project_index(&xs));
            prop_assert_eq!(lat.decode(idx).unwrap(), p);
        }

        #[test]
        fn projection_within_half_cell_inside_the_box(
            x in -0.9f64..0.9,
            spacing in 0.05f64..0.5,
        ) {
            let lat = Lattice::new(1, spacing, 20, vec![0.0]).unwrap();
            // |x| <= kappa*delta guaranteed: 20 * 0.05 = 1 > 0.9
            let p = lat.project(&[x]);
            prop_assert!((p[0] - x).abs() <= spacing / 2.0 + 1e-12);
        }

        #[test]
        fn encode_decode_bijection_d3(index in 0usize..1331) {
            let lat = Lattice::new(3, 0.2, 5, vec![0.3, -0.1, 2.0]).unwrap();
            let p = lat.decode(index).unwrap();
            prop_assert_eq!(lat.encode(&p).unwrap(), index);
        }
    }
}
