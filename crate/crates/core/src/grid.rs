//! Uniform periodic grids on the flat torus `[0, L)^n`.

use crate::error::{Error, Result};

/// A uniform grid with `points_per_axis` samples on each of `dim` periodic
/// axes of length `period`. Grid point `i` along an axis sits at `i * h`.
///
/// Points are numbered row-major: axis 0 varies slowest.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub dim: usize,
    pub points_per_axis: usize,
    pub period: f64,
}

impl GridSpec {
    pub fn new(dim: usize, points_per_axis: usize, period: f64) -> Result<Self> {
        let grid = Self {
            dim,
            points_per_axis,
            period,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=3).contains(&self.dim) {
            return Err(Error::Config(format!(
                "dimension must be 2 or 3, got {}",
                self.dim
            )));
        }
        if self.points_per_axis < 8 || self.points_per_axis % 2 != 0 {
            return Err(Error::Config(format!(
                "points per axis must be even and at least 8, got {}",
                self.points_per_axis
            )));
        }
        if !(self.period.is_finite() && self.period > 0.0) {
            return Err(Error::Config(format!(
                "period must be positive, got {}",
                self.period
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        self.period / self.points_per_axis as f64
    }

    #[inline]
    pub fn num_points(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    /// Distance in the flat index between neighbours along `axis`.
    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        self.points_per_axis.pow((self.dim - 1 - axis) as u32)
    }

    #[inline]
    pub fn multi_index(&self, p: usize) -> [usize; 3] {
        let n = self.points_per_axis;
        let mut idx = [0; 3];
        let mut rest = p;
        for a in (0..self.dim).rev() {
            idx[a] = rest % n;
            rest /= n;
        }
        idx
    }

    #[inline]
    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx[..self.dim]
            .iter()
            .fold(0, |acc, &i| acc * self.points_per_axis + i)
    }

    /// Flat index of the point displaced by `offset` (periodic).
    #[inline]
    pub fn shifted(&self, p: usize, offset: &[isize]) -> usize {
        let n = self.points_per_axis as isize;
        let mut idx = self.multi_index(p);
        for a in 0..self.dim {
            idx[a] = (idx[a] as isize + offset[a]).rem_euclid(n) as usize;
        }
        self.flat_index(&idx)
    }

    #[inline]
    pub fn coords(&self, p: usize) -> [f64; 3] {
        let h = self.spacing();
        let idx = self.multi_index(p);
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = idx[a] as f64 * h;
        }
        x
    }

    /// Nearest grid point to `x` and the offset `x - coords(p)` after
    /// periodic reduction.
    pub fn snap(&self, x: &[f64]) -> (usize, [f64; 3]) {
        let h = self.spacing();
        let n = self.points_per_axis as i64;
        let mut idx = [0usize; 3];
        let mut off = [0.0; 3];
        for a in 0..self.dim {
            let k = (x[a] / h).round() as i64;
            idx[a] = k.rem_euclid(n) as usize;
            off[a] = x[a] - k as f64 * h;
        }
        (self.flat_index(&idx), off)
    }

    /// Flat-torus distance between two points.
    pub fn torus_distance(&self, x: &[f64], y: &[f64]) -> f64 {
        let l = self.period;
        (0..self.dim)
            .map(|a| {
                let d = (x[a] - y[a]).rem_euclid(l);
                let d = d.min(l - d);
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn ensure_same(&self, other: &GridSpec, what: &str) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{what}: {self:?} vs {other:?}"
            )))
        }
    }

    /// Number of independent entries of a symmetric 2-tensor.
    #[inline]
    pub fn sym_components(&self) -> usize {
        self.dim * (self.dim + 1) / 2
    }
}

/// Index of entry `(i, j)` in packed lower-triangle row-major storage.
#[inline]
pub const fn sym_index(i: usize, j: usize) -> usize {
    if i >= j {
        i * (i + 1) / 2 + j
    } else {
        j * (j + 1) / 2 + i
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn rejects_bad_specs() {
        assert!(GridSpec::new(1, 16, 1.0).is_err());
        assert!(GridSpec::new(2, 9, 1.0).is_err());
        assert!(GridSpec::new(2, 6, 1.0).is_err());
        assert!(GridSpec::new(3, 8, 0.0).is_err());
        assert!(GridSpec::new(3, 8, 1.0).is_ok());
    }

    #[test]
    fn index_round_trip() {
        let g = GridSpec::new(3, 8, 2.0 * PI).unwrap();
        for p in [0, 1, 7, 8, 63, 64, 511] {
            assert_eq!(g.flat_index(&g.multi_index(p)), p);
        }
        assert_eq!(g.stride(0), 64);
        assert_eq!(g.stride(2), 1);
        assert_eq!(g.shifted(0, &[-1, 0, 0]), 7 * 64);
    }

    #[test]
    fn packed_symmetric_layout() {
        assert_eq!(sym_index(0, 0), 0);
        assert_eq!(sym_index(1, 0), 1);
        assert_eq!(sym_index(0, 1), 1);
        assert_eq!(sym_index(1, 1), 2);
        assert_eq!(sym_index(2, 0), 3);
        assert_eq!(sym_index(2, 1), 4);
        assert_eq!(sym_index(2, 2), 5);
    }

    #[test]
    fn torus_distance_wraps() {
        let g = GridSpec::new(2, 16, 2.0 * PI).unwrap();
        let d = g.torus_distance(&[0.1, 0.0], &[2.0 * PI - 0.1, 0.0]);
        assert!((d - 0.2).abs() < 1e-12);
    }
}
