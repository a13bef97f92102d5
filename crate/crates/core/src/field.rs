//! Grid-sampled metrics and tensor fields.
//!
//! Storage is component-major ("structure of arrays"): component `c` of
//! point `p` lives at `data[c * num_points + p]`. Stencils stream over whole
//! component arrays; per-point kernels gather across them.

use crate::error::{Error, Result};
use crate::fd::LineJets;
use crate::grid::{sym_index, GridSpec};
use crate::linalg::{sym_eigenvalues, Mat};
use crate::par;

/// Smallest admissible metric eigenvalue. Metrics below it are rejected,
/// never clamped.
pub const LAMBDA_FLOOR: f64 = 1e-8;

/// A symmetric positive-definite 2-tensor sampled on a periodic grid.
///
/// Only the `n(n+1)/2` lower-triangle entries are stored (row-major, see
/// [`sym_index`]).
#[derive(Clone, Debug)]
pub struct MetricField {
    grid: GridSpec,
    data: Vec<f64>,
    lambda_min: f64,
    condition: (f64, usize),
}

impl MetricField {
    /// Wraps packed component data after checking finiteness and positive
    /// definiteness at every point.
    pub fn new(grid: GridSpec, data: Vec<f64>) -> Result<Self> {
        grid.validate()?;
        let expected = grid.sym_components() * grid.num_points();
        if data.len() != expected {
            return Err(Error::Validation(format!(
                "metric data has {} entries, expected {expected}",
                data.len()
            )));
        }
        let (lambda_min, condition) = match grid.dim {
            2 => spectrum::<2>(&grid, &data)?,
            _ => spectrum::<3>(&grid, &data)?,
        };
        Ok(Self {
            grid,
            data,
            lambda_min,
            condition,
        })
    }

    /// Samples `f(x)` (a full matrix; the lower triangle is read) at every
    /// grid point.
    pub fn from_fn<F>(grid: GridSpec, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> [[f64; 3]; 3] + Sync + Send,
    {
        let n = grid.dim;
        let data = per_point(grid.num_points(), grid.sym_components(), |p, out| {
            let x = grid.coords(p);
            let m = f(&x[..n]);
            for i in 0..n {
                for j in 0..=i {
                    out[sym_index(i, j)] = m[i][j];
                }
            }
        });
        Self::new(grid, data)
    }

    pub fn flat(grid: GridSpec) -> Self {
        Self::constant(grid, 1.0).expect("identity metric is valid")
    }

    /// `c` times the identity at every point.
    pub fn constant(grid: GridSpec, c: f64) -> Result<Self> {
        Self::from_fn(grid, move |_| {
            let mut m = [[0.0; 3]; 3];
            for (i, row) in m.iter_mut().enumerate() {
                row[i] = c;
            }
            m
        })
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Smallest eigenvalue over all grid points.
    #[inline]
    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    /// Largest pointwise condition number and the point where it occurs.
    #[inline]
    pub fn condition(&self) -> (f64, usize) {
        self.condition
    }

    #[inline]
    pub fn component(&self, i: usize, j: usize) -> &[f64] {
        let np = self.grid.num_points();
        let c = sym_index(i, j);
        &self.data[c * np..(c + 1) * np]
    }

    #[inline]
    pub fn entry(&self, p: usize, i: usize, j: usize) -> f64 {
        self.data[sym_index(i, j) * self.grid.num_points() + p]
    }

    #[inline]
    pub fn at<const D: usize>(&self, p: usize) -> Mat<D> {
        load_sym::<D>(&self.data, self.grid.num_points(), p)
    }

    /// True when every component is the same number at every point.
    pub fn is_constant(&self) -> bool {
        self.data
            .chunks(self.grid.num_points())
            .all(|c| c.iter().all(|v| *v == c[0]))
    }

    /// The constant metric whose components are the spatial averages of
    /// this one; a convex combination, so still positive definite.
    pub fn mean(&self) -> Self {
        let np = self.grid.num_points();
        let means: Vec<f64> = self.data.chunks(np).map(|c| c.iter().sum::<f64>() / np as f64).collect();
        let data = means.iter().flat_map(|m| std::iter::repeat_n(*m, np)).collect();
        Self::new(self.grid, data).expect("average of positive definite metrics")
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.grid, self.data.iter().map(|v| v * c).collect())
    }

    /// Largest componentwise difference to another metric on the same grid.
    pub fn max_abs_diff(&self, other: &MetricField) -> Result<f64> {
        self.grid.ensure_same(&other.grid, "metric difference")?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())))
    }

    /// `sup_x ‖g − bg‖` in the operator norm of `bg` at each point.
    pub fn relative_distance(&self, background: &MetricField) -> Result<f64> {
        self.grid.ensure_same(&background.grid, "metric distance")?;
        let np = self.grid.num_points();
        let per: Vec<f64> = par::map_indices(np, |p| match self.grid.dim {
            2 => rel_at::<2>(&self.data, &background.data, np, p),
            _ => rel_at::<3>(&self.data, &background.data, np, p),
        });
        Ok(par::max_abs(&per))
    }

    /// `h = self - background` as a full symmetric (2,0) tensor field.
    pub fn perturbation(&self, background: &MetricField) -> Result<TensorField> {
        self.grid.ensure_same(&background.grid, "perturbation")?;
        let packed: Vec<f64> = self
            .data
            .iter()
            .zip(&background.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(TensorField::from_packed_sym(self.grid, &packed))
    }

    /// `background + h`, rejecting non-positive-definite sums.
    pub fn from_background_plus(background: &MetricField, h: &TensorField) -> Result<Self> {
        background.grid.ensure_same(&h.grid, "background + h")?;
        if h.covariant != 2 || h.contravariant != 0 {
            return Err(Error::Validation("h must be a (2,0) tensor".into()));
        }
        let packed = h.to_packed_sym();
        let data = background
            .data
            .iter()
            .zip(&packed)
            .map(|(a, b)| a + b)
            .collect();
        Self::new(background.grid, data).map_err(|e| match e {
            Error::InvalidMetric { point, .. } => Error::DegeneratePerturbation { point },
            other => other,
        })
    }
}

/// Evaluates `f(p, out)` at every point, `out` holding `ncomp` slots, and
/// returns the component-major result.
pub(crate) fn per_point<F>(np: usize, ncomp: usize, f: F) -> Vec<f64>
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    let mut data = vec![0.0; ncomp * np];
    let outputs: Vec<&mut [f64]> = data.chunks_mut(np).collect();
    par::for_each_block(outputs, par::BLOCK, |start, s| {
        let mut buf = vec![0.0; ncomp];
        for k in 0..s[0].len() {
            f(start + k, &mut buf);
            for (c, v) in buf.iter().enumerate() {
                s[c][k] = *v;
            }
        }
    });
    data
}

/// Like [`per_point`], but walks the grid line by line and hands the
/// kernel the values and derivatives of each input along the current line.
/// Inputs are `(data, ncomp, second)`; `f(p, k, jets, out)` sees point `p`
/// at position `k` of its line.
pub(crate) fn per_line<F>(grid: &GridSpec, inputs: &[(&[f64], usize, bool)], nout: usize, f: F) -> Vec<f64>
where
    F: Fn(usize, usize, &[LineJets], &mut [f64]) + Sync + Send,
{
    let n = grid.points_per_axis;
    let np = grid.num_points();
    let mut data = vec![0.0; nout * np];
    let outputs: Vec<&mut [f64]> = data.chunks_mut(np).collect();
    let block = n * par::BLOCK.div_ceil(n);
    par::for_each_block(outputs, block, |start, s| {
        let mut jets: Vec<LineJets> = inputs
            .iter()
            .map(|(_, nc, second)| LineJets::new(grid, *nc, *second))
            .collect();
        let mut buf = vec![0.0; nout];
        for l in 0..s[0].len() / n {
            let line = start / n + l;
            for (j, (src, _, _)) in jets.iter_mut().zip(inputs) {
                j.fill(src, line);
            }
            for k in 0..n {
                f(line * n + k, k, &jets, &mut buf);
                for (c, v) in buf.iter().enumerate() {
                    s[c][l * n + k] = *v;
                }
            }
        }
    });
    data
}

fn rel_at<const D: usize>(g: &[f64], bg: &[f64], np: usize, p: usize) -> f64 {
    let a = load_sym::<D>(g, np, p);
    let b = load_sym::<D>(bg, np, p);
    let mut h = a;
    for i in 0..D {
        for j in 0..D {
            h[i][j] -= b[i][j];
        }
    }
    crate::linalg::relative_norm(&h, &b)
}

#[inline]
pub(crate) fn load_sym<const D: usize>(data: &[f64], np: usize, p: usize) -> Mat<D> {
    let mut m = [[0.0; D]; D];
    for i in 0..D {
        for j in 0..=i {
            let v = data[sym_index(i, j) * np + p];
            m[i][j] = v;
            m[j][i] = v;
        }
    }
    m
}

type BlockSpectrum = std::result::Result<(f64, f64, usize), (usize, String)>;

/// Smallest eigenvalue and largest condition number (with its point).
fn spectrum<const D: usize>(grid: &GridSpec, data: &[f64]) -> Result<(f64, (f64, usize))> {
    let np = grid.num_points();
    let nblocks = np.div_ceil(par::BLOCK);
    let per_block: Vec<BlockSpectrum> = par::map_indices(nblocks, |b| {
        let mut lo = f64::INFINITY;
        let mut cond = (0.0, 0);
        for p in b * par::BLOCK..((b + 1) * par::BLOCK).min(np) {
            let m = load_sym::<D>(data, np, p);
            if m.iter().flatten().any(|v| !v.is_finite()) {
                return Err((p, "non-finite entry".to_string()));
            }
            let e = sym_eigenvalues(&m);
            if !(e[0] >= LAMBDA_FLOOR) {
                return Err((
                    p,
                    format!("smallest eigenvalue {:.3e} below {LAMBDA_FLOOR:e}", e[0]),
                ));
            }
            lo = lo.min(e[0]);
            let c = e[D - 1] / e[0];
            if c > cond.0 {
                cond = (c, p);
            }
        }
        Ok((lo, cond.0, cond.1))
    });
    let mut lo = f64::INFINITY;
    let mut cond = (0.0, 0);
    for r in per_block {
        match r {
            Ok((l, c, p)) => {
                lo = lo.min(l);
                if c > cond.0 {
                    cond = (c, p);
                }
            }
            Err((point, reason)) => return Err(Error::InvalidMetric { point, reason }),
        }
    }
    Ok((lo, cond))
}

/// A general tensor field with `covariant` lower and `contravariant` upper
/// indices.
///
/// Components are addressed by a multi-index listing the upper indices
/// first, then the lower ones, each running over `0..dim` (row-major). So
/// `Γ^k_ij` is `[k, i, j]` and `F^p_ij` is `[p, i, j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorField {
    grid: GridSpec,
    covariant: usize,
    contravariant: usize,
    data: Vec<f64>,
}

impl TensorField {
    pub fn zeros(grid: GridSpec, covariant: usize, contravariant: usize) -> Self {
        let nc = grid.dim.pow((covariant + contravariant) as u32);
        Self {
            grid,
            covariant,
            contravariant,
            data: vec![0.0; nc * grid.num_points()],
        }
    }

    pub fn new(
        grid: GridSpec,
        covariant: usize,
        contravariant: usize,
        data: Vec<f64>,
    ) -> Result<Self> {
        let nc = grid.dim.pow((covariant + contravariant) as u32);
        if data.len() != nc * grid.num_points() {
            return Err(Error::Validation(format!(
                "tensor data has {} entries, expected {}",
                data.len(),
                nc * grid.num_points()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "non-finite tensor entry at point {}",
                i % grid.num_points()
            )));
        }
        Ok(Self {
            grid,
            covariant,
            contravariant,
            data,
        })
    }

    /// Samples `f(x, out)`, where `out` has one slot per component.
    pub fn from_fn<F>(grid: GridSpec, covariant: usize, contravariant: usize, f: F) -> Result<Self>
    where
        F: Fn(&[f64], &mut [f64]) + Sync + Send,
    {
        let n = grid.dim;
        let nc = n.pow((covariant + contravariant) as u32);
        let data = per_point(grid.num_points(), nc, |p, out| {
            let x = grid.coords(p);
            f(&x[..n], out);
        });
        Self::new(grid, covariant, contravariant, data)
    }

    /// A (0,0) field.
    pub fn scalar(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        Self::new(grid, 0, 0, values)
    }

    /// Expands packed symmetric storage into a full (2,0) field.
    pub fn from_packed_sym(grid: GridSpec, packed: &[f64]) -> Self {
        let n = grid.dim;
        let np = grid.num_points();
        let mut data = vec![0.0; n * n * np];
        for i in 0..n {
            for j in 0..n {
                let c = sym_index(i, j);
                data[(i * n + j) * np..(i * n + j + 1) * np]
                    .copy_from_slice(&packed[c * np..(c + 1) * np]);
            }
        }
        Self {
            grid,
            covariant: 2,
            contravariant: 0,
            data,
        }
    }

    /// Packs the lower triangle of a (2,0) field (upper entries are read
    /// through symmetrisation).
    pub fn to_packed_sym(&self) -> Vec<f64> {
        let n = self.grid.dim;
        let np = self.grid.num_points();
        let mut out = vec![0.0; self.grid.sym_components() * np];
        for i in 0..n {
            for j in 0..=i {
                let c = sym_index(i, j);
                let a = &self.data[(i * n + j) * np..(i * n + j + 1) * np];
                let b = &self.data[(j * n + i) * np..(j * n + i + 1) * np];
                for p in 0..np {
                    out[c * np + p] = 0.5 * (a[p] + b[p]);
                }
            }
        }
        out
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn valence(&self) -> (usize, usize) {
        (self.covariant, self.contravariant)
    }

    #[inline]
    pub fn ncomp(&self) -> usize {
        self.grid.dim.pow((self.covariant + self.contravariant) as u32)
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Component number of a multi-index (upper indices first).
    #[inline]
    pub fn index(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.grid.dim + i)
    }

    #[inline]
    pub fn component(&self, idx: &[usize]) -> &[f64] {
        let np = self.grid.num_points();
        let c = self.index(idx);
        &self.data[c * np..(c + 1) * np]
    }

    #[inline]
    pub fn get(&self, p: usize, idx: &[usize]) -> f64 {
        self.data[self.index(idx) * self.grid.num_points() + p]
    }

    /// Values of a scalar field.
    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn max_abs(&self) -> f64 {
        par::max_abs(&self.data)
    }

    pub fn max_abs_diff(&self, other: &TensorField) -> Result<f64> {
        self.grid.ensure_same(&other.grid, "tensor difference")?;
        if self.valence() != other.valence() {
            return Err(Error::Validation("valence mismatch".into()));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())))
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            data: self.data.iter().map(|v| v * c).collect(),
            ..self.clone()
        }
    }

    /// Whether a (2,0) field satisfies `T_ij = T_ji` to `tol` relative to
    /// its largest entry.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.covariant + self.contravariant != 2 {
            return false;
        }
        let n = self.grid.dim;
        let np = self.grid.num_points();
        let scale = self.max_abs().max(1.0);
        (0..n).all(|i| {
            (0..i).all(|j| {
                let a = &self.data[(i * n + j) * np..(i * n + j + 1) * np];
                let b = &self.data[(j * n + i) * np..(j * n + i + 1) * np];
                a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * scale)
            })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid2() -> GridSpec {
        GridSpec::new(2, 16, 2.0 * PI).unwrap()
    }

    #[test]
    fn flat_metric_has_unit_spectrum() {
        let g = MetricField::flat(grid2());
        assert_eq!(g.lambda_min(), 1.0);
        assert!(g.is_constant());
        assert_eq!(g.entry(5, 1, 0), 0.0);
    }

    #[test]
    fn rejects_indefinite_and_tiny_metrics() {
        let bad = MetricField::from_fn(grid2(), |x| {
            let s = if x[0] > 3.0 { -1.0 } else { 1.0 };
            [[1.0, 0.0, 0.0], [0.0, s, 0.0], [0.0; 3]]
        });
        assert!(matches!(bad, Err(Error::InvalidMetric { .. })));
        assert!(MetricField::constant(grid2(), 1e-9).is_err());
        assert!(MetricField::constant(grid2(), 1e-7).is_ok());
    }

    #[test]
    fn perturbation_round_trip() {
        let grid = grid2();
        let bg = MetricField::flat(grid);
        let g = MetricField::from_fn(grid, |x| {
            [[1.0 + 0.1 * x[0].sin(), 0.05, 0.0], [0.05, 1.2, 0.0], [0.0; 3]]
        })
        .unwrap();
        let h = g.perturbation(&bg).unwrap();
        assert!(h.is_symmetric(0.0));
        let back = MetricField::from_background_plus(&bg, &h).unwrap();
        assert_eq!(back.max_abs_diff(&g).unwrap(), 0.0);
    }

    #[test]
    fn degenerate_sum_is_reported() {
        let grid = grid2();
        let bg = MetricField::flat(grid);
        let h = TensorField::from_fn(grid, 2, 0, |_, out| {
            out.fill(0.0);
            out[0] = -2.0;
        })
        .unwrap();
        assert!(matches!(
            MetricField::from_background_plus(&bg, &h),
            Err(Error::DegeneratePerturbation { .. })
        ));
    }

    #[test]
    fn multi_index_layout() {
        let t = TensorField::zeros(grid2(), 2, 1);
        assert_eq!(t.ncomp(), 8);
        assert_eq!(t.index(&[1, 0, 1]), 5);
    }
}
