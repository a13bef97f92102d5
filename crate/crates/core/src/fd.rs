//! Fourth-order periodic finite differences.
//!
//! First derivative taps `(1, -8, 0, 8, -1) / 12h`, second derivative taps
//! `(-1, 16, -30, 16, -1) / 12h²`. Mixed derivatives apply the first
//! derivative stencil twice.

use crate::grid::{sym_index, GridSpec};
use crate::par;

/// Minimum number of values per parallel work item.
const CHUNK: usize = 4096;

/// Applies a five-point stencil along `axis`.
///
/// The array is viewed as `[outer][n][inner]` with `inner` the axis
/// stride, so that for `inner > 1` every output row combines five whole
/// input rows.
fn apply<F>(grid: &GridSpec, src: &[f64], axis: usize, out: &mut [f64], stencil: F)
where
    F: Fn([f64; 5]) -> f64 + Sync + Send,
{
    let n = grid.points_per_axis;
    let inner = grid.stride(axis);
    let wrap: Vec<[usize; 5]> = (0..n)
        .map(|i| std::array::from_fn(|t| (i + n + t - 2) % n))
        .collect();
    if inner == 1 {
        let lines = CHUNK.div_ceil(n);
        par::for_each_chunk(out, n * lines, |c, chunk| {
            for (l, line) in chunk.chunks_mut(n).enumerate() {
                let base = (c * lines + l) * n;
                let row = &src[base..base + n];
                for (i, o) in line.iter_mut().enumerate() {
                    let w = &wrap[i];
                    *o = stencil([row[w[0]], row[w[1]], row[i], row[w[3]], row[w[4]]]);
                }
            }
        });
    } else {
        let rows = CHUNK.div_ceil(inner);
        par::for_each_chunk(out, inner * rows, |c, chunk| {
            for (k, orow) in chunk.chunks_mut(inner).enumerate() {
                let r = c * rows + k;
                let (o, i) = (r / n, r % n);
                let at = |j: usize| &src[(o * n + j) * inner..(o * n + j + 1) * inner];
                let w = &wrap[i];
                let (a, b, m, d, e) = (at(w[0]), at(w[1]), at(i), at(w[3]), at(w[4]));
                for q in 0..inner {
                    orow[q] = stencil([a[q], b[q], m[q], d[q], e[q]]);
                }
            }
        });
    }
}

/// `out = ∂_axis src`.
pub fn d1_into(grid: &GridSpec, src: &[f64], axis: usize, out: &mut [f64]) {
    // Written as differences so constants give exact zeros.
    let c = 1.0 / (12.0 * grid.spacing());
    apply(grid, src, axis, out, |f| c * (8.0 * (f[3] - f[1]) - (f[4] - f[0])));
}

/// `out = ∂²_axis src`.
pub fn d2_into(grid: &GridSpec, src: &[f64], axis: usize, out: &mut [f64]) {
    let h = grid.spacing();
    let c = 1.0 / (12.0 * h * h);
    apply(grid, src, axis, out, |f| {
        c * (16.0 * ((f[3] - f[2]) + (f[1] - f[2])) - ((f[4] - f[2]) + (f[0] - f[2])))
    });
}

pub fn d1(grid: &GridSpec, src: &[f64], axis: usize) -> Vec<f64> {
    let mut out = vec![0.0; src.len()];
    d1_into(grid, src, axis, &mut out);
    out
}

pub fn d2(grid: &GridSpec, src: &[f64], axis: usize) -> Vec<f64> {
    let mut out = vec![0.0; src.len()];
    d2_into(grid, src, axis, &mut out);
    out
}

/// First and second derivatives of a batch of component arrays.
///
/// `first[a][c]` is `∂_a` of component `c`; `second[sym_index(a, b)][c]` is
/// `∂_a ∂_b` of component `c`.
pub struct Derivatives {
    pub first: Vec<Vec<Vec<f64>>>,
    pub second: Vec<Vec<Vec<f64>>>,
}

/// Differentiates every `np`-long component of `data` once and twice.
pub fn derivatives(grid: &GridSpec, data: &[f64]) -> Derivatives {
    let n = grid.dim;
    let np = grid.num_points();
    let comps: Vec<&[f64]> = data.chunks(np).collect();
    let first: Vec<Vec<Vec<f64>>> = (0..n)
        .map(|a| comps.iter().map(|c| d1(grid, c, a)).collect())
        .collect();
    let mut second = Vec::with_capacity(n * (n + 1) / 2);
    for a in 0..n {
        for b in 0..=a {
            let row: Vec<Vec<f64>> = if a == b {
                comps.iter().map(|c| d2(grid, c, a)).collect()
            } else {
                first[b].iter().map(|c| d1(grid, c, a)).collect()
            };
            second.push(row);
        }
    }
    Derivatives { first, second }
}

/// First derivatives only, with `second` left empty.
pub fn derivatives_first(grid: &GridSpec, data: &[f64]) -> Derivatives {
    Derivatives {
        first: gradients(grid, data),
        second: Vec::new(),
    }
}

/// First derivatives only: `out[a][c]`.
pub fn gradients(grid: &GridSpec, data: &[f64]) -> Vec<Vec<Vec<f64>>> {
    let np = grid.num_points();
    (0..grid.dim)
        .map(|a| data.chunks(np).map(|c| d1(grid, c, a)).collect())
        .collect()
}

/// Periodic Laplacian `Σ_a ∂²_a` of a single component.
pub fn laplacian(grid: &GridSpec, src: &[f64]) -> Vec<f64> {
    let mut acc = d2(grid, src, 0);
    let mut tmp = vec![0.0; src.len()];
    for a in 1..grid.dim {
        d2_into(grid, src, a, &mut tmp);
        acc.iter_mut().zip(&tmp).for_each(|(x, y)| *x += y);
    }
    acc
}

/// Values and derivatives of `ncomp` component arrays along one grid line
/// of the innermost axis. Entries agree bit for bit with [`derivatives`].
pub(crate) struct LineJets {
    n: usize,
    dim: usize,
    ncomp: usize,
    second: bool,
    w1: f64,
    w2: f64,
    val: Vec<f64>,
    first: Vec<f64>,
    mixed: Vec<f64>,
    pad: Vec<f64>,
    shifted: Vec<f64>,
}

impl LineJets {
    pub fn new(grid: &GridSpec, ncomp: usize, second: bool) -> Self {
        let n = grid.points_per_axis;
        let dim = grid.dim;
        let h = grid.spacing();
        let nsec = if second { dim * (dim + 1) / 2 } else { 0 };
        Self {
            n,
            dim,
            ncomp,
            second,
            w1: 1.0 / (12.0 * h),
            w2: 1.0 / (12.0 * h * h),
            val: vec![0.0; ncomp * n],
            first: vec![0.0; dim * ncomp * n],
            mixed: vec![0.0; nsec * ncomp * n],
            pad: vec![0.0; n + 4],
            shifted: vec![0.0; 4 * n],
        }
    }

    #[inline]
    pub fn val(&self, c: usize, k: usize) -> f64 {
        self.val[c * self.n + k]
    }

    /// `∂_a` of component `c` at position `k`.
    #[inline]
    pub fn d1(&self, a: usize, c: usize, k: usize) -> f64 {
        self.first[(a * self.ncomp + c) * self.n + k]
    }

    /// `∂_a ∂_b` of component `c` at position `k`.
    #[inline]
    pub fn d2(&self, a: usize, b: usize, c: usize, k: usize) -> f64 {
        self.mixed[(sym_index(a.max(b), a.min(b)) * self.ncomp + c) * self.n + k]
    }

    /// Fills the buffers for the line starting at point `line * n`.
    pub fn fill(&mut self, data: &[f64], line: usize) {
        let (n, dim) = (self.n, self.dim);
        let np = data.len() / self.ncomp;
        let base = line * n;
        let inner = dim - 1;
        // Offsets of the five taps along each outer axis.
        let mut off = [[0isize; 5]; 2];
        let mut rest = line;
        for a in (0..inner).rev() {
            let i = rest % n;
            rest /= n;
            let s = n.pow((dim - 1 - a) as u32) as isize;
            for (t, o) in off[a].iter_mut().enumerate() {
                *o = (((i + n + t) - 2) % n) as isize * s - i as isize * s;
            }
        }
        let (w1, w2) = (self.w1, self.w2);
        let d1 = |f: [&[f64]; 5], out: &mut [f64]| {
            for k in 0..out.len() {
                out[k] = w1 * (8.0 * (f[3][k] - f[1][k]) - (f[4][k] - f[0][k]));
            }
        };
        for c in 0..self.ncomp {
            let f = &data[c * np..(c + 1) * np];
            let at = |o: isize| &f[(base as isize + o) as usize..][..n];
            let taps = |a: usize, extra: isize| -> [&[f64]; 5] {
                std::array::from_fn(|t| at(off[a][t] + extra))
            };
            let centre = at(0);
            self.val[c * n..(c + 1) * n].copy_from_slice(centre);
            wrap_into(&mut self.pad, centre);
            let slot = |a: usize| (a * self.ncomp + c) * n;
            // Innermost axis from the padded copy.
            let p = &self.pad;
            let out = &mut self.first[slot(inner)..][..n];
            for k in 0..n {
                out[k] = w1 * (8.0 * (p[k + 3] - p[k + 1]) - (p[k + 4] - p[k]));
            }
            for a in 0..inner {
                d1(taps(a, 0), &mut self.first[slot(a)..][..n]);
            }
            if !self.second {
                continue;
            }
            let mslot = |a: usize, b: usize| (sym_index(a, b) * self.ncomp + c) * n;
            for a in 0..dim {
                let out = &mut self.mixed[mslot(a, a)..][..n];
                if a == inner {
                    let p = &self.pad;
                    for k in 0..n {
                        let m = p[k + 2];
                        out[k] = w2
                            * (16.0 * ((p[k + 3] - m) + (p[k + 1] - m))
                                - ((p[k + 4] - m) + (p[k] - m)));
                    }
                } else {
                    let f = taps(a, 0);
                    for k in 0..n {
                        let m = f[2][k];
                        out[k] = w2
                            * (16.0 * ((f[3][k] - m) + (f[1][k] - m))
                                - ((f[4][k] - m) + (f[0][k] - m)));
                    }
                }
            }
            // ∂_inner ∂_b = d1 along the line of ∂_b.
            for b in 0..inner {
                let src = &self.first[slot(b)..][..n];
                wrap_into(&mut self.pad, src);
                let p = &self.pad;
                let out = &mut self.mixed[mslot(inner, b)..][..n];
                for k in 0..n {
                    out[k] = w1 * (8.0 * (p[k + 3] - p[k + 1]) - (p[k + 4] - p[k]));
                }
            }
            // ∂_a ∂_b for two outer axes: ∂_b on the four shifted lines,
            // then the stencil along a.
            for a in 0..inner {
                for b in 0..a {
                    for (j, t) in [0usize, 1, 3, 4].into_iter().enumerate() {
                        d1(taps(b, off[a][t]), &mut self.shifted[j * n..(j + 1) * n]);
                    }
                    let s = &self.shifted;
                    let out = &mut self.mixed[mslot(a, b)..][..n];
                    for k in 0..n {
                        out[k] = w1
                            * (8.0 * (s[2 * n + k] - s[n + k]) - (s[3 * n + k] - s[k]));
                    }
                }
            }
        }
    }
}

/// `pad = [src[n-2], src[n-1], src.., src[0], src[1]]`.
#[inline]
fn wrap_into(pad: &mut [f64], src: &[f64]) {
    let n = src.len();
    pad[2..n + 2].copy_from_slice(src);
    pad[0] = src[(2 * n - 2) % n];
    pad[1] = src[n - 1];
    pad[n + 2] = src[0];
    pad[n + 3] = src[1 % n];
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sample(grid: &GridSpec, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        (0..grid.num_points())
            .map(|p| f(&grid.coords(p)[..grid.dim]))
            .collect()
    }

    fn err(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).fold(0.0, |m, (x, y)| f64::max(m, (x - y).abs()))
    }

    #[test]
    fn exact_on_constants() {
        let grid = GridSpec::new(3, 8, 1.0).unwrap();
        let f = vec![2.5; grid.num_points()];
        for a in 0..3 {
            assert!(d1(&grid, &f, a).iter().all(|v| v.abs() < 1e-12));
            assert!(d2(&grid, &f, a).iter().all(|v| v.abs() < 1e-10));
        }
    }

    #[test]
    fn fourth_order_convergence() {
        let f = |x: &[f64]| (x[0] + 2.0 * x[1]).sin() * x[1].cos();
        let fx = |x: &[f64]| (x[0] + 2.0 * x[1]).cos() * x[1].cos();
        let fxy = |x: &[f64]| {
            -2.0 * (x[0] + 2.0 * x[1]).sin() * x[1].cos() - (x[0] + 2.0 * x[1]).cos() * x[1].sin()
        };
        let mut errs = Vec::new();
        for n in [16, 32] {
            let grid = GridSpec::new(2, n, 2.0 * PI).unwrap();
            let data = sample(&grid, f);
            let d = derivatives(&grid, &data);
            let e1 = err(&d.first[0][0], &sample(&grid, fx));
            let e2 = err(&d.second[sym_index(1, 0)][0], &sample(&grid, fxy));
            errs.push((e1, e2));
        }
        let o1 = (errs[0].0 / errs[1].0).log2();
        let o2 = (errs[0].1 / errs[1].1).log2();
        assert!(o1 > 3.7, "first derivative order {o1}");
        assert!(o2 > 3.7, "mixed derivative order {o2}");
    }

    #[test]
    fn line_jets_match_array_derivatives() {
        for dim in [2, 3] {
            let grid = GridSpec::new(dim, 8, 2.0).unwrap();
            let np = grid.num_points();
            let data: Vec<f64> = (0..2 * np).map(|i| ((i * 7919) % 113) as f64 * 0.01).collect();
            let d = derivatives(&grid, &data);
            let mut lj = LineJets::new(&grid, 2, true);
            for line in 0..np / 8 {
                lj.fill(&data, line);
                for k in 0..8 {
                    let p = line * 8 + k;
                    for c in 0..2 {
                        assert_eq!(lj.val(c, k), data[c * np + p]);
                        for a in 0..dim {
                            assert_eq!(lj.d1(a, c, k), d.first[a][c][p]);
                            for b in 0..=a {
                                assert_eq!(lj.d2(a, b, c, k), d.second[sym_index(a, b)][c][p]);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn laplacian_of_fourier_mode() {
        let grid = GridSpec::new(2, 64, 2.0 * PI).unwrap();
        let data = sample(&grid, |x| x[0].sin());
        let lap = laplacian(&grid, &data);
        let exact: Vec<f64> = data.iter().map(|v| -v).collect();
        assert!(err(&lap, &exact) < 1e-5);
    }
}
