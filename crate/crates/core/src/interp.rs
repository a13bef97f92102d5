//! Periodic tensor-product cubic (four-point Lagrange) interpolation.

use crate::grid::GridSpec;

/// Offsets within a cell closer than this to a node snap onto it, so that
/// sampling at grid points reproduces the data exactly.
const NODE_SNAP: f64 = 1e-12;

#[inline]
fn weights(s: f64) -> [f64; 4] {
    [
        -s * (s - 1.0) * (s - 2.0) / 6.0,
        (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0,
        -(s + 1.0) * s * (s - 2.0) / 2.0,
        (s + 1.0) * s * (s - 1.0) / 6.0,
    ]
}

#[inline]
fn dweights(s: f64) -> [f64; 4] {
    [
        -(3.0 * s * s - 6.0 * s + 2.0) / 6.0,
        (3.0 * s * s - 4.0 * s - 1.0) / 2.0,
        -(3.0 * s * s - 2.0 * s - 2.0) / 2.0,
        (3.0 * s * s - 1.0) / 6.0,
    ]
}

/// Samples a component-major periodic field at arbitrary points.
pub struct Interpolator<'a> {
    grid: GridSpec,
    data: &'a [f64],
    ncomp: usize,
}

struct Stencil {
    nodes: [[usize; 4]; 3],
    w: [[f64; 4]; 3],
    dw: [[f64; 4]; 3],
}

impl<'a> Interpolator<'a> {
    pub fn new(grid: &GridSpec, data: &'a [f64]) -> Self {
        let np = grid.num_points();
        debug_assert_eq!(data.len() % np, 0);
        Interpolator {
            grid: *grid,
            data,
            ncomp: data.len() / np,
        }
    }

    pub fn ncomp(&self) -> usize {
        self.ncomp
    }

    fn stencil(&self, x: &[f64], grad: bool) -> Stencil {
        let n = self.grid.points_per_axis as i64;
        let h = self.grid.spacing();
        let mut st = Stencil {
            nodes: [[0; 4]; 3],
            w: [[0.0; 4]; 3],
            dw: [[0.0; 4]; 3],
        };
        for a in 0..self.grid.dim {
            let u = x[a] / h;
            let mut i0 = u.floor();
            let mut s = u - i0;
            if s < NODE_SNAP {
                s = 0.0;
            } else if 1.0 - s < NODE_SNAP {
                s = 0.0;
                i0 += 1.0;
            }
            let i0 = i0 as i64;
            for t in 0..4 {
                st.nodes[a][t] = (i0 - 1 + t as i64).rem_euclid(n) as usize;
            }
            st.w[a] = weights(s);
            if grad {
                st.dw[a] = dweights(s).map(|v| v / h);
            }
        }
        st
    }

    /// Writes the `ncomp` interpolated values at `x` into `out`.
    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        let st = self.stencil(x, false);
        out[..self.ncomp].fill(0.0);
        self.accumulate(&st, None, out);
    }

    /// Values into `out` and gradients into `grad[a * ncomp + c]`.
    pub fn eval_with_gradient(&self, x: &[f64], out: &mut [f64], grad: &mut [f64]) {
        let st = self.stencil(x, true);
        out[..self.ncomp].fill(0.0);
        self.accumulate(&st, None, out);
        for a in 0..self.grid.dim {
            let g = &mut grad[a * self.ncomp..(a + 1) * self.ncomp];
            g.fill(0.0);
            self.accumulate(&st, Some(a), g);
        }
    }

    fn accumulate(&self, st: &Stencil, deriv: Option<usize>, out: &mut [f64]) {
        let dim = self.grid.dim;
        let np = self.grid.num_points();
        let total = 4usize.pow(dim as u32);
        for combo in 0..total {
            let mut w = 1.0;
            let mut p = 0;
            let mut rest = combo;
            for a in 0..dim {
                let t = rest % 4;
                rest /= 4;
                w *= if deriv == Some(a) { st.dw[a][t] } else { st.w[a][t] };
                p += st.nodes[a][t] * self.grid.stride(a);
            }
            if w == 0.0 {
                continue;
            }
            for (c, o) in out[..self.ncomp].iter_mut().enumerate() {
                *o += w * self.data[c * np + p];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn cubics_are_reproduced_and_nodes_are_exact() {
        let grid = GridSpec::new(2, 32, 2.0 * PI).unwrap();
        let f: Vec<f64> = (0..grid.num_points())
            .map(|p| {
                let x = grid.coords(p);
                x[0].sin() * (2.0 * x[1]).cos()
            })
            .collect();
        let it = Interpolator::new(&grid, &f);
        let mut v = [0.0];
        for p in [0, 17, 500] {
            it.eval(&grid.coords(p)[..2], &mut v);
            assert_eq!(v[0], f[p]);
        }
        let mut g = [0.0; 2];
        let mut max_err: f64 = 0.0;
        let mut max_gerr: f64 = 0.0;
        for k in 0..50 {
            let x = [0.123 * k as f64, 7.0 - 0.311 * k as f64];
            it.eval_with_gradient(&x, &mut v, &mut g);
            max_err = max_err.max((v[0] - x[0].sin() * (2.0 * x[1]).cos()).abs());
            max_gerr = max_gerr.max((g[0] - x[0].cos() * (2.0 * x[1]).cos()).abs());
            max_gerr = max_gerr.max((g[1] + 2.0 * x[0].sin() * (2.0 * x[1]).sin()).abs());
        }
        assert!(max_err < 1e-3, "{max_err}");
        assert!(max_gerr < 1e-2, "{max_gerr}");
    }
}
