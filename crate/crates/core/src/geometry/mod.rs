//! Discrete tensor calculus on periodic grids: Christoffel symbols,
//! curvature, the DeTurck vector field, Lie derivatives and the operators
//! of the perturbation equation.

mod perturbation;
pub(crate) mod point;

use crate::error::{Error, Result};
use crate::fd::{self, Derivatives};
use crate::field::{self, per_line, per_point, MetricField, TensorField};
use crate::grid::{sym_index, GridSpec};
use crate::{linalg, par};
use point::{dispatch, ricci_from_riemann, riemann, trace, Jet};

pub use perturbation::{
    covariant_derivative_norms, lichnerowicz_l, perturbation_parts, perturbation_rhs, q_terms,
    PerturbationParts,
};

/// Largest admissible pointwise condition number.
pub const MAX_CONDITION: f64 = 1e12;

pub(crate) fn check_condition(g: &MetricField) -> Result<()> {
    let (condition, point) = g.condition();
    if condition > MAX_CONDITION {
        return Err(Error::NonInvertibleMetric { point, condition });
    }
    Ok(())
}

/// Curvature of a metric, computed from its first and second derivatives.
#[derive(Clone, Debug)]
pub struct CurvatureReport {
    /// `Γ^k_ij`, components `[k, i, j]`.
    pub christoffel: TensorField,
    /// `R^m_pij`, components `[m, p, i, j]`.
    pub riemann: TensorField,
    pub ricci: TensorField,
    pub scalar: TensorField,
    pub min_scalar: f64,
    pub max_scalar: f64,
}

pub fn christoffel(g: &MetricField) -> Result<TensorField> {
    check_condition(g)?;
    let grid = *g.grid();
    let d = fd::derivatives(&grid, g.data());
    let data = dispatch!(grid.dim, christoffel_kernel(g, &d));
    TensorField::new(grid, 2, 1, data)
}

fn christoffel_kernel<const D: usize>(g: &MetricField, d: &Derivatives) -> Vec<f64> {
    per_point(g.grid().num_points(), D * D * D, |p, out| {
        let jet = Jet::<D>::load(g.at::<D>(p), d, p, false);
        let gam = jet.christoffel();
        for (c, v) in gam.iter().flatten().flatten().enumerate() {
            out[c] = *v;
        }
    })
}

pub fn curvature(g: &MetricField) -> Result<CurvatureReport> {
    check_condition(g)?;
    let grid = *g.grid();
    let n = grid.dim;
    let np = grid.num_points();
    let d = fd::derivatives(&grid, g.data());
    let mut data = dispatch!(n, curvature_kernel(g, &d));
    let (n3, n4, n2) = (n * n * n, n * n * n * n, n * n);
    let scalar = data.split_off((n3 + n4 + n2) * np);
    let ricci = data.split_off((n3 + n4) * np);
    let riemann = data.split_off(n3 * np);
    let (min_scalar, max_scalar) = par::min_max(&scalar);
    Ok(CurvatureReport {
        christoffel: TensorField::new(grid, 2, 1, data)?,
        riemann: TensorField::new(grid, 3, 1, riemann)?,
        ricci: TensorField::new(grid, 2, 0, ricci)?,
        scalar: TensorField::scalar(grid, scalar)?,
        min_scalar,
        max_scalar,
    })
}

fn curvature_kernel<const D: usize>(g: &MetricField, d: &Derivatives) -> Vec<f64> {
    let (n3, n4) = (D * D * D, D * D * D * D);
    per_point(g.grid().num_points(), n3 + n4 + D * D + 1, |p, out| {
        let jet = Jet::<D>::load(g.at::<D>(p), d, p, true);
        let gam = jet.christoffel();
        let dgam = jet.christoffel_derivative(&gam);
        let riem = riemann(&gam, &dgam);
        let ric = ricci_from_riemann(&riem);
        let mut c = 0;
        for v in gam.iter().flatten().flatten() {
            out[c] = *v;
            c += 1;
        }
        for v in riem.iter().flatten().flatten().flatten() {
            out[c] = *v;
            c += 1;
        }
        for v in ric.iter().flatten() {
            out[c] = *v;
            c += 1;
        }
        out[c] = trace(&jet.ginv, &ric);
    })
}

/// Ricci tensor (packed lower triangle) and scalar curvature, without the
/// full Riemann tensor.
pub fn ricci_and_scalar(g: &MetricField) -> Result<(Vec<f64>, Vec<f64>)> {
    check_condition(g)?;
    let grid = *g.grid();
    let np = grid.num_points();
    let mut ric = dispatch!(grid.dim, ricci_kernel(g));
    let scalar = ric.split_off(grid.sym_components() * np);
    Ok((ric, scalar))
}

fn ricci_kernel<const D: usize>(g: &MetricField) -> Vec<f64> {
    let nc = D * (D + 1) / 2;
    per_line(g.grid(), &[(g.data(), nc, true)], nc + 1, |_, k, jets, out| {
        let jet = Jet::<D>::from_line(&jets[0], k, true);
        let gam = jet.christoffel();
        let ric = jet.ricci_direct(&gam);
        for i in 0..D {
            for j in 0..=i {
                out[sym_index(i, j)] = ric[i][j];
            }
        }
        out[nc] = trace(&jet.ginv, &ric);
    })
}

/// Scalar curvature field.
pub fn scalar_curvature(g: &MetricField) -> Result<Vec<f64>> {
    Ok(ricci_and_scalar(g)?.1)
}

/// `X^k = g^ij (Γ^k_ij(bg) − Γ^k_ij(g))`.
pub fn deturck_field(g: &MetricField, bg: &MetricField) -> Result<TensorField> {
    g.grid()
        .ensure_same(bg.grid(), "DeTurck field")
        .map_err(|e| Error::Config(e.to_string()))?;
    check_condition(g)?;
    let grid = *g.grid();
    let dg = fd::derivatives_first(&grid, g.data());
    let dbg = (!bg.is_constant()).then(|| fd::derivatives_first(&grid, bg.data()));
    let data = dispatch!(grid.dim, deturck_kernel(g, bg, &dg, dbg.as_ref()));
    TensorField::new(grid, 0, 1, data)
}

pub(crate) fn deturck_kernel<const D: usize>(
    g: &MetricField,
    bg: &MetricField,
    dg: &Derivatives,
    dbg: Option<&Derivatives>,
) -> Vec<f64> {
    per_point(g.grid().num_points(), D, |p, out| {
        let jet = Jet::<D>::load(g.at::<D>(p), dg, p, false);
        let mut gam = jet.christoffel();
        if let Some(dbg) = dbg {
            let bjet = Jet::<D>::load(bg.at::<D>(p), dbg, p, false);
            let bgam = bjet.christoffel();
            for k in 0..D {
                for i in 0..D {
                    for j in 0..D {
                        gam[k][i][j] -= bgam[k][i][j];
                    }
                }
            }
        }
        for (k, o) in out.iter_mut().enumerate() {
            *o = -trace(&jet.ginv, &gam[k]);
        }
    })
}

/// `(L_X g)_ij = X^k ∂_k g_ij + g_kj ∂_i X^k + g_ik ∂_j X^k`, as a full
/// (2,0) field.
pub fn lie_derivative(x: &TensorField, g: &MetricField) -> Result<TensorField> {
    g.grid().ensure_same(x.grid(), "Lie derivative")?;
    if x.valence() != (0, 1) {
        return Err(Error::Validation("Lie derivative needs a vector field".into()));
    }
    let grid = *g.grid();
    let packed = lie_derivative_packed(&grid, x.data(), g);
    Ok(TensorField::from_packed_sym(grid, &packed))
}

/// Packed `L_X g` for a vector field given as `n` component arrays.
pub(crate) fn lie_derivative_packed(grid: &GridSpec, x: &[f64], g: &MetricField) -> Vec<f64> {
    let dg = fd::gradients(grid, g.data());
    lie_derivative_with(grid, x, g, &dg)
}

/// As [`lie_derivative_packed`] with precomputed first derivatives of `g`.
pub(crate) fn lie_derivative_with(
    grid: &GridSpec,
    x: &[f64],
    g: &MetricField,
    dg: &[Vec<Vec<f64>>],
) -> Vec<f64> {
    let dx = fd::gradients(grid, x);
    dispatch!(grid.dim, lie_kernel(grid, x, &dx, g, dg))
}

fn lie_kernel<const D: usize>(
    grid: &GridSpec,
    x: &[f64],
    dx: &[Vec<Vec<f64>>],
    g: &MetricField,
    dg: &[Vec<Vec<f64>>],
) -> Vec<f64> {
    let np = grid.num_points();
    per_point(np, D * (D + 1) / 2, |p, out| {
        let gm = g.at::<D>(p);
        for i in 0..D {
            for j in 0..=i {
                let mut s = 0.0;
                for k in 0..D {
                    s += x[k * np + p] * dg[k][sym_index(i, j)][p];
                    s += gm[k][j] * dx[i][k][p] + gm[i][k] * dx[j][k][p];
                }
                out[sym_index(i, j)] = s;
            }
        }
    })
}


/// Ricci flow velocity `−2 Ric(g)` (packed) together with the scalar
/// curvature of `g`.
pub fn ricci_flow_rhs(g: &MetricField) -> Result<(Vec<f64>, Vec<f64>)> {
    let (mut ric, scalar) = ricci_and_scalar(g)?;
    ric.iter_mut().for_each(|v| *v *= -2.0);
    Ok((ric, scalar))
}

/// Ricci–DeTurck velocity `−2 Ric(g) − L_X g` with `X` the DeTurck field of
/// `g` relative to `bg` (packed), together with the scalar curvature of `g`.
pub fn ricci_deturck_rhs(g: &MetricField, bg: &MetricField) -> Result<(Vec<f64>, Vec<f64>)> {
    let v = rdt_velocity(g, bg)?;
    Ok((v.velocity, v.scalar))
}

/// Ricci–DeTurck velocity plus by-products of the same derivative pass.
pub(crate) struct RdtVelocity {
    pub velocity: Vec<f64>,
    pub scalar: Vec<f64>,
    /// `(‖∂h‖_∞, ‖∂²h‖_∞)` for `h = g − bg`, only when `bg` is constant
    /// (then covariant and coordinate derivatives of `h` agree).
    pub norms: Option<(f64, f64)>,
}

pub(crate) fn rdt_velocity(g: &MetricField, bg: &MetricField) -> Result<RdtVelocity> {
    g.grid()
        .ensure_same(bg.grid(), "Ricci-DeTurck")
        .map_err(|e| Error::Config(e.to_string()))?;
    check_condition(g)?;
    let grid = *g.grid();
    let np = grid.num_points();
    let nc = grid.sym_components();
    let n = grid.dim;
    let mut data = dispatch!(n, rdt_kernel(g, bg));
    let norms = if bg.is_constant() {
        let hess = data.split_off((nc + 2 + n) * np);
        let grad = data.split_off((nc + 1 + n) * np);
        Some((par::max_abs(&grad).sqrt(), par::max_abs(&hess).sqrt()))
    } else {
        None
    };
    let x = data.split_off((nc + 1) * np);
    let scalar = data.split_off(nc * np);
    let velocity = dispatch!(n, lie_finish(g, &x, &data));
    Ok(RdtVelocity {
        velocity,
        scalar,
        norms,
    })
}

/// Per point: packed `−2 Ric − X^k ∂_k g`, scalar curvature, DeTurck field
/// `X`, and for constant `bg` the squared norms of `∂g` and `∂²g`.
fn rdt_kernel<const D: usize>(g: &MetricField, bg: &MetricField) -> Vec<f64> {
    let nc = D * (D + 1) / 2;
    let constant = bg.is_constant();
    let mut inputs = vec![(g.data(), nc, true)];
    if !constant {
        inputs.push((bg.data(), nc, false));
    }
    let nout = nc + 1 + D + if constant { 2 } else { 0 };
    per_line(g.grid(), &inputs, nout, |_, k, jets, out| {
        let jet = Jet::<D>::from_line(&jets[0], k, true);
        let gam = jet.christoffel();
        let ric = jet.ricci_direct(&gam);
        out[nc] = trace(&jet.ginv, &ric);
        let mut diff = gam;
        if !constant {
            let bgam = Jet::<D>::from_line(&jets[1], k, false).christoffel();
            for k in 0..D {
                for i in 0..D {
                    for j in 0..D {
                        diff[k][i][j] -= bgam[k][i][j];
                    }
                }
            }
        }
        let mut x = [0.0; D];
        for k in 0..D {
            x[k] = -trace(&jet.ginv, &diff[k]);
            out[nc + 1 + k] = x[k];
        }
        for i in 0..D {
            for j in 0..=i {
                let mut s = -2.0 * ric[i][j];
                for k in 0..D {
                    s -= x[k] * jet.dg[k][i][j];
                }
                out[sym_index(i, j)] = s;
            }
        }
        if constant {
            let sq = |v: &f64| v * v;
            out[nc + 1 + D] = jet.dg.iter().flatten().flatten().map(sq).sum();
            out[nc + 2 + D] = jet.ddg.iter().flatten().flatten().flatten().map(sq).sum();
        }
    })
}

/// Subtracts `g_kj ∂_i X^k + g_ik ∂_j X^k` from the packed partial velocity.
fn lie_finish<const D: usize>(g: &MetricField, x: &[f64], partial: &[f64]) -> Vec<f64> {
    let np = g.grid().num_points();
    per_line(g.grid(), &[(x, D, false)], D * (D + 1) / 2, |p, k, jets, out| {
        let gm = g.at::<D>(p);
        let dx = &jets[0];
        for i in 0..D {
            for j in 0..=i {
                let c = sym_index(i, j);
                let mut s = partial[c * np + p];
                for m in 0..D {
                    s -= gm[m][j] * dx.d1(i, m, k) + gm[i][m] * dx.d1(j, m, k);
                }
                out[c] = s;
            }
        }
    })
}

/// Laplace–Beltrami operator `g^ij (∂_i ∂_j f − Γ^k_ij ∂_k f)` of a scalar.
pub fn laplace_beltrami(g: &MetricField, f: &[f64]) -> Result<Vec<f64>> {
    check_condition(g)?;
    let grid = *g.grid();
    let dg = fd::derivatives_first(&grid, g.data());
    let df = fd::derivatives(&grid, f);
    Ok(dispatch!(grid.dim, laplace_kernel(g, &dg, &df)))
}

fn laplace_kernel<const D: usize>(g: &MetricField, dg: &Derivatives, df: &Derivatives) -> Vec<f64> {
    per_point(g.grid().num_points(), 1, |p, out| {
        let jet = Jet::<D>::load(g.at::<D>(p), dg, p, false);
        let gam = jet.christoffel();
        let mut s = 0.0;
        for i in 0..D {
            for j in 0..D {
                let mut v = df.second[sym_index(i.max(j), i.min(j))][0][p];
                for k in 0..D {
                    v -= gam[k][i][j] * df.first[k][0][p];
                }
                s += jet.ginv[i][j] * v;
            }
        }
        out[0] = s;
    })
}

/// `|Ric|²_g = g^ia g^jb Ric_ij Ric_ab` from packed Ricci components.
pub fn ricci_norm_squared(g: &MetricField, ric: &[f64]) -> Vec<f64> {
    dispatch!(g.grid().dim, ricci_norm_kernel(g, ric))
}

fn ricci_norm_kernel<const D: usize>(g: &MetricField, ric: &[f64]) -> Vec<f64> {
    let np = g.grid().num_points();
    per_point(np, 1, |p, out| {
        let ginv = linalg::inverse(&g.at::<D>(p)).expect("validated metric is invertible");
        let r = field::load_sym::<D>(ric, np, p);
        let mut s = 0.0;
        for i in 0..D {
            for j in 0..D {
                for a in 0..D {
                    for b in 0..D {
                        s += ginv[i][a] * ginv[j][b] * r[i][j] * r[a][b];
                    }
                }
            }
        }
        out[0] = s;
    })
}
