//! Operators of the perturbation equation for `h = g − bg`:
//!
//! `∂_t h = Δ_bg h + 2 Rm(h) − (h∘Ric + Ric∘h) + Q0 + div F`
//!
//! where `Rm(h)_ij = h^ab R_iajb` (symmetrised), `F^p_ij = (ĝ^pq − bg^pq) ∇_q h_ij`
//! with `ĝ = bg + h`, and `Q0` collects the remaining quadratic gradient
//! terms and the curvature terms of order two and higher in `h`. Covariant
//! derivatives and index raising use `bg`.

use super::check_condition;
use super::point::{
    dispatch, load_first, load_second, lower_riemann, ricci, riemann, t3, t4, Jet, T3, T4,
};
use crate::error::{Error, Result};
use crate::fd::{self, Derivatives};
use crate::field::{load_sym, per_point, MetricField, TensorField};
use crate::grid::{sym_index, GridSpec};
use crate::linalg::{inverse, Mat};
use crate::par;

/// Background geometry at one point. All curvature quantities vanish for a
/// spatially constant background.
struct Bg<const D: usize> {
    constant: bool,
    ginv: Mat<D>,
    gam: T3<D>,
    dgam: T4<D>,
    /// Lowered Riemann tensor `R_mpij`.
    rl: T4<D>,
    ric: Mat<D>,
}

impl<const D: usize> Bg<D> {
    #[inline]
    fn load(bg: &MetricField, d: Option<&Derivatives>, p: usize, curvature: bool) -> Self {
        let g = bg.at::<D>(p);
        match d {
            None => Self {
                constant: true,
                ginv: inverse(&g).expect("validated metric is invertible"),
                gam: t3::<D>(),
                dgam: t4::<D>(),
                rl: t4::<D>(),
                ric: [[0.0; D]; D],
            },
            Some(d) => {
                let jet = Jet::<D>::load(g, d, p, curvature);
                let gam = jet.christoffel();
                if !curvature {
                    return Self {
                        constant: false,
                        ginv: jet.ginv,
                        gam,
                        dgam: t4::<D>(),
                        rl: t4::<D>(),
                        ric: [[0.0; D]; D],
                    };
                }
                let dgam = jet.christoffel_derivative(&gam);
                let riem = riemann(&gam, &dgam);
                Self {
                    constant: false,
                    ginv: jet.ginv,
                    rl: lower_riemann(&jet.g, &riem),
                    ric: ricci(&gam, &dgam),
                    gam,
                    dgam,
                }
            }
        }
    }
}

/// `T_bij = ∇_b h_ij` and `N_abij = ∇_a ∇_b h_ij`.
#[inline]
fn covariant<const D: usize>(b: &Bg<D>, h: &Mat<D>, dh: &T3<D>, ddh: &T4<D>) -> (T3<D>, T4<D>) {
    let mut t = *dh;
    let mut n = *ddh;
    if b.constant {
        return (t, n);
    }
    for bb in 0..D {
        for i in 0..D {
            for j in 0..D {
                let mut s = 0.0;
                for k in 0..D {
                    s += b.gam[k][bb][i] * h[k][j] + b.gam[k][bb][j] * h[i][k];
                }
                t[bb][i][j] -= s;
            }
        }
    }
    for a in 0..D {
        for bb in 0..D {
            for i in 0..D {
                for j in 0..D {
                    let mut s = 0.0;
                    for k in 0..D {
                        s += b.dgam[a][k][bb][i] * h[k][j]
                            + b.gam[k][bb][i] * dh[a][k][j]
                            + b.dgam[a][k][bb][j] * h[i][k]
                            + b.gam[k][bb][j] * dh[a][i][k];
                        s += b.gam[k][a][bb] * t[k][i][j]
                            + b.gam[k][a][i] * t[bb][k][j]
                            + b.gam[k][a][j] * t[bb][i][k];
                    }
                    n[a][bb][i][j] -= s;
                }
            }
        }
    }
    (t, n)
}

/// Pointwise pieces of the right-hand side.
struct Local<const D: usize> {
    /// `Δ h + 2 Rm(h)`
    lin: Mat<D>,
    /// `h∘Ric + Ric∘h`
    ric_h: Mat<D>,
    q0: Mat<D>,
    /// `F^p_ij`
    flux: T3<D>,
}

#[inline]
fn local<const D: usize>(b: &Bg<D>, h: &Mat<D>, t: &T3<D>, n: &T4<D>, gfull: &Mat<D>) -> Local<D> {
    let gi = &b.ginv;
    let big = inverse(gfull).expect("checked positive definite");
    let mut dgi = [[0.0; D]; D];
    let mut hup = [[0.0; D]; D];
    let mut hmix = [[0.0; D]; D];
    for a in 0..D {
        for c in 0..D {
            dgi[a][c] = big[a][c] - gi[a][c];
            for d in 0..D {
                hmix[a][c] += h[a][d] * gi[d][c];
            }
        }
    }
    for a in 0..D {
        for bb in 0..D {
            for c in 0..D {
                hup[a][bb] += gi[a][c] * hmix[c][bb];
            }
        }
    }

    // Index-raised copies of T for the quadratic terms.
    // y[b][j][p] = G^ab T_ajp, z[b][i][p] = G^pq T_biq, x[i][q][b] = G^qp z[i][p][b]
    let mut y = t3::<D>();
    let mut z = t3::<D>();
    let mut x = t3::<D>();
    let mut w = [0.0; D];
    for bb in 0..D {
        for i in 0..D {
            for p in 0..D {
                let (mut sy, mut sz) = (0.0, 0.0);
                for a in 0..D {
                    sy += big[a][bb] * t[a][i][p];
                    sz += big[p][a] * t[bb][i][a];
                }
                y[bb][i][p] = sy;
                z[bb][i][p] = sz;
            }
        }
    }
    for i in 0..D {
        for q in 0..D {
            for bb in 0..D {
                let mut s = 0.0;
                for p in 0..D {
                    s += big[q][p] * z[i][p][bb];
                }
                x[i][q][bb] = s;
            }
        }
    }
    for (d, wd) in w.iter_mut().enumerate() {
        for a in 0..D {
            for c in 0..D {
                *wd += big[a][c] * t[a][c][d];
            }
        }
    }
    let mut v = [0.0; D];
    for (bb, vb) in v.iter_mut().enumerate() {
        for d in 0..D {
            *vb += big[bb][d] * w[d];
        }
    }

    let mut out = Local {
        lin: [[0.0; D]; D],
        ric_h: [[0.0; D]; D],
        q0: [[0.0; D]; D],
        flux: t3::<D>(),
    };
    for i in 0..D {
        for j in 0..D {
            let mut lap = 0.0;
            let mut action = 0.0;
            let mut rem = 0.0;
            let mut ric_h = 0.0;
            for a in 0..D {
                ric_h += hmix[i][a] * b.ric[a][j] + hmix[j][a] * b.ric[a][i];
                for bb in 0..D {
                    lap += gi[a][bb] * n[a][bb][i][j];
                    let pair = b.rl[j][a][i][bb] + b.rl[i][a][j][bb];
                    action += 0.5 * hup[a][bb] * pair;
                    rem -= (dgi[a][bb] + hup[a][bb]) * pair;
                    let mut mixed = 0.0;
                    for q in 0..D {
                        mixed += hmix[i][q] * b.rl[j][a][q][bb] + hmix[j][q] * b.rl[i][a][q][bb];
                    }
                    rem -= dgi[a][bb] * mixed;
                }
            }
            let mut quad = 0.0;
            for bb in 0..D {
                quad += v[bb] * t[bb][i][j];
            }
            let mut half = 0.0;
            for q in 0..D {
                for bb in 0..D {
                    half += x[i][q][bb] * t[j][q][bb];
                    half += 2.0 * y[bb][j][q] * y[q][i][bb];
                    half -= 2.0 * y[bb][j][q] * z[bb][i][q];
                    half -= 2.0 * z[j][q][bb] * z[bb][i][q];
                    half -= 2.0 * z[i][q][bb] * z[bb][j][q];
                }
            }
            out.lin[i][j] = lap + 2.0 * action;
            out.ric_h[i][j] = ric_h;
            out.q0[i][j] = quad + 0.5 * half + rem;
            for p in 0..D {
                let mut s = 0.0;
                for q in 0..D {
                    s += dgi[p][q] * t[q][i][j];
                }
                out.flux[p][i][j] = s;
            }
        }
    }
    out
}

/// Packed arrays of the right-hand-side pieces.
pub struct PerturbationParts {
    /// `Δ h + 2 Rm(h)`
    pub linear: Vec<f64>,
    /// `h∘Ric + Ric∘h`
    pub ricci_action: Vec<f64>,
    pub q0: Vec<f64>,
    /// `F^p_ij` at `[p * ncomp + sym_index(i, j)]` component arrays.
    pub flux: Vec<f64>,
}

struct Inputs {
    dh: Derivatives,
    dbg: Option<Derivatives>,
}

fn prepare(h: &[f64], bg: &MetricField, curvature: bool) -> Result<Inputs> {
    check_condition(bg)?;
    let grid = *bg.grid();
    let full: Vec<f64> = bg.data().iter().zip(h).map(|(a, b)| a + b).collect();
    MetricField::new(grid, full).map_err(|e| match e {
        Error::InvalidMetric { point, .. } => Error::DegeneratePerturbation { point },
        other => other,
    })?;
    let dbg = if bg.is_constant() {
        None
    } else if curvature {
        Some(fd::derivatives(&grid, bg.data()))
    } else {
        Some(fd::derivatives_first(&grid, bg.data()))
    };
    Ok(Inputs {
        dh: fd::derivatives(&grid, h),
        dbg,
    })
}

/// Computes all right-hand-side pieces for packed `h`.
pub fn perturbation_parts(h: &[f64], bg: &MetricField) -> Result<PerturbationParts> {
    let inputs = prepare(h, bg, true)?;
    Ok(dispatch!(bg.grid().dim, parts_kernel(h, bg, &inputs)))
}

fn parts_kernel<const D: usize>(h: &[f64], bg: &MetricField, inp: &Inputs) -> PerturbationParts {
    let np = bg.grid().num_points();
    let nc = D * (D + 1) / 2;
    let mut data = per_point(np, 3 * nc + D * nc, |p, out| {
        let b = Bg::<D>::load(bg, inp.dbg.as_ref(), p, true);
        let hm = load_sym::<D>(h, np, p);
        let dh = load_first::<D>(&inp.dh.first, p);
        let ddh = load_second::<D>(&inp.dh.second, p);
        let (t, n) = covariant(&b, &hm, &dh, &ddh);
        let mut gfull = bg.at::<D>(p);
        for i in 0..D {
            for j in 0..D {
                gfull[i][j] += hm[i][j];
            }
        }
        let l = local(&b, &hm, &t, &n, &gfull);
        for i in 0..D {
            for j in 0..=i {
                let c = sym_index(i, j);
                out[c] = 0.5 * (l.lin[i][j] + l.lin[j][i]);
                out[nc + c] = 0.5 * (l.ric_h[i][j] + l.ric_h[j][i]);
                out[2 * nc + c] = 0.5 * (l.q0[i][j] + l.q0[j][i]);
                for pp in 0..D {
                    out[3 * nc + pp * nc + c] = 0.5 * (l.flux[pp][i][j] + l.flux[pp][j][i]);
                }
            }
        }
    });
    let flux = data.split_off(3 * nc * np);
    let q0 = data.split_off(2 * nc * np);
    let ricci_action = data.split_off(nc * np);
    PerturbationParts {
        linear: data,
        ricci_action,
        q0,
        flux,
    }
}

/// Covariant divergence `∇_p F^p_ij` of a packed flux.
pub(crate) fn divergence(grid: &GridSpec, flux: &[f64], bg: &MetricField) -> Vec<f64> {
    let n = grid.dim;
    let np = grid.num_points();
    let nc = grid.sym_components();
    let mut div = vec![0.0; nc * np];
    let mut tmp = vec![0.0; np];
    for p in 0..n {
        for c in 0..nc {
            let src = &flux[(p * nc + c) * np..(p * nc + c + 1) * np];
            fd::d1_into(grid, src, p, &mut tmp);
            div[c * np..(c + 1) * np]
                .iter_mut()
                .zip(&tmp)
                .for_each(|(a, b)| *a += b);
        }
    }
    if !bg.is_constant() {
        let dbg = fd::derivatives_first(grid, bg.data());
        let corr = dispatch!(n, divergence_correction(grid, flux, bg, &dbg));
        div.iter_mut().zip(&corr).for_each(|(a, b)| *a += b);
    }
    div
}

fn divergence_correction<const D: usize>(
    grid: &GridSpec,
    flux: &[f64],
    bg: &MetricField,
    dbg: &Derivatives,
) -> Vec<f64> {
    let np = grid.num_points();
    let nc = D * (D + 1) / 2;
    per_point(np, nc, |pt, out| {
        let b = Bg::<D>::load(bg, Some(dbg), pt, false);
        let f = |p: usize, i: usize, j: usize| flux[(p * nc + sym_index(i, j)) * np + pt];
        for i in 0..D {
            for j in 0..=i {
                let mut s = 0.0;
                for p in 0..D {
                    for k in 0..D {
                        s += b.gam[p][p][k] * f(k, i, j)
                            - b.gam[k][p][i] * f(p, k, j)
                            - b.gam[k][p][j] * f(p, i, k);
                    }
                }
                out[sym_index(i, j)] = s;
            }
        }
    })
}

/// Packed `∂_t h` of the perturbation equation.
pub fn perturbation_rhs(h: &[f64], bg: &MetricField) -> Result<Vec<f64>> {
    let parts = perturbation_parts(h, bg)?;
    let div = divergence(bg.grid(), &parts.flux, bg);
    Ok(parts
        .linear
        .iter()
        .zip(&parts.ricci_action)
        .zip(&parts.q0)
        .zip(&div)
        .map(|(((l, r), q), d)| l - r + q + d)
        .collect())
}

fn ensure_symmetric(h: &TensorField, bg: &MetricField) -> Result<()> {
    bg.grid().ensure_same(h.grid(), "perturbation")?;
    if h.valence() != (2, 0) || !h.is_symmetric(1e-12) {
        return Err(Error::Validation("h must be a symmetric (2,0) tensor".into()));
    }
    Ok(())
}

/// `Δ_bg h + 2 Rm(h)` with the analyst's sign convention (a Fourier mode of
/// wavenumber k is multiplied by `−|k|²` on a flat background).
pub fn lichnerowicz_l(h: &TensorField, bg: &MetricField) -> Result<TensorField> {
    ensure_symmetric(h, bg)?;
    let packed = h.to_packed_sym();
    let inputs = prepare_linear(&packed, bg)?;
    let lin = dispatch!(bg.grid().dim, linear_kernel(&packed, bg, &inputs));
    Ok(TensorField::from_packed_sym(*bg.grid(), &lin))
}

fn prepare_linear(h: &[f64], bg: &MetricField) -> Result<Inputs> {
    check_condition(bg)?;
    let grid = *bg.grid();
    Ok(Inputs {
        dh: fd::derivatives(&grid, h),
        dbg: (!bg.is_constant()).then(|| fd::derivatives(&grid, bg.data())),
    })
}

fn linear_kernel<const D: usize>(h: &[f64], bg: &MetricField, inp: &Inputs) -> Vec<f64> {
    let np = bg.grid().num_points();
    per_point(np, D * (D + 1) / 2, |p, out| {
        let b = Bg::<D>::load(bg, inp.dbg.as_ref(), p, true);
        let hm = load_sym::<D>(h, np, p);
        let dh = load_first::<D>(&inp.dh.first, p);
        let ddh = load_second::<D>(&inp.dh.second, p);
        let (_, n) = covariant(&b, &hm, &dh, &ddh);
        let mut hup = [[0.0; D]; D];
        for a in 0..D {
            for c in 0..D {
                for d in 0..D {
                    for e in 0..D {
                        hup[a][c] += b.ginv[a][d] * hm[d][e] * b.ginv[e][c];
                    }
                }
            }
        }
        for i in 0..D {
            for j in 0..=i {
                let mut s = 0.0;
                for a in 0..D {
                    for c in 0..D {
                        s += b.ginv[a][c] * 0.5 * (n[a][c][i][j] + n[a][c][j][i]);
                        s += hup[a][c] * (b.rl[j][a][i][c] + b.rl[i][a][j][c]);
                    }
                }
                out[sym_index(i, j)] = s;
            }
        }
    })
}

/// `(Q0, F)` with `F` as a (2,1) field with components `[p, i, j]`.
pub fn q_terms(h: &TensorField, bg: &MetricField) -> Result<(TensorField, TensorField)> {
    ensure_symmetric(h, bg)?;
    let grid = *bg.grid();
    let n = grid.dim;
    let np = grid.num_points();
    let nc = grid.sym_components();
    let parts = perturbation_parts(&h.to_packed_sym(), bg)?;
    let mut flux = vec![0.0; n * n * n * np];
    for p in 0..n {
        for i in 0..n {
            for j in 0..n {
                let src = &parts.flux[(p * nc + sym_index(i, j)) * np..][..np];
                let c = (p * n + i) * n + j;
                flux[c * np..(c + 1) * np].copy_from_slice(src);
            }
        }
    }
    Ok((
        TensorField::from_packed_sym(grid, &parts.q0),
        TensorField::new(grid, 2, 1, flux)?,
    ))
}

/// Largest pointwise Frobenius norms of `∇h` and `∇∇h` (covariant with
/// respect to `bg`, coordinate components).
pub fn covariant_derivative_norms(h: &[f64], bg: &MetricField) -> Result<(f64, f64)> {
    let inputs = prepare_linear(h, bg)?;
    let data = dispatch!(bg.grid().dim, norms_kernel(h, bg, &inputs));
    let np = bg.grid().num_points();
    Ok((par::max_abs(&data[..np]), par::max_abs(&data[np..])))
}

fn norms_kernel<const D: usize>(h: &[f64], bg: &MetricField, inp: &Inputs) -> Vec<f64> {
    let np = bg.grid().num_points();
    per_point(np, 2, |p, out| {
        let b = Bg::<D>::load(bg, inp.dbg.as_ref(), p, true);
        let hm = load_sym::<D>(h, np, p);
        let dh = load_first::<D>(&inp.dh.first, p);
        let ddh = load_second::<D>(&inp.dh.second, p);
        let (t, n) = covariant(&b, &hm, &dh, &ddh);
        out[0] = t.iter().flatten().flatten().map(|v| v * v).sum::<f64>().sqrt();
        out[1] = n
            .iter()
            .flatten()
            .flatten()
            .flatten()
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt();
    })
}
