//! Per-point tensor algebra shared by the field-level operators.
//!
//! Index conventions: `gam[k][i][j] = Γ^k_ij`, `dgam[a][k][i][j] = ∂_a Γ^k_ij`,
//! `riem[m][p][i][j] = R^m_pij` with
//! `R^m_pij = ∂_i Γ^m_jp − ∂_j Γ^m_ip + Γ^m_ik Γ^k_jp − Γ^m_jk Γ^k_ip`,
//! `Ric_pj = R^m_pmj` and lowered `R_mpij = g_mk R^k_pij`.

use crate::fd::{Derivatives, LineJets};
use crate::grid::sym_index;
use crate::linalg::{inverse, Mat};

pub(crate) type T3<const D: usize> = [[[f64; D]; D]; D];
pub(crate) type T4<const D: usize> = [[[[f64; D]; D]; D]; D];

#[inline]
pub(crate) fn t3<const D: usize>() -> T3<D> {
    [[[0.0; D]; D]; D]
}

#[inline]
pub(crate) fn t4<const D: usize>() -> T4<D> {
    [[[[0.0; D]; D]; D]; D]
}

/// Metric value, inverse and coordinate derivatives at one point.
pub(crate) struct Jet<const D: usize> {
    pub g: Mat<D>,
    pub ginv: Mat<D>,
    /// `dg[a][i][j] = ∂_a g_ij`
    pub dg: T3<D>,
    /// `ddg[a][b][i][j] = ∂_a ∂_b g_ij`
    pub ddg: T4<D>,
}

#[inline]
pub(crate) fn load_first<const D: usize>(first: &[Vec<Vec<f64>>], p: usize) -> T3<D> {
    let mut d = t3::<D>();
    for (a, da) in d.iter_mut().enumerate() {
        for i in 0..D {
            for j in 0..=i {
                let v = first[a][sym_index(i, j)][p];
                da[i][j] = v;
                da[j][i] = v;
            }
        }
    }
    d
}

#[inline]
pub(crate) fn load_second<const D: usize>(second: &[Vec<Vec<f64>>], p: usize) -> T4<D> {
    let mut d = t4::<D>();
    for a in 0..D {
        for b in 0..=a {
            let src = &second[sym_index(a, b)];
            for i in 0..D {
                for j in 0..=i {
                    let v = src[sym_index(i, j)][p];
                    d[a][b][i][j] = v;
                    d[a][b][j][i] = v;
                    d[b][a][i][j] = v;
                    d[b][a][j][i] = v;
                }
            }
        }
    }
    d
}

impl<const D: usize> Jet<D> {
    /// Loads position `k` of a line of packed symmetric components.
    #[inline]
    pub fn from_line(lj: &LineJets, k: usize, second: bool) -> Self {
        let mut g = [[0.0; D]; D];
        let mut dg = t3::<D>();
        let mut ddg = t4::<D>();
        for i in 0..D {
            for j in 0..=i {
                let c = sym_index(i, j);
                g[i][j] = lj.val(c, k);
                g[j][i] = g[i][j];
                for a in 0..D {
                    let v = lj.d1(a, c, k);
                    dg[a][i][j] = v;
                    dg[a][j][i] = v;
                    if second {
                        for b in 0..=a {
                            let v = lj.d2(a, b, c, k);
                            ddg[a][b][i][j] = v;
                            ddg[a][b][j][i] = v;
                            ddg[b][a][i][j] = v;
                            ddg[b][a][j][i] = v;
                        }
                    }
                }
            }
        }
        Self {
            g,
            ginv: inverse(&g).expect("validated metric is invertible"),
            dg,
            ddg,
        }
    }

    /// Loads a point. The metric is assumed already validated, so its
    /// inverse exists.
    #[inline]
    pub fn load(g: Mat<D>, d: &Derivatives, p: usize, second: bool) -> Self {
        let ginv = inverse(&g).expect("validated metric is invertible");
        Self {
            g,
            ginv,
            dg: load_first::<D>(&d.first, p),
            ddg: if second {
                load_second::<D>(&d.second, p)
            } else {
                t4::<D>()
            },
        }
    }

    /// `Γ_l,ij = ½(∂_i g_jl + ∂_j g_il − ∂_l g_ij)`
    #[inline]
    fn christoffel_first_kind(&self) -> T3<D> {
        let mut c = t3::<D>();
        for l in 0..D {
            for i in 0..D {
                for j in 0..=i {
                    let v = 0.5 * (self.dg[i][j][l] + self.dg[j][i][l] - self.dg[l][i][j]);
                    c[l][i][j] = v;
                    c[l][j][i] = v;
                }
            }
        }
        c
    }

    #[inline]
    pub fn christoffel(&self) -> T3<D> {
        raise_first(&self.ginv, &self.christoffel_first_kind())
    }

    /// `∂_a Γ^k_ij = g^kl ∂_a Γ_l,ij − g^kp ∂_a g_pq Γ^q_ij`
    #[inline]
    pub fn christoffel_derivative(&self, gam: &T3<D>) -> T4<D> {
        let mut out = t4::<D>();
        for a in 0..D {
            let dd = &self.ddg[a];
            let mut lower = t3::<D>();
            for l in 0..D {
                for i in 0..D {
                    for j in 0..=i {
                        let v = 0.5 * (dd[i][j][l] + dd[j][i][l] - dd[l][i][j]);
                        lower[l][i][j] = v;
                        lower[l][j][i] = v;
                    }
                }
            }
            // w[l][i][j] = ∂_a Γ_l,ij − ∂_a g_lq Γ^q_ij
            for l in 0..D {
                for i in 0..D {
                    for j in 0..=i {
                        let mut s = lower[l][i][j];
                        for q in 0..D {
                            s -= self.dg[a][l][q] * gam[q][i][j];
                        }
                        lower[l][i][j] = s;
                        lower[l][j][i] = s;
                    }
                }
            }
            out[a] = raise_first(&self.ginv, &lower);
        }
        out
    }
}

impl<const D: usize> Jet<D> {
    /// Ricci tensor straight from the metric derivatives, without forming
    /// `∂Γ` in full:
    /// `Ric_pj = ∂_m Γ^m_jp − ∂_j Γ^m_mp + Γ^m_mk Γ^k_jp − Γ^m_jk Γ^k_mp`
    /// with `∂_m Γ^m_jp = g^ml ∂_m Γ_l,jp − v_d Γ^d_jp`, `v_d = g^mc ∂_m g_cd`,
    /// and `Γ^m_mp = ½ tr(g⁻¹ ∂_p g)`.
    #[inline]
    pub fn ricci_direct(&self, gam: &T3<D>) -> Mat<D> {
        let gi = &self.ginv;
        // m[j] = g⁻¹ ∂_j g
        let mut mj = [[[0.0; D]; D]; D];
        for (j, mjj) in mj.iter_mut().enumerate() {
            for a in 0..D {
                for d in 0..D {
                    let mut s = 0.0;
                    for c in 0..D {
                        s += gi[a][c] * self.dg[j][c][d];
                    }
                    mjj[a][d] = s;
                }
            }
        }
        let mut tr = [0.0; D];
        let mut v = [0.0; D];
        for k in 0..D {
            for a in 0..D {
                tr[k] += 0.5 * mj[k][a][a];
                // v_d = Σ_m (g⁻¹ ∂_m g)^m_d
                v[k] += mj[a][a][k];
            }
        }
        let mut ric = [[0.0; D]; D];
        for p in 0..D {
            for j in 0..=p {
                let mut s = 0.0;
                for m in 0..D {
                    for l in 0..D {
                        let dd = &self.ddg[m];
                        s += gi[m][l] * 0.5 * (dd[j][p][l] + dd[p][j][l] - dd[l][j][p]);
                    }
                }
                let mut bb = 0.0;
                for a in 0..D {
                    for b in 0..D {
                        bb += gi[a][b] * self.ddg[j][p][a][b] - mj[j][a][b] * mj[p][b][a];
                    }
                }
                s -= 0.5 * bb;
                for d in 0..D {
                    s += (tr[d] - v[d]) * gam[d][j][p];
                }
                for m in 0..D {
                    for k in 0..D {
                        s -= gam[m][j][k] * gam[k][m][p];
                    }
                }
                ric[p][j] = s;
                ric[j][p] = s;
            }
        }
        ric
    }
}

#[inline]
pub(crate) fn raise_first<const D: usize>(ginv: &Mat<D>, lower: &T3<D>) -> T3<D> {
    let mut out = t3::<D>();
    for k in 0..D {
        for i in 0..D {
            for j in 0..=i {
                let mut s = 0.0;
                for l in 0..D {
                    s += ginv[k][l] * lower[l][i][j];
                }
                out[k][i][j] = s;
                out[k][j][i] = s;
            }
        }
    }
    out
}

#[inline]
pub(crate) fn riemann<const D: usize>(gam: &T3<D>, dgam: &T4<D>) -> T4<D> {
    let mut r = t4::<D>();
    for m in 0..D {
        for p in 0..D {
            for i in 0..D {
                for j in 0..i {
                    let mut s = dgam[i][m][j][p] - dgam[j][m][i][p];
                    for k in 0..D {
                        s += gam[m][i][k] * gam[k][j][p] - gam[m][j][k] * gam[k][i][p];
                    }
                    r[m][p][i][j] = s;
                    r[m][p][j][i] = -s;
                }
            }
        }
    }
    r
}

/// `Ric_pj` from Γ and ∂Γ without forming the full Riemann tensor.
#[inline]
pub(crate) fn ricci<const D: usize>(gam: &T3<D>, dgam: &T4<D>) -> Mat<D> {
    let mut trace = [0.0; D];
    for (k, t) in trace.iter_mut().enumerate() {
        for m in 0..D {
            *t += gam[m][m][k];
        }
    }
    let mut ric = [[0.0; D]; D];
    for p in 0..D {
        for j in 0..=p {
            let mut s = 0.0;
            for m in 0..D {
                s += dgam[m][m][j][p] - dgam[j][m][m][p];
                for k in 0..D {
                    s -= gam[m][j][k] * gam[k][m][p];
                }
            }
            for k in 0..D {
                s += trace[k] * gam[k][j][p];
            }
            ric[p][j] = s;
            ric[j][p] = s;
        }
    }
    ric
}

#[inline]
pub(crate) fn ricci_from_riemann<const D: usize>(riem: &T4<D>) -> Mat<D> {
    let mut ric = [[0.0; D]; D];
    for p in 0..D {
        for j in 0..D {
            for m in 0..D {
                ric[p][j] += riem[m][p][m][j];
            }
        }
    }
    ric
}

/// `R_mpij = g_mk R^k_pij`
#[inline]
pub(crate) fn lower_riemann<const D: usize>(g: &Mat<D>, riem: &T4<D>) -> T4<D> {
    let mut out = t4::<D>();
    for m in 0..D {
        for p in 0..D {
            for i in 0..D {
                for j in 0..D {
                    let mut s = 0.0;
                    for k in 0..D {
                        s += g[m][k] * riem[k][p][i][j];
                    }
                    out[m][p][i][j] = s;
                }
            }
        }
    }
    out
}

#[inline]
pub(crate) fn trace<const D: usize>(ginv: &Mat<D>, m: &Mat<D>) -> f64 {
    let mut s = 0.0;
    for i in 0..D {
        for j in 0..D {
            s += ginv[i][j] * m[i][j];
        }
    }
    s
}

/// Calls `$f::<2>` or `$f::<3>` according to the grid dimension.
macro_rules! dispatch {
    ($dim:expr, $f:ident $(::<$($extra:ty),*>)? ($($arg:expr),*)) => {
        match $dim {
            2 => $f::<2 $($(, $extra)*)?>($($arg),*),
            3 => $f::<3 $($(, $extra)*)?>($($arg),*),
            d => unreachable!("unsupported dimension {d}"),
        }
    };
}
pub(crate) use dispatch;
