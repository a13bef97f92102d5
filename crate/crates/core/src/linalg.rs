//! Fixed-size dense helpers for the 2x2 and 3x3 matrices that live at each
//! grid point.

pub type Mat<const D: usize> = [[f64; D]; D];

#[inline]
pub fn zeros<const D: usize>() -> Mat<D> {
    [[0.0; D]; D]
}

#[inline]
pub fn det<const D: usize>(m: &Mat<D>) -> f64 {
    match D {
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        3 => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
        _ => unreachable!("only 2x2 and 3x3 matrices are supported"),
    }
}

/// Inverse via cofactors; `None` when the determinant vanishes.
#[inline]
pub fn inverse<const D: usize>(m: &Mat<D>) -> Option<Mat<D>> {
    let d = det(m);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    let inv_d = 1.0 / d;
    let mut out = zeros::<D>();
    match D {
        2 => {
            out[0][0] = m[1][1] * inv_d;
            out[0][1] = -m[0][1] * inv_d;
            out[1][0] = -m[1][0] * inv_d;
            out[1][1] = m[0][0] * inv_d;
        }
        3 => {
            for i in 0..3 {
                for j in 0..3 {
                    let (i1, i2) = ((j + 1) % 3, (j + 2) % 3);
                    let (j1, j2) = ((i + 1) % 3, (i + 2) % 3);
                    out[i][j] = (m[i1][j1] * m[i2][j2] - m[i1][j2] * m[i2][j1]) * inv_d;
                }
            }
        }
        _ => unreachable!(),
    }
    Some(out)
}

/// Eigenvalues of a symmetric matrix in ascending order (closed form).
pub fn sym_eigenvalues<const D: usize>(m: &Mat<D>) -> [f64; D] {
    let mut out = [0.0; D];
    match D {
        2 => {
            let mean = 0.5 * (m[0][0] + m[1][1]);
            let half = 0.5 * (m[0][0] - m[1][1]);
            let r = (half * half + m[0][1] * m[0][1]).sqrt();
            out[1] = mean + r;
            // det / λ_max keeps the small eigenvalue accurate when the
            // spread is large.
            out[0] = if out[1] > 0.0 {
                det::<2>(&[[m[0][0], m[0][1]], [m[1][0], m[1][1]]]) / out[1]
            } else {
                mean - r
            };
        }
        3 => {
            let p1 = m[0][1] * m[0][1] + m[0][2] * m[0][2] + m[1][2] * m[1][2];
            let q = (m[0][0] + m[1][1] + m[2][2]) / 3.0;
            if p1 <= 1e-30 * (q * q).max(1e-300) {
                let mut d = [m[0][0], m[1][1], m[2][2]];
                d.sort_by(f64::total_cmp);
                out.copy_from_slice(&d[..D]);
                return out;
            }
            let p2 = (m[0][0] - q).powi(2) + (m[1][1] - q).powi(2) + (m[2][2] - q).powi(2) + 2.0 * p1;
            let p = (p2 / 6.0).sqrt();
            let mut b = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    b[i][j] = (m[i][j] - if i == j { q } else { 0.0 }) / p;
                }
            }
            let r = (det::<3>(&b) / 2.0).clamp(-1.0, 1.0);
            let phi = r.acos() / 3.0;
            let e_max = q + 2.0 * p * phi.cos();
            let e_min = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
            let e_mid = 3.0 * q - e_max - e_min;
            out[0] = if e_max > 0.0 && e_mid > 1e-3 * e_max && e_min.abs() < 1e-6 * e_max {
                let mut full = [[0.0; 3]; 3];
                for i in 0..3 {
                    for j in 0..3 {
                        full[i][j] = m[i][j];
                    }
                }
                det::<3>(&full) / (e_mid * e_max)
            } else {
                e_min
            };
            out[1] = e_mid;
            out[2] = e_max;
        }
        _ => unreachable!(),
    }
    out
}

/// Cholesky factorisation succeeds iff the symmetric matrix is positive
/// definite.
pub fn cholesky_ok<const D: usize>(m: &Mat<D>) -> bool {
    let mut l = zeros::<D>();
    for i in 0..D {
        for j in 0..=i {
            let mut s = m[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if !(s > 0.0) {
                    return false;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    true
}

/// Largest `|λ|` with `h v = λ g v`, i.e. the operator norm of `h`
/// measured by the positive definite `g`.
pub fn relative_norm<const D: usize>(h: &Mat<D>, g: &Mat<D>) -> f64 {
    // g = L Lᵀ, then the eigenvalues of L⁻¹ h L⁻ᵀ.
    let mut l = zeros::<D>();
    for i in 0..D {
        for j in 0..=i {
            let mut s = g[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            l[i][j] = if i == j { s.sqrt() } else { s / l[j][j] };
        }
    }
    let li = inverse(&l).expect("positive definite metric");
    let m = mat_mul(&mat_mul(&li, h), &transpose(&li));
    let mut sym = zeros::<D>();
    for i in 0..D {
        for j in 0..D {
            sym[i][j] = 0.5 * (m[i][j] + m[j][i]);
        }
    }
    let e = sym_eigenvalues(&sym);
    e[0].abs().max(e[D - 1].abs())
}

#[inline]
pub fn mat_mul<const D: usize>(a: &Mat<D>, b: &Mat<D>) -> Mat<D> {
    let mut out = zeros::<D>();
    for i in 0..D {
        for j in 0..D {
            out[i][j] = (0..D).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

#[inline]
pub fn transpose<const D: usize>(a: &Mat<D>) -> Mat<D> {
    let mut out = zeros::<D>();
    for i in 0..D {
        for j in 0..D {
            out[i][j] = a[j][i];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_2_and_3() {
        let a: Mat<2> = [[2.0, 0.5], [0.5, 1.0]];
        let ai = inverse(&a).unwrap();
        let id = mat_mul(&a, &ai);
        assert!((id[0][0] - 1.0).abs() < 1e-14 && id[0][1].abs() < 1e-14);
        let b: Mat<3> = [[3.0, 0.2, 0.1], [0.2, 2.0, -0.3], [0.1, -0.3, 1.5]];
        let bi = inverse(&b).unwrap();
        let id = mat_mul(&b, &bi);
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((id[i][j] - e).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn eigenvalues_match_known_spectra() {
        let a: Mat<2> = [[2.0, 1.0], [1.0, 2.0]];
        let e = sym_eigenvalues(&a);
        assert!((e[0] - 1.0).abs() < 1e-14 && (e[1] - 3.0).abs() < 1e-14);
        let b: Mat<3> = [[2.0, 1.0, 0.0], [1.0, 2.0, 0.0], [0.0, 0.0, 5.0]];
        let e = sym_eigenvalues(&b);
        assert!((e[0] - 1.0).abs() < 1e-12);
        assert!((e[1] - 3.0).abs() < 1e-12);
        assert!((e[2] - 5.0).abs() < 1e-12);
        let c: Mat<3> = [[4.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 2.0]];
        assert_eq!(sym_eigenvalues(&c), [1.0, 2.0, 4.0]);
    }

    #[test]
    fn relative_norm_scales_with_metric() {
        let h: Mat<2> = [[0.1, 0.0], [0.0, -0.3]];
        let id: Mat<2> = [[1.0, 0.0], [0.0, 1.0]];
        assert!((relative_norm(&h, &id) - 0.3).abs() < 1e-15);
        let g: Mat<2> = [[4.0, 0.0], [0.0, 4.0]];
        assert!((relative_norm(&h, &g) - 0.075).abs() < 1e-15);
    }

    #[test]
    fn cholesky_detects_indefinite() {
        assert!(cholesky_ok::<3>(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]));
        assert!(!cholesky_ok::<3>(&[[1.0, 2.0, 0.0], [2.0, 1.0, 0.0], [0.0, 0.0, 1.0]]));
    }
}
