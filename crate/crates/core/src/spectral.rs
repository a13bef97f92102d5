//! Multidimensional FFTs on the periodic grid and Fourier multipliers.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::grid::GridSpec;

/// In-place unnormalised DFT of a row-major `N^dim` array along every axis.
pub fn fft_nd(grid: &GridSpec, data: &mut [Complex<f64>], inverse: bool) {
    let n = grid.points_per_axis;
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    let mut line = vec![Complex::new(0.0, 0.0); n];
    let mut scratch = vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for axis in 0..grid.dim {
        let stride = grid.stride(axis);
        for start in 0..data.len() {
            // Lines start where the axis index is zero.
            if (start / stride) % n != 0 {
                continue;
            }
            for (i, v) in line.iter_mut().enumerate() {
                *v = data[start + i * stride];
            }
            fft.process_with_scratch(&mut line, &mut scratch);
            for (i, v) in line.iter().enumerate() {
                data[start + i * stride] = *v;
            }
        }
    }
}

/// Integer wavenumber of DFT index `i` on an `n`-point axis.
#[inline]
pub fn wavenumber(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Applies the Fourier multiplier `m(k)` (with `k` the angular wave vector
/// `2π·j/L`) to a real periodic field.
pub fn apply_multiplier(grid: &GridSpec, f: &[f64], m: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let n = grid.points_per_axis;
    let np = grid.num_points();
    let mut c: Vec<Complex<f64>> = f.iter().map(|v| Complex::new(*v, 0.0)).collect();
    fft_nd(grid, &mut c, false);
    let scale = 2.0 * std::f64::consts::PI / grid.period;
    let mut k = [0.0; 3];
    for (p, v) in c.iter_mut().enumerate() {
        let idx = grid.multi_index(p);
        for a in 0..grid.dim {
            k[a] = scale * wavenumber(idx[a], n) as f64;
        }
        *v *= m(&k[..grid.dim]) / np as f64;
    }
    fft_nd(grid, &mut c, true);
    c.iter().map(|v| v.re).collect()
}

/// Periodic Gaussian smoothing `f ↦ e^{σ²Δ/2} f`, i.e. convolution with the
/// periodised Gaussian of standard deviation `σ`.
pub fn gaussian_smooth(grid: &GridSpec, f: &[f64], sigma: f64) -> Vec<f64> {
    apply_multiplier(grid, f, |k| {
        let k2: f64 = k.iter().map(|x| x * x).sum();
        (-0.5 * sigma * sigma * k2).exp()
    })
}
