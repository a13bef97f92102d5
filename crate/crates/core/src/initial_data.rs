//! Initial metrics: smooth oracles, Lipschitz and bi-Lipschitz rough data,
//! pairs agreeing to high order at a point, and mollified sequences.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;

use crate::error::{Error, Result};
use crate::field::MetricField;
use crate::{geometry, linalg};
use crate::grid::{sym_index, GridSpec};
use crate::spectral::{fft_nd, gaussian_smooth, wavenumber};

/// Smallest eigenvalue every generated metric must keep.
pub const MIN_EIGENVALUE: f64 = 0.5;

/// Largest wavenumber (per axis) of the random-smooth family.
pub const RANDOM_MODES: i64 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Flat,
    Conformal,
    RandomSmooth,
    LipschitzKink,
    BilipschitzPullback,
    SecondOrderPair,
    MollifiedSequence,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::Flat,
        Family::Conformal,
        Family::RandomSmooth,
        Family::LipschitzKink,
        Family::BilipschitzPullback,
        Family::SecondOrderPair,
        Family::MollifiedSequence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Flat => "flat",
            Family::Conformal => "conformal",
            Family::RandomSmooth => "random-smooth",
            Family::LipschitzKink => "lipschitz-kink",
            Family::BilipschitzPullback => "bilipschitz-pullback",
            Family::SecondOrderPair => "second-order-pair",
            Family::MollifiedSequence => "mollified-sequence",
        }
    }

    /// Whether the family produces smooth (C^∞) metrics.
    pub fn is_smooth(self) -> bool {
        matches!(
            self,
            Family::Flat | Family::Conformal | Family::RandomSmooth | Family::SecondOrderPair
        )
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown generator family `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorSpec {
    pub family: Family,
    /// Family-specific size parameter; may be negative for the kink.
    pub amplitude: f64,
    pub seed: u64,
    /// Agreement order `2 + eta` of the second-order pair.
    pub eta: f64,
    /// Coefficient `c` of the `d^{2+η}` term of the second-order pair.
    pub pair_scale: f64,
    /// Gaussian widths of the mollified sequence.
    pub mollify_scales: Vec<f64>,
    /// Rough metric being mollified.
    pub base: Family,
    /// Optional lower bound the measured `κ_i` are compared against.
    pub kappa_target: Option<f64>,
}

impl GeneratorSpec {
    pub fn new(family: Family, amplitude: f64) -> Self {
        Self {
            family,
            amplitude,
            seed: 0,
            eta: 0.5,
            pair_scale: 1.0,
            mollify_scales: vec![0.4, 0.2, 0.1],
            base: Family::LipschitzKink,
            kappa_target: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.amplitude.is_finite() {
            return Err(Error::Config("amplitude must be finite".into()));
        }
        if !(self.eta > 0.0 && self.eta <= 2.0) {
            return Err(Error::Config(format!("eta must lie in (0, 2], got {}", self.eta)));
        }
        if self.family == Family::MollifiedSequence {
            if self.mollify_scales.is_empty() || self.mollify_scales.iter().any(|s| !(*s > 0.0)) {
                return Err(Error::Config("mollify_scales must be positive and non-empty".into()));
            }
            if !matches!(self.base, Family::LipschitzKink | Family::BilipschitzPullback) {
                return Err(Error::Config(format!(
                    "mollified sequences need a rough base, got `{}`",
                    self.base
                )));
            }
        }
        Ok(())
    }
}

/// Mollifications `g^i = g * G_{σ_i}` of a rough base metric with their
/// measured scalar curvature minima `κ_i`.
#[derive(Clone, Debug)]
pub struct MollifiedSequence {
    pub base: MetricField,
    pub scales: Vec<f64>,
    pub elements: Vec<MetricField>,
    pub kappas: Vec<f64>,
}

impl MollifiedSequence {
    /// `sup |g^i − g|` per element.
    pub fn distances(&self) -> Vec<f64> {
        self.elements
            .iter()
            .map(|e| e.max_abs_diff(&self.base).expect("same grid"))
            .collect()
    }
}

#[derive(Clone, Debug)]
pub enum Generated {
    Single(MetricField),
    Pair(MetricField, MetricField),
    Sequence(MollifiedSequence),
}

impl Generated {
    /// The metric a flow run starts from (the first of a pair, the finest
    /// mollification of a sequence).
    pub fn primary(&self) -> &MetricField {
        match self {
            Generated::Single(g) | Generated::Pair(g, _) => g,
            Generated::Sequence(s) => s.elements.last().unwrap_or(&s.base),
        }
    }

    /// Every metric, with a short label.
    pub fn members(&self) -> Vec<(String, &MetricField)> {
        match self {
            Generated::Single(g) => vec![("g".into(), g)],
            Generated::Pair(a, b) => vec![("first".into(), a), ("second".into(), b)],
            Generated::Sequence(s) => {
                let mut out = vec![("base".into(), &s.base)];
                for (i, e) in s.elements.iter().enumerate() {
                    out.push((format!("element{i}"), e));
                }
                out
            }
        }
    }
}

/// Measurements recorded next to generated data.
#[derive(Clone, Debug, PartialEq)]
pub struct Provenance {
    pub family: Family,
    pub amplitude: f64,
    pub seed: u64,
    pub eta: f64,
    pub pair_scale: f64,
    pub mollify_scales: Vec<f64>,
    pub min_eigenvalue: f64,
    /// Minimum scalar curvature, for smooth metrics only.
    pub min_scalar: Option<f64>,
    pub kappas: Vec<f64>,
    pub kappa_target: Option<f64>,
}

pub fn generate(grid: &GridSpec, spec: &GeneratorSpec) -> Result<Generated> {
    grid.validate()?;
    spec.validate()?;
    let out = match spec.family {
        Family::MollifiedSequence => Generated::Sequence(mollified(grid, spec)?),
        Family::SecondOrderPair => {
            let (a, b) = second_order_pair(grid, spec)?;
            Generated::Pair(a, b)
        }
        family => Generated::Single(single(grid, family, spec)?),
    };
    Ok(out)
}

/// Provenance of generated data; computes curvature of the smooth members.
pub fn provenance(spec: &GeneratorSpec, data: &Generated) -> Result<Provenance> {
    let members = data.members();
    let min_eigenvalue = members
        .iter()
        .map(|(_, g)| g.lambda_min())
        .fold(f64::INFINITY, f64::min);
    let min_scalar = if spec.family.is_smooth() {
        let mut lo = f64::INFINITY;
        for (_, g) in &members {
            let r = geometry::scalar_curvature(g)?;
            lo = r.iter().copied().fold(lo, f64::min);
        }
        Some(lo)
    } else {
        None
    };
    let kappas = match data {
        Generated::Sequence(s) => s.kappas.clone(),
        _ => Vec::new(),
    };
    Ok(Provenance {
        family: spec.family,
        amplitude: spec.amplitude,
        seed: spec.seed,
        eta: spec.eta,
        pair_scale: spec.pair_scale,
        mollify_scales: spec.mollify_scales.clone(),
        min_eigenvalue,
        min_scalar,
        kappas,
        kappa_target: spec.kappa_target,
    })
}

fn checked(g: MetricField) -> Result<MetricField> {
    if g.lambda_min() < MIN_EIGENVALUE {
        return Err(Error::Amplitude(format!(
            "minimum eigenvalue {:.4} below {MIN_EIGENVALUE}",
            g.lambda_min()
        )));
    }
    Ok(g)
}

fn amplitude_error(e: Error) -> Error {
    match e {
        Error::InvalidMetric { point, reason } => {
            Error::Amplitude(format!("not positive definite at point {point}: {reason}"))
        }
        other => other,
    }
}

fn single(grid: &GridSpec, family: Family, spec: &GeneratorSpec) -> Result<MetricField> {
    let a = spec.amplitude;
    let g = match family {
        Family::Flat => Ok(MetricField::flat(*grid)),
        Family::Conformal => conformal(grid, a),
        Family::RandomSmooth => random_smooth(grid, a, spec.seed),
        Family::LipschitzKink => lipschitz_kink(grid, a),
        Family::BilipschitzPullback => bilipschitz_pullback(grid, a),
        Family::SecondOrderPair | Family::MollifiedSequence => {
            unreachable!("handled by generate")
        }
    };
    checked(g.map_err(amplitude_error)?)
}

fn wave(grid: &GridSpec) -> f64 {
    2.0 * PI / grid.period
}

/// `φ = A (sin kx₁ sin kx₂ + ½ cos k(x₁ + x_n))` with `k = 2π/L`.
pub fn conformal_factor(grid: &GridSpec, amplitude: f64, x: &[f64]) -> f64 {
    let k = wave(grid);
    let last = x[grid.dim - 1];
    amplitude * ((k * x[0]).sin() * (k * x[1]).sin() + 0.5 * (k * (x[0] + last)).cos())
}

/// Euclidean Laplacian of [`conformal_factor`].
pub fn conformal_factor_laplacian(grid: &GridSpec, amplitude: f64, x: &[f64]) -> f64 {
    let k = wave(grid);
    let last = x[grid.dim - 1];
    amplitude * k * k * (-2.0 * (k * x[0]).sin() * (k * x[1]).sin() - (k * (x[0] + last)).cos())
}

fn conformal(grid: &GridSpec, amplitude: f64) -> Result<MetricField> {
    let g = *grid;
    MetricField::from_fn(g, |x| {
        let e = (2.0 * conformal_factor(&g, amplitude, x)).exp();
        diag(e)
    })
}

fn diag(v: f64) -> [[f64; 3]; 3] {
    [[v, 0.0, 0.0], [0.0, v, 0.0], [0.0, 0.0, v]]
}

/// `δ + h` with `h` a random trigonometric polynomial of degree
/// [`RANDOM_MODES`] per axis, scaled to `sup ‖h‖ = amplitude`.
fn random_smooth(grid: &GridSpec, amplitude: f64, seed: u64) -> Result<MetricField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.points_per_axis;
    let np = grid.num_points();
    let nc = grid.sym_components();
    let mut h = Vec::with_capacity(nc * np);
    for _ in 0..nc {
        let mut c = vec![Complex::new(0.0, 0.0); np];
        for (p, v) in c.iter_mut().enumerate() {
            let idx = grid.multi_index(p);
            let k: Vec<i64> = (0..grid.dim).map(|a| wavenumber(idx[a], n)).collect();
            if k.iter().all(|x| *x == 0) || k.iter().any(|x| x.abs() > RANDOM_MODES) {
                continue;
            }
            let k2: i64 = k.iter().map(|x| x * x).sum();
            let w = 1.0 / (1.0 + k2 as f64);
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *v = Complex::new(w * re, w * im);
        }
        fft_nd(grid, &mut c, true);
        h.extend(c.iter().map(|v| v.re));
    }
    let size = (0..np)
        .map(|p| {
            let mut m = [[0.0; 3]; 3];
            for i in 0..grid.dim {
                for j in 0..=i {
                    m[i][j] = h[sym_index(i, j) * np + p];
                    m[j][i] = m[i][j];
                }
            }
            spectral_radius(grid.dim, &m)
        })
        .fold(0.0, f64::max);
    let s = if size > 0.0 { amplitude / size } else { 0.0 };
    let flat = MetricField::flat(*grid);
    let data = flat
        .data()
        .iter()
        .zip(&h)
        .map(|(d, v)| d + s * v)
        .collect();
    MetricField::new(*grid, data)
}

fn spectral_radius(dim: usize, m: &[[f64; 3]; 3]) -> f64 {
    let e: Vec<f64> = match dim {
        2 => linalg::sym_eigenvalues::<2>(&[[m[0][0], m[0][1]], [m[1][0], m[1][1]]]).to_vec(),
        _ => linalg::sym_eigenvalues::<3>(m).to_vec(),
    };
    e.iter().fold(0.0_f64, |r, v| r.max(v.abs()))
}

/// `(1 + a |sin kx₁|) δ`: Lipschitz, with kinks on the grid-aligned set
/// `x₁ ∈ {0, L/2}`.
fn lipschitz_kink(grid: &GridSpec, amplitude: f64) -> Result<MetricField> {
    let k = wave(grid);
    MetricField::from_fn(*grid, |x| diag(1.0 + amplitude * (k * x[0]).sin().abs()))
}

/// Periodic tent map `ψ` with slope `±1`, kinks at `0` and `L/2`.
pub fn tent(period: f64, s: f64) -> f64 {
    let s = s.rem_euclid(period);
    if s < 0.5 * period {
        s - 0.25 * period
    } else {
        0.75 * period - s
    }
}

/// `ψ'`, averaged (zero) exactly on the kinks.
fn tent_slope(period: f64, s: f64) -> f64 {
    let v = (2.0 * PI * s / period).sin();
    if v.abs() < 1e-12 {
        0.0
    } else {
        v.signum()
    }
}

/// The bi-Lipschitz homeomorphism `Φ^k(x) = x_k + a ψ(x_{k+1})` (indices
/// mod n) whose pullback of the flat metric is the bilipschitz-pullback
/// family.
pub fn tent_map(grid: &GridSpec, amplitude: f64, x: &[f64]) -> [f64; 3] {
    let n = grid.dim;
    let mut y = [0.0; 3];
    for k in 0..n {
        y[k] = x[k] + amplitude * tent(grid.period, x[(k + 1) % n]);
    }
    y
}

/// `g = DΦᵀ DΦ` for [`tent_map`].
fn bilipschitz_pullback(grid: &GridSpec, amplitude: f64) -> Result<MetricField> {
    let n = grid.dim;
    let l = grid.period;
    MetricField::from_fn(*grid, |x| {
        let mut j = [[0.0; 3]; 3];
        for k in 0..n {
            j[k][k] = 1.0;
            j[k][(k + 1) % n] += amplitude * tent_slope(l, x[(k + 1) % n]);
        }
        let mut g = [[0.0; 3]; 3];
        for a in 0..n {
            for b in 0..n {
                g[a][b] = (0..n).map(|k| j[k][a] * j[k][b]).sum();
            }
        }
        g
    })
}

/// Centre of the grid, the point where the second-order pair agrees.
pub fn pair_center(grid: &GridSpec) -> [f64; 3] {
    let c = grid.points_per_axis / 2;
    grid.coords(grid.flat_index(&[c, c, c][..grid.dim]))
}

/// Smooth cutoff: 1 on `[0, r/2]`, 0 beyond `r`.
fn cutoff(d: f64, r: f64) -> f64 {
    let s = (2.0 * d / r - 1.0).clamp(0.0, 1.0);
    let f = |u: f64| if u > 0.0 { (-1.0 / u).exp() } else { 0.0 };
    f(1.0 - s) / (f(1.0 - s) + f(s))
}

/// The bump `c ρ(d) d^{2+η}` of the second-order pair at distance `d`.
pub fn pair_bump(grid: &GridSpec, spec: &GeneratorSpec, d: f64) -> f64 {
    spec.pair_scale * cutoff(d, grid.period / 8.0) * d.powf(2.0 + spec.eta)
}

/// `g' = e^{2φ}δ` (conformal with the given amplitude) and
/// `g'' = g' + c ρ(d) d^{2+η} S`, `S = (1)_{ij}/n` positive semidefinite with
/// unit Frobenius norm, `d` the flat distance to [`pair_center`].
fn second_order_pair(grid: &GridSpec, spec: &GeneratorSpec) -> Result<(MetricField, MetricField)> {
    let first = checked(conformal(grid, spec.amplitude).map_err(amplitude_error)?)?;
    let x0 = pair_center(grid);
    let n = grid.dim;
    let np = grid.num_points();
    let mut data = first.data().to_vec();
    for p in 0..np {
        let x = grid.coords(p);
        let d = grid.torus_distance(&x[..n], &x0[..n]);
        let b = pair_bump(grid, spec, d) / n as f64;
        for i in 0..n {
            for j in 0..=i {
                data[sym_index(i, j) * np + p] += b;
            }
        }
    }
    let second = checked(MetricField::new(*grid, data).map_err(amplitude_error)?)?;
    Ok((first, second))
}

fn mollified(grid: &GridSpec, spec: &GeneratorSpec) -> Result<MollifiedSequence> {
    let base = single(grid, spec.base, spec)?;
    let np = grid.num_points();
    let mut elements = Vec::new();
    let mut kappas = Vec::new();
    for &sigma in &spec.mollify_scales {
        let data: Vec<f64> = base
            .data()
            .chunks(np)
            .flat_map(|c| gaussian_smooth(grid, c, sigma))
            .collect();
        let g = checked(MetricField::new(*grid, data).map_err(amplitude_error)?)?;
        let r = geometry::scalar_curvature(&g)?;
        kappas.push(r.iter().copied().fold(f64::INFINITY, f64::min));
        elements.push(g);
    }
    Ok(MollifiedSequence {
        base,
        scales: spec.mollify_scales.clone(),
        elements,
        kappas,
    })
}

#[cfg(test)]
mod tests;
