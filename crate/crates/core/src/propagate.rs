//! Numerical Fresnel propagation of sampled fields.
//!
//! The forward kernel is
//!
//! ```text
//! K(xi; z) = (lambda z)^{-1/2} e^{-i pi/4} exp(+i pi xi^2 / (lambda z))
//! ```
//!
//! and backward propagation uses its complex conjugate, the exact inverse
//! of the continuous operator. Both methods evaluate the same trapezoidal
//! sum `psi_out(x_j) = sum_i w_i K(x_j - x_i) psi_in(x_i)`; the FFT route
//! computes it as a zero-padded linear convolution.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::analytic::{lambda_z, Overlap, Plane};
use crate::error::{Error, Result};
use crate::grid::{inner_product, GridSpec, SampledField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    DirectQuadrature,
    FftConvolution,
}

/// A propagation step of length `z`, stored as the product `lambda z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationSpec {
    pub lambda_z: f64,
    pub direction: Direction,
    pub method: Method,
}

impl PropagationSpec {
    pub fn new(lambda_z: f64, direction: Direction, method: Method) -> Result<Self> {
        if !(lambda_z.is_finite() && lambda_z > 0.0) {
            return Err(Error::Domain(format!("propagation distance must be positive, got lambda*z = {lambda_z}")));
        }
        Ok(Self { lambda_z, direction, method })
    }

    /// Propagation over `separations` multiples of the source-to-`A` distance `R`.
    pub fn between_planes(g: Overlap, l: f64, separations: f64, direction: Direction, method: Method) -> Result<Self> {
        Self::new(lambda_z(g, l, separations)?, direction, method)
    }

    /// Kernel value at offset `xi`.
    #[inline]
    pub fn kernel(&self, xi: f64) -> Complex64 {
        let sign = match self.direction {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        };
        let amp = self.lambda_z.sqrt().recip();
        Complex64::from_polar(amp, sign * (PI * xi * xi / self.lambda_z - PI / 4.0))
    }

    /// Largest input spacing for which the kernel chirp stays below Nyquist
    /// over offsets up to `extent`.
    pub fn nyquist_spacing(&self, extent: f64) -> f64 {
        self.lambda_z / (2.0 * extent)
    }
}

/// Largest offset `|x_out - x_in|` between the two grids.
fn max_offset(input: &GridSpec, output: &GridSpec) -> f64 {
    (output.x_max - input.x_min).abs().max((input.x_max - output.x_min).abs())
}

/// Fresnel-propagates `f` onto `out_grid`, tagging the result with `out_plane`.
///
/// The FFT method requires `out_grid` to share the input spacing (any
/// offset is allowed).
pub fn fresnel_propagate(
    f: &SampledField,
    spec: &PropagationSpec,
    out_grid: &GridSpec,
    out_plane: Plane,
) -> Result<SampledField> {
    let in_grid = f.grid();
    let limit = spec.nyquist_spacing(max_offset(in_grid, out_grid));
    if in_grid.dx() > limit {
        return Err(Error::Aliasing { dx: in_grid.dx(), limit });
    }
    let values = match spec.method {
        Method::DirectQuadrature => direct(f, spec, out_grid),
        Method::FftConvolution => fft_convolution(f, spec, out_grid)?,
    };
    SampledField::new(*out_grid, values, out_plane)
}

fn direct(f: &SampledField, spec: &PropagationSpec, out_grid: &GridSpec) -> Vec<Complex64> {
    let in_grid = *f.grid();
    let weighted: Vec<(f64, Complex64)> =
        f.values().iter().enumerate().map(|(i, v)| (in_grid.x(i), v * in_grid.weight(i))).collect();
    // Each output sample is an independent sequential sum, so the result does
    // not depend on how rayon splits the outer loop.
    (0..out_grid.n)
        .into_par_iter()
        .map(|j| {
            let xo = out_grid.x(j);
            weighted.iter().map(|&(xi, w)| spec.kernel(xo - xi) * w).sum()
        })
        .collect()
}

fn fft_convolution(f: &SampledField, spec: &PropagationSpec, out_grid: &GridSpec) -> Result<Vec<Complex64>> {
    let in_grid = *f.grid();
    let dx = in_grid.dx();
    if ((out_grid.dx() - dx) / dx).abs() > 1e-9 {
        return Err(Error::Mismatch(format!(
            "FFT convolution needs equal spacings, got {} (in) and {} (out)",
            dx,
            out_grid.dx()
        )));
    }
    let n_in = in_grid.n;
    let n_out = out_grid.n;
    // out[j] = sum_i a[i] h[j - i + n_in - 1], h[t] = K(offset + (t - (n_in - 1)) dx).
    let offset = out_grid.x_min - in_grid.x_min;
    let n_kernel = n_in + n_out - 1;
    let size = (2 * n_kernel).next_power_of_two();

    let mut a = vec![Complex64::new(0.0, 0.0); size];
    for (i, v) in f.values().iter().enumerate() {
        a[i] = v * in_grid.weight(i);
    }
    let mut h = vec![Complex64::new(0.0, 0.0); size];
    for (t, slot) in h.iter_mut().take(n_kernel).enumerate() {
        let xi = offset + (t as f64 - (n_in - 1) as f64) * dx;
        *slot = spec.kernel(xi);
    }

    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    fwd.process(&mut a);
    fwd.process(&mut h);
    for (x, y) in a.iter_mut().zip(&h) {
        *x *= y;
    }
    inv.process(&mut a);
    let scale = 1.0 / size as f64;
    Ok((0..n_out).map(|j| a[j + n_in - 1] * scale).collect())
}

/// Unit phase `phi` maximizing `Re(phi <reference|computed>)`.
///
/// Multiplying `computed` by `phi` minimizes its L2 distance to `reference`
/// over global phases.
pub fn calibrate_phase(reference: &SampledField, computed: &SampledField) -> Result<Complex64> {
    let ip = inner_product(reference, computed)?;
    unit_phase(ip)
}

pub(crate) fn unit_phase(ip: Complex64) -> Result<Complex64> {
    let n = ip.norm();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::Degenerate("reference and computed fields are orthogonal".into()));
    }
    Ok(ip.conj() / n)
}

/// `||phi computed - reference|| / ||reference||` restricted to `[a, b]`.
pub fn relative_l2_error(
    reference: &SampledField,
    computed: &SampledField,
    phi: Complex64,
    a: f64,
    b: f64,
) -> Result<f64> {
    let r = restrict(reference, a, b)?;
    let c = restrict(computed, a, b)?;
    let diff = c.scaled(phi).add_scaled(&r, Complex64::new(-1.0, 0.0))?;
    Ok((diff.norm_sqr() / r.norm_sqr()).sqrt())
}

/// Sub-field on the grid nodes inside `[a, b]`.
pub fn restrict(f: &SampledField, a: f64, b: f64) -> Result<SampledField> {
    let g = f.grid();
    let slack = 1e-9 * g.dx();
    let idx: Vec<usize> = (0..g.n).filter(|&i| g.x(i) >= a - slack && g.x(i) <= b + slack).collect();
    if idx.len() < 2 {
        return Err(Error::IntervalOutsideWindow { a, b, x_min: g.x_min, x_max: g.x_max });
    }
    let (lo, hi) = (idx[0], idx[idx.len() - 1]);
    let sub = GridSpec::new(g.x(lo), g.x(hi), hi - lo + 1)?;
    SampledField::new(sub, f.values()[lo..=hi].to_vec(), f.plane())
}
