//! Closed-form expressions: geometry to overlap, the nine component
//! wavefunctions, rectangle-amplitude overlaps, the subtraction
//! coefficient, hit probabilities and their optimum.
//!
//! Lengths are measured in units of the slit scale `L` wherever a length
//! does not appear explicitly; the statistics depend on `g` alone.

mod optimize;
mod profile;

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use optimize::{
    golden_section_max, guard_sweep, optimize_overlap, optimize_with, Objective, Optimum, GUARD_POINTS, SEARCH_BRACKET,
    SEARCH_TOLERANCE,
};
pub use profile::{Component, Plane, WaveProfile};

/// `2 + sqrt(2)`, the coefficient of the quadratic loss term in `P_MB`.
pub const TWO_PLUS_SQRT2: f64 = 2.0 + SQRT_2;

/// Upper end (exclusive) of the admissible overlap range.
pub const G_MAX: f64 = FRAC_1_SQRT_2;

/// Physical geometry: slit scale, plane separation and axial wavenumber.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConfig {
    /// Width of target `A` (target `B` is `2L` wide, the blocked source interval `4L`).
    pub l: f64,
    /// Distance from the source screen to target `A` (`B` sits at `2R`).
    pub r: f64,
    /// Axial wavenumber `p_z / hbar`.
    pub k_z: f64,
}

impl PhysicalConfig {
    pub fn new(l: f64, r: f64, k_z: f64) -> Result<Self> {
        for (name, v) in [("L", l), ("R", r), ("k_z", k_z)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Domain(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(Self { l, r, k_z })
    }

    pub fn wavelength(&self) -> f64 {
        2.0 * PI / self.k_z
    }
}

/// The dimensionless overlap `g = <A|B>` between the two target-focused beams.
///
/// Always in `[0, 1/sqrt(2))`, where the normalization of the
/// superposition stays positive.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct Overlap(f64);

impl Overlap {
    pub fn new(g: f64) -> Result<Self> {
        if !g.is_finite() || g < 0.0 {
            return Err(Error::Domain(format!("overlap must be finite and non-negative, got {g}")));
        }
        if g >= G_MAX {
            return Err(Error::Domain(format!("overlap {g} is not below 1/sqrt(2); the state cannot be normalized")));
        }
        Ok(Self(g))
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl fmt::Display for Overlap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl<'de> Deserialize<'de> for Overlap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let g = f64::deserialize(d)?;
        Overlap::new(g).map_err(serde::de::Error::custom)
    }
}

impl TryFrom<f64> for Overlap {
    type Error = Error;
    fn try_from(g: f64) -> Result<Self> {
        Overlap::new(g)
    }
}

/// `g = sqrt(k_z L^2 / (pi R))`.
pub fn overlap_from_physical(cfg: &PhysicalConfig) -> Result<Overlap> {
    Overlap::new((cfg.k_z * cfg.l * cfg.l / (PI * cfg.r)).sqrt())
}

/// Inverse of [`overlap_from_physical`]: the separation `R` that yields `g`.
///
/// `g` is not range-checked against `1/sqrt(2)` so that fixtures outside
/// the physical domain can still be constructed.
pub fn physical_from_overlap(g: f64, l: f64, k_z: f64) -> Result<PhysicalConfig> {
    if !(g.is_finite() && g > 0.0) {
        return Err(Error::Domain(format!("separation is undefined for overlap {g}")));
    }
    PhysicalConfig::new(l, k_z * l * l / (PI * g * g), k_z)
}

/// `lambda * z` for a propagation over `separations` multiples of `R`.
///
/// From `g^2 = k_z L^2 / (pi R)` and `lambda = 2 pi / k_z`: `lambda R = 2 L^2 / g^2`.
pub fn lambda_z(g: Overlap, l: f64, separations: f64) -> Result<f64> {
    let g = g.get();
    if g == 0.0 {
        return Err(Error::Domain("plane separation is infinite at zero overlap".into()));
    }
    Ok(separations * 2.0 * l * l / (g * g))
}

/// Normalization denominator `u(g) = 1 + g - (2 + sqrt 2) g^2`.
///
/// Takes a raw value so the boundary `u(1/sqrt 2) = 0` can be probed.
#[inline]
pub fn u_denominator(g: f64) -> f64 {
    1.0 + g - TWO_PLUS_SQRT2 * g * g
}

/// Rectangle-amplitude estimate of `<A|S>`: `sqrt(2) g e^{-i pi/8}`.
pub fn overlap_as_approx(g: Overlap) -> Complex64 {
    Complex64::from_polar(SQRT_2 * g.get(), -PI / 8.0)
}

/// Rectangle-amplitude estimate of `<B|S>`: `sqrt(2) g e^{+i pi/8}`.
pub fn overlap_bs_approx(g: Overlap) -> Complex64 {
    Complex64::from_polar(SQRT_2 * g.get(), PI / 8.0)
}

/// Subtraction coefficient `sigma = 2 sqrt(2) g cos(pi/8)` that removes the
/// flat line-of-sight mode.
pub fn sigma_of_g(g: Overlap) -> f64 {
    2.0 * SQRT_2 * g.get() * (PI / 8.0).cos()
}

/// Probability of hitting either target, including the quartic correction.
///
/// Evaluated as `u/2 + g^4/u`, which equals
/// `1/2 + g/2 - (1 + 1/sqrt 2) g^2 + g^4/u`.
pub fn prob_hit_full(g: Overlap) -> f64 {
    let g = g.get();
    let u = u_denominator(g);
    0.5 * u + g.powi(4) / u
}

/// Linear-plus-quadratic approximation `1/2 + g/2 - (1 + 1/sqrt 2) g^2`.
pub fn prob_hit_approx(g: Overlap) -> f64 {
    let g = g.get();
    0.5 + 0.5 * g - (1.0 + FRAC_1_SQRT_2) * g * g
}

/// Minimal fraction of photons that must hit both targets, `P(A) + P(B) - 1`.
pub fn prob_magic_bullet(g: Overlap) -> f64 {
    2.0 * prob_hit_full(g) - 1.0
}

/// One row of a probability sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub g: f64,
    pub p_full: f64,
    pub p_approx: f64,
    pub p_mb: f64,
}

/// Probabilities at `steps` evenly spaced overlaps on `[g_min, g_max]`.
pub fn sweep(g_min: f64, g_max: f64, steps: usize) -> Result<Vec<SweepRow>> {
    if steps < 2 {
        return Err(Error::Domain(format!("a sweep needs at least 2 steps, got {steps}")));
    }
    if !(g_min < g_max) {
        return Err(Error::Domain(format!("need g_min < g_max, got [{g_min}, {g_max}]")));
    }
    let lo = Overlap::new(g_min)?;
    Overlap::new(g_max)?;
    (0..steps)
        .map(|i| {
            let g = if i == 0 { lo } else { Overlap::new(g_min + (g_max - g_min) * i as f64 / (steps - 1) as f64)? };
            Ok(SweepRow {
                g: g.get(),
                p_full: prob_hit_full(g),
                p_approx: prob_hit_approx(g),
                p_mb: prob_magic_bullet(g),
            })
        })
        .collect()
}

/// Positive root of `P_MB(g)`, where the certificate disappears.
pub fn magic_bullet_root() -> f64 {
    let f = |g: f64| 2.0 * (0.5 * u_denominator(g) + g.powi(4) / u_denominator(g)) - 1.0;
    // Single sign change on this bracket.
    let (mut lo, mut hi) = (0.2, 0.4);
    debug_assert!(f(lo) > 0.0 && f(hi) < 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
