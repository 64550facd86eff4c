//! Scalar 1-D wave optics for the two-target "magic bullet" photon state.
//!
//! A single photon is prepared as a superposition of a beam focused on a
//! slit `A` (width `L`, distance `R`), a beam focused on a slit `B`
//! (width `2L`, distance `2R`), and a flat mode `S` on the source interval
//! `|x| <= 2L` that is subtracted so that no line-of-sight through both
//! slits survives. Every statistic depends on a single dimensionless
//! overlap `g = <A|B>`.
//!
//! Modules:
//! - [`analytic`]: closed-form wavefunctions, probabilities and the optimizer.
//! - [`grid`]: sampled fields, trapezoidal quadrature and the hard screen.
//! - [`propagate`]: numerical Fresnel propagation used to validate the closed forms.
//! - [`state`]: the superposition itself and its target probabilities.
//! - [`montecarlo`]: seeded detection sampling with confidence intervals.
//! - [`validate`]: the oracle suite comparing all of the above.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod error;
pub mod grid;
pub mod montecarlo;
pub mod propagate;
pub mod state;
pub mod validate;

pub use analytic::{
    magic_bullet_root, optimize_overlap, optimize_with, overlap_as_approx, overlap_bs_approx, overlap_from_physical,
    physical_from_overlap, prob_hit_approx, prob_hit_full, prob_magic_bullet, sigma_of_g, sweep, Component, Optimum,
    Overlap, PhysicalConfig, Plane, SweepRow, WaveProfile,
};
pub use error::{Error, Result};
pub use grid::{GridSpec, SampledField};
pub use state::{StateCoefficients, TargetProbabilities, Variant};

pub use num_complex::Complex64;
