use serde::{Deserialize, Serialize};

use super::{prob_hit_approx, prob_magic_bullet, Overlap};
use crate::error::{Error, Result};

/// Bracket searched by [`optimize_overlap`].
pub const SEARCH_BRACKET: (f64, f64) = (0.0, 0.5);
/// Absolute tolerance on the optimal overlap.
pub const SEARCH_TOLERANCE: f64 = 1e-6;
/// Number of points in the unimodality guard sweep.
pub const GUARD_POINTS: usize = 101;

/// Which hit-probability formula is maximized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    /// Exact probability including the quartic correction.
    #[default]
    Full,
    /// Linear-plus-quadratic approximation.
    Approx,
}

impl Objective {
    /// Hit probability for this formula.
    pub fn hit(self, g: Overlap) -> f64 {
        match self {
            Objective::Full => super::prob_hit_full(g),
            Objective::Approx => prob_hit_approx(g),
        }
    }

    /// Paired bound `2 P - 1` for this formula.
    pub fn magic_bullet(self, g: Overlap) -> f64 {
        match self {
            Objective::Full => prob_magic_bullet(g),
            Objective::Approx => 2.0 * prob_hit_approx(g) - 1.0,
        }
    }
}

/// Location and value of the maximal magic-bullet fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub g_star: Overlap,
    pub p_hit: f64,
    pub p_mb: f64,
}

/// Counts strict interior local maxima of `f` sampled at `points` evenly
/// spaced abscissae on `[lo, hi]`. A maximum at either end counts as well.
pub fn guard_sweep(f: impl Fn(f64) -> f64, lo: f64, hi: f64, points: usize) -> usize {
    let vals: Vec<f64> = (0..points).map(|i| f(lo + (hi - lo) * i as f64 / (points - 1) as f64)).collect();
    let n = vals.len();
    (0..n)
        .filter(|&i| {
            let left = i == 0 || vals[i] > vals[i - 1];
            let right = i == n - 1 || vals[i] >= vals[i + 1];
            left && right
        })
        .count()
}

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
pub fn golden_section_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Maximizes the paired bound of `objective` over [`SEARCH_BRACKET`].
pub fn optimize_with(objective: Objective) -> Result<Optimum> {
    let (lo, hi) = SEARCH_BRACKET;
    let f = |g: f64| objective.magic_bullet(Overlap(g));
    let maxima = guard_sweep(f, lo, hi, GUARD_POINTS);
    if maxima != 1 {
        return Err(Error::NotUnimodal { maxima });
    }
    let g_star = Overlap::new(golden_section_max(f, lo, hi, SEARCH_TOLERANCE))?;
    Ok(Optimum { g_star, p_hit: objective.hit(g_star), p_mb: objective.magic_bullet(g_star) })
}

/// Overlap that maximizes the exact magic-bullet fraction.
pub fn optimize_overlap() -> Result<Optimum> {
    optimize_with(Objective::Full)
}
