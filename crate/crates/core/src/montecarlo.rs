//! Detection sampling: photon positions drawn from `|psi(x)|^2` at one
//! plane, counted against the slit interval.
//!
//! Each target plane is sampled in its own run with its own seed. The
//! magic-bullet number is a bound built from the two marginals; no sample
//! is ever assigned to both targets.

use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::Plane;
use crate::error::{Error, Result};
use crate::grid::SampledField;
use crate::state::{assemble_field, plane_grid, StateCoefficients};

/// Shots drawn from one generator stream.
pub const BLOCK_SIZE: usize = 8192;

/// Identifies the generator and how it is split into streams.
pub const GENERATOR_ID: &str =
    "rand_chacha::ChaCha8Rng seed_from_u64(seed), stream = block index, 8192 shots per block";

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Inverse-CDF sampler for the piecewise-linear density of a sampled field.
#[derive(Debug, Clone)]
pub struct PositionSampler {
    x_min: f64,
    dx: f64,
    density: Vec<f64>,
    /// Cumulative mass at each node, `cdf[0] = 0`.
    cdf: Vec<f64>,
}

impl PositionSampler {
    pub fn new(f: &SampledField) -> Result<Self> {
        let grid = f.grid();
        let dx = grid.dx();
        let density: Vec<f64> = f.densities().collect();
        let mut cdf = Vec::with_capacity(density.len());
        let mut acc = 0.0;
        cdf.push(0.0);
        for w in density.windows(2) {
            acc += 0.5 * (w[0] + w[1]) * dx;
            cdf.push(acc);
        }
        if !(acc > 0.0) {
            return Err(Error::ZeroNorm);
        }
        Ok(Self { x_min: grid.x_min, dx, density, cdf })
    }

    /// Total mass of the density on the window.
    pub fn total(&self) -> f64 {
        *self.cdf.last().unwrap()
    }

    /// Position whose CDF equals `u * total`, for `u` in `[0, 1)`.
    pub fn position(&self, u: f64) -> f64 {
        let target = u * self.total();
        // First node with cdf > target; the cell is [i, i + 1].
        let i = self.cdf.partition_point(|&c| c <= target).clamp(1, self.cdf.len() - 1) - 1;
        let rest = target - self.cdf[i];
        let (d0, d1) = (self.density[i], self.density[i + 1]);
        // Solve d0 t + (d1 - d0) t^2 / (2 dx) = rest for t in [0, dx].
        let slope = (d1 - d0) / self.dx;
        let t = if rest <= 0.0 {
            0.0
        } else if slope.abs() * self.dx <= 1e-12 * (d0 + d1) {
            if d0 > 0.0 {
                rest / d0
            } else {
                0.5 * self.dx
            }
        } else {
            let disc = (d0 * d0 + 2.0 * slope * rest).max(0.0);
            2.0 * rest / (d0 + disc.sqrt())
        };
        self.x_min + i as f64 * self.dx + t.clamp(0.0, self.dx)
    }
}

fn block_rng(seed: u64, block: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block as u64);
    rng
}

fn blocks(n: usize) -> impl IndexedParallelIterator<Item = (usize, usize)> {
    let count = n.div_ceil(BLOCK_SIZE);
    (0..count).into_par_iter().map(move |b| (b, BLOCK_SIZE.min(n - b * BLOCK_SIZE)))
}

/// `n` i.i.d. positions from `|f|^2` normalized on its window.
///
/// Deterministic for a fixed `(field, n, seed)` and independent of the
/// number of worker threads.
pub fn sample_positions(f: &SampledField, n: usize, seed: u64) -> Result<Vec<f64>> {
    let sampler = PositionSampler::new(f)?;
    let chunks: Vec<Vec<f64>> = blocks(n)
        .map(|(b, len)| {
            let mut rng = block_rng(seed, b);
            (0..len).map(|_| sampler.position(rng.random::<f64>())).collect()
        })
        .collect();
    Ok(chunks.concat())
}

/// Counts shots landing in `[a, b]`.
///
/// The field's norm is taken to be `max(1, window mass)`: with probability
/// `1 - window mass` (when positive) a shot is outside the window and
/// therefore misses.
pub fn count_hits(f: &SampledField, interval: (f64, f64), n: usize, seed: u64) -> Result<(usize, usize)> {
    let sampler = PositionSampler::new(f)?;
    let escape = (1.0 - sampler.total()).max(0.0);
    let (a, b) = interval;
    let (hits, escaped) = blocks(n)
        .map(|(blk, len)| {
            let mut rng = block_rng(seed, blk);
            let mut hits = 0usize;
            let mut escaped = 0usize;
            for _ in 0..len {
                let u: f64 = rng.random();
                if u < escape {
                    escaped += 1;
                    continue;
                }
                let x = sampler.position((u - escape) / (1.0 - escape));
                if x >= a && x <= b {
                    hits += 1;
                }
            }
            (hits, escaped)
        })
        .reduce(|| (0, 0), |p, q| (p.0 + q.0, p.1 + q.1));
    Ok((hits, escaped))
}

/// Normal-approximation 95% interval, with the standard error evaluated at
/// `p` pulled into `[1/(2n), 1 - 1/(2n)]` so that all-miss and all-hit runs
/// still get a non-zero width.
pub fn wald_interval(hits: usize, n: usize) -> (f64, f64) {
    let p = hits as f64 / n as f64;
    let guard = 0.5 / n as f64;
    let pg = p.clamp(guard, 1.0 - guard);
    let half = Z_95 * (pg * (1.0 - pg) / n as f64).sqrt();
    ((p - half).max(0.0), (p + half).min(1.0))
}

fn standard_error(hits: usize, n: usize) -> f64 {
    let p = (hits as f64 / n as f64).clamp(0.5 / n as f64, 1.0 - 0.5 / n as f64);
    (p * (1.0 - p) / n as f64).sqrt()
}

/// One counting run at one plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRun {
    pub seed: u64,
    pub n_shots: usize,
    pub plane: Plane,
    pub interval: (f64, f64),
    pub hits: usize,
    /// Shots assigned to the norm outside the sampling window.
    pub escaped: usize,
    pub estimate: f64,
    pub ci_95: (f64, f64),
}

impl SampleRun {
    pub fn standard_error(&self) -> f64 {
        standard_error(self.hits, self.n_shots)
    }
}

/// Target slit at a plane: `[-L/2, L/2]` at `A`, `[-L, L]` at `B`.
pub fn target_interval(plane: Plane, l: f64) -> Result<(f64, f64)> {
    match plane {
        Plane::Source => Err(Error::Domain("the source plane has no target".into())),
        p => {
            let h = p.aperture_half_width() * l;
            Ok((-h, h))
        }
    }
}

/// Counting run on an already assembled field.
pub fn estimate_hit_on(field: &SampledField, l: f64, n: usize, seed: u64) -> Result<SampleRun> {
    if n == 0 {
        return Err(Error::Domain("at least one shot is required".into()));
    }
    let plane = field.plane();
    let interval = target_interval(plane, l)?;
    let (hits, escaped) = count_hits(field, interval, n, seed)?;
    Ok(SampleRun {
        seed,
        n_shots: n,
        plane,
        interval,
        hits,
        escaped,
        estimate: hits as f64 / n as f64,
        ci_95: wald_interval(hits, n),
    })
}

/// Assembles the state at `plane` on its default window and counts hits.
pub fn estimate_hit(s: &StateCoefficients, plane: Plane, n: usize, seed: u64) -> Result<SampleRun> {
    let field = assemble_field(s, plane, plane_grid(s, plane)?)?;
    estimate_hit_on(&field, s.l, n, seed)
}

/// Seed for one target plane, derived from the run seed with SplitMix64 so
/// the two planes never share a stream.
pub fn plane_seed(seed: u64, plane: Plane) -> u64 {
    let tag = match plane {
        Plane::Source => 0x5u64,
        Plane::PlaneA => 0xA,
        Plane::PlaneB => 0xB,
    };
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent runs at both targets and the resulting bound `p_A + p_B - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedRun {
    pub plane_a: SampleRun,
    pub plane_b: SampleRun,
    pub bound: f64,
    pub ci_95: (f64, f64),
}

impl PairedRun {
    pub fn from_runs(plane_a: SampleRun, plane_b: SampleRun) -> Self {
        let bound = plane_a.estimate + plane_b.estimate - 1.0;
        let se = plane_a.standard_error().hypot(plane_b.standard_error());
        let half = Z_95 * se;
        Self { plane_a, plane_b, bound, ci_95: (bound - half, bound + half) }
    }

    pub fn covers(&self, value: f64) -> bool {
        self.ci_95.0 <= value && value <= self.ci_95.1
    }
}

/// Paired estimate on pre-assembled target fields.
pub fn paired_estimate_on(
    field_a: &SampledField,
    field_b: &SampledField,
    l: f64,
    n: usize,
    seed: u64,
) -> Result<PairedRun> {
    let a = estimate_hit_on(field_a, l, n, plane_seed(seed, Plane::PlaneA))?;
    let b = estimate_hit_on(field_b, l, n, plane_seed(seed, Plane::PlaneB))?;
    Ok(PairedRun::from_runs(a, b))
}

pub fn paired_estimate(s: &StateCoefficients, n: usize, seed: u64) -> Result<PairedRun> {
    let fa = assemble_field(s, Plane::PlaneA, plane_grid(s, Plane::PlaneA)?)?;
    let fb = assemble_field(s, Plane::PlaneB, plane_grid(s, Plane::PlaneB)?)?;
    paired_estimate_on(&fa, &fb, s.l, n, seed)
}

/// Constant field on `[a, b]`, for tests and fixtures.
pub fn uniform_field(a: f64, b: f64, n: usize, plane: Plane) -> Result<SampledField> {
    let grid = crate::grid::GridSpec::new(a, b, n)?;
    let amp = (b - a).sqrt().recip();
    SampledField::from_fn(grid, plane, |_| Complex64::new(amp, 0.0))
}
