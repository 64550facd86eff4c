//! Complex fields sampled on uniform 1-D grids.
//!
//! All integrals use the trapezoidal rule.

use std::io::{self, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analytic::{Plane, WaveProfile};
use crate::error::{Error, Result};

/// Uniform grid `x_i = x_min + i (x_max - x_min) / (n - 1)`, `i = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) || x_min >= x_max {
            return Err(Error::InvalidGrid(format!("need x_min < x_max, got [{x_min}, {x_max}]")));
        }
        if n < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 samples, got {n}")));
        }
        Ok(Self { x_min, x_max, n })
    }

    /// Symmetric grid on `[-half, half]` whose spacing does not exceed `max_dx`.
    pub fn symmetric(half: f64, max_dx: f64) -> Result<Self> {
        if !(max_dx > 0.0) {
            return Err(Error::InvalidGrid(format!("spacing must be positive, got {max_dx}")));
        }
        let cells = (2.0 * half / max_dx).ceil().max(1.0) as usize;
        Self::new(-half, half, cells + 1)
    }

    /// Grid on `[-half, half]` with exactly the spacing `dx` (`half` rounded
    /// outward to a whole number of cells).
    pub fn with_spacing(half: f64, dx: f64) -> Result<Self> {
        if !(dx > 0.0) {
            return Err(Error::InvalidGrid(format!("spacing must be positive, got {dx}")));
        }
        let cells = (half / dx).ceil().max(1.0) as usize;
        let half = cells as f64 * dx;
        Self::new(-half, half, 2 * cells + 1)
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n - 1) as f64
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x_min + (self.x_max - self.x_min) * (i as f64 / (self.n - 1) as f64)
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.x(i))
    }

    /// Trapezoidal weight of sample `i`.
    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        if i == 0 || i == self.n - 1 {
            0.5 * self.dx()
        } else {
            self.dx()
        }
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }
}

/// Complex amplitudes on a grid, tagged with the plane they belong to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledField {
    grid: GridSpec,
    values: Vec<Complex64>,
    plane: Plane,
}

impl SampledField {
    pub fn new(grid: GridSpec, values: Vec<Complex64>, plane: Plane) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::Mismatch(format!("{} values for a grid of {} points", values.len(), grid.n)));
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::Domain("field contains non-finite samples".into()));
        }
        Ok(Self { grid, values, plane })
    }

    /// Evaluates `f` at every grid point.
    pub fn from_fn(grid: GridSpec, plane: Plane, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let values = grid.points().map(f).collect();
        Self::new(grid, values, plane)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn plane(&self) -> Plane {
        self.plane
    }

    pub fn densities(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        self.values.iter().map(|v| v.norm_sqr())
    }

    /// `int |f|^2 dx` over the whole window.
    pub fn norm_sqr(&self) -> f64 {
        self.densities().enumerate().map(|(i, d)| self.grid.weight(i) * d).sum()
    }

    pub fn scaled(&self, factor: Complex64) -> SampledField {
        SampledField { grid: self.grid, values: self.values.iter().map(|v| v * factor).collect(), plane: self.plane }
    }

    /// Copy rescaled to unit norm on the window.
    pub fn normalized(&self) -> Result<SampledField> {
        let n = self.norm_sqr();
        if !(n > 0.0) {
            return Err(Error::ZeroNorm);
        }
        Ok(self.scaled(Complex64::new(n.sqrt().recip(), 0.0)))
    }

    /// Pointwise `self + factor * other` on a shared grid and plane.
    pub fn add_scaled(&self, other: &SampledField, factor: Complex64) -> Result<SampledField> {
        check_compatible(self, other)?;
        Ok(SampledField {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + factor * b).collect(),
            plane: self.plane,
        })
    }

    /// Writes the `x,re,im,density` profile CSV.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "x,re,im,density")?;
        for (x, v) in self.grid.points().zip(&self.values) {
            writeln!(out, "{},{},{},{}", x, v.re, v.im, v.norm_sqr())?;
        }
        Ok(())
    }
}

fn check_compatible(f: &SampledField, h: &SampledField) -> Result<()> {
    if f.grid != h.grid {
        return Err(Error::Mismatch(format!("grids differ: {:?} vs {:?}", f.grid, h.grid)));
    }
    if f.plane != h.plane {
        return Err(Error::Mismatch(format!("planes differ: {} vs {}", f.plane, h.plane)));
    }
    Ok(())
}

/// Samples a closed-form profile at every grid point.
pub fn sample(profile: &WaveProfile, grid: GridSpec) -> SampledField {
    let values = grid.points().map(|x| profile.eval(x)).collect();
    // eval never produces non-finite values for a valid profile.
    SampledField { grid, values, plane: profile.plane }
}

/// Trapezoidal estimate of `int conj(f) h dx`.
pub fn inner_product(f: &SampledField, h: &SampledField) -> Result<Complex64> {
    check_compatible(f, h)?;
    Ok(f.values.iter().zip(&h.values).enumerate().map(|(i, (a, b))| a.conj() * b * f.grid.weight(i)).sum())
}

/// Trapezoidal estimate of `int_a^b |f|^2 dx`, clamped to `[0, 1]`.
///
/// Interval ends that fall between grid points are handled by linear
/// interpolation of the density.
pub fn probability_in_interval(f: &SampledField, a: f64, b: f64) -> Result<f64> {
    Ok(mass_in_interval(f, a, b)?.clamp(0.0, 1.0))
}

/// Unclamped `int_a^b |f|^2 dx`.
pub fn mass_in_interval(f: &SampledField, a: f64, b: f64) -> Result<f64> {
    let g = f.grid;
    let slack = 1e-12 * g.width();
    if a > b || a < g.x_min - slack || b > g.x_max + slack {
        return Err(Error::IntervalOutsideWindow { a, b, x_min: g.x_min, x_max: g.x_max });
    }
    if a == b {
        return Ok(0.0);
    }
    let a = a.max(g.x_min);
    let b = b.min(g.x_max);
    let dx = g.dx();
    let dens = |i: usize| f.values[i].norm_sqr();
    let density_at = |x: f64| {
        let t = ((x - g.x_min) / dx).clamp(0.0, (g.n - 1) as f64);
        let i = (t.floor() as usize).min(g.n - 2);
        let s = t - i as f64;
        (1.0 - s) * dens(i) + s * dens(i + 1)
    };
    // Grid nodes strictly inside (a, b).
    let first = (((a - g.x_min) / dx).floor() as usize + 1).min(g.n);
    let last = ((b - g.x_min) / dx).ceil() as usize;
    let mut acc = 0.0;
    let mut prev_x = a;
    let mut prev_d = density_at(a);
    for i in first..last.min(g.n) {
        let x = g.x(i);
        if x <= a || x >= b {
            continue;
        }
        let d = dens(i);
        acc += 0.5 * (prev_d + d) * (x - prev_x);
        prev_x = x;
        prev_d = d;
    }
    acc += 0.5 * (prev_d + density_at(b)) * (b - prev_x);
    Ok(acc)
}

/// Zeroes the field on the closed interval `|x| <= half_width`; no renormalization.
///
/// A non-positive width leaves the field untouched.
pub fn apply_screen(f: &SampledField, half_width: f64) -> SampledField {
    if half_width <= 0.0 {
        return f.clone();
    }
    let edge = half_width * (1.0 + 1e-12);
    let values = f
        .grid
        .points()
        .zip(&f.values)
        .map(|(x, v)| if x.abs() <= edge { Complex64::new(0.0, 0.0) } else { *v })
        .collect();
    SampledField { grid: f.grid, values, plane: f.plane }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{overlap_as_approx, Component, Overlap};
    use std::f64::consts::FRAC_PI_8;

    fn prof(c: Component, p: Plane, g: f64) -> WaveProfile {
        WaveProfile::new(c, p, Overlap::new(g).unwrap(), 1.0)
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(1.0, 1.0, 5).is_err());
        assert!(GridSpec::new(0.0, 1.0, 1).is_err());
        let g = GridSpec::new(-2.0, 2.0, 40001).unwrap();
        assert_eq!(g.x(20000), 0.0);
        assert_eq!(g.x(40000), 2.0);
        let s = GridSpec::with_spacing(2000.0, 0.02).unwrap();
        assert_eq!(s.n, 200_001);
        assert!((s.dx() - 0.02).abs() < 1e-15);
    }

    #[test]
    fn sample_flat_mode() {
        let f = sample(&prof(Component::S, Plane::Source, 0.15), GridSpec::new(-3.0, 3.0, 7).unwrap());
        let re: Vec<f64> = f.values().iter().map(|v| v.re).collect();
        assert_eq!(re, vec![0.0, 0.5, 0.5, 0.5, 0.5, 0.5, 0.0]);
        assert!(f.values().iter().all(|v| v.im == 0.0));
    }

    #[test]
    fn sample_target_rectangle() {
        let f = sample(&prof(Component::A, Plane::PlaneA, 0.15), GridSpec::new(-0.4, 0.4, 5).unwrap());
        let expect = Complex64::from_polar(1.0, -FRAC_PI_8);
        assert!(f.values().iter().all(|v| (v - expect).norm() < 1e-15));
    }

    #[test]
    fn sample_two_points() {
        let grid = GridSpec::new(-1.0, 1.0, 2).unwrap();
        let f = sample(&prof(Component::B, Plane::PlaneA, 0.15), grid);
        assert_eq!(f.values().len(), 2);
        assert_eq!(f.grid().x(0), -1.0);
        assert_eq!(f.grid().x(1), 1.0);
    }

    #[test]
    fn flat_mode_norm() {
        let grid = GridSpec::new(-2.0001, 2.0001, 40001).unwrap();
        let f = sample(&prof(Component::S, Plane::Source, 0.15), grid);
        let n = inner_product(&f, &f).unwrap();
        assert!((n.re - 1.0).abs() < 1e-3);
    }

    #[test]
    fn exact_target_overlap() {
        // <A|B> evaluated where A is the slit rectangle.
        let grid = GridSpec::new(-0.5, 0.5, 20001).unwrap();
        let a = sample(&prof(Component::A, Plane::PlaneA, 0.15), grid);
        let b = sample(&prof(Component::B, Plane::PlaneA, 0.15), grid);
        let ab = inner_product(&a, &b).unwrap();
        assert!((ab.re - 0.15).abs() < 2e-3, "{ab}");
        assert!(ab.im.abs() < 1e-3);
    }

    #[test]
    fn exact_line_of_sight_overlap() {
        let g = 0.15;
        let grid = GridSpec::new(-2.0, 2.0, 40001).unwrap();
        let a = sample(&prof(Component::A, Plane::Source, g), grid);
        let s = sample(&prof(Component::S, Plane::Source, g), grid);
        let a_s = inner_product(&a, &s).unwrap();
        let approx = overlap_as_approx(Overlap::new(g).unwrap());
        assert!((a_s.norm() - approx.norm()).abs() < 5e-3, "{a_s}");
    }

    #[test]
    fn overlap_is_plane_invariant() {
        let g = 0.15;
        let at_a = {
            let grid = GridSpec::new(-0.5, 0.5, 20001).unwrap();
            inner_product(
                &sample(&prof(Component::A, Plane::PlaneA, g), grid),
                &sample(&prof(Component::B, Plane::PlaneA, g), grid),
            )
            .unwrap()
        };
        let at_b = {
            let grid = GridSpec::new(-1.0, 1.0, 20001).unwrap();
            inner_product(
                &sample(&prof(Component::A, Plane::PlaneB, g), grid),
                &sample(&prof(Component::B, Plane::PlaneB, g), grid),
            )
            .unwrap()
        };
        assert!((at_a - at_b).norm() < 5e-3, "{at_a} vs {at_b}");
    }

    #[test]
    fn trapezoid_converges_quadratically() {
        // Smooth integrand: <B|S> at plane A over a finite window.
        let g = 0.15;
        let ip = |n: usize| {
            let grid = GridSpec::new(-10.0, 10.0, n).unwrap();
            inner_product(
                &sample(&prof(Component::B, Plane::PlaneA, g), grid),
                &sample(&prof(Component::S, Plane::PlaneA, g), grid),
            )
            .unwrap()
        };
        let (c, m, f) = (ip(101), ip(201), ip(401));
        let ratio = (c - m).norm() / (m - f).norm();
        assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn mismatched_fields_rejected() {
        let ga = GridSpec::new(-1.0, 1.0, 11).unwrap();
        let gb = GridSpec::new(-1.0, 1.0, 13).unwrap();
        let f = sample(&prof(Component::A, Plane::PlaneA, 0.1), ga);
        let h = sample(&prof(Component::B, Plane::PlaneA, 0.1), gb);
        assert!(matches!(inner_product(&f, &h), Err(Error::Mismatch(_))));
        let h = sample(&prof(Component::B, Plane::PlaneB, 0.1), ga);
        assert!(matches!(inner_product(&f, &h), Err(Error::Mismatch(_))));
    }

    #[test]
    fn interval_probability() {
        let grid = GridSpec::new(-3.0, 3.0, 6001).unwrap();
        let s = sample(&prof(Component::S, Plane::Source, 0.15), grid);
        assert!((probability_in_interval(&s, 0.0, 2.0).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(probability_in_interval(&s, 1.3, 1.3).unwrap(), 0.0);
        // Ends between nodes.
        assert!((probability_in_interval(&s, 0.00025, 1.00025).unwrap() - 0.25).abs() < 1e-12);
        assert!(matches!(probability_in_interval(&s, -4.0, 0.0), Err(Error::IntervalOutsideWindow { .. })));
    }

    #[test]
    fn screen_blocks_closed_interval() {
        let grid = GridSpec::new(-3.0, 3.0, 7).unwrap();
        let s = sample(&prof(Component::S, Plane::Source, 0.15), grid);
        let blocked = apply_screen(&s, 2.0);
        assert!(blocked.values().iter().all(|v| v.norm() == 0.0));
        assert_eq!(apply_screen(&s, 0.0), s);
    }

    #[test]
    fn screen_removes_part_of_focused_beam() {
        let g = 0.15;
        let grid = GridSpec::with_spacing(2000.0, 0.05).unwrap();
        let a = sample(&prof(Component::A, Plane::Source, g), grid);
        let before = a.norm_sqr();
        let after = apply_screen(&a, 2.0).norm_sqr();
        let blocked = probability_in_interval(&a, -2.0, 2.0).unwrap();
        // Edge cells are split differently by the two quadratures.
        assert!((before - after - blocked).abs() < 1e-3);
        // Flat amplitude g/sqrt(2) over a width of 4: about 2 g^2.
        assert!((blocked - 2.0 * g * g).abs() < 1e-3, "{blocked}");
        assert_eq!(apply_screen(&a, 0.0).norm_sqr(), before);
    }

    #[test]
    fn csv_layout() {
        let grid = GridSpec::new(-0.4, 0.4, 3).unwrap();
        let f = sample(&prof(Component::A, Plane::PlaneA, 0.15), grid);
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x,re,im,density");
        assert_eq!(lines.len(), 4);
        let cols: Vec<f64> = lines[2].split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cols[0], 0.0);
        assert!((cols[3] - (cols[1] * cols[1] + cols[2] * cols[2])).abs() < 1e-15);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn field(seed: &[(f64, f64)], plane: Plane) -> SampledField {
            let grid = GridSpec::new(-1.0, 1.0, seed.len()).unwrap();
            SampledField::new(grid, seed.iter().map(|&(r, i)| Complex64::new(r, i)).collect(), plane).unwrap()
        }

        proptest! {
            #[test]
            fn hermitian_symmetry(a in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 17),
                                  b in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 17)) {
                let f = field(&a, Plane::Source);
                let h = field(&b, Plane::Source);
                let fh = inner_product(&f, &h).unwrap();
                let hf = inner_product(&h, &f).unwrap();
                prop_assert!((fh - hf.conj()).norm() < 1e-14);
            }

            #[test]
            fn full_window_probability_is_norm(a in prop::collection::vec((-0.5f64..0.5, -0.5f64..0.5), 33)) {
                let f = field(&a, Plane::PlaneA);
                let total = mass_in_interval(&f, -1.0, 1.0).unwrap();
                let ff = inner_product(&f, &f).unwrap().re;
                prop_assert!((total - ff).abs() < 1e-14);
            }
        }
    }
}
