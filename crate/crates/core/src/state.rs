//! The two-target superposition
//!
//! ```text
//! |psi> = (|A> + |B> - sigma |S>) / sqrt(2 + 2g - sigma^2)
//! ```
//!
//! in two flavours: modal subtraction of the flat line-of-sight mode, and a
//! hard screen that zeroes `|x| <= 2L` at the source.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analytic::{overlap_as_approx, overlap_bs_approx, sigma_of_g, Component, Overlap, Plane, WaveProfile};
use crate::error::{Error, Result};
use crate::grid::{apply_screen, inner_product, mass_in_interval, sample, GridSpec, SampledField};
use crate::propagate::{fresnel_propagate, Direction, Method, PropagationSpec};

/// Source-plane half window (units of `L`) used at small overlaps.
pub const WIDE_WINDOW: f64 = 2000.0;
/// Grid spacing ceiling (units of `L`).
pub const MAX_SPACING: f64 = 0.02;
/// Captured mass below which a window is flagged.
pub const MASS_CAPTURE_FLOOR: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// The flat `S` mode is removed by destructive interference.
    ModalSubtraction,
    /// A physical screen blocks `|x| <= 2L` at the source.
    HardScreen,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::ModalSubtraction => "modal_subtraction",
            Variant::HardScreen => "hard_screen",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "modal_subtraction" | "modal" => Ok(Variant::ModalSubtraction),
            "hard_screen" | "screen" => Ok(Variant::HardScreen),
            _ => Err(Error::Domain(format!("unknown variant '{s}' (expected modal_subtraction or hard_screen)"))),
        }
    }
}

/// Amplitudes of the three components.
///
/// For the hard-screen variant the coefficients describe the unscreened
/// `|A> + |B>`; the screen and the renormalization are applied when a
/// field is assembled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateCoefficients {
    pub c_a: Complex64,
    pub c_b: Complex64,
    pub c_s: Complex64,
    pub sigma: f64,
    pub norm_sq: f64,
    pub g: Overlap,
    pub l: f64,
    pub variant: Variant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetProbabilities {
    pub p_a: f64,
    pub p_b: f64,
    pub p_s_residual: f64,
    /// `p_a + p_b - 1`; negative when no photon is forced onto both targets.
    pub p_mb: f64,
}

impl TargetProbabilities {
    fn new(p_a: f64, p_b: f64, p_s_residual: f64) -> Self {
        Self { p_a, p_b, p_s_residual, p_mb: p_a + p_b - 1.0 }
    }
}

/// Modal-subtraction state with `sigma` from the rectangle-amplitude overlaps.
pub fn build_state(g: Overlap) -> Result<StateCoefficients> {
    build_state_with_l(g, 1.0)
}

pub fn build_state_with_l(g: Overlap, l: f64) -> Result<StateCoefficients> {
    check_length(l)?;
    let sigma = sigma_of_g(g);
    let norm_sq = 2.0 + 2.0 * g.get() - sigma * sigma;
    if !(norm_sq > 0.0) {
        return Err(Error::Domain(format!("normalization 2 + 2g - sigma^2 = {norm_sq} is not positive")));
    }
    let c = norm_sq.sqrt().recip();
    Ok(StateCoefficients {
        c_a: Complex64::new(c, 0.0),
        c_b: Complex64::new(c, 0.0),
        c_s: Complex64::new(-sigma * c, 0.0),
        sigma,
        norm_sq,
        g,
        l,
        variant: Variant::ModalSubtraction,
    })
}

/// Hard-screen state: `|A> + |B>` with the source interval `|x| <= 2L` blocked.
pub fn build_screened_state(g: Overlap, l: f64) -> Result<StateCoefficients> {
    check_length(l)?;
    Ok(StateCoefficients {
        c_a: Complex64::new(1.0, 0.0),
        c_b: Complex64::new(1.0, 0.0),
        c_s: Complex64::new(0.0, 0.0),
        sigma: 0.0,
        norm_sq: 2.0 + 2.0 * g.get(),
        g,
        l,
        variant: Variant::HardScreen,
    })
}

pub fn build(variant: Variant, g: Overlap, l: f64) -> Result<StateCoefficients> {
    match variant {
        Variant::ModalSubtraction => build_state_with_l(g, l),
        Variant::HardScreen => build_screened_state(g, l),
    }
}

fn check_length(l: f64) -> Result<()> {
    if l.is_finite() && l > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("L must be positive and finite, got {l}")))
    }
}

/// Projections `<A|psi>`, `<B|psi>`, `<S|psi>` using the rectangle-amplitude overlaps.
pub fn modal_amplitudes(s: &StateCoefficients) -> (Complex64, Complex64, Complex64) {
    let g = Complex64::new(s.g.get(), 0.0);
    let a_s = overlap_as_approx(s.g);
    let b_s = overlap_bs_approx(s.g);
    let a = s.c_a + s.c_b * g + s.c_s * a_s;
    let b = s.c_a * g + s.c_b + s.c_s * b_s;
    let sv = s.c_a * a_s.conj() + s.c_b * b_s.conj() + s.c_s;
    (a, b, sv)
}

/// `<psi|psi>` expanded over the rectangle-amplitude overlaps.
pub fn modal_norm(s: &StateCoefficients) -> f64 {
    let g = s.g.get();
    let a_s = overlap_as_approx(s.g);
    let b_s = overlap_bs_approx(s.g);
    s.c_a.norm_sqr()
        + s.c_b.norm_sqr()
        + s.c_s.norm_sqr()
        + 2.0 * (s.c_a.conj() * s.c_b * g + s.c_a.conj() * s.c_s * a_s + s.c_b.conj() * s.c_s * b_s).re
}

/// Squared projections onto the flat target modes.
pub fn modal_probabilities(s: &StateCoefficients) -> Result<TargetProbabilities> {
    if s.variant != Variant::ModalSubtraction {
        return Err(Error::Domain("modal probabilities are defined for the modal-subtraction state".into()));
    }
    let (a, b, sv) = modal_amplitudes(s);
    Ok(TargetProbabilities::new(a.norm_sqr(), b.norm_sqr(), sv.norm_sqr()))
}

/// Default window for a plane: `+-2000 L` up to `g = 0.15`, narrowing as
/// `1/g^2` beyond so the sinc envelopes keep the same number of lobes, with
/// spacing below the chirp Nyquist bound `L^2 / (g^2 x_max)`.
pub fn default_grid(g: Overlap, l: f64) -> GridSpec {
    let g2 = g.get().powi(2);
    let half = if g2 > 0.0225 { (WIDE_WINDOW * 0.0225 / g2).max(20.0) } else { WIDE_WINDOW };
    let dx = if g2 > 0.0 { MAX_SPACING.min(0.9 / (g2 * half)) } else { MAX_SPACING };
    GridSpec::with_spacing(half * l, dx * l).expect("default window is valid")
}

/// Window on which the state can be assembled at `plane`: the default
/// window, with hard-screen targets refined to the kernel Nyquist spacing so
/// the propagation from the source runs as an FFT convolution.
pub fn plane_grid(s: &StateCoefficients, plane: Plane) -> Result<GridSpec> {
    let base = default_grid(s.g, s.l);
    match (s.variant, plane) {
        (Variant::HardScreen, Plane::PlaneA | Plane::PlaneB) => {
            let lz = crate::analytic::lambda_z(s.g, s.l, plane.separations())?;
            let nyquist = lz / (4.0 * base.x_max + 2.0 * base.dx());
            GridSpec::with_spacing(base.x_max, base.dx().min(0.999 * nyquist))
        }
        _ => Ok(base),
    }
}

/// One grid per plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneGrids {
    pub source: GridSpec,
    pub plane_a: GridSpec,
    pub plane_b: GridSpec,
}

impl PlaneGrids {
    pub fn uniform(grid: GridSpec) -> Self {
        Self { source: grid, plane_a: grid, plane_b: grid }
    }

    pub fn default_for(g: Overlap, l: f64) -> Self {
        Self::uniform(default_grid(g, l))
    }

    pub fn for_state(s: &StateCoefficients) -> Result<Self> {
        Ok(Self {
            source: plane_grid(s, Plane::Source)?,
            plane_a: plane_grid(s, Plane::PlaneA)?,
            plane_b: plane_grid(s, Plane::PlaneB)?,
        })
    }

    pub fn get(&self, plane: Plane) -> GridSpec {
        match plane {
            Plane::Source => self.source,
            Plane::PlaneA => self.plane_a,
            Plane::PlaneB => self.plane_b,
        }
    }
}

fn component_field(s: &StateCoefficients, c: Component, plane: Plane, grid: GridSpec) -> SampledField {
    sample(&WaveProfile::new(c, plane, s.g, s.l), grid)
}

fn superpose(s: &StateCoefficients, plane: Plane, grid: GridSpec) -> Result<SampledField> {
    let mut field = component_field(s, Component::A, plane, grid).scaled(s.c_a);
    field = field.add_scaled(&component_field(s, Component::B, plane, grid), s.c_b)?;
    if s.c_s != Complex64::new(0.0, 0.0) {
        field = field.add_scaled(&component_field(s, Component::S, plane, grid), s.c_s)?;
    }
    Ok(field)
}

/// The screened `|A> + |B>` at the source, normalized on `grid`, together
/// with the mass the window held before normalization.
pub fn screened_source(s: &StateCoefficients, grid: GridSpec) -> Result<(SampledField, f64)> {
    let open = superpose(s, Plane::Source, grid)?;
    let blocked = apply_screen(&open, 2.0 * s.l);
    let mass = blocked.norm_sqr();
    Ok((blocked.normalized()?, mass))
}

/// The state's wavefunction on `grid` at `plane`.
///
/// Modal subtraction sums the closed forms. The hard-screen variant
/// screens `|A> + |B>` and renormalizes it on the default source window;
/// at the targets it propagates that field numerically (FFT when `grid` shares the
/// source spacing, direct quadrature otherwise).
pub fn assemble_field(s: &StateCoefficients, plane: Plane, grid: GridSpec) -> Result<SampledField> {
    match (s.variant, plane) {
        (Variant::ModalSubtraction, _) => superpose(s, plane, grid),
        (Variant::HardScreen, Plane::Source) => {
            // Normalized on the default window whatever window is requested.
            let (_, mass) = screened_source(s, default_grid(s.g, s.l))?;
            let blocked = apply_screen(&superpose(s, Plane::Source, grid)?, 2.0 * s.l);
            Ok(blocked.scaled(Complex64::new(mass.sqrt().recip(), 0.0)))
        }
        (Variant::HardScreen, target) => {
            let src_grid = screened_source_grid(s, &grid, target)?;
            let (src, _) = screened_source(s, src_grid)?;
            let same_spacing = ((grid.dx() - src_grid.dx()) / src_grid.dx()).abs() < 1e-9;
            let method = if same_spacing { Method::FftConvolution } else { Method::DirectQuadrature };
            let spec = PropagationSpec::between_planes(s.g, s.l, target.separations(), Direction::Forward, method)?;
            fresnel_propagate(&src, &spec, &grid, target)
        }
    }
}

/// Source window for propagating the screened state onto `out`: the
/// default window, refined until the kernel chirp is resolved.
fn screened_source_grid(s: &StateCoefficients, out: &GridSpec, target: Plane) -> Result<GridSpec> {
    let base = default_grid(s.g, s.l);
    let half = base.x_max;
    let lz = crate::analytic::lambda_z(s.g, s.l, target.separations())?;
    let extent = half + out.x_max.abs().max(out.x_min.abs());
    let nyquist = lz / (2.0 * extent);
    let mut dx = base.dx().min(nyquist);
    // Share the output spacing when it is fine enough so the FFT route applies.
    if out.dx() <= dx {
        dx = out.dx();
    }
    GridSpec::with_spacing(half, dx)
}

/// Slit-transmission probabilities together with window diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialProbabilities {
    pub probabilities: TargetProbabilities,
    /// `(plane, int |psi|^2 over the window)`.
    pub window_mass: Vec<(Plane, f64)>,
    pub warnings: Vec<String>,
}

/// Integrated density over each slit: `[-L/2, L/2]` at `A`, `[-L, L]` at
/// `B`, and the blocked interval `[-2L, 2L]` at the source.
///
/// Masses are taken relative to `max(1, window mass)`: the state has unit
/// norm, and any norm missing from a window is outside every slit.
pub fn spatial_probabilities(s: &StateCoefficients, grids: &PlaneGrids) -> Result<SpatialProbabilities> {
    let mut probs = [0.0; 3];
    let mut window_mass = Vec::with_capacity(3);
    let mut warnings = Vec::new();
    for (k, plane) in Plane::ALL.into_iter().enumerate() {
        let field = assemble_field(s, plane, grids.get(plane))?;
        let mass = field.norm_sqr();
        if mass < MASS_CAPTURE_FLOOR {
            warnings.push(format!(
                "{plane} window [{}, {}] captures only {:.4} of the norm",
                field.grid().x_min,
                field.grid().x_max,
                mass
            ));
        }
        let h = plane.aperture_half_width() * s.l;
        probs[k] = (mass_in_interval(&field, -h, h)? / mass.max(1.0)).clamp(0.0, 1.0);
        window_mass.push((plane, mass));
    }
    Ok(SpatialProbabilities {
        probabilities: TargetProbabilities::new(probs[1], probs[2], probs[0]),
        window_mass,
        warnings,
    })
}

/// Quadrature values of `<A|S>` and `<B|S>` at the source over the blocked interval.
pub fn exact_line_of_sight_overlaps(g: Overlap, l: f64) -> Result<(Complex64, Complex64)> {
    let grid = GridSpec::new(-2.0 * l, 2.0 * l, 40_001)?;
    let s = sample(&WaveProfile::new(Component::S, Plane::Source, g, l), grid);
    let a = sample(&WaveProfile::new(Component::A, Plane::Source, g, l), grid);
    let b = sample(&WaveProfile::new(Component::B, Plane::Source, g, l), grid);
    Ok((inner_product(&a, &s)?, inner_product(&b, &s)?))
}

/// Coefficient that cancels `<S|psi>` when the overlaps are computed by
/// quadrature: `<S|A> + <S|B>`.
pub fn exact_sigma(g: Overlap, l: f64) -> Result<Complex64> {
    let (a_s, b_s) = exact_line_of_sight_overlaps(g, l)?;
    Ok(a_s.conj() + b_s.conj())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::prob_hit_full;
    use crate::grid::probability_in_interval;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn ov(g: f64) -> Overlap {
        Overlap::new(g).unwrap()
    }

    #[test]
    fn orthogonal_limit() {
        let s = build_state(ov(0.0)).unwrap();
        assert!((s.c_a.re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert_eq!(s.c_a, s.c_b);
        assert_eq!(s.c_s.norm(), 0.0);
        let p = modal_probabilities(&s).unwrap();
        assert!((p.p_a - 0.5).abs() < 1e-15 && (p.p_b - 0.5).abs() < 1e-15);
        assert!(p.p_mb.abs() < 1e-15);
    }

    #[test]
    fn coefficients_at_reported_optimum() {
        let s = build_state(ov(0.1502)).unwrap();
        assert!((s.sigma - 0.392_491_514_648_863_56).abs() < 1e-12);
        assert!((s.norm_sq - 2.146_350_410_928_641).abs() < 1e-12);
        let p = modal_probabilities(&s).unwrap();
        assert!((p.p_a - 0.537062).abs() < 5e-7);
        assert!((p.p_b - 0.537062).abs() < 5e-7);
        assert!((p.p_mb - 0.074124).abs() < 5e-7);
        assert!(p.p_s_residual < 1e-30);
    }

    #[test]
    fn normalization_near_domain_edge() {
        use std::f64::consts::FRAC_1_SQRT_2;
        let s = build_state(ov(FRAC_1_SQRT_2 - 1e-6)).unwrap();
        let g = FRAC_1_SQRT_2 - 1e-6;
        let expect = 2.0 + 2.0 * g - (4.0 + 2.0 * std::f64::consts::SQRT_2) * g * g;
        assert!((s.norm_sq - expect).abs() < 1e-12);
        assert!(s.norm_sq > 0.0 && s.norm_sq < 1e-4);
    }

    #[test]
    fn no_certificate_at_large_overlap() {
        let p = modal_probabilities(&build_state(ov(0.35)).unwrap()).unwrap();
        assert!((p.p_mb + 0.036_030_573_461_325_77).abs() < 1e-12);
    }

    #[test]
    fn modal_invariants_over_domain() {
        for i in 0..=100 {
            let g = ov(0.7 * i as f64 / 100.0);
            let s = build_state(g).unwrap();
            assert!((modal_norm(&s) - 1.0).abs() < 1e-12, "norm at {g}");
            let (_, _, sv) = modal_amplitudes(&s);
            assert!(sv.norm() < 1e-15, "<S|psi> at {g}");
            let p = modal_probabilities(&s).unwrap();
            assert!((p.p_a - prob_hit_full(g)).abs() < 1e-12, "p_a at {g}");
            assert!((p.p_a - p.p_b).abs() < 1e-12);
        }
    }

    #[test]
    fn hard_screen_has_no_modal_probabilities() {
        let s = build_screened_state(ov(0.15), 1.0).unwrap();
        assert!(modal_probabilities(&s).is_err());
    }

    #[test]
    fn source_density_at_centre() {
        let s = build_state(ov(0.1502)).unwrap();
        let grid = GridSpec::new(-1.0, 1.0, 3).unwrap();
        let f = assemble_field(&s, Plane::Source, grid).unwrap();
        let a0 = WaveProfile::new(Component::A, Plane::Source, s.g, 1.0).eval(0.0);
        let b0 = WaveProfile::new(Component::B, Plane::Source, s.g, 1.0).eval(0.0);
        let expect = (s.c_a * a0 + s.c_b * b0 + s.c_s * 0.5).norm_sqr();
        assert!((f.values()[1].norm_sqr() - expect).abs() < 1e-15);
        // sigma removes the flat mode only; the centre density is not exactly zero.
        assert!(f.values()[1].norm_sqr() < 1e-6);
    }

    #[test]
    fn hard_screen_source_is_dark_on_blocked_interval() {
        let s = build_screened_state(ov(0.1502), 1.0).unwrap();
        let grid = GridSpec::with_spacing(200.0, 0.01).unwrap();
        let f = assemble_field(&s, Plane::Source, grid).unwrap();
        for (x, v) in grid.points().zip(f.values()) {
            if x.abs() <= 2.0 {
                assert_eq!(v.norm(), 0.0, "x = {x}");
            }
        }
        // Normalization refers to the default window, not the requested one.
        let narrow = f.norm_sqr();
        assert!(narrow > 0.9 && narrow < 1.0, "{narrow}");
        let wide = assemble_field(&s, Plane::Source, default_grid(s.g, 1.0)).unwrap();
        assert!((wide.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn central_slit_probability() {
        let s = build_state(ov(0.1502)).unwrap();
        let f = assemble_field(&s, Plane::PlaneA, GridSpec::new(-0.5, 0.5, 10_001).unwrap()).unwrap();
        let p = probability_in_interval(&f, -0.5, 0.5).unwrap();
        assert!((p - 0.537).abs() < 1e-3, "{p}");
    }

    #[test]
    fn spatial_probabilities_at_optimum() {
        let s = build_state(ov(0.1502)).unwrap();
        let sp = spatial_probabilities(&s, &PlaneGrids::default_for(s.g, 1.0)).unwrap();
        let p = sp.probabilities;
        assert!((p.p_a - 0.537).abs() < 1e-2, "{p:?}");
        assert!((p.p_b - 0.537).abs() < 1e-2, "{p:?}");
        assert!(p.p_s_residual < 1e-3, "{p:?}");
        let modal = modal_probabilities(&s).unwrap();
        assert!(p.p_a >= modal.p_a - 1e-2);
        assert!(sp.warnings.is_empty(), "{:?}", sp.warnings);
    }

    #[test]
    fn spatial_probabilities_orthogonal_limit() {
        let s = build_state(ov(0.0)).unwrap();
        let grids = PlaneGrids::uniform(GridSpec::with_spacing(50.0, 0.01).unwrap());
        let sp = spatial_probabilities(&s, &grids).unwrap();
        assert!((sp.probabilities.p_a - 0.5).abs() < 1e-2, "{:?}", sp.probabilities);
        assert!((sp.probabilities.p_b - 0.5).abs() < 1e-2, "{:?}", sp.probabilities);
        // Half of the norm lives in the unbounded focused beams.
        assert_eq!(sp.warnings.len(), 3);
    }

    #[test]
    fn exact_sigma_is_close_to_rectangle_estimate() {
        let g = ov(0.15);
        let exact = exact_sigma(g, 1.0).unwrap();
        assert!((exact.norm() - sigma_of_g(g)).abs() < 5e-3, "{exact}");
        assert!(exact.im.abs() < 0.02);
    }

    #[test]
    fn default_grid_resolves_chirp() {
        for g in [0.0, 0.05, 0.15, 0.3, 0.6] {
            let grid = default_grid(ov(g), 1.0);
            assert!(grid.dx() <= MAX_SPACING + 1e-15);
            if g > 0.0 {
                assert!(grid.dx() <= 1.0 / (g * g * grid.x_max) + 1e-15, "g = {g}");
            }
        }
        assert_eq!(default_grid(ov(0.15), 1.0).n, 200_001);
    }

    #[test]
    fn variant_names() {
        assert_eq!("hard_screen".parse::<Variant>().unwrap(), Variant::HardScreen);
        assert_eq!(Variant::ModalSubtraction.to_string(), "modal_subtraction");
        assert!("other".parse::<Variant>().is_err());
    }
}
