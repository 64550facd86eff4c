use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::Overlap;
use crate::error::Error;

/// Below this distance from the centre (in units of `L`) the sinc ratio is
/// replaced by its Taylor expansion.
const SINC_TAYLOR_RADIUS: f64 = 1e-6;

/// Relative slack on rectangle supports so grid points that land on an
/// edge up to round-off are counted inside (the supports are closed).
const EDGE_SLACK: f64 = 1e-12;

/// One of the three beam components of the superposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Component {
    /// Flat mode over the line-of-sight interval `|x| <= 2L` at the source.
    S,
    /// Beam focused on target `A`.
    A,
    /// Beam focused on target `B`.
    B,
}

impl Component {
    pub const ALL: [Component; 3] = [Component::S, Component::A, Component::B];
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Component::S => "S",
            Component::A => "A",
            Component::B => "B",
        })
    }
}

/// Transverse observation plane along the propagation axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Plane {
    /// The screen `S` at `z = 0`.
    Source,
    /// Target `A` at `z = R`.
    PlaneA,
    /// Target `B` at `z = 2R`.
    PlaneB,
}

impl Plane {
    pub const ALL: [Plane; 3] = [Plane::Source, Plane::PlaneA, Plane::PlaneB];

    /// Distance from the source in multiples of `R`.
    pub fn separations(self) -> f64 {
        match self {
            Plane::Source => 0.0,
            Plane::PlaneA => 1.0,
            Plane::PlaneB => 2.0,
        }
    }

    /// The component whose rectangle lives at this plane.
    pub fn focused(self) -> Component {
        match self {
            Plane::Source => Component::S,
            Plane::PlaneA => Component::A,
            Plane::PlaneB => Component::B,
        }
    }

    /// Half-width of the slit (or blocked interval) at this plane, in units of `L`.
    pub fn aperture_half_width(self) -> f64 {
        match self {
            Plane::Source => 2.0,
            Plane::PlaneA => 0.5,
            Plane::PlaneB => 1.0,
        }
    }
}

impl fmt::Display for Plane {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Plane::Source => "source",
            Plane::PlaneA => "planeA",
            Plane::PlaneB => "planeB",
        })
    }
}

impl FromStr for Plane {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "source" | "S" => Ok(Plane::Source),
            "planeA" | "A" => Ok(Plane::PlaneA),
            "planeB" | "B" => Ok(Plane::PlaneB),
            _ => Err(Error::Domain(format!("unknown plane '{s}' (expected source, planeA or planeB)"))),
        }
    }
}

/// Shape of one closed form, with all lengths in units of `L`.
#[derive(Debug, Clone, Copy)]
enum Shape {
    /// `amp * e^{i pi phase}` on `|x| <= half`, zero outside.
    Rect { half: f64, amp: f64, phase: f64 },
    /// `sqrt(c1 L / g^2) sin(k g^2 pi x / L) / (pi x) * exp(i pi (chirp g^2 x^2 / L^2 + phase))`.
    SincChirp { k: f64, c1: f64, chirp: f64, phase: f64 },
}

fn shape(component: Component, plane: Plane) -> Shape {
    use Component::*;
    use Plane::*;
    match (plane, component) {
        (Source, S) => Shape::Rect { half: 2.0, amp: 0.5, phase: 0.0 },
        (Source, A) => Shape::SincChirp { k: 0.5, c1: 2.0, chirp: -0.5, phase: 0.125 },
        (Source, B) => Shape::SincChirp { k: 0.5, c1: 2.0, chirp: -0.25, phase: -0.125 },
        (PlaneA, S) => Shape::SincChirp { k: 2.0, c1: 0.5, chirp: 0.5, phase: -0.25 },
        (PlaneA, A) => Shape::Rect { half: 0.5, amp: 1.0, phase: -0.125 },
        (PlaneA, B) => Shape::SincChirp { k: 1.0, c1: 1.0, chirp: -0.5, phase: -0.125 },
        (PlaneB, S) => Shape::SincChirp { k: 1.0, c1: 1.0, chirp: 0.25, phase: -0.25 },
        (PlaneB, A) => Shape::SincChirp { k: 0.5, c1: 2.0, chirp: 0.5, phase: -0.375 },
        (PlaneB, B) => Shape::Rect { half: 1.0, amp: std::f64::consts::FRAC_1_SQRT_2, phase: -0.375 },
    }
}

#[inline]
fn sinc(t: f64) -> f64 {
    t.sin() / t
}

/// Closed-form wavefunction of one component at one plane.
///
/// Rectangles are the focused images on their own slit; every other
/// combination is a sinc envelope with a quadratic (curved-wavefront) phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveProfile {
    pub component: Component,
    pub plane: Plane,
    pub g: Overlap,
    pub l: f64,
}

impl WaveProfile {
    pub fn new(component: Component, plane: Plane, g: Overlap, l: f64) -> Self {
        Self { component, plane, g, l }
    }

    /// Complex amplitude at transverse position `x`.
    pub fn eval(&self, x: f64) -> Complex64 {
        let l = self.l;
        let xi = x / l;
        match shape(self.component, self.plane) {
            Shape::Rect { half, amp, phase } => {
                if xi.abs() <= half * (1.0 + EDGE_SLACK) {
                    Complex64::from_polar(amp / l.sqrt(), PI * phase)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
            Shape::SincChirp { k, c1, chirp, phase } => {
                let g = self.g.get();
                let g2 = g * g;
                // sqrt(c1 L/g^2) * sin(a x)/(pi x) with a = k g^2 pi / L
                //   = k g sqrt(c1 / L) * sinc(a x)
                let t = k * g2 * PI * xi;
                let envelope =
                    if xi.abs() < SINC_TAYLOR_RADIUS || t.abs() < 1e-8 { 1.0 - t * t / 6.0 } else { sinc(t) };
                let amp = k * g * (c1 / l).sqrt() * envelope;
                Complex64::from_polar(amp, PI * (chirp * g2 * xi * xi + phase))
            }
        }
    }

    /// Probability density `|psi(x)|^2`.
    pub fn density(&self, x: f64) -> f64 {
        self.eval(x).norm_sqr()
    }

    /// Half-width of the support for rectangular profiles, `None` for sinc forms.
    pub fn rect_half_width(&self) -> Option<f64> {
        match shape(self.component, self.plane) {
            Shape::Rect { half, .. } => Some(half * self.l),
            Shape::SincChirp { .. } => None,
        }
    }

    /// Radius `r` of the centred interval `[-r, r]` holding `fraction` of the
    /// (unit) norm.
    pub fn mass_radius(&self, fraction: f64) -> f64 {
        assert!((0.0..1.0).contains(&fraction), "fraction must lie in [0, 1)");
        match shape(self.component, self.plane) {
            Shape::Rect { half, .. } => fraction * half * self.l,
            Shape::SincChirp { k, .. } => {
                let g2 = self.g.get().powi(2);
                if g2 == 0.0 {
                    return f64::INFINITY;
                }
                // Mass inside |x| <= r is (2/pi) * int_0^{a r} sinc^2, a = k g^2 pi / L.
                let scale = k * g2 * PI / self.l;
                let target = fraction * PI / 2.0;
                let (mut lo, mut hi) = (0.0, 1.0);
                while sinc_sq_integral(hi) < target {
                    lo = hi;
                    hi *= 2.0;
                }
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if sinc_sq_integral(mid) < target {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi) / scale
            }
        }
    }
}

/// `int_0^t sin^2(s)/s^2 ds` by composite Simpson.
fn sinc_sq_integral(t: f64) -> f64 {
    let n = 2 * ((t * 400.0).ceil() as usize).max(8);
    let h = t / n as f64;
    let f = |s: f64| if s == 0.0 { 1.0 } else { sinc(s).powi(2) };
    let mut acc = f(0.0) + f(t);
    for i in 1..n {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    acc * h / 3.0
}
