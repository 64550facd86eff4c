//! Flat key-value configuration: an optional TOML file overlaid by flags.

use std::fs;
use std::path::{Path, PathBuf};

use magic_bullet::analytic::Objective;
use magic_bullet::validate::{Kernel, PROFILE_POINTS, PROFILE_WINDOW};
use magic_bullet::{Overlap, Plane, Variant};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },

    #[error("invalid config file {path}: {source}")]
    Parse { path: PathBuf, source: Box<toml::de::Error> },

    #[error("invalid value for `{key}`: {message}")]
    Value { key: &'static str, message: String },
}

fn invalid(key: &'static str, message: impl ToString) -> ConfigError {
    ConfigError::Value { key, message: message.to_string() }
}

/// Keys accepted in a config file. Every key is optional; command-line
/// flags override the file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub g: Option<f64>,
    #[serde(rename = "L", alias = "l")]
    pub l: Option<f64>,
    pub plane: Option<String>,
    pub variant: Option<String>,
    pub window: Option<f64>,
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub shots: Option<usize>,
    pub g_min: Option<f64>,
    pub g_max: Option<f64>,
    pub steps: Option<usize>,
    pub formula: Option<String>,
    pub kernel: Option<String>,
    pub exact_sigma: Option<bool>,
    pub out_dir: Option<PathBuf>,
}

impl Overrides {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
        toml::from_str(&text).map_err(|source| ConfigError::Parse { path: path.into(), source: Box::new(source) })
    }

    /// Fields set in `self` win over those in `base`.
    pub fn over(self, base: Overrides) -> Overrides {
        Overrides {
            g: self.g.or(base.g),
            l: self.l.or(base.l),
            plane: self.plane.or(base.plane),
            variant: self.variant.or(base.variant),
            window: self.window.or(base.window),
            n: self.n.or(base.n),
            seed: self.seed.or(base.seed),
            shots: self.shots.or(base.shots),
            g_min: self.g_min.or(base.g_min),
            g_max: self.g_max.or(base.g_max),
            steps: self.steps.or(base.steps),
            formula: self.formula.or(base.formula),
            kernel: self.kernel.or(base.kernel),
            exact_sigma: self.exact_sigma.or(base.exact_sigma),
            out_dir: self.out_dir.or(base.out_dir),
        }
    }
}

/// Planes a sampling run covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplePlanes {
    One(Plane),
    Both,
}

/// Fully resolved settings. Serialized, this is the config snapshot of a
/// report and parses back as a config file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Settings {
    pub g: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub plane: String,
    pub variant: Variant,
    pub window: f64,
    pub n: usize,
    pub seed: u64,
    pub shots: usize,
    pub g_min: f64,
    pub g_max: f64,
    pub steps: usize,
    pub formula: Objective,
    pub kernel: Kernel,
    pub exact_sigma: bool,
    pub out_dir: PathBuf,
}

impl Settings {
    /// Fills unset keys with defaults. `default_plane` depends on the command.
    pub fn resolve(o: Overrides, default_plane: &str) -> Result<Self, ConfigError> {
        let s = Settings {
            g: o.g.unwrap_or(0.1502),
            l: o.l.unwrap_or(1.0),
            plane: o.plane.unwrap_or_else(|| default_plane.to_string()),
            variant: match o.variant {
                Some(v) => v.parse().map_err(|e| invalid("variant", e))?,
                None => Variant::ModalSubtraction,
            },
            window: o.window.unwrap_or(PROFILE_WINDOW),
            n: o.n.unwrap_or(PROFILE_POINTS),
            seed: o.seed.unwrap_or(42),
            shots: o.shots.unwrap_or(100_000),
            g_min: o.g_min.unwrap_or(0.0),
            g_max: o.g_max.unwrap_or(0.3),
            steps: o.steps.unwrap_or(301),
            formula: match o.formula.as_deref() {
                None | Some("full") => Objective::Full,
                Some("approx") => Objective::Approx,
                Some(other) => return Err(invalid("formula", format!("`{other}`, expected full or approx"))),
            },
            kernel: match o.kernel {
                Some(k) => k.parse().map_err(|e| invalid("kernel", e))?,
                None => Kernel::Standard,
            },
            exact_sigma: o.exact_sigma.unwrap_or(false),
            out_dir: o.out_dir.unwrap_or_else(|| PathBuf::from(".")),
        };
        if !(s.l.is_finite() && s.l > 0.0) {
            return Err(invalid("L", format!("{} is not a positive length", s.l)));
        }
        if !(s.window.is_finite() && s.window > 0.0) {
            return Err(invalid("window", format!("{} is not a positive half-width", s.window)));
        }
        if s.n < 2 {
            return Err(invalid("n", "at least 2 samples are required"));
        }
        if s.shots == 0 {
            return Err(invalid("shots", "at least 1 shot is required"));
        }
        Ok(s)
    }

    pub fn overlap(&self) -> Result<Overlap, ConfigError> {
        Overlap::new(self.g).map_err(|e| invalid("g", e))
    }

    pub fn profile_plane(&self) -> Result<Plane, ConfigError> {
        self.plane.parse().map_err(|e| invalid("plane", e))
    }

    pub fn sample_planes(&self) -> Result<SamplePlanes, ConfigError> {
        match self.plane.as_str() {
            "both" => Ok(SamplePlanes::Both),
            other => match other.parse().map_err(|e| invalid("plane", e))? {
                Plane::Source => Err(invalid("plane", "the source plane has no target; use planeA, planeB or both")),
                p => Ok(SamplePlanes::One(p)),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file: Overrides = toml::from_str("g = 0.2\nL = 2.0\nseed = 7\n").unwrap();
        let flags = Overrides { g: Some(0.1), ..Default::default() };
        let s = Settings::resolve(flags.over(file), "planeA").unwrap();
        assert_eq!((s.g, s.l, s.seed), (0.1, 2.0, 7));
    }

    #[test]
    fn defaults_reproduce_the_optimum_setting() {
        let s = Settings::resolve(Overrides::default(), "both").unwrap();
        assert_eq!(s.g, 0.1502);
        assert_eq!(s.l, 1.0);
        assert_eq!(s.sample_planes().unwrap(), SamplePlanes::Both);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<Overrides>("gee = 0.2\n").is_err());
        assert!(toml::from_str::<Overrides>("g = \"high\"\n").is_err());
    }

    #[test]
    fn snapshot_round_trips() {
        let s = Settings::resolve(Overrides { variant: Some("hard_screen".into()), ..Default::default() }, "planeB")
            .unwrap();
        let text = toml::to_string(&s).unwrap();
        let back = Settings::resolve(toml::from_str(&text).unwrap(), "planeA").unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn bad_values() {
        let bad = |o: Overrides| Settings::resolve(o, "planeA").is_err();
        assert!(bad(Overrides { formula: Some("exact".into()), ..Default::default() }));
        assert!(bad(Overrides { l: Some(0.0), ..Default::default() }));
        assert!(bad(Overrides { n: Some(1), ..Default::default() }));
        let s = Settings::resolve(Overrides { plane: Some("source".into()), ..Default::default() }, "both").unwrap();
        assert!(s.sample_planes().is_err());
        assert_eq!(s.profile_plane().unwrap(), Plane::Source);
    }
}
