//! The five verbs. Each computes its payload, writes its artifacts and
//! returns the report together with a printable summary.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use magic_bullet::analytic::{GUARD_POINTS, SEARCH_BRACKET, SEARCH_TOLERANCE};
use magic_bullet::grid::{mass_in_interval, GridSpec};
use magic_bullet::montecarlo::{estimate_hit, paired_estimate, plane_seed, GENERATOR_ID};
use magic_bullet::state::{assemble_field, build, default_grid, screened_source};
use magic_bullet::validate::{self, run_suite, ValidateOptions};
use magic_bullet::{magic_bullet_root, optimize_with, prob_magic_bullet, sweep, Plane, Variant};
use serde_json::json;

use crate::config::{SamplePlanes, Settings};
use crate::CliError;

/// Result of a command before its report is stamped and written.
pub struct Completed {
    pub outputs: serde_json::Value,
    pub tolerances: BTreeMap<String, f64>,
    pub generator: Option<String>,
    pub summary: Vec<String>,
    pub passed: bool,
}

impl Completed {
    fn ok(outputs: serde_json::Value, summary: Vec<String>) -> Self {
        Self { outputs, tolerances: BTreeMap::new(), generator: None, summary, passed: true }
    }

    fn tolerance(mut self, key: &str, value: f64) -> Self {
        self.tolerances.insert(key.to_string(), value);
        self
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(path).map_err(|e| CliError::Io { path: path.into(), source: e })?))
}

pub fn optimize(s: &Settings) -> Result<Completed, CliError> {
    let opt = optimize_with(s.formula)?;
    let formula = serde_json::to_value(s.formula).expect("serializable");
    let outputs = json!({
        "formula": formula,
        "g_star": opt.g_star.get(),
        "p_hit": opt.p_hit,
        "p_mb": opt.p_mb,
        "bracket": [SEARCH_BRACKET.0, SEARCH_BRACKET.1],
        "guard_points": GUARD_POINTS,
    });
    let summary = vec![
        format!("formula  {}", formula.as_str().unwrap_or_default()),
        format!("g*       {:.6}", opt.g_star.get()),
        format!("P(A)     {:.6}", opt.p_hit),
        format!("P_MB     {:.6}", opt.p_mb),
    ];
    Ok(Completed::ok(outputs, summary).tolerance("search_tolerance", SEARCH_TOLERANCE))
}

pub fn sweep_cmd(s: &Settings) -> Result<Completed, CliError> {
    let rows = sweep(s.g_min, s.g_max, s.steps)?;
    let path = s.out_dir.join("sweep.csv");
    let mut out = create(&path)?;
    let io = |source| CliError::Io { path: path.clone(), source };
    writeln!(out, "g,p_full,p_approx,p_mb").map_err(io)?;
    for r in &rows {
        writeln!(out, "{},{},{},{}", r.g, r.p_full, r.p_approx, r.p_mb).map_err(io)?;
    }
    out.flush().map_err(io)?;

    let best = rows.iter().max_by(|a, b| a.p_full.total_cmp(&b.p_full)).expect("at least two rows");
    let nonzero: Vec<_> = rows.iter().filter(|r| r.p_mb != 0.0).collect();
    let crossings: Vec<f64> = nonzero
        .windows(2)
        .filter(|w| w[0].p_mb.signum() != w[1].p_mb.signum())
        .map(|w| 0.5 * (w[0].g + w[1].g))
        .collect();
    let root = magic_bullet_root();
    let outputs = json!({
        "csv": path,
        "rows": rows.len(),
        "max_p_full": { "g": best.g, "p_full": best.p_full, "p_mb": best.p_mb },
        "p_mb_sign_changes": crossings,
        "p_mb_root": root,
    });
    let summary = vec![
        format!("wrote {} rows to {}", rows.len(), path.display()),
        format!("max p_full {:.6} at g = {}", best.p_full, best.g),
        format!("p_mb sign changes in range: {crossings:?} (root of p_mb at g = {root:.7})"),
    ];
    Ok(Completed::ok(outputs, summary))
}

pub fn profile(s: &Settings) -> Result<Completed, CliError> {
    let g = s.overlap()?;
    let plane = s.profile_plane()?;
    let state = build(s.variant, g, s.l)?;
    let grid = GridSpec::new(-s.window * s.l, s.window * s.l, s.n)?;
    let field = assemble_field(&state, plane, grid)?;

    let h = plane.aperture_half_width() * s.l;
    let interval_mass = mass_in_interval(&field, -h, h)?;

    let path = s.out_dir.join(format!("profile_{plane}_{}.csv", s.variant));
    let mut out = create(&path)?;
    field.write_csv(&mut out).map_err(|e| CliError::Io { path: path.clone(), source: e })?;
    out.flush().map_err(|e| CliError::Io { path: path.clone(), source: e })?;
    let (lo, hi) = field
        .values()
        .iter()
        .zip(grid.points())
        .filter(|(_, x)| x.abs() <= h)
        .map(|(v, _)| v.norm_sqr())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| (lo.min(d), hi.max(d)));
    let region = if plane == Plane::Source { "blocked interval" } else { "target slit" };
    let mut outputs = json!({
        "csv": path,
        "plane": plane,
        "variant": s.variant,
        "captured_mass": field.norm_sqr(),
        "interval": [-h, h],
        "interval_probability": interval_mass,
        "interval_mean_density": interval_mass / (2.0 * h),
        "interval_density_range": [lo, hi],
    });
    if s.variant == Variant::HardScreen {
        let (_, kept) = screened_source(&state, default_grid(g, s.l))?;
        outputs["screen_transmitted_norm"] = json!(kept);
    }
    let summary = vec![
        format!("wrote {} points to {}", grid.n, path.display()),
        format!("captured mass on [{}, {}]: {:.6}", grid.x_min, grid.x_max, field.norm_sqr()),
        format!("{region} [{:.3}, {:.3}]: probability {interval_mass:.6}, density in [{lo:.6}, {hi:.6}]", -h, h),
    ];
    Ok(Completed::ok(outputs, summary))
}

pub fn sample(s: &Settings) -> Result<Completed, CliError> {
    let g = s.overlap()?;
    let state = build(s.variant, g, s.l)?;
    let mut summary = Vec::new();
    let mut outputs = match s.sample_planes()? {
        SamplePlanes::Both => {
            let p = paired_estimate(&state, s.shots, s.seed)?;
            for r in [&p.plane_a, &p.plane_b] {
                summary.push(format!(
                    "{}: {}/{} hits, estimate {:.5}, 95% CI [{:.5}, {:.5}]",
                    r.plane, r.hits, r.n_shots, r.estimate, r.ci_95.0, r.ci_95.1
                ));
            }
            summary.push(format!("bound p_A + p_B - 1 = {:.5}, 95% CI [{:.5}, {:.5}]", p.bound, p.ci_95.0, p.ci_95.1));
            json!({ "runs": [p.plane_a, p.plane_b], "bound": p.bound, "bound_ci_95": [p.ci_95.0, p.ci_95.1] })
        }
        SamplePlanes::One(plane) => {
            let r = estimate_hit(&state, plane, s.shots, plane_seed(s.seed, plane))?;
            summary.push(format!(
                "{}: {}/{} hits, estimate {:.5}, 95% CI [{:.5}, {:.5}]",
                r.plane, r.hits, r.n_shots, r.estimate, r.ci_95.0, r.ci_95.1
            ));
            json!({ "runs": [r] })
        }
    };
    if s.variant == Variant::ModalSubtraction {
        outputs["analytic_p_mb"] = json!(prob_magic_bullet(g));
    }
    if s.shots < 100 {
        let warning =
            format!("only {} shots per plane; the normal-approximation interval is unreliable below 100", s.shots);
        summary.push(format!("warning: {warning}"));
        outputs["warnings"] = json!([warning]);
    }
    let mut done = Completed::ok(outputs, summary).tolerance("confidence_level", 0.95);
    done.generator = Some(GENERATOR_ID.to_string());
    Ok(done)
}

pub fn validate_cmd(s: &Settings) -> Result<Completed, CliError> {
    let g = s.overlap()?;
    let opts = ValidateOptions { g_oracle: g, g_state: g, l: s.l, kernel: s.kernel, exact_sigma: s.exact_sigma };
    let report = run_suite(&opts)?;
    let mut summary = vec![format!("{:<40} {:>14} {:>12}  result", "check", "measured", "tolerance")];
    for c in &report.checks {
        let tol = c.tolerance.map_or_else(|| "-".to_string(), |t| format!("{t:.3e}"));
        let verdict = match (c.tolerance, c.passed) {
            (None, _) => "recorded",
            (Some(_), true) => "PASS",
            (Some(_), false) => "FAIL",
        };
        summary.push(format!("{:<40} {:>14.6e} {:>12}  {verdict}", c.name, c.measured, tol));
    }
    let passed = report.passed();
    summary.push(format!("{} of {} checks failed", report.failures().count(), report.checks.len()));
    let tolerances = BTreeMap::from([
        ("propagation_relative_l2".to_string(), validate::PROPAGATION_TOLERANCE),
        ("phase_coherence_rad".to_string(), validate::PHASE_COHERENCE_TOLERANCE),
        ("overlap_ab".to_string(), validate::OVERLAP_AB_TOLERANCE),
        ("overlap_ab_plane_invariance".to_string(), validate::OVERLAP_AB_PLANE_TOLERANCE),
        ("overlap_line_of_sight_modulus".to_string(), validate::OVERLAP_LOS_MODULUS_TOLERANCE),
        ("overlap_line_of_sight_phase_rad".to_string(), validate::OVERLAP_LOS_PHASE_TOLERANCE),
        ("method_agreement_relative_l2".to_string(), validate::METHOD_AGREEMENT_TOLERANCE),
        ("central_density".to_string(), validate::CENTRAL_DENSITY_TOLERANCE),
        ("stretch_law_relative".to_string(), validate::SCALING_TOLERANCE),
        ("spatial_vs_modal".to_string(), validate::SPATIAL_MODAL_SLACK),
    ]);
    Ok(Completed {
        outputs: serde_json::to_value(&report).expect("serializable"),
        tolerances,
        generator: None,
        summary,
        passed,
    })
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io { path: dir.into(), source: e })
}
