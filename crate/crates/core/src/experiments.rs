//! Experiment configuration and the command layer behind the CLI: deficit
//! and perimeter reports, approximant fits, the inequality ledger, and
//! empirical stability curves (deficit against distance to the nearest
//! half-space).

use crate::deficit::{
    boundary_measure_minkowski, boundary_measure_semigroup, deficit, set_deficit, BoundaryEstimate,
    DeficitReport, PerimeterRoute, SetDeficitReport,
};
use crate::error::{Error, Result};
use crate::fitting::{fit_halfspace_set, fit_phi_affine, round_to_halfspace, FitResult, HalfSpace};
use crate::ledger::{atomic_write, run_default_ledger, write_ledger_outputs, LedgerConfig};
use crate::quadrature::{gauss_hermite_rule, mc_rule_antithetic, QuadratureRule};
use crate::semigroup::{FunctionHandle, SemigroupState};
use crate::sets::{offset_union, wedge, SetHandle};
use crate::zoo;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

/// Points with deficit at or below this floor cannot enter a log-log
/// regression; they are recorded separately.
pub const DELTA_FLOOR: f64 = 1e-12;

/// Fixed smoothing time for the smoothed-indicator stability family.
pub const SMOOTHING_TIME: f64 = 0.1;

fn d_dimension() -> usize {
    2
}
fn d_gh_points() -> usize {
    60
}
fn d_mc_samples() -> u64 {
    1 << 20
}
fn d_seed() -> u64 {
    1
}
fn d_t_grid() -> Vec<f64> {
    vec![0.02, 0.01, 0.005]
}
fn d_radii() -> Vec<f64> {
    vec![0.1, 0.05]
}
fn d_fit_restarts() -> usize {
    6
}

/// One configuration drives every subcommand; fields irrelevant to a
/// command are ignored by it. Unknown fields are rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default = "d_dimension")]
    pub dimension: usize,
    #[serde(default = "d_gh_points")]
    pub gh_points: usize,
    #[serde(default = "d_mc_samples")]
    pub mc_samples: u64,
    #[serde(default = "d_seed")]
    pub seed: u64,
    /// Zoo member (function or set) for deficit/perimeter/fit.
    #[serde(default)]
    pub target: Option<String>,
    /// Semigroup-route times, strictly decreasing.
    #[serde(default = "d_t_grid")]
    pub t_grid: Vec<f64>,
    /// Minkowski enlargement radii.
    #[serde(default = "d_radii")]
    pub radii: Vec<f64>,
    /// Stability family: "wedge", "offset-union", or "smoothed-indicator".
    #[serde(default)]
    pub family: Option<String>,
    /// Stability parameter grid; empty takes the family default.
    #[serde(default)]
    pub parameters: Vec<f64>,
    #[serde(default = "d_fit_restarts")]
    pub fit_restarts: usize,
    #[serde(default)]
    pub out_dir: Option<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            schema_version: CONFIG_SCHEMA_VERSION,
            dimension: d_dimension(),
            gh_points: d_gh_points(),
            mc_samples: d_mc_samples(),
            seed: d_seed(),
            target: None,
            t_grid: d_t_grid(),
            radii: d_radii(),
            family: None,
            parameters: Vec::new(),
            fit_restarts: d_fit_restarts(),
            out_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(Error::InvalidInput(format!(
                "config schema_version {} is not the supported {CONFIG_SCHEMA_VERSION}",
                self.schema_version
            )));
        }
        if self.dimension == 0 || self.dimension > 8 {
            return Err(Error::InvalidInput(format!(
                "dimension {} outside 1..=8",
                self.dimension
            )));
        }
        if self.gh_points == 0 || self.mc_samples == 0 || self.fit_restarts == 0 {
            return Err(Error::InvalidInput(
                "gh_points, mc_samples, and fit_restarts must be positive".into(),
            ));
        }
        if self.parameters.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidInput("non-finite parameter".into()));
        }
        Ok(())
    }

    fn out_dir(&self) -> PathBuf {
        PathBuf::from(self.out_dir.as_deref().unwrap_or("."))
    }

    /// Gauss-Hermite up to dimension 3 (node budget), seeded MC above.
    fn rule_for(&self, dim: usize) -> Result<QuadratureRule> {
        if dim <= 3 {
            gauss_hermite_rule(dim, self.gh_points.min(if dim == 3 { 40 } else { 200 }))
        } else {
            Ok(mc_rule_antithetic(dim, self.mc_samples, self.seed))
        }
    }
}

fn point_seed(base: u64, index: usize) -> u64 {
    base ^ ((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

enum Target {
    Function(FunctionHandle),
    Set(SetHandle),
}

fn resolve_target(config: &ExperimentConfig) -> Result<Target> {
    let name = config
        .target
        .as_deref()
        .ok_or_else(|| Error::InvalidInput("config.target names no zoo member".into()))?;
    if let Some(f) = zoo::functions()?.into_iter().find(|f| f.name == name) {
        return Ok(Target::Function(f));
    }
    if let Some(a) = zoo::sets()?.into_iter().find(|a| a.name == name) {
        return Ok(Target::Set(a));
    }
    let mut known: Vec<String> = zoo::functions()?.iter().map(|f| f.name.clone()).collect();
    known.extend(zoo::sets()?.iter().map(|a| a.name.clone()));
    Err(Error::InvalidInput(format!(
        "unknown target {name}; zoo members: {}",
        known.join(", ")
    )))
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    atomic_write(path, text.as_bytes())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeficitArtifact {
    pub target: String,
    pub kind: String,
    pub function_report: Option<DeficitReport>,
    pub set_report: Option<SetDeficitReport>,
}

/// Deficit of the named zoo member; writes deficit.json.
pub fn cmd_deficit(config: &ExperimentConfig) -> Result<(DeficitArtifact, PathBuf)> {
    let artifact = match resolve_target(config)? {
        Target::Function(f) => {
            let points = if f.name.starts_with("smooth") {
                self::steep_points(config.gh_points)
            } else {
                config.gh_points
            };
            let rule = if f.dim <= 3 {
                gauss_hermite_rule(f.dim, if f.dim == 3 { points.min(40) } else { points })?
            } else {
                mc_rule_antithetic(f.dim, config.mc_samples, config.seed)
            };
            let report = deficit(&f, &rule)?;
            DeficitArtifact {
                target: f.name.clone(),
                kind: "function".into(),
                function_report: Some(report),
                set_report: None,
            }
        }
        Target::Set(a) => {
            let state = SemigroupState::new(config.seed);
            let route = if a.closed_perimeter.is_some() {
                PerimeterRoute::ClosedForm
            } else {
                PerimeterRoute::Minkowski {
                    radii: config.radii.clone(),
                    samples: config.mc_samples,
                    seed: config.seed,
                }
            };
            let report = set_deficit(&state, &a, &route)?;
            DeficitArtifact {
                target: a.name.clone(),
                kind: "set".into(),
                function_report: None,
                set_report: Some(report),
            }
        }
    };
    let path = config.out_dir().join("deficit.json");
    write_json(&artifact, &path)?;
    Ok((artifact, path))
}

fn steep_points(base: usize) -> usize {
    base.max(150)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerimeterArtifact {
    pub target: String,
    pub closed_form: Option<f64>,
    pub minkowski: BoundaryEstimate,
    pub semigroup: BoundaryEstimate,
    pub difference: f64,
    pub tolerance: f64,
    pub agree: bool,
}

/// Both boundary-measure estimators for a named set, with an agreement
/// verdict; writes perimeter.json.
pub fn cmd_perimeter(config: &ExperimentConfig) -> Result<(PerimeterArtifact, PathBuf)> {
    let Target::Set(a) = resolve_target(config)? else {
        return Err(Error::InvalidInput("perimeter needs a set target".into()));
    };
    let minkowski = boundary_measure_minkowski(&a, &config.radii, config.mc_samples, config.seed)?;
    let state = SemigroupState::new(config.seed);
    let semigroup = boundary_measure_semigroup(&state, &a, &config.t_grid)?;
    let difference = (minkowski.value - semigroup.value).abs();
    let tolerance = (5.0 * (minkowski.error_estimate + semigroup.error_estimate)).max(2e-3);
    let artifact = PerimeterArtifact {
        target: a.name.clone(),
        closed_form: a.closed_perimeter,
        agree: difference <= tolerance,
        difference,
        tolerance,
        minkowski,
        semigroup,
    };
    let path = config.out_dir().join("perimeter.json");
    write_json(&artifact, &path)?;
    Ok((artifact, path))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitArtifact {
    pub target: String,
    pub kind: String,
    pub result: FitResult,
    /// Half-space rounding of the fitted (a, b).
    pub halfspace: HalfSpace,
}

/// Nearest Φ-affine approximant for a function target, nearest half-space
/// for a set target; writes fit.json.
pub fn cmd_fit(config: &ExperimentConfig) -> Result<(FitArtifact, PathBuf)> {
    let artifact = match resolve_target(config)? {
        Target::Function(f) => {
            let rule = config.rule_for(f.dim)?;
            let result = fit_phi_affine(&f, &rule, config.fit_restarts)?;
            FitArtifact {
                target: f.name.clone(),
                kind: "phi-affine".into(),
                halfspace: round_to_halfspace(&result.a, result.b),
                result,
            }
        }
        Target::Set(a) => {
            let rule = mc_rule_antithetic(a.dim, config.mc_samples, config.seed);
            let result = fit_halfspace_set(&a, &rule, config.fit_restarts)?;
            FitArtifact {
                target: a.name.clone(),
                kind: "halfspace".into(),
                halfspace: round_to_halfspace(&result.a, result.b),
                result,
            }
        }
    };
    let path = config.out_dir().join("fit.json");
    write_json(&artifact, &path)?;
    Ok((artifact, path))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyArtifact {
    pub total_checks: usize,
    pub assert_failures: Vec<String>,
    pub pass: bool,
    pub outputs: Vec<PathBuf>,
}

/// Full inequality ledger; writes ledger.jsonl, ledger_summary.csv, and
/// ledger_statements.md. `pass` is false iff an assert-mode check failed.
pub fn cmd_verify(config: &ExperimentConfig) -> Result<VerifyArtifact> {
    let results = run_default_ledger(&LedgerConfig {
        seed: config.seed,
        mc_samples: config.mc_samples,
    })?;
    let outputs = write_ledger_outputs(&results, &config.out_dir())?;
    let assert_failures: Vec<String> = results
        .iter()
        .filter(|r| r.mode == crate::ledger::CheckMode::Assert && !r.pass)
        .map(|r| format!("{} [{}] margin {:e}", r.check, r.input, r.margin))
        .collect();
    let artifact = VerifyArtifact {
        total_checks: results.len(),
        pass: assert_failures.is_empty(),
        assert_failures,
        outputs,
    };
    write_json(&artifact, &config.out_dir().join("verify.json"))?;
    Ok(artifact)
}

/// One (parameter, deficit, distance) sample. For set families the
/// distance is the Gaussian symmetric difference to the best half-space;
/// for the smoothed-indicator family it is the least-squares gap to the
/// best Φ-affine function.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StabilityPoint {
    pub parameter: f64,
    pub delta: f64,
    pub delta_error: f64,
    pub distance: f64,
    pub distance_error: f64,
}

/// Empirical deficit-vs-distance curve for one family, with the log-log
/// slope, its confidence band, rank monotonicity, and the shape constant
/// of distance ≤ C/log^{1/6}(1/δ) calibrated at the largest-deficit point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityCurve {
    pub family: String,
    pub seed: u64,
    /// Sorted by parameter; deficits above the floor.
    pub points: Vec<StabilityPoint>,
    /// Deficit at or below the floor: excluded from the regression.
    pub dropped: Vec<StabilityPoint>,
    pub delta_floor: f64,
    pub slope: f64,
    pub slope_stderr: f64,
    pub slope_ci_low: f64,
    pub slope_ci_high: f64,
    pub spearman: f64,
    pub bound_constant: f64,
    pub bound_calibrated_at: f64,
    pub bound_satisfied: bool,
}

fn default_parameters(family: &str) -> Result<Vec<f64>> {
    let geometric = |lo: f64, hi: f64, n: usize| -> Vec<f64> {
        (0..n)
            .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
            .collect()
    };
    match family {
        "wedge" => Ok(geometric(0.15, 1.2, 12)),
        "offset-union" => Ok((0..8).map(|i| 1.0 + 0.2 * i as f64).collect()),
        "smoothed-indicator" => Ok(geometric(0.15, 1.2, 8)),
        other => Err(Error::InvalidInput(format!(
            "unknown stability family {other}; families: wedge, offset-union, smoothed-indicator"
        ))),
    }
}

fn stability_point(
    family: &str,
    parameter: f64,
    config: &ExperimentConfig,
    seed: u64,
) -> Result<StabilityPoint> {
    match family {
        "wedge" | "offset-union" => {
            let set = if family == "wedge" {
                wedge(parameter)?
            } else {
                offset_union(parameter)?
            };
            let state = SemigroupState::new(seed);
            let report = set_deficit(&state, &set, &PerimeterRoute::ClosedForm)?;
            let rule = mc_rule_antithetic(2, config.mc_samples, seed);
            let fit = fit_halfspace_set(&set, &rule, config.fit_restarts)?;
            let d = fit.objective;
            let derr = (d.max(0.0) * (1.0 - d).max(0.0) / config.mc_samples as f64).sqrt();
            Ok(StabilityPoint {
                parameter,
                delta: report.deficit,
                delta_error: report.error_estimate,
                distance: d,
                distance_error: derr,
            })
        }
        "smoothed-indicator" => {
            // P_s of a half-space indicator is exactly Φ-affine, so its
            // deficit vanishes for every s; the indicator being smoothed
            // must itself leave the extremal family. Parameter = wedge
            // angle, smoothing time held fixed. Distance is the
            // least-squares gap to the nearest Φ-affine function, from two
            // quadrature orders so the gap between them prices the error.
            let f = wedge(parameter)?.smoothed_indicator(SMOOTHING_TIME)?;
            let report = deficit(&f, &gauss_hermite_rule(2, 150)?)?;
            let coarse = fit_phi_affine(&f, &gauss_hermite_rule(2, 60)?, config.fit_restarts)?;
            let fine = fit_phi_affine(&f, &gauss_hermite_rule(2, 100)?, config.fit_restarts)?;
            Ok(StabilityPoint {
                parameter,
                delta: report.deficit,
                delta_error: report.error_estimate,
                distance: fine.objective,
                distance_error: (fine.objective - coarse.objective).abs(),
            })
        }
        other => Err(Error::InvalidInput(format!(
            "unknown stability family {other}"
        ))),
    }
}

fn ols_loglog(points: &[StabilityPoint]) -> (f64, f64) {
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.delta.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.distance.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let stderr = if points.len() > 2 {
        (ssr / (n - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    (slope, stderr)
}

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut r = vec![0.0; values.len()];
    for (rank, &i) in order.iter().enumerate() {
        r[i] = rank as f64;
    }
    r
}

fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    let rx = ranks(xs);
    let ry = ranks(ys);
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in rx.iter().zip(&ry) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}

fn log16(delta: f64) -> f64 {
    (1.0 / delta).ln().powf(1.0 / 6.0)
}

/// Deficit and half-space distance across the family's parameter grid;
/// writes stability.csv and stability.json.
pub fn cmd_stability(config: &ExperimentConfig) -> Result<(StabilityCurve, Vec<PathBuf>)> {
    let family = config.family.as_deref().unwrap_or("wedge").to_string();
    let mut parameters = if config.parameters.is_empty() {
        default_parameters(&family)?
    } else {
        config.parameters.clone()
    };
    parameters.sort_by(f64::total_cmp);

    let mut points = Vec::new();
    let mut dropped = Vec::new();
    for (i, &p) in parameters.iter().enumerate() {
        let pt = stability_point(&family, p, config, point_seed(config.seed, i))?;
        if pt.delta <= DELTA_FLOOR {
            eprintln!(
                "stability: dropping parameter {p}: deficit {:e} at or below floor {DELTA_FLOOR:e}",
                pt.delta
            );
            dropped.push(pt);
        } else {
            points.push(pt);
        }
    }
    if points.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "stability regression needs at least 3 points above the deficit floor, kept {}",
            points.len()
        )));
    }

    let (slope, stderr) = ols_loglog(&points);
    let deltas: Vec<f64> = points.iter().map(|p| p.delta).collect();
    let dists: Vec<f64> = points.iter().map(|p| p.distance).collect();
    let rho = spearman(&deltas, &dists);

    // Shape check distance ≤ C/log^{1/6}(1/δ): C fixed at the point with
    // the largest deficit, where the bound is tightest along the curve.
    let cal = points
        .iter()
        .cloned()
        .max_by(|a, b| a.delta.total_cmp(&b.delta))
        .expect("nonempty");
    let c = cal.distance * log16(cal.delta);
    let satisfied = points
        .iter()
        .all(|p| p.distance <= c / log16(p.delta) * (1.0 + 1e-9) + 1e-12);

    let curve = StabilityCurve {
        family,
        seed: config.seed,
        delta_floor: DELTA_FLOOR,
        slope,
        slope_stderr: stderr,
        slope_ci_low: slope - 1.96 * stderr,
        slope_ci_high: slope + 1.96 * stderr,
        spearman: rho,
        bound_constant: c,
        bound_calibrated_at: cal.parameter,
        bound_satisfied: satisfied,
        points,
        dropped,
    };

    let csv_path = config.out_dir().join("stability.csv");
    atomic_write(&csv_path, stability_csv(&curve).as_bytes())?;
    let json_path = config.out_dir().join("stability.json");
    write_json(&curve, &json_path)?;
    Ok((curve, vec![csv_path, json_path]))
}

pub fn stability_csv(curve: &StabilityCurve) -> String {
    let mut out = String::from("parameter,delta,distance,delta_error,distance_error\n");
    for p in &curve.points {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            p.parameter, p.delta, p.distance, p.delta_error, p.distance_error
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_fill_missing_fields() {
        let config = ExperimentConfig::from_json(r#"{"schema_version":1}"#).unwrap();
        assert_eq!(config.dimension, 2);
        assert_eq!(config.gh_points, 60);
        assert_eq!(config.seed, 1);
        assert!(config.target.is_none());
    }

    #[test]
    fn config_rejects_unknown_fields_and_bad_versions() {
        assert!(ExperimentConfig::from_json(r#"{"schema_version":1,"bogus":3}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"schema_version":2}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"schema_version":1,"dimension":0}"#).is_err());
    }

    #[test]
    fn point_seed_is_index_sensitive() {
        assert_ne!(point_seed(1, 0), point_seed(1, 1));
        assert_eq!(point_seed(7, 3), point_seed(7, 3));
    }

    #[test]
    fn spearman_detects_monotone_and_antitone() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let up = [0.1, 0.4, 0.5, 0.9];
        let down = [0.9, 0.5, 0.4, 0.1];
        assert!((spearman(&xs, &up) - 1.0).abs() < 1e-12);
        assert!((spearman(&xs, &down) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn ols_recovers_an_exact_power_law() {
        let points: Vec<StabilityPoint> = (1..=6)
            .map(|i| {
                let delta = 10f64.powi(-i);
                StabilityPoint {
                    parameter: i as f64,
                    delta,
                    delta_error: 0.0,
                    distance: 3.0 * delta.powf(0.5),
                    distance_error: 0.0,
                }
            })
            .collect();
        let (slope, stderr) = ols_loglog(&points);
        assert!((slope - 0.5).abs() < 1e-12);
        assert!(stderr.abs() < 1e-12);
    }
}
