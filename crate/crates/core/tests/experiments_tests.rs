//! Stability-curve machinery against an independent radial-angular oracle,
//! plus the command layer's artifacts and reproducibility.
//!
//! Wedge oracle: the wedge is a cone, so along each direction the indicator
//! is constant in the radius and radial Gaussian mass integrates in closed
//! form; sweeping the angle with a midpoint rule gives measures of the
//! wedge and of its symmetric difference with any candidate half-plane
//! without touching the library's set handles or quadrature.

use isodef_core::experiments::{cmd_stability, stability_csv};
use isodef_core::{
    cmd_deficit, cmd_fit, cmd_perimeter, set_deficit, ExperimentConfig, PerimeterRoute,
    SemigroupState,
};
use std::f64::consts::PI;
use std::path::PathBuf;

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("isodef-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn config_in(dir: &PathBuf) -> ExperimentConfig {
    ExperimentConfig {
        out_dir: Some(dir.display().to_string()),
        ..ExperimentConfig::default()
    }
}

/// Mass of the wedge along directions: angular window of half-width
/// (π−θ)/2 around the −x axis.
fn wedge_contains(theta: f64, ang: f64) -> bool {
    let half = (PI - theta) / 2.0;
    let d = angle_dist(ang, PI);
    d <= half
}

fn angle_dist(a: f64, b: f64) -> f64 {
    let mut d = (a - b).rem_euclid(2.0 * PI);
    if d > PI {
        d = 2.0 * PI - d;
    }
    d
}

/// Half-plane {x·n + b ≥ 0} membership split along the ray r·(cos ang, sin ang):
/// returns the r-interval [lo, hi] ⊂ [0, ∞) inside the half-plane.
fn halfplane_ray_interval(psi: f64, b: f64, ang: f64) -> (f64, f64) {
    let c = (ang - psi).cos();
    if c.abs() < 1e-300 {
        return if b >= 0.0 {
            (0.0, f64::INFINITY)
        } else {
            (f64::INFINITY, f64::INFINITY)
        };
    }
    let r0 = -b / c;
    if c > 0.0 {
        (r0.max(0.0), f64::INFINITY)
    } else if r0 > 0.0 {
        (0.0, r0)
    } else {
        (f64::INFINITY, f64::INFINITY)
    }
}

/// ∫ r e^{−r²/2} dr over [lo, hi], normalized by 2π later.
fn radial_mass(lo: f64, hi: f64) -> f64 {
    if !(hi > lo) {
        return 0.0;
    }
    let top = if hi.is_finite() {
        (-hi * hi / 2.0).exp()
    } else {
        0.0
    };
    (-lo * lo / 2.0).exp() - top
}

/// γ₂(wedge Δ halfplane) by an angular midpoint sweep with exact radial mass.
fn oracle_sym_diff(theta: f64, psi: f64, b: f64, slices: usize) -> f64 {
    let mut acc = 0.0;
    let da = 2.0 * PI / slices as f64;
    for i in 0..slices {
        let ang = (i as f64 + 0.5) * da;
        let in_wedge = wedge_contains(theta, ang);
        let (lo, hi) = halfplane_ray_interval(psi, b, ang);
        // XOR mass along the ray: the wedge holds the whole ray or none
        let ray_in_b = radial_mass(lo, hi);
        let ray_total = radial_mass(0.0, f64::INFINITY);
        acc += if in_wedge {
            ray_total - ray_in_b
        } else {
            ray_in_b
        };
    }
    acc * da / (2.0 * PI)
}

fn oracle_measure(theta: f64, slices: usize) -> f64 {
    let mut acc = 0.0;
    let da = 2.0 * PI / slices as f64;
    for i in 0..slices {
        let ang = (i as f64 + 0.5) * da;
        if wedge_contains(theta, ang) {
            acc += radial_mass(0.0, f64::INFINITY);
        }
    }
    acc * da / (2.0 * PI)
}

/// Boundary content of the two rays by Simpson on the planar density.
fn oracle_perimeter(samples: usize) -> f64 {
    let r_max = 9.0f64;
    let h = r_max / samples as f64;
    let density = |r: f64| (-r * r / 2.0).exp() / (2.0 * PI);
    let mut acc = density(0.0) + density(r_max);
    for i in 1..samples {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * density(i as f64 * h);
    }
    2.0 * acc * h / 3.0
}

/// Brute-force min over candidate half-planes: coarse grid then one
/// refinement pass around the argmin.
fn oracle_distance(theta: f64) -> f64 {
    let slices = 8192;
    let eval = |psi: f64, b: f64| oracle_sym_diff(theta, psi, b, slices);
    let mut best = (f64::INFINITY, 0.0, 0.0);
    let coarse = 0.05;
    for i in -8..=8 {
        for j in -8..=8 {
            let (psi, b) = (PI + i as f64 * coarse, j as f64 * coarse);
            let v = eval(psi, b);
            if v < best.0 {
                best = (v, psi, b);
            }
        }
    }
    let fine = coarse / 8.0;
    let (_, cp, cb) = best;
    for i in -9..=9 {
        for j in -9..=9 {
            let (psi, b) = (cp + i as f64 * fine, cb + j as f64 * fine);
            let v = eval(psi, b);
            if v < best.0 {
                best = (v, psi, b);
            }
        }
    }
    best.0
}

#[test]
fn wedge_pipeline_matches_radial_angular_oracle() {
    let state = SemigroupState::new(9);
    for &theta in &[0.2, 0.4, 0.6, 0.9, 1.2] {
        let set = isodef_core::sets::wedge(theta).unwrap();
        let report = set_deficit(&state, &set, &PerimeterRoute::ClosedForm).unwrap();

        let m_oracle = oracle_measure(theta, 1 << 21);
        assert!(
            (report.measure - m_oracle).abs() < 2e-6,
            "theta={theta}: measure {} vs oracle {m_oracle}",
            report.measure
        );
        let p_oracle = oracle_perimeter(20_000);
        assert!(
            (report.perimeter - p_oracle).abs() < 1e-10,
            "theta={theta}: perimeter {} vs oracle {p_oracle}",
            report.perimeter
        );

        // the bisector half-plane through the apex is feasible at
        // symmetric difference θ/(2π), but not optimal: pulling the
        // boundary line away from the apex trades a thin strip of wedge
        // mass for the heavy near-apex part of both excess sectors. The
        // brute-force min must sit strictly below the bisector value and
        // the pipeline fit must land on it within Monte Carlo resolution.
        let d_oracle = oracle_distance(theta);
        let bisector = theta / (2.0 * PI);
        assert!(
            d_oracle <= bisector + 1e-6,
            "theta={theta}: oracle distance {d_oracle} above feasible bisector {bisector}"
        );
        assert!(
            d_oracle > 0.25 * bisector,
            "theta={theta}: oracle distance {d_oracle} implausibly small vs bisector {bisector}"
        );

        let rule = isodef_core::mc_rule_antithetic(2, 1 << 19, 33 + theta.to_bits());
        let fit = isodef_core::fit_halfspace_set(&set, &rule, 6).unwrap();
        assert!(
            (fit.objective - d_oracle).abs() < 3e-3,
            "theta={theta}: fitted distance {} vs oracle {d_oracle}",
            fit.objective
        );
    }
}

#[test]
fn wedge_at_zero_is_the_halfspace_itself() {
    let state = SemigroupState::new(5);
    let set = isodef_core::sets::wedge(0.0).unwrap();
    let report = set_deficit(&state, &set, &PerimeterRoute::ClosedForm).unwrap();
    assert_eq!(report.deficit, 0.0);
    let rule = isodef_core::mc_rule_antithetic(2, 1 << 18, 4);
    let fit = isodef_core::fit_halfspace_set(&set, &rule, 6).unwrap();
    assert!(fit.objective <= 2e-3, "distance {}", fit.objective);
}

#[test]
fn offset_union_closed_forms_match_direct_integration() {
    let set = isodef_core::sets::offset_union(1.5).unwrap();
    let rule = isodef_core::mc_rule_antithetic(2, 1 << 20, 11);
    let (m, err) = rule
        .integrate_multi(1, |x: &[f64], out: &mut [f64]| {
            out[0] = if x[0] <= 0.0 || x[0] >= 1.5 { 1.0 } else { 0.0 };
        })
        .unwrap();
    let closed = set.closed_measure.unwrap();
    assert!(
        (m[0] - closed).abs() < 5.0 * err[0] + 1e-6,
        "measure {} vs {}",
        m[0],
        closed
    );
    // boundary = two lines x₁=0 and x₁=1.5 with 1-d Gaussian densities
    let expected = (2.0 * PI).powf(-0.5) * (1.0 + (-1.5f64 * 1.5 / 2.0).exp());
    assert!((set.closed_perimeter.unwrap() - expected).abs() < 1e-15);
}

#[test]
fn stability_wedge_curve_meets_the_gates() {
    let dir = tmp_dir("stab-wedge");
    let mut config = config_in(&dir);
    config.mc_samples = 1 << 19;
    let (curve, paths) = cmd_stability(&config).unwrap();

    assert_eq!(curve.family, "wedge");
    assert!(curve.points.len() >= 8, "kept {}", curve.points.len());
    assert!(curve.dropped.is_empty());
    for w in curve.points.windows(2) {
        assert!(w[0].parameter < w[1].parameter, "curve not sorted");
    }
    for p in &curve.points {
        assert!(p.delta > 0.0 && p.delta.is_finite());
        assert!(p.distance > 0.0 && p.distance.is_finite());
    }
    assert!(
        (0.3..=0.7).contains(&curve.slope),
        "slope {} outside [0.3, 0.7]",
        curve.slope
    );
    assert!(curve.spearman > 0.95, "spearman {}", curve.spearman);
    assert!(
        curve.bound_satisfied,
        "shape bound failed: C={}",
        curve.bound_constant
    );
    assert!(curve.slope_ci_low <= curve.slope && curve.slope <= curve.slope_ci_high);

    let csv = std::fs::read_to_string(&paths[0]).unwrap();
    assert!(csv.starts_with("parameter,delta,distance,delta_error,distance_error\n"));
    assert_eq!(csv.lines().count(), curve.points.len() + 1);
    let json = std::fs::read_to_string(&paths[1]).unwrap();
    let back: isodef_core::StabilityCurve = serde_json::from_str(&json).unwrap();
    assert_eq!(back.points.len(), curve.points.len());
    assert_eq!(back.slope, curve.slope);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn stability_csv_is_byte_reproducible() {
    let dir = tmp_dir("stab-repro");
    let mut config = config_in(&dir);
    config.mc_samples = 1 << 16;
    config.parameters = vec![0.3, 0.5, 0.8, 1.0, 1.2];
    let (a, _) = cmd_stability(&config).unwrap();
    let (b, _) = cmd_stability(&config).unwrap();
    assert_eq!(
        stability_csv(&a).into_bytes(),
        stability_csv(&b).into_bytes()
    );
    let mut other = config.clone();
    other.seed = 99;
    let (c, _) = cmd_stability(&other).unwrap();
    assert_ne!(
        stability_csv(&a).into_bytes(),
        stability_csv(&c).into_bytes()
    );
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn offset_union_family_runs_monotone() {
    let dir = tmp_dir("stab-union");
    let mut config = config_in(&dir);
    config.family = Some("offset-union".into());
    config.mc_samples = 1 << 17;
    let (curve, _) = cmd_stability(&config).unwrap();
    assert!(curve.points.len() >= 6);
    assert!(curve.spearman > 0.9, "spearman {}", curve.spearman);
    for p in &curve.points {
        assert!(p.delta > 0.0);
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn smoothed_family_runs() {
    let dir = tmp_dir("stab-smooth");
    let mut config = config_in(&dir);
    config.family = Some("smoothed-indicator".into());
    config.parameters = vec![0.3, 0.6, 0.9, 1.2];
    let (curve, _) = cmd_stability(&config).unwrap();
    assert_eq!(curve.points.len(), 4);
    assert!(curve.spearman > 0.9, "spearman {}", curve.spearman);
    for w in curve.points.windows(2) {
        assert!(
            w[0].delta < w[1].delta,
            "deficit not increasing in the angle: {} then {}",
            w[0].delta,
            w[1].delta
        );
        assert!(
            w[0].distance < w[1].distance,
            "distance not increasing in the angle: {} then {}",
            w[0].distance,
            w[1].distance
        );
    }
    for p in &curve.points {
        assert!(
            p.distance_error < 0.05 * p.distance + 1e-12,
            "quadrature orders disagree at angle {}: {} vs error {}",
            p.parameter,
            p.distance,
            p.distance_error
        );
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn unknown_family_is_rejected() {
    let mut config = ExperimentConfig::default();
    config.family = Some("torus".into());
    assert!(cmd_stability(&config).is_err());
}

#[test]
fn deficit_artifacts_for_function_and_set() {
    let dir = tmp_dir("artifact-deficit");
    let mut config = config_in(&dir);
    config.target = Some("phi-affine-e1".into());
    let (artifact, path) = cmd_deficit(&config).unwrap();
    assert_eq!(artifact.kind, "function");
    let report = artifact.function_report.unwrap();
    assert!(report.deficit.abs() < 1e-8, "deficit {}", report.deficit);
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("phi-affine-e1"));

    config.target = Some("ball(r=1)".into());
    let (artifact, _) = cmd_deficit(&config).unwrap();
    assert_eq!(artifact.kind, "set");
    assert!(artifact.set_report.unwrap().deficit > 0.0);

    config.target = Some("nope".into());
    assert!(cmd_deficit(&config).is_err());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn perimeter_estimators_agree_on_a_halfspace() {
    let dir = tmp_dir("artifact-perimeter");
    let mut config = config_in(&dir);
    config.target = Some("halfspace(b=0.5)".into());
    config.mc_samples = 1 << 22;
    let (artifact, path) = cmd_perimeter(&config).unwrap();
    let truth = (2.0 * PI).powf(-0.5) * (-0.125f64).exp();
    assert!(
        (artifact.minkowski.value - truth).abs() < 2e-3,
        "minkowski {} vs {truth}",
        artifact.minkowski.value
    );
    assert!(
        (artifact.semigroup.value - truth).abs() < 2e-3,
        "semigroup {} vs {truth}",
        artifact.semigroup.value
    );
    assert!(artifact.agree);
    assert!(path.exists());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn fit_artifact_recovers_a_smoothed_halfspace() {
    let dir = tmp_dir("artifact-fit");
    let mut config = config_in(&dir);
    config.target = Some("smooth-halfspace-t02".into());
    let (artifact, _) = cmd_fit(&config).unwrap();
    assert_eq!(artifact.kind, "phi-affine");
    let k = (-0.2f64).exp() / (1.0 - (-0.4f64).exp()).sqrt();
    let a = &artifact.result.a;
    assert!((a[0] + k).abs() < 1e-2, "a₀ {} vs {}", a[0], -k);
    assert!(a[1].abs() < 1e-2);
    assert!(artifact.result.b.abs() < 1e-2);
    assert!(artifact.result.objective < 1e-6);
    // rounding keeps the direction
    assert!(artifact.halfspace.a[0] < -0.99);
    std::fs::remove_dir_all(&dir).ok();
}
