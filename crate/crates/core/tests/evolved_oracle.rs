//! Every closed-form evolved jet is checked three ways before the pipeline
//! is allowed to trust it: the value against the generic inner-integral
//! route (which sees only membership and shares no formulas), the gradient
//! against central differences of the value, and the Hessian against
//! central differences of the gradient.

use isodef_core::semigroup::{pt_eval, pt_jet, SemigroupState};
use isodef_core::sets::{ball, corner, halfspace, slab, wedge, SetHandle};
use isodef_core::Error;

fn evolved_jet(set: &SetHandle, t: f64, x: &[f64]) -> isodef_core::Jet {
    let state = SemigroupState::new(11);
    pt_jet(&state, &set.indicator(), t, x).unwrap()
}

/// Central-difference gradient of the evolved value.
fn fd_gradient(set: &SetHandle, t: f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut up = x.to_vec();
            up[i] += h;
            let mut dn = x.to_vec();
            dn[i] -= h;
            (evolved_jet(set, t, &up).value - evolved_jet(set, t, &dn).value) / (2.0 * h)
        })
        .collect()
}

/// Central-difference Hessian row i from the evolved gradient.
fn fd_hessian_row(set: &SetHandle, t: f64, x: &[f64], i: usize, h: f64) -> Vec<f64> {
    let mut up = x.to_vec();
    up[i] += h;
    let mut dn = x.to_vec();
    dn[i] -= h;
    let gu = evolved_jet(set, t, &up).gradient;
    let gd = evolved_jet(set, t, &dn).gradient;
    gu.iter()
        .zip(gd)
        .map(|(u, d)| (u - d) / (2.0 * h))
        .collect()
}

fn check_jet_consistency(set: &SetHandle, t: f64, x: &[f64], tol: f64) {
    let jet = evolved_jet(set, t, x);
    let n = x.len();
    let fd_g = fd_gradient(set, t, x, 1e-5);
    for i in 0..n {
        let scale = jet.gradient[i].abs().max(1.0);
        assert!(
            (jet.gradient[i] - fd_g[i]).abs() <= tol * scale,
            "{} t={t} x={x:?}: grad[{i}] {} vs fd {}",
            set.name,
            jet.gradient[i],
            fd_g[i]
        );
        let fd_h = fd_hessian_row(set, t, x, i, 1e-5);
        for j in 0..n {
            let scale = jet.hessian[i * n + j].abs().max(1.0);
            assert!(
                (jet.hessian[i * n + j] - fd_h[j]).abs() <= 10.0 * tol * scale,
                "{} t={t} x={x:?}: hess[{i},{j}] {} vs fd {}",
                set.name,
                jet.hessian[i * n + j],
                fd_h[j]
            );
        }
    }
}

fn check_value_against_generic_mc(set: &SetHandle, t: f64, x: &[f64]) {
    let state = SemigroupState::new(2024);
    let rough = set.indicator().without_evolved();
    let generic = pt_eval(&state, &rough, t, x).unwrap();
    let closed = evolved_jet(set, t, x).value;
    // 20k antithetic samples put the Monte Carlo error near 3e-3
    assert!(
        (generic - closed).abs() < 0.02,
        "{} t={t} x={x:?}: closed {closed} vs generic {generic}",
        set.name
    );
}

fn all_shapes() -> Vec<SetHandle> {
    vec![
        halfspace(vec![1.0, 0.0], 0.5).unwrap(),
        halfspace(vec![0.6, -0.8], -0.3).unwrap(),
        ball(2, 1.0).unwrap(),
        slab(2, 0.5).unwrap(),
        corner(0.2, -0.1).unwrap(),
        wedge(0.7).unwrap(),
    ]
}

#[test]
fn evolved_jets_are_fd_consistent() {
    let points = [[0.3f64, -0.4], [1.1, 0.8], [-0.7, 0.2]];
    for set in all_shapes() {
        for t in [0.05, 0.3, 1.0] {
            for x in &points {
                check_jet_consistency(&set, t, x, 1e-7);
            }
        }
    }
}

#[test]
fn evolved_values_match_generic_sampling_route() {
    for set in all_shapes() {
        for (t, x) in [(0.1, [0.5f64, -0.2]), (0.6, [-0.8, 0.4])] {
            check_value_against_generic_mc(&set, t, &x);
        }
    }
}

#[test]
fn evolved_limits_interpolate_indicator_and_measure() {
    for set in all_shapes() {
        let inside = evolved_jet(&set, 1e-8, &set.interior_point).value;
        assert!(
            inside > 1.0 - 1e-6,
            "{}: P_t at interior point for tiny t gave {inside}",
            set.name
        );
        let far = evolved_jet(&set, 25.0, &[0.33, -0.41]).value;
        let measure = set.closed_measure.unwrap();
        assert!(
            (far - measure).abs() < 1e-8,
            "{}: P_t for large t gave {far}, measure {measure}",
            set.name
        );
    }
}

#[test]
fn disc_center_value_matches_chi_square() {
    // at x = 0 the evolved disc value is P(χ²₂ ≤ (r/s)²) = 1 − e^{−ρ²/2}
    let set = ball(2, 1.0).unwrap();
    for t in [0.05f64, 0.2, 0.8] {
        let s2 = 1.0 - (-2.0 * t).exp();
        let rho_sq = 1.0 / s2;
        let expect = 1.0 - (-rho_sq / 2.0).exp();
        let got = evolved_jet(&set, t, &[0.0, 0.0]).value;
        assert!(
            (got - expect).abs() < 1e-12,
            "t={t}: center value {got} vs {expect}"
        );
    }
}

#[test]
fn disc_jet_is_isotropic_at_center() {
    let set = ball(2, 1.0).unwrap();
    let jet = evolved_jet(&set, 0.3, &[0.0, 0.0]);
    assert_eq!(jet.gradient, vec![0.0, 0.0]);
    assert!((jet.hessian[0] - jet.hessian[3]).abs() < 1e-12);
    assert_eq!(jet.hessian[1], 0.0);
    assert!(
        jet.hessian[0] < 0.0,
        "radially decreasing profile at center"
    );
    // rotating x must rotate the jet: compare |grad| at two points with the
    // same radius
    let ja = evolved_jet(&set, 0.3, &[0.9, 0.0]);
    let jb = evolved_jet(&set, 0.3, &[0.9 / 2f64.sqrt(), 0.9 / 2f64.sqrt()]);
    let na = ja.grad_norm_sq().sqrt();
    let nb = jb.grad_norm_sq().sqrt();
    assert!((na - nb).abs() < 1e-11 * na.max(1e-30));
    assert!((ja.value - jb.value).abs() < 1e-12);
}

#[test]
fn generic_smooth_route_matches_polynomial_closed_form() {
    // P_t(x₁²) = e^{−2t}x₁² + (1 − e^{−2t}); the Gauss-Hermite inner rule
    // integrates this exactly, so the generic route must hit it to
    // round-off.
    let state = SemigroupState::new(5);
    let f = isodef_core::FunctionHandle::new(2, "x1_sq", |x: &[f64]| x[0] * x[0]);
    let t = 0.45;
    let lam = (-2.0f64 * t).exp();
    let x = [0.8, -0.3];
    let jet = pt_jet(&state, &f, t, &x).unwrap();
    assert!((jet.value - (lam * x[0] * x[0] + 1.0 - lam)).abs() < 1e-12);
    assert!((jet.gradient[0] - 2.0 * lam * x[0]).abs() < 1e-12);
    assert!(jet.gradient[1].abs() < 1e-12);
    assert!((jet.hessian[0] - 2.0 * lam).abs() < 1e-12);
    assert!(jet.hessian[3].abs() < 1e-12);
}

#[test]
fn generic_smooth_route_matches_gaussian_composite_closed_form() {
    // P_t Φ(a·x + b) = Φ((e^{−t} a·x + b) / √(1 + (1−e^{−2t})‖a‖²))
    let state = SemigroupState::new(5);
    let (a, b) = ([0.8f64, -0.6], 0.3);
    let f = isodef_core::FunctionHandle::new(2, "phi_affine", move |x: &[f64]| {
        isodef_core::scalar::Phi(a[0] * x[0] + a[1] * x[1] + b)
    });
    let t = 0.35f64;
    let c = (-t).exp();
    let s2 = 1.0 - c * c;
    let norm_sq = a[0] * a[0] + a[1] * a[1];
    let x = [0.4, 1.1];
    let expect = isodef_core::scalar::Phi(
        (c * (a[0] * x[0] + a[1] * x[1]) + b) / (1.0 + s2 * norm_sq).sqrt(),
    );
    let got = pt_eval(&state, &f, t, &x).unwrap();
    assert!(
        (got - expect).abs() < 1e-9,
        "generic {got} vs closed {expect}"
    );
}

#[test]
fn time_zero_derivatives_are_refused_generically() {
    let state = SemigroupState::new(5);
    let f = isodef_core::FunctionHandle::new(1, "plain", |x: &[f64]| x[0].tanh());
    assert!((pt_eval(&state, &f, 0.0, &[0.7]).unwrap() - 0.7f64.tanh()).abs() < 1e-15);
    match pt_jet(&state, &f, 0.0, &[0.7]) {
        Err(Error::DivergentDerivative) => {}
        other => panic!("expected divergent-derivative refusal, got {other:?}"),
    }
}
