//! Deficit pipeline against closed forms: the Φ-affine family has zero
//! deficit, half-space boundary measure is φ(b), ball and slab perimeters
//! have frozen reference values, and both boundary estimators must land on
//! them independently.

use isodef_core::deficit::{
    boundary_measure_minkowski, boundary_measure_semigroup, ck_integrand, ck_lower_bound, deficit,
    set_deficit, PerimeterRoute,
};
use isodef_core::quadrature::gauss_hermite_rule;
use isodef_core::scalar::phi;
use isodef_core::semigroup::{FunctionHandle, SemigroupState};
use isodef_core::sets::{ball, halfspace, slab, wedge};
use isodef_core::zoo;

fn state() -> SemigroupState {
    SemigroupState::new(0xD0_5E71)
}

/// {x₁ ≤ b} as a set handle.
fn left_halfspace(b: f64) -> isodef_core::SetHandle {
    halfspace(vec![-1.0, 0.0], b).unwrap()
}

#[test]
fn deficit_vanishes_on_the_extremal_family() {
    for f in zoo::functions().unwrap() {
        if f.name.starts_with("poly") {
            continue;
        }
        // the smoothed members carry ‖a‖ = k_t ≈ 3, whose Hermite tail
        // decays like ((k²−1)/(k²+1))^p: GH-40 leaves ~2e-4, GH-150 ~1e-13
        let points = if f.name.starts_with("smooth") {
            150
        } else {
            40
        };
        let rule = gauss_hermite_rule(f.dim, points).unwrap();
        let rep = deficit(&f, &rule).unwrap();
        assert!(
            rep.deficit.abs() < 1e-8,
            "{}: deficit {:.3e}",
            f.name,
            rep.deficit
        );
        assert!(rep.mean <= 0.5 + 1e-15, "{}: analyzed mean > 1/2", f.name);
    }
}

#[test]
fn deficit_positive_on_non_family_members() {
    for f in zoo::functions().unwrap() {
        if !f.name.starts_with("poly") {
            continue;
        }
        let rule = gauss_hermite_rule(f.dim, 40).unwrap();
        let rep = deficit(&f, &rule).unwrap();
        assert!(
            rep.deficit > 1e-9,
            "{}: deficit {:.3e} not strictly positive",
            f.name,
            rep.deficit
        );
        assert!(rep.deficit < 0.1, "{}: deficit {:.3e}", f.name, rep.deficit);
    }
}

#[test]
fn deficit_is_flip_invariant() {
    // tilt has mean Φ(0.3/√2) > 1/2, so the pipeline analyzes 1−f
    let f = zoo::phi_affine("tilt", vec![0.8, -0.6], 0.3);
    let rule = gauss_hermite_rule(2, 40).unwrap();
    let rep = deficit(&f, &rule).unwrap();
    assert!(rep.flipped);
    assert!((rep.mean - (1.0 - f.known_mean.unwrap())).abs() < 1e-15);

    let p = zoo::normalized_poly(2, 1).unwrap();
    let base = deficit(&p, &rule).unwrap();
    let q_inner = zoo::normalized_poly(2, 1).unwrap();
    let q_grad = zoo::normalized_poly(2, 1).unwrap();
    let flipped = FunctionHandle::new(2, "one-minus-poly-1", move |x: &[f64]| {
        1.0 - q_inner.value(x)
    })
    .with_unit_range()
    .with_gradient(move |x: &[f64]| {
        q_grad
            .gradient_at(x)
            .unwrap()
            .into_iter()
            .map(|g| -g)
            .collect()
    });
    let rep2 = deficit(&flipped, &rule).unwrap();
    assert!(
        (base.deficit - rep2.deficit).abs() < 1e-10,
        "flip changed deficit: {:.3e} vs {:.3e}",
        base.deficit,
        rep2.deficit
    );
}

#[test]
fn halfspace_boundary_measure_both_routes() {
    let st = state();
    for b in [0.0, 0.5, 1.0] {
        let set = left_halfspace(b);
        let truth = phi(b);

        let mink = boundary_measure_minkowski(&set, &[0.05, 0.1], 64_000_000, 0xAB1).unwrap();
        assert!(
            (mink.value - truth).abs() < 2e-3,
            "minkowski b={b}: {} vs {}",
            mink.value,
            truth
        );

        let semi = boundary_measure_semigroup(&st, &set, &[0.02, 0.01, 0.005]).unwrap();
        assert!(
            (semi.value - truth).abs() < 2e-3,
            "semigroup b={b}: {} vs {}",
            semi.value,
            truth
        );
    }
}

#[test]
fn ball_and_slab_perimeters_match_frozen_references() {
    let st = state();
    // r e^{−r²/2} at r=1 and 2φ(1/2)
    let ball_ref = 0.606_530_659_712_633_4;
    let slab_ref = 0.704_130_653_528_599_5;

    let b = ball(2, 1.0).unwrap();
    assert!((b.closed_perimeter.unwrap() - ball_ref).abs() < 1e-15);
    let mink = boundary_measure_minkowski(&b, &[0.05, 0.1], 64_000_000, 0xB411).unwrap();
    assert!(
        (mink.value - ball_ref).abs() < 3e-3,
        "ball minkowski {} vs {ball_ref}",
        mink.value
    );
    let semi = boundary_measure_semigroup(&st, &b, &[0.02, 0.01, 0.005]).unwrap();
    assert!(
        (semi.value - ball_ref).abs() < 3e-3,
        "ball semigroup {} vs {ball_ref}",
        semi.value
    );

    let s = slab(2, 0.5).unwrap();
    assert!((s.closed_perimeter.unwrap() - slab_ref).abs() < 1e-15);
    let mink = boundary_measure_minkowski(&s, &[0.05, 0.1], 64_000_000, 0x51AB).unwrap();
    assert!(
        (mink.value - slab_ref).abs() < 3e-3,
        "slab minkowski {} vs {slab_ref}",
        mink.value
    );
    let semi = boundary_measure_semigroup(&st, &s, &[0.02, 0.01, 0.005]).unwrap();
    assert!(
        (semi.value - slab_ref).abs() < 3e-3,
        "slab semigroup {} vs {slab_ref}",
        semi.value
    );
}

#[test]
fn halfspace_set_deficit_is_zero() {
    let st = state();
    for b in [0.0, 0.5, 1.0] {
        let set = left_halfspace(b);
        let closed = set_deficit(&st, &set, &PerimeterRoute::ClosedForm).unwrap();
        assert!(
            closed.deficit.abs() < 1e-14,
            "closed-form b={b}: {}",
            closed.deficit
        );

        let mink = set_deficit(
            &st,
            &set,
            &PerimeterRoute::Minkowski {
                radii: vec![0.05, 0.1],
                samples: 64_000_000,
                seed: 0xDEF1C17,
            },
        )
        .unwrap();
        assert!(
            mink.deficit.abs() < 2e-3,
            "minkowski b={b}: {}",
            mink.deficit
        );

        let semi = set_deficit(
            &st,
            &set,
            &PerimeterRoute::Semigroup {
                t_list: vec![0.02, 0.01, 0.005],
            },
        )
        .unwrap();
        assert!(
            semi.deficit.abs() < 2e-3,
            "semigroup b={b}: {}",
            semi.deficit
        );
    }
}

#[test]
fn minkowski_estimate_is_seed_reproducible() {
    let set = left_halfspace(0.5);
    let a = boundary_measure_minkowski(&set, &[0.05, 0.1], 2_000_000, 7).unwrap();
    let b = boundary_measure_minkowski(&set, &[0.05, 0.1], 2_000_000, 7).unwrap();
    assert_eq!(a.value.to_bits(), b.value.to_bits());
    assert_eq!(a.steps, b.steps);
    let c = boundary_measure_minkowski(&set, &[0.05, 0.1], 2_000_000, 8).unwrap();
    assert_ne!(a.value.to_bits(), c.value.to_bits());
}

#[test]
fn semigroup_route_beats_its_rawest_step() {
    let st = state();
    // the half-space is extremal at every t, so its raw steps are pure
    // quadrature noise and no extrapolation should fire
    let set = left_halfspace(0.5);
    let est = boundary_measure_semigroup(&st, &set, &[0.02, 0.01, 0.005]).unwrap();
    assert!(
        (est.value - phi(0.5)).abs() < 1e-6,
        "halfspace value {}",
        est.value
    );

    // the ball has a genuine t-bias: extrapolation must beat the coarsest
    // raw step and the measured order must be plausible
    let b = ball(2, 1.0).unwrap();
    let truth = b.closed_perimeter.unwrap();
    let est = boundary_measure_semigroup(&st, &b, &[0.02, 0.01, 0.005]).unwrap();
    let coarsest_err = (est.steps[0].1 - truth).abs();
    assert!(
        (est.value - truth).abs() <= coarsest_err,
        "extrapolation did not help: {} vs coarsest {}",
        (est.value - truth).abs(),
        coarsest_err
    );
    if let Some(order) = est.order {
        assert!(
            (0.2..4.0).contains(&order),
            "implausible measured order {order}"
        );
    }
}

#[test]
fn ck_machinery_is_finite_and_positive() {
    let st = state();
    let w = wedge(0.7).unwrap();
    let f = w.indicator();
    let outer = gauss_hermite_rule(2, 60).unwrap();
    let (v, _) = ck_integrand(&st, &f, 0.3, &outer).unwrap();
    assert!(v.is_finite() && v > 0.0, "ck integrand {v}");
    let grid = [0.05, 0.1, 0.2, 0.4, 0.8];
    let lb = ck_lower_bound(&st, &f, &grid, &outer).unwrap();
    assert!(lb.is_finite() && lb > 0.0, "ck lower bound {lb}");
}

#[test]
fn gradient_is_required_for_bobkov() {
    let f = FunctionHandle::new(2, "no-grad", |x: &[f64]| {
        0.5 + 0.1 * (x[0].sin() * x[1].cos())
    })
    .with_unit_range();
    let rule = gauss_hermite_rule(2, 10).unwrap();
    let err = isodef_core::deficit::bobkov_functional(&f, &rule).unwrap_err();
    let msg = format!("{err}");
    assert!(msg.contains("no-grad"), "unexpected error: {msg}");
}
