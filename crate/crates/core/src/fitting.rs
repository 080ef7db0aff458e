//! Nearest half-space approximants on (ℝⁿ, γₙ): the best Φ(a·x + b) in
//! L²(γₙ) for a function, the best affine half-space for a set under
//! symmetric difference, and the rounding step between the two.
//!
//! Both fitters share one scheme: materialize the rule's nodes once, cache
//! the target values on them, and run a downhill simplex from several
//! starts. The objective is non-convex with an antipodal near-symmetry, so
//! the starts cover the coordinate directions ±eᵢ plus seeded random
//! directions, with the offset seeded from Φ⁻¹ of the measured mean. The
//! Φ-affine fit keeps ‖a‖ free (the magnitude encodes smoothing); the set
//! fit walks the unit sphere in spherical coordinates.

use crate::error::{Error, Result};
use crate::nelder_mead::nelder_mead;
use crate::quadrature::QuadratureRule;
use crate::scalar::{Phi, Phi_inv};
use crate::semigroup::FunctionHandle;
use crate::sets::{bivariate_phi, halfspace, SetHandle};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Optima whose objectives agree to this are tied; ties go to the
/// lexicographically largest a so outputs are deterministic.
const OBJECTIVE_TIE: f64 = 1e-9;
/// Simplex collapse tolerance.
const SIMPLEX_TOL: f64 = 1e-6;
/// Objective-evaluation budget per restart.
const MAX_EVALS: usize = 2000;
/// Stream for the random restarts beyond ±eᵢ.
const RANDOM_START_SEED: u64 = 0x5eed_f17;
/// Means are clamped this far from {0,1} before Φ⁻¹ seeds the offset.
const MEAN_CLAMP: f64 = 1e-12;

/// Affine half-space {x : a·x + b ≥ 0} with ‖a‖ = 1. a = 0 is the
/// constant-limit sentinel: everything when b ≥ 0, nothing when b < 0.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HalfSpace {
    pub a: Vec<f64>,
    pub b: f64,
}

impl HalfSpace {
    /// Normalize a and rescale b to match; a = 0 collapses to the sentinel
    /// with b reduced to its sign.
    pub fn new(a: Vec<f64>, b: f64) -> Self {
        let norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 && norm.is_finite() {
            Self {
                a: a.iter().map(|v| v / norm).collect(),
                b: b / norm,
            }
        } else {
            Self {
                a: vec![0.0; a.len()],
                b: if b >= 0.0 { 1.0 } else { -1.0 },
            }
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.a.iter().all(|&v| v == 0.0)
    }

    pub fn member(&self, x: &[f64]) -> bool {
        dot(&self.a, x) + self.b >= 0.0
    }

    /// γₙ-measure: Φ(b) for a unit normal, 0 or 1 for the sentinel.
    pub fn measure(&self) -> f64 {
        if self.is_degenerate() {
            if self.b >= 0.0 {
                1.0
            } else {
                0.0
            }
        } else {
            Phi(self.b)
        }
    }

    /// As a SetHandle. The sentinel has no normal direction to hand over.
    pub fn to_set(&self) -> Result<SetHandle> {
        if self.is_degenerate() {
            return Err(Error::InvalidInput(
                "degenerate half-space (a = 0) has no set form".into(),
            ));
        }
        halfspace(self.a.clone(), self.b)
    }
}

/// Round g = Φ(a·x + b) to its level-1/2 set {a·x + b ≥ 0}. The constant
/// limit a = 0 rounds to everything or nothing by the sign of b.
pub fn round_to_halfspace(a: &[f64], b: f64) -> HalfSpace {
    HalfSpace::new(a.to_vec(), b)
}

/// γₙ(P Δ Q) for two half-spaces, by the bivariate normal orthant formula;
/// sentinels reduce to measures of complements.
pub fn halfspace_symmetric_difference(p: &HalfSpace, q: &HalfSpace) -> Result<f64> {
    if p.is_degenerate() || q.is_degenerate() {
        let (full, other) = if p.is_degenerate() {
            (p.b >= 0.0, q)
        } else {
            (q.b >= 0.0, p)
        };
        return Ok(if full {
            1.0 - other.measure()
        } else {
            other.measure()
        });
    }
    if p.a.len() != q.a.len() {
        return Err(Error::DimensionMismatch {
            expected: p.a.len(),
            got: q.a.len(),
        });
    }
    let rho = dot(&p.a, &q.a).clamp(-1.0, 1.0);
    // (a_p·X, a_q·X) is bivariate standard normal with correlation ρ, so
    // γ(P ∩ Q) = P(U ≥ −b_p, V ≥ −b_q) = Φ₂(b_p, b_q; ρ)
    let inter = bivariate_phi(p.b, q.b, rho);
    Ok((p.measure() + q.measure() - 2.0 * inter).max(0.0))
}

/// One restart's summary inside a fit trace. `start` holds the optimizer's
/// packed coordinates: (a, b) for Φ-affine fits, (angles, b) for set fits.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RestartRecord {
    pub start: Vec<f64>,
    pub start_objective: f64,
    pub objective: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Best (a, b) found, with the per-restart trace. Φ-affine fits keep the
/// magnitude of a (it encodes smoothing); set fits return a unit a.
/// a = 0 with `degenerate` set flags the constant-limit sentinel.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    pub a: Vec<f64>,
    pub b: f64,
    pub objective: f64,
    pub restarts_used: usize,
    pub converged: bool,
    pub degenerate: bool,
    pub trace: Vec<RestartRecord>,
}

/// Least-squares fit of Φ(a·x + b) to f over the rule: minimizes
/// E(f − Φ(a·x+b))² with free (a, b) ∈ ℝⁿ×ℝ. When no fit beats the best
/// constant Φ(b), the constant-limit sentinel (a = 0) is returned with
/// that constant's objective.
pub fn fit_phi_affine(
    f: &FunctionHandle,
    rule: &QuadratureRule,
    restarts: usize,
) -> Result<FitResult> {
    let n = f.dim;
    if rule.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: rule.dim(),
        });
    }
    if restarts == 0 {
        return Err(Error::InvalidInput("fit needs at least one restart".into()));
    }
    let (nodes, weights) = rule.materialize()?;
    let count = weights.len();
    let fvals: Vec<f64> = (0..count)
        .map(|i| f.value(&nodes[i * n..(i + 1) * n]))
        .collect();
    if fvals.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "handle '{}' returned a non-finite value on a quadrature node",
            f.name
        )));
    }
    let mean: f64 = weights.iter().zip(&fvals).map(|(w, v)| w * v).sum();
    let b0 = Phi_inv(mean.clamp(MEAN_CLAMP, 1.0 - MEAN_CLAMP))?;

    let objective = |p: &[f64]| -> f64 {
        let (a, b) = p.split_at(n);
        let b = b[0];
        let mut acc = 0.0;
        for i in 0..count {
            let u = dot(a, &nodes[i * n..(i + 1) * n]) + b;
            let d = fvals[i] - Phi(u);
            acc += weights[i] * d * d;
        }
        acc
    };

    let starts = cartesian_starts(n, b0, restarts);
    let (best_p, mut result) = run_restarts(&objective, &starts, 0.35, |p| p.to_vec());
    let (a_best, _) = best_p.split_at(n);
    result.a = a_best.to_vec();
    result.b = best_p[n];

    // constant-limit comparison: g ≡ Φ(b) with b = Φ⁻¹(mean), pushed to
    // ±40 at the clamp so Φ(b) is exactly 0 or 1 there
    let b_sent = if mean <= MEAN_CLAMP {
        -40.0
    } else if mean >= 1.0 - MEAN_CLAMP {
        40.0
    } else {
        b0
    };
    let c = Phi(b_sent);
    let sent_obj: f64 = weights
        .iter()
        .zip(&fvals)
        .map(|(w, v)| w * (v - c) * (v - c))
        .sum();
    if sent_obj <= result.objective + 1e-12 {
        result.a = vec![0.0; n];
        result.b = b_sent;
        result.objective = sent_obj;
        result.degenerate = true;
        result.converged = true;
    }
    Ok(result)
}

/// Best affine half-space for a set under symmetric difference: minimizes
/// ∫|1_A − 1_B| over B = {a·x + b ≥ 0} with a on the unit sphere
/// (spherical coordinates) and b free. When neither the empty nor any
/// fitted half-space beats the trivial competitors (∅ and ℝⁿ), the
/// sentinel is returned.
pub fn fit_halfspace_set(
    set: &SetHandle,
    rule: &QuadratureRule,
    restarts: usize,
) -> Result<FitResult> {
    let n = set.dim;
    if n < 2 {
        return Err(Error::InvalidInput(
            "set fitting needs dimension at least 2".into(),
        ));
    }
    if rule.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: rule.dim(),
        });
    }
    if restarts == 0 {
        return Err(Error::InvalidInput("fit needs at least one restart".into()));
    }
    let (nodes, weights) = rule.materialize()?;
    let count = weights.len();
    let memb: Vec<bool> = (0..count)
        .map(|i| set.member(&nodes[i * n..(i + 1) * n]))
        .collect();
    let measure: f64 = weights
        .iter()
        .zip(&memb)
        .map(|(w, &m)| if m { *w } else { 0.0 })
        .sum();
    let b0 = Phi_inv(measure.clamp(MEAN_CLAMP, 1.0 - MEAN_CLAMP))?;

    let objective = |p: &[f64]| -> f64 {
        let a = direction_from_angles(&p[..n - 1]);
        let b = p[n - 1];
        let mut acc = 0.0;
        for i in 0..count {
            let inside = dot(&a, &nodes[i * n..(i + 1) * n]) + b >= 0.0;
            if inside != memb[i] {
                acc += weights[i];
            }
        }
        acc
    };

    let starts = spherical_starts(n, b0, restarts);
    // tie-break on the unpacked (a, b), not the raw angles
    let (best_p, mut result) = run_restarts(&objective, &starts, 0.25, |p| {
        let mut key = direction_from_angles(&p[..n - 1]);
        key.push(p[n - 1]);
        key
    });
    result.a = direction_from_angles(&best_p[..n - 1]);
    result.b = best_p[n - 1];

    // trivial competitors: γ(A Δ ∅) = γ(A), γ(A Δ ℝⁿ) = 1 − γ(A)
    let (sent_obj, sent_b) = if measure <= 1.0 - measure {
        (measure, -1.0)
    } else {
        (1.0 - measure, 1.0)
    };
    if sent_obj <= result.objective + 1e-12 {
        result.a = vec![0.0; n];
        result.b = sent_b;
        result.objective = sent_obj;
        result.degenerate = true;
        result.converged = true;
    }
    Ok(result)
}

/// Run the simplex from every start in parallel, then pick the winner:
/// lowest objective, ties within OBJECTIVE_TIE broken by lexicographically
/// largest `key` (the unpacked (a, b)). Returns the winning parameter
/// vector and a FitResult with a/b left for the caller to unpack.
fn run_restarts<F, K>(
    objective: &F,
    starts: &[Vec<f64>],
    step: f64,
    key: K,
) -> (Vec<f64>, FitResult)
where
    F: Fn(&[f64]) -> f64 + Sync,
    K: Fn(&[f64]) -> Vec<f64>,
{
    let runs: Vec<(f64, crate::nelder_mead::NelderMeadResult)> = starts
        .par_iter()
        .map(|s| {
            (
                objective(s),
                nelder_mead(objective, s, step, SIMPLEX_TOL, MAX_EVALS),
            )
        })
        .collect();

    let best_obj = runs
        .iter()
        .map(|(_, r)| r.value)
        .fold(f64::INFINITY, f64::min);
    let mut winner: Option<(usize, Vec<f64>)> = None;
    for (i, (_, r)) in runs.iter().enumerate() {
        if r.value > best_obj + OBJECTIVE_TIE {
            continue;
        }
        let k = key(&r.x);
        match &winner {
            Some((_, kw)) if !lex_less(kw, &k) => {}
            _ => winner = Some((i, k)),
        }
    }
    let winner = winner.expect("at least one restart ran").0;

    let trace: Vec<RestartRecord> = starts
        .iter()
        .zip(&runs)
        .map(|(s, (f0, r))| RestartRecord {
            start: s.clone(),
            start_objective: *f0,
            objective: r.value,
            evals: r.evals,
            converged: r.converged,
        })
        .collect();
    let win = &runs[winner].1;
    let result = FitResult {
        a: Vec::new(),
        b: 0.0,
        objective: win.value,
        restarts_used: starts.len(),
        converged: win.converged,
        degenerate: false,
        trace,
    };
    (win.x.clone(), result)
}

/// True when p < q lexicographically under total_cmp.
fn lex_less(p: &[f64], q: &[f64]) -> bool {
    for (a, b) in p.iter().zip(q) {
        match a.total_cmp(b) {
            std::cmp::Ordering::Less => return true,
            std::cmp::Ordering::Greater => return false,
            std::cmp::Ordering::Equal => continue,
        }
    }
    false
}

/// Starts for the Cartesian (a, b) fit: ±eᵢ interleaved, then seeded
/// random (a ~ N(0,I), b jittered around b₀).
fn cartesian_starts(n: usize, b0: f64, restarts: usize) -> Vec<Vec<f64>> {
    let mut starts = Vec::with_capacity(restarts);
    for i in 0..n {
        for sign in [1.0, -1.0] {
            if starts.len() == restarts {
                return starts;
            }
            let mut p = vec![0.0; n + 1];
            p[i] = sign;
            p[n] = b0;
            starts.push(p);
        }
    }
    let mut k = 0u64;
    while starts.len() < restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(RANDOM_START_SEED.wrapping_add(k));
        let mut p: Vec<f64> = (0..n)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        p.push(b0 + 0.5 * rng.sample::<f64, _>(StandardNormal));
        starts.push(p);
        k += 1;
    }
    starts
}

/// Starts for the spherical (angles, b) fit: angle vectors hitting ±eᵢ,
/// then seeded random angles.
fn spherical_starts(n: usize, b0: f64, restarts: usize) -> Vec<Vec<f64>> {
    let mut starts = Vec::with_capacity(restarts);
    for i in 0..n {
        for negative in [false, true] {
            if starts.len() == restarts {
                return starts;
            }
            let mut p = axis_angles(n, i, negative);
            p.push(b0);
            starts.push(p);
        }
    }
    let mut k = 0u64;
    while starts.len() < restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(RANDOM_START_SEED.wrapping_add(0x1000 + k));
        let mut p: Vec<f64> = (0..n - 1)
            .map(|_| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
            .collect();
        p.push(b0 + 0.5 * rng.sample::<f64, _>(StandardNormal));
        starts.push(p);
        k += 1;
    }
    starts
}

/// Spherical-coordinate angles (length n−1) whose direction is ±e_axis.
fn axis_angles(n: usize, axis: usize, negative: bool) -> Vec<f64> {
    use std::f64::consts::{FRAC_PI_2, PI};
    let mut th = vec![0.0; n - 1];
    for t in th.iter_mut().take(axis.min(n - 1)) {
        *t = FRAC_PI_2;
    }
    if negative {
        if axis < n - 1 {
            th[axis] = PI;
        } else {
            th[n - 2] = -FRAC_PI_2;
        }
    }
    th
}

/// Unit vector from spherical coordinates:
/// a₀ = cos θ₀, a₁ = sin θ₀ cos θ₁, …, a_{n−1} = sin θ₀ ⋯ sin θ_{n−2}.
pub fn direction_from_angles(theta: &[f64]) -> Vec<f64> {
    let n = theta.len() + 1;
    let mut a = vec![0.0; n];
    let mut sines = 1.0;
    for (i, &t) in theta.iter().enumerate() {
        a[i] = sines * t.cos();
        sines *= t.sin();
    }
    a[n - 1] = sines;
    a
}

fn dot(a: &[f64], x: &[f64]) -> f64 {
    a.iter().zip(x).map(|(u, v)| u * v).sum()
}
