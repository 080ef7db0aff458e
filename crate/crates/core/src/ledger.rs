//! Named registry of numerical inequality checks over the example zoo.
//!
//! Each check produces CheckResult records oriented so the inequality reads
//! lhs ≤ rhs; margin = rhs − lhs. Assert-mode checks carry an explicit
//! constant and must pass within tolerance; report-mode checks estimate an
//! unspecified constant and always pass. Tolerance policy: max(1e−8, 5×
//! propagated quadrature error), except the spectral identity which gets a
//! fixed 1e−12. Gauss-Hermite error is propagated as the delta between two
//! rule orders; Monte Carlo error as the sample standard error.

use crate::error::{Error, Result};
use crate::hermite::{
    multi_indices, semigroup_spectral, tail_weight, MultiIndex, SpectralFunction,
};
use crate::quadrature::{gauss_hermite_rule, mc_rule_antithetic, QuadratureRule};
use crate::scalar::{iso_I, iso_I_clamped, phi};
use crate::semigroup::{h_jet, pt_eval, pt_jet, FunctionHandle, SemigroupState};
use crate::sets::{halfspace, SetHandle};
use crate::{deficit, zoo};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

const TOL_FLOOR: f64 = 1e-8;
const IDENTITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CheckMode {
    #[serde(rename = "assert")]
    Assert,
    #[serde(rename = "report-constant")]
    ReportConstant,
}

/// One executed check. The inequality is oriented lhs ≤ rhs, so margin =
/// rhs − lhs and pass ⇔ margin ≥ −tolerance in assert mode; report mode
/// always passes and records the measured constant.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckResult {
    pub check: String,
    pub input: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub mode: CheckMode,
    pub empirical_constant: Option<f64>,
    pub tolerance: f64,
    pub seed: u64,
    pub pass: bool,
    pub statement: String,
}

impl CheckResult {
    fn assert(
        check: &str,
        input: String,
        statement: &str,
        lhs: f64,
        rhs: f64,
        tolerance: f64,
        seed: u64,
    ) -> CheckResult {
        let margin = rhs - lhs;
        CheckResult {
            check: check.to_string(),
            input,
            lhs,
            rhs,
            margin,
            mode: CheckMode::Assert,
            empirical_constant: None,
            tolerance,
            seed,
            pass: margin >= -tolerance,
            statement: statement.to_string(),
        }
    }

    fn report(
        check: &str,
        input: String,
        statement: &str,
        lhs: f64,
        rhs: f64,
        constant: f64,
        tolerance: f64,
        seed: u64,
    ) -> CheckResult {
        CheckResult {
            check: check.to_string(),
            input,
            lhs,
            rhs,
            margin: rhs - lhs,
            mode: CheckMode::ReportConstant,
            empirical_constant: Some(constant),
            tolerance,
            seed,
            pass: true,
            statement: statement.to_string(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LedgerConfig {
    pub seed: u64,
    /// Sample count for every Monte Carlo based check.
    pub mc_samples: u64,
}

impl Default for LedgerConfig {
    fn default() -> Self {
        LedgerConfig {
            seed: 1,
            mc_samples: 1 << 20,
        }
    }
}

fn tol_from(err: f64) -> f64 {
    (5.0 * err).max(TOL_FLOOR)
}

/// Deterministic per-check seed: config seed folded with the check and
/// input names, so results are independent of execution order.
fn derive_seed(base: u64, check: &str, input: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in check.bytes().chain([b':']).chain(input.bytes()) {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h ^ base
}

fn ou_k(t: f64) -> f64 {
    let c = (-t).exp();
    c / (1.0 - c * c).sqrt()
}

/// y√(log(1/y)) continued by 0 at y = 0.
fn xsqrtlog(y: f64) -> f64 {
    if y <= 0.0 {
        0.0
    } else {
        y * (1.0 / y).ln().max(0.0).sqrt()
    }
}

/// Two-order Gauss-Hermite integration: value from the fine rule, error
/// from the coarse-to-fine delta. `steep` selects the high-order pair used
/// for sharply smoothed members whose Hermite tails decay slowly.
fn gh_refined<G>(dim: usize, m: usize, steep: bool, g: &G) -> Result<(Vec<f64>, Vec<f64>)>
where
    G: Fn(&[f64], &mut [f64]) + Sync,
{
    let (lo, hi) = match (dim, steep) {
        (_, true) => (100, 150),
        (3, _) => (24, 32),
        _ => (40, 60),
    };
    let coarse = gauss_hermite_rule(dim, lo)?.integrate_multi_seq(m, g)?;
    let fine = gauss_hermite_rule(dim, hi)?.integrate_multi_seq(m, g)?;
    let errs = fine
        .0
        .iter()
        .zip(&coarse.0)
        .map(|(a, b)| (a - b).abs())
        .collect();
    Ok((fine.0, errs))
}

fn is_steep(f: &FunctionHandle) -> bool {
    f.name.starts_with("smooth")
}

fn mean_of(f: &FunctionHandle, rule: &QuadratureRule) -> Result<(f64, f64)> {
    match f.known_mean {
        Some(m) => Ok((m, 0.0)),
        None => rule.integrate_seq(&|x: &[f64]| f.value(x)),
    }
}

const STMT_BOBKOV: &str = "I(E f) ≤ E √(I²(f) + ‖∇f‖²)";
const STMT_ISO: &str = "I(γₙ(A)) ≤ γₙ⁺(A)";
const STMT_POINCARE: &str = "min_{a,b} E(f − a·x − b)² ≤ E ‖H(f)‖²_F";
const STMT_GRAD_SQRT2: &str = "‖∇f_t‖ ≤ √2 k_t f̃_t √(log(1/f̃_t)),  f̃_t = min(f_t, 1−f_t)";
const STMT_GRAD_PROFILE: &str = "‖∇f_t‖ ≤ c k_t I(f_t)";
const STMT_GRAD_H: &str = "‖∇h_t‖ ≤ c k_t,  h_t = Φ⁻¹(f_t)";
const STMT_REV_HOLDER: &str = "(E √f)² (E g⁻¹)⁻¹ ≤ E fg   [p = 1/2]";
const STMT_REV_HYPER: &str = "(E f^q)^{1/q} ≤ (E (P_t f)^p)^{1/p},  q = 1 + e^{−2t}(p−1)";
const STMT_POST_REVERSE: &str = "c I(E f)² (E ‖H(h_t)‖_F)² ≤ E(φ(h_t) ‖H(h_t)‖²_F)";
const STMT_CHAOS: &str = "(E |YᵀAY|^p)^{1/p} ≤ c p ‖A‖_F";
const STMT_HESS_MOMENT: &str = "(E ‖H(h_t)‖^p_F)^{1/p} ≤ c k_t² ((1+k_t)√(log(1/E f)) + √p k_t)";
const STMT_MEDIAN_MEAN: &str = "E f_t ≤ 2 M^{(1/(1+k_t))²},  M a median of f_t";
const STMT_LEDOUX: &str = "E f(f − P_t f) ≤ c √t E ‖∇f‖";
const STMT_PULL_BACK: &str = "E f² ≤ c max{1, K} √(t / log(1/ε)),  K = E‖∇f‖, ε = E(P_t f)²";
const STMT_S_SMALL: &str = "c min{(E f_s)², √s} E f_s ≤ E(f_s − 1_B)²";
const STMT_F_FS_IDENTITY: &str = "E(f − f_s)² = Σ_α b_α² (1 − e^{−s|α|})²";
const STMT_F_FS_DECAY: &str = "E(f − f_s)² ≤ c s^{2/5} K^{4/5} E f²";
const STMT_HIGH_WEIGHTS: &str = "Σ_{|α| ≥ N} b_α² ≤ c N^{−1/2} E ‖∇f‖";

/// I(E f) ≤ E√(I²(f)+‖∇f‖²), evaluated as a deficit at two rule orders.
pub fn check_bobkov(f: &FunctionHandle, seed: u64) -> Result<CheckResult> {
    let (lo, hi) = match (f.dim, is_steep(f)) {
        (_, true) => (100, 150),
        (3, _) => (24, 32),
        _ => (40, 60),
    };
    let coarse = deficit::deficit(f, &gauss_hermite_rule(f.dim, lo)?)?;
    let fine = deficit::deficit(f, &gauss_hermite_rule(f.dim, hi)?)?;
    let err = (fine.deficit - coarse.deficit).abs() + fine.error_estimate;
    Ok(CheckResult::assert(
        "bobkov",
        f.name.clone(),
        STMT_BOBKOV,
        fine.iso_of_mean,
        fine.bobkov,
        tol_from(err),
        seed,
    ))
}

/// I(γₙ(A)) ≤ γₙ⁺(A) with the closed-form measure and boundary measure.
pub fn check_isoperimetric(a: &SetHandle, seed: u64) -> Result<CheckResult> {
    let measure = a
        .closed_measure
        .ok_or_else(|| Error::InvalidInput(format!("{} has no closed measure", a.name)))?;
    let (perimeter, err) = match a.closed_perimeter {
        Some(p) => (p, 0.0),
        None => {
            let est = deficit::boundary_measure_minkowski(a, &[0.1, 0.05], 1 << 22, seed)?;
            (est.value, est.error_estimate)
        }
    };
    Ok(CheckResult::assert(
        "isoperimetric",
        a.name.clone(),
        STMT_ISO,
        iso_I(measure)?,
        perimeter,
        tol_from(err),
        seed,
    ))
}

/// Degree-≤1 truncation residual vs E‖H‖²_F, both spectral and exact.
pub fn check_poincare_hessian(f: &SpectralFunction, input: &str, seed: u64) -> Result<CheckResult> {
    let lhs = f.l2_norm_sq() - f.truncate(1).l2_norm_sq();
    let rhs = f.hessian_frobenius_sq();
    Ok(CheckResult::assert(
        "poincare-hessian",
        input.to_string(),
        STMT_POINCARE,
        lhs,
        rhs,
        TOL_FLOOR,
        seed,
    ))
}

/// Pointwise gradient bounds on P_t f over Gaussian sample points: the
/// explicit √2 form asserted, the profile form and the h_t form reported.
pub fn check_grad_bound(f: &FunctionHandle, t_grid: &[f64], seed: u64) -> Result<Vec<CheckResult>> {
    const POINTS: usize = 48;
    let state = SemigroupState::new(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_margin = f64::INFINITY;
    let mut worst = (0.0, 0.0);
    let mut best_profile = (0.0, 0.0, 0.0);
    let mut best_h = (0.0, 0.0, 0.0);
    for &t in t_grid {
        let k_t = ou_k(t);
        for _ in 0..POINTS {
            let x: Vec<f64> = (0..f.dim).map(|_| rng.sample(StandardNormal)).collect();
            let jet = pt_jet(&state, f, t, &x)?;
            let grad = jet.grad_norm_sq().sqrt();
            let v = jet.value.clamp(0.0, 1.0);
            let small = v.min(1.0 - v);
            let rhs = std::f64::consts::SQRT_2 * k_t * xsqrtlog(small);
            if rhs - grad < worst_margin {
                worst_margin = rhs - grad;
                worst = (grad, rhs);
            }
            let cap = k_t * iso_I_clamped(v);
            if cap > 0.0 && grad / cap > best_profile.2 {
                best_profile = (grad, cap, grad / cap);
            }
            let hj = h_jet(&state, f, t, &x)?;
            if !hj.clipped {
                let hg = hj.grad_norm_sq().sqrt();
                if hg / k_t > best_h.2 {
                    best_h = (hg, k_t, hg / k_t);
                }
            }
        }
    }
    let input = format!("{} (t ∈ {t_grid:?}, {POINTS} points)", f.name);
    Ok(vec![
        CheckResult::assert(
            "grad-bound-sqrt2",
            input.clone(),
            STMT_GRAD_SQRT2,
            worst.0,
            worst.1,
            TOL_FLOOR,
            seed,
        ),
        CheckResult::report(
            "grad-bound-profile",
            input.clone(),
            STMT_GRAD_PROFILE,
            best_profile.0,
            best_profile.1,
            best_profile.2,
            TOL_FLOOR,
            seed,
        ),
        CheckResult::report(
            "grad-bound-h",
            input,
            STMT_GRAD_H,
            best_h.0,
            best_h.1,
            best_h.2,
            TOL_FLOOR,
            seed,
        ),
    ])
}

/// Reverse Hölder at p = 1/2 for a positive pair: (E√f)²(E g⁻¹)⁻¹ ≤ E fg.
/// Monte Carlo keeps the nodes inside the region where the zoo members are
/// bounded away from zero.
pub fn check_reverse_holder(
    f: &FunctionHandle,
    g: &FunctionHandle,
    samples: u64,
    seed: u64,
) -> Result<CheckResult> {
    if f.dim != g.dim {
        return Err(Error::DimensionMismatch {
            expected: f.dim,
            got: g.dim,
        });
    }
    let rule = mc_rule_antithetic(f.dim, samples, seed);
    let (vals, errs) = rule.integrate_multi_seq(3, &|x: &[f64], out: &mut [f64]| {
        let fv = f.value(x).max(0.0);
        // floor guards the reciprocal against clamp-to-zero far tails that
        // carry no Gaussian mass at these sample sizes
        let gv = g.value(x).max(1e-12);
        out[0] = fv * gv;
        out[1] = fv.sqrt();
        out[2] = 1.0 / gv;
    })?;
    let (e_fg, e_sqrt, e_inv) = (vals[0], vals[1], vals[2]);
    let lhs = e_sqrt * e_sqrt / e_inv;
    let d_lhs = 2.0 * e_sqrt * errs[1] / e_inv + e_sqrt * e_sqrt * errs[2] / (e_inv * e_inv);
    Ok(CheckResult::assert(
        "reverse-holder",
        format!("f={}, g={}", f.name, g.name),
        STMT_REV_HOLDER,
        lhs,
        e_fg,
        tol_from(d_lhs + errs[0]),
        seed,
    ))
}

/// Reverse hypercontractivity: (E f^q)^{1/q} ≤ (E (P_t f)^p)^{1/p} for
/// positive f and p < 1. Spectral members integrate by Monte Carlo (their
/// polynomial tails escape [0,1] beyond the sampled region); members with
/// closed evolved forms use Gauss-Hermite.
pub fn check_reverse_hyper(
    f: &FunctionHandle,
    t: f64,
    p: f64,
    samples: u64,
    seed: u64,
) -> Result<CheckResult> {
    if p >= 1.0 || p == 0.0 {
        return Err(Error::InvalidInput(format!(
            "p = {p} must be < 1 and nonzero"
        )));
    }
    let q = 1.0 + (-2.0 * t).exp() * (p - 1.0);
    if q <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "q = {q} ≤ 0 at t = {t}, p = {p}"
        )));
    }
    let state = SemigroupState::new(seed);
    let integrand = |x: &[f64], out: &mut [f64]| {
        let v = pt_eval(&state, f, t, x).expect("evolved members evaluate everywhere");
        let fv = f.value(x);
        out[0] = v.powf(p);
        out[1] = fv.powf(q);
    };
    let (vals, errs) = if f.spectral.is_some() {
        mc_rule_antithetic(f.dim, samples, seed).integrate_multi_seq(2, &integrand)?
    } else {
        gh_refined(f.dim, 2, is_steep(f), &integrand)?
    };
    let rhs = vals[0].powf(1.0 / p);
    let lhs = vals[1].powf(1.0 / q);
    let d_rhs = (rhs / vals[0]).abs() / p.abs() * errs[0];
    let d_lhs = (lhs / vals[1]).abs() / q * errs[1];
    Ok(CheckResult::assert(
        "reverse-hyper",
        format!("{} (t={t}, p={p})", f.name),
        STMT_REV_HYPER,
        lhs,
        rhs,
        tol_from(d_lhs + d_rhs),
        seed,
    ))
}

/// E(φ(h_t)‖H(h_t)‖²_F) against I(Ef)²(E‖H(h_t)‖_F)²; the unnamed constant
/// between them is reported.
pub fn check_post_reverse(f: &FunctionHandle, t: f64, seed: u64) -> Result<CheckResult> {
    let state = SemigroupState::new(seed);
    let (vals, _) = gh_refined(f.dim, 2, false, &|x: &[f64], out: &mut [f64]| {
        let hj = h_jet(&state, f, t, x).expect("evolved members evaluate everywhere");
        if hj.clipped {
            out[0] = 0.0;
            out[1] = 0.0;
        } else {
            let hn2 = hj.hessian_frobenius_sq();
            out[0] = phi(hj.value) * hn2;
            out[1] = hn2.sqrt();
        }
    })?;
    let rule = gauss_hermite_rule(f.dim, 40)?;
    let (mean, _) = mean_of(f, &rule)?;
    let cap = iso_I(mean)?;
    let lhs = cap * cap * vals[1] * vals[1];
    let constant = if lhs > 0.0 { vals[0] / lhs } else { f64::NAN };
    Ok(CheckResult::report(
        "post-reverse",
        format!("{} (t={t})", f.name),
        STMT_POST_REVERSE,
        lhs,
        vals[0],
        constant,
        TOL_FLOOR,
        seed,
    ))
}

/// Moments of the order-2 chaos YᵀAY against p‖A‖_F for seeded random
/// matrices; the worst ratio over p is the reported constant.
pub fn check_chaos_moments(
    dim: usize,
    p_list: &[u32],
    samples: u64,
    seed: u64,
) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    for idx in 0..3u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(idx));
        let a: Vec<f64> = (0..dim * dim).map(|_| rng.sample(StandardNormal)).collect();
        let fro = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        let rule = mc_rule_antithetic(dim, samples, seed ^ (0xC4A0 + idx));
        let (vals, errs) =
            rule.integrate_multi_seq(p_list.len(), &|y: &[f64], out: &mut [f64]| {
                let mut quad = 0.0;
                for i in 0..dim {
                    for j in 0..dim {
                        quad += a[i * dim + j] * y[i] * y[j];
                    }
                }
                let base = quad.abs();
                for (k, &p) in p_list.iter().enumerate() {
                    out[k] = base.powi(p as i32);
                }
            })?;
        let mut best = (0.0, 0.0, 0.0, 0.0);
        for (k, &p) in p_list.iter().enumerate() {
            let moment = vals[k].powf(1.0 / p as f64);
            let denom = p as f64 * fro;
            if moment / denom > best.2 {
                let d = (moment / vals[k]).abs() / p as f64 * errs[k];
                best = (moment, denom, moment / denom, d);
            }
        }
        out.push(CheckResult::report(
            "chaos-moments",
            format!("matrix-{idx} ({dim}×{dim}, p ∈ {p_list:?})"),
            STMT_CHAOS,
            best.0,
            best.1,
            best.2,
            tol_from(best.3),
            seed ^ (0xC4A0 + idx),
        ));
    }
    Ok(out)
}

/// Higher moments of ‖H(h_t)‖_F against k_t²((1+k_t)√log(1/Ef) + √p k_t);
/// the worst ratio over p is reported. Means above 1/2 use the complement.
pub fn check_hess_moment(
    f: &FunctionHandle,
    t: f64,
    p_list: &[u32],
    seed: u64,
) -> Result<CheckResult> {
    let state = SemigroupState::new(seed);
    let (vals, _) = gh_refined(f.dim, p_list.len(), false, &|x: &[f64], out: &mut [f64]| {
        let hj = h_jet(&state, f, t, x).expect("evolved members evaluate everywhere");
        let hn = if hj.clipped {
            0.0
        } else {
            hj.hessian_frobenius_sq().sqrt()
        };
        for (k, &p) in p_list.iter().enumerate() {
            out[k] = hn.powi(p as i32);
        }
    })?;
    let rule = gauss_hermite_rule(f.dim, 40)?;
    let (mean, _) = mean_of(f, &rule)?;
    let m = mean.min(1.0 - mean).clamp(1e-12, 0.5);
    let k_t = ou_k(t);
    let mut best = (0.0, 0.0, 0.0);
    for (k, &p) in p_list.iter().enumerate() {
        let moment = vals[k].powf(1.0 / p as f64);
        let denom = k_t * k_t * ((1.0 + k_t) * (1.0 / m).ln().sqrt() + (p as f64).sqrt() * k_t);
        if moment / denom > best.2 {
            best = (moment, denom, moment / denom);
        }
    }
    Ok(CheckResult::report(
        "hess-moment",
        format!("{} (t={t}, p ∈ {p_list:?})", f.name),
        STMT_HESS_MOMENT,
        best.0,
        best.1,
        best.2,
        TOL_FLOOR,
        seed,
    ))
}

/// E f_t ≤ 2 M^{(1/(1+k_t))²} with M an empirical median of f_t. The
/// tolerance propagates the spread between the two half-sample medians.
pub fn check_median_mean(
    f: &FunctionHandle,
    t_grid: &[f64],
    seed: u64,
) -> Result<Vec<CheckResult>> {
    const SAMPLES: usize = 200_001;
    let state = SemigroupState::new(seed);
    let rule = gauss_hermite_rule(f.dim, if f.dim == 3 { 24 } else { 40 })?;
    let (mean, mean_err) = mean_of(f, &rule)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Vec<f64>> = (0..SAMPLES)
        .map(|_| (0..f.dim).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    let mut out = Vec::new();
    for &t in t_grid {
        let mut values: Vec<f64> = points
            .iter()
            .map(|x| pt_eval(&state, f, t, x))
            .collect::<Result<_>>()?;
        let median_of = |v: &mut Vec<f64>| -> f64 {
            v.sort_by(f64::total_cmp);
            v[v.len() / 2]
        };
        let mut even: Vec<f64> = values.iter().copied().step_by(2).collect();
        let mut odd: Vec<f64> = values.iter().copied().skip(1).step_by(2).collect();
        let m_even = median_of(&mut even);
        let m_odd = median_of(&mut odd);
        let m = median_of(&mut values).clamp(1e-300, 1.0);
        let m_err = (m_even - m_odd).abs() / 2.0;
        let pow = (1.0 / (1.0 + ou_k(t))).powi(2);
        let rhs = 2.0 * m.powf(pow);
        let d_rhs = 2.0 * pow * m.powf(pow - 1.0) * m_err;
        out.push(CheckResult::assert(
            "median-mean",
            format!("{} (t={t})", f.name),
            STMT_MEDIAN_MEAN,
            mean,
            rhs,
            tol_from(d_rhs + mean_err),
            seed,
        ));
    }
    Ok(out)
}

fn require_spectral<'f>(f: &'f FunctionHandle, op: &'static str) -> Result<&'f SpectralFunction> {
    f.spectral.as_ref().ok_or(Error::Domain {
        op,
        detail: format!("{} carries no spectral table", f.name),
    })
}

/// E‖∇f‖ for a spectral member, with a two-order quadrature error.
fn spectral_grad_l1(spec: &SpectralFunction) -> Result<(f64, f64)> {
    let partials: Vec<SpectralFunction> = (0..spec.dim)
        .map(|i| crate::hermite::hermite_partial(spec, i))
        .collect::<Result<_>>()?;
    let (vals, errs) = gh_refined(spec.dim, 1, false, &|x: &[f64], out: &mut [f64]| {
        let s: f64 = partials
            .iter()
            .map(|p| {
                let v = crate::hermite::hermite_eval(p, x).expect("dimensions agree");
                v * v
            })
            .sum();
        out[0] = s.sqrt();
    })?;
    Ok((vals[0], errs[0]))
}

/// Σ(1−e^{−|α|t})b_α² against √t E‖∇f‖; the constant between them is
/// reported at the t with the worst ratio.
pub fn check_ledoux_inequality(
    f: &FunctionHandle,
    t_grid: &[f64],
    seed: u64,
) -> Result<CheckResult> {
    let spec = require_spectral(f, "check_ledoux_inequality")?;
    let (k, _) = spectral_grad_l1(spec)?;
    let mut best = (0.0, 0.0, 0.0, 0.0);
    for &t in t_grid {
        let lhs: f64 = spec
            .coeffs
            .iter()
            .map(|(a, b)| (1.0 - (-(a.order() as f64) * t).exp()) * b * b)
            .sum();
        let rhs = t.sqrt() * k;
        if lhs / rhs > best.2 {
            best = (lhs, rhs, lhs / rhs, t);
        }
    }
    Ok(CheckResult::report(
        "ledoux",
        format!("{} (worst t={}, grid {t_grid:?})", f.name, best.3),
        STMT_LEDOUX,
        best.0,
        best.1,
        best.2,
        TOL_FLOOR,
        seed,
    ))
}

/// E f² against max{1,K}√(t/log(1/ε)) on a centered, rescaled instance
/// whose E(P_t f)² hits the requested ε exactly.
pub fn check_pull_back(f: &FunctionHandle, t: f64, epsilon: f64, seed: u64) -> Result<CheckResult> {
    let spec = require_spectral(f, "check_pull_back")?;
    let mut centered = spec.clone();
    centered.coeffs.remove(&MultiIndex(vec![0; spec.dim]));
    let eps0 = semigroup_spectral(&centered, t)?.l2_norm_sq();
    if !(eps0 > 0.0) {
        return Err(Error::InvalidInput(format!(
            "{} has no non-constant spectral mass",
            f.name
        )));
    }
    let lambda = (epsilon / eps0).sqrt().min(1.0);
    let eps = lambda * lambda * eps0;
    let (k0, _) = spectral_grad_l1(&centered)?;
    let k = (lambda * k0).max(1.0);
    let lhs = lambda * lambda * centered.l2_norm_sq();
    let rhs = k * (t / (1.0 / eps).ln()).sqrt();
    Ok(CheckResult::report(
        "pull-back",
        format!("{} centered, λ={lambda:.3e} (t={t}, ε={eps:.3e})", f.name),
        STMT_PULL_BACK,
        lhs,
        rhs,
        lhs / rhs,
        TOL_FLOOR,
        seed,
    ))
}

/// E(f_s − 1_B)² against min{(Ef_s)², √s}·Ef_s for an evolved indicator
/// and a half-space; the constant between them is reported.
pub fn check_s_small(
    a: &SetHandle,
    b: &SetHandle,
    s: f64,
    samples: u64,
    seed: u64,
) -> Result<CheckResult> {
    let f = a.indicator();
    let m = a
        .closed_measure
        .ok_or_else(|| Error::InvalidInput(format!("{} has no closed measure", a.name)))?;
    let state = SemigroupState::new(seed);
    let rule = mc_rule_antithetic(a.dim, samples, seed);
    let (vals, errs) = rule.integrate_multi_seq(1, &|x: &[f64], out: &mut [f64]| {
        let v = pt_eval(&state, &f, s, x).expect("evolved members evaluate everywhere");
        let ind = if b.member(x) { 1.0 } else { 0.0 };
        out[0] = (v - ind) * (v - ind);
    })?;
    let lhs = (m * m).min(s.sqrt()) * m;
    Ok(CheckResult::report(
        "s-small",
        format!("A={}, B={}, s={s}", a.name, b.name),
        STMT_S_SMALL,
        lhs,
        vals[0],
        vals[0] / lhs,
        tol_from(errs[0]),
        seed,
    ))
}

/// The exact decay identity E(f−f_s)² = Σ b_α²(1−e^{−s|α|})², quadrature
/// against coefficients, asserted at 1e−12; plus the s^{2/5}K^{4/5} decay
/// bound with its constant reported.
pub fn check_f_fs(f: &FunctionHandle, s_grid: &[f64], seed: u64) -> Result<Vec<CheckResult>> {
    let spec = require_spectral(f, "check_f_fs")?;
    let (k, _) = spectral_grad_l1(spec)?;
    let ef2 = spec.l2_norm_sq();
    let mut worst_gap = 0.0f64;
    let mut best = (0.0, 0.0, 0.0, 0.0);
    for &s in s_grid {
        let decayed = semigroup_spectral(spec, s)?;
        let spectral: f64 = spec
            .coeffs
            .iter()
            .map(|(a, b)| {
                let d = 1.0 - (-(a.order() as f64) * s).exp();
                b * b * d * d
            })
            .sum();
        let rule = gauss_hermite_rule(spec.dim, 40)?;
        let (quad, _) = rule.integrate_seq(&|x: &[f64]| {
            let d = crate::hermite::hermite_eval(spec, x).expect("dimensions agree")
                - crate::hermite::hermite_eval(&decayed, x).expect("dimensions agree");
            d * d
        })?;
        worst_gap = worst_gap.max((quad - spectral).abs());
        let bound = s.powf(0.4) * k.powf(0.8) * ef2;
        if spectral / bound > best.2 {
            best = (spectral, bound, spectral / bound, s);
        }
    }
    Ok(vec![
        CheckResult::assert(
            "f-fs-identity",
            format!("{} (s ∈ {s_grid:?})", f.name),
            STMT_F_FS_IDENTITY,
            worst_gap,
            0.0,
            IDENTITY_TOL,
            seed,
        ),
        CheckResult::report(
            "f-fs-decay",
            format!("{} (worst s={}, grid {s_grid:?})", f.name, best.3),
            STMT_F_FS_DECAY,
            best.0,
            best.1,
            best.2,
            TOL_FLOOR,
            seed,
        ),
    ])
}

/// Tail weight Σ_{|α|≥N} b_α² against N^{−1/2}E‖∇f‖ over N = 2..8.
pub fn check_high_weights(f: &FunctionHandle, seed: u64) -> Result<CheckResult> {
    let spec = require_spectral(f, "check_high_weights")?;
    let (k, _) = spectral_grad_l1(spec)?;
    let mut best = (0.0, 0.0, 0.0, 0u32);
    for n0 in 2..=8u32 {
        let tail = tail_weight(spec, n0);
        let rhs = k / (n0 as f64).sqrt();
        if tail / rhs > best.2 {
            best = (tail, rhs, tail / rhs, n0);
        }
    }
    Ok(CheckResult::report(
        "high-weights",
        format!("{} (worst N={})", f.name, best.3),
        STMT_HIGH_WEIGHTS,
        best.0,
        best.1,
        best.2,
        TOL_FLOOR,
        seed,
    ))
}

/// One registered unit of ledger work.
enum Job {
    Bobkov(FunctionHandle),
    Iso(SetHandle),
    Poincare(SpectralFunction, String),
    PoincareBatch(u64),
    GradBound(FunctionHandle),
    RevHolder(FunctionHandle, FunctionHandle),
    RevHyper(FunctionHandle, f64, f64),
    PostReverse(FunctionHandle, f64),
    Chaos,
    HessMoment(FunctionHandle, f64),
    MedianMean(FunctionHandle),
    Ledoux(FunctionHandle),
    PullBack(FunctionHandle, f64, f64),
    SSmall(SetHandle, SetHandle, f64),
    FFs(FunctionHandle),
    HighWeights(FunctionHandle),
}

impl Job {
    fn names(&self) -> (&'static str, String) {
        match self {
            Job::Bobkov(f) => ("bobkov", f.name.clone()),
            Job::Iso(a) => ("isoperimetric", a.name.clone()),
            Job::Poincare(_, n) => ("poincare-hessian", n.clone()),
            Job::PoincareBatch(_) => ("poincare-hessian", "random-batch".into()),
            Job::GradBound(f) => ("grad-bound", f.name.clone()),
            Job::RevHolder(f, g) => ("reverse-holder", format!("{}|{}", f.name, g.name)),
            Job::RevHyper(f, t, p) => ("reverse-hyper", format!("{}|{t}|{p}", f.name)),
            Job::PostReverse(f, t) => ("post-reverse", format!("{}|{t}", f.name)),
            Job::Chaos => ("chaos-moments", "matrices".into()),
            Job::HessMoment(f, t) => ("hess-moment", format!("{}|{t}", f.name)),
            Job::MedianMean(f) => ("median-mean", f.name.clone()),
            Job::Ledoux(f) => ("ledoux", f.name.clone()),
            Job::PullBack(f, t, e) => ("pull-back", format!("{}|{t}|{e}", f.name)),
            Job::SSmall(a, b, s) => ("s-small", format!("{}|{}|{s}", a.name, b.name)),
            Job::FFs(f) => ("f-fs", f.name.clone()),
            Job::HighWeights(f) => ("high-weights", f.name.clone()),
        }
    }

    fn run(&self, config: &LedgerConfig) -> Result<Vec<CheckResult>> {
        let (check, input) = self.names();
        let seed = derive_seed(config.seed, check, &input);
        let mc = config.mc_samples;
        match self {
            Job::Bobkov(f) => Ok(vec![check_bobkov(f, seed)?]),
            Job::Iso(a) => Ok(vec![check_isoperimetric(a, seed)?]),
            Job::Poincare(spec, name) => Ok(vec![check_poincare_hessian(spec, name, seed)?]),
            Job::PoincareBatch(count) => poincare_batch(*count, seed),
            Job::GradBound(f) => check_grad_bound(f, &[0.1, 0.5, 1.0], seed),
            Job::RevHolder(f, g) => Ok(vec![check_reverse_holder(f, g, mc, seed)?]),
            Job::RevHyper(f, t, p) => Ok(vec![check_reverse_hyper(f, *t, *p, mc, seed)?]),
            Job::PostReverse(f, t) => Ok(vec![check_post_reverse(f, *t, seed)?]),
            Job::Chaos => check_chaos_moments(4, &[1, 2, 3, 4], mc, seed),
            Job::HessMoment(f, t) => Ok(vec![check_hess_moment(f, *t, &[1, 2, 3, 4], seed)?]),
            Job::MedianMean(f) => check_median_mean(f, &[0.5, 1.0], seed),
            Job::Ledoux(f) => Ok(vec![check_ledoux_inequality(f, &[0.05, 0.2, 1.0], seed)?]),
            Job::PullBack(f, t, e) => Ok(vec![check_pull_back(f, *t, *e, seed)?]),
            Job::SSmall(a, b, s) => Ok(vec![check_s_small(a, b, *s, mc, seed)?]),
            Job::FFs(f) => check_f_fs(f, &[0.01, 0.1, 0.5], seed),
            Job::HighWeights(f) => Ok(vec![check_high_weights(f, seed)?]),
        }
    }
}

/// 100 seeded random degree-≤4 coefficient tables; the record keeps the
/// instance with the smallest margin.
fn poincare_batch(count: u64, seed: u64) -> Result<Vec<CheckResult>> {
    let indices = multi_indices(2, 4);
    let mut worst: Option<CheckResult> = None;
    for i in 0..count {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i));
        let mut spec = SpectralFunction::new(2);
        for alpha in &indices {
            spec.insert(alpha.clone(), rng.sample(StandardNormal))?;
        }
        let r = check_poincare_hessian(
            &spec,
            &format!("random-degree-4 #{i} (batch seed {seed})"),
            seed,
        )?;
        if worst.as_ref().is_none_or(|w| r.margin < w.margin) {
            worst = Some(r);
        }
    }
    Ok(vec![worst.expect("count > 0")])
}

/// Frozen spectral instances: x₁x₂ (residual 1, Hessian mass 2) and an
/// affine function (0 on both sides).
pub fn poincare_examples() -> Result<Vec<(SpectralFunction, String)>> {
    let mut cross = SpectralFunction::new(2);
    cross.insert(MultiIndex(vec![1, 1]), 1.0)?;
    let mut affine = SpectralFunction::new(2);
    affine.insert(MultiIndex(vec![0, 0]), 0.7)?;
    affine.insert(MultiIndex(vec![1, 0]), 0.5)?;
    affine.insert(MultiIndex(vec![0, 1]), -0.3)?;
    Ok(vec![
        (cross, "x1*x2".to_string()),
        (affine, "affine 0.7+0.5x1-0.3x2".to_string()),
    ])
}

/// Every registered check over the zoo. Jobs are independent and run in
/// parallel; the result order matches registration order.
pub fn run_ledger(
    functions: &[FunctionHandle],
    sets: &[SetHandle],
    config: &LedgerConfig,
) -> Result<Vec<CheckResult>> {
    let mut jobs: Vec<Job> = Vec::new();
    for f in functions {
        jobs.push(Job::Bobkov(f.clone()));
        jobs.push(Job::GradBound(f.clone()));
        jobs.push(Job::MedianMean(f.clone()));
    }
    for a in sets {
        jobs.push(Job::Iso(a.clone()));
        jobs.push(Job::MedianMean(a.indicator()));
    }
    for (spec, name) in poincare_examples()? {
        jobs.push(Job::Poincare(spec, name));
    }
    for f in functions.iter().filter(|f| f.spectral.is_some()) {
        jobs.push(Job::Poincare(
            f.spectral.clone().expect("filtered on presence"),
            f.name.clone(),
        ));
        jobs.push(Job::Ledoux(f.clone()));
        jobs.push(Job::FFs(f.clone()));
        jobs.push(Job::HighWeights(f.clone()));
        for &t in &[1.0, 2.0] {
            for &eps in &[1e-3, 1e-6] {
                jobs.push(Job::PullBack(f.clone(), t, eps));
            }
        }
    }
    jobs.push(Job::PoincareBatch(100));

    let by_name = |n: &str| -> FunctionHandle {
        functions
            .iter()
            .find(|f| f.name == n)
            .unwrap_or_else(|| panic!("zoo member {n} missing"))
            .clone()
    };
    // reciprocal factors need members bounded away from zero on the
    // sampled region: constants and the range-normalized polynomials
    let pairs = [
        ("phi-affine-e1", "const-0.5"),
        ("phi-affine-tilt", "poly-1"),
        ("smooth-halfspace-t005", "poly-2"),
        ("smooth-halfspace-t02", "const-0.1"),
        ("poly-1", "poly-2"),
        ("poly-2", "poly-3"),
        ("poly-3", "const-0.5"),
        ("const-0.1", "poly-3"),
    ];
    for (fname, gname) in pairs {
        jobs.push(Job::RevHolder(by_name(fname), by_name(gname)));
    }
    for f in functions {
        for &t in &[0.5, 1.0, 2.0] {
            for &p in &[-1.0, 0.5] {
                jobs.push(Job::RevHyper(f.clone(), t, p));
            }
        }
    }

    // members whose Φ⁻¹∘P_t image has a genuinely nonzero Hessian;
    // half-spaces evolve to exactly affine images and are excluded
    let mut curved: Vec<FunctionHandle> = functions
        .iter()
        .filter(|f| f.spectral.is_some())
        .cloned()
        .collect();
    for a in sets.iter().filter(|a| {
        a.has_evolved()
            && !a.name.starts_with("halfspace")
            && a.closed_measure.map(|m| m <= 0.5 && m > 0.0) == Some(true)
    }) {
        curved.push(a.indicator());
    }
    for f in &curved {
        for &t in &[1.0, 2.0, 4.0] {
            jobs.push(Job::PostReverse(f.clone(), t));
        }
        for &t in &[0.5, 1.0] {
            jobs.push(Job::HessMoment(f.clone(), t));
        }
    }

    jobs.push(Job::Chaos);

    let b_sets = vec![
        halfspace(vec![-1.0, 0.0], 0.0)?,
        halfspace(vec![-1.0, 0.0], 0.5)?,
    ];
    for a in sets
        .iter()
        .filter(|a| a.has_evolved() && a.closed_measure.map(|m| m <= 0.5) == Some(true))
    {
        for b in &b_sets {
            for &s in &[0.05, 0.2] {
                jobs.push(Job::SSmall(a.clone(), b.clone(), s));
            }
        }
    }

    let nested: Vec<Vec<CheckResult>> = jobs
        .par_iter()
        .map(|j| j.run(config))
        .collect::<Result<_>>()?;
    Ok(nested.into_iter().flatten().collect())
}

pub fn any_assert_failure(results: &[CheckResult]) -> bool {
    results
        .iter()
        .any(|r| r.mode == CheckMode::Assert && !r.pass)
}

/// Write a file through a temp sibling and an atomic rename.
pub(crate) fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let io_err = |e: std::io::Error| Error::Io {
        path: path.display().to_string(),
        source: e,
    };
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(io_err)?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).map_err(io_err)?;
    std::fs::rename(&tmp, path).map_err(io_err)?;
    Ok(())
}

/// One CheckResult as JSON per line.
pub fn write_ledger_jsonl(results: &[CheckResult], path: &Path) -> Result<()> {
    let mut out = String::new();
    for r in results {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    atomic_write(path, out.as_bytes())
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Summary CSV: check, input, mode, pass, margin, constant.
pub fn write_ledger_summary_csv(results: &[CheckResult], path: &Path) -> Result<()> {
    let mut out = String::from("check,input,mode,pass,margin,constant\n");
    for r in results {
        let mode = match r.mode {
            CheckMode::Assert => "assert",
            CheckMode::ReportConstant => "report-constant",
        };
        let constant = r
            .empirical_constant
            .map(|c| c.to_string())
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            csv_field(&r.check),
            csv_field(&r.input),
            mode,
            r.pass,
            r.margin,
            constant
        );
    }
    atomic_write(path, out.as_bytes())
}

/// Markdown table mapping each distinct check name to the inequality it
/// verifies and its mode.
pub fn write_statements_table(results: &[CheckResult], path: &Path) -> Result<()> {
    let mut out = String::from("| check | mode | statement |\n|---|---|---|\n");
    let mut seen = std::collections::BTreeSet::new();
    for r in results {
        if seen.insert(r.check.clone()) {
            let mode = match r.mode {
                CheckMode::Assert => "assert",
                CheckMode::ReportConstant => "report-constant",
            };
            let _ = writeln!(out, "| {} | {} | {} |", r.check, mode, r.statement);
        }
    }
    atomic_write(path, out.as_bytes())
}

/// JSONL, CSV summary, and statement table under `dir`; returns the paths.
pub fn write_ledger_outputs(results: &[CheckResult], dir: &Path) -> Result<Vec<PathBuf>> {
    let jsonl = dir.join("ledger.jsonl");
    let csv = dir.join("ledger_summary.csv");
    let table = dir.join("ledger_statements.md");
    write_ledger_jsonl(results, &jsonl)?;
    write_ledger_summary_csv(results, &csv)?;
    write_statements_table(results, &table)?;
    Ok(vec![jsonl, csv, table])
}

/// Ledger over the default zoo.
pub fn run_default_ledger(config: &LedgerConfig) -> Result<Vec<CheckResult>> {
    run_ledger(&zoo::functions()?, &zoo::sets()?, config)
}
