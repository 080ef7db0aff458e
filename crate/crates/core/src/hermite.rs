//! Hermite spectral representation on (ℝⁿ, γₙ): functions as coefficient
//! maps over the orthonormal basis G_α(x) = ∏ᵢ H_{αᵢ}(xᵢ)/√(αᵢ!), where H_k
//! are the probabilists' Hermite polynomials. The Ornstein-Uhlenbeck
//! semigroup acts diagonally here: P_t G_α = e^{−|α|t} G_α.

use crate::error::{Error, Result};
use crate::quadrature::QuadratureRule;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BTreeMap;

/// Exponent vector α of one basis function; ordered by total degree first,
/// then lexicographically, so iteration over a coefficient map is graded.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.order()
            .cmp(&other.order())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// All multi-indices of dimension `dim` with total degree ≤ `max_degree`,
/// in graded lexicographic order.
pub fn multi_indices(dim: usize, max_degree: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut current = vec![0u32; dim];
    fn rec(out: &mut Vec<Vec<u32>>, current: &mut Vec<u32>, axis: usize, left: u32) {
        if axis + 1 == current.len() {
            current[axis] = left;
            out.push(current.clone());
            return;
        }
        for v in 0..=left {
            current[axis] = v;
            rec(out, current, axis + 1, left - v);
        }
    }
    let mut raw = Vec::new();
    for total in 0..=max_degree {
        rec(&mut raw, &mut current, 0, total);
    }
    out.extend(raw.into_iter().map(MultiIndex));
    out.sort();
    out
}

/// A function in L²(γₙ) held as coefficients over the orthonormal Hermite
/// basis. The map is sparse: absent indices mean zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "SpectralRepr", into = "SpectralRepr")]
pub struct SpectralFunction {
    pub dim: usize,
    pub coeffs: BTreeMap<MultiIndex, f64>,
}

/// Serialized form: sorted (α, b_α) pairs, so the JSON byte stream is
/// deterministic and floats round-trip exactly.
#[derive(Serialize, Deserialize)]
struct SpectralRepr {
    dim: usize,
    coeffs: Vec<(Vec<u32>, f64)>,
}

impl From<SpectralFunction> for SpectralRepr {
    fn from(f: SpectralFunction) -> Self {
        SpectralRepr {
            dim: f.dim,
            coeffs: f.coeffs.into_iter().map(|(a, b)| (a.0, b)).collect(),
        }
    }
}

impl From<SpectralRepr> for SpectralFunction {
    fn from(r: SpectralRepr) -> Self {
        SpectralFunction {
            dim: r.dim,
            coeffs: r
                .coeffs
                .into_iter()
                .map(|(a, b)| (MultiIndex(a), b))
                .collect(),
        }
    }
}

impl SpectralFunction {
    pub fn new(dim: usize) -> Self {
        SpectralFunction {
            dim,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, alpha: MultiIndex, b: f64) -> Result<()> {
        if alpha.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: alpha.dim(),
            });
        }
        self.coeffs.insert(alpha, b);
        Ok(())
    }

    pub fn coefficient(&self, alpha: &MultiIndex) -> f64 {
        self.coeffs.get(alpha).copied().unwrap_or(0.0)
    }

    pub fn max_order(&self) -> u32 {
        self.coeffs.keys().map(|a| a.order()).max().unwrap_or(0)
    }

    /// E f = b_0.
    pub fn mean(&self) -> f64 {
        self.coefficient(&MultiIndex(vec![0; self.dim]))
    }

    /// E f² = Σ b_α² (Parseval).
    pub fn l2_norm_sq(&self) -> f64 {
        self.coeffs.values().map(|b| b * b).sum()
    }

    /// E‖∇f‖² = Σ |α| b_α².
    pub fn grad_l2_sq(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|(a, b)| a.order() as f64 * b * b)
            .sum()
    }

    /// E‖Hess f‖²_F = Σ |α|(|α|−1) b_α².
    pub fn hessian_frobenius_sq(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|(a, b)| {
                let k = a.order() as f64;
                k * (k - 1.0) * b * b
            })
            .sum()
    }

    /// Multiply every coefficient by `s`.
    pub fn scale(&self, s: f64) -> SpectralFunction {
        SpectralFunction {
            dim: self.dim,
            coeffs: self
                .coeffs
                .iter()
                .map(|(a, b)| (a.clone(), s * b))
                .collect(),
        }
    }

    /// Drop every coefficient with |α| > max_order.
    pub fn truncate(&self, max_order: u32) -> SpectralFunction {
        SpectralFunction {
            dim: self.dim,
            coeffs: self
                .coeffs
                .iter()
                .filter(|(a, _)| a.order() <= max_order)
                .map(|(a, b)| (a.clone(), *b))
                .collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<SpectralFunction> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Values of the orthonormal 1-d basis g_k(x) = H_k(x)/√(k!) for
/// k = 0..=maxdeg, by the normalized three-term recurrence
/// g_{k+1} = (x·g_k − √k·g_{k−1}) / √(k+1).
pub(crate) fn hermite_axis_table(x: f64, maxdeg: u32, out: &mut Vec<f64>) {
    out.clear();
    out.push(1.0);
    if maxdeg == 0 {
        return;
    }
    out.push(x);
    for k in 1..maxdeg {
        let kf = k as f64;
        let next = (x * out[k as usize] - kf.sqrt() * out[k as usize - 1]) / (kf + 1.0).sqrt();
        out.push(next);
    }
}

/// Evaluate Σ_α b_α G_α(x).
pub fn hermite_eval(f: &SpectralFunction, x: &[f64]) -> Result<f64> {
    if x.len() != f.dim {
        return Err(Error::DimensionMismatch {
            expected: f.dim,
            got: x.len(),
        });
    }
    let maxdeg = f.max_order();
    let mut tables: Vec<Vec<f64>> = Vec::with_capacity(f.dim);
    for &xi in x {
        let mut t = Vec::with_capacity(maxdeg as usize + 1);
        hermite_axis_table(xi, maxdeg, &mut t);
        tables.push(t);
    }
    let mut acc = 0.0;
    for (alpha, &b) in &f.coeffs {
        let mut prod = b;
        for (i, &k) in alpha.0.iter().enumerate() {
            prod *= tables[i][k as usize];
        }
        acc += prod;
    }
    Ok(acc)
}

/// Coefficients of ∂f/∂xᵢ: ∂ᵢ G_α = √(αᵢ) G_{α − eᵢ}.
pub fn hermite_partial(f: &SpectralFunction, i: usize) -> Result<SpectralFunction> {
    if i >= f.dim {
        return Err(Error::DimensionMismatch {
            expected: f.dim,
            got: i + 1,
        });
    }
    let mut out = SpectralFunction::new(f.dim);
    for (alpha, &b) in &f.coeffs {
        let k = alpha.0[i];
        if k == 0 {
            continue;
        }
        let mut shifted = alpha.clone();
        shifted.0[i] = k - 1;
        let contribution = (k as f64).sqrt() * b;
        *out.coeffs.entry(shifted).or_insert(0.0) += contribution;
    }
    Ok(out)
}

/// Project a callable onto the basis up to total degree `max_degree`:
/// b_α = E[g·G_α], all coefficients in one pass over the rule's nodes.
///
/// A Gauss-Hermite rule must integrate G_α·G_β products for degrees up to
/// `max_degree` exactly, which needs exactness ≥ 2·max_degree; coarser
/// rules are refused rather than silently aliased.
pub fn project<G>(
    g: G,
    dim: usize,
    max_degree: u32,
    rule: &QuadratureRule,
) -> Result<SpectralFunction>
where
    G: Fn(&[f64]) -> f64 + Sync,
{
    if rule.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: rule.dim(),
        });
    }
    if !rule.is_stochastic() && rule.exactness_degree() < 2 * max_degree {
        return Err(Error::RuleTooCoarse {
            required: 2 * max_degree,
            available: rule.exactness_degree(),
        });
    }
    let alphas = multi_indices(dim, max_degree);
    let m = alphas.len();
    let (values, _) = rule.integrate_multi(m, |x: &[f64], out: &mut [f64]| {
        let gx = g(x);
        let mut tables: Vec<Vec<f64>> = Vec::with_capacity(dim);
        for &xi in x {
            let mut t = Vec::with_capacity(max_degree as usize + 1);
            hermite_axis_table(xi, max_degree, &mut t);
            tables.push(t);
        }
        for (j, alpha) in alphas.iter().enumerate() {
            let mut prod = gx;
            for (i, &k) in alpha.0.iter().enumerate() {
                prod *= tables[i][k as usize];
            }
            out[j] = prod;
        }
    })?;
    let mut f = SpectralFunction::new(dim);
    for (alpha, b) in alphas.into_iter().zip(values) {
        f.coeffs.insert(alpha, b);
    }
    Ok(f)
}

/// Heat flow in coefficient space: b_α ↦ e^{−|α|t} b_α. Requires t ≥ 0.
pub fn semigroup_spectral(f: &SpectralFunction, t: f64) -> Result<SpectralFunction> {
    if !(t >= 0.0) {
        return Err(Error::Domain {
            op: "semigroup_spectral",
            detail: format!("t must be >= 0, got {t}"),
        });
    }
    let mut out = SpectralFunction::new(f.dim);
    for (alpha, &b) in &f.coeffs {
        out.coeffs
            .insert(alpha.clone(), (-(alpha.order() as f64) * t).exp() * b);
    }
    Ok(out)
}

/// Reverse heat flow: b_α ↦ e^{+|α|t} b_α. The amplification e^{|α|t} is
/// capped by `guard`; indices beyond it would amplify coefficient noise past
/// any useful precision, so the call is refused with the offending degree.
pub fn inverse_semigroup_spectral(
    f: &SpectralFunction,
    t: f64,
    guard: f64,
) -> Result<SpectralFunction> {
    if !(t >= 0.0) {
        return Err(Error::Domain {
            op: "inverse_semigroup_spectral",
            detail: format!("t must be >= 0, got {t}"),
        });
    }
    let mut out = SpectralFunction::new(f.dim);
    for (alpha, &b) in &f.coeffs {
        let gain = ((alpha.order() as f64) * t).exp();
        if gain > guard {
            return Err(Error::Amplification {
                degree: alpha.order(),
                t,
                guard,
            });
        }
        out.coeffs.insert(alpha.clone(), gain * b);
    }
    Ok(out)
}

/// Spectral mass at or above order `n0`: Σ_{|α| ≥ n0} b_α².
pub fn tail_weight(f: &SpectralFunction, n0: u32) -> f64 {
    f.coeffs
        .iter()
        .filter(|(a, _)| a.order() >= n0)
        .map(|(_, b)| b * b)
        .sum()
}
