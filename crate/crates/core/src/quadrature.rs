//! Integration against the standard Gaussian measure γₙ: tensor
//! Gauss-Hermite rules (probabilist normalization, weights sum to 1) and
//! seeded Monte Carlo behind a single integration contract.
//!
//! Chunked accumulation keeps results bit-identical for a given rule and
//! seed regardless of thread count: per-chunk partial sums are collected in
//! chunk order and folded sequentially.

use crate::error::{Error, Result};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use std::io::Write;

/// Hard cap on materialized tensor-node counts.
pub const NODE_BUDGET: u64 = 10_000_000;

/// Nodes per accumulation chunk. Fixed so that chunk boundaries, and hence
/// Monte Carlo streams and floating-point summation order, never depend on
/// thread count.
const CHUNK: u64 = 8192;

/// A quadrature rule over (ℝⁿ, γₙ).
#[derive(Debug, Clone)]
pub enum QuadratureRule {
    /// Tensor product of a 1-d Gauss-Hermite rule; integrates every
    /// polynomial of total degree ≤ 2·points_per_axis − 1 exactly.
    GaussHermite {
        dim: usize,
        points_per_axis: usize,
        nodes_1d: Vec<f64>,
        weights_1d: Vec<f64>,
    },
    /// Equal-weight seeded sample stream from γₙ; nodes are generated on
    /// the fly from (seed, chunk index) and never materialized.
    MonteCarlo {
        dim: usize,
        samples: u64,
        seed: u64,
        antithetic: bool,
    },
}

/// Build the tensor Gauss-Hermite rule with `points_per_axis` nodes per axis.
pub fn gauss_hermite_rule(n: usize, points_per_axis: usize) -> Result<QuadratureRule> {
    if n == 0 || points_per_axis == 0 {
        return Err(Error::InvalidInput(
            "gauss_hermite_rule requires n >= 1 and points_per_axis >= 1".into(),
        ));
    }
    let count = (points_per_axis as u128).pow(n as u32);
    if count > NODE_BUDGET as u128 {
        return Err(Error::NodeBudget {
            requested: count,
            limit: NODE_BUDGET,
        });
    }
    let (nodes_1d, weights_1d) = gauss_hermite_1d(points_per_axis)?;
    Ok(QuadratureRule::GaussHermite {
        dim: n,
        points_per_axis,
        nodes_1d,
        weights_1d,
    })
}

/// Build a reproducible Monte Carlo rule with `samples` draws from γₙ.
pub fn mc_rule(n: usize, samples: u64, seed: u64) -> QuadratureRule {
    QuadratureRule::MonteCarlo {
        dim: n,
        samples,
        seed,
        antithetic: false,
    }
}

/// Monte Carlo rule drawing mirrored pairs (y, −y); halves the variance of
/// the even part of the integrand at the same sample count.
pub fn mc_rule_antithetic(n: usize, samples: u64, seed: u64) -> QuadratureRule {
    QuadratureRule::MonteCarlo {
        dim: n,
        samples,
        seed,
        antithetic: true,
    }
}

/// Weighted sum of `g` over the rule's nodes.
///
/// Returns (value, error_estimate): the estimate is 0 for Gauss-Hermite
/// (exact on polynomials within the rule's degree) and the sample standard
/// error for Monte Carlo. Any non-finite `g(node)` aborts with the node.
pub fn integrate<G>(rule: &QuadratureRule, g: G) -> Result<(f64, f64)>
where
    G: Fn(&[f64]) -> f64 + Sync,
{
    rule.integrate(&g, true)
}

impl QuadratureRule {
    pub fn dim(&self) -> usize {
        match self {
            QuadratureRule::GaussHermite { dim, .. } => *dim,
            QuadratureRule::MonteCarlo { dim, .. } => *dim,
        }
    }

    pub fn node_count(&self) -> u64 {
        match self {
            QuadratureRule::GaussHermite {
                dim,
                points_per_axis,
                ..
            } => (*points_per_axis as u64).pow(*dim as u32),
            QuadratureRule::MonteCarlo { samples, .. } => *samples,
        }
    }

    /// Largest total polynomial degree integrated exactly (0 for Monte Carlo).
    pub fn exactness_degree(&self) -> u32 {
        match self {
            QuadratureRule::GaussHermite {
                points_per_axis, ..
            } => 2 * *points_per_axis as u32 - 1,
            QuadratureRule::MonteCarlo { .. } => 0,
        }
    }

    pub fn is_stochastic(&self) -> bool {
        matches!(self, QuadratureRule::MonteCarlo { .. })
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            QuadratureRule::GaussHermite { .. } => None,
            QuadratureRule::MonteCarlo { seed, .. } => Some(*seed),
        }
    }

    /// Short descriptor for reports.
    pub fn describe(&self) -> String {
        match self {
            QuadratureRule::GaussHermite {
                dim,
                points_per_axis,
                ..
            } => format!("gauss-hermite n={dim} points={points_per_axis}"),
            QuadratureRule::MonteCarlo {
                dim,
                samples,
                seed,
                antithetic,
            } => {
                format!("monte-carlo n={dim} samples={samples} seed={seed} antithetic={antithetic}")
            }
        }
    }

    /// The i-th node, materialized. Intended for dumps and tests; hot paths
    /// stream nodes chunk by chunk instead.
    pub fn node(&self, i: u64) -> Vec<f64> {
        match self {
            QuadratureRule::GaussHermite {
                dim,
                points_per_axis,
                nodes_1d,
                ..
            } => {
                let p = *points_per_axis as u64;
                let mut k = i;
                (0..*dim)
                    .map(|_| {
                        let digit = (k % p) as usize;
                        k /= p;
                        nodes_1d[digit]
                    })
                    .collect()
            }
            QuadratureRule::MonteCarlo { dim, .. } => {
                let chunk_idx = i / CHUNK;
                let offset = (i - chunk_idx * CHUNK) as usize;
                let len = self.chunk_len(chunk_idx);
                let flat = self.mc_chunk(chunk_idx, len);
                flat[offset * dim..(offset + 1) * dim].to_vec()
            }
        }
    }

    pub fn weight(&self, i: u64) -> f64 {
        match self {
            QuadratureRule::GaussHermite {
                dim,
                points_per_axis,
                weights_1d,
                ..
            } => {
                let p = *points_per_axis as u64;
                let mut k = i;
                let mut w = 1.0;
                for _ in 0..*dim {
                    w *= weights_1d[(k % p) as usize];
                    k /= p;
                }
                w
            }
            QuadratureRule::MonteCarlo { samples, .. } => 1.0 / *samples as f64,
        }
    }

    /// Dump every node and weight as CSV (debugging aid).
    pub fn write_nodes_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let n = self.dim();
        let mut header: Vec<String> = (0..n).map(|j| format!("x{j}")).collect();
        header.push("weight".into());
        let io_err = |e: std::io::Error| Error::Io {
            path: "<csv stream>".into(),
            source: e,
        };
        writeln!(out, "{}", header.join(",")).map_err(io_err)?;
        for i in 0..self.node_count() {
            let node = self.node(i);
            let mut fields: Vec<String> = node.iter().map(|v| format!("{v}")).collect();
            fields.push(format!("{}", self.weight(i)));
            writeln!(out, "{}", fields.join(",")).map_err(io_err)?;
        }
        Ok(())
    }

    /// Every node (row-major, node i at [i*dim..(i+1)*dim]) and weight, in
    /// rule order. Meant for optimizers that sweep the same nodes with many
    /// parameter vectors; capped so a careless rule cannot eat the heap.
    pub fn materialize(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        const CAP: u64 = 1 << 23;
        let count = self.node_count();
        if count > CAP {
            return Err(Error::InvalidInput(format!(
                "rule has {count} nodes, above the materialization cap {CAP}"
            )));
        }
        let dim = self.dim();
        let mut nodes = Vec::with_capacity(count as usize * dim);
        let mut weights = Vec::with_capacity(count as usize);
        match self {
            QuadratureRule::GaussHermite {
                dim,
                points_per_axis,
                nodes_1d,
                weights_1d,
            } => {
                // axis 0 is the fastest digit, matching node(i)
                let mut digits = vec![0usize; *dim];
                for _ in 0..count {
                    let mut w = 1.0;
                    for &d in digits.iter() {
                        nodes.push(nodes_1d[d]);
                        w *= weights_1d[d];
                    }
                    weights.push(w);
                    for d in digits.iter_mut() {
                        *d += 1;
                        if *d < *points_per_axis {
                            break;
                        }
                        *d = 0;
                    }
                }
            }
            QuadratureRule::MonteCarlo { samples, .. } => {
                let w = 1.0 / *samples as f64;
                for chunk_idx in 0..self.n_chunks() {
                    let len = self.chunk_len(chunk_idx);
                    nodes.extend_from_slice(&self.mc_chunk(chunk_idx, len));
                    weights.extend(std::iter::repeat(w).take(len));
                }
            }
        }
        Ok((nodes, weights))
    }

    fn n_chunks(&self) -> u64 {
        self.node_count().div_ceil(CHUNK)
    }

    fn chunk_len(&self, chunk_idx: u64) -> usize {
        let total = self.node_count();
        let start = chunk_idx * CHUNK;
        (total - start).min(CHUNK) as usize
    }

    /// Flat coordinates of one Monte Carlo chunk. The stream id is the chunk
    /// index, so the node set depends only on (seed, chunk) and the full set
    /// is bit-identical for a fixed seed.
    fn mc_chunk(&self, chunk_idx: u64, len: usize) -> Vec<f64> {
        let (dim, seed, antithetic) = match self {
            QuadratureRule::MonteCarlo {
                dim,
                seed,
                antithetic,
                ..
            } => (*dim, *seed, *antithetic),
            _ => unreachable!("mc_chunk on a deterministic rule"),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(chunk_idx + 1);
        let mut flat = vec![0.0f64; len * dim];
        if antithetic {
            let mut i = 0;
            while i < len {
                for j in 0..dim {
                    flat[i * dim + j] = rng.sample(StandardNormal);
                }
                if i + 1 < len {
                    for j in 0..dim {
                        flat[(i + 1) * dim + j] = -flat[i * dim + j];
                    }
                }
                i += 2;
            }
        } else {
            for v in flat.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
        }
        flat
    }

    /// Scalar integration; `parallel` chooses chunk-level parallelism
    /// (results are identical either way).
    pub(crate) fn integrate<G>(&self, g: &G, parallel: bool) -> Result<(f64, f64)>
    where
        G: Fn(&[f64]) -> f64 + Sync,
    {
        let (values, errors) =
            self.integrate_multi_impl(1, &|x, out: &mut [f64]| out[0] = g(x), parallel)?;
        Ok((values[0], errors[0]))
    }

    /// Vector integration: one pass over the nodes filling `m` components.
    pub fn integrate_multi<G>(&self, m: usize, g: G) -> Result<(Vec<f64>, Vec<f64>)>
    where
        G: Fn(&[f64], &mut [f64]) + Sync,
    {
        self.integrate_multi_impl(m, &g, true)
    }

    /// Sequential variant for use inside already-parallel outer loops.
    pub(crate) fn integrate_multi_seq<G>(&self, m: usize, g: &G) -> Result<(Vec<f64>, Vec<f64>)>
    where
        G: Fn(&[f64], &mut [f64]) + Sync,
    {
        self.integrate_multi_impl(m, g, false)
    }

    pub(crate) fn integrate_seq<G>(&self, g: &G) -> Result<(f64, f64)>
    where
        G: Fn(&[f64]) -> f64 + Sync,
    {
        self.integrate(g, false)
    }

    fn integrate_multi_impl<G>(
        &self,
        m: usize,
        g: &G,
        parallel: bool,
    ) -> Result<(Vec<f64>, Vec<f64>)>
    where
        G: Fn(&[f64], &mut [f64]) + Sync,
    {
        let n_chunks = self.n_chunks();
        let run_chunk = |c: u64| self.accumulate_chunk(c, m, g);
        let partials: Vec<ChunkPartial> = if parallel && n_chunks > 1 {
            (0..n_chunks).into_par_iter().map(run_chunk).collect()
        } else {
            (0..n_chunks).map(run_chunk).collect()
        };

        let mut sums = vec![0.0f64; m];
        let mut sumsqs = vec![0.0f64; m];
        let mut pairs = 0u64;
        for p in partials {
            if let Some((value, node)) = p.bad {
                return Err(Error::NonFiniteIntegrand { value, node });
            }
            for j in 0..m {
                sums[j] += p.sums[j];
                sumsqs[j] += p.sumsqs[j];
            }
            pairs += p.units;
        }

        let errors = match self {
            QuadratureRule::GaussHermite { .. } => vec![0.0; m],
            QuadratureRule::MonteCarlo { .. } => {
                // sumsqs carry the same 1/samples weighting as sums, so
                // they already estimate the second moment of the averaging
                // unit (a mirrored pair when antithetic).
                let nu = pairs as f64;
                (0..m)
                    .map(|j| {
                        let mean = sums[j];
                        let var = (sumsqs[j] - mean * mean).max(0.0);
                        (var / nu).sqrt()
                    })
                    .collect()
            }
        };
        Ok((sums, errors))
    }

    fn accumulate_chunk<G>(&self, chunk_idx: u64, m: usize, g: &G) -> ChunkPartial
    where
        G: Fn(&[f64], &mut [f64]) + Sync,
    {
        let len = self.chunk_len(chunk_idx);
        let mut partial = ChunkPartial::new(m);
        let mut out = vec![0.0f64; m];
        match self {
            QuadratureRule::GaussHermite {
                dim,
                points_per_axis,
                nodes_1d,
                weights_1d,
            } => {
                let p = *points_per_axis as u64;
                let mut digits = vec![0usize; *dim];
                let start = chunk_idx * CHUNK;
                for (j, digit) in digits.iter_mut().enumerate() {
                    *digit = ((start / p.pow(j as u32)) % p) as usize;
                }
                let mut node = vec![0.0f64; *dim];
                for step in 0..len {
                    if step > 0 {
                        // odometer increment, axis 0 fastest
                        for j in 0..*dim {
                            digits[j] += 1;
                            if digits[j] < p as usize {
                                break;
                            }
                            digits[j] = 0;
                        }
                    }
                    let mut w = 1.0;
                    for j in 0..*dim {
                        node[j] = nodes_1d[digits[j]];
                        w *= weights_1d[digits[j]];
                    }
                    g(&node, &mut out);
                    for (j, &v) in out.iter().enumerate() {
                        if !v.is_finite() {
                            partial.bad = Some((v, node.clone()));
                            return partial;
                        }
                        partial.sums[j] += w * v;
                    }
                    partial.units += 1;
                }
            }
            QuadratureRule::MonteCarlo {
                dim,
                samples,
                antithetic,
                ..
            } => {
                let flat = self.mc_chunk(chunk_idx, len);
                let w = 1.0 / *samples as f64;
                let mut pair_vals = vec![0.0f64; m];
                let mut i = 0;
                while i < len {
                    let unit = if *antithetic && i + 1 < len { 2 } else { 1 };
                    pair_vals.iter_mut().for_each(|v| *v = 0.0);
                    for s in 0..unit {
                        let node = &flat[(i + s) * dim..(i + s + 1) * dim];
                        g(node, &mut out);
                        for (j, &v) in out.iter().enumerate() {
                            if !v.is_finite() {
                                partial.bad = Some((v, node.to_vec()));
                                return partial;
                            }
                            partial.sums[j] += w * v;
                            pair_vals[j] += v / unit as f64;
                        }
                    }
                    for j in 0..m {
                        // weighted by the unit's share so that Σ sumsq/ν − mean²
                        // estimates the variance of the averaging unit
                        let share = unit as f64 * w;
                        partial.sumsqs[j] += share * pair_vals[j] * pair_vals[j];
                    }
                    partial.units += 1;
                    i += unit;
                }
            }
        }
        partial
    }
}

struct ChunkPartial {
    sums: Vec<f64>,
    sumsqs: Vec<f64>,
    units: u64,
    bad: Option<(f64, Vec<f64>)>,
}

impl ChunkPartial {
    fn new(m: usize) -> Self {
        ChunkPartial {
            sums: vec![0.0; m],
            sumsqs: vec![0.0; m],
            units: 0,
            bad: None,
        }
    }
}

/// 1-d Gauss-Hermite nodes and weights for the probabilists' weight φ(x)dx,
/// via the Golub-Welsch eigenvalue method on the Jacobi matrix
/// (diagonal 0, off-diagonal √k). Weights are the squared first eigenvector
/// components; nodes are symmetrized in pairs so the rule is exactly odd-even
/// balanced.
fn gauss_hermite_1d(p: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut d = vec![0.0f64; p];
    let mut e: Vec<f64> = (1..p).map(|k| (k as f64).sqrt()).collect();
    e.push(0.0);
    let mut z = vec![0.0f64; p];
    z[0] = 1.0;
    tridiagonal_eigen_first_row(&mut d, &mut e, &mut z)?;

    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let mut nodes: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let mut weights: Vec<f64> = order.iter().map(|&i| z[i] * z[i]).collect();

    for i in 0..p / 2 {
        let j = p - 1 - i;
        let half = 0.5 * (nodes[j] - nodes[i]);
        nodes[i] = -half;
        nodes[j] = half;
        let w = 0.5 * (weights[i] + weights[j]);
        weights[i] = w;
        weights[j] = w;
    }
    if p % 2 == 1 {
        nodes[p / 2] = 0.0;
    }
    let total: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= total;
    }
    Ok((nodes, weights))
}

/// Implicit-shift QL iteration for a symmetric tridiagonal matrix, rotating
/// only the first row of the eigenvector matrix (all the Golub-Welsch
/// weights need). `d` holds the diagonal in, eigenvalues out; `e` the
/// off-diagonal in `e[0..n-1]`; `z` the first-row components.
fn tridiagonal_eigen_first_row(d: &mut [f64], e: &mut [f64], z: &mut [f64]) -> Result<()> {
    let n = d.len();
    if n == 1 {
        return Ok(());
    }
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::InvalidInput(
                    "tridiagonal eigenvalue iteration failed to converge".into(),
                ));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0f64;
            let mut c = 1.0f64;
            let mut shift = 0.0f64;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= shift;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - shift;
                r = (d[i] - g) * s + 2.0 * c * b;
                shift = s * r;
                d[i + 1] = g + shift;
                g = c * r - b;
                f = z[i + 1];
                z[i + 1] = s * z[i] + c * f;
                z[i] = c * z[i] - s * f;
            }
            if underflow {
                continue;
            }
            d[l] -= shift;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}
