//! Downhill simplex minimizer. Deterministic: vertex ordering breaks value
//! ties by insertion order (stable sort under `total_cmp`), so reruns of
//! the same problem produce identical iterates.

/// Outcome of one simplex run.
#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    /// Simplex collapsed below the diameter tolerance within the budget.
    pub converged: bool,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

/// Minimize `objective` from `start`, with an initial simplex of edge
/// `step` along each coordinate. Stops when the simplex diameter falls
/// below `diameter_tol` or after roughly `max_evals` objective calls (a
/// final iteration may run a few calls past the budget).
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(
    objective: F,
    start: &[f64],
    step: f64,
    diameter_tol: f64,
    max_evals: usize,
) -> NelderMeadResult {
    let n = start.len();
    assert!(n > 0, "nelder_mead needs at least one coordinate");
    assert!(step > 0.0, "nelder_mead needs a positive initial step");
    let mut evals = 0usize;

    let mut simplex: Vec<(f64, Vec<f64>)> = Vec::with_capacity(n + 1);
    let v0 = start.to_vec();
    simplex.push((objective(&v0), v0));
    evals += 1;
    for i in 0..n {
        let mut v = start.to_vec();
        v[i] += step;
        simplex.push((objective(&v), v));
        evals += 1;
    }

    let mut converged = false;
    loop {
        simplex.sort_by(|p, q| p.0.total_cmp(&q.0));
        if diameter(&simplex) < diameter_tol {
            converged = true;
            break;
        }
        if evals >= max_evals {
            break;
        }

        let worst = simplex[n].1.clone();
        let mut centroid = vec![0.0; n];
        for (_, v) in simplex.iter().take(n) {
            for (c, vj) in centroid.iter_mut().zip(v) {
                *c += vj;
            }
        }
        for c in centroid.iter_mut() {
            *c /= n as f64;
        }

        let xr: Vec<f64> = (0..n)
            .map(|j| centroid[j] + REFLECT * (centroid[j] - worst[j]))
            .collect();
        let fr = objective(&xr);
        evals += 1;

        if fr < simplex[0].0 {
            let xe: Vec<f64> = (0..n)
                .map(|j| centroid[j] + EXPAND * (xr[j] - centroid[j]))
                .collect();
            let fe = objective(&xe);
            evals += 1;
            simplex[n] = if fe < fr { (fe, xe) } else { (fr, xr) };
        } else if fr < simplex[n - 1].0 {
            simplex[n] = (fr, xr);
        } else {
            let contracted = if fr < simplex[n].0 {
                let xc: Vec<f64> = (0..n)
                    .map(|j| centroid[j] + CONTRACT * (xr[j] - centroid[j]))
                    .collect();
                let fc = objective(&xc);
                evals += 1;
                (fc <= fr).then_some((fc, xc))
            } else {
                let xc: Vec<f64> = (0..n)
                    .map(|j| centroid[j] + CONTRACT * (worst[j] - centroid[j]))
                    .collect();
                let fc = objective(&xc);
                evals += 1;
                (fc < simplex[n].0).then_some((fc, xc))
            };
            match contracted {
                Some(v) => simplex[n] = v,
                None => {
                    let best = simplex[0].1.clone();
                    for vertex in simplex.iter_mut().skip(1) {
                        let v: Vec<f64> = (0..n)
                            .map(|j| best[j] + SHRINK * (vertex.1[j] - best[j]))
                            .collect();
                        *vertex = (objective(&v), v);
                        evals += 1;
                    }
                }
            }
        }
    }

    NelderMeadResult {
        x: simplex[0].1.clone(),
        value: simplex[0].0,
        evals,
        converged,
    }
}

/// Largest Euclidean distance from the best vertex to any other.
fn diameter(simplex: &[(f64, Vec<f64>)]) -> f64 {
    let best = &simplex[0].1;
    simplex[1..]
        .iter()
        .map(|(_, v)| {
            v.iter()
                .zip(best)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max)
}
