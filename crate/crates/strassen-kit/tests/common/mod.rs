//! Shared helpers for integration tests: an independent dense QP oracle and
//! deterministic pseudo-random grid functions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use strassen_kit::grid::GridFunction;
use strassen_kit::ratefn::RateParams;

/// Random piecewise-linear function on `n` segments (bounded-step walk).
/// With `zero_first` the first knot value is 0, keeping the function inside
/// the rate function's domain for γ ≥ 2.
pub fn random_grid_function(n: usize, seed: u64, zero_first: bool) -> GridFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(n + 1);
    values.push(0.0);
    let mut x = 0.0;
    for _ in 0..n {
        x += 0.3 * (rng.random::<f64>() * 2.0 - 1.0);
        values.push(x);
    }
    if zero_first {
        values[1] = 0.0;
    }
    GridFunction::new(values).unwrap()
}

/// Brute-force oracle for the tube infimum: projected gradient descent on
/// the dense quadratic, independent of the coordinate-descent path under
/// test. Intended for small grids (n ≤ 16).
#[allow(dead_code)]
pub fn dense_qp_oracle(
    f: &GridFunction,
    delta: f64,
    params: &RateParams,
    iterations: usize,
) -> (f64, Vec<f64>) {
    let n = f.segments();
    let d: Vec<f64> = (0..n)
        .map(|j| f.knot(j + 1).powf(params.gamma) - f.knot(j).powf(params.gamma))
        .collect();
    let sigma_sq = params.sigma_sq;
    let objective = |g: &[f64]| -> f64 {
        (0..n)
            .map(|j| {
                let dg = g[j + 1] - g[j];
                dg * dg / d[j]
            })
            .sum::<f64>()
            / (2.0 * sigma_sq)
    };
    // Lipschitz bound for the gradient of the dense quadratic
    let lipschitz = (0..n)
        .map(|j| 2.0 / d[j] / sigma_sq)
        .fold(0.0_f64, f64::max)
        * 2.0;
    let step = 1.0 / lipschitz;
    let mut g = f.values().to_vec();
    for _ in 0..iterations {
        let mut grad = vec![0.0; n + 1];
        for j in 0..n {
            let slope = (g[j + 1] - g[j]) / d[j] / sigma_sq;
            grad[j] -= slope;
            grad[j + 1] += slope;
        }
        for k in 1..=n {
            let center = f.values()[k];
            g[k] = (g[k] - step * grad[k]).clamp(center - delta, center + delta);
        }
    }
    let value = objective(&g);
    (value, g)
}
