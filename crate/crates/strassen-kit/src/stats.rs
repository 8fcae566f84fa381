//! Small numeric helpers shared across modules.

/// Standard normal survival function `P(Z ≥ x)`.
pub(crate) fn normal_sf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(x / std::f64::consts::SQRT_2)
}

/// Pairwise summation in index order; deterministic for any worker count
/// because callers materialize the addends in index order first.
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 64 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}
