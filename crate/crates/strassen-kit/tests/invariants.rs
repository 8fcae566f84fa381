//! Property suites: homogeneity, additivity, convexity, modulus validity,
//! and determinism under worker count.

mod common;

use common::random_grid_function;
use proptest::prelude::*;

use strassen_kit::characteristics::ProcessSpec;
use strassen_kit::grid::GridFunction;
use strassen_kit::mdp::{self, EventSpec, Method};
use strassen_kit::ratefn::{
    inf_rate_over_ball, modulus_bound, rate_i, rate_j_discrete, sublevel_project, RateParams,
};
use strassen_kit::sampler::{mc_moments, mix_seed};
use strassen_kit::ScalingFn;

fn grid_values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, 4..40).prop_map(|mut v| {
        v[0] = 0.0;
        v
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rate_is_quadratically_homogeneous(values in grid_values(), c in -4.0f64..4.0) {
        let f = GridFunction::new(values).unwrap();
        let params = RateParams::standard();
        let i = rate_i(&f, &params);
        let scaled = rate_i(&f.scaled(c), &params);
        prop_assert!((scaled - c * c * i).abs() <= 1e-12 * i.max(1.0));
    }

    #[test]
    fn dual_below_rate_for_random_gamma(values in grid_values(), gamma in 0.2f64..3.0) {
        let f = GridFunction::new(values).unwrap();
        let params = RateParams::new(gamma, 1.0).unwrap();
        let i = rate_i(&f, &params);
        let (j, _) = rate_j_discrete(&f, &params).unwrap();
        prop_assert!(j <= i + 1e-10 * i.max(1.0));
    }

    #[test]
    fn variance_additive_over_split(split in 0.01f64..0.99, horizon in 0.5f64..30.0) {
        for spec in [
            ProcessSpec::brownian(),
            ProcessSpec::compound_poisson_pm1(1.5),
            ProcessSpec::truncated_levy(),
            ProcessSpec::weighted_levy(1.0),
        ] {
            let mid = split * horizon;
            let whole = spec.variance(0.0, horizon).unwrap();
            let parts = spec.variance(0.0, mid).unwrap() + spec.variance(mid, horizon).unwrap();
            prop_assert!((whole - parts).abs() <= 1e-10 * whole.max(1.0));
        }
    }

    #[test]
    fn cumulant_midpoint_convexity(a in -3.0f64..3.0, b in -3.0f64..3.0) {
        for spec in [
            ProcessSpec::compound_poisson_pm1(1.0),
            ProcessSpec::weighted_levy(1.0),
        ] {
            let t = 2.0;
            let ca = spec.cumulant(a, 0.0, t).unwrap();
            let cb = spec.cumulant(b, 0.0, t).unwrap();
            let cm = spec.cumulant(0.5 * (a + b), 0.0, t).unwrap();
            prop_assert!(cm <= 0.5 * (ca + cb) + 1e-9);
        }
    }

    #[test]
    fn tube_infimum_nonincreasing_in_delta(values in grid_values(), d1 in 0.01f64..0.5, d2 in 0.01f64..0.5) {
        let f = GridFunction::new(values).unwrap();
        let params = RateParams::standard();
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        let (inf_wide, _) = inf_rate_over_ball(&f, hi, &params).unwrap();
        let (inf_narrow, _) = inf_rate_over_ball(&f, lo, &params).unwrap();
        prop_assert!(inf_wide <= inf_narrow + 1e-9);
    }

    #[test]
    fn projected_members_satisfy_rate_cap(values in grid_values(), r in 0.05f64..2.0) {
        let f = GridFunction::new(values).unwrap();
        let params = RateParams::standard();
        let (g, dist) = sublevel_project(&f, r, &params).unwrap();
        prop_assert!(rate_i(&g, &params) <= r * (1.0 + 1e-12));
        prop_assert!(dist >= 0.0);
    }

    #[test]
    fn mix_seed_separates_indices(master in any::<u64>(), i in 0u64..1000, j in 0u64..1000) {
        prop_assume!(i != j);
        prop_assert!(mix_seed(master, i) != mix_seed(master, j));
    }
}

/// Modulus bound over members of Φ(r) produced by projection: every knot
/// pair of every member obeys the Cauchy–Schwarz modulus.
#[test]
fn modulus_bound_holds_over_projected_members() {
    for (params, r) in [
        (RateParams::standard(), 0.5),
        (RateParams::new(2.0, 1.3).unwrap(), 0.8),
    ] {
        for seed in 0..1000u64 {
            let f = random_grid_function(24, seed, true);
            let (g, _) = sublevel_project(&f, r, &params).unwrap();
            let n = g.segments();
            for a in 0..=n {
                for b in (a + 1)..=n {
                    let (s, t) = (g.knot(a), g.knot(b));
                    let bound = modulus_bound(r, &params, s, t);
                    let diff = (g.values()[b] - g.values()[a]).abs();
                    assert!(
                        diff <= bound + 1e-9,
                        "seed {seed}: |g({t})-g({s})| = {diff} > {bound}"
                    );
                }
            }
        }
    }
}

/// Bit-identical estimates for any worker count.
#[test]
fn estimates_do_not_depend_on_thread_count() {
    let spec = ProcessSpec::compound_poisson_pm1(2.0);
    let scaling = ScalingFn::power(1.0, 0.75).unwrap();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| {
            let moments = mc_moments(&spec, 3.0, 20_000, 515).unwrap();
            let tail = mdp::tail_probability(
                &spec,
                &scaling,
                50.0,
                &EventSpec::Endpoint { c: 0.6 },
                Method::Tilted,
                20_000,
                516,
            )
            .unwrap();
            (moments, tail)
        })
    };
    let a = run(1);
    let b = run(3);
    assert_eq!(a.0, b.0);
    assert_eq!(a.1, b.1);
}

/// Empirical variance tracks the closed-form variance for every built-in
/// spec family at several horizons.
#[test]
fn empirical_variance_matches_closed_form() {
    let n = 30_000u64;
    for spec in [
        ProcessSpec::brownian(),
        ProcessSpec::compound_poisson_pm1(2.0),
        ProcessSpec::truncated_levy(),
        ProcessSpec::weighted_levy(1.0),
    ] {
        for t in [1.0, 10.0, 100.0] {
            let est = mc_moments(&spec, t, n, 99).unwrap();
            let exact = spec.variance(0.0, t).unwrap();
            if exact == 0.0 {
                assert_eq!(est.variance, 0.0);
                continue;
            }
            assert!(
                (est.variance - exact).abs() <= 5.0 * est.se_variance.max(1e-12),
                "{} t={t}: est {} exact {exact} se {}",
                spec.label,
                est.variance,
                est.se_variance
            );
        }
    }
}
