//! Property tests for the estimator invariants.

use hfnoise::density::{mirrored_x_grid, truncate_negative, DensityEstimate};
use hfnoise::ecf::{ecf_diff, ecf_error};
use hfnoise::grid::TimeGrid;
use hfnoise::ivol::MultiscaleWeights;
use hfnoise::kernel::{KernelFamily, KernelSpec};
use hfnoise::moments::{convolve_moments, recover_moments};
use hfnoise::neighborhood::build_neighborhoods;
use hfnoise::TickSeries;
use proptest::prelude::*;

fn series_strategy() -> impl Strategy<Value = (TickSeries, f64)> {
    (3usize..24, 0u64..1000).prop_map(|(n, seed)| {
        // deterministic pseudo-random times and values from the seed
        let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15) | 1;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut t = 0.0;
        let mut times = Vec::with_capacity(n);
        let mut vals = Vec::with_capacity(n);
        for _ in 0..n {
            t += 0.2 + next();
            times.push(t);
            vals.push(2.0 * next() - 1.0);
        }
        let grid = TimeGrid::new(times).unwrap();
        let xi = (0.5 + 3.0 * next()) * grid.median_dt();
        (TickSeries::new(grid, vals).unwrap(), xi)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ecf_values_bounded_even_and_one_at_zero((series, xi) in series_strategy(), s in 0.0f64..50.0) {
        let idx = build_neighborhoods(series.grid(), xi).unwrap();
        prop_assume!(!idx.is_empty());
        let est = ecf_error(&series, &idx, &[0.0, s, -s]).unwrap();
        prop_assert_eq!(est.values[0], 1.0);
        for &v in &est.values {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        // evenness is exact: cos(-x) == cos(x) in IEEE arithmetic
        prop_assert_eq!(est.values[1], est.values[2]);
        // the squared estimate is the diff-law estimate
        let diff = ecf_diff(&series, &idx, &[s]).unwrap();
        prop_assert!((diff.values[0] - est.values[1] * est.values[1]).abs() < 1e-15);
    }

    #[test]
    fn moment_recursion_round_trips(
        variances in proptest::collection::vec(0.25f64..4.0, 1..4),
        weights in proptest::collection::vec(0.1f64..1.0, 4),
        kmax in 1usize..=8,
    ) {
        // realizable symmetric moment sequences: centered Gaussian
        // mixtures, M_{2k} = sum_i w_i (2k-1)!! v_i^k
        let total: f64 = weights[..variances.len()].iter().sum();
        let m_u: Vec<f64> = (1..=kmax)
            .map(|k| {
                let mut dfact = 1.0;
                let mut i = 2 * k as i64 - 1;
                while i > 1 {
                    dfact *= i as f64;
                    i -= 2;
                }
                dfact
                    * variances
                        .iter()
                        .zip(&weights)
                        .map(|(&v, &w)| w * v.powi(k as i32))
                        .sum::<f64>()
                    / total
            })
            .collect();
        let m_tilde = convolve_moments(&m_u);
        let back = recover_moments(&m_tilde);
        for (k, (a, b)) in m_u.iter().zip(&back).enumerate() {
            prop_assert!((a - b).abs() <= 1e-12 * a.abs(), "k={} {} vs {}", k, a, b);
        }
        // exact half relation at the base
        prop_assert_eq!(back[0], m_tilde[0] / 2.0);
    }

    #[test]
    fn truncation_clamps_preserving_positive_mass(vals in proptest::collection::vec(-1.0f64..2.0, 8..64)) {
        let count = vals.len() & !1;
        prop_assume!(count >= 8);
        let est = DensityEstimate {
            x_grid: mirrored_x_grid(1.0, count),
            values: vals[..count].to_vec(),
            kernel: KernelSpec::new(KernelFamily::Sinc, 1.0).unwrap(),
            xi: 0.0,
            truncated: false,
        };
        let t = truncate_negative(&est);
        prop_assert!(t.truncated);
        prop_assert!(t.values.iter().all(|&v| v >= 0.0));
        prop_assert!(hfnoise::density::mass(&t) >= hfnoise::density::mass(&est));
        // idempotent
        let tt = truncate_negative(&t);
        prop_assert_eq!(&tt.values, &t.values);
    }

    #[test]
    fn multiscale_weight_identities(n in 9usize..5000) {
        let w = MultiscaleWeights::new(n).unwrap();
        let sum: f64 = w.a.iter().sum();
        let sum_over_k: f64 = w.a.iter().enumerate().map(|(m, a)| a / (m + 1) as f64).sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
        prop_assert!(sum_over_k.abs() < 1e-12);
        prop_assert!((w.zeta - 2.0 / (n + 1) as f64).abs() < 1e-15);
    }

    #[test]
    fn neighborhood_symmetry_and_totals((series, xi) in series_strategy()) {
        let idx = build_neighborhoods(series.grid(), xi).unwrap();
        // (j,l) present iff (l,j) present
        let pairs: std::collections::HashSet<(usize, usize)> = idx.ordered_pairs().collect();
        for &(j, l) in &pairs {
            prop_assert!(pairs.contains(&(l, j)));
        }
        prop_assert_eq!(pairs.len(), idx.total());
        let counts_sum: usize = idx.counts().iter().sum();
        prop_assert_eq!(counts_sum, idx.total());
    }
}
