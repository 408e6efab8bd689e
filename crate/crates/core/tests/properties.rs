//! Randomized invariants over the whole pipeline.
//!
//! Sampled excursions live on the dyadic increment lattice, so the tree
//! pseudometric identities hold in real arithmetic and every comparison
//! here is exact, with no tolerance. Where a property is only real-exact
//! up to expression rewriting (star bands, map chains), inputs are
//! generated with interior margins instead.

use proptest::prelude::*;

use starry::dimension::{counterexample_distance, covering_number, CounterexampleSpace};
use starry::excursion::brownian_excursion;
use starry::io::{read_excursion_csv, write_excursion_csv};
use starry::metric::DenseMetric;
use starry::snake::{map_metric, simulate_labels, SampleStrategy};
use starry::stars::{default_window_lengths, scan_windows, verify_star_at, window_tolerance};
use starry::TreeMetric;

fn grid_cells() -> impl Strategy<Value = usize> {
    prop_oneof![Just(16usize), Just(32), Just(64), Just(128), Just(256)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tree_distance_is_an_exact_pseudometric(
        seed in any::<u64>(),
        n_cells in grid_cells(),
        picks in prop::array::uniform3(0usize..10_000),
    ) {
        let tm = TreeMetric::build(brownian_excursion(n_cells, seed).unwrap());
        let [i, j, k] = picks.map(|p| p % (n_cells + 1));
        let d = |a: usize, b: usize| tm.dist(a, b).unwrap();
        prop_assert_eq!(d(i, i), 0.0);
        prop_assert_eq!(d(i, j), d(j, i));
        prop_assert!(d(i, j) >= 0.0);
        prop_assert!(d(i, k) <= d(i, j) + d(j, k));
    }

    #[test]
    fn tree_distance_satisfies_the_four_point_bound(
        seed in any::<u64>(),
        n_cells in grid_cells(),
        picks in prop::array::uniform4(0usize..10_000),
    ) {
        let tm = TreeMetric::build(brownian_excursion(n_cells, seed).unwrap());
        let [i, j, k, l] = picks.map(|p| p % (n_cells + 1));
        let d = |a: usize, b: usize| tm.dist(a, b).unwrap();
        let lhs = d(i, j) + d(k, l);
        let rhs = (d(i, k) + d(j, l)).max(d(i, l) + d(j, k));
        prop_assert!(lhs <= rhs, "4-point violated: {lhs} > {rhs}");
    }

    #[test]
    fn interval_min_matches_brute_scan(
        seed in any::<u64>(),
        n_cells in grid_cells(),
        picks in prop::array::uniform2(0usize..10_000),
    ) {
        let tm = TreeMetric::build(brownian_excursion(n_cells, seed).unwrap());
        let [i, j] = picks.map(|p| p % (n_cells + 1));
        let (lo, hi) = (i.min(j), i.max(j));
        let brute = tm.grid().values()[lo..=hi]
            .iter()
            .fold(f64::INFINITY, |a, &b| a.min(b));
        prop_assert_eq!(tm.interval_min(i, j).unwrap(), brute);
    }

    #[test]
    fn excursion_csv_round_trips_bitwise(seed in any::<u64>(), n_cells in grid_cells()) {
        let grid = brownian_excursion(n_cells, seed).unwrap();
        let mut buf = Vec::new();
        write_excursion_csv(&grid, &mut buf).unwrap();
        let back = read_excursion_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(back.values(), grid.values());
    }

    #[test]
    fn map_metric_is_a_closed_pseudometric(seed in any::<u64>()) {
        let tm = TreeMetric::build(brownian_excursion(64, seed).unwrap());
        let sl = simulate_labels(&tm, seed ^ 0x9e37);
        let mm = map_metric(&sl, 12, SampleStrategy::UniformStride).unwrap();
        let m = mm.len();
        for a in 0..m {
            prop_assert_eq!(mm.d_map_at(a, a), 0.0);
            for b in 0..m {
                prop_assert_eq!(mm.d_map_at(a, b), mm.d_map_at(b, a));
                prop_assert!(mm.d_map_at(a, b) <= mm.d_circ_at(a, b));
                for c in 0..m {
                    // Fixpoint of the relaxation: no relay improves.
                    prop_assert!(mm.d_map_at(a, b) <= mm.d_map_at(a, c) + mm.d_map_at(c, b));
                }
            }
        }
    }

    #[test]
    fn star_verification_is_monotone_in_eta(
        n in 2usize..6,
        a in 1.6f64..3.5,
        eta_frac in 0.05f64..0.6,
        widen in 0.05f64..0.9,
        rho in prop_oneof![Just(0.5f64), Just(1.0), Just(2.0)],
        center_u in prop::collection::vec(0.05f64..0.95, 5),
        pair_u in prop::collection::vec(0.05f64..0.95, 10),
    ) {
        // Distances planted strictly inside the star bands, so float
        // rounding cannot flip a verdict at a band edge.
        let eta = eta_frac * (a - 1.0) / 2.0;
        let d0: Vec<f64> = (0..n).map(|k| rho * (1.0 + eta * center_u[k])).collect();
        let dp = |i: usize, j: usize| {
            let u = pair_u[(i * 7 + j * 3) % pair_u.len()].min(pair_u[(j * 7 + i * 3) % pair_u.len()]);
            rho * ((a - eta) + eta * u)
        };
        let oracle = DenseMetric::from_fn(n + 1, |i, j| {
            if i == j {
                0.0
            } else if i == 0 {
                d0[j - 1]
            } else if j == 0 {
                d0[i - 1]
            } else {
                dp(i - 1, j - 1)
            }
        });
        let sats: Vec<usize> = (1..=n).collect();
        prop_assert!(verify_star_at(&oracle, 0, &sats, a, eta, rho).unwrap());

        let eta_wider = eta + widen * ((a - 1.0) / 2.0 - eta) * 0.98;
        prop_assert!(verify_star_at(&oracle, 0, &sats, a, eta_wider, rho).unwrap());
    }

    #[test]
    fn window_scan_is_deterministic_and_packed(seed in any::<u64>(), n in 3u32..7) {
        let grid = brownian_excursion(4096, seed).unwrap();
        let lengths = default_window_lengths(n, grid.n_cells());
        let first = scan_windows(&grid, n, &lengths).unwrap();
        let second = scan_windows(&grid, n, &lengths).unwrap();
        prop_assert_eq!(&first, &second);
        for w in &first {
            prop_assert_eq!(w.n, n);
            prop_assert!(w.t_idx <= grid.n_cells());
            prop_assert!(w.len_cells().is_power_of_two());
            prop_assert!(w.tol >= 0.0 && w.tol < window_tolerance(n));
        }
        for pair in first.windows(2) {
            prop_assert!(pair[1].s_idx >= pair[0].t_idx, "windows overlap");
        }
    }

    #[test]
    fn covering_number_is_monotone(
        center_pick in 0usize..10_000,
        r_outer in 0.02f64..0.7,
        shrink in 0.1f64..0.9,
        coarsen in 1.05f64..2.0,
    ) {
        let space = CounterexampleSpace::new(8).unwrap();
        let ids = space.ids();
        let center = center_pick % ids.len();
        let r_inner = r_outer * shrink;
        let base = covering_number(&ids, &space, center, r_outer, r_inner).unwrap();
        if r_inner * coarsen < r_outer {
            let coarser = covering_number(&ids, &space, center, r_outer, r_inner * coarsen).unwrap();
            prop_assert!(coarser <= base);
        }
        let wider = covering_number(&ids, &space, center, r_outer * coarsen, r_inner).unwrap();
        prop_assert!(wider >= base);
    }

    #[test]
    fn counterexample_distance_is_an_exact_pseudometric(
        picks in prop::array::uniform3((1u32..=12, 1u32..=12)),
    ) {
        let pt = |(n, m): (u32, u32)| starry::dimension::CounterexamplePoint::new(n, m).unwrap();
        let [p, q, r] = picks.map(pt);
        let d = counterexample_distance;
        prop_assert_eq!(d(p, p), 0.0);
        prop_assert_eq!(d(p, q), d(q, p));
        prop_assert!(d(p, q) >= 0.0);
        prop_assert!(d(p, r) <= d(p, q) + d(q, r));
    }
}
