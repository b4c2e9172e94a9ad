//! Property tests for the lattice algebra, both protocols and the tradeoff curves.

use coopalign::detection::{substream_rate_lb, union_bound_pe};
use coopalign::harness::fmt_num;
use coopalign::lattice::{derive_params, exact_observations, StreamSet};
use coopalign::rng::{stream_rng, Purpose};
use coopalign::rx::{run_rx_protocol, DetectorMode};
use coopalign::tradeoff::{corner_points, optimal_tradeoff, timeshare};
use coopalign::tx::{run_tx_backhaul, tx_round, TransmitterState};
use proptest::prelude::*;

fn streams(n: usize, q: i64, seed: u64) -> StreamSet {
    StreamSet::random(n, q, &mut stream_rng(seed, 0, Purpose::Symbols, 0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn observations_are_linear(n in 1usize..=2, q1 in 1i64..4, q2 in 1i64..4, s1: u64, s2: u64) {
        let (x, y) = (streams(n, q1, s1), streams(n, q2, s2));
        let sum = exact_observations(&x.add(&y).unwrap()).unwrap();
        let (ox, oy) = (exact_observations(&x).unwrap(), exact_observations(&y).unwrap());
        for i in 0..3 {
            let expect: Vec<i64> = ox[i].values().iter().zip(oy[i].values()).map(|(a, b)| a + b).collect();
            prop_assert_eq!(sum[i].values(), &expect[..]);
        }
    }

    #[test]
    fn observations_stay_in_range(n in 1usize..=2, q in 1i64..6, seed: u64) {
        for obs in exact_observations(&streams(n, q, seed)).unwrap() {
            prop_assert!(obs.max_abs() <= 3 * q);
        }
    }

    #[test]
    fn streams_are_deterministic(n in 1usize..=2, q in 1i64..6, seed: u64) {
        prop_assert_eq!(streams(n, q, seed), streams(n, q, seed));
    }

    #[test]
    fn rx_protocol_recovers_streams(n in 1usize..=2, q in 1i64..6, seed: u64) {
        let s = streams(n, q, seed);
        let mut rng = stream_rng(seed, 1, Purpose::Detection, 0);
        let out = run_rx_protocol(&s, DetectorMode::ExactGenie, &mut rng).unwrap();
        prop_assert_eq!(&out.resolved, &s.tables);
        prop_assert_eq!(out.ledger.total_symbols(), 3 * n.pow(9));
        prop_assert!(!out.contaminated());
        for m in &out.ledger.messages {
            prop_assert!(m.payload.iter().all(|v| v.abs() <= m.alphabet_halfwidth));
        }
    }

    #[test]
    fn tx_backhaul_matches_oracle(n in 1usize..=2, q in 1i64..6, seed: u64) {
        let s = streams(n, q, seed);
        let out = run_tx_backhaul(&s).unwrap();
        prop_assert_eq!(&out.tables, &exact_observations(&s).unwrap());
        prop_assert!(out.ledger.total_symbols() <= 3 * (n + 1).pow(9));
    }

    #[test]
    fn tx_slabs_grow_one_per_round(n in 1usize..=2, seed: u64) {
        let s = streams(n, 2, seed);
        let mut states = s.tables.clone().map(TransmitterState::new);
        let mut last = states.iter().map(|t| t.complete_slabs()).collect::<Vec<_>>();
        for round in 1..=n + 1 {
            tx_round(&mut states, round).unwrap();
            let now: Vec<usize> = states.iter().map(|t| t.complete_slabs()).collect();
            for (a, b) in last.iter().zip(&now) {
                prop_assert_eq!(*b, a + 1);
            }
            last = now;
        }
        prop_assert!(tx_round(&mut states, n + 2).is_err());
    }

    #[test]
    fn timeshare_traces_the_line(lambda in 0.0f64..=1.0) {
        let [p1, p2] = corner_points();
        let pt = timeshare(&p1, &p2, lambda).unwrap();
        prop_assert!((pt.dof - (1.0 + pt.alpha) / 2.0).abs() < 1e-15);
        prop_assert!(pt.dof <= optimal_tradeoff(pt.alpha).unwrap() + 1e-15);
    }

    #[test]
    fn optimal_curve_is_monotone_and_capped(a in 0.0f64..10.0, d in 0.0f64..1.0) {
        let (lo, hi) = (optimal_tradeoff(a).unwrap(), optimal_tradeoff(a + d).unwrap());
        prop_assert!(lo <= hi && hi <= 1.0 && lo >= 0.5);
    }

    #[test]
    fn error_bound_decreases_in_power(e in 280.0f64..300.0, step in 0.5f64..5.0) {
        let p1 = derive_params(10f64.powf(e), 1, 0.05, 1.0).unwrap();
        let p2 = derive_params(10f64.powf(e + step), 1, 0.05, 1.0).unwrap();
        let (a, b) = (union_bound_pe(&p1), union_bound_pe(&p2));
        prop_assert!((0.0..=1.0).contains(&a) && b <= a);
        prop_assert!(substream_rate_lb(b, p2.q.floor()).unwrap() >= substream_rate_lb(a, p1.q.floor()).unwrap());
    }

    #[test]
    fn number_format_round_trips(x in -1e6f64..1e6) {
        let back: f64 = fmt_num(x).parse().unwrap();
        prop_assert!((back - x).abs() <= 5e-12 * x.abs().max(1e-300));
    }
}
