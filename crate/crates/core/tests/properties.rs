//! Randomized invariants of simulated paths.

use dedq_core::des::{simulate, verify_conservation, PathRecord};
use dedq_core::model::{
    FixedBase, FixedCdf, Hazard, InitialQueue, InterArrivalFamily, InterArrivalSpec, PatienceSpec,
};
use dedq_core::path_analysis::{
    check_offered_waits, eventual_abandon, offered_waits, virtual_wait,
};
use dedq_core::{Class, ModelConfig, RngStream};
use proptest::prelude::*;

fn arrival(kind: u8, lambda: f64) -> InterArrivalSpec {
    let m = 1.0 / lambda;
    let family = match kind % 5 {
        0 => InterArrivalFamily::Exponential { mean: m },
        1 => InterArrivalFamily::Gamma {
            shape: 2.0,
            mean: m,
        },
        2 => InterArrivalFamily::Deterministic { value: m },
        3 => InterArrivalFamily::Uniform {
            low: 0.0,
            high: 2.0 * m,
        },
        _ => InterArrivalFamily::HyperExponential2 {
            p: 0.5,
            mean1: 0.5 * m,
            mean2: 1.5 * m,
        },
    };
    InterArrivalSpec::new(family).unwrap()
}

fn patience(kind: u8, rate: f64) -> PatienceSpec {
    match kind % 6 {
        0 => PatienceSpec::None,
        1 => PatienceSpec::exponential(rate).unwrap(),
        2 => PatienceSpec::FixedCdf(
            FixedCdf::new(FixedBase::Uniform { upper: 1.0 / rate }, Some(0.7 / rate)).unwrap(),
        ),
        3 => PatienceSpec::constant_hazard(rate).unwrap(),
        4 => PatienceSpec::HazardScaled(
            Hazard::piecewise(vec![0.5, 1.5], vec![rate, 0.0, 2.0 * rate]).unwrap(),
        ),
        _ => PatienceSpec::HazardScaled(Hazard::affine_capped(0.1, rate, 3.0).unwrap()),
    }
}

prop_compose! {
    fn config_strategy()(
        lambda in 0.5f64..2.0,
        c_rel in -0.9f64..1.0,
        a1 in 0u8..5, a2 in 0u8..5,
        p1 in 0u8..6, p2 in 0u8..6,
        r1 in 0.2f64..3.0, r2 in 0.2f64..3.0,
        q0 in 0u64..6,
    ) -> ModelConfig {
        ModelConfig::new(
            lambda,
            c_rel * lambda,
            arrival(a1, lambda),
            arrival(a2, lambda),
            patience(p1, r1),
            patience(p2, r2),
            InitialQueue::Count(q0),
        )
        .unwrap()
    }
}

fn path_strategy() -> impl Strategy<Value = PathRecord> {
    (
        config_strategy(),
        prop::sample::select(vec![1u64, 4, 16, 64]),
        1.0f64..8.0,
        any::<u64>(),
    )
        .prop_map(|(cfg, n, horizon, seed)| {
            simulate(&cfg, n, horizon, &mut RngStream::new(seed, 0)).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn conservation_holds(path in path_strategy()) {
        prop_assert!(verify_conservation(&path));
    }

    #[test]
    fn offered_waits_explain_outcomes(path in path_strategy()) {
        let check = check_offered_waits(&path);
        prop_assert!(check.ok(), "{check:?}");
    }

    #[test]
    fn virtual_wait_before_arrival_is_offered_wait(path in path_strategy()) {
        let r = eventual_abandon(&path);
        for ow in offered_waits(&path) {
            let Some(w) = ow.wait else { continue };
            if ow.k < 1 {
                continue;
            }
            let c = path.customer(ow.class, ow.k).unwrap();
            // the left limit at t, skipping paths with simultaneous events
            let t = c.arrival;
            let before = t - 1e-9 * (1.0 + t);
            if path.events.iter().any(|e| e.time >= before && e.time < t) || !r.covers(before) {
                continue;
            }
            let vw = virtual_wait(&path, before)[ow.class.index()];
            if let Some(v) = vw {
                prop_assert!((v - w).abs() <= 2e-9 * (1.0 + t), "class {:?} k {} W {} w {}", ow.class, ow.k, v, w);
            }
        }
    }

    #[test]
    fn eventual_reneges_lead_abandonments(path in path_strategy()) {
        let r = eventual_abandon(&path);
        for e in &path.events {
            if !r.covers(e.time) {
                break;
            }
            for class in Class::BOTH {
                prop_assert!(r.at(class, e.time).unwrap() >= e.counters.g(class));
            }
        }
    }

    #[test]
    fn nonpositive_index_means_class1_waiting(path in path_strategy()) {
        // a class -1 customer with zero offered wait found class 1 waiting,
        // unless it arrived exactly when the class -1 queue emptied
        for ow in offered_waits(&path) {
            if ow.class != Class::Minus || ow.wait != Some(0.0) {
                continue;
            }
            let c = path.customer(Class::Minus, ow.k).unwrap();
            let partner_time = match c.outcome {
                dedq_core::des::Outcome::Matched { time, .. } => time,
                _ => continue,
            };
            prop_assert_eq!(partner_time, c.arrival);
        }
    }

    #[test]
    fn deterministic_given_seed(cfg in config_strategy(), seed in any::<u64>()) {
        let a = simulate(&cfg, 16, 4.0, &mut RngStream::new(seed, 3)).unwrap();
        let b = simulate(&cfg, 16, 4.0, &mut RngStream::new(seed, 3)).unwrap();
        prop_assert_eq!(a, b);
    }
}
