#![allow(dead_code)]

use std::collections::VecDeque;

use dedq_core::des::{simulate_with, ArrivalSource, PathRecord, RunSetup};
use dedq_core::Class;

/// Replays fixed inter-arrival and patience sequences; exhausted lists give
/// arrivals far in the future and infinite patience.
pub struct Script {
    arrivals: [VecDeque<f64>; 2],
    patience: [VecDeque<f64>; 2],
    repeat: [Option<f64>; 2],
}

impl Script {
    pub fn new(plus: &[f64], minus: &[f64]) -> Self {
        Script {
            arrivals: [
                plus.iter().copied().collect(),
                minus.iter().copied().collect(),
            ],
            patience: [VecDeque::new(), VecDeque::new()],
            repeat: [None, None],
        }
    }

    /// Constant inter-arrival times for both classes.
    pub fn periodic(plus: f64, minus: f64) -> Self {
        let mut s = Script::new(&[], &[]);
        s.repeat = [Some(plus), Some(minus)];
        s
    }

    pub fn with_patience(mut self, plus: &[f64], minus: &[f64]) -> Self {
        self.patience = [
            plus.iter().copied().collect(),
            minus.iter().copied().collect(),
        ];
        self
    }
}

impl ArrivalSource for Script {
    fn interarrival(&mut self, class: Class) -> f64 {
        let i = class.index();
        self.arrivals[i]
            .pop_front()
            .or(self.repeat[i])
            .unwrap_or(1e12)
    }

    fn patience(&mut self, class: Class) -> f64 {
        self.patience[class.index()]
            .pop_front()
            .unwrap_or(f64::INFINITY)
    }
}

pub fn run(mut script: Script, q0: u64, horizon: f64) -> PathRecord {
    let setup = RunSetup {
        n: 1,
        horizon,
        lambda: 1.0,
        rates: [1.0, 1.0],
        q0,
    };
    simulate_with(setup, &mut script).unwrap()
}
