use dedq::config::parse_config;
use dedq::experiments::{dkw_two_sample, run_martingale, run_thm41, run_thm42, run_thm43, ExperimentError, ExperimentPlan};
use dedq_core::model::PatienceSpec;
use dedq_core::ModelConfig;

fn config(patience: &str) -> ModelConfig {
    let text = format!(
        "lambda = 1.0\n[arrival.1]\nfamily = \"exponential\"\n[arrival.-1]\nfamily = \"exponential\"\n{patience}"
    );
    parse_config(&text).unwrap().model
}

fn plan(config: ModelConfig, n_list: Vec<u64>, reps: usize) -> ExperimentPlan {
    ExperimentPlan {
        config,
        n_list,
        horizon: 2.0,
        long_horizon: 5.0,
        reps,
        dt: 1e-2,
        seed: 11,
        stationary_samples: 2000,
        stationary_des: true,
    }
}

const EXP_PATIENCE: &str =
    "[patience.1]\nvariant = \"fixed_cdf\"\nbase = \"exponential\"\nrate = 1.0\n[patience.-1]\nvariant = \"fixed_cdf\"\nbase = \"exponential\"\nrate = 1.0\n";

#[test]
fn plans_are_validated() {
    let good = plan(config(""), vec![4, 16], 3);
    assert!(good.validate().is_ok());
    for bad in [
        ExperimentPlan { n_list: vec![16, 4], ..good.clone() },
        ExperimentPlan { n_list: vec![], ..good.clone() },
        ExperimentPlan { reps: 0, ..good.clone() },
        ExperimentPlan { dt: 0.0, ..good.clone() },
        ExperimentPlan { dt: 3.0, ..good.clone() },
    ] {
        assert!(matches!(run_thm41(&bad), Err(ExperimentError::Plan(_))), "{bad:?}");
    }
}

#[test]
fn reports_are_reproducible() {
    let p = plan(config(EXP_PATIENCE), vec![4, 16], 20);
    assert_eq!(run_thm41(&p).unwrap(), run_thm41(&p).unwrap());
    assert_eq!(run_thm42(&p).unwrap(), run_thm42(&p).unwrap());
    assert_eq!(run_thm43(&p).unwrap(), run_thm43(&p).unwrap());
    let other = ExperimentPlan { seed: 12, ..p.clone() };
    assert_ne!(run_thm42(&p).unwrap(), run_thm42(&other).unwrap());
}

#[test]
fn single_n_trend_passes_trivially() {
    let r = run_thm41(&plan(config(EXP_PATIENCE), vec![16], 5)).unwrap();
    assert!(r.pass);
    assert_eq!(r.rows.len(), 1);
    assert_eq!(r.rows[0].used + r.rows[0].excluded, 5);
}

#[test]
fn trend_without_reneging() {
    let p = ExperimentPlan {
        horizon: 10.0,
        dt: 1e-3,
        ..plan(config(""), vec![16, 64, 256, 1024], 50)
    };
    let r = run_thm41(&p).unwrap();
    assert!(r.pass, "{:?}", r.rows);
}

#[test]
fn degenerate_terminal_laws_coincide() {
    let text = "lambda = 1.0\n[arrival.1]\nfamily = \"deterministic\"\n[arrival.-1]\nfamily = \"deterministic\"\n";
    let r = run_thm42(&plan(parse_config(text).unwrap().model, vec![4, 16], 10)).unwrap();
    for row in &r.rows {
        assert_eq!(row.ks, 0.0);
        assert_eq!(row.sde_samples, 100);
    }
    // equal distances at both n: no improvement to report
    assert!(!r.pass);
}

#[test]
fn stationary_check_needs_the_drift_condition() {
    let err = run_thm43(&plan(config(""), vec![4], 5)).unwrap_err();
    match err {
        ExperimentError::Stationary(msg) => assert!(msg.contains("lim H_1")),
        other => panic!("{other}"),
    }
}

#[test]
fn martingale_needs_hazards() {
    let c = config(EXP_PATIENCE);
    let p = [c.patience(dedq_core::Class::Plus).clone(), PatienceSpec::None];
    assert!(run_martingale(&c, &p, 4, 1.0, 3, 0).is_err());
}

#[test]
fn two_sample_radius_shrinks() {
    assert!(dkw_two_sample(2000, 20000, 0.01) < dkw_two_sample(200, 2000, 0.01));
    assert!((dkw_two_sample(100, 100, 0.05) - (2.0f64 / 0.05).ln().sqrt() / 10.0).abs() < 1e-12);
}
