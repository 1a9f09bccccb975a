use elbowkit::bench::{run_experiment, ExperimentConfig, Method, Scenario};
use elbowkit::synth::ArScenario;

fn uaed_rate(order: usize, sigma: f64, length: usize, seed: u64) -> f64 {
    let s = ArScenario::new(order, sigma, length);
    let mut cfg = ExperimentConfig::new(Scenario::Ar(s), 200, seed);
    cfg.methods = vec![Method::Uaed];
    run_experiment(&cfg).unwrap().p_a(Method::Uaed).unwrap()
}

#[test]
fn longer_series_do_not_hurt_uaed() {
    for (order, sigma) in [(3, 0.5), (5, 1.0)] {
        let short = uaed_rate(order, sigma, 200, 41);
        let long = uaed_rate(order, sigma, 2000, 41);
        assert!(long >= short, "order {order}: T=200 {short}, T=2000 {long}");
    }
}

#[test]
fn bic_ranks_above_aic_on_long_series() {
    let s = ArScenario::new(3, 0.5, 2000);
    let report = run_experiment(&ExperimentConfig::new(Scenario::Ar(s), 200, 5)).unwrap();
    let bic = report.p_a(Method::Bic).unwrap();
    let aic = report.p_a(Method::Aic).unwrap();
    let hqic = report.p_a(Method::Hqic).unwrap();
    assert!(bic > aic && bic > hqic, "BIC {bic}, AIC {aic}, HQIC {hqic}");
    assert!(report.method(Method::Uaed).unwrap().is_best);
}
