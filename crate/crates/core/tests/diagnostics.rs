use bnpirt::diagnostics::{efficiency_report, ParameterSelection};
use bnpirt::model::ModelKind;
use bnpirt::priors::Priors;
use bnpirt::samplers::chain::default_strategy;
use bnpirt::samplers::{run_chain, ChainSettings};
use bnpirt::sim::{simulate_responses, GroundTruth, Scenario};
use bnpirt::SampleArchive;

fn archive() -> SampleArchive {
    let truth = GroundTruth::simulate(Scenario::Unimodal, ModelKind::TwoPL, 60, 5, 1).unwrap();
    let y = simulate_responses(&truth, ModelKind::TwoPL, 1).unwrap();
    run_chain(&y, &default_strategy(ModelKind::TwoPL), &Priors::default(), &ChainSettings::new(1500, 300, 2)).unwrap()
}

#[test]
fn doubling_time_halves_the_rate() {
    let a = archive();
    let r1 = efficiency_report(&a, &ParameterSelection::Common).unwrap();
    let mut slow = a.clone();
    slow.meta.timing.total_seconds *= 2.0;
    slow.meta.timing.sampling_seconds *= 2.0;
    let r2 = efficiency_report(&slow, &ParameterSelection::Common).unwrap();
    assert_eq!(r1.mess, r2.mess);
    assert!((r2.mess_per_total_second * 2.0 - r1.mess_per_total_second).abs() < 1e-9 * r1.mess_per_total_second);
    assert!((r2.mess_per_sampling_second * 2.0 - r1.mess_per_sampling_second).abs() < 1e-9 * r1.mess_per_sampling_second);
}

#[test]
fn identical_draws_identical_mess() {
    let a = archive();
    let b = archive();
    assert!(a.same_draws(&b));
    let (ra, rb) = (
        efficiency_report(&a, &ParameterSelection::Common).unwrap(),
        efficiency_report(&b, &ParameterSelection::Common).unwrap(),
    );
    assert_eq!(ra.mess.to_bits(), rb.mess.to_bits());
    assert_eq!(ra.n_parameters, rb.n_parameters);
}

#[test]
fn item_selection_is_smaller() {
    let a = archive();
    let all = efficiency_report(&a, &ParameterSelection::Common).unwrap();
    let items = efficiency_report(&a, &ParameterSelection::Items).unwrap();
    assert!(items.n_parameters < all.n_parameters);
    assert!(items.ess.iter().all(|e| !e.name.starts_with("eta")));
    assert!(efficiency_report(&a, &ParameterSelection::Columns(vec!["nope".into()])).is_err());
}

#[test]
fn zero_timings_are_rejected() {
    let mut a = archive();
    a.meta.timing.total_seconds = 0.0;
    a.meta.timing.sampling_seconds = 0.0;
    assert!(efficiency_report(&a, &ParameterSelection::Common).is_err());
}
