use xistep_core::dual::{estimate_stationary, McConfig, ModelParams};
use xistep_core::dyadic::DyadicSet;
use xistep_core::moments::{hausdorff_check_moments, solve_stationary, MomentIndex, ScalarParams};
use xistep_core::mutation::{BaseMeasure, MutationSpec, SetFunction, TensorFunction};
use xistep_core::partition::Colony;
use xistep_core::rational::{int, rat, to_f64};
use xistep_core::simplex::{build_rate_table, check_consistency, SimplexAtom, XiMeasure};

fn mixed_model() -> ModelParams {
    let atom = SimplexAtom::new(vec![rat(1, 2), rat(1, 4)], int(1)).unwrap();
    let xi = XiMeasure::new(rat(1, 2), vec![atom]).unwrap();
    let mutation = MutationSpec::uniform(int(1), BaseMeasure::uniform()).unwrap();
    ModelParams::new(xi, mutation, int(1), rat(1, 2), 6).unwrap()
}

#[test]
fn kingman_second_moment_is_exact() {
    let params = ScalarParams::kingman(int(1), rat(1, 2), int(1), int(1), int(1)).unwrap();
    let m = solve_stationary(2, &params).unwrap();
    assert_eq!(m.get(MomentIndex::new(1, 0)).unwrap(), rat(1, 2));
    assert_eq!(m.get(MomentIndex::new(2, 0)).unwrap(), rat(11, 32));
    assert_eq!(m.get(MomentIndex::new(2, 0)).unwrap(), m.get(MomentIndex::new(0, 2)).unwrap());
}

#[test]
fn rates_feed_moments_that_are_completely_monotone() {
    let model = mixed_model();
    assert!(check_consistency(model.rate_table()).unwrap().passed());
    let params = model.scalar_params(rat(1, 2)).unwrap();
    let moments = solve_stationary(4, &params).unwrap();
    assert!(hausdorff_check_moments(&moments).unwrap().passed());
}

#[test]
fn table_built_directly_matches_model_table() {
    let model = mixed_model();
    let table = build_rate_table(model.xi(), 6).unwrap();
    assert_eq!(&table, model.rate_table());
}

#[test]
fn simulated_stationary_moments_match_exact_ones() {
    let model = mixed_model();
    let e_star = DyadicSet::interval(&rat(0, 1), &rat(1, 2)).unwrap();
    let exact = solve_stationary(2, &model.scalar_params(rat(1, 2)).unwrap()).unwrap();
    let base = BaseMeasure::uniform();
    let cases = [
        (vec![Colony::One, Colony::One], MomentIndex::new(2, 0)),
        (vec![Colony::One, Colony::Two], MomentIndex::new(1, 1)),
        (vec![Colony::Two, Colony::Two], MomentIndex::new(0, 2)),
    ];
    for (seed, (eta, idx)) in cases.into_iter().enumerate() {
        let f = TensorFunction::power(&SetFunction::<f64>::indicator(&e_star), eta.len());
        let config = McConfig::new(40_000, 100 + seed as u64);
        let est = estimate_stationary(&f, &eta, &base, &model, &config).unwrap();
        let z = est.z_score(to_f64(&exact.get(idx).unwrap()));
        assert!(z.abs() < 4.0, "{idx}: z = {z}");
    }
}
