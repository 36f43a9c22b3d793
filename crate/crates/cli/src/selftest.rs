//! Invariant suites run by `xistep selftest`.

use anyhow::Result;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use xistep_core::dual::{evaluate_dual, replay, run_until, DualState, Evolution, ModelParams, StopRule};
use xistep_core::dyadic::DyadicSet;
use xistep_core::moments::{
    generator_on_monomial, hausdorff_check_moments, solve_stationary, MomentIndex, ScalarParams,
};
use xistep_core::mutation::{
    integrate, semigroup_apply_uniform, BaseMeasure, MutationSpec, SemigroupImage, SetFunction,
    TensorFunction,
};
use xistep_core::partition::Colony;
use xistep_core::rational::{int, rat, Rational};
use xistep_core::simplex::{build_rate_table, check_consistency, CollisionProfile, SimplexAtom, XiMeasure};

use crate::commands::Outcome;
use crate::config::Experiment;

/// Negative-control hook: add `delta` to one profile's rate before checking.
pub type Perturbation = (CollisionProfile, Rational);

struct Suite {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn fixtures(exp: Option<&Experiment>) -> Vec<(String, XiMeasure)> {
    let atom = |coords: Vec<Rational>| SimplexAtom::new(coords, int(1)).expect("fixture atom");
    let mut out = vec![
        ("kingman".to_string(), XiMeasure::kingman(int(1)).expect("fixture")),
        ("star".to_string(), XiMeasure::star()),
        (
            "atom (1/2,1/4)".to_string(),
            XiMeasure::new(int(0), vec![atom(vec![rat(1, 2), rat(1, 4)])]).expect("fixture"),
        ),
        (
            "mixed".to_string(),
            XiMeasure::new(rat(1, 3), vec![atom(vec![rat(1, 3), rat(1, 3), rat(1, 6)]), atom(vec![rat(3, 4)])])
                .expect("fixture"),
        ),
    ];
    if let Some(e) = exp {
        out.push(("config".to_string(), e.model.xi().clone()));
    }
    out
}

fn rate_consistency(exp: Option<&Experiment>, perturb: Option<&Perturbation>) -> Result<Suite> {
    let mut failures = Vec::new();
    for (name, xi) in fixtures(exp) {
        let mut table = build_rate_table(&xi, 6)?;
        if let Some((profile, delta)) = perturb {
            table = table.with_perturbed_rate(profile, delta);
        }
        let report = check_consistency(&table)?;
        failures.extend(report.failures().map(|c| format!("{name}: {}", c.name)));
    }
    Ok(Suite {
        name: "rate consistency",
        passed: failures.is_empty(),
        detail: if failures.is_empty() {
            "all identities hold".to_string()
        } else {
            failures.join("; ")
        },
    })
}

fn semigroup_laws(exp: Option<&Experiment>) -> Result<Suite> {
    let spec = match exp.filter(|e| e.model.mutation().base().is_some()) {
        Some(e) => e.model.mutation().clone(),
        None => MutationSpec::uniform(int(1), BaseMeasure::uniform())?,
    };
    let base = spec.base().expect("uniform").clone();
    let quarter = DyadicSet::interval(&rat(1, 4), &rat(3, 4))?;
    let eighth = DyadicSet::interval(&rat(0, 1), &rat(1, 8))?;
    let g = SetFunction::indicator(&quarter).add(&SetFunction::indicator(&eighth).scale(&int(2)));
    let image = SemigroupImage::new(g.clone(), &spec)?;
    let (s, t) = (rat(1, 3), rat(3, 7));
    let composed = image.advance(&s)?.advance(&t)?;
    let direct = image.advance(&(&s + &t))?;
    let identity = image.advance(&Rational::zero())? == image;
    let mean_kept = composed.mean() == &integrate(&base, &g);
    let g_f = g.convert::<f64>();
    let zero_time = semigroup_apply_uniform(&g_f, 0.0, &spec)? == g_f;
    let passed = composed == direct && identity && mean_kept && zero_time;
    Ok(Suite {
        name: "semigroup laws",
        passed,
        detail: format!(
            "composition {}, identity {identity}, mean preserved {mean_kept}, zero time {zero_time}",
            composed == direct
        ),
    })
}

fn coupling_linearity(seed: u64) -> Result<Suite> {
    let xi = XiMeasure::new(rat(1, 2), vec![SimplexAtom::new(vec![rat(1, 2), rat(1, 4)], int(1))?])?;
    let base = BaseMeasure::uniform();
    let model = ModelParams::new(xi, MutationSpec::uniform(int(1), base.clone())?, rat(1, 2), int(1), 8)?;
    let sets = [
        DyadicSet::interval(&rat(0, 1), &rat(1, 2))?,
        DyadicSet::interval(&rat(1, 8), &rat(5, 8))?,
        DyadicSet::interval(&rat(3, 4), &rat(1, 1))?,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stop = StopRule::at_time(2.0).with_cap(10_000);
    let mu = (&base, &base);
    let paths = 200;
    let mut failures = 0;
    for path in 0..paths {
        let n = rng.random_range(1..=5);
        let eta: Vec<Colony> = (0..n).map(|_| if rng.random_bool(0.5) { Colony::One } else { Colony::Two }).collect();
        let pick = |rng: &mut ChaCha8Rng| SetFunction::<Rational>::indicator(&sets[rng.random_range(0..sets.len())]);
        let g1 = pick(&mut rng);
        let g2 = pick(&mut rng).scale(&rat(1, 3));
        let rest: Vec<_> = (1..n).map(|_| pick(&mut rng)).collect();
        let state = |g: SetFunction<Rational>| {
            let mut factors = vec![g];
            factors.extend(rest.iter().cloned());
            DualState::new(TensorFunction::new(factors), eta.clone())
        };
        let mut path_rng = ChaCha8Rng::seed_from_u64(seed ^ path);
        let out = run_until(state(g1.clone())?, &model, &stop, Evolution::MutationEvents, &mut path_rng)?;
        let y2 = replay(state(g2.clone())?, &out.trajectory, &model, Evolution::MutationEvents, None)?;
        let y0 = replay(state(g1.add(&g2))?, &out.trajectory, &model, Evolution::MutationEvents, None)?;
        if evaluate_dual(&y0, mu) != evaluate_dual(&out.state, mu) + evaluate_dual(&y2, mu) {
            failures += 1;
        }
    }
    Ok(Suite {
        name: "coupling linearity",
        passed: failures == 0,
        detail: format!("{failures} of {paths} replayed paths broke linearity"),
    })
}

fn moment_params(exp: Option<&Experiment>) -> Result<Vec<(String, ScalarParams)>> {
    let mut out = vec![(
        "symmetric kingman".to_string(),
        ScalarParams::kingman(int(1), rat(1, 2), int(1), int(1), int(1))?,
    )];
    if let Some(e) = exp.filter(|e| e.model.rate_table().b_max() >= 4) {
        out.push(("config".to_string(), e.scalar_params()?));
    }
    Ok(out)
}

fn stationarity_residuals(exp: Option<&Experiment>) -> Result<Suite> {
    let mut bad = Vec::new();
    for (name, params) in moment_params(exp)? {
        let moments = solve_stationary(4, &params)?;
        for k in 1..=4 {
            for idx in MomentIndex::of_order(k) {
                if !generator_on_monomial(idx, &params)?.evaluate(&moments)?.is_zero() {
                    bad.push(format!("{name} M[{idx}]"));
                }
            }
        }
    }
    Ok(Suite {
        name: "stationarity residuals",
        passed: bad.is_empty(),
        detail: if bad.is_empty() { "all residuals vanish up to order 4".to_string() } else { bad.join("; ") },
    })
}

fn hausdorff(exp: Option<&Experiment>) -> Result<Suite> {
    let mut bad = Vec::new();
    for (name, params) in moment_params(exp)? {
        let report = hausdorff_check_moments(&solve_stationary(4, &params)?)?;
        if !report.passed() {
            bad.push(name);
        }
    }
    Ok(Suite {
        name: "hausdorff",
        passed: bad.is_empty(),
        detail: if bad.is_empty() { "solved moments are completely monotone".to_string() } else { bad.join("; ") },
    })
}

pub fn run(exp: Option<&Experiment>, seed: u64, perturb: Option<&Perturbation>) -> Result<Outcome> {
    let suites = [
        rate_consistency(exp, perturb)?,
        semigroup_laws(exp)?,
        coupling_linearity(seed)?,
        stationarity_residuals(exp)?,
        hausdorff(exp)?,
    ];
    let passed = suites.iter().all(|s| s.passed);
    let list: Vec<Value> = suites
        .iter()
        .map(|s| json!({ "suite": s.name, "passed": s.passed, "detail": s.detail }))
        .collect();
    Ok(Outcome {
        result: json!({ "suites": list, "passed": passed }),
        passed,
        csv: None,
    })
}
