//! One function per subcommand; each returns a JSON result and a verdict.

use std::collections::BTreeMap;

use anyhow::{bail, Context, Result};
use serde_json::{json, Map, Value};

use xistep_core::dual::{
    estimate_qt, evaluate_dual, generator_value, mc_cross_check, replica_rng, run_until,
    trajectory_csv, DualState, EventKind, Evolution, McConfig, McEstimate, StopRule,
};
use xistep_core::moments::{
    hausdorff_check_moments, solve_stationary, stationary_system, CoalescenceRates, MomentIndex,
};
use xistep_core::mutation::{SetFunction, TensorFunction};
use xistep_core::rational::{format_rational, to_f64, Rational};
use xistep_core::reversibility::condition_report;
use xistep_core::simplex::check_consistency;

use crate::config::Experiment;

pub struct Outcome {
    pub result: Value,
    pub passed: bool,
    /// Trajectory CSV produced by `simulate`.
    pub csv: Option<String>,
}

impl Outcome {
    fn pass(result: Value) -> Self {
        Self {
            result,
            passed: true,
            csv: None,
        }
    }
}

pub fn r(value: &Rational) -> Value {
    Value::String(format_rational(value))
}

fn estimate_json(e: &McEstimate) -> Value {
    json!({
        "mean": e.mean,
        "std_error": e.std_error,
        "replicas": e.replicas,
        "seed": e.seed,
    })
}

fn labels_json(labels: &[xistep_core::partition::Colony]) -> Value {
    labels.iter().map(|c| json!(c.number())).collect()
}

pub fn rates(exp: &Experiment) -> Result<Outcome> {
    let table = exp.model.rate_table();
    let mut levels = Vec::new();
    for b in 2..=table.b_max() {
        let entries: Vec<Value> = table
            .entries(b)?
            .iter()
            .map(|e| {
                json!({
                    "profile": e.profile.to_string(),
                    "rate": r(&e.rate),
                    "multiplicity": e.multiplicity,
                })
            })
            .collect();
        levels.push(json!({ "b": b, "total": r(table.total_rate(b)?), "entries": entries }));
    }
    let named = CoalescenceRates::from_table(table)?.named();
    let report = check_consistency(table).context("consistency checks need b_max >= 4")?;
    let checks = |list: &[xistep_core::simplex::IdentityCheck]| -> Vec<Value> {
        list.iter()
            .map(|c| json!({ "name": c.name, "lhs": r(&c.lhs), "rhs": r(&c.rhs), "holds": c.holds }))
            .collect()
    };
    let failed_sampling: Vec<Value> = checks(&report.sampling)
        .into_iter()
        .filter(|c| c["holds"] == json!(false))
        .collect();
    Ok(Outcome {
        passed: report.passed(),
        csv: None,
        result: json!({
            "b_max": table.b_max(),
            "levels": levels,
            "named": {
                "a2": r(&named.a2), "a21": r(&named.a21), "a3": r(&named.a3),
                "a211": r(&named.a211), "a22": r(&named.a22), "a31": r(&named.a31), "a4": r(&named.a4),
            },
            "consistency": {
                "passed": report.passed(),
                "named": checks(&report.named),
                "sampling_checked": report.sampling.len(),
                "sampling_failures": failed_sampling,
            },
        }),
    })
}

fn power_of_indicator<S: xistep_core::mutation::Scalar>(exp: &Experiment, n: usize) -> TensorFunction<S> {
    TensorFunction::power(&SetFunction::indicator(&exp.e_star), n)
}

fn stop_rule(exp: &Experiment) -> StopRule {
    let until = match &exp.raw.options.t {
        Some(t) => StopRule::at_time(to_f64(&t.0)),
        None => StopRule::at_absorption(),
    };
    StopRule {
        max_events: exp.raw.options.max_events,
        ..until
    }
}

pub fn simulate(exp: &Experiment, seed: u64) -> Result<Outcome> {
    let eta = exp.eta()?;
    let stop = stop_rule(exp);
    let mut rng = replica_rng(seed, 0);
    let mu = (&exp.mu.0, &exp.mu.1);
    let (trajectory, value, state_summary, truncated) = match exp.evolution() {
        Evolution::Semigroup => {
            let start = DualState::new(power_of_indicator::<f64>(exp, eta.len()), eta.clone())?;
            let out = run_until(start, &exp.model, &stop, Evolution::Semigroup, &mut rng)?;
            let value = json!(evaluate_dual(&out.state, mu));
            let summary = summarize(&out.state);
            (out.trajectory, value, summary, out.truncated)
        }
        Evolution::MutationEvents => {
            let start = DualState::new(power_of_indicator::<Rational>(exp, eta.len()), eta.clone())?;
            let out = run_until(start, &exp.model, &stop, Evolution::MutationEvents, &mut rng)?;
            let value = r(&evaluate_dual(&out.state, mu));
            let summary = summarize(&out.state);
            (out.trajectory, value, summary, out.truncated)
        }
    };
    let mut kinds = BTreeMap::new();
    for ev in &trajectory {
        *kinds.entry(ev.kind.name()).or_insert(0u64) += 1;
    }
    let coalescences = trajectory
        .iter()
        .filter(|e| matches!(e.kind, EventKind::Coalescence { .. }))
        .count();
    Ok(Outcome {
        passed: !truncated,
        csv: Some(trajectory_csv(&trajectory)),
        result: json!({
            "eta": labels_json(&eta),
            "stop": match stop.until {
                xistep_core::dual::Until::Time(t) => json!({ "time": t }),
                xistep_core::dual::Until::Absorption => json!("absorption"),
            },
            "events": trajectory.len(),
            "event_counts": kinds,
            "coalescences": coalescences,
            "truncated": truncated,
            "final": state_summary,
            "dual_value": value,
        }),
    })
}

fn summarize<S: xistep_core::mutation::Scalar>(state: &DualState<S>) -> Value {
    json!({
        "time": state.clock(),
        "block_count": state.block_count(),
        "labels": labels_json(state.labeled_partition().labels()),
        "partition": state.labeled_partition().partition().to_string(),
    })
}

pub fn qt(exp: &Experiment, config: &McConfig) -> Result<Outcome> {
    let eta = exp.eta()?;
    let t = exp
        .raw
        .options
        .t
        .as_ref()
        .context("field `options.t` is required by qt")?;
    let mu = (&exp.mu.0, &exp.mu.1);
    let f = power_of_indicator::<f64>(exp, eta.len());
    let estimate = estimate_qt(&f, &eta, mu, to_f64(&t.0), &exp.model, config)?;
    let exact_f = power_of_indicator::<Rational>(exp, eta.len());
    let at_zero = evaluate_dual(&DualState::new(exact_f.clone(), eta.clone())?, mu);
    let generator = match exp.model.mutation().base() {
        Some(_) => r(&generator_value(&exact_f, &eta, mu, &exp.model)?),
        None => Value::Null,
    };
    Ok(Outcome::pass(json!({
        "eta": labels_json(&eta),
        "t": r(&t.0),
        "estimate": estimate_json(&estimate),
        "value_at_zero": r(&at_zero),
        "generator_at_zero": generator,
    })))
}

fn moment_map<'a>(entries: impl Iterator<Item = (MomentIndex, &'a Rational)>) -> Map<String, Value> {
    entries
        .filter(|(k, _)| *k != MomentIndex::CONSTANT)
        .map(|(k, v)| (k.to_string(), r(v)))
        .collect()
}

pub fn stationary(exp: &Experiment, config: &McConfig) -> Result<Outcome> {
    let order = exp.order();
    let params = exp.scalar_params()?;
    let solution = stationary_system(order, &params)?;
    let determinants: Map<String, Value> = (1..=order)
        .map(|k| (k.to_string(), r(&solution.determinant(k))))
        .collect();
    let mut result = json!({
        "order": order,
        "alpha": r(&exp.alpha),
        "moments": moment_map(solution.moments.iter().map(|(k, v)| (k, v))),
        "determinants": determinants,
        "rate_warnings": params.consistency_warnings(),
    });
    let mut passed = true;
    if exp.raw.options.monte_carlo {
        if exp.model.mutation().base().is_none() {
            bail!("the Monte-Carlo cross-check needs uniform mutation");
        }
        let check = mc_cross_check(order, &exp.e_star, &exp.model, config)?;
        passed = check.passed();
        let lines: Vec<Value> = check
            .lines
            .iter()
            .map(|l| {
                json!({
                    "moment": l.index.to_string(),
                    "exact": r(&l.exact),
                    "estimate": estimate_json(&l.estimate),
                    "z": l.z,
                })
            })
            .collect();
        result["monte_carlo"] = json!({ "z_limit": check.z_limit, "passed": passed, "lines": lines });
    }
    Ok(Outcome {
        result,
        passed,
        csv: None,
    })
}

pub fn hausdorff(exp: &Experiment) -> Result<Outcome> {
    let order = exp.order();
    let moments = solve_stationary(order, &exp.scalar_params()?)?;
    let report = hausdorff_check_moments(&moments)?;
    let violations: Vec<Value> = report
        .violations
        .iter()
        .map(|v| json!({ "base": v.base.to_string(), "step": v.step.to_string(), "value": r(&v.value) }))
        .collect();
    Ok(Outcome {
        passed: report.passed(),
        csv: None,
        result: json!({
            "order": order,
            "checked": report.checked,
            "minimum": r(&report.minimum),
            "violations": violations,
            "passed": report.passed(),
        }),
    })
}

pub fn reversibility(exp: &Experiment) -> Result<Outcome> {
    let params = exp.scalar_params()?;
    let report = condition_report(&params)?;
    let probes: Vec<Value> = report
        .probes
        .iter()
        .map(|p| {
            json!({
                "name": p.name,
                "left": p.probe.left.to_string(),
                "right": p.probe.right.to_string(),
                "residual": r(&p.residual),
            })
        })
        .collect();
    let mut notes = Vec::new();
    if params.rates.named().a2 == Rational::from_integer(0.into()) {
        notes.push("no pairwise coalescence: reversibility is not decided here");
    }
    Ok(Outcome::pass(json!({
        "probes": probes,
        "conditions": {
            "equal_migration": report.equal_migration,
            "alpha_half": report.alpha_half,
            "no_triple_mergers": report.no_triple_mergers,
        },
        "final_contradiction_residual": report.final_residual.as_ref().map(r),
        "witness": report.witness,
        "verdict": report.verdict.label(),
        "notes": notes,
        "rate_warnings": params.consistency_warnings(),
    })))
}
