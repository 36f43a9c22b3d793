//! The labeled coalescent with migration that carries a tensor of set
//! functions: simulation, replay, evaluation of the duality functional and
//! Monte-Carlo estimators built on it.

use std::fmt;
use std::fmt::Write as _;

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use thiserror::Error;

use crate::moments::{solve_stationary, MomentError, MomentIndex, ScalarParams};
use crate::mutation::{
    integrate, mutation_count, semigroup_apply_uniform, BaseMeasure, MutationError, MutationSpec,
    Scalar, SetFunction, TensorFunction,
};
use crate::partition::{
    coag_labeled_with_map, count_label, enumerate_nontrivial_partitions, labels_for, relabel,
    Colony, LabeledPartition, Partition, PartitionError,
};
use crate::dyadic::DyadicSet;
use crate::rational::{format_rational, to_f64, Rational};
use crate::simplex::{CollisionProfile, RateError, RateTable, XiMeasure};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DualError {
    #[error(transparent)]
    Rate(#[from] RateError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Mutation(#[from] MutationError),
    #[error(transparent)]
    Moment(#[from] MomentError),
    #[error("migration rate {name} must be positive, got {value}")]
    NonPositiveMigration { name: &'static str, value: String },
    #[error("tensor arity {arity} does not match {labels} labels")]
    ArityMismatch { arity: usize, labels: usize },
    #[error("the dual needs at least one block")]
    NoBlocks,
    #[error("running to absorption needs an event cap when Xi has zero mass")]
    CapRequired,
    #[error("replica {replica} hit the event cap before stopping")]
    Truncated { replica: u64 },
    #[error("exact coefficients cannot be carried through the closed-form semigroup; use mutation events")]
    InexactHold,
    #[error("replicas must be at least 1")]
    NoReplicas,
    #[error("time must be finite and nonnegative, got {0}")]
    BadTime(f64),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

/// Everything the dual needs: Ξ with its rate table, mutation and migration.
#[derive(Debug, Clone)]
pub struct ModelParams {
    xi: XiMeasure,
    mutation: MutationSpec,
    u1: Rational,
    u2: Rational,
    table: RateTable,
    samplers: Vec<LevelSampler>,
    u1_f: f64,
    u2_f: f64,
    half_theta_f: f64,
}

#[derive(Debug, Clone, Default)]
struct LevelSampler {
    total: f64,
    cumulative: Vec<f64>,
    profiles: Vec<CollisionProfile>,
}

impl ModelParams {
    pub fn new(
        xi: XiMeasure,
        mutation: MutationSpec,
        u1: Rational,
        u2: Rational,
        b_max: usize,
    ) -> Result<Self, DualError> {
        for (name, value) in [("u1", &u1), ("u2", &u2)] {
            if !value.is_positive() {
                return Err(DualError::NonPositiveMigration {
                    name,
                    value: format_rational(value),
                });
            }
        }
        let table = crate::simplex::build_rate_table(&xi, b_max)?;
        let mut samplers = vec![LevelSampler::default(); b_max + 1];
        for (b, sampler) in samplers.iter_mut().enumerate().skip(2) {
            let mut acc = 0.0;
            for e in table.entries(b)? {
                if e.rate.is_zero() {
                    continue;
                }
                acc += e.multiplicity as f64 * to_f64(&e.rate);
                sampler.cumulative.push(acc);
                sampler.profiles.push(e.profile.clone());
            }
            sampler.total = acc;
        }
        Ok(Self {
            u1_f: to_f64(&u1),
            u2_f: to_f64(&u2),
            half_theta_f: to_f64(mutation.theta()) / 2.0,
            xi,
            mutation,
            u1,
            u2,
            table,
            samplers,
        })
    }

    pub fn xi(&self) -> &XiMeasure {
        &self.xi
    }

    pub fn mutation(&self) -> &MutationSpec {
        &self.mutation
    }

    pub fn u1(&self) -> &Rational {
        &self.u1
    }

    pub fn u2(&self) -> &Rational {
        &self.u2
    }

    pub fn rate_table(&self) -> &RateTable {
        &self.table
    }

    /// Rate at which one block labeled `from` moves to the other colony.
    pub fn migration_rate(&self, from: Colony) -> &Rational {
        match from {
            Colony::One => &self.u2,
            Colony::Two => &self.u1,
        }
    }

    fn migration_rate_f(&self, from: Colony) -> f64 {
        match from {
            Colony::One => self.u2_f,
            Colony::Two => self.u1_f,
        }
    }

    fn coalescence_total_f(&self, b: usize) -> Result<f64, DualError> {
        if b < 2 {
            return Ok(0.0);
        }
        self.table.total_rate(b)?;
        Ok(self.samplers[b].total)
    }

    /// Scalar parameters of the moment systems for a set with `ν₀(E*) = alpha`.
    pub fn scalar_params(&self, alpha: Rational) -> Result<ScalarParams, DualError> {
        Ok(ScalarParams::from_rate_table(
            self.mutation.theta().clone(),
            alpha,
            self.u1.clone(),
            self.u2.clone(),
            &self.table,
        )?)
    }
}

/// `|η|₂ u₁ + |η|₁ u₂ + λ_{|η|₁} + λ_{|η|₂}`.
pub fn total_jump_rate(lp: &LabeledPartition, params: &ModelParams) -> Result<Rational, DualError> {
    let (b1, b2) = (lp.count(Colony::One), lp.count(Colony::Two));
    let mut rate = params.u1.clone() * Rational::from_integer(b2.into())
        + params.u2.clone() * Rational::from_integer(b1.into());
    for b in [b1, b2] {
        if b >= 2 {
            rate += params.table.total_rate(b)?;
        }
    }
    Ok(rate)
}

/// State of the dual: labeled partition, tensor, clock and event count.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState<S> {
    lp: LabeledPartition,
    y: TensorFunction<S>,
    clock: f64,
    events: u64,
}

impl<S: Scalar> DualState<S> {
    /// Blocks `{1},…,{n}` with labels `eta` carrying the factors of `f`.
    pub fn new(f: TensorFunction<S>, eta: Vec<Colony>) -> Result<Self, DualError> {
        if f.arity() != eta.len() {
            return Err(DualError::ArityMismatch {
                arity: f.arity(),
                labels: eta.len(),
            });
        }
        if eta.is_empty() {
            return Err(DualError::NoBlocks);
        }
        Ok(Self {
            lp: LabeledPartition::singletons(eta),
            y: f,
            clock: 0.0,
            events: 0,
        })
    }

    pub fn labeled_partition(&self) -> &LabeledPartition {
        &self.lp
    }

    pub fn tensor(&self) -> &TensorFunction<S> {
        &self.y
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn events(&self) -> u64 {
        self.events
    }

    pub fn block_count(&self) -> usize {
        self.lp.len()
    }
}

/// How the tensor follows mutation between jumps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Evolution {
    /// Closed-form uniform semigroup over each holding time (floating point).
    #[default]
    Semigroup,
    /// Each block mutates at rate `θ/2`, replacing its factor by the `ν₀`-mean.
    /// Exact with rational coefficients.
    MutationEvents,
}

/// Scalars that can be advanced by the mutation semigroup over a holding time.
pub trait DualScalar: Scalar {
    fn hold(y: &mut TensorFunction<Self>, dt: f64, spec: &MutationSpec) -> Result<(), DualError>;
}

impl DualScalar for f64 {
    fn hold(y: &mut TensorFunction<f64>, dt: f64, spec: &MutationSpec) -> Result<(), DualError> {
        if dt == 0.0 || spec.theta().is_zero() {
            return Ok(());
        }
        for g in y.factors_mut() {
            *g = semigroup_apply_uniform(g, dt, spec)?;
        }
        Ok(())
    }
}

impl DualScalar for Rational {
    fn hold(_: &mut TensorFunction<Rational>, dt: f64, spec: &MutationSpec) -> Result<(), DualError> {
        if dt == 0.0 || spec.theta().is_zero() {
            Ok(())
        } else {
            Err(DualError::InexactHold)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventKind {
    /// Blocks of `colony` merged according to `partition`.
    Coalescence { colony: Colony, partition: Partition },
    /// Block at 1-based position `block` left colony `from`.
    Migration { from: Colony, block: usize },
    /// Block at 1-based position `block` (in `colony`) mutated.
    Mutation { colony: Colony, block: usize },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::Coalescence { .. } => "coalescence",
            EventKind::Migration { .. } => "migration",
            EventKind::Mutation { .. } => "mutation",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub time: f64,
    pub kind: EventKind,
    /// Block count after the event.
    pub block_count: usize,
}

fn sample_event<R: Rng + ?Sized>(
    lp: &LabeledPartition,
    params: &ModelParams,
    with_mutation: bool,
    rng: &mut R,
) -> Result<Option<(f64, EventKind)>, DualError> {
    let counts = [lp.count(Colony::One), lp.count(Colony::Two)];
    let mut weights = [0.0f64; 5];
    for c in Colony::BOTH {
        weights[c.index()] = counts[c.index()] as f64 * params.migration_rate_f(c);
        weights[2 + c.index()] = params.coalescence_total_f(counts[c.index()])?;
    }
    if with_mutation {
        weights[4] = lp.len() as f64 * params.half_theta_f;
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Ok(None);
    }
    let dt = Exp::new(total).expect("positive rate").sample(rng);
    let mut u = rng.random::<f64>() * total;
    let mut category = weights.len() - 1;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            category = i;
            break;
        }
        u -= w;
    }
    while weights[category] <= 0.0 {
        // Rounding can push u past the last positive weight.
        category -= 1;
    }
    let kind = match category {
        0 | 1 => {
            let from = if category == 0 { Colony::One } else { Colony::Two };
            let positions = lp.positions(from);
            let block = positions[rng.random_range(0..positions.len())] + 1;
            EventKind::Migration { from, block }
        }
        2 | 3 => {
            let colony = if category == 2 { Colony::One } else { Colony::Two };
            let b = counts[colony.index()];
            let sampler = &params.samplers[b];
            let v = rng.random::<f64>() * sampler.total;
            let idx = sampler
                .cumulative
                .partition_point(|&c| c <= v)
                .min(sampler.profiles.len() - 1);
            let partition = random_partition_with_profile(&sampler.profiles[idx], rng);
            EventKind::Coalescence { colony, partition }
        }
        _ => {
            let block = rng.random_range(0..lp.len()) + 1;
            EventKind::Mutation {
                colony: lp.labels()[block - 1],
                block,
            }
        }
    };
    Ok(Some((dt, kind)))
}

/// A partition of `[n]` drawn uniformly among those with the given profile.
pub fn random_partition_with_profile<R: Rng + ?Sized>(
    profile: &CollisionProfile,
    rng: &mut R,
) -> Partition {
    let mut order: Vec<usize> = (1..=profile.n()).collect();
    // Fisher-Yates; cutting a uniform permutation into groups of the given
    // sizes hits every partition with this profile equally often.
    for i in (1..order.len()).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    let mut blocks = Vec::with_capacity(profile.blocks_after());
    let mut cursor = 0;
    for &k in profile
        .merge_sizes()
        .iter()
        .chain(std::iter::repeat_n(&1, profile.s()))
    {
        blocks.push(order[cursor..cursor + k].to_vec());
        cursor += k;
    }
    Partition::new(blocks).expect("cut of a permutation")
}

/// Applies one jump to the state and records it.
pub fn apply_event<S: Scalar>(
    state: &mut DualState<S>,
    kind: EventKind,
    time: f64,
    params: &ModelParams,
) -> Result<EventRecord, DualError> {
    match &kind {
        EventKind::Migration { from, block } => {
            let labels = relabel(state.lp.labels(), *block, from.other())?;
            state.lp = LabeledPartition::new(state.lp.partition().clone(), labels)?;
        }
        EventKind::Coalescence { colony, partition } => {
            let (lp, map) = coag_labeled_with_map(&state.lp, *colony, partition)?;
            let old = std::mem::replace(&mut state.y, TensorFunction::new(Vec::new())).into_factors();
            let factors = map
                .groups()
                .into_iter()
                .map(|group| {
                    let mut it = group.into_iter();
                    let first = old[it.next().expect("nonempty group") - 1].clone();
                    it.fold(first, |acc, j| acc.multiply(&old[j - 1]))
                })
                .collect();
            state.y = TensorFunction::new(factors);
            state.lp = lp;
        }
        EventKind::Mutation { block, .. } => {
            let base = params.mutation.base().ok_or(MutationError::NotUniform)?;
            let g = &mut state.y.factors_mut()[*block - 1];
            *g = SetFunction::constant(integrate(base, g));
        }
    }
    state.clock = time;
    state.events += 1;
    Ok(EventRecord {
        time,
        kind,
        block_count: state.lp.len(),
    })
}

/// Advances by one jump; the tensor is carried over the holding time first.
pub fn step<S: DualScalar, R: Rng + ?Sized>(
    state: &mut DualState<S>,
    params: &ModelParams,
    evolution: Evolution,
    rng: &mut R,
) -> Result<Option<EventRecord>, DualError> {
    let with_mutation = evolution == Evolution::MutationEvents && !params.mutation.theta().is_zero();
    let Some((dt, kind)) = sample_event(&state.lp, params, with_mutation, rng)? else {
        return Ok(None);
    };
    if evolution == Evolution::Semigroup {
        S::hold(&mut state.y, dt, &params.mutation)?;
    }
    let time = state.clock + dt;
    apply_event(state, kind, time, params).map(Some)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Until {
    Time(f64),
    Absorption,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule {
    pub until: Until,
    pub max_events: Option<u64>,
}

impl StopRule {
    pub fn at_time(t: f64) -> Self {
        Self {
            until: Until::Time(t),
            max_events: None,
        }
    }

    pub fn at_absorption() -> Self {
        Self {
            until: Until::Absorption,
            max_events: None,
        }
    }

    pub fn with_cap(self, cap: u64) -> Self {
        Self {
            max_events: Some(cap),
            ..self
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome<S> {
    pub state: DualState<S>,
    pub trajectory: Vec<EventRecord>,
    /// The event cap was reached before the stop condition.
    pub truncated: bool,
}

fn check_stop(stop: &StopRule, params: &ModelParams, blocks: usize) -> Result<(), DualError> {
    match stop.until {
        Until::Time(t) if !t.is_finite() || t < 0.0 => Err(DualError::BadTime(t)),
        Until::Absorption
            if blocks > 1 && stop.max_events.is_none() && params.xi.total_mass().is_zero() =>
        {
            Err(DualError::CapRequired)
        }
        _ => Ok(()),
    }
}

fn run_inner<S: DualScalar, R: Rng + ?Sized>(
    state: &mut DualState<S>,
    params: &ModelParams,
    stop: &StopRule,
    evolution: Evolution,
    rng: &mut R,
    mut record: Option<&mut Vec<EventRecord>>,
) -> Result<bool, DualError> {
    check_stop(stop, params, state.block_count())?;
    params.table.total_rate(state.lp.count(Colony::One))?;
    params.table.total_rate(state.lp.count(Colony::Two))?;
    let with_mutation = evolution == Evolution::MutationEvents && !params.mutation.theta().is_zero();
    let mut taken = 0u64;
    loop {
        if stop.until == Until::Absorption && state.block_count() <= 1 {
            return Ok(false);
        }
        if stop.max_events.is_some_and(|cap| taken >= cap) {
            return Ok(true);
        }
        let Some((dt, kind)) = sample_event(&state.lp, params, with_mutation, rng)? else {
            return Ok(false);
        };
        if let Until::Time(t) = stop.until {
            if state.clock + dt > t {
                if evolution == Evolution::Semigroup {
                    S::hold(&mut state.y, t - state.clock, &params.mutation)?;
                }
                state.clock = t;
                return Ok(false);
            }
        }
        if evolution == Evolution::Semigroup {
            S::hold(&mut state.y, dt, &params.mutation)?;
        }
        let time = state.clock + dt;
        let rec = apply_event(state, kind, time, params)?;
        taken += 1;
        if let Some(log) = record.as_deref_mut() {
            log.push(rec);
        }
    }
}

/// Runs until the stop rule fires, recording every event.
pub fn run_until<S: DualScalar, R: Rng + ?Sized>(
    mut state: DualState<S>,
    params: &ModelParams,
    stop: &StopRule,
    evolution: Evolution,
    rng: &mut R,
) -> Result<RunOutcome<S>, DualError> {
    let mut trajectory = Vec::new();
    let truncated = run_inner(&mut state, params, stop, evolution, rng, Some(&mut trajectory))?;
    Ok(RunOutcome {
        state,
        trajectory,
        truncated,
    })
}

/// Applies a recorded event stream to another initial state with the same
/// labels; with `end_time` the tensor is carried to that time afterwards.
pub fn replay<S: DualScalar>(
    mut state: DualState<S>,
    events: &[EventRecord],
    params: &ModelParams,
    evolution: Evolution,
    end_time: Option<f64>,
) -> Result<DualState<S>, DualError> {
    for ev in events {
        if evolution == Evolution::Semigroup {
            S::hold(&mut state.y, ev.time - state.clock, &params.mutation)?;
        }
        apply_event(&mut state, ev.kind.clone(), ev.time, params)?;
    }
    if let Some(t) = end_time {
        if evolution == Evolution::Semigroup && t > state.clock {
            S::hold(&mut state.y, t - state.clock, &params.mutation)?;
        }
        state.clock = t.max(state.clock);
    }
    Ok(state)
}

/// `⟨μ_η, Y⟩ = ∏ᵢ ⟨μ_{ηᵢ}, Yᵢ⟩`.
pub fn evaluate_dual<S: Scalar>(state: &DualState<S>, mu: (&BaseMeasure, &BaseMeasure)) -> S {
    evaluate_tensor(&state.y, state.lp.labels(), mu)
}

pub fn evaluate_tensor<S: Scalar>(
    y: &TensorFunction<S>,
    labels: &[Colony],
    mu: (&BaseMeasure, &BaseMeasure),
) -> S {
    y.factors()
        .iter()
        .zip(labels)
        .fold(S::one(), |acc, (g, c)| {
            let m = match c {
                Colony::One => mu.0,
                Colony::Two => mu.1,
            };
            acc * integrate(m, g)
        })
}

/// `𝓛𝒢_μ(f, η)`, exactly: mutation on each factor plus every migration and
/// coalescence jump weighted by its rate. Needs uniform mutation.
pub fn generator_value(
    f: &TensorFunction<Rational>,
    eta: &[Colony],
    mu: (&BaseMeasure, &BaseMeasure),
    params: &ModelParams,
) -> Result<Rational, DualError> {
    let base = params.mutation.base().ok_or(MutationError::NotUniform)?;
    let state = DualState::new(f.clone(), eta.to_vec())?;
    let here = evaluate_dual(&state, mu);
    let half_theta = params.mutation.theta() / Rational::from_integer(2.into());
    let mut total = Rational::zero();
    // Mutation: A acts on one factor at a time.
    for k in 0..f.arity() {
        let mut y = f.clone();
        let g = &mut y.factors_mut()[k];
        *g = g.map(|v| half_theta.clone() * (integrate(base, g) - v.clone()));
        total += evaluate_tensor(&y, eta, mu);
    }
    for k in 1..=eta.len() {
        let from = eta[k - 1];
        let mut moved = state.clone();
        apply_event(&mut moved, EventKind::Migration { from, block: k }, 0.0, params)?;
        total += params.migration_rate(from) * (evaluate_dual(&moved, mu) - &here);
    }
    for colony in Colony::BOTH {
        let b = count_label(eta, colony);
        if b < 2 {
            continue;
        }
        for partition in enumerate_nontrivial_partitions(b)? {
            let profile = CollisionProfile::from_partition(&partition).expect("nontrivial");
            let rate = params.table.rate(&profile)?;
            if rate.is_zero() {
                continue;
            }
            let mut merged = state.clone();
            apply_event(&mut merged, EventKind::Coalescence { colony, partition }, 0.0, params)?;
            total += rate * (evaluate_dual(&merged, mu) - &here);
        }
    }
    Ok(total)
}

/// Monte-Carlo settings shared by every estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub replicas: u64,
    pub seed: u64,
    /// Worker cap; `None` uses rayon's default.
    pub threads: Option<usize>,
    pub evolution: Evolution,
    /// Event cap per replica when running to absorption.
    pub max_events: Option<u64>,
}

impl McConfig {
    pub fn new(replicas: u64, seed: u64) -> Self {
        Self {
            replicas,
            seed,
            threads: None,
            evolution: Evolution::Semigroup,
            max_events: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub replicas: u64,
    pub seed: u64,
}

impl McEstimate {
    pub fn from_samples(samples: &[f64], seed: u64) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let std_error = if samples.len() > 1 {
            let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            std_error,
            replicas: samples.len() as u64,
            seed,
        }
    }

    /// `(mean − exact) / std_error`; zero when both the error and the spread vanish.
    pub fn z_score(&self, exact: f64) -> f64 {
        let diff = self.mean - exact;
        if self.std_error == 0.0 {
            if diff.abs() < 1e-12 {
                0.0
            } else {
                f64::INFINITY.copysign(diff)
            }
        } else {
            diff / self.std_error
        }
    }
}

/// Seed of replica `index`, derived from the master seed (SplitMix64).
pub fn replica_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn replica_rng(master: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(replica_seed(master, index))
}

/// Runs `replica` for every index, in parallel, returning results in index order.
pub fn run_replicas<T, F>(config: &McConfig, replica: F) -> Result<Vec<T>, DualError>
where
    T: Send,
    F: Fn(u64, &mut ChaCha8Rng) -> Result<T, DualError> + Sync + Send,
{
    if config.replicas == 0 {
        return Err(DualError::NoReplicas);
    }
    let job = || {
        (0..config.replicas)
            .into_par_iter()
            .map(|i| replica(i, &mut replica_rng(config.seed, i)))
            .collect::<Result<Vec<T>, DualError>>()
    };
    match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| DualError::ThreadPool(e.to_string()))?
            .install(job),
        None => job(),
    }
}

/// `Q_t 𝔽_{f,η}(μ) = E[⟨μ_{η(t)}, Y(t)⟩]`. General kernels go through the
/// genealogical sampler.
pub fn estimate_qt(
    f: &TensorFunction<f64>,
    eta: &[Colony],
    mu: (&BaseMeasure, &BaseMeasure),
    t: f64,
    params: &ModelParams,
    config: &McConfig,
) -> Result<McEstimate, DualError> {
    if params.mutation.base().is_none() {
        return genealogical_evaluate(f, eta, &GenealogyTarget::Time { t, mu: (mu.0.clone(), mu.1.clone()) }, params, config);
    }
    let stop = StopRule::at_time(t);
    let start = DualState::new(f.clone(), eta.to_vec())?;
    let samples = run_replicas(config, |_, rng| {
        let mut state = start.clone();
        run_inner(&mut state, params, &stop, config.evolution, rng, None)?;
        Ok(evaluate_dual(&state, mu))
    })?;
    Ok(McEstimate::from_samples(&samples, config.seed))
}

/// `E[⟨π̃, Y(τ)⟩]` at the absorption time `τ`.
pub fn estimate_stationary(
    f: &TensorFunction<f64>,
    eta: &[Colony],
    pi_tilde: &BaseMeasure,
    params: &ModelParams,
    config: &McConfig,
) -> Result<McEstimate, DualError> {
    if params.mutation.base().is_none() {
        return genealogical_evaluate(
            f,
            eta,
            &GenealogyTarget::Stationary { pi: pi_tilde.clone() },
            params,
            config,
        );
    }
    let stop = StopRule {
        until: Until::Absorption,
        max_events: config.max_events,
    };
    let start = DualState::new(f.clone(), eta.to_vec())?;
    let samples = run_replicas(config, |i, rng| {
        let mut state = start.clone();
        if run_inner(&mut state, params, &stop, config.evolution, rng, None)? {
            return Err(DualError::Truncated { replica: i });
        }
        Ok(evaluate_tensor(state.tensor(), &[Colony::One], (pi_tilde, pi_tilde)))
    })?;
    Ok(McEstimate::from_samples(&samples, config.seed))
}

/// Where the genealogical sampler draws ancestral types.
#[derive(Debug, Clone, PartialEq)]
pub enum GenealogyTarget {
    /// Ancestors at dual time `t`, typed by `μ` of their colony.
    Time { t: f64, mu: (BaseMeasure, BaseMeasure) },
    /// The common ancestor at absorption, typed by `π̃`.
    Stationary { pi: BaseMeasure },
}

#[derive(Debug, Clone)]
struct Lineage {
    parent: Option<usize>,
    birth: f64,
    end: f64,
    colony: Colony,
}

/// Samples the genealogy of the sample, types its ancestors, mutates down each
/// lineage segment and evaluates `f` at the leaves. Works for every kernel.
pub fn genealogical_evaluate(
    f: &TensorFunction<f64>,
    eta: &[Colony],
    target: &GenealogyTarget,
    params: &ModelParams,
    config: &McConfig,
) -> Result<McEstimate, DualError> {
    if f.arity() != eta.len() {
        return Err(DualError::ArityMismatch {
            arity: f.arity(),
            labels: eta.len(),
        });
    }
    if eta.is_empty() {
        return Err(DualError::NoBlocks);
    }
    let stop = match target {
        GenealogyTarget::Time { t, .. } => StopRule::at_time(*t),
        GenealogyTarget::Stationary { .. } => StopRule {
            until: Until::Absorption,
            max_events: config.max_events,
        },
    };
    check_stop(&stop, params, eta.len())?;
    let samples = run_replicas(config, |i, rng| {
        let (nodes, truncated) = sample_genealogy(eta, params, &stop, rng)?;
        if truncated {
            return Err(DualError::Truncated { replica: i });
        }
        let mut types = vec![f64::NAN; nodes.len()];
        let theta = to_f64(params.mutation.theta());
        for id in (0..nodes.len()).rev() {
            let node = &nodes[id];
            let top = match node.parent {
                Some(p) => types[p],
                None => match target {
                    GenealogyTarget::Time { mu, .. } => match node.colony {
                        Colony::One => mu.0.sample(rng),
                        Colony::Two => mu.1.sample(rng),
                    },
                    GenealogyTarget::Stationary { pi } => pi.sample(rng),
                },
            };
            let mut x = top;
            for _ in 0..mutation_count(theta, node.end - node.birth, rng) {
                x = params.mutation.jump(x, rng);
            }
            types[id] = x;
        }
        Ok(f.eval(&types[..eta.len()]))
    })?;
    Ok(McEstimate::from_samples(&samples, config.seed))
}

/// Lineage tree; leaves are `0..n`, parents always have larger ids.
fn sample_genealogy<R: Rng + ?Sized>(
    eta: &[Colony],
    params: &ModelParams,
    stop: &StopRule,
    rng: &mut R,
) -> Result<(Vec<Lineage>, bool), DualError> {
    let mut lp = LabeledPartition::singletons(eta.to_vec());
    params.table.total_rate(lp.count(Colony::One))?;
    params.table.total_rate(lp.count(Colony::Two))?;
    let mut nodes: Vec<Lineage> = eta
        .iter()
        .map(|&c| Lineage {
            parent: None,
            birth: 0.0,
            end: 0.0,
            colony: c,
        })
        .collect();
    let mut active: Vec<usize> = (0..eta.len()).collect();
    let mut clock = 0.0;
    let mut taken = 0u64;
    let mut truncated = false;
    loop {
        if stop.until == Until::Absorption && lp.len() <= 1 {
            break;
        }
        if stop.max_events.is_some_and(|cap| taken >= cap) {
            truncated = true;
            break;
        }
        let Some((dt, kind)) = sample_event(&lp, params, false, rng)? else {
            break;
        };
        if let Until::Time(t) = stop.until {
            if clock + dt > t {
                clock = t;
                break;
            }
        }
        clock += dt;
        taken += 1;
        match kind {
            EventKind::Migration { from, block } => {
                let labels = relabel(lp.labels(), block, from.other())?;
                lp = LabeledPartition::new(lp.partition().clone(), labels)?;
            }
            EventKind::Coalescence { colony, partition } => {
                let (next, map) = coag_labeled_with_map(&lp, colony, &partition)?;
                let mut next_active = Vec::with_capacity(map.target_arity());
                for group in map.groups() {
                    if group.len() == 1 {
                        next_active.push(active[group[0] - 1]);
                        continue;
                    }
                    let id = nodes.len();
                    nodes.push(Lineage {
                        parent: None,
                        birth: clock,
                        end: clock,
                        colony,
                    });
                    for j in group {
                        let child = active[j - 1];
                        nodes[child].parent = Some(id);
                        nodes[child].end = clock;
                    }
                    next_active.push(id);
                }
                active = next_active;
                lp = next;
            }
            EventKind::Mutation { .. } => unreachable!("mutation events are not sampled here"),
        }
    }
    for (pos, &id) in active.iter().enumerate() {
        nodes[id].end = clock;
        nodes[id].colony = lp.labels()[pos];
    }
    Ok((nodes, truncated))
}

/// One line of the moment cross-check.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossCheckLine {
    pub index: MomentIndex,
    pub exact: Rational,
    pub estimate: McEstimate,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossCheckReport {
    pub lines: Vec<CrossCheckLine>,
    pub z_limit: f64,
}

impl CrossCheckReport {
    pub fn passed(&self) -> bool {
        self.lines.iter().all(|l| l.z.abs() <= self.z_limit)
    }
}

/// Compares the stationary estimator with the exact moments for every
/// `(n, m)` with `n + m ≤ max_order`.
pub fn mc_cross_check(
    max_order: usize,
    e_star: &DyadicSet,
    params: &ModelParams,
    config: &McConfig,
) -> Result<CrossCheckReport, DualError> {
    let base = params.mutation.base().ok_or(MutationError::NotUniform)?;
    let alpha = base.mass(e_star);
    let exact = solve_stationary(max_order, &params.scalar_params(alpha)?)?;
    let indicator = SetFunction::<f64>::indicator(e_star);
    let mut lines = Vec::new();
    for k in 0..=max_order {
        for idx in MomentIndex::of_order(k) {
            let value = exact.get(idx)?;
            let estimate = if k == 0 {
                McEstimate {
                    mean: 1.0,
                    std_error: 0.0,
                    replicas: config.replicas,
                    seed: config.seed,
                }
            } else {
                let f = TensorFunction::power(&indicator, k);
                estimate_stationary(&f, &labels_for(idx.n, idx.m), base, params, config)?
            };
            lines.push(CrossCheckLine {
                index: idx,
                z: estimate.z_score(to_f64(&value)),
                exact: value,
                estimate,
            });
        }
    }
    Ok(CrossCheckReport { lines, z_limit: 3.0 })
}

/// CSV with header `time,kind,colony,profile_or_block,block_count`.
pub fn trajectory_csv(events: &[EventRecord]) -> String {
    let mut out = String::from("time,kind,colony,profile_or_block,block_count\n");
    for ev in events {
        let (colony, what) = match &ev.kind {
            EventKind::Coalescence { colony, partition } => (
                *colony,
                CollisionProfile::from_partition(partition)
                    .map(|p| p.to_string())
                    .unwrap_or_default(),
            ),
            EventKind::Migration { from, block } => (*from, block.to_string()),
            EventKind::Mutation { colony, block } => (*colony, block.to_string()),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            ev.time,
            ev.kind.name(),
            colony,
            csv_field(&what),
            ev.block_count
        );
    }
    out
}

fn csv_field(text: &str) -> String {
    if text.contains([',', '"', '\n']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

impl fmt::Display for EventRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            EventKind::Coalescence { colony, partition } => {
                write!(f, "t={} coalescence in {} by {}", self.time, colony, partition)
            }
            EventKind::Migration { from, block } => {
                write!(f, "t={} block {} leaves {}", self.time, block, from)
            }
            EventKind::Mutation { block, .. } => write!(f, "t={} block {} mutates", self.time, block),
        }
    }
}
