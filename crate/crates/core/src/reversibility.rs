//! Reversibility residuals on monomial probes and the chain of necessary
//! conditions that rules reversibility out.
//!
//! For probes `F = μ₁(E*)ⁿ μ₂(E*)ᵐ` and `G = μ₁(E*)ᵖ μ₂(E*)^q` the residual is
//! `Q_Π[G·𝓛*F − F·𝓛*G]`, evaluated exactly at the stationary moments.

use std::fmt;

use num_traits::{One, Signed, Zero};
use rand::Rng;

use crate::moments::{
    solve_stationary, stationary_system, generator_on_monomial, MomentError, MomentIndex,
    NamedRates, ScalarParams,
};
use crate::poly::fit_polynomial;
use crate::rational::{format_rational, int, rat, Rational};

/// Largest total order of a probe pair with the named rates.
pub const MAX_PROBE_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ReversibilityProbe {
    pub left: MomentIndex,
    pub right: MomentIndex,
}

impl ReversibilityProbe {
    pub fn new(left: MomentIndex, right: MomentIndex) -> Self {
        Self { left, right }
    }

    pub fn order(&self) -> usize {
        self.left.order() + self.right.order()
    }

    pub fn reversed(&self) -> Self {
        Self::new(self.right, self.left)
    }

    pub fn swapped_colonies(&self) -> Self {
        Self::new(self.left.swapped(), self.right.swapped())
    }

    /// `(μ₁, μ₂(E*))` against `μ₁(E*)`.
    pub fn migration() -> Self {
        Self::new(MomentIndex::new(1, 0), MomentIndex::new(0, 1))
    }

    pub fn frequency() -> Self {
        Self::new(MomentIndex::new(2, 0), MomentIndex::new(0, 1))
    }

    pub fn pair_mixed() -> Self {
        Self::new(MomentIndex::new(1, 1), MomentIndex::new(2, 0))
    }

    pub fn triple_single() -> Self {
        Self::new(MomentIndex::new(2, 1), MomentIndex::new(1, 0))
    }
}

impl fmt::Display for ReversibilityProbe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})|({})", self.left, self.right)
    }
}

/// `Q_Π[G·𝓛*F − F·𝓛*G]` with `F` the left and `G` the right monomial.
pub fn residual(probe: &ReversibilityProbe, params: &ScalarParams) -> Result<Rational, MomentError> {
    let moments = solve_stationary(probe.order().max(1), params)?;
    let forward = generator_on_monomial(probe.left, params)?.shift(probe.right);
    let backward = generator_on_monomial(probe.right, params)?.shift(probe.left);
    forward.minus(&backward).evaluate(&moments)
}

/// The identities whose numerators the analysis states in factored form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FactoredIdentity {
    /// Probe `(1,0)|(0,1)`.
    Migration,
    /// Probe `(2,0)|(0,1)`, under `u₁ = u₂`.
    Frequency,
    /// `(1,1)|(2,0) − 2·(2,1)|(1,0)`, under `u₁ = u₂` and `α = 1/2`.
    Combined,
}

impl FactoredIdentity {
    pub const ALL: [FactoredIdentity; 3] = [FactoredIdentity::Migration, FactoredIdentity::Frequency, FactoredIdentity::Combined];

    pub fn name(self) -> &'static str {
        match self {
            FactoredIdentity::Migration => "migration",
            FactoredIdentity::Frequency => "frequency",
            FactoredIdentity::Combined => "combined",
        }
    }

    /// Orders whose system determinants form the common denominator.
    fn denominator_orders(self) -> &'static [usize] {
        match self {
            FactoredIdentity::Migration => &[2],
            FactoredIdentity::Frequency => &[2, 3],
            FactoredIdentity::Combined => &[2, 3, 4],
        }
    }

    /// Whether the sample satisfies the identity's standing assumptions.
    pub fn applies_to(self, params: &ScalarParams) -> bool {
        match self {
            FactoredIdentity::Migration => true,
            FactoredIdentity::Frequency => params.u1 == params.u2,
            FactoredIdentity::Combined => params.u1 == params.u2 && params.alpha == rat(1, 2),
        }
    }
}

impl fmt::Display for FactoredIdentity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn identity_residual(id: FactoredIdentity, params: &ScalarParams) -> Result<Rational, MomentError> {
    match id {
        FactoredIdentity::Migration => residual(&ReversibilityProbe::migration(), params),
        FactoredIdentity::Frequency => residual(&ReversibilityProbe::frequency(), params),
        FactoredIdentity::Combined => {
            let f1 = residual(&ReversibilityProbe::pair_mixed(), params)?;
            let f2 = residual(&ReversibilityProbe::triple_single(), params)?;
            Ok(f1 - int(2) * f2)
        }
    }
}

/// Product of the order-system determinants used as common denominator.
pub fn determinant_product(id: FactoredIdentity, params: &ScalarParams) -> Result<Rational, MomentError> {
    let orders = id.denominator_orders();
    let max = *orders.iter().max().expect("nonempty");
    let sol = stationary_system(max, params)?;
    Ok(orders.iter().map(|&k| sol.determinant(k)).product())
}

/// The bracket of the combined numerator.
pub fn combined_bracket(params: &ScalarParams) -> Rational {
    let r = params.rates.named();
    let (th, u) = (&params.theta, &params.u1);
    let (a3, a4, a21, a211) = (&r.a3, &r.a4, &r.a21, &r.a211);
    -int(8) * a4 * u - int(4) * a4 * a3 - int(4) * th * a4
        + int(8) * a3 * a3
        + int(22) * a3 * u
        + int(11) * a3 * th
        + int(8) * a21 * a21
        + int(16) * a21 * a3
        + int(12) * a211 * a3
        - int(4) * a4 * a21
        + int(10) * a21 * u
        + int(5) * a21 * th
        + int(3) * a211 * th
        + int(6) * a211 * u
        + int(12) * a211 * a21
}

/// The factored numerator stated for each identity.
pub fn closed_form_numerator(id: FactoredIdentity, params: &ScalarParams) -> Rational {
    let r = params.rates.named();
    let (th, al, u1, u2) = (&params.theta, &params.alpha, &params.u1, &params.u2);
    let one = Rational::one();
    match id {
        FactoredIdentity::Migration => {
            al * th * &r.a2 * (u1 - u2) * (th + int(2) * u1 + &r.a2 + int(2) * u2) * (al - &one)
        }
        FactoredIdentity::Frequency => {
            let (a21, a3) = (&r.a21, &r.a3);
            let quad = int(3) * a21 * a21 + a3 * a3 + int(8) * a3 * u1 + int(2) * a3 * th
                + int(4) * a3 * a21;
            int(4) * al * th * th * u1 * (al - &one) * quad * (int(2) * al - &one)
        }
        FactoredIdentity::Combined => {
            (th + int(4) * u1) * th * u1 * &r.a3 * combined_bracket(params)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleCheck {
    pub residual: Rational,
    pub numerator: Rational,
    pub determinant_product: Rational,
    /// `residual · determinant_product / numerator` (absent when the numerator vanishes).
    pub cofactor: Option<Rational>,
}

pub fn check_sample(id: FactoredIdentity, params: &ScalarParams) -> Result<SampleCheck, MomentError> {
    let residual = identity_residual(id, params)?;
    let numerator = closed_form_numerator(id, params);
    let dprod = determinant_product(id, params)?;
    let cofactor = (!numerator.is_zero()).then(|| &residual * &dprod / &numerator);
    Ok(SampleCheck {
        residual,
        numerator,
        determinant_product: dprod,
        cofactor,
    })
}

/// A parameter varied along a line through a base sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineParam {
    Theta,
    /// Both migration rates together.
    U,
    U1,
    A211,
    A22,
    A31,
    A4,
}

impl LineParam {
    pub fn name(self) -> &'static str {
        match self {
            LineParam::Theta => "theta",
            LineParam::U => "u",
            LineParam::U1 => "u1",
            LineParam::A211 => "a211",
            LineParam::A22 => "a22",
            LineParam::A31 => "a31",
            LineParam::A4 => "a4",
        }
    }

    /// `base` with the parameter set to `t`; four-block rates re-derive the rest.
    pub fn apply(self, base: &ScalarParams, t: &Rational) -> Result<ScalarParams, MomentError> {
        let mut r = base.rates.named();
        let (mut th, mut u1, mut u2) = (base.theta.clone(), base.u1.clone(), base.u2.clone());
        match self {
            LineParam::Theta => th = t.clone(),
            LineParam::U => {
                u1 = t.clone();
                u2 = t.clone();
            }
            LineParam::U1 => u1 = t.clone(),
            LineParam::A211 => r.a211 = t.clone(),
            LineParam::A22 => r.a22 = t.clone(),
            LineParam::A31 => r.a31 = t.clone(),
            LineParam::A4 => r.a4 = t.clone(),
        }
        let named = NamedRates::consistent(r.a211, r.a22, r.a31, r.a4);
        ScalarParams::symbolic(th, base.alpha.clone(), u1, u2, &named)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineCheck {
    pub param: LineParam,
    pub cofactor_degree: Option<usize>,
    pub denominator_degree: Option<usize>,
    /// The cofactor is a polynomial along the line.
    pub polynomial: bool,
    /// It divides the determinant product.
    pub divides: bool,
}

impl LineCheck {
    pub fn passed(&self) -> bool {
        self.polynomial && self.divides
    }
}

const LINE_POINTS: usize = 22;
const LINE_HOLDOUT: usize = 3;

fn line_abscissae() -> impl Iterator<Item = Rational> {
    (1..).map(|j| rat(j, 1) + rat(1, 11))
}

/// Along `param`, the cofactor `residual · Dprod / numerator` is an exact
/// polynomial that divides `Dprod`.
pub fn check_line(
    id: FactoredIdentity,
    base: &ScalarParams,
    param: LineParam,
) -> Result<LineCheck, MomentError> {
    let mut cof = Vec::new();
    let mut den = Vec::new();
    for t in line_abscissae().take(LINE_POINTS * 2) {
        if cof.len() == LINE_POINTS {
            break;
        }
        let p = param.apply(base, &t)?;
        let s = check_sample(id, &p)?;
        if let Some(c) = s.cofactor {
            cof.push((t.clone(), c));
            den.push((t, s.determinant_product));
        }
    }
    let cfit = fit_polynomial(&cof, LINE_HOLDOUT);
    let dfit = fit_polynomial(&den, LINE_HOLDOUT);
    let polynomial = cfit.confirmed && dfit.confirmed;
    let divides = polynomial && cfit.poly.divides(&dfit.poly);
    Ok(LineCheck {
        param,
        cofactor_degree: cfit.poly.degree(),
        denominator_degree: dfit.poly.degree(),
        polynomial,
        divides,
    })
}

fn default_lines(id: FactoredIdentity) -> &'static [LineParam] {
    match id {
        FactoredIdentity::Migration => &[LineParam::Theta, LineParam::U1, LineParam::A211],
        FactoredIdentity::Frequency => &[LineParam::Theta, LineParam::U, LineParam::A31, LineParam::A4],
        FactoredIdentity::Combined => &[
            LineParam::Theta,
            LineParam::U,
            LineParam::A211,
            LineParam::A22,
            LineParam::A31,
            LineParam::A4,
        ],
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentityReport {
    pub identity: FactoredIdentity,
    /// Sign of the cofactor at the first applicable sample with a nonzero numerator.
    pub sign: Option<i8>,
    pub samples: usize,
    pub mismatches: Vec<String>,
    pub lines: Vec<LineCheck>,
    /// Migration identity only: `residual · det₂ = sign · numerator` held at every sample.
    pub literal: Option<bool>,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
            && self.lines.iter().all(LineCheck::passed)
            && self.literal != Some(false)
    }
}

/// Equivalences checked across samples.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ChainChecks {
    /// Migration residual `= 0 ⟺ u₁ = u₂`.
    pub migration_iff_equal_rates: bool,
    /// Under `u₁ = u₂`: frequency residual `= 0 ⟺ α = 1/2`.
    pub frequency_iff_half: bool,
    /// Under both: combined residual `= 0 ⟺ a₃ = 0`.
    pub combined_iff_no_triple: bool,
    /// The bracket is positive on every sample where it is defined.
    pub bracket_positive: bool,
    pub migration_samples: usize,
    pub frequency_samples: usize,
    pub combined_samples: usize,
}

impl ChainChecks {
    pub fn passed(&self) -> bool {
        self.migration_iff_equal_rates
            && self.frequency_iff_half
            && self.combined_iff_no_triple
            && self.bracket_positive
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorizationReport {
    pub identities: Vec<IdentityReport>,
    pub chain: ChainChecks,
}

impl FactorizationReport {
    pub fn passed(&self) -> bool {
        self.identities.iter().all(IdentityReport::passed) && self.chain.passed()
    }
}

fn sign_of(x: &Rational) -> i8 {
    if x.is_positive() {
        1
    } else if x.is_negative() {
        -1
    } else {
        0
    }
}

/// Compares each identity with its stated numerator at every applicable
/// sample, calibrating one global sign per identity, and runs the line checks
/// through the first applicable sample.
pub fn verify_factorizations(
    samples: &[ScalarParams],
) -> Result<FactorizationReport, MomentError> {
    let mut identities = Vec::new();
    for id in FactoredIdentity::ALL {
        let mut report = IdentityReport {
            identity: id,
            sign: None,
            samples: 0,
            mismatches: Vec::new(),
            lines: Vec::new(),
            literal: (id == FactoredIdentity::Migration).then_some(true),
        };
        let mut line_base = None;
        for (i, p) in samples.iter().enumerate().filter(|(_, p)| id.applies_to(p)) {
            report.samples += 1;
            let s = check_sample(id, p)?;
            match &s.cofactor {
                None => {
                    if !s.residual.is_zero() {
                        report.mismatches.push(format!(
                            "sample {i}: numerator vanishes but residual is {}",
                            format_rational(&s.residual)
                        ));
                    }
                }
                Some(c) => {
                    let sign = *report.sign.get_or_insert(sign_of(c));
                    if sign_of(c) != sign || sign == 0 {
                        report.mismatches.push(format!(
                            "sample {i}: cofactor {} has the wrong sign",
                            format_rational(c)
                        ));
                    }
                    if id == FactoredIdentity::Migration && c != &Rational::from_integer(sign.into()) {
                        report.literal = Some(false);
                    }
                    line_base.get_or_insert_with(|| p.clone());
                }
            }
        }
        if let Some(base) = line_base {
            for &param in default_lines(id) {
                report.lines.push(check_line(id, &base, param)?);
            }
        }
        identities.push(report);
    }
    Ok(FactorizationReport {
        identities,
        chain: chain_checks(samples)?,
    })
}

fn chain_checks(samples: &[ScalarParams]) -> Result<ChainChecks, MomentError> {
    let mut c = ChainChecks {
        migration_iff_equal_rates: true,
        frequency_iff_half: true,
        combined_iff_no_triple: true,
        bracket_positive: true,
        ..Default::default()
    };
    let half = rat(1, 2);
    for p in samples {
        let named = p.rates.named();
        if named.a2.is_zero() {
            continue;
        }
        c.migration_samples += 1;
        let migration = identity_residual(FactoredIdentity::Migration, p)?;
        c.migration_iff_equal_rates &= migration.is_zero() == (p.u1 == p.u2);
        if p.u1 != p.u2 || p.alpha.is_zero() || p.alpha.is_one() {
            continue;
        }
        c.frequency_samples += 1;
        let frequency = identity_residual(FactoredIdentity::Frequency, p)?;
        c.frequency_iff_half &= frequency.is_zero() == (p.alpha == half);
        if p.alpha != half {
            continue;
        }
        c.combined_samples += 1;
        let e = identity_residual(FactoredIdentity::Combined, p)?;
        c.combined_iff_no_triple &= e.is_zero() == named.a3.is_zero();
        c.bracket_positive &= combined_bracket(p).is_positive();
    }
    Ok(c)
}

/// Shape constraints for random parameter samples.
#[derive(Debug, Clone, Default)]
pub struct SampleShape {
    pub equal_migration: bool,
    pub alpha: Option<Rational>,
    pub no_triple: bool,
}

fn random_positive<R: Rng + ?Sized>(rng: &mut R, max_num: i64, max_den: i64) -> Rational {
    rat(rng.random_range(1..=max_num), rng.random_range(1..=max_den))
}

/// Random positive parameters with consistent rates up to four blocks.
pub fn random_params<R: Rng + ?Sized>(rng: &mut R, shape: &SampleShape) -> ScalarParams {
    let theta = random_positive(rng, 12, 5);
    let u1 = random_positive(rng, 10, 4);
    let u2 = if shape.equal_migration {
        u1.clone()
    } else {
        random_positive(rng, 10, 4)
    };
    let alpha = shape.alpha.clone().unwrap_or_else(|| {
        let den = rng.random_range(2..=9);
        rat(rng.random_range(1..den), den)
    });
    let a211 = random_positive(rng, 8, 5);
    let a22 = rat(rng.random_range(0..=8), rng.random_range(1..=5));
    let (a31, a4) = if shape.no_triple {
        (Rational::zero(), Rational::zero())
    } else {
        (random_positive(rng, 8, 5), random_positive(rng, 8, 5))
    };
    let named = NamedRates::consistent(a211, a22, a31, a4);
    ScalarParams::symbolic(theta, alpha, u1, u2, &named).expect("positive parameters")
}

/// Outcome of the degenerate-pattern check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinalContradiction {
    /// `(a, triple-single residual)` for each tested `a > 0`.
    pub residuals: Vec<(Rational, Rational)>,
    /// Every tested residual is nonzero.
    pub nonzero: bool,
    /// `residual(a) · Dprod(a) / a³` is a polynomial in `a`, nonzero at 0 and
    /// dividing `Dprod`: the residual vanishes to exactly third order.
    pub cubic: bool,
    /// All four probes vanish at `a = 0`; no conclusion is drawn there.
    pub zero_rate_trivial: bool,
}

impl FinalContradiction {
    pub fn passed(&self) -> bool {
        self.nonzero && self.cubic
    }
}

fn degenerate(theta: &Rational, u: &Rational, a: &Rational) -> Result<ScalarParams, MomentError> {
    ScalarParams::symbolic(
        theta.clone(),
        rat(1, 2),
        u.clone(),
        u.clone(),
        &NamedRates::pairwise(a.clone()),
    )
}

fn triple_single_dprod(p: &ScalarParams) -> Result<(Rational, Rational), MomentError> {
    let r = residual(&ReversibilityProbe::triple_single(), p)?;
    let d = determinant_product(FactoredIdentity::Combined, p)?;
    Ok((r, d))
}

/// With `a₃ = 0` forced, the consistency identities leave only pairwise
/// mergers at a common rate `a`; the triple-single residual must not vanish.
pub fn final_contradiction(
    theta: &Rational,
    u: &Rational,
    a_values: &[Rational],
) -> Result<FinalContradiction, MomentError> {
    let mut residuals = Vec::new();
    for a in a_values {
        let (r, _) = triple_single_dprod(&degenerate(theta, u, a)?)?;
        residuals.push((a.clone(), r));
    }
    let nonzero = residuals.iter().all(|(_, r)| !r.is_zero());

    let mut cof = Vec::new();
    let mut den = Vec::new();
    for t in line_abscissae().take(LINE_POINTS) {
        let (r, d) = triple_single_dprod(&degenerate(theta, u, &t)?)?;
        let cube = &t * &t * &t;
        cof.push((t.clone(), r * &d / cube));
        den.push((t, d));
    }
    let cfit = fit_polynomial(&cof, LINE_HOLDOUT);
    let dfit = fit_polynomial(&den, LINE_HOLDOUT);
    let cubic = cfit.confirmed
        && dfit.confirmed
        && !cfit.poly.eval(&Rational::zero()).is_zero()
        && cfit.poly.divides(&dfit.poly);

    let zero = degenerate(theta, u, &Rational::zero())?;
    let mut zero_rate_trivial = true;
    for probe in [
        ReversibilityProbe::migration(),
        ReversibilityProbe::frequency(),
        ReversibilityProbe::pair_mixed(),
        ReversibilityProbe::triple_single(),
    ] {
        zero_rate_trivial &= residual(&probe, &zero)?.is_zero();
    }
    Ok(FinalContradiction {
        residuals,
        nonzero,
        cubic,
        zero_rate_trivial,
    })
}

/// How the chain of conditions plays out at one parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// Some probe has a nonzero residual.
    NotReversible,
    /// Every probe vanishes and there is no coalescence: no conclusion.
    OutsideHypotheses,
    /// Every probe vanishes although coalescence is present.
    Undetermined,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::NotReversible => "not reversible",
            Verdict::OutsideHypotheses => "outside hypotheses (no coalescence)",
            Verdict::Undetermined => "undetermined",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbeResidual {
    pub name: &'static str,
    pub probe: ReversibilityProbe,
    pub residual: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionReport {
    pub probes: Vec<ProbeResidual>,
    pub equal_migration: bool,
    pub alpha_half: bool,
    pub no_triple_mergers: bool,
    /// Triple-single residual at the degenerate pattern with `a = a₂` (when `a₂ > 0`).
    pub final_residual: Option<Rational>,
    pub witness: Option<&'static str>,
    pub verdict: Verdict,
}

/// Evaluates the four low-order probes at `params` and follows the chain.
pub fn condition_report(params: &ScalarParams) -> Result<ConditionReport, MomentError> {
    let named = params.rates.named();
    let probes: Vec<ProbeResidual> = [
        ("migration", ReversibilityProbe::migration()),
        ("frequency", ReversibilityProbe::frequency()),
        ("pair-mixed", ReversibilityProbe::pair_mixed()),
        ("triple-single", ReversibilityProbe::triple_single()),
    ]
    .into_iter()
    .map(|(name, probe)| {
        Ok(ProbeResidual {
            name,
            probe,
            residual: residual(&probe, params)?,
        })
    })
    .collect::<Result<_, MomentError>>()?;
    let final_residual = if named.a2.is_positive() {
        let p = degenerate(&params.theta, &params.u1, &named.a2)?;
        Some(residual(&ReversibilityProbe::triple_single(), &p)?)
    } else {
        None
    };
    let witness = probes.iter().find(|p| !p.residual.is_zero()).map(|p| p.name);
    let verdict = match (witness, named.a2.is_zero()) {
        (Some(_), _) => Verdict::NotReversible,
        (None, true) => Verdict::OutsideHypotheses,
        (None, false) => Verdict::Undetermined,
    };
    Ok(ConditionReport {
        probes,
        equal_migration: params.u1 == params.u2,
        alpha_half: params.alpha == rat(1, 2),
        no_triple_mergers: named.a3.is_zero(),
        final_residual,
        witness,
        verdict,
    })
}

/// Residuals of every probe pair up to the given total order.
pub fn all_probes(max_order: usize) -> Vec<ReversibilityProbe> {
    let mut out = Vec::new();
    for a in 0..=max_order {
        for left in MomentIndex::of_order(a) {
            for b in 0..=(max_order - a) {
                for right in MomentIndex::of_order(b) {
                    if left != MomentIndex::CONSTANT || right != MomentIndex::CONSTANT {
                        out.push(ReversibilityProbe::new(left, right));
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn reference() -> ScalarParams {
        ScalarParams::kingman(int(1), rat(1, 2), int(1), int(2), int(1)).unwrap()
    }

    fn symmetric_kingman() -> ScalarParams {
        ScalarParams::kingman(int(1), rat(1, 2), int(1), int(1), int(1)).unwrap()
    }

    #[test]
    fn migration_probe_at_reference_sample() {
        let p = reference();
        assert_eq!(residual(&ReversibilityProbe::migration(), &p).unwrap(), rat(1, 28));
        let s = check_sample(FactoredIdentity::Migration, &p).unwrap();
        assert_eq!(s.numerator, int(2));
        assert_eq!(s.determinant_product, int(56));
        assert_eq!(s.cofactor, Some(int(1)));
    }

    #[test]
    fn migration_probe_vanishes_with_equal_rates() {
        let p = ScalarParams::kingman(rat(3, 2), rat(1, 3), int(2), int(2), rat(1, 2)).unwrap();
        assert!(residual(&ReversibilityProbe::migration(), &p).unwrap().is_zero());
    }

    #[test]
    fn constant_probe_is_zero() {
        let p = reference();
        let probe = ReversibilityProbe::new(MomentIndex::new(2, 1), MomentIndex::CONSTANT);
        assert!(residual(&probe, &p).unwrap().is_zero());
    }

    #[test]
    fn symmetric_kingman_probe_values() {
        let p = symmetric_kingman();
        assert!(residual(&ReversibilityProbe::migration(), &p).unwrap().is_zero());
        assert!(residual(&ReversibilityProbe::frequency(), &p).unwrap().is_zero());
        assert_eq!(residual(&ReversibilityProbe::pair_mixed(), &p).unwrap(), rat(-5, 5504));
        assert_eq!(residual(&ReversibilityProbe::triple_single(), &p).unwrap(), rat(-5, 11008));
        let report = condition_report(&p).unwrap();
        assert!(report.equal_migration && report.alpha_half && report.no_triple_mergers);
        assert_eq!(report.verdict, Verdict::NotReversible);
        assert_eq!(report.witness, Some("pair-mixed"));
        assert!(!report.final_residual.unwrap().is_zero());
    }

    #[test]
    fn frequency_probe_depends_on_alpha() {
        let third = ScalarParams::kingman(int(1), rat(1, 3), int(1), int(1), int(1)).unwrap();
        assert!(!residual(&ReversibilityProbe::frequency(), &third).unwrap().is_zero());
        assert!(residual(&ReversibilityProbe::frequency(), &symmetric_kingman()).unwrap().is_zero());
    }

    #[test]
    fn factorizations_hold_on_random_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut samples = vec![reference()];
        for _ in 0..4 {
            samples.push(random_params(&mut rng, &SampleShape::default()));
            samples.push(random_params(&mut rng, &SampleShape { equal_migration: true, ..Default::default() }));
            samples.push(random_params(
                &mut rng,
                &SampleShape { equal_migration: true, alpha: Some(rat(1, 2)), no_triple: false },
            ));
        }
        samples.push(random_params(
            &mut rng,
            &SampleShape { equal_migration: true, alpha: Some(rat(1, 2)), no_triple: true },
        ));
        let report = verify_factorizations(&samples).unwrap();
        for id in &report.identities {
            assert!(id.passed(), "{:?}", id);
        }
        assert_eq!(report.identities[0].sign, Some(1));
        assert_eq!(report.identities[0].literal, Some(true));
        assert!(report.chain.passed(), "{:?}", report.chain);
    }

    #[test]
    fn final_contradiction_is_cubic() {
        let fc = final_contradiction(&int(1), &int(1), &[int(1), rat(1, 2), int(2), int(3)]).unwrap();
        assert!(fc.nonzero && fc.cubic && fc.zero_rate_trivial, "{:?}", fc);
        assert_eq!(fc.residuals[0].1, rat(-5, 11008));
    }

    #[test]
    fn zero_rate_is_outside_hypotheses() {
        let p = ScalarParams::kingman(int(1), rat(1, 2), int(1), int(1), int(0)).unwrap();
        let report = condition_report(&p).unwrap();
        assert_eq!(report.verdict, Verdict::OutsideHypotheses);
        assert_eq!(report.final_residual, None);
    }

    #[test]
    fn antisymmetry_and_colony_swap() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..3 {
            let p = random_params(&mut rng, &SampleShape::default());
            let q = p.swapped();
            for probe in all_probes(4) {
                let r = residual(&probe, &p).unwrap();
                assert_eq!(residual(&probe.reversed(), &p).unwrap(), -r.clone());
                assert_eq!(residual(&probe.swapped_colonies(), &q).unwrap(), r);
            }
        }
    }
}
