//! Exact stationary moments `M_{n,m}` of the two colonies' masses of a fixed
//! set `E*`, obtained by applying the forward generator to monomials and
//! solving the resulting linear systems order by order.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::rational::{binomial, format_rational, Rational};
use crate::simplex::{CollisionProfile, RateError, RateTable};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MomentError {
    #[error("order {order} needs coalescence rates for {order} blocks, but rates cover only {covered}")]
    OrderExceedsCoverage { order: usize, covered: usize },
    #[error("the order-{order} system is singular")]
    Singular { order: usize },
    #[error("moment M_{{{n},{m}}} is not available")]
    MissingMoment { n: usize, m: usize },
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: String,
        reason: &'static str,
    },
    #[error(transparent)]
    Rate(#[from] RateError),
}

/// `(n, m)`: the power of colony 1's and colony 2's mass of `E*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MomentIndex {
    pub n: usize,
    pub m: usize,
}

impl MomentIndex {
    pub const CONSTANT: MomentIndex = MomentIndex { n: 0, m: 0 };

    pub fn new(n: usize, m: usize) -> Self {
        Self { n, m }
    }

    pub fn order(self) -> usize {
        self.n + self.m
    }

    pub fn swapped(self) -> Self {
        Self::new(self.m, self.n)
    }

    pub fn shifted(self, by: MomentIndex) -> Self {
        Self::new(self.n + by.n, self.m + by.m)
    }

    /// All indices of total order `k`, ordered `(k,0), (k−1,1), …, (0,k)`.
    pub fn of_order(k: usize) -> Vec<Self> {
        (0..=k).rev().map(|n| Self::new(n, k - n)).collect()
    }
}

impl fmt::Display for MomentIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.n, self.m)
    }
}

/// A linear form `Σ c_{n,m} M_{n,m}`; the constant term sits at `(0,0)`
/// since `M_{0,0} = 1`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MomentPolynomial {
    terms: BTreeMap<MomentIndex, Rational>,
}

impl MomentPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Rational) -> Self {
        let mut p = Self::zero();
        p.add_term(MomentIndex::CONSTANT, c);
        p
    }

    pub fn monomial(idx: MomentIndex) -> Self {
        let mut p = Self::zero();
        p.add_term(idx, Rational::one());
        p
    }

    pub fn add_term(&mut self, idx: MomentIndex, c: Rational) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(idx).or_insert_with(Rational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&idx);
        }
    }

    pub fn coefficient(&self, idx: MomentIndex) -> Rational {
        self.terms.get(&idx).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn constant_term(&self) -> Rational {
        self.coefficient(MomentIndex::CONSTANT)
    }

    pub fn terms(&self) -> impl Iterator<Item = (MomentIndex, &Rational)> {
        self.terms.iter().map(|(k, v)| (*k, v))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_order(&self) -> usize {
        self.terms.keys().map(|k| k.order()).max().unwrap_or(0)
    }

    /// Multiplication by the monomial `M_by`.
    pub fn shift(&self, by: MomentIndex) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|(k, v)| (k.shifted(by), v.clone()))
                .collect(),
        }
    }

    pub fn scaled(&self, c: &Rational) -> Self {
        let mut out = Self::zero();
        for (k, v) in &self.terms {
            out.add_term(*k, v * c);
        }
        out
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, v) in &other.terms {
            out.add_term(*k, v.clone());
        }
        out
    }

    pub fn minus(&self, other: &Self) -> Self {
        self.plus(&other.scaled(&-Rational::one()))
    }

    pub fn evaluate(&self, moments: &MomentVector) -> Result<Rational, MomentError> {
        let mut total = Rational::zero();
        for (k, v) in &self.terms {
            total += v * moments.get(*k)?;
        }
        Ok(total)
    }

    /// Replaces the given moments by values; other terms are kept.
    pub fn substitute(&self, values: &BTreeMap<MomentIndex, Rational>) -> Self {
        let mut out = Self::zero();
        for (k, v) in &self.terms {
            match values.get(k) {
                Some(value) => out.add_term(MomentIndex::CONSTANT, v * value),
                None => out.add_term(*k, v.clone()),
            }
        }
        out
    }
}

impl fmt::Display for MomentPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(k, v)| {
                if *k == MomentIndex::CONSTANT {
                    format_rational(v)
                } else {
                    format!("{}*M[{}]", format_rational(v), k)
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// The seven low-order rates in the `a_…` naming.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamedRates {
    pub a2: Rational,
    pub a21: Rational,
    pub a3: Rational,
    pub a211: Rational,
    pub a22: Rational,
    pub a31: Rational,
    pub a4: Rational,
}

impl NamedRates {
    /// Rates determined by the four `b = 4` rates through the consistency
    /// identities.
    pub fn consistent(a211: Rational, a22: Rational, a31: Rational, a4: Rational) -> Self {
        let a21 = &a211 + &a22 + &a31;
        let a3 = &a31 + &a4;
        let a2 = &a21 + &a3;
        Self {
            a2,
            a21,
            a3,
            a211,
            a22,
            a31,
            a4,
        }
    }

    /// Kingman-type pattern: only pairwise mergers, at rate `a`.
    pub fn pairwise(a: Rational) -> Self {
        Self::consistent(a, Rational::zero(), Rational::zero(), Rational::zero())
    }

    fn entries(&self) -> [(&'static str, CollisionProfile, &Rational); 7] {
        let p = |k: &[usize], s| CollisionProfile::new(k.to_vec(), s).expect("static profile");
        [
            ("a2", p(&[2], 0), &self.a2),
            ("a21", p(&[2], 1), &self.a21),
            ("a3", p(&[3], 0), &self.a3),
            ("a211", p(&[2], 2), &self.a211),
            ("a22", p(&[2, 2], 0), &self.a22),
            ("a31", p(&[3], 1), &self.a31),
            ("a4", p(&[4], 0), &self.a4),
        ]
    }
}

/// Per-partition coalescence rates, keyed by profile.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoalescenceRates {
    max_blocks: usize,
    rates: BTreeMap<CollisionProfile, Rational>,
}

impl CoalescenceRates {
    pub fn from_named(named: &NamedRates) -> Result<Self, MomentError> {
        let mut rates = BTreeMap::new();
        for (name, profile, value) in named.entries() {
            if value.is_negative() {
                return Err(MomentError::InvalidParameter {
                    name,
                    value: format_rational(value),
                    reason: "rates must be nonnegative",
                });
            }
            rates.insert(profile, value.clone());
        }
        Ok(Self {
            max_blocks: 4,
            rates,
        })
    }

    pub fn from_table(table: &RateTable) -> Result<Self, MomentError> {
        let mut rates = BTreeMap::new();
        for b in 2..=table.b_max() {
            for e in table.entries(b)? {
                rates.insert(e.profile.clone(), e.rate.clone());
            }
        }
        Ok(Self {
            max_blocks: table.b_max(),
            rates,
        })
    }

    pub fn max_blocks(&self) -> usize {
        self.max_blocks
    }

    pub fn rate(&self, profile: &CollisionProfile) -> Rational {
        self.rates.get(profile).cloned().unwrap_or_else(Rational::zero)
    }

    /// The named low-order rates (zero where not covered).
    pub fn named(&self) -> NamedRates {
        let r = |k: &[usize], s| self.rate(&CollisionProfile::new(k.to_vec(), s).expect("static"));
        NamedRates {
            a2: r(&[2], 0),
            a21: r(&[2], 1),
            a3: r(&[3], 0),
            a211: r(&[2], 2),
            a22: r(&[2, 2], 0),
            a31: r(&[3], 1),
            a4: r(&[4], 0),
        }
    }
}

/// Scalar inputs of the moment systems.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScalarParams {
    pub theta: Rational,
    pub alpha: Rational,
    pub u1: Rational,
    pub u2: Rational,
    pub rates: CoalescenceRates,
}

impl ScalarParams {
    pub fn new(
        theta: Rational,
        alpha: Rational,
        u1: Rational,
        u2: Rational,
        rates: CoalescenceRates,
    ) -> Result<Self, MomentError> {
        let invalid = |name, value: &Rational, reason| MomentError::InvalidParameter {
            name,
            value: format_rational(value),
            reason,
        };
        if !theta.is_positive() {
            return Err(invalid("theta", &theta, "must be positive"));
        }
        if alpha.is_negative() || alpha > Rational::one() {
            return Err(invalid("alpha", &alpha, "must lie in [0, 1]"));
        }
        if !u1.is_positive() {
            return Err(invalid("u1", &u1, "must be positive"));
        }
        if !u2.is_positive() {
            return Err(invalid("u2", &u2, "must be positive"));
        }
        Ok(Self {
            theta,
            alpha,
            u1,
            u2,
            rates,
        })
    }

    /// Parameters with user-supplied named rates.
    pub fn symbolic(
        theta: Rational,
        alpha: Rational,
        u1: Rational,
        u2: Rational,
        named: &NamedRates,
    ) -> Result<Self, MomentError> {
        Self::new(theta, alpha, u1, u2, CoalescenceRates::from_named(named)?)
    }

    pub fn kingman(
        theta: Rational,
        alpha: Rational,
        u1: Rational,
        u2: Rational,
        a: Rational,
    ) -> Result<Self, MomentError> {
        Self::symbolic(theta, alpha, u1, u2, &NamedRates::pairwise(a))
    }

    pub fn from_rate_table(
        theta: Rational,
        alpha: Rational,
        u1: Rational,
        u2: Rational,
        table: &RateTable,
    ) -> Result<Self, MomentError> {
        Self::new(theta, alpha, u1, u2, CoalescenceRates::from_table(table)?)
    }

    /// Colony roles exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            u1: self.u2.clone(),
            u2: self.u1.clone(),
            ..self.clone()
        }
    }

    /// Failed consistency identities among the named rates (empty when fine).
    pub fn consistency_warnings(&self) -> Vec<String> {
        let r = self.rates.named();
        let mut out = Vec::new();
        let mut check = |name: &str, lhs: &Rational, rhs: Rational| {
            if *lhs != rhs {
                out.push(format!(
                    "{name} fails: {} != {}",
                    format_rational(lhs),
                    format_rational(&rhs)
                ));
            }
        };
        check("a2 = a21 + a3", &r.a2, &r.a21 + &r.a3);
        check("a3 = a31 + a4", &r.a3, &r.a31 + &r.a4);
        check("a21 = a211 + a22 + a31", &r.a21, &r.a211 + &r.a22 + &r.a31);
        out
    }
}

fn coalescence_terms(
    poly: &mut MomentPolynomial,
    blocks: usize,
    target: impl Fn(usize) -> MomentIndex,
    params: &ScalarParams,
) -> Result<(), MomentError> {
    if blocks < 2 {
        return Ok(());
    }
    if blocks > params.rates.max_blocks {
        return Err(MomentError::OrderExceedsCoverage {
            order: blocks,
            covered: params.rates.max_blocks,
        });
    }
    for profile in CollisionProfile::all_for(blocks) {
        let rate = params.rates.rate(&profile);
        if rate.is_zero() {
            continue;
        }
        let weight = Rational::from_integer(BigInt::from(profile.multiplicity())) * rate;
        poly.add_term(target(blocks - profile.drop()), weight.clone());
        poly.add_term(target(blocks), -weight);
    }
    Ok(())
}

/// `𝓛*` applied to `μ₁(E*)ⁿ μ₂(E*)ᵐ`, as a linear form in the moments.
pub fn generator_on_monomial(
    idx: MomentIndex,
    params: &ScalarParams,
) -> Result<MomentPolynomial, MomentError> {
    let (n, m) = (idx.n, idx.m);
    let mut poly = MomentPolynomial::zero();
    if idx == MomentIndex::CONSTANT {
        return Ok(poly);
    }
    let two = Rational::from_integer(2.into());
    let count = |k: usize| Rational::from_integer(BigInt::from(k));
    let half_theta = &params.theta / &two;
    let inflow = &half_theta * &params.alpha;
    if n > 0 {
        poly.add_term(MomentIndex::new(n - 1, m), &inflow * count(n));
    }
    if m > 0 {
        poly.add_term(MomentIndex::new(n, m - 1), &inflow * count(m));
    }
    poly.add_term(idx, -(&half_theta * count(n + m)));

    coalescence_terms(&mut poly, n, |b| MomentIndex::new(b, m), params)?;
    coalescence_terms(&mut poly, m, |b| MomentIndex::new(n, b), params)?;

    if m > 0 {
        let w = &params.u1 * count(m);
        poly.add_term(MomentIndex::new(n + 1, m - 1), w.clone());
        poly.add_term(idx, -w);
    }
    if n > 0 {
        let w = &params.u2 * count(n);
        poly.add_term(MomentIndex::new(n - 1, m + 1), w.clone());
        poly.add_term(idx, -w);
    }
    Ok(poly)
}

/// Exact moment values; `M_{0,0} = 1` is always present.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MomentVector {
    values: BTreeMap<MomentIndex, Rational>,
}

impl Default for MomentVector {
    fn default() -> Self {
        let mut values = BTreeMap::new();
        values.insert(MomentIndex::CONSTANT, Rational::one());
        Self { values }
    }
}

impl MomentVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, idx: MomentIndex) -> Result<Rational, MomentError> {
        self.values
            .get(&idx)
            .cloned()
            .ok_or(MomentError::MissingMoment { n: idx.n, m: idx.m })
    }

    pub fn value(&self, n: usize, m: usize) -> Result<Rational, MomentError> {
        self.get(MomentIndex::new(n, m))
    }

    pub fn insert(&mut self, idx: MomentIndex, value: Rational) {
        self.values.insert(idx, value);
    }

    pub fn iter(&self) -> impl Iterator<Item = (MomentIndex, &Rational)> {
        self.values.iter().map(|(k, v)| (*k, v))
    }

    pub fn max_order(&self) -> usize {
        self.values.keys().map(|k| k.order()).max().unwrap_or(0)
    }

    pub fn as_map(&self) -> &BTreeMap<MomentIndex, Rational> {
        &self.values
    }
}

/// `A x = b` over the rationals with named unknowns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearSystem {
    pub unknowns: Vec<MomentIndex>,
    pub matrix: Vec<Vec<Rational>>,
    pub rhs: Vec<Rational>,
}

impl LinearSystem {
    pub fn determinant(&self) -> Rational {
        determinant(self.matrix.clone())
    }

    pub fn solve(&self) -> Option<Vec<Rational>> {
        solve_linear(&self.matrix, &self.rhs)
    }
}

/// Determinant by fraction-exact Gaussian elimination.
pub fn determinant(mut a: Vec<Vec<Rational>>) -> Rational {
    let n = a.len();
    let mut det = Rational::one();
    for col in 0..n {
        let Some(pivot) = (col..n).find(|&r| !a[r][col].is_zero()) else {
            return Rational::zero();
        };
        if pivot != col {
            a.swap(pivot, col);
            det = -det;
        }
        det *= &a[col][col];
        for row in col + 1..n {
            if a[row][col].is_zero() {
                continue;
            }
            let factor = &a[row][col] / &a[col][col];
            for k in col..n {
                let delta = &factor * &a[col][k];
                a[row][k] -= delta;
            }
        }
    }
    det
}

/// Unique solution of a square system, or `None` when singular.
pub fn solve_linear(a: &[Vec<Rational>], b: &[Rational]) -> Option<Vec<Rational>> {
    let n = a.len();
    let mut aug: Vec<Vec<Rational>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !aug[r][col].is_zero())?;
        aug.swap(pivot, col);
        let inv = Rational::one() / &aug[col][col];
        for k in col..=n {
            aug[col][k] *= &inv;
        }
        for row in 0..n {
            if row == col || aug[row][col].is_zero() {
                continue;
            }
            let factor = aug[row][col].clone();
            for k in col..=n {
                let delta = &factor * &aug[col][k];
                aug[row][k] -= delta;
            }
        }
    }
    Some(aug.into_iter().map(|mut r| r.pop().unwrap()).collect())
}

/// The order-`k` equations `Q[𝓛* M_{n,m}] = 0`, `n + m = k`, with lower
/// orders taken from `known`. Row `i` reads `Σ_j A_ij M_j = b_i` where
/// `A` carries the negated generator coefficients on order-`k` unknowns.
pub fn order_system(
    k: usize,
    known: &MomentVector,
    params: &ScalarParams,
) -> Result<LinearSystem, MomentError> {
    let unknowns = MomentIndex::of_order(k);
    let mut matrix = vec![vec![Rational::zero(); unknowns.len()]; unknowns.len()];
    let mut rhs = vec![Rational::zero(); unknowns.len()];
    for (row, &idx) in unknowns.iter().enumerate() {
        let poly = generator_on_monomial(idx, params)?;
        for (term, c) in poly.terms() {
            if term.order() == k {
                let col = k - term.n;
                matrix[row][col] -= c;
            } else {
                rhs[row] += c * known.get(term)?;
            }
        }
    }
    Ok(LinearSystem {
        unknowns,
        matrix,
        rhs,
    })
}

/// Stationary moments up to order `max_order` together with the system used
/// at each order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StationarySolution {
    pub moments: MomentVector,
    /// `systems[k-1]` is the order-`k` system.
    pub systems: Vec<LinearSystem>,
}

impl StationarySolution {
    pub fn determinant(&self, order: usize) -> Rational {
        self.systems[order - 1].determinant()
    }
}

pub fn stationary_system(
    max_order: usize,
    params: &ScalarParams,
) -> Result<StationarySolution, MomentError> {
    let mut moments = MomentVector::new();
    let mut systems = Vec::with_capacity(max_order);
    for k in 1..=max_order {
        let system = order_system(k, &moments, params)?;
        let solution = system.solve().ok_or(MomentError::Singular { order: k })?;
        for (idx, value) in system.unknowns.iter().zip(solution) {
            moments.insert(*idx, value);
        }
        systems.push(system);
    }
    Ok(StationarySolution { moments, systems })
}

pub fn solve_stationary(max_order: usize, params: &ScalarParams) -> Result<MomentVector, MomentError> {
    Ok(stationary_system(max_order, params)?.moments)
}

/// Index set on which a moment array is known.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentDomain {
    /// `n ≤ n_max`, `m ≤ m_max`.
    Box { n_max: usize, m_max: usize },
    /// `n + m ≤ max_order`.
    Total { max_order: usize },
}

impl MomentDomain {
    pub fn contains(&self, idx: MomentIndex) -> bool {
        match *self {
            MomentDomain::Box { n_max, m_max } => idx.n <= n_max && idx.m <= m_max,
            MomentDomain::Total { max_order } => idx.order() <= max_order,
        }
    }

    fn indices(&self) -> Vec<MomentIndex> {
        let (nn, mm) = match *self {
            MomentDomain::Box { n_max, m_max } => (n_max, m_max),
            MomentDomain::Total { max_order } => (max_order, max_order),
        };
        let mut out = Vec::new();
        for n in 0..=nn {
            for m in 0..=mm {
                let idx = MomentIndex::new(n, m);
                if self.contains(idx) {
                    out.push(idx);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HausdorffViolation {
    pub base: MomentIndex,
    pub step: MomentIndex,
    pub value: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HausdorffReport {
    pub checked: usize,
    pub minimum: Rational,
    pub violations: Vec<HausdorffViolation>,
}

impl HausdorffReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Every alternating difference `Σ_{p≤r, q≤h} (−1)^{p+q} C(r,p) C(h,q) ψ(a+p, b+q)`
/// whose indices stay in `domain`.
pub fn hausdorff_check(
    psi: impl Fn(MomentIndex) -> Option<Rational>,
    domain: MomentDomain,
) -> Result<HausdorffReport, MomentError> {
    let indices = domain.indices();
    let mut table = BTreeMap::new();
    for &idx in &indices {
        let v = psi(idx).ok_or(MomentError::MissingMoment { n: idx.n, m: idx.m })?;
        table.insert(idx, v);
    }
    let mut checked = 0;
    let mut minimum: Option<Rational> = None;
    let mut violations = Vec::new();
    for &base in &indices {
        for &top in &indices {
            if top.n < base.n || top.m < base.m {
                continue;
            }
            let (r, h) = (top.n - base.n, top.m - base.m);
            let mut diff = Rational::zero();
            for p in 0..=r {
                for q in 0..=h {
                    let c = Rational::from_integer(binomial(r, p) * binomial(h, q));
                    let term = c * &table[&MomentIndex::new(base.n + p, base.m + q)];
                    if (p + q) % 2 == 0 {
                        diff += term;
                    } else {
                        diff -= term;
                    }
                }
            }
            checked += 1;
            if minimum.as_ref().is_none_or(|m| &diff < m) {
                minimum = Some(diff.clone());
            }
            if diff.is_negative() {
                violations.push(HausdorffViolation {
                    base,
                    step: MomentIndex::new(r, h),
                    value: diff,
                });
            }
        }
    }
    Ok(HausdorffReport {
        checked,
        minimum: minimum.unwrap_or_else(Rational::zero),
        violations,
    })
}

/// Hausdorff check of a solved moment vector over its full total-order range.
pub fn hausdorff_check_moments(moments: &MomentVector) -> Result<HausdorffReport, MomentError> {
    hausdorff_check(
        |idx| moments.get(idx).ok(),
        MomentDomain::Total {
            max_order: moments.max_order(),
        },
    )
}
