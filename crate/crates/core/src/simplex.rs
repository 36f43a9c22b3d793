//! Finite measures Ξ on the infinite simplex and the collision rates they induce.
//!
//! A measure is a Kingman mass at the zero sequence plus finitely many atoms,
//! each with finitely many nonzero coordinates, so every rate is an exact
//! rational.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::partition::{enumerate_partitions, Partition};
use crate::rational::{binomial, factorial, format_rational, pow, Rational};

/// Largest supported block count.
pub const B_MAX_CAP: usize = 12;
pub const DEFAULT_B_MAX: usize = 8;
/// Distinct-index sums run over subsets of an atom's support.
pub const MAX_ATOM_SUPPORT: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RateError {
    #[error("atom coordinate {0} is outside (0, 1]")]
    CoordinateOutOfRange(String),
    #[error("atom coordinates sum to {0}, which exceeds 1")]
    CoordinateSum(String),
    #[error("atom weight must be positive, got {0}")]
    NonPositiveWeight(String),
    #[error("atom has no nonzero coordinate; mass at zero belongs in kingman_mass")]
    ZeroAtom,
    #[error("atom has {0} nonzero coordinates, more than the supported {MAX_ATOM_SUPPORT}")]
    AtomTooWide(usize),
    #[error("kingman_mass must be nonnegative, got {0}")]
    NegativeKingmanMass(String),
    #[error("invalid collision profile: {0}")]
    InvalidProfile(String),
    #[error("block count {n} exceeds the rate table coverage b_max = {b_max}")]
    OverCoverage { n: usize, b_max: usize },
    #[error("b_max = {0} exceeds the hard cap of {B_MAX_CAP}")]
    BMaxOverCap(usize),
    #[error("b_max must be at least 1")]
    BMaxZero,
    #[error("consistency check needs a table covering b <= 4, got b_max = {0}")]
    InsufficientCoverage(usize),
}

/// A point of the simplex carrying positive mass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimplexAtom {
    coords: Vec<Rational>,
    weight: Rational,
}

impl SimplexAtom {
    /// Zero coordinates are dropped; the rest are sorted non-increasing.
    pub fn new(coords: Vec<Rational>, weight: Rational) -> Result<Self, RateError> {
        if !weight.is_positive() {
            return Err(RateError::NonPositiveWeight(format_rational(&weight)));
        }
        let mut kept = Vec::with_capacity(coords.len());
        for c in coords {
            if c.is_negative() || c > Rational::one() {
                return Err(RateError::CoordinateOutOfRange(format_rational(&c)));
            }
            if !c.is_zero() {
                kept.push(c);
            }
        }
        if kept.is_empty() {
            return Err(RateError::ZeroAtom);
        }
        if kept.len() > MAX_ATOM_SUPPORT {
            return Err(RateError::AtomTooWide(kept.len()));
        }
        let sum: Rational = kept.iter().sum();
        if sum > Rational::one() {
            return Err(RateError::CoordinateSum(format_rational(&sum)));
        }
        kept.sort_unstable_by(|a, b| b.cmp(a));
        Ok(Self {
            coords: kept,
            weight,
        })
    }

    pub fn coords(&self) -> &[Rational] {
        &self.coords
    }

    pub fn weight(&self) -> &Rational {
        &self.weight
    }

    fn sum(&self) -> Rational {
        self.coords.iter().sum()
    }

    fn sum_of_squares(&self) -> Rational {
        self.coords.iter().map(|c| c * c).sum()
    }
}

/// `Ξ = kingman_mass·δ₀ + Σ weight·δ_x`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XiMeasure {
    kingman_mass: Rational,
    atoms: Vec<SimplexAtom>,
}

impl XiMeasure {
    pub fn new(kingman_mass: Rational, atoms: Vec<SimplexAtom>) -> Result<Self, RateError> {
        if kingman_mass.is_negative() {
            return Err(RateError::NegativeKingmanMass(format_rational(&kingman_mass)));
        }
        Ok(Self {
            kingman_mass,
            atoms,
        })
    }

    /// Pure Kingman measure with the given mass.
    pub fn kingman(mass: Rational) -> Result<Self, RateError> {
        Self::new(mass, Vec::new())
    }

    /// The zero measure: no coalescence at all.
    pub fn zero() -> Self {
        Self {
            kingman_mass: Rational::zero(),
            atoms: Vec::new(),
        }
    }

    /// A single atom of weight 1 at `(1, 0, 0, …)`: every collision merges all blocks.
    pub fn star() -> Self {
        Self {
            kingman_mass: Rational::zero(),
            atoms: vec![SimplexAtom {
                coords: vec![Rational::one()],
                weight: Rational::one(),
            }],
        }
    }

    pub fn kingman_mass(&self) -> &Rational {
        &self.kingman_mass
    }

    pub fn atoms(&self) -> &[SimplexAtom] {
        &self.atoms
    }

    pub fn total_mass(&self) -> Rational {
        self.atoms
            .iter()
            .fold(self.kingman_mass.clone(), |acc, a| acc + &a.weight)
    }

    /// Every mass multiplied by `c > 0`.
    pub fn scaled(&self, c: &Rational) -> Self {
        Self {
            kingman_mass: &self.kingman_mass * c,
            atoms: self
                .atoms
                .iter()
                .map(|a| SimplexAtom {
                    coords: a.coords.clone(),
                    weight: &a.weight * c,
                })
                .collect(),
        }
    }
}

/// An `(n; k₁,…,k_r; s)` collision.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CollisionProfile {
    n: usize,
    merge_sizes: Vec<usize>,
    s: usize,
}

impl CollisionProfile {
    pub fn new(mut merge_sizes: Vec<usize>, s: usize) -> Result<Self, RateError> {
        if merge_sizes.is_empty() {
            return Err(RateError::InvalidProfile("no merging group".into()));
        }
        if let Some(k) = merge_sizes.iter().find(|&&k| k < 2) {
            return Err(RateError::InvalidProfile(format!(
                "merge size {k} is below 2"
            )));
        }
        merge_sizes.sort_unstable_by(|a, b| b.cmp(a));
        let n = s + merge_sizes.iter().sum::<usize>();
        Ok(Self { n, merge_sizes, s })
    }

    /// Profile induced by a partition; `None` for the singleton partition.
    pub fn from_partition(pi: &Partition) -> Option<Self> {
        Self::from_block_sizes(&pi.block_sizes())
    }

    /// Profile with the given block sizes; `None` when all sizes are 1.
    pub fn from_block_sizes(sizes: &[usize]) -> Option<Self> {
        let merge: Vec<usize> = sizes.iter().copied().filter(|&k| k >= 2).collect();
        let s = sizes.iter().filter(|&&k| k == 1).count();
        Self::new(merge, s).ok()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn merge_sizes(&self) -> &[usize] {
        &self.merge_sizes
    }

    pub fn s(&self) -> usize {
        self.s
    }

    /// Number of blocks after the collision.
    pub fn blocks_after(&self) -> usize {
        self.merge_sizes.len() + self.s
    }

    /// Decrease of the block count, `Σ (kᵢ − 1)`.
    pub fn drop(&self) -> usize {
        self.n - self.blocks_after()
    }

    /// Number of partitions of `[n]` realizing this profile.
    pub fn multiplicity(&self) -> u64 {
        let mut denom = factorial(self.s);
        for &k in &self.merge_sizes {
            denom *= factorial(k);
        }
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for &k in &self.merge_sizes {
            *counts.entry(k).or_default() += 1;
        }
        for &c in counts.values() {
            denom *= factorial(c);
        }
        (factorial(self.n) / denom)
            .to_u64()
            .expect("multiplicity fits in u64 below the cap")
    }

    /// All nontrivial profiles on `n` blocks, in a fixed order.
    pub fn all_for(n: usize) -> Vec<Self> {
        let mut out = Vec::new();
        let mut parts = Vec::new();
        integer_partitions(n, n, &mut parts, &mut out);
        out.into_iter()
            .filter_map(|sizes| Self::from_block_sizes(&sizes))
            .collect()
    }
}

fn integer_partitions(rest: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if rest == 0 {
        out.push(cur.clone());
        return;
    }
    for part in (1..=max.min(rest)).rev() {
        cur.push(part);
        integer_partitions(rest - part, part, cur, out);
        cur.pop();
    }
}

impl fmt::Display for CollisionProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ks: Vec<String> = self.merge_sizes.iter().map(|k| k.to_string()).collect();
        write!(f, "{};{};{}", self.n, ks.join(","), self.s)
    }
}

impl std::str::FromStr for CollisionProfile {
    type Err = RateError;

    /// Parses the `"n;k1,k2;s"` form produced by `Display`.
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let bad = || RateError::InvalidProfile(text.to_string());
        let mut fields = text.split(';');
        let n: usize = fields.next().ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
        let ks = fields.next().ok_or_else(bad)?;
        let s: usize = fields.next().ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
        if fields.next().is_some() {
            return Err(bad());
        }
        let merge = ks
            .split(',')
            .map(|k| k.trim().parse::<usize>().map_err(|_| bad()))
            .collect::<Result<Vec<_>, _>>()?;
        let profile = Self::new(merge, s)?;
        if profile.n != n {
            return Err(bad());
        }
        Ok(profile)
    }
}

/// `λ_{n;k₁,…,k_r;s}` for `xi`.
pub fn collision_rate(xi: &XiMeasure, profile: &CollisionProfile) -> Result<Rational, RateError> {
    if profile.n > B_MAX_CAP {
        return Err(RateError::OverCoverage {
            n: profile.n,
            b_max: B_MAX_CAP,
        });
    }
    let mut rate = if profile.merge_sizes == [2] {
        xi.kingman_mass.clone()
    } else {
        Rational::zero()
    };
    for atom in &xi.atoms {
        rate += &atom.weight * atom_integrand(atom, profile) / atom.sum_of_squares();
    }
    Ok(rate)
}

/// Numerator of the atom's contribution, before division by `Σ x²`.
fn atom_integrand(atom: &SimplexAtom, profile: &CollisionProfile) -> Rational {
    let r = profile.merge_sizes.len();
    let s = profile.s;
    let x = &atom.coords;
    let d = x.len();
    if r > d {
        return Rational::zero();
    }
    // Position j of the ordered index tuple carries exponent k_j for j < r and
    // 1 afterwards. by_level[j] collects the sum over all injective choices of
    // the first j positions, so one pass yields every ℓ at once.
    let exps: Vec<usize> = profile
        .merge_sizes
        .iter()
        .copied()
        .chain(std::iter::repeat_n(1, s))
        .collect();
    let levels = exps.len().min(d);
    let mut dp = vec![Rational::zero(); 1 << d];
    dp[0] = Rational::one();
    let mut by_level = vec![Rational::zero(); levels + 1];
    by_level[0] = Rational::one();
    let powers: Vec<Vec<Rational>> = x
        .iter()
        .map(|xi| (0..=profile.merge_sizes.first().copied().unwrap_or(1)).map(|e| pow(xi, e)).collect())
        .collect();
    for mask in 0usize..(1 << d) {
        if dp[mask].is_zero() {
            continue;
        }
        let j = mask.count_ones() as usize;
        if j >= levels {
            continue;
        }
        let current = dp[mask].clone();
        for i in 0..d {
            if mask & (1 << i) == 0 {
                let next = mask | (1 << i);
                let term = &current * &powers[i][exps[j]];
                by_level[j + 1] += &term;
                dp[next] += term;
            }
        }
    }
    let rest = Rational::one() - atom.sum();
    let mut total = Rational::zero();
    for ell in 0..=s {
        let level = r + ell;
        if level > levels {
            break;
        }
        let coef = Rational::from_integer(binomial(s, ell)) * pow(&rest, s - ell);
        total += coef * &by_level[level];
    }
    total
}

/// `λ_{π′}`; zero for the singleton partition.
pub fn per_partition_rate(xi: &XiMeasure, pi_prime: &Partition) -> Result<Rational, RateError> {
    match CollisionProfile::from_partition(pi_prime) {
        Some(profile) => collision_rate(xi, &profile),
        None => Ok(Rational::zero()),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RateEntry {
    pub profile: CollisionProfile,
    pub rate: Rational,
    pub multiplicity: u64,
}

/// Collision rates for every block count up to `b_max`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RateTable {
    b_max: usize,
    levels: Vec<Vec<RateEntry>>,
    totals: Vec<Rational>,
}

impl RateTable {
    pub fn b_max(&self) -> usize {
        self.b_max
    }

    /// Entries for `b` blocks; empty for `b ≤ 1`.
    pub fn entries(&self, b: usize) -> Result<&[RateEntry], RateError> {
        self.check(b)?;
        Ok(&self.levels[b])
    }

    /// `λ_b`, the total coalescence rate among `b` blocks.
    pub fn total_rate(&self, b: usize) -> Result<&Rational, RateError> {
        self.check(b)?;
        Ok(&self.totals[b])
    }

    pub fn rate(&self, profile: &CollisionProfile) -> Result<Rational, RateError> {
        let entries = self.entries(profile.n)?;
        Ok(entries
            .iter()
            .find(|e| &e.profile == profile)
            .map(|e| e.rate.clone())
            .unwrap_or_else(Rational::zero))
    }

    fn check(&self, b: usize) -> Result<(), RateError> {
        if b > self.b_max {
            Err(RateError::OverCoverage {
                n: b,
                b_max: self.b_max,
            })
        } else {
            Ok(())
        }
    }

    /// Copy of the table with one rate shifted by `delta`; used to plant
    /// inconsistencies in negative controls.
    pub fn with_perturbed_rate(&self, profile: &CollisionProfile, delta: &Rational) -> Self {
        let mut out = self.clone();
        if profile.n <= out.b_max {
            if let Some(entry) = out.levels[profile.n].iter_mut().find(|e| &e.profile == profile) {
                entry.rate += delta;
            }
            out.totals[profile.n] = level_total(&out.levels[profile.n]);
        }
        out
    }
}

fn level_total(entries: &[RateEntry]) -> Rational {
    entries
        .iter()
        .map(|e| Rational::from_integer(BigInt::from(e.multiplicity)) * &e.rate)
        .sum()
}

pub fn build_rate_table(xi: &XiMeasure, b_max: usize) -> Result<RateTable, RateError> {
    if b_max == 0 {
        return Err(RateError::BMaxZero);
    }
    if b_max > B_MAX_CAP {
        return Err(RateError::BMaxOverCap(b_max));
    }
    let mut levels = vec![Vec::new(); b_max + 1];
    let mut totals = vec![Rational::zero(); b_max + 1];
    for b in 2..=b_max {
        let entries = CollisionProfile::all_for(b)
            .into_iter()
            .map(|profile| {
                let rate = collision_rate(xi, &profile)?;
                let multiplicity = profile.multiplicity();
                Ok(RateEntry {
                    profile,
                    rate,
                    multiplicity,
                })
            })
            .collect::<Result<Vec<_>, RateError>>()?;
        totals[b] = level_total(&entries);
        levels[b] = entries;
    }
    Ok(RateTable {
        b_max,
        levels,
        totals,
    })
}

/// Groups the nontrivial partitions of `[b]` by profile; a direct count used
/// to cross-check [`CollisionProfile::multiplicity`].
pub fn profile_counts_by_enumeration(b: usize) -> Result<BTreeMap<CollisionProfile, u64>, RateError> {
    let all = enumerate_partitions(b).map_err(|e| RateError::InvalidProfile(e.to_string()))?;
    let mut counts = BTreeMap::new();
    for p in all {
        if let Some(profile) = CollisionProfile::from_partition(&p) {
            *counts.entry(profile).or_insert(0) += 1;
        }
    }
    Ok(counts)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentityCheck {
    pub name: String,
    pub lhs: Rational,
    pub rhs: Rational,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConsistencyReport {
    /// The three low-order identities in named form.
    pub named: Vec<IdentityCheck>,
    /// `λ_{b;…}` against the restriction of the `b+1` chain, for every profile.
    pub sampling: Vec<IdentityCheck>,
}

impl ConsistencyReport {
    pub fn passed(&self) -> bool {
        self.named.iter().chain(&self.sampling).all(|c| c.holds)
    }

    pub fn failures(&self) -> impl Iterator<Item = &IdentityCheck> {
        self.named.iter().chain(&self.sampling).filter(|c| !c.holds)
    }
}

fn profile(merge: &[usize], s: usize) -> CollisionProfile {
    CollisionProfile::new(merge.to_vec(), s).expect("static profile")
}

pub fn check_consistency(table: &RateTable) -> Result<ConsistencyReport, RateError> {
    if table.b_max < 4 {
        return Err(RateError::InsufficientCoverage(table.b_max));
    }
    let r = |m: &[usize], s: usize| table.rate(&profile(m, s));
    let a2 = r(&[2], 0)?;
    let a21 = r(&[2], 1)?;
    let a3 = r(&[3], 0)?;
    let a211 = r(&[2], 2)?;
    let a22 = r(&[2, 2], 0)?;
    let a31 = r(&[3], 1)?;
    let a4 = r(&[4], 0)?;
    let check = |name: &str, lhs: Rational, rhs: Rational| IdentityCheck {
        name: name.to_string(),
        holds: lhs == rhs,
        lhs,
        rhs,
    };
    let named = vec![
        check("a2 = a21 + a3", a2, &a21 + &a3),
        check("a3 = a31 + a4", a3, &a31 + &a4),
        check("a21 = a211 + a22 + a31", a21, a211 + a22 + a31),
    ];

    let mut sampling = Vec::new();
    for b in 2..table.b_max {
        for entry in table.entries(b)? {
            let p = &entry.profile;
            let k = p.merge_sizes();
            let mut rhs = table.rate(&CollisionProfile::new(k.to_vec(), p.s() + 1)?)?;
            for i in 0..k.len() {
                let mut grown = k.to_vec();
                grown[i] += 1;
                rhs += table.rate(&CollisionProfile::new(grown, p.s())?)?;
            }
            if p.s() > 0 {
                let mut paired = k.to_vec();
                paired.push(2);
                let extra = table.rate(&CollisionProfile::new(paired, p.s() - 1)?)?;
                rhs += Rational::from_integer(BigInt::from(p.s())) * extra;
            }
            sampling.push(check(&format!("restriction {}", p), entry.rate.clone(), rhs));
        }
    }
    Ok(ConsistencyReport { named, sampling })
}
