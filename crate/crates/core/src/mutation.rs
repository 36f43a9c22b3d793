//! Jump-type mutation on `E = [0, 1]`: step functions over dyadic sets, base
//! measures, the uniform generator and its closed-form semigroup, and a path
//! sampler for arbitrary kernels.

use std::fmt::Debug;
use std::ops::{Add, Mul, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use thiserror::Error;

use crate::dyadic::{endpoint_value, interval_contains, DyadicSet, DEPTH, ONE};
use crate::rational::{format_rational, to_f64, Rational};

/// Largest grid level accepted for piecewise-constant densities.
pub const MAX_GRID_LEVEL: u32 = 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MutationError {
    #[error("grid level {0} exceeds the supported maximum {MAX_GRID_LEVEL}")]
    GridTooFine(u32),
    #[error("expected {expected} densities for grid level {level}, got {got}")]
    DensityCount { level: u32, expected: usize, got: usize },
    #[error("density or atom mass {0} is negative")]
    NegativeMass(String),
    #[error("atom position {0} lies outside [0, 1]")]
    AtomOutOfRange(String),
    #[error("base measure has total mass {0}, expected 1")]
    NotProbability(String),
    #[error("mutation rate theta must be positive, got {0}")]
    NonPositiveTheta(String),
    #[error("operation needs a uniform (parent-independent) mutation kernel")]
    NotUniform,
    #[error("negative time {0}")]
    NegativeTime(f64),
    #[error("reflected step half-width must lie in (0, 1], got {0}")]
    BadHalfWidth(String),
}

/// Coefficient field for step functions: exact rationals or doubles.
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Send
    + Sync
    + 'static
{
    fn from_rational(value: &Rational) -> Self;
    fn to_f64(&self) -> f64;
    /// `measure([lo, hi))` in endpoint units, closed at 1 when `hi = ONE`.
    fn interval_mass(measure: &BaseMeasure, lo: u64, hi: u64) -> Self;
}

impl Scalar for Rational {
    fn from_rational(value: &Rational) -> Self {
        value.clone()
    }

    fn to_f64(&self) -> f64 {
        to_f64(self)
    }

    fn interval_mass(measure: &BaseMeasure, lo: u64, hi: u64) -> Self {
        measure.interval_mass_exact(lo, hi)
    }
}

impl Scalar for f64 {
    fn from_rational(value: &Rational) -> Self {
        to_f64(value)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn interval_mass(measure: &BaseMeasure, lo: u64, hi: u64) -> Self {
        measure.interval_mass_f64(lo, hi)
    }
}

/// A step function on `[0, 1]` that is constant on the pieces of a dyadic
/// partition.
///
/// Stored as breakpoints: piece `i` covers `[starts[i], starts[i+1])`, the
/// last piece runs up to and including 1. Adjacent pieces never share a value,
/// which makes the representation canonical.
#[derive(Debug, Clone, PartialEq)]
pub struct SetFunction<S> {
    pieces: Vec<(u64, S)>,
}

impl<S: Scalar> SetFunction<S> {
    pub fn constant(value: S) -> Self {
        Self {
            pieces: vec![(0, value)],
        }
    }

    pub fn zero() -> Self {
        Self::constant(S::zero())
    }

    pub fn one() -> Self {
        Self::constant(S::one())
    }

    /// `1_set`.
    pub fn indicator(set: &DyadicSet) -> Self {
        Self::weighted_indicator(S::one(), set)
    }

    /// `c · 1_set`.
    pub fn weighted_indicator(c: S, set: &DyadicSet) -> Self {
        let mut pieces = Vec::new();
        let mut cursor = 0;
        for &(l, h) in set.intervals() {
            if cursor < l {
                pieces.push((cursor, S::zero()));
            }
            pieces.push((l, c.clone()));
            cursor = h;
        }
        if cursor < ONE {
            pieces.push((cursor, S::zero()));
        }
        Self::canonical(pieces)
    }

    fn canonical(pieces: Vec<(u64, S)>) -> Self {
        let mut out: Vec<(u64, S)> = Vec::with_capacity(pieces.len());
        for (start, value) in pieces {
            if start >= ONE && !out.is_empty() {
                continue;
            }
            match out.last_mut() {
                Some(last) if last.0 == start => last.1 = value,
                _ => out.push((start, value)),
            }
            let n = out.len();
            if n >= 2 && out[n - 1].1 == out[n - 2].1 {
                out.pop();
            }
        }
        if out.is_empty() {
            out.push((0, S::zero()));
        }
        Self { pieces: out }
    }

    /// Breakpoint view: `(lo, hi, value)` for each piece.
    pub fn pieces(&self) -> impl Iterator<Item = (u64, u64, &S)> {
        self.pieces.iter().enumerate().map(move |(i, (lo, v))| {
            let hi = self.pieces.get(i + 1).map_or(ONE, |p| p.0);
            (*lo, hi, v)
        })
    }

    /// `Σ cᵢ 1_{Sᵢ}` with distinct nonzero `cᵢ` and disjoint `Sᵢ`.
    pub fn terms(&self) -> Vec<(S, DyadicSet)> {
        let mut grouped: Vec<(S, Vec<(u64, u64)>)> = Vec::new();
        for (lo, hi, v) in self.pieces() {
            if v.is_zero() {
                continue;
            }
            match grouped.iter_mut().find(|(c, _)| c == v) {
                Some((_, ivs)) => ivs.push((lo, hi)),
                None => grouped.push((v.clone(), vec![(lo, hi)])),
            }
        }
        grouped
            .into_iter()
            .map(|(c, ivs)| (c, DyadicSet::from_units(ivs)))
            .collect()
    }

    pub fn constant_value(&self) -> Option<&S> {
        (self.pieces.len() == 1).then(|| &self.pieces[0].1)
    }

    pub fn eval(&self, x: f64) -> S {
        for (lo, hi, v) in self.pieces() {
            if interval_contains(lo, hi, x) {
                return v.clone();
            }
        }
        S::zero()
    }

    /// Pointwise `op(self, other)` on the common refinement.
    pub fn zip_with(&self, other: &Self, op: impl Fn(&S, &S) -> S) -> Self {
        let mut out = Vec::with_capacity(self.pieces.len() + other.pieces.len());
        let (mut i, mut j) = (0, 0);
        loop {
            let start = self.pieces[i].0.max(other.pieces[j].0);
            out.push((start, op(&self.pieces[i].1, &other.pieces[j].1)));
            let next_a = self.pieces.get(i + 1).map(|p| p.0);
            let next_b = other.pieces.get(j + 1).map(|p| p.0);
            match (next_a, next_b) {
                (None, None) => break,
                (Some(_), None) => i += 1,
                (None, Some(_)) => j += 1,
                (Some(a), Some(b)) => {
                    if a <= b {
                        i += 1;
                    }
                    if b <= a {
                        j += 1;
                    }
                }
            }
        }
        Self::canonical(out)
    }

    pub fn map(&self, op: impl Fn(&S) -> S) -> Self {
        Self::canonical(self.pieces.iter().map(|(s, v)| (*s, op(v))).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a.clone() + b.clone())
    }

    pub fn multiply(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a.clone() * b.clone())
    }

    pub fn scale(&self, c: &S) -> Self {
        self.map(|v| v.clone() * c.clone())
    }

    pub fn add_constant(&self, c: &S) -> Self {
        self.map(|v| v.clone() + c.clone())
    }

    /// `g ≥ 0` everywhere.
    pub fn is_nonnegative(&self) -> bool
    where
        S: PartialOrd,
    {
        self.pieces.iter().all(|(_, v)| *v >= S::zero())
    }

    /// Converts coefficients into another scalar type.
    pub fn convert<T: Scalar>(&self) -> SetFunction<T>
    where
        S: AsRational,
    {
        SetFunction::canonical(
            self.pieces
                .iter()
                .map(|(s, v)| (*s, T::from_rational(&v.as_rational())))
                .collect(),
        )
    }
}

/// Scalars with an exact rational value.
pub trait AsRational {
    fn as_rational(&self) -> Rational;
}

impl AsRational for Rational {
    fn as_rational(&self) -> Rational {
        self.clone()
    }
}

/// `∫ g dμ`.
pub fn integrate<S: Scalar>(measure: &BaseMeasure, g: &SetFunction<S>) -> S {
    g.pieces()
        .fold(S::zero(), |acc, (lo, hi, v)| {
            if v.is_zero() {
                acc
            } else {
                acc + v.clone() * S::interval_mass(measure, lo, hi)
            }
        })
}

/// Ordered tensor product `g₁ ⊗ g₂ ⊗ ⋯`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorFunction<S> {
    factors: Vec<SetFunction<S>>,
}

impl<S: Scalar> TensorFunction<S> {
    pub fn new(factors: Vec<SetFunction<S>>) -> Self {
        Self { factors }
    }

    /// `g^{⊗n}`.
    pub fn power(g: &SetFunction<S>, n: usize) -> Self {
        Self {
            factors: vec![g.clone(); n],
        }
    }

    pub fn arity(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[SetFunction<S>] {
        &self.factors
    }

    pub fn factors_mut(&mut self) -> &mut [SetFunction<S>] {
        &mut self.factors
    }

    pub fn into_factors(self) -> Vec<SetFunction<S>> {
        self.factors
    }

    /// `f(x₁,…,xₙ) = ∏ gᵢ(xᵢ)`.
    pub fn eval(&self, xs: &[f64]) -> S {
        self.factors
            .iter()
            .zip(xs)
            .fold(S::one(), |acc, (g, &x)| acc * g.eval(x))
    }
}

/// A probability measure on `[0, 1]`: piecewise-constant density on a dyadic
/// grid plus finitely many atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseMeasure {
    grid_level: u32,
    densities: Vec<Rational>,
    atoms: Vec<(Rational, Rational)>,
    atom_units: Vec<Rational>,
    atom_points: Vec<f64>,
    /// Cumulative continuous mass at each cell boundary, as doubles.
    cdf: Vec<f64>,
    /// Cumulative sampling weights: cells first, then atoms.
    sampler: Vec<f64>,
}

impl BaseMeasure {
    /// `densities` has `2^grid_level` entries; atoms are `(position, mass)`.
    pub fn new(
        grid_level: u32,
        densities: Vec<Rational>,
        atoms: Vec<(Rational, Rational)>,
    ) -> Result<Self, MutationError> {
        if grid_level > MAX_GRID_LEVEL {
            return Err(MutationError::GridTooFine(grid_level));
        }
        let cells = 1usize << grid_level;
        if densities.len() != cells {
            return Err(MutationError::DensityCount {
                level: grid_level,
                expected: cells,
                got: densities.len(),
            });
        }
        let cell_len = Rational::new(BigInt::one(), BigInt::from(cells));
        let mut total = Rational::zero();
        for d in &densities {
            if d.is_negative() {
                return Err(MutationError::NegativeMass(format_rational(d)));
            }
            total += d * &cell_len;
        }
        for (at, mass) in &atoms {
            if mass.is_negative() {
                return Err(MutationError::NegativeMass(format_rational(mass)));
            }
            if at.is_negative() || at > &Rational::one() {
                return Err(MutationError::AtomOutOfRange(format_rational(at)));
            }
            total += mass;
        }
        if !total.is_one() {
            return Err(MutationError::NotProbability(format_rational(&total)));
        }
        let scale = Rational::from_integer(BigInt::one() << DEPTH);
        let atom_units = atoms.iter().map(|(at, _)| at * &scale).collect();
        let atom_points = atoms.iter().map(|(at, _)| to_f64(at)).collect();
        let cell_mass: Vec<f64> = densities.iter().map(|d| to_f64(&(d * &cell_len))).collect();
        let mut cdf = Vec::with_capacity(cells + 1);
        cdf.push(0.0);
        for m in &cell_mass {
            cdf.push(cdf.last().unwrap() + m);
        }
        let mut sampler = Vec::with_capacity(cells + atoms.len());
        let mut acc = 0.0;
        for m in cell_mass
            .iter()
            .copied()
            .chain(atoms.iter().map(|(_, m)| to_f64(m)))
        {
            acc += m;
            sampler.push(acc);
        }
        Ok(Self {
            grid_level,
            densities,
            atoms,
            atom_units,
            atom_points,
            cdf,
            sampler,
        })
    }

    /// Lebesgue measure on `[0, 1]`.
    pub fn uniform() -> Self {
        Self::new(0, vec![Rational::one()], Vec::new()).expect("uniform is a probability")
    }

    /// Unit mass at `x`.
    pub fn dirac(x: Rational) -> Result<Self, MutationError> {
        Self::new(0, vec![Rational::zero()], vec![(x, Rational::one())])
    }

    pub fn grid_level(&self) -> u32 {
        self.grid_level
    }

    pub fn densities(&self) -> &[Rational] {
        &self.densities
    }

    pub fn atoms(&self) -> &[(Rational, Rational)] {
        &self.atoms
    }

    /// `ν(S)`, exactly.
    pub fn mass(&self, set: &DyadicSet) -> Rational {
        set.intervals()
            .iter()
            .map(|&(l, h)| self.interval_mass_exact(l, h))
            .sum()
    }

    pub fn mass_f64(&self, set: &DyadicSet) -> f64 {
        set.intervals()
            .iter()
            .map(|&(l, h)| self.interval_mass_f64(l, h))
            .sum()
    }

    fn cell_shift(&self) -> u32 {
        DEPTH - self.grid_level
    }

    fn interval_mass_exact(&self, lo: u64, hi: u64) -> Rational {
        let mut total = Rational::zero();
        if lo < hi {
            let shift = self.cell_shift();
            let first = (lo >> shift) as usize;
            let last = (((hi - 1) >> shift) as usize).min(self.densities.len() - 1);
            for cell in first..=last {
                let c_lo = (cell as u64) << shift;
                let c_hi = ((cell as u64) + 1) << shift;
                let overlap = hi.min(c_hi) - lo.max(c_lo);
                if overlap > 0 && !self.densities[cell].is_zero() {
                    total += &self.densities[cell] * endpoint_value(overlap);
                }
            }
        }
        let (l, h) = (Rational::from_integer(lo.into()), Rational::from_integer(hi.into()));
        let top = Rational::from_integer(ONE.into());
        for (units, (_, mass)) in self.atom_units.iter().zip(&self.atoms) {
            if units >= &l && (units < &h || (hi == ONE && units == &top)) {
                total += mass;
            }
        }
        total
    }

    fn cdf_at(&self, units: u64) -> f64 {
        let shift = self.cell_shift();
        let cell = (units >> shift) as usize;
        if cell >= self.densities.len() {
            return *self.cdf.last().unwrap();
        }
        let within = (units - ((cell as u64) << shift)) as f64 / (1u64 << shift) as f64;
        self.cdf[cell] + within * (self.cdf[cell + 1] - self.cdf[cell])
    }

    fn interval_mass_f64(&self, lo: u64, hi: u64) -> f64 {
        let mut total = if lo < hi {
            self.cdf_at(hi) - self.cdf_at(lo)
        } else {
            0.0
        };
        let (l, h) = (lo as f64 / ONE as f64, hi as f64 / ONE as f64);
        for (i, &x) in self.atom_points.iter().enumerate() {
            if x >= l && (x < h || (hi == ONE && x == 1.0)) {
                total += to_f64(&self.atoms[i].1);
            }
        }
        total
    }

    /// Draws a point of `[0, 1]`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let total = *self.sampler.last().unwrap();
        let u = rng.random::<f64>() * total;
        let idx = self.sampler.partition_point(|&c| c <= u).min(self.sampler.len() - 1);
        let cells = self.densities.len();
        if idx < cells {
            let width = 1.0 / cells as f64;
            (idx as f64 + rng.random::<f64>()) * width
        } else {
            self.atom_points[idx - cells]
        }
    }
}

/// Mutation kernels without a closed-form semigroup.
#[derive(Debug, Clone, PartialEq)]
pub enum GeneralKernel {
    /// `x ↦ 1 − x`.
    Flip,
    /// `x ↦ x + U(−h, h)`, reflected back into `[0, 1]`.
    ReflectedStep { half_width: Rational },
}

impl GeneralKernel {
    pub fn jump<R: Rng + ?Sized>(&self, x: f64, rng: &mut R) -> f64 {
        match self {
            GeneralKernel::Flip => 1.0 - x,
            GeneralKernel::ReflectedStep { half_width } => {
                let h = to_f64(half_width);
                let mut y = x + (2.0 * rng.random::<f64>() - 1.0) * h;
                if y < 0.0 {
                    y = -y;
                }
                if y > 1.0 {
                    y = 2.0 - y;
                }
                y.clamp(0.0, 1.0)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MutationKind {
    /// Parent-independent: the new type is drawn from `ν₀`.
    Uniform(BaseMeasure),
    General(GeneralKernel),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MutationSpec {
    theta: Rational,
    kind: MutationKind,
}

impl MutationSpec {
    pub fn new(theta: Rational, kind: MutationKind) -> Result<Self, MutationError> {
        if !theta.is_positive() {
            return Err(MutationError::NonPositiveTheta(format_rational(&theta)));
        }
        if let MutationKind::General(GeneralKernel::ReflectedStep { half_width }) = &kind {
            if !half_width.is_positive() || half_width > &Rational::one() {
                return Err(MutationError::BadHalfWidth(format_rational(half_width)));
            }
        }
        Ok(Self { theta, kind })
    }

    pub fn uniform(theta: Rational, base: BaseMeasure) -> Result<Self, MutationError> {
        Self::new(theta, MutationKind::Uniform(base))
    }

    /// Mutation switched off. Only for boundary-case tests; the model itself
    /// requires a positive rate.
    pub fn frozen(kind: MutationKind) -> Self {
        Self {
            theta: Rational::zero(),
            kind,
        }
    }

    pub fn theta(&self) -> &Rational {
        &self.theta
    }

    pub fn kind(&self) -> &MutationKind {
        &self.kind
    }

    pub fn base(&self) -> Option<&BaseMeasure> {
        match &self.kind {
            MutationKind::Uniform(b) => Some(b),
            MutationKind::General(_) => None,
        }
    }

    fn require_base(&self) -> Result<&BaseMeasure, MutationError> {
        self.base().ok_or(MutationError::NotUniform)
    }

    /// One jump from `x`.
    pub fn jump<R: Rng + ?Sized>(&self, x: f64, rng: &mut R) -> f64 {
        match &self.kind {
            MutationKind::Uniform(base) => base.sample(rng),
            MutationKind::General(kernel) => kernel.jump(x, rng),
        }
    }
}

/// `A g = (θ/2)(⟨ν₀, g⟩·1 − g)`.
pub fn apply_generator_uniform<S: Scalar>(
    g: &SetFunction<S>,
    spec: &MutationSpec,
) -> Result<SetFunction<S>, MutationError> {
    let base = spec.require_base()?;
    let half_theta = S::from_rational(&(spec.theta() / Rational::from_integer(2.into())));
    let mean = integrate(base, g);
    Ok(g.map(|v| half_theta.clone() * (mean.clone() - v.clone())))
}

/// `T_t g = e^{−θt/2} g + (1 − e^{−θt/2}) ⟨ν₀, g⟩·1`.
pub fn semigroup_apply_uniform(
    g: &SetFunction<f64>,
    t: f64,
    spec: &MutationSpec,
) -> Result<SetFunction<f64>, MutationError> {
    if t < 0.0 {
        return Err(MutationError::NegativeTime(t));
    }
    let base = spec.require_base()?;
    let decay = (-to_f64(spec.theta()) * t / 2.0).exp();
    let mean = integrate(base, g);
    Ok(g.map(|v| decay * v + (1.0 - decay) * mean))
}

/// `T_t g` held exactly: the original function, its `ν₀`-mean and the elapsed
/// time. The only inexact step is evaluating the exponential weight.
#[derive(Debug, Clone, PartialEq)]
pub struct SemigroupImage {
    skeleton: SetFunction<Rational>,
    mean: Rational,
    elapsed: Rational,
}

impl SemigroupImage {
    pub fn new(g: SetFunction<Rational>, spec: &MutationSpec) -> Result<Self, MutationError> {
        let mean = integrate(spec.require_base()?, &g);
        Ok(Self {
            skeleton: g,
            mean,
            elapsed: Rational::zero(),
        })
    }

    /// `T_dt` applied on top. The mean is invariant, so the skeleton and mean
    /// carry over and only the elapsed time accumulates.
    pub fn advance(&self, dt: &Rational) -> Result<Self, MutationError> {
        if dt.is_negative() {
            return Err(MutationError::NegativeTime(to_f64(dt)));
        }
        Ok(Self {
            skeleton: self.skeleton.clone(),
            mean: self.mean.clone(),
            elapsed: &self.elapsed + dt,
        })
    }

    pub fn skeleton(&self) -> &SetFunction<Rational> {
        &self.skeleton
    }

    pub fn mean(&self) -> &Rational {
        &self.mean
    }

    pub fn elapsed(&self) -> &Rational {
        &self.elapsed
    }

    pub fn materialize(&self, theta: &Rational) -> SetFunction<f64> {
        let decay = (-to_f64(theta) * to_f64(&self.elapsed) / 2.0).exp();
        let mean = to_f64(&self.mean);
        self.skeleton
            .convert::<f64>()
            .map(|v| decay * v + (1.0 - decay) * mean)
    }
}

/// Number of mutation events on a lineage segment of length `t`.
pub fn mutation_count<R: Rng + ?Sized>(theta: f64, t: f64, rng: &mut R) -> u64 {
    let lambda = theta * t / 2.0;
    if lambda <= 0.0 {
        return 0;
    }
    Poisson::new(lambda).map_or(0, |p| p.sample(rng) as u64)
}

/// Type at time `t` of a lineage started at `x0`.
pub fn sample_mutation_path<R: Rng + ?Sized>(
    x0: f64,
    t: f64,
    spec: &MutationSpec,
    rng: &mut R,
) -> Result<f64, MutationError> {
    if t < 0.0 {
        return Err(MutationError::NegativeTime(t));
    }
    let jumps = mutation_count(to_f64(spec.theta()), t, rng);
    let mut x = x0;
    for _ in 0..jumps {
        x = spec.jump(x, rng);
    }
    Ok(x)
}
