//! Finite unions of dyadic intervals of `E = [0, 1]`.
//!
//! Endpoints are integers over `2^DEPTH`. Every interval is half-open
//! `[lo, hi)`, except that an interval ending at 1 also contains 1, so the
//! level-`n` cells partition `[0, 1]`.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::rational::{format_rational, Rational};

/// Finest supported dyadic level.
pub const DEPTH: u32 = 40;
/// The point 1 in endpoint units.
pub const ONE: u64 = 1 << DEPTH;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DyadicError {
    #[error("{0} is not a dyadic rational with denominator at most 2^{DEPTH}")]
    NotDyadic(String),
    #[error("endpoint {0} lies outside [0, 1]")]
    OutOfRange(String),
    #[error("interval [{0}, {1}) is reversed")]
    Reversed(String, String),
    #[error("level {0} exceeds the finest supported level {DEPTH}")]
    LevelTooFine(u32),
    #[error("cell index {index} out of range at level {level}")]
    CellOutOfRange { level: u32, index: u64 },
}

/// Converts a dyadic rational in `[0, 1]` to endpoint units.
pub fn endpoint(value: &Rational) -> Result<u64, DyadicError> {
    if value.is_negative() || value > &Rational::one() {
        return Err(DyadicError::OutOfRange(format_rational(value)));
    }
    let scaled = value * Rational::from_integer(BigInt::one() << DEPTH);
    if !scaled.is_integer() {
        return Err(DyadicError::NotDyadic(format_rational(value)));
    }
    Ok(scaled.to_integer().to_u64().expect("within [0, 2^DEPTH]"))
}

/// Endpoint units back to an exact rational.
pub fn endpoint_value(units: u64) -> Rational {
    Rational::new(BigInt::from(units), BigInt::one() << DEPTH)
}

/// Whether the real number `x` lies in the interval `[lo, hi)` (closed at 1).
pub fn interval_contains(lo: u64, hi: u64, x: f64) -> bool {
    let scaled = x * ONE as f64;
    scaled >= lo as f64 && (scaled < hi as f64 || (hi == ONE && scaled == ONE as f64))
}

/// Canonical finite union of dyadic intervals.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct DyadicSet {
    /// Sorted, disjoint, non-adjacent, non-empty intervals.
    intervals: Vec<(u64, u64)>,
}

impl DyadicSet {
    pub fn empty() -> Self {
        Self::default()
    }

    /// The whole type space `E`.
    pub fn full() -> Self {
        Self {
            intervals: vec![(0, ONE)],
        }
    }

    /// `[lo, hi)` with dyadic endpoints (closed at 1 when `hi = 1`).
    pub fn interval(lo: &Rational, hi: &Rational) -> Result<Self, DyadicError> {
        let (l, h) = (endpoint(lo)?, endpoint(hi)?);
        if l > h {
            return Err(DyadicError::Reversed(format_rational(lo), format_rational(hi)));
        }
        Ok(Self::from_units(vec![(l, h)]))
    }

    /// The level-`level` cell `[i/2^level, (i+1)/2^level)`.
    pub fn cell(level: u32, index: u64) -> Result<Self, DyadicError> {
        if level > DEPTH {
            return Err(DyadicError::LevelTooFine(level));
        }
        if index >= 1u64 << level {
            return Err(DyadicError::CellOutOfRange { level, index });
        }
        let width = 1u64 << (DEPTH - level);
        Ok(Self::from_units(vec![(index * width, (index + 1) * width)]))
    }

    /// Builds a set from arbitrary intervals in endpoint units.
    pub fn from_units(mut intervals: Vec<(u64, u64)>) -> Self {
        intervals.retain(|&(l, h)| l < h);
        intervals.sort_unstable();
        let mut merged: Vec<(u64, u64)> = Vec::with_capacity(intervals.len());
        for (l, h) in intervals {
            match merged.last_mut() {
                Some(last) if l <= last.1 => last.1 = last.1.max(h),
                _ => merged.push((l, h)),
            }
        }
        Self { intervals: merged }
    }

    pub fn intervals(&self) -> &[(u64, u64)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.intervals == [(0, ONE)]
    }

    pub fn contains(&self, x: f64) -> bool {
        self.intervals
            .iter()
            .any(|&(l, h)| interval_contains(l, h, x))
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut all = self.intervals.clone();
        all.extend_from_slice(&other.intervals);
        Self::from_units(all)
    }

    pub fn intersection(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.intervals.len() && j < other.intervals.len() {
            let (a0, a1) = self.intervals[i];
            let (b0, b1) = other.intervals[j];
            let lo = a0.max(b0);
            let hi = a1.min(b1);
            if lo < hi {
                out.push((lo, hi));
            }
            if a1 < b1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self::from_units(out)
    }

    pub fn complement(&self) -> Self {
        let mut out = Vec::with_capacity(self.intervals.len() + 1);
        let mut cursor = 0;
        for &(l, h) in &self.intervals {
            if cursor < l {
                out.push((cursor, l));
            }
            cursor = h;
        }
        if cursor < ONE {
            out.push((cursor, ONE));
        }
        Self::from_units(out)
    }

    pub fn difference(&self, other: &Self) -> Self {
        self.intersection(&other.complement())
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.intersection(other).is_empty()
    }

    /// Coarsest level at which every endpoint is a cell boundary.
    pub fn level(&self) -> u32 {
        self.intervals
            .iter()
            .flat_map(|&(l, h)| [l, h])
            .map(|e| if e == 0 { 0 } else { DEPTH - e.trailing_zeros().min(DEPTH) })
            .max()
            .unwrap_or(0)
    }

    /// Lebesgue measure, exactly.
    pub fn length(&self) -> Rational {
        let units: u64 = self.intervals.iter().map(|&(l, h)| h - l).sum();
        endpoint_value(units)
    }
}

impl fmt::Display for DyadicSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.intervals.is_empty() {
            return write!(f, "{{}}");
        }
        let parts: Vec<String> = self
            .intervals
            .iter()
            .map(|&(l, h)| {
                let close = if h == ONE { "]" } else { ")" };
                format!(
                    "[{},{}{}",
                    format_rational(&endpoint_value(l)),
                    format_rational(&endpoint_value(h)),
                    close
                )
            })
            .collect();
        write!(f, "{}", parts.join("∪"))
    }
}

/// Greatest common dyadic level of a rational, if it is dyadic.
pub fn dyadic_level(value: &Rational) -> Option<u32> {
    let den = value.denom();
    if den.is_zero() {
        return None;
    }
    let bits = den.bits();
    if den == &(BigInt::one() << (bits - 1)) {
        u32::try_from(bits - 1).ok()
    } else {
        None
    }
}
