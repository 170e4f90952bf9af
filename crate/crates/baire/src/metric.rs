//! Longest-common-prefix distance over digit codes.
//!
//! The distance between two codes is `B^-v` where `v` is the length of their
//! shared digit prefix. It is carried around as the integer `v` rather than
//! the float it denotes: integer comparison is exact, and larger prefix means
//! strictly smaller distance, so no floating-point comparison ever decides a
//! tie. Two codes that agree on every compared digit sit at `B^-cap`, never
//! at zero, which keeps the metric positive and 1-bounded at finite
//! precision.

use crate::codec::DigitCode;
use crate::error::{Error, Result};

/// Exact distance between two digit codes.
///
/// `lcp` is the shared-prefix length, `cap` the shorter of the two operand
/// precisions; the real-valued distance is `base^-lcp`. Codes of unequal
/// precision are compared only over the digits both of them have.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BaireProximity {
    lcp: usize,
    base: u32,
    cap: usize,
}

impl BaireProximity {
    /// Shared-prefix length; 0 means the first digits already differ.
    pub fn lcp(&self) -> usize {
        self.lcp
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    /// Comparison cap: the smaller of the two operand precisions.
    pub fn cap(&self) -> usize {
        self.cap
    }

    /// Distance as a real number in `(0, 1]`.
    pub fn value(&self) -> f64 {
        f64::from(self.base).powi(-(self.lcp as i32))
    }

    pub(crate) fn from_lcp(lcp: usize, base: u32, cap: usize) -> Self {
        debug_assert!(lcp <= cap);
        Self { lcp, base, cap }
    }
}

fn check_same_base(a: &DigitCode, b: &DigitCode) -> Result<()> {
    if a.base() == b.base() {
        Ok(())
    } else {
        Err(Error::BaseMismatch(a.base(), b.base()))
    }
}

/// Length of the longest shared digit prefix of `a` and `b`.
pub fn lcp(a: &DigitCode, b: &DigitCode) -> Result<usize> {
    check_same_base(a, b)?;
    Ok(a.digits()
        .iter()
        .zip(b.digits())
        .take_while(|(x, y)| x == y)
        .count())
}

/// Baire distance between `a` and `b`, capped at the pairwise precision.
pub fn baire_distance(a: &DigitCode, b: &DigitCode) -> Result<BaireProximity> {
    let shared = lcp(a, b)?;
    let cap = a.precision().min(b.precision());
    Ok(BaireProximity::from_lcp(shared, a.base(), cap))
}

/// Strong triangle inequality on a triplet, in exact integer form:
/// `lcp(a, c) >= min(lcp(a, b), lcp(b, c))`. Always true for digit codes.
pub fn check_ultrametric_triplet(a: &DigitCode, b: &DigitCode, c: &DigitCode) -> Result<bool> {
    let ab = lcp(a, b)?;
    let bc = lcp(b, c)?;
    let ac = lcp(a, c)?;
    Ok(ac >= ab.min(bc))
}

/// True when the triangle on `a`, `b`, `c` is isosceles with the two large
/// sides equal, or equilateral. Equivalently: the two smallest of the three
/// pairwise prefix lengths are equal. Always true for digit codes.
pub fn check_isosceles(a: &DigitCode, b: &DigitCode, c: &DigitCode) -> Result<bool> {
    let mut lcps = [lcp(a, b)?, lcp(b, c)?, lcp(a, c)?];
    lcps.sort_unstable();
    Ok(lcps[0] == lcps[1])
}
