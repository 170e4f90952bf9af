//! Base-B digit encoding of unit-interval scalars.
//!
//! A scalar in `[0, 1]` becomes a fixed-length sequence of base-B digits by
//! scaling to an integer once and reading digits off most-significant first.
//! Every prefix of the digit sequence names one bin of the induced hierarchy,
//! so the encoding is the whole story: distance, tree and clusters all derive
//! from these digits.

use std::fmt;

use crate::error::{Error, Result};

/// Smallest supported digit base.
pub const MIN_BASE: u32 = 2;
/// Largest supported digit base (digits render as `0-9a-z`).
pub const MAX_BASE: u32 = 36;

const DIGIT_CHARS: &[u8; 36] = b"0123456789abcdefghijklmnopqrstuvwxyz";

pub(crate) fn check_base(base: u32) -> Result<()> {
    if (MIN_BASE..=MAX_BASE).contains(&base) {
        Ok(())
    } else {
        Err(Error::BaseOutOfRange(base))
    }
}

/// `base^precision` as the integer digit-space size, or an error when the
/// precision is 0 or too large to represent.
pub(crate) fn digit_space(base: u32, precision: usize) -> Result<u128> {
    if precision < 1 {
        return Err(Error::PrecisionOutOfRange(precision, base));
    }
    u32::try_from(precision)
        .ok()
        .and_then(|p| (base as u128).checked_pow(p))
        .ok_or(Error::PrecisionOutOfRange(precision, base))
}

/// A scalar encoded as base-`base` digits, most significant first.
///
/// The digit count is the code's precision; it is fixed at construction and
/// only ever shrinks (see [`truncate`]).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DigitCode {
    base: u32,
    digits: Vec<u8>,
}

impl DigitCode {
    /// Wraps raw digits, validating base and digit ranges.
    pub fn new(base: u32, digits: Vec<u8>) -> Result<Self> {
        check_base(base)?;
        if digits.is_empty() {
            return Err(Error::PrecisionOutOfRange(0, base));
        }
        if let Some(&digit) = digits.iter().find(|&&d| u32::from(d) >= base) {
            return Err(Error::DigitOutOfRange { digit, base });
        }
        Ok(Self { base, digits })
    }

    /// Parses a digit string in the `0-9a-z` alphabet (case-insensitive).
    pub fn parse(base: u32, text: &str) -> Result<Self> {
        check_base(base)?;
        let digits = text
            .bytes()
            .map(|b| match b {
                b'0'..=b'9' => Ok(b - b'0'),
                b'a'..=b'z' => Ok(b - b'a' + 10),
                b'A'..=b'Z' => Ok(b - b'A' + 10),
                _ => Err(Error::DigitOutOfRange { digit: b, base }),
            })
            .collect::<Result<Vec<u8>>>()?;
        Self::new(base, digits)
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn digits(&self) -> &[u8] {
        &self.digits
    }

    /// Number of digits held; `k = 1` is the first digit of precision.
    pub fn precision(&self) -> usize {
        self.digits.len()
    }

    /// First `level` digits read as a base-B integer.
    ///
    /// At a fixed level this orders prefixes exactly like the digit strings,
    /// and consecutive integers are the grid neighbors of the clustering
    /// stage. Levels deeper than the precision saturate at the full value.
    pub(crate) fn prefix_value(&self, level: usize) -> u128 {
        self.digits
            .iter()
            .take(level)
            .fold(0u128, |acc, &d| acc * u128::from(self.base) + u128::from(d))
    }
}

impl fmt::Display for DigitCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &d in &self.digits {
            write!(f, "{}", DIGIT_CHARS[d as usize] as char)?;
        }
        Ok(())
    }
}

/// Renders a digit slice with the same alphabet as [`DigitCode`]'s `Display`.
pub fn digits_to_string(digits: &[u8]) -> String {
    digits
        .iter()
        .map(|&d| DIGIT_CHARS[d as usize] as char)
        .collect()
}

/// Encodes `value` in `[0, 1]` as `precision` base-`base` digits.
///
/// The value is scaled to `round(value * base^precision)` in one step
/// (round-half-away-from-zero) and digits are extracted by integer division,
/// so identical inputs yield identical digits on every platform. A scaled
/// value of `base^precision` (i.e. `value == 1.0`, or a rounding tie at the
/// top) clamps to `base^precision - 1`, keeping every code inside the
/// fixed-depth tree.
pub fn encode(value: f64, base: u32, precision: usize) -> Result<DigitCode> {
    check_base(base)?;
    let space = digit_space(base, precision)?;
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::ValueOutOfUnitRange(value));
    }
    let scaled = (value * space as f64).round();
    let mut rest = if scaled >= space as f64 {
        space - 1
    } else {
        scaled as u128
    };
    let mut digits = vec![0u8; precision];
    for slot in digits.iter_mut().rev() {
        *slot = (rest % u128::from(base)) as u8;
        rest /= u128::from(base);
    }
    debug_assert_eq!(rest, 0);
    Ok(DigitCode { base, digits })
}

/// Keeps the first `new_precision` digits of `code`.
///
/// Truncation is a pure prefix operation; it never invents digits, so the
/// target precision must not exceed the current one.
pub fn truncate(code: &DigitCode, new_precision: usize) -> Result<DigitCode> {
    if new_precision < 1 {
        return Err(Error::PrecisionOutOfRange(new_precision, code.base));
    }
    if new_precision > code.precision() {
        return Err(Error::TruncateBeyondPrecision {
            requested: new_precision,
            actual: code.precision(),
        });
    }
    Ok(DigitCode {
        base: code.base,
        digits: code.digits[..new_precision].to_vec(),
    })
}

/// Affine range used to map raw scalars into the unit interval.
///
/// Non-degenerate bounds send `lo` to 0 and everything strictly below `hi`
/// into `[0, 1)`; `hi` itself maps to 1.0, which [`encode`] then clamps into
/// the top bin. Degenerate bounds (`lo == hi`) send everything to 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationBounds {
    lo: f64,
    hi: f64,
}

impl NormalizationBounds {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !lo.is_finite() {
            return Err(Error::NonFinite(lo));
        }
        if !hi.is_finite() {
            return Err(Error::NonFinite(hi));
        }
        if lo > hi {
            return Err(Error::ValueOutOfBounds { value: lo, lo, hi });
        }
        Ok(Self { lo, hi })
    }

    /// Fits bounds as the min/max of `values`.
    pub fn fit(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in values {
            if !v.is_finite() {
                return Err(Error::NonFinite(v));
            }
            lo = lo.min(v);
            hi = hi.max(v);
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }

    /// Maps `value` into `[0, 1]`; values outside the bounds signal that the
    /// bounds are stale and are rejected.
    pub fn apply(&self, value: f64) -> Result<f64> {
        if !value.is_finite() {
            return Err(Error::NonFinite(value));
        }
        if value < self.lo || value > self.hi {
            return Err(Error::ValueOutOfBounds {
                value,
                lo: self.lo,
                hi: self.hi,
            });
        }
        if self.is_degenerate() {
            return Ok(0.0);
        }
        Ok((value - self.lo) / (self.hi - self.lo))
    }

    /// Like [`apply`](Self::apply) but clamps out-of-bounds values to the
    /// nearest bound instead of failing; the flag reports whether clamping
    /// happened. Query paths use this so mild extrapolation cannot crash.
    pub fn apply_clamped(&self, value: f64) -> Result<(f64, bool)> {
        if !value.is_finite() {
            return Err(Error::NonFinite(value));
        }
        let clamped = value.clamp(self.lo, self.hi);
        Ok((self.apply(clamped)?, clamped != value))
    }
}

/// Maps each value through `bounds`; fails on the first out-of-bounds value.
pub fn normalize(values: &[f64], bounds: &NormalizationBounds) -> Result<Vec<f64>> {
    values.iter().map(|&v| bounds.apply(v)).collect()
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    // Independent reading of a code back to a scalar: sum of d_i * B^-i.
    fn decode(code: &DigitCode) -> f64 {
        let base = f64::from(code.base());
        code.digits()
            .iter()
            .enumerate()
            .map(|(i, &d)| f64::from(d) * base.powi(-(i as i32 + 1)))
            .sum()
    }

    #[test]
    fn encode_worked_example() {
        assert_eq!(encode(0.478, 10, 3).unwrap().digits(), &[4, 7, 8]);
    }

    #[test]
    fn encode_zero() {
        assert_eq!(encode(0.0, 10, 3).unwrap().digits(), &[0, 0, 0]);
    }

    #[test]
    fn encode_bin_hash_value() {
        assert_eq!(encode(0.3475, 10, 4).unwrap().digits(), &[3, 4, 7, 5]);
    }

    #[test]
    fn encode_one_clamps_to_top_code() {
        assert_eq!(encode(1.0, 10, 2).unwrap().digits(), &[9, 9]);
    }

    #[test]
    fn encode_rounds_half_away_from_zero() {
        // 0.25 * 10 = 2.5 exactly (dyadic), the tie rounds up to 3.
        assert_eq!(encode(0.25, 10, 1).unwrap().digits(), &[3]);
        assert_eq!(encode(0.25, 2, 1).unwrap().digits(), &[1]);
    }

    #[test]
    fn encode_binary_base() {
        assert_eq!(encode(0.5, 2, 3).unwrap().digits(), &[1, 0, 0]);
        assert_eq!(encode(0.3, 2, 4).unwrap().digits(), &[0, 1, 0, 1]);
    }

    #[test]
    fn encode_rejects_bad_inputs() {
        assert!(matches!(
            encode(-0.1, 10, 3),
            Err(Error::ValueOutOfUnitRange(_))
        ));
        assert!(matches!(
            encode(1.5, 10, 3),
            Err(Error::ValueOutOfUnitRange(_))
        ));
        assert!(matches!(
            encode(f64::NAN, 10, 3),
            Err(Error::ValueOutOfUnitRange(_))
        ));
        assert!(matches!(
            encode(0.5, 10, 0),
            Err(Error::PrecisionOutOfRange(0, 10))
        ));
        assert!(matches!(encode(0.5, 1, 3), Err(Error::BaseOutOfRange(1))));
        assert!(matches!(encode(0.5, 37, 3), Err(Error::BaseOutOfRange(37))));
        // 10^40 does not fit the 128-bit digit space.
        assert!(matches!(
            encode(0.5, 10, 40),
            Err(Error::PrecisionOutOfRange(40, 10))
        ));
    }

    #[test]
    fn digit_code_validation() {
        assert!(DigitCode::new(10, vec![4, 7, 8]).is_ok());
        assert!(matches!(
            DigitCode::new(10, vec![4, 10]),
            Err(Error::DigitOutOfRange { digit: 10, base: 10 })
        ));
        assert!(matches!(
            DigitCode::new(10, vec![]),
            Err(Error::PrecisionOutOfRange(0, 10))
        ));
    }

    #[test]
    fn digit_string_round_trip() {
        let code = DigitCode::new(16, vec![0, 10, 15]).unwrap();
        assert_eq!(code.to_string(), "0af");
        assert_eq!(DigitCode::parse(16, "0af").unwrap(), code);
        assert_eq!(DigitCode::parse(16, "0AF").unwrap(), code);
        assert!(DigitCode::parse(10, "4x8").is_err());
    }

    #[test]
    fn truncate_is_prefix() {
        let code = DigitCode::new(10, vec![3, 4, 7, 5]).unwrap();
        assert_eq!(truncate(&code, 2).unwrap().digits(), &[3, 4]);
        assert_eq!(truncate(&code, 4).unwrap(), code);
        let nines = DigitCode::new(10, vec![9, 9, 9]).unwrap();
        assert_eq!(truncate(&nines, 1).unwrap().digits(), &[9]);
    }

    #[test]
    fn truncate_never_invents_digits() {
        let code = DigitCode::new(10, vec![3, 4]).unwrap();
        assert!(matches!(
            truncate(&code, 3),
            Err(Error::TruncateBeyondPrecision {
                requested: 3,
                actual: 2
            })
        ));
        assert!(truncate(&code, 0).is_err());
    }

    #[test]
    fn normalize_affine_endpoints() {
        let bounds = NormalizationBounds::new(0.0, 10.0).unwrap();
        assert_eq!(
            normalize(&[0.0, 5.0, 10.0], &bounds).unwrap(),
            vec![0.0, 0.5, 1.0]
        );
        assert_eq!(normalize(&[2.5], &bounds).unwrap(), vec![0.25]);
    }

    #[test]
    fn normalize_degenerate_bounds() {
        let bounds = NormalizationBounds::new(7.0, 7.0).unwrap();
        assert!(bounds.is_degenerate());
        assert_eq!(normalize(&[7.0, 7.0], &bounds).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn normalize_rejects_stale_bounds() {
        let bounds = NormalizationBounds::new(0.0, 10.0).unwrap();
        assert!(matches!(
            bounds.apply(10.5),
            Err(Error::ValueOutOfBounds { .. })
        ));
        assert!(matches!(
            bounds.apply(-0.5),
            Err(Error::ValueOutOfBounds { .. })
        ));
    }

    #[test]
    fn clamped_apply_flags_extrapolation() {
        let bounds = NormalizationBounds::new(0.0, 10.0).unwrap();
        assert_eq!(bounds.apply_clamped(12.0).unwrap(), (1.0, true));
        assert_eq!(bounds.apply_clamped(-3.0).unwrap(), (0.0, true));
        assert_eq!(bounds.apply_clamped(5.0).unwrap(), (0.5, false));
    }

    #[test]
    fn bounds_fit_min_max() {
        let bounds = NormalizationBounds::fit(&[-2.0, 0.0, 3.0]).unwrap();
        assert_eq!((bounds.lo(), bounds.hi()), (-2.0, 3.0));
        assert!(NormalizationBounds::fit(&[]).is_err());
        assert!(NormalizationBounds::fit(&[1.0, f64::NAN]).is_err());
    }

    proptest! {
        // Round trip: decoding the code lands within half a digit step of the
        // input, plus one step of clamp slack at the very top of the range.
        #[test]
        fn round_trip_bound(value in 0.0f64..=1.0, base in 2u32..=36, precision in 1usize..=8) {
            let code = encode(value, base, precision).unwrap();
            let step = f64::from(base).powi(-(precision as i32));
            prop_assert!((decode(&code) - value).abs() <= step + 1e-12);
        }

        #[test]
        fn encode_is_deterministic(value in 0.0f64..=1.0, base in 2u32..=36, precision in 1usize..=8) {
            prop_assert_eq!(
                encode(value, base, precision).unwrap(),
                encode(value, base, precision).unwrap()
            );
        }

        #[test]
        fn truncate_prefix_rule(digits in proptest::collection::vec(0u8..10, 1..=10), keep in 1usize..=10) {
            let code = DigitCode::new(10, digits.clone()).unwrap();
            prop_assume!(keep <= digits.len());
            let cut = truncate(&code, keep).unwrap();
            prop_assert_eq!(cut.digits(), &digits[..keep]);
            prop_assert_eq!(cut.base(), code.base());
        }
    }
}
