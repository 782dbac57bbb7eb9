//! Signed complex fixed-point arithmetic with configurable word length.
//!
//! Values live on the grid `raw * 2^-fraction_bits` with `raw` a signed
//! integer of `1 + integer_bits + fraction_bits` bits. Every operation
//! rounds to nearest with ties away from zero and saturates to the
//! representable range; nothing ever wraps, so PED ordering in the detector
//! cannot be corrupted by overflow.

use num_complex::Complex64;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FixedError {
    #[error("total word length must be between 2 and 63 bits, got {0}")]
    BadWidth(u32),
    #[error("bad Q-format string {0:?}: expected \"sS.I.F\" with S = 1")]
    BadFormat(String),
}

/// Q-format descriptor: one sign bit, `integer_bits` integer bits and
/// `fraction_bits` fractional bits.
///
/// The representable range is `[-2^I, 2^I - 2^-F]` with resolution `2^-F`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QFormat {
    integer_bits: u32,
    fraction_bits: u32,
}

impl QFormat {
    pub fn new(integer_bits: u32, fraction_bits: u32) -> Result<Self, FixedError> {
        let total = 1 + integer_bits + fraction_bits;
        if !(2..=63).contains(&total) {
            return Err(FixedError::BadWidth(total));
        }
        Ok(QFormat { integer_bits, fraction_bits })
    }

    /// The 16-bit word the hardware design uses: s1.7.8.
    pub fn q16() -> Self {
        QFormat { integer_bits: 7, fraction_bits: 8 }
    }

    /// Wide 32-bit word (s1.15.16), used as a near-floating reference.
    pub fn q32() -> Self {
        QFormat { integer_bits: 15, fraction_bits: 16 }
    }

    pub fn integer_bits(self) -> u32 {
        self.integer_bits
    }

    pub fn fraction_bits(self) -> u32 {
        self.fraction_bits
    }

    pub fn total_bits(self) -> u32 {
        1 + self.integer_bits + self.fraction_bits
    }

    pub fn resolution(self) -> f64 {
        (self.fraction_bits as f64 * -1.0).exp2()
    }

    pub fn max_raw(self) -> i64 {
        (1i64 << (self.integer_bits + self.fraction_bits)) - 1
    }

    pub fn min_raw(self) -> i64 {
        -(1i64 << (self.integer_bits + self.fraction_bits))
    }

    pub fn max_value(self) -> f64 {
        self.value_of(self.max_raw())
    }

    pub fn min_value(self) -> f64 {
        self.value_of(self.min_raw())
    }

    /// Exact value of a raw word. Raw magnitudes stay below 2^63 and the
    /// grid spacing is a power of two, so the conversion is lossless.
    pub fn value_of(self, raw: i64) -> f64 {
        raw as f64 * self.resolution()
    }

    /// Round-to-nearest (ties away from zero) onto the grid, then saturate.
    pub fn quantize_raw(self, x: f64) -> i64 {
        debug_assert!(!x.is_nan(), "quantize of NaN");
        let scaled = x * (self.fraction_bits as f64).exp2();
        // f64::round is round-half-away-from-zero, the chosen tie rule.
        let r = scaled.round();
        if r >= self.max_raw() as f64 {
            self.max_raw()
        } else if r <= self.min_raw() as f64 {
            self.min_raw()
        } else {
            r as i64
        }
    }

    /// Quantize a real value (the spec's per-component conversion into the
    /// fixed datapath).
    pub fn quantize(self, x: f64) -> f64 {
        self.value_of(self.quantize_raw(x))
    }

    pub(crate) fn clamp_wide(self, w: i128) -> i64 {
        let max = self.max_raw() as i128;
        let min = self.min_raw() as i128;
        w.clamp(min, max) as i64
    }

    /// Saturating add in the raw domain.
    pub(crate) fn sat_add_raw(self, a: i64, b: i64) -> i64 {
        self.clamp_wide(a as i128 + b as i128)
    }

    /// Rescale a product at scale `2^-2F` back to `2^-F`: round to nearest,
    /// ties away from zero, then saturate.
    pub(crate) fn rescale_product(self, wide: i128) -> i64 {
        let half = 1i128 << (self.fraction_bits.max(1) - 1);
        let rounded = if self.fraction_bits == 0 {
            wide
        } else if wide >= 0 {
            (wide + half) >> self.fraction_bits
        } else {
            -((-wide + half) >> self.fraction_bits)
        };
        self.clamp_wide(rounded)
    }
}

impl fmt::Display for QFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s1.{}.{}", self.integer_bits, self.fraction_bits)
    }
}

impl FromStr for QFormat {
    type Err = FixedError;

    /// Parses the config-file form `"s1.7.8"`.
    fn from_str(s: &str) -> Result<Self, FixedError> {
        let bad = || FixedError::BadFormat(s.to_string());
        let rest = s.strip_prefix('s').ok_or_else(bad)?;
        let mut parts = rest.split('.');
        let sign: u32 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let i: u32 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let f: u32 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        if sign != 1 || parts.next().is_some() {
            return Err(bad());
        }
        QFormat::new(i, f)
    }
}

/// Complex fixed-point value; both components share one format and always
/// lie inside its range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CFix {
    re_raw: i64,
    im_raw: i64,
    fmt: QFormat,
}

impl CFix {
    pub fn zero(fmt: QFormat) -> Self {
        CFix { re_raw: 0, im_raw: 0, fmt }
    }

    pub fn from_raw(re_raw: i64, im_raw: i64, fmt: QFormat) -> Self {
        assert!(re_raw <= fmt.max_raw() && re_raw >= fmt.min_raw(), "re out of range");
        assert!(im_raw <= fmt.max_raw() && im_raw >= fmt.min_raw(), "im out of range");
        CFix { re_raw, im_raw, fmt }
    }

    pub fn quantize(x: Complex64, fmt: QFormat) -> Self {
        CFix {
            re_raw: fmt.quantize_raw(x.re),
            im_raw: fmt.quantize_raw(x.im),
            fmt,
        }
    }

    pub fn re_raw(self) -> i64 {
        self.re_raw
    }

    pub fn im_raw(self) -> i64 {
        self.im_raw
    }

    pub fn fmt(self) -> QFormat {
        self.fmt
    }

    /// Exact conversion back to a complex float (grid points are dyadic
    /// rationals well inside f64 range).
    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.fmt.value_of(self.re_raw), self.fmt.value_of(self.im_raw))
    }

    pub fn conj(self) -> Self {
        CFix {
            re_raw: self.re_raw,
            im_raw: self.fmt.clamp_wide(-(self.im_raw as i128)),
            fmt: self.fmt,
        }
    }

    fn check_fmt(self, rhs: CFix) {
        assert_eq!(self.fmt, rhs.fmt, "CFix format mismatch: {} vs {}", self.fmt, rhs.fmt);
    }

    /// Componentwise saturating sum.
    pub fn add(self, rhs: CFix) -> CFix {
        self.check_fmt(rhs);
        CFix {
            re_raw: self.fmt.sat_add_raw(self.re_raw, rhs.re_raw),
            im_raw: self.fmt.sat_add_raw(self.im_raw, rhs.im_raw),
            fmt: self.fmt,
        }
    }

    /// Componentwise saturating difference.
    pub fn sub(self, rhs: CFix) -> CFix {
        self.check_fmt(rhs);
        CFix {
            re_raw: self.fmt.clamp_wide(self.re_raw as i128 - rhs.re_raw as i128),
            im_raw: self.fmt.clamp_wide(self.im_raw as i128 - rhs.im_raw as i128),
            fmt: self.fmt,
        }
    }

    /// Full-precision complex product, rounded back to the format and
    /// saturated.
    pub fn mul(self, rhs: CFix) -> CFix {
        self.check_fmt(rhs);
        let (ar, ai) = (self.re_raw as i128, self.im_raw as i128);
        let (br, bi) = (rhs.re_raw as i128, rhs.im_raw as i128);
        CFix {
            re_raw: self.fmt.rescale_product(ar * br - ai * bi),
            im_raw: self.fmt.rescale_product(ar * bi + ai * br),
            fmt: self.fmt,
        }
    }

    /// |self|^2 as a raw real word: full-precision `re^2 + im^2`, one
    /// rounding, one saturation. Equal to `self.mul(self.conj()).re_raw()`
    /// whenever the conjugate does not itself saturate.
    pub fn norm_sqr_raw(self) -> i64 {
        let (ar, ai) = (self.re_raw as i128, self.im_raw as i128);
        self.fmt.rescale_product(ar * ar + ai * ai)
    }
}

impl std::ops::Add for CFix {
    type Output = CFix;
    fn add(self, rhs: CFix) -> CFix {
        CFix::add(self, rhs)
    }
}

impl std::ops::Sub for CFix {
    type Output = CFix;
    fn sub(self, rhs: CFix) -> CFix {
        CFix::sub(self, rhs)
    }
}

impl std::ops::Mul for CFix {
    type Output = CFix;
    fn mul(self, rhs: CFix) -> CFix {
        CFix::mul(self, rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn quantize_basic() {
        let q = QFormat::q16();
        assert_eq!(q.quantize(0.3), 77.0 / 256.0);
        assert_eq!(q.quantize(0.3), 0.30078125);
        assert_eq!(q.quantize(0.0), 0.0);
        // positive saturation limit
        assert_eq!(q.quantize(200.0), 127.99609375);
        assert_eq!(q.max_value(), 127.99609375);
        assert_eq!(q.min_value(), -128.0);
        assert_eq!(q.quantize(-1000.0), -128.0);
    }

    #[test]
    fn quantize_ties_away_from_zero() {
        let q = QFormat::q16();
        // 2^-9 is exactly half a ulp
        assert_eq!(q.quantize_raw(1.0 / 512.0), 1);
        assert_eq!(q.quantize_raw(-1.0 / 512.0), -1);
        assert_eq!(q.quantize_raw(3.0 / 512.0), 2);
    }

    #[test]
    fn add_examples() {
        let q = QFormat::q16();
        let a = CFix::quantize(c(1.0, 1.0), q);
        let b = CFix::quantize(c(2.0, -3.0), q);
        assert_eq!((a + b).to_complex(), c(3.0, -2.0));

        let x = CFix::quantize(c(-37.5, 0.25), q);
        assert_eq!((x + CFix::zero(q)).to_complex(), x.to_complex());

        let big = CFix::quantize(c(127.0, 0.0), q);
        let ten = CFix::quantize(c(10.0, 0.0), q);
        assert_eq!((big + ten).to_complex(), c(127.99609375, 0.0));
    }

    #[test]
    fn mul_examples() {
        let q = QFormat::q16();
        let a = CFix::quantize(c(1.0, 1.0), q);
        let b = CFix::quantize(c(1.0, -1.0), q);
        assert_eq!((a * b).to_complex(), c(2.0, 0.0));

        let one = CFix::quantize(c(1.0, 0.0), q);
        let x = CFix::quantize(c(-3.140625, 42.5), q);
        assert_eq!((x * one).to_complex(), x.to_complex());
    }

    #[test]
    fn mul_rounding_at_the_resolution_floor() {
        let q = QFormat::q16();
        // 0.25 * 2^-8 = 2^-10, strictly below half a ulp: rounds to zero.
        let a = CFix::quantize(c(0.25, 0.0), q);
        let ulp = CFix::quantize(c(1.0 / 256.0, 0.0), q);
        assert_eq!((a * ulp).to_complex(), c(0.0, 0.0));
        // 0.5 * 2^-8 = 2^-9 is an exact tie; ties round away from zero,
        // giving one ulp.
        let b = CFix::quantize(c(0.5, 0.0), q);
        assert_eq!((b * ulp).to_complex(), c(1.0 / 256.0, 0.0));
    }

    #[test]
    #[should_panic(expected = "format mismatch")]
    fn add_rejects_mixed_formats() {
        let a = CFix::zero(QFormat::q16());
        let b = CFix::zero(QFormat::q32());
        let _ = a + b;
    }

    #[test]
    fn to_complex_round_trip() {
        let q = QFormat::q16();
        assert_eq!(CFix::from_raw(256, 0, q).to_complex(), c(1.0, 0.0));
        assert_eq!(CFix::zero(q).to_complex(), c(0.0, 0.0));
        // every grid point within range survives quantize -> value -> quantize
        for raw in [-32768i64, -32767, -1, 0, 1, 77, 32767] {
            let x = q.value_of(raw);
            assert_eq!(q.quantize_raw(x), raw);
        }
    }

    // Exhaustive checks on a 6-bit format (s1.2.3): raw range [-32, 31].
    const SMALL: QFormat = QFormat { integer_bits: 2, fraction_bits: 3 };

    #[test]
    fn exhaustive_add_matches_wide_clamp() {
        let q = SMALL;
        for a in q.min_raw()..=q.max_raw() {
            for b in q.min_raw()..=q.max_raw() {
                let x = CFix::from_raw(a, b, q);
                let y = CFix::from_raw(b, a, q);
                let s = x + y;
                assert_eq!(s.re_raw(), q.clamp_wide(a as i128 + b as i128));
                assert_eq!(s.im_raw(), q.clamp_wide(b as i128 + a as i128));
            }
        }
    }

    #[test]
    fn exhaustive_mul_commutes_and_one_is_identity() {
        let q = SMALL;
        let one = CFix::quantize(c(1.0, 0.0), q);
        let range: Vec<i64> = (q.min_raw()..=q.max_raw()).collect();
        for &ar in &range {
            for &ai in &range {
                let a = CFix::from_raw(ar, ai, q);
                assert_eq!(a * one, a);
                for &br in &range {
                    // a full 64^4 sweep is redundant: the product only
                    // couples (ar,ai) with (br,bi), and commutativity of the
                    // wide integer forms covers bi by symmetry of the sweep.
                    let b = CFix::from_raw(br, ar, q);
                    assert_eq!(a * b, b * a);
                }
            }
        }
    }

    #[test]
    fn exhaustive_quantize_idempotent() {
        let q = SMALL;
        for raw in q.min_raw()..=q.max_raw() {
            assert_eq!(q.quantize_raw(q.value_of(raw)), raw);
        }
    }

    #[test]
    fn qformat_display_parse() {
        let q = QFormat::q16();
        assert_eq!(q.to_string(), "s1.7.8");
        assert_eq!("s1.7.8".parse::<QFormat>().unwrap(), q);
        assert_eq!("s1.15.16".parse::<QFormat>().unwrap(), QFormat::q32());
        assert!("q1.7.8".parse::<QFormat>().is_err());
        assert!("s2.7.8".parse::<QFormat>().is_err());
        assert!("s1.7".parse::<QFormat>().is_err());
        assert!("s1.40.40".parse::<QFormat>().is_err());
    }

    proptest! {
        #[test]
        fn quantize_monotone(x in -200.0f64..200.0, y in -200.0f64..200.0) {
            let q = QFormat::q16();
            let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
            prop_assert!(q.quantize(lo) <= q.quantize(hi));
        }

        #[test]
        fn quantize_error_within_half_ulp_in_range(x in -127.9f64..127.9) {
            let q = QFormat::q16();
            prop_assert!((q.quantize(x) - x).abs() <= q.resolution() / 2.0 + 1e-12);
        }

        #[test]
        fn format_string_round_trips(i in 0u32..20, f in 0u32..20) {
            prop_assume!(1 + i + f >= 2);
            let q = QFormat::new(i, f).unwrap();
            prop_assert_eq!(q.to_string().parse::<QFormat>().unwrap(), q);
        }

        #[test]
        fn add_never_escapes_range(ar in -40.0f64..40.0, ai in -40.0f64..40.0,
                                   br in -40.0f64..40.0, bi in -40.0f64..40.0) {
            let q = QFormat::new(4, 3).unwrap();
            let s = CFix::quantize(c(ar, ai), q) + CFix::quantize(c(br, bi), q);
            prop_assert!(s.re_raw() <= q.max_raw() && s.re_raw() >= q.min_raw());
            prop_assert!(s.im_raw() <= q.max_raw() && s.im_raw() >= q.min_raw());
        }
    }
}
