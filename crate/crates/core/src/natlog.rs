//! Outward-rounded rational enclosures of the natural logarithm.
//!
//! `ln x` is the only irrational quantity the artifact ever compares against,
//! and every comparison goes through an enclosure `(lo, hi)` with
//! `lo < ln x < hi` and `hi - lo < 2^-bits`, computed in exact rational
//! arithmetic. Callers double `bits` and retry when an enclosure is too wide
//! to decide a comparison; since the compared values are rational and `ln x`
//! is irrational for integer `x >= 2`, the loop always terminates.
//!
//! Method: argument reduction `ln x = m ln 2 + ln(x / 2^m)` with
//! `x / 2^m` in `[1, 2)`, then the series
//! `ln r = 2 atanh(z) = 2 sum_{j>=0} z^(2j+1) / (2j+1)` at
//! `z = (r-1)/(r+1) <= 1/3`, whose tail after `n` terms is below
//! `z^(2n+1) / ((2n+1)(1 - z^2))`.

use num_bigint::BigInt;

use crate::rat::Rat;

/// Default enclosure width (`2^-64`) for packing-weight comparisons.
pub const DEFAULT_CENTRAL_BITS: u32 = 64;
/// Default enclosure width for family sizing (128-bit mantissa equivalent).
pub const DEFAULT_SIZING_BITS: u32 = 128;
/// Precision-doubling safety stop.
pub const MAX_BITS: u32 = 1 << 16;

/// Enclosure of `atanh(z)` for `0 < z < 1`: returns `(lo, hi)` with
/// `lo < atanh(z) < hi` and `hi - lo < 2^-err_bits`.
fn atanh_enclosure(z: &Rat, err_bits: u32) -> (Rat, Rat) {
    debug_assert!(z.is_positive() && *z < Rat::one());
    let threshold = Rat::pow2_inv(err_bits);
    let z2 = z * z;
    let one_minus_z2 = Rat::one() - &z2;
    let mut power = z.clone(); // z^(2j+1)
    let mut sum = Rat::zero();
    let mut j: u64 = 0;
    loop {
        let odd = Rat::from_bigint(BigInt::from(2 * j + 1));
        let tail = &power / &(&odd * &one_minus_z2);
        if tail < threshold {
            let hi = &sum + &tail;
            return (sum, hi);
        }
        sum = sum + &power / &odd;
        power = power * &z2;
        j += 1;
    }
}

/// Enclosure of `ln 2` with width below `2^-err_bits`.
fn ln2_enclosure(err_bits: u32) -> (Rat, Rat) {
    let (lo, hi) = atanh_enclosure(&Rat::ratio(1, 3), err_bits + 1);
    (Rat::from_int(2) * lo, Rat::from_int(2) * hi)
}

/// Enclosure of `ln x` for integer `x >= 2`: `lo < ln x < hi`,
/// `hi - lo < 2^-bits`.
pub fn ln_enclosure(x: u64, bits: u32) -> (Rat, Rat) {
    assert!(x >= 2, "ln enclosure requires x >= 2");
    let m = 63 - x.leading_zeros() as u64; // floor(log2 x) >= 1
    let pow2m = 1u128 << m;
    let xi = x as u128;

    // m * ln2 contributes at most a 2^6 factor to the ln2 width
    let (l2lo, l2hi) = ln2_enclosure(bits + 8);
    let m_rat = Rat::from_int(m as i64);
    let mut lo = &m_rat * &l2lo;
    let mut hi = &m_rat * &l2hi;

    if xi != pow2m {
        let z = Rat::new(BigInt::from(xi - pow2m), BigInt::from(xi + pow2m)).unwrap();
        let (alo, ahi) = atanh_enclosure(&z, bits + 3);
        lo = lo + Rat::from_int(2) * alo;
        hi = hi + Rat::from_int(2) * ahi;
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn width(lo: &Rat, hi: &Rat) -> Rat {
        hi - lo
    }

    #[test]
    fn enclosures_are_tight_and_ordered() {
        for &x in &[2u64, 3, 4, 8, 100, 1000, 2000, 65537] {
            for &bits in &[32u32, 64, 128] {
                let (lo, hi) = ln_enclosure(x, bits);
                assert!(lo < hi);
                assert!(lo.is_positive());
                assert!(width(&lo, &hi) < Rat::pow2_inv(bits), "x={x} bits={bits}");
            }
        }
    }

    #[test]
    fn agrees_with_float_ln() {
        for &x in &[2u64, 3, 7, 10, 100, 1000, 12345] {
            let (lo, hi) = ln_enclosure(x, 80);
            let f = (x as f64).ln();
            assert!(lo.to_f64() <= f + 1e-12, "x={x}");
            assert!(hi.to_f64() >= f - 1e-12, "x={x}");
        }
    }

    #[test]
    fn ln2_reference_digits() {
        // ln 2 = 0.69314718055994530941723212145818...
        let (lo, hi) = ln_enclosure(2, 96);
        let below: Rat = "693147180559945309417232121458/1000000000000000000000000000000"
            .parse()
            .unwrap();
        let above: Rat = "693147180559945309417232121459/1000000000000000000000000000000"
            .parse()
            .unwrap();
        assert!(lo < above && below < hi);
        assert!(lo > below && hi < above);
    }

    #[test]
    fn additivity_cross_check() {
        // ln 12 = 2 ln 2 + ln 3: independent enclosures must intersect
        let (lo12, hi12) = ln_enclosure(12, 100);
        let (lo2, hi2) = ln_enclosure(2, 100);
        let (lo3, hi3) = ln_enclosure(3, 100);
        let sum_lo = Rat::from_int(2) * lo2 + lo3;
        let sum_hi = Rat::from_int(2) * hi2 + hi3;
        assert!(lo12 < sum_hi && sum_lo < hi12);
    }

    #[test]
    fn monotone_in_x() {
        let mut prev = ln_enclosure(2, 64);
        for x in 3..40u64 {
            let cur = ln_enclosure(x, 64);
            assert!(prev.1 < cur.0, "ln({}) must exceed ln({})", x, x - 1);
            prev = cur;
        }
    }
}
