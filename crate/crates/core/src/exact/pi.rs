//! Rational enclosures of pi, used to compare symbolic reals exactly.
//!
//! The enclosure is computed from Machin's identity
//! `pi = 16*atan(1/5) - 4*atan(1/239)` in integer fixed point. All floor
//! divisions only ever shrink a term, and each term's loss is below one
//! unit of the scale, so an explicit error budget can be carried along
//! and the returned interval is a mathematically sound enclosure.

use std::collections::BTreeMap;
use std::sync::Mutex;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use super::bigrat::BigRat;

/// Extra low-order bits so the accumulated floor error stays far below
/// the requested precision.
const GUARD_BITS: u32 = 32;

/// Precision ladder walked by interval comparisons, in bits.
pub const PRECISION_LADDER: [u32; 7] = [64, 128, 256, 512, 1024, 2048, 4096];

/// `atan(1/x) * scale` rounded down, together with a bound on the absolute
/// error in scale units. Requires `x >= 2`.
fn atan_inv_scaled(x: u64, scale: &BigInt) -> (BigInt, BigInt) {
    let xx = BigInt::from(x) * BigInt::from(x);
    // Nested floor division is exact: floor(floor(a/b)/c) == floor(a/(b*c)),
    // so `num` is always exactly floor(scale / x^(2k+1)).
    let mut num = scale / BigInt::from(x);
    let mut sum = BigInt::zero();
    let mut k: u64 = 0;
    let mut terms: u64 = 0;
    while !num.is_zero() {
        let term = &num / BigInt::from(2 * k + 1);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
        num /= &xx;
        k += 1;
        terms += 1;
    }
    // Each kept term loses less than 1 unit to the floor; the dropped
    // alternating tail is below the first omitted term, which is below 1.
    (sum, BigInt::from(terms + 1))
}

/// Returns rationals `(lo, hi)` with `lo < pi < hi` and
/// `hi - lo < 2^-(bits)`.
pub fn pi_enclosure(bits: u32) -> (BigRat, BigRat) {
    static CACHE: Mutex<BTreeMap<u32, (BigRat, BigRat)>> = Mutex::new(BTreeMap::new());
    if let Some(hit) = CACHE.lock().unwrap().get(&bits) {
        return hit.clone();
    }

    let scale = BigInt::from(1) << (bits + GUARD_BITS);
    let (a5, e5) = atan_inv_scaled(5, &scale);
    let (a239, e239) = atan_inv_scaled(239, &scale);
    let value = BigInt::from(16) * a5 - BigInt::from(4) * a239;
    let err = BigInt::from(16) * e5 + BigInt::from(4) * e239;
    debug_assert!(err.abs() < (BigInt::from(1) << GUARD_BITS));

    let lo = BigRat::new(&value - &err, scale.clone()).unwrap();
    let hi = BigRat::new(&value + &err, scale).unwrap();
    let result = (lo, hi);
    CACHE.lock().unwrap().insert(bits, result.clone());
    result
}

/// Enclosure of `pi^d` for `d >= 1`, at the given working precision.
pub fn pi_pow_enclosure(d: u32, bits: u32) -> (BigRat, BigRat) {
    let (lo, hi) = pi_enclosure(bits);
    (
        lo.pow(d as i32).expect("positive base"),
        hi.pow(d as i32).expect("positive base"),
    )
}
