//! Scalar bound for the exact linear-algebra core and the concrete rational scalar.
//!
//! The matrix kernel in [`crate::linalg`] is generic over [`Scalar`]: any ordered field
//! represented by a num-traits numeric type works (`f32`/`f64` satisfy the bound, as does
//! the exact rational used throughout this crate). The geometric layers are deliberately
//! concrete over [`Rat`], because they depend on integer-lattice structure (gluing offsets
//! on torus targets, unimodularity, floors) that only makes sense exactly.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, Zero};

/// Field-like scalar usable by the generic matrix routines.
///
/// The bound is intentionally small: ring operations, signed comparison and display.
/// Division must be exact for exact scalars (true for rationals; floats satisfy the
/// bound approximately, which is fine for the generic code but not used by the
/// geometric layers).
pub trait Scalar:
    Num + Signed + Clone + PartialOrd + std::fmt::Debug + std::fmt::Display + 'static
{
}

impl<T> Scalar for T where
    T: Num + Signed + Clone + PartialOrd + std::fmt::Debug + std::fmt::Display + 'static
{
}

/// The concrete scalar of the whole system: arbitrary-precision rationals.
pub type Rat = BigRational;

/// Shorthand for an integer-valued [`Rat`].
pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Shorthand for the rational `p/q`. Panics when `q == 0`.
pub fn rat(p: i64, q: i64) -> Rat {
    assert!(q != 0, "rational with zero denominator");
    Rat::new(BigInt::from(p), BigInt::from(q))
}

/// Parses a rational written as `p/q` or as a plain integer `n`.
pub fn parse_rat(text: &str) -> Option<Rat> {
    let t = text.trim();
    if t.is_empty() {
        return None;
    }
    match t.split_once('/') {
        Some((num, den)) => {
            let n: BigInt = num.trim().parse().ok()?;
            let d: BigInt = den.trim().parse().ok()?;
            if d.is_zero() {
                None
            } else {
                Some(Rat::new(n, d))
            }
        }
        None => {
            let n: BigInt = t.parse().ok()?;
            Some(Rat::from_integer(n))
        }
    }
}

/// Prints a rational in lowest terms, omitting the denominator when it is one.
pub fn fmt_rat(x: &Rat) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Floor of a rational as a `BigInt`.
pub fn rat_floor(x: &Rat) -> BigInt {
    x.floor().to_integer()
}

/// True when the rational is an integer.
pub fn is_integral(x: &Rat) -> bool {
    x.denom().is_one()
}

/// The fractional part `x - floor(x)`, in `[0, 1)`.
pub fn frac_part(x: &Rat) -> Rat {
    x - Rat::from_integer(rat_floor(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_print_round_trip() {
        for s in ["3", "-4", "0", "7/2", "-9/4", "10/5"] {
            let r = parse_rat(s).unwrap();
            let printed = fmt_rat(&r);
            assert_eq!(parse_rat(&printed).unwrap(), r);
        }
        assert_eq!(fmt_rat(&rat(10, 5)), "2");
        assert_eq!(fmt_rat(&rat(-3, 6)), "-1/2");
        assert!(parse_rat("1/0").is_none());
        assert!(parse_rat("x").is_none());
    }

    #[test]
    fn floor_and_frac() {
        assert_eq!(rat_floor(&rat(7, 2)), BigInt::from(3));
        assert_eq!(rat_floor(&rat(-7, 2)), BigInt::from(-4));
        assert_eq!(frac_part(&rat(-7, 2)), rat(1, 2));
        assert!(is_integral(&rat(8, 4)));
        assert!(!is_integral(&rat(8, 3)));
    }
}
