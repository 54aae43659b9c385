//! Exact rational scalar.
//!
//! `Rat` wraps an arbitrary-precision rational kept in canonical form
//! (reduced, positive denominator). It is the only numeric type used on any
//! correctness path; floating point appears solely in display helpers.
//!
//! The wire format is the exact string `p/q` with `q > 0` and `gcd(p,q) = 1`
//! (`0/1` for zero). [`std::fmt::Display`] and the serde impls both use it.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

/// Arbitrary-precision rational in canonical form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rat(BigRational);

impl Rat {
    /// Builds `num/den`, reducing to canonical form. Fails on `den == 0`.
    pub fn new(num: BigInt, den: BigInt) -> Result<Rat> {
        if den.is_zero() {
            return Err(Error::InvalidArgument("rational with zero denominator".into()));
        }
        Ok(Rat(BigRational::new(num, den)))
    }

    /// Convenience constructor from machine integers. Panics on `q == 0`.
    pub fn ratio(p: i64, q: i64) -> Rat {
        assert!(q != 0, "zero denominator");
        Rat(BigRational::new(BigInt::from(p), BigInt::from(q)))
    }

    pub fn from_int(n: i64) -> Rat {
        Rat(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn from_bigint(n: BigInt) -> Rat {
        Rat(BigRational::from_integer(n))
    }

    pub fn from_biguint(n: &BigUint) -> Rat {
        Rat(BigRational::from_integer(BigInt::from(n.clone())))
    }

    pub fn zero() -> Rat {
        Rat(BigRational::zero())
    }

    pub fn one() -> Rat {
        Rat(BigRational::one())
    }

    /// `1 / 2^bits`.
    pub fn pow2_inv(bits: u32) -> Rat {
        Rat(BigRational::new(BigInt::one(), BigInt::one() << bits))
    }

    pub fn num(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn den(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn abs(&self) -> Rat {
        Rat(self.0.abs())
    }

    /// Exact integer power with non-negative exponent.
    pub fn pow(&self, exp: u32) -> Rat {
        Rat(BigRational::new(self.num().pow(exp), self.den().pow(exp)))
    }

    pub fn recip(&self) -> Result<Rat> {
        if self.is_zero() {
            return Err(Error::InvalidArgument("reciprocal of zero".into()));
        }
        Ok(Rat(self.0.recip()))
    }

    pub fn floor_int(&self) -> BigInt {
        self.0.floor().to_integer()
    }

    pub fn ceil_int(&self) -> BigInt {
        self.0.ceil().to_integer()
    }

    /// Lossy conversion for display and plotting only.
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Exact decimal rendering to `sig` significant digits, round half up.
    /// Display only; never feeds back into arithmetic.
    pub fn decimal(&self, sig: usize) -> String {
        assert!(sig >= 1);
        if self.is_zero() {
            return "0".to_string();
        }
        let neg = self.is_negative();
        let n = self.num().magnitude().clone();
        let d = self.den().magnitude().clone();

        // e = unique integer with |value| in [10^(e-1), 10^e)
        let ten = BigUint::from(10u32);
        let mut e: i64;
        if n >= d {
            e = (&n / &d).to_string().len() as i64;
        } else {
            let mut scaled = &n * &ten;
            let mut z: i64 = 1;
            while scaled < d {
                scaled *= &ten;
                z += 1;
            }
            e = 1 - z;
        }

        // digits = round(|value| * 10^(sig - e)), half up
        let shift = sig as i64 - e;
        let (scaled_num, scaled_den) = if shift >= 0 {
            (n * ten.pow(shift as u32), d)
        } else {
            (n, d * ten.pow((-shift) as u32))
        };
        let (mut q, r) = num_integer::Integer::div_rem(&scaled_num, &scaled_den);
        if &r * 2u32 >= scaled_den {
            q += 1u32;
        }
        let mut digits = q.to_string();
        if digits.len() > sig {
            // rounding carried into a new leading digit (e.g. 9.99 -> 10.0)
            e += 1;
            digits.truncate(sig);
        }

        let body = if e >= sig as i64 {
            let mut s = digits;
            s.push_str(&"0".repeat(e as usize - sig));
            s
        } else if e >= 1 {
            format!("{}.{}", &digits[..e as usize], &digits[e as usize..])
        } else {
            format!("0.{}{}", "0".repeat((-e) as usize), digits)
        };
        if neg {
            format!("-{body}")
        } else {
            body
        }
    }

}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num(), self.den())
    }
}

impl FromStr for Rat {
    type Err = Error;

    /// Parses `p/q` (canonical form is re-established) or a bare integer `p`.
    fn from_str(s: &str) -> Result<Rat> {
        let s = s.trim();
        let (p, q) = match s.split_once('/') {
            Some((p, q)) => (p, q),
            None => (s, "1"),
        };
        let num =
            BigInt::from_str(p.trim()).map_err(|e| Error::Parse(format!("bad numerator {p:?}: {e}")))?;
        let den =
            BigInt::from_str(q.trim()).map_err(|e| Error::Parse(format!("bad denominator {q:?}: {e}")))?;
        Rat::new(num, den)
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for Rat {
            type Output = Rat;
            fn $method(self, rhs: Rat) -> Rat {
                Rat((self.0).$method(rhs.0))
            }
        }
        impl<'a> $trait<&'a Rat> for &'a Rat {
            type Output = Rat;
            fn $method(self, rhs: &'a Rat) -> Rat {
                Rat((&self.0).$method(&rhs.0))
            }
        }
        impl<'a> $trait<&'a Rat> for Rat {
            type Output = Rat;
            fn $method(self, rhs: &'a Rat) -> Rat {
                Rat((self.0).$method(&rhs.0))
            }
        }
        impl<'a> $trait<Rat> for &'a Rat {
            type Output = Rat;
            fn $method(self, rhs: Rat) -> Rat {
                Rat((&self.0).$method(rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl Neg for Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        Rat(-self.0)
    }
}

impl Neg for &Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        Rat(-&self.0)
    }
}

impl Serialize for Rat {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Rat, D::Error> {
        let s = String::deserialize(deserializer)?;
        Rat::from_str(&s).map_err(serde::de::Error::custom)
    }
}
