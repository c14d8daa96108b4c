//! Exact rational helpers and their lossless JSON encoding.
//!
//! Rationals travel as `{"num": "...", "den": "..."}` and big integers as
//! decimal strings so that reports survive any JSON reader.

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Serialized form of an exact rational.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RationalJson {
    pub num: String,
    pub den: String,
}

impl From<&BigRational> for RationalJson {
    fn from(r: &BigRational) -> Self {
        RationalJson {
            num: r.numer().to_string(),
            den: r.denom().to_string(),
        }
    }
}

impl RationalJson {
    pub fn to_rational(&self) -> Option<BigRational> {
        let num: BigInt = self.num.parse().ok()?;
        let den: BigInt = self.den.parse().ok()?;
        if den.is_zero() {
            return None;
        }
        Some(BigRational::new(num, den))
    }
}

pub fn ser_rational<S: Serializer>(r: &BigRational, s: S) -> Result<S::Ok, S::Error> {
    RationalJson::from(r).serialize(s)
}

pub fn de_rational<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
    let raw = RationalJson::deserialize(d)?;
    raw.to_rational()
        .ok_or_else(|| serde::de::Error::custom("malformed rational"))
}

pub fn ser_biguint<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

pub fn de_biguint<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
    let raw = String::deserialize(d)?;
    raw.parse()
        .map_err(|_| serde::de::Error::custom("malformed decimal integer"))
}

pub fn ser_biguint_vec<S: Serializer>(v: &[BigUint], s: S) -> Result<S::Ok, S::Error> {
    let strs: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    strs.serialize(s)
}

pub fn de_biguint_vec<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigUint>, D::Error> {
    let raw = Vec::<String>::deserialize(d)?;
    raw.iter()
        .map(|x| {
            x.parse()
                .map_err(|_| serde::de::Error::custom("malformed decimal integer"))
        })
        .collect()
}

/// `num / den` as an exact rational.
pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn from_uint(v: &BigUint) -> BigRational {
    BigRational::from_integer(BigInt::from_biguint(Sign::Plus, v.clone()))
}

pub fn from_u64(v: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// Integer power of a rational (non-negative exponent).
pub fn pow(r: &BigRational, e: u32) -> BigRational {
    BigRational::new_raw(r.numer().pow(e), r.denom().pow(e))
}

/// `base^exp` as a big integer.
pub fn upow(base: u64, exp: u64) -> BigUint {
    let e = u32::try_from(exp).expect("exponent fits in u32");
    BigUint::from(base).pow(e)
}

/// Natural logarithm of a positive big integer, accurate to f64 precision.
pub fn ln_biguint(v: &BigUint) -> f64 {
    let bits = v.bits();
    if bits <= 1000 {
        return v.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top = (v >> shift).to_f64().unwrap_or(0.0);
    top.ln() + (shift as f64) * std::f64::consts::LN_2
}

/// Natural logarithm of a positive rational; `None` for non-positive input.
pub fn ln_rational(r: &BigRational) -> Option<f64> {
    if !r.is_positive() {
        return None;
    }
    let num = r.numer().magnitude();
    let den = r.denom().magnitude();
    Some(ln_biguint(num) - ln_biguint(den))
}

/// Base-10 logarithm of a rational, `-inf` for zero and NaN for negatives.
pub fn log10_rational(r: &BigRational) -> f64 {
    if r.is_zero() {
        return f64::NEG_INFINITY;
    }
    match ln_rational(r) {
        Some(v) => v / std::f64::consts::LN_10,
        None => f64::NAN,
    }
}

/// Product of an iterator of rationals.
pub fn product<'a, I: IntoIterator<Item = &'a BigRational>>(it: I) -> BigRational {
    it.into_iter()
        .fold(BigRational::one(), |acc, x| acc * x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_roundtrip_keeps_sign_and_size() {
        let r = BigRational::new(BigInt::from(-3), BigInt::from(7)) * from_uint(&upow(10, 40));
        let j = RationalJson::from(&r);
        assert_eq!(j.to_rational().unwrap(), r);
        assert!(j.num.starts_with('-'));
    }

    #[test]
    fn logs_of_huge_values() {
        let v = upow(3, 5000);
        let expected = 5000.0 * 3f64.ln();
        assert!((ln_biguint(&v) - expected).abs() < 1e-9 * expected);
        assert!((log10_rational(&ratio(1, 1000)) + 3.0).abs() < 1e-12);
    }
}
