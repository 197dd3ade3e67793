//! Exact rational scalars.
//!
//! `num_rational::BigRational` already keeps numerator and denominator
//! coprime with a positive denominator, so it is used directly. This
//! module adds the string codec used by every JSON artifact.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type ExactScalar = BigRational;

pub fn int(n: i64) -> ExactScalar {
    BigRational::from_integer(BigInt::from(n))
}

pub fn frac(n: i64, d: i64) -> ExactScalar {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn from_bigint(n: BigInt) -> ExactScalar {
    BigRational::from_integer(n)
}

/// Renders `p/q`, or just `p` when the denominator is one.
pub fn to_string(q: &ExactScalar) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn parse(s: &str) -> Result<ExactScalar> {
    let s = s.trim();
    let bad = || Error::Usage(format!("not an exact rational: {s:?}"));
    match s.split_once('/') {
        None => s.parse::<BigInt>().map(from_bigint).map_err(|_| bad()),
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(BigRational::new(n, d))
        }
    }
}

/// Lowest common multiple of the denominators.
pub fn common_denominator<'a>(it: impl IntoIterator<Item = &'a ExactScalar>) -> BigInt {
    it.into_iter().fold(BigInt::one(), |acc, q| num_integer::Integer::lcm(&acc, q.denom()))
}

pub fn to_f64(q: &ExactScalar) -> f64 {
    use num_traits::ToPrimitive;
    if let Some(v) = q.to_f64().filter(|v| v.is_finite() && (q.is_zero() || *v != 0.0)) {
        return v;
    }
    // scale so the integer quotient carries about 64 significant bits
    let n = q.numer().abs();
    let d = q.denom().clone();
    let shift = n.bits() as i64 - d.bits() as i64 - 64;
    let quotient = if shift >= 0 { n / (d << shift as usize) } else { (n << (-shift) as usize) / d };
    let v = quotient.to_f64().unwrap_or(f64::INFINITY) * 2f64.powi(shift as i32);
    if q.is_negative() {
        -v
    } else {
        v
    }
}

pub(crate) mod serde_vec {
    use super::*;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[ExactScalar], s: S) -> std::result::Result<S::Ok, S::Error> {
        v.iter().map(to_string).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<ExactScalar>, D::Error> {
        let raw = Vec::<String>::deserialize(d)?;
        raw.iter().map(|s| parse(s).map_err(serde::de::Error::custom)).collect()
    }
}

pub(crate) mod serde_one {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &ExactScalar, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&to_string(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<ExactScalar, D::Error> {
        let raw = String::deserialize(d)?;
        parse(&raw).map_err(serde::de::Error::custom)
    }
}
