//! Exact rationals and their JSON encoding.
//!
//! Rationals travel through JSON either as plain integers or as `"p/q"`
//! strings in lowest terms with a positive denominator.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Arbitrary precision rational, always kept reduced with a positive denominator.
pub type Rat = BigRational;

pub fn int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn frac(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn from_i128(n: i128) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn frac_i128(n: i128, d: i128) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn to_f64(r: &Rat) -> f64 {
    // Ratio::to_f64 handles huge numerators/denominators without overflow.
    r.to_f64().unwrap_or_else(|| {
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Formats as `p` or `p/q`.
pub fn format(r: &Rat) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `p` or `p/q`; the fraction must already be in lowest terms.
pub fn parse(s: &str) -> Result<Rat> {
    let s = s.trim();
    let bad = || Error::Parse(format!("malformed rational {s:?}"));
    match s.split_once('/') {
        None => s.parse::<BigInt>().map(Rat::from_integer).map_err(|_| bad()),
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().map_err(|_| bad())?;
            let q: BigInt = q.trim().parse().map_err(|_| bad())?;
            if !q.is_positive() {
                return Err(Error::Parse(format!("denominator of {s:?} must be positive")));
            }
            if !p.gcd(&q).is_one() {
                return Err(Error::Parse(format!("rational {s:?} is not in lowest terms")));
            }
            Ok(Rat::new_raw(p, q))
        }
    }
}

/// Converts a rational that is known to be an integer fitting in i128.
pub fn to_i128(r: &Rat) -> Option<i128> {
    if r.is_integer() {
        r.numer().to_i128()
    } else {
        None
    }
}

/// Largest integer k >= 0 with k^2 <= r (r >= 0).
pub fn isqrt_floor(r: &Rat) -> BigInt {
    if !r.is_positive() {
        return BigInt::zero();
    }
    let fl = r.floor().to_integer();
    let mut k = fl.sqrt();
    // k^2 <= floor(r) <= r; k+1 squared exceeds floor(r) hence r as well.
    while Rat::from_integer((&k + 1u32) * (&k + 1u32)) <= *r {
        k += 1u32;
    }
    k
}

/// Serde wrapper encoding a rational as an integer or a `"p/q"` string.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JsonRat(pub Rat);

impl From<Rat> for JsonRat {
    fn from(r: Rat) -> Self {
        JsonRat(r)
    }
}

impl From<&Rat> for JsonRat {
    fn from(r: &Rat) -> Self {
        JsonRat(r.clone())
    }
}

impl fmt::Display for JsonRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format(&self.0))
    }
}

impl Serialize for JsonRat {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_integer() {
            if let Some(v) = self.0.numer().to_i64() {
                return s.serialize_i64(v);
            }
        }
        s.serialize_str(&format(&self.0))
    }
}

impl<'de> Deserialize<'de> for JsonRat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = JsonRat;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an integer or a \"p/q\" string")
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<JsonRat, E> {
                Ok(JsonRat(int(v)))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<JsonRat, E> {
                Ok(JsonRat(Rat::from_integer(BigInt::from(v))))
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<JsonRat, E> {
                Err(E::custom(format!("floating value {v} is not an exact rational")))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<JsonRat, E> {
                parse(v).map(JsonRat).map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

pub fn json_vec(v: &[Rat]) -> Vec<JsonRat> {
    v.iter().map(JsonRat::from).collect()
}

pub fn is_zero(r: &Rat) -> bool {
    r.is_zero()
}

pub fn one() -> Rat {
    Rat::one()
}

pub fn zero() -> Rat {
    Rat::zero()
}

/// `#[serde(with = ...)]` adapters for rational fields.
pub mod serde_rat {
    use super::{JsonRat, Rat};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(r: &Rat, s: S) -> Result<S::Ok, S::Error> {
        JsonRat(r.clone()).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rat, D::Error> {
        Ok(JsonRat::deserialize(d)?.0)
    }
}

pub mod serde_rat_opt {
    use super::{JsonRat, Rat};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(r: &Option<Rat>, s: S) -> Result<S::Ok, S::Error> {
        r.as_ref().map(JsonRat::from).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rat>, D::Error> {
        Ok(Option::<JsonRat>::deserialize(d)?.map(|r| r.0))
    }
}

pub mod serde_rat_vec {
    use super::{json_vec, JsonRat, Rat};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Rat], s: S) -> Result<S::Ok, S::Error> {
        json_vec(v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rat>, D::Error> {
        Ok(Vec::<JsonRat>::deserialize(d)?.into_iter().map(|r| r.0).collect())
    }
}

pub mod serde_rat_vec_opt {
    use super::{json_vec, JsonRat, Rat};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Vec<Rat>>, s: S) -> Result<S::Ok, S::Error> {
        v.as_ref().map(|v| json_vec(v)).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<Rat>>, D::Error> {
        Ok(Option::<Vec<JsonRat>>::deserialize(d)?.map(|v| v.into_iter().map(|r| r.0).collect()))
    }
}

pub mod serde_rat_vec_vec {
    use super::{json_vec, JsonRat, Rat};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Vec<Rat>], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|r| json_vec(r)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<Rat>>, D::Error> {
        Ok(Vec::<Vec<JsonRat>>::deserialize(d)?.into_iter().map(|v| v.into_iter().map(|r| r.0).collect()).collect())
    }
}
