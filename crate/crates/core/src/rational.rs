//! Exact rational lengths.
//!
//! All metric quantities are `Ratio<i64>` so that lemma verifications and
//! travelling-salesman comparisons are exact. Floating point only appears at
//! the statistics boundary (see [`crate::estimators`]); when a float
//! comparison is unavoidable the documented tolerance is `1e-9`.

use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Exact rational scalar used for generator lengths, distances and tour values.
pub type Rat = Ratio<i64>;

/// Comparison tolerance for the few places where rationals meet floats.
pub const FLOAT_TOLERANCE: f64 = 1e-9;

/// Shorthand constructor; panics on a zero denominator.
pub fn rat(numer: i64, denom: i64) -> Rat {
    Ratio::new(numer, denom)
}

pub fn rat_to_f64(r: Rat) -> f64 {
    r.to_f64().expect("i64 ratio is always representable as f64")
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseRatError {
    #[error("empty rational literal")]
    Empty,
    #[error("invalid rational literal `{0}`: expected `p`, `p/q` or a short decimal")]
    Invalid(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
}

/// Parses `p`, `p/q` or a plain decimal such as `1.5` into an exact rational.
pub fn parse_rat(s: &str) -> Result<Rat, ParseRatError> {
    let s = s.trim();
    if s.is_empty() {
        return Err(ParseRatError::Empty);
    }
    if let Some((num, den)) = s.split_once('/') {
        let n: i64 = num
            .trim()
            .parse()
            .map_err(|_| ParseRatError::Invalid(s.to_string()))?;
        let d: i64 = den
            .trim()
            .parse()
            .map_err(|_| ParseRatError::Invalid(s.to_string()))?;
        if d == 0 {
            return Err(ParseRatError::ZeroDenominator(s.to_string()));
        }
        return Ok(Ratio::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || frac.len() > 12 || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(ParseRatError::Invalid(s.to_string()));
        }
        let negative = int.trim_start().starts_with('-');
        let i: i64 = if int == "-" || int.is_empty() {
            0
        } else {
            int.parse().map_err(|_| ParseRatError::Invalid(s.to_string()))?
        };
        let scale = 10i64.pow(frac.len() as u32);
        let f: i64 = frac.parse().map_err(|_| ParseRatError::Invalid(s.to_string()))?;
        let numer = i.abs() * scale + f;
        let sign = if negative { -1 } else { 1 };
        return Ok(Ratio::new(sign * numer, scale));
    }
    s.parse::<i64>()
        .map(Ratio::from_integer)
        .map_err(|_| ParseRatError::Invalid(s.to_string()))
}

/// Canonical `p/q` form used in config files and logs.
pub fn rat_to_string(r: Rat) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn is_nonnegative(r: Rat) -> bool {
    !r.is_negative()
}

pub fn rat_zero() -> Rat {
    Rat::zero()
}

/// Serde adapter keeping rationals exact (`"p/q"` strings) in documents.
pub mod rat_serde {
    use super::*;
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rat, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&rat_to_string(*r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Rat, D::Error> {
        let s = String::deserialize(de)?;
        parse_rat(&s).map_err(D::Error::custom)
    }
}
