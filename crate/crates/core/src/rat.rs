//! Rational helpers on top of [`num::BigRational`].

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rat = BigRational;

/// Upper bound on the decimal digits accepted for either side of a parsed rational.
const MAX_DIGITS: usize = 4096;

pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(v: i64) -> Rat {
    Rat::from_integer(BigInt::from(v))
}

/// Parses `"p/q"` or `"p"`.
pub fn parse_rat(s: &str) -> Result<Rat> {
    let s = s.trim();
    let (p, q) = match s.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (s, "1"),
    };
    let parse_int = |t: &str| -> Result<BigInt> {
        let digits = t.strip_prefix(['-', '+']).unwrap_or(t);
        if digits.is_empty() || digits.len() > MAX_DIGITS || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::Parse(format!("not a rational: {s:?}")));
        }
        t.parse::<BigInt>()
            .map_err(|_| Error::Parse(format!("not a rational: {s:?}")))
    };
    let p = parse_int(p)?;
    let q = parse_int(q)?;
    if q.is_zero() {
        return Err(Error::Parse(format!("zero denominator in {s:?}")));
    }
    Ok(Rat::new(p, q))
}

/// Always `"p/q"`, with `q >= 1`.
pub fn fmt_rat(r: &Rat) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Fractional part in `[0, 1)`.
pub fn frac(r: &Rat) -> Rat {
    r - r.floor()
}

pub fn floor_i64(r: &Rat) -> Option<i64> {
    r.floor().to_integer().to_i64()
}

pub fn to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // numerator/denominator too large for a direct conversion
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

pub fn is_nonneg_integer(r: &Rat) -> bool {
    r.is_integer() && !r.is_negative()
}

/// Generalised binomial coefficient `e choose m` for rational `e`.
pub fn binomial(e: &Rat, m: usize) -> Rat {
    let mut acc = Rat::one();
    for i in 0..m {
        acc = acc * (e - int(i as i64)) / int(i as i64 + 1);
    }
    acc
}

/// Best rational approximation of `x` by continued fractions, stopping at the
/// first convergent within `tol` or once the denominator exceeds `max_den`.
pub fn rationalize(x: f64, tol: f64, max_den: i64) -> Option<Rat> {
    if !x.is_finite() {
        return None;
    }
    let (mut h0, mut h1) = (BigInt::zero(), BigInt::one());
    let (mut k0, mut k1) = (BigInt::one(), BigInt::zero());
    let mut y = x;
    for _ in 0..64 {
        let a = y.floor();
        let ai = BigInt::from(a as i64);
        let h2 = &ai * &h1 + &h0;
        let k2 = &ai * &k1 + &k0;
        if k2 > BigInt::from(max_den) {
            return None;
        }
        let cand = Rat::new(h2.clone(), k2.clone());
        if (to_f64(&cand) - x).abs() <= tol {
            return Some(cand);
        }
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
        let rem = y - a;
        if rem.abs() < 1e-300 {
            return None;
        }
        y = 1.0 / rem;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format() {
        assert_eq!(parse_rat("3/6").unwrap(), rat(1, 2));
        assert_eq!(parse_rat("-4").unwrap(), int(-4));
        assert_eq!(fmt_rat(&int(3)), "3/1");
        assert_eq!(fmt_rat(&rat(-2, 4)), "-1/2");
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("abc").is_err());
        assert!(parse_rat("").is_err());
        assert!(parse_rat("1/-").is_err());
    }

    #[test]
    fn fractional_part_of_negatives() {
        assert_eq!(frac(&rat(-1, 3)), rat(2, 3));
        assert_eq!(frac(&rat(5, 3)), rat(2, 3));
        assert_eq!(frac(&int(-2)), int(0));
    }

    #[test]
    fn rationalize_recovers_small_fractions() {
        assert_eq!(rationalize(1.0 / 3.0, 1e-12, 1_000_000), Some(rat(1, 3)));
        assert_eq!(rationalize(-2.5, 1e-12, 1_000_000), Some(rat(-5, 2)));
        assert_eq!(rationalize(0.0, 1e-12, 10), Some(int(0)));
        assert_eq!(rationalize(std::f64::consts::PI, 1e-14, 1000), None);
    }

    #[test]
    fn binomial_series_coefficients() {
        assert_eq!(binomial(&rat(1, 2), 2), rat(-1, 8));
        assert_eq!(binomial(&int(-1), 3), int(-1));
        assert_eq!(binomial(&int(4), 2), int(6));
    }
}
