//! Exact elements of ℚ/ℤ stored as reduced fractions in `[0, 1)`.

use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

pub fn gcd(a: u64, b: u64) -> u64 {
    let (mut a, mut b) = (a, b);
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub fn lcm(a: u64, b: u64) -> u64 {
    if a == 0 || b == 0 {
        0
    } else {
        a / gcd(a, b) * b
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Qz {
    num: u64,
    den: u64,
}

impl Qz {
    pub const ZERO: Qz = Qz { num: 0, den: 1 };

    /// `num / den mod 1`; `den` must be positive.
    pub fn new(num: i64, den: u64) -> Qz {
        assert!(den > 0, "zero denominator");
        let d = den as i128;
        let n = (num as i128).rem_euclid(d) as u64;
        let g = gcd(n, den);
        if n == 0 {
            Qz::ZERO
        } else {
            Qz { num: n / g, den: den / g }
        }
    }

    /// Element `k/m` of the cyclic subgroup `(1/m)ℤ/ℤ`.
    pub fn from_zm(k: u64, m: u64) -> Qz {
        Qz::new((k % m) as i64, m)
    }

    pub fn numer(&self) -> u64 {
        self.num
    }

    pub fn denom(&self) -> u64 {
        self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    /// Numerator over `m`, if the denominator divides `m`.
    pub fn to_zm(&self, m: u64) -> Option<u64> {
        if m.is_multiple_of(self.den) {
            Some(self.num * (m / self.den))
        } else {
            None
        }
    }

    /// `exp(2πi·self)`.
    pub fn phase(&self) -> Complex64 {
        let t = std::f64::consts::TAU * self.num as f64 / self.den as f64;
        Complex64::new(t.cos(), t.sin())
    }

    /// Order of the element in ℚ/ℤ.
    pub fn order(&self) -> u64 {
        self.den
    }
}

impl Add for Qz {
    type Output = Qz;
    fn add(self, o: Qz) -> Qz {
        let l = lcm(self.den, o.den);
        let a = self.num as u128 * (l / self.den) as u128 + o.num as u128 * (l / o.den) as u128;
        Qz::new((a % l as u128) as i64, l)
    }
}

impl Neg for Qz {
    type Output = Qz;
    fn neg(self) -> Qz {
        Qz::new(-(self.num as i64), self.den)
    }
}

impl Sub for Qz {
    type Output = Qz;
    fn sub(self, o: Qz) -> Qz {
        self + (-o)
    }
}

impl fmt::Display for Qz {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.num == 0 {
            write!(f, "0")
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl FromStr for Qz {
    type Err = Error;

    /// Accepts `"a/b"` or an integer `"a"` (which is `0` in ℚ/ℤ), with optional sign on `a`.
    fn from_str(s: &str) -> Result<Qz, Error> {
        let s = s.trim();
        let bad = || Error::Parse(format!("invalid fraction {s:?}"));
        let (n, d) = match s.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s, "1"),
        };
        let n: i64 = n.parse().map_err(|_| bad())?;
        let d: u64 = d.parse().map_err(|_| bad())?;
        if d == 0 || d > i64::MAX as u64 {
            return Err(bad());
        }
        Ok(Qz::new(n % d as i64, d))
    }
}

impl Serialize for Qz {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Qz {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Qz, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduces_and_wraps() {
        assert_eq!(Qz::new(6, 6), Qz::ZERO);
        assert_eq!(Qz::new(-1, 4), Qz::new(3, 4));
        assert_eq!(Qz::new(2, 4).denom(), 2);
        assert_eq!(Qz::new(1, 4) + Qz::new(3, 4), Qz::ZERO);
        assert_eq!(Qz::new(1, 2) + Qz::new(1, 3), Qz::new(5, 6));
    }

    #[test]
    fn parse_round_trip() {
        for s in ["0", "1/2", "5/6", "3/4"] {
            let q: Qz = s.parse().unwrap();
            assert_eq!(q.to_string(), s);
        }
        assert_eq!("-1/4".parse::<Qz>().unwrap(), Qz::new(3, 4));
        assert_eq!("7".parse::<Qz>().unwrap(), Qz::ZERO);
        assert!("1/0".parse::<Qz>().is_err());
        assert!("x/2".parse::<Qz>().is_err());
        assert!("".parse::<Qz>().is_err());
    }

    #[test]
    fn zm_conversion() {
        assert_eq!(Qz::new(1, 3).to_zm(6), Some(2));
        assert_eq!(Qz::new(1, 4).to_zm(6), None);
        assert_eq!(Qz::from_zm(8, 6), Qz::new(1, 3));
    }
}
