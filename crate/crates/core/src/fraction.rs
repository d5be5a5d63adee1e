//! Exact rational fractions for the target-domain share mixed into training.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FractionError {
    #[error("cannot parse fraction {0:?}: expected `p/q` or an integer")]
    Syntax(String),
    #[error("fraction {0:?} has a zero denominator")]
    ZeroDenominator(String),
}

/// A non-negative rational `num/den` kept in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fraction {
    num: u64,
    den: u64,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Fraction {
    pub const ZERO: Fraction = Fraction { num: 0, den: 1 };
    pub const HALF: Fraction = Fraction { num: 1, den: 2 };

    pub fn new(num: u64, den: u64) -> Result<Self, FractionError> {
        if den == 0 {
            return Err(FractionError::ZeroDenominator(format!("{num}/{den}")));
        }
        let g = gcd(num, den).max(1);
        Ok(Fraction {
            num: num / g,
            den: den / g,
        })
    }

    pub fn numerator(&self) -> u64 {
        self.num
    }

    pub fn denominator(&self) -> u64 {
        self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `round(self * n)` with ties rounded up, computed in integer arithmetic.
    pub fn count_of(&self, n: usize) -> usize {
        let n = n as u128;
        let (p, q) = (self.num as u128, self.den as u128);
        ((2 * p * n + q) / (2 * q)) as usize
    }

    /// True when `0 <= self <= 1/2`.
    pub fn within_half(&self) -> bool {
        2 * self.num as u128 <= self.den as u128
    }

    /// The fractions swept by default: none, 1/18, 1/9, 1/6, 1/3 and 1/2 of the target.
    pub fn standard_sweep() -> Vec<Fraction> {
        [(0, 1), (1, 18), (1, 9), (1, 6), (1, 3), (1, 2)]
            .into_iter()
            .map(|(p, q)| Fraction { num: p, den: q })
            .collect()
    }

    /// Column label used in sweep tables: `No_TD`, `1/18*TD`, ...
    pub fn td_label(&self) -> String {
        if self.is_zero() {
            "No_TD".to_string()
        } else {
            format!("{self}*TD")
        }
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl FromStr for Fraction {
    type Err = FractionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let parse = |part: &str| {
            part.trim()
                .parse::<u64>()
                .map_err(|_| FractionError::Syntax(s.to_string()))
        };
        match t.split_once('/') {
            Some((p, q)) => {
                let den = parse(q)?;
                if den == 0 {
                    return Err(FractionError::ZeroDenominator(s.to_string()));
                }
                Fraction::new(parse(p)?, den)
            }
            None => Fraction::new(parse(t)?, 1),
        }
    }
}

impl PartialOrd for Fraction {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Fraction {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.num as u128 * other.den as u128).cmp(&(other.num as u128 * self.den as u128))
    }
}

impl Serialize for Fraction {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Fraction {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
