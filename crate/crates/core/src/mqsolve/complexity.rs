//! Closed-form operation counts for F4, hybrid F5 and XL.
//!
//! Constants hidden in the O(·) bounds are taken as 1. Results are exact
//! integers: a fractional exponent ω = p/r is applied as the floor of an
//! r-th root of a p-th power.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    F4,
    /// Hybrid F5 with `k` guessed variables.
    Hf5 { k: u32 },
    Xl,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ComplexityError {
    #[error("linear algebra exponent {0} outside [2, 3]")]
    InvalidOmega(String),
    #[error("XL estimate needs m > n (got m={m}, n={n})")]
    XlNotOverdetermined { m: u32, n: u32 },
    #[error("no degree of regularity for m={m} < n={n}")]
    NoDegreeOfRegularity { m: u32, n: u32 },
    #[error("cannot guess {k} of {n} variables")]
    TooManyGuesses { k: u32, n: u32 },
    #[error("m and n must be positive")]
    Empty,
}

/// Linear algebra exponent as an exact fraction `num/den`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Omega {
    num: u32,
    den: u32,
}

impl Omega {
    pub fn new(num: u32, den: u32) -> Result<Self, ComplexityError> {
        if den == 0 || num < 2 * den || num > 3 * den {
            return Err(ComplexityError::InvalidOmega(format!("{num}/{den}")));
        }
        let g = num_integer::gcd(num, den);
        Ok(Omega { num: num / g, den: den / g })
    }

    pub fn integer(w: u32) -> Result<Self, ComplexityError> {
        Omega::new(w, 1)
    }

    pub fn numer(&self) -> u32 {
        self.num
    }

    pub fn denom(&self) -> u32 {
        self.den
    }

    /// floor(scale · base^ω)
    fn apply(&self, scale: &BigUint, base: &BigUint) -> BigUint {
        let inner = scale.pow(self.den) * base.pow(self.num);
        inner.nth_root(self.den)
    }
}

impl fmt::Display for Omega {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl FromStr for Omega {
    type Err = ComplexityError;

    /// Accepts "2", "2.4", "2.375" or "12/5".
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ComplexityError::InvalidOmega(s.to_string());
        let s = s.trim();
        if let Some((p, r)) = s.split_once('/') {
            let p = p.trim().parse().map_err(|_| bad())?;
            let r = r.trim().parse().map_err(|_| bad())?;
            return Omega::new(p, r).map_err(|_| bad());
        }
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if frac.len() > 6 || !frac.bytes().all(|b| b.is_ascii_digit()) || (s.contains('.') && frac.is_empty()) {
            return Err(bad());
        }
        let int: u32 = int.parse().map_err(|_| bad())?;
        let den = 10u32.pow(frac.len() as u32);
        let frac_val: u32 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
        let num = int.checked_mul(den).and_then(|v| v.checked_add(frac_val)).ok_or_else(bad)?;
        Omega::new(num, den).map_err(|_| bad())
    }
}

fn binom(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

fn factorial(n: u64) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, i| acc * i)
}

/// First index whose coefficient in (1−t²)^m / (1−t)^n is non-positive.
///
/// Returns `None` when m < n: the series is then (1+t)^m / (1−t)^(n−m),
/// whose coefficients are all positive.
pub fn degree_of_regularity(m: u32, n: u32) -> Option<u32> {
    assert!(m >= 1 && n >= 1, "m and n must be positive");
    if m < n {
        return None;
    }
    let (m64, n64) = (m as u64, n as u64);
    for d in 0u64.. {
        // coefficient of t^d: Σ_j (−1)^j C(m,j) C(n−1+d−2j, d−2j)
        let mut pos = BigUint::zero();
        let mut neg = BigUint::zero();
        for j in 0..=d / 2 {
            let term = binom(m64, j) * binom(n64 - 1 + d - 2 * j, d - 2 * j);
            if j % 2 == 0 {
                pos += term;
            } else {
                neg += term;
            }
        }
        if pos <= neg {
            return Some(d as u32);
        }
    }
    unreachable!()
}

/// Operation count for `algorithm` on a system of m equations in n
/// variables over GF(q). `dreg` overrides the semi-regular degree of
/// regularity for F4 and HF5.
pub fn complexity_estimate(
    algorithm: Algorithm,
    q: u64,
    m: u32,
    n: u32,
    omega: Omega,
    dreg: Option<u32>,
) -> Result<BigUint, ComplexityError> {
    if m == 0 || n == 0 {
        return Err(ComplexityError::Empty);
    }
    match algorithm {
        Algorithm::F4 => f4_cost(m, n, omega, dreg),
        Algorithm::Hf5 { k } => {
            if k >= n {
                return Err(ComplexityError::TooManyGuesses { k, n });
            }
            let inner = f4_cost(m, n - k, omega, dreg)?;
            Ok(BigUint::from(q).pow(k) * inner)
        }
        Algorithm::Xl => {
            if m <= n {
                return Err(ComplexityError::XlNotOverdetermined { m, n });
            }
            let d = xl_degree(m, n);
            let base = BigUint::from(n).pow(d * omega.numer());
            Ok(base.nth_root(omega.denom()) / factorial(d as u64))
        }
    }
}

/// m · C(m + n + d − 1, d)^ω
fn f4_cost(m: u32, n: u32, omega: Omega, dreg: Option<u32>) -> Result<BigUint, ComplexityError> {
    let d = match dreg {
        Some(d) => d,
        None => degree_of_regularity(m, n).ok_or(ComplexityError::NoDegreeOfRegularity { m, n })?,
    };
    let b = binom(m as u64 + n as u64 + d as u64 - 1, d as u64);
    Ok(omega.apply(&BigUint::from(m), &b))
}

/// ⌈1/√ε⌉ with ε = m/n², i.e. the least D with D²·m ≥ n².
pub fn xl_degree(m: u32, n: u32) -> u32 {
    let (m, n) = (m as u64, n as u64);
    let mut d = 1u64;
    while d * d * m < n * n {
        d += 1;
    }
    d as u32
}
