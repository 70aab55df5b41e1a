//! The MQ puzzle object: a system of m quadratic equations in n variables
//! over GF(q), derived deterministically from a 32-byte seed.
//!
//! Coefficients are drawn in a fixed order from a SHA-256 counter-mode
//! stream. For each equation k = 1..m: the quadratic coefficients α_ij for
//! i ≤ j in lexicographic order, then the linear coefficients β_1..β_n, then
//! the constant γ. A system therefore consumes exactly
//! `m * (n(n+1)/2 + n + 1)` stream elements.

use std::fmt;

use thiserror::Error;

use crate::ffield::{FieldElement, FieldError, FieldSpec};
use crate::hash::{sha256_parts, CounterHasher, Hash32};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SystemError {
    #[error("expected a vector of {expected} elements, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("element {0} is outside the field")]
    InvalidElement(u8),
    #[error("malformed system encoding: {0}")]
    Malformed(&'static str),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// A 32-byte puzzle seed.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Seed(pub Hash32);

impl fmt::Debug for Seed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Seed({})", hex::encode(self.0))
    }
}

/// Seed = SHA256(prev_hash ∥ LE64(nonce)). `prev_hash` is already the
/// double-SHA256 of the previous header.
pub fn derive_seed(prev_hash: &Hash32, nonce: u64) -> Seed {
    Seed(sha256_parts(&[prev_hash, &nonce.to_le_bytes()]))
}

/// The `counter`-th pseudorandom element for `seed`:
/// `elem_from_byte(SHA256(seed ∥ LE64(counter))[0])`.
pub fn prng_element(seed: &Seed, counter: u64, spec: &FieldSpec) -> FieldElement {
    spec.elem_from_byte(CounterHasher::new(&seed.0).first_byte(counter))
}

/// Anything that can hand out coefficients in sequence.
pub trait CoefficientSource {
    fn next_element(&mut self, spec: &FieldSpec) -> FieldElement;
}

/// Sequential reader over the seeded counter-mode stream, starting at
/// counter 0.
pub struct CoefficientStream {
    hasher: CounterHasher,
    counter: u64,
}

impl CoefficientStream {
    pub fn new(seed: &Seed) -> Self {
        CoefficientStream { hasher: CounterHasher::new(&seed.0), counter: 0 }
    }

    pub fn consumed(&self) -> u64 {
        self.counter
    }
}

impl CoefficientSource for CoefficientStream {
    #[inline]
    fn next_element(&mut self, spec: &FieldSpec) -> FieldElement {
        let b = self.hasher.first_byte(self.counter);
        self.counter += 1;
        spec.elem_from_byte(b)
    }
}

/// Number of upper-triangular quadratic monomials x_i x_j, i ≤ j.
#[inline]
pub const fn quad_terms(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Coefficients per equation.
#[inline]
pub const fn terms_per_equation(n: usize) -> usize {
    quad_terms(n) + n + 1
}

/// Position of α_ij (0-based, i ≤ j) inside an equation's quadratic block.
#[inline]
pub fn quad_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i <= j && j < n);
    i * (2 * n - i + 1) / 2 + (j - i)
}

/// m quadratic equations in n variables over GF(q).
#[derive(Clone, PartialEq, Eq)]
pub struct MQSystem {
    spec: FieldSpec,
    m: usize,
    n: usize,
    /// Row-major: equation k occupies `k*T .. (k+1)*T`, T = terms_per_equation(n).
    coeffs: Vec<FieldElement>,
}

impl fmt::Debug for MQSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MQSystem")
            .field("q", &self.spec.order())
            .field("m", &self.m)
            .field("n", &self.n)
            .finish()
    }
}

impl MQSystem {
    pub fn zero(spec: FieldSpec, m: usize, n: usize) -> Self {
        MQSystem { coeffs: vec![FieldElement::ZERO; m * terms_per_equation(n)], spec, m, n }
    }

    /// Builds a system from its raw coefficient table in generation order.
    pub fn from_coefficients(
        spec: FieldSpec,
        m: usize,
        n: usize,
        coeffs: Vec<FieldElement>,
    ) -> Result<Self, SystemError> {
        let expected = m * terms_per_equation(n);
        if coeffs.len() != expected {
            return Err(SystemError::DimensionMismatch { expected, actual: coeffs.len() });
        }
        if let Some(bad) = coeffs.iter().find(|c| !spec.contains(**c)) {
            return Err(SystemError::InvalidElement(bad.value()));
        }
        Ok(MQSystem { spec, m, n, coeffs })
    }

    #[inline]
    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }

    #[inline]
    pub fn equations(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn variables(&self) -> usize {
        self.n
    }

    pub fn coefficients(&self) -> &[FieldElement] {
        &self.coeffs
    }

    /// Full coefficient row of equation k.
    #[inline]
    pub fn equation(&self, k: usize) -> &[FieldElement] {
        let t = terms_per_equation(self.n);
        &self.coeffs[k * t..(k + 1) * t]
    }

    #[inline]
    pub fn equation_mut(&mut self, k: usize) -> &mut [FieldElement] {
        let t = terms_per_equation(self.n);
        &mut self.coeffs[k * t..(k + 1) * t]
    }

    #[inline]
    pub fn quad(&self, k: usize, i: usize, j: usize) -> FieldElement {
        self.equation(k)[quad_index(self.n, i, j)]
    }

    #[inline]
    pub fn lin(&self, k: usize, i: usize) -> FieldElement {
        self.equation(k)[quad_terms(self.n) + i]
    }

    #[inline]
    pub fn constant(&self, k: usize) -> FieldElement {
        self.equation(k)[quad_terms(self.n) + self.n]
    }

    pub fn set_quad(&mut self, k: usize, i: usize, j: usize, v: FieldElement) {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        let idx = quad_index(self.n, i, j);
        self.equation_mut(k)[idx] = v;
    }

    pub fn set_lin(&mut self, k: usize, i: usize, v: FieldElement) {
        let idx = quad_terms(self.n) + i;
        self.equation_mut(k)[idx] = v;
    }

    pub fn set_constant(&mut self, k: usize, v: FieldElement) {
        let idx = quad_terms(self.n) + self.n;
        self.equation_mut(k)[idx] = v;
    }

    fn check_len(&self, x: &[FieldElement]) -> Result<(), SystemError> {
        if x.len() != self.n {
            return Err(SystemError::DimensionMismatch { expected: self.n, actual: x.len() });
        }
        Ok(())
    }

    /// Residual vector (f_1(x), …, f_m(x)).
    pub fn evaluate(&self, x: &[FieldElement]) -> Result<Vec<FieldElement>, SystemError> {
        self.check_len(x)?;
        let f = &self.spec;
        let n = self.n;
        let mut monomials = Vec::with_capacity(terms_per_equation(n));
        for i in 0..n {
            for j in i..n {
                monomials.push(f.mul(x[i], x[j]));
            }
        }
        monomials.extend_from_slice(x);
        monomials.push(FieldElement::ONE);
        Ok((0..self.m).map(|k| f.dot(self.equation(k), &monomials)).collect())
    }

    /// True iff every equation vanishes at `x`.
    pub fn is_solution(&self, x: &[FieldElement]) -> Result<bool, SystemError> {
        Ok(self.evaluate(x)?.iter().all(|r| r.is_zero()))
    }

    /// Substitutes x_{n-1} = `value` (the last variable), giving a system in
    /// n-1 variables with the same number of equations.
    pub fn specialize_last(&self, value: FieldElement) -> MQSystem {
        assert!(self.n >= 1, "no variable left to specialise");
        let f = &self.spec;
        let n = self.n;
        let last = n - 1;
        let mut out = MQSystem::zero(self.spec.clone(), self.m, last);
        let v2 = f.mul(value, value);
        for k in 0..self.m {
            for i in 0..last {
                for j in i..last {
                    out.set_quad(k, i, j, self.quad(k, i, j));
                }
                // α_{i,last} x_i v folds into the linear term of x_i
                let lin = f.add(self.lin(k, i), f.mul(self.quad(k, i, last), value));
                out.set_lin(k, i, lin);
            }
            let c = f.add(
                self.constant(k),
                f.add(f.mul(self.lin(k, last), value), f.mul(self.quad(k, last, last), v2)),
            );
            out.set_constant(k, c);
        }
        out
    }

    /// Coefficient-wise sum of two systems with identical shape.
    pub fn add(&self, other: &MQSystem) -> MQSystem {
        assert_eq!((self.m, self.n), (other.m, other.n));
        assert_eq!(self.spec, other.spec);
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| self.spec.add(*a, *b)).collect();
        MQSystem { spec: self.spec.clone(), m: self.m, n: self.n, coeffs }
    }

    /// Header (q, m, n as little-endian u16) followed by one byte per
    /// coefficient in generation order.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(6 + self.coeffs.len());
        out.extend_from_slice(&self.spec.order().to_le_bytes());
        out.extend_from_slice(&(self.m as u16).to_le_bytes());
        out.extend_from_slice(&(self.n as u16).to_le_bytes());
        out.extend(self.coeffs.iter().map(|c| c.value()));
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, SystemError> {
        if bytes.len() < 6 {
            return Err(SystemError::Malformed("truncated header"));
        }
        let word = |i: usize| u16::from_le_bytes([bytes[i], bytes[i + 1]]);
        let spec = FieldSpec::new(word(0))?;
        let (m, n) = (word(2) as usize, word(4) as usize);
        let coeffs = bytes[6..].iter().map(|b| FieldElement::from_raw(*b)).collect();
        Self::from_coefficients(spec, m, n, coeffs)
    }
}

/// Draws a system from an arbitrary coefficient source in generation order.
pub fn generate_system_from<S: CoefficientSource>(
    source: &mut S,
    spec: &FieldSpec,
    m: usize,
    n: usize,
) -> MQSystem {
    let total = m * terms_per_equation(n);
    let coeffs = (0..total).map(|_| source.next_element(spec)).collect();
    MQSystem { spec: spec.clone(), m, n, coeffs }
}

/// The puzzle system for `seed`.
pub fn generate_system(seed: &Seed, spec: &FieldSpec, m: usize, n: usize) -> MQSystem {
    assert!(m >= 1 && n >= 1, "a puzzle needs at least one equation and one variable");
    generate_system_from(&mut CoefficientStream::new(seed), spec, m, n)
}
