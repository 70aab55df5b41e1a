//! Arithmetic over the small finite fields GF(q) used by the puzzle and the
//! signature scheme.
//!
//! Two families are supported: prime fields GF(p) with p ≤ 251 and binary
//! extension fields GF(2^k) with 1 < k ≤ 8. Every element fits in one byte and
//! its canonical encoding is that byte, value in `[0, q)`.
//!
//! For q ≤ 32 multiplication and inversion are table driven (tables built once
//! when the [`FieldSpec`] is constructed). Larger fields compute directly.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Fixed reduction polynomials, indexed by extension degree. Each is the
/// lexicographically least irreducible binary polynomial of that degree.
const REDUCTION_POLYS: [u16; 9] = [
    0, 0, 0b111,        // x^2+x+1
    0b1011,             // x^3+x+1
    0b1_0011,           // x^4+x+1
    0b10_0101,          // x^5+x^2+1
    0b100_0011,         // x^6+x+1
    0b1000_0011,        // x^7+x+1
    0b1_0001_1011,      // x^8+x^4+x^3+x+1
];

const TABLE_LIMIT: u16 = 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("unsupported field order {0}: need a prime ≤ 251 or 2^k with k ≤ 8")]
    UnsupportedOrder(u16),
    #[error("reduction polynomial {poly:#x} is not irreducible of degree {degree}")]
    Reducible { poly: u16, degree: u8 },
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("value {value} is not an element of GF({q})")]
    OutOfRange { value: u16, q: u16 },
}

/// Whether the field is a prime field or a binary extension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldKind {
    Prime,
    BinaryExtension { degree: u8, reduction: u16 },
}

/// An element of GF(q), stored as its canonical representative.
///
/// Elements do not carry their field; all arithmetic goes through a
/// [`FieldSpec`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
#[repr(transparent)]
pub struct FieldElement(u8);

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement(0);
    pub const ONE: FieldElement = FieldElement(1);

    /// Wraps a raw byte without range checking. Callers must guarantee the
    /// value is below the order of the field it will be used with.
    #[inline]
    pub const fn from_raw(v: u8) -> Self {
        FieldElement(v)
    }

    #[inline]
    pub const fn value(self) -> u8 {
        self.0
    }

    #[inline]
    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug)]
struct Tables {
    mul: Vec<u8>,
    inv: Vec<u8>,
}

/// Description of a finite field GF(q). Cheap to clone.
#[derive(Clone)]
pub struct FieldSpec {
    q: u16,
    kind: FieldKind,
    tables: Option<Arc<Tables>>,
}

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldSpec")
            .field("q", &self.q)
            .field("kind", &self.kind)
            .finish()
    }
}

impl PartialEq for FieldSpec {
    fn eq(&self, other: &Self) -> bool {
        self.q == other.q && self.kind == other.kind
    }
}

impl Eq for FieldSpec {}

impl FieldSpec {
    /// Builds GF(q). Prime q gives a prime field (this includes q = 2);
    /// q = 2^k for 2 ≤ k ≤ 8 gives the binary extension with the fixed
    /// reduction polynomial of degree k.
    pub fn new(q: u16) -> Result<Self, FieldError> {
        if (2..=256).contains(&q) && is_prime(q) {
            return Ok(Self::build(q, FieldKind::Prime));
        }
        if q.is_power_of_two() && (4..=256).contains(&q) {
            let degree = q.trailing_zeros() as u8;
            let reduction = REDUCTION_POLYS[degree as usize];
            return Self::with_reduction(degree, reduction);
        }
        Err(FieldError::UnsupportedOrder(q))
    }

    /// Builds GF(2^degree) with an explicit reduction polynomial, given as a
    /// bitmask including the leading term. The polynomial is checked for
    /// irreducibility by trial division.
    pub fn with_reduction(degree: u8, reduction: u16) -> Result<Self, FieldError> {
        if !(2..=8).contains(&degree) {
            return Err(FieldError::UnsupportedOrder(1u16 << degree.min(15)));
        }
        if poly_degree(reduction as u32) != degree as i32 || !is_irreducible_gf2(reduction as u32) {
            return Err(FieldError::Reducible { poly: reduction, degree });
        }
        Ok(Self::build(1u16 << degree, FieldKind::BinaryExtension { degree, reduction }))
    }

    pub fn gf2() -> Self {
        Self::new(2).expect("GF(2) is supported")
    }

    pub fn gf16() -> Self {
        Self::new(16).expect("GF(16) is supported")
    }

    pub fn gf256() -> Self {
        Self::new(256).expect("GF(256) is supported")
    }

    fn build(q: u16, kind: FieldKind) -> Self {
        let mut spec = FieldSpec { q, kind, tables: None };
        if q <= TABLE_LIMIT {
            let n = q as usize;
            let mut mul = vec![0u8; n * n];
            let mut inv = vec![0u8; n];
            for a in 0..n {
                for b in 0..n {
                    mul[a * n + b] = spec.mul_direct(a as u8, b as u8);
                }
            }
            for a in 1..n {
                inv[a] = (1..n)
                    .find(|&b| mul[a * n + b] == 1)
                    .expect("every nonzero element of a field is invertible") as u8;
            }
            spec.tables = Some(Arc::new(Tables { mul, inv }));
        }
        spec
    }

    #[inline]
    pub fn order(&self) -> u16 {
        self.q
    }

    #[inline]
    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    #[inline]
    pub fn is_binary(&self) -> bool {
        self.q.is_power_of_two()
    }

    /// Characteristic of the field.
    pub fn characteristic(&self) -> u16 {
        match self.kind {
            FieldKind::Prime => self.q,
            FieldKind::BinaryExtension { .. } => 2,
        }
    }

    /// Checked construction of an element from its canonical value.
    pub fn element(&self, value: u16) -> Result<FieldElement, FieldError> {
        if value < self.q {
            Ok(FieldElement(value as u8))
        } else {
            Err(FieldError::OutOfRange { value, q: self.q })
        }
    }

    #[inline]
    pub fn contains(&self, a: FieldElement) -> bool {
        (a.0 as u16) < self.q
    }

    /// All elements in increasing canonical order.
    pub fn elements(&self) -> impl Iterator<Item = FieldElement> + Clone {
        (0..self.q).map(|v| FieldElement(v as u8))
    }

    /// Maps an arbitrary byte into the field: `b mod q` for prime fields,
    /// the low `degree` bits for binary extensions. For prime q that does not
    /// divide 256 the map is slightly biased, which is acceptable for
    /// pseudorandom coefficients.
    #[inline]
    pub fn elem_from_byte(&self, b: u8) -> FieldElement {
        match self.kind {
            FieldKind::Prime => FieldElement((b as u16 % self.q) as u8),
            FieldKind::BinaryExtension { .. } => FieldElement((b as u16 & (self.q - 1)) as u8),
        }
    }

    #[inline]
    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        match self.kind {
            FieldKind::BinaryExtension { .. } => FieldElement(a.0 ^ b.0),
            FieldKind::Prime => {
                let s = a.0 as u16 + b.0 as u16;
                FieldElement(if s >= self.q { s - self.q } else { s } as u8)
            }
        }
    }

    #[inline]
    pub fn neg(&self, a: FieldElement) -> FieldElement {
        match self.kind {
            FieldKind::BinaryExtension { .. } => a,
            FieldKind::Prime => {
                if a.0 == 0 {
                    a
                } else {
                    FieldElement((self.q - a.0 as u16) as u8)
                }
            }
        }
    }

    #[inline]
    pub fn sub(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        match &self.tables {
            Some(t) => FieldElement(t.mul[a.0 as usize * self.q as usize + b.0 as usize]),
            None => FieldElement(self.mul_direct(a.0, b.0)),
        }
    }

    pub fn inv(&self, a: FieldElement) -> Result<FieldElement, FieldError> {
        if a.is_zero() {
            return Err(FieldError::ZeroInverse);
        }
        Ok(match &self.tables {
            Some(t) => FieldElement(t.inv[a.0 as usize]),
            // a^(q-2) = a^-1 in any field of order q.
            None => self.pow(a, self.q as u32 - 2),
        })
    }

    pub fn div(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement, FieldError> {
        Ok(self.mul(a, self.inv(b)?))
    }

    pub fn pow(&self, a: FieldElement, mut e: u32) -> FieldElement {
        let mut base = a;
        let mut acc = FieldElement::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// `dst[i] += c * src[i]` for every i.
    #[inline]
    pub fn axpy(&self, dst: &mut [FieldElement], c: FieldElement, src: &[FieldElement]) {
        debug_assert_eq!(dst.len(), src.len());
        if c.is_zero() {
            return;
        }
        match (&self.tables, self.kind) {
            (Some(t), FieldKind::BinaryExtension { .. }) => {
                let row = &t.mul[c.0 as usize * self.q as usize..][..self.q as usize];
                for (d, s) in dst.iter_mut().zip(src) {
                    d.0 ^= row[s.0 as usize];
                }
            }
            (Some(t), FieldKind::Prime) => {
                let row = &t.mul[c.0 as usize * self.q as usize..][..self.q as usize];
                for (d, s) in dst.iter_mut().zip(src) {
                    let v = d.0 as u16 + row[s.0 as usize] as u16;
                    d.0 = if v >= self.q { v - self.q } else { v } as u8;
                }
            }
            (None, _) => {
                for (d, s) in dst.iter_mut().zip(src) {
                    *d = self.add(*d, self.mul(c, *s));
                }
            }
        }
    }

    /// Multiplies every entry of `row` by `c` in place.
    pub fn scale(&self, row: &mut [FieldElement], c: FieldElement) {
        for x in row.iter_mut() {
            *x = self.mul(*x, c);
        }
    }

    /// Sum of element-wise products.
    pub fn dot(&self, a: &[FieldElement], b: &[FieldElement]) -> FieldElement {
        a.iter()
            .zip(b)
            .fold(FieldElement::ZERO, |acc, (x, y)| self.add(acc, self.mul(*x, *y)))
    }

    fn mul_direct(&self, a: u8, b: u8) -> u8 {
        match self.kind {
            FieldKind::Prime => ((a as u32 * b as u32) % self.q as u32) as u8,
            FieldKind::BinaryExtension { degree, reduction } => {
                gf2_mulmod(a as u32, b as u32, reduction as u32, degree as u32) as u8
            }
        }
    }
}

fn is_prime(q: u16) -> bool {
    q >= 2 && (2..q).take_while(|d| d * d <= q).all(|d| q % d != 0)
}

fn poly_degree(p: u32) -> i32 {
    31 - p.leading_zeros() as i32
}

/// Remainder of binary polynomial division `a mod b`.
fn gf2_poly_rem(mut a: u32, b: u32) -> u32 {
    let db = poly_degree(b);
    while a != 0 && poly_degree(a) >= db {
        a ^= b << (poly_degree(a) - db);
    }
    a
}

fn gf2_mulmod(a: u32, b: u32, reduction: u32, degree: u32) -> u32 {
    let mut acc = 0u32;
    for i in 0..degree {
        if (b >> i) & 1 == 1 {
            acc ^= a << i;
        }
    }
    gf2_poly_rem(acc, reduction)
}

/// Trial division by every polynomial of degree 1..=deg/2.
fn is_irreducible_gf2(p: u32) -> bool {
    let d = poly_degree(p);
    if d < 1 {
        return false;
    }
    for divisor in 2u32..(1u32 << (d / 2 + 1)) {
        if gf2_poly_rem(p, divisor) == 0 {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fe(v: u8) -> FieldElement {
        FieldElement::from_raw(v)
    }

    /// Schoolbook carry-less multiply followed by long division, written
    /// without sharing helpers with the field implementation.
    fn schoolbook_gf2m(a: u8, b: u8, reduction: u16) -> u8 {
        let mut product: u32 = 0;
        for i in 0..8 {
            if b & (1 << i) != 0 {
                product ^= (a as u32) << i;
            }
        }
        let deg = 15 - reduction.leading_zeros();
        for bit in (deg..16).rev() {
            if product & (1 << bit) != 0 {
                product ^= (reduction as u32) << (bit - deg);
            }
        }
        product as u8
    }

    #[test]
    fn add_examples() {
        assert_eq!(FieldSpec::gf2().add(fe(1), fe(1)), fe(0));
        assert_eq!(FieldSpec::new(5).unwrap().add(fe(3), fe(4)), fe(2));
        assert_eq!(FieldSpec::gf16().add(fe(0x9), fe(0x9)), fe(0));
    }

    #[test]
    fn mul_examples() {
        let f16 = FieldSpec::gf16();
        assert_eq!(f16.mul(fe(0x8), fe(0x2)), fe(0x3));
        assert_eq!(FieldSpec::new(5).unwrap().mul(fe(2), fe(3)), fe(1));
        for q in [2u16, 3, 4, 5, 16, 29, 32, 251, 256] {
            let f = FieldSpec::new(q).unwrap();
            for a in f.elements() {
                assert_eq!(f.mul(a, FieldElement::ONE), a);
            }
        }
    }

    #[test]
    fn inverse_examples() {
        let f5 = FieldSpec::new(5).unwrap();
        assert_eq!(f5.inv(fe(1)).unwrap(), fe(1));
        assert_eq!(f5.inv(fe(2)).unwrap(), fe(3));
        assert_eq!(f5.inv(fe(0)), Err(FieldError::ZeroInverse));
        let f16 = FieldSpec::gf16();
        for a in f16.elements().skip(1) {
            assert_eq!(f16.mul(a, f16.inv(a).unwrap()), FieldElement::ONE);
        }
        let f256 = FieldSpec::gf256();
        for a in f256.elements().skip(1) {
            assert_eq!(f256.mul(a, f256.inv(a).unwrap()), FieldElement::ONE);
        }
    }

    #[test]
    fn elem_from_byte_examples() {
        assert_eq!(FieldSpec::gf2().elem_from_byte(0x07), fe(1));
        assert_eq!(FieldSpec::gf16().elem_from_byte(0xAB), fe(0xB));
        assert_eq!(FieldSpec::new(29).unwrap().elem_from_byte(0xFF), fe(23));
    }

    #[test]
    fn byte_encoding_is_stable() {
        for q in [2u16, 7, 16, 29, 32, 256] {
            let f = FieldSpec::new(q).unwrap();
            for b in 0..=255u8 {
                let x = f.elem_from_byte(b);
                assert!(f.contains(x));
                assert_eq!(f.elem_from_byte(x.value()), x);
            }
        }
    }

    #[test]
    fn reduction_polys_are_least_irreducible() {
        for degree in 2u32..=8 {
            let least = ((1u32 << degree)..(1u32 << (degree + 1)))
                .find(|&p| (2u32..(1 << degree)).all(|d| gf2_poly_rem(p, d) != 0))
                .unwrap();
            assert_eq!(least as u16, REDUCTION_POLYS[degree as usize], "degree {degree}");
        }
    }

    #[test]
    fn rejects_reducible_and_unsupported() {
        // x^4 + x^2 + 1 = (x^2+x+1)^2
        assert!(matches!(
            FieldSpec::with_reduction(4, 0b10101),
            Err(FieldError::Reducible { .. })
        ));
        assert!(FieldSpec::new(6).is_err());
        assert!(FieldSpec::new(1).is_err());
        assert!(FieldSpec::new(512).is_err());
        assert!(FieldSpec::new(16).unwrap().element(16).is_err());
    }

    #[test]
    fn binary_tables_match_schoolbook_oracle() {
        for q in [4u16, 8, 16, 32] {
            let f = FieldSpec::new(q).unwrap();
            let FieldKind::BinaryExtension { reduction, .. } = f.kind() else { panic!() };
            for a in f.elements() {
                for b in f.elements() {
                    assert_eq!(f.mul(a, b).value(), schoolbook_gf2m(a.value(), b.value(), reduction));
                    assert_eq!(f.add(a, b).value(), a.value() ^ b.value());
                }
            }
        }
    }

    #[test]
    fn field_axioms_exhaustive() {
        for q in [2u16, 3, 4, 5, 7, 8, 11, 13, 16, 17, 19, 23, 29, 32] {
            let f = FieldSpec::new(q).unwrap();
            for a in f.elements() {
                assert_eq!(f.add(a, f.neg(a)), FieldElement::ZERO);
                for b in f.elements() {
                    assert_eq!(f.add(a, b), f.add(b, a));
                    assert_eq!(f.mul(a, b), f.mul(b, a));
                    for c in f.elements() {
                        assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
                        assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                        assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                    }
                }
            }
        }
    }

    #[test]
    fn axpy_matches_scalar_ops() {
        for q in [5u16, 16, 251] {
            let f = FieldSpec::new(q).unwrap();
            let src: Vec<_> = (0..40u8).map(|i| f.elem_from_byte(i.wrapping_mul(7).wrapping_add(3))).collect();
            let mut dst: Vec<_> = (0..40u8).map(|i| f.elem_from_byte(i.wrapping_mul(13).wrapping_add(1))).collect();
            let c = f.elem_from_byte(3);
            let expect: Vec<_> = dst.iter().zip(&src).map(|(d, s)| f.add(*d, f.mul(c, *s))).collect();
            f.axpy(&mut dst, c, &src);
            assert_eq!(dst, expect);
        }
    }
}
