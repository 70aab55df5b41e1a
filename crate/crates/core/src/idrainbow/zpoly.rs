//! Polynomials in the identity variables z₁..z_d of bounded total degree,
//! stored densely over a graded monomial basis.

use std::collections::HashMap;
use std::sync::Arc;

use crate::ffield::{FieldElement, FieldSpec};

/// Monomial basis and product table for GF(q)[z₁..z_d] truncated at
/// `max_degree`. Monomials are sorted by degree, so the first `d + 1`
/// basis elements are 1, z₁, …, z_d.
#[derive(Debug)]
pub struct ZRing {
    spec: FieldSpec,
    vars: usize,
    max_degree: usize,
    exponents: Vec<Vec<u8>>,
    degrees: Vec<u8>,
    product: Vec<u32>,
}

const NO_PRODUCT: u32 = u32::MAX;

impl ZRing {
    pub fn new(spec: FieldSpec, vars: usize, max_degree: usize) -> Arc<Self> {
        let mut exponents = Vec::new();
        for deg in 0..=max_degree {
            let mut cur = vec![0u8; vars];
            push_degree(&mut exponents, &mut cur, 0, deg);
        }
        let degrees: Vec<u8> = exponents.iter().map(|e| e.iter().sum()).collect();
        let index: HashMap<&[u8], usize> = exponents.iter().enumerate().map(|(i, e)| (e.as_slice(), i)).collect();
        let len = exponents.len();
        let mut product = vec![NO_PRODUCT; len * len];
        for a in 0..len {
            for b in 0..len {
                if degrees[a] as usize + degrees[b] as usize <= max_degree {
                    let e: Vec<u8> = exponents[a].iter().zip(&exponents[b]).map(|(x, y)| x + y).collect();
                    product[a * len + b] = index[e.as_slice()] as u32;
                }
            }
        }
        Arc::new(ZRing { spec, vars, max_degree, exponents, degrees, product })
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// Size of the monomial basis, C(d + D, D).
    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    /// Number of basis monomials of degree ≤ 1.
    pub fn affine_len(&self) -> usize {
        1 + self.vars
    }

    pub fn exponents(&self, i: usize) -> &[u8] {
        &self.exponents[i]
    }

    pub fn zero(&self) -> ZPoly {
        ZPoly(vec![FieldElement::ZERO; self.len()])
    }

    pub fn constant(&self, c: FieldElement) -> ZPoly {
        let mut p = self.zero();
        p.0[0] = c;
        p
    }

    pub fn add(&self, a: &ZPoly, b: &ZPoly) -> ZPoly {
        ZPoly(a.0.iter().zip(&b.0).map(|(&x, &y)| self.spec.add(x, y)).collect())
    }

    pub fn add_assign(&self, a: &mut ZPoly, b: &ZPoly) {
        for (x, &y) in a.0.iter_mut().zip(&b.0) {
            *x = self.spec.add(*x, y);
        }
    }

    /// acc += a·b
    pub fn mul_acc(&self, acc: &mut ZPoly, a: &ZPoly, b: &ZPoly) {
        let len = self.len();
        let f = &self.spec;
        for (i, &x) in a.0.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            let row = &self.product[i * len..(i + 1) * len];
            for (j, &y) in b.0.iter().enumerate() {
                if y.is_zero() {
                    continue;
                }
                let k = row[j];
                assert!(k != NO_PRODUCT, "z-degree bound {} exceeded", self.max_degree);
                acc.0[k as usize] = f.add(acc.0[k as usize], f.mul(x, y));
            }
        }
    }

    pub fn mul(&self, a: &ZPoly, b: &ZPoly) -> ZPoly {
        let mut out = self.zero();
        self.mul_acc(&mut out, a, b);
        out
    }

    /// Values of every basis monomial at z.
    pub fn monomial_values(&self, z: &[FieldElement]) -> Vec<FieldElement> {
        assert_eq!(z.len(), self.vars, "identity length");
        self.exponents
            .iter()
            .map(|e| {
                e.iter()
                    .zip(z)
                    .fold(FieldElement::ONE, |acc, (&k, &v)| self.spec.mul(acc, self.spec.pow(v, k as u32)))
            })
            .collect()
    }

    pub fn eval_with(&self, p: &ZPoly, values: &[FieldElement]) -> FieldElement {
        self.spec.dot(&p.0, values)
    }

    pub fn degree(&self, p: &ZPoly) -> Option<usize> {
        p.0.iter()
            .zip(&self.degrees)
            .filter(|(c, _)| !c.is_zero())
            .map(|(_, &d)| d as usize)
            .max()
    }
}

fn push_degree(out: &mut Vec<Vec<u8>>, cur: &mut Vec<u8>, var: usize, left: usize) {
    if var + 1 >= cur.len() {
        if let Some(last) = cur.len().checked_sub(1) {
            cur[last] = left as u8;
            out.push(cur.clone());
            cur[last] = 0;
        } else if left == 0 {
            out.push(Vec::new());
        }
        return;
    }
    for e in (0..=left).rev() {
        cur[var] = e as u8;
        push_degree(out, cur, var + 1, left - e);
    }
    cur[var] = 0;
}

/// Dense coefficient vector over a [`ZRing`] basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZPoly(pub Vec<FieldElement>);

impl ZPoly {
    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|c| c.is_zero())
    }

    pub fn constant_term(&self) -> FieldElement {
        self.0[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_is_graded_and_sized() {
        let r = ZRing::new(FieldSpec::gf16(), 4, 4);
        assert_eq!(r.len(), 70);
        assert_eq!(r.exponents(0), &[0, 0, 0, 0]);
        assert_eq!(r.exponents(1), &[1, 0, 0, 0]);
        assert_eq!(r.exponents(4), &[0, 0, 0, 1]);
        assert_eq!(ZRing::new(FieldSpec::gf256(), 8, 4).len(), 495);
        assert_eq!(ZRing::new(FieldSpec::gf16(), 0, 4).len(), 1);
    }

    #[test]
    fn product_evaluates_pointwise() {
        let f = FieldSpec::gf16();
        let r = ZRing::new(f.clone(), 3, 4);
        let e = |v| f.element(v).unwrap();
        let mut a = r.zero();
        let mut b = r.zero();
        for i in 0..r.affine_len() {
            a.0[i] = e(i as u16 + 2);
            b.0[i] = e(11 - i as u16);
        }
        let ab = r.mul(&a, &b);
        let abab = r.mul(&ab, &ab);
        assert_eq!(r.degree(&abab), Some(4));
        for z in [[e(0), e(0), e(0)], [e(1), e(7), e(15)], [e(9), e(3), e(4)]] {
            let vals = r.monomial_values(&z);
            let pa = r.eval_with(&a, &vals);
            let pb = r.eval_with(&b, &vals);
            let pab = f.mul(pa, pb);
            assert_eq!(r.eval_with(&ab, &vals), pab);
            assert_eq!(r.eval_with(&abab, &vals), f.mul(pab, pab));
        }
    }

    #[test]
    #[should_panic(expected = "z-degree bound")]
    fn degree_overflow_panics() {
        let f = FieldSpec::gf16();
        let r = ZRing::new(f.clone(), 1, 1);
        let mut z = r.zero();
        z.0[1] = FieldElement::ONE;
        r.mul(&z, &z);
    }
}
