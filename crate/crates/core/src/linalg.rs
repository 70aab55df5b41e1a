//! Dense matrices over GF(q) and affine maps built on them.

use crate::ffield::{FieldElement, FieldSpec};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<FieldElement>,
}

impl Matrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![FieldElement::ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zero(n, n);
        for i in 0..n {
            m.set(i, i, FieldElement::ONE);
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<FieldElement>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged matrix");
        Matrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> FieldElement {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: FieldElement) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[FieldElement] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[FieldElement] {
        &self.data
    }

    pub fn mul_vec(&self, f: &FieldSpec, x: &[FieldElement]) -> Vec<FieldElement> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|r| f.dot(self.row(r), x)).collect()
    }

    pub fn mul(&self, f: &FieldSpec, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zero(self.rows, other.cols);
        for r in 0..self.rows {
            let dst = &mut out.data[r * other.cols..(r + 1) * other.cols];
            for k in 0..self.cols {
                let c = self.get(r, k);
                if !c.is_zero() {
                    f.axpy(dst, c, other.row(k));
                }
            }
        }
        out
    }

    /// Gauss-Jordan inverse; `None` when singular.
    pub fn inverse(&self, f: &FieldSpec) -> Option<Matrix> {
        assert_eq!(self.rows, self.cols, "inverse of a non-square matrix");
        let n = self.rows;
        let w = 2 * n;
        let mut aug = vec![FieldElement::ZERO; n * w];
        for r in 0..n {
            aug[r * w..r * w + n].copy_from_slice(self.row(r));
            aug[r * w + n + r] = FieldElement::ONE;
        }
        for col in 0..n {
            let p = (col..n).find(|&r| !aug[r * w + col].is_zero())?;
            if p != col {
                for c in 0..w {
                    aug.swap(p * w + c, col * w + c);
                }
            }
            let inv = f.inv(aug[col * w + col]).ok()?;
            f.scale(&mut aug[col * w..(col + 1) * w], inv);
            let pivot: Vec<_> = aug[col * w..(col + 1) * w].to_vec();
            for r in (0..n).filter(|&r| r != col) {
                let c = aug[r * w + col];
                if !c.is_zero() {
                    f.axpy(&mut aug[r * w..(r + 1) * w], f.neg(c), &pivot);
                }
            }
        }
        let rows = (0..n).map(|r| aug[r * w + n..(r + 1) * w].to_vec()).collect();
        Some(Matrix::from_rows(rows))
    }

    pub fn is_invertible(&self, f: &FieldSpec) -> bool {
        self.rows == self.cols && self.rank(f) == self.rows
    }

    pub fn rank(&self, f: &FieldSpec) -> usize {
        let mut m = self.data.clone();
        let (rows, cols) = (self.rows, self.cols);
        let mut rank = 0;
        for col in 0..cols {
            let Some(p) = (rank..rows).find(|&r| !m[r * cols + col].is_zero()) else {
                continue;
            };
            for c in 0..cols {
                m.swap(p * cols + c, rank * cols + c);
            }
            let inv = f.inv(m[rank * cols + col]).expect("nonzero pivot");
            let pivot: Vec<_> = m[rank * cols..(rank + 1) * cols].iter().map(|&v| f.mul(v, inv)).collect();
            for r in rank + 1..rows {
                let c = m[r * cols + col];
                if !c.is_zero() {
                    f.axpy(&mut m[r * cols..(r + 1) * cols], f.neg(c), &pivot);
                }
            }
            rank += 1;
        }
        rank
    }

    /// Solves A·x = b for square invertible A.
    pub fn solve(&self, f: &FieldSpec, b: &[FieldElement]) -> Option<Vec<FieldElement>> {
        Some(self.inverse(f)?.mul_vec(f, b))
    }
}

/// x ↦ M·x + c
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineMap {
    pub matrix: Matrix,
    pub offset: Vec<FieldElement>,
}

impl AffineMap {
    pub fn identity(n: usize) -> Self {
        AffineMap { matrix: Matrix::identity(n), offset: vec![FieldElement::ZERO; n] }
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    pub fn apply(&self, f: &FieldSpec, x: &[FieldElement]) -> Vec<FieldElement> {
        let mut y = self.matrix.mul_vec(f, x);
        for (v, c) in y.iter_mut().zip(&self.offset) {
            *v = f.add(*v, *c);
        }
        y
    }

    /// self ∘ inner
    pub fn compose(&self, f: &FieldSpec, inner: &AffineMap) -> AffineMap {
        let matrix = self.matrix.mul(f, &inner.matrix);
        let offset = self.apply(f, &inner.offset);
        AffineMap { matrix, offset }
    }

    pub fn inverse(&self, f: &FieldSpec) -> Option<AffineMap> {
        let inv = self.matrix.inverse(f)?;
        let shifted = inv.mul_vec(f, &self.offset);
        Some(AffineMap { matrix: inv, offset: shifted.iter().map(|&v| f.neg(v)).collect() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(f: &FieldSpec, n: usize, rng: &mut ChaCha8Rng) -> Matrix {
        let rows = (0..n)
            .map(|_| (0..n).map(|_| f.element(rng.gen_range(0..f.order())).unwrap()).collect())
            .collect();
        Matrix::from_rows(rows)
    }

    #[test]
    fn inverse_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for q in [2u16, 7, 16, 256] {
            let f = FieldSpec::new(q).unwrap();
            let mut inverted = 0;
            for _ in 0..30 {
                let a = random_matrix(&f, 6, &mut rng);
                match a.inverse(&f) {
                    Some(inv) => {
                        inverted += 1;
                        assert_eq!(a.mul(&f, &inv), Matrix::identity(6));
                        assert!(a.is_invertible(&f));
                    }
                    None => assert!(a.rank(&f) < 6),
                }
            }
            assert!(inverted > 0);
        }
    }

    #[test]
    fn affine_inverse_and_compose() {
        let f = FieldSpec::gf16();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = loop {
            let m = random_matrix(&f, 5, &mut rng);
            if m.is_invertible(&f) {
                let offset = (0..5).map(|_| f.element(rng.gen_range(0..16)).unwrap()).collect();
                break AffineMap { matrix: m, offset };
            }
        };
        let inv = a.inverse(&f).unwrap();
        let x: Vec<_> = (0..5u16).map(|v| f.element(v * 3).unwrap()).collect();
        assert_eq!(inv.apply(&f, &a.apply(&f, &x)), x);
        assert_eq!(a.compose(&f, &inv), AffineMap::identity(5));
    }

    #[test]
    fn singular_is_detected() {
        let f = FieldSpec::new(5).unwrap();
        let e = |v| f.element(v).unwrap();
        let m = Matrix::from_rows(vec![vec![e(1), e(2)], vec![e(2), e(4)]]);
        assert!(m.inverse(&f).is_none());
        assert_eq!(m.rank(&f), 1);
    }
}
