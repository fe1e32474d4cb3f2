//! Dense GF(2) matrices of dimension at most 64, one `u64` per row
//! (bit `c` of row `r` is entry `(r, c)`).

use smallvec::{smallvec, SmallVec};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Matrix {
    pub dim: usize,
    rows: SmallVec<[u64; 8]>,
}

impl Matrix {
    pub fn zero(dim: usize) -> Self {
        assert!(dim <= 64, "GF(2) matrices are limited to 64 columns");
        Matrix {
            dim,
            rows: smallvec![0; dim],
        }
    }

    pub fn rows(&self) -> &[u64] {
        &self.rows
    }

    /// Right-multiplies by the identity with `column` added to the last
    /// column (bits at or beyond `dim - 1` are ignored).
    pub fn mul_last_column(&mut self, column: u64) {
        let last = self.dim - 1;
        let column = column & !(u64::MAX << last);
        for row in self.rows.iter_mut() {
            if (*row & column).count_ones() % 2 == 1 {
                *row ^= 1 << last;
            }
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zero(dim);
        for i in 0..dim {
            m.rows[i] = 1 << i;
        }
        m
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        (self.rows[r] >> c) & 1 == 1
    }

    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        if v {
            self.rows[r] |= 1 << c;
        } else {
            self.rows[r] &= !(1 << c);
        }
    }

    pub fn flip(&mut self, r: usize, c: usize) {
        self.rows[r] ^= 1 << c;
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.dim, other.dim);
        let mut out = Matrix::zero(self.dim);
        for (r, &row) in self.rows().iter().enumerate() {
            let mut bits = row;
            let mut acc = 0u64;
            while bits != 0 {
                let k = bits.trailing_zeros() as usize;
                acc ^= other.rows[k];
                bits &= bits - 1;
            }
            out.rows[r] = acc;
        }
        out
    }
}

/// Determinant over GF(2) by Gaussian elimination.
pub fn det(m: &Matrix) -> bool {
    let n = m.dim;
    let mut rows = m.rows.clone();
    for col in 0..n {
        let Some(p) = (col..n).find(|&r| (rows[r] >> col) & 1 == 1) else {
            return false;
        };
        rows.swap(col, p);
        let pivot = rows[col];
        for row in rows.iter_mut().skip(col + 1) {
            if (*row >> col) & 1 == 1 {
                *row ^= pivot;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_det(m: &Matrix) -> bool {
        // parity of permutations with all entries set
        fn go(m: &Matrix, row: usize, used: u64) -> bool {
            if row == m.dim {
                return true;
            }
            let mut acc = false;
            for c in 0..m.dim {
                if used >> c & 1 == 0 && m.get(row, c) {
                    acc ^= go(m, row + 1, used | 1 << c);
                }
            }
            acc
        }
        go(m, 0, 0)
    }

    #[test]
    fn det_matches_permutation_expansion() {
        for dim in 1..=3 {
            for code in 0u64..(1 << (dim * dim)) {
                let mut m = Matrix::zero(dim);
                for i in 0..dim * dim {
                    m.set(i / dim, i % dim, code >> i & 1 == 1);
                }
                assert_eq!(det(&m), brute_det(&m), "dim {dim} code {code}");
            }
        }
    }

    #[test]
    fn identity_and_product() {
        let i = Matrix::identity(5);
        assert!(det(&i));
        let mut a = Matrix::identity(5);
        a.set(0, 3, true);
        assert_eq!(a.mul(&i), a);
        assert!(det(&a.mul(&a)));
        assert!(!det(&Matrix::zero(4)));
    }

    #[test]
    fn last_column_update_is_a_product() {
        let dim = 4;
        for code in [0u64, 0x1234, 0xbeef, 0xffff] {
            let mut m = Matrix::zero(dim);
            for i in 0..dim * dim {
                m.set(i / dim, i % dim, code >> i & 1 == 1);
            }
            for column in 0u64..8 {
                let mut r2 = Matrix::identity(dim);
                for i in 0..dim - 1 {
                    r2.set(i, dim - 1, column >> i & 1 == 1);
                }
                let mut fast = m.clone();
                fast.mul_last_column(column);
                assert_eq!(fast, m.mul(&r2));
            }
        }
    }
}
