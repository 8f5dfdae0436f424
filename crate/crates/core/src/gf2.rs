//! Dense GF(2) matrices.

use crate::pauli::Bits;

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BitMatrix {
    cols: usize,
    rows: Vec<Bits>,
}

/// Output of [`BitMatrix::row_reduce`].
#[derive(Clone, Debug)]
pub struct RowReduction {
    /// Reduced row-echelon form. Zero rows are kept at the bottom so the
    /// shape matches the input.
    pub reduced: BitMatrix,
    pub rank: usize,
    /// Pivot column of each of the first `rank` rows.
    pub pivots: Vec<usize>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        BitMatrix { cols, rows: vec![Bits::zeros(cols); rows] }
    }

    pub fn from_rows(cols: usize, rows: Vec<Bits>) -> Self {
        assert!(rows.iter().all(|r| r.len() == cols), "row length must equal column count");
        BitMatrix { cols, rows }
    }

    pub fn identity(n: usize) -> Self {
        BitMatrix::from_rows(n, (0..n).map(|i| Bits::from_indices(n, [i])).collect())
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &Bits {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Bits] {
        &self.rows
    }

    pub fn push_row(&mut self, row: Bits) {
        assert_eq!(row.len(), self.cols);
        self.rows.push(row);
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.rows[r].get(c)
    }

    pub fn row_reduce(&self) -> RowReduction {
        let mut rows = self.rows.clone();
        let mut pivots = Vec::new();
        let mut next = 0;
        for col in 0..self.cols {
            let Some(found) = (next..rows.len()).find(|&r| rows[r].get(col)) else {
                continue;
            };
            rows.swap(next, found);
            let pivot_row = rows[next].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r != next && row.get(col) {
                    row.xor_assign(&pivot_row);
                }
            }
            pivots.push(col);
            next += 1;
            if next == rows.len() {
                break;
            }
        }
        RowReduction { reduced: BitMatrix { cols: self.cols, rows }, rank: next, pivots }
    }

    pub fn rank(&self) -> usize {
        self.row_reduce().rank
    }

    /// Basis of the right null space `{v : M v = 0}`.
    pub fn null_space(&self) -> Vec<Bits> {
        let rr = self.row_reduce();
        let mut is_pivot = vec![false; self.cols];
        for &p in &rr.pivots {
            is_pivot[p] = true;
        }
        let mut basis = Vec::new();
        for free in (0..self.cols).filter(|&c| !is_pivot[c]) {
            let mut v = Bits::zeros(self.cols);
            v.set(free, true);
            for (r, &p) in rr.pivots.iter().enumerate() {
                if rr.reduced.rows[r].get(free) {
                    v.set(p, true);
                }
            }
            basis.push(v);
        }
        basis
    }

    /// Whether `v` lies in the row space.
    pub fn row_space_contains(&self, v: &Bits) -> bool {
        let rr = self.row_reduce();
        let mut rest = v.clone();
        for (r, &p) in rr.pivots.iter().enumerate() {
            if rest.get(p) {
                rest.xor_assign(&rr.reduced.rows[r]);
            }
        }
        rest.is_zero()
    }

    /// `M v` over GF(2).
    pub fn mul_vec(&self, v: &Bits) -> Bits {
        Bits::from_bools(&self.rows.iter().map(|r| r.dot(v)).collect::<Vec<_>>())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mat(rows: &[&str]) -> BitMatrix {
        let cols = rows[0].len();
        BitMatrix::from_rows(cols, rows.iter().map(|r| Bits::from_bit_str(r).unwrap()).collect())
    }

    #[test]
    fn identity_has_full_rank() {
        let rr = BitMatrix::identity(4).row_reduce();
        assert_eq!(rr.rank, 4);
        assert_eq!(rr.pivots, vec![0, 1, 2, 3]);
    }

    #[test]
    fn duplicate_rows() {
        assert_eq!(mat(&["1111", "1111"]).rank(), 1);
    }

    #[test]
    fn even_parity_check() {
        let h = mat(&["1111"]);
        assert_eq!(h.rank(), 1);
        let ns = h.null_space();
        assert_eq!(ns.len(), 3);
        for v in &ns {
            assert_eq!(v.count_ones() % 2, 0);
        }
    }

    #[test]
    fn reduction_is_idempotent_and_pivots_are_clean() {
        let m = mat(&["0110", "1100", "1010", "0001"]);
        let once = m.row_reduce();
        let twice = once.reduced.row_reduce();
        assert_eq!(once.reduced, twice.reduced);
        assert_eq!(once.rank, 3);
        for (r, &p) in once.pivots.iter().enumerate() {
            for other in 0..m.num_rows() {
                assert_eq!(once.reduced.get(other, p), other == r);
            }
        }
    }

    proptest! {
        #[test]
        fn row_space_is_preserved(bits in proptest::collection::vec(any::<bool>(), 7 * 11)) {
            let rows: Vec<Bits> = bits.chunks(11).map(Bits::from_bools).collect();
            let m = BitMatrix::from_rows(11, rows.clone());
            let rr = m.row_reduce();
            prop_assert!(rr.rank <= 7);
            let basis = BitMatrix::from_rows(11, rr.reduced.rows()[..rr.rank].to_vec());
            for r in &rows {
                prop_assert!(basis.row_space_contains(r));
            }
            for v in m.null_space() {
                prop_assert!(m.mul_vec(&v).is_zero());
            }
            prop_assert_eq!(m.null_space().len(), 11 - rr.rank);
        }
    }
}
