//! The dense transfer matrix `A(x)` in `u = x^(1/2)` exponent form.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::{check_width, ColumnState, MAX_DENSE_WIDTH};
use crate::error::{Error, Result};
use crate::isingcore::LaurentTable;

/// `A[s][t] = u^(V(s) + H(s,t))` with `V` the in-column bond sum of `s` and
/// `H` the bond sum between columns `s` and `t`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DenseTransferMatrix {
    n1: usize,
    exponents: Vec<i64>,
}

pub fn build_dense(n1: usize) -> Result<DenseTransferMatrix> {
    check_width(n1, MAX_DENSE_WIDTH, "dense transfer matrix")?;
    let dim = 1usize << n1;
    let mut exponents = Vec::with_capacity(dim * dim);
    for s in 0..dim as u32 {
        let v = ColumnState(s).vertical_sum(n1);
        for t in 0..dim as u32 {
            exponents.push(v + ColumnState(s).horizontal_sum(ColumnState(t), n1));
        }
    }
    Ok(DenseTransferMatrix { n1, exponents })
}

impl DenseTransferMatrix {
    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn dim(&self) -> usize {
        1 << self.n1
    }

    /// Exponent of `u` in entry `(s, t)`.
    pub fn exponent(&self, s: usize, t: usize) -> i64 {
        self.exponents[s * self.dim() + t]
    }

    /// `Tr A^n2` as a Laurent polynomial in `x` (stored with `ey = 0`).
    pub fn trace_power(&self, n2: usize) -> Result<LaurentTable> {
        if n2 == 0 {
            return Err(Error::Usage("matrix power must be >= 1".into()));
        }
        let dim = self.dim();
        let mut trace: BTreeMap<i64, BigInt> = BTreeMap::new();
        for start in 0..dim {
            // row vector e_start * A^k, entries as exponent -> count maps
            let mut row: Vec<BTreeMap<i64, BigInt>> = vec![BTreeMap::new(); dim];
            row[start].insert(0, BigInt::one());
            for _ in 0..n2 {
                let mut next: Vec<BTreeMap<i64, BigInt>> = vec![BTreeMap::new(); dim];
                for (s, poly) in row.iter().enumerate() {
                    for (&e, c) in poly {
                        for (t, slot) in next.iter_mut().enumerate() {
                            *slot.entry(e + self.exponent(s, t)).or_insert_with(BigInt::zero) += c;
                        }
                    }
                }
                row = next;
            }
            for (&e, c) in &row[start] {
                *trace.entry(e).or_insert_with(BigInt::zero) += c;
            }
        }
        let mut out = LaurentTable::default();
        for (e, c) in trace {
            if e % 2 != 0 {
                return Err(Error::Internal(format!("odd power u^{e} survived in the trace")));
            }
            out.add(e / 2, 0, c);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn width_one_matrix() {
        let a = build_dense(1).unwrap();
        assert_eq!(a.exponents, vec![2, 0, 0, 2]);
        let tr = a.trace_power(1).unwrap();
        assert_eq!(tr.count(1, 0), BigInt::from(2));
        assert_eq!(tr.len(), 1);
    }

    #[test]
    fn two_by_two_trace() {
        let tr = build_dense(2).unwrap().trace_power(2).unwrap();
        assert_eq!(tr.count(4, 0), BigInt::from(2));
        assert_eq!(tr.count(0, 0), BigInt::from(12));
        assert_eq!(tr.count(-4, 0), BigInt::from(2));
        assert_eq!(tr.len(), 3);
    }

    #[test]
    fn entries_are_bounded() {
        for n1 in 1..=5 {
            let a = build_dense(n1).unwrap();
            assert!(a.exponents.iter().all(|e| e.abs() <= 2 * n1 as i64));
            assert_eq!(a.trace_power(3).unwrap().total(), BigInt::one() << (3 * n1));
        }
        assert!(matches!(build_dense(9), Err(Error::Resource(_))));
    }
}
