//! The normalized operator `B = D K^{⊗n1}` on spin columns, exact in `w`.
//!
//! `K` carries a factor 1/2 per row; entries are kept as integer
//! numerators and the accumulated power of two is divided out once at the
//! end of a trace.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::{check_width, ColumnState, MAX_DENSE_WIDTH};
use crate::error::{Error, Result};
use crate::exactmath::{scalar, TruncSeries};

#[derive(Clone, Debug)]
pub struct ColumnOperators {
    n1: usize,
    order: usize,
    /// `D[s]` as integer coefficients `0..=order`.
    diagonal: Vec<Vec<BigInt>>,
}

type IntSeries = Vec<BigInt>;

impl ColumnOperators {
    pub fn new(n1: usize, order: usize) -> Result<Self> {
        Self::with_row_rotation(n1, order, 0)
    }

    /// Builds `D` with rows relabelled `i -> (i + shift) mod n1`. The trace
    /// must not depend on the shift.
    pub fn with_row_rotation(n1: usize, order: usize, shift: usize) -> Result<Self> {
        check_width(n1, MAX_DENSE_WIDTH, "spin-basis operator")?;
        let diagonal = (0..1u32 << n1)
            .map(|s| {
                let state = ColumnState(s);
                let mut d = vec![BigInt::zero(); order + 1];
                d[0] = BigInt::one();
                for i in 0..n1 {
                    let a = (i + shift) % n1;
                    let b = (i + 1 + shift) % n1;
                    let sign = state.spin(a) * state.spin(b);
                    // multiply by (1 + sign * w)
                    for k in (1..=order).rev() {
                        let prev = d[k - 1].clone();
                        d[k] += prev * sign;
                    }
                }
                d
            })
            .collect();
        Ok(ColumnOperators { n1, order, diagonal })
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn diagonal(&self, s: usize) -> TruncSeries {
        TruncSeries::new(self.order, self.diagonal[s].iter().cloned().map(scalar::from_bigint).collect())
            .expect("length matches order")
    }

    fn mul_series(&self, a: &IntSeries, b: &IntSeries) -> IntSeries {
        let mut out = vec![BigInt::zero(); self.order + 1];
        for (i, x) in a.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b[..=self.order - i].iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        out
    }

    /// `v <- 2^n1 K^{⊗n1} v`, one butterfly sweep per row.
    fn kernel_sweeps(&self, v: &mut [IntSeries]) {
        let r = self.order;
        for row in 0..self.n1 {
            let bit = 1usize << row;
            for s in 0..v.len() {
                if s & bit != 0 {
                    continue;
                }
                let (a, b) = (v[s].clone(), v[s | bit].clone());
                // (1+w)a + (1-w)b and (1-w)a + (1+w)b
                let mut na = vec![BigInt::zero(); r + 1];
                let mut nb = vec![BigInt::zero(); r + 1];
                for k in 0..=r {
                    na[k] = &a[k] + &b[k];
                    nb[k] = &a[k] + &b[k];
                    if k > 0 {
                        na[k] += &a[k - 1] - &b[k - 1];
                        nb[k] += &b[k - 1] - &a[k - 1];
                    }
                }
                v[s] = na;
                v[s | bit] = nb;
            }
        }
    }

    /// `v <- 2^n1 B v`.
    fn apply_scaled(&self, v: &mut [IntSeries]) {
        self.kernel_sweeps(v);
        for (s, entry) in v.iter_mut().enumerate() {
            *entry = self.mul_series(&self.diagonal[s], entry);
        }
    }

    /// `Tr B^n2` truncated at the operator's order.
    pub fn trace_power(&self, n2: usize) -> Result<TruncSeries> {
        if n2 == 0 {
            return Err(Error::Usage("operator power must be >= 1".into()));
        }
        let dim = 1usize << self.n1;
        let mut total = vec![BigInt::zero(); self.order + 1];
        for start in 0..dim {
            let mut v = vec![vec![BigInt::zero(); self.order + 1]; dim];
            v[start][0] = BigInt::one();
            for _ in 0..n2 {
                self.apply_scaled(&mut v);
            }
            for (t, c) in total.iter_mut().zip(&v[start]) {
                *t += c;
            }
        }
        let scale = BigInt::one() << (self.n1 * n2);
        let coeffs = total
            .into_iter()
            .map(|c| {
                if (&c % &scale).is_zero() {
                    Ok(scalar::from_bigint(c / &scale))
                } else {
                    Err(Error::Internal(format!("trace numerator {c} not divisible by 2^{}", self.n1 * n2)))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        TruncSeries::new(self.order, coeffs)
    }
}

/// `Z_{n1,n2}(w)` through `w^order` via the literal spin-basis factorization.
pub fn z_series_spin(n1: usize, n2: usize, order: usize) -> Result<TruncSeries> {
    ColumnOperators::new(n1, order)?.trace_power(n2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_factor() {
        let ops = ColumnOperators::new(3, 3).unwrap();
        // all spins equal: (1+w)^3
        assert_eq!(ops.diagonal(0b111), TruncSeries::from_ints(3, &[1, 3, 3, 1]).unwrap());
        // one spin flipped: two unlike bonds, one like
        assert_eq!(ops.diagonal(0b001), TruncSeries::from_ints(3, &[1, -1, -1, 1]).unwrap());
    }

    #[test]
    fn small_traces() {
        assert_eq!(z_series_spin(1, 1, 2).unwrap(), TruncSeries::from_ints(2, &[1, 2, 1]).unwrap());
        assert_eq!(z_series_spin(2, 2, 8).unwrap(), TruncSeries::from_ints(8, &[1, 0, 4, 0, 22, 0, 4, 0, 1]).unwrap());
    }

    #[test]
    fn rotation_of_rows_leaves_trace_unchanged() {
        for n1 in 2..=5 {
            let base = ColumnOperators::new(n1, 10).unwrap().trace_power(4).unwrap();
            for shift in 1..n1 {
                let rotated = ColumnOperators::with_row_rotation(n1, 10, shift).unwrap();
                assert_eq!(rotated.trace_power(4).unwrap(), base, "n1={n1} shift={shift}");
            }
        }
    }
}
