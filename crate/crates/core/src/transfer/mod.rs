//! Transfer operators for the `n1`-row torus.
//!
//! Three routes compute the same partition function:
//!
//! * [`dense`]: the `2^n1 x 2^n1` matrix `A(x)` with `P = Tr A^n2`, kept for
//!   cross-checking at small widths.
//! * [`spin`]: the normalized operator `B = D K^{⊗n1}` acting on spin
//!   columns, with `D[s] = prod_i (1 + w s_i s_{i+1})` and the 2x2 kernel
//!   `K = [[1+w, 1-w], [1-w, 1+w]] / 2`, so that `Tr B^n2 = Z(w)`.
//! * [`polygon`]: the production kernel. Conjugating `B` by the Hadamard
//!   transform turns every `K` into `diag(1, w)` and `D` into a product of
//!   sparse bit-pair toggles, leaving an operator with nonnegative integer
//!   series entries. Its states are sets of occupied horizontal edges.
//!
//! [`numeric`] evaluates the free energy at real `(x, y)` by power iteration.

pub mod dense;
pub mod numeric;
pub mod polygon;
pub mod spin;

pub use dense::{build_dense, DenseTransferMatrix};
pub use numeric::{numeric_free_energy, FreeEnergyEstimate, NumericColumnOperators};
pub use polygon::{z_series, z_series_table, PolygonOperator, TraceMode};
pub use spin::{z_series_spin, ColumnOperators};

use crate::error::{Error, Result};

/// Width cap for the exact series route.
pub const MAX_SERIES_WIDTH: usize = 14;
/// Width cap for the dense matrix.
pub const MAX_DENSE_WIDTH: usize = 8;
/// Width cap for the numeric route.
pub const MAX_NUMERIC_WIDTH: usize = 24;

/// A column of `n1` spins; bit `i` set means spin `+1` in row `i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ColumnState(pub u32);

impl ColumnState {
    pub fn spin(self, row: usize) -> i64 {
        if self.0 >> row & 1 == 1 {
            1
        } else {
            -1
        }
    }

    /// `sum_i s_i s_{i+1}` around the column (cyclic).
    pub fn vertical_sum(self, n1: usize) -> i64 {
        (0..n1).map(|i| self.spin(i) * self.spin((i + 1) % n1)).sum()
    }

    /// `sum_i s_i t_i`.
    pub fn horizontal_sum(self, other: ColumnState, n1: usize) -> i64 {
        (0..n1).map(|i| self.spin(i) * other.spin(i)).sum()
    }

    pub fn magnetization(self, n1: usize) -> i64 {
        (0..n1).map(|i| self.spin(i)).sum()
    }
}

pub(crate) fn check_width(n1: usize, cap: usize, what: &str) -> Result<()> {
    if n1 == 0 {
        return Err(Error::Usage(format!("{what}: width must be >= 1")));
    }
    if n1 > cap {
        return Err(Error::Resource(format!("{what}: width {n1} exceeds the cap of {cap}")));
    }
    Ok(())
}
