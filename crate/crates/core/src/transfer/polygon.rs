//! Production kernel for `Z_{n1,n2}(w)`.
//!
//! Writing the 2x2 kernel as `K = H diag(1, w) H` with the normalized
//! Hadamard matrix `H`, and conjugating the whole column operator by
//! `H^{⊗n1}`, gives `Z = Tr (T Λ)^n2` where
//!
//! * `Λ` multiplies state `t` by `w^popcount(t)`,
//! * `T = prod_i (1 + w X_i X_{i+1})` toggles the bit pair of each vertical
//!   bond.
//!
//! A state is the set of rows whose horizontal edge is occupied, and every
//! entry is a series with nonnegative integer coefficients: the operator
//! builds even subgraphs column by column. Arithmetic is done modulo
//! `2^128` when the final coefficients provably fit (every coefficient of
//! `w^k` is at most `C(2N, k)`), and in big integers otherwise.

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;

use super::{check_width, MAX_SERIES_WIDTH};
use crate::error::{Error, Result};
use crate::exactmath::{scalar, TruncSeries};

/// How the trace over start states is organised.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum TraceMode {
    /// One propagation per basis state.
    Full,
    /// One propagation per orbit of the dihedral group acting on rows,
    /// weighted by orbit size.
    #[default]
    Orbits,
}

trait Coeff: Clone + Send + Sync {
    fn zero() -> Self;
    fn one() -> Self;
    fn add(&mut self, other: &Self);
    fn mul_small(&self, k: u64) -> Self;
    fn into_bigint(self) -> BigInt;
}

impl Coeff for u128 {
    fn zero() -> Self {
        0
    }
    fn one() -> Self {
        1
    }
    #[inline(always)]
    fn add(&mut self, other: &Self) {
        *self = self.wrapping_add(*other);
    }
    fn mul_small(&self, k: u64) -> Self {
        self.wrapping_mul(k as u128)
    }
    fn into_bigint(self) -> BigInt {
        BigInt::from(self)
    }
}

impl Coeff for BigInt {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        num_traits::One::one()
    }
    fn add(&mut self, other: &Self) {
        *self += other;
    }
    fn mul_small(&self, k: u64) -> Self {
        self * BigInt::from(k)
    }
    fn into_bigint(self) -> BigInt {
        self
    }
}

/// The conjugated column operator for width `n1`, truncated at `order`.
#[derive(Clone, Debug)]
pub struct PolygonOperator {
    n1: usize,
    order: usize,
    /// Bit masks toggled by each vertical bond (zero for the 1-row self bond).
    masks: Vec<usize>,
    /// For each popcount parity, the disjoint index pairs `(t, t ^ mask)`
    /// of each nonzero mask.
    pairs: [Vec<Vec<(u32, u32)>>; 2],
}

impl PolygonOperator {
    pub fn new(n1: usize, order: usize) -> Result<Self> {
        check_width(n1, MAX_SERIES_WIDTH, "series transfer operator")?;
        let masks: Vec<usize> = (0..n1).map(|i| (1 << i) ^ (1 << ((i + 1) % n1))).collect();
        let mut pairs = [Vec::new(), Vec::new()];
        for (parity, slot) in pairs.iter_mut().enumerate() {
            *slot = masks
                .iter()
                .map(|&m| {
                    (0..1u32 << n1)
                        .filter(|&t| (t.count_ones() as usize) % 2 == parity && (t as usize) < (t as usize ^ m))
                        .map(|t| (t, t ^ m as u32))
                        .collect()
                })
                .collect();
        }
        Ok(PolygonOperator { n1, order, masks, pairs })
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// `v <- T Λ v` restricted to states of the given popcount parity.
    fn step<C: Coeff>(&self, v: &mut [C], parity: usize) {
        let width = self.order + 1;
        let r = self.order;
        for (t, entry) in v.chunks_exact_mut(width).enumerate() {
            if (t.count_ones() as usize) % 2 != parity {
                continue;
            }
            let p = t.count_ones() as usize;
            if p == 0 {
                continue;
            }
            if p > r {
                entry.iter_mut().for_each(|c| *c = C::zero());
                continue;
            }
            for k in (p..=r).rev() {
                entry[k] = entry[k - p].clone();
            }
            entry[..p].iter_mut().for_each(|c| *c = C::zero());
        }
        for (bond, &mask) in self.masks.iter().enumerate() {
            if mask == 0 {
                // (1 + w) on every state
                for entry in v.chunks_exact_mut(width) {
                    for k in (1..=r).rev() {
                        let prev = entry[k - 1].clone();
                        entry[k].add(&prev);
                    }
                }
                continue;
            }
            for &(a, b) in &self.pairs[parity][bond] {
                let (lo, hi) = v.split_at_mut(b as usize * width);
                let ea = &mut lo[a as usize * width..(a as usize + 1) * width];
                let eb = &mut hi[..width];
                for k in (1..=r).rev() {
                    let (pa, pb) = (ea[k - 1].clone(), eb[k - 1].clone());
                    ea[k].add(&pb);
                    eb[k].add(&pa);
                }
            }
        }
    }

    /// Diagonal entries `(T Λ)^j [start, start]` for `j = 1..=steps`.
    fn diagonal_run<C: Coeff>(&self, start: usize, steps: usize) -> Vec<Vec<C>> {
        let width = self.order + 1;
        let parity = start.count_ones() as usize % 2;
        let mut v = vec![C::zero(); width << self.n1];
        v[start * width] = C::one();
        (0..steps)
            .map(|_| {
                self.step(&mut v, parity);
                v[start * width..(start + 1) * width].to_vec()
            })
            .collect()
    }

    /// Start states with their multiplicities for the chosen trace mode.
    pub fn start_states(&self, mode: TraceMode) -> Vec<(usize, u64)> {
        let dim = 1usize << self.n1;
        match mode {
            TraceMode::Full => (0..dim).map(|t| (t, 1)).collect(),
            TraceMode::Orbits => {
                let mut weight = vec![0u64; dim];
                for t in 0..dim {
                    weight[dihedral_canonical(t, self.n1)] += 1;
                }
                weight.into_iter().enumerate().filter(|&(_, w)| w > 0).collect()
            }
        }
    }

    fn traces<C: Coeff>(&self, steps: usize, mode: TraceMode) -> Vec<Vec<C>> {
        let width = self.order + 1;
        let zero = || vec![vec![C::zero(); width]; steps];
        self.start_states(mode)
            .into_par_iter()
            .map(|(start, weight)| {
                let mut run = self.diagonal_run::<C>(start, steps);
                if weight != 1 {
                    for entry in run.iter_mut().flatten() {
                        *entry = entry.mul_small(weight);
                    }
                }
                run
            })
            .reduce(zero, |mut acc, run| {
                for (a, r) in acc.iter_mut().zip(&run) {
                    for (x, y) in a.iter_mut().zip(r) {
                        x.add(y);
                    }
                }
                acc
            })
    }
}

/// Canonical representative of `t` under rotations and reversal of the
/// `n1` row bits.
pub fn dihedral_canonical(t: usize, n1: usize) -> usize {
    let full = (1usize << n1) - 1;
    let rotate = |x: usize, k: usize| ((x << k) | (x >> (n1 - k))) & full;
    let reversed = (0..n1).fold(0, |acc, i| acc | ((t >> i & 1) << (n1 - 1 - i)));
    (0..n1).flat_map(|k| [rotate(t, k), rotate(reversed, k)]).min().unwrap()
}

/// True when every coefficient through `order` of a torus with `sites`
/// sites is below `2^127`, so that wrapping `u128` arithmetic is exact.
fn fits_u128(sites: usize, order: usize) -> bool {
    let edges = 2 * sites;
    let mut binom = BigInt::from(1);
    let limit = BigInt::from(1) << 127;
    for k in 0..order.min(edges) {
        binom = binom * BigInt::from(edges - k) / BigInt::from(k + 1);
        if binom >= limit {
            return false;
        }
    }
    true
}

/// `Z_{n1,n2}(w)` for every `n2 = 1..=n2_max` from a single propagation
/// per start state. Entry `j` of the result belongs to `n2 = j + 1`.
pub fn z_series_table(n1: usize, n2_max: usize, order: usize, mode: TraceMode) -> Result<Vec<TruncSeries>> {
    if n2_max == 0 {
        return Err(Error::Usage("n2 must be >= 1".into()));
    }
    let op = PolygonOperator::new(n1, order)?;
    let raw: Vec<Vec<BigInt>> = if fits_u128(n1 * n2_max, order) {
        op.traces::<u128>(n2_max, mode)
            .into_iter()
            .map(|row| row.into_iter().map(Coeff::into_bigint).collect())
            .collect()
    } else {
        op.traces::<BigInt>(n2_max, mode)
    };
    raw.into_iter().map(|row| TruncSeries::new(order, row.into_iter().map(scalar::from_bigint).collect())).collect()
}

/// First `order + 1` coefficients of `Z_{n1,n2}(w)`.
pub fn z_series(n1: usize, n2: usize, order: usize) -> Result<TruncSeries> {
    if order > 2 * n1 * n2 {
        return Err(Error::Usage(format!("order {order} exceeds the edge count {} of a {n1}x{n2} torus", 2 * n1 * n2)));
    }
    let mut table = z_series_table(n1, n2, order, TraceMode::Orbits)?;
    Ok(table.pop().expect("n2 >= 1"))
}

/// Coefficient of `w^k` as a machine integer, for quick checks.
pub fn coefficient_u128(s: &TruncSeries, k: usize) -> Option<u128> {
    let c = s.coeff(k);
    c.is_integer().then(|| c.to_integer().to_u128()).flatten()
}
