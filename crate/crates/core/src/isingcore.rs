//! Literal spin-matrix definitions: configuration weights, the brute-force
//! partition Laurent polynomial and its rewriting as the polygon polynomial
//! `Z(w)` with `x = (1+w)/(1-w)`.
//!
//! Indices wrap cyclically in both directions, so on a 1-wide or 2-wide
//! grid a site is its own (or a doubled) neighbour.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactmath::{scalar, UniPoly};

/// Largest site count the enumerator accepts (2^25 configurations).
pub const BRUTE_FORCE_MAX_SITES: usize = 25;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridSpec {
    pub n1: usize,
    pub n2: usize,
}

impl GridSpec {
    pub fn new(n1: usize, n2: usize) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(Error::Usage(format!("grid {n1}x{n2} needs both sides >= 1")));
        }
        Ok(GridSpec { n1, n2 })
    }

    /// Site count `N = n1 * n2`.
    pub fn sites(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn transposed(&self) -> Self {
        GridSpec { n1: self.n2, n2: self.n1 }
    }
}

/// An `n1 x n2` matrix of ±1 entries, stored row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpinMatrix {
    grid: GridSpec,
    entries: Vec<i8>,
}

impl SpinMatrix {
    pub fn new(grid: GridSpec, entries: Vec<i8>) -> Result<Self> {
        if entries.len() != grid.sites() {
            return Err(Error::Usage(format!("{} entries for a {}x{} grid", entries.len(), grid.n1, grid.n2)));
        }
        if entries.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::Usage("spin entries must be +1 or -1".into()));
        }
        Ok(SpinMatrix { grid, entries })
    }

    /// Spin configuration encoded by `bits`: bit `i*n2 + j` set means -1.
    pub fn from_bits(grid: GridSpec, bits: u64) -> Self {
        let entries = (0..grid.sites()).map(|k| if bits >> k & 1 == 1 { -1 } else { 1 }).collect();
        SpinMatrix { grid, entries }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn get(&self, i: usize, j: usize) -> i8 {
        self.entries[(i % self.grid.n1) * self.grid.n2 + j % self.grid.n2]
    }

    pub fn flipped(&self) -> Self {
        SpinMatrix { grid: self.grid, entries: self.entries.iter().map(|s| -s).collect() }
    }
}

/// Exponents `(e_x, e_y)` of the configuration weight `x^e_x y^e_y`.
pub fn weight_exponents(m: &SpinMatrix) -> (i64, i64) {
    let GridSpec { n1, n2 } = m.grid;
    let mut bond_sum = 0i64;
    let mut spin_sum = 0i64;
    for i in 0..n1 {
        for j in 0..n2 {
            let s = m.get(i, j) as i64;
            bond_sum += s * m.get(i + 1, j) as i64 + s * m.get(i, j + 1) as i64;
            spin_sum += s;
        }
    }
    debug_assert!(bond_sum % 2 == 0, "edge sum over the torus is even");
    (bond_sum / 2, spin_sum)
}

/// Bivariate Laurent polynomial `sum count * x^ex * y^ey`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LaurentTable {
    terms: BTreeMap<(i64, i64), BigInt>,
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    ex: i64,
    ey: i64,
    count: String,
}

#[derive(Serialize, Deserialize)]
struct TableRepr {
    terms: Vec<TermRepr>,
}

impl Serialize for LaurentTable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TableRepr { terms: self.terms.iter().map(|(&(ex, ey), c)| TermRepr { ex, ey, count: c.to_string() }).collect() }
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for LaurentTable {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = TableRepr::deserialize(d)?;
        let mut t = LaurentTable::default();
        for term in raw.terms {
            let c: BigInt = term.count.parse().map_err(serde::de::Error::custom)?;
            t.add(term.ex, term.ey, c);
        }
        Ok(t)
    }
}

impl LaurentTable {
    pub fn add(&mut self, ex: i64, ey: i64, count: BigInt) {
        if count.is_zero() {
            return;
        }
        let slot = self.terms.entry((ex, ey)).or_insert_with(BigInt::zero);
        *slot += count;
        if slot.is_zero() {
            self.terms.remove(&(ex, ey));
        }
    }

    pub fn count(&self, ex: i64, ey: i64) -> BigInt {
        self.terms.get(&(ex, ey)).cloned().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, i64, &BigInt)> {
        self.terms.iter().map(|(&(ex, ey), c)| (ex, ey, c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Sum of all counts, i.e. the value at `x = y = 1`.
    pub fn total(&self) -> BigInt {
        self.terms.values().sum()
    }

    /// Sets `y = 1`, collecting everything on `ey = 0`.
    pub fn at_y_one(&self) -> LaurentTable {
        let mut out = LaurentTable::default();
        for (&(ex, _), c) in &self.terms {
            out.add(ex, 0, c.clone());
        }
        out
    }

    /// Image under `ey -> -ey` (global spin flip).
    pub fn flip_y(&self) -> LaurentTable {
        let mut out = LaurentTable::default();
        for (&(ex, ey), c) in &self.terms {
            out.add(ex, -ey, c.clone());
        }
        out
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.terms
            .iter()
            .map(|(&(ex, ey), c)| {
                scalar::to_f64(&scalar::from_bigint(c.clone())) * x.powi(ex as i32) * y.powi(ey as i32)
            })
            .sum()
    }
}

/// Enumerates all `2^N` spin matrices of the grid.
///
/// The top bits of the configuration index split the work across threads;
/// inside a chunk a Gray code flips one spin per step and updates both
/// exponents from that spin's neighbours only.
pub fn brute_partition(grid: GridSpec) -> Result<LaurentTable> {
    let n = grid.sites();
    if n > BRUTE_FORCE_MAX_SITES {
        return Err(Error::Resource(format!("brute force over {n} sites exceeds the cap of {BRUTE_FORCE_MAX_SITES}")));
    }
    let GridSpec { n1, n2 } = grid;
    let site = |i: usize, j: usize| (i % n1) * n2 + j % n2;
    // For each site, the far endpoints of every bond term touching it once.
    let mut neighbours: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n1 {
        for j in 0..n2 {
            let a = site(i, j);
            for b in [site(i + 1, j), site(i, j + 1)] {
                if a != b {
                    neighbours[a].push(b);
                    neighbours[b].push(a);
                }
            }
        }
    }
    let top_bits = n.min(6);
    let low_bits = n - top_bits;
    let width = 2 * n + 1;
    let counts = (0u64..1 << top_bits)
        .into_par_iter()
        .map(|high| {
            let mut hist = vec![0u64; width * width];
            let start = SpinMatrix::from_bits(grid, high << low_bits);
            let (mut ex, mut ey) = weight_exponents(&start);
            let mut spins = start.entries;
            hist[(ex + n as i64) as usize * width + (ey + n as i64) as usize] += 1;
            for step in 1u64..1 << low_bits {
                let k = step.trailing_zeros() as usize;
                let s = spins[k] as i64;
                let around: i64 = neighbours[k].iter().map(|&o| spins[o] as i64).sum();
                ex -= s * around;
                ey -= 2 * s;
                spins[k] = -spins[k];
                hist[(ex + n as i64) as usize * width + (ey + n as i64) as usize] += 1;
            }
            hist
        })
        .reduce(
            || vec![0u64; width * width],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let mut table = LaurentTable::default();
    for (idx, c) in counts.into_iter().enumerate() {
        if c > 0 {
            let ex = (idx / width) as i64 - n as i64;
            let ey = (idx % width) as i64 - n as i64;
            table.add(ex, ey, BigInt::from(c));
        }
    }
    Ok(table)
}

fn binomial_row(n: usize) -> Vec<BigInt> {
    let mut row = vec![BigInt::one()];
    for k in 0..n {
        let next = &row[k] * BigInt::from(n - k) / BigInt::from(k + 1);
        row.push(next);
    }
    row
}

/// Rewrites `P(x)` (already at `y = 1`) as `Z(w) = P(x) (1-w^2)^N / 2^N`.
///
/// Each monomial `x^e` becomes `(1+w)^(N+e) (1-w)^(N-e)`, a polynomial as
/// long as `|e| <= N`; the final division by `2^N` must be exact.
pub fn partition_to_z(p: &LaurentTable, grid: GridSpec) -> Result<UniPoly> {
    let n = grid.sites() as i64;
    let mut acc = vec![BigInt::zero(); 2 * n as usize + 1];
    for (ex, ey, c) in p.terms() {
        if ey != 0 {
            return Err(Error::Usage(format!("term with y-exponent {ey}; set y = 1 first")));
        }
        if ex.abs() > n {
            return Err(Error::Internal(format!("x-exponent {ex} exceeds the site count {n}")));
        }
        let plus = binomial_row((n + ex) as usize);
        let minus = binomial_row((n - ex) as usize);
        for (i, a) in plus.iter().enumerate() {
            for (j, b) in minus.iter().enumerate() {
                let term = a * b * c;
                if j % 2 == 0 {
                    acc[i + j] += term;
                } else {
                    acc[i + j] -= term;
                }
            }
        }
    }
    let scale = BigInt::one() << (n as usize);
    let mut coeffs = Vec::with_capacity(acc.len());
    for (k, a) in acc.into_iter().enumerate() {
        if !(&a % &scale).is_zero() || a.is_negative() {
            return Err(Error::Internal(format!("coefficient of w^{k} is not a nonnegative multiple of 2^{n}: {a}")));
        }
        coeffs.push(scalar::from_bigint(a / &scale));
    }
    Ok(UniPoly::new(coeffs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn g(n1: usize, n2: usize) -> GridSpec {
        GridSpec::new(n1, n2).unwrap()
    }

    #[test]
    fn single_site_weight() {
        let m = SpinMatrix::new(g(1, 1), vec![1]).unwrap();
        assert_eq!(weight_exponents(&m), (1, 1));
    }

    #[test]
    fn two_by_two_weights() {
        let up = SpinMatrix::new(g(2, 2), vec![1; 4]).unwrap();
        assert_eq!(weight_exponents(&up), (4, 4));
        let checker = SpinMatrix::new(g(2, 2), vec![-1, 1, 1, -1]).unwrap();
        assert_eq!(weight_exponents(&checker), (-4, 0));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(GridSpec::new(0, 3).is_err());
        assert!(SpinMatrix::new(g(1, 2), vec![1, 0]).is_err());
        assert!(matches!(brute_partition(g(5, 6)), Err(Error::Resource(_))));
    }

    #[test]
    fn brute_force_small_grids() {
        let p = brute_partition(g(1, 1)).unwrap();
        assert_eq!(p.count(1, 1), BigInt::from(1));
        assert_eq!(p.count(1, -1), BigInt::from(1));
        assert_eq!(p.len(), 2);

        let p = brute_partition(g(2, 2)).unwrap().at_y_one();
        assert_eq!(p.len(), 3);
        assert_eq!(p.count(4, 0), BigInt::from(2));
        assert_eq!(p.count(0, 0), BigInt::from(12));
        assert_eq!(p.count(-4, 0), BigInt::from(2));
    }

    #[test]
    fn z_polynomials_of_small_grids() {
        let z = partition_to_z(&brute_partition(g(1, 1)).unwrap().at_y_one(), g(1, 1)).unwrap();
        assert_eq!(z, UniPoly::from_ints(&[1, 2, 1]));
        let z = partition_to_z(&brute_partition(g(2, 2)).unwrap().at_y_one(), g(2, 2)).unwrap();
        assert_eq!(z, UniPoly::from_ints(&[1, 0, 4, 0, 22, 0, 4, 0, 1]));
        assert!(matches!(partition_to_z(&brute_partition(g(1, 1)).unwrap(), g(1, 1)), Err(Error::Usage(_))));
    }

    #[test]
    fn gray_code_matches_direct_enumeration() {
        for (n1, n2) in [(3, 3), (2, 5), (1, 7), (3, 4)] {
            let grid = g(n1, n2);
            let mut direct = LaurentTable::default();
            for bits in 0..1u64 << grid.sites() {
                let (ex, ey) = weight_exponents(&SpinMatrix::from_bits(grid, bits));
                direct.add(ex, ey, BigInt::one());
            }
            assert_eq!(brute_partition(grid).unwrap(), direct);
        }
    }

    #[test]
    fn table_json_layout() {
        let p = brute_partition(g(1, 1)).unwrap();
        let j = serde_json::to_string(&p).unwrap();
        assert_eq!(j, r#"{"terms":[{"ex":1,"ey":-1,"count":"1"},{"ex":1,"ey":1,"count":"1"}]}"#);
        assert_eq!(serde_json::from_str::<LaurentTable>(&j).unwrap(), p);
    }

    #[test]
    fn z_invariants_on_small_tori() {
        for n1 in 1..=5 {
            for n2 in 1..=5 {
                let grid = g(n1, n2);
                let p = brute_partition(grid).unwrap();
                assert_eq!(p.total(), BigInt::one() << grid.sites());
                assert_eq!(p.flip_y(), p);
                let z = partition_to_z(&p.at_y_one(), grid).unwrap();
                assert_eq!(z.coeff(0), scalar::int(1));
                assert!(z.degree().unwrap() <= 2 * grid.sites());
                for e in [1usize, 3] {
                    if n1 > e && n2 > e {
                        assert_eq!(z.coeff(e), scalar::int(0), "odd w^{e} on {n1}x{n2}");
                    }
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn flip_preserves_bonds_and_negates_magnetization(
            n1 in 1usize..6, n2 in 1usize..6, bits in any::<u64>()
        ) {
            let m = SpinMatrix::from_bits(g(n1, n2), bits);
            let (ex, ey) = weight_exponents(&m);
            let (fx, fy) = weight_exponents(&m.flipped());
            prop_assert_eq!(ex, fx);
            prop_assert_eq!(ey, -fy);
            prop_assert!(ex.unsigned_abs() as usize <= n1 * n2);
        }
    }
}
