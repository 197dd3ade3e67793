//! Integral LLL reduction (δ = 3/4) with exact Gram–Schmidt data kept as
//! integers: `d_i` are the leading Gram minors and `λ_{k,j} = d_j μ_{k,j}`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};

/// Reduced basis together with the Gram determinant of the lattice.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LllOutput {
    pub basis: Vec<Vec<BigInt>>,
    /// `det(B Bᵀ)`, the squared covolume.
    pub gram_det: BigInt,
}

fn dot(a: &[BigInt], b: &[BigInt]) -> BigInt {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Nearest integer to `n/d` for `d > 0`, ties rounded up.
fn round_div(n: &BigInt, d: &BigInt) -> BigInt {
    let two = BigInt::from(2);
    (n * &two + d).div_floor(&(d * &two))
}

struct State {
    b: Vec<Vec<BigInt>>,
    // 1-based: d[0] = 1, d[i] for vector i
    d: Vec<BigInt>,
    lambda: Vec<Vec<BigInt>>,
}

impl State {
    fn red(&mut self, k: usize, l: usize) {
        if (&self.lambda[k][l] << 1u32).abs() <= self.d[l] {
            return;
        }
        let q = round_div(&self.lambda[k][l], &self.d[l]);
        let bl = self.b[l - 1].clone();
        for (x, y) in self.b[k - 1].iter_mut().zip(&bl) {
            *x -= &q * y;
        }
        self.lambda[k][l] -= &q * &self.d[l];
        for i in 1..l {
            let t = &q * &self.lambda[l][i];
            self.lambda[k][i] -= t;
        }
    }

    fn swap(&mut self, k: usize, k_max: usize) {
        self.b.swap(k - 1, k - 2);
        for j in 1..k - 1 {
            let t = self.lambda[k][j].clone();
            self.lambda[k][j] = std::mem::replace(&mut self.lambda[k - 1][j], t);
        }
        let lam = self.lambda[k][k - 1].clone();
        let big_b = (&self.d[k - 2] * &self.d[k] + &lam * &lam) / &self.d[k - 1];
        for i in k + 1..=k_max {
            let t = self.lambda[i][k].clone();
            self.lambda[i][k] = (&self.d[k] * &self.lambda[i][k - 1] - &lam * &t) / &self.d[k - 1];
            self.lambda[i][k - 1] = (&big_b * &t + &lam * &self.lambda[i][k]) / &self.d[k];
        }
        self.d[k - 1] = big_b;
    }
}

/// LLL-reduces the rows of `basis`.
pub fn lll_reduce(basis: &[Vec<BigInt>]) -> Result<LllOutput> {
    let n = basis.len();
    if n == 0 {
        return Err(Error::Usage("empty basis".into()));
    }
    let m = basis[0].len();
    if basis.iter().any(|r| r.len() != m) {
        return Err(Error::Usage("basis rows have different lengths".into()));
    }
    let mut st =
        State { b: basis.to_vec(), d: vec![BigInt::zero(); n + 1], lambda: vec![vec![BigInt::zero(); n + 1]; n + 1] };
    st.d[0] = BigInt::from(1);
    st.d[1] = dot(&st.b[0], &st.b[0]);
    if st.d[1].is_zero() {
        return Err(Error::Usage("basis rows are linearly dependent".into()));
    }
    let (mut k, mut k_max) = (2usize, 1usize);
    while k <= n {
        if k > k_max {
            k_max = k;
            for j in 1..=k {
                let mut u = dot(&st.b[k - 1], &st.b[j - 1]);
                for i in 1..j {
                    u = (&st.d[i] * u - &st.lambda[k][i] * &st.lambda[j][i]) / &st.d[i - 1];
                }
                if j < k {
                    st.lambda[k][j] = u;
                } else {
                    if u.is_zero() {
                        return Err(Error::Usage("basis rows are linearly dependent".into()));
                    }
                    st.d[k] = u;
                }
            }
        }
        loop {
            st.red(k, k - 1);
            let lhs: BigInt = &st.d[k] * &st.d[k - 2] * 4u32;
            let rhs: BigInt = &st.d[k - 1] * &st.d[k - 1] * 3u32 - &st.lambda[k][k - 1] * &st.lambda[k][k - 1] * 4u32;
            if lhs < rhs {
                st.swap(k, k_max);
                k = (k - 1).max(2);
            } else {
                break;
            }
        }
        for l in (1..k - 1).rev() {
            st.red(k, l);
        }
        k += 1;
    }
    Ok(LllOutput { gram_det: st.d[n].clone(), basis: st.b })
}

/// Row-style Hermite normal form of the lattice spanned by `rows`: echelon,
/// positive pivots, entries above a pivot reduced into `[0, pivot)`. Two
/// bases span the same lattice iff their forms are equal. Zero rows are
/// dropped.
pub fn hermite_normal_form(rows: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    let mut a: Vec<Vec<BigInt>> = rows.to_vec();
    let ncols = a.first().map_or(0, Vec::len);
    let mut r = 0;
    for j in 0..ncols {
        if r == a.len() {
            break;
        }
        // Euclid on column j among rows r..
        loop {
            let pivot = (r..a.len()).filter(|&i| !a[i][j].is_zero()).min_by_key(|&i| a[i][j].abs());
            let Some(p) = pivot else { break };
            a.swap(r, p);
            let mut done = true;
            for i in r + 1..a.len() {
                if a[i][j].is_zero() {
                    continue;
                }
                let q = a[i][j].div_floor(&a[r][j]);
                let (head, tail) = a.split_at_mut(i);
                for (x, y) in tail[0].iter_mut().zip(&head[r]) {
                    *x -= &q * y;
                }
                done &= a[i][j].is_zero();
            }
            if done {
                break;
            }
        }
        if a[r][j].is_zero() {
            continue;
        }
        if a[r][j].is_negative() {
            a[r].iter_mut().for_each(|x| *x = -&*x);
        }
        for i in 0..r {
            let q = a[i][j].div_floor(&a[r][j]);
            let (head, tail) = a.split_at_mut(r);
            for (x, y) in head[i].iter_mut().zip(&tail[0]) {
                *x -= &q * y;
            }
        }
        r += 1;
    }
    a.truncate(r);
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;
    use num_traits::One;
    use proptest::prelude::*;

    fn rows(v: &[&[i64]]) -> Vec<Vec<BigInt>> {
        v.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect()
    }

    /// Size reduction and the Lovász condition, checked with rational
    /// Gram–Schmidt.
    pub(crate) fn is_reduced(b: &[Vec<BigInt>]) -> bool {
        let q = |x: &BigInt| BigRational::from_integer(x.clone());
        let n = b.len();
        let mut star: Vec<Vec<BigRational>> = Vec::new();
        let mut mu = vec![vec![BigRational::zero(); n]; n];
        let mut norms = Vec::new();
        for i in 0..n {
            let mut v: Vec<BigRational> = b[i].iter().map(q).collect();
            for j in 0..i {
                let num: BigRational = b[i].iter().zip(&star[j]).map(|(x, y)| q(x) * y).sum();
                mu[i][j] = num / &norms[j];
                for (a, s) in v.iter_mut().zip(&star[j]) {
                    *a -= &mu[i][j] * s;
                }
            }
            norms.push(v.iter().map(|a| a * a).sum::<BigRational>());
            star.push(v);
        }
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        let delta = BigRational::new(BigInt::from(3), BigInt::from(4));
        (0..n).all(|i| (0..i).all(|j| mu[i][j].abs() <= half))
            && (1..n).all(|k| norms[k] >= (&delta - &mu[k][k - 1] * &mu[k][k - 1]) * &norms[k - 1])
    }

    #[test]
    fn hermite_form_of_small_lattices() {
        let a = rows(&[&[2, 4], &[3, 5]]);
        assert_eq!(hermite_normal_form(&a), rows(&[&[1, 1], &[0, 2]]));
        let b = rows(&[&[1, 1], &[0, 2]]);
        assert_eq!(hermite_normal_form(&b), hermite_normal_form(&rows(&[&[1, 3], &[1, 1]])));
        assert_ne!(hermite_normal_form(&b), hermite_normal_form(&rows(&[&[1, 1], &[0, 4]])));
    }

    #[test]
    fn identity_is_fixed() {
        let id = rows(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1]]);
        assert_eq!(lll_reduce(&id).unwrap().basis, id);
    }

    #[test]
    fn planted_short_vector() {
        let b = rows(&[&[1, 0, 10], &[0, 1, 16]]);
        let out = lll_reduce(&b).unwrap();
        assert!(is_reduced(&out.basis));
        let shortest = out.basis.iter().map(|r| dot(r, r)).min().unwrap();
        // 8·(1,0,10) - 5·(0,1,16) = (8,-5,0)
        assert!(shortest <= BigInt::from(89));
        assert_eq!(out.gram_det, BigInt::from(101 * 257 - 160 * 160));
    }

    #[test]
    fn dependent_rows_are_rejected() {
        let b = rows(&[&[1, 2, 3], &[2, 4, 6]]);
        assert!(matches!(lll_reduce(&b), Err(Error::Usage(_))));
        let b = rows(&[&[0, 0], &[1, 1]]);
        assert!(matches!(lll_reduce(&b), Err(Error::Usage(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn output_is_reduced(v in prop::collection::vec(prop::collection::vec(-1000i64..1000, 5), 2..=5)) {
            let b: Vec<Vec<BigInt>> = v.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect();
            match lll_reduce(&b) {
                Ok(out) => {
                    prop_assert!(is_reduced(&out.basis));
                    prop_assert_eq!(hermite_normal_form(&out.basis), hermite_normal_form(&b));
                }
                Err(e) => prop_assert!(matches!(e, Error::Usage(_))),
            }
        }
    }
}
