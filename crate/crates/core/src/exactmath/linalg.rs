//! Exact Gaussian elimination over the rationals.

use num_traits::{One, Zero};

use super::scalar::ExactScalar;
use crate::error::{Error, Result};

pub type Matrix = Vec<Vec<ExactScalar>>;

/// Reduced row echelon form of a matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Rref {
    /// Nonzero rows only, each with a leading 1 at `pivots[i]`.
    pub rows: Matrix,
    pub pivots: Vec<usize>,
    pub ncols: usize,
}

impl Rref {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    /// Basis of `{v : A v = 0}`, one vector per free column.
    pub fn nullspace(&self) -> Vec<Vec<ExactScalar>> {
        let free: Vec<usize> = (0..self.ncols).filter(|c| !self.pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![ExactScalar::zero(); self.ncols];
                v[f] = ExactScalar::one();
                for (row, &p) in self.rows.iter().zip(&self.pivots) {
                    v[p] = -row[f].clone();
                }
                v
            })
            .collect()
    }

    /// Reduces a row vector modulo the row space: pivot entries become zero.
    pub fn reduce(&self, v: &[ExactScalar]) -> Vec<ExactScalar> {
        let mut out = v.to_vec();
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            if out[p].is_zero() {
                continue;
            }
            let f = out[p].clone();
            for (o, r) in out.iter_mut().zip(row) {
                *o -= &f * r;
            }
        }
        out
    }
}

pub fn rref(a: &[Vec<ExactScalar>], ncols: usize) -> Result<Rref> {
    let mut m: Matrix = a.to_vec();
    if let Some(bad) = m.iter().find(|r| r.len() != ncols) {
        return Err(Error::Usage(format!("row of length {} in a {ncols}-column matrix", bad.len())));
    }
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = ExactScalar::one() / &m[r][c];
        for x in m[r].iter_mut() {
            *x *= &inv;
        }
        let pivot_row = m[r].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (x, y) in row.iter_mut().zip(&pivot_row) {
                if !y.is_zero() {
                    *x -= &f * y;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == m.len() {
            break;
        }
    }
    m.truncate(r);
    Ok(Rref { rows: m, pivots, ncols })
}

/// Outcome of solving `A x = b` exactly.
#[derive(Clone, Debug, PartialEq)]
pub enum LinearSolution {
    Unique(Vec<ExactScalar>),
    /// `particular + span(nullspace)`.
    Family {
        particular: Vec<ExactScalar>,
        nullspace: Vec<Vec<ExactScalar>>,
    },
    Infeasible,
}

impl LinearSolution {
    pub fn particular(&self) -> Option<&[ExactScalar]> {
        match self {
            LinearSolution::Unique(x) => Some(x),
            LinearSolution::Family { particular, .. } => Some(particular),
            LinearSolution::Infeasible => None,
        }
    }

    /// Dimension of the solution set (`None` when infeasible).
    pub fn dimension(&self) -> Option<usize> {
        match self {
            LinearSolution::Unique(_) => Some(0),
            LinearSolution::Family { nullspace, .. } => Some(nullspace.len()),
            LinearSolution::Infeasible => None,
        }
    }
}

/// Solves `A x = b`; `a` has `ncols` columns (needed when `a` has no rows).
pub fn solve_linear(a: &[Vec<ExactScalar>], b: &[ExactScalar], ncols: usize) -> Result<LinearSolution> {
    if a.len() != b.len() {
        return Err(Error::Usage(format!("{} rows but {} right-hand sides", a.len(), b.len())));
    }
    let augmented: Matrix = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    if let Some(bad) = a.iter().find(|r| r.len() != ncols) {
        return Err(Error::Usage(format!("row of length {} in a {ncols}-column matrix", bad.len())));
    }
    let red = rref(&augmented, ncols + 1)?;
    if red.pivots.last() == Some(&ncols) {
        return Ok(LinearSolution::Infeasible);
    }
    let mut particular = vec![ExactScalar::zero(); ncols];
    for (row, &p) in red.rows.iter().zip(&red.pivots) {
        particular[p] = row[ncols].clone();
    }
    let coeff_part =
        Rref { rows: red.rows.iter().map(|r| r[..ncols].to_vec()).collect(), pivots: red.pivots.clone(), ncols };
    let nullspace = coeff_part.nullspace();
    Ok(if nullspace.is_empty() {
        LinearSolution::Unique(particular)
    } else {
        LinearSolution::Family { particular, nullspace }
    })
}

pub fn mat_vec(a: &[Vec<ExactScalar>], x: &[ExactScalar]) -> Vec<ExactScalar> {
    a.iter().map(|row| row.iter().zip(x).fold(ExactScalar::zero(), |acc, (p, q)| acc + p * q)).collect()
}
