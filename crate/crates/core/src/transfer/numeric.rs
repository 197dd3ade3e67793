//! Floating-point free energy of the infinite strip of width `n1`.
//!
//! The column operator is applied in its symmetric form
//! `D^{1/2} K^{⊗n1} D^{1/2}`, with `D[s] = x^{V(s)/2} y^{M(s)}` and the
//! kernel `[[√x, 1/√x], [1/√x, √x]]`. All entries are positive, so power
//! iteration from the all-ones vector converges to the Perron vector.

use super::{check_width, ColumnState, MAX_NUMERIC_WIDTH};
use crate::error::{Error, Result};

pub const MAX_POWER_ITERATIONS: usize = 20_000;

#[derive(Clone, Debug)]
pub struct NumericColumnOperators {
    n1: usize,
    x: f64,
    y: f64,
    half_diagonal: Vec<f64>,
    like: f64,
    unlike: f64,
}

impl NumericColumnOperators {
    pub fn new(n1: usize, x: f64, y: f64) -> Result<Self> {
        check_width(n1, MAX_NUMERIC_WIDTH, "numeric transfer operator")?;
        if !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite()) {
            return Err(Error::Domain(format!("x and y must be positive and finite, got ({x}, {y})")));
        }
        let (lx, ly) = (x.ln(), y.ln());
        let half_diagonal = (0..1u32 << n1)
            .map(|s| {
                let state = ColumnState(s);
                (0.25 * state.vertical_sum(n1) as f64 * lx + 0.5 * state.magnetization(n1) as f64 * ly).exp()
            })
            .collect();
        Ok(NumericColumnOperators { n1, x, y, half_diagonal, like: x.sqrt(), unlike: 1.0 / x.sqrt() })
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn point(&self) -> (f64, f64) {
        (self.x, self.y)
    }

    /// `out <- D^{1/2} K^{⊗n1} D^{1/2} v`
    pub fn apply(&self, v: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(v.iter().zip(&self.half_diagonal).map(|(a, d)| a * d));
        for row in 0..self.n1 {
            let bit = 1usize << row;
            for s in 0..out.len() {
                if s & bit != 0 {
                    continue;
                }
                let (a, b) = (out[s], out[s | bit]);
                out[s] = self.like * a + self.unlike * b;
                out[s | bit] = self.unlike * a + self.like * b;
            }
        }
        out.iter_mut().zip(&self.half_diagonal).for_each(|(a, d)| *a *= d);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FreeEnergyEstimate {
    /// `ln(λ_max) / n1`.
    pub value: f64,
    /// Last change of the estimate between iterations.
    pub residual: f64,
    pub iterations: usize,
    /// Change of the estimate at every iteration.
    pub history: Vec<f64>,
}

/// Power iteration with Rayleigh quotients; stops when successive
/// estimates of `ln(λ)/n1` differ by less than `tol`.
pub fn numeric_free_energy(n1: usize, x: f64, y: f64, tol: f64) -> Result<FreeEnergyEstimate> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Usage(format!("tolerance must be positive, got {tol}")));
    }
    let op = NumericColumnOperators::new(n1, x, y)?;
    let dim = 1usize << n1;
    let mut v = vec![1.0 / (dim as f64).sqrt(); dim];
    let mut w = Vec::with_capacity(dim);
    let mut previous = f64::NAN;
    let mut history = Vec::new();
    for it in 1..=MAX_POWER_ITERATIONS {
        op.apply(&v, &mut w);
        let rayleigh: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
        let norm = w.iter().map(|a| a * a).sum::<f64>().sqrt();
        let estimate = rayleigh.ln() / n1 as f64;
        w.iter_mut().for_each(|a| *a /= norm);
        std::mem::swap(&mut v, &mut w);
        if previous.is_finite() {
            let change = (estimate - previous).abs();
            history.push(change);
            if change < tol {
                return Ok(FreeEnergyEstimate { value: estimate, residual: change, iterations: it, history });
            }
        }
        previous = estimate;
    }
    Err(Error::Convergence {
        iterations: MAX_POWER_ITERATIONS,
        last_change: history.last().copied().unwrap_or(f64::NAN),
    })
}
