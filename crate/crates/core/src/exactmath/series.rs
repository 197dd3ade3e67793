//! Degree-truncated formal power series over the rationals.
//!
//! Every series carries its truncation order `R` and stores exactly `R + 1`
//! coefficients. Binary operations require equal orders; nothing is ever
//! silently re-truncated.

use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::poly::UniPoly;
use super::scalar::{self, ExactScalar};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SeriesRepr", into = "SeriesRepr")]
pub struct TruncSeries {
    order: usize,
    coeffs: Vec<ExactScalar>,
}

#[derive(Serialize, Deserialize)]
struct SeriesRepr {
    order: usize,
    #[serde(with = "scalar::serde_vec")]
    coeffs: Vec<ExactScalar>,
}

impl From<TruncSeries> for SeriesRepr {
    fn from(s: TruncSeries) -> Self {
        SeriesRepr { order: s.order, coeffs: s.coeffs }
    }
}

impl TryFrom<SeriesRepr> for TruncSeries {
    type Error = Error;
    fn try_from(r: SeriesRepr) -> Result<Self> {
        if r.coeffs.len() != r.order + 1 {
            return Err(Error::Usage(format!(
                "series of order {} needs {} coefficients, got {}",
                r.order,
                r.order + 1,
                r.coeffs.len()
            )));
        }
        Ok(TruncSeries { order: r.order, coeffs: r.coeffs })
    }
}

fn check_orders(a: &TruncSeries, b: &TruncSeries) -> Result<()> {
    if a.order != b.order {
        return Err(Error::Usage(format!("truncation order mismatch: {} vs {}", a.order, b.order)));
    }
    Ok(())
}

impl TruncSeries {
    /// Pads with zeros up to `order`; coefficients past `order` are an error.
    pub fn new(order: usize, mut coeffs: Vec<ExactScalar>) -> Result<Self> {
        if coeffs.len() > order + 1 {
            return Err(Error::Usage(format!("{} coefficients do not fit order {order}", coeffs.len())));
        }
        coeffs.resize(order + 1, ExactScalar::zero());
        Ok(TruncSeries { order, coeffs })
    }

    pub fn from_ints(order: usize, coeffs: &[i64]) -> Result<Self> {
        Self::new(order, coeffs.iter().map(|&c| scalar::int(c)).collect())
    }

    /// Truncates a polynomial to `order`.
    pub fn from_poly(p: &UniPoly, order: usize) -> Self {
        let coeffs = (0..=order).map(|k| p.coeff(k)).collect();
        TruncSeries { order, coeffs }
    }

    pub fn zero(order: usize) -> Self {
        TruncSeries { order, coeffs: vec![ExactScalar::zero(); order + 1] }
    }

    pub fn one(order: usize) -> Self {
        Self::monomial(ExactScalar::one(), 0, order)
    }

    /// The identity series `t` (order ≥ 1).
    pub fn identity(order: usize) -> Self {
        Self::monomial(ExactScalar::one(), 1, order)
    }

    pub fn monomial(c: ExactScalar, k: usize, order: usize) -> Self {
        let mut s = Self::zero(order);
        if k <= order {
            s.coeffs[k] = c;
        }
        s
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coeffs(&self) -> &[ExactScalar] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> &ExactScalar {
        &self.coeffs[k]
    }

    pub fn to_poly(&self) -> UniPoly {
        UniPoly::new(self.coeffs.clone())
    }

    /// Same coefficients viewed at a lower order.
    pub fn truncate(&self, order: usize) -> Result<Self> {
        if order > self.order {
            return Err(Error::Usage(format!("cannot raise truncation order {} to {order}", self.order)));
        }
        Ok(TruncSeries { order, coeffs: self.coeffs[..=order].to_vec() })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_orders(self, other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(TruncSeries { order: self.order, coeffs })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_orders(self, other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Ok(TruncSeries { order: self.order, coeffs })
    }

    pub fn neg(&self) -> Self {
        self.scale(&-ExactScalar::one())
    }

    pub fn scale(&self, c: &ExactScalar) -> Self {
        TruncSeries { order: self.order, coeffs: self.coeffs.iter().map(|a| a * c).collect() }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        check_orders(self, other)?;
        Ok(self.mul_unchecked(other))
    }

    fn mul_unchecked(&self, other: &Self) -> Self {
        let r = self.order;
        let mut out = vec![ExactScalar::zero(); r + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs[..=r - i].iter().enumerate() {
                if !b.is_zero() {
                    out[i + j] += a * b;
                }
            }
        }
        TruncSeries { order: r, coeffs: out }
    }

    /// Multiplicative inverse; requires a nonzero constant term.
    pub fn inverse(&self) -> Result<Self> {
        let c0 = &self.coeffs[0];
        if c0.is_zero() {
            return Err(Error::Domain("series with zero constant term is not invertible".into()));
        }
        let inv0 = ExactScalar::one() / c0;
        let mut out = vec![ExactScalar::zero(); self.order + 1];
        out[0] = inv0.clone();
        for k in 1..=self.order {
            let mut acc = ExactScalar::zero();
            for i in 1..=k {
                acc += &self.coeffs[i] * &out[k - i];
            }
            out[k] = -acc * &inv0;
        }
        Ok(TruncSeries { order: self.order, coeffs: out })
    }

    pub fn derivative(&self) -> Self {
        let mut out = vec![ExactScalar::zero(); self.order + 1];
        for k in 1..=self.order {
            out[k - 1] = &self.coeffs[k] * scalar::int(k as i64);
        }
        TruncSeries { order: self.order, coeffs: out }
    }

    /// Antiderivative with zero constant; the top coefficient is dropped.
    pub fn integral(&self) -> Self {
        let mut out = vec![ExactScalar::zero(); self.order + 1];
        for k in 0..self.order {
            out[k + 1] = &self.coeffs[k] / scalar::int(k as i64 + 1);
        }
        TruncSeries { order: self.order, coeffs: out }
    }

    /// Logarithm of a series with constant term 1, via `L' = a'/a`.
    pub fn log(&self) -> Result<Self> {
        if !self.coeffs[0].is_one() {
            return Err(Error::Domain(format!(
                "log needs constant term 1, got {}",
                scalar::to_string(&self.coeffs[0])
            )));
        }
        let q = self.derivative().mul_unchecked(&self.inverse()?);
        Ok(q.integral())
    }

    /// Exponential of a series with zero constant term.
    pub fn exp(&self) -> Result<Self> {
        if !self.coeffs[0].is_zero() {
            return Err(Error::Domain("exp needs a zero constant term".into()));
        }
        // E' = L' E  =>  k e_k = sum_{i=1..k} i l_i e_{k-i}
        let mut out = vec![ExactScalar::zero(); self.order + 1];
        out[0] = ExactScalar::one();
        for k in 1..=self.order {
            let mut acc = ExactScalar::zero();
            for i in 1..=k {
                if !self.coeffs[i].is_zero() {
                    acc += &self.coeffs[i] * scalar::int(i as i64) * &out[k - i];
                }
            }
            out[k] = acc / scalar::int(k as i64);
        }
        Ok(TruncSeries { order: self.order, coeffs: out })
    }

    /// `self(inner(t))`, truncated; `inner` must have zero constant term.
    pub fn compose(&self, inner: &Self) -> Result<Self> {
        check_orders(self, inner)?;
        if !inner.coeffs[0].is_zero() {
            return Err(Error::Domain("inner series of a composition needs zero constant term".into()));
        }
        // Horner; each step multiplies by a series of valuation >= 1.
        let mut acc = Self::zero(self.order);
        for c in self.coeffs.iter().rev() {
            acc = acc.mul_unchecked(inner);
            acc.coeffs[0] += c;
        }
        Ok(acc)
    }

    /// Compositional inverse: the series `h` with `self(h(t)) = t`.
    ///
    /// Coefficients are fixed one degree at a time: if `h` is correct below
    /// degree `k`, the degree-`k` defect of `self(h)` is cancelled by adding
    /// `-defect / self_1` to `h_k`.
    pub fn reverse(&self) -> Result<Self> {
        if self.order == 0 {
            return Err(Error::Domain("reversion needs order >= 1".into()));
        }
        if !self.coeffs[0].is_zero() {
            return Err(Error::Domain("reversion needs zero constant term".into()));
        }
        let g1 = &self.coeffs[1];
        if g1.is_zero() {
            return Err(Error::Domain("reversion needs a nonzero linear term".into()));
        }
        let mut h = Self::monomial(ExactScalar::one() / g1, 1, self.order);
        for k in 2..=self.order {
            let prefix = h.truncate(k).expect("k <= order");
            let g_k = self.truncate(k).expect("k <= order");
            let defect = g_k.compose(&prefix)?.coeffs[k].clone();
            h.coeffs[k] = -defect / g1;
        }
        Ok(h)
    }

    pub fn is_even(&self) -> bool {
        self.coeffs.iter().skip(1).step_by(2).all(Zero::is_zero)
    }

    pub fn is_odd(&self) -> bool {
        self.coeffs.iter().step_by(2).all(Zero::is_zero)
    }

    pub fn render(&self, var: &str) -> String {
        let body = self.to_poly();
        let mut s = if body.is_zero() { "0".to_string() } else { String::new() };
        if !body.is_zero() {
            // ascending order reads more naturally for series
            let mut parts = Vec::new();
            for (k, c) in self.coeffs.iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                let mono = match k {
                    0 => String::new(),
                    1 => var.to_string(),
                    _ => format!("{var}^{k}"),
                };
                let cs = scalar::to_string(c);
                parts.push(match (k, cs.as_str()) {
                    (0, _) => cs,
                    (_, "1") => mono,
                    (_, "-1") => format!("-{mono}"),
                    _ => format!("{cs}*{mono}"),
                });
            }
            s = parts.join(" + ").replace("+ -", "- ");
        }
        format!("{s} + O({var}^{})", self.order + 1)
    }
}

impl fmt::Display for TruncSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render("t"))
    }
}
