//! Integer relations among real numbers given to a fixed number of decimal
//! digits, found by LLL on the usual embedding `[I | 10^d v]`.
//!
//! A reduced vector is only reported when it is both consistent with the
//! rounding of the inputs and far shorter than a random lattice of the same
//! covolume would allow; otherwise LLL always returns *something*, and that
//! something is noise.

pub mod lll;
pub mod magnetization;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactmath::ExactScalar;

pub use lll::{hermite_normal_form, lll_reduce, LllOutput};
pub use magnetization::{
    estimate_magnetization, estimated_problem, magnetization_ode_oracle, magnetization_reference, minimal_ode,
    ode_labels, oracle_points, oracle_problem, MagnetizationEstimate, MagnetizationOde, VALIDATION_POINTS,
};

/// Required advantage, in decimal digits, of `‖v‖^n` over the Gaussian
/// heuristic `gh^n` of the lattice.
pub const GAP_DIGITS: f64 = 8.0;

/// Real values per evaluation point, stored as `round(v · 10^precision)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationProblem {
    pub labels: Vec<String>,
    pub precision: u32,
    pub rows: Vec<Vec<BigInt>>,
    /// Points kept out of the lattice; a relation must hold there too.
    #[serde(default)]
    pub validation: Vec<Vec<BigInt>>,
}

impl RelationProblem {
    pub fn new(labels: Vec<String>, precision: u32, rows: Vec<Vec<BigInt>>) -> Result<Self> {
        if precision < 2 {
            return Err(Error::Usage(format!("precision must be at least 2 digits, got {precision}")));
        }
        if labels.len() < 2 {
            return Err(Error::Usage("a relation needs at least two values".into()));
        }
        if rows.is_empty() {
            return Err(Error::Usage("no evaluation points".into()));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != labels.len()) {
            return Err(Error::Usage(format!("row of length {} for {} labels", r.len(), labels.len())));
        }
        Ok(RelationProblem { labels, precision, rows, validation: Vec::new() })
    }

    /// Rows of exact rationals, rounded to `precision` digits.
    pub fn from_exact(labels: Vec<String>, precision: u32, rows: &[Vec<ExactScalar>]) -> Result<Self> {
        let scale = BigInt::from(10).pow(precision);
        let rows = rows.iter().map(|r| r.iter().map(|v| round_scaled(v, &scale)).collect()).collect();
        Self::new(labels, precision, rows)
    }

    /// Rows of decimal strings such as `"-0.69314718"`, rounded (or
    /// zero-padded) to `precision` digits.
    pub fn from_decimals(labels: Vec<String>, precision: u32, rows: &[Vec<&str>]) -> Result<Self> {
        let rows = rows
            .iter()
            .map(|r| r.iter().map(|s| parse_decimal(s, precision)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Self::new(labels, precision, rows)
    }

    /// Double-precision inputs; at most 15 digits are meaningful.
    pub fn from_f64(labels: Vec<String>, precision: u32, rows: &[Vec<f64>]) -> Result<Self> {
        if precision > 15 {
            return Err(Error::Usage(format!("f64 values carry at most 15 digits, asked for {precision}")));
        }
        let scale = 10f64.powi(precision as i32);
        let rows = rows
            .iter()
            .map(|r| {
                r.iter()
                    .map(|v| {
                        if v.is_finite() {
                            Ok(BigInt::from((v * scale).round() as i128))
                        } else {
                            Err(Error::Domain(format!("non-finite value {v}")))
                        }
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(labels, precision, rows)
    }

    /// Moves the last `count` points out of the lattice into validation.
    pub fn hold_out(mut self, count: usize) -> Result<Self> {
        if count >= self.rows.len() {
            return Err(Error::Usage(format!("cannot hold out {count} of {} points", self.rows.len())));
        }
        let split = self.rows.len() - count;
        self.validation = self.rows.split_off(split);
        Ok(self)
    }

    pub fn dimension(&self) -> usize {
        self.labels.len()
    }

    /// Same problem with the evaluation points reordered.
    pub fn permuted(&self, order: &[usize]) -> Self {
        RelationProblem { rows: order.iter().map(|&i| self.rows[i].clone()).collect(), ..self.clone() }
    }
}

fn round_scaled(v: &ExactScalar, scale: &BigInt) -> BigInt {
    let n: BigInt = v.numer() * scale * 2u32 + v.denom();
    n.div_floor(&(v.denom() * 2u32))
}

/// `"-12.3456"` at `precision` digits → `-123456·10^(precision-4)`.
pub fn parse_decimal(s: &str, precision: u32) -> Result<BigInt> {
    let bad = || Error::Usage(format!("not a decimal number: {s:?}"));
    let t = s.trim();
    let (neg, t) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (int, frac) = t.split_once('.').unwrap_or((t, ""));
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let p = precision as usize;
    let mut digits = format!("{int}{}", &frac[..frac.len().min(p)]);
    let mut value = if frac.len() > p {
        // round half up on the first dropped digit
        let round_up = frac.as_bytes()[p] >= b'5';
        let v: BigInt = digits.parse().map_err(|_| bad())?;
        if round_up {
            v + 1
        } else {
            v
        }
    } else {
        digits.push_str(&"0".repeat(p - frac.len()));
        digits.parse().map_err(|_| bad())?
    };
    if neg {
        value = -value;
    }
    Ok(value)
}

/// `log10 |x|` for big integers, `-inf` at zero.
pub fn log10_abs(x: &BigInt) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 1000 {
        return x.abs().to_f64().unwrap_or(f64::INFINITY).log10();
    }
    let shift = bits - 64;
    let top = (x.abs() >> shift).to_f64().unwrap_or(f64::INFINITY);
    top.log10() + shift as f64 * std::f64::consts::LOG10_2
}

/// A relation together with the evidence that it is not an artifact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegerRelation {
    #[serde(with = "bigint_strings")]
    pub coeffs: Vec<BigInt>,
    /// Upper bound on `|Σ c_i v_i|` over all points, inputs' rounding
    /// included.
    #[serde(with = "scientific")]
    pub residual: f64,
    pub labels: Vec<String>,
    /// `residual / ‖c‖`.
    #[serde(skip)]
    pub quality: f64,
    /// `n · log10(gh/‖v‖)` for the embedded vector.
    #[serde(skip)]
    pub gap_digits: f64,
}

impl IntegerRelation {
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.to_f64().unwrap_or(f64::INFINITY).powi(2)).sum::<f64>().sqrt()
    }
}

mod bigint_strings {
    use num_bigint::BigInt;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[BigInt], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|c| c.to_string()).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigInt>, D::Error> {
        Vec::<String>::deserialize(d)?.iter().map(|s| s.parse().map_err(serde::de::Error::custom)).collect()
    }
}

mod scientific {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{v:.1e}"))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Embedding, reduction, and every reduced vector that passes the gates,
/// best first.
pub fn candidate_relations(problem: &RelationProblem, max_coeff_digits: u32) -> Result<Vec<IntegerRelation>> {
    let n = problem.dimension();
    let basis: Vec<Vec<BigInt>> = (0..n)
        .map(|i| {
            let mut row = vec![BigInt::zero(); n];
            row[i] = BigInt::from(1);
            row.extend(problem.rows.iter().map(|p| p[i].clone()));
            row
        })
        .collect();
    let LllOutput { basis: reduced, gram_det } = lll_reduce(&basis)?;
    // log10 of the Gaussian heuristic sqrt(n/(2πe)) · det^(1/n)
    let log_gh = 0.5 * (n as f64 / (2.0 * std::f64::consts::PI * std::f64::consts::E)).log10()
        + 0.5 * log10_abs(&gram_det) / n as f64;
    let unit = 10f64.powi(-(problem.precision as i32));
    let coeff_cap = BigInt::from(10).pow(max_coeff_digits);

    let half_precision = 10f64.powf(-(problem.precision as f64) / 2.0);
    let signal_floor = BigInt::from(10).pow(problem.precision / 2);

    let mut out: Vec<IntegerRelation> = reduced
        .iter()
        .filter_map(|v| {
            let coeffs = v[..n].to_vec();
            if coeffs.iter().all(Zero::is_zero) || coeffs.iter().any(|c| c.abs() >= coeff_cap) {
                return None;
            }
            let l1: BigInt = coeffs.iter().map(|c| c.abs()).sum();
            // each scaled input is off by at most one unit
            let mut worst = v[n..].iter().map(|s| s.abs()).max().unwrap_or_default();
            if worst > l1 {
                return None;
            }
            // the terms involved must carry digits, not rounding noise
            let signal = problem
                .rows
                .iter()
                .map(|row| row.iter().zip(&coeffs).map(|(x, c)| (x * c).abs()).sum::<BigInt>())
                .max()
                .unwrap_or_default();
            if signal < &signal_floor * &l1 {
                return None;
            }
            // a held-out point only validates if the terms are visible there
            for row in &problem.validation {
                let s: BigInt = row.iter().zip(&coeffs).map(|(x, c)| x * c).sum();
                let visible: BigInt = row.iter().zip(&coeffs).map(|(x, c)| (x * c).abs()).sum();
                if visible < &signal_floor * &l1 {
                    return None;
                }
                worst = worst.max(s.abs());
            }
            if worst > l1 {
                return None;
            }
            let norm_sq: BigInt = v.iter().map(|x| x * x).sum();
            let gap_digits = n as f64 * (log_gh - 0.5 * log10_abs(&norm_sq));
            let residual = (worst + &l1).to_f64().unwrap_or(f64::INFINITY) * unit;
            let c_norm = coeffs.iter().map(|c| c.to_f64().unwrap_or(f64::INFINITY).powi(2)).sum::<f64>().sqrt();
            let quality = residual / c_norm;
            if quality >= half_precision || gap_digits < GAP_DIGITS {
                return None;
            }
            let g = coeffs.iter().fold(BigInt::zero(), |acc, c| acc.gcd(c));
            let first_negative = coeffs.iter().find(|c| !c.is_zero()).is_some_and(|c| c.is_negative());
            let g = if first_negative { -g } else { g };
            let coeffs: Vec<BigInt> = coeffs.iter().map(|c| c / &g).collect();
            Some(IntegerRelation { coeffs, residual, labels: problem.labels.clone(), quality, gap_digits })
        })
        .collect();
    out.sort_by(|a, b| b.gap_digits.total_cmp(&a.gap_digits));
    Ok(out)
}

/// One relation for a single row of values, or `None` when nothing passes
/// the quality gates.
pub fn find_integer_relation(problem: &RelationProblem, max_coeff_digits: u32) -> Result<Option<IntegerRelation>> {
    if problem.rows.len() != 1 {
        return Err(Error::Usage(format!(
            "expected one row of values, got {}; use simultaneous_relation",
            problem.rows.len()
        )));
    }
    Ok(candidate_relations(problem, max_coeff_digits)?.into_iter().next())
}

/// One integer vector annihilating every row, or `None`.
pub fn simultaneous_relation(problem: &RelationProblem, max_coeff_digits: u32) -> Result<Option<IntegerRelation>> {
    Ok(candidate_relations(problem, max_coeff_digits)?.into_iter().next())
}
