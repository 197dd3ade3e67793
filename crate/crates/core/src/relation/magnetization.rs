//! Spontaneous magnetization: the closed form as ground truth, the
//! first-order ODE it satisfies, high-precision oracle rows for the
//! relation search, and transfer-operator estimates of `m` and `m'`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::{IntegerRelation, RelationProblem};
use crate::error::{Error, Result};
use crate::exactmath::{scalar, ExactScalar, UniPoly};
use crate::transfer::numeric_free_energy;

pub fn critical_x() -> f64 {
    1.0 + std::f64::consts::SQRT_2
}

/// `m⁸ = P/S` with `P = (x²+1)²(x²-2x-1)(x²+2x-1)` and `S = (x-1)⁴(x+1)⁴`.
pub fn eighth_power() -> (UniPoly, UniPoly) {
    let p = &(&UniPoly::from_ints(&[1, 0, 1]).pow(2) * &UniPoly::from_ints(&[-1, -2, 1]))
        * &UniPoly::from_ints(&[-1, 2, 1]);
    let s = UniPoly::from_ints(&[-1, 0, 1]).pow(4);
    (p, s)
}

/// `m(x)`: zero for `1 < x < 1+√2`, the eighth root beyond.
pub fn magnetization_reference(x: f64) -> Result<f64> {
    if !(x > 1.0 && x.is_finite()) {
        return Err(Error::Domain(format!("magnetization is defined for x > 1, got {x}")));
    }
    if x < critical_x() {
        return Ok(0.0);
    }
    let (p, s) = eighth_power();
    Ok((p.eval_f64(x) / s.eval_f64(x)).max(0.0).powf(0.125))
}

/// `a(x) m + b(x) m' = 0`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MagnetizationOde {
    pub a: UniPoly,
    pub b: UniPoly,
}

impl MagnetizationOde {
    /// Scales to coprime integer coefficients with `b` having a positive
    /// leading coefficient.
    pub fn normalized(a: UniPoly, b: UniPoly) -> Option<Self> {
        let lead = b.leading()?.clone();
        let all: Vec<ExactScalar> = a.coeffs().iter().chain(b.coeffs()).cloned().collect();
        let den = scalar::common_denominator(all.iter());
        let g = all
            .iter()
            .map(|c| (c * scalar::from_bigint(den.clone())).to_integer())
            .fold(BigInt::zero(), |acc, c| acc.gcd(&c));
        let mut k = scalar::from_bigint(den) / scalar::from_bigint(g);
        if lead.is_negative() {
            k = -k;
        }
        Some(MagnetizationOde { a: a.scale(&k), b: b.scale(&k) })
    }

    /// Coefficients `(a_0..a_deg, b_0..b_deg)` as integers.
    pub fn coefficient_vector(&self, deg: usize) -> Option<Vec<BigInt>> {
        if self.a.degree().unwrap_or(0) > deg || self.b.degree().unwrap_or(0) > deg {
            return None;
        }
        let half = |p: &UniPoly| -> Option<Vec<BigInt>> {
            (0..=deg)
                .map(|k| {
                    let c = p.coeff(k);
                    c.is_integer().then(|| c.to_integer())
                })
                .collect()
        };
        let mut v = half(&self.a)?;
        v.extend(half(&self.b)?);
        Some(v)
    }

    pub fn from_coefficients(coeffs: &[BigInt]) -> Result<Self> {
        if !coeffs.len().is_multiple_of(2) || coeffs.is_empty() {
            return Err(Error::Usage(format!("expected an even number of coefficients, got {}", coeffs.len())));
        }
        let half = coeffs.len() / 2;
        let poly = |c: &[BigInt]| UniPoly::new(c.iter().cloned().map(scalar::from_bigint).collect());
        Ok(MagnetizationOde { a: poly(&coeffs[..half]), b: poly(&coeffs[half..]) })
    }

    /// `a m + b m'` at a point.
    pub fn residual(&self, x: f64, m: f64, dm: f64) -> f64 {
        self.a.eval_f64(x) * m + self.b.eval_f64(x) * dm
    }

    /// `8 a P S + b (P'S - P S')`, which vanishes iff `m = (P/S)^(1/8)`
    /// solves the equation.
    pub fn defect(&self) -> UniPoly {
        let (p, s) = eighth_power();
        let q_num = &(&p.derivative() * &s) - &(&p * &s.derivative());
        &(&(&self.a * &p) * &s).scale(&scalar::int(8)) + &(&self.b * &q_num)
    }

    /// Same equation up to a polynomial factor: `a b' = a' b`.
    pub fn proportional_to(&self, other: &MagnetizationOde) -> bool {
        (&self.a * &other.b) == (&other.a * &self.b)
    }
}

/// `Q'/Q` over the squarefree denominator
/// `L = (x²+1)(x²-2x-1)(x²+2x-1)(x-1)(x+1)`, giving `b = 8L`, `a = -L Q'/Q`.
pub fn magnetization_ode_oracle() -> MagnetizationOde {
    let (p, s) = eighth_power();
    let l = &(&(&UniPoly::from_ints(&[1, 0, 1]) * &UniPoly::from_ints(&[-1, -2, 1]))
        * &UniPoly::from_ints(&[-1, 2, 1]))
        * &UniPoly::from_ints(&[-1, 0, 1]);
    let q_num = &(&p.derivative() * &s) - &(&p * &s.derivative());
    let (n, rem) = (&q_num * &l).div_rem(&(&p * &s));
    debug_assert!(rem.is_zero());
    MagnetizationOde::normalized(-&n, l.scale(&scalar::int(8))).expect("nonzero b")
}

/// Labels `x^i*m` then `x^i*m'` for `i = 0..=deg`.
pub fn ode_labels(deg: usize) -> Vec<String> {
    let mono = |i: usize, f: &str| match i {
        0 => f.to_string(),
        1 => format!("x*{f}"),
        _ => format!("x^{i}*{f}"),
    };
    (0..=deg).map(|i| mono(i, "m")).chain((0..=deg).map(|i| mono(i, "m'"))).collect()
}

/// Rational evaluation points above the threshold: eight for the lattice,
/// then [`VALIDATION_POINTS`] more held out.
pub fn oracle_points() -> Vec<ExactScalar> {
    [(5, 2), (3, 1), (7, 2), (4, 1), (9, 2), (5, 1), (11, 2), (6, 1), (13, 4), (21, 4)]
        .iter()
        .map(|&(n, d)| scalar::frac(n, d))
        .collect()
}

pub const VALIDATION_POINTS: usize = 2;

/// `10^k` for any integer `k`.
fn pow10(k: i64) -> ExactScalar {
    let p = scalar::from_bigint(BigInt::from(10).pow(k.unsigned_abs() as u32));
    if k >= 0 {
        p
    } else {
        ExactScalar::one() / p
    }
}

/// `q` rounded to `digits` significant decimal digits.
pub fn round_significant(q: &ExactScalar, digits: u32) -> ExactScalar {
    if q.is_zero() {
        return q.clone();
    }
    let a = q.abs();
    // e with 10^(e-1) <= |q| < 10^e, starting from a digit-count estimate
    let mut e = a.numer().to_string().len() as i64 - a.denom().to_string().len() as i64;
    while a >= pow10(e) {
        e += 1;
    }
    while a < pow10(e - 1) {
        e -= 1;
    }
    let scale = pow10(digits as i64 - e);
    ((q * &scale) + scalar::frac(1, 2)).floor() / scale
}

/// `(m, m')` at a rational `x > 1+√2`, with `m` truncated to `digits`
/// decimals and `m'` derived from it exactly.
pub fn oracle_values(x: &ExactScalar, digits: u32) -> Result<(ExactScalar, ExactScalar)> {
    let (p, s) = eighth_power();
    let (pv, sv) = (p.eval(x), s.eval(x));
    if !pv.is_positive() || !sv.is_positive() || *x <= ExactScalar::one() {
        return Err(Error::Domain(format!("x = {} is not above the critical point", scalar::to_string(x))));
    }
    let q = &pv / &sv;
    let scale = BigInt::from(10).pow(digits);
    let big = (q.numer() * scale.pow(8)) / q.denom();
    let m = ExactScalar::new(big.nth_root(8), scale);
    let q_num = &(&p.derivative() * &s) - &(&p * &s.derivative());
    let dm = &m * q_num.eval(x) / (scalar::int(8) * &pv * &sv);
    Ok((m, dm))
}

/// Rows `x^i m, x^i m'` at the given points from the closed form: `m` and
/// `m'` rounded to `digits` significant digits, each row scaled to unit
/// max-norm and rounded to `digits` decimals. The last `held_out` points
/// only validate.
pub fn oracle_problem(points: &[ExactScalar], digits: u32, deg: usize, held_out: usize) -> Result<RelationProblem> {
    let rows = points
        .iter()
        .map(|x| {
            let (m, dm) = oracle_values(x, digits + 10)?;
            let (m, dm) = (round_significant(&m, digits), round_significant(&dm, digits));
            Ok(normalized_row(x, &m, &dm, deg))
        })
        .collect::<Result<Vec<_>>>()?;
    RelationProblem::from_exact(ode_labels(deg), digits, &rows)?.hold_out(held_out)
}

fn normalized_row(x: &ExactScalar, m: &ExactScalar, dm: &ExactScalar, deg: usize) -> Vec<ExactScalar> {
    let mut row = Vec::with_capacity(2 * deg + 2);
    for f in [m, dm] {
        let mut p = ExactScalar::one();
        for _ in 0..=deg {
            row.push(f * &p);
            p *= x;
        }
    }
    let big = row.iter().map(|v| v.abs()).max().unwrap_or_else(ExactScalar::one);
    if big.is_zero() {
        return row;
    }
    row.into_iter().map(|v| v / &big).collect()
}

/// The lowest-degree equation generated by a set of relations: every
/// relation of the form `p(x)·(a, b)`, so `b` is the gcd of the `b`-parts.
pub fn minimal_ode(relations: &[IntegerRelation]) -> Option<MagnetizationOde> {
    let odes: Vec<MagnetizationOde> =
        relations.iter().filter_map(|r| MagnetizationOde::from_coefficients(&r.coeffs).ok()).collect();
    let first = odes.first()?;
    let b = odes.iter().fold(UniPoly::zero(), |g, o| g.gcd(&o.b));
    if b.is_zero() {
        return None;
    }
    let (factor, rem) = first.b.div_rem(&b);
    if !rem.is_zero() {
        return None;
    }
    let (a, rem) = first.a.div_rem(&factor);
    if !rem.is_zero() {
        return None;
    }
    let ode = MagnetizationOde::normalized(a, b)?;
    odes.iter().all(|o| o.proportional_to(&ode)).then_some(ode)
}

/// Transfer-operator estimates with step-error heuristics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MagnetizationEstimate {
    pub x: f64,
    pub n1: usize,
    pub m: f64,
    pub m_error: f64,
    pub dm: f64,
    pub dm_error: f64,
}

const FREE_ENERGY_TOL: f64 = 1e-14;

/// `∂f/∂H` at `H = 0+` (with `y = e^H`).
///
/// On a finite strip `f` is analytic in `H`, and the secant from `H = 0`
/// carries an `O(1/H)` error from the split ground state. Instead the
/// derivative is taken by central differences at `h`, `h/2`, `h/4` (where the
/// split is resolved) and extrapolated quadratically to `H = 0`. The error
/// is the change against the linear extrapolation from the two smallest.
fn magnetization_at(x: f64, n1: usize, h: f64) -> Result<(f64, f64)> {
    let f = |big_h: f64| numeric_free_energy(n1, x, big_h.exp(), FREE_ENERGY_TOL).map(|e| e.value);
    let d = |at: f64| -> Result<f64> {
        let dl = at / 10.0;
        Ok((f(at + dl)? - f(at - dl)?) / (2.0 * dl))
    };
    let (d1, d2, d4) = (d(h)?, d(h / 2.0)?, d(h / 4.0)?);
    let r1 = 2.0 * d2 - d1;
    let r2 = 2.0 * d4 - d2;
    let q = (4.0 * r2 - r1) / 3.0;
    Ok((q, (q - r2).abs()))
}

/// Estimates `m(x)` for a strip of width `n1` and `m'(x)` by central
/// differences of those estimates in `x` (steps `s` and `2s`, `s = h`).
pub fn estimate_magnetization(x: f64, n1: usize, h: f64) -> Result<MagnetizationEstimate> {
    if !(h > 0.0 && h < 0.5) {
        return Err(Error::Usage(format!("step h must lie in (0, 0.5), got {h}")));
    }
    if !(x > 1.0 && x.is_finite()) {
        return Err(Error::Domain(format!("x must exceed 1, got {x}")));
    }
    let hx = h;
    if x - 2.0 * hx <= 1.0 {
        return Err(Error::Domain(format!("x = {x} too close to 1 for step {h}")));
    }
    let (m, m_error) = magnetization_at(x, n1, h)?;
    let at = |t: f64| magnetization_at(t, n1, h).map(|v| v.0);
    let c1 = (at(x + hx)? - at(x - hx)?) / (2.0 * hx);
    let c2 = (at(x + 2.0 * hx)? - at(x - 2.0 * hx)?) / (4.0 * hx);
    Ok(MagnetizationEstimate { x, n1, m, m_error, dm: (4.0 * c1 - c2) / 3.0, dm_error: (c1 - c2).abs() })
}

/// The same rows as [`oracle_problem`], built from transfer-operator
/// estimates rounded to `digits`.
pub fn estimated_problem(estimates: &[MagnetizationEstimate], digits: u32, deg: usize) -> Result<RelationProblem> {
    let rows: Vec<Vec<ExactScalar>> = estimates
        .iter()
        .map(|e| {
            let q = |v: f64| -> Result<ExactScalar> {
                ExactScalar::from_float(v).ok_or_else(|| Error::Domain(format!("non-finite estimate {v}")))
            };
            Ok(normalized_row(&q(e.x)?, &q(e.m)?, &q(e.dm)?, deg))
        })
        .collect::<Result<_>>()?;
    RelationProblem::from_exact(ode_labels(deg), digits, &rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactmath::scalar::{frac, int};
    use crate::relation::{candidate_relations, simultaneous_relation};
    use proptest::prelude::*;

    #[test]
    fn reference_values() {
        assert_eq!(magnetization_reference(2.0).unwrap(), 0.0);
        assert_eq!(magnetization_reference(critical_x()).unwrap(), 0.0);
        let m3 = magnetization_reference(3.0).unwrap();
        assert!((m3 - (175.0f64 / 256.0).powf(0.125)).abs() < 1e-15);
        assert!(magnetization_reference(1.0).is_err());
        assert!(magnetization_reference(f64::NAN).is_err());
    }

    #[test]
    fn continuity_at_threshold() {
        let c = critical_x();
        assert_eq!(magnetization_reference(c - 1e-9).unwrap(), 0.0);
        assert!(magnetization_reference(c + 1e-9).unwrap() < 0.1);
        let grid: Vec<f64> = (0..200).map(|k| c + 1e-6 + k as f64 * 0.05).collect();
        let vals: Vec<f64> = grid.iter().map(|&x| magnetization_reference(x).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] > w[0]));
        assert!(vals.iter().all(|&v| (0.0..1.0).contains(&v)));
    }

    #[test]
    fn oracle_equation() {
        let ode = magnetization_ode_oracle();
        assert!(ode.defect().is_zero());
        assert!(ode.a.degree().unwrap() <= 10 && ode.b.degree().unwrap() <= 10);
        assert_eq!(ode.a.gcd(&ode.b), UniPoly::constant(int(1)));
        // b/a at 3 equals -m/m'
        let (m, dm) = oracle_values(&int(3), 40).unwrap();
        let lhs = ode.b.eval(&int(3)) / ode.a.eval(&int(3));
        let rhs = -(&m / &dm);
        assert!(scalar::to_f64(&(lhs - rhs)).abs() < 1e-30);
        let v = ode.coefficient_vector(10).unwrap();
        assert_eq!(MagnetizationOde::from_coefficients(&v).unwrap(), ode);
    }

    #[test]
    fn oracle_annihilates_reference_values() {
        let ode = magnetization_ode_oracle();
        for k in 0..20 {
            let x = 2.5 + 0.3 * k as f64;
            let m = magnetization_reference(x).unwrap();
            let h = 1e-5;
            let dm = (magnetization_reference(x + h).unwrap() - magnetization_reference(x - h).unwrap()) / (2.0 * h);
            let scale = ode.a.eval_f64(x).abs() * m + ode.b.eval_f64(x).abs() * dm.abs();
            assert!(ode.residual(x, m, dm).abs() < 1e-6 * scale, "x = {x}");
        }
    }

    #[test]
    fn significant_rounding() {
        assert_eq!(round_significant(&frac(123456, 1000), 3), frac(123, 1));
        assert_eq!(round_significant(&frac(-98765, 1_000_000), 2), frac(-99, 1000));
        assert_eq!(round_significant(&frac(1, 3), 4), frac(3333, 10000));
        assert_eq!(round_significant(&frac(999, 1), 2), int(1000));
        assert_eq!(round_significant(&int(7), 1), int(7));
    }

    #[test]
    fn oracle_values_are_truncations() {
        let (m, _) = oracle_values(&int(3), 20).unwrap();
        let f = scalar::to_f64(&m);
        assert!((f - (175.0f64 / 256.0).powf(0.125)).abs() < 1e-15);
        assert!(oracle_values(&int(2), 20).is_err());
    }

    #[test]
    fn recovers_the_equation_at_thirty_digits() {
        let problem = oracle_problem(&oracle_points(), 30, 10, VALIDATION_POINTS).unwrap();
        let rels = candidate_relations(&problem, 12).unwrap();
        assert!(!rels.is_empty());
        let oracle = magnetization_ode_oracle();
        let first = MagnetizationOde::from_coefficients(&rels[0].coeffs).unwrap();
        assert!(first.proportional_to(&oracle));
        assert_eq!(minimal_ode(&rels), Some(oracle));
    }

    #[test]
    fn six_digits_are_not_enough() {
        let problem = oracle_problem(&oracle_points(), 6, 10, VALIDATION_POINTS).unwrap();
        assert_eq!(simultaneous_relation(&problem, 12).unwrap(), None);
    }

    #[test]
    fn subcritical_estimate_is_zero() {
        let e = estimate_magnetization(1.5, 10, 0.04).unwrap();
        assert!(e.m.abs() <= 1e-4 + 10.0 * e.m_error, "{e:?}");
    }

    #[test]
    fn supercritical_estimate() {
        let e = estimate_magnetization(3.0, 12, 0.04).unwrap();
        let m = magnetization_reference(3.0).unwrap();
        assert!((e.m - m).abs() < 1e-4, "{e:?} vs {m}");
        assert!(e.m_error < 1e-3);
        let h = 1e-4;
        let dm = (magnetization_reference(3.0 + h).unwrap() - magnetization_reference(3.0 - h).unwrap()) / (2.0 * h);
        assert!((e.dm - dm).abs() < 2e-3, "{e:?} vs {dm}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn normalization_is_scale_invariant(k in (-30i64..30).prop_filter("nonzero", |k| *k != 0), d in 1i64..30) {
            let ode = magnetization_ode_oracle();
            let c = frac(k, d);
            let scaled = MagnetizationOde::normalized(ode.a.scale(&c), ode.b.scale(&c)).unwrap();
            prop_assert_eq!(scaled, ode);
        }

        #[test]
        fn identity_holds_at_rational_points(n in 5i64..400, d in 1i64..40) {
            let x = frac(n, d);
            prop_assume!(scalar::to_f64(&x) > 2.5);
            let ode = magnetization_ode_oracle();
            let (p, s) = eighth_power();
            let q_num = &(&p.derivative() * &s) - &(&p * &s.derivative());
            let lhs = ode.a.eval(&x) * int(8) * p.eval(&x) * s.eval(&x) + ode.b.eval(&x) * q_num.eval(&x);
            prop_assert!(lhs.is_zero());
        }
    }
}
