//! Rational-function guessing of coefficient ratios, the closed form for
//! `b_{2r}`, and the reference free-energy evaluator.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::duality::GSeries;
use crate::error::{Error, Result};
use crate::exactmath::{rref, scalar, ExactScalar, TruncSeries, UniPoly};

/// Number of trailing sequence entries kept out of every fit.
pub const HELD_OUT: usize = 2;

/// `P(r)/Q(r)` with `Q` a content-free integer polynomial with positive
/// leading coefficient and `gcd(P, Q) = 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalGuess {
    pub numerator: UniPoly,
    pub denominator: UniPoly,
}

impl RationalGuess {
    pub fn new(numerator: UniPoly, denominator: UniPoly) -> Result<Self> {
        if denominator.is_zero() {
            return Err(Error::Domain("zero denominator".into()));
        }
        let g = numerator.gcd(&denominator);
        let (mut p, _) = numerator.div_rem(&g);
        let (q, _) = denominator.div_rem(&g);
        let (q, content) = q.primitive();
        p = p.scale(&(ExactScalar::one() / content));
        Ok(RationalGuess { numerator: p, denominator: q })
    }

    pub fn eval(&self, r: &ExactScalar) -> Option<ExactScalar> {
        let q = self.denominator.eval(r);
        (!q.is_zero()).then(|| self.numerator.eval(r) / q)
    }

    /// Degrees `(numerator, denominator)`; the zero numerator counts as 0.
    pub fn degrees(&self) -> (usize, usize) {
        (self.numerator.degree().unwrap_or(0), self.denominator.degree().unwrap_or(0))
    }

    /// Factored form over the rationals in the variable `r`, e.g.
    /// `r*(2*r+1)^2/(r+1)^3`.
    pub fn canonical(&self) -> String {
        if self.numerator.is_zero() {
            return "0".into();
        }
        let (p, k) = self.numerator.primitive();
        let num = render_factored(&p, "r");
        let den = render_factored(&self.denominator, "r");
        let mut out = match (k.is_one(), (-&k).is_one(), num.as_str()) {
            (true, _, n) => n.to_string(),
            (_, true, "1") => "-1".to_string(),
            (_, true, n) => format!("-{n}"),
            (_, _, "1") => scalar::to_string(&k),
            (_, _, n) => format!("{}*{n}", scalar::to_string(&k)),
        };
        if den != "1" {
            let wrap = den.contains('*') && !den.starts_with('(') || den.contains(['+', '-']) && !den.starts_with('(');
            out = if wrap { format!("{out}/({den})") } else { format!("{out}/{den}") };
        }
        out
    }
}

impl std::fmt::Display for RationalGuess {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.canonical())
    }
}

fn divisors(n: &BigInt) -> Option<Vec<BigInt>> {
    let n = n.abs().to_u64()?;
    if n > 10_000_000 {
        return None;
    }
    let mut out = Vec::new();
    let mut d = 1u64;
    while d * d <= n {
        if n % d == 0 {
            out.push(BigInt::from(d));
            if d * d != n {
                out.push(BigInt::from(n / d));
            }
        }
        d += 1;
    }
    Some(out)
}

/// Splits off rational linear factors `(q r - p)^m` of a primitive integer
/// polynomial; what remains is rendered expanded.
fn render_factored(p: &UniPoly, var: &str) -> String {
    let mut rest = p.clone();
    let mut factors: Vec<(UniPoly, usize)> = Vec::new();
    fn push(f: UniPoly, factors: &mut Vec<(UniPoly, usize)>) {
        match factors.iter_mut().find(|(g, _)| *g == f) {
            Some((_, m)) => *m += 1,
            None => factors.push((f, 1)),
        }
    }
    while rest.degree().unwrap_or(0) >= 1 && rest.coeff(0).is_zero() {
        rest = rest.div_rem(&UniPoly::var()).0;
        push(UniPoly::var(), &mut factors);
    }
    'search: while rest.degree().unwrap_or(0) >= 1 {
        let ints = rest.integer_coeffs().expect("primitive polynomial has integer coefficients");
        let (Some(ps), Some(qs)) = (divisors(&ints[0]), divisors(ints.last().unwrap())) else { break };
        for q in &qs {
            for p in &ps {
                for p in [p.clone(), -p] {
                    if !p.gcd(q).is_one() {
                        continue;
                    }
                    let lin = UniPoly::new(vec![scalar::from_bigint(-p), scalar::from_bigint(q.clone())]);
                    let (quot, rem) = rest.div_rem(&lin);
                    if rem.is_zero() {
                        rest = quot;
                        push(lin, &mut factors);
                        continue 'search;
                    }
                }
            }
        }
        break;
    }
    let mut parts: Vec<String> = Vec::new();
    let constant = rest.degree() == Some(0);
    let unit = rest.coeff(0);
    if !constant {
        parts.push(format!("({})", render_ascending_free(&rest, var)));
    }
    factors.sort_by_key(|(f, _)| (!f.coeff(0).is_zero(), f.coeff(0).abs()));
    for (f, m) in &factors {
        let body = render_ascending_free(f, var);
        let body = if f.coeff(0).is_zero() { body } else { format!("({body})") };
        parts.push(if *m == 1 { body } else { format!("{body}^{m}") });
    }
    let body = parts.join("*");
    match (constant, body.is_empty()) {
        (true, true) => scalar::to_string(&unit),
        (true, false) if unit.is_one() => body,
        (true, false) if (-&unit).is_one() => format!("-{body}"),
        (true, false) => format!("{}*{body}", scalar::to_string(&unit)),
        (false, _) => body,
    }
}

/// Descending render without spaces: `2*r+1`.
fn render_ascending_free(p: &UniPoly, var: &str) -> String {
    p.render(var).replace(' ', "")
}

/// Result of a guessing attempt.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GuessOutcome {
    /// A candidate fitted the training points and reproduced every
    /// held-out point.
    Validated(RationalGuess),
    /// No candidate validated, and some degree pairs within `max_deg`
    /// could not be tried for lack of data.
    Underdetermined {
        needed: usize,
        available: usize,
    },
    NotFound,
}

impl GuessOutcome {
    pub fn guess(&self) -> Option<&RationalGuess> {
        match self {
            GuessOutcome::Validated(g) => Some(g),
            _ => None,
        }
    }
}

/// Finds the lowest-degree `P(r)/Q(r)` with `deg P, deg Q <= max_deg` such
/// that `P(r) = s_r Q(r)` at `r = 1..` on all but the last [`HELD_OUT`]
/// entries, and accepts it only if it also reproduces those.
pub fn guess_rational(seq: &[ExactScalar], max_deg: usize) -> GuessOutcome {
    if seq.len() <= HELD_OUT {
        return GuessOutcome::Underdetermined { needed: HELD_OUT + 1, available: seq.len() };
    }
    let train = seq.len() - HELD_OUT;
    let r_of = |i: usize| scalar::int(i as i64 + 1);
    let mut skipped = None;
    for total in 0..=2 * max_deg {
        for dn in 0..=total.min(max_deg) {
            let dd = total - dn;
            if dd > max_deg {
                continue;
            }
            // one scale is free
            let dof = dn + dd + 1;
            if dof > train {
                skipped.get_or_insert(dof + HELD_OUT);
                continue;
            }
            let rows: Vec<Vec<ExactScalar>> = (0..train)
                .map(|i| {
                    let r = r_of(i);
                    let mut row: Vec<ExactScalar> = (0..=dn).map(|k| num_traits::pow(r.clone(), k)).collect();
                    row.extend((0..=dd).map(|k| -(&seq[i] * num_traits::pow(r.clone(), k))));
                    row
                })
                .collect();
            let Ok(system) = rref(&rows, dn + dd + 2) else { continue };
            for v in system.nullspace() {
                let p = UniPoly::new(v[..=dn].to_vec());
                let q = UniPoly::new(v[dn + 1..].to_vec());
                let Ok(g) = RationalGuess::new(p, q) else { continue };
                let fits = seq.iter().enumerate().all(|(i, s)| g.eval(&r_of(i)).as_ref() == Some(s));
                if fits {
                    return GuessOutcome::Validated(g);
                }
            }
        }
    }
    match skipped {
        Some(needed) => GuessOutcome::Underdetermined { needed, available: seq.len() },
        None => GuessOutcome::NotFound,
    }
}

/// `s_{r+1}/s_r` for `r = 1..`.
pub fn ratios(seq: &[ExactScalar]) -> Result<Vec<ExactScalar>> {
    seq.windows(2)
        .map(|w| {
            if w[0].is_zero() {
                Err(Error::Domain("zero term in a ratio sequence".into()))
            } else {
                Ok(&w[1] / &w[0])
            }
        })
        .collect()
}

pub fn binomial(n: u64, k: u64) -> BigInt {
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// `b_{2r} = -C(2r,r)² / (r·4^{r+1})`.
pub fn closed_form_b(r: usize) -> ExactScalar {
    let c = binomial(2 * r as u64, r as u64);
    let den = BigInt::from(r) << (2 * (r + 1));
    -ExactScalar::new(&c * &c, den)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosedFormRow {
    pub r: usize,
    #[serde(with = "crate::exactmath::scalar::serde_one")]
    pub expected: ExactScalar,
    #[serde(with = "crate::exactmath::scalar::serde_one")]
    pub computed: ExactScalar,
    pub matches: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosedFormReport {
    pub rows: Vec<ClosedFormRow>,
}

impl ClosedFormReport {
    pub fn all_match(&self) -> bool {
        !self.rows.is_empty() && self.rows.iter().all(|r| r.matches)
    }

    pub fn mismatches(&self) -> Vec<usize> {
        self.rows.iter().filter(|r| !r.matches).map(|r| r.r).collect()
    }
}

/// Compares every available `b_{2r}` with the closed form.
pub fn verify_closed_form(g: &GSeries) -> ClosedFormReport {
    let rows = g
        .bs()
        .into_iter()
        .enumerate()
        .map(|(i, computed)| {
            let r = i + 1;
            let expected = closed_form_b(r);
            ClosedFormRow { r, matches: expected == computed, expected, computed }
        })
        .collect();
    ClosedFormReport { rows }
}

/// `-1/4 Σ C(2r,r)² z'^{2r}/r` through `z'^order`.
pub fn onsager_g_reference(order: usize) -> Result<TruncSeries> {
    if order < 2 {
        return Err(Error::Usage(format!("reference series needs order >= 2, got {order}")));
    }
    let mut coeffs = vec![ExactScalar::zero(); order + 1];
    for r in 1..=order / 2 {
        let c = binomial(2 * r as u64, r as u64);
        coeffs[2 * r] = -ExactScalar::new(&c * &c, BigInt::from(4 * r));
    }
    TruncSeries::new(order, coeffs)
}

/// `f(z·t)` coefficientwise: multiplies the `k`-th coefficient by `t^k`.
pub fn rescale(f: &TruncSeries, t: &ExactScalar) -> TruncSeries {
    let mut p = ExactScalar::one();
    let coeffs = f
        .coeffs()
        .iter()
        .map(|c| {
            let out = c * &p;
            p *= t;
            out
        })
        .collect();
    TruncSeries::new(f.order(), coeffs).expect("same length")
}

/// Evaluation of `f(x,1)` from the reference series.
#[derive(Clone, Debug, PartialEq)]
pub struct OnsagerValue {
    pub value: f64,
    /// The series argument `z' = (x - 1/x)/(x + 1/x)²`.
    pub argument: f64,
    pub terms: usize,
    pub tail_bound: f64,
}

pub const MAX_SERIES_TERMS: usize = 10_000_000;

/// `f(x,1) = ln(x + 1/x) + G(z')` with the tail bounded geometrically by
/// `q = 16 z'²`.
pub fn onsager_free_energy(x: f64, tol: f64) -> Result<OnsagerValue> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::Domain(format!("x must be positive and finite, got {x}")));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Usage(format!("tolerance must be positive, got {tol}")));
    }
    let inv = 1.0 / x;
    let s = x + inv;
    let zp = (x - inv) / (s * s);
    let q = 16.0 * zp * zp;
    if q >= 1.0 {
        return Err(Error::Domain(format!(
            "argument z' = {zp} is on or beyond the radius 1/4: x = {x} is at the critical point 1+√2 (or its inverse)"
        )));
    }
    let z2 = zp * zp;
    // t_r = -1/4 C(2r,r)² z'^{2r} / r, carried as c_r = C(2r,r)² z'^{2r}
    let mut c = 4.0 * z2;
    let mut sum = 0.0;
    let mut r = 1usize;
    loop {
        let term = -0.25 * c / r as f64;
        sum += term;
        let rf = r as f64;
        let next = c * (2.0 * (2.0 * rf + 1.0) / (rf + 1.0)).powi(2) * z2;
        let tail = 0.25 * next / (rf + 1.0) / (1.0 - q);
        if tail < tol {
            return Ok(OnsagerValue { value: s.ln() + sum, argument: zp, terms: r, tail_bound: tail });
        }
        if r >= MAX_SERIES_TERMS {
            return Err(Error::Convergence { iterations: r, last_change: tail });
        }
        c = next;
        r += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactmath::scalar::{frac, int};
    use proptest::prelude::*;

    fn published_bs() -> Vec<ExactScalar> {
        [
            (1, 4),
            (9, 32),
            (25, 48),
            (1225, 1024),
            (3969, 1280),
            (17787, 2048),
            (184041, 7168),
            (41409225, 524288),
            (147744025, 589824),
            (2133423721, 2621440),
        ]
        .iter()
        .map(|&(n, d)| frac(-n, d))
        .collect()
    }

    #[test]
    fn closed_form_values() {
        assert_eq!(published_bs(), (1..=10).map(closed_form_b).collect::<Vec<_>>());
    }

    #[test]
    fn guesses_the_ratio() {
        let g = guess_rational(&ratios(&published_bs()).unwrap(), 3);
        let g = g.guess().expect("validated");
        assert_eq!(g.canonical(), "r*(2*r+1)^2/(r+1)^3");
        assert_eq!(g.degrees(), (3, 3));
    }

    #[test]
    fn trivial_sequences() {
        let g = guess_rational(&vec![int(5); 5], 1);
        assert_eq!(g.guess().unwrap().canonical(), "5");
        let pow: Vec<_> = (1..=6).map(|r| scalar::from_bigint(BigInt::one() << r)).collect();
        let g = guess_rational(&ratios(&pow).unwrap(), 1);
        assert_eq!(g.guess().unwrap().canonical(), "2");
        let g = guess_rational(&vec![int(-1); 5], 1);
        assert_eq!(g.guess().unwrap().canonical(), "-1");
        // 1/r
        let h: Vec<_> = (1..=6).map(|r| frac(1, r)).collect();
        assert_eq!(guess_rational(&h, 1).guess().unwrap().canonical(), "1/r");
        // (r-3)/(2r+5)
        let h: Vec<_> = (1..=7).map(|r| frac(r - 3, 2 * r + 5)).collect();
        assert_eq!(guess_rational(&h, 1).guess().unwrap().canonical(), "(r-3)/(2*r+5)");
    }

    #[test]
    fn short_data_is_underdetermined() {
        let short = &ratios(&published_bs()[..5]).unwrap();
        assert!(matches!(guess_rational(short, 3), GuessOutcome::Underdetermined { .. }));
        // enough room for every candidate, but nothing low-degree fits
        let wild: Vec<_> = [3, 1, 4, 1, 5, 9, 2, 6, 5].iter().map(|&v| int(v)).collect();
        assert_eq!(guess_rational(&wild, 1), GuessOutcome::NotFound);
    }

    #[test]
    fn reference_series() {
        let g = onsager_g_reference(4).unwrap();
        assert_eq!(*g.coeff(2), int(-1));
        assert_eq!(*g.coeff(4), frac(-9, 2));
        assert_eq!(rescale(&g, &frac(1, 2)).coeff(4), &frac(-9, 32));
        let g = onsager_g_reference(60).unwrap();
        for r in 1..30 {
            let ratio = g.coeff(2 * r + 2) / g.coeff(2 * r);
            let r = r as i64;
            assert_eq!(ratio, frac(4 * r * (2 * r + 1) * (2 * r + 1), (r + 1) * (r + 1) * (r + 1)));
        }
    }

    #[test]
    fn free_energy_values() {
        let f = onsager_free_energy(1.0, 1e-15).unwrap();
        assert!((f.value - std::f64::consts::LN_2).abs() < 1e-15);
        let crit = 1.0 + 2f64.sqrt();
        assert!(matches!(onsager_free_energy(crit, 1e-9), Err(Error::Domain(_))));
        assert!(matches!(onsager_free_energy(1.0 / crit, 1e-9), Err(Error::Domain(_))));
        let f2 = onsager_free_energy(2.0, 1e-12).unwrap();
        assert!((f2.argument - 0.24).abs() < 1e-15);
        assert!(f2.tail_bound < 1e-12);
        let f3 = onsager_free_energy(3.0, 1e-12).unwrap();
        // duality: f(x*) = f(x) - log((x - 1/x)/2), with 3* = 2
        assert!((f2.value - (f3.value - (4.0f64 / 3.0).ln())).abs() < 1e-10);
        assert!((onsager_free_energy(0.5, 1e-12).unwrap().value - f2.value).abs() == 0.0);
    }

    fn small_poly(max_deg: usize) -> impl Strategy<Value = UniPoly> {
        prop::collection::vec(-6i64..=6, 1..=max_deg + 1).prop_map(|c| UniPoly::from_ints(&c))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn planted_rational_is_recovered(p in small_poly(2), q in small_poly(2)) {
            let max_deg = 2;
            prop_assume!(!q.is_zero());
            let n = 2 * max_deg + 3;
            let rs: Vec<ExactScalar> = (1..=n as i64).map(int).collect();
            prop_assume!(rs.iter().all(|r| !q.eval(r).is_zero()));
            let seq: Vec<_> = rs.iter().map(|r| p.eval(r) / q.eval(r)).collect();
            let planted = RationalGuess::new(p, q).unwrap();
            let got = guess_rational(&seq, max_deg);
            prop_assert_eq!(got.guess(), Some(&planted));
        }

        #[test]
        fn ratios_are_scale_free(k in (-50i64..50).prop_filter("nonzero", |k| *k != 0), d in 1i64..20) {
            let scaled: Vec<_> = published_bs().iter().map(|b| b * frac(k, d)).collect();
            prop_assert_eq!(
                guess_rational(&ratios(&scaled).unwrap(), 3),
                guess_rational(&ratios(&published_bs()).unwrap(), 3)
            );
        }

        #[test]
        fn evaluator_is_even_in_x(x in 0.05f64..0.4) {
            let a = onsager_free_energy(x, 1e-13).unwrap().value;
            let b = onsager_free_energy(1.0 / x, 1e-13).unwrap().value;
            prop_assert!((a - b).abs() < 1e-13);
        }
    }
}
