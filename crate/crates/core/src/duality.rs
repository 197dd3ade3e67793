//! Kramers–Wannier duality, the symmetric `z` template, `F̄` and the change
//! of variable to `G(z)`.
//!
//! Under `x* = (x+1)/(x-1)` and `x = (1+w)/(1-w)` one gets `x* = 1/w`, so
//! `s = x + x* = (1+w²)/(w(1-w))` and `p = x x* = (1+w)/(w(1-w))`. The
//! template `z = Σ a_ij s^i p^j / Σ b_ij s^i p^j` (i+j ≤ 2) therefore clears
//! to a polynomial identity of degree 4 in `w` and 1 in `z`, with
//! coefficients linear in the twelve unknowns.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactmath::{rref, scalar, ExactScalar, TruncSeries, UniPoly};

/// `x* = (x+1)/(x-1)`.
pub fn dual_point(x: &ExactScalar) -> Result<ExactScalar> {
    if x.is_one() {
        return Err(Error::Domain("x = 1 is the pole of the duality map".into()));
    }
    let one = ExactScalar::one();
    Ok((x + &one) / (x - &one))
}

/// `w* = (1-w)/(1+w)`, the duality map in the high-temperature variable.
pub fn dual_w(w: &ExactScalar) -> Result<ExactScalar> {
    let one = ExactScalar::one();
    if *w == -&one {
        return Err(Error::Domain("w = -1 is the pole of the duality map".into()));
    }
    Ok((&one - w) / (&one + w))
}

pub fn dual_point_f64(x: f64) -> Result<f64> {
    if x == 1.0 {
        return Err(Error::Domain("x = 1 is the pole of the duality map".into()));
    }
    Ok((x + 1.0) / (x - 1.0))
}

/// `x = (1+w)/(1-w)`.
pub fn x_of_w(w: &ExactScalar) -> Result<ExactScalar> {
    let one = ExactScalar::one();
    if w.is_one() {
        return Err(Error::Domain("w = 1 corresponds to x = ∞".into()));
    }
    Ok((&one + w) / (&one - w))
}

/// `w = (x-1)/(x+1)`.
pub fn w_of_x(x: &ExactScalar) -> Result<ExactScalar> {
    let one = ExactScalar::one();
    if *x == -&one {
        return Err(Error::Domain("x = -1 has no w".into()));
    }
    Ok((x - &one) / (x + &one))
}

/// Unknowns in storage order.
pub const UNKNOWNS: [&str; 12] = [
    "a_{0,0}", "a_{1,0}", "a_{0,1}", "a_{2,0}", "a_{1,1}", "a_{0,2}", "b_{0,0}", "b_{1,0}", "b_{0,1}", "b_{2,0}",
    "b_{1,1}", "b_{0,2}",
];

/// Exponents `(i, j)` of `s^i p^j` for the six unknowns of each half.
const MONOMIALS: [(u32, u32); 6] = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)];

/// Pivot preference when solving the vanishing conditions; later columns
/// survive as free parameters.
const ELIMINATION_ORDER: [usize; 12] = [4, 1, 3, 2, 5, 0, 10, 8, 11, 7, 9, 6];

/// A homogeneous linear form in the twelve unknowns.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LinearForm(pub Vec<ExactScalar>);

impl LinearForm {
    pub fn zero() -> Self {
        LinearForm(vec![ExactScalar::zero(); UNKNOWNS.len()])
    }

    pub fn unknown(k: usize) -> Self {
        let mut f = Self::zero();
        f.0[k] = ExactScalar::one();
        f
    }

    /// Form from `(name, coefficient)` pairs.
    pub fn from_terms(terms: &[(&str, i64)]) -> Self {
        let mut f = Self::zero();
        for (name, c) in terms {
            let k = UNKNOWNS.iter().position(|u| u == name).expect("known unknown");
            f.0[k] += scalar::int(*c);
        }
        f
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    pub fn scale(&self, c: &ExactScalar) -> Self {
        LinearForm(self.0.iter().map(|a| a * c).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        LinearForm(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn eval(&self, values: &[ExactScalar]) -> ExactScalar {
        self.0.iter().zip(values).map(|(a, v)| a * v).sum()
    }

    /// e.g. `b_{0,0}-b_{1,0}+b_{2,0}`.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (c, name) in self.0.iter().zip(UNKNOWNS) {
            if c.is_zero() {
                continue;
            }
            if c.is_negative() {
                out.push('-');
            } else if !out.is_empty() {
                out.push('+');
            }
            if !c.abs().is_one() {
                out.push_str(&scalar::to_string(&c.abs()));
                out.push('*');
            }
            out.push_str(name);
        }
        if out.is_empty() {
            out.push('0');
        }
        out
    }
}

/// Polynomial in `w` with linear-form coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FormPoly(pub Vec<LinearForm>);

impl FormPoly {
    fn add_scaled(&mut self, p: &UniPoly, form: &LinearForm) {
        for (k, c) in p.coeffs().iter().enumerate() {
            if self.0.len() <= k {
                self.0.resize(k + 1, LinearForm::zero());
            }
            self.0[k] = self.0[k].add(&form.scale(c));
        }
    }

    pub fn degree(&self) -> Option<usize> {
        self.0.iter().rposition(|f| !f.is_zero())
    }

    pub fn coeff(&self, k: usize) -> LinearForm {
        self.0.get(k).cloned().unwrap_or_else(LinearForm::zero)
    }
}

/// `(1+w²)^i (1+w)^j (w(1-w))^(2-i-j)`: `s^i p^j` times `(w(1-w))²`.
pub fn cleared_monomial(i: u32, j: u32) -> UniPoly {
    let one_plus_w2 = UniPoly::from_ints(&[1, 0, 1]);
    let one_plus_w = UniPoly::from_ints(&[1, 1]);
    let d = UniPoly::from_ints(&[0, 1, -1]);
    &(&one_plus_w2.pow(i) * &one_plus_w.pow(j)) * &d.pow(2 - i - j)
}

/// The cleared template identity `z·Den(w) - Num(w) = 0`, as the pair
/// (`z^0` part, `z^1` part).
pub fn cleared_template() -> (FormPoly, FormPoly) {
    let mut z0 = FormPoly(Vec::new());
    let mut z1 = FormPoly(Vec::new());
    for (k, &(i, j)) in MONOMIALS.iter().enumerate() {
        let m = cleared_monomial(i, j);
        z0.add_scaled(&m, &LinearForm::unknown(k).scale(&scalar::int(-1)));
        z1.add_scaled(&m, &LinearForm::unknown(k + 6));
    }
    (z0, z1)
}

/// Outcome of solving the template.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZAnsatzSolution {
    /// Vanishing conditions, one per even-total-degree term `w^i z^j`.
    pub conditions: Vec<LinearForm>,
    /// Dimension of the solution space in the twelve unknowns.
    pub family_dimension: usize,
    /// Surviving identity `α(w³-w) + β(1+w²)² z = 0`.
    pub alpha: LinearForm,
    pub beta: LinearForm,
    /// `z^0` and `z^1` parts of the reduced identity.
    pub reduced: (FormPoly, FormPoly),
    /// Cleared degrees `(in w, in z)` of the unreduced identity.
    pub cleared_degrees: (usize, usize),
}

impl ZAnsatzSolution {
    /// The reduced identity in the customary layout.
    pub fn relation(&self) -> String {
        format!("(w-1)w(w+1)({}) + (1+w^2)^2 z ({}) = 0", self.alpha.render(), self.beta.render())
    }

    /// Number of free parameters left in the relation after projective
    /// normalization: the ratio `α/β`, i.e. the constant `c`.
    pub fn relation_parameters(&self) -> usize {
        1
    }

    /// `c = α/β` at a point of the solution family.
    pub fn constant_at(&self, values: &[ExactScalar]) -> Result<ExactScalar> {
        let b = self.beta.eval(values);
        if b.is_zero() {
            return Err(Error::Domain("β vanishes: the template degenerates".into()));
        }
        Ok(self.alpha.eval(values) / b)
    }
}

/// Forces the coefficients of `w^i z^j` with `i + j` even to zero and
/// reduces what is left modulo those conditions.
pub fn solve_z_ansatz() -> Result<ZAnsatzSolution> {
    let (z0, z1) = cleared_template();
    let deg_w = z0.degree().max(z1.degree()).unwrap_or(0);
    let mut conditions = Vec::new();
    for k in 0..=deg_w {
        // z^0 w^k is even when k is even, z^1 w^k when k is odd
        let form = if k % 2 == 0 { z0.coeff(k) } else { z1.coeff(k) };
        if !form.is_zero() {
            conditions.push(form);
        }
    }
    let permute = |f: &LinearForm| -> Vec<ExactScalar> { ELIMINATION_ORDER.iter().map(|&k| f.0[k].clone()).collect() };
    let unpermute = |v: Vec<ExactScalar>| -> LinearForm {
        let mut f = LinearForm::zero();
        for (pos, &k) in ELIMINATION_ORDER.iter().enumerate() {
            f.0[k] = v[pos].clone();
        }
        f
    };
    let system = rref(&conditions.iter().map(permute).collect::<Vec<_>>(), UNKNOWNS.len())?;
    let family_dimension = UNKNOWNS.len() - system.rank();
    if family_dimension == 0 {
        return Err(Error::Internal("template admits only the zero solution".into()));
    }
    let reduce = |p: &FormPoly| FormPoly(p.0.iter().map(|f| unpermute(system.reduce(&permute(f)))).collect());
    let (r0, r1) = (reduce(&z0), reduce(&z1));

    // expected shape: r0 = α(w³ - w), r1 = β(1 + 2w² + w⁴)
    let alpha = r0.coeff(3);
    let beta = r1.coeff(0);
    let minus = |f: &LinearForm| f.scale(&scalar::int(-1));
    let shape_ok = r0.degree() == Some(3)
        && r0.coeff(0).is_zero()
        && r0.coeff(1) == minus(&alpha)
        && r0.coeff(2).is_zero()
        && r1.degree() == Some(4)
        && r1.coeff(1).is_zero()
        && r1.coeff(2) == beta.scale(&scalar::int(2))
        && r1.coeff(3).is_zero()
        && r1.coeff(4) == beta;
    if !shape_ok || alpha.is_zero() || beta.is_zero() {
        return Err(Error::Internal("reduced template identity does not factor as expected".into()));
    }
    Ok(ZAnsatzSolution { conditions, family_dimension, alpha, beta, reduced: (r0, r1), cleared_degrees: (deg_w, 1) })
}

/// `z = c·w(1-w²)/(1+w²)²` and its reversion.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeOfVariable {
    #[serde(with = "crate::exactmath::scalar::serde_one")]
    c: ExactScalar,
}

impl Default for ChangeOfVariable {
    fn default() -> Self {
        ChangeOfVariable { c: scalar::int(2) }
    }
}

impl ChangeOfVariable {
    pub fn new(c: ExactScalar) -> Result<Self> {
        if c.is_zero() {
            return Err(Error::Domain("the constant c must be nonzero".into()));
        }
        Ok(ChangeOfVariable { c })
    }

    pub fn c(&self) -> &ExactScalar {
        &self.c
    }

    /// Numerator and denominator of `z(w)`.
    pub fn rational(&self) -> (UniPoly, UniPoly) {
        let num = UniPoly::from_ints(&[0, 1, 0, -1]).scale(&self.c);
        let den = UniPoly::from_ints(&[1, 0, 2, 0, 1]);
        (num, den)
    }

    /// `z(w)` through `w^order`.
    pub fn forward(&self, order: usize) -> Result<TruncSeries> {
        let (num, den) = self.rational();
        TruncSeries::from_poly(&num, order).mul(&TruncSeries::from_poly(&den, order).inverse()?)
    }

    /// `w(z)` through `z^order`.
    pub fn reversion(&self, order: usize) -> Result<TruncSeries> {
        self.forward(order)?.reverse()
    }

    /// `z(w*) - z(w)` with denominators cleared; zero iff `z` is invariant.
    pub fn duality_defect(&self) -> UniPoly {
        let (num, den) = self.rational();
        // w -> (1-w)/(1+w), homogenized with (1+w)^4
        let u = UniPoly::from_ints(&[1, -1]);
        let v = UniPoly::from_ints(&[1, 1]);
        let hom = |p: &UniPoly| -> UniPoly {
            let d = 4;
            p.coeffs()
                .iter()
                .enumerate()
                .fold(UniPoly::zero(), |acc, (k, c)| &acc + &(&u.pow(k as u32) * &v.pow((d - k) as u32)).scale(c))
        };
        let (num_d, den_d) = (hom(&num), hom(&den));
        &(&num_d * &den) - &(&num * &den_d)
    }
}

/// `F̄(w) = F(w) - log(1+w²)`.
pub fn fbar_series(f: &TruncSeries) -> Result<TruncSeries> {
    let order = f.order();
    let one_plus_w2 = TruncSeries::from_poly(&UniPoly::from_ints(&[1, 0, 1]), order);
    f.sub(&one_plus_w2.log()?)
}

/// `G(z) = Σ b_{2r} z^{2r}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GSeries {
    pub series: TruncSeries,
}

impl GSeries {
    pub fn order(&self) -> usize {
        self.series.order()
    }

    /// `b_{2r}`.
    pub fn b(&self, r: usize) -> &ExactScalar {
        self.series.coeff(2 * r)
    }

    /// `b_2, b_4, ...` up to the order.
    pub fn bs(&self) -> Vec<ExactScalar> {
        (1..=self.order() / 2).map(|r| self.b(r).clone()).collect()
    }

    pub fn is_well_formed(&self) -> bool {
        self.series.is_even() && self.series.coeff(0).is_zero() && self.bs().iter().all(Signed::is_negative)
    }
}

/// `G(z) = F̄(w(z))`.
pub fn change_to_z(fbar: &TruncSeries, cov: &ChangeOfVariable) -> Result<GSeries> {
    let w = cov.reversion(fbar.order())?;
    Ok(GSeries { series: fbar.compose(&w)? })
}
