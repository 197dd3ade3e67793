//! Ising polynomials: the coefficient of `w^e` in `Z_{n1,n2}(w)` as an
//! exact polynomial in the site count `N`, recovered by interpolation over
//! admissible tori, and the series `F(w)` built from their linear terms.
//!
//! A torus is admissible for `w^e` when no even subgraph with `e` edges can
//! wind around it. An even subgraph in homology class `(a, b)` has an edge
//! count congruent to `a*n1 + b*n2` mod 2, and winding once around the
//! `n1` direction costs at least `n1` edges. Hence, for even `e`:
//!
//! * classes with two parallel windings need `2 * min(n1, n2) > e`;
//! * a single winding around an even side `n` needs `n > e`;
//! * odd sides cannot host a single winding at even order at all.
//!
//! With both sides odd the first condition is the only one that bites,
//! which is what makes `p_20` reachable from width 11.

use std::collections::BTreeMap;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactmath::{interpolate_poly, scalar, ExactScalar, TruncSeries, UniPoly};
use crate::isingcore::GridSpec;
use crate::transfer::{z_series_table, TraceMode};

/// `p_e(N)`, the number of `e`-edge lattice polygons on a large torus.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IsingPolynomial {
    pub edge_count: usize,
    pub poly: UniPoly,
}

impl IsingPolynomial {
    pub fn degree(&self) -> Option<usize> {
        self.poly.degree()
    }

    /// Coefficient of `N^1`.
    pub fn linear_coefficient(&self) -> ExactScalar {
        linear_coefficient(self)
    }

    pub fn eval(&self, n: usize) -> ExactScalar {
        self.poly.eval(&scalar::int(n as i64))
    }

    /// `content*N*(primitive quotient)`, e.g. `1/2*N*(N + 9)`.
    pub fn render(&self) -> String {
        if self.poly.is_zero() {
            return "0".into();
        }
        let (quot, rem) = self.poly.div_rem(&UniPoly::var());
        debug_assert!(rem.is_zero());
        let (prim, content) = quot.primitive();
        let inner = prim.render("N");
        let head = if content == scalar::int(1) { String::new() } else { format!("{}*", scalar::to_string(&content)) };
        if prim.degree() == Some(0) {
            let c = &content * prim.coeff(0);
            return if c == scalar::int(1) { "N".into() } else { format!("{}*N", scalar::to_string(&c)) };
        }
        format!("{head}N*({inner})")
    }
}

pub fn linear_coefficient(p: &IsingPolynomial) -> ExactScalar {
    p.poly.coeff(1)
}

/// Whether the coefficient of `w^e` on this torus equals `p_e(N)`.
pub fn admissible(grid: GridSpec, e: usize) -> bool {
    let GridSpec { n1, n2 } = grid;
    2 * n1.min(n2) > e && (n1 % 2 == 1 || n1 > e) && (n2 % 2 == 1 || n2 > e)
}

/// Which tori feed the fits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridPolicy {
    /// Column heights `n1` with the `n2` values used for each.
    pub families: Vec<(usize, Vec<usize>)>,
}

impl GridPolicy {
    /// Smallest odd width `n1` with `2 n1 > order`, paired with the odd
    /// lengths `n2 = n1, n1 + 2, ...`; `floor(order/4) + 3` of them, which
    /// leaves at least one surplus point for the highest degree.
    pub fn for_order(order: usize) -> Self {
        let mut n1 = order / 2 + 1;
        if n1.is_multiple_of(2) {
            n1 += 1;
        }
        Self::odd_family(n1, order / 4 + 3)
    }

    /// A single width with `count` odd lengths starting at `n1`.
    pub fn odd_family(n1: usize, count: usize) -> Self {
        let start = if n1 % 2 == 1 { n1 } else { n1 + 1 };
        GridPolicy { families: vec![(n1, (0..count).map(|k| start + 2 * k).collect())] }
    }

    pub fn grids(&self) -> Vec<GridSpec> {
        self.families.iter().flat_map(|(n1, n2s)| n2s.iter().map(move |&n2| GridSpec { n1: *n1, n2 })).collect()
    }
}

/// Exact `Z` coefficients through `order` for every grid of the policy.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ZMeasurements {
    pub order: usize,
    pub series: BTreeMap<GridSpec, TruncSeries>,
}

impl ZMeasurements {
    pub fn collect(policy: &GridPolicy, order: usize) -> Result<Self> {
        let mut series = BTreeMap::new();
        for (n1, n2s) in &policy.families {
            let Some(&n2_max) = n2s.iter().max() else { continue };
            let table = z_series_table(*n1, n2_max, order, TraceMode::Orbits)?;
            for &n2 in n2s {
                series.insert(GridSpec::new(*n1, n2)?, table[n2 - 1].clone());
            }
        }
        Ok(ZMeasurements { order, series })
    }

    /// `(N, coefficient of w^e)` for the admissible grids.
    pub fn samples(&self, e: usize) -> Vec<(GridSpec, ExactScalar)> {
        self.series.iter().filter(|(g, _)| admissible(**g, e)).map(|(g, s)| (*g, s.coeff(e).clone())).collect()
    }
}

/// Fits `p_e(N)` through the measured coefficients.
///
/// The degree is raised until the first surplus point validates; all
/// further points must then agree.
pub fn ising_polynomial(e: usize, samples: &[(GridSpec, ExactScalar)]) -> Result<IsingPolynomial> {
    if e % 2 == 1 {
        return Err(Error::Usage(format!("edge count {e} is odd; odd polygon counts vanish")));
    }
    if let Some((g, _)) = samples.iter().find(|(g, _)| !admissible(*g, e)) {
        return Err(Error::Usage(format!(
            "grid {}x{} is not admissible for w^{e}: windings would contribute",
            g.n1, g.n2
        )));
    }
    let mut points: Vec<(ExactScalar, ExactScalar)> = Vec::new();
    for (g, c) in samples {
        let n = scalar::int(g.sites() as i64);
        if points.iter().any(|(m, _)| *m == n) {
            return Err(Error::Usage(format!("duplicate site count N = {}", g.sites())));
        }
        points.push((n, c.clone()));
    }
    for degree in 0..points.len().saturating_sub(1) {
        if interpolate_poly(&points[..degree + 2], degree).is_err() {
            continue;
        }
        let poly = interpolate_poly(&points, degree)?;
        if !poly.coeff(0).is_zero() {
            return Err(Error::Verification(format!(
                "p_{e} has constant term {}; samples are polluted",
                scalar::to_string(&poly.coeff(0))
            )));
        }
        return Ok(IsingPolynomial { edge_count: e, poly });
    }
    Err(Error::Usage(format!("{} samples leave no surplus point to validate p_{e}", points.len())))
}

/// `F(w) = sum_e a_e w^e` together with the polynomials it came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FSeries {
    pub series: TruncSeries,
    pub polynomials: Vec<IsingPolynomial>,
}

/// Fits `p_2, p_4, ..., p_order` and assembles `F(w)` through `w^order`.
pub fn assemble_f(order: usize, policy: &GridPolicy) -> Result<FSeries> {
    if order < 4 || order % 2 == 1 {
        return Err(Error::Usage(format!("order must be even and >= 4, got {order}")));
    }
    let data = ZMeasurements::collect(policy, order)?;
    assemble_f_from(&data, order)
}

pub fn assemble_f_from(data: &ZMeasurements, order: usize) -> Result<FSeries> {
    if data.order < order {
        return Err(Error::Usage(format!("measurements stop at order {}, need {order}", data.order)));
    }
    let mut coeffs = vec![ExactScalar::zero(); order + 1];
    let mut polynomials = Vec::new();
    for e in (2..=order).step_by(2) {
        let p = ising_polynomial(e, &data.samples(e))?;
        coeffs[e] = p.linear_coefficient();
        polynomials.push(p);
    }
    Ok(FSeries { series: TruncSeries::new(order, coeffs)?, polynomials })
}
