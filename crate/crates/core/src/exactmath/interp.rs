//! Exact polynomial interpolation with surplus-point validation.

use num_traits::Zero;

use super::poly::UniPoly;
use super::scalar::{self, ExactScalar};
use crate::error::{Error, Result};

/// Fits the unique polynomial of degree ≤ `degree` through the first
/// `degree + 1` points (Newton divided differences), then checks every
/// remaining point against it.
pub fn interpolate_poly(points: &[(ExactScalar, ExactScalar)], degree: usize) -> Result<UniPoly> {
    if points.len() < degree + 1 {
        return Err(Error::Usage(format!("degree {degree} needs {} points, got {}", degree + 1, points.len())));
    }
    for (i, (xi, _)) in points.iter().enumerate() {
        if points[..i].iter().any(|(xj, _)| xj == xi) {
            return Err(Error::Usage(format!("duplicate abscissa {}", scalar::to_string(xi))));
        }
    }
    let (fit, surplus) = points.split_at(degree + 1);
    let xs: Vec<&ExactScalar> = fit.iter().map(|(x, _)| x).collect();
    let mut dd: Vec<ExactScalar> = fit.iter().map(|(_, y)| y.clone()).collect();
    for level in 1..=degree {
        for i in (level..=degree).rev() {
            dd[i] = (&dd[i] - &dd[i - 1]) / (xs[i] - xs[i - level]);
        }
    }
    // expand the Newton form with Horner on polynomials
    let mut p = UniPoly::zero();
    for i in (0..=degree).rev() {
        let factor = UniPoly::new(vec![-xs[i].clone(), ExactScalar::from_integer(1.into())]);
        p = &(&p * &factor) + &UniPoly::constant(dd[i].clone());
    }
    for (x, y) in surplus {
        let got = p.eval(x);
        if &got != y {
            return Err(Error::Inconsistent {
                abscissa: scalar::to_string(x),
                expected: scalar::to_string(&got),
                got: scalar::to_string(y),
            });
        }
    }
    debug_assert!(fit.iter().all(|(x, y)| (p.eval(x) - y).is_zero()));
    Ok(p)
}
