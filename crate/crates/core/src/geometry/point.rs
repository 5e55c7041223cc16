use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use super::{Epsilon, GeometryError};
use crate::complex::{Simplex, SimplexId, SimplicialComplex};

/// A point of |X| in exact barycentric coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Point {
    coords: Vec<BigRational>,
}

impl Point {
    pub fn new(x: &SimplicialComplex, coords: Vec<BigRational>) -> Result<Self, GeometryError> {
        if coords.len() != x.num_vertices() {
            return Err(GeometryError::WrongLength {
                got: coords.len(),
                expected: x.num_vertices(),
            });
        }
        if coords.iter().any(|c| c.is_negative()) {
            return Err(GeometryError::Negative);
        }
        let sum: BigRational = coords.iter().cloned().sum();
        if !sum.is_one() {
            return Err(GeometryError::BadSum(sum.to_string()));
        }
        let support: Vec<usize> = (0..coords.len())
            .filter(|&v| !coords[v].is_zero())
            .collect();
        let s = Simplex::new(support).map_err(|_| GeometryError::SupportNotInComplex)?;
        if !x.contains(&s) {
            return Err(GeometryError::SupportNotInComplex);
        }
        Ok(Point { coords })
    }

    /// Barycenter of a simplex.
    pub fn barycenter(x: &SimplicialComplex, s: &Simplex) -> Self {
        let w = BigRational::new(1.into(), (s.len() as i64).into());
        let mut coords = vec![BigRational::zero(); x.num_vertices()];
        for &v in s.vertices() {
            coords[v] = w.clone();
        }
        Point { coords }
    }

    pub fn coords(&self) -> &[BigRational] {
        &self.coords
    }

    pub fn to_f64(&self) -> Vec<f64> {
        use num_traits::ToPrimitive;
        self.coords
            .iter()
            .map(|c| c.to_f64().unwrap_or(f64::NAN))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Membership {
    /// In cc_ε(σ).
    Interior,
    /// In cl cc_ε(σ) but not in cc_ε(σ).
    Closure,
    Outside,
}

pub fn epsilon_cell_membership(x: &Point, sigma: &Simplex, eps: &Epsilon) -> Membership {
    let e = eps.value();
    let strict =
        x.coords
            .iter()
            .enumerate()
            .all(|(v, c)| if sigma.contains(v) { c > e } else { c < e });
    if strict {
        return Membership::Interior;
    }
    let weak =
        x.coords
            .iter()
            .enumerate()
            .all(|(v, c)| if sigma.contains(v) { c >= e } else { c <= e });
    if weak {
        Membership::Closure
    } else {
        Membership::Outside
    }
}

/// (σ_min, σ_max, X^ε(x)) of an exact point.
pub fn characteristic_simplices(
    x: &SimplicialComplex,
    point: &Point,
    eps: &Epsilon,
) -> (SimplexId, SimplexId, Vec<SimplexId>) {
    let e = eps.value();
    let lo: Vec<usize> = (0..point.coords.len())
        .filter(|&v| &point.coords[v] > e)
        .collect();
    let hi: Vec<usize> = (0..point.coords.len())
        .filter(|&v| &point.coords[v] >= e)
        .collect();
    let lo_s = Simplex::new(lo).expect("some coordinate exceeds eps");
    let hi_s = Simplex::new(hi).expect("some coordinate exceeds eps");
    let between = x
        .simplices()
        .iter()
        .enumerate()
        .filter(|(_, s)| lo_s.is_face_of(s) && s.is_face_of(&hi_s))
        .map(|(i, _)| i)
        .collect();
    (
        x.id_of(&lo_s).expect("sigma_min lies in the complex"),
        x.id_of(&hi_s).expect("sigma_max lies in the complex"),
        between,
    )
}

/// (σ_min, σ_max) vertex lists of a floating point, treating coordinates
/// within `snap` of ε as equal to ε.
pub fn characteristic_simplices_f64(x: &[f64], eps: f64, snap: f64) -> (Vec<usize>, Vec<usize>) {
    let lo = (0..x.len()).filter(|&v| x[v] > eps + snap).collect();
    let hi = (0..x.len()).filter(|&v| x[v] >= eps - snap).collect();
    (lo, hi)
}

fn phi(t: &BigRational, e: &BigRational) -> BigRational {
    if t <= e {
        BigRational::zero()
    } else {
        (t - e) / (BigRational::one() - e)
    }
}

/// ψ_ε: pushes the ε-neighbourhood of each face onto the face itself.
pub fn psi_epsilon(x: &Point, eps: &Epsilon) -> Vec<BigRational> {
    let e = eps.value();
    let raw: Vec<BigRational> = x.coords.iter().map(|t| phi(t, e)).collect();
    let total: BigRational = raw.iter().cloned().sum();
    raw.into_iter().map(|r| r / &total).collect()
}

pub fn psi_epsilon_f64(x: &[f64], eps: f64) -> Vec<f64> {
    let raw: Vec<f64> = x
        .iter()
        .map(|&t| {
            if t <= eps {
                0.0
            } else {
                (t - eps) / (1.0 - eps)
            }
        })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|r| r / total).collect()
}
