//! Standard geometric realization of a complex and the exact cell algebra
//! built on the ε-threshold partition of barycentric coordinates.
//!
//! Every coordinate of a point is classified against the threshold ε as one
//! of `0`, `(0,ε)`, `ε`, `(ε,1)` or `1`. A label assigns one such symbol per
//! vertex; the nonempty labels partition the polytope into relatively open
//! convex cells. Unions of cells (representable sets) are closed under
//! closure, interior and boundary, all computed symbolically.

mod blocks;
mod cells;
mod order_complex;
mod point;
mod representable;

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::complex::SimplicialComplex;

pub use blocks::{
    classify_boundary, compare_indices, index_pairs, BoundaryCase, IndexComparison, IndexPairs,
};
pub use cells::{CellId, CellPartition, PartitionCell, Symbol};
pub use order_complex::{order_complex, pair_betti};
pub use point::{
    characteristic_simplices, characteristic_simplices_f64, epsilon_cell_membership, psi_epsilon,
    psi_epsilon_f64, Membership, Point,
};
pub use representable::RepresentableSet;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GeometryError {
    #[error("epsilon must be a positive rational written as p/q, got `{0}`")]
    BadEpsilon(String),
    #[error("epsilon {eps} is too large: need eps < {bound}")]
    EpsilonTooLarge { eps: String, bound: String },
    #[error("point has {got} coordinates, expected {expected}")]
    WrongLength { got: usize, expected: usize },
    #[error("coordinates must be non-negative")]
    Negative,
    #[error("coordinates sum to {0}, not 1")]
    BadSum(String),
    #[error("support of the point is not a simplex of the complex")]
    SupportNotInComplex,
    #[error("representable set is not closed")]
    NotClosed,
    #[error("subset relation violated")]
    NotSubset,
    #[error("not an isolated invariant set: {0}")]
    NotIsolated(String),
}

/// The threshold ε, kept as an exact rational.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Epsilon(BigRational);

impl Epsilon {
    pub fn new(value: BigRational) -> Result<Self, GeometryError> {
        if !value.is_positive() || value >= BigRational::one() {
            return Err(GeometryError::BadEpsilon(value.to_string()));
        }
        Ok(Epsilon(value))
    }

    pub fn from_ratio(p: i64, q: i64) -> Result<Self, GeometryError> {
        if q == 0 {
            return Err(GeometryError::BadEpsilon(format!("{p}/{q}")));
        }
        Self::new(BigRational::new(BigInt::from(p), BigInt::from(q)))
    }

    /// 1/(8d): small enough for both the geometry and the vector fields.
    pub fn default_for(x: &SimplicialComplex) -> Self {
        let d = x.num_vertices().max(1) as i64;
        Self::from_ratio(1, 8 * d).expect("1/(8d) is a valid threshold")
    }

    /// Requires ε < 1/(1 + dim X).
    pub fn check_geometry(&self, x: &SimplicialComplex) -> Result<(), GeometryError> {
        self.check_below(1 + x.dim() as i64)
    }

    /// Requires ε < 1/(6d), needed by the tile vector fields.
    pub fn check_field(&self, x: &SimplicialComplex) -> Result<(), GeometryError> {
        self.check_geometry(x)?;
        self.check_below(6 * x.num_vertices() as i64)
    }

    fn check_below(&self, n: i64) -> Result<(), GeometryError> {
        let bound = BigRational::new(BigInt::one(), BigInt::from(n));
        if self.0 < bound {
            Ok(())
        } else {
            Err(GeometryError::EpsilonTooLarge {
                eps: self.0.to_string(),
                bound: bound.to_string(),
            })
        }
    }

    pub fn value(&self) -> &BigRational {
        &self.0
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().expect("epsilon is a finite rational")
    }
}

impl FromStr for Epsilon {
    type Err = GeometryError;

    /// Accepts `p/q` or an integer; decimal notation is refused.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if t.is_empty() || !t.chars().all(|c| c.is_ascii_digit() || c == '/') {
            return Err(GeometryError::BadEpsilon(s.to_string()));
        }
        let r = BigRational::from_str(t).map_err(|_| GeometryError::BadEpsilon(s.to_string()))?;
        if r.is_zero() {
            return Err(GeometryError::BadEpsilon(s.to_string()));
        }
        Self::new(r)
    }
}

impl fmt::Display for Epsilon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[cfg(test)]
pub(crate) fn rat(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::running_example_complex;

    #[test]
    fn epsilon_parsing() {
        let e: Epsilon = "1/48".parse().unwrap();
        assert_eq!(e, Epsilon::from_ratio(1, 48).unwrap());
        assert!("0.02".parse::<Epsilon>().is_err());
        assert!("0/1".parse::<Epsilon>().is_err());
        assert!("3/2".parse::<Epsilon>().is_err());
        assert!("-1/4".parse::<Epsilon>().is_err());
    }

    #[test]
    fn epsilon_bounds() {
        let x = running_example_complex();
        let e = Epsilon::default_for(&x);
        assert_eq!(e.to_string(), "1/48");
        assert!(e.check_field(&x).is_ok());
        let big = Epsilon::from_ratio(1, 30).unwrap();
        assert!(big.check_geometry(&x).is_ok());
        assert!(big.check_field(&x).is_err());
        assert!(Epsilon::from_ratio(1, 3)
            .unwrap()
            .check_geometry(&x)
            .is_err());
    }
}
