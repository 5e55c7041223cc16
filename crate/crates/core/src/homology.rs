//! Exact relative simplicial homology over the rationals.
//!
//! Ranks come from fraction-free integer elimination on sparse boundary
//! rows. Elimination runs in `i64` with checked arithmetic and restarts in
//! arbitrary precision if an intermediate value overflows.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{CheckedMul, CheckedSub, Signed};
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::complex::Simplex;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HomologyError {
    #[error("subcomplex is not contained in the ambient complex")]
    NotSubset,
    #[error("set is not closed under faces (missing face of {0:?})")]
    NotClosed(Vec<usize>),
}

/// Generating polynomial of Betti numbers, trailing zeros trimmed.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct PoincarePolynomial(Vec<usize>);

impl PoincarePolynomial {
    pub fn new(mut coeffs: Vec<usize>) -> Self {
        while coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        PoincarePolynomial(coeffs)
    }

    pub fn zero() -> Self {
        PoincarePolynomial(Vec::new())
    }

    /// `t^k`.
    pub fn monomial(k: usize) -> Self {
        let mut c = vec![0; k + 1];
        c[k] = 1;
        PoincarePolynomial(c)
    }

    pub fn coefficients(&self) -> &[usize] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn eval(&self, t: i64) -> i64 {
        self.0.iter().rev().fold(0i64, |acc, &c| acc * t + c as i64)
    }
}

impl fmt::Display for PoincarePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "0");
        }
        let mut terms = Vec::new();
        for (k, &c) in self.0.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let var = match k {
                0 => String::new(),
                1 => "t".to_string(),
                _ => format!("t^{k}"),
            };
            terms.push(match (c, k) {
                (_, 0) => c.to_string(),
                (1, _) => var,
                _ => format!("{c}{var}"),
            });
        }
        write!(f, "{}", terms.join(" + "))
    }
}

impl Serialize for PoincarePolynomial {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

type SparseRow = Vec<(usize, i64)>;

/// Quotient chain complex C(A)/C(B) with its boundary maps.
#[derive(Clone, Debug)]
pub struct ChainComplex {
    /// `bases[k]`: the k-simplices of A \ B, sorted.
    pub bases: Vec<Vec<Simplex>>,
    /// `boundaries[k]`: one sparse row per basis element of dimension k,
    /// indexing into `bases[k - 1]`. Empty for k = 0.
    pub boundaries: Vec<Vec<SparseRow>>,
}

impl ChainComplex {
    /// Builds the relative chain complex of a pair of closed simplex sets.
    pub fn relative(a: &[Simplex], b: &[Simplex]) -> Result<Self, HomologyError> {
        let a_set: HashSet<&Simplex> = a.iter().collect();
        let b_set: HashSet<&Simplex> = b.iter().collect();
        if !b_set.is_subset(&a_set) {
            return Err(HomologyError::NotSubset);
        }
        for set in [&a_set, &b_set] {
            for s in set.iter() {
                if let Some(_missing) = s.facets().iter().find(|f| !set.contains(f)) {
                    return Err(HomologyError::NotClosed(s.vertices().to_vec()));
                }
            }
        }
        let top = a.iter().map(|s| s.dim() + 1).max().unwrap_or(0);
        let mut bases: Vec<Vec<Simplex>> = vec![Vec::new(); top];
        for s in a_set.difference(&b_set) {
            bases[s.dim()].push((*s).clone());
        }
        for basis in &mut bases {
            basis.sort();
        }
        let index: Vec<HashMap<&Simplex, usize>> = bases
            .iter()
            .map(|b| b.iter().enumerate().map(|(i, s)| (s, i)).collect())
            .collect();
        let mut boundaries = vec![Vec::new(); top];
        for k in 1..top {
            boundaries[k] = bases[k]
                .iter()
                .map(|s| {
                    let mut row: SparseRow = s
                        .facets()
                        .iter()
                        .enumerate()
                        .filter_map(|(i, f)| {
                            index[k - 1]
                                .get(f)
                                .map(|&j| (j, if i % 2 == 0 { 1 } else { -1 }))
                        })
                        .collect();
                    row.sort_unstable();
                    row
                })
                .collect();
        }
        Ok(ChainComplex { bases, boundaries })
    }

    pub fn rank_of_chain_group(&self, k: usize) -> usize {
        self.bases.get(k).map_or(0, Vec::len)
    }

    /// rank ∂_k over Q.
    pub fn boundary_rank(&self, k: usize) -> usize {
        match self.boundaries.get(k) {
            Some(rows) if !rows.is_empty() => rank(rows),
            _ => 0,
        }
    }

    pub fn betti(&self) -> Vec<usize> {
        let n = self.bases.len();
        let ranks: Vec<usize> = (0..=n).map(|k| self.boundary_rank(k)).collect();
        let mut betti: Vec<usize> = (0..n)
            .map(|k| self.bases[k].len() - ranks[k] - ranks[k + 1])
            .collect();
        while betti.last() == Some(&0) {
            betti.pop();
        }
        betti
    }

    /// Checks ∂_{k-1} ∘ ∂_k = 0 for every k.
    pub fn boundary_squared_is_zero(&self) -> bool {
        for k in 2..self.boundaries.len() {
            for row in &self.boundaries[k] {
                let mut acc: BTreeMap<usize, i64> = BTreeMap::new();
                for &(j, c) in row {
                    for &(i, d) in &self.boundaries[k - 1][j] {
                        *acc.entry(i).or_default() += c * d;
                    }
                }
                if acc.values().any(|&v| v != 0) {
                    return false;
                }
            }
        }
        true
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.bases
            .iter()
            .enumerate()
            .map(|(k, b)| {
                if k % 2 == 0 {
                    b.len() as i64
                } else {
                    -(b.len() as i64)
                }
            })
            .sum()
    }
}

/// Betti numbers of H_*(A, B) over Q.
pub fn relative_betti(a: &[Simplex], b: &[Simplex]) -> Result<Vec<usize>, HomologyError> {
    Ok(ChainComplex::relative(a, b)?.betti())
}

pub fn absolute_betti(a: &[Simplex]) -> Result<Vec<usize>, HomologyError> {
    relative_betti(a, &[])
}

pub fn poincare(a: &[Simplex], b: &[Simplex]) -> Result<PoincarePolynomial, HomologyError> {
    relative_betti(a, b).map(PoincarePolynomial::new)
}

/// Rank over Q of a set of sparse integer rows.
pub fn rank(rows: &[SparseRow]) -> usize {
    rank_in::<i64>(rows).unwrap_or_else(|| {
        rank_in::<BigInt>(rows).expect("arbitrary precision elimination cannot overflow")
    })
}

fn rank_in<T>(rows: &[SparseRow]) -> Option<usize>
where
    T: Integer + Signed + Clone + CheckedMul + CheckedSub + From<i64>,
{
    let mut pivots: HashMap<usize, Vec<(usize, T)>> = HashMap::new();
    for raw in rows {
        let mut row: Vec<(usize, T)> = raw
            .iter()
            .filter(|(_, c)| *c != 0)
            .map(|&(j, c)| (j, T::from(c)))
            .collect();
        while let Some((lead, coeff)) = row.first().cloned() {
            let Some(pivot) = pivots.get(&lead) else {
                break;
            };
            let g = coeff.gcd(&pivot[0].1);
            let a = pivot[0].1.clone() / g.clone();
            let b = coeff / g;
            row = combine(&row, &a, pivot, &b)?;
            normalize(&mut row);
        }
        if let Some(&(lead, _)) = row.first() {
            pivots.insert(lead, row);
        }
    }
    Some(pivots.len())
}

/// a·x − b·y on sorted sparse rows, dropping zeros.
fn combine<T>(x: &[(usize, T)], a: &T, y: &[(usize, T)], b: &T) -> Option<Vec<(usize, T)>>
where
    T: Integer + Clone + CheckedMul + CheckedSub,
{
    let mut out = Vec::with_capacity(x.len() + y.len());
    let (mut i, mut j) = (0, 0);
    let zero = T::zero();
    while i < x.len() || j < y.len() {
        let (col, xv, yv) = match (x.get(i), y.get(j)) {
            (Some(p), Some(q)) if p.0 == q.0 => {
                i += 1;
                j += 1;
                (p.0, &p.1, &q.1)
            }
            (Some(p), Some(q)) if p.0 < q.0 => {
                i += 1;
                (p.0, &p.1, &zero)
            }
            (Some(p), None) => {
                i += 1;
                (p.0, &p.1, &zero)
            }
            (_, Some(q)) => {
                j += 1;
                (q.0, &zero, &q.1)
            }
            (None, None) => unreachable!(),
        };
        let v = a.checked_mul(xv)?.checked_sub(&b.checked_mul(yv)?)?;
        if !v.is_zero() {
            out.push((col, v));
        }
    }
    Some(out)
}

fn normalize<T: Integer + Signed + Clone>(row: &mut [(usize, T)]) {
    let g = row.iter().fold(T::zero(), |g, (_, c)| g.gcd(c));
    if !g.is_zero() && !g.is_one() {
        for (_, c) in row.iter_mut() {
            *c = c.clone() / g.clone();
        }
    }
}


#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    /// Random complex on `n` vertices generated by up to 6 random faces.
    fn arb_complex() -> impl Strategy<Value = Vec<Simplex>> {
        proptest::collection::vec(proptest::collection::btree_set(0usize..6, 1..5), 1..7).prop_map(
            |gens| {
                let mut all: Vec<Simplex> = gens
                    .into_iter()
                    .flat_map(|g| Simplex::new(g.into_iter().collect()).unwrap().faces())
                    .collect();
                all.sort();
                all.dedup();
                all
            },
        )
    }

    fn relabel(set: &[Simplex], perm: &[usize]) -> Vec<Simplex> {
        set.iter()
            .map(|s| Simplex::new(s.vertices().iter().map(|&v| perm[v]).collect()).unwrap())
            .collect()
    }

    proptest! {
        #[test]
        fn boundary_squared_zero_and_euler(a in arb_complex(), keep in 0usize..6) {
            let b: Vec<Simplex> = a.iter().filter(|s| s.vertices().iter().all(|&v| v < keep)).cloned().collect();
            let cc = ChainComplex::relative(&a, &b).unwrap();
            prop_assert!(cc.boundary_squared_is_zero());
            let betti = cc.betti();
            let alt: i64 = betti.iter().enumerate()
                .map(|(k, &v)| if k % 2 == 0 { v as i64 } else { -(v as i64) }).sum();
            prop_assert_eq!(alt, cc.euler_characteristic());
        }

        #[test]
        fn betti_independent_of_vertex_order(a in arb_complex(),
                                             perm in Just((0..6).collect::<Vec<usize>>()).prop_shuffle()) {
            let b: Vec<Simplex> = a.iter().filter(|s| s.dim() == 0 && s.vertices()[0] % 2 == 0).cloned().collect();
            let before = relative_betti(&a, &b).unwrap();
            let after = relative_betti(&relabel(&a, &perm), &relabel(&b, &perm)).unwrap();
            prop_assert_eq!(before, after);
        }
    }
}
