use serde::Serialize;

use super::cells::{CellId, CellPartition};
use super::order_complex::pair_betti;
use super::representable::RepresentableSet;
use super::GeometryError;
use crate::complex::{Simplex, SimplexId};
use crate::conley::{check_isolated, conley_index, mouth, SimplexSet};
use crate::cvf::CombinatorialVectorField;
use crate::homology::PoincarePolynomial;

/// Isolating block and the two index pairs of an isolated invariant set.
#[derive(Clone, Debug)]
pub struct IndexPairs {
    /// B = N_ε(S) = P₁.
    pub block: RepresentableSet,
    /// B⁻ obtained as N_ε(Mo S) ∩ bd B.
    pub exit: RepresentableSet,
    /// B⁻ obtained from the boundary classification (σ_min ∈ Mo S).
    pub exit_by_table: RepresentableSet,
    pub p1: RepresentableSet,
    pub p2: RepresentableSet,
    /// N_ε(Cl S).
    pub q1: RepresentableSet,
    /// N_ε(Mo S).
    pub q2: RepresentableSet,
}

/// Where a boundary cell of B sits relative to S.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BoundaryCase {
    /// σ_max, σ_min both in S: cannot occur on bd B.
    Impossible,
    /// σ_max ∉ S, σ_min ∈ S.
    Ingress,
    /// σ_max ∈ S, σ_min ∉ S.
    Egress,
    /// σ_max ∉ S, σ_min ∉ S.
    BounceOff,
}

fn simplex_id(v: &CombinatorialVectorField, verts: Vec<usize>) -> SimplexId {
    let s = Simplex::new(verts).expect("characteristic simplex is nonempty");
    v.complex()
        .id_of(&s)
        .expect("characteristic simplex lies in the complex")
}

/// Characteristic simplices (σ_min, σ_max) of a cell.
pub(crate) fn characteristic(
    v: &CombinatorialVectorField,
    p: &CellPartition,
    c: CellId,
) -> (SimplexId, SimplexId) {
    let cell = p.cell(c);
    (
        simplex_id(v, cell.sigma_min()),
        simplex_id(v, cell.sigma_max()),
    )
}

pub fn classify_boundary(
    v: &CombinatorialVectorField,
    p: &CellPartition,
    s: &SimplexSet,
    c: CellId,
) -> BoundaryCase {
    let (lo, hi) = characteristic(v, p, c);
    match (s.contains(&hi), s.contains(&lo)) {
        (true, true) => BoundaryCase::Impossible,
        (false, true) => BoundaryCase::Ingress,
        (true, false) => BoundaryCase::Egress,
        (false, false) => BoundaryCase::BounceOff,
    }
}

pub fn index_pairs(
    v: &CombinatorialVectorField,
    p: &CellPartition,
    s: &SimplexSet,
) -> Result<IndexPairs, GeometryError> {
    let x = v.complex();
    check_isolated(v, s).map_err(|f| GeometryError::NotIsolated(f.describe(x)))?;
    let mo = mouth(x, s);
    let cl: SimplexSet = x.closure(s.iter().copied());

    let block = RepresentableSet::n_epsilon(p, x, s);
    let bd = block.boundary(p);
    let q2 = RepresentableSet::n_epsilon(p, x, &mo);
    let exit = q2.intersection(&bd);
    let exit_by_table = RepresentableSet::from_cells(
        bd.cells
            .iter()
            .copied()
            .filter(|&c| mo.contains(&characteristic(v, p, c).0)),
    );
    Ok(IndexPairs {
        p1: block.clone(),
        p2: exit.clone(),
        q1: RepresentableSet::n_epsilon(p, x, &cl),
        q2,
        block,
        exit,
        exit_by_table,
    })
}

/// Indices of S computed combinatorially and through both index pairs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IndexComparison {
    /// H(Cl S, Mo S).
    pub combinatorial: PoincarePolynomial,
    /// H(P₁, P₂) on the order complex.
    pub block_pair: PoincarePolynomial,
    /// H(Q₁, Q₂) on the order complex.
    pub closure_pair: PoincarePolynomial,
    /// Whether both descriptions of the exit set coincide.
    pub exit_sets_agree: bool,
}

impl IndexComparison {
    pub fn agrees(&self) -> bool {
        self.exit_sets_agree
            && self.block_pair == self.combinatorial
            && self.closure_pair == self.combinatorial
    }
}

pub fn compare_indices(
    v: &CombinatorialVectorField,
    p: &CellPartition,
    s: &SimplexSet,
) -> Result<IndexComparison, GeometryError> {
    let ip = index_pairs(v, p, s)?;
    let combinatorial =
        conley_index(v, s).map_err(|e| GeometryError::NotIsolated(e.to_string()))?;
    Ok(IndexComparison {
        combinatorial,
        block_pair: PoincarePolynomial::new(pair_betti(p, &ip.p1, &ip.p2)?),
        closure_pair: PoincarePolynomial::new(pair_betti(p, &ip.q1, &ip.q2)?),
        exit_sets_agree: ip.exit == ip.exit_by_table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::running_example;
    use crate::geometry::Epsilon;

    fn set(v: &CombinatorialVectorField, items: &[&str]) -> SimplexSet {
        let x = v.complex();
        items
            .iter()
            .map(|s| x.id_of(&x.parse_simplex(s).unwrap()).unwrap())
            .collect()
    }

    fn partition(v: &CombinatorialVectorField) -> CellPartition {
        CellPartition::new(v.complex(), &Epsilon::default_for(v.complex()))
    }

    #[test]
    fn repeller_exits_everywhere() {
        let v = running_example();
        let p = partition(&v);
        let s = set(&v, &["ABD"]);
        let ip = index_pairs(&v, &p, &s).unwrap();
        let bd = ip.block.boundary(&p);
        assert!(!bd.is_empty());
        assert_eq!(ip.exit, bd);
        assert_eq!(ip.exit_by_table, ip.exit);
        for &c in &bd.cells {
            assert_ne!(classify_boundary(&v, &p, &s, c), BoundaryCase::Impossible);
            assert_ne!(classify_boundary(&v, &p, &s, c), BoundaryCase::Ingress);
        }
    }

    #[test]
    fn attractor_has_empty_exit() {
        let v = running_example();
        let p = partition(&v);
        let ip = index_pairs(&v, &p, &set(&v, &["F"])).unwrap();
        assert!(ip.exit.is_empty());
        assert!(ip.exit_by_table.is_empty());
        assert!(!ip.block.boundary(&p).is_empty());
    }

    #[test]
    fn saddle_exits_through_its_ends() {
        let v = running_example();
        let p = partition(&v);
        let s = set(&v, &["BD"]);
        let ip = index_pairs(&v, &p, &s).unwrap();
        assert_eq!(ip.exit, ip.exit_by_table);
        let ends = set(&v, &["B", "D"]);
        assert!(!ip.exit.is_empty());
        for &c in &ip.exit.cells {
            assert!(ends.contains(&characteristic(&v, &p, c).0));
        }
        // Both ends are used.
        let used: SimplexSet = ip
            .exit
            .cells
            .iter()
            .map(|&c| characteristic(&v, &p, c).0)
            .collect();
        assert_eq!(used, ends);
        assert!(ip.exit.is_closed(&p));
    }

    #[test]
    fn indices_agree_on_the_running_example() {
        let v = running_example();
        let p = partition(&v);
        for (names, index) in [(&["F"][..], "1"), (&["BD"][..], "t"), (&["ABD"][..], "t^2")] {
            let c = compare_indices(&v, &p, &set(&v, names)).unwrap();
            assert!(c.agrees(), "{names:?}: {c:?}");
            assert_eq!(c.combinatorial.to_string(), index);
        }
    }

    #[test]
    fn rejects_non_isolated_sets() {
        let v = running_example();
        let p = partition(&v);
        assert!(matches!(
            index_pairs(&v, &p, &set(&v, &["A"])),
            Err(GeometryError::NotIsolated(_))
        ));
    }
}
