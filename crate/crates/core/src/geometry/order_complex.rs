use super::cells::{CellId, CellPartition};
use super::representable::RepresentableSet;
use super::GeometryError;
use crate::complex::Simplex;
use crate::homology;

/// Order complex of the face poset of a closed representable set: one
/// vertex per cell, one simplex per strictly increasing chain of faces.
/// Cell ids are already sorted by dimension, so they serve as the global
/// vertex order.
pub fn order_complex(
    p: &CellPartition,
    a: &RepresentableSet,
) -> Result<Vec<Simplex>, GeometryError> {
    if !a.is_closed(p) {
        return Err(GeometryError::NotClosed);
    }
    let mut out = Vec::new();
    let mut chain = Vec::new();
    for &c in &a.cells {
        descend(p, c, &mut chain, &mut out);
    }
    Ok(out)
}

fn descend(p: &CellPartition, c: CellId, chain: &mut Vec<CellId>, out: &mut Vec<Simplex>) {
    chain.push(c);
    out.push(Simplex::new(chain.clone()).expect("chains have distinct cells"));
    for &f in p.faces(c) {
        if f != c {
            descend(p, f, chain, out);
        }
    }
    chain.pop();
}

/// Relative Betti numbers of a pair of closed representable sets, computed on
/// their order complexes.
pub fn pair_betti(
    p: &CellPartition,
    a: &RepresentableSet,
    b: &RepresentableSet,
) -> Result<Vec<usize>, GeometryError> {
    if !b.is_subset(a) {
        return Err(GeometryError::NotSubset);
    }
    let oa = order_complex(p, a)?;
    if !b.is_closed(p) {
        return Err(GeometryError::NotClosed);
    }
    let ob: Vec<Simplex> = oa
        .iter()
        .filter(|s| s.vertices().iter().all(|&c| b.contains(c)))
        .cloned()
        .collect();
    Ok(homology::relative_betti(&oa, &ob).expect("order complexes of closed sets are closed"))
}
