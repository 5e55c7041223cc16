use std::collections::BTreeSet;

use super::cells::{CellId, CellPartition};
use crate::complex::{Simplex, SimplexId, SimplicialComplex};
use crate::cvf::Cell;

/// A finite union of partition cells.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct RepresentableSet {
    pub cells: BTreeSet<CellId>,
}

impl RepresentableSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_cells(cells: impl IntoIterator<Item = CellId>) -> Self {
        RepresentableSet {
            cells: cells.into_iter().collect(),
        }
    }

    /// The whole polytope |X|.
    pub fn whole(p: &CellPartition) -> Self {
        Self::from_cells(0..p.len())
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, c: CellId) -> bool {
        self.cells.contains(&c)
    }

    pub fn union(&self, other: &Self) -> Self {
        Self::from_cells(self.cells.union(&other.cells).copied())
    }

    pub fn intersection(&self, other: &Self) -> Self {
        Self::from_cells(self.cells.intersection(&other.cells).copied())
    }

    pub fn difference(&self, other: &Self) -> Self {
        Self::from_cells(self.cells.difference(&other.cells).copied())
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.cells.is_subset(&other.cells)
    }

    pub fn complement(&self, p: &CellPartition) -> Self {
        Self::whole(p).difference(self)
    }

    pub fn closure(&self, p: &CellPartition) -> Self {
        Self::from_cells(self.cells.iter().flat_map(|&c| p.faces(c).iter().copied()))
    }

    pub fn is_closed(&self, p: &CellPartition) -> bool {
        self.cells
            .iter()
            .all(|&c| p.faces(c).iter().all(|f| self.cells.contains(f)))
    }

    /// Interior relative to |X|.
    pub fn interior(&self, p: &CellPartition) -> Self {
        self.complement(p).closure(p).complement(p)
    }

    /// Topological boundary relative to |X|.
    pub fn boundary(&self, p: &CellPartition) -> Self {
        self.closure(p).difference(&self.interior(p))
    }

    /// cc_ε(σ) as cells.
    pub fn eps_cell(p: &CellPartition, sigma: &Simplex) -> Self {
        Self::from_cells((0..p.len()).filter(|&c| p.cell(c).in_open_eps_cell(sigma)))
    }

    /// cl cc_ε(σ) as cells.
    pub fn closed_eps_cell(p: &CellPartition, sigma: &Simplex) -> Self {
        Self::from_cells((0..p.len()).filter(|&c| p.cell(c).in_closed_eps_cell(sigma)))
    }

    /// N_ε(A): union of cl cc_ε(σ) over σ ∈ A.
    pub fn n_epsilon<'a, I>(p: &CellPartition, x: &SimplicialComplex, set: I) -> Self
    where
        I: IntoIterator<Item = &'a SimplexId>,
    {
        let simplices: Vec<&Simplex> = set.into_iter().map(|&s| x.simplex(s)).collect();
        Self::from_cells(
            (0..p.len()).filter(|&c| simplices.iter().any(|s| p.cell(c).in_closed_eps_cell(s))),
        )
    }

    /// Flow tile C_ω = cl cc_ε(ω⁻) ∪ cl cc_ε(ω⁺).
    pub fn tile(p: &CellPartition, x: &SimplicialComplex, omega: Cell) -> Self {
        Self::n_epsilon(p, x, &[omega.minus(), omega.plus()])
    }

    /// One line per cell label, for debugging.
    pub fn dump(&self, p: &CellPartition) -> String {
        self.cells
            .iter()
            .map(|&c| p.cell(c).to_string())
            .collect::<Vec<_>>()
            .join("\n")
    }
}
