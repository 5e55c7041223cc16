//! Combinatorial vector fields on a simplicial complex and the multivalued
//! flow map they induce.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use serde::Serialize;
use thiserror::Error;

use crate::complex::{SimplexId, SimplicialComplex};

/// One block of the partition: a critical simplex or an arrow from a facet
/// (`tail`) to the simplex it is paired with (`head`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Cell {
    Critical(SimplexId),
    Arrow { tail: SimplexId, head: SimplexId },
}

impl Cell {
    /// ω⁻: the lower simplex of the cell.
    pub fn minus(&self) -> SimplexId {
        match *self {
            Cell::Critical(s) => s,
            Cell::Arrow { tail, .. } => tail,
        }
    }

    /// ω⁺: the upper simplex of the cell.
    pub fn plus(&self) -> SimplexId {
        match *self {
            Cell::Critical(s) => s,
            Cell::Arrow { head, .. } => head,
        }
    }

    pub fn is_critical(&self) -> bool {
        matches!(self, Cell::Critical(_))
    }

    pub fn simplices(&self) -> Vec<SimplexId> {
        match *self {
            Cell::Critical(s) => vec![s],
            Cell::Arrow { tail, head } => vec![tail, head],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SimplexKind {
    Critical,
    Tail,
    Head,
}

/// Everything wrong with a proposed partition.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct FieldReport {
    pub uncovered: Vec<SimplexId>,
    pub duplicated: Vec<SimplexId>,
    pub non_facet_arrows: Vec<(SimplexId, SimplexId)>,
}

impl FieldReport {
    pub fn is_ok(&self) -> bool {
        self.uncovered.is_empty() && self.duplicated.is_empty() && self.non_facet_arrows.is_empty()
    }

    /// Human-readable lines, one per problem.
    pub fn describe(&self, x: &SimplicialComplex) -> Vec<String> {
        let mut out = Vec::new();
        for &s in &self.uncovered {
            out.push(format!(
                "simplex {} is not covered by the field",
                x.format_id(s)
            ));
        }
        for &s in &self.duplicated {
            out.push(format!(
                "simplex {} is covered more than once",
                x.format_id(s)
            ));
        }
        for &(t, h) in &self.non_facet_arrows {
            out.push(format!(
                "arrow {} -> {}: tail is not a facet of head",
                x.format_id(t),
                x.format_id(h)
            ));
        }
        out
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("invalid combinatorial vector field ({} problems)", count(.0))]
    Invalid(FieldReport),
    #[error("map form violates condition ({0})")]
    BadMap(String),
    #[error("simplex id {0} out of range")]
    OutOfRange(SimplexId),
}

fn count(r: &FieldReport) -> usize {
    r.uncovered.len() + r.duplicated.len() + r.non_facet_arrows.len()
}

/// Checks that the listed critical cells and arrows partition `x` into
/// singletons and facet doubletons.
pub fn validate_field(
    x: &SimplicialComplex,
    critical: &[SimplexId],
    arrows: &[(SimplexId, SimplexId)],
) -> FieldReport {
    let mut hits = vec![0usize; x.len()];
    let mut report = FieldReport::default();
    for &s in critical {
        hits[s] += 1;
    }
    for &(t, h) in arrows {
        hits[t] += 1;
        hits[h] += 1;
        if !x.simplex(t).is_facet_of(x.simplex(h)) {
            report.non_facet_arrows.push((t, h));
        }
    }
    for (s, &n) in hits.iter().enumerate() {
        match n {
            0 => report.uncovered.push(s),
            1 => {}
            _ => report.duplicated.push(s),
        }
    }
    report
}

/// Π_V as adjacency lists over simplex ids.
#[derive(Clone, Debug)]
pub struct FlowGraph {
    pub succ: Vec<Vec<SimplexId>>,
}

impl FlowGraph {
    pub fn len(&self) -> usize {
        self.succ.len()
    }

    pub fn is_empty(&self) -> bool {
        self.succ.is_empty()
    }

    pub fn has_edge(&self, a: SimplexId, b: SimplexId) -> bool {
        self.succ[a].binary_search(&b).is_ok()
    }

    /// Adjacency restricted to the vertex set `keep`.
    pub fn restricted(&self, keep: &BTreeSet<SimplexId>) -> Vec<Vec<SimplexId>> {
        (0..self.succ.len())
            .map(|a| {
                if keep.contains(&a) {
                    self.succ[a]
                        .iter()
                        .copied()
                        .filter(|b| keep.contains(b))
                        .collect()
                } else {
                    Vec::new()
                }
            })
            .collect()
    }
}

/// A combinatorial vector field together with the complex it lives on.
#[derive(Debug)]
pub struct CombinatorialVectorField {
    complex: SimplicialComplex,
    cells: Vec<Cell>,
    owner: Vec<usize>,
    graph: OnceLock<FlowGraph>,
}

impl Clone for CombinatorialVectorField {
    fn clone(&self) -> Self {
        CombinatorialVectorField {
            complex: self.complex.clone(),
            cells: self.cells.clone(),
            owner: self.owner.clone(),
            graph: OnceLock::new(),
        }
    }
}

impl CombinatorialVectorField {
    pub fn new(
        complex: SimplicialComplex,
        critical: Vec<SimplexId>,
        arrows: Vec<(SimplexId, SimplexId)>,
    ) -> Result<Self, FieldError> {
        if let Some(&s) = critical
            .iter()
            .chain(arrows.iter().flat_map(|(t, h)| [t, h]))
            .find(|&&s| s >= complex.len())
        {
            return Err(FieldError::OutOfRange(s));
        }
        let report = validate_field(&complex, &critical, &arrows);
        if !report.is_ok() {
            return Err(FieldError::Invalid(report));
        }
        let mut cells: Vec<Cell> = critical
            .into_iter()
            .map(Cell::Critical)
            .chain(
                arrows
                    .into_iter()
                    .map(|(tail, head)| Cell::Arrow { tail, head }),
            )
            .collect();
        cells.sort_by_key(|c| (c.minus(), c.plus()));
        let mut owner = vec![0; complex.len()];
        for (i, c) in cells.iter().enumerate() {
            for s in c.simplices() {
                owner[s] = i;
            }
        }
        Ok(CombinatorialVectorField {
            complex,
            cells,
            owner,
            graph: OnceLock::new(),
        })
    }

    /// Like [`Self::new`], but simplices not mentioned anywhere become critical.
    pub fn with_completion(
        complex: SimplicialComplex,
        mut critical: Vec<SimplexId>,
        arrows: Vec<(SimplexId, SimplexId)>,
    ) -> Result<Self, FieldError> {
        let mut seen = vec![false; complex.len()];
        for &s in critical
            .iter()
            .chain(arrows.iter().flat_map(|(t, h)| [t, h]))
        {
            if s < seen.len() {
                seen[s] = true;
            }
        }
        critical.extend((0..complex.len()).filter(|&s| !seen[s]));
        Self::new(complex, critical, arrows)
    }

    /// The field in which every simplex is critical.
    pub fn all_critical(complex: SimplicialComplex) -> Self {
        let crit = (0..complex.len()).collect();
        Self::new(complex, crit, Vec::new()).expect("all-critical field is always valid")
    }

    /// Builds a field from its map form: `map[σ] = Some(τ)` means σ is the tail
    /// of an arrow with head τ.
    pub fn from_map(
        complex: SimplicialComplex,
        map: &[Option<SimplexId>],
    ) -> Result<Self, FieldError> {
        if map.len() != complex.len() {
            return Err(FieldError::BadMap(format!(
                "expected {} entries, got {}",
                complex.len(),
                map.len()
            )));
        }
        let mut preimages = vec![0usize; complex.len()];
        for (s, img) in map.iter().enumerate() {
            if let Some(t) = *img {
                if t >= complex.len() {
                    return Err(FieldError::OutOfRange(t));
                }
                if !complex.simplex(s).is_facet_of(complex.simplex(t)) {
                    return Err(FieldError::BadMap(format!(
                        "{} is not a facet of {}",
                        complex.format_id(s),
                        complex.format_id(t)
                    )));
                }
                if map[t].is_some() {
                    return Err(FieldError::BadMap(format!(
                        "{} is both an image and has an image",
                        complex.format_id(t)
                    )));
                }
                preimages[t] += 1;
                if preimages[t] > 1 {
                    return Err(FieldError::BadMap(format!(
                        "{} has more than one preimage",
                        complex.format_id(t)
                    )));
                }
            }
        }
        let arrows: Vec<(SimplexId, SimplexId)> = map
            .iter()
            .enumerate()
            .filter_map(|(s, img)| img.map(|t| (s, t)))
            .collect();
        let critical = (0..complex.len())
            .filter(|&s| map[s].is_none() && preimages[s] == 0)
            .collect();
        Self::new(complex, critical, arrows)
    }

    /// Map form: tails map to their head, everything else to `None`.
    pub fn to_map(&self) -> Vec<Option<SimplexId>> {
        let mut map = vec![None; self.complex.len()];
        for c in &self.cells {
            if let Cell::Arrow { tail, head } = *c {
                map[tail] = Some(head);
            }
        }
        map
    }

    pub fn complex(&self) -> &SimplicialComplex {
        &self.complex
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    /// Index into [`Self::cells`] of the cell containing `s`.
    pub fn cell_index(&self, s: SimplexId) -> usize {
        self.owner[s]
    }

    pub fn cell_of(&self, s: SimplexId) -> Cell {
        self.cells[self.owner[s]]
    }

    pub fn critical(&self) -> Vec<SimplexId> {
        self.cells
            .iter()
            .filter_map(|c| match *c {
                Cell::Critical(s) => Some(s),
                _ => None,
            })
            .collect()
    }

    pub fn arrows(&self) -> Vec<(SimplexId, SimplexId)> {
        self.cells
            .iter()
            .filter_map(|c| match *c {
                Cell::Arrow { tail, head } => Some((tail, head)),
                _ => None,
            })
            .collect()
    }

    pub fn kind(&self, s: SimplexId) -> SimplexKind {
        match self.cell_of(s) {
            Cell::Critical(_) => SimplexKind::Critical,
            Cell::Arrow { tail, .. } if tail == s => SimplexKind::Tail,
            Cell::Arrow { .. } => SimplexKind::Head,
        }
    }

    /// (σ⁻, σ⁺) of the cell owning `s`.
    pub fn sigma_minus_plus(&self, s: SimplexId) -> (SimplexId, SimplexId) {
        let c = self.cell_of(s);
        (c.minus(), c.plus())
    }

    /// Π_V(σ), sorted by simplex id.
    pub fn pi(&self, s: SimplexId) -> Vec<SimplexId> {
        match self.cell_of(s) {
            Cell::Critical(_) => self.complex.closure([s]).into_iter().collect(),
            Cell::Arrow { tail, head } if tail == s => vec![head],
            Cell::Arrow { tail, .. } => {
                let mut bd = self.complex.boundary_ids(s);
                bd.retain(|&f| f != tail);
                bd.sort_unstable();
                bd
            }
        }
    }

    /// True iff every consecutive pair of `rho` is a Π_V step.
    pub fn is_solution(&self, rho: &[SimplexId]) -> bool {
        rho.windows(2)
            .all(|w| self.flow_graph().has_edge(w[0], w[1]))
    }

    /// The Π_V digraph, built once.
    pub fn flow_graph(&self) -> &FlowGraph {
        self.graph.get_or_init(|| FlowGraph {
            succ: (0..self.complex.len()).map(|s| self.pi(s)).collect(),
        })
    }
}
