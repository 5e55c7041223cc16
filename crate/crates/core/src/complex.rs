//! Finite abstract simplicial complexes.
//!
//! Vertices are named once at construction and referred to by dense ids
//! afterwards. Simplices are stored as strictly increasing id sequences and
//! the complex keeps them sorted by `(dimension, lexicographic ids)`, so a
//! simplex id is stable for the lifetime of the complex.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

/// Index into the vertex name table.
pub type VertexId = usize;

/// Index into [`SimplicialComplex::simplices`].
pub type SimplexId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ComplexError {
    #[error("duplicate vertex name `{0}`")]
    DuplicateVertex(String),
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("vertex id {0} out of range")]
    VertexOutOfRange(VertexId),
    #[error("empty simplex")]
    EmptySimplex,
    #[error("simplex lists vertex `{0}` more than once")]
    RepeatedVertex(String),
    #[error("simplex {0} is not in the complex")]
    NotInComplex(String),
}

/// A nonempty set of vertices, stored sorted and without duplicates.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize)]
pub struct Simplex(Vec<VertexId>);

impl Simplex {
    /// Builds a simplex from arbitrary vertex ids. Fails on empty input or repeats.
    pub fn new(mut vertices: Vec<VertexId>) -> Result<Self, ComplexError> {
        if vertices.is_empty() {
            return Err(ComplexError::EmptySimplex);
        }
        vertices.sort_unstable();
        if let Some(w) = vertices.windows(2).find(|w| w[0] == w[1]) {
            return Err(ComplexError::RepeatedVertex(w[0].to_string()));
        }
        Ok(Simplex(vertices))
    }

    pub fn vertex(v: VertexId) -> Self {
        Simplex(vec![v])
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len() - 1
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    /// `self ⊆ other` (not necessarily proper).
    pub fn is_face_of(&self, other: &Simplex) -> bool {
        if self.0.len() > other.0.len() {
            return false;
        }
        let mut it = other.0.iter();
        'outer: for v in &self.0 {
            for w in it.by_ref() {
                match w.cmp(v) {
                    Ordering::Less => continue,
                    Ordering::Equal => continue 'outer,
                    Ordering::Greater => return false,
                }
            }
            return false;
        }
        true
    }

    pub fn is_facet_of(&self, other: &Simplex) -> bool {
        self.0.len() + 1 == other.0.len() && self.is_face_of(other)
    }

    /// All nonempty faces, including `self`.
    pub fn faces(&self) -> Vec<Simplex> {
        let n = self.0.len();
        assert!(n < 32, "simplex too large to enumerate faces");
        (1u32..(1 << n))
            .map(|mask| {
                Simplex(
                    (0..n)
                        .filter(|i| mask & (1 << i) != 0)
                        .map(|i| self.0[i])
                        .collect(),
                )
            })
            .collect()
    }

    /// Proper nonempty faces (the combinatorial boundary).
    pub fn boundary(&self) -> Vec<Simplex> {
        let mut faces = self.faces();
        faces.retain(|f| f.0.len() < self.0.len());
        faces
    }

    /// Codimension-one faces, in the order obtained by deleting vertex `i`.
    pub fn facets(&self) -> Vec<Simplex> {
        if self.0.len() == 1 {
            return Vec::new();
        }
        (0..self.0.len())
            .map(|i| {
                let mut v = self.0.clone();
                v.remove(i);
                Simplex(v)
            })
            .collect()
    }

    pub fn union(&self, other: &Simplex) -> Simplex {
        let mut v: Vec<_> = self.0.iter().chain(other.0.iter()).copied().collect();
        v.sort_unstable();
        v.dedup();
        Simplex(v)
    }
}

impl Ord for Simplex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Simplex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Report produced by [`validate_listing`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ClosureReport {
    /// Faces required by the closure axiom but absent from the listing.
    pub missing: Vec<Simplex>,
}

impl ClosureReport {
    pub fn is_ok(&self) -> bool {
        self.missing.is_empty()
    }
}

/// Checks a raw listing of simplices for closure under nonempty subsets.
pub fn validate_listing(simplices: &[Simplex]) -> ClosureReport {
    let present: BTreeSet<&Simplex> = simplices.iter().collect();
    let mut missing = BTreeSet::new();
    for s in simplices {
        for f in s.boundary() {
            if !present.contains(&f) {
                missing.insert(f);
            }
        }
    }
    ClosureReport {
        missing: missing.into_iter().collect(),
    }
}

/// A finite abstract simplicial complex, closed under taking nonempty faces.
#[derive(Clone, Debug)]
pub struct SimplicialComplex {
    names: Vec<String>,
    simplices: Vec<Simplex>,
    index: HashMap<Simplex, SimplexId>,
    facets: Vec<Vec<SimplexId>>,
    cofacets: Vec<Vec<SimplexId>>,
}

impl SimplicialComplex {
    /// Builds the complex generated by `generators` (typically the maximal
    /// simplices). Every named vertex becomes a 0-simplex.
    pub fn new(names: Vec<String>, generators: Vec<Simplex>) -> Result<Self, ComplexError> {
        check_names(&names)?;
        let mut all = BTreeSet::new();
        for v in 0..names.len() {
            all.insert(Simplex::vertex(v));
        }
        for g in &generators {
            if let Some(&v) = g.vertices().iter().find(|&&v| v >= names.len()) {
                return Err(ComplexError::VertexOutOfRange(v));
            }
            all.extend(g.faces());
        }
        Ok(Self::from_closed_set(names, all))
    }

    /// Builds a complex from a listing that must already be closed.
    pub fn from_closed_listing(
        names: Vec<String>,
        simplices: Vec<Simplex>,
    ) -> Result<Result<Self, ClosureReport>, ComplexError> {
        check_names(&names)?;
        let mut listing = simplices;
        for v in 0..names.len() {
            let s = Simplex::vertex(v);
            if !listing.contains(&s) {
                listing.push(s);
            }
        }
        if let Some(v) = listing
            .iter()
            .flat_map(|s| s.vertices())
            .find(|&&v| v >= names.len())
        {
            return Err(ComplexError::VertexOutOfRange(*v));
        }
        let report = validate_listing(&listing);
        if !report.is_ok() {
            return Ok(Err(report));
        }
        Ok(Ok(Self::from_closed_set(
            names,
            listing.into_iter().collect(),
        )))
    }

    /// Convenience constructor from vertex names and generator name lists.
    pub fn from_names(vertices: &[&str], generators: &[&[&str]]) -> Result<Self, ComplexError> {
        let names: Vec<String> = vertices.iter().map(|s| s.to_string()).collect();
        check_names(&names)?;
        let lookup: HashMap<&str, VertexId> =
            vertices.iter().enumerate().map(|(i, n)| (*n, i)).collect();
        let gens = generators
            .iter()
            .map(|g| {
                let ids = g
                    .iter()
                    .map(|n| {
                        lookup
                            .get(n)
                            .copied()
                            .ok_or_else(|| ComplexError::UnknownVertex(n.to_string()))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Simplex::new(ids).map_err(|e| match e {
                    ComplexError::RepeatedVertex(i) => ComplexError::RepeatedVertex(
                        vertices[i.parse::<usize>().unwrap()].to_string(),
                    ),
                    e => e,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(names, gens)
    }

    fn from_closed_set(names: Vec<String>, all: BTreeSet<Simplex>) -> Self {
        let simplices: Vec<Simplex> = all.into_iter().collect();
        let index: HashMap<Simplex, SimplexId> = simplices
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        let mut facets = vec![Vec::new(); simplices.len()];
        let mut cofacets = vec![Vec::new(); simplices.len()];
        for (i, s) in simplices.iter().enumerate() {
            for f in s.facets() {
                let j = index[&f];
                facets[i].push(j);
                cofacets[j].push(i);
            }
            facets[i].sort_unstable();
        }
        for c in &mut cofacets {
            c.sort_unstable();
        }
        SimplicialComplex {
            names,
            simplices,
            index,
            facets,
            cofacets,
        }
    }

    /// Number of vertices `d`.
    pub fn num_vertices(&self) -> usize {
        self.names.len()
    }

    pub fn len(&self) -> usize {
        self.simplices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }

    /// Maximal simplex dimension; 0 for an empty complex.
    pub fn dim(&self) -> usize {
        self.simplices.last().map(|s| s.dim()).unwrap_or(0)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn vertex_name(&self, v: VertexId) -> &str {
        &self.names[v]
    }

    pub fn vertex_id(&self, name: &str) -> Option<VertexId> {
        self.names.iter().position(|n| n == name)
    }

    pub fn simplices(&self) -> &[Simplex] {
        &self.simplices
    }

    pub fn simplex(&self, id: SimplexId) -> &Simplex {
        &self.simplices[id]
    }

    pub fn id_of(&self, s: &Simplex) -> Option<SimplexId> {
        self.index.get(s).copied()
    }

    pub fn require_id(&self, s: &Simplex) -> Result<SimplexId, ComplexError> {
        self.id_of(s)
            .ok_or_else(|| ComplexError::NotInComplex(self.format_simplex(s)))
    }

    pub fn contains(&self, s: &Simplex) -> bool {
        self.index.contains_key(s)
    }

    pub fn facets_of(&self, id: SimplexId) -> &[SimplexId] {
        &self.facets[id]
    }

    pub fn cofacets_of(&self, id: SimplexId) -> &[SimplexId] {
        &self.cofacets[id]
    }

    /// Ids of all proper faces of `id`.
    pub fn boundary_ids(&self, id: SimplexId) -> Vec<SimplexId> {
        self.simplices[id]
            .boundary()
            .iter()
            .map(|f| self.index[f])
            .collect()
    }

    /// Combinatorial closure of a set of simplex ids.
    pub fn closure<I>(&self, ids: I) -> BTreeSet<SimplexId>
    where
        I: IntoIterator<Item = SimplexId>,
    {
        let mut out = BTreeSet::new();
        let mut stack: Vec<SimplexId> = ids.into_iter().collect();
        while let Some(id) = stack.pop() {
            if out.insert(id) {
                stack.extend(self.facets[id].iter().copied());
            }
        }
        out
    }

    /// Closure of simplices given by value; fails if any is outside the complex.
    pub fn closure_of(&self, set: &[Simplex]) -> Result<BTreeSet<Simplex>, ComplexError> {
        let ids = set
            .iter()
            .map(|s| self.require_id(s))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self
            .closure(ids)
            .into_iter()
            .map(|i| self.simplices[i].clone())
            .collect())
    }

    /// True iff every face of every member is a member.
    pub fn is_closed(&self, set: &BTreeSet<SimplexId>) -> bool {
        set.iter()
            .all(|&id| self.facets[id].iter().all(|f| set.contains(f)))
    }

    /// All simplices containing vertex `v`.
    pub fn star(&self, v: VertexId) -> Result<Vec<SimplexId>, ComplexError> {
        if v >= self.names.len() {
            return Err(ComplexError::VertexOutOfRange(v));
        }
        Ok((0..self.simplices.len())
            .filter(|&i| self.simplices[i].contains(v))
            .collect())
    }

    pub fn star_by_name(&self, name: &str) -> Result<Vec<SimplexId>, ComplexError> {
        let v = self
            .vertex_id(name)
            .ok_or_else(|| ComplexError::UnknownVertex(name.to_string()))?;
        self.star(v)
    }

    /// Checks the closure axiom on the stored simplices.
    pub fn validate(&self) -> ClosureReport {
        validate_listing(&self.simplices)
    }

    /// Parses a simplex from vertex names.
    pub fn simplex_from_names<S: AsRef<str>>(&self, names: &[S]) -> Result<Simplex, ComplexError> {
        let ids = names
            .iter()
            .map(|n| {
                self.vertex_id(n.as_ref())
                    .ok_or_else(|| ComplexError::UnknownVertex(n.as_ref().to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Simplex::new(ids).map_err(|e| match e {
            ComplexError::RepeatedVertex(i) => {
                ComplexError::RepeatedVertex(self.names[i.parse::<usize>().unwrap()].clone())
            }
            e => e,
        })
    }

    /// Looks up a simplex id by vertex names.
    pub fn id_by_names<S: AsRef<str>>(&self, names: &[S]) -> Result<SimplexId, ComplexError> {
        let s = self.simplex_from_names(names)?;
        self.require_id(&s)
    }

    /// Parses the compact notation used in the CLI: `ABD` when every vertex
    /// name is a single character, otherwise names joined by `-` or spaces.
    pub fn parse_simplex(&self, text: &str) -> Result<Simplex, ComplexError> {
        let text = text.trim();
        if text.contains('-') || text.contains(char::is_whitespace) {
            let parts: Vec<&str> = text
                .split(|c: char| c == '-' || c.is_whitespace())
                .filter(|p| !p.is_empty())
                .collect();
            return self.simplex_from_names(&parts);
        }
        if self.vertex_id(text).is_some() {
            return self.simplex_from_names(&[text]);
        }
        if self.names.iter().all(|n| n.chars().count() == 1) {
            let parts: Vec<String> = text.chars().map(|c| c.to_string()).collect();
            return self.simplex_from_names(&parts);
        }
        Err(ComplexError::UnknownVertex(text.to_string()))
    }

    /// Comma-separated list of simplices in [`Self::parse_simplex`] notation.
    pub fn parse_simplex_set(&self, text: &str) -> Result<BTreeSet<SimplexId>, ComplexError> {
        text.split([',', ';'])
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(|p| {
                let s = self.parse_simplex(p)?;
                self.require_id(&s)
            })
            .collect()
    }

    /// Renders a simplex as `ABD` (single-character names) or `A-B-D`.
    pub fn format_simplex(&self, s: &Simplex) -> String {
        let single = self.names.iter().all(|n| n.chars().count() == 1);
        let parts: Vec<&str> = s
            .vertices()
            .iter()
            .map(|&v| self.names.get(v).map(String::as_str).unwrap_or("?"))
            .collect();
        if single {
            parts.concat()
        } else {
            parts.join("-")
        }
    }

    pub fn format_id(&self, id: SimplexId) -> String {
        self.format_simplex(&self.simplices[id])
    }

    /// Renders a set of simplices as `{A, AB, ABD}` in stored order.
    pub fn format_set<'a, I>(&self, ids: I) -> String
    where
        I: IntoIterator<Item = &'a SimplexId>,
    {
        let mut ids: Vec<SimplexId> = ids.into_iter().copied().collect();
        ids.sort_unstable();
        let parts: Vec<String> = ids.iter().map(|&i| self.format_id(i)).collect();
        format!("{{{}}}", parts.join(", "))
    }

    /// Vertex-name list for each simplex id, used by exporters.
    pub fn names_of(&self, id: SimplexId) -> Vec<String> {
        self.simplices[id]
            .vertices()
            .iter()
            .map(|&v| self.names[v].clone())
            .collect()
    }
}

impl fmt::Display for SimplicialComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ids: Vec<SimplexId> = (0..self.len()).collect();
        write!(f, "{}", self.format_set(&ids))
    }
}

fn check_names(names: &[String]) -> Result<(), ComplexError> {
    let mut seen = BTreeSet::new();
    for n in names {
        if !seen.insert(n.as_str()) {
            return Err(ComplexError::DuplicateVertex(n.clone()));
        }
    }
    Ok(())
}
