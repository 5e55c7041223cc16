//! Isolated invariant sets, Conley indices and Morse decompositions of the
//! combinatorial dynamics Π_V.

use std::collections::{BTreeSet, VecDeque};

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::Serialize;
use thiserror::Error;

use crate::complex::{SimplexId, SimplicialComplex};
use crate::cvf::CombinatorialVectorField;
use crate::homology::{self, PoincarePolynomial};

pub type SimplexSet = BTreeSet<SimplexId>;

/// First reason a set fails to be an isolated invariant set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum IsolationFailure {
    Empty,
    NotInvariant(SimplexId),
    MouthNotClosed(SimplexId),
    SplitArrow { tail: SimplexId, head: SimplexId },
}

impl IsolationFailure {
    pub fn describe(&self, x: &SimplicialComplex) -> String {
        match *self {
            IsolationFailure::Empty => "set is empty".to_string(),
            IsolationFailure::NotInvariant(s) => {
                format!("{} lies on no full solution inside the set", x.format_id(s))
            }
            IsolationFailure::MouthNotClosed(s) => {
                format!(
                    "mouth is not closed: a face of {} is back in the set",
                    x.format_id(s)
                )
            }
            IsolationFailure::SplitArrow { tail, head } => format!(
                "arrow {} -> {} is split by the set",
                x.format_id(tail),
                x.format_id(head)
            ),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConleyError {
    #[error("not an isolated invariant set: {0:?}")]
    NotIsolated(IsolationFailure),
    #[error(transparent)]
    Homology(#[from] homology::HomologyError),
}

/// Nodes of the restricted digraph lying on a cycle (including self-loops).
fn cycle_nodes(succ: &[Vec<SimplexId>], members: &SimplexSet) -> Vec<bool> {
    let mut g: DiGraph<SimplexId, ()> = DiGraph::new();
    let nodes: Vec<_> = (0..succ.len()).map(|i| g.add_node(i)).collect();
    for &a in members {
        for &b in &succ[a] {
            if members.contains(&b) {
                g.add_edge(nodes[a], nodes[b], ());
            }
        }
    }
    let mut on_cycle = vec![false; succ.len()];
    for comp in tarjan_scc(&g) {
        let looped = comp.len() > 1 || {
            let a = g[comp[0]];
            members.contains(&a) && succ[a].contains(&a)
        };
        if looped {
            for n in comp {
                on_cycle[g[n]] = true;
            }
        }
    }
    on_cycle
}

fn reach(adj: &[Vec<SimplexId>], from: impl IntoIterator<Item = SimplexId>) -> Vec<bool> {
    let mut seen = vec![false; adj.len()];
    let mut queue: VecDeque<SimplexId> = from.into_iter().collect();
    for &s in &queue {
        seen[s] = true;
    }
    while let Some(a) = queue.pop_front() {
        for &b in &adj[a] {
            if !seen[b] {
                seen[b] = true;
                queue.push_back(b);
            }
        }
    }
    seen
}

fn reverse(adj: &[Vec<SimplexId>]) -> Vec<Vec<SimplexId>> {
    let mut rev = vec![Vec::new(); adj.len()];
    for (a, out) in adj.iter().enumerate() {
        for &b in out {
            rev[b].push(a);
        }
    }
    rev
}

/// Inv(S): the simplices of S lying on a bi-infinite Π_V-solution in S.
pub fn invariant_part(v: &CombinatorialVectorField, s: &SimplexSet) -> SimplexSet {
    let adj = v.flow_graph().restricted(s);
    let cyc = cycle_nodes(&v.flow_graph().succ, s);
    let seeds: Vec<SimplexId> = s.iter().copied().filter(|&a| cyc[a]).collect();
    let fwd = reach(&adj, seeds.iter().copied());
    let bwd = reach(&reverse(&adj), seeds.iter().copied());
    s.iter().copied().filter(|&a| fwd[a] && bwd[a]).collect()
}

pub fn is_invariant(v: &CombinatorialVectorField, s: &SimplexSet) -> bool {
    invariant_part(v, s).len() == s.len()
}

/// Mo S = Cl S \ S.
pub fn mouth(x: &SimplicialComplex, s: &SimplexSet) -> SimplexSet {
    let cl = x.closure(s.iter().copied());
    cl.difference(s).copied().collect()
}

pub fn check_isolated(
    v: &CombinatorialVectorField,
    s: &SimplexSet,
) -> Result<(), IsolationFailure> {
    if s.is_empty() {
        return Err(IsolationFailure::Empty);
    }
    let inv = invariant_part(v, s);
    if let Some(&bad) = s.iter().find(|a| !inv.contains(a)) {
        return Err(IsolationFailure::NotInvariant(bad));
    }
    let x = v.complex();
    let mo = mouth(x, s);
    for &m in &mo {
        if x.facets_of(m).iter().any(|f| s.contains(f)) {
            return Err(IsolationFailure::MouthNotClosed(m));
        }
    }
    for (tail, head) in v.arrows() {
        if s.contains(&tail) != s.contains(&head) {
            return Err(IsolationFailure::SplitArrow { tail, head });
        }
    }
    Ok(())
}

pub fn is_isolated_invariant(v: &CombinatorialVectorField, s: &SimplexSet) -> bool {
    check_isolated(v, s).is_ok()
}

/// H_*(Cl S, Mo S) as a Poincaré polynomial.
pub fn conley_index(
    v: &CombinatorialVectorField,
    s: &SimplexSet,
) -> Result<PoincarePolynomial, ConleyError> {
    check_isolated(v, s).map_err(ConleyError::NotIsolated)?;
    Ok(pair_index(v.complex(), s)?)
}

fn pair_index(
    x: &SimplicialComplex,
    s: &SimplexSet,
) -> Result<PoincarePolynomial, homology::HomologyError> {
    let cl = x.closure(s.iter().copied());
    let mo: Vec<_> = cl
        .iter()
        .filter(|a| !s.contains(a))
        .map(|&a| x.simplex(a).clone())
        .collect();
    let cl: Vec<_> = cl.iter().map(|&a| x.simplex(a).clone()).collect();
    homology::poincare(&cl, &mo)
}

/// An isolated invariant set together with its mouth and index.
#[derive(Clone, Debug, Serialize)]
pub struct IsolatedInvariantSet {
    pub simplices: SimplexSet,
    pub mouth: SimplexSet,
    pub index: PoincarePolynomial,
}

impl IsolatedInvariantSet {
    pub fn new(v: &CombinatorialVectorField, s: SimplexSet) -> Result<Self, ConleyError> {
        let index = conley_index(v, &s)?;
        let mouth = mouth(v.complex(), &s);
        Ok(IsolatedInvariantSet {
            simplices: s,
            mouth,
            index,
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MorseNode {
    pub simplices: Vec<SimplexId>,
    pub index: PoincarePolynomial,
}

/// Conley-Morse graph. `edges` is the transitive reduction of `reachability`;
/// a pair `(p, q)` means p > q, i.e. there are connections from node p to q.
#[derive(Clone, Debug, Serialize)]
pub struct MorseGraph {
    pub nodes: Vec<MorseNode>,
    pub edges: Vec<(usize, usize)>,
    pub reachability: Vec<(usize, usize)>,
}

impl MorseGraph {
    pub fn sets(&self) -> Vec<SimplexSet> {
        self.nodes
            .iter()
            .map(|n| n.simplices.iter().copied().collect())
            .collect()
    }

    /// Node containing simplex `s`, if any.
    pub fn node_of(&self, s: SimplexId) -> Option<usize> {
        self.nodes.iter().position(|n| n.simplices.contains(&s))
    }

    pub fn is_above(&self, p: usize, q: usize) -> bool {
        self.reachability.contains(&(p, q))
    }
}

/// Finest Morse decomposition: the nontrivial strongly connected components
/// of Π_V, ordered by reachability.
pub fn finest_morse_decomposition(v: &CombinatorialVectorField) -> MorseGraph {
    let x = v.complex();
    let succ = &v.flow_graph().succ;
    let mut g: DiGraph<SimplexId, ()> = DiGraph::new();
    let nodes: Vec<_> = (0..succ.len()).map(|i| g.add_node(i)).collect();
    for (a, out) in succ.iter().enumerate() {
        for &b in out {
            g.add_edge(nodes[a], nodes[b], ());
        }
    }
    let mut sets: Vec<Vec<SimplexId>> = tarjan_scc(&g)
        .into_iter()
        .map(|c| {
            let mut ids: Vec<SimplexId> = c.into_iter().map(|n| g[n]).collect();
            ids.sort_unstable();
            ids
        })
        .filter(|c| c.len() > 1 || succ[c[0]].contains(&c[0]))
        .collect();
    sets.sort_by_key(|c| {
        let top = c.iter().map(|&s| x.simplex(s).dim()).max().unwrap_or(0);
        let names: Vec<String> = c.iter().map(|&s| x.format_id(s)).collect();
        (top, names)
    });

    let mut owner = vec![usize::MAX; x.len()];
    for (p, c) in sets.iter().enumerate() {
        for &s in c {
            owner[s] = p;
        }
    }
    let n = sets.len();
    let mut above = vec![vec![false; n]; n];
    for p in 0..n {
        let seen = reach(succ, sets[p].iter().copied());
        for (s, &hit) in seen.iter().enumerate() {
            if hit && owner[s] != usize::MAX && owner[s] != p {
                above[p][owner[s]] = true;
            }
        }
    }
    let reachability: Vec<(usize, usize)> = (0..n)
        .flat_map(|p| (0..n).map(move |q| (p, q)))
        .filter(|&(p, q)| above[p][q])
        .collect();
    let edges = reachability
        .iter()
        .copied()
        .filter(|&(p, q)| !(0..n).any(|r| r != p && r != q && above[p][r] && above[r][q]))
        .collect();
    let nodes = sets
        .into_iter()
        .map(|c| {
            let set: SimplexSet = c.iter().copied().collect();
            let index = pair_index(x, &set).expect("closure pairs are valid");
            MorseNode {
                simplices: c,
                index,
            }
        })
        .collect();
    MorseGraph {
        nodes,
        edges,
        reachability,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum MorseViolation {
    /// Two Morse sets share a simplex.
    Overlap { p: usize, q: usize },
    /// A Morse set is not a nonempty isolated invariant set.
    NotIsolated { p: usize, reason: IsolationFailure },
    /// The given order has a cycle.
    CyclicOrder,
    /// (a) recurrent dynamics not captured by a single Morse set.
    UncoveredRecurrence { simplex: SimplexId },
    /// (b) a connection from p to q without p > q.
    OrderViolated { p: usize, q: usize },
    /// (c) a solution leaving and returning to M_p through `simplex`.
    Homoclinic { p: usize, simplex: SimplexId },
}

/// Checks that `sets` with the strict order generated by `order` (pairs
/// `(p, q)` meaning p > q) is a Morse decomposition of Π_V.
pub fn check_morse_decomposition(
    v: &CombinatorialVectorField,
    sets: &[SimplexSet],
    order: &[(usize, usize)],
) -> Vec<MorseViolation> {
    let x = v.complex();
    let succ = &v.flow_graph().succ;
    let n = sets.len();
    let mut out = Vec::new();

    let mut owner = vec![usize::MAX; x.len()];
    for (p, s) in sets.iter().enumerate() {
        for &a in s {
            if owner[a] != usize::MAX {
                out.push(MorseViolation::Overlap { p: owner[a], q: p });
            }
            owner[a] = p;
        }
        if let Err(reason) = check_isolated(v, s) {
            out.push(MorseViolation::NotIsolated { p, reason });
        }
    }

    let mut closure = vec![vec![false; n]; n];
    for &(p, q) in order {
        closure[p][q] = true;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if closure[i][k] && closure[k][j] {
                    closure[i][j] = true;
                }
            }
        }
    }
    if (0..n).any(|p| closure[p][p]) {
        out.push(MorseViolation::CyclicOrder);
    }

    // (a): every recurrent simplex belongs to a Morse set, and each
    // strongly connected component sits in a single one.
    let everything: SimplexSet = (0..x.len()).collect();
    let recurrent = cycle_nodes(succ, &everything);
    let mut g: DiGraph<SimplexId, ()> = DiGraph::new();
    let gn: Vec<_> = (0..succ.len()).map(|i| g.add_node(i)).collect();
    for (a, outs) in succ.iter().enumerate() {
        for &b in outs {
            g.add_edge(gn[a], gn[b], ());
        }
    }
    for comp in tarjan_scc(&g) {
        let ids: Vec<SimplexId> = comp.iter().map(|&c| g[c]).collect();
        if !recurrent[ids[0]] {
            continue;
        }
        let first = owner[ids[0]];
        if let Some(&bad) = ids
            .iter()
            .find(|&&a| owner[a] == usize::MAX || owner[a] != first)
        {
            out.push(MorseViolation::UncoveredRecurrence { simplex: bad });
        }
    }

    let rev = reverse(succ);
    for p in 0..n {
        let seeds: Vec<SimplexId> = sets[p].iter().copied().filter(|&a| recurrent[a]).collect();
        let fwd = reach(succ, seeds.iter().copied());
        // (b)
        for q in 0..n {
            if q != p && sets[q].iter().any(|&a| recurrent[a] && fwd[a]) && !closure[p][q] {
                out.push(MorseViolation::OrderViolated { p, q });
            }
        }
        // (c)
        let bwd = reach(&rev, seeds.iter().copied());
        if let Some(a) = (0..x.len()).find(|&a| fwd[a] && bwd[a] && !sets[p].contains(&a)) {
            out.push(MorseViolation::Homoclinic { p, simplex: a });
        }
    }
    out
}
