//! JSON input documents and the text exports (DOT, JSON, CSV, JSONL).

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::complex::{ClosureReport, ComplexError, Simplex, SimplexId, SimplicialComplex};
use crate::conley::MorseGraph;
use crate::cvf::{Cell, CombinatorialVectorField, FieldError};
use crate::semiflow::Trajectory;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed input: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error("{0}")]
    Field(String),
    #[error("input has no \"field\" object")]
    MissingField,
    #[error("listing is not closed; missing faces: {}", .0.join(", "))]
    NotClosed(Vec<String>),
}

/// `{"critical": [[names]...], "arrows": [[[tail], [head]]...]}`
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldDocument {
    #[serde(default)]
    pub critical: Vec<Vec<String>>,
    #[serde(default)]
    pub arrows: Vec<(Vec<String>, Vec<String>)>,
}

/// One input file: a complex and optionally a field on it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputDocument {
    pub vertices: Vec<String>,
    pub simplices: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldDocument>,
}

impl InputDocument {
    pub fn parse(text: &str) -> Result<Self, IoError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, IoError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| IoError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    fn listing(&self) -> Result<Vec<Simplex>, ComplexError> {
        let lookup = |n: &String| {
            self.vertices
                .iter()
                .position(|v| v == n)
                .ok_or_else(|| ComplexError::UnknownVertex(n.clone()))
        };
        self.simplices
            .iter()
            .map(|s| Simplex::new(s.iter().map(lookup).collect::<Result<_, _>>()?))
            .collect()
    }

    /// The complex generated by the listed simplices.
    pub fn complex(&self) -> Result<SimplicialComplex, IoError> {
        Ok(SimplicialComplex::new(
            self.vertices.clone(),
            self.listing()?,
        )?)
    }

    /// The complex, requiring the listing itself to be closed.
    pub fn complex_strict(&self) -> Result<SimplicialComplex, IoError> {
        let names = self.vertices.clone();
        match SimplicialComplex::from_closed_listing(names, self.listing()?)? {
            Ok(x) => Ok(x),
            Err(ClosureReport { missing }) => Err(IoError::NotClosed(
                missing.iter().map(|s| self.format(s)).collect(),
            )),
        }
    }

    fn format(&self, s: &Simplex) -> String {
        let names: Vec<&str> = s
            .vertices()
            .iter()
            .map(|&v| self.vertices[v].as_str())
            .collect();
        if names.iter().all(|n| n.chars().count() == 1) {
            names.concat()
        } else {
            names.join("-")
        }
    }

    /// The field on `x`; with `complete`, unmentioned simplices become critical
    /// and a missing field means every simplex is critical.
    pub fn field(
        &self,
        x: SimplicialComplex,
        complete: bool,
    ) -> Result<CombinatorialVectorField, IoError> {
        let doc = match (&self.field, complete) {
            (Some(doc), _) => doc,
            (None, true) => return Ok(CombinatorialVectorField::all_critical(x)),
            (None, false) => return Err(IoError::MissingField),
        };
        let critical = doc
            .critical
            .iter()
            .map(|s| x.id_by_names(s))
            .collect::<Result<Vec<_>, _>>()?;
        let arrows = doc
            .arrows
            .iter()
            .map(|(t, h)| Ok((x.id_by_names(t)?, x.id_by_names(h)?)))
            .collect::<Result<Vec<_>, ComplexError>>()?;
        let built = if complete {
            CombinatorialVectorField::with_completion(x.clone(), critical, arrows)
        } else {
            CombinatorialVectorField::new(x.clone(), critical, arrows)
        };
        built.map_err(|e| match e {
            FieldError::Invalid(report) => IoError::Field(report.describe(&x).join("; ")),
            e => IoError::Field(e.to_string()),
        })
    }

    /// Document describing an existing field.
    pub fn from_field(v: &CombinatorialVectorField) -> Self {
        let x = v.complex();
        let maximal: Vec<Vec<String>> = (0..x.len())
            .filter(|&s| x.cofacets_of(s).is_empty())
            .map(|s| x.names_of(s))
            .collect();
        InputDocument {
            vertices: x.names().to_vec(),
            simplices: maximal,
            field: Some(FieldDocument {
                critical: v.critical().into_iter().map(|s| x.names_of(s)).collect(),
                arrows: v
                    .arrows()
                    .into_iter()
                    .map(|(t, h)| (x.names_of(t), x.names_of(h)))
                    .collect(),
            }),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("input documents serialize")
    }
}

/// Label of a cell of V: `ABD` for a critical cell, `A->AD` for an arrow.
pub fn cell_label(v: &CombinatorialVectorField, cell: usize) -> String {
    let x = v.complex();
    match v.cells()[cell] {
        Cell::Critical(s) => x.format_id(s),
        Cell::Arrow { tail, head } => format!("{}->{}", x.format_id(tail), x.format_id(head)),
    }
}

fn node_names(x: &SimplicialComplex, simplices: &[SimplexId]) -> Vec<String> {
    simplices.iter().map(|&s| x.format_id(s)).collect()
}

/// Stable node identifier: a hash of the sorted simplex list.
pub fn node_id(x: &SimplicialComplex, simplices: &[SimplexId]) -> String {
    let digest = Sha256::digest(node_names(x, simplices).join(",").as_bytes());
    let hex: String = digest.iter().take(6).map(|b| format!("{b:02x}")).collect();
    format!("m{hex}")
}

fn node_label(x: &SimplicialComplex, simplices: &[SimplexId]) -> String {
    match simplices {
        [s] => x.format_id(*s),
        _ => x.format_set(simplices),
    }
}

/// Graphviz rendering of a Conley-Morse graph. Edges are the transitive
/// reduction unless `full` is set.
pub fn morse_dot(v: &CombinatorialVectorField, g: &MorseGraph, full: bool) -> String {
    let x = v.complex();
    let ids: Vec<String> = g.nodes.iter().map(|n| node_id(x, &n.simplices)).collect();
    let mut out = String::from("digraph morse {\n    node [shape=box];\n");
    for (n, id) in g.nodes.iter().zip(&ids) {
        let label = format!("{}\\np(t)={}", node_label(x, &n.simplices), n.index);
        writeln!(out, "    {id} [label=\"{label}\"];").unwrap();
    }
    let edges = if full { &g.reachability } else { &g.edges };
    for &(p, q) in edges {
        writeln!(out, "    {} -> {};", ids[p], ids[q]).unwrap();
    }
    out.push_str("}\n");
    out
}

/// JSON rendering of a Conley-Morse graph.
pub fn morse_json(v: &CombinatorialVectorField, g: &MorseGraph) -> serde_json::Value {
    let x = v.complex();
    json!({
        "nodes": g.nodes.iter().map(|n| json!({
            "id": node_id(x, &n.simplices),
            "simplices": node_names(x, &n.simplices),
            "index": n.index.to_string(),
            "betti": n.index.coefficients(),
        })).collect::<Vec<_>>(),
        "edges": g.edges,
        "reachability": g.reachability,
    })
}

/// CSV with columns `t`, one per vertex, and `tile`.
pub fn trajectory_csv(v: &CombinatorialVectorField, traj: &Trajectory) -> String {
    let x = v.complex();
    let mut out = String::from("t");
    for n in x.names() {
        write!(out, ",{n}").unwrap();
    }
    out.push_str(",tile\n");
    for s in &traj.samples {
        write!(out, "{}", s.t).unwrap();
        for c in &s.point {
            write!(out, ",{c}").unwrap();
        }
        writeln!(out, ",{}", cell_label(v, s.tile)).unwrap();
    }
    out
}

/// One JSON object per tile crossing.
pub fn events_jsonl(v: &CombinatorialVectorField, traj: &Trajectory) -> String {
    let x = v.complex();
    let mut out = String::new();
    for e in &traj.events {
        let point: serde_json::Map<String, serde_json::Value> = x
            .names()
            .iter()
            .zip(&e.point)
            .map(|(n, c)| (n.clone(), json!(c)))
            .collect();
        let line = json!({
            "t": e.t,
            "from": cell_label(v, e.from),
            "to": cell_label(v, e.to),
            "sigma_min": x.format_id(e.sigma_min),
            "sigma_max": x.format_id(e.sigma_max),
            "zero_duration": e.pre.is_none(),
            "point": point,
        });
        writeln!(out, "{line}").unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::running_example;
    use crate::conley::finest_morse_decomposition;

    const FIG1: &str = r#"{
        "vertices": ["A", "B", "C", "D", "E", "F"],
        "simplices": [["A", "B", "D"], ["B", "C", "D"], ["D", "E"], ["D", "F"]],
        "field": {
            "critical": [["F"], ["B", "D"], ["A", "B", "D"]],
            "arrows": [[["A"], ["A", "D"]], [["B"], ["A", "B"]], [["B", "C"], ["B", "C", "D"]],
                       [["C"], ["C", "D"]], [["D"], ["D", "F"]], [["E"], ["D", "E"]]]
        }
    }"#;

    #[test]
    fn parses_running_example() {
        let doc = InputDocument::parse(FIG1).unwrap();
        let x = doc.complex().unwrap();
        assert_eq!(x.len(), 15);
        let v = doc.field(x, false).unwrap();
        assert_eq!(v.cells(), running_example().cells());
        let again = InputDocument::parse(&InputDocument::from_field(&v).to_json()).unwrap();
        let w = again.field(again.complex().unwrap(), false).unwrap();
        assert_eq!(w.cells(), v.cells());
    }

    #[test]
    fn strict_listing_reports_missing_faces() {
        let doc = InputDocument::parse(
            r#"{"vertices": ["A","B","C"], "simplices": [["A","B","C"], ["A","B"]]}"#,
        )
        .unwrap();
        assert!(doc.complex().is_ok());
        match doc.complex_strict() {
            Err(IoError::NotClosed(m)) => assert_eq!(m, ["AC", "BC"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn json_errors_carry_position() {
        let err = InputDocument::parse("{\"vertices\": [\"A\"],\n \"simplices\": 3}").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = InputDocument::parse("{\"vertices\": [\"A\"]}").unwrap_err();
        assert!(err.to_string().contains("simplices"), "{err}");
    }

    #[test]
    fn non_facet_arrow_is_rejected() {
        let doc = InputDocument::parse(
            r#"{"vertices": ["A","B","C"], "simplices": [["A","B","C"]],
                "field": {"critical": [], "arrows": [[["A"], ["A","B","C"]]]}}"#,
        )
        .unwrap();
        let err = doc.field(doc.complex().unwrap(), true).unwrap_err();
        assert!(err.to_string().contains("not a facet"), "{err}");
    }

    #[test]
    fn dot_is_stable() {
        let v = running_example();
        let g = finest_morse_decomposition(&v);
        let dot = morse_dot(&v, &g, false);
        assert_eq!(dot, morse_dot(&v, &g, false));
        assert_eq!(dot.matches("->").count(), 2);
        assert!(dot.contains("ABD\\np(t)=t^2"));
        assert_eq!(morse_dot(&v, &g, true).matches("->").count(), 3);
        let j = morse_json(&v, &g);
        assert_eq!(j["nodes"].as_array().unwrap().len(), 3);
    }
}
