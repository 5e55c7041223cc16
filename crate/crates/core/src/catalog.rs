//! Small reference complexes and fields used by tests, docs and the CLI.

use crate::complex::{SimplexId, SimplicialComplex};
use crate::cvf::CombinatorialVectorField;

fn lookup(x: &SimplicialComplex, s: &str) -> SimplexId {
    let simplex = x.parse_simplex(s).expect("catalog simplex parses");
    x.id_of(&simplex)
        .expect("catalog simplex is in the complex")
}

fn build(
    x: SimplicialComplex,
    critical: &[&str],
    arrows: &[(&str, &str)],
) -> CombinatorialVectorField {
    let crit = critical.iter().map(|s| lookup(&x, s)).collect();
    let arr = arrows
        .iter()
        .map(|(t, h)| (lookup(&x, t), lookup(&x, h)))
        .collect();
    CombinatorialVectorField::new(x, crit, arr).expect("catalog field is valid")
}

/// Two triangles ABD, BCD glued along BD, with whiskers DE and DF.
pub fn running_example_complex() -> SimplicialComplex {
    SimplicialComplex::from_names(
        &["A", "B", "C", "D", "E", "F"],
        &[&["A", "B", "D"], &["B", "C", "D"], &["D", "E"], &["D", "F"]],
    )
    .expect("running example complex")
}

/// Critical cells F, BD, ABD; every other simplex is paired.
pub fn running_example() -> CombinatorialVectorField {
    build(
        running_example_complex(),
        &["F", "BD", "ABD"],
        &[
            ("A", "AD"),
            ("B", "AB"),
            ("BC", "BCD"),
            ("C", "CD"),
            ("D", "DF"),
            ("E", "DE"),
        ],
    )
}

/// A path E - F - G with E and EF critical and F flowing into FG.
pub fn edge_pair_example() -> CombinatorialVectorField {
    let x = SimplicialComplex::from_names(&["E", "F", "G"], &[&["E", "F"], &["F", "G"]])
        .expect("edge pair complex");
    build(x, &["E", "EF", "G"], &[("F", "FG")])
}

/// A single filled triangle with every simplex critical.
pub fn critical_triangle() -> CombinatorialVectorField {
    let x = SimplicialComplex::from_names(&["A", "B", "C"], &[&["A", "B", "C"]])
        .expect("triangle complex");
    CombinatorialVectorField::all_critical(x)
}

/// The hollow triangle with arrows chasing each other around the circle.
pub fn periodic_triangle() -> CombinatorialVectorField {
    let x =
        SimplicialComplex::from_names(&["A", "B", "C"], &[&["A", "B"], &["B", "C"], &["A", "C"]])
            .expect("circle complex");
    build(x, &[], &[("A", "AB"), ("B", "BC"), ("C", "AC")])
}
