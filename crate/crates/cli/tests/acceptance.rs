use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cvflow::catalog::{critical_triangle, edge_pair_example, periodic_triangle, running_example};
use cvflow::conley::{conley_index, finest_morse_decomposition, is_isolated_invariant, SimplexSet};
use cvflow::field::{field_property_suite, psi, zero_time, FieldVariant};
use cvflow::geometry::{compare_indices, index_pairs, CellPartition, Epsilon};
use cvflow::homology::PoincarePolynomial;
use cvflow::semiflow::{
    admissibility_suite, integrate_tile, morse_flow_check, sample_points, AdmissibilityConfig,
    Semiflow, TileExit, DEFAULT_DT,
};
use cvflow::{Cell, CombinatorialVectorField, SimplicialComplex};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ids(x: &SimplicialComplex, text: &str) -> SimplexSet {
    x.parse_simplex_set(text).expect("simplex list parses")
}

fn eps_1_48() -> Epsilon {
    Epsilon::from_ratio(1, 48).unwrap()
}

fn within(limit: Duration, start: Instant) -> Result<Duration, String> {
    let spent = start.elapsed();
    if spent <= limit {
        Ok(spent)
    } else {
        Err(format!("took {spent:.2?}, limit {limit:?}"))
    }
}

/// Π_V rebuilt from scratch, reachability closed by Floyd-Warshall.
fn reach_oracle(v: &CombinatorialVectorField) -> Vec<Vec<bool>> {
    let x = v.complex();
    let all = x.simplices();
    let n = all.len();
    let mut r = vec![vec![false; n]; n];
    for cell in v.cells() {
        match *cell {
            Cell::Critical(s) => {
                for (t, tau) in all.iter().enumerate() {
                    if tau.is_face_of(&all[s]) || t == s {
                        r[s][t] = true;
                    }
                }
            }
            Cell::Arrow { tail, head } => {
                r[tail][head] = true;
                for (t, tau) in all.iter().enumerate() {
                    if t != tail && tau.is_facet_of(&all[head]) {
                        r[head][t] = true;
                    }
                }
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            if r[i][k] {
                let row = r[k].clone();
                for (j, reach) in row.into_iter().enumerate() {
                    r[i][j] |= reach;
                }
            }
        }
    }
    r
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let v = running_example();
    let x = v.complex();
    let g = finest_morse_decomposition(&v);

    let r = reach_oracle(&v);
    let n = x.len();
    let mut oracle_sets: Vec<SimplexSet> = Vec::new();
    for s in (0..n).filter(|&s| r[s][s]) {
        let class: SimplexSet = (0..n).filter(|&t| r[s][t] && r[t][s]).collect();
        if !oracle_sets.contains(&class) {
            oracle_sets.push(class);
        }
    }
    let got: BTreeSet<SimplexSet> = g.sets().into_iter().collect();
    let want: BTreeSet<SimplexSet> = oracle_sets.iter().cloned().collect();
    if got != want {
        return Err(format!("Morse sets {got:?}, oracle {want:?}"));
    }
    let expected = [("F", 0), ("BD", 1), ("ABD", 2)];
    if want != expected.iter().map(|(s, _)| ids(x, s)).collect() {
        return Err(format!("oracle sets {want:?} differ from F, BD, ABD"));
    }
    let node = |s: &str| g.node_of(*ids(x, s).iter().next().unwrap()).unwrap();
    for (name, k) in expected {
        if g.nodes[node(name)].index != PoincarePolynomial::monomial(k) {
            return Err(format!(
                "index of {{{name}}} is {}",
                g.nodes[node(name)].index
            ));
        }
    }
    for p in 0..g.nodes.len() {
        for q in 0..g.nodes.len() {
            if p == q {
                continue;
            }
            let a = g.nodes[p].simplices[0];
            let b = g.nodes[q].simplices[0];
            if g.is_above(p, q) != r[a][b] {
                return Err(format!("order disagrees with oracle on ({p}, {q})"));
            }
        }
    }
    let mut edges = g.edges.clone();
    edges.sort();
    let mut want_edges = vec![(node("ABD"), node("BD")), (node("BD"), node("F"))];
    want_edges.sort();
    if edges != want_edges {
        return Err(format!("reduced order {edges:?}, expected ABD > BD > F"));
    }
    let spent = within(Duration::from_secs(1), start)?;
    Ok(format!(
        "{{F}}: 1, {{BD}}: t, {{ABD}}: t^2, ABD > BD > F ({spent:.2?})"
    ))
}

fn criterion_2() -> Outcome {
    let mut cases = vec![edge_pair_example()];
    let x = SimplicialComplex::from_names(
        &["E", "F", "G", "H"],
        &[&["E", "F"], &["F", "G"], &["E", "H"]],
    )
    .unwrap();
    let crit = ["E", "EF", "G"]
        .iter()
        .map(|s| *ids(&x, s).iter().next().unwrap())
        .collect();
    let arrows = [("F", "FG"), ("H", "EH")]
        .iter()
        .map(|(a, b)| {
            (
                *ids(&x, a).iter().next().unwrap(),
                *ids(&x, b).iter().next().unwrap(),
            )
        })
        .collect();
    cases.push(CombinatorialVectorField::new(x, crit, arrows).unwrap());
    for v in &cases {
        let x = v.complex();
        let s1 = conley_index(v, &ids(x, "EF")).map_err(|e| e.to_string())?;
        let s2 = conley_index(v, &ids(x, "EF,E")).map_err(|e| e.to_string())?;
        if s1 != PoincarePolynomial::monomial(1) || !s2.is_zero() {
            return Err(format!("got {s1} and {s2} on {} simplices", x.len()));
        }
    }
    Ok(format!(
        "index {{EF}} = t, index {{EF, E}} = 0 on {} complexes",
        cases.len()
    ))
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut checked = 0;
    for v in [running_example(), periodic_triangle()] {
        let x = v.complex();
        let eps = Epsilon::default_for(x);
        let p = CellPartition::new(x, &eps);
        for s in finest_morse_decomposition(&v).sets() {
            let c = compare_indices(&v, &p, &s).map_err(|e| e.to_string())?;
            if c.block_pair != c.combinatorial || c.closure_pair != c.combinatorial {
                return Err(format!(
                    "{}: combinatorial {}, (P1,P2) {}, (Q1,Q2) {}",
                    x.format_set(&s),
                    c.combinatorial,
                    c.block_pair,
                    c.closure_pair
                ));
            }
            checked += 1;
        }
    }
    let spent = within(Duration::from_secs(60), start)?;
    Ok(format!(
        "{checked} Morse sets, all three indices equal ({spent:.2?})"
    ))
}

fn isolated_subsets(v: &CombinatorialVectorField) -> Vec<SimplexSet> {
    let n = v.complex().len();
    (1u32..(1 << n))
        .map(|mask| {
            (0..n)
                .filter(|i| mask & (1 << i) != 0)
                .collect::<SimplexSet>()
        })
        .filter(|s| is_isolated_invariant(v, s))
        .collect()
}

fn criterion_4() -> Outcome {
    let mut checked = 0;
    let mut cases: Vec<(CombinatorialVectorField, Vec<SimplexSet>)> = Vec::new();
    for v in [
        edge_pair_example(),
        critical_triangle(),
        periodic_triangle(),
    ] {
        let sets = isolated_subsets(&v);
        cases.push((v, sets));
    }
    let v = running_example();
    let x = v.complex();
    let mut sets = finest_morse_decomposition(&v).sets();
    for extra in [
        "ABD,BD",
        "BD,AB,B,BC,BCD,C,CD,D,DF,F",
        "D,DF,E,DE,F",
        "ABD,AB,AD,A,B,BD",
    ] {
        sets.push(ids(x, extra));
    }
    sets.retain(|s| is_isolated_invariant(&v, s));
    cases.push((v, sets));
    for (v, sets) in &cases {
        let x = v.complex();
        let p = CellPartition::new(x, &Epsilon::default_for(x));
        for s in sets {
            let ip = index_pairs(v, &p, s).map_err(|e| e.to_string())?;
            if ip.exit != ip.exit_by_table {
                return Err(format!("exit sets differ for {}", x.format_set(s)));
            }
            checked += 1;
        }
    }
    Ok(format!(
        "{checked} isolated invariant sets, exit sets identical"
    ))
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let v = running_example();
    let r = field_property_suite(&v, &eps_1_48(), 10_000, 5, FieldVariant::Standard)
        .map_err(|e| e.to_string())?;
    if !r.passed() || r.max_conservation_error > 1e-12 || r.samples < 10_000 * r.tiles {
        return Err(format!(
            "bounds {}/{}/{}, conservation {:.1e}, direction {}: {:?}",
            r.bounds.a.violations,
            r.bounds.b.violations,
            r.bounds.c.violations,
            r.max_conservation_error,
            r.direction_violations,
            r.messages.first()
        ));
    }
    let spent = within(Duration::from_secs(10), start)?;
    Ok(format!(
        "{} samples, {} boundary, bounds applied {}/{}/{}, max |sum f| {:.1e} ({spent:.2?})",
        r.samples,
        r.boundary_samples,
        r.bounds.a.applicable,
        r.bounds.b.applicable,
        r.bounds.c.applicable,
        r.max_conservation_error
    ))
}

fn criterion_6() -> Outcome {
    let v = running_example();
    let eps = eps_1_48();
    let e = eps.to_f64();
    let flow = Semiflow::new(&v, &eps).map_err(|e| e.to_string())?;
    let p = CellPartition::new(v.complex(), &eps);
    let mut worst = 0.0f64;
    let mut compared = 0usize;
    for x0 in sample_points(&p, 60, 11) {
        let tile = flow.tile_of(&x0).map_err(|e| e.to_string())?;
        let ctx = flow.context(tile);
        let path = integrate_tile(ctx, &x0, 5.0, DEFAULT_DT, true).map_err(|e| e.to_string())?;
        let t_end = match path.exit {
            TileExit::Exited { time, .. } => time,
            TileExit::Stayed => f64::INFINITY,
        };
        for (t, x) in path.samples.iter().filter(|(t, _)| *t < t_end) {
            for &u in &ctx.outside {
                let want = psi(*t, x0[u], e).map_err(|e| e.to_string())?;
                worst = worst.max((x[u] - want).abs());
                compared += 1;
            }
        }
    }
    if worst > 1e-12 {
        return Err(format!("max deviation from psi {worst:.2e}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..10_000 {
        let zeta = rng.gen_range(0.0..=e);
        let z = psi(zero_time(zeta, e), zeta, e).map_err(|e| e.to_string())?;
        if z != 0.0 {
            return Err(format!("psi(t*, {zeta}) = {z}"));
        }
    }
    Ok(format!(
        "{compared} coordinates, max deviation {worst:.1e}; psi(t*) = 0 on 10000 values"
    ))
}

fn criterion_7() -> Outcome {
    let v = running_example();
    let r = admissibility_suite(&v, &eps_1_48(), &AdmissibilityConfig::default())
        .map_err(|e| e.to_string())?;
    if !r.passed() {
        return Err(format!(
            "{} violations: {:?}",
            r.violations(),
            r.messages.first()
        ));
    }
    let data = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/running_example.json");
    let out = Command::new(env!("CARGO_BIN_EXE_cvflow"))
        .arg("verify")
        .arg(&data)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.code() != Some(0) {
        return Err(format!("verify exited with {:?}", out.status.code()));
    }
    Ok(format!(
        "{} trajectories, {} crossings, {} arrow visits (max residence {:.2}), verify exit 0",
        r.samples, r.events, r.arrow_visits, r.max_arrow_residence
    ))
}

fn criterion_8() -> Outcome {
    let v = running_example();
    let eps = eps_1_48();
    let flow = Semiflow::new(&v, &eps).map_err(|e| e.to_string())?;
    let p = CellPartition::new(v.complex(), &eps);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for x in sample_points(&p, 100, 8) {
        let s = rng.gen_range(0.0..=5.0);
        let t = rng.gen_range(0.0..=5.0);
        let a = flow
            .advance(&flow.advance(&x, s).map_err(|e| e.to_string())?, t)
            .map_err(|e| e.to_string())?;
        let b = flow.advance(&x, s + t).map_err(|e| e.to_string())?;
        let gap = a
            .iter()
            .zip(&b)
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max);
        worst = worst.max(gap);
    }
    if worst > 1e-6 {
        return Err(format!("max gap {worst:.2e}"));
    }
    Ok(format!("100 triples, max gap {worst:.1e}"))
}

fn criterion_9() -> Outcome {
    let v = running_example();
    let g = finest_morse_decomposition(&v);
    let r = morse_flow_check(&v, &eps_1_48(), &g, 200, 9, 50.0).map_err(|e| e.to_string())?;
    if !r.passed() {
        return Err(format!(
            "{} unsettled, {} order violations, {} errors: {:?}",
            r.unsettled,
            r.order_violations,
            r.errors,
            r.messages.first()
        ));
    }
    Ok(format!(
        "200 trajectories settled; observed connections {:?}",
        r.observed
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("running example Morse decomposition", criterion_1),
        ("edge pair indices", criterion_2),
        ("index pair equivalence", criterion_3),
        ("exit set consistency", criterion_4),
        ("vector field bounds", criterion_5),
        ("decoupled closed form", criterion_6),
        ("strong admissibility", criterion_7),
        ("semiflow law", criterion_8),
        ("Morse decomposition from trajectories", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("criterion 10 OUT OF SCOPE  hexagon example: not reproducible, its complex is only given as a picture");
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
