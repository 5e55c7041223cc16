use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use cvflow::conley::{self, finest_morse_decomposition, SimplexSet};
use cvflow::field::{field_property_suite, FieldVariant};
use cvflow::geometry::{
    classify_boundary, compare_indices, index_pairs, BoundaryCase, CellPartition, Epsilon,
};
use cvflow::io::{events_jsonl, morse_dot, morse_json, trajectory_csv, InputDocument};
use cvflow::semiflow::{admissibility_suite, AdmissibilityConfig, Semiflow, DEFAULT_DT};
use cvflow::{CombinatorialVectorField, SimplicialComplex};

#[derive(Parser)]
#[command(
    name = "cvflow",
    version,
    about = "Conley theory and semiflows for combinatorial vector fields"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON document with "vertices", "simplices" and "field".
    input: PathBuf,
    /// Threshold as an exact fraction p/q; defaults to 1/(8d).
    #[arg(long)]
    eps: Option<String>,
    /// Simplices not mentioned by the field become critical.
    #[arg(long)]
    complete_critical: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Check the complex and the field.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Require the simplex listing to be closed under faces.
        #[arg(long)]
        strict: bool,
    },
    /// Finest Morse decomposition with Conley indices.
    Morse {
        #[command(flatten)]
        common: Common,
        #[arg(long, conflicts_with = "json")]
        dot: bool,
        #[arg(long)]
        json: bool,
        /// Emit the full order instead of its transitive reduction.
        #[arg(long)]
        full: bool,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Conley index of an isolated invariant set.
    Index {
        #[command(flatten)]
        common: Common,
        /// Simplices separated by commas, e.g. "EF,E".
        #[arg(long)]
        set: String,
    },
    /// Isolating block and exit set of an isolated invariant set.
    Block {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        set: String,
    },
    /// Integrate the glued semiflow from a point.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Barycentric coordinates, e.g. "A=0.2,B=0.3,D=0.5".
        #[arg(long)]
        from: String,
        #[arg(long, default_value_t = 10.0)]
        tmax: f64,
        #[arg(long, default_value_t = DEFAULT_DT)]
        dt: f64,
        /// CSV output path; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// JSONL event log path; defaults to the CSV path with extension
        /// `.events.jsonl`.
        #[arg(long)]
        events: Option<PathBuf>,
    },
    /// Run the field, semiflow and index-pair property suites.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Number of random trajectories.
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Random points per flow tile for the vector field checks.
        #[arg(long, default_value_t = 10_000)]
        field_samples: usize,
        #[arg(long, default_value_t = 20.0)]
        tmax: f64,
        #[arg(long, default_value_t = DEFAULT_DT)]
        dt: f64,
        /// Flip the sign of h in the vector fields; the suites should fail.
        #[arg(long)]
        corrupt_field: bool,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Compare the combinatorial index with both geometric index pairs.
    HomologyEquiv {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        set: String,
    },
}

/// Bad command-line arguments; reported with exit code 2.
#[derive(Debug)]
struct Usage(String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum EpsCheck {
    Geometry,
    Field,
}

impl Common {
    fn document(&self) -> Result<InputDocument> {
        InputDocument::load(&self.input)
            .with_context(|| format!("loading {}", self.input.display()))
    }

    fn field(&self) -> Result<CombinatorialVectorField> {
        let doc = self.document()?;
        Ok(doc.field(doc.complex()?, self.complete_critical)?)
    }

    fn eps(&self, x: &SimplicialComplex, check: EpsCheck) -> Result<Epsilon> {
        let eps = match &self.eps {
            None => Epsilon::default_for(x),
            Some(text) => text.parse().map_err(|e| usage(format!("--eps: {e}")))?,
        };
        let ok = match check {
            EpsCheck::Geometry => eps.check_geometry(x),
            EpsCheck::Field => eps.check_field(x),
        };
        ok.map_err(|e| usage(format!("--eps: {e}")))?;
        Ok(eps)
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_set(x: &SimplicialComplex, text: &str) -> Result<SimplexSet> {
    x.parse_simplex_set(text)
        .map_err(|e| usage(format!("--set: {e}")))
}

fn parse_point(x: &SimplicialComplex, text: &str) -> Result<Vec<f64>> {
    let mut point = vec![0.0; x.num_vertices()];
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (name, value) = part
            .split_once('=')
            .ok_or_else(|| usage(format!("--from: expected NAME=VALUE, got `{part}`")))?;
        let v = x
            .vertex_id(name.trim())
            .ok_or_else(|| usage(format!("--from: unknown vertex `{}`", name.trim())))?;
        point[v] = value
            .trim()
            .parse()
            .map_err(|_| usage(format!("--from: bad number `{}`", value.trim())))?;
    }
    Ok(point)
}

fn validate(common: &Common, strict: bool) -> Result<bool> {
    let doc = common.document()?;
    let x = match if strict {
        doc.complex_strict()
    } else {
        doc.complex()
    } {
        Ok(x) => x,
        Err(e) => {
            println!("invalid complex: {e}");
            return Ok(false);
        }
    };
    let (n, size, dim) = (x.num_vertices(), x.len(), x.dim());
    match doc.field(x, common.complete_critical) {
        Ok(v) => {
            println!(
                "ok: {n} vertices, {size} simplices, dimension {dim}, {} critical cells, {} arrows",
                v.critical().len(),
                v.arrows().len()
            );
            Ok(true)
        }
        Err(e) => {
            println!("invalid field: {e}");
            Ok(false)
        }
    }
}

fn morse(
    common: &Common,
    dot: bool,
    as_json: bool,
    full: bool,
    out: Option<&Path>,
) -> Result<bool> {
    let v = common.field()?;
    let g = finest_morse_decomposition(&v);
    let x = v.complex();
    let text = if dot {
        morse_dot(&v, &g, full)
    } else if as_json {
        format!("{}\n", serde_json::to_string_pretty(&morse_json(&v, &g))?)
    } else {
        let mut s = String::new();
        for (i, n) in g.nodes.iter().enumerate() {
            s += &format!("M{i}  {}  p(t) = {}\n", x.format_set(&n.simplices), n.index);
        }
        let edges = if full { &g.reachability } else { &g.edges };
        for (p, q) in edges {
            s += &format!("M{p} > M{q}\n");
        }
        s
    };
    emit(out, &text)?;
    Ok(true)
}

fn index(common: &Common, set: &str) -> Result<bool> {
    let v = common.field()?;
    let s = parse_set(v.complex(), set)?;
    match conley::conley_index(&v, &s) {
        Ok(p) => {
            println!("p(t) = {p}");
            Ok(true)
        }
        Err(e) => {
            println!("{}", describe_conley(&v, &e));
            Ok(false)
        }
    }
}

fn describe_conley(v: &CombinatorialVectorField, e: &conley::ConleyError) -> String {
    match e {
        conley::ConleyError::NotIsolated(f) => {
            format!("not an isolated invariant set: {}", f.describe(v.complex()))
        }
        e => e.to_string(),
    }
}

fn block(common: &Common, set: &str) -> Result<bool> {
    let v = common.field()?;
    let x = v.complex();
    let eps = common.eps(x, EpsCheck::Geometry)?;
    let s = parse_set(x, set)?;
    let p = CellPartition::new(x, &eps);
    let ip = match index_pairs(&v, &p, &s) {
        Ok(ip) => ip,
        Err(e) => {
            println!("{e}");
            return Ok(false);
        }
    };
    let bd = ip.block.boundary(&p);
    let mut counts = [0usize; 4];
    for &c in &bd.cells {
        counts[match classify_boundary(&v, &p, &s, c) {
            BoundaryCase::Impossible => 0,
            BoundaryCase::Ingress => 1,
            BoundaryCase::Egress => 2,
            BoundaryCase::BounceOff => 3,
        }] += 1;
    }
    let agree = ip.exit == ip.exit_by_table;
    let report = json!({
        "set": x.format_set(&s),
        "eps": eps.to_string(),
        "block_cells": ip.block.len(),
        "boundary_cells": bd.len(),
        "exit_cells": ip.exit.len(),
        "boundary": {
            "impossible": counts[0],
            "ingress": counts[1],
            "egress": counts[2],
            "bounce_off": counts[3],
        },
        "exit_sets_agree": agree,
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(agree && counts[0] == 0)
}

fn homology_equiv(common: &Common, set: &str) -> Result<bool> {
    let v = common.field()?;
    let x = v.complex();
    let eps = common.eps(x, EpsCheck::Geometry)?;
    let s = parse_set(x, set)?;
    let p = CellPartition::new(x, &eps);
    match compare_indices(&v, &p, &s) {
        Ok(c) => {
            let report = json!({
                "set": x.format_set(&s),
                "combinatorial": c.combinatorial.to_string(),
                "block_pair": c.block_pair.to_string(),
                "closure_pair": c.closure_pair.to_string(),
                "exit_sets_agree": c.exit_sets_agree,
                "equal": c.agrees(),
            });
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(c.agrees())
        }
        Err(e) => {
            println!("{e}");
            Ok(false)
        }
    }
}

struct SimulateArgs<'a> {
    from: &'a str,
    tmax: f64,
    dt: f64,
    out: Option<&'a Path>,
    events: Option<&'a Path>,
}

fn simulate(common: &Common, a: SimulateArgs) -> Result<bool> {
    let v = common.field()?;
    let x = v.complex();
    let eps = common.eps(x, EpsCheck::Field)?;
    if !(a.tmax >= 0.0 && a.tmax.is_finite()) || !(a.dt > 0.0 && a.dt.is_finite()) {
        return Err(usage("--tmax must be non-negative and --dt positive"));
    }
    let point = parse_point(x, a.from)?;
    let flow = Semiflow::new(&v, &eps)?.with_dt(a.dt);
    flow.check_point(&point)
        .map_err(|e| usage(format!("--from: {e}")))?;
    let traj = flow.run(&point, a.tmax, true)?;
    emit(a.out, &trajectory_csv(&v, &traj))?;
    let events_path = a
        .events
        .map(Path::to_path_buf)
        .or_else(|| a.out.map(|p| p.with_extension("events.jsonl")));
    if let Some(p) = events_path {
        fs::write(&p, events_jsonl(&v, &traj))
            .with_context(|| format!("writing {}", p.display()))?;
    }
    eprintln!(
        "{} crossings; final tile {}",
        traj.events.len(),
        cvflow::io::cell_label(&v, traj.end_tile())
    );
    Ok(true)
}

struct VerifyArgs<'a> {
    samples: usize,
    seed: u64,
    field_samples: usize,
    tmax: f64,
    dt: f64,
    corrupt: bool,
    out: Option<&'a Path>,
}

fn verify(common: &Common, a: VerifyArgs) -> Result<bool> {
    let v = common.field()?;
    let x = v.complex();
    let eps = common.eps(x, EpsCheck::Field)?;
    let variant = if a.corrupt {
        FieldVariant::SignFlippedH
    } else {
        FieldVariant::Standard
    };
    let mut warnings = Vec::new();
    let mut ok = true;

    let p = CellPartition::new(x, &eps);
    let g = finest_morse_decomposition(&v);
    let mut pairs = Vec::new();
    for n in &g.nodes {
        let s: SimplexSet = n.simplices.iter().copied().collect();
        let c = compare_indices(&v, &p, &s)?;
        ok &= c.agrees();
        pairs.push(json!({
            "set": x.format_set(&s),
            "combinatorial": c.combinatorial.to_string(),
            "block_pair": c.block_pair.to_string(),
            "closure_pair": c.closure_pair.to_string(),
            "exit_sets_agree": c.exit_sets_agree,
            "equal": c.agrees(),
        }));
    }

    let (field, flow) = if a.samples == 0 {
        warnings.push("no samples: vector field and semiflow suites skipped".to_string());
        (None, None)
    } else {
        let f = field_property_suite(&v, &eps, a.field_samples, a.seed, variant)?;
        let cfg = AdmissibilityConfig {
            samples: a.samples,
            seed: a.seed,
            t_max: a.tmax,
            dt: a.dt,
            variant,
        };
        let r = admissibility_suite(&v, &eps, &cfg)?;
        ok &= f.passed() && r.passed();
        (Some(f), Some(r))
    };
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let report = json!({
        "ok": ok,
        "eps": eps.to_string(),
        "seed": a.seed,
        "corrupt_field": a.corrupt,
        "index_pairs": pairs,
        "field": field,
        "admissibility": flow,
        "warnings": warnings,
    });
    emit(
        a.out,
        &format!("{}\n", serde_json::to_string_pretty(&report)?),
    )?;
    Ok(ok)
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Validate { common, .. }
            | Command::Morse { common, .. }
            | Command::Index { common, .. }
            | Command::Block { common, .. }
            | Command::Simulate { common, .. }
            | Command::Verify { common, .. }
            | Command::HomologyEquiv { common, .. } => common,
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    if let Some(text) = &cli.command.common().eps {
        text.parse::<Epsilon>()
            .map_err(|e| usage(format!("--eps: {e}")))?;
    }
    match &cli.command {
        Command::Validate { common, strict } => validate(common, *strict),
        Command::Morse {
            common,
            dot,
            json,
            full,
            out,
        } => morse(common, *dot, *json, *full, out.as_deref()),
        Command::Index { common, set } => index(common, set),
        Command::Block { common, set } => block(common, set),
        Command::HomologyEquiv { common, set } => homology_equiv(common, set),
        Command::Simulate {
            common,
            from,
            tmax,
            dt,
            out,
            events,
        } => simulate(
            common,
            SimulateArgs {
                from,
                tmax: *tmax,
                dt: *dt,
                out: out.as_deref(),
                events: events.as_deref(),
            },
        ),
        Command::Verify {
            common,
            samples,
            seed,
            field_samples,
            tmax,
            dt,
            corrupt_field,
            out,
        } => verify(
            common,
            VerifyArgs {
                samples: *samples,
                seed: *seed,
                field_samples: *field_samples,
                tmax: *tmax,
                dt: *dt,
                corrupt: *corrupt_field,
                out: out.as_deref(),
            },
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<Usage>() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
