//! Tile vector fields f^ω on the barycentric coordinates.
//!
//! Coordinates outside ω⁺ decay through the cube-root law ẋ = −g(x), the
//! extra vertex v⁺ of an arrow is driven by the profile h shifted by θ, and
//! the coordinates on ω⁻ balance everything so that Σ ẋ = 0.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::complex::VertexId;
use crate::cvf::{Cell, CombinatorialVectorField};
use crate::geometry::{
    characteristic_simplices_f64, CellPartition, Epsilon, GeometryError, RepresentableSet,
};

/// Below this the squared mass outside ω⁺ counts as zero.
pub const Y_TOLERANCE: f64 = 1e-24;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error(transparent)]
    Epsilon(#[from] GeometryError),
    #[error("time must be non-negative, got {0}")]
    NegativeTime(f64),
    #[error("point has {got} coordinates, expected {expected}")]
    WrongLength { got: usize, expected: usize },
}

/// Which evaluator to use. `SignFlippedH` exists only as a fault-injection
/// control for the verification suite.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum FieldVariant {
    #[default]
    Standard,
    SignFlippedH,
}

/// g(s) = ∛(ε² s), odd.
pub fn g(s: f64, eps: f64) -> f64 {
    (eps * eps * s).cbrt()
}

/// The dip profile: 1 away from ε, down to −ε/2 at s = ε.
pub fn h(s: f64, eps: f64) -> f64 {
    let r = (s - eps).abs();
    if r >= eps / 2.0 {
        1.0
    } else {
        (1.0 + eps / 2.0) * (2.0 / eps) * r - eps / 2.0
    }
}

/// Time at which the decoupled solution started at ζ reaches zero.
pub fn zero_time(zeta: f64, eps: f64) -> f64 {
    1.5 * (zeta.abs() / eps).powf(2.0 / 3.0)
}

/// Closed-form solution of ṡ = −g(s), s(0) = ζ.
pub fn psi(t: f64, zeta: f64, eps: f64) -> Result<f64, FieldError> {
    if t < 0.0 {
        return Err(FieldError::NegativeTime(t));
    }
    Ok(psi_at(t, zeta, eps))
}

pub(crate) fn psi_at(t: f64, zeta: f64, eps: f64) -> f64 {
    if zeta == 0.0 || t >= zero_time(zeta, eps) {
        return 0.0;
    }
    if t == 0.0 {
        return zeta;
    }
    let base = zeta.abs().powf(2.0 / 3.0) - (2.0 / 3.0) * eps.powf(2.0 / 3.0) * t;
    zeta.signum() * base.max(0.0).powf(1.5)
}

/// Vertex data of one flow tile.
#[derive(Clone, Debug)]
pub struct FieldContext {
    pub cell: Cell,
    /// Vertices of ω⁻.
    pub minus: Vec<VertexId>,
    /// Vertices of ω⁺.
    pub plus: Vec<VertexId>,
    pub v_plus: Option<VertexId>,
    /// Vertices not in ω⁺.
    pub outside: Vec<VertexId>,
    pub eps: f64,
    pub d: usize,
    pub variant: FieldVariant,
}

impl FieldContext {
    pub fn new(
        v: &CombinatorialVectorField,
        cell: Cell,
        eps: &Epsilon,
    ) -> Result<Self, FieldError> {
        let x = v.complex();
        eps.check_field(x)?;
        let minus = x.simplex(cell.minus()).vertices().to_vec();
        let plus = x.simplex(cell.plus()).vertices().to_vec();
        let v_plus = plus.iter().copied().find(|u| !minus.contains(u));
        let outside = (0..x.num_vertices())
            .filter(|u| !plus.contains(u))
            .collect();
        Ok(FieldContext {
            cell,
            minus,
            plus,
            v_plus,
            outside,
            eps: eps.to_f64(),
            d: x.num_vertices(),
            variant: FieldVariant::Standard,
        })
    }

    pub fn with_variant(mut self, variant: FieldVariant) -> Self {
        self.variant = variant;
        self
    }

    pub fn is_critical(&self) -> bool {
        self.v_plus.is_none()
    }

    pub(crate) fn h_eff(&self, s: f64) -> f64 {
        match self.variant {
            FieldVariant::Standard => h(s, self.eps),
            FieldVariant::SignFlippedH => -h(s, self.eps),
        }
    }

    /// θ^ω(x) = min({ε} ∪ {x_u − ε : u ∈ ω⁻}).
    pub fn theta(&self, x: &[f64]) -> f64 {
        self.minus
            .iter()
            .map(|&u| x[u] - self.eps)
            .fold(self.eps, f64::min)
    }

    /// x ∈ Y_ω, with the squared-mass tolerance.
    pub fn in_y(&self, x: &[f64]) -> bool {
        self.outside.iter().map(|&u| x[u] * x[u]).sum::<f64>() <= Y_TOLERANCE
    }

    /// η^ω(s, x).
    pub fn eta(&self, s: f64, x: &[f64]) -> f64 {
        if self.in_y(x) || s.abs() > self.eps / 4.0 {
            1.0
        } else {
            4.0 * s.abs() / self.eps
        }
    }

    /// τ^ω(x): time needed by the outside coordinates to reach zero.
    pub fn tau(&self, x: &[f64]) -> f64 {
        self.outside
            .iter()
            .map(|&u| zero_time(x[u], self.eps))
            .fold(0.0, f64::max)
    }

    fn outside_mass(&self, x: &[f64]) -> f64 {
        self.outside.iter().map(|&u| x[u]).sum()
    }

    /// Drive of v⁺ before the gate.
    pub(crate) fn v_plus_drive(&self, x: &[f64]) -> f64 {
        let vp = self.v_plus.expect("arrow tile");
        self.h_eff(x[vp]) + self.theta(x) - self.outside_mass(x)
    }

    fn assemble(&self, x: &[f64], gate: f64) -> Vec<f64> {
        let mut f = vec![0.0; self.d];
        for &u in &self.outside {
            f[u] = -g(x[u], self.eps);
        }
        if let Some(vp) = self.v_plus {
            f[vp] = gate * self.v_plus_drive(x);
        }
        let m = self.minus.len() as f64;
        let sum_minus: f64 = self.minus.iter().map(|&u| x[u]).sum();
        let sum_rest: f64 = (0..self.d)
            .filter(|u| !self.minus.contains(u))
            .map(|u| f[u])
            .sum();
        let shift = (sum_minus + sum_rest) / m;
        for &v in &self.minus {
            f[v] = x[v] - shift;
        }
        f
    }

    /// f^ω(x).
    pub fn f(&self, x: &[f64]) -> Vec<f64> {
        let gate = match self.v_plus {
            Some(vp) => self.eta(x[vp], x),
            None => 1.0,
        };
        self.assemble(x, gate)
    }

    /// f̄^ω(x): the continuous extension used off Y_ω.
    pub fn f_bar(&self, x: &[f64]) -> Vec<f64> {
        let gate = match self.v_plus {
            Some(vp) => (4.0 * x[vp].abs() / self.eps).min(1.0),
            None => 1.0,
        };
        self.assemble(x, gate)
    }

    /// Tile membership: Σ = 1; outside coordinates in [0, ε]; v⁺ ≥ 0; ω⁻
    /// coordinates ≥ ε; all within `tol`.
    pub fn in_tile(&self, x: &[f64], tol: f64) -> bool {
        let sum: f64 = x.iter().sum();
        (sum - 1.0).abs() <= tol
            && self
                .outside
                .iter()
                .all(|&u| x[u] >= -tol && x[u] <= self.eps + tol)
            && self.v_plus.is_none_or(|vp| x[vp] >= -tol)
            && self.minus.iter().all(|&u| x[u] >= self.eps - tol)
    }

    /// Sign bounds near the tile boundary at one point.
    pub fn bound_checks(&self, x: &[f64]) -> BoundReport {
        let f = self.f(x);
        let eps = self.eps;
        let mut report = BoundReport::default();
        let a_bound = -1.0 / (4.0 * self.d as f64);
        for &v in &self.minus {
            if (x[v] - eps).abs() <= eps {
                report.a.record(f[v], a_bound);
            }
        }
        for &v in &self.outside {
            if (x[v] - eps).abs() <= eps / 2.0 {
                report.b.record(f[v], -eps / 2.0);
            }
        }
        if let Some(vp) = self.v_plus {
            let near = (x[vp] - eps).abs() <= eps * eps / (8.0 + 4.0 * eps);
            let other = (0..self.d).any(|v| v != vp && (x[v] - eps).abs() <= eps / 8.0);
            if near && other {
                report.c.record(f[vp], -eps / 8.0);
            }
        }
        report
    }
}

/// Outcome of one bound over the points where its hypothesis holds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct BoundItem {
    pub applicable: usize,
    pub violations: usize,
    /// Largest value of f − bound seen; ≤ 0 when the bound holds.
    pub worst_margin: Option<f64>,
}

impl BoundItem {
    fn record(&mut self, value: f64, bound: f64) {
        self.applicable += 1;
        let margin = value - bound;
        if margin > 0.0 {
            self.violations += 1;
        }
        self.worst_margin = Some(self.worst_margin.map_or(margin, |w| w.max(margin)));
    }

    pub fn merge(&mut self, other: &BoundItem) {
        self.applicable += other.applicable;
        self.violations += other.violations;
        self.worst_margin = match (self.worst_margin, other.worst_margin) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct BoundReport {
    pub a: BoundItem,
    pub b: BoundItem,
    pub c: BoundItem,
}

impl BoundReport {
    pub fn violations(&self) -> usize {
        self.a.violations + self.b.violations + self.c.violations
    }

    pub fn merge(&mut self, other: &BoundReport) {
        self.a.merge(&other.a);
        self.b.merge(&other.b);
        self.c.merge(&other.c);
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct FieldSuiteReport {
    pub tiles: usize,
    pub samples: usize,
    pub boundary_samples: usize,
    pub bounds: BoundReport,
    pub max_conservation_error: f64,
    pub conservation_violations: usize,
    /// Boundary samples where some f_v with v ∈ σ_max \ σ_min is not negative.
    pub direction_violations: usize,
    /// Samples off Y_ω where f and f̄ differ.
    pub fbar_mismatches: usize,
    /// Largest sup-norm of f seen.
    pub max_norm: f64,
    pub messages: Vec<String>,
}

impl FieldSuiteReport {
    pub fn violations(&self) -> usize {
        self.bounds.violations()
            + self.conservation_violations
            + self.direction_violations
            + self.fbar_mismatches
    }

    pub fn passed(&self) -> bool {
        self.violations() == 0
    }

    fn merge(mut self, other: FieldSuiteReport) -> Self {
        self.tiles += other.tiles;
        self.samples += other.samples;
        self.boundary_samples += other.boundary_samples;
        self.bounds.merge(&other.bounds);
        self.max_conservation_error = self
            .max_conservation_error
            .max(other.max_conservation_error);
        self.conservation_violations += other.conservation_violations;
        self.direction_violations += other.direction_violations;
        self.fbar_mismatches += other.fbar_mismatches;
        self.max_norm = self.max_norm.max(other.max_norm);
        for m in other.messages {
            if self.messages.len() < 20 {
                self.messages.push(m);
            }
        }
        self
    }
}

fn audit_tile(
    ctx: &FieldContext,
    p: &CellPartition,
    tile: &RepresentableSet,
    samples: usize,
    seed: u64,
) -> FieldSuiteReport {
    let mut r = FieldSuiteReport {
        tiles: 1,
        ..Default::default()
    };
    let eps = ctx.eps;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let all: Vec<_> = tile.cells.iter().copied().collect();
    let boundary: Vec<_> = tile.boundary(p).cells.into_iter().collect();
    for _ in 0..samples {
        let x = p
            .cell(all[rng.gen_range(0..all.len())])
            .sample(eps, &mut rng);
        r.samples += 1;
        let f = ctx.f(&x);
        let err = f.iter().sum::<f64>().abs();
        r.max_conservation_error = r.max_conservation_error.max(err);
        if err > 1e-12 {
            r.conservation_violations += 1;
        }
        r.max_norm = f.iter().fold(r.max_norm, |a, b| a.max(b.abs()));
        r.bounds.merge(&ctx.bound_checks(&x));
        if !ctx.in_y(&x) && ctx.f_bar(&x) != f {
            r.fbar_mismatches += 1;
        }
    }
    for _ in 0..(samples / 4).max(usize::from(samples > 0)) {
        if boundary.is_empty() {
            break;
        }
        let x = p
            .cell(boundary[rng.gen_range(0..boundary.len())])
            .sample(eps, &mut rng);
        r.boundary_samples += 1;
        r.bounds.merge(&ctx.bound_checks(&x));
        let f = ctx.f(&x);
        let (lo, hi) = characteristic_simplices_f64(&x, eps, 0.0);
        for v in hi.into_iter().filter(|v| !lo.contains(v)) {
            if f[v] >= 0.0 {
                r.direction_violations += 1;
                if r.messages.len() < 20 {
                    r.messages
                        .push(format!("f_{v} = {} at boundary point {x:?}", f[v]));
                }
            }
        }
    }
    r
}

/// Conservation, sign bounds, boundary direction and f̄ agreement over
/// seeded random points of every flow tile.
pub fn field_property_suite(
    v: &CombinatorialVectorField,
    eps: &Epsilon,
    samples_per_tile: usize,
    seed: u64,
    variant: FieldVariant,
) -> Result<FieldSuiteReport, FieldError> {
    let contexts = v
        .cells()
        .iter()
        .map(|&c| Ok(FieldContext::new(v, c, eps)?.with_variant(variant)))
        .collect::<Result<Vec<_>, FieldError>>()?;
    let p = CellPartition::new(v.complex(), eps);
    let x = v.complex();
    let report = contexts
        .par_iter()
        .enumerate()
        .map(|(i, ctx)| {
            let tile = RepresentableSet::tile(&p, x, ctx.cell);
            audit_tile(
                ctx,
                &p,
                &tile,
                samples_per_tile,
                seed.wrapping_add(i as u64),
            )
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(FieldSuiteReport::default(), FieldSuiteReport::merge);
    Ok(report)
}
