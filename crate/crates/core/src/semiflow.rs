//! Tile semiflows φ^ω and the glued semiflow on |X|.
//!
//! Inside a tile the coordinates off ω⁺ follow the closed form ψ. The ω⁺
//! coordinates are integrated with a classical fourth-order scheme, split at
//! every point where the right-hand side fails to be smooth: the zero times
//! of the decoupled coordinates, the switching time τ^ω, the kinks of h, of
//! the gate and of θ. The ω⁻ coordinates are carried in shifted variables
//! w_v = x_v + S(t)/|ω⁻| with S = Σ ψ_u, which removes the cube-root forcing
//! from their equations.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::complex::{Simplex, SimplexId};
use crate::conley::MorseGraph;
use crate::cvf::CombinatorialVectorField;
use crate::field::{psi_at, zero_time, FieldContext, FieldError, FieldVariant};
use crate::geometry::{characteristic_simplices_f64, CellPartition, Epsilon};

/// Coordinates this close to ε count as equal to ε.
pub const TAU_SNAP: f64 = 1e-9;
/// Slack allowed in the tile membership test.
pub const TAU_MEM: f64 = 1e-8;
/// Precision of event localization.
pub const TAU_EVENT: f64 = 1e-12;
pub const DEFAULT_DT: f64 = 1e-3;

const DIVERGENCE: f64 = 1e6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("invalid point: {0}")]
    BadPoint(String),
    #[error("point {0:?} is not in the flow tile")]
    NotInTile(Vec<f64>),
    #[error("step budget of {0} exhausted")]
    Budget(usize),
    #[error("solution left every bounded region at t = {0}")]
    Diverged(f64),
    #[error("no progress at t = {t}: {chain} zero-duration crossings at {point:?} through tiles {tiles:?}")]
    NoProgress {
        t: f64,
        chain: usize,
        point: Vec<f64>,
        tiles: Vec<usize>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Phase {
    /// t < τ^ω: some coordinate off ω⁺ is still nonzero.
    OutsideY,
    InsideY,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TileState {
    pub point: Vec<f64>,
    pub phase: Phase,
    pub time: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TileExit {
    Exited {
        time: f64,
        point: Vec<f64>,
        /// A state shortly before the exit.
        pre: Vec<f64>,
    },
    Stayed,
}

#[derive(Clone, Debug)]
pub struct TilePath {
    pub samples: Vec<(f64, Vec<f64>)>,
    pub exit: TileExit,
    pub end: TileState,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum ExitTime {
    Finite(f64),
    /// No exit before the time budget.
    Unbounded,
}

impl ExitTime {
    pub fn finite(self) -> Option<f64> {
        match self {
            ExitTime::Finite(t) => Some(t),
            ExitTime::Unbounded => None,
        }
    }
}

struct Scratch {
    x: Vec<f64>,
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl Scratch {
    fn new(d: usize) -> Self {
        Scratch {
            x: vec![0.0; d],
            k: std::array::from_fn(|_| vec![0.0; d]),
            tmp: vec![0.0; d],
        }
    }
}

/// The ODE of one tile, started at a fixed point.
struct TileOde<'a> {
    ctx: &'a FieldContext,
    zeta: Vec<(usize, f64)>,
    m: f64,
}

impl<'a> TileOde<'a> {
    fn new(ctx: &'a FieldContext, x0: &[f64]) -> Self {
        TileOde {
            ctx,
            zeta: ctx.outside.iter().map(|&u| (u, x0[u])).collect(),
            m: ctx.minus.len() as f64,
        }
    }

    /// Fills `x` with the point for state `z` at time `t`.
    fn point(&self, t: f64, z: &[f64], x: &mut [f64]) {
        let eps = self.ctx.eps;
        let mut s = 0.0;
        for &(u, zeta) in &self.zeta {
            let p = psi_at(t, zeta, eps);
            x[u] = p;
            s += p;
        }
        for &v in &self.ctx.minus {
            x[v] = z[v] - s / self.m;
        }
        if let Some(vp) = self.ctx.v_plus {
            x[vp] = z[vp];
        }
    }

    fn rhs(&self, t: f64, z: &[f64], in_y: bool, x: &mut [f64], dz: &mut [f64]) {
        self.point(t, z, x);
        let ctx = self.ctx;
        let fp = match ctx.v_plus {
            Some(vp) => {
                let y = x[vp];
                let gate = if in_y {
                    1.0
                } else {
                    (4.0 * y.abs() / ctx.eps).min(1.0)
                };
                let f = gate * ctx.v_plus_drive(x);
                dz[vp] = f;
                f
            }
            None => 0.0,
        };
        let sum: f64 = ctx.minus.iter().map(|&v| x[v]).sum();
        let shift = (sum + fp) / self.m;
        for &v in &ctx.minus {
            dz[v] = x[v] - shift;
        }
    }

    fn rk4(&self, t: f64, z: &[f64], h: f64, in_y: bool, sc: &mut Scratch, out: &mut Vec<f64>) {
        let Scratch { x, k, tmp } = sc;
        let [k1, k2, k3, k4] = k;
        self.rhs(t, z, in_y, x, k1);
        for i in self.active() {
            tmp[i] = z[i] + 0.5 * h * k1[i];
        }
        self.rhs(t + 0.5 * h, tmp, in_y, x, k2);
        for i in self.active() {
            tmp[i] = z[i] + 0.5 * h * k2[i];
        }
        self.rhs(t + 0.5 * h, tmp, in_y, x, k3);
        for i in self.active() {
            tmp[i] = z[i] + h * k3[i];
        }
        self.rhs(t + h, tmp, in_y, x, k4);
        out.clear();
        out.extend_from_slice(z);
        for i in self.active() {
            out[i] = z[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }

    fn active(&self) -> impl Iterator<Item = usize> + '_ {
        self.ctx.minus.iter().copied().chain(self.ctx.v_plus)
    }

    /// Kink functions into `out`; returns min over ω⁻ of x_v − ε.
    fn events(&self, t: f64, z: &[f64], in_y: bool, x: &mut [f64], out: &mut Vec<f64>) -> f64 {
        self.point(t, z, x);
        let eps = self.ctx.eps;
        out.clear();
        if let Some(vp) = self.ctx.v_plus {
            let y = x[vp];
            out.extend([y - 0.5 * eps, y - eps, y - 1.5 * eps]);
            if !in_y {
                out.push(y - 0.25 * eps);
            }
        }
        let minus = &self.ctx.minus;
        for (i, &u) in minus.iter().enumerate() {
            out.push(x[u] - 2.0 * eps);
            for &w in &minus[i + 1..] {
                out.push(x[u] - x[w]);
            }
        }
        minus
            .iter()
            .map(|&v| x[v] - eps)
            .fold(f64::INFINITY, f64::min)
    }
}

fn crossed(a: &[f64], b: &[f64]) -> bool {
    a.iter()
        .zip(b)
        .any(|(&p, &q)| (p > 0.0 && q < 0.0) || (p < 0.0 && q > 0.0))
}

fn check_membership(ctx: &FieldContext, x: &[f64]) -> Result<(), FlowError> {
    if x.len() != ctx.d {
        return Err(FieldError::WrongLength {
            got: x.len(),
            expected: ctx.d,
        }
        .into());
    }
    if !ctx.in_tile(x, TAU_MEM) {
        return Err(FlowError::NotInTile(x.to_vec()));
    }
    Ok(())
}

fn snap_exit(ctx: &FieldContext, x: &mut [f64]) {
    let eps = ctx.eps;
    let lowest = ctx
        .minus
        .iter()
        .copied()
        .min_by(|&a, &b| x[a].total_cmp(&x[b]))
        .expect("ω⁻ is nonempty");
    for &v in &ctx.minus {
        if v == lowest || (x[v] - eps).abs() <= TAU_EVENT {
            x[v] = eps;
        }
    }
}

/// Runs φ^ω from `x0` for at most `t_max`, stopping at the first exit from
/// the tile.
pub fn integrate_tile(
    ctx: &FieldContext,
    x0: &[f64],
    t_max: f64,
    dt: f64,
    record: bool,
) -> Result<TilePath, FlowError> {
    check_membership(ctx, x0)?;
    let ode = TileOde::new(ctx, x0);
    let d = ctx.d;
    let eps = ctx.eps;
    let mut sc = Scratch::new(d);
    let mut samples = Vec::new();
    if record {
        samples.push((0.0, x0.to_vec()));
    }

    if ctx.minus.iter().any(|&v| x0[v] <= eps) {
        let mut point = x0.to_vec();
        snap_exit(ctx, &mut point);
        if record {
            samples.push((0.0, point.clone()));
        }
        return Ok(TilePath {
            samples,
            end: TileState {
                point: point.clone(),
                phase: phase_of(ctx, &point),
                time: 0.0,
            },
            exit: TileExit::Exited {
                time: 0.0,
                pre: x0.to_vec(),
                point,
            },
        });
    }

    let mut z = x0.to_vec();
    let s0: f64 = ode.zeta.iter().map(|p| p.1).sum();
    for &v in &ctx.minus {
        z[v] += s0 / ode.m;
    }
    let tau = ctx.tau(x0);
    let mut stops: Vec<f64> = ode
        .zeta
        .iter()
        .map(|&(_, zeta)| zero_time(zeta, eps))
        .filter(|&t| t > 0.0 && t < t_max)
        .collect();
    stops.push(t_max);
    stops.sort_by(f64::total_cmp);
    stops.dedup();

    let budget = 2 * (t_max / dt).ceil() as usize + 10_000;
    let mut steps = 0usize;
    let mut t = 0.0;
    let (mut ev0, mut ev1) = (Vec::new(), Vec::new());
    let mut z1 = Vec::with_capacity(d);
    let mut zm = Vec::with_capacity(d);
    for &stop in &stops {
        let in_y = t >= tau;
        while t < stop {
            steps += 1;
            if steps > budget {
                return Err(FlowError::Budget(budget));
            }
            let h = (stop - t).min(dt);
            let last = h == stop - t;
            ode.rk4(t, &z, h, in_y, &mut sc, &mut z1);
            ode.events(t, &z, in_y, &mut sc.x, &mut ev0);
            let exit1 = ode.events(t + h, &z1, in_y, &mut sc.x, &mut ev1);
            let mut next_t = if last { stop } else { t + h };
            if exit1 <= 0.0 || crossed(&ev0, &ev1) {
                let (mut lo, mut hi) = (0.0, h);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    ode.rk4(t, &z, mid, in_y, &mut sc, &mut zm);
                    let e = ode.events(t + mid, &zm, in_y, &mut sc.x, &mut ev1);
                    if e <= 0.0 || crossed(&ev0, &ev1) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                if hi < h {
                    ode.rk4(t, &z, hi, in_y, &mut sc, &mut z1);
                    next_t = t + hi;
                }
                let exit = ode.events(next_t, &z1, in_y, &mut sc.x, &mut ev1);
                if exit <= 0.0 {
                    ode.rk4(t, &z, 0.5 * hi, in_y, &mut sc, &mut zm);
                    let mut pre = vec![0.0; d];
                    ode.point(t + 0.5 * hi, &zm, &mut pre);
                    let mut point = vec![0.0; d];
                    ode.point(next_t, &z1, &mut point);
                    snap_exit(ctx, &mut point);
                    if record {
                        samples.push((next_t, point.clone()));
                    }
                    return Ok(TilePath {
                        samples,
                        end: TileState {
                            phase: phase_of(ctx, &point),
                            point: point.clone(),
                            time: next_t,
                        },
                        exit: TileExit::Exited {
                            time: next_t,
                            point,
                            pre,
                        },
                    });
                }
            }
            std::mem::swap(&mut z, &mut z1);
            t = next_t;
            if z.iter().any(|c| !c.is_finite() || c.abs() > DIVERGENCE) {
                return Err(FlowError::Diverged(t));
            }
            if record {
                let mut x = vec![0.0; d];
                ode.point(t, &z, &mut x);
                samples.push((t, x));
            }
        }
    }
    let mut point = vec![0.0; d];
    ode.point(t, &z, &mut point);
    Ok(TilePath {
        samples,
        end: TileState {
            phase: phase_of(ctx, &point),
            point,
            time: t,
        },
        exit: TileExit::Stayed,
    })
}

fn phase_of(ctx: &FieldContext, x: &[f64]) -> Phase {
    if ctx.outside.iter().all(|&u| x[u] == 0.0) {
        Phase::InsideY
    } else {
        Phase::OutsideY
    }
}

/// T^ω(x), or `Unbounded` when no exit happens within `t_budget`.
pub fn exit_time(
    ctx: &FieldContext,
    x: &[f64],
    dt: f64,
    t_budget: f64,
) -> Result<ExitTime, FlowError> {
    let path = integrate_tile(ctx, x, t_budget, dt, false)?;
    Ok(match path.exit {
        TileExit::Exited { time, .. } => ExitTime::Finite(time),
        TileExit::Stayed => ExitTime::Unbounded,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub point: Vec<f64>,
    /// Index of the cell of V whose tile is in use.
    pub tile: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Event {
    pub t: f64,
    pub point: Vec<f64>,
    /// Trajectory point shortly before the crossing; absent for
    /// zero-duration visits.
    pub pre: Option<Vec<f64>>,
    pub from: usize,
    pub to: usize,
    pub sigma_min: SimplexId,
    pub sigma_max: SimplexId,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Visit {
    pub tile: usize,
    pub enter: f64,
    pub exit: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub events: Vec<Event>,
    pub visits: Vec<Visit>,
    pub end: Vec<f64>,
    pub t_max: f64,
}

impl Trajectory {
    pub fn end_tile(&self) -> usize {
        self.visits
            .last()
            .expect("a trajectory visits some tile")
            .tile
    }
}

/// The glued semiflow of a combinatorial vector field.
#[derive(Clone, Debug)]
pub struct Semiflow<'a> {
    field: &'a CombinatorialVectorField,
    contexts: Vec<FieldContext>,
    eps: f64,
    pub dt: f64,
    /// Horizon after which a tile visit counts as unbounded.
    pub t_budget: f64,
}

impl<'a> Semiflow<'a> {
    pub fn new(field: &'a CombinatorialVectorField, eps: &Epsilon) -> Result<Self, FlowError> {
        let contexts = field
            .cells()
            .iter()
            .map(|&c| FieldContext::new(field, c, eps))
            .collect::<Result<Vec<_>, _>>()?;
        let e = eps.to_f64();
        Ok(Semiflow {
            field,
            contexts,
            eps: e,
            dt: DEFAULT_DT,
            t_budget: 10.0 / e,
        })
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_variant(mut self, variant: FieldVariant) -> Self {
        for c in &mut self.contexts {
            c.variant = variant;
        }
        self
    }

    pub fn field(&self) -> &CombinatorialVectorField {
        self.field
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn context(&self, tile: usize) -> &FieldContext {
        &self.contexts[tile]
    }

    /// Checks that `x` is a point of |X|.
    pub fn check_point(&self, x: &[f64]) -> Result<(), FlowError> {
        let cx = self.field.complex();
        if x.len() != cx.num_vertices() {
            return Err(FlowError::BadPoint(format!(
                "{} coordinates for {} vertices",
                x.len(),
                cx.num_vertices()
            )));
        }
        if x.iter().any(|c| !c.is_finite() || *c < -TAU_EVENT) {
            return Err(FlowError::BadPoint(
                "coordinates must be non-negative".into(),
            ));
        }
        let sum: f64 = x.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(FlowError::BadPoint(format!("coordinates sum to {sum}")));
        }
        let support: Vec<usize> = (0..x.len()).filter(|&v| x[v] > 0.0).collect();
        let s = Simplex::new(support).map_err(|e| FlowError::BadPoint(e.to_string()))?;
        if !cx.contains(&s) {
            return Err(FlowError::BadPoint(format!(
                "support {} is not a simplex of the complex",
                cx.format_simplex(&s)
            )));
        }
        Ok(())
    }

    /// Number of flow tiles containing `x`.
    pub fn tiles_containing(&self, x: &[f64]) -> usize {
        self.contexts
            .iter()
            .filter(|c| c.in_tile(x, TAU_EVENT))
            .count()
    }

    /// (σ_min, σ_max) of a point, with ε-snapping.
    pub fn characteristic(&self, x: &[f64]) -> Result<(SimplexId, SimplexId), FlowError> {
        let cx = self.field.complex();
        let (lo, hi) = characteristic_simplices_f64(x, self.eps, TAU_SNAP);
        let id = |verts: Vec<usize>| {
            Simplex::new(verts)
                .ok()
                .and_then(|s| cx.id_of(&s))
                .ok_or_else(|| FlowError::BadPoint(format!("{x:?} has no characteristic simplex")))
        };
        Ok((id(lo)?, id(hi)?))
    }

    /// Tile used at `x`: the cell owning σ_min(x).
    pub fn tile_of(&self, x: &[f64]) -> Result<usize, FlowError> {
        Ok(self.field.cell_index(self.characteristic(x)?.0))
    }

    pub fn exit_time(&self, tile: usize, x: &[f64]) -> Result<ExitTime, FlowError> {
        exit_time(&self.contexts[tile], x, self.dt, self.t_budget)
    }

    pub fn run(&self, x0: &[f64], t_max: f64, record: bool) -> Result<Trajectory, FlowError> {
        self.check_point(x0)?;
        let d = x0.len();
        let mut tile = self.tile_of(x0)?;
        let mut x = x0.to_vec();
        let mut t = 0.0;
        let mut samples = Vec::new();
        let mut events = Vec::new();
        let mut visits = vec![Visit {
            tile,
            enter: 0.0,
            exit: None,
        }];
        let mut chain: Vec<usize> = vec![tile];
        loop {
            let path = integrate_tile(&self.contexts[tile], &x, t_max - t, self.dt, record)?;
            let skip = usize::from(t > 0.0 || !samples.is_empty());
            samples.extend(
                path.samples
                    .into_iter()
                    .skip(skip)
                    .map(|(s, point)| Sample {
                        t: t + s,
                        point,
                        tile,
                    }),
            );
            match path.exit {
                TileExit::Stayed => {
                    x = path.end.point;
                    break;
                }
                TileExit::Exited { time, point, pre } => {
                    let (lo, hi) = self.characteristic(&point)?;
                    let next = self.field.cell_index(lo);
                    if time > 0.0 {
                        chain.clear();
                        chain.push(tile);
                    }
                    if chain.contains(&next) || chain.len() > d {
                        chain.push(next);
                        return Err(FlowError::NoProgress {
                            t: t + time,
                            chain: chain.len() - 1,
                            point,
                            tiles: chain,
                        });
                    }
                    chain.push(next);
                    t += time;
                    events.push(Event {
                        t,
                        point: point.clone(),
                        pre: (time > 0.0).then_some(pre),
                        from: tile,
                        to: next,
                        sigma_min: lo,
                        sigma_max: hi,
                    });
                    visits.last_mut().expect("current visit").exit = Some(t);
                    visits.push(Visit {
                        tile: next,
                        enter: t,
                        exit: None,
                    });
                    x = point;
                    tile = next;
                    if t >= t_max {
                        break;
                    }
                }
            }
        }
        Ok(Trajectory {
            samples,
            events,
            visits,
            end: x,
            t_max,
        })
    }

    /// φ(t, x).
    pub fn advance(&self, x: &[f64], t: f64) -> Result<Vec<f64>, FlowError> {
        Ok(self.run(x, t, false)?.end)
    }

    /// Forward probe from a point: the state after a time short enough that
    /// only coordinates sitting at ε can change side.
    pub fn probe(&self, x: &[f64]) -> Result<Vec<f64>, FlowError> {
        let tile = self.tile_of(x)?;
        let ctx = &self.contexts[tile];
        let (lo, hi) = characteristic_simplices_f64(x, self.eps, TAU_SNAP);
        let gap = (0..x.len())
            .filter(|v| lo.contains(v) || !hi.contains(v))
            .map(|v| (x[v] - self.eps).abs())
            .fold(self.eps, f64::min);
        let speed = ctx
            .f(x)
            .iter()
            .fold(0.0f64, |a, b| a.max(b.abs()))
            .max(1e-12);
        let delta = (gap / (2.0 * speed)).clamp(1e-9, 1e-6);
        let path = integrate_tile(ctx, x, delta, delta, false)?;
        Ok(path.end.point)
    }
}

/// `glued_flow` with default settings.
pub fn glued_flow(
    v: &CombinatorialVectorField,
    eps: &Epsilon,
    x0: &[f64],
    t_max: f64,
    dt: f64,
) -> Result<Trajectory, FlowError> {
    Semiflow::new(v, eps)?.with_dt(dt).run(x0, t_max, true)
}

fn in_open_cell(x: &[f64], sigma: &[usize], eps: f64) -> bool {
    (0..x.len()).all(|v| {
        if sigma.contains(&v) {
            x[v] > eps
        } else {
            x[v] < eps
        }
    })
}

/// Checks one crossing point: the state before it lies in cc_ε(σ_max) and the
/// forward probe in cc_ε(σ_min). Returns (crossing ok, tangency seen).
fn check_crossing(
    flow: &Semiflow,
    pre: Option<&[f64]>,
    x: &[f64],
) -> Result<(bool, bool), FlowError> {
    let eps = flow.eps;
    let (lo, hi) = characteristic_simplices_f64(x, eps, TAU_SNAP);
    let before = pre.is_none_or(|p| in_open_cell(p, &hi, eps));
    let after = flow.probe(x)?;
    let tangency = hi
        .iter()
        .filter(|v| !lo.contains(v))
        .any(|&v| after[v] >= x[v] || after[v] >= eps);
    Ok((before && in_open_cell(&after, &lo, eps), tangency))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AdmissibilityConfig {
    pub samples: usize,
    pub seed: u64,
    pub t_max: f64,
    pub dt: f64,
    pub variant: FieldVariant,
}

impl Default for AdmissibilityConfig {
    fn default() -> Self {
        AdmissibilityConfig {
            samples: 200,
            seed: 42,
            t_max: 20.0,
            dt: DEFAULT_DT,
            variant: FieldVariant::Standard,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub samples: usize,
    pub events: usize,
    pub zero_duration_events: usize,
    pub boundary_starts: usize,
    pub arrow_visits: usize,
    /// Largest observed residence time in an arrow tile.
    pub max_arrow_residence: f64,
    /// Time after which a visit counts as unbounded; a numerical stand-in
    /// for the finite-residence requirement.
    pub t_budget: f64,
    pub crossing_violations: usize,
    pub tangencies: usize,
    pub residence_violations: usize,
    pub negativity_violations: usize,
    pub conservation_violations: usize,
    pub max_conservation_error: f64,
    pub errors: usize,
    pub messages: Vec<String>,
}

impl AdmissibilityReport {
    pub fn violations(&self) -> usize {
        self.crossing_violations
            + self.tangencies
            + self.residence_violations
            + self.negativity_violations
            + self.conservation_violations
            + self.errors
    }

    pub fn passed(&self) -> bool {
        self.violations() == 0
    }

    fn note(&mut self, msg: String) {
        if self.messages.len() < 20 {
            self.messages.push(msg);
        }
    }

    fn merge(mut self, other: AdmissibilityReport) -> Self {
        self.samples += other.samples;
        self.events += other.events;
        self.zero_duration_events += other.zero_duration_events;
        self.boundary_starts += other.boundary_starts;
        self.arrow_visits += other.arrow_visits;
        self.max_arrow_residence = self.max_arrow_residence.max(other.max_arrow_residence);
        self.t_budget = self.t_budget.max(other.t_budget);
        self.crossing_violations += other.crossing_violations;
        self.tangencies += other.tangencies;
        self.residence_violations += other.residence_violations;
        self.negativity_violations += other.negativity_violations;
        self.conservation_violations += other.conservation_violations;
        self.max_conservation_error = self
            .max_conservation_error
            .max(other.max_conservation_error);
        self.errors += other.errors;
        for m in other.messages {
            self.note(m);
        }
        self
    }
}

/// Random starting points: a uniformly chosen cell of the ε-partition, then a
/// random point of that cell.
pub fn sample_points(p: &CellPartition, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let eps = p.eps().to_f64();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| p.cell(rng.gen_range(0..p.len())).sample(eps, &mut rng))
        .collect()
}

fn audit_trajectory(flow: &Semiflow, x0: &[f64], t_max: f64) -> AdmissibilityReport {
    let mut r = AdmissibilityReport {
        samples: 1,
        t_budget: flow.t_budget,
        ..Default::default()
    };
    let traj = match flow.run(x0, t_max, true) {
        Ok(t) => t,
        Err(e) => {
            r.errors += 1;
            r.note(format!("start {x0:?}: {e}"));
            return r;
        }
    };
    let eps = flow.eps;
    let (lo, hi) = characteristic_simplices_f64(x0, eps, TAU_SNAP);
    let audit = |r: &mut AdmissibilityReport, pre: Option<&[f64]>, x: &[f64], what: String| {
        match check_crossing(flow, pre, x) {
            Ok((ok, tangent)) => {
                if !ok {
                    r.crossing_violations += 1;
                    r.note(format!("{what}: wrong cells around {x:?}"));
                }
                if tangent {
                    r.tangencies += 1;
                    r.note(format!("{what}: tangency at {x:?}"));
                }
            }
            Err(e) => {
                r.errors += 1;
                r.note(format!("{what}: {e}"));
            }
        }
    };
    if lo != hi && flow.tiles_containing(x0) >= 2 {
        r.boundary_starts += 1;
        audit(&mut r, None, x0, "boundary start".into());
    }
    for ev in &traj.events {
        r.events += 1;
        if ev.pre.is_none() {
            r.zero_duration_events += 1;
        }
        audit(
            &mut r,
            ev.pre.as_deref(),
            &ev.point,
            format!("crossing at t = {}", ev.t),
        );
    }
    for s in &traj.samples {
        let err = (s.point.iter().sum::<f64>() - 1.0).abs();
        r.max_conservation_error = r.max_conservation_error.max(err);
        if err > 1e-8 {
            r.conservation_violations += 1;
        }
        if s.point.iter().any(|&c| c < -1e-10) {
            r.negativity_violations += 1;
            r.note(format!("negative coordinate at t = {}", s.t));
        }
    }
    let cells = flow.field.cells();
    for visit in &traj.visits {
        if cells[visit.tile].is_critical() {
            continue;
        }
        r.arrow_visits += 1;
        let residence = match visit.exit {
            Some(exit) => Some(exit - visit.enter),
            None => {
                let elapsed = traj.t_max - visit.enter;
                let rest = integrate_tile(
                    flow.context(visit.tile),
                    &traj.end,
                    (flow.t_budget - elapsed).max(0.0),
                    flow.dt,
                    false,
                );
                match rest {
                    Ok(TilePath {
                        exit: TileExit::Exited { time, .. },
                        ..
                    }) => Some(elapsed + time),
                    Ok(_) => None,
                    Err(e) => {
                        r.errors += 1;
                        r.note(format!("arrow tile {}: {e}", visit.tile));
                        continue;
                    }
                }
            }
        };
        match residence {
            Some(time) => r.max_arrow_residence = r.max_arrow_residence.max(time),
            None => {
                r.residence_violations += 1;
                r.note(format!(
                    "arrow tile {} entered at t = {} never exited",
                    visit.tile, visit.enter
                ));
            }
        }
    }
    r
}

/// Strong admissibility checks over seeded random trajectories.
pub fn admissibility_suite(
    v: &CombinatorialVectorField,
    eps: &Epsilon,
    cfg: &AdmissibilityConfig,
) -> Result<AdmissibilityReport, FlowError> {
    let flow = Semiflow::new(v, eps)?
        .with_dt(cfg.dt)
        .with_variant(cfg.variant);
    let p = CellPartition::new(v.complex(), eps);
    let starts = sample_points(&p, cfg.samples, cfg.seed);
    let report = starts
        .par_iter()
        .map(|x0| audit_trajectory(&flow, x0, cfg.t_max))
        .collect::<Vec<_>>()
        .into_iter()
        .fold(
            AdmissibilityReport {
                t_budget: flow.t_budget,
                ..Default::default()
            },
            AdmissibilityReport::merge,
        );
    Ok(report)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct MorseFlowReport {
    pub samples: usize,
    /// Trajectories whose final tile belongs to no Morse set.
    pub unsettled: usize,
    pub order_violations: usize,
    /// Observed (from, to) pairs of Morse nodes.
    pub observed: BTreeSet<(usize, usize)>,
    /// Final Morse node of each trajectory, counted.
    pub settled: BTreeMap<usize, usize>,
    pub errors: usize,
    pub messages: Vec<String>,
}

impl MorseFlowReport {
    pub fn passed(&self) -> bool {
        self.unsettled == 0 && self.order_violations == 0 && self.errors == 0
    }
}

/// Runs long trajectories and compares the Morse sets they pass through with
/// the order of the Morse graph.
pub fn morse_flow_check(
    v: &CombinatorialVectorField,
    eps: &Epsilon,
    graph: &MorseGraph,
    samples: usize,
    seed: u64,
    t_max: f64,
) -> Result<MorseFlowReport, FlowError> {
    let flow = Semiflow::new(v, eps)?;
    let p = CellPartition::new(v.complex(), eps);
    let node_of_tile: Vec<Option<usize>> =
        v.cells().iter().map(|c| graph.node_of(c.minus())).collect();
    let starts = sample_points(&p, samples, seed);
    let runs: Vec<Result<Trajectory, FlowError>> = starts
        .par_iter()
        .map(|x0| flow.run(x0, t_max, false))
        .collect();
    let mut r = MorseFlowReport {
        samples,
        ..Default::default()
    };
    for (x0, run) in starts.iter().zip(runs) {
        let traj = match run {
            Ok(t) => t,
            Err(e) => {
                r.errors += 1;
                r.messages.push(format!("start {x0:?}: {e}"));
                continue;
            }
        };
        let mut seq: Vec<usize> = traj
            .visits
            .iter()
            .filter_map(|vi| node_of_tile[vi.tile])
            .collect();
        seq.dedup();
        for w in seq.windows(2) {
            r.observed.insert((w[0], w[1]));
            if !graph.is_above(w[0], w[1]) {
                r.order_violations += 1;
                r.messages.push(format!(
                    "start {x0:?}: node {} followed by node {}",
                    w[0], w[1]
                ));
            }
        }
        match node_of_tile[traj.end_tile()] {
            Some(n) => *r.settled.entry(n).or_default() += 1,
            None => {
                r.unsettled += 1;
                r.messages
                    .push(format!("start {x0:?}: ends in tile {}", traj.end_tile()));
            }
        }
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::running_example;
    use crate::field::psi;

    const EPS: f64 = 1.0 / 48.0;

    fn setup() -> CombinatorialVectorField {
        running_example()
    }

    fn tile(v: &CombinatorialVectorField, name: &str) -> usize {
        let x = v.complex();
        v.cell_index(x.id_of(&x.parse_simplex(name).unwrap()).unwrap())
    }

    fn point(pairs: &[(usize, f64)]) -> Vec<f64> {
        let mut x = vec![0.0; 6];
        for &(v, c) in pairs {
            x[v] = c;
        }
        x
    }

    #[test]
    fn barycenter_of_critical_triangle_is_at_rest() {
        let v = setup();
        let flow = Semiflow::new(&v, &Epsilon::default_for(v.complex())).unwrap();
        let x0 = point(&[(0, 1.0 / 3.0), (1, 1.0 / 3.0), (3, 1.0 / 3.0)]);
        let path =
            integrate_tile(flow.context(tile(&v, "ABD")), &x0, 10.0, DEFAULT_DT, true).unwrap();
        assert_eq!(path.exit, TileExit::Stayed);
        for (_, x) in &path.samples {
            for (a, b) in x.iter().zip(&x0) {
                assert!((a - b).abs() < 1e-10);
            }
        }
        assert_eq!(
            flow.exit_time(tile(&v, "ABD"), &x0).unwrap(),
            ExitTime::Unbounded
        );
    }

    #[test]
    fn arrow_tile_is_left() {
        let v = setup();
        let flow = Semiflow::new(&v, &Epsilon::default_for(v.complex())).unwrap();
        let x0 = point(&[(0, 0.6), (3, 0.39), (1, 0.01)]);
        let t = flow
            .exit_time(tile(&v, "A"), &x0)
            .unwrap()
            .finite()
            .unwrap();
        assert!(t > 0.0);
        let t2 = flow
            .exit_time(
                tile(&v, "A"),
                &point(&[(0, 0.6 + 1e-6), (3, 0.39 - 1e-6), (1, 0.01)]),
            )
            .unwrap()
            .finite()
            .unwrap();
        assert!((t - t2).abs() < 1e-4, "{t} {t2}");
    }

    #[test]
    fn exit_time_zero_on_the_exit_face() {
        let v = setup();
        let flow = Semiflow::new(&v, &Epsilon::default_for(v.complex())).unwrap();
        let x0 = point(&[(0, EPS), (3, 1.0 - EPS)]);
        assert_eq!(
            flow.exit_time(tile(&v, "A"), &x0).unwrap(),
            ExitTime::Finite(0.0)
        );
    }

    #[test]
    fn decoupled_coordinate_follows_closed_form() {
        let v = setup();
        let flow = Semiflow::new(&v, &Epsilon::default_for(v.complex())).unwrap();
        let x0 = point(&[(5, 1.0 - EPS), (3, EPS)]);
        let path = integrate_tile(flow.context(tile(&v, "F")), &x0, 3.0, DEFAULT_DT, true).unwrap();
        assert_eq!(path.exit, TileExit::Stayed);
        let mut reached = false;
        for (t, x) in &path.samples {
            assert!((x[3] - psi(*t, EPS, EPS).unwrap()).abs() <= 1e-12);
            if *t >= 1.5 {
                assert_eq!(x[3], 0.0);
                reached = true;
            }
        }
        assert!(reached);
    }

    #[test]
    fn rejects_points_outside_the_tile() {
        let v = setup();
        let flow = Semiflow::new(&v, &Epsilon::default_for(v.complex())).unwrap();
        let x0 = point(&[(5, 1.0)]);
        assert!(matches!(
            integrate_tile(flow.context(tile(&v, "A")), &x0, 1.0, DEFAULT_DT, false),
            Err(FlowError::NotInTile(_))
        ));
        assert!(flow.run(&point(&[(0, 0.5), (2, 0.5)]), 1.0, false).is_err());
        assert!(flow.run(&point(&[(0, 0.5), (1, 0.4)]), 1.0, false).is_err());
    }

    #[test]
    fn near_e_ends_at_f() {
        let v = setup();
        let eps = Epsilon::default_for(v.complex());
        let x0 = point(&[(4, 0.95), (3, 0.05)]);
        let traj = glued_flow(&v, &eps, &x0, 30.0, DEFAULT_DT).unwrap();
        assert_eq!(traj.end_tile(), tile(&v, "F"));
        assert!((traj.end[5] - 1.0).abs() < 1e-6, "{:?}", traj.end);
        for s in &traj.samples {
            assert!((s.point.iter().sum::<f64>() - 1.0).abs() < 1e-8);
            assert!(s.point.iter().all(|&c| c >= -1e-10));
        }
        for e in &traj.events {
            let x = v.complex();
            let next = v.cells()[e.to];
            assert!(x.simplex(e.sigma_min).is_face_of(x.simplex(next.plus())));
            assert!(x.simplex(next.minus()).is_face_of(x.simplex(e.sigma_min)));
        }
    }

    #[test]
    fn rest_point_gives_constant_trajectory() {
        let v = setup();
        let eps = Epsilon::default_for(v.complex());
        let x0 = point(&[(5, 1.0)]);
        let traj = glued_flow(&v, &eps, &x0, 5.0, DEFAULT_DT).unwrap();
        assert!(traj.events.is_empty());
        assert!(traj.samples.iter().all(|s| s.point == x0));
    }

    #[test]
    fn semigroup_law_on_a_few_points() {
        let v = setup();
        let eps = Epsilon::default_for(v.complex());
        let flow = Semiflow::new(&v, &eps).unwrap();
        let p = CellPartition::new(v.complex(), &eps);
        for x in sample_points(&p, 5, 3) {
            let a = flow.advance(&flow.advance(&x, 1.3).unwrap(), 2.1).unwrap();
            let b = flow.advance(&x, 3.4).unwrap();
            let gap = a
                .iter()
                .zip(&b)
                .map(|(p, q)| (p - q).abs())
                .fold(0.0, f64::max);
            assert!(gap < 1e-6, "{x:?}: {gap}");
        }
    }

    #[test]
    fn small_admissibility_run() {
        let v = setup();
        let eps = Epsilon::default_for(v.complex());
        let cfg = AdmissibilityConfig {
            samples: 8,
            t_max: 10.0,
            ..Default::default()
        };
        let r = admissibility_suite(&v, &eps, &cfg).unwrap();
        assert!(r.passed(), "{r:?}");
        let bad = admissibility_suite(
            &v,
            &eps,
            &AdmissibilityConfig {
                variant: FieldVariant::SignFlippedH,
                ..cfg
            },
        )
        .unwrap();
        assert!(!bad.passed());
    }
}
