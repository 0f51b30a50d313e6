//! The solution in characteristic coordinates.
//!
//! Boundary data are placed on the line `X + Y = 0` (one node per datum
//! sample, labelled by its physical position) and the semilinear system
//!
//! ```text
//! u_X = sin(a) p / 4c                 u_Y = sin(b) q / 4c
//! a_Y = c'/(8c^2) (cos b - cos a) q   b_X = c'/(8c^2) (cos a - cos b) p
//! p_Y = c'/(8c^2) (sin b - sin a) pq  q_X = c'/(8c^2) (sin a - sin b) pq
//! x_X = (1 + cos a) p / 4             x_Y = -(1 + cos b) q / 4
//! t_X = (1 + cos a) p / 4c            t_Y = (1 + cos b) q / 4c
//! ```
//!
//! is integrated node by node in increasing `X + Y`.  Each new node takes
//! `a, p` from its neighbour in `Y` and `b, q` from its neighbour in `X` by the
//! trapezoidal rule (solved by fixed-point iteration); `u, x, t` average the
//! two trapezoidal routes.  `x` and `t` are then clamped into the interval
//! allowed by the signs of their derivatives, which keeps level curves of `t`
//! monotone without changing the order of accuracy.

mod datum;
pub mod io;
mod relabel;

pub use datum::{Bump, ChartDomain, DatumSpec, InitialDatum};
pub use relabel::{relabel, Affine, Monotone};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::wavespeed::WaveSpeed;
use crate::{Error, Result};

/// Uniform node lattice `X_i = x0 + i hx`, `Y_j = y0 + j hy`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x0: f64,
    pub y0: f64,
    pub hx: f64,
    pub hy: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Grid {
    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.ny + j
    }
    #[inline]
    pub fn x_at(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.hx
    }
    #[inline]
    pub fn y_at(&self, j: usize) -> f64 {
        self.y0 + j as f64 * self.hy
    }
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    /// Coarsest spacing, used as "h" by tolerance rules.
    pub fn h(&self) -> f64 {
        self.hx.max(self.hy)
    }
}

/// Field values at one node.  `a`, `b` are the angle variables `alpha`, `beta`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub u: f64,
    pub a: f64,
    pub b: f64,
    pub p: f64,
    pub q: f64,
    pub x: f64,
    pub t: f64,
}

/// Right-hand sides of the system at a node.
#[derive(Clone, Copy, Debug)]
pub struct Rates {
    pub c: f64,
    pub c1: f64,
    pub u_x: f64,
    pub u_y: f64,
    pub a_y: f64,
    pub b_x: f64,
    pub p_y: f64,
    pub q_x: f64,
    pub x_x: f64,
    pub x_y: f64,
    pub t_x: f64,
    pub t_y: f64,
}

impl Rates {
    pub fn at(ws: &WaveSpeed, n: &Node) -> Rates {
        let (c, c1, _) = ws.eval(n.u);
        let (sa, ca) = n.a.sin_cos();
        let (sb, cb) = n.b.sin_cos();
        let k = c1 / (8.0 * c * c);
        Rates {
            c,
            c1,
            u_x: sa * n.p / (4.0 * c),
            u_y: sb * n.q / (4.0 * c),
            a_y: k * (cb - ca) * n.q,
            b_x: k * (ca - cb) * n.p,
            p_y: k * (sb - sa) * n.p * n.q,
            q_x: k * (sa - sb) * n.p * n.q,
            x_x: 0.25 * (1.0 + ca) * n.p,
            x_y: -0.25 * (1.0 + cb) * n.q,
            t_x: 0.25 * (1.0 + ca) * n.p / c,
            t_y: 0.25 * (1.0 + cb) * n.q / c,
        }
    }
}

/// Boundary trace on `X + Y = 0`: node `i` sits at `X = xa + i h = -Y`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryTrace {
    pub domain: ChartDomain,
    pub nodes: Vec<Node>,
}

/// Canonical boundary data: `u = u0`, `alpha = 2 atan R0`, `beta = 2 atan S0`,
/// `p = 1 + R0^2`, `q = 1 + S0^2`, `x` = the sample position, `t = 0`.
pub fn boundary_data(datum: &InitialDatum, ws: &WaveSpeed) -> BoundaryTrace {
    let r0 = datum.r0(ws);
    let s0 = datum.s0(ws);
    let nodes = (0..datum.len())
        .map(|i| Node {
            u: datum.u0[i],
            a: 2.0 * r0[i].atan(),
            b: 2.0 * s0[i].atan(),
            p: 1.0 + r0[i] * r0[i],
            q: 1.0 + s0[i] * s0[i],
            x: datum.x(i),
            t: 0.0,
        })
        .collect();
    BoundaryTrace {
        domain: ChartDomain { xa: datum.x0, h: datum.h, n: datum.len() - 1 },
        nodes,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Solve nodes of one anti-diagonal concurrently.  Results are identical
    /// either way: every node depends only on the previous diagonal.
    pub parallel: bool,
    /// Also fill the half `X + Y < 0` (negative times).
    pub backward: bool,
    /// Stop marching once a whole anti-diagonal lies beyond this time
    /// (and, backward, before its negative).
    pub t_stop: Option<f64>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { tol: 1e-12, max_iter: 50, parallel: true, backward: false, t_stop: None }
    }
}

/// The seven fields on the grid; `NaN` marks nodes outside the solved region.
#[derive(Clone, Debug, PartialEq)]
pub struct CharChart {
    pub grid: Grid,
    pub speed: WaveSpeed,
    pub u: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub x: Vec<f64>,
    pub t: Vec<f64>,
}

/// Identifies one of the seven chart fields.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FieldName {
    U,
    Alpha,
    Beta,
    P,
    Q,
    X,
    T,
}

impl FieldName {
    pub const ALL: [FieldName; 7] =
        [FieldName::U, FieldName::Alpha, FieldName::Beta, FieldName::P, FieldName::Q, FieldName::X, FieldName::T];
}

impl CharChart {
    pub fn empty(grid: Grid, speed: WaveSpeed) -> Self {
        let nan = vec![f64::NAN; grid.len()];
        CharChart {
            grid,
            speed,
            u: nan.clone(),
            alpha: nan.clone(),
            beta: nan.clone(),
            p: nan.clone(),
            q: nan.clone(),
            x: nan.clone(),
            t: nan,
        }
    }

    pub fn field(&self, f: FieldName) -> &[f64] {
        match f {
            FieldName::U => &self.u,
            FieldName::Alpha => &self.alpha,
            FieldName::Beta => &self.beta,
            FieldName::P => &self.p,
            FieldName::Q => &self.q,
            FieldName::X => &self.x,
            FieldName::T => &self.t,
        }
    }

    pub fn field_mut(&mut self, f: FieldName) -> &mut Vec<f64> {
        match f {
            FieldName::U => &mut self.u,
            FieldName::Alpha => &mut self.alpha,
            FieldName::Beta => &mut self.beta,
            FieldName::P => &mut self.p,
            FieldName::Q => &mut self.q,
            FieldName::X => &mut self.x,
            FieldName::T => &mut self.t,
        }
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> Node {
        let k = self.grid.idx(i, j);
        Node {
            u: self.u[k],
            a: self.alpha[k],
            b: self.beta[k],
            p: self.p[k],
            q: self.q[k],
            x: self.x[k],
            t: self.t[k],
        }
    }

    #[inline]
    pub fn set_node(&mut self, i: usize, j: usize, n: &Node) {
        let k = self.grid.idx(i, j);
        self.u[k] = n.u;
        self.alpha[k] = n.a;
        self.beta[k] = n.b;
        self.p[k] = n.p;
        self.q[k] = n.q;
        self.x[k] = n.x;
        self.t[k] = n.t;
    }

    #[inline]
    pub fn is_valid(&self, i: usize, j: usize) -> bool {
        i < self.grid.nx && j < self.grid.ny && !self.t[self.grid.idx(i, j)].is_nan()
    }

    pub fn rates(&self, i: usize, j: usize) -> Rates {
        Rates::at(&self.speed, &self.node(i, j))
    }

    /// Largest solved time.
    pub fn t_max(&self) -> f64 {
        self.t.iter().filter(|v| !v.is_nan()).fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }

    /// Partial derivative of a grid field along `X` at a node: central where
    /// both neighbours are solved, second-order one-sided otherwise.
    pub fn d_dx(&self, f: &[f64], i: usize, j: usize) -> f64 {
        let g = &self.grid;
        let val = |ii: usize| f[g.idx(ii, j)];
        let ok = |ii: isize| ii >= 0 && (ii as usize) < g.nx && !val(ii as usize).is_nan();
        let ii = i as isize;
        if ok(ii - 1) && ok(ii + 1) {
            (val(i + 1) - val(i - 1)) / (2.0 * g.hx)
        } else if ok(ii + 1) && ok(ii + 2) {
            (-3.0 * val(i) + 4.0 * val(i + 1) - val(i + 2)) / (2.0 * g.hx)
        } else if ok(ii - 1) && ok(ii - 2) {
            (3.0 * val(i) - 4.0 * val(i - 1) + val(i - 2)) / (2.0 * g.hx)
        } else {
            f64::NAN
        }
    }

    /// As [`d_dx`](Self::d_dx), along `Y`.
    pub fn d_dy(&self, f: &[f64], i: usize, j: usize) -> f64 {
        let g = &self.grid;
        let val = |jj: usize| f[g.idx(i, jj)];
        let ok = |jj: isize| jj >= 0 && (jj as usize) < g.ny && !val(jj as usize).is_nan();
        let jj = j as isize;
        if ok(jj - 1) && ok(jj + 1) {
            (val(j + 1) - val(j - 1)) / (2.0 * g.hy)
        } else if ok(jj + 1) && ok(jj + 2) {
            (-3.0 * val(j) + 4.0 * val(j + 1) - val(j + 2)) / (2.0 * g.hy)
        } else if ok(jj - 1) && ok(jj - 2) {
            (3.0 * val(j) - 4.0 * val(j - 1) + val(j - 2)) / (2.0 * g.hy)
        } else {
            f64::NAN
        }
    }
}

/// Integrate the Goursat problem from the boundary trace.
pub fn solve_chart(boundary: &BoundaryTrace, ws: &WaveSpeed, opts: &SolveOptions) -> Result<CharChart> {
    let dom = boundary.domain;
    let n = dom.n;
    if boundary.nodes.len() != n + 1 || n < 2 {
        return Err(Error::Invalid("boundary trace does not match its domain".into()));
    }
    let h = dom.h;
    let grid = Grid { x0: dom.xa, y0: -dom.xb(), hx: h, hy: h, nx: n + 1, ny: n + 1 };
    let mut chart = CharChart::empty(grid, ws.clone());
    for (i, node) in boundary.nodes.iter().enumerate() {
        chart.set_node(i, n - i, node);
    }

    let forward = (n + 1..=2 * n).map(|k| (k, 1isize));
    let backward = (0..n).rev().map(|k| (k, -1isize));
    let levels: Vec<(usize, isize)> = if opts.backward {
        forward.chain(backward).collect()
    } else {
        forward.collect()
    };

    let mut skip_dir = 0isize;
    for (k, dir) in levels {
        if dir == skip_dir {
            continue;
        }
        let (i_lo, i_hi) = (k.saturating_sub(n), k.min(n));
        let solve = |i: usize| -> Result<(usize, Node)> {
            let j = k - i;
            // neighbours one step back along Y and along X
            let (ynb, xnb) = if dir > 0 {
                (chart.node(i, j - 1), chart.node(i - 1, j))
            } else {
                (chart.node(i, j + 1), chart.node(i + 1, j))
            };
            let step = dir as f64 * h;
            solve_node(ws, &ynb, &xnb, step, opts).map(|v| (i, v)).map_err(|e| match e {
                NodeError::NoConvergence(iters) => Error::NoConvergence { i, j, iters },
                NodeError::NonPositive(what) => Error::Integration { i, j, reason: what },
            })
        };
        let new: Vec<(usize, Node)> = if opts.parallel {
            (i_lo..=i_hi).into_par_iter().map(solve).collect::<Result<_>>()?
        } else {
            (i_lo..=i_hi).map(solve).collect::<Result<_>>()?
        };
        if let Some(ts) = opts.t_stop {
            if new.iter().all(|(_, nd)| nd.t.abs() > ts) {
                skip_dir = dir;
            }
        }
        for (i, node) in new {
            chart.set_node(i, k - i, &node);
        }
    }
    Ok(chart)
}

enum NodeError {
    NoConvergence(usize),
    NonPositive(String),
}

/// New node from its neighbour `ynb` along `Y` and `xnb` along `X`; `step` is
/// the signed label increment (negative when marching backward in time).
fn solve_node(ws: &WaveSpeed, ynb: &Node, xnb: &Node, step: f64, opts: &SolveOptions) -> std::result::Result<Node, NodeError> {
    let ry = Rates::at(ws, ynb);
    let rx = Rates::at(ws, xnb);
    let hs = 0.5 * step;
    let mut cur = Node {
        u: 0.5 * (ynb.u + xnb.u),
        a: ynb.a,
        b: xnb.b,
        p: ynb.p,
        q: xnb.q,
        x: 0.0,
        t: 0.0,
    };
    let mut converged = false;
    let mut rn = Rates::at(ws, &cur);
    for _ in 0..opts.max_iter {
        let next = Node {
            u: 0.5 * ((ynb.u + hs * (ry.u_y + rn.u_y)) + (xnb.u + hs * (rx.u_x + rn.u_x))),
            a: ynb.a + hs * (ry.a_y + rn.a_y),
            b: xnb.b + hs * (rx.b_x + rn.b_x),
            p: ynb.p + hs * (ry.p_y + rn.p_y),
            q: xnb.q + hs * (rx.q_x + rn.q_x),
            x: 0.0,
            t: 0.0,
        };
        let delta = [
            (next.u - cur.u).abs() / next.u.abs().max(1.0),
            (next.a - cur.a).abs() / next.a.abs().max(1.0),
            (next.b - cur.b).abs() / next.b.abs().max(1.0),
            (next.p - cur.p).abs() / next.p.abs().max(1.0),
            (next.q - cur.q).abs() / next.q.abs().max(1.0),
        ]
        .into_iter()
        .fold(0.0, f64::max);
        cur = next;
        rn = Rates::at(ws, &cur);
        if delta <= opts.tol {
            converged = true;
            break;
        }
        if !delta.is_finite() {
            break;
        }
    }
    if !converged {
        return Err(NodeError::NoConvergence(opts.max_iter));
    }
    if !(cur.p > 0.0) || !(cur.q > 0.0) {
        return Err(NodeError::NonPositive(format!("p = {}, q = {}", cur.p, cur.q)));
    }
    let x_route_y = ynb.x + hs * (ry.x_y + rn.x_y);
    let x_route_x = xnb.x + hs * (rx.x_x + rn.x_x);
    let t_route_y = ynb.t + hs * (ry.t_y + rn.t_y);
    let t_route_x = xnb.t + hs * (rx.t_x + rn.t_x);
    let x = 0.5 * (x_route_y + x_route_x);
    let t = 0.5 * (t_route_y + t_route_x);
    // x_X >= 0, x_Y <= 0 and t_X, t_Y >= 0 hold exactly; keep them discretely.
    let (xlo, xhi) = if step > 0.0 { (xnb.x, ynb.x) } else { (ynb.x, xnb.x) };
    cur.x = if xlo <= xhi { x.clamp(xlo, xhi) } else { x };
    cur.t = if step > 0.0 { t.max(ynb.t).max(xnb.t) } else { t.min(ynb.t).min(xnb.t) };
    Ok(cur)
}

/// Largest central-difference residual of each of the ten relations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Residuals {
    pub u_x: f64,
    pub u_y: f64,
    pub alpha_y: f64,
    pub beta_x: f64,
    pub p_y: f64,
    pub q_x: f64,
    pub x_x: f64,
    pub x_y: f64,
    pub t_x: f64,
    pub t_y: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.as_array().into_iter().fold(0.0, f64::max)
    }
    pub fn as_array(&self) -> [f64; 10] {
        [
            self.u_x, self.u_y, self.alpha_y, self.beta_x, self.p_y, self.q_x, self.x_x, self.x_y, self.t_x,
            self.t_y,
        ]
    }
}

/// Residuals at interior nodes with all four neighbours solved, optionally
/// restricted to nodes with `t <= t_cap`.
pub fn residuals(chart: &CharChart) -> Residuals {
    residuals_until(chart, f64::INFINITY)
}

pub fn residuals_until(chart: &CharChart, t_cap: f64) -> Residuals {
    let g = chart.grid;
    let mut r = Residuals::default();
    for i in 1..g.nx - 1 {
        for j in 1..g.ny - 1 {
            if !(chart.is_valid(i - 1, j) && chart.is_valid(i + 1, j) && chart.is_valid(i, j - 1) && chart.is_valid(i, j + 1))
            {
                continue;
            }
            if chart.t[g.idx(i, j)] > t_cap {
                continue;
            }
            let rt = chart.rates(i, j);
            let dx = |f: &[f64]| (f[g.idx(i + 1, j)] - f[g.idx(i - 1, j)]) / (2.0 * g.hx);
            let dy = |f: &[f64]| (f[g.idx(i, j + 1)] - f[g.idx(i, j - 1)]) / (2.0 * g.hy);
            let upd = |slot: &mut f64, v: f64| *slot = slot.max(v.abs());
            upd(&mut r.u_x, dx(&chart.u) - rt.u_x);
            upd(&mut r.u_y, dy(&chart.u) - rt.u_y);
            upd(&mut r.alpha_y, dy(&chart.alpha) - rt.a_y);
            upd(&mut r.beta_x, dx(&chart.beta) - rt.b_x);
            upd(&mut r.p_y, dy(&chart.p) - rt.p_y);
            upd(&mut r.q_x, dx(&chart.q) - rt.q_x);
            upd(&mut r.x_x, dx(&chart.x) - rt.x_x);
            upd(&mut r.x_y, dy(&chart.x) - rt.x_y);
            upd(&mut r.t_x, dx(&chart.t) - rt.t_x);
            upd(&mut r.t_y, dy(&chart.t) - rt.t_y);
        }
    }
    r
}

/// Worst violations of the sign structure (`p, q > 0`, `x_X >= 0`,
/// `x_Y <= 0`, `t_X, t_Y >= 0`) over neighbouring solved nodes; all entries
/// are `<= 0` on a healthy chart.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub min_p: f64,
    pub min_q: f64,
    pub worst_x_increase_in_y: f64,
    pub worst_x_decrease_in_x: f64,
    pub worst_t_decrease: f64,
}

impl MonotonicityReport {
    pub fn healthy(&self) -> bool {
        self.min_p > 0.0
            && self.min_q > 0.0
            && self.worst_x_increase_in_y <= 0.0
            && self.worst_x_decrease_in_x <= 0.0
            && self.worst_t_decrease <= 0.0
    }
}

pub fn monotonicity(chart: &CharChart) -> MonotonicityReport {
    let g = chart.grid;
    let mut m = MonotonicityReport {
        min_p: f64::INFINITY,
        min_q: f64::INFINITY,
        worst_x_increase_in_y: f64::NEG_INFINITY,
        worst_x_decrease_in_x: f64::NEG_INFINITY,
        worst_t_decrease: f64::NEG_INFINITY,
    };
    for i in 0..g.nx {
        for j in 0..g.ny {
            if !chart.is_valid(i, j) {
                continue;
            }
            let k = g.idx(i, j);
            m.min_p = m.min_p.min(chart.p[k]);
            m.min_q = m.min_q.min(chart.q[k]);
            if chart.is_valid(i + 1, j) {
                let k1 = g.idx(i + 1, j);
                m.worst_x_decrease_in_x = m.worst_x_decrease_in_x.max(chart.x[k] - chart.x[k1]);
                m.worst_t_decrease = m.worst_t_decrease.max(chart.t[k] - chart.t[k1]);
            }
            if chart.is_valid(i, j + 1) {
                let k1 = g.idx(i, j + 1);
                m.worst_x_increase_in_y = m.worst_x_increase_in_y.max(chart.x[k1] - chart.x[k]);
                m.worst_t_decrease = m.worst_t_decrease.max(chart.t[k] - chart.t[k1]);
            }
        }
    }
    m
}

/// Convenience: sample `spec` on `domain`, build boundary data and solve.
pub fn solve_spec(spec: &DatumSpec, ws: &WaveSpeed, domain: &ChartDomain, opts: &SolveOptions) -> Result<CharChart> {
    let datum = domain.sample(spec, ws);
    solve_chart(&boundary_data(&datum, ws), ws, opts)
}
