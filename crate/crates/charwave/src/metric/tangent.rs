//! Tangent vectors by `theta`-differencing at fixed labels, their samples on
//! a level curve, and the gauge freedom of relabeling characteristics.

use serde::{Deserialize, Serialize};

use super::path::PathOfData;
use crate::chart::{boundary_data, solve_chart, BoundaryTrace, CharChart, ChartDomain, Grid, Node, Rates, SolveOptions};
use crate::slice::{EdgeRef, LevelCurve};
use crate::wavespeed::WaveSpeed;
use crate::{Error, Result};

/// `theta`-derivatives `(T, X, U, A, B, P, Q)` of `(t, x, u, alpha, beta, p, q)`
/// on a chart grid, stored in a [`Node`] layout per grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentField {
    pub theta: f64,
    pub eps: f64,
    pub grid: Grid,
    pub fields: [Vec<f64>; 7],
}

fn pack(n: &Node) -> [f64; 7] {
    [n.u, n.a, n.b, n.p, n.q, n.x, n.t]
}

fn unpack(v: [f64; 7]) -> Node {
    Node { u: v[0], a: v[1], b: v[2], p: v[3], q: v[4], x: v[5], t: v[6] }
}

fn chart_fields(c: &CharChart) -> [&Vec<f64>; 7] {
    [&c.u, &c.alpha, &c.beta, &c.p, &c.q, &c.x, &c.t]
}

impl TangentField {
    /// Combine charts with weights: `sum_k w_k chart_k / eps`.
    fn combine(theta: f64, eps: f64, charts: &[(&CharChart, f64)]) -> Result<Self> {
        let grid = charts[0].0.grid;
        if charts.iter().any(|(c, _)| c.grid != grid) {
            return Err(Error::Invalid("tangent charts on different grids".into()));
        }
        let fields = std::array::from_fn(|f| {
            (0..grid.len())
                .map(|k| charts.iter().map(|(c, w)| w * chart_fields(c)[f][k]).sum::<f64>() / eps)
                .collect()
        });
        Ok(TangentField { theta, eps, grid, fields })
    }

    pub fn at(&self, i: usize, j: usize) -> Node {
        let k = self.grid.idx(i, j);
        unpack(std::array::from_fn(|f| self.fields[f][k]))
    }

    pub fn sample(&self, e: &EdgeRef) -> Node {
        let a = pack(&self.at(e.a.0, e.a.1));
        if e.s == 0.0 {
            return unpack(a);
        }
        let b = pack(&self.at(e.b.0, e.b.1));
        unpack(std::array::from_fn(|f| (1.0 - e.s) * a[f] + e.s * b[f]))
    }
}

/// Solve the chart of the path at `theta` on `domain`.
fn chart_at(path: &PathOfData, theta: f64, ws: &WaveSpeed, domain: &ChartDomain, opts: &SolveOptions) -> Result<CharChart> {
    let datum = path.datum(theta, ws, domain).map_err(|e| Error::at_theta(theta, e))?;
    solve_chart(&boundary_data(&datum, ws), ws, opts).map_err(|e| Error::at_theta(theta, e))
}

/// Difference stencil in `theta` on `[0, 1]`: central where possible,
/// second-order one-sided at the ends.
pub(super) fn stencil(theta: f64, eps: f64) -> Vec<(f64, f64)> {
    if theta - eps >= -1e-15 && theta + eps <= 1.0 + 1e-15 {
        vec![(theta - eps, -0.5), (theta + eps, 0.5)]
    } else if theta - eps < 0.0 {
        vec![(theta, -1.5), (theta + eps, 2.0), (theta + 2.0 * eps, -0.5)]
    } else {
        vec![(theta, 1.5), (theta - eps, -2.0), (theta - 2.0 * eps, 0.5)]
    }
}

/// Base chart at `theta` and the tangent field of the path there, each chart
/// with the canonical labeling (so that the initial shifts vanish).
pub fn tangent_by_theta(
    path: &PathOfData,
    theta: f64,
    eps: f64,
    ws: &WaveSpeed,
    domain: &ChartDomain,
    opts: &SolveOptions,
) -> Result<(CharChart, TangentField)> {
    if !(eps > 0.0) || !(0.0..=1.0).contains(&theta) {
        return Err(Error::Invalid(format!("need eps > 0 and theta in [0, 1] (got {eps}, {theta})")));
    }
    let base = chart_at(path, theta, ws, domain, opts)?;
    let mut tf: Option<TangentField> = None;
    // accumulate one chart at a time to bound memory
    for (th, w) in stencil(theta, eps) {
        let part = if th == theta {
            TangentField::combine(theta, eps, &[(&base, w)])?
        } else {
            let c = chart_at(path, th, ws, domain, opts)?;
            TangentField::combine(theta, eps, &[(&c, w)])?
        };
        tf = Some(match tf {
            None => part,
            Some(mut acc) => {
                for f in 0..7 {
                    for (a, b) in acc.fields[f].iter_mut().zip(&part.fields[f]) {
                        *a += b;
                    }
                }
                acc
            }
        });
    }
    Ok((base, tf.expect("stencil is nonempty")))
}

/// Velocity of a smooth relabeling `theta -> (phi^theta, psi^theta)` expressed in
/// the current labels: `eta_X(X) = slope_x X + offset_x`, likewise for `Y`.
/// Adding it to a tangent is a pure change of labeling; the physical
/// perturbation is unchanged but the shifts `w, z` are not.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Gauge {
    pub slope_x: f64,
    pub offset_x: f64,
    pub slope_y: f64,
    pub offset_y: f64,
}

impl Gauge {
    pub fn none() -> Self {
        Gauge::default()
    }

    /// Labels moving with a rigid translation by `speed` in `x`.
    pub fn translation(speed: f64) -> Self {
        Gauge { offset_x: speed, offset_y: -speed, ..Default::default() }
    }

    pub fn eta_x(&self, x: f64) -> (f64, f64) {
        (self.slope_x * x + self.offset_x, self.slope_x)
    }
    pub fn eta_y(&self, y: f64) -> (f64, f64) {
        (self.slope_y * y + self.offset_y, self.slope_y)
    }
    pub fn is_none(&self) -> bool {
        *self == Gauge::none()
    }
}

/// Base values, tangent and label gradients of the base fields along a curve.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveTangent {
    pub tau: f64,
    pub theta: f64,
    /// Clipping level for `tan(alpha/2)`, `tan(beta/2)` (the grid's `1/h`).
    pub cap: f64,
    pub big_x: Vec<f64>,
    pub big_y: Vec<f64>,
    pub base: Vec<Node>,
    pub tangent: Vec<Node>,
    pub grad_x: Vec<Node>,
    pub grad_y: Vec<Node>,
}

/// Label gradients of all seven fields; the four that the system leaves free
/// (`alpha_X, beta_Y, p_X, q_Y`) are supplied.
fn label_gradients(ws: &WaveSpeed, n: &Node, a_x: f64, b_y: f64, p_x: f64, q_y: f64) -> (Node, Node) {
    let r = Rates::at(ws, n);
    (
        Node { u: r.u_x, a: a_x, b: r.b_x, p: p_x, q: r.q_x, x: r.x_x, t: r.t_x },
        Node { u: r.u_y, a: r.a_y, b: b_y, p: r.p_y, q: q_y, x: r.x_y, t: r.t_y },
    )
}

impl CurveTangent {
    /// Sample a chart, its tangent field and gradients along a level curve.
    pub fn on_curve(chart: &CharChart, tf: &TangentField, curve: &LevelCurve) -> Result<Self> {
        if tf.grid != chart.grid {
            return Err(Error::Invalid("tangent field and chart on different grids".into()));
        }
        let ws = &chart.speed;
        let free = |i: usize, j: usize| {
            [
                chart.d_dx(&chart.alpha, i, j),
                chart.d_dy(&chart.beta, i, j),
                chart.d_dx(&chart.p, i, j),
                chart.d_dy(&chart.q, i, j),
            ]
        };
        let mut out = CurveTangent {
            tau: curve.tau,
            theta: tf.theta,
            cap: 1.0 / chart.grid.h(),
            big_x: Vec::with_capacity(curve.len()),
            big_y: Vec::with_capacity(curve.len()),
            base: Vec::with_capacity(curve.len()),
            tangent: Vec::with_capacity(curve.len()),
            grad_x: Vec::with_capacity(curve.len()),
            grad_y: Vec::with_capacity(curve.len()),
        };
        for pt in &curve.points {
            let e = &pt.edge;
            let fa = free(e.a.0, e.a.1);
            let d = if e.s == 0.0 {
                fa
            } else {
                let fb = free(e.b.0, e.b.1);
                std::array::from_fn(|k| (1.0 - e.s) * fa[k] + e.s * fb[k])
            };
            let (gx, gy) = label_gradients(ws, &pt.node, d[0], d[1], d[2], d[3]);
            out.big_x.push(pt.big_x);
            out.big_y.push(pt.big_y);
            out.base.push(pt.node);
            out.tangent.push(tf.sample(e));
            out.grad_x.push(gx);
            out.grad_y.push(gy);
        }
        Ok(out)
    }

    /// The initial line from boundary traces alone (no chart solve): base at
    /// `theta` and the traces of the difference stencil.
    pub fn on_boundary(theta: f64, eps: f64, base: &BoundaryTrace, stencil: &[(&BoundaryTrace, f64)], ws: &WaveSpeed) -> Result<Self> {
        let n = base.nodes.len();
        if n < 3 || stencil.iter().any(|(b, _)| b.domain != base.domain) {
            return Err(Error::Invalid("boundary traces on different lattices".into()));
        }
        let h = base.domain.h;
        // derivative along the line X = s, Y = -s
        let d_ds = |f: &dyn Fn(&Node) -> f64, i: usize| -> f64 {
            let v = |k: usize| f(&base.nodes[k]);
            if i == 0 {
                (-3.0 * v(0) + 4.0 * v(1) - v(2)) / (2.0 * h)
            } else if i == n - 1 {
                (3.0 * v(i) - 4.0 * v(i - 1) + v(i - 2)) / (2.0 * h)
            } else {
                (v(i + 1) - v(i - 1)) / (2.0 * h)
            }
        };
        let mut out = CurveTangent {
            tau: 0.0,
            theta,
            cap: 1.0 / h,
            big_x: Vec::with_capacity(n),
            big_y: Vec::with_capacity(n),
            base: base.nodes.clone(),
            tangent: Vec::with_capacity(n),
            grad_x: Vec::with_capacity(n),
            grad_y: Vec::with_capacity(n),
        };
        for i in 0..n {
            let nd = &base.nodes[i];
            let r = Rates::at(ws, nd);
            // F_X - F_Y = dF/ds, with one of the two known from the system
            let a_x = d_ds(&|m: &Node| m.a, i) + r.a_y;
            let b_y = r.b_x - d_ds(&|m: &Node| m.b, i);
            let p_x = d_ds(&|m: &Node| m.p, i) + r.p_y;
            let q_y = r.q_x - d_ds(&|m: &Node| m.q, i);
            let (gx, gy) = label_gradients(ws, nd, a_x, b_y, p_x, q_y);
            let x = base.domain.xa + i as f64 * h;
            out.big_x.push(x);
            out.big_y.push(-x);
            out.grad_x.push(gx);
            out.grad_y.push(gy);
            let v: [f64; 7] = std::array::from_fn(|f| stencil.iter().map(|(b, w)| w * pack(&b.nodes[i])[f]).sum::<f64>() / eps);
            out.tangent.push(unpack(v));
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.base.len()
    }
    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    pub fn nodes(&self) -> super::CurveNodes<'_> {
        super::CurveNodes { big_x: &self.big_x, big_y: &self.big_y, nodes: &self.base }
    }

    /// Tangent after adding the label velocity `g`:
    /// `F' = F + F_X eta_X + F_Y eta_Y`, and `P' += p eta_X'`, `Q' += q eta_Y'`.
    pub fn gauged(&self, g: &Gauge) -> Vec<Node> {
        if g.is_none() {
            return self.tangent.clone();
        }
        (0..self.len())
            .map(|k| {
                let (ex, dex) = g.eta_x(self.big_x[k]);
                let (ey, dey) = g.eta_y(self.big_y[k]);
                let (t, gx, gy, b) = (pack(&self.tangent[k]), pack(&self.grad_x[k]), pack(&self.grad_y[k]), &self.base[k]);
                let mut n = unpack(std::array::from_fn(|f| t[f] + gx[f] * ex + gy[f] * ey));
                n.p += b.p * dex;
                n.q += b.q * dey;
                n
            })
            .collect()
    }

    /// Norm of the (gauged) tangent.
    pub fn norm(&self, ws: &WaveSpeed, gauge: &Gauge, w: &super::NormWeights) -> super::NormBreakdown {
        super::tangent_norm(ws, &self.nodes(), &self.gauged(gauge), w)
    }
}
