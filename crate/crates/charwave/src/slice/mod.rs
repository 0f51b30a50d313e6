//! Physical slices: level curves `t(X, Y) = tau` of a chart, the solution
//! reconstructed on them, and the Jacobian of `(X, Y) -> (x, t)`.

mod singular;

pub use singular::{detect_singularities, Angle, PolyPoint, Polyline, SingularPoint, SingularityKind, SingularityReport};

use serde::Serialize;

use crate::chart::{CharChart, Node};
use crate::quad::{interp, pairwise_sum};
use crate::{Error, Result};

/// Position of a curve point on a grid edge: `(1 - s) * f[a] + s * f[b]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EdgeRef {
    pub a: (usize, usize),
    pub b: (usize, usize),
    pub s: f64,
}

impl EdgeRef {
    #[inline]
    pub fn sample(&self, chart: &CharChart, f: &[f64]) -> f64 {
        let g = &chart.grid;
        let fa = f[g.idx(self.a.0, self.a.1)];
        if self.s == 0.0 {
            return fa;
        }
        let fb = f[g.idx(self.b.0, self.b.1)];
        if self.s == 1.0 {
            return fb;
        }
        (1.0 - self.s) * fa + self.s * fb
    }

    /// Same, with a per-node function instead of a stored field.
    pub fn sample_with<F: Fn(usize, usize) -> f64>(&self, f: F) -> f64 {
        let fa = f(self.a.0, self.a.1);
        if self.s == 0.0 {
            return fa;
        }
        let fb = f(self.b.0, self.b.1);
        if self.s == 1.0 {
            return fb;
        }
        (1.0 - self.s) * fa + self.s * fb
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    #[serde(rename = "X")]
    pub big_x: f64,
    #[serde(rename = "Y")]
    pub big_y: f64,
    pub edge: EdgeRef,
    pub node: Node,
}

/// The ordered level set `t = tau`; `X` increases and `Y` decreases along it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelCurve {
    pub tau: f64,
    pub points: Vec<CurvePoint>,
}

impl LevelCurve {
    pub fn len(&self) -> usize {
        self.points.len()
    }
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Segment increments `dX >= 0`.
    pub fn dx_label(&self) -> Vec<f64> {
        self.points.windows(2).map(|w| w[1].big_x - w[0].big_x).collect()
    }

    /// Segment increments `|dY| = -dY >= 0`.
    pub fn dy_label(&self) -> Vec<f64> {
        self.points.windows(2).map(|w| w[0].big_y - w[1].big_y).collect()
    }

    /// A grid field sampled at the curve points.
    pub fn sample(&self, chart: &CharChart, f: &[f64]) -> Vec<f64> {
        self.points.iter().map(|p| p.edge.sample(chart, f)).collect()
    }

    pub fn xs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.node.x).collect()
    }

    /// Trapezoid line integral `int f dX + g |dY|` of per-point densities.
    pub fn integrate(&self, f: &[f64], g: &[f64]) -> f64 {
        let dx = self.dx_label();
        let dy = self.dy_label();
        let terms: Vec<f64> = (0..dx.len())
            .map(|k| 0.5 * (f[k] + f[k + 1]) * dx[k] + 0.5 * (g[k] + g[k + 1]) * dy[k])
            .collect();
        pairwise_sum(&terms)
    }
}

/// Extract `t(X, Y) = tau` by edge crossings with linear interpolation.
pub fn extract_level_curve(chart: &CharChart, tau: f64) -> Result<LevelCurve> {
    let g = chart.grid;
    let err = |reason: &str| Error::Curve { tau, reason: reason.to_string() };
    if !tau.is_finite() {
        return Err(err("time is not finite"));
    }
    let t_at = |i: usize, j: usize| chart.t[g.idx(i, j)];

    // lowest solved node per column, and first node with t >= tau
    let mut jmin = vec![None; g.nx];
    let mut jstar: Vec<Option<usize>> = vec![None; g.nx];
    for i in 0..g.nx {
        let Some(lo) = (0..g.ny).find(|&j| !t_at(i, j).is_nan()) else { continue };
        jmin[i] = Some(lo);
        let hi = (lo..g.ny).take_while(|&j| !t_at(i, j).is_nan()).last().unwrap_or(lo);
        if t_at(i, hi) < tau {
            continue;
        }
        // t is nondecreasing in j on the solved run
        let k = (lo..=hi).collect::<Vec<_>>().partition_point(|&j| t_at(i, j) < tau);
        jstar[i] = Some(lo + k);
    }
    let Some(first) = jstar.iter().position(Option::is_some) else {
        return Err(err("above the largest solved time"));
    };
    if jstar[first..].iter().any(Option::is_none) {
        return Err(err("solved region is not monotone in time"));
    }

    let mut pts: Vec<CurvePoint> = Vec::new();
    let mut push = |a: (usize, usize), b: (usize, usize)| {
        let (ta, tb) = (t_at(a.0, a.1), t_at(b.0, b.1));
        let s = if a == b || tb == ta { 1.0 } else { ((tau - ta) / (tb - ta)).clamp(0.0, 1.0) };
        let (s, a, b) = if s == 1.0 { (0.0, b, b) } else { (s, a, b) };
        let edge = EdgeRef { a, b, s };
        let node = Node {
            u: edge.sample(chart, &chart.u),
            a: edge.sample(chart, &chart.alpha),
            b: edge.sample(chart, &chart.beta),
            p: edge.sample(chart, &chart.p),
            q: edge.sample(chart, &chart.q),
            x: edge.sample(chart, &chart.x),
            t: tau,
        };
        let big_x = (1.0 - s) * g.x_at(a.0) + s * g.x_at(b.0);
        let big_y = (1.0 - s) * g.y_at(a.1) + s * g.y_at(b.1);
        if let Some(last) = pts.last() {
            if (last.big_x - big_x).abs() <= 1e-12 * g.hx && (last.big_y - big_y).abs() <= 1e-12 * g.hy {
                return;
            }
        }
        pts.push(CurvePoint { big_x, big_y, edge, node });
    };

    for i in first..g.nx {
        let js = jstar[i].unwrap();
        if i > 0 {
            // rows crossed between columns i-1 and i, top to bottom
            let top = jstar[i - 1].unwrap_or(g.ny);
            for j in (js..top).rev() {
                if !t_at(i - 1, j).is_nan() {
                    push((i - 1, j), (i, j));
                } else if t_at(i, j) == tau {
                    // the curve runs through solved boundary nodes
                    push((i, j), (i, j));
                } else {
                    return Err(err("curve leaves the solved region (domain too small)"));
                }
            }
        }
        let lo = jmin[i].unwrap();
        if js > lo {
            push((i, js - 1), (i, js));
        } else if t_at(i, js) == tau {
            push((i, js), (i, js));
        } else {
            return Err(err("curve leaves the solved region through its lower edge"));
        }
    }
    Ok(LevelCurve { tau, points: pts })
}

/// The solution on a level curve, per curve point and as measures.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhysicalSlice {
    pub tau: f64,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub ut: Vec<f64>,
    pub ux: Vec<f64>,
    /// `tan(alpha/2)`, clipped at `1/h` in absolute value.
    pub r: Vec<f64>,
    /// `tan(beta/2)`, clipped likewise.
    pub s: Vec<f64>,
    /// `(R^2 + S^2) / 2` from the clipped values (display only).
    pub e: Vec<f64>,
    /// Total energy, from the bounded characteristic densities.
    pub energy: f64,
    /// Cumulative `int_{-inf}^x R^2/2` (backward waves) at the curve points.
    pub mu_minus: Vec<f64>,
    /// Cumulative `int_{-inf}^x S^2/2` (forward waves) at the curve points.
    pub mu_plus: Vec<f64>,
    /// Clipping level used for `R, S`.
    pub cap: f64,
}

pub const SLICE_COLUMNS: [&str; 7] = ["x", "u", "ut", "ux", "R", "S", "e"];

/// `tan(angle / 2)` clipped to `[-cap, cap]`.
#[inline]
pub fn half_tan(angle: f64, cap: f64) -> f64 {
    let (s, c) = (0.5 * angle).sin_cos();
    if c.abs() * cap <= s.abs() {
        cap.copysign(s * c)
    } else {
        s / c
    }
}

pub fn reconstruct_slice(chart: &CharChart, curve: &LevelCurve) -> Result<PhysicalSlice> {
    let h = chart.grid.h();
    let cap = 1.0 / h;
    let n = curve.len();
    let mut sl = PhysicalSlice {
        tau: curve.tau,
        x: Vec::with_capacity(n),
        u: Vec::with_capacity(n),
        ut: Vec::with_capacity(n),
        ux: Vec::with_capacity(n),
        r: Vec::with_capacity(n),
        s: Vec::with_capacity(n),
        e: Vec::with_capacity(n),
        energy: 0.0,
        mu_minus: Vec::with_capacity(n),
        mu_plus: Vec::with_capacity(n),
        cap,
    };
    let tol = 1e-9 * h;
    for (k, pt) in curve.points.iter().enumerate() {
        let nd = pt.node;
        if k > 0 && nd.x < sl.x[k - 1] - tol {
            return Err(Error::Curve { tau: curve.tau, reason: format!("x decreases at point {k}") });
        }
        let c = chart.speed.c(nd.u);
        let r = half_tan(nd.a, cap);
        let s = half_tan(nd.b, cap);
        sl.x.push(nd.x);
        sl.u.push(nd.u);
        sl.r.push(r);
        sl.s.push(s);
        sl.ut.push(0.5 * (r + s));
        sl.ux.push((r - s) / (2.0 * c));
        sl.e.push(0.5 * (r * r + s * s));
    }
    let (dm, dp) = energy_densities(curve);
    let dx = curve.dx_label();
    let dy = curve.dy_label();
    let (mut am, mut ap) = (0.0, 0.0);
    sl.mu_minus.push(0.0);
    sl.mu_plus.push(0.0);
    for k in 0..dx.len() {
        am += 0.25 * (dm[k] + dm[k + 1]) * dx[k];
        ap += 0.25 * (dp[k] + dp[k + 1]) * dy[k];
        sl.mu_minus.push(am);
        sl.mu_plus.push(ap);
    }
    sl.energy = curve_energy(chart, curve);
    Ok(sl)
}

/// Bounded densities `p sin^2(alpha/2)` (w.r.t. `dX`, equals `R^2 dx`) and
/// `q sin^2(beta/2)` (w.r.t. `|dY|`, equals `S^2 dx`).
pub fn energy_densities(curve: &LevelCurve) -> (Vec<f64>, Vec<f64>) {
    curve
        .points
        .iter()
        .map(|pt| {
            let sa = (0.5 * pt.node.a).sin();
            let sb = (0.5 * pt.node.b).sin();
            (pt.node.p * sa * sa, pt.node.q * sb * sb)
        })
        .unzip()
}

/// Energy on `t = tau` by characteristic quadrature.
pub fn energy_at(chart: &CharChart, tau: f64) -> Result<f64> {
    let curve = extract_level_curve(chart, tau)?;
    Ok(curve_energy(chart, &curve))
}

/// Total energy carried by a level curve.  The energy 1-form
/// `p sin^2(alpha/2) dX - q sin^2(beta/2) dY` is closed, so between
/// consecutive curve points it is integrated along grid lines, where its
/// densities are known at nodes, instead of across cells.
pub fn curve_energy(chart: &CharChart, curve: &LevelCurve) -> f64 {
    let g = chart.grid;
    let dens = |i: usize, j: usize| {
        let k = g.idx(i, j);
        let sa = (0.5 * chart.alpha[k]).sin();
        let sb = (0.5 * chart.beta[k]).sin();
        (chart.p[k] * sa * sa, chart.q[k] * sb * sb)
    };
    0.5 * closed_form_integral(chart, curve, &dens)
}

/// Integral of the closed form `f dX - g dY` along `curve`, with `(f, g)`
/// given at nodes, following grid lines between consecutive points.
pub fn closed_form_integral(chart: &CharChart, curve: &LevelCurve, dens: &dyn Fn(usize, usize) -> (f64, f64)) -> f64 {
    let g = chart.grid;
    // integral from node e.a to the point at fraction s along e.a -> e.b
    let partial = |e: &EdgeRef| -> f64 {
        if e.a == e.b || e.s == 0.0 {
            return 0.0;
        }
        let (fa, ga) = dens(e.a.0, e.a.1);
        let (fb, gb) = dens(e.b.0, e.b.1);
        if e.a.1 == e.b.1 {
            let d = (g.x_at(e.b.0) - g.x_at(e.a.0)) * e.s;
            d * (fa + 0.5 * e.s * (fb - fa))
        } else {
            let d = (g.y_at(e.b.1) - g.y_at(e.a.1)) * e.s;
            -d * (ga + 0.5 * e.s * (gb - ga))
        }
    };
    let full = |a: (usize, usize), b: (usize, usize)| partial(&EdgeRef { a, b, s: 1.0 });
    let route = |a: (usize, usize), b: (usize, usize)| -> f64 {
        let step = |from: usize, to: usize| if to > from { from + 1 } else { from - 1 };
        let walk = |vertical_first: bool| -> Option<f64> {
            let mut cur = a;
            let mut acc = 0.0;
            for phase in 0..2 {
                let vertical = (phase == 0) == vertical_first;
                loop {
                    let next = if vertical {
                        if cur.1 == b.1 { break; }
                        (cur.0, step(cur.1, b.1))
                    } else {
                        if cur.0 == b.0 { break; }
                        (step(cur.0, b.0), cur.1)
                    };
                    if !chart.is_valid(next.0, next.1) {
                        return None;
                    }
                    acc += full(cur, next);
                    cur = next;
                }
            }
            Some(acc)
        };
        walk(true).or_else(|| walk(false)).unwrap_or(f64::NAN)
    };
    let mut total = 0.0;
    for w in curve.points.windows(2) {
        let (ea, eb) = (&w[0].edge, &w[1].edge);
        total += -partial(ea) + route(ea.a, eb.a) + partial(eb);
    }
    total
}

impl PhysicalSlice {
    /// Resample all pointwise columns onto `xs` (monotone linear
    /// interpolation; points closer than `h^2/10` in `x` are collapsed).
    pub fn resample(&self, xs: &[f64]) -> Vec<[f64; 7]> {
        let tol = 0.1 / (self.cap * self.cap);
        let mut keep: Vec<usize> = Vec::with_capacity(self.x.len());
        for k in 0..self.x.len() {
            match keep.last() {
                Some(&l) if self.x[k] - self.x[l] <= tol => {}
                _ => keep.push(k),
            }
        }
        let col = |v: &[f64]| keep.iter().map(|&k| v[k]).collect::<Vec<f64>>();
        let x = col(&self.x);
        let cols = [col(&self.u), col(&self.ut), col(&self.ux), col(&self.r), col(&self.s), col(&self.e)];
        xs.iter()
            .map(|&xv| {
                let mut row = [xv, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
                for (c, v) in cols.iter().enumerate() {
                    row[c + 1] = interp(&x, v, xv);
                }
                row
            })
            .collect()
    }

    /// `u` at arbitrary positions.
    pub fn u_at(&self, xs: &[f64]) -> Vec<f64> {
        self.resample(xs).into_iter().map(|r| r[1]).collect()
    }

    pub fn write_csv<W: std::io::Write>(&self, xs: Option<&[f64]>, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(SLICE_COLUMNS)?;
        let rows: Vec<[f64; 7]> = match xs {
            Some(xs) => self.resample(xs),
            None => (0..self.x.len())
                .map(|k| [self.x[k], self.u[k], self.ut[k], self.ux[k], self.r[k], self.s[k], self.e[k]])
                .collect(),
        };
        for r in rows {
            out.write_record(r.iter().map(|v| v.to_string()))?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Partial derivatives of `(x, t)` and `det = x_X t_Y - x_Y t_X`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Jacobian {
    pub x_x: f64,
    pub x_y: f64,
    pub t_x: f64,
    pub t_y: f64,
    /// `(1 + cos alpha)(1 + cos beta) p q / 8c`.
    pub det: f64,
}

pub fn jacobian(chart: &CharChart, i: usize, j: usize) -> Jacobian {
    jacobian_of(&chart.speed, &chart.node(i, j))
}

pub fn jacobian_of(ws: &crate::wavespeed::WaveSpeed, n: &Node) -> Jacobian {
    let c = ws.c(n.u);
    let (ca, cb) = (n.a.cos(), n.b.cos());
    Jacobian {
        x_x: 0.25 * (1.0 + ca) * n.p,
        x_y: -0.25 * (1.0 + cb) * n.q,
        t_x: 0.25 * (1.0 + ca) * n.p / c,
        t_y: 0.25 * (1.0 + cb) * n.q / c,
        det: (1.0 + ca) * (1.0 + cb) * n.p * n.q / (8.0 * c),
    }
}
