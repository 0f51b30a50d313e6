//! The norm in physical variables: weighted `L^1` integrals in `x` of the
//! shifts, the vertical displacements and their `x`-derivatives.  It is
//! evaluated both from a chart (through the change of variables) and from
//! the linearized equations on the direct grid, which is what ties the
//! line-integral form to the physical one.

use super::tangent::{CurveTangent, Gauge, TangentField};
use super::{weights_along_curve, NormBreakdown, NormWeights};
use crate::chart::CharChart;
use crate::oracle::{direct_weights, TangentState};
use crate::quad::{gradient, trapz};
use crate::slice::{jacobian_of, LevelCurve};
use crate::wavespeed::WaveSpeed;
use crate::Result;

/// Everything the physical integrands need at one `x`.
struct Sample {
    x: f64,
    rr: f64,
    ss: f64,
    c: f64,
    c1: f64,
    w: f64,
    z: f64,
    wx: f64,
    zx: f64,
    r_tilde: f64,
    s_tilde: f64,
    v_comb: f64,
    w_minus: f64,
    w_plus: f64,
}

fn terms(samples: &[Sample], nw: &NormWeights) -> NormBreakdown {
    let xs: Vec<f64> = samples.iter().map(|s| s.x).collect();
    let mut dens: [Vec<f64>; 6] = Default::default();
    for p in samples {
        let k = p.c1 / (4.0 * p.c * p.c) * (p.w - p.z);
        let (r, s) = (p.rr, p.ss);
        let (m, q) = (p.w_minus, p.w_plus);
        let (wr, ws) = (1.0 + r * r, 1.0 + s * s);
        dens[0].push(p.w.abs() * wr * m + p.z.abs() * ws * q);
        dens[1].push(p.r_tilde.abs() * m + p.s_tilde.abs() * q);
        dens[2].push(p.v_comb.abs() * (wr * m + ws * q));
        dens[3].push((p.wx + k * s).abs() * m + (p.zx + k * r).abs() * q);
        dens[4].push((r * p.wx + k * s * r).abs() * m + (s * p.zx + k * r * s).abs() * q);
        dens[5].push(
            (2.0 * r * p.r_tilde + r * r * p.wx + k * r * r * s).abs() * m
                + (2.0 * s * p.s_tilde + s * s * p.zx + k * s * s * r).abs() * q,
        );
    }
    NormBreakdown::from_terms(std::array::from_fn(|l| trapz(&xs, &dens[l])), nw)
}

/// Physical norm along the level curve of `chart`, with `x`-derivatives of
/// the shifts taken through the chart's Jacobian.  Valid while the slice is
/// smooth.
pub fn main_form_on_curve(
    chart: &CharChart,
    tf: &TangentField,
    curve: &LevelCurve,
    gauge: &Gauge,
    nw: &NormWeights,
) -> Result<NormBreakdown> {
    let ws = &chart.speed;
    let g = chart.grid;
    let ct = CurveTangent::on_curve(chart, tf, curve)?;
    let tan = ct.gauged(gauge);

    // gauged shifts w, z on the grid and their x-derivatives at nodes
    let mut wf = vec![f64::NAN; g.len()];
    let mut zf = vec![f64::NAN; g.len()];
    for i in 0..g.nx {
        for j in 0..g.ny {
            if !chart.is_valid(i, j) {
                continue;
            }
            let n = chart.node(i, j);
            let jac = jacobian_of(ws, &n);
            let t = tf.at(i, j);
            let (ex, _) = gauge.eta_x(g.x_at(i));
            let (ey, _) = gauge.eta_y(g.y_at(j));
            let xx = t.x + jac.x_x * ex + jac.x_y * ey;
            let tt = t.t + jac.t_x * ex + jac.t_y * ey;
            let c = ws.c(n.u);
            wf[g.idx(i, j)] = xx + c * tt;
            zf[g.idx(i, j)] = xx - c * tt;
        }
    }
    let d_x = |f: &[f64], i: usize, j: usize| {
        let jac = jacobian_of(ws, &chart.node(i, j));
        (chart.d_dx(f, i, j) * jac.t_y - chart.d_dy(f, i, j) * jac.t_x) / jac.det
    };
    let along = |f: &[f64], e: &crate::slice::EdgeRef| {
        let a = d_x(f, e.a.0, e.a.1);
        if e.s == 0.0 {
            a
        } else {
            (1.0 - e.s) * a + e.s * d_x(f, e.b.0, e.b.1)
        }
    };

    let (wm, wp) = weights_along_curve(&ct.nodes());
    let samples: Vec<Sample> = curve
        .points
        .iter()
        .enumerate()
        .map(|(k, pt)| {
            let b = &ct.base[k];
            let sh = super::shifts_and_vertical(ws, b, &tan[k], f64::INFINITY);
            let (c, c1, _) = ws.eval(b.u);
            Sample {
                x: b.x,
                rr: (0.5 * b.a).tan(),
                ss: (0.5 * b.b).tan(),
                c,
                c1,
                w: sh.w,
                z: sh.z,
                wx: along(&wf, &pt.edge),
                zx: along(&zf, &pt.edge),
                r_tilde: sh.r_tilde,
                s_tilde: sh.s_tilde,
                v_comb: sh.v_comb,
                w_minus: wm[k],
                w_plus: wp[k],
            }
        })
        .collect();
    Ok(terms(&samples, nw))
}

/// Physical norm of a linearized state on the direct grid.
pub fn main_form_from_oracle(ws: &WaveSpeed, st: &TangentState, nw: &NormWeights) -> NormBreakdown {
    let b = &st.base;
    let xs = b.xs();
    let (rt, stl) = st.vertical_displacements(ws);
    let (wm, wp) = direct_weights(b);
    let wx = gradient(&xs, &st.w);
    let zx = gradient(&xs, &st.z);
    let samples: Vec<Sample> = (0..b.len())
        .map(|i| {
            let (c, c1, _) = ws.eval(b.u[i]);
            Sample {
                x: xs[i],
                rr: b.r[i],
                ss: b.s[i],
                c,
                c1,
                w: st.w[i],
                z: st.z[i],
                wx: wx[i],
                zx: zx[i],
                r_tilde: rt[i],
                s_tilde: stl[i],
                v_comb: st.v[i] + b.r[i] * st.w[i] / (2.0 * c) - b.s[i] * st.z[i] / (2.0 * c),
                w_minus: wm[i],
                w_plus: wp[i],
            }
        })
        .collect();
    terms(&samples, nw)
}
