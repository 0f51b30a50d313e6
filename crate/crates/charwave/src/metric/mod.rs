//! The weighted Finsler norm of tangent vectors to paths of solutions, and
//! path lengths.
//!
//! A tangent vector is obtained by differentiating a one-parameter family
//! of charts in `theta` at fixed labels `(X, Y)`.  On the level curve
//! `t = tau` it is turned into horizontal shifts `w, z` and vertical
//! displacements `r~, s~`; the norm is a weighted line integral along the
//! curve of twelve integrands built from bounded quantities only, so it stays
//! finite through gradient blow-up.

mod path;
mod physical;
mod tangent;

pub use path::{
    interpolate_data, length_of, path_slices, PathSlices,
    optimize_relabeling, path_length, path_tangents, AffineFamily, PathLength, PathOfData, PathSpec, RelabelingResult,
};
pub use physical::{main_form_from_oracle, main_form_on_curve};
pub use tangent::{tangent_by_theta, CurveTangent, Gauge, TangentField};

use serde::{Deserialize, Serialize};

use crate::chart::Node;
use crate::quad::pairwise_sum;
use crate::slice::half_tan;
use crate::wavespeed::WaveSpeed;

/// Coefficients `kappa_1..6 = (1, delta, delta^3, delta, delta^2, delta^3)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormWeights {
    pub delta: f64,
    pub kappa: [f64; 6],
}

impl NormWeights {
    pub fn new(delta: f64) -> Self {
        let d = delta;
        NormWeights { delta, kappa: [1.0, d, d * d * d, d, d * d, d * d * d] }
    }
}

impl Default for NormWeights {
    fn default() -> Self {
        Self::new(0.1)
    }
}

/// Norm value and its six unweighted terms `I_1..I_6`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NormBreakdown {
    pub norm: f64,
    pub terms: [f64; 6],
}

impl NormBreakdown {
    pub fn from_terms(terms: [f64; 6], w: &NormWeights) -> Self {
        let norm = pairwise_sum(&std::array::from_fn::<f64, 6, _>(|l| w.kappa[l] * terms[l]));
        NormBreakdown { norm, terms }
    }
}

/// Samples of a chart along a curve `X` increasing, `Y` decreasing.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveNodes<'a> {
    pub big_x: &'a [f64],
    pub big_y: &'a [f64],
    pub nodes: &'a [Node],
}

impl CurveNodes<'_> {
    fn segments(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        (0..self.nodes.len().saturating_sub(1))
            .map(|k| (k, self.big_x[k + 1] - self.big_x[k], self.big_y[k] - self.big_y[k + 1]))
    }

    /// Trapezoid rule for `int f dX + g |dY|`.
    pub fn integrate(&self, f: &[f64], g: &[f64]) -> f64 {
        let terms: Vec<f64> =
            self.segments().map(|(k, dx, dy)| 0.5 * (f[k] + f[k + 1]) * dx + 0.5 * (g[k] + g[k + 1]) * dy).collect();
        pairwise_sum(&terms)
    }
}

/// `W-(x) = 1 + int_{-inf}^x S^2` and `W+(x) = 1 + int_x^inf R^2` at the curve
/// points, from the bounded measures `q sin^2(beta/2) |dY|`, `p sin^2(alpha/2) dX`.
pub fn weights_along_curve(c: &CurveNodes) -> (Vec<f64>, Vec<f64>) {
    let n = c.nodes.len();
    let dens_r: Vec<f64> = c.nodes.iter().map(|nd| nd.p * (0.5 * nd.a).sin().powi(2)).collect();
    let dens_s: Vec<f64> = c.nodes.iter().map(|nd| nd.q * (0.5 * nd.b).sin().powi(2)).collect();
    let mut wm = vec![1.0; n];
    let mut wp = vec![1.0; n];
    for (k, _, dy) in c.segments() {
        wm[k + 1] = wm[k] + 0.5 * (dens_s[k] + dens_s[k + 1]) * dy;
    }
    for k in (0..n.saturating_sub(1)).rev() {
        let dx = c.big_x[k + 1] - c.big_x[k];
        wp[k] = wp[k + 1] + 0.5 * (dens_r[k] + dens_r[k + 1]) * dx;
    }
    (wm, wp)
}

/// `a = int |c'| |R^2 S - R S^2| / 2c dx` along the curve.  On each segment
/// the integrand is attached to `p dX` (as `|S| |R^2 - RS| dx`) where `|S|`
/// is the smaller of `|S|, |R|` at both ends and to `q |dY|` otherwise, so the
/// unbounded one of `R, S` only ever appears through its bounded measure.
pub fn interaction_rate(ws: &WaveSpeed, c: &CurveNodes) -> f64 {
    // (|tan(alpha/2)|, |tan(beta/2)|, dX integrand, |dY| integrand)
    let per_point: Vec<(f64, f64, f64, f64)> = c
        .nodes
        .iter()
        .map(|nd| {
            let (cc, c1, _) = ws.eval(nd.u);
            let k = c1.abs() / (2.0 * cc);
            let (sa, ca) = (0.5 * nd.a).sin_cos();
            let (sb, cb) = (0.5 * nd.b).sin_cos();
            let r = half_tan(nd.a, f64::MAX);
            let s = half_tan(nd.b, f64::MAX);
            let via_x = k * (s * (sa * sa - s * sa * ca)).abs() * nd.p;
            let via_y = k * (r * (r * sb * cb - sb * sb)).abs() * nd.q;
            (r.abs(), s.abs(), via_x, via_y)
        })
        .collect();
    let terms: Vec<f64> = c
        .segments()
        .map(|(k, dx, dy)| {
            let (a, b) = (per_point[k], per_point[k + 1]);
            if a.1.max(b.1) <= a.0.max(b.0) {
                0.5 * (a.2 + b.2) * dx
            } else {
                0.5 * (a.3 + b.3) * dy
            }
        })
        .collect();
    pairwise_sum(&terms)
}

/// Shifts, vertical displacements and the combination `v + Rw/2c - Sz/2c`
/// at one point, from base values and their `theta`-derivatives.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Shifts {
    pub w: f64,
    pub z: f64,
    pub r_tilde: f64,
    pub s_tilde: f64,
    /// `v + R w / 2c - S z / 2c`, which equals the `theta`-derivative `U` of `u`.
    pub v_comb: f64,
}

/// `cap` bounds `|tan(alpha/2)|`, `|tan(beta/2)|` in the `sec^2`, `tan^2` factors.
pub fn shifts_and_vertical(ws: &WaveSpeed, base: &Node, tan: &Node, cap: f64) -> Shifts {
    let (c, c1, _) = ws.eval(base.u);
    let ta = half_tan(base.a, cap);
    let tb = half_tan(base.b, cap);
    let (sec2a, sec2b) = (1.0 + ta * ta, 1.0 + tb * tb);
    let (ca, cb) = (base.a.cos(), base.b.cos());
    let k = c1 / (2.0 * c);
    // 1/(1 + cos) = sec^2(./2)/2, clipped like the tangent
    let r_tilde = 0.5 * (tan.a - tan.t * k * (cb - ca) * 0.5 * sec2b) * sec2a - 0.5 * k * tan.t * tb * tb;
    let s_tilde = 0.5 * (tan.b - tan.t * k * (ca - cb) * 0.5 * sec2a) * sec2b - 0.5 * k * tan.t * ta * ta;
    Shifts { w: tan.x + c * tan.t, z: tan.x - c * tan.t, r_tilde, s_tilde, v_comb: tan.u }
}

/// The twelve integrands `(J_1..6, H_1..6)` of the line-integral form at one
/// point; `J` pairs with `W- dX`, `H` with `W+ |dY|`.  Only bounded factors of
/// the base solution appear.
pub fn integrands(ws: &WaveSpeed, base: &Node, tan: &Node) -> ([f64; 6], [f64; 6]) {
    let (c, c1, _) = ws.eval(base.u);
    let k = c1 / (4.0 * c);
    let one = |ang: f64, dens: f64, d_ang: f64, d_dens: f64, shift: f64| -> [f64; 6] {
        let (sh, ch) = (0.5 * ang).sin_cos();
        let (s2, c2, sn) = (sh * sh, ch * ch, ang.sin());
        [
            shift * dens,
            0.5 * d_ang * dens - k * dens * tan.t * s2,
            tan.u * dens,
            d_dens * c2 - 0.5 * dens * sn * d_ang + k * tan.t * dens * sn,
            0.5 * d_dens * sn - dens * d_ang * s2 + 2.0 * k * tan.t * dens * s2,
            d_dens * s2 + 0.5 * dens * sn * d_ang,
        ]
    };
    let s = shifts_and_vertical(ws, base, tan, f64::INFINITY);
    (one(base.a, base.p, tan.a, tan.p, s.w), one(base.b, base.q, tan.b, tan.q, s.z))
}

/// The norm along a curve: `sum_l kappa_l int |J_l| W- dX + |H_l| W+ |dY|`.
pub fn tangent_norm(ws: &WaveSpeed, c: &CurveNodes, tangent: &[Node], w: &NormWeights) -> NormBreakdown {
    let (wm, wp) = weights_along_curve(c);
    let ih: Vec<([f64; 6], [f64; 6])> = c.nodes.iter().zip(tangent).map(|(b, t)| integrands(ws, b, t)).collect();
    let terms = std::array::from_fn(|l| {
        let f: Vec<f64> = ih.iter().zip(&wm).map(|(v, m)| v.0[l].abs() * m).collect();
        let g: Vec<f64> = ih.iter().zip(&wp).map(|(v, p)| v.1[l].abs() * p).collect();
        c.integrate(&f, &g)
    });
    NormBreakdown::from_terms(terms, w)
}

/// Per-`tau` summary written by experiments.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricReport {
    pub tau: f64,
    pub norm: f64,
    pub terms: [f64; 6],
    pub rate: f64,
    pub energy: f64,
}
