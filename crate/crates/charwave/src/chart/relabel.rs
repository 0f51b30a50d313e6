//! Relabeling of characteristics: `X = phi(X~)`, `Y = psi(Y~)` with increasing
//! maps.  Scalar fields are composed, `p` and `q` pick up the factors `phi'`
//! and `psi'`; the physical solution is unchanged.

use super::{CharChart, Grid};
use crate::{Error, Result};

/// An increasing `C^2` map of the line.
pub trait Monotone: Sync {
    fn eval(&self, s: f64) -> f64;
    fn deriv(&self, s: f64) -> f64;

    /// Inverse by bisection on an expanding bracket.
    fn inverse(&self, y: f64) -> f64 {
        let (mut lo, mut hi) = (y - 1.0, y + 1.0);
        while self.eval(lo) > y {
            lo -= 2.0 * (hi - lo);
        }
        while self.eval(hi) < y {
            hi += 2.0 * (hi - lo);
        }
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if self.eval(m) < y {
                lo = m;
            } else {
                hi = m;
            }
            if hi - lo <= f64::EPSILON * m.abs().max(1.0) {
                break;
            }
        }
        0.5 * (lo + hi)
    }
}

/// `s -> slope * s + offset`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Affine {
    pub slope: f64,
    pub offset: f64,
}

impl Affine {
    pub fn identity() -> Self {
        Affine { slope: 1.0, offset: 0.0 }
    }
}

impl Monotone for Affine {
    fn eval(&self, s: f64) -> f64 {
        self.slope * s + self.offset
    }
    fn deriv(&self, _s: f64) -> f64 {
        self.slope
    }
    fn inverse(&self, y: f64) -> f64 {
        (y - self.offset) / self.slope
    }
}

impl<F: Fn(f64) -> (f64, f64) + Sync> Monotone for F {
    fn eval(&self, s: f64) -> f64 {
        self(s).0
    }
    fn deriv(&self, s: f64) -> f64 {
        self(s).1
    }
}

/// Fractional cell position of `v` on an axis with `n` nodes; snaps to nodes.
fn locate(v: f64, v0: f64, h: f64, n: usize) -> Option<(usize, f64)> {
    let f = (v - v0) / h;
    if f < -1e-9 || f > (n - 1) as f64 + 1e-9 {
        return None;
    }
    let i = (f.floor().max(0.0) as usize).min(n - 2);
    let mut s = f - i as f64;
    if s.abs() < 1e-9 {
        s = 0.0;
    } else if (1.0 - s).abs() < 1e-9 {
        s = 1.0;
    }
    Some((i, s))
}

/// Bilinear sample of a grid field; corners with zero weight are skipped so
/// that node-aligned samples never pick up `NaN` from unsolved neighbours.
pub(crate) fn bilinear(grid: &Grid, f: &[f64], (i, s): (usize, f64), (j, r): (usize, f64)) -> f64 {
    let mut acc = 0.0;
    for (di, wi) in [(0, 1.0 - s), (1, s)] {
        for (dj, wj) in [(0, 1.0 - r), (1, r)] {
            let w = wi * wj;
            if w != 0.0 {
                acc += w * f[grid.idx(i + di, j + dj)];
            }
        }
    }
    acc
}

pub fn relabel(chart: &CharChart, phi: &dyn Monotone, psi: &dyn Monotone) -> Result<CharChart> {
    let g = chart.grid;
    let (xe, ye) = (g.x_at(g.nx - 1), g.y_at(g.ny - 1));
    let (a0, a1) = (phi.inverse(g.x0), phi.inverse(xe));
    let (b0, b1) = (psi.inverse(g.y0), psi.inverse(ye));
    if !(a1 > a0 && b1 > b0) {
        return Err(Error::Invalid("relabeling maps must be increasing".into()));
    }
    let ng = Grid {
        x0: a0,
        y0: b0,
        hx: (a1 - a0) / (g.nx - 1) as f64,
        hy: (b1 - b0) / (g.ny - 1) as f64,
        nx: g.nx,
        ny: g.ny,
    };
    let xs: Vec<f64> = (0..ng.nx).map(|i| phi.eval(ng.x_at(i))).collect();
    let ys: Vec<f64> = (0..ng.ny).map(|j| psi.eval(ng.y_at(j))).collect();
    let dphi: Vec<f64> = (0..ng.nx).map(|i| phi.deriv(ng.x_at(i))).collect();
    let dpsi: Vec<f64> = (0..ng.ny).map(|j| psi.deriv(ng.y_at(j))).collect();
    let increasing = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]);
    if !increasing(&xs) || !increasing(&ys) || dphi.iter().chain(&dpsi).any(|d| !(*d > 0.0)) {
        return Err(Error::Invalid("relabeling map is not increasing on the grid".into()));
    }
    let mut out = CharChart::empty(ng, chart.speed.clone());
    for i in 0..ng.nx {
        let Some(ci) = locate(xs[i], g.x0, g.hx, g.nx) else { continue };
        for j in 0..ng.ny {
            let Some(cj) = locate(ys[j], g.y0, g.hy, g.ny) else { continue };
            let k = ng.idx(i, j);
            out.t[k] = bilinear(&g, &chart.t, ci, cj);
            if out.t[k].is_nan() {
                continue;
            }
            out.u[k] = bilinear(&g, &chart.u, ci, cj);
            out.alpha[k] = bilinear(&g, &chart.alpha, ci, cj);
            out.beta[k] = bilinear(&g, &chart.beta, ci, cj);
            out.x[k] = bilinear(&g, &chart.x, ci, cj);
            out.p[k] = bilinear(&g, &chart.p, ci, cj) * dphi[i];
            out.q[k] = bilinear(&g, &chart.q, ci, cj) * dpsi[j];
        }
    }
    Ok(out)
}
