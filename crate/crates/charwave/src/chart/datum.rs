//! Initial data `(u0, u1)` sampled on the boundary lattice, and sizing of the
//! characteristic domain.

use serde::{Deserialize, Serialize};

use crate::quad::trapz_uniform;
use crate::wavespeed::WaveSpeed;
use crate::{Error, Result};

/// Smooth compactly supported bump `amplitude * exp(1 - 1/(1 - r^2))`,
/// `r = (x - center) / half_width`, peak value `amplitude` at the center.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: f64,
    pub half_width: f64,
    pub amplitude: f64,
}

impl Bump {
    pub fn new(center: f64, half_width: f64, amplitude: f64) -> Self {
        Bump { center, half_width, amplitude }
    }

    /// Value and first derivative at `x`.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let r = (x - self.center) / self.half_width;
        let d = 1.0 - r * r;
        if d <= 0.0 {
            return (0.0, 0.0);
        }
        let b = self.amplitude * (1.0 - 1.0 / d).exp();
        (b, b * (-2.0 * r / (d * d)) / self.half_width)
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - self.half_width, self.center + self.half_width)
    }
}

/// Analytic description of a datum: sums of bumps, plus an optional
/// `u1 += transport * c(u0) * u0_x` term (`transport = -1` makes `R0 = 0`,
/// a purely right-moving wave).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DatumSpec {
    #[serde(default)]
    pub u0: Vec<Bump>,
    #[serde(default)]
    pub u1: Vec<Bump>,
    #[serde(default)]
    pub transport: f64,
}

impl DatumSpec {
    pub fn zero() -> Self {
        DatumSpec::default()
    }

    /// `u0 = bump`, `u1 = 0`.
    pub fn at_rest(b: Bump) -> Self {
        DatumSpec { u0: vec![b], ..Default::default() }
    }

    /// Right-moving profile `u0 = bump`, `u1 = -c(u0) u0_x`.
    pub fn right_moving(b: Bump) -> Self {
        DatumSpec { u0: vec![b], u1: vec![], transport: -1.0 }
    }

    pub fn support(&self) -> Option<(f64, f64)> {
        self.u0
            .iter()
            .chain(self.u1.iter())
            .filter(|b| b.amplitude != 0.0)
            .map(Bump::support)
            .reduce(|a, b| (a.0.min(b.0), a.1.max(b.1)))
    }

    /// Exact `(u0, u0_x, u1)` at `x`.
    pub fn eval(&self, ws: &WaveSpeed, x: f64) -> (f64, f64, f64) {
        let (mut u0, mut u0x, mut u1) = (0.0, 0.0, 0.0);
        for b in &self.u0 {
            let (v, d) = b.eval(x);
            u0 += v;
            u0x += d;
        }
        for b in &self.u1 {
            u1 += b.eval(x).0;
        }
        if self.transport != 0.0 {
            u1 += self.transport * ws.c(u0) * u0x;
        }
        (u0, u0x, u1)
    }

    pub fn sample(&self, ws: &WaveSpeed, x0: f64, h: f64, n: usize) -> InitialDatum {
        let mut d = InitialDatum {
            x0,
            h,
            u0: Vec::with_capacity(n + 1),
            u0x: Vec::with_capacity(n + 1),
            u1: Vec::with_capacity(n + 1),
            support: self.support().unwrap_or((x0, x0)),
        };
        for i in 0..=n {
            let (a, b, c) = self.eval(ws, x0 + i as f64 * h);
            d.u0.push(a);
            d.u0x.push(b);
            d.u1.push(c);
        }
        d
    }
}

/// `(u0, u1)` and `u0_x` on the uniform lattice `x_i = x0 + i h`, `i = 0..=n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialDatum {
    pub x0: f64,
    pub h: f64,
    pub u0: Vec<f64>,
    pub u0x: Vec<f64>,
    pub u1: Vec<f64>,
    /// Interval outside of which `u0` and `u1` vanish.
    pub support: (f64, f64),
}

impl InitialDatum {
    /// Build from samples only; `u0_x` by second-order finite differences.
    pub fn from_samples(x0: f64, h: f64, u0: Vec<f64>, u1: Vec<f64>) -> Result<Self> {
        if u0.len() != u1.len() || u0.len() < 3 {
            return Err(Error::Invalid("u0/u1 length mismatch or too short".into()));
        }
        if !(h > 0.0) {
            return Err(Error::Invalid("sample spacing must be positive".into()));
        }
        let n = u0.len();
        let mut u0x = vec![0.0; n];
        for i in 1..n - 1 {
            u0x[i] = (u0[i + 1] - u0[i - 1]) / (2.0 * h);
        }
        u0x[0] = (-3.0 * u0[0] + 4.0 * u0[1] - u0[2]) / (2.0 * h);
        u0x[n - 1] = (3.0 * u0[n - 1] - 4.0 * u0[n - 2] + u0[n - 3]) / (2.0 * h);
        let nz = |v: &f64| v.abs() > 1e-14;
        let first = u0.iter().position(nz).into_iter().chain(u1.iter().position(nz)).min();
        let last = u0.iter().rposition(nz).into_iter().chain(u1.iter().rposition(nz)).max();
        let support = match (first, last) {
            (Some(a), Some(b)) => (x0 + a.saturating_sub(1) as f64 * h, x0 + (b + 1).min(n - 1) as f64 * h),
            _ => (x0, x0),
        };
        Ok(InitialDatum { x0, h, u0, u0x, u1, support })
    }

    pub fn len(&self) -> usize {
        self.u0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u0.is_empty()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.h
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.x(i)).collect()
    }

    /// `R0 = u1 + c(u0) u0_x`.
    pub fn r0(&self, ws: &WaveSpeed) -> Vec<f64> {
        (0..self.len()).map(|i| self.u1[i] + ws.c(self.u0[i]) * self.u0x[i]).collect()
    }

    /// `S0 = u1 - c(u0) u0_x`.
    pub fn s0(&self, ws: &WaveSpeed) -> Vec<f64> {
        (0..self.len()).map(|i| self.u1[i] - ws.c(self.u0[i]) * self.u0x[i]).collect()
    }

    /// `E0 = int u1^2 + (c(u0) u0_x)^2 dx`.
    pub fn energy(&self, ws: &WaveSpeed) -> f64 {
        let dens: Vec<f64> = (0..self.len())
            .map(|i| {
                let cu = ws.c(self.u0[i]) * self.u0x[i];
                self.u1[i] * self.u1[i] + cu * cu
            })
            .collect();
        trapz_uniform(self.h, &dens)
    }

    /// `sup |u0|`, used for range checks.
    pub fn max_abs_u0(&self) -> f64 {
        self.u0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn same_lattice(&self, other: &InitialDatum) -> bool {
        self.len() == other.len()
            && (self.x0 - other.x0).abs() <= 1e-12 * self.h
            && (self.h - other.h).abs() <= 1e-15 * self.h.max(1.0)
    }
}

/// Boundary lattice of a chart: nodes `X_i = xa + i h`, `i = 0..=n`, placed on
/// the line `X + Y = 0`.  The `(X, Y)` grid is `[xa, xa + n h] x [-(xa + n h), -xa]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartDomain {
    pub xa: f64,
    pub h: f64,
    pub n: usize,
}

impl ChartDomain {
    pub fn xb(&self) -> f64 {
        self.xa + self.n as f64 * self.h
    }

    /// Extents covering `support` up to time `t_max`: the lateral margin is
    /// `margin * (c(0) + c_max) * t_max` on each side, where `c_max` is the
    /// largest speed on the a-priori range `|u| <= sqrt(l E0) / c0` of a
    /// datum with energy `E0` whose support has grown to length `l`.
    ///
    /// With `snap`, the end points are multiples of `h` so that refined
    /// charts share the coarse lattice.
    pub fn covering(
        support: (f64, f64),
        t_max: f64,
        energy: f64,
        ws: &WaveSpeed,
        h: f64,
        margin: f64,
    ) -> Result<Self> {
        if !(h > 0.0) || !(t_max >= 0.0) || !(margin >= 1.0) {
            return Err(Error::Invalid(format!(
                "need h > 0, t_max >= 0, margin >= 1 (got {h}, {t_max}, {margin})"
            )));
        }
        let m = Self::lateral_margin(support, t_max, energy, ws, margin);
        let xa = ((support.0 - m) / h).floor() * h - 2.0 * h;
        let xb = ((support.1 + m) / h).ceil() * h + 2.0 * h;
        let n = ((xb - xa) / h).round() as usize;
        Ok(ChartDomain { xa, h, n })
    }

    /// Same extents rule but with a prescribed number of cells per side.
    pub fn with_cells(
        support: (f64, f64),
        t_max: f64,
        energy: f64,
        ws: &WaveSpeed,
        n: usize,
        margin: f64,
    ) -> Result<Self> {
        if n < 4 {
            return Err(Error::Invalid("need at least 4 cells".into()));
        }
        let m = Self::lateral_margin(support, t_max, energy, ws, margin);
        let (xa, xb) = (support.0 - m, support.1 + m);
        Ok(ChartDomain { xa, h: (xb - xa) / n as f64, n })
    }

    fn lateral_margin(support: (f64, f64), t_max: f64, energy: f64, ws: &WaveSpeed, margin: f64) -> f64 {
        let (lo, hi) = ws.u_range;
        let c_sup = ws.c_max_on(lo, hi);
        let len = (support.1 - support.0) + 2.0 * c_sup * t_max;
        let bound = (len * energy.max(0.0)).sqrt() / ws.c0;
        let c_max = ws.c_max_on(-bound, bound).max(ws.c(0.0));
        margin * (ws.c(0.0) + c_max) * t_max
    }

    pub fn sample(&self, spec: &DatumSpec, ws: &WaveSpeed) -> InitialDatum {
        spec.sample(ws, self.xa, self.h, self.n)
    }

    /// Same lattice refined by an integer factor.
    pub fn refined(&self, factor: usize) -> Self {
        ChartDomain { xa: self.xa, h: self.h / factor as f64, n: self.n * factor }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_derivative_and_support() {
        let b = Bump::new(0.5, 0.4, 1.3);
        assert_eq!(b.eval(0.5).0, 1.3);
        assert_eq!(b.eval(0.95), (0.0, 0.0));
        let e = 1e-6;
        for &x in &[0.2, 0.45, 0.7, 0.85] {
            let fd = (b.eval(x + e).0 - b.eval(x - e).0) / (2.0 * e);
            assert!((fd - b.eval(x).1).abs() < 1e-6);
        }
    }

    #[test]
    fn right_moving_has_no_backward_part() {
        let ws = WaveSpeed::two_plus_cos();
        let d = DatumSpec::right_moving(Bump::new(0.5, 0.5, 0.8)).sample(&ws, -1.0, 0.01, 300);
        assert!(d.r0(&ws).iter().all(|r| r.abs() < 1e-14));
        let e0 = d.energy(&ws);
        let half: Vec<f64> = d.s0(&ws).iter().map(|s| 0.5 * s * s).collect();
        assert!((e0 - trapz_uniform(d.h, &half)).abs() < 1e-12 * e0);
    }

    #[test]
    fn from_samples_recovers_derivative() {
        let ws = WaveSpeed::constant(1.0);
        let spec = DatumSpec::at_rest(Bump::new(0.0, 1.0, 1.0));
        let exact = spec.sample(&ws, -1.5, 1e-3, 3000);
        let d = InitialDatum::from_samples(-1.5, 1e-3, exact.u0.clone(), exact.u1.clone()).unwrap();
        let err = d.u0x.iter().zip(&exact.u0x).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-4, "{err}");
        // numerical support: inside the nominal one, but not much smaller
        assert!(d.support.0 >= -1.0 - 2e-3 && d.support.1 <= 1.0 + 2e-3);
        assert!(d.support.0 < -0.9 && d.support.1 > 0.9);
    }

    #[test]
    fn domain_snaps_to_lattice() {
        let ws = WaveSpeed::constant(1.0);
        let d = ChartDomain::covering((0.0, 1.0), 2.0, 0.1, &ws, 1.0 / 64.0, 1.2).unwrap();
        assert!(d.xa <= -4.8 && d.xb() >= 5.8);
        assert_eq!((d.xa * 64.0).fract(), 0.0);
        let r = d.refined(2);
        assert_eq!(r.xb(), d.xb());
    }
}
