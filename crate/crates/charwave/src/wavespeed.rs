//! The wave speed `c(u)`: a closed family of built-ins with analytic
//! derivatives, its antiderivative `Psi(u) = int_0^u c`, and a genericity
//! check on the critical points of `c`.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::quad::adaptive_simpson;
use crate::{Error, Result};

/// Built-in speed laws.  All derivatives are analytic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpeedSpec {
    /// `c(u) = c`.
    Constant { c: f64 },
    /// `c(u) = mean + amp * cos(u)`; `2 + cos u` is `mean = 2, amp = 1`.
    Cosine { mean: f64, amp: f64 },
    /// `c(u) = base + amp * exp(-(u / width)^2)`.
    Gaussian { base: f64, amp: f64, width: f64 },
    /// `c(u) = sum_k coeffs[k] * cos(u)^k`.
    CosPoly { coeffs: Vec<f64> },
    /// `c(u) = sum_k coeffs[k] * u^k`; only sensible on a bounded `u_range`.
    Polynomial { coeffs: Vec<f64> },
}

impl SpeedSpec {
    pub fn two_plus_cos() -> Self {
        SpeedSpec::Cosine { mean: 2.0, amp: 1.0 }
    }

    fn eval(&self, u: f64) -> (f64, f64, f64) {
        match self {
            SpeedSpec::Constant { c } => (*c, 0.0, 0.0),
            SpeedSpec::Cosine { mean, amp } => {
                let (s, co) = u.sin_cos();
                (mean + amp * co, -amp * s, -amp * co)
            }
            SpeedSpec::Gaussian { base, amp, width } => {
                let z = u / width;
                let g = (-z * z).exp();
                let d1 = -2.0 * z / width * g;
                let d2 = (4.0 * z * z - 2.0) / (width * width) * g;
                (base + amp * g, amp * d1, amp * d2)
            }
            SpeedSpec::CosPoly { coeffs } => {
                // P(y) with y = cos u; c' = -P'(y) sin u, c'' = P''(y) sin^2 u - P'(y) cos u
                let (s, y) = u.sin_cos();
                let (mut p, mut dp, mut ddp) = (0.0, 0.0, 0.0);
                for &a in coeffs.iter().rev() {
                    ddp = ddp * y + 2.0 * dp;
                    dp = dp * y + p;
                    p = p * y + a;
                }
                (p, -dp * s, ddp * s * s - dp * y)
            }
            SpeedSpec::Polynomial { coeffs } => {
                let (mut p, mut dp, mut ddp) = (0.0, 0.0, 0.0);
                for &a in coeffs.iter().rev() {
                    ddp = ddp * u + 2.0 * dp;
                    dp = dp * u + p;
                    p = p * u + a;
                }
                (p, dp, ddp)
            }
        }
    }

    fn antiderivative(&self, u: f64) -> Option<f64> {
        match self {
            SpeedSpec::Constant { c } => Some(c * u),
            SpeedSpec::Cosine { mean, amp } => Some(mean * u + amp * u.sin()),
            SpeedSpec::Gaussian { base, amp, width } => {
                Some(base * u + amp * width * std::f64::consts::PI.sqrt() / 2.0 * erf(u / width))
            }
            SpeedSpec::Polynomial { coeffs } => Some(
                coeffs
                    .iter()
                    .enumerate()
                    .rev()
                    .fold(0.0, |acc, (k, a)| acc * u + a / (k as f64 + 1.0))
                    * u,
            ),
            SpeedSpec::CosPoly { .. } => None,
        }
    }

    fn is_constant(&self) -> bool {
        match self {
            SpeedSpec::Constant { .. } => true,
            SpeedSpec::Cosine { amp, .. } | SpeedSpec::Gaussian { amp, .. } => *amp == 0.0,
            SpeedSpec::CosPoly { coeffs } | SpeedSpec::Polynomial { coeffs } => {
                coeffs.iter().skip(1).all(|a| *a == 0.0)
            }
        }
    }
}

/// A validated speed law on an admissible interval of `u`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveSpeed {
    pub spec: SpeedSpec,
    /// Positive lower bound of `c` on `u_range`.
    pub c0: f64,
    pub u_range: (f64, f64),
}

const VALIDATION_SAMPLES: usize = 4001;
pub const PSI_TOL: f64 = 1e-12;

impl WaveSpeed {
    pub fn new(spec: SpeedSpec, u_range: (f64, f64)) -> Result<Self> {
        let (lo, hi) = u_range;
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Invalid(format!("bad u_range [{lo}, {hi}]")));
        }
        let mut c0 = f64::INFINITY;
        let mut c_hi = 0.0f64;
        for k in 0..VALIDATION_SAMPLES {
            let u = lo + (hi - lo) * k as f64 / (VALIDATION_SAMPLES - 1) as f64;
            let (c, c1, c2) = spec.eval(u);
            if !(c.is_finite() && c1.is_finite() && c2.is_finite()) {
                return Err(Error::Invalid(format!("speed not finite at u = {u}")));
            }
            c0 = c0.min(c);
            c_hi = c_hi.max(c);
        }
        // a sampled minimum may straddle a zero of c: refine around it
        let step = (hi - lo) / (VALIDATION_SAMPLES - 1) as f64;
        let k_min = (0..VALIDATION_SAMPLES)
            .min_by(|&a, &b| {
                let ca = spec.eval(lo + step * a as f64).0;
                let cb = spec.eval(lo + step * b as f64).0;
                ca.total_cmp(&cb)
            })
            .unwrap_or(0);
        let (mut a, mut b) = ((lo + step * (k_min as f64 - 1.0)).max(lo), (lo + step * (k_min as f64 + 1.0)).min(hi));
        for _ in 0..100 {
            let m1 = a + (b - a) / 3.0;
            let m2 = b - (b - a) / 3.0;
            if spec.eval(m1).0 < spec.eval(m2).0 {
                b = m2;
            } else {
                a = m1;
            }
        }
        c0 = c0.min(spec.eval(0.5 * (a + b)).0);
        if c0 <= 1e-9 * c_hi {
            return Err(Error::Invalid(format!(
                "speed must be uniformly positive on [{lo}, {hi}], min sampled value {c0}"
            )));
        }
        Ok(WaveSpeed { spec, c0, u_range })
    }

    /// Shorthand with the default admissible range `[-10, 10]`.
    pub fn from_spec(spec: SpeedSpec) -> Result<Self> {
        Self::new(spec, (-10.0, 10.0))
    }

    pub fn constant(c: f64) -> Self {
        Self::from_spec(SpeedSpec::Constant { c }).expect("positive constant speed")
    }

    pub fn two_plus_cos() -> Self {
        Self::from_spec(SpeedSpec::two_plus_cos()).expect("2 + cos u is positive")
    }

    /// `(c, c', c'')` at `u`.
    #[inline]
    pub fn eval(&self, u: f64) -> (f64, f64, f64) {
        self.spec.eval(u)
    }

    #[inline]
    pub fn c(&self, u: f64) -> f64 {
        self.spec.eval(u).0
    }

    pub fn is_constant(&self) -> bool {
        self.spec.is_constant()
    }

    /// Largest sampled speed over `[lo, hi]` (clipped to `u_range`).
    pub fn c_max_on(&self, lo: f64, hi: f64) -> f64 {
        let lo = lo.max(self.u_range.0);
        let hi = hi.min(self.u_range.1);
        let n = 2001;
        (0..n)
            .map(|k| self.c(lo + (hi - lo) * k as f64 / (n - 1) as f64))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `sup |c'/c|` on `u_range` (sampled).
    pub fn log_derivative_bound(&self) -> f64 {
        let (lo, hi) = self.u_range;
        (0..VALIDATION_SAMPLES)
            .map(|k| {
                let (c, c1, _) = self.eval(lo + (hi - lo) * k as f64 / (VALIDATION_SAMPLES - 1) as f64);
                (c1 / c).abs()
            })
            .fold(0.0, f64::max)
    }

    fn check_u(&self, u: f64) -> Result<()> {
        let (lo, hi) = self.u_range;
        if u.is_nan() || u < lo || u > hi {
            return Err(Error::Domain(format!("u = {u} outside [{lo}, {hi}]")));
        }
        Ok(())
    }

    /// `Psi(u) = int_0^u c(s) ds`.
    pub fn psi(&self, u: f64) -> Result<f64> {
        self.check_u(u)?;
        Ok(self.psi_unchecked(u))
    }

    fn psi_unchecked(&self, u: f64) -> f64 {
        match self.spec.antiderivative(u) {
            Some(v) => v,
            None => {
                let f = |s: f64| self.c(s);
                if u >= 0.0 {
                    adaptive_simpson(&f, 0.0, u, 1e-14)
                } else {
                    -adaptive_simpson(&f, u, 0.0, 1e-14)
                }
            }
        }
    }

    /// Inverse of [`psi`](Self::psi): safeguarded Newton with bisection fallback.
    pub fn psi_inv(&self, a: f64) -> Result<f64> {
        let (mut lo, mut hi) = self.u_range;
        let (plo, phi) = (self.psi_unchecked(lo), self.psi_unchecked(hi));
        let tol = PSI_TOL * a.abs().max(1.0);
        if a.is_nan() || a < plo - tol || a > phi + tol {
            return Err(Error::Domain(format!(
                "{a} outside the range [{plo}, {phi}] of Psi"
            )));
        }
        let mut u = (a / self.c(0.0)).clamp(lo, hi);
        for _ in 0..200 {
            let f = self.psi_unchecked(u) - a;
            if f.abs() <= tol {
                return Ok(u);
            }
            if f > 0.0 {
                hi = u;
            } else {
                lo = u;
            }
            let newton = u - f / self.c(u);
            u = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= f64::EPSILON * u.abs().max(1.0) {
                return Ok(u);
            }
        }
        Ok(u)
    }

    /// Locate critical points of `c` and test `c'(u) = 0 => c''(u) != 0`.
    pub fn check_genericity(&self, n_samples: usize) -> GenericityReport {
        check_genericity(self, n_samples, 1e-8)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriticalPoint {
    pub u: f64,
    pub c2: f64,
    pub nondegenerate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GenericityReport {
    pub roots: Vec<CriticalPoint>,
    /// `c' == 0` identically: the condition fails everywhere.
    pub constant_speed: bool,
    pub pass: bool,
    pub note: String,
}

pub fn check_genericity(ws: &WaveSpeed, n_samples: usize, threshold: f64) -> GenericityReport {
    let n = n_samples.max(2);
    let (lo, hi) = ws.u_range;
    let us: Vec<f64> = (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect();
    let d1: Vec<f64> = us.iter().map(|&u| ws.eval(u).1).collect();
    if ws.is_constant() || d1.iter().all(|v| v.abs() < 1e-14) {
        return GenericityReport {
            roots: vec![],
            constant_speed: true,
            pass: false,
            note: "non-generic, constant speed".into(),
        };
    }
    let d1f = |u: f64| ws.eval(u).1;
    let mut roots: Vec<f64> = Vec::new();
    for k in 0..n - 1 {
        let (a, b) = (d1[k], d1[k + 1]);
        if a == 0.0 {
            roots.push(us[k]);
        } else if a * b < 0.0 {
            let (mut x0, mut x1, mut f0) = (us[k], us[k + 1], a);
            for _ in 0..200 {
                let m = 0.5 * (x0 + x1);
                let fm = d1f(m);
                if fm == 0.0 || x1 - x0 < 1e-15 * m.abs().max(1.0) {
                    x0 = m;
                    x1 = m;
                    break;
                }
                if fm * f0 < 0.0 {
                    x1 = m;
                } else {
                    x0 = m;
                    f0 = fm;
                }
            }
            roots.push(0.5 * (x0 + x1));
        } else if k > 0 && a.abs() < d1[k - 1].abs() && a.abs() <= b.abs() && a.abs() < 1e-6 {
            // touching zero without a sign change: only possible if c'' vanishes too
            roots.push(us[k]);
        }
    }
    if d1[n - 1] == 0.0 {
        roots.push(us[n - 1]);
    }
    let roots: Vec<CriticalPoint> = roots
        .into_iter()
        .map(|u| {
            let c2 = ws.eval(u).2;
            CriticalPoint {
                u,
                c2,
                nondegenerate: c2.abs() > threshold,
            }
        })
        .collect();
    let pass = roots.iter().all(|r| r.nondegenerate);
    let note = if roots.is_empty() {
        "c' has no zeros on the admissible range".to_string()
    } else if pass {
        format!("{} nondegenerate critical point(s)", roots.len())
    } else {
        "degenerate critical point: c' and c'' vanish together".to_string()
    };
    GenericityReport {
        roots,
        constant_speed: false,
        pass,
        note,
    }
}
