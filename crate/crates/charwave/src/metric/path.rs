//! Paths of data, their lengths at a time `tau`, and relabeling of paths.

use serde::{Deserialize, Serialize};

use super::tangent::{stencil, tangent_by_theta, CurveTangent, Gauge};
use super::{NormBreakdown, NormWeights};
use crate::chart::{boundary_data, Bump, ChartDomain, DatumSpec, InitialDatum, SolveOptions};
use crate::quad::trapz;
use crate::slice::{curve_energy, extract_level_curve};
use crate::wavespeed::WaveSpeed;
use crate::{Error, Result};

/// How the data depend on `theta in [0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PathSpec {
    /// Bump parameters and the transport coefficient move linearly from
    /// `start` to `end` (both must have the same bumps).
    Blend { start: DatumSpec, end: DatumSpec },
    /// `u0 = Psi^-1(theta Psi(end.u0) + (1 - theta) Psi(start.u0))`,
    /// `u1 = theta end.u1 + (1 - theta) start.u1`.
    Interpolated { start: DatumSpec, end: DatumSpec },
}

fn blend_bumps(a: &[Bump], b: &[Bump], th: f64) -> Result<Vec<Bump>> {
    if a.len() != b.len() {
        return Err(Error::Invalid("blended data must have matching bumps".into()));
    }
    let mix = |x: f64, y: f64| (1.0 - th) * x + th * y;
    Ok(a.iter()
        .zip(b)
        .map(|(p, q)| Bump::new(mix(p.center, q.center), mix(p.half_width, q.half_width), mix(p.amplitude, q.amplitude)))
        .collect())
}

impl PathSpec {
    /// Union of the supports of the two end data.
    pub fn support(&self) -> (f64, f64) {
        let (PathSpec::Blend { start, end } | PathSpec::Interpolated { start, end }) = self;
        match (start.support(), end.support()) {
            (Some(x), Some(y)) => (x.0.min(y.0), x.1.max(y.1)),
            (Some(x), None) | (None, Some(x)) => x,
            (None, None) => (-1.0, 1.0),
        }
    }

    /// The datum at `theta`, sampled on the boundary lattice of `domain`.
    pub fn datum(&self, theta: f64, ws: &WaveSpeed, domain: &ChartDomain) -> Result<InitialDatum> {
        match self {
            PathSpec::Blend { start, end } => {
                let spec = DatumSpec {
                    u0: blend_bumps(&start.u0, &end.u0, theta)?,
                    u1: blend_bumps(&start.u1, &end.u1, theta)?,
                    transport: (1.0 - theta) * start.transport + theta * end.transport,
                };
                Ok(domain.sample(&spec, ws))
            }
            PathSpec::Interpolated { start, end } => {
                let a = domain.sample(start, ws);
                let b = domain.sample(end, ws);
                interpolate_data(&a, &b, theta, ws)
            }
        }
    }
}

/// `u0 = Psi^-1(theta Psi(B.u0) + (1 - theta) Psi(A.u0))` with the exact
/// derivative `u0_x = (theta c(B) B_x + (1 - theta) c(A) A_x) / c(u0)`, and
/// `u1` interpolated linearly.
pub fn interpolate_data(a: &InitialDatum, b: &InitialDatum, theta: f64, ws: &WaveSpeed) -> Result<InitialDatum> {
    if !a.same_lattice(b) {
        return Err(Error::Invalid("interpolated data must share a lattice".into()));
    }
    let n = a.len();
    let mut d = InitialDatum {
        x0: a.x0,
        h: a.h,
        u0: Vec::with_capacity(n),
        u0x: Vec::with_capacity(n),
        u1: Vec::with_capacity(n),
        support: (a.support.0.min(b.support.0), a.support.1.max(b.support.1)),
    };
    for i in 0..n {
        let (ua, ub) = (a.u0[i], b.u0[i]);
        let u = if theta == 0.0 {
            ua
        } else if theta == 1.0 {
            ub
        } else {
            ws.psi_inv(theta * ws.psi(ub)? + (1.0 - theta) * ws.psi(ua)?)?
        };
        d.u0.push(u);
        d.u0x.push((theta * ws.c(ub) * b.u0x[i] + (1.0 - theta) * ws.c(ua) * a.u0x[i]) / ws.c(u));
        d.u1.push(theta * b.u1[i] + (1.0 - theta) * a.u1[i]);
    }
    Ok(d)
}

/// A path of data sampled at `thetas`, with energy cap `energy_cap`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathOfData {
    pub spec: PathSpec,
    pub thetas: Vec<f64>,
    pub energy_cap: f64,
}

impl PathOfData {
    /// Uniform samples `theta_k = k / m`, `k = 0..=m`.
    pub fn uniform(spec: PathSpec, m: usize, energy_cap: f64) -> Self {
        let m = m.max(1);
        PathOfData { spec, thetas: (0..=m).map(|k| k as f64 / m as f64).collect(), energy_cap }
    }

    pub fn datum(&self, theta: f64, ws: &WaveSpeed, domain: &ChartDomain) -> Result<InitialDatum> {
        let d = self.spec.datum(theta, ws, domain)?;
        let e = d.energy(ws);
        if e > self.energy_cap * (1.0 + 1e-9) {
            return Err(Error::Invalid(format!("energy {e} exceeds the path's cap {}", self.energy_cap)));
        }
        Ok(d)
    }
}

/// Tangents of the path along `t = tau` at every `theta` sample.  At `tau = 0`
/// only boundary traces are needed.
pub fn path_tangents(
    path: &PathOfData,
    tau: f64,
    eps: f64,
    ws: &WaveSpeed,
    domain: &ChartDomain,
    opts: &SolveOptions,
) -> Result<Vec<CurveTangent>> {
    path.thetas
        .iter()
        .map(|&theta| {
            let at = |e| Error::at_theta(theta, e);
            if tau == 0.0 {
                let trace = |th: f64| -> Result<_> { Ok(boundary_data(&path.datum(th, ws, domain)?, ws)) };
                let base = trace(theta).map_err(at)?;
                let parts: Vec<(crate::chart::BoundaryTrace, f64)> = stencil(theta, eps)
                    .into_iter()
                    .map(|(th, w)| Ok((trace(th)?, w)))
                    .collect::<Result<_>>()
                    .map_err(at)?;
                let refs: Vec<_> = parts.iter().map(|(b, w)| (b, *w)).collect();
                CurveTangent::on_boundary(theta, eps, &base, &refs, ws).map_err(at)
            } else {
                let (chart, tf) = tangent_by_theta(path, theta, eps, ws, domain, opts)?;
                let curve = extract_level_curve(&chart, tau).map_err(at)?;
                CurveTangent::on_curve(&chart, &tf, &curve).map_err(at)
            }
        })
        .collect()
}

/// Curve tangents and energies of a path on several level curves, indexed
/// `[tau][theta]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PathSlices {
    pub taus: Vec<f64>,
    pub tangents: Vec<Vec<CurveTangent>>,
    pub energy: Vec<Vec<f64>>,
}

/// Like [`path_tangents`] for many times at once: the charts of each `theta`
/// are solved once (up to the last time) and cut along every level curve.
pub fn path_slices(
    path: &PathOfData,
    taus: &[f64],
    eps: f64,
    ws: &WaveSpeed,
    domain: &ChartDomain,
    opts: &SolveOptions,
) -> Result<PathSlices> {
    let t_end = taus.iter().cloned().fold(0.0, f64::max);
    let opts = SolveOptions { t_stop: Some(opts.t_stop.unwrap_or(t_end).max(t_end) + 2.0 * domain.h), ..*opts };
    let mut out = PathSlices {
        taus: taus.to_vec(),
        tangents: vec![Vec::with_capacity(path.thetas.len()); taus.len()],
        energy: vec![Vec::with_capacity(path.thetas.len()); taus.len()],
    };
    for &theta in &path.thetas {
        let (chart, tf) = tangent_by_theta(path, theta, eps, ws, domain, &opts)?;
        for (l, &tau) in taus.iter().enumerate() {
            let at = |e| Error::at_theta(theta, e);
            let curve = extract_level_curve(&chart, tau).map_err(at)?;
            out.tangents[l].push(CurveTangent::on_curve(&chart, &tf, &curve).map_err(at)?);
            out.energy[l].push(curve_energy(&chart, &curve));
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathLength {
    pub tau: f64,
    pub length: f64,
    /// `(theta, norm breakdown)` per sample.
    pub profile: Vec<(f64, NormBreakdown)>,
}

/// Composite trapezoid over `theta` of the norms of the gauged tangents.
pub fn length_of(tangents: &[CurveTangent], ws: &WaveSpeed, w: &NormWeights, gauge: &dyn Fn(f64) -> Gauge) -> PathLength {
    let profile: Vec<(f64, NormBreakdown)> = tangents.iter().map(|ct| (ct.theta, ct.norm(ws, &gauge(ct.theta), w))).collect();
    let th: Vec<f64> = profile.iter().map(|p| p.0).collect();
    let nv: Vec<f64> = profile.iter().map(|p| p.1.norm).collect();
    PathLength { tau: tangents.first().map_or(0.0, |c| c.tau), length: trapz(&th, &nv), profile }
}

/// Length of the path at time `tau` with the canonical labeling.
#[allow(clippy::too_many_arguments)]
pub fn path_length(
    path: &PathOfData,
    tau: f64,
    w: &NormWeights,
    ws: &WaveSpeed,
    domain: &ChartDomain,
    opts: &SolveOptions,
    eps: f64,
) -> Result<PathLength> {
    let tangents = path_tangents(path, tau, eps, ws, domain, opts)?;
    Ok(length_of(&tangents, ws, w, &|_| Gauge::none()))
}

/// Relabelings `X = sigma_x^theta X~ + theta b_x`, `Y = sigma_y^theta Y~ + theta b_y`
/// applied along the path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineFamily {
    pub sigma_x: f64,
    pub b_x: f64,
    pub sigma_y: f64,
    pub b_y: f64,
}

impl AffineFamily {
    pub fn identity() -> Self {
        AffineFamily { sigma_x: 1.0, b_x: 0.0, sigma_y: 1.0, b_y: 0.0 }
    }

    /// Label velocity at `theta` in the current labels.
    pub fn gauge(&self, theta: f64) -> Gauge {
        let (lx, ly) = (self.sigma_x.ln(), self.sigma_y.ln());
        Gauge {
            slope_x: lx,
            offset_x: self.b_x - theta * self.b_x * lx,
            slope_y: ly,
            offset_y: self.b_y - theta * self.b_y * ly,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RelabelingResult {
    pub canonical: f64,
    pub best: AffineFamily,
    pub best_length: f64,
    pub table: Vec<(AffineFamily, f64)>,
}

/// Smallest length over a family of relabelings (the canonical labeling is
/// always included), from one set of chart solves.
#[allow(clippy::too_many_arguments)]
pub fn optimize_relabeling(
    path: &PathOfData,
    family: &[AffineFamily],
    tau: f64,
    w: &NormWeights,
    ws: &WaveSpeed,
    domain: &ChartDomain,
    opts: &SolveOptions,
    eps: f64,
) -> Result<RelabelingResult> {
    if family.iter().any(|f| !(f.sigma_x > 0.0 && f.sigma_y > 0.0)) {
        return Err(Error::Invalid("relabeling slopes must be positive".into()));
    }
    let tangents = path_tangents(path, tau, eps, ws, domain, opts)?;
    let canonical = length_of(&tangents, ws, w, &|_| Gauge::none()).length;
    let mut res = RelabelingResult { canonical, best: AffineFamily::identity(), best_length: canonical, table: Vec::new() };
    for f in family {
        let l = length_of(&tangents, ws, w, &|th| f.gauge(th)).length;
        res.table.push((*f, l));
        if l < res.best_length {
            res.best_length = l;
            res.best = *f;
        }
    }
    Ok(res)
}
