//! Comparison of path lengths with familiar distances, and the growth
//! experiments: Grönwall rate fits along smooth solutions and the Lipschitz
//! table for paths that straddle singularity formation.
//!
//! Every "there is a constant" statement is turned into a regression fit:
//! constants are fitted once over a declared suite, rounded up to three
//! significant figures and frozen; re-runs must not violate them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chart::{Bump, ChartDomain, DatumSpec, InitialDatum, SolveOptions};
use crate::metric::{
    interaction_rate, path_tangents, tangent_by_theta, CurveTangent, Gauge, NormWeights, PathOfData, PathSpec,
};
use crate::quad::{cumtrapz, trapz, trapz_uniform};
use crate::slice::{detect_singularities, extract_level_curve, reconstruct_slice, PhysicalSlice};
use crate::wavespeed::WaveSpeed;
use crate::{Error, Result};

/// Round `v >= 0` up to three significant figures.
pub fn round_up_3sf(v: f64) -> f64 {
    if !(v > 0.0) || !v.is_finite() {
        return v.max(0.0);
    }
    let e = v.log10().floor() - 2.0;
    let scale = 10f64.powf(e);
    let r = (v / scale).ceil() * scale;
    // guard against the representation of `r` falling just below `v`
    if r < v {
        r + scale
    } else {
        r
    }
}

/// The interpolated path between two data: `Psi(u0)` and `u1` are linear in `theta`.
/// Its energy cap is the larger endpoint energy (convexity of the energy in
/// `(Psi(u0)_x, u1)` keeps every sample below it).
pub fn interpolated_path(a: &DatumSpec, b: &DatumSpec, ws: &WaveSpeed, m: usize, domain: &ChartDomain) -> PathOfData {
    let ea = domain.sample(a, ws).energy(ws);
    let eb = domain.sample(b, ws).energy(ws);
    let spec = PathSpec::Interpolated { start: a.clone(), end: b.clone() };
    PathOfData::uniform(spec, m, ea.max(eb) * (1.0 + 1e-10))
}

/// The four norms of the difference of two data.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SobolevRhs {
    pub h1_u0: f64,
    pub w11_u0: f64,
    pub l2_u1: f64,
    pub l1_u1: f64,
}

impl SobolevRhs {
    pub fn total(&self) -> f64 {
        self.h1_u0 + self.w11_u0 + self.l2_u1 + self.l1_u1
    }
}

fn check_lattice(a: &InitialDatum, b: &InitialDatum) -> Result<()> {
    if a.same_lattice(b) {
        Ok(())
    } else {
        Err(Error::Invalid("data must share a lattice".into()))
    }
}

pub fn sobolev_rhs(a: &InitialDatum, b: &InitialDatum) -> Result<SobolevRhs> {
    check_lattice(a, b)?;
    let d = |f: &dyn Fn(usize) -> f64| -> Vec<f64> { (0..a.len()).map(f).collect() };
    let du = d(&|i| b.u0[i] - a.u0[i]);
    let dux = d(&|i| b.u0x[i] - a.u0x[i]);
    let dv = d(&|i| b.u1[i] - a.u1[i]);
    let int = |f: &dyn Fn(usize) -> f64| trapz_uniform(a.h, &d(f));
    Ok(SobolevRhs {
        h1_u0: int(&|i| du[i] * du[i] + dux[i] * dux[i]).sqrt(),
        w11_u0: int(&|i| du[i].abs() + dux[i].abs()),
        l2_u1: int(&|i| dv[i] * dv[i]).sqrt(),
        l1_u1: int(&|i| dv[i].abs()),
    })
}

/// `||A.u0 - B.u0||_{L^1}`.
pub fn l1_distance(a: &InitialDatum, b: &InitialDatum) -> Result<f64> {
    check_lattice(a, b)?;
    let d: Vec<f64> = a.u0.iter().zip(&b.u0).map(|(x, y)| (x - y).abs()).collect();
    Ok(trapz_uniform(a.h, &d))
}

fn energy_density(d: &InitialDatum, ws: &WaveSpeed) -> Vec<f64> {
    (0..d.len())
        .map(|i| {
            let cu = ws.c(d.u0[i]) * d.u0x[i];
            d.u1[i] * d.u1[i] + cu * cu
        })
        .collect()
}

/// Lower bound for `sup |int f dmu - int f dmu~|` over `sup|f| + sup|f'| <= 1`,
/// where the measures have densities `u1^2 + c^2(u0) u0_x^2`.
///
/// With `F(x) = (mu - mu~)((-inf, x])` and `Delta = F(+inf)`, the candidates
/// are `f = b +- a G` with `G(x) = int_x^inf sign F`, slope `a in [0, 1]` and
/// the level `b` as large as the constraint allows.  These `f` are Lipschitz;
/// each is a limit of `C^1` functions with the same bounds, so every value
/// returned is attained in the limit and the maximum is a certified lower
/// bound of the supremum.
pub fn wasserstein_dual(a: &InitialDatum, b: &InitialDatum, ws: &WaveSpeed) -> Result<f64> {
    check_lattice(a, b)?;
    let (da, db) = (energy_density(a, ws), energy_density(b, ws));
    let nu: Vec<f64> = da.iter().zip(&db).map(|(x, y)| x - y).collect();
    let xs = a.xs();
    let big_f = cumtrapz(&xs, &nu);
    let n = xs.len();
    // G on nodes: G(x_i) = int_{x_i}^{x_end} sign(F), with F at cell midpoints
    let mut g = vec![0.0; n];
    for i in (0..n - 1).rev() {
        let mid = 0.5 * (big_f[i] + big_f[i + 1]);
        g[i] = g[i + 1] + mid.signum() * if mid == 0.0 { 0.0 } else { a.h };
    }
    let (g_lo, g_hi) = g.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(*v), h.max(*v)));
    let mut best = 0.0f64;
    for k in 0..=200 {
        let slope = k as f64 / 200.0;
        let room = 1.0 - slope;
        for sign in [1.0, -1.0] {
            // f = b + sign * slope * G must satisfy |f| <= room
            let (lo, hi) = if sign > 0.0 { (slope * g_lo, slope * g_hi) } else { (-slope * g_hi, -slope * g_lo) };
            let (b_min, b_max) = (-room - lo, room - hi);
            if b_min > b_max {
                continue;
            }
            for level in [b_min, b_max, 0.5 * (b_min + b_max)] {
                let f: Vec<f64> = (0..n).map(|i| (level + sign * slope * g[i]) * nu[i]).collect();
                best = best.max(trapz(&xs, &f).abs());
            }
        }
    }
    Ok(best)
}

/// `(L^1 distance of u0, Wasserstein-dual value)`.
pub fn transport_lower_bounds(a: &InitialDatum, b: &InitialDatum, ws: &WaveSpeed) -> Result<(f64, f64)> {
    Ok((l1_distance(a, b)?, wasserstein_dual(a, b, ws)?))
}

/// Numerical parameters of a path-length computation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LengthParams {
    pub h: f64,
    /// Number of `theta` intervals.
    pub m: usize,
    pub eps: f64,
    pub delta: f64,
    pub margin: f64,
}

impl Default for LengthParams {
    fn default() -> Self {
        LengthParams { h: 1.0 / 128.0, m: 8, eps: 1e-4, delta: 0.1, margin: 1.2 }
    }
}

/// Upper and lower bound quantities for one pair of data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    /// Length of the interpolated path (an upper bound of the distance).
    pub length: f64,
    pub sobolev: SobolevRhs,
    pub l1: f64,
    pub wasserstein: f64,
    /// `length / sobolev`.
    pub upper_ratio: f64,
    /// `max(l1, wasserstein) / length`.
    pub lower_ratio: f64,
}

impl BoundReport {
    pub fn violates(&self, c: &BoundConstants) -> (bool, bool) {
        (self.length > c.c_prime * self.sobolev.total(), self.l1.max(self.wasserstein) > c.delta0 * self.length)
    }
}

pub fn bound_report(a: &DatumSpec, b: &DatumSpec, ws: &WaveSpeed, lp: &LengthParams) -> Result<BoundReport> {
    let sa = a.support();
    let sb = b.support();
    let support = match (sa, sb) {
        (Some(x), Some(y)) => (x.0.min(y.0), x.1.max(y.1)),
        (Some(x), None) | (None, Some(x)) => x,
        (None, None) => (-1.0, 1.0),
    };
    let domain = ChartDomain::covering(support, 0.0, 0.0, ws, lp.h, lp.margin)?;
    let (da, db) = (domain.sample(a, ws), domain.sample(b, ws));
    let path = interpolated_path(a, b, ws, lp.m, &domain);
    let tangents = path_tangents(&path, 0.0, lp.eps, ws, &domain, &SolveOptions::default())?;
    let length = crate::metric::length_of(&tangents, ws, &NormWeights::new(lp.delta), &|_| Gauge::none()).length;
    let sobolev = sobolev_rhs(&da, &db)?;
    let (l1, wasserstein) = transport_lower_bounds(&da, &db, ws)?;
    let ratio = |a: f64, b: f64| if b > 0.0 { a / b } else { 0.0 };
    Ok(BoundReport {
        length,
        sobolev,
        l1,
        wasserstein,
        upper_ratio: ratio(length, sobolev.total()),
        lower_ratio: ratio(l1.max(wasserstein), length),
    })
}

/// Fitted `C'` (upper chain) and `delta_0` (lower chain).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub c_prime: f64,
    pub delta0: f64,
}

pub fn fit_bound_constants(reports: &[BoundReport]) -> BoundConstants {
    let max = |f: &dyn Fn(&BoundReport) -> f64| reports.iter().map(f).fold(0.0, f64::max);
    BoundConstants { c_prime: round_up_3sf(max(&|r| r.upper_ratio)), delta0: round_up_3sf(max(&|r| r.lower_ratio)) }
}

/// `(upper violations, lower violations)`.
pub fn count_bound_violations(reports: &[BoundReport], c: &BoundConstants) -> (usize, usize) {
    reports.iter().map(|r| r.violates(c)).fold((0, 0), |(u, l), (a, b)| (u + a as usize, l + b as usize))
}

fn random_bump(rng: &mut ChaCha8Rng, amp: f64) -> Bump {
    Bump::new(rng.gen_range(-0.3..0.3), rng.gen_range(0.8..1.2), rng.gen_range(-amp..amp))
}

fn random_datum(rng: &mut ChaCha8Rng, amp: f64) -> DatumSpec {
    DatumSpec { u0: vec![random_bump(rng, amp)], u1: vec![random_bump(rng, amp)], transport: rng.gen_range(-0.5..0.5) }
}

/// `n` random pairs of smooth data with amplitudes below `amp`.
pub fn random_pair_suite(seed: u64, n: usize, amp: f64) -> Vec<(DatumSpec, DatumSpec)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| (random_datum(&mut rng, amp), random_datum(&mut rng, amp))).collect()
}

/// `n` random smooth paths: a datum and a small change of its parameters.
pub fn random_path_suite(seed: u64, n: usize, amp: f64) -> Vec<PathSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let start = random_datum(&mut rng, amp);
            let mut end = start.clone();
            for b in end.u0.iter_mut().chain(end.u1.iter_mut()) {
                b.center += rng.gen_range(-0.1..0.1);
                b.amplitude += rng.gen_range(-0.1..0.1) * amp;
            }
            end.transport += rng.gen_range(-0.2..0.2);
            PathSpec::Blend { start, end }
        })
        .collect()
}

/// Norm and interaction rate along `t = tau` for every `tau` in `taus`, from
/// one set of chart solves at `theta`.
fn norms_along(
    path: &PathOfData,
    theta: f64,
    taus: &[f64],
    ws: &WaveSpeed,
    domain: &ChartDomain,
    eps: f64,
    nw: &NormWeights,
) -> Result<Vec<(f64, f64)>> {
    let t_end = taus.iter().cloned().fold(0.0, f64::max);
    let opts = SolveOptions { t_stop: Some(t_end + 2.0 * domain.h), ..Default::default() };
    let (chart, tf) = tangent_by_theta(path, theta, eps, ws, domain, &opts)?;
    taus.iter()
        .map(|&tau| {
            let curve = extract_level_curve(&chart, tau)?;
            let ct = CurveTangent::on_curve(&chart, &tf, &curve)?;
            Ok((ct.norm(ws, &Gauge::none(), nw).norm, interaction_rate(ws, &ct.nodes())))
        })
        .collect::<Result<_>>()
        .map_err(|e| Error::at_theta(theta, e))
}

/// One interval `[tau, tau_next]` of a Grönwall check: the secant slope of
/// `log ||tangent||`, the mean interaction rate and the quadrature tolerance.
/// Secant slopes are the integral form of `d/dtau log N <= C + a`, so a bound
/// on them gives the envelope `exp(C tau + int a)` exactly at the grid times.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GronwallRow {
    pub tau: f64,
    pub tau_next: f64,
    pub norm: f64,
    pub dlog: f64,
    pub rate: f64,
    /// Three times the estimated error of `dlog`.
    pub tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GronwallCase {
    pub rows: Vec<GronwallRow>,
}

/// Parameters of a Grönwall check: tangent at `theta`, uniform `tau` grid
/// with `steps` intervals on `[0, t_end]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GronwallParams {
    pub theta: f64,
    pub t_end: f64,
    pub steps: usize,
    pub h: f64,
    pub eps: f64,
    pub delta: f64,
    pub margin: f64,
}

impl Default for GronwallParams {
    fn default() -> Self {
        GronwallParams { theta: 0.5, t_end: 0.8, steps: 16, h: 1.0 / 128.0, eps: 1e-4, delta: 0.1, margin: 1.2 }
    }
}

/// Secant slopes of `log N` and mean rates on consecutive intervals of `taus`.
fn secants(taus: &[f64], v: &[(f64, f64)]) -> Vec<(f64, f64)> {
    (0..taus.len() - 1)
        .map(|k| {
            let dt = taus[k + 1] - taus[k];
            ((v[k + 1].0.ln() - v[k].0.ln()) / dt, 0.5 * (v[k].1 + v[k + 1].1))
        })
        .collect()
}

/// Measure the growth of `log ||tangent||` along a smooth solution.  The
/// error of each slope is estimated by Richardson from the chart at `2h`
/// (the scheme is second order): `|D_h - D_2h| / 3`.
pub fn gronwall_case(path: &PathOfData, ws: &WaveSpeed, gp: &GronwallParams) -> Result<GronwallCase> {
    let support = path.spec.support();
    let nw = NormWeights::new(gp.delta);
    let fine = ChartDomain::covering(support, gp.t_end, path.energy_cap, ws, gp.h, gp.margin)?;
    let coarse = ChartDomain { xa: fine.xa, h: 2.0 * fine.h, n: fine.n / 2 };
    let dt = gp.t_end / gp.steps as f64;
    let taus: Vec<f64> = (0..=gp.steps).map(|k| k as f64 * dt).collect();
    let nf = norms_along(path, gp.theta, &taus, ws, &fine, gp.eps, &nw)?;
    let nc = norms_along(path, gp.theta, &taus, ws, &coarse, gp.eps, &nw)?;
    let (sf, sc) = (secants(&taus, &nf), secants(&taus, &nc));
    let rows = (0..gp.steps)
        .map(|k| GronwallRow {
            tau: taus[k],
            tau_next: taus[k + 1],
            norm: nf[k].0,
            dlog: sf[k].0,
            rate: sf[k].1,
            tol: (sf[k].0 - sc[k].0).abs(),
        })
        .collect();
    Ok(GronwallCase { rows })
}

/// Smallest `C` (rounded up to three significant figures) with
/// `dlog <= C + rate` on every row of every case.
pub fn fit_gronwall(cases: &[GronwallCase]) -> f64 {
    let m = cases.iter().flat_map(|c| &c.rows).map(|r| r.dlog - r.rate).fold(0.0, f64::max);
    round_up_3sf(m)
}

/// Rows with `dlog > C + rate + tol`.
pub fn gronwall_violations(cases: &[GronwallCase], c: f64) -> usize {
    cases.iter().flat_map(|c| &c.rows).filter(|r| r.dlog > c + r.rate + r.tol).count()
}

/// Scale every `u0` amplitude of a datum.
fn scaled(d: &DatumSpec, k: f64) -> DatumSpec {
    let mut out = d.clone();
    for b in &mut out.u0 {
        b.amplitude *= k;
    }
    out
}

/// A family of short paths `u0 amplitudes x (1 - delta) -> x (1 + delta)` around
/// a center datum, for a decreasing list of `delta`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StraddleFamily {
    pub center: DatumSpec,
    pub deltas: Vec<f64>,
}

impl StraddleFamily {
    pub fn path(&self, delta: f64, m: usize, energy_cap: f64) -> PathOfData {
        let spec = PathSpec::Blend { start: scaled(&self.center, 1.0 - delta), end: scaled(&self.center, 1.0 + delta) };
        PathOfData::uniform(spec, m, energy_cap)
    }
}

/// One `(delta, tau)` row of the Lipschitz table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzRow {
    pub delta: f64,
    pub tau: f64,
    pub length: f64,
    /// `length(tau) / length(0)`; `None` when the path is degenerate.
    pub ratio: Option<f64>,
    /// `exp(C tau + int_0^tau a)`, with `a` the largest rate over the path.
    pub envelope: f64,
    /// `||u(tau) - u~(tau)||_{H^1} + ||u_t(tau) - u~_t(tau)||_{L^2}` of the endpoints.
    pub h1_distance: f64,
    pub h1_ratio: f64,
    /// `R` or `S` reached the clipping level on an endpoint slice, or the
    /// distance ratio is beyond `1/h`.
    pub exceeds_cap: bool,
    /// At or after the first singular time of the path.
    pub past_singularity: bool,
    pub violation: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzTable {
    pub c_fit: f64,
    /// `C` was fitted on the intervals ending at or before this time.
    pub fit_until: Option<f64>,
    /// Earliest singular time on the path's charts, if any.
    pub singular_time: Option<f64>,
    pub rows: Vec<LipschitzRow>,
}

impl LipschitzTable {
    pub fn violations(&self) -> usize {
        self.rows.iter().filter(|r| r.violation).count()
    }
}

/// Parameters of the Lipschitz experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzParams {
    pub taus: Vec<f64>,
    pub m: usize,
    pub h: f64,
    pub eps: f64,
    pub delta: f64,
    pub margin: f64,
    /// Relative slack on the envelope for quadrature error.
    pub slack: f64,
    /// When set, `C` is fitted from the secant slopes of every `theta`
    /// sample on the intervals ending at or before this time, instead of
    /// being supplied.
    pub fit_until: Option<f64>,
}

fn h1_l2_distance(a: &PhysicalSlice, b: &PhysicalSlice) -> f64 {
    let mut xs: Vec<f64> = a.x.iter().chain(&b.x).cloned().collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|p, q| (*p - *q).abs() <= 1e-12);
    let (ra, rb) = (a.resample(&xs), b.resample(&xs));
    let col = |c: usize| -> Vec<f64> { ra.iter().zip(&rb).map(|(p, q)| (p[c] - q[c]).powi(2)).collect() };
    let (du, dut, dux) = (col(1), col(2), col(3));
    let h1: Vec<f64> = du.iter().zip(&dux).map(|(p, q)| p + q).collect();
    trapz(&xs, &h1).sqrt() + trapz(&xs, &dut).sqrt()
}

fn datum_distance(a: &InitialDatum, b: &InitialDatum) -> f64 {
    let s = sobolev_rhs(a, b).expect("same lattice");
    s.h1_u0 + s.l2_u1
}

fn clipped(s: &PhysicalSlice) -> bool {
    s.r.iter().chain(&s.s).any(|v| v.abs() >= s.cap)
}

/// Length ratios of the straddling paths against the Grönwall envelope, and
/// the endpoint `H^1 x L^2` distance ratios.  `C` is `c_fit`, or fitted on the
/// smooth window when `lp.fit_until` is set.
pub fn lipschitz_experiment(
    family: &StraddleFamily,
    ws: &WaveSpeed,
    c_fit: f64,
    lp: &LipschitzParams,
) -> Result<LipschitzTable> {
    struct PerDelta {
        delta: f64,
        length: Vec<f64>,
        rate_int: Vec<f64>,
        dist: Vec<f64>,
        d0: f64,
        clipped: Vec<bool>,
    }
    let mut taus = lp.taus.clone();
    if taus.first() != Some(&0.0) {
        taus.insert(0, 0.0);
    }
    let t_end = taus.iter().cloned().fold(0.0, f64::max);
    let widest = family.deltas.iter().cloned().fold(0.0, f64::max);
    let support = family.path(widest, 1, f64::INFINITY).spec.support();
    let nw = NormWeights::new(lp.delta);
    let mut fit = 0.0f64;
    let mut singular_time: Option<f64> = None;
    let mut per = Vec::new();
    for &delta in &family.deltas {
        let probe = family.path(delta, lp.m, f64::INFINITY);
        let cap = {
            let dom = ChartDomain::covering(support, 0.0, 0.0, ws, lp.h, lp.margin)?;
            let e = |th: f64| probe.spec.datum(th, ws, &dom).map(|d| d.energy(ws));
            e(0.0)?.max(e(1.0)?).max(e(0.5)?) * 1.05
        };
        let path = family.path(delta, lp.m, cap);
        let domain = ChartDomain::covering(support, t_end, cap, ws, lp.h, lp.margin)?;
        let opts = SolveOptions { t_stop: Some(t_end + 2.0 * lp.h), ..Default::default() };
        // per theta: norms and rates at every tau; endpoint slices
        let mut norms = vec![vec![0.0; taus.len()]; path.thetas.len()];
        let mut rate = vec![0.0f64; taus.len()];
        let mut ends: Vec<Vec<PhysicalSlice>> = Vec::new();
        for (k, &theta) in path.thetas.iter().enumerate() {
            let (chart, tf) = tangent_by_theta(&path, theta, lp.eps, ws, &domain, &opts)?;
            if let Some(t) = detect_singularities(&chart, Some(t_end), None).first_time {
                singular_time = Some(singular_time.map_or(t, |s: f64| s.min(t)));
            }
            let mut rates = vec![0.0; taus.len()];
            let mut slices = Vec::new();
            for (l, &tau) in taus.iter().enumerate() {
                let at = |e| Error::at_theta(theta, Error::Curve { tau, reason: format!("{e}") });
                let curve = extract_level_curve(&chart, tau).map_err(at)?;
                let ct = CurveTangent::on_curve(&chart, &tf, &curve).map_err(at)?;
                norms[k][l] = ct.norm(ws, &Gauge::none(), &nw).norm;
                rates[l] = interaction_rate(ws, &ct.nodes());
                rate[l] = rate[l].max(rates[l]);
                if k == 0 || k + 1 == path.thetas.len() {
                    slices.push(reconstruct_slice(&chart, &curve).map_err(at)?);
                }
            }
            if !slices.is_empty() {
                ends.push(slices);
            }
            if let Some(until) = lp.fit_until {
                let v: Vec<(f64, f64)> = norms[k].iter().cloned().zip(rates).collect();
                for (l, (d, a)) in secants(&taus, &v).into_iter().enumerate() {
                    if taus[l + 1] <= until + 1e-12 {
                        fit = fit.max(d - a);
                    }
                }
            }
        }
        let length: Vec<f64> =
            (0..taus.len()).map(|l| trapz(&path.thetas, &norms.iter().map(|v| v[l]).collect::<Vec<_>>())).collect();
        let rate_int = cumtrapz(&taus, &rate);
        let d0 = {
            let dom = ChartDomain::covering(support, 0.0, 0.0, ws, lp.h, lp.margin)?;
            datum_distance(&path.datum(0.0, ws, &dom)?, &path.datum(1.0, ws, &dom)?)
        };
        let dist: Vec<f64> = (0..taus.len()).map(|l| h1_l2_distance(&ends[0][l], &ends[1][l])).collect();
        let clipped = (0..taus.len()).map(|l| clipped(&ends[0][l]) || clipped(&ends[1][l])).collect();
        per.push(PerDelta { delta, length, rate_int, dist, d0, clipped });
    }
    let c_fit = if lp.fit_until.is_some() { round_up_3sf(fit) } else { c_fit };
    let mut rows = Vec::new();
    for p in &per {
        for (l, &tau) in taus.iter().enumerate() {
            let ratio = (p.length[0] > 0.0).then(|| p.length[l] / p.length[0]);
            let envelope = (c_fit * tau + p.rate_int[l]).exp();
            let h1_ratio = if p.d0 > 0.0 { p.dist[l] / p.d0 } else { 0.0 };
            rows.push(LipschitzRow {
                delta: p.delta,
                tau,
                length: p.length[l],
                ratio,
                envelope,
                h1_distance: p.dist[l],
                h1_ratio,
                exceeds_cap: p.clipped[l] || h1_ratio > 1.0 / lp.h,
                past_singularity: singular_time.is_some_and(|t| tau >= t),
                violation: ratio.is_some_and(|r| r > envelope * (1.0 + lp.slack)),
            });
        }
    }
    Ok(LipschitzTable { c_fit, fit_until: lp.fit_until, singular_time, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_goes_up() {
        assert_eq!(round_up_3sf(1.234), 1.24);
        assert_eq!(round_up_3sf(0.001), 0.001);
        assert!(round_up_3sf(123456.0) >= 123456.0);
        assert_eq!(round_up_3sf(0.0), 0.0);
    }
}
