//! The six experiments.  Each returns the names of the files it wrote into
//! the output directory.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use anyhow::{anyhow, bail, Context};
use charwave::bounds::{
    bound_report, count_bound_violations, fit_bound_constants, lipschitz_experiment, random_pair_suite, BoundReport,
};
use charwave::chart::{boundary_data, monotonicity, residuals, solve_chart, CharChart, ChartDomain};
use charwave::chart::io::write_chart;
use charwave::metric::{length_of, path_slices, Gauge, MetricReport, NormWeights, PathOfData};
use charwave::slice::{detect_singularities, extract_level_curve, reconstruct_slice};
use charwave::wavespeed::WaveSpeed;
use serde::Serialize;

use crate::config::Config;

/// Configuration problems map to exit code 2, everything after to 3.
#[derive(Debug)]
pub enum Failure {
    Config(anyhow::Error),
    Solver(anyhow::Error),
}

type Outcome = Result<Vec<String>, Failure>;

fn config<T>(r: anyhow::Result<T>) -> Result<T, Failure> {
    r.map_err(Failure::Config)
}

fn solver<T, E: Into<anyhow::Error>>(r: Result<T, E>) -> Result<T, Failure> {
    r.map_err(|e| Failure::Solver(e.into()))
}

fn create(out: &Path, name: &str) -> Result<BufWriter<File>, Failure> {
    let p = out.join(name);
    solver(File::create(&p).with_context(|| format!("creating {}", p.display())).map(BufWriter::new))
}

fn write_json<T: Serialize>(out: &Path, name: &str, v: &T) -> Result<String, Failure> {
    solver(serde_json::to_writer_pretty(create(out, name)?, v))?;
    Ok(name.to_owned())
}

fn write_rows<T: Serialize>(out: &Path, name: &str, rows: impl IntoIterator<Item = T>) -> Result<String, Failure> {
    let mut w = csv::Writer::from_writer(create(out, name)?);
    for r in rows {
        solver(w.serialize(r))?;
    }
    solver(w.flush())?;
    Ok(name.to_owned())
}

fn setup(cfg: &Config) -> Result<(WaveSpeed, charwave::chart::InitialDatum, ChartDomain), Failure> {
    let ws = config(cfg.speed())?;
    let (d, domain) = config(cfg.datum(&ws))?;
    Ok((ws, d, domain))
}

fn solve_datum(cfg: &Config, t_end: f64) -> Result<(WaveSpeed, CharChart), Failure> {
    let (ws, d, _) = setup(cfg)?;
    let opts = charwave::chart::SolveOptions { t_stop: cfg.solve.t_stop.or(Some(t_end + 2.0 * d.h)), ..cfg.solve };
    let chart = solver(solve_chart(&boundary_data(&d, &ws), &ws, &opts))?;
    Ok((ws, chart))
}

#[derive(Serialize)]
struct SolveSummary {
    grid: charwave::chart::Grid,
    solved_nodes: usize,
    t_max: f64,
    max_residual: f64,
    monotonicity: charwave::chart::MonotonicityReport,
}

pub fn solve(cfg: &Config, out: &Path) -> Outcome {
    let (_, chart) = solve_datum(cfg, cfg.t_max)?;
    let g = chart.grid;
    solver(write_chart(&chart, create(out, "chart.csv")?))?;
    let summary = SolveSummary {
        grid: g,
        solved_nodes: chart.t.iter().filter(|t| !t.is_nan()).count(),
        t_max: chart.t_max(),
        max_residual: residuals(&chart).max(),
        monotonicity: monotonicity(&chart),
    };
    Ok(vec!["chart.csv".into(), write_json(out, "summary.json", &summary)?])
}

#[derive(Serialize)]
struct SliceRow {
    tau: f64,
    energy: f64,
    relative_error: f64,
    points: usize,
    file: String,
}

pub fn slice(cfg: &Config, out: &Path) -> Outcome {
    let taus = cfg.taus();
    let t_end = taus.last().copied().unwrap_or(0.0);
    let (_, chart) = solve_datum(cfg, t_end)?;
    let mut files = Vec::new();
    let mut rows = Vec::new();
    let mut e0 = None;
    for (k, &tau) in taus.iter().enumerate() {
        let curve = solver(extract_level_curve(&chart, tau))?;
        let sl = solver(reconstruct_slice(&chart, &curve))?;
        let name = format!("slice_{k:03}.csv");
        solver(sl.write_csv(None, create(out, &name)?))?;
        let e_ref = *e0.get_or_insert(sl.energy);
        rows.push(SliceRow {
            tau,
            energy: sl.energy,
            relative_error: if e_ref > 0.0 { (sl.energy - e_ref).abs() / e_ref } else { 0.0 },
            points: curve.len(),
            file: name.clone(),
        });
        files.push(name);
    }
    files.push(write_rows(out, "energy.csv", &rows)?);
    Ok(files)
}

#[derive(Serialize)]
struct PolyRow {
    polyline: usize,
    field: charwave::slice::Angle,
    #[serde(rename = "X")]
    big_x: f64,
    #[serde(rename = "Y")]
    big_y: f64,
    x: f64,
    t: f64,
}

pub fn singularities(cfg: &Config, out: &Path) -> Outcome {
    let (_, chart) = solve_datum(cfg, cfg.t_max)?;
    let report = detect_singularities(&chart, Some(cfg.t_max), cfg.singular_threshold);
    let rows = report.polylines.iter().enumerate().flat_map(|(k, pl)| {
        pl.points.iter().map(move |p| PolyRow { polyline: k, field: pl.field, big_x: p.big_x, big_y: p.big_y, x: p.x, t: p.t })
    });
    Ok(vec![write_rows(out, "singular_set.csv", rows)?, write_json(out, "singularities.json", &report)?])
}

#[derive(Serialize)]
struct MetricSummary {
    energy_cap: f64,
    reports: Vec<MetricReport>,
    /// `(family, length)` at the last slice time, when relabelings were given.
    relabelings: Vec<(charwave::metric::AffineFamily, f64)>,
}

pub fn metric(cfg: &Config, out: &Path) -> Outcome {
    let ws = config(cfg.speed())?;
    let spec = config(cfg.path.clone().ok_or_else(|| anyhow!("config needs `path`")))?;
    let taus = cfg.taus();
    let t_end = taus.last().copied().unwrap_or(0.0);
    let support = spec.support();
    let cap = match cfg.energy_cap {
        Some(c) => c,
        None => {
            let probe = config(ChartDomain::covering(support, 0.0, 0.0, &ws, cfg.h, cfg.margin).map_err(Into::into))?;
            let free = PathOfData::uniform(spec.clone(), cfg.thetas, f64::INFINITY);
            let mut e = 0.0f64;
            for &th in &free.thetas {
                e = e.max(solver(free.datum(th, &ws, &probe))?.energy(&ws));
            }
            e * (1.0 + 1e-9)
        }
    };
    let path = PathOfData::uniform(spec, cfg.thetas, cap);
    let domain = config(ChartDomain::covering(support, t_end, cap, &ws, cfg.h, cfg.margin).map_err(Into::into))?;
    let nw = NormWeights::new(cfg.delta);
    let ps = solver(path_slices(&path, &taus, cfg.eps, &ws, &domain, &cfg.solve))?;
    let mut reports = Vec::new();
    for (l, &tau) in taus.iter().enumerate() {
        let pl = length_of(&ps.tangents[l], &ws, &nw, &|_| Gauge::none());
        let th: Vec<f64> = pl.profile.iter().map(|p| p.0).collect();
        let terms = std::array::from_fn(|k| {
            charwave::quad::trapz(&th, &pl.profile.iter().map(|p| p.1.terms[k]).collect::<Vec<_>>())
        });
        let rate = ps.tangents[l]
            .iter()
            .map(|ct| charwave::metric::interaction_rate(&ws, &ct.nodes()))
            .fold(0.0, f64::max);
        reports.push(MetricReport { tau, norm: pl.length, terms, rate, energy: ps.energy[l][0] });
    }
    let relabelings = match ps.tangents.last() {
        Some(last) => cfg
            .relabelings
            .iter()
            .map(|f| {
                if !(f.sigma_x > 0.0 && f.sigma_y > 0.0) {
                    bail!("relabeling slopes must be positive");
                }
                Ok((*f, length_of(last, &ws, &nw, &|th| f.gauge(th)).length))
            })
            .collect::<anyhow::Result<_>>()
            .map_err(Failure::Config)?,
        None => Vec::new(),
    };
    let rows = write_rows(out, "metric.csv", reports.iter().map(MetricRow::from))?;
    let summary = MetricSummary { energy_cap: cap, reports, relabelings };
    Ok(vec![rows, write_json(out, "summary.json", &summary)?])
}

/// Flat CSV form of a [`MetricReport`].
#[derive(Serialize)]
struct MetricRow {
    tau: f64,
    length: f64,
    i1: f64,
    i2: f64,
    i3: f64,
    i4: f64,
    i5: f64,
    i6: f64,
    rate: f64,
    energy: f64,
}

impl From<&MetricReport> for MetricRow {
    fn from(r: &MetricReport) -> Self {
        let t = r.terms;
        MetricRow {
            tau: r.tau,
            length: r.norm,
            i1: t[0],
            i2: t[1],
            i3: t[2],
            i4: t[3],
            i5: t[4],
            i6: t[5],
            rate: r.rate,
            energy: r.energy,
        }
    }
}

#[derive(Serialize)]
struct LipschitzSummary {
    c_fit: f64,
    fit_until: Option<f64>,
    singular_time: Option<f64>,
    violations: usize,
}

pub fn lipschitz(cfg: &Config, out: &Path) -> Outcome {
    let ws = config(cfg.speed())?;
    let family = config(cfg.straddle.clone().ok_or_else(|| anyhow!("config needs `straddle`")))?;
    if family.deltas.is_empty() || family.deltas.iter().any(|d| !(*d > 0.0 && *d < 1.0)) {
        return Err(Failure::Config(anyhow!("straddle deltas must lie in (0, 1)")));
    }
    let table = solver(lipschitz_experiment(&family, &ws, cfg.c_fit, &cfg.lipschitz_params()))?;
    let rows = write_rows(out, "lipschitz.csv", &table.rows)?;
    let summary = LipschitzSummary {
        c_fit: table.c_fit,
        fit_until: table.fit_until,
        singular_time: table.singular_time,
        violations: table.violations(),
    };
    Ok(vec![rows, write_json(out, "summary.json", &summary)?])
}

#[derive(Serialize)]
struct BoundRow {
    pair: usize,
    length: f64,
    sobolev: f64,
    l1: f64,
    wasserstein: f64,
    upper_ratio: f64,
    lower_ratio: f64,
}

#[derive(Serialize)]
struct BoundSummary {
    fitted: charwave::bounds::BoundConstants,
    checked_against: charwave::bounds::BoundConstants,
    upper_violations: usize,
    lower_violations: usize,
    reports: Vec<BoundReport>,
}

pub fn bounds(cfg: &Config, out: &Path) -> Outcome {
    let ws = config(cfg.speed())?;
    let mut pairs = cfg.pairs.clone();
    if let Some(r) = cfg.random_pairs {
        pairs.extend(random_pair_suite(cfg.seed, r.n, r.amplitude));
    }
    if pairs.is_empty() {
        return Err(Failure::Config(anyhow!("config needs `pairs` or `random_pairs`")));
    }
    let lp = cfg.length_params();
    let reports: Vec<BoundReport> = solver(pairs.iter().map(|(a, b)| bound_report(a, b, &ws, &lp)).collect())?;
    let fitted = fit_bound_constants(&reports);
    let against = cfg.constants.unwrap_or(fitted);
    let (up, lo) = count_bound_violations(&reports, &against);
    let rows = reports.iter().enumerate().map(|(k, r)| BoundRow {
        pair: k,
        length: r.length,
        sobolev: r.sobolev.total(),
        l1: r.l1,
        wasserstein: r.wasserstein,
        upper_ratio: r.upper_ratio,
        lower_ratio: r.lower_ratio,
    });
    let csv = write_rows(out, "bounds.csv", rows)?;
    let summary =
        BoundSummary { fitted, checked_against: against, upper_violations: up, lower_violations: lo, reports };
    Ok(vec![csv, write_json(out, "summary.json", &summary)?])
}
