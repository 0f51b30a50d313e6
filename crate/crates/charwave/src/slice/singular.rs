//! Singular set of a chart: the level sets `alpha = pi` and `beta = pi`
//! (mod `2 pi`) where the map `(X, Y) -> (x, t)` degenerates, and their
//! special points.

use std::collections::HashMap;

use serde::Serialize;

use crate::chart::CharChart;

/// Which angle field a polyline belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Angle {
    Alpha,
    Beta,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PolyPoint {
    #[serde(rename = "X")]
    pub big_x: f64,
    #[serde(rename = "Y")]
    pub big_y: f64,
    pub x: f64,
    pub t: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Polyline {
    pub field: Angle,
    /// The level `pi + 2 pi k`.
    pub level: f64,
    pub points: Vec<PolyPoint>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SingularityKind {
    /// `alpha = pi`, `alpha_X = 0`; discriminants `alpha_Y`, `alpha_XX`.
    CuspAlpha,
    /// `beta = pi`, `beta_Y = 0`; discriminants `beta_X`, `beta_YY`.
    CuspBeta,
    /// `alpha = beta = pi`; discriminants `alpha_X`, `beta_Y`.
    Crossing,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SingularPoint {
    pub kind: SingularityKind,
    #[serde(rename = "X")]
    pub big_x: f64,
    #[serde(rename = "Y")]
    pub big_y: f64,
    pub x: f64,
    pub t: f64,
    /// The two discriminants that must not vanish at a generic point.
    pub discriminants: [f64; 2],
    pub near_degenerate: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SingularityReport {
    pub polylines: Vec<Polyline>,
    pub points: Vec<SingularPoint>,
    /// Smallest `t` on the singular set, if it is nonempty.
    pub first_time: Option<f64>,
    /// Threshold used for the near-degeneracy flag.
    pub threshold: f64,
}

impl SingularityReport {
    pub fn is_empty(&self) -> bool {
        self.polylines.is_empty()
    }
}

/// A grid edge: `(vertical?, i, j)`.
type EdgeKey = (bool, usize, usize);
/// A derivative evaluated at grid node `(i, j)`.
type Field<'a> = dyn Fn(usize, usize) -> f64 + 'a;

/// A crossing on a grid edge, as `(node a, node b, fraction)`.
struct Crossing {
    a: (usize, usize),
    b: (usize, usize),
    s: f64,
}

struct Segment {
    cell: (usize, usize),
    ends: [usize; 2],
}

struct LevelSet {
    crossings: Vec<Crossing>,
    segments: Vec<Segment>,
}

/// Second difference along one axis; `NaN` where a neighbour is unsolved.
fn second_diff(chart: &CharChart, f: &[f64], i: usize, j: usize, along_x: bool) -> f64 {
    let g = &chart.grid;
    let (n, k, h) = if along_x { (g.nx, i, g.hx) } else { (g.ny, j, g.hy) };
    let at = |m: usize| if along_x { f[g.idx(m, j)] } else { f[g.idx(i, m)] };
    if k == 0 || k + 1 >= n {
        return f64::NAN;
    }
    (at(k + 1) - 2.0 * at(k) + at(k - 1)) / (h * h)
}

fn marching_squares(chart: &CharChart, f: &[f64], level: f64, t_cap: f64) -> LevelSet {
    let g = chart.grid;
    let val = |i: usize, j: usize| f[g.idx(i, j)] - level;
    let mut index: HashMap<EdgeKey, usize> = HashMap::new();
    let mut crossings = Vec::new();
    let mut segments = Vec::new();
    let mut edge = |key: EdgeKey, crossings: &mut Vec<Crossing>| -> Option<usize> {
        let (vert, i, j) = key;
        let (a, b) = if vert { ((i, j), (i, j + 1)) } else { ((i, j), (i + 1, j)) };
        let (ga, gb) = (val(a.0, a.1), val(b.0, b.1));
        if (ga >= 0.0) == (gb >= 0.0) {
            return None;
        }
        Some(*index.entry(key).or_insert_with(|| {
            crossings.push(Crossing { a, b, s: ga / (ga - gb) });
            crossings.len() - 1
        }))
    };
    for i in 0..g.nx - 1 {
        for j in 0..g.ny - 1 {
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let ts = corners.map(|(a, b)| chart.t[g.idx(a, b)]);
            if ts.iter().any(|t| t.is_nan()) || ts.iter().cloned().fold(f64::INFINITY, f64::min) > t_cap {
                continue;
            }
            // bottom, right, top, left
            let keys = [(false, i, j), (true, i + 1, j), (false, i, j + 1), (true, i, j)];
            let hits: Vec<(usize, usize)> =
                keys.iter().enumerate().filter_map(|(k, &key)| edge(key, &mut crossings).map(|c| (k, c))).collect();
            match hits.len() {
                2 => segments.push(Segment { cell: (i, j), ends: [hits[0].1, hits[1].1] }),
                4 => {
                    let centre: f64 = corners.iter().map(|&(a, b)| val(a, b)).sum::<f64>() / 4.0;
                    let e: Vec<usize> = hits.iter().map(|h| h.1).collect();
                    if (centre >= 0.0) == (val(i, j) >= 0.0) {
                        // lower-left and upper-right joined: cut off the other two corners
                        segments.push(Segment { cell: (i, j), ends: [e[0], e[1]] });
                        segments.push(Segment { cell: (i, j), ends: [e[2], e[3]] });
                    } else {
                        segments.push(Segment { cell: (i, j), ends: [e[0], e[3]] });
                        segments.push(Segment { cell: (i, j), ends: [e[1], e[2]] });
                    }
                }
                _ => {}
            }
        }
    }
    LevelSet { crossings, segments }
}

/// Chain segments into polylines (open chains first, then loops).
fn chain(set: &LevelSet) -> Vec<Vec<usize>> {
    let n = set.crossings.len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for s in &set.segments {
        adj[s.ends[0]].push(s.ends[1]);
        adj[s.ends[1]].push(s.ends[0]);
    }
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    let starts: Vec<usize> = (0..n).filter(|&k| adj[k].len() == 1).chain(0..n).collect();
    for start in starts {
        if seen[start] || adj[start].is_empty() {
            continue;
        }
        let mut line = vec![start];
        seen[start] = true;
        let mut cur = start;
        while let Some(&next) = adj[cur].iter().find(|&&m| !seen[m]) {
            seen[next] = true;
            line.push(next);
            cur = next;
        }
        if line.len() > 2 && adj[cur].contains(&start) {
            line.push(start);
        }
        out.push(line);
    }
    out
}

fn lerp_field(chart: &CharChart, c: &Crossing, f: &dyn Fn(usize, usize) -> f64) -> f64 {
    let _ = chart;
    (1.0 - c.s) * f(c.a.0, c.a.1) + c.s * f(c.b.0, c.b.1)
}

fn position(chart: &CharChart, c: &Crossing) -> PolyPoint {
    let g = chart.grid;
    let xs = |i: usize, _j: usize| g.x_at(i);
    let ys = |_i: usize, j: usize| g.y_at(j);
    let xf = |i: usize, j: usize| chart.x[g.idx(i, j)];
    let tf = |i: usize, j: usize| chart.t[g.idx(i, j)];
    PolyPoint {
        big_x: lerp_field(chart, c, &xs),
        big_y: lerp_field(chart, c, &ys),
        x: lerp_field(chart, c, &xf),
        t: lerp_field(chart, c, &tf),
    }
}

fn seg_intersection(p0: (f64, f64), p1: (f64, f64), q0: (f64, f64), q1: (f64, f64)) -> Option<(f64, f64)> {
    let r = (p1.0 - p0.0, p1.1 - p0.1);
    let s = (q1.0 - q0.0, q1.1 - q0.1);
    let den = r.0 * s.1 - r.1 * s.0;
    if den == 0.0 {
        return None;
    }
    let d = (q0.0 - p0.0, q0.1 - p0.1);
    let a = (d.0 * s.1 - d.1 * s.0) / den;
    let b = (d.0 * r.1 - d.1 * r.0) / den;
    ((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b)).then_some((a, b))
}

/// Level sets of `alpha, beta = pi (mod 2 pi)` on cells with `t <= t_cap`,
/// and their special points.  `threshold` defaults to `10 h`.
pub fn detect_singularities(chart: &CharChart, t_cap: Option<f64>, threshold: Option<f64>) -> SingularityReport {
    use std::f64::consts::PI;
    let g = chart.grid;
    let h = g.h();
    let thr = threshold.unwrap_or(10.0 * h);
    let t_cap = t_cap.unwrap_or(f64::INFINITY);
    let mut report = SingularityReport { threshold: thr, ..Default::default() };

    // per-field derivative samplers at nodes
    let d_a_x = |i: usize, j: usize| chart.d_dx(&chart.alpha, i, j);
    let d_a_y = |i: usize, j: usize| chart.d_dy(&chart.alpha, i, j);
    let d_b_x = |i: usize, j: usize| chart.d_dx(&chart.beta, i, j);
    let d_b_y = |i: usize, j: usize| chart.d_dy(&chart.beta, i, j);
    let d_a_xx = |i: usize, j: usize| second_diff(chart, &chart.alpha, i, j, true);
    let d_b_yy = |i: usize, j: usize| second_diff(chart, &chart.beta, i, j, false);

    // (field, level) -> level set, with cell index for crossings
    let mut sets: Vec<(Angle, f64, LevelSet)> = Vec::new();
    for (angle, f) in [(Angle::Alpha, &chart.alpha), (Angle::Beta, &chart.beta)] {
        let (lo, hi) = f
            .iter()
            .filter(|v| !v.is_nan())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
        if !lo.is_finite() {
            continue;
        }
        let k0 = ((lo - PI) / (2.0 * PI)).ceil() as i64;
        let k1 = ((hi - PI) / (2.0 * PI)).floor() as i64;
        for k in k0..=k1 {
            let level = PI + 2.0 * PI * k as f64;
            let set = marching_squares(chart, f, level, t_cap);
            if !set.segments.is_empty() {
                sets.push((angle, level, set));
            }
        }
    }

    for (angle, level, set) in &sets {
        for line in chain(set) {
            let pts: Vec<PolyPoint> = line.iter().map(|&k| position(chart, &set.crossings[k])).collect();
            // cusp points: sign change of the along-family derivative
            let (d_along, disc): (&Field, [&Field; 2]) = match angle {
                Angle::Alpha => (&d_a_x, [&d_a_y, &d_a_xx]),
                Angle::Beta => (&d_b_y, [&d_b_x, &d_b_yy]),
            };
            let along: Vec<f64> = line.iter().map(|&k| lerp_field(chart, &set.crossings[k], d_along)).collect();
            for w in 0..line.len().saturating_sub(1) {
                let (s0, s1) = (along[w], along[w + 1]);
                if s0.is_nan() || s1.is_nan() || (s0 > 0.0) == (s1 > 0.0) || s0 == s1 {
                    continue;
                }
                let f = s0 / (s0 - s1);
                let mix = |a: f64, b: f64| (1.0 - f) * a + f * b;
                let (c0, c1) = (&set.crossings[line[w]], &set.crossings[line[w + 1]]);
                let d = [
                    mix(lerp_field(chart, c0, disc[0]), lerp_field(chart, c1, disc[0])),
                    mix(lerp_field(chart, c0, disc[1]), lerp_field(chart, c1, disc[1])),
                ];
                let (p0, p1) = (&pts[w], &pts[w + 1]);
                report.points.push(SingularPoint {
                    kind: if *angle == Angle::Alpha { SingularityKind::CuspAlpha } else { SingularityKind::CuspBeta },
                    big_x: mix(p0.big_x, p1.big_x),
                    big_y: mix(p0.big_y, p1.big_y),
                    x: mix(p0.x, p1.x),
                    t: mix(p0.t, p1.t),
                    discriminants: d,
                    near_degenerate: d.iter().any(|v| !(v.abs() >= thr)),
                });
            }
            for p in &pts {
                report.first_time = Some(report.first_time.map_or(p.t, |t: f64| t.min(p.t)));
            }
            report.polylines.push(Polyline { field: *angle, level: *level, points: pts });
        }
    }

    // crossings of alpha- and beta-sets share a cell
    let mut by_cell: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
    for (s, (angle, _, set)) in sets.iter().enumerate() {
        if *angle == Angle::Beta {
            for (k, seg) in set.segments.iter().enumerate() {
                by_cell.entry(seg.cell).or_default().push((s, k));
            }
        }
    }
    for (angle, _, set) in &sets {
        if *angle != Angle::Alpha {
            continue;
        }
        for seg in &set.segments {
            let Some(others) = by_cell.get(&seg.cell) else { continue };
            let pa = seg.ends.map(|k| position(chart, &set.crossings[k]));
            for &(s, k) in others {
                let bset = &sets[s].2;
                let bseg = &bset.segments[k];
                let pb = bseg.ends.map(|e| position(chart, &bset.crossings[e]));
                let Some((fa, _)) = seg_intersection(
                    (pa[0].big_x, pa[0].big_y),
                    (pa[1].big_x, pa[1].big_y),
                    (pb[0].big_x, pb[0].big_y),
                    (pb[1].big_x, pb[1].big_y),
                ) else {
                    continue;
                };
                let mix = |a: f64, b: f64| (1.0 - fa) * a + fa * b;
                let ca = &set.crossings[seg.ends[0]];
                let cb = &set.crossings[seg.ends[1]];
                let cb0 = &bset.crossings[bseg.ends[0]];
                let cb1 = &bset.crossings[bseg.ends[1]];
                let d = [
                    mix(lerp_field(chart, ca, &d_a_x), lerp_field(chart, cb, &d_a_x)),
                    0.5 * (lerp_field(chart, cb0, &d_b_y) + lerp_field(chart, cb1, &d_b_y)),
                ];
                report.points.push(SingularPoint {
                    kind: SingularityKind::Crossing,
                    big_x: mix(pa[0].big_x, pa[1].big_x),
                    big_y: mix(pa[0].big_y, pa[1].big_y),
                    x: mix(pa[0].x, pa[1].x),
                    t: mix(pa[0].t, pa[1].t),
                    discriminants: d,
                    near_degenerate: d.iter().any(|v| !(v.abs() >= thr)),
                });
            }
        }
    }
    report
}
